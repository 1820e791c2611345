"""Discrete one-dimensional limit energy for director fields on a curve.

The energy of a unit field ``v`` on a curve with tangent ``t`` is

    E(v) = 1/2 \\int |v' + K(v) t|^2 ds                 (exchange-perturbation)
         + 1/2 \\int |K^T(v) v|^2 - (K^T(v) v . t)^2 ds   (anisotropy)
         + 1/2 \\int M (v.n, v.b) . (v.n, v.b) ds        (magnetostatic)

The square term is discretised on segments: ``(v_{i+1} - v_i)/h`` plus ``K``
at the normalised segment average applied to the segment tangent.  The two
local terms use trapezoid weights over nodes.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels
from .cross_section import DemagMatrix, magnetostatic_operator
from .errors import GridMismatchError, NormalizationError
from .geometry import Curve
from .perturbation import DMI, PerturbationModel, anisotropy_gradient

UNIT_TOL = 1e-10
BC_KINDS = ("periodic", "free", "pinned")


@dataclass(frozen=True)
class BoundaryCondition:
    kind: str = "free"
    left: tuple | None = None
    right: tuple | None = None

    def __post_init__(self):
        if self.kind not in BC_KINDS:
            raise ValueError(f"boundary condition must be one of {BC_KINDS}")
        if self.kind == "pinned" and (self.left is None or self.right is None):
            raise ValueError("pinned boundary condition needs left and right vectors")

    @classmethod
    def pinned(cls, left, right) -> "BoundaryCondition":
        left = np.asarray(left, dtype=float)
        right = np.asarray(right, dtype=float)
        return cls("pinned", tuple(left / np.linalg.norm(left)),
                   tuple(right / np.linalg.norm(right)))


@dataclass
class DirectorField:
    """Unit vectors ``v[i]`` at the ``N + 1`` curve nodes."""

    v: np.ndarray
    bc: BoundaryCondition = field(default_factory=BoundaryCondition)

    def __post_init__(self):
        self.v = np.ascontiguousarray(self.v, dtype=float)
        if self.v.ndim != 2 or self.v.shape[1] != 3:
            raise ValueError("director field must have shape (N+1, 3)")
        err = np.max(np.abs(np.linalg.norm(self.v, axis=1) - 1.0))
        if err > UNIT_TOL:
            raise NormalizationError(f"director field is not unit length (max error {err:.3g})")
        if self.bc.kind == "periodic" and np.max(np.abs(self.v[-1] - self.v[0])) > UNIT_TOL:
            raise ValueError("periodic field must satisfy v[N] = v[0]")
        if self.bc.kind == "pinned":
            if (np.max(np.abs(self.v[0] - self.bc.left)) > UNIT_TOL
                    or np.max(np.abs(self.v[-1] - self.bc.right)) > UNIT_TOL):
                raise ValueError("pinned field endpoints differ from the boundary values")

    @classmethod
    def trusted(cls, v: np.ndarray, bc: BoundaryCondition) -> "DirectorField":
        """Wrap already-normalised vectors without re-validating them."""
        obj = cls.__new__(cls)
        obj.v = v
        obj.bc = bc
        return obj

    @classmethod
    def from_vectors(cls, v, bc: BoundaryCondition | None = None) -> "DirectorField":
        """Normalise ``v`` and impose ``bc`` on the end nodes."""
        bc = bc or BoundaryCondition()
        return cls(_normalize_bc(np.array(v, dtype=float), bc), bc)

    def copy(self) -> "DirectorField":
        return DirectorField(self.v.copy(), self.bc)

    def frame_components(self, curve: Curve) -> np.ndarray:
        """``(v.t, v.n, v.b)`` per node."""
        f = curve.frame
        return np.stack([np.sum(self.v * f.t, 1), np.sum(self.v * f.n, 1),
                         np.sum(self.v * f.b, 1)], axis=1)


def _normalize_bc(v: np.ndarray, bc: BoundaryCondition) -> np.ndarray:
    v /= np.sqrt(np.einsum("ij,ij->i", v, v))[:, None]
    if bc.kind == "periodic":
        v[-1] = v[0]
    elif bc.kind == "pinned":
        v[0], v[-1] = bc.left, bc.right
    return v


@dataclass(frozen=True)
class EnergyBreakdown:
    exchange_perturb: float
    anisotropy: float
    magnetostatic: float

    @property
    def total(self) -> float:
        return math.fsum((self.exchange_perturb, self.anisotropy, self.magnetostatic))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["total"] = self.total
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _check(field: DirectorField, curve: Curve) -> None:
    if field.v.shape[0] != len(curve.s):
        raise GridMismatchError(
            f"field has {field.v.shape[0]} nodes but the curve has {len(curve.s)}")
    # |v|^2 - 1 ~ 2 (|v| - 1) near the sphere
    err = 0.5 * np.max(np.abs(np.einsum("ij,ij->i", field.v, field.v) - 1.0))
    if err > UNIT_TOL:
        raise NormalizationError(f"non-unit field nodes (max error {err:.3g})")
    if field.bc.kind == "periodic" and not curve.closed:
        raise GridMismatchError("periodic boundary condition on an open curve")


def _demag_operator(curve: Curve, demag) -> np.ndarray:
    mat = demag.matrix if isinstance(demag, DemagMatrix) else np.asarray(demag, dtype=float)
    key = ("demag", mat.tobytes())
    ops = curve.cache
    if key not in ops:
        ops[key] = magnetostatic_operator(mat, curve.frame.n, curve.frame.b)
    return ops[key]


def _segment_term(v, curve: Curve, model: PerturbationModel, grad, backend=None) -> float:
    h = curve.h
    if isinstance(model, DMI):
        kern = _kernels.BACKENDS[backend] if backend else _kernels
        return kern.chain_dmi(v, np.ascontiguousarray(curve.t_mid), h, model.kappa, grad)
    a, b = v[:-1], v[1:]
    p = a + b
    q = np.linalg.norm(p, axis=1)
    m = p / q[:, None]
    t = curve.t_mid
    r = (b - a) / h + model.kt(m, t)
    c = model.kt_adjoint(m, t, r)
    u = (h / q)[:, None] * (c - np.sum(m * c, axis=1)[:, None] * m)
    grad[:-1] += u - r
    grad[1:] += u + r
    return 0.5 * h * float(np.sum(np.einsum("ij,ij->i", r, r)))


def _assemble(field, curve, model, demag, want_grad, backend=None):
    v = field.v
    g = np.zeros_like(v)
    e1 = _segment_term(v, curve, model, g, backend)
    w = curve.node_weights
    f = curve.frame
    e2 = 0.0
    if not model.anisotropy_free:
        K = model.K(v)
        u = np.einsum("nij,ni->nj", K, v)
        dens = np.sum(u * u, 1) - np.sum(u * f.t, 1) ** 2
        e2 = 0.5 * float(np.dot(w, dens))
        if want_grad:
            g += 0.5 * w[:, None] * anisotropy_gradient(model, v, f.t)
    e3 = 0.0
    if demag is not None:
        mg = np.einsum("nij,nj->ni", _demag_operator(curve, demag), v)
        e3 = 0.5 * float(np.dot(w, np.einsum("ij,ij->i", mg, v)))
        if want_grad:
            g += w[:, None] * mg
    if want_grad:
        if field.bc.kind == "periodic":
            g[0] += g[-1]
            g[-1] = g[0]
        g -= np.sum(g * v, axis=1, keepdims=True) * v
        if field.bc.kind == "pinned":
            g[0] = 0.0
            g[-1] = 0.0
    return EnergyBreakdown(e1, e2, e3), g


def energy(field: DirectorField, curve: Curve, model: PerturbationModel,
           demag: DemagMatrix | None = None, *, backend: str | None = None) -> EnergyBreakdown:
    """Evaluate the discrete limit energy; ``demag=None`` drops the magnetostatic term."""
    _check(field, curve)
    return _assemble(field, curve, model, demag, False, backend)[0]


def gradient(field: DirectorField, curve: Curve, model: PerturbationModel,
             demag: DemagMatrix | None = None, *, backend: str | None = None) -> np.ndarray:
    """Tangent-projected gradient ``dE/dv_i``; zero at pinned endpoints.

    For periodic fields the rows ``0`` and ``N`` hold the same (combined) value.
    """
    _check(field, curve)
    return _assemble(field, curve, model, demag, True, backend)[1]


def energy_and_gradient(field, curve, model, demag=None, *, backend=None):
    _check(field, curve)
    return _assemble(field, curve, model, demag, True, backend)


def directional_derivative(field, curve, model, demag, direction) -> float:
    """``sum_i g_i . d_i`` over unique nodes."""
    g = gradient(field, curve, model, demag)
    d = np.asarray(direction)
    if field.bc.kind == "periodic":
        return float(np.sum(g[:-1] * d[:-1]))
    return float(np.sum(g * d))


def retract(field: DirectorField, direction, step: float) -> DirectorField:
    """``normalize(v + step * d)`` with the boundary condition re-imposed."""
    return DirectorField.trusted(_normalize_bc(field.v + step * np.asarray(direction), field.bc),
                                 field.bc)


@dataclass(frozen=True)
class NormalizedEnergy:
    """Limit energy in the complete-square form and with ``1/2 \\int |K(v)|^2`` removed.

    The second value is the exchange-plus-interaction convention used when
    the constant (DMI) or field-dependent (Ado) ``|K|^2`` term is dropped.
    """

    complete_square: float
    shifted: float
    removed: float

    def to_dict(self) -> dict:
        return asdict(self)


def energy_normalization(raw: EnergyBreakdown, field: DirectorField, curve: Curve,
                         model: PerturbationModel) -> NormalizedEnergy:
    removed = math.fsum(curve.node_weights * model.half_norm_sq(field.v))
    return NormalizedEnergy(raw.total, raw.total - removed, removed)


# --- field I/O ------------------------------------------------------------------


def field_to_csv(field: DirectorField, curve: Curve, path) -> None:
    with open(path, "w") as fh:
        fh.write("s,v1,v2,v3\n")
        for s, v in zip(curve.s, field.v):
            fh.write(f"{s:.17g},{v[0]:.17g},{v[1]:.17g},{v[2]:.17g}\n")


def field_from_csv(path, bc: BoundaryCondition | None = None, curve: Curve | None = None):
    data = np.genfromtxt(path, delimiter=",", names=True)
    s = np.asarray(data["s"], dtype=float)
    v = np.stack([data["v1"], data["v2"], data["v3"]], axis=1)
    if curve is not None and (len(s) != len(curve.s)
                              or np.max(np.abs(s - curve.s)) > 1e-9 * max(1.0, curve.length)):
        raise GridMismatchError(f"{path}: arclength column does not match the curve grid")
    bc = bc or BoundaryCondition()
    if np.max(np.abs(np.linalg.norm(v, axis=1) - 1.0)) <= UNIT_TOL:
        # already on the sphere: keep the stored digits so write/read round-trips exactly
        return DirectorField(v, bc)
    return DirectorField.from_vectors(v, bc)
