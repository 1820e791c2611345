"""Thin-tube energy on the straightened cylinder ``I x Q`` and recovery fields.

With the tube chart ``phi(s, z) = gamma(s) + eps (z1 n + z2 b)`` and
``alpha = 1 - eps * curvature * z1``, the pulled-back energy of a field
``w(s, z)`` is

    E_eps(w) = 1/(2|Q|) \\int_{I x Q} |d_s w + tau (z ^ grad w) + alpha K(w) t|^2 / alpha
                                   + alpha |d_1 w / eps + K(w) n|^2
                                   + alpha |d_2 w / eps + K(w) b|^2  dz ds

where ``z ^ grad = z2 d_1 - z1 d_2``.  This follows from
``D phi = F G`` with ``F = (t|n|b)`` and ``det D phi = eps^2 alpha``.

``form="printed"`` replaces the two cross-sectional terms by
``|d_k w / eps + alpha K(w) e_k|^2 / alpha``; both agree to first order in
``eps`` and coincide when ``alpha = 1``.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cross_section import CrossSection
from .errors import GridMismatchError, NormalizationError, ValidityError
from .geometry import Curve, TubeChart
from .perturbation import PerturbationModel
from .reduced_energy import DirectorField, energy

log = logging.getLogger(__name__)

UNIT_TOL = 1e-10


@dataclass(frozen=True)
class CrossGrid:
    """Quadrature nodes ``z`` (M, 2) with weights summing to ``|Q|``.

    ``kind="disk"`` is a polar grid (``n_r`` midpoint radii times ``n_theta``
    angles, angle-major within each radius); ``kind="square"`` a tensor
    midpoint grid.
    """

    kind: str
    z: np.ndarray
    weights: np.ndarray
    shape: tuple
    extent: float
    area: float

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def rho(self) -> float:
        """``max |z|`` over Q (not over the nodes)."""
        return self.extent if self.kind == "disk" else self.extent * math.sqrt(2.0)

    def derivatives(self, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``(d_1 w, d_2 w)`` for nodal values of shape ``(..., M, 3)``."""
        lead = w.shape[:-2]
        if self.kind == "disk":
            nr, nt = self.shape
            g = w.reshape(lead + (nr, nt, 3))
            r = np.hypot(self.z[::nt, 0], self.z[::nt, 1])
            th = 2.0 * np.pi * np.arange(nt) / nt
            dr = np.gradient(g, r, axis=-3, edge_order=2)
            k = np.fft.fftfreq(nt, 1.0 / nt)
            if nt % 2 == 0:
                k[nt // 2] = 0.0
            dth = np.fft.ifft(1j * k[:, None] * np.fft.fft(g, axis=-2), axis=-2).real
            c = np.cos(th)[:, None]
            s = np.sin(th)[:, None]
            rinv = (1.0 / r)[:, None, None]
            d1 = c * dr - s * rinv * dth
            d2 = s * dr + c * rinv * dth
        else:
            n = self.shape[0]
            g = w.reshape(lead + (n, n, 3))
            x = self.z[::n, 0]
            d1 = np.gradient(g, x, axis=-3, edge_order=2)
            d2 = np.gradient(g, x, axis=-2, edge_order=2)
        return d1.reshape(w.shape), d2.reshape(w.shape)

    def wedge_gradient(self, w: np.ndarray) -> np.ndarray:
        """``z2 d_1 w - z1 d_2 w`` (the angular derivative ``-d_theta w``)."""
        d1, d2 = self.derivatives(w)
        return self.z[:, 1, None] * d1 - self.z[:, 0, None] * d2


def cross_grid(q: CrossSection, n_r: int = 8, n_theta: int = 16, n_side: int = 8) -> CrossGrid:
    """Grid for a disk (polar) or a square (tensor) cross-section."""
    if q.kind == "disk":
        a = q.radius
        r = (np.arange(n_r) + 0.5) * (a / n_r)
        th = 2.0 * np.pi * np.arange(n_theta) / n_theta
        R, T = np.meshgrid(r, th, indexing="ij")
        z = np.stack([R * np.cos(T), R * np.sin(T)], axis=-1).reshape(-1, 2)
        w = (R * (a / n_r) * (2.0 * np.pi / n_theta)).ravel()
        return CrossGrid("disk", z, w, (n_r, n_theta), a, q.area)
    if q.kind == "square":
        half = 0.5 * float(np.max(q.vertices[:, 0]) - np.min(q.vertices[:, 0]))
        x = -half + (np.arange(n_side) + 0.5) * (2.0 * half / n_side)
        X, Y = np.meshgrid(x, x, indexing="ij")
        z = np.stack([X, Y], axis=-1).reshape(-1, 2)
        w = np.full(n_side * n_side, (2.0 * half / n_side) ** 2)
        return CrossGrid("square", z, w, (n_side, n_side), half, q.area)
    raise ValueError("cylinder grids exist for disk and square cross-sections only")


@dataclass
class CylinderField:
    """Unit vectors ``w[i, j]`` at curve node ``i`` and cross node ``j``."""

    w: np.ndarray
    grid: CrossGrid

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        if self.w.ndim != 3 or self.w.shape[1:] != (self.grid.size, 3):
            raise GridMismatchError("cylinder field must have shape (N+1, M, 3)")
        err = np.max(np.abs(np.linalg.norm(self.w, axis=-1) - 1.0))
        if err > UNIT_TOL:
            raise NormalizationError(f"cylinder field is not unit length (max error {err:.3g})")

    @classmethod
    def lift(cls, v0: DirectorField, grid: CrossGrid) -> "CylinderField":
        """Constant extension ``w(s, z) = v0(s)``."""
        return cls(np.repeat(v0.v[:, None, :], grid.size, axis=1), grid)


def pullback_energy(w: CylinderField, chart: TubeChart, model: PerturbationModel,
                    form: str = "exact") -> float:
    """Thin-tube energy of ``w`` in the straightened coordinates.

    The axial term is evaluated on segments exactly like the one-dimensional
    energy (normalised midpoint field, midpoint frame); the cross-sectional
    terms use trapezoid weights over curve nodes.
    """
    if form not in ("exact", "printed"):
        raise ValueError("form must be 'exact' or 'printed'")
    curve, eps, grid = chart.curve, chart.epsilon, w.grid
    if w.w.shape[0] != len(curve.s):
        raise GridMismatchError("cylinder field and curve have different node counts")
    if grid.rho > chart.rho * (1 + 1e-12):
        raise ValidityError("cross grid extends beyond the chart's cross-section radius")
    W = w.w
    F = curve.frame
    z1 = grid.z[:, 0]
    qw = grid.weights
    h = curve.h

    # axial term on segments
    wz = grid.wedge_gradient(W)
    p = W[:-1] + W[1:]
    m = p / np.linalg.norm(p, axis=-1, keepdims=True)
    alpha_mid = 1.0 - eps * curve.curvature_mid[:, None] * z1[None, :]
    tm = curve.t_mid[:, None, :]
    r = ((W[1:] - W[:-1]) / h + curve.torsion_mid[:, None, None] * 0.5 * (wz[:-1] + wz[1:])
         + alpha_mid[..., None] * model.kt(m, tm))
    axial = h * np.einsum("ij,j->", np.sum(r * r, -1) / alpha_mid, qw)

    # cross-sectional terms on nodes
    d1, d2 = grid.derivatives(W)
    alpha = 1.0 - eps * F.curvature[:, None] * z1[None, :]
    kn = model.kt(W, F.n[:, None, :])
    kb = model.kt(W, F.b[:, None, :])
    dens = _cross_density(d1, d2, kn, kb, alpha, eps, form)
    cross = float(curve.node_weights @ (dens @ qw))
    return 0.5 * (float(axial) + cross) / grid.area


def _cross_density(d1, d2, kn, kb, alpha, eps, form):
    if form == "exact":
        c1 = d1 / eps + kn
        c2 = d2 / eps + kb
        return alpha * (np.sum(c1 * c1, -1) + np.sum(c2 * c2, -1))
    c1 = d1 / eps + alpha[..., None] * kn
    c2 = d2 / eps + alpha[..., None] * kb
    return (np.sum(c1 * c1, -1) + np.sum(c2 * c2, -1)) / alpha


def pullback_density(chart: TubeChart, idx, z, w, dw, model: PerturbationModel,
                     form: str = "exact") -> np.ndarray:
    """Pointwise integrand of :func:`pullback_energy` (before the ``1/(2|Q|)`` factor).

    ``w`` (P, 3) are field values at curve nodes ``idx`` (P,) and cross points
    ``z`` (P, 2); ``dw`` (P, 3, 3) holds ``d_s w``, ``d_1 w``, ``d_2 w`` as
    columns.
    """
    if form not in ("exact", "printed"):
        raise ValueError("form must be 'exact' or 'printed'")
    idx = np.atleast_1d(np.asarray(idx))
    z = np.atleast_2d(np.asarray(z, dtype=float))
    w = np.atleast_2d(np.asarray(w, dtype=float))
    dw = np.asarray(dw, dtype=float).reshape(len(w), 3, 3)
    F = chart.curve.frame
    eps = chart.epsilon
    alpha = 1.0 - eps * F.curvature[idx] * z[:, 0]
    ds, d1, d2 = dw[:, :, 0], dw[:, :, 1], dw[:, :, 2]
    wz = z[:, 1, None] * d1 - z[:, 0, None] * d2
    r = ds + F.torsion[idx, None] * wz + alpha[:, None] * model.kt(w, F.t[idx])
    axial = np.sum(r * r, -1) / alpha
    return axial + _cross_density(d1, d2, model.kt(w, F.n[idx]), model.kt(w, F.b[idx]),
                                  alpha, eps, form)


def corrector_fields(v0: np.ndarray, curve: Curve, model: PerturbationModel):
    """``d_1 = v0 x (v0 x K(v0) n)`` and ``d_2`` likewise with ``b``."""
    kn = model.kt(v0, curve.frame.n)
    kb = model.kt(v0, curve.frame.b)
    d1 = np.sum(v0 * kn, -1, keepdims=True) * v0 - kn
    d2 = np.sum(v0 * kb, -1, keepdims=True) * v0 - kb
    return d1, d2


def recovery_field(v0: DirectorField, chart: TubeChart, model: PerturbationModel,
                   grid: CrossGrid) -> CylinderField:
    """``w = normalize(v0 + eps (z1 d_1 + z2 d_2))`` on the cylinder grid."""
    if v0.v.shape[0] != len(chart.curve.s):
        raise GridMismatchError("field and chart curve have different node counts")
    d1, d2 = corrector_fields(v0.v, chart.curve, model)
    z = grid.z
    d = z[None, :, 0, None] * d1[:, None, :] + z[None, :, 1, None] * d2[:, None, :]
    w = v0.v[:, None, :] + chart.epsilon * d
    w /= np.linalg.norm(w, axis=-1, keepdims=True)
    return CylinderField(w, grid)


# --- convergence study ------------------------------------------------------------


@dataclass
class GammaStudy:
    rows: list = field(default_factory=list)

    @property
    def gaps(self) -> np.ndarray:
        return np.array([r["gap"] for r in self.rows])

    @property
    def strictly_decreasing(self) -> bool:
        g = self.gaps
        return bool(np.all(np.diff(g) < 0))

    def observed_slope(self) -> float:
        """Least-squares slope of ``log gap`` against ``log eps``."""
        eps = np.array([r["epsilon"] for r in self.rows])
        g = self.gaps
        ok = g > 0
        if ok.sum() < 2:
            return float("nan")
        return float(np.polyfit(np.log(eps[ok]), np.log(g[ok]), 1)[0])

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("epsilon,n_segments,e3d,e1d,gap\n")
            for r in self.rows:
                fh.write(f"{r['epsilon']:.17g},{r['n_segments']},{r['e3d']:.17g},"
                         f"{r['e1d']:.17g},{r['gap']:.17g}\n")

    def summary(self) -> dict:
        return {"rows": self.rows, "strictly_decreasing": self.strictly_decreasing,
                "observed_slope": self.observed_slope()}


def segments_for(curve: Curve, eps: float, ratio: float = 4.0, minimum: int = 16) -> int:
    """Smallest power of two ``N >= minimum`` with ``length / N <= eps / ratio``."""
    need = curve.length * ratio / eps
    return max(minimum, 1 << max(0, math.ceil(math.log2(need - 1e-9))))


def gamma_convergence_study(v0, curve: Curve, model: PerturbationModel, q: CrossSection,
                            eps_list, *, grid: CrossGrid | None = None, ratio: float = 4.0,
                            form: str = "exact", threads: int = 1) -> GammaStudy:
    """Gap between the tube energy of the recovery field and the limit energy.

    ``v0`` is either a :class:`DirectorField` on ``curve`` (the grid is then
    kept and must satisfy ``h <= eps / ratio`` for every ``eps``) or a callable
    ``curve -> DirectorField``, in which case built-in curves are re-gridded
    per ``eps`` to the smallest power-of-two segment count meeting the rule.
    The cross grid is held fixed across ``eps``.
    """
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be strictly decreasing")
    q = q.normalized()
    grid = grid or cross_grid(q)

    def one(eps):
        if callable(v0):
            c = curve.refined(segments_for(curve, eps, ratio))
            field0 = v0(c)
        else:
            c, field0 = curve, v0
            if c.h > eps / ratio * (1 + 1e-12):
                raise ValidityError(f"h = {c.h:.3g} exceeds eps/{ratio:g} = {eps / ratio:.3g}")
        chart = TubeChart(c, eps, q.rho)
        e3 = pullback_energy(recovery_field(field0, chart, model, grid), chart, model, form)
        e1 = energy(field0, c, model).total
        log.info("eps=%g N=%d e3d=%.12g e1d=%.12g", eps, c.n_segments, e3, e1)
        return {"epsilon": eps, "n_segments": c.n_segments, "e3d": e3, "e1d": e1,
                "gap": abs(e3 - e1)}

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            rows = list(ex.map(one, eps_list))
    else:
        rows = [one(e) for e in eps_list]
    return GammaStudy(rows)
