"""Matrix fields ``K: S^2 -> R^{3x3}`` perturbing the Dirichlet energy.

Every model evaluates ``K`` and its derivative ``dK[..., i, j, k] = dK_ij/dsigma_k``
on arrays of unit vectors (shape ``(..., 3)``).  The derivative is taken in
the ambient space; callers project onto the sphere's tangent plane.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import CurvemagError, NormalizationError

UNIT_TOL = 1e-10


class BoundError(CurvemagError):
    """A sampled value of ``|K|`` or a Lipschitz quotient exceeds the declared bound."""


def _skew(x: np.ndarray) -> np.ndarray:
    """``[x]_x`` with ``[x]_x w = x cross w``."""
    out = np.zeros(x.shape[:-1] + (3, 3))
    out[..., 0, 1] = -x[..., 2]
    out[..., 0, 2] = x[..., 1]
    out[..., 1, 0] = x[..., 2]
    out[..., 1, 2] = -x[..., 0]
    out[..., 2, 0] = -x[..., 1]
    out[..., 2, 1] = x[..., 0]
    return out


_LEVI = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    _LEVI[_i, _j, _k] = 1.0
    _LEVI[_i, _k, _j] = -1.0


class PerturbationModel:
    """Base class.  Subclasses implement :meth:`K` and :meth:`dK`.

    ``kt`` and ``kt_adjoint`` compute ``K(m) t`` and
    ``(d/dm [K(m) t])^T r``; the generic versions go through ``K``/``dK``.
    """

    kind = "custom"
    c_K: float = 0.0
    anisotropy_free = False

    def K(self, sigma: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def dK(self, sigma: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def kt(self, m, t):
        return np.einsum("...ij,...j->...i", self.K(m), t)

    def kt_adjoint(self, m, t, r):
        return np.einsum("...ijk,...j,...i->...k", self.dK(m), t, r)

    def half_norm_sq(self, sigma) -> np.ndarray:
        """Pointwise ``|K(sigma)|^2 / 2``."""
        K = self.K(sigma)
        return 0.5 * np.sum(K * K, axis=(-2, -1))

    def describe(self) -> dict:
        return {"kind": self.kind, "c_K": self.c_K}


class DMI(PerturbationModel):
    """Bulk DMI: ``K(sigma) w = kappa sigma x w``, so ``|K|^2 = 2 kappa^2``."""

    kind = "dmi"
    anisotropy_free = True

    def __init__(self, kappa: float):
        self.kappa = float(kappa)
        self.c_K = float(np.sqrt(2.0) * abs(self.kappa))

    def K(self, sigma):
        return self.kappa * _skew(np.asarray(sigma, dtype=float))

    def dK(self, sigma):
        sigma = np.asarray(sigma, dtype=float)
        # d/dsigma_k of kappa*[sigma]_x has entries -kappa*eps_ijk
        return np.broadcast_to(-self.kappa * _LEVI, sigma.shape[:-1] + (3, 3, 3))

    def kt(self, m, t):
        return self.kappa * np.cross(m, t)

    def kt_adjoint(self, m, t, r):
        return self.kappa * np.cross(t, r)

    def half_norm_sq(self, sigma):
        sigma = np.asarray(sigma)
        return np.full(sigma.shape[:-1], self.kappa**2)

    def describe(self):
        return {"kind": self.kind, "kappa": self.kappa, "c_K": self.c_K}


class Ado(PerturbationModel):
    """Ado interaction: ``K(sigma) = beta sigma1 sigma2 sigma3 I``."""

    kind = "ado"

    def __init__(self, beta: float):
        self.beta = float(beta)
        # sup |K| = |beta|/3 and the Lipschitz constant is at most |beta|
        self.c_K = abs(self.beta)

    def _p(self, sigma):
        return sigma[..., 0] * sigma[..., 1] * sigma[..., 2]

    def _grad_p(self, sigma):
        x, y, z = sigma[..., 0], sigma[..., 1], sigma[..., 2]
        return np.stack([y * z, x * z, x * y], axis=-1)

    def K(self, sigma):
        sigma = np.asarray(sigma, dtype=float)
        return self.beta * self._p(sigma)[..., None, None] * np.eye(3)

    def dK(self, sigma):
        sigma = np.asarray(sigma, dtype=float)
        return self.beta * np.eye(3)[..., None] * self._grad_p(sigma)[..., None, None, :]

    def kt(self, m, t):
        return self.beta * self._p(m)[..., None] * t

    def kt_adjoint(self, m, t, r):
        return self.beta * np.sum(t * r, axis=-1)[..., None] * self._grad_p(m)

    def describe(self):
        return {"kind": self.kind, "beta": self.beta, "c_K": self.c_K}


class Linear(PerturbationModel):
    """``K(sigma)_ij = sum_k T_ijk sigma_k`` for a constant 3x3x3 tensor."""

    kind = "linear"

    def __init__(self, tensor):
        T = np.asarray(tensor, dtype=float)
        if T.size != 27:
            raise ValueError("linear model needs 27 tensor entries")
        self.T = T.reshape(3, 3, 3)
        # |K(s1) - K(s2)| = |T (s1 - s2)| <= ||T||_op |s1 - s2|, same bound for |K(s)|
        self.c_K = float(np.linalg.norm(self.T.reshape(9, 3), 2))

    def K(self, sigma):
        return np.einsum("ijk,...k->...ij", self.T, np.asarray(sigma, dtype=float))

    def dK(self, sigma):
        sigma = np.asarray(sigma)
        return np.broadcast_to(self.T, sigma.shape[:-1] + (3, 3, 3))

    def kt(self, m, t):
        return np.einsum("ijk,...j,...k->...i", self.T, t, m)

    def kt_adjoint(self, m, t, r):
        return np.einsum("ijk,...j,...i->...k", self.T, t, r)

    def describe(self):
        return {"kind": self.kind, "tensor": self.T.ravel().tolist(), "c_K": self.c_K}


class Custom(PerturbationModel):
    """User callback ``fn(sigma) -> K`` for a single unit vector.

    ``jacobian(sigma) -> (3, 3, 3)`` is optional; without it the derivative
    is taken by central differences.  The declared bound is sample-checked
    at construction.
    """

    kind = "custom"

    def __init__(self, fn: Callable, c_K: float, jacobian: Callable | None = None,
                 check: bool = True):
        self.fn = fn
        self.jacobian = jacobian
        self.c_K = float(c_K)
        if check:
            check_bound(self)

    def K(self, sigma):
        sigma = np.asarray(sigma, dtype=float)
        flat = sigma.reshape(-1, 3)
        out = np.array([np.asarray(self.fn(x), dtype=float) for x in flat])
        return out.reshape(sigma.shape[:-1] + (3, 3))

    def dK(self, sigma):
        sigma = np.asarray(sigma, dtype=float)
        flat = sigma.reshape(-1, 3)
        if self.jacobian is not None:
            out = np.array([np.asarray(self.jacobian(x), dtype=float) for x in flat])
        else:
            step = 1e-6
            out = np.empty((len(flat), 3, 3, 3))
            for k in range(3):
                e = np.zeros(3)
                e[k] = step
                out[..., k] = (self.K(flat + e) - self.K(flat - e)) / (2 * step)
        return out.reshape(sigma.shape[:-1] + (3, 3, 3))


def zero() -> Linear:
    """``K == 0`` (plain Dirichlet energy)."""
    return Linear(np.zeros(27))


def load_tensor_json(path) -> np.ndarray:
    """Read a JSON array of 27 numbers, row-major in ``(i, j, k)``."""
    data = json.loads(Path(path).read_text())
    arr = np.asarray(data, dtype=float).ravel()
    if arr.size != 27:
        raise ValueError(f"{path}: expected 27 numbers, got {arr.size}")
    return arr.reshape(3, 3, 3)


def fibonacci_sphere(count: int) -> np.ndarray:
    """Quasi-uniform deterministic points on the unit sphere."""
    k = np.arange(count) + 0.5
    z = 1.0 - 2.0 * k / count
    r = np.sqrt(1.0 - z * z)
    phi = np.pi * (3.0 - np.sqrt(5.0)) * k
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def check_bound(model: PerturbationModel, samples: int = 1000, pairs: int = 1000,
                seed: int = 0) -> tuple[float, float]:
    """Sample ``sup |K|`` and the Lipschitz quotient; raise if either exceeds ``c_K``.

    Returns the two sampled maxima.
    """
    pts = fibonacci_sphere(samples)
    sup = float(np.max(np.linalg.norm(model.K(pts), axis=(-2, -1))))
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(pairs, 3))
    b = rng.normal(size=(pairs, 3))
    a /= np.linalg.norm(a, axis=1, keepdims=True)
    b /= np.linalg.norm(b, axis=1, keepdims=True)
    num = np.linalg.norm(model.K(a) - model.K(b), axis=(-2, -1))
    lip = float(np.max(num / np.linalg.norm(a - b, axis=1)))
    slack = 1e-12 * max(1.0, model.c_K)
    if sup > model.c_K + slack:
        raise BoundError(f"sampled sup|K| = {sup:.6g} exceeds declared c_K = {model.c_K:.6g}")
    if lip > model.c_K + slack:
        raise BoundError(f"sampled Lipschitz quotient {lip:.6g} exceeds c_K = {model.c_K:.6g}")
    return sup, lip


def _require_unit(sigma) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=float)
    if np.any(np.abs(np.linalg.norm(sigma, axis=-1) - 1.0) > UNIT_TOL):
        raise NormalizationError("sigma must be a unit vector (|sigma| = 1 within 1e-10)")
    return sigma


def eval_K(model: PerturbationModel, sigma) -> np.ndarray:
    """``K(sigma)`` for unit ``sigma``; raises :class:`NormalizationError` otherwise."""
    return model.K(_require_unit(sigma))


def frobenius_coupling_identity_check(model: DMI, G, sigma) -> float:
    """``|G : K(sigma) - kappa sigma . curl(G)|`` with ``curl(G) = (G32-G23, G13-G31, G21-G12)``."""
    sigma = _require_unit(sigma)
    G = np.asarray(G, dtype=float)
    lhs = float(np.sum(G * model.K(sigma)))
    c = np.array([G[2, 1] - G[1, 2], G[0, 2] - G[2, 0], G[1, 0] - G[0, 1]])
    return abs(lhs - model.kappa * float(np.dot(sigma, c)))


def anisotropy_density(model: PerturbationModel, sigma, t) -> np.ndarray:
    """``|K^T(sigma) sigma|^2 - (K^T(sigma) sigma . t)^2`` (vectorised)."""
    sigma = _require_unit(sigma)
    t = np.asarray(t, dtype=float)
    u = np.einsum("...ij,...i->...j", model.K(sigma), sigma)
    return np.sum(u * u, axis=-1) - np.sum(u * t, axis=-1) ** 2


def anisotropy_density_nb(model: PerturbationModel, sigma, n, b) -> np.ndarray:
    """Same density written with the normal and binormal: ``(u.n)^2 + (u.b)^2``."""
    sigma = _require_unit(sigma)
    u = np.einsum("...ij,...i->...j", model.K(sigma), sigma)
    return np.sum(u * n, axis=-1) ** 2 + np.sum(u * b, axis=-1) ** 2


def anisotropy_gradient(model: PerturbationModel, sigma, t) -> np.ndarray:
    """Ambient gradient of :func:`anisotropy_density` with respect to ``sigma``."""
    K = model.K(sigma)
    dK = model.dK(sigma)
    u = np.einsum("...ij,...i->...j", K, sigma)
    du = np.einsum("...ijk,...i->...jk", dK, sigma) + np.swapaxes(K, -1, -2)
    w = u - np.sum(u * t, axis=-1, keepdims=True) * t
    return 2.0 * np.einsum("...j,...jk->...k", w, du)


def from_spec(kind: str, **params) -> PerturbationModel:
    if kind == "dmi":
        return DMI(params["kappa"])
    if kind == "ado":
        return Ado(params["beta"])
    if kind == "linear":
        if "tensor" in params and params["tensor"] is not None:
            return Linear(params["tensor"])
        return Linear(load_tensor_json(params["tensor_path"]))
    if kind == "none":
        return zero()
    raise ValueError(f"unknown perturbation kind {kind!r}")
