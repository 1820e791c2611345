"""Minimisation of the discrete limit energy on the product of spheres.

Projected gradient descent with Barzilai-Borwein step lengths (long and short
steps alternate by default), a monotone Armijo backtracking safeguard and
retraction by renormalisation.
Convergence is declared when the sup norm of the projected gradient falls
below ``tol``.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .cross_section import DemagMatrix
from .errors import ConstraintError
from .geometry import Curve
from .perturbation import PerturbationModel, fibonacci_sphere
from .reduced_energy import (BoundaryCondition, DirectorField, EnergyBreakdown,
                             energy, energy_and_gradient, retract)

log = logging.getLogger(__name__)

ARMIJO_C = 1e-4
MAX_HALVINGS = 60
STEP_RULES = ("bb1", "bb2", "alternating")


@dataclass
class MinimizeOptions:
    tol: float = 1e-8
    max_iters: int = 20000
    step_min: float = 1e-14
    step_max: float = 1e6
    initial_step: float | None = None
    step_rule: str = "alternating"
    log_every: int = 0

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.step_rule not in STEP_RULES:
            raise ValueError(f"step_rule must be one of {STEP_RULES}")


@dataclass
class MinimizeReport:
    field: DirectorField
    energy: EnergyBreakdown
    converged: bool
    iterations: int
    grad_norm: float
    message: str
    history: list = field(default_factory=list)
    seconds: float = 0.0
    evaluations: int = 0

    def summary(self) -> dict:
        return {"converged": self.converged, "iterations": self.iterations,
                "grad_norm": self.grad_norm, "energy": self.energy.to_dict(),
                "message": self.message, "seconds": self.seconds,
                "evaluations": self.evaluations}


def _dot(a, b, periodic):
    if periodic:
        return float(np.sum(a[:-1] * b[:-1]))
    return float(np.sum(a * b))


def minimize(field: DirectorField, curve: Curve, model: PerturbationModel,
             demag: DemagMatrix | None = None, options: MinimizeOptions | None = None,
             **kw) -> MinimizeReport:
    """Minimise from ``field``; keyword arguments override ``options`` fields."""
    opt = options or MinimizeOptions()
    for k, val in kw.items():
        if not hasattr(opt, k):
            raise TypeError(f"unknown option {k!r}")
        setattr(opt, k, val)
    t0 = time.perf_counter()
    periodic = field.bc.kind == "periodic"
    cur = field.copy()
    E, g = energy_and_gradient(cur, curve, model, demag)
    f = E.total
    gnorm = float(np.max(np.abs(g)))
    step = opt.initial_step if opt.initial_step is not None else 0.5 * curve.h
    history = [(0, f, gnorm)]
    prev_x = prev_g = None
    message = "max_iters reached"
    converged = gnorm < opt.tol
    it = 0
    evals = 1
    while not converged and it < opt.max_iters:
        it += 1
        if prev_x is not None:
            sx = cur.v - prev_x
            sy = g - prev_g
            sty = _dot(sx, sy, periodic)
            if sty > 0:
                long_step = opt.step_rule == "bb1" or (opt.step_rule == "alternating" and it % 2)
                if long_step:
                    step = _dot(sx, sx, periodic) / sty
                else:
                    step = sty / _dot(sy, sy, periodic)
                step = min(max(step, opt.step_min), opt.step_max)
        slope = _dot(g, g, periodic)
        for _ in range(MAX_HALVINGS):
            trial = retract(cur, g, -step)
            Et, gt = energy_and_gradient(trial, curve, model, demag)
            evals += 1
            if Et.total <= f - ARMIJO_C * step * slope:
                break
            step *= 0.5
        else:
            message = "line search failed"
            break
        prev_x, prev_g = cur.v, g
        cur, E, g = trial, Et, gt
        f = E.total
        gnorm = float(np.max(np.abs(g)))
        history.append((it, f, gnorm))
        if opt.log_every and it % opt.log_every == 0:
            log.info("iter %d  E=%.12g  |g|=%.3e  step=%.3e", it, f, gnorm, step)
        converged = gnorm < opt.tol
    if converged:
        message = "converged"
    return MinimizeReport(cur, E, converged, it, gnorm, message, history,
                          time.perf_counter() - t0, evals)


# --- initial fields -----------------------------------------------------------


def initial_field(curve: Curve, kind: str = "random", bc: BoundaryCondition | None = None,
                  *, seed: int = 0, vector=None, fn=None, center: float | None = None,
                  width: float = 1.0, noise: float = 0.0) -> DirectorField:
    """Starting fields: ``constant``, ``tangent``, ``random``, ``wall_ansatz``, ``custom``.

    ``wall_ansatz`` is a tanh profile rotating ``-e1`` into ``+e1`` through
    ``e2`` around ``center`` with the given ``width``.  ``noise`` adds a
    seeded Gaussian perturbation before normalisation.
    """
    bc = bc or BoundaryCondition()
    rng = np.random.default_rng(seed)
    npts = len(curve.s)
    if kind == "constant":
        vec = np.asarray(vector if vector is not None else (0.0, 0.0, 1.0), dtype=float)
        v = np.tile(vec, (npts, 1))
    elif kind == "tangent":
        v = curve.frame.t.copy()
    elif kind == "random":
        v = rng.normal(size=(npts, 3))
    elif kind == "wall_ansatz":
        c = 0.5 * (curve.s[0] + curve.s[-1]) if center is None else center
        th = 2.0 * np.arctan(np.exp((curve.s - c) / width))
        v = np.stack([-np.cos(th), np.sin(th), np.zeros(npts)], axis=1)
    elif kind == "custom":
        if fn is None:
            raise ValueError("custom initial field needs fn(s) -> (N+1, 3)")
        v = np.asarray(fn(curve.s), dtype=float)
    else:
        raise ValueError(f"unknown initial field kind {kind!r}")
    if noise:
        v = v + noise * rng.normal(size=v.shape)
    if np.any(np.linalg.norm(v, axis=1) < 1e-12):
        raise ConstraintError("initial field has a zero vector")
    return DirectorField.from_vectors(v, bc)


# --- second variation -----------------------------------------------------------


def hessian_probe(field: DirectorField, curve: Curve, model: PerturbationModel,
                  demag: DemagMatrix | None, direction, t: float = 1e-4) -> float:
    """Second difference ``(E(R(v+td)) + E(R(v-td)) - 2E(v)) / t^2`` along ``d``.

    ``d`` must be tangent (``d_i . v_i = 0``) and respect the boundary
    condition; :class:`ConstraintError` otherwise.
    """
    d = np.asarray(direction, dtype=float)
    if d.shape != field.v.shape:
        raise ConstraintError("probe direction has the wrong shape")
    if np.max(np.abs(np.sum(d * field.v, axis=1))) > 1e-8 * max(1.0, np.max(np.abs(d))):
        raise ConstraintError("probe direction is not tangent to the sphere")
    if field.bc.kind == "pinned" and (np.any(d[0] != 0) or np.any(d[-1] != 0)):
        raise ConstraintError("probe direction must vanish at pinned ends")
    if field.bc.kind == "periodic" and np.max(np.abs(d[-1] - d[0])) > 1e-12:
        raise ConstraintError("probe direction must be periodic")
    e0 = energy(field, curve, model, demag).total
    ep = energy(DirectorField.from_vectors(field.v + t * d, field.bc), curve, model, demag).total
    em = energy(DirectorField.from_vectors(field.v - t * d, field.bc), curve, model, demag).total
    return (ep + em - 2.0 * e0) / (t * t)


def tangent_projection(field: DirectorField, d) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    return d - np.sum(d * field.v, axis=1, keepdims=True) * field.v


def probe_directions(field: DirectorField, curve: Curve, count: int = 50, *,
                     seed: int | None = None, modes: int = 3) -> list[np.ndarray]:
    """Unit-norm tangent probe directions.

    Each direction projects a frame-constant vector (a Fibonacci point in the
    ``(t, n, b)`` basis) onto the tangent planes.  With ``seed`` set, a smooth
    random modulation built from ``modes`` low Fourier modes multiplies it.
    """
    F = curve.frame
    pts = fibonacci_sphere(count)
    rng = np.random.default_rng(seed) if seed is not None else None
    phase = 2.0 * np.pi * (curve.s - curve.s[0]) / curve.length
    out = []
    for p in pts:
        d = p[0] * F.t + p[1] * F.n + p[2] * F.b
        if rng is not None:
            a = rng.normal(size=(modes, 2))
            k = np.arange(1, modes + 1)
            mod = 1.0 + 0.5 * (a[:, :1] * np.cos(np.outer(k, phase))
                               + a[:, 1:] * np.sin(np.outer(k, phase))).sum(0) / modes
            d = d * mod[:, None]
        d = tangent_projection(field, d)
        if field.bc.kind == "pinned":
            d[0] = d[-1] = 0.0
        elif field.bc.kind == "periodic":
            d[-1] = d[0]
        nrm = math.sqrt(float(np.sum(d * d)) * curve.h)
        if nrm > 1e-12:
            out.append(d / nrm)
    return out
