"""Arclength-sampled space curves, Frenet frames and the tube chart.

A :class:`Curve` holds a uniform arclength grid ``s_0 < ... < s_N`` together
with the points and the Frenet frame at every node.  Built-in curves (line,
ring, helix) use exact frame formulas; sampled curves are resampled to a
uniform arclength grid and differentiated with finite differences.

The tube chart maps ``(s, z1, z2)`` to ``gamma(s) + eps*z1*n(s) + eps*z2*b(s)``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import GeometryError, ValidityError

MIN_NODES = 8
CURVATURE_FLOOR = 1e-10


@dataclass(frozen=True)
class FrameField:
    """Per-node Frenet frame with curvature and torsion."""

    t: np.ndarray
    n: np.ndarray
    b: np.ndarray
    curvature: np.ndarray
    torsion: np.ndarray

    def matrices(self) -> np.ndarray:
        """Stack ``F = (t | n | b)`` as an ``(N+1, 3, 3)`` array of column frames."""
        return np.stack([self.t, self.n, self.b], axis=-1)


@dataclass(frozen=True)
class Curve:
    """Regular simple curve sampled on a uniform arclength grid.

    ``points`` and the frame arrays have ``N + 1`` rows.  For closed curves
    the last node repeats the first one.
    """

    s: np.ndarray
    points: np.ndarray
    frame: FrameField
    closed: bool
    kind: str = "samples"
    params: dict = field(default_factory=dict)

    @property
    def n_segments(self) -> int:
        return len(self.s) - 1

    @property
    def h(self) -> float:
        return float(self.s[1] - self.s[0])

    @property
    def length(self) -> float:
        return float(self.s[-1] - self.s[0])

    @cached_property
    def t_mid(self) -> np.ndarray:
        return _normalized(self.frame.t[:-1] + self.frame.t[1:])

    @cached_property
    def n_mid(self) -> np.ndarray:
        return _normalized(self.frame.n[:-1] + self.frame.n[1:])

    @cached_property
    def b_mid(self) -> np.ndarray:
        return _normalized(self.frame.b[:-1] + self.frame.b[1:])

    @cached_property
    def curvature_mid(self) -> np.ndarray:
        return 0.5 * (self.frame.curvature[:-1] + self.frame.curvature[1:])

    @cached_property
    def torsion_mid(self) -> np.ndarray:
        return 0.5 * (self.frame.torsion[:-1] + self.frame.torsion[1:])

    @cached_property
    def node_weights(self) -> np.ndarray:
        """Trapezoid weights; closed curves count the repeated node once."""
        w = np.full(len(self.s), self.h)
        if self.closed:
            w[-1] = 0.0
        else:
            w[0] = w[-1] = 0.5 * self.h
        return w

    @cached_property
    def cache(self) -> dict:
        """Scratch space for per-curve derived arrays (filled by other modules)."""
        return {}

    def refined(self, n: int) -> "Curve":
        """Rebuild a built-in curve with ``n`` segments."""
        if self.kind == "line":
            return line(n=n, **self.params)
        if self.kind == "ring":
            return ring(n=n, **self.params)
        if self.kind == "helix":
            return helix(n=n, **self.params)
        raise GeometryError("sampled curves cannot be re-gridded; resample the points instead")

    def node_index(self, s: float) -> int:
        """Index of the grid node at arclength ``s`` (must lie on the grid)."""
        i = int(round((s - self.s[0]) / self.h))
        if i < 0 or i > self.n_segments or abs(self.s[i] - s) > 1e-9 * max(1.0, self.length):
            raise GeometryError(f"s={s!r} is not a grid node")
        return i


def _normalized(x: np.ndarray) -> np.ndarray:
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def _check_n(n: int) -> None:
    if n < MIN_NODES:
        raise GeometryError(f"need at least {MIN_NODES} segments, got {n}")


def complete_frame(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic normal/binormal for a straight line with unit tangent ``t``.

    The normal is the coordinate axis least aligned with ``t`` (lowest index
    on ties), orthogonalised against ``t``; ``b = t x n``.
    """
    t = np.asarray(t, dtype=float)
    k = int(np.argmin(np.abs(t)))
    e = np.zeros(3)
    e[k] = 1.0
    n = e - np.dot(e, t) * t
    n /= np.linalg.norm(n)
    return n, np.cross(t, n)


def line(length: float, n: int, start: float | None = None,
         direction=(1.0, 0.0, 0.0)) -> Curve:
    """Straight segment along ``direction``; ``s`` runs from ``start`` (default ``-length/2``)."""
    _check_n(n)
    if length <= 0:
        raise GeometryError("line length must be positive")
    d = np.asarray(direction, dtype=float)
    if np.linalg.norm(d) == 0:
        raise GeometryError("line direction must be non-zero")
    d = d / np.linalg.norm(d)
    s0 = -0.5 * length if start is None else float(start)
    s = s0 + np.arange(n + 1) * (length / n)
    pts = s[:, None] * d[None, :]
    nn, bb = complete_frame(d)
    ones = np.ones((n + 1, 1))
    frame = FrameField(ones * d, ones * nn, ones * bb, np.zeros(n + 1), np.zeros(n + 1))
    params = {"length": float(length), "start": s0, "direction": tuple(float(x) for x in d)}
    return Curve(s, pts, frame, closed=False, kind="line", params=params)


def ring(radius: float, n: int) -> Curve:
    """Circle of radius ``radius`` in the xy-plane, counter-clockwise, closed.

    Strict Frenet convention: ``n`` points to the centre, ``b = e3``.
    """
    _check_n(n)
    if radius <= 0:
        raise GeometryError("ring radius must be positive")
    R = float(radius)
    s = np.arange(n + 1) * (2.0 * np.pi * R / n)
    phi = np.arange(n + 1) * (2.0 * np.pi / n)
    phi[-1] = 0.0  # exact closure
    c, sn = np.cos(phi), np.sin(phi)
    zero = np.zeros_like(phi)
    pts = np.stack([R * c, R * sn, zero], axis=1)
    t = np.stack([-sn, c, zero], axis=1)
    nn = np.stack([-c, -sn, zero], axis=1)
    b = np.stack([zero, zero, np.ones_like(phi)], axis=1)
    frame = FrameField(t, nn, b, np.full(n + 1, 1.0 / R), np.zeros(n + 1))
    return Curve(s, pts, frame, closed=True, kind="ring", params={"radius": R})


def helix(a: float, b: float, turns: float, n: int) -> Curve:
    """Helix ``(a cos(s/c), a sin(s/c), b s/c)`` with ``c = sqrt(a^2 + b^2)``."""
    _check_n(n)
    if a <= 0 or turns <= 0:
        raise GeometryError("helix needs a > 0 and turns > 0")
    c = np.hypot(a, b)
    s = np.arange(n + 1) * (2.0 * np.pi * c * turns / n)
    u = s / c
    cu, su = np.cos(u), np.sin(u)
    pts = np.stack([a * cu, a * su, b * u], axis=1)
    t = np.stack([-a * su / c, a * cu / c, np.full_like(u, b / c)], axis=1)
    nn = np.stack([-cu, -su, np.zeros_like(u)], axis=1)
    bb = np.stack([b * su / c, -b * cu / c, np.full_like(u, a / c)], axis=1)
    frame = FrameField(t, nn, bb, np.full(n + 1, a / c**2), np.full(n + 1, b / c**2))
    return Curve(s, pts, frame, closed=False, kind="helix",
                 params={"a": float(a), "b": float(b), "turns": float(turns)})


def _fd_derivatives(p: np.ndarray, h: float, closed: bool):
    """First, second and third derivatives of uniformly sampled points."""
    if closed:
        q = p[:-1]
        d1 = (np.roll(q, -1, 0) - np.roll(q, 1, 0)) / (2 * h)
        d2 = (np.roll(q, -1, 0) - 2 * q + np.roll(q, 1, 0)) / h**2
        d3 = (np.roll(d2, -1, 0) - np.roll(d2, 1, 0)) / (2 * h)
        return (np.vstack([d, d[:1]]) for d in (d1, d2, d3))
    d1 = np.gradient(p, h, axis=0, edge_order=2)
    d2 = np.empty_like(p)
    d2[1:-1] = (p[2:] - 2 * p[1:-1] + p[:-2]) / h**2
    d2[0] = (2 * p[0] - 5 * p[1] + 4 * p[2] - p[3]) / h**2
    d2[-1] = (2 * p[-1] - 5 * p[-2] + 4 * p[-3] - p[-4]) / h**2
    d3 = np.gradient(d2, h, axis=0, edge_order=2)
    return d1, d2, d3


def from_samples(points, n: int | None = None, closed: bool | None = None) -> Curve:
    """Curve through sampled points, resampled to a uniform arclength grid.

    The points are interpolated with a cubic spline in the cumulative chord
    parameter, the spline arclength is inverted to place ``n + 1`` equally
    spaced nodes, and the frame is computed from central differences
    (second-order one-sided at the ends of open curves).
    """
    p = np.asarray(points, dtype=float)
    if p.ndim != 2 or p.shape[1] != 3:
        raise GeometryError("sample points must have shape (M, 3)")
    chord = np.linalg.norm(np.diff(p, axis=0), axis=1)
    if np.any(chord <= 0):
        raise GeometryError("non-regular input: repeated consecutive sample points")
    span = np.linalg.norm(p.max(0) - p.min(0))
    if closed is None:
        closed = bool(np.linalg.norm(p[-1] - p[0]) <= 1e-9 * max(span, 1.0))
    if closed and np.linalg.norm(p[-1] - p[0]) > 1e-9 * max(span, 1.0):
        p = np.vstack([p, p[:1]])
        chord = np.linalg.norm(np.diff(p, axis=0), axis=1)
    if closed:
        p[-1] = p[0]
    if n is None:
        n = len(p) - 1
    _check_n(n)
    if len(p) < 4:
        raise GeometryError("need at least 4 sample points")

    u = np.concatenate([[0.0], np.cumsum(chord)])
    spline = CubicSpline(u, p, axis=0, bc_type="periodic" if closed else "not-a-knot")
    fine = np.linspace(0.0, u[-1], 40 * max(n, len(p)) + 1)
    speed = np.linalg.norm(spline(fine, 1), axis=1)
    if np.any(speed <= 1e-12 * max(u[-1], 1.0)):
        raise GeometryError("non-regular input: zero tangent")
    arc = np.concatenate([[0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * np.diff(fine))])
    length = arc[-1]
    s = np.arange(n + 1) * (length / n)
    pts = spline(np.interp(s, arc, fine))
    if closed:
        pts[-1] = pts[0]
    h = length / n

    d1, d2, d3 = _fd_derivatives(pts, h, closed)
    speed = np.linalg.norm(d1, axis=1)
    if np.any(speed <= 1e-12):
        raise GeometryError("non-regular input: zero tangent")
    t = d1 / speed[:, None]
    cr = np.cross(d1, d2)
    crn = np.linalg.norm(cr, axis=1)
    kappa = crn / speed**3
    interior = kappa[1:-1]
    if np.all(kappa < CURVATURE_FLOOR):
        nn, bb = complete_frame(t[0])
        ones = np.ones((n + 1, 1))
        frame = FrameField(t, ones * nn, ones * bb, np.zeros(n + 1), np.zeros(n + 1))
    else:
        if np.any(interior < CURVATURE_FLOOR):
            raise GeometryError("curvature vanishes at an interior node; Frenet frame undefined")
        if kappa[0] < CURVATURE_FLOOR or kappa[-1] < CURVATURE_FLOOR:
            raise GeometryError("curvature vanishes at an endpoint; Frenet frame undefined")
        nvec = d2 - np.sum(d2 * t, axis=1, keepdims=True) * t
        nvec /= np.linalg.norm(nvec, axis=1, keepdims=True)
        b = np.cross(t, nvec)
        tors = np.sum(cr * d3, axis=1) / crn**2
        frame = FrameField(t, nvec, b, kappa, tors)
    return Curve(s - s[0], pts, frame, closed=bool(closed), kind="samples")


def read_points_csv(path) -> np.ndarray:
    """Read ``x,y,z`` rows; a non-numeric first row is treated as a header."""
    rows = []
    with open(Path(path), newline="") as fh:
        for k, row in enumerate(csv.reader(fh)):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                vals = [float(c) for c in row[:3]]
            except ValueError:
                if k == 0:
                    continue
                raise GeometryError(f"{path}: malformed row {k + 1}: {row}")
            if len(vals) != 3:
                raise GeometryError(f"{path}: row {k + 1} needs 3 columns")
            rows.append(vals)
    return np.array(rows, dtype=float)


def build_curve(kind: str, n: int, **params) -> Curve:
    """Dispatch on ``kind`` in ``{'line', 'ring', 'helix', 'samples'}``."""
    if kind == "line":
        return line(n=n, **params)
    if kind == "ring":
        return ring(n=n, **params)
    if kind == "helix":
        return helix(n=n, **params)
    if kind == "samples":
        pts = params.pop("points", None)
        if pts is None:
            pts = read_points_csv(params.pop("path"))
        return from_samples(pts, n=n, **params)
    raise GeometryError(f"unknown curve kind {kind!r}")


def frenet_serret_residuals(curve: Curve) -> tuple[float, float, float]:
    """Max forward-difference residuals of ``t' = k n``, ``n' = -k t + tau b``, ``b' = -tau n``."""
    f, h = curve.frame, curve.h
    k, tau = f.curvature[:-1, None], f.torsion[:-1, None]
    rt = (f.t[1:] - f.t[:-1]) / h - k * f.n[:-1]
    rn = (f.n[1:] - f.n[:-1]) / h + k * f.t[:-1] - tau * f.b[:-1]
    rb = (f.b[1:] - f.b[:-1]) / h + tau * f.n[:-1]
    return tuple(float(np.max(np.linalg.norm(r, axis=1))) for r in (rt, rn, rb))


# ---------------------------------------------------------------------------
# Tube chart


class Jacobian(NamedTuple):
    matrix: np.ndarray
    det: np.ndarray
    inverse: np.ndarray


@dataclass(frozen=True)
class TubeChart:
    """The map ``(s, z) -> gamma(s) + eps z1 n(s) + eps z2 b(s)`` for ``z`` in Q.

    ``rho`` is ``max |z|`` over the cross-section.
    """

    curve: Curve
    epsilon: float
    rho: float

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValidityError("tube thickness must be positive")
        if self.epsilon >= self.epsilon_max:
            raise ValidityError(
                f"epsilon={self.epsilon} >= epsilon_max={self.epsilon_max:.6g}; "
                "the tube chart is not a diffeomorphism")

    @property
    def epsilon_max(self) -> float:
        kmax = float(np.max(self.curve.frame.curvature))
        if kmax * self.rho == 0.0:
            return float("inf")
        return 1.0 / (kmax * self.rho)

    def alpha(self, idx, z1) -> np.ndarray:
        return 1.0 - self.epsilon * self.curve.frame.curvature[idx] * np.asarray(z1)

    def map(self, idx, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        f = self.curve.frame
        return (self.curve.points[idx] + self.epsilon * z[..., :1] * f.n[idx]
                + self.epsilon * z[..., 1:2] * f.b[idx])


def tube_jacobians(chart: TubeChart, idx, z) -> Jacobian:
    """Vectorised :func:`tube_jacobian` over node indices ``idx`` and points ``z``.

    The inverse is ``(1/alpha) Phi F^T`` with
    ``Phi = [[1, 0, 0], [tau z2, alpha/eps, 0], [-tau z1, 0, alpha/eps]]``.
    """
    idx = np.atleast_1d(np.asarray(idx))
    z = np.atleast_2d(np.asarray(z, dtype=float))
    eps = chart.epsilon
    f = chart.curve.frame
    k, tau = f.curvature[idx], f.torsion[idx]
    z1, z2 = z[:, 0], z[:, 1]
    alpha = 1.0 - eps * k * z1
    F = np.stack([f.t[idx], f.n[idx], f.b[idx]], axis=-1)
    m = len(idx)
    A = np.zeros((m, 3, 3))
    A[:, 0, 0] = alpha
    A[:, 1, 0] = -eps * tau * z2
    A[:, 2, 0] = eps * tau * z1
    A[:, 1, 1] = eps
    A[:, 2, 2] = eps
    Phi = np.zeros((m, 3, 3))
    Phi[:, 0, 0] = 1.0
    Phi[:, 1, 0] = tau * z2
    Phi[:, 2, 0] = -tau * z1
    Phi[:, 1, 1] = alpha / eps
    Phi[:, 2, 2] = alpha / eps
    D = F @ A
    inv = Phi @ np.swapaxes(F, 1, 2) / alpha[:, None, None]
    return Jacobian(D, eps**2 * alpha, inv)


def tube_jacobian(chart: TubeChart, s: float, z) -> Jacobian:
    """``D phi_eps``, its determinant ``eps^2 alpha`` and its inverse at one point."""
    i = chart.curve.node_index(s)
    jac = tube_jacobians(chart, [i], np.asarray(z, dtype=float)[None, :])
    return Jacobian(jac.matrix[0], float(jac.det[0]), jac.inverse[0])
