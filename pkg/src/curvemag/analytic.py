"""Closed-form solutions of the limit energy, used as oracles and initial fields.

Ring formulas are written in the outward ring frame ``(t, n_out, e3)`` with
``t = (-sin phi, cos phi, 0)`` and ``n_out = (cos phi, sin phi, 0)``.  The
library ring uses the strict Frenet frame (inward normal), so the normal
component flips sign when a field is assembled: ``v.n = -v_out``.

Throughout, ``omega = sqrt(1 + R^2 kappa^2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConstraintError, GeometryError
from .geometry import Curve
from .reduced_energy import BoundaryCondition, DirectorField

DISK_COEFFICIENT = 1.0 / (2.0 * np.pi)
CONSTRAINT_TOL = 1e-12


# --- straight wire ------------------------------------------------------------


@dataclass(frozen=True)
class WallProfile:
    """Wall ``theta(x) = 2 arctan(exp(-rate (x - center)))`` with twist ``phi = kappa x``.

    ``q`` is the coefficient of ``sin^2 theta`` in the reduced density
    ``theta'^2/2 + q sin^2 theta``; the first integral fixes ``rate = sqrt(2 q)``.
    """

    kappa: float
    q: float
    center: float = 0.0

    def __post_init__(self):
        if not self.q > 0:
            raise ValueError("anisotropy coefficient q must be positive")

    @property
    def rate(self) -> float:
        return math.sqrt(2.0 * self.q)

    @property
    def energy(self) -> float:
        return 2.0 * math.sqrt(2.0 * self.q)

    def theta(self, x) -> np.ndarray:
        # 2 arctan(exp(-u)) written without overflow
        u = self.rate * (np.asarray(x, dtype=float) - self.center)
        return 0.5 * np.pi - 2.0 * np.arctan(np.tanh(0.5 * u))

    def dtheta(self, x) -> np.ndarray:
        # theta' = -rate sin(theta)
        return -self.rate * np.sin(self.theta(x))

    def first_integral_residual(self, x) -> float:
        th = self.theta(x)
        return float(np.max(np.abs(0.5 * self.dtheta(x) ** 2 - self.q * np.sin(th) ** 2)))

    def vectors(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        th = self.theta(x)
        ph = self.kappa * x
        return np.stack([np.cos(th), np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph)], axis=1)


def wall_q(demag_coefficient: float = DISK_COEFFICIENT) -> float:
    """``sin^2`` coefficient produced by an isotropic demag matrix ``diag(m, m)``."""
    return 0.5 * demag_coefficient


def wall_field(kappa: float, q: float, curve: Curve, *,
               pinned: bool = True) -> tuple[DirectorField, float]:
    """Wall sampled on a straight line along ``e1``; returns the field and ``2 sqrt(2 q)``.

    With ``pinned`` the end nodes are set to ``-e1`` and ``+e1``.
    """
    if curve.kind != "line":
        raise GeometryError("wall_field needs a straight line curve")
    prof = WallProfile(kappa, q)
    x = curve.points @ np.asarray(curve.frame.t[0])
    v = prof.vectors(x)
    bc = BoundaryCondition.pinned((-1, 0, 0), (1, 0, 0)) if pinned else BoundaryCondition()
    return DirectorField.from_vectors(v, bc), prof.energy


class WallFit(NamedTuple):
    rate: float
    center: float
    expected: float
    alternative: float
    relative_error: float
    points: int


def fit_wall_rate(field: DirectorField, curve: Curve, q: float = wall_q(),
                  core: tuple[float, float] = (0.05, 0.95)) -> WallFit:
    """Least-squares fit of ``ln tan(theta/2) = -rate (x - center)`` over the wall core.

    ``theta = arccos(v.e1)``; only nodes with ``core[0] < theta/pi < core[1]``
    enter the fit.  ``alternative`` is ``1/sqrt(4 pi)``, reported alongside
    ``sqrt(2 q)`` for comparison.
    """
    x = curve.points[:, 0]
    th = np.arccos(np.clip(field.v[:, 0], -1.0, 1.0))
    # arccos(v1) runs from pi to 0 for a -e1 -> +e1 wall
    sel = (th / np.pi > core[0]) & (th / np.pi < core[1])
    if sel.sum() < 3:
        raise ValueError("too few nodes inside the wall core")
    y = np.log(np.tan(0.5 * th[sel]))
    slope, icpt = np.polyfit(x[sel], y, 1)
    rate = -float(slope)
    center = float(icpt / rate)
    expected = math.sqrt(2.0 * q)
    return WallFit(rate, center, expected, 1.0 / math.sqrt(4.0 * np.pi),
                   abs(rate - expected) / expected, int(sel.sum()))


# --- ring ---------------------------------------------------------------------


def _omega(R, kappa):
    return math.sqrt(1.0 + (R * kappa) ** 2)


def _ring_angle(curve: Curve) -> np.ndarray:
    if curve.kind != "ring":
        raise GeometryError("ring formulas need a ring curve")
    R = curve.params["radius"]
    return curve.s / R


def _assemble_ring(curve: Curve, vt, vout, v3) -> DirectorField:
    F = curve.frame
    v = vt[:, None] * F.t - vout[:, None] * F.n + v3[:, None] * F.b
    return DirectorField.from_vectors(v, BoundaryCondition("periodic"))


@dataclass(frozen=True)
class RingSolution:
    """Zero-energy ring field with amplitudes ``A``, ``B`` and phase ``phase``."""

    R: float
    kappa: float
    A: float
    B: float
    phase: float = 0.0

    @property
    def omega(self) -> float:
        return _omega(self.R, self.kappa)

    @property
    def constraint_residual(self) -> float:
        return abs(self.A**2 + self.B**2 * self.omega**2 - 1.0)

    @property
    def quantized(self) -> bool:
        w = self.omega
        return abs(w - round(w)) < 1e-9

    def components(self, phi) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(v_t, v_out, v_3)`` in the outward ring frame."""
        w, Rk = self.omega, self.R * self.kappa
        arg = w * np.asarray(phi) + self.phase
        vt = self.A / w * np.cos(arg) - Rk * self.B
        vout = self.A * np.sin(arg)
        v3 = self.A * Rk / w * np.cos(arg) + self.B
        return vt, vout, v3


def ring_family(R: float, kappa: float, A: float, B: float, phase: float,
                curve: Curve, *, force: bool = False) -> DirectorField:
    """Sample the zero-energy family on a ring grid (periodic closure ``v_N = v_0``).

    Raises :class:`ConstraintError` when ``A^2 + B^2 omega^2 != 1``, or when
    ``A != 0`` and ``omega`` is not an integer (unless ``force``).  A forced
    non-quantized field is not periodic, so its discrete energy is positive.
    """
    sol = RingSolution(R, kappa, A, B, phase)
    if sol.constraint_residual > CONSTRAINT_TOL:
        raise ConstraintError(
            f"A^2 + B^2 (1 + R^2 kappa^2) = {1 + sol.constraint_residual:.15g}, expected 1")
    if A != 0 and not sol.quantized and not force:
        raise ConstraintError(
            f"sqrt(1 + R^2 kappa^2) = {sol.omega:.12g} is not an integer; "
            "A != 0 gives a non-periodic field (pass force=True to build it anyway)")
    if abs(curve.params["radius"] - R) > 1e-12:
        raise GeometryError("ring radius of the curve differs from R")
    phi = _ring_angle(curve)
    vt, vout, v3 = sol.components(phi)
    vt, vout, v3 = vt.copy(), vout.copy(), v3.copy()
    # the last node duplicates the first; for non-periodic samples this is where the jump lands
    vt[-1], vout[-1], v3[-1] = vt[0], vout[0], v3[0]
    return _assemble_ring(curve, vt, vout, v3)


def ring_minimizer(R: float, kappa: float, curve: Curve, sign: int = 1) -> DirectorField:
    """Constant-in-frame minimiser ``-+ (R kappa/omega) t +- (1/omega) b``."""
    w = _omega(R, kappa)
    return ring_family(R, kappa, 0.0, sign / w, 0.0, curve)


def _rotation_coeffs(R, kappa):
    w = _omega(R, kappa)
    return 1.0 / w, R * kappa / w


def ring_rotated(field: DirectorField, curve: Curve, kappa: float) -> np.ndarray:
    """Rotated field ``Rx(alpha) Rz(phi) v`` with ``alpha = arctan(R kappa)``.

    In outward-frame components this is ``(v_out, c v_t + s v_3, -s v_t + c v_3)``.
    """
    R = curve.params["radius"]
    _ring_angle(curve)
    c, s = _rotation_coeffs(R, kappa)
    F = curve.frame
    vt = np.sum(field.v * F.t, 1)
    vout = -np.sum(field.v * F.n, 1)
    v3 = np.sum(field.v * F.b, 1)
    return np.stack([vout, c * vt + s * v3, -s * vt + c * v3], axis=1)


def ring_unrotated(vr, curve: Curve, kappa: float) -> DirectorField:
    """Inverse of :func:`ring_rotated`."""
    R = curve.params["radius"]
    _ring_angle(curve)
    vr = np.asarray(vr, dtype=float)
    c, s = _rotation_coeffs(R, kappa)
    vout = vr[:, 0]
    vt = c * vr[:, 1] - s * vr[:, 2]
    v3 = s * vr[:, 1] + c * vr[:, 2]
    return _assemble_ring(curve, vt, vout, v3)


def spherical_to_rotated(theta, psi) -> np.ndarray:
    """``(sin th cos psi, -sin th sin psi, cos th)``.

    The minus sign makes the rotated energy read
    ``theta'^2 + sin^2 theta (psi' - omega)^2``.
    """
    theta = np.asarray(theta)
    psi = np.asarray(psi)
    return np.stack([np.sin(theta) * np.cos(psi), -np.sin(theta) * np.sin(psi),
                     np.cos(theta)], axis=-1)


def rotated_ring_energy(vr, R: float, kappa: float) -> float:
    """Energy of a rotated field sampled at ``phi_k = 2 pi k / N`` (``k < N``, periodic).

    Computes ``1/(2R) \\int |vr' + omega e3 x vr|^2 dphi`` with spectral
    derivatives and the trapezoid rule, i.e. in the same units as the
    arclength energy of the unrotated field.
    """
    vr = np.asarray(vr, dtype=float)
    n = len(vr)
    k = np.fft.rfftfreq(n, 1.0 / n)
    if n % 2 == 0:
        k[-1] = 0.0
    d = np.fft.irfft(1j * k[:, None] * np.fft.rfft(vr, axis=0), n=n, axis=0)
    w = _omega(R, kappa)
    r = d + w * np.stack([-vr[:, 1], vr[:, 0], np.zeros(n)], axis=1)
    return float(np.sum(r * r) * (2.0 * np.pi / n) / (2.0 * R))


def sol2_field(n: int, phase: float, curve: Curve, kappa: float) -> DirectorField:
    """Planar spiral ``(sin(n phi + phase), cos(n phi + phase), 0)`` in rotated coordinates."""
    phi = _ring_angle(curve)
    arg = n * phi + phase
    vr = np.stack([np.sin(arg), np.cos(arg), np.zeros_like(arg)], axis=1)
    vr[-1] = vr[0]
    return ring_unrotated(vr, curve, kappa)


def negative_mode(field: DirectorField, curve: Curve, kappa: float) -> np.ndarray:
    """Tangent field ``(-R kappa t + b)/omega`` projected onto the tangent planes.

    At the planar spiral with ``n != omega`` this direction lowers the energy.
    """
    R = curve.params["radius"]
    w = _omega(R, kappa)
    d = (-R * kappa * curve.frame.t + curve.frame.b) / w
    d = d - np.sum(d * field.v, 1, keepdims=True) * field.v
    return d


class ELResidual(NamedTuple):
    theta: np.ndarray
    psi: np.ndarray
    sup_theta: float
    sup_psi: float


def ring_el_residual(theta, psi, R: float, kappa: float) -> ELResidual:
    """Discrete residuals of the angular Euler-Lagrange equations on a periodic grid.

    ``theta`` and ``psi`` hold ``N + 1`` samples at ``phi_k = 2 pi k / N``
    including ``phi = 2 pi``; the end values may differ by multiples of
    ``2 pi``.  Both residuals are the exact gradients (scaled by ``R^2/h``)
    of

        1/(2 R^2) sum_k h [(D theta_k)^2 + S_k (D psi_k - omega)^2],

    with ``S_k`` the average of ``sin^2 theta`` at the segment ends, so they
    are consistent with :func:`spherical_energy`.
    """
    theta = np.asarray(theta, dtype=float)
    psi = np.asarray(psi, dtype=float)
    n = len(theta) - 1
    h = 2.0 * np.pi / n
    w = _omega(R, kappa)
    dth = np.diff(theta) / h
    dps = np.diff(psi) / h - w
    s2 = np.sin(theta[:-1]) ** 2
    S = 0.5 * (s2 + np.roll(s2, -1))
    prev = lambda a: np.roll(a, 1)  # noqa: E731  segment k-1 for node k (cyclic)
    th = theta[:-1]
    r1 = -(dth - prev(dth)) / h + np.sin(th) * np.cos(th) * 0.5 * (dps**2 + prev(dps) ** 2)
    r2 = -(S * dps - prev(S * dps)) / h
    return ELResidual(r1, r2, float(np.max(np.abs(r1))), float(np.max(np.abs(r2))))


def spherical_energy(theta, psi, R: float, kappa: float) -> float:
    """Discrete angular energy matching :func:`ring_el_residual`."""
    theta = np.asarray(theta, dtype=float)
    psi = np.asarray(psi, dtype=float)
    n = len(theta) - 1
    h = 2.0 * np.pi / n
    w = _omega(R, kappa)
    s2 = np.sin(theta[:-1]) ** 2
    S = 0.5 * (s2 + np.roll(s2, -1))
    return float(np.sum(h * ((np.diff(theta) / h) ** 2 + S * (np.diff(psi) / h - w) ** 2))
                 / (2.0 * R * R))


# --- ring with magnetostatics ---------------------------------------------------


def demag_gamma(R: float, kappa: float, demag_coefficient: float = DISK_COEFFICIENT) -> float:
    """Positive root of ``R kappa g^2 + (1 - R^2 kappa^2 - m R^2) g - R kappa = 0``.

    With ``m = 1/(2 pi)`` this is the disk value; ``m = 0`` gives ``R kappa``.
    """
    if kappa == 0:
        raise ValueError("kappa = 0 makes the formula singular; the DMI-free ring "
                         "has its own theory and is not covered here")
    if R <= 0 or kappa < 0:
        raise ValueError("need R > 0 and kappa > 0")
    rk = R * kappa
    c = rk * rk + demag_coefficient * R * R - 1.0
    return (c + math.sqrt(c * c + 4.0 * rk * rk)) / (2.0 * rk)


def ring_demag_solution(R: float, kappa: float, curve: Curve, sign: int = 1,
                        demag_coefficient: float = DISK_COEFFICIENT) -> tuple[float, DirectorField]:
    """``gamma`` and the field ``-+ gamma/sqrt(1+g^2) t +- 1/sqrt(1+g^2) b``."""
    g = demag_gamma(R, kappa, demag_coefficient)
    a = 1.0 / math.sqrt(1.0 + g * g)
    npts = len(curve.s)
    vt = np.full(npts, -sign * g * a)
    v3 = np.full(npts, sign * a)
    return g, _assemble_ring(curve, vt, np.zeros(npts), v3)
