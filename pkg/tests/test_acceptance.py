"""Acceptance suite: one PASS/FAIL line per criterion, with timing.

Run with ``pytest tests/test_acceptance.py -v``; the lines are repeated in
the "acceptance criteria" section of the terminal summary.
"""
import contextlib
import math
import time

import numpy as np
from helpers import ACCEPTANCE_LINES, fd_directional, random_tangent, unique_dot

from curvemag import analytic as an, cross_section as cs, dimension3d as d3, geometry as geo
from curvemag import optimizer as op, perturbation as pt, reduced_energy as re

SQRT3 = math.sqrt(3.0)
PERIODIC = re.BoundaryCondition("periodic")


@contextlib.contextmanager
def criterion(num, title, budget):
    rec = {"detail": ""}
    t0 = time.perf_counter()

    def report(ok):
        dt = time.perf_counter() - t0
        fast = dt <= budget
        status = "PASS" if ok and fast else "FAIL"
        slow = "" if fast else "  OVER BUDGET"
        line = f"[{num:2d}] {status}  {title}: {rec['detail']}  ({dt:.2f} s / {budget:g} s){slow}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return fast

    try:
        yield rec
    except BaseException:
        report(False)
        raise
    assert report(True), f"criterion {num} exceeded its {budget} s budget"


def test_c01_disk_demag_coefficient():
    with criterion(1, "disk demag m = 1/(2 pi)", 10) as rec:
        M = cs.demag_matrix(cs.disk(), 2048).matrix
        err = max(abs(M[0, 0] - 1 / (2 * np.pi)), abs(M[1, 1] - 1 / (2 * np.pi)))
        # independent route: the first-order midpoint self term, extrapolated
        mid = [cs.demag_matrix(cs.disk(), p, self_term="midpoint").matrix[0, 0]
               for p in (256, 512, 1024, 2048)]
        rich = cs.richardson(mid, 2.0, orders=(1, 2, 3))
        rec["detail"] = (f"m = {M[0, 0]:.9f}, |m - 1/(2pi)| = {err:.2e} <= 1e-5, "
                         f"off-diag {abs(M[0, 1]):.1e}, Richardson {rich:.9f}")
        assert err <= 1e-5
        assert abs(M[0, 1]) <= 1e-10
        assert abs(rich - M[0, 0]) <= 1e-5


def test_c02_dmi_anisotropy_vanishes():
    with criterion(2, "DMI anisotropy vanishes", 1) as rec:
        rng = np.random.default_rng(2)
        s = rng.normal(size=(10_000, 3))
        s /= np.linalg.norm(s, axis=1, keepdims=True)
        t = rng.normal(size=(10_000, 3))
        t /= np.linalg.norm(t, axis=1, keepdims=True)
        worst = 0.0
        for kappa in (0.36, 1.0, 2.5):
            worst = max(worst, float(np.max(np.abs(pt.anisotropy_density(pt.DMI(kappa), s, t)))))
        rec["detail"] = f"max |density| over 3 x 10^4 samples = {worst:.1e} <= 1e-14"
        assert worst <= 1e-14


def test_c03_domain_wall():
    with criterion(3, "domain wall energy and rate", 60) as rec:
        c = geo.line(80.0, 4000)
        demag = cs.demag_matrix(cs.disk(), 2048)
        pin = re.BoundaryCondition.pinned((-1, 0, 0), (1, 0, 0))
        f0 = op.initial_field(c, "wall_ansatz", pin, width=2.0)
        rep = op.minimize(f0, c, pt.DMI(0.36), demag)
        q = 1 / (4 * np.pi)
        e_exact = 2 * math.sqrt(2 * q)
        fit = an.fit_wall_rate(rep.field, c, q)
        de = rep.energy.total - e_exact
        rec["detail"] = (f"E = {rep.energy.total:.7f} (target {e_exact:.6f}, diff {de:.1e} <= 1e-4), "
                         f"rate = {fit.rate:.6f} (target {fit.expected:.6f}, rel {fit.relative_error:.1e}"
                         f" <= 1e-2; alternative 1/sqrt(4 pi) = {fit.alternative:.6f}), "
                         f"{rep.iterations} iters")
        assert rep.converged
        assert abs(de) <= 1e-4
        assert fit.relative_error <= 1e-2


def test_c04_ring_zero_energy_family():
    with criterion(4, "ring zero-energy family", 30) as rec:
        c = geo.ring(1.0, 1024)
        samples = [(0.0, 0.5, 0.0), (0.6, 0.4, 0.3), (-0.8, 0.3, 1.9), (1.0, 0.0, 4.0),
                   (0.3, -math.sqrt(1 - 0.09) / 2, 2.5)]
        worst = max(re.energy(an.ring_family(1.0, SQRT3, A, B, ph, c), c, pt.DMI(SQRT3)).total
                    for A, B, ph in samples)
        forced = an.ring_family(1.0, 1.0, 0.5, math.sqrt(0.75 / 2), 0.0, c, force=True)
        ef = re.energy(forced, c, pt.DMI(1.0)).total
        rec["detail"] = (f"max E over 5 samples = {worst:.1e} <= 1e-6; "
                         f"forced non-quantized E = {ef:.3g} >= 1e-3")
        assert worst <= 1e-6
        assert ef >= 1e-3


def test_c05_ring_constant_minimizers():
    with criterion(5, "ring constant minimizers from random starts", 60) as rec:
        c = geo.ring(1.0, 128)
        branches = [an.ring_minimizer(1.0, 1.0, c, s).v for s in (1, -1)]
        worst_e = worst_d = 0.0
        hits = {1: 0, -1: 0}
        for seed in range(20):
            rep = op.minimize(op.initial_field(c, "random", PERIODIC, seed=seed), c, pt.DMI(1.0))
            assert rep.converged, f"seed {seed}: {rep.message}"
            d = [float(np.max(np.abs(rep.field.v - b))) for b in branches]
            hits[1 if d[0] < d[1] else -1] += 1
            worst_e = max(worst_e, rep.energy.total)
            worst_d = max(worst_d, min(d))
        rec["detail"] = (f"20/20 converged, max E = {worst_e:.1e} <= 1e-8, max distance to "
                         f"nearest branch {worst_d:.1e}, branches hit +{hits[1]}/-{hits[-1]}")
        assert worst_e <= 1e-8
        assert worst_d <= 1e-3


def _probes(n, kappa):
    c = geo.ring(1.0, 256)
    f = an.sol2_field(n, 0.0, c, kappa)
    vals = [op.hessian_probe(f, c, pt.DMI(kappa), None, d)
            for d in op.probe_directions(f, c, 50)]
    d = an.negative_mode(f, c, kappa)
    d /= math.sqrt(float(np.sum(d * d)) * c.h)
    return np.array(vals), op.hessian_probe(f, c, pt.DMI(kappa), None, d)


def test_c06_saddle_certification():
    with criterion(6, "planar spiral saddle certification", 60) as rec:
        saddle, mode_s = _probes(1, 1.0)
        stable, mode_t = _probes(2, SQRT3)
        rec["detail"] = (f"omega^2=2: min of 50 probes {saddle.min():.3g} < -1e-4 "
                         f"(negative mode {mode_s:.3g}); omega^2=4: min of 50 probes "
                         f"{stable.min():.3g} >= -1e-6")
        assert len(saddle) == len(stable) == 50
        assert saddle.min() < -1e-4
        assert stable.min() >= -1e-6


def test_c07_ring_with_magnetostatics():
    with criterion(7, "ring with magnetostatics is a local minimum", 60) as rec:
        c = geo.ring(1.0, 1024)
        demag = cs.demag_matrix(cs.disk(), 2048)
        m = 0.5 * float(np.trace(demag.matrix))
        model = pt.DMI(0.36)
        gamma, f = an.ring_demag_solution(1.0, 0.36, c, demag_coefficient=m)
        g = re.gradient(f, c, model, demag)
        # nodal gradient and the same per unit length (divided by h)
        g_sup = float(np.max(np.abs(g)))
        g_l2 = g_sup / c.h
        e0 = re.energy(f, c, model, demag).total
        rng = np.random.default_rng(7)
        # 50 smooth (low Fourier modes) and 50 nodal white-noise directions,
        # each scaled to pointwise size 1e-2
        dirs = op.probe_directions(f, c, 50, seed=7)
        dirs += [random_tangent(f, rng) for _ in range(50)]
        rises = []
        for d in dirs:
            d = d / np.max(np.linalg.norm(d, axis=1))
            rises.append(re.energy(re.retract(f, d, 1e-2), c, model, demag).total - e0)
        rises = np.array(rises)
        raised = int(np.sum(rises > 0))
        rec["detail"] = (f"gamma = {gamma:.5f}, projected gradient sup {g_sup:.1e} "
                         f"(per unit length {g_l2:.1e}) <= 1e-6; {raised}/{len(rises)} "
                         f"perturbations raise E (min rise smooth {rises[:50].min():.2e}, "
                         f"nodal {rises[50:].min():.2e})")
        assert len(rises) == 100
        assert g_l2 <= 1e-6
        assert np.all(rises > 0)


def test_c08_gamma_convergence():
    with criterion(8, "thin-tube gap decreases", 300) as rec:
        study = d3.gamma_convergence_study(lambda c: an.ring_minimizer(1.0, 0.36, c),
                                           geo.ring(1.0, 16), pt.DMI(0.36), cs.disk(),
                                           [0.1, 0.05, 0.025, 0.0125])
        gaps = study.gaps
        rec["detail"] = ("gaps " + ", ".join(f"{g:.2e}" for g in gaps)
                         + f"; strictly decreasing, last/first = {gaps[-1] / gaps[0]:.3f} < 0.25,"
                         f" slope {study.observed_slope():.2f}")
        assert study.strictly_decreasing
        assert gaps[-1] < gaps[0] / 4


def test_c09_gradient_finite_differences():
    with criterion(9, "gradient vs finite differences", 60) as rec:
        rng = np.random.default_rng(9)
        curves = [(geo.line(3.0, 30), None), (geo.ring(1.3, 32), PERIODIC),
                  (geo.helix(1.0, 0.5, 1.5, 40), None)]
        models = [pt.DMI(0.7), pt.Ado(1.3), pt.Linear(rng.normal(size=27) * 0.4)]
        demag = cs.demag_matrix(cs.square(), 256)
        pin = re.BoundaryCondition.pinned((-1, 0, 0), (1, 0, 0))
        worst = 0.0
        for i in range(100):
            curve, bc = curves[i % 3]
            model = models[(i // 3) % 3]
            if curve.kind == "line" and i % 2:
                bc = pin
            dm = demag if i % 4 >= 2 else None
            f = re.DirectorField.from_vectors(rng.normal(size=(len(curve.s), 3)), bc)
            d = random_tangent(f, rng)
            an_ = unique_dot(re.gradient(f, curve, model, dm), d, f.bc.kind == "periodic")
            fd = fd_directional(lambda x: re.energy(x, curve, model, dm).total, f, d)
            worst = max(worst, abs(fd - an_) / abs(an_))
        rec["detail"] = f"100 fields over 3 curves x 3 models: max relative error {worst:.1e} <= 1e-6"
        assert worst <= 1e-6


def test_c10_jacobian_identities():
    with criterion(10, "tube chart Jacobian identities", 1) as rec:
        rng = np.random.default_rng(10)
        worst_inv = worst_det = 0.0
        total = 0
        for c in (geo.ring(1.3, 200), geo.helix(1.0, 0.6, 1.5, 200)):
            rho = 0.8
            for frac in (0.05, 0.3, 0.6, 0.9, 0.99):
                eps = frac / (np.max(c.frame.curvature) * rho)
                chart = geo.TubeChart(c, eps, rho)
                idx = rng.integers(0, len(c.s), 100)
                r = rho * np.sqrt(rng.uniform(size=100))
                a = rng.uniform(0, 2 * np.pi, 100)
                z = np.stack([r * np.cos(a), r * np.sin(a)], 1)
                jac = geo.tube_jacobians(chart, idx, z)
                worst_inv = max(worst_inv, float(np.max(np.abs(jac.matrix @ jac.inverse - np.eye(3)))))
                alpha = 1 - eps * c.frame.curvature[idx] * z[:, 0]
                worst_det = max(worst_det, float(np.max(np.abs(np.linalg.det(jac.matrix)
                                                               - eps**2 * alpha))))
                total += 100
        rec["detail"] = (f"{total} points: max |J J^-1 - I| = {worst_inv:.1e}, "
                         f"max |det J - eps^2 alpha| = {worst_det:.1e}, both <= 1e-12")
        assert total == 1000
        assert worst_inv <= 1e-12 and worst_det <= 1e-12

