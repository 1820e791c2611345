import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from curvemag import _kernels
from curvemag import cross_section as cs
from curvemag.errors import GeometryError, NormalizationError

DISK_M = 1 / (2 * np.pi)


def edge_pair_oracle(verts):
    """Boundary-convention matrix of a polygon by adaptive quadrature over edge pairs."""
    verts = np.asarray(verts, float)
    edges = np.roll(verts, -1, axis=0) - verts
    lens = np.linalg.norm(edges, axis=1)
    normals = np.stack([edges[:, 1], -edges[:, 0]], axis=1) / lens[:, None]
    S = np.zeros((2, 2))
    for i in range(len(verts)):
        for j in range(len(verts)):
            if i == j:
                L = lens[i]
                val = L * L * (math.log(L) - 1.5)
            else:
                def f(v, u, i=i, j=j):
                    p = verts[i] + u * edges[i]
                    q = verts[j] + v * edges[j]
                    return math.log(max(np.hypot(*(p - q)), 1e-300))
                val = integrate.dblquad(f, 0, 1, 0, 1, epsabs=1e-12, epsrel=1e-12)[0]
                val *= lens[i] * lens[j]
            S += np.outer(normals[i], normals[j]) * val
    return -S / (2 * np.pi)


def test_unit_disk_matches_coefficient():
    M = cs.demag_matrix(cs.disk(), 2048).matrix
    assert abs(M[0, 0] - DISK_M) <= 1e-5
    assert abs(M[1, 1] - DISK_M) <= 1e-5
    assert abs(M[0, 1]) < 1e-12


def test_disk_richardson_of_midpoint_rule_agrees():
    # independent route: first-order self term, extrapolated
    vals = [cs.demag_matrix(cs.disk(), p, self_term="midpoint").matrix[0, 0]
            for p in (256, 512, 1024, 2048)]
    ext = cs.richardson(vals, 2.0, orders=(1, 2, 3))
    assert abs(ext - DISK_M) < 1e-7


def test_midpoint_rule_converges_monotonically():
    errs = [abs(cs.demag_matrix(cs.disk(), p, self_term="midpoint").matrix[0, 0] - DISK_M)
            for p in (64, 128, 256, 512)]
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_boundary_convention_trace_equals_area():
    for q in (cs.disk(), cs.square(), cs.polygon([[0, 0], [2, 0], [2, 0.5], [0, 0.5]])):
        B = cs.demag_matrix(q, 1024, convention="boundary").matrix
        assert np.trace(B) == pytest.approx(1.0, abs=2e-5)


def test_square_is_isotropic():
    M = cs.demag_matrix(cs.square(), 2048).matrix
    assert abs(M[0, 1]) < 1e-10
    assert np.allclose(np.diag(M), DISK_M, atol=1e-5)
    R = cs.demag_matrix(cs.square().rotated(0.3), 2048).matrix
    assert np.allclose(R, M, atol=1e-5)


def test_rectangle_against_edge_pair_oracle():
    q = cs.polygon([[0, 0], [2, 0], [2, 0.5], [0, 0.5]])
    B = cs.demag_matrix(q, 2048, convention="boundary").matrix
    ref = edge_pair_oracle(q.vertices)
    assert np.allclose(B, ref, atol=1e-5)
    # long axis along x is the easy direction
    assert B[0, 0] < B[1, 1]


def test_requires_unit_area():
    with pytest.raises(NormalizationError):
        cs.demag_matrix(cs.disk(1.0), 256)
    with pytest.raises(ValueError):
        cs.demag_matrix(cs.disk(), 32)
    assert cs.disk(2.0).normalized().area == pytest.approx(1.0)


def test_backends_agree():
    if "compiled" not in _kernels.BACKENDS:
        pytest.skip("compiled extension not built")
    bp = cs.square().panels(300)
    sv = cs.self_panel_values(bp.weights, "corrected")
    args = (np.ascontiguousarray(bp.nodes), np.ascontiguousarray(bp.normals), bp.weights, sv)
    a = _kernels.BACKENDS["python"].boundary_log_sum(*args)
    b = _kernels.BACKENDS["compiled"].boundary_log_sum(*args)
    assert np.allclose(a, b, atol=1e-12, rtol=1e-12)


def test_panels_divergence_area():
    q = cs.polygon([[0, 0], [3, 0], [1, 2]])
    assert q.panels(99).divergence_area() == pytest.approx(q.area)
    assert q.panels(99).weights.sum() == pytest.approx(3 + math.hypot(2, 2) + math.hypot(1, 2))


def test_polygon_validation(tmp_path):
    with pytest.raises(GeometryError):
        cs.polygon([[0, 0], [0, 1], [1, 0]])  # clockwise
    with pytest.raises(GeometryError):
        cs.polygon([[0, 0], [1, 1]])
    p = tmp_path / "q.csv"
    p.write_text("x,y\n0,0\n1,0\n1,1\n0,1\n")
    assert cs.read_polygon_csv(p).area == pytest.approx(1.0)


def test_convergence_table():
    rows = cs.demag_convergence(cs.disk(), [64, 128, 256])
    assert rows[0]["diff"] is None
    assert rows[2]["diff"] < rows[1]["diff"]


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_magnetostatic_density_nonnegative(x, y, z):
    v = np.array([x, y, z])
    if np.linalg.norm(v) < 1e-6:
        return
    v /= np.linalg.norm(v)
    n, b = np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0])
    for q in (cs.disk(), cs.square(), cs.polygon([[0, 0], [2, 0], [2, 0.5], [0, 0.5]])):
        M = cs.demag_matrix(q.normalized(), 64)
        assert cs.magnetostatic_density(M, v, n, b) >= -1e-12


def test_operator_matches_density(rng):
    M = cs.demag_matrix(cs.polygon([[0, 0], [2, 0], [2, 0.5], [0, 0.5]]).normalized(), 128)
    v = rng.normal(size=(5, 3))
    n = np.tile([0.0, 1.0, 0.0], (5, 1))
    b = np.tile([0.0, 0.0, 1.0], (5, 1))
    A = cs.magnetostatic_operator(M, n, b)
    assert np.allclose(0.5 * np.einsum("ni,nij,nj->n", v, A, v),
                       cs.magnetostatic_density(M, v, n, b))
    assert np.allclose(np.einsum("nij,nj->ni", A, v), cs.magnetostatic_gradient(M, v, n, b))
