"""Pure numpy implementations of the hot kernels.

Signatures and results match the compiled ``_ext`` module.
"""
import numpy as np


def boundary_log_sum(nodes, normals, weights, self_vals):
    """``S = sum_{j != k} n_j (x) n_k ln|x_j - x_k| w_j w_k + sum_j n_j (x) n_j self_j``."""
    nodes = np.ascontiguousarray(nodes, dtype=float)
    normals = np.ascontiguousarray(normals, dtype=float)
    w = np.ascontiguousarray(weights, dtype=float)
    diff = nodes[:, None, :] - nodes[None, :, :]
    d2 = np.einsum("jkx,jkx->jk", diff, diff)
    np.fill_diagonal(d2, 1.0)
    L = 0.5 * np.log(d2) * w[:, None] * w[None, :]
    np.fill_diagonal(L, self_vals)
    return np.einsum("ja,jk,kb->ab", normals, L, normals)


def chain_dmi(v, t_mid, h, kappa, grad):
    """Segment term ``sum_i h/2 |(v_{i+1}-v_i)/h + kappa m_i x t_i|^2`` for bulk DMI.

    ``m_i`` is the normalised average of the segment end values.  The ambient
    gradient is accumulated into ``grad`` (shape of ``v``); the energy is
    returned.
    """
    a = v[:-1]
    b = v[1:]
    p = a + b
    q = np.sqrt(np.einsum("ij,ij->i", p, p))
    m = p / q[:, None]
    r = (b - a) / h + kappa * np.cross(m, t_mid)
    c = kappa * np.cross(t_mid, r)
    u = (h / q)[:, None] * (c - np.einsum("ij,ij->i", m, c)[:, None] * m)
    grad[:-1] += u - r
    grad[1:] += u + r
    return 0.5 * h * float(np.sum(np.einsum("ij,ij->i", r, r)))
