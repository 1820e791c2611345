# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops; mirrors ``_fallback``."""
import numpy as np

from libc.math cimport log, sqrt


def boundary_log_sum(const double[:, ::1] nodes, const double[:, ::1] normals,
                     const double[::1] weights, const double[::1] self_vals):
    cdef Py_ssize_t P = nodes.shape[0]
    cdef Py_ssize_t j, k
    cdef double s00 = 0.0, s01 = 0.0, s10 = 0.0, s11 = 0.0
    cdef double r00, r01, r10, r11
    cdef double dx, dy, L, wj
    for j in range(P):
        r00 = 0.0
        r01 = 0.0
        r10 = 0.0
        r11 = 0.0
        wj = weights[j]
        for k in range(P):
            if k == j:
                L = self_vals[j]
            else:
                dx = nodes[j, 0] - nodes[k, 0]
                dy = nodes[j, 1] - nodes[k, 1]
                L = 0.5 * log(dx * dx + dy * dy) * wj * weights[k]
            r00 += normals[k, 0] * L
            r01 += normals[k, 1] * L
        s00 += normals[j, 0] * r00
        s01 += normals[j, 0] * r01
        s10 += normals[j, 1] * r00
        s11 += normals[j, 1] * r01
    return np.array([[s00, s01], [s10, s11]])


def chain_dmi(const double[:, ::1] v, const double[:, ::1] t_mid, double h, double kappa,
              double[:, ::1] grad):
    cdef Py_ssize_t n = v.shape[0] - 1
    cdef Py_ssize_t i, d
    cdef double p[3]
    cdef double m[3]
    cdef double r[3]
    cdef double c[3]
    cdef double t0, t1, t2, q, mc, e, fac
    # Neumaier-compensated sum
    cdef double total = 0.0, comp = 0.0, tmp
    for i in range(n):
        for d in range(3):
            p[d] = v[i, d] + v[i + 1, d]
        q = sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2])
        for d in range(3):
            m[d] = p[d] / q
        t0 = t_mid[i, 0]
        t1 = t_mid[i, 1]
        t2 = t_mid[i, 2]
        r[0] = (v[i + 1, 0] - v[i, 0]) / h + kappa * (m[1] * t2 - m[2] * t1)
        r[1] = (v[i + 1, 1] - v[i, 1]) / h + kappa * (m[2] * t0 - m[0] * t2)
        r[2] = (v[i + 1, 2] - v[i, 2]) / h + kappa * (m[0] * t1 - m[1] * t0)
        c[0] = kappa * (t1 * r[2] - t2 * r[1])
        c[1] = kappa * (t2 * r[0] - t0 * r[2])
        c[2] = kappa * (t0 * r[1] - t1 * r[0])
        mc = m[0] * c[0] + m[1] * c[1] + m[2] * c[2]
        fac = h / q
        for d in range(3):
            c[d] = fac * (c[d] - mc * m[d])
            grad[i, d] += c[d] - r[d]
            grad[i + 1, d] += c[d] + r[d]
        e = 0.5 * h * (r[0] * r[0] + r[1] * r[1] + r[2] * r[2])
        tmp = total + e
        if abs(total) >= abs(e):
            comp += (total - tmp) + e
        else:
            comp += (e - tmp) + total
        total = tmp
    return total + comp
