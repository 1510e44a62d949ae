# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled step loops; see _kernels_py for the reference semantics."""

import numpy as np

cimport cython


def advance_rank_one(
    double complex[:, ::1] spec,
    const double complex[:, ::1] phase_half,
    const double[::1] decay,
    const double[::1] wgain,
    const double[::1] u,
    const double[::1] ufreq,
    double mcoef,
    double half_dt,
    const double[::1] q,
    const double[::1] p,
    int n_steps,
):
    cdef Py_ssize_t nk = spec.shape[0]
    cdef Py_ssize_t nv = spec.shape[1]
    cdef Py_ssize_t i, k, v
    cdef double complex m, s, before, after, m_mid, z
    with nogil:
        for i in range(n_steps):
            for k in range(nk):
                m = 0
                s = 0
                before = 0
                for v in range(nv):
                    z = spec[k, v] * phase_half[k, v]
                    spec[k, v] = z
                    m = m + u[v] * z
                    s = s + ufreq[v] * z
                    before = before + q[v] * z
                m_mid = mcoef * m - half_dt * s
                after = 0
                for v in range(nv):
                    z = decay[v] * spec[k, v] + wgain[v] * m_mid
                    spec[k, v] = z
                    after = after + q[v] * z
                m = before - after
                for v in range(nv):
                    spec[k, v] = (spec[k, v] + m * p[v]) * phase_half[k, v]


def advance_dense(
    double complex[:, ::1] spec,
    const double complex[:, ::1] phase_half,
    const double[:, ::1] prop,
    const double[::1] q,
    const double[::1] p,
    int n_steps,
):
    cdef Py_ssize_t nk = spec.shape[0]
    cdef Py_ssize_t nv = spec.shape[1]
    cdef Py_ssize_t i, k, v, w
    cdef double complex before, after, m, acc
    scratch_arr = np.empty(nv, dtype=np.complex128)
    cdef double complex[::1] scratch = scratch_arr
    with nogil:
        for i in range(n_steps):
            for k in range(nk):
                before = 0
                for v in range(nv):
                    spec[k, v] = spec[k, v] * phase_half[k, v]
                    before = before + q[v] * spec[k, v]
                for v in range(nv):
                    acc = 0
                    for w in range(nv):
                        acc = acc + prop[v, w] * spec[k, w]
                    scratch[v] = acc
                after = 0
                for v in range(nv):
                    after = after + q[v] * scratch[v]
                m = before - after
                for v in range(nv):
                    spec[k, v] = (scratch[v] + m * p[v]) * phase_half[k, v]
