# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see _corepy for the reference semantics."""
import numpy as np

cimport numpy as cnp
from libc.math cimport expm1, fabs, log, pow

cnp.import_array()

cdef double _SERIES_CUT = 1e-4


cdef inline double _ups(double r) noexcept nogil:
    if fabs(r) < _SERIES_CUT:
        return r * r * (0.5 + r * (1.0 / 6.0 + r * (1.0 / 24.0 + r / 120.0)))
    return expm1(r) - r


def upsilon(cnp.ndarray r_in):
    cdef cnp.ndarray[double, ndim=1] r = np.ascontiguousarray(r_in, dtype=np.float64).ravel()
    cdef Py_ssize_t n = r.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            out[i] = _ups(r[i])
    return out.reshape(np.shape(r_in))


def inner_batch_generic(double[:, ::1] shifted_log, double[::1] base_log,
                        double[::1] fw, int form):
    cdef Py_ssize_t H = shifted_log.shape[0]
    cdef Py_ssize_t N = shifted_log.shape[1]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(H, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t j, i
    cdef double acc
    with nogil:
        for j in range(H):
            acc = 0.0
            if form == 0:
                for i in range(N):
                    acc += fw[i] * _ups(shifted_log[j, i] - base_log[i])
            else:
                for i in range(N):
                    acc += fw[i] * shifted_log[j, i]
            o[j] = acc
    return out


def inner_batch_cauchy(double gamma, double log_c, double[::1] x,
                       double[::1] base_log, double[::1] fw,
                       double[::1] h, int form):
    cdef Py_ssize_t H = h.shape[0]
    cdef Py_ssize_t N = x.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(H, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t j, i
    cdef double acc, xh, s, g2 = gamma * gamma
    with nogil:
        for j in range(H):
            acc = 0.0
            for i in range(N):
                xh = x[i] + h[j]
                s = log_c - log(g2 + xh * xh)
                if form == 0:
                    acc += fw[i] * _ups(s - base_log[i])
                else:
                    acc += fw[i] * s
            o[j] = acc
    return out


def inner_batch_gaussian(double inv_two_sigma2, double log_c, double[::1] x,
                         double[::1] base_log, double[::1] fw,
                         double[::1] h, int form):
    cdef Py_ssize_t H = h.shape[0]
    cdef Py_ssize_t N = x.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(H, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t j, i
    cdef double acc, xh, s
    with nogil:
        for j in range(H):
            acc = 0.0
            for i in range(N):
                xh = x[i] + h[j]
                s = log_c - inv_two_sigma2 * xh * xh
                if form == 0:
                    acc += fw[i] * _ups(s - base_log[i])
                else:
                    acc += fw[i] * s
            o[j] = acc
    return out


def inner_batch_exp_power(double beta, double delta, double log_z, double[::1] x,
                          double[::1] base_log, double[::1] fw,
                          double[::1] h, int form):
    cdef Py_ssize_t H = h.shape[0]
    cdef Py_ssize_t N = x.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(H, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t j, i
    cdef double acc, xh, s
    with nogil:
        for j in range(H):
            acc = 0.0
            for i in range(N):
                xh = x[i] + h[j]
                s = -delta * pow(1.0 + xh * xh, 0.5 * beta) - log_z
                if form == 0:
                    acc += fw[i] * _ups(s - base_log[i])
                else:
                    acc += fw[i] * s
            o[j] = acc
    return out
