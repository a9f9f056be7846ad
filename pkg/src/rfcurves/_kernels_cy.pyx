# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twin of _kernels_py: elementwise proximal Newton + moment sums."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, log1p

BACKEND = "cython"

DEF MAX_NEWTON = 100
DEF RESIDUAL_TOL = 1e-13


cdef inline double _sigmoid(double u) nogil:
    cdef double e
    if u >= 0.0:
        return 1.0 / (1.0 + exp(-u))
    e = exp(u)
    return e / (1.0 + e)


cdef double _logistic_shift(double y, double omega, double v) nogil:
    # Root of u/v - y*sigmoid(-y*(omega+u)) in [min(0, y v), max(0, y v)],
    # bracketed Newton with the rtsafe step-halving guard.
    cdef double yv = y * v
    cdef double lo = yv if yv < 0.0 else 0.0
    cdef double hi = yv if yv > 0.0 else 0.0
    cdef double u = 0.5 * (lo + hi)
    cdef double dxold = hi - lo
    cdef double dx = dxold
    cdef double s, f, fp, un
    cdef int it
    for it in range(MAX_NEWTON):
        s = _sigmoid(-y * (omega + u))
        f = u / v - y * s
        if fabs(f) <= RESIDUAL_TOL:
            break
        fp = 1.0 / v + s * (1.0 - s)
        if f < 0.0:
            lo = u
        else:
            hi = u
        un = u - f / fp
        if un <= lo or un >= hi or fabs(2.0 * f) > fabs(dxold * fp):
            un = 0.5 * (lo + hi)
        if un == u:
            break  # bracket pinched to float resolution
        dxold = dx
        dx = fabs(un - u)
        u = un
    return u


def logistic_prox_shift(y, omega, double v):
    y_arr = np.ascontiguousarray(np.broadcast_arrays(np.asarray(y, dtype=np.float64),
                                                     np.asarray(omega, dtype=np.float64))[0])
    om_arr = np.ascontiguousarray(np.broadcast_arrays(np.asarray(y, dtype=np.float64),
                                                      np.asarray(omega, dtype=np.float64))[1])
    cdef cnp.ndarray[cnp.float64_t, ndim=1] yf = y_arr.ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] of = om_arr.ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(yf)
    cdef Py_ssize_t i, n = yf.shape[0]
    for i in range(n):
        out[i] = _logistic_shift(yf[i], of[i], v)
    return out.reshape(om_arr.shape)


def hat_channel_moments(y, omega1, wz, wdz, double v, int loss_kind):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] yf = np.ascontiguousarray(y, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] of = np.ascontiguousarray(omega1, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] wzf = np.ascontiguousarray(wz, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] wdf = np.ascontiguousarray(wdz, dtype=np.float64).ravel()
    cdef Py_ssize_t i, n = yf.shape[0]
    cdef double iv = 0.0, iq = 0.0, im = 0.0
    cdef double u, deta, s
    if loss_kind == 0:
        deta = 1.0 / (1.0 + v)
        for i in range(n):
            u = v * (yf[i] - of[i]) / (1.0 + v)
            iv += wzf[i] * (1.0 - deta)
            iq += wzf[i] * u * u
            im += wdf[i] * u
    else:
        for i in range(n):
            u = _logistic_shift(yf[i], of[i], v)
            s = _sigmoid(-yf[i] * (of[i] + u))
            deta = 1.0 / (1.0 + v * s * (1.0 - s))
            iv += wzf[i] * (1.0 - deta)
            iq += wzf[i] * u * u
            im += wdf[i] * u
    return iv, iq, im


def training_loss_moment(y, omega1, wz, double v, int loss_kind):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] yf = np.ascontiguousarray(y, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] of = np.ascontiguousarray(omega1, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] wzf = np.ascontiguousarray(wz, dtype=np.float64).ravel()
    cdef Py_ssize_t i, n = yf.shape[0]
    cdef double acc = 0.0
    cdef double u, eta, t, l
    for i in range(n):
        u = v * (yf[i] - of[i]) / (1.0 + v) if loss_kind == 0 else _logistic_shift(yf[i], of[i], v)
        eta = of[i] + u
        if loss_kind == 0:
            l = 0.5 * (yf[i] - eta) * (yf[i] - eta)
        else:
            t = -yf[i] * eta
            l = t + log1p(exp(-t)) if t > 0.0 else log1p(exp(t))
        acc += wzf[i] * l
    return acc
