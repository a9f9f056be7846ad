"""Pure-numpy fallback for the hot channel kernels.

Same contract as the compiled module ``_kernels_cy``: the proximal shift
u = eta - omega is solved elementwise by a bracketed (rtsafe-style)
Newton iteration, and the three channel moments are accumulated over a
flattened quadrature grid.  Loss codes: 0 = square, 1 = logistic.
"""

import numpy as np

BACKEND = "python"

_MAX_NEWTON = 100
_RESIDUAL_TOL = 1e-13


def _sigmoid(u):
    out = np.empty_like(u)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    e = np.exp(u[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def logistic_prox_shift(y, omega, v):
    """u solving u/v = y*sigmoid(-y*(omega+u)); the prox is omega + u.

    The stationarity function is strictly increasing in u with a root
    inside [min(0, y*v), max(0, y*v)].  A Newton step is accepted only
    when it stays inside the current bracket and at least halves it,
    otherwise the iterate bisects; this kills the 2-cycles plain
    safeguarded Newton falls into when v is large.
    """
    y = np.asarray(y, dtype=float)
    omega = np.asarray(omega, dtype=float)
    yv = y * v
    lo = np.minimum(0.0, yv)
    hi = np.maximum(0.0, yv)
    u = 0.5 * (lo + hi)
    dxold = hi - lo
    dx = dxold.copy()
    for _ in range(_MAX_NEWTON):
        s = _sigmoid(-y * (omega + u))
        f = u / v - y * s
        done = np.abs(f) <= _RESIDUAL_TOL
        if np.all(done):
            break
        fp = 1.0 / v + s * (1.0 - s)
        lo = np.where(f < 0.0, u, lo)
        hi = np.where(f >= 0.0, u, hi)
        newton = u - f / fp
        bisect = (newton <= lo) | (newton >= hi) | (np.abs(2.0 * f) > np.abs(dxold * fp))
        un = np.where(bisect, 0.5 * (lo + hi), newton)
        un = np.where(done, u, un)  # converged entries stay put
        if np.array_equal(un, u):
            break  # brackets pinched to float resolution
        dxold = dx
        dx = np.abs(un - u)
        u = un
    return u


def _prox_shift(y, omega, v, loss_kind):
    if loss_kind == 0:
        return v * (np.asarray(y, dtype=float) - np.asarray(omega, dtype=float)) / (1.0 + v)
    return logistic_prox_shift(y, omega, v)


def _prox_domega(y, omega_plus_u, v, loss_kind):
    if loss_kind == 0:
        return np.full_like(np.asarray(omega_plus_u, dtype=float), 1.0 / (1.0 + v))
    s = _sigmoid(-np.asarray(y, dtype=float) * omega_plus_u)
    return 1.0 / (1.0 + v * s * (1.0 - s))


def hat_channel_moments(y, omega1, wz, wdz, v, loss_kind):
    """(Iv, Iq, Im) = sums of wz*(1-d_omega eta), wz*u^2, wdz*u over the grid."""
    u = _prox_shift(y, omega1, v, loss_kind)
    deta = _prox_domega(y, np.asarray(omega1, dtype=float) + u, v, loss_kind)
    iv = float(np.sum(wz * (1.0 - deta)))
    iq = float(np.sum(wz * u * u))
    im = float(np.sum(wdz * u))
    return iv, iq, im


def training_loss_moment(y, omega1, wz, v, loss_kind):
    """Sum of wz * loss(y, eta) over the grid."""
    y = np.asarray(y, dtype=float)
    u = _prox_shift(y, omega1, v, loss_kind)
    eta = np.asarray(omega1, dtype=float) + u
    if loss_kind == 0:
        lvals = 0.5 * (y - eta) ** 2
    else:
        lvals = np.logaddexp(0.0, -y * eta)
    return float(np.sum(wz * lvals))
