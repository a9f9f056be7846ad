"""Zero-temperature state-evolution solver for the replica order parameters.

One problem instance is a ModelParams bundle; solve_fixed_point damps the
two-sided update (overlaps -> conjugates -> overlaps) until the overlap
vector stops moving.  The conjugate ("hat") update integrates the channel
moments over a Gauss-Hermite grid; for square loss the integrals collapse
to closed forms which double as the quadrature oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate
from scipy.special import erf

from . import _kernels
from .channels import (
    SQUARE,
    LinearGaussian,
    LossModel,
    Sign,
    TeacherChannel,
    fused_label_weights,
)
from .errors import DomainError, NumericalError, StateError, UsageError
from .quadrature import gauss_hermite
from .spectral import SpectralLaw, stieltjes, stieltjes_derivative

DEFAULT_XI_NODES = 101
DEFAULT_LABEL_NODES = 51
DEFAULT_DAMPING = 0.5
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 10000
_MAX_REDAMP = 5

SIGMA_REGISTRY = {
    "sign": np.sign,
    "erf": erf,
    "identity": lambda z: z,
    "tanh": np.tanh,
}


@dataclass(frozen=True)
class ModelParams:
    """Scalar description of one asymptotic learning problem."""

    alpha: float
    gamma: float
    lam: float
    rho: float
    kappa0: float
    kappa1: float
    kappa_star: float
    channel: TeacherChannel
    loss: LossModel
    spectral: SpectralLaw

    def __post_init__(self):
        if not self.alpha > 0.0:
            raise DomainError("alpha = n/p must be positive")
        if not self.gamma > 0.0:
            raise DomainError("gamma = d/p must be positive")
        if not self.lam > 0.0:
            raise DomainError("the zero-temperature equations divide by lam + vhat_w; "
                              "use a small positive floor such as 1e-4 instead of lam = 0")
        if not self.rho > 0.0:
            raise DomainError("teacher norm rho must be positive")
        if abs(self.kappa0) > 1e-8:
            raise DomainError("the theory requires a centred nonlinearity (kappa0 = 0)")
        if self.kappa_star < 0.0:
            raise DomainError("kappa_star must be nonnegative")
        if abs(self.spectral.gamma - self.gamma) > 1e-9 * max(1.0, self.gamma):
            raise DomainError("spectral law aspect ratio must equal gamma")


@dataclass(frozen=True)
class Overlaps:
    v_s: float
    q_s: float
    m_s: float
    v_w: float
    q_w: float

    def as_array(self) -> np.ndarray:
        return np.array([self.v_s, self.q_s, self.m_s, self.v_w, self.q_w])

    @staticmethod
    def from_array(a) -> "Overlaps":
        return Overlaps(*(float(x) for x in a))


@dataclass(frozen=True)
class Hats:
    vhat_s: float
    qhat_s: float
    mhat_s: float
    vhat_w: float
    qhat_w: float

    def as_array(self) -> np.ndarray:
        return np.array([self.vhat_s, self.qhat_s, self.mhat_s, self.vhat_w, self.qhat_w])


@dataclass(frozen=True)
class SolverReport:
    converged: bool
    iterations: int
    residual: float
    damping_used: float


DEFAULT_INIT = Overlaps(v_s=1.0, q_s=0.5, m_s=0.01, v_w=1.0, q_w=0.5)


def order_parameters(ov: Overlaps, p: ModelParams) -> tuple[float, float, float]:
    """(V, Q, M): the kappa-mixed variance, norm and alignment."""
    k1sq = p.kappa1**2
    kssq = p.kappa_star**2
    v = k1sq * ov.v_s + kssq * ov.v_w
    q = k1sq * ov.q_s + kssq * ov.q_w
    m = p.kappa1 * ov.m_s
    return v, q, m


def kappa_coefficients(sigma, *, tol: float = 1e-12) -> tuple[float, float, float]:
    """Gaussian moments (kappa0, kappa1, kappa_star) of a scalar nonlinearity.

    Adaptive quadrature against the normal density, split at the origin so
    kinked activations (sign, relu, abs) converge; plain Gauss-Hermite
    stalls near 1e-3 accuracy on those.
    """
    def gauss_expect(f):
        g = lambda z: f(z) * np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)
        lo, _ = integrate.quad(g, -np.inf, 0.0, epsabs=tol, epsrel=tol, limit=200)
        hi, _ = integrate.quad(g, 0.0, np.inf, epsabs=tol, epsrel=tol, limit=200)
        return lo + hi

    k0 = gauss_expect(sigma)
    k1 = gauss_expect(lambda z: z * sigma(z))
    m2 = gauss_expect(lambda z: sigma(z) ** 2)
    rad = m2 - k0 * k0 - k1 * k1
    if rad < -1e-12:
        raise NumericalError(f"negative variance radicand {rad}; quadrature under-resolved")
    return k0, k1, float(np.sqrt(max(rad, 0.0)))


def _teacher_variance(q: float, m: float, rho: float) -> float:
    v0 = rho - m * m / q
    if v0 < -1e-12:
        raise StateError("teacher conditional variance went negative beyond roundoff")
    return max(v0, 1e-14)


def hat_update(ov: Overlaps, p: ModelParams,
               xi_nodes: int = DEFAULT_XI_NODES,
               label_nodes: int = DEFAULT_LABEL_NODES) -> Hats:
    """Conjugate update: Gauss-Hermite over the Gaussian field xi composed
    with the channel's label scheme."""
    v, q, m = order_parameters(ov, p)
    if not (q > 0.0 and v > 0.0):
        raise StateError("iteration left the feasible region (Q or V nonpositive)")
    v0 = _teacher_variance(q, m, p.rho)
    xi, wxi = gauss_hermite(xi_nodes)
    omega0 = (m / np.sqrt(q)) * xi
    omega1 = np.sqrt(q) * xi

    y, wz, wdz = fused_label_weights(p.channel, omega0, v0, label_nodes)
    wz = wxi[:, None] * wz
    wdz = wxi[:, None] * wdz
    om1 = np.broadcast_to(omega1[:, None], y.shape)

    iv, iq, im = _kernels.hat_channel_moments(
        y.ravel(), np.ascontiguousarray(om1).ravel(),
        np.ascontiguousarray(wz).ravel(), np.ascontiguousarray(wdz).ravel(),
        v, p.loss.loss_kind)

    a, g = p.alpha, p.gamma
    k1sq = p.kappa1**2
    kssq = p.kappa_star**2
    return Hats(
        vhat_s=a * k1sq / (g * v) * iv,
        qhat_s=a * k1sq / (g * v * v) * iq,
        mhat_s=a * p.kappa1 / (g * v) * im,
        vhat_w=a * kssq / v * iv,
        qhat_w=a * kssq / (v * v) * iq,
    )


def analytic_hat_update_square(ov: Overlaps, p: ModelParams) -> Hats:
    """Closed-form conjugates for square loss with linear or sign teachers.

    Serves both as the solver fast path and as the oracle hat_update is
    checked against.  The sign-teacher form is only printed for rho = 1
    and is refused otherwise.
    """
    if p.loss.loss != SQUARE:
        raise UsageError("closed-form hats exist only for the square loss")
    v, q, m = order_parameters(ov, p)
    if isinstance(p.channel, LinearGaussian):
        c = p.rho + p.channel.delta + q - 2.0 * m
        mhat = p.alpha * p.kappa1 / (p.gamma * (1.0 + v))
    elif isinstance(p.channel, Sign):
        if abs(p.rho - 1.0) > 1e-12:
            raise UsageError("sign-teacher closed form assumes rho = 1")
        c = 1.0 + q - 2.0 * np.sqrt(2.0 / np.pi) * m
        mhat = p.alpha * p.kappa1 * np.sqrt(2.0 / np.pi) / (p.gamma * (1.0 + v))
    else:
        raise UsageError(f"no closed form for channel {type(p.channel).__name__}")
    a = p.alpha
    k1sq = p.kappa1**2
    kssq = p.kappa_star**2
    one_v = 1.0 + v
    return Hats(
        vhat_s=a * k1sq / (p.gamma * one_v),
        qhat_s=a * k1sq * c / (p.gamma * one_v**2),
        mhat_s=mhat,
        vhat_w=a * kssq / one_v,
        qhat_w=a * kssq * c / one_v**2,
    )


def closed_form_available(p: ModelParams) -> bool:
    if p.loss.loss != SQUARE:
        return False
    if isinstance(p.channel, Sign):
        return abs(p.rho - 1.0) <= 1e-12
    return isinstance(p.channel, LinearGaussian)


def overlap_update(h: Hats, p: ModelParams) -> Overlaps:
    """Prior-side update through the Stieltjes transform of the feature law."""
    if not h.vhat_s > 0.0:
        raise StateError("vhat_s must be positive")
    lam_w = p.lam + h.vhat_w
    if not lam_w > 0.0:
        raise StateError("lam + vhat_w must be positive; raise the lambda floor")
    z = lam_w / h.vhat_s
    gz = stieltjes(p.spectral, z)
    gpz = stieltjes_derivative(p.spectral, z)
    b1 = 1.0 - z * gz                       # E[t/(t+z)]
    b2 = 1.0 - 2.0 * z * gz + z * z * gpz   # E[t^2/(t+z)^2]
    b3 = -z * gz + z * z * gpz              # -E[z t/(t+z)^2], <= 0
    b4 = 1.0 / p.gamma - 1.0 + z * gz
    b5 = 1.0 / p.gamma - 1.0 + z * z * gpz
    ms2 = h.mhat_s**2 + h.qhat_s
    return Overlaps(
        v_s=b1 / h.vhat_s,
        q_s=ms2 / h.vhat_s**2 * b2 - h.qhat_w / (lam_w * h.vhat_s) * b3,
        m_s=h.mhat_s / h.vhat_s * b1,
        v_w=p.gamma / lam_w * b4,
        q_w=p.gamma * h.qhat_w / lam_w**2 * b5 - p.gamma * ms2 / (lam_w * h.vhat_s) * b3,
    )


def _feasible(ov: Overlaps, p: ModelParams) -> bool:
    v, q, _m = order_parameters(ov, p)
    return v > 0.0 and q > 0.0 and ov.v_s > 0.0 and ov.v_w > 0.0


def solve_fixed_point(p: ModelParams,
                      init: Overlaps | None = None,
                      damping: float = DEFAULT_DAMPING,
                      tol: float = DEFAULT_TOL,
                      max_iter: int = DEFAULT_MAX_ITER,
                      xi_nodes: int = DEFAULT_XI_NODES,
                      label_nodes: int = DEFAULT_LABEL_NODES,
                      use_closed_form: bool | None = None,
                      ) -> tuple[Overlaps, Hats, SolverReport]:
    """Damped iteration ov <- (1-theta) ov + theta * T(ov) to a fixed point.

    Nonconvergence is reported, not raised; only an infeasible state that
    survives repeated damping cuts aborts.  Warm-start by passing the
    previous fixed point as ``init``.
    """
    if not 0.0 < damping <= 1.0:
        raise DomainError("damping must lie in (0, 1]")
    if not tol > 0.0:
        raise DomainError("tol must be positive")
    if use_closed_form is None:
        use_closed_form = closed_form_available(p)
    elif use_closed_form and not closed_form_available(p):
        raise UsageError("no closed-form channel for this loss/teacher pair")

    def hats_of(ov: Overlaps) -> Hats:
        if use_closed_form:
            return analytic_hat_update_square(ov, p)
        return hat_update(ov, p, xi_nodes, label_nodes)

    ov = init if init is not None else DEFAULT_INIT
    if not _feasible(ov, p):
        raise StateError("initial overlaps are infeasible for these parameters")

    residual = np.inf
    min_theta = damping
    hats = hats_of(ov)
    for it in range(1, max_iter + 1):
        proposal = overlap_update(hats, p).as_array()
        cur = ov.as_array()
        # residual of the full (undamped) map, so that a converged state
        # moves by at most tol under one more complete update
        residual = float(np.max(np.abs(proposal - cur)))
        if residual <= tol:
            return ov, hats, SolverReport(True, it, residual, min_theta)
        theta = damping
        for _ in range(_MAX_REDAMP + 1):
            blended = Overlaps.from_array((1.0 - theta) * cur + theta * proposal)
            if _feasible(blended, p):
                break
            theta *= 0.5
        else:
            raise NumericalError(
                f"state stayed infeasible after {_MAX_REDAMP} damping cuts at iteration {it}")
        min_theta = min(min_theta, theta)
        ov = blended
        hats = hats_of(ov)
    return ov, hats, SolverReport(False, max_iter, residual, min_theta)


def with_lambda(p: ModelParams, lam: float) -> ModelParams:
    """Copy of the instance at a different ridge strength."""
    return replace(p, lam=lam)
