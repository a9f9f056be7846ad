"""Scalar observables at the fixed point and the derived search operations.

Maps the converged order parameters to generalisation error and training
loss, optimises the ridge strength, and locates the linear-separability
threshold of logistic regression.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from scipy import integrate

from . import _kernels
from .channels import (
    CLASSIFICATION,
    LOGISTIC_CLASSIFICATION,
    REGRESSION,
    LossModel,
    Sign,
    fused_label_weights,
)
from .errors import DomainError, NumericalError, StateError, UsageError
from .quadrature import gauss_hermite
from .saddle import (
    Hats,
    ModelParams,
    Overlaps,
    SolverReport,
    _teacher_variance,
    order_parameters,
    solve_fixed_point,
    with_lambda,
)
from .spectral import marchenko_pastur, orthogonal_projection

DEFAULT_LAMBDA_GRID = tuple(np.geomspace(1e-6, 1e2, 25))
SEPARABILITY_LAMBDA = 1e-4
SEPARABILITY_COLLAPSE = 0.1


@dataclass(frozen=True)
class TheoryPoint:
    """One solved instance with its error observables."""

    params: ModelParams
    overlaps: Overlaps
    hats: Hats
    eps_g: float
    eps_t: float
    report: SolverReport


def star_parameters(ov: Overlaps, p: ModelParams) -> tuple[float, float]:
    """(M*, Q*): alignment and norm of the effective Gaussian predictor."""
    _v, q, m = order_parameters(ov, p)
    return m, q


def generalisation_error(ov: Overlaps, p: ModelParams) -> float:
    """Asymptotic test error from the fixed-point overlaps.

    Regression: rho + Q* - 2 M*.  Classification: arccos of the
    teacher-student angle over pi.
    """
    m, q = star_parameters(ov, p)
    if p.loss.task == REGRESSION:
        return p.rho + q - 2.0 * m
    if not q > 0.0:
        raise StateError("classification error needs Q* > 0")
    r = m / np.sqrt(p.rho * q)
    if abs(r) > 1.0 + 1e-10:
        raise StateError(f"correlation {r} violates the Cauchy-Schwarz bound")
    return float(np.arccos(np.clip(r, -1.0, 1.0)) / np.pi)


def generalisation_error_quadrature(rho: float, m_star: float, q_star: float,
                                    loss: LossModel) -> float:
    """Quadrature route for the test error, independent of the closed forms.

    Integrates E[(f0(nu) - fhat(lam))^2] / 4^k over the bivariate Gaussian
    with covariance [[rho, M*], [M*, Q*]]: adaptive quadrature over nu
    (split at the sign readout's discontinuity), inner conditional
    expectation done exactly (normal CDF for the sign readout, first two
    moments for the identity readout).
    """
    if not (rho > 0.0 and q_star > 0.0):
        raise StateError("need rho > 0 and Q* > 0")
    s2 = max(q_star - m_star**2 / rho, 1e-14)
    s = np.sqrt(s2)

    def conditional(nu):
        mu = (m_star / rho) * nu
        if loss.task == CLASSIFICATION:
            f0 = 1.0 if nu >= 0 else -1.0
            e_sign = 1.0 - 2.0 * ndtr(-mu / s)    # E[sign(lam) | nu]
            return 2.0 - 2.0 * f0 * e_sign
        return (nu - mu) ** 2 + s2

    def integrand(nu):
        return conditional(nu) * np.exp(-nu * nu / (2.0 * rho)) / np.sqrt(2 * np.pi * rho)

    lo, _ = integrate.quad(integrand, -np.inf, 0.0, epsabs=1e-11, epsrel=1e-11, limit=200)
    hi, _ = integrate.quad(integrand, 0.0, np.inf, epsabs=1e-11, epsrel=1e-11, limit=200)
    return float((lo + hi) / 4.0**loss.k)


def training_loss(ov: Overlaps, h: Hats, p: ModelParams,
                  xi_nodes: int = 101, label_nodes: int = 51) -> float:
    """lam/(2 alpha) q_w* plus the channel average of the loss at the prox."""
    v, q, m = order_parameters(ov, p)
    if not (q > 0.0 and v > 0.0):
        raise StateError("training loss needs Q > 0 and V > 0")
    v0 = _teacher_variance(q, m, p.rho)
    xi, wxi = gauss_hermite(xi_nodes)
    omega0 = (m / np.sqrt(q)) * xi
    omega1 = np.sqrt(q) * xi
    y, wz, _wdz = fused_label_weights(p.channel, omega0, v0, label_nodes)
    wz = wxi[:, None] * wz
    om1 = np.broadcast_to(omega1[:, None], y.shape)
    loss_term = _kernels.training_loss_moment(
        y.ravel(), np.ascontiguousarray(om1).ravel(),
        np.ascontiguousarray(wz).ravel(), v, p.loss.loss_kind)
    return p.lam / (2.0 * p.alpha) * ov.q_w + loss_term


def solve_theory_point(p: ModelParams, init: Overlaps | None = None,
                       **solver_kwargs) -> TheoryPoint:
    ov, h, report = solve_fixed_point(p, init=init, **solver_kwargs)
    return TheoryPoint(p, ov, h, generalisation_error(ov, p),
                       training_loss(ov, h, p), report)


@dataclass(frozen=True)
class LambdaOptResult:
    lambda_star: float
    point: TheoryPoint
    skipped: tuple[float, ...]


def optimize_lambda(p: ModelParams, lambda_grid=None, refine: bool = True,
                    **solver_kwargs) -> LambdaOptResult:
    """Grid-then-golden-section minimiser of eps_g over the ridge strength.

    The grid is walked warm-started; nonconvergent points are skipped and
    reported.  Refinement golden-sections log(lam) inside the bracketing
    grid cells down to 1e-2 relative width.
    """
    grid = np.asarray(DEFAULT_LAMBDA_GRID if lambda_grid is None else lambda_grid, dtype=float)
    if grid.size == 0:
        raise UsageError("lambda grid must be nonempty")
    if np.any(grid < 1e-6):
        raise UsageError("lambda grid entries below the 1e-6 floor")
    grid = np.sort(grid)

    points: dict[float, TheoryPoint] = {}
    skipped = []
    init = None
    for lam in grid:
        tp = solve_theory_point(with_lambda(p, lam), init=init, **solver_kwargs)
        if tp.report.converged:
            points[lam] = tp
            init = tp.overlaps
        else:
            skipped.append(lam)
    if not points:
        raise NumericalError("no lambda grid point converged")

    best_lam = min(points, key=lambda lam: points[lam].eps_g)
    best = points[best_lam]
    if refine and grid.size > 1:
        idx = int(np.where(grid == best_lam)[0][0])
        lo = grid[max(idx - 1, 0)]
        hi = grid[min(idx + 1, grid.size - 1)]
        if hi > lo:
            a, b = np.log(lo), np.log(hi)
            invphi = (np.sqrt(5.0) - 1.0) / 2.0

            def eval_log(x):
                return solve_theory_point(with_lambda(p, float(np.exp(x))),
                                          init=best.overlaps, **solver_kwargs)

            c, d = b - invphi * (b - a), a + invphi * (b - a)
            fc, fd = eval_log(c), eval_log(d)
            while (b - a) > 1e-2:
                if fc.eps_g < fd.eps_g:
                    b, d, fd = d, c, fc
                    c = b - invphi * (b - a)
                    fc = eval_log(c)
                else:
                    a, c, fc = c, d, fd
                    d = a + invphi * (b - a)
                    fd = eval_log(d)
            cand = fc if fc.eps_g < fd.eps_g else fd
            if cand.report.converged and cand.eps_g < best.eps_g:
                best, best_lam = cand, cand.params.lam
    return LambdaOptResult(float(best_lam), best, tuple(skipped))


_SPECTRAL_FACTORY = {
    "marchenko_pastur": marchenko_pastur,
    "orthogonal": orthogonal_projection,
}


def spectral_by_name(kind: str, gamma: float):
    try:
        return _SPECTRAL_FACTORY[kind](gamma)
    except KeyError:
        raise UsageError(f"unknown spectral kind {kind!r} "
                         f"(choose from {sorted(_SPECTRAL_FACTORY)})") from None


def separability_threshold(n_over_d: float, spectral_kind: str,
                           kappas: tuple[float, float, float],
                           lam: float = SEPARABILITY_LAMBDA,
                           collapse: float = SEPARABILITY_COLLAPSE,
                           alpha_lo: float = 0.1, alpha_hi: float = 50.0,
                           rtol: float = 1e-3,
                           **solver_kwargs) -> float:
    """Sample ratio alpha* where logistic data stop being linearly separable.

    Detection: on the separable side the theoretical training loss at a
    small ridge collapses as lam decreases (it would vanish at lam -> 0),
    while past the threshold it is pinned at the positive unregularised
    optimum and barely moves.  The predicate therefore compares eps_t at
    lam and lam/10 and flags "separable" when the relative drop exceeds
    ``collapse``; a geometric bisection then brackets the boundary.  An
    absolute eps_t cutoff cannot work here: at lam = 1e-4 the loss floors
    near 3e-3 even deep in the separable phase.
    """
    if not n_over_d > 0.0:
        raise DomainError("n_over_d must be positive")
    k0, k1, ks = kappas

    def eps_t_at(alpha: float, lam_val: float, init=None):
        gamma = alpha / n_over_d
        p = ModelParams(alpha=alpha, gamma=gamma, lam=lam_val, rho=1.0,
                        kappa0=k0, kappa1=k1, kappa_star=ks,
                        channel=Sign(), loss=LOGISTIC_CLASSIFICATION,
                        spectral=spectral_by_name(spectral_kind, gamma))
        ov, h, _rep = solve_fixed_point(p, init=init, **solver_kwargs)
        return training_loss(ov, h, p), ov

    def separable(alpha: float) -> bool:
        e1, ov = eps_t_at(alpha, lam)
        e2, _ = eps_t_at(alpha, lam / 10.0, init=ov)
        return (e1 - e2) / e1 >= collapse

    if not separable(alpha_lo):
        raise NumericalError(
            f"alpha_lo={alpha_lo} is already nonseparable; widen the bracket downward")
    if separable(alpha_hi):
        raise NumericalError(
            f"alpha_hi={alpha_hi} is still separable; widen the bracket upward")
    a, b = alpha_lo, alpha_hi
    while (b - a) > rtol * a:
        mid = float(np.sqrt(a * b))
        if separable(mid):
            a = mid
        else:
            b = mid
    return float(np.sqrt(a * b))
