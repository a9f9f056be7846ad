import numpy as np
import pytest

from rfcurves.channels import (
    LOGISTIC_CLASSIFICATION,
    RIDGE_REGRESSION,
    SQUARE_CLASSIFICATION,
    LinearGaussian,
    Sign,
)
from rfcurves.errors import NumericalError, UsageError
from rfcurves.observables import (
    generalisation_error,
    generalisation_error_quadrature,
    optimize_lambda,
    separability_threshold,
    solve_theory_point,
    training_loss,
)
from rfcurves.saddle import ModelParams, Overlaps, solve_fixed_point, with_lambda
from rfcurves.simulate import SimulationConfig, averaged_experiment
from rfcurves.spectral import marchenko_pastur

SIGN_KAPPAS = (0.0, np.sqrt(2 / np.pi), np.sqrt(1 - 2 / np.pi))


def make_params(alpha, gamma, lam, loss, channel=None, rho=1.0, kappas=SIGN_KAPPAS):
    return ModelParams(alpha=alpha, gamma=gamma, lam=lam, rho=rho,
                       kappa0=kappas[0], kappa1=kappas[1], kappa_star=kappas[2],
                       channel=channel or Sign(), loss=loss,
                       spectral=marchenko_pastur(gamma))


def overlaps_for(m_star, q_star, kappas=SIGN_KAPPAS):
    # place all of Q* on the q_s component for simplicity
    return Overlaps(v_s=1.0, q_s=q_star / kappas[1] ** 2, m_s=m_star / kappas[1],
                    v_w=1.0, q_w=0.0)


# ---------------------------------------------------------------- eps_g


def test_eps_g_trivial_values():
    p = make_params(1.0, 0.5, 1e-2, SQUARE_CLASSIFICATION)
    assert generalisation_error(overlaps_for(1.0, 1.0), p) == pytest.approx(0.0, abs=1e-7)
    assert generalisation_error(overlaps_for(0.0, 1.0), p) == pytest.approx(0.5, abs=1e-12)
    pr = make_params(1.0, 0.5, 1e-2, RIDGE_REGRESSION, channel=LinearGaussian(0.0))
    null = Overlaps(1.0, 0.0, 0.0, 1.0, 0.0)
    assert generalisation_error(null, pr) == pytest.approx(1.0, abs=1e-12)


def test_eps_g_angle_invariance():
    p = make_params(1.0, 0.5, 1e-2, SQUARE_CLASSIFICATION)
    base = generalisation_error(overlaps_for(0.4, 1.0), p)
    for scale in (0.1, 3.0, 17.0):
        scaled = generalisation_error(overlaps_for(0.4 * scale, scale**2), p)
        assert scaled == pytest.approx(base, rel=1e-12)


def test_quadrature_fallback_matches_closed_forms():
    rng = np.random.default_rng(20)
    p_cls = make_params(1.0, 0.5, 1e-2, SQUARE_CLASSIFICATION)
    for _ in range(50):
        rho = rng.uniform(0.3, 3.0)
        q = rng.uniform(0.2, 4.0)
        m = rng.uniform(-0.95, 0.95) * np.sqrt(rho * q)
        closed = np.arccos(m / np.sqrt(rho * q)) / np.pi
        quad = generalisation_error_quadrature(rho, m, q, p_cls.loss)
        assert quad == pytest.approx(closed, abs=1e-6)
        reg = generalisation_error_quadrature(rho, m, q, RIDGE_REGRESSION)
        assert reg == pytest.approx(rho + q - 2 * m, rel=1e-12)


# ---------------------------------------------------------------- eps_t


def test_training_loss_null_predictor_limit_logistic():
    # heavy regularisation pins the predictor at zero: the ridge term of
    # eps_t vanishes and the loss term becomes ell(y, 0) = log 2.  (At
    # alpha -> 0 with moderate lam the formula does NOT give log 2: the
    # effective prox variance stays of order 1/lam there.)
    p = make_params(1.0, 0.5, 1e6, LOGISTIC_CLASSIFICATION)
    ov, h, rep = solve_fixed_point(p, tol=1e-12)
    assert rep.converged
    assert p.lam / (2 * p.alpha) * ov.q_w < 1e-4
    assert training_loss(ov, h, p) == pytest.approx(np.log(2.0), abs=1e-4)


def test_training_loss_matches_simulation_square():
    # mid-grid square-loss point against the seed-averaged empirical loss
    alpha, gamma, lam = 1.0 / 0.7, 1.0 / (3 * 0.7), 1e-2
    p = make_params(alpha, gamma, lam, SQUARE_CLASSIFICATION)
    tp = solve_theory_point(p)
    cfg = SimulationConfig(d=300, alpha=alpha, gamma=gamma, sigma_name="sign",
                           sigma=np.sign, kappas=SIGN_KAPPAS, channel=Sign(),
                           loss=SQUARE_CLASSIFICATION, lam=lam, n_seeds=12,
                           master_seed=3)
    stats = averaged_experiment(cfg)
    assert abs(tp.eps_t - stats.mean_eps_t) <= 2 * stats.stderr_eps_t
    assert abs(tp.eps_g - stats.mean_eps_g) <= 2.5 * stats.stderr_eps_g


# ---------------------------------------------------------------- lambda search


def test_optimize_lambda_single_point_grid():
    p = make_params(1.0, 1.0 / 3, 1e-2, SQUARE_CLASSIFICATION)
    res = optimize_lambda(p, [0.37], refine=False)
    assert res.lambda_star == pytest.approx(0.37)
    assert res.skipped == ()


def test_optimize_lambda_is_argmin_over_grid():
    p = make_params(1.0, 1.0 / 3, 1e-2, SQUARE_CLASSIFICATION)
    grid = np.geomspace(1e-4, 10.0, 9)
    res = optimize_lambda(p, grid)
    for lam in grid:
        tp = solve_theory_point(with_lambda(p, float(lam)))
        assert res.point.eps_g <= tp.eps_g + 1e-10


def test_optimize_lambda_grid_validation():
    p = make_params(1.0, 1.0 / 3, 1e-2, SQUARE_CLASSIFICATION)
    with pytest.raises(UsageError):
        optimize_lambda(p, [])
    with pytest.raises(UsageError):
        optimize_lambda(p, [1e-9])


# ---------------------------------------------------------------- separability


def test_separability_threshold_sanity_at_nd2():
    astar = separability_threshold(2.0, "marchenko_pastur", SIGN_KAPPAS, rtol=1e-2)
    assert 2.0 < astar < 3.5


def test_separability_bracket_errors():
    with pytest.raises(NumericalError):
        separability_threshold(2.0, "marchenko_pastur", SIGN_KAPPAS,
                               alpha_lo=10.0, alpha_hi=50.0)
