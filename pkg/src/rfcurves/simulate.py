"""Finite-size Monte-Carlo oracle for the asymptotic theory.

Generates teacher-student datasets (original nonlinear and Gaussian
equivalent), fits ridge or logistic estimators, and averages empirical
errors over seeds.  All randomness flows through counter-based Philox
streams keyed by (seed, purpose), so no two purposes or seeds share a
stream and every run is bit-reproducible.

Normalisation: the fits consume the field-scaled design X / sqrt(p), so
the trained field is x.w/sqrt(p) and the ridge term lam/2 ||w||^2 is
extensive.  This is the scaling under which the asymptotic equations
hold at every lam; with raw O(1) features the ridge would be
sub-extensive and no finite-lam comparison could succeed (at the tiny
lam values plotted in the source figures both conventions coincide).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla
from scipy import optimize

from .channels import LinearGaussian, LossModel, Sign, TeacherChannel
from .errors import DomainError, NumericalError, UsageError

GAUSSIAN_IID = "gaussian"
HAAR_ORTHOGONAL = "haar"

_STREAM_FEATURES = 0
_STREAM_THETA = 1
_STREAM_DATA_C = 2
_STREAM_DATA_NOISE = 3
_STREAM_DATA_Z = 4


def substream(seed, *path) -> np.random.Generator:
    """Philox generator for one (seed, purpose...) key."""
    entropy = tuple(np.atleast_1d(seed).tolist()) if not np.isscalar(seed) else (int(seed),)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy + tuple(path))))


@dataclass(frozen=True)
class FeatureEnsemble:
    kind: str
    d: int
    p: int

    def __post_init__(self):
        if self.kind not in (GAUSSIAN_IID, HAAR_ORTHOGONAL):
            raise UsageError(f"unknown feature ensemble {self.kind!r}")
        if self.d < 1 or self.p < 1:
            raise DomainError("dimensions must be positive")

    @property
    def gamma(self) -> float:
        return self.d / self.p


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    theta0: np.ndarray
    F: np.ndarray
    seed: object


def _haar_rows(k: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """k orthonormal rows of length n, Haar-distributed (QR with sign fix)."""
    a = rng.standard_normal((n, k))
    q, r = np.linalg.qr(a)
    q *= np.sign(np.diag(r))
    return q.T


def generate_features(ensemble: FeatureEnsemble, seed) -> np.ndarray:
    """Draw the d x p feature matrix.

    Haar case: F = sqrt(p) * U^T D V with D rectangular diagonal of
    entries max(sqrt(gamma), 1).  The sqrt(p) keeps F F^T / p on the unit
    scale of the Gaussian case (for d <= p it is exactly the identity),
    which is the normalisation the spectral laws describe.
    """
    rng = substream(seed, _STREAM_FEATURES)
    d, p = ensemble.d, ensemble.p
    if ensemble.kind == GAUSSIAN_IID:
        return rng.standard_normal((d, p))
    c = max(np.sqrt(ensemble.gamma), 1.0)
    k = min(d, p)
    u = _haar_rows(k, d, rng)
    v = _haar_rows(k, p, rng)
    return np.sqrt(p) * c * (u.T @ v)


def draw_teacher(d: int, seed) -> np.ndarray:
    return substream(seed, _STREAM_THETA).standard_normal(d)


def _labels(channel: TeacherChannel, nu: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    if isinstance(channel, Sign):
        y = np.sign(nu)
        y[y == 0.0] = 1.0
        return y
    if channel.delta > 0.0:
        return nu + np.sqrt(channel.delta) * rng.standard_normal(nu.shape)
    return nu.copy()


def generate_dataset(F: np.ndarray, theta0: np.ndarray, sigma, channel: TeacherChannel,
                     n: int, seed) -> Dataset:
    """Original model: X = sigma(C F / sqrt(d)), y from the teacher channel."""
    d = F.shape[0]
    if theta0.shape != (d,):
        raise UsageError("theta0 length must match the latent dimension of F")
    c = substream(seed, _STREAM_DATA_C).standard_normal((n, d))
    nu = c @ theta0 / np.sqrt(d)
    y = _labels(channel, nu, substream(seed, _STREAM_DATA_NOISE))
    X = sigma(c @ F / np.sqrt(d))
    return Dataset(X=X, y=y, theta0=theta0, F=F, seed=seed)


def generate_equivalent_dataset(F: np.ndarray, theta0: np.ndarray,
                                kappas: tuple[float, float, float],
                                channel: TeacherChannel, n: int, seed) -> Dataset:
    """Gaussian-equivalent model sharing the latent stream with the original.

    Same C and labels as generate_dataset at the same seed (paired
    comparisons); the nonlinearity is replaced by
    kappa0 + kappa1 * C F / sqrt(d) + kappa_star * Z with fresh Z.
    """
    d = F.shape[0]
    k0, k1, ks = kappas
    c = substream(seed, _STREAM_DATA_C).standard_normal((n, d))
    nu = c @ theta0 / np.sqrt(d)
    y = _labels(channel, nu, substream(seed, _STREAM_DATA_NOISE))
    z = substream(seed, _STREAM_DATA_Z).standard_normal((n, F.shape[1]))
    X = k0 + k1 * (c @ F) / np.sqrt(d) + ks * z
    return Dataset(X=X, y=y, theta0=theta0, F=F, seed=seed)


def fit_ridge(X: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    """Ridge estimator via whichever normal-equation branch is smaller."""
    n, p = X.shape
    if lam < 0.0:
        raise DomainError("lam must be nonnegative")
    try:
        if n >= p:
            return sla.solve(X.T @ X + lam * np.eye(p), X.T @ y, assume_a="pos")
        return X.T @ sla.solve(X @ X.T + lam * np.eye(n), y, assume_a="pos")
    except (np.linalg.LinAlgError, sla.LinAlgError) as exc:
        raise NumericalError(f"ridge system singular ({exc}); raise lam") from exc


def logistic_objective(w: np.ndarray, X: np.ndarray, y: np.ndarray, lam: float):
    yu = y * (X @ w)
    val = float(np.logaddexp(0.0, -yu).sum() + 0.5 * lam * w @ w)
    s = np.empty_like(yu)
    pos = yu >= 0
    s[pos] = np.exp(-yu[pos]) / (1.0 + np.exp(-yu[pos]))
    s[~pos] = 1.0 / (1.0 + np.exp(yu[~pos]))
    grad = -X.T @ (y * s) + lam * w
    return val, grad


def fit_logistic(X: np.ndarray, y: np.ndarray, lam: float,
                 tol: float = 1e-4, max_iter: int = 10000) -> tuple[np.ndarray, bool]:
    """L2-regularised logistic fit with a max-gradient stopping contract.

    Any descent scheme is acceptable; L-BFGS does the work and extra
    restarts polish until max|grad| <= tol or the iteration budget is
    spent.  Returns (weights, converged flag).
    """
    if not lam > 0.0:
        raise DomainError("logistic fitting requires lam > 0")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise UsageError("labels must be -1/+1 for the logistic loss")
    w = np.zeros(X.shape[1])
    budget = max_iter
    for _ in range(4):
        res = optimize.minimize(
            logistic_objective, w, args=(X, y, lam), jac=True, method="L-BFGS-B",
            options={"maxiter": budget, "ftol": 1e-18, "gtol": 0.1 * tol, "maxcor": 25})
        w = res.x
        budget -= res.nit
        _, grad = logistic_objective(w, X, y, lam)
        if np.max(np.abs(grad)) <= tol:
            return w, True
        if budget <= 0:
            break
    return w, bool(np.max(np.abs(logistic_objective(w, X, y, lam)[1])) <= tol)


def design_matrix(X: np.ndarray) -> np.ndarray:
    """Field-normalised design the estimators are trained on."""
    return X / np.sqrt(X.shape[1])


def empirical_errors(w: np.ndarray, F: np.ndarray, theta0: np.ndarray, sigma,
                     channel: TeacherChannel, loss: LossModel, n_test: int, seed) -> float:
    """Test error 1/(4^k n) ||y_new - readout(X_new w / sqrt(p))||^2 on a
    fresh draw; w is in the field normalisation the pipeline trains in."""
    test = generate_dataset(F, theta0, sigma, channel, n_test, seed)
    pred = loss.readout(design_matrix(test.X) @ w)
    return float(np.mean((test.y - pred) ** 2) / 4.0**loss.k)


def training_metrics(w: np.ndarray, ds: Dataset, loss: LossModel, lam: float) -> float:
    """(sum of losses + lam/2 ||w||^2) / n on the training set."""
    n = ds.X.shape[0]
    field = design_matrix(ds.X) @ w
    return float((loss.value(ds.y, field).sum() + 0.5 * lam * w @ w) / n)


@dataclass(frozen=True)
class SimulationConfig:
    d: int
    alpha: float
    gamma: float
    sigma_name: str
    sigma: object
    kappas: tuple[float, float, float]
    channel: TeacherChannel
    loss: LossModel
    lam: float
    ensemble_kind: str = GAUSSIAN_IID
    equivalent: bool = False
    n_seeds: int = 30
    n_test: int | None = None
    fit_tol: float = 1e-4
    fit_max_iter: int = 10000
    master_seed: int = 0

    @property
    def p(self) -> int:
        return int(np.floor(self.d / self.gamma))

    @property
    def n(self) -> int:
        return int(np.floor(self.alpha * self.p))


@dataclass
class ExperimentStats:
    mean_eps_g: float
    stderr_eps_g: float
    mean_eps_t: float
    stderr_eps_t: float
    n_seeds: int
    per_seed: list = field(default_factory=list)
    failed_seeds: list = field(default_factory=list)


def run_one_seed(cfg: SimulationConfig, index: int) -> dict:
    seed = (cfg.master_seed, index)
    ens = FeatureEnsemble(cfg.ensemble_kind, cfg.d, cfg.p)
    F = generate_features(ens, seed)
    theta0 = draw_teacher(cfg.d, seed)
    if cfg.equivalent:
        train = generate_equivalent_dataset(F, theta0, cfg.kappas, cfg.channel, cfg.n, seed)
    else:
        train = generate_dataset(F, theta0, cfg.sigma, cfg.channel, cfg.n, seed)
    design = design_matrix(train.X)
    if cfg.loss.loss == "square":
        w = fit_ridge(design, train.y, cfg.lam)
        fit_ok = True
    else:
        w, fit_ok = fit_logistic(design, train.y, cfg.lam, cfg.fit_tol, cfg.fit_max_iter)
    n_test = cfg.n_test if cfg.n_test is not None else max(cfg.n, 10 * cfg.d)
    test_seed = (cfg.master_seed, index, 1)
    if cfg.equivalent:
        test = generate_equivalent_dataset(F, theta0, cfg.kappas, cfg.channel, n_test, test_seed)
        pred = cfg.loss.readout(design_matrix(test.X) @ w)
        eps_g = float(np.mean((test.y - pred) ** 2) / 4.0**cfg.loss.k)
    else:
        eps_g = empirical_errors(w, F, theta0, cfg.sigma, cfg.channel, cfg.loss,
                                 n_test, test_seed)
    eps_t = training_metrics(w, train, cfg.loss, cfg.lam)
    return {"seed": index, "eps_g": eps_g, "eps_t": eps_t, "fit_converged": fit_ok}


def averaged_experiment(cfg: SimulationConfig, n_workers: int = 1) -> ExperimentStats:
    """Seed-averaged empirical errors; reduction is in seed order."""
    if cfg.n_seeds < 1:
        raise UsageError("need at least one seed")
    records: list = [None] * cfg.n_seeds
    if n_workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            for i, rec in enumerate(pool.map(lambda i: _try_seed(cfg, i), range(cfg.n_seeds))):
                records[i] = rec
    else:
        for i in range(cfg.n_seeds):
            records[i] = _try_seed(cfg, i)
    ok = [r for r in records if "error" not in r]
    failed = [r for r in records if "error" in r]
    if not ok:
        raise NumericalError("every seed failed to fit")
    eg = np.array([r["eps_g"] for r in ok])
    et = np.array([r["eps_t"] for r in ok])
    if len(ok) >= 2:
        se_g = float(eg.std(ddof=1) / np.sqrt(len(ok)))
        se_t = float(et.std(ddof=1) / np.sqrt(len(ok)))
    else:
        se_g = se_t = float("nan")
    return ExperimentStats(float(eg.mean()), se_g, float(et.mean()), se_t,
                           len(ok), records, [r["seed"] for r in failed])


def _try_seed(cfg: SimulationConfig, i: int) -> dict:
    try:
        return run_one_seed(cfg, i)
    except NumericalError as exc:
        return {"seed": i, "error": str(exc)}


def dump_dataset(ds: Dataset, path, header: dict | None = None) -> None:
    """Plain-text columnar dump (one array section per block) for
    cross-implementation reproduction."""
    with open(path, "w") as fh:
        meta = dict(header or {})
        meta["seed"] = list(np.atleast_1d(ds.seed).tolist()) if not np.isscalar(ds.seed) \
            else int(ds.seed)
        fh.write("# rfcurves dataset dump v1\n")
        fh.write(f"# config {json.dumps(meta, sort_keys=True)}\n")
        for name in ("F", "theta0", "X", "y"):
            arr = np.atleast_2d(getattr(ds, name))
            fh.write(f"# array {name} {arr.shape[0]} {arr.shape[1]}\n")
            np.savetxt(fh, arr, fmt="%.17g")


def load_dataset(path) -> Dataset:
    arrays = {}
    meta = {}
    with open(path) as fh:
        lines = fh.read().splitlines()
    i = 0
    while i < len(lines):
        line = lines[i]
        if line.startswith("# config "):
            meta = json.loads(line[len("# config "):])
            i += 1
        elif line.startswith("# array "):
            _, _, name, rows, cols = line.split()
            rows, cols = int(rows), int(cols)
            block = np.loadtxt(lines[i + 1:i + 1 + rows], ndmin=2)
            arrays[name] = block.reshape(rows, cols)
            i += 1 + rows
        else:
            i += 1
    seed = meta.get("seed")
    if isinstance(seed, list):
        seed = tuple(seed)
    return Dataset(X=arrays["X"], y=arrays["y"].ravel(),
                   theta0=arrays["theta0"].ravel(), F=arrays["F"], seed=seed)
