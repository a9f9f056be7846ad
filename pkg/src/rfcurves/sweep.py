"""Grid sweeps over theory and simulation, persisted as reproducible CSV."""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from . import __version__
from .channels import LinearGaussian, LossModel, Sign
from .config import resolve_ratios
from .errors import ConfigError, NumericalError
from .observables import (
    TheoryPoint,
    optimize_lambda,
    separability_threshold,
    solve_theory_point,
    spectral_by_name,
)
from .saddle import SIGMA_REGISTRY, ModelParams, kappa_coefficients
from .simulate import SimulationConfig, averaged_experiment

COLUMNS = [
    "axis", "axis_value", "alpha", "gamma", "p_over_n", "n_over_d",
    "lam_used", "lam_policy",
    "channel", "delta", "loss", "task", "sigma",
    "kappa0", "kappa1", "kappa_star", "spectral", "rho",
    "eps_g_theory", "eps_t_theory",
    "q_s", "q_w", "m_s", "v_s", "v_w", "m_star", "q_star",
    "converged", "iterations", "residual",
    "sim_d", "sim_n", "sim_p", "sim_ensemble", "sim_equivalent", "sim_seeds",
    "eps_g_sim_mean", "eps_g_sim_stderr", "eps_t_sim_mean", "eps_t_sim_stderr",
]

SEP_COLUMNS = ["spectral", "n_over_d", "alpha_star", "inv_alpha_star", "lam", "status"]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _parse(s: str):
    if s == "":
        return None
    if s in ("true", "false"):
        return s == "true"
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def write_csv(path, columns, rows, config: dict | None = None) -> None:
    """Atomic CSV write with '#' header lines carrying version and config."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    lines = [f"# rfcurves {__version__}"]
    if config is not None:
        lines.append("# config " + json.dumps(config, sort_keys=True, default=str))
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(row.get(c)) for c in columns))
    data = "\n".join(lines) + "\n"
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".csv.tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_csv(path):
    """Parse a sweep CSV back into (header lines, column names, row dicts)."""
    header = []
    with open(path) as fh:
        lines = fh.read().splitlines()
    i = 0
    while i < len(lines) and lines[i].startswith("#"):
        header.append(lines[i])
        i += 1
    columns = lines[i].split(",")
    rows = []
    for line in lines[i + 1:]:
        if not line:
            continue
        rows.append({c: _parse(v) for c, v in zip(columns, line.split(","))})
    return header, columns, rows


def grid_values(sweep: dict) -> np.ndarray:
    if sweep["count"] == 1:
        base = np.array([sweep["min"]], dtype=float)
    elif sweep["scale"] == "log":
        base = np.geomspace(sweep["min"], sweep["max"], sweep["count"])
    else:
        base = np.linspace(sweep["min"], sweep["max"], sweep["count"])
    if sweep.get("include"):
        base = np.concatenate([base, np.asarray(sweep["include"], dtype=float)])
    return np.unique(base)


def model_kappas(model: dict) -> tuple[float, float, float]:
    if model.get("kappas") is not None:
        k0, k1, ks = (float(x) for x in model["kappas"])
        return k0, k1, ks
    return kappa_coefficients(SIGMA_REGISTRY[model["sigma"]])


def build_params(model: dict, alpha: float, gamma: float, lam: float,
                 kappas: tuple[float, float, float]) -> ModelParams:
    channel = Sign() if model["channel"] == "sign" else LinearGaussian(model["delta"])
    k0, k1, ks = kappas
    return ModelParams(
        alpha=alpha, gamma=gamma, lam=lam, rho=model["rho"],
        kappa0=k0, kappa1=k1, kappa_star=ks,
        channel=channel, loss=LossModel(model["loss"], model["task"]),
        spectral=spectral_by_name(model["spectral"], gamma),
    )


def _solver_kwargs(cfg: dict) -> dict:
    s = cfg["solver"]
    return {"damping": s["damping"], "tol": s["tol"], "max_iter": s["max_iter"],
            "xi_nodes": s["quad_nodes"], "label_nodes": s["label_nodes"]}


def _theory_at(cfg, kappas, alpha, gamma, lam_fixed, warm_init):
    """One theory point honouring the lam policy; returns (point, lam_policy)."""
    kwargs = _solver_kwargs(cfg)
    if cfg["lam_policy"] == "optimal":
        lg = cfg["lam_grid"]
        grid = np.geomspace(lg["min"], lg["max"], lg["count"])
        base = build_params(cfg["model"], alpha, gamma, float(grid[0]), kappas)
        res = optimize_lambda(base, grid, refine=lg["refine"], **kwargs)
        return res.point, "optimal"
    p = build_params(cfg["model"], alpha, gamma, lam_fixed, kappas)
    return solve_theory_point(p, init=warm_init, **kwargs), "fixed"


def run_sweep(cfg: dict, out=None, threads: int = 1):
    """Execute one config; returns the rows and writes the CSV when a path
    is configured.  Rows appear in grid order; nonconvergent theory points
    are emitted with converged=false, never dropped."""
    mode = cfg["mode"]
    if mode not in ("theory", "simulate", "compare"):
        raise ConfigError(f"run_sweep cannot execute mode {mode!r}")
    sweep = cfg["sweep"]
    axis = sweep["axis"]
    values = grid_values(sweep)
    kappas = model_kappas(cfg["model"])
    model = cfg["model"]
    rows = []
    warm = None
    for value in values:
        alpha, gamma = resolve_ratios(axis, float(value), cfg["fixed"])
        row = {c: None for c in COLUMNS}
        row.update(axis=axis, axis_value=float(value), alpha=alpha, gamma=gamma,
                   p_over_n=1.0 / alpha, n_over_d=alpha / gamma,
                   channel=model["channel"], delta=model["delta"],
                   loss=model["loss"], task=model["task"],
                   sigma=model["sigma"] if model["sigma"] else "custom",
                   kappa0=kappas[0], kappa1=kappas[1], kappa_star=kappas[2],
                   spectral=model["spectral"], rho=model["rho"])
        lam_fixed = float(value) if axis == "lam" else cfg.get("lam")
        if mode in ("theory", "compare"):
            point, policy = _theory_at(cfg, kappas, alpha, gamma, lam_fixed,
                                       warm if cfg["solver"]["warm_start"] else None)
            if cfg["solver"]["warm_start"] and point.report.converged:
                warm = point.overlaps
            ov = point.overlaps
            row.update(lam_used=point.params.lam, lam_policy=policy,
                       eps_g_theory=point.eps_g, eps_t_theory=point.eps_t,
                       q_s=ov.q_s, q_w=ov.q_w, m_s=ov.m_s, v_s=ov.v_s, v_w=ov.v_w,
                       m_star=point.params.kappa1 * ov.m_s,
                       q_star=point.params.kappa1**2 * ov.q_s
                              + point.params.kappa_star**2 * ov.q_w,
                       converged=point.report.converged,
                       iterations=point.report.iterations,
                       residual=point.report.residual)
        if mode in ("simulate", "compare"):
            sim = cfg["simulation"]
            if cfg["lam_policy"] == "optimal":
                lam_sim = row["lam_used"]  # compare mode: simulate at the optimum
            else:
                lam_sim = float(lam_fixed)
            scfg = SimulationConfig(
                d=sim["d"], alpha=alpha, gamma=gamma,
                sigma_name=model["sigma"] or "custom",
                sigma=SIGMA_REGISTRY.get(model["sigma"]),
                kappas=kappas,
                channel=Sign() if model["channel"] == "sign" else LinearGaussian(model["delta"]),
                loss=LossModel(model["loss"], model["task"]),
                lam=lam_sim, ensemble_kind=sim["ensemble"],
                equivalent=sim["equivalent"], n_seeds=sim["n_seeds"],
                n_test=sim["n_test"], fit_tol=sim["fit_tol"],
                fit_max_iter=sim["fit_max_iter"], master_seed=cfg["seed"])
            if scfg.sigma is None and not sim["equivalent"]:
                raise ConfigError("simulating the original model needs a named sigma")
            stats = averaged_experiment(scfg, n_workers=threads)
            row.update(lam_used=lam_sim, lam_policy=row["lam_policy"] or "fixed",
                       sim_d=sim["d"], sim_n=scfg.n, sim_p=scfg.p,
                       sim_ensemble=sim["ensemble"], sim_equivalent=sim["equivalent"],
                       sim_seeds=stats.n_seeds,
                       eps_g_sim_mean=stats.mean_eps_g, eps_g_sim_stderr=stats.stderr_eps_g,
                       eps_t_sim_mean=stats.mean_eps_t, eps_t_sim_stderr=stats.stderr_eps_t)
        rows.append(row)
    path = out or cfg.get("output")
    if path:
        write_csv(path, COLUMNS, rows, cfg)
    return rows


def run_separability(cfg: dict, out=None):
    """One row of (kind, n/d) -> alpha*; bracket failures reported per-row."""
    sep = cfg["separability"]
    kappas = model_kappas(cfg["model"])
    rows = []
    for kind in sep["kinds"]:
        for nd in sep["n_over_d"]:
            row = {c: None for c in SEP_COLUMNS}
            row.update(spectral=kind, n_over_d=float(nd), lam=sep["lam"], status="ok")
            try:
                astar = separability_threshold(
                    float(nd), kind, kappas, lam=sep["lam"], collapse=sep["collapse"],
                    alpha_lo=sep["alpha_lo"], alpha_hi=sep["alpha_hi"], rtol=sep["rtol"],
                    **_solver_kwargs(cfg))
                row.update(alpha_star=astar, inv_alpha_star=1.0 / astar)
            except NumericalError as exc:
                row.update(status=f"bracket-failure: {exc}")
            rows.append(row)
    path = out or cfg.get("output")
    if path:
        write_csv(path, SEP_COLUMNS, rows, cfg)
    return rows
