"""Monte Carlo harness: rate experiments over (n, m) grids and the demo figure.

A rate experiment draws ``trials`` synthetic datasets per grid cell, runs the
subspace estimator, aggregates squared projector distances to the truth, and
fits the log-log slope of the mean against the driving sample-size product.
Results serialize to a stable JSON schema and a fixed-header CSV.
"""

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional, Union

import numpy as np

from . import theory
from .errors import ConfigError, SampledFPCAError
from .estimator import (
    _BetaPath,
    reconstruct_functions,
    sample_covariance,
    regularized_pca,
    solve_constrained,
)
from .kernels import kernel_from_name
from .metrics import function_subspace_distance, l2_context, subspace_distance
from .model import generate_dataset, model_from_config
from .sampling import operator_from_config, seminorm_defect
from .validation import as_float_array

KNOWN_OUTPUTS = ("discrete_dist2", "function_dist2", "Dm", "predictions")


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of a rate experiment.

    The operator spec omits "m", which is filled per grid cell.  Cells are
    (n, m) pairs: coupling m = round(n**m_coupling) when given, otherwise
    n_grid and m_grid are zipped when equal length and crossed otherwise.
    """

    model: dict
    operator: dict
    n_grid: tuple
    m_grid: Optional[tuple] = None
    m_coupling: Optional[float] = None
    beta: Union[str, float, tuple] = "constrained"
    trials: int = 30
    base_seed: int = 0
    outputs: tuple = ("discrete_dist2", "predictions")
    driving: Optional[str] = None  # "mn" | "n" | "m"; default depends on the variant

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.n_grid:
            raise ConfigError("n_grid must be nonempty")
        if self.m_coupling is not None and not (0 < self.m_coupling <= 3):
            raise ConfigError("m_coupling must lie in (0, 3]")
        if self.m_coupling is None and not self.m_grid:
            raise ConfigError("either m_grid or m_coupling is required")
        for out in self.outputs:
            if out not in KNOWN_OUTPUTS:
                raise ConfigError(f"unknown output {out!r}; known: {KNOWN_OUTPUTS}")
        if isinstance(self.beta, str) and self.beta != "constrained":
            raise ConfigError(f"beta policy must be 'constrained', a number, or a list, got {self.beta!r}")
        if self.driving not in (None, "mn", "n", "m"):
            raise ConfigError(f"driving must be one of mn/n/m, got {self.driving!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        try:
            beta = d.get("beta", "constrained")
            if isinstance(beta, list):
                beta = tuple(float(b) for b in beta)
            elif not isinstance(beta, str):
                beta = float(beta)
            return cls(
                model=dict(d["model"]),
                operator=dict(d["operator"]),
                n_grid=tuple(int(n) for n in d["n_grid"]),
                m_grid=tuple(int(m) for m in d["m_grid"]) if d.get("m_grid") else None,
                m_coupling=float(d["m_coupling"]) if d.get("m_coupling") is not None else None,
                beta=beta,
                trials=int(d.get("trials", 30)),
                base_seed=int(d.get("base_seed", 0)),
                outputs=tuple(d.get("outputs", ("discrete_dist2", "predictions"))),
                driving=d.get("driving"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid experiment config: {exc}") from exc

    def to_dict(self) -> dict:
        beta = list(self.beta) if isinstance(self.beta, tuple) else self.beta
        return {
            "model": self.model,
            "operator": self.operator,
            "n_grid": list(self.n_grid),
            "m_grid": list(self.m_grid) if self.m_grid else None,
            "m_coupling": self.m_coupling,
            "beta": beta,
            "trials": self.trials,
            "base_seed": self.base_seed,
            "outputs": list(self.outputs),
            "driving": self.driving,
        }

    def cells(self):
        """(n, m) pairs in fixed order; the order defines cell seed offsets."""
        if self.m_coupling is not None:
            return [(n, max(1, int(round(n**self.m_coupling)))) for n in self.n_grid]
        if len(self.m_grid) == len(self.n_grid):
            return list(zip(self.n_grid, self.m_grid))
        return [(n, m) for n in self.n_grid for m in self.m_grid]

    def beta_values(self):
        """Normalized beta policy: list of labels to run per cell."""
        if isinstance(self.beta, str):
            return ["constrained"]
        if isinstance(self.beta, tuple):
            return list(self.beta)
        return [self.beta]


@dataclass(frozen=True)
class CellResult:
    n: int
    m: int
    beta_label: Union[str, float]
    trials: int
    failures: int
    mean_dist2: Optional[float]
    stderr: Optional[float]
    mean_beta: Optional[float]
    mean_function_dist2: Optional[float] = None
    stderr_function: Optional[float] = None
    defect: Optional[float] = None
    flagged: bool = False

    def to_dict(self):
        d = {
            "n": self.n,
            "m": self.m,
            "beta": self.beta_label,
            "trials": self.trials,
            "failures": self.failures,
            "mean_dist2": self.mean_dist2,
            "stderr": self.stderr,
            "mean_beta": self.mean_beta,
            "flagged": self.flagged,
        }
        if self.mean_function_dist2 is not None:
            d["mean_function_dist2"] = self.mean_function_dist2
            d["stderr_function"] = self.stderr_function
        if self.defect is not None:
            d["Dm"] = self.defect
        return d


@dataclass(frozen=True)
class RateExperimentResult:
    config: ExperimentConfig
    cells: tuple
    fit: Optional[tuple]  # (slope, intercept, r_squared) on the primary metric
    prediction: Optional[dict]
    generated_at: str = field(default="")

    def to_dict(self):
        fit = None
        if self.fit is not None:
            fit = {"slope": self.fit[0], "intercept": self.fit[1], "r2": self.fit[2]}
        return {
            "config": self.config.to_dict(),
            "cells": [c.to_dict() for c in self.cells],
            "fit": fit,
            "prediction": self.prediction,
            "generated_at": self.generated_at,
        }


def _mean_stderr(values):
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return None, None
    mean = float(arr.mean())
    if arr.size == 1:
        return mean, 0.0
    return mean, float(arr.std(ddof=1) / np.sqrt(arr.size))


def _failed_cell_rows(cfg, n, m):
    return [
        CellResult(
            n=n, m=m, beta_label=b, trials=cfg.trials, failures=cfg.trials,
            mean_dist2=None, stderr=None, mean_beta=None, flagged=True,
        )
        for b in cfg.beta_values()
    ]


def _run_cell(cfg: ExperimentConfig, cell_index: int):
    """All trials and beta values for one (n, m) cell, in deterministic order."""
    n, m = cfg.cells()[cell_index]
    op_cfg = dict(cfg.operator)
    op_cfg["m"] = m
    try:
        op = operator_from_config(op_cfg)
    except SampledFPCAError as exc:
        if isinstance(exc, ConfigError):
            raise  # structurally bad config aborts the grid
        return _failed_cell_rows(cfg, n, m)  # e.g. singular Gram at this m only
    kern = op.kernel
    model = model_from_config(cfg.model, kern)
    want_discrete = "discrete_dist2" in cfg.outputs
    want_function = "function_dist2" in cfg.outputs
    ctx = l2_context(op) if want_function else None
    k_eig = op.k_eigendecomposition()

    zstar_orth = None
    if want_discrete:
        from .sampling import apply_to_components

        zstar = apply_to_components(op, model.components)
        q, rr = np.linalg.qr(zstar)
        if np.abs(rr.diagonal()).min() <= 1e-12 * max(1.0, np.abs(rr.diagonal()).max()):
            raise ConfigError(
                "true sampled components are rank-deficient; the discrete distance "
                "is undefined (request function_dist2 instead)"
            )
        zstar_orth = q

    betas = cfg.beta_values()
    dist2 = {b: [] for b in betas}
    fdist2 = {b: [] for b in betas}
    beta_used = {b: [] for b in betas}
    failures = {b: 0 for b in betas}

    for trial in range(cfg.trials):
        seed = cfg.base_seed + cell_index * cfg.trials + trial
        ds = generate_dataset(model, op, n, seed)
        for b in betas:
            try:
                if b == "constrained":
                    est = solve_constrained(
                        None, op.K, model.r, model.rho, k_eig=k_eig, data=ds.Y
                    )
                else:
                    est = fast_regularized_pca(op.K, float(b), model.r, k_eig=k_eig, data=ds.Y)
                if want_discrete:
                    dist2[b].append(subspace_distance(est.Zhat, zstar_orth) ** 2)
                if want_function:
                    fhat = reconstruct_functions(est, op)
                    fdist2[b].append(
                        function_subspace_distance(fhat, model.components, ctx) ** 2
                    )
                beta_used[b].append(est.beta)
            except (SampledFPCAError, np.linalg.LinAlgError, ValueError):
                failures[b] += 1

    defect = float(seminorm_defect(op)) if "Dm" in cfg.outputs else None
    results = []
    for b in betas:
        mean_d, se_d = _mean_stderr(dist2[b]) if want_discrete else (None, None)
        mean_f, se_f = _mean_stderr(fdist2[b]) if want_function else (None, None)
        mean_beta = float(np.mean(beta_used[b])) if beta_used[b] else None
        results.append(
            CellResult(
                n=n,
                m=m,
                beta_label=b,
                trials=cfg.trials,
                failures=failures[b],
                mean_dist2=mean_d,
                stderr=se_d,
                mean_beta=mean_beta,
                mean_function_dist2=mean_f,
                stderr_function=se_f,
                defect=defect,
                flagged=failures[b] >= 0.2 * cfg.trials,
            )
        )
    return results


def fast_regularized_pca(K, beta, r, *, k_eig=None, data=None, Sigma=None):
    """Fixed-multiplier estimate through the scaled path solver.

    Same result as :func:`regularized_pca` (top-r eigenspace of
    Sigma - beta K^{-1}) but reuses a precomputed eigendecomposition of K and
    an iterative eigensolver when m is large.
    """
    if float(beta) < 0:
        raise ValueError("beta must be nonnegative")
    path = _BetaPath(Sigma, K, r, k_eig=k_eig, data=data)
    vals, Zr = path.eval(float(beta), final=True)
    return path.to_estimate(float(beta), vals, Zr)


def run_rate_experiment(cfg: ExperimentConfig, threads: int = 1) -> RateExperimentResult:
    """Run all cells of a rate experiment and fit the log-log slope.

    Per-trial seeds are ``base_seed + cell_index * trials + trial`` so results
    are independent of execution order; parallel runs (threads > 1 processes)
    produce results identical to serial ones.  Estimator failures inside a
    cell are counted, never fatal; a cell with >= 20% failures is flagged.
    """
    indexes = range(len(cfg.cells()))
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            per_cell = list(pool.map(_run_cell, [cfg] * len(cfg.cells()), indexes))
    else:
        per_cell = [_run_cell(cfg, i) for i in indexes]
    cells = tuple(res for group in per_cell for res in group)

    variant = cfg.operator.get("variant", "time")
    driving = cfg.driving or ("mn" if variant == "time" else "n")
    fit = _fit_cells(cells, driving)

    prediction = None
    if "predictions" in cfg.outputs:
        prediction = _prediction_block(cfg, driving)

    stamp = datetime.now(timezone.utc).isoformat()
    return RateExperimentResult(config=cfg, cells=cells, fit=fit, prediction=prediction, generated_at=stamp)


def _driving_value(cell: CellResult, driving: str):
    return {"mn": cell.n * cell.m, "n": cell.n, "m": cell.m}[driving]


def _fit_cells(cells, driving):
    xs, ys = [], []
    for c in cells:
        y = c.mean_dist2 if c.mean_dist2 is not None else c.mean_function_dist2
        if y is not None and y > 0:
            xs.append(_driving_value(c, driving))
            ys.append(y)
    if len(xs) < 3 or len(set(xs)) < 2:
        return None
    return fit_loglog_slope(xs, ys)


def _prediction_block(cfg: ExperimentConfig, driving):
    kern = kernel_from_name(cfg.operator.get("kernel", "sobolev1"))
    model = model_from_config(cfg.model, kern)
    variant = cfg.operator.get("variant", "time")
    n_big, m_big = cfg.cells()[-1]
    pred = theory.predicted_rates(
        variant, kern.decay_alpha, model.r, model.rho, model.sigma0, m_big, n_big
    )
    lower = theory.minimax_lower_bounds(variant, kern.decay_alpha, model.sigma0, m_big, n_big)
    return {
        "driving": driving,
        "achievable": pred.to_dict(),
        "lower_bound": lower.to_dict(),
    }


def fit_loglog_slope(xs, ys):
    """Ordinary least squares of log(y) on log(x): (slope, intercept, r_squared)."""
    xs = as_float_array(xs, "xs", ndim=1)
    ys = as_float_array(ys, "ys", ndim=1)
    if xs.size != ys.size or xs.size < 3:
        raise ValueError("need at least 3 paired points")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("log-log fit needs positive values")
    lx, ly = np.log(xs), np.log(ys)
    if np.ptp(lx) == 0:
        from .errors import DegenerateFitError

        raise DegenerateFitError("xs are constant; slope is undefined")
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    if ss_tot == 0:
        r2 = 1.0 if ss_res <= 1e-24 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), float(r2)


# --- demo figure ------------------------------------------------------------

FIGURE_SIGNALS = (1.0, 0.5, 0.25, 0.125)
FIGURE_BETAS = (0.0, 0.0052, 0.0075, 0.83)
FIGURE_M = 100
FIGURE_N = 75


@dataclass(frozen=True)
class Figure1Result:
    """Reconstructed component curves and errors for a grid of multipliers."""

    seed: int
    betas: tuple
    grid: np.ndarray
    true_curves: np.ndarray  # (grid, r)
    curves: dict             # beta -> (grid, r)
    component_l2_errors: dict  # beta -> (r,) sign-resolved L2 errors
    subspace_dist2: dict     # beta -> squared function-subspace distance
    hilbert_sq_norms: dict   # beta -> (r,) squared Hilbert norms of estimates
    trace_smoothness: dict   # beta -> total <K^{-1}, P_Z>

    def to_dict(self):
        key = lambda b: f"{b:g}"
        return {
            "seed": self.seed,
            "betas": list(self.betas),
            "grid": self.grid.tolist(),
            "true_curves": self.true_curves.tolist(),
            "curves": {key(b): self.curves[b].tolist() for b in self.betas},
            "component_l2_errors": {key(b): self.component_l2_errors[b].tolist() for b in self.betas},
            "subspace_dist2": {key(b): self.subspace_dist2[b] for b in self.betas},
            "hilbert_sq_norms": {key(b): self.hilbert_sq_norms[b].tolist() for b in self.betas},
            "trace_smoothness": {key(b): self.trace_smoothness[b] for b in self.betas},
        }


def run_figure1_demo(seed, betas=FIGURE_BETAS, grid_size=512) -> Figure1Result:
    """Four-component time-sampling demo on a uniform design.

    Runs the regularized estimator at each multiplier in ``betas`` on one
    synthetic dataset (m = 100 samples of n = 75 curves, unit noise, signal
    strengths 1, 0.5, 0.25, 0.125, components = first four eigenfunctions)
    and returns reconstructed curves on a uniform grid plus per-component and
    subspace L2 errors and Hilbert norms.
    """
    cfg_op = {"variant": "time", "m": FIGURE_M, "points": "uniform", "kernel": "sobolev1"}
    op = operator_from_config(cfg_op)
    model = model_from_config(
        {
            "r": 4,
            "signals": list(FIGURE_SIGNALS),
            "component_indices": [1, 2, 3, 4],
            "rho": "auto",
            "sigma0": 1.0,
        },
        op.kernel,
    )
    ds = generate_dataset(model, op, FIGURE_N, seed)
    Sigma = sample_covariance(ds.Y)
    grid = np.linspace(0.0, 1.0, grid_size)
    ctx = l2_context(op)

    from .kernels import eigen_expansion_values

    true_curves = eigen_expansion_values(op.kernel, model.components, grid)
    cross_rep_eig = ctx.cross_with_eigen(model.components.shape[0])
    mu = op.kernel.eigenvalues(model.components.shape[0])
    scaled_components = np.sqrt(mu)[:, None] * model.components  # L2 coordinates

    curves, comp_errors, sub_d2, hnorms, ts = {}, {}, {}, {}, {}
    for b in betas:
        est = regularized_pca(Sigma, op.K, b, model.r)
        fhat = reconstruct_functions(est, op)
        curves[b] = fhat.values(grid)
        # exact L2 errors via Gram identities, resolving each sign
        fhat_sq = np.einsum("ij,ij->j", fhat.coeffs, ctx.theta @ fhat.coeffs)
        cross = fhat.coeffs.T @ cross_rep_eig @ scaled_components  # (r, r): <fhat_i, f*_j>
        diag_cross = np.diag(cross)
        comp_errors[b] = np.sqrt(np.maximum(fhat_sq + 1.0 - 2.0 * np.abs(diag_cross), 0.0))
        sub_d2[b] = float(function_subspace_distance(fhat, model.components, ctx) ** 2)
        hnorms[b] = fhat.squared_hilbert_norms()
        ts[b] = est.trace_smoothness
    return Figure1Result(
        seed=int(seed),
        betas=tuple(betas),
        grid=grid,
        true_curves=true_curves,
        curves=curves,
        component_l2_errors=comp_errors,
        subspace_dist2=sub_d2,
        hilbert_sq_norms=hnorms,
        trace_smoothness=ts,
    )


# --- serialization ----------------------------------------------------------

def result_to_json(result: RateExperimentResult) -> str:
    return json.dumps(result.to_dict(), sort_keys=True, indent=2)


def result_to_csv(result: RateExperimentResult) -> str:
    """Fixed-header CSV: one row per cell."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "m", "beta", "mean_dist2", "stderr", "trials", "failures"])
    for c in result.cells:
        beta = c.beta_label if c.beta_label != "constrained" else (
            c.mean_beta if c.mean_beta is not None else "constrained"
        )
        mean = c.mean_dist2 if c.mean_dist2 is not None else c.mean_function_dist2
        se = c.stderr if c.stderr is not None else c.stderr_function
        writer.writerow([c.n, c.m, beta, mean, se, c.trials, c.failures])
    return buf.getvalue()


def figure1_to_csv(result: Figure1Result) -> str:
    """Long-format CSV of the reconstructed curves: beta, component, t, value."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["beta", "component", "t", "value"])
    for b in result.betas:
        curves = result.curves[b]
        for j in range(curves.shape[1]):
            for t, v in zip(result.grid, curves[:, j]):
                writer.writerow([b, j + 1, t, v])
    return buf.getvalue()
