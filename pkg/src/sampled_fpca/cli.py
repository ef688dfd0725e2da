"""Command-line interface: rate experiments, the demo figure, diagnostics.

Subcommands
-----------
rates     run a Monte Carlo rate experiment from a JSON config
figure1   run the four-component demo for one seed
diagnose  print operator diagnostics and the assumption report for a config
selftest  run the built-in invariant suite

Exit codes: 0 success, 2 config error, 3 numerical failure threshold exceeded.
"""

import argparse
import json
import sys

from . import selftest as selftest_mod
from . import theory
from .errors import ConfigError, SampledFPCAError
from .experiments import (
    ExperimentConfig,
    figure1_to_csv,
    result_to_csv,
    result_to_json,
    run_figure1_demo,
    run_rate_experiment,
)
from .model import check_assumptions, model_from_config
from .sampling import (
    apply_to_components,
    nullspace_width,
    operator_from_config,
    orthonormality_defect,
    seminorm_defect,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _cmd_rates(args):
    cfg = ExperimentConfig.from_dict(_load_json(args.config))
    result = run_rate_experiment(cfg, threads=args.threads)
    with open(args.out, "w") as fh:
        fh.write(result_to_json(result))
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(result_to_csv(result))
    if result.fit is not None:
        slope, _, r2 = result.fit
        print(f"fitted slope {slope:+.4f} (r2 {r2:.3f}) over {len(result.cells)} cells")
    else:
        print(f"{len(result.cells)} cells (no slope fit)")
    if any(c.flagged for c in result.cells):
        print("numerical failure threshold exceeded in at least one cell", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _cmd_figure1(args):
    result = run_figure1_demo(args.seed)
    with open(args.out, "w") as fh:
        json.dump(result.to_dict(), fh, sort_keys=True, indent=2)
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(figure1_to_csv(result))
    for b in result.betas:
        print(
            f"beta={b:g}: subspace L2 dist^2 {result.subspace_dist2[b]:.4f}, "
            f"total H-norm^2 {result.trace_smoothness[b]:.4f}"
        )
    return EXIT_OK


def _cmd_diagnose(args):
    raw = _load_json(args.config)
    try:
        op_cfg = dict(raw["operator"])
        model_cfg = dict(raw["model"])
        n = int(raw["n"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"diagnose config needs operator, model, n: {exc}") from exc
    kappa = float(raw.get("kappa", 1.0))
    op = operator_from_config(op_cfg)
    model = model_from_config(model_cfg, op.kernel)

    zstar = apply_to_components(op, model.components)
    print(f"operator: {op.variant}, m={op.m}, kernel={op.kernel.name}")
    print(f"D_m (seminorm defect)        : {seminorm_defect(op):.6e}")
    width = nullspace_width(op)
    print(f"N_m (nullspace width)        : {width if width is not None else 'unavailable'}")
    print(f"C_m (orthonormality defect)  : {orthonormality_defect(zstar):.6e}")
    report = check_assumptions(model, op, n, kappa=kappa)
    print(f"assumption report (kappa={kappa:g}):")
    for label, ok in report.items():
        print(f"  [{'ok' if ok else 'VIOLATED'}] {label}")
    sigma_m = model.sigma0 * op.sigma_scale
    eps = theory.critical_radius(op.mu_hats, model.r, model.rho, sigma_m, n, kappa=kappa)
    print(f"critical radius eps          : {eps:.6e} (eps^2 = {eps**2:.6e})")
    pred = theory.predicted_rates(op.variant, op.kernel.decay_alpha, model.r, model.rho, model.sigma0, op.m, n)
    low = theory.minimax_lower_bounds(op.variant, op.kernel.decay_alpha, model.sigma0, op.m, n)
    print(f"predicted terms              : estimation {pred.estimation_term:.4e}, "
          f"approximation {pred.approximation_term:.4e}, fast {pred.fast_term:.4e}")
    print(f"lower-bound terms            : estimation {low.estimation_term:.4e}, "
          f"approximation {low.approximation_term:.4e}")
    return EXIT_OK


def _cmd_selftest(args):
    ok = selftest_mod.run(verbose=True)
    return EXIT_OK if ok else EXIT_NUMERICAL


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sampled-fpca",
        description="Regularized functional PCA for sampled functional data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_rates = sub.add_parser("rates", help="run a Monte Carlo rate experiment")
    p_rates.add_argument("--config", required=True, help="experiment config JSON")
    p_rates.add_argument("--out", required=True, help="output JSON path")
    p_rates.add_argument("--csv", help="optional per-cell CSV path")
    p_rates.add_argument("--threads", type=int, default=1, help="worker processes across cells")
    p_rates.set_defaults(func=_cmd_rates)

    p_fig = sub.add_parser("figure1", help="run the four-component demo")
    p_fig.add_argument("--seed", type=int, required=True)
    p_fig.add_argument("--out", required=True, help="output JSON path")
    p_fig.add_argument("--csv", help="optional curves CSV path")
    p_fig.set_defaults(func=_cmd_figure1)

    p_diag = sub.add_parser("diagnose", help="print operator and model diagnostics")
    p_diag.add_argument("--config", required=True, help="JSON with operator, model, n")
    p_diag.set_defaults(func=_cmd_diagnose)

    p_self = sub.add_parser("selftest", help="run the built-in invariant suite")
    p_self.set_defaults(func=_cmd_selftest)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SampledFPCAError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
