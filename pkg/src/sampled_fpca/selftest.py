"""Built-in invariant suite, runnable without test dependencies.

Each check recomputes a structural identity of the pipeline (interpolation,
norms, distances, defects, feasibility, determinism) and compares against an
independent route where one exists.  Used by the ``selftest`` CLI subcommand;
the pytest suite covers the same ground in more depth.
"""

import numpy as np

from . import rng
from .estimator import reconstruct_functions, sample_covariance, solve_constrained
from .experiments import ExperimentConfig, run_rate_experiment
from .kernels import kernel_l2_inner_sections, sobolev1_kernel
from .metrics import principal_angles, subspace_distance
from .model import default_components, generate_dataset, model_from_config
from .sampling import (
    apply_operator,
    make_basis_truncation,
    make_time_sampling,
    min_norm_interpolant,
    seminorm_defect,
    uniform_points,
)
from .theory import critical_radius


def _simpson(f, a, b, panels):
    xs = np.linspace(a, b, 2 * panels + 1)
    w = np.ones_like(xs)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return float((b - a) / (6.0 * panels) * np.sum(w * f(xs)))


def _random_orthonormal(seed, m, r):
    return np.linalg.qr(rng.standard_normal(seed, (m, r)))[0]


def check_section_inner_closed_form():
    kern = sobolev1_kernel()
    worst = 0.0
    for i, s in enumerate(np.linspace(0.05, 1.0, 8)):
        for j, t in enumerate(np.linspace(0.05, 1.0, 8)):
            exact = kernel_l2_inner_sections(kern, s, t)
            # 4000 panels: the integrand has derivative kinks at s and t, so
            # Simpson converges at O(h^2) locally and 1000 panels only reach ~3e-8
            quad = _simpson(lambda u: np.minimum(u, s) * np.minimum(u, t), 0.0, 1.0, 4000)
            worst = max(worst, abs(exact - quad))
    return worst <= 1e-8, f"closed form vs quadrature, max err {worst:.2e}"


def check_interpolation_identity():
    kern = sobolev1_kernel()
    op = make_time_sampling(kern, uniform_points(20))
    z = rng.standard_normal(11, 20)
    g = min_norm_interpolant(op, z)
    err = np.abs(apply_operator(op, g) - z).max()
    norm_err = abs(g.hilbert_norm() ** 2 - z @ op.solve_k(z))
    return err <= 1e-8 and norm_err <= 1e-8, f"round trip {err:.2e}, norm gap {norm_err:.2e}"


def check_defects():
    kern = sobolev1_kernel()
    d_hand = abs(seminorm_defect(make_time_sampling(kern, [1.0])) - 2.0 / 3.0)
    d_trunc = seminorm_defect(make_basis_truncation(kern, 12))
    return d_hand <= 1e-10 and d_trunc <= 1e-12, f"hand case err {d_hand:.2e}, truncation {d_trunc:.2e}"


def check_principal_angle_identity():
    worst = 0.0
    for seed in range(5):
        Z1 = _random_orthonormal(100 + seed, 16, 3)
        Z2 = _random_orthonormal(200 + seed, 16, 3)
        d2 = subspace_distance(Z1, Z2) ** 2
        angles = principal_angles(Z1, Z2)
        worst = max(worst, abs(d2 - 2.0 * np.sum(np.sin(angles) ** 2)))
    return worst <= 1e-10, f"max identity gap {worst:.2e}"


def check_constrained_feasibility():
    kern = sobolev1_kernel()
    op = make_time_sampling(kern, uniform_points(24))
    comps = default_components(kern, 1, [1])
    model = model_from_config(
        {"r": 1, "signals": [1.0], "component_indices": [1], "rho": "auto", "sigma0": 1.0},
        kern,
    )
    ok = True
    detail = []
    for seed in range(4):
        ds = generate_dataset(model, op, 60, seed)
        est = solve_constrained(sample_covariance(ds.Y), op.K, 1, model.rho)
        bound = 2 * model.rho**2 * (1 + 1e-6)
        orth = np.abs(est.Zhat.T @ est.Zhat - np.eye(1)).max()
        fhat = reconstruct_functions(est, op)
        interp = np.abs(op.K @ fhat.coeffs - est.Zhat).max()
        hnorm = abs(
            fhat.squared_hilbert_norms()[0]
            - float(est.Zhat[:, 0] @ op.solve_k(est.Zhat[:, 0]))
        )
        ok &= est.trace_smoothness <= bound and orth <= 1e-10 and interp <= 1e-8 and hnorm <= 1e-8
        detail.append(f"ts={est.trace_smoothness:.3f}")
    return ok, "; ".join(detail)


def check_critical_radius_scaling():
    mu_hats = np.arange(1, 257, dtype=float) ** -2.0
    ok = True
    for n in (100, 10_000, 1_000_000):
        eps = critical_radius(mu_hats, 1, 1.0, 1.0, n)
        closed = (1.0 / n) ** (1.0 / 3.0)  # alpha = 1 closed form, unit constants
        ok &= 0.25 <= eps**2 / closed**2 <= 4.0
    return ok, "eps^2 within factor 4 of the closed form at n = 1e2, 1e4, 1e6"


def check_determinism():
    cfg = ExperimentConfig(
        model={"r": 1, "signals": [1.0], "component_indices": [1], "rho": "auto", "sigma0": 1.0},
        operator={"variant": "time", "kernel": "sobolev1", "points": "uniform"},
        n_grid=(32, 48, 64),
        m_coupling=1.0,
        trials=3,
        base_seed=11,
    )
    r1 = run_rate_experiment(cfg)
    r2 = run_rate_experiment(cfg)
    same = [c1.to_dict() == c2.to_dict() for c1, c2 in zip(r1.cells, r2.cells)]
    return all(same), f"{sum(same)}/{len(same)} cells identical"


CHECKS = [
    ("closed-form section inners vs quadrature", check_section_inner_closed_form),
    ("min-norm interpolation identities", check_interpolation_identity),
    ("seminorm defect values", check_defects),
    ("principal angle / distance identity", check_principal_angle_identity),
    ("constrained estimator invariants", check_constrained_feasibility),
    ("critical radius closed-form scaling", check_critical_radius_scaling),
    ("experiment determinism", check_determinism),
]


def run(verbose=True):
    """Run every check; returns True when all pass."""
    all_ok = True
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failure, not an abort
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        all_ok &= ok
        if verbose:
            print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return all_ok
