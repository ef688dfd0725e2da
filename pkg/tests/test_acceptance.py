"""Acceptance suite: every criterion runs at its stated tolerance.

Each criterion prints one PASS/FAIL line (run with -s to see them live).
The two rate experiments are heavy (a few minutes together); everything else
is seconds.
"""

import json
import re
import time

import numpy as np
import pytest

from sampled_fpca import (
    ExperimentConfig,
    critical_radius,
    function_subspace_distance,
    generate_dataset,
    l2_context,
    make_basis_truncation,
    make_time_sampling,
    model_from_config,
    principal_angles,
    reconstruct_functions,
    regularized_pca,
    run_figure1_demo,
    run_rate_experiment,
    sample_covariance,
    seminorm_defect,
    sobolev1_kernel,
    solve_constrained,
    subspace_distance,
    uniform_points,
)
from sampled_fpca.cli import main as cli_main
from sampled_fpca import rng
from sampled_fpca.validation import orthonormality_error

from conftest import random_orthonormal, random_spd, simpson

SLOPE_WINDOW = (-0.81, -0.52)


def report(num, name, ok, detail=""):
    print(f"ACCEPTANCE {num} ({name}): {'PASS' if ok else 'FAIL'} {detail}")
    return ok


def rate_config_dict(variant, m_grid=None):
    cfg = {
        "model": {
            "r": 1,
            "signals": [1.0],
            "component_indices": [1],
            "rho": float(np.pi / 2),
            "sigma0": 1.0,
        },
        "operator": {"variant": variant, "kernel": "sobolev1"},
        "n_grid": [128, 256, 512, 1024, 2048],
        "trials": 30,
        "base_seed": 0,
    }
    if variant == "time":
        cfg["operator"]["points"] = "uniform"
    if m_grid is None:
        cfg["m_coupling"] = 1.0
    else:
        cfg["m_grid"] = m_grid
    return cfg


@pytest.fixture(scope="module")
def criterion1_runs(tmp_path_factory):
    """The criterion-1 config run twice through the CLI (reused by criterion 6)."""
    tmp = tmp_path_factory.mktemp("acceptance")
    cfg_path = tmp / "criterion1.json"
    cfg_path.write_text(json.dumps(rate_config_dict("time")))
    outputs = []
    elapsed = []
    for name in ("run_a.json", "run_b.json"):
        out = tmp / name
        t0 = time.time()
        code = cli_main(["rates", "--config", str(cfg_path), "--out", str(out)])
        elapsed.append(time.time() - t0)
        assert code == 0
        outputs.append(out)
    return outputs, elapsed


@pytest.fixture(scope="module")
def criterion2_runs():
    base = ExperimentConfig.from_dict(rate_config_dict("truncation"))
    doubled = ExperimentConfig.from_dict(
        rate_config_dict("truncation", m_grid=[256, 512, 1024, 2048, 4096])
    )
    return run_rate_experiment(base), run_rate_experiment(doubled)


def test_criterion_1_time_sampling_rate(criterion1_runs):
    outputs, elapsed = criterion1_runs
    data = json.loads(outputs[0].read_text())
    slope = data["fit"]["slope"]
    ok = SLOPE_WINDOW[0] <= slope <= SLOPE_WINDOW[1] and elapsed[0] <= 300
    assert report(
        1,
        "time-sampling rate",
        ok,
        f"slope {slope:.4f} in [{SLOPE_WINDOW[0]}, {SLOPE_WINDOW[1]}] "
        f"(theory -2/3), runtime {elapsed[0]:.0f}s <= 300s",
    )


def test_criterion_2_truncation_rate_and_no_interaction(criterion2_runs):
    base, doubled = criterion2_runs
    slope = base.fit[0]
    slope_ok = SLOPE_WINDOW[0] <= slope <= SLOPE_WINDOW[1]
    gaps = []
    for c1, c2 in zip(base.cells, doubled.cells):
        se = np.sqrt(c1.stderr**2 + c2.stderr**2)
        gaps.append(abs(c1.mean_dist2 - c2.mean_dist2) / (3 * se))
    interaction_ok = all(g < 1.0 for g in gaps)
    assert report(
        2,
        "truncation rate + no interaction",
        slope_ok and interaction_ok,
        f"slope {slope:.4f} (theory -2/3); doubling m moved cells by "
        f"{max(gaps):.2f}x of 3 stderr at most",
    )


def test_criterion_3_function_space_bias_floor():
    kern = sobolev1_kernel()
    model = model_from_config(
        {"r": 1, "signals": [1.0], "component_indices": [5], "rho": "auto", "sigma0": 0.0},
        kern,
    )
    results = {}
    for m in (2, 3, 4, 5, 6):
        op = make_basis_truncation(kern, m)
        ds = generate_dataset(model, op, 40, seed=m)
        est = solve_constrained(sample_covariance(ds.Y), op.K, 1, model.rho)
        fhat = reconstruct_functions(est, op)
        results[m] = function_subspace_distance(fhat, model.components, l2_context(op)) ** 2
    below_ok = all(abs(results[m] - 2.0) <= 1e-10 for m in (2, 3, 4))
    above_ok = all(results[m] <= 1e-10 for m in (5, 6))
    assert report(
        3,
        "approximation-error floor",
        below_ok and above_ok,
        f"dist^2 at m<5: {[f'{results[m]:.2e}' for m in (2, 3, 4)]} (=2 exactly); "
        f"m>=5: {[f'{results[m]:.1e}' for m in (5, 6)]}",
    )


def test_criterion_4_figure_demo_orderings():
    sub_d2 = {b: [] for b in (0.0, 0.0052, 0.83)}
    hnorm = {b: [] for b in (0.0, 0.0052, 0.83)}
    for seed in range(20):
        res = run_figure1_demo(seed)
        for b in sub_d2:
            sub_d2[b].append(res.subspace_dist2[b])
            hnorm[b].append(res.trace_smoothness[b])
    means_d = {b: float(np.mean(v)) for b, v in sub_d2.items()}
    means_h = {b: float(np.mean(v)) for b, v in hnorm.items()}
    error_ok = means_d[0.0052] < means_d[0.0]
    smooth_ok = means_h[0.83] < means_h[0.0] and means_h[0.83] < means_h[0.0052]
    assert report(
        4,
        "demo figure orderings",
        error_ok and smooth_ok,
        f"mean dist^2: beta=0.0052 {means_d[0.0052]:.4f} < beta=0 {means_d[0.0]:.4f}; "
        f"H-norms {means_h[0.83]:.2f} < {means_h[0.0052]:.2f}, {means_h[0.0]:.2f}",
    )


def test_criterion_5_invariant_suite():
    kern = sobolev1_kernel()
    checks = []

    # estimator invariants on a realistic solve
    op = make_time_sampling(kern, uniform_points(48))
    model = model_from_config(
        {"r": 2, "signals": [1.0, 0.7], "component_indices": [1, 2], "rho": "auto",
         "sigma0": 1.0},
        kern,
    )
    worst = dict(orth=0.0, feas=0.0, interp=0.0, hnorm=0.0)
    for seed in range(5):
        ds = generate_dataset(model, op, 80, seed=seed)
        est = solve_constrained(sample_covariance(ds.Y), op.K, 2, model.rho)
        fhat = reconstruct_functions(est, op)
        worst["orth"] = max(worst["orth"], orthonormality_error(est.Zhat))
        worst["feas"] = max(
            worst["feas"], est.trace_smoothness / (2 * 2 * model.rho**2 * (1 + 1e-6))
        )
        worst["interp"] = max(worst["interp"], float(np.abs(op.K @ fhat.coeffs - est.Zhat).max()))
        hh = fhat.squared_hilbert_norms()
        for j in range(2):
            direct = float(est.Zhat[:, j] @ op.solve_k(est.Zhat[:, j]))
            worst["hnorm"] = max(worst["hnorm"], abs(hh[j] - direct))
    checks.append(("Zhat orthonormality <= 1e-10", worst["orth"] <= 1e-10))
    checks.append(("constraint feasibility", worst["feas"] <= 1.0))
    checks.append(("interpolation K A = Zhat <= 1e-8", worst["interp"] <= 1e-8))
    checks.append(("Hilbert norm identity <= 1e-8", worst["hnorm"] <= 1e-8))

    # defect values
    checks.append(
        ("D_m truncation <= 1e-12",
         max(seminorm_defect(make_basis_truncation(kern, m)) for m in (1, 8, 32)) <= 1e-12)
    )
    checks.append(
        ("D_m hand value 2/3 <= 1e-10",
         abs(seminorm_defect(make_time_sampling(kern, [1.0])) - 2.0 / 3.0) <= 1e-10)
    )

    # principal-angle identity
    gap = 0.0
    for seed in range(10):
        Z1 = random_orthonormal(seed, 24, 3)
        Z2 = random_orthonormal(seed + 500, 24, 3)
        angles = principal_angles(Z1, Z2)
        gap = max(gap, abs(subspace_distance(Z1, Z2) ** 2 - 2 * np.sum(np.sin(angles) ** 2)))
    checks.append(("2 sum sin^2 = dist^2 <= 1e-10", gap <= 1e-10))

    # analytic L2 Grams vs quadrature
    pts = np.array([0.3, 0.8])
    op2 = make_time_sampling(kern, pts)
    ctx = l2_context(op2)
    cross = ctx.cross_with_eigen(6)
    worst_q = 0.0
    for i, ti in enumerate(pts):
        for j, tj in enumerate(pts):
            oracle = simpson(lambda u: np.minimum(u, ti) * np.minimum(u, tj) / 2, 0, 1, 4000)
            worst_q = max(worst_q, abs(op2.theta[i, j] - oracle))
        for k in range(1, 7):
            oracle = simpson(
                lambda u: np.minimum(u, ti) * kern.eigenfunction(k, u) / np.sqrt(2), 0, 1, 4000
            )
            worst_q = max(worst_q, abs(cross[i, k - 1] - oracle))
    checks.append(("theta / cross-Gram vs quadrature <= 1e-6", worst_q <= 1e-6))

    # critical radius vs closed form over n = 1e2..1e6
    mu = np.arange(1, 257, dtype=float) ** -2.0
    radius_ok = True
    for n in (100, 1000, 10_000, 100_000, 1_000_000):
        eps2 = critical_radius(mu, 1, 1.0, 1.0, n) ** 2
        closed = (1.0 / n) ** (2.0 / 3.0)
        radius_ok &= closed / 4 <= eps2 <= closed * 4
    checks.append(("critical radius within factor 4 of closed form", radius_ok))

    # SDP oracle agreement (convex-program route vs eigen route)
    import cvxpy as cp

    sdp_ok = True
    for seed in range(2):
        m = 5
        S = random_spd(seed + 300, m)
        K = random_spd(seed + 400, m, cond=30.0)
        kinv = np.linalg.inv(K)
        kinv = 0.5 * (kinv + kinv.T)
        rho = np.sqrt(np.sort(np.linalg.eigvalsh(kinv))[0])
        est = solve_constrained(S, K, 1, rho, bracket_tol=1.0001)
        X = cp.Variable((m, m), symmetric=True)
        prob = cp.Problem(
            cp.Maximize(cp.trace(S @ X)),
            [X >> 0, np.eye(m) - X >> 0, cp.trace(X) == 1,
             cp.trace(kinv @ X) <= 2 * rho**2],
        )
        prob.solve(solver=cp.SCS, eps=1e-9, max_iters=100_000)
        sdp_ok &= abs(est.objective - prob.value) <= 1e-4
    checks.append(("SDP oracle agreement <= 1e-4", sdp_ok))

    # brute-force variational dominance
    cf_ok = True
    for seed, (m, r) in enumerate([(6, 2), (5, 1)]):
        S = random_spd(seed + 700, m)
        K = random_spd(seed + 800, m, cond=100.0)
        est = regularized_pca(S, K, 0.05, r)
        M = S - 0.05 * np.linalg.inv(K)
        M = 0.5 * (M + M.T)
        achieved = float(np.trace(est.Zhat.T @ M @ est.Zhat))
        draws = rng.standard_normal(seed, (10_000, m, r)).reshape(10_000, m, r)
        best = max(
            float(np.trace((q := np.linalg.qr(draws[i])[0]).T @ M @ q)) for i in range(10_000)
        )
        analytic = float(np.sort(np.linalg.eigvalsh(M))[::-1][:r].sum())
        cf_ok &= achieved >= best - 1e-10 and abs(achieved - analytic) <= 1e-8
    checks.append(("Courant-Fischer dominance <= 1e-8", cf_ok))

    all_ok = all(ok for _, ok in checks)
    detail = "; ".join(f"{name}: {'ok' if ok else 'FAIL'}" for name, ok in checks)
    assert report(5, "invariant suite", all_ok, detail)


def test_criterion_6_determinism(criterion1_runs):
    outputs, _ = criterion1_runs
    texts = [
        re.sub(r'"generated_at": "[^"]*"', '"generated_at": ""', out.read_text())
        for out in outputs
    ]
    ok = texts[0] == texts[1]
    assert report(
        6, "byte-identical reruns", ok,
        f"{len(texts[0])} bytes compared after excluding the timestamp field",
    )
