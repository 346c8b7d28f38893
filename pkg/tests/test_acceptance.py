"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines and timings.  Thresholds and tuning constants are frozen here; the
Monte Carlo regimes are seeded and deterministic.
"""
import json
import time

import numpy as np
import pytest

from momreg import (
    ConditionParams,
    CorruptionSpec,
    Dataset,
    DesignSpec,
    EmptyLambdaWindow,
    GridSpec,
    LinearPredictor,
    NoiseSpec,
    ObjectiveConfig,
    Regularizer,
    SolverConfig,
    block_increment,
    check_condition_one,
    check_condition_two,
    corrupt,
    count_blocks_satisfying,
    erm_fit,
    excess_risk,
    generate,
    lambda_window,
    lasso_fit,
    lemma_sweep,
    make_partition,
    median,
    mom_minimax_fit,
    multiplier_component,
    oracle_grid_fit,
    quad_component,
    sample_sphere_probes,
    support_recovery_error,
    theorem1_check,
    theorem2_check,
)
from momreg.cli import main as cli_main


def _report(num: int, name: str, passed: bool, started: float, detail: str = ""):
    status = "PASS" if passed else "FAIL"
    elapsed = time.time() - started
    print(f"[criterion {num:2d}] {status} {name} ({elapsed:.1f}s) {detail}")
    assert passed, f"criterion {num} failed: {name} {detail}"


def test_criterion_01_decomposition_identity():
    started = time.time()
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(1000):
        d = int(rng.integers(1, 11))
        n = int(rng.integers(0, 15)) * 2 + 1
        m = int(rng.integers(1, max(2, 2000 // max(n, 1) + 1)))
        N = min(n * m, 2000)
        m = N // n
        data = Dataset(
            2.0 * rng.standard_normal((n * m, d)), 2.0 * rng.standard_normal(n * m)
        )
        p = make_partition(n * m, n)
        f = LinearPredictor(rng.standard_normal(d))
        h = LinearPredictor(rng.standard_normal(d))
        b = block_increment(f, h, data, p).values
        q = quad_component(f, h, data, p).values
        mv = multiplier_component(f, h, data, p).values
        scale = np.maximum(np.maximum(np.abs(b), np.abs(q) + np.abs(mv)), 1e-30)
        worst = max(worst, float(np.max(np.abs(b - (q + mv)) / scale)))
    _report(
        1,
        "decomposition identity over 1000 instances",
        worst <= 1e-9,
        started,
        f"max rel deviation {worst:.2e}",
    )


def test_criterion_02_median_majority_principle():
    started = time.time()
    rng = np.random.default_rng(102)
    counterexamples = 0
    for _ in range(10**4):
        n = int(rng.integers(0, 25)) * 2 + 1
        v = rng.standard_normal(n) * 10.0
        t = float(rng.standard_normal() * 5.0)
        med = median(v)
        if count_blocks_satisfying(v, t, "ge") > n / 2 and not med >= t:
            counterexamples += 1
        if count_blocks_satisfying(v, t, "le") > n / 2 and not med <= t:
            counterexamples += 1
    _report(
        2,
        "median majority principle over 10^4 vectors",
        counterexamples == 0,
        started,
        f"{counterexamples} counterexamples",
    )


def test_criterion_03_oracle_equivalence():
    started = time.time()
    hits = 0
    diffs = []
    for seed in range(20):
        rng = np.random.default_rng(1000 + seed)
        X = rng.standard_normal((300, 1))
        theta_star = np.array([rng.uniform(-1.5, 1.5)])
        data = Dataset(X, X @ theta_star + rng.standard_normal(300))
        p = make_partition(300, 15)
        fit = mom_minimax_fit(data, p, ObjectiveConfig(), SolverConfig(seed=seed))
        grid = GridSpec(axes=((-3.0, 3.0, 0.01),))
        oracle = oracle_grid_fit(data, p, ObjectiveConfig(), grid, grid)
        diff = abs(float(fit.theta_hat[0]) - float(oracle.theta_hat[0]))
        diffs.append(diff)
        if diff <= 0.02:
            hits += 1
    _report(
        3,
        "solver vs grid oracle on 20 d=1 instances",
        hits >= 18,
        started,
        f"{hits}/20 within 0.02 (max diff {max(diffs):.4f})",
    )


def test_criterion_04_corruption_robustness():
    started = time.time()
    design = DesignSpec.identity(5)
    theta_star = np.ones(5)
    noise = NoiseSpec("gaussian", 1.0)
    clean_ols, bad_ols, mom = [], [], []
    for seed in range(50):
        data = generate(1000, 5, theta_star, design, noise, seed)
        clean_ols.append(excess_risk(erm_fit(data).theta, theta_star, design))
        bad, _ = corrupt(
            data,
            CorruptionSpec(count=10, mode="huge_response", magnitude=1e6),
            seed + 9999,
        )
        bad_ols.append(excess_risk(erm_fit(bad).theta, theta_star, design))
        p = make_partition(1000, 51)
        fit = mom_minimax_fit(bad, p, ObjectiveConfig(), SolverConfig(seed=seed))
        mom.append(excess_risk(fit.theta_hat, theta_star, design))
    med_clean = float(np.median(clean_ols))
    mom_ok = float(np.median(mom)) <= 2.0 * med_clean
    ols_ok = float(np.median(bad_ols)) >= 100.0 * med_clean
    _report(
        4,
        "corruption robustness (10 responses at 1e6, 50 seeds)",
        mom_ok and ols_ok,
        started,
        f"MOM/clean = {np.median(mom) / med_clean:.2f} (<=2), "
        f"corruptedOLS/clean = {np.median(bad_ols) / med_clean:.1e} (>=100)",
    )


def test_criterion_05_heavy_tail_stability():
    started = time.time()
    design = DesignSpec.identity(5)
    theta_star = np.ones(5)
    noise = NoiseSpec("student_t", 1.0, dof=2.5)
    mom, ols = [], []
    for seed in range(100):
        data = generate(1000, 5, theta_star, design, noise, seed)
        ols.append(excess_risk(erm_fit(data).theta, theta_star, design))
        p = make_partition(1000, 51)
        fit = mom_minimax_fit(data, p, ObjectiveConfig(), SolverConfig(seed=seed))
        mom.append(excess_risk(fit.theta_hat, theta_star, design))
    mom_ratio = float(np.percentile(mom, 95) / np.median(mom))
    ols_ratio = float(np.percentile(ols, 95) / np.median(ols))
    _report(
        5,
        "heavy-tail stability (student-t 2.5, 100 seeds)",
        mom_ratio <= 5.0 and ols_ratio > mom_ratio,
        started,
        f"MOM 95/med = {mom_ratio:.2f} (<=5), OLS 95/med = {ols_ratio:.2f} (> MOM)",
    )


# sweep-frozen constants for the framed-condition regime (criteria 6, 7)
_COND_PARAMS = ConditionParams(gamma1=0.5, gamma2=0.2, r=2.0)
_COND_THETA = np.array([1.0, -0.5, 2.0])


def test_criterion_06_framed_conditions_monte_carlo():
    started = time.time()
    design = DesignSpec.identity(3)
    f_star = LinearPredictor(_COND_THETA)
    noise = NoiseSpec("gaussian", 1.0)
    params = _COND_PARAMS
    passes = 0
    for seed in range(20):
        data = generate(5000, 3, _COND_THETA, design, noise, 100 + seed)
        p = make_partition(5000, 101)
        rng = np.random.default_rng(5000 + seed)
        far = sample_sphere_probes(f_star, design, params.r, 200, rng)
        near = sample_sphere_probes(f_star, design, params.r / 2.0, 200, rng)
        rep1 = check_condition_one(
            data, p, f_star, far, params.gamma1, params.r, design, 0.9
        )
        rep2 = check_condition_two(
            data, p, f_star, near, params.gamma2, params.r, design,
            fraction_threshold=0.9,
        )
        if rep1.passed and rep2.passed:
            passes += 1
    _report(
        6,
        "framed-condition Monte Carlo (200 probes/regime, 20 seeds)",
        passes >= 19,
        started,
        f"{passes}/20 seeds with all probes >= 0.9 block fraction",
    )


def test_criterion_07_theorem1_end_to_end():
    started = time.time()
    design = DesignSpec.identity(3)
    noise = NoiseSpec("gaussian", 1.0)
    params = _COND_PARAMS
    passes = 0
    for seed in range(100):
        data = generate(5000, 3, _COND_THETA, design, noise, 100 + seed)
        p = make_partition(5000, 101)
        fit = mom_minimax_fit(data, p, ObjectiveConfig(), SolverConfig(seed=seed))
        diag = theorem1_check(fit.theta_hat, _COND_THETA, design, params)
        passes += diag.passed
    _report(
        7,
        "theorem-1 chain end to end (100 trials)",
        passes / 100.0 >= 0.95,
        started,
        f"empirical confidence {passes / 100.0:.2f} (>=0.95)",
    )


def test_criterion_08_lemma_implication_sweep():
    started = time.time()
    report = lemma_sweep(1000, seed=8)
    nonvacuous = report.total_checked >= 10000 and all(
        report.checked[key] > 0
        for key in ("far", "sphere_near", "scaled_far", "scaled_near")
    )
    _report(
        8,
        "lemma implication sweep (1000 instances incl. alpha in {2,4,8})",
        len(report.violations) == 0 and nonvacuous,
        started,
        f"{report.total_checked} implications checked, "
        f"{len(report.violations)} violations",
    )


def test_criterion_09_lambda_window_arithmetic():
    started = time.time()
    rng = np.random.default_rng(109)
    exact = True
    for _ in range(100):
        g1 = float(rng.uniform(0.1, 2.0))
        g2 = float(rng.uniform(0.0, g1 / 6.0)) or g1 / 12.0
        r = float(rng.uniform(0.1, 3.0))
        rho = float(rng.uniform(0.1, 3.0))
        lo, hi = lambda_window(ConditionParams(g1, g2, r, rho))
        if lo != 3.0 * g2 * r * r / rho or hi != g1 / 2.0 * r * r / rho:
            exact = False
    raised_exactly_when_empty = True
    for _ in range(200):
        g1 = float(rng.uniform(0.1, 2.0))
        g2 = float(rng.uniform(0.01, 0.5))
        try:
            lambda_window(ConditionParams(g1, g2, 1.0, 1.0))
            if 6.0 * g2 > g1:
                raised_exactly_when_empty = False
        except EmptyLambdaWindow:
            if not 6.0 * g2 > g1:
                raised_exactly_when_empty = False
    _report(
        9,
        "lambda-window arithmetic (100 params + raise condition)",
        exact and raised_exactly_when_empty,
        started,
    )


def test_criterion_10_regularized_recovery():
    started = time.time()
    d, s = 50, 3
    design = DesignSpec.identity(d)
    theta_star = np.zeros(d)
    theta_star[:s] = 1.0
    params = ConditionParams(gamma1=0.8, gamma2=0.1, r=0.25, rho=0.21875)
    lo, hi = lambda_window(params)
    obj = ObjectiveConfig((lo + hi) / 2.0, Regularizer.l1())
    noise = NoiseSpec("gaussian", 1.0)
    lam_lasso = 0.177
    clean_pass = bad_pass = 0
    clean_sup, bad_sup = [], []
    for seed in range(50):
        data = generate(1000, d, theta_star, design, noise, seed)
        p = make_partition(1000, 51)
        fit = mom_minimax_fit(data, p, obj, SolverConfig(seed=seed))
        clean_pass += theorem2_check(
            fit.theta_hat, theta_star, design, params, obj.regularizer
        ).passed
        clean_sup.append(
            support_recovery_error(lasso_fit(data, lam_lasso).theta, theta_star)
        )
        bad, _ = corrupt(
            data,
            CorruptionSpec(count=10, mode="huge_response", magnitude=1e6),
            seed + 7777,
        )
        fit_bad = mom_minimax_fit(bad, p, obj, SolverConfig(seed=seed))
        bad_pass += theorem2_check(
            fit_bad.theta_hat, theta_star, design, params, obj.regularizer
        ).passed
        bad_sup.append(
            support_recovery_error(lasso_fit(bad, lam_lasso).theta, theta_star)
        )
    clean_rate = clean_pass / 50.0
    bad_rate = bad_pass / 50.0
    sup_clean = float(np.median(clean_sup))
    sup_bad = float(np.median(bad_sup))
    lasso_broken = sup_bad >= 2.0 * sup_clean and sup_bad > sup_clean
    ok = clean_rate >= 0.9 and clean_rate - bad_rate <= 0.10 and lasso_broken
    _report(
        10,
        "regularized recovery + corruption degradation (50 seeds)",
        ok,
        started,
        f"theorem2 clean {clean_rate:.2f} corrupted {bad_rate:.2f}; "
        f"lasso support err {sup_clean:.0f} -> {sup_bad:.0f}",
    )


def test_criterion_11_simulate_determinism(tmp_path):
    started = time.time()
    cfg = {
        "data": {
            "generate": {
                "n_samples": 600,
                "dim": 3,
                "theta_star": [1.0, -0.5, 2.0],
                "covariance": "identity",
                "noise": {"kind": "gaussian", "scale": 1.0, "dof": None},
            }
        },
        "partition": {"blocks": 31},
        "solver": {"iterations": 120, "restarts": 2},
        "conditions": {"gamma1": 0.5, "gamma2": 0.2, "r": 2.0, "rho": 1.0},
        "trials": 4,
        "seed": 7,
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
    code1 = cli_main(["simulate", "--config", str(cfg_path), "--out", str(out1)])
    code2 = cli_main(["simulate", "--config", str(cfg_path), "--out", str(out2)])
    a = json.loads(out1.read_text())
    b = json.loads(out2.read_text())
    a.pop("meta")
    b.pop("meta")
    same = json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    _report(
        11,
        "simulate reports byte-identical (metadata excluded)",
        code1 == 0 and code2 == 0 and same,
        started,
    )
