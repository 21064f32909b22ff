"""Acceptance gate: one test per criterion, each reporting a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py`` (lines appear in the terminal
summary) or ``python3 tests/test_acceptance.py`` (lines printed directly).
"""

import functools
import math
import time
from dataclasses import replace

import numpy as np
import pytest

from evmcv import distributions as dist
from evmcv import families as fam
from evmcv import harness, oracle
from evmcv.fit import evm_fit_linear, finite_difference_gradient
from evmcv.harness import DEFAULT_SEED, basket_config, run_experiment, table_configs
from evmcv.rng import derive_seed, generator
from evmcv.variance import empirical_variance

RESULTS = {}


def record(number, passed, detail, elapsed, limit=None):
    timing = f"{elapsed:.2f}s" + (f" (limit {limit:g}s)" if limit is not None else "")
    ok = passed and (limit is None or elapsed < limit)
    RESULTS[number] = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {detail}; {timing}"
    return ok


def row(table, experiment_id, **changes):
    cfg = next(c for c in table_configs(table) if c.experiment_id == experiment_id)
    return replace(cfg, **changes)


def seeds(k, label):
    return harness.replicate_seeds(derive_seed(DEFAULT_SEED, label), k)


# --- 1, 2: exact control variates ---------------------------------------------------------


def test_criterion_01_exact_cv_normal():
    t0 = time.perf_counter()
    rep = run_experiment(row(1, "t1-normal-sumsq"))
    elapsed = time.perf_counter() - t0
    ok = rep.svar_evm <= 1e-10 and rep.eff_evm >= 1e9
    assert record(1, ok, f"svar_evm={rep.svar_evm:.2e} eff_evm={rep.eff_evm:.2e}", elapsed, 1)


def test_criterion_02_exact_cv_exponential():
    t0 = time.perf_counter()
    rep = run_experiment(row(1, "t1-exp-sumsq"))
    elapsed = time.perf_counter() - t0
    assert record(2, rep.svar_evm <= 1e-8, f"svar_evm={rep.svar_evm:.2e}", elapsed, 1)


# --- 3: analytic svar ------------------------------------------------------------------------

E1 = math.e**2 - math.e
C1 = (1 + math.exp(-2)) / 2 - math.exp(-1)
ANALYTIC = [
    (1, "t1-normal-sumexp", E1),
    (1, "t1-normal-sumcos", C1),
    (1, "t1-exp-sumsq", 20.0),
    (2, "t2-normal-sumsq", 20.0),
    (2, "t2-normal-sumexp", 10 * E1),
]


def test_criterion_03_analytic_svar():
    t0 = time.perf_counter()
    parts, ok = [], True
    for table, eid, exact in ANALYTIC:
        rep = run_experiment(row(table, eid, n_test=100_000))
        rel = rep.svar / exact - 1
        ok &= abs(rel) <= 0.05
        parts.append(f"{eid} {rep.svar:.4f} vs {exact:.4f} ({rel:+.1%})")
    elapsed = time.perf_counter() - t0
    assert record(3, ok, "; ".join(parts), elapsed, 10)


# --- 4, 5: ten-dimensional linear families ----------------------------------------------------


def test_criterion_04_evm_beats_ls():
    t0 = time.perf_counter()
    wins, pairs = 0, []
    for s in seeds(10, "acceptance/4"):
        rep = run_experiment(row(2, "t2-normal-sumexp", seed=s))
        wins += rep.svar_evm * 10 <= rep.svar_ls
        pairs.append(f"{rep.svar_evm:.3f}/{rep.svar_ls:.1f}")
    elapsed = time.perf_counter() - t0
    assert record(4, wins >= 8, f"{wins}/10 seeds with 10*svar_evm <= svar_ls "
                  f"(evm/ls: {', '.join(pairs)})", elapsed, 60)


def test_criterion_05_small_sample():
    t0 = time.perf_counter()
    vals = [run_experiment(row(3, "t3-normal-sumcos", seed=s)).svar_evm
            for s in seeds(10, "acceptance/5")]
    med = float(np.median(vals))
    elapsed = time.perf_counter() - t0
    assert record(5, med <= 0.2, f"median svar_evm={med:.4f} over 10 seeds (limit 0.2)", elapsed)


# --- 6: rotated nonlinear family ---------------------------------------------------------------


def test_criterion_06_rotated_family():
    t0 = time.perf_counter()
    ratios = [run_experiment(row(5, "t5-rotated-sumsq", seed=s)).ratio
              for s in seeds(5, "acceptance/6")]
    med = float(np.median(ratios))
    elapsed = time.perf_counter() - t0
    assert record(6, med >= 20, f"median ratio={med:.1f} over 5 seeds "
                  f"({', '.join(f'{r:.1f}' for r in ratios)})", elapsed, 300)


# --- 7, 8: baskets -------------------------------------------------------------------------------


@functools.lru_cache(maxsize=None)
def basket_ratio(dim, variant, seed):
    return run_experiment(basket_config(dim, variant, seed=seed, n_test=200_000)).ratio


def test_criterion_07_basket_first_family():
    t0 = time.perf_counter()
    ss = seeds(5, "acceptance/7")
    r1 = [basket_ratio(1, 1, s) for s in ss]
    r10 = [basket_ratio(10, 1, s) for s in ss]
    m1, m10 = float(np.median(r1)), float(np.median(r10))
    elapsed = time.perf_counter() - t0
    assert record(7, m1 >= 50 and m10 >= 20,
                  f"median ratio d=1 {m1:.1f} (>=50), d=10 {m10:.1f} (>=20)", elapsed, 600)


def test_criterion_08_basket_nesting():
    t0 = time.perf_counter()
    ss = seeds(5, "acceptance/7")
    r1 = np.array([basket_ratio(10, 1, s) for s in ss])
    r2 = np.array([basket_ratio(10, 2, s) for s in ss])
    med_diff = float(np.median(r2 - r1))
    elapsed = time.perf_counter() - t0
    assert record(8, med_diff >= 0,
                  f"d=10 median ratio second {np.median(r2):.1f} vs first {np.median(r1):.1f}, "
                  f"median paired difference {med_diff:+.1f}", elapsed)


# --- 9-13: property substitutes --------------------------------------------------------------------


def test_criterion_09_u_statistic_identity():
    t0 = time.perf_counter()
    rng = generator(derive_seed(DEFAULT_SEED, "acceptance/9"))
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 201))
        v = rng.normal(rng.uniform(-50, 50), rng.uniform(0.01, 10), n)
        diff = v[:, None] - v[None, :]
        pair = float(np.sum(np.triu(diff * diff, 1))) / (n * (n - 1))
        worst = max(worst, abs(empirical_variance(v) - pair) / pair)
    elapsed = time.perf_counter() - t0
    assert record(9, worst <= 1e-12, f"max relative difference {worst:.1e}", elapsed, 1)


def acceptance_families():
    basket = dist.product_density(
        [dist.lognormal_gbm(0.5 + 0.1 * i, 0.5, 1.0, 1.0) for i in range(10)])
    mvn = dist.mvn(dist.random_covariance(10, derive_seed(DEFAULT_SEED, "covariance")))
    return {
        "poly1d/normal": fam.poly1d_family(dist.std_normal(1)),
        "poly1d/exp": fam.poly1d_family(dist.exponential_unit()),
        "additive_poly/normal": fam.additive_poly_family(
            dist.product_density([dist.std_normal(1)] * 10)),
        "additive_poly/exp": fam.additive_poly_family(
            dist.product_density([dist.exponential_unit()] * 10)),
        "gauss_hermite": fam.gaussian_hermite_family(mvn),
        "rotated_poly": fam.rotated_poly_family(mvn),
        "basket_exp1": fam.basket_exp_family(basket, 1),
        "basket_exp2": fam.basket_exp_family(basket, 2),
    }


def test_criterion_10_stein_zero_mean():
    t0 = time.perf_counter()
    worst, failures = {}, 0
    for name, family in acceptance_families().items():
        rng = generator(derive_seed(DEFAULT_SEED, f"acceptance/10/{name}"))
        z = []
        for j in range(20):
            a = fam.random_parameters(family, rng)
            mean, se = fam.cv_mean_check(family, a, 100_000,
                                         derive_seed(DEFAULT_SEED, f"acceptance/10/{name}/{j}"))
            z.append(abs(mean) / se if se > 0 else 0.0)
        failures += sum(v > 4 for v in z)
        worst[name] = max(z)
    elapsed = time.perf_counter() - t0
    detail = ", ".join(f"{k} {v:.2f}" for k, v in worst.items())
    assert record(10, failures == 0, f"max |mean|/stderr per family: {detail}", elapsed, 30)


ZV_CASES = [
    ("normal x^2", lambda x: x[:, 0] ** 2, dist.std_normal(1)),
    ("normal exp", lambda x: np.exp(x[:, 0]), dist.std_normal(1)),
    ("normal cos", lambda x: np.cos(x[:, 0]), dist.std_normal(1)),
    ("normal inv", lambda x: 1 / (1 + np.abs(x[:, 0])), dist.std_normal(1)),
    ("exp x^2", lambda x: x[:, 0] ** 2, dist.exponential_unit()),
    ("exp cos", lambda x: np.cos(x[:, 0]), dist.exponential_unit()),
    ("exp inv", lambda x: 1 / (1 + x[:, 0]), dist.exponential_unit()),
]


def test_criterion_11_zero_variance_oracle():
    t0 = time.perf_counter()
    quad = oracle.QuadratureSpec(tol=1e-10)
    parts, worst = [], 0.0
    for name, f, dens in ZV_CASES:
        grid = np.linspace(-4, 4, 81) if dens.density_id == "std_normal" else np.linspace(
            0.01, 10, 100)
        resid = oracle.verify_zero_variance(f, dens, oracle.zero_variance_phi_1d(f, dens, quad),
                                            grid)
        worst = max(worst, resid)
        parts.append(f"{name} {resid:.1e}")
    elapsed = time.perf_counter() - t0
    assert record(11, worst <= 1e-5, "grid residuals: " + ", ".join(parts), elapsed, 5)


def test_criterion_12_lower_bound():
    t0 = time.perf_counter()
    n, trials = 10, 10_000
    freq = oracle.lower_bound_scenario(n, trials, derive_seed(DEFAULT_SEED, "acceptance/12"))
    p = 0.9**9
    floor = p - 4 * math.sqrt(p * (1 - p) / trials)
    elapsed = time.perf_counter() - t0
    assert record(12, freq >= floor, f"frequency {freq:.4f} >= {floor:.4f}", elapsed, 5)


def test_criterion_13_stationarity():
    t0 = time.perf_counter()
    worst, worst_id = 0.0, ""
    for cfg in table_configs(1) + table_configs(2):
        density, _ = harness.build_density(cfg.density, cfg.seed)
        family = harness.build_family(cfg.family, density)
        f = harness.INTEGRANDS[cfg.integrand]
        data = density.sample(cfg.n_train, derive_seed(cfg.seed, "train"))
        fit = evm_fit_linear(f, family, data)
        g = np.linalg.norm(finite_difference_gradient(f, family, fit.a_hat, data))
        score = g / (1 + fit.objective)
        if score >= worst:
            worst, worst_id = score, cfg.experiment_id
    elapsed = time.perf_counter() - t0
    assert record(13, worst <= 1e-6,
                  f"max |grad|/(1+objective) = {worst:.1e} ({worst_id}) over 14 configs", elapsed)


if __name__ == "__main__":
    for name, func in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                func()
            except AssertionError:
                pass
    for number in sorted(RESULTS):
        print(RESULTS[number])
