"""Acceptance checks, one test per criterion, each at its stated tolerance.

Run ``pytest tests/test_acceptance.py -v``; the terminal summary prints a
PASS/FAIL line per criterion with the measured quantity.
"""
import time

import numpy as np
import pytest
from scipy import stats

from iowmed.cli import main
from iowmed.composition import aitchison_distance, close, ilr_transform
from iowmed.glm import design_matrix, fit_logistic, fit_ols, logistic_loglik, logistic_score
from iowmed.exceptions import WeightModelFailure
from iowmed.harness import SweepConfig, run_power_sweep, run_type1_sweep
from iowmed.io import read_record
from iowmed.mediation import (
    MediationInput,
    compute_iow_weights,
    fit_direct_effect,
    fit_total_effect,
    indirect_effect,
    permutation_test,
)
from iowmed.reduction import reduce
from iowmed.seeding import derive_seed
from iowmed.umap import UmapConfig, exact_knn, umap_embed

# 1% critical value of the one-sample KS statistic at n = 200 (scipy.stats.kstwo.ppf(0.99, 200))
KS_CRIT_200_1PCT = 0.11415556228260802


def null_config(family):
    return SweepConfig(
        n_grid=(100,), p_rules=("equal_n",), effect_grid=(1.0,), t_grid=(5,), families=(family,),
        strategies=("umap",), n_sims=200, B=200, alpha_grid=(0.05, 0.01), master_seed=2024,
    )


@pytest.mark.criterion(1, "ilr isometry, 100 pairs, p in {3, 5, 20}, tol 1e-9")
def test_ilr_isometry(measured):
    rng = np.random.default_rng(1)
    worst = 0.0
    for p in (3, 5, 20):
        for _ in range(100):
            a, b = close(rng.dirichlet(np.ones(p), 2))
            d = np.linalg.norm(ilr_transform(a)[0] - ilr_transform(b)[0])
            worst = max(worst, abs(d - aitchison_distance(a, b)))
    measured(f"max error {worst:.2e}")
    assert worst <= 1e-9


@pytest.mark.criterion(2, "2x2 logistic vs log cross-ratio (1e-6), OLS vs normal equations (1e-10)")
def test_glm_oracles(measured):
    t0 = time.perf_counter()
    errs = []
    for a, b, c, d in [(40, 10, 10, 40), (7, 13, 22, 5), (3, 30, 15, 15)]:
        E = np.r_[np.ones(a + b), np.zeros(c + d)]
        y = np.r_[np.ones(a), np.zeros(b), np.ones(c), np.zeros(d)]
        fit = fit_logistic(design_matrix(E), y)
        errs.append(abs(fit.coefficients[1] - np.log(a * d / (b * c))))
        errs.append(abs(fit.coefficients[0] - np.log(c / d)))
    # y = 1, 2, 4 at x = 0, 1, 2: slope 3/2 and intercept 7/3 - 3/2 = 5/6 by hand
    ols = fit_ols(design_matrix([0.0, 1.0, 2.0]), np.array([1.0, 2.0, 4.0]))
    ols_err = np.max(np.abs(ols.coefficients - [5 / 6, 3 / 2]))
    measured(f"logistic {max(errs):.1e}, ols {ols_err:.1e}")
    assert max(errs) <= 1e-6
    assert ols_err <= 1e-10
    assert time.perf_counter() - t0 < 1


@pytest.mark.criterion(3, "logistic gradient vs central differences, 20 points, rel err 1e-5")
def test_gradient_check(measured):
    rng = np.random.default_rng(3)
    n, k = 200, 4
    X = design_matrix(rng.normal(size=(n, k - 1)))
    y = (rng.random(n) < 0.4).astype(float)
    w = rng.uniform(0.5, 2.0, n)
    h = 1e-5
    worst = 0.0
    for _ in range(20):
        beta = rng.normal(scale=0.5, size=k)
        fd = np.array([
            (logistic_loglik(beta + h * e, X, y, w) - logistic_loglik(beta - h * e, X, y, w)) / (2 * h)
            for e in np.eye(k)
        ])
        g = logistic_score(beta, X, y, w)
        worst = max(worst, np.linalg.norm(g - fd) / np.linalg.norm(g))
    measured(f"max rel err {worst:.1e}")
    assert worst <= 1e-5


@pytest.mark.criterion(4, "IOW weights: unexposed exactly 1, exposed 1/odds within 1e-12, 1000 fits")
def test_weight_rule(measured):
    rng = np.random.default_rng(4)
    fits, worst, skipped = 0, 0.0, 0
    while fits < 1000:
        n = int(rng.integers(30, 200))
        k = int(rng.integers(1, 4))
        U = rng.normal(size=(n, k))
        E = (rng.random(n) < 1 / (1 + np.exp(-U @ rng.normal(scale=0.7, size=k)))).astype(float)
        if not 0 < E.sum() < n:
            continue
        inp = MediationInput(E, rng.normal(size=n), U)
        try:
            w = compute_iow_weights(inp)
        except WeightModelFailure:
            skipped += 1
            continue
        fits += 1
        X = design_matrix(U)
        beta = fit_logistic(X, E).coefficients
        assert np.all(w[E == 0] == 1.0)
        inv_odds = np.exp(-(X[E == 1] @ beta))
        worst = max(worst, np.max(np.abs(w[E == 1] - inv_odds) / inv_odds))
    measured(f"max rel dev {worst:.1e}, {skipped} separated draws redrawn")
    assert worst <= 1e-12


@pytest.mark.criterion(5, "linear SEM: mean |T - b1 c2| / |b1 c2| <= 10%, n 2000, 50 reps")
def test_linear_sem(measured):
    rel = []
    for rep in range(50):
        rng = np.random.default_rng([5, rep])
        n = 2000
        E = (rng.random(n) < 0.5).astype(float)
        M = 1.0 * E + rng.normal(size=n)
        Y = 1.0 * E + 1.0 * M + rng.normal(size=n)
        inp = MediationInput(E, Y, M)
        t_obs = indirect_effect(fit_total_effect(inp), fit_direct_effect(inp, compute_iow_weights(inp)))
        b1 = fit_ols(design_matrix(E), M).coefficients[1]
        c2 = fit_ols(design_matrix(E, M), Y).coefficients[2]
        rel.append(abs(t_obs - b1 * c2) / abs(b1 * c2))
    measured(f"mean rel err {np.mean(rel):.3f}")
    assert np.mean(rel) <= 0.10


@pytest.mark.slow
@pytest.mark.criterion(6, "type-I continuous, alpha 0.05 in [0.021, 0.085], 200 reps")
def test_type1_continuous(measured):
    row = {r.alpha: r for r in run_type1_sweep(null_config("continuous"))}[0.05]
    measured(f"rate {row.rejection_rate:.3f} over {row.n_sims_completed}, {row.n_failures} failed")
    assert 0.021 <= row.rejection_rate <= 0.085


@pytest.mark.slow
@pytest.mark.criterion(7, "type-I dichotomous, alpha 0.01 <= 0.03, 200 reps")
def test_type1_dichotomous(measured):
    rows = {r.alpha: r for r in run_type1_sweep(null_config("dichotomous"))}
    row = rows[0.01]
    measured(f"rate {row.rejection_rate:.3f} over {row.n_sims_completed}, {row.n_failures} failed")
    assert row.rejection_rate <= 0.03


@pytest.mark.slow
@pytest.mark.criterion(8, "power trend, 50 sims: (5,10,300) beats (5,10,50) and (0.5,1,300) by >= 0.15")
def test_power_trend(measured):
    common = dict(p_rules=("equal_n",), families=("continuous",), strategies=("umap",), n_sims=50, B=200,
                  alpha_grid=(0.05,), master_seed=8)
    strong = run_power_sweep(SweepConfig(n_grid=(50, 300), effect_grid=(5.0,), t_grid=(10,), **common))
    weak = run_power_sweep(SweepConfig(n_grid=(300,), effect_grid=(0.5,), t_grid=(1,), **common))
    power = {(r.cell.effect, r.cell.t, r.cell.n): r.rejection_rate for r in strong + weak}
    top = power[(5.0, 10, 300)]
    small_n = power[(5.0, 10, 50)]
    small_effect = power[(0.5, 1, 300)]
    measured(f"power {top:.2f} vs n50 {small_n:.2f}, vs weak {small_effect:.2f}")
    assert top - small_n >= 0.15
    assert top - small_effect >= 0.15


@pytest.mark.slow
@pytest.mark.criterion(9, "global null p-values: KS vs U(0,1) below the 1% critical value, 200 reps")
def test_null_uniformity(measured):
    # U, E and Y mutually independent; n = 100, two mediator components, B = 200
    ps = []
    for rep in range(200):
        rng = np.random.default_rng([9, rep])
        n = 100
        inp = MediationInput((rng.random(n) < 0.5).astype(float), rng.normal(size=n), rng.normal(size=(n, 2)))
        ps.append(permutation_test(inp, B=200, seed=derive_seed(9, rep)).p_value)
    ks = stats.kstest(ps, "uniform").statistic
    measured(f"KS {ks:.4f} (crit {KS_CRIT_200_1PCT:.4f})")
    assert ks < KS_CRIT_200_1PCT


@pytest.mark.criterion(10, "power sweep byte-identical across worker counts")
def test_sweep_determinism(measured, tmp_path):
    base = ["power", "--n-grid", "40,60", "--p-rules", "equal_n,double_n", "--effect-grid", "0.5,5",
            "--t-grid", "1", "--families", "continuous,dichotomous", "--n-sims", "3", "--b", "30", "--seed", "10"]
    assert main([*base, "--workers", "1", "--output", str(tmp_path / "a.csv")]) == 0
    assert main([*base, "--workers", "2", "--output", str(tmp_path / "b.csv")]) == 0
    a, b = (tmp_path / "a.csv").read_bytes(), (tmp_path / "b.csv").read_bytes()
    measured(f"{len(a.splitlines()) - 1} rows")
    assert a == b


@pytest.mark.criterion(11, "UMAP: two 10-D clusters, 1-NN purity >= 0.9, exact reproducibility")
def test_umap_sanity(measured):
    rng = np.random.default_rng(11)
    labels = np.repeat([0, 1], 100)
    X = rng.normal(size=(200, 10))
    X[labels == 1, 0] += 10.0
    cfg = UmapConfig(seed=11)
    Y = umap_embed(X, cfg)
    idx, _ = exact_knn(Y, 2)
    purity = float(np.mean(labels[idx[:, 1]] == labels))
    measured(f"purity {purity:.3f}")
    assert purity >= 0.9
    np.testing.assert_array_equal(Y, umap_embed(X, cfg))
    np.testing.assert_array_equal(reduce(X, "umap", seed=3).values, reduce(X, "umap", seed=3).values)


@pytest.mark.criterion(12, "simulate -> test end to end yields a valid result record")
def test_end_to_end(measured, tmp_path):
    sim = ["simulate", "--n", "100", "--p", "100", "--t", "5", "--effect", "1", "--seed", "3", "--out-dir", str(tmp_path)]
    assert main(sim) == 0
    for family in ("continuous", "dichotomous"):
        meta = tmp_path / "metadata.csv"
        if family == "dichotomous":
            assert main([*sim[:-2], "--family", "dichotomous", "--out-dir", str(tmp_path / "d")]) == 0
            meta = tmp_path / "d" / "metadata.csv"
        out = tmp_path / f"{family}.csv"
        argv = ["test", "--counts", str(meta.parent / "counts.csv"), "--metadata", str(meta), "--exposure", "exposure",
                "--outcome", "outcome", "--family", family, "--b", "1000", "--seed", "7", "--output", str(out)]
        assert main(argv) == 0
        rec = read_record(out)
        assert set(rec) >= {"beta1", "gamma1", "t_obs", "p_value", "B", "n_failed_permutations", "seed"}
        p = float(rec["p_value"])
        assert 0 <= p <= 1 and rec["B"] == "1000" and rec["seed"] == "7"
        assert int(rec["n_failed_permutations"]) < 1000
        assert float(rec["t_obs"]) == float(rec["beta1"]) - float(rec["gamma1"])
    measured("continuous and dichotomous records written")
