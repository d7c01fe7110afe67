import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from iowmed.exceptions import InvalidParameterError
from iowmed.mediation import OutcomeFamily
from iowmed.simulate import (
    SimScenario,
    draw_taxon_params,
    generate,
    simulate_exposure,
    simulate_microbiome,
    simulate_outcome,
    standardized_abundance,
    with_seed,
)


class TestScenario:
    def test_associated_count(self):
        assert SimScenario(p=100, frac_assoc=0.5).n_associated == 50
        assert SimScenario(p=101, frac_assoc=0.5).n_associated == 51

    @pytest.mark.parametrize(
        "kw",
        [dict(n=9), dict(t=51), dict(t=0), dict(frac_assoc=0.0), dict(mediator_outcome_effect=np.inf)],
    )
    def test_invalid(self, kw):
        with pytest.raises(InvalidParameterError):
            SimScenario(**kw)

    def test_family_parsed(self):
        assert SimScenario(family="dichotomous").family is OutcomeFamily.DICHOTOMOUS


class TestExposure:
    def test_prevalence(self):
        assert 0.49 <= simulate_exposure(100_000, 0).mean() <= 0.51

    def test_both_classes(self):
        for seed in range(50):
            E = simulate_exposure(10, seed)
            assert 0 < E.sum() < 10

    def test_seed_stable(self):
        np.testing.assert_array_equal(simulate_exposure(50, 3), simulate_exposure(50, 3))

    def test_small_n(self):
        with pytest.raises(InvalidParameterError):
            simulate_exposure(5, 0)


class TestMicrobiome:
    def test_taxon_params_in_range(self):
        params = draw_taxon_params(500, np.random.default_rng(0))
        assert all(0.3 <= tp.zero_prob <= 0.7 and 0.5 <= tp.log_sd <= 1.5 for tp in params)

    def test_exactly_half_associated(self):
        sc = SimScenario(n=50, p=100)
        counts, assoc = simulate_microbiome(simulate_exposure(50, 0), sc)
        assert counts.values.shape == (50, 100)
        assert assoc.size == 50 == np.unique(assoc).size

    def test_associated_taxa_shifted(self):
        sc = SimScenario(n=500, p=40, seed=1)
        E = simulate_exposure(500, 1)
        counts, assoc = simulate_microbiome(E, sc)
        logc = np.log1p(counts.values)
        for j in assoc:
            res = stats.ttest_ind(logc[E == 1, j], logc[E == 0, j], alternative="greater")
            assert res.pvalue < 0.01

    def test_null_scenario_indistinguishable(self):
        sc = SimScenario(n=500, p=40, seed=2, null_scenario=True)
        E = simulate_exposure(500, 2)
        counts, assoc = simulate_microbiome(E, sc)
        logc = np.log1p(counts.values)
        p = np.array([stats.ttest_ind(logc[E == 1, j], logc[E == 0, j]).pvalue for j in assoc])
        # 20 null tests: a Bonferroni rejection would be a 5% event
        assert p.min() > 0.05 / p.size

    def test_zero_fraction_band(self):
        for seed in range(5):
            frac = np.mean(generate(SimScenario(seed=seed)).counts.values == 0)
            assert 0.2 <= frac <= 0.8

    def test_counts_are_integers(self):
        v = generate(SimScenario(n=30, p=20, t=2)).counts.values
        np.testing.assert_array_equal(v, np.round(v))
        assert v.min() >= 0


class TestOutcome:
    def test_standardized_moments(self):
        z = standardized_abundance(generate(SimScenario(n=200, p=30, t=3)).counts.values)
        keep = z.std(axis=0) > 0
        np.testing.assert_allclose(z[:, keep].mean(axis=0), 0, atol=1e-12)
        np.testing.assert_allclose(z[:, keep].std(axis=0, ddof=1), 1, atol=1e-12)

    def test_standardized_constant_taxon(self):
        z = standardized_abundance(np.array([[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]))
        np.testing.assert_array_equal(z[:, 1], 0)

    def test_effect_orders_correlation(self):
        base = SimScenario(n=500, p=50, t=5, seed=4)
        data = generate(base)
        zsum = standardized_abundance(data.counts.values)[:, data.true_mediator_ids].sum(axis=1)

        def corr(effect):
            sc = SimScenario(n=500, p=50, t=5, seed=4, mediator_outcome_effect=effect)
            Y = simulate_outcome(data.exposure, data.counts, data.true_mediator_ids, sc)
            return np.corrcoef(zsum, Y)[0, 1]

        assert corr(5.0) > corr(0.5)

    def test_zero_effects_give_pure_noise(self):
        sc = SimScenario(n=400, p=20, t=0, null_scenario=True, mediator_outcome_effect=0.0, exposure_outcome_effect=0.0)
        data = generate(sc)
        assert abs(stats.pearsonr(data.exposure, data.outcome).statistic) < 4 / np.sqrt(400)
        assert data.outcome.std() == pytest.approx(1.0, abs=0.15)

    def test_dichotomous_binary_and_balanced(self):
        Y = generate(SimScenario(family="dichotomous", seed=5)).outcome
        assert set(np.unique(Y)) == {0.0, 1.0}
        assert 0.3 < Y.mean() < 0.7

    def test_empty_true_set_rejected(self):
        sc = SimScenario(n=20, p=10, t=1)
        with pytest.raises(InvalidParameterError):
            simulate_outcome(np.zeros(20), np.ones((20, 10)), [], sc)


class TestGenerate:
    def test_shapes(self):
        d = generate(SimScenario(n=60, p=120, t=10))
        assert d.exposure.shape == (60,) and d.outcome.shape == (60,)
        assert d.counts.values.shape == (60, 120)
        assert d.true_mediator_ids.size == 10

    def test_single_true_mediator(self):
        d = generate(SimScenario(n=30, p=30, t=1))
        assert d.true_mediator_ids.size == 1
        assert d.true_mediator_ids[0] in d.associated_ids

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**32), st.integers(1, 10))
    def test_truth_containment(self, seed, t):
        d = generate(SimScenario(n=20, p=20, t=t, seed=seed))
        assert set(d.true_mediator_ids) <= set(d.associated_ids)
        assert np.unique(d.true_mediator_ids).size == t

    def test_seed_stable(self):
        sc = SimScenario(n=40, p=40, family="dichotomous", seed=9)
        a, b = generate(sc), generate(sc)
        np.testing.assert_array_equal(a.counts.values, b.counts.values)
        np.testing.assert_array_equal(a.outcome, b.outcome)
        np.testing.assert_array_equal(a.true_mediator_ids, b.true_mediator_ids)
        c = generate(with_seed(sc, 10))
        assert not np.array_equal(a.counts.values, c.counts.values)
