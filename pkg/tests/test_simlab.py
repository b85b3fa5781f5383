"""Tests for the Monte-Carlo lab."""

import numpy as np
import pytest
from scipy.stats import norm

from adadetect import (
    GeneratorConfig,
    InvalidInputError,
    adadetect_procedure,
    gen_dataset,
    linear_scorer_for,
    marginal_storey_bh,
    marginal_storey_bh_procedure,
    monte_carlo,
    oracle_scorer_for,
    sample_least_favorable,
    verify_adaptive_bound,
)


class TestGenerators:
    def test_gaussian_sparse_mean_shift(self):
        cfg = GeneratorConfig(setting="gaussian-sparse", d=10, n=100, m=50, m1=50)
        mu = cfg.mean_shift()
        assert np.allclose(mu[:5], np.sqrt(2 * np.log(10)))
        assert np.all(mu[5:] == 0)
        data = gen_dataset(cfg, seed=0)
        # all test points are novelties here; their mean tracks mu
        assert np.allclose(data.test.mean(axis=0), mu, atol=0.6)
        assert data.is_novelty.sum() == 50

    def test_equicorrelated_rho_zero_independent(self):
        cfg = GeneratorConfig(setting="equicorrelated", d=2, n=5000, m=1,
                              m1=0, rho=0.0)
        data = gen_dataset(cfg, seed=1)
        c = np.corrcoef(data.nulls[:, 0], data.nulls[:, 1])[0, 1]
        assert abs(c) <= 3.0 / np.sqrt(5000)

    def test_equicorrelated_rho_one_degenerate(self):
        cfg = GeneratorConfig(setting="equicorrelated", d=3, n=50, m=10,
                              m1=4, rho=1.0, amplitude=2.0)
        data = gen_dataset(cfg, seed=2)
        # zero idiosyncratic noise: every null row equals the shared factor
        assert np.allclose(data.nulls, data.nulls[0], atol=0, rtol=0)
        assert np.allclose(data.test[:6], data.nulls[0], atol=0, rtol=0)
        assert np.allclose(data.test[6:], data.nulls[0] + cfg.mean_shift())

    def test_equicorrelated_factor_shared_within_replicate(self):
        cfg = GeneratorConfig(setting="equicorrelated", d=1, n=2000, m=2000,
                              m1=0, rho=0.9)
        data = gen_dataset(cfg, seed=3)
        pooled = np.concatenate([data.nulls[:, 0], data.test[:, 0]])
        # the factor is constant within a replicate, so the within-replicate
        # spread is the idiosyncratic 1 - rho, not 1
        assert pooled.var() == pytest.approx(0.1, abs=0.05)
        means = [np.concatenate([d.nulls[:, 0], d.test[:, 0]]).mean()
                 for d in (gen_dataset(cfg, seed=s) for s in range(30))]
        # across replicates the factor moves the mean with variance near rho
        assert np.var(means) == pytest.approx(0.9, rel=0.6)

    def test_beta_setting_margins(self):
        cfg = GeneratorConfig(setting="beta", d=4, n=4000, m=4000, m1=2000)
        data = gen_dataset(cfg, seed=4)
        assert data.nulls[:, 0].mean() == pytest.approx(0.5, abs=0.03)
        novel = data.test[data.is_novelty]
        assert novel[:, 0].mean() == pytest.approx(0.25, abs=0.03)
        assert data.nulls[:, 3].mean() == pytest.approx(0.5, abs=0.03)
        assert (data.nulls >= 0).all() and (data.nulls <= 1).all()

    def test_config_validation(self):
        with pytest.raises(InvalidInputError):
            GeneratorConfig(setting="cauchy", d=1, n=10, m=5, m1=0)
        with pytest.raises(InvalidInputError):
            GeneratorConfig(setting="beta", d=1, n=10, m=5, m1=6)
        with pytest.raises(InvalidInputError):
            GeneratorConfig(setting="equicorrelated", d=1, n=10, m=5, m1=0,
                            rho=1.5)

    def test_oracle_scorer_only_for_iid_settings(self):
        cfg = GeneratorConfig(setting="equicorrelated", d=1, n=10, m=5, m1=1)
        with pytest.raises(InvalidInputError):
            oracle_scorer_for(cfg)
        iid = GeneratorConfig(setting="gaussian-sparse", d=3, n=10, m=5, m1=1)
        scorer = oracle_scorer_for(iid)
        assert 0.0 <= scorer.score_samples(np.zeros((1, 3)))[0] <= 1.0


class TestMonteCarlo:
    CFG = GeneratorConfig(setting="gaussian-sparse", d=2, n=50, m=10, m1=1,
                          amplitude=2.0)

    def test_never_rejecting_gives_zero_rates(self):
        rep = monte_carlo(self.CFG, lambda data, seed: np.array([], dtype=int),
                          replicates=20, seed=0)
        assert rep.fdr_hat == 0.0 and rep.tdr_hat == 0.0
        assert rep.fdr_se == 0.0 and rep.tdr_se == 0.0

    def test_always_rejecting_forces_the_ratios(self):
        cfg = GeneratorConfig(setting="gaussian-sparse", d=2, n=50, m=10,
                              m1=1, amplitude=2.0)
        rep = monte_carlo(cfg, lambda data, seed: np.arange(10),
                          replicates=15, seed=0)
        assert rep.fdr_hat == pytest.approx(0.9)
        assert rep.tdr_hat == pytest.approx(1.0)

    def test_workers_do_not_change_results(self):
        proc = adadetect_procedure(linear_scorer_for(self.CFG), alpha=0.3)
        seq = monte_carlo(self.CFG, proc, replicates=12, seed=5, workers=1,
                          keep_replicates=True)
        par = monte_carlo(self.CFG, proc, replicates=12, seed=5, workers=2,
                          keep_replicates=True)
        assert np.array_equal(seq.fdp, par.fdp)
        assert np.array_equal(seq.tdp, par.tdp)

    def test_exact_fdr_identity_small(self):
        # alpha*(ell+1)/m = 0.5*20/10 integer; identity pins FDR = alpha*pi0
        cfg = GeneratorConfig(setting="gaussian-sparse", d=1, n=19, m=10,
                              m1=2, amplitude=2.5)
        proc = adadetect_procedure(linear_scorer_for(cfg), alpha=0.5, k=0)
        rep = monte_carlo(cfg, proc, replicates=800, seed=9,
                          keep_replicates=True)
        target = 0.5 * 8 / 10
        assert abs(rep.fdr_hat - target) <= 3 * rep.fdr_se

    def test_single_replicate_has_zero_se(self):
        proc = adadetect_procedure(linear_scorer_for(self.CFG), alpha=0.3)
        rep = monte_carlo(self.CFG, proc, replicates=1, seed=0)
        assert rep.fdr_se == 0.0 and rep.tdr_se == 0.0

    def test_tdp_convention_with_no_novelties(self):
        # m1 = 0: every rejection is false and the detection rate is 0, not 0/0
        cfg = GeneratorConfig(setting="gaussian-sparse", d=1, n=30, m=8, m1=0)
        rep = monte_carlo(cfg, lambda data, seed: np.arange(3),
                          replicates=10, seed=1)
        assert rep.fdr_hat == 1.0
        assert rep.tdr_hat == 0.0


class TestMarginalStoreyBH:
    def test_score_zero_gives_half(self):
        assert norm.sf(0.0) == pytest.approx(0.5)
        rej = marginal_storey_bh([0.0], mu_norm=1.0, alpha=0.4, lam=0.5)
        assert rej.k_hat == 0  # p = 0.5 alone is never rejected at 0.4

    def test_gaussian_quantile(self):
        # score = |mu| * 1.6449 maps to p close to 0.05
        p = norm.sf(1.6449)
        assert p == pytest.approx(0.05, abs=1e-4)
        rej = marginal_storey_bh([2.0 * 1.6449], mu_norm=2.0, alpha=0.2, lam=0.5)
        assert rej.k_hat == 1

    def test_deep_negative_scores_reject_nothing(self):
        rej = marginal_storey_bh([-50.0, -60.0], mu_norm=3.0, alpha=0.2, lam=0.5)
        assert rej.k_hat == 0

    def test_mu_norm_positive_required(self):
        with pytest.raises(InvalidInputError):
            marginal_storey_bh([1.0], mu_norm=0.0, alpha=0.1, lam=0.5)

    def test_procedure_wrapper(self):
        cfg = GeneratorConfig(setting="equicorrelated", d=1, n=100, m=20,
                              m1=5, amplitude=3.0)
        proc = marginal_storey_bh_procedure(cfg.mean_shift(), alpha=0.2,
                                            lam=0.5)
        data = gen_dataset(cfg, seed=0)
        rejected = proc(data, 0)
        assert set(rejected.tolist()) <= set(range(20))


class TestLeastFavorable:
    def test_anchor_and_alternative_coordinates(self):
        h0 = [0, 2, 3, 7]
        p = sample_least_favorable(m=8, ell=4, h0_indices=h0, i=2, seed=0)
        assert p[2] == pytest.approx(1 / 5)
        for j in (1, 4, 5, 6):
            assert p[j] == 0.0
        grid = set((np.arange(1, 6) / 5.0).tolist())
        for j in (0, 3, 7):
            assert p[j] in grid

    def test_anchor_must_be_null(self):
        with pytest.raises(InvalidInputError):
            sample_least_favorable(m=4, ell=2, h0_indices=[0, 1], i=3, seed=0)

    def test_ell_one_marginal_mass(self):
        # coordinate law: P(p' = 1/2) = E[1 - U_(2)] = 2/3
        hits = 0
        R = 3000
        for r in range(R):
            p = sample_least_favorable(m=2, ell=1, h0_indices=[0, 1], i=0,
                                       seed=r)
            hits += p[1] == 0.5
        frac = hits / R
        se = np.sqrt(frac * (1 - frac) / R)
        assert abs(frac - 2 / 3) <= 3 * se


class TestAdaptiveBound:
    def test_quantile_small_k0_bounded_by_one_exactly(self):
        # k0 <= m - m0 + 1 forces G >= m0 on every draw
        res = verify_adaptive_bound(m=20, ell=30, m0=10, estimator="quantile",
                                    param=5, replicates=2000, seed=0)
        assert res.estimate <= 1.0 + 1e-12

    def test_m0_zero_gives_empty_sum(self):
        res = verify_adaptive_bound(m=10, ell=5, m0=0, estimator="storey",
                                    param=2, replicates=100, seed=0)
        assert res.estimate == 0.0 and res.se == 0.0

    def test_storey_small_config_within_three_se(self):
        res = verify_adaptive_bound(m=20, ell=10, m0=20, estimator="storey",
                                    param=2, replicates=20000, seed=1)
        assert res.estimate <= 1.0 + 3.0 * res.se

    def test_inadmissible_parameters_rejected(self):
        with pytest.raises(InvalidInputError):
            verify_adaptive_bound(m=10, ell=5, m0=5, estimator="storey",
                                  param=1, replicates=100)
        with pytest.raises(InvalidInputError):
            verify_adaptive_bound(m=10, ell=5, m0=5, estimator="storey",
                                  param=6, replicates=100)
        with pytest.raises(InvalidInputError):
            verify_adaptive_bound(m=10, ell=5, m0=5, estimator="quantile",
                                  param=11, replicates=100)
        with pytest.raises(InvalidInputError):
            verify_adaptive_bound(m=10, ell=5, m0=5, estimator="bayes",
                                  param=1, replicates=100)

    def test_replicate_seeds_injective(self):
        a = verify_adaptive_bound(m=8, ell=6, m0=4, estimator="storey",
                                  param=3, replicates=500, seed=3)
        b = verify_adaptive_bound(m=8, ell=6, m0=4, estimator="storey",
                                  param=3, replicates=500, seed=3)
        c = verify_adaptive_bound(m=8, ell=6, m0=4, estimator="storey",
                                  param=3, replicates=500, seed=4)
        assert a.estimate == b.estimate
        assert a.estimate != c.estimate
