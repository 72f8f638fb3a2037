import math

import numpy as np
import pytest

from onebitdet.analysis import null_moments
from onebitdet.detector import detector_coeffs
from onebitdet.errors import RejectedCovariance, ValidationError
from onebitdet.model import observe, default_params
from onebitdet.simulator import (DEFAULT_PERTURBATIONS, ExperimentConfig, Perturbation,
                                 RocCurve, agreement_count_baseline, empirical_roc,
                                 max_vertical_deviation, mc_joint_event_oracle,
                                 power_function, quantile_thresholds, roc_point, roc_sweep,
                                 run_trials, sensitivity_sweep, trial_bits)


@pytest.fixture
def small_cfg():
    return ExperimentConfig(trials_per_point=600, seed=11)


class TestConfig:
    @pytest.mark.parametrize("changes", [
        {"trials_per_point": 0}, {"generation_mode": "exact"}, {"corr_grid": ()},
        {"corr_grid": (0.5, 1.0)}, {"fixed_pfa": 1.0}, {"roc_points": 0},
        {"theory_structure": "banded"}, {"param_perturbations": ()},
    ])
    def test_invalid(self, small_cfg, changes):
        with pytest.raises(ValidationError):
            small_cfg.replace(**changes)

    def test_resolved_snr(self, small_cfg):
        from onebitdet.model import snr_db

        assert snr_db(small_cfg.resolved_params(snr_db=-2.5)) == pytest.approx(-2.5)
        assert small_cfg.resolved_params(corr=0.4).corr == 0.4


class TestRunTrials:
    def test_zero_corr_constant(self, small_cfg):
        cfg = small_cfg.replace(params=default_params(corr=0.0))
        for hyp in ("H0", "H1"):
            t = run_trials(cfg, hyp).column()
            assert np.all(t == -999 * math.log(2.0))

    def test_deterministic(self, small_cfg):
        a = run_trials(small_cfg, "H1")
        b = run_trials(small_cfg, "H1")
        assert a.statistics.tobytes() == b.statistics.tobytes()
        assert len(a) == small_cfg.trials_per_point

    def test_order_independent(self, small_cfg):
        # trial k depends only on (seed, hypothesis, k)
        full = run_trials(small_cfg, "H1").column()
        head = run_trials(small_cfg.replace(trials_per_point=300), "H1").column()
        np.testing.assert_array_equal(full[:300], head)
        params = small_cfg.resolved_params()
        np.testing.assert_array_equal(trial_bits(params, "H1", 11, 450, 452),
                                      trial_bits(params, "H1", 11, 0, 600)[450:452])

    def test_matches_single_observation(self, small_cfg):
        from onebitdet.detector import detect

        params = small_cfg.resolved_params()
        batch = run_trials(small_cfg, "H1")
        for k in (0, 17, 599):
            rng = np.random.default_rng(np.random.SeedSequence(11, spawn_key=(1, k)))
            r = observe(params, "H1", rng)
            assert detect(r, params).statistic == pytest.approx(batch.column()[k], abs=1e-9)
            assert batch.agreement_counts[k] == np.sum(r[1:] == r[:-1])

    def test_null_mean(self):
        cfg = ExperimentConfig(trials_per_point=20_000, seed=5)
        params = cfg.resolved_params()
        m = null_moments(detector_coeffs(params))
        t = run_trials(cfg, "H0").column()
        assert abs(t.mean() - m.mu0) < 3 * t.std(ddof=1) / math.sqrt(t.size)

    def test_bad_hypothesis(self, small_cfg):
        with pytest.raises(ValidationError):
            run_trials(small_cfg, "H3")

    def test_tridiagonal_mode_rejects_strong_corr(self):
        cfg = ExperimentConfig(trials_per_point=50, generation_mode="tridiagonal",
                               params=default_params(corr=0.85))
        with pytest.raises(RejectedCovariance):
            run_trials(cfg, "H1")

    def test_tridiagonal_mode_runs_mild_corr(self):
        cfg = ExperimentConfig(trials_per_point=50, generation_mode="tridiagonal",
                               params=default_params(corr=0.3))
        assert np.isfinite(run_trials(cfg, "H1").column()).all()


class TestEmpiricalRoc:
    def test_endpoints(self, rng):
        h0, h1 = rng.normal(0, 1, 500), rng.normal(1, 1, 500)
        roc = empirical_roc(h0, h1, [-np.inf, np.inf])
        assert (roc.pfa_emp[0], roc.pd_emp[0]) == (1.0, 1.0)
        assert (roc.pfa_emp[-1], roc.pd_emp[-1]) == (0.0, 0.0)

    def test_identical_batches_on_diagonal(self, rng):
        x = rng.normal(size=2000)
        roc = empirical_roc(x, x.copy())
        np.testing.assert_array_equal(roc.pfa_emp, roc.pd_emp)
        assert roc.auc() == pytest.approx(0.5, abs=1e-12)

    def test_monotone_and_sorted(self, rng):
        roc = empirical_roc(rng.normal(size=1000), rng.normal(0.5, 1, 1000))
        assert np.all(np.diff(roc.threshold) > 0)
        assert np.all(np.diff(roc.pfa_emp) <= 0) and np.all(np.diff(roc.pd_emp) <= 0)
        assert len(roc) == len(roc.threshold) <= 49
        assert np.all(np.isnan(roc.pfa_theory))

    def test_standard_errors(self, rng):
        roc = empirical_roc(rng.normal(size=400), rng.normal(size=100))
        np.testing.assert_allclose(roc.pfa_emp_se, np.sqrt(roc.pfa_emp * (1 - roc.pfa_emp) / 400))
        np.testing.assert_allclose(roc.pd_emp_se, np.sqrt(roc.pd_emp * (1 - roc.pd_emp) / 100))

    def test_perfect_separation_auc(self):
        roc = empirical_roc(np.zeros(10), np.ones(10), [0.5])
        assert roc.auc() == 1.0

    def test_empty(self):
        with pytest.raises(ValidationError):
            empirical_roc([], [1.0])

    def test_quantile_grid(self, rng):
        th = quantile_thresholds(rng.normal(size=1000), rng.normal(size=1000))
        assert th.size == 49


class TestExperiments:
    def test_roc_point_theory_columns(self, small_cfg):
        curve, base = roc_point(small_cfg, small_cfg.resolved_params(), "x")
        assert np.all((curve.pfa_theory >= 0) & (curve.pfa_theory <= 1))
        assert np.all(np.diff(curve.pfa_theory) <= 0)
        assert base.label.startswith("agreement-count baseline")

    def test_sweep_shapes(self, small_cfg):
        out = roc_sweep(small_cfg.replace(corr_grid=(0.4, 0.7)), "corr", with_theory=False)
        assert [v for v, *_ in out] == [0.4, 0.7]
        out = roc_sweep(small_cfg.replace(snr_grid_db=(-5.0,)), "snr", with_theory=False)
        assert len(out) == 1
        with pytest.raises(ValidationError):
            roc_sweep(small_cfg, "prior")

    def test_power_curve(self, small_cfg):
        prop, base = power_function(small_cfg.replace(snr_grid_db=(-10.0, 0.0)))
        assert prop.COLUMNS == ("snr_db", "pd_emp", "pd_emp_se", "pd_theory")
        assert np.all((prop.pd_emp >= 0) & (prop.pd_emp <= 1))
        assert np.all(np.isnan(base.pd_theory))

    def test_power_at_vanishing_snr(self):
        cfg = ExperimentConfig(trials_per_point=4000, snr_grid_db=(-60.0,), seed=3)
        prop, _ = power_function(cfg, with_theory=False)
        assert abs(prop.pd_emp[0] - 0.3) < 3 * math.sqrt(0.3 * 0.7 / 4000) * math.sqrt(2)

    def test_power_zero_corr(self):
        cfg = ExperimentConfig(trials_per_point=500, params=default_params(corr=0.0),
                               snr_grid_db=(0.0,))
        prop, _ = power_function(cfg)
        # constant statistic: nothing strictly exceeds the quantile threshold
        assert prop.pd_emp[0] == 0.0 and math.isnan(prop.pd_theory[0])

    def test_sensitivity_baseline_identical(self, small_cfg):
        cfg = small_cfg.replace(param_perturbations=(Perturbation("baseline"),
                                                     Perturbation("same")))
        out = sensitivity_sweep(cfg, with_theory=False)
        np.testing.assert_array_equal(out["baseline"].pd_emp, out["same"].pd_emp)
        assert max_vertical_deviation(out["baseline"], out["same"]).max() == 0.0

    def test_default_perturbations(self):
        names = [p.name for p in DEFAULT_PERTURBATIONS]
        assert names == ["baseline", "p_hat+10%", "p_hat-10%", "a+10%", "a-10%"]


class TestBaseline:
    def test_all_agree(self):
        assert agreement_count_baseline(np.ones(20), 18) == "H1"

    def test_alternating(self):
        assert agreement_count_baseline(np.resize([1, -1], 20), 0) == "H0"

    def test_equal_c_coincides(self):
        # with constant c > 1/2 the statistic is affine in the agreement count
        params = default_params(p10_init=0.9, n=300)
        cfg = ExperimentConfig(params=params, trials_per_point=2000, seed=8)
        from onebitdet.detector import DetectorCoeffs

        flat = DetectorCoeffs.from_parts(0.68, np.full(params.n - 1, 0.455))
        h0 = run_trials(cfg, "H0", flat, cfg.resolved_params())
        h1 = run_trials(cfg, "H1", flat, cfg.resolved_params())
        order0 = np.argsort(h0.column(), kind="stable")
        assert np.all(np.diff(h0.agreement_counts[order0]) >= 0)
        # count threshold k + 1/2 maps to the statistic's affine image of it
        ks = np.arange(140, 200) + 0.5
        m = params.n - 1
        ga, gd = flat.gain_agree[0], flat.gain_disagree[0]
        th = ks * ga + (m - ks) * gd - flat.offset
        a = empirical_roc(h0.column(), h1.column(), th)
        b = empirical_roc(h0.agreement_counts, h1.agreement_counts, ks)
        np.testing.assert_array_equal(a.pfa_emp, b.pfa_emp)
        np.testing.assert_array_equal(a.pd_emp, b.pd_emp)


class TestOracles:
    def test_zero_corr_quarters(self):
        trials = 100_000
        est = mc_joint_event_oracle(default_params(corr=0.0), [(10, 11), (10, 13)], trials, 4)
        for e in est.values():
            assert e.probs.sum() == 1.0
            assert np.all(np.abs(e.probs - 0.25) < 3 * np.sqrt(0.1875 / trials))

    @pytest.mark.parametrize("structure", ["tridiagonal", "ar"])
    def test_marginal_is_c(self, params, coeffs, structure):
        trials = 100_000
        est = mc_joint_event_oracle(params, [(10, 12)], trials, 6, structure=structure)[(10, 12)]
        p1 = est.probs[1].sum()
        c = coeffs.c[9]
        assert abs(p1 - c) < 3 * math.sqrt(c * (1 - c) / trials)

    def test_deterministic(self, params):
        a = mc_joint_event_oracle(params, [(3, 4)], 70_000, 1)[(3, 4)].probs
        b = mc_joint_event_oracle(params, [(3, 4)], 70_000, 1)[(3, 4)].probs
        np.testing.assert_array_equal(a, b)

    def test_invalid_pairs(self, params):
        with pytest.raises(ValidationError):
            mc_joint_event_oracle(params, [(0, 2)], 1000, 1)
        with pytest.raises(ValidationError):
            mc_joint_event_oracle(params, [(3, 3)], 1000, 1)
