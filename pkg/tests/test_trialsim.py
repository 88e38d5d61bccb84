import math

import numpy as np
import pytest

from bmw_design.calibration import DesignSpec, GridSpec, ToxSpec
from bmw_design.inference import AnalysisSchedule, boundary_set
from bmw_design.statkernel import Rng, normal_quantile
from bmw_design.trialsim import (
    Decision,
    StopReason,
    TruthLabels,
    calibrate_from_raw_data,
    estimate_null_tie_probability,
    estimate_ocs,
    raw_z_paths,
    run_conventional,
    run_trial_bmw,
    run_trial_graphical,
    sample_patient,
)
from bmw_design.winratio import (
    PatientOutcome,
    ScenarioTruth,
    count_wlt_codes,
    outcome_code,
    theoretical_wlt,
)

SCHEDULE = AnalysisSchedule((80, 120, 160), 0.5)
SCEN_NULL = ScenarioTruth((0.40, 0.30), (0.40, 0.30))
SCEN_ALT = ScenarioTruth((0.40, 0.30), (0.40, 0.66))
TOX = ToxSpec(delta=0.1, q_t0_null=0.3, q_t1_alt=0.3)


def make_spec(**kwargs):
    defaults = dict(alpha=0.1, schedule=SCHEDULE, theta_alt=0.4972,
                    p_t_null=0.3118, p_t_alt=0.2322, n_paths=5000, tox=TOX, seed=0)
    defaults.update(kwargs)
    return DesignSpec(**defaults)


BOUND_E = boundary_set(0.92, 0.90, SCHEDULE)
BOUND_T = boundary_set(0.93, 0.80, SCHEDULE)


class TestSamplePatient:
    def test_marginals(self):
        s = ScenarioTruth((0.40, 0.30), (0.40, 0.66), q_t0=0.2, q_t1=0.35)
        rng = Rng(1)
        n = 100_000
        from bmw_design.trialsim import _draw_arm, _threshold_matrix
        chol, cut0, cut1 = _threshold_matrix(s)
        codes, tox = _draw_arm(n, chol, cut1, rng.generator())
        x1 = (codes >> 1) & 1
        x2 = codes & 1
        assert x1.mean() == pytest.approx(0.40, abs=0.005)
        assert x2.mean() == pytest.approx(0.66, abs=0.005)
        assert tox.mean() == pytest.approx(0.35, abs=0.005)

    def test_threshold_is_quantile(self):
        from bmw_design.trialsim import _threshold_matrix
        s = ScenarioTruth((0.40, 0.30), (0.40, 0.66))
        _, cut0, _ = _threshold_matrix(s)
        assert cut0[0] == pytest.approx(normal_quantile(0.6), abs=1e-10)
        assert cut0[0] == pytest.approx(0.2533, abs=1e-3)

    def test_zero_latent_correlation_independent(self):
        s = ScenarioTruth((0.5, 0.5), (0.5, 0.5), rho_ee=0.0, rho_et=0.0)
        from bmw_design.trialsim import _draw_arm, _threshold_matrix
        chol, cut0, _ = _threshold_matrix(s)
        codes, _ = _draw_arm(100_000, chol, cut0, Rng(2).generator())
        x1 = ((codes >> 1) & 1).astype(float)
        x2 = (codes & 1).astype(float)
        assert abs(np.corrcoef(x1, x2)[0, 1]) < 0.01

    def test_single_patient_api(self):
        p = sample_patient(SCEN_ALT, 1, Rng(3))
        assert p.arm == 1
        assert set(p.x_e) <= {0, 1}

    def test_empirical_wlt_matches_theory(self):
        # cross-module oracle: large simulated cohorts vs exact cell algebra
        s = SCEN_NULL
        from bmw_design.trialsim import _draw_arm, _threshold_matrix
        chol, cut0, cut1 = _threshold_matrix(s)
        gen = Rng(4).generator()
        n = 2000
        ct, _ = _draw_arm(n, chol, cut1, gen)
        cc, _ = _draw_arm(n, chol, cut0, gen)
        counts = count_wlt_codes(ct, cc, 4)
        p_w, p_l, p_t, _ = theoretical_wlt(s)
        # pairwise fractions concentrate at O(1/sqrt(n)) per arm
        se = 3.0 / math.sqrt(n)
        assert counts.n_win / counts.n_pairs == pytest.approx(p_w, abs=se)
        assert counts.n_tie / counts.n_pairs == pytest.approx(p_t, abs=se)


class TestRunTrialBmw:
    def test_overwhelming_effect_stops_first_interim(self):
        s = ScenarioTruth((0.001, 0.001), (0.999, 0.999))
        spec = make_spec()
        stops = 0
        for i in range(200):
            result = run_trial_bmw(spec, BOUND_E, s, Rng(5).stream(i))
            if result.stop_analysis == 0 and result.decision is Decision.SUCCESS:
                stops += 1
        assert stops / 200 > 0.99

    def test_trace_length_matches_stop(self):
        spec = make_spec()
        for i in range(20):
            result = run_trial_bmw(spec, BOUND_E, SCEN_NULL, Rng(6).stream(i))
            assert len(result.pp_trace_e) == result.stop_analysis + 1
            assert result.n_used == SCHEDULE.n_cum[result.stop_analysis]

    def test_futility_only_never_stops_for_superiority(self):
        spec = make_spec()
        for i in range(100):
            result = run_trial_bmw(spec, BOUND_E, SCEN_ALT, Rng(7).stream(i),
                                   futility_only=True)
            assert result.stop_reason is not StopReason.EFFICACY_SUPERIORITY

    def test_futility_only_stops_no_earlier_pathwise(self):
        # same streams, same boundaries: futility-only can only stop later
        spec = make_spec()
        for i in range(100):
            full = run_trial_bmw(spec, BOUND_E, SCEN_ALT, Rng(8).stream(i))
            fut = run_trial_bmw(spec, BOUND_E, SCEN_ALT, Rng(8).stream(i),
                                futility_only=True)
            assert fut.n_used >= full.n_used


class TestRunTrialGraphical:
    def test_extreme_toxicity_fails_toxicity(self):
        s = ScenarioTruth((0.001, 0.001), (0.999, 0.999), q_t0=0.05, q_t1=0.999)
        spec = make_spec()
        fails = 0
        for i in range(200):
            result = run_trial_graphical(spec, BOUND_E, BOUND_T, s, Rng(9).stream(i))
            fails += result.decision is Decision.FAIL_TOXICITY
        assert fails / 200 > 0.95

    def test_toxicity_claim_requires_efficacy_claim(self):
        spec = make_spec()
        for i in range(200):
            result = run_trial_graphical(spec, BOUND_E, BOUND_T, SCEN_ALT, Rng(10).stream(i))
            if result.toxicity_rejected:
                assert result.efficacy_rejected

    def test_fail_toxicity_implies_efficacy_claimed(self):
        spec = make_spec()
        seen = 0
        for i in range(300):
            result = run_trial_graphical(spec, BOUND_E, BOUND_T, SCEN_ALT, Rng(11).stream(i))
            if result.decision is Decision.FAIL_TOXICITY:
                seen += 1
                assert result.efficacy_rejected
                assert result.toxicity_rejected is False
        assert seen > 0

    def test_success_requires_both(self):
        spec = make_spec()
        for i in range(100):
            result = run_trial_graphical(spec, BOUND_E, BOUND_T, SCEN_ALT, Rng(12).stream(i))
            if result.decision is Decision.SUCCESS:
                assert result.efficacy_rejected and result.toxicity_rejected


class TestRunConventional:
    def test_n_used_always_max(self):
        spec = make_spec()
        for i in range(50):
            result = run_conventional(spec, SCEN_ALT, Rng(13).stream(i), with_toxicity=True)
            assert result.n_used == 160
            assert result.stop_analysis == 2

    def test_efficacy_only_mode(self):
        spec = make_spec()
        result = run_conventional(spec, SCEN_ALT, Rng(14), with_toxicity=False)
        assert result.toxicity_rejected is None
        assert result.decision in (Decision.SUCCESS, Decision.FAIL_EFFICACY)

    def test_rejection_rate_near_alpha_under_null(self):
        spec = make_spec()
        oc = estimate_ocs("conventional", spec, None, None, SCEN_NULL, 4000,
                          TruthLabels(True, False), Rng(15))
        assert oc.reject_rate_e == pytest.approx(0.095, abs=0.02)


class TestEstimateOcs:
    def test_zero_rejection_engine_stub(self):
        # lambda=1 boundaries cannot reject: fwer 0, pcs 1 under all-null labels
        spec = make_spec()
        b = boundary_set(1.0, 0.0, SCHEDULE)
        oc = estimate_ocs("bmw", spec, b, None, SCEN_NULL, 500,
                          TruthLabels(True, True), Rng(16))
        assert oc.fwer == 0.0
        assert oc.pcs == 1.0
        assert oc.reject_rate_e == 0.0

    def test_no_null_flagged_fwer_none(self):
        spec = make_spec()
        oc = estimate_ocs("bmw", spec, BOUND_E, None, SCEN_ALT, 200,
                          TruthLabels(False, False), Rng(17))
        assert oc.fwer is None

    def test_stop_distribution_sums_to_one(self):
        spec = make_spec()
        oc = estimate_ocs("graphical", spec, BOUND_E, BOUND_T, SCEN_ALT, 500,
                          TruthLabels(False, False), Rng(18))
        assert sum(oc.stop_distribution.values()) == pytest.approx(1.0, abs=1e-12)

    def test_matches_scalar_engine(self):
        # batch engine must agree replicate-by-replicate with the scalar one
        spec = make_spec()
        n = 60
        rng = Rng(19)
        oc = estimate_ocs("bmw", spec, BOUND_E, None, SCEN_ALT, n,
                          TruthLabels(False, False), rng, base_stream=0)
        rejections = 0
        n_used_total = 0.0
        for i in range(n):
            result = run_trial_bmw(spec, BOUND_E, SCEN_ALT, rng.stream(i))
            rejections += result.efficacy_rejected
            n_used_total += result.n_used
        assert oc.reject_rate_e == pytest.approx(rejections / n, abs=1e-12)
        assert oc.expected_n == pytest.approx(n_used_total / n, abs=1e-12)

    def test_graphical_matches_scalar_engine(self):
        spec = make_spec()
        n = 60
        rng = Rng(20)
        oc = estimate_ocs("graphical", spec, BOUND_E, BOUND_T, SCEN_ALT, n,
                          TruthLabels(False, False), rng, base_stream=0)
        success = 0
        for i in range(n):
            result = run_trial_graphical(spec, BOUND_E, BOUND_T, SCEN_ALT, rng.stream(i))
            success += result.decision is Decision.SUCCESS
        assert oc.pcs == pytest.approx(success / n, abs=1e-12)

    def test_conventional_tox_matches_scalar(self):
        spec = make_spec()
        n = 80
        rng = Rng(21)
        oc = estimate_ocs("conventional_tox", spec, None, None, SCEN_ALT, n,
                          TruthLabels(False, False), rng, base_stream=0)
        go = 0
        for i in range(n):
            result = run_conventional(spec, SCEN_ALT, rng.stream(i), with_toxicity=True)
            go += result.decision is Decision.SUCCESS
        assert oc.pcs == pytest.approx(go / n, abs=1e-12)

    def test_thread_count_invariance(self):
        spec = make_spec()
        kwargs = dict(n_trials=400, labels=TruthLabels(True, False), rng=Rng(22))
        a = estimate_ocs("graphical", spec, BOUND_E, BOUND_T, SCEN_NULL,
                         kwargs["n_trials"], kwargs["labels"], kwargs["rng"], threads=1)
        b = estimate_ocs("graphical", spec, BOUND_E, BOUND_T, SCEN_NULL,
                         kwargs["n_trials"], kwargs["labels"], kwargs["rng"], threads=4)
        assert a == b

    def test_same_seed_identical(self):
        spec = make_spec()
        a = estimate_ocs("bmw_f", spec, BOUND_E, None, SCEN_NULL, 300,
                         TruthLabels(True, False), Rng(23))
        b = estimate_ocs("bmw_f", spec, BOUND_E, None, SCEN_NULL, 300,
                         TruthLabels(True, False), Rng(23))
        assert a == b

    def test_n_used_in_schedule(self):
        spec = make_spec()
        oc = estimate_ocs("bmw", spec, BOUND_E, None, SCEN_NULL, 300,
                          TruthLabels(True, False), Rng(24))
        for (r, reason), frac in oc.stop_distribution.items():
            assert 0 <= r < 3
            assert frac >= 0


class TestRawPaths:
    def test_shapes_and_finiteness(self):
        z, info = raw_z_paths(SCEN_ALT, SCHEDULE, 500, Rng(25))
        assert z.shape == (500, 3)
        assert np.all(np.isfinite(z))
        assert np.all(info > 0)

    def test_null_columns_centered(self):
        z, _ = raw_z_paths(SCEN_NULL, SCHEDULE, 4000, Rng(26))
        assert np.all(np.abs(z.mean(axis=0)) < 4 * 1.1 / math.sqrt(4000))

    def test_calibrate_from_raw_data_runs(self):
        # include a clearly-feasible lambda so the small-L unit run is stable
        grid = GridSpec(lambdas=(0.90, 0.93, 0.96), gammas=(0.5, 1.0))
        spec = make_spec(n_paths=2000, grid=grid)
        result = calibrate_from_raw_data(spec, SCEN_NULL, SCEN_ALT, Rng(27))
        assert result.poe_null <= 0.1
        assert 0 < result.poe_alt <= 1


class TestPermutationTieProbability:
    def test_all_identical_outcomes(self):
        cohort = [PatientOutcome(1, (1, 1)) for _ in range(10)]
        mirror = [PatientOutcome(0, (1, 1)) for _ in range(10)]
        assert estimate_null_tie_probability(cohort, mirror, n_perm=100, rng=Rng(28)) == 1.0

    def test_half_and_half(self):
        treat = [PatientOutcome(1, (1, 1)) for _ in range(20)]
        ctrl = [PatientOutcome(0, (0, 0)) for _ in range(20)]
        est = estimate_null_tie_probability(treat, ctrl, n_perm=500, rng=Rng(29))
        assert est == pytest.approx(0.5, abs=0.05)

    def test_matches_theoretical_on_identical_arms(self):
        from bmw_design.trialsim import _draw_arm, _threshold_matrix
        s = SCEN_NULL
        chol, cut0, cut1 = _threshold_matrix(s)
        gen = Rng(30).generator()
        treat = [PatientOutcome(1, ((c >> 1) & 1, c & 1))
                 for c in _draw_arm(300, chol, cut1, gen)[0]]
        ctrl = [PatientOutcome(0, ((c >> 1) & 1, c & 1))
                for c in _draw_arm(300, chol, cut0, gen)[0]]
        est = estimate_null_tie_probability(treat, ctrl, n_perm=300, rng=Rng(31))
        _, _, p_t, _ = theoretical_wlt(s)
        # permutation mean concentrates near the sample tie fraction, which is
        # within ~3/sqrt(n) of the population value
        assert est == pytest.approx(p_t, abs=3 / math.sqrt(300))

    def test_minimum_permutations(self):
        with pytest.raises(ValueError):
            estimate_null_tie_probability([PatientOutcome(1, (1, 0))],
                                          [PatientOutcome(0, (1, 0))], n_perm=10)
