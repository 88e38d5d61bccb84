import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bmw_design.statkernel import Rng
from bmw_design.winratio import (
    DEFAULT_HIERARCHY,
    EndpointHierarchy,
    PairResult,
    PatientOutcome,
    ScenarioTruth,
    WltCounts,
    arm_sizes,
    compare_pair,
    count_wlt,
    efficacy_cell_probs,
    load_outcomes_csv,
    theoretical_wlt,
    wr_estimate,
)


def brute_force_wlt(treat, ctrl, h):
    """Independent per-pair loop oracle."""
    w = l = t = 0
    for pt in treat:
        for pc in ctrl:
            decided = None
            for v_t, v_c, better_high in zip(pt.x_e, pc.x_e, h.larger_is_better):
                if v_t != v_c:
                    better = v_t > v_c if better_high else v_t < v_c
                    decided = "w" if better else "l"
                    break
            if decided == "w":
                w += 1
            elif decided == "l":
                l += 1
            else:
                t += 1
    return w, l, t


class TestComparePair:
    def test_first_level_decides(self):
        t = PatientOutcome(1, (1, 0))
        c = PatientOutcome(0, (0, 1))
        assert compare_pair(t, c) is PairResult.WIN

    def test_identical_is_tie(self):
        t = PatientOutcome(1, (1, 1))
        c = PatientOutcome(0, (1, 1))
        assert compare_pair(t, c) is PairResult.TIE

    def test_second_level_decides(self):
        t = PatientOutcome(1, (1, 0))
        c = PatientOutcome(0, (1, 1))
        assert compare_pair(t, c) is PairResult.LOSS

    def test_mismatched_endpoints_rejected(self):
        with pytest.raises(ValueError):
            compare_pair(PatientOutcome(1, (1,)), PatientOutcome(0, (0, 1)))

    def test_direction_flag(self):
        h = EndpointHierarchy(("a", "b"), (False, True))
        t = PatientOutcome(1, (0, 0))
        c = PatientOutcome(0, (1, 1))
        assert compare_pair(t, c, h) is PairResult.WIN


class TestCountWlt:
    def test_single_pair(self):
        counts = count_wlt([PatientOutcome(1, (1, 1))], [PatientOutcome(0, (0, 0))])
        assert (counts.n_win, counts.n_loss, counts.n_tie) == (1, 0, 0)

    def test_identical_cohorts_symmetric(self):
        cohort = [PatientOutcome(1, (1, 0)), PatientOutcome(1, (0, 1)),
                  PatientOutcome(1, (1, 1))]
        mirrored = [PatientOutcome(0, p.x_e) for p in cohort]
        counts = count_wlt(cohort, mirrored)
        assert counts.n_win == counts.n_loss

    def test_empty_cohort_rejected(self):
        with pytest.raises(ValueError):
            count_wlt([], [PatientOutcome(0, (0, 0))])

    def test_matches_brute_force_8x8(self):
        gen = np.random.default_rng(42)
        for _ in range(25):
            treat = [PatientOutcome(1, tuple(gen.integers(0, 2, 2))) for _ in range(8)]
            ctrl = [PatientOutcome(0, tuple(gen.integers(0, 2, 2))) for _ in range(8)]
            counts = count_wlt(treat, ctrl)
            assert (counts.n_win, counts.n_loss, counts.n_tie) == \
                brute_force_wlt(treat, ctrl, DEFAULT_HIERARCHY)

    @given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=12),
           st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=12))
    @settings(max_examples=250, deadline=None)
    def test_conservation_and_label_swap(self, treat_vals, ctrl_vals):
        treat = [PatientOutcome(1, v) for v in treat_vals]
        ctrl = [PatientOutcome(0, v) for v in ctrl_vals]
        counts = count_wlt(treat, ctrl)
        assert counts.n_win + counts.n_loss + counts.n_tie == len(treat) * len(ctrl)
        swapped = count_wlt([PatientOutcome(1, p.x_e) for p in ctrl],
                            [PatientOutcome(0, p.x_e) for p in treat])
        assert (swapped.n_win, swapped.n_loss, swapped.n_tie) == \
            (counts.n_loss, counts.n_win, counts.n_tie)

    def test_three_endpoints(self):
        h = EndpointHierarchy(("a", "b", "c"))
        gen = np.random.default_rng(9)
        treat = [PatientOutcome(1, tuple(gen.integers(0, 2, 3))) for _ in range(6)]
        ctrl = [PatientOutcome(0, tuple(gen.integers(0, 2, 3))) for _ in range(7)]
        counts = count_wlt(treat, ctrl, h)
        assert (counts.n_win, counts.n_loss, counts.n_tie) == brute_force_wlt(treat, ctrl, h)


class TestWrEstimate:
    def test_symmetric_counts_zero(self):
        c = WltCounts(500, 500, 600, 40, 40)
        est = wr_estimate(c, 0.5, 80)
        assert est.theta_hat == 0.0
        assert est.z == 0.0

    def test_information_hand_value(self):
        # 3 * 0.25 * 0.5 * 160 / (4 * 1.5) = 10
        c = WltCounts(1600, 1600, 3200, 80, 80)
        est = wr_estimate(c, 0.5, 160)
        assert est.info == pytest.approx(10.0, abs=1e-12)

    def test_duplicate_formula_oracle(self):
        c = WltCounts(600, 300, 700, 40, 40)
        est = wr_estimate(c, 0.5, 80)
        # independent evaluation of the same formulas
        p_t = 700 / 1600
        theta = math.log(600 / 300)
        var = 4 * (1 + p_t) / (3 * 0.5 * 0.5 * (1 - p_t) * 80)
        assert est.z == pytest.approx(theta / math.sqrt(var), abs=1e-12)
        assert est.info == pytest.approx(1 / var, abs=1e-12)

    def test_zero_loss_continuity(self):
        c = WltCounts(100, 0, 1500, 40, 40)
        est = wr_estimate(c, 0.5, 80)
        assert math.isfinite(est.z)
        assert est.theta_hat == pytest.approx(math.log(100.5 / 0.5))

    def test_all_ties(self):
        c = WltCounts(0, 0, 1600, 40, 40)
        est = wr_estimate(c, 0.5, 80)
        assert est.z == 0.0
        assert math.isfinite(est.info) and est.info > 0

    def test_information_scaling_with_n(self):
        # proportional counts at doubled enrollment move z by sqrt(2) exactly
        c1 = WltCounts(600, 300, 700, 40, 40)
        c2 = WltCounts(2400, 1200, 2800, 80, 80)
        z1 = wr_estimate(c1, 0.5, 80).z
        z2 = wr_estimate(c2, 0.5, 160).z
        assert z2 == pytest.approx(z1 * math.sqrt(2), rel=1e-12)

    def test_probabilities_sum(self):
        c = WltCounts(123, 456, 1600 * 2 - 123 - 456, 80, 40)
        est = wr_estimate(c, 2 / 3, 120)
        assert est.p_hat_w + est.p_hat_l + est.p_hat_t == pytest.approx(1.0, abs=1e-12)


class TestTheoreticalWlt:
    def test_identical_arms(self):
        s = ScenarioTruth((0.45, 0.35), (0.45, 0.35))
        p_w, p_l, p_t, theta = theoretical_wlt(s)
        assert theta == pytest.approx(0.0, abs=1e-12)
        assert p_w == pytest.approx(p_l, abs=1e-12)

    def test_paper_alternative_log_wr(self):
        s = ScenarioTruth((0.40, 0.30), (0.40, 0.66))
        _, _, _, theta = theoretical_wlt(s)
        assert theta == pytest.approx(0.5, abs=0.02)

    def test_probabilities_valid(self):
        gen = np.random.default_rng(5)
        for _ in range(50):
            q = gen.uniform(0.05, 0.95, 4)
            s = ScenarioTruth((q[0], q[1]), (q[2], q[3]), rho_ee=float(gen.uniform(-0.7, 0.7)))
            p_w, p_l, p_t, _ = theoretical_wlt(s)
            assert abs(p_w + p_l + p_t - 1) < 1e-9
            assert all(0 <= p <= 1 for p in (p_w, p_l, p_t))

    def test_monte_carlo_oracle(self):
        # 10^7 latent pairs through the same copula thresholds
        s = ScenarioTruth((0.40, 0.30), (0.40, 0.66))
        p_w, p_l, p_t, _ = theoretical_wlt(s)
        n = 10_000_000
        gen = Rng(314, (0,)).generator()
        chol = np.linalg.cholesky([[1, s.rho_ee], [s.rho_ee, 1]])
        def draw_codes(q):
            z = gen.standard_normal((n, 2)) @ chol.T
            from bmw_design.statkernel import normal_quantile
            cuts = [normal_quantile(1 - qi) for qi in q]
            return 2 * (z[:, 0] >= cuts[0]) + (z[:, 1] >= cuts[1])
        ct = draw_codes(s.q_e1)
        cc = draw_codes(s.q_e0)
        wins = float((ct > cc).mean())
        ties = float((ct == cc).mean())
        se = math.sqrt(0.25 / n)
        assert abs(wins - p_w) < 3 * se
        assert abs(ties - p_t) < 3 * se

    def test_cell_probs_marginals(self):
        cells = efficacy_cell_probs((0.4, 0.3), 0.25)
        assert cells.sum() == pytest.approx(1.0, abs=1e-12)
        assert cells[2] + cells[3] == pytest.approx(0.4, abs=1e-9)   # first endpoint
        assert cells[1] + cells[3] == pytest.approx(0.3, abs=1e-9)   # second endpoint


def test_arm_sizes_block_randomization():
    assert arm_sizes(80, 0.5) == (40, 40)
    assert arm_sizes(121, 0.5) == (60, 61)
    assert arm_sizes(90, 2 / 3) == (60, 30)


def test_load_outcomes_csv(tmp_path):
    path = tmp_path / "cohort.csv"
    path.write_text("arm,x_e1,x_e2,x_t\n1,1,0,0\n0,0,1,1\n1,1,1,0\n")
    patients, hierarchy = load_outcomes_csv(path)
    assert hierarchy.n_endpoints == 2
    assert [p.arm for p in patients] == [1, 0, 1]
    assert patients[1].x_t == 1


def test_load_outcomes_csv_requires_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1,1,0,0\n")
    with pytest.raises(ValueError):
        load_outcomes_csv(path)
