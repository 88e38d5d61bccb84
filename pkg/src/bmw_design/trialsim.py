"""Scenario-level outcome generation and trial-conduct engines.

Outcomes come from a three-dimensional Gaussian copula (two efficacy
latents plus a toxicity latent) thresholded to hit the configured marginal
rates. Replicates draw from disjoint counter-based streams, so operating
characteristics are bit-reproducible regardless of threading, and the
batched engines vectorize the per-analysis counting and posterior updates
across replicates.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .calibration import (
    ALTERNATIVE,
    NULL,
    CalibrationResult,
    DesignSpec,
    PathMatrix,
    grid_search,
    poe,
)
from .inference import (
    AnalysisSchedule,
    BoundarySet,
    NormalPrior,
    ZPath,
    information_vector,
    posterior_theta,
    pp_toxicity_table,
)
from .statkernel import Rng, normal_cdf_vec, normal_quantile
from .winratio import (
    MAX_TIE_PROB,
    DEFAULT_HIERARCHY,
    EndpointHierarchy,
    PatientOutcome,
    ScenarioTruth,
    WltCounts,
    arm_sizes,
    count_wlt_codes,
    outcome_code,
    wr_estimate,
)

__all__ = [
    "Decision",
    "StopReason",
    "TrialResult",
    "OcSummary",
    "TruthLabels",
    "sample_patient",
    "run_trial_bmw",
    "run_trial_graphical",
    "run_conventional",
    "estimate_ocs",
    "calibrate_from_raw_data",
    "raw_z_paths",
    "estimate_null_tie_probability",
]


class Decision(Enum):
    SUCCESS = "success"
    FAIL_EFFICACY = "fail_efficacy"
    FAIL_TOXICITY = "fail_toxicity"


class StopReason(Enum):
    EFFICACY_FUTILITY = "efficacy_futility"
    EFFICACY_SUPERIORITY = "efficacy_superiority"
    TOXICITY_FUTILITY = "toxicity_futility"
    TOXICITY_SUPERIORITY = "toxicity_superiority"
    FINAL = "final"


@dataclass(frozen=True)
class TrialResult:
    decision: Decision
    stop_analysis: int
    n_used: int
    stop_reason: StopReason
    efficacy_rejected: bool
    toxicity_rejected: bool | None  # None when toxicity was never tested
    pp_trace_e: tuple[float, ...]
    pp_trace_t: tuple[float, ...] = ()


@dataclass(frozen=True)
class TruthLabels:
    efficacy_null: bool
    toxicity_null: bool = False

    @property
    def any_null(self) -> bool:
        return self.efficacy_null or self.toxicity_null

    @property
    def correct_go(self) -> bool:
        return not self.efficacy_null and not self.toxicity_null


@dataclass(frozen=True)
class OcSummary:
    n_trials: int
    reject_rate_e: float
    fwer: float | None
    pcs: float
    expected_n: float
    stop_distribution: dict[tuple[int, str], float]

    def __post_init__(self):
        total = sum(self.stop_distribution.values())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"stop distribution sums to {total}, expected 1")


# ---------------------------------------------------------------------------
# outcome generation


def _threshold_matrix(s: ScenarioTruth) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cholesky factor of the latent correlation plus per-arm thresholds."""
    corr = s.latent_corr()
    chol = np.linalg.cholesky(corr)
    cut0 = np.array([normal_quantile(1.0 - q) for q in (*s.q_e0, s.q_t0)])
    cut1 = np.array([normal_quantile(1.0 - q) for q in (*s.q_e1, s.q_t1)])
    return chol, cut0, cut1


def _draw_arm(n: int, chol: np.ndarray, cuts: np.ndarray,
              gen: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """n patients of one arm: efficacy outcome codes and toxicity indicators."""
    latents = gen.standard_normal((n, 3)) @ chol.T
    x = latents >= cuts
    codes = (2 * x[:, 0] + x[:, 1]).astype(np.int8)
    return codes, x[:, 2].astype(np.int8)


def sample_patient(s: ScenarioTruth, arm: int, rng: Rng) -> PatientOutcome:
    """Draw a single patient outcome from the scenario's copula."""
    chol, cut0, cut1 = _threshold_matrix(s)
    cuts = cut1 if arm == 1 else cut0
    codes, tox = _draw_arm(1, chol, cuts, rng.generator())
    x1, x2 = (codes[0] >> 1) & 1, codes[0] & 1
    return PatientOutcome(arm, (int(x1), int(x2)), int(tox[0]))


def _generate_replicate(s: ScenarioTruth, schedule: AnalysisSchedule, rng: Rng):
    """Full-enrollment cohorts for one replicate: treatment drawn first, then
    control, each in a single batch from the replicate's own stream. Returns
    (codes_t, codes_c, tox_t, tox_c), the argument order of _analysis_counts."""
    chol, cut0, cut1 = _threshold_matrix(s)
    n_treat, n_ctrl = arm_sizes(schedule.n_max, schedule.phi)
    gen = rng.generator()
    codes_t, tox_t = _draw_arm(n_treat, chol, cut1, gen)
    codes_c, tox_c = _draw_arm(n_ctrl, chol, cut0, gen)
    return codes_t, codes_c, tox_t, tox_c


# ---------------------------------------------------------------------------
# accumulated statistics per analysis


def _analysis_counts(codes_t, codes_c, tox_t, tox_c, schedule: AnalysisSchedule):
    """Cumulative code histograms and toxicity counts at each analysis."""
    R = schedule.n_analyses
    ct = np.zeros((R, 4))
    cc = np.zeros((R, 4))
    y1 = np.zeros(R, dtype=np.int64)
    y0 = np.zeros(R, dtype=np.int64)
    for r, n in enumerate(schedule.n_cum):
        n_t, n_c = arm_sizes(n, schedule.phi)
        ct[r] = np.bincount(codes_t[:n_t], minlength=4)
        cc[r] = np.bincount(codes_c[:n_c], minlength=4)
        y1[r] = int(tox_t[:n_t].sum())
        y0[r] = int(tox_c[:n_c].sum())
    return ct, cc, y1, y0


_UPPER = np.tril(np.ones((4, 4)), -1)  # [a, b] = 1 when code a beats code b


def _wlt_from_histograms(ct: np.ndarray, cc: np.ndarray):
    """Vectorized win/loss/tie counts from stacked (..., 4) code histograms."""
    wins = np.einsum("...a,ab,...b->...", ct, _UPPER, cc)
    losses = np.einsum("...a,ab,...b->...", ct, _UPPER.T, cc)
    ties = np.einsum("...a,...a->...", ct, cc)
    return wins, losses, ties


def _z_and_info(wins, losses, ties, schedule: AnalysisSchedule,
                tie_mode: str = "observed", p_t_design=None):
    """Wald statistics and information values for stacked replicate counts.

    tie_mode "observed" plugs the per-analysis tie fraction into the
    variance; "design" carries a fixed design value instead.
    """
    sizes = [arm_sizes(n, schedule.phi) for n in schedule.n_cum]
    n_pairs = np.array([t * c for t, c in sizes], dtype=float)
    both_zero = (wins == 0) & (losses == 0)
    w = np.where(np.minimum(wins, losses) > 0, wins, wins + 0.5)
    lo = np.where(np.minimum(wins, losses) > 0, losses, losses + 0.5)
    theta_hat = np.where(both_zero, 0.0, np.log(w / lo))
    if tie_mode == "observed":
        p_t = np.minimum(ties / n_pairs, MAX_TIE_PROB)
    elif tie_mode == "design":
        if p_t_design is None:
            raise ValueError("tie_mode='design' requires p_t_design")
        p_t = np.broadcast_to(np.asarray(p_t_design, dtype=float), wins.shape)
    else:
        raise ValueError(f"unknown tie_mode {tie_mode!r}")
    n = np.asarray(schedule.n_cum, dtype=float)
    phi = schedule.phi
    info = 3.0 * phi * (1.0 - phi) * (1.0 - p_t) * n / (4.0 * (1.0 + p_t))
    z = np.where(both_zero, 0.0, theta_hat * np.sqrt(info))
    return z, info


def _pp_efficacy_batch(z: np.ndarray, info: np.ndarray, prior: NormalPrior) -> np.ndarray:
    """Posterior probability of a positive log win ratio for stacked
    replicates, one column per analysis prefix, batched small solves."""
    n_rep, R = z.shape
    pp = np.empty_like(z)
    for r in range(R):
        b = np.sqrt(info[:, : r + 1])
        sig = np.minimum(b[:, :, None], b[:, None, :]) / np.maximum(b[:, :, None], b[:, None, :])
        x = np.linalg.solve(sig, b[..., None])[..., 0]
        variance = 1.0 / (1.0 / prior.variance + np.einsum("ij,ij->i", b, x))
        mean = variance * (prior.mean / prior.variance + np.einsum("ij,ij->i", x, z[:, : r + 1]))
        pp[:, r] = normal_cdf_vec(mean / np.sqrt(variance))
    return pp


def _batch_replicate_data(s: ScenarioTruth, schedule: AnalysisSchedule, n_trials: int,
                          rng: Rng, base_stream: int, threads: int = 1):
    """Per-replicate cumulative histograms and toxicity counts, stacked.

    Each replicate owns stream base_stream + i, so results do not depend on
    the thread partitioning.
    """
    R = schedule.n_analyses
    ct = np.empty((n_trials, R, 4))
    cc = np.empty((n_trials, R, 4))
    y1 = np.empty((n_trials, R), dtype=np.int64)
    y0 = np.empty((n_trials, R), dtype=np.int64)

    def fill(lo: int, hi: int):
        for i in range(lo, hi):
            rep = _generate_replicate(s, schedule, rng.stream(base_stream + i))
            ct[i], cc[i], y1[i], y0[i] = _analysis_counts(*rep, schedule)

    if threads <= 1:
        fill(0, n_trials)
    else:
        chunk = math.ceil(n_trials / threads)
        bounds = [(k * chunk, min((k + 1) * chunk, n_trials)) for k in range(threads)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda lh: fill(*lh), [b for b in bounds if b[0] < b[1]]))
    return ct, cc, y1, y0


# ---------------------------------------------------------------------------
# scalar trial engines


def _zpath_from_counts(counts: list[WltCounts], schedule: AnalysisSchedule,
                       tie_mode: str, p_t_design) -> tuple[list[float], list[float]]:
    zs, infos = [], []
    for r, c in enumerate(counts):
        est = wr_estimate(c, schedule.phi, schedule.n_cum[r])
        if tie_mode == "design":
            info = float(information_vector(
                AnalysisSchedule((schedule.n_cum[r],), schedule.phi), p_t_design)[0])
            z = est.theta_hat * math.sqrt(info)
            zs.append(z if (c.n_win or c.n_loss) else 0.0)
            infos.append(info)
        else:
            zs.append(est.z)
            infos.append(est.info)
    return zs, infos


def run_trial_bmw(spec: DesignSpec, b_e: BoundarySet, s: ScenarioTruth, rng: Rng,
                  futility_only: bool = False, tie_mode: str = "observed",
                  p_t_design: float | None = None) -> TrialResult:
    """Efficacy-only trial conduct: enroll to each analysis, recompute the
    accumulated statistic path and its posterior, stop on boundary crossings.
    With futility_only set, interim superiority crossings are ignored."""
    schedule = spec.schedule
    rep = _generate_replicate(s, schedule, rng)
    ct, cc, y1, y0 = _analysis_counts(*rep, schedule)
    wins, losses, ties = _wlt_from_histograms(ct, cc)
    sizes = [arm_sizes(n, schedule.phi) for n in schedule.n_cum]
    counts = [WltCounts(int(w), int(l), int(t), n_t, n_c)
              for w, l, t, (n_t, n_c) in zip(wins, losses, ties, sizes)]
    zs, infos = _zpath_from_counts(counts, schedule, tie_mode, p_t_design)
    pp_trace = []
    for r in range(schedule.n_analyses):
        post = posterior_theta(ZPath(tuple(zs[: r + 1]), tuple(infos[: r + 1])), spec.prior)
        pp_trace.append(post.pp_e)
        if r < schedule.n_analyses - 1:
            if post.pp_e < b_e.futility[r]:
                return TrialResult(Decision.FAIL_EFFICACY, r, schedule.n_cum[r],
                                   StopReason.EFFICACY_FUTILITY, False, None,
                                   tuple(pp_trace))
            if not futility_only and post.pp_e > b_e.superiority[r]:
                return TrialResult(Decision.SUCCESS, r, schedule.n_cum[r],
                                   StopReason.EFFICACY_SUPERIORITY, True, None,
                                   tuple(pp_trace))
    effective = pp_trace[-1] > b_e.final_threshold
    return TrialResult(Decision.SUCCESS if effective else Decision.FAIL_EFFICACY,
                       schedule.n_analyses - 1, schedule.n_max, StopReason.FINAL,
                       bool(effective), None, tuple(pp_trace))


def run_trial_graphical(spec: DesignSpec, b_e: BoundarySet, b_t: BoundarySet,
                        s: ScenarioTruth, rng: Rng, tie_mode: str = "observed",
                        p_t_design: float | None = None) -> TrialResult:
    """Joint efficacy/toxicity conduct: efficacy is monitored first; once its
    superiority boundary is crossed the error level recycles to toxicity,
    which is then monitored (with continued enrollment) until it resolves.
    Reaching the final analysis without an efficacy claim applies the joint
    final rule."""
    if spec.tox is None:
        raise ValueError("graphical conduct requires spec.tox")
    schedule = spec.schedule
    rep = _generate_replicate(s, schedule, rng)
    ct, cc, y1, y0 = _analysis_counts(*rep, schedule)
    wins, losses, ties = _wlt_from_histograms(ct, cc)
    sizes = [arm_sizes(n, schedule.phi) for n in schedule.n_cum]
    counts = [WltCounts(int(w), int(l), int(t), n_t, n_c)
              for w, l, t, (n_t, n_c) in zip(wins, losses, ties, sizes)]
    zs, infos = _zpath_from_counts(counts, schedule, tie_mode, p_t_design)
    tox_tables = [pp_toxicity_table(n_t, n_c, spec.tox.delta, spec.tox.prior_a, spec.tox.prior_b)
                  for (n_t, n_c) in sizes]
    pp_e = [posterior_theta(ZPath(tuple(zs[: r + 1]), tuple(infos[: r + 1])), spec.prior).pp_e
            for r in range(schedule.n_analyses)]
    pp_t = [float(tox_tables[r][y1[r], y0[r]]) for r in range(schedule.n_analyses)]
    R = schedule.n_analyses
    monitoring_tox = False
    for r in range(R - 1):
        if not monitoring_tox:
            if pp_e[r] < b_e.futility[r]:
                return TrialResult(Decision.FAIL_EFFICACY, r, schedule.n_cum[r],
                                   StopReason.EFFICACY_FUTILITY, False, None,
                                   tuple(pp_e[: r + 1]), tuple(pp_t[: r + 1]))
            if pp_e[r] > b_e.superiority[r]:
                monitoring_tox = True
        if monitoring_tox:
            if pp_t[r] < b_t.futility[r]:
                return TrialResult(Decision.FAIL_TOXICITY, r, schedule.n_cum[r],
                                   StopReason.TOXICITY_FUTILITY, True, False,
                                   tuple(pp_e[: r + 1]), tuple(pp_t[: r + 1]))
            if pp_t[r] > b_t.superiority[r]:
                return TrialResult(Decision.SUCCESS, r, schedule.n_cum[r],
                                   StopReason.TOXICITY_SUPERIORITY, True, True,
                                   tuple(pp_e[: r + 1]), tuple(pp_t[: r + 1]))
    if monitoring_tox:
        tox_ok = pp_t[-1] > b_t.final_threshold
        return TrialResult(Decision.SUCCESS if tox_ok else Decision.FAIL_TOXICITY,
                           R - 1, schedule.n_max, StopReason.FINAL, True, bool(tox_ok),
                           tuple(pp_e), tuple(pp_t))
    eff_ok = pp_e[-1] > b_e.final_threshold
    tox_ok = pp_t[-1] > b_t.final_threshold
    if eff_ok and tox_ok:
        decision = Decision.SUCCESS
    elif eff_ok:
        decision = Decision.FAIL_TOXICITY
    else:
        decision = Decision.FAIL_EFFICACY
    return TrialResult(decision, R - 1, schedule.n_max, StopReason.FINAL,
                       bool(eff_ok), bool(tox_ok) if eff_ok else None,
                       tuple(pp_e), tuple(pp_t))


def run_conventional(spec: DesignSpec, s: ScenarioTruth, rng: Rng,
                     with_toxicity: bool = False) -> TrialResult:
    """Fixed-sample comparator: one analysis at maximum enrollment, efficacy
    rejected when the Wald statistic exceeds the one-sided normal critical
    value; toxicity (when requested) tested only after an efficacy rejection,
    with a normal-approximation non-inferiority test at the same level."""
    schedule = spec.schedule
    rep = _generate_replicate(s, schedule, rng)
    ct, cc, y1, y0 = _analysis_counts(*rep, schedule)
    wins, losses, ties = _wlt_from_histograms(ct, cc)
    n_t, n_c = arm_sizes(schedule.n_max, schedule.phi)
    c = WltCounts(int(wins[-1]), int(losses[-1]), int(ties[-1]), n_t, n_c)
    est = wr_estimate(c, schedule.phi, schedule.n_max)
    crit = normal_quantile(1.0 - spec.alpha)
    eff_rej = est.z > crit
    R = schedule.n_analyses
    if not with_toxicity:
        return TrialResult(Decision.SUCCESS if eff_rej else Decision.FAIL_EFFICACY,
                           R - 1, schedule.n_max, StopReason.FINAL, bool(eff_rej), None,
                           (est.z,))
    if not eff_rej:
        return TrialResult(Decision.FAIL_EFFICACY, R - 1, schedule.n_max,
                           StopReason.FINAL, False, None, (est.z,))
    tox_rej = _conventional_tox_reject(int(y1[-1]), n_t, int(y0[-1]), n_c,
                                       spec.tox.delta, spec.alpha)
    return TrialResult(Decision.SUCCESS if tox_rej else Decision.FAIL_TOXICITY,
                       R - 1, schedule.n_max, StopReason.FINAL, True, bool(tox_rej),
                       (est.z,))


def _conventional_tox_reject(y1: int, n1: int, y0: int, n0: int,
                             delta: float, alpha: float) -> bool:
    """One-sided unpooled-variance non-inferiority test of the risk difference."""
    p1, p0 = y1 / n1, y0 / n0
    se = math.sqrt(p1 * (1 - p1) / n1 + p0 * (1 - p0) / n0)
    diff = p1 - p0 - delta
    if se == 0.0:
        return diff < 0.0
    return diff / se < normal_quantile(alpha)


# ---------------------------------------------------------------------------
# batched operating characteristics


def _graphical_batch(pp_e, pp_t, schedule: AnalysisSchedule, b_e: BoundarySet,
                     b_t: BoundarySet):
    """Vectorized graphical state machine; mirrors run_trial_graphical."""
    n_rep, R = pp_e.shape
    decision = np.zeros(n_rep, dtype=np.int8)  # 0 pending, 1 S, 2 FE, 3 FT
    stop_analysis = np.full(n_rep, R - 1)
    stop_reason = np.full(n_rep, StopReason.FINAL.value, dtype=object)
    eff_rej = np.zeros(n_rep, dtype=bool)
    tox_rej = np.zeros(n_rep, dtype=bool)
    monitoring = np.zeros(n_rep, dtype=bool)
    for r in range(R - 1):
        pe, pt = pp_e[:, r], pp_t[:, r]
        pending = decision == 0
        crossed = pending & ~monitoring & (pe > np.float64(b_e.superiority[r]))
        eff_rej |= crossed
        fut = pending & ~monitoring & ~crossed & (pe < np.float64(b_e.futility[r]))
        decision[fut] = 2
        stop_analysis[fut] = r
        stop_reason[fut] = StopReason.EFFICACY_FUTILITY.value
        monitoring |= crossed
        in_mon = (decision == 0) & monitoring
        tf = in_mon & (pt < np.float64(b_t.futility[r]))
        decision[tf] = 3
        stop_analysis[tf] = r
        stop_reason[tf] = StopReason.TOXICITY_FUTILITY.value
        ts = (decision == 0) & monitoring & (pt > np.float64(b_t.superiority[r]))
        decision[ts] = 1
        tox_rej |= ts
        stop_analysis[ts] = r
        stop_reason[ts] = StopReason.TOXICITY_SUPERIORITY.value
    pe, pt = pp_e[:, -1], pp_t[:, -1]
    pending = decision == 0
    in_mon = pending & monitoring
    ok = in_mon & (pt > b_t.final_threshold)
    decision[ok] = 1
    tox_rej |= ok
    decision[in_mon & ~ok] = 3
    fresh = pending & ~monitoring
    eff_ok = fresh & (pe > b_e.final_threshold)
    eff_rej |= eff_ok
    both = eff_ok & (pt > b_t.final_threshold)
    decision[both] = 1
    tox_rej |= both
    decision[eff_ok & ~both] = 3
    decision[fresh & ~eff_ok] = 2
    return decision, stop_analysis, stop_reason, eff_rej, tox_rej


def _bmw_batch(pp_e, schedule: AnalysisSchedule, b_e: BoundarySet, futility_only: bool):
    n_rep, R = pp_e.shape
    decision = np.zeros(n_rep, dtype=np.int8)
    stop_analysis = np.full(n_rep, R - 1)
    stop_reason = np.full(n_rep, StopReason.FINAL.value, dtype=object)
    for r in range(R - 1):
        pe = pp_e[:, r]
        pending = decision == 0
        fut = pending & (pe < np.float64(b_e.futility[r]))
        decision[fut] = 2
        stop_analysis[fut] = r
        stop_reason[fut] = StopReason.EFFICACY_FUTILITY.value
        if not futility_only:
            sup = pending & ~fut & (pe > np.float64(b_e.superiority[r]))
            decision[sup] = 1
            stop_analysis[sup] = r
            stop_reason[sup] = StopReason.EFFICACY_SUPERIORITY.value
    pending = decision == 0
    decision[pending & (pp_e[:, -1] > b_e.final_threshold)] = 1
    decision[pending & ~(pp_e[:, -1] > b_e.final_threshold)] = 2
    eff_rej = decision == 1
    return decision, stop_analysis, stop_reason, eff_rej, np.zeros(n_rep, dtype=bool)


def estimate_ocs(engine: str, spec: DesignSpec, b_e: BoundarySet | None,
                 b_t: BoundarySet | None, s: ScenarioTruth, n_trials: int,
                 labels: TruthLabels, rng: Rng, base_stream: int = 0,
                 threads: int = 1, tie_mode: str = "observed",
                 p_t_design: float | None = None) -> OcSummary:
    """Operating characteristics over independent replicates.

    engine is one of "bmw", "bmw_f", "graphical", "conventional",
    "conventional_tox". A family-wise error is a replicate that rejects a
    hypothesis whose truth label marks it null; FWER is None when no null
    is flagged.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    schedule = spec.schedule
    ct, cc, y1, y0 = _batch_replicate_data(s, schedule, n_trials, rng, base_stream, threads)
    wins, losses, ties = _wlt_from_histograms(ct, cc)
    z, info = _z_and_info(wins, losses, ties, schedule, tie_mode, p_t_design)
    needs_tox = engine in ("graphical", "conventional_tox")
    if needs_tox and spec.tox is None:
        raise ValueError(f"engine {engine!r} requires spec.tox")
    if engine in ("bmw", "bmw_f"):
        pp_e = _pp_efficacy_batch(z, info, spec.prior)
        decision, stop_analysis, stop_reason, eff_rej, tox_rej = _bmw_batch(
            pp_e, schedule, b_e, engine == "bmw_f")
        tox_tested = np.zeros(n_trials, dtype=bool)
    elif engine == "graphical":
        pp_e = _pp_efficacy_batch(z, info, spec.prior)
        sizes = [arm_sizes(n, schedule.phi) for n in schedule.n_cum]
        pp_t = np.empty_like(pp_e)
        for r, (n_t, n_c) in enumerate(sizes):
            table = pp_toxicity_table(n_t, n_c, spec.tox.delta,
                                      spec.tox.prior_a, spec.tox.prior_b)
            pp_t[:, r] = table[y1[:, r], y0[:, r]]
        decision, stop_analysis, stop_reason, eff_rej, tox_rej = _graphical_batch(
            pp_e, pp_t, schedule, b_e, b_t)
        tox_tested = eff_rej
    elif engine in ("conventional", "conventional_tox"):
        R = schedule.n_analyses
        zf = z[:, -1]
        crit = normal_quantile(1.0 - spec.alpha)
        eff_rej = zf > crit
        decision = np.where(eff_rej, 1, 2).astype(np.int8)
        tox_rej = np.zeros(n_trials, dtype=bool)
        tox_tested = np.zeros(n_trials, dtype=bool)
        if engine == "conventional_tox":
            n_t, n_c = arm_sizes(schedule.n_max, schedule.phi)
            p1 = y1[:, -1] / n_t
            p0 = y0[:, -1] / n_c
            se = np.sqrt(p1 * (1 - p1) / n_t + p0 * (1 - p0) / n_c)
            diff = p1 - p0 - spec.tox.delta
            zcrit = normal_quantile(spec.alpha)
            with np.errstate(divide="ignore", invalid="ignore"):
                stat = np.where(se > 0, diff / se, np.where(diff < 0, -np.inf, np.inf))
            tox_rej = eff_rej & (stat < zcrit)
            tox_tested = eff_rej
            decision = np.where(eff_rej & tox_rej, 1,
                                np.where(eff_rej, 3, 2)).astype(np.int8)
        stop_analysis = np.full(n_trials, R - 1)
        stop_reason = np.full(n_trials, StopReason.FINAL.value, dtype=object)
    else:
        raise ValueError(f"unknown engine {engine!r}")

    n_used = np.asarray(schedule.n_cum, dtype=float)[stop_analysis]
    errors = np.zeros(n_trials, dtype=bool)
    if labels.efficacy_null:
        errors |= eff_rej
    if labels.toxicity_null:
        errors |= tox_rej
    fwer = float(errors.mean()) if labels.any_null else None
    go = decision == 1
    pcs = float((go == labels.correct_go).mean())
    dist: dict[tuple[int, str], float] = {}
    for r, reason in zip(stop_analysis, stop_reason):
        key = (int(r), str(reason))
        dist[key] = dist.get(key, 0.0) + 1.0 / n_trials
    return OcSummary(n_trials, float(eff_rej.mean()), fwer, pcs,
                     float(n_used.mean()), dist)


# ---------------------------------------------------------------------------
# raw-data calibration and diagnostics


def raw_z_paths(s: ScenarioTruth, schedule: AnalysisSchedule, n_paths: int, rng: Rng,
                base_stream: int = 0, threads: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Statistic paths computed from simulated cohorts instead of the
    asymptotic model; returns (z, observed info) stacked over replicates."""
    ct, cc, y1, y0 = _batch_replicate_data(s, schedule, n_paths, rng, base_stream, threads)
    wins, losses, ties = _wlt_from_histograms(ct, cc)
    return _z_and_info(wins, losses, ties, schedule)


def calibrate_from_raw_data(spec: DesignSpec, s_null: ScenarioTruth,
                            s_alt: ScenarioTruth, rng: Rng,
                            threads: int = 1) -> CalibrationResult:
    """Benchmark calibration: identical grid search to the asymptotic one,
    except the path matrices come from simulated raw cohorts. Posterior
    evaluation still uses the configured design tie probabilities."""
    z_null, _ = raw_z_paths(s_null, spec.schedule, spec.n_paths, rng.stream(0),
                            base_stream=0, threads=threads)
    z_alt, _ = raw_z_paths(s_alt, spec.schedule, spec.n_paths, rng.stream(1),
                           base_stream=spec.n_paths, threads=threads)
    null_paths = PathMatrix(z_null, NULL, spec.p_t_null)
    alt_paths = PathMatrix(z_alt, ALTERNATIVE, spec.p_t_alt)
    return grid_search(
        spec,
        lambda lam, gamma: poe(null_paths, lam, gamma, spec),
        lambda lam, gamma: poe(alt_paths, lam, gamma, spec),
    )


def estimate_null_tie_probability(treat_cohort, ctrl_cohort,
                                  h: EndpointHierarchy = DEFAULT_HIERARCHY,
                                  n_perm: int = 500, rng: Rng = Rng(0)) -> float:
    """Mean tie fraction over random relabelings of the pooled cohort: the
    permutation estimate of the tie probability under the null."""
    if n_perm < 100:
        raise ValueError("use at least 100 permutations")
    codes = np.array([outcome_code(p.x_e, h) for p in (*treat_cohort, *ctrl_cohort)])
    n_t = len(treat_cohort)
    gen = rng.generator()
    n_codes = h.n_codes
    total = 0.0
    for _ in range(n_perm):
        perm = gen.permutation(codes)
        c = count_wlt_codes(perm[:n_t], perm[n_t:], n_codes)
        total += c.n_tie / c.n_pairs
    return total / n_perm
