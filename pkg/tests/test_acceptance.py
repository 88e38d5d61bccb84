"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Every tolerance is pinned exactly; the shared master seed is the project
default (20260810, also in configs/scenario_1_1.json). Runs the full
pipeline: theoretical targets -> calibration -> raw-trial simulation.

Some criteria pin external reference values that sit outside what the
procedure itself produces (details in the printed lines: the selected
boundary parameters trade power against the error constraint differently
than the reference point, and the reference futility-only power exceeds the
fixed-sample test's, which a calibrated futility-only design cannot do).
Those assertions are kept at their stated tolerances rather than loosened;
the printed line carries the measured values either way.
"""

import dataclasses
import math
import time

import numpy as np
import pytest

from bmw_design.calibration import (
    ALTERNATIVE,
    NULL,
    DesignSpec,
    calibrate_efficacy,
    calibrate_toxicity,
    poe,
    sample_z_paths,
)
from bmw_design.config import load_config
from bmw_design.inference import (
    AnalysisSchedule,
    NormalPrior,
    ToxCounts,
    ZPath,
    boundary_set,
    information_vector,
    posterior_theta,
    pp_toxicity,
)
from bmw_design.statkernel import Rng
from bmw_design.trialsim import (
    TruthLabels,
    calibrate_from_raw_data,
    estimate_ocs,
    raw_z_paths,
)
from bmw_design.winratio import (
    PatientOutcome,
    ScenarioTruth,
    WltCounts,
    count_wlt,
    theoretical_wlt,
)

MASTER = 20260810
SCHEDULE = AnalysisSchedule((80, 120, 160), 0.5)
SCEN_NULL = ScenarioTruth((0.40, 0.30), (0.40, 0.30))
SCEN_ALT = ScenarioTruth((0.40, 0.30), (0.40, 0.66))
N_TRIALS = 10_000


def report(name: str, ok: bool, detail: str) -> None:
    line = f"ACCEPTANCE {'PASS' if ok else 'FAIL'} - {name}: {detail}"
    print(line, flush=True)
    assert ok, line


@pytest.fixture(scope="module")
def shipped_spec() -> DesignSpec:
    import pathlib
    config = pathlib.Path(__file__).resolve().parent.parent / "configs" / "scenario_1_1.json"
    return load_config(config)


@pytest.fixture(scope="module")
def eff_cal(shipped_spec):
    return calibrate_efficacy(shipped_spec, Rng(shipped_spec.seed).stream(0))


@pytest.fixture(scope="module")
def tox_cal(shipped_spec):
    return calibrate_toxicity(shipped_spec, Rng(shipped_spec.seed).stream(1))


def test_posterior_quadrature_oracle():
    """100 random instances, R <= 3, vs a 20,001-point grid Bayes oracle."""
    start = time.time()
    gen = np.random.default_rng(MASTER)
    worst = 0.0
    for _ in range(100):
        r = int(gen.integers(1, 4))
        info = np.cumsum(gen.uniform(3, 8, r))
        z = gen.uniform(-3, 3, r)
        prior = NormalPrior(float(gen.uniform(-1, 1)), float(gen.uniform(0.5, 100)))
        post = posterior_theta(ZPath(tuple(z), tuple(info)), prior)

        b = np.sqrt(info)
        corr = np.minimum.outer(b, b) / np.maximum.outer(b, b)
        corr_inv = np.linalg.inv(corr)
        thetas = np.linspace(-5, 5, 20001)
        c1 = b @ corr_inv @ z
        c2 = b @ corr_inv @ b
        log_post = (-0.5 * (thetas ** 2 * c2 - 2 * thetas * c1)
                    - 0.5 * (thetas - prior.mean) ** 2 / prior.variance)
        dens = np.exp(log_post - log_post.max())
        dens /= np.trapezoid(dens, thetas)
        mean = np.trapezoid(dens * thetas, thetas)
        var = np.trapezoid(dens * (thetas - mean) ** 2, thetas)
        pp = np.trapezoid(dens[thetas >= 0], thetas[thetas >= 0])
        worst = max(worst, abs(post.mean - mean), abs(post.variance - var),
                    abs(post.pp_e - pp))
    elapsed = time.time() - start
    report("posterior-oracle", worst <= 1e-5 and elapsed < 10,
           f"max |error| = {worst:.2e} (<= 1e-5), runtime {elapsed:.1f}s (< 10s)")


def test_theorem1_empirical_validation():
    """50,000 raw-data statistic paths under the Scenario 1.1 alternative."""
    start = time.time()
    z, _ = raw_z_paths(SCEN_ALT, SCHEDULE, 50_000, Rng(MASTER).stream(201))
    _, _, p_t_alt, theta = theoretical_wlt(SCEN_ALT)
    target = theta * np.sqrt(information_vector(SCHEDULE, p_t_alt))
    means = z.mean(axis=0)
    sds = z.std(axis=0, ddof=1)
    mean_tol = 3 * sds / math.sqrt(50_000) + 0.02
    mean_err = np.abs(means - target)
    corr = np.corrcoef(z.T)
    n = np.asarray(SCHEDULE.n_cum, dtype=float)
    corr_target = np.sqrt(np.minimum.outer(n, n) / np.maximum.outer(n, n))
    corr_err = float(np.max(np.abs(corr - corr_target)))
    elapsed = time.time() - start
    ok = bool(np.all(mean_err <= mean_tol)) and corr_err <= 0.02 and elapsed < 120
    report("theorem1-validation", ok,
           f"mean errors {np.round(mean_err, 4).tolist()} vs tolerances "
           f"{np.round(mean_tol, 4).tolist()}; max corr error {corr_err:.4f} "
           f"(<= 0.02); runtime {elapsed:.0f}s (< 120s)")


def test_calibration_reproduction(shipped_spec, eff_cal):
    """Grid optimum within one grid step of the published (0.92, 0.90), and a
    fresh-seed null POE certificate at L = 20,000."""
    lam, gamma = eff_cal.lambda_opt, eff_cal.gamma_opt
    in_window = abs(lam - 0.92) <= 0.01 + 1e-9 and abs(gamma - 0.90) <= 0.05 + 1e-9
    spec20 = dataclasses.replace(shipped_spec, n_paths=20_000)
    fresh = sample_z_paths(0.0, shipped_spec.p_t_null, spec20, NULL,
                           Rng(MASTER).stream(202))
    cert_rate, _ = poe(fresh, lam, gamma, spec20)
    cert_bound = 0.1 + 3 * math.sqrt(0.09 / 20_000)
    cert_ok = cert_rate <= cert_bound
    report("calibration-reproduction", in_window and cert_ok,
           f"selected (lambda, gamma) = ({lam:.2f}, {gamma:.2f}) vs (0.92, 0.90) "
           f"+- one grid step; fresh-seed POE {cert_rate:.4f} <= {cert_bound:.4f} "
           f"({'ok' if cert_ok else 'violated'})")


@pytest.fixture(scope="module")
def table1_bmw(shipped_spec, eff_cal):
    b = boundary_set(eff_cal.lambda_opt, eff_cal.gamma_opt, shipped_spec.schedule)
    rng = Rng(MASTER)
    oc_null = estimate_ocs("bmw", shipped_spec, b, None, SCEN_NULL, N_TRIALS,
                           TruthLabels(True, False), rng.stream(203))
    oc_alt = estimate_ocs("bmw", shipped_spec, b, None, SCEN_ALT, N_TRIALS,
                          TruthLabels(False, False), rng.stream(204))
    return oc_null, oc_alt


def test_table1_scenario11_bmw(table1_bmw):
    start = time.time()
    oc_null, oc_alt = table1_bmw
    t1 = 100 * oc_null.reject_rate_e
    pw = 100 * oc_alt.reject_rate_e
    checks = [
        ("type I", t1, 10.0, 2.0),
        ("power", pw, 79.8, 3.0),
        ("E[n] null", oc_null.expected_n, 106.8, 5.0),
        ("E[n] alt", oc_alt.expected_n, 109.0, 5.0),
    ]
    bad = [f"{name} {value:.2f} vs {target} +- {tol}"
           for name, value, target, tol in checks if abs(value - target) > tol]
    elapsed = time.time() - start
    report("table1-scenario-1.1", not bad and elapsed < 300,
           "; ".join(f"{name} {value:.2f} (target {target} +- {tol})"
                     for name, value, target, tol in checks))


def test_table1_bmwb_parity(shipped_spec, table1_bmw):
    result = calibrate_from_raw_data(shipped_spec, SCEN_NULL, SCEN_ALT,
                                     Rng(MASTER).stream(205))
    b = boundary_set(result.lambda_opt, result.gamma_opt, shipped_spec.schedule)
    rng = Rng(MASTER)
    oc_null = estimate_ocs("bmw", shipped_spec, b, None, SCEN_NULL, N_TRIALS,
                           TruthLabels(True, False), rng.stream(206))
    oc_alt = estimate_ocs("bmw", shipped_spec, b, None, SCEN_ALT, N_TRIALS,
                          TruthLabels(False, False), rng.stream(207))
    t1_b = 100 * oc_null.reject_rate_e
    pw_b = 100 * oc_alt.reject_rate_e
    bmw_null, bmw_alt = table1_bmw
    t1_a = 100 * bmw_null.reject_rate_e
    pw_a = 100 * bmw_alt.reject_rate_e
    ok = (abs(t1_b - 9.9) <= 2.0 and abs(pw_b - 77.2) <= 3.0
          and abs(t1_a - t1_b) <= 3.0 and abs(pw_a - pw_b) <= 3.0)
    report("table1-bmwb-parity", ok,
           f"BMW_b type I {t1_b:.2f} (9.9 +- 2), power {pw_b:.2f} (77.2 +- 3); "
           f"|BMW - BMW_b| = ({abs(t1_a - t1_b):.2f}, {abs(pw_a - pw_b):.2f}) <= 3pp")


BLOCK3_CONTROL = (0.50, 0.40)
BLOCK3_DESIGNS = [  # (null treatment rates, alternative treatment rates)
    ((0.50, 0.40), (0.50, 0.78)),
    ((0.55, 0.31), (0.55, 0.68)),
    ((0.60, 0.22), (0.60, 0.58)),
]


def test_table2_structure():
    """Fixed-sample comparator always uses full enrollment; the futility-only
    variant is no less powerful than the two-sided-stopping design and never
    enrolls fewer patients, across the block-3 alternatives; scenario 3.5
    power pin."""
    rng = Rng(MASTER)
    u_ns = []
    rows = []
    for k, (q1_null, q1_alt) in enumerate(BLOCK3_DESIGNS):
        _, _, p_t_null, _ = theoretical_wlt(ScenarioTruth(BLOCK3_CONTROL, q1_null))
        _, _, p_t_alt, theta = theoretical_wlt(ScenarioTruth(BLOCK3_CONTROL, q1_alt))
        spec = DesignSpec(alpha=0.1, schedule=SCHEDULE, theta_alt=theta,
                          p_t_null=p_t_null, p_t_alt=p_t_alt, n_paths=5000,
                          seed=MASTER)
        spec_f = dataclasses.replace(spec, futility_only=True)
        cal = calibrate_efficacy(spec, Rng(MASTER).stream(0))
        cal_f = calibrate_efficacy(spec_f, Rng(MASTER).stream(0))
        s_alt = ScenarioTruth(BLOCK3_CONTROL, q1_alt)
        labels = TruthLabels(False, False)
        stream = 210 + 4 * k
        oc = estimate_ocs("bmw", spec,
                          boundary_set(cal.lambda_opt, cal.gamma_opt, SCHEDULE),
                          None, s_alt, N_TRIALS, labels, rng.stream(stream))
        oc_f = estimate_ocs("bmw_f", spec_f,
                            boundary_set(cal_f.lambda_opt, cal_f.gamma_opt, SCHEDULE),
                            None, s_alt, N_TRIALS, labels, rng.stream(stream + 1))
        oc_u = estimate_ocs("conventional", spec, None, None, s_alt, N_TRIALS,
                            labels, rng.stream(stream + 2))
        u_ns.append(oc_u.expected_n)
        rows.append((100 * oc_f.reject_rate_e, 100 * oc.reject_rate_e,
                     oc_f.expected_n, oc.expected_n))
    u_exact = all(n == 160.0 for n in u_ns)
    dominance = all(pw_f >= pw - 1.0 and en_f >= en for pw_f, pw, en_f, en in rows)
    pw_35 = rows[1][0]
    pin_35 = abs(pw_35 - 85.4) <= 3.0
    report("table2-structure", u_exact and dominance and pin_35,
           f"U E[n] all 160: {u_exact}; futility-only power/E[n] dominance: "
           f"{dominance} {[(round(a, 1), round(b, 1)) for a, b, _, _ in rows]}; "
           f"scenario 3.5 futility-only power {pw_35:.1f} (85.4 +- 3)")


TABLE3_BLOCK1 = [
    # (id, q_e1, q_t1, eff_null, tox_null, paper Conv PCS)
    ("1.1", (0.40, 0.66), 0.30, False, False, 42.9),
    ("1.2", (0.40, 0.66), 0.40, False, True, 91.7),
    ("1.3", (0.40, 0.30), 0.30, True, False, 95.6),
    ("1.4", (0.40, 0.30), 0.40, True, True, 99.0),
]


@pytest.fixture(scope="module")
def table3_results(shipped_spec, eff_cal, tox_cal):
    b_e = boundary_set(eff_cal.lambda_opt, eff_cal.gamma_opt, shipped_spec.schedule)
    b_t = boundary_set(tox_cal.lambda_opt, tox_cal.gamma_opt, shipped_spec.schedule)
    rng = Rng(MASTER)
    results = {}
    for k, (sid, q_e1, q_t1, eff_null, tox_null, conv_pcs) in enumerate(TABLE3_BLOCK1):
        s = ScenarioTruth((0.40, 0.30), q_e1, q_t0=0.30, q_t1=q_t1)
        labels = TruthLabels(eff_null, tox_null)
        oc = estimate_ocs("graphical", shipped_spec, b_e, b_t, s, N_TRIALS,
                          labels, rng.stream(230 + 2 * k))
        oc_conv = estimate_ocs("conventional_tox", shipped_spec, None, None, s,
                               N_TRIALS, labels, rng.stream(231 + 2 * k))
        results[sid] = (oc, oc_conv, conv_pcs)
    return results


def test_table3_graphical(table3_results):
    failures = []
    details = []
    for sid, (oc, _, _) in sorted(table3_results.items()):
        if oc.fwer is not None and 100 * oc.fwer > 11.0:
            failures.append(f"{sid} FWER {100 * oc.fwer:.1f} > 11")
        details.append(f"{sid}: FWER "
                       f"{'NA' if oc.fwer is None else f'{100 * oc.fwer:.1f}'} "
                       f"PCS {100 * oc.pcs:.1f} E[n] {oc.expected_n:.1f}")
    oc13 = table3_results["1.3"][0]
    if abs(100 * oc13.fwer - 7.2) > 2.0:
        failures.append(f"1.3 FWER {100 * oc13.fwer:.1f} vs 7.2 +- 2")
    if abs(100 * oc13.pcs - 97.0) > 2.0:
        failures.append(f"1.3 PCS {100 * oc13.pcs:.1f} vs 97.0 +- 2")
    if abs(oc13.expected_n - 107.4) > 5.0:
        failures.append(f"1.3 E[n] {oc13.expected_n:.1f} vs 107.4 +- 5")
    oc11 = table3_results["1.1"][0]
    if abs(100 * oc11.pcs - 37.4) > 3.0:
        failures.append(f"1.1 PCS {100 * oc11.pcs:.1f} vs 37.4 +- 3")
    report("table3-graphical", not failures,
           "; ".join(details) + (f" | violations: {failures}" if failures else ""))


def test_table3_conventional(table3_results):
    failures = []
    details = []
    for sid, (_, oc_conv, conv_pcs) in sorted(table3_results.items()):
        diff = abs(100 * oc_conv.pcs - conv_pcs)
        details.append(f"{sid}: Conv PCS {100 * oc_conv.pcs:.1f} (paper {conv_pcs})")
        if diff > 3.0:
            failures.append(sid)
    report("table3-conventional", not failures, "; ".join(details))


def test_toxicity_posterior_oracle():
    """5 x 5 count lattice x three margins vs a 10^6-draw two-Beta oracle."""
    gen = np.random.default_rng(MASTER + 1)
    n1 = n0 = 40
    worst = 0.0
    for delta in (0.05, 0.1, 0.2):
        for y1 in (0, 8, 16, 24, 32):
            for y0 in (0, 8, 16, 24, 32):
                draws = 1_000_000
                q1 = gen.beta(1 + y1, 1 + n1 - y1, draws)
                q0 = gen.beta(1 + y0, 1 + n0 - y0, draws)
                hits = int((q1 - q0 < delta).sum())
                mc = hits / draws
                # add-one smoothing keeps the s.e. meaningful at 0/1 cells,
                # where the plug-in estimate degenerates to zero
                p_smooth = (hits + 1) / (draws + 2)
                se = math.sqrt(p_smooth * (1 - p_smooth) / draws)
                err = abs(pp_toxicity(ToxCounts(y1, n1, y0, n0), delta) - mc)
                worst = max(worst, err - 3 * se)
    report("toxicity-posterior-oracle", worst <= 0.0,
           f"max (|error| - 3 s.e.) = {worst:.2e} (<= 0)")


def test_property_suites(shipped_spec, eff_cal):
    """Count conservation and label-swap antisymmetry over 1000 random
    cohorts; boundary monotonicity over 1000 random parameters; byte-identical
    OC CSVs across thread counts."""
    gen = np.random.default_rng(MASTER + 2)
    for _ in range(1000):
        n_t = int(gen.integers(1, 9))
        n_c = int(gen.integers(1, 9))
        treat = [PatientOutcome(1, tuple(gen.integers(0, 2, 2))) for _ in range(n_t)]
        ctrl = [PatientOutcome(0, tuple(gen.integers(0, 2, 2))) for _ in range(n_c)]
        counts = count_wlt(treat, ctrl)
        assert counts.n_win + counts.n_loss + counts.n_tie == n_t * n_c
        swapped = count_wlt([PatientOutcome(1, p.x_e) for p in ctrl],
                            [PatientOutcome(0, p.x_e) for p in treat])
        assert (swapped.n_win, swapped.n_loss) == (counts.n_loss, counts.n_win)
        assert swapped.n_tie == counts.n_tie

    for _ in range(1000):
        lam = float(gen.uniform(0, 1))
        gamma = float(gen.uniform(0, 1))
        k = int(gen.integers(2, 7))
        n_cum = tuple(np.cumsum(gen.integers(10, 60, k)).tolist())
        b = boundary_set(lam, gamma, AnalysisSchedule(n_cum, 0.5))
        fut, sup = np.array(b.futility), np.array(b.superiority)
        assert np.all(np.diff(fut) >= -1e-15) and np.all(np.diff(sup) <= 1e-15)
        assert np.all(fut <= lam + 1e-15) and np.all(sup >= lam - 1e-15)

    from bmw_design.cli import run_simulation, write_oc_csv
    import io
    doc = {
        "schema_version": 1,
        "design": {
            "alpha": 0.1, "phi": 0.5, "schedule": [80, 120, 160],
            "theta_alt": shipped_spec.theta_alt,
            "p_t_null": shipped_spec.p_t_null, "p_t_alt": shipped_spec.p_t_alt,
            "n_paths": 1000,
            "toxicity": {"delta": 0.1, "q_t0_null": 0.3, "q_t1_alt": 0.3},
        },
        "boundaries": {
            "efficacy": {"lambda": eff_cal.lambda_opt, "gamma": eff_cal.gamma_opt},
            "toxicity": {"lambda": 0.93, "gamma": 0.80},
        },
        "seeds": {"master": MASTER},
    }
    scenarios = [("1.1-null", SCEN_NULL, TruthLabels(True, False)),
                 ("1.1-alt", SCEN_ALT, TruthLabels(False, False))]
    csvs = []
    for threads in (1, 4):
        rows = run_simulation(doc, scenarios, ["bmw", "graphical"], 300, None, threads)
        buf = io.StringIO()
        write_oc_csv(buf, rows)
        csvs.append(buf.getvalue().encode())
    determinism = csvs[0] == csvs[1]
    report("property-suites", determinism,
           f"1000-cohort conservation/antisymmetry ok; 1000-point boundary "
           f"monotonicity ok; thread-count CSV determinism: {determinism}")
