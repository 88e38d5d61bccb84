#!/usr/bin/env python3
"""Reproduce the efficacy-only operating-characteristic tables.

For each design row: derive the tie-probability and log-win-ratio targets
from the scenario's marginal rates, calibrate the sequential design (and its
futility-only variant) on asymptotic statistic paths, then simulate raw
trials under the row's null and alternative with the BMW, futility-only, and
fixed-sample engines.

Usage: python scripts/run_efficacy_tables.py [--n-trials 10000] [--out oc.csv]
"""

import argparse
import csv
import dataclasses
import sys
import time

from bmw_design.calibration import DesignSpec, calibrate_efficacy
from bmw_design.inference import AnalysisSchedule, boundary_set
from bmw_design.statkernel import Rng
from bmw_design.trialsim import TruthLabels, estimate_ocs
from bmw_design.winratio import ScenarioTruth, theoretical_wlt

MASTER = 20260810
SCHEDULE = AnalysisSchedule((80, 120, 160), 0.5)

# (block, control rates, [(null treatment rates, alternative treatment rates)])
DESIGN_ROWS = [
    (1, (0.40, 0.30), [((0.40, 0.30), (0.40, 0.66)),
                       ((0.45, 0.21), (0.45, 0.57)),
                       ((0.50, 0.11), (0.50, 0.48))]),
    (2, (0.45, 0.35), [((0.45, 0.35), (0.45, 0.73)),
                       ((0.50, 0.26), (0.50, 0.63)),
                       ((0.55, 0.16), (0.55, 0.54))]),
    (3, (0.50, 0.40), [((0.50, 0.40), (0.50, 0.78)),
                       ((0.55, 0.31), (0.55, 0.68)),
                       ((0.60, 0.22), (0.60, 0.58))]),
    (4, (0.55, 0.45), [((0.55, 0.45), (0.55, 0.82)),
                       ((0.60, 0.36), (0.60, 0.72)),
                       ((0.65, 0.27), (0.65, 0.62))]),
    (5, (0.60, 0.50), [((0.60, 0.50), (0.60, 0.85)),
                       ((0.65, 0.41), (0.65, 0.75)),
                       ((0.70, 0.33), (0.70, 0.66))]),
]


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--n-trials", type=int, default=10000)
    parser.add_argument("--blocks", type=int, nargs="*", default=[1, 2, 3, 4, 5])
    parser.add_argument("--out", default=None)
    args = parser.parse_args()

    writer = csv.writer(open(args.out, "w", newline="") if args.out else sys.stdout)
    writer.writerow(["scenario", "hypothesis", "method", "lambda", "gamma",
                     "reject_pct", "expected_n"])
    start = time.time()
    for block, q0, rows in DESIGN_ROWS:
        if block not in args.blocks:
            continue
        for j, (q1_null, q1_alt) in enumerate(rows, start=1):
            _, _, p_t_null, _ = theoretical_wlt(ScenarioTruth(q0, q1_null))
            _, _, p_t_alt, theta = theoretical_wlt(ScenarioTruth(q0, q1_alt))
            spec = DesignSpec(alpha=0.1, schedule=SCHEDULE, theta_alt=theta,
                              p_t_null=p_t_null, p_t_alt=p_t_alt,
                              n_paths=5000, seed=MASTER)
            cal = calibrate_efficacy(spec, Rng(MASTER).stream(0))
            spec_f = dataclasses.replace(spec, futility_only=True)
            cal_f = calibrate_efficacy(spec_f, Rng(MASTER).stream(0))
            sid = f"{block}.{j}"
            for tag, q1, eff_null in (("null", q1_null, True), ("alt", q1_alt, False)):
                truth = ScenarioTruth(q0, q1)
                labels = TruthLabels(eff_null, False)
                base = 1000 * block + 100 * j + (0 if eff_null else 50)
                runs = [
                    ("bmw", spec, cal, "bmw"),
                    ("bmw_f", spec_f, cal_f, "bmw_f"),
                    ("u", spec, None, "conventional"),
                ]
                for name, sp, cal_used, engine in runs:
                    b = (boundary_set(cal_used.lambda_opt, cal_used.gamma_opt, SCHEDULE)
                         if cal_used else None)
                    oc = estimate_ocs(engine, sp, b, None, truth, args.n_trials,
                                      labels, Rng(MASTER).stream(base))
                    writer.writerow([
                        sid, tag, name,
                        "" if cal_used is None else f"{cal_used.lambda_opt:.2f}",
                        "" if cal_used is None else f"{cal_used.gamma_opt:.2f}",
                        f"{100 * oc.reject_rate_e:.1f}", f"{oc.expected_n:.1f}",
                    ])
            print(f"# scenario {sid} done ({time.time() - start:.0f}s)",
                  file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
