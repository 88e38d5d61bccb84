"""Command-line interface: calibrate designs, simulate operating
characteristics, evaluate interim decisions, tabulate boundaries, and run
the HTTP service. The CLI and the service share the same core functions,
so identical payloads and seeds give identical outputs."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from pathlib import Path

from .calibration import (
    CalibrationError,
    calibrate_efficacy,
    calibrate_toxicity,
    write_surface_csv,
)
from .config import (
    ConfigError,
    load_config,
    load_config_doc,
    load_scenarios,
    parse_config,
    parse_scenarios,
)
from .decide import DesignRef, InterimRequest, evaluate_request
from .inference import AnalysisSchedule, NormalPrior, ToxCounts, boundary_set, write_boundary_csv
from .statkernel import Rng
from .trialsim import estimate_ocs
from .winratio import count_wlt, load_outcomes_csv

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2

METHOD_ENGINES = {
    "bmw": "bmw",
    "bmw_f": "bmw_f",
    "graphical": "graphical",
    "conventional": "conventional",
}

# stream namespace on the master seed: 0/1 calibration, 100+ simulation rows
CALIBRATE_EFF_STREAM = 0
CALIBRATE_TOX_STREAM = 1
SIMULATE_STREAM_BASE = 100


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("BMW_THREADS")
    return max(1, int(env)) if env else 1


def cmd_calibrate(args) -> int:
    out_dir = Path(args.out)
    try:
        spec = load_config(args.config)
    except (ConfigError, FileNotFoundError, OSError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    rng = Rng(spec.seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    report: dict = {"schema_version": 1, "seed": spec.seed}
    try:
        eff = calibrate_efficacy(spec, rng.stream(CALIBRATE_EFF_STREAM))
    except CalibrationError as err:
        print(f"calibration infeasible: {err}", file=sys.stderr)
        return EXIT_INFEASIBLE
    report["efficacy"] = eff.to_dict()
    write_surface_csv(out_dir / "surface_efficacy.csv", eff)
    write_boundary_csv(out_dir / "boundaries_efficacy.csv", spec.schedule,
                       boundary_set(eff.lambda_opt, eff.gamma_opt, spec.schedule))
    if spec.tox is not None:
        try:
            tox = calibrate_toxicity(spec, rng.stream(CALIBRATE_TOX_STREAM))
        except CalibrationError as err:
            print(f"toxicity calibration infeasible: {err}", file=sys.stderr)
            return EXIT_INFEASIBLE
        report["toxicity"] = tox.to_dict()
        write_surface_csv(out_dir / "surface_toxicity.csv", tox)
        write_boundary_csv(out_dir / "boundaries_toxicity.csv", spec.schedule,
                           boundary_set(tox.lambda_opt, tox.gamma_opt, spec.schedule))
    with open(out_dir / "report.json", "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    summary = {"seed": spec.seed}
    for section in ("efficacy", "toxicity"):
        if section in report:
            summary[section] = {k: report[section][k] for k in
                                ("lambda_opt", "gamma_opt", "poe_null", "poe_alt")}
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def resolve_boundaries(doc: dict, spec, rng: Rng):
    """Boundary parameters from the config when present, else calibrated."""
    given = doc.get("boundaries", {})
    results = {}
    if "efficacy" in given:
        b = given["efficacy"]
        results["efficacy"] = (b["lambda"], b["gamma"])
    else:
        eff = calibrate_efficacy(spec, rng.stream(CALIBRATE_EFF_STREAM))
        results["efficacy"] = (eff.lambda_opt, eff.gamma_opt)
    if spec.tox is not None:
        if "toxicity" in given:
            b = given["toxicity"]
            results["toxicity"] = (b["lambda"], b["gamma"])
        else:
            tox = calibrate_toxicity(spec, rng.stream(CALIBRATE_TOX_STREAM))
            results["toxicity"] = (tox.lambda_opt, tox.gamma_opt)
    return results


def run_simulation(doc: dict, scenarios, methods: list[str], n_trials: int,
                   seed: int | None, threads: int,
                   progress=None) -> list[dict]:
    """One OC row per scenario x method; shared calibration per document."""
    spec = parse_config(doc)
    if seed is not None:
        spec = dataclasses.replace(spec, seed=seed)
    rng = Rng(spec.seed)
    bounds = resolve_boundaries(doc, spec, rng)
    b_e = boundary_set(*bounds["efficacy"], spec.schedule)
    b_t = (boundary_set(*bounds["toxicity"], spec.schedule)
           if "toxicity" in bounds else None)
    # conduct-time tie handling: per-analysis estimates by default, or carry
    # the configured null design value
    tie_mode = doc["design"].get("tie_mode", "observed")
    p_t_design = spec.p_t_null if tie_mode == "design" else None
    rows = []
    total = len(scenarios) * len(methods)
    done = 0
    for row_idx, (sid, truth, labels) in enumerate(scenarios):
        for m_idx, method in enumerate(methods):
            if method not in METHOD_ENGINES:
                raise ValueError(f"unknown method {method!r}")
            engine = METHOD_ENGINES[method]
            if engine == "conventional" and spec.tox is not None:
                engine = "conventional_tox"
            oc = estimate_ocs(engine, spec, b_e, b_t, truth, n_trials, labels,
                              rng.stream(SIMULATE_STREAM_BASE + row_idx * 16 + m_idx),
                              threads=threads, tie_mode=tie_mode,
                              p_t_design=p_t_design)
            row = {
                "scenario": sid,
                "method": method,
                "n_trials": oc.n_trials,
                "reject_rate_e": oc.reject_rate_e,
                "fwer": oc.fwer,
                "pcs": oc.pcs,
                "expected_n": oc.expected_n,
                "lambda_e": b_e.lam,
                "gamma_e": b_e.gamma,
                "stop_distribution": {f"{r + 1}:{reason}": frac
                                      for (r, reason), frac in sorted(oc.stop_distribution.items())},
            }
            if b_t is not None:
                row["lambda_t"] = b_t.lam
                row["gamma_t"] = b_t.gamma
            rows.append(row)
            done += 1
            if progress:
                progress(done / total)
    return rows


def write_oc_csv(path_or_handle, rows: list[dict]) -> None:
    close = False
    if isinstance(path_or_handle, (str, Path)):
        fh = open(path_or_handle, "w", newline="")
        close = True
    else:
        fh = path_or_handle
    try:
        writer = csv.writer(fh)
        writer.writerow(["scenario", "method", "n_trials", "reject_rate_e",
                         "fwer", "pcs", "expected_n", "stop_distribution"])
        for row in rows:
            writer.writerow([
                row["scenario"], row["method"], row["n_trials"],
                f"{row['reject_rate_e']:.6f}",
                "NA" if row["fwer"] is None else f"{row['fwer']:.6f}",
                f"{row['pcs']:.6f}",
                f"{row['expected_n']:.4f}",
                json.dumps(row["stop_distribution"], sort_keys=True),
            ])
    finally:
        if close:
            fh.close()


def cmd_simulate(args) -> int:
    try:
        doc = load_config_doc(args.config)
        spec = parse_config(doc)  # early validation
        if args.scenarios:
            scenarios = load_scenarios(args.scenarios)
        elif "scenarios" in doc:
            scenarios = parse_scenarios(doc)
        else:
            scenarios = []
        if not scenarios:
            raise ConfigError("no scenarios given (use --scenarios or a scenarios section)")
        methods = [m.strip() for m in args.methods.split(",") if m.strip()]
        unknown = [m for m in methods if m not in METHOD_ENGINES]
        if unknown:
            raise ConfigError(f"unknown methods: {', '.join(unknown)}")
        if "graphical" in methods and spec.tox is None:
            raise ConfigError("graphical method requires design.toxicity")
    except (ConfigError, FileNotFoundError, OSError, json.JSONDecodeError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        rows = run_simulation(doc, scenarios, methods, args.n_trials, args.seed,
                              _threads(args))
    except CalibrationError as err:
        print(f"calibration infeasible: {err}", file=sys.stderr)
        return EXIT_INFEASIBLE
    if args.out:
        write_oc_csv(args.out, rows)
    else:
        write_oc_csv(sys.stdout, rows)
    return EXIT_OK


def cmd_decide(args) -> int:
    try:
        with open(args.design) as fh:
            doc = json.load(fh)
        d = doc["design"]
        schedule = AnalysisSchedule(tuple(d["schedule"]), d.get("phi", 0.5))
        prior = NormalPrior(**d.get("prior", {}))
        b = doc["boundaries"]
        design = DesignRef(
            schedule=schedule,
            lambda_e=b["efficacy"]["lambda"], gamma_e=b["efficacy"]["gamma"],
            prior=prior,
            lambda_t=b.get("toxicity", {}).get("lambda"),
            gamma_t=b.get("toxicity", {}).get("gamma"),
            delta=d.get("toxicity", {}).get("delta"),
            tox_prior_a=d.get("toxicity", {}).get("prior_a", 1.0),
            tox_prior_b=d.get("toxicity", {}).get("prior_b", 1.0),
        )
        wlt, tox = [], []
        for r, path in enumerate(args.data):
            patients, hierarchy = load_outcomes_csv(path)
            treat = [p for p in patients if p.arm == 1]
            ctrl = [p for p in patients if p.arm == 0]
            wlt.append(count_wlt(treat, ctrl, hierarchy))
            if design.monitors_toxicity:
                tox.append(ToxCounts(sum(p.x_t for p in treat), len(treat),
                                     sum(p.x_t for p in ctrl), len(ctrl)))
        req = InterimRequest(design, len(args.data), tuple(wlt), tuple(tox))
        report = evaluate_request(req)
    except (ConfigError, ValueError, KeyError, OSError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK


def cmd_boundaries(args) -> int:
    try:
        schedule = AnalysisSchedule(tuple(args.schedule), args.phi)
        b = boundary_set(args.lam, args.gamma, schedule)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    if args.out:
        write_boundary_csv(args.out, schedule, b)
    else:
        writer = csv.writer(sys.stdout)
        writer.writerow(["analysis_index", "n_cum", "futility_pp", "superiority_pp"])
        for r, n in enumerate(schedule.n_cum):
            writer.writerow([r + 1, n, f"{b.futility[r]:.10f}", f"{b.superiority[r]:.10f}"])
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(jobs_dir=args.jobs_dir, threads=_threads(args))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bmw-design",
        description="Win-ratio trial design workbench: calibration, simulation, "
                    "interim decisions, and an HTTP service.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="grid-search boundary parameters")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(fn=cmd_calibrate)

    p = sub.add_parser("simulate", help="operating characteristics per scenario")
    p.add_argument("--config", required=True)
    p.add_argument("--scenarios", default=None, help="scenario JSON file")
    p.add_argument("--methods", default="bmw",
                   help="comma-separated: bmw,bmw_f,graphical,conventional")
    p.add_argument("--n-trials", type=int, default=10000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", default=None, help="CSV path (stdout when omitted)")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("decide", help="evaluate an interim analysis from outcome CSVs")
    p.add_argument("--design", required=True, help="design JSON with boundaries")
    p.add_argument("--data", action="append", required=True,
                   help="accumulated outcome CSV per analysis, oldest first")
    p.set_defaults(fn=cmd_decide)

    p = sub.add_parser("boundaries", help="tabulate stopping boundaries")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--schedule", type=int, nargs="+", required=True)
    p.add_argument("--phi", type=float, default=0.5)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_boundaries)

    p = sub.add_parser("serve", help="run the HTTP JSON service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8710)
    p.add_argument("--jobs-dir", default=None)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
