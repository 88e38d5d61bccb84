#!/usr/bin/env python3
"""Record the console's decision-parity fixtures.

Simulates trial count histories, replays each one analysis-by-analysis
against the real /v1/decide handler, and writes the request/response pairs
to frontend/tests/fixtures/decide_sessions.json. Seeds are scanned so the 20
sessions cover every decision path the console renders: efficacy futility
and superiority stops, the transition into toxicity monitoring, early
toxicity futility/superiority stops, and all final-analysis outcomes.

Usage: python scripts/make_console_fixtures.py
"""

import json
import sys
from collections import Counter
from pathlib import Path

from fastapi.testclient import TestClient

from bmw_design.inference import AnalysisSchedule
from bmw_design.service import create_app
from bmw_design.statkernel import Rng
from bmw_design.trialsim import _analysis_counts, _generate_replicate, _wlt_from_histograms
from bmw_design.winratio import ScenarioTruth, arm_sizes

SCHEDULE = AnalysisSchedule((80, 120, 160), 0.5)

EFF_DESIGN = {
    "schedule": [80, 120, 160],
    "phi": 0.5,
    "efficacy": {"lambda": 0.92, "gamma": 0.90},
}
TOX_DESIGN = {
    "schedule": [80, 120, 160],
    "phi": 0.5,
    "efficacy": {"lambda": 0.92, "gamma": 0.90},
    "toxicity": {"lambda": 0.93, "gamma": 0.80},
    "delta": 0.1,
}

SCEN_NULL = ScenarioTruth((0.40, 0.30), (0.40, 0.30))
SCEN_ALT = ScenarioTruth((0.40, 0.30), (0.40, 0.66))
SCEN_ALT_TOXIC = ScenarioTruth((0.40, 0.30), (0.40, 0.66), q_t0=0.30, q_t1=0.55)
SCEN_STRONG = ScenarioTruth((0.20, 0.15), (0.75, 0.80), q_t0=0.30, q_t1=0.30)
SCEN_STRONG_SAFE = ScenarioTruth((0.20, 0.15), (0.75, 0.80), q_t0=0.30, q_t1=0.10)


def history_for(scenario: ScenarioTruth, seed: int):
    rep = _generate_replicate(scenario, SCHEDULE, Rng(900_000 + seed))
    ct, cc, y1, y0 = _analysis_counts(*rep, SCHEDULE)
    wins, losses, ties = _wlt_from_histograms(ct, cc)
    entries = []
    for r, n in enumerate(SCHEDULE.n_cum):
        n_t, n_c = arm_sizes(n, SCHEDULE.phi)
        entries.append({
            "wlt": {"n_win": int(wins[r]), "n_loss": int(losses[r]),
                    "n_tie": int(ties[r]), "n_treat": n_t, "n_ctrl": n_c},
            "tox": {"y1": int(y1[r]), "n1": n_t, "y0": int(y0[r]), "n0": n_c},
        })
    return entries


def replay(client, design: dict, entries: list[dict]):
    """Call /v1/decide per growing prefix until a terminal decision."""
    steps = []
    with_tox = "toxicity" in design
    for r in range(1, len(entries) + 1):
        request = {
            "design": design,
            "r_current": r,
            "wlt_history": [e["wlt"] for e in entries[:r]],
        }
        if with_tox:
            request["tox_history"] = [e["tox"] for e in entries[:r]]
        resp = client.post("/v1/decide", json=request)
        resp.raise_for_status()
        body = resp.json()
        steps.append({"request": request, "response": body})
        if body["decision"] != "continue":
            break
    return steps


def classify(steps) -> str:
    """Trajectory signature used to curate coverage."""
    phases = [s["response"]["phase"] for s in steps]
    last = steps[-1]["response"]
    tox_entered = "toxicity" in phases
    at_final = last["analysis_index"] == len(SCHEDULE.n_cum)
    return f"{last['decision']}|tox={tox_entered}|final={at_final}"


def main() -> int:
    client = TestClient(create_app())
    sessions = []
    coverage = Counter()

    def harvest(design, scenario, scen_tag, seeds, want, limit):
        taken = 0
        for seed in seeds:
            if taken >= limit:
                break
            entries = history_for(scenario, seed)
            steps = replay(client, design, entries)
            signature = classify(steps)
            if want(signature, coverage):
                coverage[signature] += 1
                sessions.append({
                    "name": f"{scen_tag}-seed{seed}",
                    "design": design,
                    "steps": steps,
                })
                taken += 1

    # efficacy-only designs: futility stops, superiority stops, final calls
    harvest(EFF_DESIGN, SCEN_NULL, "eff-null", range(60),
            lambda sig, cov: cov[sig] < 2, 4)
    harvest(EFF_DESIGN, SCEN_ALT, "eff-alt", range(60),
            lambda sig, cov: cov[sig] < 2, 4)
    # joint designs: toxicity-phase coverage
    harvest(TOX_DESIGN, SCEN_STRONG, "joint-strong", range(80),
            lambda sig, cov: "tox=True" in sig and cov[sig] < 2, 4)
    harvest(TOX_DESIGN, SCEN_STRONG_SAFE, "joint-safe", range(80),
            lambda sig, cov: "tox=True" in sig and cov[sig] < 2, 3)
    harvest(TOX_DESIGN, SCEN_ALT_TOXIC, "joint-toxic", range(80),
            lambda sig, cov: "tox=True" in sig and cov[sig] < 3, 3)
    harvest(TOX_DESIGN, SCEN_ALT, "joint-alt", range(40),
            lambda sig, cov: cov[sig] < 1, 20 - len(sessions))
    # filler: top up to exactly 20 sessions with fresh seeds, any signature
    harvest(TOX_DESIGN, SCEN_ALT, "joint-fill", range(40, 80),
            lambda sig, cov: True, 20 - len(sessions))

    if len(sessions) != 20:
        print(f"expected 20 sessions, curated {len(sessions)}", file=sys.stderr)
        return 1
    has_transition = any(
        any(s["response"]["phase"] == "toxicity" and s["response"]["decision"] == "continue"
            for s in session["steps"])
        for session in sessions)
    if not has_transition:
        print("no session continues inside toxicity monitoring", file=sys.stderr)
        return 1

    out = Path(__file__).resolve().parent.parent / "frontend" / "tests" / "fixtures"
    out.mkdir(parents=True, exist_ok=True)
    path = out / "decide_sessions.json"
    with open(path, "w") as fh:
        json.dump({"sessions": sessions}, fh, indent=1)
        fh.write("\n")
    print(f"wrote {path} with {len(sessions)} sessions")
    for sig, count in sorted(coverage.items()):
        print(f"  {count} x {sig}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
