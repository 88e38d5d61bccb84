"""Interim decision evaluation shared by the CLI and the HTTP service.

Given a design (schedule, prior, boundary parameters) and the accumulated
win/loss/tie history (plus toxicity counts when the design monitors
toxicity), replay the monitoring state machine up to the current analysis
and report the decision there along with the posterior-probability traces
and the active boundary values.
"""

from __future__ import annotations

from dataclasses import dataclass

from .inference import (
    AnalysisSchedule,
    BoundarySet,
    NormalPrior,
    ToxCounts,
    ZPath,
    boundary_set,
    posterior_theta,
    pp_toxicity,
)
from .winratio import WltCounts, arm_sizes, wr_estimate

__all__ = ["DesignRef", "InterimRequest", "DecisionReport", "evaluate_request"]


@dataclass(frozen=True)
class DesignRef:
    schedule: AnalysisSchedule
    lambda_e: float
    gamma_e: float
    prior: NormalPrior = NormalPrior()
    lambda_t: float | None = None
    gamma_t: float | None = None
    delta: float | None = None
    tox_prior_a: float = 1.0
    tox_prior_b: float = 1.0

    @property
    def monitors_toxicity(self) -> bool:
        return self.lambda_t is not None

    def __post_init__(self):
        if self.monitors_toxicity and (self.gamma_t is None or self.delta is None):
            raise ValueError("toxicity monitoring needs lambda_t, gamma_t, and delta")


@dataclass(frozen=True)
class InterimRequest:
    design: DesignRef
    r_current: int  # 1-based analysis index
    wlt_history: tuple[WltCounts, ...]
    tox_history: tuple[ToxCounts, ...] = ()

    def validate(self) -> None:
        schedule = self.design.schedule
        if not 1 <= self.r_current <= schedule.n_analyses:
            raise ValueError(
                f"r_current {self.r_current} outside the schedule "
                f"(1..{schedule.n_analyses})")
        if len(self.wlt_history) != self.r_current:
            raise ValueError(
                f"wlt_history has {len(self.wlt_history)} entries, expected {self.r_current}")
        for r, c in enumerate(self.wlt_history):
            n_t, n_c = arm_sizes(schedule.n_cum[r], schedule.phi)
            if (c.n_treat, c.n_ctrl) != (n_t, n_c):
                raise ValueError(
                    f"analysis {r + 1}: cohort sizes ({c.n_treat}, {c.n_ctrl}) do not "
                    f"match the schedule ({n_t}, {n_c})")
        if self.design.monitors_toxicity:
            if len(self.tox_history) != self.r_current:
                raise ValueError(
                    f"tox_history has {len(self.tox_history)} entries, "
                    f"expected {self.r_current}")
            for r, t in enumerate(self.tox_history):
                n_t, n_c = arm_sizes(schedule.n_cum[r], schedule.phi)
                if (t.n1, t.n0) != (n_t, n_c):
                    raise ValueError(
                        f"analysis {r + 1}: toxicity denominators ({t.n1}, {t.n0}) do "
                        f"not match the schedule ({n_t}, {n_c})")
        elif self.tox_history:
            raise ValueError("tox_history given but the design has no toxicity boundaries")


@dataclass(frozen=True)
class DecisionReport:
    decision: str
    phase: str  # "efficacy" | "toxicity"
    analysis_index: int
    n_cum: int
    pp_e: float
    pp_trace_e: tuple[float, ...]
    boundary_e: dict
    pp_t: float | None = None
    pp_trace_t: tuple[float, ...] = ()
    boundary_t: dict | None = None

    def to_dict(self) -> dict:
        out = {
            "decision": self.decision,
            "phase": self.phase,
            "analysis_index": self.analysis_index,
            "n_cum": self.n_cum,
            "pp_e": self.pp_e,
            "pp_trace_e": list(self.pp_trace_e),
            "boundary_e": self.boundary_e,
        }
        if self.pp_t is not None:
            out["pp_t"] = self.pp_t
            out["pp_trace_t"] = list(self.pp_trace_t)
            out["boundary_t"] = self.boundary_t
        return out


def _boundary_at(b: BoundarySet, r: int, is_final: bool) -> dict:
    if is_final:
        return {"futility": None, "superiority": None, "final": b.final_threshold}
    return {"futility": b.futility[r], "superiority": b.superiority[r], "final": None}


def evaluate_request(req: InterimRequest) -> DecisionReport:
    """Pure function of the request; no stored state is consulted."""
    req.validate()
    design = req.design
    schedule = design.schedule
    r_now = req.r_current - 1
    is_final = req.r_current == schedule.n_analyses
    b_e = boundary_set(design.lambda_e, design.gamma_e, schedule)

    zs, infos = [], []
    pp_trace_e = []
    for r, counts in enumerate(req.wlt_history):
        est = wr_estimate(counts, schedule.phi, schedule.n_cum[r])
        zs.append(est.z)
        infos.append(est.info)
        post = posterior_theta(ZPath(tuple(zs), tuple(infos)), design.prior)
        pp_trace_e.append(post.pp_e)

    if not design.monitors_toxicity:
        pp_now = pp_trace_e[r_now]
        if is_final:
            decision = "effective" if pp_now > b_e.final_threshold else "ineffective"
        elif pp_now < b_e.futility[r_now]:
            decision = "stop_futility"
        elif pp_now > b_e.superiority[r_now]:
            decision = "stop_superiority"
        else:
            decision = "continue"
        return DecisionReport(decision, "efficacy", req.r_current,
                              schedule.n_cum[r_now], pp_now, tuple(pp_trace_e),
                              _boundary_at(b_e, r_now, is_final))

    b_t = boundary_set(design.lambda_t, design.gamma_t, schedule)
    pp_trace_t = tuple(
        pp_toxicity(t, design.delta, design.tox_prior_a, design.tox_prior_b)
        for t in req.tox_history)

    # replay the graphical state machine over the full history
    phase = "efficacy"
    decision = "continue"
    for r in range(req.r_current):
        final_here = r == schedule.n_analyses - 1
        pe, pt = pp_trace_e[r], pp_trace_t[r]
        if phase == "efficacy":
            if final_here:
                if pe > b_e.final_threshold and pt > b_t.final_threshold:
                    decision = "success"
                elif pe > b_e.final_threshold:
                    decision = "fail_toxicity"
                else:
                    decision = "fail_efficacy"
                break
            if pe < b_e.futility[r]:
                decision = "stop_futility"
                break
            if pe > b_e.superiority[r]:
                phase = "toxicity"
        if phase == "toxicity":
            if final_here:
                decision = "success" if pt > b_t.final_threshold else "fail_toxicity"
                break
            if pt < b_t.futility[r]:
                decision = "fail_toxicity"
                break
            if pt > b_t.superiority[r]:
                decision = "success"
                break
            decision = "continue"
    return DecisionReport(decision, phase, req.r_current, schedule.n_cum[r_now],
                          pp_trace_e[r_now], tuple(pp_trace_e),
                          _boundary_at(b_e, r_now, is_final),
                          pp_trace_t[r_now], pp_trace_t,
                          _boundary_at(b_t, r_now, is_final))
