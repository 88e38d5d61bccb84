"""Pairwise hierarchical win/loss/tie comparison and the win-ratio statistic.

Every treatment patient is compared against every control patient; the
highest-priority endpoint that differs decides the pair, and pairs equal on
all endpoints are ties. Binary endpoints are encoded as integers so that
the hierarchical comparison reduces to integer comparison, which lets
cohort-level counting run on code histograms instead of explicit pair loops.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .statkernel import bvn_upper_orthant, normal_quantile

__all__ = [
    "PairResult",
    "EndpointHierarchy",
    "PatientOutcome",
    "WltCounts",
    "WrEstimate",
    "ScenarioTruth",
    "compare_pair",
    "count_wlt",
    "count_wlt_codes",
    "wr_estimate",
    "theoretical_wlt",
    "efficacy_cell_probs",
    "outcome_code",
    "arm_sizes",
    "load_outcomes_csv",
]

MAX_TIE_PROB = 1.0 - 1e-6


class PairResult(Enum):
    WIN = "win"
    LOSS = "loss"
    TIE = "tie"


@dataclass(frozen=True)
class EndpointHierarchy:
    """Ordered binary endpoints, position 0 = highest priority."""

    endpoints: tuple[str, ...]
    larger_is_better: tuple[bool, ...] = ()

    def __post_init__(self):
        if len(self.endpoints) == 0:
            raise ValueError("hierarchy needs at least one endpoint")
        if len(set(self.endpoints)) != len(self.endpoints):
            raise ValueError("endpoint identifiers must be unique")
        if not self.larger_is_better:
            object.__setattr__(self, "larger_is_better", (True,) * len(self.endpoints))
        if len(self.larger_is_better) != len(self.endpoints):
            raise ValueError("direction flags must align with endpoints")

    @property
    def n_endpoints(self) -> int:
        return len(self.endpoints)

    @property
    def n_codes(self) -> int:
        return 1 << self.n_endpoints


DEFAULT_HIERARCHY = EndpointHierarchy(("response", "efs3"))


@dataclass(frozen=True)
class PatientOutcome:
    arm: int  # 1 = treatment, 0 = control
    x_e: tuple[int, ...]
    x_t: int = 0

    def __post_init__(self):
        if self.arm not in (0, 1):
            raise ValueError(f"arm must be 0 or 1, got {self.arm!r}")
        if any(v not in (0, 1) for v in self.x_e) or self.x_t not in (0, 1):
            raise ValueError("endpoint values must be binary")


@dataclass(frozen=True)
class WltCounts:
    n_win: int
    n_loss: int
    n_tie: int
    n_treat: int
    n_ctrl: int

    def __post_init__(self):
        if min(self.n_win, self.n_loss, self.n_tie) < 0:
            raise ValueError("counts must be nonnegative")
        if self.n_win + self.n_loss + self.n_tie != self.n_treat * self.n_ctrl:
            raise ValueError(
                f"counts {self.n_win}+{self.n_loss}+{self.n_tie} != "
                f"{self.n_treat}*{self.n_ctrl} pairwise comparisons"
            )

    @property
    def n_pairs(self) -> int:
        return self.n_treat * self.n_ctrl


@dataclass(frozen=True)
class WrEstimate:
    p_hat_w: float
    p_hat_l: float
    p_hat_t: float
    wr: float
    theta_hat: float
    z: float
    info: float


def outcome_code(x_e, h: EndpointHierarchy = DEFAULT_HIERARCHY) -> int:
    """Integer encoding with the top-priority endpoint as the leading bit,
    oriented so that a larger code is a strictly better outcome."""
    if len(x_e) != h.n_endpoints:
        raise ValueError(f"expected {h.n_endpoints} endpoint values, got {len(x_e)}")
    code = 0
    for value, better_high in zip(x_e, h.larger_is_better):
        bit = value if better_high else 1 - value
        code = (code << 1) | bit
    return code


def compare_pair(treat: PatientOutcome, ctrl: PatientOutcome,
                 h: EndpointHierarchy = DEFAULT_HIERARCHY) -> PairResult:
    """Walk endpoints in priority order; first difference decides the pair."""
    ct = outcome_code(treat.x_e, h)
    cc = outcome_code(ctrl.x_e, h)
    if ct > cc:
        return PairResult.WIN
    if ct < cc:
        return PairResult.LOSS
    return PairResult.TIE


def count_wlt_codes(treat_codes: np.ndarray, ctrl_codes: np.ndarray, n_codes: int) -> WltCounts:
    """Exhaustive pairwise counting from integer outcome codes via histograms."""
    ht = np.bincount(treat_codes, minlength=n_codes).astype(np.int64)
    hc = np.bincount(ctrl_codes, minlength=n_codes).astype(np.int64)
    cum_c = np.cumsum(hc)  # cum_c[a] = # controls with code <= a
    wins = int(np.dot(ht[1:], cum_c[:-1]))
    ties = int(np.dot(ht, hc))
    total = int(ht.sum() * hc.sum())
    return WltCounts(wins, total - wins - ties, ties, int(ht.sum()), int(hc.sum()))


def count_wlt(treat_cohort, ctrl_cohort, h: EndpointHierarchy = DEFAULT_HIERARCHY) -> WltCounts:
    """Compare every treatment patient with every control patient."""
    if len(treat_cohort) == 0 or len(ctrl_cohort) == 0:
        raise ValueError("both cohorts must be nonempty")
    tc = np.array([outcome_code(p.x_e, h) for p in treat_cohort])
    cc = np.array([outcome_code(p.x_e, h) for p in ctrl_cohort])
    return count_wlt_codes(tc, cc, h.n_codes)


def adjusted_win_loss(n_win: int, n_loss: int) -> tuple[float, float]:
    """Haldane 0.5 continuity adjustment when either count is zero."""
    if n_win == 0 or n_loss == 0:
        return n_win + 0.5, n_loss + 0.5
    return float(n_win), float(n_loss)


def wr_estimate(c: WltCounts, phi: float, n_total: int) -> WrEstimate:
    """Win-ratio point estimate, Wald statistic, and information value.

    The variance approximation is 4(1+p_T) / (3 phi (1-phi) (1-p_T) N); the
    tie fraction is clipped below 1 so all-tie analyses stay finite, and an
    all-tie analysis reports z = 0.
    """
    if not 0.0 < phi < 1.0:
        raise ValueError(f"phi must be in (0,1), got {phi!r}")
    if n_total != c.n_treat + c.n_ctrl:
        raise ValueError(f"n_total {n_total} != n_treat+n_ctrl {c.n_treat + c.n_ctrl}")
    n_pairs = c.n_pairs
    p_w = c.n_win / n_pairs
    p_l = c.n_loss / n_pairs
    p_t = c.n_tie / n_pairs
    w_adj, l_adj = adjusted_win_loss(c.n_win, c.n_loss)
    p_t_c = min(p_t, MAX_TIE_PROB)
    info = 3.0 * phi * (1.0 - phi) * (1.0 - p_t_c) * n_total / (4.0 * (1.0 + p_t_c))
    if c.n_win == 0 and c.n_loss == 0:
        theta_hat = 0.0
        z = 0.0
    else:
        theta_hat = math.log(w_adj / l_adj)
        z = theta_hat * math.sqrt(info)
    return WrEstimate(p_w, p_l, p_t, w_adj / l_adj, theta_hat, z, info)


@dataclass(frozen=True)
class ScenarioTruth:
    """Marginal success/toxicity rates per arm plus the latent correlations
    of the Gaussian copula that generates outcomes."""

    q_e0: tuple[float, float]
    q_e1: tuple[float, float]
    q_t0: float = 0.3
    q_t1: float = 0.3
    rho_ee: float = 0.25
    rho_et: float = 0.2
    # correlation between the second efficacy latent and the toxicity latent;
    # defaults to rho_ee * rho_et (conditional independence given the first latent)
    rho_e2t: float | None = None

    def __post_init__(self):
        for q in (*self.q_e0, *self.q_e1, self.q_t0, self.q_t1):
            if not 0.0 < q < 1.0:
                raise ValueError(f"marginal probabilities must be in (0,1), got {q!r}")
        if not (abs(self.rho_ee) < 1.0 and abs(self.rho_et) < 1.0):
            raise ValueError("latent correlations must have magnitude < 1")

    def latent_corr(self) -> np.ndarray:
        r23 = self.rho_e2t if self.rho_e2t is not None else self.rho_ee * self.rho_et
        return np.array([
            [1.0, self.rho_ee, self.rho_et],
            [self.rho_ee, 1.0, r23],
            [self.rho_et, r23, 1.0],
        ])


def efficacy_cell_probs(q: tuple[float, float], rho: float) -> np.ndarray:
    """Joint probabilities of the two binary efficacy outcomes, indexed by
    outcome code (second endpoint is the low bit)."""
    q1, q2 = q
    k1 = normal_quantile(1.0 - q1)
    k2 = normal_quantile(1.0 - q2)
    p11 = bvn_upper_orthant(k1, k2, rho)
    cells = np.array([1.0 - q1 - q2 + p11, q2 - p11, q1 - p11, p11])
    if np.any(cells < -1e-12):
        raise ValueError(f"degenerate marginals: joint cells {cells}")
    return np.clip(cells, 0.0, 1.0)


def theoretical_wlt(s: ScenarioTruth,
                    h: EndpointHierarchy = DEFAULT_HIERARCHY) -> tuple[float, float, float, float]:
    """Exact population win/loss/tie probabilities and log win ratio for a
    two-endpoint scenario, from the copula cell probabilities."""
    if h.n_endpoints != 2:
        raise ValueError("theoretical values are implemented for two-endpoint hierarchies")
    cells_c = efficacy_cell_probs(s.q_e0, s.rho_ee)
    cells_t = efficacy_cell_probs(s.q_e1, s.rho_ee)
    cum_c = np.cumsum(cells_c)
    p_w = float(np.dot(cells_t[1:], cum_c[:-1]))
    p_t = float(np.dot(cells_t, cells_c))
    p_l = 1.0 - p_w - p_t
    theta = math.log(p_w / p_l)
    return p_w, p_l, p_t, theta


def arm_sizes(n_total: int, phi: float) -> tuple[int, int]:
    """Block randomization: exactly round(phi * N) treatment patients."""
    n_treat = round(phi * n_total)
    return n_treat, n_total - n_treat


def load_outcomes_csv(path) -> tuple[list[PatientOutcome], EndpointHierarchy]:
    """Read patient outcomes from CSV with columns arm, x_e1..x_eK, x_t."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: missing CSV header")
        cols = [c.strip() for c in reader.fieldnames]
        e_cols = sorted((c for c in cols if c.startswith("x_e")), key=lambda c: int(c[3:]))
        if "arm" not in cols or not e_cols:
            raise ValueError(f"{path}: need columns arm, x_e1..x_eK, x_t")
        patients = []
        for row in reader:
            x_e = tuple(int(row[c]) for c in e_cols)
            x_t = int(row.get("x_t", 0) or 0)
            patients.append(PatientOutcome(int(row["arm"]), x_e, x_t))
    return patients, EndpointHierarchy(tuple(e_cols))
