"""Posterior model for the sequential win-ratio statistic.

The accumulated Wald statistics are jointly normal with means theta*sqrt(I_r)
and correlations sqrt(I_r1 / I_r2); a normal prior on the log win ratio then
has an analytic normal posterior. The module also provides the Beta-Binomial
posterior probability for toxicity non-inferiority and the power-family
futility/superiority boundaries with their decision rule.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .statkernel import (
    beta_cdf_vec,
    gauss_legendre_panels,
    log_beta_pdf,
    normal_cdf,
    spd_factor_and_logdet,
)

__all__ = [
    "AnalysisSchedule",
    "ZPath",
    "NormalPrior",
    "PosteriorTheta",
    "BoundarySet",
    "ToxCounts",
    "InterimDecision",
    "FinalDecision",
    "information_vector",
    "mvn_model",
    "posterior_theta",
    "posterior_weights",
    "pp_toxicity",
    "pp_toxicity_table",
    "boundary_set",
    "evaluate_interim",
    "write_boundary_csv",
]


@dataclass(frozen=True)
class AnalysisSchedule:
    n_cum: tuple[int, ...]
    phi: float = 0.5

    def __post_init__(self):
        if len(self.n_cum) == 0:
            raise ValueError("schedule needs at least one analysis")
        if any(b <= a for a, b in zip(self.n_cum, self.n_cum[1:])) or self.n_cum[0] <= 0:
            raise ValueError(f"enrollment schedule must be strictly increasing, got {self.n_cum}")
        if not 0.0 < self.phi < 1.0:
            raise ValueError(f"phi must be in (0,1), got {self.phi!r}")

    @property
    def n_analyses(self) -> int:
        return len(self.n_cum)

    @property
    def n_max(self) -> int:
        return self.n_cum[-1]

    def fractions(self) -> np.ndarray:
        return np.asarray(self.n_cum, dtype=float) / self.n_max


@dataclass(frozen=True)
class ZPath:
    z: tuple[float, ...]
    info: tuple[float, ...]

    def __post_init__(self):
        if len(self.z) != len(self.info) or len(self.z) == 0:
            raise ValueError("z and info must be equal-length and nonempty")
        if any(v <= 0 for v in self.info):
            raise ValueError("information values must be positive")

    @property
    def r_current(self) -> int:
        return len(self.z)


@dataclass(frozen=True)
class NormalPrior:
    mean: float = 0.0
    variance: float = 100.0

    def __post_init__(self):
        if self.variance <= 0:
            raise ValueError(f"prior variance must be positive, got {self.variance!r}")


@dataclass(frozen=True)
class PosteriorTheta:
    mean: float
    variance: float
    pp_e: float


@dataclass(frozen=True)
class ToxCounts:
    y1: int
    n1: int
    y0: int
    n0: int

    def __post_init__(self):
        if not (0 <= self.y1 <= self.n1 and 0 <= self.y0 <= self.n0):
            raise ValueError(f"toxicity counts out of range: {self}")


class InterimDecision(Enum):
    STOP_FUTILITY = "stop_futility"
    STOP_SUPERIORITY = "stop_superiority"
    CONTINUE = "continue"


class FinalDecision(Enum):
    EFFECTIVE = "effective"
    INEFFECTIVE = "ineffective"


def information_vector(schedule: AnalysisSchedule, p_t) -> np.ndarray:
    """I_r = 3 phi (1-phi) (1 - p_T) N_r / (4 (1 + p_T)); p_t may be a scalar
    or one value per analysis."""
    p = np.broadcast_to(np.asarray(p_t, dtype=float), (schedule.n_analyses,))
    if np.any((p < 0.0) | (p >= 1.0)):
        raise ValueError(f"tie probabilities must lie in [0,1), got {p}")
    n = np.asarray(schedule.n_cum, dtype=float)
    phi = schedule.phi
    return 3.0 * phi * (1.0 - phi) * (1.0 - p) * n / (4.0 * (1.0 + p))


def mvn_model(theta: float, info) -> tuple[np.ndarray, np.ndarray]:
    """Mean vector and correlation matrix of the accumulated statistics."""
    info = np.asarray(info, dtype=float)
    if np.any(info <= 0):
        raise ValueError("information values must be positive")
    b = np.sqrt(info)
    mean = theta * b
    corr = np.minimum.outer(b, b) / np.maximum.outer(b, b)
    return mean, corr


def posterior_weights(info, prior: NormalPrior) -> tuple[np.ndarray, float, float]:
    """Affine representation of the posterior: mean = offset + weights . z,
    for fixed information values. Returns (weights, offset, variance)."""
    info = np.asarray(info, dtype=float)
    _, corr = mvn_model(0.0, info)
    b = np.sqrt(info)
    factor, _ = spd_factor_and_logdet(corr)
    x = factor.solve(b)  # Sigma^{-1} B
    variance = 1.0 / (1.0 / prior.variance + float(b @ x))
    weights = variance * x
    offset = variance * prior.mean / prior.variance
    return weights, offset, variance


def posterior_theta(path: ZPath, prior: NormalPrior = NormalPrior()) -> PosteriorTheta:
    """Analytic normal posterior of the log win ratio given the statistic path,
    and the posterior probability that it is positive."""
    weights, offset, variance = posterior_weights(path.info, prior)
    mean = offset + float(weights @ np.asarray(path.z, dtype=float))
    pp_e = 1.0 - normal_cdf((0.0 - mean) / math.sqrt(variance))
    return PosteriorTheta(mean, variance, pp_e)


_TOX_NODES: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _tox_quadrature(total_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    if total_nodes not in _TOX_NODES:
        _TOX_NODES[total_nodes] = gauss_legendre_panels(8, total_nodes // 8)
    return _TOX_NODES[total_nodes]


def _pp_tox_at(nodes, weights, c: ToxCounts, delta: float, a: float, b: float) -> float:
    a1, b1 = a + c.y1, b + c.n1 - c.y1
    a0, b0 = a + c.y0, b + c.n0 - c.y0
    pdf1 = np.exp(log_beta_pdf(nodes, a1, b1))
    x = np.clip(nodes - delta, 0.0, 1.0)
    tail0 = 1.0 - beta_cdf_vec(x, a0, b0)
    return float(np.dot(weights, pdf1 * tail0))


def pp_toxicity(c: ToxCounts, delta: float, prior_a: float = 1.0, prior_b: float = 1.0) -> float:
    """Pr(q_T1 - q_T0 < delta | counts) under independent Beta priors.

    Composite Gauss-Legendre quadrature, 512 nodes; refined to 2048 nodes
    when the two coarser refinements disagree by more than 1e-7.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0,1), got {delta!r}")
    if prior_a <= 0 or prior_b <= 0:
        raise ValueError("Beta prior parameters must be positive")
    coarse = _pp_tox_at(*_tox_quadrature(256), c, delta, prior_a, prior_b)
    fine = _pp_tox_at(*_tox_quadrature(512), c, delta, prior_a, prior_b)
    if abs(fine - coarse) > 1e-7:
        fine = _pp_tox_at(*_tox_quadrature(2048), c, delta, prior_a, prior_b)
    return min(1.0, max(0.0, fine))


def pp_toxicity_table(n1: int, n0: int, delta: float,
                      prior_a: float = 1.0, prior_b: float = 1.0) -> np.ndarray:
    """PP for every count pair: table[y1, y0] with shapes (n1+1, n0+1).

    The integrand factors into a treatment-only density and a control-only
    tail, so the whole table is two small matrices and one product. Tables
    are cached per (n1, n0, delta, priors); treat the result as read-only.
    """
    table = _pp_toxicity_table_cached(n1, n0, delta, prior_a, prior_b)
    return table


@lru_cache(maxsize=256)
def _pp_toxicity_table_cached(n1: int, n0: int, delta: float,
                              prior_a: float, prior_b: float) -> np.ndarray:
    nodes, weights = _tox_quadrature(512)
    y1 = np.arange(n1 + 1)
    y0 = np.arange(n0 + 1)
    # log Beta(a1,b1) pdf at each node, per y1 column
    a1 = prior_a + y1
    b1 = prior_b + n1 - y1
    ln_norm = np.array([math.lgamma(av + bv) - math.lgamma(av) - math.lgamma(bv)
                        for av, bv in zip(a1, b1)])
    pdf1 = np.exp(ln_norm[None, :]
                  + np.outer(np.log(nodes), a1 - 1.0)
                  + np.outer(np.log1p(-nodes), b1 - 1.0))
    x = np.clip(nodes - delta, 0.0, 1.0)
    tail0 = np.empty((len(nodes), n0 + 1))
    for j, v in enumerate(y0):
        tail0[:, j] = 1.0 - beta_cdf_vec(x, prior_a + v, prior_b + n0 - v)
    table = (pdf1 * weights[:, None]).T @ tail0
    return np.clip(table, 0.0, 1.0)


@dataclass(frozen=True)
class BoundarySet:
    lam: float
    gamma: float
    futility: tuple[float, ...]
    superiority: tuple[float, ...]

    @property
    def final_threshold(self) -> float:
        return self.lam


def boundary_set(lam: float, gamma: float, schedule: AnalysisSchedule) -> BoundarySet:
    """Futility thresholds lam * (N_r/N_R)^gamma and superiority thresholds
    1 - (1-lam) * (N_r/N_R)^gamma; at the final analysis only PP > lam applies."""
    if not (0.0 <= lam <= 1.0 and 0.0 <= gamma <= 1.0):
        raise ValueError(f"lambda and gamma must lie in [0,1], got {lam!r}, {gamma!r}")
    frac = schedule.fractions() ** gamma
    futility = tuple(lam * frac)
    superiority = tuple(1.0 - (1.0 - lam) * frac)
    return BoundarySet(lam, gamma, futility, superiority)


def evaluate_interim(pp: float, r: int, b: BoundarySet,
                     n_analyses: int) -> InterimDecision | FinalDecision:
    """Strict-inequality decision rule: at interims stop when PP crosses a
    boundary, at the final analysis declare effective when PP > lambda."""
    if not 0 <= r < n_analyses:
        raise ValueError(f"analysis index {r} outside schedule of {n_analyses}")
    if r == n_analyses - 1:
        return FinalDecision.EFFECTIVE if pp > b.final_threshold else FinalDecision.INEFFECTIVE
    if pp < b.futility[r]:
        return InterimDecision.STOP_FUTILITY
    if pp > b.superiority[r]:
        return InterimDecision.STOP_SUPERIORITY
    return InterimDecision.CONTINUE


def write_boundary_csv(path, schedule: AnalysisSchedule, b: BoundarySet) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["analysis_index", "n_cum", "futility_pp", "superiority_pp"])
        for r, n in enumerate(schedule.n_cum):
            writer.writerow([r + 1, n, f"{b.futility[r]:.10f}", f"{b.superiority[r]:.10f}"])
