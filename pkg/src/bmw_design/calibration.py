"""Design-parameter calibration by grid search.

Efficacy boundaries are tuned on statistic paths sampled from the joint
asymptotic model, toxicity boundaries on simulated binomial count paths.
One null and one alternative path set are drawn per calibration and reused
across every grid point (common random numbers), so the type I error and
power surfaces are smooth and grid points are compared path-wise.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .inference import (
    AnalysisSchedule,
    NormalPrior,
    information_vector,
    mvn_model,
    posterior_weights,
    pp_toxicity_table,
)
from .statkernel import Rng, normal_cdf_vec, spd_factor_and_logdet
from .winratio import arm_sizes

__all__ = [
    "GridSpec",
    "ToxSpec",
    "DesignSpec",
    "PathMatrix",
    "CalibrationResult",
    "CalibrationError",
    "sample_z_paths",
    "pp_matrix",
    "poe",
    "decide_paths",
    "calibrate_efficacy",
    "calibrate_toxicity",
    "grid_search",
    "write_surface_csv",
]

NULL = "null"
ALTERNATIVE = "alternative"


class CalibrationError(RuntimeError):
    pass


def _default_lambdas() -> tuple[float, ...]:
    return tuple(np.round(np.arange(0.50, 0.9951, 0.01), 10))


def _default_gammas() -> tuple[float, ...]:
    return tuple(np.round(np.arange(0.0, 1.0001, 0.05), 10))


@dataclass(frozen=True)
class GridSpec:
    lambdas: tuple[float, ...] = field(default_factory=_default_lambdas)
    gammas: tuple[float, ...] = field(default_factory=_default_gammas)

    def __post_init__(self):
        if len(self.lambdas) == 0 or len(self.gammas) == 0:
            raise ValueError("grid must contain at least one lambda and one gamma")
        vals = (*self.lambdas, *self.gammas)
        if any(not 0.0 <= v <= 1.0 for v in vals):
            raise ValueError("grid values must lie in [0,1]")


@dataclass(frozen=True)
class ToxSpec:
    delta: float
    q_t0_null: float
    q_t1_alt: float
    prior_a: float = 1.0
    prior_b: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must be in (0,1), got {self.delta!r}")
        if not (0.0 < self.q_t0_null < 1.0 and 0.0 < self.q_t1_alt < 1.0):
            raise ValueError("toxicity rates must be in (0,1)")
        if self.q_t0_null + self.delta >= 1.0:
            raise ValueError("null operating point q_t0 + delta must stay below 1")


@dataclass(frozen=True)
class DesignSpec:
    alpha: float
    schedule: AnalysisSchedule
    theta_alt: float
    p_t_null: float
    p_t_alt: float
    prior: NormalPrior = NormalPrior()
    n_paths: int = 5000
    tox: ToxSpec | None = None
    grid: GridSpec = field(default_factory=GridSpec)
    seed: int = 0
    futility_only: bool = False

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0,1], got {self.alpha!r}")
        if self.theta_alt <= 0.0:
            raise ValueError(f"theta_alt must be positive, got {self.theta_alt!r}")
        for p in (self.p_t_null, self.p_t_alt):
            if not 0.0 <= p < 1.0:
                raise ValueError(f"tie probabilities must lie in [0,1), got {p!r}")
        if self.n_paths < 1000:
            raise ValueError(f"n_paths must be at least 1000, got {self.n_paths!r}")


@dataclass
class PathMatrix:
    """L x R matrix of statistic paths plus the tie probability used for
    posterior evaluation; the posterior-probability matrix is cached."""

    z: np.ndarray
    tag: str
    p_t: float
    _pp: np.ndarray | None = None

    def __post_init__(self):
        if self.z.ndim != 2:
            raise ValueError("paths must form an L x R matrix")
        if not np.all(np.isfinite(self.z)):
            raise ValueError("paths contain non-finite entries")

    @property
    def n_paths(self) -> int:
        return self.z.shape[0]

    @property
    def n_analyses(self) -> int:
        return self.z.shape[1]


@dataclass(frozen=True)
class CalibrationResult:
    lambda_opt: float
    gamma_opt: float
    poe_null: float
    poe_alt: float
    expected_n_null: float
    expected_n_alt: float
    feasible_count: int
    surface: tuple[tuple[float, float, float, float], ...]  # (lambda, gamma, poe_null, poe_alt)

    def to_dict(self) -> dict:
        return {
            "lambda_opt": self.lambda_opt,
            "gamma_opt": self.gamma_opt,
            "poe_null": self.poe_null,
            "poe_alt": self.poe_alt,
            "expected_n_null": self.expected_n_null,
            "expected_n_alt": self.expected_n_alt,
            "feasible_count": self.feasible_count,
            "surface": [list(row) for row in self.surface],
        }


def sample_z_paths(theta: float, p_t: float, spec: DesignSpec, tag: str, rng: Rng) -> PathMatrix:
    """Draw n_paths i.i.d. statistic paths from the joint asymptotic model by
    coloring i.i.d. standard normals with the correlation factor."""
    info = information_vector(spec.schedule, p_t)
    mean, corr = mvn_model(theta, info)
    factor, _ = spd_factor_and_logdet(corr)
    eps = rng.generator().standard_normal((spec.n_paths, spec.schedule.n_analyses))
    return PathMatrix(mean + factor.color(eps), tag, p_t)


def pp_matrix(paths: PathMatrix, spec: DesignSpec) -> np.ndarray:
    """Posterior probability of a positive log win ratio for every path at
    every analysis prefix. Cached on the PathMatrix."""
    if paths._pp is not None:
        return paths._pp
    info = information_vector(spec.schedule, paths.p_t)
    pp = np.empty_like(paths.z)
    for r in range(spec.schedule.n_analyses):
        weights, offset, variance = posterior_weights(info[: r + 1], spec.prior)
        mean = paths.z[:, : r + 1] @ weights + offset
        pp[:, r] = normal_cdf_vec(mean / math.sqrt(variance))
    paths._pp = pp
    return pp


def decide_paths(pp: np.ndarray, schedule: AnalysisSchedule, lam: float, gamma: float,
                 futility_only: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Apply the interim/final decision sequence to a posterior-probability
    matrix. Returns (declared_effective, n_at_stop) per path."""
    n_paths, n_analyses = pp.shape
    frac = schedule.fractions() ** gamma
    futility = lam * frac
    superiority = 1.0 - (1.0 - lam) * frac
    alive = np.ones(n_paths, dtype=bool)
    effective = np.zeros(n_paths, dtype=bool)
    n_at_stop = np.full(n_paths, float(schedule.n_max))
    for r in range(n_analyses - 1):
        col = pp[:, r]
        stop_fut = alive & (col < futility[r])
        if futility_only:
            stop_sup = np.zeros_like(stop_fut)
        else:
            stop_sup = alive & (col > superiority[r])
        stopped = stop_fut | stop_sup
        n_at_stop[stopped] = schedule.n_cum[r]
        effective[stop_sup] = True
        alive &= ~stopped
    effective[alive & (pp[:, -1] > lam)] = True
    return effective, n_at_stop


def poe(paths: PathMatrix, lam: float, gamma: float, spec: DesignSpec) -> tuple[float, float]:
    """Probability of declaring the treatment effective and the expected
    enrollment at stopping, for one boundary parameter pair."""
    if paths.n_analyses != spec.schedule.n_analyses:
        raise ValueError("paths do not match the analysis schedule")
    pp = pp_matrix(paths, spec)
    effective, n_at_stop = decide_paths(pp, spec.schedule, lam, gamma, spec.futility_only)
    return float(effective.mean()), float(n_at_stop.mean())


def grid_search(spec: DesignSpec, poe_null_fn, poe_alt_fn) -> CalibrationResult:
    """Feasible set is poe_null <= alpha; among it maximize poe_alt, breaking
    ties by smaller null expected enrollment, then smaller lambda and gamma."""
    surface = []
    best_key = None
    best = None
    feasible = 0
    for lam in spec.grid.lambdas:
        for gamma in spec.grid.gammas:
            p_null, en_null = poe_null_fn(lam, gamma)
            p_alt, en_alt = poe_alt_fn(lam, gamma)
            surface.append((lam, gamma, p_null, p_alt))
            if p_null <= spec.alpha:
                feasible += 1
                key = (p_alt, -en_null, -lam, -gamma)
                if best_key is None or key > best_key:
                    best_key = key
                    best = (lam, gamma, p_null, p_alt, en_null, en_alt)
    if best is None:
        raise CalibrationError(
            f"no grid point satisfies POE(null) <= {spec.alpha}; "
            "widen or refine the (lambda, gamma) grid"
        )
    lam, gamma, p_null, p_alt, en_null, en_alt = best
    return CalibrationResult(lam, gamma, p_null, p_alt, en_null, en_alt,
                             feasible, tuple(surface))


def calibrate_efficacy(spec: DesignSpec, rng: Rng) -> CalibrationResult:
    """Tune the efficacy boundary parameters: sample one null and one
    alternative path set, then grid-search with common random numbers."""
    null_paths = sample_z_paths(0.0, spec.p_t_null, spec, NULL, rng.stream(0))
    alt_paths = sample_z_paths(spec.theta_alt, spec.p_t_alt, spec, ALTERNATIVE, rng.stream(1))
    return grid_search(
        spec,
        lambda lam, gamma: poe(null_paths, lam, gamma, spec),
        lambda lam, gamma: poe(alt_paths, lam, gamma, spec),
    )


def _tox_pp_paths(spec: DesignSpec, q_t1: float, q_t0: float, rng: Rng) -> np.ndarray:
    """Simulate cumulative toxicity counts for both arms and convert them to
    posterior probabilities via per-analysis lookup tables."""
    tox = spec.tox
    schedule = spec.schedule
    sizes = [arm_sizes(n, schedule.phi) for n in schedule.n_cum]
    gen = rng.generator()
    L = spec.n_paths
    pp = np.empty((L, schedule.n_analyses))
    y1 = np.zeros(L, dtype=np.int64)
    y0 = np.zeros(L, dtype=np.int64)
    prev1 = prev0 = 0
    for r, (n1, n0) in enumerate(sizes):
        y1 = y1 + gen.binomial(n1 - prev1, q_t1, size=L)
        y0 = y0 + gen.binomial(n0 - prev0, q_t0, size=L)
        prev1, prev0 = n1, n0
        table = pp_toxicity_table(n1, n0, tox.delta, tox.prior_a, tox.prior_b)
        pp[:, r] = table[y1, y0]
    return pp


def calibrate_toxicity(spec: DesignSpec, rng: Rng) -> CalibrationResult:
    """Tune the toxicity boundary parameters on raw simulated count paths.

    The null operating point sets the treatment rate at the control rate
    plus the margin; the alternative uses the targeted acceptable rate.
    """
    if spec.tox is None:
        raise ValueError("spec.tox is required for toxicity calibration")
    tox = spec.tox
    pp_null = _tox_pp_paths(spec, tox.q_t0_null + tox.delta, tox.q_t0_null, rng.stream(0))
    pp_alt = _tox_pp_paths(spec, tox.q_t1_alt, tox.q_t0_null, rng.stream(1))

    def eval_on(pp):
        def fn(lam, gamma):
            effective, n_at_stop = decide_paths(pp, spec.schedule, lam, gamma,
                                                spec.futility_only)
            return float(effective.mean()), float(n_at_stop.mean())
        return fn

    return grid_search(spec, eval_on(pp_null), eval_on(pp_alt))


def write_surface_csv(path, result: CalibrationResult) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda", "gamma", "poe_null", "poe_alt"])
        for lam, gamma, p_null, p_alt in result.surface:
            writer.writerow([f"{lam:.4f}", f"{gamma:.4f}", f"{p_null:.6f}", f"{p_alt:.6f}"])


def write_report_json(path, result: CalibrationResult, extra: dict | None = None) -> None:
    payload = result.to_dict()
    if extra:
        payload.update(extra)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
