"""Improvement-probability model driven by mating-type counts.

Three mating types are tracked: both parents copies of the current best
(``11``), exactly one (``01``) and neither (``00``).  Each type succeeds,
i.e. yields a strictly better solution than the current best, with its own
probability.  All products of survival terms are carried as sums of
``log1p(-p) * count`` so large counts never underflow.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .batch import map_ordered
from .equilibrium import sigma_from_counts, takeover_stats
from .grid import MATING_LABELS, GridConfig, Problem, run

DEFAULT_BETAS = tuple(np.round(np.linspace(0.0, 1.0, 21), 10))
DEFAULT_HORIZON = 100
DEFAULT_WINDOW = 50


@dataclass(frozen=True)
class PemProbabilities:
    p00: float
    p01: float
    p11: float

    def __post_init__(self):
        for name, v in zip(("p00", "p01", "p11"), self.as_array()):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    def as_array(self) -> np.ndarray:
        return np.array([self.p00, self.p01, self.p11], dtype=float)

    @classmethod
    def from_array(cls, values) -> "PemProbabilities":
        a, b, c = (float(v) for v in values)
        return cls(a, b, c)


def _log_survival_terms(counts, probs: PemProbabilities) -> np.ndarray:
    counts = np.asarray(counts, dtype=float)
    if (counts < 0).any():
        raise ValueError("counts must be non-negative")
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = counts * np.log1p(-probs.as_array())
    return np.where(counts == 0, 0.0, terms)


def log_survival(counts, probs: PemProbabilities) -> np.ndarray:
    """log of the probability that none of the counted matings succeeds.

    ``counts`` has shape ``(..., 3)``.
    """
    return _log_survival_terms(counts, probs).sum(axis=-1)


def p_improve(n00, n01, n11, probs: PemProbabilities) -> float:
    """Probability that a generation with these mating counts finds a new best."""
    return float(-np.expm1(log_survival([n00, n01, n11], probs)))


def prob_horizon(sigma, probs: PemProbabilities) -> float:
    """Probability of at least one improvement given cumulative counts (S00, S01, S11)."""
    return float(-np.expm1(log_survival(sigma, probs)))


class ExpectedTime(NamedTuple):
    value: float
    tail: float


def expected_time(p_series: Sequence[float], interpretation: str = "first-success") -> ExpectedTime:
    """Mean improvement time from a per-generation probability series.

    ``literal`` returns ``sum_t t * p(t)`` over the series as written, with
    ``tail = 0``.  ``first-success`` treats ``p(t)`` as the conditional
    success chance at ``t`` and returns ``sum_t t * p(t) * prod_{s<t} (1 - p(s))``;
    ``tail`` is the missing contribution if the last probability persisted
    past the horizon (``inf`` when that probability is 0 and mass remains).
    """
    p = np.asarray(p_series, dtype=float)
    if ((p < 0) | (p > 1)).any():
        raise ValueError("probabilities must lie in [0, 1]")
    t = np.arange(1, len(p) + 1, dtype=float)
    if interpretation == "literal":
        return ExpectedTime(float((t * p).sum()), 0.0)
    if interpretation != "first-success":
        raise ValueError(f"unknown interpretation {interpretation!r}")
    survive_before = np.concatenate([[1.0], np.cumprod(1.0 - p)[:-1]]) if len(p) else np.array([])
    value = float((t * p * survive_before).sum())
    remaining = float(np.prod(1.0 - p)) if len(p) else 1.0
    if remaining == 0.0:
        return ExpectedTime(value, 0.0)
    last = p[-1] if len(p) else 0.0
    if last == 0.0:
        return ExpectedTime(value, float("inf"))
    horizon = len(p)
    return ExpectedTime(value, remaining * (horizon + 1.0 / last))


def _mating_index(mating_type) -> int:
    if isinstance(mating_type, str):
        return MATING_LABELS.index(mating_type)
    if mating_type not in (0, 1, 2):
        raise ValueError(f"unknown mating type {mating_type!r}")
    return int(mating_type)


@dataclass(frozen=True)
class BetaPosterior:
    """Success/trial tallies per mating type under a uniform Beta(1, 1) prior."""

    successes: tuple = (0, 0, 0)
    trials: tuple = (0, 0, 0)

    def __post_init__(self):
        if any(s < 0 or s > m for s, m in zip(self.successes, self.trials)):
            raise ValueError("need 0 <= successes <= trials for every mating type")


def posterior_update(state: BetaPosterior, mating_type, success: bool) -> BetaPosterior:
    k = _mating_index(mating_type)
    s, m = list(state.successes), list(state.trials)
    m[k] += 1
    s[k] += int(bool(success))
    return BetaPosterior(tuple(s), tuple(m))


def beta_mean(successes, trials) -> np.ndarray:
    return (np.asarray(successes, dtype=float) + 1.0) / (np.asarray(trials, dtype=float) + 2.0)


def beta_sd(successes, trials) -> np.ndarray:
    a = np.asarray(successes, dtype=float) + 1.0
    b = np.asarray(trials, dtype=float) - np.asarray(successes, dtype=float) + 1.0
    return np.sqrt(a * b / ((a + b) ** 2 * (a + b + 1.0)))


def posterior_mean(state: BetaPosterior) -> PemProbabilities:
    return PemProbabilities.from_array(beta_mean(state.successes, state.trials))


@dataclass
class PijEstimate:
    window: int
    window_starts: np.ndarray
    successes: np.ndarray
    trials: np.ndarray

    @property
    def means(self) -> np.ndarray:
        return beta_mean(self.successes, self.trials)

    @property
    def sds(self) -> np.ndarray:
        return beta_sd(self.successes, self.trials)

    @property
    def low_confidence(self) -> np.ndarray:
        return self.trials == 0

    def probabilities(self, w: int) -> PemProbabilities:
        return PemProbabilities.from_array(self.means[w])

    def __len__(self) -> int:
        return len(self.window_starts)


def pool_windows(successes: np.ndarray, trials: np.ndarray, window: int) -> PijEstimate:
    """Bin per-generation (G, 3) tallies into consecutive windows; the last may be short.

    Window starts are 1-based generation numbers.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    generations = len(trials)
    starts = np.arange(0, generations, window)
    s = np.add.reduceat(successes, starts, axis=0) if generations else np.zeros((0, 3), np.int64)
    m = np.add.reduceat(trials, starts, axis=0) if generations else np.zeros((0, 3), np.int64)
    return PijEstimate(window, starts + 1, s.astype(np.int64), m.astype(np.int64))


def _run_tallies(problem, config, generations, seed):
    log = run(problem, config, generations, seed)
    return log.successes, log.mating_counts


def estimate_pij(
    problem: Problem,
    config: GridConfig,
    runs: int,
    generations: int,
    window: int = DEFAULT_WINDOW,
    base_seed: int = 0,
    jobs: int = 1,
) -> PijEstimate:
    """Pool mating outcomes of ``runs`` seeded optimization runs per (type, window)."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if window < 1:
        raise ValueError("window must be >= 1")
    args = [(problem, config, generations, base_seed + r) for r in range(runs)]
    tallies = map_ordered(_run_tallies, args, jobs)
    successes = sum(s for s, _ in tallies)
    trials = sum(m for _, m in tallies)
    return pool_windows(successes, trials, window)


@dataclass
class SigmaProfile:
    """Averaged selection-only mating counts for a grid of beta values.

    ``counts[b]`` is the ``(G_b, 3)`` per-generation mean profile for
    ``betas[b]``; ``saturated[b]`` says whether every replicate had taken over
    by the end of it.
    """

    betas: np.ndarray
    size: int
    counts: list
    saturated: list

    def at(self, horizon: int) -> np.ndarray:
        """``(len(betas), 3)`` cumulative counts over generations 1..horizon."""
        return np.array(
            [sigma_from_counts(c, horizon, self.size, s) for c, s in zip(self.counts, self.saturated)]
        )


def sigma_profile(
    side: int,
    betas=DEFAULT_BETAS,
    replicates: int = 1000,
    horizon: int = DEFAULT_HORIZON,
    base_seed: int = 0,
    jobs: int = 1,
) -> SigmaProfile:
    """Selection-only profiles, each run capped at ``horizon`` generations."""
    betas = np.asarray(betas, dtype=float)
    counts, saturated = [], []
    for beta in betas:
        stats = takeover_stats(side, float(beta), replicates, base_seed, horizon, jobs=jobs)
        counts.append(stats.mean_counts)
        saturated.append(stats.saturated)
    return SigmaProfile(betas, side * side, counts, saturated)


class OptimalBeta(NamedTuple):
    beta_star: float
    p_star: float
    index: int
    p_curve: np.ndarray
    log_survival: np.ndarray


def _argmin_first(values: np.ndarray, rtol: float = 1e-12) -> int:
    best = values.min()
    close = values <= best + rtol * abs(best)
    return int(np.flatnonzero(close)[0])


def optimal_beta(betas, sigma: np.ndarray, probs: PemProbabilities) -> OptimalBeta:
    """Beta on the grid maximizing the horizon probability.

    The comparison runs on the log-survival so that probabilities rounding
    to 1.0 still rank correctly; near-exact ties go to the smallest beta.
    """
    betas = np.asarray(betas, dtype=float)
    if betas.size == 0:
        raise ValueError("empty beta grid")
    logs = log_survival(np.asarray(sigma, dtype=float), probs)
    k = _argmin_first(logs)
    curve = -np.expm1(logs)
    return OptimalBeta(float(betas[k]), float(curve[k]), k, curve, logs)


@dataclass
class BetaTrajectory:
    window_starts: np.ndarray
    beta_star: np.ndarray
    p_star: np.ndarray
    last: OptimalBeta


def beta_trajectory(
    profile: SigmaProfile,
    estimate: PijEstimate,
    horizon: int = DEFAULT_HORIZON,
    per_window: bool = False,
) -> BetaTrajectory:
    """Optimal beta for every estimation window.

    By default the same ``Sigma(horizon)`` is reused for all windows; with
    ``per_window`` the horizon is the window length instead.
    """
    sigma = profile.at(estimate.window if per_window else horizon)
    stars, p_stars, last = [], [], None
    for w in range(len(estimate)):
        last = optimal_beta(profile.betas, sigma, estimate.probabilities(w))
        stars.append(last.beta_star)
        p_stars.append(last.p_star)
    return BetaTrajectory(estimate.window_starts, np.array(stars), np.array(p_stars), last)


class Residual(NamedTuple):
    value: float
    one_sided: bool


def stationarity_residual(betas, sigma: np.ndarray, probs: PemProbabilities, beta: float) -> Residual:
    """``sum_ij log(1 - P_ij) * dS_ij/dbeta`` at a grid beta.

    Derivatives are central differences on the grid, one-sided at its ends.
    """
    betas = np.asarray(betas, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    hits = np.flatnonzero(np.isclose(betas, beta, rtol=0, atol=1e-9))
    if len(hits) == 0:
        raise ValueError(f"beta={beta} is not on the profile grid")
    if len(betas) < 2:
        raise ValueError("need at least two grid points")
    k = int(hits[0])
    lo, hi = max(k - 1, 0), min(k + 1, len(betas) - 1)
    slope = (sigma[hi] - sigma[lo]) / (betas[hi] - betas[lo])
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = slope * np.log1p(-probs.as_array())
    terms = np.where(slope == 0, 0.0, terms)
    return Residual(float(terms.sum()), hi - lo < 2)


def residual_sign_change(betas, sigma, probs: PemProbabilities, index: int) -> Optional[bool]:
    """Whether the residual changes sign across grid cell ``index``.

    ``None`` when ``index`` sits on the grid boundary (no interior maximum).
    """
    betas = np.asarray(betas, dtype=float)
    if index <= 0 or index >= len(betas) - 1:
        return None
    left = stationarity_residual(betas, sigma, probs, betas[index - 1]).value
    right = stationarity_residual(betas, sigma, probs, betas[index + 1]).value
    return bool(left < 0.0 <= right)
