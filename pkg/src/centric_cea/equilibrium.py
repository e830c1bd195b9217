"""Selection-only dynamics: takeover times, growth curves and mating profiles.

The grid holds two fitness levels.  A cell adopts the good level when either
tournament winner carries it, which is the cEA generation with identity
crossover and mutation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .batch import map_ordered
from .grid import GridConfig, draw_slots, neighborhood_table


@dataclass
class TakeoverRecord:
    beta: float
    side: int
    seed: int
    n_series: np.ndarray
    mating_counts: np.ndarray
    takeover_time: Optional[int]
    boundary_hit: Optional[int] = None
    snapshots: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.side * self.side


def default_max_generations(side: int) -> int:
    return 100 * side


def init_takeover_grid(side: int, rng: np.random.Generator, seed_cell: str = "random") -> np.ndarray:
    """Boolean grid with exactly one good cell."""
    if side < 1:
        raise ValueError(f"side must be >= 1, got {side}")
    state = np.zeros(side * side, dtype=bool)
    if seed_cell == "random":
        state[rng.integers(side * side)] = True
    elif seed_cell == "center":
        state[(side // 2) * side + side // 2] = True
    else:
        raise ValueError(f"seed_cell must be 'random' or 'center', got {seed_cell!r}")
    return state


def _spans_side(grid: np.ndarray) -> bool:
    return bool(grid.any(axis=0).all() or grid.any(axis=1).all())


def takeover_run(
    side: int,
    beta: float,
    max_generations: Optional[int] = None,
    seed: int = 0,
    seed_cell: str = "random",
    snapshot_at=(),
) -> TakeoverRecord:
    """Spread a single good cell until it fills the grid or the budget runs out.

    ``boundary_hit`` is the first generation at which the colony occupies every
    row or every column, i.e. its extent has reached the grid side.
    """
    if max_generations is None:
        max_generations = default_max_generations(side)
    if max_generations < 1:
        raise ValueError("max_generations must be >= 1")
    config = GridConfig.square(side, beta)
    size = config.size
    rng = np.random.default_rng(seed)
    state = init_takeover_grid(side, rng, seed_cell)
    table = neighborhood_table(config)
    snapshot_at = set(snapshot_at)
    snapshots = {0: state.reshape(side, side).copy()} if 0 in snapshot_at else {}

    n_series = [1]
    counts = []
    boundary_hit = 0 if _spans_side(state.reshape(side, side)) else None
    takeover = 0 if size == 1 else None
    t = 0
    while takeover is None and t < max_generations:
        t += 1
        if beta == 1.0:
            # every draw is the center: nothing can move
            good = int(state.sum())
            counts.append((size - good, 0, good))
            n_series.append(good)
            continue
        slots = draw_slots(beta, (size, 4), rng)
        hits = state[np.take_along_axis(table, slots, axis=1)]
        first = hits[:, 0] | hits[:, 1]
        second = hits[:, 2] | hits[:, 3]
        n11 = int(np.count_nonzero(first & second))
        n01 = int(np.count_nonzero(first ^ second))
        counts.append((size - n11 - n01, n01, n11))
        state = state | first | second
        good = int(state.sum())
        n_series.append(good)
        if boundary_hit is None and _spans_side(state.reshape(side, side)):
            boundary_hit = t
        if t in snapshot_at:
            snapshots[t] = state.reshape(side, side).copy()
        if good == size:
            takeover = t
    return TakeoverRecord(
        beta=beta,
        side=side,
        seed=seed,
        n_series=np.asarray(n_series, dtype=np.int64),
        mating_counts=np.asarray(counts, dtype=np.int64).reshape(-1, 3),
        takeover_time=takeover,
        boundary_hit=boundary_hit,
        snapshots=snapshots,
    )


@dataclass
class TakeoverStats:
    beta: float
    side: int
    records: list
    mean_n: np.ndarray
    mean_counts: np.ndarray

    @property
    def size(self) -> int:
        return self.side * self.side

    @property
    def takeover_times(self) -> list:
        return [r.takeover_time for r in self.records]

    @property
    def defined_times(self) -> np.ndarray:
        return np.array([t for t in self.takeover_times if t is not None], dtype=float)

    @property
    def mean_takeover(self) -> Optional[float]:
        times = self.defined_times
        return float(times.mean()) if len(times) else None

    @property
    def std_takeover(self) -> Optional[float]:
        times = self.defined_times
        return float(times.std()) if len(times) else None

    @property
    def mean_boundary_hit(self) -> Optional[float]:
        hits = [r.boundary_hit for r in self.records if r.boundary_hit is not None]
        return float(np.mean(hits)) if hits else None

    @property
    def mean_dn(self) -> np.ndarray:
        return growth_rate(self.mean_n)

    def sigma(self, horizon: int) -> np.ndarray:
        """Cumulative (S00, S01, S11) over generations 1..horizon."""
        return sigma_from_counts(self.mean_counts, horizon, self.size, self.saturated)

    @property
    def saturated(self) -> bool:
        return all(t is not None for t in self.takeover_times)


def sigma_from_counts(mean_counts: np.ndarray, horizon: int, size: int, saturated: bool) -> np.ndarray:
    """Prefix sum of averaged mating counts, extending a fully converged
    profile with saturated (all 11) generations past its end."""
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    recorded = len(mean_counts)
    total = mean_counts[: min(horizon, recorded)].sum(axis=0).astype(float)
    if horizon > recorded:
        if not saturated:
            raise ValueError(f"profile covers {recorded} generations, horizon {horizon} requested")
        total = total + np.array([0.0, 0.0, float(size * (horizon - recorded))])
    return total


def _padded(records: list, size: int):
    length = max(len(r.mating_counts) for r in records)
    n = np.empty((len(records), length + 1))
    counts = np.empty((len(records), length, 3))
    for row, r in enumerate(records):
        g = len(r.mating_counts)
        n[row, : g + 1] = r.n_series
        n[row, g + 1 :] = size
        counts[row, :g] = r.mating_counts
        counts[row, g:] = (0, 0, size)
    return n.mean(axis=0), counts.mean(axis=0)


def takeover_stats(
    side: int,
    beta: float,
    replicates: int,
    base_seed: int = 0,
    max_generations: Optional[int] = None,
    seed_cell: str = "random",
    jobs: int = 1,
) -> TakeoverStats:
    """Replicate ``r`` uses seed ``base_seed + r``.

    Runs that take over early are padded as fully converged so every
    replicate contributes to every generation of the averages.
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    args = [(side, beta, max_generations, base_seed + r, seed_cell) for r in range(replicates)]
    records = map_ordered(takeover_run, args, jobs)
    mean_n, mean_counts = _padded(records, side * side)
    return TakeoverStats(beta, side, records, mean_n, mean_counts)


def growth_rate(n_series) -> np.ndarray:
    """Per-generation increments N(t) - N(t-1), t = 1..len-1."""
    n_series = np.asarray(n_series, dtype=float)
    if n_series.size == 0:
        raise ValueError("empty series")
    return np.diff(n_series)


def slope_break(series, start: int = 0, stop: Optional[int] = None) -> int:
    """Least-squares break point of a continuous two-segment linear fit.

    Returns the index (into ``series``) of the hinge that minimizes the
    residual sum of squares over ``series[start:stop]``.
    """
    y = np.asarray(series, dtype=float)[start:stop]
    x = np.arange(len(y), dtype=float)
    if len(y) < 5:
        raise ValueError("need at least 5 points to locate a slope break")
    best_sse, best_k = np.inf, 2
    for k in range(2, len(y) - 2):
        design = np.column_stack([np.ones_like(x), x, np.maximum(x - k, 0.0)])
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        sse = float(((design @ coef - y) ** 2).sum())
        if sse < best_sse:
            best_sse, best_k = sse, k
    return start + best_k
