"""Toroidal-grid population, centric selection and the synchronous cEA loop.

Cells are indexed row-major: cell ``i`` sits at row ``i // width`` and
column ``i % width``.  Every problem backend works on batches of encodings
stored as rows of a 2-D array, so one generation is a handful of array
operations over the whole grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol

import numpy as np

MATING_00, MATING_01, MATING_11 = 0, 1, 2
MATING_LABELS = ("00", "01", "11")

# slot order inside a neighborhood row
CENTER, NORTH, SOUTH, EAST, WEST = range(5)


class Problem(Protocol):
    """Batched problem backend consumed by the engine."""

    maximize: bool

    def random_solutions(self, count: int, rng: np.random.Generator) -> np.ndarray: ...

    def evaluate_batch(self, solutions: np.ndarray) -> np.ndarray: ...

    def crossover_batch(
        self, first: np.ndarray, second: np.ndarray, rng: np.random.Generator
    ) -> tuple[np.ndarray, np.ndarray]: ...

    def mutate_batch(self, solutions: np.ndarray, rng: np.random.Generator) -> np.ndarray: ...


@dataclass(frozen=True)
class GridConfig:
    width: int
    height: int
    beta: float
    orientation: str = "minimize"

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"grid dimensions must be positive, got {self.width}x{self.height}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        if self.orientation not in ("minimize", "maximize"):
            raise ValueError(f"unknown orientation {self.orientation!r}")

    @property
    def size(self) -> int:
        return self.width * self.height

    @property
    def maximize(self) -> bool:
        return self.orientation == "maximize"

    @classmethod
    def square(cls, side: int, beta: float, orientation: str = "minimize") -> "GridConfig":
        return cls(side, side, beta, orientation)


@dataclass(frozen=True)
class Population:
    config: GridConfig
    cells: np.ndarray
    fitnesses: np.ndarray

    def __post_init__(self):
        if len(self.cells) != self.config.size or len(self.fitnesses) != self.config.size:
            raise ValueError(
                f"population holds {len(self.cells)} cells and {len(self.fitnesses)} "
                f"fitnesses, grid needs {self.config.size}"
            )

    @classmethod
    def evaluated(cls, config: GridConfig, cells: np.ndarray, problem: Problem) -> "Population":
        cells = np.asarray(cells)
        return cls(config, cells, np.asarray(problem.evaluate_batch(cells), dtype=float))

    @classmethod
    def random(cls, config: GridConfig, problem: Problem, rng: np.random.Generator) -> "Population":
        return cls.evaluated(config, problem.random_solutions(config.size, rng), problem)

    def best_fitness(self) -> float:
        f = self.fitnesses
        return float(f.max() if self.config.maximize else f.min())


def neighborhood(index: int, config: GridConfig) -> tuple[int, int, int, int, int]:
    """Return (center, north, south, east, west) with toroidal wrap-around."""
    if not 0 <= index < config.size:
        raise IndexError(f"cell index {index} outside grid of size {config.size}")
    w, h = config.width, config.height
    row, col = divmod(index, w)
    return (
        index,
        ((row - 1) % h) * w + col,
        ((row + 1) % h) * w + col,
        row * w + (col + 1) % w,
        row * w + (col - 1) % w,
    )


def neighborhood_table(config: GridConfig) -> np.ndarray:
    """``(size, 5)`` array whose row ``i`` is ``neighborhood(i, config)``."""
    w, h = config.width, config.height
    rows, cols = np.divmod(np.arange(config.size), w)
    return np.stack(
        [
            rows * w + cols,
            ((rows - 1) % h) * w + cols,
            ((rows + 1) % h) * w + cols,
            rows * w + (cols + 1) % w,
            rows * w + (cols - 1) % w,
        ],
        axis=1,
    )


def selection_weights(beta: float) -> np.ndarray:
    """Per-draw probabilities of the five slots: center gets beta, each neighbor (1 - beta)/4."""
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    side = (1.0 - beta) / 4.0
    return np.array([beta, side, side, side, side])


def _cumulative(beta: float) -> np.ndarray:
    cum = np.cumsum(selection_weights(beta))
    cum[-1] = 1.0
    return cum


def draw_slots(beta: float, shape, rng: np.random.Generator) -> np.ndarray:
    """Independent neighborhood-slot draws (0 = center) following the centric law."""
    u = rng.random(shape)
    return np.searchsorted(_cumulative(beta), u, side="right")


def _better(fa: np.ndarray, fb: np.ndarray, maximize: bool) -> np.ndarray:
    return fa > fb if maximize else fa < fb


def tournament_winner(a: int, b: int, population: Population, rng: np.random.Generator) -> int:
    """Deterministic binary tournament; exact ties go to a fair coin."""
    fa, fb = population.fitnesses[a], population.fitnesses[b]
    if fa == fb:
        return a if rng.random() < 0.5 else b
    maximize = population.config.maximize
    return a if (fa > fb) == maximize else b


def centric_select(
    population: Population, index: int, beta: float, rng: np.random.Generator
) -> int:
    hood = neighborhood(index, population.config)
    first, second = draw_slots(beta, 2, rng)
    return tournament_winner(hood[first], hood[second], population, rng)


@dataclass
class GenerationStats:
    """Per-cell outcome of one generation, handed to recorders."""

    generation: int
    mating_types: np.ndarray
    improved: np.ndarray
    child_best: np.ndarray
    previous_best: float

    def mating_counts(self) -> np.ndarray:
        return np.bincount(self.mating_types, minlength=3)

    def successes(self) -> np.ndarray:
        return np.bincount(self.mating_types, weights=self.improved, minlength=3).astype(np.int64)


Recorder = Callable[[GenerationStats], None]


def _select_parents(population: Population, table: np.ndarray, beta: float, rng) -> np.ndarray:
    """Tournament winners for all cells, shape ``(size, 2)``."""
    size = population.config.size
    slots = draw_slots(beta, (size, 2, 2), rng)
    cand = np.take_along_axis(table, slots.reshape(size, 4), axis=1).reshape(size, 2, 2)
    f = population.fitnesses[cand]
    coin = rng.random((size, 2)) < 0.5
    first_wins = _better(f[..., 0], f[..., 1], population.config.maximize)
    tie = f[..., 0] == f[..., 1]
    first_wins = np.where(tie, coin, first_wins)
    return np.where(first_wins, cand[..., 0], cand[..., 1])


def step_generation(
    population: Population,
    problem: Problem,
    config: GridConfig,
    rng: np.random.Generator,
    recorder: Optional[Recorder] = None,
    generation: int = 0,
    table: Optional[np.ndarray] = None,
) -> Population:
    """One synchronous generation: every cell reads only the pre-generation grid."""
    if table is None:
        table = neighborhood_table(config)
    maximize = config.maximize
    size = config.size
    parents = _select_parents(population, table, config.beta, rng)
    first, second = problem.crossover_batch(
        population.cells[parents[:, 0]], population.cells[parents[:, 1]], rng
    )
    first = problem.mutate_batch(first, rng)
    second = problem.mutate_batch(second, rng)
    f1 = np.asarray(problem.evaluate_batch(first), dtype=float)
    f2 = np.asarray(problem.evaluate_batch(second), dtype=float)

    coin = rng.random(size) < 0.5
    take_first = np.where(f1 == f2, coin, _better(f1, f2, maximize))
    child_f = np.where(take_first, f1, f2)
    replace = _better(child_f, population.fitnesses, maximize)

    cells = population.cells.copy()
    fitnesses = population.fitnesses.copy()
    idx = np.flatnonzero(replace)
    cells[idx] = np.where(take_first[idx, None], first[idx], second[idx])
    fitnesses[idx] = child_f[idx]

    if recorder is not None:
        best = population.best_fitness()
        is_best = population.fitnesses[parents] == best
        recorder(
            GenerationStats(
                generation=generation,
                mating_types=is_best.sum(axis=1),
                improved=_better(child_f, best, maximize),
                child_best=child_f,
                previous_best=best,
            )
        )
    return Population(config, cells, fitnesses)


@dataclass
class RunLog:
    seed: int
    best_fitness_series: np.ndarray
    mating_counts: np.ndarray
    successes: np.ndarray
    improvement_events: list = field(default_factory=list)
    generations_run: int = 0
    final_population: Optional[Population] = None

    @property
    def final_best(self) -> float:
        return float(self.best_fitness_series[-1])


class _RunRecorder:
    def __init__(self, generations: int, record_events: bool, maximize: bool):
        self.counts = np.zeros((generations, 3), dtype=np.int64)
        self.successes = np.zeros((generations, 3), dtype=np.int64)
        self.events = [] if record_events else None
        self.maximize = maximize

    def __call__(self, stats: GenerationStats) -> None:
        t = stats.generation - 1
        self.counts[t] = stats.mating_counts()
        self.successes[t] = stats.successes()
        if self.events is not None and stats.improved.any():
            hits = np.flatnonzero(stats.improved)
            for i in hits:
                self.events.append(
                    (stats.generation, MATING_LABELS[stats.mating_types[i]], float(stats.child_best[i]))
                )


def run(
    problem: Problem,
    config: GridConfig,
    generations: int,
    seed: int,
    record_events: bool = False,
    keep_population: bool = False,
) -> RunLog:
    """Run the cEA for a fixed generation budget from a seeded random grid.

    ``best_fitness_series[0]`` is the initial grid's best, entry ``t`` the best
    after generation ``t``.
    """
    if generations < 1:
        raise ValueError(f"generations must be >= 1, got {generations}")
    if problem.maximize != config.maximize:
        raise ValueError("grid orientation does not match the problem orientation")
    rng = np.random.default_rng(seed)
    table = neighborhood_table(config)
    population = Population.random(config, problem, rng)
    recorder = _RunRecorder(generations, record_events, config.maximize)
    series = np.empty(generations + 1)
    series[0] = population.best_fitness()
    for t in range(1, generations + 1):
        population = step_generation(population, problem, config, rng, recorder, t, table)
        series[t] = population.best_fitness()
    return RunLog(
        seed=seed,
        best_fitness_series=series,
        mating_counts=recorder.counts,
        successes=recorder.successes,
        improvement_events=recorder.events or [],
        generations_run=generations,
        final_population=population if keep_population else None,
    )
