"""Quadratic assignment backend.

A solution is a permutation ``p`` where ``p[i]`` is the location of
facility ``i``; the cost is ``sum_ij D[p[i], p[j]] * F[i, j]`` (minimized).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np

BRUTEFORCE_MAX_N = 4


class QapParseError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class QapInstance:
    flows: np.ndarray
    distances: np.ndarray
    name: str = ""

    def __post_init__(self):
        n = len(self.flows)
        if self.flows.shape != (n, n) or self.distances.shape != (n, n):
            raise ValueError("flow and distance matrices must both be n x n")
        if not (np.isfinite(self.flows).all() and np.isfinite(self.distances).all()):
            raise ValueError("QAP matrices must be finite")
        self.flows.setflags(write=False)
        self.distances.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.flows)


def parse_qaplib(text: str, name: str = "") -> QapInstance:
    """Parse ``n`` followed by the flow matrix and then the distance matrix."""
    tokens = text.split()
    if not tokens:
        raise QapParseError("empty QAPLIB text")
    try:
        n = int(tokens[0])
    except ValueError:
        raise QapParseError(f"token 0: expected integer size, got {tokens[0]!r}") from None
    if n <= 0:
        raise QapParseError(f"token 0: size must be positive, got {n}")
    expected = 1 + 2 * n * n
    if len(tokens) != expected:
        raise QapParseError(
            f"token {min(len(tokens), expected)}: expected {expected} numeric tokens for n={n}, "
            f"found {len(tokens)}"
        )
    values = np.empty(2 * n * n)
    for pos, tok in enumerate(tokens[1:], start=1):
        try:
            values[pos - 1] = float(tok)
        except ValueError:
            raise QapParseError(f"token {pos}: not a number: {tok!r}") from None
    if not np.isfinite(values).all():
        bad = int(np.flatnonzero(~np.isfinite(values))[0]) + 1
        raise QapParseError(f"token {bad}: non-finite value {tokens[bad]!r}")
    flows = values[: n * n].reshape(n, n)
    distances = values[n * n :].reshape(n, n)
    return QapInstance(flows.copy(), distances.copy(), name)


def load_qaplib(path) -> QapInstance:
    path = Path(path)
    return parse_qaplib(path.read_text(), name=path.stem)


def _format_number(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def format_qaplib(instance: QapInstance) -> str:
    lines = [str(instance.n), ""]
    for matrix in (instance.flows, instance.distances):
        lines.extend(" ".join(_format_number(v) for v in row) for row in matrix)
        lines.append("")
    return "\n".join(lines)


def is_permutation(p) -> bool:
    p = np.asarray(p)
    return p.ndim == 1 and np.array_equal(np.sort(p), np.arange(len(p)))


def evaluate(instance: QapInstance, p) -> float:
    p = np.asarray(p, dtype=np.int64)
    if p.shape != (instance.n,):
        raise ValueError(f"permutation of length {len(p)} does not fit instance of size {instance.n}")
    return float(_evaluate_kernel(p[None, :], instance.distances, instance.flows)[0])


@numba.njit(cache=True)
def _evaluate_kernel(perms, distances, flows):
    m, n = perms.shape
    out = np.empty(m)
    for r in range(m):
        total = 0.0
        for i in range(n):
            di = distances[perms[r, i]]
            for j in range(n):
                total += di[perms[r, j]] * flows[i, j]
        out[r] = total
    return out


@numba.njit(cache=True)
def _upmx_kernel(first, second, positions):
    m, n = first.shape
    reps = positions.shape[1]
    c1 = first.copy()
    c2 = second.copy()
    pos1 = np.empty(n, np.int64)
    pos2 = np.empty(n, np.int64)
    for r in range(m):
        for x in range(n):
            pos1[c1[r, x]] = x
            pos2[c2[r, x]] = x
        for s in range(reps):
            i = positions[r, s]
            v1 = c1[r, i]
            v2 = c2[r, i]
            j = pos2[v1]
            k = pos1[v2]
            a = c1[r, j]
            c1[r, j] = v1
            c1[r, i] = a
            pos1[a] = i
            pos1[v1] = j
            b = c2[r, k]
            c2[r, k] = v2
            c2[r, i] = b
            pos2[b] = i
            pos2[v2] = k
    return c1, c2


def crossover_repetitions(n: int) -> int:
    return max(1, n // 3)


def upmx_like_crossover_batch(first, second, rng: np.random.Generator):
    """Row-wise UPMX-style crossover; returns two child arrays."""
    first = np.ascontiguousarray(first, dtype=np.int64)
    second = np.ascontiguousarray(second, dtype=np.int64)
    m, n = first.shape
    positions = rng.integers(0, n, size=(m, crossover_repetitions(n)))
    return _upmx_kernel(first, second, positions)


def upmx_like_crossover(p1, p2, rng: np.random.Generator):
    """Repeat max(1, n//3) times: pick position i, locate j with p1[i] == p2[j] and
    k with p2[i] == p1[k], then swap (i, j) in the first copy and (i, k) in the second.

    Lookups use the working copies, so later steps see earlier swaps.
    """
    p1 = np.asarray(p1, dtype=np.int64)
    p2 = np.asarray(p2, dtype=np.int64)
    if p1.shape != p2.shape or len(p1) < 2:
        raise ValueError("parents must be permutations of equal size n >= 2")
    c1, c2 = upmx_like_crossover_batch(p1[None, :], p2[None, :], rng)
    return c1[0], c2[0]


def distinct_pairs(count: int, n: int, rng: np.random.Generator) -> np.ndarray:
    i = rng.integers(0, n, size=count)
    j = rng.integers(0, n - 1, size=count)
    j = j + (j >= i)
    return np.stack([i, j], axis=1)


def swap_positions(p, i: int, j: int) -> np.ndarray:
    out = np.array(p, copy=True)
    out[i], out[j] = out[j], out[i]
    return out


def swap_mutation_batch(perms, rng: np.random.Generator) -> np.ndarray:
    perms = np.array(perms, copy=True)
    m, n = perms.shape
    pairs = distinct_pairs(m, n, rng)
    rows = np.arange(m)
    a = perms[rows, pairs[:, 0]]
    perms[rows, pairs[:, 0]] = perms[rows, pairs[:, 1]]
    perms[rows, pairs[:, 1]] = a
    return perms


def swap_mutation(p, rng: np.random.Generator) -> np.ndarray:
    p = np.asarray(p)
    if len(p) < 2:
        raise ValueError("swap mutation needs n >= 2")
    i, j = distinct_pairs(1, len(p), rng)[0]
    return swap_positions(p, i, j)


def random_permutation(n: int, rng: np.random.Generator) -> np.ndarray:
    if n < 1:
        raise ValueError(f"permutation size must be positive, got {n}")
    return rng.permutation(n)


def bruteforce_optimum(instance: QapInstance) -> tuple[np.ndarray, float]:
    """Exhaustive minimum; ties resolved toward the lexicographically smallest permutation."""
    if instance.n > BRUTEFORCE_MAX_N:
        raise ValueError(
            f"exhaustive QAP search refused for n={instance.n} (limit {BRUTEFORCE_MAX_N})"
        )
    perms = np.array(list(itertools.permutations(range(instance.n))), dtype=np.int64)
    costs = _evaluate_kernel(perms, instance.distances, instance.flows)
    k = int(np.argmin(costs))
    return perms[k], float(costs[k])


def nugent_like_instance(rows: int, cols: int, rng: np.random.Generator, density: float = 0.55,
                         max_flow: int = 10, name: str = "") -> QapInstance:
    """Symmetric instance in the Nugent style: Manhattan distances on a
    ``rows x cols`` grid of locations and sparse small-integer flows."""
    n = rows * cols
    r, c = np.divmod(np.arange(n), cols)
    distances = (np.abs(r[:, None] - r[None, :]) + np.abs(c[:, None] - c[None, :])).astype(float)
    upper = np.triu(rng.integers(1, max_flow + 1, size=(n, n)) * (rng.random((n, n)) < density), 1)
    flows = (upper + upper.T).astype(float)
    return QapInstance(flows, distances, name)


class QapProblem:
    maximize = False

    def __init__(self, instance: QapInstance):
        self.instance = instance

    @property
    def n(self) -> int:
        return self.instance.n

    def random_solutions(self, count, rng):
        return np.argsort(rng.random((count, self.n)), axis=1)

    def evaluate_batch(self, solutions):
        return _evaluate_kernel(
            np.ascontiguousarray(solutions, dtype=np.int64), self.instance.distances, self.instance.flows
        )

    def crossover_batch(self, first, second, rng):
        return upmx_like_crossover_batch(first, second, rng)

    def mutate_batch(self, solutions, rng):
        return swap_mutation_batch(solutions, rng)
