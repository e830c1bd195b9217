"""NK-landscape backend.

Locus ``i`` contributes ``tables[i, idx]`` where ``idx`` reads the bits
``(x[i], x[links[i, 0]], ..., x[links[i, K-1]])`` as a big-endian integer
(``x[i]`` most significant).  Fitness is the mean contribution, maximized.

Text format (``.nk``)::

    NK <N> <K> <adjacent|random>
    <K link indices of locus 0>
    ...
    <2^(K+1) table values of locus 0>
    ...
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

MODELS = ("adjacent", "random")
BRUTEFORCE_MAX_N = 24


class NkParseError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class NkLandscape:
    n: int
    k: int
    model: str
    links: np.ndarray
    tables: np.ndarray

    def __post_init__(self):
        if self.n < 1 or not 0 <= self.k <= self.n - 1:
            raise ValueError(f"need N >= 1 and 0 <= K <= N-1, got N={self.n}, K={self.k}")
        if self.model not in MODELS:
            raise ValueError(f"unknown neighborhood model {self.model!r}")
        if self.links.shape != (self.n, self.k):
            raise ValueError(f"links must have shape ({self.n}, {self.k})")
        if self.tables.shape != (self.n, 2 ** (self.k + 1)):
            raise ValueError(f"tables must have shape ({self.n}, {2 ** (self.k + 1)})")
        for i, row in enumerate(self.links):
            if len(set(row.tolist())) != self.k or i in row or ((row < 0) | (row >= self.n)).any():
                raise ValueError(f"locus {i}: links must be {self.k} distinct loci other than {i}")
        if ((self.tables < 0) | (self.tables > 1)).any():
            raise ValueError("table values must lie in [0, 1]")
        self.links.setflags(write=False)
        self.tables.setflags(write=False)

    def __eq__(self, other):
        if not isinstance(other, NkLandscape):
            return NotImplemented
        return (
            (self.n, self.k, self.model) == (other.n, other.k, other.model)
            and np.array_equal(self.links, other.links)
            and np.array_equal(self.tables, other.tables)
        )

    def loci_matrix(self) -> np.ndarray:
        """``(N, K+1)`` array of the loci read by each component, own locus first."""
        return np.column_stack([np.arange(self.n), self.links]).astype(np.int64)


def adjacent_links(n: int, k: int) -> np.ndarray:
    """ceil(K/2) loci to the right and floor(K/2) to the left, periodic."""
    offsets = list(range(-(k // 2), 0)) + list(range(1, k - k // 2 + 1))
    return (np.arange(n)[:, None] + np.array(offsets, dtype=np.int64)[None, :]) % n


def generate(n: int, k: int, model: str, rng: np.random.Generator) -> NkLandscape:
    if not 0 <= k <= n - 1:
        raise ValueError(f"K must lie in [0, N-1], got N={n}, K={k}")
    if model == "adjacent":
        links = adjacent_links(n, k)
    elif model == "random":
        links = np.empty((n, k), dtype=np.int64)
        for i in range(n):
            others = np.delete(np.arange(n), i)
            links[i] = rng.choice(others, size=k, replace=False)
    else:
        raise ValueError(f"unknown neighborhood model {model!r}")
    tables = rng.random((n, 2 ** (k + 1)))
    return NkLandscape(n, k, model, links.reshape(n, k).astype(np.int64), tables)


def serialize(landscape: NkLandscape) -> str:
    lines = [f"NK {landscape.n} {landscape.k} {landscape.model}"]
    lines += [" ".join(str(int(v)) for v in row) for row in landscape.links]
    lines += [" ".join(repr(float(v)) for v in row) for row in landscape.tables]
    return "\n".join(lines) + "\n"


def parse(text: str) -> NkLandscape:
    lines = text.splitlines()
    if not lines:
        raise NkParseError("empty NK text")
    head = lines[0].split()
    if len(head) != 4 or head[0] != "NK":
        raise NkParseError(f"line 1: malformed header {lines[0]!r}")
    try:
        n, k = int(head[1]), int(head[2])
    except ValueError:
        raise NkParseError(f"line 1: N and K must be integers, got {head[1]!r} {head[2]!r}") from None
    model = head[3]
    if n < 1 or not 0 <= k <= n - 1:
        raise NkParseError(f"line 1: need N >= 1 and 0 <= K <= N-1, got N={n}, K={k}")
    if model not in MODELS:
        raise NkParseError(f"line 1: unknown model {model!r}")
    body = lines[1:]
    while body and not body[-1].strip() and len(body) > 2 * n:
        body.pop()
    if len(body) != 2 * n:
        raise NkParseError(f"expected {2 * n} lines after the header, found {len(body)}")
    links = np.empty((n, k), dtype=np.int64)
    tables = np.empty((n, 2 ** (k + 1)))
    for i in range(n):
        fields = body[i].split()
        if len(fields) != k:
            raise NkParseError(f"line {i + 2}: expected {k} links, found {len(fields)}")
        try:
            links[i] = [int(f) for f in fields]
        except ValueError:
            raise NkParseError(f"line {i + 2}: non-integer link") from None
        row = links[i]
        if len(set(row.tolist())) != k or i in row or ((row < 0) | (row >= n)).any():
            raise NkParseError(f"line {i + 2}: links must be {k} distinct loci in [0, N) other than {i}")
    for i in range(n):
        fields = body[n + i].split()
        if len(fields) != 2 ** (k + 1):
            raise NkParseError(
                f"line {n + i + 2}: expected {2 ** (k + 1)} table values, found {len(fields)}"
            )
        try:
            tables[i] = [float(f) for f in fields]
        except ValueError:
            raise NkParseError(f"line {n + i + 2}: non-numeric table value") from None
        if not ((tables[i] >= 0) & (tables[i] <= 1)).all():
            raise NkParseError(f"line {n + i + 2}: table values must lie in [0, 1]")
    return NkLandscape(n, k, model, links, tables)


def save(landscape: NkLandscape, path) -> None:
    Path(path).write_text(serialize(landscape))


def load(path) -> NkLandscape:
    return parse(Path(path).read_text())


def _component_indices(landscape: NkLandscape, bits: np.ndarray) -> np.ndarray:
    powers = 1 << np.arange(landscape.k, -1, -1, dtype=np.int64)
    return bits[:, landscape.loci_matrix()].astype(np.int64) @ powers


def evaluate_batch(landscape: NkLandscape, bits) -> np.ndarray:
    bits = np.asarray(bits)
    if bits.ndim != 2 or bits.shape[1] != landscape.n:
        raise ValueError(f"expected bit strings of length {landscape.n}")
    idx = _component_indices(landscape, bits)
    return landscape.tables[np.arange(landscape.n), idx].sum(axis=1) / landscape.n


def evaluate(landscape: NkLandscape, x) -> float:
    x = np.asarray(x)
    if x.shape != (landscape.n,):
        raise ValueError(f"bit string of length {len(x)} does not match N={landscape.n}")
    return float(evaluate_batch(landscape, x[None, :])[0])


def one_point_crossover_batch(first, second, rng: np.random.Generator, cuts=None):
    first = np.asarray(first)
    second = np.asarray(second)
    m, n = first.shape
    if cuts is None:
        cuts = rng.integers(1, n, size=m)
    tail = np.arange(n)[None, :] >= np.asarray(cuts)[:, None]
    return np.where(tail, second, first), np.where(tail, first, second)


def one_point_crossover(a, b, rng: np.random.Generator, cut: int | None = None):
    """Exchange suffixes at a cut drawn uniformly from 1..N-1."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape or len(a) < 2:
        raise ValueError("parents must have equal length >= 2")
    c1, c2 = one_point_crossover_batch(a[None, :], b[None, :], rng, None if cut is None else [cut])
    return c1[0], c2[0]


def bit_flip_mutation_batch(bits, rng: np.random.Generator) -> np.ndarray:
    bits = np.asarray(bits)
    flips = rng.random(bits.shape) < 1.0 / bits.shape[1]
    return bits ^ flips.astype(bits.dtype)


def bit_flip_mutation(x, rng: np.random.Generator) -> np.ndarray:
    x = np.asarray(x)
    return bit_flip_mutation_batch(x[None, :], rng)[0]


def int_to_bits(values, n: int) -> np.ndarray:
    """Bit strings of ``values`` with position 0 as the most significant bit."""
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((np.asarray(values, dtype=np.int64)[:, None] >> shifts) & 1).astype(np.uint8)


def global_optimum_bruteforce(landscape: NkLandscape, chunk: int = 1 << 16):
    """Enumerate all 2^N strings; ties go to the lexicographically smallest."""
    n = landscape.n
    if n > BRUTEFORCE_MAX_N:
        raise ValueError(f"exhaustive NK search refused for N={n} (limit {BRUTEFORCE_MAX_N})")
    best_value, best_code = -np.inf, 0
    for start in range(0, 1 << n, chunk):
        codes = np.arange(start, min(start + chunk, 1 << n))
        values = evaluate_batch(landscape, int_to_bits(codes, n))
        k = int(np.argmax(values))
        if values[k] > best_value:
            best_value, best_code = float(values[k]), int(codes[k])
    return int_to_bits([best_code], n)[0], best_value


class NkProblem:
    maximize = True

    def __init__(self, landscape: NkLandscape):
        self.landscape = landscape

    def random_solutions(self, count, rng):
        return rng.integers(0, 2, size=(count, self.landscape.n), dtype=np.uint8)

    def evaluate_batch(self, solutions):
        return evaluate_batch(self.landscape, solutions)

    def crossover_batch(self, first, second, rng):
        return one_point_crossover_batch(first, second, rng)

    def mutate_batch(self, solutions, rng):
        return bit_flip_mutation_batch(solutions, rng)
