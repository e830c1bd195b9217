import itertools
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from centric_cea import nk
from centric_cea.grid import GridConfig, run

from oracles import nk_fitness_lookup

INSTANCES = Path(__file__).resolve().parent.parent / "instances"


def _constant(n, k, value=0.5):
    return nk.NkLandscape(n, k, "adjacent", nk.adjacent_links(n, k), np.full((n, 2 ** (k + 1)), value))


def test_adjacent_links_example():
    assert set(nk.adjacent_links(5, 2)[0].tolist()) == {4, 1}


def test_adjacent_links_odd_k_leans_right():
    assert list(nk.adjacent_links(8, 3)[0]) == [7, 1, 2]


@pytest.mark.parametrize("n, k", [(5, 2), (8, 3), (9, 8), (6, 0)])
def test_adjacent_links_translate_periodically(n, k):
    links = nk.adjacent_links(n, k)
    for i in range(n):
        assert np.array_equal(links[i], (links[0] + i) % n)


def test_k_zero_is_separable():
    land = nk.generate(6, 0, "random", np.random.default_rng(0))
    assert land.tables.shape == (6, 2)
    x = np.zeros(6, dtype=np.uint8)
    base = nk.evaluate(land, x)
    for i in range(6):
        y = x.copy()
        y[i] = 1
        delta = (land.tables[i, 1] - land.tables[i, 0]) / 6
        assert nk.evaluate(land, y) == pytest.approx(base + delta)


def test_k_zero_optimum_is_per_locus_argmax():
    land = nk.generate(8, 0, "random", np.random.default_rng(1))
    bits, value = nk.global_optimum_bruteforce(land)
    assert list(bits) == list(np.argmax(land.tables, axis=1))
    assert value == pytest.approx(land.tables.max(axis=1).mean())


@pytest.mark.parametrize("k", range(2, 13))
def test_paper_scale_instances_generate(k):
    land = nk.generate(32, k, "random", np.random.default_rng(k))
    assert land.links.shape == (32, k)
    assert np.all(land.links != np.arange(32)[:, None])


def test_generate_rejects_bad_k():
    with pytest.raises(ValueError):
        nk.generate(4, 4, "random", np.random.default_rng(0))
    with pytest.raises(ValueError):
        nk.generate(4, 1, "ring", np.random.default_rng(0))


def test_random_links_uniform_over_others():
    counts = np.zeros(5)
    rng = np.random.default_rng(2)
    for _ in range(4000):
        land = nk.generate(5, 2, "random", rng)
        counts += np.bincount(land.links[0], minlength=5)
    assert counts[0] == 0
    assert np.all(np.abs(counts[1:] / 8000 - 0.25) < 0.02)


def test_round_trip():
    land = nk.generate(8, 3, "random", np.random.default_rng(3))
    assert nk.parse(nk.serialize(land)) == land


@pytest.mark.parametrize(
    "text",
    [
        "NK 8 9 random\n",
        "NK 2 1 random\n1\n0\n0.1 0.2 0.3 1.5\n0.1 0.2 0.3 0.4\n",
        "NK 2 1 random\n1\n0\n0.1 0.2 0.3\n0.1 0.2 0.3 0.4\n",
        "NK 2 1 random\n1\n0\n0.1 0.2 0.3 0.4\n",
        "NK 2 1 random\n0\n0\n0.1 0.2 0.3 0.4\n0.1 0.2 0.3 0.4\n",
        "NX 2 1 random\n",
        "NK 2 1 spiral\n",
        "",
    ],
)
def test_parse_errors(text):
    with pytest.raises(nk.NkParseError):
        nk.parse(text)


def test_committed_instances_load():
    for path in INSTANCES.glob("*.nk"):
        land = nk.load(path)
        assert nk.serialize(land) == path.read_text()


def test_constant_tables():
    land = _constant(7, 2)
    rng = np.random.default_rng(4)
    bits = rng.integers(0, 2, size=(50, 7))
    assert np.all(nk.evaluate_batch(land, bits) == 0.5)


def test_two_locus_hand_oracle():
    tables = np.array([[0.1, 0.2, 0.3, 0.4], [0.5, 0.6, 0.7, 0.8]])
    land = nk.NkLandscape(2, 1, "random", np.array([[1], [0]]), tables)
    # pattern (x_i, x_link) big-endian
    expected = {(0, 0): (0.1 + 0.5) / 2, (0, 1): (0.2 + 0.7) / 2, (1, 0): (0.3 + 0.6) / 2, (1, 1): (0.4 + 0.8) / 2}
    for x, value in expected.items():
        assert nk.evaluate(land, x) == pytest.approx(value)


@pytest.mark.parametrize("n, k, model", [(10, 3, "random"), (10, 5, "adjacent"), (6, 5, "random"), (9, 0, "random")])
def test_evaluate_matches_lookup_oracle_exhaustively(n, k, model):
    land = nk.parse(nk.serialize(nk.generate(n, k, model, np.random.default_rng(n * 10 + k))))
    strings = np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.uint8)
    values = nk.evaluate_batch(land, strings)
    links, tables = land.links.tolist(), land.tables.tolist()
    for s, v in zip(strings, values):
        assert v == pytest.approx(nk_fitness_lookup(links, tables, s), abs=1e-12)
    assert np.all((values >= 0) & (values <= 1))


def test_evaluate_length_mismatch():
    with pytest.raises(ValueError):
        nk.evaluate(_constant(4, 1), [0, 1, 0])


def test_crossover_identical_parents():
    a = np.array([1, 0, 1, 1, 0], dtype=np.uint8)
    c1, c2 = nk.one_point_crossover(a, a, np.random.default_rng(0))
    assert np.array_equal(c1, a) and np.array_equal(c2, a)


def test_crossover_suffix_example():
    c1, c2 = nk.one_point_crossover([0, 0, 0, 0], [1, 1, 1, 1], np.random.default_rng(0), cut=2)
    assert list(c1) == [0, 0, 1, 1] and list(c2) == [1, 1, 0, 0]


def test_crossover_cut_uniform():
    rng = np.random.default_rng(5)
    a = np.zeros((60000, 4), dtype=np.uint8)
    c1, _ = nk.one_point_crossover_batch(a, a + 1, rng)
    cuts = 4 - c1.sum(axis=1)
    freq = np.bincount(cuts, minlength=4) / 60000
    assert freq[0] == 0
    assert np.all(np.abs(freq[1:] - 1 / 3) < 0.01)


@settings(max_examples=100)
@given(st.integers(2, 40), st.integers(0, 2**32))
def test_crossover_preserves_position_xor(n, seed):
    rng = np.random.default_rng(seed)
    a, b = rng.integers(0, 2, n), rng.integers(0, 2, n)
    c1, c2 = nk.one_point_crossover(a, b, rng)
    assert np.array_equal(c1 ^ c2, a ^ b)
    assert np.array_equal(c1 + c2, a + b)


def test_bit_flip_mean_hamming_distance():
    rng = np.random.default_rng(6)
    x = np.zeros((10**5, 20), dtype=np.uint8)
    assert abs(nk.bit_flip_mutation_batch(x, rng).sum(axis=1).mean() - 1) <= 0.02


def test_bit_flip_no_flip_rate():
    rng = np.random.default_rng(7)
    x = np.zeros((10**5, 32), dtype=np.uint8)
    untouched = (nk.bit_flip_mutation_batch(x, rng).sum(axis=1) == 0).mean()
    assert abs(untouched - np.exp(-1)) <= 0.01


def test_bit_flip_single_bit_always_flips():
    rng = np.random.default_rng(8)
    for bit in (0, 1):
        for _ in range(50):
            assert list(nk.bit_flip_mutation(np.array([bit], dtype=np.uint8), rng)) == [1 - bit]


def test_bruteforce_constant_tie_rule():
    bits, value = nk.global_optimum_bruteforce(_constant(6, 2))
    assert value == 0.5
    assert list(bits) == [0] * 6


def test_bruteforce_picks_lexicographically_smallest_tie():
    # only locus 0 matters; the other two loci tie and must stay 0
    tables = np.array([[0.0, 1.0], [0.3, 0.3], [0.2, 0.2]])
    land = nk.NkLandscape(3, 0, "random", np.zeros((3, 0), dtype=np.int64), tables)
    bits, _ = nk.global_optimum_bruteforce(land)
    assert list(bits) == [1, 0, 0]


def test_bruteforce_chunking_does_not_matter():
    land = nk.generate(12, 3, "random", np.random.default_rng(9))
    a = nk.global_optimum_bruteforce(land)
    b = nk.global_optimum_bruteforce(land, chunk=97)
    assert np.array_equal(a[0], b[0]) and a[1] == b[1]


def test_bruteforce_refuses_large():
    with pytest.raises(ValueError, match="refused"):
        nk.global_optimum_bruteforce(nk.generate(25, 1, "random", np.random.default_rng(0)))


def test_int_to_bits_msb_first():
    assert nk.int_to_bits([5], 4).tolist() == [[0, 1, 0, 1]]


@pytest.mark.parametrize("beta", [0.2, 1.0])
def test_cea_never_beats_bruteforce(beta):
    land = nk.generate(10, 3, "random", np.random.default_rng(10))
    _, optimum = nk.global_optimum_bruteforce(land)
    for seed in range(3):
        log = run(nk.NkProblem(land), GridConfig(8, 8, beta, "maximize"), 60, seed=seed)
        assert log.best_fitness_series.max() <= optimum + 1e-12
