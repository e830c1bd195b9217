"""Reference computations that share no code with the package."""

import itertools

import numpy as np


def qap_cost_loop(distances, flows, perm):
    n = len(perm)
    total = 0.0
    for i in range(n):
        for j in range(n):
            total += distances[perm[i]][perm[j]] * flows[i][j]
    return total


def qap_min_enumerated(distances, flows):
    n = len(flows)
    return min(qap_cost_loop(distances, flows, p) for p in itertools.permutations(range(n)))


def nk_fitness_lookup(links, tables, bits):
    n = len(bits)
    total = 0.0
    for i in range(n):
        pattern = [bits[i]] + [bits[j] for j in links[i]]
        index = 0
        for b in pattern:
            index = index * 2 + int(b)
        total += tables[i][index]
    return total / n


def torus_neighbors(index, width, height):
    row, col = divmod(index, width)
    return [
        index,
        ((row - 1) % height) * width + col,
        ((row + 1) % height) * width + col,
        row * width + (col + 1) % width,
        row * width + (col - 1) % width,
    ]


def exact_takeover_expectation(width, height, beta):
    """Expected generations to fill the grid from one uniformly placed good cell.

    Each empty cell turns good when any of its four candidate draws (two per
    tournament, two tournaments) lands on a good cell; cells update
    independently given the current state.  Solves the absorbing chain over
    all 2^size states.
    """
    size = width * height
    weights = [beta] + [(1 - beta) / 4] * 4
    hoods = [torus_neighbors(i, width, height) for i in range(size)]
    full = (1 << size) - 1
    states = list(range(1 << size))

    def turn_prob(state, cell):
        q = sum(w for w, nb in zip(weights, hoods[cell]) if state >> nb & 1)
        return 1 - (1 - q) ** 4

    transient = [s for s in states if s != full and s != 0]
    pos = {s: k for k, s in enumerate(transient)}
    Q = np.zeros((len(transient), len(transient)))
    for s in transient:
        empty = [c for c in range(size) if not s >> c & 1]
        probs = [turn_prob(s, c) for c in empty]
        for outcome in itertools.product((0, 1), repeat=len(empty)):
            p = 1.0
            nxt = s
            for c, pc, o in zip(empty, probs, outcome):
                p *= pc if o else 1 - pc
                if o:
                    nxt |= 1 << c
            if nxt != full and p > 0:
                Q[pos[s], pos[nxt]] += p
    hitting = np.linalg.solve(np.eye(len(transient)) - Q, np.ones(len(transient)))
    return float(np.mean([hitting[pos[1 << c]] for c in range(size)]))
