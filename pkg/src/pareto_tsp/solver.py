"""Single-objective building blocks: cycle covers, matchings, base-case tours."""

from __future__ import annotations

from fractions import Fraction
from itertools import permutations
from math import lcm
from typing import Sequence

import networkx as nx
import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import (
    DomainError,
    Instance,
    StructureError,
    complete_to_tour,
    cycle_edges,
    cycles_of,
)

MAX = "max"
MIN = "min"

EXACT_TOUR_THRESHOLD = 9
_FLOAT_EXACT = 2**53


def scalar_weights(inst: Instance, coeffs: int | Sequence = 0) -> np.ndarray:
    """An ``n x n`` integer matrix of scalar edge weights.

    ``coeffs`` is either a coordinate index or a list of nonnegative rational
    coefficients, one per criterion.  Rational coefficients are scaled by
    their common denominator, which does not change any optimum.
    """
    W = inst.weights
    if isinstance(coeffs, (int, np.integer)):
        if not 0 <= coeffs < inst.k:
            raise DomainError(f"coordinate {coeffs} out of range for k={inst.k}")
        return np.array(W[:, :, int(coeffs)])
    cs = [Fraction(c) for c in coeffs]
    if len(cs) != inst.k or any(c < 0 for c in cs) or not any(cs):
        raise DomainError("scalarization needs k nonnegative coefficients, not all zero")
    d = lcm(*(c.denominator for c in cs))
    ints = [int(c * d) for c in cs]
    if inst.int64_safe and max(ints) * (int(W.max()) + 1) * inst.k * inst.n < 2**62:
        return (W * np.array(ints, dtype=np.int64)).sum(axis=2)
    return (W.astype(object) * np.array(ints, dtype=object)).sum(axis=2)


def _as_matrix(inst: Instance, scalar) -> np.ndarray:
    if scalar is None:
        if inst.k != 1:
            raise DomainError("scalar weights required for k > 1")
        return np.array(inst.weights[:, :, 0])
    if isinstance(scalar, (int, np.integer)) or (isinstance(scalar, (list, tuple))
                                                 and np.ndim(scalar) == 1):
        return scalar_weights(inst, scalar)
    m = np.asarray(scalar)
    if m.shape != (inst.n, inst.n):
        raise DomainError(f"scalar weights must be {inst.n} x {inst.n}")
    return m


def scalar_value(m: np.ndarray, edges) -> int:
    return sum(int(m[u, v]) for u, v in edges)


def _directed_cover(m: np.ndarray, sense: str) -> list:
    n = m.shape[0]
    top = max(int(x) for x in m.ravel())
    if n * (top + 1) < _FLOAT_EXACT:
        cost = np.array(m, dtype=float)
        if sense == MAX:
            cost = -cost
        # diagonal forbidden; any finite value larger than every real option works
        big = float(n * (top + 1) + 1)
        np.fill_diagonal(cost, big)
        rows, cols = linear_sum_assignment(cost)
        succ = [int(c) for c in cols]
        if all(succ[v] != v for v in range(n)):
            return [(v, succ[v]) for v in range(n)]
    # exact integer fallback: perfect matching on the bipartite doubling
    g = nx.Graph()
    offset = n * (top + 1) + 1
    for u in range(n):
        for v in range(n):
            if u != v:
                val = int(m[u, v]) if sense == MAX else top - int(m[u, v])
                g.add_edge(("o", u), ("i", v), weight=val + offset)
    mate = nx.max_weight_matching(g, maxcardinality=True)
    succ = {}
    for a, b in mate:
        if a[0] == "i":
            a, b = b, a
        succ[a[1]] = b[1]
    return [(v, succ[v]) for v in range(n)]


def _undirected_cover(m: np.ndarray, sense: str) -> list:
    """2-factor via the degree gadget and maximum-weight perfect matching.

    Vertex ``v`` gets one outer copy per incident edge and ``deg(v) - 2`` inner
    copies joined to all its outer copies.  A perfect matching leaves exactly
    two outer copies per vertex matched across, which selects degree-2 edges.
    """
    n = m.shape[0]
    top = max(int(m[u, v]) for u in range(n) for v in range(n) if u != v)
    g = nx.Graph()
    for v in range(n):
        others = [u for u in range(n) if u != v]
        for j in range(n - 3):
            for u in others:
                g.add_edge(("in", v, j), ("out", v, u), weight=0)
    for u in range(n):
        for v in range(u + 1, n):
            val = int(m[u, v]) if sense == MAX else top + 1 - int(m[u, v])
            g.add_edge(("out", u, v), ("out", v, u), weight=val)
    mate = nx.max_weight_matching(g, maxcardinality=True)
    edges = []
    for a, b in mate:
        if a[0] == "out" and b[0] == "out":
            u, v = a[1], b[1]
            edges.append((min(u, v), max(u, v)))
    if len(mate) * 2 != g.number_of_nodes() or len(edges) != n:
        raise StructureError("gadget matching is not perfect")
    return sorted(edges)


def optimal_cycle_cover(inst: Instance, scalar=None, sense: str = MAX) -> list:
    """Maximum- or minimum-weight cycle cover (list of edges)."""
    if sense not in (MAX, MIN):
        raise ValueError(f"sense must be 'max' or 'min', got {sense!r}")
    m = _as_matrix(inst, scalar)
    if inst.directed:
        return sorted(_directed_cover(m, sense))
    if inst.n < 3:
        raise StructureError("undirected cycle cover needs n >= 3")
    return _undirected_cover(m, sense)


def cycle_cover_dp(inst: Instance, scalar=None, sense: str = MAX) -> tuple[int, list]:
    """Exact cycle cover by dynamic programming over vertex subsets (n <= 12).

    Independent of the matching reductions; used to cross-check them.
    """
    n = inst.n
    if n > 12:
        raise DomainError("cycle_cover_dp is limited to n <= 12")
    m = _as_matrix(inst, scalar)
    better = (lambda a, b: a > b) if sense == MAX else (lambda a, b: a < b)
    min_len = 2 if inst.directed else 3
    full = (1 << n) - 1
    # best[S]: best cycle through exactly S (S's lowest vertex is the anchor)
    best: dict[int, tuple] = {}
    for s in range(n):
        # Held-Karp rooted at s over vertices > s
        paths: dict[tuple[int, int], tuple] = {(1 << s, s): (0, (s,))}
        frontier = [(1 << s, s)]
        for _ in range(n - s - 1):
            nxt = {}
            for mask, last in frontier:
                val, seq = paths[(mask, last)]
                for v in range(s + 1, n):
                    if mask >> v & 1:
                        continue
                    key = (mask | 1 << v, v)
                    cand = (val + int(m[last, v]), seq + (v,))
                    if key not in nxt or better(cand[0], nxt[key][0]):
                        nxt[key] = cand
            for key, val in nxt.items():
                paths[key] = val
            frontier = list(nxt)
        for (mask, last), (val, seq) in paths.items():
            if len(seq) < min_len:
                continue
            total = val + int(m[last, s])
            if mask not in best or better(total, best[mask][0]):
                best[mask] = (total, seq)
    cover: dict[int, tuple] = {0: (0, ())}
    for mask in range(1, full + 1):
        low = mask & -mask
        sub = mask
        res = None
        while sub:
            if sub & low and sub in best and (mask ^ sub) in cover:
                val = best[sub][0] + cover[mask ^ sub][0]
                if res is None or better(val, res[0]):
                    res = (val, (sub,) + cover[mask ^ sub][1])
            sub = (sub - 1) & mask
        if res is not None:
            cover[mask] = res
    if full not in cover:
        raise StructureError("no cycle cover exists")
    val, parts = cover[full]
    edges = []
    for part in parts:
        edges.extend(cycle_edges(list(best[part][1]), inst.directed))
    return val, sorted(edges)


def max_weight_matching(inst: Instance, scalar=None) -> list:
    """Maximum-weight matching of an undirected instance (not necessarily perfect)."""
    if inst.directed:
        raise StructureError("matching needs an undirected instance")
    m = _as_matrix(inst, scalar)
    g = nx.Graph()
    g.add_nodes_from(range(inst.n))
    for u in range(inst.n):
        for v in range(u + 1, inst.n):
            if int(m[u, v]) > 0:
                g.add_edge(u, v, weight=int(m[u, v]))
    mate = nx.max_weight_matching(g)
    return sorted((min(a, b), max(a, b)) for a, b in mate)


def _exact_tour(inst: Instance, m: np.ndarray, sense: str) -> list:
    n = inst.n
    rest = np.array(list(permutations(range(1, n))), dtype=np.int64).reshape(-1, n - 1)
    if not inst.directed and n > 3:
        rest = rest[rest[:, 0] < rest[:, -1]]
    orders = np.concatenate([np.zeros((len(rest), 1), dtype=np.int64), rest], axis=1)
    vals = m[orders, np.roll(orders, -1, axis=1)].sum(axis=1)
    j = int(np.argmax(vals) if sense == MAX else np.argmin(vals))
    return sorted(cycle_edges([int(x) for x in orders[j]], inst.directed))


def lightest_edge(cycle: Sequence, m: np.ndarray) -> tuple:
    """Lightest edge of a cycle; ties go to the lexicographically smallest edge."""
    return min(cycle, key=lambda e: (int(m[e[0], e[1]]), e))


def mono_tsp_approx(inst: Instance, scalar=None, sense: str = MAX,
                    exact_threshold: int = EXACT_TOUR_THRESHOLD) -> list:
    """Single-objective maximum tour.

    Exact by enumeration for ``n <= exact_threshold``; otherwise a maximum
    cycle cover with the lightest edge of every cycle removed, then patched.
    That keeps at least 1/2 (directed) or 2/3 (undirected) of the cover.
    """
    if sense != MAX:
        raise DomainError("mono_tsp_approx maximizes")
    if not inst.directed and inst.n < 3:
        raise StructureError("undirected tours need n >= 3")
    m = _as_matrix(inst, scalar)
    if inst.n <= exact_threshold:
        return _exact_tour(inst, m, sense)
    cover = optimal_cycle_cover(inst, m, MAX)
    keep = []
    for seq in cycles_of(cover, inst.n, inst.directed):
        cyc = cycle_edges(seq, inst.directed)
        drop = lightest_edge(cyc, m)
        keep.extend(e for e in cyc if e != drop)
    return complete_to_tour(keep, inst, m)
