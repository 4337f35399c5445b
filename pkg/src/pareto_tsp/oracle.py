"""Brute-force ground truth: exact Pareto sets of tours and cycle covers.

Everything here is plain enumeration so it can serve as an independent
reference for the approximation algorithms.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import permutations

import numpy as np

from .core import BudgetError, Instance, StructureError
from .pareto import MAX, ParetoSet

TOUR_LIMIT_DIRECTED = 9
TOUR_LIMIT_UNDIRECTED = 10
CC_LIMIT = 8


@lru_cache(maxsize=None)
def _tour_orders(n: int, directed: bool) -> np.ndarray:
    rest = np.array(list(permutations(range(1, n))), dtype=np.int64).reshape(-1, n - 1)
    if not directed:
        rest = rest[rest[:, 0] < rest[:, -1]] if n > 2 else rest
    orders = np.concatenate([np.zeros((len(rest), 1), dtype=np.int64), rest], axis=1)
    orders.setflags(write=False)
    return orders


@lru_cache(maxsize=None)
def _successor_tables(n: int, directed: bool) -> np.ndarray:
    """Successor arrays of all cycle covers, in lexicographic edge-set order."""
    perms = np.array(list(permutations(range(n))), dtype=np.int64)
    idx = np.arange(n)
    perms = perms[(perms != idx).all(axis=1)]
    if directed:
        out = perms
    else:
        # no 2-cycles, then one orientation per undirected 2-factor
        two = np.take_along_axis(perms, perms, axis=1)
        perms = perms[(two != idx).all(axis=1)]
        seen = {}
        for row in perms:
            key = tuple(sorted((min(v, int(row[v])), max(v, int(row[v]))) for v in range(n)))
            if key not in seen:
                seen[key] = row
        out = np.array([seen[k] for k in sorted(seen)], dtype=np.int64).reshape(-1, n)
    if directed:
        keys = [tuple((v, int(r[v])) for v in range(n)) for r in out]
        out = out[np.array(sorted(range(len(out)), key=lambda j: keys[j]), dtype=np.int64)]
    out.setflags(write=False)
    return out


def _edges_from_successor(row, directed: bool) -> tuple:
    n = len(row)
    if directed:
        return tuple((v, int(row[v])) for v in range(n))
    return tuple(sorted((min(v, int(row[v])), max(v, int(row[v]))) for v in range(n)))


def _gather(inst: Instance, tails: np.ndarray, heads: np.ndarray) -> np.ndarray:
    W = inst.weights
    if inst.int64_safe:
        return W[tails, heads].sum(axis=1)
    return W.astype(object)[tails, heads].sum(axis=1)


def enumerate_cycle_covers(inst: Instance, limit: int = CC_LIMIT):
    """All cycle covers with their weights, lexicographic by edge set."""
    if inst.n > limit:
        raise BudgetError(f"cycle-cover enumeration refused for n={inst.n} > {limit}")
    succ = _successor_tables(inst.n, inst.directed)
    tails = np.broadcast_to(np.arange(inst.n), succ.shape)
    vals = _gather(inst, tails, succ)
    covers = [_edges_from_successor(r, inst.directed) for r in succ]
    return covers, [tuple(int(x) for x in v) for v in vals]


def enumerate_tours(inst: Instance):
    """All tours (up to rotation, and reflection if undirected) with weights."""
    limit = TOUR_LIMIT_DIRECTED if inst.directed else TOUR_LIMIT_UNDIRECTED
    if inst.n > limit:
        raise BudgetError(f"tour enumeration refused for n={inst.n} > {limit}")
    if not inst.directed and inst.n < 3:
        raise StructureError("undirected tours need n >= 3")
    orders = _tour_orders(inst.n, inst.directed)
    nxt = np.roll(orders, -1, axis=1)
    vals = _gather(inst, orders, nxt)
    return orders, vals


def _tour_edges(order, directed: bool) -> tuple:
    n = len(order)
    es = []
    for j in range(n):
        a, b = int(order[j]), int(order[(j + 1) % n])
        es.append((a, b) if directed or a < b else (b, a))
    return tuple(sorted(es))


def pareto_indices(vals, sense: str = MAX) -> list[int]:
    """Indices of the nondominated rows of ``vals`` (first of each duplicate), ascending."""
    vals = np.asarray(vals)
    if len(vals) == 0:
        return []
    sign = 1 if sense == MAX else -1
    s = vals * sign
    order = np.lexsort(tuple(-s[:, i] for i in reversed(range(s.shape[1]))))
    kept: list[int] = []
    kept_vals = np.empty((0, s.shape[1]), dtype=s.dtype)
    for j in order:
        v = s[j]
        if len(kept):
            ge = (kept_vals >= v).all(axis=1)
            if ge.any():
                # either dominated or an exact duplicate of a kept row
                continue
        kept.append(int(j))
        kept_vals = np.vstack([kept_vals, v[None, :]])
    return sorted(kept)


def exact_tour_pareto(inst: Instance, sense: str = MAX) -> ParetoSet:
    """Exact Pareto set of tours (n <= 9 directed, n <= 10 undirected)."""
    orders, vals = enumerate_tours(inst)
    idx = pareto_indices(vals, sense)
    items = [(_tour_edges(orders[j], inst.directed), tuple(int(x) for x in vals[j])) for j in idx]
    return ParetoSet(items, sense, {"oracle": "tours", "count": int(len(orders))})


def exact_cc_pareto(inst: Instance, sense: str = MAX) -> ParetoSet:
    """Exact Pareto set of cycle covers (n <= 8)."""
    covers, vals = enumerate_cycle_covers(inst)
    idx = pareto_indices(np.array(vals, dtype=object if not inst.int64_safe else np.int64), sense)
    items = [(covers[j], vals[j]) for j in idx]
    return ParetoSet(items, sense, {"oracle": "cycle_covers", "count": len(covers)})


def tour_extrema(inst: Instance, sense: str = MAX) -> tuple:
    """Per-coordinate optimum over all tours."""
    _, vals = enumerate_tours(inst)
    f = np.max if sense == MAX else np.min
    return tuple(int(x) for x in f(vals, axis=0))
