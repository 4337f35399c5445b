"""Deterministic bi-criteria Max-STSP and its building blocks.

The central tool is M-feasible extraction: given a matching ``M`` and a tour
(or path system) ``H``, pick ``P`` inside ``H`` so that ``P`` together with
``M`` is still a path collection (or one Hamiltonian cycle) while ``P`` keeps
a third of ``H``'s weight.
"""

from __future__ import annotations

import random
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from ._numeric import ln_bounds
from .core import (
    BudgetError,
    DomainError,
    Instance,
    StructureError,
    complete_to_tour,
    parse_fraction,
    weight_of,
)
from .solver import max_weight_matching, mono_tsp_approx

PARTITION_BUDGET = 10**6


def _norm(e) -> tuple:
    u, v = int(e[0]), int(e[1])
    return (u, v) if u < v else (v, u)


def _rank_fn(w, rank: int) -> Callable:
    if isinstance(w, Instance):
        W = w.weights
        return lambda e: int(W[e[0], e[1], rank])

    def get(e):
        x = w[e] if e in w else w[(e[1], e[0])]
        return int(x) if np.ndim(x) == 0 else int(x[rank])
    return get


def _degrees(edges: Iterable) -> dict:
    deg: dict[int, int] = {}
    for u, v in edges:
        deg[u] = deg.get(u, 0) + 1
        deg[v] = deg.get(v, 0) + 1
    return deg


def is_m_feasible(n: int, P: Iterable, M: Iterable) -> bool:
    """True iff ``P`` and ``M`` together form a path collection or a Hamiltonian cycle."""
    es = {_norm(e) for e in P} | {_norm(e) for e in M}
    deg = _degrees(es)
    if any(d > 2 for d in deg.values()):
        return False
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in sorted(es):
        a, b = find(u), find(v)
        if a == b:
            # a cycle is only allowed if it is Hamiltonian (then es is exactly n edges)
            return len(es) == n and all(deg.get(x, 0) == 2 for x in range(n)) and _connected(n, es)
        parent[a] = b
    return True


def _connected(n: int, es) -> bool:
    adj: dict[int, list] = {}
    for u, v in es:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    seen, stack = {0}, [0]
    while stack:
        x = stack.pop()
        for y in adj.get(x, ()):
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return len(seen) == n


def _check_inputs(n: int, M: list, H: list) -> None:
    if any(d > 1 for d in _degrees(M).values()):
        raise StructureError("M is not a matching")
    if len(set(M)) != len(M) or len(set(H)) != len(H):
        raise StructureError("repeated edges")
    for u, v in M + H:
        if not (0 <= u < n and 0 <= v < n) or u == v:
            raise StructureError(f"edge {(u, v)} out of range")
    if any(d > 2 for d in _degrees(H).values()):
        raise StructureError("H has a vertex of degree > 2")
    if not is_m_feasible(n, H, []):
        raise StructureError("H must be a tour or a path collection")


def _heaviest_first(n: int, M: list, H: list, rw: Callable) -> list:
    """Heaviest-edge-first extraction with contraction of matched pairs.

    Repeatedly takes the heaviest remaining edge, extends it along ``H`` to
    the next matched vertices, keeps the path, discards the two edges that
    would overload its matched ends, and contracts the two matching edges it
    joined into one pseudo-edge.  A path whose ends are the two ends of one
    pseudo-edge would close a short cycle; then one end edge is dropped
    instead (or the edge itself when the path is that single edge).
    """
    Mset = set(M)
    P = [e for e in H if e in Mset]
    rest = set(e for e in H if e not in Mset)
    inc: dict[int, set] = {}
    for e in rest:
        for x in e:
            inc.setdefault(x, set()).add(e)
    mate: dict[int, int] = {}
    size: dict[frozenset, int] = {}
    for u, v in M:
        mate[u], mate[v] = v, u
        size[frozenset((u, v))] = 2

    def drop(e):
        rest.discard(e)
        for x in e:
            inc[x].discard(e)

    def other(e, x):
        return e[1] if e[0] == x else e[0]

    while rest:
        e = min(rest, key=lambda f: (-rw(f), f))
        path = [e[0], e[1]]
        pe = [e]
        for side in (0, 1):
            while True:
                end = path[0] if side == 0 else path[-1]
                if end in mate:
                    break
                nxt = sorted(f for f in inc[end] if f not in pe)
                if not nxt:
                    break
                f = nxt[0]
                o = other(f, end)
                if o in path:
                    break
                pe.insert(0, f) if side == 0 else pe.append(f)
                path.insert(0, o) if side == 0 else path.append(o)
        u0, uq = path[0], path[-1]
        if u0 in mate and mate[u0] == uq:
            z = frozenset((u0, uq))
            if len(path) + size[z] - 2 == n:
                P.extend(pe)
                break  # Hamiltonian cycle closed; nothing else fits
            if len(pe) == 1:
                drop(e)
                continue
            ends = [f for f in (pe[0], pe[-1]) if f != e]
            cut = min(ends, key=lambda f: (rw(f), f))
            for f in pe:
                drop(f)
            P.extend(f for f in pe if f != cut)
            if cut == pe[0]:
                keep, gone, new = u0, uq, path[1]
            else:
                keep, gone, new = uq, u0, path[-2]
            for f in list(inc.get(gone, ())):
                drop(f)
            del mate[gone]
            mate[keep], mate[new] = new, keep
            size[frozenset((keep, new))] = size.pop(z) + len(path) - 2
            continue
        for f in pe:
            drop(f)
        P.extend(pe)
        for x in (u0, uq):
            if x in mate:
                for f in list(inc.get(x, ())):
                    drop(f)
        if u0 in mate and uq in mate:
            x, y = mate.pop(u0), mate.pop(uq)
            s = size.pop(frozenset((u0, x))) + size.pop(frozenset((uq, y))) + len(path) - 2
            mate[x], mate[y] = y, x
            size[frozenset((x, y))] = s
    return sorted(P)


def _h_order(H: list) -> list:
    """Edges of ``H`` in traversal order, component by component."""
    adj: dict[int, list] = {}
    for e in H:
        for x in e:
            adj.setdefault(x, []).append(e)
    done, order = set(), []
    starts = sorted(x for x in adj if len(adj[x]) == 1) + sorted(adj)
    for s in starts:
        cur = s
        while True:
            nxt = [e for e in sorted(adj[cur]) if e not in done]
            if not nxt:
                break
            e = nxt[0]
            done.add(e)
            order.append(e)
            cur = e[1] if e[0] == cur else e[0]
    return order


def m_feasible_partition(n: int, M: Sequence, H: Sequence, budget: int = PARTITION_BUDGET):
    """Split ``H \\ M`` into three classes, each M-feasible together with ``H & M``.

    Backtracking along ``H`` with incremental degree and cycle checks.
    Returns the list of classes or ``None`` if none exists.
    """
    M = [_norm(e) for e in M]
    Mset = set(M)
    shared = [e for e in H if _norm(e) in Mset]
    R = [e for e in _h_order([_norm(e) for e in H]) if e not in Mset]
    mate: dict[int, int] = {}
    for u, v in M:
        mate[u], mate[v] = v, u
    base_deg = _degrees(M)
    adj = [dict() for _ in range(3)]
    deg = [dict(base_deg) for _ in range(3)]
    count = [len(Mset) for _ in range(3)]
    colour = [0] * len(R)
    nodes = 0

    def linked(c, a, b):
        # P u M has max degree 2, so a's component is a path or cycle: walk it
        prev, cur = None, a
        for _ in range(2 * n + 2):
            nb = list(adj[c].get(cur, ()))
            if cur in mate:
                nb.append(mate[cur])
            step = [x for x in nb if x != prev] if prev is not None else nb[:1]
            if prev is not None and len(step) > 1:
                step = step[:1]
            if not step:
                return False
            prev, cur = cur, step[0]
            if cur == b:
                return True
            if cur == a:
                return False
        return False

    def fits(c, e):
        a, b = e
        if deg[c].get(a, 0) >= 2 or deg[c].get(b, 0) >= 2:
            return False
        # both ends must be path ends; reaching b from a means a new cycle
        if deg[c].get(a, 0) and deg[c].get(b, 0) and linked(c, a, b):
            return count[c] + 1 == n
        return True

    def put(c, e, s):
        a, b = e
        for x, y in ((a, b), (b, a)):
            deg[c][x] = deg[c].get(x, 0) + s
            if s > 0:
                adj[c].setdefault(x, []).append(y)
            else:
                adj[c][x].remove(y)
        count[c] += s

    sys.setrecursionlimit(max(sys.getrecursionlimit(), 4 * len(R) + 100))

    def rec(i):
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise BudgetError("M-feasible partition search exceeded its budget")
        if i == len(R):
            return True
        for c in range(3):
            if fits(c, R[i]):
                put(c, R[i], 1)
                colour[i] = c
                if rec(i + 1):
                    return True
                put(c, R[i], -1)
        return False

    if not rec(0):
        return None
    classes = [[e for e, col in zip(R, colour) if col == c] + [_norm(e) for e in shared]
               for c in range(3)]
    return [sorted(c) for c in classes]


def m_feasible_extract(M: Iterable, H: Iterable, w, n: int | None = None,
                       w_rank: int = 0) -> list:
    """M-feasible subset of ``H`` keeping a third of ``H``'s weight in coordinate ``w_rank``.

    ``w`` is an undirected :class:`Instance` or a mapping from edges to
    weights (ints or vectors).  The heaviest-first procedure runs first; if it
    misses the bound, the heaviest of three M-feasible classes covering
    ``H \\ M`` is returned, which always keeps at least a third.

    Raises StructureError on malformed input.
    """
    M = sorted({_norm(e) for e in M})
    H = sorted({_norm(e) for e in H})
    if n is None:
        if not isinstance(w, Instance):
            raise StructureError("vertex count required")
        n = w.n
    _check_inputs(n, M, H)
    rw = _rank_fn(w, w_rank)
    total = sum(rw(e) for e in H)
    if not M:
        return list(H)
    P = _heaviest_first(n, M, H, rw)
    if is_m_feasible(n, P, M) and 3 * sum(rw(e) for e in P) >= total:
        return P
    classes = m_feasible_partition(n, M, H)
    if classes is None:
        raise BudgetError("no M-feasible partition found")
    best = max(classes, key=lambda c: (sum(rw(e) for e in c), [-x for e in c for x in e]))
    assert is_m_feasible(n, best, M) and 3 * sum(rw(e) for e in best) >= total
    return best


@dataclass
class TwoAlgResult:
    tour: list
    weight: tuple
    certificate: dict = field(default_factory=dict)


def two_alg(inst: Instance, mono_solver: Callable | None = None, w1: int = 0, w2: int = 1) -> TwoAlgResult:
    """Single tour good in two criteria at once.

    Takes a maximum-weight matching for criterion ``w1``, a good tour for
    ``w2`` from ``mono_solver(inst, coordinate)``, extracts an M-feasible part
    of that tour and patches both into one Hamiltonian cycle.  The tour keeps
    the whole matching and a third of the ``w2`` tour.
    """
    if inst.directed:
        raise StructureError("two_alg needs an undirected instance")
    if inst.k < 2:
        raise DomainError("two_alg needs two criteria")
    solver = mono_solver or (lambda I, c: mono_tsp_approx(I, c))
    M = max_weight_matching(inst, w1)
    H2 = sorted(solver(inst, w2))
    P = m_feasible_extract(M, H2, inst, inst.n, w2)
    union = sorted(set(P) | set(M))
    H = complete_to_tour(union, inst)
    W = inst.weights
    cert = {
        "w1_matching": sum(int(W[u, v, w1]) for u, v in M),
        "w2_mono_tour": sum(int(W[u, v, w2]) for u, v in H2),
        "w2_extracted": sum(int(W[u, v, w2]) for u, v in P),
    }
    w = weight_of(inst, H)
    cert["w1_tour"] = w[w1]
    cert["w2_tour"] = w[w2]
    cert["holds"] = (w[w1] >= cert["w1_matching"] and w[w2] >= cert["w2_extracted"]
                     and 3 * cert["w2_extracted"] >= cert["w2_mono_tour"])
    return TwoAlgResult(H, w, cert)


PENTAGON_SOLID = ((1, 2), (2, 3), (3, 4))
PENTAGON_DASHED = ((2, 4), (1, 4), (1, 3))


def pentagon_fixture() -> Instance:
    """Five-vertex bi-criteria instance with no single tour good in both criteria.

    Solid edges weigh (1, 0), dashed edges (0, 1), everything else (0, 0).
    Tours of weight (3, 0) and (0, 3) exist but no tour reaches 2 in both.
    """
    W = np.zeros((5, 5, 2), dtype=np.int64)
    for u, v in PENTAGON_SOLID:
        W[u, v, 0] = W[v, u, 0] = 1
    for u, v in PENTAGON_DASHED:
        W[u, v, 1] = W[v, u, 1] = 1
    return Instance(W, directed=False)


def alternating_matching(tour_order: Sequence[int], rw: Callable) -> list:
    """Heavier of the two alternating matchings of a tour.

    For odd length the lightest edge is dropped first so the rest is a path
    with an even number of edges.
    """
    n = len(tour_order)
    edges = [_norm((tour_order[j], tour_order[(j + 1) % n])) for j in range(n)]
    if n % 2:
        drop = min(range(n), key=lambda j: (rw(edges[j]), edges[j]))
        seq = edges[drop + 1:] + edges[:drop]
    else:
        seq = edges
    a, b = seq[0::2], seq[1::2]
    return sorted(max((a, b), key=lambda m: (sum(rw(e) for e in m), [-x for e in m for x in e])))


@dataclass
class UnionResult:
    success: bool
    edges: list
    rounds: int
    spread: Fraction
    weights: tuple = ()


def _order_of(H: Sequence, n: int) -> list:
    from .core import tour_sequence

    return tour_sequence(H, n, False)


def union_components(M1: Sequence, M2: Sequence) -> list:
    """Components of ``M1 | M2`` as edge lists (shared edges form their own component)."""
    es = sorted(set(M1) | set(M2))
    adj: dict[int, list] = {}
    for e in es:
        for x in e:
            adj.setdefault(x, []).append(e)
    seen, comps = set(), []
    for e in es:
        if e in seen:
            continue
        stack, comp = [e], []
        seen.add(e)
        while stack:
            f = stack.pop()
            comp.append(f)
            for x in f:
                for g in adj[x]:
                    if g not in seen:
                        seen.add(g)
                        stack.append(g)
        comps.append(sorted(comp))
    return comps


def spread(inst: Instance, H1: Sequence, H2: Sequence, w1: int = 0, w2: int = 1) -> Fraction:
    """Largest share of a tour's weight carried by a single edge, over both criteria."""
    W = inst.weights
    c = Fraction(0)
    for H, i in ((H1, w1), (H2, w2)):
        tot = sum(int(W[u, v, i]) for u, v in H)
        if tot:
            c = max(c, Fraction(max(int(W[u, v, i]) for u, v in H), tot))
    return c


def delta_threshold_ok(delta: Fraction, c: Fraction) -> bool:
    """``delta > 3c/8 + sqrt(c ln2 / 4)``, decided exactly with a bound on ln 2."""
    d = delta - Fraction(3, 8) * c
    _, ln2_hi = ln_bounds(2)
    return d > 0 and d * d > c * ln2_hi / 4


def matching_union_decompose(H1: Sequence, H2: Sequence, inst: Instance, delta, rng_seed: int = 0,
                             max_rounds: int = 64, w1: int = 0, w2: int = 1) -> UnionResult:
    """Path collection keeping ``3/8 - delta`` of both tours' weights (Las Vegas).

    Takes the heavier alternating matching of each tour, unites them, and in
    every even cycle of the union removes either the lightest edge of the
    first matching or the lightest edge of the second, chosen at random.
    """
    if inst.directed:
        raise StructureError("matching_union_decompose needs an undirected instance")
    dl = parse_fraction(delta)
    n = inst.n
    H1 = sorted(_norm(e) for e in H1)
    H2 = sorted(_norm(e) for e in H2)
    c = spread(inst, H1, H2, w1, w2)
    if not delta_threshold_ok(dl, c):
        raise DomainError(f"delta {dl} is below the threshold for spread {float(c):.4g}")
    W = inst.weights

    def r1(e):
        return int(W[e[0], e[1], w1])

    def r2(e):
        return int(W[e[0], e[1], w2])

    M1 = alternating_matching(_order_of(H1, n), r1)
    M2 = alternating_matching(_order_of(H2, n), r2)
    S1, S2 = set(M1), set(M2)
    comps = union_components(M1, M2)
    cycles = [comp for comp in comps if len(comp) >= 4 and all(d == 2 for d in _degrees(comp).values())]
    alpha = Fraction(3, 8) - dl
    t1 = sum(r1(e) for e in H1)
    t2 = sum(r2(e) for e in H2)
    rng = random.Random(rng_seed)
    union = sorted(S1 | S2)
    last = []
    for r in range(1, max_rounds + 1):
        removed = set()
        for comp in cycles:
            if rng.random() < 0.5:
                removed.add(min((e for e in comp if e in S1), key=lambda e: (r1(e), e)))
            else:
                removed.add(min((e for e in comp if e in S2), key=lambda e: (r2(e), e)))
        P = [e for e in union if e not in removed]
        a, b = sum(r1(e) for e in P), sum(r2(e) for e in P)
        last = P
        if a >= alpha * t1 and b >= alpha * t2:
            return UnionResult(True, P, r, c, (a, b))
    return UnionResult(False, last, max_rounds, c, ())
