"""Decompositions of light cycle covers.

A decomposition removes exactly one edge from every cycle.  For covers whose
edges are all small relative to the cover's total (in every criterion), a
decomposition keeping a ``1/2 - eps`` (directed) or ``2/3 - eps`` (undirected)
fraction of every criterion exists; this module finds one either by random
sampling or deterministically after shrinking the cover to a small kernel.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._numeric import ln_bounds, round_down
from .core import (
    BudgetError,
    DomainError,
    Edge,
    Instance,
    LightnessError,
    StructureError,
    cycle_edges,
    cycles_of,
    parse_fraction,
)

BRUTE_FORCE_LIMIT = 10**6
NODE_BUDGET = 10**6


@dataclass(frozen=True)
class WeightedCycleCover:
    """A cycle cover with a weight vector on every edge.

    ``cycles`` lists each cycle's edges in traversal order.  The cover need not
    belong to an :class:`Instance` (fixtures define only the cover edges).
    """

    directed: bool
    k: int
    cycles: tuple
    weights: Mapping

    def __post_init__(self):
        seen = set()
        lo = 2 if self.directed else 3
        for cyc in self.cycles:
            if len(cyc) < lo:
                raise StructureError(f"cycle {cyc} shorter than {lo}")
            for (a, b), (c, d) in zip(cyc, cyc[1:] + cyc[:1]):
                if self.directed and b != c:
                    raise StructureError(f"cycle {cyc} is not a closed walk")
                if not self.directed and not ({a, b} & {c, d}):
                    raise StructureError(f"cycle {cyc} is not a closed walk")
            verts = {v for e in cyc for v in e}
            if len(verts) != len(cyc) or verts & seen:
                raise StructureError("cycles must be simple and vertex-disjoint")
            seen |= verts
            for e in cyc:
                w = self.weights.get(e)
                if w is None or len(w) != self.k or any(x < 0 for x in w):
                    raise StructureError(f"edge {e} needs {self.k} nonnegative weights")

    @classmethod
    def from_edges(cls, edges: Iterable[Edge], weights: Mapping, directed: bool,
                   k: int | None = None) -> "WeightedCycleCover":
        es = list(edges)
        verts = sorted({v for e in es for v in e})
        index = {v: j for j, v in enumerate(verts)}
        local = [(index[a], index[b]) for a, b in es]
        if not directed:
            local = [(min(a, b), max(a, b)) for a, b in local]
        cycles = []
        deg = {}
        for a, b in local:
            deg[a] = deg.get(a, 0) + 1
            deg[b] = deg.get(b, 0) + 1
        if any(d != 2 for d in deg.values()) or len(deg) != len(verts):
            raise StructureError("edge set is not a cycle cover of its vertices")
        for seq in cycles_of(local, len(verts), directed):
            cyc = []
            for a, b in cycle_edges(seq, directed):
                u, v = verts[a], verts[b]
                cyc.append((u, v) if directed or u < v else (v, u))
            cycles.append(tuple(cyc))
        wmap = {}
        for cyc in cycles:
            for e in cyc:
                w = weights.get(e)
                if w is None and not directed:
                    w = weights.get((e[1], e[0]))
                if w is None:
                    raise StructureError(f"no weight for edge {e}")
                wmap[e] = tuple(int(x) for x in w)
        if k is None:
            k = len(next(iter(wmap.values())))
        return cls(directed, k, tuple(cycles), wmap)

    @classmethod
    def from_instance(cls, inst: Instance, edges: Iterable[Edge], weights=None) -> "WeightedCycleCover":
        """Cover ``edges`` of ``inst``, optionally under replacement weights ``(n, n, k)``."""
        W = inst.weights if weights is None else np.asarray(weights)
        es = [inst.edge(u, v) for u, v in edges]
        wmap = {e: tuple(int(x) for x in W[e[0], e[1]]) for e in es}
        return cls.from_edges(es, wmap, inst.directed, W.shape[2])

    def edges(self) -> list:
        return [e for cyc in self.cycles for e in cyc]

    def vertices(self) -> list:
        return sorted({v for e in self.edges() for v in e})

    def total(self) -> tuple:
        tot = [0] * self.k
        for e in self.edges():
            for i, x in enumerate(self.weights[e]):
                tot[i] += x
        return tuple(tot)

    def weight_of(self, edges: Iterable[Edge]) -> tuple:
        tot = [0] * self.k
        for e in edges:
            for i, x in enumerate(self.weights[e]):
                tot[i] += x
        return tuple(tot)

    def to_json(self) -> dict:
        verts = self.vertices()
        n = max(verts) + 1 if verts else 0
        mat = [[None] * n for _ in range(n)]
        for (u, v), w in sorted(self.weights.items()):
            mat[u][v] = list(w)
            if not self.directed:
                mat[v][u] = list(w)
        return {"orientation": "directed" if self.directed else "undirected",
                "n": n, "k": self.k, "gamma": None, "weights": mat,
                "standalone_cycle_cover": True}

    @classmethod
    def from_json(cls, data: dict) -> "WeightedCycleCover":
        directed = data["orientation"] == "directed"
        rows = data["weights"]
        wmap = {}
        for u, row in enumerate(rows):
            for v, w in enumerate(row):
                if w is None or (not directed and v < u):
                    continue
                if u == v:
                    raise StructureError("diagonal entries must be null")
                wmap[(u, v)] = tuple(int(x) for x in w)
        return cls.from_edges(list(wmap), wmap, directed, int(data["k"]))


@dataclass(frozen=True)
class Decomposition:
    edges: tuple
    removed: tuple
    weight: tuple
    method: str
    rounds: int = 0


def _eps(eps) -> Fraction:
    e = parse_fraction(eps)
    if not 0 < e < Fraction(1, 2):
        raise DomainError("eps must lie in (0, 1/2)")
    return e


def eta(k: int, eps) -> Fraction:
    """Rational lower bound on ``eps**2 / (2 ln k)``.

    Uses a certified upper bound on ``ln k`` and rounds down, so any
    lightness test built on it is conservative.
    """
    if k < 2:
        raise DomainError("eta is defined for k >= 2")
    e = _eps(eps)
    _, ln_hi = ln_bounds(k)
    return round_down(e * e / (2 * ln_hi))


def ratio_for(directed: bool, eps) -> Fraction:
    """Guaranteed kept fraction: ``1/2 - eps`` directed, ``2/3 - eps`` undirected."""
    e = parse_fraction(eps)
    return (Fraction(1, 2) if directed else Fraction(2, 3)) - e


def is_light(C: WeightedCycleCover, gamma_light) -> bool:
    """True iff ``gamma_light * w(e) <= w(C)`` for every edge and criterion."""
    g = parse_fraction(gamma_light)
    if g < 1:
        raise DomainError("lightness parameter must be >= 1")
    tot = C.total()
    return all(g * x <= t for e in C.edges() for x, t in zip(C.weights[e], tot))


def _meets(C: WeightedCycleCover, kept_w: Sequence, alpha: Fraction) -> bool:
    return all(x >= alpha * t for x, t in zip(kept_w, C.total()))


def _result(C: WeightedCycleCover, removed: Sequence, method: str, rounds: int = 0) -> Decomposition:
    rem = set(removed)
    kept = tuple(sorted(e for e in C.edges() if e not in rem))
    return Decomposition(kept, tuple(sorted(rem)), C.weight_of(kept), method, rounds)


def _lightest_per_cycle(C: WeightedCycleCover) -> list:
    return [min(cyc, key=lambda e: (C.weights[e][0], e)) for cyc in C.cycles]


def _require_light(C: WeightedCycleCover, eps) -> Fraction:
    et = eta(C.k, eps)
    if not is_light(C, 1 / et):
        raise LightnessError(
            f"cycle cover is not 1/eta-light (eta <= {float(et):.6g}); "
            "route heavy edges through the enumeration branch")
    return et


def decompose_randomized(C: WeightedCycleCover, eps, rng_seed: int = 0,
                         max_rounds: int = 64) -> Decomposition:
    """Las Vegas decomposition: drop one uniformly random edge per cycle until
    the bound holds, falling back to the deterministic method after
    ``max_rounds`` attempts.

    With ``k = 1`` the lightest edge of every cycle is dropped instead, which
    keeps at least 1/2 (directed) or 2/3 (undirected) of the weight.
    """
    e = _eps(eps)
    if C.k == 1:
        return _result(C, _lightest_per_cycle(C), "lightest")
    _require_light(C, e)
    alpha = ratio_for(C.directed, e)
    rng = random.Random(rng_seed)
    for r in range(1, max_rounds + 1):
        removed = [rng.choice(cyc) for cyc in C.cycles]
        res = _result(C, removed, "randomized", r)
        if _meets(C, res.weight, alpha):
            return res
    det = decompose_deterministic(C, e)
    return Decomposition(det.edges, det.removed, det.weight, "randomized-fallback", max_rounds)


@dataclass(frozen=True)
class NormalizedCover:
    """Cover split into cycles of equal length (2 directed, 3 undirected).

    ``slots[c][j]`` is the weight of position ``j`` of normalized cycle ``c``
    and ``origin[c][j]`` the edge it came from, or ``None`` for padding.
    """

    size: int
    slots: tuple
    origin: tuple
    parent: tuple  # index of the original cycle of each normalized cycle


def normalize(C: WeightedCycleCover) -> NormalizedCover:
    """Cut every cycle into consecutive pieces of ``size`` edges, padding the
    last piece with zero-weight edges; total weight is unchanged."""
    size = 2 if C.directed else 3
    zero = (0,) * C.k
    slots, origin, parent = [], [], []
    for ci, cyc in enumerate(C.cycles):
        for start in range(0, len(cyc), size):
            piece = list(cyc[start:start + size])
            pad = size - len(piece)
            slots.append(tuple(C.weights[e] for e in piece) + (zero,) * pad)
            origin.append(tuple(piece) + (None,) * pad)
            parent.append(ci)
    return NormalizedCover(size, tuple(slots), tuple(origin), tuple(parent))


def _choices_matrix(slot_w: Sequence[np.ndarray]) -> np.ndarray:
    """Removed weight of every combination, first cycle most significant."""
    acc = np.zeros((1, slot_w[0].shape[1]), dtype=slot_w[0].dtype)
    for s in slot_w:
        acc = (acc[:, None, :] + s[None, :, :]).reshape(-1, s.shape[1])
    return acc


def _min_ratio(kept: Sequence, total: Sequence) -> Fraction:
    vals = [Fraction(x, t) for x, t in zip(kept, total) if t > 0]
    return min(vals) if vals else Fraction(1)


def _best_combination(slot_w: Sequence[Sequence[tuple]], total: Sequence) -> tuple:
    """Exhaustive best choice (one slot per cycle) by kept min-ratio.

    Returns ``(choice, ratio)``; ties go to the lexicographically smallest
    choice tuple.
    """
    count = 1
    for s in slot_w:
        count *= len(s)
    if count > BRUTE_FORCE_LIMIT:
        raise BudgetError(f"{count} decompositions exceed the exhaustive budget")
    big = max((x for s in slot_w for w in s for x in w), default=0) * len(slot_w) >= 2**62
    dt = object if big else np.int64
    arrs = [np.array(s, dtype=dt).reshape(len(s), -1) for s in slot_w]
    removed = _choices_matrix(arrs)
    tot = np.array(total, dtype=dt)
    active = [i for i, t in enumerate(total) if t > 0]
    if not active:
        return tuple(0 for _ in slot_w), Fraction(1)
    approx = np.min((tot[active] - removed[:, active]).astype(float)
                    / tot[active].astype(float), axis=1)
    top = approx.max()
    cands = np.flatnonzero(approx >= top - 1e-9 * max(1.0, abs(top)))
    best = None
    for j in cands:
        r = _min_ratio([int(total[i]) - int(removed[j, i]) for i in range(len(total))], total)
        if best is None or r > best[1]:
            best = (int(j), r)
    idx, ratio = best
    choice = []
    for s in reversed(slot_w):
        choice.append(idx % len(s))
        idx //= len(s)
    return tuple(reversed(choice)), ratio


def best_decomposition_bruteforce(C: WeightedCycleCover) -> tuple:
    """Decomposition maximizing ``min_i w_i(P) / w_i(C)`` over all choices.

    Criteria with ``w_i(C) = 0`` count as ratio 1.  Ties are broken by the
    lexicographically smallest tuple of removed edges.
    """
    ordered = [sorted(cyc) for cyc in C.cycles]
    slot_w = [[C.weights[e] for e in cyc] for cyc in ordered]
    choice, ratio = _best_combination(slot_w, C.total())
    removed = [cyc[j] for cyc, j in zip(ordered, choice)]
    return _result(C, removed, "bruteforce"), ratio


def _merge_kernel(norm: NormalizedCover, total: Sequence, et: Fraction):
    """Greedily merge normalized cycles positionally while each merged cycle
    stays within ``eta * w(C)`` in every active criterion.

    Returns ``(slot_sums, members)`` for the kernel cycles.
    """
    p, q = et.numerator, et.denominator
    active = [i for i, t in enumerate(total) if t > 0]
    kk = len(active)
    limit = [p * total[i] for i in active]
    top = max((x for s in norm.slots for w in s for x in w), default=0)
    big = (top * len(norm.slots) + 1) * q >= 2**62 or max(limit, default=0) >= 2**62
    dt = object if big else np.int64
    slots = [np.array([[w[i] for i in active] for w in s], dtype=dt).reshape(norm.size, kk)
             for s in norm.slots]
    members = [[c] for c in range(len(slots))]
    sums = [s.sum(axis=0) for s in slots]
    lim = np.array(limit, dtype=dt)

    def key(j):
        return (max((Fraction(int(sums[j][a]), total[active[a]]) for a in range(kk)),
                    default=Fraction(0)), members[j][0])

    while len(slots) > 1:
        order = sorted(range(len(slots)), key=key)
        S = np.array(sums, dtype=dt).reshape(len(sums), kk)
        merged = False
        for r, a in enumerate(order):
            rest = np.array(order[r + 1:], dtype=np.int64)
            if len(rest) == 0:
                break
            ok = ((S[rest] + S[a]) * q <= lim).all(axis=1)
            hits = np.flatnonzero(ok)
            if len(hits):
                b = int(rest[hits[0]])
                slots[a] = slots[a] + slots[b]
                sums[a] = sums[a] + sums[b]
                members[a] = members[a] + members[b]
                del slots[b], sums[b], members[b]
                merged = True
                break
        if not merged:
            break
    full_slots = []
    for mem in members:
        acc = [[0] * len(total) for _ in range(norm.size)]
        for c in mem:
            for j, w in enumerate(norm.slots[c]):
                for i, x in enumerate(w):
                    acc[j][i] += x
        full_slots.append([tuple(row) for row in acc])
    return full_slots, members


def _dfs_kernel(slot_w: Sequence, total: Sequence, alpha: Fraction, budget: int):
    """Exact depth-first search for a choice whose removed weight stays within
    ``(1 - alpha) * w(C)`` in every criterion."""
    k = len(total)
    cap_num = 1 - alpha
    active = [i for i in range(k) if total[i] > 0]
    caps = [cap_num * total[i] for i in active]
    order = sorted(range(len(slot_w)),
                   key=lambda c: -max((Fraction(max(w[i] for w in slot_w[c]), total[i])
                                       for i in active), default=0))
    # suffix of the smallest removable weight per criterion, for pruning
    suffix = [[0] * len(active) for _ in range(len(order) + 1)]
    for d in range(len(order) - 1, -1, -1):
        c = order[d]
        for a, i in enumerate(active):
            suffix[d][a] = suffix[d + 1][a] + min(w[i] for w in slot_w[c])
    choice = [0] * len(slot_w)
    removed = [0] * len(active)
    nodes = 0

    def rec(d):
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise BudgetError("kernel search exceeded its node budget")
        if d == len(order):
            return True
        c = order[d]
        opts = []
        for j, w in enumerate(slot_w[c]):
            loads = [removed[a] + w[i] for a, i in enumerate(active)]
            if all(loads[a] + suffix[d + 1][a] <= caps[a] for a in range(len(active))):
                score = max((Fraction(loads[a]) / caps[a] if caps[a] else Fraction(0)
                             for a in range(len(active))), default=Fraction(0))
                opts.append((score, j))
        for _, j in sorted(opts):
            w = slot_w[c][j]
            for a, i in enumerate(active):
                removed[a] += w[i]
            choice[c] = j
            if rec(d + 1):
                return True
            for a, i in enumerate(active):
                removed[a] -= w[i]
        return False

    if not rec(0):
        return None
    return tuple(choice)


def decompose_deterministic(C: WeightedCycleCover, eps, node_budget: int = NODE_BUDGET,
                            brute_limit: int = BRUTE_FORCE_LIMIT) -> Decomposition:
    """Deterministic decomposition through normalization and kernel merging.

    The kernel (at most ``2k/eta`` cycles) is searched exhaustively when it has
    at most ``brute_limit`` decompositions, otherwise by an exact pruned
    depth-first search limited to ``node_budget`` nodes.
    """
    e = _eps(eps)
    if C.k == 1:
        return _result(C, _lightest_per_cycle(C), "lightest")
    et = _require_light(C, e)
    alpha = ratio_for(C.directed, e)
    total = C.total()
    if not any(total):
        return _result(C, [cyc[0] for cyc in C.cycles], "deterministic")
    norm = normalize(C)
    kernel, members = _merge_kernel(norm, total, et)
    count = norm.size ** len(kernel)
    if count <= brute_limit:
        choice, _ = _best_combination(kernel, total)
        method = "deterministic-exhaustive"
    else:
        choice = _dfs_kernel(kernel, total, alpha, node_budget)
        method = "deterministic-search"
        if choice is None:
            raise BudgetError("kernel search found no decomposition meeting the bound")
    removed_by_cycle: dict[int, list] = {}
    for g, j in zip(members, choice):
        for c in g:
            e_ = norm.origin[c][j]
            if e_ is not None:
                removed_by_cycle.setdefault(norm.parent[c], []).append(e_)
    removed = []
    for ci, cyc in enumerate(C.cycles):
        cands = removed_by_cycle.get(ci)
        if not cands:
            raise StructureError("lifting lost a cycle")  # first piece never pads
        # removing a subset is enough; put the others back
        removed.append(min(cands, key=lambda x: (sum(C.weights[x]), x)))
    res = _result(C, removed, method)
    if not _meets(C, res.weight, alpha):
        raise BudgetError("kernel decomposition failed the weight bound")
    return res


def kernel_size(C: WeightedCycleCover, eps) -> int:
    """Number of cycles left after greedy merging (diagnostic)."""
    et = _require_light(C, eps)
    total = C.total()
    return len(_merge_kernel(normalize(C), total, et)[0])


def tournament_fixture(k: int, eps, directed: bool = True) -> WeightedCycleCover:
    """Knockout-tournament cover on which no decomposition is good everywhere.

    Each match is a cycle with one edge per team; a team's edge carries
    ``1 - eps`` on the team's criteria.  Weights are scaled by the denominator
    of ``eps`` to stay integral.  Directed: ``k = 2**l`` (l >= 2), pairwise
    rounds then three finals.  Undirected: ``k = 3**l`` (l >= 1), three-team
    rounds then two finals.
    """
    e = parse_fraction(eps)
    if not 0 < e < 1:
        raise DomainError("eps must lie in (0, 1)")
    base = 2 if directed else 3
    l, m = 0, 1
    while m < k:
        m *= base
        l += 1
    if m != k or (directed and l < 2) or (not directed and l < 1):
        raise DomainError(f"k must be {'2**l with l >= 2' if directed else '3**l with l >= 1'}")
    prize = e.denominator - e.numerator
    matches = []
    for r in range(1, l):
        size = base ** (r - 1)
        for start in range(0, k, size * base):
            matches.append([tuple(range(start + t * size, start + (t + 1) * size))
                            for t in range(base)])
    finals = 3 if directed else 2
    size = k // base
    teams = [tuple(range(t * size, (t + 1) * size)) for t in range(base)]
    matches.extend([teams] * finals)
    cycles, wmap, v = [], {}, 0
    for teams in matches:
        verts = list(range(v, v + base))
        v += base
        cyc = cycle_edges(verts, directed)
        if not directed:
            # put the team edges in traversal order (0,1),(1,2),(0,2)
            cyc = [(verts[0], verts[1]), (verts[1], verts[2]), (verts[0], verts[2])]
        for edge, team in zip(cyc, teams):
            wmap[edge] = tuple(prize if i in team else 0 for i in range(k))
        cycles.append(tuple(cyc))
    return WeightedCycleCover(directed, k, tuple(cycles), wmap)
