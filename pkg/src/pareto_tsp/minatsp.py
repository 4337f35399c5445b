"""Iterated cycle covers for multi-criteria Min-ATSP under a gamma-triangle bound.

Each configuration holds a cycle cover on a shrinking vertex set plus the
accumulated weight ``w' = sum_j gamma**j * w(C_j)``.  Covers that are single
cycles are final; otherwise one representative per cycle is kept and a fresh
curve of cycle covers is computed on the representatives.  Configurations
with equal signatures of ``w'`` are thinned at every depth.  Final tours are
rebuilt by entering every cycle at its representative and shortcutting.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from ._numeric import log2_upper
from .core import (
    DomainError,
    Instance,
    StructureError,
    cycles_of,
    gamma_check,
    parse_fraction,
    validate,
    weight_of,
)
from .pareto import MIN, ParetoSet, cc_pareto_approx, filter_dominated, signature


@dataclass(frozen=True)
class Configuration:
    cover: tuple  # edges on original vertex ids
    weight: tuple  # accumulated w', exact Fractions
    vertices: tuple
    parent: "Configuration | None"
    depth: int

    def is_connected(self) -> bool:
        return len(cycles_of(self.cover, max(self.vertices) + 1, True)) == 1


def representative_vertices(cover: Iterable) -> list:
    """Smallest vertex of every cycle."""
    es = list(cover)
    n = max(max(e) for e in es) + 1
    return sorted(seq[0] for seq in cycles_of(es, n, True))


def eps_prime(eps, n: int) -> Fraction:
    """Signature resolution: ``eps**2 / log2(n)**3`` for n >= 4 (rounded down), else eps."""
    e = parse_fraction(eps)
    if n < 4:
        return e
    return e * e / log2_upper(n) ** 3


def _succ(edges: Iterable) -> dict:
    s = {}
    for u, v in edges:
        if u in s:
            raise StructureError("not a directed cycle cover")
        s[u] = v
    return s


def merge_and_shortcut(H: Iterable, C: Iterable) -> list:
    """Tour on the vertices of ``C`` from a tour ``H`` on one vertex per cycle.

    Visits the cycles in ``H``'s order, traversing each cycle from its
    representative and jumping from the cycle's last vertex to the next
    representative.  ``H`` may be empty when ``C`` is a single cycle.
    """
    C = list(C)
    cs = _succ(C)
    verts = sorted(cs)
    n = max(verts) + 1
    cyc = cycles_of(C, n, True)
    owner = {v: j for j, seq in enumerate(cyc) for v in seq}
    H = list(H)
    if not H:
        if len(cyc) != 1:
            raise StructureError("empty tour needs a single cycle")
        reps = [cyc[0][0]]
    else:
        hs = _succ(H)
        reps = [min(hs)]
        while hs[reps[-1]] != reps[0]:
            reps.append(hs[reps[-1]])
            if len(reps) > len(hs):
                raise StructureError("H is not a single cycle")
        if len(reps) != len(hs):
            raise StructureError("H is not a single cycle")
    if sorted(owner.get(r, -1) for r in reps) != list(range(len(cyc))):
        raise StructureError("H must visit exactly one vertex of every cycle")
    order = []
    for r in reps:
        v = r
        while True:
            order.append(v)
            v = cs[v]
            if v == r:
                break
    return sorted((order[j], order[(j + 1) % len(order)]) for j in range(len(order)))


def sparsify(configs: Sequence[Configuration], eps) -> list:
    """First configuration of every signature of ``w'`` (input order)."""
    seen, out = set(), []
    for c in configs:
        s = signature(c.weight, eps)
        if s not in seen:
            seen.add(s)
            out.append(c)
    return out


def signature_count_bound(inst: Instance, eps, gamma: Fraction) -> int:
    """Upper bound on the number of distinct signatures of any ``w'``.

    Positive coordinates lie between ``gamma**(D-1)`` (one unit at the deepest
    level) and ``n * w_max * sum_j gamma**j``; the ZERO symbol adds one value.
    """
    D = max(1, inst.n.bit_length() - 1)
    wmax = max(1, int(inst.weights.max()))
    lo = gamma ** (D - 1)
    hi = sum(gamma**j for j in range(D)) * inst.n * wmax
    l_lo, l_hi = signature((lo, hi), eps)
    return (l_hi - l_lo + 2) ** inst.k


def _cover_curve(inst: Instance, vertices: Sequence[int], eps: Fraction, cc_mode: str):
    sub = inst.induced(vertices)
    ps = cc_pareto_approx(sub, eps, MIN, cc_mode)
    out = []
    for edges, w in ps.items:
        mapped = tuple(sorted((vertices[a], vertices[b]) for a, b in edges))
        out.append((mapped, w))
    return out, ps.meta.get("guarantee", False)


def min_atsp(inst: Instance, eps, gamma=None, cc_mode: str = "exact") -> ParetoSet:
    """Approximate Pareto curve of minimum directed tours.

    Target ratio ``sum_{j < floor(log2 n)} gamma**j + eps``: at most
    ``log2 n + eps`` for gamma = 1 and ``1/(1 - gamma) + eps`` otherwise.
    The instance must satisfy the gamma-triangle inequality.
    """
    if not inst.directed:
        raise StructureError("min_atsp needs a directed instance")
    e = parse_fraction(eps)
    if e <= 0:
        raise DomainError("eps must be positive")
    g = parse_fraction(gamma) if gamma is not None else (inst.gamma or Fraction(1))
    witness = gamma_check(inst, g)
    if witness is not None:
        raise DomainError(f"instance violates the gamma-triangle inequality at {witness}")
    n = inst.n
    ep = eps_prime(e, n)
    D = max(1, n.bit_length() - 1)  # floor(log2 n)
    Q = signature_count_bound(inst, ep, g)
    guarantee = True
    curve, ok = _cover_curve(inst, list(range(n)), ep, cc_mode)
    guarantee &= ok
    layer = [Configuration(c, tuple(Fraction(x) for x in w), tuple(range(n)), None, 0)
             for c, w in curve]
    final: list[Configuration] = []
    sizes = [len(layer)]
    max_vertices = [n]
    j = 1
    while layer:
        nxt = []
        for idx, pi in enumerate(layer):
            if pi.is_connected():
                final.append(pi)
                continue
            reps = representative_vertices(pi.cover)
            curve, ok = _cover_curve(inst, reps, ep, cc_mode)
            guarantee &= ok
            scale = g**j
            for c, w in curve:
                acc = tuple(a + scale * x for a, x in zip(pi.weight, w))
                nxt.append((c, idx, Configuration(c, acc, tuple(reps), pi, j)))
        nxt.sort(key=lambda t: (t[0], t[1]))
        layer = sparsify([t[2] for t in nxt], ep)
        if layer:
            if j >= D:
                raise AssertionError(f"configurations at depth {j} >= floor(log2 n)")
            if len(layer) > Q:
                raise AssertionError("sparsified layer exceeds the signature bound")
            biggest = max(len(pi.vertices) for pi in layer)
            if biggest * 2**j > n:
                raise AssertionError("vertex set did not halve")
            max_vertices.append(biggest)
            sizes.append(len(layer))
        j += 1
    items, certs = [], []
    for pi in final:
        H: list = list(pi.cover)
        chain = [pi.depth]
        node = pi.parent
        while node is not None:
            H = merge_and_shortcut(H, node.cover)
            chain.append(node.depth)
            node = node.parent
        H = sorted(H)
        if not validate(H, "tour", inst):
            raise AssertionError("unwound tour is invalid")
        w = weight_of(inst, H)
        holds = all(x <= y for x, y in zip(w, pi.weight))
        if not holds:
            raise AssertionError("certificate w(H) <= w' violated on a validated instance")
        certs.append({"tour": H, "depths": chain, "accumulated": pi.weight, "weight": w})
        items.append((tuple(H), w))
    items.sort()
    ps = filter_dominated(items, MIN)
    ps.meta = {"algorithm": "min-atsp", "eps_prime": ep, "gamma": g, "Q": Q,
               "layer_sizes": sizes, "max_vertices": max_vertices, "depth_limit": D,
               "certificates": certs, "cc_mode": cc_mode, "guarantee": guarantee}
    return ps


def target_ratio(n: int, eps, gamma) -> Fraction:
    """``sum_{j < floor(log2 n)} gamma**j + eps``, the per-run guarantee."""
    g = parse_fraction(gamma)
    D = max(1, n.bit_length() - 1)
    return sum(g**j for j in range(D)) + parse_fraction(eps)
