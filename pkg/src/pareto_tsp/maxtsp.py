"""Recursive approximate Pareto curves for multi-criteria Max-ATSP and Max-STSP.

Both algorithms enumerate small path covers ``K`` that absorb heavy edges,
then either decompose a light cycle cover of the remaining weights or recurse
with one criterion fewer.  The enumeration constants that make the guarantee
formal are astronomically large, so the cardinality of ``K`` and the grid of
truncation bounds are capped; the caps are reported in the result metadata.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product
from math import ceil, floor
from typing import Iterable, Sequence

import numpy as np

from ._numeric import ln_bounds
from .core import (
    PATH_COLLECTION,
    DomainError,
    Instance,
    StructureError,
    complete_to_tour,
    derive_seed,
    parse_fraction,
    paths_of,
    thread_count,
    validate,
    weight_of,
)
from .decompose import WeightedCycleCover, decompose_randomized, eta, is_light
from .pareto import MAX, ParetoSet, cc_pareto_approx, filter_dominated
from .solver import mono_tsp_approx

__all__ = [
    "beta_truncate", "f_bound", "g_bound", "h_bound", "enumerate_k_sets",
    "contract_directed", "zero_out", "max_atsp", "max_stsp", "complete_to_tour",
    "ContractionMap", "beta_grid", "check_eps",
]

DEFAULT_MAX_K_CARD = 2
DEFAULT_MAX_BETA_GRID = 12


def beta_truncate(weights, beta: Sequence[int]) -> np.ndarray:
    """Zero every edge whose weight exceeds ``beta`` in some coordinate."""
    W = np.asarray(weights)
    b = np.array([int(x) for x in beta], dtype=W.dtype if W.dtype != object else object)
    over = (W > b).any(axis=2)
    out = W.copy()
    out[over] = 0
    return out


def zero_out(weights, L: Iterable[int]) -> np.ndarray:
    """Zero every edge touching a vertex of ``L``."""
    W = np.array(weights)
    idx = sorted(set(L))
    if idx:
        W[idx, :, :] = 0
        W[:, idx, :] = 0
    return W


def _log_ratio_ceil(k: int, eps, head: Fraction) -> int:
    """``ceil(ln(head + eps) / ln(1 - eta + eps**3))`` rounded conservatively up."""
    e = parse_fraction(eps)
    et = eta(k, e)
    inner = 1 - et + e**3
    top = head + e
    if not (0 < top < 1) or not (0 < inner < 1):
        raise DomainError("both logarithms must be negative (need eta > eps^3 and eps small)")
    num_lo, _ = ln_bounds(top)
    _, den_hi = ln_bounds(inner)
    if den_hi >= 0:
        raise DomainError("cannot certify ln(1 - eta + eps^3) < 0")
    return ceil(num_lo / den_hi)  # |num| upper over |den| lower


def f_bound(k: int, eps) -> int:
    """Cardinality bound for the directed heavy-edge enumeration."""
    return k * _log_ratio_ceil(k, eps, Fraction(1, 2))


def g_bound(k: int, eps) -> int:
    return k * _log_ratio_ceil(k, eps, Fraction(1, 6))


def h_bound(k: int, eps) -> int:
    """Cardinality bound for the undirected enumeration: ``2 h' g`` with ``h' = floor(2kg/eps)``."""
    e = parse_fraction(eps)
    g = g_bound(k, e)
    hp = floor(2 * k * g / e)
    return 2 * hp * g


def check_eps(k: int, eps) -> Fraction:
    """Reject ``eps`` outside the range the recursion's analysis covers."""
    e = parse_fraction(eps)
    if e <= 0:
        raise DomainError("eps must be positive")
    if k >= 3:
        _, ln_hi = ln_bounds(k)
        if 2 * e * ln_hi >= 1:
            raise DomainError(f"eps must be below 1/(2 ln {k})")
    elif k == 2:
        half = e / 2
        if half >= Fraction(1, 2) or eta(2, half) <= half**3:
            raise DomainError("eps too large for k = 2 (need eta(2, eps/2) > (eps/2)^3)")
    return e


class KSets:
    """Iterable of path covers ``K`` in increasing size, lexicographic within a size.

    ``truncated`` is True when ``cap`` is below ``size_bound``.
    """

    def __init__(self, inst: Instance, size_bound: int | None, cap: int):
        self.inst = inst
        self.size_bound = size_bound
        self.cap = cap if size_bound is None else min(cap, size_bound)
        self.truncated = size_bound is None or cap < size_bound

    def __iter__(self):
        edges = self.inst.edges()
        for r in range(0, self.cap + 1):
            for K in combinations(edges, r):
                if r <= 1 or validate(K, PATH_COLLECTION, self.inst):
                    yield K


def enumerate_k_sets(inst: Instance, size_bound: int | None, budget: int = DEFAULT_MAX_K_CARD) -> KSets:
    return KSets(inst, size_bound, budget)


@dataclass(frozen=True)
class ContractionMap:
    """Reduced vertex ``j`` stands for the original vertex chain ``chains[j]``."""

    K: tuple
    chains: tuple

    def lift(self, reduced_edges: Iterable) -> list:
        """Original edges for reduced edges, plus every edge of ``K``."""
        out = list(self.K)
        for a, b in reduced_edges:
            out.append((self.chains[a][-1], self.chains[b][0]))
        return sorted(out)


def contract_directed(inst: Instance, K: Iterable) -> tuple:
    """Contract the directed path cover ``K``.

    Each maximal path becomes one vertex with the in-edges of its first vertex
    and the out-edges of its last.  If ``K`` is a Hamiltonian path the reduced
    instance is ``None``.
    """
    if not inst.directed:
        raise StructureError("contract_directed needs a directed instance")
    K = tuple(sorted(K))
    if not validate(K, PATH_COLLECTION, inst):
        raise StructureError("K must be a path cover")
    chains = tuple(tuple(p) for p in paths_of(K, inst.n, True))
    cmap = ContractionMap(K, chains)
    if len(chains) == 1:
        return None, cmap
    last = [c[-1] for c in chains]
    first = [c[0] for c in chains]
    W = inst.weights[np.ix_(last, first)]
    return Instance(W, True), cmap


def beta_grid(weights, cap: int = DEFAULT_MAX_BETA_GRID) -> tuple:
    """Candidate bound vectors: per coordinate the distinct edge values and 0,
    thinned to ``cap`` values evenly spaced by rank (the maximum always kept).

    Returns ``(grid, truncated)``.
    """
    W = np.asarray(weights)
    n = W.shape[0]
    off = ~np.eye(n, dtype=bool)
    axes, truncated = [], False
    for i in range(W.shape[2]):
        vals = sorted({0} | {int(x) for x in W[:, :, i][off]})
        if len(vals) > cap:
            truncated = True
            m = len(vals)
            picks = sorted({round(j * (m - 1) / (cap - 1)) for j in range(cap)}) if cap > 1 else [m - 1]
            vals = [vals[j] for j in picks]
        axes.append(vals)
    return list(product(*axes)), truncated


def _light_covers(inst: Instance, Wb: np.ndarray, eps: Fraction, et: Fraction, cc_mode: str):
    """Cycle covers from the approximate curve of ``Wb`` that are ``1/eta``-light."""
    n = inst.n
    if n * et < 1 and Wb.any():
        # a cover has n edges, so a positive criterion has an edge above eta * total;
        # and the curve only holds covers of positive weight once any edge is positive
        return []
    sub = inst.with_weights(Wb)
    ps = cc_pareto_approx(sub, eps, MAX, cc_mode)
    out = []
    for edges, _ in ps.items:
        C = WeightedCycleCover.from_instance(sub, edges)
        if is_light(C, 1 / et):
            out.append(C)
    return out


def _options(max_k_cardinality, max_beta_grid, cc_mode, seed):
    return dict(max_k_cardinality=max_k_cardinality, max_beta_grid=max_beta_grid,
                cc_mode=cc_mode, seed=seed)


def _atsp_rec(inst: Instance, eps: Fraction, opts: dict, flags: dict, path: tuple) -> list:
    if inst.k == 1:
        return [tuple(mono_tsp_approx(inst, 0))]
    e2 = eps / 2
    et = eta(inst.k, e2)
    try:
        bound = f_bound(inst.k, e2)
    except DomainError:
        bound = None
    ksets = enumerate_k_sets(inst, bound, opts["max_k_cardinality"])
    flags["k_sets"] = flags.get("k_sets", False) or ksets.truncated

    def branch(K):
        out = []
        reduced, cmap = contract_directed(inst, K)
        if reduced is None:
            chain = cmap.chains[0]
            return [tuple(sorted(list(K) + [(chain[-1], chain[0])]))]
        grid, cut = beta_grid(reduced.weights, opts["max_beta_grid"])
        if cut:
            flags["beta_grid"] = True
        seen = set()
        for beta in grid:
            Wb = beta_truncate(reduced.weights, beta)
            key = Wb.tobytes()
            if key in seen:
                continue
            seen.add(key)
            for C in _light_covers(reduced, Wb, e2, et, opts["cc_mode"]):
                s = derive_seed(opts["seed"], path, K, beta)
                P = decompose_randomized(C, e2, s)
                out.append(tuple(complete_to_tour(cmap.lift(P.edges), inst)))
        for i in range(inst.k):
            sub = reduced.drop_objective(i)
            for H in _atsp_rec(sub, e2, opts, flags, path + (K, i)):
                out.append(tuple(cmap.lift(H)))
        return out

    tours = []
    if not path and opts.get("threads", 1) > 1:
        with ThreadPoolExecutor(opts["threads"]) as ex:
            for chunk in ex.map(branch, list(ksets)):
                tours.extend(chunk)
    else:
        for K in ksets:
            tours.extend(branch(K))
    return sorted(set(tours))


def _result(inst: Instance, tours: list, flags: dict, extra: dict) -> ParetoSet:
    items = [(t, weight_of(inst, t)) for t in sorted(set(tours))]
    ps = filter_dominated(items, MAX)
    truncated = {name: bool(flags.get(name, False)) for name in ("k_sets", "beta_grid")}
    ps.meta = {"truncated": truncated, "candidates": len(items), **extra}
    return ps


def max_atsp(inst: Instance, eps, fail_prob=0, *, max_k_cardinality: int = DEFAULT_MAX_K_CARD,
             max_beta_grid: int = DEFAULT_MAX_BETA_GRID, cc_mode: str = "exact",
             seed: int = 0, threads: int | None = None) -> ParetoSet:
    """Approximate Pareto curve of directed tours (target ratio ``1/2 - eps``).

    ``fail_prob`` only matters for a randomized cycle-cover oracle; the exact
    mode cannot fail and the scalarized mode carries no guarantee anyway.
    """
    if not inst.directed:
        raise StructureError("max_atsp needs a directed instance")
    e = check_eps(inst.k, eps) if inst.k >= 2 else parse_fraction(eps)
    opts = _options(max_k_cardinality, max_beta_grid, cc_mode, seed)
    opts["threads"] = thread_count() if threads is None else threads
    flags: dict = {}
    tours = _atsp_rec(inst, e, opts, flags, ())
    extra = {"algorithm": "max-atsp", "cc_mode": cc_mode,
             "guarantee": cc_mode == "exact" and not any(flags.values())}
    if inst.k >= 2:
        try:
            extra["k_bound"] = f_bound(inst.k, e / 2)
        except DomainError:
            extra["k_bound"] = None
    return _result(inst, tours, flags, extra)


def _nonzero_edges(W: np.ndarray, edges: Iterable) -> list:
    return [(u, v) for u, v in edges if W[u, v].any()]


def _stsp_rec(inst: Instance, eps: Fraction, opts: dict, flags: dict, path: tuple) -> list:
    if inst.k == 1:
        return [tuple(mono_tsp_approx(inst, 0))]
    e3 = eps / 3
    et = eta(inst.k, e3)
    try:
        bound = h_bound(inst.k, e3)
    except DomainError:
        bound = None
    ksets = enumerate_k_sets(inst, bound, opts["max_k_cardinality"])
    flags["k_sets"] = flags.get("k_sets", False) or ksets.truncated

    def branch(K):
        out = []
        L = sorted({v for e in K for v in e})
        WL = zero_out(inst.weights, L)
        grid, cut = beta_grid(WL, opts["max_beta_grid"])
        if cut:
            flags["beta_grid"] = True
        seen = set()
        for beta in grid:
            Wb = beta_truncate(WL, beta)
            key = Wb.tobytes()
            if key in seen:
                continue
            seen.add(key)
            for C in _light_covers(inst, Wb, e3, et, opts["cc_mode"]):
                s = derive_seed(opts["seed"], path, K, beta)
                P = decompose_randomized(C, e3, s)
                keep = _nonzero_edges(Wb, P.edges)
                out.append(tuple(complete_to_tour(sorted(set(keep) | set(K)), inst)))
        zeroed = inst.with_weights(WL)
        for i in range(inst.k):
            sub = zeroed.drop_objective(i)
            for H in _stsp_rec(sub, e3, opts, flags, path + (K, i)):
                keep = _nonzero_edges(sub.weights, H)
                out.append(tuple(complete_to_tour(sorted(set(keep) | set(K)), inst)))
        return out

    tours = []
    if not path and opts.get("threads", 1) > 1:
        with ThreadPoolExecutor(opts["threads"]) as ex:
            for chunk in ex.map(branch, list(ksets)):
                tours.extend(chunk)
    else:
        for K in ksets:
            tours.extend(branch(K))
    return sorted(set(tours))


def max_stsp(inst: Instance, eps, fail_prob=0, *, max_k_cardinality: int = DEFAULT_MAX_K_CARD,
             max_beta_grid: int = DEFAULT_MAX_BETA_GRID, cc_mode: str = "exact",
             seed: int = 0, threads: int | None = None) -> ParetoSet:
    """Approximate Pareto curve of undirected tours (target ratio ``2/3 - eps``)."""
    if inst.directed:
        raise StructureError("max_stsp needs an undirected instance")
    e = check_eps(inst.k, eps) if inst.k >= 2 else parse_fraction(eps)
    opts = _options(max_k_cardinality, max_beta_grid, cc_mode, seed)
    opts["threads"] = thread_count() if threads is None else threads
    flags: dict = {}
    tours = _stsp_rec(inst, e, opts, flags, ())
    extra = {"algorithm": "max-stsp", "cc_mode": cc_mode,
             "guarantee": cc_mode == "exact" and not any(flags.values())}
    if inst.k >= 2:
        try:
            extra["k_bound"] = h_bound(inst.k, e / 3)
        except DomainError:
            extra["k_bound"] = None
    return _result(inst, tours, flags, extra)
