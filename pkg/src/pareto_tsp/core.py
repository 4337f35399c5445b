"""Instances, weight vectors and the edge-set roles shared by every algorithm.

Edges are plain tuples ``(u, v)``.  In undirected instances an edge is always
stored with ``u < v``; directed edges keep their orientation.  Weight vectors
are tuples of Python ints so sums never overflow.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

MAX_WEIGHT = 2**60

Edge = tuple[int, int]
WeightVector = tuple  # tuple[int | Fraction, ...]

CYCLE_COVER = "cycle_cover"
PATH_COLLECTION = "path_collection"
TOUR = "tour"
ROLES = (CYCLE_COVER, PATH_COLLECTION, TOUR)


class ParetoTSPError(Exception):
    """Base class for all errors raised by this package."""


class InvalidEdgeError(ParetoTSPError):
    pass


class InstanceError(ParetoTSPError):
    pass


class StructureError(ParetoTSPError):
    """An edge set does not have the structure an operation requires."""


class BudgetError(ParetoTSPError):
    """A search or enumeration would exceed its configured budget."""


class DomainError(ParetoTSPError):
    """A numeric parameter is outside the range an operation is defined on."""


class LightnessError(ParetoTSPError):
    """A cycle cover is not light enough for the decomposition guarantee."""


def parse_fraction(text: str | int | Fraction) -> Fraction:
    """Parse ``"p/q"`` (or an int) into an exact Fraction."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise DomainError(f"not a rational number: {text!r}") from exc


def format_fraction(x: Fraction | int) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


class Instance:
    """A complete graph with ``k``-dimensional nonnegative integer weights.

    ``weights`` is an ``(n, n, k)`` integer array; the diagonal is ignored and
    kept at zero.  Undirected instances must be symmetric.
    """

    __slots__ = ("directed", "n", "k", "gamma", "_w", "_dtype_safe")

    def __init__(self, weights, directed: bool = True, gamma: Fraction | None = None):
        arr = np.asarray(weights)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[0] != arr.shape[1]:
            raise InstanceError(f"weights must be n x n x k, got shape {arr.shape}")
        n, _, k = arr.shape
        if k < 1:
            raise InstanceError("need at least one criterion")
        if n < 2:
            raise InstanceError(f"need at least two vertices, got n={n}")
        big = arr.dtype == object
        if not big and not np.issubdtype(arr.dtype, np.integer):
            raise InstanceError("weights must be integers")
        arr = arr.copy()
        idx = np.arange(n)
        arr[idx, idx, :] = 0
        if big:
            flat = [int(x) for x in arr.ravel()]
            if min(flat) < 0 or max(flat) > MAX_WEIGHT:
                raise InstanceError("weights must lie in [0, 2^60]")
            arr = np.array(flat, dtype=object).reshape(arr.shape)
        else:
            if arr.min() < 0 or arr.max() > MAX_WEIGHT:
                raise InstanceError("weights must lie in [0, 2^60]")
            arr = arr.astype(np.int64)
        if not directed and not np.array_equal(arr, arr.transpose(1, 0, 2)):
            raise InstanceError("undirected instance must have symmetric weights")
        if gamma is not None:
            gamma = parse_fraction(gamma)
            if not Fraction(1, 2) <= gamma <= 1:
                raise DomainError("gamma must lie in [1/2, 1]")
        arr.setflags(write=False)
        self.directed = bool(directed)
        self.n = int(n)
        self.k = int(k)
        self.gamma = gamma
        self._w = arr
        # int64 is safe as long as a full tour cannot overflow
        self._dtype_safe = arr.dtype != object and (int(arr.max()) + 1) * n < 2**62

    @property
    def weights(self) -> np.ndarray:
        """Read-only ``(n, n, k)`` weight array."""
        return self._w

    @property
    def orientation(self) -> str:
        return "directed" if self.directed else "undirected"

    @property
    def int64_safe(self) -> bool:
        """True if any sum of ``n`` edge weights fits in an int64."""
        return self._dtype_safe

    def w(self, u: int, v: int) -> WeightVector:
        return tuple(int(x) for x in self._w[u, v])

    def edge(self, u: int, v: int) -> Edge:
        """Canonical form of the edge between ``u`` and ``v``."""
        if not self.directed and u > v:
            return (v, u)
        return (u, v)

    def edges(self) -> list[Edge]:
        """All edges in lexicographic order."""
        if self.directed:
            return [(u, v) for u in range(self.n) for v in range(self.n) if u != v]
        return [(u, v) for u in range(self.n) for v in range(u + 1, self.n)]

    def with_weights(self, weights, gamma: Fraction | None = None) -> "Instance":
        return Instance(weights, self.directed, gamma)

    def drop_objective(self, i: int) -> "Instance":
        keep = [j for j in range(self.k) if j != i]
        return Instance(self._w[:, :, keep], self.directed)

    def induced(self, vertices: Sequence[int]) -> "Instance":
        """Sub-instance on ``vertices``; vertex ``j`` of the result is ``vertices[j]``."""
        vs = list(vertices)
        return Instance(self._w[np.ix_(vs, vs)], self.directed, self.gamma)

    def to_json(self) -> dict:
        mat = []
        for u in range(self.n):
            row = []
            for v in range(self.n):
                row.append(None if u == v else [int(x) for x in self._w[u, v]])
            mat.append(row)
        return {
            "orientation": self.orientation,
            "n": self.n,
            "k": self.k,
            "gamma": None if self.gamma is None else format_fraction(self.gamma),
            "weights": mat,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Instance":
        try:
            orientation = data["orientation"]
            n = int(data["n"])
            k = int(data["k"])
            rows = data["weights"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InstanceError(f"malformed instance: {exc}") from exc
        if orientation not in ("directed", "undirected"):
            raise InstanceError(f"unknown orientation {orientation!r}")
        if len(rows) != n or any(len(r) != n for r in rows):
            raise InstanceError("weights must be an n x n matrix")
        vals = np.zeros((n, n, k), dtype=object)
        for u in range(n):
            for v in range(n):
                entry = rows[u][v]
                if u == v:
                    if entry is not None:
                        raise InstanceError(f"diagonal entry ({u},{u}) must be null")
                    continue
                if entry is None or len(entry) != k:
                    raise InstanceError(f"entry ({u},{v}) must be a list of {k} ints")
                for i, x in enumerate(entry):
                    if not isinstance(x, int) or isinstance(x, bool):
                        raise InstanceError(f"entry ({u},{v}) must hold integers")
                    vals[u, v, i] = x
        if max((int(x) for x in vals.ravel()), default=0) < 2**62:
            vals = vals.astype(np.int64)
        gamma = data.get("gamma")
        inst = cls(vals, orientation == "directed",
                   None if gamma is None else parse_fraction(gamma))
        if inst.gamma is not None:
            bad = gamma_check(inst, inst.gamma)
            if bad is not None:
                raise InstanceError(f"declared gamma violated at (u, x, v, i) = {bad}")
        return inst

    def digest(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def __eq__(self, other) -> bool:
        return (isinstance(other, Instance) and self.directed == other.directed
                and self.gamma == other.gamma and self._w.shape == other._w.shape
                and bool(np.all(self._w == other._w)))

    def __repr__(self) -> str:
        return f"Instance({self.orientation}, n={self.n}, k={self.k}, gamma={self.gamma})"


def load_instance(path) -> Instance:
    with open(path) as fh:
        return Instance.from_json(json.load(fh))


def dump_json(data) -> str:
    """Canonical JSON text used for every file this package writes."""
    return json.dumps(data, sort_keys=True, indent=1) + "\n"


def vadd(a: Sequence, b: Sequence) -> WeightVector:
    return tuple(x + y for x, y in zip(a, b))


def vsub(a: Sequence, b: Sequence) -> WeightVector:
    return tuple(x - y for x, y in zip(a, b))


def vscale(c, a: Sequence) -> WeightVector:
    return tuple(c * x for x in a)


def _check_edge(inst: Instance, e) -> Edge:
    try:
        u, v = e
        u, v = int(u), int(v)
    except (TypeError, ValueError) as exc:
        raise InvalidEdgeError(f"not an edge: {e!r}") from exc
    if not (0 <= u < inst.n and 0 <= v < inst.n) or u == v:
        raise InvalidEdgeError(f"edge {e!r} out of range for n={inst.n}")
    return u, v


def weight_of(inst: Instance, edges: Iterable[Edge]) -> WeightVector:
    """Componentwise sum of edge weights; the empty set weighs zero."""
    total = [0] * inst.k
    w = inst.weights
    for e in edges:
        u, v = _check_edge(inst, e)
        for i in range(inst.k):
            total[i] += int(w[u, v, i])
    return tuple(total)


@dataclass(frozen=True)
class Report:
    """Outcome of :func:`validate`."""

    ok: bool
    reason: str = ""
    witness: tuple = field(default=())

    def __bool__(self) -> bool:
        return self.ok


def _components(n: int, edges: Sequence[Edge], directed: bool):
    """Split a max-degree-2 edge set into cycles and paths.

    Returns ``(cycles, paths)``, each a list of vertex sequences.  Only valid
    after degree checks have passed.
    """
    nxt: dict[int, list[int]] = {}
    for u, v in edges:
        nxt.setdefault(u, []).append(v)
        nxt.setdefault(v, []).append(u)
    seen: set[int] = set()
    cycles, paths = [], []
    ends = sorted(v for v, nb in nxt.items() if len(nb) == 1)
    for s in ends:
        if s in seen:
            continue
        seq = [s]
        seen.add(s)
        prev, cur = None, s
        while True:
            step = [x for x in nxt[cur] if x != prev]
            if not step or step[0] in seen:
                break
            prev, cur = cur, step[0]
            seq.append(cur)
            seen.add(cur)
        paths.append(seq)
    for s in sorted(nxt):
        if s in seen:
            continue
        seq = [s]
        seen.add(s)
        prev, cur = None, s
        while True:
            nb = sorted(nxt[cur])
            step = nb if prev is None else [x for x in nb if x != prev]
            if not step or step[0] == s or step[0] in seen:
                break
            prev, cur = cur, step[0]
            seq.append(cur)
            seen.add(cur)
        cycles.append(seq)
    return cycles, paths


def _directed_walks(n: int, edges: Sequence[Edge]):
    succ = {u: v for u, v in edges}
    pred = {v: u for u, v in edges}
    seen: set[int] = set()
    cycles, paths = [], []
    for s in sorted(set(succ) | set(pred)):
        if s in seen or s in pred:
            continue
        seq = [s]
        seen.add(s)
        while seq[-1] in succ:
            seq.append(succ[seq[-1]])
            seen.add(seq[-1])
        paths.append(seq)
    for s in sorted(succ):
        if s in seen:
            continue
        seq = [s]
        seen.add(s)
        while succ[seq[-1]] != s:
            seq.append(succ[seq[-1]])
            seen.add(seq[-1])
        cycles.append(seq)
    return cycles, paths


def validate(edges: Iterable[Edge], role: str, inst: Instance) -> Report:
    """Check that ``edges`` is a cycle cover, path collection or tour of ``inst``."""
    if role not in ROLES:
        raise ValueError(f"unknown role {role!r}")
    n = inst.n
    es = list(edges)
    seen = set()
    for e in es:
        try:
            u, v = _check_edge(inst, e)
        except InvalidEdgeError:
            return Report(False, "edge out of range", (e,))
        key = (u, v) if inst.directed else (min(u, v), max(u, v))
        if key in seen:
            return Report(False, "repeated edge", (e,))
        seen.add(key)
    es = sorted(seen)
    if inst.directed:
        outd, ind = [0] * n, [0] * n
        for u, v in es:
            outd[u] += 1
            ind[v] += 1
        for v in range(n):
            if outd[v] > 1 or ind[v] > 1:
                return Report(False, "degree bound exceeded", (v,))
        if role == PATH_COLLECTION:
            cycles, _ = _directed_walks(n, es)
            if cycles:
                return Report(False, "contains a cycle", (cycles[0][0],))
            return Report(True)
        for v in range(n):
            if outd[v] != 1 or ind[v] != 1:
                return Report(False, "vertex not covered", (v,))
        cycles, _ = _directed_walks(n, es)
    else:
        deg = [0] * n
        for u, v in es:
            deg[u] += 1
            deg[v] += 1
        for v in range(n):
            if deg[v] > 2:
                return Report(False, "degree bound exceeded", (v,))
        cycles, _ = _components(n, es, False)
        if role == PATH_COLLECTION:
            if cycles:
                return Report(False, "contains a cycle", (cycles[0][0],))
            return Report(True)
        for v in range(n):
            if deg[v] != 2:
                return Report(False, "vertex not covered", (v,))
        for c in cycles:
            if len(c) < 3:
                return Report(False, "cycle length < 3", (c[0],))
    if role == TOUR and len(cycles) != 1:
        return Report(False, "more than one cycle", (cycles[1][0],))
    return Report(True)


def cycles_of(edges: Iterable[Edge], n: int, directed: bool) -> list[list[int]]:
    """Vertex sequences of the cycles of a cycle cover (each starts at its smallest vertex)."""
    es = list(edges)
    cycles = _directed_walks(n, es)[0] if directed else _components(n, es, False)[0]
    return cycles


def paths_of(edges: Iterable[Edge], n: int, directed: bool) -> list[list[int]]:
    """Vertex sequences of the paths of a path collection, isolated vertices included."""
    es = list(edges)
    paths = _directed_walks(n, es)[1] if directed else _components(n, es, False)[1]
    covered = {v for p in paths for v in p}
    paths.extend([v] for v in range(n) if v not in covered)
    return sorted(paths, key=lambda p: p[0])


def cycle_edges(seq: Sequence[int], directed: bool) -> list[Edge]:
    """Edges of the closed walk ``seq[0] -> seq[1] -> ... -> seq[0]``."""
    out = []
    for a, b in zip(seq, list(seq[1:]) + [seq[0]]):
        out.append((a, b) if directed or a < b else (b, a))
    return out


def tour_sequence(edges: Iterable[Edge], n: int, directed: bool) -> list[int]:
    """Vertex order of a tour, starting at vertex 0."""
    cycles = cycles_of(edges, n, directed)
    if len(cycles) != 1 or len(cycles[0]) != n:
        raise StructureError("edge set is not a tour")
    return cycles[0]


def gamma_check(inst: Instance, gamma) -> tuple | None:
    """Return ``None`` if the gamma-triangle inequality holds, else a witness.

    The witness ``(u, x, v, i)`` names an ordered triple and a coordinate with
    ``w_i(u, v) > gamma * (w_i(u, x) + w_i(x, v))``.
    """
    g = parse_fraction(gamma)
    if not Fraction(1, 2) <= g <= 1:
        raise DomainError("gamma must lie in [1/2, 1]")
    p, q = g.numerator, g.denominator
    W = inst.weights
    n = inst.n
    if W.dtype != object and int(W.max()) * 2 * max(p, q) < 2**62:
        lhs = q * W
        for x in range(n):
            rhs = p * (W[:, x, None, :] + W[None, x, :, :])
            bad = lhs > rhs
            bad[x, :, :] = False
            bad[:, x, :] = False
            idx = np.arange(n)
            bad[idx, idx, :] = False
            if bad.any():
                u, v, i = (int(t) for t in np.argwhere(bad)[0])
                return (u, x, v, i)
        return None
    for u in range(n):
        for v in range(n):
            if u == v:
                continue
            for x in range(n):
                if x in (u, v):
                    continue
                for i in range(inst.k):
                    if q * int(W[u, v, i]) > p * (int(W[u, x, i]) + int(W[x, v, i])):
                        return (u, x, v, i)
    return None


def shortcut_tour(tour: Iterable[Edge], subset: Iterable[int], inst: Instance) -> list[Edge]:
    """Restrict a directed tour to ``subset``, visiting it in tour order.

    A one-vertex subset gives the empty edge set (a trivial tour).
    """
    if not inst.directed:
        raise StructureError("shortcut_tour expects a directed instance")
    want = set(subset)
    if not want:
        raise StructureError("subset must be nonempty")
    order = tour_sequence(tour, inst.n, True)
    if not want <= set(order):
        raise StructureError("subset contains vertices outside the tour")
    kept = [v for v in order if v in want]
    if len(kept) == 1:
        return []
    return cycle_edges(kept, True)


def complete_to_tour(paths: Iterable[Edge], inst: Instance, scalar=None) -> list[Edge]:
    """Join a path collection into a tour by greedy maximum-weight connections.

    Connections are chosen by largest ``scalar`` weight (default: sum of the
    weight coordinates), ties broken by the lexicographically smallest edge.
    A tour passed in is returned unchanged.
    """
    es = sorted(set(inst.edge(u, v) for u, v in paths))
    if validate(es, TOUR, inst):
        return es
    if not validate(es, PATH_COLLECTION, inst):
        raise StructureError("input is neither a tour nor a path collection")
    n = inst.n
    if scalar is None:
        sw = inst.weights.sum(axis=2)
    else:
        sw = np.asarray(scalar)
    chains = paths_of(es, n, inst.directed)
    edges = list(es)
    while len(chains) > 1:
        best = None
        for i, c in enumerate(chains):
            if inst.directed:
                tails = [c[-1]]
                starts = [(c2[0], j) for j, c2 in enumerate(chains) if j != i]
            else:
                tails = sorted({c[0], c[-1]})
                starts = []
                for j, c2 in enumerate(chains):
                    if j != i:
                        starts.extend((x, j) for x in sorted({c2[0], c2[-1]}))
            for t in tails:
                for s, j in starts:
                    e = inst.edge(t, s)
                    key = (-int(sw[t, s]), e)
                    if best is None or key < best[0]:
                        best = (key, i, j, t, s)
        _, i, j, t, s = best
        a, b = chains[i], chains[j]
        if not inst.directed:
            if a[-1] != t:
                a = a[::-1]
            if b[0] != s:
                b = b[::-1]
        edges.append(inst.edge(t, s))
        merged = a + b
        chains = [c for x, c in enumerate(chains) if x not in (i, j)] + [merged]
    c = chains[0]
    edges.append(inst.edge(c[-1], c[0]))
    out = sorted(set(edges))
    assert validate(out, TOUR, inst), "completion produced an invalid tour"
    return out


def derive_seed(seed: int, *path) -> int:
    """Split a 64-bit seed into independent per-branch seeds.

    The child seed is the first 8 bytes of SHA-256 over the parent seed and
    the branch path, so results do not depend on evaluation order.
    """
    blob = repr((int(seed) & (2**64 - 1),) + tuple(path)).encode()
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big")


def thread_count(default: int = 1) -> int:
    """Parallelism cap from ``PARETO_TSP_THREADS`` (at least 1)."""
    import os

    raw = os.environ.get("PARETO_TSP_THREADS")
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        return default
