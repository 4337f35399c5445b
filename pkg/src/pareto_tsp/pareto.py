"""Dominance, epsilon-signatures and approximate Pareto sets.

Solutions are carried as ``(edges, weight)`` pairs where ``edges`` is a sorted
tuple of edges and ``weight`` a tuple of ints or Fractions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .core import BudgetError, DomainError, Instance, parse_fraction, weight_of

MAX = "max"
MIN = "min"

EXACT_CC_THRESHOLD = 8


class _Zero:
    """Signature entry of a zero coordinate."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "ZERO"

    def __reduce__(self):
        return (_Zero, ())


ZERO = _Zero()


def _check_sense(sense: str) -> None:
    if sense not in (MAX, MIN):
        raise ValueError(f"sense must be 'max' or 'min', got {sense!r}")


def dominates(a: Sequence, b: Sequence, sense: str = MAX) -> bool:
    """True iff ``a`` is at least as good as ``b`` everywhere and better somewhere."""
    _check_sense(sense)
    if len(a) != len(b):
        raise DomainError(f"dimension mismatch: {len(a)} vs {len(b)}")
    if sense == MAX:
        return all(x >= y for x, y in zip(a, b)) and any(x > y for x, y in zip(a, b))
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


@dataclass
class ParetoSet:
    items: list = field(default_factory=list)
    sense: str = MAX
    meta: dict = field(default_factory=dict)

    def weights(self) -> list:
        return [w for _, w in self.items]

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)


def filter_dominated(items: Iterable, sense: str = MAX, meta: dict | None = None) -> ParetoSet:
    """Drop dominated items and duplicate weights, keeping input order otherwise.

    Among items with equal weight the first one is kept.
    """
    _check_sense(sense)
    items = list(items)
    sign = 1 if sense == MAX else -1
    # visit best-first so a kept item is never dominated by a later one
    order = sorted(range(len(items)),
                   key=lambda j: (tuple(-sign * x for x in items[j][1]), j))
    kept: list[int] = []
    seen = set()
    for j in order:
        w = tuple(items[j][1])
        if w in seen:
            continue
        if any(dominates(items[i][1], w, sense) for i in kept):
            continue
        kept.append(j)
        seen.add(w)
    kept.sort()
    return ParetoSet([items[j] for j in kept], sense, dict(meta or {}))


def _bucket(x: Fraction, base: Fraction) -> int:
    """Largest integer ``l`` with ``base**l <= x`` (x > 0, base > 1)."""
    guess = math.floor(math.log(x) / math.log(base)) if x > 0 else 0
    l = guess
    while base**l > x:
        l -= 1
    while base ** (l + 1) <= x:
        l += 1
    return l


def signature(w: Sequence, eps) -> tuple:
    """Per-coordinate geometric bucket of ``w`` with ratio ``1 + eps``.

    Entry ``i`` is ``ZERO`` when ``w_i == 0``, else the integer ``l`` with
    ``(1+eps)**l <= w_i < (1+eps)**(l+1)``.  Values below one get negative
    buckets, which only happens for rational inputs.
    """
    e = parse_fraction(eps)
    if e <= 0:
        raise DomainError("eps must be positive")
    base = 1 + e
    out = []
    for x in w:
        x = Fraction(x)
        if x < 0:
            raise DomainError("signature of a negative weight")
        out.append(ZERO if x == 0 else _bucket(x, base))
    return tuple(out)


def thin_by_signature(items: Iterable, eps) -> list:
    """Keep the first item of every epsilon-signature."""
    seen = set()
    out = []
    for item in items:
        s = signature(item[1], eps)
        if s not in seen:
            seen.add(s)
            out.append(item)
    return out


@dataclass(frozen=True)
class Verdict:
    ok: bool
    counterexample: tuple | None = None

    def __bool__(self) -> bool:
        return self.ok


def covers(c: Sequence, r: Sequence, alpha: Fraction, sense: str) -> bool:
    if sense == MAX:
        return all(x >= alpha * y for x, y in zip(c, r))
    return all(x <= alpha * y for x, y in zip(c, r))


def verify_approx_pareto(candidate, reference, alpha, sense: str = MAX) -> Verdict:
    """Check that every reference weight is alpha-covered by some candidate.

    Both arguments may be ParetoSets or plain iterables of weight vectors.
    """
    _check_sense(sense)
    a = parse_fraction(alpha) if not isinstance(alpha, Fraction) else alpha
    if sense == MAX and a > 1 or sense == MIN and a < 1:
        raise DomainError("alpha must be <= 1 for max and >= 1 for min")
    cand = candidate.weights() if isinstance(candidate, ParetoSet) else list(candidate)
    ref = reference.weights() if isinstance(reference, ParetoSet) else list(reference)
    for r in ref:
        if not any(covers(c, r, a, sense) for c in cand):
            return Verdict(False, tuple(r))
    return Verdict(True)


def achieved_ratio(candidate, reference, sense: str = MAX) -> Fraction | None:
    """Best alpha for which ``candidate`` alpha-covers ``reference``.

    Max sense: the largest alpha <= 1; coordinates where the reference is
    zero are always covered.  Min sense: the smallest alpha >= 1, or ``None``
    when some reference point needs a zero the candidates never reach.
    """
    _check_sense(sense)
    cand = candidate.weights() if isinstance(candidate, ParetoSet) else list(candidate)
    ref = reference.weights() if isinstance(reference, ParetoSet) else list(reference)

    def one(c, r):
        if sense == MAX:
            return min([Fraction(x) / y for x, y in zip(c, r) if y > 0] + [Fraction(1)])
        if any(y == 0 and x > 0 for x, y in zip(c, r)):
            return None
        return max([Fraction(x) / y for x, y in zip(c, r) if y > 0] + [Fraction(1)])

    worst = Fraction(1)
    for r in ref:
        vals = [one(c, r) for c in cand]
        if sense == MAX:
            best = max(vals, default=Fraction(0))
            worst = min(worst, best)
        else:
            fin = [v for v in vals if v is not None]
            if not fin:
                return None
            worst = max(worst, min(fin))
    return worst


def _enumerate_covers(inst: Instance):
    from .oracle import enumerate_cycle_covers

    return enumerate_cycle_covers(inst)


def compositions(total: int, parts: int):
    """All tuples of ``parts`` nonnegative ints summing to ``total`` (lexicographic)."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


def cc_pareto_approx(inst: Instance, eps, sense: str = MAX, mode: str = "exact",
                     fail_prob=0, *, thin: bool = True,
                     threshold: int = EXACT_CC_THRESHOLD, resolution: int | None = None) -> ParetoSet:
    """Approximate Pareto curve of cycle covers.

    ``mode="exact"`` enumerates every cycle cover (``n <= threshold``) and is a
    true ``(1 -/+ eps)`` curve.  ``mode="scalarize"`` solves a lattice of
    weighted sums with an optimal cycle cover solver and gives no guarantee.
    ``fail_prob`` is accepted for interface parity; neither mode can fail.
    """
    _check_sense(sense)
    e = parse_fraction(eps)
    if e <= 0:
        raise DomainError("eps must be positive")
    if mode == "exact":
        if inst.n > threshold:
            raise BudgetError(f"exact cycle-cover enumeration refused for n={inst.n} > {threshold}")
        covers_, weights = _enumerate_covers(inst)
        items = [(c, w) for c, w in zip(covers_, weights)]
        ps = filter_dominated(items, sense)
        if thin:
            ps.items = thin_by_signature(ps.items, e)
        ps.meta = {"mode": "exact", "guarantee": True}
        return ps
    if mode == "scalarize":
        from .solver import optimal_cycle_cover

        res = resolution if resolution is not None else max(1, min(8, math.ceil(1 / e)))
        items = []
        seen = set()
        for lam in compositions(res, inst.k):
            c = tuple(optimal_cycle_cover(inst, list(lam), sense))
            if c not in seen:
                seen.add(c)
                items.append((c, weight_of(inst, c)))
        ps = filter_dominated(items, sense)
        ps.meta = {"mode": "scalarize", "guarantee": False}
        return ps
    raise DomainError(f"unknown cycle-cover mode {mode!r}")
