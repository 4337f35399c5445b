"""Seeded instance generators.

Every generator takes an explicit seed and is reproducible bit for bit.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .core import DomainError, Instance, gamma_check, parse_fraction


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed) % 2**64)


def _check(n: int, k: int) -> None:
    if n < 2:
        raise DomainError("need n >= 2")
    if k < 1:
        raise DomainError("need k >= 1")


def random_instance(n: int, k: int, seed: int, directed: bool = True,
                    low: int = 0, high: int = 20) -> Instance:
    """Weights drawn uniformly from ``[low, high]``."""
    _check(n, k)
    if not 0 <= low <= high:
        raise DomainError("need 0 <= low <= high")
    W = _rng(seed).integers(low, high + 1, size=(n, n, k), dtype=np.int64)
    if not directed:
        W = np.triu(W.transpose(2, 0, 1), 1)
        W = (W + W.transpose(0, 2, 1)).transpose(1, 2, 0)
    return Instance(W, directed=directed)


def gamma_closure(W: np.ndarray, gamma) -> np.ndarray:
    """Largest integer matrix below ``W`` satisfying the gamma-triangle bound.

    Repeats ``w(u,v) <- min(w(u,v), floor(gamma*(w(u,x) + w(x,v))))`` until
    nothing changes.  Weights only decrease, so this terminates.
    """
    g = parse_fraction(gamma)
    p, q = g.numerator, g.denominator
    W = np.array(W, dtype=np.int64)
    n = W.shape[0]
    idx = np.arange(n)
    while True:
        changed = False
        for x in range(n):
            via = (p * (W[:, x, None, :] + W[None, x, :, :])) // q
            via[x, :, :] = W[x, :, :]
            via[:, x, :] = W[:, x, :]
            via[idx, idx, :] = 0
            new = np.minimum(W, via)
            if not np.array_equal(new, W):
                W = new
                changed = True
        if not changed:
            return W


def metric_instance(n: int, k: int, seed: int, low: int = 1, high: int = 20) -> Instance:
    """Directed metric instance: shortest-path closure of random weights."""
    inst = random_instance(n, k, seed, True, low, high)
    W = gamma_closure(inst.weights, 1)
    return Instance(W, directed=True, gamma=Fraction(1))


def gamma_instance(n: int, k: int, seed: int, gamma, low: int | None = None,
                   high: int = 100) -> Instance:
    """Directed instance satisfying the gamma-triangle inequality (validated)."""
    g = parse_fraction(gamma)
    if not Fraction(1, 2) <= g <= 1:
        raise DomainError("gamma must lie in [1/2, 1]")
    lo = high // 2 if low is None else low
    inst = random_instance(n, k, seed, True, lo, high)
    W = gamma_closure(inst.weights, g)
    out = Instance(W, directed=True, gamma=g)
    if gamma_check(out, g) is not None:
        raise AssertionError("closure failed to reach the gamma-triangle bound")
    return out


def euclidean_instance(n: int, k: int, seed: int, directed: bool = False,
                       side: int = 100) -> Instance:
    """One random point set per criterion; weights are rounded-up distances.

    Rounding up keeps the triangle inequality since
    ``ceil(a + b) <= ceil(a) + ceil(b)``.
    """
    _check(n, k)
    pts = _rng(seed).integers(0, side + 1, size=(k, n, 2))
    W = np.zeros((n, n, k), dtype=np.int64)
    for i in range(k):
        for u in range(n):
            for v in range(n):
                dx, dy = (int(t) for t in pts[i, u] - pts[i, v])
                r = math.isqrt(dx * dx + dy * dy)
                W[u, v, i] = r if r * r == dx * dx + dy * dy else r + 1
    return Instance(W, directed=directed, gamma=Fraction(1))
