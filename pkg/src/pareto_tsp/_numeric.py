"""Certified bounds on logarithms, returned as exact Fractions."""

from __future__ import annotations

import threading
from fractions import Fraction
from math import floor, ceil

from mpmath import iv, libmp

_PREC = 128
_lock = threading.Lock()


def ln_bounds(x) -> tuple[Fraction, Fraction]:
    """Rationals ``lo <= ln(x) <= hi`` for a positive rational ``x``."""
    x = Fraction(x)
    if x <= 0:
        raise ValueError("logarithm of a non-positive number")
    with _lock:
        old = iv.prec
        iv.prec = _PREC
        try:
            val = iv.log(iv.mpf(x.numerator) / iv.mpf(x.denominator))
            a, b = val._mpi_
        finally:
            iv.prec = old
    # mpmath may hand back gmpy integers; keep results plain Python
    (pa, qa), (pb, qb) = libmp.to_rational(a), libmp.to_rational(b)
    return Fraction(int(pa), int(qa)), Fraction(int(pb), int(qb))


def round_down(x: Fraction, bits: int = 40) -> Fraction:
    """Largest multiple of ``2**-bits`` not above ``x``."""
    return Fraction(floor(x * 2**bits), 2**bits)


def round_up(x: Fraction, bits: int = 40) -> Fraction:
    return Fraction(ceil(x * 2**bits), 2**bits)


def log2_upper(n: int) -> Fraction:
    """Upper bound on ``log2(n)``; exact when ``n`` is a power of two."""
    if n >= 1 and n & (n - 1) == 0:
        return Fraction(n.bit_length() - 1)
    _, hi = ln_bounds(n)
    lo2, _ = ln_bounds(2)
    return round_up(hi / lo2)


def log2_lower(n: int) -> Fraction:
    if n >= 1 and n & (n - 1) == 0:
        return Fraction(n.bit_length() - 1)
    lo, _ = ln_bounds(n)
    _, hi2 = ln_bounds(2)
    return round_down(lo / hi2)
