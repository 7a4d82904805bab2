"""Independent reference implementations used as test oracles.

These deliberately avoid the package's own arithmetic: formulas go through
mpmath at 60 digits, capture goes through a per-bit timeline scan, and the
hash is re-derived with numpy's wrapping uint64 multiply.
"""

from __future__ import annotations

from fractions import Fraction

import mpmath
import numpy as np

mpmath.mp.dps = 60


def mpf(x) -> mpmath.mpf:
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


def round_trip_oracle(d, c, s, delta_p) -> mpmath.mpf:
    return mpf(d) / mpf(c) + mpf(d) / mpf(s) + mpf(delta_p)


def min_delay_oracle(n, b0, bi) -> mpmath.mpf:
    return mpf(n) / mpf(b0) + mpf(n) / mpf(bi)


def roa_margin_oracle(vx, vy, lx, ly, radius, delta_p, c, s) -> mpmath.mpf:
    """R - (|v - l| + delta_p * c s / (c + s)); inside iff >= 0."""
    d = mpmath.sqrt((mpf(lx) - mpf(vx)) ** 2 + (mpf(ly) - mpf(vy)) ** 2)
    slack = mpf(delta_p) * mpf(c) * mpf(s) / (mpf(c) + mpf(s))
    return mpf(radius) - (d + slack)


def capture_oracle(target, others, bandwidth):
    """Brute-force per-bit capture for one reception.

    ``target`` and every entry of ``others`` are (start, payload, power)
    tuples with exact Fraction starts; ``others`` includes the target itself.
    Returns (bits, clean, synchronized).
    """
    bw = Fraction(bandwidth)
    start, payload, _ = target
    out, sources = [], []
    for k in range(len(payload)):
        t = start + (Fraction(k) + Fraction(1, 2)) / bw
        live = []
        for idx, (s, p, w) in enumerate(others):
            if s <= t < s + Fraction(len(p)) / bw:
                j = int((t - s) * bw)  # floor for nonnegative Fractions
                live.append((w, p[j], idx))
        top = max(w for w, _, _ in live)
        best = [x for x in live if x[0] == top]
        if len(best) > 1:
            out.append("x")
            sources.append(None)
        else:
            out.append(best[0][1])
            sources.append(best[0][2])
    me = next(i for i, o in enumerate(others) if o is target)
    return "".join(out), all(src == me for src in sources), sources[0] == me


def fnv1a64_oracle(data: bytes) -> int:
    h = np.uint64(0xCBF29CE484222325)
    prime = np.uint64(0x100000001B3)
    with np.errstate(over="ignore"):
        for b in data:
            h = np.uint64(h ^ np.uint64(b)) * prime
    return int(h)
