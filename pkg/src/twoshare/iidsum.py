"""Distributions of sums of independent finite-valued scores.

Distributions are dicts {sum_value: probability}.  Values of -inf are legal
and absorb anything added to them, which models score terms that can never
be accepted.  Sums are accumulated left to right in a canonical order, so a
given composition of per-step values is computed exactly one way and floats
cannot split one composition into several keys.
"""
from __future__ import annotations

import math

from .prob import CapExceededError

DIST_CAP = 1 << 20


class SumDistCapError(CapExceededError):
    """A convolution grew past DIST_CAP support points; switch to Monte Carlo."""


def merge_values(values, probs, tol: float = 1e-12) -> dict[float, float]:
    """Group (value, prob) pairs whose values coincide within tol."""
    pairs = sorted((float(v), float(p)) for v, p in zip(values, probs) if p > 0.0)
    out: dict[float, float] = {}
    anchor = None
    for v, p in pairs:
        if anchor is not None and (v == anchor or v - anchor <= tol):
            out[anchor] += p
        else:
            anchor = v
            out[anchor] = out.get(anchor, 0.0) + p
    return out


def convolve(a: dict[float, float], b: dict[float, float],
             cap: int = DIST_CAP) -> dict[float, float]:
    out: dict[float, float] = {}
    for va, pa in a.items():
        for vb, pb in b.items():
            s = va + vb
            out[s] = out.get(s, 0.0) + pa * pb
    if len(out) > cap:
        raise SumDistCapError(f"{len(out)} support points exceed {cap}")
    return out


def power_convolve(dist: dict[float, float], n: int,
                   cap: int = DIST_CAP) -> dict[float, float]:
    """Distribution of the sum of n i.i.d. draws from dist."""
    if n < 0:
        raise ValueError("power must be non-negative")
    out = {0.0: 1.0}
    for _ in range(n):
        out = convolve(out, dist, cap)
    return out


def tail_mass_strict(dist: dict[float, float], threshold: float) -> float:
    """Probability that the sum is strictly above the threshold."""
    total = 0.0
    for v, p in sorted(dist.items()):
        if v > threshold:
            total += p
    return total


def mean_tail_strict(dist: dict[float, float], n: int, per_symbol_threshold: float) -> float:
    """Probability that (sum / n) strictly exceeds the per-symbol threshold.

    Divides each support point by n before comparing, matching the scalar
    acceptance test applied to sampled share pairs.
    """
    total = 0.0
    for v, p in sorted(dist.items()):
        if math.isinf(v) and v < 0:
            continue
        if v / n > per_symbol_threshold:
            total += p
    return total
