"""Finite probability mass functions and exact information quantities.

All entropies and mutual informations are in bits (logs base 2) and use the
0 * log 0 = 0 convention.  Probabilities are 64-bit floats; `RationalJoint`
offers an exact big-integer rational mode for small joints, used as a test
oracle.  Dense materialization is refused beyond `DENSE_CAP` states.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
import mpmath

# Largest number of states any dense table may hold.
DENSE_CAP = 1 << 24
# Largest number of states the exact-rational mode accepts.
RATIONAL_CAP = 1 << 16
# Probability vectors must sum to 1 within this tolerance.
SUM_TOL = 1e-12


class CapExceededError(Exception):
    """A dense or exact-rational computation would exceed its state cap."""


def _validate_probs(arr: np.ndarray):
    if arr.ndim < 1 or arr.size == 0:
        raise ValueError("probability table must be non-empty")
    if np.any(arr < 0.0) or not np.all(np.isfinite(arr)):
        raise ValueError("probabilities must be finite and non-negative")
    total = float(arr.sum())
    if abs(total - 1.0) > SUM_TOL:
        raise ValueError(f"probabilities sum to {total!r}, not 1 within {SUM_TOL}")


@dataclass(frozen=True)
class PMF:
    """A probability mass function over {0, ..., k-1}."""

    probs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.probs, dtype=np.float64)
        _validate_probs(arr)
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)

    @classmethod
    def from_probs(cls, values: Sequence[float]) -> "PMF":
        return cls(np.asarray(list(values), dtype=np.float64))

    @classmethod
    def uniform(cls, k: int) -> "PMF":
        if k < 1:
            raise ValueError("alphabet size must be positive")
        return cls(np.full(k, 1.0 / k))

    @classmethod
    def point_mass(cls, k: int, at: int) -> "PMF":
        arr = np.zeros(k)
        arr[at] = 1.0
        return cls(arr)

    @classmethod
    def from_text(cls, text: str) -> "PMF":
        """Parse a PMF from external text.

        Accepts either a JSON-style list ("[0.7, 0.3]"), a bare
        comma-separated list ("0.7,0.3"), or "uniform:k".
        """
        text = text.strip()
        if text.startswith("uniform:"):
            return cls.uniform(int(text.split(":", 1)[1]))
        body = text.strip("[]")
        parts = [p for p in body.split(",") if p.strip()]
        if not parts:
            raise ValueError(f"cannot parse PMF from {text!r}")
        return cls.from_probs([float(p) for p in parts])

    @property
    def support_size(self) -> int:
        return int(self.probs.shape[0])

    def __len__(self):
        return self.support_size


@dataclass(frozen=True)
class JointPMF:
    """A joint PMF over a product of finite alphabets, stored densely."""

    probs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.probs, dtype=np.float64)
        if arr.ndim < 2:
            raise ValueError("a joint needs at least two axes")
        if arr.size > DENSE_CAP:
            raise CapExceededError(f"{arr.size} states exceed the dense cap {DENSE_CAP}")
        _validate_probs(arr)
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)

    @classmethod
    def outer(cls, *pmfs: PMF) -> "JointPMF":
        """Product joint of independent PMFs."""
        size = math.prod(p.support_size for p in pmfs)
        if size > DENSE_CAP:
            raise CapExceededError(f"{size} states exceed the dense cap {DENSE_CAP}")
        arr = pmfs[0].probs
        for p in pmfs[1:]:
            arr = np.multiply.outer(arr, p.probs)
        return cls(arr)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(self.probs.shape)

    def marginal(self, *axes: int) -> "PMF | JointPMF":
        """Marginal over the named axes (all others summed out)."""
        keep = tuple(axes)
        if len(set(keep)) != len(keep):
            raise ValueError("marginal axes must be distinct")
        drop = tuple(i for i in range(self.probs.ndim) if i not in keep)
        arr = self.probs.sum(axis=drop) if drop else self.probs
        # after the sum the axes sit in sorted order; restore the requested one
        perm = np.argsort(np.argsort(keep))
        arr = np.transpose(arr, perm)
        if arr.ndim == 1:
            return PMF(arr)
        return JointPMF(arr)


def _entropy_bits(arr: np.ndarray) -> float:
    flat = np.asarray(arr, dtype=np.float64).ravel()
    pos = flat[flat > 0.0]
    return float(-(pos * np.log2(pos)).sum())


def entropy(p: PMF | JointPMF) -> float:
    """Shannon entropy in bits."""
    return _entropy_bits(p.probs)


def binary_entropy(q: float) -> float:
    """h(q) = -q log2 q - (1-q) log2 (1-q), with h(0) = h(1) = 0."""
    if q < 0.0 or q > 1.0:
        raise ValueError(f"binary entropy argument {q!r} outside [0, 1]")
    if q == 0.0 or q == 1.0:
        return 0.0
    return float(-q * math.log2(q) - (1.0 - q) * math.log2(1.0 - q))


MI_TOL = 1e-9


def mutual_information(joint: JointPMF, axis_a: int = 0, axis_b: int = 1) -> float:
    """I(A;B) in bits between two axes of a joint (others summed out).

    Float rounding can push the sum a hair below zero; values within
    1e-9 of zero are clamped, anything lower is treated as a bug.
    """
    j = joint.marginal(axis_a, axis_b)
    if isinstance(j, PMF):
        raise ValueError("mutual information needs two distinct axes")
    table = j.probs
    pa = table.sum(axis=1)
    pb = table.sum(axis=0)
    mask = table > 0.0
    num = table[mask]
    den = np.outer(pa, pb)[mask]
    value = float((num * np.log2(num / den)).sum())
    if value < -MI_TOL:
        raise ArithmeticError(f"mutual information {value} below -{MI_TOL}")
    return max(value, 0.0)


def conditional_entropy(joint: JointPMF, target_axis: int = 0) -> float:
    """H(target | all other axes) = H(joint) - H(others)."""
    others = tuple(i for i in range(joint.probs.ndim) if i != target_axis)
    rest = joint.marginal(*others)
    return _entropy_bits(joint.probs) - _entropy_bits(rest.probs)


def induce_joint(src: JointPMF | PMF, fn: Callable, out_dims: tuple[int, ...]) -> JointPMF:
    """Joint of (inputs, outputs) under a deterministic map of the inputs.

    Parameters
    ----------
    src : PMF or JointPMF over the input axes.
    fn : function taking one index per input axis and returning an index
        tuple (or bare int when there is a single output axis) into
        `out_dims`.  Must be defined on every support point.
    out_dims : alphabet sizes of the output axes.

    The result has one axis per input followed by one per output.
    Marginalizing the inputs away gives the exact output distribution.
    """
    in_arr = src.probs
    in_dims = tuple(in_arr.shape)
    total = math.prod(in_dims) * math.prod(out_dims)
    if total > DENSE_CAP:
        raise CapExceededError(f"{total} states exceed the dense cap {DENSE_CAP}")
    out = np.zeros(in_dims + tuple(out_dims))
    for idx in np.ndindex(*in_dims):
        mass = in_arr[idx]
        if mass == 0.0:
            continue
        try:
            mapped = fn(*idx)
        except Exception as exc:
            raise ValueError(f"map undefined on support point {idx}") from exc
        if not isinstance(mapped, tuple):
            mapped = (mapped,)
        out[idx + tuple(int(v) for v in mapped)] += mass
    return JointPMF(out)


def pushforward(src: JointPMF | PMF, fn: Callable, out_dims: tuple[int, ...]) -> JointPMF | PMF:
    """Distribution of fn(inputs) alone; inputs are summed out on the fly."""
    in_arr = src.probs
    size = math.prod(out_dims)
    if size > DENSE_CAP:
        raise CapExceededError(f"{size} states exceed the dense cap {DENSE_CAP}")
    out = np.zeros(tuple(out_dims))
    for idx in np.ndindex(*in_arr.shape):
        mass = in_arr[idx]
        if mass == 0.0:
            continue
        mapped = fn(*idx)
        if not isinstance(mapped, tuple):
            mapped = (mapped,)
        out[tuple(int(v) for v in mapped)] += mass
    if out.ndim == 1:
        return PMF(out)
    return JointPMF(out)


# ---------------------------------------------------------------------------
# i.i.d. extensions


@dataclass(frozen=True)
class IIDExtension:
    """n independent copies of a source, evaluated lazily.

    Sequences are identified with their lexicographic index (first symbol
    most significant).  Per-sequence probabilities and surprisals accumulate
    left to right so that scalar and vectorized paths agree bit for bit.
    """

    source: PMF
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("extension length must be positive")

    @property
    def k(self) -> int:
        return self.source.support_size

    @property
    def size(self) -> int:
        return self.k ** self.n

    def seq_to_index(self, seq) -> int:
        code = 0
        for s in seq:
            s = int(s)
            if not 0 <= s < self.k:
                raise ValueError(f"symbol {s} outside alphabet of size {self.k}")
            code = code * self.k + s
        return code

    def index_to_seq(self, code: int) -> tuple[int, ...]:
        digits = []
        for _ in range(self.n):
            code, d = divmod(code, self.k)
            digits.append(d)
        return tuple(reversed(digits))

    def prob(self, seq) -> float:
        p = self.source.probs
        total = 1.0
        for s in seq:
            total = total * p[int(s)]
        return float(total)

    def all_probs(self, cap: int = DENSE_CAP) -> np.ndarray:
        """Probabilities of every length-n sequence, in lexicographic order."""
        if self.size > cap:
            raise CapExceededError(f"{self.size} sequences exceed the cap {cap}")
        p = self.source.probs
        total = p.copy()
        for _ in range(self.n - 1):
            total = (total[:, None] * p[None, :]).ravel()
        return total

    def dense(self, cap: int = DENSE_CAP) -> PMF:
        return PMF(self.all_probs(cap))

    def sample(self, rng: "RandomStream", size: int) -> np.ndarray:
        """(size, n) matrix of i.i.d. sequences, via per-symbol inverse CDF."""
        return sample(self.source, rng, (size, self.n))


def iid_extension(source: PMF, n: int) -> IIDExtension:
    return IIDExtension(source, n)


def sample(p: PMF, rng: "RandomStream", size=None) -> int | np.ndarray:
    """Inverse-CDF sampling; deterministic given the stream state."""
    cdf = np.cumsum(p.probs)
    u = rng.gen.random(size)
    idx = np.searchsorted(cdf, u, side="right")
    idx = np.minimum(idx, p.support_size - 1)
    if size is None:
        return int(idx)
    return idx.astype(np.int64)


# ---------------------------------------------------------------------------
# Reproducible randomness


class RandomStream:
    """Counter-based random stream with cheap independent substreams.

    Wraps numpy's Philox 4x64 bit generator keyed by (seed, stream).  Philox
    output is specified independent of platform and numpy pins the algorithm,
    so a fixed seed yields the same draws everywhere (numpy >= 1.24).
    Substreams use distinct keys and are statistically independent, which
    makes Monte Carlo work partition-invariant: chunk c always draws from
    substream c no matter which thread runs it.
    """

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        key = np.array([self.seed & 0xFFFFFFFFFFFFFFFF, self.stream & 0xFFFFFFFFFFFFFFFF],
                       dtype=np.uint64)
        self.gen = np.random.Generator(np.random.Philox(key=key))

    def substream(self, i: int) -> "RandomStream":
        """Independent child stream i; nesting is collision-free below 2**20."""
        if not 0 <= i < (1 << 20):
            raise ValueError("substream index must lie in [0, 2**20)")
        return RandomStream(self.seed, self.stream * (1 << 20) + i + 1)

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, stream={self.stream})"


# ---------------------------------------------------------------------------
# Exact-rational oracle mode


class RationalJoint:
    """Dense joint with exact Fraction entries, for use as a test oracle.

    Capped at RATIONAL_CAP states.  Entropy-style quantities are evaluated
    with mpmath at `prec` bits (default 120) since logs of rationals are
    irrational.
    """

    def __init__(self, dims: tuple[int, ...], probs: list[Fraction]):
        self.dims = tuple(int(d) for d in dims)
        size = math.prod(self.dims)
        if size > RATIONAL_CAP:
            raise CapExceededError(f"{size} states exceed the rational cap {RATIONAL_CAP}")
        if len(probs) != size:
            raise ValueError("probability list does not match dims")
        if any(p < 0 for p in probs):
            raise ValueError("negative probability")
        if sum(probs) != 1:
            raise ValueError("rational joint must sum to exactly 1")
        self.probs = list(probs)

    @classmethod
    def outer(cls, *pmfs: Sequence[Fraction]) -> "RationalJoint":
        dims = tuple(len(p) for p in pmfs)
        probs = [Fraction(1)]
        for p in pmfs:
            probs = [a * b for a in probs for b in p]
        return cls(dims, probs)

    def _flat(self, idx: tuple[int, ...]) -> int:
        code = 0
        for d, i in zip(self.dims, idx):
            code = code * d + i
        return code

    def pushforward(self, fn: Callable, out_dims: tuple[int, ...]) -> "RationalJoint":
        size = math.prod(out_dims)
        out = [Fraction(0)] * size
        for flat, mass in enumerate(self.probs):
            if mass == 0:
                continue
            idx = []
            rem = flat
            for d in reversed(self.dims):
                rem, r = divmod(rem, d)
                idx.append(r)
            idx = tuple(reversed(idx))
            mapped = fn(*idx)
            if not isinstance(mapped, tuple):
                mapped = (mapped,)
            code = 0
            for d, i in zip(out_dims, mapped):
                code = code * d + i
            out[code] += mass
        return RationalJoint(tuple(out_dims), out)

    def marginal(self, *axes: int) -> "RationalJoint":
        keep = tuple(axes)
        out_dims = tuple(self.dims[a] for a in keep)
        out = [Fraction(0)] * math.prod(out_dims)
        for flat, mass in enumerate(self.probs):
            if mass == 0:
                continue
            idx = []
            rem = flat
            for d in reversed(self.dims):
                rem, r = divmod(rem, d)
                idx.append(r)
            idx = tuple(reversed(idx))
            code = 0
            for a in keep:
                code = code * self.dims[a] + idx[a]
            out[code] += mass
        return RationalJoint(out_dims, out)

    def entropy_bits(self, prec: int = 120) -> mpmath.mpf:
        with mpmath.workprec(prec):
            total = mpmath.mpf(0)
            for p in self.probs:
                if p == 0:
                    continue
                x = mpmath.mpf(p.numerator) / mpmath.mpf(p.denominator)
                total -= x * mpmath.log(x, 2)
            return +total

    def mutual_information(self, axis_a: int = 0, axis_b: int = 1,
                           prec: int = 120) -> mpmath.mpf:
        j = self.marginal(axis_a, axis_b)
        ha = j.marginal(0).entropy_bits(prec)
        hb = j.marginal(1).entropy_bits(prec)
        return ha + hb - j.entropy_bits(prec)

    def to_float(self) -> JointPMF:
        arr = np.array([float(p) for p in self.probs]).reshape(self.dims)
        return JointPMF(arr)


def entropy_mp(probs, prec: int = 120) -> mpmath.mpf:
    """High-precision entropy in bits; accepts floats or exact rationals."""
    with mpmath.workprec(prec):
        total = mpmath.mpf(0)
        for p in probs:
            if p == 0:
                continue
            if isinstance(p, Fraction):
                x = mpmath.mpf(p.numerator) / mpmath.mpf(p.denominator)
            else:
                x = mpmath.mpf(p)
            total -= x * mpmath.log(x, 2)
        return +total
