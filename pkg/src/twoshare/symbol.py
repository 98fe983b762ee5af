"""Symbolwise two-share scheme: a per-symbol splitter applied i.i.d.

The workhorse splitter is modular masking over {0..M-1}:

    f(s, u) = ((s - u) mod M, u)      g(x, y) = (x + y) mod M, or None
                                       when the sum falls outside the
                                       secret alphabet

with u uniform.  Repeating f over an n-block and accepting only share
pairs whose empirical log-likelihood ratio clears I(X;Y) - gamma_n gives
forgery detection at an exponent approaching the correlation level
ell = log2(M) - H(S).

Any per-symbol splitter with the same secrecy and decodability profile can
be dropped in; `validate_base` checks the profile exactly before use.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .outcome import DecodeOutcome, REJECT, accepted
from .iidsum import mean_tail_strict, merge_values, power_convolve
from .prob import (JointPMF, PMF, RandomStream, conditional_entropy, entropy,
                   induce_joint, mutual_information, sample)


@dataclass(frozen=True)
class BaseScheme:
    """A per-symbol splitter f: S x U -> X x Y with decoder g."""

    name: str
    secret_size: int
    share_size: int
    rand_size: int
    encode_fn: Callable[[int, int], tuple[int, int]] = field(repr=False)
    decode_fn: Callable[[int, int], int | None] = field(repr=False)

    def __post_init__(self):
        if self.secret_size < 2:
            raise ValueError("secret alphabet needs at least two symbols")
        if self.share_size < 1 or self.rand_size < 1:
            raise ValueError("share and randomness alphabets must be non-empty")


def fstar(share_size: int, s: int, u: int) -> tuple[int, int]:
    """Modular splitter: x = (s - u) mod M, y = u."""
    return (s - u) % share_size, u


def gstar(share_size: int, secret_size: int, x: int, y: int) -> int | None:
    """Modular decoder; None marks a sum outside the secret alphabet."""
    v = (x + y) % share_size
    return v if v < secret_size else None


def modular_scheme(share_size: int, secret_size: int) -> BaseScheme:
    if share_size < secret_size:
        raise ValueError("share alphabet must cover the secret alphabet")
    return BaseScheme(
        name=f"modular(M={share_size},S={secret_size})",
        secret_size=secret_size, share_size=share_size, rand_size=share_size,
        encode_fn=lambda s, u: fstar(share_size, s, u),
        decode_fn=lambda x, y: gstar(share_size, secret_size, x, y))


def modular_correlation_level(share_size: int, source: PMF) -> float:
    """Correlation level log2(M) - H(S) of the modular splitter."""
    if share_size < source.support_size:
        raise ValueError("share alphabet must cover the secret alphabet")
    return math.log2(share_size) - entropy(source)


# deliberately broken splitters, used to exercise the validator

def identity_leak_scheme(share_size: int, secret_size: int) -> BaseScheme:
    """Puts the secret in the clear in share X."""
    return BaseScheme(
        name="identity-leak", secret_size=secret_size,
        share_size=share_size, rand_size=share_size,
        encode_fn=lambda s, u: (s, u),
        decode_fn=lambda x, y: x if x < secret_size else None)


def nondecodable_scheme(share_size: int, secret_size: int) -> BaseScheme:
    """Shares carry the randomness only; the pair never determines s."""
    return BaseScheme(
        name="non-decodable", secret_size=secret_size,
        share_size=share_size, rand_size=share_size,
        encode_fn=lambda s, u: (u, u),
        decode_fn=lambda x, y: gstar(share_size, secret_size, x, y))


def undersized_scheme(share_size: int, secret_size: int) -> BaseScheme:
    """Share alphabet smaller than the secret alphabet."""
    if share_size >= secret_size:
        raise ValueError("this scheme is broken only when M < |S|")
    return BaseScheme(
        name="undersized", secret_size=secret_size,
        share_size=share_size, rand_size=share_size,
        encode_fn=lambda s, u: ((s - u) % share_size, u),
        decode_fn=lambda x, y: gstar(share_size, secret_size, x, y))


SECRECY_TOL = 1e-9

FAIL_SECRECY_X = "share X leaks: H(S|X) < H(S)"
FAIL_SECRECY_Y = "share Y leaks: H(S|Y) < H(S)"
FAIL_DECODE = "share pair does not determine the secret: H(S|XY) > 0"
FAIL_SIZE = "alphabet below the secret size: min(|X|,|Y|,|U|) < |S|"
FAIL_DECODER = "decoder disagrees with the splitter on some (s, u)"


@dataclass(frozen=True)
class ValidationReport:
    h_s: float
    h_s_given_x: float
    h_s_given_y: float
    h_s_given_xy: float
    ell: float
    sizes_ok: bool
    decoder_ok: bool
    failures: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return not self.failures


def scheme_joint(scheme: BaseScheme, source: PMF) -> JointPMF:
    """Exact joint of (S, U, X, Y) under the splitter."""
    if source.support_size != scheme.secret_size:
        raise ValueError("source alphabet does not match the scheme")
    src = JointPMF.outer(source, PMF.uniform(scheme.rand_size))
    return induce_joint(src, scheme.encode_fn,
                        (scheme.share_size, scheme.share_size))


def validate_base(scheme: BaseScheme, source: PMF,
                  tol: float = SECRECY_TOL) -> ValidationReport:
    """Exact check of per-symbol secrecy, decodability, and sizes."""
    joint = scheme_joint(scheme, source)
    h_s = entropy(source)
    h_s_x = conditional_entropy(joint.marginal(0, 2), 0)
    h_s_y = conditional_entropy(joint.marginal(0, 3), 0)
    h_s_xy = conditional_entropy(joint.marginal(0, 2, 3), 0)
    ell = mutual_information(joint.marginal(2, 3))
    sizes_ok = min(scheme.share_size, scheme.share_size,
                   scheme.rand_size) >= scheme.secret_size
    decoder_ok = all(
        scheme.decode_fn(*scheme.encode_fn(s, u)) == s
        for s in range(scheme.secret_size) for u in range(scheme.rand_size))
    failures = []
    if h_s - h_s_x > tol:
        failures.append(FAIL_SECRECY_X)
    if h_s - h_s_y > tol:
        failures.append(FAIL_SECRECY_Y)
    if h_s_xy > tol:
        failures.append(FAIL_DECODE)
    if not sizes_ok:
        failures.append(FAIL_SIZE)
    if not decoder_ok:
        failures.append(FAIL_DECODER)
    return ValidationReport(
        h_s=h_s, h_s_given_x=h_s_x, h_s_given_y=h_s_y, h_s_given_xy=h_s_xy,
        ell=ell, sizes_ok=sizes_ok, decoder_ok=decoder_ok,
        failures=tuple(failures))


class SchemeValidationError(Exception):
    pass


@dataclass(frozen=True)
class SymbolwiseCodec:
    """A validated per-symbol splitter repeated over n-blocks.

    Carries the exact per-symbol joints and the log-likelihood-ratio score
    table used by the acceptance test.  `threshold` is the per-symbol
    acceptance cutoff I(X;Y) - gamma; a pair is accepted when its mean
    score strictly exceeds it.
    """

    scheme: BaseScheme
    source: PMF
    n: int
    gamma: float
    joint: JointPMF = field(repr=False)
    p_xy: JointPMF = field(repr=False)
    p_x: PMF = field(repr=False)
    p_y: PMF = field(repr=False)
    score_table: np.ndarray = field(repr=False)
    i_xy: float

    @property
    def threshold(self) -> float:
        return self.i_xy - self.gamma

    def encode_tables(self) -> tuple[np.ndarray, np.ndarray]:
        m_s, m_u = self.scheme.secret_size, self.scheme.rand_size
        ex = np.zeros((m_s, m_u), dtype=np.int64)
        ey = np.zeros((m_s, m_u), dtype=np.int64)
        for s in range(m_s):
            for u in range(m_u):
                ex[s, u], ey[s, u] = self.scheme.encode_fn(s, u)
        return ex, ey


def make_codec(scheme: BaseScheme, source: PMF, n: int, gamma: float,
               require_valid: bool = True) -> SymbolwiseCodec:
    if n < 1:
        raise ValueError("blocklength must be positive")
    if gamma <= 0.0:
        raise ValueError("gamma must be positive")
    if require_valid:
        report = validate_base(scheme, source)
        if not report.passed:
            raise SchemeValidationError("; ".join(report.failures))
    joint = scheme_joint(scheme, source)
    p_xy = joint.marginal(2, 3)
    p_x = p_xy.marginal(0)
    p_y = p_xy.marginal(1)
    table = p_xy.probs
    denom = np.outer(p_x.probs, p_y.probs)
    with np.errstate(divide="ignore"):
        score = np.where(table > 0.0, np.log2(np.where(table > 0.0, table, 1.0) /
                                              denom), -np.inf)
    i_xy = mutual_information(p_xy)
    return SymbolwiseCodec(scheme=scheme, source=source, n=n, gamma=gamma,
                           joint=joint, p_xy=p_xy, p_x=p_x, p_y=p_y,
                           score_table=score, i_xy=i_xy)


def encode_n(codec: SymbolwiseCodec, secret, rand) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Apply the splitter position by position."""
    secret = tuple(int(v) for v in secret)
    rand = tuple(int(v) for v in rand)
    if len(secret) != codec.n or len(rand) != codec.n:
        raise ValueError(f"secret and randomness must have length {codec.n}")
    xs, ys = [], []
    for s, u in zip(secret, rand):
        if not 0 <= s < codec.scheme.secret_size:
            raise ValueError(f"secret symbol {s} outside the alphabet")
        if not 0 <= u < codec.scheme.rand_size:
            raise ValueError(f"randomness symbol {u} outside the alphabet")
        x, y = codec.scheme.encode_fn(s, u)
        xs.append(x)
        ys.append(y)
    return tuple(xs), tuple(ys)


def draw_randomness_n(codec: SymbolwiseCodec, rng: RandomStream) -> tuple[int, ...]:
    return tuple(int(v) for v in rng.gen.integers(codec.scheme.rand_size,
                                                  size=codec.n))


def llr_score(codec: SymbolwiseCodec, xs, ys) -> float:
    """Mean per-symbol log-likelihood ratio; -inf on zero-probability pairs."""
    xs = tuple(int(v) for v in xs)
    ys = tuple(int(v) for v in ys)
    if len(xs) != codec.n or len(ys) != codec.n:
        raise ValueError(f"shares must have length {codec.n}")
    total = 0.0
    for x, y in zip(xs, ys):
        w = codec.score_table[x, y]
        if w == -np.inf:
            return float("-inf")
        total += float(w)
    return total / codec.n


def accepts_n(codec: SymbolwiseCodec, xs, ys) -> bool:
    """Strict threshold test; ties are rejected."""
    return llr_score(codec, xs, ys) > codec.threshold


def decode_n(codec: SymbolwiseCodec, xs, ys) -> DecodeOutcome:
    if not accepts_n(codec, xs, ys):
        return REJECT
    out = []
    for x, y in zip(xs, ys):
        s = codec.scheme.decode_fn(int(x), int(y))
        if s is None:
            raise RuntimeError("decoder undefined on an accepted share pair")
        out.append(s)
    return accepted(out)


def legit_score_distribution(codec: SymbolwiseCodec) -> dict[float, float]:
    """Per-symbol score distribution under legitimate share pairs."""
    table = codec.p_xy.probs
    mask = table > 0.0
    return merge_values(codec.score_table[mask], table[mask])


@dataclass(frozen=True)
class SymbolQuantities:
    """Exact per-configuration quantities; i.i.d. structure makes n-fold
    information totals n times the per-symbol values."""

    n: int
    gamma: float
    p_e: float
    i_xy_per_symbol: float
    i_sx_per_symbol: float
    i_sy_per_symbol: float
    h_s_given_x: float
    h_s_given_y: float
    h_s_given_xy: float
    rate: float


def exact_symbolwise_quantities(codec: SymbolwiseCodec) -> SymbolQuantities:
    """Error probability by score-sum convolution, the rest from the
    per-symbol joint."""
    dist = power_convolve(legit_score_distribution(codec), codec.n)
    acc = mean_tail_strict(dist, codec.n, codec.threshold)
    p_e = min(max(1.0 - acc, 0.0), 1.0)
    joint = codec.joint
    return SymbolQuantities(
        n=codec.n, gamma=codec.gamma, p_e=p_e,
        i_xy_per_symbol=codec.i_xy,
        i_sx_per_symbol=mutual_information(joint.marginal(0, 2)),
        i_sy_per_symbol=mutual_information(joint.marginal(0, 3)),
        h_s_given_x=conditional_entropy(joint.marginal(0, 2), 0),
        h_s_given_y=conditional_entropy(joint.marginal(0, 3), 0),
        h_s_given_xy=conditional_entropy(joint.marginal(0, 2, 3), 0),
        rate=math.log2(codec.scheme.share_size))


def monte_carlo_error(codec: SymbolwiseCodec, trials: int, rng: RandomStream,
                      chunk: int = 1 << 16) -> tuple[float, float]:
    """MC estimate of the rejection probability for legitimate pairs."""
    if trials < 1:
        raise ValueError("trials must be positive")
    ex, ey = codec.encode_tables()
    w = codec.score_table
    n = codec.n
    fails = 0
    done = 0
    block = 0
    while done < trials:
        take = min(chunk, trials - done)
        sub = rng.substream(block)
        s = sample(codec.source, sub, (take, n))
        u = sub.gen.integers(codec.scheme.rand_size, size=(take, n))
        xs = ex[s, u]
        ys = ey[s, u]
        scores = w[xs, ys].sum(axis=1) / n
        fails += int(np.count_nonzero(~(scores > codec.threshold)))
        done += take
        block += 1
    est = fails / trials
    if fails == 0:
        return 0.0, 3.0 / trials
    half = 1.96 * math.sqrt(est * (1.0 - est) / trials)
    return est, half
