"""Blockwise two-share scheme over a typical-set index.

A secret block s^n is mapped through the typical-set rank (atypical blocks
collapse to the sentinel value M) and masked with one-time randomness:

    X = (u_l, (z - u_m) mod (M+1))        Y = (u_l, u_m)

with u_l uniform over L = floor(2**(n*ell)) values and u_m uniform over
M+1 values.  The decoder accepts when the first components match and the
modular sum of the second components is not the sentinel, in which case it
inverts the rank.  Either share alone is exactly uniform, so a single
share carries zero information about the secret.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import mpmath

from .outcome import DecodeOutcome, REJECT, accepted
from .prob import (PMF, RandomStream, entropy, iid_extension,
                   _entropy_bits)
from .typical import TypicalIndex

# floor(2**bits) stays exactly representable as float64 up to 2**52; the
# exact evaluators cap far lower, at 40 bits of masking randomness.
MAX_MASK_BITS = 40.0


def floor_pow2(bits: float) -> int:
    """floor(2**bits) evaluated at 96-bit precision before flooring."""
    if bits < 0.0:
        raise ValueError("exponent must be non-negative")
    if bits > MAX_MASK_BITS + 1e-9:
        raise ValueError(f"exponent {bits} exceeds the {MAX_MASK_BITS}-bit limit")
    with mpmath.workprec(96):
        return int(mpmath.floor(mpmath.power(2, mpmath.mpf(bits))))


@dataclass(frozen=True)
class BlockShare:
    """One share: a common-randomness component and a masked-rank component."""
    l: int
    m: int


@dataclass(frozen=True)
class BlockRandomness:
    u_l: int
    u_m: int


@dataclass(frozen=True)
class BlockwiseParams:
    """Scheme parameters tied to a concrete typical-set index."""

    ell: float
    index: TypicalIndex

    def __post_init__(self):
        if self.ell < 0.0:
            raise ValueError("correlation level must be non-negative")
        # validates the n*ell <= 40 restriction as a side effect
        object.__setattr__(self, "_l_count", floor_pow2(self.index.n * self.ell))

    @property
    def n(self) -> int:
        return self.index.n

    @property
    def l_count(self) -> int:
        return self._l_count

    @property
    def m_count(self) -> int:
        return self.index.m_count

    @property
    def share_size(self) -> int:
        """Number of distinct share values L * (M + 1)."""
        return self.l_count * (self.m_count + 1)

    def share_to_flat(self, share: BlockShare) -> int:
        return share.l * (self.m_count + 1) + share.m

    def flat_to_share(self, flat: int) -> BlockShare:
        l, m = divmod(int(flat), self.m_count + 1)
        return BlockShare(l, m)

    def draw_randomness(self, rng: RandomStream) -> BlockRandomness:
        u_l = int(rng.gen.integers(self.l_count))
        u_m = int(rng.gen.integers(self.m_count + 1))
        return BlockRandomness(u_l, u_m)


def encode(params: BlockwiseParams, secret, r: BlockRandomness) -> tuple[BlockShare, BlockShare]:
    """Split one secret block into two shares using randomness r."""
    mp1 = params.m_count + 1
    if not 0 <= r.u_l < params.l_count:
        raise ValueError(f"u_l={r.u_l} outside [0, {params.l_count})")
    if not 0 <= r.u_m < mp1:
        raise ValueError(f"u_m={r.u_m} outside [0, {mp1})")
    z = params.index.xi_plus(secret)
    x = BlockShare(r.u_l, (z - r.u_m) % mp1)
    y = BlockShare(r.u_l, r.u_m)
    return x, y


def accepts(params: BlockwiseParams, x: BlockShare, y: BlockShare) -> bool:
    """Share-pair acceptance test: matching mask, non-sentinel modular sum."""
    mp1 = params.m_count + 1
    for share in (x, y):
        if not (0 <= share.l < params.l_count and 0 <= share.m < mp1):
            raise ValueError(f"share {share} outside the share alphabet")
    if x.l != y.l:
        return False
    return (x.m + y.m) % mp1 != params.m_count


def decode(params: BlockwiseParams, x: BlockShare, y: BlockShare) -> DecodeOutcome:
    if not accepts(params, x, y):
        return REJECT
    z = (x.m + y.m) % (params.m_count + 1)
    return accepted(params.index.unrank(z))


@dataclass(frozen=True)
class BlockQuantities:
    """Exact single-run quantities of a blockwise configuration.

    Information quantities are totals in bits over the whole block;
    rates are per-symbol.  `sandwich_lo`/`sandwich_hi` bound the
    per-symbol correlation (1/n) I(X;Y).
    """

    n: int
    gamma: float
    l_count: int
    m_count: int
    h_s: float
    delta: float
    p_e: float
    i_sx: float
    i_sy: float
    i_xy: float
    rate_x: float
    rate_y: float
    rate_u: float
    h_s_given_xy: float
    sandwich_lo: float
    sandwich_hi: float


def _mask_part_entropy(l_count: int) -> float:
    # entropy of the uniform mask component; summed explicitly while the
    # table is small, closed form beyond that
    if l_count <= (1 << 20):
        return _entropy_bits(np.full(l_count, 1.0 / l_count))
    return math.log2(l_count)


def _clamp_mi(value: float) -> float:
    # mutual information is nonnegative; differences of entropies pick up
    # rounding noise of order 1e-15
    if value < -1e-9:
        raise ArithmeticError(f"mutual information came out {value}")
    return max(value, 0.0)


def exact_quantities(params: BlockwiseParams) -> BlockQuantities:
    """Exhaustive evaluation of error, secrecy, and correlation.

    The error probability runs the acceptance test over every
    (secret, mask) pair, chunked over secrets to bound memory.
    Information quantities are assembled exactly from entropies of
    small distributions: the common component u_l is drawn
    independently of everything else and appears identically in both
    shares, so it contributes log2(L) to I(X;Y) and nothing to I(S;X)
    or I(S;Y); the masked components see the block only through its
    rank z, so the rank distribution p_z carries the rest.
    """
    n = params.n
    idx = params.index
    source = idx.source
    mp1 = params.m_count + 1
    m = params.m_count
    ext = iid_extension(source, n)
    p_sn = ext.all_probs()
    ns = p_sn.shape[0]
    z_all = idx.xi_plus_all()
    um = np.arange(mp1, dtype=np.int64)

    # one pass over the (secret, u_m) grid: acceptance of the legitimate
    # pair, the exact marginal of the masked X component, and the
    # conditional entropy H(X_m | S^n); legitimate shares always carry
    # matching u_l components, so none of this depends on u_l
    err_frac = np.empty(ns)
    p_xm = np.zeros(mp1)
    h_xm_given_s = 0.0
    chunk = max(1, (1 << 22) // mp1)
    for lo in range(0, ns, chunk):
        hi = min(ns, lo + chunk)
        z = z_all[lo:hi]
        rows = hi - lo
        xm = (z[:, None] - um[None, :]) % mp1
        t = (xm + um[None, :]) % mp1
        ok = (t != m) & (t == z[:, None])
        err_frac[lo:hi] = (mp1 - ok.sum(axis=1)) / float(mp1)
        w = p_sn[lo:hi] / mp1
        flat = (np.arange(rows, dtype=np.int64)[:, None] * mp1 + xm).ravel()
        counts = np.bincount(flat, minlength=rows * mp1).reshape(rows, mp1)
        cond = counts / float(mp1)
        p_xm += np.bincount(xm.ravel(), weights=np.repeat(w, mp1),
                            minlength=mp1)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(cond > 0.0, cond * np.log2(cond), 0.0)
        h_xm_given_s += float(np.dot(p_sn[lo:hi], -terms.sum(axis=1)))
    p_e = float(np.dot(p_sn, err_frac))

    atypical = (z_all == m).astype(np.float64)
    delta = float(np.dot(p_sn, atypical))

    i_sx = _clamp_mi(_entropy_bits(p_xm) - h_xm_given_s)
    # the masked Y component is the mask itself, so its conditional
    # distribution given any secret is the same uniform law
    p_ym = np.full(mp1, float(p_sn.sum()) / mp1)
    i_sy = _clamp_mi(_entropy_bits(p_ym) - _entropy_bits(np.full(mp1, 1.0 / mp1)))

    # correlation: common component plus the masked-component pair; the
    # joint of the masked components is the circulant p_z[(x+y) mod (M+1)]
    # / (M+1), so every row is a permutation of p_z/(M+1) and both
    # marginals equal the full mass over M+1
    p_z = np.bincount(z_all, weights=p_sn, minlength=mp1)
    with np.errstate(divide="ignore", invalid="ignore"):
        cells = np.where(p_z > 0.0, p_z / mp1 * np.log2(p_z / mp1), 0.0)
    h_joint_mm = -mp1 * float(cells.sum())
    h_marg = _entropy_bits(np.full(mp1, float(p_z.sum()) / mp1))
    i_l = _mask_part_entropy(params.l_count)
    i_xy = i_l + _clamp_mi(2.0 * h_marg - h_joint_mm)

    # residual secret uncertainty given both shares: the pair determines
    # exactly (u_l, u_m, z), the mask is independent of the secret, and
    # s^n -> (s^n, z) is a bijection, so H(S^n | X Y) = H(S^n) - H(Z)
    h_s_given_xy = max(_entropy_bits(p_sn) - _entropy_bits(p_z), 0.0)

    rate = math.log2(params.share_size) / n
    h_s = entropy(source)
    lo = i_l / n
    penalty = (delta * math.log2(delta) if delta > 0.0 else 0.0) + 1.0
    hi = lo + delta * h_s + (2.0 - delta) * params.index.gamma + penalty / n
    return BlockQuantities(
        n=n, gamma=params.index.gamma, l_count=params.l_count,
        m_count=m, h_s=h_s, delta=delta, p_e=p_e,
        i_sx=i_sx, i_sy=i_sy, i_xy=i_xy,
        rate_x=rate, rate_y=rate, rate_u=rate,
        h_s_given_xy=h_s_given_xy, sandwich_lo=lo, sandwich_hi=hi)


def monte_carlo_error(params: BlockwiseParams, trials: int,
                      rng: RandomStream, chunk: int = 1 << 16) -> tuple[float, float]:
    """MC estimate of the decoding error probability with a 95% half-width."""
    if trials < 1:
        raise ValueError("trials must be positive")
    n = params.n
    idx = params.index
    mp1 = params.m_count + 1
    ext = iid_extension(idx.source, n)
    powers = idx.k ** np.arange(n - 1, -1, -1, dtype=np.int64)
    rank_map = idx.xi_plus_all()
    fails = 0
    done = 0
    block = 0
    while done < trials:
        take = min(chunk, trials - done)
        sub = rng.substream(block)
        seqs = ext.sample(sub, take)
        u_m = sub.gen.integers(mp1, size=take)
        codes = seqs @ powers
        z = rank_map[codes]
        xm = (z - u_m) % mp1
        t = (xm + u_m) % mp1
        # the u_l components of a legitimate pair match by construction,
        # so acceptance rides on the masked components alone
        ok = (t != params.m_count) & (t == z)
        fails += int(take - np.count_nonzero(ok))
        done += take
        block += 1
    est = fails / trials
    if fails == 0:
        return 0.0, 3.0 / trials
    half = 1.96 * math.sqrt(est * (1.0 - est) / trials)
    return est, half
