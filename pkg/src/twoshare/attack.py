"""Impersonation attacks and information-theoretic bound checkers.

The attacker hands the combiner a forged share and hopes the legitimate
counterpart share makes the pair acceptable.  Success probability is linear
in the forgery distribution, so an optimal attack sits on a point mass and
exact search only needs to scan forged share values; ties resolve to the
lexicographically smallest forgery.

Bound checkers operate on exact or estimated test quantities:
  alpha = P{legitimate pair rejected},  beta = P{independent pair accepted}.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .block import BlockwiseParams
from .iidsum import convolve, mean_tail_strict, merge_values, power_convolve
from .prob import (CapExceededError, JointPMF, PMF, RandomStream,
                   binary_entropy, iid_extension, sample)
from .symbol import SymbolwiseCodec, legit_score_distribution

TYPE_CAP = 1 << 20


@dataclass(frozen=True)
class AttackResult:
    success_prob: float
    optimal_forgery: tuple
    side: str
    mode: str
    trials: int | None = None
    ci_halfwidth: float | None = None


def _check_side(side: str):
    if side not in ("x", "y"):
        raise ValueError("side must be 'x' or 'y'")


# ---------------------------------------------------------------------------
# Blockwise attacks


def blockwise_attack(params: BlockwiseParams, side: str = "x") -> AttackResult:
    """Exact optimal forgery against the blockwise acceptance test.

    The test is a conjunction of a first-component match and a modular-sum
    condition on the second components, and the two components of the honest
    share are independent, so each forged share's success probability is the
    product of two componentwise acceptance masses.
    """
    _check_side(side)
    mp1 = params.m_count + 1
    m = params.m_count
    if side == "x":
        # honest counterpart is Y = (u_l, u_m), both components uniform
        p_m = np.full(mp1, 1.0 / mp1)
    else:
        # honest counterpart is X; its masked component is a uniform mask
        # of the rank, accumulated here by explicit enumeration
        z_all = params.index.xi_plus_all()
        p_sn = iid_extension(params.index.source, params.n).all_probs()
        p_m = np.zeros(mp1)
        for u in range(mp1):
            np.add.at(p_m, (z_all - u) % mp1, p_sn / mp1)
    # success of forged component value c against honest component j:
    # accepted iff (c + j) mod (M+1) != M
    c = np.arange(mp1, dtype=np.int64)
    bad = (m - c) % mp1  # the single rejected honest value per forged c
    comp_m = 1.0 - p_m[bad]
    # the honest first component is uniform, so every forged first value
    # succeeds with probability exactly 1/L; forged value 0 is the
    # lexicographically least maximiser
    best_m = int(np.argmax(comp_m))
    prob = float(comp_m[best_m]) / params.l_count
    return AttackResult(success_prob=prob, optimal_forgery=(0, best_m),
                        side=side, mode="exact")


# ---------------------------------------------------------------------------
# Symbolwise attacks


def _forged_symbol_dists(codec: SymbolwiseCodec, side: str) -> list[dict[float, float]]:
    """Score distribution per forged symbol value against the honest marginal."""
    if side == "x":
        marginal = codec.p_y.probs
        rows = [codec.score_table[a, :] for a in range(codec.scheme.share_size)]
    else:
        marginal = codec.p_x.probs
        rows = [codec.score_table[:, a] for a in range(codec.scheme.share_size)]
    return [merge_values(row, marginal) for row in rows]


def _compositions(total: int, parts: int):
    for cuts in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        out = []
        for c in cuts:
            out.append(c - prev - 1)
            prev = c
        out.append(total + parts - 2 - prev)
        yield tuple(out)


def symbolwise_attack(codec: SymbolwiseCodec, side: str = "x",
                      type_cap: int = TYPE_CAP) -> AttackResult:
    """Exact optimal forged sequence by score-distribution convolution.

    Success depends only on how many positions carry each distinct
    per-symbol score distribution, so the scan runs over forged-sequence
    types rather than all sequences.
    """
    _check_side(side)
    n = codec.n
    dists = _forged_symbol_dists(codec, side)
    # group forged symbols with identical score distributions
    keys: dict[tuple, int] = {}
    classes: list[dict[float, float]] = []
    class_min: list[int] = []
    for a, d in enumerate(dists):
        key = tuple(sorted((round(v, 12), round(p, 12)) for v, p in d.items()))
        if key in keys:
            continue
        keys[key] = len(classes)
        classes.append(d)
        class_min.append(a)
    kc = len(classes)
    n_types = math.comb(n + kc - 1, kc - 1)
    if n_types > type_cap:
        raise CapExceededError(f"{n_types} forged-sequence types exceed the "
                               f"cap {type_cap}; use the Monte Carlo path")
    # lazily memoized per-class convolution powers
    powers: dict[tuple[int, int], dict[float, float]] = {}

    def class_power(ci: int, count: int) -> dict[float, float]:
        key = (ci, count)
        if key not in powers:
            powers[key] = power_convolve(classes[ci], count)
        return powers[key]

    best_prob = -1.0
    best_seq: tuple[int, ...] | None = None
    for counts in _compositions(n, kc):
        dist = {0.0: 1.0}
        for ci, cnt in enumerate(counts):
            if cnt:
                dist = convolve(dist, class_power(ci, cnt))
        prob = mean_tail_strict(dist, n, codec.threshold)
        seq = tuple(sorted(sym for ci, cnt in enumerate(counts)
                           for sym in [class_min[ci]] * cnt))
        if prob > best_prob or (prob == best_prob and best_seq is not None
                                and seq < best_seq):
            best_prob = prob
            best_seq = seq
    return AttackResult(success_prob=float(best_prob), optimal_forgery=best_seq,
                        side=side, mode="exact")


def modular_attack_success(codec: SymbolwiseCodec, side: str = "x") -> float:
    """Success probability of any fixed forgery against the modular splitter.

    Against a uniform honest share the reconstructed symbols are uniform
    over the share alphabet whatever the forgery, so the success mass is
    the count of accepted reconstructed sequences over M**n, accumulated
    by secret-type counting.  Serves as an independent cross-check for
    `symbolwise_attack`.
    """
    _check_side(side)
    m = codec.scheme.share_size
    p_s = codec.source.probs
    n = codec.n
    values = [math.log2(m * p) if p > 0.0 else -math.inf for p in p_s]
    total = 0.0
    k = codec.source.support_size
    for counts in _compositions(n, k):
        if any(p_s[i] == 0.0 and c > 0 for i, c in enumerate(counts)):
            continue
        score = 0.0
        for v, cnt in zip(values, counts):
            score += v * cnt
        if score / n > codec.threshold:
            ways = math.comb(n, counts[0])
            rem = n - counts[0]
            for cnt in counts[1:]:
                ways *= math.comb(rem, cnt)
                rem -= cnt
            total += ways
    return total / float(m) ** n


# ---------------------------------------------------------------------------
# Brute-force oracle and Monte Carlo


def attack_bruteforce(accept_fn: Callable[[int, int], bool], forged_size: int,
                      honest_probs: np.ndarray) -> tuple[float, int]:
    """Scan every forged value against every honest value.

    accept_fn takes (forged_flat, honest_flat) indices.  Returns the best
    success probability and the smallest forged index attaining it.
    Intended as a small-instance oracle; cost is forged_size * |honest|.
    """
    best = -1.0
    best_at = 0
    honest_idx = range(honest_probs.shape[0])
    for f in range(forged_size):
        p = 0.0
        for h in honest_idx:
            if honest_probs[h] > 0.0 and accept_fn(f, h):
                p += honest_probs[h]
        if p > best:
            best = p
            best_at = f
    return best, best_at


def monte_carlo_attack(scheme, side: str, forgery, trials: int,
                       rng: RandomStream, chunk: int = 1 << 16) -> AttackResult:
    """Estimate a forgery's acceptance probability by sampling honest shares.

    `forgery` is a concrete share (blockwise: (l, m) pair; symbolwise: a
    symbol sequence) or a PMF sampled per trial (blockwise: over the flat
    share alphabet; symbolwise: per position over symbols).
    """
    _check_side(side)
    if trials < 1:
        raise ValueError("trials must be positive")
    hits = 0
    done = 0
    block = 0
    if isinstance(scheme, BlockwiseParams):
        params = scheme
        mp1 = params.m_count + 1
        m = params.m_count
        rank_map = params.index.xi_plus_all()
        powers = params.index.k ** np.arange(params.n - 1, -1, -1, dtype=np.int64)
        ext = iid_extension(params.index.source, params.n) if side == "y" else None
        while done < trials:
            take = min(chunk, trials - done)
            sub = rng.substream(block)
            if isinstance(forgery, PMF):
                flat = sample(forgery, sub, take)
                f_l, f_m = np.divmod(flat, mp1)
            else:
                f_l = np.full(take, int(forgery[0]))
                f_m = np.full(take, int(forgery[1]))
            u_l = sub.gen.integers(params.l_count, size=take)
            u_m = sub.gen.integers(mp1, size=take)
            if side == "x":
                h_l, h_m = u_l, u_m
            else:
                seqs = ext.sample(sub, take)
                z = rank_map[seqs @ powers]
                h_l, h_m = u_l, (z - u_m) % mp1
            ok = (f_l == h_l) & ((f_m + h_m) % mp1 != m)
            hits += int(np.count_nonzero(ok))
            done += take
            block += 1
    elif isinstance(scheme, SymbolwiseCodec):
        codec = scheme
        n = codec.n
        w = codec.score_table
        honest = codec.p_y if side == "x" else codec.p_x
        while done < trials:
            take = min(chunk, trials - done)
            sub = rng.substream(block)
            if isinstance(forgery, PMF):
                f = sample(forgery, sub, (take, n))
            else:
                f = np.tile(np.asarray(forgery, dtype=np.int64), (take, 1))
            h = sample(honest, sub, (take, n))
            scores = (w[f, h] if side == "x" else w[h, f]).sum(axis=1) / n
            hits += int(np.count_nonzero(scores > codec.threshold))
            done += take
            block += 1
    else:
        raise TypeError(f"unsupported scheme object {type(scheme)!r}")
    est = hits / trials
    if hits == 0:
        half = 3.0 / trials
    else:
        half = 1.96 * math.sqrt(est * (1.0 - est) / trials)
    forged = tuple(forgery) if not isinstance(forgery, PMF) else ("sampled",)
    return AttackResult(success_prob=est, optimal_forgery=forged, side=side,
                        mode="mc", trials=trials, ci_halfwidth=half)


# ---------------------------------------------------------------------------
# Exponents


@dataclass(frozen=True)
class ExponentFit:
    """Least-squares fits of -log2(P) against n.

    `slope` is the through-origin fit; the affine fit is reported alongside
    because a through-origin fit picks up an n-independent bias at small n.
    Points with zero probability are excluded and listed in `excluded`.
    """

    slope: float
    affine_slope: float
    affine_intercept: float
    points: tuple[tuple[int, float], ...]
    excluded: tuple[int, ...]


def exponent_points(pairs: Sequence[tuple[int, float]]) -> list[tuple[int, float]]:
    """Per-point exponents -(1/n) log2 P; zero probabilities map to inf."""
    out = []
    for n, p in pairs:
        if p < 0.0 or p > 1.0:
            raise ValueError(f"probability {p!r} outside [0, 1]")
        out.append((n, math.inf if p == 0.0 else -math.log2(p) / n))
    return out


def exponent_fit(pairs: Sequence[tuple[int, float]]) -> ExponentFit:
    used = [(n, p) for n, p in pairs if p > 0.0]
    excluded = tuple(n for n, p in pairs if p == 0.0)
    if len(used) < 2:
        raise ValueError("need at least two positive-probability points")
    ns = np.array([n for n, _ in used], dtype=np.float64)
    ys = np.array([-math.log2(p) for _, p in used])
    slope = float(np.dot(ns, ys) / np.dot(ns, ns))
    affine_slope, affine_intercept = (float(v) for v in np.polyfit(ns, ys, 1))
    points = tuple((int(n), float(y / n)) for n, y in zip(ns, ys))
    return ExponentFit(slope=slope, affine_slope=affine_slope,
                       affine_intercept=affine_intercept, points=points,
                       excluded=excluded)


# ---------------------------------------------------------------------------
# Test quantities and converse checkers


@dataclass(frozen=True)
class TestQuantities:
    alpha: float   # P{legitimate pair rejected}
    beta: float    # P{independent pair accepted}


def test_quantities(joint_xy: JointPMF, accept_fn: Callable[[int, int], bool]) -> TestQuantities:
    """Dense evaluation of alpha and beta for an arbitrary acceptance set."""
    table = joint_xy.probs
    if table.ndim != 2:
        raise ValueError("need a two-axis share joint")
    px = table.sum(axis=1)
    py = table.sum(axis=0)
    alpha = 0.0
    beta = 0.0
    for x in range(table.shape[0]):
        for y in range(table.shape[1]):
            if accept_fn(x, y):
                beta += px[x] * py[y]
            else:
                alpha += table[x, y]
    return TestQuantities(alpha=alpha, beta=beta)


def blockwise_test_quantities(params: BlockwiseParams) -> TestQuantities:
    """Exact alpha and beta via the componentwise factorization."""
    mp1 = params.m_count + 1
    p_sn = iid_extension(params.index.source, params.n).all_probs()
    z_all = params.index.xi_plus_all()
    alpha = float(np.dot(p_sn, (z_all == params.m_count).astype(np.float64)))
    # independent share pair: first components match with mass 1/L, and the
    # modular sum avoids the sentinel for all but one honest value
    p_xm = np.zeros(mp1)
    for u in range(mp1):
        np.add.at(p_xm, (z_all - u) % mp1, p_sn / mp1)
    p_ym = np.full(mp1, 1.0 / mp1)
    c = np.arange(mp1, dtype=np.int64)
    bad = (params.m_count - c) % mp1
    beta_m = float(np.dot(p_xm, 1.0 - p_ym[bad]))
    beta = (1.0 / params.l_count) * beta_m
    return TestQuantities(alpha=alpha, beta=beta)


def symbolwise_test_quantities(codec: SymbolwiseCodec) -> TestQuantities:
    """Exact alpha and beta by score-sum convolution."""
    legit = power_convolve(legit_score_distribution(codec), codec.n)
    alpha = 1.0 - mean_tail_strict(legit, codec.n, codec.threshold)
    indep = merge_values(codec.score_table.ravel(),
                         np.outer(codec.p_x.probs, codec.p_y.probs).ravel())
    beta = mean_tail_strict(power_convolve(indep, codec.n), codec.n,
                            codec.threshold)
    return TestQuantities(alpha=min(max(alpha, 0.0), 1.0), beta=beta)


@dataclass(frozen=True)
class BoundCheck:
    lhs: float
    rhs: float
    holds: bool
    vacuous: bool = False


LOGSUM_TOL = 1e-9


def logsum_bound_check(i_xy_bits: float, tq: TestQuantities,
                       tol: float = LOGSUM_TOL) -> BoundCheck:
    """Correlation lower bound I(X;Y) >= -h(alpha) - (1-alpha) log2 beta.

    beta = 0 makes the right side infinite in principle but the acceptance
    region then has no independent mass at all and the bound is vacuous.
    """
    if tq.beta <= 0.0:
        return BoundCheck(lhs=i_xy_bits, rhs=math.inf, holds=True, vacuous=True)
    rhs = -binary_entropy(min(max(tq.alpha, 0.0), 1.0)) \
        - (1.0 - tq.alpha) * math.log2(tq.beta)
    return BoundCheck(lhs=i_xy_bits, rhs=rhs, holds=i_xy_bits >= rhs - tol)


def fano_check(p_e: float, h_s_given_xy_bits: float, n: int,
               secret_size: int, tol: float = LOGSUM_TOL) -> BoundCheck:
    """(1/n) H(S^n | X Y) <= (1/n) h(P_e) + P_e log2 |S|."""
    lhs = h_s_given_xy_bits / n
    rhs = binary_entropy(min(max(p_e, 0.0), 1.0)) / n + p_e * math.log2(secret_size)
    return BoundCheck(lhs=lhs, rhs=rhs, holds=lhs <= rhs + tol)


def converse_exponent_check(i_xy_bits: float, alpha: float, p_x: float,
                            p_y: float, n: int,
                            tol: float = LOGSUM_TOL) -> BoundCheck:
    """Attack exponents cannot outrun the correlation rate.

    Rearranges the correlation lower bound into
    max exponent <= [ (1/n) I(X;Y) + (1/n) h(alpha) ] / (1 - alpha).
    """
    if alpha >= 1.0 - 1e-12:
        return BoundCheck(lhs=math.inf, rhs=math.inf, holds=True, vacuous=True)
    if p_x <= 0.0 or p_y <= 0.0:
        # a zero attack probability has no finite exponent to bound
        return BoundCheck(lhs=math.inf, rhs=math.inf, holds=True, vacuous=True)
    lhs = max(-math.log2(p_x) / n, -math.log2(p_y) / n)
    rhs = (i_xy_bits / n + binary_entropy(min(max(alpha, 0.0), 1.0)) / n) \
        / (1.0 - alpha)
    return BoundCheck(lhs=lhs, rhs=rhs, holds=lhs <= rhs + tol)
