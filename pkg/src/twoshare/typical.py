"""Typical sets over i.i.d. sources, with an indexable member list.

Membership uses the two-sided window |mean surprisal - H(S)| <= gamma.
Surprisals accumulate left to right everywhere (scalar and vectorized
paths), so a sequence lands on the same side of the window no matter
which path tests it.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .prob import PMF, CapExceededError, DENSE_CAP, RandomStream, entropy, iid_extension


class EmptyTypicalSetError(Exception):
    """The window caught no sequence; the blockwise scheme cannot run."""


@dataclass(frozen=True)
class GammaSchedule:
    """Slack sequence gamma_n, either n**(-a) or a constant.

    The power-law exponent is restricted to (0, 0.5) so that
    sqrt(n) * gamma_n grows while gamma_n itself shrinks.
    """

    kind: str
    param: float

    def __post_init__(self):
        if self.kind == "power_law":
            if not 0.0 < self.param < 0.5:
                raise ValueError("power-law exponent must lie strictly in (0, 0.5)")
        elif self.kind == "constant":
            if self.param <= 0.0:
                raise ValueError("constant slack must be positive")
        else:
            raise ValueError(f"unknown schedule kind {self.kind!r}")

    @classmethod
    def power_law(cls, exponent: float = 1.0 / 3.0) -> "GammaSchedule":
        return cls("power_law", exponent)

    @classmethod
    def constant(cls, gamma: float) -> "GammaSchedule":
        return cls("constant", gamma)

    def gamma_at(self, n: int) -> float:
        if n < 1:
            raise ValueError("blocklength must be positive")
        if self.kind == "power_law":
            return float(n) ** (-self.param)
        return self.param


def _surprisal_table(source: PMF) -> np.ndarray:
    p = source.probs
    return np.where(p > 0.0, -np.log2(np.where(p > 0.0, p, 1.0)), np.inf)


def surprisal_totals(source: PMF, n: int, cap: int = DENSE_CAP) -> np.ndarray:
    """Total surprisal of every length-n sequence, lexicographic order."""
    if source.support_size ** n > cap:
        raise CapExceededError(
            f"{source.support_size ** n} sequences exceed the cap {cap}; "
            "use the Monte Carlo path")
    w = _surprisal_table(source)
    totals = w.copy()
    for _ in range(n - 1):
        totals = (totals[:, None] + w[None, :]).ravel()
    return totals


def is_typical(seq, source: PMF, gamma: float) -> bool:
    """Window test on one sequence; symbols outside the support fail."""
    w = _surprisal_table(source)
    total = 0.0
    n = 0
    for s in seq:
        total += w[int(s)]
        n += 1
    if n == 0:
        raise ValueError("empty sequence")
    return bool(abs(total / n - entropy(source)) <= gamma)


@dataclass(frozen=True)
class TypicalIndex:
    """The typical set of a source at blocklength n, with a rank bijection.

    `member_codes` holds the lexicographic codes of members in increasing
    order, so rank m corresponds to the (m+1)-th typical sequence in
    lexicographic order.  `xi_plus` extends the rank map by sending every
    atypical sequence to m_count.
    """

    source: PMF
    n: int
    gamma: float
    member_codes: np.ndarray = field(repr=False)

    @property
    def k(self) -> int:
        return self.source.support_size

    @property
    def m_count(self) -> int:
        return int(self.member_codes.shape[0])

    def _code(self, seq) -> int:
        code = 0
        for s in seq:
            s = int(s)
            if not 0 <= s < self.k:
                raise ValueError(f"symbol {s} outside alphabet of size {self.k}")
            code = code * self.k + s
        return code

    def contains(self, seq) -> bool:
        code = self._code(seq)
        i = int(np.searchsorted(self.member_codes, code))
        return i < self.m_count and int(self.member_codes[i]) == code

    def rank(self, seq) -> int:
        code = self._code(seq)
        i = int(np.searchsorted(self.member_codes, code))
        if i >= self.m_count or int(self.member_codes[i]) != code:
            raise KeyError(f"sequence {tuple(seq)} is not typical")
        return i

    def unrank(self, m: int) -> tuple[int, ...]:
        if not 0 <= m < self.m_count:
            raise IndexError(f"rank {m} outside [0, {self.m_count})")
        code = int(self.member_codes[m])
        digits = []
        for _ in range(self.n):
            code, d = divmod(code, self.k)
            digits.append(d)
        return tuple(reversed(digits))

    def xi_plus(self, seq) -> int:
        code = self._code(seq)
        i = int(np.searchsorted(self.member_codes, code))
        if i < self.m_count and int(self.member_codes[i]) == code:
            return i
        return self.m_count

    def xi_plus_all(self) -> np.ndarray:
        """xi_plus over all k**n sequences in lexicographic order."""
        out = np.full(self.k ** self.n, self.m_count, dtype=np.int64)
        out[self.member_codes] = np.arange(self.m_count, dtype=np.int64)
        return out

    def member_probs(self) -> np.ndarray:
        ext = iid_extension(self.source, self.n)
        return ext.all_probs()[self.member_codes]


def build_index(source: PMF, n: int, gamma: float,
                cap: int = DENSE_CAP) -> TypicalIndex:
    """Enumerate the typical set; raises EmptyTypicalSetError when empty."""
    if gamma <= 0.0:
        raise ValueError("gamma must be positive")
    totals = surprisal_totals(source, n, cap)
    h = entropy(source)
    mask = np.abs(totals / n - h) <= gamma
    codes = np.nonzero(mask)[0].astype(np.int64)
    if codes.shape[0] == 0:
        raise EmptyTypicalSetError(
            f"no sequence is typical at n={n}, gamma={gamma}")
    return TypicalIndex(source, n, gamma, codes)


def atypical_mass(source: PMF, n: int, gamma: float,
                  cap: int = DENSE_CAP) -> float:
    """Exact probability of the complement of the typical set."""
    totals = surprisal_totals(source, n, cap)
    h = entropy(source)
    mask = np.abs(totals / n - h) <= gamma
    probs = iid_extension(source, n).all_probs(cap)
    return float(np.dot(probs, (~mask).astype(np.float64)))


def atypical_mass_mc(source: PMF, n: int, gamma: float, trials: int,
                     rng: RandomStream, chunk: int = 1 << 16) -> tuple[float, float]:
    """Monte Carlo estimate of the atypical mass with a 95% half-width.

    Zero observed hits fall back to the rule of three: the half-width is
    then the one-sided 95% upper bound 3/trials.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    w = _surprisal_table(source)
    h = entropy(source)
    hits = 0
    done = 0
    idx = 0
    while done < trials:
        m = min(chunk, trials - done)
        seqs = iid_extension(source, n).sample(rng.substream(idx), m)
        means = w[seqs].sum(axis=1) / n
        hits += int(np.count_nonzero(np.abs(means - h) > gamma))
        done += m
        idx += 1
    est = hits / trials
    if hits == 0:
        return 0.0, 3.0 / trials
    half = 1.96 * float(np.sqrt(est * (1.0 - est) / trials))
    return est, half
