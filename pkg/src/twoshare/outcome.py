"""Decoder outcome type shared by both schemes."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class DecodeOutcome:
    """Either a recovered secret sequence or a rejection.

    A rejection carries no partial information about the secret; callers
    must branch on `rejected` before touching `secret`.
    """

    secret: tuple[int, ...] | None = None

    @property
    def rejected(self) -> bool:
        return self.secret is None

    def __repr__(self):
        if self.rejected:
            return "DecodeOutcome(REJECT)"
        return f"DecodeOutcome(secret={self.secret})"


REJECT = DecodeOutcome()


def accepted(seq) -> DecodeOutcome:
    return DecodeOutcome(tuple(int(v) for v in seq))
