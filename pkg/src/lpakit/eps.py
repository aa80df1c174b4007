"""Eventually periodic sets of natural numbers.

Index sets along an infinite tail are stored canonically: a finite set of
exceptional members below a threshold, and a residue mask modulo a period that
decides membership from the threshold on.  Canonical means the period is the
least eventual period and the threshold is the least index from which the mask
alone is correct, so two EPSets are equal as sets iff they are equal as values.

Membership of n:  n in exceptions       if n < threshold
                  (n % period) in mask  otherwise

The mask holds absolute residues (n % period, not (n - threshold) % period),
which keeps union/intersection alignment-free.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator

__all__ = ["EPSet", "infer_epset"]


@dataclass(frozen=True)
class EPSet:
    threshold: int
    period: int
    mask: frozenset[int]
    exceptions: frozenset[int]

    @staticmethod
    def make(threshold: int, period: int, mask: Iterable[int], exceptions: Iterable[int] = ()) -> "EPSet":
        """Build and canonicalize. Raises ValueError on malformed input."""
        if period < 1:
            raise ValueError("period must be >= 1")
        if threshold < 0:
            raise ValueError("threshold must be >= 0")
        mask = frozenset(r % period for r in mask)
        exceptions = frozenset(e for e in exceptions if 0 <= e < threshold)
        return _canonical(threshold, period, mask, exceptions)

    @staticmethod
    def empty() -> "EPSet":
        return EPSet(0, 1, frozenset(), frozenset())

    @staticmethod
    def finite(members: Iterable[int]) -> "EPSet":
        ms = sorted(set(members))
        if any(m < 0 for m in ms):
            raise ValueError("negative index")
        if not ms:
            return EPSet.empty()
        return EPSet.make(ms[-1] + 1, 1, (), ms)

    @staticmethod
    def all_from(n: int) -> "EPSet":
        """The final segment {n, n+1, ...}."""
        return EPSet.make(n, 1, (0,), ())

    @staticmethod
    def full() -> "EPSet":
        return EPSet.all_from(0)

    def __contains__(self, n: int) -> bool:
        if n < 0:
            return False
        if n < self.threshold:
            return n in self.exceptions
        return (n % self.period) in self.mask

    def is_empty(self) -> bool:
        return not self.mask and not self.exceptions

    def is_finite(self) -> bool:
        return not self.mask

    def is_full(self) -> bool:
        return self == EPSet.full()

    def min_element(self) -> int | None:
        for n in itertools.count():
            if n in self:
                return n
            if n >= self.threshold + self.period:
                return None
        return None  # unreachable

    def members_below(self, limit: int) -> list[int]:
        return [n for n in range(limit) if n in self]

    def iter_members(self) -> Iterator[int]:
        """All members, ascending; infinite when the mask is nonempty."""
        for n in itertools.count():
            if n >= self.threshold + self.period and not self.mask:
                return
            if n in self:
                yield n

    def bits(self, limit: int) -> tuple[bool, ...]:
        return tuple(n in self for n in range(limit))

    def count(self) -> float:
        """Number of members; float('inf') when the mask is nonempty."""
        if self.mask:
            return float("inf")
        return float(len(self.exceptions))

    # Pointwise combinations align on the lcm period and re-canonicalize.

    def union(self, other: "EPSet") -> "EPSet":
        return _combine(self, other, lambda a, b: a or b)

    def intersection(self, other: "EPSet") -> "EPSet":
        return _combine(self, other, lambda a, b: a and b)

    def difference(self, other: "EPSet") -> "EPSet":
        return _combine(self, other, lambda a, b: a and not b)

    def complement(self) -> "EPSet":
        return _combine(self, EPSet.empty(), lambda a, _: not a)

    def issubset(self, other: "EPSet") -> bool:
        return self.difference(other).is_empty()

    def shift_down(self, k: int) -> "EPSet":
        """{n - k : n in self, n >= k}: the set seen after dropping k copies."""
        if k == 0:
            return self
        period = self.period
        threshold = max(self.threshold - k, 0)
        mask = frozenset((r - k) % period for r in self.mask)
        exceptions = frozenset(n - k for n in self.exceptions if n >= k)
        return _canonical(threshold, period, mask, exceptions)

    def __repr__(self) -> str:
        if self.is_empty():
            return "EPSet{}"
        if self.is_finite():
            return "EPSet{%s}" % ",".join(str(n) for n in sorted(self.exceptions))
        return "EPSet{N=%d, rho=%d, mask=%s, exc=%s}" % (
            self.threshold,
            self.period,
            sorted(self.mask),
            sorted(self.exceptions),
        )

    def to_json(self) -> dict:
        return {
            "threshold": self.threshold,
            "period": self.period,
            "mask": sorted(self.mask),
            "exceptions": sorted(self.exceptions),
        }

    @staticmethod
    def from_json(obj: dict) -> "EPSet":
        return EPSet.make(obj["threshold"], obj["period"], obj["mask"], obj["exceptions"])


def _lcm(a: int, b: int) -> int:
    import math

    return a * b // math.gcd(a, b)


def _combine(a: EPSet, b: EPSet, op: Callable[[bool, bool], bool]) -> EPSet:
    period = _lcm(a.period, b.period)
    threshold = max(a.threshold, b.threshold)
    # Align threshold to a period boundary so absolute residues stay valid.
    if threshold % period:
        threshold += period - threshold % period
    mask = frozenset(r for r in range(period) if op((threshold + r) in a, (threshold + r) in b))
    exceptions = frozenset(n for n in range(threshold) if op(n in a, n in b))
    return _canonical(threshold, period, mask, exceptions)


def _canonical(threshold: int, period: int, mask: frozenset[int], exceptions: frozenset[int]) -> EPSet:
    def member(n: int) -> bool:
        return n in exceptions if n < threshold else (n % period) in mask

    # Least eventual period divides any eventual period, so scan divisors.
    best = period
    for d in range(1, period):
        if period % d:
            continue
        if all(((r + d) % period in mask) == (r in mask) for r in range(period)):
            best = d
            break
    new_mask = frozenset(r % best for r in mask)
    # Least threshold from which the mask alone is correct.
    n = threshold
    while n > 0 and member(n - 1) == (((n - 1) % best) in new_mask):
        n -= 1
    new_exc = frozenset(e for e in exceptions if e < n)
    return EPSet(n, best, new_mask, new_exc)


def infer_epset(bits: tuple[bool, ...] | list[bool]) -> EPSet | None:
    """Guess the eventually periodic set behind a membership window.

    Returns the least-period, least-threshold EPSet consistent with the whole
    window, requiring at least two full periods of evidence past the
    threshold; None when no such presentation fits (window too small).
    Callers must validate the guess by recomputing at a deeper window.
    """
    w = len(bits)
    for period in range(1, max(1, w // 3) + 1):
        # Demand the periodic part covers two periods and the last third of
        # the window; thin evidence (a constant final bit or two) must not win.
        limit = w - max(2 * period, (w + 2) // 3)
        if limit < 0:
            break
        # Least threshold for this period, if any.
        n = w - period
        while n > 0 and bits[n - 1] == bits[n - 1 + period]:
            n -= 1
        if n <= limit:
            mask = frozenset(i % period for i in range(n, min(n + period, w)) if bits[i])
            return _canonical(n, period, mask, frozenset(i for i in range(n) if bits[i]))
    return None
