"""Base-b digit-increment sequences and their substitution twin.

Three independent constructions of one object.  The scheduler run over
the geometric weights (1 - 1/b)(1/b)^(n-1) with a leading Joker, the
digit-increment order of the plain base-b counter, and the fixed point
of the substitution a_k -> a_1^(b-1) a_(k+1) all produce the same
sequence; verify_equivalence compares them position by position.  The
counter is simulated on a literal digit array rather than through the
trailing-digit formula so the comparison has a witness that shares no
code with the scheduler.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import count
from typing import Optional

from .core import JOKER, FrequencySpec, Sequence, generate, make_lazy_spec

__all__ = [
    "BaseTooSmall",
    "geometric_spec",
    "counter_increments",
    "substitution_fixed_point",
    "substitution_image",
    "EquivalenceReport",
    "verify_equivalence",
]


class BaseTooSmall(ValueError):
    """The base must be an integer >= 2."""


def _check_base(b):
    if isinstance(b, bool) or not isinstance(b, int):
        raise TypeError(f"base must be an integer, got {b!r}")
    if b < 2:
        raise BaseTooSmall(f"base {b} < 2")


def geometric_spec(b: int, mode: str = "exact") -> FrequencySpec:
    """Lazy spec with lambda(a_n) = (1 - 1/b)(1/b)^(n-1), tail(j) = b^-j."""
    _check_base(b)
    if mode == "exact":
        return make_lazy_spec((Fraction(b - 1, b ** n) for n in count(1)),
                              lambda j: Fraction(1, b ** j))
    return make_lazy_spec(((b - 1) / b ** n for n in count(1)),
                          lambda j: float(b) ** -j, mode=mode)


def counter_increments(b: int, n: int) -> Sequence:
    """First n terms of the digit-increment order of the base-b counter.

    Term 1 is the Joker, standing for the integer 0.  Term N for N >= 2
    is the 1-based position (from the right) of the digit that gets
    incremented in the counter transition (N-2) -> (N-1).
    """
    _check_base(b)
    if n < 1:
        raise ValueError("n must be >= 1")
    out = [JOKER]
    digits = [0]  # little-endian, value N-2 once N-2 terms are out
    while len(out) < n:
        pos = 0
        while pos < len(digits) and digits[pos] == b - 1:
            digits[pos] = 0
            pos += 1
        if pos == len(digits):
            digits.append(0)
        digits[pos] += 1
        out.append(pos + 1)
    return Sequence(letters=out, spec=None, prefix_len=1)


def substitution_image(b: int, k: int) -> tuple:
    """sigma(a_k) = a_1 repeated b-1 times, then a_(k+1)."""
    _check_base(b)
    if k < 1:
        raise ValueError("letter index must be >= 1")
    return (1,) * (b - 1) + (k + 1,)


def substitution_fixed_point(b: int, n: int) -> Sequence:
    """First n letters of the fixed point of sigma starting with a_1.

    sigma(a_1) begins with a_1, so the fixed point exists and is grown
    by the usual pump: keep appending the image of the next letter
    already produced.
    """
    _check_base(b)
    if n < 1:
        raise ValueError("n must be >= 1")
    w = list(substitution_image(b, 1))
    p = 1
    while len(w) < n:
        w.extend(substitution_image(b, w[p]))
        p += 1
    return Sequence(letters=w[:n], spec=None, prefix_len=0)


@dataclass(frozen=True)
class EquivalenceReport:
    b: int
    n: int
    equal: bool
    first_mismatch: Optional[int]  # 1-based position, None when equal
    triple: Optional[tuple]  # (scheduler, counter, substitution) letters

    def summary(self) -> str:
        if self.equal:
            return f"EQUAL n={self.n}"
        i, j, l = self.triple
        return (f"MISMATCH at n={self.first_mismatch}: "
                f"dem={i} counter={j} subst={l}")


def first_mismatch(*seqs) -> Optional[int]:
    """1-based index of the first position where the sequences differ."""
    for i, vals in enumerate(zip(*seqs), start=1):
        if len(set(vals)) > 1:
            return i
    return None


def verify_equivalence(b: int, n: int, mode: str = "exact") -> EquivalenceReport:
    """Compare the three length-n constructions position by position."""
    _check_base(b)
    if n < 2:
        raise ValueError("need n >= 2 to cover a counter transition")
    dem = generate(geometric_spec(b, mode), (JOKER,), n).letters
    ctr = counter_increments(b, n).letters
    sub = [JOKER] + substitution_fixed_point(b, n - 1).letters
    where = first_mismatch(dem, ctr, sub)
    if where is None:
        return EquivalenceReport(b=b, n=n, equal=True,
                                 first_mismatch=None, triple=None)
    k = where - 1
    return EquivalenceReport(b=b, n=n, equal=False, first_mismatch=where,
                             triple=(dem[k], ctr[k], sub[k]))
