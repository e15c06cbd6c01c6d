"""Deficit-greedy sequencing over weighted countable alphabets.

A frequency spec assigns each letter a_1, a_2, ... a positive target
frequency, nonincreasing in the index and summing to 1.  The scheduler
emits, at every step, the most late letter, where lateness is the
signed deficit D_M(a) = lambda(a) - counts(a)/M scaled by the letter's
own target rate: the selection key is lambda(a) * D_M(a).  Scaling by
lambda keeps a rare letter from preempting a frequent one that is still
several emissions behind schedule, and it is what makes the base-b run
of this scheduler coincide with the digit-increment order of the plain
integer counter.  Ties go to the lowest index; the key's sign equals
the deficit's sign, so when nobody is late the first letter is emitted.
Letter index 0 is the Joker: target frequency 0, legal only in a
caller-supplied prefix, never selectable.

Letters are materialized lazily.  Because the weights are nonincreasing,
every letter at or beyond the materialization frontier has deficit equal
to its own weight, and the frontier letter dominates that whole tail; the
scan therefore only ever looks at the active letters plus one peeked
frontier weight, in both the finite and the countable case.
"""

from __future__ import annotations

import random
import threading
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Callable, Iterable, Iterator, Union

__all__ = [
    "JOKER",
    "SpecError",
    "NonPositiveWeight",
    "SumNotOne",
    "NotNonincreasing",
    "TailMismatch",
    "ZeroSteps",
    "InvalidPrefixLetter",
    "FrequencySpec",
    "make_spec",
    "make_lazy_spec",
    "Scheduler",
    "Sequence",
    "generate",
]

JOKER = 0

#: float-mode tolerance for "the weights sum to 1" style checks
_FLOAT_SUM_TOL = 2.0 ** -40

#: how many terms of a lazy source are validated up front
_LAZY_VALIDATE_TERMS = 64

Weight = Union[Fraction, float]


class SpecError(ValueError):
    """A frequency spec failed validation."""


class NonPositiveWeight(SpecError):
    pass


class SumNotOne(SpecError):
    """Weights do not sum to 1.  ``residual`` is 1 minus the actual sum."""

    def __init__(self, residual):
        self.residual = residual
        if isinstance(residual, Fraction):
            shown = f"{residual.numerator}/{residual.denominator}"
        else:
            shown = repr(residual)
        super().__init__(f"weights must sum to 1, residual={shown}")


class NotNonincreasing(SpecError):
    pass


class TailMismatch(SpecError):
    """A lazy spec's closed-form tail disagrees with its weights."""


class ZeroSteps(ValueError):
    """Deficits are undefined before the first step (M = 0)."""


class InvalidPrefixLetter(ValueError):
    """Prefix letter outside the alphabet (or not a letter at all)."""


def _to_exact(v) -> Fraction:
    # Fraction() embeds ints, Fractions, floats (binary-exact) and parses
    # strings like "2/3" or "0.4" (the latter as the decimal 2/5).
    try:
        return Fraction(v)
    except (TypeError, ValueError) as e:
        raise SpecError(f"cannot interpret weight {v!r} as a rational") from e


class FrequencySpec:
    """Validated letter weights, finite or lazily materialized.

    Finite specs are reordered internally so weights are nonincreasing;
    the permutation between user order and internal order is recorded.
    Lazy specs must already be nonincreasing and come with a closed-form
    tail function tail(j) = sum of lambda(a_i) for i > j.
    """

    def __init__(self, *, mode, weights=None, source=None, tail_fn=None,
                 internal_to_user=None, user_to_internal=None):
        if mode not in ("exact", "float"):
            raise ValueError(f"mode must be 'exact' or 'float', got {mode!r}")
        self.mode = mode
        self._lock = threading.Lock()
        if weights is not None:
            self.kind = "finite"
            self._weights = list(weights)  # internal order, 0-based storage
            self._source = None
            self._tail_fn = None
            # suffix[j] = tail(j), exact partial sums in either mode
            p = len(self._weights)
            suffix = [self._zero()] * (p + 1)
            for j in range(p - 1, -1, -1):
                suffix[j] = suffix[j + 1] + self._weights[j]
            self._suffix = suffix
            self.internal_to_user = tuple(internal_to_user)
            self.user_to_internal = tuple(user_to_internal)
        else:
            self.kind = "lazy"
            self._weights = []
            self._source = source
            self._tail_fn = tail_fn
            self._suffix = None
            ident = None
            self.internal_to_user = ident
            self.user_to_internal = ident

    def _zero(self):
        return Fraction(0) if self.mode == "exact" else 0.0

    def _convert(self, v):
        return _to_exact(v) if self.mode == "exact" else float(v)

    @property
    def size(self):
        """Number of letters, or None for a countable alphabet."""
        return len(self._weights) if self.kind == "finite" else None

    def _ensure(self, n):
        # pull lazy weights until at least n are cached
        if len(self._weights) >= n:
            return
        with self._lock:
            while len(self._weights) < n:
                try:
                    raw = next(self._source)
                except StopIteration:
                    raise SpecError(
                        "lazy weight source exhausted; countable specs "
                        "must yield indefinitely") from None
                self._weights.append(self._convert(raw))

    def weight(self, i: int):
        """lambda(a_i) for 1-based internal index i; the Joker weighs 0."""
        if i == JOKER:
            return self._zero()
        if i < 0:
            raise IndexError(f"letter index {i} out of range")
        if self.kind == "finite":
            if i > len(self._weights):
                raise IndexError(f"letter index {i} beyond alphabet size "
                                 f"{len(self._weights)}")
            return self._weights[i - 1]
        self._ensure(i)
        return self._weights[i - 1]

    def tail(self, j: int):
        """Total weight of all letters with index > j (j >= 0)."""
        if j < 0:
            raise ValueError("tail index must be >= 0")
        if self.kind == "finite":
            p = len(self._weights)
            return self._suffix[j] if j <= p else self._zero()
        return self._convert(self._tail_fn(j))

    # permutation helpers; identity on lazy specs
    def to_user(self, i: int) -> int:
        if i == JOKER or self.internal_to_user is None:
            return i
        return self.internal_to_user[i - 1]

    def to_internal(self, u: int) -> int:
        if u == JOKER or self.user_to_internal is None:
            return u
        if not 1 <= u <= len(self.user_to_internal):
            raise InvalidPrefixLetter(f"letter {u} outside the alphabet")
        return self.user_to_internal[u - 1]


def make_spec(weights: Iterable, mode: str = "exact") -> FrequencySpec:
    """Build a finite spec from user-ordered weights.

    Weights may be ints, Fractions, floats, or strings ("2/3", "0.4");
    they must be positive and sum to 1 (exactly in exact mode, within
    2^-40 in float mode).  Input order is preserved in the permutation
    record; internally letters are sorted nonincreasing, stably.
    """
    if mode not in ("exact", "float"):
        raise ValueError(f"mode must be 'exact' or 'float', got {mode!r}")
    raw = list(weights)
    if not raw:
        raise SpecError("at least one weight is required")
    if mode == "exact":
        vals = [_to_exact(w) for w in raw]
        for w in vals:
            if w <= 0:
                raise NonPositiveWeight(f"weight {w} is not positive")
        total = sum(vals, Fraction(0))
        if total != 1:
            raise SumNotOne(Fraction(1) - total)
    else:
        vals = [float(w) if not isinstance(w, str) else float(Fraction(w))
                for w in raw]
        for w in vals:
            if w <= 0.0:
                raise NonPositiveWeight(f"weight {w} is not positive")
        total = sum(vals)
        if abs(total - 1.0) > _FLOAT_SUM_TOL:
            raise SumNotOne(1.0 - total)
    order = sorted(range(len(vals)), key=lambda k: (-vals[k], k))
    internal = [vals[k] for k in order]
    internal_to_user = [k + 1 for k in order]
    user_to_internal = [0] * len(vals)
    for pos, k in enumerate(order):
        user_to_internal[k] = pos + 1
    return FrequencySpec(mode=mode, weights=internal,
                         internal_to_user=internal_to_user,
                         user_to_internal=user_to_internal)


def make_lazy_spec(source: Union[Iterable, Iterator],
                   tail_fn: Callable[[int], Weight],
                   mode: str = "exact") -> FrequencySpec:
    """Build a countable spec from a weight generator and a closed-form tail.

    The first 64 yielded weights are validated: positivity, nonincreasing
    order, and consistency with tail_fn (tail(0) = 1 and
    tail(j) = tail(j-1) - lambda(a_j)).  Sources are consumed; pass a
    fresh iterator per call.
    """
    spec = FrequencySpec(mode=mode, source=iter(source), tail_fn=tail_fn)
    spec._ensure(_LAZY_VALIDATE_TERMS)
    w = spec._weights
    prev = None
    for j in range(_LAZY_VALIDATE_TERMS):
        if w[j] <= 0:
            raise NonPositiveWeight(f"weight of a_{j + 1} is not positive")
        if prev is not None and w[j] > prev:
            raise NotNonincreasing(
                f"lambda(a_{j + 1}) = {w[j]} exceeds lambda(a_{j}) = {prev}")
        prev = w[j]
    t_prev = spec.tail(0)
    one = Fraction(1) if mode == "exact" else 1.0
    if mode == "exact":
        if t_prev != one:
            raise TailMismatch(f"tail(0) = {t_prev}, expected 1")
    elif abs(t_prev - 1.0) > _FLOAT_SUM_TOL:
        raise TailMismatch(f"tail(0) = {t_prev}, expected 1")
    for j in range(1, _LAZY_VALIDATE_TERMS + 1):
        t = spec.tail(j)
        if mode == "exact":
            if t != t_prev - w[j - 1]:
                raise TailMismatch(
                    f"tail({j}) = {t} but tail({j - 1}) - lambda(a_{j}) "
                    f"= {t_prev - w[j - 1]}")
        elif abs(t - (t_prev - w[j - 1])) > _FLOAT_SUM_TOL:
            raise TailMismatch(f"tail({j}) inconsistent with weights")
        t_prev = t
    return spec


class Scheduler:
    """Stateful deficit-greedy selector.

    The selection key lambda(a) * (lambda(a) - counts(a)/M) is computed
    in exact mode as the integer lam_num[i] * (lam_num[i]*M - Q*counts[i])
    over a running common denominator Q (keys share the positive factor
    1/(Q*Q*M), so integer comparison is exact); float mode runs the
    identical scan on float weights with Q = 1.  ``counts`` is indexed
    by internal letter (slot 0 is the Joker) and its length is the
    frontier: letters 1..frontier-1 are materialized.
    """

    def __init__(self, spec: FrequencySpec, prefix: Iterable[int] = (),
                 tie_break: str = "index", seed=None):
        if tie_break not in ("index", "random"):
            raise ValueError(f"tie_break must be 'index' or 'random', "
                             f"got {tie_break!r}")
        self.spec = spec
        self.M = 0
        self.counts = [0]
        self.tie_break = tie_break
        self._rng = random.Random(seed) if tie_break == "random" else None
        self._exact = spec.mode == "exact"
        # kernel arrays; slot 0 mirrors the Joker with weight 0
        if self._exact:
            self._den = 1
            self._lam = [0]
        else:
            self._den = 1  # float keys are unscaled
            self._lam = [0.0]
        self._peek = None
        self._refresh_peek()
        for a in prefix:
            self._feed_prefix(a)

    # -- kernel maintenance -------------------------------------------------

    def _refresh_peek(self):
        f = len(self.counts)
        size = self.spec.size
        if size is not None and f > size:
            self._peek = None
            return
        w = self.spec.weight(f)
        if self._exact:
            self._ensure_den(w.denominator)
            self._peek = w.numerator * (self._den // w.denominator)
        else:
            self._peek = w

    def _ensure_den(self, d: int):
        g = gcd(d, self._den)
        mult = d // g
        if mult > 1:
            self._den *= mult
            self._lam = [x * mult for x in self._lam]
            if self._peek is not None:
                self._peek *= mult

    def _materialize_next(self):
        # frontier letter becomes active with count 0; peek moves on
        self._lam.append(self._peek)
        self.counts.append(0)
        self._refresh_peek()

    @property
    def frontier(self) -> int:
        """Smallest letter index that has never been materialized."""
        return len(self.counts)

    def _feed_prefix(self, a):
        if not isinstance(a, int) or isinstance(a, bool) or a < 0:
            raise InvalidPrefixLetter(f"prefix letter {a!r} is not a letter")
        size = self.spec.size
        if size is not None and a > size:
            raise InvalidPrefixLetter(
                f"prefix letter {a} beyond alphabet size {size}")
        while a >= len(self.counts):
            self._materialize_next()
        self.counts[a] += 1
        self.M += 1

    # -- queries ------------------------------------------------------------

    def deficit(self, a: int):
        """Signed deficit lambda(a) - counts(a)/M.  Exact Fraction or float.

        Defined for the Joker, any materialized letter, and any letter of
        the alphabet beyond the frontier (whose count is 0).
        """
        if self.M == 0:
            raise ZeroSteps("deficits are undefined at M = 0")
        if a < 0:
            raise IndexError(f"letter index {a} out of range")
        c = self.counts[a] if a < len(self.counts) else 0
        lam = self.spec.weight(a)  # IndexError beyond a finite alphabet
        if self._exact:
            return lam - Fraction(c, self.M)
        return lam - c / self.M

    def _scan(self):
        # returns (letter, is_frontier); positive best key means somebody
        # is late (sign of lam*(lam*M - q*c) equals the deficit's sign)
        M = self.M
        lam = self._lam
        counts = self.counts
        q = self._den if self._exact else 1
        best = None
        best_key = None
        ties = None
        collect = self.tie_break == "random"
        for i in range(1, len(counts)):
            k = lam[i] * (lam[i] * M - q * counts[i])
            if best_key is None or k > best_key:
                best, best_key = i, k
                if collect:
                    ties = [i]
            elif collect and k == best_key:
                ties.append(i)
        if self._peek is not None:
            k = self._peek * self._peek * M
            f = len(counts)
            if best_key is None or k > best_key:
                best, best_key = f, k
                if collect:
                    ties = [f]
            elif collect and k == best_key:
                ties.append(f)
        if best_key is None or best_key <= 0:
            # nobody is late (or M = 0, where the key reduces to lambda
            # squared): the first letter wins in every tie-break mode
            return 1, False
        if collect and len(ties) > 1:
            best = self._rng.choice(ties)
        return best, best == len(counts)

    def select_next(self) -> int:
        """Letter the rule picks at the current state; advances the
        frontier when that letter is the frontier letter, but does not
        consume a step."""
        letter, is_frontier = self._scan()
        if is_frontier:
            self._materialize_next()
        elif letter >= len(self.counts):
            # a1 chosen by the nobody-late rule before ever materializing
            self._materialize_next()
        return letter

    def step(self) -> int:
        """Select, record, and return the next letter."""
        letter = self.select_next()
        self.counts[letter] += 1
        self.M += 1
        return letter


@dataclass
class Sequence:
    """A generated letter sequence plus the context to interpret it.

    ``letters`` are internal indices (0 is the Joker).  The first
    ``prefix_len`` entries were supplied, the rest were selected by the
    rule.  ``spec`` is None for sequences built by outside constructions
    (counters, substitutions) rather than the scheduler.
    """

    letters: list[int]
    spec: FrequencySpec | None = None
    prefix_len: int = 0

    def __len__(self):
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __getitem__(self, i):
        return self.letters[i]

    def user_letters(self) -> list[int]:
        """Letters mapped back to the caller's original labels."""
        if self.spec is None:
            return list(self.letters)
        return [self.spec.to_user(a) for a in self.letters]


def generate(spec: FrequencySpec, prefix: Iterable[int] = (), n: int = 0,
             tie_break: str = "index", seed=None) -> Sequence:
    """Run the rule for n total terms (prefix included).

    The prefix is internal letters; 0 is the Joker and may appear only
    here.  n must be at least len(prefix).
    """
    prefix = list(prefix)
    if n < len(prefix):
        raise ValueError(f"n = {n} shorter than the prefix "
                         f"({len(prefix)} letters)")
    sch = Scheduler(spec, prefix, tie_break=tie_break, seed=seed)
    letters = prefix + [sch.step() for _ in range(n - len(prefix))]
    return Sequence(letters=letters, spec=spec, prefix_len=len(prefix))
