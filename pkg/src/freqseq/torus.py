"""Torus partitions, cell scheduling, and certified power-in-cell reals.

Pipeline: partition [0,1] into closed cells, assign each cell a target
mass, schedule a cell sequence realizing those masses, then construct a
real beta > 1 whose m-th power lands, fractional part and all, in the
m-th planned cell.  The witness for beta is a pair of endpoints plus
per-step integer parts, and it is checked twice by construction-time
exact arithmetic and by an independent directed-rounding certifier that
shares no code with the constructor.  Keep those two paths separate.

Construction runs in exact dyadic arithmetic: enclosure endpoints are
rationals with denominator 2^bits, images under x -> x^m are exact
integer powers, and only the m-th roots round, one ulp toward the
inside of the preimage, so every surviving point keeps its power inside
the margin-shrunk target.  The certifier instead replays the powers in
binary floating point with directed rounding at the witness precision.
Precision starts at 128 bits and doubles whenever the inward rounding
eats the whole enclosure or the finished witness fails certification,
up to a hard cap.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence as Seq

import gmpy2

from .core import Sequence, _to_exact, make_spec
from .hexfloat import from_hex, to_hex

__all__ = [
    "AtomAtEndpoint",
    "BadPartition",
    "ImageTooShort",
    "IntervalTooShort",
    "MembershipBreak",
    "PrecisionExhausted",
    "TorusInterval",
    "IntervalPartition",
    "MeasureSpec",
    "BetaWitness",
    "uniform_partition",
    "cell_sequence",
    "planned_cells",
    "construct_beta",
    "certify",
    "certification_report",
    "CertificationReport",
    "empirical_measure",
    "EmpiricalReport",
    "write_witness",
    "read_witness",
    "parse_partition_file",
]

#: construction precision schedule, in mantissa bits
_START_BITS = 128
_MAX_BITS = 2 ** 20


class BadPartition(ValueError):
    """Cells fail to tile [0,1] with shared endpoints."""


class AtomAtEndpoint(ValueError):
    """A declared atom sits on a cell boundary."""


class IntervalTooShort(ValueError):
    """A target interval is shorter than the claimed c_min."""


class ImageTooShort(RuntimeError):
    """The power image cannot contain any integer translate of the cell."""


class PrecisionExhausted(RuntimeError):
    """Certification kept failing up to the precision cap."""


class MembershipBreak(RuntimeError):
    """Certified cell membership disagrees with the planned sequence."""

    def __init__(self, m):
        super().__init__(f"membership breaks at m={m}")
        self.m = m


class _PrecisionFailure(Exception):
    # internal: retry the construction with more bits
    pass


@dataclass(frozen=True)
class TorusInterval:
    """Closed subinterval of [0,1]; wrap-around is not supported."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lo", _to_exact(self.lo))
        object.__setattr__(self, "hi", _to_exact(self.hi))
        if not 0 <= self.lo < self.hi <= 1:
            raise ValueError(f"need 0 <= lo < hi <= 1, got [{self.lo}, {self.hi}]")

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo


@dataclass(frozen=True)
class IntervalPartition:
    cells: tuple

    def __post_init__(self):
        cells = tuple(self.cells)
        object.__setattr__(self, "cells", cells)
        if not cells:
            raise BadPartition("empty partition")
        if cells[0].lo != 0 or cells[-1].hi != 1:
            raise BadPartition("cells must start at 0 and end at 1")
        for a, b in zip(cells, cells[1:]):
            if a.hi != b.lo:
                raise BadPartition(
                    f"gap or overlap between [{a.lo},{a.hi}] and [{b.lo},{b.hi}]")

    @property
    def c_min(self) -> Fraction:
        return min(c.length for c in self.cells)

    def __len__(self):
        return len(self.cells)


@dataclass(frozen=True)
class MeasureSpec:
    """A partition with one positive mass per cell, masses summing to 1."""

    partition: IntervalPartition
    masses: tuple
    declared_atoms: tuple = ()

    def __post_init__(self):
        masses = tuple(_to_exact(m) for m in self.masses)
        object.__setattr__(self, "masses", masses)
        atoms = tuple(_to_exact(a) for a in self.declared_atoms)
        object.__setattr__(self, "declared_atoms", atoms)
        if len(masses) != len(self.partition):
            raise ValueError("one mass per cell required")
        # reuse the spec validators for positivity and the sum-to-1 check
        make_spec(masses)
        ends = {c.lo for c in self.partition.cells}
        ends.update(c.hi for c in self.partition.cells)
        for a in atoms:
            if a in ends:
                raise AtomAtEndpoint(f"atom {a} is a cell endpoint")


def uniform_partition(p: int) -> IntervalPartition:
    """p equal cells [(i-1)/p, i/p]."""
    if p < 1:
        raise ValueError("need p >= 1")
    return IntervalPartition(tuple(
        TorusInterval(Fraction(i, p), Fraction(i + 1, p)) for i in range(p)))


def cell_sequence(ms: MeasureSpec, n: int, mode: str = "exact") -> Sequence:
    """Schedule n cells so cell i appears with frequency masses[i-1].

    The returned sequence stores internal letters; user_letters() maps
    them back to 1-based cell ids in the caller's original order.
    """
    masses = ms.masses if mode == "exact" else tuple(float(m) for m in ms.masses)
    spec = make_spec(masses, mode=mode)
    from .core import generate
    return generate(spec, (), n)


def planned_cells(ms: MeasureSpec, planned: Sequence):
    """Target intervals, one per planned step, in plan order."""
    cells = ms.partition.cells
    return [cells[u - 1] for u in planned.user_letters()]


@dataclass(frozen=True)
class BetaWitness:
    """Certifiable enclosure of a power-in-cell real.

    For every beta in [beta_lo, beta_hi] and every m <= N, beta^m lies
    in integer_parts[m-1] + intervals[m-1].  Endpoints are dyadic and
    exactly representable in precision_bits mantissa bits, so they
    survive hex serialization unchanged.
    """

    precision_bits: int
    beta_lo: Fraction
    beta_hi: Fraction
    integer_parts: tuple
    intervals: tuple

    def __post_init__(self):
        object.__setattr__(self, "beta_lo", _to_exact(self.beta_lo))
        object.__setattr__(self, "beta_hi", _to_exact(self.beta_hi))
        object.__setattr__(self, "integer_parts", tuple(self.integer_parts))
        object.__setattr__(self, "intervals", tuple(self.intervals))
        if not 1 < self.beta_lo <= self.beta_hi:
            raise ValueError("need 1 < beta_lo <= beta_hi")
        if len(self.integer_parts) != len(self.intervals):
            raise ValueError("one integer part per interval required")
        if self.precision_bits < 2:
            raise ValueError("precision_bits must be >= 2")

    @property
    def N(self) -> int:
        return len(self.intervals)


# ----------------------------------------------------------- construction

def _root_down(t: Fraction, m: int, bits: int) -> Fraction:
    # floor(t**(1/m) * 2**bits) / 2**bits
    A = (t.numerator << (m * bits)) // t.denominator
    r, _ = gmpy2.iroot(A, m)
    return Fraction(int(r), 1 << bits)


def _root_up(t: Fraction, m: int, bits: int) -> Fraction:
    num = t.numerator << (m * bits)
    A = -((-num) // t.denominator)  # ceil(t * 2**(m*bits))
    r, exact = gmpy2.iroot(A, m)
    r = int(r) + (0 if exact else 1)
    return Fraction(r, 1 << bits)


def _outward_mpfr(v: Fraction, bits: int, rounding) -> Fraction:
    with gmpy2.context(precision=bits, round=rounding):
        x = gmpy2.mpfr(gmpy2.mpq(v.numerator, v.denominator))
    return Fraction(*x.as_integer_ratio())


def _construct_at(intervals, c_min, bits: int, B: int) -> BetaWitness:
    """One construction attempt at a fixed precision; exact throughout."""
    lo, hi = Fraction(B), Fraction(B + 1)
    parts = []
    for m, cell in enumerate(intervals, start=1):
        L = lo ** m
        H = hi ** m
        delta = cell.length / 8
        # smallest integer translate of the cell inside the exact image
        n_m = math.ceil(L - cell.lo)
        if n_m + cell.hi > H:
            raise ImageTooShort(f"no integer translate of cell {m} fits "
                                f"in the image of length {float(H - L):.3g}")
        t_lo = n_m + cell.lo + delta
        t_hi = n_m + cell.hi - delta
        # inward-rounded preimage: the enclosure may only lose points, so
        # its exact image stays inside the margin-shrunk target; if the
        # rounding eats the whole preimage, the precision was too low
        new_lo = _root_up(t_lo, m, bits)
        new_hi = _root_down(t_hi, m, bits)
        if not (lo <= new_lo < new_hi <= hi):
            raise _PrecisionFailure
        if new_lo ** m < t_lo or new_hi ** m > t_hi:
            raise _PrecisionFailure
        lo, hi = new_lo, new_hi
        parts.append(n_m)
    w = BetaWitness(
        precision_bits=bits,
        beta_lo=_outward_mpfr(lo, bits, gmpy2.RoundDown),
        beta_hi=_outward_mpfr(hi, bits, gmpy2.RoundUp),
        integer_parts=tuple(parts),
        intervals=tuple(intervals))
    # the stored, outward-rounded witness must clear the independent check
    if not certify(w):
        raise _PrecisionFailure
    return w


def construct_beta(intervals: Seq[TorusInterval], c_min,
                   max_precision_bits: int = _MAX_BITS) -> BetaWitness:
    """Nested-interval construction of a certified power-in-cell real.

    Starts from the enclosure [B, B+1] with B = max(2, ceil(2/c_min)+1)
    so every power image is long enough to contain a full integer
    translate of the next cell.  Each step picks the smallest such
    translate, shrinks it by an eighth of the cell length on both sides,
    and takes the m-th root of the shrunk target with one-ulp outward
    rounding.  Doubles precision until the finished witness passes
    certification.
    """
    intervals = tuple(intervals)
    if not intervals:
        raise ValueError("need at least one target interval")
    c_min = _to_exact(c_min)
    if c_min <= 0:
        raise ValueError("c_min must be positive")
    for i, cell in enumerate(intervals, start=1):
        if cell.length < c_min:
            raise IntervalTooShort(
                f"interval {i} has length {cell.length} < c_min {c_min}")
    B = max(2, math.ceil(2 / c_min) + 1)
    bits = _START_BITS
    while bits <= max_precision_bits:
        try:
            return _construct_at(intervals, c_min, bits, B)
        except _PrecisionFailure:
            bits *= 2
    raise PrecisionExhausted(
        f"no certified witness up to {max_precision_bits} bits")


# ----------------------------------------------------------- verification

@dataclass(frozen=True)
class CertificationReport:
    ok: bool
    failed_at: Optional[int]  # 1-based m, None when ok
    precision_bits: int


def _directed_powers(w: BetaWitness):
    """Yield (m, lo_m, hi_m) enclosures of beta^m at witness precision.

    Endpoints round toward the safe side at every multiplication, so
    [lo_m, hi_m] always contains beta^m for every beta in the witness
    enclosure.  This is the only arithmetic the certifier uses.
    """
    ctx_d = gmpy2.context(precision=w.precision_bits, round=gmpy2.RoundDown)
    ctx_u = gmpy2.context(precision=w.precision_bits, round=gmpy2.RoundUp)
    ql = gmpy2.mpq(w.beta_lo.numerator, w.beta_lo.denominator)
    qh = gmpy2.mpq(w.beta_hi.numerator, w.beta_hi.denominator)
    with ctx_d:
        base_lo = gmpy2.mpfr(ql)
        cur_lo = base_lo
    with ctx_u:
        base_hi = gmpy2.mpfr(qh)
        cur_hi = base_hi
    m = 1
    while True:
        yield m, cur_lo, cur_hi
        m += 1
        cur_lo = ctx_d.mul(cur_lo, base_lo)
        cur_hi = ctx_u.mul(cur_hi, base_hi)


def certification_report(w: BetaWitness) -> CertificationReport:
    """Independent containment check of every claimed power location."""
    gen = _directed_powers(w)
    for m, lo_m, hi_m in gen:
        if m > w.N:
            break
        cell = w.intervals[m - 1]
        n_m = w.integer_parts[m - 1]
        lo_q = gmpy2.mpq((n_m + cell.lo).numerator, (n_m + cell.lo).denominator)
        hi_q = gmpy2.mpq((n_m + cell.hi).numerator, (n_m + cell.hi).denominator)
        if not (lo_m >= lo_q and hi_m <= hi_q):
            return CertificationReport(ok=False, failed_at=m,
                                       precision_bits=w.precision_bits)
    return CertificationReport(ok=True, failed_at=None,
                               precision_bits=w.precision_bits)


def certify(w: BetaWitness) -> bool:
    return certification_report(w).ok


# ------------------------------------------------------ empirical measure

@dataclass(frozen=True)
class EmpiricalReport:
    """Cell-frequency audit of a planned run against its target masses.

    Membership is certified only up to n_certified (the witness horizon);
    frequencies and deviations cover the full planned length.
    """

    n_certified: int
    n_planned: int
    frequencies: tuple
    deviations: tuple
    max_deviation: Fraction


def empirical_measure(w: BetaWitness, ms: MeasureSpec,
                      planned: Sequence) -> EmpiricalReport:
    """Check the power-in-cell chain against the plan, then count cells."""
    cells = ms.partition.cells
    user = planned.user_letters()
    n_cert = min(w.N, len(user))
    gen = _directed_powers(w)
    for m, lo_m, hi_m in gen:
        if m > n_cert:
            break
        cell = cells[user[m - 1] - 1]
        n_m = w.integer_parts[m - 1]
        lo_q = gmpy2.mpq((n_m + cell.lo).numerator, (n_m + cell.lo).denominator)
        hi_q = gmpy2.mpq((n_m + cell.hi).numerator, (n_m + cell.hi).denominator)
        if not (lo_m >= lo_q and hi_m <= hi_q):
            raise MembershipBreak(m)
    total = len(user)
    counts = [0] * len(cells)
    for u in user:
        counts[u - 1] += 1
    freqs = tuple(Fraction(c, total) for c in counts)
    devs = tuple(abs(f - m) for f, m in zip(freqs, ms.masses))
    return EmpiricalReport(n_certified=n_cert, n_planned=total,
                           frequencies=freqs, deviations=devs,
                           max_deviation=max(devs))


# -------------------------------------------------------------- file I/O

def _frac_str(v: Fraction) -> str:
    return f"{v.numerator}/{v.denominator}"


def write_witness(w: BetaWitness, out) -> None:
    """JSON witness file; endpoints as bit-exact hex floats."""
    doc = {
        "precision_bits": w.precision_bits,
        "beta_lo_hex": to_hex(w.beta_lo),
        "beta_hi_hex": to_hex(w.beta_hi),
        "N": w.N,
        "integer_parts": list(w.integer_parts),
        "intervals": [[_frac_str(c.lo), _frac_str(c.hi)] for c in w.intervals],
    }
    own = isinstance(out, (str, bytes))
    fh = open(out, "w") if own else out
    try:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    finally:
        if own:
            fh.close()


def read_witness(src) -> BetaWitness:
    own = isinstance(src, (str, bytes))
    fh = open(src) if own else src
    try:
        doc = json.load(fh)
    finally:
        if own:
            fh.close()
    w = BetaWitness(
        precision_bits=doc["precision_bits"],
        beta_lo=from_hex(doc["beta_lo_hex"]),
        beta_hi=from_hex(doc["beta_hi_hex"]),
        integer_parts=tuple(doc["integer_parts"]),
        intervals=tuple(TorusInterval(_to_exact(lo), _to_exact(hi))
                        for lo, hi in doc["intervals"]))
    if w.N != doc["N"]:
        raise ValueError("witness N disagrees with its interval list")
    return w


def parse_partition_file(src) -> MeasureSpec:
    """Text lines "lo hi mass"; '#' starts a comment; exact parsing."""
    own = isinstance(src, (str, bytes))
    fh = open(src) if own else src
    try:
        cells, masses = [], []
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                lo, hi, mass = line.split()
            except ValueError:
                raise ValueError(f"bad partition line: {raw.strip()!r}")
            cells.append(TorusInterval(_to_exact(lo), _to_exact(hi)))
            masses.append(_to_exact(mass))
    finally:
        if own:
            fh.close()
    return MeasureSpec(partition=IntervalPartition(tuple(cells)),
                       masses=tuple(masses))
