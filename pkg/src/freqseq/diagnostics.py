"""Ledgers, deviation traces, and the convergence-rate report.

Everything here is a pure function over either a scheduler state or a
finished Sequence; nothing mutates the engine.  The ledger decomposes
the signed deficits at a step into a deficit part and an excess part,
with the unmaterialized tail folded into the deficit side, and in exact
mode the two parts are equal at every step.  The deviation trace walks
a sequence once and samples frequency deviations at checkpoints; the
convergence report fits a descriptive log-log slope to that trace.  No
convergence rate is asserted anywhere, only measured.
"""

from __future__ import annotations

import csv
import math
import statistics
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence as Seq, Union

from .core import JOKER, Scheduler, Sequence, ZeroSteps

__all__ = [
    "CheckpointBeyondSequence",
    "Ledger",
    "ConvergenceTrace",
    "ConvergenceReport",
    "FrequencyBounds",
    "ledger_at",
    "deviation_trace",
    "convergence_report",
    "frequency_bounds",
    "geometric_checkpoints",
    "write_trace_csv",
    "audit_run",
    "AuditReport",
]

Value = Union[Fraction, float]


class CheckpointBeyondSequence(ValueError):
    """A requested checkpoint exceeds the sequence length."""


@dataclass(frozen=True)
class Ledger:
    """Deficit/excess decomposition of a scheduler state.

    sum_deficits includes the whole unmaterialized tail mass, which is
    pure deficit since none of those letters has ever been emitted.  In
    exact mode sum_deficits == sum_excesses identically; residual is
    their difference and is only informative in float mode.
    """

    M: int
    sum_deficits: Value
    sum_excesses: Value
    tail_mass: Value
    max_deficit_letter: int
    residual: Value


@dataclass(frozen=True)
class ConvergenceTrace:
    """Per-checkpoint deviation and ledger columns from one replay pass.

    watch_deviation maps a watched letter to its signed per-checkpoint
    deviation lambda_N(a) - lambda(a); max_abs_deviation covers every
    letter including the unseen tail and the Joker.
    """

    mode: str
    checkpoints: tuple
    max_abs_deviation: tuple
    sum_deficits: tuple
    sum_excesses: tuple
    argmax_letter: tuple
    watch_deviation: dict


@dataclass(frozen=True)
class ConvergenceReport:
    slope: Optional[float]
    sup_n_deviation: Value
    exact_from: Optional[int]
    points_fitted: int
    summary: str


@dataclass(frozen=True)
class FrequencyBounds:
    letter: int
    running_min: Value
    running_max: Value
    n_start: int
    n_end: int


def _deficit_parts(spec, counts, M, max_seen):
    """(sum_deficits, sum_excesses, tail_mass, argmax_letter) at step M.

    Active letters are 1..max_seen plus the Joker; the tail beyond
    max_seen is folded into the deficit side in one piece.  The argmax
    scans unweighted deficits over Joker, actives, and the first tail
    letter, which dominates the rest of the tail; ties go to the lowest
    index, the Joker counting as index 0.
    """
    exact = spec.mode == "exact"
    zero = Fraction(0) if exact else 0.0
    deficits = zero
    joker_d = (zero - Fraction(counts[JOKER], M)) if exact \
        else -counts[JOKER] / M
    excesses = -joker_d
    best_letter = JOKER
    best = joker_d
    for a in range(1, max_seen + 1):
        d = spec.weight(a) - (Fraction(counts[a], M) if exact
                              else counts[a] / M)
        if d > 0:
            deficits += d
        else:
            excesses -= d
        if d > best:
            best, best_letter = d, a
    tail = spec.tail(max_seen)
    deficits += tail
    size = spec.size
    if size is None or max_seen < size:
        w = spec.weight(max_seen + 1)
        if w > best:
            best, best_letter = w, max_seen + 1
    return deficits, excesses, tail, best_letter


def ledger_at(state: Scheduler) -> Ledger:
    """Ledger of a live or replayed scheduler state.  Needs M >= 1.

    Exact mode asserts the zero identity sum_deficits == sum_excesses;
    float mode reports the residual instead.
    """
    if state.M < 1:
        raise ZeroSteps("ledger is undefined at M = 0")
    deficits, excesses, tail, best = _deficit_parts(
        state.spec, state.counts, state.M, state.frontier - 1)
    residual = deficits - excesses
    if state.spec.mode == "exact":
        assert residual == 0, f"ledger identity broken at M={state.M}"
    return Ledger(M=state.M, sum_deficits=deficits, sum_excesses=excesses,
                  tail_mass=tail, max_deficit_letter=best, residual=residual)


def _require_spec(seq: Sequence):
    if seq.spec is None:
        raise ValueError("sequence carries no frequency spec")
    return seq.spec


def _check_checkpoints(checkpoints, length):
    cps = list(checkpoints)
    if not cps:
        raise ValueError("need at least one checkpoint")
    if any(n < 1 for n in cps) or any(b <= a for a, b in zip(cps, cps[1:])):
        raise ValueError("checkpoints must be strictly increasing and >= 1")
    if cps[-1] > length:
        raise CheckpointBeyondSequence(
            f"checkpoint {cps[-1]} beyond sequence of length {length}")
    return cps


def deviation_trace(seq: Sequence, checkpoints: Seq[int],
                    watch: Seq[int] = ()) -> ConvergenceTrace:
    """Walk seq once, sampling deviations and ledger columns.

    The per-checkpoint deviation maximum is exact, not an upper bound:
    every letter never seen so far deviates by exactly its own weight,
    and the first unseen letter carries the largest such weight.
    """
    spec = _require_spec(seq)
    cps = _check_checkpoints(checkpoints, len(seq))
    exact = spec.mode == "exact"
    watch = tuple(watch)
    counts = {JOKER: 0}
    max_seen = 0
    next_cp = 0
    devs, defs_, excs, argmaxes = [], [], [], []
    watch_dev = {a: [] for a in watch}
    for N, a in enumerate(seq, start=1):
        counts[a] = counts.get(a, 0) + 1
        if a > max_seen:
            max_seen = a
        if next_cp < len(cps) and N == cps[next_cp]:
            dev = _max_deviation(spec, counts, N, max_seen, exact)
            devs.append(dev)
            table = [counts.get(i, 0) for i in range(max_seen + 1)]
            d, e, _, b = _deficit_parts(spec, table, N, max_seen)
            defs_.append(d)
            excs.append(e)
            argmaxes.append(b)
            for w in watch:
                lam = spec.weight(w)
                c = counts.get(w, 0)
                watch_dev[w].append(
                    lam - Fraction(c, N) if exact else lam - c / N)
            next_cp += 1
    return ConvergenceTrace(
        mode=spec.mode, checkpoints=tuple(cps),
        max_abs_deviation=tuple(devs), sum_deficits=tuple(defs_),
        sum_excesses=tuple(excs), argmax_letter=tuple(argmaxes),
        watch_deviation={a: tuple(v) for a, v in watch_dev.items()})


def _max_deviation(spec, counts, N, max_seen, exact):
    dev = (Fraction(counts[JOKER], N) if exact else counts[JOKER] / N)
    for a in range(1, max_seen + 1):
        d = spec.weight(a) - (Fraction(counts.get(a, 0), N) if exact
                              else counts.get(a, 0) / N)
        d = abs(d)
        if d > dev:
            dev = d
    size = spec.size
    if size is None or max_seen < size:
        w = spec.weight(max_seen + 1)
        if w > dev:
            dev = w
    return dev


def convergence_report(trace: ConvergenceTrace) -> ConvergenceReport:
    """Descriptive log-log slope and sup N*deviation over a trace.

    Zero-deviation checkpoints are dropped from the fit.  When every
    checkpoint is already exact there is no slope to fit; the report
    says so instead of raising.
    """
    cps = trace.checkpoints
    if len(cps) < 3 or cps[-1] < 100 * cps[0]:
        raise ValueError("need >= 3 checkpoints spanning >= 2 decades")
    sup = max((n * d for n, d in zip(cps, trace.max_abs_deviation)),
              default=0)
    nonzero = [(n, d) for n, d in zip(cps, trace.max_abs_deviation) if d > 0]
    if not nonzero:
        n0 = cps[0]
        return ConvergenceReport(
            slope=None, sup_n_deviation=sup, exact_from=n0,
            points_fitted=0, summary=f"exact from step {n0}")
    if len(nonzero) < 2:
        return ConvergenceReport(
            slope=None, sup_n_deviation=sup, exact_from=None,
            points_fitted=len(nonzero),
            summary="too few nonzero checkpoints to fit a slope")
    xs = [math.log(n) for n, _ in nonzero]
    ys = [math.log(float(d)) for _, d in nonzero]
    slope = statistics.linear_regression(xs, ys).slope
    return ConvergenceReport(
        slope=slope, sup_n_deviation=sup, exact_from=None,
        points_fitted=len(nonzero),
        summary=f"slope {slope:.4f} over {len(nonzero)} checkpoints, "
                f"sup N*dev {float(sup):.6g}")


def frequency_bounds(seq: Sequence, a: int, n_start: int = 1) -> FrequencyBounds:
    """Running min/max of the empirical frequency of one letter.

    Scans every step N in [n_start, len(seq)], not just checkpoints;
    finite-horizon stand-in for the upper/lower frequency of a letter.
    """
    spec = _require_spec(seq)
    exact = spec.mode == "exact"
    if not 1 <= n_start <= len(seq):
        raise ValueError(f"n_start {n_start} outside [1, {len(seq)}]")
    c = 0
    lo = hi = None
    for N, x in enumerate(seq, start=1):
        if x == a:
            c += 1
        if N >= n_start:
            f = Fraction(c, N) if exact else c / N
            if lo is None or f < lo:
                lo = f
            if hi is None or f > hi:
                hi = f
    return FrequencyBounds(letter=a, running_min=lo, running_max=hi,
                           n_start=n_start, n_end=len(seq))


def geometric_checkpoints(n: int, ratio: int = 10):
    """1, ratio, ratio^2, ... up to n, with n itself appended if absent."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if ratio < 2:
        raise ValueError("ratio must be >= 2")
    cps = []
    k = 1
    while k <= n:
        cps.append(k)
        k *= ratio
    if cps[-1] != n:
        cps.append(n)
    return cps


def _fmt(v, mode):
    if mode == "exact":
        f = Fraction(v)
        return f"{f.numerator}/{f.denominator}"
    return "%.17g" % v


def write_trace_csv(trace: ConvergenceTrace, out) -> None:
    """Write the trace table; out is a path or an open text file."""
    own = isinstance(out, (str, bytes))
    fh = open(out, "w", newline="") if own else out
    try:
        w = csv.writer(fh)
        w.writerow(["N", "max_abs_deviation", "sum_deficits",
                    "sum_excesses", "argmax_letter"])
        for i, n in enumerate(trace.checkpoints):
            w.writerow([n,
                        _fmt(trace.max_abs_deviation[i], trace.mode),
                        _fmt(trace.sum_deficits[i], trace.mode),
                        _fmt(trace.sum_excesses[i], trace.mode),
                        trace.argmax_letter[i]])
    finally:
        if own:
            fh.close()


@dataclass(frozen=True)
class AuditReport:
    steps: int
    checkpoints_checked: int
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations


def audit_run(spec, prefix=(), n=1000, checkpoints=None) -> AuditReport:
    """Run the scheduler n steps re-deriving every invariant per step.

    Exact mode only.  Checks, at every step: count conservation; the
    one-step frequency bound |c_old*M_new - c_new*M_old| <= M_old for
    every letter; deficit <= weight with equality exactly for unseen
    letters; and that the emitted letter wins the weighted-key argmax,
    recomputed from scratch, with lowest-index tie break.  The ledger
    zero identity is checked at each checkpoint.  Violations are
    collected, not raised.
    """
    if spec.mode != "exact":
        raise ValueError("audit requires an exact-mode spec")
    sch = Scheduler(spec, prefix)
    cps = set(checkpoints if checkpoints is not None
              else geometric_checkpoints(n))
    bad = []
    checked = 0
    while sch.M < n:
        M0 = sch.M
        before = list(sch.counts)
        keys = {}
        if M0 >= 1:
            for i in range(1, len(before)):
                w = spec.weight(i)
                keys[i] = w * (w - Fraction(before[i], M0))
            f = len(before)
            if spec.size is None or f <= spec.size:
                keys[f] = spec.weight(f) ** 2
        x = sch.step()
        M1 = sch.M
        if sum(sch.counts) != M1:
            bad.append(f"M={M1}: counts sum {sum(sch.counts)} != {M1}")
        if M0 >= 1:
            best = max(keys.values())
            want = 1 if best <= 0 else min(
                i for i, k in keys.items() if k == best)
            if x != want:
                bad.append(f"M={M1}: emitted {x}, argmax says {want}")
        for i in range(len(sch.counts)):
            c_old = before[i] if i < len(before) else 0
            if abs(c_old * M1 - sch.counts[i] * M0) > M0:
                bad.append(f"M={M1}: letter {i} one-step bound broken")
        for i in range(1, len(sch.counts)):
            w = spec.weight(i)
            d = w - Fraction(sch.counts[i], M1)
            if d > w or (d == w) != (sch.counts[i] == 0):
                bad.append(f"M={M1}: letter {i} deficit ceiling broken")
        if M1 in cps:
            led = ledger_at(sch)
            checked += 1
            if led.residual != 0:
                bad.append(f"M={M1}: ledger residual {led.residual}")
    return AuditReport(steps=n, checkpoints_checked=checked,
                       violations=tuple(bad))
