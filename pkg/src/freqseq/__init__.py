"""Deficit-greedy frequency-fair sequences with certified applications.

Core: schedule letters of a finite or countable weighted alphabet so
every letter's running frequency converges to its assigned weight.
Numeration: the base-b instance coincides with digit-increment counting
and a substitution fixed point.  Torus: realize target cell masses on
[0,1] and construct a certified real whose powers visit the planned
cells.  Diagnostics: ledgers, deviation traces, convergence reports.
"""

from .core import (
    JOKER,
    FrequencySpec,
    InvalidPrefixLetter,
    NonPositiveWeight,
    NotNonincreasing,
    Scheduler,
    Sequence,
    SpecError,
    SumNotOne,
    TailMismatch,
    ZeroSteps,
    generate,
    make_lazy_spec,
    make_spec,
)
from .diagnostics import (
    AuditReport,
    CheckpointBeyondSequence,
    ConvergenceReport,
    ConvergenceTrace,
    FrequencyBounds,
    Ledger,
    audit_run,
    convergence_report,
    deviation_trace,
    frequency_bounds,
    geometric_checkpoints,
    ledger_at,
    write_trace_csv,
)
from .hexfloat import from_hex, to_hex
from .numeration import (
    BaseTooSmall,
    EquivalenceReport,
    counter_increments,
    geometric_spec,
    substitution_fixed_point,
    substitution_image,
    verify_equivalence,
)
from .torus import (
    AtomAtEndpoint,
    BadPartition,
    BetaWitness,
    CertificationReport,
    EmpiricalReport,
    ImageTooShort,
    IntervalPartition,
    IntervalTooShort,
    MeasureSpec,
    MembershipBreak,
    PrecisionExhausted,
    TorusInterval,
    cell_sequence,
    certification_report,
    certify,
    construct_beta,
    empirical_measure,
    parse_partition_file,
    planned_cells,
    read_witness,
    uniform_partition,
    write_witness,
)

__version__ = "0.1.0"
