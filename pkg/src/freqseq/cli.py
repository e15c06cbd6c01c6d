"""Command-line front end.

Four subcommands: gen emits a scheduled sequence as JSON lines, diag
writes a checkpoint trace with a convergence report, numer runs the
three-way base-b equivalence check, beta runs the torus pipeline and
certifies its witness.  Outputs are byte-deterministic unless --stamp
is given, which only decorates reports, never data files.

Exit codes: 0 success, 1 domain error, 2 usage, 3 equivalence mismatch,
4 certification failure, 5 precision exhausted.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from fractions import Fraction

from .core import JOKER, SpecError, SumNotOne, _to_exact, generate, make_spec
from .diagnostics import (
    convergence_report,
    deviation_trace,
    geometric_checkpoints,
    write_trace_csv,
)
from .numeration import geometric_spec, verify_equivalence
from .torus import (
    PrecisionExhausted,
    cell_sequence,
    certification_report,
    construct_beta,
    parse_partition_file,
    planned_cells,
    write_witness,
)

#: float-mode weights files still get their sum checked exactly first
_FLOAT_SUM_TOL = 2.0 ** -40


class UsageError(Exception):
    pass


def load_weights(path):
    """Weights file: one weight per line, "p/q" or decimal, '#' comments."""
    vals = []
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if line:
                vals.append(_to_exact(line))
    if not vals:
        raise SpecError(f"no weights in {path}")
    return vals


def _spec_from(args, default_mode):
    mode = args.mode or default_mode
    if args.geometric is not None:
        return geometric_spec(args.geometric, mode)
    exact = load_weights(args.weights)
    # validate the sum exactly so the error message carries a fraction
    residual = 1 - sum(exact)
    if residual != 0 and abs(float(residual)) > _FLOAT_SUM_TOL:
        raise SumNotOne(residual)
    if mode == "exact":
        return make_spec(exact)
    return make_spec([float(v) for v in exact], mode="float")


def parse_prefix(text, spec):
    """Comma-separated tokens: J for the Joker, integers as user letters."""
    if not text:
        return ()
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if tok.upper() == "J":
            out.append(JOKER)
            continue
        try:
            u = int(tok)
        except ValueError:
            raise UsageError(f"bad prefix token {tok!r}")
        out.append(spec.to_internal(u))
    return tuple(out)


def _open_out(path):
    return open(path, "w") if path else sys.stdout


def _stamp(args):
    if getattr(args, "stamp", False):
        print(f"# stamp {datetime.now(timezone.utc).isoformat()}")


def cmd_gen(args) -> int:
    spec = _spec_from(args, default_mode="float")
    seq = generate(spec, parse_prefix(args.prefix, spec), args.terms)
    fh = _open_out(args.out)
    try:
        for n, u in enumerate(seq.user_letters(), start=1):
            fh.write(json.dumps({"n": n, "letter": u}) + "\n")
    finally:
        if fh is not sys.stdout:
            fh.close()
    if args.trace:
        cps = geometric_checkpoints(args.terms, args.checkpoint_ratio)
        write_trace_csv(deviation_trace(seq, cps), args.trace)
    return 0


def cmd_diag(args) -> int:
    spec = _spec_from(args, default_mode="exact")
    seq = generate(spec, parse_prefix(args.prefix, spec), args.terms)
    cps = geometric_checkpoints(args.terms, args.checkpoint_ratio)
    trace = deviation_trace(seq, cps)
    _stamp(args)
    if args.trace:
        write_trace_csv(trace, args.trace)
    else:
        write_trace_csv(trace, sys.stdout)
    try:
        rep = convergence_report(trace)
        print(f"convergence: {rep.summary}")
    except ValueError as e:
        print(f"convergence: unavailable ({e})")
    return 0


def cmd_numer(args) -> int:
    _stamp(args)
    rep = verify_equivalence(args.base, args.terms, args.mode or "exact")
    print(rep.summary())
    return 0 if rep.equal else 3


def cmd_beta(args) -> int:
    ms = parse_partition_file(args.partition)
    planned = cell_sequence(ms, args.terms)
    witness = construct_beta(planned_cells(ms, planned),
                             ms.partition.c_min)
    _stamp(args)
    if args.out:
        write_witness(witness, args.out)
    else:
        write_witness(witness, sys.stdout)
    rep = certification_report(witness)
    if rep.ok:
        print(f"CERTIFIED n={witness.N} precision={witness.precision_bits}")
        return 0
    print(f"NOT-CERTIFIED at m={rep.failed_at}")
    return 4


def _add_common(sub, *, spec_source, mode_default):
    if spec_source == "weights":
        grp = sub.add_mutually_exclusive_group(required=True)
        grp.add_argument("--weights", metavar="FILE",
                         help="weights file, one weight per line")
        grp.add_argument("--geometric", metavar="B", type=int,
                         help="lazy geometric spec with the given base")
        sub.add_argument("--prefix", default="",
                         help="comma-separated prefix tokens, J for the Joker")
    sub.add_argument("--terms", metavar="N", type=int, required=True,
                     help="number of terms to produce")
    sub.add_argument("--mode", choices=("exact", "float"), default=None,
                     help=f"arithmetic mode (default {mode_default})")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="freqseq",
        description="frequency-fair sequences, base-b bridges, "
                    "certified power-in-cell reals")
    subs = p.add_subparsers(dest="cmd", required=True)

    g = subs.add_parser("gen", help="emit a scheduled sequence as JSON lines")
    _add_common(g, spec_source="weights", mode_default="float")
    g.add_argument("--out", metavar="FILE", help="JSONL path (default stdout)")
    g.add_argument("--trace", metavar="FILE", help="also write a trace CSV")
    g.add_argument("--checkpoint-ratio", type=int, default=10)
    g.set_defaults(func=cmd_gen)

    d = subs.add_parser("diag", help="trace CSV plus convergence report")
    _add_common(d, spec_source="weights", mode_default="exact")
    d.add_argument("--trace", metavar="FILE",
                   help="trace CSV path (default stdout)")
    d.add_argument("--checkpoint-ratio", type=int, default=10)
    d.add_argument("--stamp", action="store_true",
                   help="timestamp the report header")
    d.set_defaults(func=cmd_diag)

    n = subs.add_parser("numer", help="three-way base-b equivalence check")
    n.add_argument("--base", type=int, required=True)
    _add_common(n, spec_source=None, mode_default="exact")
    n.add_argument("--stamp", action="store_true")
    n.set_defaults(func=cmd_numer)

    b = subs.add_parser("beta", help="torus pipeline with certified witness")
    b.add_argument("--partition", metavar="FILE", required=True,
                   help="partition file: lines of lo hi mass")
    _add_common(b, spec_source=None, mode_default="exact")
    b.add_argument("--out", metavar="FILE",
                   help="witness JSON path (default stdout)")
    b.add_argument("--stamp", action="store_true")
    b.set_defaults(func=cmd_beta)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        parser.error(str(e))
    except PrecisionExhausted as e:
        print(f"{e.__class__.__name__}: {e}", file=sys.stderr)
        return 5
    except BrokenPipeError:
        return 1
    except Exception as e:
        print(f"{e.__class__.__name__}: {e}", file=sys.stderr)
        return 1
