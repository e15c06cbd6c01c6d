"""Lossless hex text form for dyadic rationals.

Witness endpoints are dyadic (their denominators are powers of two), so
they serialize exactly as C99-style hex floats: 0x1.<mantissa>p<exp>,
normalized, trailing zero nibbles stripped, zero spelled 0x0p+0.  The
parser also accepts everything float.hex() emits, subnormals included,
so Python floats round-trip through the same grammar.
"""

from __future__ import annotations

import re
from fractions import Fraction

__all__ = ["to_hex", "from_hex"]

_HEX = re.compile(
    r"^(?P<sign>[+-]?)0[xX](?P<int>[0-9a-fA-F]+)"
    r"(?:\.(?P<frac>[0-9a-fA-F]*))?[pP](?P<exp>[+-]?\d+)$")


def to_hex(value) -> str:
    """Exact hex form of a dyadic rational; ValueError otherwise."""
    v = Fraction(value)
    if v == 0:
        return "0x0p+0"
    sign = "-" if v < 0 else ""
    v = abs(v)
    den = v.denominator
    if den & (den - 1):
        raise ValueError(f"{value!r} is not dyadic")
    # normalize to v = (1 + frac) * 2**e with frac in [0, 1)
    e = v.numerator.bit_length() - 1 - (den.bit_length() - 1)
    frac = v / Fraction(2) ** e - 1
    assert 0 <= frac < 1
    if frac == 0:
        return f"{sign}0x1p{e:+d}"
    k = frac.denominator.bit_length() - 1  # frac = p / 2**k
    nibbles = -(-k // 4)
    digits = frac.numerator << (4 * nibbles - k)
    text = format(digits, "x").rjust(nibbles, "0").rstrip("0")
    return f"{sign}0x1.{text}p{e:+d}"


def from_hex(text: str) -> Fraction:
    """Parse a hex float (ours or float.hex()'s) to an exact Fraction."""
    m = _HEX.match(text.strip())
    if not m:
        raise ValueError(f"not a hex float: {text!r}")
    whole = int(m.group("int"), 16)
    frac = m.group("frac") or ""
    num = (whole << (4 * len(frac))) + (int(frac, 16) if frac else 0)
    v = Fraction(num, 1 << (4 * len(frac))) * Fraction(2) ** int(m.group("exp"))
    return -v if m.group("sign") == "-" else v
