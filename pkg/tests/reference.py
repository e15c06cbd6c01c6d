"""Brute-force reference implementation used only by the tests.

Deliberately naive and structurally unlike the engine: every step
recomputes every letter's selection key as a Fraction from scratch and
takes a full argmax over a fixed letter table.  No common denominators,
no lazy frontier, no incremental state beyond the counts.  The key is
the weight-scaled deficit lambda(a) * (lambda(a) - counts(a)/M), same
semantics as the engine, arrived at by a different route.

For countable alphabets the table is a truncation to the first K
letters.  That truncation is sound as long as, at every step, the best
key among tabled letters is at least lambda(a_{K+1})^2: a letter beyond
the table has key equal to its squared weight, which is at most
lambda(a_{K+1})^2 by monotonicity, so it can never strictly beat the
winner, and on an exact tie the lowest index wins anyway.  The oracle
asserts that condition each step, so a completed oracle run certifies
its own truncation.
"""

from fractions import Fraction


def reference_sequence(weights, n, prefix=(), tail_weight=None):
    """First n letters (prefix included) under the most-late rule.

    weights: exact Fractions in internal (nonincreasing) order, 1-based
    letter i having weight weights[i-1].  tail_weight: lambda(a_{K+1})
    for a truncated countable alphabet, None for a complete finite one.
    """
    weights = [Fraction(w) for w in weights]
    counts = {0: 0}
    for i in range(1, len(weights) + 1):
        counts[i] = 0
    out = []
    for a in prefix:
        counts[a] += 1
        out.append(a)
    while len(out) < n:
        M = len(out)
        if M == 0:
            choice = 1
        else:
            best, best_k = None, None
            for i in range(1, len(weights) + 1):
                w = weights[i - 1]
                k = w * (w - Fraction(counts[i], M))
                if best_k is None or k > best_k:
                    best, best_k = i, k
            if tail_weight is not None:
                assert best_k >= tail_weight * tail_weight, (
                    f"truncation unsound at step {M}: best key "
                    f"{best_k} < squared tail weight")
            choice = best if best_k > 0 else 1
        counts[choice] += 1
        out.append(choice)
    return out


def reference_deficits(weights, letters, upto=None):
    """Deficit table after the first ``upto`` letters (default all)."""
    weights = [Fraction(w) for w in weights]
    if upto is None:
        upto = len(letters)
    counts = {i: 0 for i in range(len(weights) + 1)}
    for a in letters[:upto]:
        counts[a] += 1
    M = upto
    table = {0: -Fraction(counts[0], M)}
    for i in range(1, len(weights) + 1):
        table[i] = weights[i - 1] - Fraction(counts[i], M)
    return table
