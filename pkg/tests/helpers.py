"""Independent oracles and fixture builders shared by the test modules."""

from fractions import Fraction
from itertools import combinations, product
import random

from hdlgen.comb import SopExpression, TruthTable, evaluate_sop


def brute_force_pass_at_k(n: int, c: int, k: int) -> Fraction:
    """Enumerate every size-k subset of n samples, c of which pass."""
    passing = set(range(c))
    hits = 0
    total = 0
    for subset in combinations(range(n), k):
        total += 1
        if any(s in passing for s in subset):
            hits += 1
    return Fraction(hits, total)


def random_table(rng: random.Random, n_inputs: int, dc_prob: float = 0.15,
                 missing_prob: float = 0.2) -> TruthTable:
    """Random single-output table with don't-cares and dropped rows."""
    inputs = [f"i{k}" for k in range(n_inputs)]
    rows = []
    for bits in product((0, 1), repeat=n_inputs):
        if rng.random() < missing_prob:
            continue
        out = None if rng.random() < dc_prob else rng.randint(0, 1)
        rows.append((*bits, out))
    if not rows:
        rows.append(((0,) * n_inputs) + (rng.randint(0, 1),))
    return TruthTable(inputs, ["y"], rows)


def sop_matches_table(table: TruthTable, expr: SopExpression) -> bool:
    """Soundness oracle: the SOP reproduces every care cell of the table."""
    for assignment, values in table.assignments():
        expected = values[expr.output]
        if expected is not None and evaluate_sop(expr, assignment) != expected:
            return False
    return True


def every_product_is_prime(table: TruthTable, expr: SopExpression) -> bool:
    """Dropping any literal from any product must break soundness somewhere.

    A widened product stays sound only if it avoids every explicit 0-row, so
    primality is checked against the table's care points directly.
    """
    if expr.constant is not None:
        return True
    zero_rows = []
    for assignment, values in table.assignments():
        if values[expr.output] == 0:
            zero_rows.append(assignment)
    for term in expr.terms:
        for drop in range(len(term)):
            widened = term[:drop] + term[drop + 1:]
            hits_zero = any(
                all((1 - a[l.name]) if l.negated else a[l.name] for l in widened)
                for a in zero_rows
            )
            if not hits_zero:
                return False
    return True
