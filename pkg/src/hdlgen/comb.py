"""Combinational procedure: JSON truth table -> minimized SOP -> Verilog.

The minimizer is Quine-McCluskey prime-implicant generation followed by exact
cover selection with Petrick's method (greedy set cover beyond a size cutoff).
Input patterns absent from the table are treated as don't-cares: model-written
tables are often partial, and the unconstrained rows are free.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from itertools import product as iter_product

from .backend import Backend, GenSettings, render
from .core import InformationList
from .errors import ContractViolation, FormatError, MissingInput, PortMismatch, UnknownOutput
from .prompts import PromptSet
from .verilog import parse_ports, port_bit_names, wrap_module

MAX_MINIMIZE_INPUTS = 16
PETRICK_PRIME_CUTOFF = 24

Cube = tuple[int, ...]  # one slot per input: 0, 1, or 2 (eliminated)
_DASH = 2


# ---------------------------------------------------------------------------
# Truth table


def _parse_cell(value, *, allow_dc: bool, where: str) -> int | None:
    if value in (0, 1) and not isinstance(value, bool):
        return value
    if isinstance(value, str) and value.strip() in ("0", "1"):
        return int(value.strip())
    if allow_dc and (value is None or (isinstance(value, str) and value.strip().lower() == "x")):
        return None
    kind = "0, 1, or don't-care" if allow_dc else "0 or 1"
    raise FormatError(f"{where}: cell must be {kind}, got {value!r}")


def _check_names(names, key: str) -> list[str]:
    if not isinstance(names, list) or not names or not all(isinstance(n, str) and n for n in names):
        raise FormatError(f"{key} must be a nonempty list of signal names")
    if len(set(names)) != len(names):
        raise FormatError(f"{key} contains duplicate names")
    return list(names)


@dataclass
class TruthTable:
    """Validated tabular function.

    ``rows`` are in display order: one cell per ``header_inputs`` column, then
    one per ``header_outputs`` column. ``inputs``/``outputs`` give the
    canonical signal order; don't-cares (None) are legal only in output cells.
    """

    inputs: list[str]
    outputs: list[str]
    rows: list[tuple[int | None, ...]]
    header_inputs: list[str] = field(default_factory=list)
    header_outputs: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.inputs = _check_names(self.inputs, "inputs")
        self.outputs = _check_names(self.outputs, "outputs")
        self.header_inputs = list(self.header_inputs) or list(self.inputs)
        self.header_outputs = list(self.header_outputs) or list(self.outputs)
        if sorted(self.header_inputs) != sorted(self.inputs):
            raise FormatError("header_inputs is not a permutation of inputs")
        if sorted(self.header_outputs) != sorted(self.outputs):
            raise FormatError("header_outputs is not a permutation of outputs")
        width = len(self.inputs) + len(self.outputs)
        seen: dict[tuple[int, ...], int] = {}
        for i, row in enumerate(self.rows, start=1):
            if len(row) != width:
                raise FormatError(f"row {i}: expected {width} cells, got {len(row)}")
            for j, cell in enumerate(row[: len(self.inputs)], start=1):
                if cell not in (0, 1):
                    raise FormatError(f"row {i}, column {j}: input cell must be 0 or 1, got {cell!r}")
            for j, cell in enumerate(row[len(self.inputs):], start=len(self.inputs) + 1):
                if cell not in (0, 1, None):
                    raise FormatError(f"row {i}, column {j}: output cell must be 0, 1, or don't-care")
            pattern = self.input_pattern(row)
            if pattern in seen:
                raise FormatError(f"row {i} repeats the input pattern of row {seen[pattern]}")
            seen[pattern] = i

    @classmethod
    def from_json_obj(cls, obj: dict) -> "TruthTable":
        for key in ("table", "inputs", "outputs"):
            if key not in obj:
                raise FormatError(f"missing required key {key!r}")
        inputs = _check_names(obj["inputs"], "inputs")
        outputs = _check_names(obj["outputs"], "outputs")
        header_inputs = _check_names(obj.get("header_inputs", inputs), "header_inputs")
        header_outputs = _check_names(obj.get("header_outputs", outputs), "header_outputs")
        raw_rows = obj["table"]
        if not isinstance(raw_rows, list) or not raw_rows:
            raise FormatError("table must be a nonempty list of rows")
        rows: list[tuple[int | None, ...]] = []
        for i, raw in enumerate(raw_rows, start=1):
            if not isinstance(raw, list):
                raise FormatError(f"row {i}: expected a list of cells")
            if len(raw) != len(inputs) + len(outputs):
                raise FormatError(
                    f"row {i}: expected {len(inputs) + len(outputs)} cells, got {len(raw)}"
                )
            cells = []
            for j, value in enumerate(raw, start=1):
                allow_dc = j > len(header_inputs)
                cells.append(_parse_cell(value, allow_dc=allow_dc, where=f"row {i}, column {j}"))
            rows.append(tuple(cells))
        return cls(inputs, outputs, rows, header_inputs, header_outputs)

    # Display order -> canonical order mapping.
    def input_pattern(self, row: tuple[int | None, ...]) -> tuple[int, ...]:
        return tuple(row[self.header_inputs.index(name)] for name in self.inputs)

    def output_value(self, row: tuple[int | None, ...], output_name: str) -> int | None:
        col = len(self.header_inputs) + self.header_outputs.index(output_name)
        return row[col]

    def minterm(self, row: tuple[int | None, ...]) -> int:
        idx = 0
        for bit_pos, value in enumerate(self.input_pattern(row)):
            idx |= value << bit_pos
        return idx

    def care_sets(self, output_name: str) -> tuple[set[int], set[int], set[int]]:
        """(on-set, explicit don't-cares, all present patterns) as minterm ints."""
        on: set[int] = set()
        dc: set[int] = set()
        present: set[int] = set()
        for row in self.rows:
            m = self.minterm(row)
            present.add(m)
            value = self.output_value(row, output_name)
            if value == 1:
                on.add(m)
            elif value is None:
                dc.add(m)
        return on, dc, present

    def assignments(self):
        """Yield (input assignment dict, output value dict) per row."""
        for row in self.rows:
            assignment = dict(zip(self.inputs, self.input_pattern(row)))
            values = {o: self.output_value(row, o) for o in self.outputs}
            yield assignment, values


def extract_first_json_object(text: str) -> dict | None:
    decoder = json.JSONDecoder()
    for m in re.finditer(r"\{", text):
        try:
            obj, _ = decoder.raw_decode(text, m.start())
        except ValueError:
            continue
        if isinstance(obj, dict):
            return obj
    return None


def request_truth_table(
    info_list: InformationList,
    backend: Backend,
    *,
    prompts: PromptSet | None = None,
    settings: GenSettings | None = None,
) -> TruthTable:
    if prompts is None:
        prompts = PromptSet()
    settings = settings or GenSettings()
    prompt = render(prompts["truth_table"], {"info_list": info_list.as_text()})
    reply = backend.complete(settings.request(prompt))
    obj = extract_first_json_object(reply)
    if obj is None:
        raise FormatError("reply contains no JSON object")
    return TruthTable.from_json_obj(obj)


# ---------------------------------------------------------------------------
# Sum-of-products


@dataclass(frozen=True)
class Literal:
    name: str
    negated: bool = False


@dataclass
class SopExpression:
    output: str
    terms: list[tuple[Literal, ...]]
    constant: int | None = None

    def __post_init__(self) -> None:
        if (self.constant is None) == (not self.terms):
            raise ContractViolation("exactly one of terms/constant must be set")
        if self.constant not in (None, 0, 1):
            raise ContractViolation("constant must be 0 or 1")
        seen_terms = set()
        for term in self.terms:
            names = [lit.name for lit in term]
            if len(set(names)) != len(names):
                raise ContractViolation(f"product reuses an input: {names}")
            key = tuple(sorted((l.name, l.negated) for l in term))
            if key in seen_terms:
                raise ContractViolation("duplicate product in SOP")
            seen_terms.add(key)


def evaluate_sop(expr: SopExpression, assignment: dict[str, int]) -> int:
    """OR over products of AND over literals."""
    if expr.constant is not None:
        return expr.constant
    for term in expr.terms:
        value = 1
        for lit in term:
            if lit.name not in assignment:
                raise MissingInput(f"assignment missing input {lit.name!r}")
            bit = assignment[lit.name]
            value &= (1 - bit) if lit.negated else bit
            if not value:
                break
        if value:
            return 1
    return 0


# ---------------------------------------------------------------------------
# Quine-McCluskey + Petrick


def _cube_of(minterm: int, n: int) -> Cube:
    return tuple((minterm >> i) & 1 for i in range(n))


def _covers(cube: Cube, minterm: int) -> bool:
    return all(v == _DASH or v == ((minterm >> i) & 1) for i, v in enumerate(cube))


def _try_merge(a: Cube, b: Cube) -> Cube | None:
    diff = -1
    for i, (x, y) in enumerate(zip(a, b)):
        if x == y:
            continue
        if x == _DASH or y == _DASH or diff >= 0:
            return None
        diff = i
    if diff < 0:
        return None
    return a[:diff] + (_DASH,) + a[diff + 1:]


def _prime_implicants(n: int, care: set[int]) -> list[Cube]:
    current = {_cube_of(m, n) for m in care}
    primes: set[Cube] = set()
    while current:
        groups: dict[int, list[Cube]] = {}
        for cube in current:
            groups.setdefault(sum(1 for v in cube if v == 1), []).append(cube)
        merged: set[Cube] = set()
        used: set[Cube] = set()
        for ones in sorted(groups):
            for a in groups[ones]:
                for b in groups.get(ones + 1, ()):
                    c = _try_merge(a, b)
                    if c is not None:
                        used.update((a, b))
                        merged.add(c)
        primes.update(c for c in current if c not in used)
        current = merged
    return sorted(primes)


def _absorb(solutions: set[frozenset[int]]) -> set[frozenset[int]]:
    kept: list[frozenset[int]] = []
    for s in sorted(solutions, key=lambda s: (len(s), sorted(s))):
        if not any(k <= s for k in kept):
            kept.append(s)
    return set(kept)


def _petrick(primes: list[Cube], candidates: list[int], minterms: list[int]) -> list[int]:
    solutions: set[frozenset[int]] = {frozenset()}
    for m in minterms:
        options = [i for i in candidates if _covers(primes[i], m)]
        grown: set[frozenset[int]] = set()
        for s in solutions:
            if any(i in s for i in options):
                grown.add(s)
                continue
            for i in options:
                grown.add(s | {i})
        solutions = _absorb(grown)

    def cost(s: frozenset[int]) -> tuple:
        literals = sum(sum(1 for v in primes[i] if v != _DASH) for i in s)
        return (len(s), literals, sorted(primes[i] for i in s))

    return sorted(min(solutions, key=cost))


def _greedy_cover(primes: list[Cube], candidates: list[int], minterms: list[int]) -> list[int]:
    uncovered = set(minterms)
    chosen: list[int] = []
    while uncovered:
        best = min(
            candidates,
            key=lambda i: (-len([m for m in uncovered if _covers(primes[i], m)]), primes[i]),
        )
        covered = {m for m in uncovered if _covers(primes[best], m)}
        if not covered:
            raise ContractViolation("cover selection stalled")  # unreachable: primes cover on-set
        chosen.append(best)
        uncovered -= covered
    return chosen


def _select_cover(primes: list[Cube], on: set[int]) -> list[Cube]:
    cover_of = {m: [i for i, p in enumerate(primes) if _covers(p, m)] for m in on}
    chosen: set[int] = set()
    # essential primes: sole cover of some on-minterm
    changed = True
    remaining = set(on)
    while changed:
        changed = False
        for m in sorted(remaining):
            options = cover_of[m]
            if len(options) == 1 and options[0] not in chosen:
                chosen.add(options[0])
                changed = True
        if changed:
            remaining = {m for m in remaining if not any(i in chosen for i in cover_of[m])}
    if remaining:
        candidates = sorted({i for m in remaining for i in cover_of[m]})
        if len(candidates) <= PETRICK_PRIME_CUTOFF:
            chosen.update(_petrick(primes, candidates, sorted(remaining)))
        else:
            chosen.update(_greedy_cover(primes, candidates, sorted(remaining)))
    return sorted(primes[i] for i in chosen)


def _cube_to_term(cube: Cube, inputs: list[str]) -> tuple[Literal, ...]:
    return tuple(
        Literal(inputs[i], negated=(v == 0)) for i, v in enumerate(cube) if v != _DASH
    )


def minimize(table: TruthTable, output_name: str) -> SopExpression:
    """Minimal SOP for one output; don't-cares (explicit and missing rows) are free."""
    if output_name not in table.outputs:
        raise UnknownOutput(f"{output_name!r} is not an output of the table")
    n = len(table.inputs)
    if n > MAX_MINIMIZE_INPUTS:
        raise FormatError(f"table has {n} inputs; minimization is capped at {MAX_MINIMIZE_INPUTS}")
    on, dc, present = table.care_sets(output_name)
    universe = 1 << n
    free = dc | (set(range(universe)) - present)
    if not on:
        return SopExpression(output_name, [], constant=0)
    primes = _prime_implicants(n, on | free)
    primes = [p for p in primes if any(_covers(p, m) for m in on)]
    cover = _select_cover(primes, on)
    if any(all(v == _DASH for v in cube) for cube in cover):
        return SopExpression(output_name, [], constant=1)
    terms = [_cube_to_term(cube, table.inputs) for cube in cover]
    return SopExpression(output_name, terms)


def minimize_all(table: TruthTable) -> list[SopExpression]:
    return [minimize(table, name) for name in table.outputs]


# ---------------------------------------------------------------------------
# Verilog emission


def _term_text(term: tuple[Literal, ...]) -> str:
    return "(" + " & ".join(("~" + lit.name) if lit.negated else lit.name for lit in term) + ")"


def sop_text(expr: SopExpression) -> str:
    if expr.constant is not None:
        return f"{expr.output} = {expr.constant}"
    terms = sorted(expr.terms, key=lambda t: tuple((l.name, l.negated) for l in t))
    return f"{expr.output} = " + " | ".join(_term_text(t) for t in terms)


def emit_verilog(module_header: str, exprs: list[SopExpression]) -> str:
    """Emit one continuous assignment per expression, in declared port order."""
    ports = parse_ports(module_header)
    input_names = port_bit_names([p for p in ports if p.direction in ("input", "inout")])
    output_ports = [p for p in ports if p.direction == "output"]
    output_names = port_bit_names(output_ports)

    unmatched: list[str] = []
    seen_outputs: set[str] = set()
    for expr in exprs:
        if expr.output in seen_outputs:
            raise ContractViolation(f"two expressions drive output {expr.output!r}")
        seen_outputs.add(expr.output)
        if expr.output not in output_names:
            unmatched.append(expr.output)
        for term in expr.terms:
            for lit in term:
                if lit.name not in input_names:
                    unmatched.append(lit.name)
    if unmatched:
        raise PortMismatch(sorted(set(unmatched)))

    ordered_slots: list[str] = []
    for p in output_ports:
        ordered_slots.extend(p.bit_names())
        if p.is_vector:
            ordered_slots.append(p.name)

    def slot(expr: SopExpression) -> int:
        return ordered_slots.index(expr.output) if expr.output in ordered_slots else len(ordered_slots)

    lines = []
    for expr in sorted(exprs, key=slot):
        if expr.constant is not None:
            rhs = f"1'b{expr.constant}"
        else:
            terms = sorted(expr.terms, key=lambda t: tuple((l.name, l.negated) for l in t))
            rhs = " | ".join(_term_text(t) for t in terms)
        lines.append(f"    assign {expr.output} = {rhs};")
    return wrap_module(module_header, lines)


# ---------------------------------------------------------------------------
# Emitted-module oracle: parse our assign syntax back and evaluate it.

_ASSIGN_RE = re.compile(r"\bassign\s+(.+?)\s*=\s*(.+?);", re.DOTALL)
_EXPR_TOKEN_RE = re.compile(r"1'b[01]|[A-Za-z_$][\w$]*\s*(?:\[\s*\d+\s*\])?|[~&|()]")


def _tokenize_expr(text: str) -> list[str]:
    tokens = []
    for m in _EXPR_TOKEN_RE.finditer(text):
        tokens.append(re.sub(r"\s+", "", m.group(0)))
    return tokens


class _ExprParser:
    """Recursive-descent evaluator for the emitted assign syntax (~, &, |)."""

    def __init__(self, tokens: list[str], assignment: dict[str, int]):
        self.tokens = tokens
        self.pos = 0
        self.assignment = assignment

    def _peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def _next(self) -> str:
        tok = self._peek()
        if tok is None:
            raise ContractViolation("unexpected end of expression")
        self.pos += 1
        return tok

    def parse(self) -> int:
        value = self._or()
        if self._peek() is not None:
            raise ContractViolation(f"trailing tokens in expression: {self.tokens[self.pos:]}")
        return value

    def _or(self) -> int:
        value = self._and()
        while self._peek() == "|":
            self._next()
            value |= self._and()
        return value

    def _and(self) -> int:
        value = self._atom()
        while self._peek() == "&":
            self._next()
            value &= self._atom()
        return value

    def _atom(self) -> int:
        tok = self._next()
        if tok == "~":
            return 1 - self._atom()
        if tok == "(":
            value = self._or()
            if self._next() != ")":
                raise ContractViolation("unbalanced parentheses in expression")
            return value
        if tok in ("1'b0", "1'b1"):
            return int(tok[-1])
        if tok not in self.assignment:
            raise MissingInput(f"assignment missing input {tok!r}")
        return self.assignment[tok]


def evaluate_emitted_module(verilog_src: str, assignment: dict[str, int]) -> dict[str, int]:
    """Evaluate every continuous assignment in an emitted module.

    This is the bundled table-evaluating oracle: it re-parses the emitted
    text rather than reusing the SOP structures that produced it.
    """
    results: dict[str, int] = {}
    for m in _ASSIGN_RE.finditer(verilog_src):
        target = re.sub(r"\s+", "", m.group(1))
        results[target] = _ExprParser(_tokenize_expr(m.group(2)), assignment).parse()
    return results


def all_input_assignments(inputs: list[str]):
    """Every 0/1 assignment over the inputs, in minterm order."""
    for bits in iter_product((0, 1), repeat=len(inputs)):
        yield dict(zip(inputs, bits))


def exhaustive_testbench(table: TruthTable, module_name: str) -> str:
    """Self-checking testbench driving every care row of the table.

    Prints the standard mismatch hint line, so the harness's default protocol
    patterns recover (m, n). Signal names must be plain identifiers.
    """
    for name in table.inputs + table.outputs:
        if "[" in name:
            raise ContractViolation("testbench generation needs scalar signal names")
    lines = ["module tb;"]
    lines.extend(f"    reg {name};" for name in table.inputs)
    lines.extend(f"    wire {name};" for name in table.outputs)
    conns = ", ".join(f".{n}({n})" for n in table.inputs + table.outputs)
    lines.append(f"    {module_name} dut({conns});")
    lines.append("    integer mismatches;")
    lines.append("    initial begin")
    lines.append("        mismatches = 0;")
    checks = 0
    for assignment, values in table.assignments():
        drive = " ".join(f"{name} = 1'b{assignment[name]};" for name in table.inputs)
        lines.append(f"        {drive} #1;")
        for output, value in values.items():
            if value is None:
                continue
            checks += 1
            lines.append(
                f"        if ({output} !== 1'b{value}) mismatches = mismatches + 1;"
            )
    lines.append(
        f'        $display("Hint: Total mismatched samples is %0d out of {checks} samples", mismatches);'
    )
    lines.append("        $finish;")
    lines.append("    end")
    lines.append("endmodule")
    return "\n".join(lines) + "\n"
