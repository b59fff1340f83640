"""Lexical Verilog utilities.

Everything here works at the token level, never on a full parse tree: the
sources being inspected are model outputs that are often syntactically
imperfect, so the scanners tolerate anything and extract what they can.
Comments and string literals are masked out before scanning so a ``posedge``
inside a comment cannot leak into a decision.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ContractViolation

KEYWORDS = frozenset(
    """module endmodule input output inout reg wire logic signed unsigned
    always assign begin end if else case casez casex endcase default fork
    join posedge negedge or and not parameter localparam integer real initial
    genvar generate endgenerate function endfunction task endtask""".split()
)

_WORD_RE = re.compile(r"[A-Za-z_$][A-Za-z0-9_$]*")
_FENCE_RE = re.compile(r"```[^\n`]*\n(.*?)(?:```|\Z)", re.DOTALL)

# Constructs that open a nested body inside an always region.
_OPENERS = {"begin": "end", "case": "endcase", "casez": "endcase", "casex": "endcase", "fork": "join"}


def mask_comments_and_strings(src: str) -> str:
    """Same-length copy of ``src`` with comments and string literals blanked."""
    out = list(src)
    i, n = 0, len(src)
    while i < n:
        ch = src[i]
        nxt = src[i + 1] if i + 1 < n else ""
        if ch == "/" and nxt == "/":
            while i < n and src[i] != "\n":
                out[i] = " "
                i += 1
        elif ch == "/" and nxt == "*":
            out[i] = out[i + 1] = " "
            i += 2
            while i < n and not (src[i] == "*" and i + 1 < n and src[i + 1] == "/"):
                if src[i] != "\n":
                    out[i] = " "
                i += 1
            if i < n:
                out[i] = " "
                if i + 1 < n:
                    out[i + 1] = " "
                i += 2
        elif ch == '"':
            out[i] = " "
            i += 1
            while i < n and src[i] != '"':
                if src[i] == "\\" and i + 1 < n:
                    out[i] = out[i + 1] = " "
                    i += 2
                    continue
                if src[i] != "\n":
                    out[i] = " "
                i += 1
            if i < n:
                out[i] = " "
                i += 1
        else:
            i += 1
    return "".join(out)


def normalize_ws(text: str) -> str:
    return " ".join(text.split())


def contains_snippets(candidate: str, snippets: list[str]) -> bool:
    """True when every snippet appears in the candidate modulo whitespace."""
    haystack = normalize_ws(candidate)
    return all(normalize_ws(s) in haystack for s in snippets)


def _scan_bare_regions(text: str) -> list[str]:
    """Top-level ``module``..``endmodule`` and ``always``..matching-``end`` regions."""
    mask = mask_comments_and_strings(text)
    tokens = [(m.start(), m.end(), m.group(0)) for m in re.finditer(r"[A-Za-z_$][A-Za-z0-9_$]*|[;@()]", mask)]
    regions: list[str] = []
    i = 0
    while i < len(tokens):
        start, _, tok = tokens[i]
        if tok == "module":
            j = i + 1
            while j < len(tokens) and tokens[j][2] != "endmodule":
                j += 1
            end = tokens[j][1] if j < len(tokens) else len(text)
            regions.append(text[start:end])
            i = j + 1
            continue
        if tok == "always":
            j = i + 1
            if j < len(tokens) and tokens[j][2] == "@":
                j += 1
                if j < len(tokens) and tokens[j][2] == "(":
                    depth = 1
                    j += 1
                    while j < len(tokens) and depth:
                        if tokens[j][2] == "(":
                            depth += 1
                        elif tokens[j][2] == ")":
                            depth -= 1
                        j += 1
            if j < len(tokens) and tokens[j][2] in _OPENERS:
                stack = [_OPENERS[tokens[j][2]]]
                j += 1
                while j < len(tokens) and stack:
                    t = tokens[j][2]
                    if t in _OPENERS:
                        stack.append(_OPENERS[t])
                    elif t == stack[-1]:
                        stack.pop()
                    j += 1
                end = len(text) if stack else tokens[j - 1][1]
            else:
                while j < len(tokens) and tokens[j][2] != ";":
                    j += 1
                end = tokens[j][1] if j < len(tokens) else len(text)
                j += 1
            regions.append(text[start:end])
            i = j
            continue
        i += 1
    return regions


def extract_code_blocks(text: str) -> list[str]:
    """Fenced code regions in order; bare module/always regions as fallback."""
    fenced = [m.group(1) for m in _FENCE_RE.finditer(text)]
    fenced = [f for f in fenced if f.strip()]
    if fenced:
        return fenced
    return _scan_bare_regions(text)


@dataclass(frozen=True)
class Port:
    name: str
    direction: str  # input | output | inout
    msb: int | None = None
    lsb: int | None = None

    @property
    def is_vector(self) -> bool:
        return self.msb is not None

    def bit_names(self) -> list[str]:
        if not self.is_vector:
            return [self.name]
        lo, hi = sorted((self.msb, self.lsb))
        return [f"{self.name}[{i}]" for i in range(lo, hi + 1)]


_DIRECTION_RE = re.compile(r"\b(input|output|inout)\b")
_RANGE_RE = re.compile(r"^\s*\[\s*(\d+)\s*:\s*(\d+)\s*\]")
_DECL_STOP_RE = re.compile(r"\b(?:input|output|inout)\b|[);=]")


def parse_ports(header: str) -> list[Port]:
    """Scan a module header (ANSI or non-ANSI style) for port declarations."""
    mask = mask_comments_and_strings(header)
    ports: list[Port] = []
    seen: set[str] = set()
    for m in _DIRECTION_RE.finditer(mask):
        direction = m.group(1)
        rest = mask[m.end():]
        stop = _DECL_STOP_RE.search(rest)
        chunk = rest[: stop.start()] if stop else rest
        # skip net-type / sign qualifiers, pick up one optional range
        offset = 0
        msb = lsb = None
        while True:
            sub = chunk[offset:]
            qual = re.match(r"\s*(?:reg|wire|logic|signed|unsigned)\b", sub)
            if qual:
                offset += qual.end()
                continue
            rng = _RANGE_RE.match(sub)
            if rng:
                msb, lsb = int(rng.group(1)), int(rng.group(2))
                offset += rng.end()
                continue
            break
        for w in _WORD_RE.finditer(chunk[offset:]):
            name = w.group(0)
            if name in KEYWORDS or name in seen:
                continue
            seen.add(name)
            ports.append(Port(name, direction, msb, lsb))
    return ports


def port_bit_names(ports: list[Port]) -> set[str]:
    names: set[str] = set()
    for p in ports:
        names.update(p.bit_names())
        names.add(p.name)
    return names


_ASSIGN_TARGET_RE = re.compile(r"\b([A-Za-z_][\w$]*)\s*(?:\[[^\]]*\]\s*)?(?:<=(?!=)|=(?![=<>]))")
_CONT_ASSIGN_RE = re.compile(r"\bassign\s+([A-Za-z_][\w$]*)")


def find_assigned_identifiers(code: str) -> tuple[set[str], set[str]]:
    """Names assigned in the code, split into (procedural regs, continuous wires)."""
    mask = mask_comments_and_strings(code)
    wires = {m.group(1) for m in _CONT_ASSIGN_RE.finditer(mask)}
    regs = {m.group(1) for m in _ASSIGN_TARGET_RE.finditer(mask)} - wires - KEYWORDS
    return regs, wires


def infer_width(name: str, code_mask: str) -> int | None:
    """Highest bit index the code touches on ``name``, or None for scalar use."""
    top: int | None = None
    for m in re.finditer(rf"\b{re.escape(name)}\s*\[\s*(\d+)(?:\s*:\s*(\d+))?\s*\]", code_mask):
        for g in m.groups():
            if g is not None:
                top = max(top or 0, int(g))
    return top


def _strip_endmodule(module_header: str) -> str:
    if not module_header.strip():
        raise ContractViolation("module header must be nonempty")
    header = module_header.rstrip()
    if re.search(r"\bendmodule\b", mask_comments_and_strings(header)):
        header = re.sub(r"\bendmodule\b\s*$", "", header).rstrip()
    return header


def wrap_module(module_header: str, body_lines: list[str]) -> str:
    """Append body lines to a header and close the module."""
    header = _strip_endmodule(module_header)
    return "\n".join([header, *body_lines, "endmodule"]) + "\n"


_ALIAS_RE = re.compile(r"\b([A-Za-z_][\w$]*)\s*<?=\s*([A-Za-z_][\w$]*)\s*;")


def _propagate_widths(widths: dict[str, int | None], code_mask: str) -> None:
    """Let whole-register assignments (``a <= b;``) share an inferred width."""
    aliases = [(m.group(1), m.group(2)) for m in _ALIAS_RE.finditer(code_mask)]
    for _ in range(len(widths) + 1):
        changed = False
        for lhs, rhs in aliases:
            for a, b in ((lhs, rhs), (rhs, lhs)):
                if a in widths and widths[a] is None and widths.get(b) is not None:
                    widths[a] = widths[b]
                    changed = True
        if not changed:
            break


def assemble_module(module_header: str, snippets: list[str]) -> str:
    """Deterministically wrap code snippets into a complete module.

    Internal names the snippets assign but the header does not declare get a
    best-effort declaration (``reg``/``wire``, width from the highest bit
    index the code touches).
    """
    header = _strip_endmodule(module_header)
    header_mask = mask_comments_and_strings(header)
    declared = {m.group(0) for m in _WORD_RE.finditer(header_mask)}

    body = "\n".join(snippets)
    body_mask = mask_comments_and_strings(body)
    regs, wires = find_assigned_identifiers(body)
    undeclared = (regs | wires) - declared
    widths = {name: infer_width(name, body_mask) for name in undeclared}
    _propagate_widths(widths, body_mask)
    decls: list[str] = []
    for kind, names in (("reg", regs), ("wire", wires)):
        for name in sorted(names - declared):
            top = widths.get(name)
            rng = f" [{top}:0]" if top else ""
            decls.append(f"    {kind}{rng} {name};")

    parts = [header, ""]
    if decls:
        parts.extend(decls)
        parts.append("")
    for snippet in snippets:
        parts.append(snippet.strip("\n"))
        parts.append("")
    parts.append("endmodule")
    return "\n".join(parts) + "\n"
