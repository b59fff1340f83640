"""Sequential procedure: state-transition table, three always blocks, merge.

The three blocks are generated strictly in order (state register, next-state
logic, output logic), each with a description pass before the code pass. The
merge asks the backend to assemble the module and falls back to deterministic
local assembly when the reply drops or mangles a block.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .backend import Backend, GenSettings, render
from .core import InformationList
from .errors import ContractViolation, FormatError
from .prompts import PromptSet
from .verilog import (
    assemble_module,
    contains_snippets,
    extract_code_blocks,
    mask_comments_and_strings,
)

__all__ = [
    "ColumnRole",
    "Column",
    "StateTransitionTable",
    "BlockRole",
    "AlwaysBlockPlan",
    "request_stt",
    "generate_block",
    "merge_blocks",
    "extract_code_blocks",
]


class ColumnRole(Enum):
    CURRENT_STATE = "current_state"
    INPUT = "input"
    NEXT_STATE = "next_state"
    OUTPUT = "output"


@dataclass(frozen=True)
class Column:
    name: str
    role: ColumnRole


@dataclass
class StateTransitionTable:
    """Parsed transition rows; cells are identifiers, bits, or 'X' wildcards."""

    columns: list[Column]
    rows: list[tuple[str, ...]]

    def __post_init__(self) -> None:
        roles = [c.role for c in self.columns]
        if roles.count(ColumnRole.CURRENT_STATE) != 1 or roles.count(ColumnRole.NEXT_STATE) != 1:
            raise FormatError("table needs exactly one current-state and one next-state column")
        if not self.rows:
            raise FormatError("table has no rows")
        for i, row in enumerate(self.rows, start=1):
            if len(row) != len(self.columns):
                raise FormatError(f"row {i}: expected {len(self.columns)} cells, got {len(row)}")

    def to_markdown(self) -> str:
        header = "| " + " | ".join(c.name for c in self.columns) + " |"
        sep = "|" + "|".join("---" for _ in self.columns) + "|"
        lines = [header, sep]
        lines.extend("| " + " | ".join(row) + " |" for row in self.rows)
        return "\n".join(lines)


_SEPARATOR_RE = re.compile(r"^[\s|:\-]+$")
_CONTROL_INPUT_NAMES = frozenset({"clk", "clock", "reset", "rst", "rst_n", "en", "enable", "load"})


def _split_pipe_row(line: str) -> list[str]:
    cells = [c.strip() for c in line.split("|")]
    if cells and cells[0] == "":
        cells = cells[1:]
    if cells and cells[-1] == "":
        cells = cells[:-1]
    return cells


def find_pipe_table(text: str) -> tuple[list[str], list[list[str]]] | None:
    """First contiguous block of pipe-delimited lines: (header, data rows)."""
    lines = text.splitlines()
    block: list[str] = []
    for line in lines:
        if "|" in line:
            block.append(line)
        elif block:
            break
    rows = [_split_pipe_row(line) for line in block if not _SEPARATOR_RE.match(line)]
    rows = [r for r in rows if r]
    if len(rows) < 2:
        return None
    return rows[0], rows[1:]


def _base_name(name: str) -> str:
    return name.split("[", 1)[0].strip()


def _infer_role(name: str, input_ports: set[str], output_ports: set[str]) -> ColumnRole:
    low = name.lower()
    if "current" in low:
        return ColumnRole.CURRENT_STATE
    if "next" in low:
        return ColumnRole.NEXT_STATE
    base = _base_name(name)
    if base in input_ports:
        return ColumnRole.INPUT
    if base in output_ports:
        return ColumnRole.OUTPUT
    if base.lower() in _CONTROL_INPUT_NAMES or base.lower().startswith("in"):
        return ColumnRole.INPUT
    if output_ports and base not in output_ports:
        raise FormatError(f"cannot resolve role of column {name!r}")
    return ColumnRole.OUTPUT


def parse_stt(
    text: str,
    input_ports: set[str] | frozenset[str] = frozenset(),
    output_ports: set[str] | frozenset[str] = frozenset(),
) -> StateTransitionTable:
    found = find_pipe_table(text)
    if found is None:
        raise FormatError("reply contains no pipe-delimited table")
    header, data = found
    width = len(header)
    for i, row in enumerate(data, start=1):
        if len(row) != width:
            raise FormatError(f"row {i}: expected {width} cells, got {len(row)}")
    columns = [Column(name, _infer_role(name, set(input_ports), set(output_ports))) for name in header]
    return StateTransitionTable(columns, [tuple(r) for r in data])


def request_stt(
    info_list: InformationList,
    backend: Backend,
    *,
    input_ports: set[str] | frozenset[str] = frozenset(),
    output_ports: set[str] | frozenset[str] = frozenset(),
    prompts: PromptSet | None = None,
    settings: GenSettings | None = None,
) -> StateTransitionTable:
    if prompts is None:
        prompts = PromptSet()
    settings = settings or GenSettings()
    prompt = render(prompts["stt"], {"info_list": info_list.as_text()})
    reply = backend.complete(settings.request(prompt))
    return parse_stt(reply, input_ports, output_ports)


# ---------------------------------------------------------------------------
# Always blocks


class BlockRole(Enum):
    STATE_REGISTER = "State Register"
    NEXT_STATE_LOGIC = "Next State Logic"
    OUTPUT_LOGIC = "Output Logic"


BLOCK_ORDER = (BlockRole.STATE_REGISTER, BlockRole.NEXT_STATE_LOGIC, BlockRole.OUTPUT_LOGIC)


@dataclass
class AlwaysBlockPlan:
    role: BlockRole
    description: str
    code: str

    def __post_init__(self) -> None:
        if _count_always(self.code) != 1:
            raise FormatError(f"{self.role.value} block must contain exactly one always construct")


def _count_always(code: str) -> int:
    return len(re.findall(r"\balways\b", mask_comments_and_strings(code)))


def _prior_text(prior_blocks: list[AlwaysBlockPlan]) -> str:
    if not prior_blocks:
        return "(none yet)"
    parts = []
    for block in prior_blocks:
        parts.append(f"{block.role.value}:\n{block.description}\n{block.code}")
    return "\n\n".join(parts)


def extract_always_snippet(reply: str) -> str:
    """The single always construct in a reply; anything else is a format error."""
    snippets = [s for s in extract_code_blocks(reply) if _count_always(s) > 0]
    if len(snippets) != 1:
        raise FormatError(f"expected exactly one always snippet, found {len(snippets)}")
    if _count_always(snippets[0]) != 1:
        raise FormatError("snippet contains more than one always construct")
    return snippets[0].strip("\n")


def generate_block(
    role: BlockRole,
    stt: StateTransitionTable,
    info_list: InformationList,
    prior_blocks: list[AlwaysBlockPlan],
    backend: Backend,
    *,
    module_header: str = "",
    prompts: PromptSet | None = None,
    settings: GenSettings | None = None,
) -> AlwaysBlockPlan:
    """Two backend calls: block description first, then its code."""
    index = BLOCK_ORDER.index(role)
    if tuple(b.role for b in prior_blocks) != BLOCK_ORDER[:index]:
        raise ContractViolation(f"{role.value} requires prior blocks {[r.value for r in BLOCK_ORDER[:index]]}")
    if prompts is None:
        prompts = PromptSet()
    settings = settings or GenSettings()

    stt_text = stt.to_markdown()
    prior = _prior_text(prior_blocks)
    desc_prompt = render(
        prompts["block_desc"],
        {"role": role.value, "header": module_header, "info_list": info_list.as_text(),
         "stt": stt_text, "prior": prior},
    )
    description = backend.complete(settings.request(desc_prompt)).strip()

    code_prompt = render(
        prompts["block_code"],
        {"role": role.value, "description": description, "header": module_header,
         "stt": stt_text, "prior": prior},
    )
    reply = backend.complete(settings.request(code_prompt))
    code = extract_always_snippet(reply)
    return AlwaysBlockPlan(role, description, code)


def merge_blocks(
    plans: list[AlwaysBlockPlan],
    module_header: str,
    backend: Backend,
    *,
    prompts: PromptSet | None = None,
    settings: GenSettings | None = None,
) -> str:
    """Backend-assembled module, or deterministic local assembly on failure."""
    roles = sorted(p.role.value for p in plans)
    if roles != sorted(r.value for r in BLOCK_ORDER):
        raise ContractViolation(f"merge needs exactly the roles {[r.value for r in BLOCK_ORDER]}")
    ordered = sorted(plans, key=lambda p: BLOCK_ORDER.index(p.role))
    if any(not p.code.strip() for p in ordered):
        raise FormatError("cannot merge: a block has empty code")
    if prompts is None:
        prompts = PromptSet()
    settings = settings or GenSettings()

    blocks_text = "\n\n".join(f"// {p.role.value}\n{p.code}" for p in ordered)
    prompt = render(prompts["merge"], {"header": module_header, "blocks": blocks_text})
    reply = backend.complete(settings.request(prompt))
    candidate = _module_candidate(reply)
    if candidate is not None and contains_snippets(candidate, [p.code for p in ordered]):
        return candidate.strip("\n") + "\n"
    return assemble_module(module_header, [p.code for p in ordered])


def _module_candidate(reply: str) -> str | None:
    """First reply region that looks like a complete module."""
    for snippet in extract_code_blocks(reply) or [reply]:
        mask = mask_comments_and_strings(snippet)
        opens = len(re.findall(r"\bmodule\b", mask))
        closes = len(re.findall(r"\bendmodule\b", mask))
        if opens >= 1 and opens == closes:
            return snippet
    return None
