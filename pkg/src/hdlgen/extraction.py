"""Information-list extraction: specification text to numbered statements."""

from __future__ import annotations

import re

from .backend import Backend, GenSettings, render
from .core import CircuitType, InformationList, Task
from .errors import ContractViolation, FormatError
from .prompts import PromptSet

_MARKER_RE = re.compile(r"^\s*\d+[.)]\s*(.*)$")


def parse_numbered_list(text: str) -> list[str]:
    """Split on line-leading ``N.`` / ``N)`` markers.

    Non-marker lines between two markers attach to the item above them;
    anything before the first marker or after the last is surrounding prose
    and is dropped.
    """
    lines = text.splitlines()
    marker_idx = [i for i, line in enumerate(lines) if _MARKER_RE.match(line)]
    items: list[str] = []
    for pos, i in enumerate(marker_idx):
        content = _MARKER_RE.match(lines[i]).group(1)
        if pos + 1 < len(marker_idx):
            continuation = lines[i + 1 : marker_idx[pos + 1]]
            content = "\n".join([content, *continuation])
        content = content.strip()
        if content:
            items.append(content)
    return items


def extract_info_list(
    task: Task,
    circuit_type: CircuitType,
    backend: Backend,
    *,
    iteration: int = 1,
    prompts: PromptSet | None = None,
    settings: GenSettings | None = None,
) -> InformationList:
    """Ask the backend for the input/output relationships and parse them."""
    if circuit_type not in (CircuitType.COMBINATIONAL, CircuitType.SEQUENTIAL):
        raise ContractViolation("extraction needs a combinational or sequential classification")
    if prompts is None:
        prompts = PromptSet()
    settings = settings or GenSettings()

    template = "info_comb" if circuit_type is CircuitType.COMBINATIONAL else "info_sequ"
    prompt = render(prompts[template], {"spec": task.spec_text})
    reply = backend.complete(settings.request(prompt))
    items = parse_numbered_list(reply)
    if not items:
        raise FormatError(f"task {task.id}: reply contains no numbered items")
    return InformationList(items=items, origin_iteration=iteration)
