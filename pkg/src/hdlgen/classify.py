"""Circuit-type classification.

The primary strategy asks the backend for probe Verilog and deduces the type
from the code's structure, which is robust against specs whose wording hides
the type (a combinational sub-function described inside a sequential story).
A direct one-word question is the fallback when the probe yields nothing
recognizable. Classification runs once per task and is cached.
"""

from __future__ import annotations

import re
from typing import MutableMapping

from .backend import Backend, GenSettings, render
from .core import CircuitType, Task
from .errors import ClassificationError
from .prompts import PromptSet
from .verilog import extract_code_blocks, mask_comments_and_strings

_EDGE_RE = re.compile(r"@\s*\(\s*(?:posedge|negedge)\b")

_default_prompts: PromptSet | None = None


def _prompts() -> PromptSet:
    global _default_prompts
    if _default_prompts is None:
        _default_prompts = PromptSet()
    return _default_prompts


def deduce_type_from_code(verilog_src: str) -> CircuitType | None:
    """Deduce the circuit type from (possibly imperfect) Verilog text.

    Edge-sensitive triggers mean sequential, even when continuous assignments
    are mixed in; purely level-sensitive always blocks or assigns mean
    combinational; None when nothing recognizable appears.
    """
    mask = mask_comments_and_strings(verilog_src)
    if _EDGE_RE.search(mask):
        return CircuitType.SEQUENTIAL
    if re.search(r"\balways\b", mask) or re.search(r"\bassign\b", mask):
        return CircuitType.COMBINATIONAL
    return None


def _parse_direct_answer(reply: str) -> CircuitType | None:
    match = re.search(r"\b(combinational|sequential)\b", reply, re.IGNORECASE)
    if match is None:
        return None
    return CircuitType.COMBINATIONAL if match.group(1).lower() == "combinational" else CircuitType.SEQUENTIAL


def classify_task(
    task: Task,
    backend: Backend,
    *,
    prompts: PromptSet | None = None,
    settings: GenSettings | None = None,
    cache: MutableMapping[str, CircuitType] | None = None,
) -> CircuitType:
    """Classify via probe code, falling back to the direct question."""
    if cache is not None and task.id in cache:
        return cache[task.id]
    prompts = prompts or _prompts()
    settings = settings or GenSettings()

    probe = render(prompts["probe"], {"spec": task.spec_text, "header": task.module_header})
    reply = backend.complete(settings.request(probe))
    snippets = extract_code_blocks(reply)
    deduced = deduce_type_from_code("\n".join(snippets) if snippets else reply)

    if deduced is None:
        question = render(prompts["classify_direct"], {"spec": task.spec_text})
        answer = backend.complete(settings.request(question))
        deduced = _parse_direct_answer(answer)

    if deduced is None:
        raise ClassificationError(f"task {task.id}: probe code and direct answer both unusable")
    if cache is not None:
        cache[task.id] = deduced
    return deduced
