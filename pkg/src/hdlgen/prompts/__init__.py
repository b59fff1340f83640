"""Prompt templates.

Defaults ship as editable text files under ``templates/``; a directory of
same-named ``.txt`` files can override any of them per run. Placeholders use
``{{name}}`` syntax (see ``backend.render``).
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from ..backend import PromptTemplate

TEMPLATE_NAMES = (
    "probe",
    "classify_direct",
    "info_comb",
    "info_sequ",
    "truth_table",
    "stt",
    "block_desc",
    "block_code",
    "merge",
    "components",
    "component_code",
    "integrate",
    "baseline",
)


def load_template(name: str, prompt_dir: str | Path | None = None) -> PromptTemplate:
    """Load one template, preferring an override directory when given."""
    if name not in TEMPLATE_NAMES:
        raise KeyError(f"unknown template {name!r}")
    if prompt_dir is not None:
        override = Path(prompt_dir) / f"{name}.txt"
        if override.is_file():
            return PromptTemplate(name, override.read_text(encoding="utf-8"))
    body = (resources.files(__package__) / "templates" / f"{name}.txt").read_text(encoding="utf-8")
    return PromptTemplate(name, body)


class PromptSet:
    """All templates for a run, resolved once against an override directory."""

    def __init__(self, prompt_dir: str | Path | None = None):
        self._templates = {name: load_template(name, prompt_dir) for name in TEMPLATE_NAMES}

    def __getitem__(self, name: str) -> PromptTemplate:
        return self._templates[name]
