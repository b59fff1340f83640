"""General procedure: plan components, code them one at a time, integrate.

Used for tasks that resist the type-specific formats (wide arithmetic, mixed
combinational/sequential designs). Components are code regions inside one
module, not sub-module instances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .backend import Backend, GenSettings, render
from .core import InformationList, Task
from .errors import ContractViolation, FormatError
from .extraction import parse_numbered_list
from .prompts import PromptSet
from .verilog import assemble_module, contains_snippets, extract_code_blocks

from .sequ import _module_candidate


@dataclass
class Component:
    name: str
    description: str
    code: str = ""


@dataclass
class ComponentPlan:
    components: list[Component] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.components:
            raise ContractViolation("a plan needs at least one component")
        names = [c.name for c in self.components]
        if len(set(names)) != len(names):
            raise ContractViolation(f"component names must be unique: {names}")

    def listing(self) -> str:
        return "\n".join(
            f"{i}. {c.name}: {c.description}" for i, c in enumerate(self.components, start=1)
        )


def _parse_component_item(item: str, index: int) -> Component:
    head, sep, tail = item.partition(":")
    if sep and head.strip() and "\n" not in head:
        return Component(head.strip(), tail.strip())
    return Component(f"component {index}", item.strip())


def plan_components(
    info_list: InformationList,
    task: Task,
    backend: Backend,
    *,
    prompts: PromptSet | None = None,
    settings: GenSettings | None = None,
) -> ComponentPlan:
    if prompts is None:
        prompts = PromptSet()
    settings = settings or GenSettings()
    prompt = render(
        prompts["components"],
        {"spec": task.spec_text, "info_list": info_list.as_text(), "header": task.module_header},
    )
    reply = backend.complete(settings.request(prompt))
    items = parse_numbered_list(reply)
    if not items:
        raise FormatError("reply contains no numbered components")
    components = [_parse_component_item(item, i) for i, item in enumerate(items, start=1)]
    # models occasionally repeat a name; suffix duplicates rather than fail
    seen: dict[str, int] = {}
    for c in components:
        seen[c.name] = seen.get(c.name, 0) + 1
        if seen[c.name] > 1:
            c.name = f"{c.name} ({seen[c.name]})"
    return ComponentPlan(components)


def generate_component(
    plan: ComponentPlan,
    index: int,
    backend: Backend,
    *,
    module_header: str = "",
    prompts: PromptSet | None = None,
    settings: GenSettings | None = None,
) -> ComponentPlan:
    """Fill in the code of component ``index`` (earlier ones must be coded)."""
    if not 0 <= index < len(plan.components):
        raise ContractViolation(f"component index {index} out of range")
    if any(not c.code for c in plan.components[:index]):
        raise ContractViolation("components must be generated in order")
    if prompts is None:
        prompts = PromptSet()
    settings = settings or GenSettings()

    target = plan.components[index]
    prior = "\n\n".join(f"// {c.name}\n{c.code}" for c in plan.components[:index]) or "(none yet)"
    prompt = render(
        prompts["component_code"],
        {
            "index": str(index + 1),
            "name": target.name,
            "components": plan.listing(),
            "description": target.description,
            "prior": prior,
            "header": module_header,
        },
    )
    reply = backend.complete(settings.request(prompt))
    snippets = extract_code_blocks(reply)
    if not snippets:
        raise FormatError(f"no code region in reply for component {target.name!r}")
    target.code = snippets[0].strip("\n")
    return plan


def integrate(
    plan: ComponentPlan,
    module_header: str,
    backend: Backend,
    *,
    prompts: PromptSet | None = None,
    settings: GenSettings | None = None,
) -> str:
    """Backend-assembled module, or deterministic local assembly on failure."""
    if any(not c.code for c in plan.components):
        raise ContractViolation("all components must be coded before integration")
    if prompts is None:
        prompts = PromptSet()
    settings = settings or GenSettings()

    components_text = "\n\n".join(f"// {c.name}\n{c.code}" for c in plan.components)
    prompt = render(prompts["integrate"], {"header": module_header, "components": components_text})
    reply = backend.complete(settings.request(prompt))
    candidate = _module_candidate(reply)
    codes = [c.code for c in plan.components]
    if candidate is not None and contains_snippets(candidate, codes):
        return candidate.strip("\n") + "\n"
    return assemble_module(module_header, codes)
