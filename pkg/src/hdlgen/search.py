"""Budget-search orchestration.

One task gets a fixed number of testbench executions. Iteration 1 spends its
share on fresh information lists driven through the type-specific procedure;
later iterations re-use the best-scored lists through the general procedure,
beam-search style. Two special modes reroute the remaining budget:

* short-cut: a sample nearly passed (p above the threshold), so everything
  left goes to that procedure and that information list;
* fail-safe: too many format errors, so everything left goes to the general
  procedure with a freshly extracted list per sample.

Format errors consume no testbench budget; the failed attempt's intermediate
outputs are discarded and the procedure runs again from the top.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, MutableMapping

from . import behav, comb, sequ
from .backend import Backend, GenSettings
from .classify import classify_task
from .core import (
    BudgetConfig,
    CircuitType,
    CodeSample,
    ExecutedSample,
    InformationList,
    Mode,
    OutcomeStatus,
    Procedure,
    SearchState,
    Task,
    TestOutcome,
    update_score,
)
from .errors import ClassificationError, ContractViolation, FormatError, PortMismatch, UnknownOutput
from .extraction import extract_info_list
from .prompts import PromptSet
from .sim import Simulator
from .verilog import parse_ports

# Bounds retry loops in short-cut/fail-safe, where no format-error threshold
# applies; a breached slot records a failed sample so the run still finishes.
MAX_ATTEMPTS_PER_SLOT = 50


def select_top(cluster: list[InformationList], c: int) -> list[InformationList]:
    """Highest-scored lists first; ties go to earlier iterations, then ids."""
    if c < 1:
        raise ContractViolation("top-candidate count must be >= 1")
    ranked = sorted(cluster, key=lambda lst: (-lst.score, lst.origin_iteration, lst.id))
    return ranked[: min(c, len(ranked))]


def decide_mode(state: SearchState, latest_p: Fraction | None, config: BudgetConfig) -> Mode:
    """Next mode after a simulation or a format error. Modes are sticky."""
    if state.mode in (Mode.FAIL_SAFE, Mode.SHORT_CUT, Mode.DONE):
        return state.mode
    if state.format_errors > config.max_format_errors:
        return Mode.FAIL_SAFE
    if latest_p is not None and Fraction(latest_p) > config.shortcut_threshold:
        return Mode.SHORT_CUT
    return state.mode


@dataclass
class _Env:
    backend: Backend
    simulator: Simulator
    prompts: PromptSet
    settings: GenSettings
    clock: Callable[[], float]


def _generate_comb(task: Task, info_list: InformationList, env: _Env) -> str:
    table = comb.request_truth_table(info_list, env.backend, prompts=env.prompts, settings=env.settings)
    try:
        exprs = comb.minimize_all(table)
        return comb.emit_verilog(task.module_header, exprs)
    except (PortMismatch, UnknownOutput) as exc:
        # table names that do not line up with the ports are a capture failure
        raise FormatError(str(exc)) from exc


def _generate_sequ(task: Task, info_list: InformationList, env: _Env) -> str:
    ports = parse_ports(task.module_header)
    in_names = {p.name for p in ports if p.direction in ("input", "inout")}
    out_names = {p.name for p in ports if p.direction == "output"}
    stt = sequ.request_stt(
        info_list, env.backend, input_ports=in_names, output_ports=out_names,
        prompts=env.prompts, settings=env.settings,
    )
    plans: list[sequ.AlwaysBlockPlan] = []
    for role in sequ.BLOCK_ORDER:
        plans.append(
            sequ.generate_block(
                role, stt, info_list, plans, env.backend,
                module_header=task.module_header, prompts=env.prompts, settings=env.settings,
            )
        )
    return sequ.merge_blocks(plans, task.module_header, env.backend,
                             prompts=env.prompts, settings=env.settings)


def _generate_behav(task: Task, info_list: InformationList, env: _Env) -> str:
    plan = behav.plan_components(info_list, task, env.backend,
                                 prompts=env.prompts, settings=env.settings)
    for i in range(len(plan.components)):
        plan = behav.generate_component(plan, i, env.backend, module_header=task.module_header,
                                        prompts=env.prompts, settings=env.settings)
    return behav.integrate(plan, task.module_header, env.backend,
                           prompts=env.prompts, settings=env.settings)


def _generate(procedure: Procedure, task: Task, info_list: InformationList, env: _Env) -> str:
    if procedure is Procedure.COMB:
        return _generate_comb(task, info_list, env)
    if procedure is Procedure.SEQU:
        return _generate_sequ(task, info_list, env)
    if procedure is Procedure.BEHAV:
        return _generate_behav(task, info_list, env)
    raise ContractViolation(f"no generator for procedure {procedure}")


def _type_procedure(circuit_type: CircuitType) -> Procedure:
    return Procedure.COMB if circuit_type is CircuitType.COMBINATIONAL else Procedure.SEQU


def run_task(
    task: Task,
    config: BudgetConfig,
    backend: Backend,
    simulator: Simulator,
    *,
    stop_on_pass: bool = False,
    prompts: PromptSet | None = None,
    settings: GenSettings | None = None,
    classification_cache: MutableMapping[str, CircuitType] | None = None,
    clock: Callable[[], float] = time.monotonic,
) -> SearchState:
    """Drive one task through the full budget-search pipeline."""
    env = _Env(backend, simulator, prompts or PromptSet(), settings or GenSettings(), clock)
    state = SearchState(task_id=task.id, remaining_budget=config.total_budget)

    try:
        circuit_type = classify_task(task, backend, prompts=env.prompts, settings=env.settings,
                                     cache=classification_cache)
    except ClassificationError:
        # no usable classification: escalate straight to the general procedure
        circuit_type = CircuitType.GENERAL
        state.mode = Mode.FAIL_SAFE
    extraction_type = (
        circuit_type if circuit_type is not CircuitType.GENERAL else CircuitType.SEQUENTIAL
    )

    samples_in_iteration = 0
    selected: list[InformationList] = []
    pinned_procedure: Procedure | None = None
    pinned_list: InformationList | None = None

    while state.remaining_budget > 0 and not (stop_on_pass and state.solved):
        if state.mode is Mode.NORMAL:
            while samples_in_iteration >= config.samples_per_iteration[state.iteration - 1]:
                state.iteration += 1
                samples_in_iteration = 0
                if state.iteration > config.max_iterations:
                    raise ContractViolation("budget outlived the iteration schedule")
                selected = select_top(state.cluster, config.top_candidates[state.iteration - 1])
                if not selected:
                    # nothing scored survived iteration 1; regenerate per sample
                    state.mode = Mode.FAIL_SAFE
                    break

        slot_mode = state.mode
        procedure: Procedure | None = None
        target_list: InformationList | None = None
        code: str | None = None
        attempts = 0
        while True:
            attempts += 1
            if attempts > MAX_ATTEMPTS_PER_SLOT:
                code = None
                break
            slot_mode = state.mode
            try:
                if slot_mode is Mode.FAIL_SAFE:
                    # fresh list per execution; deliberately kept out of the cluster
                    target_list = extract_info_list(
                        task, extraction_type, backend, iteration=state.iteration,
                        prompts=env.prompts, settings=env.settings,
                    )
                    procedure = Procedure.BEHAV
                    code = _generate_behav(task, target_list, env)
                elif slot_mode is Mode.SHORT_CUT:
                    procedure = pinned_procedure
                    target_list = pinned_list
                    code = _generate(procedure, task, target_list, env)
                elif state.iteration == 1:
                    fresh = extract_info_list(
                        task, circuit_type, backend, iteration=1,
                        prompts=env.prompts, settings=env.settings,
                    )
                    target_list = state.cluster_get(fresh.id) or fresh
                    procedure = _type_procedure(circuit_type)
                    code = _generate(procedure, task, target_list, env)
                else:
                    target_list = selected[samples_in_iteration % len(selected)]
                    procedure = Procedure.BEHAV
                    code = _generate_behav(task, target_list, env)
            except FormatError:
                state.format_errors += 1
                state.mode = decide_mode(state, None, config)
                continue
            break

        started = env.clock()
        if code is None:
            # retry cap breached: consume the slot with an honest failure
            sample = CodeSample("", procedure or Procedure.BEHAV, None, state.iteration)
            outcome = TestOutcome.compile_error()
            target_list = None
        else:
            sample = CodeSample(code, procedure, target_list.id, state.iteration)
            outcome = simulator.run(sample, task)
        wall_ms = (env.clock() - started) * 1000.0

        p = outcome.pass_rate
        if target_list is not None:
            update_score(target_list, p)
            if slot_mode is Mode.NORMAL and state.iteration == 1:
                state.cluster_upsert(target_list)
        state.executed_samples.append(ExecutedSample(sample, outcome, slot_mode, wall_ms, target_list))
        state.remaining_budget -= 1
        if outcome.status is OutcomeStatus.PASS:
            state.solved = True
        if slot_mode is Mode.NORMAL:
            samples_in_iteration += 1

        previous = state.mode
        state.mode = decide_mode(state, p, config)
        if state.mode is Mode.SHORT_CUT and previous is not Mode.SHORT_CUT:
            pinned_procedure = procedure
            pinned_list = target_list

    state.mode = Mode.DONE
    return state


def run_baseline(
    task: Task,
    budget: int,
    backend: Backend,
    simulator: Simulator,
    *,
    max_format_errors: int = 10,
    prompts: PromptSet | None = None,
    settings: GenSettings | None = None,
    clock: Callable[[], float] = time.monotonic,
) -> SearchState:
    """Direct spec-to-code generation, one backend call per budget slot."""
    from .backend import render  # local import keeps module surface tidy

    env = _Env(backend, simulator, prompts or PromptSet(), settings or GenSettings(), clock)
    state = SearchState(task_id=task.id, remaining_budget=budget)
    prompt = render(env.prompts["baseline"], {"spec": task.spec_text, "header": task.module_header})

    while state.remaining_budget > 0:
        code: str | None = None
        while state.format_errors <= max_format_errors:
            reply = backend.complete(env.settings.request(prompt))
            candidate = sequ._module_candidate(reply)
            if candidate is not None:
                code = candidate.strip("\n") + "\n"
                break
            state.format_errors += 1

        started = env.clock()
        if code is None:
            sample = CodeSample("", Procedure.BASELINE, None, 1)
            outcome = TestOutcome.compile_error()
        else:
            sample = CodeSample(code, Procedure.BASELINE, None, 1)
            outcome = simulator.run(sample, task)
        wall_ms = (env.clock() - started) * 1000.0
        state.executed_samples.append(ExecutedSample(sample, outcome, Mode.NORMAL, wall_ms, None))
        state.remaining_budget -= 1
        if outcome.status is OutcomeStatus.PASS:
            state.solved = True

    state.mode = Mode.DONE
    return state
