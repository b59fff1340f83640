"""Command-line entry point.

Subcommands:

* ``run``         -- drive the pipeline (or the direct baseline) over a dataset
                     and write the run report.
* ``filter-hard`` -- list tasks a baseline report shows as unsolved in 10 runs.
* ``minimize``    -- minimize a truth-table JSON file to SOP plus Verilog.
* ``passk``       -- aggregate pass@k metrics and the error-rate histogram
                     from a run report.

Exit codes: 0 success, 1 runtime failure, 2 input/config error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .backend import Backend, GenSettings, RemoteBackend, RemoteConfig, load_script
from .comb import TruthTable, evaluate_sop, emit_verilog, minimize_all, sop_text
from .core import BudgetConfig, OutcomeStatus, SearchState, Task
from .errors import ContractViolation, FormatError, HdlGenError, InfrastructureError
from .metrics import aggregate_pass_at_k, best_error_rate, error_rate_histogram, pass_at_k
from .prompts import PromptSet
from .search import run_baseline, run_task
from .sim import DEFAULT_PROTOCOL_PATTERNS, IcarusSimulator, MockSimulator, SimLimits, Simulator

REPORT_SCHEMA_VERSION = 1
DEFAULT_KS = (1, 5, 10)


class ConfigError(HdlGenError):
    """Bad configuration or dataset input (exit code 2)."""


# ---------------------------------------------------------------------------
# Configuration


def _take(section: dict, defaults: dict, where: str) -> dict:
    unknown = set(section) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown {where} config keys: {', '.join(sorted(unknown))}")
    merged = dict(defaults)
    merged.update(section)
    return merged


@dataclass
class RunConfig:
    backend_kind: str = "remote"
    base_url: str = "https://api.openai.com/v1"
    model: str = "gpt-4-0613"
    api_key_env: str = "OPENAI_API_KEY"
    temperature: float = 0.5
    max_context: int = 4096
    retries: int = 3
    rate_limit: float | None = None
    script: str | None = None

    samples_per_iteration: list[int] = field(default_factory=lambda: [7, 2, 1])
    top_candidates: list[int] = field(default_factory=lambda: [1, 2, 1])
    shortcut_threshold: Fraction = Fraction(19, 20)
    max_format_errors: int = 10
    stop_on_pass: bool = False

    sim_kind: str = "icarus"
    sim_path: str = "iverilog"
    sim_runner: str = "vvp"
    timeout_s: float = 60.0
    protocol_patterns: tuple[str, ...] = DEFAULT_PROTOCOL_PATTERNS
    extra_flags: tuple[str, ...] = ()
    behavior_table: dict[str, tuple[int, int]] = field(default_factory=dict)

    workers: int = 1
    seed: int = 0
    deterministic_clock: bool = False
    prompt_dir: str | None = None
    scratch_dir: str = "hdlgen-scratch"

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        unknown = set(raw) - {"backend", "search", "sim", "run"}
        if unknown:
            raise ConfigError(f"unknown config sections: {', '.join(sorted(unknown))}")
        cfg = cls()
        b = _take(raw.get("backend", {}), {
            "kind": cfg.backend_kind, "base_url": cfg.base_url, "model": cfg.model,
            "api_key_env": cfg.api_key_env, "temperature": cfg.temperature,
            "max_context": cfg.max_context, "retries": cfg.retries,
            "rate_limit": cfg.rate_limit, "script": cfg.script,
        }, "backend")
        s = _take(raw.get("search", {}), {
            "N_s": cfg.samples_per_iteration, "C_s": cfg.top_candidates,
            "W": float(cfg.shortcut_threshold), "E_f": cfg.max_format_errors,
            "stop_on_pass": cfg.stop_on_pass,
        }, "search")
        m = _take(raw.get("sim", {}), {
            "kind": cfg.sim_kind, "path": cfg.sim_path, "runner": cfg.sim_runner,
            "timeout_s": cfg.timeout_s, "protocol_patterns": list(cfg.protocol_patterns),
            "extra_flags": list(cfg.extra_flags), "behavior_table": cfg.behavior_table,
        }, "sim")
        r = _take(raw.get("run", {}), {
            "workers": cfg.workers, "seed": cfg.seed,
            "deterministic_clock": cfg.deterministic_clock,
            "prompt_dir": cfg.prompt_dir, "scratch_dir": cfg.scratch_dir,
        }, "run")
        if b["kind"] not in ("remote", "scripted"):
            raise ConfigError(f"backend.kind must be remote or scripted, got {b['kind']!r}")
        if m["kind"] not in ("icarus", "mock"):
            raise ConfigError(f"sim.kind must be icarus or mock, got {m['kind']!r}")
        table = {}
        for key, value in dict(m["behavior_table"]).items():
            if (not isinstance(value, (list, tuple)) or len(value) != 2
                    or not all(isinstance(v, int) for v in value)):
                raise ConfigError(f"behavior_table[{key!r}] must be an [m, n] pair")
            table[key] = (value[0], value[1])
        return cls(
            backend_kind=b["kind"], base_url=b["base_url"], model=b["model"],
            api_key_env=b["api_key_env"], temperature=float(b["temperature"]),
            max_context=int(b["max_context"]), retries=int(b["retries"]),
            rate_limit=b["rate_limit"], script=b["script"],
            samples_per_iteration=[int(n) for n in s["N_s"]],
            top_candidates=[int(c) for c in s["C_s"]],
            shortcut_threshold=Fraction(str(s["W"])),
            max_format_errors=int(s["E_f"]), stop_on_pass=bool(s["stop_on_pass"]),
            sim_kind=m["kind"], sim_path=m["path"], sim_runner=m["runner"],
            timeout_s=float(m["timeout_s"]),
            protocol_patterns=tuple(m["protocol_patterns"]),
            extra_flags=tuple(m["extra_flags"]), behavior_table=table,
            workers=int(r["workers"]), seed=int(r["seed"]),
            deterministic_clock=bool(r["deterministic_clock"]),
            prompt_dir=r["prompt_dir"], scratch_dir=r["scratch_dir"],
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
        return cls.from_dict(raw)

    def budget(self) -> BudgetConfig:
        return BudgetConfig(
            samples_per_iteration=list(self.samples_per_iteration),
            top_candidates=list(self.top_candidates),
            shortcut_threshold=self.shortcut_threshold,
            max_format_errors=self.max_format_errors,
        )

    def gen_settings(self) -> GenSettings:
        return GenSettings(temperature=self.temperature, max_context_tokens=self.max_context)

    def build_backend(self) -> Backend:
        if self.backend_kind == "scripted":
            if not self.script:
                raise ConfigError("backend.kind=scripted needs backend.script")
            return load_script(self.script)
        return RemoteBackend(RemoteConfig(
            base_url=self.base_url, model=self.model, api_key_env=self.api_key_env,
            retries=self.retries, rate_limit_per_min=self.rate_limit,
        ))

    def build_simulator(self, out_dir: Path) -> Simulator:
        if self.sim_kind == "mock":
            return MockSimulator(self.behavior_table)
        return IcarusSimulator(
            compiler=self.sim_path, runner=self.sim_runner,
            extra_flags=self.extra_flags, limits=SimLimits(self.timeout_s),
            scratch_root=Path(self.scratch_dir) if Path(self.scratch_dir).is_absolute()
            else out_dir / self.scratch_dir,
            protocol_patterns=self.protocol_patterns,
        )


# ---------------------------------------------------------------------------
# Dataset ingestion


def _load_task_dir(task_dir: Path) -> Task:
    def read(name: str) -> str:
        f = task_dir / name
        if not f.is_file():
            raise ConfigError(f"task {task_dir.name}: missing {name}")
        return f.read_text(encoding="utf-8")

    split_file = task_dir / "split.txt"
    split = split_file.read_text(encoding="utf-8").strip() if split_file.is_file() else "human"
    return Task(
        id=task_dir.name,
        spec_text=read("spec.txt"),
        testbench_src=read("testbench.v"),
        module_header=read("header.v"),
        dataset_split=split,
    )


def _load_jsonl(path: Path) -> list[Task]:
    tasks: list[Task] = []
    seen: set[str] = set()
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad JSON: {exc}") from exc
        for key in ("task_id", "prompt", "testbench", "module_header"):
            if key not in record:
                raise ConfigError(f"{path}:{lineno}: missing field {key!r}")
        if record["task_id"] in seen:
            raise ConfigError(f"{path}:{lineno}: duplicate task id {record['task_id']!r}")
        seen.add(record["task_id"])
        tasks.append(Task(
            id=record["task_id"], spec_text=record["prompt"],
            testbench_src=record["testbench"], module_header=record["module_header"],
            dataset_split=record.get("split", "human"),
        ))
    return tasks


def load_dataset(path: str | Path) -> list[Task]:
    """Directory of per-task folders, or a JSONL file of task records."""
    p = Path(path)
    if p.is_dir():
        dirs = sorted(d for d in p.iterdir() if d.is_dir())
        if not dirs:
            raise ConfigError(f"dataset directory {p} has no task subdirectories")
        return [_load_task_dir(d) for d in dirs]
    if p.is_file():
        tasks = _load_jsonl(p)
        if not tasks:
            raise ConfigError(f"dataset file {p} holds no tasks")
        return sorted(tasks, key=lambda t: t.id)
    raise ConfigError(f"dataset path {p} does not exist")


# ---------------------------------------------------------------------------
# Reports


def _task_record(state: SearchState, full_budget: int) -> dict:
    n = len(state.executed_samples)
    c = sum(1 for e in state.executed_samples if e.outcome.status is OutcomeStatus.PASS)
    best = max((e.outcome.pass_rate for e in state.executed_samples), default=Fraction(0))
    samples = [
        {
            "task_id": state.task_id,
            "iteration": e.sample.iteration,
            "procedure": e.sample.producing_procedure.value,
            "info_list_id": e.sample.info_list_id,
            "m": e.outcome.passed_samples,
            "n": e.outcome.total_samples,
            "p": float(e.outcome.pass_rate),
            "status": e.outcome.status.value,
            "mode": e.mode.value,
            "wall_ms": round(e.wall_ms, 3),
        }
        for e in state.executed_samples
    ]
    return {
        "task_id": state.task_id,
        "n": n,
        "c": c,
        "solved": state.solved,
        "format_errors": state.format_errors,
        "best_pass_rate": [best.numerator, best.denominator],
        "reduced_n": n < full_budget,
        "samples": samples,
    }


def build_report(states: list[SearchState], full_budget: int, ks=DEFAULT_KS) -> dict:
    tasks = [_task_record(s, full_budget) for s in states]
    aggregate: dict = {"pass_at": {}, "skipped_k": []}
    for k in ks:
        if all(t["n"] >= k for t in tasks):
            value = aggregate_pass_at_k([(t["n"], t["c"]) for t in tasks], k)
            aggregate["pass_at"][str(k)] = float(value)
        else:
            aggregate["skipped_k"].append(k)
    rates = [
        best_error_rate([Fraction(*t["best_pass_rate"])]) for t in tasks if t["n"] > 0
    ]
    aggregate["error_rate_histogram"] = error_rate_histogram(rates)
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "budget": full_budget,
        "tasks": tasks,
        "aggregate": aggregate,
    }


def render_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def load_report(path: str | Path) -> dict:
    try:
        report = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read report {path}: {exc}") from exc
    if not isinstance(report, dict) or "tasks" not in report:
        raise ConfigError(f"{path} is not a run report (missing tasks)")
    return report


# ---------------------------------------------------------------------------
# Commands


def cmd_run(dataset_path: str, config_file: str, out_dir: str,
            task_ids_file: str | None = None, baseline: bool = False) -> int:
    config = RunConfig.from_file(config_file)
    tasks = load_dataset(dataset_path)
    if task_ids_file:
        wanted = {line.strip() for line in Path(task_ids_file).read_text(encoding="utf-8").splitlines()
                  if line.strip()}
        missing = wanted - {t.id for t in tasks}
        if missing:
            raise ConfigError(f"task ids not in dataset: {', '.join(sorted(missing))}")
        tasks = [t for t in tasks if t.id in wanted]
    if not tasks:
        raise ConfigError("no tasks selected")
    if config.backend_kind == "scripted" and config.workers != 1:
        raise ConfigError("a scripted backend is single-consumer; set run.workers to 1")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    backend = config.build_backend()
    simulator = config.build_simulator(out)
    prompts = PromptSet(config.prompt_dir)
    settings = config.gen_settings()
    budget = config.budget()
    clock = (lambda: 0.0) if config.deterministic_clock else time.monotonic
    classification_cache: dict = {}

    def drive(task: Task) -> SearchState:
        if baseline:
            return run_baseline(task, budget.total_budget, backend, simulator,
                                max_format_errors=config.max_format_errors,
                                prompts=prompts, settings=settings, clock=clock)
        return run_task(task, budget, backend, simulator,
                        stop_on_pass=config.stop_on_pass, prompts=prompts,
                        settings=settings, classification_cache=classification_cache,
                        clock=clock)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            states = list(pool.map(drive, tasks))
    else:
        states = [drive(task) for task in tasks]

    report = build_report(states, budget.total_budget)
    report_path = out / "report.json"
    report_path.write_text(render_report(report), encoding="utf-8")

    for record in report["tasks"]:
        print(f"{record['task_id']}: c={record['c']} n={record['n']} "
              f"best={Fraction(*record['best_pass_rate'])}")
    for k, value in report["aggregate"]["pass_at"].items():
        print(f"pass@{k} = {value:.4f}")
    print(f"report written to {report_path}")
    return 0


def cmd_filter_hard(report_file: str, dataset_path: str | None = None,
                    out_file: str | None = None) -> list[str]:
    report = load_report(report_file)
    known_ids: set[str] | None = None
    if dataset_path:
        known_ids = {t.id for t in load_dataset(dataset_path)}
    hard: list[str] = []
    for record in report["tasks"]:
        task_id, n, c = record["task_id"], record["n"], record["c"]
        if n < 10:
            print(f"warning: {task_id} has only {n} executions; excluded", file=sys.stderr)
            continue
        if known_ids is not None and task_id not in known_ids:
            print(f"warning: {task_id} not present in dataset", file=sys.stderr)
        if c == 0:
            hard.append(task_id)
    text = "\n".join(hard) + ("\n" if hard else "")
    if out_file:
        Path(out_file).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return hard


def _synthesize_header(table: TruthTable, name: str = "minimized") -> str:
    def group(names: list[str]) -> list[tuple[str, int | None, int | None]]:
        order: list[str] = []
        bits: dict[str, list[int] | None] = {}
        for sig in names:
            if "[" in sig and sig.endswith("]"):
                base, idx = sig[:-1].split("[", 1)
                if base not in bits:
                    order.append(base)
                    bits[base] = []
                if bits[base] is not None:
                    bits[base].append(int(idx))
            else:
                if sig not in bits:
                    order.append(sig)
                bits[sig] = None
        out = []
        for base in order:
            idxs = bits[base]
            if idxs is None:
                out.append((base, None, None))
            else:
                out.append((base, max(idxs), min(idxs)))
        return out

    decls = []
    for base, msb, lsb in group(table.inputs):
        rng = f" [{msb}:{lsb}]" if msb is not None else ""
        decls.append(f"input{rng} {base}")
    for base, msb, lsb in group(table.outputs):
        rng = f" [{msb}:{lsb}]" if msb is not None else ""
        decls.append(f"output{rng} {base}")
    return f"module {name}(" + ", ".join(decls) + ");"


def cmd_minimize(table_file: str) -> int:
    try:
        obj = json.loads(Path(table_file).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot parse {table_file}: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError("truth-table file must hold a JSON object")
    try:
        table = TruthTable.from_json_obj(obj)
    except FormatError as exc:
        raise ConfigError(f"{table_file}: {exc}") from exc

    exprs = minimize_all(table)
    # built-in oracle: the SOP must reproduce every care cell before we print
    for assignment, values in table.assignments():
        for expr in exprs:
            expected = values[expr.output]
            if expected is not None and evaluate_sop(expr, assignment) != expected:
                raise HdlGenError(f"internal error: SOP diverges from table at {assignment}")

    print("SOP:")
    for expr in exprs:
        print(f"  {sop_text(expr)}")
    print()
    print(emit_verilog(_synthesize_header(table), exprs), end="")
    return 0


def cmd_passk(report_file: str, ks: list[int]) -> int:
    report = load_report(report_file)
    tasks = report["tasks"]
    if not tasks:
        raise ConfigError("report holds no tasks")
    for k in ks:
        for record in tasks:
            if k > record["n"]:
                raise ConfigError(
                    f"k={k} exceeds the {record['n']} executed samples of task {record['task_id']}"
                )
    for k in ks:
        value = aggregate_pass_at_k([(t["n"], t["c"]) for t in tasks], k)
        print(f"pass@{k} = {float(value):.6f}")
    rates = [best_error_rate([Fraction(*t["best_pass_rate"])]) for t in tasks]
    print(f"error-rate histogram (step 0.2): {error_rate_histogram(rates)}")
    return 0


# ---------------------------------------------------------------------------
# Entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hdlgen",
                                     description="Classification-based Verilog generation pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the pipeline over a dataset")
    p_run.add_argument("--dataset", required=True)
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--task-ids", help="file with one task id per line")
    p_run.add_argument("--baseline", action="store_true", help="direct generation instead of the pipeline")

    p_hard = sub.add_parser("filter-hard", help="ids of tasks unsolved by a baseline report")
    p_hard.add_argument("--report", required=True)
    p_hard.add_argument("--dataset")
    p_hard.add_argument("--out")

    p_min = sub.add_parser("minimize", help="minimize a truth-table JSON file")
    p_min.add_argument("table_file")

    p_passk = sub.add_parser("passk", help="aggregate pass@k from a run report")
    p_passk.add_argument("--report", required=True)
    p_passk.add_argument("-k", action="append", type=int, dest="ks",
                         help="k value (repeatable; default 1 5 10)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args.dataset, args.config, args.out, args.task_ids, args.baseline)
        if args.command == "filter-hard":
            cmd_filter_hard(args.report, args.dataset, args.out)
            return 0
        if args.command == "minimize":
            return cmd_minimize(args.table_file)
        if args.command == "passk":
            return cmd_passk(args.report, args.ks or list(DEFAULT_KS))
        raise ContractViolation(f"unhandled command {args.command}")
    except (ConfigError, ContractViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except HdlGenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
