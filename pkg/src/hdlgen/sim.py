"""Compile-and-simulate harness plus the deterministic mock simulator.

Pass counts are read from simulator stdout through a configurable set of
regexes with ``mismatches``/``total`` named groups (defaults match the common
benchmark hint line). A testbench that prints no recognized line scores 1 on
a clean exit and 0 otherwise, since not every testbench reports counts.
"""

from __future__ import annotations

import re
import subprocess
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

from .core import CodeSample, OutcomeStatus, Task, TestOutcome
from .errors import ContractViolation, InfrastructureError

DEFAULT_PROTOCOL_PATTERNS = (
    r"Hint: Total mismatched samples is (?P<mismatches>\d+) out of (?P<total>\d+) samples",
)


def parse_pass_counts(stdout: str, patterns=DEFAULT_PROTOCOL_PATTERNS) -> tuple[int, int] | None:
    """(m, n) from the last protocol line found, or None."""
    for pattern in patterns:
        matches = list(re.finditer(pattern, stdout))
        if not matches:
            continue
        groups = matches[-1].groupdict()
        if "mismatches" not in groups or "total" not in groups:
            raise ContractViolation(f"pattern {pattern!r} must define mismatches/total groups")
        total = int(groups["total"])
        mismatches = int(groups["mismatches"])
        if total < 1 or mismatches > total:
            return None
        return total - mismatches, total
    return None


class Simulator(Protocol):
    def run(self, sample: CodeSample, task: Task) -> TestOutcome: ...


def mock_simulate(verilog_src: str, behavior_table: dict[str, tuple[int, int]]) -> TestOutcome:
    """Scripted outcome keyed by code fingerprint; first matching key wins."""
    for key, (m, n) in behavior_table.items():
        if key in verilog_src:
            return TestOutcome.from_counts(m, n)
    return TestOutcome.compile_error()


class MockSimulator:
    """Deterministic stand-in: maps code substrings to scripted (m, n) pairs."""

    def __init__(self, behavior_table: dict[str, tuple[int, int]]):
        self.behavior_table = dict(behavior_table)

    def run(self, sample: CodeSample, task: Task) -> TestOutcome:
        return mock_simulate(sample.verilog_src, self.behavior_table)


@dataclass
class SimLimits:
    timeout_s: float = 60.0


@dataclass
class IcarusSimulator:
    """iverilog/vvp harness; scratch layout <root>/<task>/<ordinal>/."""

    compiler: str = "iverilog"
    runner: str = "vvp"
    extra_flags: tuple[str, ...] = ()
    limits: SimLimits = field(default_factory=SimLimits)
    scratch_root: Path | str = "hdlgen-scratch"
    protocol_patterns: tuple[str, ...] = DEFAULT_PROTOCOL_PATTERNS

    def __post_init__(self) -> None:
        self.scratch_root = Path(self.scratch_root)
        self._counters: dict[str, int] = {}
        self._lock = threading.Lock()

    def _sample_dir(self, task_id: str) -> Path:
        with self._lock:
            ordinal = self._counters.get(task_id, 0)
            self._counters[task_id] = ordinal + 1
        path = self.scratch_root / task_id / f"{ordinal:03d}"
        try:
            path.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise InfrastructureError(f"cannot create scratch dir {path}: {exc}") from exc
        return path

    def run(self, sample: CodeSample, task: Task) -> TestOutcome:
        workdir = self._sample_dir(task.id)
        candidate = workdir / "candidate.v"
        testbench = workdir / "tb.v"
        binary = workdir / "sim.out"
        try:
            candidate.write_text(sample.verilog_src, encoding="utf-8")
            testbench.write_text(task.testbench_src, encoding="utf-8")
        except OSError as exc:
            raise InfrastructureError(f"cannot write sources under {workdir}: {exc}") from exc

        compile_cmd = [self.compiler, *self.extra_flags, "-o", str(binary),
                       str(candidate), str(testbench)]
        try:
            compiled = subprocess.run(compile_cmd, capture_output=True, text=True,
                                      timeout=self.limits.timeout_s)
        except FileNotFoundError as exc:
            raise InfrastructureError(f"simulator not found: {self.compiler}") from exc
        except subprocess.TimeoutExpired:
            return TestOutcome.timeout()
        if compiled.returncode != 0:
            (workdir / "compile.log").write_text(compiled.stdout + compiled.stderr, encoding="utf-8")
            return TestOutcome.compile_error()

        try:
            ran = subprocess.run([self.runner, str(binary)], capture_output=True, text=True,
                                 timeout=self.limits.timeout_s)
        except FileNotFoundError as exc:
            raise InfrastructureError(f"simulator runtime not found: {self.runner}") from exc
        except subprocess.TimeoutExpired:
            return TestOutcome.timeout()
        (workdir / "sim.log").write_text(ran.stdout + ran.stderr, encoding="utf-8")

        counts = parse_pass_counts(ran.stdout, self.protocol_patterns)
        if counts is not None:
            return TestOutcome.from_counts(*counts)
        if ran.returncode == 0:
            return TestOutcome(OutcomeStatus.PASS, 1, 1)
        return TestOutcome(OutcomeStatus.PARTIAL_FAIL, 0, 1)


def run_testbench(
    sample: CodeSample,
    task: Task,
    limits: SimLimits | None = None,
    *,
    simulator: IcarusSimulator | None = None,
) -> TestOutcome:
    """One-shot convenience wrapper around ``IcarusSimulator``."""
    sim = simulator or IcarusSimulator(limits=limits or SimLimits())
    return sim.run(sample, task)
