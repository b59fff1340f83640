"""Domain types shared by every stage of the pipeline.

Pass rates are kept as exact rationals (``fractions.Fraction``) end to end and
only converted to floats for reporting, so that top-candidate selection never
depends on floating-point tie-breaking.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from .errors import ContractViolation


class CircuitType(Enum):
    COMBINATIONAL = "combinational"
    SEQUENTIAL = "sequential"
    # Never produced by the classifier; assigned only when the orchestrator
    # escalates (fail-safe, later iterations).
    GENERAL = "general"


class Procedure(Enum):
    COMB = "COMB"
    SEQU = "SEQU"
    BEHAV = "BEHAV"
    BASELINE = "BASELINE"


class Mode(Enum):
    NORMAL = "normal"
    SHORT_CUT = "short_cut"
    FAIL_SAFE = "fail_safe"
    DONE = "done"


class OutcomeStatus(Enum):
    PASS = "pass"
    PARTIAL_FAIL = "partial_fail"
    COMPILE_ERROR = "compile_error"
    SIM_TIMEOUT = "sim_timeout"


@dataclass
class Task:
    """One benchmark problem: natural-language spec, testbench, port header."""

    id: str
    spec_text: str
    testbench_src: str
    module_header: str
    dataset_split: str = "human"

    def __post_init__(self) -> None:
        if not self.id:
            raise ContractViolation("task id must be nonempty")
        if not self.testbench_src:
            raise ContractViolation(f"task {self.id}: testbench_src must be nonempty")


def info_list_id(items: list[str] | tuple[str, ...]) -> str:
    """Content address for an information list: hash of its items.

    Identical extractions therefore share one id and collapse into a single
    cluster entry.
    """
    digest = hashlib.sha256("\x1f".join(items).encode("utf-8")).hexdigest()
    return digest[:16]


@dataclass
class InformationList:
    """Numbered input/output relationship statements plus their score history.

    ``score`` is always the arithmetic mean of ``pass_rate_history`` (0 when
    the history is empty); ``update_score`` is the only mutator.
    """

    items: list[str]
    origin_iteration: int = 1
    pass_rate_history: list[Fraction] = field(default_factory=list)
    score: Fraction = Fraction(0)
    id: str = ""

    def __post_init__(self) -> None:
        if self.origin_iteration < 1:
            raise ContractViolation("origin_iteration must be >= 1")
        if not self.id:
            self.id = info_list_id(self.items)
        self.pass_rate_history = [Fraction(p) for p in self.pass_rate_history]
        self.score = self._mean()

    def _mean(self) -> Fraction:
        if not self.pass_rate_history:
            return Fraction(0)
        return sum(self.pass_rate_history, Fraction(0)) / len(self.pass_rate_history)

    def as_text(self) -> str:
        return "\n".join(f"{i}. {item}" for i, item in enumerate(self.items, start=1))


def update_score(info_list: InformationList, p_s: Fraction | float) -> InformationList:
    """Append a pass rate to the history and recompute the running mean."""
    p = Fraction(p_s)
    if not 0 <= p <= 1:
        raise ContractViolation(f"pass rate {p} outside [0, 1]")
    info_list.pass_rate_history.append(p)
    info_list.score = info_list._mean()
    return info_list


@dataclass
class CodeSample:
    """One generated candidate. Empty ``verilog_src`` marks a failed attempt."""

    verilog_src: str
    producing_procedure: Procedure
    info_list_id: str | None
    iteration: int

    def __post_init__(self) -> None:
        if self.producing_procedure is not Procedure.BASELINE and self.verilog_src and not self.info_list_id:
            raise ContractViolation("non-baseline samples must reference an information list")


@dataclass
class TestOutcome:
    """Testbench verdict: m passed out of n stimulus/response samples."""

    status: OutcomeStatus
    passed_samples: int
    total_samples: int

    def __post_init__(self) -> None:
        if self.total_samples < 1:
            raise ContractViolation("total_samples must be >= 1")
        if not 0 <= self.passed_samples <= self.total_samples:
            raise ContractViolation("passed_samples outside [0, total_samples]")
        full = self.passed_samples == self.total_samples
        if (self.status is OutcomeStatus.PASS) != full:
            raise ContractViolation("status PASS iff every sample passed")

    @property
    def pass_rate(self) -> Fraction:
        return Fraction(self.passed_samples, self.total_samples)

    @classmethod
    def from_counts(cls, m: int, n: int) -> "TestOutcome":
        status = OutcomeStatus.PASS if m == n else OutcomeStatus.PARTIAL_FAIL
        return cls(status, m, n)

    @classmethod
    def compile_error(cls) -> "TestOutcome":
        return cls(OutcomeStatus.COMPILE_ERROR, 0, 1)

    @classmethod
    def timeout(cls) -> "TestOutcome":
        return cls(OutcomeStatus.SIM_TIMEOUT, 0, 1)


@dataclass
class BudgetConfig:
    """Per-task test budget and search knobs.

    ``samples_per_iteration`` is the (N_1, ..., N_Smax) schedule;
    ``top_candidates`` the matching C_s list (the first entry is ignored:
    iteration 1 always extracts fresh lists).
    """

    samples_per_iteration: list[int] = field(default_factory=lambda: [7, 2, 1])
    top_candidates: list[int] = field(default_factory=lambda: [1, 2, 1])
    shortcut_threshold: Fraction = Fraction(95, 100)
    max_format_errors: int = 10

    def __post_init__(self) -> None:
        if not self.samples_per_iteration:
            raise ContractViolation("samples_per_iteration must be nonempty")
        if len(self.top_candidates) != len(self.samples_per_iteration):
            raise ContractViolation("top_candidates length must match samples_per_iteration")
        if any(n < 1 for n in self.samples_per_iteration):
            raise ContractViolation("iteration sample counts must be positive")
        if any(c < 1 for c in self.top_candidates):
            raise ContractViolation("top-candidate counts must be positive")
        self.shortcut_threshold = Fraction(self.shortcut_threshold)
        if not 0 < self.shortcut_threshold <= 1:
            raise ContractViolation("shortcut_threshold must lie in (0, 1]")
        if self.max_format_errors < 0:
            raise ContractViolation("max_format_errors must be >= 0")

    @property
    def total_budget(self) -> int:
        return sum(self.samples_per_iteration)

    @property
    def max_iterations(self) -> int:
        return len(self.samples_per_iteration)


@dataclass
class ExecutedSample:
    """One consumed budget unit: the candidate, its verdict, and context."""

    sample: CodeSample
    outcome: TestOutcome
    mode: Mode
    wall_ms: float
    info_list: InformationList | None = None


@dataclass
class SearchState:
    """Mutable per-task search state, owned by exactly one worker."""

    task_id: str
    iteration: int = 1
    mode: Mode = Mode.NORMAL
    format_errors: int = 0
    remaining_budget: int = 0
    cluster: list[InformationList] = field(default_factory=list)
    solved: bool = False
    executed_samples: list[ExecutedSample] = field(default_factory=list)

    def cluster_get(self, list_id: str) -> InformationList | None:
        for entry in self.cluster:
            if entry.id == list_id:
                return entry
        return None

    def cluster_upsert(self, info_list: InformationList) -> InformationList:
        """Insert a list, deduplicating by content id."""
        existing = self.cluster_get(info_list.id)
        if existing is not None:
            return existing
        self.cluster.append(info_list)
        return info_list
