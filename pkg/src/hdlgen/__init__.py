"""Classification-based Verilog generation pipeline.

Classifies each task as combinational or sequential, extracts an information
list from the specification, drives a type-specific generation procedure
(truth table -> SOP -> Verilog, or state-transition table -> three always
blocks -> merge), and searches over information-list candidates under a fixed
testbench budget. Results are scored with pass@k.
"""

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

__version__ = "0.1.0"

__all__ = [
    "BudgetConfig",
    "CircuitType",
    "CodeSample",
    "ExecutedSample",
    "InformationList",
    "Mode",
    "OutcomeStatus",
    "Procedure",
    "SearchState",
    "Task",
    "TestOutcome",
    "update_score",
    "__version__",
]
