from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from hdlgen.core import (
    BudgetConfig,
    CodeSample,
    InformationList,
    OutcomeStatus,
    Procedure,
    SearchState,
    Task,
    TestOutcome,
    info_list_id,
    update_score,
)
from hdlgen.errors import ContractViolation


class TestInformationList:
    def test_update_appends_and_averages(self):
        lst = InformationList(items=["a"], pass_rate_history=[Fraction(1, 2)])
        update_score(lst, Fraction(1))
        assert lst.score == Fraction(3, 4)

    def test_first_update_sets_score(self):
        lst = InformationList(items=["a"])
        assert lst.score == 0
        update_score(lst, Fraction(3, 10))
        assert lst.score == Fraction(3, 10)

    def test_all_ones(self):
        lst = InformationList(items=["a"], pass_rate_history=[Fraction(1), Fraction(1)])
        update_score(lst, Fraction(1))
        assert lst.score == 1

    def test_out_of_range_rejected(self):
        lst = InformationList(items=["a"])
        with pytest.raises(ContractViolation):
            update_score(lst, Fraction(11, 10))
        with pytest.raises(ContractViolation):
            update_score(lst, Fraction(-1, 10))

    def test_ids_are_content_addressed(self):
        a = InformationList(items=["one", "two"])
        b = InformationList(items=["one", "two"], origin_iteration=2)
        c = InformationList(items=["one", "three"])
        assert a.id == b.id == info_list_id(["one", "two"])
        assert a.id != c.id

    @given(st.lists(st.fractions(min_value=0, max_value=1), max_size=25))
    def test_score_is_exact_running_mean(self, rates):
        lst = InformationList(items=["x"])
        for p in rates:
            update_score(lst, p)
        if rates:
            assert lst.score == sum(rates) / len(rates)
        else:
            assert lst.score == 0


class TestTestOutcome:
    def test_pass_rate_is_exact(self):
        out = TestOutcome.from_counts(436, 439)
        assert out.pass_rate == Fraction(436, 439)
        assert out.status is OutcomeStatus.PARTIAL_FAIL

    def test_pass_iff_full_marks(self):
        assert TestOutcome.from_counts(5, 5).status is OutcomeStatus.PASS
        with pytest.raises(ContractViolation):
            TestOutcome(OutcomeStatus.PASS, 4, 5)
        with pytest.raises(ContractViolation):
            TestOutcome(OutcomeStatus.PARTIAL_FAIL, 5, 5)

    @given(st.integers(min_value=1, max_value=50), st.data())
    def test_monotone_in_m(self, n, data):
        m = data.draw(st.integers(min_value=0, max_value=n - 1))
        lower = TestOutcome.from_counts(m, n)
        higher = TestOutcome.from_counts(m + 1, n)
        assert higher.pass_rate > lower.pass_rate

    def test_bounds(self):
        with pytest.raises(ContractViolation):
            TestOutcome(OutcomeStatus.PARTIAL_FAIL, 2, 1)
        with pytest.raises(ContractViolation):
            TestOutcome(OutcomeStatus.PARTIAL_FAIL, 0, 0)


class TestTask:
    def test_requires_id_and_testbench(self):
        with pytest.raises(ContractViolation):
            Task(id="", spec_text="s", testbench_src="tb", module_header="h")
        with pytest.raises(ContractViolation):
            Task(id="t", spec_text="s", testbench_src="", module_header="h")


class TestBudgetConfig:
    def test_defaults_total(self):
        config = BudgetConfig()
        assert config.samples_per_iteration == [7, 2, 1]
        assert config.total_budget == 10
        assert config.shortcut_threshold == Fraction(19, 20)
        assert config.max_format_errors == 10

    def test_alternate_schedule(self):
        config = BudgetConfig(samples_per_iteration=[5, 3, 2], top_candidates=[1, 3, 1])
        assert config.total_budget == 10

    def test_validation(self):
        with pytest.raises(ContractViolation):
            BudgetConfig(samples_per_iteration=[])
        with pytest.raises(ContractViolation):
            BudgetConfig(samples_per_iteration=[1, 0, 1])
        with pytest.raises(ContractViolation):
            BudgetConfig(top_candidates=[1, 2])
        with pytest.raises(ContractViolation):
            BudgetConfig(shortcut_threshold=Fraction(3, 2))


class TestCodeSample:
    def test_non_baseline_needs_list(self):
        with pytest.raises(ContractViolation):
            CodeSample("module m; endmodule", Procedure.COMB, None, 1)
        CodeSample("module m; endmodule", Procedure.BASELINE, None, 1)
        CodeSample("", Procedure.COMB, None, 1)  # failed attempts carry no code


class TestSearchStateCluster:
    def test_upsert_dedupes_by_content(self):
        state = SearchState(task_id="t")
        first = state.cluster_upsert(InformationList(items=["a"]))
        second = state.cluster_upsert(InformationList(items=["a"]))
        assert first is second
        assert len(state.cluster) == 1
        assert state.cluster_get(first.id) is first
        assert state.cluster_get("nope") is None
