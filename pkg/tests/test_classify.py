import pytest
from hypothesis import given, strategies as st

from hdlgen.backend import ScriptedBackend
from hdlgen.classify import classify_task, deduce_type_from_code
from hdlgen.core import CircuitType, Task
from hdlgen.errors import ClassificationError


def _task(spec="build a thing"):
    return Task(id="t1", spec_text=spec, testbench_src="tb", module_header="module m(input a, output y);")


class TestDeduce:
    def test_posedge_always_is_sequential(self):
        src = "module m(input clk); reg q; always @(posedge clk) q <= 1; endmodule"
        assert deduce_type_from_code(src) is CircuitType.SEQUENTIAL

    def test_negedge_is_sequential(self):
        assert deduce_type_from_code("always @(negedge rst_n) q <= 0;") is CircuitType.SEQUENTIAL

    def test_assign_only_is_combinational(self):
        assert deduce_type_from_code("module m; assign y = a & b; endmodule") is CircuitType.COMBINATIONAL

    def test_level_sensitive_always_is_combinational(self):
        src = "always @(*) begin y = a | b; end"
        assert deduce_type_from_code(src) is CircuitType.COMBINATIONAL

    def test_empty_is_indeterminate(self):
        assert deduce_type_from_code("") is None
        assert deduce_type_from_code("just some prose about circuits") is None

    def test_mixed_is_sequential(self):
        src = "assign y = a; always @(posedge clk) q <= y;"
        assert deduce_type_from_code(src) is CircuitType.SEQUENTIAL

    def test_commented_edge_does_not_count(self):
        src = "// always @(posedge clk)\nassign y = a;"
        assert deduce_type_from_code(src) is CircuitType.COMBINATIONAL

    def test_edge_in_string_does_not_count(self):
        src = 'initial $display("always @(posedge clk)"); assign y = a;'
        assert deduce_type_from_code(src) is CircuitType.COMBINATIONAL

    def test_whitespace_tolerated(self):
        assert deduce_type_from_code("always @ (  posedge clk) q <= d;") is CircuitType.SEQUENTIAL

    @given(st.text(alphabet=st.characters(blacklist_characters='/"'), max_size=80))
    def test_edge_trigger_dominates_any_surrounding_text(self, noise):
        src = noise + "\nalways @(posedge clk) begin q <= d; end\n" + noise
        assert deduce_type_from_code(src) is CircuitType.SEQUENTIAL

    def test_deterministic(self):
        src = "always @(posedge clk) q <= d;"
        assert deduce_type_from_code(src) is deduce_type_from_code(src)


class TestClassifyTask:
    def test_sequential_probe(self):
        backend = ScriptedBackend([
            "```verilog\nmodule m(input clk);\nalways @(posedge clk) q <= q + 1;\nendmodule\n```",
        ])
        assert classify_task(_task("decade counter"), backend) is CircuitType.SEQUENTIAL

    def test_combinational_probe(self):
        backend = ScriptedBackend([
            "```verilog\nmodule m(input a, b, output y);\nassign y = a ^ b;\nendmodule\n```",
        ])
        assert classify_task(_task("karnaugh map"), backend) is CircuitType.COMBINATIONAL

    def test_fallback_direct_question(self):
        backend = ScriptedBackend([
            "I cannot write code for that.",
            "This is a combinational circuit.",
        ])
        assert classify_task(_task(), backend) is CircuitType.COMBINATIONAL

    def test_both_strategies_fail(self):
        backend = ScriptedBackend(["prose", "more prose"])
        with pytest.raises(ClassificationError):
            classify_task(_task(), backend)

    def test_cache_prevents_second_probe(self):
        cache = {}
        backend = ScriptedBackend(["assign y = a;"])
        task = _task()
        first = classify_task(task, backend, cache=cache)
        # script is exhausted; a second call must come from the cache
        second = classify_task(task, backend, cache=cache)
        assert first is second is CircuitType.COMBINATIONAL
