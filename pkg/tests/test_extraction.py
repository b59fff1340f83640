import pytest
from hypothesis import given, strategies as st

from hdlgen.backend import ScriptedBackend
from hdlgen.core import CircuitType, Task
from hdlgen.errors import ContractViolation, FormatError
from hdlgen.extraction import extract_info_list, parse_numbered_list


def _task():
    return Task(id="t", spec_text="count to ten", testbench_src="tb",
                module_header="module m(input clk, output [3:0] q);")


class TestParseNumberedList:
    def test_prose_around_items(self):
        assert parse_numbered_list("intro\n1. a\n2. b\nend") == ["a", "b"]

    def test_continuation_lines_attach(self):
        assert parse_numbered_list("1. multi\nline item\n2. next") == ["multi\nline item", "next"]

    def test_empty(self):
        assert parse_numbered_list("") == []
        assert parse_numbered_list("no numbers here") == []

    def test_paren_markers(self):
        assert parse_numbered_list("1) first\n2) second") == ["first", "second"]

    def test_order_preserved(self):
        items = parse_numbered_list("1. one\n2. two\n3. three")
        assert items == ["one", "two", "three"]

    @given(st.lists(st.text(alphabet="abcxyz ", min_size=1, max_size=12).map(str.strip)
                    .filter(bool), min_size=1, max_size=9))
    def test_round_trips_item_count(self, items):
        text = "\n".join(f"{i}. {item}" for i, item in enumerate(items, start=1))
        parsed = parse_numbered_list(text)
        assert parsed == items
        again = parse_numbered_list("\n".join(f"{i}. {x}" for i, x in enumerate(parsed, 1)))
        assert again == parsed


class TestExtractInfoList:
    def test_items_parsed_and_history_empty(self):
        backend = ScriptedBackend([
            "Sure:\n1. clk: This is the clock input.\n2. q: This is the 4-bit output.\nDone."
        ])
        lst = extract_info_list(_task(), CircuitType.SEQUENTIAL, backend)
        assert lst.items == ["clk: This is the clock input.", "q: This is the 4-bit output."]
        assert lst.pass_rate_history == []
        assert lst.origin_iteration == 1

    def test_type_selects_prompt(self):
        # the combinational prompt forbids code, the sequential one does not
        backend = ScriptedBackend(["1. item"])
        extract_info_list(_task(), CircuitType.COMBINATIONAL, backend)

        spy = []

        class SpyBackend:
            def complete(self, request):
                spy.append(request.messages[0].content)
                return "1. item"

        extract_info_list(_task(), CircuitType.COMBINATIONAL, SpyBackend())
        extract_info_list(_task(), CircuitType.SEQUENTIAL, SpyBackend())
        assert "Do not write the codes!" in spy[0]
        assert "Do not write the codes!" not in spy[1]
        assert "timing requirements of reset and clk" in spy[1]

    def test_unparseable_reply_is_format_error(self):
        backend = ScriptedBackend(["no digits or numbering in this prose"])
        with pytest.raises(FormatError):
            extract_info_list(_task(), CircuitType.SEQUENTIAL, backend)

    def test_general_type_rejected(self):
        backend = ScriptedBackend(["1. x"])
        with pytest.raises(ContractViolation):
            extract_info_list(_task(), CircuitType.GENERAL, backend)

    def test_task_not_mutated(self):
        task = _task()
        before = (task.id, task.spec_text, task.testbench_src, task.module_header)
        extract_info_list(task, CircuitType.SEQUENTIAL, ScriptedBackend(["1. a"]))
        assert (task.id, task.spec_text, task.testbench_src, task.module_header) == before
