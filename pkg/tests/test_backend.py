import json

import pytest

from hdlgen.backend import (
    GenerationRequest,
    GenSettings,
    Message,
    PromptTemplate,
    RateLimiter,
    RemoteBackend,
    RemoteConfig,
    ScriptedBackend,
    ScriptEntry,
    estimate_tokens,
    load_script,
    render,
)
from hdlgen.errors import (
    ContextOverflow,
    ContractViolation,
    MissingPlaceholder,
    RemoteError,
    ScriptExhausted,
    ScriptMismatch,
)
from hdlgen.prompts import PromptSet


class TestRender:
    def test_substitutes_all_placeholders(self):
        template = PromptTemplate("t", "hello {{name}}, {{name}} again: {{what}}")
        assert render(template, {"name": "a", "what": "b"}) == "hello a, a again: b"

    def test_missing_placeholder_named(self):
        template = PromptTemplate("t", "needs {{key}}")
        with pytest.raises(MissingPlaceholder) as err:
            render(template, {})
        assert err.value.name == "key"

    def test_no_placeholders_identity(self):
        template = PromptTemplate("t", "static text { not a placeholder }")
        assert render(template, {}) == "static text { not a placeholder }"

    def test_no_markers_survive(self):
        prompts = PromptSet()
        for name in ("info_comb", "info_sequ", "probe", "truth_table"):
            template = prompts[name]
            bindings = {k: "BOUND" for k in template.required_placeholders}
            rendered = render(template, bindings)
            assert "{{" not in rendered

    def test_info_prompt_carries_instruction(self):
        rendered = render(PromptSet()["info_comb"], {"spec": "the task"})
        assert rendered.startswith("List the relationship between the inputs")
        assert "the task" in rendered


class TestScriptedBackend:
    def test_replays_in_order(self):
        backend = ScriptedBackend(["A", "B"])
        assert backend.complete(GenerationRequest.user("x")) == "A"
        assert backend.complete(GenerationRequest.user("x")) == "B"

    def test_exhaustion(self):
        backend = ScriptedBackend(["A"])
        backend.complete(GenerationRequest.user("x"))
        with pytest.raises(ScriptExhausted):
            backend.complete(GenerationRequest.user("x"))

    def test_expectation_checked(self):
        backend = ScriptedBackend([ScriptEntry("ok", expect="magic")])
        with pytest.raises(ScriptMismatch):
            backend.complete(GenerationRequest.user("no match here"))
        backend.cursor = 0
        assert backend.complete(GenerationRequest.user("some magic words")) == "ok"

    def test_context_overflow(self):
        backend = ScriptedBackend(["ok"])
        request = GenerationRequest.user("z" * 4100, max_context_tokens=1024)
        with pytest.raises(ContextOverflow):
            backend.complete(request)

    def test_load_script(self, tmp_path):
        path = tmp_path / "script.json"
        path.write_text(json.dumps(["one", {"expect": "hi", "response": "two"}]))
        backend = load_script(path)
        assert backend.complete(GenerationRequest.user("hi")) == "one"
        assert backend.complete(GenerationRequest.user("hi")) == "two"


class TestGenerationRequest:
    def test_needs_user_message(self):
        with pytest.raises(ContractViolation):
            GenerationRequest([Message("system", "x")])
        with pytest.raises(ContractViolation):
            GenerationRequest.user("x", temperature=-0.1)

    def test_token_estimate(self):
        assert estimate_tokens("abcd" * 10) == 10
        assert estimate_tokens("abc") == 1


class _FakeResponse:
    def __init__(self, status_code, payload=None):
        self.status_code = status_code
        self._payload = payload or {}
        self.text = json.dumps(self._payload)

    def json(self):
        return self._payload


class TestRemoteBackend:
    def _backend(self, responses, monkeypatch):
        calls = []

        def fake_post(url, json=None, headers=None, timeout=None):
            calls.append({"url": url, "body": json, "headers": headers})
            result = responses.pop(0)
            if isinstance(result, Exception):
                raise result
            return result

        monkeypatch.setenv("TEST_API_KEY", "sk-test")
        config = RemoteConfig(base_url="https://llm.example/v1", model="m1",
                              api_key_env="TEST_API_KEY", retries=2)
        backend = RemoteBackend(config, post=fake_post, sleep=lambda s: None)
        return backend, calls

    def test_wire_format_forwards_sampling_params(self, monkeypatch):
        payload = {"choices": [{"message": {"content": "reply"}}]}
        backend, calls = self._backend([_FakeResponse(200, payload)], monkeypatch)
        request = GenerationRequest.user("prompt", temperature=0.5, max_context_tokens=4096)
        assert backend.complete(request) == "reply"
        body = calls[0]["body"]
        assert body["temperature"] == 0.5
        assert body["max_tokens"] == 4096
        assert body["model"] == "m1"
        assert body["messages"] == [{"role": "user", "content": "prompt"}]
        assert calls[0]["url"] == "https://llm.example/v1/chat/completions"
        assert calls[0]["headers"]["Authorization"] == "Bearer sk-test"

    def test_retries_transient_then_succeeds(self, monkeypatch):
        payload = {"choices": [{"message": {"content": "late"}}]}
        backend, calls = self._backend(
            [_FakeResponse(503), _FakeResponse(429), _FakeResponse(200, payload)], monkeypatch
        )
        assert backend.complete(GenerationRequest.user("p")) == "late"
        assert len(calls) == 3

    def test_gives_up_after_retries(self, monkeypatch):
        backend, calls = self._backend(
            [_FakeResponse(500), _FakeResponse(500), _FakeResponse(500)], monkeypatch
        )
        with pytest.raises(RemoteError):
            backend.complete(GenerationRequest.user("p"))
        assert len(calls) == 3

    def test_hard_http_error_is_fatal(self, monkeypatch):
        backend, calls = self._backend([_FakeResponse(401)], monkeypatch)
        with pytest.raises(RemoteError):
            backend.complete(GenerationRequest.user("p"))
        assert len(calls) == 1

    def test_missing_key_reported(self, monkeypatch):
        monkeypatch.delenv("NO_SUCH_KEY", raising=False)
        backend = RemoteBackend(RemoteConfig(api_key_env="NO_SUCH_KEY"), post=None)
        with pytest.raises(RemoteError):
            backend.complete(GenerationRequest.user("p"))


class TestRateLimiter:
    def test_spaces_calls(self):
        now = [0.0]
        naps = []
        limiter = RateLimiter(per_minute=60, clock=lambda: now[0], sleep=naps.append)
        limiter.wait()  # first call free
        limiter.wait()
        assert naps == [1.0]

    def test_rejects_nonpositive_rate(self):
        with pytest.raises(ContractViolation):
            RateLimiter(0)


class TestGenSettings:
    def test_request_carries_settings(self):
        settings = GenSettings(temperature=0.5, max_context_tokens=4096)
        request = settings.request("hello")
        assert request.temperature == 0.5
        assert request.max_context_tokens == 4096
        assert request.messages[0].content == "hello"
