import json
import math
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import httpx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from astevo.astops import apply_vi
from astevo.code import HeuristicCode, SourceText
from astevo.hdsl import Kind, parse, validate
from astevo.problems import OBP_BIN, TSP_NEXT, FeatureSchema
from astevo.repair import (
    Cassette,
    ChatClient,
    Context,
    Framing,
    MockProvider,
    ProviderFailure,
    ProviderKind,
    RemoteProvider,
    RemoteSettings,
    RepairMode,
    RepairPolicy,
    RepairRequest,
    build_repair_prompt,
    estimate_tokens,
    extract_code,
    fallback_source,
    make_provider,
    mock_repair_rules,
    repair_needed,
)
from astevo.repair.types import Completion

from conftest import seed_codes

HOLE = "⟨?⟩"
ONE = FeatureSchema("one", ("a",), "min")
THREE = FeatureSchema("three", ("alpha", "beta", "gamma"), "min")


def icode(text, schema=ONE):
    return HeuristicCode.from_text(text, arity=schema.arity)


def same_tree(a, b):
    """Structural equality ignoring node ids."""
    def strip(n):
        if n is None:
            return None
        return (n.kind, n.payload, tuple(strip(c) for c in n.children))
    return strip(parse(a).root) == strip(parse(b).root)


# mock rules -------------------------------------------------------------------------


def test_hole_in_expression_becomes_zero():
    out = mock_repair_rules(icode(f"fn score(a){{ return {HOLE} }}"), ONE)
    assert same_tree(out, "fn score(a){ return 0.0 }")
    assert validate(parse(out), 1).is_valid


def test_hole_in_statement_position_is_dropped():
    out = mock_repair_rules(icode(f"fn score(a){{ {HOLE}; return a }}"), ONE)
    assert same_tree(out, "fn score(a){ return a }")


def test_missing_return_appends_return_zero():
    src = "fn score(a){ let x = a * 2; if x > 1 { return x } }"
    code = icode(src)
    assert not code.is_valid
    out = mock_repair_rules(code, ONE)
    body = parse(out).root.children[0].children[1]
    last = body.children[-1]
    assert last.kind is Kind.RETURN and last.children[0].kind is Kind.NUMBER and last.children[0].payload == 0.0
    assert same_tree(out, src.replace("} }", "}; return 0.0 }"))
    assert validate(parse(out), 1).is_valid


def test_unbound_renamed_to_nearest_in_scope_name():
    out = mock_repair_rules(icode("fn score(alpha, beta, gamma){ return betta + 1 }", THREE), THREE)
    assert same_tree(out, "fn score(alpha, beta, gamma){ return beta + 1 }")


def test_unbound_tie_goes_to_first_parameter():
    # "zzzzz" is 5 edits from each parameter
    out = mock_repair_rules(icode("fn score(alpha, beta, gamma){ return zzzzz }", THREE), THREE)
    dists = {"alpha": 5, "beta": 5, "gamma": 5}
    assert len(set(dists.values())) == 1
    assert same_tree(out, "fn score(alpha, beta, gamma){ return alpha }")


def test_unbound_prefers_let_when_closer():
    out = mock_repair_rules(icode("fn score(alpha, beta, gamma){ let scale = 2; return scal * beta }", THREE), THREE)
    assert same_tree(out, "fn score(alpha, beta, gamma){ let scale = 2; return scale * beta }")


def test_unparseable_tail_is_salvaged():
    out = mock_repair_rules(icode("fn score(a){ let y = a + 1; return y * ) ) ("), ONE)
    code = HeuristicCode.from_text(out, arity=1)
    assert code.is_valid
    assert "let y = a + 1" in out.replace("  ", " ")


def test_unlexable_text_gives_fallback():
    assert mock_repair_rules(icode("@@@ $$$ `"), ONE) == fallback_source(ONE)
    assert same_tree(fallback_source(THREE), "fn score(alpha, beta, gamma){ return alpha }")


def test_valid_input_returned_unchanged():
    src = "fn score(a) {\n    return a * 2;\n}\n"
    assert mock_repair_rules(icode(src), ONE) == src


@given(st.text(alphabet="fnscore(){}ab,;+-*/=<>ltreu 0123456789.⟨?⟩#\n", min_size=1, max_size=80))
def test_mock_repair_is_total(text):
    out = mock_repair_rules(icode(text, TSP_NEXT), TSP_NEXT)
    assert HeuristicCode.from_text(out, arity=TSP_NEXT.arity).is_valid


@pytest.mark.parametrize("problem,schema", [("tsp", TSP_NEXT), ("obp", OBP_BIN)])
def test_mock_repair_fuzz_over_destructions(problem, schema):
    seeds = seed_codes(problem)
    valid = 0
    for i in range(250):
        base = seeds[i % len(seeds)]
        partner = seeds[(i * 7 + 3) % len(seeds)] if i % 2 else None
        broken = apply_vi(base, i, partner, schema.arity)
        if broken.is_valid:
            valid += 1
            continue
        out = mock_repair_rules(broken, schema)
        assert HeuristicCode.from_text(out, arity=schema.arity).is_valid, broken.text
    assert valid < 250


def test_mock_provider_is_deterministic_and_counts_tokens():
    req = RepairRequest(icode(f"fn score(a){{ return {HOLE} }}"), ONE)
    r1, r2 = MockProvider().repair(req), MockProvider().repair(req)
    assert r1 == r2
    assert r1.provider is ProviderKind.MOCK
    assert r1.tokens_in == math.ceil(len(r1.prompt) / 4)
    assert r1.tokens_out == math.ceil(len(r1.candidates[0].text) / 4)


@given(st.text(max_size=200), st.text(max_size=200))
def test_token_estimate_monotone(a, b):
    assert estimate_tokens(a) == math.ceil(len(a) / 4)
    if len(a) <= len(b):
        assert estimate_tokens(a) <= estimate_tokens(b)


# requests and prompts ---------------------------------------------------------------


def test_valid_code_never_enters_repair():
    with pytest.raises(ValueError):
        RepairRequest(icode("fn score(a){ return a }"), ONE)
    with pytest.raises(ValueError):
        RepairRequest(icode(f"fn score(a){{ return {HOLE} }}"), ONE, want_variants=0)


def test_plain_prompt_contains_hole_and_repair():
    code = icode(f"fn score(a){{ return {HOLE} * a }}")
    prompt = build_repair_prompt(RepairRequest(code, ONE))
    assert HOLE in prompt and "repair" in prompt
    assert code.text.strip() in prompt
    assert code.violations_summary() in prompt
    assert "```" in prompt


def test_reflection_embedded_verbatim():
    note = "prefer d_min_unvis over d_mean_unvis; 3 < 4 & {braces}"
    req = RepairRequest(icode(f"fn score(a){{ return {HOLE} }}"), ONE, Context.SHORT_TERM, note)
    assert note in build_repair_prompt(req)
    plain = build_repair_prompt(RepairRequest(icode(f"fn score(a){{ return {HOLE} }}"), ONE))
    assert note not in plain


def test_prompt_is_deterministic_and_framing_changes_it():
    code = icode(f"fn score(a){{ return {HOLE} }}")
    a = build_repair_prompt(RepairRequest(code, ONE))
    assert a == build_repair_prompt(RepairRequest(code, ONE))
    assert a != build_repair_prompt(RepairRequest(code, ONE, framing=Framing.NOVEL))


def test_prompt_grows_only_with_icode_and_reflection():
    small = build_repair_prompt(RepairRequest(icode(f"fn score(a){{ return {HOLE} }}"), ONE))
    big = build_repair_prompt(RepairRequest(icode(f"fn score(a){{ return {HOLE} + a + a + a }}"), ONE))
    assert len(big) > len(small)


# policy -----------------------------------------------------------------------------


def test_policy_modes():
    code = icode(f"fn score(a){{ return {HOLE} }}")
    assert repair_needed(code, RepairPolicy(RepairMode.ALWAYS))
    assert not repair_needed(code, RepairPolicy(RepairMode.NEVER))
    with pytest.raises(ValueError):
        RepairPolicy(RepairMode.PROBABILISTIC, p=1.5)


def test_probabilistic_half():
    code = icode(f"fn score(a){{ return {HOLE} }}")
    policy = RepairPolicy(RepairMode.PROBABILISTIC, p=0.5, seed=7)
    frac = sum(repair_needed(code, policy) for _ in range(10_000)) / 10_000
    assert 0.47 <= frac <= 0.53


def test_make_provider_from_env():
    assert make_provider({"PROVIDER": "mock"}).kind is ProviderKind.MOCK
    assert make_provider({"PROVIDER": "remote", "LLM_BASE_URL": "http://127.0.0.1:9"}).kind is ProviderKind.REMOTE
    with pytest.raises(ValueError):
        make_provider({"PROVIDER": "carrier-pigeon"})


# remote -----------------------------------------------------------------------------


def _ok(content, pin=11, pout=7):
    return {"choices": [{"message": {"role": "assistant", "content": content}}], "usage": {"prompt_tokens": pin, "completion_tokens": pout}}


def test_retries_then_provider_failure():
    calls = []

    def handler(request):
        calls.append(request)
        return httpx.Response(503)

    client = ChatClient(RemoteSettings(max_retries=2, backoff_s=0), httpx.MockTransport(handler))
    with pytest.raises(ProviderFailure):
        client.complete("hi")
    assert len(calls) == 3 and client.attempts == 3


def test_unreachable_endpoint_fails_after_three_attempts():
    def handler(request):
        raise httpx.ConnectError("refused", request=request)

    client = ChatClient(RemoteSettings(max_retries=2, backoff_s=0), httpx.MockTransport(handler))
    with pytest.raises(ProviderFailure):
        client.complete("hi")
    assert client.attempts == 3


def test_retry_recovers_and_reports_usage():
    replies = iter([httpx.Response(500), httpx.Response(200, json=_ok("ok", 5, 2))])
    client = ChatClient(RemoteSettings(max_retries=2, backoff_s=0), httpx.MockTransport(lambda r: next(replies)))
    assert client.complete("hi") == Completion("ok", 5, 2)
    assert client.attempts == 2


class _Handler(BaseHTTPRequestHandler):
    seen: list = []

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        type(self).seen.append((self.path, self.headers.get("Authorization"), body))
        out = json.dumps(_ok("Here you go:\n```\nfn score(a) { return a }\n```\nthanks", 40, 9)).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(out)))
        self.end_headers()
        self.wfile.write(out)

    def log_message(self, *args):
        pass


@pytest.fixture
def chat_server():
    _Handler.seen = []
    server = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/v1", _Handler.seen
    server.shutdown()


def test_wire_format_against_local_server(chat_server):
    url, seen = chat_server
    prov = RemoteProvider(RemoteSettings(base_url=url, api_key="k", model="m", backoff_s=0))
    req = RepairRequest(icode(f"fn score(a){{ return {HOLE} }}"), ONE)
    resp = prov.repair(req)
    path, auth, body = seen[0]
    assert path == "/v1/chat/completions" and auth == "Bearer k"
    assert body["model"] == "m" and body["messages"] == [{"role": "user", "content": build_repair_prompt(req)}]
    assert resp.candidates[0].text == "fn score(a) { return a }\n"
    assert (resp.tokens_in, resp.tokens_out, resp.provider) == (40, 9, ProviderKind.REMOTE)


def test_cassette_record_then_replay(chat_server, tmp_path):
    url, seen = chat_server
    path = tmp_path / "tape.jsonl"
    req = RepairRequest(icode(f"fn score(a){{ return {HOLE} }}"), ONE)
    live = RemoteProvider(RemoteSettings(base_url=url, backoff_s=0), Cassette(path, "record")).repair(req)
    lines = [json.loads(x) for x in path.read_text().splitlines()]
    assert set(lines[0]) == {"prompt_hash", "response_text", "tokens_in", "tokens_out"}
    n = len(seen)
    replayed = RemoteProvider(RemoteSettings(base_url=url), Cassette(path, "replay")).repair(req)
    assert len(seen) == n  # no network on replay
    assert replayed.candidates == live.candidates and replayed.tokens_in == live.tokens_in
    other = RepairRequest(icode(f"fn score(a){{ {HOLE}; return a }}"), ONE)
    with pytest.raises(ProviderFailure):
        RemoteProvider(RemoteSettings(base_url=url), Cassette(path, "replay")).repair(other)


def test_repair_many_keeps_request_order():
    def complete(prompt):
        return Completion(f"```\n{prompt.splitlines()[-1]}\n```", 1, 1)

    prov = RemoteProvider(RemoteSettings(max_in_flight=4), complete=complete)
    reqs = [RepairRequest(icode(f"fn score(a){{ return {HOLE} + {i} }}"), ONE) for i in range(12)]
    out = prov.repair_many(reqs)
    assert [r.prompt for r in out] == [build_repair_prompt(r) for r in reqs]


def test_empty_response_gives_no_candidates():
    prov = RemoteProvider(RemoteSettings(), complete=lambda p: Completion("   ", 3, 0))
    resp = prov.repair(RepairRequest(icode(f"fn score(a){{ return {HOLE} }}"), ONE))
    assert resp.candidates == () and resp.tokens_in == 3


def test_response_still_holding_hole_is_dropped():
    prov = RemoteProvider(RemoteSettings(), complete=lambda p: Completion(f"```\nfn score(a) {{ return {HOLE} }}\n```", 4, 2))
    resp = prov.repair(RepairRequest(icode(f"fn score(a){{ return {HOLE} }}"), ONE))
    assert resp.candidates == () and (resp.tokens_in, resp.tokens_out) == (4, 2)


def test_extract_code():
    assert extract_code("x\n```dsl\nfn score(a) { return a }\n```\n```\nsecond\n```") == "fn score(a) { return a }\n"
    assert extract_code("fn score(a) { return a }") == "fn score(a) { return a }\n"
