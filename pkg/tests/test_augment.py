import json

import pytest

from claimnorm.augment import (
    FiveW1H,
    augment_pairs,
    build_5w1h_messages,
    parse_5w1h_response,
    serialize_5w1h,
)
from claimnorm.clients import MockChatClient, ResponseCache
from claimnorm.errors import ParseError, SchemaError, ServiceError

from conftest import make_pair


class TestPromptBuilding:
    def test_user_prompt_contains_post(self):
        bundle = build_5w1h_messages("X")
        assert "Post: X" in bundle.user

    def test_no_unfilled_placeholders(self):
        bundle = build_5w1h_messages("some post")
        assert "{post}" not in bundle.user

    def test_deterministic(self):
        a = build_5w1h_messages("same post")
        b = build_5w1h_messages("same post")
        assert (a.system, a.user) == (b.system, b.user)

    def test_post_appears_exactly_once(self):
        bundle = build_5w1h_messages("UNIQUE_MARKER_42")
        assert bundle.user.count("UNIQUE_MARKER_42") == 1


class TestResponseParsing:
    def test_empty_fields_allowed(self):
        raw = '{"what":"a","who":"","where":"","when":"","how":"","why":"","claim":"c"}'
        record = parse_5w1h_response(raw)
        assert record.what == "a"
        assert record.who == ""
        assert record.claim == "c"

    def test_code_fence_tolerated(self):
        inner = '{"what":"a","who":"","where":"","when":"","how":"","why":"","claim":"c"}'
        assert parse_5w1h_response(f"```json\n{inner}\n```") == parse_5w1h_response(inner)

    def test_surrounding_prose_tolerated(self):
        inner = '{"what":"a","who":"","where":"","when":"","how":"","why":"","claim":"c"}'
        raw = f"Sure! Here is the analysis:\n{inner}\nHope that helps."
        assert parse_5w1h_response(raw).claim == "c"

    def test_missing_key_names_the_key(self):
        with pytest.raises(SchemaError) as exc:
            parse_5w1h_response('{"what":"a"}')
        assert exc.value.key == "claim"
        with pytest.raises(SchemaError) as exc:
            parse_5w1h_response('{"what":"a","claim":"c"}')
        assert exc.value.key == "who"

    def test_empty_claim_rejected(self):
        raw = '{"what":"a","who":"","where":"","when":"","how":"","why":"","claim":""}'
        with pytest.raises(SchemaError):
            parse_5w1h_response(raw)

    def test_no_json_at_all(self):
        with pytest.raises(ParseError):
            parse_5w1h_response("I cannot analyze this post.")

    def test_round_trip(self):
        record = FiveW1H(what="w", who="x", where="y", when="z",
                         how="h", why="r", claim="the claim stands")
        assert parse_5w1h_response(serialize_5w1h(record)) == record

    def test_nested_braces_in_strings(self):
        raw = ('{"what":"uses {braces}","who":"","where":"","when":"",'
               '"how":"","why":"","claim":"c"}')
        assert parse_5w1h_response(raw).what == "uses {braces}"


def _valid_json(claim="generated claim text"):
    return json.dumps({
        "what": "w", "who": "", "where": "", "when": "",
        "how": "", "why": "", "claim": claim,
    })


class TestAugmentPairs:
    def _pairs(self, n=10):
        return [make_pair(i, f"post {i} content words", f"gold claim {i}") for i in range(n)]

    def test_mock_llm_yields_one_example_per_pair(self):
        pairs = self._pairs()
        llm = MockChatClient(responder=lambda s, u: _valid_json())
        examples, dead = augment_pairs(pairs, llm, concurrency=2)
        assert len(examples) == len(pairs)
        assert dead == []
        assert [e.pair.post.id for e in examples] == [p.post.id for p in pairs]

    def test_gold_claim_replaces_llm_claim(self):
        pairs = self._pairs(3)
        llm = MockChatClient(responder=lambda s, u: _valid_json("llm invented claim"))
        examples, _ = augment_pairs(pairs, llm)
        for ex in examples:
            assert ex.reasoning.claim == ex.pair.claim
            assert ex.reasoning.what == "w"

    def test_cache_hit_skips_llm(self, tmp_path):
        pairs = self._pairs(5)
        cache = ResponseCache(tmp_path / "cache")
        llm = MockChatClient(responder=lambda s, u: _valid_json(), cache=cache)
        first, _ = augment_pairs(pairs, llm)
        calls_after_first = llm.n_calls
        second, _ = augment_pairs(pairs, llm)
        assert llm.n_calls == calls_after_first
        assert first == second

    def test_single_failure_goes_to_dead_letter(self):
        pairs = self._pairs(20)
        bad_id_post = pairs[7].post.text

        def responder(system, user):
            if bad_id_post in user:
                raise ServiceError("injected failure")
            return _valid_json()

        llm = MockChatClient(responder=responder)
        examples, dead = augment_pairs(pairs, llm)
        assert len(examples) == 19
        assert len(dead) == 1
        assert dead[0].pair.post.id == pairs[7].post.id

    def test_excessive_dead_letter_rate_aborts(self):
        pairs = self._pairs(10)

        def responder(system, user):
            raise ServiceError("down")

        with pytest.raises(ServiceError, match="ceiling"):
            augment_pairs(pairs, MockChatClient(responder=responder))

    def test_parse_error_retried_then_succeeds(self):
        pairs = self._pairs(1)
        attempts = []

        def responder(system, user):
            attempts.append(1)
            if len(attempts) < 2:
                return "garbage, not json"
            return _valid_json()

        examples, dead = augment_pairs(pairs, MockChatClient(responder=responder))
        assert len(examples) == 1
        assert len(attempts) == 2

    def test_order_preserved_under_concurrency(self):
        pairs = self._pairs(50)
        llm = MockChatClient(responder=lambda s, u: _valid_json())
        examples, _ = augment_pairs(pairs, llm, concurrency=8)
        assert [e.pair.post.id for e in examples] == [p.post.id for p in pairs]


def test_claim_length_warning_logged(caplog):
    import logging

    with caplog.at_level(logging.WARNING):
        FiveW1H(claim="too short")
    assert any("soft" in r.getMessage() for r in caplog.records)
