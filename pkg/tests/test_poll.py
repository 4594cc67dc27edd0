import json

import pytest
from hypothesis import given, strategies as st

from rrdoe.poll import (Alternative, PollParseError, PollSchemaError, PollTree,
                        PollValidationError, Question, ScenarioParams, build_spine_poll,
                        load_poll, save_poll, validate_poll)


def count_leaves(q):
    return sum(1 if a.follow_up is None else count_leaves(a.follow_up) for a in q.alternatives)


class TestSpine:
    def test_single_question(self):
        poll = build_spine_poll(1, 2, 0.9)
        assert [a.weight for a in poll.root.alternatives] == pytest.approx([0.9, 0.1])
        assert poll.target_path == (("q1", "q1a1"),)
        assert poll.root.alternatives[0].follow_up is None

    def test_symmetric_depth_two(self):
        poll = build_spine_poll(2, 2, 0.5)
        root = poll.root
        assert root.weights == [0.5, 0.5]
        assert root.alternatives[0].follow_up.weights == [0.5, 0.5]
        assert root.alternatives[1].follow_up is None

    @given(depth=st.integers(1, 6), alts=st.integers(2, 10), w=st.floats(0.01, 0.99))
    def test_structure(self, depth, alts, w):
        poll = build_spine_poll(depth, alts, w)
        assert count_leaves(poll.root) == depth * (alts - 1) + 1
        assert len(poll.leaves()) == depth * (alts - 1) + 1
        assert len(poll.target_path) == depth
        for q in poll.questions():
            assert abs(sum(q.weights) - 1) <= 1e-9
        assert validate_poll(poll).ok

    @pytest.mark.parametrize("args", [(0, 2, 0.5), (2, 1, 0.5), (2, 2, 1.0), (2, 2, 0.0)])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            build_spine_poll(*args)


class TestValidate:
    def test_bad_weights(self):
        q = Question("q", [Alternative("a", 0.6), Alternative("b", 0.6)])
        report = validate_poll(PollTree(q, [("q", "a")]))
        assert not report.ok
        assert any("sum" in v for v in report.violations)

    def test_target_not_leaf(self):
        poll = build_spine_poll(2, 2, 0.5)
        report = validate_poll(PollTree(poll.root, [("q1", "q1a1")]))
        assert any("target not a leaf" in v for v in report.violations)

    def test_dangling_target(self):
        poll = build_spine_poll(1, 3, 0.5)
        report = validate_poll(PollTree(poll.root, [("q1", "nope")]))
        assert not report.ok

    def test_duplicate_question_ids(self):
        inner = Question("q", [Alternative("a", 0.5), Alternative("b", 0.5)])
        root = Question("q", [Alternative("a", 0.5, inner), Alternative("b", 0.5)])
        report = validate_poll(PollTree(root, [("q", "a"), ("q", "a")]))
        assert any("duplicate question id" in v for v in report.violations)


class TestJson:
    def test_round_trip(self):
        poll = build_spine_poll(1, 2, 0.9)
        assert load_poll(save_poll(poll)) == poll

    @given(depth=st.integers(1, 4), alts=st.integers(2, 5), w=st.floats(0.05, 0.95))
    def test_save_is_byte_stable(self, depth, alts, w):
        text = save_poll(build_spine_poll(depth, alts, w))
        assert save_poll(load_poll(text)) == text

    def test_missing_weight_names_field(self):
        obj = json.loads(save_poll(build_spine_poll(1, 2, 0.5)))
        del obj["alternatives"][1]["weight"]
        with pytest.raises(PollSchemaError, match="weight"):
            load_poll(json.dumps(obj))

    def test_malformed_json_reports_location(self):
        with pytest.raises(PollParseError, match="line 1"):
            load_poll('{"id": "q1", ')

    def test_invalid_poll_rejected(self):
        obj = json.loads(save_poll(build_spine_poll(1, 2, 0.5)))
        obj["alternatives"][0]["weight"] = 0.7
        with pytest.raises(PollValidationError):
            load_poll(json.dumps(obj))

    def test_hand_written_depth_three(self):
        def q(qid, follow=None):
            return {"id": qid, "alternatives": [
                {"id": qid + "-yes", "weight": 0.25, "follow_up": follow},
                {"id": qid + "-no", "weight": 0.75, "follow_up": None}]}
        obj = q("a", q("b", q("c")))
        obj["target_path"] = [["a", "a-yes"], ["b", "b-yes"], ["c", "c-yes"]]
        poll = load_poll(json.dumps(obj))
        assert len(poll.target_path) == 3
        assert [alt.id for _, alt in poll.chain()] == ["a-yes", "b-yes", "c-yes"]


def test_scenario_ranges():
    ScenarioParams(0.5, 3, 6, 0.5, 50500, 0.5)
    with pytest.raises(ValueError):
        ScenarioParams(0.5, 0, 6, 0.5, 50500, 0.5)
    with pytest.raises(ValueError):
        ScenarioParams(0.5, 3, 6, 0.5, 50500, 1.0)
