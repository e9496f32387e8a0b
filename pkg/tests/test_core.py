import json

import pytest
from hypothesis import given, strategies as st

from eba.core import (
    Action,
    FailurePattern,
    Scenario,
    ScenarioError,
    is_crash_pattern,
    validate_failure_pattern,
)

from conftest import make_scenario


def test_all_deliver_pattern_is_valid():
    for t in range(0, 3):
        assert validate_failure_pattern(FailurePattern.failure_free(4), 4, t, 5).ok


def test_nonfaulty_sender_omission_is_reported():
    pat = FailurePattern(frozenset({1, 2, 3}), frozenset({(0, 2, 3)}))
    check = validate_failure_pattern(pat, 3, 1, 4)
    assert not check.ok
    assert check.offending == (0, 2, 3)


def test_faulty_agent_omitting_everything_is_valid():
    pat = FailurePattern.silent(3, [1], 4)
    assert validate_failure_pattern(pat, 3, 1, 4).ok


def test_too_many_faulty_agents():
    pat = FailurePattern(frozenset({3}))
    check = validate_failure_pattern(pat, 3, 1, 4)
    assert not check.ok
    assert "faulty" in check.reason


def test_crash_patterns():
    assert is_crash_pattern(FailurePattern.failure_free(3), 3, 4)
    assert is_crash_pattern(FailurePattern.silent(3, [1], 4, from_round=1), 3, 4)
    single = FailurePattern(frozenset({2, 3}), frozenset({(0, 1, 3)}))
    assert not is_crash_pattern(single, 3, 4)


@st.composite
def crash_patterns(draw, n=4, t=2, horizon=5):
    faulty = draw(st.sets(st.integers(1, n), max_size=t))
    om = set()
    for i in faulty:
        start = draw(st.integers(0, horizon))
        # in the crash round an arbitrary subset of receivers is missed
        partial = draw(st.sets(st.integers(1, n)))
        for j in partial:
            if start < horizon:
                om.add((start, i, j))
        for m in range(start + 1, horizon):
            for j in range(1, n + 1):
                om.add((m, i, j))
    return FailurePattern(frozenset(range(1, n + 1)) - faulty, frozenset(om))


@given(crash_patterns())
def test_crash_patterns_are_valid_so_patterns(pat):
    assert is_crash_pattern(pat, 4, 5)
    assert validate_failure_pattern(pat, 4, 2, 5).ok


def test_action_helpers():
    assert Action.decide(0) is Action.DECIDE0
    assert Action.decide(1).value_decided == 1
    assert Action.NOOP.value_decided is None


def test_scenario_json_roundtrip():
    pat = FailurePattern(frozenset({2, 3}), frozenset({(0, 1, 2), (1, 1, 3)}))
    sc = make_scenario(3, 1, "min", "pmin", (0, 1, 1), pat)
    d = json.loads(sc.to_json())
    assert list(d) == ["n", "t", "context", "protocol", "inits", "faulty", "omissions", "horizon"]
    assert d["faulty"] == [1]
    assert Scenario.from_json(sc.to_json()) == sc


def test_scenario_rejects_bad_input():
    with pytest.raises(ScenarioError) as e:
        Scenario.from_json('{"n": 3,')
    assert "line 1" in str(e.value)
    with pytest.raises(ScenarioError):
        make_scenario(3, 2, "min", "pmin", (1, 1, 1)).validate()
    with pytest.raises(ScenarioError):
        make_scenario(3, 1, "min", "pmin", (1, 1, 1), horizon=3).validate()
    with pytest.raises(ScenarioError):
        make_scenario(3, 1, "min", "pmin", (1, 2, 1)).validate()
