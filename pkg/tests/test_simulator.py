import itertools

import pytest
from hypothesis import given, settings, strategies as st

from eba.core import Action, FailurePattern, Scenario, validate_failure_pattern
from eba.exchange import MinLocalState
from eba.protocols import NAIVE0, PMIN, Protocol, get_protocol
from eba.simulator import (
    EnumerationTooLarge,
    corresponding_run,
    enumerate_joint,
    enumerate_runs,
    generate_run,
    initial_global,
    observed_omissions,
    step_round,
    trace_lines,
)

from conftest import make_scenario, silent_example, simulate


def run_key(run):
    return (run.scenario.inits, run.nonfaulty, tuple(run.states), tuple(run.actions), observed_omissions(run))


def brute_force_keys(n, t, context, protocol, horizon):
    """Every raw omission table of every faulty set, simulated and deduplicated."""
    keys = set()
    proto = get_protocol(protocol)
    for inits in itertools.product((0, 1), repeat=n):
        for k in range(t + 1):
            for faulty in itertools.combinations(range(1, n + 1), k):
                slots = [(m, i, j) for m in range(horizon) for i in faulty for j in range(1, n + 1)]
                nonfaulty = frozenset(range(1, n + 1)) - set(faulty)
                for bits in itertools.product((0, 1), repeat=len(slots)):
                    om = frozenset(s for s, b in zip(slots, bits) if b)
                    sc = Scenario(n, t, context, protocol, inits, FailurePattern(nonfaulty, om), horizon)
                    keys.add(run_key(generate_run(sc, proto)))
    return keys


@pytest.mark.parametrize("context,protocol", [("min", "pmin"), ("basic", "pbasic")])
def test_reactive_enumeration_equals_raw_tables(context, protocol):
    runs = enumerate_runs(3, 1, context, protocol, horizon=4)
    keys = [run_key(r) for r in runs]
    assert len(set(keys)) == len(keys)
    assert set(keys) == brute_force_keys(3, 1, context, protocol, 4)


def test_min_round_without_messages():
    g = initial_global("min", 3, (1, 1, 1), FailurePattern.silent(3, [2], 4))
    g2, actions, sent, _ = step_round("min", PMIN, g, 0, 3, 1)
    assert all(p is None for row in sent for p in row)
    assert g2.locals == (MinLocalState(1, 1),) * 3


def test_min_zero_spreads_in_round_two():
    run = simulate(3, 1, "min", "pmin", (0, 1, 1))
    assert run.actions[0] == (Action.DECIDE0, Action.NOOP, Action.NOOP)
    assert run.sent[0][0] == (0, 0, 0)
    assert run.states[1][1].rd == 0 and run.states[1][2].rd == 0
    assert run.actions[1][1:] == (Action.DECIDE0, Action.DECIDE0)


def test_fip_graph_grows_each_round():
    run = simulate(3, 1, "fip", "popt", (1, 0, 1))
    for m, states in enumerate(run.states):
        assert all(s.graph.horizon == m for s in states)


def test_generate_run_examples():
    run = simulate(2, 0, "min", "pmin", (0, 0))
    assert [run.decision_round(i) for i in (1, 2)] == [1, 1]
    popt = generate_run(silent_example("popt", "fip"))
    assert {popt.decision_round(i) for i in popt.nonfaulty} == {3}
    assert {popt.decision(i) for i in popt.nonfaulty} == {1}
    for context in ("min", "basic"):
        pmin = generate_run(silent_example("pmin", context))
        assert {pmin.decision_round(i) for i in pmin.nonfaulty} == {12}


def test_two_agents_without_failures():
    runs = enumerate_runs(2, 0, "min", "pmin")
    assert len(runs) == 4
    assert sorted(r.scenario.inits for r in runs) == [(0, 0), (0, 1), (1, 0), (1, 1)]


@pytest.mark.parametrize("context,protocol", [("min", "pmin"), ("basic", "pbasic"), ("fip", "popt")])
def test_enumerated_runs_are_valid_and_synchronous(context, protocol):
    for run in enumerate_runs(3, 1, context, protocol):
        assert validate_failure_pattern(run.scenario.pattern, 3, 1, run.horizon).ok
        for m, states in enumerate(run.states):
            assert all(s.time == m for s in states)
        for m, acts in enumerate(run.actions):
            for i, a in enumerate(acts):
                if a is not Action.NOOP:
                    assert all(d[i] == a.value_decided for d in run.decided[m + 1:])


def test_enumeration_refuses_oversized_requests():
    with pytest.raises(EnumerationTooLarge):
        enumerate_runs(4, 1, "fip", "popt")
    with pytest.raises(EnumerationTooLarge) as e:
        enumerate_runs(3, 1, "basic", "pbasic", limit=10, inits_filter=lambda v: True)
    assert e.value.limit == 10


def test_determinism():
    sc = make_scenario(3, 1, "fip", "popt", (0, 1, 1), FailurePattern(frozenset({1, 3}), frozenset({(0, 2, 1)})))
    a, b = generate_run(sc), generate_run(sc)
    assert a.states == b.states and a.actions == b.actions and a.delivered == b.delivered
    assert trace_lines(a) == trace_lines(b)


def test_corresponding_runs():
    run = simulate(3, 1, "fip", "popt", (1, 0, 1), FailurePattern(frozenset({1, 3}), frozenset({(0, 2, 3)})))
    same = corresponding_run(run, get_protocol("popt"))
    assert same.states == run.states and same.actions == run.actions
    naive = corresponding_run(run, NAIVE0)
    assert naive.states == run.states


def test_fip_corresponding_runs_share_states(fip_popt_runs):
    joint = enumerate_joint(3, 1, "fip", [get_protocol("popt"), NAIVE0])
    for ra, rb in itertools.islice(joint, 0, None, 101):
        assert ra.states == rb.states
        assert ra.scenario.pattern == rb.scenario.pattern


def early_one_action(state, decided, n, t):
    if state.decided is not None:
        return Action.NOOP
    if state.init == 0 or state.rd == 0:
        return Action.DECIDE0
    if state.time == t:
        return Action.DECIDE1
    return Action.NOOP


EARLY_ONE = Protocol("pmin-early1", ("min",), early_one_action)


def test_min_corresponding_runs_diverge():
    a = simulate(3, 1, "min", "pmin", (1, 1, 1))
    b = corresponding_run(a, EARLY_ONE)
    assert a.states[1] == b.states[1]
    assert b.states[2][0].rd == 1 and a.states[2][0].rd is None


@st.composite
def omission_scenarios(draw, context):
    n, t = 3, 1
    inits = tuple(draw(st.lists(st.sampled_from((0, 1)), min_size=n, max_size=n)))
    faulty = draw(st.sets(st.integers(1, n), max_size=t))
    slots = [(m, i, j) for m in range(t + 3) for i in sorted(faulty) for j in range(1, n + 1)]
    om = frozenset(draw(st.sets(st.sampled_from(slots))) if slots else ())
    protocol = {"min": "pmin", "basic": "pbasic", "fip": "popt"}[context]
    pat = FailurePattern(frozenset(range(1, n + 1)) - faulty, om)
    return make_scenario(n, t, context, protocol, inits, pat)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["min", "basic", "fip"]).flatmap(omission_scenarios))
def test_random_scenarios_replay_and_agree(sc):
    a, b = generate_run(sc), generate_run(sc)
    assert a.states == b.states and a.decided == b.decided
    assert all(s.time == m for m, states in enumerate(a.states) for s in states)
    decisions = {a.decision(i) for i in a.nonfaulty}
    assert None not in decisions and len(decisions) == 1
    assert decisions <= set(sc.inits)
    # the run is one of the enumerated runs
    from conftest import locate

    locate(enumerate_runs(3, 1, sc.context, sc.protocol), a)
