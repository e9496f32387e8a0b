"""Synchronous round engine and exhaustive adversary enumeration.

Each round: every agent picks an action from its local state, selects its
messages, the adversary drops some messages of faulty senders, and every
agent updates its state from what arrived.

Enumeration is reactive: the adversary only branches on messages that a
faulty agent actually sends (a non-None payload).  Unsent messages and
messages of nonfaulty agents never branch.  A run is identified by its
initial values, its nonfaulty set and the set of omitted messages that were
actually sent.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Optional, Sequence

from . import exchange as ex
from .core import FailurePattern, RunRecord, Scenario
from .protocols import Protocol, get_protocol

# Desk-scale ceilings for the number of enumerated runs.
MAX_RUNS = 3_000_000


class EnumerationTooLarge(RuntimeError):
    def __init__(self, estimate: int, limit: int):
        super().__init__(f"enumeration would visit about {estimate} runs (limit {limit})")
        self.estimate = estimate
        self.limit = limit


@dataclass(frozen=True)
class GlobalState:
    pattern: FailurePattern
    locals: tuple
    decided: tuple


def _actions(protocol: Protocol, n: int, t: int, locals_: tuple, decided: tuple) -> tuple:
    return tuple(protocol.action(locals_[i], decided[i], n, t) for i in range(n))


def _advance(context: str, n: int, locals_: tuple, decided: tuple, actions: tuple, sent: tuple, delivered: tuple):
    new_locals = []
    for j in range(n):
        inbox = [sent[i][j] if delivered[i][j] else None for i in range(n)]
        new_locals.append(ex.apply_transition(context, locals_[j], actions[j], inbox))
    new_decided = tuple(
        d if d is not None else a.value_decided for d, a in zip(decided, actions)
    )
    return tuple(new_locals), new_decided


def step_round(context: str, protocol: Protocol, g: GlobalState, m: int, n: int, t: int):
    """One round from time m; returns (next global state, actions, sent, delivered)."""
    actions = _actions(protocol, n, t, g.locals, g.decided)
    sent = tuple(ex.select_messages(context, g.locals[i], actions[i], n) for i in range(n))
    delivered = tuple(
        tuple(sent[i][j] is None or g.pattern.deliver(m, i + 1, j + 1) for j in range(n))
        for i in range(n)
    )
    locals_, decided = _advance(context, n, g.locals, g.decided, actions, sent, delivered)
    return GlobalState(g.pattern, locals_, decided), actions, sent, delivered


def initial_global(context: str, n: int, inits: Sequence[int], pattern: FailurePattern) -> GlobalState:
    locals_ = tuple(ex.initial_state(context, i + 1, inits[i], n) for i in range(n))
    return GlobalState(pattern, locals_, (None,) * n)



def generate_run(scenario: Scenario, protocol: Optional[Protocol] = None) -> RunRecord:
    """Deterministically simulate a scenario up to its horizon."""
    scenario.validate()
    protocol = protocol or get_protocol(scenario.protocol)
    if not protocol.supports(scenario.context):
        raise ValueError(f"protocol {protocol.name} does not run in context {scenario.context}")
    n, t = scenario.n, scenario.t
    g = initial_global(scenario.context, n, scenario.inits, scenario.pattern)
    states, actions, sents, dels, decided = [g.locals], [], [], [], [g.decided]
    for m in range(scenario.horizon):
        g, acts, sent, delivered = step_round(scenario.context, protocol, g, m, n, t)
        actions.append(acts)
        sents.append(sent)
        dels.append(delivered)
        states.append(g.locals)
        decided.append(g.decided)
    return RunRecord(scenario, states, actions, sents, dels, decided)


def observed_omissions(run: RunRecord) -> frozenset:
    """Omitted messages that were actually sent (the canonical pattern of a run)."""
    out = set()
    for m, (sent, dl) in enumerate(zip(run.sent, run.delivered)):
        for i, row in enumerate(sent):
            for j, p in enumerate(row):
                if p is not None and not dl[i][j]:
                    out.add((m, i + 1, j + 1))
    return frozenset(out)


def corresponding_run(run: RunRecord, other: Protocol) -> RunRecord:
    """The run of ``other`` from the same initial state under the same failure pattern."""
    sc = run.scenario
    sc2 = Scenario(sc.n, sc.t, sc.context, other.name, sc.inits, sc.pattern, sc.horizon, sc.allow_large_t)
    return generate_run(sc2, other)


# -- enumeration ----------------------------------------------------------------

def faulty_sets(n: int, t: int):
    for k in range(t + 1):
        for c in itertools.combinations(range(1, n + 1), k):
            yield frozenset(c)


def enumeration_bounds_ok(n: int, context: str) -> bool:
    return n <= (3 if context == "fip" else 4)


def estimate_run_count(n: int, t: int, context: str, horizon: int) -> int:
    """Upper bound on the number of reactive runs: every faulty message live every round."""
    total = 0
    for k in range(t + 1):
        ways = len(list(itertools.combinations(range(n), k)))
        total += ways * 2 ** (k * n * horizon)
    return total * 2 ** n


def enumerate_joint(
    n: int,
    t: int,
    context: str,
    protocols: Sequence[Protocol],
    horizon: Optional[int] = None,
    inits_filter=None,
    limit: int = MAX_RUNS,
    collapse: bool = False,
) -> Iterator[tuple]:
    """Yield tuples of corresponding runs, one per protocol, over all adversaries.

    The adversary branches on every message a faulty agent sends in at least
    one of the protocols' runs; the same delivery choice applies to all.

    With ``collapse`` set, sibling branches that lead to the same next global
    states (for every protocol) are merged and a single representative
    delivery choice is kept.  Truth of every epistemic formula, decisions and
    bits sent depend only on the nonfaulty set and the sequence of local
    states, so the collapsed set is equivalent for all checks.
    """
    horizon = t + 3 if horizon is None else horizon
    for p in protocols:
        if not p.supports(context):
            raise ValueError(f"protocol {p.name} does not run in context {context}")
    k = len(protocols)
    count = 0
    agents = frozenset(range(1, n + 1))
    for inits in itertools.product((0, 1), repeat=n):
        if inits_filter is not None and not inits_filter(inits):
            continue
        for faulty in faulty_sets(n, t):
            fidx = sorted(a - 1 for a in faulty)
            start = [initial_global(context, n, inits, FailurePattern(agents - faulty)) for _ in range(k)]
            # stack entries: (m, per-protocol globals, per-protocol history, omissions)
            hist0 = [([g.locals], [], [], [], [g.decided]) for g in start]
            stack = [(0, start, hist0, frozenset())]
            while stack:
                m, gs, hist, om = stack.pop()
                if m == horizon:
                    count += 1
                    if count > limit:
                        raise EnumerationTooLarge(estimate_run_count(n, t, context, horizon), limit)
                    pattern = FailurePattern(agents - faulty, om)
                    out = []
                    for p, (st, ac, se, de, dc) in zip(protocols, hist):
                        sc = Scenario(n, t, context, p.name, inits, pattern, horizon, allow_large_t=True)
                        out.append(RunRecord(sc, st, ac, se, de, dc))
                    yield tuple(out)
                    continue
                acts = [_actions(p, n, t, g.locals, g.decided) for p, g in zip(protocols, gs)]
                sents = [
                    tuple(ex.select_messages(context, g.locals[i], a[i], n) for i in range(n))
                    for g, a in zip(gs, acts)
                ]
                new_decided = [
                    tuple(d if d is not None else x.value_decided for d, x in zip(g.decided, a))
                    for g, a in zip(gs, acts)
                ]
                # per receiver: the possible (dropped senders, next local states) choices
                per_receiver = []
                for j in range(n):
                    live = [i for i in fidx if any(sn[i][j] is not None for sn in sents)]
                    opts = {}
                    for bits in range(1 << len(live)):
                        dropped = frozenset(live[b] for b in range(len(live)) if (bits >> b) & 1)
                        nxt = tuple(
                            ex.apply_transition(
                                context,
                                g.locals[j],
                                a[j],
                                [None if (i in dropped or sn[i][j] is None) else sn[i][j] for i in range(n)],
                            )
                            for g, a, sn in zip(gs, acts, sents)
                        )
                        key = nxt if collapse else dropped
                        if key not in opts:
                            opts[key] = (dropped, nxt)
                    per_receiver.append(list(opts.values()))
                children = []
                for combo in itertools.product(*per_receiver):
                    new_gs, new_hist = [], []
                    for k_, (g, a, sn, (st, ac, se, de, dc)) in enumerate(zip(gs, acts, sents, hist)):
                        locals_ = tuple(c[1][k_] for c in combo)
                        decided = new_decided[k_]
                        new_gs.append(GlobalState(g.pattern, locals_, decided))
                        dl_p = tuple(
                            tuple(sn[i][j] is None or i not in combo[j][0] for j in range(n)) for i in range(n)
                        )
                        new_hist.append((st + [locals_], ac + [a], se + [sn], de + [dl_p], dc + [decided]))
                    om2 = om | {(m, i + 1, j + 1) for j in range(n) for i in combo[j][0]}
                    children.append((m + 1, new_gs, new_hist, frozenset(om2)))
                stack.extend(reversed(children))


def enumerate_runs(
    n: int,
    t: int,
    context: str,
    protocol,
    horizon: Optional[int] = None,
    inits_filter=None,
    limit: int = MAX_RUNS,
    check_bounds: bool = True,
    collapse: bool = False,
) -> list:
    """All runs of ``protocol`` in ``context``, one per reactive adversary class.

    See :func:`enumerate_joint` for ``collapse``.  Complete (unfiltered) run
    sets are cached, so repeated calls return the same RunRecord objects.
    """
    if isinstance(protocol, str):
        protocol = get_protocol(protocol)
    horizon = t + 3 if horizon is None else horizon
    if check_bounds and not enumeration_bounds_ok(n, context):
        raise EnumerationTooLarge(estimate_run_count(n, t, context, horizon), limit)
    if inits_filter is None:
        return list(_cached_runs(n, t, context, protocol, horizon, limit, collapse))
    return _number(enumerate_joint(n, t, context, [protocol], horizon, inits_filter, limit, collapse))


def _number(joint) -> list:
    runs = [rs[0] for rs in joint]
    for k, r in enumerate(runs):
        r.run_id = k
    return runs


@lru_cache(maxsize=6)
def _cached_runs(n, t, context, protocol, horizon, limit, collapse) -> tuple:
    return tuple(_number(enumerate_joint(n, t, context, [protocol], horizon, None, limit, collapse)))


# -- trace dump -------------------------------------------------------------------

def _state_json(s):
    if isinstance(s, ex.FipLocalState):
        G = s.graph
        return {
            "time": s.time,
            "init": s.init,
            "prefs": list(G.pref_labels()),
            "heard_last": [max((x for x, mk in enumerate(G.owner_heard()) if (mk >> j) & 1), default=-1) for j in range(G.n)],
        }
    d = {"time": s.time, "init": s.init, "decided": s.decided, "rd": s.rd}
    if isinstance(s, ex.BasicLocalState):
        d["count1"] = s.count1
    return d


def _payload_json(p):
    if p is None:
        return None
    if isinstance(p, ex.CommGraph):
        return f"G(h={p.horizon})"
    return p


def trace_lines(run: RunRecord) -> list:
    """Line-oriented JSON: one object per time index."""
    lines = []
    for m in range(run.horizon + 1):
        obj = {
            "time": m,
            "states": [_state_json(s) for s in run.states[m]],
            "decided": list(run.decided[m]),
        }
        if m < run.horizon:
            obj["actions"] = [a.value for a in run.actions[m]]
            obj["sent"] = [[_payload_json(p) for p in row] for row in run.sent[m]]
            obj["delivered"] = [[int(x) for x in row] for row in run.delivered[m]]
        lines.append(json.dumps(obj, sort_keys=True))
    return lines
