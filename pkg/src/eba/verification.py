"""Property checks over run sets.

* :func:`check_eba` -- Agreement, Unique Decision, Validity and Termination;
* :func:`detect_zero_chains` -- the 0-chains of a run;
* :func:`check_implements` -- a concrete protocol against a knowledge-based program;
* :func:`check_domination` -- the decision-time preorder on corresponding runs;
* :func:`check_safety` -- the two-clause safety condition for P0-style programs.

Every failing :class:`Verdict` carries a witness naming the run (with its
scenario, so it can be replayed), the time and the agents involved.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import epistemic as ep
from .core import Action, RunRecord, Scenario
from .protocols import Protocol, get_protocol
from .simulator import enumerate_joint, enumerate_runs, generate_run


@dataclass
class Witness:
    run: int
    time: int
    agents: tuple
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"run": self.run, "time": self.time, "agents": list(self.agents), "detail": self.detail}


@dataclass
class Verdict:
    property: str
    passed: bool
    witness: Optional[Witness] = None
    info: dict = field(default_factory=dict)

    def __bool__(self):
        return self.passed

    def to_dict(self) -> dict:
        return {
            "property": self.property,
            "pass": self.passed,
            "witness": None if self.witness is None else self.witness.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


# -- EBA properties ------------------------------------------------------------------

def _faulty_deliveries(run: RunRecord) -> tuple:
    """(messages from faulty agents delivered to others, delivered to themselves)."""
    others = selfs = 0
    for sent, dl in zip(run.sent, run.delivered):
        for i in range(run.n):
            if (i + 1) in run.nonfaulty:
                continue
            for j in range(run.n):
                if sent[i][j] is not None and dl[i][j]:
                    if i == j:
                        selfs += 1
                    else:
                        others += 1
    return others, selfs


def _witness_order(run: RunRecord) -> tuple:
    """Deterministic preference among violating runs.

    Fewest delivered faulty messages first, then the faulty agents stay
    silent as long as possible, then the lowest-numbered faulty agents and
    highest-numbered receivers.
    """
    first, receivers = run.horizon, []
    for m, (sent, dl) in enumerate(zip(run.sent, run.delivered)):
        for i in range(run.n):
            if (i + 1) in run.nonfaulty:
                continue
            for j in range(run.n):
                if j != i and sent[i][j] is not None and dl[i][j]:
                    first = min(first, m)
                    receivers.append(j + 1)
    faulty = tuple(sorted(run.scenario.pattern.faulty(run.n)))
    return (_faulty_deliveries(run), -first, faulty, tuple(-r for r in sorted(receivers, reverse=True)), run.run_id)


def agreement_violation(run: RunRecord) -> Optional[tuple]:
    """A pair of nonfaulty agents deciding differently, or None."""
    seen = {}
    for i in sorted(run.nonfaulty):
        v = run.decision(i)
        if v is None:
            continue
        for j, w in seen.items():
            if w != v:
                return (j, i)
        seen[i] = v
    return None


def unique_violation(run: RunRecord) -> Optional[int]:
    for i in range(1, run.n + 1):
        if sum(1 for acts in run.actions if acts[i - 1] is not Action.NOOP) > 1:
            return i
    return None


def validity_violation(run: RunRecord) -> Optional[int]:
    for i in range(1, run.n + 1):
        v = run.decision(i)
        if v is not None and v not in run.scenario.inits:
            return i
    return None


def termination_violation(run: RunRecord) -> Optional[int]:
    """A nonfaulty agent that has not decided by round t+2."""
    bound = run.scenario.t + 2
    for i in sorted(run.nonfaulty):
        rnd = run.decision_round(i)
        if rnd is None or rnd > bound:
            return i
    return None


def _witness(run: RunRecord, time: int, agents, **detail) -> Witness:
    detail = dict(detail)
    detail["scenario"] = run.scenario.to_dict()
    return Witness(run.run_id, time, tuple(agents), detail)


def check_eba(runs) -> dict:
    """The four EBA properties over a complete run set, keyed by property name."""
    runs = list(runs)
    out = {}
    bad = [(r, agreement_violation(r)) for r in runs]
    bad = [(r, pair) for r, pair in bad if pair is not None]
    if bad:
        # prefer the violation with the fewest delivered faulty messages
        r, pair = min(bad, key=lambda rp: _witness_order(rp[0]))
        m = max(r.decision_time(a) for a in pair)
        out["agreement"] = Verdict(
            "agreement",
            False,
            _witness(r, m, pair, decisions={str(a): r.decision(a) for a in pair},
                     faulty_deliveries=list(_faulty_deliveries(r))),
        )
    else:
        out["agreement"] = Verdict("agreement", True)

    for name, fn in (("unique_decision", unique_violation), ("validity", validity_violation)):
        v = Verdict(name, True)
        for r in runs:
            a = fn(r)
            if a is not None:
                v = Verdict(name, False, _witness(r, r.horizon, (a,), decision=r.decision(a)))
                break
        out[name] = v

    max_round = 0
    v = Verdict("termination", True)
    for r in runs:
        a = termination_violation(r)
        if a is not None and v.passed:
            v = Verdict("termination", False, _witness(r, r.horizon, (a,), round=r.decision_round(a)))
        for i in r.nonfaulty:
            rnd = r.decision_round(i)
            if rnd is not None:
                max_round = max(max_round, rnd)
    v.info["max_round"] = max_round
    out["termination"] = v
    return out


def replay_witness(verdict: Verdict, protocol: Optional[Protocol] = None) -> bool:
    """Re-run the witness scenario and report whether the violation reappears."""
    if verdict.passed or verdict.witness is None:
        return False
    sc = Scenario.from_dict(dict(verdict.witness.detail["scenario"], allow_large_t=True))
    run = generate_run(sc, protocol)
    fn = {
        "agreement": agreement_violation,
        "unique_decision": unique_violation,
        "validity": validity_violation,
        "termination": termination_violation,
    }[verdict.property]
    return fn(run) is not None


# -- 0-chains ---------------------------------------------------------------------------

def zero_decision_times(run: RunRecord) -> dict:
    """agent -> time at which it first decides 0 (only agents that do)."""
    out = {}
    for i in range(1, run.n + 1):
        m = run.decision_time(i)
        if m is not None and run.actions[m][i - 1] is Action.DECIDE0:
            out[i] = m
    return out


def detect_zero_chains(run: RunRecord) -> list:
    """All maximal 0-chains of a run, as tuples of (agent, decision time).

    A chain i_0, ..., i_k has init(i_0) = 0, each i_x first decides 0 at
    time x (round x+1), and for x >= 1 the round-x message of i_{x-1} to
    i_x was delivered, so i_x learns that i_{x-1} has just decided 0.
    """
    zt = zero_decision_times(run)
    starts = [(i,) for i, m in zt.items() if m == 0 and run.scenario.inits[i - 1] == 0]
    chains = []
    frontier = starts
    while frontier:
        nxt = []
        for ch in frontier:
            x = len(ch)
            last = ch[-1]
            ext = [
                j
                for j, m in zt.items()
                if m == x and j not in ch and run.delivered[x - 1][last - 1][j - 1]
                and run.sent[x - 1][last - 1][j - 1] is not None
            ]
            if ext:
                nxt.extend(ch + (j,) for j in ext)
            else:
                chains.append(ch)
        frontier = nxt
    return [tuple((a, k) for k, a in enumerate(ch)) for ch in chains]


def chain_arrival_times(run: RunRecord) -> dict:
    """agent -> the earliest time at which some 0-chain ends with it."""
    out = {}
    for ch in detect_zero_chains(run):
        for a, k in ch:
            out[a] = min(out.get(a, k), k)
    return out


# -- implements -------------------------------------------------------------------------

def _kbp_choice(system: ep.System, kbp: str, agent: int) -> np.ndarray:
    """Decision chosen by the program at every point (-1 for noop), horizon column excluded."""
    H = system.horizon
    chosen = np.full(system.shape, -1, dtype=np.int8)
    pending = system.decided[agent - 1] < 0
    for formula, act in ep.kbp_guards(kbp, agent, system.n):
        val = system.eval(formula)
        hit = pending & val
        chosen[hit] = act.value_decided
        pending = pending & ~val
    return chosen[:, :H]


def check_implements(protocol, kbp: str, context: str, n: int, t: int, horizon: Optional[int] = None,
                     collapse: bool = False) -> Verdict:
    """Does ``protocol`` act exactly as the knowledge-based program at every reachable point?"""
    if isinstance(protocol, str):
        protocol = get_protocol(protocol)
    kbp = {"kbp-p0": "P0", "kbp-p1": "P1"}.get(kbp, kbp)
    runs = enumerate_runs(n, t, context, protocol, horizon, collapse=collapse)
    system = ep.System(runs)
    name = f"implements:{protocol.name}:{kbp}"
    points = 0
    for a in range(1, n + 1):
        chosen = _kbp_choice(system, kbp, a)
        actual = system.actions[a - 1][:, : system.horizon]
        points += chosen.size
        diff = np.argwhere(chosen != actual)
        if len(diff):
            r, m = (int(x) for x in diff[0])
            return Verdict(name, False, _witness(
                runs[r], m, (a,),
                concrete=int(actual[r, m]), program=int(chosen[r, m]),
            ), {"points": points})
    return Verdict(name, True, info={"points": points, "runs": len(runs)})


# -- domination ---------------------------------------------------------------------------

@dataclass
class DominationResult:
    relation: str  # dominates, dominated, incomparable, equal, disqualified
    disqualified: tuple = ()
    a_earlier: Optional[Witness] = None
    b_earlier: Optional[Witness] = None

    def to_dict(self) -> dict:
        return {
            "relation": self.relation,
            "disqualified": list(self.disqualified),
            "a_earlier": None if self.a_earlier is None else self.a_earlier.to_dict(),
            "b_earlier": None if self.b_earlier is None else self.b_earlier.to_dict(),
        }


def check_domination(a, b, context: str, n: int, t: int, horizon: Optional[int] = None,
                     collapse: bool = False) -> DominationResult:
    """Compare nonfaulty decision times of two protocols on corresponding runs.

    ``dominates`` means ``a`` decides no later everywhere and strictly
    earlier somewhere.  Protocols that fail an EBA property are reported as
    disqualified, since domination is only meaningful among EBA protocols.
    """
    a = get_protocol(a) if isinstance(a, str) else a
    b = get_protocol(b) if isinstance(b, str) else b
    disq = []
    for p in (a, b):
        verdicts = check_eba(enumerate_runs(n, t, context, p, horizon, collapse=collapse))
        if not all(verdicts.values()) and p.name not in disq:
            disq.append(p.name)
    if disq:
        return DominationResult("disqualified", tuple(disq))
    a_first = b_first = None
    inf = float("inf")
    for k, (ra, rb) in enumerate(enumerate_joint(n, t, context, [a, b], horizon, collapse=collapse)):
        for i in sorted(ra.nonfaulty):
            ta, tb = ra.decision_time(i), rb.decision_time(i)
            ta = inf if ta is None else ta
            tb = inf if tb is None else tb
            if ta < tb and a_first is None:
                ra.run_id = k
                a_first = _witness(ra, int(ta), (i,), a_time=ta, b_time=tb)
            if tb < ta and b_first is None:
                rb.run_id = k
                b_first = _witness(rb, int(tb), (i,), a_time=ta, b_time=tb)
        if a_first and b_first:
            break
    if a_first and b_first:
        rel = "incomparable"
    elif a_first:
        rel = "dominates"
    elif b_first:
        rel = "dominated"
    else:
        rel = "equal"
    return DominationResult(rel, (), a_first, b_first)


# -- safety -------------------------------------------------------------------------------------

def check_safety(context: str, protocol, n: int, t: int, horizon: Optional[int] = None,
                 clauses=(1, 2), collapse: bool = False) -> Verdict:
    """Search the run set for the witnesses required by the safety condition.

    Clause 1: an agent that has not received a 0-chain by (r, m) has the same
    local state at some time-m point of a run where every initial value is 1.
    Clause 2: an undecided agent that does not know nobody is deciding 0 has
    the same local state at some (r', m) where it is nonfaulty and a nonfaulty
    j decides 0 in round m+1; for m >= 1, j's state at m must also occur in a
    run r'' where j and some nonfaulty j' deciding 0 in round m are nonfaulty.
    """
    if isinstance(protocol, str):
        protocol = get_protocol(protocol)
    runs = enumerate_runs(n, t, context, protocol, horizon, collapse=collapse)
    S = ep.System(runs)
    H = S.horizon
    nf = S.nonfaulty
    all_one = (S.inits == 1).all(axis=1)
    name = f"safety:{protocol.name}"

    if 1 in clauses:
        arrival = np.full((len(runs), n), np.iinfo(np.int64).max, dtype=np.int64)
        for k, r in enumerate(runs):
            for a, m in chain_arrival_times(r).items():
                arrival[k, a - 1] = m
        for i in range(1, n + 1):
            ids = S.state_id[i - 1]
            for m in range(H + 1):
                allowed = np.unique(ids[all_one, m])
                need = arrival[:, i - 1] > m
                bad = need & ~np.isin(ids[:, m], allowed)
                if bad.any():
                    r = int(np.argmax(bad))
                    return Verdict(name, False, _witness(runs[r], m, (i,), clause=1))

    if 2 in clauses:
        act = S.actions
        for m in range(H):
            prev_zero = np.zeros(len(runs), dtype=bool)
            if m >= 1:
                for j2 in range(n):
                    prev_zero |= nf[:, j2] & (act[j2][:, m - 1] == 0)
            good_j = []
            for j in range(n):
                good_j.append(np.unique(S.state_id[j][nf[:, j] & prev_zero, m]))
            for i in range(1, n + 1):
                ok_run = np.zeros(len(runs), dtype=bool)
                for j in range(n):
                    cand = nf[:, j] & (act[j][:, m] == 0)
                    if m >= 1:
                        cand &= np.isin(S.state_id[j][:, m], good_j[j])
                    ok_run |= cand
                ok_run &= nf[:, i - 1]
                allowed = np.unique(S.state_id[i - 1][ok_run, m])
                know_none = S.eval(ep.K(i, ep.And(tuple(ep.Not(ep.deciding(j, 0)) for j in range(1, n + 1)))))
                need = (~know_none[:, m]) & (S.decided[i - 1][:, m] < 0)
                bad = need & ~np.isin(S.state_id[i - 1][:, m], allowed)
                if bad.any():
                    r = int(np.argmax(bad))
                    return Verdict(name, False, _witness(runs[r], m, (i,), clause=2))
    return Verdict(name, True, info={"runs": len(runs)})
