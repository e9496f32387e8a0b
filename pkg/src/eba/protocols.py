"""Action protocols and the knowledge-based programs they implement.

Every concrete protocol is a :class:`Protocol` whose ``action`` method maps
(local state, decision ledger value, n, t) to an :class:`Action`.  In the
``min`` and ``basic`` contexts the ledger value duplicates ``state.decided``;
in ``fip`` it is the only record of a decision.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

from . import commgraph as cg
from .core import Action


@dataclass(frozen=True)
class Protocol:
    name: str
    contexts: tuple
    fn: Callable = None

    def action(self, state, decided: Optional[int], n: int, t: int) -> Action:
        return self.fn(state, decided, n, t)

    def supports(self, context: str) -> bool:
        return context in self.contexts


def pmin_action(state, t: int) -> Action:
    if state.decided is not None:
        return Action.NOOP
    if state.init == 0 or state.rd == 0:
        return Action.DECIDE0
    if state.time == t + 1:
        return Action.DECIDE1
    return Action.NOOP


def pbasic_action(state, n: int) -> Action:
    if state.decided is not None:
        return Action.NOOP
    if state.init == 0 or state.rd == 0:
        return Action.DECIDE0
    if state.count1 > n - state.time or state.rd == 1:
        return Action.DECIDE1
    return Action.NOOP


@lru_cache(maxsize=None)
def _popt_undecided(G: cg.CommGraph, t: int) -> Action:
    i, m = G.owner + 1, G.horizon
    if cg.common_v(i, m, G, 0, POPT, t):
        return Action.DECIDE0
    if cg.common_v(i, m, G, 1, POPT, t):
        return Action.DECIDE1
    if cg.cond0(i, m, G, POPT, t):
        return Action.DECIDE0
    if cg.cond1(i, m, G, POPT, t):
        return Action.DECIDE1
    return Action.NOOP


def popt_action(state, decided: Optional[int], n: int, t: int) -> Action:
    """The optimal full-information protocol; ``decided`` comes from the ledger."""
    if decided is not None:
        return Action.NOOP
    return _popt_undecided(state.graph, t)


def knows_some_zero(state) -> bool:
    """Does the agent's local state reveal that some initial value is 0?"""
    if state.init == 0:
        return True
    if hasattr(state, "graph"):
        return 0 in state.graph.prefs
    return state.rd == 0


def naive_zero_eager_action(state, decided: Optional[int], n: int, t: int) -> Action:
    """Decide 0 as soon as a 0 is known to exist; otherwise decide 1 at time t+1."""
    if decided is not None:
        return Action.NOOP
    if knows_some_zero(state):
        return Action.DECIDE0
    if state.time == t + 1:
        return Action.DECIDE1
    return Action.NOOP


PMIN = Protocol("pmin", ("min", "basic"), lambda s, d, n, t: pmin_action(s, t))
PBASIC = Protocol("pbasic", ("basic",), lambda s, d, n, t: pbasic_action(s, n))
POPT = Protocol("popt", ("fip",), popt_action)
NAIVE0 = Protocol("naive0", ("min", "basic", "fip"), naive_zero_eager_action)

REGISTRY = {p.name: p for p in (PMIN, PBASIC, POPT, NAIVE0)}
KBP_IDS = {"kbp-p0": "P0", "kbp-p1": "P1"}


def register(protocol: Protocol) -> Protocol:
    REGISTRY[protocol.name] = protocol
    return protocol


def get_protocol(name: str) -> Protocol:
    try:
        return REGISTRY[name]
    except KeyError:
        if name in KBP_IDS:
            raise ValueError(
                f"{name} is a knowledge-based program; evaluate it against a concrete "
                "implementation (check implements)"
            ) from None
        raise ValueError(f"unknown protocol {name!r}") from None


def clear_caches() -> None:
    _popt_undecided.cache_clear()
    cg.clear_caches()


# -- knowledge-based programs ----------------------------------------------------

def kbp_action(kbp: str, system, run_index: int, time: int, agent: int) -> Action:
    """Action selected by the knowledge-based program at a point of ``system``.

    ``system`` is an :class:`eba.epistemic.System` built from the complete
    run set of a candidate implementation.
    """
    from . import epistemic as ep

    if system.decided[agent - 1][run_index, time] >= 0:
        return Action.NOOP
    for formula, act in ep.kbp_guards(kbp, agent, system.n):
        if system.eval_at(formula, run_index, time):
            return act
    return Action.NOOP
