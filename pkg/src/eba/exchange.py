"""Information-exchange protocols: local states, message selection and state update.

Three contexts are supported:

* ``min``   -- agents remember (time, init, decided, rd) and only announce decisions;
* ``basic`` -- as ``min`` plus a count of ``(init,1)`` announcements heard last round;
* ``fip``   -- full information: agents broadcast their communication graph every round.

Payloads for ``min``/``basic`` are the ints 0 and 1 (decision announcements),
the marker ``INIT1`` and ``None`` for no message.  In ``fip`` the payload is
always the sender's current graph.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .commgraph import CommGraph, initial_graph, merge_graphs
from .core import Action

INIT1 = "init1"


@dataclass(frozen=True)
class MinLocalState:
    time: int
    init: int
    decided: Optional[int] = None
    rd: Optional[int] = None


@dataclass(frozen=True)
class BasicLocalState:
    time: int
    init: int
    decided: Optional[int] = None
    rd: Optional[int] = None
    count1: int = 0


@dataclass(frozen=True)
class FipLocalState:
    """Full-information state; the decision ledger is kept outside the state."""

    time: int
    init: int
    graph: CommGraph


def initial_state(context: str, agent: int, init: int, n: int):
    if context == "min":
        return MinLocalState(0, init)
    if context == "basic":
        return BasicLocalState(0, init)
    if context == "fip":
        return FipLocalState(0, init, initial_graph(n, agent, init))
    raise ValueError(f"unknown context {context!r}")


def message_class(payload) -> str:
    """M0 / M1 for decision announcements, M2 for everything else (including no message)."""
    if isinstance(payload, int) and not isinstance(payload, bool):
        return "M0" if payload == 0 else "M1"
    return "M2"


def select_messages(context: str, state, action: Action, n: int) -> tuple:
    """The per-recipient payloads an agent sends this round (recipients 1..n, self included)."""
    if context == "fip":
        return (state.graph,) * n
    v = action.value_decided
    if v is not None:
        return (v,) * n
    if (
        context == "basic"
        and action is Action.NOOP
        and state.init == 1
        and state.decided is None
        and state.rd is None
    ):
        return (INIT1,) * n
    return (None,) * n


def apply_transition(context: str, state, action: Action, inbox: Sequence, n: Optional[int] = None):
    """State after one round, given this round's action and the delivered payloads.

    ``inbox[a]`` is the payload delivered from agent a+1 (None if nothing arrived).
    """
    if n is not None and len(inbox) != n:
        raise ValueError(f"inbox has {len(inbox)} slots, expected {n}")
    if context == "fip":
        g = merge_graphs(state.graph, list(inbox))
        return FipLocalState(state.time + 1, state.init, g)
    if context in ("min", "basic"):
        decided = state.decided
        v = action.value_decided
        if v is not None:
            decided = v
        got0 = any(p == 0 for p in inbox)
        got1 = any(p == 1 for p in inbox)
        rd = 0 if got0 else (1 if got1 else None)
        if context == "min":
            return MinLocalState(state.time + 1, state.init, decided, rd)
        if decided is None and rd is None:
            count1 = sum(1 for p in inbox if p == INIT1)
        else:
            count1 = 0
        return BasicLocalState(state.time + 1, state.init, decided, rd, count1)
    raise ValueError(f"unknown context {context!r}")


def payload_bits(payload, n: int) -> int:
    """Bit size of a single payload: decisions 1 bit, (init,1) 2 bits, graphs 2*n*n*m bits."""
    if payload is None:
        return 0
    if isinstance(payload, CommGraph):
        return 2 * n * n * payload.horizon
    if payload == INIT1:
        return 2
    return 1
