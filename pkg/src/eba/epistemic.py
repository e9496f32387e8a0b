"""Epistemic model checking over complete run sets.

A :class:`System` holds an enumerated run set as numpy arrays indexed by
(run, time).  Formulas are small frozen dataclasses; ``System.eval`` returns
a boolean array of the formula's truth value at every point, and
``System.defined`` the mask of points where it is defined (the next-time
operator is undefined at the horizon).

Knowledge ``K_i`` quantifies over all points where agent i has the same
local state.  Since time is part of every local state, such points always
share the time index.  ``C_N`` is the greatest fixpoint of
``X = E_N(phi and X)`` with N read per run.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Action


class UndefinedAtPoint(ValueError):
    """A formula that uses the next-time operator was evaluated at the horizon."""


class FormulaSyntaxError(ValueError):
    pass


# -- formula AST ------------------------------------------------------------------

class Formula:
    def __and__(self, other):
        return And((self, other))

    def __or__(self, other):
        return Or((self, other))

    def __invert__(self):
        return Not(self)


@dataclass(frozen=True)
class Const(Formula):
    value: bool


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True)
class Init(Formula):
    agent: int
    value: int


@dataclass(frozen=True)
class Decided(Formula):
    """decided_i = value; ``value=None`` means undecided."""

    agent: int
    value: Optional[int]


@dataclass(frozen=True)
class Time(Formula):
    k: int


@dataclass(frozen=True)
class InN(Formula):
    agent: int


@dataclass(frozen=True)
class Exists(Formula):
    value: int


@dataclass(frozen=True)
class NoDecidedN(Formula):
    """No nonfaulty agent has decided ``value``."""

    value: int


@dataclass(frozen=True)
class TFaulty(Formula):
    """At least t agents are faulty (some t-sized set is outside N)."""


@dataclass(frozen=True)
class FaultySet(Formula):
    """Every agent in ``agents`` is faulty."""

    agents: frozenset


@dataclass(frozen=True)
class DistTFaulty(Formula):
    """There is a t-sized set of agents each known faulty by some nonfaulty agent."""


@dataclass(frozen=True)
class Not(Formula):
    sub: Formula


@dataclass(frozen=True)
class And(Formula):
    subs: tuple


@dataclass(frozen=True)
class Or(Formula):
    subs: tuple


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class K(Formula):
    agent: int
    sub: Formula


@dataclass(frozen=True)
class EN(Formula):
    sub: Formula


@dataclass(frozen=True)
class CN(Formula):
    sub: Formula


@dataclass(frozen=True)
class CTFaulty(Formula):
    """De re common knowledge: some t-set A with C_N(all of A faulty and sub)."""

    sub: Formula = TRUE


@dataclass(frozen=True)
class Next(Formula):
    sub: Formula


@dataclass(frozen=True)
class Prev(Formula):
    """False at time 0."""

    sub: Formula


def jdecided(i: int, v: int) -> Formula:
    return And((Decided(i, v), Prev(Decided(i, None))))


def deciding(i: int, v: int) -> Formula:
    return And((Decided(i, None), Next(Decided(i, v))))


def kbp_guards(kbp: str, agent: int, n: int) -> list:
    """Guards of a knowledge-based program for ``agent``, in program order.

    The leading "already decided -> noop" line is handled by the caller.
    """
    agents = range(1, n + 1)
    p0 = [
        (Or((Init(agent, 0), K(agent, Or(tuple(jdecided(j, 0) for j in agents))))), Action.DECIDE0),
        (K(agent, And(tuple(Not(deciding(j, 0)) for j in agents))), Action.DECIDE1),
    ]
    if kbp == "P0":
        return p0
    if kbp == "P1":
        return [
            (K(agent, CTFaulty(And((NoDecidedN(1), Exists(0))))), Action.DECIDE0),
            (K(agent, CTFaulty(And((NoDecidedN(0), Exists(1))))), Action.DECIDE1),
        ] + p0
    raise ValueError(f"unknown knowledge-based program {kbp!r}")


# -- the system -----------------------------------------------------------------------

class System:
    """The interpreted system of a complete run set.

    ``runs`` must be every run of one protocol in one context (as produced by
    :func:`eba.simulator.enumerate_runs`); knowledge is only meaningful
    relative to the complete set.
    """

    def __init__(self, runs, complete: bool = True):
        if not runs:
            raise ValueError("empty run set")
        if not complete:
            raise ValueError("knowledge can only be evaluated over a complete run set")
        sc = runs[0].scenario
        self.runs = list(runs)
        self.n, self.t, self.context, self.horizon = sc.n, sc.t, sc.context, sc.horizon
        R, T, n = len(runs), sc.horizon + 1, sc.n
        self.shape = (R, T)
        self.inits = np.array([r.scenario.inits for r in runs], dtype=np.int8)
        nf = np.zeros((R, n), dtype=bool)
        for k, r in enumerate(runs):
            for a in r.nonfaulty:
                nf[k, a - 1] = True
        self.nonfaulty = nf
        self.decided = []
        self.state_id = []
        self.actions = []
        for a in range(n):
            table = {}
            ids = np.empty((R, T), dtype=np.int64)
            dec = np.empty((R, T), dtype=np.int8)
            act = np.full((R, T), -2, dtype=np.int8)
            for k, r in enumerate(runs):
                for m in range(T):
                    s = r.states[m][a]
                    ids[k, m] = table.setdefault(s, len(table))
                    d = r.decided[m][a]
                    dec[k, m] = -1 if d is None else d
                    if m < T - 1:
                        v = r.actions[m][a].value_decided
                        act[k, m] = -1 if v is None else v
            self.state_id.append(ids)
            self.decided.append(dec)
            self.actions.append(act)
        self.times = np.broadcast_to(np.arange(T), (R, T))
        self._cache = {}
        self._states_by_agent = None

    # -- points -------------------------------------------------------------------
    def indistinguishable(self, i: int, p: tuple, q: tuple) -> bool:
        ids = self.state_id[i - 1]
        return bool(ids[p] == ids[q])

    def local_state(self, i: int, p: tuple):
        r, m = p
        return self.runs[r].states[m][i - 1]

    # -- evaluation ------------------------------------------------------------------
    def eval(self, phi: Formula) -> np.ndarray:
        return self._eval(phi)[0]

    def defined(self, phi: Formula) -> np.ndarray:
        return self._eval(phi)[1]

    def eval_at(self, phi: Formula, run: int, time: int) -> bool:
        val, ok = self._eval(phi)
        if not ok[run, time]:
            raise UndefinedAtPoint(f"formula undefined at point (run {run}, time {time})")
        return bool(val[run, time])

    def _eval(self, phi: Formula):
        got = self._cache.get(phi)
        if got is None:
            got = self._compute(phi)
            self._cache[phi] = got
        return got

    def _full(self, value=True):
        return np.full(self.shape, value, dtype=bool)

    def _know(self, i: int, val: np.ndarray) -> np.ndarray:
        ids = self.state_id[i - 1].ravel()
        bad = np.bincount(ids, weights=(~val).ravel().astype(np.float64))
        return (bad[ids] == 0).reshape(self.shape)

    def _everyone(self, val: np.ndarray) -> np.ndarray:
        out = self._full(True)
        for j in range(1, self.n + 1):
            out &= (~self.nonfaulty[:, j - 1, None]) | self._know(j, val)
        return out

    def _common(self, val: np.ndarray) -> np.ndarray:
        x = self._full(True)
        while True:
            nxt = self._everyone(val & x)
            if np.array_equal(nxt, x):
                return x
            x = nxt

    def _compute(self, phi: Formula):
        ok = self._full(True)
        nf = self.nonfaulty
        if isinstance(phi, Const):
            return self._full(phi.value), ok
        if isinstance(phi, Init):
            col = self.inits[:, phi.agent - 1] == phi.value
            return np.broadcast_to(col[:, None], self.shape).copy(), ok
        if isinstance(phi, Decided):
            want = -1 if phi.value is None else phi.value
            return self.decided[phi.agent - 1] == want, ok
        if isinstance(phi, Time):
            return self.times == phi.k, ok
        if isinstance(phi, InN):
            return np.broadcast_to(nf[:, phi.agent - 1, None], self.shape).copy(), ok
        if isinstance(phi, Exists):
            col = (self.inits == phi.value).any(axis=1)
            return np.broadcast_to(col[:, None], self.shape).copy(), ok
        if isinstance(phi, NoDecidedN):
            out = self._full(True)
            for j in range(self.n):
                out &= (~nf[:, j, None]) | (self.decided[j] != phi.value)
            return out, ok
        if isinstance(phi, TFaulty):
            col = (~nf).sum(axis=1) >= self.t
            return np.broadcast_to(col[:, None], self.shape).copy(), ok
        if isinstance(phi, FaultySet):
            col = np.ones(len(self.runs), dtype=bool)
            for a in phi.agents:
                col &= ~nf[:, a - 1]
            return np.broadcast_to(col[:, None], self.shape).copy(), ok
        if isinstance(phi, DistTFaulty):
            count = np.zeros(self.shape, dtype=np.int64)
            for a in range(1, self.n + 1):
                faulty_a = self.eval(Not(InN(a)))
                known = self._full(False)
                for j in range(1, self.n + 1):
                    known |= nf[:, j - 1, None] & self._know(j, faulty_a)
                count += known
            return count >= self.t, ok
        if isinstance(phi, Not):
            v, d = self._eval(phi.sub)
            return ~v, d
        if isinstance(phi, (And, Or)):
            parts = [self._eval(s) for s in phi.subs]
            d = ok.copy()
            if isinstance(phi, And):
                v = self._full(True)
                for pv, pd in parts:
                    v &= pv
                    d &= pd
            else:
                v = self._full(False)
                for pv, pd in parts:
                    v |= pv
                    d &= pd
            return v, d
        if isinstance(phi, Implies):
            a, da = self._eval(phi.left)
            b, db = self._eval(phi.right)
            return (~a) | b, da & db
        if isinstance(phi, K):
            v, d = self._eval(phi.sub)
            return self._know(phi.agent, v), self._know(phi.agent, d)
        if isinstance(phi, EN):
            v, d = self._eval(phi.sub)
            return self._everyone(v), self._everyone(d)
        if isinstance(phi, CN):
            v, d = self._eval(phi.sub)
            return self._common(v), self._common(d)
        if isinstance(phi, CTFaulty):
            v, d = self._eval(phi.sub)
            out = self._full(False)
            for A in itertools.combinations(range(1, self.n + 1), self.t):
                out |= self._common(self.eval(FaultySet(frozenset(A))) & v)
            return out, self._common(d)
        if isinstance(phi, Next):
            v, d = self._eval(phi.sub)
            nv = np.zeros_like(v)
            nd = np.zeros_like(d)
            nv[:, :-1] = v[:, 1:]
            nd[:, :-1] = d[:, 1:]
            return nv, nd
        if isinstance(phi, Prev):
            v, d = self._eval(phi.sub)
            pv = np.zeros_like(v)
            pd = np.ones_like(d)
            pv[:, 1:] = v[:, :-1]
            pd[:, 1:] = d[:, :-1]
            return pv, pd
        raise TypeError(f"not a formula: {phi!r}")


def eval_dist_tfaulty(system: System, run: int, time: int) -> bool:
    return system.eval_at(DistTFaulty(), run, time)


# -- textual syntax -------------------------------------------------------------------

def _tokenize(text: str) -> list:
    return text.replace("(", " ( ").replace(")", " ) ").split()


def _read(tokens: list, pos: int):
    if pos >= len(tokens):
        raise FormulaSyntaxError("unexpected end of formula")
    tok = tokens[pos]
    if tok == ")":
        raise FormulaSyntaxError(f"unexpected ')' at token {pos}")
    if tok != "(":
        return tok, pos + 1
    items = []
    pos += 1
    while True:
        if pos >= len(tokens):
            raise FormulaSyntaxError("missing ')'")
        if tokens[pos] == ")":
            return items, pos + 1
        item, pos = _read(tokens, pos)
        items.append(item)


def _int(x, what):
    try:
        return int(x)
    except (TypeError, ValueError):
        raise FormulaSyntaxError(f"expected {what}, got {x!r}") from None


def _value(x):
    if x in ("bot", "_|_", "none"):
        return None
    v = _int(x, "a value")
    if v not in (0, 1):
        raise FormulaSyntaxError(f"value must be 0 or 1, got {v}")
    return v


def _build(tree) -> Formula:
    if isinstance(tree, str):
        if tree == "true":
            return TRUE
        if tree == "false":
            return FALSE
        if tree == "tfaulty":
            return TFaulty()
        if tree in ("dist-tfaulty", "disttfaulty"):
            return DistTFaulty()
        raise FormulaSyntaxError(f"unknown atom {tree!r}")
    if not tree:
        raise FormulaSyntaxError("empty list")
    head, args = tree[0], tree[1:]
    if not isinstance(head, str):
        raise FormulaSyntaxError("operator expected at list head")

    def arity(k):
        if len(args) != k:
            raise FormulaSyntaxError(f"{head} takes {k} arguments, got {len(args)}")

    if head == "init":
        arity(2)
        return Init(_int(args[0], "an agent"), _value(args[1]))
    if head == "decided":
        arity(2)
        return Decided(_int(args[0], "an agent"), _value(args[1]))
    if head == "jdecided":
        arity(2)
        return jdecided(_int(args[0], "an agent"), _value(args[1]))
    if head == "deciding":
        arity(2)
        return deciding(_int(args[0], "an agent"), _value(args[1]))
    if head == "time":
        arity(1)
        return Time(_int(args[0], "a time"))
    if head == "in":
        arity(1)
        return InN(_int(args[0], "an agent"))
    if head == "exists":
        arity(1)
        return Exists(_value(args[0]))
    if head == "nodecided":
        arity(2)
        if args[0] != "N":
            raise FormulaSyntaxError("nodecided is only defined for the set N")
        return NoDecidedN(_value(args[1]))
    if head == "dist":
        arity(2)
        if args[0] != "N" or args[1] != "tfaulty":
            raise FormulaSyntaxError("only (dist N tfaulty) is supported")
        return DistTFaulty()
    if head == "not":
        arity(1)
        return Not(_build(args[0]))
    if head == "and":
        return And(tuple(_build(a) for a in args))
    if head == "or":
        return Or(tuple(_build(a) for a in args))
    if head == "implies":
        arity(2)
        return Implies(_build(args[0]), _build(args[1]))
    if head in ("next", "prev"):
        arity(1)
        return (Next if head == "next" else Prev)(_build(args[0]))
    if head == "K":
        arity(2)
        return K(_int(args[0], "an agent"), _build(args[1]))
    if head in ("E", "C"):
        arity(2)
        if args[0] != "N":
            raise FormulaSyntaxError(f"{head} is only defined for the set N")
        body = args[1]
        if head == "C":
            # t-faulty under C_N is read de re: some fixed t-set is commonly known faulty
            if body == "tfaulty":
                return CTFaulty(TRUE)
            if isinstance(body, list) and body and body[0] == "and" and "tfaulty" in body[1:]:
                rest = [b for b in body[1:] if b != "tfaulty"]
                return CTFaulty(And(tuple(_build(b) for b in rest)) if rest else TRUE)
            return CN(_build(body))
        return EN(_build(body))
    raise FormulaSyntaxError(f"unknown operator {head!r}")


def parse_formula(text: str) -> Formula:
    tokens = _tokenize(text)
    if not tokens:
        raise FormulaSyntaxError("empty formula")
    tree, pos = _read(tokens, 0)
    if pos != len(tokens):
        raise FormulaSyntaxError(f"trailing tokens after position {pos}")
    return _build(tree)


def agents_in(phi: Formula) -> set:
    """Agent indices mentioned by a formula (for range validation)."""
    out = set()
    if hasattr(phi, "agent"):
        out.add(phi.agent)
    if isinstance(phi, FaultySet):
        out |= set(phi.agents)
    for attr in ("sub", "left", "right"):
        if hasattr(phi, attr):
            out |= agents_in(getattr(phi, attr))
    if hasattr(phi, "subs"):
        for s in phi.subs:
            out |= agents_in(s)
    return out
