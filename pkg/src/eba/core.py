"""Shared primitives: actions, failure patterns, scenarios and run records.

Agents are numbered 1..n throughout the public API.  Rounds follow the
usual synchronous convention: round m+1 spans times m -> m+1, and
``deliver(m, i, j)`` governs the message i sends to j in that round.
A decision of ``None`` means undecided.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Iterable, Optional

CONTEXTS = ("min", "basic", "fip")


class Action(enum.Enum):
    NOOP = "noop"
    DECIDE0 = "decide0"
    DECIDE1 = "decide1"

    @property
    def value_decided(self) -> Optional[int]:
        if self is Action.DECIDE0:
            return 0
        if self is Action.DECIDE1:
            return 1
        return None

    @staticmethod
    def decide(v: int) -> "Action":
        return Action.DECIDE0 if v == 0 else Action.DECIDE1


@dataclass(frozen=True)
class FailurePattern:
    """The adversary: a nonfaulty set plus the omitted (m, sender, receiver) triples.

    Every triple that is not listed is delivered.  Only rounds below the
    horizon are meaningful.
    """

    nonfaulty: frozenset
    omissions: frozenset = frozenset()

    def deliver(self, m: int, sender: int, receiver: int) -> bool:
        return (m, sender, receiver) not in self.omissions

    def faulty(self, n: int) -> frozenset:
        return frozenset(range(1, n + 1)) - self.nonfaulty

    @staticmethod
    def failure_free(n: int) -> "FailurePattern":
        return FailurePattern(frozenset(range(1, n + 1)))

    @staticmethod
    def silent(n: int, faulty: Iterable[int], horizon: int, from_round: int = 0) -> "FailurePattern":
        """Faulty agents omit every message (self-messages included) from ``from_round`` on."""
        faulty = frozenset(faulty)
        om = frozenset(
            (m, i, j)
            for m in range(from_round, horizon)
            for i in faulty
            for j in range(1, n + 1)
        )
        return FailurePattern(frozenset(range(1, n + 1)) - faulty, om)


@dataclass(frozen=True)
class PatternCheck:
    ok: bool
    reason: str = ""
    offending: Optional[tuple] = None

    def __bool__(self):
        return self.ok


def validate_failure_pattern(pattern: FailurePattern, n: int, t: int, horizon: int) -> PatternCheck:
    """Check the two sending-omission invariants.

    An omission must come from a faulty sender, and there can be at most
    t faulty agents.  The first offending triple (in sorted order) or
    the oversized faulty set is reported.
    """
    agents = set(range(1, n + 1))
    if not set(pattern.nonfaulty) <= agents:
        return PatternCheck(False, "nonfaulty set names unknown agents", tuple(sorted(pattern.nonfaulty)))
    faulty = agents - set(pattern.nonfaulty)
    if len(faulty) > t:
        return PatternCheck(False, f"{len(faulty)} faulty agents exceeds t={t}", tuple(sorted(faulty)))
    for (m, i, j) in sorted(pattern.omissions):
        if not (0 <= m and i in agents and j in agents):
            return PatternCheck(False, "omission outside the agent/round range", (m, i, j))
        if i in pattern.nonfaulty:
            return PatternCheck(False, f"nonfaulty agent {i} omits a message", (m, i, j))
    return PatternCheck(True)


def is_crash_pattern(pattern: FailurePattern, n: int, horizon: int) -> bool:
    """True iff once a sender omits anything, it omits everything afterwards."""
    first = {}
    for (m, i, _j) in pattern.omissions:
        if m < horizon:
            first[i] = min(first.get(i, m), m)
    for i, m0 in first.items():
        for m in range(m0 + 1, horizon):
            for j in range(1, n + 1):
                if pattern.deliver(m, i, j):
                    return False
    return True


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    n: int
    t: int
    context: str
    protocol: str
    inits: tuple
    pattern: FailurePattern
    horizon: int
    allow_large_t: bool = False

    def __post_init__(self):
        object.__setattr__(self, "inits", tuple(int(v) for v in self.inits))

    def validate(self) -> None:
        if self.context not in CONTEXTS:
            raise ScenarioError(f"unknown context {self.context!r}")
        if self.n < 1 or self.t < 0:
            raise ScenarioError("n must be positive and t non-negative")
        if not self.allow_large_t and self.t > self.n - 2:
            raise ScenarioError(f"t={self.t} exceeds n-2={self.n - 2}")
        if len(self.inits) != self.n or any(v not in (0, 1) for v in self.inits):
            raise ScenarioError("inits must be n values in {0,1}")
        if self.horizon < self.t + 3:
            raise ScenarioError(f"horizon {self.horizon} is below t+3={self.t + 3}")
        check = validate_failure_pattern(self.pattern, self.n, self.t, self.horizon)
        if not check:
            raise ScenarioError(f"invalid failure pattern: {check.reason} {check.offending}")

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "t": self.t,
            "context": self.context,
            "protocol": self.protocol,
            "inits": list(self.inits),
            "faulty": sorted(self.pattern.faulty(self.n)),
            "omissions": [list(x) for x in sorted(self.pattern.omissions)],
            "horizon": self.horizon,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @staticmethod
    def from_dict(d: dict) -> "Scenario":
        try:
            n = int(d["n"])
            t = int(d["t"])
            faulty = frozenset(int(a) for a in d.get("faulty", []))
            om = frozenset(tuple(int(x) for x in tr) for tr in d.get("omissions", []))
            if any(len(tr) != 3 for tr in om):
                raise ScenarioError("omissions must be [m, sender, receiver] triples")
            horizon = int(d.get("horizon", t + 3))
            sc = Scenario(
                n=n,
                t=t,
                context=str(d["context"]),
                protocol=str(d["protocol"]),
                inits=tuple(d["inits"]),
                pattern=FailurePattern(frozenset(range(1, n + 1)) - faulty, om),
                horizon=horizon,
                allow_large_t=bool(d.get("allow_large_t", False)),
            )
        except KeyError as e:
            raise ScenarioError(f"missing field {e.args[0]!r}") from None
        except (TypeError, ValueError) as e:
            if isinstance(e, ScenarioError):
                raise
            raise ScenarioError(f"malformed scenario: {e}") from None
        sc.validate()
        return sc

    @staticmethod
    def from_json(text: str) -> "Scenario":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as e:
            raise ScenarioError(f"line {e.lineno} column {e.colno}: {e.msg}") from None
        if not isinstance(d, dict):
            raise ScenarioError("scenario must be a JSON object")
        return Scenario.from_dict(d)


@dataclass
class RunRecord:
    """A complete run.

    ``states[m][i-1]`` is agent i's local state at time m (0..horizon).
    ``actions[m][i-1]`` is the action agent i performs in round m+1, so it
    is indexed by the time at which it is chosen (0..horizon-1).
    ``sent[m][i-1][j-1]`` is the payload i sends j in round m+1 (None for
    no message) and ``delivered[m][i-1][j-1]`` says whether it arrived.
    ``decided[m][i-1]`` is the ledger value at time m.
    """

    scenario: Scenario
    states: list
    actions: list
    sent: list
    delivered: list
    decided: list = field(default_factory=list)
    run_id: int = -1

    @property
    def n(self):
        return self.scenario.n

    @property
    def horizon(self):
        return self.scenario.horizon

    @property
    def nonfaulty(self) -> frozenset:
        return self.scenario.pattern.nonfaulty

    def decision(self, i: int) -> Optional[int]:
        return self.decided[-1][i - 1]

    def decision_time(self, i: int) -> Optional[int]:
        """Time m at which agent i performs its decide action (round m+1), or None."""
        for m, acts in enumerate(self.actions):
            if acts[i - 1] is not Action.NOOP:
                return m
        return None

    def decision_round(self, i: int) -> Optional[int]:
        m = self.decision_time(i)
        return None if m is None else m + 1
