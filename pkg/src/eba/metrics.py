"""Message-bit accounting, decision-round tables and single-scenario reports."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .core import RunRecord, Scenario
from .exchange import payload_bits
from .simulator import generate_run


def bits_sent(run: RunRecord) -> int:
    """Total bits handed to the network (before the adversary), self-messages included."""
    n = run.n
    return sum(payload_bits(p, n) for sent in run.sent for row in sent for p in row)


def messages_per_round(run: RunRecord) -> list:
    """Number of non-empty messages sent in each round 1..horizon."""
    return [sum(1 for row in sent for p in row if p is not None) for sent in run.sent]


def decision_round_table(runs) -> dict:
    """Histogram of first-decision rounds of nonfaulty agents ("undecided" for none)."""
    hist = Counter()
    for r in runs:
        for i in sorted(r.nonfaulty):
            rnd = r.decision_round(i)
            hist["undecided" if rnd is None else rnd] += 1
    return dict(sorted(hist.items(), key=lambda kv: (isinstance(kv[0], str), kv[0])))


@dataclass
class Report:
    scenario: Scenario
    decisions: list
    bits: int
    per_round: list
    verdicts: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario.to_dict(),
            "decisions": self.decisions,
            "bits_sent": self.bits,
            "messages_per_round": self.per_round,
            "verdicts": self.verdicts,
        }


def report_for_run(run: RunRecord) -> Report:
    from .verification import agreement_violation, termination_violation, unique_violation, validity_violation

    decisions = [
        {"agent": i, "nonfaulty": i in run.nonfaulty, "value": run.decision(i), "round": run.decision_round(i)}
        for i in range(1, run.n + 1)
    ]
    verdicts = []
    for name, fn in (
        ("agreement", agreement_violation),
        ("unique_decision", unique_violation),
        ("validity", validity_violation),
        ("termination", termination_violation),
    ):
        bad = fn(run)
        verdicts.append({"property": name, "pass": bad is None, "agents": None if bad is None else (
            list(bad) if isinstance(bad, tuple) else [bad])})
    return Report(run.scenario, decisions, bits_sent(run), messages_per_round(run), verdicts)


def run_scenario(path) -> Report:
    """Load a scenario JSON file, simulate it and build its report."""
    sc = Scenario.from_json(Path(path).read_text())
    return report_for_run(generate_run(sc))
