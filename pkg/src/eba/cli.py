"""Command-line front end.

Exit codes: 0 when the requested check passes, 1 when a property fails,
2 on usage, parse or validation errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import commgraph as cg
from . import epistemic as ep
from . import verification as vf
from .core import FailurePattern, Scenario, ScenarioError
from .metrics import bits_sent, decision_round_table, report_for_run
from .protocols import KBP_IDS, get_protocol
from .simulator import EnumerationTooLarge, enumerate_runs, generate_run, trace_lines


class UsageError(Exception):
    pass


def _emit(obj, out):
    text = json.dumps(obj, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _scenario(args) -> Scenario:
    if args.scenario:
        try:
            text = Path(args.scenario).read_text()
        except OSError as e:
            raise UsageError(f"cannot read scenario: {e}") from None
        return Scenario.from_json(text)
    if None in (args.n, args.t, args.context, args.protocol):
        raise UsageError("give --scenario or all of --n --t --context --protocol")
    inits = tuple(int(x) for x in args.inits.split(",")) if args.inits else (1,) * args.n
    horizon = args.horizon if args.horizon is not None else args.t + 3
    sc = Scenario(args.n, args.t, args.context, args.protocol, inits, FailurePattern.failure_free(args.n), horizon)
    sc.validate()
    return sc


def _need(args, *names):
    missing = [f"--{n}" for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError("missing " + " ".join(missing))


def cmd_simulate(args) -> int:
    sc = _scenario(args)
    run = generate_run(sc)
    if args.dump:
        Path(args.dump).write_text("\n".join(trace_lines(run)) + "\n")
    if args.dot:
        if sc.context != "fip":
            raise UsageError("--dot needs the fip context")
        agent = args.dot_agent or 1
        Path(args.dot).write_text(cg.to_dot(run.states[-1][agent - 1].graph))
    rep = report_for_run(run)
    _emit(rep.to_dict(), args.out)
    return 0 if all(v["pass"] for v in rep.verdicts) else 1


def _enumerate(args):
    _need(args, "n", "t", "context", "protocol")
    return enumerate_runs(args.n, args.t, args.context, args.protocol, args.horizon, collapse=args.collapse)


def cmd_enumerate(args) -> int:
    runs = _enumerate(args)
    bits = [bits_sent(r) for r in runs]
    _emit(
        {
            "runs": len(runs),
            "decision_rounds": {str(k): v for k, v in decision_round_table(runs).items()},
            "bits_min": min(bits),
            "bits_max": max(bits),
        },
        args.out,
    )
    return 0


def cmd_check(args) -> int:
    what = args.what
    if what == "eba":
        verdicts = vf.check_eba(_enumerate(args))
        info = verdicts["termination"].info
        body = [v.to_dict() for v in verdicts.values()]
        _emit({"verdicts": body, "max_round": info.get("max_round")}, args.out)
        return 0 if all(verdicts.values()) else 1
    if what == "implements":
        _need(args, "n", "t", "context", "protocol")
        kbp = args.kbp or ("P1" if args.context == "fip" else "P0")
        v = vf.check_implements(args.protocol, KBP_IDS.get(kbp, kbp), args.context, args.n, args.t,
                                args.horizon, collapse=args.collapse)
        _emit(v.to_dict(), args.out)
        return 0 if v else 1
    if what == "safety":
        _need(args, "n", "t", "context", "protocol")
        v = vf.check_safety(args.context, args.protocol, args.n, args.t, args.horizon, collapse=args.collapse)
        _emit(v.to_dict(), args.out)
        return 0 if v else 1
    if what == "chains":
        run = generate_run(_scenario(args))
        chains = vf.detect_zero_chains(run)
        _emit({"chains": [[list(x) for x in ch] for ch in chains]}, args.out)
        return 0
    raise UsageError(f"unknown check {what!r}")


def cmd_dominate(args) -> int:
    _need(args, "a", "b", "n", "t", "context")
    res = vf.check_domination(args.a, args.b, args.context, args.n, args.t, args.horizon, collapse=args.collapse)
    _emit(res.to_dict(), args.out)
    return 1 if res.relation == "disqualified" else 0


def _locate(runs, run):
    key = (run.scenario.inits, run.nonfaulty, tuple(run.states), tuple(run.decided))
    for k, r in enumerate(runs):
        if (r.scenario.inits, r.nonfaulty, tuple(r.states), tuple(r.decided)) == key:
            return k
    return None


def cmd_eval(args) -> int:
    _need(args, "formula", "time")
    try:
        phi = ep.parse_formula(args.formula)
    except ep.FormulaSyntaxError as e:
        raise UsageError(f"formula: {e}") from None
    sc = _scenario(args)
    bad = [a for a in ep.agents_in(phi) if not 1 <= a <= sc.n]
    if bad:
        raise UsageError(f"formula names agents outside 1..{sc.n}: {bad}")
    runs = enumerate_runs(sc.n, sc.t, sc.context, get_protocol(sc.protocol), sc.horizon, collapse=args.collapse)
    k = _locate(runs, generate_run(sc))
    if k is None:
        raise UsageError("scenario run not found in the enumerated system")
    system = ep.System(runs)
    if not 0 <= args.time <= sc.horizon:
        raise UsageError(f"time must lie in 0..{sc.horizon}")
    try:
        value = system.eval_at(phi, k, args.time)
    except ep.UndefinedAtPoint as e:
        raise UsageError(str(e)) from None
    _emit({"formula": args.formula, "run": k, "time": args.time, "value": value}, args.out)
    return 0 if value else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int)
    common.add_argument("--t", type=int)
    common.add_argument("--context", choices=["min", "basic", "fip"])
    common.add_argument("--protocol")
    common.add_argument("--horizon", type=int)
    common.add_argument("--scenario")
    common.add_argument("--inits", help="comma-separated initial values for a failure-free scenario")
    common.add_argument("--dump")
    common.add_argument("--out")
    common.add_argument("--collapse", action="store_true",
                        help="merge adversary branches that reach identical global states")

    p = argparse.ArgumentParser(prog="eba", description=__doc__)
    sub = p.add_subparsers(dest="cmd", required=True)
    s = sub.add_parser("simulate", parents=[common])
    s.add_argument("--dot")
    s.add_argument("--dot-agent", type=int)
    s.set_defaults(fn=cmd_simulate)
    s = sub.add_parser("enumerate", parents=[common])
    s.set_defaults(fn=cmd_enumerate)
    s = sub.add_parser("check", parents=[common])
    s.add_argument("what", choices=["eba", "implements", "safety", "chains"])
    s.add_argument("--kbp", choices=["P0", "P1", "kbp-p0", "kbp-p1"])
    s.set_defaults(fn=cmd_check)
    s = sub.add_parser("dominate", parents=[common])
    s.add_argument("--a")
    s.add_argument("--b")
    s.set_defaults(fn=cmd_dominate)
    s = sub.add_parser("eval", parents=[common])
    s.add_argument("--formula")
    s.add_argument("--time", type=int)
    s.set_defaults(fn=cmd_eval)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (UsageError, ScenarioError, EnumerationTooLarge) as e:
        sys.stderr.write(f"error: {e}\n")
        return 2
    except ValueError as e:
        sys.stderr.write(f"error: {e}\n")
        return 2
