"""n=20, t=10, all preferences 1, agents 1..10 never send: first decision rounds per protocol."""
import argparse

from eba.core import FailurePattern, Scenario
from eba.simulator import generate_run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=20)
    ap.add_argument("--t", type=int, default=10)
    args = ap.parse_args()
    n, t = args.n, args.t
    pattern = FailurePattern.silent(n, range(1, t + 1), t + 3)
    for protocol, context in (("popt", "fip"), ("pmin", "min"), ("pbasic", "basic")):
        run = generate_run(Scenario(n, t, context, protocol, (1,) * n, pattern, t + 3))
        rounds = sorted({run.decision_round(i) for i in run.nonfaulty})
        values = sorted({run.decision(i) for i in run.nonfaulty})
        print(f"{protocol:7s} {context:6s} nonfaulty decide {values} in rounds {rounds}")


if __name__ == "__main__":
    main()
