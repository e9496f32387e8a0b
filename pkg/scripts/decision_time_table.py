"""Histogram of nonfaulty first-decision rounds over complete run sets."""
import argparse
import time

from eba.metrics import bits_sent, decision_round_table
from eba.simulator import EnumerationTooLarge, enumerate_runs

CASES = [("pmin", "min"), ("pmin", "basic"), ("pbasic", "basic"), ("popt", "fip")]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--t", type=int, default=1)
    args = ap.parse_args()
    print(f"n={args.n} t={args.t}")
    for protocol, context in CASES:
        start = time.perf_counter()
        try:
            runs = enumerate_runs(args.n, args.t, context, protocol)
        except EnumerationTooLarge as e:
            print(f"{protocol:7s} {context:6s} skipped: {e}")
            continue
        bits = [bits_sent(r) for r in runs]
        print(
            f"{protocol:7s} {context:6s} runs={len(runs):7d} rounds={decision_round_table(runs)} "
            f"bits={min(bits)}..{max(bits)} ({time.perf_counter() - start:.1f}s)"
        )


if __name__ == "__main__":
    main()
