"""Compare the graph predicates of the optimal full-information protocol
with the knowledge formulas they stand for, at every point of the n=3, t=1
run set.  Prints mismatch counts (all zero when the two agree)."""
from collections import Counter

from eba import commgraph as cg
from eba import epistemic as ep
from eba.protocols import POPT
from eba.simulator import enumerate_runs


def main():
    n, t = 3, 1
    runs = enumerate_runs(n, t, "fip", "popt")
    S = ep.System(runs)
    agents = range(1, n + 1)
    ck_v = {v: S.eval(ep.CTFaulty(ep.And((ep.NoDecidedN(1 - v), ep.Exists(v))))) for v in (0, 1)}
    zero = {i: S.eval(ep.Or((ep.Init(i, 0), ep.K(i, ep.Or(tuple(ep.jdecided(j, 0) for j in agents))))))
            for i in agents}
    none = {i: S.eval(ep.K(i, ep.And(tuple(ep.Not(ep.deciding(j, 0)) for j in agents)))) for i in agents}
    ck = S.eval(ep.CTFaulty())
    prev_dist = S.eval(ep.Prev(ep.DistTFaulty()))
    bad, seen = Counter(), Counter()
    for k, r in enumerate(runs):
        for m in range(r.horizon + 1):
            for i in agents:
                G = r.states[m][i - 1].graph
                for v in (0, 1):
                    seen["common"] += 1
                    bad["common"] += cg.common_v(i, m, G, v, POPT, t) != ck_v[v][k, m]
                if m < r.horizon and r.decided[m][i - 1] is None:
                    c0 = cg.cond0(i, m, G, POPT, t)
                    seen["cond0"] += 1
                    bad["cond0"] += c0 != zero[i][k, m]
                    if not (c0 or ck_v[0][k, m] or ck_v[1][k, m]):
                        seen["cond1"] += 1
                        bad["cond1"] += cg.cond1(i, m, G, POPT, t) != none[i][k, m]
            if m:
                seen["prev-dist"] += 1
                bad["prev-dist"] += prev_dist[k, m] != ck[k, m]
    print(f"{len(runs)} runs")
    for key in seen:
        print(f"{key:10s} points={seen[key]:8d} mismatches={int(bad[key])}")


if __name__ == "__main__":
    main()
