"""Communication graphs for the full-information exchange.

A graph ``G_{i,m}`` records, for every round x = 1..m and every ordered
pair (a, b), whether the message from (a, x-1) to (b, x) was delivered
(label 1), omitted (label 0) or unknown to the owner (label ?), plus the
known initial preference of each agent.

Internally agents are 0-based and sets of agents are int bitmasks; the
public functions take 1-based agents and return frozensets.  Labels are
stored column-wise: ``ones[x-1][b]`` is the bitmask of senders a whose
round-x message to b is labelled 1, and ``zeros`` likewise for 0.
"""
from __future__ import annotations

from typing import Iterable, Optional, Sequence

UNKNOWN = "?"


class IntegrityFault(RuntimeError):
    """Two graphs disagree on a committed 0/1 label."""


def _bits(mask: int):
    a = 0
    while mask:
        if mask & 1:
            yield a
        mask >>= 1
        a += 1


def _to_set(mask: int) -> frozenset:
    return frozenset(a + 1 for a in _bits(mask))


def _to_mask(agents: Iterable[int]) -> int:
    out = 0
    for a in agents:
        out |= 1 << (a - 1)
    return out


class CommGraph:
    __slots__ = ("owner", "n", "prefs", "ones", "zeros", "_hash", "_heard", "_faulty")

    def __init__(self, owner: int, n: int, prefs: tuple, ones: tuple, zeros: tuple):
        self.owner = owner  # 0-based
        self.n = n
        self.prefs = prefs
        self.ones = ones
        self.zeros = zeros
        self._hash = hash((owner, prefs, ones, zeros))
        self._heard = {}
        self._faulty = None

    @property
    def horizon(self) -> int:
        return len(self.ones)

    def key(self):
        return (self.owner, self.prefs, self.ones, self.zeros)

    def __eq__(self, other):
        return isinstance(other, CommGraph) and self._hash == other._hash and self.key() == other.key()

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"CommGraph(owner={self.owner + 1}, horizon={self.horizon}, prefs={self.pref_labels()})"

    def label(self, sender: int, x: int, receiver: int):
        """Label of the edge (sender, x-1) -> (receiver, x), agents 1-based, 1 <= x <= horizon."""
        a, b = sender - 1, receiver - 1
        if (self.ones[x - 1][b] >> a) & 1:
            return 1
        if (self.zeros[x - 1][b] >> a) & 1:
            return 0
        return UNKNOWN

    def pref(self, j: int):
        p = self.prefs[j - 1]
        return UNKNOWN if p < 0 else p

    def pref_labels(self) -> tuple:
        return tuple(self.pref(j) for j in range(1, self.n + 1))

    # -- hears-from -------------------------------------------------------
    def heard_masks(self, j0: int, y: int) -> tuple:
        """Per time x <= y, the bitmask of agents k with (k,x) heard-from by (j0,y) (0-based j0)."""
        key = (j0, y)
        got = self._heard.get(key)
        if got is not None:
            return got
        masks = [0] * (y + 1)
        masks[y] = 1 << j0
        for x in range(y, 0, -1):
            cur = masks[x]
            prev = cur
            col = self.ones[x - 1]
            for b in _bits(cur):
                prev |= col[b]
            masks[x - 1] = prev
        got = tuple(masks)
        self._heard[key] = got
        return got

    def owner_heard(self) -> tuple:
        return self.heard_masks(self.owner, self.horizon)

    # -- known-faulty table -------------------------------------------------
    def faulty_table(self) -> tuple:
        """``table[x][a]`` is the bitmask f(a+1, x, G)."""
        if self._faulty is None:
            n = self.n
            rows = [(0,) * n]
            for x in range(1, self.horizon + 1):
                prev = rows[-1]
                ones, zeros = self.ones[x - 1], self.zeros[x - 1]
                row = []
                for a in range(n):
                    acc = prev[a] | zeros[a]
                    for s in _bits(ones[a]):
                        acc |= prev[s]
                    row.append(acc)
                rows.append(tuple(row))
            self._faulty = tuple(rows)
        return self._faulty


def initial_graph(n: int, owner: int, init: int) -> CommGraph:
    prefs = tuple(init if a == owner - 1 else -1 for a in range(n))
    return CommGraph(owner - 1, n, prefs, (), ())


def merge_graphs(own: CommGraph, inbox: Sequence[Optional[CommGraph]]) -> CommGraph:
    """Combine the owner's graph with the graphs received this round.

    ``inbox[a]`` is the graph delivered from agent a+1, or None when that
    message was omitted.  All inputs must have the owner's horizon.
    The new round's edges into the owner are labelled by delivery; all
    other labels are the join of the inputs.
    """
    n, m = own.n, own.horizon
    if len(inbox) != n:
        raise ValueError(f"inbox has {len(inbox)} slots, expected {n}")
    prefs = list(own.prefs)
    ones = [list(c) for c in own.ones]
    zeros = [list(c) for c in own.zeros]
    delivered = 0
    for a, g in enumerate(inbox):
        if g is None:
            continue
        delivered |= 1 << a
        if g.horizon != m or g.n != n:
            raise ValueError("received graph has a different shape")
        for k, p in enumerate(g.prefs):
            if p >= 0:
                if prefs[k] >= 0 and prefs[k] != p:
                    raise IntegrityFault(f"conflicting preference for agent {k + 1}")
                prefs[k] = p
        for x in range(m):
            ox, zx = ones[x], zeros[x]
            gx1, gx0 = g.ones[x], g.zeros[x]
            for b in range(n):
                ox[b] |= gx1[b]
                zx[b] |= gx0[b]
    for x in range(m):
        for b in range(n):
            if ones[x][b] & zeros[x][b]:
                raise IntegrityFault(f"conflicting labels on round {x + 1} edges into agent {b + 1}")
    full = (1 << n) - 1
    new_ones = [0] * n
    new_zeros = [0] * n
    new_ones[own.owner] = delivered
    new_zeros[own.owner] = full & ~delivered
    return CommGraph(
        own.owner,
        n,
        tuple(prefs),
        tuple(tuple(c) for c in ones) + (tuple(new_ones),),
        tuple(tuple(c) for c in zeros) + (tuple(new_zeros),),
    )


def hears_from(src: tuple, dst: tuple, G: CommGraph) -> bool:
    """Does (dst agent, dst time) hear from (src agent, src time) according to G?"""
    (k, x), (j, y) = src, dst
    if x > y:
        return False
    return bool((G.heard_masks(j - 1, y)[x] >> (k - 1)) & 1)


def is_heard(G: CommGraph, j: int, x: int) -> bool:
    """Is (j, x) heard-from by the owner of G at its horizon?"""
    return 0 <= x <= G.horizon and bool((G.owner_heard()[x] >> (j - 1)) & 1)


def view_of(G: CommGraph, j: int, y: int) -> CommGraph:
    """Reconstruct G_{j,y} from G; (j, y) must be heard-from by G's owner."""
    if not is_heard(G, j, y):
        raise ValueError(f"({j},{y}) is not heard-from by the owner of G")
    if j - 1 == G.owner and y == G.horizon:
        return G
    masks = G.heard_masks(j - 1, y)
    ones = tuple(tuple(c if (masks[x + 1] >> b) & 1 else 0 for b, c in enumerate(G.ones[x])) for x in range(y))
    zeros = tuple(tuple(c if (masks[x + 1] >> b) & 1 else 0 for b, c in enumerate(G.zeros[x])) for x in range(y))
    prefs = tuple(p if (masks[0] >> a) & 1 else -1 for a, p in enumerate(G.prefs))
    return CommGraph(j - 1, G.n, prefs, ones, zeros)


def last_heard(j: int, G: CommGraph) -> int:
    """Latest time x with (j, x) heard-from by G's owner, or -1."""
    bit = 1 << (j - 1)
    for x, mask in reversed(list(enumerate(G.owner_heard()))):
        if mask & bit:
            return x
    return -1


def known_faulty(j: int, m: int, G: CommGraph) -> frozenset:
    """f(j, m, G): the agents G's owner knows j knows to be faulty at time m."""
    return _to_set(G.faulty_table()[m][j - 1])


def dist_known_faulty(S: Iterable[int], m: int, G: CommGraph) -> frozenset:
    """D(S, m, G): union of f(k, m, G) over k in S."""
    row = G.faulty_table()[m]
    acc = 0
    for k in S:
        acc |= row[k - 1]
    return _to_set(acc)


def known_values(j: int, m: int, G: CommGraph) -> frozenset:
    """V(j, m, G): the initial values G's owner knows j knew at time m."""
    if not is_heard(G, j, m):
        return frozenset()
    src = G.heard_masks(j - 1, m)[0]
    return frozenset(G.prefs[a] for a in _bits(src))


# -- replaying a decision protocol on reconstructed views ----------------------

_REPLAY_CACHE: dict = {}


def clear_caches() -> None:
    _REPLAY_CACHE.clear()


def replay_actions(G: CommGraph, protocol, t: int) -> tuple:
    """Actions of G's owner at times 0..horizon under ``protocol``.

    ``protocol`` must expose ``name`` and ``action(state, decided, n, t)``
    for full-information states.  The owner's earlier views are
    reconstructed from G, so the decision ledger is replayed as well.
    """
    from .core import Action
    from .exchange import FipLocalState

    key = (protocol.name, t, G)
    got = _REPLAY_CACHE.get(key)
    if got is not None:
        return got
    if G.horizon == 0:
        earlier = ()
        decided = None
    else:
        earlier = replay_actions(view_of(G, G.owner + 1, G.horizon - 1), protocol, t)
        decided = None
        for act in earlier:
            if act is not Action.NOOP:
                decided = act.value_decided
                break
    state = FipLocalState(G.horizon, G.prefs[G.owner], G)
    act = protocol.action(state, decided, G.n, t)
    got = earlier + (act,)
    _REPLAY_CACHE[key] = got
    return got


def known_action(j: int, m: int, G: CommGraph, protocol, t: int):
    """d(j, m, G): j's decision in round m+1 as known to G's owner: 0, 1, None (no decision) or '?'."""
    if not is_heard(G, j, m):
        return UNKNOWN
    return replay_actions(view_of(G, j, m), protocol, t)[m].value_decided


def _undecided_through(j: int, m: int, G: CommGraph, protocol, t: int) -> bool:
    """Owner knows j performed no decision at times 0..m (vacuous for m = -1)."""
    if m < 0:
        return True
    return all(a.value_decided is None for a in replay_actions(view_of(G, j, m), protocol, t))


def latest_known_zero(G: CommGraph, protocol, t: int) -> int:
    """Latest time x < horizon such that some j is known to decide 0 at x (round x+1), or -1."""
    for x in range(G.horizon - 1, -1, -1):
        for j in range(1, G.n + 1):
            if known_action(j, x, G, protocol, t) == 0:
                return x
    return -1


def longest_known_chain(G: CommGraph, protocol, t: int) -> int:
    """Length of the longest 0-chain visible in G (0 when none is visible).

    A chain i_0, ..., i_k has init(i_0) = 0, each i_x first decides 0 at
    time x, and for x >= 1 the edge (i_{x-1}, x-1) -> (i_x, x) is labelled 1.
    """
    best = 0
    n = G.n
    # reach[x] = bitmask of agents ending a visible chain of length x
    reach = 0
    for j in range(1, n + 1):
        if G.prefs[j - 1] == 0 and known_action(j, 0, G, protocol, t) == 0:
            reach |= 1 << (j - 1)
    x = 0
    while reach and x < G.horizon:
        x += 1
        nxt = 0
        for j in range(1, n + 1):
            if known_action(j, x, G, protocol, t) != 0:
                continue
            if not _undecided_through(j, x - 1, G, protocol, t):
                continue
            if G.ones[x - 1][j - 1] & reach:
                nxt |= 1 << (j - 1)
        reach = nxt
        if reach:
            best = x
    return best


# -- the predicates used by the optimal full-information protocol --------------

def common_v(i: int, m: int, G: CommGraph, v: int, protocol, t: int) -> bool:
    """Graph test for common knowledge among the nonfaulty of t faulty agents,
    no nonfaulty decision on 1-v, and the existence of value v, at time m."""
    if m < 1 or m > G.horizon:
        return False
    n = G.n
    table = G.faulty_table()
    f_i = table[m][i - 1]
    maybe_nonfaulty = ((1 << n) - 1) & ~f_i
    D = 0
    for k in _bits(maybe_nonfaulty):
        D |= table[m - 1][k]
    if bin(D).count("1") != t:
        return False
    for j in _bits(maybe_nonfaulty):
        for x in range(m):
            if known_action(j + 1, x, G, protocol, t) == 1 - v:
                return False
    for j in range(n):
        if (D >> j) & 1:
            continue
        if v in known_values(j + 1, m - 1, G):
            return True
    return False


def cond0(i: int, m: int, G: CommGraph, protocol, t: int) -> bool:
    """Owner i at time m knows it has initial value 0 or that some j just decided 0."""
    if m == 0:
        return G.prefs[i - 1] == 0
    senders = G.ones[m - 1][i - 1]
    for a in _bits(senders):
        if known_action(a + 1, m - 1, G, protocol, t) == 0:
            return True
    return False


def cond1(i: int, m: int, G: CommGraph, protocol, t: int) -> bool:
    """Owner i at time m knows that no agent is deciding 0 at time m.

    A hidden 0-chain can reach time m iff, with ell the latest known
    0-decision time, every x in (ell, m] has at least x - ell agents j with
    last_heard(j) < x that are known to be undecided through last_heard(j).
    cond1 is the negation of that condition.
    """
    if m == 0:
        return False
    ell = latest_known_zero(G, protocol, t)
    n = G.n
    eligible_last = []
    for j in range(1, n + 1):
        lj = last_heard(j, G)
        if lj < m and _undecided_through(j, lj, G, protocol, t):
            eligible_last.append(lj)
    for x in range(ell + 1, m + 1):
        if sum(1 for lj in eligible_last if lj < x) < x - ell:
            return True
    return False


def to_dot(G: CommGraph) -> str:
    """DOT rendering: vertices "(j,m)", edges labelled 0/1/? for every round edge."""
    lines = [f'digraph "G_{G.owner + 1},{G.horizon}" {{']
    for x in range(G.horizon + 1):
        for j in range(1, G.n + 1):
            extra = f' pref="{G.pref(j)}"' if x == 0 else ""
            lines.append(f'  "({j},{x})" [label="({j},{x})"{extra}];')
    for x in range(1, G.horizon + 1):
        for a in range(1, G.n + 1):
            for b in range(1, G.n + 1):
                lines.append(f'  "({a},{x - 1})" -> "({b},{x})" [label="{G.label(a, x, b)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
