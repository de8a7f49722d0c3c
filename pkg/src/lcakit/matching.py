"""Local queries against the greedy maximal matching.

Edges arrive in a seeded random order; greedy adds an edge iff none of its
neighbors was added before it.  A per-edge query explores the decreasing-rank
closure over edge adjacency and replays greedy inside it, which reproduces
the global verdict exactly.  Edge ranks derive from the canonical edge id
``min * n + max`` over a universe of n*n ids, so they are independent of the
endpoint ranks and of how the edge was reached.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

from .exploration import TruncationError, _closure
from .graphs import LocalGraph
from .ranks import FullPseudorandom, OrderingKind, Seed, rank_key_fn

Edge = tuple[int, int]


@dataclass(frozen=True)
class MatchVerdict:
    matched: bool
    probes: int
    edges_evaluated: int


def canonical_edge(u: int, v: int) -> Edge:
    if u == v:
        raise ValueError("self-loops are not edges")
    return (u, v) if u < v else (v, u)


def _edge_key_fn(g: LocalGraph, seed: Seed, kind: OrderingKind):
    """Rank key on canonical edges via their packed ids."""
    base = rank_key_fn(seed, kind, g.n * g.n)

    def key(e: Edge) -> tuple[int, int]:
        return base(e[0] * g.n + e[1])

    return key


def _adjacent_edges(g: LocalGraph, e: Edge) -> Iterable[Edge]:
    """Edges sharing an endpoint with e (two neighbor-list scans)."""
    u, v = e
    for w in g.neighbors(u):
        if w != v:
            yield canonical_edge(u, w)
    for w in g.neighbors(v):
        if w != u:
            yield canonical_edge(v, w)


def is_matched(
    g: LocalGraph,
    e: Edge,
    seed: Seed,
    kind: OrderingKind = FullPseudorandom(),
    cap: int = 1 << 20,
    _key_of: Callable[[Edge], tuple[int, int]] | None = None,
) -> MatchVerdict:
    """Whether edge e is in the greedy matching under this seed.

    Explores the closure of e over edge adjacency (a neighbor edge f joins
    iff rank(f) < rank of the edge that scanned it), then replays greedy in
    ascending rank order within the closure.  Exceeding ``cap`` raises
    :class:`TruncationError`: a counted failure, never a wrong answer.
    """
    e = canonical_edge(*e)
    if e[1] not in g.neighbors(e[0]):
        raise ValueError(f"{e} is not an edge of the graph")
    key_of = _key_of if _key_of is not None else _edge_key_fn(g, seed, kind)
    order, _, lower, scans, truncated = _closure(
        lambda f: _adjacent_edges(g, f), e, key_of, cap
    )
    probes = 2 * scans  # each adjacency scan reads both endpoint neighbor lists
    if truncated:
        raise TruncationError(
            f"relevant edge set of {e} exceeded cap {cap}",
            probes=probes,
            size=len(order),
        )
    matched: dict[Edge, bool] = {}
    for f in order:
        matched[f] = not any(matched[x] for x in lower[f])
    return MatchVerdict(matched[e], probes=probes, edges_evaluated=len(order))


def all_verdicts(
    g: LocalGraph,
    seed: Seed,
    kind: OrderingKind = FullPseudorandom(),
    cap: int = 1 << 20,
) -> dict[Edge, MatchVerdict]:
    """Per-edge verdicts for every edge; any truncation aborts."""
    key_of = _edge_key_fn(g, seed, kind)
    out = {}
    for e in g.edges():
        try:
            out[e] = is_matched(g, e, seed, kind, cap, _key_of=key_of)
        except TruncationError as exc:
            raise TruncationError(
                f"full matching aborted at edge {e}: {exc}",
                probes=exc.probes,
                size=exc.size,
            ) from None
    return out


def full_matching(
    g: LocalGraph,
    seed: Seed,
    kind: OrderingKind = FullPseudorandom(),
    cap: int = 1 << 20,
) -> frozenset[Edge]:
    """Query every edge; the verdict-true set. Any truncation aborts."""
    return frozenset(
        e for e, v in all_verdicts(g, seed, kind, cap).items() if v.matched
    )


def greedy_by_rank(
    g: LocalGraph, seed: Seed, kind: OrderingKind = FullPseudorandom()
) -> frozenset[Edge]:
    """Oracle: run greedy over all edges in ascending rank order."""
    key_of = _edge_key_fn(g, seed, kind)
    edges = sorted(g.edges(), key=key_of)
    used = bytearray(g.n)
    out = set()
    for u, v in edges:
        if not used[u] and not used[v]:
            used[u] = used[v] = 1
            out.add((u, v))
    return frozenset(out)


def verify_maximal(g: LocalGraph, matching: Iterable[Edge]) -> bool:
    """True iff the edge set is a matching and no edge of g can be added."""
    covered = bytearray(g.n)
    for u, v in matching:
        e = canonical_edge(u, v)
        if e[1] not in g.neighbors(e[0]):
            return False
        if covered[u] or covered[v]:
            return False
        covered[u] = covered[v] = 1
    for u, v in g.edges():
        if not covered[u] and not covered[v]:
            return False
    return True
