"""Dependency-closure exploration and idealized branching-tree simulation.

The closure of a query vertex is the set of items its simulated online
decision transitively depends on: start at the root and repeatedly add any
neighbor whose rank is lower than the rank of an item already in the set.
A vertex enters the set once (via its first successful discovery), but every
set member gets a full neighbor scan, so the set is closed: each member's
lower-ranked neighbors are all members.  That closure property is what makes
bottom-up replay exact.

The branching-tree sampler models the same growth process on idealized
infinite trees (fixed fan-out with per-child survival, or binomial
offspring), which is the right reference object for tail statistics.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, Union

from .graphs import BipartiteChoices, LocalGraph
from .ranks import (
    FullPseudorandom,
    OrderingKind,
    RandomStream,
    Rank,
    Seed,
    derive_subseed,
    rank_key_fn,
)


def ilog2ceil(x: int) -> int:
    """ceil(log2(x)) floored at 1, for x >= 1."""
    if x < 1:
        raise ValueError("need x >= 1")
    return max(1, (x - 1).bit_length())


class TruncationError(RuntimeError):
    """A relevant set exceeded its cap; carries the probe statistics."""

    def __init__(self, message: str, probes: int, size: int):
        super().__init__(message)
        self.probes = probes
        self.size = size


@dataclass(frozen=True)
class RelevantSet:
    """Closure of a query item, with exploration statistics.

    ``members`` is sorted ascending by rank and always contains the root.
    ``probes`` counts adjacency-oracle calls.  ``truncated`` means the cap
    was hit; the member list is then a prefix of the full closure.
    """

    root: int
    members: tuple[tuple[int, Rank], ...]
    probes: int
    truncated: bool

    def vertices(self) -> tuple[int, ...]:
        return tuple(v for v, _ in self.members)

    @property
    def size(self) -> int:
        return len(self.members)


def _closure(
    adj: Callable[[int], Iterable[int]],
    root: int,
    key_of: Callable[[int], tuple[int, int]],
    cap: int,
):
    """BFS decreasing-rank closure.

    Returns (order, keys, lower, probes, truncated) where ``order`` lists
    members ascending by rank, ``keys`` caches rank keys for every scanned
    item, and ``lower[v]`` lists v's lower-ranked neighbors (complete for
    every dequeued member).  A neighbor rejected from one parent may still
    join later via a higher-ranked parent; rejection is never memorized.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    keys: dict[int, tuple[int, int]] = {root: key_of(root)}
    members = {root}
    lower: dict[int, list[int]] = {}
    queue = deque([root])
    probes = 0
    truncated = False
    while queue and not truncated:
        v = queue.popleft()
        kv = keys[v]
        probes += 1
        lows: list[int] = []
        for w in adj(v):
            kw = keys.get(w)
            if kw is None:
                kw = key_of(w)
                keys[w] = kw
            if kw < kv:
                lows.append(w)
                if w not in members:
                    if len(members) >= cap:
                        truncated = True
                        break
                    members.add(w)
                    queue.append(w)
        lower[v] = lows
    order = sorted(members, key=keys.__getitem__)
    return order, keys, lower, probes, truncated


def explore(
    g: LocalGraph,
    root: int,
    seed: Seed,
    kind: OrderingKind = FullPseudorandom(),
    cap: int = 1 << 20,
) -> RelevantSet:
    """Relevant set of a graph vertex under the seeded arrival order.

    A neighbor w of a set member p joins iff rank(w) < rank(p).  Exploration
    stops, with ``truncated=True``, as soon as the member count would exceed
    ``cap``; truncation is a reported value, never an exception.
    """
    if not 0 <= root < g.n:
        raise ValueError(f"root {root} out of range for n={g.n}")
    key_of = rank_key_fn(seed, kind, g.n)
    order, keys, _, probes, truncated = _closure(g.neighbors, root, key_of, cap)
    members = tuple((v, Rank(*keys[v])) for v in order)
    return RelevantSet(root, members, probes, truncated)


def explore_bipartite(
    bc: BipartiteChoices,
    root_ball: int,
    seed: Seed,
    kind: OrderingKind = FullPseudorandom(),
    cap: int = 1 << 20,
    _key_of: Callable[[int], tuple[int, int]] | None = None,
) -> RelevantSet:
    """Relevant set of a ball: alternate over its bins and their choosers.

    From each set ball, visit its d chosen bins; from each such bin, add the
    balls that chose it and arrive earlier than the querying ball.  Bins are
    carriers only; members list balls.  Probes count both choice-list and
    chooser-list lookups.
    """
    if not 0 <= root_ball < bc.n_balls:
        raise ValueError(f"ball {root_ball} out of range for n={bc.n_balls}")
    if cap < 1:
        raise ValueError("cap must be >= 1")
    key_of = _key_of if _key_of is not None else rank_key_fn(seed, kind, bc.n_balls)
    keys = {root_ball: key_of(root_ball)}
    members = {root_ball}
    queue = deque([root_ball])
    probes = 0
    truncated = False
    while queue and not truncated:
        b = queue.popleft()
        kb = keys[b]
        probes += 1  # choices_of lookup
        for u in bc.choices_of(b):
            probes += 1  # choosers_of lookup
            for w in bc.choosers_of(u):
                if w in members:
                    continue
                kw = keys.get(w)
                if kw is None:
                    kw = key_of(w)
                    keys[w] = kw
                if kw < kb:
                    if len(members) >= cap:
                        truncated = True
                        break
                    members.add(w)
                    queue.append(w)
            if truncated:
                break
    order = sorted(members, key=keys.__getitem__)
    out = tuple((b, Rank(*keys[b])) for b in order)
    return RelevantSet(root_ball, out, probes, truncated)


# ---------------------------------------------------------------------------
# Idealized branching trees
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Regular:
    """Fan-out d with independent per-child survival probability 1/L."""

    d: int
    L: int

    def __post_init__(self) -> None:
        if self.d < 0 or self.L < 1:
            raise ValueError("need d >= 0 and L >= 1")

    @property
    def mean(self) -> float:
        return self.d / self.L


@dataclass(frozen=True)
class Binomial:
    """Offspring counts drawn from B(n, q)."""

    n: int
    q: float

    def __post_init__(self) -> None:
        if self.n < 0 or not 0 <= self.q <= 1:
            raise ValueError("need n >= 0 and q in [0, 1]")

    @property
    def mean(self) -> float:
        return self.n * self.q


OffspringSpec = Union[Regular, Binomial]


@dataclass(frozen=True)
class GwTreeSample:
    """One sampled branching tree: node count, max depth, finite-within-cap."""

    size: int
    depth: int
    extinct: bool


def _binomial_draw(stream: RandomStream, n: int, q: float) -> int:
    """Exact inverse-CDF binomial sample; cheap when n*q is small."""
    if q <= 0.0 or n == 0:
        return 0
    if q >= 1.0:
        return n
    u = stream.random()
    ratio = q / (1.0 - q)
    prob = (1.0 - q) ** n
    cdf = prob
    k = 0
    while u >= cdf and k < n:
        prob *= ratio * (n - k) / (k + 1)
        k += 1
        cdf += prob
    return k


def sample_gw_tree(
    seed: Seed,
    offspring: OffspringSpec,
    cap: int = 1 << 20,
) -> GwTreeSample:
    """Simulate one branching tree; stop (not extinct) if the cap is hit.

    Subcritical specs only: the mean offspring count must be below one so
    that trees are finite with probability one.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    if offspring.mean >= 1:
        raise ValueError(
            f"mean offspring {offspring.mean} >= 1; only subcritical "
            "(guaranteed-extinction) specs are supported"
        )
    stream = RandomStream(seed, b"gw-tree")
    size = 1
    depth = 0
    frontier = 1
    while frontier:
        children = 0
        for _ in range(frontier):
            if isinstance(offspring, Regular):
                got = 0
                for _ in range(offspring.d):
                    if stream.randrange(offspring.L) == 0:
                        got += 1
            else:
                got = _binomial_draw(stream, offspring.n, offspring.q)
            children += got
            if size + children > cap:
                return GwTreeSample(cap, depth + 1, extinct=False)
        size += children
        if children:
            depth += 1
        frontier = children
    return GwTreeSample(size, depth, extinct=True)


# ---------------------------------------------------------------------------
# Aggregate statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TreeStatsSpec:
    """One exploration experiment: generator, size, and query counts.

    ``trials = instances * queries_per_instance``; each query explores from a
    seeded random root under a fresh derived ordering, so trials are
    independent (instance, root) pairs.
    """

    generator: str  # "bounded" | "binomial"
    n: int
    d: int
    instances: int = 10
    queries_per_instance: int = 1000
    cap: int = 1 << 14
    kind: OrderingKind = FullPseudorandom()
    thresholds: tuple[int, ...] = ()


@dataclass(frozen=True)
class TreeStats:
    """Histogram summary of relevant-set sizes over many trials."""

    trials: int
    sizes: tuple[tuple[int, int], ...]  # (size, count), ascending
    max_size: int
    mean_size: float
    tail: tuple[tuple[int, float], ...]  # (threshold, Pr[size > threshold])
    truncated_trials: int = 0

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "mean": self.mean_size,
            "max": self.max_size,
            "histogram": [[s, c] for s, c in self.sizes],
            "tail": [[t, p] for t, p in self.tail],
            "truncated_trials": self.truncated_trials,
        }


def stats_from_sizes(
    sizes: Sequence[int], thresholds: Sequence[int] = (), truncated: int = 0
) -> TreeStats:
    if not sizes:
        raise ValueError("need at least one trial")
    hist: dict[int, int] = {}
    for s in sizes:
        hist[s] = hist.get(s, 0) + 1
    trials = len(sizes)
    tail = tuple(
        (t, sum(c for s, c in hist.items() if s > t) / trials) for t in thresholds
    )
    return TreeStats(
        trials=trials,
        sizes=tuple(sorted(hist.items())),
        max_size=max(sizes),
        mean_size=sum(sizes) / trials,
        tail=tail,
        truncated_trials=truncated,
    )


def _generate(generator: str, seed: Seed, n: int, d: int) -> LocalGraph:
    from . import graphs

    if generator == "bounded":
        return graphs.gen_bounded_degree(seed, n, d)
    if generator == "binomial":
        return graphs.gen_binomial(seed, n, d)
    raise ValueError(f"unknown generator {generator!r}")


def explore_sizes(spec: TreeStatsSpec, seed: Seed) -> tuple[list[int], int]:
    """Relevant-set sizes for every (instance, query) pair of a spec."""
    if spec.instances < 1 or spec.queries_per_instance < 1:
        raise ValueError("need at least one instance and one query")
    sizes: list[int] = []
    truncated = 0
    for i in range(spec.instances):
        gseed = derive_subseed(seed, b"instance:%d" % i)
        g = _generate(spec.generator, gseed, spec.n, spec.d)
        roots = RandomStream(derive_subseed(seed, b"roots:%d" % i), b"root")
        for q in range(spec.queries_per_instance):
            oseed = derive_subseed(seed, b"order:%d:%d" % (i, q))
            root = roots.randrange(g.n)
            rs = explore(g, root, oseed, spec.kind, spec.cap)
            sizes.append(rs.size)
            if rs.truncated:
                truncated += 1
    return sizes, truncated


def tree_stats(spec: TreeStatsSpec, seed: Seed) -> TreeStats:
    """Run a full exploration experiment and aggregate the histogram."""
    sizes, truncated = explore_sizes(spec, seed)
    return stats_from_sizes(sizes, spec.thresholds, truncated)


def gw_sizes(
    seed: Seed, offspring: OffspringSpec, trials: int, cap: int = 1 << 20
) -> list[GwTreeSample]:
    """Sample many branching trees under per-trial derived subseeds."""
    if trials < 1:
        raise ValueError("need trials >= 1")
    return [
        sample_gw_tree(derive_subseed(seed, b"gw:%d" % t), offspring, cap)
        for t in range(trials)
    ]


def tail_slope(sizes: Sequence[int], lo: int, hi: int) -> float:
    """Least-squares slope of log2 Pr[size >= s] against s over [lo, hi].

    Only thresholds with nonzero empirical exceedance contribute (the log is
    undefined at zero); at least two points are required.
    """
    n = len(sizes)
    pts = []
    for s in range(lo, hi + 1):
        count = sum(1 for x in sizes if x >= s)
        if count > 0:
            pts.append((s, math.log2(count / n)))
    if len(pts) < 2:
        raise ValueError("not enough nonzero tail points for a slope fit")
    xs = [x for x, _ in pts]
    ys = [y for _, y in pts]
    mx = sum(xs) / len(xs)
    my = sum(ys) / len(ys)
    num = sum((x - mx) * (y - my) for x, y in pts)
    den = sum((x - mx) ** 2 for x in xs)
    return num / den
