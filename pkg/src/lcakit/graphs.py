"""Graph, hypergraph, and balls-into-bins instance types plus seeded generators.

All instances are immutable after construction and validated on entry, so
algorithms can treat adjacency lookups as a trusted local oracle.  Every
generator is a pure function of (seed, parameters).

Text formats (one record per line, '#' comments allowed):

* graphs: header ``graph n=<n>`` then ``u v`` edge lines
* hypergraphs: header ``hypergraph m=<m>`` then ``e v1 ... vk`` lines
* CNF: DIMACS (``p cnf <vars> <clauses>`` then ``lit ... 0`` lines)
* ball choices: header ``choices n=<n> m=<m> d=<d>`` then ``ball bin1 ... bind``
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Iterable, Sequence

from .ranks import RandomStream, Seed


# ---------------------------------------------------------------------------
# Simple graphs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LocalGraph:
    """Undirected graph exposed through per-vertex neighbor lists.

    Invariants (checked in :meth:`from_edges`): symmetric adjacency, no
    self-loops, no duplicate neighbors, ``max_degree`` is the true maximum.
    """

    n: int
    adjacency: tuple[tuple[int, ...], ...]
    max_degree: int

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "LocalGraph":
        if n < 0:
            raise ValueError("vertex count must be non-negative")
        adj: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if v in adj[u]:
                raise ValueError(f"duplicate edge ({u}, {v})")
            adj[u].add(v)
            adj[v].add(u)
        adjacency = tuple(tuple(sorted(s)) for s in adj)
        max_degree = max((len(t) for t in adjacency), default=0)
        return cls(n, adjacency, max_degree)

    def neighbors(self, v: int) -> tuple[int, ...]:
        """N(v) in ascending id order."""
        if not 0 <= v < self.n:
            raise ValueError(f"vertex {v} out of range for n={self.n}")
        return self.adjacency[v]

    def degree(self, v: int) -> int:
        return len(self.neighbors(v))

    def edges(self) -> tuple[tuple[int, int], ...]:
        """All edges as canonical (min, max) pairs, sorted."""
        return tuple(
            (u, v) for u in range(self.n) for v in self.adjacency[u] if u < v
        )

    @property
    def edge_count(self) -> int:
        return sum(len(t) for t in self.adjacency) // 2


def path_graph(n: int) -> LocalGraph:
    """Path 0 - 1 - ... - (n-1)."""
    if n < 1:
        raise ValueError("path needs at least one vertex")
    return LocalGraph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def line_graph(g: LocalGraph) -> tuple[LocalGraph, tuple[tuple[int, int], ...]]:
    """Graph on g's edges; two edges are adjacent iff they share an endpoint.

    Returns the line graph plus the edge list mapping line-vertex index i to
    the original canonical edge.
    """
    edges = g.edges()
    index = {e: i for i, e in enumerate(edges)}
    pairs = set()
    incident: list[list[int]] = [[] for _ in range(g.n)]
    for i, (u, v) in enumerate(edges):
        incident[u].append(i)
        incident[v].append(i)
    for ids in incident:
        for a in range(len(ids)):
            for b in range(a + 1, len(ids)):
                pairs.add((min(ids[a], ids[b]), max(ids[a], ids[b])))
    lg = LocalGraph.from_edges(len(edges), sorted(pairs))
    return lg, edges


def gen_bounded_degree(seed: Seed, n: int, d: int) -> LocalGraph:
    """Random graph with maximum degree <= d.

    Configuration-style pairing: each vertex contributes d stubs, the stub
    list is shuffled, and consecutive stubs are paired; self-loops and
    duplicate edges are rejected.  Instances come out near d-regular.
    """
    if n < 1 or d < 1:
        raise ValueError("need n >= 1 and d >= 1")
    stream = RandomStream(seed, b"gen-bounded-degree")
    stubs = [v for v in range(n) for _ in range(d)]
    stream.shuffle(stubs)
    seen: set[tuple[int, int]] = set()
    edges = []
    for i in range(0, len(stubs) - 1, 2):
        u, v = stubs[i], stubs[i + 1]
        if u == v:
            continue
        key = (u, v) if u < v else (v, u)
        if key in seen:
            continue
        seen.add(key)
        edges.append(key)
    return LocalGraph.from_edges(n, edges)


def gen_binomial(seed: Seed, n: int, d: float) -> LocalGraph:
    """Erdos-Renyi style graph: each pair present independently w.p. d/n.

    Uses geometric skipping over the lexicographic pair order, so the cost is
    proportional to the number of edges, not pairs.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if not 0 < d < n:
        raise ValueError("need 0 < d < n so that the pair probability is in (0, 1)")
    p = d / n
    stream = RandomStream(seed, b"gen-binomial")
    log1mp = math.log1p(-p)
    edges = []
    v, w = 1, -1
    while v < n:
        r = stream.random()
        w += 1 + int(math.log1p(-r) / log1mp)
        while w >= v and v < n:
            w -= v
            v += 1
        if v < n:
            edges.append((w, v))
    return LocalGraph.from_edges(n, edges)


# ---------------------------------------------------------------------------
# Hypergraphs and CNF formulas
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Hypergraph:
    """k-uniform hypergraph with a per-vertex incidence transpose.

    ``dependency_degree`` is the maximum, over hyperedges, of the number of
    other hyperedges sharing at least one vertex.
    """

    m: int  # vertex count
    n: int  # hyperedge count
    k: int
    edges: tuple[tuple[int, ...], ...]
    vertex_incidence: tuple[tuple[int, ...], ...]
    dependency_degree: int

    @classmethod
    def from_edges(cls, m: int, edges: Sequence[Sequence[int]]) -> "Hypergraph":
        if m < 0:
            raise ValueError("vertex count must be non-negative")
        if not edges:
            return cls(m, 0, 0, (), tuple(() for _ in range(m)), 0)
        k = len(edges[0])
        if k < 2:
            raise ValueError("hyperedges need at least 2 vertices")
        cleaned = []
        incidence: list[list[int]] = [[] for _ in range(m)]
        for ei, edge in enumerate(edges):
            vs = tuple(sorted(edge))
            if len(vs) != k:
                raise ValueError(f"edge {ei} has {len(vs)} vertices, expected {k}")
            if len(set(vs)) != k:
                raise ValueError(f"edge {ei} repeats a vertex")
            if vs[0] < 0 or vs[-1] >= m:
                raise ValueError(f"edge {ei} out of range for m={m}")
            cleaned.append(vs)
            for v in vs:
                incidence[v].append(ei)
        dep = 0
        for ei, vs in enumerate(cleaned):
            others = set()
            for v in vs:
                others.update(incidence[v])
            others.discard(ei)
            dep = max(dep, len(others))
        return cls(
            m,
            len(cleaned),
            k,
            tuple(cleaned),
            tuple(tuple(ids) for ids in incidence),
            dep,
        )

    def vertices_of(self, e: int) -> tuple[int, ...]:
        return self.edges[e]

    def edges_of(self, v: int) -> tuple[int, ...]:
        if not 0 <= v < self.m:
            raise ValueError(f"vertex {v} out of range for m={self.m}")
        return self.vertex_incidence[v]


@dataclass(frozen=True)
class CnfFormula:
    """CNF with exactly k distinct variables per clause.

    Literals are (variable, is_positive) pairs; clauses "intersect" when they
    share a variable regardless of polarity.
    """

    m: int  # variable count
    n: int  # clause count
    k: int
    clauses: tuple[tuple[tuple[int, bool], ...], ...]
    variable_incidence: tuple[tuple[int, ...], ...]
    dependency_degree: int

    @classmethod
    def from_clauses(
        cls, m: int, clauses: Sequence[Sequence[tuple[int, bool]]]
    ) -> "CnfFormula":
        if m < 0:
            raise ValueError("variable count must be non-negative")
        if not clauses:
            return cls(m, 0, 0, (), tuple(() for _ in range(m)), 0)
        k = len(clauses[0])
        if k < 1:
            raise ValueError("clauses must be non-empty")
        cleaned = []
        incidence: list[list[int]] = [[] for _ in range(m)]
        for ci, clause in enumerate(clauses):
            lits = tuple(sorted((int(v), bool(s)) for v, s in clause))
            if len(lits) != k:
                raise ValueError(f"clause {ci} has {len(lits)} literals, expected {k}")
            vs = [v for v, _ in lits]
            if len(set(vs)) != k:
                raise ValueError(f"clause {ci} repeats a variable")
            if vs[0] < 0 or vs[-1] >= m:
                raise ValueError(f"clause {ci} out of range for m={m}")
            cleaned.append(lits)
            for v in vs:
                incidence[v].append(ci)
        dep = 0
        for ci, lits in enumerate(cleaned):
            others = set()
            for v, _ in lits:
                others.update(incidence[v])
            others.discard(ci)
            dep = max(dep, len(others))
        return cls(
            m,
            len(cleaned),
            k,
            tuple(cleaned),
            tuple(tuple(ids) for ids in incidence),
            dep,
        )

    def vars_of(self, c: int) -> tuple[int, ...]:
        return tuple(v for v, _ in self.clauses[c])

    def clauses_of(self, v: int) -> tuple[int, ...]:
        if not 0 <= v < self.m:
            raise ValueError(f"variable {v} out of range for m={self.m}")
        return self.variable_incidence[v]


def _cluster_plan(m: int, n: int, k: int, d: int) -> tuple[list[int], int]:
    """Partition n hyperedges into clusters and pick a shared-core size.

    Each cluster of size s is a sunflower: its edges share one core of c
    vertices and are otherwise disjoint, so each edge intersects exactly
    s - 1 <= d others and clusters never touch.  The core size c is the
    smallest value that fits the (m, n, k) vertex budget.
    """
    full = d + 1 if d >= 1 else 1
    sizes = [full] * (n // full)
    if n % full:
        sizes.append(n % full)
    n_clusters = len(sizes)
    if n == n_clusters:  # all singletons: no overlap possible
        if n * k > m:
            raise ValueError(
                f"infeasible: {n} disjoint edges of size {k} need {n * k} "
                f"vertices but only {m} are available (d={d} allows no overlap)"
            )
        return sizes, 1
    deficit = n * k - m
    c = max(1, -(-deficit // (n - n_clusters)))  # ceil division
    if c > k - 1:
        need = n * k - (k - 1) * (n - n_clusters)
        raise ValueError(
            f"infeasible: even with maximal overlap, {n} edges of size {k} "
            f"with dependency degree {d} need {need} vertices; m={m} given"
        )
    return sizes, c


def gen_hypergraph(seed: Seed, m: int, n: int, k: int, d: int) -> Hypergraph:
    """Random k-uniform hypergraph in which each edge intersects <= d others.

    Built by partitioning: shuffled edge ids are grouped into sunflower
    clusters over a shuffled vertex pool (see :func:`_cluster_plan`).
    Vertices left over stay isolated.
    """
    if k < 2:
        raise ValueError("need k >= 2")
    if n < 1 or m < k or d < 0:
        raise ValueError("need n >= 1, m >= k, d >= 0")
    sizes, c = _cluster_plan(m, n, k, d)
    stream = RandomStream(seed, b"gen-hypergraph")
    pool = list(range(m))
    stream.shuffle(pool)
    order = list(range(n))
    stream.shuffle(order)
    pos = 0
    edge_sets: list[tuple[int, ...] | None] = [None] * n
    it = iter(order)
    for s in sizes:
        core = pool[pos : pos + c]
        pos += c
        for _ in range(s):
            private = pool[pos : pos + (k - c)]
            pos += k - c
            edge_sets[next(it)] = tuple(core + private)
    return Hypergraph.from_edges(m, [e for e in edge_sets if e is not None])


def gen_cnf(seed: Seed, m: int, n: int, k: int, d: int) -> CnfFormula:
    """Random k-CNF in which each clause intersects <= d others.

    Same cluster construction as :func:`gen_hypergraph` over the variables;
    literal polarities are independent seeded coin flips.
    """
    if k < 2:
        raise ValueError("need k >= 2")
    if n < 1 or m < k or d < 0:
        raise ValueError("need n >= 1, m >= k, d >= 0")
    sizes, c = _cluster_plan(m, n, k, d)
    stream = RandomStream(seed, b"gen-cnf")
    pool = list(range(m))
    stream.shuffle(pool)
    order = list(range(n))
    stream.shuffle(order)
    pos = 0
    clause_sets: list[tuple[tuple[int, bool], ...] | None] = [None] * n
    it = iter(order)
    for s in sizes:
        core = pool[pos : pos + c]
        pos += c
        for _ in range(s):
            private = pool[pos : pos + (k - c)]
            pos += k - c
            vs = core + private
            clause_sets[next(it)] = tuple(
                (v, stream.randrange(2) == 1) for v in vs
            )
    return CnfFormula.from_clauses(m, [cl for cl in clause_sets if cl is not None])


# ---------------------------------------------------------------------------
# Balls into bins
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BipartiteChoices:
    """n balls, m bins, and each ball's d bin choices (repetition allowed).

    ``bin_incidence`` is the transpose: for each bin, the balls that chose
    it.  Optional metadata feeds specific decision rules: per-bin capacities
    (must sum to n_balls), per-bin group ids, per-bin circle positions.
    """

    n_balls: int
    m_bins: int
    d: int
    choices: tuple[tuple[int, ...], ...]
    bin_incidence: tuple[tuple[int, ...], ...]
    capacities: tuple[int, ...] | None = None
    group_of: tuple[int, ...] | None = None
    positions: tuple[float, ...] | None = None

    @classmethod
    def from_choices(
        cls,
        n_balls: int,
        m_bins: int,
        d: int,
        choices: Sequence[Sequence[int]],
        capacities: Sequence[int] | None = None,
        group_of: Sequence[int] | None = None,
        positions: Sequence[float] | None = None,
    ) -> "BipartiteChoices":
        if n_balls < 0 or m_bins < 1 or d < 1:
            raise ValueError("need n_balls >= 0, m_bins >= 1, d >= 1")
        if len(choices) != n_balls:
            raise ValueError(f"expected {n_balls} choice rows, got {len(choices)}")
        incidence: list[list[int]] = [[] for _ in range(m_bins)]
        rows = []
        for ball, row in enumerate(choices):
            row = tuple(row)
            if len(row) != d:
                raise ValueError(f"ball {ball} has {len(row)} choices, expected {d}")
            for u in row:
                if not 0 <= u < m_bins:
                    raise ValueError(f"ball {ball} chose bin {u} out of range")
            rows.append(row)
            for u in set(row):
                incidence[u].append(ball)
        if capacities is not None:
            capacities = tuple(int(x) for x in capacities)
            if len(capacities) != m_bins or any(x < 0 for x in capacities):
                raise ValueError("capacities must list one value >= 0 per bin")
            if sum(capacities) != n_balls:
                raise ValueError(
                    f"capacities sum to {sum(capacities)}, expected n_balls={n_balls}"
                )
        if group_of is not None:
            group_of = tuple(int(x) for x in group_of)
            if len(group_of) != m_bins:
                raise ValueError("group_of must list one group per bin")
        if positions is not None:
            positions = tuple(float(x) for x in positions)
            if len(positions) != m_bins or any(not 0 <= x < 1 for x in positions):
                raise ValueError("positions must list one point in [0, 1) per bin")
        return cls(
            n_balls,
            m_bins,
            d,
            tuple(rows),
            tuple(tuple(b) for b in incidence),
            capacities,
            group_of,
            positions,
        )

    def choices_of(self, ball: int) -> tuple[int, ...]:
        if not 0 <= ball < self.n_balls:
            raise ValueError(f"ball {ball} out of range for n={self.n_balls}")
        return self.choices[ball]

    def choosers_of(self, u: int) -> tuple[int, ...]:
        if not 0 <= u < self.m_bins:
            raise ValueError(f"bin {u} out of range for m={self.m_bins}")
        return self.bin_incidence[u]


def gen_bipartite_choices(
    seed: Seed,
    n_balls: int,
    m_bins: int,
    d: int,
    scheme: str = "uniform",
    capacities: Sequence[int] | None = None,
) -> BipartiteChoices:
    """Sample each ball's d bin choices under one of four schemes.

    * ``uniform``: d independent uniform bins (repetition possible).
    * ``grouped``: bins split into d contiguous near-equal groups; the i-th
      choice is uniform in group i (for the always-go-left rule).
    * ``capacity``: choices drawn with probability proportional to the given
      capacities (which must sum to n_balls).
    * ``circle``: bins sit at seeded points on a circle; each choice is the
      bin nearest to a fresh uniform point.
    """
    if d < 1 or m_bins < 1 or n_balls < 0:
        raise ValueError("need d >= 1, m_bins >= 1, n_balls >= 0")
    stream = RandomStream(seed, b"gen-bipartite:" + scheme.encode())
    if scheme == "uniform":
        rows = [
            tuple(stream.randrange(m_bins) for _ in range(d))
            for _ in range(n_balls)
        ]
        return BipartiteChoices.from_choices(n_balls, m_bins, d, rows)
    if scheme == "grouped":
        if m_bins < d:
            raise ValueError(f"grouped sampling needs m_bins >= d (got {m_bins} < {d})")
        bounds = [(i * m_bins) // d for i in range(d + 1)]
        group_of = tuple(
            next(i for i in range(d) if bounds[i] <= b < bounds[i + 1])
            for b in range(m_bins)
        )
        rows = []
        for _ in range(n_balls):
            row = tuple(
                bounds[i] + stream.randrange(bounds[i + 1] - bounds[i])
                for i in range(d)
            )
            rows.append(row)
        return BipartiteChoices.from_choices(
            n_balls, m_bins, d, rows, group_of=group_of
        )
    if scheme == "capacity":
        if capacities is None:
            raise ValueError("capacity sampling needs a capacities vector")
        caps = [int(x) for x in capacities]
        total = sum(caps)
        if len(caps) != m_bins or total <= 0:
            raise ValueError("capacities must cover every bin and sum to > 0")
        prefix = []
        acc = 0
        for x in caps:
            acc += x
            prefix.append(acc)
        rows = []
        for _ in range(n_balls):
            row = tuple(
                bisect_right(prefix, stream.randrange(total)) for _ in range(d)
            )
            rows.append(row)
        return BipartiteChoices.from_choices(
            n_balls, m_bins, d, rows, capacities=caps
        )
    if scheme == "circle":
        positions = tuple(stream.random() for _ in range(m_bins))
        ordered = sorted((p, b) for b, p in enumerate(positions))
        pts = [p for p, _ in ordered]

        def nearest(x: float) -> int:
            i = bisect_right(pts, x)
            best = None
            best_dist = 2.0
            for j in (i - 1, i % len(pts)):
                p, b = ordered[j % len(ordered)]
                dist = abs(x - p)
                dist = min(dist, 1.0 - dist)
                if dist < best_dist or (dist == best_dist and b < best):
                    best, best_dist = b, dist
            return best

        rows = [
            tuple(nearest(stream.random()) for _ in range(d))
            for _ in range(n_balls)
        ]
        return BipartiteChoices.from_choices(
            n_balls, m_bins, d, rows, positions=positions
        )
    raise ValueError(f"unknown sampling scheme {scheme!r}")


# ---------------------------------------------------------------------------
# Text formats
# ---------------------------------------------------------------------------


def _records(lines: Iterable[str], comment_chars: str = "#") -> Iterable[tuple[int, str]]:
    for lineno, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text or text[0] in comment_chars:
            continue
        yield lineno, text


def _parse_header(lineno: int, text: str, tag: str, fields: Sequence[str]) -> dict[str, int]:
    parts = text.split()
    if not parts or parts[0] != tag:
        raise ValueError(f"line {lineno}: expected '{tag}' header, got {text!r}")
    out = {}
    for part in parts[1:]:
        if "=" not in part:
            raise ValueError(f"line {lineno}: malformed header field {part!r}")
        key, _, val = part.partition("=")
        try:
            out[key] = int(val)
        except ValueError:
            raise ValueError(f"line {lineno}: non-integer header value {part!r}") from None
    missing = [f for f in fields if f not in out]
    if missing:
        raise ValueError(f"line {lineno}: header missing fields {missing}")
    return out


def load_graph(lines: Iterable[str]) -> LocalGraph:
    it = _records(lines)
    try:
        lineno, text = next(it)
    except StopIteration:
        raise ValueError("empty graph file") from None
    header = _parse_header(lineno, text, "graph", ["n"])
    n = header["n"]
    edges = []
    for lineno, text in it:
        parts = text.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'u v', got {text!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise ValueError(f"line {lineno}: non-integer vertex id in {text!r}") from None
        edges.append((u, v))
    try:
        return LocalGraph.from_edges(n, edges)
    except ValueError as exc:
        raise ValueError(f"invalid graph: {exc}") from None


def dump_graph(g: LocalGraph) -> str:
    out = [f"graph n={g.n}"]
    out.extend(f"{u} {v}" for u, v in g.edges())
    return "\n".join(out) + "\n"


def load_hypergraph(lines: Iterable[str]) -> Hypergraph:
    it = _records(lines)
    try:
        lineno, text = next(it)
    except StopIteration:
        raise ValueError("empty hypergraph file") from None
    header = _parse_header(lineno, text, "hypergraph", ["m"])
    m = header["m"]
    edges = []
    for lineno, text in it:
        parts = text.split()
        if parts[0] != "e" or len(parts) < 3:
            raise ValueError(f"line {lineno}: expected 'e v1 ... vk', got {text!r}")
        try:
            edges.append([int(x) for x in parts[1:]])
        except ValueError:
            raise ValueError(f"line {lineno}: non-integer vertex id in {text!r}") from None
    try:
        return Hypergraph.from_edges(m, edges)
    except ValueError as exc:
        raise ValueError(f"invalid hypergraph: {exc}") from None


def dump_hypergraph(h: Hypergraph) -> str:
    out = [f"hypergraph m={h.m}"]
    out.extend("e " + " ".join(str(v) for v in edge) for edge in h.edges)
    return "\n".join(out) + "\n"


def load_cnf(lines: Iterable[str]) -> CnfFormula:
    it = _records(lines, comment_chars="#c")
    try:
        lineno, text = next(it)
    except StopIteration:
        raise ValueError("empty CNF file") from None
    parts = text.split()
    if len(parts) != 4 or parts[0] != "p" or parts[1] != "cnf":
        raise ValueError(f"line {lineno}: expected 'p cnf <vars> <clauses>', got {text!r}")
    try:
        m, n = int(parts[2]), int(parts[3])
    except ValueError:
        raise ValueError(f"line {lineno}: non-integer problem size in {text!r}") from None
    clauses = []
    for lineno, text in it:
        try:
            nums = [int(x) for x in text.split()]
        except ValueError:
            raise ValueError(f"line {lineno}: non-integer literal in {text!r}") from None
        if not nums or nums[-1] != 0:
            raise ValueError(f"line {lineno}: clause must end with 0")
        lits = []
        for lit in nums[:-1]:
            if lit == 0:
                raise ValueError(f"line {lineno}: embedded 0 in clause")
            var = abs(lit) - 1
            lits.append((var, lit > 0))
        clauses.append(lits)
    if len(clauses) != n:
        raise ValueError(f"header declares {n} clauses but file has {len(clauses)}")
    try:
        return CnfFormula.from_clauses(m, clauses)
    except ValueError as exc:
        raise ValueError(f"invalid CNF: {exc}") from None


def dump_cnf(f: CnfFormula) -> str:
    out = [f"p cnf {f.m} {f.n}"]
    for clause in f.clauses:
        lits = " ".join(str(v + 1 if s else -(v + 1)) for v, s in clause)
        out.append(f"{lits} 0")
    return "\n".join(out) + "\n"


def load_choices(lines: Iterable[str]) -> BipartiteChoices:
    it = _records(lines)
    try:
        lineno, text = next(it)
    except StopIteration:
        raise ValueError("empty choices file") from None
    header = _parse_header(lineno, text, "choices", ["n", "m", "d"])
    n, m, d = header["n"], header["m"], header["d"]
    rows: dict[int, tuple[int, ...]] = {}
    for lineno, text in it:
        try:
            nums = [int(x) for x in text.split()]
        except ValueError:
            raise ValueError(f"line {lineno}: non-integer id in {text!r}") from None
        if len(nums) != d + 1:
            raise ValueError(
                f"line {lineno}: expected 'ball bin1 ... bin{d}', got {text!r}"
            )
        ball = nums[0]
        if ball in rows:
            raise ValueError(f"line {lineno}: duplicate ball {ball}")
        rows[ball] = tuple(nums[1:])
    if sorted(rows) != list(range(n)):
        raise ValueError(f"choices file must cover balls 0..{n - 1} exactly once")
    try:
        return BipartiteChoices.from_choices(n, m, d, [rows[b] for b in range(n)])
    except ValueError as exc:
        raise ValueError(f"invalid choices: {exc}") from None


def dump_choices(bc: BipartiteChoices) -> str:
    out = [f"choices n={bc.n_balls} m={bc.m_bins} d={bc.d}"]
    for ball, row in enumerate(bc.choices):
        out.append(str(ball) + " " + " ".join(str(u) for u in row))
    return "\n".join(out) + "\n"
