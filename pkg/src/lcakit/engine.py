"""Generic online-to-local evaluation engine.

A rule is any pure callable ``rule(vertex, x, deps) -> output`` where ``x``
is the vertex's static input and ``deps`` lists ``(neighbor, output)`` pairs
for the lower-ranked neighbors, ascending by rank.  Purity is what makes
answers independent of query order.

``eval_local`` answers one vertex by exploring its relevant set and replaying
the rule bottom-up; ``eval_global`` is the oracle that runs the whole arrival
sequence.  Whenever the local run does not truncate, the two agree exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Mapping

from .exploration import TruncationError, _closure
from .graphs import LocalGraph
from .ranks import FullPseudorandom, OrderingKind, Seed, rank_key_fn

Rule = Callable[[int, Any, list[tuple[int, Any]]], Any]


@dataclass
class EvalTrace:
    outputs: dict[int, Any]
    evaluation_order: list[int]
    probes: int


class _LazyDeps:
    """Dependency list that materializes on first access.

    A rule that never touches its dependencies never forces the evaluation
    of the rest of the relevant set, so its trace stays a single entry.
    """

    __slots__ = ("_force", "_items")

    def __init__(self, force: Callable[[], list]):
        self._force = force
        self._items = None

    def _get(self) -> list:
        if self._items is None:
            self._items = self._force()
        return self._items

    def __len__(self):
        return len(self._get())

    def __iter__(self):
        return iter(self._get())

    def __getitem__(self, i):
        return self._get()[i]

    def __eq__(self, other):
        return list(self._get()) == list(other)

    def __repr__(self):
        return repr(self._get())


def _input_fn(inputs) -> Callable[[int], Any]:
    if inputs is None:
        return lambda v: None
    if isinstance(inputs, Mapping):
        return lambda v: inputs.get(v)
    return inputs


def eval_local(
    g: LocalGraph,
    v0: int,
    rule: Rule,
    seed: Seed,
    kind: OrderingKind = FullPseudorandom(),
    cap: int = 1 << 20,
    inputs=None,
    rank_map: Callable[[int], tuple[int, int]] | None = None,
) -> tuple[Any, EvalTrace]:
    """Output of the online rule at v0, computed from its relevant set only.

    Raises :class:`TruncationError` (with probe statistics) if the relevant
    set exceeds ``cap``; the caller owns the fallback policy.
    """
    if not 0 <= v0 < g.n:
        raise ValueError(f"vertex {v0} out of range for n={g.n}")
    key_of = rank_map if rank_map is not None else rank_key_fn(seed, kind, g.n)
    order, keys, lower, probes, truncated = _closure(g.neighbors, v0, key_of, cap)
    if truncated:
        raise TruncationError(
            f"relevant set of vertex {v0} exceeded cap {cap}",
            probes=probes,
            size=len(order),
        )
    x_of = _input_fn(inputs)
    outputs: dict[int, Any] = {}

    def force_root_deps() -> list:
        # every non-root member outranks nothing above v0, so ascending
        # order evaluates all of v0's transitive dependencies first
        for v in order:
            if v == v0:
                break
            deps = [(w, outputs[w]) for w in sorted(lower[v], key=keys.__getitem__)]
            outputs[v] = rule(v, x_of(v), deps)
        return [(w, outputs[w]) for w in sorted(lower[v0], key=keys.__getitem__)]

    outputs[v0] = rule(v0, x_of(v0), _LazyDeps(force_root_deps))
    evaluated = [v for v in order if v in outputs]
    return outputs[v0], EvalTrace(outputs, evaluated, probes)


def eval_global(
    g: LocalGraph,
    rule: Rule,
    seed: Seed,
    kind: OrderingKind = FullPseudorandom(),
    inputs=None,
    rank_map: Callable[[int], tuple[int, int]] | None = None,
) -> EvalTrace:
    """Run the online rule over the full arrival order (the oracle)."""
    key_of = rank_map if rank_map is not None else rank_key_fn(seed, kind, g.n)
    keys = {v: key_of(v) for v in range(g.n)}
    order = sorted(range(g.n), key=keys.__getitem__)
    x_of = _input_fn(inputs)
    outputs: dict[int, Any] = {}
    probes = 0
    for v in order:
        probes += 1
        kv = keys[v]
        deps = sorted(
            (w for w in g.neighbors(v) if keys[w] < kv), key=keys.__getitem__
        )
        outputs[v] = rule(v, x_of(v), [(w, outputs[w]) for w in deps])
    return EvalTrace(outputs, order, probes)
