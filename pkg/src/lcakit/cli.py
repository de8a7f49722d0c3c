"""Experiment runner CLI.

Every subcommand is a pure function of its flags: the seed is explicit (or
taken from ``LCAKIT_SEED``, but always echoed), trials use derived subseeds,
and reports are emitted without timing data, so rerunning an echoed spec
reproduces the report byte for byte.  Wall-clock time goes to stderr.

Exit codes: 0 success, 2 invalid parameters, 3 instance generation failed,
4 algorithm failure budget exceeded (or acceptance criteria failed).
"""

from __future__ import annotations

import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from importlib import resources

import click

from . import __version__, acceptance, ballsbins, coloring, exploration, graphs, matching
from .exploration import (
    Binomial,
    Regular,
    TreeStatsSpec,
    explore,
    stats_from_sizes,
    tail_slope,
)
from .ranks import FullPseudorandom, KWiseIndependent, Seed, derive_subseed, next_prime

DEFAULT_SEED_HEX = "c0ffee00" * 8

EXIT_GENERATION = 3
EXIT_BUDGET = 4


# ---------------------------------------------------------------------------
# Report plumbing
# ---------------------------------------------------------------------------


def load_schema() -> dict:
    with resources.files("lcakit").joinpath("report_schema.json").open() as fh:
        return json.load(fh)


def validate_report(report: dict, schema: dict | None = None, path: str = "$") -> None:
    """Check a report against the checked-in structural schema."""
    schema = schema if schema is not None else load_schema()
    expected = schema.get("type")
    kinds = {
        "object": dict,
        "array": list,
        "string": str,
        "integer": int,
        "number": (int, float),
        "boolean": bool,
    }
    if expected is not None:
        if expected == "integer" and isinstance(report, bool):
            raise ValueError(f"{path}: expected integer, got boolean")
        if not isinstance(report, kinds[expected]):
            raise ValueError(f"{path}: expected {expected}, got {type(report).__name__}")
    if expected == "object":
        for key in schema.get("required", []):
            if key not in report:
                raise ValueError(f"{path}: missing required field {key!r}")
        for key, sub in schema.get("properties", {}).items():
            if key in report:
                validate_report(report[key], sub, f"{path}.{key}")


def _report(subcommand: str, spec: dict, results: dict) -> dict:
    report = {
        "schema_version": 1,
        "subcommand": subcommand,
        "spec": spec,
        "results": results,
        "fingerprint": {
            "package": "lcakit",
            "version": __version__,
            "seed": spec.get("seed", ""),
        },
    }
    validate_report(report)
    return report


def _emit(report: dict, out: str | None, fmt: str, csv_rows=None) -> None:
    """Serialize fully, then write once (temp file + rename when to disk)."""
    if fmt == "json":
        text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    else:
        header, rows = csv_rows() if csv_rows else (["key", "value"], [])
        lines = [",".join(header)]
        lines.extend(",".join(str(x) for x in row) for row in rows)
        text = "\n".join(lines) + "\n"
    if out is None:
        click.echo(text, nl=False)
    else:
        tmp = out + ".tmp"
        with open(tmp, "w") as fh:
            fh.write(text)
        os.replace(tmp, out)


def _parallel_map(fn, args_list, jobs: int) -> list:
    """Order-preserving map, optionally across processes."""
    if jobs <= 1 or len(args_list) <= 1:
        return [fn(a) for a in args_list]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, args_list))


def _ordering(name: str, kwise_k: int, universe: int):
    if name == "full":
        return FullPseudorandom()
    return KWiseIndependent(kwise_k, next_prime(max(universe, 2) ** 3))


def _generate(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ValueError as exc:
        click.echo(f"instance generation failed: {exc}", err=True)
        sys.exit(EXIT_GENERATION)


# ---------------------------------------------------------------------------
# Experiments callable as a library
# ---------------------------------------------------------------------------


def lower_bound_experiment(path_len: int, trials: int, seed: Seed) -> float:
    """Frequency with which the closure from a path endpoint spans the path.

    Each trial explores a fresh derived ordering on a path of ``path_len``
    vertices from vertex 0; the full path is reached exactly when the ranks
    decrease monotonically along it, so the frequency estimates 1/path_len!.
    """
    if path_len < 2:
        raise ValueError("need path_len >= 2")
    if trials < 1:
        raise ValueError("need trials >= 1")
    g = graphs.path_graph(path_len)
    hits = 0
    for t in range(trials):
        sub = derive_subseed(seed, b"trial:%d" % t)
        if explore(g, 0, sub, cap=path_len).size == path_len:
            hits += 1
    return hits / trials


# -- parallel workers (top level so they pickle) -----------------------------


def _tree_stats_worker(args) -> tuple[list[int], int]:
    (gen, n, d, queries, cap, seed_hex, instance) = args
    seed = Seed.from_hex(seed_hex)
    spec = TreeStatsSpec(gen, n, d, instances=1, queries_per_instance=queries, cap=cap)
    # reproduce exactly the serial per-instance derivation
    sizes: list[int] = []
    truncated = 0
    gseed = derive_subseed(seed, b"instance:%d" % instance)
    g = exploration._generate(gen, gseed, n, d)
    roots = exploration.RandomStream(
        derive_subseed(seed, b"roots:%d" % instance), b"root"
    )
    for q in range(queries):
        oseed = derive_subseed(seed, b"order:%d:%d" % (instance, q))
        rs = explore(g, roots.randrange(g.n), oseed, spec.kind, cap)
        sizes.append(rs.size)
        if rs.truncated:
            truncated += 1
    return sizes, truncated


def _gw_worker(args) -> list[int]:
    (mode, d, big_l, n, q, cap, seed_hex, lo, hi) = args
    seed = Seed.from_hex(seed_hex)
    spec = Regular(d, big_l) if mode == "regular" else Binomial(n, q)
    out = []
    for t in range(lo, hi):
        sample = exploration.sample_gw_tree(
            derive_subseed(seed, b"gw:%d" % t), spec, cap
        )
        out.append(sample.size)
    return out


def _coloring_worker(args) -> dict:
    (kind, m, n, k, d, lenient, seed_hex, trial, input_path) = args
    seed = Seed.from_hex(seed_hex)
    iseed = derive_subseed(seed, b"instance:%d" % trial)
    rseed = derive_subseed(seed, b"ranks:%d" % trial)
    params = coloring.ColoringParams(lenient=lenient)
    out = {"trial": trial, "failed": False, "valid": None, "phases": {}, "max_probes": 0}
    try:
        if kind == "coloring":
            if input_path is not None:
                with open(input_path) as fh:
                    inst = graphs.load_hypergraph(fh)
            else:
                inst = graphs.gen_hypergraph(iseed, m, n, k, d)
            state = coloring.coloring_state(inst, rseed, params)
        else:
            if input_path is not None:
                with open(input_path) as fh:
                    inst = graphs.load_cnf(fh)
            else:
                inst = graphs.gen_cnf(iseed, m, n, k, d)
            state = coloring.sat_state(inst, rseed, params)
        values = []
        for x in range(inst.m):
            val, phase, probes = state.query(x)
            values.append(val)
            out["phases"][str(phase)] = out["phases"].get(str(phase), 0) + 1
            out["max_probes"] = max(out["max_probes"], probes)
        if kind == "coloring":
            out["valid"] = coloring.verify_coloring(inst, values)
        else:
            out["valid"] = coloring.verify_assignment(inst, [bool(v) for v in values])
        out["values"] = values
    except coloring.ColoringFailure as exc:
        out["failed"] = True
        out["reason"] = exc.reason
    return out


def _ballsbins_worker(args) -> dict:
    (n, m, d, rule_name, scheme, caps, cap, trial, seed_hex) = args
    seed = Seed.from_hex(seed_hex)
    bc = graphs.gen_bipartite_choices(
        derive_subseed(seed, b"instance:%d" % trial), n, m, d, scheme, capacities=caps
    )
    rseed = derive_subseed(seed, b"ranks:%d" % trial)
    rule = ballsbins.RULES[rule_name]
    assignments, profile = ballsbins.assign_all(bc, rule, rseed, cap=cap)
    return {
        "trial": trial,
        "failures": sum(1 for a in assignments if a.failed),
        "max_load": profile.max_load,
        "probes_mean": sum(a.probes for a in assignments) / max(1, len(assignments)),
        "probes_max": max((a.probes for a in assignments), default=0),
        "rows": [(a.ball, a.bin, int(a.failed), a.probes) for a in assignments],
    }


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------


@click.group()
@click.option(
    "--seed",
    envvar="LCAKIT_SEED",
    default=DEFAULT_SEED_HEX,
    help="64 hex characters; defaults to LCAKIT_SEED or a fixed constant.",
)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--jobs", type=click.IntRange(1, 256), default=1, show_default=True)
@click.pass_context
def main(ctx, seed, fmt, out, jobs):
    """Reproducible experiments over the local-query algorithms."""
    try:
        parsed = Seed.from_hex(seed)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    ctx.obj = {"seed": parsed, "seed_hex": parsed.hex(), "fmt": fmt, "out": out, "jobs": jobs}


def _finish(ctx, subcommand: str, spec: dict, results: dict, csv_rows=None, t0=None):
    report = _report(subcommand, spec, results)
    _emit(report, ctx.obj["out"], ctx.obj["fmt"], csv_rows)
    if t0 is not None:
        click.echo(f"[{subcommand}] wall clock {time.time() - t0:.2f}s", err=True)


@main.command("tree-stats")
@click.option("--generator", type=click.Choice(["bounded", "binomial"]), default="bounded")
@click.option("--n", type=click.IntRange(1), default=1024, show_default=True)
@click.option("--d", type=click.IntRange(1), default=5, show_default=True)
@click.option("--instances", type=click.IntRange(1), default=10, show_default=True)
@click.option("--queries", type=click.IntRange(1), default=1000, show_default=True)
@click.option("--cap", type=click.IntRange(1), default=4096, show_default=True)
@click.option("--thresholds", default="", help="comma-separated tail thresholds")
@click.pass_context
def tree_stats_cmd(ctx, generator, n, d, instances, queries, cap, thresholds):
    """Relevant-set size statistics over many (instance, root) trials."""
    t0 = time.time()
    thresh = tuple(int(x) for x in thresholds.split(",") if x.strip())
    if generator == "binomial" and d >= n:
        raise click.UsageError("binomial generator needs d < n")
    args = [
        (generator, n, d, queries, cap, ctx.obj["seed_hex"], i) for i in range(instances)
    ]
    try:
        chunks = _parallel_map(_tree_stats_worker, args, ctx.obj["jobs"])
    except ValueError as exc:
        click.echo(f"instance generation failed: {exc}", err=True)
        sys.exit(EXIT_GENERATION)
    sizes: list[int] = []
    truncated = 0
    for chunk_sizes, chunk_trunc in chunks:
        sizes.extend(chunk_sizes)
        truncated += chunk_trunc
    stats = stats_from_sizes(sizes, thresh, truncated)
    spec = {
        "seed": ctx.obj["seed_hex"],
        "generator": generator,
        "n": n,
        "d": d,
        "instances": instances,
        "queries": queries,
        "cap": cap,
        "thresholds": list(thresh),
    }
    _finish(
        ctx,
        "tree-stats",
        spec,
        stats.to_dict(),
        csv_rows=lambda: (["size", "count"], list(stats.sizes)),
        t0=t0,
    )


@main.command("gw-sim")
@click.option("--mode", type=click.Choice(["regular", "binomial"]), default="regular")
@click.option("--d", type=click.IntRange(0), default=3, show_default=True)
@click.option("--big-l", "big_l", type=click.IntRange(1), default=9, show_default=True)
@click.option("--n", type=click.IntRange(1), default=10000, show_default=True)
@click.option("--q", type=float, default=None, help="binomial offspring probability; defaults to d/(n*L)")
@click.option("--trials", type=click.IntRange(1), default=10000, show_default=True)
@click.option("--cap", type=click.IntRange(1), default=1 << 20, show_default=True)
@click.option("--slope-range", default="5,30", show_default=True)
@click.pass_context
def gw_sim_cmd(ctx, mode, d, big_l, n, q, trials, cap, slope_range):
    """Monte-Carlo branching-tree sizes for the idealized growth process."""
    t0 = time.time()
    if q is None:
        q = d / (n * big_l)
    if mode == "regular" and d >= big_l:
        raise click.UsageError("regular mode needs d < L (subcritical)")
    if mode == "binomial" and n * q >= 1:
        raise click.UsageError("binomial mode needs n*q < 1 (subcritical)")
    jobs = ctx.obj["jobs"]
    bounds = [trials * i // jobs for i in range(jobs + 1)]
    args = [
        (mode, d, big_l, n, q, cap, ctx.obj["seed_hex"], bounds[i], bounds[i + 1])
        for i in range(jobs)
        if bounds[i] < bounds[i + 1]
    ]
    sizes: list[int] = []
    for chunk in _parallel_map(_gw_worker, args, jobs):
        sizes.extend(chunk)
    stats = stats_from_sizes(sizes)
    lo, hi = (int(x) for x in slope_range.split(","))
    try:
        slope = tail_slope(sizes, lo, hi)
    except ValueError:
        slope = None
    results = stats.to_dict()
    results["tail_slope"] = slope
    results["mode"] = mode
    spec = {
        "seed": ctx.obj["seed_hex"],
        "mode": mode,
        "d": d,
        "L": big_l,
        "n": n,
        "q": q,
        "trials": trials,
        "cap": cap,
        "slope_range": slope_range,
    }
    _finish(
        ctx,
        "gw-sim",
        spec,
        results,
        csv_rows=lambda: (["size", "count"], list(stats.sizes)),
        t0=t0,
    )


@main.command("matching")
@click.option("--n", type=click.IntRange(1), default=1000, show_default=True)
@click.option("--d", type=click.IntRange(1), default=5, show_default=True)
@click.option("--cap", type=click.IntRange(1), default=acceptance.MATCHING_CAP, show_default=True)
@click.option("--edge", default=None, help="query one edge, as 'u,v'")
@click.option("--trials", type=click.IntRange(1), default=1, show_default=True)
@click.option("--ordering", type=click.Choice(["full", "kwise"]), default="full")
@click.option("--kwise-k", type=click.IntRange(1), default=32, show_default=True)
@click.option("--failure-budget", type=float, default=0.01, show_default=True)
@click.pass_context
def matching_cmd(ctx, n, d, cap, edge, trials, ordering, kwise_k, failure_budget):
    """Per-edge matching verdicts or full-matching summaries with probe stats."""
    t0 = time.time()
    seed = ctx.obj["seed"]
    kind = _ordering(ordering, kwise_k, n * n)
    per_trial = []
    failures = 0
    rows = []
    for t in range(trials):
        g = _generate(
            graphs.gen_bounded_degree, derive_subseed(seed, b"instance:%d" % t), n, d
        )
        rseed = derive_subseed(seed, b"ranks:%d" % t)
        if edge is not None:
            try:
                u, v = (int(x) for x in edge.split(","))
            except ValueError:
                raise click.UsageError("--edge must be 'u,v'")
            try:
                verdict = matching.is_matched(g, (u, v), rseed, kind, cap)
            except ValueError as exc:
                raise click.UsageError(str(exc))
            except exploration.TruncationError:
                failures += 1
                continue
            rows.append((t, u, v, int(verdict.matched), verdict.probes, verdict.edges_evaluated))
            per_trial.append(
                {
                    "trial": t,
                    "matched": verdict.matched,
                    "probes": verdict.probes,
                    "edges_evaluated": verdict.edges_evaluated,
                }
            )
        else:
            try:
                verdicts = matching.all_verdicts(g, rseed, kind, cap)
            except exploration.TruncationError:
                failures += 1
                continue
            full = frozenset(e for e, v in verdicts.items() if v.matched)
            maximal = matching.verify_maximal(g, full)
            rows.extend(
                (t, u, v, int(w.matched), w.probes, w.edges_evaluated)
                for (u, v), w in sorted(verdicts.items())
            )
            probes = [w.probes for w in verdicts.values()]
            per_trial.append(
                {
                    "trial": t,
                    "edges": g.edge_count,
                    "matched": len(full),
                    "maximal": maximal,
                    "probes_mean": sum(probes) / max(1, len(probes)),
                    "probes_max": max(probes, default=0),
                }
            )
    results = {"trials": trials, "failures": failures, "per_trial": per_trial}
    spec = {
        "seed": ctx.obj["seed_hex"],
        "n": n,
        "d": d,
        "cap": cap,
        "edge": edge,
        "trials": trials,
        "ordering": ordering,
        "kwise_k": kwise_k,
    }
    _finish(
        ctx,
        "matching",
        spec,
        results,
        csv_rows=lambda: (["trial", "u", "v", "matched", "probes", "edges_evaluated"], rows),
        t0=t0,
    )
    if failures / trials > failure_budget:
        click.echo(f"failure budget exceeded: {failures}/{trials}", err=True)
        sys.exit(EXIT_BUDGET)


def _coloring_like(ctx, kind, m, n, k, d, trials, lenient, failure_budget, t0, input_path=None):
    args = [
        (kind, m, n, k, d, lenient, ctx.obj["seed_hex"], t, input_path)
        for t in range(trials)
    ]
    if input_path is None:
        # probe generation errors once up front (workers would each hit the same)
        _generate(
            graphs.gen_hypergraph if kind == "coloring" else graphs.gen_cnf,
            derive_subseed(ctx.obj["seed"], b"instance:0"),
            m,
            n,
            k,
            d,
        )
    outs = _parallel_map(_coloring_worker, args, ctx.obj["jobs"])
    failures = sum(1 for o in outs if o["failed"])
    invalid = sum(1 for o in outs if o["valid"] is False)
    phases: dict[str, int] = {}
    max_probes = 0
    for o in outs:
        for ph, count in o["phases"].items():
            phases[ph] = phases.get(ph, 0) + count
        max_probes = max(max_probes, o["max_probes"])
    first_values = next((o["values"] for o in outs if not o["failed"]), [])
    if kind == "coloring":
        rendered = [coloring.COLORS[v] for v in first_values]
    else:
        rendered = [bool(v) for v in first_values]
    results = {
        "trials": trials,
        "failures": failures,
        "invalid": invalid,
        "phase_histogram": phases,
        "max_probes": max_probes,
        "first_trial_values": rendered,
        "per_trial": [
            {
                "trial": o["trial"],
                "failed": o["failed"],
                "valid": o["valid"],
                "max_probes": o["max_probes"],
                **({"reason": o["reason"]} if "reason" in o else {}),
            }
            for o in outs
        ],
    }
    spec = {
        "seed": ctx.obj["seed_hex"],
        "m": m,
        "n": n,
        "k": k,
        "d": d,
        "trials": trials,
        "lenient": lenient,
        "input": input_path,
    }
    _finish(
        ctx,
        kind,
        spec,
        results,
        csv_rows=lambda: (
            ["item", "value"],
            list(enumerate(rendered)),
        ),
        t0=t0,
    )
    if (failures + invalid) / trials > failure_budget:
        click.echo(f"failure budget exceeded: {failures + invalid}/{trials}", err=True)
        sys.exit(EXIT_BUDGET)


def _load_instance_params(kind: str, input_path: str):
    loader = graphs.load_hypergraph if kind == "coloring" else graphs.load_cnf
    try:
        with open(input_path) as fh:
            inst = loader(fh)
    except (OSError, ValueError) as exc:
        raise click.UsageError(f"cannot load {input_path}: {exc}")
    return inst.m, inst.n, inst.k, inst.dependency_degree


@main.command("coloring")
@click.option("--m", type=click.IntRange(1), default=800, show_default=True)
@click.option("--n", type=click.IntRange(1), default=40, show_default=True)
@click.option("--k", type=click.IntRange(2), default=40, show_default=True)
@click.option("--d", type=click.IntRange(0), default=2, show_default=True)
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="hypergraph file to color instead of generating")
@click.option("--trials", type=click.IntRange(1), default=1, show_default=True)
@click.option("--strict/--lenient", "strict", default=True, show_default=True)
@click.option("--failure-budget", type=float, default=0.01, show_default=True)
@click.pass_context
def coloring_cmd(ctx, m, n, k, d, input_path, trials, strict, failure_budget):
    """Query-complete hypergraph 2-colorings with validity checking."""
    t0 = time.time()
    if input_path is not None:
        m, n, k, d = _load_instance_params("coloring", input_path)
    try:
        if n > 0:
            coloring.compute_thresholds(k, d, lenient=not strict)
    except coloring.ThresholdError as exc:
        raise click.UsageError(str(exc))
    _coloring_like(ctx, "coloring", m, n, k, d, trials, not strict, failure_budget,
                   t0, input_path)


@main.command("ksat")
@click.option("--m", type=click.IntRange(1), default=800, show_default=True)
@click.option("--n", type=click.IntRange(1), default=40, show_default=True)
@click.option("--k", type=click.IntRange(2), default=40, show_default=True)
@click.option("--d", type=click.IntRange(0), default=2, show_default=True)
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="DIMACS file to satisfy instead of generating")
@click.option("--trials", type=click.IntRange(1), default=1, show_default=True)
@click.option("--strict/--lenient", "strict", default=True, show_default=True)
@click.option("--failure-budget", type=float, default=0.01, show_default=True)
@click.pass_context
def ksat_cmd(ctx, m, n, k, d, input_path, trials, strict, failure_budget):
    """Query-complete satisfying assignments with validity checking."""
    t0 = time.time()
    if input_path is not None:
        m, n, k, d = _load_instance_params("ksat", input_path)
    try:
        if n > 0:
            coloring.compute_thresholds(k, d, lenient=not strict)
    except coloring.ThresholdError as exc:
        raise click.UsageError(str(exc))
    _coloring_like(ctx, "ksat", m, n, k, d, trials, not strict, failure_budget,
                   t0, input_path)


@main.command("balls-bins")
@click.option("--n", type=click.IntRange(0), default=10000, show_default=True)
@click.option("--m", type=click.IntRange(1), default=10000, show_default=True)
@click.option("--d", type=click.IntRange(1), default=2, show_default=True)
@click.option("--rule", type=click.Choice(sorted(ballsbins.RULES)), default="least-loaded")
@click.option("--capacities", type=click.Path(exists=True, dir_okay=False), default=None,
              help="file with one integer capacity per line (capacity rule)")
@click.option("--cap-constant", type=click.IntRange(1), default=ballsbins.DEFAULT_CAP_CONSTANT,
              show_default=True)
@click.option("--trials", type=click.IntRange(1), default=1, show_default=True)
@click.option("--failure-budget", type=float, default=0.01, show_default=True)
@click.pass_context
def balls_bins_cmd(ctx, n, m, d, rule, capacities, cap_constant, trials, failure_budget):
    """Local load balancing: failure rate, max-load and probe statistics."""
    t0 = time.time()
    scheme = {
        "least-loaded": "uniform",
        "always-go-left": "grouped",
        "capacity": "capacity",
        "circle": "circle",
    }[rule]
    caps = None
    if scheme == "capacity":
        if capacities is not None:
            with open(capacities) as fh:
                caps = [int(line.strip()) for line in fh if line.strip()]
        else:
            base, extra = divmod(n, m)
            caps = [base + (1 if i < extra else 0) for i in range(m)]
    cap = ballsbins.default_cap(m, cap_constant)
    args = [
        (n, m, d, rule, scheme, caps, cap, t, ctx.obj["seed_hex"]) for t in range(trials)
    ]
    _generate(
        graphs.gen_bipartite_choices,
        derive_subseed(ctx.obj["seed"], b"instance:0"),
        n,
        m,
        d,
        scheme,
        capacities=caps,
    )
    outs = _parallel_map(_ballsbins_worker, args, ctx.obj["jobs"])
    failures = sum(o["failures"] for o in outs)
    queries = trials * n
    failure_rate = failures / max(1, queries)
    max_loads = [o["max_load"] for o in outs]
    results = {
        "rule": rule,
        "trials": trials,
        "queries": queries,
        "failures": failures,
        "failure_rate": failure_rate,
        "cap": cap,
        "max_load": {
            "mean": sum(max_loads) / len(max_loads),
            "max": max(max_loads),
            "per_trial": max_loads,
        },
        "probes": {
            "mean": sum(o["probes_mean"] for o in outs) / len(outs),
            "max": max(o["probes_max"] for o in outs),
        },
    }
    rows = [
        (o["trial"], ball, bin_, failed, probes)
        for o in outs
        for (ball, bin_, failed, probes) in o["rows"]
    ]
    spec = {
        "seed": ctx.obj["seed_hex"],
        "n": n,
        "m": m,
        "d": d,
        "rule": rule,
        "cap_constant": cap_constant,
        "trials": trials,
    }
    _finish(
        ctx,
        "balls-bins",
        spec,
        results,
        csv_rows=lambda: (["trial", "ball", "bin", "failed", "probes"], rows),
        t0=t0,
    )
    if failure_rate > failure_budget:
        click.echo(f"failure budget exceeded: rate {failure_rate}", err=True)
        sys.exit(EXIT_BUDGET)


@main.command("oracle-compare")
@click.option("--target", type=click.Choice(["matching", "balls-bins"]), default="matching")
@click.option("--n", type=click.IntRange(1), default=1000, show_default=True)
@click.option("--m", type=click.IntRange(1), default=1000, show_default=True)
@click.option("--d", type=click.IntRange(1), default=5, show_default=True)
@click.option("--rule", type=click.Choice(sorted(ballsbins.RULES)), default="least-loaded")
@click.option("--trials", type=click.IntRange(1), default=10, show_default=True)
@click.option("--cap", type=click.IntRange(1), default=None)
@click.pass_context
def oracle_compare_cmd(ctx, target, n, m, d, rule, trials, cap):
    """Compare every local answer against the global oracle run."""
    t0 = time.time()
    seed = ctx.obj["seed"]
    mismatches = 0
    failures = 0
    compared = 0
    for t in range(trials):
        iseed = derive_subseed(seed, b"instance:%d" % t)
        rseed = derive_subseed(seed, b"ranks:%d" % t)
        if target == "matching":
            g = _generate(graphs.gen_bounded_degree, iseed, n, d)
            try:
                local = matching.full_matching(
                    g, rseed, cap=cap or acceptance.MATCHING_CAP
                )
            except exploration.TruncationError:
                failures += 1
                continue
            compared += g.edge_count
            if local != matching.greedy_by_rank(g, rseed):
                mismatches += 1
        else:
            bc = _generate(graphs.gen_bipartite_choices, iseed, n, m, d, "uniform")
            the_rule = ballsbins.RULES[rule]
            glob, _ = ballsbins.run_global(bc, the_rule, rseed)
            local_assignments, _ = ballsbins.assign_all(bc, the_rule, rseed, cap=cap)
            for a, b in zip(glob, local_assignments):
                compared += 1
                if b.failed:
                    failures += 1
                elif a.bin != b.bin:
                    mismatches += 1
    results = {
        "target": target,
        "trials": trials,
        "compared": compared,
        "mismatches": mismatches,
        "failures": failures,
    }
    spec = {
        "seed": ctx.obj["seed_hex"],
        "target": target,
        "n": n,
        "m": m,
        "d": d,
        "rule": rule,
        "trials": trials,
        "cap": cap,
    }
    _finish(
        ctx,
        "oracle-compare",
        spec,
        results,
        csv_rows=lambda: (
            ["compared", "mismatches", "failures"],
            [(compared, mismatches, failures)],
        ),
        t0=t0,
    )
    click.echo(f"mismatches: {mismatches}", err=True)
    if mismatches:
        sys.exit(EXIT_BUDGET)


@main.command("lower-bound")
@click.option("--path-len", type=click.IntRange(2), default=5, show_default=True)
@click.option("--trials", type=click.IntRange(1), default=100000, show_default=True)
@click.pass_context
def lower_bound_cmd(ctx, path_len, trials):
    """Estimate the full-path closure probability (expected 1/path_len!)."""
    t0 = time.time()
    freq = lower_bound_experiment(path_len, trials, ctx.obj["seed"])
    expected = 1 / math.factorial(path_len)
    se = math.sqrt(expected * (1 - expected) / trials)
    results = {
        "frequency": freq,
        "expected": expected,
        "standard_error": se,
        "trials": trials,
    }
    spec = {"seed": ctx.obj["seed_hex"], "path_len": path_len, "trials": trials}
    _finish(
        ctx,
        "lower-bound",
        spec,
        results,
        csv_rows=lambda: (["frequency", "expected", "trials"], [(freq, expected, trials)]),
        t0=t0,
    )


@main.command("accept")
@click.option("--only", default="", help="comma-separated criterion ids")
@click.pass_context
def accept_cmd(ctx, only):
    """Run the acceptance suite; one PASS/FAIL line per criterion."""
    ids = [int(x) for x in only.split(",") if x.strip()] or None
    results = acceptance.run_all(ids)
    for r in results:
        click.echo(r.line())
    spec = {"seed": acceptance.ACCEPT_SEED_HEX, "only": only}
    payload = {
        "criteria": {
            str(r.cid): {"name": r.name, "passed": r.passed, "details": r.details}
            for r in results
        },
        "all_passed": all(r.passed for r in results),
    }
    if ctx.obj["out"]:
        _emit(_report("accept", spec, payload), ctx.obj["out"], "json")
    if not payload["all_passed"]:
        sys.exit(EXIT_BUDGET)


if __name__ == "__main__":
    main()
