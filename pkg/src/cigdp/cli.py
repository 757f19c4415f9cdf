"""Command-line interface.

Exit codes: 0 success, 1 domain error, 2 usage error, 3 evaluation finished
with warnings (undefined gaps or missing cells).  Output paths default to
``$CIGDP_OUTPUT_DIR`` (or the working directory) and are written atomically.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .embeddings import EmbeddingConfig, embed, project_2d, write_external
from .errors import CigdpError
from .evaluation import (
    EvaluationWarning,
    RunRecord,
    performance_profile,
    profile_ratios,
    shared_ranks,
    summarize,
    wilcoxon_signed_rank,
)
from .generators import InstanceSpec, generate_benchmark, generate_dense
from .grasp import HEURISTICS, SolverConfig, run_batch
from .instance_io import (
    SolutionRecord,
    atomic_write,
    parse_solution,
    read_instance,
    write_instance,
    write_solution,
)
from .milp import brute_force_optimum, export_lp
from .render import RenderOptions, render_svg, step_chart_svg

OUTPUT_ENV = "CIGDP_OUTPUT_DIR"
EXIT_WARNINGS = 3


def _output_dir(arg) -> Path:
    if arg:
        return Path(arg)
    return Path(os.environ.get(OUTPUT_ENV) or ".")


def _output_file(arg, default_name: str) -> Path:
    return Path(arg) if arg else _output_dir(None) / default_name


def _banner(args) -> None:
    items = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    print(f"# cigdp {args.command} " + " ".join(f"{k}={v}" for k, v in items.items()), file=sys.stderr)


def _emit(args, summary: dict) -> None:
    if args.json:
        print(json.dumps(summary, sort_keys=True))
    else:
        for key, value in summary.items():
            print(f"{key}: {value}")


def _instance_id(path) -> str:
    return Path(path).stem


# -- subcommands ----------------------------------------------------------------


GENERATE_DEFAULTS = {
    "benchmark": {"lo": 5, "hi": 30, "density": 0.175, "inc": 0.2},
    "dense": {"lo": 60, "hi": 80, "density": 0.5, "inc": 0.6, "inc_degree_lo": 0.01, "inc_degree_hi": 0.10},
}


def _resolve_defaults(args) -> None:
    """Fill scheme-dependent defaults so the banner shows effective values."""
    if args.command == "generate":
        for key, value in GENERATE_DEFAULTS[args.scheme].items():
            if getattr(args, key) is None:
                setattr(args, key, value)
        if (args.inc_degree_lo is None) != (args.inc_degree_hi is None):
            args.inc_degree_lo = 0.01 if args.inc_degree_lo is None else args.inc_degree_lo
            args.inc_degree_hi = 0.10 if args.inc_degree_hi is None else args.inc_degree_hi


def cmd_generate(args) -> int:
    inc_degree = None
    if args.inc_degree_lo is not None:
        inc_degree = (args.inc_degree_lo, args.inc_degree_hi)
    if args.scheme == "dense":
        spec = InstanceSpec.dense(num_layers=args.layers, d=args.d, seed=args.seed, lo=args.lo, hi=args.hi,
                                  density=args.density, inc=args.inc, inc_degree=inc_degree)
        graph, original = generate_dense(spec)
    else:
        spec = InstanceSpec(num_layers=args.layers, d=args.d, seed=args.seed, lo=args.lo, hi=args.hi,
                            density=args.density, inc=args.inc, inc_degree=inc_degree)
        graph, original = generate_benchmark(spec)
    name = f"{args.scheme}_L{args.layers}_d{args.d}_s{args.seed}.txt"
    path = atomic_write(_output_file(args.output, name), write_instance(graph, original))
    _emit(args, {"instance": str(path), "vertices": graph.n, "arcs": graph.num_arcs,
                 "incremental": len(graph.incrementals)})
    return 0


def _embedding_config(args) -> EmbeddingConfig:
    return EmbeddingConfig(
        method=args.embedding, dimension=args.dimension, beta=args.beta,
        external_path=args.embedding_file, seed=args.seed,
    )


def cmd_solve(args) -> int:
    graph, original = read_instance(args.instance)
    config = SolverConfig(
        heuristic=args.heuristic, embedding=_embedding_config(args), stochastic=args.stochastic,
        eta=args.eta, eta_max=args.eta_max, seed=args.seed, time_limit=args.time_limit, phi=args.phi,
    )
    config.validate()
    name = _instance_id(args.instance)
    label = args.heuristic if args.heuristic != "gl" else f"gl-{args.embedding}"
    result = run_batch({name: (graph, original)}, {label: config}, args.reps, seed_base=args.seed,
                       out_dir=_output_dir(args.output_dir), jobs=args.jobs)
    if result.errors:
        for key, message in result.errors.items():
            print(f"error in {key}: {message}", file=sys.stderr)
        return 1
    runs = [
        {"rep": rep, "seed": args.seed + rep, "crossings": trace.best, "iterations": trace.iterations,
         "seconds": round(trace.seconds, 6), "file": str(result.files[(name, label, rep)])}
        for (_, _, rep), trace in sorted(result.traces.items())
    ]
    _emit(args, {"instance": name, "heuristic": label, "best": min(r["crossings"] for r in runs),
                 "runs": runs})
    return 0


def cmd_embed(args) -> int:
    graph, _ = read_instance(args.instance)
    matrix = embed(graph, _embedding_config(args))
    name = _instance_id(args.instance)
    path = atomic_write(_output_file(args.output, f"{name}.{args.embedding}.emb"), write_external(matrix))
    summary = {"embedding": str(path), "rows": int(matrix.shape[0]), "columns": int(matrix.shape[1])}
    if args.coords:
        coords = project_2d(matrix)
        text = "".join(f"{v} {x!r} {y!r}\n" for v, (x, y) in enumerate(coords.tolist(), start=1))
        summary["coords"] = str(atomic_write(Path(args.coords), text))
    _emit(args, summary)
    return 0


def cmd_export_milp(args) -> int:
    graph, original = read_instance(args.instance)
    text, stats = export_lp(graph, original, args.d)
    path = atomic_write(_output_file(args.output, f"{_instance_id(args.instance)}.lp"), text)
    _emit(args, {"model": str(path), **stats.as_dict()})
    return 0


def cmd_bruteforce(args) -> int:
    graph, original = read_instance(args.instance)
    value, drawing = brute_force_optimum(graph, original, cap=args.cap)
    name = _instance_id(args.instance)
    summary = {"instance": name, "optimum": value}
    if args.output:
        record = SolutionRecord.from_drawing(name, "bruteforce", 0, drawing, value)
        summary["solution"] = str(atomic_write(Path(args.output), write_solution(record)))
    _emit(args, summary)
    return 0


def _read_optima(path) -> dict[str, int]:
    with open(path, encoding="utf-8", newline="") as fh:
        return {row["instance"]: int(row["optimum"]) for row in csv.DictReader(fh)}


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def cmd_evaluate(args) -> int:
    solution_files = sorted(Path(args.solutions).glob("*.sol"))
    if not solution_files:
        raise CigdpError(f"no .sol files in {args.solutions}")
    records = []
    for path in solution_files:
        rec = parse_solution(path.read_bytes())
        if rec.heuristic == "bruteforce":
            continue
        records.append(RunRecord(rec.instance, rec.heuristic, rec.seed, rec.crossings, rec.seconds, rec.trace))
    groups, group_keys = None, ()
    if args.instances:
        group_keys = ("layers", "density", "inc", "d")
        groups = {}
        for inst in {r.instance for r in records}:
            graph, original = read_instance(Path(args.instances) / f"{inst}.txt")
            groups[inst] = (graph.num_layers, graph.meta.get("density", ""), graph.meta.get("inc", ""), original.d)
    optima = _read_optima(args.optima) if args.optima else None
    out = _output_dir(args.output_dir)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", EvaluationWarning)
        table = summarize(records, groups, group_keys, optima)
        atomic_write(out / "metrics.csv", table.to_csv())

        heuristics = sorted({r.heuristic for r in records})
        instances = sorted({r.instance for r in records})
        means = {}
        for inst in instances:
            cells = {}
            for h in heuristics:
                vals = [r.crossings for r in records if r.instance == inst and r.heuristic == h]
                if vals:
                    cells[h] = sum(vals) / len(vals)
            means[inst] = cells
        ratios = profile_ratios(means)
        finite = [v for row in ratios.values() for v in row.values() if math.isfinite(v)]
        top = max(finite + [1.0])
        taus = np.linspace(1.0, top * 1.05 if top > 1 else 1.05, 60)
        curves = performance_profile(means, taus)
        atomic_write(out / "profile.csv", _csv_text(
            ["tau", *heuristics], [[f"{t:.6f}", *(f"{curves[h][k]:.6f}" for h in heuristics)]
                                   for k, t in enumerate(taus)]))
        atomic_write(out / "profile.svg", step_chart_svg(
            {h: (taus.tolist(), curves[h].tolist()) for h in heuristics},
            title="performance profile (mean crossings)", xlabel="tau", ylabel="fraction"))

        rows = []
        complete = [i for i in instances if all(h in means[i] for h in heuristics)]
        for a_idx in range(len(heuristics)):
            for b_idx in range(a_idx + 1, len(heuristics)):
                a, b = heuristics[a_idx], heuristics[b_idx]
                res = wilcoxon_signed_rank([means[i][a] for i in complete], [means[i][b] for i in complete])
                rows.append([a, b, res.n, "" if res.statistic is None else res.statistic,
                             "" if res.p_value is None else f"{res.p_value:.6g}",
                             "yes" if res.significant else "no", res.method])
        atomic_write(out / "wilcoxon.csv", _csv_text(
            ["a", "b", "pairs", "statistic", "p_value", "significant", "method"], rows))

        overall = table.overall()
        scored = {h: g for h, g in overall.items() if g is not None}
        ranks = shared_ranks(scored)
        atomic_write(out / "ranking.csv", _csv_text(
            ["heuristic", "mean_gap", "rank"],
            [[h, f"{scored[h]:.6f}", ranks[h]] for h in sorted(scored, key=lambda h: (ranks[h], h))]))

    messages = [str(w.message) for w in caught if issubclass(w.category, EvaluationWarning)]
    for message in messages:
        print(f"warning: {message}", file=sys.stderr)
    _emit(args, {"reference": table.reference, "records": len(records), "warnings": len(messages),
                 "mean_gap": {h: (None if g is None else round(g, 6)) for h, g in overall.items()},
                 "output_dir": str(out)})
    return EXIT_WARNINGS if messages else 0


def cmd_render(args) -> int:
    graph, original = read_instance(args.instance)
    drawing = original
    if args.solution:
        drawing = parse_solution(Path(args.solution).read_bytes()).to_drawing(graph, original.d)
    svg = render_svg(drawing, RenderOptions(labels=args.labels, title=_instance_id(args.instance)))
    path = atomic_write(_output_file(args.output, f"{_instance_id(args.instance)}.svg"), svg)
    _emit(args, {"svg": str(path)})
    return 0


# -- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master random seed (default: 0)")
    common.add_argument("--json", action="store_true", help="print a JSON summary on stdout")

    parser = argparse.ArgumentParser(prog="cigdp", description="Constrained incremental layered drawing toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="generate a random instance")
    p.add_argument("--scheme", choices=("benchmark", "dense"), default="benchmark", help="generator (default: benchmark)")
    p.add_argument("--layers", type=int, default=2, help="number of layers (default: 2)")
    p.add_argument("--density", type=float, default=None, help="arc density (default: 0.175 benchmark, 0.5 dense)")
    p.add_argument("--inc", type=float, default=None, help="incremental ratio (default: 0.2 benchmark, 0.6 dense)")
    p.add_argument("--lo", type=int, default=None, help="min originals per layer (default: 5 / 60)")
    p.add_argument("--hi", type=int, default=None, help="max originals per layer (default: 30 / 80)")
    p.add_argument("--d", type=int, default=1, help="dislocation bound (default: 1)")
    p.add_argument("--inc-degree-lo", type=float, default=None, help="min incremental degree fraction (default: 0.01 dense, unbounded benchmark)")
    p.add_argument("--inc-degree-hi", type=float, default=None, help="max incremental degree fraction (default: 0.10 dense, unbounded benchmark)")
    p.add_argument("-o", "--output", default=None, help="instance file (default: <output dir>/<scheme>_L.._d.._s...txt)")
    p.set_defaults(func=cmd_generate)

    def embedding_flags(q):
        q.add_argument("--embedding", choices=("spectral", "hope", "node2vec", "external"), default="hope",
                       help="embedding method (default: hope)")
        q.add_argument("--embedding-file", default=None, help="vectors for --embedding external (default: none)")
        q.add_argument("--dimension", type=int, default=None,
                       help="embedding width (default: 2n-1 hope, n-1 spectral, 128 node2vec)")
        q.add_argument("--beta", type=float, default=0.01, help="Katz attenuation for hope (default: 0.01)")

    p = sub.add_parser("solve", parents=[common], help="run a GRASP heuristic")
    p.add_argument("instance")
    p.add_argument("--heuristic", choices=HEURISTICS, default="gl", help="heuristic (default: gl)")
    embedding_flags(p)
    p.add_argument("--stochastic", action="store_true", help="re-embed before every construction (node2vec only)")
    p.add_argument("--eta", type=int, default=100, help="maximum iterations (default: 100)")
    p.add_argument("--eta-max", type=int, default=20, help="maximum iterations without improvement (default: 20)")
    p.add_argument("--time-limit", type=float, default=None, help="seconds per run, checked between iterations (default: none)")
    p.add_argument("--phi", type=float, default=None, help="fixed greediness in [0,1] (default: random per construction)")
    p.add_argument("--reps", type=int, default=1, help="repetitions with seeds seed..seed+reps-1 (default: 1)")
    p.add_argument("--jobs", type=int, default=1, help="parallel repetitions (default: 1)")
    p.add_argument("--output-dir", default=None, help=f"solution directory (default: ${OUTPUT_ENV} or .)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("embed", parents=[common], help="compute node embeddings")
    p.add_argument("instance")
    embedding_flags(p)
    p.add_argument("-o", "--output", default=None, help="embedding file (default: <output dir>/<instance>.<method>.emb)")
    p.add_argument("--coords", default=None, help="also write the 2-D projection here (default: none)")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("export-milp", parents=[common], help="write the integer model as an LP file")
    p.add_argument("instance")
    p.add_argument("--d", type=int, default=None, help="dislocation bound (default: from the instance)")
    p.add_argument("-o", "--output", default=None, help="LP file (default: <output dir>/<instance>.lp)")
    p.set_defaults(func=cmd_export_milp)

    p = sub.add_parser("bruteforce", parents=[common], help="exact optimum by enumeration")
    p.add_argument("instance")
    p.add_argument("--cap", type=float, default=1e7, help="maximum combined arrangements (default: 1e7)")
    p.add_argument("-o", "--output", default=None, help="write the optimal drawing as a solution file (default: none)")
    p.set_defaults(func=cmd_bruteforce)

    p = sub.add_parser("evaluate", parents=[common], help="metrics, profiles and tests over solution files")
    p.add_argument("solutions", help="directory of .sol files")
    p.add_argument("--instances", default=None, help="instance directory for grouping (default: no grouping)")
    p.add_argument("--optima", default=None, help="CSV with columns instance,optimum (default: best-known values)")
    p.add_argument("--output-dir", default=None, help=f"report directory (default: ${OUTPUT_ENV} or .)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("render", parents=[common], help="draw an instance or solution as SVG")
    p.add_argument("instance")
    p.add_argument("--solution", default=None, help="solution file (default: the original drawing)")
    p.add_argument("--labels", action="store_true", help="print vertex ids")
    p.add_argument("-o", "--output", default=None, help="SVG file (default: <output dir>/<instance>.svg)")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    _resolve_defaults(args)
    _banner(args)
    try:
        return args.func(args)
    except CigdpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
