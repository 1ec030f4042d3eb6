"""Command-line front end.

Every subcommand writes into the run directory given by ``--out`` and
finishes by recording a ``manifest.json`` with its full configuration.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import synth
from .analysis import DEFAULT_BINS, compare_transforms
from .embedding import load_embedding_tsv, save_embedding_tsv
from .errors import GcatError, ValidationError
from .graph import grid_graph, laplacian, load_edge_list
from .harness.data import SplitSpec, ingest_citation_dataset
from .harness.experiments import (
    BENCH_METHODS, SUITE_CASES, SYNTH_METHODS, EmbeddingConfig, cached_deepwalk,
    default_cache_dir, run_accuracy, run_benchmark, run_synthetic_suite,
    time_transform_comparison,
)
from .harness.report import emit_report, emit_surface, write_json, write_manifest
from .spectral import cached_eigendecompose

log = logging.getLogger("gcatlab")

# Arguments that only say where things go; they are left out of manifests so
# that reruns into different directories produce identical manifests.
_LOCATION_ARGS = {"out", "cache_dir", "func", "verbose"}


def _common(p, dataset=False):
    p.add_argument("--graph", type=Path, help="edge-list file (default: square grid)")
    p.add_argument("--grid", type=int, default=50, help="grid side when --graph is not given")
    if dataset:
        p.add_argument("--dataset-dir", type=Path, help="directory with nodes.csv and edges.csv")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True, help="run directory")
    p.add_argument("--cache-dir", type=Path, default=None,
                   help="cache for eigenbases and embeddings (default: $GCATLAB_CACHE "
                        "or ~/.cache/gcatlab)")


def _split_args(p):
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--train-frac", type=float, default=0.6)


def _emb_args(p):
    p.add_argument("--dim", type=int, default=256, help="DeepWalk dimension")
    p.add_argument("--embedding", type=Path, help="precomputed embedding TSV")
    p.add_argument("--emb-epochs", type=int, default=5)


def _scenario_args(p):
    p.add_argument("--case", choices=synth.CASES, default="3")
    p.add_argument("--option", type=int, choices=(1, 2), default=1)
    p.add_argument("--x-param", type=int)
    p.add_argument("--y-param", type=int)


def build_parser():
    parser = argparse.ArgumentParser(prog="gcatlab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic scenarios")
    _common(p)
    _scenario_args(p)
    p.add_argument("--all-cells", action="store_true", help="export every cell of the case grid")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("analyze", help="Fisher and MI reports for both transforms")
    _common(p, dataset=True)
    _scenario_args(p)
    _emb_args(p)
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("embed", help="train a DeepWalk embedding and export TSV")
    _common(p, dataset=True)
    _emb_args(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("classify", help="run one method over repeated splits")
    _common(p, dataset=True)
    _scenario_args(p)
    _split_args(p)
    _emb_args(p)
    p.add_argument("--method", choices=sorted(set(SYNTH_METHODS) | set(BENCH_METHODS)),
                   default="gcat_lr")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("bench", help="accuracy and time table on a dataset bundle")
    _common(p, dataset=True)
    _split_args(p)
    _emb_args(p)
    p.add_argument("--methods", nargs="+", choices=BENCH_METHODS, default=list(BENCH_METHODS))
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("timing", help="time graph convolution against concatenation")
    _common(p)
    _emb_args(p)
    p.add_argument("--features", type=int, nargs="+", default=[10])
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--dense-adjacency", action="store_true",
                   help="concatenate the dense adjacency rows instead of the embedding")
    p.set_defaults(func=cmd_timing)

    p = sub.add_parser("surface", help="run the synthetic suite and emit mesh files")
    _common(p)
    _split_args(p)
    _emb_args(p)
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.add_argument("--cases", nargs="+", default=[f"{c}:{o}" for c, o in SUITE_CASES],
                   help="case:option pairs, e.g. 3:1 4_1:2")
    p.add_argument("--methods", nargs="*", choices=SYNTH_METHODS, default=list(SYNTH_METHODS))
    p.add_argument("--accuracy-cases", nargs="*", default=["1:1", "3:1", "4_1:2"])
    p.set_defaults(func=cmd_surface)
    return parser


# ---------------------------------------------------------------- helpers

def _cache(args):
    return args.cache_dir or default_cache_dir()


def _graph(args):
    if getattr(args, "dataset_dir", None):
        return ingest_citation_dataset(args.dataset_dir).graph
    if args.graph:
        return load_edge_list(args.graph)
    return grid_graph(args.grid)


def _embedding(args, g):
    if args.embedding:
        data = load_embedding_tsv(args.embedding).data
        if data.shape[0] != g.num_nodes:
            raise ValidationError(f"embedding has {data.shape[0]} rows, graph has {g.num_nodes} nodes")
        return data
    cfg = EmbeddingConfig(dim=args.dim, epochs=args.emb_epochs, seed=args.seed)
    emb, seconds = cached_deepwalk(g, cfg, _cache(args))
    if seconds:
        log.info("trained DeepWalk embedding in %.1f s", seconds)
    return emb.data


def _basis(g, args):
    return cached_eigendecompose(laplacian(g).toarray(), _cache(args))


def _scenario(args, g):
    if args.x_param is None:
        raise ValidationError("--x-param is required")
    spec = synth.ScenarioSpec(args.case, args.option, args.x_param, args.y_param, args.seed)
    return synth.generate_scenario(g, _basis(g, args), spec)


def _config(args):
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items())
            if k not in _LOCATION_ARGS}


def _pairs(tokens):
    out = []
    for tok in tokens:
        case, _, opt = tok.partition(":")
        if case not in synth.CASES or opt not in ("1", "2"):
            raise ValidationError(f"bad case spec {tok!r}; expected e.g. 3:1")
        out.append((case, int(opt)))
    return out


# ---------------------------------------------------------------- subcommands

def cmd_synth(args):
    g = _graph(args)
    basis = _basis(g, args)
    if args.all_cells:
        _, _, grid = synth.case_grid(args.case, args.option, args.seed)
        specs = [s for row in grid for s in row]
    else:
        if args.x_param is None:
            raise ValidationError("--x-param is required unless --all-cells is given")
        specs = [synth.ScenarioSpec(args.case, args.option, args.x_param, args.y_param, args.seed)]
    outputs = []
    for spec in specs:
        try:
            sc = synth.generate_scenario(g, basis, spec)
        except ValidationError as exc:
            log.warning("skipping %s x=%s y=%s: %s", spec.label, spec.x_param, spec.y_param, exc)
            continue
        stem = f"{spec.label}_x{spec.x_param}" + ("" if spec.y_param is None else f"_y{spec.y_param}")
        outputs.extend(synth.export_scenario(sc, args.out, stem))
    return outputs


def cmd_analyze(args):
    if args.dataset_dir:
        ds = ingest_citation_dataset(args.dataset_dir)
        g, x, y = ds.graph, ds.features, ds.labels
    else:
        g = _graph(args)
        sc = _scenario(args, g)
        x, y = sc.x, sc.y
    conv, cat = compare_transforms(g, x, y, _embedding(args, g), args.bins)
    args.out.mkdir(parents=True, exist_ok=True)
    outputs = []
    for rep in (conv, cat):
        kv, table = args.out / f"{rep.tag}.txt", args.out / f"{rep.tag}.csv"
        rep.write_keyvalue(kv)
        rep.write_csv(table)
        outputs += [kv, table]
    print(f"fisher  gconv={conv.fisher_aggregate:.6g}  gcat={cat.fisher_aggregate:.6g}")
    print(f"mi      gconv={conv.mi_aggregate:.6g}  gcat={cat.mi_aggregate:.6g}")
    return outputs


def cmd_embed(args):
    g = _graph(args)
    data = _embedding(args, g)
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / "embedding.tsv"
    save_embedding_tsv(data, path)
    return [path]


def cmd_classify(args):
    spec = SplitSpec(args.train_frac, args.seed, args.repeats)
    if args.dataset_dir:
        ds = ingest_citation_dataset(args.dataset_dir)
        if args.method in BENCH_METHODS:
            cfg = EmbeddingConfig(dim=args.dim, epochs=args.emb_epochs, seed=args.seed)
            result = run_benchmark(ds, args.method, spec, cfg, _cache(args))
        else:
            result = run_accuracy(ds.graph, ds.features, ds.labels, _embedding(args, ds.graph),
                                  args.method, spec, dataset=ds.name)
    else:
        if args.method == "sgc_lr":
            raise ValidationError("sgc_lr runs on dataset bundles only")
        g = _graph(args)
        sc = _scenario(args, g)
        result = run_accuracy(g, sc.x, sc.y, _embedding(args, g), args.method, spec,
                              dataset=sc.spec.label)
    args.out.mkdir(parents=True, exist_ok=True)
    print(f"{result.method} on {result.dataset}: {result.acc_mean:.4f} +/- {result.acc_std:.4f}")
    return list(emit_report([result], args.out / "results.csv"))


def cmd_bench(args):
    if not args.dataset_dir:
        raise ValidationError("bench needs --dataset-dir")
    ds = ingest_citation_dataset(args.dataset_dir)
    spec = SplitSpec(args.train_frac, args.seed, args.repeats)
    cfg = EmbeddingConfig(dim=args.dim, epochs=args.emb_epochs, seed=args.seed)
    results = [run_benchmark(ds, m, spec, cfg, _cache(args)) for m in args.methods]
    args.out.mkdir(parents=True, exist_ok=True)
    for r in results:
        print(f"{r.method:8s} {100 * r.acc_mean:6.2f} +/- {100 * r.acc_std:4.2f}   "
              f"{r.time_ms_mean:10.2f} ms")
    return list(emit_report(results, args.out / "results.csv"))


def cmd_timing(args):
    g = _graph(args)
    a_repr = None if args.dense_adjacency else _embedding(args, g)
    rng = np.random.default_rng(args.seed)
    rows = []
    for f in args.features:
        x = rng.standard_normal((g.num_nodes, f))
        t = time_transform_comparison(g, x, args.trials, a_repr)
        rows.append({"features": f, "gconv_mean_seconds": t.gconv_mean,
                     "gconv_std_seconds": t.gconv_std, "gcat_mean_seconds": t.gcat_mean,
                     "gcat_std_seconds": t.gcat_std, "speedup": t.speedup,
                     "trials": t.trials, "variants": t.variants})
        print(f"F={f}: gconv {t.gconv_mean:.3g}s  gcat {t.gcat_mean:.3g}s  ratio {t.speedup:.1f}")
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / "timing.json"
    write_json(path, {"structure": "dense adjacency" if args.dense_adjacency else "embedding",
                      "rows": rows})
    return [path]


def cmd_surface(args):
    g = _graph(args)
    suite = run_synthetic_suite(
        g, _basis(g, args), _embedding(args, g), cases=_pairs(args.cases),
        split_spec=SplitSpec(args.train_frac, args.seed, args.repeats),
        methods=tuple(args.methods), accuracy_cases=_pairs(args.accuracy_cases) if args.methods else (),
        bins=args.bins, seed=args.seed)
    out = args.out
    (out / "surfaces").mkdir(parents=True, exist_ok=True)
    outputs = []
    for (label, metric, tag), grid in sorted(suite.surfaces.items()):
        path = out / "surfaces" / f"{label}.{metric}.{tag}.dat"
        emit_surface(grid, path)
        outputs.append(path)
    cells = out / "cells.csv"
    with open(cells, "w", newline="") as fh:
        fields = list(suite.cells[0].keys()) if suite.cells else ["case"]
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for rec in suite.cells:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in rec.items()})
    missing = out / "missing.json"
    write_json(missing, suite.missing)
    outputs += [cells, missing]
    if suite.results:
        outputs += list(emit_report(suite.results, out / "accuracy.csv"))
        for r in suite.results:
            print(f"{r.dataset:14s} {r.method:10s} {r.acc_mean:.4f}")
    return outputs


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        outputs = args.func(args)
        write_manifest(args.out, args.command, _config(args), outputs)
    except GcatError as exc:
        print(f"gcatlab: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"gcatlab: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
