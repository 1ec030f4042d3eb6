"""Experiment orchestration: the synthetic suite, real-data benchmarks and timing."""

from __future__ import annotations

import hashlib
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from ..analysis import DEFAULT_BINS, compare_transforms
from ..embedding import (
    DIM, EPOCHS, LEARNING_RATE, NEGATIVES, WALK_LENGTH, WALKS_PER_NODE, WINDOW,
    EmbeddingMatrix, deepwalk,
)
from ..errors import GcatError, ValidationError
from ..graph import gcat, gconv, normalized_adjacency
from ..learn import (
    GcnConfig, evaluate, predict, sgc_transform, train_gcn, train_linear_svm, train_logreg,
)
from ..synth import ScenarioSpec, case_grid, generate_scenario
from .data import SplitSpec, split_covering_classes
from .report import ExperimentResult, SurfaceGrid

log = logging.getLogger(__name__)

SYNTH_METHODS = ("gcat_lr", "gcat_svm", "gconv_lr", "gconv_svm", "gcn")
BENCH_METHODS = ("gcat_lr", "gcn", "sgc_lr")
SUITE_CASES = (("1", 1), ("2", 1), ("2", 2), ("3", 1), ("3", 2), ("4_1", 1), ("4_1", 2))


def worker_count():
    """Worker pool size from ``GCATLAB_THREADS`` (default 1)."""
    raw = os.environ.get("GCATLAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError(f"GCATLAB_THREADS must be an integer, got {raw!r}") from None
    return max(1, n)


def default_cache_dir():
    return Path(os.environ.get("GCATLAB_CACHE", Path.home() / ".cache" / "gcatlab"))


@dataclass(frozen=True)
class EmbeddingConfig:
    dim: int = DIM
    walks_per_node: int = WALKS_PER_NODE
    walk_length: int = WALK_LENGTH
    window: int = WINDOW
    negatives: int = NEGATIVES
    epochs: int = EPOCHS
    lr: float = LEARNING_RATE
    seed: int = 0


def graph_digest(g):
    u, v, w = g.edges()
    h = hashlib.sha256()
    h.update(np.int64(g.num_nodes).tobytes())
    for arr in (u.astype("<i8"), v.astype("<i8"), w.astype("<f8")):
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()


def cached_deepwalk(g, cfg=EmbeddingConfig(), cache_dir=None):
    """DeepWalk embedding, memoized on disk by graph content and config.

    Returns ``(embedding, seconds)`` where ``seconds`` is the training time
    (0.0 when served from the cache).
    """
    key = hashlib.sha256((graph_digest(g) + repr(sorted(asdict(cfg).items()))).encode()).hexdigest()
    path = None
    if cache_dir is not None:
        path = Path(cache_dir) / f"deepwalk-{key[:20]}.npy"
        if path.exists():
            data = np.load(path)
            if data.shape == (g.num_nodes, cfg.dim):
                return EmbeddingMatrix(data), 0.0
    t0 = time.perf_counter()
    emb = deepwalk(g, cfg.dim, cfg.seed, cfg.walks_per_node, cfg.walk_length,
                   cfg.window, cfg.negatives, cfg.epochs, cfg.lr)
    seconds = time.perf_counter() - t0
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp.npy")
        np.save(tmp, emb.data)
        tmp.replace(path)
    return emb, seconds


# ---------------------------------------------------------------- synthetic suite

@dataclass
class SuiteResult:
    """Surfaces keyed by ``(case label, metric, transform)`` plus accuracy results.

    ``metric`` is ``"J"`` (Fisher aggregate) or ``"I"`` (MI aggregate) and
    ``transform`` is ``"gconv"`` or ``"gcat"``.  ``cells`` holds one record
    per generated scenario; ``missing`` lists the cells that could not be
    generated and why.
    """

    surfaces: dict
    results: list
    cells: list
    missing: list = field(default_factory=list)


def _analyze_cell(g, basis, a_repr, spec, bins):
    try:
        sc = generate_scenario(g, basis, spec)
        conv, cat = compare_transforms(g, sc.x, sc.y, a_repr, bins)
    except GcatError as exc:
        return None, str(exc)
    return {
        "case": spec.label, "x_param": spec.x_param, "y_param": spec.y_param,
        "s2_x": sc.s2_x, "s2_y": sc.s2_y,
        "fisher_gconv": conv.fisher_aggregate, "fisher_gcat": cat.fisher_aggregate,
        "mi_gconv": conv.mi_aggregate, "mi_gcat": cat.mi_aggregate,
        "fisher_mean_gconv": conv.fisher_mean, "fisher_mean_gcat": cat.fisher_mean,
        "mi_mean_gconv": conv.mi_mean, "mi_mean_gcat": cat.mi_mean,
        "label_entropy": cat.label_entropy,
    }, None


def representative_spec(case_id, option, seed=0):
    """The accuracy cell of a case: the first value of each parameter grid."""
    _, _, specs = case_grid(case_id, option, seed)
    return specs[0][0]


def _fit_and_score(method, a, a_repr, x, y, train, test, l2, svm_epochs, gcn_cfg):
    t0 = time.perf_counter()
    if method.startswith("gcat"):
        z = gcat(a_repr, x).data
    elif method.startswith("gconv"):
        z = gconv(a, x).data
    else:
        z = None
    t1 = time.perf_counter()
    if method.endswith("_lr"):
        pred = predict(train_logreg(z, y, train, l2=l2), z)
    elif method.endswith("_svm"):
        pred = predict(train_linear_svm(z, y, train, epochs=svm_epochs), z)
    elif method == "gcn":
        pred = train_gcn(a, x, y, train, gcn_cfg).predict(a, x)
    else:
        raise ValidationError(f"unknown method {method!r}")
    t2 = time.perf_counter()
    return evaluate(pred, y, test), (t1 - t0) * 1e3, (t2 - t1) * 1e3


def run_accuracy(g, x, y, a_repr, method, split_spec, dataset="", l2=None, svm_epochs=50,
                 gcn_cfg=None):
    """Train and test one method on ``split_spec.repeats`` shuffled splits."""
    a = normalized_adjacency(g)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    accs, tr, tf, redraws = [], [], [], []
    for r in range(split_spec.repeats):
        train, test, attempt = split_covering_classes(y, split_spec, r)
        redraws.append(attempt)
        cfg = gcn_cfg or GcnConfig(seed=split_spec.seed * 1000 + r)
        acc, t_transform, t_train = _fit_and_score(method, a, a_repr, x, y, train, test, l2,
                                                   svm_epochs, cfg)
        accs.append(acc)
        tf.append(t_transform)
        tr.append(t_train)
    config = {"split": asdict(split_spec), "l2": l2, "svm_epochs": svm_epochs,
              "gcn": asdict(gcn_cfg) if gcn_cfg else asdict(GcnConfig()) | {"seed": "seed*1000+repeat"}}
    return ExperimentResult(method, dataset, accs, tr, tf, config, {"split_redraws": redraws})


def run_synthetic_suite(g, basis, a_repr, cases=SUITE_CASES, split_spec=SplitSpec(),
                        methods=SYNTH_METHODS, accuracy_cases=SUITE_CASES, bins=DEFAULT_BINS,
                        seed=0, grids=None):
    """Dependency surfaces for every cell and accuracies on representative cells.

    ``cases`` and ``accuracy_cases`` are lists of ``(case_id, option)``.
    ``grids`` optionally maps such a pair to explicit ``(xs, ys)`` parameter
    lists; otherwise the standard grids are used.  Cells that cannot be
    generated (e.g. more scattered points than nodes) are recorded in
    ``missing`` and the affected rows or columns are pruned from the
    surfaces.
    """
    surfaces, cells, missing = {}, [], []
    jobs = []
    for case_id, option in cases:
        xs, ys, specs = case_grid(case_id, option, seed)
        if grids and (case_id, option) in grids:
            xs, ys = grids[(case_id, option)]
            specs = [[ScenarioSpec(case_id, option if case_id != "1" else 1, x, yv, seed)
                      for yv in ys] for x in xs]
        jobs.append((case_id, option, xs, ys, specs))

    flat = [(k, i, j, spec) for k, (_, _, _, _, specs) in enumerate(jobs)
            for i, row in enumerate(specs) for j, spec in enumerate(row)]
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        outcomes = list(pool.map(lambda t: _analyze_cell(g, basis, a_repr, t[3], bins), flat))

    tables = [{m: np.full((len(xs), len(ys)), np.nan) for m in
               ("J_gconv", "J_gcat", "I_gconv", "I_gcat")} for (_, _, xs, ys, _) in jobs]
    for (k, i, j, spec), (rec, err) in zip(flat, outcomes):
        if rec is None:
            missing.append({"case": spec.label, "x_param": spec.x_param,
                            "y_param": spec.y_param, "reason": err})
            continue
        cells.append(rec)
        t = tables[k]
        t["J_gconv"][i, j], t["J_gcat"][i, j] = rec["fisher_gconv"], rec["fisher_gcat"]
        t["I_gconv"][i, j], t["I_gcat"][i, j] = rec["mi_gconv"], rec["mi_gcat"]

    for (case_id, option, xs, ys, specs), t in zip(jobs, tables):
        label = specs[0][0].label
        y_axis = [0 if v is None else v for v in ys]
        for key, z in t.items():
            metric, tag = key.split("_")
            grid = SurfaceGrid(list(xs), y_axis, z, f"{label}.{metric}.{tag}")
            surfaces[(label, metric, tag)] = grid.pruned()

    results = []
    for case_id, option in accuracy_cases:
        spec = representative_spec(case_id, option, seed)
        sc = generate_scenario(g, basis, spec)
        for method in methods:
            res = run_accuracy(g, sc.x, sc.y, a_repr, method, split_spec, dataset=spec.label)
            res.config["cell"] = {"x_param": spec.x_param, "y_param": spec.y_param}
            results.append(res)
    return SuiteResult(surfaces, results, cells, missing)


# ---------------------------------------------------------------- real-data benchmark

def run_benchmark(dataset, method, split_spec=SplitSpec(), emb_cfg=EmbeddingConfig(),
                  cache_dir=None, l2=None, gcn_cfg=None, sgc_k=2):
    """Repeat split, fit, evaluate and time one method on an ingested dataset.

    Timing runs with BLAS pinned to one thread.  For ``gcat_lr`` the
    reported per-repeat time covers the concatenation and the logistic
    regression; the embedding's training time is stored separately in
    ``extra["embedding_ms"]`` together with ``extra["total_with_embedding_ms"]``.
    """
    if method not in BENCH_METHODS:
        raise ValidationError(f"unknown benchmark method {method!r}; expected one of {BENCH_METHODS}")
    g, x, y = dataset.graph, dataset.features, dataset.labels
    extra = {}
    config = {"method": method, "split": asdict(split_spec), "l2": l2}
    with threadpool_limits(limits=1):
        t0 = time.perf_counter()
        a = normalized_adjacency(g)
        prep_ms = (time.perf_counter() - t0) * 1e3
        if method == "gcat_lr":
            emb, seconds = cached_deepwalk(g, emb_cfg, cache_dir)
            extra["embedding_ms"] = seconds * 1e3
            extra["embedding_cached"] = seconds == 0.0
            config["embedding"] = asdict(emb_cfg)
        elif method == "sgc_lr":
            config["sgc_k"] = sgc_k
        else:
            config["gcn"] = asdict(gcn_cfg or GcnConfig())

        accs, tr, tf, redraws = [], [], [], []
        for r in range(split_spec.repeats):
            train, test, attempt = split_covering_classes(y, split_spec, r)
            redraws.append(attempt)
            t0 = time.perf_counter()
            if method == "gcat_lr":
                z = gcat(emb.data, x).data
            elif method == "sgc_lr":
                z = sgc_transform(a, x, sgc_k).data
            t1 = time.perf_counter()
            if method == "gcn":
                cfg = gcn_cfg or GcnConfig(seed=split_spec.seed * 1000 + r)
                pred = train_gcn(a, x, y, train, cfg).predict(a, x)
            else:
                pred = predict(train_logreg(z, y, train, l2=l2), z)
            t2 = time.perf_counter()
            accs.append(evaluate(pred, y, test))
            tf.append((t1 - t0) * 1e3 + (prep_ms if method == "gcn" else 0.0))
            tr.append((t2 - t1) * 1e3)
    extra["split_redraws"] = redraws
    if method == "gcat_lr":
        extra["concat_time_fraction"] = float(np.sum(tf) / (np.sum(tf) + np.sum(tr)))
        extra["total_with_embedding_ms"] = float(np.mean([a + b for a, b in zip(tf, tr)])
                                                 + extra["embedding_ms"])
    return ExperimentResult(method, dataset.name, accs, tr, tf, config, extra)


# ---------------------------------------------------------------- transform timing

@dataclass(frozen=True)
class TimingResult:
    gconv_mean: float
    gconv_std: float
    gcat_mean: float
    gcat_std: float
    trials: int
    variants: dict = field(default_factory=dict)

    @property
    def speedup(self):
        return self.gconv_mean / self.gcat_mean


def _clock(fn, trials, warmup):
    for _ in range(warmup):
        fn()
    out = np.empty(trials)
    for k in range(trials):
        t0 = time.perf_counter()
        fn()
        out[k] = time.perf_counter() - t0
    return out


def time_transform_comparison(g, x, trials=100, a_repr=None, warmup=5, variants=True):
    """Per-call wall-clock statistics (seconds) of the two transforms.

    Both operations act on dense matrices: graph convolution is the dense
    product ``A_hat @ X`` and graph concatenation stacks the dense structure
    representation ``a_repr`` (defaults to the dense rows of ``A_hat``) next
    to ``X``.  With ``variants`` set, the sparse convolution and the
    concatenation of the full dense ``A_hat`` are timed too.
    """
    if trials < 10:
        raise ValidationError("trials must be >= 10")
    a = normalized_adjacency(g)
    dense = a.dense()
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    rep = dense if a_repr is None else np.ascontiguousarray(
        a_repr.data if isinstance(a_repr, EmbeddingMatrix) else a_repr, dtype=np.float64)
    if rep.shape[0] != x.shape[0] or dense.shape[0] != x.shape[0]:
        raise ValidationError("feature rows do not match the graph")
    with threadpool_limits(limits=1):
        conv = _clock(lambda: dense @ x, trials, warmup)
        cat = _clock(lambda: np.hstack([rep, x]), trials, warmup)
        extra = {}
        if variants:
            sparse = a.matrix
            for name, fn in (("gconv_sparse", lambda: sparse @ x),
                             ("gcat_dense_adjacency", lambda: np.hstack([dense, x]))):
                t = _clock(fn, trials, warmup)
                extra[name] = {"mean_seconds": float(t.mean()), "std_seconds": float(t.std())}
    return TimingResult(float(conv.mean()), float(conv.std()), float(cat.mean()), float(cat.std()),
                        trials, extra)
