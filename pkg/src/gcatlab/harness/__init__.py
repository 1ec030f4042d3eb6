"""Dataset ingestion, splitting, experiment orchestration and report emission."""

from .data import (
    Dataset, SplitSpec, convert_linqs, ingest_citation_dataset, make_citation_like, split,
    split_covering_classes, write_citation_dataset,
)
from .experiments import (
    EmbeddingConfig, SuiteResult, TimingResult, run_accuracy, run_benchmark, run_synthetic_suite,
    time_transform_comparison,
)
from .report import ExperimentResult, SurfaceGrid, emit_report, emit_surface, read_surface

__all__ = [
    "Dataset", "SplitSpec", "convert_linqs", "ingest_citation_dataset", "make_citation_like",
    "split", "split_covering_classes", "write_citation_dataset",
    "EmbeddingConfig", "SuiteResult", "TimingResult", "run_accuracy", "run_benchmark",
    "run_synthetic_suite", "time_transform_comparison", "ExperimentResult", "SurfaceGrid",
    "emit_report", "emit_surface", "read_surface",
]
