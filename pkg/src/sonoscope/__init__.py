"""Interactive concept mining over large audio-embedding corpora.

Subsystems: frame storage and synthetic corpora, an approximate
nearest-neighbor index, 2-D projection layouts, hierarchical and density
clustering, iteratively trained concept prototypes, corpus-wide concept
queries with calendar summaries, raw-audio utilities, and an HTTP facade.
"""

__version__ = "0.1.0"

from .audio import SpectrogramMatrix, Waveform, baseline_embedding, load_wav, spectrogram, write_wav
from .clustering import ClusterTree, build_cluster_tree, dbscan, decorate_tree
from .forest import Forest, load_forest, save_forest, train_forest
from .frames import DayFrameSet, FrameRef, SensorInfo
from .index import (
    AnnIndex,
    Hit,
    IndexParams,
    brute_force_knn,
    build_index,
    knn_query,
    load_index,
    save_index,
)
from .projection import (
    Layout,
    project,
    remove_and_reproject,
    reproject_subset,
    silhouette,
    steer,
    trustworthiness,
)
from .prototypes import (
    Annotation,
    ModelSummary,
    PrototypeEngine,
    PrototypeVersion,
    TrainingSet,
    representatives_of,
)
from .queries import (
    CalendarSummary,
    FrameClassificationMatrix,
    HitSet,
    QueryEngine,
    SelectionSummary,
    calendar_summary,
)
from .service import create_app, serve
from .store import CorpusStore, GroundTruth, IngestReport, read_frameset, write_frameset
from .synthetic import ConceptSpec, CorpusSpec, TemporalPattern, generate_synthetic_corpus

__all__ = [
    "AnnIndex",
    "Annotation",
    "CalendarSummary",
    "ClusterTree",
    "ConceptSpec",
    "CorpusSpec",
    "CorpusStore",
    "DayFrameSet",
    "FrameClassificationMatrix",
    "FrameRef",
    "GroundTruth",
    "Hit",
    "HitSet",
    "IndexParams",
    "IngestReport",
    "Layout",
    "ModelSummary",
    "PrototypeEngine",
    "PrototypeVersion",
    "QueryEngine",
    "Forest",
    "SelectionSummary",
    "SensorInfo",
    "SpectrogramMatrix",
    "TemporalPattern",
    "TrainingSet",
    "Waveform",
    "baseline_embedding",
    "brute_force_knn",
    "build_cluster_tree",
    "build_index",
    "calendar_summary",
    "create_app",
    "dbscan",
    "decorate_tree",
    "generate_synthetic_corpus",
    "knn_query",
    "load_forest",
    "load_index",
    "load_wav",
    "project",
    "remove_and_reproject",
    "representatives_of",
    "reproject_subset",
    "save_forest",
    "save_index",
    "serve",
    "silhouette",
    "spectrogram",
    "steer",
    "train_forest",
    "trustworthiness",
    "write_frameset",
    "write_wav",
    "__version__",
]
