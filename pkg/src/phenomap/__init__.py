"""Stable 2D phenotype maps for tabular visit data.

The pipeline: load a schema-declared CSV, split into a shared test set
and five training folds, sweep UMAP/PCA + GMM hyperparameters, pick the
configuration whose fold-models agree most on the test set, characterize
the resulting clusters, and persist everything as a single artifact that
a projection service can serve.
"""

__version__ = "0.1.0"

from .errors import (ConfigError, NumericalError, ParameterError, ParseError,
                     PhenomapError, SchemaError)
from .gmm import MixtureModel, Partition, fit_gmm, predict, responsibilities
from .neighbors import NeighborGraph, knn, knn_query
from .pca import PcaModel, fit_pca, transform_pca
from .phenotype import (ClusterProfile, FoldSummary, MatchedCluster,
                        characterize, summarize_across_folds)
from .preprocess import (Preprocessor, apply_preprocessor,
                         apply_preprocessor_with_warnings, fit_preprocessor)
from .stability import ari, mean_pairwise_ari
from .sweep import (ConfigResult, FoldModel, SweepConfig, SweepGrid,
                    SweepReport, SweepResult, read_report, run_sweep, select,
                    write_report)
from .synthetic import SyntheticSpec, generate_synthetic
from .tabular import (SchemaConfig, SplitPlan, Table, filter_by_complaint,
                      load_csv, make_split)
from .umap_embed import (FuzzyGraph, UmapModel, UmapParams, fit_curve,
                         fit_umap, fuzzy_graph, resolve_epochs, smooth_knn,
                         transform)

from .artifact import (PipelineArtifact, build_artifact,  # noqa: E402
                       load_artifact, save_artifact)

__all__ = [
    "__version__",
    "PhenomapError", "ConfigError", "ParseError", "SchemaError",
    "ParameterError", "NumericalError",
    "SchemaConfig", "Table", "SplitPlan", "load_csv", "make_split",
    "filter_by_complaint",
    "Preprocessor", "fit_preprocessor", "apply_preprocessor",
    "apply_preprocessor_with_warnings",
    "SyntheticSpec", "generate_synthetic",
    "NeighborGraph", "knn", "knn_query",
    "UmapParams", "UmapModel", "FuzzyGraph", "smooth_knn", "fuzzy_graph",
    "fit_curve", "fit_umap", "transform", "resolve_epochs",
    "PcaModel", "fit_pca", "transform_pca",
    "MixtureModel", "Partition", "fit_gmm", "predict", "responsibilities",
    "ari", "mean_pairwise_ari",
    "ClusterProfile", "MatchedCluster", "FoldSummary", "characterize",
    "summarize_across_folds",
    "SweepGrid", "SweepConfig", "ConfigResult", "FoldModel", "SweepReport",
    "SweepResult", "run_sweep", "select", "write_report", "read_report",
    "PipelineArtifact", "build_artifact", "save_artifact", "load_artifact",
]
