"""Sparse conditional-dependence graphs with network-characteristic penalty selection.

Estimate Gaussian graphical models along an l1 path (GLasso or neighborhood
selection), then pick the penalty by how the estimated network behaves:
the connectivity jump along the path, the subsampled dissimilarity risk, or
the agglomerative coefficient — next to StARS/AIC/BIC baselines.  Includes
the synthetic-data generators and the evaluation harness for the accompanying
simulation protocol.
"""

from .agnes import (Dendrogram, ac_coefficient, agnes_cluster, degree_cv,
                    select_subset, subset_ac)
from .errors import (DegenerateColumn, DimensionMismatch, GGMError,
                     InfeasibleDegreeSequence, InvalidGrid, MissingPrecision,
                     NoMethods, NoSubsetFound, PathMismatch, SingularInput)
from .estimator import (GLASSO, MB, PrecisionEstimate, RegPath, SampleCov,
                        fit_path, glasso_fit, mb_fit, validate_grid)
from .evalharness import (RecoveryScore, default_grid, matrix_mse,
                          network_stat_errors, oracle_lambda, rank_methods,
                          recovery, run_replicate, run_scenarios)
from .netstats import (DissimMatrix, Graph, avg_dissimilarity,
                       connectivity_indicator, degree_histogram,
                       dissimilarities, estrada_index, geodesic_mean,
                       geodesics, harmonic_mean)
from .rng import rng_for
from .selector import (AGNES_AC, AIC, AMSE, BIC, METHODS, PC, STARS,
                       RiskCurve, SelectionReport, SubsampleConfig, agnes_select,
                       amse_risk_from_tables, amse_select, ic_select, pc_from_h,
                       pc_select, select_all, stars_from_instability,
                       stars_select)
from .simgen import (PRESETS, GroundTruth, SimSpec, gen_precision, gen_topology,
                     generate_replicate, preset_spec, sample_mvn)

__version__ = "0.1.0"

__all__ = [
    "AGNES_AC", "AIC", "AMSE", "BIC", "GLASSO", "MB", "METHODS", "PC",
    "PRESETS", "STARS",
    "Dendrogram", "DissimMatrix", "Graph", "GroundTruth", "PrecisionEstimate",
    "RecoveryScore", "RegPath", "RiskCurve", "SampleCov", "SelectionReport",
    "SimSpec", "SubsampleConfig",
    "GGMError", "DegenerateColumn", "DimensionMismatch",
    "InfeasibleDegreeSequence", "InvalidGrid", "MissingPrecision", "NoMethods",
    "NoSubsetFound", "PathMismatch", "SingularInput",
    "ac_coefficient", "agnes_cluster", "agnes_select", "amse_risk_from_tables",
    "amse_select", "avg_dissimilarity", "connectivity_indicator",
    "default_grid", "degree_cv", "degree_histogram", "dissimilarities",
    "estrada_index", "fit_path", "gen_precision", "gen_topology",
    "generate_replicate", "geodesic_mean", "geodesics", "glasso_fit",
    "harmonic_mean", "ic_select", "matrix_mse", "mb_fit",
    "network_stat_errors", "oracle_lambda", "pc_from_h", "pc_select",
    "preset_spec", "rank_methods", "recovery", "rng_for", "run_replicate",
    "run_scenarios", "sample_mvn", "select_all", "select_subset",
    "stars_from_instability", "stars_select", "subset_ac", "validate_grid",
]
