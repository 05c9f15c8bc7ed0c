"""Budget-constrained exploration of outlier detectors.

Enumerates (algorithm, feature-subspace) detector candidates, predicts
their cost and utility with meta-learned models, selects a diverse
affordable subset exactly, executes it, and factorizes the resulting
score matrix into heatmap-ready perspectives and ensemble scores.
"""

from .data import (DataMatrix, FeatureSubspace, LabeledDataset,
                   generate_synthetic_corpus, load_csv, normalize_feature,
                   planted_outlier_dataset, save_csv, CorpusSpec)
from .detectors import (DetectorResult, execute, normalize_scores, run_abod,
                        run_fbod, run_lof, run_md, run_sod)
from .errors import (DataError, DetectorExecutionError, ExplorerError,
                     InfeasibleInstanceError, LabelError, MalformedCellError,
                     ParameterError, SizeError, TrainingError)
from .factorization import (OutlierMatrix, Perspective, PerspectiveSet,
                            build_outlier_matrix, ensemble_scores,
                            extract_perspectives, klnmf)
from .meta import (ModelBundle, RegressionModel, cost_features,
                   detection_agreement, feature_level_stats,
                   feature_stats_table, meta_feature_vector, predict,
                   train_all, train_model)
from .metrics import (f_at_n, metric_table, precision_at_n, recall_at_n,
                      top_n_indices)
from .mip import (ExplorationPlan, MipInstance, check_feasibility,
                  default_parameters, objective_value, solve)
from .pipeline import (RunConfig, RunResult, evaluate_run, load_run,
                       refactorize, run_exploration, run_strategy, save_run)
from .subspaces import (ALGORITHMS, CandidateDetector, SubspaceFamilies,
                        build_nonredundant_bag, build_prioritized_family,
                        build_random_family, correlation_matrix,
                        enumerate_candidates, enumerate_families,
                        laplacian_scores)

__version__ = "0.1.0"
