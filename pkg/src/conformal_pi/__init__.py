"""Split conformal regressors and predictive systems with KNN difficulty
estimators and Mondrian binning."""

from .conformal import (
    CpsModel,
    CrModel,
    Intervals,
    MondrianBinning,
    PredictionInterval,
    assign_bin,
    calibrate_cps,
    calibrate_cr,
    cps_quantile,
    fit_cps,
    fit_cr,
    fit_mondrian,
    predict_cps,
    predict_cr,
    predict_interval_cps,
    predict_interval_cr,
)
from .data import (
    Dataset,
    FeatureStats,
    compute_stats,
    load_dataset,
    save_dataset,
    split_dataset,
    standardize,
)
from .difficulty import DifficultyEstimator, estimate, fit_difficulty
from .evaluation import (
    difficulty_quantile_rmse,
    effective_coverage,
    evaluate,
    interval_extremes,
    width_stats,
)
from .knn import NeighborIndex, brute_force_knn, build_index, query_knn
from .model_io import load_model, save_model
from .sweep import SweepGrid, SweepResult, run_sweep, select_best

__version__ = "0.1.0"
