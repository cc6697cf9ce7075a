//! Goodness of fit, monotonicity classification, cross-validation,
//! hyperparameter selection and model comparison.

pub mod compare;
pub mod fit;
pub mod hyper;
pub mod loocv;
pub mod metrics;
pub mod monotonicity;
pub mod split;

pub use compare::{compare_models, pool_observations, pooled_comparison, supersaturated_pool, ComparisonTable, KindSummary, PooledComparison, PooledFit, R2_THRESHOLD};
pub use fit::{c50_estimate, fit_model, ModelSettings};
pub use hyper::{pick_crossing, search_run, select_hyperparameters, HyperRun, HyperSearchConfig, HyperSearchResult, MeanStd, SweepPick, SweepPoint};
pub use loocv::{curve_observations, fit_curve, loocv, FitResult, FoldRecord};
pub use metrics::{nmse, r_squared};
pub use monotonicity::{monotonicity_index, CurveClass, MonotonicityReport, MI_EPSILON};
pub use split::{split_dataset, split_with_sizes, PoolPoint, Split};
