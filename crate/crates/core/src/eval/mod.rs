//! Metrics, cross-validated hyperparameter selection and the per-replication
//! evaluation of the nine compared post-processing methods.

mod cv;
mod methods;
mod metrics;
mod replication;

pub use cv::{cv_select, select_best, CvOutcome, CvPoint, TIE_TOLERANCE};
pub use methods::{default_grid, fit_method, fit_method_with, FittedMethod, LearnerProblem, MethodId, MethodSettings, MethodSpec};
pub use metrics::{pearson_corr, rmse, Correlation};
pub use replication::{evaluate_method, MatrixChecksums, MethodOutcome, Replication};
