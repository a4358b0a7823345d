//! Estimators applied to trajectories and entity cross-sections.

pub mod aggregate;
pub mod ols;
pub mod project;
pub mod regress;
pub mod relax;
pub mod scan;
pub mod spread;

pub use aggregate::{
    fit_along, relaxation_pipeline, screen_and_aggregate, EntityFit, RelaxationSummary, TauAggregate,
    DEFAULT_P_THRESHOLD,
};
pub use ols::{ols, Coefficient, OlsResult};
pub use project::{project, ProjectedSeries};
pub use regress::{
    fit_with_shares, quadratic_term_check, regress_mu_kappa, ExplainedShare, ModelFit, MuKappaRegression, Response,
};
pub use relax::{fit_relaxation, fit_relaxation_with, FitOptions, FitResult, FitStatus};
pub use scan::{angular_scan, angular_scan_with, sound_counts, summarise, AngularScan};
pub use spread::{empirical_variance_ratio, pca2, Pca2, VarianceRatio};
