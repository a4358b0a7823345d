//! Coupled institutions/economy linear dynamics: closed-form analysis,
//! simulation, panel data handling and the estimators used on it.

pub mod error;
pub mod estimate;
pub mod model;
pub mod panel;
pub mod persistence;
pub mod registry;
pub mod render;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
pub use model::{
    alpha_from_variance_ratio, eigen_general, fixed_point, infer_alpha_lambda, stability_classify, time_constants,
    variance_ratio, EigenCoords, EigenSolution, FixedPoint, ForcingTerms, PhasePoint, Regime, SystemParams,
};
pub use panel::{EntityAverages, JoinedPanel, PanelSchema, PanelTable};
pub use simulate::Trajectory;
