//! Multi-target generative model, its joint density and the two equivalent
//! descriptions of a data association.

pub mod density;
pub mod dynamics;
pub mod params;
pub mod simulate;
pub mod tracks;

pub use density::{log_joint_density, log_joint_tracks, track_log_term, JointLogDensity, LogParams};
pub use dynamics::{cv_matrices, LinearObsModel, TrackingModel};
pub use params::{HmmParams, ModelParams, ObsWindow, SensorKind, THETA_NAMES};
pub use simulate::{simulate, simulate_with_rng};
pub use tracks::{
    canonical_cmp, decompose, recompose, state_order, Association, FlatStates, ScanAssoc, Scene, Track, TrackSet,
};
