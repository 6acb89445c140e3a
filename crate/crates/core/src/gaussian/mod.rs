//! Unscented transform, UKF, Gaussian backward sampling and the exact Kalman oracle.

pub mod backward;
pub mod kalman;
pub mod ukf;
pub mod ut;

pub use backward::{gaussian_backward_log_density, gaussian_backward_sample};
pub use kalman::{cv_log_marginal, kalman_filter, kalman_log_marginal, rts_smoother, KalmanOutput, LinearGaussianModel};
pub use ukf::{predict, predict_backward, predict_obs, ukf_track_filter, update, ObsPrediction, StateBelief, UkfStep};
pub use ut::{sigma_points, unscented_transform, GaussianBelief, SigmaPointSet, DEFAULT_UT_SCALE};
