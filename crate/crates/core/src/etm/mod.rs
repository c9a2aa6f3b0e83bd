//! Epistemic trajectory modeling: smoothing, reduction to two latent axes,
//! velocity, pivot detection and trajectory comparison.

mod compare;
mod pca;
mod pivot;
mod smooth;
mod trajectory;
mod velocity;

pub use compare::{compare_dtw, compare_frechet, Point2};
pub use pca::{reduce, symmetric_eigen};
pub use pivot::{detect_pivots, find_turns, quantile, PivotParams, Turn};
pub use smooth::smooth;
pub use trajectory::{
    build_trajectory, EpistemicTrajectory, EtmParams, PivotMarker, TimelineEntry, TrajectoryPoint,
};
pub use velocity::{velocity_series, VelocityParams};
