//! Rigid/similarity transform algebra and point-set registration.

mod icp;
mod nn;
mod pose;
mod umeyama;

pub use icp::{icp, IcpConfig, IcpResult};
pub use nn::PointGrid;
pub use pose::{RigidPose, SimilarityTransform};
pub use umeyama::{select_best_candidate, umeyama, CorrespondedPointSets, TransformCandidate};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("degenerate correspondence")]
    DegenerateCorrespondence,
    #[error("empty point set")]
    EmptyInput,
    #[error("no non-degenerate candidate")]
    NoValidCandidate,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid transform: {0}")]
    InvalidTransform(String),
}
