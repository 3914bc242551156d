//! Mesh representation, surface sampling and signed-distance queries.

mod aabb;
pub mod bvh;
pub mod io;
mod mesh;
mod sampling;
mod sdf;
pub mod shapes;

pub use aabb::Aabb;
pub use mesh::{TriangleMesh, WELD_TOLERANCE};
pub use sampling::{sample_surface, SurfaceSamples};
pub use sdf::{
    SdfField, SdfMode, SdfSample, DEFAULT_GRID_RESOLUTION, GRID_MARGIN_FRACTION, MIN_GRID_RESOLUTION,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("degenerate mesh")]
    DegenerateMesh,
    #[error("vertex {0} has a non-finite coordinate")]
    NonFiniteVertex(usize),
    #[error("face {face} references vertex {index} but the mesh has {vertex_count}")]
    FaceIndexOutOfRange {
        face: usize,
        index: usize,
        vertex_count: usize,
    },
    #[error("grid resolution {0} is below the minimum of 8")]
    GridResolution(usize),
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
