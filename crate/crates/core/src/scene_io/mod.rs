//! Scene files, JSON helpers and validation metrics.
//!
//! Scenes are JSON documents that reference OBJ/PLY meshes by path, relative
//! to the scene file. Errors carry a stable process exit code.

mod file;
mod validate;

pub use file::{
    load_scene, parse_scene, write_scene, LoadOptions, LoadedScene, ObjectEntry, Relations, SamplingSettings, SceneFile,
};
pub use validate::{
    scene_diagonal, validate_metrics, PairMetrics, SupportMetrics, Thresholds, ValidationReport,
    DEFAULT_GAP_FRACTION, DEFAULT_PENETRATION_FRACTION,
};

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::constraints::ConstraintError;
use crate::geometry::GeometryError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION_FAILED: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("{path}: schema error: {message}")]
    Schema { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("object '{id}': mesh {path} not found")]
    MissingMesh { id: String, path: String },
    #[error("object '{id}': {source}")]
    Mesh {
        id: String,
        #[source]
        source: GeometryError,
    },
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
}

impl SceneError {
    pub fn exit_code(&self) -> i32 {
        match self {
            SceneError::Schema { .. } => EXIT_SCHEMA,
            SceneError::Io { .. } | SceneError::MissingMesh { .. } | SceneError::Mesh { .. } => EXIT_IO,
            // Graph and id problems are schema problems of the input file.
            SceneError::Constraint(ConstraintError::Geometry(_)) => EXIT_IO,
            SceneError::Constraint(_) => EXIT_SCHEMA,
        }
    }

    pub(crate) fn schema(path: &Path, message: impl Into<String>) -> Self {
        SceneError::Schema {
            path: path.display().to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        SceneError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Reads JSON from `path`; schema errors name the offending field path.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, SceneError> {
    let text = fs::read_to_string(path).map_err(|e| SceneError::io(path, e))?;
    parse_json(&text, path)
}

pub(crate) fn parse_json<T: DeserializeOwned>(text: &str, path: &Path) -> Result<T, SceneError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        if field.is_empty() || field == "." {
            SceneError::schema(path, inner.to_string())
        } else {
            SceneError::schema(path, format!("at {field}: {inner}"))
        }
    })
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), SceneError> {
    fs::write(path, to_json_string(value)).map_err(|e| SceneError::io(path, e))
}
