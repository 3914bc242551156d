//! Physics-aware layout correction for multi-object 3D scenes.
//!
//! Objects are triangle meshes with rigid poses. A relation graph says which
//! pairs must touch without interpenetrating ([`relation_graph::ConstraintKind::Contact`]),
//! which object rests on which ([`relation_graph::ConstraintKind::Support`]), and
//! which supporters are flat surfaces whose contact band is regularized
//! ([`relation_graph::ConstraintKind::FlatSupport`]). [`optimizer::settle`] moves
//! the non-static poses to minimize the summed SDF costs from [`constraints`].
//!
//! [`transforms`] carries the pose algebra plus Umeyama alignment, an ICP
//! baseline and best-of-K candidate selection.

pub mod geometry;
pub mod transforms;
pub mod relation_graph;
pub mod constraints;
pub mod fixtures;
pub mod optimizer;
pub mod scene_io;
