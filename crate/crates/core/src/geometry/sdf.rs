//! Signed distance fields over triangle meshes.
//!
//! [`SdfField`] answers `D(p)` and `∇D(p)` in the mesh's rest frame. Two
//! backends share one query interface:
//!
//! * `Exact` walks a BVH for the nearest surface point and takes the sign from
//!   the angle-weighted pseudo-normal of the nearest feature.
//! * `Grid` samples the exact field on a regular lattice covering the mesh
//!   bounds plus a 20% margin and answers queries by trilinear interpolation.
//!   Points outside the lattice are extrapolated linearly from the nearest
//!   lattice point and flagged.
//!
//! Sign convention: negative inside, positive outside. Meshes that are not
//! watertight produce an unsigned field, marked by [`SdfField::is_signed`].

use std::sync::Arc;

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bvh::{Bvh, PseudoNormals};
use super::{Aabb, GeometryError, TriangleMesh};

pub const DEFAULT_GRID_RESOLUTION: usize = 64;
pub const MIN_GRID_RESOLUTION: usize = 8;
/// Lattice margin on each side, as a fraction of the longest mesh extent.
pub const GRID_MARGIN_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SdfMode {
    Exact,
    #[default]
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdfSample {
    pub distance: f64,
    pub gradient: Vector3<f64>,
    /// Set when a grid query fell outside the lattice.
    pub extrapolated: bool,
}

#[derive(Debug, Clone)]
pub struct SdfField {
    source: Arc<TriangleMesh>,
    signed: bool,
    backend: Backend,
}

#[derive(Debug, Clone)]
enum Backend {
    Exact(ExactSdf),
    Grid(GridSdf),
}

impl SdfField {
    /// Builds a field. `resolution` is the node count along the longest axis
    /// of the lattice and is ignored in exact mode.
    pub fn build(
        mesh: Arc<TriangleMesh>,
        mode: SdfMode,
        resolution: Option<usize>,
    ) -> Result<Self, GeometryError> {
        if mesh.faces().is_empty() {
            return Err(GeometryError::DegenerateMesh);
        }
        let signed = mesh.is_watertight();
        if !signed {
            log::warn!(
                "mesh with {} faces is not watertight; falling back to unsigned distance",
                mesh.faces().len()
            );
        }
        let exact = ExactSdf::new(mesh.clone(), signed);
        let backend = match mode {
            SdfMode::Exact => Backend::Exact(exact),
            SdfMode::Grid => {
                let res = resolution.unwrap_or(DEFAULT_GRID_RESOLUTION);
                if res < MIN_GRID_RESOLUTION {
                    return Err(GeometryError::GridResolution(res));
                }
                Backend::Grid(GridSdf::sample(&exact, &mesh.aabb(), res))
            }
        };
        Ok(Self {
            source: mesh,
            signed,
            backend,
        })
    }

    pub fn exact(mesh: Arc<TriangleMesh>) -> Result<Self, GeometryError> {
        Self::build(mesh, SdfMode::Exact, None)
    }

    pub fn mode(&self) -> SdfMode {
        match self.backend {
            Backend::Exact(_) => SdfMode::Exact,
            Backend::Grid(_) => SdfMode::Grid,
        }
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    pub fn source(&self) -> &Arc<TriangleMesh> {
        &self.source
    }

    /// Lattice spacing, or `None` in exact mode.
    pub fn cell_size(&self) -> Option<f64> {
        match &self.backend {
            Backend::Grid(g) => Some(g.cell),
            Backend::Exact(_) => None,
        }
    }

    /// Region covered by the lattice, or `None` in exact mode.
    pub fn grid_bounds(&self) -> Option<Aabb> {
        match &self.backend {
            Backend::Grid(g) => Some(g.bounds()),
            Backend::Exact(_) => None,
        }
    }

    pub fn query(&self, p: &Point3<f64>) -> SdfSample {
        match &self.backend {
            Backend::Exact(e) => e.query(p),
            Backend::Grid(g) => g.query(p),
        }
    }

    pub fn distance(&self, p: &Point3<f64>) -> f64 {
        match &self.backend {
            Backend::Exact(e) => e.query(p).distance,
            Backend::Grid(g) => g.query(p).distance,
        }
    }
}

#[derive(Debug, Clone)]
struct ExactSdf {
    mesh: Arc<TriangleMesh>,
    bvh: Arc<Bvh>,
    normals: Arc<PseudoNormals>,
    signed: bool,
    /// Below this distance the direction to the surface is unreliable and the
    /// pseudo-normal is used as the gradient.
    on_surface: f64,
}

impl ExactSdf {
    fn new(mesh: Arc<TriangleMesh>, signed: bool) -> Self {
        let bvh = Arc::new(Bvh::build(&mesh));
        let normals = Arc::new(PseudoNormals::build(&mesh));
        let on_surface = 1e-12 * mesh.aabb().diagonal();
        Self {
            mesh,
            bvh,
            normals,
            signed,
            on_surface,
        }
    }

    fn query(&self, p: &Point3<f64>) -> SdfSample {
        let hit = self
            .bvh
            .closest(&self.mesh, p)
            .expect("field built from a non-empty mesh");
        let normal = self.normals.at(&self.mesh, hit.face, hit.feature);
        let offset = p - hit.point;
        let unsigned = hit.distance_squared.sqrt();
        let sign = if self.signed && offset.dot(&normal) < 0.0 { -1.0 } else { 1.0 };
        let gradient = if unsigned > self.on_surface {
            offset * (sign / unsigned)
        } else {
            normal
        };
        SdfSample {
            distance: sign * unsigned,
            gradient,
            extrapolated: false,
        }
    }
}

#[derive(Debug, Clone)]
struct GridSdf {
    origin: Point3<f64>,
    cell: f64,
    dims: [usize; 3],
    values: Vec<f64>,
}

impl GridSdf {
    fn sample(exact: &ExactSdf, bbox: &Aabb, resolution: usize) -> Self {
        let longest = bbox.extent().max();
        let covered = bbox.inflated(GRID_MARGIN_FRACTION * longest);
        let cell = covered.extent().max() / (resolution - 1) as f64;
        let ext = covered.extent();
        let dims = [0, 1, 2].map(|k| (((ext[k] / cell) - 1e-9).ceil() as usize + 1).max(2));
        // Center the lattice on the covered box along the short axes.
        let span = Vector3::new(
            (dims[0] - 1) as f64 * cell,
            (dims[1] - 1) as f64 * cell,
            (dims[2] - 1) as f64 * cell,
        );
        let origin = covered.center() - span * 0.5;
        let values = (0..dims[0] * dims[1] * dims[2])
            .into_par_iter()
            .map(|n| {
                let i = n % dims[0];
                let j = (n / dims[0]) % dims[1];
                let k = n / (dims[0] * dims[1]);
                let p = origin + Vector3::new(i as f64, j as f64, k as f64) * cell;
                exact.query(&p).distance
            })
            .collect();
        Self {
            origin,
            cell,
            dims,
            values,
        }
    }

    fn bounds(&self) -> Aabb {
        let span = Vector3::new(
            (self.dims[0] - 1) as f64,
            (self.dims[1] - 1) as f64,
            (self.dims[2] - 1) as f64,
        ) * self.cell;
        Aabb::new(self.origin, self.origin + span)
    }

    fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[i + self.dims[0] * (j + self.dims[1] * k)]
    }

    /// Trilinear value and its analytic gradient at a point inside the lattice.
    fn interpolate(&self, p: &Point3<f64>) -> (f64, Vector3<f64>) {
        let local = (p - self.origin) / self.cell;
        let mut idx = [0usize; 3];
        let mut t = [0.0f64; 3];
        for a in 0..3 {
            let max_cell = (self.dims[a] - 2) as f64;
            let c = local[a].floor().clamp(0.0, max_cell);
            idx[a] = c as usize;
            t[a] = local[a] - c;
        }
        let [i, j, k] = idx;
        let c000 = self.at(i, j, k);
        let c100 = self.at(i + 1, j, k);
        let c010 = self.at(i, j + 1, k);
        let c110 = self.at(i + 1, j + 1, k);
        let c001 = self.at(i, j, k + 1);
        let c101 = self.at(i + 1, j, k + 1);
        let c011 = self.at(i, j + 1, k + 1);
        let c111 = self.at(i + 1, j + 1, k + 1);
        let [tx, ty, tz] = t;

        let c00 = c000 + (c100 - c000) * tx;
        let c10 = c010 + (c110 - c010) * tx;
        let c01 = c001 + (c101 - c001) * tx;
        let c11 = c011 + (c111 - c011) * tx;
        let c0 = c00 + (c10 - c00) * ty;
        let c1 = c01 + (c11 - c01) * ty;
        let value = c0 + (c1 - c0) * tz;

        let dx = {
            let d00 = c100 - c000;
            let d10 = c110 - c010;
            let d01 = c101 - c001;
            let d11 = c111 - c011;
            let d0 = d00 + (d10 - d00) * ty;
            let d1 = d01 + (d11 - d01) * ty;
            d0 + (d1 - d0) * tz
        };
        let dy = {
            let d0 = c10 - c00;
            let d1 = c11 - c01;
            d0 + (d1 - d0) * tz
        };
        let dz = c1 - c0;
        (value, Vector3::new(dx, dy, dz) / self.cell)
    }

    fn query(&self, p: &Point3<f64>) -> SdfSample {
        let bounds = self.bounds();
        if bounds.contains(p) {
            let (distance, gradient) = self.interpolate(p);
            SdfSample {
                distance,
                gradient,
                extrapolated: false,
            }
        } else {
            let q = bounds.clamp(p);
            let (value, gradient) = self.interpolate(&q);
            SdfSample {
                distance: value + gradient.dot(&(p - q)),
                gradient,
                extrapolated: true,
            }
        }
    }
}
