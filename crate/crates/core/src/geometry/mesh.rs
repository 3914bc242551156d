use std::collections::HashMap;

use nalgebra::{Point3, Vector3};

use super::{Aabb, GeometryError};

/// Vertices closer than this are merged at load time.
pub const WELD_TOLERANCE: f64 = 1e-9;

/// Faces whose doubled area falls below this fraction of the squared bbox
/// diagonal are treated as degenerate and dropped.
const DEGENERATE_AREA_FRACTION: f64 = 1e-14;

/// Triangle surface in an object's rest frame.
///
/// Construction welds coincident vertices, drops zero-area faces and
/// unreferenced vertices, then records whether the result is a closed,
/// consistently wound 2-manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Point3<f64>>,
    faces: Vec<[usize; 3]>,
    watertight: bool,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self, GeometryError> {
        if let Some(i) = vertices.iter().position(|v| !v.coords.iter().all(|c| c.is_finite())) {
            return Err(GeometryError::NonFiniteVertex(i));
        }
        for (f, face) in faces.iter().enumerate() {
            if let Some(&idx) = face.iter().find(|&&i| i >= vertices.len()) {
                return Err(GeometryError::FaceIndexOutOfRange {
                    face: f,
                    index: idx,
                    vertex_count: vertices.len(),
                });
            }
        }

        let remap = weld(&vertices, WELD_TOLERANCE);
        let diag = Aabb::from_points(&vertices).map_or(0.0, |b| b.diagonal());
        let min_double_area = DEGENERATE_AREA_FRACTION * diag * diag;

        let mut kept = Vec::with_capacity(faces.len());
        for face in &faces {
            let f = [remap[face[0]], remap[face[1]], remap[face[2]]];
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                continue;
            }
            let [a, b, c] = f.map(|i| vertices[i]);
            let double_area = (b - a).cross(&(c - a)).norm();
            if double_area <= min_double_area {
                continue;
            }
            kept.push(f);
        }

        // Compact to referenced vertices, preserving first-use order of the
        // original indexing.
        let mut new_index = vec![usize::MAX; vertices.len()];
        let mut used: Vec<usize> = kept.iter().flatten().copied().collect();
        used.sort_unstable();
        used.dedup();
        let mut compact = Vec::with_capacity(used.len());
        for old in used {
            new_index[old] = compact.len();
            compact.push(vertices[old]);
        }
        let faces: Vec<[usize; 3]> = kept.into_iter().map(|f| f.map(|i| new_index[i])).collect();
        let watertight = is_closed_manifold(&faces);
        Ok(Self {
            vertices: compact,
            faces,
            watertight,
        })
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn is_watertight(&self) -> bool {
        self.watertight
    }

    pub fn triangle(&self, face: usize) -> [Point3<f64>; 3] {
        self.faces[face].map(|i| self.vertices[i])
    }

    /// Unnormalized face normal with length equal to twice the face area.
    pub fn face_cross(&self, face: usize) -> Vector3<f64> {
        let [a, b, c] = self.triangle(face);
        (b - a).cross(&(c - a))
    }

    pub fn face_area(&self, face: usize) -> f64 {
        0.5 * self.face_cross(face).norm()
    }

    pub fn face_normal(&self, face: usize) -> Vector3<f64> {
        self.face_cross(face).normalize()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(&self.vertices).unwrap_or_else(|| Aabb::new(Point3::origin(), Point3::origin()))
    }

    /// Returns a copy with every vertex mapped through `f`. Winding is kept,
    /// so `f` should be orientation preserving.
    pub fn map_vertices(&self, f: impl Fn(&Point3<f64>) -> Point3<f64>) -> Result<Self, GeometryError> {
        Self::new(self.vertices.iter().map(f).collect(), self.faces.clone())
    }
}

/// Maps each vertex index to the index of its representative. Representatives
/// map to themselves; a vertex joins the lowest-indexed representative within
/// `tol` that precedes it in x-sorted order.
fn weld(vertices: &[Point3<f64>], tol: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..vertices.len()).collect();
    order.sort_by(|&a, &b| vertices[a].x.total_cmp(&vertices[b].x).then(a.cmp(&b)));
    let mut rep: Vec<usize> = (0..vertices.len()).collect();
    let tol_sq = tol * tol;
    for (k, &i) in order.iter().enumerate() {
        let mut best: Option<usize> = None;
        for &j in order[..k].iter().rev() {
            if vertices[i].x - vertices[j].x > tol {
                break;
            }
            if rep[j] == j && (vertices[i] - vertices[j]).norm_squared() <= tol_sq {
                best = Some(best.map_or(j, |b: usize| b.min(j)));
            }
        }
        if let Some(j) = best {
            rep[i] = j;
        }
    }
    rep
}

fn is_closed_manifold(faces: &[[usize; 3]]) -> bool {
    if faces.is_empty() {
        return false;
    }
    let mut directed: HashMap<(usize, usize), u32> = HashMap::with_capacity(faces.len() * 3);
    for f in faces {
        for k in 0..3 {
            *directed.entry((f[k], f[(k + 1) % 3])).or_insert(0) += 1;
        }
    }
    directed
        .iter()
        .all(|(&(u, v), &count)| count == 1 && directed.get(&(v, u)) == Some(&1))
}
