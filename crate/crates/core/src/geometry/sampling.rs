use nalgebra::{Point3, Vector3};
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{GeometryError, TriangleMesh};

/// Points drawn uniformly by area from a mesh surface, with the normal of the
/// face each point came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceSamples {
    points: Vec<Point3<f64>>,
    normals: Vec<Vector3<f64>>,
}

impl SurfaceSamples {
    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    pub fn normals(&self) -> &[Vector3<f64>] {
        &self.normals
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Option<Point3<f64>> {
        if self.points.is_empty() {
            return None;
        }
        let sum = self.points.iter().fold(Vector3::zeros(), |acc, p| acc + p.coords);
        Some(Point3::from(sum / self.points.len() as f64))
    }
}

/// Draws `n` area-weighted surface samples. The same `(mesh, n, seed)` always
/// yields bit-identical output.
pub fn sample_surface(mesh: &TriangleMesh, n: usize, seed: u64) -> Result<SurfaceSamples, GeometryError> {
    if n == 0 {
        return Ok(SurfaceSamples {
            points: Vec::new(),
            normals: Vec::new(),
        });
    }
    let areas: Vec<f64> = (0..mesh.faces().len()).map(|f| mesh.face_area(f)).collect();
    let total: f64 = areas.iter().sum();
    if !(total > 0.0) {
        return Err(GeometryError::DegenerateMesh);
    }
    let picker = WeightedIndex::new(&areas).map_err(|_| GeometryError::DegenerateMesh)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    for _ in 0..n {
        let f = picker.sample(&mut rng);
        let [a, b, c] = mesh.triangle(f);
        // Square-root warp gives a uniform density over the triangle.
        let r1: f64 = rng.gen::<f64>().sqrt();
        let r2: f64 = rng.gen();
        let p = a.coords * (1.0 - r1) + b.coords * (r1 * (1.0 - r2)) + c.coords * (r1 * r2);
        points.push(Point3::from(p));
        normals.push(mesh.face_normal(f));
    }
    Ok(SurfaceSamples { points, normals })
}
