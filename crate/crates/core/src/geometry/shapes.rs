//! Closed primitive meshes used by tests, examples and the CLI fixtures.

use nalgebra::{Point2, Point3};

use super::{GeometryError, TriangleMesh};

const CUBOID_FACES: [[usize; 3]; 12] = [
    [0, 2, 1],
    [1, 2, 3],
    [4, 5, 6],
    [5, 7, 6],
    [0, 1, 4],
    [1, 5, 4],
    [2, 6, 3],
    [3, 6, 7],
    [0, 4, 2],
    [2, 4, 6],
    [1, 3, 5],
    [3, 7, 5],
];

/// Axis-aligned box with outward-facing triangles.
pub fn cuboid(min: Point3<f64>, max: Point3<f64>) -> TriangleMesh {
    let vertices = (0..8)
        .map(|i| {
            Point3::new(
                if i & 1 == 0 { min.x } else { max.x },
                if i & 2 == 0 { min.y } else { max.y },
                if i & 4 == 0 { min.z } else { max.z },
            )
        })
        .collect();
    TriangleMesh::new(vertices, CUBOID_FACES.to_vec()).expect("cuboid corners are finite")
}

/// The cube `[-0.5, 0.5]³`.
pub fn unit_cube() -> TriangleMesh {
    cuboid(Point3::new(-0.5, -0.5, -0.5), Point3::new(0.5, 0.5, 0.5))
}

/// Extrudes a simple polygon given in the x–z plane along y over `[y0, y1]`.
///
/// `profile` may be non-convex and in either orientation.
pub fn prism(profile: &[Point2<f64>], y0: f64, y1: f64) -> Result<TriangleMesh, GeometryError> {
    let n = profile.len();
    if n < 3 || y1 <= y0 {
        return Err(GeometryError::DegenerateMesh);
    }
    let mut ring: Vec<Point2<f64>> = profile.to_vec();
    if signed_area(&ring) < 0.0 {
        ring.reverse();
    }
    let cap = ear_clip(&ring).ok_or(GeometryError::DegenerateMesh)?;

    let mut vertices = Vec::with_capacity(2 * n);
    for p in &ring {
        vertices.push(Point3::new(p.x, y0, p.y));
    }
    for p in &ring {
        vertices.push(Point3::new(p.x, y1, p.y));
    }
    let mut faces = Vec::with_capacity(4 * n);
    for t in &cap {
        faces.push(*t);
        faces.push([t[0] + n, t[2] + n, t[1] + n]);
    }
    for a in 0..n {
        let b = (a + 1) % n;
        faces.push([a, b + n, b]);
        faces.push([a, a + n, b + n]);
    }
    TriangleMesh::new(vertices, faces)
}

fn signed_area(ring: &[Point2<f64>]) -> f64 {
    let n = ring.len();
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (ring[i], ring[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum::<f64>()
}

fn cross2(o: Point2<f64>, a: Point2<f64>, b: Point2<f64>) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn in_triangle(p: Point2<f64>, a: Point2<f64>, b: Point2<f64>, c: Point2<f64>) -> bool {
    cross2(a, b, p) >= 0.0 && cross2(b, c, p) >= 0.0 && cross2(c, a, p) >= 0.0
}

/// Ear clipping for a counter-clockwise simple polygon.
fn ear_clip(ring: &[Point2<f64>]) -> Option<Vec<[usize; 3]>> {
    let mut idx: Vec<usize> = (0..ring.len()).collect();
    let mut out = Vec::with_capacity(ring.len() - 2);
    while idx.len() > 3 {
        let m = idx.len();
        let ear = (0..m).find(|&k| {
            let (ia, ib, ic) = (idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]);
            let (a, b, c) = (ring[ia], ring[ib], ring[ic]);
            cross2(a, b, c) > 0.0
                && idx
                    .iter()
                    .filter(|&&j| j != ia && j != ib && j != ic)
                    .all(|&j| !in_triangle(ring[j], a, b, c))
        })?;
        out.push([idx[(ear + m - 1) % m], idx[ear], idx[(ear + 1) % m]]);
        idx.remove(ear);
    }
    out.push([idx[0], idx[1], idx[2]]);
    Some(out)
}
