//! Bounding-volume hierarchy over mesh triangles for nearest-surface queries.

use nalgebra::{Point3, Vector3};

use super::{Aabb, TriangleMesh};

const LEAF_SIZE: usize = 4;

/// Which part of a triangle the closest point landed on.
///
/// Edge `k` joins local vertices `k` and `(k + 1) % 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feature {
    Face,
    Edge(u8),
    Vertex(u8),
}

#[derive(Debug, Clone, Copy)]
pub struct ClosestPoint {
    pub face: usize,
    pub feature: Feature,
    pub point: Point3<f64>,
    pub distance_squared: f64,
}

/// Closest point on triangle `abc` to `p`, classified by Voronoi region.
pub fn closest_point_on_triangle(
    p: &Point3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> (Point3<f64>, Feature) {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (*a, Feature::Vertex(0));
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (*b, Feature::Vertex(1));
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + ab * v, Feature::Edge(0));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (*c, Feature::Vertex(2));
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + ac * w, Feature::Edge(2));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, Feature::Edge(1));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, Feature::Face)
}

#[derive(Debug, Clone)]
enum NodeKind {
    Leaf { start: usize, count: usize },
    Inner { left: usize, right: usize },
}

#[derive(Debug, Clone)]
struct Node {
    bbox: Aabb,
    kind: NodeKind,
}

/// Median-split BVH. Construction is deterministic: ties in centroid order
/// are broken by face index.
#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<usize>,
}

impl Bvh {
    pub fn build(mesh: &TriangleMesh) -> Self {
        let n = mesh.faces().len();
        let boxes: Vec<Aabb> = (0..n)
            .map(|f| Aabb::from_points(&mesh.triangle(f)).expect("three points"))
            .collect();
        let centroids: Vec<Point3<f64>> = boxes.iter().map(Aabb::center).collect();
        let mut bvh = Bvh {
            nodes: Vec::with_capacity(2 * n / LEAF_SIZE + 1),
            order: (0..n).collect(),
        };
        if n > 0 {
            bvh.build_node(&boxes, &centroids, 0, n);
        }
        bvh
    }

    fn build_node(&mut self, boxes: &[Aabb], centroids: &[Point3<f64>], start: usize, end: usize) -> usize {
        let slice = &mut self.order[start..end];
        let bbox = slice.iter().fold(Aabb::empty(), |acc, &f| acc.merge(&boxes[f]));
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node {
                bbox,
                kind: NodeKind::Leaf {
                    start,
                    count: end - start,
                },
            });
            return id;
        }
        let mut centroid_box = Aabb::empty();
        for &f in slice.iter() {
            centroid_box.grow(&centroids[f]);
        }
        let axis = centroid_box.longest_axis();
        let mid = (end - start) / 2;
        slice.select_nth_unstable_by(mid, |&a, &b| {
            centroids[a][axis].total_cmp(&centroids[b][axis]).then(a.cmp(&b))
        });
        self.nodes.push(Node {
            bbox,
            kind: NodeKind::Leaf { start, count: 0 },
        });
        let left = self.build_node(boxes, centroids, start, start + mid);
        let right = self.build_node(boxes, centroids, start + mid, end);
        self.nodes[id].kind = NodeKind::Inner { left, right };
        id
    }

    /// Nearest surface point to `p`; `None` only for an empty mesh.
    pub fn closest(&self, mesh: &TriangleMesh, p: &Point3<f64>) -> Option<ClosestPoint> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<ClosestPoint> = None;
        let mut best_d2 = f64::INFINITY;
        let mut stack = vec![(0usize, self.nodes[0].bbox.distance_squared(p))];
        while let Some((id, box_d2)) = stack.pop() {
            if box_d2 > best_d2 {
                continue;
            }
            match self.nodes[id].kind {
                NodeKind::Leaf { start, count } => {
                    for &f in &self.order[start..start + count] {
                        let [a, b, c] = mesh.triangle(f);
                        let (q, feature) = closest_point_on_triangle(p, &a, &b, &c);
                        let d2 = (p - q).norm_squared();
                        // Equal distances resolve to the lower face index.
                        let better = match best {
                            None => true,
                            Some(ref cur) => d2 < best_d2 || (d2 == best_d2 && f < cur.face),
                        };
                        if better {
                            best_d2 = d2;
                            best = Some(ClosestPoint {
                                face: f,
                                feature,
                                point: q,
                                distance_squared: d2,
                            });
                        }
                    }
                }
                NodeKind::Inner { left, right } => {
                    let dl = self.nodes[left].bbox.distance_squared(p);
                    let dr = self.nodes[right].bbox.distance_squared(p);
                    // Push the farther child first so the nearer one pops next.
                    if dl <= dr {
                        stack.push((right, dr));
                        stack.push((left, dl));
                    } else {
                        stack.push((left, dl));
                        stack.push((right, dr));
                    }
                }
            }
        }
        best
    }
}

/// Angle-weighted pseudo-normals at every face, edge and vertex of a mesh.
#[derive(Debug, Clone)]
pub struct PseudoNormals {
    face: Vec<Vector3<f64>>,
    /// Per face, the normal of local edge `k`.
    edge: Vec<[Vector3<f64>; 3]>,
    vertex: Vec<Vector3<f64>>,
}

impl PseudoNormals {
    pub fn build(mesh: &TriangleMesh) -> Self {
        use std::collections::HashMap;

        let face: Vec<Vector3<f64>> = (0..mesh.faces().len()).map(|f| mesh.face_normal(f)).collect();
        let mut vertex = vec![Vector3::zeros(); mesh.vertices().len()];
        let mut edge_sum: HashMap<(usize, usize), Vector3<f64>> = HashMap::new();
        for (f, tri) in mesh.faces().iter().enumerate() {
            let pts = mesh.triangle(f);
            for k in 0..3 {
                let e1 = pts[(k + 1) % 3] - pts[k];
                let e2 = pts[(k + 2) % 3] - pts[k];
                let angle = e1.angle(&e2);
                vertex[tri[k]] += face[f] * angle;
                let (u, v) = (tri[k], tri[(k + 1) % 3]);
                *edge_sum.entry((u.min(v), u.max(v))).or_insert_with(Vector3::zeros) += face[f];
            }
        }
        let normalize = |v: Vector3<f64>| v.try_normalize(0.0).unwrap_or(v);
        let edge = mesh
            .faces()
            .iter()
            .map(|tri| {
                [0, 1, 2].map(|k| {
                    let (u, v) = (tri[k], tri[(k + 1) % 3]);
                    normalize(edge_sum[&(u.min(v), u.max(v))])
                })
            })
            .collect();
        Self {
            face,
            edge,
            vertex: vertex.into_iter().map(normalize).collect(),
        }
    }

    pub fn at(&self, mesh: &TriangleMesh, face: usize, feature: Feature) -> Vector3<f64> {
        match feature {
            Feature::Face => self.face[face],
            Feature::Edge(k) => self.edge[face][k as usize],
            Feature::Vertex(k) => self.vertex[mesh.faces()[face][k as usize]],
        }
    }
}
