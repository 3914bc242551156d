use nalgebra::{Point3, Vector3};

use super::nn::PointGrid;
use super::umeyama::{rms, umeyama_slices};
use super::{RigidPose, SimilarityTransform, TransformError};
use crate::geometry::Aabb;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcpConfig {
    pub max_iters: usize,
    /// Stop once the residual changes by less than this between iterations.
    pub tol: f64,
    /// Normalize each cloud by its bounding box (center and diagonal) before
    /// registering.
    pub bbox_normalize: bool,
}

impl Default for IcpConfig {
    fn default() -> Self {
        Self {
            max_iters: 100,
            tol: 1e-10,
            bbox_normalize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcpResult {
    /// Maps source points onto the target in original units. Scale is 1
    /// unless bbox normalization matched clouds of different size.
    pub transform: SimilarityTransform,
    /// Final RMS nearest-neighbor distance, in target units.
    pub residual: f64,
    pub iterations: usize,
    /// RMS residual before the first update and after each update.
    pub history: Vec<f64>,
}

impl IcpResult {
    pub fn pose(&self) -> RigidPose {
        self.transform.rigid_part()
    }
}

struct Normalization {
    center: Vector3<f64>,
    size: f64,
}

impl Normalization {
    fn of(points: &[Point3<f64>]) -> Self {
        let bb = Aabb::from_points(points).expect("non-empty");
        let d = bb.diagonal();
        Self {
            center: bb.center().coords,
            size: if d > 0.0 { d } else { 1.0 },
        }
    }

    fn identity() -> Self {
        Self {
            center: Vector3::zeros(),
            size: 1.0,
        }
    }

    fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from((p.coords - self.center) / self.size)
    }
}

/// Point-to-point ICP starting from the identity.
///
/// Each iteration pairs every moved source point with its nearest target
/// point and solves the rigid least-squares problem for those pairs. No
/// outlier trimming is applied.
pub fn icp(source: &[Point3<f64>], target: &[Point3<f64>], cfg: &IcpConfig) -> Result<IcpResult, TransformError> {
    if source.is_empty() || target.is_empty() {
        return Err(TransformError::EmptyInput);
    }
    let (ns, nt) = if cfg.bbox_normalize {
        (Normalization::of(source), Normalization::of(target))
    } else {
        (Normalization::identity(), Normalization::identity())
    };
    let src: Vec<Point3<f64>> = source.iter().map(|p| ns.apply(p)).collect();
    let grid = PointGrid::new(target.iter().map(|p| nt.apply(p)).collect()).expect("non-empty");

    let correspond = |pose: &RigidPose| -> (Vec<Point3<f64>>, f64) {
        let matched: Vec<Point3<f64>> = src
            .iter()
            .map(|p| grid.points()[grid.nearest(&pose.apply(p)).0])
            .collect();
        let r = rms(&src, &matched, |p| pose.apply(p));
        (matched, r)
    };

    let mut pose = RigidPose::identity();
    let (mut matched, mut residual) = correspond(&pose);
    let mut history = vec![residual];
    let mut iterations = 0;
    while iterations < cfg.max_iters && residual > 0.0 {
        let next = match umeyama_slices(&src, &matched, false) {
            Ok(t) => t.rigid_part(),
            Err(_) => break,
        };
        let (next_matched, next_residual) = correspond(&next);
        iterations += 1;
        // Both half-steps of ICP are non-increasing; a rise can only be
        // round-off, in which case keep the previous pose.
        if next_residual > residual {
            break;
        }
        let change = residual - next_residual;
        pose = next;
        matched = next_matched;
        residual = next_residual;
        history.push(residual);
        if change < cfg.tol {
            break;
        }
    }

    // Undo the normalizations: y = s_t·(R·(x − c_s)/s_s + t) + c_t.
    let scale = nt.size / ns.size;
    let translation = pose.translation * nt.size + nt.center - (pose.rotation * ns.center) * scale;
    let transform = SimilarityTransform::new(scale, pose.rotation, translation)?;
    Ok(IcpResult {
        transform,
        residual: residual * nt.size,
        iterations,
        history: history.into_iter().map(|r| r * nt.size).collect(),
    })
}
