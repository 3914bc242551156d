use nalgebra::{Matrix3, Point3, Rotation3, UnitQuaternion, Vector3};
use rayon::prelude::*;

use super::{SimilarityTransform, TransformError};

/// Source points (canonical frame) paired index-by-index with target points
/// (scene frame).
#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondedPointSets {
    source: Vec<Point3<f64>>,
    target: Vec<Point3<f64>>,
}

impl CorrespondedPointSets {
    pub fn new(source: Vec<Point3<f64>>, target: Vec<Point3<f64>>) -> Result<Self, TransformError> {
        if source.len() != target.len() {
            return Err(TransformError::InvalidInput(format!(
                "source has {} points but target has {}",
                source.len(),
                target.len()
            )));
        }
        if source.len() < 3 {
            return Err(TransformError::DegenerateCorrespondence);
        }
        if source.iter().chain(&target).any(|p| !p.coords.iter().all(|c| c.is_finite())) {
            return Err(TransformError::InvalidInput("non-finite point".into()));
        }
        Ok(Self { source, target })
    }

    pub fn source(&self) -> &[Point3<f64>] {
        &self.source
    }

    pub fn target(&self) -> &[Point3<f64>] {
        &self.target
    }

    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }

    /// Root-mean-square of `target_k − T(source_k)`.
    pub fn rms_residual(&self, transform: &SimilarityTransform) -> f64 {
        rms(&self.source, &self.target, |p| transform.apply(p))
    }
}

pub(crate) fn rms(
    source: &[Point3<f64>],
    target: &[Point3<f64>],
    f: impl Fn(&Point3<f64>) -> Point3<f64>,
) -> f64 {
    let sum: f64 = source.iter().zip(target).map(|(s, t)| (t - f(s)).norm_squared()).sum();
    (sum / source.len() as f64).sqrt()
}

/// A fitted transform together with its RMS alignment error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformCandidate {
    pub transform: SimilarityTransform,
    pub residual: f64,
}

/// Singular values below this fraction of the largest count as zero.
const RANK_TOLERANCE: f64 = 1e-12;

/// Closed-form least-squares similarity (or rigid, when `with_scale` is false)
/// transform taking `source` onto `target`.
///
/// A reflection in the cross-covariance is corrected by flipping the axis of
/// the smallest singular value, so the rotation is always proper.
pub fn umeyama(pairs: &CorrespondedPointSets, with_scale: bool) -> Result<SimilarityTransform, TransformError> {
    umeyama_slices(&pairs.source, &pairs.target, with_scale)
}

pub(crate) fn umeyama_slices(
    source: &[Point3<f64>],
    target: &[Point3<f64>],
    with_scale: bool,
) -> Result<SimilarityTransform, TransformError> {
    let n = source.len();
    if n < 3 || target.len() != n {
        return Err(TransformError::DegenerateCorrespondence);
    }
    let inv_n = 1.0 / n as f64;
    let mean_src = source.iter().fold(Vector3::zeros(), |a, p| a + p.coords) * inv_n;
    let mean_dst = target.iter().fold(Vector3::zeros(), |a, p| a + p.coords) * inv_n;

    let mut cov = Matrix3::zeros();
    let mut var_src = 0.0;
    for (s, t) in source.iter().zip(target) {
        let ds = s.coords - mean_src;
        let dt = t.coords - mean_dst;
        cov += dt * ds.transpose();
        var_src += ds.norm_squared();
    }
    cov *= inv_n;
    var_src *= inv_n;

    let svd = cov.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(TransformError::DegenerateCorrespondence),
    };
    let sv = svd.singular_values;
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let (largest, middle, smallest) = (sv[order[0]], sv[order[1]], order[2]);
    if !(var_src > 0.0) || !(largest > 0.0) || middle <= RANK_TOLERANCE * largest {
        return Err(TransformError::DegenerateCorrespondence);
    }

    let mut signs = Vector3::repeat(1.0);
    if u.determinant() * v_t.determinant() < 0.0 {
        signs[smallest] = -1.0;
    }
    let r = u * Matrix3::from_diagonal(&signs) * v_t;
    let scale = if with_scale {
        sv.component_mul(&signs).sum() / var_src
    } else {
        1.0
    };
    let rotation = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(r));
    let translation = mean_dst - (rotation * mean_src) * scale;
    SimilarityTransform::new(scale, rotation, translation).map_err(|_| TransformError::DegenerateCorrespondence)
}

impl TransformCandidate {
    pub fn fit(pairs: &CorrespondedPointSets, with_scale: bool) -> Result<Self, TransformError> {
        let transform = umeyama(pairs, with_scale)?;
        Ok(Self {
            residual: pairs.rms_residual(&transform),
            transform,
        })
    }
}

/// Fits every candidate with scale and returns the one with the lowest RMS
/// residual. Degenerate candidates are skipped; ties go to the lower index.
pub fn select_best_candidate(
    candidates: &[CorrespondedPointSets],
) -> Result<(usize, TransformCandidate), TransformError> {
    if candidates.is_empty() {
        return Err(TransformError::NoValidCandidate);
    }
    let fitted: Vec<Option<TransformCandidate>> = candidates
        .par_iter()
        .map(|c| TransformCandidate::fit(c, true).ok())
        .collect();
    let mut best: Option<(usize, TransformCandidate)> = None;
    for (i, cand) in fitted.into_iter().enumerate() {
        let Some(cand) = cand else { continue };
        if best.as_ref().is_none_or(|(_, b)| cand.residual < b.residual) {
            best = Some((i, cand));
        }
    }
    best.ok_or(TransformError::NoValidCandidate)
}
