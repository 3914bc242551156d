use nalgebra::{DMatrix, DVector};

const MAX_MAJOR: usize = 200;

/// Convex weights `λ` (summing to 1) of the point of `conv(points)` nearest
/// the origin, by Wolfe's algorithm. All points must share one dimension.
pub(crate) fn min_norm_weights(points: &[DVector<f64>]) -> Vec<f64> {
    let m = points.len();
    assert!(m > 0, "min_norm_weights needs at least one point");
    let scale = points.iter().map(|p| p.norm_squared()).fold(0.0f64, f64::max);
    let mut lambda = vec![0.0; m];
    if scale == 0.0 {
        lambda.iter_mut().for_each(|l| *l = 1.0 / m as f64);
        return lambda;
    }
    let tol = 1e-12 * scale;

    let first = (0..m)
        .min_by(|&a, &b| points[a].norm_squared().total_cmp(&points[b].norm_squared()))
        .expect("non-empty");
    let mut corral: Vec<usize> = vec![first];
    let mut weights: Vec<f64> = vec![1.0];
    let mut x = points[first].clone();

    for _ in 0..MAX_MAJOR {
        let (j, dot) = (0..m)
            .map(|j| (j, x.dot(&points[j])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty");
        if x.norm_squared() - dot <= tol || corral.contains(&j) {
            break;
        }
        corral.push(j);
        weights.push(0.0);
        loop {
            let Some(alpha) = affine_min(points, &corral) else {
                break;
            };
            if alpha.iter().all(|&a| a > 1e-14) {
                weights = alpha;
                break;
            }
            // Move towards the affine minimizer until a weight hits zero.
            let theta = weights
                .iter()
                .zip(&alpha)
                .filter(|(_, &a)| a <= 1e-14)
                .map(|(&w, &a)| if w - a > 0.0 { w / (w - a) } else { 0.0 })
                .fold(1.0f64, f64::min);
            for (w, a) in weights.iter_mut().zip(&alpha) {
                *w += theta * (a - *w);
            }
            let keep: Vec<bool> = weights.iter().map(|&w| w > 1e-14).collect();
            corral = corral.iter().zip(&keep).filter(|(_, &k)| k).map(|(&c, _)| c).collect();
            weights = weights.iter().zip(&keep).filter(|(_, &k)| k).map(|(&w, _)| w).collect();
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
        }
        x = combine(points, &corral, &weights);
    }
    for (&c, &w) in corral.iter().zip(&weights) {
        lambda[c] = w;
    }
    lambda
}

fn combine(points: &[DVector<f64>], idx: &[usize], w: &[f64]) -> DVector<f64> {
    let mut x = DVector::zeros(points[0].len());
    for (&i, &wi) in idx.iter().zip(w) {
        x.axpy(wi, &points[i], 1.0);
    }
    x
}

/// Weights summing to 1 of the point of the affine hull of `idx` nearest the origin.
fn affine_min(points: &[DVector<f64>], idx: &[usize]) -> Option<Vec<f64>> {
    let k = idx.len();
    let mut a = DMatrix::zeros(k + 1, k + 1);
    let mut b = DVector::zeros(k + 1);
    for r in 0..k {
        for c in 0..k {
            a[(r, c)] = points[idx[r]].dot(&points[idx[c]]);
        }
        a[(r, k)] = 1.0;
        a[(k, r)] = 1.0;
    }
    b[k] = 1.0;
    let sol = a.svd(true, true).solve(&b, 1e-14).ok()?;
    let w: Vec<f64> = sol.iter().take(k).copied().collect();
    let total: f64 = w.iter().sum();
    (w.iter().all(|v| v.is_finite()) && (total - 1.0).abs() < 1e-6).then_some(w)
}
