//! Thin SVD by one-sided Jacobi rotations.
//!
//! Columns of a working copy are rotated pairwise until mutually
//! orthogonal; their norms are then the singular values and the
//! accumulated rotations the right singular vectors. The sweep order is
//! fixed, so results are deterministic, and the method delivers high
//! relative accuracy even for small singular values.

use crate::error::{Error, Result};
use ndarray::Array2;

pub struct ThinSvd {
    /// Left singular vectors, one column per nonzero-ordered mode
    /// (`rows x min(rows, cols)`).
    pub u: Array2<f64>,
    /// Singular values, descending.
    pub sigma: Vec<f64>,
    /// Right singular vectors (`cols x min(rows, cols)`).
    pub v: Array2<f64>,
}

const ORTHO_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 60;

pub fn thin_svd(a: &Array2<f64>) -> Result<ThinSvd> {
    let (rows, cols) = a.dim();
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("svd input".into()));
    }
    let mut b = a.clone();
    let mut j = Array2::<f64>::eye(cols);

    for _sweep in 0..MAX_SWEEPS {
        let mut norms_sq: Vec<f64> = (0..cols)
            .map(|c| b.column(c).iter().map(|v| v * v).sum())
            .collect();
        let mut rotated = false;
        for p in 0..cols.saturating_sub(1) {
            for q in p + 1..cols {
                let alpha = norms_sq[p];
                let beta = norms_sq[q];
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma: f64 = b.column(p).dot(&b.column(q));
                if gamma.abs() <= ORTHO_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut b, p, q, c, s);
                rotate_columns(&mut j, p, q, c, s);
                norms_sq[p] = c * c * alpha - 2.0 * c * s * gamma + s * s * beta;
                norms_sq[q] = s * s * alpha + 2.0 * c * s * gamma + c * c * beta;
                rotated = true;
            }
        }
        if !rotated {
            break;
        }
    }

    let rank_cap = rows.min(cols);
    let mut order: Vec<usize> = (0..cols).collect();
    let norms: Vec<f64> = (0..cols)
        .map(|c| b.column(c).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).expect("finite norms"));

    let mut u = Array2::zeros((rows, rank_cap));
    let mut v = Array2::zeros((cols, rank_cap));
    let mut sigma = Vec::with_capacity(rank_cap);
    for (slot, &col) in order.iter().take(rank_cap).enumerate() {
        let norm = norms[col];
        sigma.push(norm);
        if norm > 0.0 {
            u.column_mut(slot).assign(&(&b.column(col) / norm));
        }
        v.column_mut(slot).assign(&j.column(col));
    }
    fix_signs(&mut u, &mut v);
    Ok(ThinSvd { u, sigma, v })
}

/// In-place plane rotation of columns `p`, `q`.
fn rotate_columns(m: &mut Array2<f64>, p: usize, q: usize, c: f64, s: f64) {
    for i in 0..m.nrows() {
        let vp = m[[i, p]];
        let vq = m[[i, q]];
        m[[i, p]] = c * vp - s * vq;
        m[[i, q]] = s * vp + c * vq;
    }
}

/// Deterministic sign convention: in each left vector the entry of largest
/// magnitude (first such index) is made positive; the right vector flips
/// with it so the product is unchanged.
fn fix_signs(u: &mut Array2<f64>, v: &mut Array2<f64>) {
    for c in 0..u.ncols() {
        let col = u.column(c);
        let mut pivot = 0;
        let mut best = 0.0f64;
        for (i, x) in col.iter().enumerate() {
            if x.abs() > best {
                best = x.abs();
                pivot = i;
            }
        }
        if u[[pivot, c]] < 0.0 {
            u.column_mut(c).mapv_inplace(|x| -x);
            v.column_mut(c).mapv_inplace(|x| -x);
        }
    }
}

/// Largest absolute entry of `a - u diag(sigma) v^T`; test helper for
/// the integration suites as well.
pub fn reconstruction_gap(a: &Array2<f64>, svd: &ThinSvd) -> f64 {
    let mut worst = 0.0f64;
    let (rows, cols) = a.dim();
    for i in 0..rows {
        for jx in 0..cols {
            let mut acc = 0.0;
            for (r, s) in svd.sigma.iter().enumerate() {
                acc += s * svd.u[[i, r]] * svd.v[[jx, r]];
            }
            worst = worst.max((a[[i, jx]] - acc).abs());
        }
    }
    worst
}

/// Max deviation of `m^T m` from the identity.
pub fn orthonormality_gap(m: &Array2<f64>) -> f64 {
    let gram = m.t().dot(m);
    let mut worst = 0.0f64;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[[i, j]] - want).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array1;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_is_its_own_basis() {
        let a = Array2::<f64>::eye(3);
        let svd = thin_svd(&a).unwrap();
        assert_eq!(svd.sigma, vec![1.0, 1.0, 1.0]);
        assert!(orthonormality_gap(&svd.u) < 1e-14);
        assert!(reconstruction_gap(&a, &svd) < 1e-14);
    }

    #[test]
    fn rank_one_matrix_recovers_outer_product() {
        let u = Array1::from(vec![3.0, 0.0, 4.0]);
        let w = Array1::from(vec![1.0, 2.0]);
        let a = Array2::from_shape_fn((3, 2), |(i, j)| u[i] * w[j]);
        let svd = thin_svd(&a).unwrap();
        let want = 5.0 * (5.0f64).sqrt();
        assert!((svd.sigma[0] - want).abs() < 1e-12 * want);
        assert!(svd.sigma[1].abs() < 1e-12 * want);
        assert!(reconstruction_gap(&a, &svd) < 1e-12 * want);
    }

    #[test]
    fn random_matrices_reconstruct_and_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for &(rows, cols) in &[(8usize, 5usize), (20, 20), (50, 20)] {
            let a = Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0));
            let svd = thin_svd(&a).unwrap();
            assert!(orthonormality_gap(&svd.u) < 1e-12);
            assert!(orthonormality_gap(&svd.v) < 1e-12);
            assert!(reconstruction_gap(&a, &svd) < 1e-11);
            for w in svd.sigma.windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
    }

    #[test]
    fn deterministic_across_calls() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = Array2::from_shape_fn((30, 10), |_| rng.random_range(-1.0..1.0));
        let s1 = thin_svd(&a).unwrap();
        let s2 = thin_svd(&a).unwrap();
        assert_eq!(s1.u, s2.u);
        assert_eq!(s1.sigma, s2.sigma);
        assert_eq!(s1.v, s2.v);
    }

    #[test]
    fn sign_convention_pins_largest_entry_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = Array2::from_shape_fn((12, 6), |_| rng.random_range(-1.0..1.0));
        let svd = thin_svd(&a).unwrap();
        for c in 0..svd.u.ncols() {
            let col = svd.u.column(c);
            let mut pivot = 0;
            let mut best = 0.0f64;
            for (i, x) in col.iter().enumerate() {
                if x.abs() > best {
                    best = x.abs();
                    pivot = i;
                }
            }
            assert!(col[pivot] > 0.0, "column {c} pivot entry is negative");
        }
    }
}
