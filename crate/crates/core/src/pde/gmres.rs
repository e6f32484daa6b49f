//! Restarted GMRES with modified Gram-Schmidt and Givens rotations.
//! Matrix-free: the operator is any `Fn(&Array1<f64>) -> Array1<f64>`.

use crate::error::{Error, Result};
use ndarray::Array1;

#[derive(Debug, Clone, Copy)]
pub struct GmresStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Solve `A x = b` to a relative residual of `rel_tol`, restarting every
/// `restart` inner iterations and giving up after `max_outer` cycles.
pub fn gmres<F>(
    apply: &F,
    b: &Array1<f64>,
    restart: usize,
    rel_tol: f64,
    max_outer: usize,
) -> Result<(Array1<f64>, GmresStats)>
where
    F: Fn(&Array1<f64>) -> Array1<f64>,
{
    let n = b.len();
    let bnorm = b.dot(b).sqrt();
    let mut x = Array1::zeros(n);
    if bnorm == 0.0 {
        return Ok((x, GmresStats { iterations: 0, residual: 0.0 }));
    }
    let target = rel_tol * bnorm;
    let mut total = 0usize;
    let mut last_residual = bnorm;

    for _cycle in 0..max_outer {
        let r = b - &apply(&x);
        let beta = r.dot(&r).sqrt();
        if beta <= target {
            return Ok((x, GmresStats { iterations: total, residual: beta }));
        }

        let mut basis: Vec<Array1<f64>> = vec![&r / beta];
        let mut h = vec![vec![0.0f64; restart]; restart + 1];
        let mut cs = vec![0.0f64; restart];
        let mut sn = vec![0.0f64; restart];
        let mut g = vec![0.0f64; restart + 1];
        g[0] = beta;
        let mut cols = 0usize;

        for j in 0..restart {
            let mut w = apply(&basis[j]);
            for (i, v) in basis.iter().enumerate() {
                let hij = v.dot(&w);
                h[i][j] = hij;
                w.scaled_add(-hij, v);
            }
            let hnext = w.dot(&w).sqrt();
            h[j + 1][j] = hnext;

            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let denom = (h[j][j] * h[j][j] + hnext * hnext).sqrt();
            if denom == 0.0 {
                cs[j] = 1.0;
                sn[j] = 0.0;
            } else {
                cs[j] = h[j][j] / denom;
                sn[j] = h[j + 1][j] / denom;
            }
            h[j][j] = cs[j] * h[j][j] + sn[j] * h[j + 1][j];
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j] * g[j];

            total += 1;
            cols = j + 1;
            let happy = hnext <= f64::EPSILON * bnorm;
            if g[j + 1].abs() <= target || happy {
                break;
            }
            basis.push(&w / hnext);
        }

        let mut y = vec![0.0f64; cols];
        for i in (0..cols).rev() {
            let mut s = g[i];
            for (l, yl) in y.iter().enumerate().take(cols).skip(i + 1) {
                s -= h[i][l] * yl;
            }
            if h[i][i] == 0.0 {
                return Err(Error::SolverFailure {
                    context: "gmres breakdown".into(),
                    residual: g[cols].abs(),
                    iterations: total,
                });
            }
            y[i] = s / h[i][i];
        }
        for (i, yi) in y.iter().enumerate() {
            x.scaled_add(*yi, &basis[i]);
        }

        let rr = b - &apply(&x);
        last_residual = rr.dot(&rr).sqrt();
        if last_residual <= target {
            return Ok((x, GmresStats { iterations: total, residual: last_residual }));
        }
    }

    Err(Error::SolverFailure {
        context: "gmres stalled".into(),
        residual: last_residual,
        iterations: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn dense_apply(a: &Array2<f64>) -> impl Fn(&Array1<f64>) -> Array1<f64> + '_ {
        move |v| a.dot(v)
    }

    #[test]
    fn solves_small_spd_system() {
        let a = array![[4.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 5.0]];
        let b = array![1.0, -2.0, 3.0];
        let (x, stats) = gmres(&dense_apply(&a), &b, 3, 1e-12, 5).unwrap();
        let r = &b - &a.dot(&x);
        assert!(r.dot(&r).sqrt() <= 1e-10);
        assert!(stats.iterations <= 3);
    }

    #[test]
    fn restart_cycles_still_converge() {
        // 8x8 SPD tridiagonal, restart length 2 forces many cycles.
        let n = 8;
        let a = Array2::from_shape_fn((n, n), |(i, j)| {
            if i == j {
                3.0
            } else if i.abs_diff(j) == 1 {
                -1.0
            } else {
                0.0
            }
        });
        let b = Array1::from_shape_fn(n, |i| (i as f64 + 1.0).sin());
        let (x, stats) = gmres(&dense_apply(&a), &b, 2, 1e-10, 200).unwrap();
        let r = &b - &a.dot(&x);
        assert!(r.dot(&r).sqrt() <= 1e-10 * b.dot(&b).sqrt());
        assert!(stats.iterations > 2, "restart path was not exercised");
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let a = array![[2.0, 0.0], [0.0, 2.0]];
        let b = array![0.0, 0.0];
        let (x, stats) = gmres(&dense_apply(&a), &b, 2, 1e-10, 3).unwrap();
        assert_eq!(x, array![0.0, 0.0]);
        assert_eq!(stats.iterations, 0);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let n = 30;
        // Moderately conditioned SPD matrix, one cycle of two is hopeless.
        let a = Array2::from_shape_fn((n, n), |(i, j)| {
            if i == j {
                2.0 + i as f64
            } else if i.abs_diff(j) == 1 {
                -1.0
            } else {
                0.0
            }
        });
        let b = Array1::ones(n);
        let err = gmres(&dense_apply(&a), &b, 2, 1e-14, 1).unwrap_err();
        match err {
            Error::SolverFailure { iterations, .. } => assert_eq!(iterations, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
