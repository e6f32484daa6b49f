//! Proper orthogonal decomposition of solution snapshots.

mod io;
mod jacobi;

pub use io::{read_basis, read_snapshots, write_basis, write_snapshots};
pub use jacobi::{orthonormality_gap, reconstruction_gap, thin_svd, ThinSvd};

use crate::error::{Error, Result};
use ndarray::{Array1, Array2, ArrayView1};

/// Solver outputs for a parameter design, plus the metadata needed to
/// reproduce them.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    /// One parameter point per row (`count x param_dim`).
    pub parameters: Array2<f64>,
    /// One solution per column (`n_dof x count`).
    pub snapshots: Array2<f64>,
    /// Interior grid points per direction of the generating solver.
    pub grid_interior: usize,
    /// Parameter box, one (lo, hi) pair per dimension.
    pub bounds: Vec<(f64, f64)>,
    /// Design seed.
    pub seed: u64,
}

impl SnapshotSet {
    pub fn count(&self) -> usize {
        self.snapshots.ncols()
    }

    pub fn n_dof(&self) -> usize {
        self.snapshots.nrows()
    }

    pub fn check(&self) -> Result<()> {
        if self.count() == 0 {
            return Err(Error::InvalidArgument("snapshot set is empty".into()));
        }
        if self.parameters.nrows() != self.count() {
            return Err(Error::DimensionMismatch(format!(
                "{} parameter rows for {} snapshots",
                self.parameters.nrows(),
                self.count()
            )));
        }
        if self.parameters.ncols() != self.bounds.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} parameter columns but {} bounds",
                self.parameters.ncols(),
                self.bounds.len()
            )));
        }
        if self.grid_interior * self.grid_interior != self.n_dof() {
            return Err(Error::DimensionMismatch(format!(
                "{} dof is not the square of {} interior points",
                self.n_dof(),
                self.grid_interior
            )));
        }
        Ok(())
    }
}

/// Truncated POD basis with the full singular spectrum of the snapshot
/// matrix it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct PodBasis {
    /// Orthonormal columns (`n_dof x modes`).
    pub basis: Array2<f64>,
    /// All `min(n_dof, count)` singular values, descending.
    pub singular_values: Vec<f64>,
    /// Grid metadata carried over from the snapshot set.
    pub grid_interior: usize,
}

impl PodBasis {
    pub fn modes(&self) -> usize {
        self.basis.ncols()
    }

    pub fn n_dof(&self) -> usize {
        self.basis.nrows()
    }
}

/// First `k` left singular vectors of the snapshot matrix.
///
/// No mean-centering is applied; the raw matrix is decomposed as is.
pub fn compute_pod(set: &SnapshotSet, k: usize) -> Result<PodBasis> {
    set.check()?;
    pod_of_matrix(&set.snapshots, k, set.grid_interior)
}

/// POD of a raw matrix; exposed for tests on synthetic data.
///
/// Modes deep in the numerical-noise tail are allowed (their directions
/// carry no information, but one-sided Jacobi keeps them orthonormal, so
/// projections stay well defined); only an exactly zero singular value,
/// where no direction exists at all, is rejected.
pub fn pod_of_matrix(snapshots: &Array2<f64>, k: usize, grid_interior: usize) -> Result<PodBasis> {
    let max_rank = snapshots.nrows().min(snapshots.ncols());
    if k == 0 || k > max_rank {
        return Err(Error::InvalidArgument(format!(
            "mode count {k} outside 1..={max_rank}"
        )));
    }
    let svd = thin_svd(snapshots)?;
    if svd.sigma[k - 1] == 0.0 {
        return Err(Error::RankDeficient(format!(
            "singular value at mode {k} is exactly zero (leading value {})",
            svd.sigma[0]
        )));
    }
    let basis = svd.u.slice(ndarray::s![.., ..k]).to_owned();
    Ok(PodBasis {
        basis,
        singular_values: svd.sigma,
        grid_interior,
    })
}

/// Reduced coordinates `V^T u`.
pub fn project(basis: &PodBasis, u: &ArrayView1<f64>) -> Result<Array1<f64>> {
    if u.len() != basis.n_dof() {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} against a basis over {} dof",
            u.len(),
            basis.n_dof()
        )));
    }
    Ok(basis.basis.t().dot(u))
}

/// Lift reduced coordinates back to the full grid, `V c`.
pub fn reconstruct(basis: &PodBasis, c: &ArrayView1<f64>) -> Result<Array1<f64>> {
    if c.len() != basis.modes() {
        return Err(Error::DimensionMismatch(format!(
            "coefficient vector of length {} against {} modes",
            c.len(),
            basis.modes()
        )));
    }
    Ok(basis.basis.dot(c))
}

/// Sum over columns of the squared projection residual
/// `|u_j - V V^T u_j|^2`; equals the tail sum of squared singular values.
pub fn projection_error_sq(basis: &PodBasis, snapshots: &Array2<f64>) -> Result<f64> {
    let mut total = 0.0;
    for col in snapshots.columns() {
        let coeff = project(basis, &col)?;
        let back = reconstruct(basis, &coeff.view())?;
        total += col
            .iter()
            .zip(back.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
    }
    Ok(total)
}
