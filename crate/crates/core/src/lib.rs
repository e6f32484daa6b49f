//! Core library: fractional-depth network surrogates for an elliptic
//! diffusion-reaction model, snapshot compression, and the adaptive
//! Metropolis machinery used for the Bayesian parameter study.
//!
//! The crate is organised around the offline/online split of the method:
//!
//! * [`pde`] solves the full nonlinear model and generates snapshots,
//! * [`pod`] compresses snapshots into an orthonormal basis,
//! * [`fracnet`] defines the network and its hand-derived gradient,
//! * [`optim`] trains it with a dense BFGS and strong Wolfe searches,
//! * [`mcmc`] runs the adaptive random-walk sampler on either forward map,
//! * [`diagnostics`] summarises chains (autocorrelation, IACT, intervals).
//!
//! Everything is deterministic given the seeds carried in configs; file
//! formats round trip bit exactly. No BLAS or LAPACK is linked; the dense
//! kernels (thin SVD, Cholesky, BFGS updates) are implemented here.

pub mod diagnostics;
pub mod error;
pub mod fracnet;
pub mod mcmc;
pub mod optim;
pub mod pde;
pub mod pod;

pub use error::{Error, Result};
pub use fracnet::{Batch, Checkpoint, NetConfig, Theta};
pub use mcmc::{AmConfig, ChainResult, PosteriorSpec, PriorBox};
pub use pde::{GridConfig, PdeProblem};
pub use pod::{PodBasis, SnapshotSet};
