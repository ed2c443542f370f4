//! Serial and partitioned two-site TDVP evolution for 1D spin chains with
//! long-range couplings.
//!
//! The crate is organized bottom-up:
//!
//! - [`linalg`]: truncated SVD with a three-way truncation policy, Krylov
//!   propagation of `exp(tau*H)|v>`, and a restarted Lanczos extremal
//!   eigensolver. Everything downstream funnels its dense linear algebra
//!   through this module.
//! - [`mps`]: matrix product states in the inverse-weight canonical gauge
//!   (every site tensor is an orthogonality center; bonds carry the Schmidt
//!   weights and their guarded inverses), plus observables and a binary
//!   checkpoint container.
//! - [`mpo`]: sums of exponentials fitted to power-law couplings (matrix
//!   pencil seed + Levenberg-Marquardt refinement) and the finite-state
//!   automaton that compiles a spin model into a compact MPO.
//! - [`tdvp`]: environment tensors, effective one- and two-site operators,
//!   the serial symmetric sweep, and a two-site DMRG ground-state search.
//! - [`parallel`]: chain partitioning and the message-passing worker engine
//!   that runs one partition per OS thread with deterministic, ordered
//!   boundary handshakes.
//! - [`oracle`]: dense reference implementations (exact Hamiltonians, exact
//!   propagation by eigendecomposition) and the analytic infinite-chain
//!   spin correlator evaluated by 2D quadrature.
//! - [`harness`]: JSON run configuration, the evolve/compare/groundstate
//!   drivers, and CSV/JSON writers used by the CLI.

pub mod error;
pub mod harness;
pub mod linalg;
pub mod mpo;
pub mod mps;
pub mod oracle;
pub mod parallel;
pub mod tdvp;

pub use error::{Error, Result};

/// Absolute floor used throughout for "numerically zero" relative cutoffs:
/// singular values below `ZERO_TOL * sigma_max` are never kept, and bond
/// weights this small are never inverted.
pub const ZERO_TOL: f64 = 1e-14;

/// Complex scalar used by every tensor in the crate.
pub type C64 = num_complex::Complex64;

/// Pins the linked BLAS to one thread per call site.
///
/// Worker-level scaling in the partitioned engine is only meaningful (and
/// deterministic) when each worker's GEMMs stay on the calling thread, so the
/// engines and the benches call this once up front.
pub fn pin_blas_single_threaded() {
    extern "C" {
        fn openblas_set_num_threads(n: i32);
    }
    unsafe { openblas_set_num_threads(1) };
}
