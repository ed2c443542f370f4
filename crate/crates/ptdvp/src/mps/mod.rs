//! Matrix product states in the inverse-weight canonical gauge.
//!
//! Every site tensor `Psi_j` (shape `chi_left x d x chi_right`) is an
//! orthogonality center of the represented state, and every bond carries
//! the Schmidt weight vector `lambda` together with its guarded inverse.
//! Contracting `Psi_j * inv(lambda_j)` from the left yields left
//! isometries; `inv(lambda_{j-1}) * Psi_j` yields right isometries. The
//! physical state is the chain contraction
//! `Psi_0 * inv(lambda_0) * Psi_1 * ... * inv(lambda_{n-2}) * Psi_{n-1}`.

mod io;
mod observe;
mod ortho;
mod state;

pub use io::{load_mps, save_mps};
pub use state::{BondWeights, InvCanonicalMps, SiteTensor};
