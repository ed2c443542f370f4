//! Dense linear-algebra kernels shared by every layer above.

mod krylov;
mod lanczos;
mod svd;
pub(crate) mod tensor;

pub use krylov::{krylov_expm_apply, ExpmResult, KrylovConfig};
pub use lanczos::{lanczos_ground_state, GroundStateResult, LanczosConfig};
pub use svd::{truncated_svd, SvdOutcome, TruncationPolicy};

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};

use crate::error::Result;
use crate::C64;

/// Eigendecomposition of a complex Hermitian matrix with eigenvectors as
/// plain columns: `h * v.column(j) == vals[j] * v.column(j)`.
///
/// The backend hands row-major complex input to LAPACK column-major, so the
/// raw driver effectively diagonalizes the conjugate matrix and its columns
/// come back conjugated; this wrapper undoes that. (Real symmetric input
/// does not need the fix-up, which is why only the complex path is wrapped.)
pub fn eigh_hermitian(h: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    let (vals, vecs) = h.eigh(UPLO::Lower)?;
    Ok((vals, vecs.mapv(|z| z.conj())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eigh_hermitian_columns_are_eigenvectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = Array::from_shape_fn((12, 12), |_| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let h = (&a + &a.t().mapv(|z| z.conj())) / C64::new(2.0, 0.0);
        let (vals, vecs) = eigh_hermitian(&h).unwrap();
        // Ascending eigenvalues.
        for w in vals.windows(2) {
            assert!(w[0] <= w[1]);
        }
        for j in 0..12 {
            let v = vecs.column(j).to_owned();
            let hv = h.dot(&v);
            let err: f64 = (&hv - &v.mapv(|z| z * vals[j]))
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(err < 1e-12, "column {j} residual {err}");
        }
    }
}
