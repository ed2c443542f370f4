//! Restarted Lanczos search for the lowest eigenpair of a Hermitian
//! operator given through its action.
//!
//! Each cycle builds a fully reorthogonalized basis of bounded size, takes
//! the lowest Ritz pair of the tridiagonal projection, and restarts from the
//! Ritz vector. Convergence is judged on the true residual norm
//! `|H x - lambda x|` (one extra operator application per cycle), relative
//! to `max(1, |lambda|)`.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use serde::{Deserialize, Serialize};

use super::krylov::{inner, nrm2};
use crate::error::{Error, Result};
use crate::{C64, ZERO_TOL};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LanczosConfig {
    /// Basis size per restart cycle.
    #[serde(default = "default_basis_size")]
    pub basis_size: usize,
    /// Relative residual tolerance.
    #[serde(default = "default_residual_tol")]
    pub residual_tol: f64,
    /// Cap on restart cycles.
    #[serde(default = "default_max_restarts")]
    pub max_restarts: usize,
}

fn default_basis_size() -> usize {
    24
}

fn default_residual_tol() -> f64 {
    1e-8
}

fn default_max_restarts() -> usize {
    200
}

impl Default for LanczosConfig {
    fn default() -> Self {
        Self {
            basis_size: default_basis_size(),
            residual_tol: default_residual_tol(),
            max_restarts: default_max_restarts(),
        }
    }
}

impl LanczosConfig {
    pub fn validate(&self) -> Result<()> {
        if self.basis_size < 2 {
            return Err(Error::Config("lanczos basis_size must be >= 2".into()));
        }
        if !(self.residual_tol > 0.0) {
            return Err(Error::Config("lanczos residual_tol must be positive".into()));
        }
        if self.max_restarts == 0 {
            return Err(Error::Config("lanczos max_restarts must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GroundStateResult {
    pub eigenvalue: f64,
    /// Unit-norm eigenvector estimate.
    pub vector: Array1<C64>,
    /// True residual norm `|H x - lambda x|` of the returned pair.
    pub residual: f64,
    pub restarts: usize,
    pub converged: bool,
}

/// Lowest eigenpair of the Hermitian operator `apply`, started from `v0`.
pub fn lanczos_ground_state<F>(
    mut apply: F,
    v0: &Array1<C64>,
    cfg: &LanczosConfig,
) -> Result<GroundStateResult>
where
    F: FnMut(&Array1<C64>) -> Array1<C64>,
{
    cfg.validate()?;
    let n = v0.len();
    let norm0 = nrm2(v0);
    if norm0 < ZERO_TOL {
        return Err(Error::Numerics("lanczos started from a zero vector".into()));
    }
    let mut x = v0 / C64::new(norm0, 0.0);
    let cap = cfg.basis_size.min(n);

    let mut last = (0.0_f64, f64::INFINITY);
    for cycle in 0..cfg.max_restarts {
        // One fully reorthogonalized Lanczos cycle from x.
        let mut basis: Vec<Array1<C64>> = vec![x.clone()];
        let mut alphas: Vec<f64> = Vec::with_capacity(cap);
        let mut betas: Vec<f64> = Vec::with_capacity(cap);
        for k in 0..cap {
            let mut w = apply(&basis[k]);
            let alpha = inner(&basis[k], &w).re;
            alphas.push(alpha);
            w.scaled_add(C64::new(-alpha, 0.0), &basis[k]);
            if k > 0 {
                w.scaled_add(C64::new(-betas[k - 1], 0.0), &basis[k - 1]);
            }
            for _ in 0..2 {
                for q in &basis {
                    let c = inner(q, &w);
                    w.scaled_add(-c, q);
                }
            }
            let beta = nrm2(&w);
            let scale = alphas
                .iter()
                .map(|a| a.abs())
                .chain(betas.iter().copied())
                .fold(1.0_f64, f64::max);
            if beta < ZERO_TOL * scale || k + 1 == cap {
                break;
            }
            betas.push(beta);
            basis.push(w / C64::new(beta, 0.0));
        }

        // Lowest Ritz pair of the tridiagonal projection.
        let k = alphas.len();
        let mut t = Array2::<f64>::zeros((k, k));
        for i in 0..k {
            t[[i, i]] = alphas[i];
            if i + 1 < k {
                t[[i, i + 1]] = betas[i];
                t[[i + 1, i]] = betas[i];
            }
        }
        let (evals, evecs) = t.eigh(UPLO::Lower)?;
        let lambda = evals[0];
        let mut next = Array1::<C64>::zeros(n);
        for (i, q) in basis.iter().enumerate() {
            next.scaled_add(C64::new(evecs[[i, 0]], 0.0), q);
        }
        let nn = nrm2(&next);
        if nn < ZERO_TOL {
            return Err(Error::Numerics("lanczos produced a zero Ritz vector".into()));
        }
        x = next / C64::new(nn, 0.0);

        // True residual of the Ritz pair.
        let hx = apply(&x);
        let mut r = hx;
        r.scaled_add(C64::new(-lambda, 0.0), &x);
        let residual = nrm2(&r);
        last = (lambda, residual);
        if residual <= cfg.residual_tol * lambda.abs().max(1.0) {
            return Ok(GroundStateResult {
                eigenvalue: lambda,
                vector: x,
                residual,
                restarts: cycle + 1,
                converged: true,
            });
        }
    }

    Ok(GroundStateResult {
        eigenvalue: last.0,
        vector: x,
        residual: last.1,
        restarts: cfg.max_restarts,
        converged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> Array2<C64> {
        let a = Array::from_shape_fn((n, n), |_| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let at = a.t().mapv(|z| z.conj());
        (&a + &at) / C64::new(2.0, 0.0)
    }

    #[test]
    fn finds_lowest_eigenpair_of_dense_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let h = random_hermitian(&mut rng, 60);
        let v0 = Array::from_shape_fn(60, |_| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let cfg = LanczosConfig {
            basis_size: 20,
            residual_tol: 1e-10,
            max_restarts: 100,
        };
        let got = lanczos_ground_state(|x| h.dot(x), &v0, &cfg).unwrap();
        assert!(got.converged, "residual {}", got.residual);

        let (evals, evecs) = crate::linalg::eigh_hermitian(&h).unwrap();
        assert!(
            (got.eigenvalue - evals[0]).abs() < 1e-9,
            "value {} vs {}",
            got.eigenvalue,
            evals[0]
        );
        let overlap = inner(&evecs.column(0).to_owned(), &got.vector).norm();
        assert!(overlap > 1.0 - 1e-8, "overlap {overlap}");
    }

    #[test]
    fn residual_bound_holds_on_return() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let h = random_hermitian(&mut rng, 45) * C64::new(3.0, 0.0);
        let v0 = Array::from_shape_fn(45, |_| C64::new(rng.random::<f64>(), 0.0));
        let cfg = LanczosConfig::default();
        let got = lanczos_ground_state(|x| h.dot(x), &v0, &cfg).unwrap();
        let hx = h.dot(&got.vector);
        let mut r = hx;
        r.scaled_add(C64::new(-got.eigenvalue, 0.0), &got.vector);
        assert!((nrm2(&r) - got.residual).abs() < 1e-10);
        if got.converged {
            assert!(got.residual <= cfg.residual_tol * got.eigenvalue.abs().max(1.0));
        }
    }

    #[test]
    fn small_space_converges_by_breakdown() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let h = random_hermitian(&mut rng, 4);
        let v0 = Array::from_shape_fn(4, |_| C64::new(1.0, rng.random::<f64>()));
        let got = lanczos_ground_state(|x| h.dot(x), &v0, &LanczosConfig::default()).unwrap();
        assert!(got.converged);
        let (evals, _) = h.eigh(UPLO::Lower).unwrap();
        assert!((got.eigenvalue - evals[0]).abs() < 1e-10);
    }
}
