//! Krylov-subspace propagation `exp(tau*H) |v>` for Hermitian `H`.
//!
//! Builds a Lanczos basis with full reorthogonalization (two classical
//! Gram-Schmidt passes per vector), exponentiates the small real symmetric
//! tridiagonal projection by dense eigendecomposition, and declares
//! convergence when successive iterates differ by less than the requested
//! tolerance in norm. `tau` is an arbitrary complex number; the callers use
//! `-i*dt` flavors for forward evolution, `+i*dt` for backward, and real
//! negative values never arise but would work.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{C64, ZERO_TOL};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KrylovConfig {
    /// Largest basis size before giving up on the tolerance.
    #[serde(default = "default_max_vectors")]
    pub max_vectors: usize,
    /// Relative successive-iterate tolerance.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_max_vectors() -> usize {
    8
}

fn default_tolerance() -> f64 {
    1e-6
}

impl Default for KrylovConfig {
    fn default() -> Self {
        Self {
            max_vectors: default_max_vectors(),
            tolerance: default_tolerance(),
        }
    }
}

impl KrylovConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_vectors == 0 {
            return Err(Error::Config("krylov max_vectors must be >= 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("krylov tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ExpmResult {
    pub vector: Array1<C64>,
    /// Basis size actually used.
    pub basis_size: usize,
    /// Whether the successive-iterate criterion (or an exact-subspace
    /// breakdown) was met before the basis cap.
    pub converged: bool,
    /// Last successive-iterate difference, relative to the result norm.
    pub last_delta: f64,
}

pub(crate) fn inner(a: &Array1<C64>, b: &Array1<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn nrm2(a: &Array1<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// First column of `exp(tau * T)` for the real symmetric tridiagonal matrix
/// with diagonal `alphas` and off-diagonal `betas`.
pub(crate) fn exp_tridiag_e1(alphas: &[f64], betas: &[f64], tau: C64) -> Result<Vec<C64>> {
    let k = alphas.len();
    debug_assert_eq!(betas.len() + 1, k);
    let mut t = Array2::<f64>::zeros((k, k));
    for i in 0..k {
        t[[i, i]] = alphas[i];
        if i + 1 < k {
            t[[i, i + 1]] = betas[i];
            t[[i + 1, i]] = betas[i];
        }
    }
    let (evals, evecs) = t.eigh(UPLO::Lower)?;
    let mut y = vec![C64::new(0.0, 0.0); k];
    for j in 0..k {
        let phase = (tau * evals[j]).exp() * evecs[[0, j]];
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += evecs[[i, j]] * phase;
        }
    }
    Ok(y)
}

/// Approximates `exp(tau*H) v0` where `H` is Hermitian and available only
/// through its action `apply`.
pub fn krylov_expm_apply<F>(
    mut apply: F,
    v0: &Array1<C64>,
    tau: C64,
    cfg: &KrylovConfig,
) -> Result<ExpmResult>
where
    F: FnMut(&Array1<C64>) -> Array1<C64>,
{
    cfg.validate()?;
    let n = v0.len();
    let beta0 = nrm2(v0);
    if beta0 < ZERO_TOL {
        return Err(Error::Numerics(
            "cannot propagate a numerically-zero vector".into(),
        ));
    }
    let cap = cfg.max_vectors.min(n);

    let mut basis: Vec<Array1<C64>> = vec![v0 / C64::new(beta0, 0.0)];
    let mut alphas: Vec<f64> = Vec::with_capacity(cap);
    let mut betas: Vec<f64> = Vec::with_capacity(cap);
    let mut y_prev: Option<Vec<C64>> = None;

    for k in 0..cap {
        let mut w = apply(&basis[k]);
        if w.len() != n {
            return Err(Error::Numerics(
                "operator changed the vector dimension".into(),
            ));
        }
        let alpha = inner(&basis[k], &w).re;
        alphas.push(alpha);
        w.scaled_add(C64::new(-alpha, 0.0), &basis[k]);
        if k > 0 {
            w.scaled_add(C64::new(-betas[k - 1], 0.0), &basis[k - 1]);
        }
        // Full reorthogonalization, two passes.
        for _ in 0..2 {
            for q in &basis {
                let c = inner(q, &w);
                w.scaled_add(-c, q);
            }
        }
        let beta = nrm2(&w);

        let y = exp_tridiag_e1(&alphas, &betas, tau)?;
        let ynorm = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let delta = match &y_prev {
            Some(prev) => {
                let mut d = 0.0;
                for i in 0..y.len() {
                    let p = if i < prev.len() {
                        prev[i]
                    } else {
                        C64::new(0.0, 0.0)
                    };
                    d += (y[i] - p).norm_sqr();
                }
                d.sqrt() / ynorm.max(f64::MIN_POSITIVE)
            }
            None => f64::INFINITY,
        };

        let scale = alphas
            .iter()
            .map(|a| a.abs())
            .chain(betas.iter().copied())
            .fold(1.0_f64, f64::max);
        let breakdown = beta < ZERO_TOL * scale;
        let by_tolerance = delta <= cfg.tolerance;
        if by_tolerance || breakdown || k + 1 == cap {
            let mut out = Array1::<C64>::zeros(n);
            for (yi, q) in y.iter().zip(basis.iter()) {
                out.scaled_add(yi * beta0, q);
            }
            return Ok(ExpmResult {
                vector: out,
                basis_size: k + 1,
                converged: by_tolerance || breakdown,
                last_delta: if delta.is_finite() { delta } else { 1.0 },
            });
        }

        y_prev = Some(y);
        betas.push(beta);
        basis.push(w / C64::new(beta, 0.0));
    }
    unreachable!("loop always returns at k + 1 == cap");
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

    fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Array1<C64> {
        Array::from_shape_fn(n, |_| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    /// Dense oracle: exact `exp(tau*H) v` by full eigendecomposition.
    fn dense_expm_apply(h: &Array2<C64>, v: &Array1<C64>, tau: C64) -> Array1<C64> {
        let (evals, evecs) = crate::linalg::eigh_hermitian(h).unwrap();
        let vdag = evecs.t().mapv(|z| z.conj());
        let mut coeffs = vdag.dot(v);
        for (c, lam) in coeffs.iter_mut().zip(evals.iter()) {
            *c *= (tau * *lam).exp();
        }
        evecs.dot(&coeffs)
    }

    #[test]
    fn matches_dense_exponential_for_imaginary_tau() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let h = random_hermitian(&mut rng, 40);
        let v = random_vector(&mut rng, 40);
        let tau = C64::new(0.0, -0.35);
        let cfg = KrylovConfig {
            max_vectors: 40,
            tolerance: 1e-12,
        };
        let got = krylov_expm_apply(|x| h.dot(x), &v, tau, &cfg).unwrap();
        assert!(got.converged);
        let want = dense_expm_apply(&h, &v, tau);
        let err = nrm2(&(&got.vector - &want)) / nrm2(&want);
        assert!(err < 1e-10, "relative error {err}");
    }

    #[test]
    fn matches_dense_exponential_for_real_tau() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let h = random_hermitian(&mut rng, 30);
        let v = random_vector(&mut rng, 30);
        let tau = C64::new(-0.4, 0.0);
        let cfg = KrylovConfig {
            max_vectors: 30,
            tolerance: 1e-12,
        };
        let got = krylov_expm_apply(|x| h.dot(x), &v, tau, &cfg).unwrap();
        let want = dense_expm_apply(&h, &v, tau);
        let err = nrm2(&(&got.vector - &want)) / nrm2(&want);
        assert!(err < 1e-10, "relative error {err}");
    }

    #[test]
    fn imaginary_tau_preserves_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let h = random_hermitian(&mut rng, 64);
        let v = random_vector(&mut rng, 64);
        let cfg = KrylovConfig {
            max_vectors: 24,
            tolerance: 1e-10,
        };
        let got = krylov_expm_apply(|x| h.dot(x), &v, C64::new(0.0, -0.2), &cfg).unwrap();
        let drift = (nrm2(&got.vector) - nrm2(&v)).abs() / nrm2(&v);
        assert!(drift < 1e-8, "norm drift {drift}");
    }

    #[test]
    fn breakdown_on_small_space_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let h = random_hermitian(&mut rng, 3);
        let v = random_vector(&mut rng, 3);
        let tau = C64::new(0.0, -1.7);
        let got = krylov_expm_apply(|x| h.dot(x), &v, tau, &KrylovConfig::default()).unwrap();
        assert!(got.converged);
        assert!(got.basis_size <= 3);
        let want = dense_expm_apply(&h, &v, tau);
        let err = nrm2(&(&got.vector - &want));
        assert!(err < 1e-11, "error {err}");
    }

    #[test]
    fn reports_nonconvergence_when_capped() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let h = random_hermitian(&mut rng, 60) * C64::new(40.0, 0.0);
        let v = random_vector(&mut rng, 60);
        let cfg = KrylovConfig {
            max_vectors: 3,
            tolerance: 1e-12,
        };
        let got = krylov_expm_apply(|x| h.dot(x), &v, C64::new(0.0, -1.0), &cfg).unwrap();
        assert!(!got.converged);
        assert_eq!(got.basis_size, 3);
    }

    #[test]
    fn zero_vector_is_rejected() {
        let v = Array1::<C64>::zeros(5);
        let r = krylov_expm_apply(|x| x.clone(), &v, C64::new(0.0, -1.0), &KrylovConfig::default());
        assert!(r.is_err());
    }
}
