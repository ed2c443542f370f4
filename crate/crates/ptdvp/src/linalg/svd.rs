//! Truncated singular value decomposition with a three-way truncation
//! policy.
//!
//! Given the full spectrum `s[0] >= s[1] >= ...`, the kept rank is decided
//! in three stages:
//!
//! 1. *Relative cutoff*: values below `max(epsilon, ZERO_TOL) * s[0]` are
//!    always dropped (this also floors away numerically-zero values so that
//!    kept weights can be inverted safely downstream).
//! 2. *Weight criterion*: among the survivors, the largest tail whose
//!    summed squares stay within `w_max` is dropped as well. `w_max = 0`
//!    disables this stage.
//! 3. *Hard cap*: at most `chi_max` values are kept.
//!
//! The reported discarded weight is the summed squares of *every* value not
//! kept, i.e. the exact Frobenius-norm loss of the rank-`kept`
//! approximation.

use ndarray::{s, Array1, Array2};
use ndarray_linalg::{JobSvd, SVDDCInto, SVDInto};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{C64, ZERO_TOL};

/// Bond-truncation policy shared by every SVD in the crate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruncationPolicy {
    /// Hard cap on the kept rank.
    #[serde(default = "default_chi_max")]
    pub chi_max: usize,
    /// Largest allowed discarded weight (summed squared singular values);
    /// `0` keeps everything the other two criteria keep.
    #[serde(default)]
    pub w_max: f64,
    /// Relative cutoff: values below `epsilon * s_max` are dropped.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_chi_max() -> usize {
    128
}

fn default_epsilon() -> f64 {
    1e-12
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            chi_max: default_chi_max(),
            w_max: 0.0,
            epsilon: default_epsilon(),
        }
    }
}

impl TruncationPolicy {
    /// Policy that keeps everything representable (used by gauge repairs
    /// that must not truncate).
    pub fn lossless() -> Self {
        Self {
            chi_max: usize::MAX,
            w_max: 0.0,
            epsilon: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.chi_max == 0 {
            return Err(Error::Config("chi_max must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!(
                "epsilon must lie in [0, 1), got {}",
                self.epsilon
            )));
        }
        if self.w_max < 0.0 || !self.w_max.is_finite() {
            return Err(Error::Config(format!(
                "w_max must be finite and non-negative, got {}",
                self.w_max
            )));
        }
        Ok(())
    }
}

/// Result of a truncated SVD: `a ~= u * diag(s) * vt` with `u` column-
/// orthonormal and `vt` row-orthonormal.
#[derive(Debug, Clone)]
pub struct SvdOutcome {
    pub u: Array2<C64>,
    /// Kept singular values, descending, all strictly positive.
    pub s: Array1<f64>,
    pub vt: Array2<C64>,
    /// Exact squared Frobenius norm of the dropped part.
    pub discarded_weight: f64,
}

impl SvdOutcome {
    pub fn rank(&self) -> usize {
        self.s.len()
    }
}

/// Full SVD, returning the complete (economy) factorization. Tries the
/// divide-and-conquer driver first and falls back to the standard one,
/// which is slower but converges on a few matrices the former rejects.
fn full_svd(a: &Array2<C64>) -> Result<(Array2<C64>, Array1<f64>, Array2<C64>)> {
    match a.clone().svddc_into(JobSvd::Some) {
        Ok((Some(u), s, Some(vt))) => Ok((u, s, vt)),
        Ok(_) => Err(Error::Numerics("SVD driver returned no factors".into())),
        Err(_) => match a.clone().svd_into(true, true) {
            Ok((Some(u), s, Some(vt))) => Ok((u, s, vt)),
            Ok(_) => Err(Error::Numerics("SVD driver returned no factors".into())),
            Err(e) => Err(Error::Backend(e)),
        },
    }
}

/// Decides the kept rank for a descending spectrum under `policy`.
/// Returns `(kept, discarded_weight)`.
fn decide_rank(s: &Array1<f64>, policy: &TruncationPolicy) -> Result<(usize, f64)> {
    let smax = s[0];
    if !(smax > 0.0) || !smax.is_finite() {
        return Err(Error::Numerics(
            "cannot truncate: largest singular value is zero or non-finite".into(),
        ));
    }
    let floor = policy.epsilon.max(ZERO_TOL) * smax;
    // Stage 1: relative cutoff. At least s[0] survives because floor < smax.
    let survivors = s.iter().take_while(|&&v| v >= floor).count().max(1);

    // Stage 2: discard the largest tail of survivors with weight <= w_max.
    let mut kept = survivors;
    if policy.w_max > 0.0 {
        let mut tail = 0.0;
        while kept > 1 {
            let next = tail + s[kept - 1] * s[kept - 1];
            if next > policy.w_max {
                break;
            }
            tail = next;
            kept -= 1;
        }
    }

    // Stage 3: hard cap.
    kept = kept.min(policy.chi_max).max(1);

    let discarded: f64 = s.iter().skip(kept).map(|v| v * v).sum();
    Ok((kept, discarded))
}

/// Truncated SVD of `a` under `policy`. Errors on a numerically-zero input
/// (there is no meaningful rank-1 approximation to return).
pub fn truncated_svd(a: &Array2<C64>, policy: &TruncationPolicy) -> Result<SvdOutcome> {
    let (u, s, vt) = full_svd(a)?;
    let (kept, discarded_weight) = decide_rank(&s, policy)?;
    Ok(SvdOutcome {
        u: u.slice(s![.., ..kept]).to_owned(),
        s: s.slice(s![..kept]).to_owned(),
        vt: vt.slice(s![..kept, ..]).to_owned(),
        discarded_weight,
    })
}
