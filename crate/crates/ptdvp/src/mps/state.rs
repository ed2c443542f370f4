//! Core state types: site tensors, bond weights, and the gauge container.

use ndarray::{Array1, Array2, Array3};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::tensor::{fuse3, unfuse3};
use crate::{C64, ZERO_TOL};

/// One MPS site tensor with index order (left bond, physical, right bond):
///
/// ```text
///        s
///        |
///   l ---#--- r        data[l, s, r]
/// ```
#[derive(Debug, Clone)]
pub struct SiteTensor {
    pub(crate) data: Array3<C64>,
}

impl SiteTensor {
    pub fn new(data: Array3<C64>) -> Result<Self> {
        let (l, s, r) = data.dim();
        if l == 0 || s == 0 || r == 0 {
            return Err(Error::Config("site tensor with a zero dimension".into()));
        }
        Ok(Self { data })
    }

    pub fn data(&self) -> &Array3<C64> {
        &self.data
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.data.dim()
    }

    pub fn chi_left(&self) -> usize {
        self.data.dim().0
    }

    pub fn phys_dim(&self) -> usize {
        self.data.dim().1
    }

    pub fn chi_right(&self) -> usize {
        self.data.dim().2
    }

    /// Frobenius norm. In a healthy gauge this equals the state norm at
    /// every site.
    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Scales the left bond index: `out[l, s, r] = w[l] * data[l, s, r]`.
    pub(crate) fn scale_left(&self, w: &Array1<f64>) -> Array3<C64> {
        debug_assert_eq!(w.len(), self.chi_left());
        let mut out = self.data.clone();
        for (l, mut plane) in out.outer_iter_mut().enumerate() {
            plane.mapv_inplace(|z| z * w[l]);
        }
        out
    }

    /// Scales the right bond index: `out[l, s, r] = data[l, s, r] * w[r]`.
    pub(crate) fn scale_right(&self, w: &Array1<f64>) -> Array3<C64> {
        debug_assert_eq!(w.len(), self.chi_right());
        let mut out = self.data.clone();
        for mut col in out.lanes_mut(ndarray::Axis(2)) {
            for (r, z) in col.iter_mut().enumerate() {
                *z *= w[r];
            }
        }
        out
    }

    /// Flattens to `(chi_left * d, chi_right)`.
    pub(crate) fn fused_left(&self) -> Array2<C64> {
        fuse3(&self.data, 2)
    }

    /// Flattens to `(chi_left, d * chi_right)`.
    pub(crate) fn fused_right(&self) -> Array2<C64> {
        fuse3(&self.data, 1)
    }

    /// Applies a one-site operator: `out[l, s, r] = sum_t op[s, t] data[l, t, r]`.
    pub(crate) fn apply_op(&self, op: &Array2<C64>) -> Result<Self> {
        let (l, d, r) = self.dims();
        if op.dim() != (d, d) {
            return Err(Error::Config(format!(
                "operator is {:?}, site has physical dimension {d}",
                op.dim()
            )));
        }
        // Permute physical index first, multiply, permute back.
        let m = crate::linalg::tensor::permute_fuse3(&self.data, [1, 0, 2], 1); // (d, l*r)
        let out = op.dot(&m); // (d, l*r)
        let t = unfuse3(out, (d, l, r));
        let back = t.view().permuted_axes([1, 0, 2]).as_standard_layout().into_owned();
        SiteTensor::new(back)
    }
}

/// Schmidt weights on one bond, with their inverses.
///
/// Weights are strictly positive by construction: the truncated SVD floors
/// everything below `ZERO_TOL * max`, so the inverse never overflows.
#[derive(Debug, Clone)]
pub struct BondWeights {
    lambda: Array1<f64>,
    inv: Array1<f64>,
}

impl BondWeights {
    pub fn new(lambda: Array1<f64>) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::Config("empty bond weight vector".into()));
        }
        let max = lambda.iter().cloned().fold(0.0_f64, f64::max);
        if !(max > 0.0) || !max.is_finite() {
            return Err(Error::Numerics("bond weights must be positive".into()));
        }
        for &v in &lambda {
            if !(v > 0.0) || !v.is_finite() || v < ZERO_TOL * max {
                return Err(Error::Numerics(format!(
                    "bond weight {v} below the invertibility floor (max {max})"
                )));
            }
        }
        let inv = lambda.mapv(|v| 1.0 / v);
        Ok(Self { lambda, inv })
    }

    /// The trivial weight on a boundary bond of dimension one.
    pub fn unit() -> Self {
        Self {
            lambda: Array1::ones(1),
            inv: Array1::ones(1),
        }
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    pub fn lambda(&self) -> &Array1<f64> {
        &self.lambda
    }

    pub fn inv(&self) -> &Array1<f64> {
        &self.inv
    }
}

/// MPS in the inverse-weight canonical gauge: `n` site tensors and `n - 1`
/// interior bond weight vectors.
#[derive(Debug, Clone)]
pub struct InvCanonicalMps {
    pub(crate) sites: Vec<SiteTensor>,
    pub(crate) bonds: Vec<BondWeights>,
}

impl InvCanonicalMps {
    pub fn new(sites: Vec<SiteTensor>, bonds: Vec<BondWeights>) -> Result<Self> {
        if sites.len() < 2 {
            return Err(Error::Config("an MPS needs at least two sites".into()));
        }
        if bonds.len() + 1 != sites.len() {
            return Err(Error::Config(format!(
                "{} sites need {} bonds, got {}",
                sites.len(),
                sites.len() - 1,
                bonds.len()
            )));
        }
        if sites[0].chi_left() != 1 || sites[sites.len() - 1].chi_right() != 1 {
            return Err(Error::Config("chain boundary bonds must have dimension 1".into()));
        }
        for j in 0..bonds.len() {
            if sites[j].chi_right() != bonds[j].dim() || sites[j + 1].chi_left() != bonds[j].dim()
            {
                return Err(Error::Config(format!(
                    "bond {j} dimension mismatch: {} | {} | {}",
                    sites[j].chi_right(),
                    bonds[j].dim(),
                    sites[j + 1].chi_left()
                )));
            }
        }
        Ok(Self { sites, bonds })
    }

    /// Product state from per-site local vectors (each normalized here).
    pub fn from_product_state(locals: &[Array1<C64>]) -> Result<Self> {
        if locals.len() < 2 {
            return Err(Error::Config("need at least two local states".into()));
        }
        let mut sites = Vec::with_capacity(locals.len());
        for v in locals {
            let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if nrm < ZERO_TOL {
                return Err(Error::Config("zero local state in product state".into()));
            }
            let d = v.len();
            let mut t = Array3::<C64>::zeros((1, d, 1));
            for s in 0..d {
                t[[0, s, 0]] = v[s] / nrm;
            }
            sites.push(SiteTensor::new(t)?);
        }
        let bonds = vec![BondWeights::unit(); locals.len() - 1];
        Self::new(sites, bonds)
    }

    /// Random normalized state with bond dimensions ramped up to `chi`.
    /// The gauge is installed by a lossless orthonormalization pass.
    pub fn random<R: Rng + ?Sized>(n: usize, d: usize, chi: usize, rng: &mut R) -> Result<Self> {
        if n < 2 || d < 2 || chi == 0 {
            return Err(Error::Config("random state needs n >= 2, d >= 2, chi >= 1".into()));
        }
        let bond_dim = |j: usize| -> usize {
            // Bond j sits between sites j and j+1.
            let left = (d as f64).powi((j + 1).min(24) as i32);
            let right = (d as f64).powi((n - 1 - j).min(24) as i32);
            (chi as f64).min(left).min(right) as usize
        };
        let mut sites = Vec::with_capacity(n);
        let mut bonds = Vec::with_capacity(n - 1);
        for j in 0..n {
            let cl = if j == 0 { 1 } else { bond_dim(j - 1) };
            let cr = if j == n - 1 { 1 } else { bond_dim(j) };
            let t = Array3::from_shape_fn((cl, d, cr), |_| {
                C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            });
            sites.push(SiteTensor::new(t)?);
            if j < n - 1 {
                bonds.push(BondWeights::new(Array1::ones(cr))?);
            }
        }
        let mut mps = Self::new(sites, bonds)?;
        mps.orthonormalize(&crate::linalg::TruncationPolicy::lossless())?;
        Ok(mps)
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn site(&self, j: usize) -> &SiteTensor {
        &self.sites[j]
    }

    pub fn bond(&self, j: usize) -> &BondWeights {
        &self.bonds[j]
    }

    pub fn phys_dims(&self) -> Vec<usize> {
        self.sites.iter().map(|s| s.phys_dim()).collect()
    }

    /// Interior bond dimensions, left to right.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.bonds.iter().map(|b| b.dim()).collect()
    }

    pub fn max_bond_dim(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Replaces the pair `(j, j+1)` and the bond between them; shapes are
    /// re-validated against the neighbors.
    pub fn replace_pair(
        &mut self,
        j: usize,
        left: SiteTensor,
        bond: BondWeights,
        right: SiteTensor,
    ) -> Result<()> {
        if j + 1 >= self.sites.len() {
            return Err(Error::Config(format!("pair index {j} out of range")));
        }
        if left.chi_left() != self.sites[j].chi_left()
            || right.chi_right() != self.sites[j + 1].chi_right()
        {
            return Err(Error::Config("pair replacement changes outer bonds".into()));
        }
        if left.chi_right() != bond.dim() || right.chi_left() != bond.dim() {
            return Err(Error::Config("pair replacement has inconsistent middle bond".into()));
        }
        self.sites[j] = left;
        self.bonds[j] = bond;
        self.sites[j + 1] = right;
        Ok(())
    }

    pub(crate) fn set_site(&mut self, j: usize, t: SiteTensor) {
        debug_assert_eq!(self.sites[j].dims(), t.dims());
        self.sites[j] = t;
    }

    /// Applies a one-site operator in place. The gauge survives exactly for
    /// unitary operators; anything else calls for re-orthonormalization.
    pub fn apply_local(&mut self, op: &Array2<C64>, j: usize) -> Result<()> {
        if j >= self.sites.len() {
            return Err(Error::Config(format!("site index {j} out of range")));
        }
        self.sites[j] = self.sites[j].apply_op(op)?;
        Ok(())
    }

    /// Dense state vector with the first site's index slowest (so for two
    /// qubits, amplitude of `|11>` lands at the last position). Guarded by
    /// a total-dimension cap.
    pub fn to_dense(&self) -> Result<Array1<C64>> {
        let total: usize = self
            .phys_dims()
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Config("dense dimension overflow".into()))?;
        if total > (1 << 16) {
            return Err(Error::Config(format!(
                "dense vector would have {total} entries (cap 65536)"
            )));
        }
        let mut m = Array2::<C64>::ones((1, 1));
        for (j, site) in self.sites.iter().enumerate() {
            let (_, d, cr) = site.dims();
            let t = site.fused_right(); // (chi_l, d * chi_r)
            let mut next = m.dot(&t); // (acc, d * chi_r)
            let rows = next.nrows() * d;
            let mut reshaped = next
                .as_standard_layout()
                .into_owned()
                .into_shape_with_order((rows, cr))
                .expect("dense accumulation keeps element count");
            if j + 1 < self.sites.len() {
                let inv = self.bonds[j].inv();
                for (r, mut col) in reshaped.columns_mut().into_iter().enumerate() {
                    col.mapv_inplace(|z| z * inv[r]);
                }
                next = reshaped;
            } else {
                next = reshaped;
            }
            m = next;
        }
        Ok(m.into_shape_with_order(total).expect("final column"))
    }

    /// Exact state norm by a full transfer-matrix contraction (does not
    /// rely on the gauge being healthy).
    pub fn norm(&self) -> f64 {
        let v = observe_norm_sq(self);
        v.max(0.0).sqrt()
    }

    /// `|1 - norm|`: the scalar watched by the stability monitor.
    pub fn norm_error(&self) -> f64 {
        (1.0 - self.norm()).abs()
    }

    /// State norm read off the gauge at site `j` (exact when the gauge is
    /// healthy, cheap always).
    pub fn local_norm(&self, j: usize) -> f64 {
        self.sites[j].frob_norm()
    }

    /// Worst deviation from the gauge conditions: left-isometry defect of
    /// every prefix of `Psi_j * inv(lambda_j)`, right-isometry defect of
    /// every suffix of `inv(lambda_{j-1}) * Psi_j`.
    pub fn gauge_deviation(&self) -> f64 {
        let n = self.sites.len();
        let mut worst = 0.0_f64;

        let mut e = Array2::<C64>::eye(1);
        for j in 0..n - 1 {
            let a = SiteTensor {
                data: self.sites[j].scale_right(self.bonds[j].inv()),
            };
            e = transfer_identity(&e, &a, &a);
            worst = worst.max(identity_defect(&e));
        }

        let mut f = Array2::<C64>::eye(1);
        for j in (1..n).rev() {
            let b = SiteTensor {
                data: self.sites[j].scale_left(self.bonds[j - 1].inv()),
            };
            f = transfer_identity_rev(&f, &b, &b);
            worst = worst.max(identity_defect(&f));
        }
        worst
    }
}

/// `e' = sum_s A_bra[l', s, r']^* e[l', l] A_ket[l, s, r]`, i.e. one
/// left-to-right transfer step of `<bra|ket>`.
pub(crate) fn transfer_identity(
    e: &Array2<C64>,
    bra: &SiteTensor,
    ket: &SiteTensor,
) -> Array2<C64> {
    // tmp[(l', reshaped), ...]: (bra_l', ket side) — contract ket first.
    let t = ket.fused_right(); // (l, d*r)
    let tmp = e.dot(&t); // (l_bra, d*r_ket)
    let (lb, d, rk) = (e.nrows(), ket.phys_dim(), ket.chi_right());
    let tmp = tmp
        .into_shape_with_order((lb * d, rk))
        .expect("transfer reshape");
    let bl = bra.fused_left(); // (l_bra*d, r_bra)
    let blc = bl.mapv(|z| z.conj());
    blc.t().dot(&tmp) // (r_bra, r_ket)
}

/// Right-to-left mirror of [`transfer_identity`]:
/// `f' = sum_s B_bra[l', s, r']^* f[r', r] B_ket[l, s, r]`.
pub(crate) fn transfer_identity_rev(
    f: &Array2<C64>,
    bra: &SiteTensor,
    ket: &SiteTensor,
) -> Array2<C64> {
    let t = ket.fused_left(); // (l*d, r)
    let tmp = t.dot(&f.t()); // (l_ket*d, r_bra)  [f indexed (r_bra, r_ket)]
    let (lk, d, _) = ket.dims();
    let tmp = tmp
        .into_shape_with_order((lk, d * f.nrows()))
        .expect("transfer reshape");
    let br = bra.fused_right().mapv(|z| z.conj()); // (l_bra, d*r_bra)
    tmp.dot(&br.t()).t().to_owned() // -> (l_bra, l_ket)
}

fn identity_defect(e: &Array2<C64>) -> f64 {
    let mut worst = 0.0_f64;
    for ((i, j), z) in e.indexed_iter() {
        let want = if i == j { 1.0 } else { 0.0 };
        worst = worst.max((z - C64::new(want, 0.0)).norm());
    }
    worst
}

fn observe_norm_sq(mps: &InvCanonicalMps) -> f64 {
    super::observe::mixed_zipper(mps, mps, &[])
        .map(|z| z.re)
        .unwrap_or(f64::NAN)
}

#[cfg(test)]
pub(crate) mod test_support {
    //! Dense mini-oracles used by the MPS unit tests.

    use super::*;

    /// Kronecker product of dense vectors, first factor slowest.
    pub fn kron_vecs(locals: &[Array1<C64>]) -> Array1<C64> {
        let mut out = Array1::<C64>::ones(1);
        for v in locals {
            let mut next = Array1::<C64>::zeros(out.len() * v.len());
            for (i, a) in out.iter().enumerate() {
                for (j, b) in v.iter().enumerate() {
                    next[i * v.len() + j] = a * b;
                }
            }
            out = next;
        }
        out
    }

    /// Applies a one-site operator to a dense state (site 0 slowest).
    pub fn dense_apply_local(
        state: &Array1<C64>,
        op: &Array2<C64>,
        site: usize,
        n: usize,
        d: usize,
    ) -> Array1<C64> {
        let dim = state.len();
        let right: usize = d.pow((n - 1 - site) as u32);
        let mut out = Array1::<C64>::zeros(dim);
        for idx in 0..dim {
            let s = (idx / right) % d;
            let base = idx - s * right;
            for sp in 0..d {
                let coeff = op[[s, sp]];
                if coeff != C64::new(0.0, 0.0) {
                    out[idx] += coeff * state[base + sp * right];
                }
            }
        }
        out
    }

    pub fn dense_inner(a: &Array1<C64>, b: &Array1<C64>) -> C64 {
        a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
    }
}
