//! Observables: overlaps, local and two-point expectation values.
//!
//! Everything except [`InvCanonicalMps::expect_local`] is computed by an
//! exact full-chain transfer contraction ("zipper") that never assumes the
//! gauge is healthy; `expect_local` deliberately exploits the gauge, which
//! is what makes it an O(chi^2) probe.

use ndarray::{Array1, Array2};

use super::state::{InvCanonicalMps, SiteTensor};
use crate::error::{Error, Result};
use crate::{C64, ZERO_TOL};

/// `<bra| ops |ket>` with one-site operators inserted at the given sites
/// (multiple operators on one site compose left-to-right as listed). The
/// contraction absorbs each chain's own inverse bond weights, so it is the
/// raw physical inner product, with no normalization.
pub(crate) fn mixed_zipper(
    bra: &InvCanonicalMps,
    ket: &InvCanonicalMps,
    ops: &[(usize, Array2<C64>)],
) -> Result<C64> {
    let n = bra.n_sites();
    if ket.n_sites() != n {
        return Err(Error::Config("zipper over chains of different length".into()));
    }
    let mut e = Array2::<C64>::ones((1, 1)); // e[l_bra, l_ket]
    for j in 0..n {
        if bra.site(j).phys_dim() != ket.site(j).phys_dim() {
            return Err(Error::Config(format!(
                "physical dimension mismatch at site {j}"
            )));
        }
        // Compose the operators sitting on this site.
        let mut ket_site = ket.site(j).clone();
        for (_, op) in ops.iter().filter(|(s, _)| *s == j) {
            ket_site = ket_site.apply_op(op)?;
        }
        e = transfer(&e, bra.site(j), &ket_site);
        if j + 1 < n {
            let ib = bra.bond(j).inv();
            let ik = ket.bond(j).inv();
            for ((rb, rk), z) in e.indexed_iter_mut() {
                *z *= ib[rb] * ik[rk];
            }
        }
    }
    debug_assert_eq!(e.dim(), (1, 1));
    Ok(e[[0, 0]])
}

/// One left-to-right transfer step: contract the bra/ket site pair into the
/// running edge matrix.
fn transfer(e: &Array2<C64>, bra: &SiteTensor, ket: &SiteTensor) -> Array2<C64> {
    super::state::transfer_identity(e, bra, ket)
}

impl InvCanonicalMps {
    /// `<self|other>`, both states taken as they are (no normalization).
    pub fn overlap(&self, other: &InvCanonicalMps) -> Result<C64> {
        mixed_zipper(self, other, &[])
    }

    /// `1 - |<self|other>| / (|self| |other|)`, clamped into `[0, 1]`.
    pub fn infidelity(&self, other: &InvCanonicalMps) -> Result<f64> {
        let na = self.norm();
        let nb = other.norm();
        if na < ZERO_TOL || nb < ZERO_TOL {
            return Err(Error::Numerics("infidelity of a zero-norm state".into()));
        }
        let ov = self.overlap(other)?.norm();
        Ok((1.0 - ov / (na * nb)).clamp(0.0, 1.0))
    }

    /// `<O_j>` read through the gauge at site `j`: numerator and
    /// denominator both come from the single site tensor, so the cost is
    /// independent of the chain length.
    pub fn expect_local(&self, op: &Array2<C64>, j: usize) -> Result<C64> {
        if j >= self.n_sites() {
            return Err(Error::Config(format!("site index {j} out of range")));
        }
        let site = self.site(j);
        let d = site.phys_dim();
        if op.dim() != (d, d) {
            return Err(Error::Config(format!(
                "operator is {:?}, site has physical dimension {d}",
                op.dim()
            )));
        }
        // G[s, s'] = sum_{l, r} conj(Psi[l, s, r]) Psi[l, s', r]
        let m = crate::linalg::tensor::permute_fuse3(site.data(), [1, 0, 2], 1); // (d, l*r)
        let g = m.mapv(|z| z.conj()).dot(&m.t()); // (d, d)
        let mut num = C64::new(0.0, 0.0);
        let mut den = 0.0;
        for s in 0..d {
            den += g[[s, s]].re;
            for sp in 0..d {
                num += op[[s, sp]] * g[[s, sp]];
            }
        }
        if den < ZERO_TOL {
            return Err(Error::Numerics("expectation on a zero-norm site".into()));
        }
        Ok(num / den)
    }

    /// `<O_a O_b>` (normalized) by an exact full-chain contraction. The two
    /// sites may coincide, in which case the operators are composed.
    pub fn expect_two_point(
        &self,
        op_a: &Array2<C64>,
        a: usize,
        op_b: &Array2<C64>,
        b: usize,
    ) -> Result<C64> {
        if a >= self.n_sites() || b >= self.n_sites() {
            return Err(Error::Config("two-point site index out of range".into()));
        }
        let num = mixed_zipper(self, self, &[(b, op_b.clone()), (a, op_a.clone())])?;
        let den = mixed_zipper(self, self, &[])?.re;
        if den < ZERO_TOL {
            return Err(Error::Numerics("two-point on a zero-norm state".into()));
        }
        Ok(num / den)
    }

    /// Raw matrix element `<bra| O_j |self>` (no normalization).
    pub fn sandwich_local(
        &self,
        bra: &InvCanonicalMps,
        op: &Array2<C64>,
        j: usize,
    ) -> Result<C64> {
        if j >= self.n_sites() {
            return Err(Error::Config(format!("site index {j} out of range")));
        }
        mixed_zipper(bra, self, &[(j, op.clone())])
    }
}

/// Convenience: expectation profile of one operator over every site.
pub(crate) fn local_profile(mps: &InvCanonicalMps, op: &Array2<C64>) -> Result<Array1<C64>> {
    let mut out = Array1::<C64>::zeros(mps.n_sites());
    for j in 0..mps.n_sites() {
        out[j] = mps.expect_local(op, j)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::state::test_support::*;
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pauli_z() -> Array2<C64> {
        array![
            [C64::new(-1.0, 0.0), C64::new(0.0, 0.0)],
            [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]
        ]
    }

    fn pauli_x() -> Array2<C64> {
        array![
            [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
        ]
    }

    fn random_mps(seed: u64, n: usize, chi: usize) -> InvCanonicalMps {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        InvCanonicalMps::random(n, 2, chi, &mut rng).unwrap()
    }

    #[test]
    fn overlap_matches_dense_inner_product() {
        let a = random_mps(51, 6, 5);
        let b = random_mps(52, 6, 4);
        let got = a.overlap(&b).unwrap();
        let want = dense_inner(&a.to_dense().unwrap(), &b.to_dense().unwrap());
        assert!((got - want).norm() < 1e-10, "got {got}, want {want}");
    }

    #[test]
    fn self_overlap_is_norm_squared() {
        let a = random_mps(53, 5, 6);
        let got = a.overlap(&a).unwrap();
        assert!((got.re - 1.0).abs() < 1e-10 && got.im.abs() < 1e-12);
        assert!((a.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn infidelity_zero_against_itself_and_symmetric() {
        let a = random_mps(54, 5, 4);
        let b = random_mps(55, 5, 4);
        assert!(a.infidelity(&a).unwrap() < 1e-12);
        let ab = a.infidelity(&b).unwrap();
        let ba = b.infidelity(&a).unwrap();
        assert!((ab - ba).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn expect_local_matches_dense() {
        let a = random_mps(56, 6, 5);
        let dense = a.to_dense().unwrap();
        let z = pauli_z();
        for j in 0..6 {
            let got = a.expect_local(&z, j).unwrap();
            let oz = dense_apply_local(&dense, &z, j, 6, 2);
            let want = dense_inner(&dense, &oz) / dense_inner(&dense, &dense);
            assert!((got - want).norm() < 1e-10, "site {j}: {got} vs {want}");
        }
    }

    #[test]
    fn expect_two_point_matches_dense() {
        let a = random_mps(57, 6, 5);
        let dense = a.to_dense().unwrap();
        let (z, x) = (pauli_z(), pauli_x());
        for &(i, j) in &[(0usize, 3usize), (2, 5), (1, 1), (4, 2)] {
            let got = a.expect_two_point(&z, i, &x, j).unwrap();
            let xd = dense_apply_local(&dense, &x, j, 6, 2);
            let zxd = dense_apply_local(&xd, &z, i, 6, 2);
            let want = dense_inner(&dense, &zxd) / dense_inner(&dense, &dense);
            assert!((got - want).norm() < 1e-10, "pair ({i},{j}): {got} vs {want}");
        }
    }

    #[test]
    fn sandwich_local_matches_dense() {
        let a = random_mps(58, 5, 4);
        let b = random_mps(59, 5, 4);
        let x = pauli_x();
        let got = a.sandwich_local(&b, &x, 2).unwrap();
        let xa = dense_apply_local(&a.to_dense().unwrap(), &x, 2, 5, 2);
        let want = dense_inner(&b.to_dense().unwrap(), &xa);
        assert!((got - want).norm() < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn local_profile_covers_all_sites() {
        let mps = {
            let up = array![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
            let dn = array![C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
            InvCanonicalMps::from_product_state(&[up.clone(), dn, up]).unwrap()
        };
        let prof = local_profile(&mps, &pauli_z()).unwrap();
        // Basis index 0 is the -1 eigenstate of the diagonal operator.
        assert!((prof[0].re + 1.0).abs() < 1e-13);
        assert!((prof[1].re - 1.0).abs() < 1e-13);
        assert!((prof[2].re + 1.0).abs() < 1e-13);
    }
}
