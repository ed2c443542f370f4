//! Hamiltonian definitions and finite-state-machine MPO assembly.
//!
//! Every supported Hamiltonian is a sum of two-site terms with distance-
//! dependent couplings plus optional one-site fields. The MPO encodes the
//! sum as a left-to-right transfer automaton:
//!
//! ```text
//!   state 0      : idle (no term started yet)          W[0,0]     = I
//!   state 1+c    : decay channel c is open             W[1+c,1+c] = x_c I
//!   state m-1    : a term has been completed           W[m-1,m-1] = I
//!
//!   W[0, 1+c]  = opener_c      (start a term here)
//!   W[1+c,m-1] = closer_c      (end the term here)
//!   W[0, m-1]  = field         (one-site term)
//! ```
//!
//! A channel that propagates with factor `x_c` contributes
//! `opener ⊗ closer · x_c^{r-1}` at distance `r`, so a power-law coupling
//! enters through its exponential-sum fit, one channel per
//! (operator pair, exponential) — bond dimension `n_H * n_exps + 2`.
//! Nearest-neighbor couplings are the degenerate case `x = 0`.
//!
//! Basis convention (project-wide): local index 1 is the +1 eigenstate of
//! the Z operator, index 0 the -1 eigenstate.

use ndarray::{Array2, Array4};
use serde::{Deserialize, Serialize};

use super::fit::ExpSumFit;
use crate::error::{Error, Result};
use crate::mps::InvCanonicalMps;
use crate::C64;

/// Largest dense dimension `mpo_to_dense` will materialize (the matrix has
/// the square of this many entries).
const DENSE_CAP: usize = 1 << 12;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Pauli X in the project basis.
pub fn pauli_x() -> Array2<C64> {
    ndarray::array![[c(0.0), c(1.0)], [c(1.0), c(0.0)]]
}

/// Pauli Y in the project basis (index 0 = Z eigenvalue -1).
pub fn pauli_y() -> Array2<C64> {
    ndarray::array![
        [c(0.0), C64::new(0.0, 1.0)],
        [C64::new(0.0, -1.0), c(0.0)]
    ]
}

/// Pauli Z in the project basis: diag(-1, +1).
pub fn pauli_z() -> Array2<C64> {
    ndarray::array![[c(-1.0), c(0.0)], [c(0.0), c(1.0)]]
}

/// 2x2 identity.
pub fn pauli_id() -> Array2<C64> {
    Array2::eye(2)
}

/// One MPO site tensor, indexed (left MPO bond, bra physical, ket physical,
/// right MPO bond).
#[derive(Debug, Clone)]
pub struct MpoTensor {
    data: Array4<C64>,
}

impl MpoTensor {
    pub fn new(data: Array4<C64>) -> Result<Self> {
        let (ml, s, t, mr) = data.dim();
        if ml == 0 || s == 0 || t == 0 || mr == 0 {
            return Err(Error::Config("MPO tensor with a zero dimension".into()));
        }
        if s != t {
            return Err(Error::Config(
                "MPO tensor physical dimensions must match".into(),
            ));
        }
        Ok(Self { data })
    }

    pub fn data(&self) -> &Array4<C64> {
        &self.data
    }

    pub fn dims(&self) -> (usize, usize, usize, usize) {
        self.data.dim()
    }

    pub fn phys_dim(&self) -> usize {
        self.data.dim().1
    }
}

/// A matrix product operator: one rank-4 tensor per site, boundary MPO
/// bonds of dimension 1.
#[derive(Debug, Clone)]
pub struct Mpo {
    tensors: Vec<MpoTensor>,
}

impl Mpo {
    pub fn new(tensors: Vec<MpoTensor>) -> Result<Self> {
        if tensors.is_empty() {
            return Err(Error::Config("an MPO needs at least one site".into()));
        }
        if tensors[0].dims().0 != 1 || tensors[tensors.len() - 1].dims().3 != 1 {
            return Err(Error::Config("MPO boundary bonds must have dimension 1".into()));
        }
        for j in 0..tensors.len() - 1 {
            if tensors[j].dims().3 != tensors[j + 1].dims().0 {
                return Err(Error::Config(format!(
                    "MPO bond {j} dimension mismatch: {} vs {}",
                    tensors[j].dims().3,
                    tensors[j + 1].dims().0
                )));
            }
        }
        Ok(Self { tensors })
    }

    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn tensor(&self, j: usize) -> &MpoTensor {
        &self.tensors[j]
    }

    /// Interior MPO bond dimensions, left to right.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.tensors.len() - 1]
            .iter()
            .map(|t| t.dims().3)
            .collect()
    }

    pub fn max_bond_dim(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }
}

/// The supported Hamiltonian families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// `H = -sum_{i<j} |i-j|^{-alpha} Z_i Z_j - B sum_i X_i`
    IsingLR,
    /// `H = (1/2) sum_{i<j} |i-j|^{-alpha} (X_i X_j + Y_i Y_j)
    ///      [+ (delta_B/2) sum_i X_i]`
    XyLR,
    /// `H = (1/4) sum_{i<j} |i-j|^{-2} (X_i X_j + Y_i Y_j + Z_i Z_j)`
    XxxLR,
    /// `H = -sum_i Z_i Z_{i+1} - B sum_i X_i`
    IsingNN,
}

impl ModelKind {
    /// Number of distinct long-range operator pairs (`n_H`).
    pub fn n_operator_pairs(self) -> usize {
        match self {
            ModelKind::IsingLR | ModelKind::IsingNN => 1,
            ModelKind::XyLR => 2,
            ModelKind::XxxLR => 3,
        }
    }

    pub fn is_long_range(self) -> bool {
        !matches!(self, ModelKind::IsingNN)
    }
}

/// Full specification of a benchmark Hamiltonian on a chain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model: ModelKind,
    /// Power-law exponent (ignored for the nearest-neighbor model).
    #[serde(default)]
    pub alpha: f64,
    /// Transverse field strength (Ising models only).
    #[serde(default)]
    pub field_b: f64,
    /// Degeneracy-breaking field for the XY ground-state Hamiltonian; zero
    /// for time evolution.
    #[serde(default)]
    pub delta_b: f64,
    pub n_sites: usize,
    /// Number of exponentials used to compress the power law (long-range
    /// models only).
    #[serde(default)]
    pub n_exps: usize,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(Error::Config("a chain needs at least two sites".into()));
        }
        if self.model.is_long_range() {
            if !(self.alpha > 0.0) || !self.alpha.is_finite() {
                return Err(Error::Config(format!(
                    "long-range model needs a positive finite exponent, got {}",
                    self.alpha
                )));
            }
            if self.n_exps == 0 {
                return Err(Error::Config(
                    "long-range model needs at least one exponential term".into(),
                ));
            }
        }
        if !self.field_b.is_finite() || !self.delta_b.is_finite() {
            return Err(Error::Config("fields must be finite".into()));
        }
        Ok(())
    }

    /// The MPO bond dimension this spec will produce.
    pub fn mpo_bond_dim(&self) -> usize {
        if self.model.is_long_range() {
            self.model.n_operator_pairs() * self.n_exps + 2
        } else {
            3
        }
    }
}

/// One decay channel of the automaton: `coefficient * opener (x) closer`
/// propagated with per-step factor `rate`.
struct Channel {
    opener: Array2<C64>,
    closer: Array2<C64>,
    rate: f64,
}

/// Builds the MPO for `spec`. Long-range models take the exponential-sum
/// fit of `r^{-alpha}`; the nearest-neighbor model takes none.
pub fn build_mpo(spec: &ModelSpec, fit: Option<&ExpSumFit>) -> Result<Mpo> {
    spec.validate()?;
    let mut channels: Vec<Channel> = Vec::new();
    let mut field = Array2::<C64>::zeros((2, 2));

    match spec.model {
        ModelKind::IsingNN => {
            if fit.is_some() {
                return Err(Error::Config(
                    "nearest-neighbor model takes no exponential fit".into(),
                ));
            }
            channels.push(Channel {
                opener: pauli_z().mapv(|z| -z),
                closer: pauli_z(),
                rate: 0.0,
            });
            field = pauli_x().mapv(|z| z * c(-spec.field_b));
        }
        ModelKind::IsingLR => {
            let fit = require_fit(spec, fit)?;
            for (&ck, &xk) in fit.coefficients.iter().zip(&fit.rates) {
                channels.push(Channel {
                    opener: pauli_z().mapv(|z| z * c(ck)),
                    closer: pauli_z().mapv(|z| -z),
                    rate: xk,
                });
            }
            field = pauli_x().mapv(|z| z * c(-spec.field_b));
        }
        ModelKind::XyLR => {
            let fit = require_fit(spec, fit)?;
            for (&ck, &xk) in fit.coefficients.iter().zip(&fit.rates) {
                channels.push(Channel {
                    opener: pauli_x().mapv(|z| z * c(0.5 * ck)),
                    closer: pauli_x(),
                    rate: xk,
                });
                channels.push(Channel {
                    opener: pauli_y().mapv(|z| z * c(0.5 * ck)),
                    closer: pauli_y(),
                    rate: xk,
                });
            }
            field = pauli_x().mapv(|z| z * c(0.5 * spec.delta_b));
        }
        ModelKind::XxxLR => {
            let fit = require_fit(spec, fit)?;
            for (&ck, &xk) in fit.coefficients.iter().zip(&fit.rates) {
                for pauli in [pauli_x(), pauli_y(), pauli_z()] {
                    channels.push(Channel {
                        opener: pauli.mapv(|z| z * c(0.25 * ck)),
                        closer: pauli,
                        rate: xk,
                    });
                }
            }
        }
    }

    let m = channels.len() + 2;
    debug_assert_eq!(m, spec.mpo_bond_dim());
    let d = 2usize;
    let done = m - 1;

    // Full automaton matrix W[a, s, t, b].
    let mut w = Array4::<C64>::zeros((m, d, d, m));
    for s in 0..d {
        w[[0, s, s, 0]] = c(1.0);
        w[[done, s, s, done]] = c(1.0);
    }
    for (k, ch) in channels.iter().enumerate() {
        for s in 0..d {
            for t in 0..d {
                w[[0, s, t, 1 + k]] = ch.opener[[s, t]];
                w[[1 + k, s, t, done]] = ch.closer[[s, t]];
            }
            w[[1 + k, s, s, 1 + k]] = c(ch.rate);
        }
    }
    for s in 0..d {
        for t in 0..d {
            w[[0, s, t, done]] = field[[s, t]];
        }
    }

    let mut tensors = Vec::with_capacity(spec.n_sites);
    for j in 0..spec.n_sites {
        let tensor = if j == 0 {
            // First site: the idle row.
            w.slice(ndarray::s![0..1, .., .., ..]).to_owned()
        } else if j == spec.n_sites - 1 {
            // Last site: the completed column.
            w.slice(ndarray::s![.., .., .., done..done + 1]).to_owned()
        } else {
            w.clone()
        };
        tensors.push(MpoTensor::new(tensor)?);
    }
    Mpo::new(tensors)
}

fn require_fit<'a>(spec: &ModelSpec, fit: Option<&'a ExpSumFit>) -> Result<&'a ExpSumFit> {
    let fit = fit.ok_or_else(|| {
        Error::Config("long-range model needs an exponential-sum fit".into())
    })?;
    if fit.n_exps != spec.n_exps {
        return Err(Error::Config(format!(
            "spec asks for {} exponentials, fit has {}",
            spec.n_exps, fit.n_exps
        )));
    }
    Ok(fit)
}

/// Materializes the full operator matrix (site 0's index slowest). Guarded
/// by a total-dimension cap.
pub fn mpo_to_dense(h: &Mpo) -> Result<Array2<C64>> {
    let total: usize = h
        .tensors
        .iter()
        .try_fold(1usize, |acc, t| acc.checked_mul(t.phys_dim()))
        .ok_or_else(|| Error::Config("dense dimension overflow".into()))?;
    if total > DENSE_CAP {
        return Err(Error::Config(format!(
            "dense operator would be {total}x{total} (cap {DENSE_CAP})"
        )));
    }
    // One partial dense operator per live MPO bond state.
    let mut partials: Vec<Array2<C64>> = vec![Array2::ones((1, 1))];
    for t in &h.tensors {
        let (ml, d, _, mr) = t.dims();
        debug_assert_eq!(ml, partials.len());
        let grown = partials[0].nrows() * d;
        let mut next: Vec<Array2<C64>> = vec![Array2::zeros((grown, grown)); mr];
        for b in 0..mr {
            for (a, p) in partials.iter().enumerate() {
                let block = t.data().slice(ndarray::s![a, .., .., b]);
                if block.iter().all(|z| *z == C64::new(0.0, 0.0)) {
                    continue;
                }
                // next[b] += kron(p, block): earlier sites are slower.
                for (i, j) in index_pairs(p.nrows()) {
                    let v = p[[i, j]];
                    if v == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for s in 0..d {
                        for u in 0..d {
                            next[b][[i * d + s, j * d + u]] += v * block[[s, u]];
                        }
                    }
                }
            }
        }
        partials = next;
    }
    debug_assert_eq!(partials.len(), 1);
    Ok(partials.pop().expect("single terminal MPO state"))
}

/// All (row, col) pairs of a square matrix, in row-major order.
fn index_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (0..n).map(move |j| (i, j)))
}

/// `<psi|H|psi> / <psi|psi>` by one left-to-right sweep.
pub fn expectation(psi: &InvCanonicalMps, h: &Mpo) -> Result<C64> {
    if psi.n_sites() != h.n_sites() {
        return Err(Error::Config("MPS and MPO have different lengths".into()));
    }
    let n = psi.n_sites();
    // e[a, w, b]: bra MPS bond, MPO bond, ket MPS bond.
    let mut e = ndarray::Array3::<C64>::ones((1, 1, 1));
    for j in 0..n {
        let site = psi.site(j);
        let w = h.tensor(j);
        if w.phys_dim() != site.phys_dim() {
            return Err(Error::Config(format!(
                "physical dimension mismatch at site {j}"
            )));
        }
        e = absorb_site(&e, site, w);
        if j + 1 < n {
            let inv = psi.bond(j).inv();
            for ((a, _, b), z) in e.indexed_iter_mut() {
                *z *= inv[a] * inv[b];
            }
        }
    }
    let num = e[[0, 0, 0]];
    let den = psi.overlap(psi)?.re;
    if den < crate::ZERO_TOL {
        return Err(Error::Numerics("expectation on a zero-norm state".into()));
    }
    Ok(num / den)
}

/// One sandwich transfer step: contract site (bra and ket layers) and MPO
/// tensor into the running environment. Readability version used by the
/// expectation sweep; the evolution engines carry their own tuned copy.
fn absorb_site(
    e: &ndarray::Array3<C64>,
    site: &crate::mps::SiteTensor,
    w: &MpoTensor,
) -> ndarray::Array3<C64> {
    use crate::linalg::tensor::{unfuse3, unfuse4};
    let (ea, ew, eb) = e.dim();
    let (_, d, _, wr) = w.dims();
    let (_, _, br) = site.dims();

    // T1[a, w, t, b'] = sum_b e[a, w, b] ket[b, t, b']
    let e2 = e
        .view()
        .into_shape_with_order((ea * ew, eb))
        .expect("env fuse");
    let k = site.fused_right(); // (b, t*b')
    let t1 = e2.dot(&k); // (a*w, t*b')
    // T2[s, w', a, b'] = sum_{w,t} W[w, s, t, w'] T1[a, w, t, b']
    let t1 = unfuse4(t1, (ea, ew, d, br));
    let t1m = crate::linalg::tensor::permute_fuse4(&t1, [1, 2, 0, 3], 2); // (w*t, a*b')
    let wm = crate::linalg::tensor::permute_fuse4(w.data(), [1, 3, 0, 2], 2); // (s*w', w*t)
    let t2 = wm.dot(&t1m); // (s*w', a*b')
    // out[a', w', b'] = sum_{a,s} conj(bra[a, s, a']) T2[s, w', a, b']
    let t2 = unfuse4(t2, (d, wr, ea, br));
    let t2m = crate::linalg::tensor::permute_fuse4(&t2, [2, 0, 1, 3], 2); // (a*s, w'*b')
    let bra = site.fused_left().mapv(|z| z.conj()); // (a*s, a')
    let out = bra.t().dot(&t2m); // (a', w'*b')
    unfuse3(out, (site.chi_right(), wr, br))
}
