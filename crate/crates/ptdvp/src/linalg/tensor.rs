//! Reshape/permute helpers for expressing tensor contractions as GEMMs.
//!
//! All contractions in the crate follow the same pattern: permute the
//! summed indices of each operand to be adjacent, flatten to a matrix, and
//! multiply. The helpers here own the permute-copy so call sites stay
//! readable; the copies are O(elements) and negligible next to the GEMMs
//! they feed.

use ndarray::{Array2, Array3, Array4, ArrayView2};

use crate::C64;

/// Flattens a 3-index tensor to a matrix, grouping the first `split` axes
/// as rows (row-major within each group).
pub(crate) fn fuse3(a: &Array3<C64>, split: usize) -> Array2<C64> {
    let d = a.raw_dim();
    let (r, c) = match split {
        1 => (d[0], d[1] * d[2]),
        2 => (d[0] * d[1], d[2]),
        _ => panic!("fuse3: split must be 1 or 2"),
    };
    a.as_standard_layout()
        .into_owned()
        .into_shape_with_order((r, c))
        .expect("fuse3: element count preserved")
}

/// Permutes a 3-index tensor, then flattens with the first `split` permuted
/// axes as rows.
pub(crate) fn permute_fuse3(a: &Array3<C64>, perm: [usize; 3], split: usize) -> Array2<C64> {
    let v = a.view().permuted_axes(perm);
    let d = v.raw_dim();
    let (r, c) = match split {
        1 => (d[0], d[1] * d[2]),
        2 => (d[0] * d[1], d[2]),
        _ => panic!("permute_fuse3: split must be 1 or 2"),
    };
    v.as_standard_layout()
        .into_owned()
        .into_shape_with_order((r, c))
        .expect("permute_fuse3: element count preserved")
}

/// Permutes a 4-index tensor, then flattens with the first `split` permuted
/// axes as rows.
pub(crate) fn permute_fuse4(a: &Array4<C64>, perm: [usize; 4], split: usize) -> Array2<C64> {
    let v = a.view().permuted_axes(perm);
    let d = v.raw_dim();
    let (r, c) = match split {
        1 => (d[0], d[1] * d[2] * d[3]),
        2 => (d[0] * d[1], d[2] * d[3]),
        3 => (d[0] * d[1] * d[2], d[3]),
        _ => panic!("permute_fuse4: split must be 1..=3"),
    };
    v.as_standard_layout()
        .into_owned()
        .into_shape_with_order((r, c))
        .expect("permute_fuse4: element count preserved")
}

/// Unflattens a matrix into a 3-index tensor (row-major).
pub(crate) fn unfuse3(m: Array2<C64>, dims: (usize, usize, usize)) -> Array3<C64> {
    m.into_shape_with_order(dims)
        .expect("unfuse3: element count preserved")
}

/// Unflattens a matrix into a 4-index tensor (row-major).
pub(crate) fn unfuse4(m: Array2<C64>, dims: (usize, usize, usize, usize)) -> Array4<C64> {
    m.into_shape_with_order(dims)
        .expect("unfuse4: element count preserved")
}

/// `a * b` on views; kept as a helper so every GEMM in the crate goes
/// through one place.
pub(crate) fn gemm(a: ArrayView2<C64>, b: ArrayView2<C64>) -> Array2<C64> {
    a.dot(&b)
}

/// Elementwise complex conjugate.
pub(crate) fn conj2(a: &Array2<C64>) -> Array2<C64> {
    a.mapv(|z| z.conj())
}
