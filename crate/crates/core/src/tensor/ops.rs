//! Boolean-arithmetic kernels: products, unfoldings and Tucker reconstruction.
//!
//! Unfoldings use the convention where the lower-numbered remaining mode varies
//! fastest along the columns:
//!
//! * `Mode1`: `O x (F*T)`, column `j + k*F`
//! * `Mode2`: `F x (O*T)`, column `i + k*O`
//! * `Mode3`: `T x (O*F)`, column `i + j*O`

use super::matrix::BoolMatrix;
use super::tensor3::{BoolTensor3, Dims, Mode};
use crate::error::{Error, Result};

/// Boolean matrix product: `out[i,j] = OR_k (left[i,k] AND right[k,j])`.
pub fn bool_matmul(left: &BoolMatrix, right: &BoolMatrix) -> Result<BoolMatrix> {
    if left.cols() != right.rows() {
        return Err(Error::shape(
            "bool_matmul",
            format!("{}x{}", left.rows(), left.cols()),
            format!("{}x{}", right.rows(), right.cols()),
        ));
    }
    let mut out = BoolMatrix::zeros(left.rows(), right.cols());
    for i in 0..left.rows() {
        let dst = out.row_words_mut(i);
        for k in left.iter_row_ones(i) {
            for (d, s) in dst.iter_mut().zip(right.row_words(k)) {
                *d |= s;
            }
        }
    }
    Ok(out)
}

/// Boolean Kronecker product. For `right` of shape `R x S`,
/// `out[i*R + r, j*S + s] = left[i,j] AND right[r,s]`.
pub fn bool_kronecker(left: &BoolMatrix, right: &BoolMatrix) -> Result<BoolMatrix> {
    let rows = left.rows().checked_mul(right.rows());
    let cols = left.cols().checked_mul(right.cols());
    let (rows, cols) = match (rows, cols) {
        (Some(r), Some(c)) if r.checked_mul(c).is_some() => (r, c),
        _ => {
            return Err(Error::Capacity(format!(
                "kronecker of {}x{} and {}x{} overflows",
                left.rows(),
                left.cols(),
                right.rows(),
                right.cols()
            )))
        }
    };
    let (rr, rc) = right.shape();
    let mut out = BoolMatrix::zeros(rows, cols);
    for i in 0..left.rows() {
        for j in left.iter_row_ones(i) {
            for r in 0..rr {
                for s in right.iter_row_ones(r) {
                    out.set(i * rr + r, j * rc + s, true);
                }
            }
        }
    }
    Ok(out)
}

/// Shape of the mode-`mode` unfolding of a tensor with `dims`.
pub fn unfolded_shape(dims: Dims, mode: Mode) -> (usize, usize) {
    match mode {
        Mode::Mode1 => (dims.o, dims.f * dims.t),
        Mode::Mode2 => (dims.f, dims.o * dims.t),
        Mode::Mode3 => (dims.t, dims.o * dims.f),
    }
}

#[inline]
fn unfold_index(dims: Dims, mode: Mode, i: usize, j: usize, k: usize) -> (usize, usize) {
    match mode {
        Mode::Mode1 => (i, j + k * dims.f),
        Mode::Mode2 => (j, i + k * dims.o),
        Mode::Mode3 => (k, i + j * dims.o),
    }
}

pub fn unfold(x: &BoolTensor3, mode: Mode) -> BoolMatrix {
    let dims = x.dims();
    let (rows, cols) = unfolded_shape(dims, mode);
    let mut m = BoolMatrix::zeros(rows, cols);
    for (i, j, k) in x.iter_ones() {
        let (r, c) = unfold_index(dims, mode, i, j, k);
        m.set(r, c, true);
    }
    m
}

/// Inverse of [`unfold`].
pub fn fold(m: &BoolMatrix, mode: Mode, dims: Dims) -> Result<BoolTensor3> {
    let expected = unfolded_shape(dims, mode);
    if m.shape() != expected {
        return Err(Error::shape(
            "fold",
            format!("{}x{}", m.rows(), m.cols()),
            format!(
                "{mode:?} unfolding of {dims} is {}x{}",
                expected.0, expected.1
            ),
        ));
    }
    let mut x = BoolTensor3::try_zeros(dims)?;
    for r in 0..m.rows() {
        for c in m.iter_row_ones(r) {
            let (i, j, k) = match mode {
                Mode::Mode1 => (r, c % dims.f, c / dims.f),
                Mode::Mode2 => (c % dims.o, r, c / dims.o),
                Mode::Mode3 => (c % dims.o, c / dims.o, r),
            };
            x.set(i, j, k, true);
        }
    }
    Ok(x)
}

fn check_factors(
    op: &'static str,
    core: &BoolTensor3,
    a: &BoolMatrix,
    b: &BoolMatrix,
    c: &BoolMatrix,
) -> Result<()> {
    let g = core.dims();
    if a.cols() != g.o || b.cols() != g.f || c.cols() != g.t {
        return Err(Error::shape(
            op,
            format!("core {g}"),
            format!("factor ranks ({}, {}, {})", a.cols(), b.cols(), c.cols()),
        ));
    }
    Ok(())
}

/// The mode-`mode` basis `G(n) x (kron of the other two factors)^T`.
///
/// Row `r` is the pattern in the mode-`n` unfolding that component `r` switches
/// on; a row of the unfolded reconstruction is the OR of the basis rows its
/// factor row selects.
pub fn mode_basis(
    core: &BoolTensor3,
    a: &BoolMatrix,
    b: &BoolMatrix,
    c: &BoolMatrix,
    mode: Mode,
) -> Result<BoolMatrix> {
    check_factors("mode_basis", core, a, b, c)?;
    let kron = match mode {
        Mode::Mode1 => bool_kronecker(c, b)?,
        Mode::Mode2 => bool_kronecker(c, a)?,
        Mode::Mode3 => bool_kronecker(b, a)?,
    };
    bool_matmul(&unfold(core, mode), &kron.transpose())
}

/// Boolean Tucker product `X[i,j,k] = OR G[r1,r2,r3] AND A[i,r1] AND B[j,r2] AND C[k,r3]`.
pub fn tucker_reconstruct(
    core: &BoolTensor3,
    a: &BoolMatrix,
    b: &BoolMatrix,
    c: &BoolMatrix,
) -> Result<BoolTensor3> {
    let basis = mode_basis(core, a, b, c, Mode::Mode1)?;
    let x1 = bool_matmul(a, &basis)?;
    fold(&x1, Mode::Mode1, Dims::new(a.rows(), b.rows(), c.rows()))
}

/// Hamming distance between two tensors plus the same count relative to the
/// number of 1-cells in `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorStat {
    pub mismatches: usize,
    pub relative: f64,
}

impl ErrorStat {
    pub(crate) fn new(mismatches: usize, ones_in_x: usize) -> Self {
        ErrorStat {
            mismatches,
            relative: mismatches as f64 / ones_in_x.max(1) as f64,
        }
    }
}

pub fn hamming_error(x: &BoolTensor3, xhat: &BoolTensor3) -> Result<ErrorStat> {
    if x.dims() != xhat.dims() {
        return Err(Error::shape("hamming_error", x.dims(), xhat.dims()));
    }
    let mismatches = x
        .words()
        .iter()
        .zip(xhat.words())
        .map(|(a, b)| (a ^ b).count_ones() as usize)
        .sum();
    Ok(ErrorStat::new(mismatches, x.count_ones()))
}

/// Fraction of 1-cells.
pub fn density(x: &BoolTensor3) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::Domain(format!(
            "density of empty tensor {}",
            x.dims()
        )));
    }
    Ok(x.count_ones() as f64 / x.len() as f64)
}
