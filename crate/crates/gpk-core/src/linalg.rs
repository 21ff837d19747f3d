//! Dense complex matrix helpers shared by the kernel and Fock modules.

use crate::exec::Execution;
use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Columns per task in [`par_matmul`].
const COLUMN_BLOCK: usize = 32;

/// `a · b`, computed over independent column blocks of `b`.
///
/// Each block is an ordinary nalgebra product, so the result does not depend
/// on how blocks are scheduled.
pub fn par_matmul(a: &CMatrix, b: &CMatrix, exec: Execution) -> CMatrix {
    assert_eq!(a.ncols(), b.nrows(), "inner dimensions must agree");
    let cols = b.ncols();
    if !exec.is_parallel() || cols <= COLUMN_BLOCK {
        return a * b;
    }
    let blocks = cols.div_ceil(COLUMN_BLOCK);
    let parts = exec.map_range(blocks, |blk| {
        let start = blk * COLUMN_BLOCK;
        let width = COLUMN_BLOCK.min(cols - start);
        a * b.columns(start, width)
    });
    let mut out = CMatrix::zeros(a.nrows(), cols);
    for (blk, part) in parts.into_iter().enumerate() {
        out.columns_mut(blk * COLUMN_BLOCK, part.ncols()).copy_from(&part);
    }
    out
}

/// Frobenius norm.
pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Entrywise complex conjugate.
pub fn conj(m: &CMatrix) -> CMatrix {
    m.map(|z| z.conj())
}
