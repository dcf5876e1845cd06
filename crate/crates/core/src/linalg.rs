//! Dense complex linear algebra used by the collocation solvers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Solves `a x = b` by partial-pivot LU.
pub fn solve(a: DMatrix<C64>, b: &DVector<C64>) -> Result<DVector<C64>> {
    let lu = a.lu();
    let u = lu.u();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..u.nrows().min(u.ncols()) {
        let d = u[(i, i)].norm();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    let pivot_ratio = if hi > 0.0 { lo / hi } else { 0.0 };
    if !(pivot_ratio > 1e-15) {
        return Err(Error::SingularSystem { pivot_ratio });
    }
    let x = lu.solve(b).ok_or(Error::SingularSystem { pivot_ratio })?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem { pivot_ratio });
    }
    Ok(x)
}

/// Complex copy of a real matrix.
pub fn complexify(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|v| C64::new(v, 0.0))
}

/// `diag(d) * m` for a complex diagonal.
pub fn diag_mul(d: &DVector<C64>, m: &DMatrix<f64>) -> DMatrix<C64> {
    let mut out = complexify(m);
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row *= d[i];
    }
    out
}

/// Smallest singular value of a (possibly rectangular) complex matrix.
pub fn sigma_min(m: DMatrix<C64>) -> f64 {
    let s = m.singular_values();
    s.iter().copied().fold(f64::INFINITY, f64::min)
}
