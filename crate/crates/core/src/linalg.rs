//! Small dense complex linear algebra on top of nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub fn fmt_point(z: Complex64) -> String {
    format!("{:.6e}{:+.6e}i", z.re, z.im)
}

/// Largest entrywise deviation from Hermitian symmetry.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let d = m - m.adjoint();
    d.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// `log det` of a Hermitian positive-definite matrix via Cholesky, summed in
/// the log domain.
pub fn log_det_hpd(m: &CMatrix, at: Complex64) -> Result<f64> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite(fmt_point(at)))?;
    // the complex factorization takes square roots of negative pivots instead of failing
    let diag = chol.l_dirty().diagonal();
    if diag
        .iter()
        .any(|d| !(d.re > 0.0) || d.im.abs() > 1e-12 * d.re)
    {
        return Err(Error::NotPositiveDefinite(fmt_point(at)));
    }
    Ok(diag.iter().map(|d| 2.0 * d.re.ln()).sum())
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    // symmetrize to shed rounding noise before the real-eigenvalue solver
    let sym = (m + m.adjoint()).scale(0.5);
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Condition number of a Hermitian positive-definite matrix.
pub fn hpd_condition(m: &CMatrix) -> f64 {
    let ev = hermitian_eigenvalues(m);
    let lo = ev.first().copied().unwrap_or(0.0);
    let hi = ev.last().copied().unwrap_or(0.0);
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

pub fn inverse(m: &CMatrix, at: Complex64) -> Result<CMatrix> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularGauge(fmt_point(at)))
}

/// Kronecker product.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Block-diagonal assembly.
pub fn block_diag(blocks: &[CMatrix]) -> CMatrix {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMatrix::zeros(n, n);
    let mut off = 0;
    for b in blocks {
        let k = b.nrows();
        out.view_mut((off, off), (k, k)).copy_from(b);
        off += k;
    }
    out
}

/// Pointwise norm `sqrt(tr(H^{-1} A^* H A))` of an endomorphism `A` with
/// respect to the Gram matrix `H`.
pub fn endo_norm(a: &CMatrix, h: &CMatrix, h_inv: &CMatrix) -> f64 {
    let prod = h_inv * a.adjoint() * h * a;
    prod.trace().re.max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn log_det_matches_product_of_eigenvalues() {
        let m =
            CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.5, 0.5), c(0.5, -0.5), c(3.0, 0.0)]);
        let ld = log_det_hpd(&m, c(0.1, 0.0)).unwrap();
        let ev = hermitian_eigenvalues(&m);
        assert!((ld - (ev[0] * ev[1]).ln()).abs() < 1e-12);
        assert!((ld - (6.0f64 - 0.5).ln()).abs() < 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m =
            CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)]);
        assert!(log_det_hpd(&m, c(0.1, 0.0)).is_err());
    }

    #[test]
    fn endo_norm_is_frobenius_in_orthonormal_frame() {
        let id = CMatrix::identity(2, 2);
        let a =
            CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 2.0), c(0.0, 0.0), c(-2.0, 0.0)]);
        assert!((endo_norm(&a, &id, &id) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn endo_norm_is_invariant_under_change_of_frame() {
        let a =
            CMatrix::from_row_slice(2, 2, &[c(1.0, 0.3), c(0.2, 2.0), c(0.7, 0.0), c(-2.0, 0.1)]);
        let h =
            CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.5, 0.5), c(0.5, -0.5), c(3.0, 0.0)]);
        let p =
            CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.4, -0.2), c(0.0, 0.0), c(2.0, 1.0)]);
        let p_inv = p.clone().try_inverse().unwrap();
        let a2 = &p_inv * &a * &p;
        let h2 = p.adjoint() * &h * &p;
        let n1 = endo_norm(&a, &h, &h.clone().try_inverse().unwrap());
        let n2 = endo_norm(&a2, &h2, &h2.clone().try_inverse().unwrap());
        assert!((n1 - n2).abs() < 1e-10 * n1);
    }

    #[test]
    fn block_diag_and_kron_shapes() {
        let a = CMatrix::identity(2, 2);
        let b = CMatrix::identity(3, 3).scale(2.0);
        let d = block_diag(&[a.clone(), b.clone()]);
        assert_eq!(d.nrows(), 5);
        assert_eq!(d[(4, 4)], c(2.0, 0.0));
        assert_eq!(kron(&a, &b).nrows(), 6);
    }
}
