//! Single-mode Fock-basis helpers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{CasimirError, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Annihilation operator on levels 0..=n_max.
pub fn annihilation(n_max: usize) -> CMatrix {
    let d = n_max + 1;
    let mut a = CMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

pub fn number(n_max: usize) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_fn(n_max + 1, |i, _| Complex64::new(i as f64, 0.0)))
}

/// Coherent-state amplitudes c_n = e^{-|a|^2/2} a^n / sqrt(n!) up to n_max, unnormalized by truncation.
pub fn coherent_amplitudes(alpha: Complex64, n_max: usize) -> CVector {
    let mut v = CVector::zeros(n_max + 1);
    let mut c = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    v[0] = c;
    for n in 1..=n_max {
        c = c * alpha / (n as f64).sqrt();
        v[n] = c;
    }
    v
}

/// Even cat N(|alpha> + |-alpha>) truncated at n_max.
///
/// Returns the renormalized vector and the norm deficit of the truncation.
pub fn even_cat(alpha: Complex64, n_max: usize) -> (CVector, f64) {
    let c = coherent_amplitudes(alpha, n_max);
    let mut v = CVector::from_fn(n_max + 1, |i, _| if i % 2 == 0 { c[i] } else { Complex64::new(0.0, 0.0) });
    // Exact norm of the even-parity projection of a coherent state: cosh|a|^2 e^{-|a|^2}.
    let a2 = alpha.norm_sqr();
    let exact = 0.5 * (1.0 + (-2.0 * a2).exp());
    let kept = v.norm_squared();
    let deficit = ((exact - kept) / exact).max(0.0);
    let norm = kept.sqrt();
    if norm > 0.0 {
        v /= Complex64::new(norm, 0.0);
    }
    (v, deficit)
}

/// Smallest cutoff that keeps the cat's norm deficit below `tol`.
pub fn cat_cutoff(alpha: Complex64, tol: f64) -> Result<usize> {
    let a2 = alpha.norm_sqr();
    let mut n = (a2 + 10.0 * a2.sqrt() + 10.0).ceil() as usize;
    loop {
        let (_, deficit) = even_cat(alpha, n);
        if deficit <= tol {
            return Ok(n);
        }
        if n > 4000 {
            return Err(CasimirError::TruncationInsufficient { deficit });
        }
        n += n / 2;
    }
}

/// Thermal state with mean occupation `mean`, truncated where the tail drops below `tol`.
pub fn thermal(mean: f64, tol: f64) -> CMatrix {
    if mean <= 0.0 {
        let mut m = CMatrix::zeros(1, 1);
        m[(0, 0)] = Complex64::new(1.0, 0.0);
        return m;
    }
    let r = mean / (mean + 1.0);
    let mut n_max = 0usize;
    while r.powi(n_max as i32 + 1) > tol {
        n_max += 1;
    }
    let probs: Vec<f64> = (0..=n_max).map(|n| r.powi(n as i32)).collect();
    let s: f64 = probs.iter().sum();
    CMatrix::from_diagonal(&CVector::from_fn(n_max + 1, |i, _| Complex64::new(probs[i] / s, 0.0)))
}

pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().sum()
}

/// Hermitian, unit-trace and positive semidefinite within `tol`.
pub fn validate_density_matrix(rho: &CMatrix, tol: f64) -> Result<()> {
    if !rho.is_square() || rho.nrows() == 0 {
        return Err(CasimirError::InvalidState("density matrix must be square and nonempty".into()));
    }
    let herm = (rho - rho.adjoint()).iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    if herm > tol {
        return Err(CasimirError::InvalidState(format!("density matrix is not Hermitian (deviation {herm:.3e})")));
    }
    let tr = trace(rho);
    if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
        return Err(CasimirError::InvalidState(format!("density matrix trace is {tr}")));
    }
    let sym = (rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    let min = sym.symmetric_eigenvalues().iter().fold(f64::INFINITY, |m, v| m.min(*v));
    if min < -tol {
        return Err(CasimirError::InvalidState(format!("density matrix has negative eigenvalue {min:.3e}")));
    }
    Ok(())
}

/// Pad a density matrix with empty levels up to `n_max`.
pub fn pad(rho: &CMatrix, n_max: usize) -> CMatrix {
    let d = rho.nrows().max(n_max + 1);
    let mut out = CMatrix::zeros(d, d);
    out.view_mut((0, 0), (rho.nrows(), rho.ncols())).copy_from(rho);
    out
}
