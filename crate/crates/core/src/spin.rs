//! Spin-1/2 conventions. Basis order is `|+>_z` (index 0) then `|->_z`
//! (index 1); for two ions the index is `2 * s1 + s2`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

const I: C64 = C64::new(0.0, 1.0);
const ONE: C64 = C64::new(1.0, 0.0);
const ZERO: C64 = C64::new(0.0, 0.0);

pub fn sigma_x() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn sigma_y() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn sigma_z() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// `sigma_x cos(phase) - sigma_y sin(phase)`.
pub fn sigma_phi(phase: f64) -> DMatrix<C64> {
    let e = C64::from_polar(1.0, phase);
    DMatrix::from_row_slice(2, 2, &[ZERO, e, e.conj(), ZERO])
}

/// Eigenvectors of `sigma_phi(phase)` for eigenvalues +1 and -1.
pub fn sigma_phi_eigenvectors(phase: f64) -> [[C64; 2]; 2] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let e = C64::from_polar(s, -phase);
    [[C64::new(s, 0.0), e], [C64::new(s, 0.0), -e]]
}

pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

/// Operator `op` acting on ion `which` of an `n_ions` register.
pub fn embed(op: &DMatrix<C64>, which: usize, n_ions: usize) -> DMatrix<C64> {
    let mut out = DMatrix::<C64>::identity(1, 1);
    for ion in 0..n_ions {
        let factor = if ion == which { op.clone() } else { DMatrix::identity(2, 2) };
        out = out.kronecker(&factor);
    }
    out
}

/// `sum_j op^(j)` over all ions.
pub fn collective(op: &DMatrix<C64>, n_ions: usize) -> DMatrix<C64> {
    let dim = 1 << n_ions;
    (0..n_ions).fold(DMatrix::zeros(dim, dim), |acc, j| acc + embed(op, j, n_ions))
}

pub fn plus_z() -> [C64; 2] {
    [ONE, ZERO]
}

pub fn minus_z() -> [C64; 2] {
    [ZERO, ONE]
}

/// `(|+>_z + i|->_z) / sqrt 2`.
pub fn plus_y() -> [C64; 2] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [C64::new(s, 0.0), C64::new(0.0, s)]
}

/// Product state of identical single-ion spinors.
pub fn product(single: [C64; 2], n_ions: usize) -> DVector<C64> {
    let mut v = DVector::from_element(1, ONE);
    for _ in 0..n_ions {
        v = v.kronecker(&DVector::from_row_slice(&single));
    }
    v
}
