//! Dense-matrix helpers shared by unit tests.

use num_complex::Complex64;

use crate::pauli::PauliString;

pub type CMat = Vec<Vec<Complex64>>;

/// Dense `2^n × 2^n` matrix of a Pauli string; qubit `j` is bit `j` of the index.
#[allow(clippy::needless_range_loop)]
pub fn dense_pauli(p: &PauliString) -> CMat {
    let n = p.n();
    let d = 1usize << n;
    let mut m = vec![vec![Complex64::new(0.0, 0.0); d]; d];
    let phase = Complex64::i().powu(p.phase_exp() as u32);
    for b in 0..d {
        let mut row = b;
        let mut sign = 1.0;
        for j in 0..n {
            if p.z_bit(j) && (b >> j) & 1 == 1 {
                sign = -sign;
            }
            if p.x_bit(j) {
                row ^= 1 << j;
            }
        }
        m[row][b] = phase * sign;
    }
    m
}

pub fn mat_mul(a: &CMat, b: &CMat) -> CMat {
    let d = a.len();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); d]; d];
    for i in 0..d {
        for k in 0..d {
            if a[i][k] == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..d {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn dagger(a: &CMat) -> CMat {
    let d = a.len();
    (0..d).map(|i| (0..d).map(|j| a[j][i].conj()).collect()).collect()
}

pub fn mat_eq(a: &CMat, b: &CMat, tol: f64) -> bool {
    a.iter().zip(b).all(|(ra, rb)| ra.iter().zip(rb).all(|(x, y)| (x - y).norm() <= tol))
}
