//! Matrix coefficients of the two irreps the engines branch on.
//!
//! Rotations `e^{iθA}` act on the pair `(P, i·A·P)` through the real 2×2
//! rotation by `2θ`. Two-qubit unitaries act on the 15 non-identity two-qubit
//! Paulis through the adjoint representation.

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::Pauli;

/// A 4×4 unitary on an ordered qubit pair `(a, b)`; `a` is the first tensor factor.
pub type Su4 = Matrix4<Complex64>;

pub const ADJOINT_DIM: usize = 15;

const LETTERS: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

/// `(cos 2θ, sin 2θ)`.
pub fn u1_pair_coeffs(theta: f64) -> (f64, f64) {
    let (s, c) = (2.0 * theta).sin_cos();
    (c, s)
}

/// Letters `(on a, on b)` of adjoint basis element `k` (IX, IY, IZ, XI, ..., ZZ).
pub fn adjoint_letters(k: usize) -> (Pauli, Pauli) {
    debug_assert!(k < ADJOINT_DIM);
    let m = k + 1;
    (LETTERS[m / 4], LETTERS[m % 4])
}

/// Inverse of [`adjoint_letters`]; `None` for `II`.
pub fn adjoint_index(a: Pauli, b: Pauli) -> Option<usize> {
    let code = |p: Pauli| -> usize {
        match p {
            Pauli::I => 0,
            Pauli::X => 1,
            Pauli::Y => 2,
            Pauli::Z => 3,
        }
    };
    (4 * code(a) + code(b)).checked_sub(1)
}

fn pauli2(p: Pauli) -> [[Complex64; 2]; 2] {
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    match p {
        Pauli::I => [[o, z], [z, o]],
        Pauli::X => [[z, o], [o, z]],
        Pauli::Y => [[z, -i], [i, z]],
        Pauli::Z => [[o, z], [z, -o]],
    }
}

/// Dense matrix of adjoint basis element `k`, row index `2·x_a + x_b`.
pub fn block_pauli(k: usize) -> Su4 {
    let (a, b) = adjoint_letters(k);
    let (ma, mb) = (pauli2(a), pauli2(b));
    Su4::from_fn(|r, c| ma[r >> 1][c >> 1] * mb[r & 1][c & 1])
}

fn block_paulis() -> &'static [Su4; ADJOINT_DIM] {
    static CACHE: std::sync::OnceLock<[Su4; ADJOINT_DIM]> = std::sync::OnceLock::new();
    CACHE.get_or_init(|| std::array::from_fn(block_pauli))
}

/// Factor `sign · cos 2θ` or `sign · sin 2θ` attached to a rotation branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrigFactor {
    pub param_index: usize,
    pub kind: TrigKind,
    pub sign: i8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrigKind {
    Cos,
    Sin,
}

impl TrigFactor {
    pub fn evaluate(&self, theta: f64) -> f64 {
        let (c, s) = u1_pair_coeffs(theta);
        let v = match self.kind {
            TrigKind::Cos => c,
            TrigKind::Sin => s,
        };
        f64::from(self.sign) * v
    }
}

/// Real 15×15 matrix `v[k'][k] = tr(P_{k'} g P_k g†)/4`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointMatrix {
    v: [[f64; ADJOINT_DIM]; ADJOINT_DIM],
}

impl AdjointMatrix {
    pub fn identity() -> Self {
        let mut v = [[0.0; ADJOINT_DIM]; ADJOINT_DIM];
        for (k, row) in v.iter_mut().enumerate() {
            row[k] = 1.0;
        }
        Self { v }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.v[row][col]
    }

    pub fn rows(&self) -> &[[f64; ADJOINT_DIM]; ADJOINT_DIM] {
        &self.v
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut v = [[0.0; ADJOINT_DIM]; ADJOINT_DIM];
        for (i, row) in v.iter_mut().enumerate() {
            for (j, out) in row.iter_mut().enumerate() {
                *out = (0..ADJOINT_DIM).map(|k| self.v[i][k] * other.v[k][j]).sum();
            }
        }
        Self { v }
    }

    pub fn transpose(&self) -> Self {
        let mut v = [[0.0; ADJOINT_DIM]; ADJOINT_DIM];
        for (i, row) in v.iter_mut().enumerate() {
            for (j, out) in row.iter_mut().enumerate() {
                *out = self.v[j][i];
            }
        }
        Self { v }
    }

    /// `max |v·vᵀ − I|`.
    pub fn orthogonality_defect(&self) -> f64 {
        max_abs_diff(&self.mul(&self.transpose()), &Self::identity())
    }
}

pub fn max_abs_diff(a: &AdjointMatrix, b: &AdjointMatrix) -> f64 {
    a.v.iter().flatten().zip(b.v.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn unitarity_defect(g: &Su4) -> f64 {
    (g.adjoint() * g - Su4::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Adjoint representation of a two-qubit unitary.
pub fn su4_adjoint(g: &Su4) -> Result<AdjointMatrix> {
    let defect = unitarity_defect(g);
    if defect > 1e-10 {
        return Err(Error::NonUnitary { defect });
    }
    let basis = block_paulis();
    let gd = g.adjoint();
    let mut v = [[0.0; ADJOINT_DIM]; ADJOINT_DIM];
    for k in 0..ADJOINT_DIM {
        let image = g * basis[k] * gd;
        for (kp, row) in v.iter_mut().enumerate() {
            // tr(P_{k'} M) for Hermitian P_{k'}
            let t: Complex64 = (basis[kp].transpose().component_mul(&image)).sum() / 4.0;
            if t.im.abs() > 1e-9 {
                return Err(Error::ImaginaryResidue { residue: t.im.abs() });
            }
            row[k] = t.re;
        }
    }
    Ok(AdjointMatrix { v })
}

/// Haar-random element of U(4); the global phase drops out of [`su4_adjoint`].
pub fn haar_su4<R: Rng + ?Sized>(rng: &mut R) -> Su4 {
    let z = DMatrix::<Complex64>::from_fn(4, 4, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = z.qr();
    let (q, r) = (qr.q(), qr.r());
    Su4::from_fn(|i, j| {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        q[(i, j)] * phase
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn u1_examples() {
        assert_eq!(u1_pair_coeffs(0.0), (1.0, 0.0));
        let (c4, s4) = u1_pair_coeffs(PI / 4.0);
        assert!(c4.abs() < 1e-15 && (s4 - 1.0).abs() < 1e-15);
        let (c8, s8) = u1_pair_coeffs(PI / 8.0);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((c8 - r).abs() < 1e-7 && (s8 - r).abs() < 1e-7);
    }

    #[test]
    fn u1_matches_two_by_two_conjugation() {
        // e^{iθZ} X e^{-iθZ} = cos2θ X + sin2θ (iZX) = cos2θ X − sin2θ Y
        for &theta in &[0.1, PI / 8.0, 1.3, -2.2] {
            let (cv, sv) = u1_pair_coeffs(theta);
            let u = [Complex64::from_polar(1.0, theta), Complex64::from_polar(1.0, -theta)];
            // X entries after conjugation: (0,1) = u0 conj(u1)
            let off = u[0] * u[1].conj();
            // cos X − sin Y has (0,1) entry cos + i·sin
            assert!((off - Complex64::new(cv, sv)).norm() < 1e-12);
            assert!((cv * cv + sv * sv - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn u1_composes() {
        for &(a, b) in &[(0.3, 0.4), (1.0, -2.5)] {
            let (ca, sa) = u1_pair_coeffs(a);
            let (cb, sb) = u1_pair_coeffs(b);
            let (cab, sab) = u1_pair_coeffs(a + b);
            assert!((ca * cb - sa * sb - cab).abs() < 1e-12);
            assert!((sa * cb + ca * sb - sab).abs() < 1e-12);
        }
    }

    #[test]
    fn trig_factor_values() {
        let f = TrigFactor { param_index: 0, kind: TrigKind::Sin, sign: -1 };
        assert!((f.evaluate(PI / 4.0) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn enumeration_order() {
        assert_eq!(adjoint_letters(0), (Pauli::I, Pauli::X));
        assert_eq!(adjoint_letters(3), (Pauli::X, Pauli::I));
        assert_eq!(adjoint_letters(14), (Pauli::Z, Pauli::Z));
        for k in 0..ADJOINT_DIM {
            let (a, b) = adjoint_letters(k);
            assert_eq!(adjoint_index(a, b), Some(k));
        }
        assert_eq!(adjoint_index(Pauli::I, Pauli::I), None);
    }

    #[test]
    fn identity_gives_identity() {
        assert_eq!(su4_adjoint(&Su4::identity()).unwrap(), AdjointMatrix::identity());
    }

    #[test]
    fn swap_permutes_factors() {
        let mut swap = Su4::zeros();
        for (r, cc) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            swap[(r, cc)] = c(1.0);
        }
        let v = su4_adjoint(&swap).unwrap();
        for k in 0..ADJOINT_DIM {
            let (a, b) = adjoint_letters(k);
            let kp = adjoint_index(b, a).unwrap();
            for row in 0..ADJOINT_DIM {
                let want = if row == kp { 1.0 } else { 0.0 };
                assert!((v.get(row, k) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_non_unitary() {
        let mut g = Su4::identity();
        g[(0, 0)] = c(1.1);
        assert!(matches!(su4_adjoint(&g), Err(Error::NonUnitary { .. })));
    }

    #[test]
    fn haar_draws_are_unitary_orthogonal_and_homomorphic() {
        let mut rng = stream_rng(17, 0);
        for _ in 0..100 {
            let g = haar_su4(&mut rng);
            let h = haar_su4(&mut rng);
            assert!(unitarity_defect(&g) <= 1e-12);
            let (vg, vh) = (su4_adjoint(&g).unwrap(), su4_adjoint(&h).unwrap());
            assert!(vg.orthogonality_defect() <= 1e-9);
            assert!(vg.rows().iter().flatten().all(|x| x.abs() <= 1.0 + 1e-12));
            let vgh = su4_adjoint(&(g * h)).unwrap();
            assert!(max_abs_diff(&vgh, &vg.mul(&vh)) <= 1e-8);
        }
    }

    #[test]
    fn haar_moments() {
        let mut rng = stream_rng(5, 3);
        let draws = 20_000;
        let mut mean = [[0.0; ADJOINT_DIM]; ADJOINT_DIM];
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..draws {
            let v = su4_adjoint(&haar_su4(&mut rng)).unwrap();
            for (i, row) in mean.iter_mut().enumerate() {
                for (j, m) in row.iter_mut().enumerate() {
                    *m += v.get(i, j);
                }
            }
            let x = v.get(0, 0).powi(2);
            s1 += x;
            s2 += x * x;
        }
        let nd = draws as f64;
        // entries have variance 1/15, so the mean has σ = 1/sqrt(15·draws)
        let sigma = (1.0 / (15.0 * nd)).sqrt();
        for row in &mean {
            for &m in row {
                assert!((m / nd).abs() < 5.0 * sigma, "{}", m / nd);
            }
        }
        let m = s1 / nd;
        let se = ((s2 / nd - m * m) / nd).sqrt();
        assert!((m - 1.0 / 15.0).abs() < 5.0 * se, "{m}");
    }
}
