//! Brute-force statevector and density-matrix simulation for small registers.
//!
//! Qubit `j` is bit `j` of a basis index. Gates are applied through local
//! kernels; nothing of size `2^n × 2^n` is built for a unitary.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::circuit::{CircuitIR, Op, ParamPoint};
use crate::clifford::{CliffordGate, CliffordTableau};
use crate::error::{Error, Result};
use crate::expectation::Observable;
use crate::irrep::Su4;
use crate::noise::NoiseChannel;
use crate::pauli::{Pauli, PauliString};

pub const MAX_STATEVECTOR_QUBITS: usize = 12;
pub const MAX_DENSITY_QUBITS: usize = 7;

type C = Complex64;
const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub enum DenseState {
    Pure {
        n: usize,
        amps: Vec<C>,
    },
    /// Row-major `2^n × 2^n` density matrix.
    Mixed {
        n: usize,
        rho: Vec<C>,
    },
}

impl DenseState {
    pub fn zero_pure(n: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n];
        amps[0] = ONE;
        DenseState::Pure { n, amps }
    }

    pub fn zero_mixed(n: usize) -> Self {
        let d = 1 << n;
        let mut rho = vec![ZERO; d * d];
        rho[0] = ONE;
        DenseState::Mixed { n, rho }
    }

    pub fn n(&self) -> usize {
        match self {
            DenseState::Pure { n, .. } | DenseState::Mixed { n, .. } => *n,
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        match self {
            DenseState::Pure { amps, .. } => amps.iter().map(|a| a.norm_sqr()).collect(),
            DenseState::Mixed { n, rho } => {
                let d = 1 << n;
                (0..d).map(|i| rho[i * d + i].re).collect()
            }
        }
    }

    pub fn trace(&self) -> f64 {
        self.probabilities().iter().sum()
    }

    /// `⟨P⟩`, real part (exact for Hermitian `P`).
    pub fn expectation(&self, p: &PauliString) -> Result<f64> {
        if p.n() != self.n() {
            return Err(Error::SizeMismatch { expected: self.n(), found: p.n() });
        }
        let (xm, zm) = masks(p);
        let ph = phase_factor(p);
        Ok(match self {
            DenseState::Pure { amps, .. } => {
                let mut acc = ZERO;
                for (b, a) in amps.iter().enumerate() {
                    let s = if (zm & b as u64).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
                    acc += amps[b ^ xm as usize].conj() * *a * s;
                }
                (acc * ph).re
            }
            DenseState::Mixed { n, rho } => {
                let d = 1usize << n;
                let mut acc = ZERO;
                for c in 0..d {
                    let s = if (zm & c as u64).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
                    acc += rho[c * d + (c ^ xm as usize)] * s;
                }
                (acc * ph).re
            }
        })
    }

    /// Smallest eigenvalue of the density matrix (1 − ‖ψ‖² for pure states is 0).
    pub fn min_eigenvalue(&self) -> f64 {
        match self {
            DenseState::Pure { .. } => 0.0,
            DenseState::Mixed { n, rho } => {
                let d = 1 << n;
                let m = DMatrix::from_row_slice(d, d, rho);
                m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
            }
        }
    }
}

fn masks(p: &PauliString) -> (u64, u64) {
    let (mut x, mut z) = (0u64, 0u64);
    for j in 0..p.n() {
        if p.x_bit(j) {
            x |= 1 << j;
        }
        if p.z_bit(j) {
            z |= 1 << j;
        }
    }
    (x, z)
}

fn phase_factor(p: &PauliString) -> C {
    match p.phase_exp() & 3 {
        0 => ONE,
        1 => C::new(0.0, 1.0),
        2 => -ONE,
        _ => C::new(0.0, -1.0),
    }
}

/// `ψ ↦ Pψ` with `P = i^phase · X^x Z^z`.
fn apply_pauli(psi: &mut [C], p: &PauliString) {
    let (xm, zm) = masks(p);
    let ph = phase_factor(p);
    let src = psi.to_vec();
    for (b, a) in src.into_iter().enumerate() {
        let s = if (zm & b as u64).count_ones() % 2 == 1 { -ph } else { ph };
        psi[b ^ xm as usize] = a * s;
    }
}

fn apply_1q(psi: &mut [C], q: usize, m: [[C; 2]; 2]) {
    let bit = 1usize << q;
    for i in 0..psi.len() {
        if i & bit == 0 {
            let (a0, a1) = (psi[i], psi[i | bit]);
            psi[i] = m[0][0] * a0 + m[0][1] * a1;
            psi[i | bit] = m[1][0] * a0 + m[1][1] * a1;
        }
    }
}

/// Two-qubit kernel; local index `2·x_a + x_b`.
fn apply_2q(psi: &mut [C], a: usize, b: usize, m: &Su4) {
    let (ba, bb) = (1usize << a, 1usize << b);
    for i in 0..psi.len() {
        if i & ba == 0 && i & bb == 0 {
            let idx = [i, i | bb, i | ba, i | ba | bb];
            let v = idx.map(|k| psi[k]);
            for (r, &k) in idx.iter().enumerate() {
                psi[k] = (0..4).map(|c| m[(r, c)] * v[c]).sum();
            }
        }
    }
}

fn apply_gate(psi: &mut [C], g: &CliffordGate) {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let i = C::new(0.0, 1.0);
    match *g {
        CliffordGate::H(q) => apply_1q(psi, q, [[C::new(h, 0.0), C::new(h, 0.0)], [C::new(h, 0.0), C::new(-h, 0.0)]]),
        CliffordGate::S(q) => apply_1q(psi, q, [[ONE, ZERO], [ZERO, i]]),
        CliffordGate::Sdg(q) => apply_1q(psi, q, [[ONE, ZERO], [ZERO, -i]]),
        CliffordGate::X(q) => apply_1q(psi, q, [[ZERO, ONE], [ONE, ZERO]]),
        CliffordGate::Y(q) => apply_1q(psi, q, [[ZERO, -i], [i, ZERO]]),
        CliffordGate::Z(q) => apply_1q(psi, q, [[ONE, ZERO], [ZERO, -ONE]]),
        CliffordGate::CX(a, b) => {
            let m = Su4::from_fn(|r, c| {
                let map = [0, 1, 3, 2];
                if map[c] == r {
                    ONE
                } else {
                    ZERO
                }
            });
            apply_2q(psi, a, b, &m);
        }
        CliffordGate::CZ(a, b) => {
            let m = Su4::from_fn(|r, c| match (r == c, r) {
                (true, 3) => -ONE,
                (true, _) => ONE,
                _ => ZERO,
            });
            apply_2q(psi, a, b, &m);
        }
        CliffordGate::Swap(a, b) => {
            for k in 0..psi.len() {
                let (xa, xb) = ((k >> a) & 1, (k >> b) & 1);
                if xa == 1 && xb == 0 {
                    psi.swap(k, k ^ (1 << a) ^ (1 << b));
                }
            }
        }
    }
}

/// `ψ ↦ e^{iθA}ψ = cos θ ψ + i sin θ Aψ`.
fn apply_rotation(psi: &mut [C], axis: &PauliString, theta: f64) {
    let mut ap = psi.to_vec();
    apply_pauli(&mut ap, axis);
    let (s, c) = theta.sin_cos();
    let is = C::new(0.0, s);
    for (v, a) in psi.iter_mut().zip(ap) {
        *v = *v * c + is * a;
    }
}

/// Unitary parts of the flattened operation list.
enum Unitary<'a> {
    Gates(&'a [CliffordGate]),
    Rotation(&'a PauliString, f64),
    Block(usize, usize, &'a Su4),
}

fn apply_unitary(psi: &mut [C], u: &Unitary<'_>) {
    match u {
        Unitary::Gates(gs) => gs.iter().for_each(|g| apply_gate(psi, g)),
        Unitary::Rotation(axis, theta) => apply_rotation(psi, axis, *theta),
        Unitary::Block(a, b, g) => apply_2q(psi, *a, *b, g),
    }
}

/// Applies `f` to every column of a row-major square matrix.
fn for_columns(rho: &mut [C], d: usize, f: &dyn Fn(&mut [C])) {
    let mut col = vec![ZERO; d];
    for c in 0..d {
        for r in 0..d {
            col[r] = rho[r * d + c];
        }
        f(&mut col);
        for r in 0..d {
            rho[r * d + c] = col[r];
        }
    }
}

fn dagger_in_place(rho: &mut [C], d: usize) {
    for r in 0..d {
        rho[r * d + r] = rho[r * d + r].conj();
        for c in r + 1..d {
            let (x, y) = (rho[r * d + c], rho[c * d + r]);
            rho[r * d + c] = y.conj();
            rho[c * d + r] = x.conj();
        }
    }
}

/// `ρ ↦ UρU†` for Hermitian `ρ`, computed as `U(Uρ)†`.
fn conjugate_density(rho: &mut [C], d: usize, f: &dyn Fn(&mut [C])) {
    for_columns(rho, d, f);
    dagger_in_place(rho, d);
    for_columns(rho, d, f);
}

/// Pauli-mixing weights `c_P` with `Σ_P c_P PρP` reproducing the channel.
fn mixing_weights(ch: &NoiseChannel, n: usize) -> Result<Vec<(PauliString, f64)>> {
    let qs = ch.qubits();
    let k = qs.len();
    let local = |idx: usize| {
        let mut p = PauliString::identity(n);
        for (m, &q) in qs.iter().enumerate() {
            p.set(q, [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][(idx >> (2 * m)) & 3]);
        }
        p
    };
    let basis: Vec<PauliString> = (0..1usize << (2 * k)).map(local).collect();
    let eig = basis.iter().map(|q| ch.eigenvalue(q)).collect::<Result<Vec<f64>>>()?;
    let scale = 1.0 / basis.len() as f64;
    Ok(basis
        .iter()
        .map(|p| {
            let c: f64 = basis.iter().zip(&eig).map(|(q, e)| if p.commutes_unchecked(q) { *e } else { -*e }).sum();
            (p.clone(), c * scale)
        })
        .filter(|(_, c)| c.abs() > 0.0)
        .collect())
}

fn apply_channel(rho: &mut [C], n: usize, ch: &NoiseChannel) -> Result<()> {
    let d = 1 << n;
    let weights = mixing_weights(ch, n)?;
    let mut out = vec![ZERO; d * d];
    for (p, w) in weights {
        let mut term = rho.to_vec();
        conjugate_density(&mut term, d, &|v| apply_pauli(v, &p));
        for (o, t) in out.iter_mut().zip(term) {
            *o += t * w;
        }
    }
    rho.copy_from_slice(&out);
    Ok(())
}

fn check_cap(what: &'static str, n: usize, max: usize) -> Result<()> {
    if n > max {
        return Err(Error::OracleCap { what, n, max });
    }
    Ok(())
}

fn prepare(c: &CircuitIR, params: &ParamPoint) -> Result<Vec<Op>> {
    c.ensure_valid()?;
    params.check(c)?;
    c.ops()
}

fn unitary_of<'a>(
    op: &'a Op,
    params: &'a ParamPoint,
    gates: &'a [Vec<CliffordGate>],
    gi: &mut usize,
) -> Option<Unitary<'a>> {
    match op {
        Op::Clifford(_) => {
            let u = Unitary::Gates(&gates[*gi]);
            *gi += 1;
            Some(u)
        }
        Op::Rotation { axis, param } => Some(Unitary::Rotation(axis, params.thetas[*param])),
        Op::Haar { a, b, param } => Some(Unitary::Block(*a, *b, &params.su4s[*param])),
        Op::Noise(_) => None,
    }
}

/// Gate lists of the non-trivial Clifford layers, aligned with `Op::Clifford`.
fn clifford_gate_lists(c: &CircuitIR) -> Vec<Vec<CliffordGate>> {
    c.layers
        .iter()
        .filter_map(|l| match l {
            crate::circuit::Layer::Clifford { gates, tableau } if !tableau.is_identity() => Some(gates.clone()),
            _ => None,
        })
        .collect()
}

/// Noiseless final state vector.
pub fn run_statevector(c: &CircuitIR, params: &ParamPoint) -> Result<DenseState> {
    check_cap("statevector simulation", c.n, MAX_STATEVECTOR_QUBITS)?;
    let ops = prepare(c, params)?;
    let gates = clifford_gate_lists(c);
    let mut state = DenseState::zero_pure(c.n);
    let DenseState::Pure { amps, .. } = &mut state else { unreachable!() };
    let mut gi = 0;
    for op in &ops {
        if let Some(u) = unitary_of(op, params, &gates, &mut gi) {
            apply_unitary(amps, &u);
        }
    }
    Ok(state)
}

/// Final density matrix; noise channels are skipped when `noisy` is false.
pub fn run_density(c: &CircuitIR, params: &ParamPoint, noisy: bool) -> Result<DenseState> {
    check_cap("density simulation", c.n, MAX_DENSITY_QUBITS)?;
    let ops = prepare(c, params)?;
    let gates = clifford_gate_lists(c);
    let n = c.n;
    let d = 1 << n;
    let mut state = DenseState::zero_mixed(n);
    let DenseState::Mixed { rho, .. } = &mut state else { unreachable!() };
    let mut gi = 0;
    for op in &ops {
        match unitary_of(op, params, &gates, &mut gi) {
            Some(u) => conjugate_density(rho, d, &|v| apply_unitary(v, &u)),
            None => {
                if let (Op::Noise(ch), true) = (op, noisy) {
                    apply_channel(rho, n, ch)?;
                }
            }
        }
    }
    Ok(state)
}

fn has_noise(c: &CircuitIR) -> Result<bool> {
    Ok(c.ops()?.iter().any(|o| matches!(o, Op::Noise(_))))
}

fn final_state(c: &CircuitIR, params: &ParamPoint, noisy: bool) -> Result<DenseState> {
    if noisy && has_noise(c)? {
        run_density(c, params, true)
    } else {
        run_statevector(c, params)
    }
}

/// `tr(O ρ_final)`.
pub fn exact_expectation(c: &CircuitIR, obs: &Observable, params: &ParamPoint, noisy: bool) -> Result<f64> {
    if obs.n() != c.n {
        return Err(Error::SizeMismatch { expected: c.n, found: obs.n() });
    }
    let state = final_state(c, params, noisy)?;
    obs.terms().iter().map(|(w, p)| Ok(w * state.expectation(p)?)).sum()
}

/// Computational-basis output distribution.
pub fn exact_distribution(c: &CircuitIR, params: &ParamPoint, noisy: bool) -> Result<Vec<f64>> {
    Ok(final_state(c, params, noisy)?.probabilities())
}

/// Dense unitary of a Clifford gate list (column `b` is the image of `|b⟩`).
#[cfg(test)]
pub(crate) fn dense_clifford_unitary(n: usize, gates: &[CliffordGate]) -> crate::testutil::CMat {
    let d = 1 << n;
    let mut u = vec![vec![ZERO; d]; d];
    for b in 0..d {
        let mut psi = vec![ZERO; d];
        psi[b] = ONE;
        gates.iter().for_each(|g| apply_gate(&mut psi, g));
        for r in 0..d {
            u[r][b] = psi[r];
        }
    }
    u
}

/// Stabilizer check: Clifford-only circuits map `Z_j` to Paulis whose
/// expectation on the output is `±1` or `0`.
pub fn clifford_expectation(tableau: &CliffordTableau, p: &PauliString) -> Result<f64> {
    let back = tableau.conjugate(p, crate::clifford::Direction::Adjoint)?;
    let bits = crate::pauli::BitString::zeros(p.n());
    Ok(f64::from(back.diag_element(&bits)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{gen_brickwork, BrickKind};
    use crate::pauli::lit;
    use crate::rng::stream_rng;
    use std::f64::consts::PI;

    fn obs(s: &str) -> Observable {
        Observable::single(lit(s))
    }

    #[test]
    fn empty_circuit() {
        let c = CircuitIR::parse("qubits 2\nbarrier").unwrap();
        let p = ParamPoint::zeros(&c);
        assert_eq!(exact_expectation(&c, &obs("ZI"), &p, false).unwrap(), 1.0);
        assert_eq!(exact_distribution(&c, &p, true).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn hadamard_rotation() {
        let c = CircuitIR::parse("qubits 1\nh 0\nrp Z t0").unwrap();
        let p = ParamPoint::new(vec![PI / 8.0], vec![]);
        let v = exact_expectation(&c, &obs("X"), &p, false).unwrap();
        assert!((v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-7);
        let d =
            exact_distribution(&CircuitIR::parse("qubits 1\nh 0").unwrap(), &ParamPoint::new(vec![], vec![]), false)
                .unwrap();
        assert!((d[0] - 0.5).abs() < 1e-15 && (d[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rotation_sign_convention() {
        // e^{iθZ} X e^{-iθZ} = cos2θ X − sin2θ Y in the Schrödinger picture,
        // so ⟨Y⟩ on e^{iθZ}|+⟩ is −sin 2θ
        let c = CircuitIR::parse("qubits 1\nh 0\nrp Z t0").unwrap();
        let p = ParamPoint::new(vec![0.3], vec![]);
        let v = exact_expectation(&c, &obs("Y"), &p, false).unwrap();
        assert!((v + (0.6f64).sin()).abs() < 1e-12);
    }

    #[test]
    fn full_depolarizing_mixes() {
        let c = CircuitIR::parse("qubits 2\nh 0\ncx 0 1\nnoise depol2 1.0 0 1").unwrap();
        let p = ParamPoint::zeros(&c);
        assert!(exact_expectation(&c, &obs("ZI"), &p, true).unwrap().abs() < 1e-14);
        assert!(exact_expectation(&c, &obs("ZZ"), &p, true).unwrap().abs() < 1e-14);
        let c1 = CircuitIR::parse("qubits 2\nnoise depol1 1.0 0 1").unwrap();
        let d = exact_distribution(&c1, &ParamPoint::zeros(&c1), true).unwrap();
        assert!(d.iter().all(|x| (x - 0.25).abs() < 1e-14));
    }

    #[test]
    fn depolarizing_damps_by_one_minus_p() {
        let c = CircuitIR::parse("qubits 1\nrp Z t0\nnoise-policy depol1 0.1").unwrap();
        let p = ParamPoint::new(vec![0.7], vec![]);
        assert!((exact_expectation(&c, &obs("Z"), &p, true).unwrap() - 0.9).abs() < 1e-14);
        let c = CircuitIR::parse("qubits 1\nh 0\nrp Z t0\nnoise-policy depol1 0.1").unwrap();
        let p = ParamPoint::new(vec![0.0], vec![]);
        assert!((exact_expectation(&c, &obs("X"), &p, true).unwrap() - 0.9).abs() < 1e-14);
    }

    #[test]
    fn density_matches_statevector_without_noise() {
        let mut rng = stream_rng(3, 0);
        for seed in 0..5 {
            let mut c = gen_brickwork(4, 3, BrickKind::Haar, seed).unwrap();
            c.push_gate(CliffordGate::H(1)).unwrap();
            c.push_rotation(lit("XZYI"), 0);
            let p = ParamPoint::random(&c, &mut rng);
            let sv = run_statevector(&c, &p).unwrap().probabilities();
            let dm = run_density(&c, &p, false).unwrap().probabilities();
            for (a, b) in sv.iter().zip(&dm) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn channels_preserve_trace_and_positivity() {
        let mut rng = stream_rng(9, 0);
        let mut c = gen_brickwork(3, 4, BrickKind::Haar, 1).unwrap();
        c.noise_policy = crate::circuit::NoisePolicy::Depol2(0.15);
        c.push_noise(
            NoiseChannel::from_table_json(
                crate::pauli::SupportMask::from_qubits(3, &[1]).unwrap(),
                &serde_json::json!({"X": 0.8, "Y": 0.6, "Z": 0.8}),
            )
            .unwrap(),
        );
        let p = ParamPoint::random(&c, &mut rng);
        let s = run_density(&c, &p, true).unwrap();
        assert!((s.trace() - 1.0).abs() < 1e-12);
        assert!(s.min_eigenvalue() >= -1e-10);
    }

    #[test]
    fn explicit_table_matches_eigenvalues() {
        // Channel eigenvalues must be reproduced on each Pauli input state.
        let ch = NoiseChannel::from_table_json(
            crate::pauli::SupportMask::from_qubits(1, &[0]).unwrap(),
            &serde_json::json!({"X": 0.5, "Y": 0.3, "Z": 0.7}),
        )
        .unwrap();
        for (prep, o, e) in [("h 0", "X", 0.5), ("h 0\ns 0", "Y", 0.3), ("", "Z", 0.7)] {
            let mut c = CircuitIR::parse(&format!("qubits 1\nbarrier\n{prep}")).unwrap();
            c.push_noise(ch.clone());
            let v = exact_expectation(&c, &obs(o), &ParamPoint::zeros(&c), true).unwrap();
            assert!((v - e).abs() < 1e-14, "{o}: {v}");
        }
    }

    #[test]
    fn caps_are_enforced() {
        let c = CircuitIR::parse("qubits 8\nh 0").unwrap();
        assert!(matches!(run_density(&c, &ParamPoint::zeros(&c), true), Err(Error::OracleCap { .. })));
        let c = CircuitIR::parse("qubits 13\nh 0").unwrap();
        assert!(matches!(run_statevector(&c, &ParamPoint::zeros(&c)), Err(Error::OracleCap { .. })));
    }

    #[test]
    fn stabilizer_values_match() {
        let gates = [CliffordGate::H(0), CliffordGate::CX(0, 1), CliffordGate::S(1)];
        let mut c = CircuitIR::new(2);
        for g in gates {
            c.push_gate(g).unwrap();
        }
        let t = CliffordTableau::from_gates(2, &gates).unwrap();
        let p = ParamPoint::zeros(&c);
        for s in ["ZZ", "XY", "YX", "ZI", "XX"] {
            let want = clifford_expectation(&t, &lit(s)).unwrap();
            let got = exact_expectation(&c, &obs(s), &p, false).unwrap();
            assert!((want - got).abs() < 1e-12, "{s}");
        }
    }
}
