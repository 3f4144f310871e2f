//! Benchmark fixtures: fixed-seed circuits and parameter points shared by the
//! criterion benches.

use sympath::analysis::draw_params;
use sympath::{
    gen_2d_lattice, gen_brickwork, BrickKind, CircuitIR, NoisePolicy, Observable, ParamPoint, Pauli, PauliString,
};

/// Rotation brickwork with single-qubit depolarizing noise after each rotation.
pub fn rotation_brickwork(n: usize, depth: usize, p: f64) -> CircuitIR {
    let mut c = gen_brickwork(n, depth, BrickKind::Rotation, 1).expect("valid brickwork");
    c.noise_policy = NoisePolicy::Depol1(p);
    c
}

/// Haar brickwork with two-qubit depolarizing noise after each block.
pub fn haar_brickwork(n: usize, depth: usize, p: f64) -> CircuitIR {
    let mut c = gen_brickwork(n, depth, BrickKind::Haar, 1).expect("valid brickwork");
    c.noise_policy = NoisePolicy::Depol2(p);
    c
}

pub fn haar_lattice(n1: usize, layers: usize, p: f64) -> CircuitIR {
    let mut c = gen_2d_lattice(n1, layers, 1).expect("valid lattice");
    c.noise_policy = NoisePolicy::Depol2(p);
    c
}

/// `X` on the middle qubit; anticommutes with the first rotation it meets.
pub fn middle_x(n: usize) -> Observable {
    Observable::single(PauliString::single(n, n / 2, Pauli::X))
}

pub fn point(c: &CircuitIR) -> ParamPoint {
    draw_params(c, 17, 0)
}
