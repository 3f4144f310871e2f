//! Clifford tableaus acting on Pauli strings by conjugation.

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString};

/// Clifford generators accepted by circuits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CliffordGate {
    H(usize),
    S(usize),
    Sdg(usize),
    X(usize),
    Y(usize),
    Z(usize),
    CX(usize, usize),
    CZ(usize, usize),
    Swap(usize, usize),
}

#[derive(Clone, Copy)]
enum GateKind {
    H,
    S,
    Sdg,
    X,
    Y,
    Z,
    CX,
    CZ,
    Swap,
}

impl CliffordGate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            CliffordGate::H(q)
            | CliffordGate::S(q)
            | CliffordGate::Sdg(q)
            | CliffordGate::X(q)
            | CliffordGate::Y(q)
            | CliffordGate::Z(q) => vec![q],
            CliffordGate::CX(a, b) | CliffordGate::CZ(a, b) | CliffordGate::Swap(a, b) => {
                vec![a, b]
            }
        }
    }

    pub fn inverse(&self) -> Self {
        match *self {
            CliffordGate::S(q) => CliffordGate::Sdg(q),
            CliffordGate::Sdg(q) => CliffordGate::S(q),
            g => g,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CliffordGate::H(_) => "h",
            CliffordGate::S(_) => "s",
            CliffordGate::Sdg(_) => "sdg",
            CliffordGate::X(_) => "x",
            CliffordGate::Y(_) => "y",
            CliffordGate::Z(_) => "z",
            CliffordGate::CX(..) => "cx",
            CliffordGate::CZ(..) => "cz",
            CliffordGate::Swap(..) => "swap",
        }
    }

    fn kind(&self) -> GateKind {
        match self {
            CliffordGate::H(_) => GateKind::H,
            CliffordGate::S(_) => GateKind::S,
            CliffordGate::Sdg(_) => GateKind::Sdg,
            CliffordGate::X(_) => GateKind::X,
            CliffordGate::Y(_) => GateKind::Y,
            CliffordGate::Z(_) => GateKind::Z,
            CliffordGate::CX(..) => GateKind::CX,
            CliffordGate::CZ(..) => GateKind::CZ,
            CliffordGate::Swap(..) => GateKind::Swap,
        }
    }

    pub(crate) fn check(&self, n: usize) -> Result<()> {
        let qs = self.qubits();
        for &q in &qs {
            if q >= n {
                return Err(Error::QubitOutOfRange { qubit: q, n });
            }
        }
        if qs.len() == 2 && qs[0] == qs[1] {
            return Err(Error::InvalidCircuit(format!("{self} acts twice on qubit {}", qs[0])));
        }
        Ok(())
    }

    /// Forward conjugation `g p g†` of a single string.
    pub(crate) fn conjugate_in_place(&self, p: &mut PauliString) {
        let table = local_table(self.kind());
        let qs = self.qubits();
        let mut idx = 0;
        for (k, &q) in qs.iter().enumerate() {
            idx |= letter_index(p.get(q)) << (2 * k);
        }
        let (negate, out) = table[idx];
        for (k, &q) in qs.iter().enumerate() {
            p.set(q, LETTERS[(out >> (2 * k)) & 3]);
        }
        if negate {
            p.negate();
        }
    }
}

impl fmt::Display for CliffordGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())?;
        for q in self.qubits() {
            write!(f, " {q}")?;
        }
        Ok(())
    }
}

const LETTERS: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

fn letter_index(p: Pauli) -> usize {
    match p {
        Pauli::I => 0,
        Pauli::X => 1,
        Pauli::Y => 2,
        Pauli::Z => 3,
    }
}

type LocalTable = Vec<(bool, usize)>;

/// Images of the local generators `X_0, Z_0, X_1, Z_1` as letter strings.
fn generator_images(kind: GateKind) -> (usize, [&'static str; 4]) {
    match kind {
        GateKind::H => (1, ["Z", "X", "", ""]),
        GateKind::S => (1, ["Y", "Z", "", ""]),
        GateKind::Sdg => (1, ["-Y", "Z", "", ""]),
        GateKind::X => (1, ["X", "-Z", "", ""]),
        GateKind::Y => (1, ["-X", "-Z", "", ""]),
        GateKind::Z => (1, ["-X", "Z", "", ""]),
        GateKind::CX => (2, ["XX", "ZI", "IX", "ZZ"]),
        GateKind::CZ => (2, ["XZ", "ZI", "ZX", "IZ"]),
        GateKind::Swap => (2, ["IX", "IZ", "XI", "ZI"]),
    }
}

fn build_table(kind: GateKind) -> LocalTable {
    let (k, images) = generator_images(kind);
    let imgs: Vec<PauliString> = images[..2 * k].iter().map(|s| s.parse().unwrap()).collect();
    (0..1usize << (2 * k))
        .map(|idx| {
            let mut acc = PauliString::identity(k);
            for q in 0..k {
                let letter = LETTERS[(idx >> (2 * q)) & 3];
                let (x, z) = letter.bits();
                if x {
                    acc.mul_assign_unchecked(&imgs[2 * q]);
                }
                if z {
                    acc.mul_assign_unchecked(&imgs[2 * q + 1]);
                }
                if letter == Pauli::Y {
                    // Y = i·X·Z
                    acc.mul_phase(1);
                }
            }
            let sign = acc.sign().expect("Clifford image of a Hermitian Pauli is Hermitian");
            let mut out = 0;
            for q in 0..k {
                out |= letter_index(acc.get(q)) << (2 * q);
            }
            (sign < 0, out)
        })
        .collect()
}

fn local_table(kind: GateKind) -> &'static LocalTable {
    static TABLES: OnceLock<Vec<LocalTable>> = OnceLock::new();
    let tables = TABLES.get_or_init(|| {
        [
            GateKind::H,
            GateKind::S,
            GateKind::Sdg,
            GateKind::X,
            GateKind::Y,
            GateKind::Z,
            GateKind::CX,
            GateKind::CZ,
            GateKind::Swap,
        ]
        .into_iter()
        .map(build_table)
        .collect()
    });
    &tables[kind as usize]
}

/// Direction of conjugation by a Clifford `W`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `W p W†`
    Forward,
    /// `W† p W`
    Adjoint,
}

/// Images of `X_j` and `Z_j` under `W · W†`, with the inverse cached.
#[derive(Clone, PartialEq, Eq)]
pub struct CliffordTableau {
    n: usize,
    x_images: Vec<PauliString>,
    z_images: Vec<PauliString>,
    inv_x_images: Vec<PauliString>,
    inv_z_images: Vec<PauliString>,
}

impl fmt::Debug for CliffordTableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CliffordTableau").field("x_images", &self.x_images).field("z_images", &self.z_images).finish()
    }
}

fn identity_images(n: usize) -> (Vec<PauliString>, Vec<PauliString>) {
    (
        (0..n).map(|j| PauliString::single(n, j, Pauli::X)).collect(),
        (0..n).map(|j| PauliString::single(n, j, Pauli::Z)).collect(),
    )
}

fn conjugate_with(x_images: &[PauliString], z_images: &[PauliString], p: &PauliString) -> PauliString {
    let n = p.n();
    let mut acc = PauliString::identity(n);
    let xw = p.x_words();
    let zw = p.z_words();
    for (w, (&xword, &zword)) in xw.iter().zip(zw).enumerate() {
        let mut bits = xword | zword;
        while bits != 0 {
            let b = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let j = w * 64 + b;
            if (xword >> b) & 1 == 1 {
                acc.mul_assign_unchecked(&x_images[j]);
            }
            if (zword >> b) & 1 == 1 {
                acc.mul_assign_unchecked(&z_images[j]);
            }
        }
    }
    acc.mul_phase(p.phase_exp());
    acc
}

impl CliffordTableau {
    pub fn identity(n: usize) -> Self {
        let (x, z) = identity_images(n);
        Self { n, x_images: x.clone(), z_images: z.clone(), inv_x_images: x, inv_z_images: z }
    }

    /// Tableau of the gates applied in list order.
    pub fn from_gates(n: usize, gates: &[CliffordGate]) -> Result<Self> {
        for g in gates {
            g.check(n)?;
        }
        let (mut x, mut z) = identity_images(n);
        for g in gates {
            for p in x.iter_mut().chain(z.iter_mut()) {
                g.conjugate_in_place(p);
            }
        }
        let (mut ix, mut iz) = identity_images(n);
        for g in gates.iter().rev() {
            let inv = g.inverse();
            for p in ix.iter_mut().chain(iz.iter_mut()) {
                inv.conjugate_in_place(p);
            }
        }
        Ok(Self { n, x_images: x, z_images: z, inv_x_images: ix, inv_z_images: iz })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_image(&self, j: usize) -> &PauliString {
        &self.x_images[j]
    }

    pub fn z_image(&self, j: usize) -> &PauliString {
        &self.z_images[j]
    }

    pub fn inverse(&self) -> Self {
        Self {
            n: self.n,
            x_images: self.inv_x_images.clone(),
            z_images: self.inv_z_images.clone(),
            inv_x_images: self.x_images.clone(),
            inv_z_images: self.z_images.clone(),
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.n)
    }

    pub fn conjugate(&self, p: &PauliString, direction: Direction) -> Result<PauliString> {
        if p.n() != self.n {
            return Err(Error::SizeMismatch { expected: self.n, found: p.n() });
        }
        Ok(self.conjugate_unchecked(p, direction))
    }

    pub(crate) fn conjugate_unchecked(&self, p: &PauliString, direction: Direction) -> PauliString {
        match direction {
            Direction::Forward => conjugate_with(&self.x_images, &self.z_images, p),
            Direction::Adjoint => conjugate_with(&self.inv_x_images, &self.inv_z_images, p),
        }
    }

    /// Tableau of "apply `self`, then `next`".
    pub fn compose(&self, next: &Self) -> Result<Self> {
        if self.n != next.n {
            return Err(Error::SizeMismatch { expected: self.n, found: next.n });
        }
        let fwd = |p: &PauliString| next.conjugate_unchecked(p, Direction::Forward);
        let inv = |p: &PauliString| self.conjugate_unchecked(p, Direction::Adjoint);
        Ok(Self {
            n: self.n,
            x_images: self.x_images.iter().map(fwd).collect(),
            z_images: self.z_images.iter().map(fwd).collect(),
            inv_x_images: next.inv_x_images.iter().map(inv).collect(),
            inv_z_images: next.inv_z_images.iter().map(inv).collect(),
        })
    }

    /// Symplectic form check on the generator images.
    pub fn is_symplectic(&self) -> bool {
        let gens: Vec<&PauliString> = self.x_images.iter().chain(&self.z_images).collect();
        let n = self.n;
        for a in 0..2 * n {
            for b in 0..2 * n {
                // X_j anticommutes with Z_j only
                let expected = !(a % n == b % n && (a < n) != (b < n));
                if gens[a].commutes_unchecked(gens[b]) != expected {
                    return false;
                }
            }
        }
        gens.iter().all(|p| p.is_hermitian())
    }
}
