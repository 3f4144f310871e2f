//! Exact n-qubit Pauli algebra on symplectic bit vectors.
//!
//! A [`PauliString`] stores the operator `i^phase · ⊗_j X^{x_j} Z^{z_j}`. The
//! phase is kept in this X-then-Z ordering internally; the textual form uses
//! the usual letters with `Y = i·X·Z`, so the letter phase of a Hermitian
//! operator is always `±1`.

use std::fmt;
use std::str::FromStr;

use smallvec::SmallVec;

use crate::error::{Error, Result};

pub(crate) type Words = SmallVec<[u64; 1]>;

#[inline]
pub(crate) fn word_count(n: usize) -> usize {
    n.div_ceil(64).max(1)
}

#[inline]
fn get_bit(words: &[u64], j: usize) -> bool {
    (words[j / 64] >> (j % 64)) & 1 == 1
}

#[inline]
fn set_bit(words: &mut [u64], j: usize, value: bool) {
    let mask = 1u64 << (j % 64);
    if value {
        words[j / 64] |= mask;
    } else {
        words[j / 64] &= !mask;
    }
}

#[inline]
fn and_parity(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones()).sum::<u32>() & 1
}

#[inline]
fn and_count(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones()).sum()
}

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// Set of qubits an operator, layer or channel acts on.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SupportMask {
    n: usize,
    words: Words,
}

impl SupportMask {
    pub fn empty(n: usize) -> Self {
        Self { n, words: SmallVec::from_elem(0, word_count(n)) }
    }

    pub fn full(n: usize) -> Self {
        let mut m = Self::empty(n);
        for j in 0..n {
            m.insert(j);
        }
        m
    }

    pub fn from_qubits(n: usize, qubits: &[usize]) -> Result<Self> {
        let mut m = Self::empty(n);
        for &q in qubits {
            if q >= n {
                return Err(Error::QubitOutOfRange { qubit: q, n });
            }
            m.insert(q);
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn insert(&mut self, j: usize) {
        set_bit(&mut self.words, j, true);
    }

    pub fn contains(&self, j: usize) -> bool {
        j < self.n && get_bit(&self.words, j)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| get_bit(&self.words, j))
    }

    pub fn intersects(&self, other: &SupportMask) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }
}

impl fmt::Debug for SupportMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Assignment of bit values to a subset of the qubits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialAssignment {
    mask: SupportMask,
    values: Words,
}

impl PartialAssignment {
    /// Fixes the first `bits.len()` qubits to the given values.
    pub fn prefix(n: usize, bits: &[bool]) -> Result<Self> {
        if bits.len() > n {
            return Err(Error::SizeMismatch { expected: n, found: bits.len() });
        }
        let mut mask = SupportMask::empty(n);
        let mut values: Words = SmallVec::from_elem(0, word_count(n));
        for (j, &b) in bits.iter().enumerate() {
            mask.insert(j);
            set_bit(&mut values, j, b);
        }
        Ok(Self { mask, values })
    }

    pub fn from_pairs(n: usize, pairs: &[(usize, bool)]) -> Result<Self> {
        let mut mask = SupportMask::empty(n);
        let mut values: Words = SmallVec::from_elem(0, word_count(n));
        for &(q, b) in pairs {
            if q >= n {
                return Err(Error::QubitOutOfRange { qubit: q, n });
            }
            mask.insert(q);
            set_bit(&mut values, q, b);
        }
        Ok(Self { mask, values })
    }

    pub fn mask(&self) -> &SupportMask {
        &self.mask
    }

    /// Qubits not fixed by this assignment.
    pub fn complement(&self) -> SupportMask {
        let mut m = SupportMask::empty(self.mask.n);
        for j in 0..self.mask.n {
            if !self.mask.contains(j) {
                m.insert(j);
            }
        }
        m
    }

    pub(crate) fn values(&self) -> &[u64] {
        &self.values
    }
}

/// Computational basis state `|x⟩`; bit `j` is the value of qubit `j`.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    n: usize,
    words: Words,
}

impl BitString {
    pub fn zeros(n: usize) -> Self {
        Self { n, words: SmallVec::from_elem(0, word_count(n)) }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut s = Self::zeros(bits.len());
        for (j, &b) in bits.iter().enumerate() {
            set_bit(&mut s.words, j, b);
        }
        s
    }

    /// Bit `j` of `index` becomes qubit `j`.
    pub fn from_index(n: usize, index: u64) -> Self {
        let mut s = Self::zeros(n);
        for j in 0..n.min(64) {
            set_bit(&mut s.words, j, (index >> j) & 1 == 1);
        }
        s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, j: usize) -> bool {
        get_bit(&self.words, j)
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.n).map(|j| self.get(j)).collect()
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.n {
            f.write_str(if self.get(j) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{self}⟩")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::InvalidLiteral(s.to_string())),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_bools(&bits))
    }
}

/// n-qubit Pauli operator with exact phase.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: Words,
    z: Words,
    /// Power of `i` in front of `⊗ X^x Z^z`.
    phase: u8,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        let w = word_count(n);
        Self { n, x: SmallVec::from_elem(0, w), z: SmallVec::from_elem(0, w), phase: 0 }
    }

    /// A single letter on qubit `q`, identity elsewhere.
    pub fn single(n: usize, q: usize, p: Pauli) -> Self {
        let mut s = Self::identity(n);
        s.set(q, p);
        s
    }

    /// Builds `i^phase · ⊗ X^x Z^z` from raw masks.
    pub fn from_masks(n: usize, x: &[bool], z: &[bool], phase: u8) -> Result<Self> {
        if x.len() != n || z.len() != n {
            return Err(Error::SizeMismatch { expected: n, found: x.len().max(z.len()) });
        }
        let mut s = Self::identity(n);
        for j in 0..n {
            set_bit(&mut s.x, j, x[j]);
            set_bit(&mut s.z, j, z[j]);
        }
        s.phase = phase & 3;
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn phase_exp(&self) -> u8 {
        self.phase
    }

    pub fn get(&self, j: usize) -> Pauli {
        Pauli::from_bits(get_bit(&self.x, j), get_bit(&self.z, j))
    }

    /// Replaces the letter on qubit `j`, keeping the letter-form phase.
    pub fn set(&mut self, j: usize, p: Pauli) {
        let old_y = self.get(j) == Pauli::Y;
        let (x, z) = p.bits();
        set_bit(&mut self.x, j, x);
        set_bit(&mut self.z, j, z);
        let new_y = p == Pauli::Y;
        self.phase = (self.phase + new_y as u8 + 4 - old_y as u8) & 3;
    }

    pub fn x_bit(&self, j: usize) -> bool {
        get_bit(&self.x, j)
    }

    pub fn z_bit(&self, j: usize) -> bool {
        get_bit(&self.z, j)
    }

    pub(crate) fn x_words(&self) -> &[u64] {
        &self.x
    }

    pub(crate) fn z_words(&self) -> &[u64] {
        &self.z
    }

    fn y_count(&self) -> u32 {
        and_count(&self.x, &self.z)
    }

    /// Power of `i` multiplying the letter form (`Y` counted as a letter).
    pub fn letter_phase(&self) -> u8 {
        ((self.phase as u32 + 4 - (self.y_count() & 3)) & 3) as u8
    }

    pub fn is_hermitian(&self) -> bool {
        self.letter_phase() & 1 == 0
    }

    /// `+1` or `-1` for a Hermitian operator.
    pub fn sign(&self) -> Result<i8> {
        match self.letter_phase() {
            0 => Ok(1),
            2 => Ok(-1),
            _ => Err(Error::NonHermitian(self.to_string())),
        }
    }

    /// Same letters with letter phase reset to `+1`.
    pub fn unsigned(&self) -> Self {
        let mut s = self.clone();
        s.phase = (self.y_count() & 3) as u8;
        s
    }

    /// Splits a Hermitian operator into its sign and unsigned letters.
    pub fn split_sign(&self) -> Result<(i8, Self)> {
        Ok((self.sign()?, self.unsigned()))
    }

    /// Multiplies by `i^k`.
    pub(crate) fn mul_phase(&mut self, k: u8) {
        self.phase = (self.phase + k) & 3;
    }

    pub fn negate(&mut self) {
        self.phase = (self.phase + 2) & 3;
    }

    pub fn negated(&self) -> Self {
        let mut s = self.clone();
        s.negate();
        s
    }

    /// True when all letters are `I` (any phase).
    pub fn is_identity_letters(&self) -> bool {
        self.x.iter().chain(&self.z).all(|&w| w == 0)
    }

    /// True only for `+I`.
    pub fn is_identity(&self) -> bool {
        self.is_identity_letters() && self.phase == 0
    }

    pub fn weight(&self) -> usize {
        self.x.iter().zip(&self.z).map(|(a, b)| (a | b).count_ones() as usize).sum()
    }

    pub fn support(&self) -> SupportMask {
        let words = self.x.iter().zip(&self.z).map(|(a, b)| a | b).collect();
        SupportMask { n: self.n, words }
    }

    /// True when the operator has no `X`/`Y` letters.
    pub fn is_diagonal(&self) -> bool {
        self.x.iter().all(|&w| w == 0)
    }

    /// True when every letter on `mask` is `I`.
    pub fn is_identity_on(&self, mask: &SupportMask) -> bool {
        self.x.iter().zip(&self.z).zip(mask.words()).all(|((a, b), m)| (a | b) & m == 0)
    }

    pub fn letters(&self) -> String {
        (0..self.n).map(|j| self.get(j).as_char()).collect()
    }

    fn check_size(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::SizeMismatch { expected: self.n, found: other.n });
        }
        Ok(())
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_size(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &Self) -> Self {
        // Z^{z1} X^{x2} = (-1)^{|z1 & x2|} X^{x2} Z^{z1}
        let swaps = and_parity(&self.z, &other.x) as u8;
        let x = self.x.iter().zip(&other.x).map(|(a, b)| a ^ b).collect();
        let z = self.z.iter().zip(&other.z).map(|(a, b)| a ^ b).collect();
        Self { n: self.n, x, z, phase: (self.phase + other.phase + 2 * swaps) & 3 }
    }

    pub(crate) fn mul_assign_unchecked(&mut self, other: &Self) {
        let swaps = and_parity(&self.z, &other.x) as u8;
        for (a, b) in self.x.iter_mut().zip(&other.x) {
            *a ^= b;
        }
        for (a, b) in self.z.iter_mut().zip(&other.z) {
            *a ^= b;
        }
        self.phase = (self.phase + other.phase + 2 * swaps) & 3;
    }

    /// Group inverse (the adjoint, since Paulis are unitary).
    pub fn inverse(&self) -> Self {
        // (i^a X^x Z^z)^† = i^{-a} (-1)^{|x&z|} X^x Z^z
        let mut s = self.clone();
        s.phase = ((4 - self.phase) + 2 * (self.y_count() & 1) as u8) & 3;
        s
    }

    pub fn commutes(&self, other: &Self) -> Result<bool> {
        self.check_size(other)?;
        Ok(self.commutes_unchecked(other))
    }

    #[inline]
    pub(crate) fn commutes_unchecked(&self, other: &Self) -> bool {
        (and_parity(&self.x, &other.z) ^ and_parity(&self.z, &other.x)) == 0
    }

    /// Partner `q = i·axis·p` such that
    /// `e^{iθ·axis} p e^{-iθ·axis} = cos(2θ)·p + sin(2θ)·q`.
    pub fn branch_partner(axis: &Self, p: &Self) -> Result<Self> {
        axis.check_size(p)?;
        if !axis.is_hermitian() {
            return Err(Error::NonHermitian(axis.to_string()));
        }
        if !p.is_hermitian() {
            return Err(Error::NonHermitian(p.to_string()));
        }
        if axis.commutes_unchecked(p) {
            return Err(Error::Commuting { a: axis.to_string(), b: p.to_string() });
        }
        Ok(Self::branch_partner_unchecked(axis, p))
    }

    pub(crate) fn branch_partner_unchecked(axis: &Self, p: &Self) -> Self {
        let mut q = axis.mul_unchecked(p);
        q.phase = (q.phase + 1) & 3;
        q
    }

    /// `⟨x|p|x⟩` for the unnormalised operator.
    pub fn diag_element(&self, x: &BitString) -> Result<i8> {
        if x.n() != self.n {
            return Err(Error::SizeMismatch { expected: self.n, found: x.n() });
        }
        let sign = self.sign()?;
        Ok(self.diag_element_unchecked(sign, x.words()))
    }

    #[inline]
    pub(crate) fn diag_element_unchecked(&self, sign: i8, x: &[u64]) -> i8 {
        if !self.is_diagonal() {
            return 0;
        }
        if and_parity(&self.z, x) == 1 {
            -sign
        } else {
            sign
        }
    }

    /// Sum of `⟨x|p|x⟩` over all completions of the `free` qubits.
    pub fn marginal_sum(&self, fixed: &PartialAssignment, free: &SupportMask) -> Result<f64> {
        if fixed.mask().n() != self.n || free.n() != self.n {
            return Err(Error::SizeMismatch { expected: self.n, found: free.n() });
        }
        if fixed.mask().intersects(free) || fixed.mask().len() + free.len() != self.n {
            return Err(Error::InvalidPartition);
        }
        let sign = self.sign()?;
        if !self.is_diagonal() || !self.is_identity_on(free) {
            return Ok(0.0);
        }
        let parity = and_parity(&self.z, fixed.values());
        let magnitude = (free.len() as f64).exp2();
        Ok(if parity == 1 { -(sign as f64) * magnitude } else { sign as f64 * magnitude })
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.letter_phase() {
            0 => "",
            1 => "i",
            2 => "-",
            _ => "-i",
        };
        write!(f, "{prefix}{}", self.letters())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Parses `[+|-]LETTERS`, leftmost letter on qubit 0.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let (negative, body) = match t.as_bytes().first() {
            Some(b'-') => (true, &t[1..]),
            Some(b'+') => (false, &t[1..]),
            _ => (false, t),
        };
        if body.is_empty() {
            return Err(Error::InvalidLiteral(s.to_string()));
        }
        let letters = body
            .chars()
            .map(|c| Pauli::from_char(c).ok_or_else(|| Error::InvalidLiteral(s.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let mut p = Self::identity(letters.len());
        for (j, &l) in letters.iter().enumerate() {
            p.set(j, l);
        }
        if negative {
            p.negate();
        }
        Ok(p)
    }
}

/// Parses a Pauli literal, panicking on malformed input. Test helper.
#[cfg(test)]
pub(crate) fn lit(s: &str) -> PauliString {
    s.parse().unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{dense_pauli, mat_eq, mat_mul, CMat};
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn with_phase(p: PauliString, letter_phase: u8) -> PauliString {
        let mut q = p.unsigned();
        q.phase = (q.phase + letter_phase) & 3;
        q
    }

    #[test]
    fn mul_single_qubit_table() {
        assert_eq!(lit("X").mul(&lit("Y")).unwrap(), with_phase(lit("Z"), 1));
        assert_eq!(lit("X").mul(&lit("X")).unwrap(), lit("I"));
        assert_eq!(lit("XZ").mul(&lit("ZZ")).unwrap(), with_phase(lit("YI"), 3));
    }

    #[test]
    fn mul_size_mismatch() {
        assert!(matches!(lit("X").mul(&lit("XX")), Err(Error::SizeMismatch { .. })));
        assert!(lit("X").commutes(&lit("XX")).is_err());
    }

    #[test]
    fn commutation_examples() {
        assert!(!lit("X").commutes(&lit("Z")).unwrap());
        assert!(lit("XX").commutes(&lit("ZZ")).unwrap());
        assert!(lit("IZ").commutes(&lit("XI")).unwrap());
    }

    // Oracle: e^{iθA} P e^{-iθA} at θ = π/4 equals the sin-coefficient partner.
    fn conjugation_oracle(axis: &PauliString, p: &PauliString) -> CMat {
        let a = dense_pauli(axis);
        let pm = dense_pauli(p);
        let d = a.len();
        let t = std::f64::consts::FRAC_PI_4;
        let mut u = vec![vec![Complex64::new(0.0, 0.0); d]; d];
        let mut ud = u.clone();
        for r in 0..d {
            for c in 0..d {
                let id = if r == c { t.cos() } else { 0.0 };
                u[r][c] = Complex64::new(id, 0.0) + Complex64::new(0.0, t.sin()) * a[r][c];
                ud[r][c] = Complex64::new(id, 0.0) - Complex64::new(0.0, t.sin()) * a[r][c];
            }
        }
        mat_mul(&mat_mul(&u, &pm), &ud)
    }

    #[test]
    fn branch_partner_matches_matrix_conjugation() {
        for (axis, p, expected) in [("Z", "X", "-Y"), ("Z", "Y", "X"), ("X", "Z", "Y")] {
            let q = PauliString::branch_partner(&lit(axis), &lit(p)).unwrap();
            assert_eq!(q, lit(expected), "{axis} {p}");
            assert!(mat_eq(&conjugation_oracle(&lit(axis), &lit(p)), &dense_pauli(&q), 1e-12));
        }
    }

    #[test]
    fn branch_partner_errors() {
        assert!(matches!(PauliString::branch_partner(&lit("Z"), &lit("Z")), Err(Error::Commuting { .. })));
        let non_herm = with_phase(lit("X"), 1);
        assert!(matches!(PauliString::branch_partner(&lit("Z"), &non_herm), Err(Error::NonHermitian(_))));
    }

    #[test]
    fn diag_examples() {
        assert_eq!(lit("Z").diag_element(&"1".parse().unwrap()).unwrap(), -1);
        assert_eq!(lit("X").diag_element(&"0".parse().unwrap()).unwrap(), 0);
        assert_eq!(lit("ZI").diag_element(&"10".parse().unwrap()).unwrap(), -1);
        assert_eq!(lit("-ZZ").diag_element(&"10".parse().unwrap()).unwrap(), 1);
    }

    #[test]
    fn marginal_examples() {
        let fixed = PartialAssignment::prefix(2, &[false]).unwrap();
        let free = fixed.complement();
        assert_eq!(lit("ZI").marginal_sum(&fixed, &free).unwrap(), 2.0);
        assert_eq!(lit("IZ").marginal_sum(&fixed, &free).unwrap(), 0.0);
        assert_eq!(lit("XI").marginal_sum(&fixed, &free).unwrap(), 0.0);
        let fixed1 = PartialAssignment::prefix(2, &[true]).unwrap();
        assert_eq!(lit("XI").marginal_sum(&fixed1, &fixed1.complement()).unwrap(), 0.0);
    }

    #[test]
    fn marginal_rejects_overlap() {
        let fixed = PartialAssignment::prefix(2, &[false]).unwrap();
        let free = SupportMask::full(2);
        assert!(matches!(lit("ZI").marginal_sum(&fixed, &free), Err(Error::InvalidPartition)));
    }

    #[test]
    fn literal_round_trip() {
        for s in ["-YZI", "XYZ", "I", "-Z"] {
            assert_eq!(lit(s).to_string(), s);
        }
        assert_eq!(lit("+X").to_string(), "X");
        assert!("XQ".parse::<PauliString>().is_err());
        assert!("-".parse::<PauliString>().is_err());
        let p = lit("-YZI");
        assert_eq!(p.get(0), Pauli::Y);
        assert_eq!(p.sign().unwrap(), -1);
    }

    #[test]
    fn many_qubit_words() {
        let n = 130;
        let mut p = PauliString::identity(n);
        p.set(0, Pauli::X);
        p.set(129, Pauli::Z);
        let mut q = PauliString::identity(n);
        q.set(129, Pauli::X);
        assert!(!p.commutes(&q).unwrap());
        assert_eq!(p.weight(), 2);
        assert_eq!(p.support().iter().collect::<Vec<_>>(), vec![0, 129]);
    }

    fn arb_pauli(n: usize) -> impl Strategy<Value = PauliString> {
        (proptest::collection::vec(0u8..4, n), 0u8..4).prop_map(move |(ls, ph)| {
            let mut p = PauliString::identity(n);
            for (j, l) in ls.into_iter().enumerate() {
                p.set(j, [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][l as usize]);
            }
            p.phase = (p.phase + ph) & 3;
            p
        })
    }

    fn arb_pair() -> impl Strategy<Value = (PauliString, PauliString)> {
        (1usize..=4).prop_flat_map(|n| (arb_pauli(n), arb_pauli(n)))
    }

    fn arb_triple() -> impl Strategy<Value = (PauliString, PauliString, PauliString)> {
        (1usize..=4).prop_flat_map(|n| (arb_pauli(n), arb_pauli(n), arb_pauli(n)))
    }

    fn arb_bits() -> impl Strategy<Value = (PauliString, Vec<bool>)> {
        (1usize..=5).prop_flat_map(|n| (arb_pauli(n), proptest::collection::vec(any::<bool>(), n)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn mul_matches_dense((p, q) in arb_pair()) {
            let prod = p.mul(&q).unwrap();
            let dense = mat_mul(&dense_pauli(&p), &dense_pauli(&q));
            prop_assert!(mat_eq(&dense, &dense_pauli(&prod), 0.0));
        }

        #[test]
        fn commutes_matches_products((p, q) in arb_pair()) {
            let pq = p.mul(&q).unwrap();
            let qp = q.mul(&p).unwrap();
            prop_assert_eq!(p.commutes(&q).unwrap(), pq == qp);
        }

        #[test]
        fn group_laws((p, q, r) in arb_triple()) {
            let left = p.mul(&q).unwrap().mul(&r).unwrap();
            let right = p.mul(&q.mul(&r).unwrap()).unwrap();
            prop_assert_eq!(left, right);
            prop_assert!(p.mul(&p.inverse()).unwrap().is_identity());
        }

        #[test]
        fn branch_partner_hermitian_and_twice_negates((a, p) in arb_pair()) {
            let a = a.unsigned();
            let p = p.unsigned();
            if a.commutes(&p).unwrap() {
                return Ok(());
            }
            let q = PauliString::branch_partner(&a, &p).unwrap();
            prop_assert!(q.is_hermitian());
            prop_assert!(!q.commutes(&a).unwrap());
            let qq = PauliString::branch_partner(&a, &q).unwrap();
            prop_assert_eq!(qq, p.negated());
        }

        #[test]
        fn diag_sum_vanishes_off_identity((p, _x) in arb_bits()) {
            let p = p.unsigned();
            let n = p.n();
            let total: i64 = (0..1u64 << n)
                .map(|i| p.diag_element(&BitString::from_index(n, i)).unwrap() as i64)
                .sum();
            let expected = if p.is_identity() { 1i64 << n } else { 0 };
            prop_assert_eq!(total, expected);
        }

        #[test]
        fn marginal_telescopes((p, bits) in arb_bits()) {
            let p = p.unsigned();
            let n = p.n();
            for k in 0..n {
                let fixed = PartialAssignment::prefix(n, &bits[..k]).unwrap();
                let coarse = p.marginal_sum(&fixed, &fixed.complement()).unwrap();
                let mut fine = 0.0;
                for b in [false, true] {
                    let mut longer = bits[..k].to_vec();
                    longer.push(b);
                    let f = PartialAssignment::prefix(n, &longer).unwrap();
                    fine += p.marginal_sum(&f, &f.complement()).unwrap();
                }
                prop_assert_eq!(coarse, fine);
            }
            let full = PartialAssignment::prefix(n, &bits).unwrap();
            let x = BitString::from_bools(&bits);
            prop_assert_eq!(
                p.marginal_sum(&full, &full.complement()).unwrap(),
                p.diag_element(&x).unwrap() as f64
            );
        }
    }
}
