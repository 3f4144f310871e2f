//! Pauli-diagonal noise channels and their spectral gap.
//!
//! Depolarizing convention: `ρ ↦ (1−p)·ρ + p·Tr_S(ρ)⊗I_S/2^k` on a support `S`
//! of `k` qubits. Every Pauli acting non-trivially on `S` is damped by `1−p`,
//! so the spectral gap is `p`. A channel quoted as `1 − 3p'/4` on single-qubit
//! Paulis corresponds to `p = 3p'/4` here.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString, SupportMask};

/// How the transfer eigenvalue of a Pauli is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EigenRule {
    Depolarizing {
        p: f64,
    },
    /// Keys are letter patterns over the support qubits in ascending order.
    ExplicitTable(BTreeMap<String, f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseChannel {
    support: SupportMask,
    qubits: Vec<usize>,
    rule: EigenRule,
}

/// `γ = 1 − max_{|e|≠1} |e|`, with the empty maximum taken as 0.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SpectralGap(pub f64);

impl SpectralGap {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Letters for index `i` of the local Pauli basis on `k` qubits.
///
/// Digit `m` (base 4, least significant first) is the letter on the `m`-th
/// support qubit, in the order `I, X, Y, Z`.
pub fn local_pattern(k: usize, index: usize) -> String {
    (0..k)
        .map(|m| match (index >> (2 * m)) & 3 {
            0 => 'I',
            1 => 'X',
            2 => 'Y',
            _ => 'Z',
        })
        .collect()
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::InvalidProbability(p));
    }
    Ok(())
}

impl NoiseChannel {
    pub fn depolarizing(support: SupportMask, p: f64) -> Result<Self> {
        check_probability(p)?;
        let qubits = support.iter().collect();
        Ok(Self { support, qubits, rule: EigenRule::Depolarizing { p } })
    }

    /// Channel with the given eigenvalues; the identity pattern is forced to 1.
    pub fn explicit(support: SupportMask, table: BTreeMap<String, f64>) -> Result<Self> {
        let qubits: Vec<usize> = support.iter().collect();
        let k = qubits.len();
        let identity = "I".repeat(k);
        let mut clean = BTreeMap::new();
        for (key, &e) in &table {
            let key = key.trim().to_ascii_uppercase();
            if key.len() != k || key.chars().any(|c| Pauli::from_char(c).is_none()) {
                return Err(Error::InvalidLiteral(key));
            }
            if !e.is_finite() || e.abs() > 1.0 + 1e-12 {
                return Err(Error::InvalidArgument(format!("eigenvalue {e} for {key}")));
            }
            if key == identity && (e - 1.0).abs() > 1e-12 {
                return Err(Error::NotTracePreserving);
            }
            clean.insert(key, e);
        }
        clean.insert(identity, 1.0);
        Ok(Self { support, qubits, rule: EigenRule::ExplicitTable(clean) })
    }

    pub fn support(&self) -> &SupportMask {
        &self.support
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn rule(&self) -> &EigenRule {
        &self.rule
    }

    pub fn is_identity_channel(&self) -> bool {
        match &self.rule {
            EigenRule::Depolarizing { p } => *p == 0.0,
            EigenRule::ExplicitTable(t) => t.values().all(|&e| e == 1.0),
        }
    }

    /// Transfer eigenvalue of `p` restricted to the channel support.
    pub fn eigenvalue(&self, p: &PauliString) -> Result<f64> {
        if p.n() != self.support.n() {
            return Err(Error::SizeMismatch { expected: self.support.n(), found: p.n() });
        }
        self.eigenvalue_unchecked(p)
    }

    pub(crate) fn eigenvalue_unchecked(&self, p: &PauliString) -> Result<f64> {
        if p.is_identity_on(&self.support) {
            return Ok(1.0);
        }
        match &self.rule {
            EigenRule::Depolarizing { p: prob } => Ok(1.0 - prob),
            EigenRule::ExplicitTable(table) => {
                let pattern: String = self.qubits.iter().map(|&q| p.get(q).as_char()).collect();
                table.get(&pattern).copied().ok_or(Error::MissingPattern(pattern))
            }
        }
    }

    pub fn spectral_gap(&self) -> SpectralGap {
        let max_sub_unit = match &self.rule {
            EigenRule::Depolarizing { p } => {
                let e = (1.0 - p).abs();
                if e != 1.0 {
                    e
                } else {
                    0.0
                }
            }
            EigenRule::ExplicitTable(t) => t.values().map(|e| e.abs()).filter(|&e| e != 1.0).fold(0.0, f64::max),
        };
        SpectralGap(1.0 - max_sub_unit)
    }

    /// True when every Pauli non-trivial on the support is strictly damped.
    pub fn satisfies_gap_assumption(&self) -> bool {
        match &self.rule {
            EigenRule::Depolarizing { p } => *p > 0.0,
            EigenRule::ExplicitTable(t) => {
                let k = self.qubits.len();
                (1..1usize << (2 * k)).all(|i| t.get(&local_pattern(k, i)).is_some_and(|e| e.abs() < 1.0))
            }
        }
    }

    /// Eigenvalues in local basis order (see [`local_pattern`]).
    pub fn diagonal(&self) -> Result<Vec<f64>> {
        let k = self.qubits.len();
        let n = self.support.n();
        (0..1usize << (2 * k))
            .map(|i| {
                let pattern = local_pattern(k, i);
                let mut p = PauliString::identity(n);
                for (m, c) in pattern.chars().enumerate() {
                    p.set(self.qubits[m], Pauli::from_char(c).unwrap());
                }
                self.eigenvalue_unchecked(&p)
            })
            .collect()
    }

    /// JSON object mapping local Pauli literals to eigenvalues.
    pub fn table_json(&self) -> Result<serde_json::Value> {
        let k = self.qubits.len();
        let diag = self.diagonal()?;
        let map: serde_json::Map<String, serde_json::Value> =
            diag.into_iter().enumerate().map(|(i, e)| (local_pattern(k, i), serde_json::json!(e))).collect();
        Ok(serde_json::Value::Object(map))
    }

    pub fn from_table_json(support: SupportMask, json: &serde_json::Value) -> Result<Self> {
        let obj = json.as_object().ok_or_else(|| Error::InvalidArgument("noise table must be a JSON object".into()))?;
        let mut table = BTreeMap::new();
        for (k, v) in obj {
            let e = v.as_f64().ok_or_else(|| Error::InvalidArgument(format!("eigenvalue for {k} is not a number")))?;
            table.insert(k.clone(), e);
        }
        Self::explicit(support, table)
    }
}

/// Keeps the diagonal of a Pauli transfer matrix on `support`.
///
/// `transfer[i][j] = Tr(P_i Φ(P_j)) / 2^k` in local basis order. The residual
/// is the largest discarded off-diagonal magnitude.
pub fn dephase_diagonal(transfer: &[Vec<f64>], support: SupportMask) -> Result<(NoiseChannel, f64)> {
    let k = support.len();
    let d = 1usize << (2 * k);
    if transfer.len() != d || transfer.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidArgument(format!("transfer matrix must be {d}×{d}")));
    }
    for (j, &t) in transfer[0].iter().enumerate() {
        let expected = if j == 0 { 1.0 } else { 0.0 };
        if (t - expected).abs() > 1e-12 {
            return Err(Error::NotTracePreserving);
        }
    }
    let mut residual: f64 = 0.0;
    for (i, row) in transfer.iter().enumerate() {
        for (j, &t) in row.iter().enumerate() {
            if i != j {
                residual = residual.max(t.abs());
            }
        }
    }
    let table = (0..d).map(|i| (local_pattern(k, i), transfer[i][i])).collect();
    Ok((NoiseChannel::explicit(support, table)?, residual))
}
