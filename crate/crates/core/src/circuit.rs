//! Circuit intermediate representation, text format and generators.
//!
//! A circuit is an ordered list of layers applied to `|0…0⟩`: fixed Clifford
//! layers, rotations `e^{iθA}` about a Pauli axis `A`, Haar-random two-qubit
//! blocks, and Pauli-diagonal noise. Rotation angles (`tK`) and two-qubit
//! unitaries (`gK`) are indexed separately, each densely from 0.
//!
//! Text format (one statement per line, `#` starts a comment):
//!
//! ```text
//! qubits 3
//! h 0
//! cx 0 1
//! rp ZZI t0
//! haar 1 2 g0
//! noise depol1 0.05 0 2
//! noise-policy depol2 0.1
//! ```

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::clifford::{CliffordGate, CliffordTableau};
use crate::error::{Error, Result};
use crate::irrep::{haar_su4, Su4};
use crate::noise::{EigenRule, NoiseChannel};
use crate::pauli::{Pauli, PauliString, SupportMask};
use crate::rng::stream_rng;

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Clifford { gates: Vec<CliffordGate>, tableau: CliffordTableau },
    Rotation { axis: PauliString, param: usize },
    Haar { qubits: (usize, usize), param: usize },
    Noise(NoiseChannel),
}

impl Layer {
    pub fn clifford(n: usize, gates: Vec<CliffordGate>) -> Result<Self> {
        let tableau = CliffordTableau::from_gates(n, &gates)?;
        Ok(Layer::Clifford { gates, tableau })
    }

    pub fn is_parametrized(&self) -> bool {
        matches!(self, Layer::Rotation { .. } | Layer::Haar { .. })
    }

    /// Qubits acted on (empty for an empty Clifford layer).
    pub fn support(&self, n: usize) -> SupportMask {
        match self {
            Layer::Clifford { gates, .. } => {
                let qs: Vec<usize> = gates.iter().flat_map(|g| g.qubits()).filter(|&q| q < n).collect();
                SupportMask::from_qubits(n, &qs).unwrap_or_else(|_| SupportMask::empty(n))
            }
            Layer::Rotation { axis, .. } => {
                if axis.n() == n {
                    axis.support()
                } else {
                    SupportMask::empty(n)
                }
            }
            Layer::Haar { qubits: (a, b), .. } => {
                SupportMask::from_qubits(n, &[*a, *b]).unwrap_or_else(|_| SupportMask::empty(n))
            }
            Layer::Noise(ch) => ch.support().clone(),
        }
    }
}

/// Noise attached to every parametrized layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoisePolicy {
    None,
    /// Independent single-qubit depolarizing on each qubit of the layer support.
    Depol1(f64),
    /// One depolarizing channel acting jointly on the whole layer support.
    Depol2(f64),
}

impl NoisePolicy {
    pub fn channels_for(&self, support: &SupportMask) -> Result<Vec<NoiseChannel>> {
        let n = support.n();
        match *self {
            NoisePolicy::None => Ok(Vec::new()),
            NoisePolicy::Depol1(p) => {
                support.iter().map(|q| NoiseChannel::depolarizing(SupportMask::from_qubits(n, &[q])?, p)).collect()
            }
            NoisePolicy::Depol2(p) => Ok(vec![NoiseChannel::depolarizing(support.clone(), p)?]),
        }
    }

    pub fn probability(&self) -> Option<f64> {
        match *self {
            NoisePolicy::None => None,
            NoisePolicy::Depol1(p) | NoisePolicy::Depol2(p) => Some(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitIR {
    pub n: usize,
    pub layers: Vec<Layer>,
    pub noise_policy: NoisePolicy,
}

/// Flattened operation sequence with the noise policy expanded.
#[derive(Debug, Clone)]
pub(crate) enum Op {
    Clifford(CliffordTableau),
    Rotation { axis: PauliString, param: usize },
    Haar { a: usize, b: usize, param: usize },
    Noise(NoiseChannel),
}

impl Op {
    pub(crate) fn is_site(&self) -> bool {
        matches!(self, Op::Rotation { .. } | Op::Haar { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    NoLayers,
    ZeroQubits,
    LayerSize { layer: usize },
    InvalidAxis { layer: usize },
    NonHermitianAxis { layer: usize },
    DuplicateQubit { layer: usize },
    QubitOutOfRange { layer: usize, qubit: usize },
    SharedParameter { kind: char, index: usize },
    MissingParameter { kind: char, index: usize },
    InvalidNoise { layer: usize },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::NoLayers => write!(f, "circuit has no layers"),
            Diagnostic::ZeroQubits => write!(f, "circuit has no qubits"),
            Diagnostic::LayerSize { layer } => write!(f, "layer {layer}: wrong qubit count"),
            Diagnostic::InvalidAxis { layer } => write!(f, "layer {layer}: identity rotation axis"),
            Diagnostic::NonHermitianAxis { layer } => {
                write!(f, "layer {layer}: rotation axis is not Hermitian")
            }
            Diagnostic::DuplicateQubit { layer } => write!(f, "layer {layer}: repeated qubit"),
            Diagnostic::QubitOutOfRange { layer, qubit } => {
                write!(f, "layer {layer}: qubit {qubit} out of range")
            }
            Diagnostic::SharedParameter { kind, index } => {
                write!(f, "parameter {kind}{index} used by more than one layer")
            }
            Diagnostic::MissingParameter { kind, index } => {
                write!(f, "parameter {kind}{index} is never used")
            }
            Diagnostic::InvalidNoise { layer } => write!(f, "layer {layer}: invalid noise channel"),
        }
    }
}

impl CircuitIR {
    pub fn new(n: usize) -> Self {
        Self { n, layers: Vec::new(), noise_policy: NoisePolicy::None }
    }

    /// Appends a Clifford gate, merging it into a trailing Clifford layer.
    pub fn push_gate(&mut self, gate: CliffordGate) -> Result<()> {
        gate.check(self.n)?;
        if let Some(Layer::Clifford { gates, .. }) = self.layers.last_mut() {
            gates.push(gate);
            let gates = std::mem::take(gates);
            *self.layers.last_mut().unwrap() = Layer::clifford(self.n, gates)?;
            return Ok(());
        }
        self.layers.push(Layer::clifford(self.n, vec![gate])?);
        Ok(())
    }

    pub fn push_rotation(&mut self, axis: PauliString, param: usize) {
        self.layers.push(Layer::Rotation { axis, param });
    }

    pub fn push_haar(&mut self, a: usize, b: usize, param: usize) {
        self.layers.push(Layer::Haar { qubits: (a, b), param });
    }

    pub fn push_noise(&mut self, channel: NoiseChannel) {
        self.layers.push(Layer::Noise(channel));
    }

    pub fn num_thetas(&self) -> usize {
        self.layers
            .iter()
            .filter_map(|l| match l {
                Layer::Rotation { param, .. } => Some(param + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn num_su4s(&self) -> usize {
        self.layers
            .iter()
            .filter_map(|l| match l {
                Layer::Haar { param, .. } => Some(param + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn num_parametrized(&self) -> usize {
        self.layers.iter().filter(|l| l.is_parametrized()).count()
    }

    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        if self.n == 0 {
            diags.push(Diagnostic::ZeroQubits);
        }
        if self.layers.is_empty() {
            diags.push(Diagnostic::NoLayers);
        }
        let mut thetas = Vec::new();
        let mut su4s = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            match layer {
                Layer::Clifford { gates, tableau } => {
                    if tableau.n() != self.n {
                        diags.push(Diagnostic::LayerSize { layer: i });
                    }
                    for g in gates {
                        for q in g.qubits() {
                            if q >= self.n {
                                diags.push(Diagnostic::QubitOutOfRange { layer: i, qubit: q });
                            }
                        }
                        let qs = g.qubits();
                        if qs.len() == 2 && qs[0] == qs[1] {
                            diags.push(Diagnostic::DuplicateQubit { layer: i });
                        }
                    }
                }
                Layer::Rotation { axis, param } => {
                    if axis.n() != self.n {
                        diags.push(Diagnostic::LayerSize { layer: i });
                    } else if axis.is_identity_letters() {
                        diags.push(Diagnostic::InvalidAxis { layer: i });
                    } else if !axis.is_hermitian() {
                        diags.push(Diagnostic::NonHermitianAxis { layer: i });
                    }
                    thetas.push(*param);
                }
                Layer::Haar { qubits: (a, b), param } => {
                    for q in [*a, *b] {
                        if q >= self.n {
                            diags.push(Diagnostic::QubitOutOfRange { layer: i, qubit: q });
                        }
                    }
                    if a == b {
                        diags.push(Diagnostic::DuplicateQubit { layer: i });
                    }
                    su4s.push(*param);
                }
                Layer::Noise(ch) => {
                    if ch.support().n() != self.n || ch.support().is_empty() {
                        diags.push(Diagnostic::InvalidNoise { layer: i });
                    }
                }
            }
        }
        for (kind, used) in [('t', thetas), ('g', su4s)] {
            let mut seen = BTreeSet::new();
            let mut shared = BTreeSet::new();
            for &k in &used {
                if !seen.insert(k) {
                    shared.insert(k);
                }
            }
            for index in shared {
                diags.push(Diagnostic::SharedParameter { kind, index });
            }
            if let Some(&max) = seen.iter().next_back() {
                for index in 0..max {
                    if !seen.contains(&index) {
                        diags.push(Diagnostic::MissingParameter { kind, index });
                    }
                }
            }
        }
        diags
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let diags = self.validate();
        if diags.is_empty() {
            Ok(())
        } else {
            let msg = diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ");
            Err(Error::InvalidCircuit(msg))
        }
    }

    /// Layers with the noise policy expanded into explicit channels.
    pub(crate) fn ops(&self) -> Result<Vec<Op>> {
        let mut ops = Vec::with_capacity(self.layers.len() * 2);
        for layer in &self.layers {
            match layer {
                Layer::Clifford { tableau, .. } => {
                    if !tableau.is_identity() {
                        ops.push(Op::Clifford(tableau.clone()));
                    }
                }
                Layer::Rotation { axis, param } => {
                    ops.push(Op::Rotation { axis: axis.unsigned(), param: *param });
                    if axis.sign()? < 0 {
                        return Err(Error::InvalidCircuit(
                            "negative rotation axes are not supported; negate the angle".into(),
                        ));
                    }
                }
                Layer::Haar { qubits: (a, b), param } => ops.push(Op::Haar { a: *a, b: *b, param: *param }),
                Layer::Noise(ch) => {
                    if !ch.is_identity_channel() {
                        ops.push(Op::Noise(ch.clone()));
                    }
                }
            }
            if layer.is_parametrized() {
                for ch in self.noise_policy.channels_for(&layer.support(self.n))? {
                    if !ch.is_identity_channel() {
                        ops.push(Op::Noise(ch));
                    }
                }
            }
        }
        Ok(ops)
    }

    /// All noise channels in application order, including policy channels.
    pub fn resolved_channels(&self) -> Result<Vec<NoiseChannel>> {
        Ok(self
            .ops()?
            .into_iter()
            .filter_map(|op| match op {
                Op::Noise(ch) => Some(ch),
                _ => None,
            })
            .collect())
    }

    /// Spectral gap of the weakest channel, 1 for a noiseless circuit.
    pub fn min_spectral_gap(&self) -> Result<f64> {
        Ok(self.resolved_channels()?.iter().map(|c| c.spectral_gap().value()).fold(1.0, f64::min))
    }

    pub fn parse(text: &str) -> Result<Self> {
        parse(text)
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        writeln!(out, "qubits {}", self.n).unwrap();
        for layer in &self.layers {
            match layer {
                Layer::Clifford { gates, .. } => {
                    if gates.is_empty() {
                        writeln!(out, "barrier").unwrap();
                    }
                    for g in gates {
                        writeln!(out, "{g}").unwrap();
                    }
                }
                Layer::Rotation { axis, param } => writeln!(out, "rp {axis} t{param}").unwrap(),
                Layer::Haar { qubits: (a, b), param } => writeln!(out, "haar {a} {b} g{param}").unwrap(),
                Layer::Noise(ch) => match ch.rule() {
                    EigenRule::Depolarizing { p } => {
                        let kind = if ch.qubits().len() == 1 { "depol1" } else { "depol2" };
                        let qs: Vec<String> = ch.qubits().iter().map(|q| q.to_string()).collect();
                        writeln!(out, "noise {kind} {p:?} {}", qs.join(" ")).unwrap();
                    }
                    EigenRule::ExplicitTable(_) => {
                        let qs: Vec<String> = ch.qubits().iter().map(|q| q.to_string()).collect();
                        let table = ch.table_json().expect("explicit table is complete");
                        writeln!(out, "noise table {} {}", qs.join(" "), table).unwrap();
                    }
                },
            }
        }
        match self.noise_policy {
            NoisePolicy::None => {}
            NoisePolicy::Depol1(p) => writeln!(out, "noise-policy depol1 {p:?}").unwrap(),
            NoisePolicy::Depol2(p) => writeln!(out, "noise-policy depol2 {p:?}").unwrap(),
        }
        out
    }
}

impl fmt::Display for CircuitIR {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_qubit(tok: &str, line: usize, n: usize) -> Result<usize> {
    let q: usize = tok.parse().map_err(|_| perr(line, format!("expected qubit index, got `{tok}`")))?;
    if q >= n {
        return Err(perr(line, format!("qubit {q} out of range for {n} qubits")));
    }
    Ok(q)
}

fn parse_param(tok: &str, prefix: char, line: usize) -> Result<usize> {
    let lower = tok.to_ascii_lowercase();
    lower
        .strip_prefix(prefix)
        .and_then(|d| d.parse().ok())
        .ok_or_else(|| perr(line, format!("expected parameter `{prefix}K`, got `{tok}`")))
}

fn parse_prob(tok: &str, line: usize) -> Result<f64> {
    let p: f64 = tok.parse().map_err(|_| perr(line, format!("expected probability, got `{tok}`")))?;
    if !(0.0..=1.0).contains(&p) {
        return Err(perr(line, format!("probability {p} outside [0, 1]")));
    }
    Ok(p)
}

fn parse(text: &str) -> Result<CircuitIR> {
    let mut circuit: Option<CircuitIR> = None;
    let mut policy_seen = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (head, rest) = match content.find(char::is_whitespace) {
            Some(i) => (&content[..i], content[i..].trim()),
            None => (content, ""),
        };
        let keyword = head.to_ascii_lowercase();
        let toks: Vec<&str> = rest.split_whitespace().collect();

        if keyword == "qubits" {
            if circuit.is_some() {
                return Err(perr(line, "duplicate `qubits` declaration"));
            }
            let n: usize = match toks.as_slice() {
                [t] => t.parse().map_err(|_| perr(line, "expected qubit count"))?,
                _ => return Err(perr(line, "expected `qubits N`")),
            };
            if n == 0 {
                return Err(perr(line, "qubit count must be positive"));
            }
            circuit = Some(CircuitIR::new(n));
            continue;
        }
        let c = circuit.as_mut().ok_or_else(|| perr(line, "missing `qubits N` declaration"))?;
        let n = c.n;
        let expect = |k: usize| -> Result<()> {
            if toks.len() != k {
                return Err(perr(line, format!("`{keyword}` expects {k} arguments, got {}", toks.len())));
            }
            Ok(())
        };
        match keyword.as_str() {
            "h" | "s" | "sdg" | "x" | "y" | "z" => {
                expect(1)?;
                let q = parse_qubit(toks[0], line, n)?;
                let g = match keyword.as_str() {
                    "h" => CliffordGate::H(q),
                    "s" => CliffordGate::S(q),
                    "sdg" => CliffordGate::Sdg(q),
                    "x" => CliffordGate::X(q),
                    "y" => CliffordGate::Y(q),
                    _ => CliffordGate::Z(q),
                };
                c.push_gate(g).map_err(|e| perr(line, e.to_string()))?;
            }
            "cx" | "cnot" | "cz" | "swap" => {
                expect(2)?;
                let a = parse_qubit(toks[0], line, n)?;
                let b = parse_qubit(toks[1], line, n)?;
                if a == b {
                    return Err(perr(line, format!("`{keyword}` needs two distinct qubits")));
                }
                let g = match keyword.as_str() {
                    "cx" | "cnot" => CliffordGate::CX(a, b),
                    "cz" => CliffordGate::CZ(a, b),
                    _ => CliffordGate::Swap(a, b),
                };
                c.push_gate(g).map_err(|e| perr(line, e.to_string()))?;
            }
            "barrier" => {
                expect(0)?;
                c.layers.push(Layer::clifford(n, Vec::new())?);
            }
            "rp" => {
                expect(2)?;
                let axis: PauliString = toks[0].parse().map_err(|_| perr(line, format!("bad Pauli `{}`", toks[0])))?;
                if axis.n() != n {
                    return Err(perr(line, format!("axis `{}` has {} qubits, expected {n}", toks[0], axis.n())));
                }
                if axis.is_identity_letters() {
                    return Err(perr(line, "rotation axis must not be the identity"));
                }
                let k = parse_param(toks[1], 't', line)?;
                c.push_rotation(axis, k);
            }
            "haar" => {
                expect(3)?;
                let a = parse_qubit(toks[0], line, n)?;
                let b = parse_qubit(toks[1], line, n)?;
                if a == b {
                    return Err(perr(line, "`haar` needs two distinct qubits"));
                }
                let k = parse_param(toks[2], 'g', line)?;
                c.push_haar(a, b, k);
            }
            "noise" => {
                let kind = toks.first().map(|t| t.to_ascii_lowercase()).unwrap_or_default();
                match kind.as_str() {
                    "depol1" => {
                        if toks.len() < 3 {
                            return Err(perr(line, "expected `noise depol1 P Q...`"));
                        }
                        let p = parse_prob(toks[1], line)?;
                        for t in &toks[2..] {
                            let q = parse_qubit(t, line, n)?;
                            let mask = SupportMask::from_qubits(n, &[q])?;
                            c.push_noise(NoiseChannel::depolarizing(mask, p)?);
                        }
                    }
                    "depol2" => {
                        if toks.len() != 4 {
                            return Err(perr(line, "expected `noise depol2 P A B`"));
                        }
                        let p = parse_prob(toks[1], line)?;
                        let a = parse_qubit(toks[2], line, n)?;
                        let b = parse_qubit(toks[3], line, n)?;
                        if a == b {
                            return Err(perr(line, "`noise depol2` needs two distinct qubits"));
                        }
                        let mask = SupportMask::from_qubits(n, &[a, b])?;
                        c.push_noise(NoiseChannel::depolarizing(mask, p)?);
                    }
                    "table" => {
                        // noise table Q... {json}
                        let brace = rest.find('{').ok_or_else(|| perr(line, "expected JSON table"))?;
                        let qtoks: Vec<&str> = rest[..brace].split_whitespace().skip(1).collect();
                        let qs = qtoks.iter().map(|t| parse_qubit(t, line, n)).collect::<Result<Vec<_>>>()?;
                        if qs.is_empty() {
                            return Err(perr(line, "noise table needs at least one qubit"));
                        }
                        let mut sorted = qs.clone();
                        sorted.sort_unstable();
                        sorted.dedup();
                        if sorted.len() != qs.len() || sorted != qs {
                            return Err(perr(line, "noise table qubits must be distinct and ascending"));
                        }
                        let json: serde_json::Value = serde_json::from_str(&rest[brace..])
                            .map_err(|e| perr(line, format!("bad JSON table: {e}")))?;
                        let mask = SupportMask::from_qubits(n, &qs)?;
                        let ch = NoiseChannel::from_table_json(mask, &json).map_err(|e| perr(line, e.to_string()))?;
                        c.push_noise(ch);
                    }
                    other => return Err(perr(line, format!("unknown noise kind `{other}`"))),
                }
            }
            "noise-policy" => {
                if policy_seen {
                    return Err(perr(line, "duplicate `noise-policy`"));
                }
                policy_seen = true;
                c.noise_policy = match toks.as_slice() {
                    [k] if k.eq_ignore_ascii_case("none") => NoisePolicy::None,
                    [k, p] if k.eq_ignore_ascii_case("depol1") => NoisePolicy::Depol1(parse_prob(p, line)?),
                    [k, p] if k.eq_ignore_ascii_case("depol2") => NoisePolicy::Depol2(parse_prob(p, line)?),
                    _ => return Err(perr(line, "expected `noise-policy depol1 P | depol2 P | none`")),
                };
            }
            other => return Err(perr(line, format!("unknown gate `{other}`"))),
        }
    }
    circuit.ok_or_else(|| perr(0, "missing `qubits N` declaration"))
}

/// Parameter values for one evaluation of a circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPoint {
    pub thetas: Vec<f64>,
    pub su4s: Vec<Su4>,
}

impl ParamPoint {
    pub fn new(thetas: Vec<f64>, su4s: Vec<Su4>) -> Self {
        Self { thetas, su4s }
    }

    pub fn zeros(circuit: &CircuitIR) -> Self {
        Self { thetas: vec![0.0; circuit.num_thetas()], su4s: vec![Su4::identity(); circuit.num_su4s()] }
    }

    /// Uniform angles in `[0, 2π)` and Haar-random two-qubit unitaries.
    pub fn random<R: Rng + ?Sized>(circuit: &CircuitIR, rng: &mut R) -> Self {
        let thetas = (0..circuit.num_thetas()).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect();
        let su4s = (0..circuit.num_su4s()).map(|_| haar_su4(rng)).collect();
        Self { thetas, su4s }
    }

    pub fn check(&self, circuit: &CircuitIR) -> Result<()> {
        if self.thetas.len() != circuit.num_thetas() {
            return Err(Error::ParamMismatch(format!(
                "circuit uses {} angles, got {}",
                circuit.num_thetas(),
                self.thetas.len()
            )));
        }
        if self.su4s.len() != circuit.num_su4s() {
            return Err(Error::ParamMismatch(format!(
                "circuit uses {} two-qubit unitaries, got {}",
                circuit.num_su4s(),
                self.su4s.len()
            )));
        }
        for g in &self.su4s {
            let defect = (g.adjoint() * g - Su4::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            if defect > 1e-10 {
                return Err(Error::NonUnitary { defect });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BrickKind {
    Rotation,
    Haar,
}

/// Number of rotations placed in every brickwork block of [`BrickKind::Rotation`].
pub const ROTATIONS_PER_BLOCK: usize = 2;

type GateWord = &'static [fn(usize) -> CliffordGate];

fn random_single_qubit_clifford<R: Rng + ?Sized>(q: usize, rng: &mut R) -> Vec<CliffordGate> {
    // 24 elements as (one of 6 axis maps) × (one of 4 Z powers)
    let prefix: &[GateWord] = &[
        &[],
        &[CliffordGate::H],
        &[CliffordGate::S, CliffordGate::H],
        &[CliffordGate::H, CliffordGate::S],
        &[CliffordGate::H, CliffordGate::S, CliffordGate::H],
        &[CliffordGate::S, CliffordGate::H, CliffordGate::S],
    ];
    let powers: &[GateWord] = &[&[], &[CliffordGate::S], &[CliffordGate::Z], &[CliffordGate::Sdg]];
    let a = rng.random_range(0..prefix.len());
    let b = rng.random_range(0..powers.len());
    prefix[a].iter().chain(powers[b].iter()).map(|g| g(q)).collect()
}

/// Nearest-neighbour blocks of brickwork layer `d`.
pub fn brick_pairs(n: usize, d: usize) -> Vec<(usize, usize)> {
    (d % 2..n.saturating_sub(1)).step_by(2).map(|i| (i, i + 1)).collect()
}

/// Alternating even/odd nearest-neighbour brickwork.
///
/// Haar kind places one Haar block per pair. Rotation kind places, per pair
/// `(a, b)`: a random single-qubit Clifford on each qubit, `CZ a b`, then
/// `Z` rotations on `a` and `b`.
pub fn gen_brickwork(n: usize, depth: usize, kind: BrickKind, seed: u64) -> Result<CircuitIR> {
    if n < 2 {
        return Err(Error::InvalidArgument("brickwork needs at least 2 qubits".into()));
    }
    let mut rng = stream_rng(seed, 0);
    let mut c = CircuitIR::new(n);
    let (mut theta, mut g) = (0, 0);
    for d in 0..depth {
        for (a, b) in brick_pairs(n, d) {
            match kind {
                BrickKind::Haar => {
                    c.push_haar(a, b, g);
                    g += 1;
                }
                BrickKind::Rotation => {
                    for q in [a, b] {
                        for gate in random_single_qubit_clifford(q, &mut rng) {
                            c.push_gate(gate)?;
                        }
                    }
                    c.push_gate(CliffordGate::CZ(a, b))?;
                    for q in [a, b] {
                        c.push_rotation(PauliString::single(n, q, Pauli::Z), theta);
                        theta += 1;
                    }
                }
            }
        }
    }
    if c.layers.is_empty() {
        c.layers.push(Layer::clifford(n, Vec::new())?);
    }
    Ok(c)
}

/// Haar blocks on a `2n1 × 2n1` grid with open boundaries.
///
/// Each macro-layer has four sublayers: x-edges from even columns, x-edges
/// from odd columns, y-edges from even rows, y-edges from odd rows. Qubit
/// `(r, c)` has index `r·2n1 + c`. The seed only permutes the order of the
/// (commuting) blocks inside a sublayer.
pub fn gen_2d_lattice(n1: usize, layers: usize, seed: u64) -> Result<CircuitIR> {
    if n1 == 0 {
        return Err(Error::InvalidArgument("lattice needs n1 >= 1".into()));
    }
    let side = 2 * n1;
    let mut c = CircuitIR::new(side * side);
    let mut rng = stream_rng(seed, 1);
    let mut g = 0;
    for _ in 0..layers {
        for sub in lattice_sublayers(n1) {
            let mut edges = sub;
            edges.shuffle(&mut rng);
            for (a, b) in edges {
                c.push_haar(a, b, g);
                g += 1;
            }
        }
    }
    if c.layers.is_empty() {
        c.layers.push(Layer::clifford(side * side, Vec::new())?);
    }
    Ok(c)
}

/// Edge lists of the four depth-1 sublayers of one lattice macro-layer.
pub fn lattice_sublayers(n1: usize) -> [Vec<(usize, usize)>; 4] {
    let side = 2 * n1;
    let idx = |r: usize, c: usize| r * side + c;
    let x_edges = |parity: usize| {
        let mut v = Vec::new();
        for r in 0..side {
            for c in (parity..side - 1).step_by(2) {
                v.push((idx(r, c), idx(r, c + 1)));
            }
        }
        v
    };
    let y_edges = |parity: usize| {
        let mut v = Vec::new();
        for r in (parity..side - 1).step_by(2) {
            for c in 0..side {
                v.push((idx(r, c), idx(r + 1, c)));
            }
        }
        v
    };
    [x_edges(0), x_edges(1), y_edges(0), y_edges(1)]
}

/// Random mixed Clifford/rotation circuit used by the equivalence checks.
pub fn gen_random_mixed(n: usize, rotations: usize, cliffords: usize, seed: u64) -> Result<CircuitIR> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one qubit".into()));
    }
    let mut rng = stream_rng(seed, 2);
    let mut c = CircuitIR::new(n);
    let total = rotations + cliffords;
    let mut slots: Vec<bool> = (0..total).map(|i| i < rotations).collect();
    slots.shuffle(&mut rng);
    let mut theta = 0;
    for is_rot in slots {
        if is_rot {
            let mut axis = PauliString::identity(n);
            while axis.is_identity_letters() {
                let weight = rng.random_range(1..=n.min(2));
                for _ in 0..weight {
                    let q = rng.random_range(0..n);
                    axis.set(q, [Pauli::X, Pauli::Y, Pauli::Z][rng.random_range(0..3)]);
                }
            }
            c.push_rotation(axis, theta);
            theta += 1;
        } else {
            let k = if n > 1 { rng.random_range(0..8) } else { rng.random_range(0..5) };
            let a = rng.random_range(0..n);
            let gate = match k {
                0 => CliffordGate::H(a),
                1 => CliffordGate::S(a),
                2 => CliffordGate::X(a),
                3 => CliffordGate::Sdg(a),
                4 => CliffordGate::Z(a),
                _ => {
                    let mut b = rng.random_range(0..n - 1);
                    if b >= a {
                        b += 1;
                    }
                    match k {
                        5 => CliffordGate::CX(a, b),
                        6 => CliffordGate::CZ(a, b),
                        _ => CliffordGate::Swap(a, b),
                    }
                }
            };
            c.push_gate(gate)?;
        }
    }
    if c.layers.is_empty() {
        c.layers.push(Layer::clifford(n, Vec::new())?);
    }
    Ok(c)
}

/// Complex identity helper for callers building `ParamPoint`s by hand.
pub fn su4_from_rows(rows: [[Complex64; 4]; 4]) -> Su4 {
    Su4::from_fn(|r, c| rows[r][c])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::lit;

    #[test]
    fn parse_clifford_block() {
        let c = CircuitIR::parse("qubits 2\nh 0\ncx 0 1").unwrap();
        assert_eq!(c.n, 2);
        assert_eq!(c.layers.len(), 1);
        assert!(matches!(&c.layers[0], Layer::Clifford { gates, .. } if gates.len() == 2));
    }

    #[test]
    fn parse_rotation() {
        let c = CircuitIR::parse("qubits 1\nrp Z t0").unwrap();
        assert_eq!(c.layers, vec![Layer::Rotation { axis: lit("Z"), param: 0 }]);
    }

    #[test]
    fn parse_haar_and_policy() {
        let c = CircuitIR::parse("qubits 2\nhaar 0 1 g0\nnoise-policy depol2 0.1").unwrap();
        assert_eq!(c.layers, vec![Layer::Haar { qubits: (0, 1), param: 0 }]);
        assert_eq!(c.noise_policy, NoisePolicy::Depol2(0.1));
    }

    #[test]
    fn parse_is_case_insensitive_and_skips_comments() {
        let c = CircuitIR::parse("# header\nQUBITS 2\nH 0 # trailing\n\nRP xz T3\n").unwrap();
        assert_eq!(c.layers.len(), 2);
        assert_eq!(c.num_thetas(), 4);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("qubits 2\nfoo 1", 2),
            ("qubits 2\nh 5", 2),
            ("qubits 2\nqubits 3", 2),
            ("h 0", 1),
            ("qubits 2\ncx 0 0", 2),
            ("qubits 1\nrp I t0", 2),
            ("qubits 2\n\nrp XYZ t0", 3),
            ("qubits 2\nnoise depol1 1.5 0", 2),
        ];
        for (src, line) in cases {
            match CircuitIR::parse(src) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{src}"),
                other => panic!("{src}: {other:?}"),
            }
        }
        assert!(CircuitIR::parse("").is_err());
    }

    #[test]
    fn explicit_noise_lines() {
        let src =
            "qubits 3\nnoise depol1 0.1 0 2\nnoise depol2 0.2 0 1\nnoise table 1 {\"X\":0.5,\"Y\":0.5,\"Z\":0.9}\n";
        let c = CircuitIR::parse(src).unwrap();
        assert_eq!(c.layers.len(), 4);
        assert_eq!(CircuitIR::parse(&c.serialize()).unwrap(), c);
    }

    #[test]
    fn validate_examples() {
        let good = CircuitIR::parse("qubits 2\nh 0\nrp ZI t0\nhaar 0 1 g0").unwrap();
        assert!(good.validate().is_empty());

        let mut bad = CircuitIR::new(1);
        bad.push_rotation(PauliString::identity(1), 0);
        assert_eq!(bad.validate(), vec![Diagnostic::InvalidAxis { layer: 0 }]);

        let mut dup = CircuitIR::new(4);
        dup.push_haar(3, 3, 0);
        assert_eq!(dup.validate(), vec![Diagnostic::DuplicateQubit { layer: 0 }]);

        let mut shared = CircuitIR::new(1);
        shared.push_rotation(lit("Z"), 0);
        shared.push_rotation(lit("X"), 0);
        assert_eq!(shared.validate(), vec![Diagnostic::SharedParameter { kind: 't', index: 0 }]);

        let mut gap = CircuitIR::new(1);
        gap.push_rotation(lit("Z"), 1);
        assert_eq!(gap.validate(), vec![Diagnostic::MissingParameter { kind: 't', index: 0 }]);

        assert_eq!(CircuitIR::new(1).validate(), vec![Diagnostic::NoLayers]);
    }

    #[test]
    fn brickwork_shapes() {
        let c = gen_brickwork(2, 1, BrickKind::Haar, 0).unwrap();
        assert_eq!(c.layers, vec![Layer::Haar { qubits: (0, 1), param: 0 }]);

        let c = gen_brickwork(4, 2, BrickKind::Haar, 0).unwrap();
        let blocks: Vec<(usize, usize)> = c
            .layers
            .iter()
            .filter_map(|l| match l {
                Layer::Haar { qubits, .. } => Some(*qubits),
                _ => None,
            })
            .collect();
        assert_eq!(blocks, vec![(0, 1), (2, 3), (1, 2)]);

        let c = gen_brickwork(4, 2, BrickKind::Rotation, 5).unwrap();
        assert_eq!(c.num_thetas(), 3 * ROTATIONS_PER_BLOCK);
        assert!(c.validate().is_empty());

        let c = gen_brickwork(5, 5, BrickKind::Rotation, 5).unwrap();
        assert_eq!(c.num_thetas(), 20);

        assert!(gen_brickwork(1, 3, BrickKind::Haar, 0).is_err());
    }

    #[test]
    fn brickwork_is_deterministic() {
        let a = gen_brickwork(6, 4, BrickKind::Rotation, 11).unwrap();
        let b = gen_brickwork(6, 4, BrickKind::Rotation, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lattice_structure() {
        let c = gen_2d_lattice(1, 1, 0).unwrap();
        assert_eq!(c.n, 4);
        let subs = lattice_sublayers(1);
        assert_eq!(subs.iter().filter(|s| !s.is_empty()).count(), 2);
        assert_eq!(subs.len(), 4);
        assert_eq!(c.num_su4s(), 4);

        let subs = lattice_sublayers(2);
        assert_eq!(subs[0].len(), 8);
        assert_eq!(subs[1].len(), 2 * 4 - 2 * 2);
        assert_eq!(subs[2].len(), 8);

        assert_eq!(gen_2d_lattice(2, 2, 9).unwrap(), gen_2d_lattice(2, 2, 9).unwrap());
        assert!(gen_2d_lattice(2, 2, 9).unwrap().validate().is_empty());
    }

    #[test]
    fn generated_circuits_round_trip() {
        let mut circuits = vec![
            gen_brickwork(5, 3, BrickKind::Rotation, 1).unwrap(),
            gen_brickwork(4, 3, BrickKind::Haar, 2).unwrap(),
            gen_2d_lattice(1, 2, 3).unwrap(),
        ];
        for seed in 0..20 {
            let mut c = gen_random_mixed(2 + seed as usize % 4, 6, 8, seed).unwrap();
            c.noise_policy = NoisePolicy::Depol1(0.125);
            circuits.push(c);
        }
        for c in circuits {
            assert!(c.validate().is_empty());
            let back = CircuitIR::parse(&c.serialize()).unwrap();
            assert_eq!(back, c);
        }
    }

    #[test]
    fn param_point_checks() {
        let c = CircuitIR::parse("qubits 2\nrp ZI t0\nhaar 0 1 g0").unwrap();
        let p = ParamPoint::zeros(&c);
        assert!(p.check(&c).is_ok());
        let short = ParamPoint::new(vec![], p.su4s.clone());
        assert!(matches!(short.check(&c), Err(Error::ParamMismatch(_))));
        let mut bad = p.clone();
        bad.su4s[0][(0, 0)] = Complex64::new(2.0, 0.0);
        assert!(matches!(bad.check(&c), Err(Error::NonUnitary { .. })));
    }

    #[test]
    fn policy_expands_after_each_parametrized_layer() {
        let c = CircuitIR::parse("qubits 3\nrp ZXI t0\nh 2\nhaar 1 2 g0\nnoise-policy depol1 0.1").unwrap();
        let ops = c.ops().unwrap();
        let kinds: Vec<&str> = ops
            .iter()
            .map(|o| match o {
                Op::Clifford(_) => "C",
                Op::Rotation { .. } => "R",
                Op::Haar { .. } => "H",
                Op::Noise(_) => "N",
            })
            .collect();
        assert_eq!(kinds, vec!["R", "N", "N", "C", "H", "N", "N"]);
    }
}
