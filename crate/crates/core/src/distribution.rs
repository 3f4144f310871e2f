//! Truncated output distributions from bidirectional path trees.
//!
//! Every retained path has at most `L` non-trivial parametrized sites, so it
//! contains a run of at least `len = ⌈(D−L)/(L+1)⌉` consecutive trivial sites
//! (`D` is the number of parametrized sites). Paths are grouped by the first
//! such run. For a start site `s` the run is contracted exactly through the
//! subgroup of Paulis that stay trivial over the window; a tree toward the
//! input covers the earlier sites and is pruned whenever it contains a run of
//! `len` trivial sites itself (those paths belong to an earlier start), and a
//! tree toward the measurement covers the later sites. Both sides share the
//! budget `L`.
//!
//! Every block reduces to coefficients of diagonal Paulis:
//! `p(x) = 2^{−n} Σ_z c_z (−1)^{z·x}`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitIR, Layer, Op, ParamPoint};
use crate::clifford::Direction;
use crate::error::{Error, Result};
use crate::expectation::{circuit_fingerprint, gap_warnings, prepared_ops};
use crate::pauli::{BitString, PartialAssignment, Pauli, PauliString, Words};
use crate::propagate::{canonical, factor_product, Factor, ParamCache, Sweep, Tree, TreeStats};

pub const DEFAULT_CAP: usize = 14;
/// Largest register for the dense-root engine.
pub const MAX_DENSE_ROOT_QUBITS: usize = 12;
/// Largest register for full probability vectors.
pub const MAX_DENSE_OUTPUT_QUBITS: usize = 20;

/// Independent generators of a subgroup of Paulis (signs ignored).
#[derive(Debug, Clone, PartialEq)]
pub struct TrivialGroup {
    pub n: usize,
    pub generators: Vec<PauliString>,
}

impl TrivialGroup {
    pub fn full(n: usize) -> Self {
        let mut generators = Vec::with_capacity(2 * n);
        for j in 0..n {
            generators.push(PauliString::single(n, j, Pauli::X));
            generators.push(PauliString::single(n, j, Pauli::Z));
        }
        Self { n, generators }
    }

    /// Generated by `Z_j`: the Paulis with non-zero weight on `|0…0⟩`.
    pub fn diagonal(n: usize) -> Self {
        Self { n, generators: (0..n).map(|j| PauliString::single(n, j, Pauli::Z)).collect() }
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// Keeps the elements commuting with `c`; removes at most one generator.
    pub fn restrict(&mut self, c: &PauliString) {
        let Some(pivot_idx) = self.generators.iter().position(|g| !g.commutes_unchecked(c)) else {
            return;
        };
        let pivot = self.generators.swap_remove(pivot_idx);
        for g in &mut self.generators {
            if !g.commutes_unchecked(c) {
                *g = g.mul_unchecked(&pivot).unsigned();
            }
        }
    }

    /// Keeps the elements acting as identity on qubits `a` and `b`.
    pub fn restrict_block(&mut self, a: usize, b: usize) {
        for q in [a, b] {
            for p in [Pauli::X, Pauli::Z] {
                self.restrict(&PauliString::single(self.n, q, p));
            }
        }
    }

    pub fn conjugate(&mut self, t: &crate::clifford::CliffordTableau) {
        for g in &mut self.generators {
            *g = t.conjugate_unchecked(g, Direction::Forward).unsigned();
        }
    }

    /// All `2^g` elements, unsigned, identity first.
    pub fn elements(&self) -> Vec<PauliString> {
        let mut out = Vec::with_capacity(1 << self.len());
        out.push(PauliString::identity(self.n));
        for g in &self.generators {
            let extra: Vec<PauliString> = out.iter().map(|e| e.mul_unchecked(g).unsigned()).collect();
            out.extend(extra);
        }
        out
    }
}

/// Generators of the Paulis left invariant by every parametrized layer of the
/// slice. Non-parametrized layers are ignored.
pub fn trivial_generators(layers: &[Layer], n: usize) -> TrivialGroup {
    let mut g = TrivialGroup::full(n);
    for l in layers {
        match l {
            Layer::Rotation { axis, .. } => g.restrict(&axis.unsigned()),
            Layer::Haar { qubits: (a, b), .. } => g.restrict_block(*a, *b),
            _ => {}
        }
    }
    g
}

/// `left` at the window start, `right` at the window end, both unsigned.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionTerm {
    pub left: PauliString,
    pub right: PauliString,
    /// Clifford sign times the noise eigenvalues met inside the window.
    pub value: f64,
}

fn contract_ops(
    ops: &[Op],
    range: (usize, usize),
    mut group: TrivialGroup,
    cap: usize,
) -> Result<Vec<ContractionTerm>> {
    let window = &ops[range.0..range.1];
    for op in window {
        match op {
            Op::Clifford(t) => group.conjugate(t),
            Op::Rotation { axis, .. } => group.restrict(axis),
            Op::Haar { a, b, .. } => group.restrict_block(*a, *b),
            Op::Noise(_) => {}
        }
    }
    if group.len() > cap {
        return Err(Error::CapExceeded { start: range.0, end: range.1, generators: group.len(), cap });
    }
    group
        .elements()
        .into_iter()
        .map(|right| {
            let mut p = right.clone();
            let mut value = 1.0;
            for op in window.iter().rev() {
                match op {
                    Op::Clifford(t) => p = t.conjugate_unchecked(&p, Direction::Adjoint),
                    Op::Noise(ch) => value *= ch.eigenvalue_unchecked(&p)?,
                    _ => {}
                }
            }
            let (sign, left) = p.split_sign()?;
            Ok(ContractionTerm { left, right, value: value * f64::from(sign) })
        })
        .collect()
}

/// Contraction of ops `start..end` of `c` (noise policy expanded) starting
/// from the full Pauli group.
pub fn contract_full(c: &CircuitIR, start: usize, end: usize, cap: usize) -> Result<Vec<ContractionTerm>> {
    contract_from(c, start, end, TrivialGroup::full(c.n), cap)
}

pub fn contract_from(
    c: &CircuitIR,
    start: usize,
    end: usize,
    group: TrivialGroup,
    cap: usize,
) -> Result<Vec<ContractionTerm>> {
    let ops = c.ops()?;
    if start > end || end > ops.len() {
        return Err(Error::InvalidArgument(format!("segment {start}..{end} outside 0..{}", ops.len())));
    }
    contract_ops(&ops, (start, end), group, cap)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidePath {
    pub constant: f64,
    pub factors: Vec<Factor>,
    pub used: usize,
}

/// Diagonal leaf of a tree toward the measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RightLeaf {
    pub z: Words,
    pub constant: f64,
    pub factors: Vec<Factor>,
    pub used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub value: f64,
    pub left: Vec<SidePath>,
    pub right: Vec<RightLeaf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Engine {
    Bidirectional,
    /// Expands `|0⟩⟨0|` over diagonal Paulis and runs one tree per root.
    DenseRoot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DistributionOptions {
    pub cap: usize,
    pub noiseless: bool,
    pub engine: Engine,
}

impl Default for DistributionOptions {
    fn default() -> Self {
        Self { cap: DEFAULT_CAP, noiseless: false, engine: Engine::Bidirectional }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DistributionStats {
    pub windows: usize,
    pub window_len: usize,
    pub contraction_terms: usize,
    pub blocks: usize,
    pub left_paths: usize,
    pub right_leaves: usize,
    pub tree: TreeStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedDistribution {
    pub n: usize,
    pub budget: usize,
    pub engine: Engine,
    pub num_thetas: usize,
    pub num_su4s: usize,
    pub circuit_fingerprint: u64,
    pub blocks: Vec<Block>,
    pub stats: DistributionStats,
    pub warnings: Vec<String>,
}

/// Minimum run of trivial sites every retained path must contain.
pub fn window_len(sites: usize, budget: usize) -> usize {
    if sites > budget {
        (sites - budget).div_ceil(budget + 1)
    } else {
        0
    }
}

fn left_paths(
    ops: &[Op],
    q: &PauliString,
    budget: usize,
    dedup: Option<usize>,
    stats: &mut TreeStats,
) -> Result<Vec<SidePath>> {
    let tree = Tree { ops, sweep: Sweep::TowardInput, budget, max_trivial_run: dedup };
    let mut merged: BTreeMap<(usize, Vec<Factor>), f64> = BTreeMap::new();
    tree.run(q.clone(), 1.0, stats, &mut |v| {
        if v.pauli.is_diagonal() {
            let s = f64::from(v.pauli.sign()?);
            *merged.entry((v.used, canonical(v.factors))).or_insert(0.0) += v.constant * s;
        } else {
            // contributes ⟨0|P|0⟩ = 0
        }
        Ok(())
    })?;
    Ok(merged
        .into_iter()
        .filter(|(_, c)| *c != 0.0)
        .map(|((used, factors), constant)| SidePath { constant, factors, used })
        .collect())
}

fn right_leaves(ops: &[Op], r: &PauliString, budget: usize, stats: &mut TreeStats) -> Result<Vec<RightLeaf>> {
    let tree = Tree { ops, sweep: Sweep::TowardOutput, budget, max_trivial_run: None };
    let mut merged: BTreeMap<(Words, usize, Vec<Factor>), f64> = BTreeMap::new();
    tree.run(r.clone(), 1.0, stats, &mut |v| {
        if v.pauli.is_diagonal() {
            let s = f64::from(v.pauli.sign()?);
            let z: Words = v.pauli.z_words().iter().copied().collect();
            *merged.entry((z, v.used, canonical(v.factors))).or_insert(0.0) += v.constant * s;
        }
        Ok(())
    })?;
    Ok(merged
        .into_iter()
        .filter(|(_, c)| *c != 0.0)
        .map(|((z, used, factors), constant)| RightLeaf { z, constant, factors, used })
        .collect())
}

fn build_block(
    ops: &[Op],
    term: &ContractionTerm,
    window: (usize, usize),
    dedup: Option<usize>,
    budget: usize,
) -> Result<(Option<Block>, TreeStats)> {
    let mut stats = TreeStats::default();
    let left = left_paths(&ops[..window.0], &term.left, budget, dedup, &mut stats)?;
    let Some(min_used) = left.iter().map(|p| p.used).min() else {
        return Ok((None, stats));
    };
    let right = right_leaves(&ops[window.1..], &term.right, budget - min_used, &mut stats)?;
    if right.is_empty() {
        return Ok((None, stats));
    }
    Ok((Some(Block { value: term.value, left, right }), stats))
}

pub fn build_distribution(c: &CircuitIR, budget: usize, opts: DistributionOptions) -> Result<TruncatedDistribution> {
    let ops = prepared_ops(c, opts.noiseless)?;
    let n = c.n;
    let mut stats = DistributionStats::default();
    let mut blocks = Vec::new();

    let mut collect = |results: Vec<Result<(Option<Block>, TreeStats)>>, stats: &mut DistributionStats| -> Result<()> {
        for r in results {
            let (b, ts) = r?;
            stats.tree.absorb(&ts);
            if let Some(b) = b {
                stats.left_paths += b.left.len();
                stats.right_leaves += b.right.len();
                blocks.push(b);
            }
        }
        Ok(())
    };

    match opts.engine {
        Engine::DenseRoot => {
            if n > MAX_DENSE_ROOT_QUBITS {
                return Err(Error::OracleCap { what: "dense-root mode", n, max: MAX_DENSE_ROOT_QUBITS });
            }
            let roots = TrivialGroup::diagonal(n).elements();
            let terms: Vec<ContractionTerm> =
                roots.into_iter().map(|p| ContractionTerm { left: p.clone(), right: p, value: 1.0 }).collect();
            stats.contraction_terms = terms.len();
            let end = ops.len();
            let results: Vec<_> = terms.par_iter().map(|t| build_block(&ops, t, (end, end), None, budget)).collect();
            collect(results, &mut stats)?;
        }
        Engine::Bidirectional => {
            let sites: Vec<usize> = ops.iter().enumerate().filter(|(_, o)| o.is_site()).map(|(i, _)| i).collect();
            let d = sites.len();
            let len = window_len(d, budget);
            stats.window_len = len;
            let site_or_end = |k: usize| if k < d { sites[k] } else { ops.len() };
            let starts: Vec<usize> = if len == 0 { vec![0] } else { (0..=d - len).collect() };
            for s in starts {
                let (window, group, dedup) = if s == 0 {
                    ((0, site_or_end(len)), TrivialGroup::diagonal(n), None)
                } else {
                    ((sites[s], site_or_end(s + len)), TrivialGroup::full(n), Some(len))
                };
                let terms = contract_ops(&ops, window, group, opts.cap)?;
                stats.windows += 1;
                stats.contraction_terms += terms.len();
                let results: Vec<_> = terms.par_iter().map(|t| build_block(&ops, t, window, dedup, budget)).collect();
                collect(results, &mut stats)?;
            }
        }
    }
    stats.blocks = blocks.len();

    Ok(TruncatedDistribution {
        n,
        budget,
        engine: opts.engine,
        num_thetas: c.num_thetas(),
        num_su4s: c.num_su4s(),
        circuit_fingerprint: circuit_fingerprint(c),
        blocks,
        stats,
        warnings: gap_warnings(&ops),
    })
}

/// Truncated distribution at a fixed parameter point, as diagonal-Pauli
/// coefficients `c_z` with `p(x) = 2^{−n} Σ_z c_z (−1)^{z·x}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatedDistribution {
    n: usize,
    coeffs: Vec<(Words, f64)>,
}

fn parity(z: &[u64], x: &[u64]) -> bool {
    z.iter().zip(x).map(|(a, b)| (a & b).count_ones()).sum::<u32>() % 2 == 1
}

impl TruncatedDistribution {
    pub fn evaluate(&self, params: &ParamPoint) -> Result<EvaluatedDistribution> {
        let cache = ParamCache::new(params)?;
        self.evaluate_cached(&cache)
    }

    pub fn evaluate_cached(&self, cache: &ParamCache) -> Result<EvaluatedDistribution> {
        cache.check(self.num_thetas, self.num_su4s)?;
        let budget = self.budget;
        let partial: Vec<Vec<(Words, f64)>> = self
            .blocks
            .par_iter()
            .map(|b| {
                let mut by_used = vec![0.0; budget + 1];
                for p in &b.left {
                    by_used[p.used] += p.constant * factor_product(&p.factors, cache);
                }
                // cumulative[k] = Σ_{used ≤ k} left
                let mut cumulative = by_used;
                for k in 1..=budget {
                    cumulative[k] += cumulative[k - 1];
                }
                b.right
                    .iter()
                    .map(|r| {
                        let left = cumulative[budget - r.used];
                        (r.z.clone(), b.value * left * r.constant * factor_product(&r.factors, cache))
                    })
                    .collect()
            })
            .collect();
        let mut map: BTreeMap<Words, f64> = BTreeMap::new();
        for block in partial {
            for (z, v) in block {
                *map.entry(z).or_insert(0.0) += v;
            }
        }
        Ok(EvaluatedDistribution { n: self.n, coeffs: map.into_iter().collect() })
    }

    pub fn matches(&self, c: &CircuitIR) -> bool {
        c.n == self.n && circuit_fingerprint(c) == self.circuit_fingerprint
    }

    pub fn stats_json(&self) -> serde_json::Value {
        serde_json::json!({
            "engine": format!("{:?}", self.engine),
            "budget": self.budget,
            "windows": self.stats.windows,
            "window_len": self.stats.window_len,
            "contraction_terms": self.stats.contraction_terms,
            "blocks": self.stats.blocks,
            "left_paths": self.stats.left_paths,
            "right_leaves": self.stats.right_leaves,
            "pruned_budget": self.stats.tree.pruned_budget,
            "pruned_zero": self.stats.tree.pruned_zero,
            "pruned_dedup": self.stats.tree.pruned_dedup,
            "warnings": self.warnings,
        })
    }
}

impl EvaluatedDistribution {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `(z-mask words, c_z)` sorted by mask.
    pub fn coefficients(&self) -> &[(Words, f64)] {
        &self.coeffs
    }

    pub fn prob(&self, x: &BitString) -> Result<f64> {
        if x.n() != self.n {
            return Err(Error::SizeMismatch { expected: self.n, found: x.n() });
        }
        let s: f64 = self.coeffs.iter().map(|(z, c)| if parity(z, x.words()) { -c } else { *c }).sum();
        Ok(s * 0.5f64.powi(self.n as i32))
    }

    /// Total weight of the bitstrings agreeing with `fixed`.
    pub fn marginal(&self, fixed: &PartialAssignment) -> Result<f64> {
        if fixed.mask().n() != self.n {
            return Err(Error::SizeMismatch { expected: self.n, found: fixed.mask().n() });
        }
        let free = fixed.complement();
        let free_words = free.words();
        let s: f64 = self
            .coeffs
            .iter()
            .filter(|(z, _)| z.iter().zip(free_words).all(|(a, b)| a & b == 0))
            .map(|(z, c)| if parity(z, fixed.values()) { -c } else { *c })
            .sum();
        Ok(s * 0.5f64.powi(fixed.mask().len() as i32))
    }

    pub fn marginal_prefix(&self, bits: &[bool]) -> Result<f64> {
        self.marginal(&PartialAssignment::prefix(self.n, bits)?)
    }

    /// All `2^n` values, via a fast Walsh–Hadamard transform.
    pub fn full_vector(&self) -> Result<Vec<f64>> {
        if self.n > MAX_DENSE_OUTPUT_QUBITS {
            return Err(Error::OracleCap { what: "full probability vector", n: self.n, max: MAX_DENSE_OUTPUT_QUBITS });
        }
        let d = 1usize << self.n;
        let mut v = vec![0.0; d];
        for (z, c) in &self.coeffs {
            v[z.first().copied().unwrap_or(0) as usize] += c;
        }
        let mut h = 1;
        while h < d {
            for i in (0..d).step_by(2 * h) {
                for j in i..i + h {
                    let (a, b) = (v[j], v[j + h]);
                    v[j] = a + b;
                    v[j + h] = a - b;
                }
            }
            h *= 2;
        }
        let scale = 1.0 / d as f64;
        v.iter_mut().for_each(|x| *x *= scale);
        Ok(v)
    }

    /// `x,p` rows, bit `j` printed at position `j`.
    pub fn to_csv(&self) -> Result<String> {
        let v = self.full_vector()?;
        let mut out = String::from("x,p\n");
        for (i, p) in v.iter().enumerate() {
            writeln!(out, "{},{:.17e}", BitString::from_index(self.n, i as u64), p).unwrap();
        }
        Ok(out)
    }

    /// One draw by sequential conditional sampling over qubits `0, 1, …`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SampleRecord> {
        let mut bits = Vec::with_capacity(self.n);
        let mut rec = SampleRecord::default();
        for _ in 0..self.n {
            bits.push(false);
            let m0 = self.marginal_prefix(&bits)?;
            *bits.last_mut().unwrap() = true;
            let m1 = self.marginal_prefix(&bits)?;
            rec.marginal_calls += 2;
            let step = clamp_pair(m0, m1);
            rec.clamp_events += usize::from(step.clamped);
            rec.degenerate_events += usize::from(step.degenerate);
            let one = rng.random::<f64>() < step.p1;
            *bits.last_mut().unwrap() = one;
            rec.conditionals.push(if one { step.p1 } else { 1.0 - step.p1 });
        }
        rec.bits = BitString::from_bools(&bits);
        Ok(rec)
    }

    /// The distribution the sampler actually draws from.
    pub fn sampler_distribution(&self) -> Result<Vec<f64>> {
        if self.n > MAX_DENSE_OUTPUT_QUBITS {
            return Err(Error::OracleCap { what: "sampler distribution", n: self.n, max: MAX_DENSE_OUTPUT_QUBITS });
        }
        let mut out = vec![0.0; 1 << self.n];
        let mut stack: Vec<(Vec<bool>, f64)> = vec![(Vec::new(), 1.0)];
        while let Some((prefix, w)) = stack.pop() {
            if prefix.len() == self.n {
                let idx = prefix.iter().enumerate().fold(0usize, |a, (j, &b)| a | (usize::from(b) << j));
                out[idx] = w;
                continue;
            }
            let mut p0 = prefix.clone();
            p0.push(false);
            let mut p1 = prefix;
            p1.push(true);
            let step = clamp_pair(self.marginal_prefix(&p0)?, self.marginal_prefix(&p1)?);
            if step.p1 < 1.0 {
                stack.push((p0, w * (1.0 - step.p1)));
            }
            if step.p1 > 0.0 {
                stack.push((p1, w * step.p1));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleRecord {
    pub bits: BitString,
    /// Probability of each chosen bit given the earlier ones.
    pub conditionals: Vec<f64>,
    pub clamp_events: usize,
    pub degenerate_events: usize,
    pub marginal_calls: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalStep {
    pub p1: f64,
    pub clamped: bool,
    pub degenerate: bool,
}

/// Turns two (possibly negative) marginals into a conditional for bit 1.
pub fn clamp_pair(m0: f64, m1: f64) -> ConditionalStep {
    let clamped = m0 < 0.0 || m1 < 0.0;
    let (a, b) = (m0.max(0.0), m1.max(0.0));
    if a + b > 0.0 {
        ConditionalStep { p1: b / (a + b), clamped, degenerate: false }
    } else {
        ConditionalStep { p1: 0.5, clamped, degenerate: true }
    }
}

pub fn prob_value(d: &TruncatedDistribution, x: &BitString, params: &ParamPoint) -> Result<f64> {
    d.evaluate(params)?.prob(x)
}

pub fn marginal_value(d: &TruncatedDistribution, prefix: &[bool], params: &ParamPoint) -> Result<f64> {
    d.evaluate(params)?.marginal_prefix(prefix)
}

pub fn sample_bitstring<R: Rng + ?Sized>(
    d: &TruncatedDistribution,
    params: &ParamPoint,
    rng: &mut R,
) -> Result<SampleRecord> {
    d.evaluate(params)?.sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{gen_brickwork, gen_random_mixed, BrickKind, NoisePolicy};
    use crate::oracle::exact_distribution;
    use crate::pauli::lit;
    use crate::rng::stream_rng;

    fn set(g: &TrivialGroup) -> Vec<String> {
        let mut v: Vec<String> = g.elements().iter().map(|p| p.to_string()).collect();
        v.sort();
        v
    }

    #[test]
    fn trivial_generator_examples() {
        let c = CircuitIR::parse("qubits 2\nrp ZI t0").unwrap();
        let g = trivial_generators(&c.layers, 2);
        assert_eq!(g.len(), 3);
        let mut want = TrivialGroup { n: 2, generators: vec![lit("ZI"), lit("IX"), lit("IZ")] };
        assert_eq!(set(&g), set(&want));
        want.restrict(&lit("ZI"));
        assert_eq!(want.len(), 3);

        let c = CircuitIR::parse("qubits 3\nhaar 0 1 g0").unwrap();
        let g = trivial_generators(&c.layers, 3);
        assert_eq!(set(&g), set(&TrivialGroup { n: 3, generators: vec![lit("IIX"), lit("IIZ")] }));

        let c = CircuitIR::parse("qubits 1\nrp Z t0\nrp X t1").unwrap();
        assert!(trivial_generators(&c.layers, 1).is_empty());
    }

    #[test]
    fn restricted_generators_commute_with_constraints() {
        let c = gen_random_mixed(4, 6, 0, 3).unwrap();
        let g = trivial_generators(&c.layers, 4);
        for l in &c.layers {
            if let Layer::Rotation { axis, .. } = l {
                for e in g.elements() {
                    assert!(e.commutes_unchecked(axis));
                }
            }
        }
        // independence: all elements distinct
        let mut els: Vec<String> = g.elements().iter().map(|p| p.letters()).collect();
        els.sort();
        els.dedup();
        assert_eq!(els.len(), 1 << g.len());
    }

    #[test]
    fn identity_segment_keeps_group() {
        let c = CircuitIR::parse("qubits 2\nbarrier").unwrap();
        let terms = contract_full(&c, 0, 0, DEFAULT_CAP).unwrap();
        assert_eq!(terms.len(), 16);
        assert!(terms.iter().all(|t| t.left == t.right && t.value == 1.0));
        assert_eq!(terms[0].left, PauliString::identity(2));
    }

    #[test]
    fn full_support_haar_contracts_to_identity() {
        let c = CircuitIR::parse("qubits 2\nh 0\ncx 0 1\nhaar 0 1 g0").unwrap();
        let terms = contract_full(&c, 0, 2, DEFAULT_CAP).unwrap();
        assert_eq!(terms, vec![ContractionTerm { left: lit("II"), right: lit("II"), value: 1.0 }]);
    }

    #[test]
    fn hadamard_then_rotation_halves_group() {
        let c = CircuitIR::parse("qubits 1\nh 0\nrp Z t0").unwrap();
        let terms = contract_from(&c, 0, 2, TrivialGroup::diagonal(1), DEFAULT_CAP).unwrap();
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].left, lit("I"));
    }

    #[test]
    fn cap_is_enforced() {
        let c = CircuitIR::parse("qubits 8\nbarrier").unwrap();
        assert!(matches!(contract_full(&c, 0, 0, 14), Err(Error::CapExceeded { generators: 16, cap: 14, .. })));
    }

    #[test]
    fn contraction_signs_follow_clifford() {
        let c = CircuitIR::parse("qubits 1\nh 0\ns 0").unwrap();
        for t in contract_full(&c, 0, 1, DEFAULT_CAP).unwrap() {
            let tab = match &c.ops().unwrap()[0] {
                Op::Clifford(t) => t.clone(),
                _ => unreachable!(),
            };
            let mut img = tab.conjugate(&t.left, Direction::Forward).unwrap();
            if t.value < 0.0 {
                img.negate();
            }
            assert_eq!(img, t.right);
        }
    }

    fn probs(c: &CircuitIR, l: usize, engine: Engine, params: &ParamPoint) -> Vec<f64> {
        let d = build_distribution(c, l, DistributionOptions { engine, ..Default::default() }).unwrap();
        d.evaluate(params).unwrap().full_vector().unwrap()
    }

    #[test]
    fn diagonal_rotation_fixes_zero() {
        let c = CircuitIR::parse("qubits 1\nrp Z t0").unwrap();
        for l in 0..3 {
            let v = probs(&c, l, Engine::Bidirectional, &ParamPoint::new(vec![0.77], vec![]));
            assert!((v[0] - 1.0).abs() < 1e-15 && v[1].abs() < 1e-15);
        }
    }

    #[test]
    fn hadamard_halves() {
        let c = CircuitIR::parse("qubits 1\nh 0").unwrap();
        let d = build_distribution(&c, 1, DistributionOptions::default()).unwrap();
        let p = ParamPoint::zeros(&c);
        assert!((prob_value(&d, &BitString::zeros(1), &p).unwrap() - 0.5).abs() < 1e-15);
        assert!((marginal_value(&d, &[], &p).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn clifford_circuit_matches_stabilizer_probabilities() {
        for seed in 0..10 {
            let c = gen_random_mixed(3, 0, 12, seed).unwrap();
            let p = ParamPoint::zeros(&c);
            let want = exact_distribution(&c, &p, false).unwrap();
            let got = probs(&c, 2, Engine::Bidirectional, &p);
            for (a, b) in want.iter().zip(&got) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn full_budget_matches_oracle() {
        let mut rng = stream_rng(8, 0);
        for seed in 0..4 {
            let mut c = gen_brickwork(3, 3, BrickKind::Haar, seed).unwrap();
            c.noise_policy = NoisePolicy::Depol2(0.15);
            let p = ParamPoint::random(&c, &mut rng);
            let want = exact_distribution(&c, &p, true).unwrap();
            let got = probs(&c, c.num_parametrized(), Engine::Bidirectional, &p);
            for (a, b) in want.iter().zip(&got) {
                assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn bidirectional_equals_dense_root() {
        let mut rng = stream_rng(12, 0);
        for seed in 0..6 {
            let mut c = if seed % 2 == 0 {
                gen_brickwork(4, 3, BrickKind::Haar, seed).unwrap()
            } else {
                gen_random_mixed(3, 7, 6, seed).unwrap()
            };
            c.noise_policy = NoisePolicy::Depol1(0.1);
            let p = ParamPoint::random(&c, &mut rng);
            for l in 0..=5 {
                let a = probs(&c, l, Engine::Bidirectional, &p);
                let b = probs(&c, l, Engine::DenseRoot, &p);
                let total: f64 = a.iter().sum();
                assert!((total - 1.0).abs() < 1e-9, "L={l}: {total}");
                for (x, y) in a.iter().zip(&b) {
                    assert!((x - y).abs() < 1e-10, "seed {seed} L={l}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn marginals_telescope() {
        let mut c = gen_brickwork(4, 2, BrickKind::Haar, 1).unwrap();
        c.noise_policy = NoisePolicy::Depol2(0.15);
        let d = build_distribution(&c, 2, DistributionOptions::default()).unwrap();
        let e = d.evaluate(&ParamPoint::random(&c, &mut stream_rng(1, 1))).unwrap();
        let v = e.full_vector().unwrap();
        for len in 0..4usize {
            for idx in 0..1usize << len {
                let prefix: Vec<bool> = (0..len).map(|j| (idx >> j) & 1 == 1).collect();
                let mut p0 = prefix.clone();
                p0.push(false);
                let mut p1 = prefix.clone();
                p1.push(true);
                let lhs = e.marginal_prefix(&prefix).unwrap();
                let rhs = e.marginal_prefix(&p0).unwrap() + e.marginal_prefix(&p1).unwrap();
                assert!((lhs - rhs).abs() < 1e-10);
            }
        }
        for (i, &pv) in v.iter().enumerate() {
            let bits = BitString::from_index(4, i as u64);
            assert!((e.marginal_prefix(&bits.to_bools()).unwrap() - pv).abs() < 1e-12);
            assert!((e.prob(&bits).unwrap() - pv).abs() < 1e-12);
        }
    }

    #[test]
    fn clamp_rule() {
        let s = clamp_pair(-0.1, 1.1);
        assert_eq!((s.p1, s.clamped, s.degenerate), (1.0, true, false));
        let s = clamp_pair(0.0, 0.0);
        assert!(s.degenerate && !s.clamped && s.p1 == 0.5);
        let s = clamp_pair(0.25, 0.75);
        assert!(!s.clamped && (s.p1 - 0.75).abs() < 1e-15);
    }

    #[test]
    fn deterministic_sampling() {
        let c = CircuitIR::parse("qubits 2\nbarrier").unwrap();
        let d = build_distribution(&c, 1, DistributionOptions::default()).unwrap();
        let e = d.evaluate(&ParamPoint::zeros(&c)).unwrap();
        let mut rng = stream_rng(0, 0);
        for _ in 0..50 {
            let r = e.sample(&mut rng).unwrap();
            assert_eq!(r.bits.to_string(), "00");
            assert_eq!(r.clamp_events, 0);
            assert_eq!(r.marginal_calls, 4);
        }
    }

    #[test]
    fn window_lengths() {
        assert_eq!(window_len(4, 2), 1);
        assert_eq!(window_len(10, 2), 3);
        assert_eq!(window_len(3, 3), 0);
        assert_eq!(window_len(0, 0), 0);
        assert_eq!(window_len(5, 0), 5);
    }
}
