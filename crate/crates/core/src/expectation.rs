//! Truncated Fourier series of noisy observable expectations.
//!
//! Each observable term is propagated backwards through the circuit. A path
//! pays one unit of budget every time it meets a parametrized layer in a
//! non-trivial irrep, and the series keeps every path whose cost is at most
//! `L`. Building is parameter independent; evaluation only multiplies cached
//! trig values and adjoint-matrix entries.

use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitIR, Op, ParamPoint};
use crate::error::{Error, Result};
use crate::pauli::PauliString;
use crate::propagate::{canonical, deterministic_sum, factor_product, Factor, ParamCache, Sweep, Tree, TreeStats};

/// Real combination of distinct Hermitian Pauli strings.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    n: usize,
    terms: Vec<(f64, PauliString)>,
}

impl Observable {
    /// Signs on the Paulis are folded into the coefficients.
    pub fn new(terms: Vec<(f64, PauliString)>) -> Result<Self> {
        let n = terms.first().map(|(_, p)| p.n()).ok_or_else(|| Error::InvalidArgument("empty observable".into()))?;
        let mut out: Vec<(f64, PauliString)> = Vec::with_capacity(terms.len());
        for (c, p) in terms {
            if p.n() != n {
                return Err(Error::SizeMismatch { expected: n, found: p.n() });
            }
            if !c.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite coefficient {c}")));
            }
            let (sign, u) = p.split_sign()?;
            if out.iter().any(|(_, q)| *q == u) {
                return Err(Error::InvalidArgument(format!("repeated Pauli {u}")));
            }
            out.push((c * f64::from(sign), u));
        }
        Ok(Self { n, terms: out })
    }

    pub fn single(p: PauliString) -> Self {
        Self::new(vec![(1.0, p)]).expect("single Hermitian Pauli")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    /// Number of Pauli terms.
    pub fn rank(&self) -> usize {
        self.terms.len()
    }

    /// `‖O‖_HS / 2^{n/2}`.
    pub fn normalized_hs_norm(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c * c).sum::<f64>().sqrt()
    }

    pub fn l1_norm(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.abs()).sum()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self { n: self.n, terms: self.terms.iter().map(|(c, p)| (alpha * c, p.clone())).collect() }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (c, p)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{c:?}*{p}")?;
        }
        Ok(())
    }
}

/// `"XZI"`, `"-ZZ"`, `"0.5*XX + -0.25*ZI"`.
impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut terms = Vec::new();
        for part in s.split('+') {
            let part = part.trim();
            let (coef, pauli) = match part.split_once('*') {
                Some((c, p)) => {
                    let c: f64 = c.trim().parse().map_err(|_| Error::InvalidLiteral(part.to_string()))?;
                    (c, p.trim())
                }
                None => (1.0, part),
            };
            terms.push((coef, pauli.parse::<PauliString>()?));
        }
        Self::new(terms)
    }
}

/// One stored path: `constant · Π factors`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathTerm {
    pub constant: f64,
    pub factors: Vec<Factor>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SeriesStats {
    /// Retained paths before merging equal factor products.
    pub total: usize,
    /// Dropped subtrees: budget exhaustion plus zero contributions.
    pub pruned: usize,
    pub pruned_budget: usize,
    pub pruned_zero: usize,
    /// Stored terms after merging.
    pub stored: usize,
    pub max_depth: usize,
    /// Retained paths by number of branch events.
    pub histogram: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeriesOptions {
    /// Ignore every noise channel of the circuit.
    pub noiseless: bool,
    /// Merge paths with identical factor multisets.
    pub merge: bool,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self { noiseless: false, merge: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationSeries {
    pub n: usize,
    pub budget: usize,
    pub num_thetas: usize,
    pub num_su4s: usize,
    pub circuit_fingerprint: u64,
    pub noise_fingerprint: u64,
    pub paths: Vec<PathTerm>,
    pub stats: SeriesStats,
    /// Noise channels that fix a non-trivial Pauli (no spectral gap on it).
    pub warnings: Vec<String>,
}

fn fingerprint(s: &str) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    s.hash(&mut h);
    h.finish()
}

pub(crate) fn circuit_fingerprint(c: &CircuitIR) -> u64 {
    let mut structure = c.clone();
    structure.noise_policy = crate::circuit::NoisePolicy::None;
    structure.layers.retain(|l| !matches!(l, crate::circuit::Layer::Noise(_)));
    fingerprint(&structure.serialize())
}

pub(crate) fn noise_fingerprint(ops: &[Op]) -> u64 {
    let s: Vec<String> = ops
        .iter()
        .filter_map(|o| match o {
            Op::Noise(ch) => Some(format!("{:?}", ch)),
            _ => None,
        })
        .collect();
    fingerprint(&s.join(";"))
}

pub(crate) fn prepared_ops(c: &CircuitIR, noiseless: bool) -> Result<Vec<Op>> {
    c.ensure_valid()?;
    let mut ops = c.ops()?;
    if noiseless {
        ops.retain(|o| !matches!(o, Op::Noise(_)));
    }
    Ok(ops)
}

pub(crate) fn gap_warnings(ops: &[Op]) -> Vec<String> {
    ops.iter()
        .filter_map(|o| match o {
            Op::Noise(ch) if !ch.satisfies_gap_assumption() => {
                Some(format!("noise channel on qubits {:?} leaves a non-trivial Pauli undamped", ch.qubits()))
            }
            _ => None,
        })
        .collect()
}

/// Merges `(factors, value)` pairs with equal sorted factor lists.
pub(crate) fn merge_terms(raw: Vec<(Vec<Factor>, f64)>) -> Vec<PathTerm> {
    let mut map: BTreeMap<Vec<Factor>, f64> = BTreeMap::new();
    for (f, v) in raw {
        *map.entry(f).or_insert(0.0) += v;
    }
    map.into_iter().filter(|(_, v)| *v != 0.0).map(|(factors, constant)| PathTerm { constant, factors }).collect()
}

/// Factor list, constant and branch events of one retained path.
type RawPath = (Vec<Factor>, f64, usize);

pub fn build_series(c: &CircuitIR, obs: &Observable, budget: usize, opts: SeriesOptions) -> Result<ExpectationSeries> {
    if obs.n() != c.n {
        return Err(Error::SizeMismatch { expected: c.n, found: obs.n() });
    }
    let ops = prepared_ops(c, opts.noiseless)?;
    let tree = Tree { ops: &ops, sweep: Sweep::TowardInput, budget, max_trivial_run: None };

    let per_root: Vec<Result<(Vec<RawPath>, TreeStats)>> = obs
        .terms()
        .par_iter()
        .map(|(coef, root)| {
            let mut stats = TreeStats::default();
            let mut out = Vec::new();
            tree.run(root.clone(), *coef, &mut stats, &mut |v| {
                if v.pauli.is_diagonal() {
                    let sign = f64::from(v.pauli.sign()?);
                    out.push((canonical(v.factors), v.constant * sign, v.used));
                } else {
                    // ⟨0|P|0⟩ = 0 for any P with an X or Y letter
                    out.push((Vec::new(), f64::NAN, usize::MAX));
                }
                Ok(())
            })?;
            Ok((out, stats))
        })
        .collect();

    let mut stats = SeriesStats { histogram: vec![0; budget + 1], ..Default::default() };
    let mut raw = Vec::new();
    for r in per_root {
        let (leaves, ts) = r?;
        stats.pruned_budget += ts.pruned_budget;
        stats.pruned_zero += ts.pruned_zero;
        for (f, v, used) in leaves {
            if used == usize::MAX {
                stats.pruned_zero += 1;
                continue;
            }
            stats.total += 1;
            stats.histogram[used] += 1;
            stats.max_depth = stats.max_depth.max(used);
            raw.push((f, v));
        }
    }
    stats.pruned = stats.pruned_budget + stats.pruned_zero;
    let paths = if opts.merge {
        merge_terms(raw)
    } else {
        raw.into_iter().map(|(factors, constant)| PathTerm { constant, factors }).collect()
    };
    stats.stored = paths.len();

    Ok(ExpectationSeries {
        n: c.n,
        budget,
        num_thetas: c.num_thetas(),
        num_su4s: c.num_su4s(),
        circuit_fingerprint: circuit_fingerprint(c),
        noise_fingerprint: noise_fingerprint(&ops),
        paths,
        stats,
        warnings: gap_warnings(&ops),
    })
}

impl ExpectationSeries {
    pub fn evaluate(&self, params: &ParamPoint) -> Result<f64> {
        let cache = ParamCache::new(params)?;
        self.evaluate_cached(&cache)
    }

    pub fn evaluate_cached(&self, cache: &ParamCache) -> Result<f64> {
        cache.check(self.num_thetas, self.num_su4s)?;
        Ok(deterministic_sum(&self.paths, |p| p.constant * factor_product(&p.factors, cache)))
    }

    /// True when `c` has the structure this series was built from.
    pub fn matches(&self, c: &CircuitIR) -> bool {
        c.n == self.n && circuit_fingerprint(c) == self.circuit_fingerprint
    }

    pub fn stats_json(&self) -> serde_json::Value {
        serde_json::json!({
            "paths": self.stats.total,
            "pruned": self.stats.pruned,
            "pruned_budget": self.stats.pruned_budget,
            "pruned_zero": self.stats.pruned_zero,
            "stored_terms": self.stats.stored,
            "max_depth": self.stats.max_depth,
            "histogram": self.stats.histogram,
            "budget": self.budget,
            "warnings": self.warnings,
        })
    }
}

pub fn evaluate_expectation(s: &ExpectationSeries, params: &ParamPoint) -> Result<f64> {
    s.evaluate(params)
}

/// `(retained paths, pruned subtrees)`.
pub fn path_count(s: &ExpectationSeries) -> (usize, usize) {
    (s.stats.total, s.stats.pruned)
}

/// Largest number of branch events any path can meet: one per parametrized op.
pub fn max_branch_events(c: &CircuitIR) -> usize {
    c.num_parametrized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{gen_random_mixed, NoisePolicy};
    use crate::oracle::exact_expectation;
    use crate::pauli::lit;
    use crate::rng::stream_rng;
    use std::f64::consts::PI;

    fn hr() -> CircuitIR {
        CircuitIR::parse("qubits 1\nh 0\nrp Z t0").unwrap()
    }

    #[test]
    fn clifford_only_has_single_path() {
        let c = CircuitIR::parse("qubits 2\nh 0\ncx 0 1").unwrap();
        for l in 0..3 {
            let s = build_series(&c, &Observable::single(lit("ZZ")), l, SeriesOptions::default()).unwrap();
            assert_eq!(path_count(&s), (1, 0));
            assert_eq!(s.paths, vec![PathTerm { constant: 1.0, factors: vec![] }]);
        }
    }

    #[test]
    fn cos_path_for_rotated_plus_state() {
        let s = build_series(&hr(), &Observable::single(lit("X")), 1, SeriesOptions::default()).unwrap();
        assert_eq!(s.paths.len(), 1);
        assert_eq!(s.paths[0].factors, vec![Factor::Trig { param: 0, kind: crate::propagate::TrigKindKey::Cos }]);
        let v = s.evaluate(&ParamPoint::new(vec![PI / 8.0], vec![])).unwrap();
        assert!((v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-7);
        assert!(path_count(&s).0 <= 2);
    }

    #[test]
    fn zero_budget_gives_empty_series() {
        let s = build_series(&hr(), &Observable::single(lit("X")), 0, SeriesOptions::default()).unwrap();
        assert!(s.paths.is_empty());
        assert_eq!(s.evaluate(&ParamPoint::new(vec![0.4], vec![])).unwrap(), 0.0);
    }

    #[test]
    fn noisy_value() {
        let mut c = hr();
        c.noise_policy = NoisePolicy::Depol1(0.1);
        let s = build_series(&c, &Observable::single(lit("X")), 1, SeriesOptions::default()).unwrap();
        let v = s.evaluate(&ParamPoint::new(vec![0.0], vec![])).unwrap();
        assert!((v - 0.9).abs() < 1e-15);
    }

    #[test]
    fn identity_observable_is_one() {
        let mut c = gen_random_mixed(3, 4, 4, 2).unwrap();
        c.noise_policy = NoisePolicy::Depol1(0.3);
        let s = build_series(&c, &Observable::single(lit("III")), 0, SeriesOptions::default()).unwrap();
        let p = ParamPoint::random(&c, &mut stream_rng(1, 0));
        assert_eq!(s.evaluate(&p).unwrap(), 1.0);
    }

    #[test]
    fn single_haar_block_fans_out_to_fifteen() {
        let c = CircuitIR::parse("qubits 2\nhaar 0 1 g0").unwrap();
        let opts = SeriesOptions { merge: false, ..Default::default() };
        let s = build_series(&c, &Observable::single(lit("ZI")), 1, opts).unwrap();
        assert!(path_count(&s).0 <= 15);
        // only the diagonal children survive the input contraction
        assert_eq!(path_count(&s).0, 3);
    }

    #[test]
    fn parameter_mismatch_is_reported() {
        let s = build_series(&hr(), &Observable::single(lit("X")), 1, SeriesOptions::default()).unwrap();
        assert!(matches!(s.evaluate(&ParamPoint::new(vec![], vec![])), Err(Error::ParamMismatch(_))));
    }

    #[test]
    fn observable_parsing() {
        let o: Observable = "0.5*XX + -0.25*ZI".parse().unwrap();
        assert_eq!(o.rank(), 2);
        assert_eq!(o.terms()[1], (-0.25, lit("ZI")));
        let neg: Observable = "-ZZ".parse().unwrap();
        assert_eq!(neg.terms(), &[(-1.0, lit("ZZ"))]);
        assert!("XX + XX".parse::<Observable>().is_err());
        assert!("XX + Z".parse::<Observable>().is_err());
        assert!("XQ".parse::<Observable>().is_err());
    }

    #[test]
    fn full_budget_matches_oracle() {
        let mut rng = stream_rng(4, 0);
        for seed in 0..10 {
            let n = 2 + seed as usize % 3;
            let mut c = gen_random_mixed(n, 5, 8, seed).unwrap();
            let obs = Observable::new(vec![
                (0.7, PauliString::single(n, 0, crate::pauli::Pauli::Z)),
                (-0.4, PauliString::single(n, n - 1, crate::pauli::Pauli::X)),
            ])
            .unwrap();
            for noisy in [false, true] {
                if noisy {
                    c.noise_policy = NoisePolicy::Depol1(0.1);
                }
                let s = build_series(&c, &obs, 5, SeriesOptions::default()).unwrap();
                for _ in 0..3 {
                    let p = ParamPoint::random(&c, &mut rng);
                    let want = exact_expectation(&c, &obs, &p, noisy).unwrap();
                    let got = s.evaluate(&p).unwrap();
                    assert!((want - got).abs() < 1e-10, "seed {seed} noisy {noisy}: {want} vs {got}");
                }
            }
        }
    }

    #[test]
    fn merged_and_raw_agree() {
        let c = gen_random_mixed(3, 6, 6, 8).unwrap();
        let obs = Observable::single(lit("ZXZ"));
        let merged = build_series(&c, &obs, 4, SeriesOptions::default()).unwrap();
        let raw = build_series(&c, &obs, 4, SeriesOptions { merge: false, ..Default::default() }).unwrap();
        assert_eq!(merged.stats.total, raw.stats.total);
        let p = ParamPoint::random(&c, &mut stream_rng(2, 2));
        assert!((merged.evaluate(&p).unwrap() - raw.evaluate(&p).unwrap()).abs() < 1e-12);
    }
}
