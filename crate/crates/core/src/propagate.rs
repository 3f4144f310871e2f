//! Depth-first truncated path enumeration shared by both engines.

use serde::{Deserialize, Serialize};

use crate::circuit::{Op, ParamPoint};
use crate::clifford::Direction;
use crate::error::{Error, Result};
use crate::irrep::{adjoint_index, adjoint_letters, su4_adjoint, AdjointMatrix, TrigFactor, TrigKind, ADJOINT_DIM};
use crate::pauli::PauliString;

/// Parametric factor of a path; evaluates against a [`ParamCache`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Factor {
    /// `cos 2θ` or `sin 2θ` of angle `param`; signs live in the path constant.
    Trig { param: usize, kind: TrigKindKey },
    /// Entry `v[row][col]` of the adjoint matrix of unitary `param`.
    Adjoint { param: usize, row: u8, col: u8 },
}

/// Orderable mirror of [`TrigKind`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TrigKindKey {
    Cos,
    Sin,
}

impl Factor {
    pub fn from_trig(t: TrigFactor) -> (Self, f64) {
        let kind = match t.kind {
            TrigKind::Cos => TrigKindKey::Cos,
            TrigKind::Sin => TrigKindKey::Sin,
        };
        (Factor::Trig { param: t.param_index, kind }, f64::from(t.sign))
    }

    #[inline]
    pub fn value(&self, cache: &ParamCache) -> f64 {
        match *self {
            Factor::Trig { param, kind } => {
                let (c, s) = cache.trig[param];
                match kind {
                    TrigKindKey::Cos => c,
                    TrigKindKey::Sin => s,
                }
            }
            Factor::Adjoint { param, row, col } => cache.adjoint[param].get(row as usize, col as usize),
        }
    }
}

/// Per-parameter-point lookup tables: `(cos 2θ, sin 2θ)` and adjoint matrices.
#[derive(Debug, Clone)]
pub struct ParamCache {
    trig: Vec<(f64, f64)>,
    adjoint: Vec<AdjointMatrix>,
}

impl ParamCache {
    pub fn new(params: &ParamPoint) -> Result<Self> {
        Ok(Self {
            trig: params.thetas.iter().map(|&t| crate::irrep::u1_pair_coeffs(t)).collect(),
            adjoint: params.su4s.iter().map(su4_adjoint).collect::<Result<_>>()?,
        })
    }

    pub fn check(&self, thetas: usize, su4s: usize) -> Result<()> {
        if self.trig.len() != thetas || self.adjoint.len() != su4s {
            return Err(Error::ParamMismatch(format!(
                "expected {thetas} angles and {su4s} unitaries, got {} and {}",
                self.trig.len(),
                self.adjoint.len()
            )));
        }
        Ok(())
    }
}

/// Product of factors; sorted slices give canonical keys for merging.
#[inline]
pub fn factor_product(factors: &[Factor], cache: &ParamCache) -> f64 {
    factors.iter().fold(1.0, |acc, f| acc * f.value(cache))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Sweep {
    /// Heisenberg direction, from the end of the op slice toward its start.
    TowardInput,
    /// Schrödinger direction, from the start of the op slice toward its end.
    TowardOutput,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeStats {
    /// Leaves handed to the caller.
    pub leaves: usize,
    /// Children dropped because the budget was exhausted.
    pub pruned_budget: usize,
    /// Subtrees dropped by a zero noise eigenvalue.
    pub pruned_zero: usize,
    /// Subtrees dropped by the run-length predicate.
    pub pruned_dedup: usize,
}

impl TreeStats {
    pub fn absorb(&mut self, o: &TreeStats) {
        self.leaves += o.leaves;
        self.pruned_budget += o.pruned_budget;
        self.pruned_zero += o.pruned_zero;
        self.pruned_dedup += o.pruned_dedup;
    }
}

pub(crate) struct Tree<'a> {
    pub ops: &'a [Op],
    pub sweep: Sweep,
    pub budget: usize,
    /// Prune any branch with a run of this many consecutive trivial sites.
    /// The run counter starts at this value, so the first site must branch.
    pub max_trivial_run: Option<usize>,
}

pub(crate) struct Visit<'v> {
    pub pauli: &'v PauliString,
    pub constant: f64,
    pub factors: &'v [Factor],
    pub used: usize,
}

impl Tree<'_> {
    pub fn run(
        &self,
        root: PauliString,
        constant: f64,
        stats: &mut TreeStats,
        leaf: &mut dyn FnMut(Visit<'_>) -> Result<()>,
    ) -> Result<()> {
        let mut factors = Vec::with_capacity(self.budget);
        let run = self.max_trivial_run.unwrap_or(0);
        self.step(0, root, constant, &mut factors, 0, run, stats, leaf)
    }

    fn op_at(&self, i: usize) -> &Op {
        match self.sweep {
            Sweep::TowardInput => &self.ops[self.ops.len() - 1 - i],
            Sweep::TowardOutput => &self.ops[i],
        }
    }

    /// Returns false when the branch must be pruned by the run-length rule.
    fn trivial_step(&self, run: &mut usize, stats: &mut TreeStats) -> bool {
        if let Some(max) = self.max_trivial_run {
            *run += 1;
            if *run >= max {
                stats.pruned_dedup += 1;
                return false;
            }
        }
        true
    }

    #[allow(clippy::too_many_arguments)]
    fn step(
        &self,
        i: usize,
        mut p: PauliString,
        mut constant: f64,
        factors: &mut Vec<Factor>,
        used: usize,
        mut run: usize,
        stats: &mut TreeStats,
        leaf: &mut dyn FnMut(Visit<'_>) -> Result<()>,
    ) -> Result<()> {
        let mut i = i;
        while i < self.ops.len() {
            match self.op_at(i) {
                Op::Clifford(t) => {
                    let dir = match self.sweep {
                        Sweep::TowardInput => Direction::Adjoint,
                        Sweep::TowardOutput => Direction::Forward,
                    };
                    p = t.conjugate_unchecked(&p, dir);
                }
                Op::Noise(ch) => {
                    let e = ch.eigenvalue_unchecked(&p)?;
                    if e == 0.0 {
                        stats.pruned_zero += 1;
                        return Ok(());
                    }
                    constant *= e;
                }
                Op::Rotation { axis, param } => {
                    if p.commutes_unchecked(axis) {
                        if !self.trivial_step(&mut run, stats) {
                            return Ok(());
                        }
                    } else {
                        if used == self.budget {
                            stats.pruned_budget += 2;
                            return Ok(());
                        }
                        let q = PauliString::branch_partner_unchecked(axis, &p);
                        let sin_sign = match self.sweep {
                            Sweep::TowardInput => -1.0,
                            Sweep::TowardOutput => 1.0,
                        };
                        factors.push(Factor::Trig { param: *param, kind: TrigKindKey::Cos });
                        self.step(i + 1, p, constant, factors, used + 1, 0, stats, leaf)?;
                        factors.pop();
                        factors.push(Factor::Trig { param: *param, kind: TrigKindKey::Sin });
                        self.step(i + 1, q, constant * sin_sign, factors, used + 1, 0, stats, leaf)?;
                        factors.pop();
                        return Ok(());
                    }
                }
                Op::Haar { a, b, param } => {
                    let (la, lb) = (p.get(*a), p.get(*b));
                    match adjoint_index(la, lb) {
                        None => {
                            if !self.trivial_step(&mut run, stats) {
                                return Ok(());
                            }
                        }
                        Some(k) => {
                            if used == self.budget {
                                stats.pruned_budget += ADJOINT_DIM;
                                return Ok(());
                            }
                            for kp in 0..ADJOINT_DIM {
                                let (na, nb) = adjoint_letters(kp);
                                let mut child = p.clone();
                                child.set(*a, na);
                                child.set(*b, nb);
                                let (row, col) = match self.sweep {
                                    Sweep::TowardInput => (k, kp),
                                    Sweep::TowardOutput => (kp, k),
                                };
                                factors.push(Factor::Adjoint { param: *param, row: row as u8, col: col as u8 });
                                self.step(i + 1, child, constant, factors, used + 1, 0, stats, leaf)?;
                                factors.pop();
                            }
                            return Ok(());
                        }
                    }
                }
            }
            i += 1;
        }
        stats.leaves += 1;
        leaf(Visit { pauli: &p, constant, factors, used })
    }
}

/// Sorted copy of a factor list, used as a merge key.
pub(crate) fn canonical(factors: &[Factor]) -> Vec<Factor> {
    let mut v = factors.to_vec();
    v.sort_unstable();
    v
}

/// Sums `values` with a fixed chunked reduction so the result does not depend
/// on the number of worker threads.
pub(crate) fn deterministic_sum<T: Sync>(items: &[T], f: impl Fn(&T) -> f64 + Sync) -> f64 {
    use rayon::prelude::*;
    const CHUNK: usize = 4096;
    let partial: Vec<f64> = items.par_chunks(CHUNK).map(|c| c.iter().map(&f).sum::<f64>()).collect();
    partial.iter().sum()
}
