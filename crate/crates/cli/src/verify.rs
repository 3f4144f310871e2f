//! Oracle-equivalence and invariant checks on freshly generated small circuits.

use rayon::prelude::*;
use sympath::analysis::draw_params;
use sympath::expectation::max_branch_events;
use sympath::irrep::max_abs_diff;
use sympath::{
    build_distribution, build_series, exact_distribution, exact_expectation, gen_brickwork, gen_random_mixed, haar_su4,
    path_count, stream_rng, su4_adjoint, BrickKind, CircuitIR, DistributionOptions, Engine, NoisePolicy, Observable,
    Pauli, PauliString, SeriesOptions,
};

use crate::fail::{Failure, Outcome};

#[derive(Debug, clap::Args)]
pub struct VerifyArgs {
    /// Largest register in the generated ensembles (2..=5).
    #[arg(long, default_value_t = 4)]
    pub max_n: usize,
    /// Circuits per ensemble.
    #[arg(long, default_value_t = 20)]
    pub circuits: usize,
    #[arg(long)]
    pub seed: u64,
}

const EXPECT_TOL: f64 = 1e-9;
const DIST_TOL: f64 = 1e-9;
const MODE_TOL: f64 = 1e-10;

struct Check {
    name: &'static str,
    worst: f64,
    limit: f64,
}

impl Check {
    fn passed(&self) -> bool {
        self.worst <= self.limit
    }
}

fn random_pauli(n: usize, seed: u64, k: u64) -> PauliString {
    let mut rng = stream_rng(seed, k);
    let mut p = PauliString::identity(n);
    while p.is_identity_letters() {
        for q in 0..n {
            p.set(q, [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][rand::Rng::random_range(&mut rng, 0..4)]);
        }
    }
    p
}

fn ensemble(a: &VerifyArgs) -> Outcome<Vec<(CircuitIR, Observable)>> {
    (0..a.circuits)
        .map(|i| {
            let n = 2 + i % (a.max_n - 1);
            let seed = a.seed.wrapping_add(i as u64);
            let c = gen_random_mixed(n, 1 + i % 8, 10, seed)?;
            Ok((c, Observable::single(random_pauli(n, seed, 1))))
        })
        .collect()
}

fn expectation_error(c: &CircuitIR, obs: &Observable, seed: u64, noisy: bool) -> Outcome<f64> {
    let opts = SeriesOptions { noiseless: !noisy, ..Default::default() };
    let s = build_series(c, obs, max_branch_events(c), opts)?;
    let mut worst = 0.0f64;
    for k in 0..3 {
        let p = draw_params(c, seed, k);
        worst = worst.max((s.evaluate(&p)? - exact_expectation(c, obs, &p, noisy)?).abs());
    }
    Ok(worst)
}

fn path_law(c: &CircuitIR, obs: &Observable) -> Outcome<f64> {
    let mut worst = 0.0f64;
    for l in 0..=6i32 {
        let s = build_series(c, obs, l as usize, SeriesOptions::default())?;
        worst = worst.max(path_count(&s).0 as f64 / (obs.rank() as f64 * 2f64.powi(l)));
    }
    Ok(worst)
}

fn haar_block_paths() -> Outcome<f64> {
    let c = CircuitIR::parse("qubits 2\nhaar 0 1 g0")?;
    let mut worst = 0usize;
    for k in 1..16u64 {
        let root = PauliString::single(2, 0, Pauli::from_bits(k & 1 == 1, k & 2 == 2)).mul(&PauliString::single(
            2,
            1,
            Pauli::from_bits(k & 4 == 4, k & 8 == 8),
        ))?;
        let (_, root) = root.split_sign()?;
        if root.is_identity_letters() {
            continue;
        }
        let opts = SeriesOptions { merge: false, ..Default::default() };
        worst = worst.max(path_count(&build_series(&c, &Observable::single(root), 1, opts)?).0);
    }
    Ok(worst as f64)
}

/// Worst normalisation error, full-budget error and engine disagreement.
fn distribution_errors(n: usize, seed: u64) -> Outcome<[f64; 3]> {
    let mut c = gen_brickwork(n, 2, BrickKind::Haar, seed)?;
    c.noise_policy = NoisePolicy::Depol2(0.15);
    let p = draw_params(&c, seed, 0);
    let oracle = exact_distribution(&c, &p, true)?;
    let full = c.num_parametrized();
    let vector = |l: usize, engine: Engine| -> Outcome<Vec<f64>> {
        let opts = DistributionOptions { engine, ..Default::default() };
        Ok(build_distribution(&c, l, opts)?.evaluate(&p)?.full_vector()?)
    };
    let mut errs = [0.0f64; 3];
    for l in 0..=full.max(4) {
        let bi = vector(l, Engine::Bidirectional)?;
        errs[0] = errs[0].max((bi.iter().sum::<f64>() - 1.0).abs());
        if l >= full {
            errs[1] = errs[1].max(max_diff(&bi, &oracle));
        }
        if (1..=4).contains(&l) {
            errs[2] = errs[2].max(max_diff(&bi, &vector(l, Engine::DenseRoot)?));
        }
    }
    Ok(errs)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    fold_max(a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect())
}

fn irrep_defect(seed: u64) -> Outcome<[f64; 2]> {
    let mut rng = stream_rng(seed, 0);
    let mut worst = [0.0f64; 2];
    for _ in 0..50 {
        let (g, h) = (haar_su4(&mut rng), haar_su4(&mut rng));
        let (vg, vh) = (su4_adjoint(&g)?, su4_adjoint(&h)?);
        worst[0] = worst[0].max(vg.orthogonality_defect());
        worst[1] = worst[1].max(max_abs_diff(&su4_adjoint(&(g * h))?, &vg.mul(&vh)));
    }
    Ok(worst)
}

/// Maximum that keeps a NaN visible, so a broken value cannot pass.
fn fold_max(xs: Vec<f64>) -> f64 {
    xs.into_iter().fold(0.0, |m, x| if x.is_nan() || m.is_nan() { f64::NAN } else { m.max(x) })
}

pub fn verify(a: &VerifyArgs) -> Outcome<()> {
    if !(2..=5).contains(&a.max_n) {
        return Err(Failure::validation("--max-n must lie in 2..=5"));
    }
    if a.circuits == 0 {
        return Err(Failure::validation("--circuits must be positive"));
    }
    let circuits = ensemble(a)?;
    let noisy: Vec<(CircuitIR, Observable)> = circuits
        .iter()
        .map(|(c, o)| {
            let mut c = c.clone();
            c.noise_policy = NoisePolicy::Depol1(0.1);
            (c, o.clone())
        })
        .collect();

    let noiseless_err = circuits
        .par_iter()
        .enumerate()
        .map(|(i, (c, o))| expectation_error(c, o, a.seed ^ i as u64, false))
        .collect::<Outcome<Vec<_>>>()?;
    let noisy_err = noisy
        .par_iter()
        .enumerate()
        .map(|(i, (c, o))| expectation_error(c, o, a.seed ^ i as u64, true))
        .collect::<Outcome<Vec<_>>>()?;
    let law = circuits.par_iter().map(|(c, o)| path_law(c, o)).collect::<Outcome<Vec<_>>>()?;
    let dist = (0..a.circuits.min(8))
        .into_par_iter()
        .map(|i| distribution_errors(2 + i % (a.max_n.min(4) - 1), a.seed.wrapping_add(i as u64)))
        .collect::<Outcome<Vec<_>>>()?;
    let irrep = irrep_defect(a.seed)?;

    let checks = [
        Check { name: "noiseless expectation vs statevector", worst: fold_max(noiseless_err), limit: EXPECT_TOL },
        Check { name: "noisy expectation vs density matrix", worst: fold_max(noisy_err), limit: EXPECT_TOL },
        Check { name: "path count / (rank * 2^L)", worst: fold_max(law), limit: 1.0 },
        Check { name: "single Haar block paths at L=1", worst: haar_block_paths()?, limit: 15.0 },
        Check {
            name: "distribution normalisation",
            worst: fold_max(dist.iter().map(|e| e[0]).collect()),
            limit: DIST_TOL,
        },
        Check {
            name: "full-budget distribution vs oracle",
            worst: fold_max(dist.iter().map(|e| e[1]).collect()),
            limit: DIST_TOL,
        },
        Check {
            name: "bidirectional vs dense-root",
            worst: fold_max(dist.iter().map(|e| e[2]).collect()),
            limit: MODE_TOL,
        },
        Check { name: "adjoint orthogonality", worst: irrep[0], limit: 1e-9 },
        Check { name: "adjoint homomorphism", worst: irrep[1], limit: 1e-8 },
    ];
    let mut failed = 0;
    println!("check,status,worst,limit");
    for c in &checks {
        let status = if c.passed() { "pass" } else { "FAIL" };
        failed += usize::from(!c.passed());
        println!("{},{status},{:.3e},{:.1e}", c.name, c.worst, c.limit);
    }
    if failed > 0 {
        return Err(Failure::Verify(failed));
    }
    Ok(())
}
