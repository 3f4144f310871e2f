//! Circuit sources, parameter sources and small flag grammars.

use std::collections::BTreeMap;
use std::path::PathBuf;

use sympath::analysis::draw_params;
use sympath::{gen_2d_lattice, gen_brickwork, gen_random_mixed, BrickKind, CircuitIR, NoisePolicy, ParamPoint};

use crate::fail::{Failure, Outcome};

/// Where the circuit comes from plus an optional noise override.
#[derive(Debug, Clone, clap::Args)]
pub struct CircuitArgs {
    /// Circuit file in the text format.
    #[arg(long, conflicts_with = "gen")]
    pub circuit: Option<PathBuf>,

    /// Generator spec, e.g. `brickwork:n=5,depth=5,kind=rotation`,
    /// `lattice:n1=1,layers=2` or `mixed:n=4,rotations=6,cliffords=10`.
    #[arg(long)]
    pub gen: Option<String>,

    /// Overrides the circuit's noise policy: `none`, `depol1:P` or `depol2:P`.
    #[arg(long)]
    pub noise: Option<String>,
}

impl CircuitArgs {
    pub fn load(&self, seed: Option<u64>) -> Outcome<CircuitIR> {
        let mut c = match (&self.circuit, &self.gen) {
            (Some(path), None) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Failure::validation(format!("cannot read {}: {e}", path.display())))?;
                CircuitIR::parse(&text)?
            }
            (None, Some(spec)) => {
                let seed = seed.ok_or_else(|| Failure::validation("--seed is required with --gen"))?;
                generate(spec, seed)?
            }
            _ => return Err(Failure::validation("give exactly one of --circuit or --gen")),
        };
        if let Some(noise) = &self.noise {
            c.noise_policy = parse_noise(noise)?;
        }
        c.ensure_valid()?;
        Ok(c)
    }
}

fn generate(spec: &str, seed: u64) -> Outcome<CircuitIR> {
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let mut kv = BTreeMap::new();
    for item in rest.split(',').filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Failure::validation(format!("generator option `{item}` is not key=value")))?;
        kv.insert(k.trim(), v.trim());
    }
    let mut take = |key: &str| -> Outcome<usize> {
        let v = kv.remove(key).ok_or_else(|| Failure::validation(format!("generator `{kind}` needs `{key}`")))?;
        v.parse().map_err(|_| Failure::validation(format!("`{key}={v}` is not a non-negative integer")))
    };
    let c = match kind {
        "brickwork" => {
            let (n, depth) = (take("n")?, take("depth")?);
            let brick = match kv.remove("kind").unwrap_or("haar") {
                "haar" => BrickKind::Haar,
                "rotation" => BrickKind::Rotation,
                other => return Err(Failure::validation(format!("unknown brickwork kind `{other}`"))),
            };
            gen_brickwork(n, depth, brick, seed)?
        }
        "lattice" => {
            let (n1, layers) = (take("n1")?, take("layers")?);
            gen_2d_lattice(n1, layers, seed)?
        }
        "mixed" => {
            let (n, rotations, cliffords) = (take("n")?, take("rotations")?, take("cliffords")?);
            gen_random_mixed(n, rotations, cliffords, seed)?
        }
        other => return Err(Failure::validation(format!("unknown generator `{other}`"))),
    };
    if let Some(key) = kv.keys().next() {
        return Err(Failure::validation(format!("unknown generator option `{key}`")));
    }
    Ok(c)
}

pub fn parse_noise(s: &str) -> Outcome<NoisePolicy> {
    let bad = || Failure::validation(format!("noise spec `{s}` is not none, depol1:P or depol2:P"));
    if s == "none" {
        return Ok(NoisePolicy::None);
    }
    let (kind, p) = s.split_once(':').ok_or_else(bad)?;
    let p: f64 = p.parse().map_err(|_| bad())?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Failure::validation(format!("noise probability {p} outside [0, 1]")));
    }
    match kind {
        "depol1" => Ok(NoisePolicy::Depol1(p)),
        "depol2" => Ok(NoisePolicy::Depol2(p)),
        _ => Err(bad()),
    }
}

/// Parameter source: explicit angles or seeded draws, never both.
#[derive(Debug, Clone, clap::Args)]
pub struct ParamArgs {
    /// Explicit rotation angles, comma separated (circuits without Haar blocks).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "draws")]
    pub theta: Option<Vec<f64>>,

    /// Number of uniform / Haar parameter draws derived from --seed.
    #[arg(long)]
    pub draws: Option<usize>,
}

impl ParamArgs {
    pub fn points(&self, c: &CircuitIR, seed: Option<u64>) -> Outcome<Vec<ParamPoint>> {
        match (&self.theta, self.draws) {
            (Some(thetas), None) => {
                let p = ParamPoint::new(thetas.clone(), Vec::new());
                p.check(c)?;
                Ok(vec![p])
            }
            (None, Some(0)) => Err(Failure::validation("--draws must be positive")),
            (None, Some(draws)) => {
                let seed = seed.ok_or_else(|| Failure::validation("--seed is required with --draws"))?;
                Ok((0..draws).map(|i| draw_params(c, seed, i)).collect())
            }
            (None, None) if c.num_parametrized() == 0 => Ok(vec![ParamPoint::zeros(c)]),
            _ => Err(Failure::validation("give exactly one parameter source: --theta or --draws")),
        }
    }

    pub fn single(&self, c: &CircuitIR, seed: Option<u64>) -> Outcome<ParamPoint> {
        let mut points = self.points(c, seed)?;
        if points.len() != 1 {
            return Err(Failure::validation("this command evaluates a single parameter point"));
        }
        Ok(points.pop().unwrap())
    }
}

/// `3`, `1..6` (inclusive) or `0,2,4`.
pub fn parse_budgets(s: &str) -> Outcome<Vec<usize>> {
    let bad = || Failure::validation(format!("budget list `{s}` is not N, A..B or a comma list"));
    if let Some((a, b)) = s.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let (a, b): (usize, usize) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}
