//! Truncated symmetry-adapted Pauli-path simulation of noisy parametrized and
//! random circuits.
//!
//! The engines expand observables (or the output distribution) along paths of
//! Pauli strings, charging one unit of a truncation budget `L` whenever a path
//! meets a parametrized layer in a non-trivial irrep. Under Pauli-diagonal
//! noise with spectral gap `γ` the discarded weight decays like `(1−γ)^L`.
//!
//! ```
//! use sympath::{build_series, CircuitIR, Observable, ParamPoint, SeriesOptions};
//!
//! let c = CircuitIR::parse("qubits 1\nh 0\nrp Z t0").unwrap();
//! let obs: Observable = "X".parse().unwrap();
//! let series = build_series(&c, &obs, 4, SeriesOptions::default()).unwrap();
//! let v = series.evaluate(&ParamPoint::new(vec![std::f64::consts::PI / 8.0], vec![])).unwrap();
//! assert!((v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
//! ```

pub mod analysis;
pub mod circuit;
pub mod clifford;
pub mod distribution;
pub mod error;
pub mod expectation;
pub mod irrep;
pub mod noise;
pub mod oracle;
pub mod pauli;
pub mod propagate;
pub mod rng;

#[cfg(test)]
mod testutil;

pub use analysis::{
    anticoncentration_estimate, anticoncentration_of_circuit, error_bound, mc_l2_error, porter_thomas_moment,
    tv_distance, AntiConcentration, ErrorSweep, NormFactor,
};
pub use circuit::{
    gen_2d_lattice, gen_brickwork, gen_random_mixed, BrickKind, CircuitIR, Diagnostic, Layer, NoisePolicy, ParamPoint,
};
pub use clifford::{CliffordGate, CliffordTableau, Direction};
pub use distribution::{
    build_distribution, contract_full, marginal_value, prob_value, sample_bitstring, trivial_generators,
    ContractionTerm, DistributionOptions, Engine, EvaluatedDistribution, SampleRecord, TrivialGroup,
    TruncatedDistribution,
};
pub use error::{Error, Result};
pub use expectation::{
    build_series, evaluate_expectation, path_count, ExpectationSeries, Observable, PathTerm, SeriesOptions,
};
pub use irrep::{haar_su4, su4_adjoint, u1_pair_coeffs, AdjointMatrix, Su4, TrigFactor, TrigKind};
pub use noise::{NoiseChannel, SpectralGap};
pub use oracle::{exact_distribution, exact_expectation, DenseState};
pub use pauli::{BitString, PartialAssignment, Pauli, PauliString, SupportMask};
pub use propagate::{Factor, ParamCache};
pub use rng::stream_rng;
