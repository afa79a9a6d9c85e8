//! Numerical laboratory for polynomial curves, their exterior harmonic
//! moments, the associated equilibrium-measure energy field, and the
//! restricted normal-matrix eigenvalue gas.
//!
//! The crate is organized around the inverse moment problem: `curve`
//! carries the forward map from parametrization coefficients to exterior
//! harmonic moments, `moment_inverse` inverts it by Newton continuation,
//! `energy` verifies the variational characterization of the resulting
//! equilibrium measure, and `gas_sampler` / `analysis` sample and test
//! the eigenvalue gas against the predicted uniform density.

pub mod analysis;
pub mod curve;
pub mod domain;
pub mod energy;
pub mod gas_sampler;
pub mod laurent;
pub mod moment_inverse;

pub use analysis::{
    default_dilation, default_test_functions, histogram, moment_estimate, sample_bbox,
    support_fraction, weak_convergence_test, AnalysisError, DensityEstimate, TestFunction,
    WeakConvergenceReport,
};
pub use curve::{Containment, CurveError, MomentVector, PolynomialCurve};
pub use domain::DomainSpec;
pub use energy::{
    default_domain, discrete_energy, energy_exterior_closed_form, energy_quadrature,
    gaussian_positivity_lemma, gradient_check, potential_value, variational_verify, EnergyConfig,
    EnergyError, FieldGrid, NodeClass, Potential, VerifyReport,
};
pub use gas_sampler::{
    chain_rng, init_state, run, sweep, GasState, Record, SampleSet, SamplerConfig, SamplerError,
    Sidecar,
};
pub use laurent::{LaurentError, LaurentSeries};
pub use moment_inverse::{
    cusp_margin, initial_guess, potential_minimizer, solve, solve_shifted, ScaledParams,
    SolveError, SolveReport, SolverConfig,
};
