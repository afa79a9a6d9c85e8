//! Batch front end: reproducible solve / energy-map / sample / analyze
//! pipelines over JSON configs. All randomness is surfaced in the config;
//! repeated runs produce byte-identical CSV/JSON outputs at any thread
//! count.

use curvegas_core::{
    analysis, default_dilation, default_domain, default_test_functions, energy, gas_sampler,
    moment_inverse, AnalysisError, CurveError, DomainSpec, EnergyConfig, EnergyError,
    MomentVector, PolynomialCurve, Potential, SampleSet, SamplerConfig, SamplerError, SolveError,
    SolveReport, SolverConfig,
};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

/// Errors carrying the process exit code: 1 input, 2 mathematical regime,
/// 3 internal tolerance.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Regime(String),
    Tolerance(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Regime(_) => 2,
            CliError::Tolerance(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Regime(m) | CliError::Tolerance(m) => m,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message())
    }
}

impl std::error::Error for CliError {}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::HessianDegenerate(_) => {
                CliError::Input("solve-curve requires |t2| < 1/2".into())
            }
            SolveError::NoConvergence { .. }
            | SolveError::InvalidCurve
            | SolveError::MultipleMinima => CliError::Regime(e.to_string()),
            SolveError::Curve(c) => c.into(),
        }
    }
}

impl From<CurveError> for CliError {
    fn from(e: CurveError) -> Self {
        match e {
            CurveError::QuadratureNotConverged { .. }
            | CurveError::InteriorMomentMismatch { .. } => CliError::Tolerance(e.to_string()),
            CurveError::Inversion { .. } => CliError::Regime(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<EnergyError> for CliError {
    fn from(e: EnergyError) -> Self {
        match e {
            EnergyError::Curve(c) => c.into(),
            EnergyError::QuadratureTolerance { .. } | EnergyError::InconsistentPair(_) => {
                CliError::Tolerance(e.to_string())
            }
            EnergyError::Io(io) => CliError::Input(io.to_string()),
            other => CliError::Regime(other.to_string()),
        }
    }
}

impl From<SamplerError> for CliError {
    fn from(e: SamplerError) -> Self {
        match e {
            SamplerError::Curve(c) => c.into(),
            SamplerError::InitPlacement => CliError::Regime(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Curve(c) => c.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

/// Analysis grids and observables.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub grid_nx: usize,
    pub grid_ny: usize,
    /// Support-fraction dilation; `None` picks 1 + 2 N^(-1/2).
    pub dilation: Option<f64>,
    /// Interior moments v_k are estimated for k = 0..=max_moment.
    pub max_moment: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            grid_nx: 64,
            grid_ny: 64,
            dilation: None,
            max_moment: 3,
        }
    }
}

/// The versioned run configuration. Unknown fields are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// Potential data (t0; t1..t_{n+1}), shared with the moment target.
    pub potential: MomentVector,
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub energy: EnergyConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("bad config {}: {e}", path.display())))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::Input(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    /// Fill every defaulted knob so the echoed config round-trips to the
    /// exact values used: domain, proposal sigma, seed override.
    pub fn resolve(mut self, seed_override: Option<u64>) -> Result<Self, CliError> {
        if self.potential.t(2).norm() >= 0.5 {
            return Err(CliError::Input("solve-curve requires |t2| < 1/2".into()));
        }
        if let Some(seed) = seed_override {
            self.sampler.seed = seed;
        }
        if self.sampler.proposal_sigma.is_none() {
            self.sampler.proposal_sigma =
                Some(self.sampler.effective_sigma(self.potential.t0()));
        }
        if self.domain.is_none() {
            let p = Potential::from_moments(&self.potential);
            self.domain = Some(default_domain(&p)?);
        }
        Ok(self)
    }

    pub fn domain_spec(&self) -> Result<&DomainSpec, CliError> {
        self.domain
            .as_ref()
            .ok_or_else(|| CliError::Input("config must be resolved before use".into()))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Input(format!("serialize {}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn echo_config(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out)?;
    write_json(&out.join("resolved_config.json"), cfg)
}

/// Solve the inverse moment problem; writes curve.json and
/// solve_report.json.
pub fn cmd_solve_curve(
    cfg: &RunConfig,
    out: &Path,
) -> Result<(PolynomialCurve, SolveReport), CliError> {
    echo_config(cfg, out)?;
    let (curve, report) = moment_inverse::solve_shifted(&cfg.potential, &cfg.solver)?;
    write_json(&out.join("curve.json"), &curve)?;
    write_json(&out.join("solve_report.json"), &report)?;
    Ok((curve, report))
}

/// Solve, then verify the variational principle on a field grid; writes
/// field.csv and verify_report.json.
pub fn cmd_energy_map(
    cfg: &RunConfig,
    out: &Path,
) -> Result<energy::VerifyReport, CliError> {
    let (curve, _) = cmd_solve_curve(cfg, out)?;
    let p = Potential::from_moments(&cfg.potential);
    let domain = cfg.domain_spec()?;
    let (grid, report) = energy::variational_verify(&p, &curve, domain, &cfg.energy)?;
    let mut buf = Vec::new();
    grid.write_csv(&mut buf)?;
    std::fs::write(out.join("field.csv"), buf)?;
    write_json(&out.join("verify_report.json"), &report)?;
    Ok(report)
}

/// Solve, then run the eigenvalue-gas sampler; writes samples.csv, the
/// samples.json provenance sidecar and timing.txt (wall time lives
/// outside the deterministic CSV/JSON outputs).
pub fn cmd_sample(cfg: &RunConfig, out: &Path) -> Result<SampleSet, CliError> {
    let (curve, _) = cmd_solve_curve(cfg, out)?;
    let p = Potential::from_moments(&cfg.potential);
    let domain = cfg.domain_spec()?;
    let started = std::time::Instant::now();
    let set = gas_sampler::run(&cfg.sampler, &p, &curve, domain)?;
    let wall = started.elapsed();
    let mut buf = Vec::new();
    set.write_csv(&mut buf)?;
    std::fs::write(out.join("samples.csv"), buf)?;
    write_json(&out.join("samples.json"), &set.sidecar())?;
    std::fs::write(
        out.join("timing.txt"),
        format!("sampler_wall_ms: {}\n", wall.as_millis()),
    )?;
    Ok(set)
}

/// Moment rows of the analysis report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentReport {
    pub k: usize,
    pub empirical: [f64; 2],
    pub stderr: Option<f64>,
    pub predicted: [f64; 2],
    pub z_score: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentsReport {
    pub t0: f64,
    pub moments: Vec<MomentReport>,
    pub max_abs_z: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupportReport {
    pub dilation: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalyzeOutcome {
    pub moments: MomentsReport,
    pub weak_convergence: analysis::WeakConvergenceReport,
    pub support: SupportReport,
}

/// Analyze a recorded sample set against the predicted equilibrium
/// measure; writes density.csv, moments.json and weak_convergence.json.
pub fn cmd_analyze(
    cfg: &RunConfig,
    samples_csv: &Path,
    out: &Path,
) -> Result<AnalyzeOutcome, CliError> {
    echo_config(cfg, out)?;
    let sidecar_path = samples_csv.with_extension("json");
    if !samples_csv.exists() {
        return Err(CliError::Input(format!(
            "sample set {} does not exist",
            samples_csv.display()
        )));
    }
    let set = SampleSet::read_files(samples_csv, &sidecar_path)?;
    let (curve, _) = moment_inverse::solve_shifted(&cfg.potential, &cfg.solver)?;
    let t0 = cfg.potential.t0();

    let est = analysis::histogram(
        &set,
        analysis::sample_bbox(&set)?,
        cfg.analysis.grid_nx,
        cfg.analysis.grid_ny,
    )?;
    let mut buf = Vec::new();
    est.write_csv(&mut buf)?;
    std::fs::write(out.join("density.csv"), buf)?;

    let kmax = cfg.analysis.max_moment;
    let predicted = curve.interior_moments(kmax, 1e-9)?;
    let mut rows = Vec::with_capacity(kmax + 1);
    let mut max_z: Option<f64> = None;
    for (k, pred) in predicted.iter().enumerate() {
        let (mean, stderr) = analysis::moment_estimate(&set, k, t0)?;
        let z_score = stderr.map(|se| analysis::z_score(mean, *pred, se));
        if let (Some(z), true) = (z_score, k > 0) {
            max_z = Some(max_z.map_or(z, |m| m.max(z)));
        }
        rows.push(MomentReport {
            k,
            empirical: [mean.re, mean.im],
            stderr,
            predicted: [pred.re, pred.im],
            z_score,
        });
    }
    let moments = MomentsReport {
        t0,
        moments: rows,
        max_abs_z: max_z,
    };
    write_json(&out.join("moments.json"), &moments)?;

    let weak = analysis::weak_convergence_test(&set, &curve, t0, &default_test_functions(&curve))?;
    let dilation = cfg
        .analysis
        .dilation
        .unwrap_or_else(|| default_dilation(set.n_particles()));
    let support = SupportReport {
        dilation,
        fraction: analysis::support_fraction(&set, &curve, dilation)?,
    };
    let outcome = AnalyzeOutcome {
        moments,
        weak_convergence: weak,
        support,
    };
    write_json(&out.join("weak_convergence.json"), &outcome.weak_convergence)?;
    write_json(&out.join("support.json"), &outcome.support)?;
    Ok(outcome)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub stages_completed: Vec<String>,
    pub energy_pass: bool,
    pub support_fraction: f64,
    pub support_ok: bool,
    pub weak_convergence_max_z: Option<f64>,
    pub weak_convergence_ok: bool,
    pub moments_max_z: Option<f64>,
    pub moments_ok: bool,
    pub pass: bool,
}

/// Full pipeline: solve, energy map, sample, analyze, one summary with an
/// overall pass/fail. Stops at the first failing stage, preserving the
/// outputs already written.
pub fn cmd_pipeline(cfg: &RunConfig, out: &Path) -> Result<PipelineSummary, CliError> {
    let mut stages = Vec::new();
    let energy_report = cmd_energy_map(cfg, out)?; // also writes curve + report
    stages.push("solve".to_string());
    stages.push("energy_map".to_string());
    cmd_sample(cfg, out)?;
    stages.push("sample".to_string());
    let analyzed = cmd_analyze(cfg, &out.join("samples.csv"), out)?;
    stages.push("analyze".to_string());

    let support_ok = analyzed.support.fraction >= 0.95;
    let weak_ok = analyzed
        .weak_convergence
        .max_abs_z
        .map(|z| z <= 4.0)
        .unwrap_or(false);
    let moments_ok = analyzed.moments.max_abs_z.map(|z| z <= 4.0).unwrap_or(false);
    let summary = PipelineSummary {
        stages_completed: stages,
        energy_pass: energy_report.pass,
        support_fraction: analyzed.support.fraction,
        support_ok,
        weak_convergence_max_z: analyzed.weak_convergence.max_abs_z,
        weak_convergence_ok: weak_ok,
        moments_max_z: analyzed.moments.max_abs_z,
        moments_ok,
        pass: energy_report.pass && support_ok && weak_ok && moments_ok,
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Shared command-line arguments.
#[derive(Debug, Clone)]
pub struct CommonArgs {
    pub config: PathBuf,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
}

pub fn init_threads(threads: Option<usize>) {
    if let Some(k) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
}
