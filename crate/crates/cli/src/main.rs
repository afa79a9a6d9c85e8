use clap::{Args, Parser, Subcommand};
use curvegas_cli::{
    cmd_analyze, cmd_energy_map, cmd_pipeline, cmd_sample, cmd_solve_curve, init_threads,
    CliError, RunConfig,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(
    name = "curvegas",
    about = "Inverse moment problem, equilibrium-measure verification and \
             eigenvalue-gas sampling for polynomial curves",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Cap on worker threads; outputs are independent of the cap.
    #[arg(long)]
    threads: Option<usize>,
    /// Override the sampler seed from the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Recover the curve from its area and exterior harmonic moments.
    SolveCurve(Common),
    /// Map the energy field over the domain and verify the variational
    /// principle.
    EnergyMap(Common),
    /// Sample the restricted eigenvalue gas.
    Sample(Common),
    /// Compare a recorded sample set against the predicted measure.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Path to samples.csv (the provenance sidecar is looked up next
        /// to it).
        #[arg(long)]
        samples: PathBuf,
    },
    /// solve-curve, energy-map, sample and analyze in sequence with a
    /// combined summary.
    Pipeline(Common),
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    init_threads(common.threads);
    RunConfig::load(&common.config)?.resolve(common.seed)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::SolveCurve(c) => {
            let cfg = load(&c)?;
            let (curve, report) = cmd_solve_curve(&cfg, &c.out)?;
            eprintln!(
                "solved: r = {}, degree {}, cusp margin {:.6}",
                curve.r(),
                curve.degree(),
                report.cusp_margin
            );
        }
        Command::EnergyMap(c) => {
            let cfg = load(&c)?;
            let report = cmd_energy_map(&cfg, &c.out)?;
            eprintln!(
                "energy map: pass = {}, interior max |E| = {:.3e}, exterior min E = {:.3e}",
                report.pass, report.interior_max_abs_e, report.exterior_min_e
            );
        }
        Command::Sample(c) => {
            let cfg = load(&c)?;
            let set = cmd_sample(&cfg, &c.out)?;
            let acc: Vec<String> = set.acceptance.iter().map(|a| format!("{a:.3}")).collect();
            eprintln!(
                "sampled {} configurations; acceptance per chain: [{}]",
                set.records.len(),
                acc.join(", ")
            );
        }
        Command::Analyze { common, samples } => {
            let cfg = load(&common)?;
            let outcome = cmd_analyze(&cfg, &samples, &common.out)?;
            eprintln!(
                "analyzed: support fraction {:.4}, max |z| = {:?}",
                outcome.support.fraction, outcome.weak_convergence.max_abs_z
            );
        }
        Command::Pipeline(c) => {
            let cfg = load(&c)?;
            let summary = cmd_pipeline(&cfg, &c.out)?;
            eprintln!("pipeline pass = {}", summary.pass);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
