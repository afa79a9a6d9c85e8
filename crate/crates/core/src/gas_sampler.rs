//! Metropolis Monte Carlo for the restricted eigenvalue gas: N points in
//! the compact domain D with density proportional to
//! exp(-N sum V(z_i)) prod |z_i - z_j|^2.
//!
//! Chains use ChaCha8 counter streams (stream id = chain index) so runs
//! are reproducible bit for bit at any parallelism level. The U(N)
//! angular factor of the matrix measure integrates out of every
//! eigenvalue observable and is not sampled.

use crate::curve::{Containment, CurveError, PolynomialCurve};
use crate::domain::DomainSpec;
use crate::energy::{discrete_energy, Potential};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("invalid sampler config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("could not place initial points inside the curve and domain")]
    InitPlacement,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed sample file: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    /// Number of eigenvalues N.
    pub n_particles: usize,
    pub sweeps: u64,
    pub burn_in: u64,
    /// Proposal step in units of length; `None` picks the inter-particle
    /// spacing scale sqrt(t0 / N), which keeps the measured acceptance
    /// rate near 0.5 across N.
    pub proposal_sigma: Option<f64>,
    pub seed: u64,
    pub thinning: u64,
    pub chains: u32,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            n_particles: 128,
            sweeps: 22_000,
            burn_in: 2_000,
            proposal_sigma: None,
            seed: 1,
            thinning: 40,
            chains: 8,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.n_particles < 1 {
            return Err(SamplerError::InvalidConfig("n_particles >= 1".into()));
        }
        if self.sweeps <= self.burn_in {
            return Err(SamplerError::InvalidConfig("sweeps > burn_in".into()));
        }
        if self.thinning < 1 {
            return Err(SamplerError::InvalidConfig("thinning >= 1".into()));
        }
        if self.chains < 1 {
            return Err(SamplerError::InvalidConfig("chains >= 1".into()));
        }
        if let Some(s) = self.proposal_sigma {
            if !(s > 0.0) {
                return Err(SamplerError::InvalidConfig("proposal_sigma > 0".into()));
            }
        }
        Ok(())
    }

    pub fn effective_sigma(&self, t0: f64) -> f64 {
        self.proposal_sigma
            .unwrap_or_else(|| (t0 / self.n_particles as f64).sqrt())
    }
}

/// N positions with the cached density exponent H.
#[derive(Debug, Clone)]
pub struct GasState {
    pub z: Vec<Complex64>,
    pub energy: f64,
    pub sweep_index: u64,
}

/// Per-chain RNG: one ChaCha8 stream per chain index over a common seed.
pub fn chain_rng(seed: u64, chain: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

/// Place N points uniformly at random in the interior domain of the curve
/// (intersected with D), by rejection from the bounding disk.
pub fn init_state(
    cfg: &SamplerConfig,
    p: &Potential,
    curve: &PolynomialCurve,
    domain: &DomainSpec,
    chain: u32,
) -> Result<GasState, SamplerError> {
    let mut rng = chain_rng(cfg.seed, chain);
    let center = curve.centroid();
    let radius = 0.5 * curve.diameter() * 1.01;
    let mut z = Vec::with_capacity(cfg.n_particles);
    let mut attempts = 0u64;
    while z.len() < cfg.n_particles {
        attempts += 1;
        if attempts > 200_000 * cfg.n_particles as u64 {
            return Err(SamplerError::InitPlacement);
        }
        let u: f64 = rng.random();
        let v: f64 = rng.random();
        let cand = center
            + Complex64::from_polar(radius * u.sqrt(), 2.0 * std::f64::consts::PI * v);
        if curve.contains(cand) == Containment::Inside && domain.contains(cand) {
            z.push(cand);
        }
    }
    let (energy, _) = discrete_energy(p, &z);
    Ok(GasState {
        z,
        energy,
        sweep_index: 0,
    })
}

/// Outcome counters for one sweep.
#[derive(Debug, Clone, Copy, Default)]
pub struct SweepStats {
    pub proposed: u64,
    pub accepted: u64,
}

/// One Metropolis sweep: N single-site proposals z' = z_i + sigma g with
/// immediate rejection outside D, and acceptance min(1, exp(-dH)) where
/// dH = N dV - 2 sum_j d log|z_i - z_j|, computed in O(N) and applied to
/// the energy cache.
pub fn sweep(
    state: &mut GasState,
    p: &Potential,
    domain: &DomainSpec,
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> SweepStats {
    let n = state.z.len();
    let nf = n as f64;
    let mut stats = SweepStats::default();
    for i in 0..n {
        stats.proposed += 1;
        let gx: f64 = rng.sample(StandardNormal);
        let gy: f64 = rng.sample(StandardNormal);
        let old = state.z[i];
        let cand = old + Complex64::new(sigma * gx, sigma * gy);
        if !domain.contains(cand) {
            continue; // hard wall
        }
        // Coincidence auto-reject: the log term would be -infinity.
        if state
            .z
            .iter()
            .enumerate()
            .any(|(j, zj)| j != i && (cand - zj).norm() < 1e-14)
        {
            continue;
        }
        let mut delta = nf * (p.value(cand) - p.value(old));
        for (j, zj) in state.z.iter().enumerate() {
            if j == i {
                continue;
            }
            // -2 [log|cand - zj| - log|old - zj|] via squared norms
            delta -= (cand - zj).norm_sqr().ln() - (old - zj).norm_sqr().ln();
        }
        let accept = delta <= 0.0 || rng.random::<f64>() < (-delta).exp();
        if accept {
            state.z[i] = cand;
            state.energy += delta;
            stats.accepted += 1;
        }
    }
    state.sweep_index += 1;
    stats
}

/// One recorded configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub chain: u32,
    pub sweep: u64,
    pub z: Vec<Complex64>,
}

/// Recorded configurations with full provenance.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub config: SamplerConfig,
    pub t0: f64,
    pub effective_sigma: f64,
    /// (seed, stream) actually used per chain.
    pub chain_streams: Vec<(u64, u64)>,
    pub acceptance: Vec<f64>,
    pub records: Vec<Record>,
}

impl SampleSet {
    pub fn n_particles(&self) -> usize {
        self.config.n_particles
    }

    pub fn chains(&self) -> u32 {
        self.config.chains
    }

    /// CSV with columns chain, sweep, particle, re, im.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "chain,sweep,particle,re,im")?;
        for rec in &self.records {
            for (k, z) in rec.z.iter().enumerate() {
                writeln!(w, "{},{},{},{},{}", rec.chain, rec.sweep, k, z.re, z.im)?;
            }
        }
        Ok(())
    }

    /// Provenance sidecar (config echo, streams, acceptance). Wall time is
    /// deliberately kept out so repeated runs are byte-identical.
    pub fn sidecar(&self) -> Sidecar {
        Sidecar {
            config: self.config.clone(),
            t0: self.t0,
            effective_sigma: self.effective_sigma,
            chain_streams: self.chain_streams.clone(),
            acceptance: self.acceptance.clone(),
        }
    }

    pub fn from_parts(sidecar: Sidecar, rows: &str) -> Result<Self, SamplerError> {
        let mut records: Vec<Record> = Vec::new();
        for (lineno, line) in rows.lines().enumerate() {
            if lineno == 0 {
                if line != "chain,sweep,particle,re,im" {
                    return Err(SamplerError::Malformed("unexpected CSV header".into()));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split(',');
            let mut field = || {
                it.next()
                    .ok_or_else(|| SamplerError::Malformed(format!("short row {lineno}")))
            };
            let chain: u32 = parse(field()?, lineno)?;
            let sweep: u64 = parse(field()?, lineno)?;
            let particle: usize = parse(field()?, lineno)?;
            let re: f64 = parse(field()?, lineno)?;
            let im: f64 = parse(field()?, lineno)?;
            let need_new = records
                .last()
                .map(|r| r.chain != chain || r.sweep != sweep)
                .unwrap_or(true);
            if need_new {
                records.push(Record {
                    chain,
                    sweep,
                    z: Vec::new(),
                });
            }
            let rec = records.last_mut().expect("just pushed");
            if rec.z.len() != particle {
                return Err(SamplerError::Malformed(format!(
                    "particle index out of order at row {lineno}"
                )));
            }
            rec.z.push(Complex64::new(re, im));
        }
        Ok(SampleSet {
            config: sidecar.config,
            t0: sidecar.t0,
            effective_sigma: sidecar.effective_sigma,
            chain_streams: sidecar.chain_streams,
            acceptance: sidecar.acceptance,
            records,
        })
    }

    pub fn read_files(csv_path: &std::path::Path, sidecar_path: &std::path::Path) -> Result<Self, SamplerError> {
        let sidecar: Sidecar = serde_json::from_reader(std::io::BufReader::new(
            std::fs::File::open(sidecar_path)?,
        ))
        .map_err(|e| SamplerError::Malformed(e.to_string()))?;
        let mut rows = String::new();
        std::io::BufReader::new(std::fs::File::open(csv_path)?).read_to_string(&mut rows)?;
        Self::from_parts(sidecar, &rows)
    }
}

fn parse<T: std::str::FromStr>(s: &str, lineno: usize) -> Result<T, SamplerError> {
    s.parse()
        .map_err(|_| SamplerError::Malformed(format!("bad field {s:?} at row {lineno}")))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub config: SamplerConfig,
    pub t0: f64,
    pub effective_sigma: f64,
    pub chain_streams: Vec<(u64, u64)>,
    pub acceptance: Vec<f64>,
}

/// Run `chains` independent chains, discard burn-in, record every
/// thinning-th configuration. Chains run in parallel and merge by chain
/// index, so the output does not depend on the thread count.
pub fn run(
    cfg: &SamplerConfig,
    p: &Potential,
    curve: &PolynomialCurve,
    domain: &DomainSpec,
) -> Result<SampleSet, SamplerError> {
    cfg.validate()?;
    let sigma = cfg.effective_sigma(p.t0());
    let chains: Result<Vec<(Vec<Record>, f64)>, SamplerError> = (0..cfg.chains)
        .into_par_iter()
        .map(|chain| {
            let mut rng = chain_rng(cfg.seed, chain);
            let mut state = init_state(cfg, p, curve, domain, chain)?;
            let mut records = Vec::new();
            let mut proposed = 0u64;
            let mut accepted = 0u64;
            for s in 1..=cfg.sweeps {
                let st = sweep(&mut state, p, domain, sigma, &mut rng);
                proposed += st.proposed;
                accepted += st.accepted;
                if s % 64 == 0 {
                    assert_energy_cache(&mut state, p);
                }
                if s > cfg.burn_in && (s - cfg.burn_in) % cfg.thinning == 0 {
                    records.push(Record {
                        chain,
                        sweep: s,
                        z: state.z.clone(),
                    });
                }
            }
            Ok((records, accepted as f64 / proposed.max(1) as f64))
        })
        .collect();
    let chains = chains?;
    let mut records = Vec::new();
    let mut acceptance = Vec::new();
    for (recs, acc) in chains {
        records.extend(recs);
        acceptance.push(acc);
    }
    Ok(SampleSet {
        config: cfg.clone(),
        t0: p.t0(),
        effective_sigma: sigma,
        chain_streams: (0..cfg.chains).map(|c| (cfg.seed, c as u64)).collect(),
        acceptance,
        records,
    })
}

/// The incremental energy cache must match a recomputation from scratch.
fn assert_energy_cache(state: &mut GasState, p: &Potential) {
    let (h, _) = discrete_energy(p, &state.z);
    let drift = (state.energy - h).abs();
    assert!(
        drift <= 1e-8 * h.abs().max(1.0),
        "energy cache drift {drift} exceeds tolerance (cached {}, recomputed {h})",
        state.energy
    );
    state.energy = h;
}
