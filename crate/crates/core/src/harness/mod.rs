//! Seeded Monte Carlo experiments: single-user PCG sweeps, multi-user PCG
//! sweeps with solved efficient precoders, and per-antenna power profiles.
//!
//! Trial `t` of a run seeded with `s` draws its channel from stream `t` of
//! [`Rng::for_trial`]`(s, t)`, independently of scheduling. Trials run on a
//! rayon pool (size from `PACONS_THREADS` when set) and are reduced in trial
//! order, so results are byte-identical for any thread count.

mod config;
pub mod output;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

pub use config::{ChannelKind, ExperimentConfig, PrecoderPair, Scenario};

use crate::closed_form::{mrt, mrt_efficient, rzf, zf};
use crate::convex::{solve, SolveReport, SolverConfig};
use crate::error::{Error, Result};
use crate::model::{gen_los, gen_nlos, ChannelMatrix, PrecodingMatrix, Rng, TargetSpec};
use crate::power::{active_antennas, pcg_ratio, pcg_single_user, DEFAULT_ACTIVITY_THRESHOLD};
use crate::problems::{build_rzf_eff, build_zf_eff};

/// Environment variable overriding the worker thread count.
pub const THREADS_ENV: &str = "PACONS_THREADS";

/// LOS user angles are drawn uniformly from this interval (radians).
pub const LOS_ANGLE_RANGE: (f64, f64) = (PI / 36.0, 35.0 * PI / 36.0);

/// Largest tolerated share of failed trials per antenna count.
pub const MAX_FAILURE_FRACTION: f64 = 0.01;

/// Runs `f` on a pool sized by `PACONS_THREADS`, or on rayon's global pool.
pub fn with_thread_pool<R: Send>(f: impl FnOnce() -> R + Send) -> Result<R> {
    match std::env::var(THREADS_ENV) {
        Ok(value) => {
            let threads: usize = value
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{THREADS_ENV}={value} is not a count")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
        Err(_) => Ok(f()),
    }
}

/// Channel realization for trial `trial` at `antennas` antennas.
pub fn draw_channel(cfg: &ExperimentConfig, antennas: usize, trial: u64) -> Result<ChannelMatrix> {
    let mut rng = Rng::for_trial(cfg.seed, trial);
    match cfg.channel {
        ChannelKind::Nlos => gen_nlos(antennas, cfg.users, &mut rng),
        ChannelKind::Los => {
            let (lo, hi) = LOS_ANGLE_RANGE;
            let angles: Vec<f64> = (0..cfg.users).map(|_| rng.uniform(lo, hi)).collect();
            gen_los(antennas, &angles)
        }
    }
}

pub fn targets(cfg: &ExperimentConfig) -> Result<TargetSpec> {
    TargetSpec::uniform_db(cfg.users, cfg.gamma_db, cfg.sigma_nu, cfg.p_max_cap)
}

/// Conventional and efficient precoders designed for one channel.
#[derive(Debug, Clone)]
pub struct PrecoderPairOutcome {
    pub conventional: PrecodingMatrix,
    pub efficient: PrecodingMatrix,
    /// Present when the efficient precoder came from the solver.
    pub report: Option<SolveReport>,
}

/// Designs both precoders of `pair`. Solver runs that do not reach
/// `Optimal` are returned as errors.
pub fn design_pair(
    channel: &ChannelMatrix,
    targets: &TargetSpec,
    pair: PrecoderPair,
    solver: &SolverConfig,
) -> Result<PrecoderPairOutcome> {
    match pair {
        PrecoderPair::Mrt => {
            if channel.users() != 1 {
                return Err(Error::Dimension(format!(
                    "MRT is single-user, channel has K = {}",
                    channel.users()
                )));
            }
            let h = channel.row(0);
            let gamma = targets.gammas()[0];
            let conventional = mrt(&h, gamma, targets.sigma_nu())?;
            let (efficient, _) = mrt_efficient(&h, gamma, targets.sigma_nu(), targets.p_max_cap())?;
            Ok(PrecoderPairOutcome {
                conventional,
                efficient,
                report: None,
            })
        }
        PrecoderPair::Zf | PrecoderPair::Rzf => {
            let (conventional, problem) = if pair == PrecoderPair::Zf {
                (zf(channel, targets)?, build_zf_eff(channel, targets)?)
            } else {
                (rzf(channel, targets)?, build_rzf_eff(channel, targets)?)
            };
            let report = solve(&problem, solver)?.into_result()?;
            Ok(PrecoderPairOutcome {
                conventional,
                efficient: report.solution.clone(),
                report: Some(report),
            })
        }
    }
}

/// Result of one Monte Carlo trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub trial: u64,
    pub pcg: f64,
    pub conventional_l21: f64,
    pub efficient_l21: f64,
    pub conventional_active: usize,
    pub efficient_active: usize,
    pub iterations: usize,
}

fn pair_trial(cfg: &ExperimentConfig, antennas: usize, trial: u64) -> Result<TrialOutcome> {
    let channel = draw_channel(cfg, antennas, trial)?;
    let targets = targets(cfg)?;
    let outcome = design_pair(&channel, &targets, cfg.precoders, &cfg.solver())?;
    let conventional_l21 = crate::power::l21_norm(outcome.conventional.entries());
    let efficient_l21 = crate::power::l21_norm(outcome.efficient.entries());
    Ok(TrialOutcome {
        trial,
        pcg: pcg_ratio(&outcome.conventional, &outcome.efficient)?,
        conventional_l21,
        efficient_l21,
        conventional_active: active_antennas(&outcome.conventional, DEFAULT_ACTIVITY_THRESHOLD).count,
        efficient_active: active_antennas(&outcome.efficient, DEFAULT_ACTIVITY_THRESHOLD).count,
        iterations: outcome.report.map_or(0, |r| r.iterations),
    })
}

fn single_user_trial(cfg: &ExperimentConfig, antennas: usize, trial: u64) -> Result<TrialOutcome> {
    if cfg.p_max_cap.is_some() {
        // with a cap the gain no longer has the ‖h‖_∞‖h‖₁/‖h‖₂² form
        return pair_trial(cfg, antennas, trial);
    }
    let channel = draw_channel(cfg, antennas, trial)?;
    let h = channel.row(0);
    let target = targets(cfg)?.useful_amplitudes()[0];
    let l1: f64 = h.iter().map(|x| x.norm()).sum();
    let l2_sq: f64 = h.iter().map(|x| x.norm_sqr()).sum();
    let peak = h.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let active = h.iter().filter(|x| x.norm_sqr() > 0.0).count();
    Ok(TrialOutcome {
        trial,
        pcg: pcg_single_user(&h)?,
        conventional_l21: target * l1 / l2_sq,
        efficient_l21: target / peak,
        conventional_active: active,
        efficient_active: 1,
        iterations: 0,
    })
}

/// Runs every trial at one antenna count. Entries are in trial order; failed
/// trials carry their error.
pub fn run_trials(cfg: &ExperimentConfig, antennas: usize) -> Result<Vec<Result<TrialOutcome>>> {
    cfg.validate()?;
    let trial_fn = match cfg.scenario {
        Scenario::SingleUserPcg => single_user_trial,
        _ => pair_trial,
    };
    with_thread_pool(|| {
        (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| trial_fn(cfg, antennas, t))
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub antennas: usize,
    pub mean_pcg: f64,
    /// Sample standard deviation over √(successful trials).
    pub stderr: f64,
    /// Successful trials.
    pub trials: usize,
    pub failures: usize,
    pub mean_efficient_active: f64,
    pub min_pcg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

/// Aggregates ordered trial outcomes into one sweep row.
pub fn summarize(antennas: usize, outcomes: &[Result<TrialOutcome>]) -> Result<SweepRow> {
    let ok: Vec<&TrialOutcome> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    let failures = outcomes.len() - ok.len();
    if failures as f64 > MAX_FAILURE_FRACTION * outcomes.len() as f64 || ok.is_empty() {
        return Err(Error::TooManyFailures {
            antennas,
            failures,
            trials: outcomes.len(),
        });
    }
    let n = ok.len() as f64;
    let mean = ok.iter().map(|o| o.pcg).sum::<f64>() / n;
    let var = if ok.len() > 1 {
        ok.iter().map(|o| (o.pcg - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(SweepRow {
        antennas,
        mean_pcg: mean,
        stderr: (var / n).sqrt(),
        trials: ok.len(),
        failures,
        mean_efficient_active: ok.iter().map(|o| o.efficient_active as f64).sum::<f64>() / n,
        min_pcg: ok.iter().map(|o| o.pcg).fold(f64::INFINITY, f64::min),
    })
}

fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let rows = cfg
        .antennas
        .iter()
        .map(|&m| summarize(m, &run_trials(cfg, m)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { rows })
}

/// Single-user PCG of efficient MRT over MRT, per antenna count.
pub fn run_single_user_pcg(cfg: &ExperimentConfig) -> Result<SweepResult> {
    if cfg.scenario != Scenario::SingleUserPcg {
        return Err(Error::Config("expected scenario = \"single_user_pcg\"".into()));
    }
    run_sweep(cfg)
}

/// Multi-user PCG of the efficient ZF/RZF over the closed form, per antenna count.
pub fn run_multi_user_pcg(cfg: &ExperimentConfig) -> Result<SweepResult> {
    if cfg.scenario != Scenario::MultiUserPcg {
        return Err(Error::Config("expected scenario = \"multi_user_pcg\"".into()));
    }
    if cfg.precoders == PrecoderPair::Mrt {
        return Err(Error::Config("multi_user_pcg needs precoders = \"zf\" or \"rzf\"".into()));
    }
    run_sweep(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileRow {
    pub antenna: usize,
    pub p_conventional: f64,
    pub p_efficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AntennaProfile {
    pub antennas: usize,
    pub rows: Vec<ProfileRow>,
    pub conventional_active: usize,
    pub efficient_active: usize,
    pub pcg: f64,
}

/// Per-antenna transmit power of both precoders for trial 0 of the seed.
pub fn run_antenna_profile(cfg: &ExperimentConfig) -> Result<AntennaProfile> {
    cfg.validate()?;
    let antennas = cfg.antennas[0];
    let channel = draw_channel(cfg, antennas, 0)?;
    let outcome = design_pair(&channel, &targets(cfg)?, cfg.precoders, &cfg.solver())?;
    let conv = outcome.conventional.antenna_powers();
    let eff = outcome.efficient.antenna_powers();
    Ok(AntennaProfile {
        antennas,
        rows: (0..antennas)
            .map(|m| ProfileRow {
                antenna: m,
                p_conventional: conv[m],
                p_efficient: eff[m],
            })
            .collect(),
        conventional_active: active_antennas(&outcome.conventional, DEFAULT_ACTIVITY_THRESHOLD).count,
        efficient_active: active_antennas(&outcome.efficient, DEFAULT_ACTIVITY_THRESHOLD).count,
        pcg: pcg_ratio(&outcome.conventional, &outcome.efficient)?,
    })
}

/// Both precoders for trial 0 at the first antenna count, as output records.
pub fn precode_instance(cfg: &ExperimentConfig) -> Result<Vec<output::PrecoderRecord>> {
    cfg.validate()?;
    let channel = draw_channel(cfg, cfg.antennas[0], 0)?;
    let targets = targets(cfg)?;
    let outcome = design_pair(&channel, &targets, cfg.precoders, &cfg.solver())?;
    let (conv_name, eff_name) = cfg.precoders.names();
    let pa = crate::power::PaModel::default();
    Ok(vec![
        output::PrecoderRecord::new(conv_name, &channel, &outcome.conventional, cfg.sigma_nu, &pa)?,
        output::PrecoderRecord::new(eff_name, &channel, &outcome.efficient, cfg.sigma_nu, &pa)?,
    ])
}
