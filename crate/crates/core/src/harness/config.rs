use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::convex::SolverConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    SingleUserPcg,
    MultiUserPcg,
    AntennaProfile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Los,
    Nlos,
}

/// Conventional precoder and its consumption-efficient counterpart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecoderPair {
    Mrt,
    Zf,
    Rzf,
}

impl PrecoderPair {
    pub fn names(&self) -> (&'static str, &'static str) {
        match self {
            PrecoderPair::Mrt => ("MRT", "MRT-eff"),
            PrecoderPair::Zf => ("ZF", "ZF-eff"),
            PrecoderPair::Rzf => ("RZF", "RZF-eff"),
        }
    }
}

/// One experiment, read from a flat `key = value` file (TOML syntax):
///
/// ```text
/// scenario  = "multi_user_pcg"   # single_user_pcg | multi_user_pcg | antenna_profile
/// channel   = "nlos"             # nlos | los
/// antennas  = [16, 32, 64]       # M values to sweep
/// users     = 2                  # K
/// gamma_db  = 10.0
/// sigma_nu  = 1.0
/// trials    = 1000
/// seed      = 1
/// precoders = "zf"               # mrt | zf | rzf
/// # p_max_cap = 1.0              # per-antenna cap; omit for none
/// # rho, eps_abs, eps_rel, max_iters, over_relaxation override the solver
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub channel: ChannelKind,
    pub antennas: Vec<usize>,
    pub users: usize,
    pub gamma_db: f64,
    pub sigma_nu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_max_cap: Option<f64>,
    pub trials: usize,
    pub seed: u64,
    pub precoders: PrecoderPair,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_abs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_rel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub over_relaxation: Option<f64>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn solver(&self) -> SolverConfig {
        let d = SolverConfig::default();
        SolverConfig {
            rho: self.rho.unwrap_or(d.rho),
            eps_abs: self.eps_abs.unwrap_or(d.eps_abs),
            eps_rel: self.eps_rel.unwrap_or(d.eps_rel),
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            over_relaxation: self.over_relaxation.unwrap_or(d.over_relaxation),
            ..d
        }
    }

    /// Checks field ranges, scenario/precoder compatibility and `M ≥ K`.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.trials == 0 {
            return fail("trials must be >= 1".into());
        }
        if self.antennas.is_empty() {
            return fail("antennas list is empty".into());
        }
        if self.users == 0 {
            return fail("users must be >= 1".into());
        }
        if let Some(&m) = self.antennas.iter().find(|&&m| m < self.users) {
            return Err(Error::Dimension(format!(
                "M = {m} antennas is fewer than K = {} users",
                self.users
            )));
        }
        if !(self.sigma_nu.is_finite() && self.sigma_nu > 0.0) {
            return fail(format!("sigma_nu must be > 0, got {}", self.sigma_nu));
        }
        if !self.gamma_db.is_finite() {
            return fail("gamma_db must be finite".into());
        }
        if let Some(cap) = self.p_max_cap {
            if !(cap.is_finite() && cap > 0.0) {
                return fail(format!("p_max_cap must be > 0, got {cap}"));
            }
        }
        match (self.precoders, self.users) {
            (PrecoderPair::Mrt, k) if k != 1 => {
                return fail(format!("MRT pair is single-user, got users = {k}"))
            }
            _ => {}
        }
        if self.scenario == Scenario::SingleUserPcg && self.precoders != PrecoderPair::Mrt {
            return fail("single_user_pcg uses precoders = \"mrt\"".into());
        }
        if self.scenario == Scenario::AntennaProfile && self.antennas.len() != 1 {
            return fail("antenna_profile takes exactly one M".into());
        }
        self.solver().validate().map_err(|e| Error::Config(e.to_string()))
    }
}
