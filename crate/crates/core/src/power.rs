//! PA consumption model and the power metrics derived from a precoder.
//!
//! With the square-root efficiency law `η_m = η_max √(p_m / p_max)` the power
//! drawn by PA `m` is `p_m / η_m = (√p_max / η_max) √p_m`, so total consumption
//! is a scaled L2,1 norm of `W` (L1 norm for a single user).

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CMatrix, PrecodingMatrix};

/// Default relative threshold for counting an antenna as active.
pub const DEFAULT_ACTIVITY_THRESHOLD: f64 = 1e-6;

/// Class-B PA parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PaModel {
    p_max: f64,
    eta_max: f64,
}

impl Default for PaModel {
    fn default() -> Self {
        Self {
            p_max: 1.0,
            eta_max: 0.785,
        }
    }
}

impl PaModel {
    pub fn new(p_max: f64, eta_max: f64) -> Result<Self> {
        if !(p_max.is_finite() && p_max > 0.0) {
            return Err(Error::InvalidParameter(format!("p_max must be > 0, got {p_max}")));
        }
        if !(eta_max > 0.0 && eta_max <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eta_max must lie in (0, 1], got {eta_max}"
            )));
        }
        Ok(Self { p_max, eta_max })
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn eta_max(&self) -> f64 {
        self.eta_max
    }

    /// `√p_max / η_max`, the factor between `‖W‖_{2,1}` and consumed power.
    pub fn consumption_prefactor(&self) -> f64 {
        self.p_max.sqrt() / self.eta_max
    }
}

/// Efficiency of a PA delivering `power`: `η_max √(power / p_max)`.
pub fn pa_efficiency(power: f64, pa: &PaModel) -> Result<f64> {
    if !(power >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "output power must be >= 0, got {power}"
        )));
    }
    if power > pa.p_max {
        return Err(Error::Overdrive {
            power,
            p_max: pa.p_max,
        });
    }
    Ok(pa.eta_max * (power / pa.p_max).sqrt())
}

/// Constant-efficiency model `p_cons = p_tx / η`, kept for side-by-side reporting.
pub fn consumed_power_constant_efficiency(precoder: &PrecodingMatrix, eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParameter(format!("eta must lie in (0, 1], got {eta}")));
    }
    Ok(frobenius_sq(precoder.entries()) / eta)
}

/// Transmit-side powers of a precoder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransmitPower {
    pub per_antenna: Vec<f64>,
    pub total: f64,
}

pub fn transmit_power(precoder: &PrecodingMatrix) -> TransmitPower {
    let per_antenna = precoder.antenna_powers();
    let total = per_antenna.iter().sum();
    TransmitPower { per_antenna, total }
}

/// `Σ_m ‖w_{·,m}‖₂`.
pub fn l21_norm(w: &CMatrix) -> f64 {
    w.column_iter().map(|col| col.norm()).sum()
}

pub fn frobenius_sq(w: &CMatrix) -> f64 {
    w.iter().map(|x| x.norm_sqr()).sum()
}

/// Consumed power `(√p_max/η_max) ‖W‖_{2,1}`.
pub fn consumed_power(precoder: &PrecodingMatrix, pa: &PaModel) -> f64 {
    pa.consumption_prefactor() * l21_norm(precoder.entries())
}

/// Single-user power consumption gain of the efficient MRT over conventional
/// MRT without a PA cap: `‖h‖_∞ ‖h‖₁ / ‖h‖₂²`.
pub fn pcg_single_user(channel_row: &[Complex64]) -> Result<f64> {
    let mut inf = 0.0f64;
    let mut l1 = 0.0;
    let mut l2_sq = 0.0;
    for h in channel_row {
        let a = h.norm();
        inf = inf.max(a);
        l1 += a;
        l2_sq += a * a;
    }
    if l2_sq == 0.0 {
        return Err(Error::ZeroChannel);
    }
    Ok(inf * l1 / l2_sq)
}

/// `‖W_conv‖_{2,1} / ‖W_eff‖_{2,1}`; the PA prefactor cancels.
pub fn pcg_ratio(conventional: &PrecodingMatrix, efficient: &PrecodingMatrix) -> Result<f64> {
    if conventional.users() != efficient.users() || conventional.antennas() != efficient.antennas()
    {
        return Err(Error::Dimension(format!(
            "conventional precoder is {}x{}, efficient is {}x{}",
            conventional.users(),
            conventional.antennas(),
            efficient.users(),
            efficient.antennas()
        )));
    }
    let denominator = l21_norm(efficient.entries());
    if denominator == 0.0 {
        return Err(Error::InvalidParameter(
            "efficient precoder is zero; PCG undefined".into(),
        ));
    }
    Ok(l21_norm(conventional.entries()) / denominator)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Activity {
    pub count: usize,
    pub mask: Vec<bool>,
}

/// Antenna `m` is active iff `p_m > rel_threshold · max p`.
pub fn active_antennas(precoder: &PrecodingMatrix, rel_threshold: f64) -> Activity {
    activity_from_powers(&precoder.antenna_powers(), rel_threshold)
}

pub fn activity_from_powers(powers: &[f64], rel_threshold: f64) -> Activity {
    let peak = powers.iter().copied().fold(0.0, f64::max);
    let mask: Vec<bool> = powers
        .iter()
        .map(|&p| peak > 0.0 && p > rel_threshold * peak)
        .collect();
    Activity {
        count: mask.iter().filter(|&&a| a).count(),
        mask,
    }
}

/// Every power figure for one precoder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerReport {
    pub per_antenna: Vec<f64>,
    pub p_tx: f64,
    /// With the `√p_max/η_max` prefactor.
    pub p_cons: f64,
    /// `‖W‖_{2,1}`.
    pub p_cons_normalized: f64,
    pub active_count: usize,
}

impl PowerReport {
    pub fn new(precoder: &PrecodingMatrix, pa: &PaModel, rel_threshold: f64) -> Self {
        let tx = transmit_power(precoder);
        let normalized: f64 = tx.per_antenna.iter().map(|p| p.sqrt()).sum();
        let activity = activity_from_powers(&tx.per_antenna, rel_threshold);
        Self {
            p_tx: tx.total,
            p_cons: pa.consumption_prefactor() * normalized,
            p_cons_normalized: normalized,
            active_count: activity.count,
            per_antenna: tx.per_antenna,
        }
    }
}
