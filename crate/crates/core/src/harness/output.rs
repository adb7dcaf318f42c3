//! CSV and JSON renderings of harness results.

use serde::Serialize;

use super::{AntennaProfile, ExperimentConfig, SweepResult, LOS_ANGLE_RANGE};
use crate::error::Result;
use crate::model::{evaluate_sinr, ChannelMatrix, PrecodingMatrix};
use crate::power::{PaModel, PowerReport, DEFAULT_ACTIVITY_THRESHOLD};

pub const SWEEP_HEADER: &str = "M,mean_pcg,stderr,trials,failures";
pub const PROFILE_HEADER: &str = "antenna,p_conventional,p_efficient";

/// Formats `x` with 12 significant digits, dropping trailing zeros
/// (`%.12g`-style, Rust exponent syntax).
pub fn fmt_sig(x: f64) -> String {
    const DIGITS: i32 = 12;
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if !(-5..DIGITS).contains(&exp) {
        format!("{}e{exp}", trim_zeros(mantissa))
    } else {
        trim_zeros(&format!("{:.*}", (DIGITS - 1 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in &result.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.antennas,
            fmt_sig(r.mean_pcg),
            fmt_sig(r.stderr),
            r.trials,
            r.failures
        ));
    }
    out
}

pub fn profile_csv(profile: &AntennaProfile) -> String {
    let mut out = String::from(PROFILE_HEADER);
    out.push('\n');
    for r in &profile.rows {
        out.push_str(&format!(
            "{},{},{}\n",
            r.antenna,
            fmt_sig(r.p_conventional),
            fmt_sig(r.p_efficient)
        ));
    }
    out
}

/// One precoder of a single-instance run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrecoderRecord {
    pub precoder: String,
    #[serde(rename = "W_real")]
    pub w_real: Vec<Vec<f64>>,
    #[serde(rename = "W_imag")]
    pub w_imag: Vec<Vec<f64>>,
    pub p_m: Vec<f64>,
    pub p_tx: f64,
    pub p_cons_normalized: f64,
    pub active_count: usize,
    pub sinr: Vec<f64>,
}

impl PrecoderRecord {
    pub fn new(
        name: &str,
        channel: &ChannelMatrix,
        precoder: &PrecodingMatrix,
        sigma_nu: f64,
        pa: &PaModel,
    ) -> Result<Self> {
        let report = PowerReport::new(precoder, pa, DEFAULT_ACTIVITY_THRESHOLD);
        let w = precoder.entries();
        let rows = |f: fn(&num_complex::Complex64) -> f64| {
            (0..w.nrows())
                .map(|k| w.row(k).iter().map(f).collect())
                .collect::<Vec<Vec<f64>>>()
        };
        Ok(Self {
            precoder: name.to_string(),
            w_real: rows(|c| c.re),
            w_imag: rows(|c| c.im),
            p_m: report.per_antenna,
            p_tx: report.p_tx,
            p_cons_normalized: report.p_cons_normalized,
            active_count: report.active_count,
            sinr: evaluate_sinr(channel, precoder, sigma_nu)?,
        })
    }
}

pub fn records_json(records: &[PrecoderRecord]) -> String {
    serde_json::to_string_pretty(records).expect("records serialize")
}

/// Run parameters not carried by the CSV itself.
pub fn metadata_json(cfg: &ExperimentConfig) -> String {
    let meta = serde_json::json!({
        "config": cfg,
        "solver": cfg.solver(),
        "los_angle_range": [LOS_ANGLE_RANGE.0, LOS_ANGLE_RANGE.1],
        "activity_threshold": DEFAULT_ACTIVITY_THRESHOLD,
        "version": env!("CARGO_PKG_VERSION"),
    });
    serde_json::to_string_pretty(&meta).expect("metadata serializes")
}
