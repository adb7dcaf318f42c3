//! Builders for the consumption-efficient precoder programs (and the
//! conventional SINR program used as a cross-check).

use num_complex::Complex64;

use crate::closed_form::rzf_slack;
use crate::convex::{Constraint, ConvexProblem, Objective};
use crate::error::{Error, Result};
use crate::model::{ChannelMatrix, TargetSpec};

fn cap_constraint(cap: Option<f64>) -> Option<Constraint> {
    cap.map(|cap| Constraint::PerAntennaBall { cap })
}

/// Efficient single-user MRT: minimize `‖w‖₁` subject to
/// `Re(h·wᵀ) ≥ √γ σ_ν` and, when given, `|w_m|² ≤ p_max`.
pub fn build_mrt_eff(
    h: &[Complex64],
    gamma: f64,
    sigma_nu: f64,
    p_max: Option<f64>,
) -> Result<ConvexProblem> {
    if !(gamma.is_finite() && gamma >= 0.0 && sigma_nu.is_finite() && sigma_nu > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma = {gamma}, sigma_nu = {sigma_nu}"
        )));
    }
    let mut constraints = vec![Constraint::HalfSpace {
        c: h.to_vec(),
        t: gamma.sqrt() * sigma_nu,
    }];
    constraints.extend(cap_constraint(p_max));
    ConvexProblem::new(1, h.len(), Objective::L1, constraints)
}

fn sinr_constraints(channel: &ChannelMatrix, targets: &TargetSpec) -> Vec<Constraint> {
    (0..channel.users())
        .map(|k| Constraint::SocSinr {
            user: k,
            channel: channel.row(k),
            gamma: targets.gammas()[k],
            sigma_nu: targets.sigma_nu(),
        })
        .collect()
}

/// Efficient multi-user precoder under per-user SINR constraints.
pub fn build_sinr_eff(channel: &ChannelMatrix, targets: &TargetSpec) -> Result<ConvexProblem> {
    targets.check_users(channel)?;
    let mut constraints = sinr_constraints(channel, targets);
    constraints.extend(cap_constraint(targets.p_max_cap()));
    ConvexProblem::new(channel.users(), channel.antennas(), Objective::GroupL21, constraints)
}

/// Conventional transmit-power minimization under the same SINR constraints.
pub fn build_sinr_conventional(
    channel: &ChannelMatrix,
    targets: &TargetSpec,
) -> Result<ConvexProblem> {
    targets.check_users(channel)?;
    let mut constraints = sinr_constraints(channel, targets);
    constraints.extend(cap_constraint(targets.p_max_cap()));
    ConvexProblem::new(
        channel.users(),
        channel.antennas(),
        Objective::SquaredFrobenius,
        constraints,
    )
}

fn check_k_le_m(channel: &ChannelMatrix) -> Result<()> {
    if channel.users() > channel.antennas() {
        return Err(Error::Dimension(format!(
            "K = {} users exceeds M = {} antennas",
            channel.users(),
            channel.antennas()
        )));
    }
    Ok(())
}

/// Efficient ZF: minimize `‖W‖_{2,1}` subject to `HWᵀ = D_γ^{1/2} σ_ν`.
pub fn build_zf_eff(channel: &ChannelMatrix, targets: &TargetSpec) -> Result<ConvexProblem> {
    check_k_le_m(channel)?;
    targets.check_users(channel)?;
    let mut constraints = vec![Constraint::AffineEquality {
        a: channel.entries().clone(),
        b: targets.useful_amplitude_matrix(),
    }];
    constraints.extend(cap_constraint(targets.p_max_cap()));
    ConvexProblem::new(channel.users(), channel.antennas(), Objective::GroupL21, constraints)
}

/// Efficient RZF with the slack `ξ` attained by the RZF closed form.
pub fn build_rzf_eff(channel: &ChannelMatrix, targets: &TargetSpec) -> Result<ConvexProblem> {
    let xi = rzf_slack(channel, targets)?.xi;
    build_rzf_eff_with_slack(channel, targets, xi)
}

/// Efficient RZF with an explicit residual budget `‖HWᵀ − D_γ^{1/2}σ_ν‖_F² ≤ xi`.
pub fn build_rzf_eff_with_slack(
    channel: &ChannelMatrix,
    targets: &TargetSpec,
    xi: f64,
) -> Result<ConvexProblem> {
    check_k_le_m(channel)?;
    targets.check_users(channel)?;
    if !(xi.is_finite() && xi >= 0.0) {
        return Err(Error::InvalidParameter(format!("slack must be >= 0, got {xi}")));
    }
    let mut constraints = vec![Constraint::FrobeniusBall {
        a: channel.entries().clone(),
        b: targets.useful_amplitude_matrix(),
        radius: xi.sqrt(),
    }];
    constraints.extend(cap_constraint(targets.p_max_cap()));
    ConvexProblem::new(channel.users(), channel.antennas(), Objective::GroupL21, constraints)
}
