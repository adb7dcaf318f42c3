//! Closed-form precoders: conventional MRT, consumption-efficient MRT (greedy
//! saturation), ZF, and RZF together with its residual slack.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ChannelMatrix, CMatrix, PrecodingMatrix, TargetSpec};

/// Relative slack on the saturation feasibility boundary.
const FEASIBILITY_RTOL: f64 = 1e-12;

/// Eigenvalue ratio of `HH†` below which `H` is treated as rank deficient.
const RANK_RTOL: f64 = 1e-12;

/// Structure of the efficient single-user allocation: which antennas run at
/// saturation, which one carries the remainder and which stay off.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreedyAllocation {
    pub saturated_set: Vec<usize>,
    pub marginal_index: usize,
    pub marginal_amplitude: f64,
    /// `√p_max Σ_{saturated} |h_m|`; zero without a cap.
    pub zeta: f64,
    pub inactive_set: Vec<usize>,
}

impl GreedyAllocation {
    /// Number of active antennas `L`.
    pub fn active_count(&self) -> usize {
        self.saturated_set.len() + 1
    }
}

/// Eigenvalues of `HH†` and the RZF residual slack `ξ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RzfSlack {
    pub xi: f64,
    pub eigenvalues: Vec<f64>,
}

fn row_norm_sq(h: &[Complex64]) -> f64 {
    h.iter().map(|x| x.norm_sqr()).sum()
}

fn check_target(gamma: f64, sigma_nu: f64) -> Result<()> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be >= 0, got {gamma}")));
    }
    if !(sigma_nu.is_finite() && sigma_nu > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma_nu must be > 0, got {sigma_nu}"
        )));
    }
    Ok(())
}

/// Conventional MRT meeting the SNR target with equality:
/// `w = √γ σ_ν h* / ‖h‖₂²`.
pub fn mrt(h: &[Complex64], gamma: f64, sigma_nu: f64) -> Result<PrecodingMatrix> {
    check_target(gamma, sigma_nu)?;
    let norm_sq = row_norm_sq(h);
    if norm_sq == 0.0 {
        return Err(Error::ZeroChannel);
    }
    let scale = gamma.sqrt() * sigma_nu / norm_sq;
    let w: Vec<Complex64> = h.iter().map(|x| x.conj() * scale).collect();
    Ok(PrecodingMatrix::from_row(&w))
}

/// Antenna indices by decreasing `|h_m|`, ties broken by lower index.
///
/// Gains are quantized to 2⁻⁴⁰ of the peak before sorting so that equal-gain
/// channels (LOS) tie exactly despite rounding in `|e^{jφ}|`.
fn gain_order(h: &[Complex64]) -> Vec<usize> {
    let peak = h.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let key = |m: usize| (h[m].norm() / peak * (1u64 << 40) as f64).round() as u64;
    let mut order: Vec<usize> = (0..h.len()).collect();
    order.sort_by_key(|&m| (std::cmp::Reverse(key(m)), m));
    order
}

/// Consumption-efficient MRT.
///
/// Antennas are filled to saturation in order of decreasing gain until the
/// received amplitude `√γ σ_ν` is reached; the last antenna gets the
/// remainder. Without a cap (`p_max = None`) all power goes to the strongest
/// antenna.
pub fn mrt_efficient(
    h: &[Complex64],
    gamma: f64,
    sigma_nu: f64,
    p_max: Option<f64>,
) -> Result<(PrecodingMatrix, GreedyAllocation)> {
    check_target(gamma, sigma_nu)?;
    if let Some(cap) = p_max {
        if !(cap.is_finite() && cap > 0.0) {
            return Err(Error::InvalidParameter(format!("p_max must be > 0, got {cap}")));
        }
    }
    if row_norm_sq(h) == 0.0 {
        return Err(Error::ZeroChannel);
    }
    let target = gamma.sqrt() * sigma_nu;
    let order = gain_order(h);

    let (saturated, marginal, amplitude, zeta) = match p_max {
        None => (Vec::new(), order[0], target / h[order[0]].norm(), 0.0),
        Some(cap) => {
            let amp_max = cap.sqrt();
            let reachable: f64 = amp_max * h.iter().map(|x| x.norm()).sum::<f64>();
            if reachable < target * (1.0 - FEASIBILITY_RTOL) {
                return Err(Error::Infeasible(format!(
                    "target amplitude {target} exceeds {reachable} reachable with every antenna saturated"
                )));
            }
            let mut zeta = 0.0;
            let mut saturated = Vec::new();
            let mut found = None;
            for (pos, &m) in order.iter().enumerate() {
                let gain = h[m].norm();
                let is_last = pos + 1 == order.len();
                if zeta + amp_max * gain >= target || is_last {
                    let amp = ((target - zeta) / gain).clamp(0.0, amp_max);
                    found = Some((m, amp));
                    break;
                }
                zeta += amp_max * gain;
                saturated.push(m);
            }
            let (m, amp) = found.expect("order is non-empty");
            (saturated, m, amp, zeta)
        }
    };

    let amp_max = p_max.map(f64::sqrt).unwrap_or(0.0);
    let mut w = vec![Complex64::new(0.0, 0.0); h.len()];
    for &m in &saturated {
        w[m] = Complex64::from_polar(amp_max, -h[m].arg());
    }
    w[marginal] = Complex64::from_polar(amplitude, -h[marginal].arg());

    let active = saturated.len() + 1;
    let inactive_set = order[active..].to_vec();
    Ok((
        PrecodingMatrix::from_row(&w),
        GreedyAllocation {
            saturated_set: saturated,
            marginal_index: marginal,
            marginal_amplitude: amplitude,
            zeta,
            inactive_set,
        },
    ))
}

/// `HH†` together with its eigenvalues (ascending) and eigenvectors.
fn gram_eigen(channel: &ChannelMatrix) -> (CMatrix, SymmetricEigen<Complex64, nalgebra::Dyn>) {
    let h = channel.entries();
    let gram = h * h.adjoint();
    let eig = SymmetricEigen::new(gram.clone());
    (gram, eig)
}

fn require_users_le_antennas(channel: &ChannelMatrix) -> Result<()> {
    if channel.users() > channel.antennas() {
        return Err(Error::Dimension(format!(
            "K = {} users exceeds M = {} antennas",
            channel.users(),
            channel.antennas()
        )));
    }
    Ok(())
}

/// `Wᵀ = H† X` where `X` solves `(HH† + δ I) X = D_γ^{1/2} σ_ν`.
fn regularized_inverse_precoder(
    channel: &ChannelMatrix,
    targets: &TargetSpec,
    gram: CMatrix,
    delta: f64,
) -> Result<PrecodingMatrix> {
    let k = channel.users();
    let system = gram + CMatrix::identity(k, k) * Complex64::new(delta, 0.0);
    let chol = system
        .cholesky()
        .ok_or_else(|| Error::RankDeficient("HH† is not positive definite".into()))?;
    let x = chol.solve(&targets.useful_amplitude_matrix());
    let w_t = channel.entries().adjoint() * x;
    PrecodingMatrix::new(w_t.transpose())
}

/// Zero-forcing precoder `Wᵀ = H†(HH†)⁻¹ D_γ^{1/2} σ_ν`.
pub fn zf(channel: &ChannelMatrix, targets: &TargetSpec) -> Result<PrecodingMatrix> {
    require_users_le_antennas(channel)?;
    targets.check_users(channel)?;
    let (gram, eig) = gram_eigen(channel);
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(max > 0.0) || min <= RANK_RTOL * max {
        return Err(Error::RankDeficient(format!(
            "HH† eigenvalue ratio {:.3e} below {RANK_RTOL:e}",
            if max > 0.0 { min / max } else { 0.0 }
        )));
    }
    regularized_inverse_precoder(channel, targets, gram, 0.0)
}

/// Squared residual `ξ = σ_ν² tr[D_γ U((1/σ_ν²)Λ + I)⁻² U†]` that the RZF
/// closed form attains on `‖HWᵀ − D_γ^{1/2}σ_ν‖_F² ≤ ξ`. With equal targets
/// the eigenvector basis `U` drops out and this is `σ_ν² tr[D_γ((1/σ_ν²)Λ + I)⁻²]`.
pub fn rzf_slack(channel: &ChannelMatrix, targets: &TargetSpec) -> Result<RzfSlack> {
    require_users_le_antennas(channel)?;
    targets.check_users(channel)?;
    let (_, eig) = gram_eigen(channel);
    let noise = targets.sigma_nu().powi(2);
    let eigenvalues: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0)).collect();
    let gammas = targets.gammas();
    let mut xi = 0.0;
    for (i, lambda) in eigenvalues.iter().enumerate() {
        let factor = (lambda / noise + 1.0).powi(-2);
        // weight of eigen-direction i under D_γ: Σ_k γ_k |U_{k,i}|²
        let weight: f64 = (0..gammas.len())
            .map(|k| gammas[k] * eig.eigenvectors[(k, i)].norm_sqr())
            .sum();
        xi += weight * factor;
    }
    Ok(RzfSlack {
        xi: noise * xi,
        eigenvalues,
    })
}

/// Regularized zero-forcing `Wᵀ = H†(HH† + σ_ν² I)⁻¹ D_γ^{1/2} σ_ν`.
pub fn rzf(channel: &ChannelMatrix, targets: &TargetSpec) -> Result<PrecodingMatrix> {
    require_users_le_antennas(channel)?;
    targets.check_users(channel)?;
    let (gram, _) = gram_eigen(channel);
    regularized_inverse_precoder(channel, targets, gram, targets.sigma_nu().powi(2))
}

/// `‖HWᵀ − D_γ^{1/2} σ_ν‖_F²`.
pub fn target_residual_sq(channel: &ChannelMatrix, precoder: &PrecodingMatrix, targets: &TargetSpec) -> f64 {
    let diff = channel.entries() * precoder.entries().transpose() - targets.useful_amplitude_matrix();
    diff.iter().map(|x| x.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{evaluate_sinr, gen_nlos, Rng};
    use crate::power::l21_norm;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn mrt_real_channel() {
        let h = [c(2.0), c(1.0)];
        let w = mrt(&h, 25.0, 1.0).unwrap();
        assert!(close(w.entries()[(0, 0)], c(2.0), 1e-15));
        assert!(close(w.entries()[(0, 1)], c(1.0), 1e-15));
        let ch = ChannelMatrix::from_row(&h).unwrap();
        assert!((evaluate_sinr(&ch, &w, 1.0).unwrap()[0] - 25.0).abs() < 1e-12);
    }

    #[test]
    fn mrt_unit_channel_unit_power() {
        let h = [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)];
        let w = mrt(&h, 1.0, 1.0).unwrap();
        let p: f64 = w.antenna_powers().iter().sum();
        assert!((p - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mrt_aligns_phase() {
        let mut rng = Rng::new(5);
        let h = gen_nlos(7, 1, &mut rng).unwrap().row(0);
        let w = mrt(&h, 3.0, 0.7).unwrap();
        let s: Complex64 = h.iter().zip(w.entries().iter()).map(|(a, b)| a * b).sum();
        assert!(s.re > 0.0 && s.im.abs() < 1e-14);
        assert_eq!(mrt(&[c(0.0)], 1.0, 1.0), Err(Error::ZeroChannel));
    }

    #[test]
    fn mrt_efficient_uncapped() {
        let h = [c(2.0), c(1.0)];
        let (w, alloc) = mrt_efficient(&h, 1.0, 1.0, Some(1.0)).unwrap();
        assert!(close(w.entries()[(0, 0)], c(0.5), 1e-15));
        assert_eq!(w.entries()[(0, 1)], c(0.0));
        assert_eq!(alloc.marginal_index, 0);
        assert!(alloc.saturated_set.is_empty());
        assert_eq!(alloc.inactive_set, vec![1]);
        assert_eq!(l21_norm(w.entries()), 0.5);

        let conv = mrt(&h, 1.0, 1.0).unwrap();
        assert!((l21_norm(conv.entries()) - 0.6).abs() < 1e-15);
        let pcg = l21_norm(conv.entries()) / l21_norm(w.entries());
        assert!((pcg - 1.2).abs() < 1e-14);

        let (w_none, _) = mrt_efficient(&h, 1.0, 1.0, None).unwrap();
        assert_eq!(w_none, w);
    }

    #[test]
    fn mrt_efficient_fills_to_cap() {
        let h = [c(2.0), c(1.0)];
        let (w, alloc) = mrt_efficient(&h, 9.0, 1.0, Some(1.0)).unwrap();
        assert!(close(w.entries()[(0, 0)], c(1.0), 1e-15));
        assert!(close(w.entries()[(0, 1)], c(1.0), 1e-15));
        assert_eq!(alloc.saturated_set, vec![0]);
        assert_eq!(alloc.marginal_index, 1);
        assert_eq!(alloc.zeta, 2.0);
        assert!(alloc.inactive_set.is_empty());
    }

    #[test]
    fn mrt_efficient_infeasible() {
        let h = [c(2.0), c(1.0)];
        let r = mrt_efficient(&h, 3.01f64.powi(2), 1.0, Some(1.0));
        assert!(matches!(r, Err(Error::Infeasible(_))));
    }

    #[test]
    fn mrt_efficient_ties_prefer_low_index() {
        let h: Vec<Complex64> = (0..4).map(|m| Complex64::from_polar(1.0, m as f64)).collect();
        let (_, alloc) = mrt_efficient(&h, 2.25, 1.0, Some(1.0)).unwrap();
        assert_eq!(alloc.saturated_set, vec![0]);
        assert_eq!(alloc.marginal_index, 1);
        assert!((alloc.marginal_amplitude - 0.5).abs() < 1e-15);
        assert_eq!(alloc.inactive_set, vec![2, 3]);
    }

    #[test]
    fn mrt_efficient_meets_target_with_equality() {
        let mut rng = Rng::new(11);
        for trial in 0..200 {
            let m = 1 + trial % 8;
            let h = gen_nlos(m, 1, &mut rng).unwrap().row(0);
            let cap = 0.05 + rng.uniform(0.0, 1.0);
            let gamma = rng.uniform(0.1, 4.0);
            let w_conv = mrt(&h, gamma, 1.0).unwrap();
            match mrt_efficient(&h, gamma, 1.0, Some(cap)) {
                Ok((w, alloc)) => {
                    let s: Complex64 =
                        h.iter().zip(w.entries().iter()).map(|(a, b)| a * b).sum();
                    assert!((s - c(gamma.sqrt())).norm() < 1e-12);
                    assert!(alloc.marginal_amplitude <= cap.sqrt() + 1e-15);
                    // MRT is only a competitor when it respects the cap itself
                    if w_conv.antenna_powers().iter().all(|&p| p <= cap) {
                        assert!(l21_norm(w.entries()) <= l21_norm(w_conv.entries()) + 1e-12);
                    }
                    // inactive antennas are the weakest ones
                    let weakest_active = alloc
                        .saturated_set
                        .iter()
                        .chain(std::iter::once(&alloc.marginal_index))
                        .map(|&i| h[i].norm())
                        .fold(f64::INFINITY, f64::min);
                    for &i in &alloc.inactive_set {
                        assert!(h[i].norm() <= weakest_active);
                    }
                }
                Err(Error::Infeasible(_)) => {
                    let reach: f64 = cap.sqrt() * h.iter().map(|x| x.norm()).sum::<f64>();
                    assert!(reach < gamma.sqrt());
                }
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn mrt_efficient_phase_covariance() {
        let mut rng = Rng::new(3);
        let h = gen_nlos(6, 1, &mut rng).unwrap().row(0);
        let phases: Vec<Complex64> = (0..6).map(|i| Complex64::from_polar(1.0, 0.7 * i as f64)).collect();
        let rotated: Vec<Complex64> = h.iter().zip(&phases).map(|(a, p)| a * p).collect();
        let (w, _) = mrt_efficient(&h, 4.0, 1.0, Some(0.3)).unwrap();
        let (wr, _) = mrt_efficient(&rotated, 4.0, 1.0, Some(0.3)).unwrap();
        for m in 0..6 {
            assert!(close(wr.entries()[(0, m)], w.entries()[(0, m)] * phases[m].conj(), 1e-12));
        }
        let wm = mrt(&h, 4.0, 1.0).unwrap();
        let wmr = mrt(&rotated, 4.0, 1.0).unwrap();
        for m in 0..6 {
            assert!(close(wmr.entries()[(0, m)], wm.entries()[(0, m)] * phases[m].conj(), 1e-12));
        }
    }

    #[test]
    fn zf_identity() {
        let h = ChannelMatrix::new(CMatrix::identity(2, 2)).unwrap();
        let t = TargetSpec::uniform(2, 4.0, 1.0, None).unwrap();
        let w = zf(&h, &t).unwrap();
        assert!((w.entries() - CMatrix::identity(2, 2) * c(2.0)).norm() < 1e-14);
    }

    #[test]
    fn zf_single_user_is_mrt() {
        let h = gen_nlos(9, 1, &mut Rng::new(8)).unwrap();
        let t = TargetSpec::uniform(1, 10.0, 1.0, None).unwrap();
        let w = zf(&h, &t).unwrap();
        let w_mrt = mrt(&h.row(0), 10.0, 1.0).unwrap();
        assert!((w.entries() - w_mrt.entries()).norm() < 1e-14);
    }

    #[test]
    fn zf_nulls_interference() {
        let mut rng = Rng::new(21);
        for _ in 0..20 {
            let h = gen_nlos(8, 2, &mut rng).unwrap();
            let t = TargetSpec::new(vec![10.0, 3.0], 1.0, None).unwrap();
            let w = zf(&h, &t).unwrap();
            let g = h.entries() * w.entries().transpose();
            assert!(g[(0, 1)].norm() <= 1e-10 && g[(1, 0)].norm() <= 1e-10);
            let sinr = evaluate_sinr(&h, &w, 1.0).unwrap();
            assert!((sinr[0] - 10.0).abs() < 1e-9 && (sinr[1] - 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zf_errors() {
        let t = TargetSpec::uniform(3, 1.0, 1.0, None).unwrap();
        let wide = gen_nlos(2, 3, &mut Rng::new(1)).unwrap();
        assert!(matches!(zf(&wide, &t), Err(Error::Dimension(_))));
        let rank1 = ChannelMatrix::from_real(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]).unwrap();
        let t2 = TargetSpec::uniform(2, 1.0, 1.0, None).unwrap();
        assert!(matches!(zf(&rank1, &t2), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn rzf_slack_identity() {
        let h = ChannelMatrix::new(CMatrix::identity(2, 2)).unwrap();
        let t = TargetSpec::uniform(2, 10.0, 1.0, None).unwrap();
        let s = rzf_slack(&h, &t).unwrap();
        assert!((s.xi - 5.0).abs() < 1e-14);
        assert_eq!(s.eigenvalues, vec![1.0, 1.0]);
        let zero = TargetSpec::with_zero_targets_allowed(vec![0.0, 0.0], 1.0).unwrap();
        assert_eq!(rzf_slack(&h, &zero).unwrap().xi, 0.0);
    }

    #[test]
    fn rzf_slack_decreases_with_gain() {
        let t = TargetSpec::uniform(1, 10.0, 1.0, None).unwrap();
        let mut last = f64::INFINITY;
        for g in [0.1, 1.0, 10.0, 100.0, 1e4] {
            let h = ChannelMatrix::from_real(1, 1, &[g]).unwrap();
            let xi = rzf_slack(&h, &t).unwrap().xi;
            assert!(xi < last);
            last = xi;
        }
        assert!(last < 1e-6);
    }

    #[test]
    fn rzf_identity_is_tight() {
        let h = ChannelMatrix::new(CMatrix::identity(2, 2)).unwrap();
        let t = TargetSpec::uniform(2, 10.0, 1.0, None).unwrap();
        let w = rzf(&h, &t).unwrap();
        let expected = CMatrix::identity(2, 2) * c(10f64.sqrt() / 2.0);
        assert!((w.entries() - expected).norm() < 1e-14);
        assert!((target_residual_sq(&h, &w, &t) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn rzf_tight_with_unequal_targets() {
        let mut rng = Rng::new(4);
        for _ in 0..20 {
            let h = gen_nlos(6, 3, &mut rng).unwrap();
            let t = TargetSpec::new(vec![1.0, 5.0, 20.0], 0.8, None).unwrap();
            let w = rzf(&h, &t).unwrap();
            let xi = rzf_slack(&h, &t).unwrap().xi;
            let r = target_residual_sq(&h, &w, &t);
            assert!(((r - xi) / xi).abs() < 1e-8, "{r} vs {xi}");
        }
    }

    #[test]
    fn rzf_approaches_zf_at_low_noise() {
        let h = gen_nlos(8, 2, &mut Rng::new(17)).unwrap();
        // hold σ_ν √γ fixed so both precoders target the same amplitude
        let sigma = 1e-4;
        let t = TargetSpec::uniform(2, 10.0 / (sigma * sigma), sigma, None).unwrap();
        let diff = zf(&h, &t).unwrap().entries() - rzf(&h, &t).unwrap().entries();
        assert!(diff.iter().all(|d| d.norm() <= 1e-3));
    }

    #[test]
    fn rzf_single_user_matched_filter() {
        let h = gen_nlos(5, 1, &mut Rng::new(2)).unwrap();
        let t = TargetSpec::uniform(1, 10.0, 1.0, None).unwrap();
        let w = rzf(&h, &t).unwrap();
        // w ∝ h*, with a positive real factor
        let row = h.row(0);
        let ratio = w.entries()[(0, 0)] / row[0].conj();
        assert!(ratio.re > 0.0 && ratio.im.abs() < 1e-14);
        for m in 1..5 {
            assert!(close(w.entries()[(0, m)], row[m].conj() * ratio, 1e-14));
        }
    }
}
