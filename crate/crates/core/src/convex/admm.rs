//! Consensus ADMM between the affine copy `x` and the separable copy `z` of
//! the lowered variable, with scaled dual `u`:
//!
//! ```text
//! x   = Π_affine(z − u)
//! x̂   = α x + (1 − α) z
//! z   = prox_{f/ρ + sets}(x̂ + u)
//! u  += x̂ − z
//! ```
//!
//! The affine projection does not depend on `ρ`, so the penalty can be
//! rebalanced freely during the run.
//!
//! The solution is read from `z`, whose zero and saturated columns are exact;
//! see [`super::polish`] for the final correction of the remaining columns.

use nalgebra::DVector;

use super::lower::Lowered;
use super::polish::polish;
use super::{ConvexProblem, SolveReport, SolverConfig, Status};
use crate::error::Result;
use crate::model::PrecodingMatrix;

const RHO_MIN: f64 = 1e-6;
const RHO_MAX: f64 = 1e6;
const ADAPT_INTERVAL: usize = 25;
const ADAPT_FACTOR: f64 = 5.0;

pub fn solve(problem: &ConvexProblem, config: &SolverConfig) -> Result<SolveReport> {
    config.validate()?;
    let mut lowered = Lowered::new(problem)?;
    let n = lowered.dim;
    let sqrt_n = (n as f64).sqrt();
    let alpha = config.over_relaxation;
    let mut rho = config.rho;

    let mut x = DVector::<f64>::zeros(n);
    let mut z = DVector::<f64>::zeros(n);
    let mut z_prev = DVector::<f64>::zeros(n);
    let mut u = DVector::<f64>::zeros(n);
    let mut scratch = DVector::<f64>::zeros(n);

    let mut status = Status::MaxIters;
    let mut iterations = 0;
    let (mut r_pri, mut r_dual, mut eps_pri, mut eps_dual) = (f64::INFINITY, f64::INFINITY, 0.0, 0.0);
    // residual and dual norm at the previous infeasibility checkpoint
    let mut checkpoint: Option<(f64, f64)> = None;

    for iter in 1..=config.max_iters {
        iterations = iter;

        scratch.copy_from(&z);
        scratch -= &u;
        match lowered.affine.as_mut() {
            Some(affine) => affine.project(&scratch, &mut x),
            None => x.copy_from(&scratch),
        }

        z_prev.copy_from(&z);
        // z ← x̂ + u, then prox in place; x̂ is kept in `scratch`
        scratch.copy_from(&x);
        scratch *= alpha;
        scratch.axpy(1.0 - alpha, &z_prev, 1.0);
        z.copy_from(&scratch);
        z += &u;
        lowered.prox(z.as_mut_slice(), 1.0 / rho);
        u += &scratch;
        u -= &z;

        r_pri = x.metric_distance(&z);
        r_dual = rho * z.metric_distance(&z_prev);
        let scale_pri = x.norm().max(z.norm());
        let dual_norm = rho * u.norm();
        eps_pri = sqrt_n * config.eps_abs + config.eps_rel * scale_pri;
        eps_dual = sqrt_n * config.eps_abs + config.eps_rel * dual_norm;

        if r_pri <= eps_pri && r_dual <= eps_dual {
            status = Status::Optimal;
            break;
        }

        if iter % config.infeasibility_window == 0 {
            if let Some((last_pri, last_dual)) = checkpoint {
                let stagnant = (r_pri / last_pri - 1.0).abs() < 1e-2;
                let diverging = dual_norm > 2.0 * last_dual;
                if r_pri > 1e3 * eps_pri && stagnant && diverging {
                    status = Status::Infeasible;
                    break;
                }
            }
            checkpoint = Some((r_pri, dual_norm));
        }

        if config.adaptive_rho && iter % ADAPT_INTERVAL == 0 && r_pri > 0.0 && r_dual > 0.0 {
            let rel_pri = r_pri / scale_pri.max(f64::MIN_POSITIVE);
            let rel_dual = r_dual / dual_norm.max(f64::MIN_POSITIVE);
            let ratio = (rel_pri / rel_dual).sqrt();
            if !(1.0 / ADAPT_FACTOR..=ADAPT_FACTOR).contains(&ratio) {
                let new_rho = (rho * ratio).clamp(RHO_MIN, RHO_MAX);
                u *= rho / new_rho;
                rho = new_rho;
            }
        }
    }

    let mut solution = PrecodingMatrix::new(lowered.precoder(z.as_slice()))?;
    if status == Status::Optimal {
        if let Some(polished) = polish(problem, &solution, 10.0 * eps_pri) {
            solution = polished;
        }
    }
    Ok(SolveReport {
        objective: problem.objective_value(&solution),
        solution,
        iterations,
        primal_residual: r_pri,
        dual_residual: r_dual,
        eps_primal: eps_pri,
        eps_dual,
        rho,
        status,
    })
}
