//! First-order solver for the group-sparse precoder programs.
//!
//! A [`ConvexProblem`] is stated over a complex `K × M` precoder. The solver
//! maps it to real coordinates, splits it into an affine part and a separable
//! part, and runs ADMM between the two copies of the variable.
//!
//! # Real stacking
//!
//! Entry `w_{k,m}` occupies real coordinates `2(mK + k)` (real part) and
//! `2(mK + k) + 1` (imaginary part). Antenna column `m` is therefore the
//! contiguous block `[2mK, 2(m+1)K)`, which is exactly one L2,1 group, and
//! real and imaginary parts of a column shrink together. Auxiliary variables
//! introduced by the lowering (cone slacks, residual copies) follow after the
//! `2KM` precoder coordinates.

mod admm;
mod lower;
mod polish;
pub mod prox;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CMatrix, PrecodingMatrix};
use crate::power::{frobenius_sq, l21_norm};

pub use admm::solve;
pub use prox::{
    group_soft_threshold, project_affine, project_frobenius_ball, project_half_space,
    project_per_antenna_ball, project_soc,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Objective {
    /// `Σ_m ‖w_{·,m}‖₂`, proportional to PA consumption.
    GroupL21,
    /// `Σ_{k,m} |w_{k,m}|`; coincides with `GroupL21` for a single user.
    L1,
    /// `‖W‖_F²`, the transmit power.
    SquaredFrobenius,
}

impl Objective {
    pub fn value(&self, w: &CMatrix) -> f64 {
        match self {
            Objective::GroupL21 => l21_norm(w),
            Objective::L1 => w.iter().map(|x| x.norm()).sum(),
            Objective::SquaredFrobenius => frobenius_sq(w),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    /// `A Wᵀ = B` with `A` of size `R × M` and `B` of size `R × K`.
    AffineEquality { a: CMatrix, b: CMatrix },
    /// `‖A Wᵀ − B‖_F ≤ radius`.
    FrobeniusBall { a: CMatrix, b: CMatrix, radius: f64 },
    /// `Σ_k |w_{k,m}|² ≤ cap` for every antenna.
    PerAntennaBall { cap: f64 },
    /// `Re(c · wᵀ) ≥ t`; single-user problems only.
    HalfSpace { c: Vec<Complex64>, t: f64 },
    /// `Re(h · w_userᵀ) ≥ √γ ‖(h · w_k'ᵀ for k' ≠ user, σ_ν)‖₂`.
    SocSinr {
        user: usize,
        channel: Vec<Complex64>,
        gamma: f64,
        sigma_nu: f64,
    },
}

impl Constraint {
    /// Amount by which `w` violates the constraint, zero when satisfied.
    /// Measured in the constraint's own units (amplitude, or power for the
    /// per-antenna cap).
    pub fn violation(&self, w: &CMatrix) -> f64 {
        match self {
            Constraint::AffineEquality { a, b } => (a * w.transpose() - b).norm(),
            Constraint::FrobeniusBall { a, b, radius } => {
                ((a * w.transpose() - b).norm() - radius).max(0.0)
            }
            Constraint::PerAntennaBall { cap } => w
                .column_iter()
                .map(|col| col.norm_squared() - cap)
                .fold(0.0, f64::max),
            Constraint::HalfSpace { c, t } => {
                let value: f64 = c.iter().zip(w.row(0).iter()).map(|(a, b)| (a * b).re).sum();
                (t - value).max(0.0)
            }
            Constraint::SocSinr {
                user,
                channel,
                gamma,
                sigma_nu,
            } => {
                let gain = |k: usize| -> Complex64 {
                    channel.iter().zip(w.row(k).iter()).map(|(h, x)| h * x).sum()
                };
                let interference: f64 = (0..w.nrows())
                    .filter(|&k| k != *user)
                    .map(|k| gain(k).norm_sqr())
                    .sum();
                let rhs = gamma.sqrt() * (interference + sigma_nu * sigma_nu).sqrt();
                (rhs - gain(*user).re).max(0.0)
            }
        }
    }
}

/// A precoder program: minimize the objective over `K × M` complex matrices
/// subject to every constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexProblem {
    users: usize,
    antennas: usize,
    objective: Objective,
    constraints: Vec<Constraint>,
}

impl ConvexProblem {
    pub fn new(
        users: usize,
        antennas: usize,
        objective: Objective,
        constraints: Vec<Constraint>,
    ) -> Result<Self> {
        if users == 0 || antennas == 0 {
            return Err(Error::Dimension("variable must be at least 1x1".into()));
        }
        if constraints.is_empty() {
            return Err(Error::InvalidParameter("problem has no constraints".into()));
        }
        for c in &constraints {
            validate(c, users, antennas)?;
        }
        Ok(Self {
            users,
            antennas,
            objective,
            constraints,
        })
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective_value(&self, w: &PrecodingMatrix) -> f64 {
        self.objective.value(w.entries())
    }

    /// Largest violation over all constraints.
    pub fn max_violation(&self, w: &PrecodingMatrix) -> f64 {
        self.constraints
            .iter()
            .map(|c| c.violation(w.entries()))
            .fold(0.0, f64::max)
    }
}

fn validate(c: &Constraint, users: usize, antennas: usize) -> Result<()> {
    let dim = |msg: String| Err(Error::Dimension(msg));
    match c {
        Constraint::AffineEquality { a, b } | Constraint::FrobeniusBall { a, b, .. } => {
            if a.ncols() != antennas || a.nrows() == 0 {
                return dim(format!("A is {}x{}, expected Rx{antennas}", a.nrows(), a.ncols()));
            }
            if b.nrows() != a.nrows() || b.ncols() != users {
                return dim(format!(
                    "B is {}x{}, expected {}x{users}",
                    b.nrows(),
                    b.ncols(),
                    a.nrows()
                ));
            }
            if let Constraint::FrobeniusBall { radius, .. } = c {
                if !(radius.is_finite() && *radius >= 0.0) {
                    return Err(Error::InvalidParameter(format!("ball radius {radius}")));
                }
            }
        }
        Constraint::PerAntennaBall { cap } => {
            if !(cap.is_finite() && *cap > 0.0) {
                return Err(Error::InvalidParameter(format!("per-antenna cap {cap}")));
            }
        }
        Constraint::HalfSpace { c, t } => {
            if users != 1 {
                return dim(format!("half-space constraint needs K = 1, got K = {users}"));
            }
            if c.len() != antennas {
                return dim(format!("half-space normal has {} entries for M = {antennas}", c.len()));
            }
            if !t.is_finite() {
                return Err(Error::InvalidParameter("half-space offset".into()));
            }
        }
        Constraint::SocSinr {
            user,
            channel,
            gamma,
            sigma_nu,
        } => {
            if *user >= users {
                return dim(format!("SINR constraint for user {user} with K = {users}"));
            }
            if channel.len() != antennas {
                return dim(format!("channel row has {} entries for M = {antennas}", channel.len()));
            }
            if !(gamma.is_finite() && *gamma >= 0.0 && sigma_nu.is_finite() && *sigma_nu >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "SINR target {gamma}, noise {sigma_nu}"
                )));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Initial ADMM penalty.
    pub rho: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_iters: usize,
    /// Relaxation factor in `[1, 1.8]`.
    pub over_relaxation: f64,
    /// Rebalance `rho` from the residual ratio during the run.
    pub adaptive_rho: bool,
    /// Iterations between infeasibility checks.
    pub infeasibility_window: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rho: 1.0,
            eps_abs: 1e-8,
            eps_rel: 1e-6,
            max_iters: 50_000,
            over_relaxation: 1.6,
            adaptive_rho: true,
            infeasibility_window: 2_000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("solver config: {what}")));
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return bad("rho must be positive");
        }
        if !(self.eps_abs > 0.0 && self.eps_rel > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be >= 1");
        }
        if !(1.0..=1.8).contains(&self.over_relaxation) {
            return bad("over_relaxation must lie in [1, 1.8]");
        }
        if self.infeasibility_window == 0 {
            return bad("infeasibility_window must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Optimal,
    MaxIters,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solution: PrecodingMatrix,
    pub objective: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Tolerances in force at the last iteration.
    pub eps_primal: f64,
    pub eps_dual: f64,
    pub rho: f64,
    pub status: Status,
}

impl SolveReport {
    /// The solution if the solver converged, otherwise a descriptive error.
    pub fn into_result(self) -> Result<Self> {
        match self.status {
            Status::Optimal => Ok(self),
            Status::MaxIters => Err(Error::NotConverged {
                iterations: self.iterations,
                primal_residual: self.primal_residual,
                dual_residual: self.dual_residual,
            }),
            Status::Infeasible => Err(Error::Infeasible(format!(
                "residual stagnated at {:.3e} after {} iterations",
                self.primal_residual, self.iterations
            ))),
        }
    }
}
