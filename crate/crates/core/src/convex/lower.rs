//! Real-coordinate lowering of a [`ConvexProblem`].
//!
//! Every constraint becomes a set of real affine equations, possibly linking
//! fresh auxiliary coordinates, plus a simple set on those auxiliaries whose
//! projection is closed form (cone, ball, bound). All affine equations are
//! merged into one subspace projector; everything else is separable and is
//! handled together with the objective prox.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::prox::{clip_group, project_soc_in_place, shrink_group};
use super::{Constraint, ConvexProblem, Objective};
use crate::error::{Error, Result};
use crate::model::CMatrix;

const RANK_RTOL: f64 = 1e-10;

/// Euclidean projector onto `{v : A v = b}`, stored as an orthonormal basis
/// `Q` of the row space of `A` and the least-norm point `x0`.
#[derive(Debug, Clone)]
pub(crate) struct AffineProjector {
    basis: DMatrix<f64>,
    particular: DVector<f64>,
    coef: DVector<f64>,
}

impl AffineProjector {
    fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let (rows, cols) = a.shape();
        if rows > cols {
            return Err(Error::RankDeficient(format!(
                "{rows} equality constraints on {cols} real unknowns"
            )));
        }
        let qr = a.transpose().qr();
        let r = qr.r();
        let peak = r.diagonal().iter().map(|d| d.abs()).fold(0.0, f64::max);
        if !(peak > 0.0) || r.diagonal().iter().any(|d| d.abs() <= RANK_RTOL * peak) {
            return Err(Error::RankDeficient(
                "equality constraints are linearly dependent".into(),
            ));
        }
        let basis = qr.q();
        // A = Rᵀ Qᵀ, so the least-norm solution is Q R⁻ᵀ b.
        let y = r
            .transpose()
            .solve_lower_triangular(&b)
            .ok_or_else(|| Error::RankDeficient("singular triangular factor".into()))?;
        let particular = &basis * y;
        Ok(Self {
            coef: DVector::zeros(rows),
            basis,
            particular,
        })
    }

    /// `out = v − Q Qᵀ v + x0`.
    pub(crate) fn project(&mut self, v: &DVector<f64>, out: &mut DVector<f64>) {
        self.coef.gemv_tr(1.0, &self.basis, v, 0.0);
        out.copy_from(v);
        out.gemv(-1.0, &self.basis, &self.coef, 1.0);
        *out += &self.particular;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum AuxSet {
    /// `[t, x...]` with `‖x‖ ≤ t`.
    Cone { offset: usize, len: usize },
    Ball { offset: usize, len: usize, radius: f64 },
    LowerBound { index: usize, bound: f64 },
    /// `count` consecutive groups of `group` coordinates, each within `radius`.
    GroupBalls {
        offset: usize,
        group: usize,
        count: usize,
        radius: f64,
    },
}

impl AuxSet {
    fn project(&self, v: &mut [f64]) {
        match *self {
            AuxSet::Cone { offset, len } => project_soc_in_place(&mut v[offset..offset + len]),
            AuxSet::Ball {
                offset,
                len,
                radius,
            } => clip_group(&mut v[offset..offset + len], radius),
            AuxSet::LowerBound { index, bound } => v[index] = v[index].max(bound),
            AuxSet::GroupBalls {
                offset,
                group,
                count,
                radius,
            } => v[offset..offset + group * count]
                .chunks_exact_mut(group)
                .for_each(|g| clip_group(g, radius)),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Lowered {
    pub users: usize,
    pub antennas: usize,
    pub dim: usize,
    objective: Objective,
    /// Column radius applied right after the objective prox.
    fused_radius: Option<f64>,
    pub affine: Option<AffineProjector>,
    sets: Vec<AuxSet>,
}

struct Rows {
    users: usize,
    coeffs: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    dim: usize,
}

impl Rows {
    fn w_index(&self, k: usize, m: usize) -> usize {
        2 * (m * self.users + k)
    }

    fn alloc(&mut self, len: usize) -> usize {
        let offset = self.dim;
        self.dim += len;
        offset
    }

    /// Real and imaginary coefficient rows of `scale · Σ_m a_m w_{k,m}`.
    fn functional(&self, k: usize, a: impl Iterator<Item = Complex64>, scale: f64) -> [Vec<(usize, f64)>; 2] {
        let mut re = Vec::new();
        let mut im = Vec::new();
        for (m, a) in a.enumerate() {
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            let i = self.w_index(k, m);
            re.push((i, scale * a.re));
            re.push((i + 1, -scale * a.im));
            im.push((i, scale * a.im));
            im.push((i + 1, scale * a.re));
        }
        [re, im]
    }

    fn push(&mut self, row: Vec<(usize, f64)>, rhs: f64) {
        self.coeffs.push(row);
        self.rhs.push(rhs);
    }
}

impl Lowered {
    pub(crate) fn new(problem: &ConvexProblem) -> Result<Self> {
        let users = problem.users();
        let antennas = problem.antennas();
        let objective = problem.objective();
        let mut rows = Rows {
            users,
            coeffs: Vec::new(),
            rhs: Vec::new(),
            dim: 2 * users * antennas,
        };
        let mut sets = Vec::new();

        let cap = problem
            .constraints()
            .iter()
            .filter_map(|c| match c {
                Constraint::PerAntennaBall { cap } => Some(*cap),
                _ => None,
            })
            .reduce(f64::min);
        // The cap commutes with the objective prox when the objective only
        // depends on column norms.
        let column_radial = match objective {
            Objective::GroupL21 | Objective::SquaredFrobenius => true,
            Objective::L1 => users == 1,
        };
        let mut fused_radius = None;
        if let Some(cap) = cap {
            if column_radial {
                fused_radius = Some(cap.sqrt());
            } else {
                let n_w = 2 * users * antennas;
                let offset = rows.alloc(n_w);
                for i in 0..n_w {
                    rows.push(vec![(i, 1.0), (offset + i, -1.0)], 0.0);
                }
                sets.push(AuxSet::GroupBalls {
                    offset,
                    group: 2 * users,
                    count: antennas,
                    radius: cap.sqrt(),
                });
            }
        }

        for constraint in problem.constraints() {
            match constraint {
                Constraint::PerAntennaBall { .. } => {}
                Constraint::AffineEquality { a, b } => {
                    for k in 0..users {
                        for r in 0..a.nrows() {
                            let [re, im] = rows.functional(k, a.row(r).iter().copied(), 1.0);
                            rows.push(re, b[(r, k)].re);
                            rows.push(im, b[(r, k)].im);
                        }
                    }
                }
                Constraint::FrobeniusBall { a, b, radius } => {
                    let len = 2 * a.nrows() * users;
                    let offset = rows.alloc(len);
                    for k in 0..users {
                        for r in 0..a.nrows() {
                            let z = offset + 2 * (k * a.nrows() + r);
                            let [mut re, mut im] = rows.functional(k, a.row(r).iter().copied(), 1.0);
                            re.push((z, -1.0));
                            im.push((z + 1, -1.0));
                            rows.push(re, b[(r, k)].re);
                            rows.push(im, b[(r, k)].im);
                        }
                    }
                    sets.push(AuxSet::Ball {
                        offset,
                        len,
                        radius: *radius,
                    });
                }
                Constraint::HalfSpace { c, t } => {
                    let s = rows.alloc(1);
                    let [mut re, _] = rows.functional(0, c.iter().copied(), 1.0);
                    re.push((s, -1.0));
                    rows.push(re, 0.0);
                    sets.push(AuxSet::LowerBound { index: s, bound: *t });
                }
                Constraint::SocSinr {
                    user,
                    channel,
                    gamma,
                    sigma_nu,
                } => {
                    let len = 2 * users;
                    let offset = rows.alloc(len);
                    let root = gamma.sqrt();
                    // t = Re(h · w_userᵀ)
                    let [mut re, _] = rows.functional(*user, channel.iter().copied(), 1.0);
                    re.push((offset, -1.0));
                    rows.push(re, 0.0);
                    // x_j = √γ (h · w_k'ᵀ) for the interferers
                    let mut slot = offset + 1;
                    for k in (0..users).filter(|k| k != user) {
                        let [mut re, mut im] = rows.functional(k, channel.iter().copied(), root);
                        re.push((slot, -1.0));
                        im.push((slot + 1, -1.0));
                        rows.push(re, 0.0);
                        rows.push(im, 0.0);
                        slot += 2;
                    }
                    // last cone entry pinned to √γ σ_ν
                    rows.push(vec![(slot, 1.0)], root * sigma_nu);
                    sets.push(AuxSet::Cone { offset, len });
                }
            }
        }

        let dim = rows.dim;
        let affine = if rows.coeffs.is_empty() {
            None
        } else {
            let mut a = DMatrix::zeros(rows.coeffs.len(), dim);
            for (r, row) in rows.coeffs.iter().enumerate() {
                for &(i, v) in row {
                    a[(r, i)] += v;
                }
            }
            Some(AffineProjector::new(a, DVector::from_vec(rows.rhs))?)
        };

        Ok(Self {
            users,
            antennas,
            dim,
            objective,
            fused_radius,
            affine,
            sets,
        })
    }

    /// Proximal step of the separable part with weight `lambda` on the objective.
    pub(crate) fn prox(&self, v: &mut [f64], lambda: f64) {
        let n_w = 2 * self.users * self.antennas;
        let column = 2 * self.users;
        let w = &mut v[..n_w];
        match self.objective {
            Objective::GroupL21 => w.chunks_exact_mut(column).for_each(|g| shrink_group(g, lambda)),
            Objective::L1 => w.chunks_exact_mut(2).for_each(|g| shrink_group(g, lambda)),
            Objective::SquaredFrobenius => {
                let scale = 1.0 / (1.0 + 2.0 * lambda);
                w.iter_mut().for_each(|x| *x *= scale);
            }
        }
        if let Some(radius) = self.fused_radius {
            w.chunks_exact_mut(column).for_each(|g| clip_group(g, radius));
        }
        for set in &self.sets {
            set.project(v);
        }
    }

    pub(crate) fn precoder(&self, v: &[f64]) -> CMatrix {
        CMatrix::from_fn(self.users, self.antennas, |k, m| {
            let i = 2 * (m * self.users + k);
            Complex64::new(v[i], v[i + 1])
        })
    }
}
