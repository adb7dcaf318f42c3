//! Active-set correction applied after ADMM converges.
//!
//! Zero columns and columns sitting on the per-antenna cap are kept as they
//! are. The remaining columns receive the minimum-norm real correction that
//! makes every affine equality, and every half-space within tolerance of its
//! boundary, hold with equality. Problems with cone or ball constraints are
//! left untouched.

use nalgebra::{DMatrix, DVector};

use super::{Constraint, ConvexProblem};
use crate::model::PrecodingMatrix;

const SATURATION_RTOL: f64 = 1e-10;

/// One real linear equation `Σ coef · x = rhs` over the free coordinates.
struct Row {
    coef: Vec<f64>,
    residual: f64,
}

/// Returns the corrected precoder, or `None` when the problem is out of scope,
/// the restricted system is singular, the step exceeds `max_step`, or the
/// corrected point would violate a cap or half-space.
pub(crate) fn polish(problem: &ConvexProblem, w: &PrecodingMatrix, max_step: f64) -> Option<PrecodingMatrix> {
    let entries = w.entries();
    let (users, antennas) = (problem.users(), problem.antennas());
    let mut cap = None;
    for c in problem.constraints() {
        match c {
            Constraint::AffineEquality { .. } | Constraint::HalfSpace { .. } => {}
            Constraint::PerAntennaBall { cap: p } => cap = Some(*p),
            _ => return None,
        }
    }

    let powers = w.antenna_powers();
    let free: Vec<usize> = (0..antennas)
        .filter(|&m| powers[m] > 0.0 && cap.is_none_or(|p| powers[m] < p * (1.0 - SATURATION_RTOL)))
        .collect();
    if free.is_empty() {
        return None;
    }
    // real coordinate of (user k, free column f, part)
    let n = 2 * users * free.len();
    let coord = |f: usize, k: usize, part: usize| 2 * (f * users + k) + part;

    let mut rows = Vec::new();
    for c in problem.constraints() {
        match c {
            Constraint::AffineEquality { a, b } => {
                let residual = a * entries.transpose() - b;
                for r in 0..a.nrows() {
                    for k in 0..users {
                        let mut re = vec![0.0; n];
                        let mut im = vec![0.0; n];
                        for (f, &m) in free.iter().enumerate() {
                            let x = a[(r, m)];
                            re[coord(f, k, 0)] = x.re;
                            re[coord(f, k, 1)] = -x.im;
                            im[coord(f, k, 0)] = x.im;
                            im[coord(f, k, 1)] = x.re;
                        }
                        rows.push(Row { coef: re, residual: residual[(r, k)].re });
                        rows.push(Row { coef: im, residual: residual[(r, k)].im });
                    }
                }
            }
            Constraint::HalfSpace { c, t } => {
                let value: f64 = c.iter().zip(entries.row(0).iter()).map(|(a, b)| (a * b).re).sum();
                if value - t <= max_step {
                    let mut coef = vec![0.0; n];
                    for (f, &m) in free.iter().enumerate() {
                        coef[coord(f, 0, 0)] = c[m].re;
                        coef[coord(f, 0, 1)] = -c[m].im;
                    }
                    rows.push(Row { coef, residual: value - t });
                }
            }
            _ => {}
        }
    }
    if rows.is_empty() || rows.len() > n {
        return None;
    }

    let g = DMatrix::from_fn(rows.len(), n, |i, j| rows[i].coef[j]);
    let e = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.residual));
    let gram = &g * g.transpose();
    let scale = gram.diagonal().max();
    let chol = gram.cholesky()?;
    let l = chol.l_dirty();
    if (0..l.nrows()).any(|i| l[(i, i)].powi(2) <= 1e-12 * scale) {
        return None;
    }
    let step = -(g.transpose() * chol.solve(&e));
    if step.norm() > max_step {
        return None;
    }

    let mut out = entries.clone();
    for (f, &m) in free.iter().enumerate() {
        for k in 0..users {
            out[(k, m)].re += step[coord(f, k, 0)];
            out[(k, m)].im += step[coord(f, k, 1)];
        }
    }
    let polished = PrecodingMatrix::new(out).ok()?;
    let tol = 1e-12 * (1.0 + polished.entries().norm());
    let holds = problem.constraints().iter().all(|c| match c {
        Constraint::AffineEquality { .. } => true,
        Constraint::PerAntennaBall { cap } => c.violation(polished.entries()) <= 1e-12 * cap,
        _ => c.violation(polished.entries()) <= tol,
    });
    holds.then_some(polished)
}
