//! Proximal operators and Euclidean projections used by the ADMM engine.
//!
//! The matrix-level functions operate on complex `K × M` precoders; the
//! slice-level helpers are their real-coordinate counterparts applied in
//! place by the solver.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::CMatrix;

/// Scales `group` by `max(0, 1 - lambda / ‖group‖)`.
pub(crate) fn shrink_group(group: &mut [f64], lambda: f64) {
    let norm = group.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm <= lambda {
        group.iter_mut().for_each(|x| *x = 0.0);
    } else {
        let scale = 1.0 - lambda / norm;
        group.iter_mut().for_each(|x| *x *= scale);
    }
}

/// Radially projects `group` onto the ball of the given radius.
pub(crate) fn clip_group(group: &mut [f64], radius: f64) {
    let norm = group.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > radius {
        let scale = radius / norm;
        group.iter_mut().for_each(|x| *x *= scale);
    }
}

/// Projects `(t, x)` stored as `[t, x_0, x_1, ...]` onto `‖x‖ ≤ t`.
pub(crate) fn project_soc_in_place(v: &mut [f64]) {
    let (t, x) = v.split_first_mut().expect("cone has a scalar part");
    let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm <= *t {
        return;
    }
    if norm <= -*t {
        *t = 0.0;
        x.iter_mut().for_each(|a| *a = 0.0);
        return;
    }
    let alpha = 0.5 * (1.0 + *t / norm);
    x.iter_mut().for_each(|a| *a *= alpha);
    *t = alpha * norm;
}

/// Block soft-thresholding of the antenna columns: the proximal operator of
/// `lambda · ‖W‖_{2,1}`.
pub fn group_soft_threshold(w: &CMatrix, lambda: f64) -> Result<CMatrix> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    let mut out = w.clone();
    for mut col in out.column_iter_mut() {
        let norm = col.norm();
        let scale = if norm <= lambda { 0.0 } else { 1.0 - lambda / norm };
        col *= Complex64::new(scale, 0.0);
    }
    Ok(out)
}

/// Projection onto `{W : A Wᵀ = B}`:
/// `Wᵀ ← Wᵀ − A†(AA†)⁻¹(A Wᵀ − B)`.
pub fn project_affine(w: &CMatrix, a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.ncols() != w.ncols() || b.nrows() != a.nrows() || b.ncols() != w.nrows() {
        return Err(Error::Dimension(format!(
            "A is {}x{}, B is {}x{}, W is {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols(),
            w.nrows(),
            w.ncols()
        )));
    }
    let gram = a * a.adjoint();
    let scale = gram.diagonal().iter().map(|d| d.re).fold(0.0, f64::max);
    let chol = gram
        .clone()
        .cholesky()
        .filter(|c| {
            let l = c.l_dirty();
            (0..l.nrows()).all(|i| l[(i, i)].re.powi(2) > 1e-12 * scale)
        })
        .ok_or_else(|| Error::RankDeficient("A does not have full row rank".into()))?;
    let residual = a * w.transpose() - b;
    let correction = a.adjoint() * chol.solve(&residual);
    Ok((w.transpose() - correction).transpose())
}

/// Rescales every antenna column whose power exceeds `cap` back onto the
/// sphere of radius `√cap`.
pub fn project_per_antenna_ball(w: &CMatrix, cap: f64) -> Result<CMatrix> {
    if !(cap > 0.0) {
        return Err(Error::InvalidParameter(format!("cap must be > 0, got {cap}")));
    }
    let radius = cap.sqrt();
    let mut out = w.clone();
    for mut col in out.column_iter_mut() {
        let norm = col.norm();
        if norm > radius {
            col *= Complex64::new(radius / norm, 0.0);
        }
    }
    Ok(out)
}

/// Projection onto the second-order cone `{(x, t) : ‖x‖₂ ≤ t}`.
pub fn project_soc(x: &[f64], t: f64) -> (Vec<f64>, f64) {
    let mut v = Vec::with_capacity(x.len() + 1);
    v.push(t);
    v.extend_from_slice(x);
    project_soc_in_place(&mut v);
    let t = v[0];
    v.remove(0);
    (v, t)
}

/// Projection of a single-user precoder onto `{w : Re(c·wᵀ) ≥ t}`.
pub fn project_half_space(w: &[Complex64], c: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
    if w.len() != c.len() {
        return Err(Error::Dimension(format!("w has {} entries, c has {}", w.len(), c.len())));
    }
    let value: f64 = w.iter().zip(c).map(|(a, b)| (a * b).re).sum();
    let norm_sq: f64 = c.iter().map(|x| x.norm_sqr()).sum();
    if value >= t || norm_sq == 0.0 {
        return Ok(w.to_vec());
    }
    let step = (t - value) / norm_sq;
    Ok(w.iter().zip(c).map(|(a, b)| a + b.conj() * step).collect())
}

/// Projection of a matrix onto the Frobenius ball of the given radius.
pub fn project_frobenius_ball(w: &CMatrix, radius: f64) -> Result<CMatrix> {
    if !(radius >= 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be >= 0, got {radius}")));
    }
    let norm = w.norm();
    if norm <= radius {
        Ok(w.clone())
    } else {
        Ok(w * Complex64::new(radius / norm, 0.0))
    }
}
