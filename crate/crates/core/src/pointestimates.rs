//! Condition numbers and Smale point estimates on the unit sphere.
//!
//! `mu_norm(f, x) = ||f|| * ||Df(x)^+ Delta(x)||`. Since
//! `Df^+ Delta = (Delta^{-1} Df)^+`, its spectral norm is the reciprocal
//! of the smallest (m-th) singular value of the row-scaled Jacobian.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{self, GridSpec};
use crate::polysys::PolynomialSystem;

pub const ALPHA0: f64 = 0.125;
const UNIT_TOL: f64 = 1e-9;
const RANK_TOL: f64 = 1e-12;
const NEWTON_MAX_ITERS: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PointEstimates {
    pub mu: f64,
    pub alpha_bar: f64,
    pub beta_bar: f64,
    pub gamma_bar: f64,
    pub residual_norm: f64,
    pub kappa_at: f64,
}

fn check_unit(x: &[f64]) -> Result<()> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(Error::NonUnitPoint(norm));
    }
    Ok(())
}

/// Smallest and largest singular value of `Delta(x)^{-1} Df(x)`.
fn scaled_extreme_singular_values(system: &PolynomialSystem, x: &[f64]) -> Result<(f64, f64)> {
    let mut jac = system.jacobian(x)?;
    let delta = system.delta_diagonal(x)?;
    for (i, d) in delta.iter().enumerate() {
        jac.row_mut(i).scale_mut(1.0 / d);
    }
    Ok(extreme_singular_values(&jac))
}

fn extreme_singular_values(a: &DMatrix<f64>) -> (f64, f64) {
    if a.nrows() == 1 {
        let s = a.norm();
        return (s, s);
    }
    let sv = a.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    // m <= n + 1, so the m-th singular value is the smallest one
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    (min, max)
}

/// `mu_norm(f, x)` for `x` on the unit sphere; `Infinity` when the scaled
/// Jacobian is numerically rank deficient.
pub fn mu_norm(system: &PolynomialSystem, x: &[f64]) -> Result<f64> {
    if x.len() != system.n() + 1 {
        return Err(Error::DimensionMismatch { expected: system.n() + 1, got: x.len() });
    }
    check_unit(x)?;
    mu_norm_unchecked(system, x)
}

fn mu_norm_unchecked(system: &PolynomialSystem, x: &[f64]) -> Result<f64> {
    let (smin, smax) = scaled_extreme_singular_values(system, x)?;
    if smin <= RANK_TOL * smax.max(1.0) {
        Ok(f64::INFINITY)
    } else {
        Ok(system.weyl_norm() / smin)
    }
}

fn kappa_from(norm: f64, mu: f64, residual: f64) -> f64 {
    let inv_mu = if mu.is_infinite() { 0.0 } else { 1.0 / mu };
    let denom = (norm * norm * inv_mu * inv_mu + residual * residual).sqrt();
    if denom == 0.0 {
        f64::INFINITY
    } else {
        norm / denom
    }
}

/// `kappa(f, x) = ||f|| / sqrt(||f||^2 mu^{-2} + ||f(x)||^2)`.
pub fn kappa_at(system: &PolynomialSystem, x: &[f64]) -> Result<f64> {
    let mu = mu_norm(system, x)?;
    let residual = system.residual_norm(x)?;
    Ok(kappa_from(system.weyl_norm(), mu, residual))
}

pub fn point_estimates(system: &PolynomialSystem, x: &[f64]) -> Result<PointEstimates> {
    let mu = mu_norm(system, x)?;
    let residual = system.residual_norm(x)?;
    Ok(estimates_from(system, mu, residual))
}

pub(crate) fn estimates_from(system: &PolynomialSystem, mu: f64, residual: f64) -> PointEstimates {
    let norm = system.weyl_norm();
    let kappa = kappa_from(norm, mu, residual);
    if mu.is_infinite() {
        return PointEstimates {
            mu,
            alpha_bar: f64::INFINITY,
            beta_bar: f64::INFINITY,
            gamma_bar: f64::INFINITY,
            residual_norm: residual,
            kappa_at: kappa,
        };
    }
    let d = system.max_degree() as f64;
    let beta_bar = mu * residual / norm;
    let gamma_bar = 0.5 * d.powf(1.5) * mu;
    PointEstimates {
        mu,
        alpha_bar: beta_bar * gamma_bar,
        beta_bar,
        gamma_bar,
        residual_norm: residual,
        kappa_at: kappa,
    }
}

/// Moore-Penrose inverse of a full-row-rank matrix, or `None` when the
/// smallest singular value falls under the rank tolerance.
pub fn pseudo_inverse(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let tol = RANK_TOL * smax.max(1.0);
    if svd.singular_values.len() < a.nrows() || svd.singular_values.iter().any(|&s| s <= tol) {
        return None;
    }
    svd.pseudo_inverse(0.0).ok()
}

/// One Moore-Penrose Newton step `x - Df(x)^+ f(x)`.
pub fn newton_mp(system: &PolynomialSystem, x: &[f64]) -> Result<Vec<f64>> {
    let jac = system.jacobian(x)?;
    let fx = DVector::from_vec(system.evaluate(x)?);
    let step = if jac.nrows() == 1 {
        let g2 = jac.norm_squared();
        if g2.sqrt() <= RANK_TOL * g2.sqrt().max(1.0) {
            return Err(Error::NewtonUndefined);
        }
        jac.row(0).transpose() * (fx[0] / g2)
    } else {
        let pinv = pseudo_inverse(&jac).ok_or(Error::NewtonUndefined)?;
        pinv * fx
    };
    Ok(x.iter().zip(step.iter()).map(|(a, b)| a - b).collect())
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Newton iteration from a certified point (`alpha_bar <= 1/8`) until the
/// relative residual drops to `tol`.
pub fn refine_zero(system: &PolynomialSystem, x: &[f64], tol: f64) -> Result<Vec<f64>> {
    let est = point_estimates(system, x)?;
    if !(est.alpha_bar <= ALPHA0) {
        return Err(Error::Precondition(format!("alpha_bar = {} exceeds {ALPHA0}", est.alpha_bar)));
    }
    let norm = system.weyl_norm();
    let mut p = x.to_vec();
    let mut last_step = f64::INFINITY;
    let mut growth = 0;
    for _ in 0..=NEWTON_MAX_ITERS {
        if system.residual_norm(&p)? / norm <= tol {
            if dist(&p, x) > 2.0 * est.beta_bar + tol {
                return Err(Error::Invariant(format!(
                    "refined zero lies {} from its start, beyond 2 beta_bar = {}",
                    dist(&p, x),
                    2.0 * est.beta_bar
                )));
            }
            return Ok(p);
        }
        let next = newton_mp(system, &p)?;
        let step = dist(&next, &p);
        if step > last_step {
            growth += 1;
            if growth >= 2 {
                return Err(Error::NonConvergence(NEWTON_MAX_ITERS));
            }
        } else {
            growth = 0;
        }
        last_step = step;
        p = next;
    }
    Err(Error::NonConvergence(NEWTON_MAX_ITERS))
}

/// Maximum of `kappa(f, x)` over the grid `G_{2^-k}`: a lower estimate of
/// `kappa(f)`, used for diagnostics and the random-system harness.
pub fn kappa_upper_estimate(system: &PolynomialSystem, k: u32, budget: u128) -> Result<f64> {
    let n = system.n();
    let k0 = grid::initial_mesh_exponent(n);
    if k < k0 {
        return Err(Error::Precondition(format!("mesh exponent {k} below initial exponent {k0}")));
    }
    let spec = GridSpec::new(n, k)?;
    let count = spec.count();
    if count > budget {
        return Err(Error::GridBudget { count, budget });
    }
    let norm = system.weyl_norm();
    let chunk_max = |range: std::ops::Range<u128>| -> Result<f64> {
        let mut best: f64 = 0.0;
        for point in spec.points_in(range) {
            let x = point.sphere();
            let mu = mu_norm_unchecked(system, &x)?;
            let residual = system.residual_norm_unchecked(&x);
            best = best.max(kappa_from(norm, mu, residual));
        }
        Ok(best)
    };
    let maxima = crate::par::map_ranges(count, chunk_max);
    maxima.into_iter().try_fold(0.0f64, |acc, v| Ok(acc.max(v?)))
}
