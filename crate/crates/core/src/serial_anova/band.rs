use serde::Serialize;

use super::algorithm::AnovaEstimate;
use crate::error::{Error, Result};
use crate::stats::{Estimate, Moments};
use crate::stochastics::special::norm_quantile_unchecked;
use crate::stochastics::student_t_quantile;

/// `√W̄` with its delta-method confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoefficientEstimate {
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub reps: usize,
    pub alpha: f64,
    /// Mean and standard deviation of the underlying variance samples.
    pub w_mean: f64,
    pub w_sd: f64,
}

impl CoefficientEstimate {
    /// A coefficient known exactly (e.g. from the enumeration oracle).
    pub fn exact(value: f64) -> Self {
        CoefficientEstimate {
            point: value,
            ci_low: value,
            ci_high: value,
            reps: 0,
            alpha: 0.0,
            w_mean: value * value,
            w_sd: 0.0,
        }
    }
}

pub fn coefficient_ci(samples: &[AnovaEstimate], alpha: f64) -> Result<CoefficientEstimate> {
    let w: Vec<f64> = samples.iter().map(|s| s.value).collect();
    coefficient_ci_from_values(&w, alpha)
}

/// `√W̄ ± ν/(2√W̄) · t_{1−α/2, N−1}/√N`. Negative samples are kept in `W̄`.
pub fn coefficient_ci_from_values(w: &[f64], alpha: f64) -> Result<CoefficientEstimate> {
    if w.len() < 2 {
        return Err(Error::config(format!("need at least 2 replications, got {}", w.len())));
    }
    check_alpha(alpha)?;
    let m = Moments::from_slice(w);
    let nu = m.variance().sqrt();
    if !(m.mean > 0.0) {
        return Err(Error::NonPositiveVariance { mean: m.mean, nu });
    }
    let n = w.len();
    let root = m.mean.sqrt();
    let t = student_t_quantile(1.0 - alpha / 2.0, (n - 1) as u64)?;
    let half = nu / (2.0 * root) * t / (n as f64).sqrt();
    Ok(CoefficientEstimate {
        point: root,
        ci_low: root - half,
        ci_high: root + half,
        reps: n,
        alpha,
        w_mean: m.mean,
        w_sd: nu,
    })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::config(format!("alpha must lie in (0,1), got {alpha}")))
    }
}

/// Baseline, coefficients and optional second-order term of a worst-case band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorstCaseBand {
    pub baseline: Estimate,
    pub xi1: CoefficientEstimate,
    pub xi2: Option<f64>,
    pub coef_s: Option<CoefficientEstimate>,
}

impl WorstCaseBand {
    /// `(lower, upper)` at budget `eta` using point estimates, including the
    /// `Ξ₂·η` term when known.
    pub fn at(&self, eta: f64) -> (f64, f64) {
        let shift = self.xi2.map_or(0.0, |x| x * eta);
        let half = self.xi1.point * eta.sqrt();
        (self.baseline.value - half + shift, self.baseline.value + half + shift)
    }

    /// `(lower, upper)` for the two-lag budget pair `(η₁, η₂)`.
    pub fn at_two_lag(&self, eta1: f64, eta2: f64) -> (f64, f64) {
        let s = self.coef_s.map_or(0.0, |c| c.point);
        let half = self.xi1.point * eta1.sqrt() + s * eta2.sqrt();
        (self.baseline.value - half, self.baseline.value + half)
    }
}

/// One grid point of a first-order band.
///
/// `*_inner` and `*_outer` use the lower and upper CI endpoints of the
/// coefficient; `*_conservative` also widens by the baseline's own
/// `1 − α` normal interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandRow {
    pub eta: f64,
    pub baseline: f64,
    pub baseline_se: f64,
    pub lower: f64,
    pub upper: f64,
    pub lower_inner: f64,
    pub upper_inner: f64,
    pub lower_outer: f64,
    pub upper_outer: f64,
    pub lower_conservative: f64,
    pub upper_conservative: f64,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    match grid.iter().find(|e| !(**e >= 0.0) || !e.is_finite()) {
        Some(e) => Err(Error::config(format!(
            "budgets must be finite and non-negative, got {e}"
        ))),
        None => Ok(()),
    }
}

fn baseline_margin(baseline: &Estimate, alpha: f64) -> f64 {
    let a = if alpha > 0.0 && alpha < 1.0 { alpha } else { 0.05 };
    norm_quantile_unchecked(1.0 - a / 2.0) * baseline.stderr
}

/// `baseline ± Ξ₁·√η` over the grid.
pub fn first_order_band(baseline: &Estimate, xi1: &CoefficientEstimate, eta_grid: &[f64]) -> Result<Vec<BandRow>> {
    check_grid(eta_grid)?;
    let b = baseline.value;
    let margin = baseline_margin(baseline, xi1.alpha);
    Ok(eta_grid
        .iter()
        .map(|&eta| {
            let r = eta.sqrt();
            BandRow {
                eta,
                baseline: b,
                baseline_se: baseline.stderr,
                lower: b - xi1.point * r,
                upper: b + xi1.point * r,
                lower_inner: b - xi1.ci_low * r,
                upper_inner: b + xi1.ci_low * r,
                lower_outer: b - xi1.ci_high * r,
                upper_outer: b + xi1.ci_high * r,
                lower_conservative: b - margin - xi1.ci_high * r,
                upper_conservative: b + margin + xi1.ci_high * r,
            }
        })
        .collect())
}

/// One grid point of a two-lag band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoLagBandRow {
    pub eta1: f64,
    pub eta2: f64,
    pub baseline: f64,
    pub baseline_se: f64,
    pub lower: f64,
    pub upper: f64,
    pub lower_outer: f64,
    pub upper_outer: f64,
    pub lower_conservative: f64,
    pub upper_conservative: f64,
}

/// `baseline ± (Ξ₁·√η₁ + √Var₀(S)·√η₂)` over the product of the two grids.
pub fn two_lag_band(
    baseline: &Estimate,
    xi1: &CoefficientEstimate,
    coef_s: &CoefficientEstimate,
    eta1_grid: &[f64],
    eta2_grid: &[f64],
) -> Result<Vec<TwoLagBandRow>> {
    check_grid(eta1_grid)?;
    check_grid(eta2_grid)?;
    let b = baseline.value;
    let margin = baseline_margin(baseline, xi1.alpha);
    let mut rows = Vec::with_capacity(eta1_grid.len() * eta2_grid.len());
    for &eta1 in eta1_grid {
        for &eta2 in eta2_grid {
            let half = xi1.point * eta1.sqrt() + coef_s.point * eta2.sqrt();
            let outer = xi1.ci_high * eta1.sqrt() + coef_s.ci_high * eta2.sqrt();
            rows.push(TwoLagBandRow {
                eta1,
                eta2,
                baseline: b,
                baseline_se: baseline.stderr,
                lower: b - half,
                upper: b + half,
                lower_outer: b - outer,
                upper_outer: b + outer,
                lower_conservative: b - margin - outer,
                upper_conservative: b + margin + outer,
            });
        }
    }
    Ok(rows)
}
