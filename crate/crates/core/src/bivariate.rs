//! Worst-case bounds for a bivariate cost `E[h(X, Y)]` over joint laws with
//! fixed marginals and φ²-coefficient at most η, plus copula comparators.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::divergence::{CopulaFamily, CopulaSpec};
use crate::error::{Error, Result};
use crate::stats::{Estimate, Moments};
use crate::stochastics::special::{norm_cdf, norm_pdf};
use crate::stochastics::{GaussLegendre, MarginalDistribution, RngStream};

/// How conditional expectations of the cost are computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegrationSpec {
    /// Gauss-Legendre per marginal, starting at `nodes` points per axis and
    /// doubling until converged.
    Quadrature { nodes: usize },
    /// Plain Monte Carlo with `samples` draws per expectation.
    MonteCarlo { samples: usize, seed: u64 },
}

/// A cost `h(x, y)` together with the integration rule used on it.
pub struct BivariateCost<F> {
    evaluator: F,
    integration: IntegrationSpec,
}

impl<F: Fn(f64, f64) -> f64 + Sync> BivariateCost<F> {
    pub fn new(evaluator: F, integration: IntegrationSpec) -> Result<Self> {
        match integration {
            IntegrationSpec::Quadrature { nodes } if nodes < 2 => {
                return Err(Error::config("quadrature needs at least 2 nodes"))
            }
            IntegrationSpec::MonteCarlo { samples, .. } if samples < 64 => {
                return Err(Error::config("Monte Carlo integration needs at least 64 samples"))
            }
            _ => {}
        }
        Ok(BivariateCost { evaluator, integration })
    }

    /// Quadrature with 64 starting nodes.
    pub fn quadrature(evaluator: F) -> Self {
        BivariateCost {
            evaluator,
            integration: IntegrationSpec::Quadrature { nodes: 64 },
        }
    }

    pub fn integration(&self) -> IntegrationSpec {
        self.integration
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        (self.evaluator)(x, y)
    }
}

const QUAD_REL_TOL: f64 = 1e-10;
const QUAD_ABS_TOL: f64 = 1e-13;
const QUAD_MAX_DOUBLINGS: usize = 5;

/// Cost tabulated on a tensor quadrature grid.
struct QuadGrid {
    xs: Vec<f64>,
    ys: Vec<f64>,
    wx: Vec<f64>,
    wy: Vec<f64>,
    h: Vec<f64>,
    row_mean: Vec<f64>,
    col_mean: Vec<f64>,
    grand: f64,
}

impl QuadGrid {
    fn build<F: Fn(f64, f64) -> f64 + Sync>(
        cost: &BivariateCost<F>,
        mx: &MarginalDistribution,
        my: &MarginalDistribution,
        n: usize,
    ) -> Self {
        let (xs, wx) = quadrature_axis(mx, n);
        let (ys, wy) = quadrature_axis(my, n);
        let h: Vec<f64> = xs
            .iter()
            .flat_map(|&x| ys.iter().map(move |&y| (x, y)))
            .map(|(x, y)| cost.eval(x, y))
            .collect();
        let row_mean: Vec<f64> = h
            .chunks(n)
            .map(|row| row.iter().zip(&wy).map(|(v, wl)| v * wl).sum())
            .collect();
        let mut col_mean = vec![0.0; n];
        for (row, wk) in h.chunks(n).zip(&wx) {
            for (c, v) in col_mean.iter_mut().zip(row) {
                *c += wk * v;
            }
        }
        let grand = row_mean.iter().zip(&wx).map(|(m, wk)| m * wk).sum();
        QuadGrid {
            xs,
            ys,
            wx,
            wy,
            h,
            row_mean,
            col_mean,
            grand,
        }
    }

    fn n(&self) -> usize {
        self.wx.len()
    }

    fn residual_at_node(&self, k: usize, l: usize) -> f64 {
        self.h[k * self.n() + l] - self.row_mean[k] - self.col_mean[l] + self.grand
    }

    fn residual<F: Fn(f64, f64) -> f64 + Sync>(&self, cost: &BivariateCost<F>, x: f64, y: f64) -> f64 {
        let mut ex = 0.0;
        let mut ey = 0.0;
        for (&yl, &wl) in self.ys.iter().zip(&self.wy) {
            ex += wl * cost.eval(x, yl);
        }
        for (&xk, &wk) in self.xs.iter().zip(&self.wx) {
            ey += wk * cost.eval(xk, y);
        }
        cost.eval(x, y) - ex - ey + self.grand
    }

    fn residual_variance(&self) -> f64 {
        let n = self.n();
        let mut v = 0.0;
        for k in 0..n {
            let mut row = 0.0;
            for l in 0..n {
                let r = self.residual_at_node(k, l);
                row += self.wy[l] * r * r;
            }
            v += self.wx[k] * row;
        }
        v
    }
}

/// Points and weights for `E[g(X)]`: Gauss-Legendre on the probability scale
/// for bounded supports, and on the normal-score scale `u = Φ(z)`, truncated
/// at |z| = 8.5, otherwise (the probability-scale integrand is singular at the
/// ends for unbounded laws).
fn quadrature_axis(m: &MarginalDistribution, n: usize) -> (Vec<f64>, Vec<f64>) {
    let (lo, hi) = m.support();
    if lo.is_finite() && hi.is_finite() {
        let gl = GaussLegendre::new(n, 0.0, 1.0);
        let xs = gl.nodes.iter().map(|&u| m.quantile_unchecked(u)).collect();
        (xs, gl.weights)
    } else {
        let gl = GaussLegendre::new(n, -NORMAL_SCORE_EDGE, NORMAL_SCORE_EDGE);
        let xs = gl.nodes.iter().map(|&z| m.quantile_of_normal_score(z)).collect();
        let w = gl
            .nodes
            .iter()
            .zip(&gl.weights)
            .map(|(&z, &w)| w * norm_pdf(z))
            .collect();
        (xs, w)
    }
}

const NORMAL_SCORE_EDGE: f64 = 8.5;

/// Doubles the node count until `f` stabilises.
fn converge(start: usize, f: impl Fn(usize) -> f64) -> Result<(f64, usize)> {
    let mut n = start;
    let mut prev = f(n);
    for _ in 0..QUAD_MAX_DOUBLINGS {
        n *= 2;
        let cur = f(n);
        if (cur - prev).abs() <= QUAD_REL_TOL * cur.abs() + QUAD_ABS_TOL {
            return Ok((cur, n));
        }
        prev = cur;
    }
    Err(Error::NonConvergence {
        last: f(n),
        previous: prev,
    })
}

fn quad_nodes<F>(cost: &BivariateCost<F>) -> Option<usize> {
    match cost.integration {
        IntegrationSpec::Quadrature { nodes } => Some(nodes),
        IntegrationSpec::MonteCarlo { .. } => None,
    }
}

/// `E₀[h(X, Y)]` under independent marginals.
pub fn baseline_mean<F: Fn(f64, f64) -> f64 + Sync>(
    cost: &BivariateCost<F>,
    mx: &MarginalDistribution,
    my: &MarginalDistribution,
) -> Result<Estimate> {
    match cost.integration {
        IntegrationSpec::Quadrature { nodes } => {
            let (v, _) = converge(nodes, |n| QuadGrid::build(cost, mx, my, n).grand)?;
            Ok(Estimate::exact(v))
        }
        IntegrationSpec::MonteCarlo { samples, seed } => {
            let mut rng = RngStream::new(seed).child(0).rng();
            let mut m = Moments::default();
            for _ in 0..samples {
                let x = mx.sample(&mut rng);
                let y = my.sample(&mut rng);
                m.push(cost.eval(x, y));
            }
            Ok(m.into())
        }
    }
}

/// The interaction residual `r(x,y) = h − E₀[h|X=x] − E₀[h|Y=y] + E₀[h]`.
pub fn anova_residual<F: Fn(f64, f64) -> f64 + Sync>(
    cost: &BivariateCost<F>,
    mx: &MarginalDistribution,
    my: &MarginalDistribution,
    x: f64,
    y: f64,
) -> Result<Estimate> {
    match cost.integration {
        IntegrationSpec::Quadrature { nodes } => {
            let (v, _) = converge(nodes, |n| QuadGrid::build(cost, mx, my, n).residual(cost, x, y))?;
            Ok(Estimate::exact(v))
        }
        IntegrationSpec::MonteCarlo { samples, seed } => {
            let root = RngStream::new(seed).child(1);
            let (mut given_x, mut given_y, mut grand) = (Moments::default(), Moments::default(), Moments::default());
            let mut rng = root.child(0).rng();
            for _ in 0..samples {
                given_x.push(cost.eval(x, my.sample(&mut rng)));
            }
            let mut rng = root.child(1).rng();
            for _ in 0..samples {
                given_y.push(cost.eval(mx.sample(&mut rng), y));
            }
            let mut rng = root.child(2).rng();
            for _ in 0..samples {
                let xs = mx.sample(&mut rng);
                grand.push(cost.eval(xs, my.sample(&mut rng)));
            }
            let se2 = given_x.stderr().powi(2) + given_y.stderr().powi(2) + grand.stderr().powi(2);
            Ok(Estimate {
                value: cost.eval(x, y) - given_x.mean - given_y.mean + grand.mean,
                stderr: se2.sqrt(),
            })
        }
    }
}

const MC_VARIANCE_BATCHES: usize = 16;

/// `Var₀(r(X, Y))` under independent marginals.
///
/// The Monte Carlo route tabulates `h` on a `K × K` grid of independent draws
/// per batch; the two-way interaction sum of squares over `(K−1)²` is unbiased
/// for the residual variance, and batches give the standard error.
pub fn residual_variance<F: Fn(f64, f64) -> f64 + Sync>(
    cost: &BivariateCost<F>,
    mx: &MarginalDistribution,
    my: &MarginalDistribution,
) -> Result<Estimate> {
    match cost.integration {
        IntegrationSpec::Quadrature { nodes } => {
            let (v, _) = converge(nodes, |n| QuadGrid::build(cost, mx, my, n).residual_variance())?;
            Ok(Estimate::exact(v.max(0.0)))
        }
        IntegrationSpec::MonteCarlo { samples, seed } => {
            let k = ((samples / MC_VARIANCE_BATCHES) as f64).sqrt().floor().max(2.0) as usize;
            let root = RngStream::new(seed).child(2);
            let batches: Vec<f64> = (0..MC_VARIANCE_BATCHES)
                .into_par_iter()
                .map(|b| {
                    let mut rng = root.child(b as u64).rng();
                    let xs: Vec<f64> = (0..k).map(|_| mx.sample(&mut rng)).collect();
                    let ys: Vec<f64> = (0..k).map(|_| my.sample(&mut rng)).collect();
                    let h: Vec<f64> = xs
                        .iter()
                        .flat_map(|&x| ys.iter().map(move |&y| (x, y)))
                        .map(|(x, y)| cost.eval(x, y))
                        .collect();
                    interaction_sum_of_squares(&h, k) / ((k - 1) * (k - 1)) as f64
                })
                .collect();
            Ok(Moments::from_slice(&batches).into())
        }
    }
}

/// `Σ_ij (a_ij − ā_i· − ā_·j + ā)²` for a row-major `k × k` table.
pub(crate) fn interaction_sum_of_squares(a: &[f64], k: usize) -> f64 {
    let kf = k as f64;
    let row: Vec<f64> = a.chunks(k).map(|r| r.iter().sum::<f64>() / kf).collect();
    let mut col = vec![0.0; k];
    for r in a.chunks(k) {
        for (c, v) in col.iter_mut().zip(r) {
            *c += v;
        }
    }
    col.iter_mut().for_each(|c| *c /= kf);
    let grand = row.iter().sum::<f64>() / kf;
    let mut ss = 0.0;
    for (i, r) in a.chunks(k).enumerate() {
        for (j, v) in r.iter().enumerate() {
            let d = v - row[i] - col[j] + grand;
            ss += d * d;
        }
    }
    ss
}

/// The constants of the first-order worst-case bounds for one bivariate cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BivariateWorstCase {
    pub baseline_mean: f64,
    pub residual_variance: f64,
    pub marginals: (MarginalDistribution, MarginalDistribution),
}

impl BivariateWorstCase {
    pub fn new(
        baseline_mean: f64,
        residual_variance: f64,
        marginals: (MarginalDistribution, MarginalDistribution),
    ) -> Result<Self> {
        if !(residual_variance >= 0.0) || !baseline_mean.is_finite() {
            return Err(Error::invalid(
                "residual variance must be non-negative and the mean finite",
            ));
        }
        Ok(BivariateWorstCase {
            baseline_mean,
            residual_variance,
            marginals,
        })
    }

    pub fn from_cost<F: Fn(f64, f64) -> f64 + Sync>(
        cost: &BivariateCost<F>,
        mx: &MarginalDistribution,
        my: &MarginalDistribution,
    ) -> Result<Self> {
        let mean = baseline_mean(cost, mx, my)?;
        let var = residual_variance(cost, mx, my)?;
        Self::new(mean.value, var.value.max(0.0), (*mx, *my))
    }
}

/// `E₀[h] ∓ √(Var₀(r)·η)`, returned as `(lower, upper)`.
pub fn proposition1_bounds(wc: &BivariateWorstCase, eta: f64) -> Result<(f64, f64)> {
    if !(eta >= 0.0) {
        return Err(Error::invalid(format!("budget must be non-negative, got {eta}")));
    }
    let half = (wc.residual_variance * eta).sqrt();
    Ok((wc.baseline_mean - half, wc.baseline_mean + half))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Upper,
    Lower,
}

const FEASIBILITY_GRID: usize = 101;

/// The likelihood ratio `1 ± √(η/Var₀(r))·r(x,y)` against the product of the
/// marginals, attaining the upper or lower bound.
pub struct WorstCaseDensity<'a, F> {
    cost: &'a BivariateCost<F>,
    grid: QuadGrid,
    scale: f64,
    max_feasible_eta: f64,
}

impl<F: Fn(f64, f64) -> f64 + Sync> WorstCaseDensity<'_, F> {
    pub fn residual(&self, x: f64, y: f64) -> f64 {
        self.grid.residual(self.cost, x, y)
    }

    /// Density relative to `P₀(x) × P₀(y)`.
    pub fn relative_density(&self, x: f64, y: f64) -> f64 {
        1.0 + self.scale * self.residual(x, y)
    }

    /// Signed coefficient multiplying `r` in the relative density.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Largest budget for which this direction stays non-negative on the
    /// feasibility grid.
    pub fn max_feasible_eta(&self) -> f64 {
        self.max_feasible_eta
    }
}

/// Builds the worst-case density for `direction`, or fails with the largest
/// feasible budget when `eta` makes it negative somewhere on a 101 × 101 grid
/// of the support. Requires a quadrature integration spec.
pub fn worst_case_density<'a, F: Fn(f64, f64) -> f64 + Sync>(
    cost: &'a BivariateCost<F>,
    mx: &MarginalDistribution,
    my: &MarginalDistribution,
    eta: f64,
    direction: Direction,
) -> Result<WorstCaseDensity<'a, F>> {
    if !(eta >= 0.0) {
        return Err(Error::invalid(format!("budget must be non-negative, got {eta}")));
    }
    let nodes =
        quad_nodes(cost).ok_or_else(|| Error::config("worst-case densities need a quadrature integration spec"))?;
    let (var, n) = converge(nodes, |n| QuadGrid::build(cost, mx, my, n).residual_variance())?;
    let grid = QuadGrid::build(cost, mx, my, n);

    let xs = feasibility_axis(mx);
    let ys = feasibility_axis(my);
    let (mut r_min, mut r_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &x in &xs {
        for &y in &ys {
            let r = grid.residual(cost, x, y);
            r_min = r_min.min(r);
            r_max = r_max.max(r);
        }
    }
    let worst = match direction {
        Direction::Upper => (-r_min).max(0.0),
        Direction::Lower => r_max.max(0.0),
    };
    let max_feasible_eta = if worst > 0.0 && var > 0.0 {
        var / (worst * worst)
    } else {
        f64::INFINITY
    };
    if eta > max_feasible_eta * (1.0 + 1e-9) {
        return Err(Error::BudgetTooLarge {
            max_eta: max_feasible_eta,
        });
    }
    let magnitude = if var > 0.0 { (eta / var).sqrt() } else { 0.0 };
    let scale = match direction {
        Direction::Upper => magnitude,
        Direction::Lower => -magnitude,
    };
    Ok(WorstCaseDensity {
        cost,
        grid,
        scale,
        max_feasible_eta,
    })
}

fn feasibility_axis(m: &MarginalDistribution) -> Vec<f64> {
    let (lo, hi) = m.support();
    let last = (FEASIBILITY_GRID - 1) as f64;
    if lo.is_finite() && hi.is_finite() {
        (0..FEASIBILITY_GRID)
            .map(|i| lo + (hi - lo) * i as f64 / last)
            .collect()
    } else {
        (0..FEASIBILITY_GRID)
            .map(|i| m.quantile_unchecked((i as f64 + 0.5) / FEASIBILITY_GRID as f64))
            .collect()
    }
}

/// One draw from `copula`; both coordinates lie in the open unit interval.
pub fn copula_sample<R: Rng + ?Sized>(copula: &CopulaSpec, rng: &mut R) -> (f64, f64) {
    let th = copula.param();
    let (u, v) = match copula.family() {
        CopulaFamily::Gaussian => {
            let z1: f64 = StandardNormal.sample(rng);
            let z2: f64 = StandardNormal.sample(rng);
            let w = th * z1 + (1.0 - th * th).sqrt() * z2;
            (norm_cdf(z1), norm_cdf(w))
        }
        CopulaFamily::Clayton => {
            // gamma frailty V ~ Gamma(1/θ), U = (1 + E/V)^(−1/θ); ln V is
            // formed directly because V underflows for large θ
            let a = 1.0 / th;
            let g: f64 = Gamma::new(1.0 + a, 1.0).expect("valid shape").sample(rng);
            let ln_v = g.ln() + rng.gen::<f64>().ln() / a;
            let mut coord = || {
                let e: f64 = Exp1.sample(rng);
                (-softplus(e.ln() - ln_v) / th).exp()
            };
            (coord(), coord())
        }
        CopulaFamily::Gumbel => {
            if th == 1.0 {
                (rng.gen(), rng.gen())
            } else {
                // positive stable V with Laplace transform exp(−s^α), α = 1/θ
                let alpha = 1.0 / th;
                let t = std::f64::consts::PI * rng.gen::<f64>();
                let w: f64 = Exp1.sample(rng);
                let ln_v = (alpha * t).sin().ln() - t.sin().ln() / alpha
                    + (1.0 - alpha) / alpha * (((1.0 - alpha) * t).sin().ln() - w.ln());
                let mut coord = || {
                    let e: f64 = Exp1.sample(rng);
                    (-(alpha * (e.ln() - ln_v)).exp()).exp()
                };
                (coord(), coord())
            }
        }
        CopulaFamily::Amh => {
            let u: f64 = rng.gen();
            let w: f64 = rng.gen();
            (u, amh_conditional_inverse(th, u, w))
        }
    };
    (open_unit(u), open_unit(v))
}

#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
fn open_unit(u: f64) -> f64 {
    u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Solves `∂C/∂u (u, v) = w` for `v`; for AMH this is a quadratic in `v`.
fn amh_conditional_inverse(th: f64, u: f64, w: f64) -> f64 {
    let b = 1.0 - th * (1.0 - u);
    let c = th * (1.0 - u);
    let qa = w * c * c - th;
    let qb = 2.0 * w * b * c - (1.0 - th);
    let qc = w * b * b;
    let inside = |v: f64| (-1e-12..=1.0 + 1e-12).contains(&v);
    if qa.abs() < 1e-14 {
        return (-qc / qb).clamp(0.0, 1.0);
    }
    let disc = (qb * qb - 4.0 * qa * qc).max(0.0).sqrt();
    let q = -0.5 * (qb + qb.signum() * disc);
    let r1 = q / qa;
    let r2 = if q != 0.0 { qc / q } else { r1 };
    if inside(r1) {
        r1.clamp(0.0, 1.0)
    } else if inside(r2) {
        r2.clamp(0.0, 1.0)
    } else {
        // numerically borderline; the conditional CDF is monotone in v
        let cond = |v: f64| {
            let d = 1.0 - th * (1.0 - u) * (1.0 - v);
            v * (1.0 - th * (1.0 - v)) / (d * d)
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if cond(mid) < w {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

const COPULA_CHUNK: usize = 1 << 14;

/// Monte Carlo `E[h(F_X⁻¹(U), F_Y⁻¹(V))]` with `(U, V)` drawn from `copula`.
///
/// Samples are split into fixed chunks, one substream each, merged in chunk
/// order, so the result does not depend on the thread count.
pub fn expected_h_under_copula<F: Fn(f64, f64) -> f64 + Sync>(
    cost: &BivariateCost<F>,
    mx: &MarginalDistribution,
    my: &MarginalDistribution,
    copula: &CopulaSpec,
    n_samples: usize,
    stream: &RngStream,
) -> Result<Estimate> {
    if n_samples < 1000 {
        return Err(Error::config(format!("need at least 1000 samples, got {n_samples}")));
    }
    let chunks = n_samples.div_ceil(COPULA_CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = COPULA_CHUNK.min(n_samples - c * COPULA_CHUNK);
            let mut rng = stream.child(c as u64).rng();
            let mut m = Moments::default();
            for _ in 0..len {
                let (u, v) = copula_sample(copula, &mut rng);
                m.push(cost.eval(mx.quantile_unchecked(u), my.quantile_unchecked(v)));
            }
            m
        })
        .collect();
    let total = parts.iter().fold(Moments::default(), |acc, m| acc.merge(m));
    Ok(total.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{kendall_tau, ks_critical, ks_statistic};

    fn unif() -> MarginalDistribution {
        MarginalDistribution::uniform(0.0, 1.0).unwrap()
    }

    fn x2y2() -> BivariateCost<fn(f64, f64) -> f64> {
        BivariateCost::quadrature(|x, y| x * x * y * y)
    }

    #[test]
    fn separable_cost_has_no_residual() {
        let cost = BivariateCost::quadrature(|x: f64, y: f64| x + y.exp());
        let e = MarginalDistribution::exponential(0.8).unwrap();
        let n = MarginalDistribution::normal(0.0, 2.0).unwrap();
        assert!(anova_residual(&cost, &unif(), &n, 0.3, -1.2).unwrap().value.abs() < 1e-10);
        let v = residual_variance(&cost, &unif(), &unif()).unwrap().value;
        assert!(v.abs() < 1e-12, "{v}");
        let sep = BivariateCost::quadrature(|x: f64, y: f64| x * 2.0 - y);
        assert!(residual_variance(&sep, &e, &unif()).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn x2y2_residual_matches_closed_form() {
        for &(x, y) in &[(0.1, 0.9), (0.5, 0.5), (1.0, 0.0), (0.77, 0.31)] {
            let got = anova_residual(&x2y2(), &unif(), &unif(), x, y).unwrap().value;
            let want = x * x * y * y - x * x / 3.0 - y * y / 3.0 + 1.0 / 9.0;
            assert!((got - want).abs() < 1e-12, "({x},{y}): {got} vs {want}");
        }
        let xy = BivariateCost::quadrature(|x: f64, y: f64| x * y);
        let got = anova_residual(&xy, &unif(), &unif(), 0.2, 0.9).unwrap().value;
        assert!((got - (0.2 - 0.5) * (0.9 - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn residual_variance_closed_forms() {
        let v = residual_variance(&x2y2(), &unif(), &unif()).unwrap().value;
        assert!((v - (4.0f64 / 45.0).powi(2)).abs() < 1e-12, "{v}");
        let xy = BivariateCost::quadrature(|x: f64, y: f64| x * y);
        let v = residual_variance(&xy, &unif(), &unif()).unwrap().value;
        assert!((v - 1.0 / 144.0).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_route_agrees_with_quadrature() {
        let mc = BivariateCost::new(
            |x: f64, y: f64| x * x * y * y,
            IntegrationSpec::MonteCarlo {
                samples: 400_000,
                seed: 5,
            },
        )
        .unwrap();
        let v = residual_variance(&mc, &unif(), &unif()).unwrap();
        let want = (4.0f64 / 45.0).powi(2);
        assert!((v.value - want).abs() < 4.0 * v.stderr, "{v:?} vs {want}");
        let r = anova_residual(&mc, &unif(), &unif(), 0.8, 0.6).unwrap();
        let want = 0.64 * 0.36 - 0.64 / 3.0 - 0.36 / 3.0 + 1.0 / 9.0;
        assert!((r.value - want).abs() < 4.0 * r.stderr, "{r:?} vs {want}");
        let m = baseline_mean(&mc, &unif(), &unif()).unwrap();
        assert!((m.value - 1.0 / 9.0).abs() < 4.0 * m.stderr);
    }

    #[test]
    fn residual_is_centred_in_each_argument() {
        let cost = BivariateCost::quadrature(|x: f64, y: f64| (x * y).sin() + x * x * y);
        let e = MarginalDistribution::lognormal(0.0, 0.04).unwrap();
        let gz = GaussLegendre::new(80, -9.0, 9.0);
        for &x in &[0.1, 0.6] {
            let s: f64 = gz
                .nodes
                .iter()
                .zip(&gz.weights)
                .map(|(&z, &w)| {
                    let y = e.quantile_of_normal_score(z);
                    w * norm_pdf(z) * anova_residual(&cost, &unif(), &e, x, y).unwrap().value
                })
                .sum();
            assert!(s.abs() < 1e-8, "E[r|X={x}] = {s}");
        }
        let gu = GaussLegendre::new(32, 0.0, 1.0);
        for &y in &[0.5, 1.7] {
            let s: f64 = gu
                .nodes
                .iter()
                .zip(&gu.weights)
                .map(|(&x, &w)| w * anova_residual(&cost, &unif(), &e, x, y).unwrap().value)
                .sum();
            assert!(s.abs() < 1e-8, "E[r|Y={y}] = {s}");
        }
    }

    #[test]
    fn proposition1_examples() {
        let wc = BivariateWorstCase::new(1.0 / 9.0, (4.0f64 / 45.0).powi(2), (unif(), unif())).unwrap();
        assert_eq!(proposition1_bounds(&wc, 0.0).unwrap(), (1.0 / 9.0, 1.0 / 9.0));
        let (lo, hi) = proposition1_bounds(&wc, 0.04).unwrap();
        assert!((lo - 0.093_333_333_333_333_33).abs() < 1e-12);
        assert!((hi - 0.128_888_888_888_888_9).abs() < 1e-12);
        let (_, hi2) = proposition1_bounds(&wc, 0.08).unwrap();
        assert!(((hi2 - 1.0 / 9.0) / (hi - 1.0 / 9.0) - 2f64.sqrt()).abs() < 1e-12);
        assert!(proposition1_bounds(&wc, -1.0).is_err());
    }

    #[test]
    fn worst_case_density_closed_form_and_feasibility() {
        let cost = x2y2();
        let d = worst_case_density(&cost, &unif(), &unif(), 0.04, Direction::Upper).unwrap();
        for &(x, y) in &[(0.0, 1.0), (0.4, 0.7), (1.0, 1.0)] {
            let want = 1.0 + 45.0 * 0.2 / 4.0 * (x * x * y * y - x * x / 3.0 - y * y / 3.0 + 1.0 / 9.0);
            assert!((d.relative_density(x, y) - want).abs() < 1e-10);
        }
        assert!((d.max_feasible_eta() - 0.16).abs() < 1e-9);
        let lower = worst_case_density(&cost, &unif(), &unif(), 0.04, Direction::Lower).unwrap();
        assert!((lower.max_feasible_eta() - 0.04).abs() < 1e-9);
        match worst_case_density(&cost, &unif(), &unif(), 0.05, Direction::Lower) {
            Err(Error::BudgetTooLarge { max_eta }) => assert!((max_eta - 0.04).abs() < 1e-9),
            Err(e) => panic!("unexpected error {e}"),
            Ok(_) => panic!("expected budget error"),
        }
    }

    #[test]
    fn gaussian_copula_sampler_is_independent_at_zero() {
        let c = CopulaSpec::gaussian(0.0).unwrap();
        let mut rng = RngStream::new(3).rng();
        let mut counts = [[0u32; 10]; 10];
        for _ in 0..100_000 {
            let (u, v) = copula_sample(&c, &mut rng);
            counts[(u * 10.0) as usize][(v * 10.0) as usize] += 1;
        }
        let exp = 1000.0;
        let stat: f64 = counts.iter().flatten().map(|&o| (o as f64 - exp).powi(2) / exp).sum();
        // 99.9% point of χ²(81)
        assert!(stat < 124.84, "χ² = {stat}");
    }

    #[test]
    fn copula_samplers_have_uniform_margins_and_population_tau() {
        let cases = [
            CopulaSpec::gaussian(0.5).unwrap(),
            CopulaSpec::clayton(2.0).unwrap(),
            CopulaSpec::gumbel(1.5).unwrap(),
            CopulaSpec::amh(0.7).unwrap(),
            CopulaSpec::amh(-0.9).unwrap(),
        ];
        let crit = ks_critical(0.001, 100_000);
        for (k, c) in cases.iter().enumerate() {
            let mut rng = RngStream::new(11).child(k as u64).rng();
            let (us, vs): (Vec<f64>, Vec<f64>) = (0..100_000).map(|_| copula_sample(c, &mut rng)).unzip();
            assert!(ks_statistic(&us, |x| x) < crit, "{c:?} u margin");
            assert!(ks_statistic(&vs, |x| x) < crit, "{c:?} v margin");
            let tau = kendall_tau(&us, &vs);
            assert!(
                (tau - c.kendall_tau()).abs() < 0.01,
                "{c:?}: tau {tau} vs {}",
                c.kendall_tau()
            );
        }
    }

    #[test]
    fn extreme_clayton_is_nearly_comonotone() {
        let c = CopulaSpec::clayton(50.0).unwrap();
        let cost = x2y2();
        let est = expected_h_under_copula(&cost, &unif(), &unif(), &c, 100_000, &RngStream::new(8)).unwrap();
        assert!((est.value - 0.2).abs() < 0.01, "{est:?}");
    }

    #[test]
    fn copula_expectations_bracket_independence() {
        let cost = x2y2();
        let s = RngStream::new(21);
        let zero = expected_h_under_copula(
            &cost,
            &unif(),
            &unif(),
            &CopulaSpec::gaussian(0.0).unwrap(),
            100_000,
            &s,
        )
        .unwrap();
        assert!((zero.value - 1.0 / 9.0).abs() < 3.0 * zero.stderr);
        let pos = expected_h_under_copula(
            &cost,
            &unif(),
            &unif(),
            &CopulaSpec::gaussian(0.2).unwrap(),
            100_000,
            &s,
        )
        .unwrap();
        assert!(pos.value - 3.0 * pos.stderr > 1.0 / 9.0, "{pos:?}");
        assert!(
            expected_h_under_copula(&cost, &unif(), &unif(), &CopulaSpec::gaussian(0.2).unwrap(), 999, &s).is_err()
        );
    }

    #[test]
    fn copula_expectation_ignores_thread_count() {
        let cost = x2y2();
        let c = CopulaSpec::gumbel(1.3).unwrap();
        let s = RngStream::new(4);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| expected_h_under_copula(&cost, &unif(), &unif(), &c, 50_000, &s).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }
}
