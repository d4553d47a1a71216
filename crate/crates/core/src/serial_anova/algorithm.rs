use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cost::{pinned_window_sum, TrajectoryCost};
use crate::error::{Error, Result};
use crate::stochastics::{RngStream, Sampler};

/// Outer (`k`) and inner (`n`) sample sizes of the nested ANOVA.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnovaConfig {
    k: usize,
    n: usize,
}

impl AnovaConfig {
    pub fn new(k: usize, n: usize) -> Result<Self> {
        if k < 2 || n < 2 {
            return Err(Error::config(format!("need K >= 2 and n >= 2, got K = {k}, n = {n}")));
        }
        Ok(AnovaConfig { k, n })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lag {
    /// Pairs `(X_{t−1}, X_t)`: unbiased for `Var₀(R)`.
    One,
    /// Triples `(X_{t−2}, X_{t−1}, X_t)` with the middle held fixed:
    /// unbiased for `Var₀(S)`.
    Two,
}

/// One unbiased (possibly negative) variance sample `(s_I² − s_ε²)/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnovaEstimate {
    pub value: f64,
    pub config: AnovaConfig,
    pub lag: Lag,
    pub s_i2: f64,
    pub s_e2: f64,
}

/// Algorithm 1 for `Var₀(R(X, Y))`.
///
/// Stream layout: `stream.child(0)` draws `x_1..x_K` then `y_1..y_K`; inner
/// copy `l` of cell `(i, j)` uses `stream.child(1).child(i).child(j).child(l)`.
pub fn algorithm1_sample<C, M>(cost: &C, marginal: &M, config: AnovaConfig, stream: &RngStream) -> Result<AnovaEstimate>
where
    C: TrajectoryCost + ?Sized,
    M: Sampler + ?Sized,
{
    if cost.horizon() < 2 {
        return Err(Error::config("Algorithm 1 needs a horizon of at least 2"));
    }
    let k = config.k;
    let mut rng = stream.child(0).rng();
    let xs: Vec<f64> = (0..k).map(|_| marginal.draw(&mut rng)).collect();
    let ys: Vec<f64> = (0..k).map(|_| marginal.draw(&mut rng)).collect();
    let cells = inner_cells(cost, marginal, config, stream, |i, j| vec![xs[i], ys[j]]);
    Ok(finish(&cells, config, Lag::One))
}

/// Algorithm 2 for `Var₀(S(X, Y, Z))`.
///
/// Stream layout: `stream.child(0)` draws `y`, then `x_1..x_K`, then
/// `z_1..z_K`; inner copies as in [`algorithm1_sample`].
pub fn algorithm2_sample<C, M>(cost: &C, marginal: &M, config: AnovaConfig, stream: &RngStream) -> Result<AnovaEstimate>
where
    C: TrajectoryCost + ?Sized,
    M: Sampler + ?Sized,
{
    if cost.horizon() < 3 {
        return Err(Error::config("Algorithm 2 needs a horizon of at least 3"));
    }
    let k = config.k;
    let mut rng = stream.child(0).rng();
    let y = marginal.draw(&mut rng);
    let xs: Vec<f64> = (0..k).map(|_| marginal.draw(&mut rng)).collect();
    let zs: Vec<f64> = (0..k).map(|_| marginal.draw(&mut rng)).collect();
    let cells = inner_cells(cost, marginal, config, stream, |i, j| vec![xs[i], y, zs[j]]);
    Ok(finish(&cells, config, Lag::Two))
}

/// Runs `reps` independent replications; replication `r` uses `stream.child(r)`.
pub fn replicate<C, M>(
    lag: Lag,
    cost: &C,
    marginal: &M,
    config: AnovaConfig,
    reps: usize,
    stream: &RngStream,
) -> Result<Vec<AnovaEstimate>>
where
    C: TrajectoryCost + ?Sized,
    M: Sampler + ?Sized,
{
    (0..reps)
        .map(|r| {
            let s = stream.child(r as u64);
            match lag {
                Lag::One => algorithm1_sample(cost, marginal, config, &s),
                Lag::Two => algorithm2_sample(cost, marginal, config, &s),
            }
        })
        .collect()
}

/// Per-cell `(Z̄_ij, Σ_l (Z_ijl − Z̄_ij)²)` in row-major order.
fn inner_cells<C, M>(
    cost: &C,
    marginal: &M,
    config: AnovaConfig,
    stream: &RngStream,
    pins: impl Fn(usize, usize) -> Vec<f64> + Sync,
) -> Vec<(f64, f64)>
where
    C: TrajectoryCost + ?Sized,
    M: Sampler + ?Sized,
{
    let (k, n) = (config.k, config.n);
    let inner = stream.child(1);
    (0..k * k)
        .into_par_iter()
        .map(|cell| {
            let (i, j) = (cell / k, cell % k);
            let values = pins(i, j);
            let base = inner.child(i as u64).child(j as u64);
            let mut path = vec![0.0; cost.horizon()];
            let z: Vec<f64> = (0..n)
                .map(|l| pinned_window_sum(cost, marginal, &values, &base.child(l as u64), &mut path))
                .collect();
            let mean = z.iter().sum::<f64>() / n as f64;
            let ss = z.iter().map(|v| (v - mean) * (v - mean)).sum();
            (mean, ss)
        })
        .collect()
}

fn finish(cells: &[(f64, f64)], config: AnovaConfig, lag: Lag) -> AnovaEstimate {
    let (k, n) = (config.k, config.n);
    let means: Vec<f64> = cells.iter().map(|c| c.0).collect();
    let interaction = crate::bivariate::interaction_sum_of_squares(&means, k);
    let within: f64 = cells.iter().map(|c| c.1).sum();
    let kf = k as f64;
    let nf = n as f64;
    let s_i2 = nf / ((kf - 1.0) * (kf - 1.0)) * interaction;
    let s_e2 = within / (kf * kf * (nf - 1.0));
    AnovaEstimate {
        value: (s_i2 - s_e2) / nf,
        config,
        lag,
        s_i2,
        s_e2,
    }
}
