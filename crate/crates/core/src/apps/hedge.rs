use serde::Serialize;

use crate::error::{Error, Result};
use crate::serial_anova::TrajectoryCost;
use crate::stochastics::{norm_cdf, MarginalDistribution, StreamRng};

/// Discrete delta hedging of a European call on a GBM underlying.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HedgeConfig {
    pub maturity: f64,
    pub dt: f64,
    pub x0: f64,
    pub strike: f64,
    pub mu: f64,
    pub sigma: f64,
    pub rate: f64,
    #[serde(skip)]
    steps: usize,
}

impl HedgeConfig {
    pub fn new(maturity: f64, dt: f64, x0: f64, strike: f64, mu: f64, sigma: f64, rate: f64) -> Result<Self> {
        let finite = [maturity, dt, x0, strike, mu, sigma, rate]
            .iter()
            .all(|v| v.is_finite());
        if !finite || maturity <= 0.0 || dt <= 0.0 || sigma <= 0.0 || x0 <= 0.0 || strike <= 0.0 {
            return Err(Error::config(
                "hedge parameters must be finite with positive T, dt, sigma, X0, K",
            ));
        }
        let ratio = maturity / dt;
        let steps = ratio.round();
        if steps < 1.0 || (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::config(format!("dt = {dt} does not divide T = {maturity}")));
        }
        Ok(HedgeConfig {
            maturity,
            dt,
            x0,
            strike,
            mu,
            sigma,
            rate,
            steps: steps as usize,
        })
    }

    /// T = 1, dt = 0.01, X0 = K = 100, mu = 0.1, sigma = 0.2, r = 0.05.
    pub fn standard() -> Self {
        Self::new(1.0, 0.01, 100.0, 100.0, 0.1, 0.2, 0.05).expect("valid defaults")
    }

    pub fn with_dt(self, dt: f64) -> Result<Self> {
        Self::new(self.maturity, dt, self.x0, self.strike, self.mu, self.sigma, self.rate)
    }

    /// Number of rebalancing periods `T/dt`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Law of one GBM log-increment over `dt`.
    pub fn log_increment(&self) -> MarginalDistribution {
        let m = (self.mu - 0.5 * self.sigma * self.sigma) * self.dt;
        MarginalDistribution::normal(m, self.sigma * self.sigma * self.dt).expect("validated config")
    }
}

fn d1(s: f64, k: f64, r: f64, sigma: f64, tau: f64) -> f64 {
    ((s / k).ln() + (r + 0.5 * sigma * sigma) * tau) / (sigma * tau.sqrt())
}

/// Black-Scholes call value; `(S − K)⁺` at `tau = 0`.
pub fn bs_price(s: f64, k: f64, r: f64, sigma: f64, tau: f64) -> f64 {
    if tau <= 0.0 {
        return (s - k).max(0.0);
    }
    let a = d1(s, k, r, sigma, tau);
    let b = a - sigma * tau.sqrt();
    s * norm_cdf(a) - k * (-r * tau).exp() * norm_cdf(b)
}

/// Call delta `Φ(d₁)`. At `tau = 0`: 1 above the strike, 0 below, ½ at it.
pub fn bs_delta(s: f64, k: f64, r: f64, sigma: f64, tau: f64) -> f64 {
    if tau <= 0.0 {
        return if s > k {
            1.0
        } else if s < k {
            0.0
        } else {
            0.5
        };
    }
    norm_cdf(d1(s, k, r, sigma, tau))
}

/// `H_e = (X_T − K)⁺ − C(T) − S(T)` for prices on the rebalancing grid.
pub fn hedging_error(path: &[f64], config: &HedgeConfig) -> Result<f64> {
    if path.len() != config.steps + 1 {
        return Err(Error::LengthMismatch {
            expected: config.steps + 1,
            found: path.len(),
        });
    }
    if path.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::invalid("prices must be positive and finite"));
    }
    Ok(Schedule::new(config).run(path.iter().map(|&x| (x, x.ln()))))
}

/// Per-date constants of the delta: `d₁ = (ln x − shift) · scale`.
#[derive(Debug, Clone)]
struct Schedule {
    strike: f64,
    growth: f64,
    premium: f64,
    dates: Vec<(f64, f64)>,
}

impl Schedule {
    fn new(config: &HedgeConfig) -> Self {
        let HedgeConfig {
            maturity,
            dt,
            strike,
            sigma,
            rate,
            ..
        } = *config;
        let dates = (0..=config.steps)
            .map(|k| {
                let tau = if k == config.steps {
                    0.0
                } else {
                    maturity - k as f64 * dt
                };
                if tau > 0.0 {
                    (
                        strike.ln() - (rate + 0.5 * sigma * sigma) * tau,
                        1.0 / (sigma * tau.sqrt()),
                    )
                } else {
                    (strike.ln(), f64::INFINITY)
                }
            })
            .collect();
        Schedule {
            strike,
            growth: (rate * dt).exp(),
            premium: bs_price(config.x0, strike, rate, sigma, maturity),
            dates,
        }
    }

    #[inline]
    fn delta(&self, k: usize, x: f64, log_x: f64) -> f64 {
        let (shift, scale) = self.dates[k];
        if scale.is_infinite() {
            return bs_delta(x, self.strike, 0.0, 1.0, 0.0);
        }
        // Φ is 0 or 1 to double precision beyond this
        let d = (log_x - shift) * scale;
        if d > 8.5 {
            1.0
        } else if d < -8.5 {
            0.0
        } else {
            norm_cdf(d)
        }
    }

    fn run(&self, prices: impl Iterator<Item = (f64, f64)>) -> f64 {
        let mut cash = 0.0;
        let mut delta = 0.0;
        let mut last = 0.0;
        for (k, (x, log_x)) in prices.enumerate() {
            let d = self.delta(k, x, log_x);
            cash = if k == 0 {
                self.premium - x * d
            } else {
                self.growth * cash - x * (d - delta)
            };
            delta = d;
            last = x;
        }
        (last - self.strike).max(0.0) - cash - last * delta
    }
}

/// `|H_e|` as a function of the `T/dt` log-increments of the underlying.
#[derive(Debug, Clone)]
pub struct HedgeCost {
    config: HedgeConfig,
    schedule: Schedule,
}

impl HedgeCost {
    pub fn new(config: HedgeConfig) -> Self {
        HedgeCost {
            config,
            schedule: Schedule::new(&config),
        }
    }

    pub fn config(&self) -> &HedgeConfig {
        &self.config
    }

    /// Signed `H_e` for the given log-increments.
    pub fn signed_error(&self, increments: &[f64]) -> f64 {
        let l0 = self.config.x0.ln();
        let prices = std::iter::once((self.config.x0, l0)).chain(increments.iter().scan(l0, |l, dx| {
            *l += dx;
            Some((l.exp(), *l))
        }));
        self.schedule.run(prices)
    }
}

impl TrajectoryCost for HedgeCost {
    fn horizon(&self) -> usize {
        self.config.steps
    }

    fn evaluate(&self, path: &[f64], _aux: &mut StreamRng) -> f64 {
        self.signed_error(path).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::serial_anova::estimate_baseline;
    use crate::stats::Moments;
    use crate::stochastics::{RngStream, Sampler};

    #[test]
    fn black_scholes_reference_values() {
        // independent closed form: d1 = 0.35, d2 = 0.15
        assert!((bs_price(100.0, 100.0, 0.05, 0.2, 1.0) - 10.450583572185565).abs() < 1e-6);
        assert!((bs_delta(100.0, 100.0, 0.05, 0.2, 1.0) - 0.6368306511756191).abs() < 1e-9);
    }

    #[test]
    fn limits() {
        let deep = bs_price(1e4, 100.0, 0.05, 0.2, 1.0);
        assert!((deep - (1e4 - 100.0 * (-0.05f64).exp())).abs() < 1e-6);
        assert!((bs_delta(1e4, 100.0, 0.05, 0.2, 1.0) - 1.0).abs() < 1e-9);
        assert!(bs_delta(1.0, 100.0, 0.05, 0.2, 1.0) < 1e-9);
        assert_eq!(bs_price(120.0, 100.0, 0.05, 0.2, 0.0), 20.0);
        assert_eq!(bs_delta(100.0, 100.0, 0.05, 0.2, 0.0), 0.5);
        assert_eq!(bs_delta(101.0, 100.0, 0.05, 0.2, 0.0), 1.0);
        assert_eq!(bs_delta(99.0, 100.0, 0.05, 0.2, 0.0), 0.0);
    }

    #[test]
    fn price_monotone_in_spot() {
        let mut prev = 0.0;
        for i in 1..400 {
            let p = bs_price(i as f64, 100.0, 0.05, 0.2, 0.5);
            assert!(p >= prev);
            prev = p;
        }
    }

    #[test]
    fn config_validation() {
        assert!(HedgeConfig::standard().with_dt(0.03).is_err());
        assert_eq!(HedgeConfig::standard().with_dt(0.005).unwrap().steps(), 200);
        assert!(HedgeConfig::new(1.0, 0.01, 100.0, 100.0, 0.1, 0.0, 0.05).is_err());
        assert!(HedgeConfig::new(1.0, -0.01, 100.0, 100.0, 0.1, 0.2, 0.05).is_err());
    }

    #[test]
    fn length_and_constant_path() {
        let cfg = HedgeConfig::standard();
        assert!(hedging_error(&[100.0; 50], &cfg).is_err());
        let he = hedging_error(&vec![100.0; 101], &cfg).unwrap();
        assert!(he.is_finite());
    }

    #[test]
    fn cost_agrees_with_price_path_version() {
        let cfg = HedgeConfig::standard();
        let cost = HedgeCost::new(cfg);
        let m = cfg.log_increment();
        let mut rng = RngStream::new(8).rng();
        let inc: Vec<f64> = (0..100).map(|_| m.draw(&mut rng)).collect();
        let mut prices = vec![cfg.x0];
        for d in &inc {
            prices.push(prices.last().unwrap() * d.exp());
        }
        let a = hedging_error(&prices, &cfg).unwrap();
        assert!((a - cost.signed_error(&inc)).abs() < 1e-9);
    }

    #[test]
    fn finer_rebalancing_reduces_error() {
        // paired: the coarse path is the fine path sampled every other step
        let fine = HedgeConfig::standard().with_dt(0.005).unwrap();
        let coarse = HedgeConfig::standard();
        let m = fine.log_increment();
        let root = RngStream::new(21);
        let mut diff = Moments::default();
        for i in 0..10_000 {
            let mut rng = root.child(i).rng();
            let mut p = vec![100.0];
            for _ in 0..200 {
                p.push(p.last().unwrap() * m.draw(&mut rng).exp());
            }
            let pc: Vec<f64> = p.iter().step_by(2).copied().collect();
            let ef = hedging_error(&p, &fine).unwrap().abs();
            let ec = hedging_error(&pc, &coarse).unwrap().abs();
            diff.push(ec - ef);
        }
        assert!(diff.mean > 3.0 * diff.stderr(), "{} ± {}", diff.mean, diff.stderr());
    }

    #[test]
    fn baseline_abs_error_is_modest() {
        // about 0.5 for the recursion as written
        let cfg = HedgeConfig::standard();
        let e = estimate_baseline(&HedgeCost::new(cfg), &cfg.log_increment(), 20_000, &RngStream::new(3)).unwrap();
        assert!(e.value > 0.3 && e.value < 0.8, "{e:?}");
    }
}
