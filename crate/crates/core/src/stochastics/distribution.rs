use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use super::rng::StreamRng;
use super::special::{norm_cdf, norm_pdf, norm_quantile_unchecked, norm_sf};
use crate::error::{Error, Result};

/// Anything that can produce i.i.d. draws of a baseline marginal.
pub trait Sampler: Sync {
    fn draw(&self, rng: &mut StreamRng) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Uniform {
        a: f64,
        b: f64,
    },
    Exponential {
        rate: f64,
    },
    Normal {
        mean: f64,
        variance: f64,
    },
    /// `exp(N(mu, sigma2))`.
    Lognormal {
        mu: f64,
        sigma2: f64,
    },
}

/// A validated univariate law. Parameters are checked once, at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct MarginalDistribution {
    family: Family,
}

impl MarginalDistribution {
    pub fn new(family: Family) -> Result<Self> {
        let ok = match family {
            Family::Uniform { a, b } => a.is_finite() && b.is_finite() && a < b,
            Family::Exponential { rate } => rate.is_finite() && rate > 0.0,
            Family::Normal { mean, variance } => mean.is_finite() && variance.is_finite() && variance > 0.0,
            Family::Lognormal { mu, sigma2 } => mu.is_finite() && sigma2.is_finite() && sigma2 > 0.0,
        };
        if ok {
            Ok(MarginalDistribution { family })
        } else {
            Err(Error::invalid(format!("invalid marginal parameters: {family:?}")))
        }
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        Self::new(Family::Uniform { a, b })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(Family::Exponential { rate })
    }

    pub fn normal(mean: f64, variance: f64) -> Result<Self> {
        Self::new(Family::Normal { mean, variance })
    }

    pub fn lognormal(mu: f64, sigma2: f64) -> Result<Self> {
        Self::new(Family::Lognormal { mu, sigma2 })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.family {
            Family::Uniform { a, b } => a + (b - a) * rng.gen::<f64>(),
            Family::Exponential { rate } => {
                let e: f64 = Exp1.sample(rng);
                e / rate
            }
            Family::Normal { mean, variance } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + variance.sqrt() * z
            }
            Family::Lognormal { mu, sigma2 } => {
                let z: f64 = StandardNormal.sample(rng);
                (mu + sigma2.sqrt() * z).exp()
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self.family {
            Family::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            Family::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Family::Normal { mean, variance } => norm_cdf((x - mean) / variance.sqrt()),
            Family::Lognormal { mu, sigma2 } => {
                if x <= 0.0 {
                    0.0
                } else {
                    norm_cdf((x.ln() - mu) / sigma2.sqrt())
                }
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self.family {
            Family::Uniform { a, b } => {
                if (a..=b).contains(&x) {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            Family::Exponential { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    rate * (-rate * x).exp()
                }
            }
            Family::Normal { mean, variance } => {
                let sd = variance.sqrt();
                norm_pdf((x - mean) / sd) / sd
            }
            Family::Lognormal { mu, sigma2 } => {
                if x <= 0.0 {
                    0.0
                } else {
                    let s = sigma2.sqrt();
                    norm_pdf((x.ln() - mu) / s) / (s * x)
                }
            }
        }
    }

    /// Inverse CDF; `u` must lie in (0, 1).
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!("quantile needs u in (0,1), got {u}")));
        }
        Ok(self.quantile_unchecked(u))
    }

    pub(crate) fn quantile_unchecked(&self, u: f64) -> f64 {
        match self.family {
            Family::Uniform { a, b } => a + (b - a) * u,
            Family::Exponential { rate } => -(-u).ln_1p() / rate,
            Family::Normal { mean, variance } => mean + variance.sqrt() * norm_quantile_unchecked(u),
            Family::Lognormal { mu, sigma2 } => (mu + sigma2.sqrt() * norm_quantile_unchecked(u)).exp(),
        }
    }

    /// `quantile(Φ(z))`, evaluated without forming `Φ(z)` where that would
    /// lose precision in the upper tail.
    pub fn quantile_of_normal_score(&self, z: f64) -> f64 {
        match self.family {
            Family::Uniform { a, b } => a + (b - a) * norm_cdf(z),
            Family::Exponential { rate } => -norm_sf(z).ln() / rate,
            Family::Normal { mean, variance } => mean + variance.sqrt() * z,
            Family::Lognormal { mu, sigma2 } => (mu + sigma2.sqrt() * z).exp(),
        }
    }

    pub fn mean(&self) -> f64 {
        match self.family {
            Family::Uniform { a, b } => 0.5 * (a + b),
            Family::Exponential { rate } => 1.0 / rate,
            Family::Normal { mean, .. } => mean,
            Family::Lognormal { mu, sigma2 } => (mu + 0.5 * sigma2).exp(),
        }
    }

    pub fn variance(&self) -> f64 {
        match self.family {
            Family::Uniform { a, b } => (b - a) * (b - a) / 12.0,
            Family::Exponential { rate } => 1.0 / (rate * rate),
            Family::Normal { variance, .. } => variance,
            Family::Lognormal { mu, sigma2 } => sigma2.exp_m1() * (2.0 * mu + sigma2).exp(),
        }
    }

    /// Closed support interval, possibly infinite.
    pub fn support(&self) -> (f64, f64) {
        match self.family {
            Family::Uniform { a, b } => (a, b),
            Family::Exponential { .. } | Family::Lognormal { .. } => (0.0, f64::INFINITY),
            Family::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }
}

impl<'de> Deserialize<'de> for MarginalDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let family = Family::deserialize(d)?;
        MarginalDistribution::new(family).map_err(serde::de::Error::custom)
    }
}

impl Sampler for MarginalDistribution {
    #[inline]
    fn draw(&self, rng: &mut StreamRng) -> f64 {
        self.sample(rng)
    }
}

/// A law on finitely many real values, used for exactly enumerable toys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinitePmf {
    values: Vec<f64>,
    probs: Vec<f64>,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl FinitePmf {
    pub fn new(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() != probs.len() {
            return Err(Error::invalid("finite pmf needs equally many values and probabilities"));
        }
        if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::invalid("finite pmf probabilities must be non-negative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("finite pmf sums to {total}, not 1")));
        }
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(FinitePmf {
            values,
            probs,
            cumulative,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        let k = self
            .cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.values.len() - 1);
        self.values[k]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().zip(&self.probs).map(|(v, p)| v * p).sum()
    }
}

impl Sampler for FinitePmf {
    #[inline]
    fn draw(&self, rng: &mut StreamRng) -> f64 {
        self.sample(rng)
    }
}
