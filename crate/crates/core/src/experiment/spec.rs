use serde::Serialize;

use crate::apps::{HedgeConfig, QueueConfig, QueueMeasure};
use crate::divergence::{CopulaFamily, CopulaSpec};
use crate::error::{Error, Result};
use crate::serial_anova::AnovaConfig;

use super::output::OutputFormat;

/// Inclusive arithmetic grid `start, start + step, …, stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EtaGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl EtaGrid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err(Error::config("eta grid bounds must be finite"));
        }
        if start < 0.0 || stop < start || step <= 0.0 {
            return Err(Error::config(format!(
                "eta grid needs 0 <= start <= stop and step > 0, got {start}:{stop}:{step}"
            )));
        }
        if (stop - start) / step > 1e6 {
            return Err(Error::config("eta grid has more than a million points"));
        }
        Ok(EtaGrid { start, stop, step })
    }

    /// Parses `a:b:step`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::config(format!("eta grid must look like a:b:step, got {s:?}")));
        }
        let num = |p: &str| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::config(format!("bad number {p:?} in eta grid")))
        };
        Self::new(num(parts[0])?, num(parts[1])?, num(parts[2])?)
    }

    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| (self.start + i as f64 * self.step).min(self.stop))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BivariateCostKind {
    /// `x² y²` on the unit square.
    X2y2,
    /// `x y` on the unit square.
    Xy,
}

impl BivariateCostKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "x2y2" => Ok(BivariateCostKind::X2y2),
            "xy" => Ok(BivariateCostKind::Xy),
            other => Err(Error::config(format!("unknown bivariate cost {other:?}"))),
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            BivariateCostKind::X2y2 => x * x * y * y,
            BivariateCostKind::Xy => x * y,
        }
    }
}

/// Five parameter values per family, spanning weak to strong dependence.
pub fn default_copulas(families: &[CopulaFamily]) -> Vec<CopulaSpec> {
    families
        .iter()
        .flat_map(|&f| {
            let params: &[f64] = match f {
                CopulaFamily::Gaussian => &[-0.6, -0.3, 0.2, 0.4, 0.6],
                CopulaFamily::Gumbel => &[1.2, 1.5, 2.0, 3.0, 5.0],
                CopulaFamily::Clayton => &[0.5, 1.0, 2.0, 4.0, 8.0],
                CopulaFamily::Amh => &[-1.0, -0.5, 0.3, 0.6, 0.9],
            };
            params
                .iter()
                .map(move |&p| CopulaSpec::new(f, p).expect("default copula parameters are valid"))
        })
        .collect()
}

pub const ALL_FAMILIES: [CopulaFamily; 4] = [
    CopulaFamily::Gaussian,
    CopulaFamily::Gumbel,
    CopulaFamily::Clayton,
    CopulaFamily::Amh,
];

/// The system whose serial-dependence coefficients are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum SerialModel {
    Queue(QueueConfig),
    Hedge(HedgeConfig),
    /// `h = X_1 ⋯ X_T` on i.i.d. Bernoulli(q) inputs.
    Toy {
        q: f64,
        horizon: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "study", rename_all = "snake_case")]
pub enum QueueStudy {
    /// Ξ₁ of the tail probability over customer indices.
    HorizonSweep { values: Vec<usize> },
    /// Ξ₁ of the tail probability over thresholds.
    ThresholdSweep { values: Vec<f64> },
    /// Mean waiting time under embedded AR(1) / Markov-chain arrivals against
    /// the first-order band.
    Dependence {
        ar1_beta1: Vec<f64>,
        mc_a: Vec<f64>,
        mc_theta: Vec<f64>,
        pairs: u64,
        bins: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "study", rename_all = "snake_case")]
pub enum HedgeStudy {
    /// Baseline `E|H_e|`, Ξ₁ and `√Var₀(S)`.
    Baseline,
    /// AR(1) log-increments against the first-order band.
    Ar1 { beta1: Vec<f64> },
    /// AR(2) log-increments against the two-lag band: `β₂` varied at
    /// `β₁ = fixed`, then `β₁` varied at `β₂ = fixed`.
    Ar2 { fixed: f64, grid: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExperimentKind {
    BivariateBounds {
        cost: BivariateCostKind,
        copulas: Vec<CopulaSpec>,
        grid_size: usize,
    },
    CopulaCompare {
        cost: BivariateCostKind,
        copulas: Vec<CopulaSpec>,
        grid_size: usize,
    },
    SerialXi1 {
        #[serde(flatten)]
        model: SerialModel,
    },
    Serial2dep {
        #[serde(flatten)]
        model: SerialModel,
    },
    QueueExperiment {
        study: QueueStudy,
        queue: QueueConfig,
    },
    HedgeExperiment {
        study: HedgeStudy,
        hedge: HedgeConfig,
    },
    OracleCheck {
        q: f64,
        horizon1: usize,
        horizon2: usize,
        /// Outer sizes compared for estimator variance.
        scaling_outer: Vec<usize>,
    },
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::BivariateBounds { .. } => "bivariate-bounds",
            ExperimentKind::CopulaCompare { .. } => "copula-compare",
            ExperimentKind::SerialXi1 { .. } => "serial-xi1",
            ExperimentKind::Serial2dep { .. } => "serial-2dep",
            ExperimentKind::QueueExperiment { .. } => "queue-experiment",
            ExperimentKind::HedgeExperiment { .. } => "hedge-experiment",
            ExperimentKind::OracleCheck { .. } => "oracle-check",
        }
    }
}

/// Everything that determines the output of one run. The output location and
/// thread count are deliberately not part of it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    #[serde(flatten)]
    pub kind: ExperimentKind,
    pub seed: u64,
    pub anova: AnovaConfig,
    pub reps: usize,
    pub alpha: f64,
    pub eta_grid: EtaGrid,
    /// Plain Monte Carlo sample size (baselines, copula means, comparisons).
    pub samples: usize,
    pub paper_scale: bool,
    #[serde(skip)]
    pub format: OutputFormat,
}

impl ExperimentSpec {
    /// Checks every field before any computation starts.
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.reps < 2 {
            return Err(Error::config("need at least 2 replications"));
        }
        AnovaConfig::new(self.anova.k(), self.anova.n())?;
        EtaGrid::new(self.eta_grid.start, self.eta_grid.stop, self.eta_grid.step)?;
        match &self.kind {
            ExperimentKind::BivariateBounds { copulas, grid_size, .. }
            | ExperimentKind::CopulaCompare { copulas, grid_size, .. } => {
                if *grid_size < 64 {
                    return Err(Error::config("copula grid size must be at least 64"));
                }
                if !copulas.is_empty() && self.samples < 1000 {
                    return Err(Error::config("copula means need at least 1000 samples"));
                }
            }
            ExperimentKind::SerialXi1 { model } | ExperimentKind::Serial2dep { model } => {
                let min = if matches!(self.kind, ExperimentKind::Serial2dep { .. }) {
                    3
                } else {
                    2
                };
                if model_horizon(model) < min {
                    return Err(Error::config(format!(
                        "{} needs a horizon of at least {min}",
                        self.kind.name()
                    )));
                }
                if let SerialModel::Toy { q, .. } = model {
                    if !(*q > 0.0 && *q < 1.0) {
                        return Err(Error::config("toy success probability must lie in (0, 1)"));
                    }
                }
                self.check_samples()?;
            }
            ExperimentKind::QueueExperiment { study, queue } => {
                match study {
                    QueueStudy::HorizonSweep { values } => {
                        if values.is_empty() || values.iter().any(|&t| t < 2) {
                            return Err(Error::config("customer indices must be at least 2"));
                        }
                    }
                    QueueStudy::ThresholdSweep { values } => {
                        if values.is_empty() || values.iter().any(|b| !b.is_finite()) {
                            return Err(Error::config("thresholds must be finite"));
                        }
                    }
                    QueueStudy::Dependence {
                        ar1_beta1,
                        mc_a,
                        mc_theta,
                        pairs,
                        bins,
                    } => {
                        if ar1_beta1.iter().any(|b| !(b.abs() < 1.0)) {
                            return Err(Error::config("AR(1) coefficients must satisfy |beta1| < 1"));
                        }
                        for &a in mc_a {
                            for &t in mc_theta {
                                crate::processes::EmbeddedMcSpec::new(a, t, queue.interarrival())
                                    .map_err(|e| Error::config(e.to_string()))?;
                            }
                        }
                        if *bins < 2 || bins % 2 != 0 || *pairs < 1000 {
                            return Err(Error::config(
                                "histogram needs an even bin count and at least 1000 pairs",
                            ));
                        }
                    }
                }
                self.check_samples()?;
            }
            ExperimentKind::HedgeExperiment { study, hedge } => {
                let check = |b1: f64, b2: f64| {
                    crate::processes::Ar2LogIncrementSpec::for_gbm(b1, b2, hedge.mu, hedge.sigma, hedge.dt)
                        .map(|_| ())
                        .map_err(|e| Error::config(e.to_string()))
                };
                match study {
                    HedgeStudy::Baseline => {}
                    HedgeStudy::Ar1 { beta1 } => beta1.iter().try_for_each(|&b| check(b, 0.0))?,
                    HedgeStudy::Ar2 { fixed, grid } => grid
                        .iter()
                        .try_for_each(|&b| check(*fixed, b).and_then(|_| check(b, *fixed)))?,
                }
                if hedge.steps() < 3 {
                    return Err(Error::config("hedging needs at least 3 rebalancing periods"));
                }
                self.check_samples()?;
            }
            ExperimentKind::OracleCheck {
                q,
                horizon1,
                horizon2,
                scaling_outer,
            } => {
                if !(*q > 0.0 && *q < 1.0) {
                    return Err(Error::config("toy success probability must lie in (0, 1)"));
                }
                if *horizon1 < 2 || *horizon2 < 3 || *horizon1 > 20 || *horizon2 > 20 {
                    return Err(Error::config("oracle horizons must be in 2..=20 and 3..=20"));
                }
                if scaling_outer.iter().any(|&k| k < 2) {
                    return Err(Error::config("outer sizes must be at least 2"));
                }
            }
        }
        Ok(())
    }

    fn check_samples(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(Error::config("need at least 2 Monte Carlo samples"));
        }
        Ok(())
    }
}

pub(crate) fn model_horizon(model: &SerialModel) -> usize {
    match model {
        SerialModel::Queue(q) => q.customer(),
        SerialModel::Hedge(h) => h.steps(),
        SerialModel::Toy { horizon, .. } => *horizon,
    }
}

/// The queue defaults with the mean-waiting measure.
pub fn mean_waiting_queue() -> QueueConfig {
    QueueConfig::standard()
        .with_measure(QueueMeasure::MeanWaiting)
        .expect("valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_grid_parsing() {
        let g = EtaGrid::parse("0:0.1:0.02").unwrap();
        assert_eq!(g.values().len(), 6);
        assert_eq!(*g.values().last().unwrap(), 0.1);
        assert!(EtaGrid::parse("0:0.1").is_err());
        assert!(EtaGrid::parse("0.2:0.1:0.01").is_err());
        assert!(EtaGrid::parse("0:1:0").is_err());
        assert!(EtaGrid::parse("a:1:0.1").is_err());
        assert_eq!(EtaGrid::parse("0.05:0.05:1").unwrap().values(), vec![0.05]);
    }

    #[test]
    fn default_copula_grid_has_five_per_family() {
        assert_eq!(default_copulas(&ALL_FAMILIES).len(), 20);
    }
}
