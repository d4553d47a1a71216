use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::serial_anova::TrajectoryCost;
use crate::stochastics::{MarginalDistribution, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QueueMeasure {
    /// `1{W_T > threshold}`.
    TailProbability { threshold: f64 },
    /// `W_T`.
    MeanWaiting,
}

/// FCFS single-server queue observed at customer `customer`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QueueConfig {
    arrival_rate: f64,
    service_rate: f64,
    customer: usize,
    measure: QueueMeasure,
}

impl QueueConfig {
    pub fn new(arrival_rate: f64, service_rate: f64, customer: usize, measure: QueueMeasure) -> Result<Self> {
        if !(arrival_rate > 0.0 && service_rate > 0.0) || !arrival_rate.is_finite() || !service_rate.is_finite() {
            return Err(Error::config("queue rates must be positive and finite"));
        }
        if customer < 2 {
            return Err(Error::config("customer index must be at least 2"));
        }
        if let QueueMeasure::TailProbability { threshold } = measure {
            if !threshold.is_finite() {
                return Err(Error::config("tail threshold must be finite"));
            }
        }
        Ok(QueueConfig {
            arrival_rate,
            service_rate,
            customer,
            measure,
        })
    }

    /// Rates 0.8 and 1.0, customer 30, `P(W_30 > 2)`.
    pub fn standard() -> Self {
        QueueConfig {
            arrival_rate: 0.8,
            service_rate: 1.0,
            customer: 30,
            measure: QueueMeasure::TailProbability { threshold: 2.0 },
        }
    }

    pub fn with_customer(self, customer: usize) -> Result<Self> {
        Self::new(self.arrival_rate, self.service_rate, customer, self.measure)
    }

    pub fn with_measure(self, measure: QueueMeasure) -> Result<Self> {
        Self::new(self.arrival_rate, self.service_rate, self.customer, measure)
    }

    pub fn arrival_rate(&self) -> f64 {
        self.arrival_rate
    }

    pub fn service_rate(&self) -> f64 {
        self.service_rate
    }

    pub fn customer(&self) -> usize {
        self.customer
    }

    pub fn measure(&self) -> QueueMeasure {
        self.measure
    }

    /// Baseline law of the interarrival times.
    pub fn interarrival(&self) -> MarginalDistribution {
        MarginalDistribution::exponential(self.arrival_rate).expect("validated rate")
    }

    pub fn service(&self) -> MarginalDistribution {
        MarginalDistribution::exponential(self.service_rate).expect("validated rate")
    }
}

/// `W_1 = 0`, `W_t = max(W_{t−1} + S_{t−1} − U_t, 0)`.
pub fn lindley_waiting_times(interarrivals: &[f64], services: &[f64]) -> Result<Vec<f64>> {
    if interarrivals.len() != services.len() {
        return Err(Error::LengthMismatch {
            expected: interarrivals.len(),
            found: services.len(),
        });
    }
    if interarrivals.is_empty() {
        return Err(Error::invalid("need at least one customer"));
    }
    let mut w = Vec::with_capacity(interarrivals.len());
    w.push(0.0);
    for t in 1..interarrivals.len() {
        let next: f64 = w[t - 1] + services[t - 1] - interarrivals[t];
        w.push(next.max(0.0));
    }
    Ok(w)
}

/// The queue measure as a function of the interarrival sequence `U_1..U_T`.
/// Service times come from the auxiliary stream, so they are identical for
/// any two evaluations that share it, whatever is pinned.
#[derive(Debug, Clone, Copy)]
pub struct QueueCost {
    config: QueueConfig,
    service: MarginalDistribution,
}

pub fn queue_cost(config: QueueConfig) -> QueueCost {
    QueueCost {
        config,
        service: config.service(),
    }
}

impl QueueCost {
    pub fn config(&self) -> &QueueConfig {
        &self.config
    }
}

impl TrajectoryCost for QueueCost {
    fn horizon(&self) -> usize {
        self.config.customer
    }

    fn evaluate(&self, path: &[f64], aux: &mut StreamRng) -> f64 {
        let mut w = 0.0f64;
        for u in &path[1..] {
            let s = self.service.sample(aux);
            w = (w + s - u).max(0.0);
        }
        match self.config.measure {
            QueueMeasure::TailProbability { threshold } => f64::from(u8::from(w > threshold)),
            QueueMeasure::MeanWaiting => w,
        }
    }
}
