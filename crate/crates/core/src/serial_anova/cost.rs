use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::stochastics::{RngStream, Sampler, StreamRng};

/// A cost `h` on input sequences of fixed length.
///
/// `aux` carries randomness internal to the cost (service times of a queue,
/// say). It is keyed separately from the trajectory coordinates, so pinning
/// coordinates never shifts what `aux` produces.
pub trait TrajectoryCost: Sync {
    fn horizon(&self) -> usize;
    fn evaluate(&self, path: &[f64], aux: &mut StreamRng) -> f64;
}

impl<C: TrajectoryCost + ?Sized> TrajectoryCost for &C {
    fn horizon(&self) -> usize {
        (**self).horizon()
    }

    fn evaluate(&self, path: &[f64], aux: &mut StreamRng) -> f64 {
        (**self).evaluate(path, aux)
    }
}

impl<C: TrajectoryCost + ?Sized> TrajectoryCost for Box<C> {
    fn horizon(&self) -> usize {
        (**self).horizon()
    }

    fn evaluate(&self, path: &[f64], aux: &mut StreamRng) -> f64 {
        (**self).evaluate(path, aux)
    }
}

/// A deterministic cost given by a closure.
#[derive(Clone)]
pub struct FnCost<F> {
    horizon: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnCost<F> {
    pub fn new(horizon: usize, f: F) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::config("horizon must be positive"));
        }
        Ok(FnCost { horizon, f })
    }

    pub fn eval(&self, path: &[f64]) -> f64 {
        (self.f)(path)
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> TrajectoryCost for FnCost<F> {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn evaluate(&self, path: &[f64], _aux: &mut StreamRng) -> f64 {
        (self.f)(path)
    }
}

/// Coordinates held fixed in one trajectory evaluation; the rest are drawn
/// i.i.d. from the baseline marginal. Indices are 1-based, as in `X_1..X_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct PinnedEvaluation {
    pins: SmallVec<[(usize, f64); 3]>,
}

impl PinnedEvaluation {
    pub fn new(pins: &[(usize, f64)], horizon: usize) -> Result<Self> {
        for (k, &(t, _)) in pins.iter().enumerate() {
            if t == 0 || t > horizon {
                return Err(Error::invalid(format!("pinned index {t} outside 1..={horizon}")));
            }
            if pins[..k].iter().any(|&(s, _)| s == t) {
                return Err(Error::invalid(format!("index {t} pinned twice")));
            }
        }
        Ok(PinnedEvaluation {
            pins: pins.iter().copied().collect(),
        })
    }

    pub fn pins(&self) -> &[(usize, f64)] {
        &self.pins
    }

    /// One evaluation of `h` with the pins applied. `stream.child(0)` draws
    /// all `T` coordinates in order (pinned ones are drawn then overwritten,
    /// which couples evaluations that differ only in their pins) and
    /// `stream.child(1)` feeds the cost's auxiliary randomness.
    pub fn evaluate<C, M>(&self, cost: &C, marginal: &M, stream: &RngStream) -> f64
    where
        C: TrajectoryCost + ?Sized,
        M: Sampler + ?Sized,
    {
        let mut path = vec![0.0; cost.horizon()];
        self.evaluate_into(cost, marginal, stream, &mut path)
    }

    pub(crate) fn evaluate_into<C, M>(&self, cost: &C, marginal: &M, stream: &RngStream, path: &mut [f64]) -> f64
    where
        C: TrajectoryCost + ?Sized,
        M: Sampler + ?Sized,
    {
        fill_iid(marginal, &stream.child(0), path);
        for &(t, v) in &self.pins {
            path[t - 1] = v;
        }
        cost.evaluate(path, &mut stream.child(1).rng())
    }
}

pub(crate) fn fill_iid<M: Sampler + ?Sized>(marginal: &M, stream: &RngStream, path: &mut [f64]) {
    let mut rng = stream.rng();
    for x in path.iter_mut() {
        *x = marginal.draw(&mut rng);
    }
}

/// `Σ_t h(X with X_{t−L..=t} pinned to values)`, over `t = L+1..=T`, one
/// fresh trajectory per term (term `t` uses `stream.child(t)`).
pub(crate) fn pinned_window_sum<C, M>(
    cost: &C,
    marginal: &M,
    values: &[f64],
    stream: &RngStream,
    path: &mut [f64],
) -> f64
where
    C: TrajectoryCost + ?Sized,
    M: Sampler + ?Sized,
{
    let horizon = cost.horizon();
    let lag = values.len() - 1;
    let mut total = 0.0;
    for t in lag + 1..=horizon {
        let term = stream.child(t as u64);
        fill_iid(marginal, &term.child(0), path);
        path[t - 1 - lag..t].copy_from_slice(values);
        total += cost.evaluate(path, &mut term.child(1).rng());
    }
    total
}

/// One realisation of `Σ_{t=2}^T h(X^{(X_{t−1}=x, X_t=y)})`.
pub fn pinned_sum_sample<C, M>(cost: &C, marginal: &M, x: f64, y: f64, stream: &RngStream) -> Result<f64>
where
    C: TrajectoryCost + ?Sized,
    M: Sampler + ?Sized,
{
    if cost.horizon() < 2 {
        return Err(Error::config("pinned pair sums need a horizon of at least 2"));
    }
    let mut path = vec![0.0; cost.horizon()];
    Ok(pinned_window_sum(cost, marginal, &[x, y], stream, &mut path))
}

/// One realisation of `Σ_{t=3}^T h(X^{(X_{t−2}=x, X_{t−1}=y, X_t=z)})`.
pub fn pinned_triple_sum_sample<C, M>(cost: &C, marginal: &M, x: f64, y: f64, z: f64, stream: &RngStream) -> Result<f64>
where
    C: TrajectoryCost + ?Sized,
    M: Sampler + ?Sized,
{
    if cost.horizon() < 3 {
        return Err(Error::config("pinned triple sums need a horizon of at least 3"));
    }
    let mut path = vec![0.0; cost.horizon()];
    Ok(pinned_window_sum(cost, marginal, &[x, y, z], stream, &mut path))
}
