use rayon::prelude::*;

use super::cost::TrajectoryCost;
use crate::error::{Error, Result};
use crate::stats::{Estimate, Moments};
use crate::stochastics::{RngStream, Sampler, StreamRng};

const PATH_CHUNK: usize = 4096;

/// Monte Carlo `E[h(X)]` with paths produced by `fill`.
///
/// Path `p` lives in chunk `c = p / 4096`; `fill` receives the generator of
/// `stream.child(c).child(0)` and the cost's auxiliary generator comes from
/// `stream.child(c).child(1)`. Chunks are merged in order.
pub fn monte_carlo_mean<C, F>(cost: &C, samples: usize, stream: &RngStream, fill: F) -> Result<Estimate>
where
    C: TrajectoryCost + ?Sized,
    F: Fn(&mut StreamRng, &mut [f64]) + Sync,
{
    if samples < 2 {
        return Err(Error::config("need at least 2 Monte Carlo samples"));
    }
    let chunks = samples.div_ceil(PATH_CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = PATH_CHUNK.min(samples - c * PATH_CHUNK);
            let s = stream.child(c as u64);
            let mut coords = s.child(0).rng();
            let mut aux = s.child(1).rng();
            let mut path = vec![0.0; cost.horizon()];
            let mut m = Moments::default();
            for _ in 0..len {
                fill(&mut coords, &mut path);
                m.push(cost.evaluate(&path, &mut aux));
            }
            m
        })
        .collect();
    Ok(parts.iter().fold(Moments::default(), |acc, m| acc.merge(m)).into())
}

/// `E₀[h]` under i.i.d. draws from the baseline marginal.
pub fn estimate_baseline<C, M>(cost: &C, marginal: &M, samples: usize, stream: &RngStream) -> Result<Estimate>
where
    C: TrajectoryCost + ?Sized,
    M: Sampler + ?Sized,
{
    monte_carlo_mean(cost, samples, stream, |rng, path| {
        for x in path.iter_mut() {
            *x = marginal.draw(rng);
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::serial_anova::cost::FnCost;
    use crate::stochastics::MarginalDistribution;

    #[test]
    fn baseline_mean_of_sum() {
        let m = MarginalDistribution::exponential(0.8).unwrap();
        let c = FnCost::new(5, |p: &[f64]| p.iter().sum()).unwrap();
        let e = estimate_baseline(&c, &m, 200_000, &RngStream::new(1)).unwrap();
        assert!((e.value - 6.25).abs() < 4.0 * e.stderr, "{e:?}");
    }

    #[test]
    fn chunking_is_thread_independent() {
        let m = MarginalDistribution::normal(0.0, 1.0).unwrap();
        let c = FnCost::new(3, |p: &[f64]| p[0] * p[2]).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| estimate_baseline(&c, &m, 30_000, &RngStream::new(2)).unwrap())
        };
        let (a, b) = (run(1), run(5));
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }
}
