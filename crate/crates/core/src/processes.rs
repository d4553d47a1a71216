//! Dependent input processes with exactly preserved marginals, used as
//! parametric comparators for the worst-case bands.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::divergence::{phi2_coefficient, DiscreteJoint, PairHistogram};
use crate::error::{Error, Result};
use crate::stochastics::{MarginalDistribution, RngStream, Sampler, StreamRng};

/// Fills a whole input sequence in one go.
pub trait PathSampler: Sync {
    fn fill(&self, rng: &mut StreamRng, path: &mut [f64]);
}

/// i.i.d. draws from a marginal, as a [`PathSampler`].
#[derive(Debug, Clone, Copy)]
pub struct Iid<M>(pub M);

impl<M: Sampler> PathSampler for Iid<M> {
    fn fill(&self, rng: &mut StreamRng, path: &mut [f64]) {
        for x in path.iter_mut() {
            *x = self.0.draw(rng);
        }
    }
}

#[inline]
fn std_normal(rng: &mut StreamRng) -> f64 {
    StandardNormal.sample(rng)
}

/// `U_t = F⁻¹(F_N(ζ_t))` for a stationary Gaussian AR(1) `ζ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmbeddedAr1Spec {
    beta0: f64,
    beta1: f64,
    sigma2: f64,
    target: MarginalDistribution,
}

impl EmbeddedAr1Spec {
    pub fn new(beta0: f64, beta1: f64, sigma2: f64, target: MarginalDistribution) -> Result<Self> {
        if !(beta1.abs() < 1.0) {
            return Err(Error::Stationarity(format!("AR(1) needs |beta1| < 1, got {beta1}")));
        }
        if !(sigma2 > 0.0) || !beta0.is_finite() {
            return Err(Error::invalid(format!("AR(1) needs sigma2 > 0, got {sigma2}")));
        }
        Ok(EmbeddedAr1Spec {
            beta0,
            beta1,
            sigma2,
            target,
        })
    }

    pub fn beta1(&self) -> f64 {
        self.beta1
    }

    pub fn target(&self) -> &MarginalDistribution {
        &self.target
    }

    pub fn stationary_mean(&self) -> f64 {
        self.beta0 / (1.0 - self.beta1)
    }

    pub fn stationary_variance(&self) -> f64 {
        self.sigma2 / (1.0 - self.beta1 * self.beta1)
    }

    /// φ² of consecutive pairs: that of the latent Gaussian pair, since the
    /// coordinate-wise map to `U` is monotone.
    pub fn exact_phi2(&self) -> f64 {
        crate::divergence::phi2_gaussian(self.beta1)
    }

    /// Standardised latent path `(ζ_t − mean)/sd`, started in stationarity.
    fn fill_scores(&self, rng: &mut StreamRng, z: &mut [f64]) {
        let innov = (1.0 - self.beta1 * self.beta1).sqrt();
        let mut prev = std_normal(rng);
        for (t, v) in z.iter_mut().enumerate() {
            if t > 0 {
                prev = self.beta1 * prev + innov * std_normal(rng);
            }
            *v = prev;
        }
    }

    /// The latent AR(1) path `ζ_1..ζ_T`.
    pub fn latent_path(&self, horizon: usize, rng: &mut StreamRng) -> Vec<f64> {
        let mut z = vec![0.0; horizon];
        self.fill_scores(rng, &mut z);
        let (m, s) = (self.stationary_mean(), self.stationary_variance().sqrt());
        z.iter().map(|v| m + s * v).collect()
    }
}

impl PathSampler for EmbeddedAr1Spec {
    fn fill(&self, rng: &mut StreamRng, path: &mut [f64]) {
        self.fill_scores(rng, path);
        for v in path.iter_mut() {
            *v = self.target.quantile_of_normal_score(*v);
        }
    }
}

pub fn embedded_ar1_path(spec: &EmbeddedAr1Spec, horizon: usize, stream: &RngStream) -> Vec<f64> {
    let mut path = vec![0.0; horizon];
    spec.fill(&mut stream.rng(), &mut path);
    path
}

/// `U_t = F⁻¹(I_t)` with `I_t` uniform on the sub-interval selected by a
/// stationary two-state Markov chain `J_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmbeddedMcSpec {
    a: f64,
    theta: f64,
    target: MarginalDistribution,
}

impl EmbeddedMcSpec {
    pub fn new(a: f64, theta: f64, target: MarginalDistribution) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::invalid(format!("Markov chain needs 0 < a < 1, got {a}")));
        }
        if !(theta > -a && theta < 1.0 - a) {
            return Err(Error::invalid(format!(
                "Markov chain needs -a < theta < 1 - a, got {theta}"
            )));
        }
        Ok(EmbeddedMcSpec { a, theta, target })
    }

    pub fn target(&self) -> &MarginalDistribution {
        &self.target
    }

    /// Stationary probability of state 0.
    pub fn p0(&self) -> f64 {
        self.a / (1.0 - self.theta)
    }

    /// Probability of moving to state 0 from `state`.
    fn to_zero(self, state: u8) -> f64 {
        if state == 0 {
            self.a + self.theta
        } else {
            self.a
        }
    }

    /// φ² of consecutive pairs: the chain's pair law is spread uniformly over
    /// each block, so φ² = Σ P(i,j)²/(π_i π_j) − 1.
    pub fn exact_phi2(&self) -> f64 {
        let pi = [self.p0(), 1.0 - self.p0()];
        let mut total = -1.0;
        for i in 0..2u8 {
            let q0 = self.to_zero(i);
            for (j, q) in [q0, 1.0 - q0].into_iter().enumerate() {
                let pij = pi[i as usize] * q;
                total += pij * pij / (pi[i as usize] * pi[j]);
            }
        }
        total
    }

    fn fill_states(&self, rng: &mut StreamRng, path: &mut [f64], states: Option<&mut Vec<u8>>) {
        use rand::Rng;
        let p0 = self.p0();
        let mut state: u8 = if rng.gen::<f64>() < p0 { 0 } else { 1 };
        let mut record = states;
        for (t, v) in path.iter_mut().enumerate() {
            if t > 0 {
                state = if rng.gen::<f64>() < self.to_zero(state) { 0 } else { 1 };
            }
            let w: f64 = rng.gen();
            let u = if state == 0 { w * p0 } else { p0 + w * (1.0 - p0) };
            *v = self.target.quantile_unchecked(u.max(f64::MIN_POSITIVE));
            if let Some(s) = record.as_deref_mut() {
                s.push(state);
            }
        }
    }

    /// The hidden chain `J_1..J_T` of a fresh path.
    pub fn state_path(&self, horizon: usize, rng: &mut StreamRng) -> Vec<u8> {
        let mut states = Vec::with_capacity(horizon);
        let mut path = vec![0.0; horizon];
        self.fill_states(rng, &mut path, Some(&mut states));
        states
    }
}

impl PathSampler for EmbeddedMcSpec {
    fn fill(&self, rng: &mut StreamRng, path: &mut [f64]) {
        self.fill_states(rng, path, None);
    }
}

pub fn embedded_mc_path(spec: &EmbeddedMcSpec, horizon: usize, stream: &RngStream) -> Vec<f64> {
    let mut path = vec![0.0; horizon];
    spec.fill(&mut stream.rng(), &mut path);
    path
}

/// Stationary Gaussian AR(2) log-increments with fixed marginal `N(m, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ar2LogIncrementSpec {
    beta1: f64,
    beta2: f64,
    mean: f64,
    variance: f64,
}

impl Ar2LogIncrementSpec {
    /// Increments with stationary law `N((μ − σ²/2)Δt, σ²Δt)`.
    pub fn for_gbm(beta1: f64, beta2: f64, mu: f64, sigma: f64, dt: f64) -> Result<Self> {
        if !(sigma > 0.0 && dt > 0.0) {
            return Err(Error::invalid("sigma and dt must be positive"));
        }
        Self::new(beta1, beta2, (mu - 0.5 * sigma * sigma) * dt, sigma * sigma * dt)
    }

    pub fn new(beta1: f64, beta2: f64, mean: f64, variance: f64) -> Result<Self> {
        if !(beta2 < 1.0 + beta1 && beta2 < 1.0 - beta1 && beta2.abs() < 1.0) {
            return Err(Error::Stationarity(format!(
                "AR(2) coefficients ({beta1}, {beta2}) outside the stationarity triangle"
            )));
        }
        if !(variance > 0.0) || !mean.is_finite() {
            return Err(Error::invalid("increment variance must be positive"));
        }
        Ok(Ar2LogIncrementSpec {
            beta1,
            beta2,
            mean,
            variance,
        })
    }

    pub fn beta0(&self) -> f64 {
        self.mean * (1.0 - self.beta1 - self.beta2)
    }

    /// Innovation variance that keeps the stationary variance at `v`.
    pub fn noise_variance(&self) -> f64 {
        let (b1, b2) = (self.beta1, self.beta2);
        self.variance * (1.0 + b2) * ((1.0 - b2) * (1.0 - b2) - b1 * b1) / (1.0 - b2)
    }

    /// Lag-1 and lag-2 autocorrelations.
    pub fn autocorrelations(&self) -> (f64, f64) {
        let rho1 = self.beta1 / (1.0 - self.beta2);
        (rho1, self.beta1 * rho1 + self.beta2)
    }

    pub fn stationary(&self) -> (f64, f64) {
        (self.mean, self.variance)
    }
}

impl PathSampler for Ar2LogIncrementSpec {
    /// Fills log-increments `Y_1..Y_n`, started from the stationary law of
    /// `(Y_1, Y_2)`.
    fn fill(&self, rng: &mut StreamRng, path: &mut [f64]) {
        let (m, v) = (self.mean, self.variance);
        let (rho1, _) = self.autocorrelations();
        let sd = v.sqrt();
        let noise = self.noise_variance().sqrt();
        let b0 = self.beta0();
        for t in 0..path.len() {
            path[t] = match t {
                0 => m + sd * std_normal(rng),
                1 => m + rho1 * (path[0] - m) + (v * (1.0 - rho1 * rho1)).sqrt() * std_normal(rng),
                _ => b0 + self.beta1 * path[t - 1] + self.beta2 * path[t - 2] + noise * std_normal(rng),
            };
        }
    }
}

/// Prices `X_0..X_steps` whose log-increments follow `spec`.
pub fn ar2_log_increment_path(spec: &Ar2LogIncrementSpec, steps: usize, x0: f64, stream: &RngStream) -> Vec<f64> {
    let mut inc = vec![0.0; steps];
    spec.fill(&mut stream.rng(), &mut inc);
    prices_from_increments(x0, &inc)
}

pub fn prices_from_increments(x0: f64, increments: &[f64]) -> Vec<f64> {
    let mut prices = Vec::with_capacity(increments.len() + 1);
    let mut log = x0.ln();
    prices.push(x0);
    for d in increments {
        log += d;
        prices.push(log.exp());
    }
    prices
}

/// Sample lag correlations of the Gaussian chain with transitions
/// `N(ρ₁x, 1 − ρ₁²)`, with their approximate standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OneDepCheck {
    pub corr12: f64,
    pub corr13: f64,
    pub se12: f64,
    pub se13: f64,
}

/// Simulates `n_samples` independent stationary triples `(X_{t−2}, X_{t−1}, X_t)`.
pub fn gaussian_one_dep_check(rho1: f64, n_samples: usize, stream: &RngStream) -> Result<OneDepCheck> {
    if !(rho1.abs() < 1.0) {
        return Err(Error::invalid(format!("need |rho1| < 1, got {rho1}")));
    }
    if n_samples < 3 {
        return Err(Error::config("need at least 3 samples"));
    }
    const CHUNK: usize = 1 << 15;
    let innov = (1.0 - rho1 * rho1).sqrt();
    let chunks = n_samples.div_ceil(CHUNK);
    let cols: Vec<[Vec<f64>; 3]> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK.min(n_samples - c * CHUNK);
            let mut rng = stream.child(c as u64).rng();
            let mut out = [
                Vec::with_capacity(len),
                Vec::with_capacity(len),
                Vec::with_capacity(len),
            ];
            for _ in 0..len {
                let a = std_normal(&mut rng);
                let b = rho1 * a + innov * std_normal(&mut rng);
                let d = rho1 * b + innov * std_normal(&mut rng);
                out[0].push(a);
                out[1].push(b);
                out[2].push(d);
            }
            out
        })
        .collect();
    let join = |k: usize| cols.iter().flat_map(|c| c[k].iter().copied()).collect::<Vec<f64>>();
    let (x1, x2, x3) = (join(0), join(1), join(2));
    let corr12 = crate::stats::pearson(&x1, &x2);
    let corr13 = crate::stats::pearson(&x1, &x3);
    let n = n_samples as f64;
    Ok(OneDepCheck {
        corr12,
        corr13,
        se12: (1.0 - corr12 * corr12) / n.sqrt(),
        se13: (1.0 - corr13 * corr13) / n.sqrt(),
    })
}

/// Histogram-based φ² of consecutive pairs on the uniform-score scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramPhi2 {
    pub pairs: u64,
    pub bins: usize,
    pub phi2: f64,
    /// The same estimate on a grid with half the bins per axis.
    pub phi2_coarse: f64,
}

/// Draws paths of length `path_len` from `sampler`, maps every consecutive
/// pair through the target CDF, and bins `pairs` of them on a
/// `bins × bins` grid. `bins` must be even.
pub fn histogram_phi2<P: PathSampler + ?Sized>(
    sampler: &P,
    target: &MarginalDistribution,
    pairs: u64,
    bins: usize,
    path_len: usize,
    stream: &RngStream,
) -> Result<HistogramPhi2> {
    if bins < 2 || !bins.is_multiple_of(2) {
        return Err(Error::config(format!(
            "histogram bins must be even and >= 2, got {bins}"
        )));
    }
    if path_len < 2 || pairs == 0 {
        return Err(Error::config("need paths of length >= 2 and at least one pair"));
    }
    let per_path = (path_len - 1) as u64;
    let paths = pairs.div_ceil(per_path);
    const PATHS_PER_CHUNK: u64 = 64;
    let chunks = paths.div_ceil(PATHS_PER_CHUNK);
    let hists: Vec<PairHistogram> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut hist = PairHistogram::new(bins);
            let mut rng = stream.child(c).rng();
            let mut path = vec![0.0; path_len];
            let first = c * PATHS_PER_CHUNK;
            for p in first..(first + PATHS_PER_CHUNK).min(paths) {
                sampler.fill(&mut rng, &mut path);
                let take = per_path.min(pairs - p * per_path) as usize;
                for w in path.windows(2).take(take) {
                    hist.push(target.cdf(w[0]), target.cdf(w[1]));
                }
            }
            hist
        })
        .collect();
    let mut total = PairHistogram::new(bins);
    for h in &hists {
        total.merge(h);
    }
    Ok(HistogramPhi2 {
        pairs: total.total(),
        bins,
        phi2: total.phi2()?,
        phi2_coarse: total.coarsen(2).phi2()?,
    })
}

/// Exact φ² of a finite joint given as `P(i, j)`, for cross-checks.
pub fn discrete_phi2(rows: &[Vec<f64>]) -> Result<f64> {
    Ok(phi2_coefficient(&DiscreteJoint::from_rows(rows)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_critical, ks_statistic, pearson, Moments};

    fn exp08() -> MarginalDistribution {
        MarginalDistribution::exponential(0.8).unwrap()
    }

    fn long_path<P: PathSampler>(p: &P, n: usize, seed: u64) -> Vec<f64> {
        let mut path = vec![0.0; n];
        p.fill(&mut RngStream::new(seed).rng(), &mut path);
        path
    }

    /// Every coordinate position of fresh short paths, pooled.
    fn marginal_sample<P: PathSampler>(p: &P, seed: u64) -> Vec<f64> {
        let mut rng = RngStream::new(seed).rng();
        let mut out = Vec::with_capacity(100_000);
        let mut path = vec![0.0; 10];
        for _ in 0..10_000 {
            p.fill(&mut rng, &mut path);
            out.extend_from_slice(&path);
        }
        out
    }

    #[test]
    fn spec_validation() {
        assert!(EmbeddedAr1Spec::new(1.0, 1.0, 0.5, exp08()).is_err());
        assert!(EmbeddedAr1Spec::new(1.0, 0.2, 0.0, exp08()).is_err());
        assert!(EmbeddedMcSpec::new(0.5, -0.5, exp08()).is_err());
        assert!(EmbeddedMcSpec::new(0.5, 0.5, exp08()).is_err());
        assert!(EmbeddedMcSpec::new(1.0, 0.0, exp08()).is_err());
        assert!(Ar2LogIncrementSpec::new(0.6, 0.5, 0.0, 1.0).is_err());
        assert!(Ar2LogIncrementSpec::new(0.1, 0.1, 0.0, 1.0).is_ok());
    }

    #[test]
    fn embedded_ar1_keeps_exponential_marginal() {
        let crit = ks_critical(0.001, 100_000);
        for beta1 in [0.0, -0.2, 0.2, 0.6] {
            let spec = EmbeddedAr1Spec::new(1.0, beta1, 0.5, exp08()).unwrap();
            let xs = marginal_sample(&spec, 1);
            assert!(ks_statistic(&xs, |x| exp08().cdf(x)) < crit, "beta1 {beta1}");
        }
        let iid = EmbeddedAr1Spec::new(1.0, 0.0, 0.5, exp08()).unwrap();
        let xs = long_path(&iid, 100_000, 4);
        assert!(pearson(&xs[..99_999], &xs[1..]).abs() < 0.01);
    }

    #[test]
    fn embedded_ar1_latent_autocorrelation() {
        let spec = EmbeddedAr1Spec::new(1.0, 0.2, 0.5, exp08()).unwrap();
        let z = spec.latent_path(100_000, &mut RngStream::new(2).rng());
        assert!((pearson(&z[..99_999], &z[1..]) - 0.2).abs() < 0.01);
        let m = Moments::from_slice(&z);
        assert!((m.mean - 1.25).abs() < 0.01);
        assert!((m.variance() - 0.5 / 0.96).abs() < 0.01);
    }

    #[test]
    fn embedded_mc_marginal_and_stationary_frequency() {
        let crit = ks_critical(0.001, 100_000);
        for (a, theta) in [(0.5, 0.2), (0.3, -0.2), (0.5, 0.0)] {
            let spec = EmbeddedMcSpec::new(a, theta, exp08()).unwrap();
            let xs = marginal_sample(&spec, 3);
            assert!(ks_statistic(&xs, |x| exp08().cdf(x)) < crit, "({a}, {theta})");
            let states = spec.state_path(100_000, &mut RngStream::new(7).rng());
            let freq = states.iter().filter(|&&s| s == 0).count() as f64 / 1e5;
            assert!((freq - a / (1.0 - theta)).abs() < 0.01, "({a}, {theta}): {freq}");
        }
        let iid = EmbeddedMcSpec::new(0.5, 0.0, exp08()).unwrap();
        let xs = long_path(&iid, 100_000, 5);
        assert!(pearson(&xs[..99_999], &xs[1..]).abs() < 0.01);
    }

    #[test]
    fn mc_exact_phi2_matches_discrete_joint() {
        let spec = EmbeddedMcSpec::new(0.3, 0.2, exp08()).unwrap();
        let p0 = spec.p0();
        let rows = vec![vec![p0 * 0.5, p0 * 0.5], vec![(1.0 - p0) * 0.3, (1.0 - p0) * 0.7]];
        assert!((spec.exact_phi2() - discrete_phi2(&rows).unwrap()).abs() < 1e-14);
        assert!(EmbeddedMcSpec::new(0.3, 0.0, exp08()).unwrap().exact_phi2().abs() < 1e-15);
    }

    #[test]
    fn histogram_phi2_tracks_exact_values() {
        let ar = EmbeddedAr1Spec::new(1.0, 0.2, 0.5, exp08()).unwrap();
        let h = histogram_phi2(&ar, &exp08(), 1_000_000, 40, 1000, &RngStream::new(1)).unwrap();
        assert_eq!(h.pairs, 1_000_000);
        // binning loses a little, the plug-in bias adds (B−1)²/N
        assert!((h.phi2 - ar.exact_phi2()).abs() < 0.006, "{h:?} vs {}", ar.exact_phi2());
        let mc = EmbeddedMcSpec::new(0.5, 0.2, exp08()).unwrap();
        let h = histogram_phi2(&mc, &exp08(), 1_000_000, 40, 1000, &RngStream::new(1)).unwrap();
        assert!((h.phi2 - mc.exact_phi2()).abs() < 0.006, "{h:?} vs {}", mc.exact_phi2());
    }

    #[test]
    fn ar2_moments_and_autocorrelation() {
        let spec = Ar2LogIncrementSpec::for_gbm(0.1, 0.0, 0.1, 0.2, 0.01).unwrap();
        let (m, v) = spec.stationary();
        assert!((m - 0.0008).abs() < 1e-15 && (v - 0.0004).abs() < 1e-15);
        let y = long_path(&spec, 1_000_000, 9);
        let mo = Moments::from_slice(&y);
        // the AR(1) long-run variance of the mean is v(1+β)/(1−β)/N
        let se_mean = (v * 1.1 / 0.9 / 1e6).sqrt();
        assert!((mo.mean - m).abs() < 4.0 * se_mean);
        assert!((mo.variance() - v).abs() < 4.0 * v * (2.0 * 1.02 / 0.98 / 1e6f64).sqrt());

        let spec = Ar2LogIncrementSpec::for_gbm(0.1, 0.1, 0.1, 0.2, 0.01).unwrap();
        let y = long_path(&spec, 1_000_000, 10);
        let (rho1, rho2) = spec.autocorrelations();
        assert!((pearson(&y[..999_999], &y[1..]) - rho1).abs() < 0.01);
        assert!((pearson(&y[..999_998], &y[2..]) - rho2).abs() < 0.01);
        // stationary from the first step
        let mut rng = RngStream::new(11).rng();
        let mut first = Vec::new();
        let mut buf = [0.0; 3];
        for _ in 0..200_000 {
            spec.fill(&mut rng, &mut buf);
            first.push(buf[2]);
        }
        let mo = Moments::from_slice(&first);
        assert!((mo.variance() / spec.stationary().1 - 1.0).abs() < 0.02);
    }

    #[test]
    fn ar2_at_zero_is_iid_gbm() {
        let spec = Ar2LogIncrementSpec::for_gbm(0.0, 0.0, 0.1, 0.2, 0.01).unwrap();
        assert_eq!(spec.noise_variance(), spec.stationary().1);
        let prices = ar2_log_increment_path(&spec, 100, 100.0, &RngStream::new(3));
        assert_eq!(prices.len(), 101);
        assert_eq!(prices[0], 100.0);
        assert!(prices.iter().all(|p| *p > 0.0));
    }

    #[test]
    fn one_dep_gaussian_correlations() {
        for (rho, want13) in [(0.0, 0.0), (0.5, 0.25), (-0.4, 0.16)] {
            let c = gaussian_one_dep_check(rho, 200_000, &RngStream::new(1)).unwrap();
            assert!((c.corr12 - rho).abs() < 3.0 * c.se12, "{c:?}");
            assert!((c.corr13 - want13).abs() < 3.0 * c.se13, "{c:?}");
        }
    }
}
