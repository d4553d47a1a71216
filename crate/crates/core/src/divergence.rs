//! χ²-distance and φ²-coefficient on discrete bivariate laws, copula
//! densities, and Gaussian closed forms used to place parametric models on
//! the dependency-budget axis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stochastics::special::norm_quantile_unchecked;
use crate::stochastics::GaussLegendre;

/// A bivariate pmf on an `rows × cols` grid, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteJoint {
    rows: usize,
    cols: usize,
    pmf: Vec<f64>,
}

impl DiscreteJoint {
    pub fn new(rows: usize, cols: usize, pmf: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || pmf.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                found: pmf.len(),
            });
        }
        if pmf.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::invalid("pmf entries must be finite and non-negative"));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("pmf sums to {total}, not 1")));
        }
        Ok(DiscreteJoint { rows, cols, pmf })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::invalid("ragged pmf rows"));
        }
        Self::new(r, c, rows.concat())
    }

    /// Normalises non-negative counts into a pmf.
    pub fn from_counts(rows: usize, cols: usize, counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::invalid("histogram is empty"));
        }
        let pmf = counts.iter().map(|&c| c as f64 / total as f64).collect();
        let mut joint = DiscreteJoint { rows, cols, pmf };
        if joint.pmf.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                found: joint.pmf.len(),
            });
        }
        // absorb rounding so the sum invariant holds to 1e-12
        let s: f64 = joint.pmf.iter().sum();
        joint.pmf.iter_mut().for_each(|p| *p /= s);
        Ok(joint)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pmf[i * self.cols + j]
    }

    pub fn row_marginal(&self) -> Vec<f64> {
        self.pmf.chunks(self.cols).map(|r| r.iter().sum()).collect()
    }

    pub fn col_marginal(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.cols];
        for row in self.pmf.chunks(self.cols) {
            for (acc, p) in m.iter_mut().zip(row) {
                *acc += p;
            }
        }
        m
    }

    /// The independent law with the same marginals.
    pub fn product_of_marginals(&self) -> DiscreteJoint {
        let rm = self.row_marginal();
        let cm = self.col_marginal();
        let pmf = rm.iter().flat_map(|&r| cm.iter().map(move |&c| r * c)).collect();
        DiscreteJoint {
            rows: self.rows,
            cols: self.cols,
            pmf,
        }
    }
}

/// `E₂[(dP₁/dP₂ − 1)²]` on a common grid.
pub fn chi_square_distance(p1: &DiscreteJoint, p2: &DiscreteJoint) -> Result<f64> {
    if p1.shape() != p2.shape() {
        return Err(Error::LengthMismatch {
            expected: p2.pmf.len(),
            found: p1.pmf.len(),
        });
    }
    let mut total = 0.0;
    for (k, (&a, &b)) in p1.pmf.iter().zip(&p2.pmf).enumerate() {
        if b > 0.0 {
            let d = a - b;
            total += d * d / b;
        } else if a > 0.0 {
            return Err(Error::AbsoluteContinuity {
                row: k / p1.cols,
                col: k % p1.cols,
                mass: a,
            });
        }
    }
    Ok(total)
}

/// Pearson's mean-square contingency: the χ²-distance from the joint to the
/// product of its own marginals.
pub fn phi2_coefficient(joint: &DiscreteJoint) -> f64 {
    chi_square_distance(joint, &joint.product_of_marginals()).expect("product of marginals dominates the joint")
}

/// Counts of pairs of uniform scores on a `bins × bins` grid of `[0,1]²`.
#[derive(Debug, Clone)]
pub struct PairHistogram {
    bins: usize,
    counts: Vec<u64>,
}

impl PairHistogram {
    pub fn new(bins: usize) -> Self {
        assert!(bins >= 1);
        PairHistogram {
            bins,
            counts: vec![0; bins * bins],
        }
    }

    fn bin(&self, u: f64) -> usize {
        ((u * self.bins as f64) as usize).min(self.bins - 1)
    }

    pub fn push(&mut self, u: f64, v: f64) {
        let k = self.bin(u) * self.bins + self.bin(v);
        self.counts[k] += 1;
    }

    pub fn merge(&mut self, other: &PairHistogram) {
        assert_eq!(self.bins, other.bins);
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Merges `factor × factor` blocks; `factor` must divide the bin count.
    pub fn coarsen(&self, factor: usize) -> PairHistogram {
        assert!(factor >= 1 && self.bins.is_multiple_of(factor));
        let nb = self.bins / factor;
        let mut out = PairHistogram::new(nb);
        for i in 0..self.bins {
            for j in 0..self.bins {
                out.counts[(i / factor) * nb + j / factor] += self.counts[i * self.bins + j];
            }
        }
        out
    }

    pub fn to_joint(&self) -> Result<DiscreteJoint> {
        DiscreteJoint::from_counts(self.bins, self.bins, &self.counts)
    }

    pub fn phi2(&self) -> Result<f64> {
        Ok(phi2_coefficient(&self.to_joint()?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CopulaFamily {
    Gaussian,
    Gumbel,
    Clayton,
    Amh,
}

impl CopulaFamily {
    pub fn name(&self) -> &'static str {
        match self {
            CopulaFamily::Gaussian => "gaussian",
            CopulaFamily::Gumbel => "gumbel",
            CopulaFamily::Clayton => "clayton",
            CopulaFamily::Amh => "amh",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(CopulaFamily::Gaussian),
            "gumbel" => Ok(CopulaFamily::Gumbel),
            "clayton" => Ok(CopulaFamily::Clayton),
            "amh" | "ali-mikhail-haq" => Ok(CopulaFamily::Amh),
            other => Err(Error::config(format!("unknown copula family {other:?}"))),
        }
    }
}

/// A one-parameter copula with a validated parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CopulaSpec {
    family: CopulaFamily,
    param: f64,
}

impl CopulaSpec {
    pub fn new(family: CopulaFamily, param: f64) -> Result<Self> {
        let ok = param.is_finite()
            && match family {
                CopulaFamily::Gaussian => param > -1.0 && param < 1.0,
                CopulaFamily::Gumbel => param >= 1.0,
                CopulaFamily::Clayton => param > 0.0,
                CopulaFamily::Amh => (-1.0..=1.0).contains(&param),
            };
        if ok {
            Ok(CopulaSpec { family, param })
        } else {
            Err(Error::invalid(format!(
                "parameter {param} outside the range of the {} copula",
                family.name()
            )))
        }
    }

    pub fn gaussian(rho: f64) -> Result<Self> {
        Self::new(CopulaFamily::Gaussian, rho)
    }

    pub fn gumbel(theta: f64) -> Result<Self> {
        Self::new(CopulaFamily::Gumbel, theta)
    }

    pub fn clayton(theta: f64) -> Result<Self> {
        Self::new(CopulaFamily::Clayton, theta)
    }

    pub fn amh(theta: f64) -> Result<Self> {
        Self::new(CopulaFamily::Amh, theta)
    }

    pub fn family(&self) -> CopulaFamily {
        self.family
    }

    pub fn param(&self) -> f64 {
        self.param
    }

    /// Copula density on the open unit square.
    pub fn density(&self, u: f64, v: f64) -> f64 {
        let th = self.param;
        match self.family {
            CopulaFamily::Gaussian => {
                if th == 0.0 {
                    return 1.0;
                }
                let a = norm_quantile_unchecked(u);
                let b = norm_quantile_unchecked(v);
                let one = 1.0 - th * th;
                (-(th * th * (a * a + b * b) - 2.0 * th * a * b) / (2.0 * one)).exp() / one.sqrt()
            }
            CopulaFamily::Clayton => {
                let (lu, lv) = (u.ln(), v.ln());
                let s = (-th * lu).exp() + (-th * lv).exp() - 1.0;
                ((1.0 + th).ln() - (1.0 + th) * (lu + lv) - (2.0 + 1.0 / th) * s.ln()).exp()
            }
            CopulaFamily::Gumbel => {
                if th == 1.0 {
                    return 1.0;
                }
                let x = -u.ln();
                let y = -v.ln();
                let s = x.powf(th) + y.powf(th);
                let a = s.powf(1.0 / th);
                (-a + x + y + (th - 1.0) * (x.ln() + y.ln()) - (2.0 - 1.0 / th) * s.ln() + (a + th - 1.0).ln()).exp()
            }
            CopulaFamily::Amh => {
                let d = 1.0 - th * (1.0 - u) * (1.0 - v);
                (1.0 + th * ((1.0 + u) * (1.0 + v) - 3.0) + th * th * (1.0 - u) * (1.0 - v)) / (d * d * d)
            }
        }
    }

    /// Closed-form CDF for the Archimedean families; `None` for Gaussian.
    pub fn cdf(&self, u: f64, v: f64) -> Option<f64> {
        let th = self.param;
        match self.family {
            CopulaFamily::Gaussian => None,
            CopulaFamily::Gumbel => Some((-((-u.ln()).powf(th) + (-v.ln()).powf(th)).powf(1.0 / th)).exp()),
            CopulaFamily::Clayton => Some((u.powf(-th) + v.powf(-th) - 1.0).max(0.0).powf(-1.0 / th)),
            CopulaFamily::Amh => Some(u * v / (1.0 - th * (1.0 - u) * (1.0 - v))),
        }
    }

    /// Population Kendall's tau.
    pub fn kendall_tau(&self) -> f64 {
        let th = self.param;
        match self.family {
            CopulaFamily::Gaussian => 2.0 / std::f64::consts::PI * th.asin(),
            CopulaFamily::Gumbel => 1.0 - 1.0 / th,
            CopulaFamily::Clayton => th / (th + 2.0),
            CopulaFamily::Amh => {
                if th.abs() < 1e-8 {
                    2.0 * th / 9.0
                } else if th == 1.0 {
                    1.0 / 3.0
                } else {
                    1.0 - 2.0 * (th + (1.0 - th).powi(2) * (-th).ln_1p()) / (3.0 * th * th)
                }
            }
        }
    }
}

/// Corner clipping for copula quadrature.
pub const COPULA_CLIP: f64 = 1e-6;
const COPULA_MAX_DOUBLINGS: usize = 3;
const COPULA_REL_TOL: f64 = 1e-3;

/// Result of [`phi2_of_copula`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CopulaPhi2 {
    pub value: f64,
    /// `1 − ∫∫ c` over the clipped square: copula mass the quadrature never sees.
    pub clipped_mass: f64,
    pub nodes: usize,
}

/// `∫∫ (c(u,v) − 1)² du dv` over `[δ, 1−δ]²`, δ = [`COPULA_CLIP`].
///
/// Tensor Gauss-Legendre in logit coordinates (where the corner ridges of
/// Clayton and Gumbel have constant width), doubling the node count from
/// `grid_size` until successive values agree to relative 1e-3. Gumbel and
/// Clayton have tail dependence, which makes the unclipped integral diverge
/// logarithmically; their values therefore depend on δ.
pub fn phi2_of_copula(copula: &CopulaSpec, grid_size: usize) -> Result<CopulaPhi2> {
    if grid_size < 64 {
        return Err(Error::config(format!(
            "copula grid size must be at least 64, got {grid_size}"
        )));
    }
    let lo = (COPULA_CLIP / (1.0 - COPULA_CLIP)).ln();
    let hi = -lo;
    let level = |n: usize| {
        let gl = GaussLegendre::new(n, lo, hi);
        let axis: Vec<(f64, f64)> = gl
            .nodes
            .iter()
            .zip(&gl.weights)
            .map(|(&s, &w)| {
                let u = logistic(s);
                (u, w * u * (1.0 - u))
            })
            .collect();
        let mut phi2 = 0.0;
        let mut mass = 0.0;
        for &(u, wu) in &axis {
            let mut row_phi = 0.0;
            let mut row_mass = 0.0;
            for &(v, wv) in &axis {
                let c = copula.density(u, v);
                row_phi += wv * (c - 1.0) * (c - 1.0);
                row_mass += wv * c;
            }
            phi2 += wu * row_phi;
            mass += wu * row_mass;
        }
        (phi2, mass)
    };

    let mut n = grid_size;
    let (mut prev, _) = level(n);
    for _ in 0..COPULA_MAX_DOUBLINGS {
        n *= 2;
        let (cur, mass) = level(n);
        if (cur - prev).abs() <= COPULA_REL_TOL * cur.abs() || (cur.abs() < 1e-14 && prev.abs() < 1e-14) {
            return Ok(CopulaPhi2 {
                value: cur,
                clipped_mass: (1.0 - mass).max(0.0),
                nodes: n,
            });
        }
        prev = cur;
        let _ = mass;
    }
    let (last, _) = level(n);
    Err(Error::NonConvergence { last, previous: prev })
}

#[inline]
fn logistic(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// φ² of a bivariate normal with correlation `rho`.
pub fn phi2_gaussian(rho: f64) -> f64 {
    rho * rho / (1.0 - rho * rho)
}

/// χ²(N(0, Σ₁), N(0, Σ₂)) for `d × d` row-major covariance matrices;
/// infinite when `2Σ₁⁻¹ − Σ₂⁻¹` is not positive definite.
pub fn gaussian_chi_square(sigma1: &[f64], sigma2: &[f64], d: usize) -> Result<f64> {
    if sigma1.len() != d * d || sigma2.len() != d * d {
        return Err(Error::LengthMismatch {
            expected: d * d,
            found: sigma1.len().min(sigma2.len()),
        });
    }
    let (l1, det1) = cholesky(sigma1, d).ok_or_else(|| Error::invalid("Σ₁ is not positive definite"))?;
    let (l2, det2) = cholesky(sigma2, d).ok_or_else(|| Error::invalid("Σ₂ is not positive definite"))?;
    let inv1 = spd_inverse(&l1, d);
    let inv2 = spd_inverse(&l2, d);
    let a: Vec<f64> = inv1.iter().zip(&inv2).map(|(x, y)| 2.0 * x - y).collect();
    match cholesky(&a, d) {
        Some((_, det_a)) => Ok(det2.sqrt() / (det1 * det_a.sqrt()) - 1.0),
        None => Ok(f64::INFINITY),
    }
}

/// φ²₂ of a stationary Gaussian triple with lag correlations (ρ₁, ρ₂): the
/// χ²-distance to the 1-dependent Gaussian law with the same pair marginals,
/// whose lag-2 correlation is ρ₁².
pub fn phi2_two_lag_gaussian(rho1: f64, rho2: f64) -> Result<f64> {
    let full = [1.0, rho1, rho2, rho1, 1.0, rho1, rho2, rho1, 1.0];
    let r = rho1 * rho1;
    let one_dep = [1.0, rho1, r, rho1, 1.0, rho1, r, rho1, 1.0];
    gaussian_chi_square(&full, &one_dep, 3)
}

/// Lower Cholesky factor and determinant, `None` if not positive definite.
fn cholesky(m: &[f64], d: usize) -> Option<(Vec<f64>, f64)> {
    let mut l = vec![0.0; d * d];
    let mut det = 1.0;
    for i in 0..d {
        for j in 0..=i {
            let mut s = m[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[i * d + i] = s.sqrt();
                det *= s;
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    Some((l, det))
}

fn spd_inverse(l: &[f64], d: usize) -> Vec<f64> {
    let mut inv = vec![0.0; d * d];
    for col in 0..d {
        // solve L y = e_col, then Lᵀ x = y
        let mut y = vec![0.0; d];
        for i in 0..d {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for k in 0..i {
                s -= l[i * d + k] * y[k];
            }
            y[i] = s / l[i * d + i];
        }
        for i in (0..d).rev() {
            let mut s = y[i];
            for k in i + 1..d {
                s -= l[k * d + i] * inv[k * d + col];
            }
            inv[i * d + col] = s / l[i * d + i];
        }
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn diag() -> DiscreteJoint {
        DiscreteJoint::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap()
    }

    fn uniform2() -> DiscreteJoint {
        DiscreteJoint::new(2, 2, vec![0.25; 4]).unwrap()
    }

    #[test]
    fn joint_validation() {
        assert!(DiscreteJoint::new(2, 2, vec![0.5, 0.5, 0.1, -0.1]).is_err());
        assert!(DiscreteJoint::new(2, 2, vec![0.5, 0.5, 0.1]).is_err());
        assert!(DiscreteJoint::new(1, 2, vec![0.5, 0.6]).is_err());
    }

    #[test]
    fn chi_square_examples() {
        assert_eq!(chi_square_distance(&uniform2(), &uniform2()).unwrap(), 0.0);
        // Σ (p1/p2 − 1)² p2 = 2·(1)²·¼ + 2·(−1)²·¼
        assert!((chi_square_distance(&diag(), &uniform2()).unwrap() - 1.0).abs() < 1e-15);
        match chi_square_distance(&uniform2(), &diag()) {
            Err(Error::AbsoluteContinuity { row: 0, col: 1, .. }) => {}
            other => panic!("expected absolute-continuity error, got {other:?}"),
        }
    }

    #[test]
    fn phi2_examples() {
        assert!((phi2_coefficient(&diag()) - 1.0).abs() < 1e-15);
        let prod = DiscreteJoint::new(2, 3, vec![0.06, 0.12, 0.12, 0.14, 0.28, 0.28]).unwrap();
        assert!(phi2_coefficient(&prod).abs() < 1e-15);
    }

    #[test]
    fn phi2_grows_quadratically_along_interaction() {
        // independent base with an interaction perturbation that keeps marginals
        let base = [0.12, 0.18, 0.28, 0.42];
        let dir = [1.0, -1.0, -1.0, 1.0];
        let phi = |eps: f64| {
            let pmf = base.iter().zip(dir).map(|(b, d)| b + eps * d).collect();
            phi2_coefficient(&DiscreteJoint::new(2, 2, pmf).unwrap())
        };
        // exact: Σ d²/b · ε²
        let k: f64 = base.iter().map(|b| 1.0 / b).sum();
        for eps in [1e-2, 1e-3, 1e-4] {
            let ratio = phi(eps) / (k * eps * eps);
            assert!((ratio - 1.0).abs() < 0.05, "eps {eps}: ratio {ratio}");
        }
        let r = phi(2e-3) / phi(1e-3);
        assert!((r - 4.0).abs() < 0.2);
    }

    fn arb_joint() -> impl Strategy<Value = DiscreteJoint> {
        (2usize..5, 2usize..5).prop_flat_map(|(r, c)| {
            prop::collection::vec(0.0f64..1.0, r * c).prop_map(move |w| {
                let w: Vec<f64> = w.iter().map(|x| x + 1e-3).collect();
                let s: f64 = w.iter().sum();
                DiscreteJoint::new(r, c, w.iter().map(|x| x / s).collect()).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn phi2_non_negative_and_label_invariant(j in arb_joint(), rot_r in 0usize..4, rot_c in 0usize..4) {
            let (r, c) = j.shape();
            let phi = phi2_coefficient(&j);
            prop_assert!(phi >= 0.0);
            let pmf: Vec<f64> = (0..r)
                .flat_map(|i| (0..c).map(move |k| (i, k)))
                .map(|(i, k)| j.get((i + rot_r) % r, (k + rot_c) % c))
                .collect();
            let permuted = DiscreteJoint::new(r, c, pmf).unwrap();
            prop_assert!((phi2_coefficient(&permuted) - phi).abs() < 1e-12 * (1.0 + phi));
            prop_assert!(phi2_coefficient(&j.product_of_marginals()) < 1e-14);
        }

        #[test]
        fn chi_square_zero_iff_equal(a in arb_joint(), b in arb_joint()) {
            let d = chi_square_distance(&a, &a).unwrap();
            prop_assert_eq!(d, 0.0);
            if a.shape() == b.shape() {
                let d = chi_square_distance(&a, &b).unwrap();
                prop_assert!(d >= 0.0);
                if a != b {
                    prop_assert!(d > 0.0);
                }
            }
        }
    }

    #[test]
    fn copula_parameter_ranges() {
        assert!(CopulaSpec::gaussian(1.0).is_err());
        assert!(CopulaSpec::gumbel(0.99).is_err());
        assert!(CopulaSpec::clayton(0.0).is_err());
        assert!(CopulaSpec::amh(1.01).is_err());
        assert!(CopulaSpec::amh(-1.0).is_ok());
        assert!(CopulaSpec::gumbel(1.0).is_ok());
    }

    #[test]
    fn archimedean_density_is_mixed_derivative_of_cdf() {
        let cops = [
            CopulaSpec::gumbel(1.7).unwrap(),
            CopulaSpec::clayton(1.3).unwrap(),
            CopulaSpec::amh(0.6).unwrap(),
            CopulaSpec::amh(-0.8).unwrap(),
        ];
        let h = 1e-4;
        for c in cops {
            for &(u, v) in &[(0.3, 0.6), (0.8, 0.15), (0.5, 0.5)] {
                let f = |a: f64, b: f64| c.cdf(a, b).unwrap();
                let fd = (f(u + h, v + h) - f(u + h, v - h) - f(u - h, v + h) + f(u - h, v - h)) / (4.0 * h * h);
                let d = c.density(u, v);
                assert!((fd - d).abs() < 1e-5 * (1.0 + d), "{c:?} at ({u},{v}): {fd} vs {d}");
            }
        }
    }

    #[test]
    fn copula_phi2_independence_points() {
        for c in [CopulaSpec::gaussian(0.0), CopulaSpec::amh(0.0), CopulaSpec::gumbel(1.0)] {
            let r = phi2_of_copula(&c.unwrap(), 64).unwrap();
            assert!(r.value.abs() < 1e-14, "{r:?}");
        }
        assert!(phi2_of_copula(&CopulaSpec::gaussian(0.1).unwrap(), 32).is_err());
    }

    /// Independent oracle: the bivariate-normal φ² integral in normal scores,
    /// ∫∫ (N(x,y;ρ) − N(x)N(y))² / (N(x)N(y)) over [−l, l]², by a plain
    /// midpoint rule.
    fn gaussian_phi2_oracle(rho: f64, l: f64) -> f64 {
        let n = 1600;
        let h = 2.0 * l / n as f64;
        let one = 1.0 - rho * rho;
        let mut s = 0.0;
        for i in 0..n {
            let x = -l + (i as f64 + 0.5) * h;
            for j in 0..n {
                let y = -l + (j as f64 + 0.5) * h;
                let q = (x * x - 2.0 * rho * x * y + y * y) / one;
                let joint = (-0.5 * q).exp() / (2.0 * std::f64::consts::PI * one.sqrt());
                let indep = (-0.5 * (x * x + y * y)).exp() / (2.0 * std::f64::consts::PI);
                s += (joint - indep) * (joint - indep) / indep;
            }
        }
        s * h * h
    }

    #[test]
    fn gaussian_copula_phi2_matches_closed_form() {
        let oracle = gaussian_phi2_oracle(0.2, 9.0);
        assert!((oracle - 0.2 * 0.2 / 0.96).abs() < 1e-8, "oracle {oracle}");
        for rho in [0.2, -0.35] {
            let got = phi2_of_copula(&CopulaSpec::gaussian(rho).unwrap(), 64).unwrap();
            let want = phi2_gaussian(rho);
            assert!((got.value - want).abs() < 1e-3 * want, "rho {rho}: {got:?} vs {want}");
            assert!(got.clipped_mass < 1e-4);
        }
        // strong correlation: the clipped square loses visible φ² mass, so
        // compare against the oracle on the same square
        let edge = norm_quantile_unchecked(1.0 - COPULA_CLIP);
        let got = phi2_of_copula(&CopulaSpec::gaussian(0.6).unwrap(), 64).unwrap();
        let want = gaussian_phi2_oracle(0.6, edge);
        assert!((got.value - want).abs() < 1e-3 * want, "{got:?} vs {want}");
        assert!(want < phi2_gaussian(0.6));
    }

    #[test]
    fn tail_dependent_copulas_report_finite_clipped_values() {
        for c in [
            CopulaSpec::clayton(1.0).unwrap(),
            CopulaSpec::gumbel(1.5).unwrap(),
            CopulaSpec::amh(0.9).unwrap(),
        ] {
            let r = phi2_of_copula(&c, 64).unwrap();
            assert!(r.value.is_finite() && r.value > 0.0, "{c:?}: {r:?}");
            assert!(r.clipped_mass >= 0.0 && r.clipped_mass < 1e-3, "{c:?}: {r:?}");
        }
    }

    #[test]
    fn gaussian_chi_square_reduces_to_phi2() {
        for rho in [0.0, 0.3, -0.7] {
            let s1 = [1.0, rho, rho, 1.0];
            let s2 = [1.0, 0.0, 0.0, 1.0];
            let got = gaussian_chi_square(&s1, &s2, 2).unwrap();
            assert!((got - phi2_gaussian(rho)).abs() < 1e-12);
        }
        // AR(1) triple is its own 1-dependent counterpart
        assert!(phi2_two_lag_gaussian(0.4, 0.16).unwrap().abs() < 1e-12);
        assert!(phi2_two_lag_gaussian(0.1, 0.11).unwrap() > 0.0);
    }
}
