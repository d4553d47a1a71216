use crate::apps::{queue_cost, HedgeConfig, HedgeCost, QueueConfig, QueueMeasure};
use crate::bivariate::{
    expected_h_under_copula, proposition1_bounds, worst_case_density, BivariateCost, BivariateWorstCase, Direction,
};
use crate::divergence::{phi2_gaussian, phi2_of_copula, phi2_two_lag_gaussian, CopulaSpec};
use crate::error::Result;
use crate::processes::{histogram_phi2, Ar2LogIncrementSpec, EmbeddedAr1Spec, EmbeddedMcSpec, PathSampler};
use crate::serial_anova::{
    coefficient_ci, enumeration_oracle, estimate_baseline, first_order_band, monte_carlo_mean, replicate, two_lag_band,
    AnovaConfig, CoefficientEstimate, FnCost, Lag, TrajectoryCost,
};
use crate::stats::{Estimate, Moments};
use crate::stochastics::{norm_quantile, FinitePmf, MarginalDistribution, RngStream, Sampler};

use super::output::{Cell, Table};
use super::spec::{BivariateCostKind, ExperimentSpec, HedgeStudy, QueueStudy, SerialModel};

type Model = (Box<dyn TrajectoryCost>, Box<dyn Sampler>);

fn build_model(model: &SerialModel) -> Result<Model> {
    Ok(match *model {
        SerialModel::Queue(cfg) => (Box::new(queue_cost(cfg)), Box::new(cfg.interarrival())),
        SerialModel::Hedge(cfg) => (Box::new(HedgeCost::new(cfg)), Box::new(cfg.log_increment())),
        SerialModel::Toy { q, horizon } => (
            Box::new(FnCost::new(horizon, |p: &[f64]| p.iter().product())?),
            Box::new(FinitePmf::new(vec![0.0, 1.0], vec![1.0 - q, q])?),
        ),
    })
}

const COEF_COLUMNS: &[&str] = &[
    "coefficient",
    "point",
    "ci_low",
    "ci_high",
    "reps",
    "alpha",
    "w_mean",
    "w_sd",
];

fn coef_row(name: &str, c: &CoefficientEstimate) -> Vec<Cell> {
    vec![
        name.into(),
        c.point.into(),
        c.ci_low.into(),
        c.ci_high.into(),
        c.reps.into(),
        c.alpha.into(),
        c.w_mean.into(),
        c.w_sd.into(),
    ]
}

fn baseline_table(b: &Estimate, samples: usize) -> Table {
    let mut t = Table::new("baseline", &["samples", "mean", "stderr"]);
    t.push(vec![samples.into(), b.value.into(), b.stderr.into()]);
    t
}

fn band_table(baseline: &Estimate, xi1: &CoefficientEstimate, grid: &[f64]) -> Result<Table> {
    let mut t = Table::new(
        "band",
        &[
            "eta",
            "baseline",
            "baseline_se",
            "lower",
            "upper",
            "lower_inner",
            "upper_inner",
            "lower_outer",
            "upper_outer",
            "lower_conservative",
            "upper_conservative",
        ],
    );
    for r in first_order_band(baseline, xi1, grid)? {
        t.push(vec![
            r.eta.into(),
            r.baseline.into(),
            r.baseline_se.into(),
            r.lower.into(),
            r.upper.into(),
            r.lower_inner.into(),
            r.upper_inner.into(),
            r.lower_outer.into(),
            r.upper_outer.into(),
            r.lower_conservative.into(),
            r.upper_conservative.into(),
        ]);
    }
    Ok(t)
}

fn estimate_coefficient<C, M>(
    lag: Lag,
    cost: &C,
    marginal: &M,
    spec: &ExperimentSpec,
    anova: AnovaConfig,
    stream: &RngStream,
) -> Result<CoefficientEstimate>
where
    C: TrajectoryCost + ?Sized,
    M: Sampler + ?Sized,
{
    let samples = replicate(lag, cost, marginal, anova, spec.reps, stream)?;
    coefficient_ci(&samples, spec.alpha)
}

// ---------------------------------------------------------------- bivariate

struct CopulaPoint {
    copula: CopulaSpec,
    phi2: f64,
    clipped_mass: f64,
    mean: Estimate,
    lower: f64,
    upper: f64,
}

fn copula_points(
    cost_kind: BivariateCostKind,
    copulas: &[CopulaSpec],
    grid_size: usize,
    spec: &ExperimentSpec,
    wc: &BivariateWorstCase,
    stream: &RngStream,
) -> Result<Vec<CopulaPoint>> {
    let cost = BivariateCost::quadrature(move |x: f64, y: f64| cost_kind.eval(x, y));
    let u = unit();
    copulas
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let phi2 = phi2_of_copula(c, grid_size)?;
            let mean = expected_h_under_copula(&cost, &u, &u, c, spec.samples, &stream.child(i as u64))?;
            let (lower, upper) = proposition1_bounds(wc, phi2.value)?;
            Ok(CopulaPoint {
                copula: *c,
                phi2: phi2.value,
                clipped_mass: phi2.clipped_mass,
                mean,
                lower,
                upper,
            })
        })
        .collect()
}

fn unit() -> MarginalDistribution {
    MarginalDistribution::uniform(0.0, 1.0).expect("valid")
}

fn worst_case_constants(cost_kind: BivariateCostKind) -> Result<BivariateWorstCase> {
    let cost = BivariateCost::quadrature(move |x: f64, y: f64| cost_kind.eval(x, y));
    BivariateWorstCase::from_cost(&cost, &unit(), &unit())
}

pub(super) fn bivariate_bounds(
    spec: &ExperimentSpec,
    cost_kind: BivariateCostKind,
    copulas: &[CopulaSpec],
    grid_size: usize,
) -> Result<Vec<Table>> {
    let wc = worst_case_constants(cost_kind)?;
    let cost = BivariateCost::quadrature(move |x: f64, y: f64| cost_kind.eval(x, y));
    let u = unit();
    let max_upper = worst_case_density(&cost, &u, &u, 0.0, Direction::Upper)?.max_feasible_eta();
    let max_lower = worst_case_density(&cost, &u, &u, 0.0, Direction::Lower)?.max_feasible_eta();

    let mut bounds = Table::new("bounds", &["eta", "lower", "upper", "lower_attained", "upper_attained"]);
    for eta in spec.eta_grid.values() {
        let (lo, hi) = proposition1_bounds(&wc, eta)?;
        bounds.push(vec![
            eta.into(),
            lo.into(),
            hi.into(),
            (eta <= max_lower).into(),
            (eta <= max_upper).into(),
        ]);
    }
    let mut constants = Table::new(
        "constants",
        &[
            "baseline_mean",
            "residual_variance",
            "residual_sd",
            "max_eta_upper",
            "max_eta_lower",
        ],
    );
    constants.push(vec![
        wc.baseline_mean.into(),
        wc.residual_variance.into(),
        wc.residual_variance.sqrt().into(),
        max_upper.into(),
        max_lower.into(),
    ]);
    let mut tables = vec![bounds, constants];
    if !copulas.is_empty() {
        let mut t = Table::new("copulas", &["family", "param", "phi2", "mean", "stderr"]);
        for p in copula_points(cost_kind, copulas, grid_size, spec, &wc, &RngStream::new(spec.seed))? {
            t.push(vec![
                p.copula.family().name().into(),
                p.copula.param().into(),
                p.phi2.into(),
                p.mean.value.into(),
                p.mean.stderr.into(),
            ]);
        }
        tables.push(t);
    }
    Ok(tables)
}

pub(super) fn copula_compare(
    spec: &ExperimentSpec,
    cost_kind: BivariateCostKind,
    copulas: &[CopulaSpec],
    grid_size: usize,
) -> Result<Vec<Table>> {
    let wc = worst_case_constants(cost_kind)?;
    let mut t = Table::new(
        "copulas",
        &[
            "family",
            "param",
            "kendall_tau",
            "phi2",
            "clipped_mass",
            "mean",
            "stderr",
            "lower",
            "upper",
            "inside",
        ],
    );
    for p in copula_points(cost_kind, copulas, grid_size, spec, &wc, &RngStream::new(spec.seed))? {
        let inside = p.mean.value + 3.0 * p.mean.stderr >= p.lower && p.mean.value - 3.0 * p.mean.stderr <= p.upper;
        t.push(vec![
            p.copula.family().name().into(),
            p.copula.param().into(),
            p.copula.kendall_tau().into(),
            p.phi2.into(),
            p.clipped_mass.into(),
            p.mean.value.into(),
            p.mean.stderr.into(),
            p.lower.into(),
            p.upper.into(),
            inside.into(),
        ]);
    }
    Ok(vec![t])
}

// ---------------------------------------------------------------- serial

pub(super) fn serial_xi1(spec: &ExperimentSpec, model: &SerialModel) -> Result<Vec<Table>> {
    let (cost, marginal) = build_model(model)?;
    let root = RngStream::new(spec.seed);
    let baseline = estimate_baseline(&*cost, &*marginal, spec.samples, &root.child(0))?;
    let samples = replicate(Lag::One, &*cost, &*marginal, spec.anova, spec.reps, &root.child(1))?;
    let xi1 = coefficient_ci(&samples, spec.alpha)?;

    let band = band_table(&baseline, &xi1, &spec.eta_grid.values())?;
    let mut coef = Table::new("coefficient", COEF_COLUMNS);
    coef.push(coef_row("xi1", &xi1));
    let mut reps = Table::new("replications", &["rep", "value", "s_i2", "s_e2"]);
    for (r, e) in samples.iter().enumerate() {
        reps.push(vec![r.into(), e.value.into(), e.s_i2.into(), e.s_e2.into()]);
    }
    Ok(vec![band, coef, baseline_table(&baseline, spec.samples), reps])
}

pub(super) fn serial_2dep(spec: &ExperimentSpec, model: &SerialModel) -> Result<Vec<Table>> {
    let (cost, marginal) = build_model(model)?;
    let root = RngStream::new(spec.seed);
    let baseline = estimate_baseline(&*cost, &*marginal, spec.samples, &root.child(0))?;
    let xi1 = estimate_coefficient(Lag::One, &*cost, &*marginal, spec, spec.anova, &root.child(1))?;
    let coef_s = estimate_coefficient(Lag::Two, &*cost, &*marginal, spec, spec.anova, &root.child(2))?;
    let grid = spec.eta_grid.values();

    let mut band = Table::new(
        "band",
        &[
            "eta1",
            "eta2",
            "baseline",
            "baseline_se",
            "lower",
            "upper",
            "lower_outer",
            "upper_outer",
            "lower_conservative",
            "upper_conservative",
        ],
    );
    for r in two_lag_band(&baseline, &xi1, &coef_s, &grid, &grid)? {
        band.push(vec![
            r.eta1.into(),
            r.eta2.into(),
            r.baseline.into(),
            r.baseline_se.into(),
            r.lower.into(),
            r.upper.into(),
            r.lower_outer.into(),
            r.upper_outer.into(),
            r.lower_conservative.into(),
            r.upper_conservative.into(),
        ]);
    }
    let mut coef = Table::new("coefficients", COEF_COLUMNS);
    coef.push(coef_row("xi1", &xi1));
    coef.push(coef_row("sqrt_var_s", &coef_s));
    Ok(vec![band, coef, baseline_table(&baseline, spec.samples)])
}

// ---------------------------------------------------------------- queue

pub(super) fn queue_experiment(spec: &ExperimentSpec, study: &QueueStudy, queue: &QueueConfig) -> Result<Vec<Table>> {
    let root = RngStream::new(spec.seed);
    match study {
        QueueStudy::HorizonSweep { values } => {
            let cfgs = values
                .iter()
                .map(|&t| queue.with_customer(t))
                .collect::<Result<Vec<_>>>()?;
            queue_sweep(spec, &cfgs, &root)
        }
        QueueStudy::ThresholdSweep { values } => {
            let cfgs = values
                .iter()
                .map(|&b| queue.with_measure(QueueMeasure::TailProbability { threshold: b }))
                .collect::<Result<Vec<_>>>()?;
            queue_sweep(spec, &cfgs, &root)
        }
        QueueStudy::Dependence {
            ar1_beta1,
            mc_a,
            mc_theta,
            pairs,
            bins,
        } => {
            let cfg = queue.with_measure(QueueMeasure::MeanWaiting)?;
            let cost = queue_cost(cfg);
            let target = cfg.interarrival();
            let baseline = estimate_baseline(&cost, &target, spec.samples, &root.child(0))?;
            let xi1 = estimate_coefficient(Lag::One, &cost, &target, spec, spec.anova, &root.child(1))?;

            // (name, param_a, param_b, sampler, exact φ²)
            type Model = (String, f64, f64, Box<dyn PathSampler>, f64);
            let mut models: Vec<Model> = Vec::new();
            for &b in ar1_beta1 {
                let m = EmbeddedAr1Spec::new(0.0, b, 1.0, target)?;
                models.push(("embedded_ar1".into(), b, 0.0, Box::new(m), m.exact_phi2()));
            }
            for &a in mc_a {
                for &theta in mc_theta {
                    let m = EmbeddedMcSpec::new(a, theta, target)?;
                    models.push(("embedded_mc".into(), a, theta, Box::new(m), m.exact_phi2()));
                }
            }
            let mut t = Table::new(
                "comparisons",
                &[
                    "model",
                    "param_a",
                    "param_b",
                    "phi2_exact",
                    "phi2_hist",
                    "phi2_hist_coarse",
                    "mean",
                    "stderr",
                    "lower",
                    "upper",
                    "lower_conservative",
                    "upper_conservative",
                    "inside",
                ],
            );
            let comp = root.child(2);
            for (j, (name, pa, pb, sampler, exact)) in models.iter().enumerate() {
                let s = comp.child(j as u64);
                let hist = histogram_phi2(&**sampler, &target, *pairs, *bins, cfg.customer(), &s.child(1))?;
                let mean = monte_carlo_mean(&cost, spec.samples, &s.child(0), |rng, path| sampler.fill(rng, path))?;
                let row = first_order_band(&baseline, &xi1, &[hist.phi2])?[0];
                let inside = row.lower_conservative <= mean.value && mean.value <= row.upper_conservative;
                t.push(vec![
                    name.as_str().into(),
                    (*pa).into(),
                    (*pb).into(),
                    (*exact).into(),
                    hist.phi2.into(),
                    hist.phi2_coarse.into(),
                    mean.value.into(),
                    mean.stderr.into(),
                    row.lower.into(),
                    row.upper.into(),
                    row.lower_conservative.into(),
                    row.upper_conservative.into(),
                    inside.into(),
                ]);
            }
            let mut coef = Table::new("coefficient", COEF_COLUMNS);
            coef.push(coef_row("xi1", &xi1));
            Ok(vec![
                t,
                band_table(&baseline, &xi1, &spec.eta_grid.values())?,
                coef,
                baseline_table(&baseline, spec.samples),
            ])
        }
    }
}

fn queue_sweep(spec: &ExperimentSpec, cfgs: &[QueueConfig], root: &RngStream) -> Result<Vec<Table>> {
    let mut t = Table::new(
        "sweep",
        &[
            "customer",
            "threshold",
            "point",
            "ci_low",
            "ci_high",
            "reps",
            "w_mean",
            "w_sd",
            "baseline",
            "baseline_se",
        ],
    );
    for (i, cfg) in cfgs.iter().enumerate() {
        let s = root.child(i as u64);
        let cost = queue_cost(*cfg);
        let target = cfg.interarrival();
        let baseline = estimate_baseline(&cost, &target, spec.samples, &s.child(0))?;
        let xi1 = estimate_coefficient(Lag::One, &cost, &target, spec, spec.anova, &s.child(1))?;
        let threshold = match cfg.measure() {
            QueueMeasure::TailProbability { threshold } => threshold,
            QueueMeasure::MeanWaiting => f64::NAN,
        };
        t.push(vec![
            cfg.customer().into(),
            threshold.into(),
            xi1.point.into(),
            xi1.ci_low.into(),
            xi1.ci_high.into(),
            xi1.reps.into(),
            xi1.w_mean.into(),
            xi1.w_sd.into(),
            baseline.value.into(),
            baseline.stderr.into(),
        ]);
    }
    Ok(vec![t])
}

// ---------------------------------------------------------------- hedging

pub(super) fn hedge_experiment(spec: &ExperimentSpec, study: &HedgeStudy, hedge: &HedgeConfig) -> Result<Vec<Table>> {
    let root = RngStream::new(spec.seed);
    let cost = HedgeCost::new(*hedge);
    let marginal = hedge.log_increment();
    let baseline = estimate_baseline(&cost, &marginal, spec.samples, &root.child(0))?;
    let xi1 = estimate_coefficient(Lag::One, &cost, &marginal, spec, spec.anova, &root.child(1))?;
    let coef_s = match study {
        HedgeStudy::Ar1 { .. } => None,
        _ => Some(estimate_coefficient(
            Lag::Two,
            &cost,
            &marginal,
            spec,
            spec.anova,
            &root.child(2),
        )?),
    };

    let mut summary = Table::new("summary", COEF_COLUMNS);
    let base_row = CoefficientEstimate {
        point: baseline.value,
        ci_low: baseline.value - z_half(spec.alpha) * baseline.stderr,
        ci_high: baseline.value + z_half(spec.alpha) * baseline.stderr,
        reps: spec.samples,
        alpha: spec.alpha,
        w_mean: f64::NAN,
        w_sd: f64::NAN,
    };
    summary.push(coef_row("mean_abs_error", &base_row));
    summary.push(coef_row("xi1", &xi1));
    if let Some(c) = &coef_s {
        summary.push(coef_row("sqrt_var_s", c));
    }

    let comparisons = |pairs: &[(f64, f64)]| -> Result<Table> {
        let mut t = Table::new(
            "comparisons",
            &[
                "beta1",
                "beta2",
                "eta1",
                "eta2",
                "mean",
                "stderr",
                "lower",
                "upper",
                "lower_conservative",
                "upper_conservative",
                "inside",
            ],
        );
        let comp = root.child(3);
        for (j, &(b1, b2)) in pairs.iter().enumerate() {
            let ar = Ar2LogIncrementSpec::for_gbm(b1, b2, hedge.mu, hedge.sigma, hedge.dt)?;
            let (r1, r2) = ar.autocorrelations();
            let eta1 = phi2_gaussian(r1);
            let eta2 = if b2 == 0.0 { 0.0 } else { phi2_two_lag_gaussian(r1, r2)? };
            let mean = monte_carlo_mean(&cost, spec.samples, &comp.child(j as u64), |rng, path| {
                ar.fill(rng, path)
            })?;
            let (lower, upper, lc, uc) = match &coef_s {
                Some(s) => {
                    let r = two_lag_band(&baseline, &xi1, s, &[eta1], &[eta2])?[0];
                    (r.lower, r.upper, r.lower_conservative, r.upper_conservative)
                }
                None => {
                    let r = first_order_band(&baseline, &xi1, &[eta1])?[0];
                    (r.lower, r.upper, r.lower_conservative, r.upper_conservative)
                }
            };
            t.push(vec![
                b1.into(),
                b2.into(),
                eta1.into(),
                eta2.into(),
                mean.value.into(),
                mean.stderr.into(),
                lower.into(),
                upper.into(),
                lc.into(),
                uc.into(),
                (lc <= mean.value && mean.value <= uc).into(),
            ]);
        }
        Ok(t)
    };

    Ok(match study {
        HedgeStudy::Baseline => vec![summary],
        HedgeStudy::Ar1 { beta1 } => {
            let pairs: Vec<(f64, f64)> = beta1.iter().map(|&b| (b, 0.0)).collect();
            vec![
                comparisons(&pairs)?,
                band_table(&baseline, &xi1, &spec.eta_grid.values())?,
                summary,
            ]
        }
        HedgeStudy::Ar2 { fixed, grid } => {
            let mut pairs: Vec<(f64, f64)> = grid.iter().map(|&b| (*fixed, b)).collect();
            pairs.extend(grid.iter().map(|&b| (b, *fixed)));
            vec![comparisons(&pairs)?, summary]
        }
    })
}

fn z_half(alpha: f64) -> f64 {
    norm_quantile(1.0 - alpha / 2.0).expect("alpha validated")
}

// ---------------------------------------------------------------- oracle

pub(super) fn oracle_check(
    spec: &ExperimentSpec,
    q: f64,
    horizon1: usize,
    horizon2: usize,
    scaling_outer: &[usize],
) -> Result<Vec<Table>> {
    let pmf = FinitePmf::new(vec![0.0, 1.0], vec![1.0 - q, q])?;
    let product = |p: &[f64]| p.iter().product::<f64>();
    let root = RngStream::new(spec.seed);

    let mut t = Table::new(
        "unbiasedness",
        &["algorithm", "horizon", "oracle", "mean", "stderr", "z", "within_3se"],
    );
    for (idx, (lag, horizon)) in [(Lag::One, horizon1), (Lag::Two, horizon2)].into_iter().enumerate() {
        let oracle = enumeration_oracle(&pmf, product, horizon)?;
        let target = match lag {
            Lag::One => oracle.var_r,
            Lag::Two => oracle.var_s,
        };
        let cost = FnCost::new(horizon, product)?;
        let w = replicate(lag, &cost, &pmf, spec.anova, spec.reps, &root.child(idx as u64))?;
        let m = Moments::from_slice(&w.iter().map(|e| e.value).collect::<Vec<_>>());
        let z = (m.mean - target) / m.stderr();
        t.push(vec![
            match lag {
                Lag::One => "algorithm1",
                Lag::Two => "algorithm2",
            }
            .into(),
            horizon.into(),
            target.into(),
            m.mean.into(),
            m.stderr().into(),
            z.into(),
            (z.abs() <= 3.0).into(),
        ]);
    }

    let mut s = Table::new(
        "scaling",
        &["outer", "inner", "reps", "mean", "variance", "variance_ratio"],
    );
    let cost = FnCost::new(horizon1, product)?;
    let mut first = None;
    for (i, &k) in scaling_outer.iter().enumerate() {
        let cfg = AnovaConfig::new(k, spec.anova.n())?;
        let w = replicate(Lag::One, &cost, &pmf, cfg, spec.reps, &root.child(10 + i as u64))?;
        let m = Moments::from_slice(&w.iter().map(|e| e.value).collect::<Vec<_>>());
        let var = m.variance();
        let base = *first.get_or_insert(var);
        s.push(vec![
            k.into(),
            spec.anova.n().into(),
            spec.reps.into(),
            m.mean.into(),
            var.into(),
            (base / var).into(),
        ]);
    }
    Ok(vec![t, s])
}
