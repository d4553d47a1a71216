//! C ABI for `serialdep`.
//!
//! Every function returns an [`SdStatus`]; results come back through out
//! pointers. On failure, [`sd_last_error_message`] describes the error for
//! the calling thread. Handles are opaque and must be released with their
//! `*_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use serialdep::apps::{queue_cost, HedgeConfig, HedgeCost, QueueConfig, QueueMeasure};
use serialdep::divergence::{phi2_coefficient, phi2_of_copula, CopulaFamily, CopulaSpec, DiscreteJoint};
use serialdep::serial_anova::{
    algorithm1_sample, algorithm2_sample, coefficient_ci_from_values, enumeration_oracle, estimate_baseline,
    first_order_band, replicate, two_lag_band, AnovaConfig, CoefficientEstimate, Lag, TrajectoryCost,
};
use serialdep::stats::Estimate;
use serialdep::stochastics::{
    norm_quantile, student_t_quantile, FinitePmf, MarginalDistribution, RngStream, Sampler, StreamRng,
};
use serialdep::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdStatus {
    SdOk = 0,
    SdInvalidArgument = 1,
    SdConfigError = 2,
    SdNumericError = 3,
    SdNullPointer = 4,
    SdPanic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdCopulaFamily {
    SdGaussian = 0,
    SdGumbel = 1,
    SdClayton = 2,
    SdAmh = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdQueueMeasure {
    SdTailProbability = 0,
    SdMeanWaiting = 1,
}

/// One replication of the nested ANOVA estimator.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SdAnovaSample {
    pub value: f64,
    pub s_i2: f64,
    pub s_e2: f64,
}

/// Delta-method interval for a coefficient `√Var₀(·)`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SdCoefficient {
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub alpha: f64,
    pub w_mean: f64,
    pub w_sd: f64,
    pub reps: usize,
}

/// One grid point of a worst-case band.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SdBandRow {
    pub eta1: f64,
    pub eta2: f64,
    pub lower: f64,
    pub upper: f64,
    pub lower_outer: f64,
    pub upper_outer: f64,
    pub lower_conservative: f64,
    pub upper_conservative: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SdOracle {
    pub e0h: f64,
    pub var_r: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub var_s: f64,
}

/// Cost callback: `path` holds `len` inputs; must be safe to call from
/// several threads at once.
pub type SdCostFn = Option<unsafe extern "C" fn(path: *const f64, len: usize, user_data: *mut c_void) -> f64>;

/// A baseline marginal law.
pub struct SdMarginal {
    inner: Marginal,
}

enum Marginal {
    Continuous(MarginalDistribution),
    Finite(FinitePmf),
}

impl Sampler for Marginal {
    fn draw(&self, rng: &mut StreamRng) -> f64 {
        match self {
            Marginal::Continuous(m) => m.draw(rng),
            Marginal::Finite(p) => p.draw(rng),
        }
    }
}

/// A trajectory cost `h(X_1, …, X_T)`.
pub struct SdCost {
    inner: Box<dyn TrajectoryCost + Send>,
    baseline: Option<MarginalDistribution>,
}

struct CallbackCost {
    horizon: usize,
    f: unsafe extern "C" fn(*const f64, usize, *mut c_void) -> f64,
    user_data: *mut c_void,
}

// The caller promises the callback and its user data are thread-safe.
unsafe impl Send for CallbackCost {}
unsafe impl Sync for CallbackCost {}

impl TrajectoryCost for CallbackCost {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn evaluate(&self, path: &[f64], _aux: &mut StreamRng) -> f64 {
        unsafe { (self.f)(path.as_ptr(), path.len(), self.user_data) }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Null(&'static str),
    Invalid(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn status_of(e: &Error) -> SdStatus {
    match e {
        Error::Config(_) | Error::Io(_) | Error::Json(_) => SdStatus::SdConfigError,
        _ if e.exit_code() == 3 => SdStatus::SdNumericError,
        _ => SdStatus::SdInvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SdStatus::SdOk
        }
        Ok(Err(Failure::Null(name))) => {
            set_error(format!("null pointer passed for {name}"));
            SdStatus::SdNullPointer
        }
        Ok(Err(Failure::Invalid(msg))) => {
            set_error(msg);
            SdStatus::SdInvalidArgument
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            SdStatus::SdPanic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(name))
}

unsafe fn input<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(name))
}

unsafe fn array<'a, T>(p: *const T, len: usize, name: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn array_mut<'a, T>(p: *mut T, len: usize, name: &'static str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

fn lag_of(lag: u32) -> Result<Lag, Failure> {
    match lag {
        1 => Ok(Lag::One),
        2 => Ok(Lag::Two),
        other => Err(Failure::Invalid(format!("lag must be 1 or 2, got {other}"))),
    }
}

fn coefficient_of(c: &SdCoefficient) -> CoefficientEstimate {
    CoefficientEstimate {
        point: c.point,
        ci_low: c.ci_low,
        ci_high: c.ci_high,
        reps: c.reps,
        alpha: c.alpha,
        w_mean: c.w_mean,
        w_sd: c.w_sd,
    }
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn sd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Standard normal quantile.
///
/// # Safety
/// `result` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sd_norm_quantile(p: f64, result: *mut f64) -> SdStatus {
    guard(|| {
        *out(result, "result")? = norm_quantile(p)?;
        Ok(())
    })
}

/// Student-t quantile with `df` degrees of freedom.
///
/// # Safety
/// `result` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sd_student_t_quantile(p: f64, df: u64, result: *mut f64) -> SdStatus {
    guard(|| {
        *out(result, "result")? = student_t_quantile(p, df)?;
        Ok(())
    })
}

/// φ² of a `rows × cols` joint pmf stored row-major.
///
/// # Safety
/// `pmf` must point to `rows * cols` readable doubles; `result` must be
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sd_phi2_discrete(rows: usize, cols: usize, pmf: *const f64, result: *mut f64) -> SdStatus {
    guard(|| {
        let cells = rows
            .checked_mul(cols)
            .ok_or_else(|| Failure::Invalid("table too large".into()))?;
        let p = array(pmf, cells, "pmf")?;
        let joint = DiscreteJoint::new(rows, cols, p.to_vec())?;
        *out(result, "result")? = phi2_coefficient(&joint);
        Ok(())
    })
}

/// φ² of a copula by clipped tensor quadrature, with the clipped mass.
///
/// # Safety
/// `value` and `clipped_mass` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sd_copula_phi2(
    family: SdCopulaFamily,
    param: f64,
    grid_size: usize,
    value: *mut f64,
    clipped_mass: *mut f64,
) -> SdStatus {
    guard(|| {
        let family = match family {
            SdCopulaFamily::SdGaussian => CopulaFamily::Gaussian,
            SdCopulaFamily::SdGumbel => CopulaFamily::Gumbel,
            SdCopulaFamily::SdClayton => CopulaFamily::Clayton,
            SdCopulaFamily::SdAmh => CopulaFamily::Amh,
        };
        let r = phi2_of_copula(&CopulaSpec::new(family, param)?, grid_size)?;
        let v = out(value, "value")?;
        let c = out(clipped_mass, "clipped_mass")?;
        *v = r.value;
        *c = r.clipped_mass;
        Ok(())
    })
}

fn store<T>(handle: *mut *mut T, value: T) -> Result<(), Failure> {
    if handle.is_null() {
        return Err(Failure::Null("handle"));
    }
    unsafe { *handle = Box::into_raw(Box::new(value)) };
    Ok(())
}

/// Uniform law on `[a, b]`.
///
/// # Safety
/// `handle` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sd_marginal_uniform(a: f64, b: f64, handle: *mut *mut SdMarginal) -> SdStatus {
    guard(|| {
        let m = MarginalDistribution::uniform(a, b)?;
        store(
            handle,
            SdMarginal {
                inner: Marginal::Continuous(m),
            },
        )
    })
}

/// Exponential law with the given rate.
///
/// # Safety
/// `handle` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sd_marginal_exponential(rate: f64, handle: *mut *mut SdMarginal) -> SdStatus {
    guard(|| {
        let m = MarginalDistribution::exponential(rate)?;
        store(
            handle,
            SdMarginal {
                inner: Marginal::Continuous(m),
            },
        )
    })
}

/// Normal law with the given mean and variance.
///
/// # Safety
/// `handle` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sd_marginal_normal(mean: f64, variance: f64, handle: *mut *mut SdMarginal) -> SdStatus {
    guard(|| {
        let m = MarginalDistribution::normal(mean, variance)?;
        store(
            handle,
            SdMarginal {
                inner: Marginal::Continuous(m),
            },
        )
    })
}

/// Finite law on `values` with probabilities `probs`, both of length `len`.
///
/// # Safety
/// `values` and `probs` must point to `len` readable doubles; `handle` must
/// be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sd_marginal_finite(
    values: *const f64,
    probs: *const f64,
    len: usize,
    handle: *mut *mut SdMarginal,
) -> SdStatus {
    guard(|| {
        let v = array(values, len, "values")?;
        let p = array(probs, len, "probs")?;
        let pmf = FinitePmf::new(v.to_vec(), p.to_vec())?;
        store(
            handle,
            SdMarginal {
                inner: Marginal::Finite(pmf),
            },
        )
    })
}

/// Releases a marginal; NULL is ignored.
///
/// # Safety
/// `handle` must come from an `sd_marginal_*` constructor and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn sd_marginal_free(handle: *mut SdMarginal) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// M/M/1 queue cost over the first `customer` interarrival times.
///
/// # Safety
/// `handle` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sd_cost_queue(
    arrival_rate: f64,
    service_rate: f64,
    customer: usize,
    measure: SdQueueMeasure,
    threshold: f64,
    handle: *mut *mut SdCost,
) -> SdStatus {
    guard(|| {
        let measure = match measure {
            SdQueueMeasure::SdTailProbability => QueueMeasure::TailProbability { threshold },
            SdQueueMeasure::SdMeanWaiting => QueueMeasure::MeanWaiting,
        };
        let cfg = QueueConfig::new(arrival_rate, service_rate, customer, measure)?;
        store(
            handle,
            SdCost {
                inner: Box::new(queue_cost(cfg)),
                baseline: Some(cfg.interarrival()),
            },
        )
    })
}

/// `|H_e|` of discrete delta hedging over the `maturity/dt` log-increments.
///
/// # Safety
/// `handle` must be valid for writes.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn sd_cost_hedge(
    maturity: f64,
    dt: f64,
    x0: f64,
    strike: f64,
    mu: f64,
    sigma: f64,
    rate: f64,
    handle: *mut *mut SdCost,
) -> SdStatus {
    guard(|| {
        let cfg = HedgeConfig::new(maturity, dt, x0, strike, mu, sigma, rate)?;
        store(
            handle,
            SdCost {
                inner: Box::new(HedgeCost::new(cfg)),
                baseline: Some(cfg.log_increment()),
            },
        )
    })
}

/// A cost computed by `f` on paths of length `horizon`. `f` may be called
/// concurrently from several threads.
///
/// # Safety
/// `f` must stay callable, and `user_data` valid, until the handle is freed;
/// `handle` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sd_cost_callback(
    horizon: usize,
    f: SdCostFn,
    user_data: *mut c_void,
    handle: *mut *mut SdCost,
) -> SdStatus {
    guard(|| {
        let f = f.ok_or(Failure::Null("f"))?;
        if horizon == 0 {
            return Err(Failure::Invalid("horizon must be positive".into()));
        }
        store(
            handle,
            SdCost {
                inner: Box::new(CallbackCost { horizon, f, user_data }),
                baseline: None,
            },
        )
    })
}

/// The baseline input law of a built-in cost (interarrival times or
/// log-increments). Callback costs have none.
///
/// # Safety
/// `cost` must be a live cost handle; `handle` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sd_cost_baseline_marginal(cost: *const SdCost, handle: *mut *mut SdMarginal) -> SdStatus {
    guard(|| {
        let c = input(cost, "cost")?;
        let m = c
            .baseline
            .ok_or_else(|| Failure::Invalid("callback costs have no built-in baseline".into()))?;
        store(
            handle,
            SdMarginal {
                inner: Marginal::Continuous(m),
            },
        )
    })
}

/// Input length `T` of a cost.
///
/// # Safety
/// `cost` must be a live cost handle; `result` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sd_cost_horizon(cost: *const SdCost, result: *mut usize) -> SdStatus {
    guard(|| {
        *out(result, "result")? = input(cost, "cost")?.inner.horizon();
        Ok(())
    })
}

/// Releases a cost; NULL is ignored.
///
/// # Safety
/// `handle` must come from an `sd_cost_*` constructor and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn sd_cost_free(handle: *mut SdCost) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Monte Carlo `E₀[h]` under i.i.d. inputs.
///
/// # Safety
/// Handles must be live; `mean` and `stderr` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sd_baseline_mean(
    cost: *const SdCost,
    marginal: *const SdMarginal,
    samples: usize,
    seed: u64,
    mean: *mut f64,
    stderr: *mut f64,
) -> SdStatus {
    guard(|| {
        let c = input(cost, "cost")?;
        let m = input(marginal, "marginal")?;
        let e: Estimate = estimate_baseline(&*c.inner, &m.inner, samples, &RngStream::new(seed))?;
        *out(mean, "mean")? = e.value;
        *out(stderr, "stderr")? = e.stderr;
        Ok(())
    })
}

/// One replication of the nested ANOVA estimator of `Var₀(R)` (`lag = 1`)
/// or `Var₀(S)` (`lag = 2`), on substream `replication` of `seed`.
///
/// # Safety
/// Handles must be live; `result` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sd_anova_sample(
    cost: *const SdCost,
    marginal: *const SdMarginal,
    lag: u32,
    outer: usize,
    inner: usize,
    seed: u64,
    replication: u64,
    result: *mut SdAnovaSample,
) -> SdStatus {
    guard(|| {
        let c = input(cost, "cost")?;
        let m = input(marginal, "marginal")?;
        let cfg = AnovaConfig::new(outer, inner)?;
        let stream = RngStream::new(seed).child(replication);
        let e = match lag_of(lag)? {
            Lag::One => algorithm1_sample(&*c.inner, &m.inner, cfg, &stream)?,
            Lag::Two => algorithm2_sample(&*c.inner, &m.inner, cfg, &stream)?,
        };
        *out(result, "result")? = SdAnovaSample {
            value: e.value,
            s_i2: e.s_i2,
            s_e2: e.s_e2,
        };
        Ok(())
    })
}

/// `reps` replications of [`sd_anova_sample`] (replications `0..reps`),
/// followed by the delta-method interval at level `1 − alpha`.
///
/// # Safety
/// Handles must be live; `values` must have room for `reps` doubles (or be
/// NULL); `coefficient` must be valid for writes.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn sd_estimate_coefficient(
    cost: *const SdCost,
    marginal: *const SdMarginal,
    lag: u32,
    outer: usize,
    inner: usize,
    reps: usize,
    seed: u64,
    alpha: f64,
    values: *mut f64,
    coefficient: *mut SdCoefficient,
) -> SdStatus {
    guard(|| {
        let c = input(cost, "cost")?;
        let m = input(marginal, "marginal")?;
        let cfg = AnovaConfig::new(outer, inner)?;
        let samples = replicate(lag_of(lag)?, &*c.inner, &m.inner, cfg, reps, &RngStream::new(seed))?;
        let w: Vec<f64> = samples.iter().map(|e| e.value).collect();
        if !values.is_null() {
            array_mut(values, reps, "values")?.copy_from_slice(&w);
        }
        let ci = coefficient_ci_from_values(&w, alpha)?;
        *out(coefficient, "coefficient")? = SdCoefficient {
            point: ci.point,
            ci_low: ci.ci_low,
            ci_high: ci.ci_high,
            alpha: ci.alpha,
            w_mean: ci.w_mean,
            w_sd: ci.w_sd,
            reps: ci.reps,
        };
        Ok(())
    })
}

/// Delta-method interval from `len` unbiased variance samples.
///
/// # Safety
/// `values` must point to `len` readable doubles; `coefficient` must be
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sd_coefficient_ci(
    values: *const f64,
    len: usize,
    alpha: f64,
    coefficient: *mut SdCoefficient,
) -> SdStatus {
    guard(|| {
        let ci = coefficient_ci_from_values(array(values, len, "values")?, alpha)?;
        *out(coefficient, "coefficient")? = SdCoefficient {
            point: ci.point,
            ci_low: ci.ci_low,
            ci_high: ci.ci_high,
            alpha: ci.alpha,
            w_mean: ci.w_mean,
            w_sd: ci.w_sd,
            reps: ci.reps,
        };
        Ok(())
    })
}

/// First-order band `baseline ± Ξ₁√η` over `len` budgets; `eta2` is 0.
///
/// # Safety
/// `xi1` must be readable, `etas` must hold `len` doubles and `rows` must
/// have room for `len` rows.
#[no_mangle]
pub unsafe extern "C" fn sd_first_order_band(
    baseline: f64,
    baseline_se: f64,
    xi1: *const SdCoefficient,
    etas: *const f64,
    len: usize,
    rows: *mut SdBandRow,
) -> SdStatus {
    guard(|| {
        let b = Estimate {
            value: baseline,
            stderr: baseline_se,
        };
        let band = first_order_band(&b, &coefficient_of(input(xi1, "xi1")?), array(etas, len, "etas")?)?;
        for (dst, r) in array_mut(rows, len, "rows")?.iter_mut().zip(band) {
            *dst = SdBandRow {
                eta1: r.eta,
                eta2: 0.0,
                lower: r.lower,
                upper: r.upper,
                lower_outer: r.lower_outer,
                upper_outer: r.upper_outer,
                lower_conservative: r.lower_conservative,
                upper_conservative: r.upper_conservative,
            };
        }
        Ok(())
    })
}

/// Two-lag band `baseline ± (Ξ₁√η₁ + √Var₀(S)·√η₂)` over the product of the
/// grids, `eta1` outermost.
///
/// # Safety
/// Coefficient pointers must be readable, the grids must hold `len1` and
/// `len2` doubles and `rows` must have room for `len1 * len2` rows.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn sd_two_lag_band(
    baseline: f64,
    baseline_se: f64,
    xi1: *const SdCoefficient,
    coef_s: *const SdCoefficient,
    eta1: *const f64,
    len1: usize,
    eta2: *const f64,
    len2: usize,
    rows: *mut SdBandRow,
) -> SdStatus {
    guard(|| {
        let b = Estimate {
            value: baseline,
            stderr: baseline_se,
        };
        let band = two_lag_band(
            &b,
            &coefficient_of(input(xi1, "xi1")?),
            &coefficient_of(input(coef_s, "coef_s")?),
            array(eta1, len1, "eta1")?,
            array(eta2, len2, "eta2")?,
        )?;
        let n = len1
            .checked_mul(len2)
            .ok_or_else(|| Failure::Invalid("grid too large".into()))?;
        for (dst, r) in array_mut(rows, n, "rows")?.iter_mut().zip(band) {
            *dst = SdBandRow {
                eta1: r.eta1,
                eta2: r.eta2,
                lower: r.lower,
                upper: r.upper,
                lower_outer: r.lower_outer,
                upper_outer: r.upper_outer,
                lower_conservative: r.lower_conservative,
                upper_conservative: r.upper_conservative,
            };
        }
        Ok(())
    })
}

/// Exact `E₀h`, `Var₀(R)`, `Ξ₁`, `Ξ₂` and `Var₀(S)` by enumerating all
/// `len^horizon` outcomes of an i.i.d. finite input.
///
/// # Safety
/// `values` and `probs` must hold `len` doubles; `f` is called on this
/// thread only; `result` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sd_enumeration_oracle(
    values: *const f64,
    probs: *const f64,
    len: usize,
    f: SdCostFn,
    user_data: *mut c_void,
    horizon: usize,
    result: *mut SdOracle,
) -> SdStatus {
    guard(|| {
        let f = f.ok_or(Failure::Null("f"))?;
        let pmf = FinitePmf::new(
            array(values, len, "values")?.to_vec(),
            array(probs, len, "probs")?.to_vec(),
        )?;
        let o = enumeration_oracle(&pmf, |p: &[f64]| unsafe { f(p.as_ptr(), p.len(), user_data) }, horizon)?;
        *out(result, "result")? = SdOracle {
            e0h: o.e0h,
            var_r: o.var_r,
            xi1: o.xi1(),
            xi2: o.xi2,
            var_s: o.var_s,
        };
        Ok(())
    })
}
