use std::ffi::{c_void, CStr};
use std::process::Command;
use std::ptr;

use serialdep_ffi::*;

fn last_error() -> String {
    let p = sd_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe extern "C" fn product(path: *const f64, len: usize, _: *mut c_void) -> f64 {
    std::slice::from_raw_parts(path, len).iter().product()
}

unsafe extern "C" fn scaled_sum(path: *const f64, len: usize, data: *mut c_void) -> f64 {
    let k = *(data as *const f64);
    k * std::slice::from_raw_parts(path, len).iter().sum::<f64>()
}

#[test]
fn quantiles_and_status_codes() {
    let mut q = 0.0;
    unsafe {
        assert_eq!(sd_norm_quantile(0.975, &mut q), SdStatus::SdOk);
        assert!((q - 1.959963984540054).abs() < 1e-12);
        assert!(sd_last_error_message().is_null());
        assert_eq!(sd_student_t_quantile(0.975, 19, &mut q), SdStatus::SdOk);
        assert!((q - 2.093024054408263).abs() < 1e-9);
        assert_eq!(sd_norm_quantile(1.5, &mut q), SdStatus::SdInvalidArgument);
        assert!(!last_error().is_empty());
        assert_eq!(sd_norm_quantile(0.5, ptr::null_mut()), SdStatus::SdNullPointer);
        assert!(last_error().contains("result"));
    }
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(sd_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn discrete_phi2_of_a_known_table() {
    // P = [[0.4, 0.1], [0.1, 0.4]]: φ² = Σ p²/(p_i p_j) − 1 = 0.36
    let pmf = [0.4, 0.1, 0.1, 0.4];
    let mut v = 0.0;
    unsafe {
        assert_eq!(sd_phi2_discrete(2, 2, pmf.as_ptr(), &mut v), SdStatus::SdOk);
        assert!((v - 0.36).abs() < 1e-14);
        let bad = [0.5, 0.5, 0.5, 0.5];
        assert_ne!(sd_phi2_discrete(2, 2, bad.as_ptr(), &mut v), SdStatus::SdOk);
        assert_eq!(sd_phi2_discrete(2, 2, ptr::null(), &mut v), SdStatus::SdNullPointer);
    }
}

#[test]
fn gaussian_copula_phi2_matches_closed_form() {
    let (mut v, mut clipped) = (0.0, 0.0);
    let rho: f64 = 0.4;
    unsafe {
        assert_eq!(
            sd_copula_phi2(SdCopulaFamily::SdGaussian, rho, 200, &mut v, &mut clipped),
            SdStatus::SdOk
        );
    }
    let want = rho * rho / (1.0 - rho * rho);
    // the clipped corners lose a little mass
    assert!((v - want).abs() < 5e-4, "{v} vs {want}");
    assert!((0.0..1e-3).contains(&clipped));
    unsafe {
        assert_eq!(
            sd_copula_phi2(SdCopulaFamily::SdClayton, -3.0, 50, &mut v, &mut clipped),
            SdStatus::SdInvalidArgument
        );
    }
}

#[test]
fn marginal_constructors_validate() {
    let mut m: *mut SdMarginal = ptr::null_mut();
    unsafe {
        assert_eq!(sd_marginal_uniform(0.0, 1.0, &mut m), SdStatus::SdOk);
        assert!(!m.is_null());
        sd_marginal_free(m);
        assert_eq!(sd_marginal_exponential(-1.0, &mut m), SdStatus::SdInvalidArgument);
        assert_eq!(sd_marginal_normal(0.0, 1.0, ptr::null_mut()), SdStatus::SdNullPointer);
        let (v, p) = ([0.0, 1.0], [0.2, 0.9]);
        assert_ne!(sd_marginal_finite(v.as_ptr(), p.as_ptr(), 2, &mut m), SdStatus::SdOk);
        sd_marginal_free(ptr::null_mut());
        sd_cost_free(ptr::null_mut());
    }
}

#[test]
fn enumeration_oracle_through_a_callback() {
    // h = x1 x2 x3 on {0,1}, P(1) = q: Var R = 4q²(q(1−q))², Var S = q(q(1−q))²
    let q = 0.7;
    let (v, p) = ([0.0, 1.0], [1.0 - q, q]);
    let mut o = SdOracle::default();
    unsafe {
        let s = sd_enumeration_oracle(v.as_ptr(), p.as_ptr(), 2, Some(product), ptr::null_mut(), 3, &mut o);
        assert_eq!(s, SdStatus::SdOk);
    }
    let pq: f64 = q * (1.0 - q);
    assert!((o.e0h - q.powi(3)).abs() < 1e-14);
    assert!((o.var_r - 4.0 * q * q * pq * pq).abs() < 1e-14);
    assert!((o.xi1 - o.var_r.sqrt()).abs() < 1e-15);
    assert!((o.var_s - q * pq * pq).abs() < 1e-14);
    unsafe {
        let s = sd_enumeration_oracle(v.as_ptr(), p.as_ptr(), 2, None, ptr::null_mut(), 3, &mut o);
        assert_eq!(s, SdStatus::SdNullPointer);
    }
}

#[test]
fn callback_cost_drives_the_estimator() {
    // separable cost: Var R = 0, so the replications average to zero
    let k = 3.0f64;
    let mut cost: *mut SdCost = ptr::null_mut();
    let mut m: *mut SdMarginal = ptr::null_mut();
    let mut coef = SdCoefficient::default();
    let mut w = vec![0.0; 200];
    unsafe {
        let data = &k as *const f64 as *mut c_void;
        assert_eq!(sd_cost_callback(4, Some(scaled_sum), data, &mut cost), SdStatus::SdOk);
        let mut t = 0;
        assert_eq!(sd_cost_horizon(cost, &mut t), SdStatus::SdOk);
        assert_eq!(t, 4);
        assert_eq!(sd_cost_baseline_marginal(cost, &mut m), SdStatus::SdInvalidArgument);
        assert_eq!(sd_marginal_uniform(0.0, 1.0, &mut m), SdStatus::SdOk);
        let s = sd_estimate_coefficient(cost, m, 1, 4, 4, w.len(), 5, 0.05, w.as_mut_ptr(), &mut coef);
        // W̄ may be negative here, which is reported as a numeric error
        assert!(matches!(s, SdStatus::SdOk | SdStatus::SdNumericError), "{s:?}");
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        let sd = (w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (w.len() - 1) as f64).sqrt();
        assert!(mean.abs() < 4.0 * sd / (w.len() as f64).sqrt());
        sd_marginal_free(m);
        sd_cost_free(cost);
    }
}

#[test]
fn anova_sample_is_reproducible_and_checks_lag() {
    let mut cost: *mut SdCost = ptr::null_mut();
    let mut m: *mut SdMarginal = ptr::null_mut();
    let (mut a, mut b) = (SdAnovaSample::default(), SdAnovaSample::default());
    unsafe {
        assert_eq!(
            sd_cost_queue(0.8, 1.0, 10, SdQueueMeasure::SdMeanWaiting, 0.0, &mut cost),
            SdStatus::SdOk
        );
        assert_eq!(sd_cost_baseline_marginal(cost, &mut m), SdStatus::SdOk);
        for lag in [1, 2] {
            assert_eq!(sd_anova_sample(cost, m, lag, 4, 3, 9, 2, &mut a), SdStatus::SdOk);
            assert_eq!(sd_anova_sample(cost, m, lag, 4, 3, 9, 2, &mut b), SdStatus::SdOk);
            assert_eq!(a.value.to_bits(), b.value.to_bits());
            assert!(a.s_i2 >= 0.0 && a.s_e2 >= 0.0);
        }
        assert_eq!(
            sd_anova_sample(cost, m, 3, 4, 3, 9, 2, &mut a),
            SdStatus::SdInvalidArgument
        );
        assert_eq!(sd_anova_sample(cost, m, 1, 1, 3, 9, 2, &mut a), SdStatus::SdConfigError);
        sd_marginal_free(m);
        sd_cost_free(cost);
    }
}

#[test]
fn hedge_cost_constructor() {
    let mut cost: *mut SdCost = ptr::null_mut();
    let mut t = 0;
    unsafe {
        assert_eq!(
            sd_cost_hedge(1.0, 0.01, 100.0, 100.0, 0.1, 0.2, 0.05, &mut cost),
            SdStatus::SdOk
        );
        sd_cost_horizon(cost, &mut t);
        assert_eq!(t, 100);
        sd_cost_free(cost);
        assert_eq!(
            sd_cost_hedge(1.0, 0.3, 100.0, 100.0, 0.1, 0.2, 0.05, &mut cost),
            SdStatus::SdConfigError
        );
    }
}

#[test]
fn coefficient_interval_and_bands() {
    let w = [4.0, 5.0, 6.0, 5.0];
    let mut c = SdCoefficient::default();
    unsafe {
        assert_eq!(sd_coefficient_ci(w.as_ptr(), w.len(), 0.05, &mut c), SdStatus::SdOk);
    }
    assert!((c.point - 5f64.sqrt()).abs() < 1e-14);
    assert!(c.ci_low < c.point && c.point < c.ci_high);
    assert_eq!(c.reps, 4);

    let etas = [0.0, 0.01, 0.04];
    let mut rows = [SdBandRow::default(); 3];
    unsafe {
        assert_eq!(
            sd_first_order_band(1.0, 0.0, &c, etas.as_ptr(), 3, rows.as_mut_ptr()),
            SdStatus::SdOk
        );
    }
    for (r, eta) in rows.iter().zip(etas) {
        assert_eq!(r.eta1, eta);
        assert!((r.upper - (1.0 + c.point * eta.sqrt())).abs() < 1e-14);
        assert!((r.lower - (1.0 - c.point * eta.sqrt())).abs() < 1e-14);
    }

    let e2 = [0.0, 0.01];
    let mut grid = [SdBandRow::default(); 6];
    unsafe {
        let s = sd_two_lag_band(1.0, 0.0, &c, &c, etas.as_ptr(), 3, e2.as_ptr(), 2, grid.as_mut_ptr());
        assert_eq!(s, SdStatus::SdOk);
    }
    let last = grid[5];
    assert_eq!((last.eta1, last.eta2), (0.04, 0.01));
    assert!((last.upper - (1.0 + c.point * (0.2 + 0.1))).abs() < 1e-14);
    unsafe {
        let s = sd_first_order_band(1.0, 0.0, ptr::null(), etas.as_ptr(), 3, rows.as_mut_ptr());
        assert_eq!(s, SdStatus::SdNullPointer);
    }
}

#[test]
fn baseline_mean_of_the_queue() {
    let mut cost: *mut SdCost = ptr::null_mut();
    let mut m: *mut SdMarginal = ptr::null_mut();
    let (mut mean, mut se) = (0.0, 0.0);
    unsafe {
        sd_cost_queue(0.8, 1.0, 30, SdQueueMeasure::SdTailProbability, 2.0, &mut cost);
        sd_cost_baseline_marginal(cost, &mut m);
        assert_eq!(
            sd_baseline_mean(cost, m, 200_000, 3, &mut mean, &mut se),
            SdStatus::SdOk
        );
        sd_marginal_free(m);
        sd_cost_free(cost);
    }
    assert!((mean - 0.48).abs() < 0.01, "{mean} ± {se}");
}

#[test]
fn header_compiles_as_c() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let Ok(status) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(format!("{dir}/include"))
        .arg(format!("{dir}/tests/c/usage.c"))
        .status()
    else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(status.success());
}
