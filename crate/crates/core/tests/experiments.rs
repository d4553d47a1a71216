use proptest::prelude::*;

use serialdep::divergence::{CopulaFamily, CopulaSpec};
use serialdep::experiment::{
    compute, format_number, run_experiment, BivariateCostKind, EtaGrid, ExperimentKind, ExperimentSpec, OutputFormat,
    SerialModel,
};
use serialdep::serial_anova::AnovaConfig;

fn spec(kind: ExperimentKind) -> ExperimentSpec {
    ExperimentSpec {
        kind,
        seed: 5,
        anova: AnovaConfig::new(4, 4).unwrap(),
        reps: 6,
        alpha: 0.05,
        eta_grid: EtaGrid::new(0.0, 0.04, 0.01).unwrap(),
        samples: 2000,
        paper_scale: false,
        format: OutputFormat::Csv,
    }
}

fn bounds() -> ExperimentKind {
    ExperimentKind::BivariateBounds {
        cost: BivariateCostKind::X2y2,
        copulas: vec![CopulaSpec::new(CopulaFamily::Gaussian, 0.3).unwrap()],
        grid_size: 64,
    }
}

#[test]
fn bounds_widen_with_eta() {
    let r = compute(&spec(bounds())).unwrap();
    let t = r.table("bounds").unwrap();
    let mut last = 0.0;
    for i in 0..5 {
        let width = t.num(i, "upper").unwrap() - t.num(i, "lower").unwrap();
        assert!(width >= last - 1e-12);
        last = width;
    }
    assert_eq!(t.num(0, "upper"), t.num(0, "lower"));
}

#[test]
fn toy_band_is_centred_on_baseline() {
    let r = compute(&spec(ExperimentKind::SerialXi1 {
        model: SerialModel::Toy { q: 0.7, horizon: 3 },
    }))
    .unwrap();
    let band = r.table("band").unwrap();
    let base = r.table("baseline").unwrap().num(0, "mean").unwrap();
    for i in 0..5 {
        let (lo, hi) = (band.num(i, "lower").unwrap(), band.num(i, "upper").unwrap());
        assert!(((lo + hi) / 2.0 - base).abs() < 1e-12);
    }
    assert_eq!(r.table("replications").unwrap().rows.len(), 6);
}

#[test]
fn invalid_spec_is_rejected_before_running() {
    let mut s = spec(bounds());
    s.alpha = 1.5;
    assert!(compute(&s).is_err());
    s.alpha = 0.05;
    s.reps = 1;
    assert!(compute(&s).is_err());
}

#[test]
fn run_experiment_writes_every_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.json");
    let mut s = spec(bounds());
    s.format = OutputFormat::Json;
    let (report, written) = run_experiment(&s, Some(&out)).unwrap();
    assert_eq!(written.len(), 1);
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    for t in &report.tables {
        assert_eq!(json["tables"][&t.name].as_array().unwrap().len(), t.rows.len());
    }
}

proptest! {
    #[test]
    fn formatted_numbers_round_trip(v in -1e6f64..1e6) {
        let s = format_number(v);
        let back: f64 = s.parse().unwrap();
        prop_assert!((back - v).abs() <= 5e-10 * (1.0 + v.abs()));
        prop_assert!(!s.starts_with("-0.000000000") || back != 0.0);
    }

    #[test]
    fn eta_grid_stays_in_range(start in 0.0f64..0.1, len in 0.0f64..0.2, step in 0.001f64..0.05) {
        let g = EtaGrid::new(start, start + len, step).unwrap();
        let v = g.values();
        prop_assert!(!v.is_empty());
        prop_assert!((v[0] - start).abs() < 1e-15);
        prop_assert!(v.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(*v.last().unwrap() <= start + len + 1e-9);
    }
}
