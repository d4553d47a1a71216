//! Experiment driver: validated run specifications, the runners behind each
//! CLI subcommand, and the CSV / JSON output layer.

pub mod output;
mod run;
pub mod spec;

use std::path::{Path, PathBuf};

pub use output::{format_number, Cell, OutputFormat, Report, Table};
pub use spec::{
    default_copulas, mean_waiting_queue, BivariateCostKind, EtaGrid, ExperimentKind, ExperimentSpec, HedgeStudy,
    QueueStudy, SerialModel, ALL_FAMILIES,
};

use crate::error::Result;

/// Validates `spec` and computes all of its tables. Runs on the current rayon
/// pool; the result does not depend on its size.
pub fn compute(spec: &ExperimentSpec) -> Result<Report> {
    spec.validate()?;
    let tables = match &spec.kind {
        ExperimentKind::BivariateBounds {
            cost,
            copulas,
            grid_size,
        } => run::bivariate_bounds(spec, *cost, copulas, *grid_size)?,
        ExperimentKind::CopulaCompare {
            cost,
            copulas,
            grid_size,
        } => run::copula_compare(spec, *cost, copulas, *grid_size)?,
        ExperimentKind::SerialXi1 { model } => run::serial_xi1(spec, model)?,
        ExperimentKind::Serial2dep { model } => run::serial_2dep(spec, model)?,
        ExperimentKind::QueueExperiment { study, queue } => run::queue_experiment(spec, study, queue)?,
        ExperimentKind::HedgeExperiment { study, hedge } => run::hedge_experiment(spec, study, hedge)?,
        ExperimentKind::OracleCheck {
            q,
            horizon1,
            horizon2,
            scaling_outer,
        } => run::oracle_check(spec, *q, *horizon1, *horizon2, scaling_outer)?,
    };
    Ok(Report {
        seed: spec.seed,
        spec: serde_json::to_value(spec)?,
        tables,
    })
}

/// [`compute`], then write to `out` (stdout when `None`) in the spec's format.
pub fn run_experiment(spec: &ExperimentSpec, out: Option<&Path>) -> Result<(Report, Vec<PathBuf>)> {
    let report = compute(spec)?;
    let files = report.write(out, spec.format)?;
    Ok((report, files))
}
