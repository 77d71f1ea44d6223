//! Parameter sweeps over s, epsilon or sigma: independent runs in parallel,
//! rows emitted in axis order, per-row failures recorded without aborting
//! the sweep.

use crate::chemo::mass_relation_residual;
use crate::config::{make_initial_data, RunManifest, SweepAxis};
use crate::domain::{build_basis, EigenBasis, GridField};
use crate::error::{FhksError, Result};
use crate::evolution::{daper_run, run, SimConfig};
use crate::fractional::FracParams;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::sync::Arc;

/// One sweep row; `error` set means the run failed and the numeric columns
/// are NaN.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub terminal_mass: f64,
    pub l1_to_reference: f64,
    pub mass_relation_residual: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

fn config_for(base: &SimConfig, axis: SweepAxis, value: f64) -> Result<SimConfig> {
    let mut cfg = base.clone();
    match axis {
        SweepAxis::S => cfg.frac = FracParams::new(value, base.frac.sigma)?,
        SweepAxis::Sigma => cfg.frac = FracParams::new(base.frac.s, value)?,
        SweepAxis::Epsilon => cfg.epsilon = value,
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Terminal state of the reference trajectory the L1 column compares to:
/// the s -> 0 system for the s-axis, the finest-epsilon run for the
/// epsilon-axis, and the first listed value for the sigma-axis.
fn reference_field(
    u0: &GridField,
    basis: &Arc<EigenBasis>,
    base: &SimConfig,
    axis: SweepAxis,
    values: &[f64],
) -> Option<GridField> {
    let attempt = || -> Result<GridField> {
        let traj = match axis {
            SweepAxis::S => daper_run(u0, basis, base, &[])?,
            SweepAxis::Epsilon => {
                // finest valid epsilon; an unusable one only costs its own row
                let finest = values
                    .iter()
                    .copied()
                    .filter(|&v| v > 0.0)
                    .fold(f64::INFINITY, f64::min);
                run(u0, basis, &config_for(base, axis, finest)?, &[])?
            }
            SweepAxis::Sigma => run(u0, basis, &config_for(base, axis, values[0])?, &[])?,
        };
        Ok(traj.snapshots.last().expect("trajectory nonempty").u.clone())
    };
    attempt().ok()
}

/// Runs the manifest's sweep. Rows are computed in parallel on the current
/// rayon pool and returned in the order the values were listed.
pub fn sweep(manifest: &RunManifest) -> Result<SweepTable> {
    let spec = manifest
        .sweep
        .as_ref()
        .ok_or_else(|| FhksError::ConfigValidation("manifest has no [sweep] section".into()))?;
    if spec.values.len() < 2 {
        return Err(FhksError::ConfigValidation(
            "sweep needs at least 2 values".into(),
        ));
    }
    let basis = Arc::new(build_basis(&manifest.domain));
    let u0 = make_initial_data(manifest.preset, &manifest.domain);
    let reference = reference_field(&u0, &basis, &manifest.sim, spec.axis, &spec.values);

    let rows: Vec<SweepRow> = spec
        .values
        .par_iter()
        .map(|&value| {
            let attempt = || -> Result<SweepRow> {
                let cfg = config_for(&manifest.sim, spec.axis, value)?;
                let traj = run(&u0, &basis, &cfg, &[])?;
                let last = traj.snapshots.last().expect("trajectory nonempty");
                Ok(SweepRow {
                    value,
                    terminal_mass: last.u.integral(),
                    l1_to_reference: reference
                        .as_ref()
                        .map_or(f64::NAN, |r| last.u.l1_distance(r)),
                    mass_relation_residual: mass_relation_residual(&last.u, &last.chemo),
                    error: None,
                })
            };
            attempt().unwrap_or_else(|e| SweepRow {
                value,
                terminal_mass: f64::NAN,
                l1_to_reference: f64::NAN,
                mass_relation_residual: f64::NAN,
                error: Some(e.to_string()),
            })
        })
        .collect();

    Ok(SweepTable {
        axis: spec.axis,
        rows,
    })
}

/// CSV rendering with the same digit contract as the series files.
pub fn render_sweep(table: &SweepTable) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "axis,value,terminal_mass,l1_to_reference,mass_relation_residual,status"
    );
    for row in &table.rows {
        let status = match &row.error {
            None => "ok".to_string(),
            Some(e) => e.replace([',', '\n'], ";"),
        };
        let _ = writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            table.axis.name(),
            row.value,
            row.terminal_mass,
            row.l1_to_reference,
            row.mass_relation_residual,
            status
        );
    }
    out
}
