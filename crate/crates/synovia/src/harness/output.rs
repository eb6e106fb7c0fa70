//! Artifact writers: diagnostics CSV, legacy-VTK structured-points
//! snapshots, study tables and the run summary. Column orders and headers
//! are frozen; golden tests guard them.

use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::solver::diagnostics::{CauchyTable, EpsilonStudy, MaxPrincipleSweep};
use crate::solver::Trajectory;

use super::{CheckLine, Config};

/// Frozen diagnostics column order.
pub const CSV_HEADER: &str = "t,kinetic_energy,dissipation,work,conc_energy,flux_dissipation,c_min,c_max,clamp_count,lux_grad_u,lux_stress,holder_c";

pub fn write_diagnostics_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{CSV_HEADER}")?;
    for r in &traj.records {
        writeln!(
            out,
            "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{},{:.12e},{:.12e},{:.12e}",
            r.t,
            r.kinetic_energy,
            r.dissipation,
            r.work,
            r.conc_energy,
            r.flux_dissipation,
            r.c_min,
            r.c_max,
            r.clamp_count,
            r.lux_grad_u,
            r.lux_stress,
            r.holder_c
        )?;
    }
    Ok(())
}

/// Number of uniform sample points per axis in snapshot files.
pub const SNAPSHOT_RESOLUTION: usize = 65;

/// Write `count` snapshots at output times spread evenly from the first to
/// the last, resampled spectrally on a uniform grid, in legacy VTK
/// structured-points format (scalars `concentration`, vectors `velocity`).
pub fn write_snapshots(dir: &Path, traj: &Trajectory, count: usize) -> Result<()> {
    if count == 0 {
        return Ok(());
    }
    std::fs::create_dir_all(dir)?;
    let n_times = traj.times.len();
    let picks: Vec<usize> = if count == 1 {
        vec![n_times - 1]
    } else {
        (0..count)
            .map(|i| i * (n_times - 1) / (count - 1))
            .collect()
    };
    let extent = traj.system.quad.extent;
    let res = SNAPSHOT_RESOLUTION;
    let spacing = extent / (res - 1) as f64;
    let mut points = Vec::with_capacity(res * res);
    for iy in 0..res {
        for ix in 0..res {
            points.push((ix as f64 * spacing, iy as f64 * spacing));
        }
    }
    for (k, &i) in picks.iter().enumerate() {
        let state = &traj.states[i];
        let u = traj.system.velocity_basis.evaluate_at(&state.a, &points)?;
        let c = traj
            .system
            .concentration_basis
            .evaluate_at(&state.b, &points)?;
        let path = dir.join(format!("snapshot_{k:03}.vtk"));
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "# vtk DataFile Version 3.0")?;
        writeln!(out, "fields at t = {:.6}", traj.times[i])?;
        writeln!(out, "ASCII")?;
        writeln!(out, "DATASET STRUCTURED_POINTS")?;
        writeln!(out, "DIMENSIONS {res} {res} 1")?;
        writeln!(out, "ORIGIN 0 0 0")?;
        writeln!(out, "SPACING {spacing:.12e} {spacing:.12e} 1")?;
        writeln!(out, "POINT_DATA {}", res * res)?;
        writeln!(out, "SCALARS concentration double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for v in &c {
            writeln!(out, "{v:.9e}")?;
        }
        writeln!(out, "VECTORS velocity double")?;
        for v in &u {
            writeln!(out, "{:.9e} {:.9e} 0", v[0], v[1])?;
        }
    }
    Ok(())
}

pub fn write_cauchy_csv(path: &Path, table: &CauchyTable) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "kind,coarse,fine,l2_difference")?;
    for (n1, n2, d) in &table.velocity {
        writeln!(out, "velocity,{n1},{n2},{d:.12e}")?;
    }
    for (m1, m2, d) in &table.concentration {
        writeln!(out, "concentration,{m1},{m2},{d:.12e}")?;
    }
    writeln!(out, "level_n,level_m,lux_grad_u,lux_stress")?;
    for l in &table.levels {
        writeln!(
            out,
            "{},{},{:.12e},{:.12e}",
            l.n, l.m, l.lux_grad_u, l.lux_stress
        )?;
    }
    Ok(())
}

pub fn write_maxmin_csv(path: &Path, sweep: &MaxPrincipleSweep) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "m,overshoot,undershoot")?;
    for i in 0..sweep.m_list.len() {
        writeln!(
            out,
            "{},{:.12e},{:.12e}",
            sweep.m_list[i], sweep.overshoot[i], sweep.undershoot[i]
        )?;
    }
    Ok(())
}

pub fn write_epsilon_csv(path: &Path, study: &EpsilonStudy) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "epsilon,mollify_l2_error,run_l2_difference")?;
    for i in 0..study.epsilons.len() {
        writeln!(
            out,
            "{},{:.12e},{:.12e}",
            study.epsilons[i], study.mollify_errors[i], study.run_differences[i]
        )?;
    }
    Ok(())
}

pub fn write_summary(
    path: &Path,
    cfg: &Config,
    checks: &[CheckLine],
    passed: bool,
) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "study: {}", cfg.study.as_str())?;
    writeln!(out, "preset: {}", cfg.preset)?;
    writeln!(out, "seed: {}", cfg.seed)?;
    for c in checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        if c.detail.is_empty() {
            writeln!(out, "{tag} {}", c.name)?;
        } else {
            writeln!(out, "{tag} {}: {}", c.name, c.detail)?;
        }
    }
    writeln!(out, "RESULT: {}", if passed { "PASS" } else { "FAIL" })?;
    Ok(())
}

/// Render a float list compactly for summary details.
pub fn fmt_series(xs: &[f64]) -> String {
    let items: Vec<String> = xs.iter().map(|v| format!("{v:.3e}")).collect();
    format!("[{}]", items.join(", "))
}
