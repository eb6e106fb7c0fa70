//! Post-hoc diagnostics on stored trajectories: energy-identity residuals,
//! max/min-principle overshoots, monotonicity (Minty) gaps, refinement
//! studies and space-time exports into the variable-exponent toolkit.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::pairwise_sum_by;
use crate::varexp::{luxembourg_norm, ExponentField, SpaceTimeGrid, SpaceTimeSamples, LUXEMBOURG_TOL};

use super::mollify::{mollify_l2_error, trajectory_grid};
use super::{run_scenario, Scenario, Trajectory};

/// Cumulative trapezoid integral of `f` over `times`, evaluated at every
/// output time.
fn cumulative_trapezoid(times: &[f64], f: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..times.len() {
        acc += 0.5 * (times[i] - times[i - 1]) * (f[i] + f[i - 1]);
        out.push(acc);
    }
    out
}

/// Relative residual series of the kinetic energy identity
/// ||u(t)||^2 + 2 int_0^t int S : Du = ||u(0)||^2 + 2 int_0^t int f . u.
pub fn energy_residuals(traj: &Trajectory) -> Vec<f64> {
    let times = &traj.times;
    let dissipation: Vec<f64> = traj.records.iter().map(|r| r.dissipation).collect();
    let work: Vec<f64> = traj.records.iter().map(|r| r.work).collect();
    let diss_int = cumulative_trapezoid(times, &dissipation);
    let work_int = cumulative_trapezoid(times, &work);
    let u0_sq = 2.0 * traj.records[0].kinetic_energy;
    traj.records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let lhs = 2.0 * r.kinetic_energy + 2.0 * diss_int[i];
            let rhs = u0_sq + 2.0 * work_int[i];
            (lhs - rhs).abs() / (1.0 + rhs.abs())
        })
        .collect()
}

/// Relative residual series of the concentration energy identity
/// ||c(t)||^2 + 2 int_0^t int q_c . grad c = ||c(0)||^2.
pub fn concentration_energy_residuals(traj: &Trajectory) -> Vec<f64> {
    let times = &traj.times;
    let flux: Vec<f64> = traj.records.iter().map(|r| r.flux_dissipation).collect();
    let flux_int = cumulative_trapezoid(times, &flux);
    let c0_sq = 2.0 * traj.records[0].conc_energy;
    traj.records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let lhs = 2.0 * r.conc_energy + 2.0 * flux_int[i];
            (lhs - c0_sq).abs() / (1.0 + c0_sq.abs())
        })
        .collect()
}

/// Per-output-time overshoot above `c_tilde0` and undershoot below zero.
/// The continuum bound 0 <= c <= c_tilde0 holds exactly only in the
/// infinite-dimensional concentration limit; at finite M these are
/// truncation overshoots expected to shrink as M grows.
pub fn max_principle_series(traj: &Trajectory, c_tilde0: f64) -> Vec<(f64, f64)> {
    traj.records
        .iter()
        .map(|r| {
            let over = (r.c_max - c_tilde0).max(0.0);
            let under = (-r.c_min).max(0.0);
            (over, under)
        })
        .collect()
}

/// Worst overshoot/undershoot over a run.
pub fn max_principle_worst(traj: &Trajectory, c_tilde0: f64) -> (f64, f64) {
    max_principle_series(traj, c_tilde0)
        .into_iter()
        .fold((0.0f64, 0.0f64), |(o, u), (ro, ru)| (o.max(ro), u.max(ru)))
}

/// Monotonicity (Minty) gap of a trajectory against a probe given per output
/// time as velocity coefficients:
/// int_{Q_T} (S(c, Du) - S(c, Dphi)) : (Du - Dphi) dx dt.
///
/// Strict monotonicity of the stress makes this nonnegative, vanishing only
/// when Du = Dphi almost everywhere. Valid for unmollified runs (the stress
/// exponent is evaluated on the stored concentration).
pub fn monotonicity_gap_series(traj: &Trajectory, probe: &[Vec<f64>]) -> Result<f64> {
    if probe.len() != traj.states.len() {
        return Err(Error::DimensionMismatch {
            expected: traj.states.len(),
            got: probe.len(),
        });
    }
    let sys = &traj.system;
    let quad = &sys.quad;
    let vb = &sys.velocity_basis;
    let cb = &sys.concentration_basis;
    let n = sys.scenario.n_velocity;
    let nq = quad.len();
    let stress = &sys.scenario.stress;
    let mut per_time = Vec::with_capacity(traj.states.len());
    for (state, phi) in traj.states.iter().zip(probe) {
        if phi.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: phi.len(),
            });
        }
        // Symmetric gradients of the solution and the probe.
        let mut d11 = vec![0.0; nq];
        let mut d12 = vec![0.0; nq];
        let mut p11 = vec![0.0; nq];
        let mut p12 = vec![0.0; nq];
        for j in 0..n {
            let (aj, fj) = (state.a[j], phi[j]);
            for q in 0..nq {
                let g11 = vb.g11[j][q];
                let gsym = 0.5 * (vb.g12[j][q] + vb.g21[j][q]);
                if aj != 0.0 {
                    d11[q] += aj * g11;
                    d12[q] += aj * gsym;
                }
                if fj != 0.0 {
                    p11[q] += fj * g11;
                    p12[q] += fj * gsym;
                }
            }
        }
        let mut c = vec![0.0; nq];
        for (k, &bk) in state.b.iter().enumerate() {
            if bk == 0.0 {
                continue;
            }
            for q in 0..nq {
                c[q] += bk * cb.values[k][q];
            }
        }
        per_time.push(pairwise_sum_by(nq, |q| {
            let (x, y) = quad.point(q);
            let p = stress.index.index_at(c[q], x, y, state.t);
            let du_sq = 2.0 * (d11[q] * d11[q] + d12[q] * d12[q]);
            let dp_sq = 2.0 * (p11[q] * p11[q] + p12[q] * p12[q]);
            let visc_u = stress.viscosity(p, du_sq);
            let visc_p = stress.viscosity(p, dp_sq);
            // (S(Du) - S(Dphi)) : (Du - Dphi) for trace-free symmetric pairs.
            let s11 = visc_u * d11[q] - visc_p * p11[q];
            let s12 = visc_u * d12[q] - visc_p * p12[q];
            let e11 = d11[q] - p11[q];
            let e12 = d12[q] - p12[q];
            quad.weight(q) * (2.0 * s11 * e11 + 2.0 * s12 * e12)
        }));
    }
    // Trapezoid in time.
    let mut total = 0.0;
    for i in 1..traj.times.len() {
        total += 0.5 * (traj.times[i] - traj.times[i - 1]) * (per_time[i] + per_time[i - 1]);
    }
    Ok(total)
}

/// Monotonicity gap against a time-independent probe.
pub fn monotonicity_gap(traj: &Trajectory, probe: &[f64]) -> Result<f64> {
    let per_time = vec![probe.to_vec(); traj.states.len()];
    monotonicity_gap_series(traj, &per_time)
}

// ---------------------------------------------------------------------------
// Space-time exports
// ---------------------------------------------------------------------------

/// The space-time grid of a trajectory's output times.
pub fn space_time_grid(traj: &Trajectory) -> Arc<SpaceTimeGrid> {
    trajectory_grid(traj.system.quad.clone(), &traj.times)
}

/// Concentration samples c(x, t) over the trajectory.
pub fn concentration_samples(traj: &Trajectory) -> SpaceTimeSamples {
    let grid = space_time_grid(traj);
    let slices: Vec<Vec<f64>> = traj
        .states
        .iter()
        .map(|s| traj.system.concentration_slice(&s.b))
        .collect();
    SpaceTimeSamples::from_slices(grid, &slices)
}

/// Velocity component samples (u1, u2) over the trajectory.
pub fn velocity_samples(traj: &Trajectory) -> (SpaceTimeSamples, SpaceTimeSamples) {
    let grid = space_time_grid(traj);
    let nq = traj.system.quad.len();
    let mut s1 = Vec::new();
    let mut s2 = Vec::new();
    for state in &traj.states {
        let u = traj
            .system
            .velocity_basis
            .reconstruct(&state.a)
            .expect("state matches basis");
        s1.push(u.x);
        s2.push(u.y);
        debug_assert_eq!(nq, s1.last().unwrap().len());
    }
    (
        SpaceTimeSamples::from_slices(grid.clone(), &s1),
        SpaceTimeSamples::from_slices(grid, &s2),
    )
}

/// |grad u| samples over the trajectory.
pub fn velocity_gradient_magnitude_samples(traj: &Trajectory) -> SpaceTimeSamples {
    let grid = space_time_grid(traj);
    let vb = &traj.system.velocity_basis;
    let nq = traj.system.quad.len();
    let slices: Vec<Vec<f64>> = traj
        .states
        .iter()
        .map(|state| {
            (0..nq)
                .map(|q| {
                    let mut g11 = 0.0;
                    let mut g12 = 0.0;
                    let mut g21 = 0.0;
                    for (j, &aj) in state.a.iter().enumerate() {
                        if aj == 0.0 {
                            continue;
                        }
                        g11 += aj * vb.g11[j][q];
                        g12 += aj * vb.g12[j][q];
                        g21 += aj * vb.g21[j][q];
                    }
                    (2.0 * g11 * g11 + g12 * g12 + g21 * g21).sqrt()
                })
                .collect()
        })
        .collect();
    SpaceTimeSamples::from_slices(grid, &slices)
}

/// |S| samples over the trajectory (stress exponent evaluated on the stored
/// concentration; intended for unmollified runs).
pub fn stress_magnitude_samples(traj: &Trajectory) -> SpaceTimeSamples {
    let grid = space_time_grid(traj);
    let sys = &traj.system;
    let quad = &sys.quad;
    let nq = quad.len();
    let vb = &sys.velocity_basis;
    let stress = &sys.scenario.stress;
    let slices: Vec<Vec<f64>> = traj
        .states
        .iter()
        .map(|state| {
            let c = sys.concentration_slice(&state.b);
            (0..nq)
                .map(|q| {
                    let mut d11 = 0.0;
                    let mut d12 = 0.0;
                    for (j, &aj) in state.a.iter().enumerate() {
                        if aj == 0.0 {
                            continue;
                        }
                        d11 += aj * vb.g11[j][q];
                        d12 += aj * 0.5 * (vb.g12[j][q] + vb.g21[j][q]);
                    }
                    let (x, y) = quad.point(q);
                    let p = stress.index.index_at(c[q], x, y, state.t);
                    let du_sq = 2.0 * (d11 * d11 + d12 * d12);
                    stress.viscosity(p, du_sq) * du_sq.sqrt()
                })
                .collect()
        })
        .collect();
    SpaceTimeSamples::from_slices(grid, &slices)
}

/// Variable exponent p(c(z)) over the trajectory.
pub fn exponent_samples(traj: &Trajectory) -> Result<ExponentField> {
    let c = concentration_samples(traj);
    ExponentField::from_concentration(&traj.system.scenario.stress.index, &c)
}

/// ||u_a - u_b||_{L2(Q_T)} between two trajectories on the same quadrature
/// and output times.
pub fn velocity_l2_difference(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    if !a.system.quad.same_layout(&b.system.quad) {
        return Err(Error::QuadratureMismatch);
    }
    if a.times.len() != b.times.len() || a.times.iter().zip(&b.times).any(|(x, y)| x != y) {
        return Err(Error::GridMismatch);
    }
    let quad = &a.system.quad;
    let nq = quad.len();
    let mut per_time = Vec::with_capacity(a.times.len());
    for i in 0..a.times.len() {
        let ua = a.velocity_at(i);
        let ub = b.velocity_at(i);
        per_time.push(pairwise_sum_by(nq, |q| {
            let dx = ua.x[q] - ub.x[q];
            let dy = ua.y[q] - ub.y[q];
            quad.weight(q) * (dx * dx + dy * dy)
        }));
    }
    let mut total = 0.0;
    for i in 1..a.times.len() {
        total += 0.5 * (a.times[i] - a.times[i - 1]) * (per_time[i] + per_time[i - 1]);
    }
    Ok(total.sqrt())
}

/// ||c_a - c_b||_{L2(Q_T)} between two trajectories.
pub fn concentration_l2_difference(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    if !a.system.quad.same_layout(&b.system.quad) {
        return Err(Error::QuadratureMismatch);
    }
    if a.times.len() != b.times.len() || a.times.iter().zip(&b.times).any(|(x, y)| x != y) {
        return Err(Error::GridMismatch);
    }
    let quad = &a.system.quad;
    let nq = quad.len();
    let mut per_time = Vec::with_capacity(a.times.len());
    for i in 0..a.times.len() {
        let ca = a.concentration_at(i);
        let cb = b.concentration_at(i);
        per_time.push(pairwise_sum_by(nq, |q| {
            let d = ca.values[q] - cb.values[q];
            quad.weight(q) * d * d
        }));
    }
    let mut total = 0.0;
    for i in 1..a.times.len() {
        total += 0.5 * (a.times[i] - a.times[i - 1]) * (per_time[i] + per_time[i - 1]);
    }
    Ok(total.sqrt())
}

// ---------------------------------------------------------------------------
// Studies
// ---------------------------------------------------------------------------

/// Space-time variable-exponent norms of one refinement level.
#[derive(Debug, Clone)]
pub struct LevelNorms {
    pub n: usize,
    pub m: usize,
    /// || |grad u| ||_{L^{p(c)}(Q_T)}.
    pub lux_grad_u: f64,
    /// || |S| ||_{L^{p'(c)}(Q_T)}.
    pub lux_stress: f64,
}

/// Cauchy-convergence table over basis refinements.
#[derive(Debug, Clone)]
pub struct CauchyTable {
    /// (N1, N2, ||u^{N2} - u^{N1}||_{L2(Q_T)}) for consecutive N at fixed M.
    pub velocity: Vec<(usize, usize, f64)>,
    /// (M1, M2, ||c^{M2} - c^{M1}||_{L2(Q_T)}) for consecutive M at fixed N.
    pub concentration: Vec<(usize, usize, f64)>,
    /// Variable-exponent norms per velocity level, exhibiting uniform
    /// boundedness across refinements.
    pub levels: Vec<LevelNorms>,
}

fn level_norms(traj: &Trajectory) -> Result<LevelNorms> {
    let p = exponent_samples(traj)?;
    let grad = velocity_gradient_magnitude_samples(traj);
    let stress = stress_magnitude_samples(traj);
    let lux_grad_u = luxembourg_norm(&grad, &p, LUXEMBOURG_TOL)?;
    let lux_stress = luxembourg_norm(&stress, &p.dual()?, LUXEMBOURG_TOL)?;
    Ok(LevelNorms {
        n: traj.scenario().n_velocity,
        m: traj.scenario().m_concentration,
        lux_grad_u,
        lux_stress,
    })
}

/// Run the scenario across velocity and concentration refinements and build
/// the Cauchy table. Velocity levels vary N at the scenario's M;
/// concentration levels vary M at the scenario's N. Lists must be sorted
/// ascending. Runs execute in parallel; results are deterministic.
pub fn convergence_study(
    base: &Scenario,
    n_list: &[usize],
    m_list: &[usize],
) -> Result<CauchyTable> {
    assert!(n_list.windows(2).all(|w| w[0] < w[1]), "N list must ascend");
    assert!(m_list.windows(2).all(|w| w[0] < w[1]), "M list must ascend");
    let n_runs: Vec<Result<Trajectory>> = n_list
        .par_iter()
        .map(|&n| {
            let mut sc = base.clone();
            sc.n_velocity = n;
            sc.name = format!("{}_n{}", base.name, n);
            run_scenario(&sc)
        })
        .collect();
    let mut velocity_trajs = Vec::with_capacity(n_list.len());
    for r in n_runs {
        velocity_trajs.push(r?);
    }
    let m_runs: Vec<Result<Trajectory>> = m_list
        .par_iter()
        .map(|&m| {
            let mut sc = base.clone();
            sc.m_concentration = m;
            sc.name = format!("{}_m{}", base.name, m);
            run_scenario(&sc)
        })
        .collect();
    let mut concentration_trajs = Vec::with_capacity(m_list.len());
    for r in m_runs {
        concentration_trajs.push(r?);
    }

    let mut velocity = Vec::new();
    for w in velocity_trajs.windows(2) {
        velocity.push((
            w[0].scenario().n_velocity,
            w[1].scenario().n_velocity,
            velocity_l2_difference(&w[0], &w[1])?,
        ));
    }
    let mut concentration = Vec::new();
    for w in concentration_trajs.windows(2) {
        concentration.push((
            w[0].scenario().m_concentration,
            w[1].scenario().m_concentration,
            concentration_l2_difference(&w[0], &w[1])?,
        ));
    }
    let mut levels = Vec::new();
    for traj in &velocity_trajs {
        levels.push(level_norms(traj)?);
    }
    Ok(CauchyTable {
        velocity,
        concentration,
        levels,
    })
}

/// Max/min-principle overshoots across a concentration refinement sweep.
#[derive(Debug, Clone)]
pub struct MaxPrincipleSweep {
    pub m_list: Vec<usize>,
    pub overshoot: Vec<f64>,
    pub undershoot: Vec<f64>,
}

pub fn max_principle_sweep(base: &Scenario, m_list: &[usize]) -> Result<MaxPrincipleSweep> {
    let runs: Vec<Result<(f64, f64)>> = m_list
        .par_iter()
        .map(|&m| {
            let mut sc = base.clone();
            sc.m_concentration = m;
            sc.name = format!("{}_m{}", base.name, m);
            let traj = run_scenario(&sc)?;
            Ok(max_principle_worst(&traj, sc.c_tilde0))
        })
        .collect();
    let mut overshoot = Vec::new();
    let mut undershoot = Vec::new();
    for r in runs {
        let (o, u) = r?;
        overshoot.push(o);
        undershoot.push(u);
    }
    Ok(MaxPrincipleSweep {
        m_list: m_list.to_vec(),
        overshoot,
        undershoot,
    })
}

/// Regularisation study: post-hoc mollification errors of the baseline
/// concentration and whole-run velocity differences against the baseline,
/// across mollification widths.
#[derive(Debug, Clone)]
pub struct EpsilonStudy {
    pub epsilons: Vec<f64>,
    /// || eta_eps * c - c ||_{L2(Q_T)} on the baseline run.
    pub mollify_errors: Vec<f64>,
    /// || u_eps - u_0 ||_{L2(Q_T)} between the mollified and baseline runs.
    pub run_differences: Vec<f64>,
}

pub fn epsilon_study(base: &Scenario, epsilons: &[f64]) -> Result<EpsilonStudy> {
    let mut baseline = base.clone();
    baseline.epsilon = 0.0;
    let baseline_traj = run_scenario(&baseline)?;
    let c_samples = concentration_samples(&baseline_traj);
    let runs: Vec<Result<f64>> = epsilons
        .par_iter()
        .map(|&eps| {
            let mut sc = base.clone();
            sc.epsilon = eps;
            sc.name = format!("{}_eps{}", base.name, eps);
            let traj = run_scenario(&sc)?;
            velocity_l2_difference(&traj, &baseline_traj)
        })
        .collect();
    let mut run_differences = Vec::new();
    for r in runs {
        run_differences.push(r?);
    }
    let mollify_errors = epsilons
        .iter()
        .map(|&eps| mollify_l2_error(&c_samples, eps))
        .collect();
    Ok(EpsilonStudy {
        epsilons: epsilons.to_vec(),
        mollify_errors,
        run_differences,
    })
}
