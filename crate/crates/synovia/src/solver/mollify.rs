//! Mollification of concentration data.
//!
//! Two pieces live here:
//!
//! * [`mollify`] — discrete space-time convolution with the standard radial
//!   unit-mass bump supported in the unit ball of R^3, applied to a stored
//!   trajectory with zero extension outside the space-time box. This is the
//!   post-hoc smoothing operation.
//! * [`LaggedSmoother`] — the causal surrogate that feeds the regularised
//!   stress exponent during a run: a true space-time convolution inside an
//!   ODE right-hand side would look into the future, so the kernel is
//!   centred one width into the past and applied to the stored history
//!   window (spatial smoothing per stored slice, then a time convolution
//!   over the window). Kernels here are separable bumps with discrete
//!   normalisation.

use std::collections::VecDeque;
use std::sync::Arc;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::fields::Quadrature;
use crate::numeric::gauss_legendre_on;
use crate::varexp::{SpaceTimeGrid, SpaceTimeSamples};

/// Unnormalised radial bump profile exp(-1 / (1 - r^2)) on r < 1.
fn bump(r_sq: f64) -> f64 {
    if r_sq < 1.0 {
        (-1.0 / (1.0 - r_sq)).exp()
    } else {
        0.0
    }
}

/// Mass of the radial bump in R^3: 4 pi int_0^1 r^2 exp(-1/(1-r^2)) dr,
/// evaluated once by a dense Gauss-Legendre rule.
fn radial_bump_mass_3d() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| {
        let (xs, ws) = gauss_legendre_on(2048, 0.0, 1.0);
        let integral: f64 = xs
            .iter()
            .zip(&ws)
            .map(|(r, w)| w * r * r * bump(r * r))
            .sum();
        4.0 * std::f64::consts::PI * integral
    })
}

/// Discrete space-time mollification (eta_eps * c) of trajectory samples,
/// with c extended by zero outside the box. The kernel is the radial
/// unit-mass bump scaled to width `epsilon` in every direction; the output
/// lives on the same grid as the input. Contractive: sup |out| <= sup |c| up
/// to quadrature error of the kernel mass.
pub fn mollify(c: &SpaceTimeSamples, epsilon: f64) -> SpaceTimeSamples {
    assert!(epsilon > 0.0, "mollification width must be positive");
    let grid = &c.grid;
    let quad = &grid.quad;
    let nq = quad.len();
    let res = quad.resolution;
    let nt = grid.times.len();

    // Per-axis neighbour windows: indices within distance epsilon.
    let window_1d = |coords: &[f64], x0: f64| -> (usize, usize) {
        let lo = coords.partition_point(|&x| x < x0 - epsilon);
        let hi = coords.partition_point(|&x| x <= x0 + epsilon);
        (lo, hi)
    };

    // Discrete kernel mass around a point (sum of eta * w over the window).
    let discrete_mass = |x0: f64, y0: f64, t0: f64| -> f64 {
        let (tlo, thi) = window_1d(&grid.times, t0);
        let (xlo, xhi) = window_1d(&quad.nodes_1d, x0);
        let (ylo, yhi) = window_1d(&quad.nodes_1d, y0);
        let mut acc = 0.0;
        for it in tlo..thi {
            let dt = (grid.times[it] - t0) / epsilon;
            let dt_sq = dt * dt;
            for iy in ylo..yhi {
                let dy = (quad.nodes_1d[iy] - y0) / epsilon;
                let part = dt_sq + dy * dy;
                if part >= 1.0 {
                    continue;
                }
                let wty = grid.time_weights[it] * quad.weights_1d[iy];
                for ix in xlo..xhi {
                    let dx = (quad.nodes_1d[ix] - x0) / epsilon;
                    acc += wty * quad.weights_1d[ix] * bump(part + dx * dx);
                }
            }
        }
        acc
    };

    // Normalise by the discrete kernel mass at a reference node whose
    // support lies inside the box: the kernel then has exactly unit mass in
    // the discrete measure, and on uniform grids every interior node shares
    // the reference alignment. If the kernel is wider than the box, fall
    // back to the continuous mass.
    let xc = quad.nodes_1d[res / 2];
    let tc = grid.times[nt / 2];
    let coords_span_interior = |coords: &[f64], x0: f64| -> bool {
        x0 - epsilon > coords[0] - 1e-14 && x0 + epsilon < coords[coords.len() - 1] + 1e-14
    };
    let interior_ok = coords_span_interior(&quad.nodes_1d, xc)
        && coords_span_interior(&grid.times, tc);
    let norm = if interior_ok {
        1.0 / discrete_mass(xc, xc, tc)
    } else {
        1.0 / (radial_bump_mass_3d() * epsilon.powi(3))
    };

    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|z| {
            let it0 = z / nq;
            let q0 = z % nq;
            let ix0 = q0 % res;
            let iy0 = q0 / res;
            let x0 = quad.nodes_1d[ix0];
            let y0 = quad.nodes_1d[iy0];
            let t0 = grid.times[it0];
            let (tlo, thi) = window_1d(&grid.times, t0);
            let (xlo, xhi) = window_1d(&quad.nodes_1d, x0);
            let (ylo, yhi) = window_1d(&quad.nodes_1d, y0);
            let mut acc = 0.0;
            for it in tlo..thi {
                let dt = (grid.times[it] - t0) / epsilon;
                let dt_sq = dt * dt;
                if dt_sq >= 1.0 {
                    continue;
                }
                let wt = grid.time_weights[it];
                for iy in ylo..yhi {
                    let dy = (quad.nodes_1d[iy] - y0) / epsilon;
                    let part = dt_sq + dy * dy;
                    if part >= 1.0 {
                        continue;
                    }
                    let wy = quad.weights_1d[iy];
                    let row = it * nq + iy * res;
                    for ix in xlo..xhi {
                        let dx = (quad.nodes_1d[ix] - x0) / epsilon;
                        let r_sq = part + dx * dx;
                        if r_sq >= 1.0 {
                            continue;
                        }
                        let w = wt * wy * quad.weights_1d[ix];
                        acc += w * bump(r_sq) * c.values[row + ix];
                    }
                }
            }
            acc * norm
        })
        .collect();
    SpaceTimeSamples {
        grid: grid.clone(),
        values,
    }
}

/// L2(Q_T) distance between a sample set and its mollification; the
/// epsilon-study quantity.
pub fn mollify_l2_error(c: &SpaceTimeSamples, epsilon: f64) -> f64 {
    let smoothed = mollify(c, epsilon);
    let diff = SpaceTimeSamples {
        grid: c.grid.clone(),
        values: c
            .values
            .iter()
            .zip(&smoothed.values)
            .map(|(a, b)| a - b)
            .collect(),
    };
    diff.norm_l2()
}

/// Causal surrogate for the mollified concentration feeding the regularised
/// stress: stores concentration history slices and convolves them in time
/// with a bump centred at t - epsilon, so the window [t - 2 eps, t] lies
/// entirely in the past. History before t = 0 is absent, which matches
/// extension by zero in time. The smoothing acts in time only; as the width
/// shrinks, the surrogate converges to the instantaneous concentration.
pub struct LaggedSmoother {
    epsilon: f64,
    history: VecDeque<(f64, Vec<f64>)>,
}

impl LaggedSmoother {
    pub fn new(_quad: &Arc<Quadrature>, epsilon: f64) -> LaggedSmoother {
        assert!(epsilon > 0.0);
        LaggedSmoother {
            epsilon,
            history: VecDeque::new(),
        }
    }

    /// Record the concentration slice at an accepted step time.
    pub fn push(&mut self, t: f64, c_nodes: &[f64]) {
        // Replace stale samples at (numerically) the same time.
        while matches!(self.history.back(), Some((tb, _)) if *tb >= t - 1e-14) {
            self.history.pop_back();
        }
        self.history.push_back((t, c_nodes.to_vec()));
        let horizon = t - 2.5 * self.epsilon;
        while matches!(self.history.front(), Some((tf, _)) if *tf < horizon) {
            // Keep one sample beyond the horizon so the window stays covered.
            if self
                .history
                .get(1)
                .map(|(t1, _)| *t1 < horizon)
                .unwrap_or(false)
            {
                self.history.pop_front();
            } else {
                break;
            }
        }
    }

    /// Smoothed concentration at the current time: time-bump convolution of
    /// the stored slices over [t - 2 eps, t], trapezoid-weighted in time and
    /// normalised over the discrete window.
    pub fn smoothed_at(&self, t: f64) -> Vec<f64> {
        let center = t - self.epsilon;
        let n = self.history.len();
        assert!(n > 0, "smoother has no history");
        if n == 1 {
            return self.history[0].1.clone();
        }
        let mut weights = vec![0.0; n];
        let mut total = 0.0;
        for (i, (ti, _)) in self.history.iter().enumerate() {
            let u = (ti - center) / self.epsilon;
            let k = bump(u * u);
            if k > 0.0 {
                // Trapezoid width around sample i.
                let prev = if i > 0 { self.history[i - 1].0 } else { *ti };
                let next = if i + 1 < n { self.history[i + 1].0 } else { *ti };
                let span = 0.5 * (next - prev).max(0.0);
                let w = k * span.max(1e-300);
                weights[i] = w;
                total += w;
            }
        }
        if total <= 0.0 {
            // Window degenerate (all mass outside history); fall back to the
            // most recent slice.
            return self.history[n - 1].1.clone();
        }
        let nq = self.history[0].1.len();
        let mut out = vec![0.0; nq];
        for (i, (_, slice)) in self.history.iter().enumerate() {
            let w = weights[i] / total;
            if w > 0.0 {
                for q in 0..nq {
                    out[q] += w * slice[q];
                }
            }
        }
        out
    }
}

/// Build the space-time grid of a trajectory's output times.
pub fn trajectory_grid(quad: Arc<Quadrature>, times: &[f64]) -> Arc<SpaceTimeGrid> {
    SpaceTimeGrid::from_times(quad, times.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Domain;

    fn torus_grid(res: usize, nt: usize) -> Arc<SpaceTimeGrid> {
        let d = Domain::torus(2.0 * std::f64::consts::PI);
        let quad = Quadrature::new(&d, res);
        SpaceTimeGrid::uniform(quad, d.t_final, nt)
    }

    #[test]
    fn mollify_of_zero_is_zero() {
        let g = torus_grid(16, 5);
        let c = SpaceTimeSamples::from_fn(g, |_, _, _| 0.0);
        let out = mollify(&c, 0.5);
        assert!(out.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mollify_interior_plateau_preserves_unit_value() {
        // Zero extension outside the box damps values near its faces, so the
        // plateau check runs on points at least eps inside every axis; there
        // the discrete kernel mass approximates the continuous unit mass.
        let g = torus_grid(64, 65);
        let c = SpaceTimeSamples::from_fn(g.clone(), |_, _, _| 1.0);
        let eps = 0.9;
        let out = mollify(&c, eps);
        let nq = g.quad.len();
        let nt = g.times.len();
        let res = g.quad.resolution;
        let l = g.quad.extent;
        let t_max = g.times[nt - 1];
        let mut worst: f64 = 0.0;
        let mut checked = 0usize;
        for it in 0..nt {
            if g.times[it] < eps || g.times[it] > t_max - eps {
                continue;
            }
            for q in 0..nq {
                let x = g.quad.nodes_1d[q % res];
                let y = g.quad.nodes_1d[q / res];
                if x < eps || x > l - eps || y < eps || y > l - eps {
                    continue;
                }
                worst = worst.max((out.values[it * nq + q] - 1.0).abs());
                checked += 1;
            }
        }
        assert!(checked > 1000, "too few interior points: {checked}");
        assert!(worst < 1e-8, "plateau error {worst:e}");
    }

    #[test]
    fn mollify_is_sup_contractive() {
        let g = torus_grid(32, 17);
        let c = SpaceTimeSamples::from_fn(g, |x, y, t| (x).sin() * (2.0 * y).cos() + 0.3 * t);
        let sup = c.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let out = mollify(&c, 0.7);
        let sup_out = out.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(sup_out <= sup * (1.0 + 1e-8));
    }

    #[test]
    fn mollify_error_decreases_with_epsilon() {
        let g = torus_grid(32, 33);
        let c = SpaceTimeSamples::from_fn(g, |x, y, t| (x + 0.5 * t).sin() * (y).cos());
        let errs: Vec<f64> = [1.2, 0.6, 0.3]
            .iter()
            .map(|&e| mollify_l2_error(&c, e))
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "errors {errs:?}");
    }

    #[test]
    fn lagged_smoother_reproduces_constant_history() {
        let d = Domain::unit_square(1.0);
        let quad = Quadrature::new(&d, 16);
        let mut s = LaggedSmoother::new(&quad, 0.1);
        let slice = vec![0.7; quad.len()];
        for i in 0..20 {
            s.push(i as f64 * 0.02, &slice);
        }
        let out = s.smoothed_at(0.38);
        for v in out {
            assert!((v - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn lagged_smoother_centers_one_width_into_the_past() {
        let d = Domain::unit_square(1.0);
        let quad = Quadrature::new(&d, 8);
        let eps = 0.1;
        let mut s = LaggedSmoother::new(&quad, eps);
        // History growing linearly in time: the bump average over
        // [t - 2 eps, t] is the value at the centre t - eps.
        let nq = quad.len();
        for i in 0..=100 {
            let t = i as f64 * 0.005;
            s.push(t, &vec![3.0 * t; nq]);
        }
        let t = 0.5;
        let out = s.smoothed_at(t);
        let expected = 3.0 * (t - eps);
        for v in out {
            assert!((v - expected).abs() < 1e-3, "{v} vs {expected}");
        }
    }
}
