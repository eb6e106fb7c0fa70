//! Variable-exponent function-space toolkit on discrete space-time grids:
//! modulars, Luxembourg norms, Holder/Young inequality reports, the
//! parabolic metric, and Holder/log-Holder modulus estimators.
//!
//! Seminorm and modulus estimators are sampled suprema and therefore lower
//! estimates of the continuum quantities; they are never claimed as exact.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::constitutive::{PowerIndexFamily, EXPONENT_MARGIN};
use crate::error::{Error, Result};
use crate::fields::Quadrature;
use crate::numeric::pairwise_sum_by;

/// Tensor grid over the space-time box: spatial quadrature times a time grid
/// with trapezoid weights, so the weights sum to |Omega| * T.
#[derive(Debug, Clone)]
pub struct SpaceTimeGrid {
    pub quad: Arc<Quadrature>,
    pub times: Vec<f64>,
    pub time_weights: Vec<f64>,
}

impl SpaceTimeGrid {
    /// Uniform time grid on [0, t_final] with `n_times >= 2` points,
    /// trapezoid-weighted (endpoints carry half weight).
    pub fn uniform(quad: Arc<Quadrature>, t_final: f64, n_times: usize) -> Arc<SpaceTimeGrid> {
        assert!(n_times >= 2, "need at least two time levels");
        assert!(t_final > 0.0);
        let dt = t_final / (n_times - 1) as f64;
        let times: Vec<f64> = (0..n_times).map(|i| i as f64 * dt).collect();
        let mut time_weights = vec![dt; n_times];
        time_weights[0] = 0.5 * dt;
        time_weights[n_times - 1] = 0.5 * dt;
        Arc::new(SpaceTimeGrid {
            quad,
            times,
            time_weights,
        })
    }

    /// Arbitrary strictly increasing time levels with trapezoid weights.
    pub fn from_times(quad: Arc<Quadrature>, times: Vec<f64>) -> Arc<SpaceTimeGrid> {
        assert!(times.len() >= 2);
        let n = times.len();
        let mut time_weights = vec![0.0; n];
        for i in 0..n - 1 {
            let h = times[i + 1] - times[i];
            assert!(h > 0.0, "time levels must be strictly increasing");
            time_weights[i] += 0.5 * h;
            time_weights[i + 1] += 0.5 * h;
        }
        Arc::new(SpaceTimeGrid {
            quad,
            times,
            time_weights,
        })
    }

    pub fn len(&self) -> usize {
        self.quad.len() * self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat index layout: `z = it * quad.len() + q`.
    pub fn point(&self, z: usize) -> SpaceTimePoint {
        let nq = self.quad.len();
        let (x, y) = self.quad.point(z % nq);
        SpaceTimePoint {
            x,
            y,
            t: self.times[z / nq],
        }
    }

    pub fn weight(&self, z: usize) -> f64 {
        let nq = self.quad.len();
        self.time_weights[z / nq] * self.quad.weight(z % nq)
    }

    /// Sum of all space-time weights; equals |Omega| * T up to rounding.
    pub fn total_weight(&self) -> f64 {
        let tw = pairwise_sum_by(self.times.len(), |i| self.time_weights[i]);
        let qw = pairwise_sum_by(self.quad.len(), |q| self.quad.weight(q));
        tw * qw
    }

    pub fn same_layout(&self, other: &SpaceTimeGrid) -> bool {
        self.quad.same_layout(&other.quad)
            && self.times.len() == other.times.len()
            && self
                .times
                .iter()
                .zip(&other.times)
                .all(|(a, b)| a == b)
    }
}

/// Scalar samples on a space-time grid.
#[derive(Debug, Clone)]
pub struct SpaceTimeSamples {
    pub grid: Arc<SpaceTimeGrid>,
    pub values: Vec<f64>,
}

impl SpaceTimeSamples {
    pub fn from_values(grid: Arc<SpaceTimeGrid>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len());
        SpaceTimeSamples { grid, values }
    }

    pub fn from_fn(grid: Arc<SpaceTimeGrid>, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|z| {
                let p = grid.point(z);
                f(p.x, p.y, p.t)
            })
            .collect();
        SpaceTimeSamples { grid, values }
    }

    /// Stack per-time node slices (each of quadrature length) into samples.
    pub fn from_slices(grid: Arc<SpaceTimeGrid>, slices: &[Vec<f64>]) -> Self {
        assert_eq!(slices.len(), grid.times.len());
        let nq = grid.quad.len();
        let mut values = Vec::with_capacity(grid.len());
        for s in slices {
            assert_eq!(s.len(), nq);
            values.extend_from_slice(s);
        }
        SpaceTimeSamples { grid, values }
    }

    pub fn scale(&self, s: f64) -> SpaceTimeSamples {
        SpaceTimeSamples {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| s * v).collect(),
        }
    }

    pub fn add(&self, other: &SpaceTimeSamples) -> Result<SpaceTimeSamples> {
        if !self.grid.same_layout(&other.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(SpaceTimeSamples {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn mul(&self, other: &SpaceTimeSamples) -> Result<SpaceTimeSamples> {
        if !self.grid.same_layout(&other.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(SpaceTimeSamples {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }

    /// Plain L2 norm over the space-time box.
    pub fn norm_l2(&self) -> f64 {
        pairwise_sum_by(self.values.len(), |z| {
            self.grid.weight(z) * self.values[z] * self.values[z]
        })
        .sqrt()
    }
}

/// Bounded variable exponent sampled on a space-time grid, with
/// 1 < p_min <= p(z) <= p_max < inf enforced at construction.
#[derive(Debug, Clone)]
pub struct ExponentField {
    pub grid: Arc<SpaceTimeGrid>,
    pub values: Vec<f64>,
    pub p_min: f64,
    pub p_max: f64,
}

impl ExponentField {
    pub fn from_values(grid: Arc<SpaceTimeGrid>, values: Vec<f64>) -> Result<Self> {
        assert_eq!(values.len(), grid.len());
        let mut p_min = f64::INFINITY;
        let mut p_max: f64 = 1.0;
        for &p in &values {
            if !(p > 1.0 + EXPONENT_MARGIN) || !p.is_finite() {
                return Err(Error::ExponentOutOfRange(p));
            }
            p_min = p_min.min(p);
            p_max = p_max.max(p);
        }
        Ok(ExponentField {
            grid,
            values,
            p_min,
            p_max,
        })
    }

    pub fn constant(grid: Arc<SpaceTimeGrid>, p: f64) -> Result<Self> {
        let n = grid.len();
        Self::from_values(grid, vec![p; n])
    }

    pub fn from_fn(grid: Arc<SpaceTimeGrid>, f: impl Fn(f64, f64, f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = (0..grid.len())
            .map(|z| {
                let p = grid.point(z);
                f(p.x, p.y, p.t)
            })
            .collect();
        Self::from_values(grid, values)
    }

    /// Exponent p(c(z)) from a power-index family composed with concentration
    /// samples. Prescribed-in-(x,t) families use the grid coordinates.
    pub fn from_concentration(
        family: &PowerIndexFamily,
        c: &SpaceTimeSamples,
    ) -> Result<Self> {
        let grid = c.grid.clone();
        let values: Vec<f64> = (0..grid.len())
            .map(|z| {
                let p = grid.point(z);
                family.index_at(c.values[z], p.x, p.y, p.t)
            })
            .collect();
        Self::from_values(grid, values)
    }

    /// Pointwise dual exponent p'(z) = p(z) / (p(z) - 1).
    pub fn dual(&self) -> Result<ExponentField> {
        let mut values = Vec::with_capacity(self.values.len());
        for &p in &self.values {
            values.push(crate::constitutive::dual_exponent(p)?);
        }
        Self::from_values(self.grid.clone(), values)
    }
}

/// A point of the space-time box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceTimePoint {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl SpaceTimePoint {
    /// Euclidean distance in R^3 = R^2 x R.
    pub fn euclidean(&self, other: &SpaceTimePoint) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dt = self.t - other.t;
        (dx * dx + dy * dy + dt * dt).sqrt()
    }
}

/// Parabolic metric d_p(z1, z2) = |x1 - x2| + |t1 - t2|^(1/2).
pub fn parabolic_distance(z1: &SpaceTimePoint, z2: &SpaceTimePoint) -> f64 {
    let dx = z1.x - z2.x;
    let dy = z1.y - z2.y;
    (dx * dx + dy * dy).sqrt() + (z1.t - z2.t).abs().sqrt()
}

// ---------------------------------------------------------------------------
// Modular and Luxembourg norm
// ---------------------------------------------------------------------------

fn check_grid(a: &SpaceTimeGrid, b: &SpaceTimeGrid) -> Result<()> {
    if a.same_layout(b) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// Weighted modular over raw slices; the shared kernel behind both the
/// space-time operations here and the per-time-slice diagnostics in the
/// solver.
pub(crate) fn modular_weighted(values: &[f64], exponents: &[f64], weight: impl Fn(usize) -> f64) -> f64 {
    pairwise_sum_by(values.len(), |z| {
        weight(z) * values[z].abs().powf(exponents[z])
    })
}

/// The modular: integral of |f(z)|^p(z) over the space-time box.
pub fn modular(f: &SpaceTimeSamples, p: &ExponentField) -> Result<f64> {
    check_grid(&f.grid, &p.grid)?;
    Ok(modular_weighted(&f.values, &p.values, |z| f.grid.weight(z)))
}

pub(crate) fn luxembourg_weighted(
    values: &[f64],
    exponents: &[f64],
    p_min: f64,
    p_max: f64,
    weight: impl Fn(usize) -> f64 + Copy,
    tol: f64,
) -> Result<f64> {
    assert!(tol > 0.0);
    let m0 = modular_weighted(values, exponents, weight);
    if m0 == 0.0 {
        return Ok(0.0);
    }
    if !m0.is_finite() {
        return Err(Error::NoConvergence);
    }
    let modular_at = |lambda: f64| {
        pairwise_sum_by(values.len(), |z| {
            weight(z) * (values[z].abs() / lambda).powf(exponents[z])
        })
    };
    // Initial guess from the constant-exponent reductions, then bracket by
    // doubling/halving. The map lambda -> modular(f/lambda) is continuous and
    // strictly decreasing for f != 0 since p_max < inf.
    let mut lambda = m0.powf(1.0 / p_min).max(m0.powf(1.0 / p_max));
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::NoConvergence);
    }
    let mut lo;
    let mut hi;
    let value = modular_at(lambda);
    if value > 1.0 {
        lo = lambda;
        let mut guard = 0;
        loop {
            lambda *= 2.0;
            guard += 1;
            if guard > 64 {
                return Err(Error::NoConvergence);
            }
            if modular_at(lambda) <= 1.0 {
                hi = lambda;
                break;
            }
            lo = lambda;
        }
    } else {
        hi = lambda;
        let mut guard = 0;
        loop {
            lambda *= 0.5;
            guard += 1;
            if guard > 1100 {
                // Underflow of the bracket: the norm is zero to machine range.
                return Ok(0.0);
            }
            if modular_at(lambda) > 1.0 {
                lo = lambda;
                break;
            }
            hi = lambda;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = modular_at(mid);
        if (v - 1.0).abs() <= tol {
            return Ok(mid);
        }
        if v > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Default termination tolerance on |modular(f/lambda) - 1|.
pub const LUXEMBOURG_TOL: f64 = 1e-10;

/// Luxembourg norm inf { lambda > 0 : modular(f / lambda) <= 1 }, computed by
/// bracketing and bisection; returns 0 for f identically zero, and the result
/// satisfies |modular(f/lambda) - 1| <= tol otherwise.
pub fn luxembourg_norm(f: &SpaceTimeSamples, p: &ExponentField, tol: f64) -> Result<f64> {
    check_grid(&f.grid, &p.grid)?;
    luxembourg_weighted(
        &f.values,
        &p.values,
        p.p_min,
        p.p_max,
        |z| f.grid.weight(z),
        tol,
    )
}

/// Composite anisotropic norm ||u||_{L2} + || |grad u| ||_{L^p(.)} over the
/// space-time box.
pub fn anisotropic_norm(
    u: &SpaceTimeSamples,
    grad_u: &SpaceTimeSamples,
    p: &ExponentField,
    tol: f64,
) -> Result<f64> {
    check_grid(&u.grid, &grad_u.grid)?;
    Ok(u.norm_l2() + luxembourg_norm(grad_u, p, tol)?)
}

// ---------------------------------------------------------------------------
// Inequality reports
// ---------------------------------------------------------------------------

/// Outcome of a Holder-inequality check ||fg||_s <= 2 ||f||_p ||g||_q.
#[derive(Debug, Clone, Copy)]
pub struct HolderReport {
    pub lhs: f64,
    pub rhs: f64,
    /// lhs / (||f||_p ||g||_q); 0 when the product of norms vanishes.
    pub ratio: f64,
    pub passed: bool,
}

/// Outcome of a modular Young check int |fg|^s <= int |f|^p + int |g|^q.
#[derive(Debug, Clone, Copy)]
pub struct YoungReport {
    pub lhs: f64,
    pub rhs: f64,
    pub passed: bool,
}

fn check_conjugacy(p: &ExponentField, q: &ExponentField, s: &ExponentField) -> Result<()> {
    check_grid(&p.grid, &q.grid)?;
    check_grid(&p.grid, &s.grid)?;
    for z in 0..p.values.len() {
        let deficit = (1.0 / s.values[z] - 1.0 / p.values[z] - 1.0 / q.values[z]).abs();
        if deficit > 1e-12 {
            return Err(Error::ExponentMismatch { index: z, deficit });
        }
    }
    Ok(())
}

/// Verify the variable-exponent Holder inequality for a conjugate triple
/// 1/s(z) = 1/p(z) + 1/q(z).
pub fn holder_check(
    f: &SpaceTimeSamples,
    g: &SpaceTimeSamples,
    p: &ExponentField,
    q: &ExponentField,
    s: &ExponentField,
) -> Result<HolderReport> {
    check_grid(&f.grid, &g.grid)?;
    check_grid(&f.grid, &p.grid)?;
    check_conjugacy(p, q, s)?;
    let fg = f.mul(g)?;
    let lhs = luxembourg_norm(&fg, s, LUXEMBOURG_TOL)?;
    let nf = luxembourg_norm(f, p, LUXEMBOURG_TOL)?;
    let ng = luxembourg_norm(g, q, LUXEMBOURG_TOL)?;
    let rhs = 2.0 * nf * ng;
    let ratio = if nf * ng > 0.0 { lhs / (nf * ng) } else { 0.0 };
    Ok(HolderReport {
        lhs,
        rhs,
        ratio,
        passed: lhs <= rhs * (1.0 + 1e-9) || ratio <= 2.0 + 1e-9,
    })
}

/// Verify the modular Young inequality for a conjugate triple.
pub fn young_check(
    f: &SpaceTimeSamples,
    g: &SpaceTimeSamples,
    p: &ExponentField,
    q: &ExponentField,
    s: &ExponentField,
) -> Result<YoungReport> {
    check_grid(&f.grid, &g.grid)?;
    check_grid(&f.grid, &p.grid)?;
    check_conjugacy(p, q, s)?;
    let fg = f.mul(g)?;
    let lhs = modular(&fg, s)?;
    let rhs = modular(f, p)? + modular(g, q)?;
    Ok(YoungReport {
        lhs,
        rhs,
        passed: lhs <= rhs * (1.0 + 1e-12) + 1e-300,
    })
}

// ---------------------------------------------------------------------------
// Holder / log-Holder estimators
// ---------------------------------------------------------------------------

/// Lower estimate of the parabolic Holder seminorm
/// sup |f(z1) - f(z2)| / d_p(z1, z2)^alpha, from all grid-adjacent pairs plus
/// `n_pairs` seeded random pairs. Deterministic given the seed.
pub fn parabolic_holder_seminorm(
    f: &SpaceTimeSamples,
    alpha: f64,
    n_pairs: usize,
    seed: u64,
) -> f64 {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    assert!(n_pairs >= 1);
    let grid = &f.grid;
    let nq = grid.quad.len();
    let res = grid.quad.resolution;
    let nt = grid.times.len();
    let quotient = |z1: usize, z2: usize| -> f64 {
        let p1 = grid.point(z1);
        let p2 = grid.point(z2);
        let d = parabolic_distance(&p1, &p2);
        if d == 0.0 {
            return 0.0;
        }
        (f.values[z1] - f.values[z2]).abs() / d.powf(alpha)
    };
    let mut best: f64 = 0.0;
    for it in 0..nt {
        for iy in 0..res {
            for ix in 0..res {
                let z = it * nq + iy * res + ix;
                if ix + 1 < res {
                    best = best.max(quotient(z, z + 1));
                }
                if iy + 1 < res {
                    best = best.max(quotient(z, z + res));
                }
                if it + 1 < nt {
                    best = best.max(quotient(z, z + nq));
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.len();
    for _ in 0..n_pairs {
        let z1 = rng.gen_range(0..n);
        let z2 = rng.gen_range(0..n);
        if z1 != z2 {
            best = best.max(quotient(z1, z2));
        }
    }
    best
}

/// Lower estimate of the log-Holder modulus
/// C_log(p) = sup |p(z1) - p(z2)| * (-log |z1 - z2|) over pairs with
/// 0 < |z1 - z2| <= threshold (Euclidean distance in space-time).
///
/// Pairs are sampled deterministically: all grid-adjacent pairs plus all
/// pairs from a strided subsample of the grid.
pub fn log_holder_modulus(p: &ExponentField, threshold: f64) -> f64 {
    assert!(
        threshold > 0.0 && threshold <= 0.5,
        "threshold must lie in (0, 1/2]"
    );
    let grid = &p.grid;
    let nq = grid.quad.len();
    let res = grid.quad.resolution;
    let nt = grid.times.len();
    let product = |z1: usize, z2: usize| -> f64 {
        let p1 = grid.point(z1);
        let p2 = grid.point(z2);
        let r = p1.euclidean(&p2);
        if r <= 0.0 || r > threshold {
            return 0.0;
        }
        (p.values[z1] - p.values[z2]).abs() * (-r.ln())
    };
    let mut best: f64 = 0.0;
    for it in 0..nt {
        for iy in 0..res {
            for ix in 0..res {
                let z = it * nq + iy * res + ix;
                if ix + 1 < res {
                    best = best.max(product(z, z + 1));
                }
                if iy + 1 < res {
                    best = best.max(product(z, z + res));
                }
                if it + 1 < nt {
                    best = best.max(product(z, z + nq));
                }
            }
        }
    }
    // Strided subsample keeps the all-pairs sweep bounded.
    let n = grid.len();
    let target = 1024usize;
    let stride = (n / target).max(1);
    let subsample: Vec<usize> = (0..n).step_by(stride).collect();
    for (i, &z1) in subsample.iter().enumerate() {
        for &z2 in &subsample[i + 1..] {
            best = best.max(product(z1, z2));
        }
    }
    best
}

/// Constant in the elementary bound x^beta <= C / (-log x) on (0, 1/2):
/// the maximiser of x^beta (-log x) is x = exp(-1/beta).
pub fn power_log_bound(beta: f64) -> f64 {
    assert!(beta > 0.0);
    let interior = 1.0 / (std::f64::consts::E * beta);
    let boundary = 0.5_f64.powf(beta) * 2.0_f64.ln();
    interior.max(boundary)
}

/// Upper bound for d_p(z1,z2)^alpha * (-log |z1 - z2|) over pairs with
/// |z1 - z2| < 1/8: combining d_p <= 2 |z1 - z2|^(1/2) with the elementary
/// log bound at beta = alpha / 2 gives 2^alpha * power_log_bound(alpha / 2).
pub fn parabolic_log_bound(alpha: f64) -> f64 {
    assert!(alpha > 0.0 && alpha < 1.0);
    2.0_f64.powf(alpha) * power_log_bound(0.5 * alpha)
}
