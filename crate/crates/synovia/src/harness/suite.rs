//! Seeded property sweeps behind the `property_suite` study: random-sample
//! verification of the norm toolkit, the inequality set, the parabolic
//! metric, and basis integrity. The acceptance tests drive these same
//! sweeps at their pinned sample counts.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::basis::{build_concentration_basis, build_velocity_basis};
use crate::error::Result;
use crate::fields::{Domain, Quadrature, ScalarField, VectorField};
use crate::varexp::{
    holder_check, luxembourg_norm, modular, parabolic_distance, parabolic_log_bound,
    young_check, ExponentField, SpaceTimeGrid, SpaceTimePoint, SpaceTimeSamples,
    LUXEMBOURG_TOL,
};

fn sweep_grid() -> Arc<SpaceTimeGrid> {
    let domain = Domain::unit_square(1.0);
    let quad = Quadrature::new(&domain, 12);
    SpaceTimeGrid::uniform(quad, 1.0, 6)
}

fn random_samples(grid: &Arc<SpaceTimeGrid>, rng: &mut ChaCha8Rng) -> SpaceTimeSamples {
    let values = (0..grid.len())
        .map(|_| rng.gen_range(-2.0..2.0))
        .collect();
    SpaceTimeSamples::from_values(grid.clone(), values)
}

fn random_smooth_exponent(
    grid: &Arc<SpaceTimeGrid>,
    rng: &mut ChaCha8Rng,
    lo: f64,
    hi: f64,
) -> ExponentField {
    let mid = 0.5 * (lo + hi);
    let amp = 0.5 * (hi - lo);
    let a = rng.gen_range(-1.0..1.0);
    let b = rng.gen_range(-1.0..1.0);
    let c = rng.gen_range(-1.0..1.0);
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    ExponentField::from_fn(grid.clone(), move |x, y, t| {
        let s = (a * (2.0 * std::f64::consts::PI * x + phase).sin()
            + b * (2.0 * std::f64::consts::PI * y).cos()
            + c * (std::f64::consts::PI * t).sin())
            / 3.0;
        mid + amp * s
    })
    .expect("exponent stays within its bounds")
}

/// Worst deviations of the Luxembourg norm across seeded random fields:
/// against the constant-exponent closed form directly, and from the
/// homogeneity and triangle norm axioms.
#[derive(Debug, Clone, Copy)]
pub struct LuxembourgSweep {
    pub max_constant_exponent_dev: f64,
    pub max_homogeneity_dev: f64,
    pub max_triangle_violation: f64,
    pub max_unit_ball_dev: f64,
}

pub fn luxembourg_sweep(seed: u64, n_fields: usize, n_pairs: usize) -> Result<LuxembourgSweep> {
    let grid = sweep_grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = LuxembourgSweep {
        max_constant_exponent_dev: 0.0,
        max_homogeneity_dev: 0.0,
        max_triangle_violation: 0.0,
        max_unit_ball_dev: 0.0,
    };
    // Constant-exponent reduction oracle: the norm is modular^(1/q).
    for q in [1.5, 2.0, 3.0] {
        let p = ExponentField::constant(grid.clone(), q)?;
        for _ in 0..n_fields {
            let f = random_samples(&grid, &mut rng);
            let lux = luxembourg_norm(&f, &p, LUXEMBOURG_TOL)?;
            let direct = modular(&f, &p)?.powf(1.0 / q);
            if direct > 0.0 {
                out.max_constant_exponent_dev = out
                    .max_constant_exponent_dev
                    .max((lux - direct).abs() / direct);
            }
        }
    }
    // Norm axioms on random pairs with a random variable exponent.
    for _ in 0..n_pairs {
        let p = random_smooth_exponent(&grid, &mut rng, 1.4, 3.2);
        let f = random_samples(&grid, &mut rng);
        let g = random_samples(&grid, &mut rng);
        let alpha = rng.gen_range(0.1..5.0);
        let nf = luxembourg_norm(&f, &p, LUXEMBOURG_TOL)?;
        let ng = luxembourg_norm(&g, &p, LUXEMBOURG_TOL)?;
        let nfa = luxembourg_norm(&f.scale(alpha), &p, LUXEMBOURG_TOL)?;
        out.max_homogeneity_dev = out
            .max_homogeneity_dev
            .max((nfa - alpha * nf).abs() / (1.0 + alpha * nf));
        let nsum = luxembourg_norm(&f.add(&g)?, &p, LUXEMBOURG_TOL)?;
        out.max_triangle_violation = out
            .max_triangle_violation
            .max((nsum - nf - ng) / (1.0 + nf + ng));
        // Unit-ball property: modular(f / ||f||) = 1.
        if nf > 0.0 {
            let m = modular(&f.scale(1.0 / nf), &p)?;
            out.max_unit_ball_dev = out.max_unit_ball_dev.max((m - 1.0).abs());
        }
    }
    Ok(out)
}

/// Worst outcomes of the Holder and Young inequality checks on seeded
/// random conjugate exponent triples.
#[derive(Debug, Clone, Copy)]
pub struct InequalitySweep {
    pub trials: usize,
    pub max_holder_ratio: f64,
    pub holder_violations: usize,
    pub young_violations: usize,
    /// max lhs - rhs over the Young trials (<= 0 when all pass).
    pub max_young_excess: f64,
}

pub fn inequality_sweep(seed: u64, trials: usize) -> Result<InequalitySweep> {
    let grid = sweep_grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = InequalitySweep {
        trials,
        max_holder_ratio: 0.0,
        holder_violations: 0,
        young_violations: 0,
        max_young_excess: f64::NEG_INFINITY,
    };
    for _ in 0..trials {
        // p, q well above 2 keep s = pq/(p+q) an admissible exponent.
        let p = random_smooth_exponent(&grid, &mut rng, 2.3, 4.0);
        let q = random_smooth_exponent(&grid, &mut rng, 2.3, 4.0);
        let s_values: Vec<f64> = p
            .values
            .iter()
            .zip(&q.values)
            .map(|(a, b)| 1.0 / (1.0 / a + 1.0 / b))
            .collect();
        let s = ExponentField::from_values(grid.clone(), s_values)?;
        let f = random_samples(&grid, &mut rng);
        let g = random_samples(&grid, &mut rng);
        let h = holder_check(&f, &g, &p, &q, &s)?;
        out.max_holder_ratio = out.max_holder_ratio.max(h.ratio);
        if !h.passed {
            out.holder_violations += 1;
        }
        let y = young_check(&f, &g, &p, &q, &s)?;
        out.max_young_excess = out.max_young_excess.max(y.lhs - y.rhs);
        if !y.passed {
            out.young_violations += 1;
        }
    }
    Ok(out)
}

/// Metric-axiom verification of the parabolic distance on random triples.
#[derive(Debug, Clone, Copy)]
pub struct MetricSweep {
    pub triples: usize,
    pub max_symmetry_dev: f64,
    pub max_triangle_violation: f64,
    pub min_distance: f64,
    pub identity_ok: bool,
}

pub fn metric_sweep(seed: u64, triples: usize) -> MetricSweep {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point = |rng: &mut ChaCha8Rng| SpaceTimePoint {
        x: rng.gen_range(-1.0..2.0),
        y: rng.gen_range(-1.0..2.0),
        t: rng.gen_range(0.0..3.0),
    };
    let mut out = MetricSweep {
        triples,
        max_symmetry_dev: 0.0,
        max_triangle_violation: f64::NEG_INFINITY,
        min_distance: f64::INFINITY,
        identity_ok: true,
    };
    for _ in 0..triples {
        let a = point(&mut rng);
        let b = point(&mut rng);
        let c = point(&mut rng);
        let dab = parabolic_distance(&a, &b);
        let dba = parabolic_distance(&b, &a);
        let dac = parabolic_distance(&a, &c);
        let dcb = parabolic_distance(&c, &b);
        out.max_symmetry_dev = out.max_symmetry_dev.max((dab - dba).abs());
        out.max_triangle_violation = out
            .max_triangle_violation
            .max(dab - dac - dcb);
        out.min_distance = out.min_distance.min(dab.min(dac).min(dcb));
        if parabolic_distance(&a, &a) != 0.0 {
            out.identity_ok = false;
        }
        if a != b && dab == 0.0 {
            out.identity_ok = false;
        }
    }
    out
}

/// Check of the elementary parabolic-log bound
/// d_p(z1,z2)^alpha * (-log |z1-z2|) <= 2^alpha * sup x^(alpha/2) (-log x)
/// on random close pairs; reports the worst ratio to the bound.
pub fn parabolic_log_sweep(seed: u64, pairs: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let alpha = rng.gen_range(0.05..0.95);
        let z1 = SpaceTimePoint {
            x: rng.gen_range(0.0..1.0),
            y: rng.gen_range(0.0..1.0),
            t: rng.gen_range(0.0..1.0),
        };
        // Displacement below 1/8 in Euclidean space-time norm.
        let r = rng.gen_range(1e-9..0.125f64);
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        let phi = rng.gen_range(0.0..std::f64::consts::PI);
        let z2 = SpaceTimePoint {
            x: z1.x + r * phi.sin() * theta.cos(),
            y: z1.y + r * phi.sin() * theta.sin(),
            t: z1.t + r * phi.cos(),
        };
        let dx = z1.x - z2.x;
        let dy = z1.y - z2.y;
        let dt = z1.t - z2.t;
        let euclid = (dx * dx + dy * dy + dt * dt).sqrt();
        if euclid <= 0.0 || euclid >= 0.125 {
            continue;
        }
        let lhs = parabolic_distance(&z1, &z2).powf(alpha) * (-euclid.ln());
        worst = worst.max(lhs / parabolic_log_bound(alpha));
    }
    worst
}

/// Machine-checkable basis invariants at a given size.
#[derive(Debug, Clone, Copy)]
pub struct BasisIntegrity {
    pub velocity_gram_residual: f64,
    pub concentration_gram_residual: f64,
    pub max_node_divergence: f64,
    pub rayleigh_monotone: bool,
    pub velocity_projection_dev: f64,
    pub concentration_projection_dev: f64,
}

pub fn basis_integrity(
    domain: &Domain,
    resolution: usize,
    n: usize,
    m: usize,
    seed: u64,
) -> Result<BasisIntegrity> {
    let quad = Quadrature::new(domain, resolution);
    let vb = build_velocity_basis(domain, &quad, n)?;
    let cb = build_concentration_basis(domain, &quad, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Projection idempotence on random span elements.
    let coeffs_v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let u: VectorField = vb.reconstruct(&coeffs_v)?;
    let back_v = vb.project(&u)?;
    let velocity_projection_dev = coeffs_v
        .iter()
        .zip(&back_v)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let coeffs_c: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let z: ScalarField = cb.reconstruct(&coeffs_c)?;
    let back_c = cb.project(&z)?;
    let concentration_projection_dev = coeffs_c
        .iter()
        .zip(&back_c)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    Ok(BasisIntegrity {
        velocity_gram_residual: vb.gram_residual(),
        concentration_gram_residual: cb.gram_residual(),
        max_node_divergence: vb.max_node_divergence(),
        rayleigh_monotone: vb.rayleigh.windows(2).all(|w| w[1] >= w[0]),
        velocity_projection_dev,
        concentration_projection_dev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweeps_pass_at_small_sample_counts() {
        let lux = luxembourg_sweep(11, 3, 10).unwrap();
        assert!(lux.max_constant_exponent_dev < 1e-8);
        assert!(lux.max_homogeneity_dev < 1e-8);
        assert!(lux.max_triangle_violation < 1e-8);
        let ineq = inequality_sweep(13, 10).unwrap();
        assert_eq!(ineq.holder_violations, 0);
        assert_eq!(ineq.young_violations, 0);
        assert!(ineq.max_holder_ratio <= 2.0);
        let metric = metric_sweep(17, 1000);
        assert_eq!(metric.max_symmetry_dev, 0.0);
        assert!(metric.max_triangle_violation <= 1e-15);
        assert!(metric.identity_ok);
        assert!(parabolic_log_sweep(19, 1000) <= 1.0);
    }
}
