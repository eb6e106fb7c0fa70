//! The variable-exponent toolkit on its own: modulars, Luxembourg norms
//! (with the constant-exponent closed form as an oracle), Holder and Young
//! inequality reports, the parabolic metric, and Holder/log-Holder modulus
//! estimates.
//!
//!     cargo run --release --example variable_exponent_norms


use synovia::fields::{Domain, Quadrature};
use synovia::varexp::*;

fn main() {
    let domain = Domain::unit_square(1.0);
    let quad = Quadrature::new(&domain, 16);
    let grid = SpaceTimeGrid::uniform(quad, domain.t_final, 9);
    println!("grid: {} samples, total weight {:.12}", grid.len(), grid.total_weight());

    // Luxembourg norm vs the constant-exponent reduction.
    let f = SpaceTimeSamples::from_fn(grid.clone(), |x, y, t| 1.0 + (3.0 * x).sin() * y - 0.5 * t);
    for q in [1.5, 2.0, 3.0] {
        let p = ExponentField::constant(grid.clone(), q).unwrap();
        let lux = luxembourg_norm(&f, &p, LUXEMBOURG_TOL).unwrap();
        let direct = modular(&f, &p).unwrap().powf(1.0 / q);
        println!("q = {q}: luxembourg {lux:.10}, modular^(1/q) {direct:.10}");
    }

    // A genuinely variable exponent.
    let p = ExponentField::from_fn(grid.clone(), |x, y, t| 2.0 + 0.4 * (x - y) + 0.2 * t).unwrap();
    let lux = luxembourg_norm(&f, &p, LUXEMBOURG_TOL).unwrap();
    let unit_ball = modular(&f.scale(1.0 / lux), &p).unwrap();
    println!("\nvariable p in [{:.2}, {:.2}]: norm {lux:.8}, modular at the unit ball {unit_ball:.10}",
        p.p_min, p.p_max);

    // Holder / Young for a conjugate triple 1/s = 1/p + 1/q.
    let pe = ExponentField::constant(grid.clone(), 3.0).unwrap();
    let qe = ExponentField::constant(grid.clone(), 3.0).unwrap();
    let se = ExponentField::constant(grid.clone(), 1.5).unwrap();
    let g = SpaceTimeSamples::from_fn(grid.clone(), |x, y, t| (2.0 * y).cos() + x * t);
    let h = holder_check(&f, &g, &pe, &qe, &se).unwrap();
    println!("\nHolder: ||fg||_s = {:.6}, 2 ||f||_p ||g||_q = {:.6}, ratio {:.4} <= 2", h.lhs, h.rhs, h.ratio);
    let y = young_check(&f, &g, &pe, &qe, &se).unwrap();
    println!("Young (modular form): {:.6} <= {:.6}", y.lhs, y.rhs);

    // Parabolic metric and regularity estimators.
    let z1 = SpaceTimePoint { x: 0.0, y: 0.0, t: 0.0 };
    let z2 = SpaceTimePoint { x: 0.3, y: 0.4, t: 0.25 };
    println!("\nparabolic distance d_p(z1, z2) = {:.6}", parabolic_distance(&z1, &z2));

    let anchored = SpaceTimeSamples::from_fn(grid.clone(), move |x, y, t| {
        parabolic_distance(&SpaceTimePoint { x, y, t }, &z1).powf(0.6)
    });
    println!(
        "Holder seminorm estimate of d_p(., z1)^0.6 at alpha = 0.6: {:.6} (continuum value 1)",
        parabolic_holder_seminorm(&anchored, 0.6, 5000, 5)
    );

    let lipschitz = ExponentField::from_fn(grid, |x, _, _| 1.5 + 0.7 * x).unwrap();
    println!(
        "log-Holder modulus of a Lipschitz exponent: {:.6} (finite certifies membership)",
        log_holder_modulus(&lipschitz, 0.5)
    );
    println!(
        "elementary parabolic-log bound at alpha = 0.5: {:.6}",
        parabolic_log_bound(0.5)
    );
}
