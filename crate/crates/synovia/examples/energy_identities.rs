//! Energy identities as numerical diagnostics: kinetic energy plus
//! accumulated stress dissipation balances the initial energy plus work,
//! and concentration energy plus flux dissipation is conserved. The
//! residuals shrink at the trapezoid rate when the output cadence doubles.
//!
//!     cargo run --release --example energy_identities

use synovia::presets;
use synovia::solver::diagnostics::{concentration_energy_residuals, energy_residuals};
use synovia::solver::run_scenario;

fn main() {
    for name in ["taylor_green", "synovial", "electro", "heat_only"] {
        let mut worst = Vec::new();
        for points in [100usize, 200] {
            let mut sc = presets::by_name(name).expect("preset");
            sc.output_points = points;
            let traj = run_scenario(&sc).expect("run succeeds");
            let e = energy_residuals(&traj).into_iter().fold(0.0f64, f64::max);
            let c = concentration_energy_residuals(&traj)
                .into_iter()
                .fold(0.0f64, f64::max);
            worst.push((points, e, c));
        }
        println!("{name}:");
        for (points, e, c) in &worst {
            println!("  {points:>3} output intervals: velocity residual {e:.3e}, concentration residual {c:.3e}");
        }
        let ratio = worst[0].1 / worst[1].1.max(1e-300);
        if worst[0].1 > 1e-12 {
            println!("  cadence doubling shrinks the velocity residual {ratio:.2}x (trapezoid order ~4)");
        } else {
            println!("  velocity residual at rounding level (velocity is trivial here)");
        }
    }
}
