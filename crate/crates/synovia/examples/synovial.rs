//! The coupled workhorse scenario: shear-thinning stress whose power-law
//! index decreases with the transported concentration, on the unit square
//! with no-slip/zero boundary data. Prints the diagnostics every few output
//! times and the worst max/min-principle violations.
//!
//!     cargo run --release --example synovial

use synovia::presets;
use synovia::solver::diagnostics::max_principle_worst;
use synovia::solver::run_scenario;

fn main() {
    let scenario = presets::synovial();
    println!(
        "running {} (N = {}, M = {}, {}^2 quadrature) ...",
        scenario.name, scenario.n_velocity, scenario.m_concentration, scenario.resolution
    );
    let start = std::time::Instant::now();
    let traj = run_scenario(&scenario).expect("run succeeds");
    println!("done in {:.2?}\n", start.elapsed());

    println!(
        "{:>5} {:>12} {:>12} {:>12} {:>9} {:>9} {:>7} {:>10} {:>10}",
        "t", "kinetic", "conc", "dissip", "c_min", "c_max", "clamps", "|grad u|_p", "|S|_p'"
    );
    for r in traj.records.iter().step_by(10) {
        println!(
            "{:5.2} {:12.5e} {:12.5e} {:12.5e} {:9.2e} {:9.5} {:7} {:10.4} {:10.4e}",
            r.t,
            r.kinetic_energy,
            r.conc_energy,
            r.dissipation,
            r.c_min,
            r.c_max,
            r.clamp_count,
            r.lux_grad_u,
            r.lux_stress
        );
    }
    let (over, under) = max_principle_worst(&traj, scenario.c_tilde0);
    println!(
        "\nmax principle at M = {}: worst overshoot {over:.3e}, worst undershoot {under:.3e}",
        scenario.m_concentration
    );
    println!("(both shrink as M grows; see the max_principle_sweep example)");
}
