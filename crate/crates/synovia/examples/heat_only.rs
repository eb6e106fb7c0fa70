//! Sanity scenario: velocity at rest, constant diffusivity. Each
//! concentration mode decays at its exact rate K * G_kk, so the whole run
//! can be checked against closed-form modal decay.
//!
//!     cargo run --release --example heat_only

use synovia::presets;
use synovia::solver::diagnostics::concentration_energy_residuals;
use synovia::solver::run_scenario;

fn main() {
    let scenario = presets::heat_only();
    let traj = run_scenario(&scenario).expect("run succeeds");
    let sys = &traj.system;
    let k0 = scenario.flux.k0;

    // Initial modal content and its exact decay.
    let b0 = &traj.states[0].b;
    println!("initial coefficients: {b0:.4?}\n");
    println!("{:>6} {:>13} {:>13} {:>10}", "t", "b_1 computed", "b_1 exact", "abs error");
    let rate = k0 * sys.concentration_basis.stiffness[(0, 0)];
    for state in traj.states.iter().step_by(20) {
        let exact = b0[0] * (-rate * state.t).exp();
        println!(
            "{:6.2} {:13.6e} {:13.6e} {:10.2e}",
            state.t,
            state.b[0],
            exact,
            (state.b[0] - exact).abs()
        );
    }
    let worst = concentration_energy_residuals(&traj)
        .into_iter()
        .fold(0.0f64, f64::max);
    println!("\nconcentration energy-identity residual: {worst:.3e}");
}
