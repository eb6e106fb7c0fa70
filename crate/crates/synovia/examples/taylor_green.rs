//! Taylor-Green vortex benchmark: the one scenario with a closed-form
//! solution. On the torus with a Newtonian index the vortex decays like
//! exp(-2 nu0 t); the run is compared against that at every output time.
//!
//!     cargo run --release --example taylor_green

use synovia::presets;
use synovia::solver::run_scenario;

fn main() {
    let scenario = presets::taylor_green();
    let nu0 = 0.1;
    println!("running {} (torus, p = 2, nu0 = {nu0}) ...", scenario.name);
    let start = std::time::Instant::now();
    let traj = run_scenario(&scenario).expect("run succeeds");
    println!("integrated to t = {} in {:.2?}\n", scenario.domain.t_final, start.elapsed());

    let a0 = &traj.states[0].a;
    println!("{:>6} {:>14} {:>14} {:>12}", "t", "kinetic", "exact", "rel error");
    for (i, state) in traj.states.iter().enumerate().step_by(10) {
        let decay = (-2.0 * nu0 * state.t).exp();
        let mut err_sq = 0.0;
        let mut ref_sq = 0.0;
        for j in 0..a0.len() {
            let exact = a0[j] * decay;
            err_sq += (state.a[j] - exact) * (state.a[j] - exact);
            ref_sq += exact * exact;
        }
        let kinetic = traj.records[i].kinetic_energy;
        let exact_kinetic = traj.records[0].kinetic_energy * decay * decay;
        println!(
            "{:6.2} {:14.8e} {:14.8e} {:12.3e}",
            state.t,
            kinetic,
            exact_kinetic,
            (err_sq / ref_sq).sqrt()
        );
    }
}
