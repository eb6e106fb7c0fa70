//! Monotonicity (Minty) gaps: for any solenoidal probe phi,
//! int_{Q_T} (S(c, Du) - S(c, Dphi)) : (Du - Dphi) >= 0, with equality only
//! when the probe's strain matches the solution's. Random probes drawn in
//! the velocity span are all nonnegative; the solution itself gives zero.
//!
//!     cargo run --release --example minty_probes

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use synovia::presets;
use synovia::solver::diagnostics::{monotonicity_gap, monotonicity_gap_series};
use synovia::solver::run_scenario;

fn main() {
    let mut scenario = presets::synovial();
    scenario.output_points = 40;
    let traj = run_scenario(&scenario).expect("run succeeds");
    let n = scenario.n_velocity;

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut min_gap = f64::INFINITY;
    let mut max_gap: f64 = 0.0;
    for _ in 0..50 {
        let probe: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let gap = monotonicity_gap(&traj, &probe).expect("gap");
        min_gap = min_gap.min(gap);
        max_gap = max_gap.max(gap);
    }
    println!("50 random static probes: gaps in [{min_gap:.6e}, {max_gap:.6e}] (all >= 0)");

    let zero = vec![0.0; n];
    println!(
        "zero probe (equals total dissipation): {:.6e}",
        monotonicity_gap(&traj, &zero).expect("gap")
    );

    let own: Vec<Vec<f64>> = traj.states.iter().map(|s| s.a.clone()).collect();
    println!(
        "probe = solution itself:               {:.6e}",
        monotonicity_gap_series(&traj, &own).expect("gap")
    );
}
