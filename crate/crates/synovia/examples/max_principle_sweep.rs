//! Max/min principle under concentration refinement. The continuum solution
//! satisfies 0 <= c <= c_tilde0; the Galerkin truncation violates the bounds
//! by amounts that shrink as the concentration basis grows.
//!
//!     cargo run --release --example max_principle_sweep

use synovia::presets;
use synovia::solver::diagnostics::max_principle_sweep;

fn main() {
    let base = presets::synovial();
    println!(
        "sweeping M over {{8, 16, 32}} on '{}' (c_tilde0 = {}) ...",
        base.name, base.c_tilde0
    );
    let start = std::time::Instant::now();
    let sweep = max_principle_sweep(&base, &[8, 16, 32]).expect("sweep succeeds");
    println!("done in {:.2?}\n", start.elapsed());
    println!("{:>4} {:>13} {:>13}", "M", "overshoot", "undershoot");
    for i in 0..sweep.m_list.len() {
        println!(
            "{:4} {:13.5e} {:13.5e}",
            sweep.m_list[i], sweep.overshoot[i], sweep.undershoot[i]
        );
    }
    println!("\n(overshoot = max(0, max c - c_tilde0), undershoot = max(0, -min c), worst over the run)");
}
