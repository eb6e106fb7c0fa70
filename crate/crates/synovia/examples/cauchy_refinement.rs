//! Empirical Galerkin convergence: L2(Q_T) differences between consecutive
//! refinement levels, together with the variable-exponent norms
//! || |grad u| ||_{L^{p(c)}} and || |S| ||_{L^{p'(c)}} per level, which stay
//! uniformly bounded across refinements.
//!
//!     cargo run --release --example cauchy_refinement

use synovia::presets;
use synovia::solver::diagnostics::convergence_study;

fn main() {
    let base = presets::synovial();
    println!("refinement study on '{}' ...", base.name);
    let start = std::time::Instant::now();
    let table = convergence_study(&base, &[4, 8, 16], &[8, 16, 32]).expect("study succeeds");
    println!("done in {:.2?}\n", start.elapsed());

    println!("velocity Cauchy differences at fixed M = {}:", base.m_concentration);
    for (n1, n2, d) in &table.velocity {
        println!("  ||u^{n2} - u^{n1}||_L2(Q_T) = {d:.6e}");
    }
    println!("concentration Cauchy differences at fixed N = {}:", base.n_velocity);
    for (m1, m2, d) in &table.concentration {
        println!("  ||c^{m2} - c^{m1}||_L2(Q_T) = {d:.6e}");
    }
    println!("variable-exponent norms per velocity level:");
    for l in &table.levels {
        println!(
            "  N = {:2}: || |grad u| ||_p(c) = {:.6e}, || |S| ||_p'(c) = {:.6e}",
            l.n, l.lux_grad_u, l.lux_stress
        );
    }
}
