//! Galerkin bases up close: divergence-free velocity fields from
//! stream-function generators (square) and Fourier modes (torus), their
//! Rayleigh quotients, Gram residuals, projections, and the binary basis
//! cache.
//!
//!     cargo run --release --example basis_gallery

use synovia::basis::{build_concentration_basis, build_velocity_basis, VelocityBasis};
use synovia::fields::{divergence, Domain, Quadrature};

fn main() {
    let domain = Domain::unit_square(1.0);
    let quad = Quadrature::new(&domain, 64);

    let vb = build_velocity_basis(&domain, &quad, 12).expect("basis builds");
    println!("square velocity basis, N = {}:", vb.n);
    println!("  gram residual        {:.3e}", vb.gram_residual());
    println!("  max node divergence  {:.3e}", vb.max_node_divergence());
    println!("  rayleigh quotients   {:?}",
        vb.rayleigh.iter().map(|r| (r * 100.0).round() / 100.0).collect::<Vec<_>>());

    // Reconstruction carries analytic gradients; its divergence vanishes
    // identically at the nodes.
    let u = vb.reconstruct(&[0.3; 12]).expect("in span");
    let div = divergence(&u).expect("differentiable");
    println!(
        "  |div u| at nodes     {:.3e} (exact cancellation)",
        div.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    );

    let cb = build_concentration_basis(&domain, &quad, 10).expect("basis builds");
    println!("\nsquare concentration basis, M = {}:", cb.m);
    println!("  gram residual        {:.3e}", cb.gram_residual());
    println!("  stiffness diagonal   {:?}",
        (0..5).map(|k| (cb.stiffness[(k, k)] * 100.0).round() / 100.0).collect::<Vec<_>>());

    let torus = Domain::torus(1.0);
    let tquad = Quadrature::new(&torus, 32);
    let tvb = build_velocity_basis(&torus, &tquad, 8).expect("basis builds");
    println!("\ntorus velocity basis, N = {}:", tvb.n);
    println!("  gram residual        {:.3e}", tvb.gram_residual());
    println!("  rayleigh quotients   {:?}", tvb.rayleigh);

    // Basis cache round trip.
    let dir = std::env::temp_dir().join("synovia_basis_cache_demo");
    std::fs::create_dir_all(&dir).expect("temp dir");
    let path = dir.join("velocity_basis.bin");
    vb.save_cache(&path).expect("cache written");
    let loaded = VelocityBasis::load_cache(&path, &domain, &quad, 12);
    println!("\ncache round trip: loaded = {}", loaded.is_some());
    let stale = VelocityBasis::load_cache(&path, &domain, &quad, 16);
    println!("mismatched request rejected: {}", stale.is_none());
    let _ = std::fs::remove_file(&path);
}
