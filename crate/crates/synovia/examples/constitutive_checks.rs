//! Structural verification of the constitutive models: growth, strict
//! monotonicity and coercivity of the stress (with its sweep-derived
//! constants C1, C2, C3) and the two-sided bounds of the diffusion flux,
//! on seeded random samples.
//!
//!     cargo run --release --example constitutive_checks

use synovia::constitutive::{
    check_flux_structure, check_stress_structure, dual_exponent, FluxModel, PowerIndexFamily,
    StressModel, SymTensor2,
};

fn main() {
    let index = PowerIndexFamily::PiecewiseLinearInC {
        p_min: 1.5,
        p_max: 2.5,
        c_ref: 1.0,
    };
    println!(
        "index family: p(0) = {}, p(0.5) = {}, p(1) = {}, Lipschitz constant {}",
        index.power_index(0.0),
        index.power_index(0.5),
        index.power_index(1.0),
        index.lipschitz_constant()
    );
    println!("dual exponents: p' of 1.5 / 2 / 2.5 = {} / {} / {}\n",
        dual_exponent(1.5).unwrap(),
        dual_exponent(2.0).unwrap(),
        dual_exponent(2.5).unwrap(),
    );

    let stress = StressModel::power_law(1.0, index).expect("valid model");
    println!("declared constants: C1 = {:.6}, C2 = {:.6}, C3 = {:.6}", stress.c1, stress.c2, stress.c3);
    let sample = stress.stress(0.0, &SymTensor2::diag(1.0, 0.0));
    println!("S(c=0, diag(1,0)) = diag({:.6}, {:.6})", sample.xx, sample.yy);

    let report = check_stress_structure(&stress, 100_000, 7).expect("structure holds");
    println!(
        "stress structure on {} samples:\n  growth ratio max {:.6e} (C1 = {:.6e})\n  monotonicity gap min {:.6e} per |B1-B2|^2\n  coercivity margin min {:.6e}",
        report.samples, report.growth_ratio_max, stress.c1, report.monotonicity_gap_min,
        report.coercivity_margin_min
    );

    let flux = FluxModel::new(0.1, 0.9).expect("valid model");
    let report = check_flux_structure(&flux, 100_000, 7).expect("bounds hold");
    println!(
        "flux bounds on {} samples (C4 = {}, C5 = {}):\n  upper margin min {:.3e}\n  lower margin min {:.3e}",
        report.samples,
        flux.c4(),
        flux.c5(),
        report.upper_margin_min,
        report.lower_margin_min
    );
}
