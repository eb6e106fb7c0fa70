//! Stress and flux models with concentration-dependent power-law index,
//! together with numerical verifiers of their structural inequalities
//! (growth, strict monotonicity, coercivity, flux bounds).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result, StructureWitness};

/// Smallest admissible distance of an exponent from 1.
pub const EXPONENT_MARGIN: f64 = 1e-12;

/// A symmetric 2x2 tensor value (B12 = B21 stored once).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymTensor2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl SymTensor2 {
    pub const ZERO: SymTensor2 = SymTensor2 {
        xx: 0.0,
        xy: 0.0,
        yy: 0.0,
    };

    pub fn diag(a: f64, b: f64) -> Self {
        SymTensor2 {
            xx: a,
            xy: 0.0,
            yy: b,
        }
    }

    /// Frobenius norm squared, counting the off-diagonal entry twice.
    pub fn norm_sq(&self) -> f64 {
        self.xx * self.xx + 2.0 * self.xy * self.xy + self.yy * self.yy
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Frobenius double contraction A : B.
    pub fn dot(&self, other: &SymTensor2) -> f64 {
        self.xx * other.xx + 2.0 * self.xy * other.xy + self.yy * other.yy
    }

    pub fn scale(&self, s: f64) -> SymTensor2 {
        SymTensor2 {
            xx: s * self.xx,
            xy: s * self.xy,
            yy: s * self.yy,
        }
    }

    pub fn sub(&self, other: &SymTensor2) -> SymTensor2 {
        SymTensor2 {
            xx: self.xx - other.xx,
            xy: self.xy - other.xy,
            yy: self.yy - other.yy,
        }
    }
}

/// Named closed form for a power-law index prescribed directly in space-time
/// (the electro-rheological case, where the index comes from a given field
/// rather than from the concentration).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrescribedIndexForm {
    pub mean: f64,
    pub amplitude: f64,
    /// Spatial wave numbers of the sin*sin modulation, in units of the box.
    pub kx: f64,
    pub ky: f64,
    /// Temporal angular frequency of the cos modulation.
    pub omega: f64,
    /// Side length of the box the wave numbers refer to.
    pub extent: f64,
}

impl PrescribedIndexForm {
    pub fn value(&self, x: f64, y: f64, t: f64) -> f64 {
        let sx = (2.0 * std::f64::consts::PI * self.kx * x / self.extent).sin();
        let sy = (2.0 * std::f64::consts::PI * self.ky * y / self.extent).sin();
        self.mean + self.amplitude * sx * sy * (self.omega * t).cos()
    }
}

/// Family of admissible power-law indices: bounded in [p_min, p_max] with
/// 1 < p_min, and Lipschitz (hence Holder) in its argument.
#[derive(Debug, Clone, PartialEq)]
pub enum PowerIndexFamily {
    /// p(c) = p_max - (p_max - p_min) * min(1, c / c_ref); decreasing in c, so
    /// higher concentration thins shear more.
    PiecewiseLinearInC { p_min: f64, p_max: f64, c_ref: f64 },
    /// p(c) = p_min + (p_max - p_min) * exp(-c / c_ref).
    ExponentialInC { p_min: f64, p_max: f64, c_ref: f64 },
    /// Index prescribed as a closed form in (x, t), ignoring the concentration.
    PrescribedInXT(PrescribedIndexForm),
}

impl PowerIndexFamily {
    pub fn constant(p: f64) -> Self {
        PowerIndexFamily::PiecewiseLinearInC {
            p_min: p,
            p_max: p,
            c_ref: 1.0,
        }
    }

    pub fn p_min(&self) -> f64 {
        match self {
            PowerIndexFamily::PiecewiseLinearInC { p_min, .. }
            | PowerIndexFamily::ExponentialInC { p_min, .. } => *p_min,
            PowerIndexFamily::PrescribedInXT(f) => f.mean - f.amplitude.abs(),
        }
    }

    pub fn p_max(&self) -> f64 {
        match self {
            PowerIndexFamily::PiecewiseLinearInC { p_max, .. }
            | PowerIndexFamily::ExponentialInC { p_max, .. } => *p_max,
            PowerIndexFamily::PrescribedInXT(f) => f.mean + f.amplitude.abs(),
        }
    }

    pub fn c_ref(&self) -> f64 {
        match self {
            PowerIndexFamily::PiecewiseLinearInC { c_ref, .. }
            | PowerIndexFamily::ExponentialInC { c_ref, .. } => *c_ref,
            PowerIndexFamily::PrescribedInXT(_) => 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = (self.p_min(), self.p_max());
        if !(lo > 1.0) {
            return Err(Error::ExponentOutOfRange(lo));
        }
        if !(hi >= lo) || !hi.is_finite() {
            return Err(Error::ExponentOutOfRange(hi));
        }
        if self.c_ref() <= 0.0 {
            return Err(Error::InvalidScenario(
                "concentration scale c_ref must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Index as a function of the concentration alone. Negative inputs are
    /// clamped to zero (Galerkin truncation can undershoot); space-time
    /// prescribed families are evaluated at the origin here.
    pub fn power_index(&self, c: f64) -> f64 {
        self.index_at(c, 0.0, 0.0, 0.0)
    }

    /// Index at a space-time point; the total evaluation used by the solver.
    pub fn index_at(&self, c: f64, x: f64, y: f64, t: f64) -> f64 {
        let c = c.max(0.0);
        let raw = match self {
            PowerIndexFamily::PiecewiseLinearInC {
                p_min,
                p_max,
                c_ref,
            } => p_max - (p_max - p_min) * (c / c_ref).min(1.0),
            PowerIndexFamily::ExponentialInC {
                p_min,
                p_max,
                c_ref,
            } => p_min + (p_max - p_min) * (-c / c_ref).exp(),
            PowerIndexFamily::PrescribedInXT(f) => f.value(x, y, t),
        };
        raw.clamp(self.p_min(), self.p_max())
    }

    /// A Lipschitz constant of the family in its argument (c for the
    /// concentration-driven kinds, space-time for the prescribed kind).
    pub fn lipschitz_constant(&self) -> f64 {
        match self {
            PowerIndexFamily::PiecewiseLinearInC {
                p_min,
                p_max,
                c_ref,
            }
            | PowerIndexFamily::ExponentialInC {
                p_min,
                p_max,
                c_ref,
            } => (p_max - p_min) / c_ref,
            PowerIndexFamily::PrescribedInXT(f) => {
                let k = 2.0 * std::f64::consts::PI / f.extent;
                f.amplitude.abs() * (k * f.kx.abs() + k * f.ky.abs() + f.omega.abs())
            }
        }
    }
}

/// Dual (conjugate) exponent p' = p / (p - 1), satisfying 1/p + 1/p' = 1.
pub fn dual_exponent(p: f64) -> Result<f64> {
    if p <= 1.0 + EXPONENT_MARGIN {
        return Err(Error::ExponentOutOfRange(p));
    }
    Ok(p / (p - 1.0))
}

/// Algebraic form of the extra stress.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StressForm {
    /// S = 2 nu0 (1 + |B|^2)^((p-2)/2) B. The leading 2 nu0 is the standard
    /// incompressible normalisation: at p = 2 the momentum equation reduces
    /// to the Navier-Stokes equations with kinematic viscosity nu0.
    PowerLaw { nu0: f64 },
    /// S = (nu1 + nu2 |B|^2)^((p-2)/2) B, the form used with a mollified
    /// exponent in the regularised problem.
    Regularized { nu1: f64, nu2: f64 },
}

/// Extra stress model: a stress form paired with a power-index family and
/// the structural constants C1 (growth), C2, C3 (coercivity) it declares.
///
/// C2 and C3 are not universal for this family, so they are derived at
/// construction by a dense sweep over (p, |B|) in [p_min, p_max] x [0, 1e3]
/// and stored; `check_stress_structure` then validates them on random
/// samples.
#[derive(Debug, Clone, PartialEq)]
pub struct StressModel {
    pub form: StressForm,
    pub index: PowerIndexFamily,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

/// Resolution of the coercivity sweep grid.
const SWEEP_P: usize = 121;
const SWEEP_B: usize = 1200;
const SWEEP_B_MAX: f64 = 1e3;

impl StressModel {
    pub fn power_law(nu0: f64, index: PowerIndexFamily) -> Result<Self> {
        if !(nu0 > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "viscosity scale must be positive, got {nu0}"
            )));
        }
        index.validate()?;
        Self::with_form(StressForm::PowerLaw { nu0 }, index)
    }

    pub fn regularized(nu1: f64, nu2: f64, index: PowerIndexFamily) -> Result<Self> {
        if !(nu1 > 0.0) || nu2 < 0.0 {
            return Err(Error::InvalidScenario(format!(
                "regularised viscosity pair must satisfy nu1 > 0, nu2 >= 0, got ({nu1}, {nu2})"
            )));
        }
        index.validate()?;
        Self::with_form(StressForm::Regularized { nu1, nu2 }, index)
    }

    fn with_form(form: StressForm, index: PowerIndexFamily) -> Result<Self> {
        let (c1, c2, c3) = derive_structure_constants(&form, index.p_min(), index.p_max());
        Ok(StressModel {
            form,
            index,
            c1,
            c2,
            c3,
        })
    }

    /// Generalised viscosity coefficient nu(p, |B|^2) with S = nu * B.
    pub fn viscosity(&self, p: f64, b_norm_sq: f64) -> f64 {
        let e = 0.5 * (p - 2.0);
        match self.form {
            StressForm::PowerLaw { nu0 } => 2.0 * nu0 * (1.0 + b_norm_sq).powf(e),
            StressForm::Regularized { nu1, nu2 } => (nu1 + nu2 * b_norm_sq).powf(e),
        }
    }

    /// Stress at concentration `c` (index evaluated through the family).
    pub fn stress(&self, c: f64, b: &SymTensor2) -> SymTensor2 {
        self.stress_with_index(self.index.power_index(c), b)
    }

    /// Stress with the index already evaluated; the hot path in the solver.
    pub fn stress_with_index(&self, p: f64, b: &SymTensor2) -> SymTensor2 {
        b.scale(self.viscosity(p, b.norm_sq()))
    }
}

/// Sweep-derive (C1, C2, C3) for a stress form over the exponent range.
///
/// C1 bounds |S| / (|B|^(p-1) + 1) from above; C2, C3 make
/// S:B >= C2 (|B|^p + |S|^p') - C3 hold on the grid, with safety margins so
/// random sampling inside the swept region cannot fall outside.
fn derive_structure_constants(form: &StressForm, p_min: f64, p_max: f64) -> (f64, f64, f64) {
    let model = StressModel {
        form: *form,
        index: PowerIndexFamily::constant(2.0),
        c1: 0.0,
        c2: 0.0,
        c3: 0.0,
    };
    let mut growth_max: f64 = 0.0;
    let mut ratio_min = f64::INFINITY;
    // Quantities depend on B only through |B|; sweep the scalar shear rate.
    for ip in 0..SWEEP_P {
        let p = p_min + (p_max - p_min) * ip as f64 / (SWEEP_P - 1) as f64;
        let p_dual = p / (p - 1.0);
        for ib in 0..=SWEEP_B {
            // Geometric-ish spacing: dense near zero where the bound is tight.
            let frac = ib as f64 / SWEEP_B as f64;
            let s = SWEEP_B_MAX * frac * frac;
            let nu = model.viscosity(p, s * s);
            let stress_mag = nu * s;
            growth_max = growth_max.max(stress_mag / (s.powf(p - 1.0) + 1.0));
            let dissipation = nu * s * s;
            let budget = s.powf(p) + stress_mag.powf(p_dual);
            if budget > 0.0 {
                ratio_min = ratio_min.min(dissipation / budget);
            }
        }
    }
    let c1 = match form {
        // Closed form for the power-law prototype; the sweep stays below it.
        StressForm::PowerLaw { nu0 } => {
            2.0 * nu0 * 1.0_f64.max(2.0_f64.powf(0.5 * (p_max - 2.0)))
        }
        StressForm::Regularized { .. } => growth_max * 1.05,
    };
    // Half the worst dissipation/budget ratio leaves slack; C3 then absorbs
    // the worst remaining deficit on the grid (at |B| = 0 both sides vanish,
    // so a unit offset is already safe, but recompute to be sure).
    let c2 = 0.5 * ratio_min;
    let mut deficit_max: f64 = 0.0;
    for ip in 0..SWEEP_P {
        let p = p_min + (p_max - p_min) * ip as f64 / (SWEEP_P - 1) as f64;
        let p_dual = p / (p - 1.0);
        for ib in 0..=SWEEP_B {
            let frac = ib as f64 / SWEEP_B as f64;
            let s = SWEEP_B_MAX * frac * frac;
            let nu = model.viscosity(p, s * s);
            let stress_mag = nu * s;
            let deficit = c2 * (s.powf(p) + stress_mag.powf(p_dual)) - nu * s * s;
            deficit_max = deficit_max.max(deficit);
        }
    }
    let c3 = deficit_max * 1.05 + 1e-12;
    (c1, c2, c3)
}

/// Diffusion flux model q_c(c, g, B) = K(c, |B|) g with the scalar bounded
/// coefficient K(c, s) = k0 + k1 / (1 + s^2); C5 = k0 <= K <= k0 + k1 = C4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxModel {
    pub k0: f64,
    pub k1: f64,
}

impl FluxModel {
    pub fn new(k0: f64, k1: f64) -> Result<Self> {
        if !(k0 > 0.0) || k1 < 0.0 {
            return Err(Error::InvalidScenario(format!(
                "flux coefficients must satisfy k0 > 0, k1 >= 0, got ({k0}, {k1})"
            )));
        }
        Ok(FluxModel { k0, k1 })
    }

    /// Upper coefficient bound C4.
    pub fn c4(&self) -> f64 {
        self.k0 + self.k1
    }

    /// Lower (coercivity) coefficient bound C5.
    pub fn c5(&self) -> f64 {
        self.k0
    }

    /// Scalar coefficient K(c, |B|). The concentration argument is kept for
    /// the model signature; this scalar prototype does not use it.
    pub fn coefficient(&self, _c: f64, b_norm: f64) -> f64 {
        self.k0 + self.k1 / (1.0 + b_norm * b_norm)
    }

    /// Flux vector K(c, |B|) g; linear in g by construction.
    pub fn flux(&self, c: f64, g: [f64; 2], b: &SymTensor2) -> [f64; 2] {
        let k = self.coefficient(c, b.norm());
        [k * g[0], k * g[1]]
    }
}

/// Observed extremes of the stress structural inequalities over a sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct StressStructureReport {
    pub samples: usize,
    /// max |S| / (|B|^(p-1) + 1); must stay <= C1.
    pub growth_ratio_max: f64,
    /// min (S(B1) - S(B2)) : (B1 - B2) / |B1 - B2|^2 over distinct pairs.
    pub monotonicity_gap_min: f64,
    /// min S:B - C2 (|B|^p + |S|^p') + C3.
    pub coercivity_margin_min: f64,
}

/// Observed extremes of the flux bounds over a sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxStructureReport {
    pub samples: usize,
    /// min C4 |g| - |q|.
    pub upper_margin_min: f64,
    /// min q.g - C5 |g|^2.
    pub lower_margin_min: f64,
}

/// Relative margin required of the monotonicity gap.
pub const MONOTONICITY_MARGIN: f64 = 1e-14;

fn sample_tensor<R: Rng>(rng: &mut R) -> SymTensor2 {
    SymTensor2 {
        xx: rng.gen_range(-10.0..10.0),
        xy: rng.gen_range(-10.0..10.0),
        yy: rng.gen_range(-10.0..10.0),
    }
}

/// Verify growth, strict monotonicity and coercivity of a stress model on
/// `n_samples` seeded random (c, B1, B2) tuples with c in [0, 10 c_ref] and
/// tensor entries in [-10, 10]. Fails with the witnessing sample.
pub fn check_stress_structure(
    model: &StressModel,
    n_samples: usize,
    seed: u64,
) -> Result<StressStructureReport> {
    assert!(n_samples >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c_hi = 10.0 * model.index.c_ref();
    let mut report = StressStructureReport {
        samples: n_samples,
        growth_ratio_max: 0.0,
        monotonicity_gap_min: f64::INFINITY,
        coercivity_margin_min: f64::INFINITY,
    };
    for _ in 0..n_samples {
        let c = rng.gen_range(0.0..c_hi);
        let b1 = sample_tensor(&mut rng);
        let b2 = sample_tensor(&mut rng);
        let p = model.index.power_index(c);
        let p_dual = dual_exponent(p)?;
        let s1 = model.stress(c, &b1);

        let ratio = s1.norm() / (b1.norm().powf(p - 1.0) + 1.0);
        report.growth_ratio_max = report.growth_ratio_max.max(ratio);
        if ratio > model.c1 {
            return Err(Error::StructureViolation(Box::new(StructureWitness {
                check: "growth",
                c,
                b1: [b1.xx, b1.xy, b1.yy],
                b2: None,
                g: None,
                value: ratio,
                bound: model.c1,
            })));
        }

        let diff = b1.sub(&b2);
        let diff_sq = diff.norm_sq();
        if diff_sq > 0.0 {
            let s2 = model.stress(c, &b2);
            let gap = s1.sub(&s2).dot(&diff);
            report.monotonicity_gap_min = report.monotonicity_gap_min.min(gap / diff_sq);
            if gap < MONOTONICITY_MARGIN * diff_sq {
                return Err(Error::StructureViolation(Box::new(StructureWitness {
                    check: "monotonicity",
                    c,
                    b1: [b1.xx, b1.xy, b1.yy],
                    b2: Some([b2.xx, b2.xy, b2.yy]),
                    g: None,
                    value: gap,
                    bound: MONOTONICITY_MARGIN * diff_sq,
                })));
            }
        }

        let margin = s1.dot(&b1) - model.c2 * (b1.norm().powf(p) + s1.norm().powf(p_dual))
            + model.c3;
        report.coercivity_margin_min = report.coercivity_margin_min.min(margin);
        if margin < 0.0 {
            return Err(Error::StructureViolation(Box::new(StructureWitness {
                check: "coercivity",
                c,
                b1: [b1.xx, b1.xy, b1.yy],
                b2: None,
                g: None,
                value: margin,
                bound: 0.0,
            })));
        }
    }
    Ok(report)
}

/// Verify |q| <= C4 |g| and q.g >= C5 |g|^2 on seeded random samples.
pub fn check_flux_structure(
    model: &FluxModel,
    n_samples: usize,
    seed: u64,
) -> Result<FluxStructureReport> {
    assert!(n_samples >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = FluxStructureReport {
        samples: n_samples,
        upper_margin_min: f64::INFINITY,
        lower_margin_min: f64::INFINITY,
    };
    for _ in 0..n_samples {
        let c = rng.gen_range(0.0..10.0);
        let b = sample_tensor(&mut rng);
        let g = [rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)];
        let q = model.flux(c, g, &b);
        let g_norm = (g[0] * g[0] + g[1] * g[1]).sqrt();
        let q_norm = (q[0] * q[0] + q[1] * q[1]).sqrt();
        let upper = model.c4() * g_norm - q_norm;
        // Tiny negative slack allowed: |q| = K|g| is computed in floating point.
        report.upper_margin_min = report.upper_margin_min.min(upper);
        if upper < -1e-12 * model.c4() * g_norm.max(1.0) {
            return Err(Error::StructureViolation(Box::new(StructureWitness {
                check: "flux_upper",
                c,
                b1: [b.xx, b.xy, b.yy],
                b2: None,
                g: Some(g),
                value: q_norm,
                bound: model.c4() * g_norm,
            })));
        }
        let lower = q[0] * g[0] + q[1] * g[1] - model.c5() * g_norm * g_norm;
        report.lower_margin_min = report.lower_margin_min.min(lower);
        if lower < -1e-12 * model.c5() * g_norm.max(1.0) {
            return Err(Error::StructureViolation(Box::new(StructureWitness {
                check: "flux_lower",
                c,
                b1: [b.xx, b.xy, b.yy],
                b2: None,
                g: Some(g),
                value: q[0] * g[0] + q[1] * g[1],
                bound: model.c5() * g_norm * g_norm,
            })));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn piecewise(p_min: f64, p_max: f64, c_ref: f64) -> PowerIndexFamily {
        PowerIndexFamily::PiecewiseLinearInC {
            p_min,
            p_max,
            c_ref,
        }
    }

    #[test]
    fn piecewise_linear_index_endpoints_and_midpoint() {
        let fam = piecewise(1.5, 2.5, 1.0);
        assert_abs_diff_eq!(fam.power_index(0.0), 2.5, epsilon = 0.0);
        assert_abs_diff_eq!(fam.power_index(1.0), 1.5, epsilon = 0.0);
        assert_abs_diff_eq!(fam.power_index(7.3), 1.5, epsilon = 0.0);
        assert_abs_diff_eq!(fam.power_index(0.5), 2.0, epsilon = 1e-15);
        // Negative inputs clamp to zero.
        assert_abs_diff_eq!(fam.power_index(-0.4), 2.5, epsilon = 0.0);
    }

    #[test]
    fn exponential_index_stays_in_bounds() {
        let fam = PowerIndexFamily::ExponentialInC {
            p_min: 1.6,
            p_max: 2.4,
            c_ref: 0.5,
        };
        for i in 0..100 {
            let c = i as f64 * 0.1;
            let p = fam.power_index(c);
            assert!((1.6..=2.4).contains(&p));
        }
        assert_abs_diff_eq!(fam.power_index(0.0), 2.4, epsilon = 1e-15);
    }

    #[test]
    fn dual_exponent_values_and_involution() {
        assert_abs_diff_eq!(dual_exponent(2.0).unwrap(), 2.0, epsilon = 0.0);
        assert_abs_diff_eq!(dual_exponent(3.0).unwrap(), 1.5, epsilon = 0.0);
        assert_abs_diff_eq!(dual_exponent(1.5).unwrap(), 3.0, epsilon = 0.0);
        for p in [1.1, 1.7, 2.9, 14.0] {
            let pp = dual_exponent(dual_exponent(p).unwrap()).unwrap();
            assert_abs_diff_eq!(pp, p, epsilon = 1e-12);
        }
        assert!(matches!(
            dual_exponent(1.0),
            Err(Error::ExponentOutOfRange(_))
        ));
    }

    #[test]
    fn stress_vanishes_at_zero_strain() {
        let model = StressModel::power_law(1.0, piecewise(1.5, 2.5, 1.0)).unwrap();
        let s = model.stress(0.3, &SymTensor2::ZERO);
        assert_eq!(s, SymTensor2::ZERO);
    }

    #[test]
    fn newtonian_case_is_linear_in_strain() {
        // p = 2 makes the exponent vanish: S = 2 nu0 B for any B.
        let model = StressModel::power_law(0.7, PowerIndexFamily::constant(2.0)).unwrap();
        let b = SymTensor2 {
            xx: 1.3,
            xy: -0.4,
            yy: 0.2,
        };
        let s = model.stress(5.0, &b);
        assert_abs_diff_eq!(s.xx, 2.0 * 0.7 * b.xx, epsilon = 1e-15);
        assert_abs_diff_eq!(s.xy, 2.0 * 0.7 * b.xy, epsilon = 1e-15);
        assert_abs_diff_eq!(s.yy, 2.0 * 0.7 * b.yy, epsilon = 1e-15);
    }

    #[test]
    fn shear_thinning_stress_matches_direct_formula() {
        // nu0 = 1, p = 1.5, B = diag(1, 0): |B|^2 = 1, so
        // S = 2 * (1 + 1)^(-1/4) B = 2^(3/4) B.
        let model = StressModel::power_law(1.0, PowerIndexFamily::constant(1.5)).unwrap();
        let s = model.stress(0.0, &SymTensor2::diag(1.0, 0.0));
        let expected = 2.0 * 2.0_f64.powf(-0.25);
        assert_abs_diff_eq!(s.xx, expected, epsilon = 1e-15);
        assert_abs_diff_eq!(s.xy, 0.0, epsilon = 0.0);
        assert_abs_diff_eq!(s.yy, 0.0, epsilon = 0.0);
    }

    #[test]
    fn stress_is_homogeneous_only_in_the_newtonian_case() {
        let newt = StressModel::power_law(1.0, PowerIndexFamily::constant(2.0)).unwrap();
        let thin = StressModel::power_law(1.0, PowerIndexFamily::constant(1.5)).unwrap();
        let b = SymTensor2::diag(1.0, -0.5);
        let b2 = b.scale(2.0);
        let s_newt = newt.stress(0.0, &b).scale(2.0);
        let s_newt2 = newt.stress(0.0, &b2);
        assert_abs_diff_eq!(s_newt.xx, s_newt2.xx, epsilon = 1e-14);
        // Witness where S(2B) != 2 S(B) for p != 2.
        let s_thin = thin.stress(0.0, &b).scale(2.0);
        let s_thin2 = thin.stress(0.0, &b2);
        assert!((s_thin.xx - s_thin2.xx).abs() > 1e-3);
    }

    #[test]
    fn monotonicity_gap_for_opposite_diagonal_pair() {
        // p = 2, nu0 = 1: gap = 2 nu0 |B1 - B2|^2 = 2 * 4 = 8 for
        // B1 = diag(1,0), B2 = diag(-1,0).
        let model = StressModel::power_law(1.0, PowerIndexFamily::constant(2.0)).unwrap();
        let b1 = SymTensor2::diag(1.0, 0.0);
        let b2 = SymTensor2::diag(-1.0, 0.0);
        let gap = model
            .stress(0.0, &b1)
            .sub(&model.stress(0.0, &b2))
            .dot(&b1.sub(&b2));
        assert_abs_diff_eq!(gap, 8.0, epsilon = 1e-14);
    }

    #[test]
    fn flux_is_identity_for_pure_fickian_coefficients() {
        let model = FluxModel::new(1.0, 0.0).unwrap();
        let g = [0.3, -0.7];
        let q = model.flux(2.0, g, &SymTensor2::diag(4.0, 1.0));
        assert_eq!(q, g);
    }

    #[test]
    fn flux_at_zero_strain_uses_full_coefficient() {
        let model = FluxModel::new(0.1, 0.9).unwrap();
        let q = model.flux(0.0, [1.0, 0.0], &SymTensor2::ZERO);
        assert_abs_diff_eq!(q[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q[1], 0.0, epsilon = 0.0);
    }

    #[test]
    fn flux_vanishes_for_zero_gradient_and_is_linear() {
        let model = FluxModel::new(0.1, 0.9).unwrap();
        let b = SymTensor2::diag(1.0, 2.0);
        assert_eq!(model.flux(1.0, [0.0, 0.0], &b), [0.0, 0.0]);
        let g1 = [1.0, 2.0];
        let g2 = [-0.5, 3.0];
        let (alpha, beta) = (1.7, -0.3);
        let combined = model.flux(
            1.0,
            [alpha * g1[0] + beta * g2[0], alpha * g1[1] + beta * g2[1]],
            &b,
        );
        let q1 = model.flux(1.0, g1, &b);
        let q2 = model.flux(1.0, g2, &b);
        for i in 0..2 {
            assert_abs_diff_eq!(combined[i], alpha * q1[i] + beta * q2[i], epsilon = 1e-15);
        }
    }

    #[test]
    fn structure_checks_pass_for_prototype_models() {
        let model = StressModel::power_law(1.0, piecewise(1.5, 2.5, 1.0)).unwrap();
        let report = check_stress_structure(&model, 2000, 7).unwrap();
        assert!(report.growth_ratio_max <= model.c1);
        assert!(report.monotonicity_gap_min > MONOTONICITY_MARGIN);
        assert!(report.coercivity_margin_min >= 0.0);

        let flux = FluxModel::new(0.1, 0.9).unwrap();
        let report = check_flux_structure(&flux, 2000, 7).unwrap();
        assert!(report.lower_margin_min >= -1e-12);
    }

    #[test]
    fn structure_checks_pass_for_regularized_form() {
        let model = StressModel::regularized(0.8, 1.2, piecewise(1.6, 2.4, 1.0)).unwrap();
        let report = check_stress_structure(&model, 2000, 11).unwrap();
        assert!(report.coercivity_margin_min >= 0.0);
    }

    #[test]
    fn newtonian_growth_check_uses_declared_constant() {
        // For p = 2 and nu0 = 1/2 (so 2 nu0 = 1): |S| = |B| <= C1 (|B| + 1).
        let model = StressModel::power_law(0.5, PowerIndexFamily::constant(2.0)).unwrap();
        assert_abs_diff_eq!(model.c1, 1.0, epsilon = 1e-15);
        check_stress_structure(&model, 500, 3).unwrap();
    }

    proptest::proptest! {
        #[test]
        fn prop_flux_is_exactly_linear_in_the_gradient(
            g1 in (-10.0..10.0f64, -10.0..10.0f64),
            g2 in (-10.0..10.0f64, -10.0..10.0f64),
            alpha in -3.0..3.0f64,
            b in (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64),
        ) {
            let model = FluxModel::new(0.1, 0.9).unwrap();
            let tensor = SymTensor2 { xx: b.0, xy: b.1, yy: b.2 };
            let combined = model.flux(
                1.0,
                [alpha * g1.0 + g2.0, alpha * g1.1 + g2.1],
                &tensor,
            );
            let q1 = model.flux(1.0, [g1.0, g1.1], &tensor);
            let q2 = model.flux(1.0, [g2.0, g2.1], &tensor);
            // Linearity is exact: K does not depend on g.
            let k = model.coefficient(1.0, tensor.norm());
            proptest::prop_assert_eq!(combined[0], k * (alpha * g1.0 + g2.0));
            proptest::prop_assert!((combined[0] - (alpha * q1[0] + q2[0])).abs() <= 1e-13 * (1.0 + combined[0].abs()));
            proptest::prop_assert!((combined[1] - (alpha * q1[1] + q2[1])).abs() <= 1e-13 * (1.0 + combined[1].abs()));
        }

        #[test]
        fn prop_dual_exponent_is_an_involution(p in 1.01..50.0f64) {
            let pp = dual_exponent(dual_exponent(p).unwrap()).unwrap();
            proptest::prop_assert!((pp - p).abs() < 1e-10 * p);
        }

        #[test]
        fn prop_stress_monotonicity_gap_is_positive(
            c in 0.0..10.0f64,
            b1 in (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64),
            b2 in (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64),
        ) {
            let model = StressModel::power_law(1.0, piecewise(1.5, 2.5, 1.0)).unwrap();
            let t1 = SymTensor2 { xx: b1.0, xy: b1.1, yy: b1.2 };
            let t2 = SymTensor2 { xx: b2.0, xy: b2.1, yy: b2.2 };
            let diff = t1.sub(&t2);
            if diff.norm_sq() > 0.0 {
                let gap = model.stress(c, &t1).sub(&model.stress(c, &t2)).dot(&diff);
                proptest::prop_assert!(gap > MONOTONICITY_MARGIN * diff.norm_sq());
            }
        }
    }

    #[test]
    fn structure_violation_carries_witness() {
        // Deliberately corrupt the declared growth constant.
        let mut model = StressModel::power_law(1.0, piecewise(1.5, 2.5, 1.0)).unwrap();
        model.c1 = 1e-6;
        let err = check_stress_structure(&model, 100, 5).unwrap_err();
        match err {
            Error::StructureViolation(w) => assert_eq!(w.check, "growth"),
            other => panic!("expected structure violation, got {other:?}"),
        }
    }
}
