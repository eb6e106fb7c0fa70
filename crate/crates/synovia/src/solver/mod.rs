//! Assembly and time integration of the coupled Galerkin ODE systems.
//!
//! The unknowns are the velocity coefficients a(t) (divergence-free basis
//! {w_j}, L2-orthonormal) and concentration coefficients b(t) (basis {z_k},
//! L2-orthonormal), evolving by
//!
//!   da_j/dt = int [ (u (x) u) : Dw_j - S(c, Du) : Dw_j + f . w_j ] dx
//!   db_k/dt = int [ c u . grad z_k - K(c, |Du|) grad c . grad z_k ] dx
//!
//! with u, c, Du, grad c reconstructed spectrally from the coefficients and
//! all integrals evaluated on the shared quadrature. Orthonormality makes
//! both mass matrices the identity. The pressure never appears: the test
//! fields are solenoidal.
//!
//! With a positive mollification width the stress exponent is evaluated on a
//! causally lagged space-time smoothing of the concentration history instead
//! of the instantaneous concentration (see [`mollify`]).

pub mod diagnostics;
pub mod mollify;

use std::fmt;
use std::sync::Arc;

use crate::basis::{
    build_concentration_basis, build_velocity_basis, ConcentrationBasis, VelocityBasis,
};
use crate::constitutive::{FluxModel, StressModel};
use crate::error::{Error, Result};
use crate::fields::{Domain, DomainMode, Quadrature, ScalarField, VectorField};
use crate::numeric::pairwise_sum_by;
use crate::varexp::luxembourg_weighted;

use mollify::LaggedSmoother;

/// Exponent used for the running parabolic Holder estimate of the
/// concentration in the diagnostics records.
pub const HOLDER_ALPHA: f64 = 0.5;

// ---------------------------------------------------------------------------
// Scenario
// ---------------------------------------------------------------------------

/// Body force as a closed-form expression of (x, y, t).
#[derive(Clone)]
pub enum Forcing {
    Zero,
    Custom(Arc<dyn Fn(f64, f64, f64) -> [f64; 2] + Send + Sync>),
}

impl Forcing {
    pub fn eval(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        match self {
            Forcing::Zero => [0.0, 0.0],
            Forcing::Custom(f) => f(x, y, t),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Forcing::Zero)
    }
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Forcing::Zero => write!(f, "Forcing::Zero"),
            Forcing::Custom(_) => write!(f, "Forcing::Custom(..)"),
        }
    }
}

/// Initial velocity: rest, coefficients in the velocity basis, the
/// Taylor-Green vortex (torus), or a closed form projected via P^N.
#[derive(Clone)]
pub enum InitialVelocity {
    Rest,
    Coefficients(Vec<f64>),
    TaylorGreen { amplitude: f64 },
    Custom(Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>),
}

impl fmt::Debug for InitialVelocity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialVelocity::Rest => write!(f, "InitialVelocity::Rest"),
            InitialVelocity::Coefficients(c) => write!(f, "InitialVelocity::Coefficients({c:?})"),
            InitialVelocity::TaylorGreen { amplitude } => {
                write!(f, "InitialVelocity::TaylorGreen {{ amplitude: {amplitude} }}")
            }
            InitialVelocity::Custom(_) => write!(f, "InitialVelocity::Custom(..)"),
        }
    }
}

/// Initial concentration: zero, coefficients, or a closed form projected
/// via P^M. Closed forms must satisfy 0 <= c0 <= c_tilde0 at the nodes.
#[derive(Clone)]
pub enum InitialConcentration {
    Zero,
    Coefficients(Vec<f64>),
    Custom(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for InitialConcentration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialConcentration::Zero => write!(f, "InitialConcentration::Zero"),
            InitialConcentration::Coefficients(c) => {
                write!(f, "InitialConcentration::Coefficients({c:?})")
            }
            InitialConcentration::Custom(_) => write!(f, "InitialConcentration::Custom(..)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// Classical 4-stage Runge-Kutta with step-doubling error control;
    /// rejected steps are halved.
    Rk4Adaptive,
    /// Backward Euler by fixed-point iteration at fixed step size.
    ImplicitEuler,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSettings {
    pub scheme: Scheme,
    pub rtol: f64,
    pub atol: f64,
    pub dt_init: f64,
    pub dt_min: f64,
    pub max_steps: u64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        IntegratorSettings {
            scheme: Scheme::Rk4Adaptive,
            rtol: 1e-9,
            atol: 1e-12,
            dt_init: 1e-3,
            dt_min: 1e-10,
            max_steps: 50_000_000,
        }
    }
}

/// Full description of a run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub domain: Domain,
    /// Quadrature points per axis.
    pub resolution: usize,
    pub n_velocity: usize,
    pub m_concentration: usize,
    pub stress: StressModel,
    pub flux: FluxModel,
    pub forcing: Forcing,
    pub initial_velocity: InitialVelocity,
    pub initial_concentration: InitialConcentration,
    /// Upper bound of the initial concentration; the max/min principle
    /// reference level.
    pub c_tilde0: f64,
    /// Mollification width for the stress exponent; 0 disables it.
    pub epsilon: f64,
    /// Optional path of the binary velocity-basis cache; regenerated on any
    /// header mismatch.
    pub basis_cache: Option<std::path::PathBuf>,
    pub integrator: IntegratorSettings,
    /// Number of output intervals; records are emitted at
    /// `output_points + 1` equally spaced times including t = 0 and T.
    pub output_points: usize,
}

/// Coefficients of the approximate solution at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinState {
    pub t: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

/// Per-output-time diagnostics mirroring the quantities the a priori
/// estimates control.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// (1/2) ||u||_L2^2.
    pub kinetic_energy: f64,
    /// int S : Du dx (with the effective stress the dynamics used).
    pub dissipation: f64,
    /// int f . u dx.
    pub work: f64,
    /// (1/2) ||c||_L2^2.
    pub conc_energy: f64,
    /// int q_c . grad c dx >= 0.
    pub flux_dissipation: f64,
    pub c_min: f64,
    pub c_max: f64,
    /// Number of quadrature nodes with c < 0 at this output time (these are
    /// clamped inside the constitutive evaluations).
    pub clamp_count: usize,
    /// Spatial Luxembourg norm || |grad u| ||_{L^{p(c)}(Omega)}.
    pub lux_grad_u: f64,
    /// Spatial Luxembourg norm || |S| ||_{L^{p'(c)}(Omega)}.
    pub lux_stress: f64,
    /// Running parabolic Holder seminorm estimate of c over grid-adjacent
    /// pairs up to this time, at exponent `HOLDER_ALPHA`.
    pub holder_c: f64,
}

impl DiagnosticsRecord {
    pub fn all_finite(&self) -> bool {
        [
            self.t,
            self.kinetic_energy,
            self.dissipation,
            self.work,
            self.conc_energy,
            self.flux_dissipation,
            self.c_min,
            self.c_max,
            self.lux_grad_u,
            self.lux_stress,
            self.holder_c,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

// ---------------------------------------------------------------------------
// System
// ---------------------------------------------------------------------------

/// Scenario with its quadrature and bases built; the reusable context for
/// runs and post-hoc diagnostics.
#[derive(Debug, Clone)]
pub struct GalerkinSystem {
    pub scenario: Scenario,
    pub quad: Arc<Quadrature>,
    pub velocity_basis: Arc<VelocityBasis>,
    pub concentration_basis: Arc<ConcentrationBasis>,
}

/// Result of a run: coefficient states and diagnostics at the output times.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub system: Arc<GalerkinSystem>,
    pub times: Vec<f64>,
    pub states: Vec<GalerkinState>,
    pub records: Vec<DiagnosticsRecord>,
}

impl Trajectory {
    pub fn scenario(&self) -> &Scenario {
        &self.system.scenario
    }

    pub fn velocity_at(&self, i: usize) -> VectorField {
        self.system
            .velocity_basis
            .reconstruct(&self.states[i].a)
            .expect("trajectory states match the basis")
    }

    pub fn concentration_at(&self, i: usize) -> ScalarField {
        self.system
            .concentration_basis
            .reconstruct(&self.states[i].b)
            .expect("trajectory states match the basis")
    }
}

/// Node-sampled data shared by the right-hand sides and the diagnostics;
/// the single source of truth for the pointwise constitutive evaluations.
struct NodeEval {
    u1: Vec<f64>,
    u2: Vec<f64>,
    /// Symmetric gradient entries; d22 = -d11 exactly (solenoidal fields).
    d11: Vec<f64>,
    d12: Vec<f64>,
    c: Vec<f64>,
    cgx: Vec<f64>,
    cgy: Vec<f64>,
    /// Effective power-law exponent at each node.
    p: Vec<f64>,
    /// Generalized viscosity: S = visc * Du.
    visc: Vec<f64>,
    /// Flux coefficient K(c, |Du|).
    kcoef: Vec<f64>,
}

impl GalerkinSystem {
    pub fn new(scenario: Scenario) -> Result<Arc<GalerkinSystem>> {
        scenario.domain.validate()?;
        scenario.stress.index.validate()?;
        if scenario.epsilon < 0.0 {
            return Err(Error::InvalidScenario(format!(
                "mollification width must be nonnegative, got {}",
                scenario.epsilon
            )));
        }
        if scenario.output_points < 1 {
            return Err(Error::InvalidScenario(
                "need at least one output interval".into(),
            ));
        }
        let quad = Quadrature::new(&scenario.domain, scenario.resolution);
        let velocity_basis = match &scenario.basis_cache {
            Some(path) => match crate::basis::VelocityBasis::load_cache(
                path,
                &scenario.domain,
                &quad,
                scenario.n_velocity,
            ) {
                Some(basis) => Arc::new(basis),
                None => {
                    let basis =
                        build_velocity_basis(&scenario.domain, &quad, scenario.n_velocity)?;
                    basis.save_cache(path)?;
                    Arc::new(basis)
                }
            },
            None => Arc::new(build_velocity_basis(
                &scenario.domain,
                &quad,
                scenario.n_velocity,
            )?),
        };
        let concentration_basis = Arc::new(build_concentration_basis(
            &scenario.domain,
            &quad,
            scenario.m_concentration,
        )?);
        let sys = GalerkinSystem {
            scenario,
            quad,
            velocity_basis,
            concentration_basis,
        };
        sys.initial_state()?; // validates the initial data
        Ok(Arc::new(sys))
    }

    /// Initial coefficients: velocity through P^N, concentration through P^M.
    pub fn initial_state(&self) -> Result<GalerkinState> {
        let n = self.scenario.n_velocity;
        let m = self.scenario.m_concentration;
        let a = match &self.scenario.initial_velocity {
            InitialVelocity::Rest => vec![0.0; n],
            InitialVelocity::Coefficients(c) => {
                if c.len() > n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: c.len(),
                    });
                }
                let mut a = c.clone();
                a.resize(n, 0.0);
                a
            }
            InitialVelocity::TaylorGreen { amplitude } => {
                if self.scenario.domain.mode != DomainMode::PeriodicTorus {
                    return Err(Error::InvalidScenario(
                        "the Taylor-Green vortex lives on the torus".into(),
                    ));
                }
                let amp = *amplitude;
                let f = VectorField::from_fn(self.quad.clone(), move |x, y| {
                    [amp * x.sin() * y.cos(), -(amp * x.cos() * y.sin())]
                });
                self.velocity_basis.project(&f)?
            }
            InitialVelocity::Custom(f) => {
                let field = VectorField::from_fn(self.quad.clone(), |x, y| f(x, y));
                self.velocity_basis.project(&field)?
            }
        };
        let b = match &self.scenario.initial_concentration {
            InitialConcentration::Zero => vec![0.0; m],
            InitialConcentration::Coefficients(c) => {
                if c.len() > m {
                    return Err(Error::DimensionMismatch {
                        expected: m,
                        got: c.len(),
                    });
                }
                let mut b = c.clone();
                b.resize(m, 0.0);
                let field = self.concentration_basis.reconstruct(&b)?;
                self.check_initial_concentration(&field.values)?;
                b
            }
            InitialConcentration::Custom(f) => {
                let field = ScalarField::from_fn(self.quad.clone(), |x, y| f(x, y));
                self.check_initial_concentration(&field.values)?;
                self.concentration_basis.project(&field)?
            }
        };
        Ok(GalerkinState { t: 0.0, a, b })
    }

    fn check_initial_concentration(&self, values: &[f64]) -> Result<()> {
        let tol = 1e-12 * (1.0 + self.scenario.c_tilde0.abs());
        for &v in values {
            if v < -tol || v > self.scenario.c_tilde0 + tol {
                return Err(Error::InvalidScenario(format!(
                    "initial concentration value {v} outside [0, {}]",
                    self.scenario.c_tilde0
                )));
            }
        }
        Ok(())
    }

    /// Pointwise reconstruction and constitutive evaluation at the nodes.
    /// `c_for_index` substitutes the smoothed concentration for the stress
    /// exponent when mollification is active.
    fn eval_nodes(&self, t: f64, a: &[f64], b: &[f64], c_for_index: Option<&[f64]>) -> NodeEval {
        let vb = &self.velocity_basis;
        let cb = &self.concentration_basis;
        let nq = self.quad.len();
        let mut e = NodeEval {
            u1: vec![0.0; nq],
            u2: vec![0.0; nq],
            d11: vec![0.0; nq],
            d12: vec![0.0; nq],
            c: vec![0.0; nq],
            cgx: vec![0.0; nq],
            cgy: vec![0.0; nq],
            p: vec![0.0; nq],
            visc: vec![0.0; nq],
            kcoef: vec![0.0; nq],
        };
        for (j, &aj) in a.iter().enumerate() {
            if aj == 0.0 {
                continue;
            }
            let (v1, v2, g11, g12, g21) =
                (&vb.v1[j], &vb.v2[j], &vb.g11[j], &vb.g12[j], &vb.g21[j]);
            for q in 0..nq {
                e.u1[q] += aj * v1[q];
                e.u2[q] += aj * v2[q];
                e.d11[q] += aj * g11[q];
                e.d12[q] += aj * 0.5 * (g12[q] + g21[q]);
            }
        }
        for (k, &bk) in b.iter().enumerate() {
            if bk == 0.0 {
                continue;
            }
            let (zv, zx, zy) = (&cb.values[k], &cb.gx[k], &cb.gy[k]);
            for q in 0..nq {
                e.c[q] += bk * zv[q];
                e.cgx[q] += bk * zx[q];
                e.cgy[q] += bk * zy[q];
            }
        }
        let stress = &self.scenario.stress;
        let flux = &self.scenario.flux;
        for q in 0..nq {
            let (x, y) = self.quad.point(q);
            let c_idx = match c_for_index {
                Some(smoothed) => smoothed[q],
                None => e.c[q],
            };
            let p = stress.index.index_at(c_idx, x, y, t);
            let du_sq = 2.0 * e.d11[q] * e.d11[q] + 2.0 * e.d12[q] * e.d12[q];
            e.p[q] = p;
            e.visc[q] = stress.viscosity(p, du_sq);
            e.kcoef[q] = flux.coefficient(e.c[q], du_sq.sqrt());
        }
        e
    }

    /// Velocity coefficient derivative for a given state.
    pub fn rhs_velocity(
        &self,
        t: f64,
        a: &[f64],
        b: &[f64],
        c_for_index: Option<&[f64]>,
    ) -> Result<Vec<f64>> {
        self.check_dims(a, b)?;
        let e = self.eval_nodes(t, a, b, c_for_index);
        Ok(self.velocity_rhs_from(&e, t))
    }

    /// Concentration coefficient derivative for a given state.
    pub fn rhs_concentration(&self, t: f64, a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
        self.check_dims(a, b)?;
        let e = self.eval_nodes(t, a, b, None);
        Ok(self.concentration_rhs_from(&e))
    }

    fn check_dims(&self, a: &[f64], b: &[f64]) -> Result<()> {
        if a.len() != self.scenario.n_velocity {
            return Err(Error::DimensionMismatch {
                expected: self.scenario.n_velocity,
                got: a.len(),
            });
        }
        if b.len() != self.scenario.m_concentration {
            return Err(Error::DimensionMismatch {
                expected: self.scenario.m_concentration,
                got: b.len(),
            });
        }
        Ok(())
    }

    fn velocity_rhs_from(&self, e: &NodeEval, t: f64) -> Vec<f64> {
        let nq = self.quad.len();
        let vb = &self.velocity_basis;
        // (uu - S) : Dw_j with both tensors symmetric and trace(Dw_j) = 0
        // collapses to (A11 - A22) g11_j + A12 (g12_j + g21_j).
        let mut r1 = vec![0.0; nq];
        let mut r2 = vec![0.0; nq];
        let mut rf1 = vec![0.0; nq];
        let mut rf2 = vec![0.0; nq];
        let with_forcing = !self.scenario.forcing.is_zero();
        for q in 0..nq {
            let w = self.quad.weight(q);
            let s11 = e.visc[q] * e.d11[q];
            let s12 = e.visc[q] * e.d12[q];
            let a11 = e.u1[q] * e.u1[q] - s11;
            let a22 = e.u2[q] * e.u2[q] + s11;
            let a12 = e.u1[q] * e.u2[q] - s12;
            r1[q] = w * (a11 - a22);
            r2[q] = w * a12;
            if with_forcing {
                let (x, y) = self.quad.point(q);
                let f = self.scenario.forcing.eval(x, y, t);
                rf1[q] = w * f[0];
                rf2[q] = w * f[1];
            }
        }
        (0..vb.n)
            .map(|j| {
                let g11 = &vb.g11[j];
                let g12 = &vb.g12[j];
                let g21 = &vb.g21[j];
                let mut da = pairwise_sum_by(nq, |q| {
                    r1[q] * g11[q] + r2[q] * (g12[q] + g21[q])
                });
                if with_forcing {
                    da += pairwise_sum_by(nq, |q| rf1[q] * vb.v1[j][q] + rf2[q] * vb.v2[j][q]);
                }
                da
            })
            .collect()
    }

    fn concentration_rhs_from(&self, e: &NodeEval) -> Vec<f64> {
        let nq = self.quad.len();
        let cb = &self.concentration_basis;
        let mut e1 = vec![0.0; nq];
        let mut e2 = vec![0.0; nq];
        for q in 0..nq {
            let w = self.quad.weight(q);
            e1[q] = w * (e.c[q] * e.u1[q] - e.kcoef[q] * e.cgx[q]);
            e2[q] = w * (e.c[q] * e.u2[q] - e.kcoef[q] * e.cgy[q]);
        }
        (0..cb.m)
            .map(|k| {
                let zx = &cb.gx[k];
                let zy = &cb.gy[k];
                pairwise_sum_by(nq, |q| e1[q] * zx[q] + e2[q] * zy[q])
            })
            .collect()
    }

    /// Combined derivative of the flattened state [a | b].
    fn rhs_flat(&self, t: f64, y: &[f64], c_for_index: Option<&[f64]>) -> Vec<f64> {
        let n = self.scenario.n_velocity;
        let e = self.eval_nodes(t, &y[..n], &y[n..], c_for_index);
        let mut out = self.velocity_rhs_from(&e, t);
        out.extend(self.concentration_rhs_from(&e));
        out
    }

    fn rk4_step(&self, t: f64, y: &[f64], dt: f64, c_for_index: Option<&[f64]>) -> Vec<f64> {
        let k1 = self.rhs_flat(t, y, c_for_index);
        let y2: Vec<f64> = y
            .iter()
            .zip(&k1)
            .map(|(yi, ki)| yi + 0.5 * dt * ki)
            .collect();
        let k2 = self.rhs_flat(t + 0.5 * dt, &y2, c_for_index);
        let y3: Vec<f64> = y
            .iter()
            .zip(&k2)
            .map(|(yi, ki)| yi + 0.5 * dt * ki)
            .collect();
        let k3 = self.rhs_flat(t + 0.5 * dt, &y3, c_for_index);
        let y4: Vec<f64> = y.iter().zip(&k3).map(|(yi, ki)| yi + dt * ki).collect();
        let k4 = self.rhs_flat(t + dt, &y4, c_for_index);
        (0..y.len())
            .map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect()
    }

    fn implicit_euler_step(
        &self,
        t: f64,
        y: &[f64],
        dt: f64,
        c_for_index: Option<&[f64]>,
    ) -> Result<Vec<f64>> {
        let scale = 1.0 + y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut current = y.to_vec();
        for _ in 0..200 {
            let f = self.rhs_flat(t + dt, &current, c_for_index);
            let next: Vec<f64> = (0..y.len()).map(|i| y[i] + dt * f[i]).collect();
            let residual = next
                .iter()
                .zip(&current)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            current = next;
            if residual <= 1e-10 * scale {
                return Ok(current);
            }
        }
        let f = self.rhs_flat(t + dt, &current, c_for_index);
        let residual = (0..y.len())
            .map(|i| (y[i] + dt * f[i] - current[i]).abs())
            .fold(0.0, f64::max);
        Err(Error::FixedPointDivergence { t, residual })
    }

    /// Advance one step with the requested scheme; used directly by tests and
    /// wrapped by [`GalerkinSystem::run`] with adaptive control. Returns the
    /// new state.
    pub fn step(&self, state: &GalerkinState, dt: f64, scheme: Scheme) -> Result<GalerkinState> {
        assert!(dt > 0.0, "step size must be positive");
        let n = self.scenario.n_velocity;
        let mut y = state.a.clone();
        y.extend_from_slice(&state.b);
        let y_new = match scheme {
            Scheme::Rk4Adaptive => self.rk4_step(state.t, &y, dt, None),
            Scheme::ImplicitEuler => self.implicit_euler_step(state.t, &y, dt, None)?,
        };
        Ok(GalerkinState {
            t: state.t + dt,
            a: y_new[..n].to_vec(),
            b: y_new[n..].to_vec(),
        })
    }

    /// Integrate the scenario from t = 0 to T, emitting states and
    /// diagnostics at the configured output times. Deterministic.
    pub fn run(self: &Arc<Self>) -> Result<Trajectory> {
        let sc = &self.scenario;
        let n = sc.n_velocity;
        let t_final = sc.domain.t_final;
        let n_out = sc.output_points;
        let out_times: Vec<f64> = (0..=n_out)
            .map(|i| t_final * i as f64 / n_out as f64)
            .collect();

        let init = self.initial_state()?;
        let mut y = init.a.clone();
        y.extend_from_slice(&init.b);
        let mut t = 0.0;

        let mut smoother = if sc.epsilon > 0.0 {
            let mut s = LaggedSmoother::new(&self.quad, sc.epsilon);
            let c0 = self.concentration_basis.reconstruct(&init.b)?;
            s.push(0.0, &c0.values);
            Some(s)
        } else {
            None
        };

        let mut states = Vec::with_capacity(n_out + 1);
        let mut records = Vec::with_capacity(n_out + 1);
        let mut holder = HolderTracker::new();
        let state0 = GalerkinState {
            t: 0.0,
            a: init.a.clone(),
            b: init.b.clone(),
        };
        let smoothed0 = smoother.as_ref().map(|s| s.smoothed_at(0.0));
        records.push(self.record(&state0, smoothed0.as_deref(), &mut holder)?);
        states.push(state0);

        let settings = sc.integrator;
        let mut dt_proposal = settings.dt_init.min(t_final / n_out as f64);
        let mut steps: u64 = 0;

        for &t_out in out_times.iter().skip(1) {
            while t < t_out - 1e-13 * t_final {
                steps += 1;
                if steps > settings.max_steps {
                    return Err(Error::StepBudgetExhausted { t, steps });
                }
                let c_for_index = smoother.as_ref().map(|s| s.smoothed_at(t));
                match settings.scheme {
                    Scheme::Rk4Adaptive => {
                        let dt = dt_proposal.min(t_out - t);
                        let big = self.rk4_step(t, &y, dt, c_for_index.as_deref());
                        let half = self.rk4_step(t, &y, 0.5 * dt, c_for_index.as_deref());
                        let fine =
                            self.rk4_step(t + 0.5 * dt, &half, 0.5 * dt, c_for_index.as_deref());
                        // Step-doubling: the pairwise difference over 15
                        // estimates the fine-solution local error.
                        let err = (0..y.len())
                            .map(|k| {
                                let scale = settings.atol
                                    + settings.rtol * y[k].abs().max(fine[k].abs());
                                ((big[k] - fine[k]) / 15.0).abs() / scale
                            })
                            .fold(0.0, f64::max);
                        if err <= 1.0 {
                            t += dt;
                            y = fine;
                            if let Some(s) = &mut smoother {
                                s.push(t, &self.concentration_slice(&y[n..]));
                            }
                            let grow = if err > 1e-300 {
                                (0.9 * err.powf(-0.2)).min(2.0)
                            } else {
                                2.0
                            };
                            dt_proposal = (dt * grow).min(t_final);
                        } else {
                            dt_proposal = 0.5 * dt;
                            if dt_proposal < settings.dt_min {
                                return Err(Error::StepSizeUnderflow {
                                    t,
                                    dt: dt_proposal,
                                });
                            }
                        }
                    }
                    Scheme::ImplicitEuler => {
                        // Fixed step size, clipped to land on output times.
                        let dt = settings.dt_init.min(t_out - t);
                        y = self.implicit_euler_step(t, &y, dt, c_for_index.as_deref())?;
                        t += dt;
                        if let Some(s) = &mut smoother {
                            s.push(t, &self.concentration_slice(&y[n..]));
                        }
                    }
                }
            }
            t = t_out; // suppress accumulated roundoff at output times
            let state = GalerkinState {
                t,
                a: y[..n].to_vec(),
                b: y[n..].to_vec(),
            };
            let smoothed = smoother.as_ref().map(|s| s.smoothed_at(t));
            records.push(self.record(&state, smoothed.as_deref(), &mut holder)?);
            states.push(state);
        }

        Ok(Trajectory {
            system: self.clone(),
            times: out_times,
            states,
            records,
        })
    }

    /// Concentration node values of a coefficient vector.
    pub fn concentration_slice(&self, b: &[f64]) -> Vec<f64> {
        let cb = &self.concentration_basis;
        let nq = self.quad.len();
        let mut c = vec![0.0; nq];
        for (k, &bk) in b.iter().enumerate() {
            if bk == 0.0 {
                continue;
            }
            for q in 0..nq {
                c[q] += bk * cb.values[k][q];
            }
        }
        c
    }

    /// Diagnostics at one output time.
    fn record(
        &self,
        state: &GalerkinState,
        c_for_index: Option<&[f64]>,
        holder: &mut HolderTracker,
    ) -> Result<DiagnosticsRecord> {
        let e = self.eval_nodes(state.t, &state.a, &state.b, c_for_index);
        let nq = self.quad.len();
        let kinetic = 0.5
            * pairwise_sum_by(nq, |q| {
                self.quad.weight(q) * (e.u1[q] * e.u1[q] + e.u2[q] * e.u2[q])
            });
        let dissipation = pairwise_sum_by(nq, |q| {
            let du_sq = 2.0 * e.d11[q] * e.d11[q] + 2.0 * e.d12[q] * e.d12[q];
            self.quad.weight(q) * e.visc[q] * du_sq
        });
        let work = if self.scenario.forcing.is_zero() {
            0.0
        } else {
            pairwise_sum_by(nq, |q| {
                let (x, y) = self.quad.point(q);
                let f = self.scenario.forcing.eval(x, y, state.t);
                self.quad.weight(q) * (f[0] * e.u1[q] + f[1] * e.u2[q])
            })
        };
        let conc_energy =
            0.5 * pairwise_sum_by(nq, |q| self.quad.weight(q) * e.c[q] * e.c[q]);
        let flux_dissipation = pairwise_sum_by(nq, |q| {
            self.quad.weight(q)
                * e.kcoef[q]
                * (e.cgx[q] * e.cgx[q] + e.cgy[q] * e.cgy[q])
        });
        let c_min = e.c.iter().copied().fold(f64::INFINITY, f64::min);
        let c_max = e.c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let clamp_count = e.c.iter().filter(|&&v| v < 0.0).count();

        // Spatial Luxembourg norms of |grad u| and |S| at this time.
        let vb = &self.velocity_basis;
        let mut grad_mag = vec![0.0; nq];
        let mut stress_mag = vec![0.0; nq];
        let mut dual_p = vec![0.0; nq];
        for q in 0..nq {
            // Full velocity gradient from the basis expansion.
            let mut g11 = 0.0;
            let mut g12 = 0.0;
            let mut g21 = 0.0;
            for (j, &aj) in state.a.iter().enumerate() {
                if aj == 0.0 {
                    continue;
                }
                g11 += aj * vb.g11[j][q];
                g12 += aj * vb.g12[j][q];
                g21 += aj * vb.g21[j][q];
            }
            grad_mag[q] = (2.0 * g11 * g11 + g12 * g12 + g21 * g21).sqrt();
            let du_sq = 2.0 * e.d11[q] * e.d11[q] + 2.0 * e.d12[q] * e.d12[q];
            stress_mag[q] = e.visc[q] * du_sq.sqrt();
            dual_p[q] = e.p[q] / (e.p[q] - 1.0);
        }
        let p_min = self.scenario.stress.index.p_min();
        let p_max = self.scenario.stress.index.p_max();
        let lux_grad_u = luxembourg_weighted(
            &grad_mag,
            &e.p,
            p_min,
            p_max,
            |q| self.quad.weight(q),
            crate::varexp::LUXEMBOURG_TOL,
        )?;
        let lux_stress = luxembourg_weighted(
            &stress_mag,
            &dual_p,
            p_max / (p_max - 1.0),
            p_min / (p_min - 1.0),
            |q| self.quad.weight(q),
            crate::varexp::LUXEMBOURG_TOL,
        )?;
        let holder_c = holder.update(&self.quad, state.t, &e.c);

        Ok(DiagnosticsRecord {
            t: state.t,
            kinetic_energy: kinetic,
            dissipation,
            work,
            conc_energy,
            flux_dissipation,
            c_min,
            c_max,
            clamp_count,
            lux_grad_u,
            lux_stress,
            holder_c,
        })
    }
}

/// Convenience wrapper: build the system and run it.
pub fn run_scenario(scenario: &Scenario) -> Result<Trajectory> {
    GalerkinSystem::new(scenario.clone())?.run()
}

/// Running parabolic Holder seminorm estimate of the concentration over
/// grid-adjacent pairs (spatial neighbours within a slice, temporal pairs
/// between consecutive output slices).
struct HolderTracker {
    prev: Option<(f64, Vec<f64>)>,
    best: f64,
}

impl HolderTracker {
    fn new() -> Self {
        HolderTracker {
            prev: None,
            best: 0.0,
        }
    }

    // Temporal pairs use d_p = |dt|^(1/2); spatial pairs the node spacing.

    fn update(&mut self, quad: &Quadrature, t: f64, c: &[f64]) -> f64 {
        let res = quad.resolution;
        for iy in 0..res {
            for ix in 0..res {
                let q = iy * res + ix;
                if ix + 1 < res {
                    let d = quad.nodes_1d[ix + 1] - quad.nodes_1d[ix];
                    self.best = self
                        .best
                        .max((c[q + 1] - c[q]).abs() / d.powf(HOLDER_ALPHA));
                }
                if iy + 1 < res {
                    let d = quad.nodes_1d[iy + 1] - quad.nodes_1d[iy];
                    self.best = self
                        .best
                        .max((c[q + res] - c[q]).abs() / d.powf(HOLDER_ALPHA));
                }
            }
        }
        if let Some((t_prev, c_prev)) = &self.prev {
            let dp = (t - t_prev).abs().sqrt();
            if dp > 0.0 {
                let denom = dp.powf(HOLDER_ALPHA);
                for q in 0..c.len() {
                    self.best = self.best.max((c[q] - c_prev[q]).abs() / denom);
                }
            }
        }
        self.prev = Some((t, c.to_vec()));
        self.best
    }
}

#[cfg(test)]
mod tests {
    use super::diagnostics::*;
    use super::*;
    use crate::presets;
    use approx::assert_abs_diff_eq;

    fn quiet(mut sc: Scenario, points: usize) -> Scenario {
        sc.output_points = points;
        sc
    }

    #[test]
    fn rest_state_with_zero_forcing_stays_zero() {
        let mut sc = presets::synovial();
        sc.forcing = Forcing::Zero;
        sc.initial_velocity = InitialVelocity::Rest;
        sc.initial_concentration = InitialConcentration::Zero;
        sc.domain.t_final = 0.05;
        let traj = run_scenario(&quiet(sc, 5)).unwrap();
        for state in &traj.states {
            assert!(state.a.iter().all(|&v| v == 0.0));
            assert!(state.b.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn taylor_green_mode_decays_at_twice_viscosity_rate() {
        let sc = presets::taylor_green();
        let sys = GalerkinSystem::new(sc).unwrap();
        let init = sys.initial_state().unwrap();
        // The vortex lies in the span: ||P u0|| = ||u0||.
        let norm_sq: f64 = init.a.iter().map(|a| a * a).sum();
        let pi = std::f64::consts::PI;
        assert_abs_diff_eq!(norm_sq, 2.0 * pi * pi, epsilon = 1e-8);
        let da = sys.rhs_velocity(0.0, &init.a, &init.b, None).unwrap();
        for j in 0..init.a.len() {
            // da_j = -2 nu0 a_j on the vortex modes, 0 elsewhere.
            assert_abs_diff_eq!(da[j], -2.0 * 0.1 * init.a[j], epsilon = 1e-9);
        }
    }

    #[test]
    fn single_square_mode_follows_linear_decay_with_forcing() {
        let mut sc = presets::synovial();
        sc.stress = crate::constitutive::StressModel::power_law(
            0.05,
            crate::constitutive::PowerIndexFamily::constant(2.0),
        )
        .unwrap();
        sc.initial_velocity = InitialVelocity::Coefficients(vec![0.3]);
        sc.initial_concentration = InitialConcentration::Zero;
        sc.forcing = Forcing::Zero;
        let sys = GalerkinSystem::new(sc).unwrap();
        let init = sys.initial_state().unwrap();
        let da = sys.rhs_velocity(0.0, &init.a, &init.b, None).unwrap();
        let lambda = sys.velocity_basis.rayleigh[0];
        // Self-advection of a single mode integrates to zero; the viscous
        // term gives -nu0 lambda_R a.
        assert_abs_diff_eq!(da[0], -0.05 * lambda * 0.3, epsilon = 1e-9);
        for &d in &da[1..] {
            assert!(d.abs() < 1e-9, "cross-mode leak {d:e}");
        }
    }

    #[test]
    fn rk4_single_step_has_fifth_order_local_error() {
        let mut sc = presets::heat_only();
        sc.initial_concentration = InitialConcentration::Coefficients(vec![0.5]);
        sc.c_tilde0 = 1.0;
        let sys = GalerkinSystem::new(sc).unwrap();
        let init = sys.initial_state().unwrap();
        let rate = 0.05 * sys.concentration_basis.stiffness[(0, 0)];
        let mut errors = Vec::new();
        for &dt in &[0.02, 0.01] {
            let stepped = sys.step(&init, dt, Scheme::Rk4Adaptive).unwrap();
            let exact = 0.5 * (-rate * dt).exp();
            errors.push((stepped.b[0] - exact).abs());
        }
        // Halving dt divides the one-step error by about 2^5.
        let ratio = errors[0] / errors[1];
        assert!(
            (20.0..45.0).contains(&ratio),
            "local order ratio {ratio}, errors {errors:?}"
        );
    }

    #[test]
    fn heat_mode_decays_at_exact_modal_rate() {
        let mut sc = presets::heat_only();
        sc.initial_concentration = InitialConcentration::Coefficients(vec![0.5]);
        sc.c_tilde0 = 1.0;
        sc.domain.t_final = 0.3;
        let traj = run_scenario(&quiet(sc, 10)).unwrap();
        let sys = &traj.system;
        let rate = 0.05 * sys.concentration_basis.stiffness[(0, 0)];
        for (i, state) in traj.states.iter().enumerate() {
            let exact = 0.5 * (-rate * traj.times[i]).exp();
            assert_abs_diff_eq!(state.b[0], exact, epsilon = 1e-8);
            for &b in &state.b[1..] {
                assert!(b.abs() < 1e-10);
            }
            assert!(state.a.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn zero_concentration_is_invariant() {
        let mut sc = presets::synovial();
        sc.initial_concentration = InitialConcentration::Zero;
        sc.domain.t_final = 0.05;
        let traj = run_scenario(&quiet(sc, 5)).unwrap();
        for state in &traj.states {
            assert!(state.b.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn zero_state_is_fixed_for_both_schemes() {
        let mut sc = presets::synovial();
        sc.forcing = Forcing::Zero;
        sc.initial_velocity = InitialVelocity::Rest;
        sc.initial_concentration = InitialConcentration::Zero;
        let sys = GalerkinSystem::new(sc).unwrap();
        let zero = sys.initial_state().unwrap();
        for scheme in [Scheme::Rk4Adaptive, Scheme::ImplicitEuler] {
            let stepped = sys.step(&zero, 0.01, scheme).unwrap();
            assert!(stepped.a.iter().all(|&v| v == 0.0));
            assert!(stepped.b.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn implicit_and_explicit_schemes_agree_on_smooth_run() {
        let mut sc = presets::heat_only();
        sc.domain.t_final = 0.05;
        sc.integrator.dt_init = 5e-4;
        sc.output_points = 5;
        let explicit = run_scenario(&sc).unwrap();
        sc.integrator.scheme = Scheme::ImplicitEuler;
        let implicit = run_scenario(&sc).unwrap();
        // Backward Euler is first order: error ~ dt * |f'| over the run.
        let budget = 10.0 * 5e-4;
        for (se, si) in explicit.states.iter().zip(&implicit.states) {
            for (a, b) in se.b.iter().zip(&si.b) {
                assert!((a - b).abs() < budget, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn concentration_l2_is_nonincreasing() {
        let mut sc = presets::synovial();
        sc.domain.t_final = 0.1;
        let traj = run_scenario(&quiet(sc, 20)).unwrap();
        for w in traj.records.windows(2) {
            assert!(
                w[1].conc_energy <= w[0].conc_energy * (1.0 + 1e-9),
                "concentration energy grew: {} -> {}",
                w[0].conc_energy,
                w[1].conc_energy
            );
        }
    }

    #[test]
    fn kinetic_energy_decays_without_forcing() {
        let mut sc = presets::synovial();
        sc.forcing = Forcing::Zero;
        sc.domain.t_final = 0.1;
        let traj = run_scenario(&quiet(sc, 20)).unwrap();
        for w in traj.records.windows(2) {
            assert!(w[1].kinetic_energy <= w[0].kinetic_energy * (1.0 + 1e-9));
        }
    }

    #[test]
    fn flux_dissipation_is_nonnegative() {
        let mut sc = presets::synovial();
        sc.domain.t_final = 0.1;
        let traj = run_scenario(&quiet(sc, 20)).unwrap();
        for r in &traj.records {
            assert!(r.flux_dissipation >= 0.0);
            assert!(r.all_finite());
        }
    }

    #[test]
    fn runs_are_bit_reproducible() {
        let mut sc = presets::synovial();
        sc.domain.t_final = 0.05;
        sc.output_points = 5;
        let t1 = run_scenario(&sc).unwrap();
        let t2 = run_scenario(&sc).unwrap();
        for (r1, r2) in t1.records.iter().zip(&t2.records) {
            assert_eq!(r1, r2);
        }
        for (s1, s2) in t1.states.iter().zip(&t2.states) {
            assert_eq!(s1, s2);
        }
    }

    #[test]
    fn monotonicity_gap_vanishes_on_the_solution_and_is_nonnegative() {
        let mut sc = presets::synovial();
        sc.domain.t_final = 0.05;
        let traj = run_scenario(&quiet(sc, 5)).unwrap();
        let own: Vec<Vec<f64>> = traj.states.iter().map(|s| s.a.clone()).collect();
        let gap_self = monotonicity_gap_series(&traj, &own).unwrap();
        assert_eq!(gap_self, 0.0);
        let zero = vec![0.0; traj.scenario().n_velocity];
        let gap_zero = monotonicity_gap(&traj, &zero).unwrap();
        assert!(gap_zero >= 0.0);
        // Against the trapezoid-integrated dissipation of the records.
        let dissipation: Vec<f64> = traj.records.iter().map(|r| r.dissipation).collect();
        let mut diss_int = 0.0;
        for i in 1..traj.times.len() {
            diss_int +=
                0.5 * (traj.times[i] - traj.times[i - 1]) * (dissipation[i] + dissipation[i - 1]);
        }
        assert_abs_diff_eq!(gap_zero, diss_int, epsilon = 1e-10);
    }

    #[test]
    fn energy_residual_is_small_on_short_taylor_green_run() {
        let mut sc = presets::taylor_green();
        sc.domain.t_final = 0.2;
        sc.output_points = 40;
        let traj = run_scenario(&sc).unwrap();
        let res = energy_residuals(&traj);
        let worst = res.iter().cloned().fold(0.0, f64::max);
        assert!(worst < 1e-5, "energy residual {worst:e}");
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let sys = GalerkinSystem::new(presets::heat_only()).unwrap();
        let bad_a = vec![0.0; 3];
        let b = vec![0.0; 8];
        assert!(matches!(
            sys.rhs_velocity(0.0, &bad_a, &b, None),
            Err(Error::DimensionMismatch { .. })
        ));
        let mut sc = presets::heat_only();
        sc.initial_velocity = InitialVelocity::Coefficients(vec![0.0; 9]);
        assert!(matches!(
            GalerkinSystem::new(sc),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn out_of_range_initial_concentration_is_rejected() {
        let mut sc = presets::synovial();
        sc.c_tilde0 = 0.5; // peak of the initial bump is 1 > 0.5
        assert!(matches!(
            GalerkinSystem::new(sc),
            Err(Error::InvalidScenario(_))
        ));
    }

    #[test]
    fn mollified_run_stays_close_to_baseline_for_small_epsilon() {
        let mut sc = presets::synovial_regularized();
        sc.domain.t_final = 0.1;
        sc.output_points = 10;
        let base = run_scenario(&sc).unwrap();
        sc.epsilon = 0.05;
        let moll = run_scenario(&sc).unwrap();
        let diff = velocity_l2_difference(&base, &moll).unwrap();
        assert!(diff > 0.0, "mollification should perturb the run");
        assert!(diff < 0.05, "perturbation too large: {diff}");
    }
}
