//! Configuration, study drivers, and output writers behind the CLI.
//!
//! Configuration files are line-oriented `key = value` text with `#`
//! comments and dotted section keys. A file selects a preset and overrides
//! individual fields; unknown keys are a hard error and missing keys take
//! the preset's defaults. `dump` emits every key in a fixed canonical
//! order, and `parse(dump(config))` reproduces the configuration exactly.
//!
//! Outputs per run: a diagnostics CSV (fixed column order), snapshot fields
//! in legacy VTK structured-points format, and a run-summary text file with
//! one pass/fail line per enabled check. Exit status is 0 only when every
//! enabled check passes.

pub mod output;
pub mod suite;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::constitutive::{
    FluxModel, PowerIndexFamily, PrescribedIndexForm, StressModel,
};
use crate::error::{Error, Result};
use crate::presets;
use crate::solver::diagnostics::{
    concentration_energy_residuals, convergence_study, energy_residuals, epsilon_study,
    max_principle_sweep, max_principle_worst,
};
use crate::solver::{run_scenario, Scenario, Scheme, Trajectory};

/// Which study a configuration drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    SingleRun,
    NRefinement,
    MRefinement,
    EpsilonStudy,
    PropertySuite,
}

impl StudyKind {
    fn as_str(&self) -> &'static str {
        match self {
            StudyKind::SingleRun => "single_run",
            StudyKind::NRefinement => "n_refinement",
            StudyKind::MRefinement => "m_refinement",
            StudyKind::EpsilonStudy => "epsilon_study",
            StudyKind::PropertySuite => "property_suite",
        }
    }

    fn parse(s: &str) -> Option<StudyKind> {
        Some(match s {
            "single_run" => StudyKind::SingleRun,
            "n_refinement" => StudyKind::NRefinement,
            "m_refinement" => StudyKind::MRefinement,
            "epsilon_study" => StudyKind::EpsilonStudy,
            "property_suite" => StudyKind::PropertySuite,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexKind {
    PiecewiseLinear,
    Exponential,
    PrescribedXt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StressFormKind {
    PowerLaw,
    Regularized,
}

/// Fully resolved configuration: every key has a concrete value (defaults
/// come from the selected preset).
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub study: StudyKind,
    pub preset: String,
    pub out: PathBuf,
    pub seed: u64,
    pub quiet: bool,
    pub output_points: usize,
    pub output_snapshots: usize,
    pub t_final: f64,
    pub resolution: usize,
    pub basis_n: usize,
    pub basis_m: usize,
    pub basis_cache: String,
    pub index_kind: IndexKind,
    pub index_p_min: f64,
    pub index_p_max: f64,
    pub index_c_ref: f64,
    pub index_xt_mean: f64,
    pub index_xt_amplitude: f64,
    pub index_xt_kx: f64,
    pub index_xt_ky: f64,
    pub index_xt_omega: f64,
    pub stress_form: StressFormKind,
    pub stress_nu0: f64,
    pub stress_nu1: f64,
    pub stress_nu2: f64,
    pub flux_k0: f64,
    pub flux_k1: f64,
    pub c_tilde0: f64,
    pub mollify_epsilon: f64,
    pub scheme: Scheme,
    pub rtol: f64,
    pub atol: f64,
    pub dt_init: f64,
    pub dt_min: f64,
    pub n_list: Vec<usize>,
    pub m_list: Vec<usize>,
    pub epsilon_list: Vec<f64>,
}

impl Config {
    /// Defaults of a preset; every field resolved.
    pub fn default_for_preset(preset: &str) -> Result<Config> {
        let sc = presets::by_name(preset).ok_or_else(|| Error::RangeError {
            key: "preset".into(),
            message: format!("unknown preset '{preset}'"),
        })?;
        let (index_kind, p_min, p_max, c_ref, xt) = match &sc.stress.index {
            PowerIndexFamily::PiecewiseLinearInC {
                p_min,
                p_max,
                c_ref,
            } => (IndexKind::PiecewiseLinear, *p_min, *p_max, *c_ref, None),
            PowerIndexFamily::ExponentialInC {
                p_min,
                p_max,
                c_ref,
            } => (IndexKind::Exponential, *p_min, *p_max, *c_ref, None),
            PowerIndexFamily::PrescribedInXT(f) => (
                IndexKind::PrescribedXt,
                f.mean - f.amplitude.abs(),
                f.mean + f.amplitude.abs(),
                1.0,
                Some(*f),
            ),
        };
        let xt = xt.unwrap_or(PrescribedIndexForm {
            mean: 2.0,
            amplitude: 0.3,
            kx: 1.0,
            ky: 1.0,
            omega: 3.0,
            extent: sc.domain.extent,
        });
        let (stress_form, nu0, nu1, nu2) = match sc.stress.form {
            crate::constitutive::StressForm::PowerLaw { nu0 } => {
                (StressFormKind::PowerLaw, nu0, nu0, nu0)
            }
            crate::constitutive::StressForm::Regularized { nu1, nu2 } => {
                (StressFormKind::Regularized, nu1, nu1, nu2)
            }
        };
        Ok(Config {
            study: StudyKind::SingleRun,
            preset: preset.to_string(),
            out: PathBuf::from("out"),
            seed: 42,
            quiet: false,
            output_points: sc.output_points,
            output_snapshots: 3,
            t_final: sc.domain.t_final,
            resolution: sc.resolution,
            basis_n: sc.n_velocity,
            basis_m: sc.m_concentration,
            basis_cache: String::new(),
            index_kind,
            index_p_min: p_min,
            index_p_max: p_max,
            index_c_ref: c_ref,
            index_xt_mean: xt.mean,
            index_xt_amplitude: xt.amplitude,
            index_xt_kx: xt.kx,
            index_xt_ky: xt.ky,
            index_xt_omega: xt.omega,
            stress_form,
            stress_nu0: nu0,
            stress_nu1: nu1,
            stress_nu2: nu2,
            flux_k0: sc.flux.k0,
            flux_k1: sc.flux.k1,
            c_tilde0: sc.c_tilde0,
            mollify_epsilon: sc.epsilon,
            scheme: sc.integrator.scheme,
            rtol: sc.integrator.rtol,
            atol: sc.integrator.atol,
            dt_init: sc.integrator.dt_init,
            dt_min: sc.integrator.dt_min,
            n_list: vec![4, 8, 16],
            m_list: vec![8, 16, 32],
            epsilon_list: vec![0.2, 0.1, 0.05],
        })
    }

    /// Build the scenario this configuration describes: the preset's
    /// closed-form data with every numeric field overridden.
    pub fn scenario(&self) -> Result<Scenario> {
        let mut sc = presets::by_name(&self.preset).ok_or_else(|| Error::RangeError {
            key: "preset".into(),
            message: format!("unknown preset '{}'", self.preset),
        })?;
        sc.domain.t_final = self.t_final;
        sc.resolution = self.resolution;
        sc.n_velocity = self.basis_n;
        sc.m_concentration = self.basis_m;
        let index = match self.index_kind {
            IndexKind::PiecewiseLinear => PowerIndexFamily::PiecewiseLinearInC {
                p_min: self.index_p_min,
                p_max: self.index_p_max,
                c_ref: self.index_c_ref,
            },
            IndexKind::Exponential => PowerIndexFamily::ExponentialInC {
                p_min: self.index_p_min,
                p_max: self.index_p_max,
                c_ref: self.index_c_ref,
            },
            IndexKind::PrescribedXt => PowerIndexFamily::PrescribedInXT(PrescribedIndexForm {
                mean: self.index_xt_mean,
                amplitude: self.index_xt_amplitude,
                kx: self.index_xt_kx,
                ky: self.index_xt_ky,
                omega: self.index_xt_omega,
                extent: sc.domain.extent,
            }),
        };
        sc.stress = match self.stress_form {
            StressFormKind::PowerLaw => StressModel::power_law(self.stress_nu0, index)?,
            StressFormKind::Regularized => {
                StressModel::regularized(self.stress_nu1, self.stress_nu2, index)?
            }
        };
        sc.flux = FluxModel::new(self.flux_k0, self.flux_k1)?;
        sc.c_tilde0 = self.c_tilde0;
        sc.epsilon = self.mollify_epsilon;
        sc.basis_cache = if self.basis_cache.is_empty() {
            None
        } else {
            Some(PathBuf::from(&self.basis_cache))
        };
        sc.integrator.scheme = self.scheme;
        sc.integrator.rtol = self.rtol;
        sc.integrator.atol = self.atol;
        sc.integrator.dt_init = self.dt_init;
        sc.integrator.dt_min = self.dt_min;
        sc.output_points = self.output_points;
        Ok(sc)
    }

    /// Canonical text form; every key, fixed order.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "study = {}", self.study.as_str());
        let _ = writeln!(s, "preset = {}", self.preset);
        let _ = writeln!(s, "out = {}", self.out.display());
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "quiet = {}", self.quiet);
        let _ = writeln!(s, "output.points = {}", self.output_points);
        let _ = writeln!(s, "output.snapshots = {}", self.output_snapshots);
        let _ = writeln!(s, "domain.t_final = {}", self.t_final);
        let _ = writeln!(s, "quadrature.resolution = {}", self.resolution);
        let _ = writeln!(s, "basis.n = {}", self.basis_n);
        let _ = writeln!(s, "basis.m = {}", self.basis_m);
        let _ = writeln!(s, "basis.cache = {}", self.basis_cache);
        let kind = match self.index_kind {
            IndexKind::PiecewiseLinear => "piecewise_linear",
            IndexKind::Exponential => "exponential",
            IndexKind::PrescribedXt => "prescribed_xt",
        };
        let _ = writeln!(s, "index.kind = {kind}");
        let _ = writeln!(s, "index.p_min = {}", self.index_p_min);
        let _ = writeln!(s, "index.p_max = {}", self.index_p_max);
        let _ = writeln!(s, "index.c_ref = {}", self.index_c_ref);
        let _ = writeln!(s, "index.xt.mean = {}", self.index_xt_mean);
        let _ = writeln!(s, "index.xt.amplitude = {}", self.index_xt_amplitude);
        let _ = writeln!(s, "index.xt.kx = {}", self.index_xt_kx);
        let _ = writeln!(s, "index.xt.ky = {}", self.index_xt_ky);
        let _ = writeln!(s, "index.xt.omega = {}", self.index_xt_omega);
        let form = match self.stress_form {
            StressFormKind::PowerLaw => "power_law",
            StressFormKind::Regularized => "regularized",
        };
        let _ = writeln!(s, "stress.form = {form}");
        let _ = writeln!(s, "stress.nu0 = {}", self.stress_nu0);
        let _ = writeln!(s, "stress.nu1 = {}", self.stress_nu1);
        let _ = writeln!(s, "stress.nu2 = {}", self.stress_nu2);
        let _ = writeln!(s, "flux.k0 = {}", self.flux_k0);
        let _ = writeln!(s, "flux.k1 = {}", self.flux_k1);
        let _ = writeln!(s, "init.c_tilde0 = {}", self.c_tilde0);
        let _ = writeln!(s, "mollify.epsilon = {}", self.mollify_epsilon);
        let scheme = match self.scheme {
            Scheme::Rk4Adaptive => "rk4_adaptive",
            Scheme::ImplicitEuler => "implicit_euler",
        };
        let _ = writeln!(s, "integrator.scheme = {scheme}");
        let _ = writeln!(s, "integrator.rtol = {}", self.rtol);
        let _ = writeln!(s, "integrator.atol = {}", self.atol);
        let _ = writeln!(s, "integrator.dt_init = {}", self.dt_init);
        let _ = writeln!(s, "integrator.dt_min = {}", self.dt_min);
        let fmt_usizes =
            |xs: &[usize]| xs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        let fmt_f64s =
            |xs: &[f64]| xs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        let _ = writeln!(s, "study.n_list = {}", fmt_usizes(&self.n_list));
        let _ = writeln!(s, "study.m_list = {}", fmt_usizes(&self.m_list));
        let _ = writeln!(s, "study.epsilon_list = {}", fmt_f64s(&self.epsilon_list));
        s
    }

    /// Validate every numeric field; the error names the offending key.
    pub fn validate(&self) -> Result<()> {
        fn range_err(key: &str, message: String) -> Error {
            Error::RangeError {
                key: key.into(),
                message,
            }
        }
        if presets::by_name(&self.preset).is_none() {
            return Err(range_err("preset", format!("unknown preset '{}'", self.preset)));
        }
        if self.index_kind != IndexKind::PrescribedXt {
            if !(self.index_p_min > 1.0) {
                return Err(range_err(
                    "index.p_min",
                    format!("power-law index bound must exceed 1, got {}", self.index_p_min),
                ));
            }
            if self.index_p_max < self.index_p_min || !self.index_p_max.is_finite() {
                return Err(range_err(
                    "index.p_max",
                    format!(
                        "upper index bound must lie in [p_min, inf), got {}",
                        self.index_p_max
                    ),
                ));
            }
            if !(self.index_c_ref > 0.0) {
                return Err(range_err(
                    "index.c_ref",
                    "concentration scale must be positive".into(),
                ));
            }
        } else if !(self.index_xt_mean - self.index_xt_amplitude.abs() > 1.0) {
            return Err(range_err(
                "index.xt.amplitude",
                "prescribed index must stay above 1".into(),
            ));
        }
        if !(self.stress_nu0 > 0.0) {
            return Err(range_err("stress.nu0", "viscosity scale must be positive".into()));
        }
        if !(self.stress_nu1 > 0.0) || self.stress_nu2 < 0.0 {
            return Err(range_err(
                "stress.nu1",
                "regularised pair needs nu1 > 0 and nu2 >= 0".into(),
            ));
        }
        if !(self.flux_k0 > 0.0) || self.flux_k1 < 0.0 {
            return Err(range_err("flux.k0", "flux bounds need k0 > 0, k1 >= 0".into()));
        }
        if !(self.t_final > 0.0) {
            return Err(range_err("domain.t_final", "final time must be positive".into()));
        }
        if self.resolution < 8 || self.resolution > 512 {
            return Err(range_err(
                "quadrature.resolution",
                "resolution must lie in [8, 512]".into(),
            ));
        }
        for (key, v) in [("basis.n", self.basis_n), ("basis.m", self.basis_m)] {
            if v < 1 || v > crate::basis::MAX_BASIS {
                return Err(range_err(
                    key,
                    format!("basis size must lie in [1, {}]", crate::basis::MAX_BASIS),
                ));
            }
        }
        if self.output_points < 1 {
            return Err(range_err("output.points", "need at least one output interval".into()));
        }
        if self.mollify_epsilon < 0.0 {
            return Err(range_err(
                "mollify.epsilon",
                "mollification width must be nonnegative".into(),
            ));
        }
        for (key, v) in [
            ("integrator.rtol", self.rtol),
            ("integrator.atol", self.atol),
            ("integrator.dt_init", self.dt_init),
            ("integrator.dt_min", self.dt_min),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(range_err(key, "must be positive and finite".into()));
            }
        }
        for (key, list) in [("study.n_list", &self.n_list), ("study.m_list", &self.m_list)] {
            if list.is_empty() || list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(range_err(key, "must be a strictly ascending list".into()));
            }
        }
        if self.epsilon_list.is_empty() || self.epsilon_list.iter().any(|&e| e <= 0.0) {
            return Err(range_err(
                "study.epsilon_list",
                "must be a nonempty list of positive widths".into(),
            ));
        }
        Ok(())
    }
}

impl Default for Config {
    fn default() -> Self {
        Config::default_for_preset("taylor_green").expect("default preset exists")
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64> {
    value.parse().map_err(|_| Error::Parse {
        line,
        message: format!("expected a number for '{key}', got '{value}'"),
    })
}

fn parse_usize(line: usize, key: &str, value: &str) -> Result<usize> {
    value.parse().map_err(|_| Error::Parse {
        line,
        message: format!("expected an integer for '{key}', got '{value}'"),
    })
}

fn parse_u64(line: usize, key: &str, value: &str) -> Result<u64> {
    value.parse().map_err(|_| Error::Parse {
        line,
        message: format!("expected an integer for '{key}', got '{value}'"),
    })
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::Parse {
            line,
            message: format!("expected true/false for '{key}', got '{value}'"),
        }),
    }
}

fn split_entries(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(Error::Parse {
            line: line_no,
            message: "expected 'key = value'".into(),
        })?;
        out.push((line_no, key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

/// Parse configuration text. The preset is resolved first (it supplies the
/// defaults), then every entry overrides its field in file order.
pub fn parse_config_text(text: &str) -> Result<Config> {
    let entries = split_entries(text)?;
    let preset = entries
        .iter()
        .find(|(_, k, _)| k == "preset")
        .map(|(line, _, v)| {
            if presets::by_name(v).is_some() {
                Ok(v.clone())
            } else {
                Err(Error::Parse {
                    line: *line,
                    message: format!("unknown preset '{v}'"),
                })
            }
        })
        .transpose()?
        .unwrap_or_else(|| "taylor_green".to_string());
    let mut cfg = Config::default_for_preset(&preset)?;
    for (line, key, value) in entries {
        apply_entry(&mut cfg, line, &key, &value)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parse a configuration file.
pub fn parse_config(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path)?;
    parse_config_text(&text)
}

fn apply_entry(cfg: &mut Config, line: usize, key: &str, value: &str) -> Result<()> {
    match key {
        "study" => {
            cfg.study = StudyKind::parse(value).ok_or(Error::Parse {
                line,
                message: format!("unknown study '{value}'"),
            })?;
        }
        "preset" => cfg.preset = value.to_string(), // already resolved
        "out" => cfg.out = PathBuf::from(value),
        "seed" => cfg.seed = parse_u64(line, key, value)?,
        "quiet" => cfg.quiet = parse_bool(line, key, value)?,
        "output.points" => cfg.output_points = parse_usize(line, key, value)?,
        "output.snapshots" => cfg.output_snapshots = parse_usize(line, key, value)?,
        "domain.t_final" => cfg.t_final = parse_f64(line, key, value)?,
        "quadrature.resolution" => cfg.resolution = parse_usize(line, key, value)?,
        "basis.n" => cfg.basis_n = parse_usize(line, key, value)?,
        "basis.m" => cfg.basis_m = parse_usize(line, key, value)?,
        "basis.cache" => cfg.basis_cache = value.to_string(),
        "index.kind" => {
            cfg.index_kind = match value {
                "piecewise_linear" => IndexKind::PiecewiseLinear,
                "exponential" => IndexKind::Exponential,
                "prescribed_xt" => IndexKind::PrescribedXt,
                _ => {
                    return Err(Error::Parse {
                        line,
                        message: format!("unknown index kind '{value}'"),
                    })
                }
            };
        }
        "index.p_min" => cfg.index_p_min = parse_f64(line, key, value)?,
        "index.p_max" => cfg.index_p_max = parse_f64(line, key, value)?,
        "index.c_ref" => cfg.index_c_ref = parse_f64(line, key, value)?,
        "index.xt.mean" => cfg.index_xt_mean = parse_f64(line, key, value)?,
        "index.xt.amplitude" => cfg.index_xt_amplitude = parse_f64(line, key, value)?,
        "index.xt.kx" => cfg.index_xt_kx = parse_f64(line, key, value)?,
        "index.xt.ky" => cfg.index_xt_ky = parse_f64(line, key, value)?,
        "index.xt.omega" => cfg.index_xt_omega = parse_f64(line, key, value)?,
        "stress.form" => {
            cfg.stress_form = match value {
                "power_law" => StressFormKind::PowerLaw,
                "regularized" => StressFormKind::Regularized,
                _ => {
                    return Err(Error::Parse {
                        line,
                        message: format!("unknown stress form '{value}'"),
                    })
                }
            };
        }
        "stress.nu0" => cfg.stress_nu0 = parse_f64(line, key, value)?,
        "stress.nu1" => cfg.stress_nu1 = parse_f64(line, key, value)?,
        "stress.nu2" => cfg.stress_nu2 = parse_f64(line, key, value)?,
        "flux.k0" => cfg.flux_k0 = parse_f64(line, key, value)?,
        "flux.k1" => cfg.flux_k1 = parse_f64(line, key, value)?,
        "init.c_tilde0" => cfg.c_tilde0 = parse_f64(line, key, value)?,
        "mollify.epsilon" => cfg.mollify_epsilon = parse_f64(line, key, value)?,
        "integrator.scheme" => {
            cfg.scheme = match value {
                "rk4_adaptive" => Scheme::Rk4Adaptive,
                "implicit_euler" => Scheme::ImplicitEuler,
                _ => {
                    return Err(Error::Parse {
                        line,
                        message: format!("unknown integrator scheme '{value}'"),
                    })
                }
            };
        }
        "integrator.rtol" => cfg.rtol = parse_f64(line, key, value)?,
        "integrator.atol" => cfg.atol = parse_f64(line, key, value)?,
        "integrator.dt_init" => cfg.dt_init = parse_f64(line, key, value)?,
        "integrator.dt_min" => cfg.dt_min = parse_f64(line, key, value)?,
        "study.n_list" => {
            cfg.n_list = value
                .split(',')
                .map(|v| parse_usize(line, key, v.trim()))
                .collect::<Result<_>>()?;
        }
        "study.m_list" => {
            cfg.m_list = value
                .split(',')
                .map(|v| parse_usize(line, key, v.trim()))
                .collect::<Result<_>>()?;
        }
        "study.epsilon_list" => {
            cfg.epsilon_list = value
                .split(',')
                .map(|v| parse_f64(line, key, v.trim()))
                .collect::<Result<_>>()?;
        }
        _ => {
            return Err(Error::UnknownKey {
                line,
                key: key.to_string(),
            })
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Study driver
// ---------------------------------------------------------------------------

/// One pass/fail line of a study summary.
#[derive(Debug, Clone)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Outcome of a study: summary lines plus the output directory.
#[derive(Debug, Clone)]
pub struct StudyReport {
    pub passed: bool,
    pub checks: Vec<CheckLine>,
    pub out_dir: PathBuf,
}

fn check(checks: &mut Vec<CheckLine>, name: &str, passed: bool, detail: String) {
    checks.push(CheckLine {
        name: name.to_string(),
        passed,
        detail,
    });
}

fn max_of(xs: &[f64]) -> f64 {
    xs.iter().cloned().fold(0.0, f64::max)
}

/// Tolerances of the run-level checks.
pub const ENERGY_RESIDUAL_TOL: f64 = 1e-5;
pub const TAYLOR_GREEN_TOL: f64 = 1e-6;
pub const MAX_PRINCIPLE_TOL: f64 = 1e-2;

fn run_single(cfg: &Config, checks: &mut Vec<CheckLine>, dir: &Path) -> Result<Trajectory> {
    let scenario = cfg.scenario()?;
    let traj = run_scenario(&scenario)?;
    output::write_diagnostics_csv(&dir.join("diagnostics.csv"), &traj)?;
    output::write_snapshots(&dir.join("snapshots"), &traj, cfg.output_snapshots)?;

    let finite = traj.records.iter().all(|r| r.all_finite());
    check(checks, "records_finite", finite, format!("{} records", traj.records.len()));

    let e = max_of(&energy_residuals(&traj));
    check(
        checks,
        "energy_identity",
        e < ENERGY_RESIDUAL_TOL,
        format!("max residual {e:.3e} (tol {ENERGY_RESIDUAL_TOL:.0e})"),
    );

    let has_concentration = traj.records[0].conc_energy > 0.0;
    if has_concentration {
        let c = max_of(&concentration_energy_residuals(&traj));
        check(
            checks,
            "concentration_energy_identity",
            c < ENERGY_RESIDUAL_TOL,
            format!("max residual {c:.3e} (tol {ENERGY_RESIDUAL_TOL:.0e})"),
        );
    }
    let flux_ok = traj.records.iter().all(|r| r.flux_dissipation >= -1e-14);
    check(
        checks,
        "flux_dissipation_nonnegative",
        flux_ok,
        String::new(),
    );

    if cfg.preset == "taylor_green" {
        let a0 = &traj.states[0].a;
        let a1 = &traj.states.last().unwrap().a;
        let decay = (-2.0 * cfg.stress_nu0 * cfg.t_final).exp();
        let mut err_sq = 0.0;
        let mut ref_sq = 0.0;
        for j in 0..a0.len() {
            let exact = a0[j] * decay;
            err_sq += (a1[j] - exact) * (a1[j] - exact);
            ref_sq += exact * exact;
        }
        let rel = (err_sq / ref_sq).sqrt();
        check(
            checks,
            "taylor_green_oracle",
            rel < TAYLOR_GREEN_TOL,
            format!("relative L2 error {rel:.3e} (tol {TAYLOR_GREEN_TOL:.0e})"),
        );
    }
    if cfg.preset.starts_with("synovial") && cfg.basis_m >= 32 {
        let (over, under) = max_principle_worst(&traj, cfg.c_tilde0);
        let bound = MAX_PRINCIPLE_TOL * cfg.c_tilde0;
        check(
            checks,
            "max_principle",
            over < bound && under < bound,
            format!("overshoot {over:.3e}, undershoot {under:.3e} (bound {bound:.1e})"),
        );
    }
    Ok(traj)
}

fn run_n_refinement(cfg: &Config, checks: &mut Vec<CheckLine>, dir: &Path) -> Result<()> {
    let scenario = cfg.scenario()?;
    let table = convergence_study(&scenario, &cfg.n_list, &cfg.m_list)?;
    output::write_cauchy_csv(&dir.join("cauchy.csv"), &table)?;
    let diffs: Vec<f64> = table.velocity.iter().map(|&(_, _, d)| d).collect();
    let decreasing = diffs.windows(2).all(|w| w[1] < w[0]);
    check(
        checks,
        "velocity_cauchy_decreasing",
        decreasing,
        output::fmt_series(&diffs),
    );
    let stresses: Vec<f64> = table.levels.iter().map(|l| l.lux_stress).collect();
    let lo = stresses.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = stresses.iter().cloned().fold(0.0f64, f64::max);
    check(
        checks,
        "stress_norm_band",
        hi <= 2.0 * lo,
        format!("range [{lo:.3e}, {hi:.3e}]"),
    );
    Ok(())
}

fn run_m_refinement(cfg: &Config, checks: &mut Vec<CheckLine>, dir: &Path) -> Result<()> {
    let scenario = cfg.scenario()?;
    let sweep = max_principle_sweep(&scenario, &cfg.m_list)?;
    output::write_maxmin_csv(&dir.join("maxmin.csv"), &sweep)?;
    let monotone = |xs: &[f64]| xs.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    check(
        checks,
        "overshoot_monotone",
        monotone(&sweep.overshoot),
        output::fmt_series(&sweep.overshoot),
    );
    check(
        checks,
        "undershoot_monotone",
        monotone(&sweep.undershoot),
        output::fmt_series(&sweep.undershoot),
    );
    let bound = MAX_PRINCIPLE_TOL * cfg.c_tilde0;
    let finest_over = *sweep.overshoot.last().unwrap();
    let finest_under = *sweep.undershoot.last().unwrap();
    check(
        checks,
        "finest_level_within_bound",
        finest_over < bound && finest_under < bound,
        format!("over {finest_over:.3e}, under {finest_under:.3e} (bound {bound:.1e})"),
    );
    Ok(())
}

fn run_epsilon_study(cfg: &Config, checks: &mut Vec<CheckLine>, dir: &Path) -> Result<()> {
    let mut scenario = cfg.scenario()?;
    // The mollified stress family is the regularised one; force it so the
    // epsilon -> 0 member is the comparison baseline.
    if cfg.stress_form == StressFormKind::PowerLaw {
        let index = scenario.stress.index.clone();
        scenario.stress = StressModel::regularized(
            2.0 * cfg.stress_nu0,
            2.0 * cfg.stress_nu0,
            index,
        )?;
    }
    let study = epsilon_study(&scenario, &cfg.epsilon_list)?;
    output::write_epsilon_csv(&dir.join("epsilon.csv"), &study)?;
    let decreasing = |xs: &[f64]| xs.windows(2).all(|w| w[1] < w[0]);
    check(
        checks,
        "mollify_error_decreasing",
        decreasing(&study.mollify_errors),
        output::fmt_series(&study.mollify_errors),
    );
    check(
        checks,
        "run_difference_decreasing",
        decreasing(&study.run_differences),
        output::fmt_series(&study.run_differences),
    );
    Ok(())
}

fn run_property_suite(cfg: &Config, checks: &mut Vec<CheckLine>) -> Result<()> {
    let seed = cfg.seed;
    // Constitutive structure on the configured models.
    let scenario = cfg.scenario()?;
    let n_samples = 10_000;
    match crate::constitutive::check_stress_structure(&scenario.stress, n_samples, seed) {
        Ok(report) => check(
            checks,
            "stress_structure",
            true,
            format!(
                "growth max {:.3e} <= C1 {:.3e}; monotonicity gap min {:.3e}; coercivity margin min {:.3e}",
                report.growth_ratio_max,
                scenario.stress.c1,
                report.monotonicity_gap_min,
                report.coercivity_margin_min
            ),
        ),
        Err(e) => check(checks, "stress_structure", false, e.to_string()),
    }
    match crate::constitutive::check_flux_structure(&scenario.flux, n_samples, seed ^ 1) {
        Ok(report) => check(
            checks,
            "flux_structure",
            true,
            format!(
                "upper margin min {:.3e}, lower margin min {:.3e}",
                report.upper_margin_min, report.lower_margin_min
            ),
        ),
        Err(e) => check(checks, "flux_structure", false, e.to_string()),
    }

    let lux = suite::luxembourg_sweep(seed ^ 2, 20, 100)?;
    check(
        checks,
        "luxembourg_norm",
        lux.max_constant_exponent_dev < 1e-8
            && lux.max_homogeneity_dev < 1e-8
            && lux.max_triangle_violation < 1e-8,
        format!(
            "constant-exponent dev {:.3e}, homogeneity dev {:.3e}, triangle violation {:.3e}",
            lux.max_constant_exponent_dev, lux.max_homogeneity_dev, lux.max_triangle_violation
        ),
    );

    let ineq = suite::inequality_sweep(seed ^ 3, 100)?;
    check(
        checks,
        "holder_young_inequalities",
        ineq.holder_violations == 0 && ineq.young_violations == 0,
        format!(
            "{} trials, max Holder ratio {:.4}, max Young excess {:.3e}",
            ineq.trials, ineq.max_holder_ratio, ineq.max_young_excess
        ),
    );

    let metric = suite::metric_sweep(seed ^ 4, 10_000);
    check(
        checks,
        "parabolic_metric_axioms",
        metric.max_symmetry_dev == 0.0
            && metric.max_triangle_violation <= 1e-12
            && metric.min_distance >= 0.0
            && metric.identity_ok,
        format!(
            "symmetry dev {:.1e}, triangle violation {:.3e}",
            metric.max_symmetry_dev, metric.max_triangle_violation
        ),
    );

    let log_ratio = suite::parabolic_log_sweep(seed ^ 5, 10_000);
    check(
        checks,
        "parabolic_log_bound",
        log_ratio <= 1.0,
        format!("worst ratio to bound {log_ratio:.4}"),
    );

    let domain = Domain::unit_square(1.0);
    let integrity = suite::basis_integrity(&domain, cfg.resolution, cfg.basis_n, cfg.basis_m, seed ^ 6)?;
    check(
        checks,
        "basis_integrity",
        integrity.velocity_gram_residual < 1e-10
            && integrity.concentration_gram_residual < 1e-10
            && integrity.max_node_divergence < 1e-12
            && integrity.rayleigh_monotone
            && integrity.velocity_projection_dev < 1e-10
            && integrity.concentration_projection_dev < 1e-10,
        format!(
            "gram {:.1e}/{:.1e}, div {:.1e}, projection {:.1e}/{:.1e}, rayleigh monotone {}",
            integrity.velocity_gram_residual,
            integrity.concentration_gram_residual,
            integrity.max_node_divergence,
            integrity.velocity_projection_dev,
            integrity.concentration_projection_dev,
            integrity.rayleigh_monotone
        ),
    );
    Ok(())
}

use crate::fields::Domain;

/// Execute the configured study, writing artifacts under
/// `<out>/<preset>_<study>/`. Returns the summary; `passed` mirrors the
/// summary's RESULT line.
pub fn run_study(cfg: &Config) -> Result<StudyReport> {
    cfg.validate()?;
    let dir = cfg.out.join(format!("{}_{}", cfg.preset, cfg.study.as_str()));
    std::fs::create_dir_all(&dir)?;
    let mut checks = Vec::new();
    match cfg.study {
        StudyKind::SingleRun => {
            run_single(cfg, &mut checks, &dir)?;
        }
        StudyKind::NRefinement => run_n_refinement(cfg, &mut checks, &dir)?,
        StudyKind::MRefinement => run_m_refinement(cfg, &mut checks, &dir)?,
        StudyKind::EpsilonStudy => run_epsilon_study(cfg, &mut checks, &dir)?,
        StudyKind::PropertySuite => run_property_suite(cfg, &mut checks)?,
    }
    let passed = checks.iter().all(|c| c.passed);
    output::write_summary(&dir.join("summary.txt"), cfg, &checks, passed)?;
    if !cfg.quiet {
        for c in &checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            if c.detail.is_empty() {
                println!("{tag} {}", c.name);
            } else {
                println!("{tag} {}: {}", c.name, c.detail);
            }
        }
        println!("RESULT: {}", if passed { "PASS" } else { "FAIL" });
    }
    Ok(StudyReport {
        passed,
        checks,
        out_dir: dir,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_taylor_green_single_run() {
        let cfg = parse_config_text("").unwrap();
        assert_eq!(cfg.study, StudyKind::SingleRun);
        assert_eq!(cfg.preset, "taylor_green");
        assert_eq!(cfg.basis_n, 8);
        assert_eq!(cfg.seed, 42);
    }

    #[test]
    fn out_of_range_index_bound_is_a_range_error() {
        let err = parse_config_text("index.p_min = 0.9").unwrap_err();
        match err {
            Error::RangeError { key, .. } => assert_eq!(key, "index.p_min"),
            other => panic!("expected RangeError, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_hard_errors_with_line_numbers() {
        let err = parse_config_text("seed = 1\nnot.a.key = 2\n").unwrap_err();
        match err {
            Error::UnknownKey { line, key } => {
                assert_eq!(line, 2);
                assert_eq!(key, "not.a.key");
            }
            other => panic!("expected UnknownKey, got {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_config_text("\n\njust some words\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("expected Parse, got {other:?}"),
        }
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let cfg = parse_config_text(
            "# a comment\n\npreset = heat_only  # trailing comment\nseed = 7\n",
        )
        .unwrap();
        assert_eq!(cfg.preset, "heat_only");
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn dump_parse_roundtrip_is_exact() {
        for preset in presets::PRESET_NAMES {
            let mut cfg = Config::default_for_preset(preset).unwrap();
            cfg.study = StudyKind::MRefinement;
            cfg.seed = 1234;
            cfg.basis_n = 12;
            cfg.mollify_epsilon = 0.125;
            cfg.epsilon_list = vec![0.5, 0.25];
            let text = cfg.dump();
            let back = parse_config_text(&text).unwrap();
            assert_eq!(back, cfg, "roundtrip mismatch for preset {preset}");
            assert_eq!(back.dump(), text);
        }
    }

    #[test]
    fn preset_line_order_does_not_matter() {
        // The preset is resolved before other keys are applied.
        let cfg = parse_config_text("basis.m = 24\npreset = synovial\n").unwrap();
        assert_eq!(cfg.preset, "synovial");
        assert_eq!(cfg.basis_m, 24);
        assert_eq!(cfg.basis_n, 8);
    }

    #[test]
    fn scenario_reflects_overrides() {
        let cfg = parse_config_text(
            "preset = synovial\nstress.nu0 = 0.5\nbasis.n = 6\ndomain.t_final = 0.25\n",
        )
        .unwrap();
        let sc = cfg.scenario().unwrap();
        assert_eq!(sc.n_velocity, 6);
        assert_eq!(sc.domain.t_final, 0.25);
        match sc.stress.form {
            crate::constitutive::StressForm::PowerLaw { nu0 } => assert_eq!(nu0, 0.5),
            _ => panic!("expected power-law form"),
        }
    }
}
