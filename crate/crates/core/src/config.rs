//! Flat key-value configuration files.
//!
//! Every key is optional; `mode` picks the base preset (`newton_mr` when
//! absent) and the remaining keys override single fields:
//!
//! ```toml
//! mode = "lbfgs_mr"
//! grad_tol = 1e-8
//! tol_cap = 0.01
//! tol_exponent = 1.0
//! reg_rule = "proportional"
//! reg_factor = 0.1
//! ```

use serde::{Deserialize, Serialize};

use crate::driver::{CurvatureTest, HessianMode, SolverConfig};
use crate::error::{Error, Result};
use crate::schedule::{RegularizationRule, ToleranceGrowth};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    NewtonMr,
    LbfgsMr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularizationKind {
    Standard,
    Proportional,
    Off,
}

/// One optional field per tunable of [`SolverConfig`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlatConfig {
    pub mode: Option<Mode>,
    pub hessian: Option<HessianMode>,
    pub curvature_test: Option<CurvatureTest>,
    pub max_inner: Option<usize>,
    pub grad_tol: Option<f64>,
    pub max_oracles: Option<u64>,
    pub lbfgs_memory: Option<usize>,
    pub ls_initial: Option<f64>,
    pub ls_shrink: Option<f64>,
    pub ls_sigma: Option<f64>,
    pub ls_min_step: Option<f64>,
    pub ls_max_step: Option<f64>,
    pub ls_noise_floor: Option<f64>,
    pub curvature_cap: Option<f64>,
    pub curvature_exponent: Option<f64>,
    pub npc_bound: Option<f64>,
    pub tol_cap: Option<f64>,
    pub tol_scale: Option<f64>,
    pub tol_exponent: Option<f64>,
    pub tol_growth: Option<ToleranceGrowth>,
    pub reg_rule: Option<RegularizationKind>,
    pub reg_cap: Option<f64>,
    pub reg_exponent: Option<f64>,
    pub reg_factor: Option<f64>,
    pub cost_value: Option<u64>,
    pub cost_gradient: Option<u64>,
    pub cost_hessian_vector: Option<u64>,
}

impl FlatConfig {
    /// Applies the overrides to the chosen preset and validates the result.
    pub fn resolve(&self) -> Result<SolverConfig> {
        let mut cfg = match self.mode.unwrap_or(Mode::NewtonMr) {
            Mode::NewtonMr => SolverConfig::newton_mr(),
            Mode::LbfgsMr => SolverConfig::lbfgs_mr(),
        };
        fn set<T: Copy>(slot: &mut T, value: Option<T>) {
            if let Some(v) = value {
                *slot = v;
            }
        }
        set(&mut cfg.hessian, self.hessian);
        set(&mut cfg.curvature_test, self.curvature_test);
        set(&mut cfg.max_inner, self.max_inner);
        set(&mut cfg.grad_tol, self.grad_tol);
        set(&mut cfg.max_oracles, self.max_oracles);
        set(&mut cfg.lbfgs_memory, self.lbfgs_memory);

        let ls = &mut cfg.linesearch;
        set(&mut ls.initial, self.ls_initial);
        set(&mut ls.shrink, self.ls_shrink);
        set(&mut ls.sigma, self.ls_sigma);
        set(&mut ls.min_step, self.ls_min_step);
        set(&mut ls.max_step, self.ls_max_step);
        set(&mut ls.noise_floor, self.ls_noise_floor);

        let sp = &mut cfg.schedule;
        set(&mut sp.curvature_cap, self.curvature_cap);
        set(&mut sp.curvature_exponent, self.curvature_exponent);
        set(&mut sp.npc_bound, self.npc_bound);
        set(&mut sp.tolerance.cap, self.tol_cap);
        set(&mut sp.tolerance.scale, self.tol_scale);
        set(&mut sp.tolerance.exponent, self.tol_exponent);
        set(&mut sp.tolerance.growth, self.tol_growth);

        let (cap, exponent) = match sp.regularization {
            RegularizationRule::Standard { cap, exponent } => (cap, exponent),
            _ => (1e-12, 1.0),
        };
        let kind = self.reg_rule.unwrap_or(match sp.regularization {
            RegularizationRule::Standard { .. } => RegularizationKind::Standard,
            RegularizationRule::Proportional { .. } => RegularizationKind::Proportional,
            RegularizationRule::Off => RegularizationKind::Off,
        });
        sp.regularization = match kind {
            RegularizationKind::Standard => RegularizationRule::Standard {
                cap: self.reg_cap.unwrap_or(cap),
                exponent: self.reg_exponent.unwrap_or(exponent),
            },
            RegularizationKind::Proportional => RegularizationRule::Proportional {
                factor: self.reg_factor.ok_or_else(|| {
                    Error::InvalidConfig("reg_rule = \"proportional\" needs reg_factor".into())
                })?,
            },
            RegularizationKind::Off => RegularizationRule::Off,
        };

        set(&mut cfg.costs.value, self.cost_value);
        set(&mut cfg.costs.gradient, self.cost_gradient);
        set(&mut cfg.costs.hessian_vector, self.cost_hessian_vector);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every field spelled out, so the file round-trips without a preset.
    pub fn from_config(cfg: &SolverConfig) -> Self {
        let sp = &cfg.schedule;
        let ls = &cfg.linesearch;
        let (reg_rule, reg_cap, reg_exponent, reg_factor) = match sp.regularization {
            RegularizationRule::Standard { cap, exponent } => (
                RegularizationKind::Standard,
                Some(cap),
                Some(exponent),
                None,
            ),
            RegularizationRule::Proportional { factor } => {
                (RegularizationKind::Proportional, None, None, Some(factor))
            }
            RegularizationRule::Off => (RegularizationKind::Off, None, None, None),
        };
        Self {
            mode: None,
            hessian: Some(cfg.hessian),
            curvature_test: Some(cfg.curvature_test),
            max_inner: Some(cfg.max_inner),
            grad_tol: Some(cfg.grad_tol),
            max_oracles: Some(cfg.max_oracles),
            lbfgs_memory: Some(cfg.lbfgs_memory),
            ls_initial: Some(ls.initial),
            ls_shrink: Some(ls.shrink),
            ls_sigma: Some(ls.sigma),
            ls_min_step: Some(ls.min_step),
            ls_max_step: Some(ls.max_step),
            ls_noise_floor: Some(ls.noise_floor),
            curvature_cap: Some(sp.curvature_cap),
            curvature_exponent: Some(sp.curvature_exponent),
            npc_bound: Some(sp.npc_bound),
            tol_cap: Some(sp.tolerance.cap),
            tol_scale: Some(sp.tolerance.scale),
            tol_exponent: Some(sp.tolerance.exponent),
            tol_growth: Some(sp.tolerance.growth),
            reg_rule: Some(reg_rule),
            reg_cap,
            reg_exponent,
            reg_factor,
            cost_value: Some(cfg.costs.value),
            cost_gradient: Some(cfg.costs.gradient),
            cost_hessian_vector: Some(cfg.costs.hessian_vector),
        }
    }
}

/// Parses a flat TOML document into a validated config.
pub fn parse_config(text: &str) -> Result<SolverConfig> {
    let flat: FlatConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    flat.resolve()
}

/// Writes every field of `cfg` as flat TOML.
pub fn config_to_toml(cfg: &SolverConfig) -> String {
    toml::to_string(&FlatConfig::from_config(cfg)).expect("flat config always serializes")
}
