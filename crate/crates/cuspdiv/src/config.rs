//! Run configuration: a JSON file and command-line flags with the same
//! keys, merged with flags winning, then validated into [`Settings`].

use std::path::{Path, PathBuf};

use cuspdiv_core::analytic::{thresholds, FamilyParams};
use cuspdiv_core::certificate::{default_eps_grid, dyadic_grid};
use cuspdiv_core::{HRule, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FamilyName {
    #[serde(rename = "poly2d")]
    Poly2d,
    #[serde(rename = "polyNd")]
    PolyNd,
    #[serde(rename = "log2d")]
    Log2d,
}

impl std::str::FromStr for FamilyName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "poly2d" => Ok(FamilyName::Poly2d),
            "polyNd" => Ok(FamilyName::PolyNd),
            "log2d" => Ok(FamilyName::Log2d),
            _ => Err(format!("unknown family {s:?} (expected poly2d, polyNd or log2d)")),
        }
    }
}

/// Either a literal list or the text form accepted by `--eps-grid`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<f64>),
    Text(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Analyze,
    Certificate,
    Oracle,
    Selftest,
}

/// Every field optional; unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    pub family: Option<FamilyName>,
    pub m: Option<f64>,
    #[serde(rename = "N")]
    pub n: Option<u32>,
    pub r: Option<f64>,
    pub p: Option<f64>,
    pub alpha: Option<f64>,
    pub alpha_grid: Option<GridSpec>,
    pub eps_grid: Option<GridSpec>,
    pub h_rule: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub outer_tol: Option<f64>,
    pub inner_tol: Option<f64>,
    pub max_outer: Option<usize>,
    pub max_inner: Option<usize>,
    pub mc_samples: Option<u64>,
    /// Test hook: multiplies the Hoelder constant used by the selftest.
    pub inject_kp_scale: Option<f64>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),*) => {
        RunConfig { $($f: $top.$f.or($base.$f)),* }
    };
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_json(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `top` override those in `self`.
    pub fn merge(self, top: RunConfig) -> RunConfig {
        let base = self;
        overlay!(base, top; family, m, n, r, p, alpha, alpha_grid, eps_grid, h_rule, seed, out,
            outer_tol, inner_tol, max_outer, max_inner, mc_samples, inject_kp_scale)
    }
}

/// Validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub command: Command,
    pub family: FamilyName,
    pub params: FamilyParams,
    pub alphas: Vec<f64>,
    pub eps_grid: Vec<f64>,
    pub h_rule: HRule,
    pub solver: SolverConfig,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub mc_samples: u64,
    pub kp_scale: f64,
}

pub const DEFAULT_SEED: u64 = 20;
pub const DEFAULT_MC_SAMPLES: u64 = 1_000_000;
pub const DEFAULT_ORACLE_EPS: [f64; 3] = [0.2, 0.1, 0.05];

fn finite(name: &str, v: f64) -> CliResult<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::config(format!("{name} must be finite")))
    }
}

fn parse_list(name: &str, text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::config(format!("{name}: cannot parse {s:?} as a number")))
                .and_then(|v| finite(name, v))
        })
        .collect()
}

/// Comma list, or `dyadic:a:b` for `2^-a, ..., 2^-b`.
pub fn parse_grid(name: &str, spec: &GridSpec) -> CliResult<Vec<f64>> {
    match spec {
        GridSpec::List(v) => v.iter().map(|&x| finite(name, x)).collect(),
        GridSpec::Text(t) => {
            if let Some(rest) = t.strip_prefix("dyadic:") {
                let parts: Vec<&str> = rest.split(':').collect();
                let bad = || CliError::config(format!("{name}: expected dyadic:a:b with integers a < b, got {t:?}"));
                if parts.len() != 2 {
                    return Err(bad());
                }
                let a: i32 = parts[0].trim().parse().map_err(|_| bad())?;
                let b: i32 = parts[1].trim().parse().map_err(|_| bad())?;
                if !(a < b) || !(0..=1000).contains(&a) || b > 1000 {
                    return Err(bad());
                }
                Ok(dyadic_grid(a, b))
            } else {
                parse_list(name, t)
            }
        }
    }
}

/// `graded`, `graded:TIP:GROWTH:HMAX` or `uniform:H`.
pub fn parse_h_rule(text: &str) -> CliResult<HRule> {
    let bad = || CliError::config(format!("h-rule: expected graded, graded:tip:growth:hmax or uniform:h, got {text:?}"));
    let parts: Vec<&str> = text.split(':').collect();
    let nums = |xs: &[&str]| -> CliResult<Vec<f64>> {
        xs.iter()
            .map(|s| s.trim().parse::<f64>().ok().filter(|v| v.is_finite() && *v > 0.0).ok_or_else(bad))
            .collect()
    };
    match parts.as_slice() {
        ["graded"] => Ok(HRule::default()),
        ["graded", rest @ ..] if rest.len() == 3 => {
            let v = nums(rest)?;
            Ok(HRule::Graded {
                tip_fraction: v[0],
                growth: v[1],
                h_max: v[2],
            })
        }
        ["uniform", h] => Ok(HRule::Uniform { h: nums(&[h])?[0] }),
        _ => Err(bad()),
    }
}

impl Settings {
    pub fn resolve(command: Command, cfg: &RunConfig) -> CliResult<Settings> {
        let family = cfg.family.unwrap_or(FamilyName::Poly2d);
        let p = finite("p", cfg.p.unwrap_or(2.0))?;
        let reject = |set: bool, what: &str| -> CliResult<()> {
            if set {
                Err(CliError::config(format!("{what} does not apply to family {family:?}")))
            } else {
                Ok(())
            }
        };
        let params = match family {
            FamilyName::Poly2d => {
                reject(cfg.r.is_some(), "r")?;
                if cfg.n.is_some_and(|n| n != 2) {
                    return Err(CliError::config("poly2d is planar; use polyNd for N > 2"));
                }
                FamilyParams::poly2d(finite("m", cfg.m.unwrap_or(2.0))?, p)
            }
            FamilyName::PolyNd => {
                reject(cfg.r.is_some(), "r")?;
                FamilyParams::poly_nd(finite("m", cfg.m.unwrap_or(2.0))?, cfg.n.unwrap_or(3), p)
            }
            FamilyName::Log2d => {
                reject(cfg.m.is_some(), "m")?;
                reject(cfg.n.is_some_and(|n| n != 2), "N")?;
                FamilyParams::log2d(finite("r", cfg.r.unwrap_or(1.0))?, p)
            }
        }
        .map_err(|e| CliError::config(e.to_string()))?;

        let alphas = match (&cfg.alpha, &cfg.alpha_grid) {
            (Some(_), Some(_)) => return Err(CliError::config("give alpha or alpha-grid, not both")),
            (Some(a), None) => vec![finite("alpha", *a)?],
            (None, Some(g)) => parse_grid("alpha-grid", g)?,
            (None, None) => Vec::new(),
        };
        let needs_alpha = command != Command::Selftest;
        if needs_alpha && alphas.is_empty() {
            return Err(CliError::config("alpha or alpha-grid is required"));
        }
        if matches!(command, Command::Certificate | Command::Oracle) && alphas.len() != 1 {
            return Err(CliError::config("certificate and oracle take a single alpha"));
        }
        if matches!(command, Command::Certificate | Command::Oracle) {
            let t1 = thresholds(&params).t1;
            if !(alphas[0] > t1) {
                return Err(CliError::config(format!(
                    "alpha = {} is not admissible (f is not in L^p for alpha <= t1 = {t1})",
                    alphas[0]
                )));
            }
        }

        let eps_grid = match (&cfg.eps_grid, command) {
            (Some(g), _) => parse_grid("eps-grid", g)?,
            (None, Command::Oracle) => DEFAULT_ORACLE_EPS.to_vec(),
            (None, _) => default_eps_grid(),
        };
        if matches!(command, Command::Certificate | Command::Oracle) {
            if eps_grid.is_empty() || eps_grid.windows(2).any(|w| !(w[1] < w[0])) {
                return Err(CliError::config("eps-grid must be nonempty and strictly decreasing"));
            }
            let xm = params.x_max();
            if eps_grid.iter().any(|&e| !(e > 0.0 && e < xm)) {
                return Err(CliError::config(format!("eps-grid values must lie in (0, {xm})")));
            }
        }
        if command == Command::Oracle {
            if params.dim() != 2 {
                return Err(CliError::config("the discrete oracle is planar"));
            }
            if p != 2.0 {
                return Err(CliError::config("the discrete oracle runs at p = 2"));
            }
        }

        let h_rule = match &cfg.h_rule {
            Some(t) => parse_h_rule(t)?,
            None => HRule::default(),
        };
        let defaults = SolverConfig::default();
        let solver = SolverConfig {
            outer_tol: cfg.outer_tol.unwrap_or(defaults.outer_tol),
            inner_tol: cfg.inner_tol.unwrap_or(defaults.inner_tol),
            max_outer: cfg.max_outer.unwrap_or(defaults.max_outer),
            max_inner: cfg.max_inner.unwrap_or(defaults.max_inner),
        };
        if !(solver.outer_tol > 0.0 && solver.inner_tol > 0.0 && solver.max_outer > 0 && solver.max_inner > 0) {
            return Err(CliError::config("solver tolerances and caps must be positive"));
        }
        let kp_scale = finite("inject-kp-scale", cfg.inject_kp_scale.unwrap_or(1.0))?;
        let mc_samples = cfg.mc_samples.unwrap_or(DEFAULT_MC_SAMPLES);
        if mc_samples < 2 {
            return Err(CliError::config("mc-samples must be at least 2"));
        }
        Ok(Settings {
            command,
            family,
            params,
            alphas,
            eps_grid,
            h_rule,
            solver,
            seed: cfg.seed.unwrap_or(DEFAULT_SEED),
            out: cfg.out.clone(),
            mc_samples,
            kp_scale,
        })
    }
}
