//! Lemma checks and cross-module invariants, reported as JSON.

use std::f64::consts::{LN_2, PI};

use cuspdiv_core::analytic::{hoelder_constant, thresholds, FamilyParams};
use cuspdiv_core::certificate::{certificate_curve, default_eps_grid};
use cuspdiv_core::geometry::Cap;
use cuspdiv_core::lemma::{self, SyntheticField};
use cuspdiv_core::oracle::solve_with_source;
use cuspdiv_core::quad::{self, QuadConfig};
use cuspdiv_core::rhs::make_rhs;
use cuspdiv_core::{Classification, DomainSpec, RhsSpec, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dense_kkt::{random_masked_grid, solve_dense};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    /// Measured quantity (residual, worst error, |z|, ...).
    pub value: f64,
    /// Bound the value is compared against.
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub mc_samples: u64,
    pub passed: bool,
    pub checks: Vec<CheckOutcome>,
}

impl SelftestReport {
    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelftestOptions {
    pub seed: u64,
    pub mc_samples: u64,
    /// Multiplies `K_p` in the Hoelder check; anything but 1 must fail.
    pub kp_scale: f64,
}

fn below(name: &'static str, value: f64, tolerance: f64, detail: String) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: value < tolerance,
        value,
        tolerance,
        detail,
    }
}

fn flag(name: &'static str, ok: bool, detail: String) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: ok,
        value: if ok { 0.0 } else { 1.0 },
        tolerance: 0.5,
        detail,
    }
}

fn errored(name: &'static str, e: impl std::fmt::Display) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: false,
        value: f64::NAN,
        tolerance: f64::NAN,
        detail: format!("error: {e}"),
    }
}

macro_rules! attempt {
    ($name:expr, $body:expr) => {
        match (|| -> cuspdiv_core::Result<CheckOutcome> { $body })() {
            Ok(c) => c,
            Err(e) => errored($name, e),
        }
    };
}

pub const HOELDER_MS: [f64; 3] = [1.5, 2.0, 3.0];
pub const HOELDER_PS: [f64; 3] = [1.5, 2.0, 3.0];
pub const HOELDER_XS: [f64; 3] = [0.1, 0.5, 1.0];

/// Worst relative error of the Hoelder identity over the standard sweep.
pub fn hoelder_sweep(kp_scale: f64) -> cuspdiv_core::Result<f64> {
    let mut worst = 0.0f64;
    for m in HOELDER_MS {
        for p in HOELDER_PS {
            let k = kp_scale * hoelder_constant(p);
            worst = worst.max(lemma::check_hoelder_identity_with_constant(m, p, &HOELDER_XS, k)?);
        }
    }
    Ok(worst)
}

/// `V_k`, the volume of the unit `k`-ball, for the dimensions in use.
fn ball_volume(k: u32) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => cuspdiv_core::special::unit_ball_volume(k),
    }
}

/// `(int f, int |f|)` over the domain of `rhs`, by quadrature of `f` times
/// cross-section measures built from `section_radius`. Shares nothing with
/// the closed forms used to pick the cap constant.
pub fn independent_integrals(rhs: &RhsSpec) -> cuspdiv_core::Result<(f64, f64)> {
    let d = rhs.domain();
    let k = d.dim() - 1;
    let vk = ball_volume(k as u32);
    let section = |x: f64| vk * d.section_radius(x).powi(k as i32);
    let cfg = QuadConfig::with_rel_tol(1e-12);
    let xm = d.x_max();
    let cut = d.cut();
    let cusp = |abs: bool| -> cuspdiv_core::Result<f64> {
        let g = |x: f64| {
            let f = rhs.cusp_value(x);
            (if abs { f.abs() } else { f }) * section(x)
        };
        if d.params().is_log() {
            // x = exp(-1/s): slowly varying factors become smooth in s
            let s_lo = if cut > 0.0 { -1.0 / cut.ln() } else { 0.0 };
            let h = |s: f64| {
                let x = (-1.0 / s).exp();
                if x <= 0.0 {
                    0.0
                } else {
                    g(x) * x / (s * s)
                }
            };
            let s_hi = 1.0 / LN_2;
            Ok(if s_lo > 0.0 {
                quad::integrate(h, s_lo, s_hi, &cfg)?.value
            } else {
                quad::integrate_from_zero(h, s_hi, &cfg)?.value
            })
        } else if cut > 0.0 {
            Ok(quad::integrate_from(g, cut, xm, &cfg)?.value)
        } else {
            Ok(quad::integrate_from_zero(g, xm, &cfg)?.value)
        }
    };
    let x_end = match d.cap() {
        Cap::HalfDisc { x0, radius } => x0 + radius,
        Cap::Cone => 2.0,
    };
    let cap_measure = quad::integrate(section, xm, x_end, &cfg)?.value;
    let c = rhs.cap_constant();
    Ok((cusp(false)? + c * cap_measure, cusp(true)? + c.abs() * cap_measure))
}

fn random_triple(rng: &mut ChaCha8Rng) -> cuspdiv_core::Result<(FamilyParams, f64)> {
    let p = rng.random_range(1.3..3.5);
    let params = match rng.random_range(0..3) {
        0 => FamilyParams::poly2d(rng.random_range(1.2..3.5), p)?,
        1 => FamilyParams::poly_nd(rng.random_range(1.2..3.0), rng.random_range(3..=4), p)?,
        _ => FamilyParams::log2d(rng.random_range(0.3..2.5), p)?,
    };
    let t = thresholds(&params);
    // land on both sides of t2, away from the exact endpoint
    let width = (t.t2 - t.t1).max(0.5);
    let mut alpha = t.t1 + rng.random_range(0.05..1.8) * width;
    if (alpha - t.t2).abs() < 0.02 {
        alpha += 0.05;
    }
    Ok((params, alpha))
}

/// `n` random admissible `(family, p, alpha)` triples.
pub fn random_triples(n: usize, seed: u64) -> cuspdiv_core::Result<Vec<(FamilyParams, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_triple(&mut rng)).collect()
}

/// Whether the certificate verdict agrees with the classification.
pub fn verdict_agrees(params: &FamilyParams, alpha: f64) -> cuspdiv_core::Result<bool> {
    let rhs = make_rhs(&DomainSpec::new(*params), alpha)?;
    let curve = certificate_curve(&rhs, params.p(), &default_eps_grid())?;
    let certified = thresholds(params).classify(alpha) == Classification::CertifiedNonexistence;
    Ok(curve.verdict.diverges() == certified)
}

pub fn run(opts: &SelftestOptions) -> SelftestReport {
    let mut checks = Vec::new();

    checks.push(attempt!("thresholds", {
        let rows = [
            (FamilyParams::poly2d(2.0, 2.0)?, (-1.5, -0.5)),
            (FamilyParams::poly_nd(2.0, 3, 2.0)?, (-2.5, -1.5)),
            (FamilyParams::log2d(1.5, 2.0)?, (-0.75, 0.75)),
        ];
        let ok = rows.iter().all(|(p, want)| thresholds(p).interval() == Some(*want));
        Ok(flag("thresholds", ok, "poly2d, polyNd N=3, log2d intervals bit-exact".into()))
    }));

    checks.push(attempt!("hoelder_identity", {
        let worst = hoelder_sweep(opts.kp_scale)?;
        Ok(below("hoelder_identity", worst, 1e-8, format!("K_p scale {}", opts.kp_scale)))
    }));

    let fields = || -> cuspdiv_core::Result<Vec<SyntheticField>> {
        Ok(vec![
            SyntheticField::bump(&DomainSpec::new(FamilyParams::poly2d(2.0, 2.0)?), 0.2, 0.9, 1.0)?,
            SyntheticField::bump(&DomainSpec::new(FamilyParams::log2d(1.0, 2.0)?), 0.05, 0.4, 1.0)?,
        ])
    };

    checks.push(attempt!("weak_derivative", {
        let mut worst = 0.0f64;
        for f in fields()? {
            let (lo, hi) = f.support();
            let xs: Vec<f64> = (1..20).map(|k| lo + (hi - lo) * k as f64 / 20.0).collect();
            worst = worst.max(lemma::check_weak_derivative(&f, &xs)?);
        }
        Ok(below("weak_derivative", worst, 1e-6, "bumps on poly2d m=2 and log2d r=1".into()))
    }));

    checks.push(attempt!("limit_zero", {
        let mut ok = true;
        for f in fields()? {
            ok &= lemma::check_limit_zero(&f)?;
        }
        Ok(flag("limit_zero", ok, "section integrals vanish toward the tip".into()))
    }));

    checks.push(attempt!("functional_inequality", {
        let mut worst = f64::INFINITY;
        for f in fields()? {
            for p in [1.5, 2.0, 3.0] {
                let rep = lemma::check_functional_inequality(&f, p)?;
                worst = worst.min(rep.margin() / rep.upper);
            }
        }
        Ok(CheckOutcome {
            name: "functional_inequality",
            passed: worst >= 0.0,
            value: worst,
            tolerance: 0.0,
            detail: "relative margin of the weighted Hoelder bound (must be >= 0)".into(),
        })
    }));

    checks.push(attempt!("measure_induction", {
        let mut worst = 0.0f64;
        for dim in [2, 3, 4] {
            let z = lemma::check_measure_induction(2.0, dim, &[0.3, 0.6, 0.9], opts.mc_samples, opts.seed + dim as u64)?;
            worst = worst.max(z);
        }
        Ok(below("measure_induction", worst, 3.0, "worst |z| over N = 2, 3, 4".into()))
    }));

    checks.push(attempt!("asymptotic_approach", {
        let mut ok = true;
        let mut detail = Vec::new();
        for (p, r, a) in [(2.0, 1.5, 0.0), (3.0, 1.0, 0.1)] {
            let rep = lemma::check_asymptotic_limit(p, r, a)?;
            ok &= rep.monotone;
            detail.push(format!("(p={p}, r={r}, alpha={a}): rel. err {:.4} at 1e-8", rep.final_relative_error()));
        }
        Ok(flag("asymptotic_approach", ok, format!("ratio approaches p/(2(p-1)) monotonically; {}", detail.join("; "))))
    }));

    checks.push(attempt!("zero_mean", {
        let mut worst = 0.0f64;
        let specs = [
            (DomainSpec::new(FamilyParams::poly2d(2.0, 2.0)?), -1.25, None),
            (DomainSpec::new(FamilyParams::poly2d(2.0, 2.0)?), -1.25, Some(0.05)),
            (DomainSpec::new(FamilyParams::poly_nd(2.0, 3, 2.0)?), -1.0, None),
            (DomainSpec::new(FamilyParams::log2d(1.5, 2.0)?), 0.5, None),
            (DomainSpec::new(FamilyParams::log2d(1.0, 3.0)?), 0.1, Some(0.01)),
        ];
        for (d, a, cut) in specs {
            let mut rhs = make_rhs(&d, a)?;
            if let Some(e) = cut {
                rhs = rhs.truncate(e)?;
            }
            let (total, l1) = independent_integrals(&rhs)?;
            worst = worst.max(total.abs() / l1);
        }
        Ok(below("zero_mean", worst, 1e-9, "|int f| / ||f||_1 by independent quadrature".into()))
    }));

    checks.push(attempt!("verdict_consistency", {
        let triples = random_triples(8, opts.seed)?;
        let mut ok = true;
        for (params, alpha) in &triples {
            ok &= verdict_agrees(params, *alpha)?;
        }
        Ok(flag("verdict_consistency", ok, format!("{} random triples", triples.len())))
    }));

    checks.push(attempt!("dense_kkt", {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut worst = 0.0f64;
        for _ in 0..5 {
            let g = random_masked_grid(&mut rng, 40);
            let f: Vec<f64> = (0..g.n_cells()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let Some(dense) = solve_dense(&g, &f) else {
                return Ok(flag("dense_kkt", false, "dense KKT matrix singular".into()));
            };
            let it = solve_with_source(&g, &f, &SolverConfig::default())?;
            worst = worst.max((dense.gradient_norm - it.gradient_norm).abs() / dense.gradient_norm.max(1e-300));
        }
        Ok(below("dense_kkt", worst, 1e-8, "relative gradient-norm gap on 5 random grids".into()))
    }));

    let passed = checks.iter().all(|c| c.passed);
    SelftestReport {
        seed: opts.seed,
        mc_samples: opts.mc_samples,
        passed,
        checks,
    }
}
