//! Numerical checks of the identities behind the certificate, on closed-form
//! synthetic fields rather than solver output.

use alloc::vec::Vec;

use crate::analytic::{self, FamilyParams};
use crate::certificate::cumulative_flux;
use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, MeasureRegion};
use crate::quad::{self, QuadConfig};
use crate::rhs::RhsSpec;
use crate::special;

/// `u_1 = scale (w(x)^2 - y^2)^2 ((x - lo)(hi - x))^3` for `lo < x < hi`,
/// zero elsewhere, on a 2D cusp domain. It vanishes on the cusp walls and
/// outside `(lo, hi)`.
#[derive(Debug, Clone, Copy)]
pub struct SyntheticField {
    domain: DomainSpec,
    lo: f64,
    hi: f64,
    scale: f64,
}

impl SyntheticField {
    pub fn bump(domain: &DomainSpec, lo: f64, hi: f64, scale: f64) -> Result<Self> {
        if domain.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: domain.dim(),
            });
        }
        if !(lo > 0.0 && lo < hi && hi < domain.x_max()) {
            return Err(Error::invalid("bump support must satisfy 0 < lo < hi < x_max"));
        }
        if !scale.is_finite() {
            return Err(Error::invalid("bump scale must be finite"));
        }
        Ok(SyntheticField {
            domain: *domain,
            lo,
            hi,
            scale,
        })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn in_support(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    /// `(phi, phi')` of the envelope `((x - lo)(hi - x))^3`.
    fn envelope(&self, x: f64) -> (f64, f64) {
        let s = (x - self.lo) * (self.hi - x);
        (s * s * s, 3.0 * s * s * (self.hi + self.lo - 2.0 * x))
    }

    pub fn width(&self, x: f64) -> f64 {
        self.domain.profile(x)
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        if !self.in_support(x) {
            return 0.0;
        }
        let w = self.width(x);
        let q = w * w - y * y;
        self.scale * q * q * self.envelope(x).0
    }

    pub fn dx(&self, x: f64, y: f64) -> f64 {
        if !self.in_support(x) {
            return 0.0;
        }
        let w = self.width(x);
        let dw = self.domain.profile_derivative(x);
        let q = w * w - y * y;
        let (phi, dphi) = self.envelope(x);
        self.scale * (4.0 * q * w * dw * phi + q * q * dphi)
    }

    pub fn dy(&self, x: f64, y: f64) -> f64 {
        if !self.in_support(x) {
            return 0.0;
        }
        let w = self.width(x);
        let q = w * w - y * y;
        self.scale * -4.0 * y * q * self.envelope(x).0
    }

    /// `max |u_1|`, attained on `y = 0`; sampled on a fine grid.
    pub fn max_abs(&self) -> f64 {
        (1..2000)
            .map(|k| {
                let x = self.lo + (self.hi - self.lo) * k as f64 / 2000.0;
                self.value(x, 0.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `int u_1 dy` over the cross-section at `x`.
    pub fn section_integral(&self, x: f64, cfg: &QuadConfig) -> Result<f64> {
        if !self.in_support(x) {
            return Ok(0.0);
        }
        let w = self.width(x);
        Ok(quad::integrate(|y| self.value(x, y), -w, w, cfg)?.value)
    }
}

/// Largest difference between an extrapolated central difference of
/// `x -> int u_1 dy` and `int d_x u_1 dy`, over `x_samples`.
pub fn check_weak_derivative(field: &SyntheticField, x_samples: &[f64]) -> Result<f64> {
    check_weak_derivative_with(field, x_samples, 1e-12)
}

/// As [`check_weak_derivative`] with an explicit quadrature tolerance.
pub fn check_weak_derivative_with(field: &SyntheticField, x_samples: &[f64], rel_tol: f64) -> Result<f64> {
    let cfg = QuadConfig::with_rel_tol(rel_tol);
    let xm = field.domain.x_max();
    let mut worst = 0.0f64;
    for &x in x_samples {
        if !(x > 0.0 && x < xm) {
            return Err(Error::OutOfRange { x, lo: 0.0, hi: xm });
        }
        // Stay inside one smooth piece of the section integral.
        let gap = [x, xm - x, (x - field.lo).abs(), (x - field.hi).abs()]
            .into_iter()
            .filter(|g| *g > 0.0)
            .fold(f64::INFINITY, f64::min);
        let h0 = (0.25 * gap).min(0.05);
        let fd = richardson(|h| {
            let a = field.section_integral(x + h, &cfg)?;
            let b = field.section_integral(x - h, &cfg)?;
            Ok((a - b) / (2.0 * h))
        }, h0)?;
        let w = field.width(x);
        let exact = if field.in_support(x) {
            quad::integrate(|y| field.dx(x, y), -w, w, &cfg)?.value
        } else {
            0.0
        };
        worst = worst.max((fd - exact).abs());
    }
    Ok(worst)
}

/// Richardson extrapolation of a central difference `d(h)` over `h0, h0/2, h0/4, h0/8`.
fn richardson<D: FnMut(f64) -> Result<f64>>(mut d: D, h0: f64) -> Result<f64> {
    const LEVELS: usize = 4;
    let mut table = [[0.0f64; LEVELS]; LEVELS];
    let mut h = h0;
    for i in 0..LEVELS {
        table[i][0] = d(h)?;
        let mut factor = 4.0;
        for j in 1..=i {
            table[i][j] = table[i][j - 1] + (table[i][j - 1] - table[i - 1][j - 1]) / (factor - 1.0);
            factor *= 4.0;
        }
        h *= 0.5;
    }
    Ok(table[LEVELS - 1][LEVELS - 1])
}

/// `|int u_1 dy| < 1e-10 (1 + max|u_1|)` along `x_k = lo 2^{-k} -> 0`.
pub fn check_limit_zero(field: &SyntheticField) -> Result<bool> {
    let tol = 1e-10 * (1.0 + field.max_abs());
    let cfg = QuadConfig::with_rel_tol(1e-12);
    for k in 1..=60 {
        let x = libm::ldexp(field.lo, -k);
        if field.section_integral(x, &cfg)?.abs() >= tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Largest relative error between `||w(x) - .||_{p/(p-1)}` on `(-w, w)`,
/// `w = x^m`, and `k x^{m(2p-1)/p}`. Passing `k` other than
/// [`analytic::hoelder_constant`] is the fault-injection hook.
pub fn check_hoelder_identity_with_constant(m: f64, p: f64, x_samples: &[f64], k: f64) -> Result<f64> {
    let params = FamilyParams::poly2d(m, p)?;
    let weight = analytic::hoelder_weight(&params);
    let q = p / (p - 1.0);
    let cfg = QuadConfig::with_rel_tol(1e-13);
    let mut worst = 0.0f64;
    for &x in x_samples {
        if !(x > 0.0 && x <= 1.0) {
            return Err(Error::OutOfRange { x, lo: 0.0, hi: 1.0 });
        }
        let w = libm::pow(x, m);
        let norm = libm::pow(quad::integrate(|t| libm::pow(w - t, q), -w, w, &cfg)?.value, 1.0 / q);
        let predicted = k * libm::pow(x, weight.x_exponent());
        worst = worst.max((norm / predicted - 1.0).abs());
    }
    Ok(worst)
}

pub fn check_hoelder_identity(m: f64, p: f64, x_samples: &[f64]) -> Result<f64> {
    check_hoelder_identity_with_constant(m, p, x_samples, analytic::hoelder_constant(p))
}

/// Probe abscissae for the log-cusp asymptotic ratio.
pub const ASYMPTOTIC_PROBES: [f64; 3] = [1e-4, 1e-6, 1e-8];

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticReport {
    pub limit: f64,
    /// `(x, ratio)` at each probe.
    pub ratios: Vec<(f64, f64)>,
    /// `|ratio - limit|` decreases along the probes.
    pub monotone: bool,
}

impl AsymptoticReport {
    pub fn final_relative_error(&self) -> f64 {
        let r = self.ratios.last().map_or(f64::NAN, |v| v.1);
        (r / self.limit - 1.0).abs()
    }
}

/// `int_0^x s^{-2/p} (-ln s)^{-1/p-r-alpha} ds / (x^{2-2/p} (-ln x)^{-1/p-r-alpha})`
/// on the log cusp, which tends to `p/(2(p-1))`. The integral is half of
/// the cumulative flux (the section measure is twice the half-width).
pub fn check_asymptotic_limit(p: f64, r: f64, alpha: f64) -> Result<AsymptoticReport> {
    check_asymptotic_limit_scaled(p, r, alpha, 1.0)
}

/// As [`check_asymptotic_limit`] with the integrand multiplied by `coef`.
pub fn check_asymptotic_limit_scaled(p: f64, r: f64, alpha: f64, coef: f64) -> Result<AsymptoticReport> {
    let domain = DomainSpec::new(FamilyParams::log2d(r, p)?);
    let rhs = RhsSpec::build(&domain, alpha, coef, false)?;
    let a = cumulative_flux(&rhs)?;
    let ratios = ASYMPTOTIC_PROBES
        .iter()
        .map(|&x| Ok((x, 0.5 * a.log_ratio(x)?)))
        .collect::<Result<Vec<_>>>()?;
    let limit = p / (2.0 * (p - 1.0));
    let monotone = ratios
        .windows(2)
        .all(|w| (w[1].1 - coef * limit).abs() < (w[0].1 - coef * limit).abs());
    Ok(AsymptoticReport { limit, ratios, monotone })
}

/// Worst `|z|` of hit-or-miss cross-section measures of `|x'| < x_1^m` in
/// `R^dim` against `V_{dim-1} x^{m(dim-1)}`; sample `i` uses substream `i`.
pub fn check_measure_induction(m: f64, dim: u32, x_samples: &[f64], n_mc: u64, seed: u64) -> Result<f64> {
    if !(2..=4).contains(&dim) {
        return Err(Error::invalid("measure induction is checked for dimensions 2, 3 and 4"));
    }
    let domain = DomainSpec::new(FamilyParams::poly_nd(m, dim, 2.0)?);
    let mut worst = 0.0f64;
    for (i, &x) in x_samples.iter().enumerate() {
        if !(x > 0.0 && x < 1.0) {
            return Err(Error::OutOfRange { x, lo: 0.0, hi: 1.0 });
        }
        let exact = special::unit_ball_volume(dim - 1) * libm::pow(x, m * (dim - 1) as f64);
        let est = domain.mc_measure_stream(&MeasureRegion::CrossSection { x }, n_mc, seed, i as u64)?;
        worst = worst.max(est.z_score(exact).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityReport {
    /// `K^{-p} int (|int u_1 dy| / w)^p dx`
    pub lower: f64,
    /// `int int |d_y u_1|^p`
    pub upper: f64,
}

impl InequalityReport {
    pub fn margin(&self) -> f64 {
        self.upper - self.lower
    }
}

/// The cross-sectional Hölder bound at function level: for a field
/// vanishing on the walls, `K^{-p} int (|int u_1 dy| / w)^p <= ||d_y u_1||_p^p`.
pub fn check_functional_inequality(field: &SyntheticField, p: f64) -> Result<InequalityReport> {
    let params = field.domain.params().with_p(p)?;
    let weight = analytic::hoelder_weight(&params);
    let k_neg_p = libm::pow(analytic::hoelder_constant(p), -p);
    let inner = QuadConfig::with_rel_tol(1e-12);
    let outer = QuadConfig::with_rel_tol(1e-10);
    let (lo, hi) = field.support();
    let mut failure = None;
    let mut record = |e: Error| {
        failure.get_or_insert(e);
        f64::NAN
    };
    let lower = quad::integrate(
        |x| match field.section_integral(x, &inner) {
            Ok(a) => k_neg_p * libm::pow(a.abs() / weight.eval_unchecked(x), p),
            Err(e) => record(e),
        },
        lo,
        hi,
        &outer,
    );
    let mut failure2 = None;
    let upper = quad::integrate(
        |x| {
            let w = field.width(x);
            match quad::integrate(|y| libm::pow(field.dy(x, y).abs(), p), -w, w, &inner) {
                Ok(v) => v.value,
                Err(e) => {
                    failure2.get_or_insert(e);
                    f64::NAN
                }
            }
        },
        lo,
        hi,
        &outer,
    );
    if let Some(e) = failure.or(failure2) {
        return Err(e);
    }
    Ok(InequalityReport {
        lower: lower?.value,
        upper: upper?.value,
    })
}
