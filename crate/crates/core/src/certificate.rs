//! The non-existence certificate.
//!
//! For a solution `u` of `div u = f`, the cross-sectional integral of `u_1`
//! at abscissa `x` equals the cumulative flux `A(x) = int_cut^x G`, where
//! `G(x)` is the integral of `f` over the cross-section. Hölder's inequality
//! on each cross-section then gives
//!
//! ```text
//! ||grad u||_p^p >= LB(eps) = K^{-p} int_eps^{x_max} (|A(x)| / w(x))^p dx
//! ```
//!
//! with the exact constant `K` and weight `w` from [`crate::analytic`].
//! `LB(eps) -> inf` as `eps -> 0` certifies that no solution exists.
//!
//! Log-cusp quantities are computed in `T = -ln x`. With `b = 2 - 2/p` and
//! `c = -1/p - r - alpha`,
//! `A(x) = 2 coef e^{-bT} T^c Psi(T)`, `Psi(T) = int_0^U e^{-bu} (1 + u/T)^c du`,
//! `U = T_cut - T` (infinite without a cut), and the certificate integrand
//! becomes `K^{-p} (2|coef|)^p T^{pc + r(2p-1)} Psi(T)^p dT`.

use alloc::format;
use alloc::vec::Vec;

use crate::analytic::{self, Divergence, Family, FamilyParams};
use crate::error::{Error, Result};
use crate::fit::{fit_line, LineFit};
use crate::geometry::DomainSpec;
use crate::quad::{self, QuadConfig};
use crate::rhs::{power_integral, RhsSpec};

/// `|sigma|` below this counts as the logarithmic endpoint in the polynomial tail probe.
const POLY_PROBE_TOL: f64 = 1e-9;
/// Same for the log-cusp probe, whose slope carries an `O(1/T)` bias.
const LOG_PROBE_TOL: f64 = 1e-6;
const LOG_PROBE_T: f64 = 1e8;
/// Relative change over the last two grid points that counts as converged.
pub const FLAT_CHANGE: f64 = 1e-3;

fn check_cusp_x(d: &DomainSpec, x: f64) -> Result<()> {
    let hi = d.x_max();
    if !(x > 0.0 && x < hi) {
        return Err(Error::OutOfRange { x, lo: 0.0, hi });
    }
    Ok(())
}

/// Section flux `G(x) = int f` over the cross-section at `x`.
#[derive(Debug, Clone, Copy)]
pub struct Flux {
    rhs: RhsSpec,
}

pub fn flux(rhs: &RhsSpec) -> Flux {
    Flux { rhs: *rhs }
}

impl Flux {
    /// Zero below a cut.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let d = self.rhs.domain();
        check_cusp_x(d, x)?;
        if x <= d.cut() {
            return Ok(0.0);
        }
        Ok(self.rhs.cusp_value(x) * d.section_measure_unchecked(x))
    }
}

/// Cumulative flux `A(x) = int_cut^x G`.
#[derive(Debug, Clone, Copy)]
pub struct CumulativeFlux {
    rhs: RhsSpec,
}

pub fn cumulative_flux(rhs: &RhsSpec) -> Result<CumulativeFlux> {
    let t1 = analytic::thresholds(rhs.domain().params()).t1;
    if !(rhs.alpha() > t1) {
        return Err(Error::NotAdmissible { alpha: rhs.alpha(), t1 });
    }
    Ok(CumulativeFlux { rhs: *rhs })
}

/// Exponents `(b, c)` of the log-cusp flux.
fn log_exponents(rhs: &RhsSpec) -> (f64, f64) {
    let params = rhs.domain().params();
    let Family::LogCusp2D { r } = params.family() else { unreachable!() };
    let p = params.p();
    (2.0 - 2.0 / p, -1.0 / p - r - rhs.alpha())
}

/// `T_cut - T`, or infinity without a cut.
fn log_span(d: &DomainSpec, t: f64) -> f64 {
    if d.cut() > 0.0 {
        -libm::log(d.cut()) - t
    } else {
        f64::INFINITY
    }
}

/// `Psi(T) = int_0^U e^{-bu} (1 + u/T)^c du`.
fn log_psi(b: f64, c: f64, t: f64, span: f64) -> Result<f64> {
    let g = move |u: f64| libm::exp(-b * u) * libm::pow(1.0 + u / t, c);
    let cfg = QuadConfig::with_rel_tol(1e-13);
    if span <= 0.0 {
        return Ok(0.0);
    }
    let v = if span.is_infinite() {
        quad::integrate_to_infinity(g, 0.0, &cfg)?
    } else {
        quad::integrate(g, 0.0, span, &cfg)?
    };
    Ok(v.value)
}

impl CumulativeFlux {
    pub fn eval(&self, x: f64) -> Result<f64> {
        let d = self.rhs.domain();
        check_cusp_x(d, x)?;
        if x <= d.cut() {
            return Ok(0.0);
        }
        match d.params().family() {
            Family::PolyCusp2D { m } | Family::PolyCuspND { m, .. } => {
                let a = self.rhs.alpha() + m * (d.dim() - 1) as f64;
                Ok(self.rhs.coef() * d.section_measure_unchecked(1.0) * power_integral(a, d.cut(), x))
            }
            Family::LogCusp2D { .. } => {
                let (b, c) = log_exponents(&self.rhs);
                let t = -libm::log(x);
                let psi = log_psi(b, c, t, log_span(d, t))?;
                Ok(2.0 * self.rhs.coef() * libm::exp(-b * t) * libm::pow(t, c) * psi)
            }
        }
    }

    /// `A(x) / (x^{2-2/p} (-ln x)^{-1/p-r-alpha})` for the log cusp, i.e.
    /// `2 coef Psi(T)`; avoids forming the underflowing factors.
    pub fn log_ratio(&self, x: f64) -> Result<f64> {
        let d = self.rhs.domain();
        if !d.params().is_log() {
            return Err(Error::invalid("log_ratio applies to the log cusp only"));
        }
        check_cusp_x(d, x)?;
        if x <= d.cut() {
            return Ok(0.0);
        }
        let (b, c) = log_exponents(&self.rhs);
        let t = -libm::log(x);
        Ok(2.0 * self.rhs.coef() * log_psi(b, c, t, log_span(d, t))?)
    }
}

/// Everything needed to integrate `K^{-p} (|A|/w)^p`.
#[derive(Debug, Clone, Copy)]
struct Integrand {
    rhs: RhsSpec,
    p: f64,
    /// `K^{-p}`
    k_neg_p: f64,
    kind: Kind,
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    /// Untruncated polynomial cusp: `scale * x^e`.
    PolyClosed { scale: f64, e: f64 },
    /// Truncated polynomial cusp, `|A| = cv int_cut^x s^a ds`.
    PolyCut { cv: f64, a: f64, s: f64 },
    /// Log cusp in `T`: `scale * T^e * Psi(T)^p`.
    Log { scale: f64, e: f64, b: f64, c: f64 },
}

impl Integrand {
    fn new(rhs: &RhsSpec, p: f64) -> Result<Self> {
        let d = rhs.domain();
        let params: FamilyParams = d.params().with_p(p)?;
        if params.is_log() && p != d.params().p() {
            return Err(Error::invalid(format!(
                "log-cusp certificates need p equal to the family exponent {} (got {p})",
                d.params().p()
            )));
        }
        let t1 = analytic::thresholds(&params).t1;
        if !(rhs.alpha() > t1) {
            return Err(Error::NotAdmissible { alpha: rhs.alpha(), t1 });
        }
        let k = analytic::section_norm_constant(&params)?;
        let k_neg_p = libm::pow(k, -p);
        let weight = analytic::hoelder_weight(&params);
        let kind = match params.family() {
            Family::PolyCusp2D { m } | Family::PolyCuspND { m, .. } => {
                let a = rhs.alpha() + m * (d.dim() - 1) as f64;
                let cv = (rhs.coef() * d.section_measure_unchecked(1.0)).abs();
                let s = weight.x_exponent();
                if d.cut() > 0.0 {
                    Kind::PolyCut { cv, a, s }
                } else {
                    Kind::PolyClosed {
                        scale: k_neg_p * libm::pow(cv / (a + 1.0), p),
                        e: analytic::integrand_exponent(&params, rhs.alpha()),
                    }
                }
            }
            Family::LogCusp2D { r } => {
                let (b, c) = log_exponents(rhs);
                Kind::Log {
                    scale: k_neg_p * libm::pow(2.0 * rhs.coef().abs(), p),
                    e: p * c + r * (2.0 * p - 1.0),
                    b,
                    c,
                }
            }
        };
        Ok(Integrand {
            rhs: *rhs,
            p,
            k_neg_p,
            kind,
        })
    }

    fn domain(&self) -> &DomainSpec {
        self.rhs.domain()
    }

    /// Integrand in `x`, zero at or below the cut.
    fn density(&self, x: f64) -> Result<f64> {
        let d = self.domain();
        if x <= d.cut() {
            return Ok(0.0);
        }
        Ok(match self.kind {
            Kind::PolyClosed { scale, e } => scale * libm::pow(x, e),
            Kind::PolyCut { cv, a, s } => {
                let flux = cv * power_integral(a, d.cut(), x);
                self.k_neg_p * libm::pow(flux / libm::pow(x, s), self.p)
            }
            Kind::Log { .. } => {
                let t = -libm::log(x);
                libm::exp(self.log_density_t(t)?) / x
            }
        })
    }

    /// `ln` of the integrand in `T` for the log cusp.
    fn log_density_t(&self, t: f64) -> Result<f64> {
        let Kind::Log { scale, e, b, c } = self.kind else {
            return Err(Error::invalid("not a log-cusp certificate"));
        };
        let psi = log_psi(b, c, t, log_span(self.domain(), t))?;
        if psi <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(libm::log(scale) + e * libm::log(t) + self.p * libm::log(psi))
    }

    /// `int_lo^hi` of the integrand in `x`, `0 < lo <= hi <= x_max`.
    fn segment(&self, lo: f64, hi: f64) -> Result<f64> {
        let d = *self.domain();
        let lo = lo.max(d.cut());
        if !(hi > lo) {
            return Ok(0.0);
        }
        let cfg = QuadConfig::default();
        match self.kind {
            Kind::PolyClosed { scale, e } => Ok(scale * power_integral(e, lo, hi)),
            Kind::PolyCut { .. } => {
                let v = quad::integrate_from(|x| self.density(x).unwrap_or(f64::NAN), lo, hi, &cfg)?;
                Ok(v.value)
            }
            Kind::Log { .. } => {
                let (t_lo, t_hi) = (-libm::log(hi), -libm::log(lo));
                let mut failure = None;
                let v = quad::integrate(
                    |t| match self.log_density_t(t) {
                        Ok(l) => libm::exp(l),
                        Err(e) => {
                            failure.get_or_insert(e);
                            f64::NAN
                        }
                    },
                    t_lo,
                    t_hi,
                    &cfg,
                );
                if let Some(e) = failure {
                    return Err(e);
                }
                Ok(v?.value)
            }
        }
    }

    fn verdict(&self, eps_min: f64, lb_min: f64) -> Result<Verdict> {
        let d = self.domain();
        if self.density(eps_min)? == 0.0 && lb_min == 0.0 && d.cut() == 0.0 {
            return Ok(Verdict::Converges { limit: 0.0 });
        }
        if d.cut() > 0.0 {
            // LB is bounded by its value at the cut.
            let tail = self.segment(d.cut(), eps_min)?;
            return Ok(Verdict::Converges { limit: lb_min + tail });
        }
        match self.kind {
            Kind::Log { .. } => {
                let (t1, t2) = (LOG_PROBE_T, 2.0 * LOG_PROBE_T);
                let slope = (self.log_density_t(t2)? - self.log_density_t(t1)?) / libm::log(t2 / t1);
                let growth = slope + 1.0;
                if growth.abs() <= LOG_PROBE_TOL {
                    Ok(Verdict::Diverges(Divergence::DoubleLogarithmic))
                } else if growth > 0.0 {
                    Ok(Verdict::Diverges(Divergence::LogPower { exponent: growth }))
                } else {
                    // Tail int_T^inf t^{slope} dt with T = -ln eps_min.
                    let t = -libm::log(eps_min);
                    let tail = libm::exp(self.log_density_t(t)?) * t / -growth;
                    Ok(Verdict::Converges { limit: lb_min + tail })
                }
            }
            _ => {
                let (x1, x2) = (eps_min, 0.5 * eps_min);
                let l1 = libm::log(x1 * self.density(x1)?);
                let l2 = libm::log(x2 * self.density(x2)?);
                let sigma = (l1 - l2) / libm::log(x1 / x2);
                if sigma.abs() <= POLY_PROBE_TOL {
                    Ok(Verdict::Diverges(Divergence::Logarithmic))
                } else if sigma < 0.0 {
                    Ok(Verdict::Diverges(Divergence::Power { beta: -sigma }))
                } else {
                    let tail = self.density(eps_min)? * eps_min / sigma;
                    Ok(Verdict::Converges { limit: lb_min + tail })
                }
            }
        }
    }
}

/// `LB(eps) = K^{-p} int_eps^{x_max} (|A|/w)^p dx`, a lower bound for
/// `||grad u||_p^p` over every solution on the (possibly truncated) domain.
pub fn lower_bound(rhs: &RhsSpec, p: f64, eps: f64) -> Result<f64> {
    let d = rhs.domain();
    let hi = d.x_max();
    if !(eps > 0.0 && eps <= hi) {
        return Err(Error::OutOfRange { x: eps, lo: 0.0, hi });
    }
    Integrand::new(rhs, p)?.segment(eps, hi)
}

/// Tail behaviour of `LB(eps)` as `eps -> 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    /// Never carries [`Divergence::Convergent`].
    Diverges(Divergence),
    Converges { limit: f64 },
}

impl Verdict {
    pub fn diverges(&self) -> bool {
        matches!(self, Verdict::Diverges(_))
    }
}

/// Best description of the sampled curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveModel {
    /// `LB ~ eps^{-exponent}`.
    Power { exponent: f64 },
    /// `LB ~ a + slope * ln(1/eps)`.
    Logarithmic { slope: f64 },
    /// Relative change over the last two points below [`FLAT_CHANGE`].
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub rate: f64,
    pub rms_residual: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateCurve {
    pub rhs: RhsSpec,
    pub p: f64,
    pub eps_grid: Vec<f64>,
    pub lb_values: Vec<f64>,
    pub verdict: Verdict,
    pub fitted_rate: Option<RateFit>,
    pub model: CurveModel,
    /// RMS residual (in `ln LB`) of the power model.
    pub power_residual: f64,
    /// RMS residual (in `ln LB`) of the logarithmic model.
    pub log_residual: f64,
    /// `(LB_last - LB_prev) / LB_last`.
    pub last_relative_change: f64,
}

/// Dyadic grid `2^{-from} ... 2^{-to}`.
pub fn dyadic_grid(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|k| libm::ldexp(1.0, -k)).collect()
}

pub fn default_eps_grid() -> Vec<f64> {
    dyadic_grid(4, 20)
}

pub fn certificate_curve(rhs: &RhsSpec, p: f64, eps_grid: &[f64]) -> Result<CertificateCurve> {
    let d = rhs.domain();
    let hi = d.x_max();
    if eps_grid.len() < 2 {
        return Err(Error::invalid("eps grid needs at least two points"));
    }
    if eps_grid.iter().any(|&e| !(e > 0.0 && e <= hi)) {
        return Err(Error::invalid(format!("eps grid must lie in (0, {hi}]")));
    }
    if eps_grid.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::invalid("eps grid must be strictly decreasing"));
    }
    let integrand = Integrand::new(rhs, p)?;
    let mut lb_values = Vec::with_capacity(eps_grid.len());
    let mut acc = 0.0;
    let mut upper = hi;
    for &eps in eps_grid {
        acc = match integrand.kind {
            Kind::PolyClosed { .. } => integrand.segment(eps, hi)?,
            _ => acc + integrand.segment(eps, upper)?,
        };
        lb_values.push(acc);
        upper = eps;
    }
    let eps_min = *eps_grid.last().unwrap();
    let verdict = integrand.verdict(eps_min, *lb_values.last().unwrap())?;
    let fitted_rate = fit_rate(eps_grid, &lb_values);
    let (model, power_residual, log_residual, last_relative_change) = select_model(eps_grid, &lb_values);
    Ok(CertificateCurve {
        rhs: *rhs,
        p,
        eps_grid: eps_grid.to_vec(),
        lb_values,
        verdict,
        fitted_rate,
        model,
        power_residual,
        log_residual,
        last_relative_change,
    })
}

/// Power rate from increments of `LB` on the smallest decade of the grid:
/// slope of `ln(LB_{k+1} - LB_k)` against `ln sqrt(eps_k eps_{k+1})`,
/// negated. Constant offsets in `LB` cancel in the increments.
pub fn fit_rate(eps: &[f64], lb: &[f64]) -> Option<RateFit> {
    let n = eps.len().min(lb.len());
    if n < 3 {
        return None;
    }
    let eps_min = eps[n - 1];
    let mut start = (0..n).find(|&i| eps[i] <= 10.0 * eps_min).unwrap_or(n - 1);
    start = start.min(n - 3);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in start..n - 1 {
        let inc = lb[k + 1] - lb[k];
        if !(inc > 0.0) {
            return None;
        }
        xs.push(0.5 * (libm::log(eps[k]) + libm::log(eps[k + 1])));
        ys.push(libm::log(inc));
    }
    let LineFit { slope, rms_residual, .. } = fit_line(&xs, &ys)?;
    Some(RateFit {
        rate: -slope,
        rms_residual,
        points: xs.len(),
    })
}

/// Chooses between the power, logarithmic and flat descriptions.
pub fn select_model(eps: &[f64], lb: &[f64]) -> (CurveModel, f64, f64, f64) {
    let n = eps.len().min(lb.len());
    let last_change = if n >= 2 && lb[n - 1] != 0.0 {
        (lb[n - 1] - lb[n - 2]) / lb[n - 1]
    } else {
        0.0
    };
    let pts: Vec<(f64, f64)> = eps[..n]
        .iter()
        .zip(&lb[..n])
        .filter(|(_, &v)| v > 0.0)
        .map(|(&e, &v)| (libm::log(1.0 / e), v))
        .collect();
    let ls: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ln_lb: Vec<f64> = pts.iter().map(|p| libm::log(p.1)).collect();
    let vals: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let power = fit_line(&ls, &ln_lb);
    let linear = fit_line(&ls, &vals);
    let power_res = power.map_or(f64::INFINITY, |f| f.rms_residual);
    let log_res = linear.map_or(f64::INFINITY, |f| {
        let ss: f64 = ls
            .iter()
            .zip(&ln_lb)
            .map(|(&l, &y)| {
                let m = f.intercept + f.slope * l;
                if m > 0.0 {
                    let r = y - libm::log(m);
                    r * r
                } else {
                    f64::INFINITY
                }
            })
            .sum();
        libm::sqrt(ss / ls.len() as f64)
    });
    let model = if last_change.abs() < FLAT_CHANGE {
        CurveModel::Flat
    } else if log_res < power_res {
        CurveModel::Logarithmic {
            slope: linear.map_or(f64::NAN, |f| f.slope),
        }
    } else {
        CurveModel::Power {
            exponent: power.map_or(f64::NAN, |f| f.slope),
        }
    };
    (model, power_res, log_res, last_change)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::hoelder_constant;
    use crate::rhs::make_rhs;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn poly(m: f64, p: f64, alpha: f64) -> RhsSpec {
        make_rhs(&DomainSpec::new(FamilyParams::poly2d(m, p).unwrap()), alpha).unwrap()
    }

    fn log(r: f64, p: f64, alpha: f64) -> RhsSpec {
        make_rhs(&DomainSpec::new(FamilyParams::log2d(r, p).unwrap()), alpha).unwrap()
    }

    /// Independent route for A: x-space quadrature of f times the section measure.
    fn a_by_quadrature(rhs: &RhsSpec, x: f64) -> f64 {
        let d = rhs.domain();
        let g = |s: f64| rhs.cusp_value(s) * d.section_measure_unchecked(s);
        let cfg = QuadConfig::with_rel_tol(1e-12);
        if d.cut() > 0.0 {
            quad::integrate(g, d.cut(), x, &cfg).unwrap().value
        } else {
            quad::integrate_from_zero(g, x, &cfg).unwrap().value
        }
    }

    /// Independent route for LB: nested x-space quadrature.
    fn lb_by_quadrature(rhs: &RhsSpec, p: f64, eps: f64) -> f64 {
        let d = rhs.domain();
        let params = d.params().with_p(p).unwrap();
        let k = analytic::section_norm_constant(&params).unwrap();
        let w = analytic::hoelder_weight(&params);
        quad::integrate_from(
            |x| libm::pow(a_by_quadrature(rhs, x).abs() / (k * w.eval_unchecked(x)), p),
            eps,
            d.x_max(),
            &QuadConfig::with_rel_tol(1e-9),
        )
        .unwrap()
        .value
    }

    #[test]
    fn flux_examples() {
        let f = poly(2.0, 2.0, -1.25);
        assert_relative_eq!(flux(&f).eval(0.5).unwrap(), 2.0 * libm::pow(0.5, 0.75), max_relative = 1e-15);
        assert_relative_eq!(flux(&f).eval(0.5).unwrap(), 1.189207, max_relative = 1e-6);
        let nd = make_rhs(&DomainSpec::new(FamilyParams::poly_nd(2.0, 3, 2.0).unwrap()), 0.0).unwrap();
        assert_relative_eq!(flux(&nd).eval(0.5).unwrap(), core::f64::consts::PI / 16.0, max_relative = 1e-14);
        let l = log(1.0, 2.0, 0.0);
        assert_relative_eq!(flux(&l).eval(libm::exp(-1.0)).unwrap(), 2.0, max_relative = 1e-14);
        assert!(flux(&f).eval(1.0).is_err());
    }

    #[test]
    fn cumulative_flux_examples() {
        let f = poly(2.0, 2.0, -1.25);
        let a = cumulative_flux(&f).unwrap();
        for x in [0.01, 0.3, 0.9] {
            assert_relative_eq!(a.eval(x).unwrap(), 8.0 / 7.0 * libm::pow(x, 1.75), max_relative = 1e-14);
        }
        assert!(a.eval(1e-300).unwrap() < 1e-300);
        let l = log(1.5, 2.0, 0.0);
        let al = cumulative_flux(&l).unwrap();
        for x in [0.3, 0.1, 1e-3, 1e-6] {
            assert_relative_eq!(al.eval(x).unwrap(), a_by_quadrature(&l, x), max_relative = 1e-9);
        }
        let bad = RhsSpec::build(f.domain(), -1.6, 1.0, true).unwrap();
        assert!(matches!(cumulative_flux(&bad), Err(Error::NotAdmissible { .. })));
    }

    #[test]
    fn cumulative_flux_truncated() {
        let f = poly(2.0, 2.0, -1.25).truncate(0.1).unwrap();
        let a = cumulative_flux(&f).unwrap();
        assert_eq!(a.eval(0.05).unwrap(), 0.0);
        for x in [0.2, 0.7] {
            assert_relative_eq!(a.eval(x).unwrap(), a_by_quadrature(&f, x), max_relative = 1e-11);
        }
        let l = log(1.0, 2.0, 0.2).truncate(0.01).unwrap();
        let al = cumulative_flux(&l).unwrap();
        for x in [0.02, 0.2] {
            assert_relative_eq!(al.eval(x).unwrap(), a_by_quadrature(&l, x), max_relative = 1e-10);
        }
    }

    #[test]
    fn lower_bound_closed_form() {
        let f = poly(2.0, 2.0, -1.25);
        let lb = lower_bound(&f, 2.0, 0.01).unwrap();
        assert_relative_eq!(lb, 16.0 / 49.0 * 999.0, max_relative = 1e-12);
        assert_relative_eq!(lb, 326.20, max_relative = 1e-4);
        assert_relative_eq!(lb, lb_by_quadrature(&f, 2.0, 0.01), max_relative = 1e-8);
        assert_eq!(lower_bound(&f, 2.0, 1.0).unwrap(), 0.0);
        assert!(lower_bound(&f, 2.0, 0.0).is_err());
        assert!(lower_bound(&f, 2.0, 1.5).is_err());
        // K_2^{-2} = 3/8
        assert_relative_eq!(libm::pow(hoelder_constant(2.0), -2.0), 0.375, max_relative = 1e-15);
    }

    #[test]
    fn lower_bound_matches_quadrature() {
        let cases = [
            (poly(3.0, 1.5, -1.5), 1.5, 0.05),
            (poly(2.0, 2.0, 0.0), 3.0, 0.01),
            (poly(2.0, 2.0, -1.25).truncate(0.02).unwrap(), 2.0, 0.04),
            (log(1.0, 2.0, 0.0), 2.0, 0.01),
            (log(1.5, 3.0, 0.1), 3.0, 1e-3),
            (log(1.0, 2.0, 0.0).truncate(0.005).unwrap(), 2.0, 0.01),
        ];
        for (f, p, eps) in cases {
            let got = lower_bound(&f, p, eps).unwrap();
            let want = lb_by_quadrature(&f, p, eps);
            assert_relative_eq!(got, want, max_relative = 1e-7);
        }
        let nd = make_rhs(&DomainSpec::new(FamilyParams::poly_nd(2.0, 3, 2.0).unwrap()), -2.0).unwrap();
        assert_relative_eq!(lower_bound(&nd, 2.0, 0.05).unwrap(), lb_by_quadrature(&nd, 2.0, 0.05), max_relative = 1e-7);
    }

    #[test]
    fn log_certificate_needs_family_p() {
        let l = log(1.0, 2.0, 0.0);
        assert!(lower_bound(&l, 3.0, 0.01).is_err());
    }

    #[test]
    fn curves() {
        let grid = default_eps_grid();
        let f = poly(2.0, 2.0, -1.25);
        let c = certificate_curve(&f, 2.0, &grid).unwrap();
        assert!((c.fitted_rate.unwrap().rate / 1.5 - 1.0).abs() < 0.03);
        assert!(matches!(c.verdict, Verdict::Diverges(Divergence::Power { .. })));
        assert!(matches!(c.model, CurveModel::Power { .. }));
        let end = certificate_curve(&poly(2.0, 2.0, -0.5), 2.0, &grid).unwrap();
        assert!(end.log_residual < end.power_residual);
        assert!(matches!(end.model, CurveModel::Logarithmic { .. }));
        assert_eq!(end.verdict, Verdict::Diverges(Divergence::Logarithmic));
        let conv = certificate_curve(&poly(2.0, 2.0, 0.0), 2.0, &grid).unwrap();
        assert!(conv.last_relative_change.abs() < 1e-3);
        assert_eq!(conv.model, CurveModel::Flat);
        let Verdict::Converges { limit } = conv.verdict else { panic!() };
        // LB(eps) = K^{-2} (2/3)^2 (1 - eps) for alpha = 0
        assert_relative_eq!(limit, 0.375 * 4.0 / 9.0, max_relative = 1e-9);
    }

    #[test]
    fn log_curves() {
        let grid = dyadic_grid(2, 20);
        let c = certificate_curve(&log(1.0, 2.0, 0.0), 2.0, &grid).unwrap();
        match c.verdict {
            Verdict::Diverges(Divergence::LogPower { exponent }) => assert!((exponent - 1.0).abs() < 1e-6),
            v => panic!("{v:?}"),
        }
        let th = analytic::thresholds(c.rhs.domain().params());
        let e = certificate_curve(&log(1.0, 2.0, th.t2), 2.0, &grid).unwrap();
        assert_eq!(e.verdict, Verdict::Diverges(Divergence::DoubleLogarithmic));
        let conv = certificate_curve(&log(1.0, 2.0, th.t2 + 0.3), 2.0, &grid).unwrap();
        assert!(!conv.verdict.diverges());
        for w in c.lb_values.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn synthetic_rate() {
        let eps = dyadic_grid(4, 20);
        let lb: Vec<f64> = eps.iter().map(|e| 5.0 * libm::pow(*e, -1.5)).collect();
        assert_relative_eq!(fit_rate(&eps, &lb).unwrap().rate, 1.5, max_relative = 1e-12);
    }

    #[test]
    fn grid_validation() {
        let f = poly(2.0, 2.0, -1.25);
        assert!(certificate_curve(&f, 2.0, &[0.1, 0.2]).is_err());
        assert!(certificate_curve(&f, 2.0, &[0.1]).is_err());
        assert!(certificate_curve(&f, 2.0, &[2.0, 0.1]).is_err());
    }

    #[test]
    fn nd_reduces_to_2d() {
        let a = make_rhs(&DomainSpec::new(FamilyParams::poly_nd(2.5, 2, 1.7).unwrap()), -1.0).unwrap();
        let b = poly(2.5, 1.7, -1.0);
        for eps in [0.3, 0.01, 1e-5] {
            let la = lower_bound(&a, 1.7, eps).unwrap();
            let lb = lower_bound(&b, 1.7, eps).unwrap();
            assert!((la - lb).abs() <= 1e-12 * lb.abs());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn monotone_and_linear(m in 1.2f64..4.0, p in 1.3f64..4.0, u in 0.01f64..2.0, c in 0.1f64..4.0) {
            let d = DomainSpec::new(FamilyParams::poly2d(m, p).unwrap());
            let alpha = analytic::thresholds(d.params()).t1 + u;
            let f = make_rhs(&d, alpha).unwrap();
            let g = RhsSpec::build(&d, alpha, -c, false).unwrap();
            let grid = dyadic_grid(3, 14);
            let cf = certificate_curve(&f, p, &grid).unwrap();
            let cg = certificate_curve(&g, p, &grid).unwrap();
            for w in cf.lb_values.windows(2) {
                prop_assert!(w[1] >= w[0]);
            }
            let s = libm::pow(c, p);
            for (a, b) in cf.lb_values.iter().zip(&cg.lb_values) {
                prop_assert!((b - s * a).abs() <= 1e-12 * b.abs());
            }
        }

        #[test]
        fn verdict_matches_classification(m in 1.2f64..4.0, p in 1.3f64..4.0, u in 0.01f64..3.0, dim in 2u32..5) {
            let d = DomainSpec::new(FamilyParams::poly_nd(m, dim, p).unwrap());
            let th = analytic::thresholds(d.params());
            let alpha = th.t1 + u;
            let f = make_rhs(&d, alpha).unwrap();
            let c = certificate_curve(&f, p, &dyadic_grid(4, 20)).unwrap();
            let certified = th.classify(alpha) == analytic::Classification::CertifiedNonexistence;
            prop_assert_eq!(c.verdict.diverges(), certified);
            if let Verdict::Diverges(Divergence::Power { beta }) = c.verdict {
                let Divergence::Power { beta: exact } = analytic::divergence_exponent(d.params(), alpha).unwrap() else {
                    panic!()
                };
                prop_assert!((beta / exact - 1.0).abs() < 1e-6);
                prop_assert!((c.fitted_rate.unwrap().rate / exact - 1.0).abs() < 0.03);
            }
        }

        #[test]
        fn log_scaling(c in 0.1f64..4.0) {
            let f = log(1.0, 2.0, 0.2);
            let g = RhsSpec::build(f.domain(), 0.2, c, false).unwrap();
            let a = lower_bound(&f, 2.0, 0.01).unwrap();
            let b = lower_bound(&g, 2.0, 0.01).unwrap();
            prop_assert!((b - c * c * a).abs() <= 1e-10 * b);
        }
    }
}
