//! Zero-mean right-hand sides.
//!
//! On the cusp part `f = c x^alpha` (polynomial cusps) or
//! `f = c x^{-2/p} (-ln x)^{-1/p - alpha}` (log cusp, `p` the family
//! exponent); on the cap `f` is the constant that makes `int f = 0` over the
//! (possibly truncated) domain. `c` defaults to 1.
//!
//! Log-cusp integrals are evaluated in `t = -ln x`, where
//! `x^{-2q/p} (-ln x)^{d} * 2 x (-ln x)^{-r} dx = 2 e^{-(2 - 2q/p) t} t^{d - r} dt`.

use alloc::format;

use crate::analytic::{thresholds, Family};
use crate::error::{Error, Result};
use crate::geometry::DomainSpec;
use crate::quad::{self, Estimate, QuadConfig};

/// Partial-sum level above which the dyadic check accepts divergence.
pub const DIVERGENCE_BOUND: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhsSpec {
    domain: DomainSpec,
    alpha: f64,
    coef: f64,
    cap_constant: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LpNorm {
    Finite(f64),
    DivergesAtCusp,
}

impl LpNorm {
    pub fn value(&self) -> Option<f64> {
        match self {
            LpNorm::Finite(v) => Some(*v),
            LpNorm::DivergesAtCusp => None,
        }
    }
}

/// Builds `f` for `alpha > t1`.
pub fn make_rhs(domain: &DomainSpec, alpha: f64) -> Result<RhsSpec> {
    RhsSpec::build(domain, alpha, 1.0, false)
}

impl RhsSpec {
    /// General constructor: `coef` scales the cusp part, and
    /// `allow_inadmissible` permits `alpha <= t1` as long as `f` stays
    /// integrable (needed to exercise the `NotInLp` side).
    pub fn build(domain: &DomainSpec, alpha: f64, coef: f64, allow_inadmissible: bool) -> Result<Self> {
        if !alpha.is_finite() || !coef.is_finite() {
            return Err(Error::invalid("alpha and the cusp coefficient must be finite"));
        }
        let t1 = thresholds(domain.params()).t1;
        if !(alpha > t1) && !allow_inadmissible {
            return Err(Error::NotAdmissible { alpha, t1 });
        }
        let mut spec = RhsSpec {
            domain: *domain,
            alpha,
            coef,
            cap_constant: 0.0,
        };
        let cusp = spec.cusp_integral()?;
        spec.cap_constant = -cusp / domain.cap_volume();
        Ok(spec)
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn coef(&self) -> f64 {
        self.coef
    }

    pub fn cap_constant(&self) -> f64 {
        self.cap_constant
    }

    /// Same family member on `Omega ∩ {x > eps}`, re-balanced to zero mean there.
    pub fn truncate(&self, eps: f64) -> Result<Self> {
        RhsSpec::build(&self.domain.truncate(eps)?, self.alpha, self.coef, true)
    }

    /// `f` on the cusp part at abscissa `x in (0, x_max)`, ignoring any cut.
    pub fn cusp_value(&self, x: f64) -> f64 {
        match self.domain.params().family() {
            Family::LogCusp2D { .. } => {
                let p = self.domain.params().p();
                self.coef * libm::pow(x, -2.0 / p) * libm::pow(-libm::log(x), self.log_delta())
            }
            _ => self.coef * libm::pow(x, self.alpha),
        }
    }

    /// Exponent of `-ln x` in the log-cusp right-hand side.
    pub fn log_delta(&self) -> f64 {
        -1.0 / self.domain.params().p() - self.alpha
    }

    pub fn evaluate(&self, pt: &[f64]) -> Result<f64> {
        if !self.domain.contains(pt)? {
            return Err(Error::invalid(format!("point {pt:?} is outside the domain")));
        }
        let x = pt[0];
        Ok(if x < self.domain.x_max() {
            self.cusp_value(x)
        } else {
            self.cap_constant
        })
    }

    /// `int |f|^q` over the cusp part `cut < x < x_max`, `None` if it diverges
    /// (only possible without a cut).
    fn cusp_power_integral(&self, q: f64) -> Result<Option<f64>> {
        let d = &self.domain;
        let lo = d.cut();
        let xm = d.x_max();
        let scale = libm::pow(self.coef.abs(), q);
        if scale == 0.0 {
            return Ok(Some(0.0));
        }
        match d.params().family() {
            Family::PolyCusp2D { m } | Family::PolyCuspND { m, .. } => {
                let k = q * self.alpha + m * (d.dim() - 1) as f64 + 1.0;
                let factor = scale * d.section_measure_unchecked(1.0);
                if lo == 0.0 {
                    if k <= 0.0 {
                        return Ok(None);
                    }
                    return Ok(Some(factor * libm::pow(xm, k) / k));
                }
                Ok(Some(factor * power_integral(k - 1.0, lo, xm)))
            }
            Family::LogCusp2D { r } => {
                let p = d.params().p();
                let rate = 2.0 - 2.0 * q / p;
                let power = q * self.log_delta() - r;
                if lo == 0.0 && (rate < 0.0 || (rate == 0.0 && power >= -1.0)) {
                    return Ok(None);
                }
                let g = move |t: f64| 2.0 * libm::exp(-rate * t) * libm::pow(t, power);
                let t0 = core::f64::consts::LN_2;
                let cfg = QuadConfig::with_rel_tol(1e-12);
                let est = if lo == 0.0 {
                    integrate_tail(g, t0, rate, &cfg)?
                } else {
                    quad::integrate(g, t0, -libm::log(lo), &cfg)?
                };
                Ok(Some(scale * est.value))
            }
        }
    }

    /// Signed integral of `f` over the cusp part.
    pub fn cusp_integral(&self) -> Result<f64> {
        let d = &self.domain;
        let lo = d.cut();
        let xm = d.x_max();
        match d.params().family() {
            Family::PolyCusp2D { m } | Family::PolyCuspND { m, .. } => {
                let a = self.alpha + m * (d.dim() - 1) as f64;
                if lo == 0.0 && a + 1.0 <= 0.0 {
                    return Err(Error::DivergentIntegral(format!(
                        "f is not integrable at the cusp tip (alpha = {})",
                        self.alpha
                    )));
                }
                Ok(self.coef * d.section_measure_unchecked(1.0) * power_integral(a, lo, xm))
            }
            Family::LogCusp2D { .. } => Ok(self.coef.signum() * self.cusp_power_integral(1.0)?.unwrap_or(f64::NAN)),
        }
    }

    /// `||f||_q` over the domain, or `DivergesAtCusp`. The divergence
    /// verdict comes from the exponents and is confirmed by dyadic
    /// quadrature; disagreement is reported as [`Error::FormulaDrift`].
    pub fn lp_norm(&self, q: f64) -> Result<LpNorm> {
        if !(q >= 1.0) || !q.is_finite() {
            return Err(Error::invalid("norm exponent must be finite and at least 1"));
        }
        match self.cusp_power_integral(q)? {
            Some(cusp) => {
                let cap = libm::pow(self.cap_constant.abs(), q) * self.domain.cap_volume();
                Ok(LpNorm::Finite(libm::pow(cusp + cap, 1.0 / q)))
            }
            None => {
                if self.confirm_divergence(q)? {
                    Ok(LpNorm::DivergesAtCusp)
                } else {
                    Err(Error::FormulaDrift(format!(
                        "exponents say int |f|^{q} diverges at the tip but dyadic partial sums stay bounded (alpha = {})",
                        self.alpha
                    )))
                }
            }
        }
    }

    /// Sums `int |f|^q` over dyadic pieces toward the tip (in `x` for
    /// polynomial cusps, in `t = -ln x` for the log cusp) and accepts
    /// divergence if the partial sum passes [`DIVERGENCE_BOUND`] or the
    /// pieces stop decreasing.
    fn confirm_divergence(&self, q: f64) -> Result<bool> {
        let d = self.domain;
        let scale = libm::pow(self.coef.abs(), q);
        let cfg = QuadConfig::with_rel_tol(1e-10);
        let is_log = d.params().is_log();
        let p = d.params().p();
        let delta = self.log_delta();
        let piece = |k: i32| -> Result<f64> {
            if is_log {
                let Family::LogCusp2D { r } = d.params().family() else { unreachable!() };
                let rate = 2.0 - 2.0 * q / p;
                let power = q * delta - r;
                let lo = libm::ldexp(1.0, k);
                // Factor out e^{-rate lo} to keep pieces finite for exponential growth.
                let est = quad::integrate(
                    |t| 2.0 * libm::exp(-rate * (t - lo)) * libm::pow(t, power),
                    lo,
                    2.0 * lo,
                    &cfg,
                )?;
                Ok(scale * est.value * libm::exp(-rate * lo))
            } else {
                let hi = libm::ldexp(d.x_max(), -k);
                let est = quad::integrate(
                    |x| libm::pow(self.cusp_value(x).abs(), q) * d.section_measure_unchecked(x),
                    0.5 * hi,
                    hi,
                    &cfg,
                )?;
                Ok(est.value)
            }
        };
        let n = 64;
        let mut sum = 0.0;
        let mut tail_monotone = true;
        let mut prev = f64::NAN;
        for k in 0..n {
            let v = piece(k)?;
            sum += v;
            if !v.is_finite() || sum > DIVERGENCE_BOUND {
                return Ok(true);
            }
            if k >= n - 16 && !(v > 0.0 && v >= prev * (1.0 - 1e-9)) {
                tail_monotone = false;
            }
            prev = v;
        }
        Ok(tail_monotone)
    }
}

/// `int_lo^hi x^a dx` for `0 <= lo < hi`, valid whenever the integral converges.
pub(crate) fn power_integral(a: f64, lo: f64, hi: f64) -> f64 {
    let k = a + 1.0;
    if lo == 0.0 {
        return libm::pow(hi, k) / k;
    }
    if k == 0.0 {
        return libm::log(hi / lo);
    }
    // (hi^k - lo^k) / k, accurate when k is tiny.
    let l_hi = libm::log(hi);
    let l_lo = libm::log(lo);
    libm::exp(k * l_hi) * -libm::expm1(k * (l_lo - l_hi)) / k
}

/// `int_t0^inf g` for `g ~ e^{-rate t} t^power`, convergent by assumption.
fn integrate_tail<G: FnMut(f64) -> f64>(g: G, t0: f64, rate: f64, cfg: &QuadConfig) -> Result<Estimate> {
    if rate > 0.0 {
        return quad::integrate_to_infinity(g, t0, cfg);
    }
    // Pure power tail: map t = t0 / s onto (0, 1], where the integrand is
    // s^{-power-2} up to a smooth factor and integrable at 0.
    let mut g = g;
    quad::integrate_from_zero(|s| g(t0 / s) * t0 / (s * s), 1.0, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::FamilyParams;
    use approx::assert_relative_eq;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    fn poly(m: f64, p: f64) -> DomainSpec {
        DomainSpec::new(FamilyParams::poly2d(m, p).unwrap())
    }

    fn log(r: f64, p: f64) -> DomainSpec {
        DomainSpec::new(FamilyParams::log2d(r, p).unwrap())
    }

    /// Independent route: x-space quadrature of f over the cusp plus the cap.
    fn total_integral(f: &RhsSpec) -> (f64, f64) {
        let d = f.domain();
        let cfg = QuadConfig::with_rel_tol(1e-12);
        let g = |x: f64| f.cusp_value(x) * d.section_measure_unchecked(x);
        let cusp = if d.cut() > 0.0 {
            quad::integrate(g, d.cut(), d.x_max(), &cfg).unwrap().value
        } else {
            quad::integrate_from_zero(g, d.x_max(), &cfg).unwrap().value
        };
        let cusp_abs = cusp.abs();
        let cap = f.cap_constant() * d.cap_volume();
        (cusp + cap, cusp_abs + cap.abs())
    }

    #[test]
    fn cap_constants() {
        let f = make_rhs(&poly(2.0, 2.0), 0.0).unwrap();
        assert_relative_eq!(f.cusp_integral().unwrap(), 2.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(f.cap_constant(), -4.0 / (3.0 * PI), max_relative = 1e-14);
        let f = make_rhs(&poly(2.0, 2.0), -1.25).unwrap();
        assert_relative_eq!(f.cusp_integral().unwrap(), 8.0 / 7.0, max_relative = 1e-15);
        assert_relative_eq!(f.cap_constant(), -16.0 / (7.0 * PI), max_relative = 1e-14);
        assert!(matches!(
            make_rhs(&poly(2.0, 2.0), -1.5),
            Err(Error::NotAdmissible { .. })
        ));
    }

    #[test]
    fn evaluation() {
        let f = make_rhs(&poly(2.0, 2.0), -1.25).unwrap();
        assert_relative_eq!(f.evaluate(&[0.25, 0.0]).unwrap(), libm::pow(4.0, 1.25), max_relative = 1e-15);
        let e = libm::exp(-1.0);
        let g = make_rhs(&log(1.0, 2.0), 0.0).unwrap();
        assert_relative_eq!(g.evaluate(&[e, 0.0]).unwrap(), core::f64::consts::E, max_relative = 1e-14);
        let h = make_rhs(&poly(2.0, 2.0), 0.0).unwrap();
        assert_relative_eq!(h.evaluate(&[1.5, 0.0]).unwrap(), -4.0 / (3.0 * PI), max_relative = 1e-14);
        assert!(h.evaluate(&[0.5, 0.3]).is_err());
    }

    #[test]
    fn norms() {
        let f = make_rhs(&poly(2.0, 2.0), -1.25).unwrap();
        let n = f.lp_norm(2.0).unwrap().value().unwrap();
        assert_relative_eq!(n * n, 4.0 + 128.0 / (49.0 * PI), max_relative = 1e-13);
        assert_relative_eq!(n, 2.19808, max_relative = 1e-5);
        let bad = RhsSpec::build(&poly(2.0, 2.0), -1.6, 1.0, true).unwrap();
        assert_eq!(bad.lp_norm(2.0).unwrap(), LpNorm::DivergesAtCusp);
        let zero = RhsSpec::build(&poly(2.0, 2.0), 0.0, 0.0, false).unwrap();
        assert_eq!(zero.lp_norm(2.0).unwrap(), LpNorm::Finite(0.0));
        assert_eq!(zero.cap_constant(), 0.0);
    }

    #[test]
    fn norm_matches_quadrature() {
        for (d, alpha) in [(poly(2.0, 2.0), -1.25), (poly(3.0, 1.5), -1.0), (log(1.0, 2.0), 0.0), (log(1.5, 3.0), -0.2)] {
            let f = make_rhs(&d, alpha).unwrap();
            for q in [1.0, 1.5, d.params().p()] {
                let Some(n) = f.lp_norm(q).unwrap().value() else { continue };
                let cfg = QuadConfig::with_rel_tol(1e-11);
                let density = |x: f64| libm::pow(f.cusp_value(x).abs(), q) * d.section_measure_unchecked(x);
                // log-cusp tails decay like powers of -ln x, so integrate in
                // s = 1 / (-ln x) on (0, 1 / ln 2] instead
                let cusp = if d.params().is_log() {
                    quad::integrate_from_zero(
                        |s| {
                            let x = libm::exp(-1.0 / s);
                            density(x) * x / (s * s)
                        },
                        1.0 / core::f64::consts::LN_2,
                        &cfg,
                    )
                } else {
                    quad::integrate_from_zero(density, d.x_max(), &cfg)
                }
                .unwrap()
                .value;
                let expect = libm::pow(cusp + libm::pow(f.cap_constant().abs(), q) * d.cap_volume(), 1.0 / q);
                assert_relative_eq!(n, expect, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn log_norm_divergence_detected() {
        // p = 2, r = 1: t1 = -0.5
        let d = log(1.0, 2.0);
        let bad = RhsSpec::build(&d, -0.55, 1.0, true).unwrap();
        assert_eq!(bad.lp_norm(2.0).unwrap(), LpNorm::DivergesAtCusp);
        let edge = RhsSpec::build(&d, -0.5, 1.0, true).unwrap();
        assert_eq!(edge.lp_norm(2.0).unwrap(), LpNorm::DivergesAtCusp);
        // q > p grows exponentially in t
        let ok = make_rhs(&d, 0.0).unwrap();
        assert_eq!(ok.lp_norm(3.0).unwrap(), LpNorm::DivergesAtCusp);
        assert!(ok.lp_norm(2.0).unwrap().value().is_some());
    }

    #[test]
    fn poly_endpoint_divergence_detected() {
        // q alpha + m + 1 = 0 exactly: logarithmic growth
        let bad = RhsSpec::build(&poly(2.0, 2.0), -1.5, 1.0, true).unwrap();
        assert_eq!(bad.lp_norm(2.0).unwrap(), LpNorm::DivergesAtCusp);
    }

    #[test]
    fn truncated_rhs_rebalances() {
        let f = make_rhs(&poly(2.0, 2.0), -1.25).unwrap();
        let t = f.truncate(0.1).unwrap();
        let (total, l1) = total_integral(&t);
        assert!(total.abs() < 1e-10 * l1);
        assert!(t.cap_constant() > f.cap_constant());
        let g = make_rhs(&log(1.5, 2.0), 0.5).unwrap().truncate(0.01).unwrap();
        let (total, l1) = total_integral(&g);
        assert!(total.abs() < 1e-10 * l1);
    }

    #[test]
    fn power_integral_near_log() {
        assert_relative_eq!(power_integral(-1.0, 0.5, 1.0), core::f64::consts::LN_2, max_relative = 1e-15);
        assert_relative_eq!(power_integral(-1.0 + 1e-14, 0.5, 1.0), core::f64::consts::LN_2, max_relative = 1e-12);
        assert_relative_eq!(power_integral(2.0, 1.0, 2.0), 7.0 / 3.0, max_relative = 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn zero_mean(m in 1.1f64..4.0, p in 1.2f64..4.0, u in 0.01f64..1.5, dim in 2u32..5) {
            let d = DomainSpec::new(FamilyParams::poly_nd(m, dim, p).unwrap());
            let alpha = thresholds(d.params()).t1 + u;
            let f = make_rhs(&d, alpha).unwrap();
            let (total, l1) = total_integral(&f);
            prop_assert!(total.abs() < 1e-9 * l1, "total {} l1 {}", total, l1);
        }

        #[test]
        fn log_zero_mean(r in -0.6f64..3.0, p in 1.2f64..4.0, u in 0.01f64..1.5) {
            let d = log(r, p);
            let alpha = thresholds(d.params()).t1 + u;
            let f = make_rhs(&d, alpha).unwrap();
            let (total, l1) = total_integral(&f);
            prop_assert!(total.abs() < 1e-9 * l1, "total {} l1 {}", total, l1);
        }

        #[test]
        fn scaling(c in -5.0f64..5.0, u in 0.01f64..1.5) {
            prop_assume!(c.abs() > 1e-3);
            let d = poly(2.0, 2.0);
            let alpha = -1.5 + u;
            let f = make_rhs(&d, alpha).unwrap();
            let g = RhsSpec::build(&d, alpha, c, false).unwrap();
            prop_assert!((g.cap_constant() - c * f.cap_constant()).abs() <= 1e-14 * (c * f.cap_constant()).abs());
            let nf = f.lp_norm(2.0).unwrap().value().unwrap();
            let ng = g.lp_norm(2.0).unwrap().value().unwrap();
            prop_assert!((ng - c.abs() * nf).abs() <= 1e-13 * ng);
            let l = log(1.0, 2.0);
            let f = make_rhs(&l, alpha + 1.0).unwrap();
            let g = RhsSpec::build(&l, alpha + 1.0, c, false).unwrap();
            prop_assert!((g.cap_constant() - c * f.cap_constant()).abs() <= 1e-10 * (c * f.cap_constant()).abs());
        }
    }

    #[test]
    fn threshold_agreement() {
        for m in [1.5, 2.0, 3.0] {
            for p in [1.5, 2.0, 3.0] {
                let d = poly(m, p);
                let t1 = thresholds(d.params()).t1;
                for off in [-0.05, -0.02, 0.02, 0.05] {
                    let f = RhsSpec::build(&d, t1 + off, 1.0, true).unwrap();
                    let finite = f.lp_norm(p).unwrap().value().is_some();
                    assert_eq!(finite, off > 0.0, "m={m} p={p} off={off}");
                }
            }
        }
        for r in [0.5, 1.0, 1.5] {
            for p in [1.5, 2.0, 3.0] {
                let d = log(r, p);
                let t1 = thresholds(d.params()).t1;
                for off in [-0.05, -0.02, 0.02, 0.05] {
                    let f = RhsSpec::build(&d, t1 + off, 1.0, true).unwrap();
                    let finite = f.lp_norm(p).unwrap().value().is_some();
                    assert_eq!(finite, off > 0.0, "r={r} p={p} off={off}");
                }
            }
        }
    }
}
