//! Closed-form exponent arithmetic for the three cusp families.
//!
//! For a right-hand side behaving like `x^alpha` (polynomial cusps) or
//! `x^{-2/p} (-ln x)^{-1/p - alpha}` (logarithmic cusp) near the tip, two
//! thresholds govern everything:
//!
//! * `t1`: `f` lies in `L^p` iff `alpha > t1`;
//! * `t2`: for `t1 < alpha <= t2` the weighted cumulative flux cannot be in
//!   `L^p`, so no solution in `W^{1,p}_0` exists.
//!
//! | family        | `t1`                  | `t2`         |
//! |---------------|-----------------------|--------------|
//! | `|y| < x^m`   | `(-m-1)/p`            | `t1 + m - 1` |
//! | `|x'| < x^m`  | `(-1-m(N-1))/p`       | `t1 + m - 1` |
//! | log cusp      | `-r/p`                | `-r/p + r`   |
//!
//! When `m <= 1` (resp. `r <= 0`) the certificate interval is empty and
//! `t2` is reported equal to `t1`.

use crate::error::{Error, Result};
use crate::quad::{self, QuadConfig};
use crate::special;

/// Band around the `e = -1` endpoint that is treated as the endpoint itself.
pub const ENDPOINT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `|y| < x^m` for `0 < x < 1`, capped by the half disc `y^2 + (x-1)^2 < 1`.
    PolyCusp2D { m: f64 },
    /// `|x'| < x_1^m` for `0 < x_1 < 1` in `R^dim`, `dim >= 3`, capped by a cone.
    PolyCuspND { m: f64, dim: u32 },
    /// `|y| < x (-ln x)^{-r}` for `0 < x < 1/2`, capped by a half disc.
    LogCusp2D { r: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyParams {
    family: Family,
    p: f64,
}

fn check_p(p: f64) -> Result<()> {
    if !p.is_finite() || p <= 1.0 {
        return Err(Error::invalid("p must be finite and strictly greater than 1"));
    }
    Ok(())
}

fn check_m(m: f64) -> Result<()> {
    if !m.is_finite() || m <= 0.0 {
        return Err(Error::invalid("cusp power m must be finite and positive"));
    }
    Ok(())
}

impl FamilyParams {
    pub fn poly2d(m: f64, p: f64) -> Result<Self> {
        check_m(m)?;
        check_p(p)?;
        Ok(FamilyParams {
            family: Family::PolyCusp2D { m },
            p,
        })
    }

    /// `dim = 2` is accepted and yields the 2D family.
    pub fn poly_nd(m: f64, dim: u32, p: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::invalid("space dimension must be at least 2"));
        }
        if dim == 2 {
            return Self::poly2d(m, p);
        }
        check_m(m)?;
        check_p(p)?;
        Ok(FamilyParams {
            family: Family::PolyCuspND { m, dim },
            p,
        })
    }

    /// The profile `x(-ln x)^{-r}` is strictly increasing on `(0, 1/2]`
    /// only for `r > -ln 2`; smaller `r` is rejected.
    pub fn log2d(r: f64, p: f64) -> Result<Self> {
        if !r.is_finite() || r <= -core::f64::consts::LN_2 {
            return Err(Error::invalid("log exponent r must be finite and greater than -ln 2"));
        }
        check_p(p)?;
        Ok(FamilyParams {
            family: Family::LogCusp2D { r },
            p,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Same family with a different Lebesgue exponent.
    pub fn with_p(&self, p: f64) -> Result<Self> {
        check_p(p)?;
        Ok(FamilyParams { family: self.family, p })
    }

    pub fn dim(&self) -> u32 {
        match self.family {
            Family::PolyCuspND { dim, .. } => dim,
            _ => 2,
        }
    }

    /// Right end of the cusp part: 1 for polynomial cusps, 1/2 for the log cusp.
    pub fn x_max(&self) -> f64 {
        match self.family {
            Family::LogCusp2D { .. } => 0.5,
            _ => 1.0,
        }
    }

    /// `(m, N)` for the polynomial families.
    pub fn poly(&self) -> Option<(f64, u32)> {
        match self.family {
            Family::PolyCusp2D { m } => Some((m, 2)),
            Family::PolyCuspND { m, dim } => Some((m, dim)),
            Family::LogCusp2D { .. } => None,
        }
    }

    pub fn is_log(&self) -> bool {
        matches!(self.family, Family::LogCusp2D { .. })
    }

    /// Whether the certificate interval `(t1, t2]` is nonempty, decided on
    /// the parameters rather than on the rounded thresholds.
    pub fn has_interval(&self) -> bool {
        match self.family {
            Family::PolyCusp2D { m } | Family::PolyCuspND { m, .. } => m > 1.0,
            Family::LogCusp2D { r } => r > 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    /// `alpha <= t1`: the right-hand side is not in `L^p`.
    NotInLp,
    /// `t1 < alpha <= t2`: no solution in `W^{1,p}_0` exists.
    CertifiedNonexistence,
    /// `alpha > t2`: the certificate says nothing.
    NoConclusion,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::NotInLp => "NotInLp",
            Classification::CertifiedNonexistence => "CertifiedNonexistence",
            Classification::NoConclusion => "NoConclusion",
        }
    }
}

impl core::fmt::Display for Classification {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub t1: f64,
    pub t2: f64,
    nonempty: bool,
}

impl Thresholds {
    /// The half-open interval `(t1, t2]`, if nonempty.
    pub fn interval(&self) -> Option<(f64, f64)> {
        self.nonempty.then_some((self.t1, self.t2))
    }

    pub fn classify(&self, alpha: f64) -> Classification {
        if alpha <= self.t1 {
            Classification::NotInLp
        } else if self.nonempty && alpha <= self.t2 {
            Classification::CertifiedNonexistence
        } else {
            Classification::NoConclusion
        }
    }
}

pub fn thresholds(params: &FamilyParams) -> Thresholds {
    let p = params.p;
    let nonempty = params.has_interval();
    let (t1, raw_t2) = match params.family {
        Family::PolyCusp2D { m } => {
            let t1 = (-m - 1.0) / p;
            (t1, t1 + m - 1.0)
        }
        Family::PolyCuspND { m, dim } => {
            let t1 = (-1.0 - m * (dim - 1) as f64) / p;
            (t1, t1 + m - 1.0)
        }
        Family::LogCusp2D { r } => (-r / p, -r / p + r),
    };
    Thresholds {
        t1,
        t2: if nonempty { raw_t2 } else { t1 },
        nonempty,
    }
}

pub fn classify(params: &FamilyParams, alpha: f64) -> Classification {
    thresholds(params).classify(alpha)
}

/// Growth of the certificate integral as the cut `eps -> 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Divergence {
    /// The weighted integral stays bounded.
    Convergent,
    /// `LB(eps) ~ eps^{-beta}`.
    Power { beta: f64 },
    /// `LB(eps) ~ ln(1/eps)`.
    Logarithmic,
    /// `LB(eps) ~ (ln(1/eps))^exponent` (log cusp).
    LogPower { exponent: f64 },
    /// `LB(eps) ~ ln ln(1/eps)` (log cusp at `alpha = t2`).
    DoubleLogarithmic,
}

impl Divergence {
    pub fn diverges(&self) -> bool {
        !matches!(self, Divergence::Convergent)
    }
}

/// Exponent `e` of the certificate integrand: `x^e` for polynomial cusps,
/// `t^e` in `t = -ln x` for the log cusp.
pub fn integrand_exponent(params: &FamilyParams, alpha: f64) -> f64 {
    let p = params.p;
    match params.family {
        Family::PolyCusp2D { m } => poly_integrand_exponent(m, 2, p, alpha),
        Family::PolyCuspND { m, dim } => poly_integrand_exponent(m, dim, p, alpha),
        Family::LogCusp2D { r } => -1.0 + r * (p - 1.0) - alpha * p,
    }
}

fn poly_integrand_exponent(m: f64, dim: u32, p: f64, alpha: f64) -> f64 {
    let n = dim as f64;
    p * (alpha + m * (n - 1.0) + 1.0) - (m * (2.0 * p - 1.0) + m * (p - 1.0) * (n - 2.0))
}

pub fn divergence_exponent(params: &FamilyParams, alpha: f64) -> Result<Divergence> {
    let th = thresholds(params);
    if !(alpha > th.t1) {
        return Err(Error::NotAdmissible { alpha, t1: th.t1 });
    }
    if th.classify(alpha) == Classification::NoConclusion {
        return Ok(Divergence::Convergent);
    }
    let e = integrand_exponent(params, alpha);
    let at_endpoint = alpha == th.t2 || (e + 1.0).abs() <= ENDPOINT_TOL * (1.0 + e.abs());
    Ok(match params.family {
        Family::LogCusp2D { .. } => {
            if at_endpoint || e + 1.0 <= 0.0 {
                Divergence::DoubleLogarithmic
            } else {
                Divergence::LogPower { exponent: e + 1.0 }
            }
        }
        _ => {
            if at_endpoint || e + 1.0 >= 0.0 {
                Divergence::Logarithmic
            } else {
                Divergence::Power { beta: -(e + 1.0) }
            }
        }
    })
}

/// Classification plus divergence data for one `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentReport {
    pub thresholds: Thresholds,
    pub alpha: f64,
    pub classification: Classification,
    /// `None` when `alpha <= t1`.
    pub divergence: Option<Divergence>,
}

pub fn report(params: &FamilyParams, alpha: f64) -> ExponentReport {
    let th = thresholds(params);
    ExponentReport {
        thresholds: th,
        alpha,
        classification: th.classify(alpha),
        divergence: divergence_exponent(params, alpha).ok(),
    }
}

/// `K_p = 2^{(2p-1)/p} ((p-1)/(2p-1))^{(p-1)/p}`: the exact constant in
/// `||xi - .||_{L^{p/(p-1)}(-xi, xi)} = K_p xi^{(2p-1)/p}`.
pub fn hoelder_constant(p: f64) -> f64 {
    libm::pow(2.0, (2.0 * p - 1.0) / p) * libm::pow((p - 1.0) / (2.0 * p - 1.0), (p - 1.0) / p)
}

/// Constant `K` with `||h(x, .)||_{p/(p-1)} = K w(x)` over a cusp cross-section,
/// where `h = sqrt(x^{2m} - |z|^2) - tau` is the distance to the upper wall.
///
/// For the 2D families this is [`hoelder_constant`]. For `N >= 3` it is the
/// pure number obtained at `x = 1`,
/// `(2^{q+1}/(q+1) * int_{B_{N-2}} (1-|z|^2)^{(q+1)/2} dz)^{1/q}`, with the
/// ball integral evaluated by radial quadrature.
pub fn section_norm_constant(params: &FamilyParams) -> Result<f64> {
    let p = params.p;
    match params.family {
        Family::PolyCuspND { dim, .. } => {
            let q = p / (p - 1.0);
            let k = dim - 2;
            let a = 0.5 * (q + 1.0);
            let radial = quad::integrate(
                |rho| libm::pow(rho, (k - 1) as f64) * libm::pow(1.0 - rho * rho, a),
                0.0,
                1.0,
                &QuadConfig::with_rel_tol(1e-13),
            )?;
            let ball = special::unit_sphere_area(k) * radial.value;
            let norm_q = libm::pow(2.0, q + 1.0) / (q + 1.0) * ball;
            Ok(libm::pow(norm_q, 1.0 / q))
        }
        _ => Ok(hoelder_constant(p)),
    }
}

/// The weight `w(x)` dividing the cumulative flux in the certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoelderWeight {
    params: FamilyParams,
}

pub fn hoelder_weight(params: &FamilyParams) -> HoelderWeight {
    HoelderWeight { params: *params }
}

impl HoelderWeight {
    /// Power of `x` in the weight: `m(2p-1)/p + m(p-1)(N-2)/p` for
    /// polynomial cusps, `(2p-1)/p` for the log cusp.
    pub fn x_exponent(&self) -> f64 {
        let p = self.params.p;
        match self.params.family {
            Family::PolyCusp2D { m } => m * (2.0 * p - 1.0) / p,
            Family::PolyCuspND { m, dim } => {
                (m * (2.0 * p - 1.0) + m * (p - 1.0) * (dim as f64 - 2.0)) / p
            }
            Family::LogCusp2D { .. } => (2.0 * p - 1.0) / p,
        }
    }

    /// Power of `-ln x` in the weight (zero for polynomial cusps).
    pub fn log_exponent(&self) -> f64 {
        match self.params.family {
            Family::LogCusp2D { r } => -r * (2.0 * self.params.p - 1.0) / self.params.p,
            _ => 0.0,
        }
    }

    pub(crate) fn eval_unchecked(&self, x: f64) -> f64 {
        let base = libm::pow(x, self.x_exponent());
        match self.params.family {
            Family::LogCusp2D { .. } => base * libm::pow(-libm::log(x), self.log_exponent()),
            _ => base,
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let hi = self.params.x_max();
        if !(x > 0.0 && x < hi) {
            return Err(Error::OutOfRange { x, lo: 0.0, hi });
        }
        Ok(self.eval_unchecked(x))
    }
}
