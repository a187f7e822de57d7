//! Cusp domains: membership, cross-sections, volumes, truncation, and a
//! hit-or-miss Monte Carlo measure.
//!
//! Every domain is a cusp part `{cut < x < x_max, |z| < xi(x)}` glued to a cap
//! at `x = x_max` whose cross-section there equals `xi(x_max)`:
//!
//! * `|y| < x^m`: half disc `(x-1)^2 + y^2 < 1`, `x >= 1`;
//! * `|x'| < x_1^m` in `R^N`: cone `|x'| < 2 - x_1`, `1 <= x_1 < 2`;
//! * `|y| < x(-ln x)^{-r}`: half disc centred at `(1/2, 0)` of radius
//!   `(ln 2)^{-r} / 2`, `x >= 1/2`.
//!
//! Points on the boundary are outside.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::analytic::{Family, FamilyParams};
use crate::error::{Error, Result};
use crate::quad::{self, QuadConfig};
use crate::special;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cap {
    /// `{x >= x0, (x - x0)^2 + y^2 < radius^2}`.
    HalfDisc { x0: f64, radius: f64 },
    /// `{1 <= x_1 < 2, |x'| < 2 - x_1}`.
    Cone,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainSpec {
    params: FamilyParams,
    /// Abscissa of the cut face; 0 for the full domain.
    cut: f64,
}

impl DomainSpec {
    pub fn new(params: FamilyParams) -> Self {
        DomainSpec { params, cut: 0.0 }
    }

    pub fn params(&self) -> &FamilyParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.params.dim() as usize
    }

    pub fn x_max(&self) -> f64 {
        self.params.x_max()
    }

    pub fn cut(&self) -> f64 {
        self.cut
    }

    pub fn is_truncated(&self) -> bool {
        self.cut > 0.0
    }

    /// The same domain with its cusp-defining parameters but a different `p`.
    pub fn with_p(&self, p: f64) -> Result<Self> {
        Ok(DomainSpec {
            params: self.params.with_p(p)?,
            cut: self.cut,
        })
    }

    pub fn cap(&self) -> Cap {
        match self.params.family() {
            Family::PolyCusp2D { .. } => Cap::HalfDisc { x0: 1.0, radius: 1.0 },
            Family::PolyCuspND { .. } => Cap::Cone,
            Family::LogCusp2D { .. } => Cap::HalfDisc {
                x0: 0.5,
                radius: self.profile(0.5),
            },
        }
    }

    /// Half-width of the cap at its widest, which bounds `|z|` over the domain.
    pub fn cap_radius(&self) -> f64 {
        self.profile(self.x_max())
    }

    /// `xi(x)` without range checks, valid on `(0, x_max]`.
    pub(crate) fn profile(&self, x: f64) -> f64 {
        match self.params.family() {
            Family::PolyCusp2D { m } | Family::PolyCuspND { m, .. } => libm::pow(x, m),
            Family::LogCusp2D { r } => x * libm::pow(-libm::log(x), -r),
        }
    }

    /// Derivative of the profile on `(0, x_max]`.
    pub(crate) fn profile_derivative(&self, x: f64) -> f64 {
        match self.params.family() {
            Family::PolyCusp2D { m } | Family::PolyCuspND { m, .. } => m * libm::pow(x, m - 1.0),
            Family::LogCusp2D { r } => {
                let l = -libm::log(x);
                libm::pow(l, -r) + r * libm::pow(l, -r - 1.0)
            }
        }
    }

    fn check_cusp_x(&self, x: f64) -> Result<()> {
        let hi = self.x_max();
        if !(x > 0.0 && x < hi) {
            return Err(Error::OutOfRange { x, lo: 0.0, hi });
        }
        Ok(())
    }

    /// Half-width (2D) or cross-section radius (ND) of the cusp at `x`.
    pub fn width(&self, x: f64) -> Result<f64> {
        self.check_cusp_x(x)?;
        Ok(self.profile(x))
    }

    fn section_factor(&self) -> f64 {
        special::unit_ball_volume(self.params.dim() - 1)
    }

    pub(crate) fn section_measure_unchecked(&self, x: f64) -> f64 {
        let k = self.params.dim() as i32 - 1;
        self.section_factor() * libm::pow(self.profile(x), k as f64)
    }

    /// `(N-1)`-dimensional measure of the cusp cross-section at `x`.
    pub fn cross_section_measure(&self, x: f64) -> Result<f64> {
        self.check_cusp_x(x)?;
        Ok(self.section_measure_unchecked(x))
    }

    /// Measure of the cusp part between `lo` and `hi`; ignores the cut.
    pub fn cusp_volume(&self, lo: f64, hi: f64) -> Result<f64> {
        let xm = self.x_max();
        if !(lo >= 0.0 && lo < hi && hi <= xm) {
            return Err(Error::invalid("cusp_volume needs 0 <= lo < hi <= x_max"));
        }
        match self.params.family() {
            Family::PolyCusp2D { m } | Family::PolyCuspND { m, .. } => {
                let a = m * (self.params.dim() - 1) as f64 + 1.0;
                let c = self.section_factor();
                Ok(c * (libm::pow(hi, a) - libm::pow(lo, a)) / a)
            }
            Family::LogCusp2D { r } => {
                // x = e^{-t}: int 2 x (-ln x)^{-r} dx = int 2 e^{-2t} t^{-r} dt
                let g = move |t: f64| 2.0 * libm::exp(-2.0 * t) * libm::pow(t, -r);
                let t_hi = -libm::log(hi);
                let cfg = QuadConfig::with_rel_tol(1e-12);
                let v = if lo == 0.0 {
                    quad::integrate_to_infinity(g, t_hi, &cfg)?
                } else {
                    quad::integrate(g, t_hi, -libm::log(lo), &cfg)?
                };
                Ok(v.value)
            }
        }
    }

    pub fn cap_volume(&self) -> f64 {
        match self.cap() {
            Cap::HalfDisc { radius, .. } => 0.5 * PI * radius * radius,
            Cap::Cone => {
                let n = self.params.dim();
                special::unit_ball_volume(n - 1) / n as f64
            }
        }
    }

    /// Measure of the whole (possibly truncated) domain.
    pub fn volume(&self) -> Result<f64> {
        Ok(self.cusp_volume(self.cut, self.x_max())? + self.cap_volume())
    }

    /// `Omega ∩ {x > eps}`; truncations compose by taking the larger cut.
    pub fn truncate(&self, eps: f64) -> Result<Self> {
        self.check_cusp_x(eps)?;
        Ok(DomainSpec {
            params: self.params,
            cut: self.cut.max(eps),
        })
    }

    /// Radius of the cross-section `{z : (x, z) in Omega}`, zero outside.
    pub fn section_radius(&self, x: f64) -> f64 {
        let xm = self.x_max();
        if !(x > self.cut) || x <= 0.0 {
            return 0.0;
        }
        if x < xm {
            return self.profile(x);
        }
        match self.cap() {
            Cap::HalfDisc { x0, radius } => {
                let d = x - x0;
                if d < radius {
                    libm::sqrt((radius - d) * (radius + d))
                } else {
                    0.0
                }
            }
            Cap::Cone => (2.0 - x).max(0.0),
        }
    }

    pub fn contains(&self, pt: &[f64]) -> Result<bool> {
        let n = self.dim();
        if pt.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: pt.len() });
        }
        let rho2: f64 = pt[1..].iter().map(|z| z * z).sum();
        Ok(self.contains_sq(pt[0], rho2))
    }

    /// Membership by abscissa and squared transverse radius.
    pub(crate) fn contains_sq(&self, x: f64, rho2: f64) -> bool {
        if !(x > self.cut) || x <= 0.0 {
            return false;
        }
        let xm = self.x_max();
        if x < xm {
            let w = self.profile(x);
            return rho2 < w * w;
        }
        match self.cap() {
            Cap::HalfDisc { x0, radius } => {
                let d = x - x0;
                d * d + rho2 < radius * radius
            }
            Cap::Cone => {
                let s = 2.0 - x;
                s > 0.0 && rho2 < s * s
            }
        }
    }

    /// Axis-aligned box `[lo, hi]` containing the domain.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.dim();
        let r = self.cap_radius();
        let x_end = match self.cap() {
            Cap::HalfDisc { x0, radius } => x0 + radius,
            Cap::Cone => 2.0,
        };
        let mut lo = alloc::vec![-r; n];
        let mut hi = alloc::vec![r; n];
        lo[0] = self.cut;
        hi[0] = x_end;
        (lo, hi)
    }

    /// Hit-or-miss estimate of the measure of `region`, deterministic in `seed`.
    pub fn mc_measure(&self, region: &MeasureRegion, n: u64, seed: u64) -> Result<McEstimate> {
        self.mc_measure_stream(region, n, seed, 0)
    }

    /// As [`DomainSpec::mc_measure`] on an independent substream, so a sample
    /// budget can be split across workers and recombined with
    /// [`McEstimate::combine`].
    pub fn mc_measure_stream(&self, region: &MeasureRegion, n: u64, seed: u64, stream: u64) -> Result<McEstimate> {
        if n == 0 {
            return Err(Error::invalid("Monte Carlo needs at least one sample"));
        }
        let dim = self.dim();
        let (lo, hi, slice_x) = self.sampling_box(region)?;
        let box_volume: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
        if !(box_volume > 0.0) {
            return Ok(McEstimate::from_hits(0.0, 0, n));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut pt = alloc::vec![0.0; dim];
        let mut hits = 0u64;
        for _ in 0..n {
            let mut k = 0;
            if let Some(x) = slice_x {
                pt[0] = x;
                k = 1;
            }
            for (i, (a, b)) in lo.iter().zip(&hi).enumerate() {
                pt[k + i] = a + (b - a) * open_unit(&mut rng);
            }
            let rho2: f64 = pt[1..].iter().map(|z| z * z).sum();
            let inside = self.contains_sq(pt[0], rho2)
                && match region {
                    MeasureRegion::CuspSlab { .. } => pt[0] < self.x_max(),
                    _ => true,
                };
            hits += inside as u64;
        }
        Ok(McEstimate::from_hits(box_volume, hits, n))
    }

    /// Sampling box for a region; for cross-sections the abscissa is fixed
    /// and only the transverse coordinates are sampled.
    fn sampling_box(&self, region: &MeasureRegion) -> Result<(Vec<f64>, Vec<f64>, Option<f64>)> {
        let dim = self.dim();
        match region {
            MeasureRegion::CrossSection { x } => {
                let r = self.section_radius(*x);
                Ok((alloc::vec![-r; dim - 1], alloc::vec![r; dim - 1], Some(*x)))
            }
            MeasureRegion::CuspSlab { lo, hi } => {
                let xm = self.x_max();
                let a = lo.max(0.0);
                let b = hi.min(xm);
                if !(b > a) {
                    return Ok((alloc::vec![0.0; dim], alloc::vec![0.0; dim], None));
                }
                let r = self.profile(b);
                let mut l = alloc::vec![-r; dim];
                let mut h = alloc::vec![r; dim];
                l[0] = a;
                h[0] = b;
                Ok((l, h, None))
            }
            MeasureRegion::Box { lo, hi } => {
                if lo.len() != dim || hi.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: lo.len().min(hi.len()),
                    });
                }
                if lo.iter().zip(hi).any(|(a, b)| !(b >= a)) {
                    return Err(Error::invalid("box needs lo <= hi componentwise"));
                }
                Ok((lo.clone(), hi.clone(), None))
            }
        }
    }
}

/// Uniform sample in the open interval `(0, 1)`.
fn open_unit<R: RngCore>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureRegion {
    /// `(N-1)`-dimensional cross-section `{z : (x, z) in Omega}`.
    CrossSection { x: f64 },
    /// Cusp part with `lo < x_1 < hi`, clipped to `(0, x_max)`; ignores any cut above `lo`.
    CuspSlab { lo: f64, hi: f64 },
    /// `Omega ∩ [lo, hi]`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub box_volume: f64,
    pub hits: u64,
    pub samples: u64,
}

impl McEstimate {
    fn from_hits(box_volume: f64, hits: u64, samples: u64) -> Self {
        let phat = hits as f64 / samples as f64;
        McEstimate {
            estimate: box_volume * phat,
            stderr: box_volume * libm::sqrt(phat * (1.0 - phat) / samples as f64),
            box_volume,
            hits,
            samples,
        }
    }

    /// Pools two estimates drawn over the same box.
    pub fn combine(&self, other: &McEstimate) -> Result<McEstimate> {
        if self.box_volume != other.box_volume {
            return Err(Error::invalid("cannot pool estimates over different boxes"));
        }
        Ok(McEstimate::from_hits(
            self.box_volume,
            self.hits + other.hits,
            self.samples + other.samples,
        ))
    }

    /// `(estimate - exact) / stderr`, zero when both coincide.
    pub fn z_score(&self, exact: f64) -> f64 {
        let d = self.estimate - exact;
        if d == 0.0 {
            0.0
        } else {
            d / self.stderr
        }
    }
}
