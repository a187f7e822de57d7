//! Discrete `p = 2` oracle on truncated planar cusp domains.
//!
//! Grids are rectilinear MAC grids. Spacing is graded away from the cut
//! `x = eps` and from the symmetry axis, so the tip is resolved at a
//! fraction of the cusp half-width without paying for that resolution in
//! the cap.

mod grid;
mod solve;

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub use grid::MacGrid;
pub use solve::{dense_energy_matrices, solve_with_source, DiscreteSolveResult, SolverConfig};

use crate::certificate::lower_bound;
use crate::error::{Error, Result};
use crate::fit::{fit_line, LineFit};
use crate::geometry::{Cap, DomainSpec};
use crate::rhs::{make_rhs, RhsSpec};

/// How node spacing depends on the truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HRule {
    Uniform { h: f64 },
    /// Tip spacing `tip_fraction * width(eps)`, growing like
    /// `growth * distance` from the cut and from the axis, capped at `h_max`.
    Graded { tip_fraction: f64, growth: f64, h_max: f64 },
}

impl Default for HRule {
    fn default() -> Self {
        HRule::Graded {
            tip_fraction: 0.25,
            growth: 0.1,
            h_max: 1.0 / 64.0,
        }
    }
}

impl HRule {
    /// Twice as fine everywhere.
    pub fn halved(&self) -> Self {
        match *self {
            HRule::Uniform { h } => HRule::Uniform { h: 0.5 * h },
            HRule::Graded {
                tip_fraction,
                growth,
                h_max,
            } => HRule::Graded {
                tip_fraction: 0.5 * tip_fraction,
                growth: 0.5 * growth,
                h_max: 0.5 * h_max,
            },
        }
    }

    /// Spacing at the cusp tip of `domain`.
    pub fn tip_spacing(&self, domain: &DomainSpec) -> Result<f64> {
        match *self {
            HRule::Uniform { h } => Ok(h),
            HRule::Graded { tip_fraction, .. } => Ok(tip_fraction * domain.width(domain.cut())?),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            HRule::Uniform { h } => h > 0.0 && h.is_finite(),
            HRule::Graded {
                tip_fraction,
                growth,
                h_max,
            } => tip_fraction > 0.0 && growth > 0.0 && growth.is_finite() && h_max > 0.0 && h_max.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("h-rule parameters must be positive and finite"))
        }
    }

    /// Nodes `0 = s_0 < s_1 < ... >= len` along one axis.
    fn axis(&self, h0: f64, len: f64) -> Vec<f64> {
        let mut out = vec![0.0];
        let mut s = 0.0;
        while s < len {
            let step = match *self {
                HRule::Uniform { h } => h,
                HRule::Graded { growth, h_max, .. } => (growth * s).clamp(h0, h_max.max(h0)),
            };
            s += step;
            out.push(s);
        }
        out
    }
}

/// Masked grid on the truncated planar domain.
pub fn build_grid(domain: &DomainSpec, rule: &HRule) -> Result<MacGrid> {
    rule.validate()?;
    if domain.dim() != 2 {
        return Err(Error::invalid("the discrete oracle is planar"));
    }
    if !domain.is_truncated() {
        return Err(Error::invalid("the discrete oracle needs a truncated domain"));
    }
    let eps = domain.cut();
    let width = domain.width(eps)?;
    let h0 = rule.tip_spacing(domain)?;
    if width < h0 {
        return Err(Error::UnderResolved { width, h: h0 });
    }
    let x_end = match domain.cap() {
        Cap::HalfDisc { x0, radius } => x0 + radius,
        Cap::Cone => 2.0,
    };
    let xs: Vec<f64> = rule.axis(h0, x_end - eps).into_iter().map(|s| eps + s).collect();
    let half = rule.axis(h0, domain.cap_radius());
    let mut ys: Vec<f64> = half.iter().rev().map(|s| -s).collect();
    ys.extend_from_slice(&half[1..]);
    MacGrid::from_region(&xs, &ys, |x, y| domain.contains_sq(x, y * y))
}

/// Minimal-energy field for `f` sampled at cell centers.
pub fn solve_min_norm(grid: &MacGrid, rhs: &RhsSpec, cfg: &SolverConfig) -> Result<DiscreteSolveResult> {
    let f: Vec<f64> = (0..grid.n_cells())
        .map(|c| {
            let (x, y) = grid.cell_center(c);
            rhs.evaluate(&[x, y])
        })
        .collect::<Result<_>>()?;
    let mut res = solve_with_source(grid, &f, cfg)?;
    res.eps = rhs.domain().cut();
    Ok(res)
}

/// Random boundary-zero, discretely divergence-free field from a stream
/// function with independent uniform values on nodes surrounded by
/// interior cells.
pub fn divergence_free_perturbation(grid: &MacGrid, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let (nx, ny) = grid.shape();
    let mut psi = vec![0.0; (nx + 1) * (ny + 1)];
    for j in 0..=ny {
        for i in 0..=nx {
            if grid.node_is_inner(i, j) {
                let unit = ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
                psi[j * (nx + 1) + i] = 2.0 * unit - 1.0;
            }
        }
    }
    let mut u = vec![0.0; grid.n_u()];
    let mut v = vec![0.0; grid.n_v()];
    grid.curl(&psi, &mut u, &mut v);
    (u, v)
}

/// Largest relative energy decrease over `trials` perturbations
/// `u + t w` with `t` scaled so `|t w|` is comparable to `|u|`; a minimiser
/// gives a value `<= 0` up to roundoff.
pub fn minimality_defect(grid: &MacGrid, res: &DiscreteSolveResult, trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = grid.energy(&res.u, &res.v);
    let mut worst = f64::NEG_INFINITY;
    for k in 0..trials {
        let (du, dv) = divergence_free_perturbation(grid, &mut rng);
        let pert = grid.energy(&du, &dv);
        if pert == 0.0 {
            continue;
        }
        // alternate signs and magnitudes down to 1e-3 of the solution scale
        let scale = libm::sqrt(base.max(1e-300) / pert) * libm::pow(10.0, -((k % 4) as f64));
        let t = if k % 2 == 0 { scale } else { -scale };
        let u: Vec<f64> = res.u.iter().zip(&du).map(|(a, b)| a + t * b).collect();
        let v: Vec<f64> = res.v.iter().zip(&dv).map(|(a, b)| a + t * b).collect();
        let decrease = (base - grid.energy(&u, &v)) / base.max(1e-300);
        worst = worst.max(decrease);
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub eps: f64,
    pub h: f64,
    pub cells: usize,
    pub gradient_norm: f64,
    /// `sqrt(LB(2 eps))` for the truncated right-hand side.
    pub lb_sqrt: f64,
    pub ratio: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub div_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub alpha: f64,
    pub rows: Vec<SweepRow>,
    /// Fit of `ln gradient_norm` against `ln eps`; the slope is minus the growth rate.
    pub growth_fit: Option<LineFit>,
}

/// One row of the blow-up sweep.
pub fn sweep_row(domain: &DomainSpec, alpha: f64, eps: f64, rule: &HRule, cfg: &SolverConfig) -> Result<SweepRow> {
    let params = domain.params();
    let domain = if params.is_log() {
        if params.p() != 2.0 {
            return Err(Error::invalid("the discrete oracle needs p = 2"));
        }
        *domain
    } else {
        domain.with_p(2.0)?
    };
    let rhs = make_rhs(&domain, alpha)?.truncate(eps)?;
    let grid = build_grid(rhs.domain(), rule)?;
    let res = solve_min_norm(&grid, &rhs, cfg)?;
    let lb = lower_bound(&rhs, 2.0, 2.0 * eps)?;
    let lb_sqrt = libm::sqrt(lb.max(0.0));
    Ok(SweepRow {
        eps,
        h: res.h,
        cells: grid.n_cells(),
        gradient_norm: res.gradient_norm,
        lb_sqrt,
        ratio: if lb_sqrt > 0.0 { res.gradient_norm / lb_sqrt } else { f64::INFINITY },
        outer_iterations: res.outer_iterations,
        inner_iterations: res.inner_iterations,
        div_residual: res.div_residual,
    })
}

/// Assembles rows (computed in any order) into a report.
pub fn sweep_report(alpha: f64, rows: Vec<SweepRow>) -> SweepReport {
    let xs: Vec<f64> = rows.iter().map(|r| libm::log(r.eps)).collect();
    let ys: Vec<f64> = rows.iter().map(|r| libm::log(r.gradient_norm)).collect();
    let growth_fit = if rows.len() >= 2 && ys.iter().all(|y| y.is_finite()) {
        fit_line(&xs, &ys)
    } else {
        None
    };
    SweepReport { alpha, rows, growth_fit }
}

/// Solves on `Omega_eps` for each `eps` (strictly decreasing) and compares
/// against the certificate lower bound at `2 eps`.
pub fn blowup_sweep(domain: &DomainSpec, alpha: f64, eps_list: &[f64], rule: &HRule, cfg: &SolverConfig) -> Result<SweepReport> {
    if eps_list.is_empty() || eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::invalid("eps list must be nonempty and strictly decreasing"));
    }
    let rows = eps_list
        .iter()
        .map(|&eps| sweep_row(domain, alpha, eps, rule, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(sweep_report(alpha, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::FamilyParams;

    fn poly(m: f64) -> DomainSpec {
        DomainSpec::new(FamilyParams::poly2d(m, 2.0).unwrap())
    }

    #[test]
    fn tip_mask_is_connected() {
        let d = poly(2.0).truncate(0.2).unwrap();
        let g = build_grid(&d, &HRule::Uniform { h: 1.0 / 64.0 }).unwrap();
        assert!(g.n_cells() > 0);
        let g = build_grid(&d, &HRule::default()).unwrap();
        assert!(g.n_cells() > 0);
    }

    #[test]
    fn under_resolved_and_untruncated_rejected() {
        let d = poly(2.0).truncate(0.05).unwrap();
        assert!(matches!(
            build_grid(&d, &HRule::Uniform { h: 0.01 }),
            Err(Error::UnderResolved { .. })
        ));
        assert!(build_grid(&poly(2.0), &HRule::default()).is_err());
        assert!(build_grid(&d, &HRule::Uniform { h: -1.0 }).is_err());
    }

    #[test]
    fn graded_axis_is_monotone_and_bounded() {
        let rule = HRule::default();
        let s = rule.axis(1e-3, 1.0);
        assert!(s.windows(2).all(|w| w[1] - w[0] >= 1e-3 - 1e-15 && w[1] - w[0] <= 1.0 / 64.0 + 1e-15));
        assert!(*s.last().unwrap() >= 1.0);
        let fine = rule.halved().axis(5e-4, 1.0);
        assert!(fine.len() > s.len());
    }

    #[test]
    fn cusp_solve_is_minimal_and_feasible() {
        let d = poly(2.0);
        let rhs = make_rhs(&d, -1.25).unwrap().truncate(0.2).unwrap();
        let rule = HRule::Graded {
            tip_fraction: 0.5,
            growth: 0.3,
            h_max: 1.0 / 16.0,
        };
        let g = build_grid(rhs.domain(), &rule).unwrap();
        let res = solve_min_norm(&g, &rhs, &SolverConfig::default()).unwrap();
        assert!(res.div_residual < 1e-8);
        assert_eq!(res.eps, 0.2);
        assert!(minimality_defect(&g, &res, 100, 7) <= 1e-12);
    }
}
