//! Minimal-energy solutions of the discrete divergence equation.
//!
//! The KKT system `A u = B^T mu`, `B u = g` is reduced to the Schur system
//! `B A^{-1} B^T mu = g`, solved by preconditioned CG on zero-mean
//! multipliers. Each Schur product runs Jacobi-preconditioned CG on the two
//! velocity components.

use alloc::vec;
use alloc::vec::Vec;

use super::grid::{MacGrid, NONE};
use crate::error::{Error, Result};
use crate::special::compensated_sum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Relative Schur residual, also the bound on the cell-wise divergence error.
    pub outer_tol: f64,
    pub inner_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            outer_tol: 1e-8,
            inner_tol: 1e-10,
            max_outer: 5000,
            max_inner: 50_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSolveResult {
    /// Values on active `u` and `v` faces in grid order.
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub gradient_norm: f64,
    /// `max_c |(B u)_c / area_c - f_c|` with `f` the zero-mean cell data.
    pub div_residual: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub eps: f64,
    pub h: f64,
}

/// Symmetric matrix in CSR form.
#[derive(Debug, Clone)]
pub(crate) struct Csr {
    rowptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<f64>,
}

impl Csr {
    /// Matrix of `sum w (x_a - x_b)^2`, where `NONE` is a zero value.
    pub(crate) fn from_pairs(n: usize, pairs: &[(usize, usize, f64)]) -> Self {
        let mut diag = vec![0.0; n];
        let mut count = vec![0usize; n];
        for &(a, b, w) in pairs {
            if a != NONE {
                diag[a] += w;
            }
            if b != NONE {
                diag[b] += w;
            }
            if a != NONE && b != NONE {
                count[a] += 1;
                count[b] += 1;
            }
        }
        let mut rowptr = vec![0usize; n + 1];
        for k in 0..n {
            rowptr[k + 1] = rowptr[k] + count[k] + 1;
        }
        let nnz = rowptr[n];
        let mut cols = vec![0usize; nnz];
        let mut vals = vec![0.0; nnz];
        let mut fill: Vec<usize> = rowptr[..n].to_vec();
        for k in 0..n {
            cols[fill[k]] = k;
            vals[fill[k]] = diag[k];
            fill[k] += 1;
        }
        for &(a, b, w) in pairs {
            if a != NONE && b != NONE {
                cols[fill[a]] = b;
                vals[fill[a]] = -w;
                fill[a] += 1;
                cols[fill[b]] = a;
                vals[fill[b]] = -w;
                fill[b] += 1;
            }
        }
        Csr { rowptr, cols, vals, diag }
    }

    pub(crate) fn n(&self) -> usize {
        self.diag.len()
    }

    pub(crate) fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (k, out) in y.iter_mut().enumerate() {
            let (s, e) = (self.rowptr[k], self.rowptr[k + 1]);
            *out = self.cols[s..e].iter().zip(&self.vals[s..e]).map(|(&c, &v)| v * x[c]).sum();
        }
    }

    pub(crate) fn quad_form(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; self.n()];
        self.apply(x, &mut y);
        compensated_sum(x.iter().zip(&y).map(|(a, b)| a * b))
    }

    /// Dense copy, row major.
    pub(crate) fn to_dense(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; n * n];
        for k in 0..n {
            for idx in self.rowptr[k]..self.rowptr[k + 1] {
                out[k * n + self.cols[idx]] += self.vals[idx];
            }
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Scratch vectors for the inner solver.
struct InnerWork {
    r: Vec<f64>,
    z: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
}

impl InnerWork {
    fn new(n: usize) -> Self {
        InnerWork {
            r: vec![0.0; n],
            z: vec![0.0; n],
            p: vec![0.0; n],
            q: vec![0.0; n],
        }
    }
}

/// Jacobi-PCG for `a x = b` from `x = 0`; returns the iteration count.
#[allow(clippy::needless_range_loop)]
fn inner_cg(a: &Csr, b: &[f64], x: &mut [f64], w: &mut InnerWork, cfg: &SolverConfig) -> Result<usize> {
    x.iter_mut().for_each(|v| *v = 0.0);
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(0);
    }
    w.r.copy_from_slice(b);
    for k in 0..a.n() {
        w.z[k] = w.r[k] / a.diag[k];
    }
    w.p.copy_from_slice(&w.z);
    let mut rz = dot(&w.r, &w.z);
    let target = cfg.inner_tol * bnorm;
    for it in 1..=cfg.max_inner {
        a.apply(&w.p, &mut w.q);
        let alpha = rz / dot(&w.p, &w.q);
        for k in 0..x.len() {
            x[k] += alpha * w.p[k];
            w.r[k] -= alpha * w.q[k];
        }
        if norm(&w.r) <= target {
            return Ok(it);
        }
        for k in 0..x.len() {
            w.z[k] = w.r[k] / a.diag[k];
        }
        let rz_new = dot(&w.r, &w.z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..x.len() {
            w.p[k] = w.z[k] + beta * w.p[k];
        }
    }
    Err(Error::NonConvergence {
        stage: "inner",
        iterations: cfg.max_inner,
        residual: norm(&w.r) / bnorm,
    })
}

fn remove_mean(x: &mut [f64]) {
    let m = compensated_sum(x.iter().copied()) / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= m);
}

/// Cell data shifted to exact area-weighted zero mean.
pub(crate) fn balanced_source(grid: &MacGrid, f: &[f64]) -> Vec<f64> {
    let areas: Vec<f64> = (0..grid.n_cells()).map(|c| grid.cell_area(c)).collect();
    let total = compensated_sum(areas.iter().copied());
    let mean = compensated_sum(f.iter().zip(&areas).map(|(a, b)| a * b)) / total;
    f.iter().map(|v| v - mean).collect()
}

/// Solves for given cell values of `f` (re-balanced to zero mean).
pub fn solve_with_source(grid: &MacGrid, f: &[f64], cfg: &SolverConfig) -> Result<DiscreteSolveResult> {
    let nc = grid.n_cells();
    if f.len() != nc {
        return Err(Error::DimensionMismatch { expected: nc, got: f.len() });
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("cell source must be finite"));
    }
    let (nu, nv) = (grid.n_u(), grid.n_v());
    let fbar = balanced_source(grid, f);
    let areas: Vec<f64> = (0..nc).map(|c| grid.cell_area(c)).collect();
    let g: Vec<f64> = fbar.iter().zip(&areas).map(|(a, b)| a * b).collect();

    let au = Csr::from_pairs(nu, &grid.u_pairs());
    let av = Csr::from_pairs(nv, &grid.v_pairs());
    let mut wu = InnerWork::new(nu);
    let mut wv = InnerWork::new(nv);

    let mut u = vec![0.0; nu];
    let mut v = vec![0.0; nv];
    let mut inner_total = 0;
    let mut outer = 0;

    let gnorm = norm(&g);
    if gnorm > 0.0 {
        let mut r = g.clone();
        let mut z: Vec<f64> = r.iter().zip(&areas).map(|(a, b)| a / b).collect();
        remove_mean(&mut z);
        let mut d = z.clone();
        let mut rz = dot(&r, &z);
        let (mut bu, mut bv) = (vec![0.0; nu], vec![0.0; nv]);
        let (mut zu, mut zv) = (vec![0.0; nu], vec![0.0; nv]);
        let mut q = vec![0.0; nc];
        let converged = |r: &[f64]| {
            norm(r) <= cfg.outer_tol * gnorm
                && r.iter().zip(&areas).all(|(a, b)| (a / b).abs() <= cfg.outer_tol)
        };
        while !converged(&r) {
            if outer == cfg.max_outer {
                return Err(Error::NonConvergence {
                    stage: "outer",
                    iterations: outer,
                    residual: norm(&r) / gnorm,
                });
            }
            outer += 1;
            grid.divergence_transpose(&d, &mut bu, &mut bv);
            inner_total += inner_cg(&au, &bu, &mut zu, &mut wu, cfg)?;
            inner_total += inner_cg(&av, &bv, &mut zv, &mut wv, cfg)?;
            grid.divergence(&zu, &zv, &mut q);
            let dq = dot(&d, &q);
            if !(dq > 0.0) {
                return Err(Error::NonConvergence {
                    stage: "outer breakdown",
                    iterations: outer,
                    residual: norm(&r) / gnorm,
                });
            }
            let alpha = rz / dq;
            for k in 0..nu {
                u[k] += alpha * zu[k];
            }
            for k in 0..nv {
                v[k] += alpha * zv[k];
            }
            for k in 0..nc {
                r[k] -= alpha * q[k];
                z[k] = r[k] / areas[k];
            }
            remove_mean(&mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..nc {
                d[k] = z[k] + beta * d[k];
            }
        }
    }

    // true residual from the assembled field
    let mut bu_final = vec![0.0; nc];
    grid.divergence(&u, &v, &mut bu_final);
    let div_residual = bu_final
        .iter()
        .zip(&areas)
        .zip(&fbar)
        .map(|((b, a), f)| (b / a - f).abs())
        .fold(0.0, f64::max);
    let energy = au.quad_form(&u) + av.quad_form(&v);
    let (hx, hy) = (0..nc).map(|c| grid.cell_spacing(c)).fold((f64::INFINITY, f64::INFINITY), |acc, s| {
        (acc.0.min(s.0), acc.1.min(s.1))
    });
    Ok(DiscreteSolveResult {
        u,
        v,
        gradient_norm: libm::sqrt(energy.max(0.0)),
        div_residual,
        outer_iterations: outer,
        inner_iterations: inner_total,
        eps: grid.x_nodes()[1],
        h: hx.min(hy),
    })
}

/// Dense `(A_u, A_v)` energy matrices, row major, for external oracles.
pub fn dense_energy_matrices(grid: &MacGrid) -> (Vec<f64>, Vec<f64>) {
    (
        Csr::from_pairs(grid.n_u(), &grid.u_pairs()).to_dense(),
        Csr::from_pairs(grid.n_v(), &grid.v_pairs()).to_dense(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(n: usize) -> MacGrid {
        let nodes: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
        MacGrid::from_region(&nodes, &nodes, |_, _| true).unwrap()
    }

    fn halves(grid: &MacGrid) -> Vec<f64> {
        (0..grid.n_cells())
            .map(|c| if grid.cell_center(c).0 < 0.5 { 1.0 } else { -1.0 })
            .collect()
    }

    #[test]
    fn zero_source_gives_zero_field() {
        let g = square(4);
        let res = solve_with_source(&g, &[0.0; 16], &SolverConfig::default()).unwrap();
        assert_eq!(res.gradient_norm, 0.0);
        assert!(res.u.iter().chain(&res.v).all(|&x| x == 0.0));
        // constants are removed by the zero-mean shift
        let res = solve_with_source(&g, &[3.0; 16], &SolverConfig::default()).unwrap();
        assert!(res.gradient_norm < 1e-12);
    }

    #[test]
    fn energy_matrix_matches_pairs() {
        let g = square(5);
        let a = Csr::from_pairs(g.n_u(), &g.u_pairs());
        let x: Vec<f64> = (0..g.n_u()).map(|k| libm::sin(k as f64 + 0.3)).collect();
        let v = vec![0.0; g.n_v()];
        assert!((a.quad_form(&x) - g.energy(&x, &v)).abs() < 1e-12);
    }

    #[test]
    fn halves_source_is_feasible_and_optimal() {
        let g = square(8);
        let cfg = SolverConfig::default();
        let res = solve_with_source(&g, &halves(&g), &cfg).unwrap();
        assert!(res.gradient_norm > 0.0);
        assert!(res.div_residual < 1e-8);
        // symmetric source, symmetric solution: v is odd in y
        let (_, ny) = g.shape();
        for (k, &(i, j)) in g.v_faces().iter().enumerate() {
            let mirror = g.v_slot(i, ny - j).unwrap();
            assert!((res.v[k] + res.v[mirror]).abs() < 1e-7);
        }
        // stationarity: A u lies in the range of B^T
        let grad2 = g.energy(&res.u, &res.v);
        assert!((grad2 - res.gradient_norm * res.gradient_norm).abs() < 1e-10 * grad2);
    }

    #[test]
    fn caps_are_reported() {
        let g = square(8);
        let cfg = SolverConfig {
            max_outer: 1,
            ..SolverConfig::default()
        };
        assert!(matches!(
            solve_with_source(&g, &halves(&g), &cfg),
            Err(Error::NonConvergence { stage: "outer", .. })
        ));
        let cfg = SolverConfig {
            max_inner: 1,
            ..SolverConfig::default()
        };
        assert!(matches!(
            solve_with_source(&g, &halves(&g), &cfg),
            Err(Error::NonConvergence { stage: "inner", .. })
        ));
    }
}
