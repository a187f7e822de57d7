//! Dense saddle-point oracle for small grids.
//!
//! Assembles the gradient matrix `G` link by link from the grid geometry,
//! forms `A = G^T G` and the flux matrix `B` column by column, and solves
//!
//! ```text
//! [ A   B^T ] [u ]   [0]
//! [ B   0   ] [mu] = [g]
//! ```
//!
//! by LU, with one (redundant) cell row and its multiplier removed.

use cuspdiv_core::MacGrid;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseSolution {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub gradient_norm: f64,
    /// `max_c |(B u)_c / area_c - fbar_c|`.
    pub div_residual: f64,
}

fn spacings(nodes: &[f64]) -> Vec<f64> {
    nodes.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Rows of `G`: each link is `(a, b, w)` contributing `sqrt(w) (x_a - x_b)`.
fn push_link(rows: &mut Vec<Vec<(usize, f64)>>, a: Option<usize>, b: Option<usize>, w: f64) {
    if a.is_none() && b.is_none() {
        return;
    }
    let s = w.sqrt();
    let mut row = Vec::new();
    if let Some(a) = a {
        row.push((a, s));
    }
    if let Some(b) = b {
        row.push((b, -s));
    }
    rows.push(row);
}

/// Gradient matrix over `[u; v]` unknowns.
pub fn gradient_matrix(grid: &MacGrid) -> DMatrix<f64> {
    let dx = spacings(grid.x_nodes());
    let dy = spacings(grid.y_nodes());
    let (nx, ny) = grid.shape();
    let nu = grid.n_u();
    let mut rows = Vec::new();
    // du/dx and dv/dy live on cells
    for &(i, j) in grid.cells() {
        push_link(&mut rows, grid.u_slot(i + 1, j), grid.u_slot(i, j), dy[j] / dx[i]);
        push_link(
            &mut rows,
            grid.v_slot(i, j + 1).map(|k| nu + k),
            grid.v_slot(i, j).map(|k| nu + k),
            dx[i] / dy[j],
        );
    }
    // du/dy and dv/dx live on grid nodes
    for j in 1..ny {
        for i in 1..nx {
            let hx = 0.5 * (dx[i - 1] + dx[i]);
            let hy = 0.5 * (dy[j - 1] + dy[j]);
            // u faces at x = x_i on rows j-1, j (only i in 1..nx can be active)
            push_link(&mut rows, grid.u_slot(i, j), grid.u_slot(i, j - 1), hx / hy);
            push_link(
                &mut rows,
                grid.v_slot(i, j).map(|k| nu + k),
                grid.v_slot(i - 1, j).map(|k| nu + k),
                hy / hx,
            );
        }
    }
    let n = grid.n_unknowns();
    let mut g = DMatrix::zeros(rows.len(), n);
    for (r, row) in rows.iter().enumerate() {
        for &(c, v) in row {
            g[(r, c)] += v;
        }
    }
    g
}

/// Cell flux matrix `(B w)_c = dy (u_E - u_W) + dx (v_N - v_S)`.
pub fn flux_matrix(grid: &MacGrid) -> DMatrix<f64> {
    let dx = spacings(grid.x_nodes());
    let dy = spacings(grid.y_nodes());
    let nu = grid.n_u();
    let mut b = DMatrix::zeros(grid.n_cells(), grid.n_unknowns());
    for (c, &(i, j)) in grid.cells().iter().enumerate() {
        if let Some(k) = grid.u_slot(i + 1, j) {
            b[(c, k)] += dy[j];
        }
        if let Some(k) = grid.u_slot(i, j) {
            b[(c, k)] -= dy[j];
        }
        if let Some(k) = grid.v_slot(i, j + 1) {
            b[(c, nu + k)] += dx[i];
        }
        if let Some(k) = grid.v_slot(i, j) {
            b[(c, nu + k)] -= dx[i];
        }
    }
    b
}

/// Minimal-energy solution for cell values `f`, re-balanced to zero mean.
/// Returns `None` if the KKT matrix is singular.
pub fn solve_dense(grid: &MacGrid, f: &[f64]) -> Option<DenseSolution> {
    let nc = grid.n_cells();
    let n = grid.n_unknowns();
    assert_eq!(f.len(), nc);
    let areas: Vec<f64> = (0..nc).map(|c| grid.cell_area(c)).collect();
    let total: f64 = areas.iter().sum();
    let mean = f.iter().zip(&areas).map(|(a, b)| a * b).sum::<f64>() / total;
    let fbar: Vec<f64> = f.iter().map(|v| v - mean).collect();

    let g = gradient_matrix(grid);
    let a = g.transpose() * &g;
    let b = flux_matrix(grid);
    let m = nc - 1;
    let size = n + m;
    let mut k = DMatrix::zeros(size, size);
    k.view_mut((0, 0), (n, n)).copy_from(&a);
    let b_red = b.rows(0, m);
    k.view_mut((n, 0), (m, n)).copy_from(&b_red);
    k.view_mut((0, n), (n, m)).copy_from(&b_red.transpose());
    let mut rhs = DVector::zeros(size);
    for c in 0..m {
        rhs[n + c] = areas[c] * fbar[c];
    }
    let sol = k.lu().solve(&rhs)?;
    let w = sol.rows(0, n).into_owned();
    let energy = (w.transpose() * &a * &w)[(0, 0)];
    let flux = &b * &w;
    let div_residual = (0..nc)
        .map(|c| (flux[c] / areas[c] - fbar[c]).abs())
        .fold(0.0, f64::max);
    Some(DenseSolution {
        u: w.rows(0, grid.n_u()).iter().copied().collect(),
        v: w.rows(grid.n_u(), grid.n_v()).iter().copied().collect(),
        gradient_norm: energy.max(0.0).sqrt(),
        div_residual,
    })
}

/// Random connected masked grid with at most `max_unknowns` face unknowns
/// (and at least one), with jittered node spacing.
pub fn random_masked_grid(rng: &mut ChaCha8Rng, max_unknowns: usize) -> MacGrid {
    loop {
        let nx = rng.random_range(2..=6usize);
        let ny = rng.random_range(2..=6usize);
        let nodes = |rng: &mut ChaCha8Rng, n: usize| {
            let mut s = 0.0;
            let mut out = vec![0.0];
            for _ in 0..n {
                s += rng.random_range(0.5..1.5);
                out.push(s);
            }
            out
        };
        let xs = nodes(rng, nx);
        let ys = nodes(rng, ny);
        let mask: Vec<bool> = (0..nx * ny).map(|_| rng.random_bool(0.8)).collect();
        if let Ok(g) = MacGrid::from_mask(&xs, &ys, &mask) {
            if g.n_unknowns() >= 1 && g.n_unknowns() <= max_unknowns && g.n_cells() >= 2 {
                return g;
            }
        }
    }
}
