//! Rectilinear masked MAC grids.
//!
//! Cells `(i, j)` span `[xn[i], xn[i+1]] x [yn[j], yn[j+1]]`. A `u` face
//! `(i, j)` sits on the vertical line `x = xn[i]` between cells `(i-1, j)`
//! and `(i, j)`; a `v` face `(i, j)` sits on `y = yn[j]` between cells
//! `(i, j-1)` and `(i, j)`. A face is active iff both neighbours are
//! interior; inactive faces carry the zero boundary value. The constructor
//! pads the grid with one ring of exterior cells so every active face has
//! all its neighbours on the grid.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub(crate) const NONE: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct MacGrid {
    pub(crate) xn: Vec<f64>,
    pub(crate) yn: Vec<f64>,
    pub(crate) dx: Vec<f64>,
    pub(crate) dy: Vec<f64>,
    /// Cells per row (`x` direction) and per column.
    pub(crate) nx: usize,
    pub(crate) ny: usize,
    pub(crate) interior: Vec<bool>,
    /// Unknown index per cell, `NONE` for exterior cells.
    pub(crate) cell_index: Vec<usize>,
    pub(crate) cells: Vec<(usize, usize)>,
    /// Unknown index per `u` face (`(nx + 1) * ny` slots).
    pub(crate) u_index: Vec<usize>,
    pub(crate) u_faces: Vec<(usize, usize)>,
    /// Unknown index per `v` face (`nx * (ny + 1)` slots).
    pub(crate) v_index: Vec<usize>,
    pub(crate) v_faces: Vec<(usize, usize)>,
}

fn check_nodes(nodes: &[f64], axis: &str) -> Result<()> {
    if nodes.len() < 2 {
        return Err(Error::InvalidParams(alloc::format!("{axis} needs at least two nodes")));
    }
    if nodes.iter().any(|v| !v.is_finite()) || nodes.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParams(alloc::format!("{axis} nodes must be finite and strictly increasing")));
    }
    Ok(())
}

fn pad(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut out = Vec::with_capacity(n + 2);
    out.push(nodes[0] - (nodes[1] - nodes[0]));
    out.extend_from_slice(nodes);
    out.push(nodes[n - 1] + (nodes[n - 1] - nodes[n - 2]));
    out
}

impl MacGrid {
    /// Grid on the given nodes with `interior[j * nx + i]` marking cell `(i, j)`
    /// (`nx = xn.len() - 1`). A ring of exterior cells is added around it.
    pub fn from_mask(xn: &[f64], yn: &[f64], interior: &[bool]) -> Result<Self> {
        check_nodes(xn, "x")?;
        check_nodes(yn, "y")?;
        let (nx0, ny0) = (xn.len() - 1, yn.len() - 1);
        if interior.len() != nx0 * ny0 {
            return Err(Error::DimensionMismatch {
                expected: nx0 * ny0,
                got: interior.len(),
            });
        }
        let xn = pad(xn);
        let yn = pad(yn);
        let (nx, ny) = (nx0 + 2, ny0 + 2);
        let mut mask = vec![false; nx * ny];
        for j in 0..ny0 {
            for i in 0..nx0 {
                mask[(j + 1) * nx + i + 1] = interior[j * nx0 + i];
            }
        }
        Self::assemble(xn, yn, mask)
    }

    /// Marks cell `(i, j)` interior iff `inside(center)`.
    pub fn from_region<F: FnMut(f64, f64) -> bool>(xn: &[f64], yn: &[f64], mut inside: F) -> Result<Self> {
        check_nodes(xn, "x")?;
        check_nodes(yn, "y")?;
        let (nx0, ny0) = (xn.len() - 1, yn.len() - 1);
        let mut mask = Vec::with_capacity(nx0 * ny0);
        for j in 0..ny0 {
            let yc = 0.5 * (yn[j] + yn[j + 1]);
            for i in 0..nx0 {
                mask.push(inside(0.5 * (xn[i] + xn[i + 1]), yc));
            }
        }
        Self::from_mask(xn, yn, &mask)
    }

    fn assemble(xn: Vec<f64>, yn: Vec<f64>, interior: Vec<bool>) -> Result<Self> {
        let (nx, ny) = (xn.len() - 1, yn.len() - 1);
        let dx: Vec<f64> = xn.windows(2).map(|w| w[1] - w[0]).collect();
        let dy: Vec<f64> = yn.windows(2).map(|w| w[1] - w[0]).collect();
        let mut cell_index = vec![NONE; nx * ny];
        let mut cells = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                if interior[j * nx + i] {
                    cell_index[j * nx + i] = cells.len();
                    cells.push((i, j));
                }
            }
        }
        if cells.is_empty() {
            return Err(Error::invalid("grid has no interior cells"));
        }
        let is_in = |i: usize, j: usize| interior[j * nx + i];
        let mut u_index = vec![NONE; (nx + 1) * ny];
        let mut u_faces = Vec::new();
        for j in 0..ny {
            for i in 1..nx {
                if is_in(i - 1, j) && is_in(i, j) {
                    u_index[j * (nx + 1) + i] = u_faces.len();
                    u_faces.push((i, j));
                }
            }
        }
        let mut v_index = vec![NONE; nx * (ny + 1)];
        let mut v_faces = Vec::new();
        for j in 1..ny {
            for i in 0..nx {
                if is_in(i, j - 1) && is_in(i, j) {
                    v_index[j * nx + i] = v_faces.len();
                    v_faces.push((i, j));
                }
            }
        }
        let grid = MacGrid {
            xn,
            yn,
            dx,
            dy,
            nx,
            ny,
            interior,
            cell_index,
            cells,
            u_index,
            u_faces,
            v_index,
            v_faces,
        };
        let components = grid.components();
        if components != 1 {
            return Err(Error::DisconnectedInterior { components });
        }
        Ok(grid)
    }

    /// Connected components of interior cells joined through active faces.
    fn components(&self) -> usize {
        let n = self.cells.len();
        let mut seen = vec![false; n];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            queue.push_back(start);
            while let Some(c) = queue.pop_front() {
                let (i, j) = self.cells[c];
                let mut visit = |ii: usize, jj: usize| {
                    let k = self.cell_index[jj * self.nx + ii];
                    if k != NONE && !seen[k] {
                        seen[k] = true;
                        queue.push_back(k);
                    }
                };
                if i > 0 {
                    visit(i - 1, j);
                }
                if i + 1 < self.nx {
                    visit(i + 1, j);
                }
                if j > 0 {
                    visit(i, j - 1);
                }
                if j + 1 < self.ny {
                    visit(i, j + 1);
                }
            }
        }
        count
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_u(&self) -> usize {
        self.u_faces.len()
    }

    pub fn n_v(&self) -> usize {
        self.v_faces.len()
    }

    pub fn n_unknowns(&self) -> usize {
        self.n_u() + self.n_v()
    }

    /// Padded node coordinates.
    pub fn x_nodes(&self) -> &[f64] {
        &self.xn
    }

    pub fn y_nodes(&self) -> &[f64] {
        &self.yn
    }

    /// Padded cell counts `(nx, ny)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn is_interior(&self, i: usize, j: usize) -> bool {
        i < self.nx && j < self.ny && self.interior[j * self.nx + i]
    }

    /// Interior cells `(i, j)` in unknown order.
    pub fn cells(&self) -> &[(usize, usize)] {
        &self.cells
    }

    pub fn u_faces(&self) -> &[(usize, usize)] {
        &self.u_faces
    }

    pub fn v_faces(&self) -> &[(usize, usize)] {
        &self.v_faces
    }

    pub fn u_slot(&self, i: usize, j: usize) -> Option<usize> {
        if i > self.nx || j >= self.ny {
            return None;
        }
        let k = self.u_index[j * (self.nx + 1) + i];
        (k != NONE).then_some(k)
    }

    pub fn v_slot(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.nx || j > self.ny {
            return None;
        }
        let k = self.v_index[j * self.nx + i];
        (k != NONE).then_some(k)
    }

    pub fn cell_area(&self, c: usize) -> f64 {
        let (i, j) = self.cells[c];
        self.dx[i] * self.dy[j]
    }

    pub fn cell_center(&self, c: usize) -> (f64, f64) {
        let (i, j) = self.cells[c];
        (0.5 * (self.xn[i] + self.xn[i + 1]), 0.5 * (self.yn[j] + self.yn[j + 1]))
    }

    pub fn cell_spacing(&self, c: usize) -> (f64, f64) {
        let (i, j) = self.cells[c];
        (self.dx[i], self.dy[j])
    }

    /// Pairs `(a, b, weight)` of the `u` gradient energy `sum w (u_a - u_b)^2`;
    /// `NONE` stands for a zero boundary value.
    pub(crate) fn u_pairs(&self) -> Vec<(usize, usize, f64)> {
        let (nx, ny) = (self.nx, self.ny);
        let slot = |i: usize, j: usize| self.u_index[j * (nx + 1) + i];
        let mut pairs = Vec::new();
        for &(i, j) in &self.cells {
            let (a, b) = (slot(i, j), slot(i + 1, j));
            if a != NONE || b != NONE {
                pairs.push((a, b, self.dy[j] / self.dx[i]));
            }
        }
        for j in 0..ny - 1 {
            for i in 1..nx {
                let (a, b) = (slot(i, j), slot(i, j + 1));
                if a != NONE || b != NONE {
                    let wx = 0.5 * (self.dx[i - 1] + self.dx[i]);
                    let hy = 0.5 * (self.dy[j] + self.dy[j + 1]);
                    pairs.push((a, b, wx / hy));
                }
            }
        }
        pairs
    }

    pub(crate) fn v_pairs(&self) -> Vec<(usize, usize, f64)> {
        let (nx, ny) = (self.nx, self.ny);
        let slot = |i: usize, j: usize| self.v_index[j * nx + i];
        let mut pairs = Vec::new();
        for &(i, j) in &self.cells {
            let (a, b) = (slot(i, j), slot(i, j + 1));
            if a != NONE || b != NONE {
                pairs.push((a, b, self.dx[i] / self.dy[j]));
            }
        }
        for j in 1..ny {
            for i in 0..nx - 1 {
                let (a, b) = (slot(i, j), slot(i + 1, j));
                if a != NONE || b != NONE {
                    let wy = 0.5 * (self.dy[j - 1] + self.dy[j]);
                    let hx = 0.5 * (self.dx[i] + self.dx[i + 1]);
                    pairs.push((a, b, wy / hx));
                }
            }
        }
        pairs
    }

    /// `(B u)_c = dy (u_E - u_W) + dx (v_N - v_S)`: cell flux, area times divergence.
    pub fn divergence(&self, u: &[f64], v: &[f64], out: &mut [f64]) {
        let nx = self.nx;
        let uval = |i: usize, j: usize| {
            let k = self.u_index[j * (nx + 1) + i];
            if k == NONE {
                0.0
            } else {
                u[k]
            }
        };
        let vval = |i: usize, j: usize| {
            let k = self.v_index[j * nx + i];
            if k == NONE {
                0.0
            } else {
                v[k]
            }
        };
        for (c, &(i, j)) in self.cells.iter().enumerate() {
            out[c] = self.dy[j] * (uval(i + 1, j) - uval(i, j)) + self.dx[i] * (vval(i, j + 1) - vval(i, j));
        }
    }

    /// Transpose of [`MacGrid::divergence`].
    pub fn divergence_transpose(&self, mu: &[f64], u: &mut [f64], v: &mut [f64]) {
        let nx = self.nx;
        for (k, &(i, j)) in self.u_faces.iter().enumerate() {
            let west = self.cell_index[j * nx + i - 1];
            let east = self.cell_index[j * nx + i];
            u[k] = self.dy[j] * (mu[west] - mu[east]);
        }
        for (k, &(i, j)) in self.v_faces.iter().enumerate() {
            let south = self.cell_index[(j - 1) * nx + i];
            let north = self.cell_index[j * nx + i];
            v[k] = self.dx[i] * (mu[south] - mu[north]);
        }
    }

    /// `u^T A u + v^T A v`, the discrete `||grad u||_2^2`.
    pub fn energy(&self, u: &[f64], v: &[f64]) -> f64 {
        let sum = |pairs: &[(usize, usize, f64)], w: &[f64]| {
            crate::special::compensated_sum(pairs.iter().map(|&(a, b, c)| {
                let va = if a == NONE { 0.0 } else { w[a] };
                let vb = if b == NONE { 0.0 } else { w[b] };
                c * (va - vb) * (va - vb)
            }))
        };
        sum(&self.u_pairs(), u) + sum(&self.v_pairs(), v)
    }

    /// Discretely divergence-free field from node values `psi` of a stream
    /// function: `u = d psi / dy`, `v = -d psi / dx`. `psi` is indexed
    /// `j * (nx + 1) + i` on padded nodes and must vanish at every node
    /// touching an exterior cell for the result to respect the boundary.
    pub fn curl(&self, psi: &[f64], u: &mut [f64], v: &mut [f64]) {
        let nx = self.nx;
        let node = |i: usize, j: usize| psi[j * (nx + 1) + i];
        for (k, &(i, j)) in self.u_faces.iter().enumerate() {
            u[k] = (node(i, j + 1) - node(i, j)) / self.dy[j];
        }
        for (k, &(i, j)) in self.v_faces.iter().enumerate() {
            v[k] = -(node(i + 1, j) - node(i, j)) / self.dx[i];
        }
    }

    /// Whether all four cells around padded node `(i, j)` are interior.
    pub fn node_is_inner(&self, i: usize, j: usize) -> bool {
        i >= 1 && j >= 1 && i < self.nx && j < self.ny
            && self.interior[(j - 1) * self.nx + i - 1]
            && self.interior[(j - 1) * self.nx + i]
            && self.interior[j * self.nx + i - 1]
            && self.interior[j * self.nx + i]
    }
}
