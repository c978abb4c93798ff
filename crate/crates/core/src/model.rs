//! Background-velocity evaluation shared by the ray tracer and the
//! depth extrapolators.
//!
//! The interpolated quantity is the squared slowness `w = c^-2`, bilinear in
//! (x, z); gradients come from analytic differentiation of the bilinear
//! patch so the Hamiltonian and its derivatives stay mutually consistent.

use crate::error::{Error, Result};
use crate::grid::{AxisLabel, Grid2D};

pub struct ModelView<'a> {
    grid: &'a Grid2D,
    /// Squared slowness per grid node, same layout as the grid.
    w: Vec<f64>,
    c_min: f64,
    c_max: f64,
}

impl<'a> ModelView<'a> {
    pub fn new(grid: &'a Grid2D) -> Result<Self> {
        if grid.axes[0].label != AxisLabel::X || grid.axes[1].label != AxisLabel::Z {
            return Err(Error::Axis("velocity model axes must be labeled x, z".into()));
        }
        let c = grid.real()?;
        let mut c_min = f64::INFINITY;
        let mut c_max = 0.0f64;
        let mut w = Vec::with_capacity(c.len());
        for &v in c {
            if !(v > 0.0) {
                return Err(Error::Data("velocity model must be strictly positive".into()));
            }
            c_min = c_min.min(v);
            c_max = c_max.max(v);
            w.push(1.0 / (v * v));
        }
        Ok(ModelView { grid, w, c_min, c_max })
    }

    pub fn grid(&self) -> &Grid2D {
        self.grid
    }

    pub fn c_min(&self) -> f64 {
        self.c_min
    }

    pub fn c_max(&self) -> f64 {
        self.c_max
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.grid.axes[0].origin, self.grid.axes[0].end())
    }

    pub fn z_range(&self) -> (f64, f64) {
        (self.grid.axes[1].origin, self.grid.axes[1].end())
    }

    pub fn inside(&self, x: f64, z: f64) -> bool {
        let (x0, x1) = self.x_range();
        let (z0, z1) = self.z_range();
        x >= x0 && x <= x1 && z >= z0 && z <= z1
    }

    /// Cell coordinates clamped to the grid: (i, j, u, v) with u, v in [0, 1].
    fn locate(&self, x: f64, z: f64) -> (usize, usize, f64, f64) {
        let ax = &self.grid.axes[0];
        let az = &self.grid.axes[1];
        let fx = ax.index_of(x).clamp(0.0, (ax.n - 1) as f64);
        let fz = az.index_of(z).clamp(0.0, (az.n - 1) as f64);
        let i = (fx.floor() as usize).min(ax.n.saturating_sub(2));
        let j = (fz.floor() as usize).min(az.n.saturating_sub(2));
        if ax.n == 1 || az.n == 1 {
            // degenerate axes: treat as constant along that direction
            let i = fx.floor() as usize;
            let j = fz.floor() as usize;
            return (i.min(ax.n - 1), j.min(az.n - 1), 0.0, 0.0);
        }
        (i, j, fx - i as f64, fz - j as f64)
    }

    /// Squared slowness, bilinear.
    pub fn w_at(&self, x: f64, z: f64) -> f64 {
        let (i, j, u, v) = self.locate(x, z);
        let nz = self.grid.axes[1].n;
        if self.grid.axes[0].n == 1 || nz == 1 {
            return self.w[i * nz + j];
        }
        let w00 = self.w[i * nz + j];
        let w01 = self.w[i * nz + j + 1];
        let w10 = self.w[(i + 1) * nz + j];
        let w11 = self.w[(i + 1) * nz + j + 1];
        w00 * (1.0 - u) * (1.0 - v) + w10 * u * (1.0 - v) + w01 * (1.0 - u) * v + w11 * u * v
    }

    /// Analytic gradient of the bilinear squared-slowness patch.
    pub fn grad_w(&self, x: f64, z: f64) -> (f64, f64) {
        let (i, j, u, v) = self.locate(x, z);
        let nz = self.grid.axes[1].n;
        if self.grid.axes[0].n == 1 || nz == 1 {
            return (0.0, 0.0);
        }
        let w00 = self.w[i * nz + j];
        let w01 = self.w[i * nz + j + 1];
        let w10 = self.w[(i + 1) * nz + j];
        let w11 = self.w[(i + 1) * nz + j + 1];
        let dx = self.grid.axes[0].delta;
        let dz = self.grid.axes[1].delta;
        let dwdx = ((w10 - w00) * (1.0 - v) + (w11 - w01) * v) / dx;
        let dwdz = ((w01 - w00) * (1.0 - u) + (w11 - w10) * u) / dz;
        (dwdx, dwdz)
    }

    pub fn c_at(&self, x: f64, z: f64) -> f64 {
        1.0 / self.w_at(x, z).sqrt()
    }

    /// Reference velocity at depth `z`: the lateral minimum, which keeps the
    /// split-step space correction a pure phase of uniform sign.
    pub fn c_ref_at(&self, z: f64) -> f64 {
        let ax = &self.grid.axes[0];
        let mut c = f64::INFINITY;
        for i in 0..ax.n {
            c = c.min(self.c_at(ax.at(i), z));
        }
        c
    }

    /// Upper bound on |d(c^-2)/dx| over the grid (finite differences).
    pub fn lateral_gradient_bound(&self) -> f64 {
        let nx = self.grid.axes[0].n;
        let nz = self.grid.axes[1].n;
        let dx = self.grid.axes[0].delta;
        let mut bound = 0.0f64;
        for i in 0..nx.saturating_sub(1) {
            for j in 0..nz {
                let g = (self.w[(i + 1) * nz + j] - self.w[i * nz + j]).abs() / dx;
                bound = bound.max(g);
            }
        }
        bound
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Axis, GridValues};

    fn gradient_model() -> Grid2D {
        // c = 1500 + 0.5 z on a 5 x 9 grid
        let ax = Axis::new(5, 100.0, -200.0, AxisLabel::X).unwrap();
        let az = Axis::new(9, 50.0, 0.0, AxisLabel::Z).unwrap();
        let mut v = Vec::new();
        for _ in 0..5 {
            for j in 0..9 {
                v.push(1500.0 + 0.5 * az.at(j));
            }
        }
        Grid2D::new([ax, az], GridValues::Real(v)).unwrap()
    }

    #[test]
    fn bilinear_reproduces_grid_nodes_and_interpolates_w() {
        let g = gradient_model();
        let m = ModelView::new(&g).unwrap();
        assert!((m.c_at(-200.0, 0.0) - 1500.0).abs() < 1e-12);
        assert!((m.c_at(0.0, 400.0) - 1700.0).abs() < 1e-12);
        // between nodes the interpolation is linear in w = c^-2
        let w_mid = m.w_at(0.0, 25.0);
        let w0 = 1.0 / (1500.0f64 * 1500.0);
        let w1 = 1.0 / (1525.0f64 * 1525.0);
        assert!((w_mid - 0.5 * (w0 + w1)).abs() < 1e-18);
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let g = gradient_model();
        let m = ModelView::new(&g).unwrap();
        let (x, z) = (-30.0, 130.0);
        let h = 1e-2; // stays inside one bilinear patch
        let fd_z = (m.w_at(x, z + h) - m.w_at(x, z - h)) / (2.0 * h);
        let (gx, gz) = m.grad_w(x, z);
        assert!((fd_z - gz).abs() < 1e-8 * gz.abs());
        assert!(gx.abs() < 1e-18);
    }

    #[test]
    fn c_ref_is_lateral_minimum() {
        let g = gradient_model();
        let m = ModelView::new(&g).unwrap();
        assert!((m.c_ref_at(100.0) - 1550.0).abs() < 1e-9);
        assert_eq!(m.c_min(), 1500.0);
        assert_eq!(m.c_max(), 1700.0);
    }
}
