//! Uniform structured 3D grid and node-centered scalar fields.
//!
//! Nodes are stored x-fastest: linear index `(k * ny + j) * nx + i` for node
//! `(i, j, k)` at position `origin + h * (i, j, k)`. All fields in the crate
//! share this layout, which also matches legacy VTK structured-points order.

use crate::error::{CoreError, Result};

/// Physical unit carried by a [`ScalarField`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unit {
    /// g/mm³
    Concentration,
    /// mm
    Length,
    /// mm/h
    Velocity,
    Dimensionless,
}

/// Uniform isotropic node grid over an axis-aligned box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StructuredGrid {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    /// Node spacing in mm, identical along all three axes.
    pub h: f64,
    pub origin: [f64; 3],
}

/// Builds a grid covering `[0, extent]` per axis with spacing `h`.
///
/// Node counts are `floor(extent/h) + 1`; at least 3 nodes per axis are
/// required so that central differences are defined everywhere.
pub fn make_grid(extent: [f64; 3], h: f64) -> Result<StructuredGrid> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(CoreError::invalid(format!("grid spacing must be positive, got {h}")));
    }
    let mut dims = [0usize; 3];
    for (a, &e) in extent.iter().enumerate() {
        if !(e > 0.0) || !e.is_finite() {
            return Err(CoreError::invalid(format!("grid extent must be positive, got {e}")));
        }
        // small slack so that exact multiples of h are not truncated by rounding
        let n = (e / h + 1e-9).floor() as usize + 1;
        if n < 3 {
            return Err(CoreError::invalid(format!(
                "extent {e} with spacing {h} yields only {n} nodes on axis {a}; at least 3 required"
            )));
        }
        dims[a] = n;
    }
    Ok(StructuredGrid {
        nx: dims[0],
        ny: dims[1],
        nz: dims[2],
        h,
        origin: [0.0; 3],
    })
}

impl StructuredGrid {
    pub fn node_count(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.ny + j) * self.nx + i
    }

    #[inline]
    pub fn node_pos(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [
            self.origin[0] + self.h * i as f64,
            self.origin[1] + self.h * j as f64,
            self.origin[2] + self.h * k as f64,
        ]
    }

    /// Inverse of [`Self::index`].
    #[inline]
    pub fn unravel(&self, idx: usize) -> (usize, usize, usize) {
        let i = idx % self.nx;
        let j = (idx / self.nx) % self.ny;
        let k = idx / (self.nx * self.ny);
        (i, j, k)
    }

    pub fn max_corner(&self) -> [f64; 3] {
        [
            self.origin[0] + self.h * (self.nx - 1) as f64,
            self.origin[1] + self.h * (self.ny - 1) as f64,
            self.origin[2] + self.h * (self.nz - 1) as f64,
        ]
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        let hi = self.max_corner();
        let slack = 1e-9 * self.h;
        (0..3).all(|a| p[a] >= self.origin[a] - slack && p[a] <= hi[a] + slack)
    }

    /// Clamps a point to the grid bounding box, returning whether it moved.
    pub fn clamp_point(&self, p: [f64; 3]) -> ([f64; 3], bool) {
        let hi = self.max_corner();
        let mut q = p;
        let mut moved = false;
        for a in 0..3 {
            let c = q[a].clamp(self.origin[a], hi[a]);
            if c != q[a] {
                moved = true;
                q[a] = c;
            }
        }
        (q, moved)
    }
}

/// One scalar value per grid node, tagged with its physical unit.
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: StructuredGrid,
    unit: Unit,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn constant(grid: StructuredGrid, unit: Unit, value: f64) -> Self {
        ScalarField {
            grid,
            unit,
            values: vec![value; grid.node_count()],
        }
    }

    /// Builds a field by evaluating `f` at every node position.
    pub fn from_fn(grid: StructuredGrid, unit: Unit, mut f: impl FnMut([f64; 3]) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.node_count());
        for k in 0..grid.nz {
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    values.push(f(grid.node_pos(i, j, k)));
                }
            }
        }
        ScalarField { grid, unit, values }
    }

    pub fn from_values(grid: StructuredGrid, unit: Unit, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(CoreError::invalid(format!(
                "field has {} values but grid has {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NumericalFailure("field contains non-finite values".into()));
        }
        Ok(ScalarField { grid, unit, values })
    }

    pub fn grid(&self) -> &StructuredGrid {
        &self.grid
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.index(i, j, k)]
    }

    /// Trilinear interpolation at a physical point inside the bounding box.
    ///
    /// Weights are formed as `(1-t)*a + t*b` so node values and linear fields
    /// are reproduced to rounding.
    pub fn sample(&self, p: [f64; 3]) -> Result<f64> {
        let g = &self.grid;
        let dims = g.dims();
        let mut cell = [0usize; 3];
        let mut t = [0f64; 3];
        for a in 0..3 {
            let u = (p[a] - g.origin[a]) / g.h;
            let top = (dims[a] - 1) as f64;
            if u < -1e-9 || u > top + 1e-9 {
                return Err(CoreError::OutOfDomain(p[0], p[1], p[2]));
            }
            let uc = u.clamp(0.0, top);
            let i0 = (uc.floor() as usize).min(dims[a] - 2);
            cell[a] = i0;
            t[a] = uc - i0 as f64;
        }
        let (i, j, k) = (cell[0], cell[1], cell[2]);
        let (tx, ty, tz) = (t[0], t[1], t[2]);
        let v = |di: usize, dj: usize, dk: usize| self.values[g.index(i + di, j + dj, k + dk)];
        let lerp = |a: f64, b: f64, t: f64| (1.0 - t) * a + t * b;
        let c00 = lerp(v(0, 0, 0), v(1, 0, 0), tx);
        let c10 = lerp(v(0, 1, 0), v(1, 1, 0), tx);
        let c01 = lerp(v(0, 0, 1), v(1, 0, 1), tx);
        let c11 = lerp(v(0, 1, 1), v(1, 1, 1), tx);
        let c0 = lerp(c00, c10, ty);
        let c1 = lerp(c01, c11, ty);
        Ok(lerp(c0, c1, tz))
    }
}

/// Free-function form of [`ScalarField::sample`].
pub fn trilinear_sample(field: &ScalarField, p: [f64; 3]) -> Result<f64> {
    field.sample(p)
}
