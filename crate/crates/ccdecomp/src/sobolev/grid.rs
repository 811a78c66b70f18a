//! Uniform grids and grid-sampled functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometry of a uniform axis-aligned grid: `shape[a]` nodes along axis `a`
/// with spacing `h`, node `(0, ..., 0)` sitting at `origin`. Values are stored
/// row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    dim: usize,
    shape: Vec<usize>,
    spacing: f64,
    origin: Vec<f64>,
}

impl GridGeometry {
    pub fn new(dim: usize, shape: Vec<usize>, spacing: f64, origin: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("grid dimension must be >= 1".into()));
        }
        if shape.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: shape.len() });
        }
        if origin.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: origin.len() });
        }
        if shape.iter().any(|&s| s < 3) {
            return Err(Error::InvalidInput(
                "each grid axis needs at least 3 nodes for difference stencils".into(),
            ));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::InvalidInput(format!("grid spacing must be finite and > 0, got {spacing}")));
        }
        if origin.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("grid origin must be finite".into()));
        }
        Ok(GridGeometry { dim, shape, spacing, origin })
    }

    /// A cube grid with `side` nodes per axis, centered at the origin of `R^dim`.
    pub fn centered_cube(dim: usize, side: usize, spacing: f64) -> Result<Self> {
        let half = (side as f64 - 1.0) / 2.0 * spacing;
        GridGeometry::new(dim, vec![side; dim], spacing, vec![-half; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn node_count(&self) -> usize {
        self.shape.iter().product()
    }

    /// Volume element `h^N` of the Riemann sum.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// Strides of the row-major layout (last axis fastest).
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.dim];
        for a in (0..self.dim.saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.shape[a + 1];
        }
        s
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.dim);
        let strides = self.strides();
        multi.iter().zip(&strides).map(|(m, s)| m * s).sum()
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let mut rem = flat;
        let mut multi = vec![0usize; self.dim];
        for a in (0..self.dim).rev() {
            multi[a] = rem % self.shape[a];
            rem /= self.shape[a];
        }
        multi
    }

    /// Coordinates of the node with flat index `flat`.
    pub fn node_coord_of(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .zip(&self.origin)
            .map(|(m, o)| o + *m as f64 * self.spacing)
            .collect()
    }

    /// Coordinate range `[lo, hi]` covered by the nodes of one axis.
    pub fn axis_range(&self, axis: usize) -> (f64, f64) {
        let lo = self.origin[axis];
        (lo, lo + (self.shape[axis] - 1) as f64 * self.spacing)
    }

    /// The grid node nearest to `x`, clamped to the grid, as a multi-index.
    pub fn nearest_node(&self, x: &[f64]) -> Result<Vec<usize>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(x.iter()
            .enumerate()
            .map(|(a, &c)| {
                let raw = ((c - self.origin[a]) / self.spacing).round();
                raw.clamp(0.0, (self.shape[a] - 1) as f64) as usize
            })
            .collect())
    }
}

/// A function sampled on a uniform grid, extended by zero outside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    geometry: GridGeometry,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(geometry: GridGeometry, values: Vec<f64>) -> Result<Self> {
        if values.len() != geometry.node_count() {
            return Err(Error::InvalidInput(format!(
                "expected {} node values, got {}",
                geometry.node_count(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("grid values must be finite".into()));
        }
        Ok(GridFunction { geometry, values })
    }

    pub fn zeros(geometry: &GridGeometry) -> Self {
        GridFunction {
            geometry: geometry.clone(),
            values: vec![0.0; geometry.node_count()],
        }
    }

    /// Samples `f` at every node.
    pub fn from_fn(geometry: &GridGeometry, mut f: impl FnMut(&[f64]) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(geometry.node_count());
        for flat in 0..geometry.node_count() {
            values.push(f(&geometry.node_coord_of(flat)));
        }
        GridFunction::new(geometry.clone(), values)
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn dim(&self) -> usize {
        self.geometry.dim
    }

    pub fn spacing(&self) -> f64 {
        self.geometry.spacing
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn node_coord(&self, flat: usize) -> Vec<f64> {
        self.geometry.node_coord_of(flat)
    }

    pub fn same_geometry(&self, other: &GridFunction) -> bool {
        self.geometry == other.geometry
    }

    fn check_same_geometry(&self, other: &GridFunction) -> Result<()> {
        if !self.same_geometry(other) {
            return Err(Error::GeometryMismatch(format!(
                "{:?} vs {:?}",
                self.geometry, other.geometry
            )));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<GridFunction> {
        GridFunction::new(self.geometry.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<GridFunction> {
        self.check_same_geometry(other)?;
        GridFunction::new(
            self.geometry.clone(),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Result<GridFunction> {
        self.map(|v| c * v)
    }

    /// Riemann sum `sum_i g(v_i) * h^N`.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        let cell = self.geometry.cell_volume();
        self.values.iter().map(|&v| g(v)).sum::<f64>() * cell
    }

    /// `int |u|^p`.
    pub fn lp_mass(&self, p: f64) -> f64 {
        self.integrate(|v| v.abs().powf(p))
    }

    /// `(int |u|^q)^(1/q)`.
    pub fn lq_norm(&self, q: f64) -> f64 {
        self.lp_mass(q).powf(1.0 / q)
    }

    /// `W^{1,p}` norm `(int |grad u|^p + |u|^p)^(1/p)`.
    pub fn w1p_norm(&self, p: f64) -> f64 {
        let g = gradient_magnitude(self);
        (g.lp_mass(p) + self.lp_mass(p)).powf(1.0 / p)
    }

    /// Translation by whole nodes: the result takes at node `i` the value this
    /// function has at `i - offset`, with zero fill where that exits the grid.
    /// This realizes `u(x - offset * h)` exactly.
    pub fn shift_nodes(&self, offset: &[i64]) -> Result<GridFunction> {
        if offset.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: offset.len() });
        }
        let geom = &self.geometry;
        let mut out = vec![0.0; self.values.len()];
        let shape = geom.shape();
        'node: for flat in 0..self.values.len() {
            let multi = geom.multi_index(flat);
            let mut src = Vec::with_capacity(multi.len());
            for a in 0..multi.len() {
                let s = multi[a] as i64 - offset[a];
                if s < 0 || s >= shape[a] as i64 {
                    continue 'node;
                }
                src.push(s as usize);
            }
            out[flat] = self.values[geom.flat_index(&src)];
        }
        GridFunction::new(geom.clone(), out)
    }

    /// Zeroes every node with `|x - center| > radius` (closed-ball truncation).
    pub fn truncate_ball(&self, center: &[f64], radius: f64) -> Result<GridFunction> {
        if center.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: center.len() });
        }
        let mut out = self.clone();
        for flat in 0..out.values.len() {
            let coord = out.geometry.node_coord_of(flat);
            let d2: f64 = coord
                .iter()
                .zip(center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d2.sqrt() > radius {
                out.values[flat] = 0.0;
            }
        }
        Ok(out)
    }
}

/// Finite-difference gradient: central differences in the interior, one-sided
/// at the boundary. Returns one component per axis.
pub fn gradient(u: &GridFunction) -> Vec<GridFunction> {
    let geom = u.geometry();
    let h = geom.spacing();
    let shape = geom.shape().to_vec();
    let strides = geom.strides();
    let v = u.values();
    let mut comps = Vec::with_capacity(geom.dim());
    for a in 0..geom.dim() {
        let stride = strides[a];
        let len = shape[a];
        let mut d = vec![0.0; v.len()];
        for (flat, slot) in d.iter_mut().enumerate() {
            let pos = (flat / stride) % len;
            *slot = if pos == 0 {
                (v[flat + stride] - v[flat]) / h
            } else if pos == len - 1 {
                (v[flat] - v[flat - stride]) / h
            } else {
                (v[flat + stride] - v[flat - stride]) / (2.0 * h)
            };
        }
        comps.push(GridFunction { geometry: geom.clone(), values: d });
    }
    comps
}

/// Pointwise Euclidean norm of the finite-difference gradient.
pub fn gradient_magnitude(u: &GridFunction) -> GridFunction {
    let comps = gradient(u);
    let mut mag = vec![0.0; u.values().len()];
    for c in &comps {
        for (m, &d) in mag.iter_mut().zip(c.values()) {
            *m += d * d;
        }
    }
    for m in mag.iter_mut() {
        *m = m.sqrt();
    }
    GridFunction { geometry: u.geometry().clone(), values: mag }
}
