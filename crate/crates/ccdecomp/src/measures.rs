//! Weighted point clouds treated as finite positive measures on `R^N`.
//!
//! A [`DiscreteMeasure`] is a finite list of atoms (point, weight); all mass
//! queries reduce to weighted counting. Balls are closed: an atom at distance
//! exactly `r` from the center belongs to `B(x, r)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sobolev::GridFunction;

/// A point of `R^N` with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidInput("points need at least one coordinate".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite coordinate in {coords:?}")));
        }
        Ok(Point { coords })
    }

    /// The origin of `R^dim`.
    pub fn origin(dim: usize) -> Self {
        Point { coords: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Euclidean distance.
    pub fn dist(&self, other: &Point) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn translate(&self, shift: &[f64]) -> Result<Point> {
        if shift.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: shift.len() });
        }
        Point::new(self.coords.iter().zip(shift).map(|(a, b)| a + b).collect())
    }
}

/// A closed ball `B(center, radius)` with `radius > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidInput(format!("ball radius must be finite and > 0, got {radius}")));
        }
        Ok(Ball { center, radius })
    }

    /// Membership in the closed ball.
    pub fn contains(&self, p: &Point) -> bool {
        self.center.dist(p) <= self.radius
    }
}

/// A finite positive measure given by atoms with nonnegative weights.
///
/// Atoms with weight exactly zero are dropped on construction; they affect no
/// query. Coincident atoms are kept as-is (no deduplication).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    dim: usize,
    points: Vec<Point>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(dim: usize, points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("ambient dimension must be >= 1".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::InvalidInput(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        for p in &points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.dim() });
            }
        }
        for &w in &weights {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidInput(format!("weights must be finite and >= 0, got {w}")));
            }
        }
        let (points, weights) = points
            .into_iter()
            .zip(weights)
            .filter(|(_, w)| *w > 0.0)
            .unzip();
        Ok(DiscreteMeasure { dim, points, weights })
    }

    /// The empty measure on `R^dim`.
    pub fn empty(dim: usize) -> Self {
        DiscreteMeasure { dim, points: Vec::new(), weights: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Total mass `mu(R^N)`; zero for the empty measure.
    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Mass inside a closed ball. Atoms are summed in index order, so the
    /// result is bitwise reproducible.
    pub fn ball_mass(&self, ball: &Ball) -> Result<f64> {
        if ball.center.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: ball.center.dim() });
        }
        Ok(self
            .points
            .iter()
            .zip(&self.weights)
            .filter(|(p, _)| ball.contains(p))
            .map(|(_, w)| w)
            .sum())
    }

    /// The restriction `mu|B`: keeps exactly the atoms inside the ball.
    pub fn restrict_ball(&self, ball: &Ball) -> Result<DiscreteMeasure> {
        if ball.center.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: ball.center.dim() });
        }
        let (points, weights) = self
            .points
            .iter()
            .zip(&self.weights)
            .filter(|(p, _)| ball.contains(p))
            .map(|(p, w)| (p.clone(), *w))
            .unzip();
        Ok(DiscreteMeasure { dim: self.dim, points, weights })
    }

    /// The restriction to the complement of a finite union of balls.
    pub fn restrict_outside_balls(&self, balls: &[Ball]) -> Result<DiscreteMeasure> {
        for b in balls {
            if b.center.dim() != self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, got: b.center.dim() });
            }
        }
        let (points, weights) = self
            .points
            .iter()
            .zip(&self.weights)
            .filter(|(p, _)| !balls.iter().any(|b| b.contains(p)))
            .map(|(p, w)| (p.clone(), *w))
            .unzip();
        Ok(DiscreteMeasure { dim: self.dim, points, weights })
    }

    /// Scales every weight by `c >= 0`.
    pub fn scale_weights(&self, c: f64) -> Result<DiscreteMeasure> {
        if !c.is_finite() || c < 0.0 {
            return Err(Error::InvalidInput(format!("scale factor must be finite and >= 0, got {c}")));
        }
        DiscreteMeasure::new(
            self.dim,
            self.points.clone(),
            self.weights.iter().map(|w| w * c).collect(),
        )
    }

    /// Bounding box as `(min, max)` per axis, or `None` for the empty measure.
    pub fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        if self.is_empty() {
            return None;
        }
        let mut lo = self.points[0].coords().to_vec();
        let mut hi = lo.clone();
        for p in &self.points[1..] {
            for (axis, &c) in p.coords().iter().enumerate() {
                lo[axis] = lo[axis].min(c);
                hi[axis] = hi[axis].max(c);
            }
        }
        Some((lo, hi))
    }

    /// Diameter of the bounding box (zero for <= 1 atom).
    pub fn bbox_diameter(&self) -> f64 {
        match self.bounding_box() {
            None => 0.0,
            Some((lo, hi)) => lo
                .iter()
                .zip(&hi)
                .map(|(a, b)| (b - a) * (b - a))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Smallest strictly positive pairwise atom distance, if any.
    pub fn min_positive_gap(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for i in 0..self.points.len() {
            for j in (i + 1)..self.points.len() {
                let d = self.points[i].dist(&self.points[j]);
                if d > 0.0 && best.map_or(true, |b| d < b) {
                    best = Some(d);
                }
            }
        }
        best
    }
}

/// Converts a nonnegative grid sample into the measure with one atom per node,
/// weighted by `value * h^N` (a Riemann sum of the density). Zero-weight nodes
/// are dropped, so sparse densities stay cheap.
pub fn measure_from_grid_density(g: &GridFunction) -> Result<DiscreteMeasure> {
    let h = g.spacing();
    let cell = h.powi(g.dim() as i32);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (idx, &v) in g.values().iter().enumerate() {
        if v < 0.0 {
            return Err(Error::InvalidInput(format!(
                "density must be nonnegative, found {v} at node {idx}"
            )));
        }
        if v > 0.0 {
            points.push(Point::new(g.node_coord(idx))?);
            weights.push(v * cell);
        }
    }
    if points.is_empty() {
        return Ok(DiscreteMeasure::empty(g.dim()));
    }
    DiscreteMeasure::new(g.dim(), points, weights)
}

/// A finite sequence of measures on a common `R^N`, with optional integer
/// labels carried through from input files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSequence {
    dim: usize,
    items: Vec<DiscreteMeasure>,
    labels: Option<Vec<i64>>,
}

impl MeasureSequence {
    pub fn new(items: Vec<DiscreteMeasure>) -> Result<Self> {
        let dim = items
            .first()
            .ok_or_else(|| Error::InvalidInput("a measure sequence must be nonempty".into()))?
            .dim();
        for m in &items {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: m.dim() });
            }
        }
        Ok(MeasureSequence { dim, items, labels: None })
    }

    pub fn with_labels(items: Vec<DiscreteMeasure>, labels: Vec<i64>) -> Result<Self> {
        if items.len() != labels.len() {
            return Err(Error::InvalidInput(format!(
                "{} measures but {} labels",
                items.len(),
                labels.len()
            )));
        }
        let mut seq = MeasureSequence::new(items)?;
        seq.labels = Some(labels);
        Ok(seq)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[DiscreteMeasure] {
        &self.items
    }

    pub fn get(&self, i: usize) -> &DiscreteMeasure {
        &self.items[i]
    }

    pub fn labels(&self) -> Option<&[i64]> {
        self.labels.as_deref()
    }

    /// A uniform mass bound `M = max_n mu_n(R^N)`.
    pub fn mass_bound(&self) -> f64 {
        self.items.iter().map(|m| m.total_mass()).fold(0.0, f64::max)
    }
}
