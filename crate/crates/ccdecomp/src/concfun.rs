//! Concentration functions `q(t) = sup_x mu(B(x, t))` over a fixed radius
//! grid, their tail-based limits along a sequence, diagonal scale selection
//! for arrays of nondecreasing rows, and a Helly-type search for a pointwise
//! convergent subsequence of curves.
//!
//! The supremum is taken over a finite candidate set: the atom locations
//! themselves (always), optionally augmented by a uniform lattice over the
//! bounding box. Atom-centered candidates recover the true supremum up to a
//! factor of two in the radius: any ball is covered by the ball of twice the
//! radius centered at one of its atoms.
//!
//! The indexed path and the brute-force oracle enumerate the same candidates
//! in the same order and add the same weights in the same (index) order, so
//! they agree bitwise, ties included.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{DiscreteMeasure, MeasureSequence, Point};

/// Atoms above this count refuse the quadratic brute-force path.
pub const BRUTE_FORCE_ATOM_LIMIT: usize = 5000;

/// A strictly increasing grid of positive radii (at least two entries).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusGrid {
    radii: Vec<f64>,
}

impl RadiusGrid {
    pub const DEFAULT_POINTS: usize = 32;

    pub fn new(radii: Vec<f64>) -> Result<Self> {
        if radii.len() < 2 {
            return Err(Error::InvalidInput("a radius grid needs at least two radii".into()));
        }
        if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::InvalidInput("radii must be finite and > 0".into()));
        }
        if radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("radii must be strictly increasing".into()));
        }
        Ok(RadiusGrid { radii })
    }

    /// Geometric progression from `min` to `max` (inclusive) with `count` points.
    pub fn geometric(min: f64, max: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidInput("a radius grid needs at least two radii".into()));
        }
        if !(min > 0.0) || !(max > min) || !min.is_finite() || !max.is_finite() {
            return Err(Error::InvalidInput(format!(
                "geometric grid needs 0 < min < max, got min={min}, max={max}"
            )));
        }
        let ratio = max / min;
        let mut radii: Vec<f64> = (0..count)
            .map(|i| min * ratio.powf(i as f64 / (count - 1) as f64))
            .collect();
        radii[0] = min;
        *radii.last_mut().unwrap() = max;
        RadiusGrid::new(radii)
    }

    /// Default grid for a single measure: geometric from half the smallest
    /// positive atom gap up to twice the bounding-box diameter, with fallbacks
    /// for degenerate clouds.
    pub fn default_for_measure(m: &DiscreteMeasure) -> Self {
        Self::from_scales(m.min_positive_gap(), positive(m.bbox_diameter()))
    }

    /// Default grid for a sequence. The upper end uses the *smallest* positive
    /// bounding-box diameter over the sequence: tails of separating families
    /// keep growing, and a grid chasing the largest support would evaluate the
    /// limit in the wrong order (radius growing with the index instead of
    /// staying fixed while the index grows).
    pub fn default_for_sequence(seq: &MeasureSequence) -> Self {
        let gap = seq
            .items()
            .iter()
            .filter_map(|m| m.min_positive_gap())
            .fold(None, |acc: Option<f64>, g| Some(acc.map_or(g, |a| a.min(g))));
        let diam = seq
            .items()
            .iter()
            .filter_map(|m| positive(m.bbox_diameter()))
            .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.min(d))));
        Self::from_scales(gap, diam)
    }

    fn from_scales(gap: Option<f64>, diam: Option<f64>) -> Self {
        let r_max = diam.map_or(2.0, |d| 2.0 * d);
        let mut r_min = gap.map_or(r_max / 64.0, |g| g / 2.0);
        if !(r_min < r_max) {
            r_min = r_max / 64.0;
        }
        RadiusGrid::geometric(r_min, r_max, Self::DEFAULT_POINTS)
            .expect("scales are positive and ordered by construction")
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn max_radius(&self) -> f64 {
        *self.radii.last().unwrap()
    }
}

fn positive(x: f64) -> Option<f64> {
    if x > 0.0 {
        Some(x)
    } else {
        None
    }
}

/// Where the supremum over centers is searched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CenterStrategy {
    /// Atom locations only (the default; factor-two radius slack).
    Atoms,
    /// Atom locations plus a uniform `per_axis^N` lattice over the bounding box.
    AtomsAndGrid { per_axis: usize },
}

impl Default for CenterStrategy {
    fn default() -> Self {
        CenterStrategy::Atoms
    }
}

fn candidate_points(m: &DiscreteMeasure, strategy: &CenterStrategy) -> Vec<Point> {
    let mut candidates: Vec<Point> = m.points().to_vec();
    if let CenterStrategy::AtomsAndGrid { per_axis } = strategy {
        if let (Some((lo, hi)), true) = (m.bounding_box(), *per_axis >= 1) {
            let dim = m.dim();
            let total: usize = (*per_axis).pow(dim as u32);
            for flat in 0..total {
                let mut rem = flat;
                let mut coords = vec![0.0; dim];
                for a in (0..dim).rev() {
                    let i = rem % per_axis;
                    rem /= per_axis;
                    coords[a] = if *per_axis == 1 {
                        0.5 * (lo[a] + hi[a])
                    } else {
                        lo[a] + (hi[a] - lo[a]) * i as f64 / (*per_axis as f64 - 1.0)
                    };
                }
                candidates.push(Point::new(coords).expect("bounding box coords are finite"));
            }
        }
    }
    candidates
}

/// Uniform bucket grid over the atoms with cell size equal to the query
/// radius; a ball query scans the 3^N neighboring cells. Collected atom
/// indices are sorted before summing so results match the brute-force scan
/// bit for bit.
struct BucketIndex<'a> {
    measure: &'a DiscreteMeasure,
    cell: f64,
    map: HashMap<Vec<i64>, Vec<usize>>,
    scratch: Vec<usize>,
}

impl<'a> BucketIndex<'a> {
    fn build(measure: &'a DiscreteMeasure, cell: f64) -> Self {
        let mut map: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for (i, p) in measure.points().iter().enumerate() {
            map.entry(cell_of(p.coords(), cell)).or_default().push(i);
        }
        BucketIndex { measure, cell, map, scratch: Vec::new() }
    }

    /// Exact closed-ball mass around `center` for a radius `<= cell`.
    fn ball_mass(&mut self, center: &Point, radius: f64) -> f64 {
        debug_assert!(radius <= self.cell * (1.0 + 1e-12));
        let home = cell_of(center.coords(), self.cell);
        let dim = home.len();
        self.scratch.clear();
        let mut offset = vec![-1i64; dim];
        loop {
            let key: Vec<i64> = home.iter().zip(&offset).map(|(h, o)| h + o).collect();
            if let Some(indices) = self.map.get(&key) {
                self.scratch.extend_from_slice(indices);
            }
            // Advance the {-1,0,1}^N counter.
            let mut done = true;
            for slot in offset.iter_mut().rev() {
                *slot += 1;
                if *slot <= 1 {
                    done = false;
                    break;
                }
                *slot = -1;
            }
            if done {
                break;
            }
        }
        self.scratch.sort_unstable();
        let points = self.measure.points();
        let weights = self.measure.weights();
        let mut sum = 0.0;
        for &i in &self.scratch {
            if points[i].dist(center) <= radius {
                sum += weights[i];
            }
        }
        sum
    }
}

fn cell_of(coords: &[f64], cell: f64) -> Vec<i64> {
    coords.iter().map(|c| (c / cell).floor() as i64).collect()
}

/// A concentration function sampled on a radius grid, with the maximizing
/// center per radius. Ties go to the earliest candidate (atoms in index
/// order, then lattice points in row-major order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationCurve {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub witnesses: Vec<Point>,
    pub total_mass: f64,
}

/// Computes the concentration curve with the bucket-grid index.
pub fn concentration_curve(
    m: &DiscreteMeasure,
    grid: &RadiusGrid,
    strategy: &CenterStrategy,
) -> ConcentrationCurve {
    let candidates = candidate_points(m, strategy);
    let mut values = Vec::with_capacity(grid.len());
    let mut witnesses = Vec::with_capacity(grid.len());
    for &r in grid.radii() {
        let mut index = BucketIndex::build(m, r);
        let (best, witness) = argmax_over(&candidates, m.dim(), |c| index.ball_mass(c, r));
        values.push(best);
        witnesses.push(witness);
    }
    ConcentrationCurve { radii: grid.radii().to_vec(), values, witnesses, total_mass: m.total_mass() }
}

/// Quadratic reference implementation; the oracle for the indexed path.
pub fn concentration_curve_bruteforce(
    m: &DiscreteMeasure,
    grid: &RadiusGrid,
    strategy: &CenterStrategy,
) -> Result<ConcentrationCurve> {
    if m.len() > BRUTE_FORCE_ATOM_LIMIT {
        return Err(Error::BruteForceGuard { atoms: m.len(), limit: BRUTE_FORCE_ATOM_LIMIT });
    }
    let candidates = candidate_points(m, strategy);
    let points = m.points();
    let weights = m.weights();
    let mut values = Vec::with_capacity(grid.len());
    let mut witnesses = Vec::with_capacity(grid.len());
    for &r in grid.radii() {
        let (best, witness) = argmax_over(&candidates, m.dim(), |c| {
            points
                .iter()
                .zip(weights)
                .filter(|(p, _)| p.dist(c) <= r)
                .map(|(_, w)| w)
                .sum()
        });
        values.push(best);
        witnesses.push(witness);
    }
    Ok(ConcentrationCurve { radii: grid.radii().to_vec(), values, witnesses, total_mass: m.total_mass() })
}

/// Largest ball mass at a single radius, with its witness center.
pub fn sup_ball_mass(m: &DiscreteMeasure, radius: f64, strategy: &CenterStrategy) -> (f64, Point) {
    let candidates = candidate_points(m, strategy);
    let mut index = BucketIndex::build(m, radius);
    argmax_over(&candidates, m.dim(), |c| index.ball_mass(c, radius))
}

fn argmax_over(
    candidates: &[Point],
    dim: usize,
    mut value: impl FnMut(&Point) -> f64,
) -> (f64, Point) {
    let mut best = 0.0f64;
    let mut witness: Option<&Point> = None;
    for c in candidates {
        let v = value(c);
        if witness.is_none() || v > best {
            best = v;
            witness = Some(c);
        }
    }
    match witness {
        Some(w) => (best, w.clone()),
        None => (0.0, Point::origin(dim)),
    }
}

/// Which suffix of a sequence counts as its tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TailWindow {
    /// `max(min, ceil(fraction * len))` trailing entries, clamped to the length.
    Fraction { min: usize, fraction: f64 },
    /// Exactly the last `k` entries; errors when the sequence is shorter.
    Last(usize),
}

impl Default for TailWindow {
    fn default() -> Self {
        TailWindow::Fraction { min: 3, fraction: 0.25 }
    }
}

impl TailWindow {
    /// Number of trailing entries in a sequence of length `len`.
    pub fn window_len(&self, len: usize) -> Result<usize> {
        if len == 0 {
            return Err(Error::TailTooLarge { window: 1, len: 0 });
        }
        match *self {
            TailWindow::Fraction { min, fraction } => {
                let w = ((fraction * len as f64).ceil() as usize).max(min).max(1);
                Ok(w.min(len))
            }
            TailWindow::Last(k) => {
                if k == 0 || k > len {
                    Err(Error::TailTooLarge { window: k, len })
                } else {
                    Ok(k)
                }
            }
        }
    }

    /// First index of the tail.
    pub fn start(&self, len: usize) -> Result<usize> {
        Ok(len - self.window_len(len)?)
    }
}

/// Tail-estimated limit of a family of concentration curves: per radius the
/// max over the tail (the finite stand-in for `limsup_n`), the concentration
/// level `alpha` read off at the largest radius, and the tail oscillation
/// (max - min) per radius as a convergence diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitProfile {
    pub radii: Vec<f64>,
    pub limsup_values: Vec<f64>,
    pub alpha: f64,
    pub oscillation: Vec<f64>,
}

/// Estimates the limit profile of the sequence's concentration curves.
pub fn limsup_profile(
    seq: &MeasureSequence,
    grid: &RadiusGrid,
    tail: &TailWindow,
) -> Result<LimitProfile> {
    let curves: Vec<ConcentrationCurve> = seq
        .items()
        .iter()
        .map(|m| concentration_curve(m, grid, &CenterStrategy::Atoms))
        .collect();
    limsup_profile_of_curves(&curves, grid, tail)
}

/// Same, from precomputed curves (which must share the grid).
pub fn limsup_profile_of_curves(
    curves: &[ConcentrationCurve],
    grid: &RadiusGrid,
    tail: &TailWindow,
) -> Result<LimitProfile> {
    if curves.is_empty() {
        return Err(Error::InvalidInput("limit profile needs at least one curve".into()));
    }
    for c in curves {
        if c.radii != grid.radii() {
            return Err(Error::InvalidInput("curves must share the radius grid".into()));
        }
    }
    let start = tail.start(curves.len())?;
    let tail_curves = &curves[start..];
    let mut limsup_values = Vec::with_capacity(grid.len());
    let mut oscillation = Vec::with_capacity(grid.len());
    for r_idx in 0..grid.len() {
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        for c in tail_curves {
            hi = hi.max(c.values[r_idx]);
            lo = lo.min(c.values[r_idx]);
        }
        limsup_values.push(hi);
        oscillation.push(hi - lo);
    }
    let alpha = *limsup_values.last().unwrap();
    Ok(LimitProfile { radii: grid.radii().to_vec(), limsup_values, alpha, oscillation })
}

/// Selects one scale index per row of a matrix of nondecreasing rows so that
/// the chosen entries track the row limits `targets` (the limit of column `c`
/// as the row index grows), with per-column accuracy `1/(c+1)`.
///
/// Column `c` becomes usable at the first row from which *every* later row is
/// within `1/(c+1)` of `targets[c]`; each row then takes the largest usable
/// column. The result is a nondecreasing index sequence, and rows before any
/// column is usable fall back to column 0.
pub fn diagonal_scales(values: &[Vec<f64>], targets: &[f64]) -> Result<Vec<usize>> {
    if values.is_empty() {
        return Err(Error::InvalidInput("diagonal scale selection needs at least one row".into()));
    }
    let cols = targets.len();
    if cols == 0 {
        return Err(Error::InvalidInput("diagonal scale selection needs at least one column".into()));
    }
    for (r, row) in values.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::InvalidInput(format!(
                "row {r} has {} entries, expected {cols}",
                row.len()
            )));
        }
        if row.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::NonMonotoneRow { row: r });
        }
    }
    let rows = values.len();
    // usable_from[c]: first row index from which the accuracy criterion holds
    // for every later row (rows..= means the column is never usable).
    let mut usable_from = vec![0usize; cols];
    for (c, slot) in usable_from.iter_mut().enumerate() {
        let tol = 1.0 / (c as f64 + 1.0);
        let mut from = 0usize;
        for r in 0..rows {
            if (values[r][c] - targets[c]).abs() >= tol {
                from = r + 1;
            }
        }
        *slot = from;
    }
    // Make the thresholds nondecreasing in the column index so the selected
    // scales are nondecreasing in the row index.
    for c in 1..cols {
        usable_from[c] = usable_from[c].max(usable_from[c - 1]);
    }
    let mut picks = Vec::with_capacity(rows);
    for r in 0..rows {
        let mut pick = 0usize;
        for (c, &from) in usable_from.iter().enumerate() {
            if from <= r {
                pick = c;
            }
        }
        picks.push(pick);
    }
    Ok(picks)
}

/// Tuning for the convergent-subsequence search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HellyConfig {
    /// Largest allowed pointwise spread within the selected subsequence.
    pub tol: f64,
    /// Smallest acceptable subsequence length.
    pub min_len: usize,
    /// Tail used for the limit curve (pointwise mean) and its final value.
    pub tail: TailWindow,
}

impl Default for HellyConfig {
    fn default() -> Self {
        HellyConfig { tol: 1e-9, min_len: 3, tail: TailWindow::default() }
    }
}

/// Finds a long subsequence of curves that agree pointwise within `cfg.tol`
/// and whose limit curve (pointwise tail mean) ends above `beta`. Greedy:
/// every curve anchors the set of curves within `tol/2` of it; the largest
/// qualifying set wins, ties to the earliest anchor.
pub fn helly_subsequence(
    curves: &[ConcentrationCurve],
    beta: f64,
    cfg: &HellyConfig,
) -> Result<(Vec<usize>, Vec<f64>)> {
    if curves.is_empty() {
        return Err(Error::InvalidInput("subsequence search needs at least one curve".into()));
    }
    let radii = &curves[0].radii;
    for c in curves {
        if &c.radii != radii {
            return Err(Error::InvalidInput("curves must share the radius grid".into()));
        }
    }
    let spread = |a: &ConcentrationCurve, b: &ConcentrationCurve| -> f64 {
        a.values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };
    // Strictly-greater size comparison keeps the earliest anchor on ties.
    let mut best: Option<(Vec<usize>, Vec<f64>)> = None;
    let mut best_oscillation = f64::INFINITY;
    for a in curves.iter() {
        let members: Vec<usize> = curves
            .iter()
            .enumerate()
            .filter(|(_, c)| spread(a, c) <= 0.5 * cfg.tol)
            .map(|(j, _)| j)
            .collect();
        if members.len() < cfg.min_len {
            continue;
        }
        // Pointwise tail mean over the selected subsequence.
        let start = cfg.tail.start(members.len())?;
        let tail = &members[start..];
        let mut limit = vec![0.0f64; radii.len()];
        for &j in tail {
            for (slot, &v) in limit.iter_mut().zip(&curves[j].values) {
                *slot += v;
            }
        }
        for slot in limit.iter_mut() {
            *slot /= tail.len() as f64;
        }
        let mut osc = 0.0f64;
        for r in 0..radii.len() {
            let hi = tail.iter().map(|&j| curves[j].values[r]).fold(f64::NEG_INFINITY, f64::max);
            let lo = tail.iter().map(|&j| curves[j].values[r]).fold(f64::INFINITY, f64::min);
            osc = osc.max(hi - lo);
        }
        best_oscillation = best_oscillation.min(osc);
        if *limit.last().unwrap() > beta
            && best.as_ref().map_or(true, |(b, _)| members.len() > b.len())
        {
            best = Some((members, limit));
        }
    }
    best.ok_or(Error::NoSubsequence {
        min_len: cfg.min_len,
        beta,
        best_oscillation: if best_oscillation.is_finite() { best_oscillation } else { f64::NAN },
    })
}
