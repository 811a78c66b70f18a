//! Concentration densities and the local-uniform-mass interpolation bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sobolev::grid::{gradient_magnitude, GridFunction, GridGeometry};

/// Weighted-series parameters used by the density when the critical exponent
/// is unbounded (`p >= N`): term `l` contributes
/// `|u|^{e_l} / (2^l * C_l^{e_l} * A^{e_l})` with `e_l = exponents[l-1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesParams {
    pub exponents: Vec<f64>,
    pub constants: Vec<f64>,
}

impl SeriesParams {
    pub fn new(exponents: Vec<f64>, constants: Vec<f64>) -> Result<Self> {
        if exponents.is_empty() || exponents.len() != constants.len() {
            return Err(Error::InvalidInput(
                "series needs matching, nonempty exponent and constant lists".into(),
            ));
        }
        if exponents.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("series exponents must be strictly increasing".into()));
        }
        if constants.iter().any(|&c| !(c > 0.0) || !c.is_finite()) {
            return Err(Error::InvalidInput("series constants must be finite and > 0".into()));
        }
        Ok(SeriesParams { exponents, constants })
    }

    /// Builds constants empirically: each `C_l` is twice the largest embedding
    /// ratio `||u||_{e_l} / ||u||_{W^{1,p}}` observed on a small deterministic
    /// corpus of bumps sampled on `geom`.
    pub fn estimated(p: f64, exponents: Vec<f64>, geom: &GridGeometry) -> Result<Self> {
        let corpus = estimation_corpus(geom)?;
        let mut constants = Vec::with_capacity(exponents.len());
        for &e in &exponents {
            let mut best = 0.0f64;
            for u in &corpus {
                let w = u.w1p_norm(p);
                if w > 0.0 {
                    best = best.max(u.lq_norm(e) / w);
                }
            }
            constants.push(if best > 0.0 { 2.0 * best } else { 1.0 });
        }
        SeriesParams::new(exponents, constants)
    }

    pub fn depth(&self) -> usize {
        self.exponents.len()
    }
}

/// A handful of radially symmetric polynomial bumps spanning a few widths and
/// heights; enough shape variety for a stable empirical embedding constant.
fn estimation_corpus(geom: &GridGeometry) -> Result<Vec<GridFunction>> {
    let (lo, hi) = geom.axis_range(0);
    let extent = hi - lo;
    let mut corpus = Vec::new();
    for &radius_frac in &[0.12, 0.2, 0.35] {
        for &amp in &[0.5, 1.0, 2.0] {
            let r = radius_frac * extent;
            let center: Vec<f64> = (0..geom.dim())
                .map(|a| {
                    let (a_lo, a_hi) = geom.axis_range(a);
                    0.5 * (a_lo + a_hi)
                })
                .collect();
            corpus.push(GridFunction::from_fn(geom, |x| {
                let d2: f64 = x
                    .iter()
                    .zip(&center)
                    .map(|(c, m)| (c - m) * (c - m))
                    .sum();
                let t = 1.0 - d2 / (r * r);
                if t > 0.0 {
                    amp * t * t
                } else {
                    0.0
                }
            })?);
        }
    }
    Ok(corpus)
}

/// Exponent bookkeeping for a `W^{1,p}` family on `R^N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevParams {
    pub p: f64,
    pub dim: usize,
    /// Exponents at which remainders are measured; each must lie in `(p, p*)`.
    pub q_list: Vec<f64>,
    /// Required when `p >= dim` (unbounded critical exponent).
    pub series: Option<SeriesParams>,
}

impl SobolevParams {
    pub fn new(p: f64, dim: usize) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::InvalidInput(format!("exponent p must be finite and > 1, got {p}")));
        }
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be >= 1".into()));
        }
        let mut params = SobolevParams { p, dim, q_list: Vec::new(), series: None };
        let default_q = match params.p_star() {
            Some(ps) => 0.5 * (p + ps),
            None => p + 2.0,
        };
        params.q_list = vec![default_q];
        Ok(params)
    }

    pub fn with_q_list(mut self, q_list: Vec<f64>) -> Result<Self> {
        for &q in &q_list {
            self.check_q(q)?;
        }
        self.q_list = q_list;
        Ok(self)
    }

    pub fn with_series(mut self, series: SeriesParams) -> Self {
        self.series = Some(series);
        self
    }

    /// Critical exponent `Np/(N-p)` when `p < N`; `None` encodes infinity.
    pub fn p_star(&self) -> Option<f64> {
        let n = self.dim as f64;
        if self.p < n {
            Some(n * self.p / (n - self.p))
        } else {
            None
        }
    }

    /// Checks `q` lies in the open interpolation window `(p, p*)`.
    pub fn check_q(&self, q: f64) -> Result<()> {
        let ok = q > self.p && self.p_star().map_or(true, |ps| q < ps);
        if ok {
            Ok(())
        } else {
            let upper = self
                .p_star()
                .map_or("infinity".to_string(), |ps| format!("{ps}"));
            Err(Error::InvalidInput(format!(
                "q = {q} must lie strictly between p = {} and {upper}",
                self.p
            )))
        }
    }
}

/// The concentration density of `u`:
///
/// - bounded critical exponent (`p < N`): `|grad u|^p + |u|^p + |u|^{p*}`;
/// - unbounded (`p >= N`): `|grad u|^p + |u|^p` plus the weighted series of
///   `|u|^{e_l}` terms, normalized by the family bound `a_bound`.
///
/// `a_bound` must dominate `sup_n ||u_n||_{W^{1,p}}` of the family the density
/// will be compared across; it is only used on the series branch.
pub fn density_rho(u: &GridFunction, params: &SobolevParams, a_bound: f64) -> Result<GridFunction> {
    if u.dim() != params.dim {
        return Err(Error::DimensionMismatch { expected: params.dim, got: u.dim() });
    }
    let p = params.p;
    let grad = gradient_magnitude(u);
    let mut rho: Vec<f64> = grad
        .values()
        .iter()
        .zip(u.values())
        .map(|(&g, &v)| g.powf(p) + v.abs().powf(p))
        .collect();
    match params.p_star() {
        Some(ps) => {
            for (r, &v) in rho.iter_mut().zip(u.values()) {
                *r += v.abs().powf(ps);
            }
        }
        None => {
            let series = params.series.as_ref().ok_or(Error::MissingSeriesParams)?;
            if !(a_bound > 0.0) || !a_bound.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "family bound must be finite and > 0 on the series branch, got {a_bound}"
                )));
            }
            for (l, (&e, &c)) in series.exponents.iter().zip(&series.constants).enumerate() {
                let scale = 1.0 / (2f64.powi(l as i32 + 1) * c.powf(e) * a_bound.powf(e));
                for (r, &v) in rho.iter_mut().zip(u.values()) {
                    *r += scale * v.abs().powf(e);
                }
            }
        }
    }
    GridFunction::new(u.geometry().clone(), rho)
}

/// `sup_y int_{B(y,1)} |grad u|^p + |u|^p`, the supremum taken over grid
/// nodes. Unit balls are clipped at the boundary, consistent with the zero
/// extension of `u` outside the grid.
pub fn local_uniform_mass(u: &GridFunction, p: f64) -> f64 {
    let geom = u.geometry();
    let h = geom.spacing();
    let cell = geom.cell_volume();
    let grad = gradient_magnitude(u);
    let integrand: Vec<f64> = grad
        .values()
        .iter()
        .zip(u.values())
        .map(|(&g, &v)| g.powf(p) + v.abs().powf(p))
        .collect();

    // Integer offsets reaching every node within Euclidean distance 1.
    let reach = (1.0 / h).floor() as i64;
    let dim = geom.dim();
    let mut offsets: Vec<Vec<i64>> = vec![Vec::new()];
    for _ in 0..dim {
        let mut next = Vec::new();
        for base in &offsets {
            for d in -reach..=reach {
                let mut v = base.clone();
                v.push(d);
                next.push(v);
            }
        }
        offsets = next;
    }
    offsets.retain(|off| {
        let d2: f64 = off.iter().map(|&d| (d as f64 * h) * (d as f64 * h)).sum();
        d2 <= 1.0 + 1e-12
    });

    let shape = geom.shape().to_vec();
    let strides = geom.strides();
    let mut best = 0.0f64;
    let mut multi = vec![0usize; dim];
    for flat in 0..integrand.len() {
        let mut sum = 0.0;
        'offset: for off in &offsets {
            let mut nflat = flat;
            for a in 0..dim {
                let pos = multi[a] as i64 + off[a];
                if pos < 0 || pos >= shape[a] as i64 {
                    continue 'offset;
                }
                nflat = (nflat as i64 + off[a] * strides[a] as i64) as usize;
            }
            sum += integrand[nflat];
        }
        best = best.max(sum * cell);
        // Advance the multi-index (row-major, last axis fastest).
        for a in (0..dim).rev() {
            multi[a] += 1;
            if multi[a] < shape[a] {
                break;
            }
            multi[a] = 0;
        }
    }
    best
}

/// One corpus entry of [`lemma41_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma41Row {
    pub index: usize,
    pub lq_norm: f64,
    pub local_mass: f64,
    pub w1p_norm: f64,
    pub ratio: f64,
}

/// Result of the interpolation-inequality sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma41Report {
    pub p: f64,
    pub q: f64,
    pub max_ratio: f64,
    pub rows: Vec<Lemma41Row>,
}

/// Evaluates the interpolation ratio
/// `||u||_q / ( (sup_y int_{B(y,1)} |grad u|^p + |u|^p)^{1/p - 1/q} * ||u||_{W^{1,p}}^{p/q} )`
/// across a corpus. A uniform finite bound on this ratio is the content of the
/// local interpolation inequality; the report records the empirical maximum.
pub fn lemma41_check(corpus: &[GridFunction], p: f64, q: f64) -> Result<Lemma41Report> {
    let first = corpus
        .first()
        .ok_or_else(|| Error::InvalidInput("interpolation check needs a nonempty corpus".into()))?;
    let params = SobolevParams::new(p, first.dim())?;
    params.check_q(q)?;
    let mut rows = Vec::new();
    let mut max_ratio = 0.0f64;
    for (index, u) in corpus.iter().enumerate() {
        if u.dim() != first.dim() {
            return Err(Error::DimensionMismatch { expected: first.dim(), got: u.dim() });
        }
        let w = u.w1p_norm(p);
        if w == 0.0 {
            continue; // zero function carries no information here
        }
        let lq = u.lq_norm(q);
        let lum = local_uniform_mass(u, p);
        let ratio = lq / (lum.powf(1.0 / p - 1.0 / q) * w.powf(p / q));
        max_ratio = max_ratio.max(ratio);
        rows.push(Lemma41Row { index, lq_norm: lq, local_mass: lum, w1p_norm: w, ratio });
    }
    if rows.is_empty() {
        return Err(Error::InvalidInput(
            "interpolation check needs at least one nonzero function".into(),
        ));
    }
    Ok(Lemma41Report { p, q, max_ratio, rows })
}
