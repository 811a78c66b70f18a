//! Profile decomposition of a bounded family of grid functions: build each
//! function's concentration density, extract bubbles from the induced
//! measures, and average the recentered samples into translation profiles.
//!
//! Centers are snapped to grid nodes and samples are shifted by whole node
//! offsets, so recentering is exact (no interpolation). Profiles live on a
//! canonical geometry of the same shape and spacing whose center node sits
//! at the origin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::{extract_profiles, DecompositionReport, ExtractionConfig};
use crate::measures::{measure_from_grid_density, MeasureSequence, Point};
use crate::sobolev::cutoff::cutoff_partition;
use crate::sobolev::density::{density_rho, SobolevParams};
use crate::sobolev::grid::{gradient_magnitude, GridFunction, GridGeometry};

/// Norms of the surviving functions and of the extracted profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormTable {
    pub p: f64,
    pub q_list: Vec<f64>,
    /// `W^{1,p}` norm per surviving function.
    pub function_w1p: Vec<f64>,
    /// `L^q` norms per surviving function, one row per function.
    pub function_lq: Vec<Vec<f64>>,
    pub profile_w1p: Vec<f64>,
    pub profile_lq: Vec<Vec<f64>>,
}

/// Extraction-side diagnostics of a profile decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileDiagnostics {
    /// First position of the tail window the profiles were averaged over.
    pub tail_start: usize,
    /// Largest distance a bubble center moved when snapped to a node.
    pub snap_max: Vec<f64>,
    /// Tail-mean annulus leakage per bubble.
    pub annulus_tail_mean: Vec<f64>,
}

/// A profile decomposition: the measure-level report, one profile per
/// bubble on a centered canonical geometry, and the surviving inputs for
/// remainder computations.
#[derive(Debug, Clone)]
pub struct ProfileDecomposition {
    pub params: SobolevParams,
    /// Uniform norm bound the densities were built with.
    pub a_bound: f64,
    pub report: DecompositionReport,
    pub profile_geometry: GridGeometry,
    pub profiles: Vec<GridFunction>,
    pub norms: NormTable,
    pub diagnostics: ProfileDiagnostics,
    functions: Vec<GridFunction>,
    /// Per bubble, per surviving position: the snapped center node.
    snapped: Vec<Vec<Vec<usize>>>,
    /// Center node of the canonical geometry.
    center_node: Vec<usize>,
}

impl ProfileDecomposition {
    /// The surviving subsequence, aligned with `report.indices`.
    pub fn surviving_functions(&self) -> &[GridFunction] {
        &self.functions
    }

    /// Profile `i` (0-based) translated to its captured center at surviving
    /// position `pos`, on the input geometry.
    pub fn shifted_profile(&self, i: usize, pos: usize) -> Result<GridFunction> {
        let node = &self.snapped[i][pos];
        let offset: Vec<i64> = node
            .iter()
            .zip(&self.center_node)
            .map(|(&n, &m)| n as i64 - m as i64)
            .collect();
        let moved = self.profiles[i].shift_nodes(&offset)?;
        GridFunction::new(self.functions[pos].geometry().clone(), moved.values().to_vec())
    }

    /// `u_pos` minus the first `k` shifted profiles.
    pub fn remainder(&self, pos: usize, k: usize) -> Result<GridFunction> {
        if pos >= self.functions.len() || k > self.profiles.len() {
            return Err(Error::InvalidInput(format!(
                "remainder({pos}, {k}) out of range: {} positions, {} profiles",
                self.functions.len(),
                self.profiles.len()
            )));
        }
        let mut r = self.functions[pos].clone();
        for i in 0..k {
            r = r.sub(&self.shifted_profile(i, pos)?)?;
        }
        Ok(r)
    }
}

/// Runs the decomposition: densities, measure extraction, then profiles as
/// tail means of exactly recentered, ball-truncated samples.
pub fn profile_extract(
    functions: &[GridFunction],
    params: &SobolevParams,
    a_bound: f64,
    cfg: &ExtractionConfig,
) -> Result<ProfileDecomposition> {
    let first = functions
        .first()
        .ok_or_else(|| Error::InvalidInput("profile extraction needs at least one function".into()))?;
    for u in functions {
        if !u.same_geometry(first) {
            return Err(Error::GeometryMismatch(
                "all functions must share one grid geometry".into(),
            ));
        }
    }
    if first.dim() != params.dim {
        return Err(Error::DimensionMismatch { expected: params.dim, got: first.dim() });
    }

    let densities: Vec<GridFunction> = functions
        .iter()
        .map(|u| density_rho(u, params, a_bound))
        .collect::<Result<_>>()?;
    let measures = densities
        .iter()
        .map(measure_from_grid_density)
        .collect::<Result<Vec<_>>>()?;
    let seq = MeasureSequence::new(measures)?;
    let report = extract_profiles(&seq, cfg)?;

    // Indices are 0-based positions here because the sequence was unlabeled.
    let surviving: Vec<GridFunction> = report
        .indices
        .iter()
        .map(|&n| functions[n as usize].clone())
        .collect();

    let geom = first.geometry();
    let center_node: Vec<usize> = geom.shape().iter().map(|&s| s / 2).collect();
    let canonical_origin: Vec<f64> = center_node
        .iter()
        .map(|&m| -(m as f64) * geom.spacing())
        .collect();
    let profile_geometry =
        GridGeometry::new(geom.dim(), geom.shape().to_vec(), geom.spacing(), canonical_origin)?;

    let tail_start = report.config_echo.tail.start(surviving.len())?;
    let mut profiles = Vec::with_capacity(report.bubbles.len());
    let mut snapped: Vec<Vec<Vec<usize>>> = Vec::with_capacity(report.bubbles.len());
    let mut snap_max = Vec::with_capacity(report.bubbles.len());
    let mut annulus_tail_mean = Vec::with_capacity(report.bubbles.len());

    for bubble in &report.bubbles {
        let mut nodes = Vec::with_capacity(surviving.len());
        let mut worst_snap = 0.0f64;
        let mut acc: Option<GridFunction> = None;
        for (pos, u) in surviving.iter().enumerate() {
            let center = &bubble.centers[pos];
            let radius = bubble.radii[pos];
            let node = geom.nearest_node(center.coords())?;
            let coord = geom.node_coord_of(geom.flat_index(&node));
            let snapped_center = Point::new(coord.clone())?;
            worst_snap = worst_snap.max(snapped_center.dist(center));
            check_ball_inside(geom, &coord, radius)?;
            check_ball_inside(&profile_geometry, &vec![0.0; geom.dim()], radius)?;
            if pos >= tail_start {
                let sample = u.truncate_ball(&coord, radius)?;
                let offset: Vec<i64> = center_node
                    .iter()
                    .zip(&node)
                    .map(|(&m, &n)| m as i64 - n as i64)
                    .collect();
                let moved = sample.shift_nodes(&offset)?;
                let rebased =
                    GridFunction::new(profile_geometry.clone(), moved.values().to_vec())?;
                acc = Some(match acc {
                    None => rebased,
                    Some(sum) => sum.add(&rebased)?,
                });
            }
            nodes.push(node);
        }
        let count = (surviving.len() - tail_start) as f64;
        let profile = acc
            .ok_or_else(|| Error::InvalidInput("empty tail window for profile averaging".into()))?
            .scale(1.0 / count)?;
        profiles.push(profile);
        snapped.push(nodes);
        snap_max.push(worst_snap);
        let annulus_tail = &bubble.annulus_masses[tail_start..];
        annulus_tail_mean.push(annulus_tail.iter().sum::<f64>() / annulus_tail.len() as f64);
    }

    let q_list = params.q_list.clone();
    let norm_rows = |fs: &[GridFunction]| -> (Vec<f64>, Vec<Vec<f64>>) {
        let w1p = fs.iter().map(|u| u.w1p_norm(params.p)).collect();
        let lq = fs
            .iter()
            .map(|u| q_list.iter().map(|&q| u.lq_norm(q)).collect())
            .collect();
        (w1p, lq)
    };
    let (function_w1p, function_lq) = norm_rows(&surviving);
    let (profile_w1p, profile_lq) = norm_rows(&profiles);

    Ok(ProfileDecomposition {
        params: params.clone(),
        a_bound,
        report,
        profile_geometry,
        profiles,
        norms: NormTable { p: params.p, q_list, function_w1p, function_lq, profile_w1p, profile_lq },
        diagnostics: ProfileDiagnostics { tail_start, snap_max, annulus_tail_mean },
        functions: surviving,
        snapped,
        center_node,
    })
}

fn check_ball_inside(geom: &GridGeometry, center: &[f64], radius: f64) -> Result<()> {
    let slack = 0.5 * geom.spacing();
    for axis in 0..geom.dim() {
        let (lo, hi) = geom.axis_range(axis);
        if center[axis] - radius < lo - slack || center[axis] + radius > hi + slack {
            return Err(Error::BallExitsGrid { center: center.to_vec(), radius });
        }
    }
    Ok(())
}

/// Norm-expansion defects of one decomposition row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    /// Label of the surviving index.
    pub index: i64,
    /// Relative defect of `|u|_p^p = sum_i |V_i|_p^p + |r|_p^p`.
    pub lp_defect: f64,
    /// Relative defect of the same expansion for the gradient mass.
    pub grad_defect: f64,
}

/// Tail-mean norm-expansion defects; the gradient one is the interesting
/// failure mode when oscillation hides in the remainder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionResiduals {
    pub lp_residual: f64,
    pub grad_residual: f64,
    pub rows: Vec<ResidualRow>,
}

/// Checks, per surviving index, how exactly the `p`-mass and the gradient
/// `p`-mass of `u_n` split into profile masses plus the remainder mass, and
/// averages the relative defects over the tail window.
pub fn norm_expansion_check(dec: &ProfileDecomposition) -> Result<ExpansionResiduals> {
    let p = dec.params.p;
    let k = dec.profiles.len();
    let profile_lp: f64 = dec.profiles.iter().map(|v| v.lp_mass(p)).sum();
    let profile_grad: f64 = dec
        .profiles
        .iter()
        .map(|v| gradient_magnitude(v).lp_mass(p))
        .sum();
    let mut rows = Vec::with_capacity(dec.functions.len());
    for (pos, u) in dec.functions.iter().enumerate() {
        let r = dec.remainder(pos, k)?;
        let u_lp = u.lp_mass(p);
        let u_grad = gradient_magnitude(u).lp_mass(p);
        let lp_defect = (u_lp - profile_lp - r.lp_mass(p)).abs() / u_lp.max(1e-300);
        let grad_defect =
            (u_grad - profile_grad - gradient_magnitude(&r).lp_mass(p)).abs() / u_grad.max(1e-300);
        rows.push(ResidualRow { index: dec.report.indices[pos], lp_defect, grad_defect });
    }
    let tail = &rows[dec.diagnostics.tail_start..];
    let n = tail.len() as f64;
    Ok(ExpansionResiduals {
        lp_residual: tail.iter().map(|r| r.lp_defect).sum::<f64>() / n,
        grad_residual: tail.iter().map(|r| r.grad_defect).sum::<f64>() / n,
        rows,
    })
}

/// Splits the remainder at surviving position `pos` into a local part and a
/// far-field part with a smooth cutoff partition around the captured balls:
/// `v1 = sum_i (chi_i u - V_i shifted)` and `v2 = background * u`, so that
/// `v1 + v2 = u - sum_i V_i shifted` exactly wherever the cutoffs sum to one.
pub fn remainder_split(
    dec: &ProfileDecomposition,
    pos: usize,
) -> Result<(GridFunction, GridFunction)> {
    if pos >= dec.functions.len() {
        return Err(Error::InvalidInput(format!(
            "position {pos} out of range: {} surviving functions",
            dec.functions.len()
        )));
    }
    let u = &dec.functions[pos];
    let geom = u.geometry();
    let centers: Vec<Point> = dec
        .report
        .bubbles
        .iter()
        .map(|b| b.centers[pos].clone())
        .collect();
    let radii: Vec<f64> = dec.report.bubbles.iter().map(|b| b.outer_radii[pos]).collect();
    let partition = cutoff_partition(&centers, &radii, geom)?;
    let mut v1 = GridFunction::zeros(geom);
    for (i, chi) in partition.weights.iter().enumerate() {
        let local = chi.zip_with(u, |c, uv| c * uv)?;
        v1 = v1.add(&local.sub(&dec.shifted_profile(i, pos)?)?)?;
    }
    let v2 = partition.background.zip_with(u, |b, uv| b * uv)?;
    Ok((v1, v2))
}
