//! Smooth cutoff bumps and partitions of unity subordinate to disjoint balls.

use crate::error::{Error, Result};
use crate::measures::Point;
use crate::sobolev::grid::{GridFunction, GridGeometry};

/// Radial cutoff profile in the scaled variable `s = |x - c| / r`:
/// identically 1 for `s <= 1/2`, identically 0 for `s >= 1`, and the smooth
/// mollifier ramp `exp(1 - 1/(1 - t^2))` with `t = 2s - 1` in between.
pub fn cutoff_profile(s: f64) -> f64 {
    if s <= 0.5 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        let t = 2.0 * s - 1.0;
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

/// A partition of unity `1 = sum_i w_i + background` subordinate to a family
/// of pairwise disjoint balls: `w_i = 1` on `B(c_i, r_i/2)`, `supp w_i` inside
/// `B(c_i, r_i)`, and `background = prod_i (1 - w_i)`.
#[derive(Debug, Clone)]
pub struct CutoffPartition {
    pub weights: Vec<GridFunction>,
    pub background: GridFunction,
}

/// Samples the partition on a grid. Errors if any two balls overlap, since the
/// exact partition identity needs disjoint supports.
pub fn cutoff_partition(
    centers: &[Point],
    radii: &[f64],
    geom: &GridGeometry,
) -> Result<CutoffPartition> {
    if centers.len() != radii.len() {
        return Err(Error::InvalidInput(format!(
            "{} centers but {} radii",
            centers.len(),
            radii.len()
        )));
    }
    for c in centers {
        if c.dim() != geom.dim() {
            return Err(Error::DimensionMismatch { expected: geom.dim(), got: c.dim() });
        }
    }
    for &r in radii {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidInput(format!("cutoff radius must be finite and > 0, got {r}")));
        }
    }
    for i in 0..centers.len() {
        for j in (i + 1)..centers.len() {
            if centers[i].dist(&centers[j]) < radii[i] + radii[j] {
                return Err(Error::OverlappingBalls { i: i + 1, j: j + 1 });
            }
        }
    }

    let mut weights = Vec::with_capacity(centers.len());
    for (c, &r) in centers.iter().zip(radii) {
        weights.push(GridFunction::from_fn(geom, |x| {
            let d: f64 = x
                .iter()
                .zip(c.coords())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            cutoff_profile(d / r)
        })?);
    }
    let mut background = GridFunction::from_fn(geom, |_| 1.0)?;
    for w in &weights {
        background = background.zip_with(w, |b, wv| b * (1.0 - wv))?;
    }
    Ok(CutoffPartition { weights, background })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(coords: &[f64]) -> Point {
        Point::new(coords.to_vec()).unwrap()
    }

    #[test]
    fn profile_is_a_plateau_bump() {
        assert_eq!(cutoff_profile(0.0), 1.0);
        assert_eq!(cutoff_profile(0.5), 1.0);
        assert_eq!(cutoff_profile(1.0), 0.0);
        assert_eq!(cutoff_profile(2.0), 0.0);
        let mid = cutoff_profile(0.75);
        assert!(mid > 0.0 && mid < 1.0);
        // Monotone on the ramp.
        assert!(cutoff_profile(0.6) > cutoff_profile(0.8));
    }

    #[test]
    fn empty_family_gives_constant_one_background() {
        let geom = GridGeometry::centered_cube(2, 9, 0.5).unwrap();
        let part = cutoff_partition(&[], &[], &geom).unwrap();
        assert!(part.weights.is_empty());
        assert!(part.background.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn weight_is_one_on_the_inner_ball_and_zero_outside() {
        let geom = GridGeometry::centered_cube(2, 41, 0.1).unwrap();
        let part = cutoff_partition(&[pt(&[0.0, 0.0])], &[1.0], &geom).unwrap();
        let w = &part.weights[0];
        for flat in 0..w.values().len() {
            let x = w.node_coord(flat);
            let d = (x[0] * x[0] + x[1] * x[1]).sqrt();
            if d <= 0.5 {
                assert_eq!(w.values()[flat], 1.0);
            }
            if d >= 1.0 {
                assert_eq!(w.values()[flat], 0.0);
            }
        }
    }

    #[test]
    fn two_disjoint_balls_partition_to_one_everywhere() {
        let geom = GridGeometry::centered_cube(2, 41, 0.25).unwrap();
        let part = cutoff_partition(
            &[pt(&[-2.0, 0.0]), pt(&[2.0, 0.0])],
            &[1.5, 1.5],
            &geom,
        )
        .unwrap();
        for flat in 0..part.background.values().len() {
            let total: f64 = part.weights.iter().map(|w| w.values()[flat]).sum::<f64>()
                + part.background.values()[flat];
            assert!((total - 1.0).abs() < 1e-12, "partition sum {total}");
        }
    }

    #[test]
    fn overlapping_balls_are_rejected_with_their_indices() {
        let geom = GridGeometry::centered_cube(2, 9, 1.0).unwrap();
        let err = cutoff_partition(
            &[pt(&[0.0, 0.0]), pt(&[1.0, 0.0])],
            &[1.0, 1.0],
            &geom,
        )
        .unwrap_err();
        assert!(matches!(err, Error::OverlappingBalls { i: 1, j: 2 }));
    }
}
