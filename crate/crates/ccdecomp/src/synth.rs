//! Deterministic fixture generators: seeded random measures, spreading
//! (vanishing) families, separating cluster families with known bubble
//! masses, and grid-function families built from traveling polynomial bumps
//! with an optional high-frequency oscillation rider.
//!
//! Everything is reproducible from a `u64` seed via SplitMix64; generators
//! with closed-form structure return the ground truth alongside the data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{DiscreteMeasure, MeasureSequence, Point};
use crate::sobolev::{GridFunction, GridGeometry};

/// SplitMix64: `state += 0x9E3779B97F4A7C15`, then two xor-shift-multiply
/// finalization rounds (`>> 30` with `0xBF58476D1CE4E5B9`, `>> 27` with
/// `0x94D049BB133111EB`) and a final `>> 31` xor. Passes BigCrush, needs one
/// word of state, and is stable across platforms, which is all that fixture
/// generation requires.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with the full 53 bits of mantissa.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn in_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// A seeded cloud of `n_atoms` uniform atoms in `[-5, 5]^dim` with positive
/// weights rescaled to the requested total mass.
pub fn gen_random_measure(
    n_atoms: usize,
    dim: usize,
    mass: f64,
    seed: u64,
) -> Result<DiscreteMeasure> {
    if n_atoms == 0 {
        return Err(Error::InvalidInput("a random measure needs at least one atom".into()));
    }
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::InvalidInput(format!("total mass must be finite and > 0, got {mass}")));
    }
    let mut rng = SplitMix64::new(seed);
    let mut points = Vec::with_capacity(n_atoms);
    let mut weights = Vec::with_capacity(n_atoms);
    for _ in 0..n_atoms {
        let coords: Vec<f64> = (0..dim).map(|_| rng.in_range(-5.0, 5.0)).collect();
        points.push(Point::new(coords)?);
        weights.push(rng.next_f64() + 1e-3);
    }
    let sum: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w *= mass / sum;
    }
    DiscreteMeasure::new(dim, points, weights)
}

/// A spreading family: measure `n` carries `n` atoms of weight `1/n` roughly
/// `n` apart along the first axis, so every fixed ball's share of the mass
/// decays like `1/n` on the tail.
pub fn gen_vanishing(n_max: usize, dim: usize, seed: u64) -> Result<MeasureSequence> {
    if n_max == 0 {
        return Err(Error::InvalidInput("the family needs at least one measure".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let mut items = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let mut points = Vec::with_capacity(n);
        for k in 0..n {
            let mut coords = vec![0.0; dim];
            coords[0] = (k * n) as f64 + 0.25 * rng.next_f64();
            for c in coords.iter_mut().skip(1) {
                *c = rng.next_f64();
            }
            points.push(Point::new(coords)?);
        }
        items.push(DiscreteMeasure::new(dim, points, vec![1.0 / n as f64; n])?);
    }
    MeasureSequence::new(items)
}

/// What a structured generator promises about its output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Cluster masses in descending order (the expected bubble masses).
    pub bubble_masses: Vec<f64>,
    /// Total mass of every measure in the family.
    pub total_mass: f64,
    /// Cluster `i` sits at `i * separation_rate * n` along the first axis.
    pub separation_rate: f64,
    /// Mass scattered far from all clusters (0 for none).
    pub dust_mass: f64,
    /// All cluster atoms lie within this distance of their center.
    pub cluster_radius: f64,
}

impl GroundTruth {
    /// Center of cluster `i` (0-based) at sequence index `n` (1-based).
    pub fn cluster_center(&self, i: usize, n: usize, dim: usize) -> Point {
        let mut coords = vec![0.0; dim];
        coords[0] = i as f64 * self.separation_rate * n as f64;
        Point::new(coords).expect("dimension is validated by the caller")
    }
}

/// Atom offsets forming one cluster; all within 0.25 of the center and 0.1
/// apart, so a radius-0.5 ball around the center captures the cluster whole.
const CLUSTER_OFFSETS: [f64; 6] = [-0.25, -0.15, -0.05, 0.05, 0.15, 0.25];

/// A separating multi-cluster family: measure `n` has one 6-atom cluster of
/// mass `masses[i]` centered at `i * separation_rate * n` on the first axis,
/// plus (optionally) spread-out dust of total mass `dust_mass` far on the
/// negative side. Cluster distances grow linearly in `n`, so the family
/// dichotomizes and extraction should recover the cluster masses exactly.
pub fn gen_dichotomy(
    masses: &[f64],
    separation_rate: f64,
    n_max: usize,
    dim: usize,
    seed: u64,
    dust_mass: f64,
) -> Result<(MeasureSequence, GroundTruth)> {
    if masses.is_empty() || masses.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
        return Err(Error::InvalidInput("cluster masses must be positive and finite".into()));
    }
    if !(separation_rate > 1.0) {
        return Err(Error::InvalidInput(format!(
            "separation rate must exceed 1 so clusters clear their own radius, got {separation_rate}"
        )));
    }
    if n_max == 0 || !(dust_mass >= 0.0) {
        return Err(Error::InvalidInput("need n_max >= 1 and dust_mass >= 0".into()));
    }
    let mut sorted = masses.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("masses are finite"));
    let n_dust = 8usize;
    let mut rng = SplitMix64::new(seed);
    let mut items = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (i, &m) in sorted.iter().enumerate() {
            let center = i as f64 * separation_rate * n as f64;
            for off in CLUSTER_OFFSETS {
                let mut coords = vec![0.0; dim];
                coords[0] = center + off;
                points.push(Point::new(coords)?);
                weights.push(m / 6.0);
            }
        }
        if dust_mass > 0.0 {
            for k in 0..n_dust {
                let mut coords = vec![0.0; dim];
                coords[0] = -(2.0 + k as f64) * separation_rate * n as f64
                    + 0.05 * rng.next_f64();
                for c in coords.iter_mut().skip(1) {
                    *c = rng.next_f64();
                }
                points.push(Point::new(coords)?);
                weights.push(dust_mass / n_dust as f64);
            }
        }
        items.push(DiscreteMeasure::new(dim, points, weights)?);
    }
    let seq = MeasureSequence::new(items)?;
    let truth = GroundTruth {
        bubble_masses: sorted.clone(),
        total_mass: sorted.iter().sum::<f64>() + dust_mass,
        separation_rate,
        dust_mass,
        cluster_radius: 0.25,
    };
    Ok((seq, truth))
}

/// Shape of one traveling bump: `amplitude * (1 - |x - c|^2 / radius^2)^2`
/// inside its support ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub amplitude: f64,
    pub radius: f64,
}

/// Straight-line center motion `start + n * velocity` (`n` is the 1-based
/// sequence index). Choose node-multiple coordinates for exact recentering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub start: Vec<f64>,
    pub velocity: Vec<f64>,
}

impl Trajectory {
    pub fn center(&self, n: usize) -> Point {
        let coords = self
            .start
            .iter()
            .zip(&self.velocity)
            .map(|(s, v)| s + n as f64 * v)
            .collect();
        Point::new(coords).expect("trajectory coordinates are finite")
    }
}

/// A high-frequency rider on one bump: `(amplitude / lambda_n) * sin(lambda_n
/// * (x_1 - c_1)) * envelope(x - c)` with `lambda_n = frequency_rate * n`.
/// Its `L^p` size decays like `1/n` while its gradient mass persists, the
/// classic way a norm expansion keeps an exact `L^p` part and a failing
/// gradient part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Oscillation {
    pub amplitude: f64,
    pub frequency_rate: f64,
    pub envelope_radius: f64,
    /// Index of the bump whose trajectory the rider follows.
    pub follow: usize,
}

/// Centers of each bump at each index, kept as generation ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevTruth {
    /// `centers[i][n-1]` is bump `i`'s center at index `n`.
    pub centers: Vec<Vec<Point>>,
    pub amplitudes: Vec<f64>,
    pub radii: Vec<f64>,
}

fn bump_value(x: &[f64], center: &[f64], spec: &BumpSpec) -> f64 {
    let d2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
    let s = 1.0 - d2 / (spec.radius * spec.radius);
    if s > 0.0 {
        spec.amplitude * s * s
    } else {
        0.0
    }
}

/// A family of superposed traveling bumps, optionally with an oscillation
/// rider. The caller keeps trajectories inside the grid; supports that leave
/// it are silently clipped by the zero extension.
pub fn gen_multibubble_sobolev(
    geom: &GridGeometry,
    bumps: &[(BumpSpec, Trajectory)],
    n_max: usize,
    oscillation: Option<&Oscillation>,
) -> Result<(Vec<GridFunction>, SobolevTruth)> {
    if bumps.is_empty() || n_max == 0 {
        return Err(Error::InvalidInput("need at least one bump and one index".into()));
    }
    for (spec, tr) in bumps {
        if !(spec.radius > 0.0) || !(spec.amplitude != 0.0) {
            return Err(Error::InvalidInput("bump radius must be > 0 and amplitude nonzero".into()));
        }
        if tr.start.len() != geom.dim() || tr.velocity.len() != geom.dim() {
            return Err(Error::DimensionMismatch { expected: geom.dim(), got: tr.start.len() });
        }
    }
    if let Some(osc) = oscillation {
        if osc.follow >= bumps.len() {
            return Err(Error::InvalidInput(format!(
                "oscillation follows bump {} but there are only {}",
                osc.follow,
                bumps.len()
            )));
        }
        if !(osc.envelope_radius > 0.0) || !(osc.frequency_rate > 0.0) {
            return Err(Error::InvalidInput("oscillation radius and rate must be > 0".into()));
        }
    }
    let mut family = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let centers: Vec<Vec<f64>> =
            bumps.iter().map(|(_, tr)| tr.center(n).coords().to_vec()).collect();
        let u = GridFunction::from_fn(geom, |x| {
            let mut v = 0.0;
            for ((spec, _), c) in bumps.iter().zip(&centers) {
                v += bump_value(x, c, spec);
            }
            if let Some(osc) = oscillation {
                let c = &centers[osc.follow];
                let lambda = osc.frequency_rate * n as f64;
                let envelope = bump_value(
                    x,
                    c,
                    &BumpSpec { amplitude: 1.0, radius: osc.envelope_radius },
                );
                v += osc.amplitude / lambda * (lambda * (x[0] - c[0])).sin() * envelope;
            }
            v
        })?;
        family.push(u);
    }
    let truth = SobolevTruth {
        centers: bumps
            .iter()
            .map(|(_, tr)| (1..=n_max).map(|n| tr.center(n)).collect())
            .collect(),
        amplitudes: bumps.iter().map(|(s, _)| s.amplitude).collect(),
        radii: bumps.iter().map(|(s, _)| s.radius).collect(),
    };
    Ok((family, truth))
}

/// A spreading function family: `u_n` is `n^(-1/p)` times a sum of `n`
/// disjoint unit bumps on a fixed lattice, so every `W^{1,p}` mass is the
/// same while each `L^q` norm with `q > p` decays like `n^(1/q - 1/p)`.
pub fn gen_vanishing_sobolev(
    geom: &GridGeometry,
    n_max: usize,
    p: f64,
) -> Result<Vec<GridFunction>> {
    if n_max == 0 || !(p >= 1.0) {
        return Err(Error::InvalidInput("need n_max >= 1 and p >= 1".into()));
    }
    let spec = BumpSpec { amplitude: 1.0, radius: 0.4 };
    // Lattice sites 1.0 apart, filled axis-0-fastest around the grid center.
    let sites = lattice_sites(geom, n_max)?;
    let mut family = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let scale = (n as f64).powf(-1.0 / p);
        let active = &sites[..n];
        let u = GridFunction::from_fn(geom, |x| {
            let mut v = 0.0;
            for site in active {
                v += bump_value(x, site, &spec);
            }
            scale * v
        })?;
        family.push(u);
    }
    Ok(family)
}

fn lattice_sites(geom: &GridGeometry, count: usize) -> Result<Vec<Vec<f64>>> {
    let dim = geom.dim();
    let mut per_axis = Vec::with_capacity(dim);
    for axis in 0..dim {
        let (lo, hi) = geom.axis_range(axis);
        // Keep a 0.5 margin so bumps of radius 0.4 stay strictly inside.
        let fit = ((hi - lo - 1.0).floor() as isize + 1).max(0) as usize;
        per_axis.push(fit);
    }
    let capacity: usize = per_axis.iter().product();
    if capacity < count {
        return Err(Error::InvalidInput(format!(
            "grid fits {capacity} spread sites but {count} are needed"
        )));
    }
    let mut sites = Vec::with_capacity(count);
    let mut idx = vec![0usize; dim];
    while sites.len() < count {
        let site: Vec<f64> = (0..dim)
            .map(|a| {
                let (lo, _) = geom.axis_range(a);
                lo + 0.5 + idx[a] as f64
            })
            .collect();
        sites.push(site);
        for a in 0..dim {
            idx[a] += 1;
            if idx[a] < per_axis[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    Ok(sites)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::{extract_profiles, ExtractionConfig};
    use crate::measures::Ball;

    #[test]
    fn splitmix64_matches_the_reference_stream() {
        let mut rng = SplitMix64::new(0);
        assert_eq!(rng.next_u64(), 0xE220_A839_7B1D_CDAF);
        let mut a = SplitMix64::new(42);
        let mut b = SplitMix64::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let mut c = SplitMix64::new(43);
        assert_ne!(SplitMix64::new(42).next_u64(), c.next_u64());
    }

    #[test]
    fn uniform_doubles_stay_in_range_with_sane_mean() {
        let mut rng = SplitMix64::new(7);
        let n = 10_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let x = rng.next_f64();
            assert!((0.0..1.0).contains(&x));
            sum += x;
        }
        let mean = sum / n as f64;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn random_measure_reaches_the_requested_mass() {
        let m = gen_random_measure(50, 3, 2.5, 99).unwrap();
        assert_eq!(m.len(), 50);
        assert_eq!(m.dim(), 3);
        assert!((m.total_mass() - 2.5).abs() < 1e-12);
        let again = gen_random_measure(50, 3, 2.5, 99).unwrap();
        assert_eq!(m.points(), again.points());
        assert_eq!(m.weights(), again.weights());
    }

    #[test]
    fn vanishing_family_spreads_with_unit_mass() {
        let seq = gen_vanishing(30, 2, 5).unwrap();
        assert_eq!(seq.len(), 30);
        for (k, m) in seq.items().iter().enumerate() {
            let n = k + 1;
            assert_eq!(m.len(), n);
            assert!((m.total_mass() - 1.0).abs() < 1e-12);
            if let Some(gap) = m.min_positive_gap() {
                assert!(gap >= n as f64 - 1.5, "index {n} gap {gap}");
            }
        }
    }

    #[test]
    fn dichotomy_family_reports_exact_cluster_masses() {
        let (seq, truth) = gen_dichotomy(&[0.3, 0.5, 0.2], 4.0, 12, 2, 11, 0.1).unwrap();
        assert_eq!(truth.bubble_masses, vec![0.5, 0.3, 0.2]);
        assert!((truth.total_mass - 1.1).abs() < 1e-12);
        for (k, m) in seq.items().iter().enumerate() {
            let n = k + 1;
            assert!((m.total_mass() - 1.1).abs() < 1e-12);
            for (i, &mass) in truth.bubble_masses.iter().enumerate() {
                let ball = Ball::new(truth.cluster_center(i, n, 2), 0.5).unwrap();
                let got = m.ball_mass(&ball).unwrap();
                assert!((got - mass).abs() < 1e-12, "cluster {i} at n={n}: {got}");
            }
        }
    }

    #[test]
    fn extraction_recovers_generated_cluster_masses() {
        let (seq, truth) = gen_dichotomy(&[0.6, 0.4], 4.0, 20, 1, 3, 0.0).unwrap();
        let cfg = ExtractionConfig::for_mass_bound(seq.mass_bound()).unwrap();
        let report = extract_profiles(&seq, &cfg).unwrap();
        assert_eq!(report.bubbles.len(), 2);
        for (b, &want) in report.bubbles.iter().zip(&truth.bubble_masses) {
            assert!((b.mass - want).abs() < 1e-9, "bubble {} mass {}", b.i, b.mass);
        }
    }

    #[test]
    fn multibubble_functions_match_the_closed_form() {
        let geom = GridGeometry::centered_cube(2, 81, 0.1).unwrap();
        let bumps = vec![
            (BumpSpec { amplitude: 1.0, radius: 0.7 }, Trajectory {
                start: vec![-0.5, 0.0],
                velocity: vec![-0.25, 0.0],
            }),
            (BumpSpec { amplitude: 0.8, radius: 0.7 }, Trajectory {
                start: vec![0.5, 0.0],
                velocity: vec![0.25, 0.0],
            }),
        ];
        let (family, truth) = gen_multibubble_sobolev(&geom, &bumps, 5, None).unwrap();
        assert_eq!(family.len(), 5);
        assert_eq!(truth.centers[0].len(), 5);
        // Peak of the first bump at n = 2 sits at -1 with value 1.
        let c = truth.centers[0][1].coords();
        assert_eq!(c, &[-1.0, 0.0]);
        let node = geom.nearest_node(c).unwrap();
        let flat = geom.flat_index(&node);
        assert!((family[1].values()[flat] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oscillation_rider_decays_in_amplitude_but_not_in_slope() {
        let geom = GridGeometry::centered_cube(1, 257, 0.05).unwrap();
        let bumps = vec![(BumpSpec { amplitude: 1.0, radius: 1.0 }, Trajectory {
            start: vec![0.0],
            velocity: vec![0.0],
        })];
        let osc = Oscillation {
            amplitude: 1.0,
            frequency_rate: 2.0,
            envelope_radius: 2.0,
            follow: 0,
        };
        let (with, _) = gen_multibubble_sobolev(&geom, &bumps, 6, Some(&osc)).unwrap();
        let (without, _) = gen_multibubble_sobolev(&geom, &bumps, 6, None).unwrap();
        // The rider's sup norm shrinks like 1/n...
        let sup = |u: &GridFunction| u.values().iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        let rider_2 = sup(&with[1].sub(&without[1]).unwrap());
        let rider_6 = sup(&with[5].sub(&without[5]).unwrap());
        assert!(rider_6 < 0.6 * rider_2, "sup {rider_2} -> {rider_6}");
        // ...while its gradient mass does not.
        let grad = |u: &GridFunction| {
            crate::sobolev::gradient_magnitude(u).lp_mass(2.0)
        };
        let g2 = grad(&with[1].sub(&without[1]).unwrap());
        let g6 = grad(&with[5].sub(&without[5]).unwrap());
        assert!(g6 > 0.5 * g2, "gradient mass {g2} -> {g6}");
    }

    #[test]
    fn spread_family_keeps_its_sobolev_mass_while_lq_decays() {
        let geom = GridGeometry::centered_cube(2, 61, 0.1).unwrap();
        let family = gen_vanishing_sobolev(&geom, 12, 2.0).unwrap();
        let w0 = family[0].w1p_norm(2.0);
        for u in &family {
            assert!((u.w1p_norm(2.0) - w0).abs() < 1e-9 * w0);
        }
        let l4: Vec<f64> = family.iter().map(|u| u.lq_norm(4.0)).collect();
        assert!(l4.windows(2).all(|w| w[1] < w[0] + 1e-12));
        assert!(l4[11] < 0.65 * l4[0], "L4 decay too slow: {} -> {}", l4[0], l4[11]);
    }

    #[test]
    fn lattice_rejects_overfull_requests() {
        let geom = GridGeometry::centered_cube(2, 21, 0.1).unwrap();
        // A side of 2 fits 2x2 sites; 20 bumps cannot.
        assert!(gen_vanishing_sobolev(&geom, 20, 2.0).is_err());
    }
}
