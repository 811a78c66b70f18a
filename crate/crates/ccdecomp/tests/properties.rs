//! Randomized invariant checks: curve monotonicity, index/bruteforce
//! agreement, extraction ledgers, scale selection, and mass partitions.

use proptest::prelude::*;

use ccdecomp::concfun::{
    concentration_curve, concentration_curve_bruteforce, diagonal_scales, CenterStrategy,
    RadiusGrid, TailWindow,
};
use ccdecomp::extraction::{extract_profiles, DecompositionVerdict, ExtractionConfig};
use ccdecomp::measures::{Ball, DiscreteMeasure, Point};
use ccdecomp::synth;

fn measure(dim: usize, atoms: Vec<(Vec<f64>, f64)>) -> DiscreteMeasure {
    let (points, weights): (Vec<Point>, Vec<f64>) = atoms
        .into_iter()
        .map(|(c, w)| (Point::new(c).unwrap(), w))
        .unzip();
    DiscreteMeasure::new(dim, points, weights).unwrap()
}

fn atoms_strategy(dim: usize) -> impl Strategy<Value = Vec<(Vec<f64>, f64)>> {
    prop::collection::vec(
        (prop::collection::vec(-10.0..10.0f64, dim), 0.01..1.0f64),
        1..30,
    )
}

fn any_dim_measure() -> impl Strategy<Value = (usize, DiscreteMeasure)> {
    (1usize..=3).prop_flat_map(|dim| {
        atoms_strategy(dim).prop_map(move |atoms| (dim, measure(dim, atoms)))
    })
}

proptest! {
    #[test]
    fn curve_is_monotone_and_bounded((_dim, m) in any_dim_measure()) {
        let grid = RadiusGrid::geometric(0.01, 50.0, 24).unwrap();
        let curve = concentration_curve(&m, &grid, &CenterStrategy::Atoms);
        let total = m.total_mass();
        for w in curve.values.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12, "curve decreased: {w:?}");
        }
        for &v in &curve.values {
            prop_assert!(v <= total + 1e-12, "value {v} above total {total}");
        }
        // The largest radius spans the whole cloud, so it captures everything.
        prop_assert!((curve.values.last().unwrap() - total).abs() <= 1e-12 * total.max(1.0));
    }

    #[test]
    fn bucket_index_matches_bruteforce_bitwise(
        (_dim, m) in any_dim_measure(),
        per_axis in 1usize..=3,
    ) {
        let grid = RadiusGrid::geometric(0.05, 30.0, 12).unwrap();
        for strategy in [CenterStrategy::Atoms, CenterStrategy::AtomsAndGrid { per_axis }] {
            let fast = concentration_curve(&m, &grid, &strategy);
            let slow = concentration_curve_bruteforce(&m, &grid, &strategy).unwrap();
            prop_assert_eq!(&fast.values, &slow.values);
            for (a, b) in fast.witnesses.iter().zip(&slow.witnesses) {
                prop_assert_eq!(a.coords(), b.coords());
            }
        }
    }

    #[test]
    fn doubling_weights_doubles_values_and_keeps_witnesses(
        (dim, m) in any_dim_measure(),
    ) {
        let grid = RadiusGrid::geometric(0.1, 40.0, 10).unwrap();
        let doubled = m.scale_weights(2.0).unwrap();
        let base = concentration_curve(&m, &grid, &CenterStrategy::Atoms);
        let twice = concentration_curve(&doubled, &grid, &CenterStrategy::Atoms);
        for (a, b) in base.values.iter().zip(&twice.values) {
            prop_assert_eq!(a * 2.0, *b);
        }
        for (a, b) in base.witnesses.iter().zip(&twice.witnesses) {
            prop_assert_eq!(a.coords(), b.coords(), "witness moved in dim {}", dim);
        }
    }

    #[test]
    fn ball_restriction_partitions_total_mass(
        (dim, m) in any_dim_measure(),
        center in prop::collection::vec(-10.0..10.0f64, 3),
        radius in 0.1..20.0f64,
    ) {
        let ball = Ball::new(Point::new(center[..dim].to_vec()).unwrap(), radius).unwrap();
        let inside = m.restrict_ball(&ball).unwrap().total_mass();
        let outside = m.restrict_outside_balls(std::slice::from_ref(&ball))
            .unwrap()
            .total_mass();
        let total = m.total_mass();
        prop_assert!((inside + outside - total).abs() <= 1e-12 * total.max(1.0));
    }

    #[test]
    fn tail_window_start_and_length_are_consistent(
        len in 1usize..100,
        min in 1usize..10,
        fraction in 0.0..1.0f64,
        k in 1usize..100,
    ) {
        let tail = TailWindow::Fraction { min, fraction };
        let w = tail.window_len(len).unwrap();
        let start = tail.start(len).unwrap();
        prop_assert!(w >= 1 && w <= len);
        prop_assert_eq!(start + w, len);

        let last = TailWindow::Last(k);
        if k <= len {
            prop_assert_eq!(last.start(len).unwrap(), len - k);
        } else {
            prop_assert!(last.start(len).is_err());
        }
    }

    #[test]
    fn diagonal_scale_picks_are_monotone_and_accurate(
        raw in prop::collection::vec(prop::collection::vec(0.0..1.0f64, 6), 1..12),
        targets in prop::collection::vec(0.0..1.5f64, 6),
    ) {
        // Rows are made nondecreasing by a running maximum.
        let values: Vec<Vec<f64>> = raw
            .iter()
            .map(|row| {
                row.iter()
                    .scan(0.0f64, |acc, &v| {
                        *acc = acc.max(v);
                        Some(*acc)
                    })
                    .collect()
            })
            .collect();
        let picks = diagonal_scales(&values, &targets).unwrap();
        prop_assert_eq!(picks.len(), values.len());
        for w in picks.windows(2) {
            prop_assert!(w[1] >= w[0], "picks not monotone: {picks:?}");
        }
        for (r, &c) in picks.iter().enumerate() {
            if c == 0 {
                continue; // column 0 can be a fallback with no guarantee
            }
            let tol = 1.0 / (c as f64 + 1.0);
            for row in &values[r..] {
                prop_assert!(
                    (row[c] - targets[c]).abs() < tol,
                    "picked column {c} misses its accuracy from row {r}"
                );
            }
        }
    }

    #[test]
    fn cluster_extraction_keeps_its_books(
        palette in 0usize..3,
        rate in 2.0..6.0f64,
        n_max in 8usize..14,
        dim in 1usize..=2,
        seed in any::<u64>(),
        dust in 0.0..0.1f64,
    ) {
        let masses: &[f64] = match palette {
            0 => &[0.6, 0.4],
            1 => &[0.5, 0.3, 0.2],
            _ => &[0.4, 0.3, 0.2, 0.1],
        };
        let (seq, _) = synth::gen_dichotomy(masses, rate, n_max, dim, seed, dust).unwrap();
        let mut cfg = ExtractionConfig::for_mass_bound(seq.mass_bound()).unwrap();
        // Radii capped well below the cluster separations keep distant mass
        // out of every candidate ball.
        cfg.radius_grid = Some(RadiusGrid::geometric(0.05, 3.0, 16).unwrap());
        let report = extract_profiles(&seq, &cfg).unwrap();

        prop_assert_eq!(report.verdict, DecompositionVerdict::Decomposed);
        prop_assert_eq!(report.bubbles.len(), masses.len());
        prop_assert!(report.disjointness_ok);
        prop_assert!(report.ledger.slack >= -1e-9, "slack {}", report.ledger.slack);
        for w in report.remainder_alphas.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12, "remainder level grew: {w:?}");
        }
        for (bubble, &target) in report.bubbles.iter().zip(masses) {
            prop_assert!(
                (bubble.mass - target).abs() <= 1e-9,
                "bubble {} mass {} vs cluster {target}",
                bubble.i,
                bubble.mass
            );
            for w in bubble.radii.windows(2) {
                prop_assert!(w[1] >= w[0]);
            }
            for &a in &bubble.annulus_masses {
                prop_assert!(a >= -1e-12);
            }
            let level = report
                .discards
                .iter()
                .find(|d| d.level == bubble.i)
                .expect("per-level diagnostics recorded");
            prop_assert!(
                bubble.mass >= level.alpha - cfg.mass_tol - 1e-9,
                "bubble {} mass {} under level {} at alpha {}",
                bubble.i,
                bubble.mass,
                level.level,
                level.alpha
            );
            prop_assert!(bubble.mass > level.alpha / 2.0, "half-level bound failed");
        }
    }
}
