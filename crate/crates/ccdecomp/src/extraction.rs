//! Trichotomy classification (vanishing / concentration / dichotomy) and
//! iterative bubble extraction for sequences of bounded discrete measures.
//!
//! Extraction peels concentrating "bubbles" off a sequence one level at a
//! time: estimate the concentration level `alpha` from the tail, pick per
//! index the smallest grid scale whose shrunken ball already holds `alpha`
//! up to tolerance, recenter, keep a subsequence with nondecreasing scales
//! and geometrically shrinking annulus leakage, then restrict the measures
//! outside the captured balls and repeat until the remainder vanishes or a
//! level cap is reached. All selections break ties toward the earliest
//! index, so results are reproducible bit for bit.

use serde::{Deserialize, Serialize};

use crate::concfun::{
    concentration_curve, limsup_profile_of_curves, sup_ball_mass, CenterStrategy,
    ConcentrationCurve, LimitProfile, RadiusGrid, TailWindow,
};
use crate::error::{Error, Result};
use crate::measures::{Ball, DiscreteMeasure, MeasureSequence, Point};

/// Fewest surviving indices a level may end with.
pub const MIN_SURVIVORS: usize = 3;

/// The scale map `phi` applied to a candidate radius before testing how much
/// mass the shrunken ball holds. Both choices satisfy `phi(s) <= s/2`, which
/// keeps the annulus between `phi(s)` and `s` nonempty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScaleFn {
    /// `phi(s) = s/2`.
    Half,
    /// `phi(s) = min(s^(1/3), s/2)`; sublinear for large scales, clamped so
    /// the `phi(s) <= s/2` contract also holds below `s = 8`.
    CubeRoot,
}

impl ScaleFn {
    pub fn apply(&self, s: f64) -> f64 {
        match self {
            ScaleFn::Half => 0.5 * s,
            ScaleFn::CubeRoot => s.cbrt().min(0.5 * s),
        }
    }
}

/// Tuning for classification and extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    /// Scale maps per level; the last entry is reused for deeper levels.
    pub phi: Vec<ScaleFn>,
    /// Concentration levels at or below this count as vanished.
    pub alpha_tol: f64,
    /// Slack allowed when a ball is asked to hold the level `alpha`.
    pub mass_tol: f64,
    /// Most bubbles extracted before reporting a truncated decomposition.
    pub k_max: usize,
    /// Tail window used for every limit estimate.
    pub tail: TailWindow,
    /// Annulus budget for bubble `i` at surviving position `pos` (both
    /// 1-based) is `annulus_budget_scale / 2^(pos + i)`.
    pub annulus_budget_scale: f64,
    /// The recentering candidate is searched at scale `R / recenter_shrink`.
    pub recenter_shrink: f64,
    /// Radius grid; `None` derives one from the input sequence.
    pub radius_grid: Option<RadiusGrid>,
}

impl ExtractionConfig {
    /// Defaults scaled to a mass bound `m`: `alpha_tol = 0.02 m`,
    /// `mass_tol = 0.01 m` (so a kept bubble holds more than half its level),
    /// eight levels, and annulus budgets starting from `m`.
    pub fn for_mass_bound(m: f64) -> Result<Self> {
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::InvalidInput(format!(
                "mass bound must be finite and > 0, got {m}"
            )));
        }
        Ok(ExtractionConfig {
            phi: vec![ScaleFn::Half],
            alpha_tol: 0.02 * m,
            mass_tol: 0.01 * m,
            k_max: 8,
            tail: TailWindow::default(),
            annulus_budget_scale: m,
            recenter_shrink: 12.0,
            radius_grid: None,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.phi.is_empty() {
            return Err(Error::InvalidInput("the scale schedule must be nonempty".into()));
        }
        if !(self.alpha_tol > 0.0) || !(self.mass_tol > 0.0) {
            return Err(Error::InvalidInput("tolerances must be > 0".into()));
        }
        if self.alpha_tol < 2.0 * self.mass_tol {
            return Err(Error::InvalidInput(format!(
                "alpha_tol ({}) must be at least twice mass_tol ({}) so kept bubbles hold \
                 more than half their level",
                self.alpha_tol, self.mass_tol
            )));
        }
        if self.k_max == 0 {
            return Err(Error::InvalidInput("k_max must be >= 1".into()));
        }
        if !(self.annulus_budget_scale > 0.0) || !(self.recenter_shrink >= 2.0) {
            return Err(Error::InvalidInput(
                "annulus budget scale must be > 0 and recenter shrink >= 2".into(),
            ));
        }
        Ok(())
    }

    fn phi_at(&self, level: usize) -> ScaleFn {
        let idx = (level - 1).min(self.phi.len() - 1);
        self.phi[idx]
    }
}

/// The three possible limiting behaviors of the sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrichotomyKind {
    /// `alpha` at the largest radius is within tolerance of zero.
    Vanishing,
    /// Some radius captures all but a tolerance of the mass on the tail.
    Concentration,
    /// Mass concentrates partially: `alpha` is positive but a definite gap
    /// to the total persists at every radius.
    Dichotomy,
}

/// Classification outcome with the evidence used to decide it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrichotomyVerdict {
    pub kind: TrichotomyKind,
    /// Tail-estimated concentration level at the largest radius.
    pub alpha: f64,
    /// Largest total mass over the sequence.
    pub mass_bound: f64,
    /// Per radius, the worst tail shortfall `total_n - q_n(r)`.
    pub margins: Vec<f64>,
    /// Smallest radius whose margin clears the tolerance (concentration only).
    pub witness_radius: Option<f64>,
    /// Maximizing centers of the tail curves at the witness radius.
    pub witness_centers: Vec<Point>,
    pub profile: LimitProfile,
}

/// Classifies a sequence as vanishing, concentrating, or dichotomic.
pub fn classify(seq: &MeasureSequence, cfg: &ExtractionConfig) -> Result<TrichotomyVerdict> {
    cfg.validate()?;
    let grid = cfg
        .radius_grid
        .clone()
        .unwrap_or_else(|| RadiusGrid::default_for_sequence(seq));
    let curves: Vec<ConcentrationCurve> = seq
        .items()
        .iter()
        .map(|m| concentration_curve(m, &grid, &CenterStrategy::Atoms))
        .collect();
    let profile = limsup_profile_of_curves(&curves, &grid, &cfg.tail)?;
    let start = cfg.tail.start(curves.len())?;
    let tail = &curves[start..];
    let margins: Vec<f64> = (0..grid.len())
        .map(|r| {
            tail.iter()
                .map(|c| c.total_mass - c.values[r])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let alpha = profile.alpha;
    if alpha <= cfg.alpha_tol {
        return Ok(TrichotomyVerdict {
            kind: TrichotomyKind::Vanishing,
            alpha,
            mass_bound: seq.mass_bound(),
            margins,
            witness_radius: None,
            witness_centers: Vec::new(),
            profile,
        });
    }
    let captured = margins.iter().position(|&m| m < cfg.alpha_tol);
    if let Some(r_idx) = captured {
        let witness_centers = tail.iter().map(|c| c.witnesses[r_idx].clone()).collect();
        return Ok(TrichotomyVerdict {
            kind: TrichotomyKind::Concentration,
            alpha,
            mass_bound: seq.mass_bound(),
            witness_radius: Some(grid.radii()[r_idx]),
            witness_centers,
            margins,
            profile,
        });
    }
    Ok(TrichotomyVerdict {
        kind: TrichotomyKind::Dichotomy,
        alpha,
        mass_bound: seq.mass_bound(),
        margins,
        witness_radius: None,
        witness_centers: Vec::new(),
        profile,
    })
}

/// Tail-estimated concentration level of a family of measures: the limit
/// profile's value at the largest radius. Zero for perfectly spreading
/// families, so it doubles as a "how far from vanished" score.
pub fn vanishing_score(
    measures: &[DiscreteMeasure],
    grid: &RadiusGrid,
    tail: &TailWindow,
) -> Result<f64> {
    let curves: Vec<ConcentrationCurve> = measures
        .iter()
        .map(|m| concentration_curve(m, grid, &CenterStrategy::Atoms))
        .collect();
    Ok(limsup_profile_of_curves(&curves, grid, tail)?.alpha)
}

/// One extracted bubble: a captured ball per surviving index plus the mass
/// bookkeeping around it. `centers[n]` and `radii[n]` describe the ball at
/// the n-th surviving index; `annulus_masses[n]` is the mass between the
/// ball and its doubled-scale enclosure, the leakage the selection bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bubble {
    /// 1-based extraction order.
    pub i: usize,
    /// Tail-mean captured mass.
    pub mass: f64,
    pub centers: Vec<Point>,
    pub radii: Vec<f64>,
    pub inner_masses: Vec<f64>,
    pub annulus_masses: Vec<f64>,
    /// Outer scales the annuli are measured against (twice the radius for
    /// the halving scale map).
    pub outer_radii: Vec<f64>,
}

impl Bubble {
    /// The captured ball at surviving position `pos`.
    pub fn ball(&self, pos: usize) -> Ball {
        Ball::new(self.centers[pos].clone(), self.radii[pos])
            .expect("bubble radii are validated positive")
    }

    fn filter(&mut self, keep: &[usize]) {
        self.centers = keep.iter().map(|&j| self.centers[j].clone()).collect();
        self.radii = keep.iter().map(|&j| self.radii[j]).collect();
        self.inner_masses = keep.iter().map(|&j| self.inner_masses[j]).collect();
        self.annulus_masses = keep.iter().map(|&j| self.annulus_masses[j]).collect();
        self.outer_radii = keep.iter().map(|&j| self.outer_radii[j]).collect();
    }
}

/// Mass accounting of a finished decomposition: the bubble masses must never
/// exceed the sequence mass bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassLedger {
    /// Sum of the extracted bubble masses.
    pub sum_m: f64,
    /// Mass bound of the input sequence.
    #[serde(rename = "M")]
    pub mass_bound: f64,
    /// `mass_bound - sum_m`.
    pub slack: f64,
}

/// Terminal state of the extraction loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecompositionVerdict {
    /// The remainder level fell below tolerance after at least one bubble.
    Decomposed,
    /// The sequence vanished before any bubble was extracted.
    Vanishing,
    /// The level cap was reached with concentration still present.
    Truncated,
}

/// Why surviving indices were dropped at one extraction level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelDiscards {
    /// 1-based extraction level.
    pub level: usize,
    /// Concentration level the bubble was extracted at.
    pub alpha: f64,
    /// Indices with no grid scale holding the level (dropped first).
    pub no_scale: usize,
    /// Indices dropped by the monotone-scale / annulus-budget selection.
    pub selection: usize,
    /// Leading indices dropped to restore ball disjointness.
    pub prefix: usize,
    /// Whether the strict annulus budgets held (no relaxation needed).
    pub budget_ok: bool,
    /// Budget relaxations tried before the selection succeeded.
    pub attempts: usize,
}

/// Full output of `extract_profiles`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub schema_version: u32,
    pub verdict: DecompositionVerdict,
    /// Concentration level of the input sequence (all indices).
    pub alpha: f64,
    /// Labels of the surviving subsequence (input labels when present,
    /// otherwise 0-based positions).
    pub indices: Vec<i64>,
    pub bubbles: Vec<Bubble>,
    /// Concentration level left after removing all bubbles.
    pub remainder_score: f64,
    /// Levels left after removing the first 0, 1, ..., k bubbles, all
    /// evaluated on the final surviving subsequence; nonincreasing.
    pub remainder_alphas: Vec<f64>,
    pub disjointness_ok: bool,
    pub discards: Vec<LevelDiscards>,
    pub ledger: MassLedger,
    pub config_echo: ExtractionConfig,
}

/// Current schema of [`DecompositionReport`] JSON.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// A ball-overlap violation at one surviving position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisjointnessViolation {
    /// 0-based position in the surviving subsequence.
    pub position: usize,
    /// 1-based bubble numbers of the overlapping pair.
    pub bubble_a: usize,
    pub bubble_b: usize,
}

/// Checks that the bubbles' balls are pairwise disjoint at every surviving
/// position (closed balls: touching counts as overlap).
pub fn disjointness_check(bubbles: &[Bubble]) -> Vec<DisjointnessViolation> {
    let mut violations = Vec::new();
    let positions = bubbles.first().map_or(0, |b| b.centers.len());
    for pos in 0..positions {
        for a in 0..bubbles.len() {
            for b in (a + 1)..bubbles.len() {
                let dist = bubbles[a].centers[pos].dist(&bubbles[b].centers[pos]);
                if dist <= bubbles[a].radii[pos] + bubbles[b].radii[pos] {
                    violations.push(DisjointnessViolation {
                        position: pos,
                        bubble_a: bubbles[a].i,
                        bubble_b: bubbles[b].i,
                    });
                }
            }
        }
    }
    violations
}

/// One level's raw extraction before disjointness filtering.
#[derive(Debug, Clone)]
pub struct CoreExtraction {
    /// Positions (into the input slice) that survived selection.
    pub survivors: Vec<usize>,
    pub centers: Vec<Point>,
    pub radii: Vec<f64>,
    pub outer_radii: Vec<f64>,
    pub inner_masses: Vec<f64>,
    pub annulus_masses: Vec<f64>,
    /// How many input positions had no qualifying scale at all.
    pub no_scale: usize,
    pub budget_ok: bool,
    pub attempts: usize,
}

/// Extracts one bubble at level `alpha` from a family of measures.
///
/// Per index: the smallest grid radius `t` with `sup_x mu(B(x, phi(t))) >=
/// alpha - mass_tol` is chosen, the maximizing center is recentered (a
/// candidate found at scale `t / recenter_shrink` replaces it when it stays
/// within `t/6` and its half-`t` ball still holds the level), and the kept
/// ball gets radius `phi(t)` (or `t/2` after recentering). A greedy pass
/// then keeps a subsequence with nondecreasing `t` whose annulus mass
/// between the ball and scale `t` stays under `annulus_budget_scale /
/// 2^(pos + level)`; budgets are doubled up to `ceil(mass_bound / alpha)`
/// times if fewer than [`MIN_SURVIVORS`] indices survive, then dropped
/// entirely (`budget_ok = false`).
pub fn extract_concentrating_core(
    measures: &[DiscreteMeasure],
    alpha: f64,
    level: usize,
    grid: &RadiusGrid,
    cfg: &ExtractionConfig,
) -> Result<CoreExtraction> {
    cfg.validate()?;
    if alpha <= cfg.alpha_tol {
        return Err(Error::VanishingInput { alpha, tol: cfg.alpha_tol });
    }
    if level == 0 {
        return Err(Error::InvalidInput("levels are 1-based".into()));
    }
    let phi = cfg.phi_at(level);
    let need = alpha - cfg.mass_tol;

    struct Candidate {
        pos: usize,
        center: Point,
        radius: f64,
        outer: f64,
        inner_mass: f64,
        annulus_mass: f64,
    }

    let mut candidates: Vec<Candidate> = Vec::new();
    let mut no_scale = 0usize;
    for (pos, m) in measures.iter().enumerate() {
        let mut found = None;
        for &t in grid.radii() {
            let (q, witness) = sup_ball_mass(m, phi.apply(t), &CenterStrategy::Atoms);
            if q >= need {
                found = Some((t, witness));
                break;
            }
        }
        let Some((t, witness)) = found else {
            no_scale += 1;
            continue;
        };
        // Recentering: look for a tighter center at a much smaller scale; it
        // must stay near the witness and its half-scale ball must still hold
        // the level, otherwise the witness stands.
        let mut center = witness.clone();
        let mut radius = phi.apply(t);
        let around = Ball::new(witness.clone(), t).expect("grid radii are positive");
        let local = m.restrict_ball(&around)?;
        let (_, fine) = sup_ball_mass(&local, t / cfg.recenter_shrink, &CenterStrategy::Atoms);
        if !local.is_empty() && fine.dist(&witness) <= t / 6.0 {
            let half = Ball::new(fine.clone(), 0.5 * t).expect("grid radii are positive");
            if m.ball_mass(&half)? >= need {
                center = fine;
                radius = 0.5 * t;
            }
        }
        let inner_mass = m.ball_mass(&Ball::new(center.clone(), radius)?)?;
        let outer_mass = m.ball_mass(&Ball::new(center.clone(), t)?)?;
        candidates.push(Candidate {
            pos,
            center,
            radius,
            outer: t,
            inner_mass,
            annulus_mass: outer_mass - inner_mass,
        });
    }

    let mass_bound = measures.iter().map(|m| m.total_mass()).fold(0.0, f64::max);
    let max_attempts = ((mass_bound / alpha).ceil() as usize).max(1);
    let select = |budget: Option<f64>| -> Vec<usize> {
        let mut chosen = Vec::new();
        let mut last_outer = f64::NEG_INFINITY;
        for (j, c) in candidates.iter().enumerate() {
            if c.outer < last_outer {
                continue;
            }
            if let Some(scale) = budget {
                let pos = chosen.len() + 1;
                let allowance = scale / (2f64).powi((pos + level) as i32);
                if c.annulus_mass > allowance {
                    continue;
                }
            }
            chosen.push(j);
            last_outer = c.outer;
        }
        chosen
    };

    let mut budget_ok = true;
    let mut attempts = 0usize;
    let mut chosen = select(Some(cfg.annulus_budget_scale));
    while chosen.len() < MIN_SURVIVORS && attempts < max_attempts {
        attempts += 1;
        budget_ok = false;
        let relaxed = cfg.annulus_budget_scale * (2f64).powi(attempts as i32);
        chosen = select(Some(relaxed));
    }
    if chosen.len() < MIN_SURVIVORS {
        budget_ok = false;
        chosen = select(None);
    }
    if chosen.len() < MIN_SURVIVORS {
        return Err(Error::IterationBudget { limit: max_attempts });
    }

    Ok(CoreExtraction {
        survivors: chosen.iter().map(|&j| candidates[j].pos).collect(),
        centers: chosen.iter().map(|&j| candidates[j].center.clone()).collect(),
        radii: chosen.iter().map(|&j| candidates[j].radius).collect(),
        outer_radii: chosen.iter().map(|&j| candidates[j].outer).collect(),
        inner_masses: chosen.iter().map(|&j| candidates[j].inner_mass).collect(),
        annulus_masses: chosen.iter().map(|&j| candidates[j].annulus_mass).collect(),
        no_scale,
        budget_ok,
        attempts,
    })
}

/// Runs the full extraction loop and assembles the report.
pub fn extract_profiles(
    seq: &MeasureSequence,
    cfg: &ExtractionConfig,
) -> Result<DecompositionReport> {
    cfg.validate()?;
    let grid = cfg
        .radius_grid
        .clone()
        .unwrap_or_else(|| RadiusGrid::default_for_sequence(seq));
    let originals = seq.items();
    let labels: Vec<i64> = match seq.labels() {
        Some(l) => l.to_vec(),
        None => (0..originals.len() as i64).collect(),
    };

    // `alive` maps surviving positions to original positions; `current`
    // holds the measures with all captured balls removed, aligned to it.
    let mut alive: Vec<usize> = (0..originals.len()).collect();
    let mut current: Vec<DiscreteMeasure> = originals.to_vec();
    let mut bubbles: Vec<Bubble> = Vec::new();
    let mut discards: Vec<LevelDiscards> = Vec::new();
    let mut input_alpha = None;
    let verdict;

    let mut level = 1usize;
    loop {
        let alpha = vanishing_score(&current, &grid, &cfg.tail)?;
        if input_alpha.is_none() {
            input_alpha = Some(alpha);
        }
        if alpha <= cfg.alpha_tol {
            verdict = if bubbles.is_empty() {
                DecompositionVerdict::Vanishing
            } else {
                DecompositionVerdict::Decomposed
            };
            break;
        }
        if level > cfg.k_max {
            verdict = DecompositionVerdict::Truncated;
            break;
        }

        let core = extract_concentrating_core(&current, alpha, level, &grid, cfg)?;

        // The subsequence shrinks: every earlier bubble is filtered to the
        // survivors before the new bubble is compared against it.
        for b in bubbles.iter_mut() {
            b.filter(&core.survivors);
        }
        let mut bubble = Bubble {
            i: level,
            mass: 0.0,
            centers: core.centers,
            radii: core.radii,
            inner_masses: core.inner_masses,
            annulus_masses: core.annulus_masses,
            outer_radii: core.outer_radii,
        };

        // Disjointness against earlier bubbles holds only once the captured
        // balls have separated; drop the shortest prefix after which every
        // position is clean.
        let survivors = core.survivors.clone();
        let mut first_clean = 0usize;
        for pos in 0..survivors.len() {
            let clean = bubbles.iter().all(|old| {
                let dist = old.centers[pos].dist(&bubble.centers[pos]);
                dist > old.radii[pos] + bubble.radii[pos]
            });
            if !clean {
                first_clean = pos + 1;
            }
        }
        if survivors.len() - first_clean < MIN_SURVIVORS {
            return Err(Error::NoSubsequence {
                min_len: MIN_SURVIVORS,
                beta: cfg.alpha_tol,
                best_oscillation: f64::NAN,
            });
        }
        let keep: Vec<usize> = (first_clean..survivors.len()).collect();
        if first_clean > 0 {
            for b in bubbles.iter_mut() {
                b.filter(&keep);
            }
            bubble.filter(&keep);
        }

        let selection_dropped = current.len() - core.no_scale - survivors.len();
        discards.push(LevelDiscards {
            level,
            alpha,
            no_scale: core.no_scale,
            selection: selection_dropped,
            prefix: first_clean,
            budget_ok: core.budget_ok,
            attempts: core.attempts,
        });

        // Restrict the surviving measures outside the captured balls and
        // advance the alive set.
        let kept_positions: Vec<usize> = keep.iter().map(|&j| survivors[j]).collect();
        let mut next_current = Vec::with_capacity(kept_positions.len());
        for (slot, &pos) in kept_positions.iter().enumerate() {
            let ball = bubble.ball(slot);
            next_current.push(current[pos].restrict_outside_balls(std::slice::from_ref(&ball))?);
        }
        alive = kept_positions.iter().map(|&pos| alive[pos]).collect();
        current = next_current;
        bubbles.push(bubble);
        level += 1;
    }

    // Bubble masses: tail means of the captured masses on the final
    // subsequence, so that disjointness makes their sum respect the bound.
    let tail_start = cfg.tail.start(alive.len())?;
    for b in bubbles.iter_mut() {
        let tail = &b.inner_masses[tail_start..];
        b.mass = tail.iter().sum::<f64>() / tail.len() as f64;
    }

    // Remainder levels after removing 0, 1, ..., k bubbles, all on the final
    // subsequence with the same grid. Restricting outside more balls can
    // only lower every curve, so this vector is exactly nonincreasing.
    let mut remainder_alphas = Vec::with_capacity(bubbles.len() + 1);
    let mut stripped: Vec<DiscreteMeasure> = alive.iter().map(|&n| originals[n].clone()).collect();
    remainder_alphas.push(vanishing_score(&stripped, &grid, &cfg.tail)?);
    for b in &bubbles {
        for (pos, m) in stripped.iter_mut().enumerate() {
            let ball = b.ball(pos);
            *m = m.restrict_outside_balls(std::slice::from_ref(&ball))?;
        }
        remainder_alphas.push(vanishing_score(&stripped, &grid, &cfg.tail)?);
    }
    let remainder_score = *remainder_alphas.last().unwrap();

    let sum_m: f64 = bubbles.iter().map(|b| b.mass).sum();
    let mass_bound = seq.mass_bound();
    let violations = disjointness_check(&bubbles);

    Ok(DecompositionReport {
        schema_version: REPORT_SCHEMA_VERSION,
        verdict,
        alpha: input_alpha.unwrap_or(0.0),
        indices: alive.iter().map(|&n| labels[n]).collect(),
        bubbles,
        remainder_score,
        remainder_alphas,
        disjointness_ok: violations.is_empty(),
        discards,
        ledger: MassLedger { sum_m, mass_bound, slack: mass_bound - sum_m },
        config_echo: cfg.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(coords: &[f64]) -> Point {
        Point::new(coords.to_vec()).unwrap()
    }

    fn cluster(center: f64, mass: f64) -> Vec<(Vec<f64>, f64)> {
        // Six atoms inside a radius-0.25 interval around `center`.
        let offsets = [-0.25, -0.15, -0.05, 0.05, 0.15, 0.25];
        offsets.iter().map(|o| (vec![center + o], mass / 6.0)).collect()
    }

    fn measure_1d(atoms: &[(Vec<f64>, f64)]) -> DiscreteMeasure {
        DiscreteMeasure::new(
            1,
            atoms.iter().map(|(c, _)| pt(c)).collect(),
            atoms.iter().map(|(_, w)| *w).collect(),
        )
        .unwrap()
    }

    fn constant_cluster_sequence(n: usize) -> MeasureSequence {
        let items = (0..n).map(|_| measure_1d(&cluster(0.0, 1.0))).collect();
        MeasureSequence::new(items).unwrap()
    }

    fn separating_two_cluster_sequence(n: usize) -> MeasureSequence {
        let items = (1..=n)
            .map(|k| {
                let mut atoms = cluster(0.0, 0.6);
                atoms.extend(cluster(4.0 * k as f64, 0.4));
                measure_1d(&atoms)
            })
            .collect();
        MeasureSequence::new(items).unwrap()
    }

    fn spreading_sequence(n: usize) -> MeasureSequence {
        let items = (1..=n)
            .map(|k| {
                let atoms: Vec<(Vec<f64>, f64)> =
                    (0..k).map(|j| (vec![(j * k) as f64], 1.0 / k as f64)).collect();
                measure_1d(&atoms)
            })
            .collect();
        MeasureSequence::new(items).unwrap()
    }

    #[test]
    fn scale_maps_stay_below_half() {
        for s in [0.01, 0.5, 1.0, 7.9, 8.0, 9.0, 1000.0] {
            assert!(ScaleFn::Half.apply(s) <= 0.5 * s + 1e-15);
            assert!(ScaleFn::CubeRoot.apply(s) <= 0.5 * s + 1e-15, "cuberoot at {s}");
        }
        assert_eq!(ScaleFn::CubeRoot.apply(27.0), 3.0);
        assert_eq!(ScaleFn::CubeRoot.apply(1.0), 0.5);
    }

    #[test]
    fn config_defaults_scale_with_the_mass_bound() {
        let cfg = ExtractionConfig::for_mass_bound(2.0).unwrap();
        assert_eq!(cfg.alpha_tol, 0.04);
        assert_eq!(cfg.mass_tol, 0.02);
        assert_eq!(cfg.k_max, 8);
        assert!(cfg.validate().is_ok());
        assert!(ExtractionConfig::for_mass_bound(0.0).is_err());
        let mut bad = cfg;
        bad.mass_tol = bad.alpha_tol;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn classify_flags_a_fixed_cluster_as_concentration() {
        let seq = constant_cluster_sequence(12);
        let cfg = ExtractionConfig::for_mass_bound(seq.mass_bound()).unwrap();
        let verdict = classify(&seq, &cfg).unwrap();
        assert_eq!(verdict.kind, TrichotomyKind::Concentration);
        assert!((verdict.alpha - 1.0).abs() < 1e-12);
        assert!(verdict.witness_radius.is_some());
        assert!(!verdict.witness_centers.is_empty());
    }

    #[test]
    fn classify_flags_a_spreading_family_as_vanishing() {
        let seq = spreading_sequence(100);
        let cfg = ExtractionConfig::for_mass_bound(seq.mass_bound()).unwrap();
        let verdict = classify(&seq, &cfg).unwrap();
        assert_eq!(verdict.kind, TrichotomyKind::Vanishing);
        assert!(verdict.alpha <= cfg.alpha_tol);
    }

    #[test]
    fn classify_flags_separating_clusters_as_dichotomy() {
        let seq = separating_two_cluster_sequence(20);
        let cfg = ExtractionConfig::for_mass_bound(seq.mass_bound()).unwrap();
        let verdict = classify(&seq, &cfg).unwrap();
        assert_eq!(verdict.kind, TrichotomyKind::Dichotomy);
        assert!((verdict.alpha - 0.6).abs() < 1e-9, "alpha = {}", verdict.alpha);
        // Every margin stays at least the smaller cluster's mass.
        for &m in &verdict.margins {
            assert!(m >= 0.4 - 1e-9);
        }
    }

    #[test]
    fn core_rejects_vanished_levels() {
        let seq = constant_cluster_sequence(6);
        let cfg = ExtractionConfig::for_mass_bound(1.0).unwrap();
        let grid = RadiusGrid::default_for_sequence(&seq);
        let err = extract_concentrating_core(seq.items(), 0.01, 1, &grid, &cfg).unwrap_err();
        assert!(matches!(err, Error::VanishingInput { .. }));
    }

    #[test]
    fn core_captures_a_constant_cluster_with_empty_annuli() {
        let seq = constant_cluster_sequence(8);
        let cfg = ExtractionConfig::for_mass_bound(1.0).unwrap();
        let grid = RadiusGrid::default_for_sequence(&seq);
        let core = extract_concentrating_core(seq.items(), 1.0, 1, &grid, &cfg).unwrap();
        assert_eq!(core.survivors, (0..8).collect::<Vec<_>>());
        assert!(core.budget_ok);
        assert_eq!(core.no_scale, 0);
        for (pos, &im) in core.inner_masses.iter().enumerate() {
            assert!(im >= 1.0 - cfg.mass_tol, "position {pos} held {im}");
        }
        for &a in &core.annulus_masses {
            assert!(a.abs() < 1e-12);
        }
        assert!(core.radii.windows(2).all(|w| w[1] >= w[0]));
        assert!(core.outer_radii.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn extraction_splits_two_separating_clusters() {
        let seq = separating_two_cluster_sequence(24);
        let cfg = ExtractionConfig::for_mass_bound(seq.mass_bound()).unwrap();
        let report = extract_profiles(&seq, &cfg).unwrap();
        assert_eq!(report.verdict, DecompositionVerdict::Decomposed);
        assert_eq!(report.bubbles.len(), 2);
        assert!((report.bubbles[0].mass - 0.6).abs() < 0.02, "m1 = {}", report.bubbles[0].mass);
        assert!((report.bubbles[1].mass - 0.4).abs() < 0.02, "m2 = {}", report.bubbles[1].mass);
        assert!(report.disjointness_ok);
        assert!(report.ledger.slack >= -1e-9);
        assert!(report
            .remainder_alphas
            .windows(2)
            .all(|w| w[1] <= w[0] + 1e-15));
        assert!(report.remainder_score <= cfg.alpha_tol);
        // The first bubble sits on the heavier cluster at the origin.
        let b1 = &report.bubbles[0];
        for c in &b1.centers {
            assert!(c.coords()[0].abs() <= 0.5, "bubble 1 strayed to {:?}", c);
        }
    }

    #[test]
    fn extraction_reports_vanishing_without_bubbles() {
        let seq = spreading_sequence(100);
        let cfg = ExtractionConfig::for_mass_bound(seq.mass_bound()).unwrap();
        let report = extract_profiles(&seq, &cfg).unwrap();
        assert_eq!(report.verdict, DecompositionVerdict::Vanishing);
        assert!(report.bubbles.is_empty());
        assert_eq!(report.remainder_score, report.alpha);
        assert_eq!(report.indices.len(), 100);
    }

    #[test]
    fn extraction_truncates_at_the_level_cap() {
        // Three well-separated clusters but only one level allowed.
        let items: Vec<DiscreteMeasure> = (1..=16)
            .map(|k| {
                let mut atoms = cluster(0.0, 0.5);
                atoms.extend(cluster(5.0 * k as f64, 0.3));
                atoms.extend(cluster(-7.0 * k as f64, 0.2));
                measure_1d(&atoms)
            })
            .collect();
        let seq = MeasureSequence::new(items).unwrap();
        let mut cfg = ExtractionConfig::for_mass_bound(seq.mass_bound()).unwrap();
        cfg.k_max = 1;
        let report = extract_profiles(&seq, &cfg).unwrap();
        assert_eq!(report.verdict, DecompositionVerdict::Truncated);
        assert_eq!(report.bubbles.len(), 1);
        assert!(report.remainder_score > cfg.alpha_tol);
    }

    #[test]
    fn tie_between_equal_clusters_goes_to_the_earlier_atoms() {
        // Two equal clusters; the argmax tie at the capture scale must pick
        // the cluster whose atoms come first in the input order.
        let items: Vec<DiscreteMeasure> = (1..=12)
            .map(|k| {
                let mut atoms = cluster(0.0, 0.5);
                atoms.extend(cluster(6.0 * k as f64, 0.5));
                measure_1d(&atoms)
            })
            .collect();
        let seq = MeasureSequence::new(items).unwrap();
        let cfg = ExtractionConfig::for_mass_bound(seq.mass_bound()).unwrap();
        let report = extract_profiles(&seq, &cfg).unwrap();
        assert_eq!(report.bubbles.len(), 2);
        for c in &report.bubbles[0].centers {
            assert!(c.coords()[0].abs() <= 0.5);
        }
    }

    #[test]
    fn labels_survive_into_the_report() {
        let seq = separating_two_cluster_sequence(12);
        let labeled = MeasureSequence::with_labels(
            seq.items().to_vec(),
            (0..12).map(|n| 100 + n as i64).collect(),
        )
        .unwrap();
        let cfg = ExtractionConfig::for_mass_bound(labeled.mass_bound()).unwrap();
        let report = extract_profiles(&labeled, &cfg).unwrap();
        assert!(report.indices.iter().all(|&l| (100..112).contains(&l)));
        assert!(report.indices.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn disjointness_check_reports_pairs_one_based() {
        let mk = |x: f64, r: f64| Bubble {
            i: 0,
            mass: 0.0,
            centers: vec![pt(&[x])],
            radii: vec![r],
            inner_masses: vec![0.0],
            annulus_masses: vec![0.0],
            outer_radii: vec![2.0 * r],
        };
        let mut a = mk(0.0, 1.0);
        let mut b = mk(1.5, 1.0);
        let mut c = mk(10.0, 1.0);
        a.i = 1;
        b.i = 2;
        c.i = 3;
        let violations = disjointness_check(&[a, b, c]);
        assert_eq!(violations.len(), 1);
        assert_eq!((violations[0].bubble_a, violations[0].bubble_b), (1, 2));
        assert_eq!(violations[0].position, 0);
    }

    #[test]
    fn touching_balls_count_as_overlap() {
        let mk = |x: f64, i: usize| Bubble {
            i,
            mass: 0.0,
            centers: vec![pt(&[x])],
            radii: vec![1.0],
            inner_masses: vec![0.0],
            annulus_masses: vec![0.0],
            outer_radii: vec![2.0],
        };
        assert_eq!(disjointness_check(&[mk(0.0, 1), mk(2.0, 2)]).len(), 1);
        assert!(disjointness_check(&[mk(0.0, 1), mk(2.0 + 1e-9, 2)]).is_empty());
    }

    #[test]
    fn report_serializes_with_the_documented_field_names() {
        let seq = separating_two_cluster_sequence(12);
        let cfg = ExtractionConfig::for_mass_bound(seq.mass_bound()).unwrap();
        let report = extract_profiles(&seq, &cfg).unwrap();
        let json = serde_json::to_value(&report).unwrap();
        for key in [
            "schema_version",
            "verdict",
            "alpha",
            "indices",
            "bubbles",
            "remainder_score",
            "remainder_alphas",
            "disjointness_ok",
            "discards",
            "ledger",
            "config_echo",
        ] {
            assert!(json.get(key).is_some(), "missing key {key}");
        }
        let ledger = json.get("ledger").unwrap();
        for key in ["sum_m", "M", "slack"] {
            assert!(ledger.get(key).is_some(), "missing ledger key {key}");
        }
        let bubble = &json.get("bubbles").unwrap().as_array().unwrap()[0];
        for key in ["i", "mass", "centers", "radii", "inner_masses", "annulus_masses"] {
            assert!(bubble.get(key).is_some(), "missing bubble key {key}");
        }
        assert!(bubble.get("centers").unwrap().as_array().unwrap()[0].is_array());
    }

    #[test]
    fn half_mass_holds_when_alpha_tol_doubles_mass_tol() {
        let seq = separating_two_cluster_sequence(20);
        let cfg = ExtractionConfig::for_mass_bound(seq.mass_bound()).unwrap();
        let report = extract_profiles(&seq, &cfg).unwrap();
        for (k, b) in report.bubbles.iter().enumerate() {
            // Level alpha at extraction time is recorded in the discards.
            let alpha = report.discards[k].alpha;
            assert!(b.mass > 0.5 * alpha, "bubble {} mass {} vs alpha {alpha}", b.i, b.mass);
        }
    }
}
