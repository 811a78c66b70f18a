//! Command-line pipeline around the `ccdecomp` library: classify measure
//! sequences, extract bubble decompositions, decompose grid-function
//! families, generate fixtures, and validate reports.
//!
//! Exit codes: 0 on success, 2 when an extraction hit its level cap with
//! concentration left over, 1 on any error.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;

use ccdecomp::concfun::{
    concentration_curve, limsup_profile, CenterStrategy, RadiusGrid, TailWindow,
};
use ccdecomp::extraction::{
    classify, extract_profiles, DecompositionReport, DecompositionVerdict, ExtractionConfig,
    ScaleFn,
};
use ccdecomp::measures::MeasureSequence;
use ccdecomp::sobolev::{
    density_rho, norm_expansion_check, profile_extract, GridFunction, GridGeometry, SeriesParams,
    SobolevParams,
};
use ccdecomp::synth;

/// Exit code for decompositions stopped by the level cap.
pub const EXIT_TRUNCATED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ccdecomp", version, about = "Concentration analysis and profile decomposition")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify a measure sequence as vanishing, concentration, or dichotomy.
    Classify(ClassifyArgs),
    /// Extract a bubble decomposition from a measure sequence.
    Extract(ExtractArgs),
    /// Decompose a family of grid functions into translation profiles.
    Sobolev(SobolevArgs),
    /// Generate fixture data sets.
    Gen(GenArgs),
    /// Validate the internal consistency of a decomposition report.
    Check(CheckArgs),
}

/// Tuning shared by every analysis command; unset values fall back to the
/// config file, then to mass-scaled defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct TuningArgs {
    /// JSON config file; command-line flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Concentration levels at or below this count as vanished.
    #[arg(long)]
    pub alpha_tol: Option<f64>,
    /// Slack allowed when a ball must hold the concentration level.
    #[arg(long)]
    pub mass_tol: Option<f64>,
    /// Most bubbles before the decomposition is reported truncated.
    #[arg(long)]
    pub kmax: Option<usize>,
    /// Comma-separated per-level scale maps (half, cuberoot).
    #[arg(long)]
    pub phi: Option<String>,
    /// Use exactly the last K indices as the tail window.
    #[arg(long)]
    pub tail: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Sequence file (leading index column) or directory of measure files.
    #[arg(long)]
    pub input: PathBuf,
    /// Directory for classify.json and profile.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub tuning: TuningArgs,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Sequence file (leading index column) or directory of measure files.
    #[arg(long)]
    pub input: PathBuf,
    /// Directory for report.json, bubble_<i>.csv, and remainder.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub tuning: TuningArgs,
}

#[derive(Debug, Args)]
pub struct SobolevArgs {
    /// Directory of .gfn grid-function files, one per sequence index.
    #[arg(long)]
    pub input: PathBuf,
    /// Directory for report.json, profile_<i>.gfn, and residuals.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Integrability exponent of the function family.
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Extra norms to track (repeatable); must lie strictly between p and
    /// the critical exponent.
    #[arg(long)]
    pub q: Vec<f64>,
    /// Uniform norm bound; computed from the family when omitted.
    #[arg(long)]
    pub a_bound: Option<f64>,
    #[command(flatten)]
    pub tuning: TuningArgs,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Fixture kind: vanishing, dichotomy, random, bumps, or spread.
    #[arg(long)]
    pub kind: String,
    /// Output file (measure kinds) or directory (grid-function kinds).
    #[arg(long)]
    pub out: PathBuf,
    /// Sequence length (or atom count for `random`).
    #[arg(long, default_value_t = 24)]
    pub n: usize,
    /// Ambient dimension for measure fixtures.
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated cluster masses for `dichotomy`.
    #[arg(long, default_value = "0.6,0.4")]
    pub masses: String,
    /// Cluster separation rate for `dichotomy`.
    #[arg(long, default_value_t = 4.0)]
    pub rate: f64,
    /// Far-away dust mass for `dichotomy`.
    #[arg(long, default_value_t = 0.0)]
    pub dust: f64,
    /// Exponent for the `spread` fixture's amplitude scaling.
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// A report.json produced by `extract` or `sobolev`.
    #[arg(long)]
    pub input: PathBuf,
}

/// Optional config-file entries; flags override file values, file values
/// override mass-scaled defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub alpha_tol: Option<f64>,
    pub mass_tol: Option<f64>,
    pub k_max: Option<usize>,
    pub phi: Option<Vec<String>>,
    pub tail: Option<usize>,
    pub annulus_budget_scale: Option<f64>,
    pub recenter_shrink: Option<f64>,
    pub radius_grid: Option<Vec<f64>>,
}

/// Loads the config file named in the tuning flags (empty when absent).
pub fn parse_config(tuning: &TuningArgs) -> Result<FileConfig> {
    let Some(path) = &tuning.config else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

fn parse_phi_names(names: &[String]) -> Result<Vec<ScaleFn>> {
    names
        .iter()
        .map(|n| match n.trim().to_ascii_lowercase().as_str() {
            "half" => Ok(ScaleFn::Half),
            "cuberoot" => Ok(ScaleFn::CubeRoot),
            other => bail!("unknown scale map {other:?} (expected half or cuberoot)"),
        })
        .collect()
}

/// Assembles the extraction tuning for a given mass bound: defaults, then
/// the config file, then the flags.
pub fn build_extraction_config(
    mass_bound: f64,
    file: &FileConfig,
    tuning: &TuningArgs,
) -> Result<ExtractionConfig> {
    let mut cfg = ExtractionConfig::for_mass_bound(mass_bound)?;
    if let Some(v) = file.alpha_tol {
        cfg.alpha_tol = v;
    }
    if let Some(v) = file.mass_tol {
        cfg.mass_tol = v;
    }
    if let Some(v) = file.k_max {
        cfg.k_max = v;
    }
    if let Some(names) = &file.phi {
        cfg.phi = parse_phi_names(names)?;
    }
    if let Some(k) = file.tail {
        cfg.tail = TailWindow::Last(k);
    }
    if let Some(v) = file.annulus_budget_scale {
        cfg.annulus_budget_scale = v;
    }
    if let Some(v) = file.recenter_shrink {
        cfg.recenter_shrink = v;
    }
    if let Some(radii) = &file.radius_grid {
        cfg.radius_grid = Some(RadiusGrid::new(radii.clone())?);
    }
    if let Some(v) = tuning.alpha_tol {
        cfg.alpha_tol = v;
    }
    if let Some(v) = tuning.mass_tol {
        cfg.mass_tol = v;
    }
    if let Some(v) = tuning.kmax {
        cfg.k_max = v;
    }
    if let Some(names) = &tuning.phi {
        let parts: Vec<String> = names.split(',').map(str::to_owned).collect();
        cfg.phi = parse_phi_names(&parts)?;
    }
    if let Some(k) = tuning.tail {
        cfg.tail = TailWindow::Last(k);
    }
    Ok(cfg)
}

/// Runs one parsed invocation and returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Classify(args) => run_classify(args),
        Command::Extract(args) => run_extract(args),
        Command::Sobolev(args) => run_sobolev(args),
        Command::Gen(args) => run_gen(args),
        Command::Check(args) => run_check(args),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run_classify(args: ClassifyArgs) -> Result<i32> {
    let seq = ccdecomp::io::read_sequence(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let file_cfg = parse_config(&args.tuning)?;
    let cfg = build_extraction_config(seq.mass_bound(), &file_cfg, &args.tuning)?;
    let verdict = classify(&seq, &cfg)?;
    println!(
        "verdict: {:?} (alpha = {:.6}, mass bound = {:.6})",
        verdict.kind, verdict.alpha, verdict.mass_bound
    );
    if let Some(out) = &args.out {
        ensure_dir(out)?;
        write_json(&out.join("classify.json"), &verdict)?;
        let mut csv = String::from("radius,limsup,oscillation,margin\n");
        for i in 0..verdict.profile.radii.len() {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                verdict.profile.radii[i],
                verdict.profile.limsup_values[i],
                verdict.profile.oscillation[i],
                verdict.margins[i]
            ));
        }
        fs::write(out.join("profile.csv"), csv)?;
    }
    Ok(0)
}

fn exit_code_for(report: &DecompositionReport) -> i32 {
    if report.verdict == DecompositionVerdict::Truncated {
        EXIT_TRUNCATED
    } else {
        0
    }
}

fn run_extract(args: ExtractArgs) -> Result<i32> {
    let seq = ccdecomp::io::read_sequence(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let file_cfg = parse_config(&args.tuning)?;
    let cfg = build_extraction_config(seq.mass_bound(), &file_cfg, &args.tuning)?;
    let report = extract_profiles(&seq, &cfg)?;
    println!(
        "verdict: {:?} with {} bubble(s); remainder level {:.6}",
        report.verdict,
        report.bubbles.len(),
        report.remainder_score
    );
    for b in &report.bubbles {
        println!("  bubble {}: mass {:.6}", b.i, b.mass);
    }
    if let Some(out) = &args.out {
        ensure_dir(out)?;
        write_json(&out.join("report.json"), &report)?;
        write_extract_plot_data(out, &report)?;
    }
    Ok(exit_code_for(&report))
}

/// Per-bubble trajectories and the remainder levels as plottable CSV.
pub fn write_extract_plot_data(out: &Path, report: &DecompositionReport) -> Result<()> {
    for b in &report.bubbles {
        let dim = b.centers.first().map_or(0, |c| c.dim());
        let mut csv = String::from("index");
        for axis in 1..=dim {
            csv.push_str(&format!(",center_x{axis}"));
        }
        csv.push_str(",radius,outer_radius,inner_mass,annulus_mass\n");
        for pos in 0..b.centers.len() {
            csv.push_str(&report.indices[pos].to_string());
            for c in b.centers[pos].coords() {
                csv.push_str(&format!(",{c}"));
            }
            csv.push_str(&format!(
                ",{},{},{},{}\n",
                b.radii[pos], b.outer_radii[pos], b.inner_masses[pos], b.annulus_masses[pos]
            ));
        }
        fs::write(out.join(format!("bubble_{}.csv", b.i)), csv)?;
    }
    let mut csv = String::from("bubbles_removed,alpha\n");
    for (k, alpha) in report.remainder_alphas.iter().enumerate() {
        csv.push_str(&format!("{k},{alpha}\n"));
    }
    fs::write(out.join("remainder.csv"), csv)?;
    Ok(())
}

fn read_gfn_family(dir: &Path) -> Result<Vec<GridFunction>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e == "gfn"))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no .gfn files in {}", dir.display());
    }
    files
        .iter()
        .map(|p| ccdecomp::io::read_gfn(p).with_context(|| format!("reading {}", p.display())))
        .collect()
}

fn run_sobolev(args: SobolevArgs) -> Result<i32> {
    let family = read_gfn_family(&args.input)?;
    let geom = family[0].geometry().clone();
    let mut params = SobolevParams::new(args.p, geom.dim())?;
    if !args.q.is_empty() {
        params = params.with_q_list(args.q.clone())?;
    }
    if params.p_star().is_none() {
        let exponents = vec![args.p + 1.0, args.p + 2.0, args.p + 3.0];
        params = params.with_series(SeriesParams::estimated(args.p, exponents, &geom)?);
    }
    let a_bound = match args.a_bound {
        Some(a) => a,
        None => family.iter().map(|u| u.w1p_norm(args.p)).fold(0.0, f64::max).max(1e-12),
    };
    let mass_bound = family
        .iter()
        .map(|u| density_rho(u, &params, a_bound).map(|rho| rho.integrate(|v| v)))
        .try_fold(0.0f64, |acc, m| m.map(|m| acc.max(m)))?;
    let file_cfg = parse_config(&args.tuning)?;
    let cfg = build_extraction_config(mass_bound, &file_cfg, &args.tuning)?;
    let dec = profile_extract(&family, &params, a_bound, &cfg)?;
    let residuals = norm_expansion_check(&dec)?;
    println!(
        "verdict: {:?} with {} profile(s); lp residual {:.3e}, gradient residual {:.3e}",
        dec.report.verdict,
        dec.profiles.len(),
        residuals.lp_residual,
        residuals.grad_residual
    );
    if let Some(out) = &args.out {
        ensure_dir(out)?;
        let mut sidecars = Vec::new();
        for (i, v) in dec.profiles.iter().enumerate() {
            let name = format!("profile_{}.gfn", i + 1);
            ccdecomp::io::write_gfn(out.join(&name), v)?;
            sidecars.push(name);
        }
        let full = json!({
            "decomposition": dec.report,
            "norms": dec.norms,
            "diagnostics": dec.diagnostics,
            "residuals": residuals,
            "a_bound": a_bound,
            "p": args.p,
            "profile_files": sidecars,
        });
        write_json(&out.join("report.json"), &full)?;
        let mut csv = String::from("index,lp_defect,grad_defect\n");
        for row in &residuals.rows {
            csv.push_str(&format!("{},{},{}\n", row.index, row.lp_defect, row.grad_defect));
        }
        fs::write(out.join("residuals.csv"), csv)?;
    }
    Ok(exit_code_for(&dec.report))
}

fn run_gen(args: GenArgs) -> Result<i32> {
    match args.kind.as_str() {
        "vanishing" => {
            let seq = synth::gen_vanishing(args.n, args.dim, args.seed)?;
            ccdecomp::io::write_sequence_csv(&args.out, &seq)?;
            println!("wrote {} measures to {}", seq.len(), args.out.display());
        }
        "dichotomy" => {
            let masses: Vec<f64> = args
                .masses
                .split(',')
                .map(|m| m.trim().parse::<f64>().context("parsing --masses"))
                .collect::<Result<_>>()?;
            let (seq, truth) =
                synth::gen_dichotomy(&masses, args.rate, args.n, args.dim, args.seed, args.dust)?;
            ccdecomp::io::write_sequence_csv(&args.out, &seq)?;
            let truth_path = args.out.with_extension("truth.json");
            write_json(&truth_path, &truth)?;
            println!(
                "wrote {} measures to {} (truth in {})",
                seq.len(),
                args.out.display(),
                truth_path.display()
            );
        }
        "random" => {
            let m = synth::gen_random_measure(args.n, args.dim, 1.0, args.seed)?;
            ccdecomp::io::write_measure_csv(&args.out, &m)?;
            println!("wrote {} atoms to {}", m.len(), args.out.display());
        }
        "bumps" => {
            // Two bumps drifting apart along node-aligned trajectories; the
            // grid is sized so the farthest center plus a capture ball fits.
            let spacing = 0.1;
            let half_extent = 0.5 + 0.3 * args.n as f64 + 2.0;
            let per_side = 2 * (half_extent / spacing).ceil() as usize + 1;
            let geom = GridGeometry::centered_cube(2, per_side, spacing)?;
            let bumps = vec![
                (
                    synth::BumpSpec { amplitude: 1.0, radius: 0.7 },
                    synth::Trajectory { start: vec![-0.5, 0.0], velocity: vec![-0.3, 0.0] },
                ),
                (
                    synth::BumpSpec { amplitude: 0.8, radius: 0.7 },
                    synth::Trajectory { start: vec![0.5, 0.0], velocity: vec![0.3, 0.0] },
                ),
            ];
            let (family, truth) = synth::gen_multibubble_sobolev(&geom, &bumps, args.n, None)?;
            ensure_dir(&args.out)?;
            for (k, u) in family.iter().enumerate() {
                ccdecomp::io::write_gfn(args.out.join(format!("u_{k:03}.gfn")), u)?;
            }
            write_json(&args.out.join("truth.json"), &truth)?;
            println!("wrote {} grid functions to {}", family.len(), args.out.display());
        }
        "spread" => {
            let geom = GridGeometry::centered_cube(2, 61, 0.1)?;
            let family = synth::gen_vanishing_sobolev(&geom, args.n, args.p)?;
            ensure_dir(&args.out)?;
            for (k, u) in family.iter().enumerate() {
                ccdecomp::io::write_gfn(args.out.join(format!("u_{k:03}.gfn")), u)?;
            }
            println!("wrote {} grid functions to {}", family.len(), args.out.display());
        }
        other => bail!("unknown fixture kind {other:?} (expected vanishing, dichotomy, random, bumps, or spread)"),
    }
    Ok(0)
}

fn run_check(args: CheckArgs) -> Result<i32> {
    let text = fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let report: DecompositionReport = serde_json::from_str(&text)
        .or_else(|_| {
            // Grid-function reports nest the measure-level report.
            serde_json::from_str::<serde_json::Value>(&text).map_err(anyhow::Error::from).and_then(
                |v| {
                    serde_json::from_value(
                        v.get("decomposition")
                            .cloned()
                            .context("no decomposition object in report")?,
                    )
                    .map_err(anyhow::Error::from)
                },
            )
        })
        .with_context(|| format!("parsing {}", args.input.display()))?;
    let problems = check_report(&report);
    if problems.is_empty() {
        println!("report ok: {} bubble(s), slack {:.3e}", report.bubbles.len(), report.ledger.slack);
        Ok(0)
    } else {
        for p in &problems {
            eprintln!("problem: {p}");
        }
        Ok(1)
    }
}

/// Internal-consistency findings for a decomposition report (empty = clean).
pub fn check_report(report: &DecompositionReport) -> Vec<String> {
    let mut problems = Vec::new();
    if report.schema_version != ccdecomp::extraction::REPORT_SCHEMA_VERSION {
        problems.push(format!("unknown schema version {}", report.schema_version));
    }
    let ledger = &report.ledger;
    let sum: f64 = report.bubbles.iter().map(|b| b.mass).sum();
    if (ledger.sum_m - sum).abs() > 1e-9 {
        problems.push(format!("ledger sum_m {} != bubble masses {sum}", ledger.sum_m));
    }
    if (ledger.slack - (ledger.mass_bound - ledger.sum_m)).abs() > 1e-9 {
        problems.push("ledger slack is not M - sum_m".into());
    }
    if ledger.slack < -1e-9 {
        problems.push(format!("bubble masses exceed the bound by {}", -ledger.slack));
    }
    if report
        .remainder_alphas
        .windows(2)
        .any(|w| w[1] > w[0] + 1e-12)
    {
        problems.push("remainder levels are not nonincreasing".into());
    }
    if !report.disjointness_ok {
        problems.push("bubbles are not pairwise disjoint".into());
    }
    let n = report.indices.len();
    for b in &report.bubbles {
        if b.centers.len() != n
            || b.radii.len() != n
            || b.inner_masses.len() != n
            || b.annulus_masses.len() != n
        {
            problems.push(format!("bubble {} arrays do not match the index count {n}", b.i));
            continue;
        }
        if b.radii.windows(2).any(|w| w[1] < w[0]) {
            problems.push(format!("bubble {} radii are not nondecreasing", b.i));
        }
        if b.annulus_masses.iter().any(|&a| a < -1e-12) {
            problems.push(format!("bubble {} has a negative annulus mass", b.i));
        }
        if let Ok(start) = report.config_echo.tail.start(n) {
            let tail = &b.inner_masses[start..];
            let mean = tail.iter().sum::<f64>() / tail.len() as f64;
            if (mean - b.mass).abs() > 1e-9 {
                problems.push(format!(
                    "bubble {} mass {} is not the tail mean {mean}",
                    b.i, b.mass
                ));
            }
        }
    }
    problems
}

/// Writes concentration-curve plot data for every measure of a sequence
/// (used by `extract --out` callers that want raw curves as well).
pub fn write_curves(out: &Path, seq: &MeasureSequence, cfg: &ExtractionConfig) -> Result<()> {
    ensure_dir(out)?;
    let grid = cfg
        .radius_grid
        .clone()
        .unwrap_or_else(|| RadiusGrid::default_for_sequence(seq));
    for (pos, m) in seq.items().iter().enumerate() {
        let curve = concentration_curve(m, &grid, &CenterStrategy::Atoms);
        let label = seq.labels().map_or(pos as i64, |l| l[pos]);
        ccdecomp::io::write_curve_csv(out.join(format!("curve_{label}.csv")), &curve)?;
    }
    let profile = limsup_profile(seq, &grid, &cfg.tail)?;
    ccdecomp::io::write_profile_json(out.join("limit_profile.json"), &profile)?;
    Ok(())
}
