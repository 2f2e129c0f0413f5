use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;

use bbm_core::analysis::phase_input;
use bbm_core::gates::Gates;
use bbm_core::harness::{read_store, run as run_farm, ExperimentConfig};
use bbm_core::sim::DEFAULT_PARTICLE_CEILING;
use bbm_core::stats::{in_phase_two, phase_scan, PhaseCell, PhaseLabel};
use bbm_core::{Error, Result, SimConfig};

use crate::util::{load_gates, parse_cells, parse_range, with_ext, write, Parallelism};
use crate::{CommandResult, GatesArg};

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    /// Gamma axis as `lo:hi` (or one value).
    #[arg(long, default_value = "0.3:1.3", value_parser = parse_range)]
    pub gamma_range: (f64, f64),
    /// Beta axis as `lo:hi` (or one value).
    #[arg(long, default_value = "0.1:1.1", value_parser = parse_range)]
    pub beta_range: (f64, f64),
    /// Grid size as `GxB` (or one count for both axes).
    #[arg(long, default_value = "3x3", value_parser = parse_cells)]
    pub cells: (usize, usize),
    /// Final times of every cell.
    #[arg(long, value_delimiter = ',', default_value = "2,4,6")]
    pub t_grid: Vec<f64>,
    /// Exact replicas per cell and t.
    #[arg(long, default_value_t = 200)]
    pub replicas: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Cells whose replicas exceed this many particles are skipped.
    #[arg(long, default_value_t = DEFAULT_PARTICLE_CEILING)]
    pub particle_ceiling: u64,
    /// Artifact prefix: `.csv`, `.dat` (gnuplot grid) and `.svg` are appended;
    /// per-cell stores go to `<prefix>.cells/`.
    #[arg(long, value_name = "PREFIX", default_value = "phase")]
    pub out: PathBuf,
    /// Worker threads, or `auto`.
    #[arg(long, default_value = "auto")]
    pub parallelism: Parallelism,
    #[command(flatten)]
    pub gates: GatesArg,
}

/// One grid cell: its classification, or why it was skipped.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub gamma: f64,
    pub beta: f64,
    pub cell: Option<PhaseCell>,
    pub skipped: Option<String>,
}

fn axis((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

pub fn run(args: ScanArgs) -> Result<CommandResult> {
    if args.replicas == 0 {
        return Err(Error::InvalidConfig("--replicas must be positive".into()));
    }
    let gates = load_gates(args.gates.gates.as_deref())?;
    let gammas = axis(args.gamma_range, args.cells.0);
    let betas = axis(args.beta_range, args.cells.1);
    let cell_dir = with_ext(&args.out, "cells");
    let mut outcomes = Vec::new();
    for (gi, &gamma) in gammas.iter().enumerate() {
        for (bi, &beta) in betas.iter().enumerate() {
            let mut sim = SimConfig::exact(1.0, 0);
            sim.particle_ceiling = args.particle_ceiling;
            let mut c = ExperimentConfig::new(
                sim,
                args.t_grid.clone(),
                args.replicas,
                cell_dir.join(format!("cell_{gi}_{bi}.jsonl")),
            );
            c.gamma_grid = vec![gamma];
            c.beta_grid = vec![beta];
            c.root_seed = args.seed;
            c.parallelism = args.parallelism.0;
            outcomes.push(scan_cell(&c, gamma, beta, &gates)?);
        }
    }
    let artifacts = vec![
        write(&with_ext(&args.out, "csv"), &cells_csv(&outcomes))?,
        write(&with_ext(&args.out, "dat"), &gnuplot_grid(&outcomes, betas.len()))?,
        write(&with_ext(&args.out, "svg"), &render_svg(&outcomes, &gammas, &betas))?,
    ];
    Ok(CommandResult::ok(artifacts))
}

fn scan_cell(c: &ExperimentConfig, gamma: f64, beta: f64, gates: &Gates) -> Result<CellOutcome> {
    c.validate()?;
    run_farm(c)?;
    let store = read_store(&c.output_path)?;
    let skipped = |why: String| Ok(CellOutcome { gamma, beta, cell: None, skipped: Some(why) });
    let ceiling = store.failures().filter(|f| f.ceiling.is_some()).count();
    if ceiling > 0 {
        return skipped(format!("{ceiling} replicas hit the particle ceiling"));
    }
    if let Some(f) = store.failures().next() {
        return skipped(f.error.clone());
    }
    match phase_scan(&[phase_input(&store, gamma, beta)?], gates.phase_rel_tol) {
        Ok(mut cells) => Ok(CellOutcome { gamma, beta, cell: cells.pop(), skipped: None }),
        Err(e) => skipped(e.to_string()),
    }
}

/// Columns: gamma, beta, slope, stderr, expected_slope, label, phase_two, t_points, status.
fn cells_csv(outcomes: &[CellOutcome]) -> String {
    let mut s = String::from("gamma,beta,slope,stderr,expected_slope,label,phase_two,t_points,status\n");
    for o in outcomes {
        let two = in_phase_two(o.gamma, o.beta);
        match (&o.cell, &o.skipped) {
            (Some(c), _) => {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{two},{},ok",
                    o.gamma,
                    o.beta,
                    c.slope,
                    c.stderr,
                    c.expected_slope,
                    c.label.as_str(),
                    c.n_t
                );
            }
            (None, why) => {
                let why = why.as_deref().unwrap_or("").replace(',', ";");
                let _ = writeln!(s, "{},{},,,{},skipped,{two},0,{why}", o.gamma, o.beta, -1.5 * o.gamma);
            }
        }
    }
    s
}

/// `gamma beta slope label` rows, one block per gamma (`splot ... with pm3d`).
/// Skipped cells carry `NaN`; label is 1 for II-consistent, 0 otherwise.
fn gnuplot_grid(outcomes: &[CellOutcome], per_row: usize) -> String {
    let mut s = String::from("# gamma beta slope label\n");
    for row in outcomes.chunks(per_row) {
        for o in row {
            let (slope, label) = match &o.cell {
                Some(c) => (c.slope.to_string(), (c.label == PhaseLabel::PhaseIIConsistent) as u8 as f64),
                None => ("NaN".to_string(), f64::NAN),
            };
            let _ = writeln!(s, "{} {} {slope} {label}", o.gamma, o.beta);
        }
        s.push('\n');
    }
    s
}

/// Static grid picture: one square per cell, dark for II-consistent, light
/// for other, grey for skipped; the phase II boundary is overlaid.
pub fn render_svg(outcomes: &[CellOutcome], gammas: &[f64], betas: &[f64]) -> String {
    let (w, h, m) = (400.0, 400.0, 50.0);
    let span = |v: &[f64]| {
        let lo = v.first().copied().unwrap_or(0.0);
        let hi = v.last().copied().unwrap_or(1.0);
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, hi + 0.5)
        }
    };
    let (g0, g1) = span(gammas);
    let (b0, b1) = span(betas);
    let cw = w / gammas.len() as f64;
    let ch = h / betas.len() as f64;
    let px = |g: f64| m + (g - g0) / (g1 - g0) * (w - cw) + cw / 2.0;
    let py = |b: f64| m + h - ((b - b0) / (b1 - b0) * (h - ch) + ch / 2.0);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="12">"##,
        w + 2.0 * m,
        h + 2.0 * m
    );
    for o in outcomes {
        let fill = match &o.cell {
            Some(c) if c.label == PhaseLabel::PhaseIIConsistent => "#2b5c8a",
            Some(_) => "#d9e4ee",
            None => "#bbbbbb",
        };
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}" stroke="white"/>"##,
            px(o.gamma) - cw / 2.0,
            py(o.beta) - ch / 2.0,
            cw,
            ch
        );
    }
    // boundary beta = (1 - gamma)_+ for gamma > 1/2, and gamma = 1/2 below
    let pts: Vec<String> = (0..=100)
        .map(|i| g0 + (g1 - g0) * i as f64 / 100.0)
        .filter(|g| *g >= 0.5)
        .map(|g| format!("{:.2},{:.2}", px(g), py((1.0 - g).max(0.0))))
        .collect();
    if !pts.is_empty() {
        let _ =
            writeln!(s, r##"<polyline points="{}" fill="none" stroke="#c0392b" stroke-width="2"/>"##, pts.join(" "));
    }
    let _ = writeln!(s, r##"<text x="{:.0}" y="{:.0}" text-anchor="middle">gamma</text>"##, m + w / 2.0, h + 1.6 * m);
    let _ = writeln!(
        s,
        r##"<text x="{:.0}" y="{:.0}" text-anchor="middle" transform="rotate(-90 {:.0} {:.0})">beta</text>"##,
        m / 2.0,
        m + h / 2.0,
        m / 2.0,
        m + h / 2.0
    );
    for g in gammas {
        let _ = writeln!(s, r##"<text x="{:.1}" y="{:.0}" text-anchor="middle">{g}</text>"##, px(*g), h + m + 16.0);
    }
    for b in betas {
        let _ = writeln!(s, r##"<text x="{:.0}" y="{:.1}" text-anchor="end">{b}</text>"##, m - 6.0, py(*b) + 4.0);
    }
    s.push_str("</svg>\n");
    s
}
