//! Trial loops, aggregation and result files for the synthetic and protein
//! experiments.
//!
//! Every trial derives its randomness from `base_seed + trial_index`, so
//! serial and parallel runs produce identical records.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{corrupt_block, halton_points, select_anchors, AnchorPolicy, ProteinStructure, SynthConfig};
use crate::edg::{robust_edg, EdgOptions, PointSet, SqDistBlocks};
use crate::error::{EdgError, Result};
use crate::evaluation::procrustes_align;
use crate::numerics::Matrix;
use crate::rpca::RpcaConfig;

/// Outcome of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub alpha: f64,
    pub seed: u64,
    /// NaN when the trial failed.
    pub rmse: f64,
    pub rpca_iters: usize,
    pub outliers_detected: usize,
    /// Error message of a failed trial.
    pub error: Option<String>,
    /// Seconds; kept out of `trials.csv` so that file is reproducible.
    #[serde(skip)]
    pub wall_time: f64,
}

impl TrialRecord {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// Aggregate over the trials of one `(m, alpha, r)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub m: usize,
    pub alpha: f64,
    pub r: usize,
    /// Successful trials.
    pub trials: usize,
    pub mean_rmse: f64,
    /// Sample standard deviation (n - 1 denominator, 0 for a single trial).
    pub std_rmse: f64,
    pub failed: usize,
}

/// Knobs shared by every trial of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSettings {
    /// Template; `target_rank` is overwritten with `r + 2` per trial.
    pub rpca: RpcaConfig,
    pub edg: EdgOptions,
    pub parallel: bool,
}

impl Default for TrialSettings {
    fn default() -> Self {
        TrialSettings { rpca: RpcaConfig::new(1), edg: EdgOptions::default(), parallel: false }
    }
}

impl TrialSettings {
    pub fn rpca_for(&self, r: usize) -> RpcaConfig {
        RpcaConfig { target_rank: r + 2, ..self.rpca }
    }
}

/// Truth and aligned estimate of one trial, for plotting.
#[derive(Debug, Clone)]
pub struct PointSample {
    pub truth: PointSet,
    pub estimate: PointSet,
}

#[derive(Debug, Clone)]
pub struct CellRun {
    pub records: Vec<TrialRecord>,
    pub summary: SweepSummary,
    /// Points of the first successful trial.
    pub sample: Option<PointSample>,
}

/// `E` and `F` of the squared distance matrix of `points`, without forming
/// the target-target block. Same arithmetic as `split_blocks(points_to_sqdist(..))`.
pub fn sqdist_blocks(points: &PointSet, m: usize) -> Result<SqDistBlocks> {
    let t = points.count();
    if m == 0 || m >= t {
        return Err(EdgError::arg(format!("anchor count {m} must lie in 1..{t}")));
    }
    let p = points.coords();
    let anchors = p.columns(0, m);
    let sq: Vec<f64> = p.column_iter().map(|c| c.dot(&c)).collect();
    let cross = anchors.transpose() * p;
    let entry = |i: usize, j: usize| {
        if i == j {
            0.0
        } else {
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            let g = if i < j { cross[(i, j)] } else { cross[(j, i)] };
            (sq[a] + sq[b] - 2.0 * g).max(0.0)
        }
    };
    let e = Matrix::from_fn(m, m, entry);
    let f = Matrix::from_fn(m, t - m, |i, j| entry(i, m + j));
    SqDistBlocks::new(e, f)
}

struct TrialOutput {
    record: TrialRecord,
    sample: Option<PointSample>,
}

/// Run the pipeline on `truth` (anchors first) with corruption seed `seed`.
fn run_trial(truth: &PointSet, m: usize, alpha: f64, seed: u64, settings: &TrialSettings) -> TrialOutput {
    let started = Instant::now();
    let r = truth.dim();
    let n = truth.count().saturating_sub(m);
    let mut record = TrialRecord {
        m,
        n,
        r,
        alpha,
        seed,
        rmse: f64::NAN,
        rpca_iters: 0,
        outliers_detected: 0,
        error: None,
        wall_time: 0.0,
    };

    let result = (|| -> Result<(f64, usize, usize, PointSample)> {
        let clean = sqdist_blocks(truth, m)?;
        let (f_obs, _) = corrupt_block(clean.f(), alpha, seed)?;
        let blocks = clean.with_f(f_obs)?;
        let out = robust_edg(&blocks, r, &settings.rpca_for(r), &settings.edg)?;
        let estimate = out.gram.coordinates(r)?;
        let alignment = procrustes_align(&estimate, truth)?;
        let aligned = alignment.apply(&estimate)?;
        Ok((
            alignment.rmse,
            out.diagnostics.rpca_iters,
            out.diagnostics.outliers_detected,
            PointSample { truth: truth.clone(), estimate: aligned },
        ))
    })();

    let sample = match result {
        Ok((rmse, iters, outliers, sample)) => {
            record.rmse = rmse;
            record.rpca_iters = iters;
            record.outliers_detected = outliers;
            Some(sample)
        }
        Err(e) => {
            record.error = Some(e.to_string());
            None
        }
    };
    record.wall_time = started.elapsed().as_secs_f64();
    TrialOutput { record, sample }
}

fn run_cell<F>(trials: usize, parallel: bool, keep_sample: bool, trial: F) -> Result<CellRun>
where
    F: Fn(usize) -> TrialOutput + Sync,
{
    if trials == 0 {
        return Err(EdgError::arg("at least one trial is required"));
    }
    let outputs: Vec<TrialOutput> =
        if parallel { (0..trials).into_par_iter().map(&trial).collect() } else { (0..trials).map(&trial).collect() };
    let sample = if keep_sample { outputs.iter().find_map(|o| o.sample.clone()) } else { None };
    let records: Vec<TrialRecord> = outputs.into_iter().map(|o| o.record).collect();
    let summary = summarize(&records).into_iter().next().expect("nonempty records give one summary");
    Ok(CellRun { records, summary, sample })
}

/// One `(T, m, r, alpha)` cell of the synthetic experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthCell {
    pub total: usize,
    pub anchors: usize,
    pub dim: usize,
    pub alpha: f64,
}

pub fn run_synth_cell(
    cell: SynthCell,
    trials: usize,
    base_seed: u64,
    settings: &TrialSettings,
    keep_sample: bool,
) -> Result<CellRun> {
    let cfg = SynthConfig::new(cell.total, cell.anchors, cell.dim, cell.alpha, base_seed);
    let truth = halton_points(&cfg)?;
    if !(0.0..=1.0).contains(&cell.alpha) {
        return Err(EdgError::arg(format!("alpha {} outside [0, 1]", cell.alpha)));
    }
    run_cell(trials, settings.parallel, keep_sample, |k| {
        run_trial(&truth, cell.anchors, cell.alpha, base_seed.wrapping_add(k as u64), settings)
    })
}

/// Grid over anchors, corruption levels and dimensions for a fixed `total`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthGrid {
    pub total: usize,
    pub anchors: Vec<usize>,
    pub alphas: Vec<f64>,
    pub dims: Vec<usize>,
}

impl SynthGrid {
    /// Cells ordered by dimension, then anchors, then alpha.
    pub fn cells(&self) -> Vec<SynthCell> {
        let mut out = Vec::new();
        for &dim in &self.dims {
            for &anchors in &self.anchors {
                for &alpha in &self.alphas {
                    out.push(SynthCell { total: self.total, anchors, dim, alpha });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct SweepRun {
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<SweepSummary>,
    pub sample: Option<PointSample>,
}

impl SweepRun {
    fn from_cells(cells: Vec<CellRun>) -> Self {
        let mut records = Vec::new();
        let mut summaries = Vec::new();
        let mut sample = None;
        for c in cells {
            records.extend(c.records);
            summaries.push(c.summary);
            if sample.is_none() {
                sample = c.sample;
            }
        }
        SweepRun { records, summaries, sample }
    }
}

/// Every cell of `grid`, each with `trials` trials seeded `base_seed + k`.
pub fn run_synth_sweep(grid: &SynthGrid, trials: usize, base_seed: u64, settings: &TrialSettings) -> Result<SweepRun> {
    let cells = grid.cells();
    if cells.is_empty() {
        return Err(EdgError::arg("empty grid"));
    }
    let runs = cells
        .into_iter()
        .enumerate()
        .map(|(i, c)| run_synth_cell(c, trials, base_seed, settings, i == 0))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepRun::from_cells(runs))
}

/// Protein experiment for one `(m, alpha)` cell. Anchors are moved to the
/// front according to `policy`; a random policy is reseeded per trial.
pub fn run_protein(
    structure: &ProteinStructure,
    m: usize,
    alpha: f64,
    trials: usize,
    base_seed: u64,
    policy: AnchorPolicy,
    settings: &TrialSettings,
) -> Result<CellRun> {
    let atoms = &structure.atoms;
    if m == 0 || m >= atoms.count() {
        return Err(EdgError::arg(format!("anchor count {m} must lie in 1..{}", atoms.count())));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(EdgError::arg(format!("alpha {alpha} outside [0, 1]")));
    }
    let fixed = match policy {
        AnchorPolicy::EvenlySpaced => Some(atoms.permuted(&select_anchors(atoms.count(), m, policy)?)?),
        AnchorPolicy::UniformRandom { .. } => None,
    };
    run_cell(trials, settings.parallel, true, |k| {
        let seed = base_seed.wrapping_add(k as u64);
        let ordered = match &fixed {
            Some(p) => Ok(p.clone()),
            None => {
                select_anchors(atoms.count(), m, AnchorPolicy::UniformRandom { seed: seed ^ 0x5eed_a5c4_0000_0001 })
                    .and_then(|perm| atoms.permuted(&perm))
            }
        };
        match ordered {
            Ok(p) => run_trial(&p, m, alpha, seed, settings),
            Err(e) => TrialOutput {
                record: TrialRecord {
                    m,
                    n: atoms.count() - m,
                    r: atoms.dim(),
                    alpha,
                    seed,
                    rmse: f64::NAN,
                    rpca_iters: 0,
                    outliers_detected: 0,
                    error: Some(e.to_string()),
                    wall_time: 0.0,
                },
                sample: None,
            },
        }
    })
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let k = values.len();
    if k == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / k as f64;
    if k == 1 {
        return (mean, 0.0);
    }
    let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (mean, (ss / (k - 1) as f64).sqrt())
}

/// Group records by `(m, alpha, r)` in order of first appearance.
pub fn summarize(records: &[TrialRecord]) -> Vec<SweepSummary> {
    let mut order: Vec<(usize, u64, usize)> = Vec::new();
    let mut groups: BTreeMap<(usize, u64, usize), Vec<&TrialRecord>> = BTreeMap::new();
    for rec in records {
        let key = (rec.m, rec.alpha.to_bits(), rec.r);
        if !groups.contains_key(&key) {
            order.push(key);
        }
        groups.entry(key).or_default().push(rec);
    }
    order
        .into_iter()
        .map(|key| {
            let recs = &groups[&key];
            let ok: Vec<f64> = recs.iter().filter(|r| !r.failed()).map(|r| r.rmse).collect();
            let (mean_rmse, std_rmse) = mean_std(&ok);
            SweepSummary {
                m: key.0,
                alpha: f64::from_bits(key.1),
                r: key.2,
                trials: ok.len(),
                mean_rmse,
                std_rmse,
                failed: recs.len() - ok.len(),
            }
        })
        .collect()
}

fn fmt_coord(x: f64) -> String {
    format!("{x:.3}")
}

/// Scatter plot of truth (blue) against the aligned estimate (orange).
/// 2-D data gets one panel; higher dimensions get the xy, xz and yz projections.
pub fn scatter_svg(sample: &PointSample) -> Result<String> {
    let truth = sample.truth.coords();
    let est = sample.estimate.coords();
    if truth.shape() != est.shape() {
        return Err(EdgError::arg("truth and estimate differ in shape"));
    }
    let dim = truth.nrows();
    let panels: Vec<(usize, usize)> = match dim {
        1 => vec![(0, 0)],
        2 => vec![(0, 1)],
        _ => vec![(0, 1), (0, 2), (1, 2)],
    };
    let size = 400.0;
    let pad = 20.0;
    let width = size * panels.len() as f64;

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = fmt_coord(width),
        h = fmt_coord(size)
    )
    .expect("write to string");
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    let axis_name = ['x', 'y', 'z'];
    for (k, &(a, b)) in panels.iter().enumerate() {
        let (lo, hi) = [a, b]
            .iter()
            .flat_map(|&row| truth.row(row).iter().chain(est.row(row).iter()).copied().collect::<Vec<_>>())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let span = if hi > lo { hi - lo } else { 1.0 };
        let x0 = k as f64 * size;
        let map_x = |v: f64| x0 + pad + (v - lo) / span * (size - 2.0 * pad);
        let map_y = |v: f64| size - pad - (v - lo) / span * (size - 2.0 * pad);

        writeln!(
            svg,
            r##"<g class="panel"><rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#999"/><text x="{}" y="14" font-size="12" font-family="sans-serif">{}{}</text>"##,
            fmt_coord(x0 + pad),
            fmt_coord(pad),
            fmt_coord(size - 2.0 * pad),
            fmt_coord(size - 2.0 * pad),
            fmt_coord(x0 + pad),
            axis_name.get(a).copied().unwrap_or('?'),
            axis_name.get(b).copied().unwrap_or('?'),
        )
        .expect("write to string");
        for j in 0..truth.ncols() {
            writeln!(
                svg,
                r##"<circle class="truth" cx="{}" cy="{}" r="3" fill="#1f77b4" fill-opacity="0.7"/>"##,
                fmt_coord(map_x(truth[(a, j)])),
                fmt_coord(map_y(truth[(b, j)]))
            )
            .expect("write to string");
        }
        for j in 0..est.ncols() {
            writeln!(
                svg,
                r##"<circle class="estimate" cx="{}" cy="{}" r="2" fill="#ff7f0e" fill-opacity="0.8"/>"##,
                fmt_coord(map_x(est[(a, j)])),
                fmt_coord(map_y(est[(b, j)]))
            )
            .expect("write to string");
        }
        svg.push_str("</g>\n");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Which optional files [`emit_outputs`] writes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OutputFlags {
    /// `scatter.svg` and `points.csv` from the sample trial.
    pub plot: bool,
    /// `timings.csv` with per-trial wall-clock time.
    pub timings: bool,
}

#[derive(Serialize)]
struct SummaryRow {
    m: usize,
    alpha: f64,
    r: usize,
    trials: usize,
    mean_rmse: f64,
    std_rmse: f64,
}

#[derive(Serialize)]
struct PointRow {
    index: usize,
    kind: &'static str,
    x: f64,
    y: f64,
    z: Option<f64>,
}

/// Write `trials.csv`, `summary.csv` and `summary.json` into `dir`, plus the
/// optional files selected by `flags`. Returns the written paths.
pub fn emit_outputs(
    dir: &Path,
    records: &[TrialRecord],
    summaries: &[SweepSummary],
    sample: Option<&PointSample>,
    flags: OutputFlags,
) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(EdgError::arg("no trial records to write"));
    }
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let trials_path = dir.join("trials.csv");
    let mut w = csv::Writer::from_path(&trials_path)?;
    for rec in records {
        w.serialize(rec)?;
    }
    w.flush()?;
    written.push(trials_path);

    let summary_path = dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&summary_path)?;
    for s in summaries {
        w.serialize(SummaryRow {
            m: s.m,
            alpha: s.alpha,
            r: s.r,
            trials: s.trials,
            mean_rmse: s.mean_rmse,
            std_rmse: s.std_rmse,
        })?;
    }
    w.flush()?;
    written.push(summary_path);

    let json_path = dir.join("summary.json");
    let json: Vec<serde_json::Value> = summaries
        .iter()
        .map(|s| {
            serde_json::json!({
                "m": s.m,
                "alpha": s.alpha,
                "r": s.r,
                "trials": s.trials,
                "failed": s.failed,
                "mean_rmse": finite_or_null(s.mean_rmse),
                "std_rmse": finite_or_null(s.std_rmse),
            })
        })
        .collect();
    fs::write(&json_path, serde_json::to_string_pretty(&json)? + "\n")?;
    written.push(json_path);

    if flags.timings {
        let path = dir.join("timings.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["m", "alpha", "r", "seed", "wall_time"])?;
        for rec in records {
            w.write_record([
                rec.m.to_string(),
                rec.alpha.to_string(),
                rec.r.to_string(),
                rec.seed.to_string(),
                format!("{:.6}", rec.wall_time),
            ])?;
        }
        w.flush()?;
        written.push(path);
    }

    if flags.plot {
        let sample = sample.ok_or_else(|| EdgError::input("no successful trial to plot"))?;
        let svg_path = dir.join("scatter.svg");
        fs::write(&svg_path, scatter_svg(sample)?)?;
        written.push(svg_path);

        let pts_path = dir.join("points.csv");
        let mut w = csv::Writer::from_path(&pts_path)?;
        for (kind, set) in [("truth", &sample.truth), ("estimate", &sample.estimate)] {
            let c = set.coords();
            for j in 0..set.count() {
                w.serialize(PointRow {
                    index: j,
                    kind,
                    x: c[(0, j)],
                    y: if c.nrows() > 1 { c[(1, j)] } else { 0.0 },
                    z: (c.nrows() > 2).then(|| c[(2, j)]),
                })?;
            }
        }
        w.flush()?;
        written.push(pts_path);
    }
    Ok(written)
}

fn finite_or_null(x: f64) -> serde_json::Value {
    if x.is_finite() {
        serde_json::json!(x)
    } else {
        serde_json::Value::Null
    }
}

/// Experiment grid read from a `key = v1, v2, ...` text file.
///
/// Blank lines and `#` comments are ignored. Recognized keys: `mode`
/// (`synth` or `protein`), `total`, `anchors`, `alpha`, `dim`, `trials`,
/// `seed`, `pdb`, `policy`, `parallel`, `no_rpca`, `tuned` and the RPCA tunables
/// `rpca_beta`, `rpca_beta_init`, `rpca_gamma`, `rpca_tol`, `rpca_max_iters`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    entries: BTreeMap<String, Vec<String>>,
}

const GRID_KEYS: &[&str] = &[
    "mode",
    "total",
    "anchors",
    "alpha",
    "dim",
    "trials",
    "seed",
    "pdb",
    "policy",
    "parallel",
    "no_rpca",
    "tuned",
    "rpca_beta",
    "rpca_beta_init",
    "rpca_gamma",
    "rpca_tol",
    "rpca_max_iters",
];

impl GridSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| EdgError::Parse { line: idx + 1, msg: format!("expected key = value, got {line:?}") })?;
            let key = key.trim().to_string();
            if !GRID_KEYS.contains(&key.as_str()) {
                return Err(EdgError::Parse { line: idx + 1, msg: format!("unknown key {key:?}") });
            }
            let values: Vec<String> =
                value.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
            if values.is_empty() {
                return Err(EdgError::Parse { line: idx + 1, msg: format!("no values for {key:?}") });
            }
            if entries.insert(key.clone(), values).is_some() {
                return Err(EdgError::Parse { line: idx + 1, msg: format!("duplicate key {key:?}") });
            }
        }
        Ok(GridSpec { entries })
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(vals) => vals
                .iter()
                .map(|v| v.parse::<T>().map_err(|_| EdgError::arg(format!("bad value {v:?} for {key}"))))
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    pub fn single<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.list::<T>(key)? {
            None => Ok(None),
            Some(mut v) if v.len() == 1 => Ok(v.pop()),
            Some(_) => Err(EdgError::arg(format!("{key} takes a single value"))),
        }
    }

    pub fn text(&self, key: &str) -> Option<&str> {
        self.entries.get(key).and_then(|v| v.first()).map(String::as_str)
    }
}
