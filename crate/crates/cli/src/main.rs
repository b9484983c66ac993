use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use redg_core::data::{parse_pdb_file, AnchorPolicy, RecordFilter};
use redg_core::experiment::{emit_outputs, run_protein, run_synth_sweep, GridSpec, OutputFlags, SweepRun, SynthGrid};
use redg_core::{EdgError, EdgOptions, RpcaConfig, TrialSettings};

#[derive(Parser)]
#[command(name = "redg", version, about = "Robust Euclidean distance geometry experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Halton point clouds in a [-100, 100] box.
    Synth(SynthArgs),
    /// Atom coordinates from a PDB file.
    Protein(ProteinArgs),
    /// Run every cell of a grid file.
    Sweep(SweepArgs),
}

#[derive(Args, Clone)]
struct RpcaArgs {
    /// Start from the distance-block preset (beta_init 4, gamma 0.8,
    /// 300 iterations) instead of the plain solver defaults.
    #[arg(long)]
    tuned: bool,
    /// Threshold scale (default 1 / (2 sqrt(max(m, n)))).
    #[arg(long)]
    rpca_beta: Option<f64>,
    /// Multiplier on beta for the initial outlier sweep [default: 1].
    #[arg(long)]
    rpca_beta_init: Option<f64>,
    /// Threshold decay [default: 0.7].
    #[arg(long)]
    rpca_gamma: Option<f64>,
    /// Relative residual stopping tolerance [default: 1e-9].
    #[arg(long)]
    rpca_tol: Option<f64>,
    /// Iteration cap [default: 200].
    #[arg(long)]
    rpca_max_iters: Option<usize>,
    /// Skip denoising and use the corrupted block directly.
    #[arg(long)]
    no_rpca: bool,
    /// Run trials on all cores; results are identical to a serial run.
    #[arg(long)]
    parallel: bool,
}

impl RpcaArgs {
    fn settings(&self) -> TrialSettings {
        let mut rpca = if self.tuned { RpcaConfig::distance_block(1) } else { RpcaConfig::new(1) };
        if self.rpca_beta.is_some() {
            rpca.beta = self.rpca_beta;
        }
        if let Some(v) = self.rpca_beta_init {
            rpca.beta_init_scale = v;
        }
        if let Some(v) = self.rpca_gamma {
            rpca.gamma = v;
        }
        if let Some(v) = self.rpca_tol {
            rpca.conv_tol = v;
        }
        if let Some(v) = self.rpca_max_iters {
            rpca.max_iters = v;
        }
        TrialSettings {
            rpca,
            edg: EdgOptions { skip_rpca: self.no_rpca, ..EdgOptions::default() },
            parallel: self.parallel,
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
    /// Also write scatter.svg and points.csv for the first trial.
    #[arg(long)]
    plot: bool,
    /// Also write per-trial wall-clock times to timings.csv.
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 500)]
    total: usize,
    /// Anchor counts, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    anchors: Vec<usize>,
    /// Corruption fractions, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    alpha: Vec<f64>,
    /// Embedding dimensions, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    dim: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    rpca: RpcaArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ProteinArgs {
    #[arg(long)]
    pdb: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    anchors: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    alpha: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// evenly_spaced or uniform_random.
    #[arg(long, default_value = "evenly_spaced")]
    policy: String,
    /// Drop HETATM records.
    #[arg(long)]
    no_hetatm: bool,
    /// Drop hydrogen atoms.
    #[arg(long)]
    no_hydrogens: bool,
    #[command(flatten)]
    rpca: RpcaArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Grid file with `key = v1, v2, ...` lines.
    grid: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
}

struct Failure {
    code: u8,
    msg: String,
}

impl From<EdgError> for Failure {
    fn from(e: EdgError) -> Self {
        let code = match e {
            EdgError::Argument(_) => 1,
            EdgError::Input(_) | EdgError::Parse { .. } | EdgError::Io(_) => 2,
            EdgError::Serialize(_) => 3,
        };
        Failure { code, msg: e.to_string() }
    }
}

#[allow(clippy::too_many_arguments)]
fn protein_run(
    pdb: &Path,
    filter: RecordFilter,
    anchors: &[usize],
    alphas: &[f64],
    trials: usize,
    seed: u64,
    policy: AnchorPolicy,
    settings: &TrialSettings,
) -> Result<SweepRun, Failure> {
    let structure = parse_pdb_file(pdb, filter)?;
    eprintln!("{}: {} atoms", structure.id, structure.atoms.count());
    let mut cells = Vec::new();
    for &m in anchors {
        for &alpha in alphas {
            cells.push(run_protein(&structure, m, alpha, trials, seed, policy, settings)?);
        }
    }
    let mut run = SweepRun { records: Vec::new(), summaries: Vec::new(), sample: None };
    for c in cells {
        run.records.extend(c.records);
        run.summaries.push(c.summary);
        if run.sample.is_none() {
            run.sample = c.sample;
        }
    }
    Ok(run)
}

fn parse_policy(name: &str, seed: u64) -> Result<AnchorPolicy, Failure> {
    let policy: AnchorPolicy = name.parse()?;
    Ok(match policy {
        AnchorPolicy::UniformRandom { .. } => AnchorPolicy::UniformRandom { seed },
        p => p,
    })
}

fn finish(run: SweepRun, output: &OutputArgs) -> Result<(), Failure> {
    let flags = OutputFlags { plot: output.plot, timings: output.timings };
    // failing to write results is a runtime failure, not bad input
    let written = emit_outputs(&output.out_dir, &run.records, &run.summaries, run.sample.as_ref(), flags)
        .map_err(|e| Failure { code: 3, msg: e.to_string() })?;
    for s in &run.summaries {
        println!(
            "m={} alpha={} r={} trials={} mean_rmse={:.6} std_rmse={:.6}{}",
            s.m,
            s.alpha,
            s.r,
            s.trials,
            s.mean_rmse,
            s.std_rmse,
            if s.failed > 0 { format!(" failed={}", s.failed) } else { String::new() }
        );
    }
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    let failed = run.records.iter().filter(|r| r.failed()).count();
    if failed == run.records.len() {
        let first = run.records.iter().find_map(|r| r.error.clone()).unwrap_or_default();
        return Err(Failure { code: 3, msg: format!("every trial failed: {first}") });
    }
    Ok(())
}

fn grid_settings(grid: &GridSpec) -> Result<TrialSettings, Failure> {
    let mut rpca = match grid.single::<bool>("tuned")? {
        Some(true) => RpcaConfig::distance_block(1),
        _ => RpcaConfig::new(1),
    };
    if let Some(v) = grid.single("rpca_beta")? {
        rpca.beta = Some(v);
    }
    if let Some(v) = grid.single("rpca_beta_init")? {
        rpca.beta_init_scale = v;
    }
    if let Some(v) = grid.single("rpca_gamma")? {
        rpca.gamma = v;
    }
    if let Some(v) = grid.single("rpca_tol")? {
        rpca.conv_tol = v;
    }
    if let Some(v) = grid.single("rpca_max_iters")? {
        rpca.max_iters = v;
    }
    Ok(TrialSettings {
        rpca,
        edg: EdgOptions { skip_rpca: grid.single("no_rpca")?.unwrap_or(false), ..EdgOptions::default() },
        parallel: grid.single("parallel")?.unwrap_or(false),
    })
}

fn required<T>(v: Option<T>, key: &str) -> Result<T, Failure> {
    v.ok_or_else(|| Failure { code: 1, msg: format!("grid file is missing {key}") })
}

fn sweep(args: &SweepArgs) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&args.grid).map_err(EdgError::from)?;
    let grid = GridSpec::parse(&text).map_err(|e| match e {
        EdgError::Parse { line, msg } => Failure { code: 1, msg: format!("grid line {line}: {msg}") },
        other => other.into(),
    })?;
    let settings = grid_settings(&grid)?;
    let trials = grid.single("trials")?.unwrap_or(50);
    let seed = grid.single("seed")?.unwrap_or(0);
    let anchors = required(grid.list("anchors")?, "anchors")?;
    let alphas = required(grid.list("alpha")?, "alpha")?;
    let run = match grid.text("mode").unwrap_or("synth") {
        "synth" => {
            let g = SynthGrid {
                total: grid.single("total")?.unwrap_or(500),
                anchors,
                alphas,
                dims: grid.list("dim")?.unwrap_or_else(|| vec![2]),
            };
            run_synth_sweep(&g, trials, seed, &settings)?
        }
        "protein" => {
            let pdb = PathBuf::from(required(grid.text("pdb"), "pdb")?);
            let pdb = if pdb.is_relative() { args.grid.parent().unwrap_or(Path::new(".")).join(pdb) } else { pdb };
            let policy = parse_policy(grid.text("policy").unwrap_or("evenly_spaced"), seed)?;
            protein_run(&pdb, RecordFilter::default(), &anchors, &alphas, trials, seed, policy, &settings)?
        }
        other => return Err(Failure { code: 1, msg: format!("unknown mode {other:?}") }),
    };
    finish(run, &args.output)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Synth(a) => {
            let grid = SynthGrid { total: a.total, anchors: a.anchors, alphas: a.alpha, dims: a.dim };
            let run = run_synth_sweep(&grid, a.trials, a.seed, &a.rpca.settings())?;
            finish(run, &a.output)
        }
        Command::Protein(a) => {
            let policy = parse_policy(&a.policy, a.seed)?;
            let filter = RecordFilter { hetatm: !a.no_hetatm, hydrogens: !a.no_hydrogens };
            let run = protein_run(&a.pdb, filter, &a.anchors, &a.alpha, a.trials, a.seed, policy, &a.rpca.settings())?;
            finish(run, &a.output)
        }
        Command::Sweep(a) => sweep(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
