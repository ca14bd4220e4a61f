//! `subdiff`: convergence studies, stability probes and kernel checks for the
//! compact L1 scheme.
//!
//! Exit status: 0 on success, 1 on errors, 2 when `--assert` finds a result
//! outside its tolerance.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use subdiff::experiments::{
    format_sci, kernels_check, spatial_study, stability_study, temporal_study, write_csv, ConvergenceTable,
    KernelCheckConfig, KernelCheckReport, Preset, StabilityStudy, StudyConfig,
};
use subdiff::mesh::assg_report;
use subdiff::solver::{run_with, BoundaryClosure, SolverOptions};
use subdiff::{MeshFamily, ProblemFile, TimeMesh};

#[derive(Parser)]
#[command(name = "subdiff", version, about = "Compact L1 scheme for fourth-order subdiffusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spatial convergence table (one N, several M).
    Spatial(StudyArgs),
    /// Temporal convergence table (one M, several N).
    Temporal(StudyArgs),
    /// Amplification of data perturbations under time refinement.
    Stability(StabilityArgs),
    /// Kernel identities on random meshes.
    KernelsCheck(KernelArgs),
    /// Solve one problem file and export snapshots.
    Solve(SolveArgs),
    /// Write a time mesh, or report on an existing one.
    Mesh(MeshArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PresetArg {
    Desk,
    Paper,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Desk => Preset::Desk,
            PresetArg::Paper => Preset::Paper,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MeshArg {
    Graded,
    GradedUniform,
}

impl From<MeshArg> for MeshFamily {
    fn from(m: MeshArg) -> Self {
        match m {
            MeshArg::Graded => MeshFamily::Graded,
            MeshArg::GradedUniform => MeshFamily::GradedUniform,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ClosureArg {
    Reference,
    Mirrored,
}

impl From<ClosureArg> for BoundaryClosure {
    fn from(c: ClosureArg) -> Self {
        match c {
            ClosureArg::Reference => BoundaryClosure::Reference,
            ClosureArg::Mirrored => BoundaryClosure::Mirrored,
        }
    }
}

#[derive(Args)]
struct Output {
    /// Grid sizes and defaults.
    #[arg(long, value_enum, default_value = "desk")]
    preset: PresetArg,
    /// Write the machine-readable report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Machine-readable format; without it a text table goes to stdout.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads for independent runs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Exit with status 2 when a result misses its tolerance.
    #[arg(long = "assert")]
    assert: bool,
}

#[derive(Args)]
struct Params {
    /// Fractional order(s); repeat for several tables.
    #[arg(long)]
    alpha: Vec<f64>,
    /// Regularity parameter(s) of the exact solution.
    #[arg(long)]
    sigma: Vec<f64>,
    /// Mesh grading parameter(s).
    #[arg(long)]
    gamma: Vec<f64>,
    #[arg(long, value_enum, default_value = "graded-uniform")]
    mesh: MeshArg,
    #[arg(long, value_enum, default_value = "reference")]
    closure: ClosureArg,
}

impl Params {
    /// Every `(α, σ, γ)` combination, with `defaults` filling empty lists.
    fn combinations(&self, defaults: (f64, f64, f64)) -> Vec<StudyConfig> {
        let or = |v: &[f64], d: f64| if v.is_empty() { vec![d] } else { v.to_vec() };
        let (alphas, sigmas, gammas) = (
            or(&self.alpha, defaults.0),
            or(&self.sigma, defaults.1),
            or(&self.gamma, defaults.2),
        );
        let mut out = Vec::new();
        for &a in &alphas {
            for &s in &sigmas {
                for &g in &gammas {
                    let mut c = StudyConfig::new(a, s, g);
                    c.mesh = self.mesh.into();
                    c.closure = self.closure.into();
                    out.push(c);
                }
            }
        }
        out
    }
}

#[derive(Args)]
struct StudyArgs {
    #[command(flatten)]
    params: Params,
    /// Spatial interval count(s).
    #[arg(short = 'M')]
    m: Vec<usize>,
    /// Time step count(s).
    #[arg(short = 'N')]
    n: Vec<usize>,
    /// Allowed distance of each observed order from the predicted rate.
    #[arg(long, default_value_t = 0.1)]
    tolerance: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct StabilityArgs {
    #[command(flatten)]
    params: Params,
    #[arg(short = 'M')]
    m: Option<usize>,
    #[arg(short = 'N')]
    n: Vec<usize>,
    /// Perturbation size.
    #[arg(long, default_value_t = Preset::STABILITY_DELTA)]
    delta: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Allowed relative growth of any ratio per refinement.
    #[arg(long, default_value_t = 0.05)]
    max_growth: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct KernelArgs {
    #[arg(long)]
    meshes: Option<usize>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Allowed deviation of the complementary identity from one.
    #[arg(long, default_value_t = 1e-12)]
    tolerance: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SolveArgs {
    /// Key-value problem file.
    #[arg(long)]
    problem: PathBuf,
    /// Time levels to export; defaults to the final level.
    #[arg(long = "level")]
    levels: Vec<usize>,
    /// Snapshot CSV (`n,t,x,u,v`); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "reference")]
    closure: ClosureArg,
}

#[derive(Args)]
struct MeshArgs {
    /// Read this mesh and print its grading diagnostics instead.
    #[arg(long, conflicts_with_all = ["steps", "out"])]
    input: Option<PathBuf>,
    #[arg(short = 'N', long)]
    steps: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    final_time: f64,
    #[arg(long, value_enum, default_value = "graded-uniform")]
    mesh: MeshArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Open `path`, or stdout when absent.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Print the text form to stdout unless the machine form already goes there,
/// then write the machine form if requested.
fn report<T: serde::Serialize>(
    output: &Output,
    text: &str,
    csv: impl FnOnce(&mut dyn Write) -> Result<()>,
    value: &T,
) -> Result<()> {
    let format = output.format.or(output.out.as_ref().map(|_| Format::Csv));
    if format.is_none() || output.out.is_some() {
        print!("{text}");
    }
    if let Some(format) = format {
        let mut w = sink(output.out.as_deref())?;
        match format {
            Format::Csv => csv(&mut w)?,
            Format::Json => {
                serde_json::to_writer_pretty(&mut w, value)?;
                writeln!(w)?;
            }
        }
        w.flush()?;
    }
    Ok(())
}

/// Outcome of a subcommand: `Ok(false)` when an assertion failed.
type Verdict = Result<bool>;

fn failures_verdict(failures: &[String]) -> bool {
    for f in failures {
        eprintln!("assertion failed: {f}");
    }
    failures.is_empty()
}

fn study(args: StudyArgs, spatial: bool) -> Verdict {
    let preset: Preset = args.output.preset.into();
    let defaults = if spatial { Preset::SPATIAL_PARAMS } else { Preset::TEMPORAL_PARAMS };
    let mut tables: Vec<ConvergenceTable> = Vec::new();
    for config in args.params.combinations(defaults) {
        let config = config.with_jobs(args.output.jobs);
        info!("running {config:?}");
        let table = if spatial {
            let (n, ms) = preset.spatial();
            let n = match args.n.as_slice() {
                [] => n,
                [n] => *n,
                _ => bail!("a spatial study takes a single -N"),
            };
            spatial_study(&config, n, if args.m.is_empty() { &ms } else { &args.m })?
        } else {
            let (m, ns) = preset.temporal();
            let m = match args.m.as_slice() {
                [] => m,
                [m] => *m,
                _ => bail!("a temporal study takes a single -M"),
            };
            temporal_study(&config, m, if args.n.is_empty() { &ns } else { &args.n })?
        };
        tables.push(table);
    }
    let text: String = tables.iter().map(|t| format!("{t}\n")).collect();
    report(&args.output, &text, |w| Ok(write_csv(&tables, w)?), &tables)?;
    let failures: Vec<String> = if args.output.assert {
        tables.iter().flat_map(|t| t.order_failures(args.tolerance)).collect()
    } else {
        Vec::new()
    };
    Ok(failures_verdict(&failures))
}

fn stability_text(s: &StabilityStudy) -> String {
    let mut out = format!(
        "stability: alpha={} sigma={} gamma={} seed={}\n{:>6} {:>5} {:>9} {:>10} {:>10} {:>10}\n",
        s.alpha, s.sigma, s.gamma, s.seed, "N", "M", "data", "|du|", "|A du|", "|d2 du|"
    );
    let fmt = |v: Option<f64>| v.map(format_sci).unwrap_or_else(|| "--".into());
    for p in &s.probes {
        for a in &p.amplifications {
            out += &format!(
                "{:>6} {:>5} {:>9} {:>10} {:>10} {:>10}\n",
                p.steps,
                p.intervals,
                a.perturbation.name(),
                fmt(a.l2),
                fmt(a.averaged),
                fmt(a.dxx)
            );
        }
    }
    out += &format!("max growth per refinement: {}\n", fmt(s.max_growth));
    out
}

fn stability_csv(studies: &[StabilityStudy], w: &mut dyn Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["alpha", "sigma", "gamma", "M", "N", "delta", "perturbation", "l2", "averaged", "dxx"])?;
    let f = |v: Option<f64>| v.map(|v| format!("{v:?}")).unwrap_or_default();
    for s in studies {
        for p in &s.probes {
            for a in &p.amplifications {
                wtr.write_record([
                    format!("{:?}", s.alpha),
                    format!("{:?}", s.sigma),
                    format!("{:?}", s.gamma),
                    p.intervals.to_string(),
                    p.steps.to_string(),
                    format!("{:?}", p.delta),
                    a.perturbation.name().to_string(),
                    f(a.l2),
                    f(a.averaged),
                    f(a.dxx),
                ])?;
            }
        }
    }
    wtr.flush()?;
    Ok(())
}

fn stability(args: StabilityArgs) -> Verdict {
    let preset: Preset = args.output.preset.into();
    let (m, ns) = preset.stability();
    let m = args.m.unwrap_or(m);
    let ns = if args.n.is_empty() { ns } else { args.n.clone() };
    let mut studies = Vec::new();
    for config in args.params.combinations(Preset::STABILITY_PARAMS) {
        let config = config.with_jobs(args.output.jobs);
        studies.push(stability_study(&config, m, &ns, args.delta, args.seed)?);
    }
    let text: String = studies.iter().map(|s| format!("{}\n", stability_text(s))).collect();
    report(&args.output, &text, |w| stability_csv(&studies, w), &studies)?;
    let mut failures = Vec::new();
    if args.output.assert {
        for s in &studies {
            if !s.bounded(args.max_growth) {
                failures.push(format!(
                    "amplification growth {:?} exceeds {} (alpha={}, sigma={}, gamma={})",
                    s.max_growth, args.max_growth, s.alpha, s.sigma, s.gamma
                ));
            }
        }
    }
    Ok(failures_verdict(&failures))
}

fn kernel_text(r: &KernelCheckReport) -> String {
    format!(
        "kernel check: {} meshes ({} uniform, {} graded, {} jittered), {} levels\n\
         max |sum p a - 1|          {:.3e}\n\
         positivity violations      {}\n\
         monotonicity violations    {}\n\
         sandwich violations        {}\n\
         negative p                 {}\n\
         bound violations           {}\n",
        r.meshes,
        r.uniform,
        r.graded,
        r.jittered,
        r.levels,
        r.max_identity_residual,
        r.positivity_violations,
        r.monotonicity_violations,
        r.sandwich_violations,
        r.complementary_sign_violations,
        r.bound_violations
    )
}

fn kernels(args: KernelArgs) -> Verdict {
    let preset: Preset = args.output.preset.into();
    let (meshes, max_steps) = preset.kernels();
    let config = KernelCheckConfig {
        meshes: args.meshes.unwrap_or(meshes),
        max_steps: args.max_steps.unwrap_or(max_steps),
        seed: args.seed,
        jobs: args.output.jobs,
    };
    let r = kernels_check(&config)?;
    let csv = |w: &mut dyn Write| -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.serialize(&r)?;
        wtr.flush()?;
        Ok(())
    };
    report(&args.output, &kernel_text(&r), csv, &r)?;
    let mut failures = Vec::new();
    if args.output.assert && !r.passed(args.tolerance) {
        failures.push(format!(
            "{} violations, identity residual {:.3e} (tolerance {:.1e})",
            r.violations(),
            r.max_identity_residual,
            args.tolerance
        ));
    }
    Ok(failures_verdict(&failures))
}

fn solve(args: SolveArgs) -> Verdict {
    let text = std::fs::read_to_string(&args.problem)
        .with_context(|| format!("cannot read {}", args.problem.display()))?;
    let file = ProblemFile::parse(&text).with_context(|| format!("in {}", args.problem.display()))?;
    let problem = file.problem()?;
    let mesh = file.mesh()?;
    let grid = file.grid()?;
    let options = SolverOptions {
        record_v: true,
        closure: args.closure.into(),
        ..SolverOptions::default()
    };
    let result = run_with(&problem, &mesh, &grid, options)?;
    if let Some(exact) = &problem.exact_u {
        let e = subdiff::experiments::measure_error(&result, exact)?;
        eprintln!("e(M,N) = {} (M={}, N={})", format_sci(e), file.intervals, file.steps);
    }
    let levels = if args.levels.is_empty() { vec![mesh.steps()] } else { args.levels };
    let mut w = sink(args.out.as_deref())?;
    result.write_snapshots(&levels, &mut w)?;
    w.flush()?;
    Ok(true)
}

fn mesh(args: MeshArgs) -> Verdict {
    if let Some(path) = &args.input {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let mesh = TimeMesh::from_text(&text).with_context(|| format!("in {}", path.display()))?;
        let report = assg_report(&mesh, args.gamma)?;
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(true);
    }
    let Some(steps) = args.steps else {
        bail!("either --input or -N is required");
    };
    let family: MeshFamily = args.mesh.into();
    let mesh = family.build(steps, args.final_time, args.gamma)?;
    let mut w = sink(args.out.as_deref())?;
    w.write_all(mesh.to_text().as_bytes())?;
    w.flush()?;
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let verdict = match cli.command {
        Command::Spatial(a) => study(a, true),
        Command::Temporal(a) => study(a, false),
        Command::Stability(a) => stability(a),
        Command::KernelsCheck(a) => kernels(a),
        Command::Solve(a) => solve(a),
        Command::Mesh(a) => mesh(a),
    };
    match verdict {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
