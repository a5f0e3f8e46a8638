//! The `haqt` command line.
//!
//! Exit codes: 0 on success, 1 on a domain failure (for example a singular
//! Fisher matrix or a failed basis verification), 2 on usage or IO errors,
//! including malformed input files.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use haqt_core::bases::{build_basis_set, rotate_basis_set, verify_basis_set};
use haqt_core::bench::{ExperimentSpec, StateSource, TrialTask};
use haqt_core::estimator::{mle_reconstruct_joint, MleOptions};
use haqt_core::fisher::{alpha, cfim_haqt, gill_massar_bound, optimality_gap, qfim};
use haqt_core::protocols::{run_haqt, run_sqt, FinalEstimate, Protocol};
use haqt_core::state::{eigendecompose, infidelity};
use haqt_core::{DensityMatrix, RMatrix};
use serde::Serialize;

use crate::config::load_spec;
use crate::counts::{read_counts, write_counts};
use crate::error::{AppError, AppResult};
use crate::formats::{read_state, to_json_string, BasisSetDoc, ResultDoc, StateDoc};
use crate::report::{emit_report, write_atomic};
use crate::runner::run_parallel;

/// Seed used by randomized commands when `--seed` is absent.
pub const DEFAULT_SEED: u64 = 2_718_281_828;
/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "HAQT_OUT_DIR";
pub const FALLBACK_OUT_DIR: &str = "haqt-out";

#[derive(Debug, Parser)]
#[command(name = "haqt", version, about = "Adaptive qudit state tomography: bases, simulation, reconstruction, Fisher bounds and benchmarks")]
pub struct Cli {
    /// Master seed for randomized commands [default: 2718281828]. For
    /// `bench` it overrides the spec's `master_seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory [default: $HAQT_OUT_DIR, else ./haqt-out].
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// More progress output on stderr; repeat for more.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
    /// Only report errors.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build and verify the adaptive basis set for dimension d.
    Bases(BasesArgs),
    /// Simulate tomography of a known state.
    Simulate(SimulateArgs),
    /// Maximum-likelihood estimate from count files.
    Reconstruct(ReconstructArgs),
    /// Quantum and classical Fisher information with the accuracy bounds.
    Fisher(FisherArgs),
    /// Run a Monte Carlo benchmark described by a spec file.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct BasesArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub dim: u64,
    /// Basis-set JSON destination [default: <out-dir>/bases-d<dim>.json].
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProtocolArg {
    Sqt,
    Haqt,
}

impl From<ProtocolArg> for Protocol {
    fn from(p: ProtocolArg) -> Protocol {
        match p {
            ProtocolArg::Sqt => Protocol::Sqt,
            ProtocolArg::Haqt => Protocol::Haqt,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Generator {
    RandomFullRank,
    RandomPure,
    MaximallyMixed,
    Slit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FinalArg {
    Pooled,
    Stage2,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// State JSON file.
    #[arg(long, conflicts_with = "generator")]
    pub state: Option<PathBuf>,
    /// Generate the true state instead of reading it.
    #[arg(long, value_enum, requires = "dim")]
    pub generator: Option<Generator>,
    /// Smallest eigenvalue accepted by `random-full-rank`.
    #[arg(long, default_value_t = 0.0)]
    pub min_eigenvalue: f64,
    /// Comma-separated slit transmissivities [default: all 1].
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub transmissivities: Option<Vec<f64>>,
    /// Comma-separated slit phases [default: 0 then −π/10].
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub phases: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "haqt")]
    pub protocol: ProtocolArg,
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub dim: Option<u64>,
    #[arg(long)]
    pub shots: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    /// Share of the ensemble spent on the preliminary estimate.
    #[arg(long, default_value_t = 0.5)]
    pub split: f64,
    #[arg(long, value_enum, default_value = "pooled")]
    pub final_estimate: FinalArg,
    /// Also write every trial's counts as CSV plus sidecar.
    #[arg(long)]
    pub save_counts: bool,
    /// Result JSON destination [default: <out-dir>/simulate-<protocol>-d<dim>-N<shots>.json].
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Count CSV files; each needs a sidecar with the same stem and a .json extension.
    #[arg(long = "counts", required = true, num_args = 1..)]
    pub counts: Vec<PathBuf>,
    /// Known state to score the estimate against.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value_t = MleOptions::default().max_iters)]
    pub max_iters: usize,
    /// Estimate JSON destination [default: <out-dir>/reconstruct.json].
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FisherArgs {
    /// State JSON file [default: the maximally mixed state of --dim].
    #[arg(long)]
    pub state: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub dim: Option<u64>,
    /// Ensemble size for the bound values.
    #[arg(long)]
    pub shots: Option<u64>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Experiment spec (TOML).
    pub spec: PathBuf,
    /// Validate the spec and print the plan without running it.
    #[arg(long)]
    pub dry_run: bool,
    /// Worker threads [default: all cores].
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,
    /// File stem for the outputs [default: the spec's output.stem].
    #[arg(long)]
    pub stem: Option<String>,
}

struct Ctx {
    seed: u64,
    explicit_seed: bool,
    out_dir: Option<PathBuf>,
    verbose: u8,
    quiet: bool,
    stdout: String,
}

impl Ctx {
    fn say(&mut self, line: impl AsRef<str>) {
        if !self.quiet {
            self.stdout.push_str(line.as_ref());
            self.stdout.push('\n');
        }
    }

    fn out_dir(&self, from_spec: Option<&Path>) -> PathBuf {
        if let Some(d) = &self.out_dir {
            return d.clone();
        }
        if let Some(d) = from_spec {
            return d.to_path_buf();
        }
        match std::env::var_os(OUT_DIR_ENV) {
            Some(d) if !d.is_empty() => PathBuf::from(d),
            _ => PathBuf::from(FALLBACK_OUT_DIR),
        }
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let mut ctx = Ctx {
        seed: cli.seed.unwrap_or(DEFAULT_SEED),
        explicit_seed: cli.seed.is_some(),
        out_dir: cli.out_dir,
        verbose: cli.verbose,
        quiet: cli.quiet,
        stdout: String::new(),
    };
    let outcome = match cli.command {
        Command::Bases(a) => cmd_bases(&mut ctx, a),
        Command::Simulate(a) => cmd_simulate(&mut ctx, a),
        Command::Reconstruct(a) => cmd_reconstruct(&mut ctx, a),
        Command::Fisher(a) => cmd_fisher(&mut ctx, a),
        Command::Bench(a) => cmd_bench(&mut ctx, a),
    };
    print!("{}", ctx.stdout);
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn cmd_bases(ctx: &mut Ctx, a: BasesArgs) -> AppResult<()> {
    let d = a.dim as usize;
    let set = build_basis_set(d)?;
    let report = verify_basis_set(&set);
    let path = a.output.unwrap_or_else(|| ctx.out_dir(None).join(format!("bases-d{d}.json")));
    write_atomic(&path, to_json_string(&BasisSetDoc::from_set(&set)).as_bytes())?;
    ctx.say(format!("dim = {d}"));
    ctx.say(format!("bases = {} (expected {})", report.basis_count, report.expected_basis_count));
    ctx.say(format!("max_orthonormality_defect = {:e}", report.max_orthonormality_defect));
    let min_cov = report.pair_coverage.values().min().copied().unwrap_or(0);
    let max_cov = report.pair_coverage.values().max().copied().unwrap_or(0);
    ctx.say(format!("pair_coverage = {min_cov}..{max_cov} over {} pairs", report.pair_coverage.len()));
    ctx.say(format!("rank = {} (need {})", report.rank, d * d));
    ctx.say(format!("wrote {}", path.display()));
    if report.passed {
        ctx.say("verification passed");
        Ok(())
    } else {
        let failures = report.failures().join("; ");
        Err(AppError::Domain(haqt_core::Error::InvalidSpec(format!("basis verification failed: {failures}"))))
    }
}

#[derive(Serialize)]
struct SimulateDoc {
    seed: u64,
    protocol: &'static str,
    dim: usize,
    #[serde(rename = "N")]
    shots: u64,
    split_fraction: f64,
    final_estimate: &'static str,
    truth: StateDoc,
    results: Vec<ResultDoc>,
    mean_infidelity: f64,
    median_infidelity: f64,
}

fn simulate_source(a: &SimulateArgs) -> AppResult<(usize, StateSource)> {
    if let Some(path) = &a.state {
        let rho = read_state(path)?;
        if let Some(d) = a.dim {
            if d as usize != rho.dim() {
                return Err(AppError::Usage(format!("--dim {d} does not match the state's dimension {}", rho.dim())));
            }
        }
        return Ok((rho.dim(), StateSource::Fixed(rho)));
    }
    let Some(generator) = a.generator else {
        return Err(AppError::Usage("simulate needs --state or --generator".into()));
    };
    let d = a.dim.expect("clap enforces --dim with --generator") as usize;
    let source = match generator {
        Generator::RandomFullRank => StateSource::RandomFullRank { min_eigenvalue: a.min_eigenvalue },
        Generator::RandomPure => StateSource::RandomPure,
        Generator::MaximallyMixed => StateSource::Fixed(DensityMatrix::maximally_mixed(d)?),
        Generator::Slit => {
            let (t0, p0) = haqt_core::bench::tilted_slit_parameters(d);
            StateSource::Slit { transmissivities: a.transmissivities.clone().unwrap_or(t0), phases: a.phases.clone().unwrap_or(p0) }
        }
    };
    Ok((d, source))
}

fn cmd_simulate(ctx: &mut Ctx, a: SimulateArgs) -> AppResult<()> {
    let (d, source) = simulate_source(&a)?;
    let protocol: Protocol = a.protocol.into();
    let final_estimate = match a.final_estimate {
        FinalArg::Pooled => FinalEstimate::Pooled,
        FinalArg::Stage2 => FinalEstimate::Stage2Only,
    };
    let spec = ExperimentSpec {
        protocols: vec![protocol],
        shot_grid: vec![a.shots],
        trials: a.trials as usize,
        master_seed: ctx.seed,
        split_fraction: a.split,
        final_estimate,
        ..ExperimentSpec::new(d, source)
    };
    spec.validate().map_err(|e| AppError::Usage(e.to_string()))?;
    let truth = spec.true_state(0)?;
    let stem = format!("simulate-{}-d{d}-N{}", protocol.as_str().to_lowercase(), a.shots);
    let out_dir = ctx.out_dir(None);

    ctx.say(format!("# haqt simulate seed={} protocol={} dim={d} N={} trials={}", ctx.seed, protocol.as_str(), a.shots, a.trials));
    let mut results = Vec::with_capacity(spec.trials);
    let mut infidelities = Vec::with_capacity(spec.trials);
    for trial in 0..spec.trials {
        let seed = TrialTask { protocol, shots: a.shots, trial }.seed(ctx.seed);
        let cfg = spec.protocol_config(a.shots, seed);
        let doc = match protocol {
            Protocol::Sqt => {
                let run = run_sqt(&truth, &cfg)?;
                if a.save_counts {
                    write_counts(&out_dir.join(format!("{stem}-t{trial}.csv")), &run.counts, &run.bases, Some(seed))?;
                }
                ResultDoc::new(&run.result, a.shots, Some(seed))
            }
            Protocol::Haqt => {
                let run = run_haqt(&truth, &cfg)?;
                if a.save_counts {
                    write_counts(&out_dir.join(format!("{stem}-t{trial}-stage1.csv")), &run.stage1.counts, &run.stage1.bases, Some(seed))?;
                    write_counts(&out_dir.join(format!("{stem}-t{trial}-stage2.csv")), &run.counts, &run.bases, Some(seed))?;
                }
                let mut doc = ResultDoc::new(&run.result, a.shots, Some(seed));
                let mut s1 = ResultDoc::new(&run.stage1.result, run.stage1.counts.total_shots(), Some(seed));
                s1.infidelity = Some(infidelity(&truth, &run.stage1.result.estimate)?);
                doc.stage1 = Some(Box::new(s1));
                doc
            }
        };
        let estimate = doc.estimate.to_state().expect("estimates are valid states");
        let inf = infidelity(&truth, &estimate)?;
        if !doc.converged {
            eprintln!("warning: trial {trial} reached the iteration limit without converging");
        }
        if a.trials <= 10 || ctx.verbose > 0 {
            ctx.say(format!("trial {trial} seed {seed} infidelity {inf:e} iterations {}", doc.iterations));
        }
        results.push(ResultDoc { infidelity: Some(inf), ..doc });
        infidelities.push(inf);
    }
    let mean = infidelities.iter().sum::<f64>() / infidelities.len() as f64;
    let mut sorted = infidelities.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 { sorted[n / 2] } else { 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]) };
    ctx.say(format!("mean_infidelity = {mean:e}"));
    ctx.say(format!("median_infidelity = {median:e}"));

    let doc = SimulateDoc {
        seed: ctx.seed,
        protocol: protocol.as_str(),
        dim: d,
        shots: a.shots,
        split_fraction: a.split,
        final_estimate: final_estimate.as_str(),
        truth: StateDoc::from_state(&truth),
        results,
        mean_infidelity: mean,
        median_infidelity: median,
    };
    let path = a.output.unwrap_or_else(|| out_dir.join(format!("{stem}.json")));
    write_atomic(&path, to_json_string(&doc).as_bytes())?;
    ctx.say(format!("wrote {}", path.display()));
    Ok(())
}

fn cmd_reconstruct(ctx: &mut Ctx, a: ReconstructArgs) -> AppResult<()> {
    let records = a.counts.iter().map(|p| read_counts(p)).collect::<AppResult<Vec<_>>>()?;
    let dim = records[0].1.dim();
    if let Some((_, set, _)) = records.iter().find(|(_, s, _)| s.dim() != dim) {
        return Err(AppError::Usage(format!("count files mix dimensions {dim} and {}", set.dim())));
    }
    let opts = MleOptions { max_iters: a.max_iters, ..MleOptions::default() };
    opts.validate().map_err(|e| AppError::Usage(e.to_string()))?;
    let refs: Vec<_> = records.iter().map(|(c, s, _)| (c, s)).collect();
    let observer = |it: usize, ll: f64| {
        if ctx.verbose > 1 {
            eprintln!("iteration {it} log-likelihood {ll}");
        }
    };
    let result = mle_reconstruct_joint(&refs, &opts, observer)?;
    let shots: u64 = records.iter().map(|(c, _, _)| c.total_shots()).sum();
    let mut doc = ResultDoc::new(&result, shots, records[0].2.seed);
    ctx.say(format!("dim = {dim}"));
    ctx.say(format!("N = {shots}"));
    ctx.say(format!("iterations = {}", result.iterations));
    ctx.say(format!("converged = {}", result.converged));
    ctx.say(format!("log_likelihood = {}", result.final_log_likelihood));
    if !result.converged {
        eprintln!("warning: iteration limit reached before convergence");
    }
    if let Some(path) = &a.truth {
        let truth = read_state(path)?;
        if truth.dim() != dim {
            return Err(AppError::Usage(format!("truth has dimension {}, counts have {dim}", truth.dim())));
        }
        let inf = infidelity(&truth, &result.estimate)?;
        doc.infidelity = Some(inf);
        ctx.say(format!("infidelity = {inf:e}"));
    }
    let path = a.output.unwrap_or_else(|| ctx.out_dir(None).join("reconstruct.json"));
    write_atomic(&path, to_json_string(&doc).as_bytes())?;
    ctx.say(format!("wrote {}", path.display()));
    Ok(())
}

fn matrix_csv(m: &RMatrix) -> String {
    let mut s = String::new();
    for r in 0..m.rows() {
        let row: Vec<String> = m.row(r).iter().map(|x| format!("{x:e}")).collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

fn cmd_fisher(ctx: &mut Ctx, a: FisherArgs) -> AppResult<()> {
    let rho = match (&a.state, a.dim) {
        (Some(path), dim) => {
            let rho = read_state(path)?;
            if let Some(d) = dim.filter(|&d| d as usize != rho.dim()) {
                return Err(AppError::Usage(format!("--dim {d} does not match the state's dimension {}", rho.dim())));
            }
            rho
        }
        (None, Some(d)) => DensityMatrix::maximally_mixed(d as usize)?,
        (None, None) => return Err(AppError::Usage("fisher needs --state or --dim".into())),
    };
    let d = rho.dim();
    ctx.say(format!("dim = {d}"));
    ctx.say(format!("alpha = {:.4} ({:e})", alpha(d), alpha(d)));
    if let Some(n) = a.shots {
        if n == 0 {
            return Err(AppError::Usage("--shots must be positive".into()));
        }
        let gm = gill_massar_bound(d, n);
        ctx.say(format!("N = {n}"));
        ctx.say(format!("gm_bound = {gm:.4e} ({gm:e})"));
        ctx.say(format!("alpha_bound = {:.4e}", alpha(d) * gm));
    }
    let eig = eigendecompose(&rho);
    let j = qfim(&eig)?;
    let set = rotate_basis_set(&build_basis_set(d)?, &eig)?;
    let i = cfim_haqt(&rho, &set)?;
    let gap = optimality_gap(&i, &j)?;
    ctx.say(format!("optimality_gap = {gap:e}"));
    let dir = ctx.out_dir(None);
    for (name, m) in [("qfim", j.matrix()), ("cfim", i.matrix())] {
        let path = dir.join(format!("fisher-{name}-d{d}.csv"));
        write_atomic(&path, matrix_csv(m).as_bytes())?;
        ctx.say(format!("wrote {}", path.display()));
    }
    Ok(())
}

fn cmd_bench(ctx: &mut Ctx, a: BenchArgs) -> AppResult<()> {
    let mut loaded = load_spec(&a.spec, ctx.seed)?;
    if ctx.explicit_seed {
        loaded.spec.master_seed = ctx.seed;
    }
    let spec = &loaded.spec;
    let tasks = spec.protocols.len() * spec.shot_grid.len() * spec.trials;
    let stem = a.stem.clone().unwrap_or_else(|| loaded.stem.clone());
    let dir = ctx.out_dir(loaded.output_dir.as_deref());
    let protocols: Vec<&str> = spec.protocols.iter().map(|p| p.as_str()).collect();
    ctx.say(format!("# haqt bench seed={} spec={:016x}", spec.master_seed, spec.fingerprint()));
    ctx.say(format!("dim = {}, protocols = {}, N = {:?}, trials = {}, tasks = {tasks}", spec.dim, protocols.join(","), spec.shot_grid, spec.trials));
    if a.dry_run {
        ctx.say(format!("dry run: spec is valid; outputs would go to {}", dir.join(&stem).display()));
        return Ok(());
    }
    let verbose = ctx.verbose;
    let progress = move |done: usize, total: usize| {
        if verbose > 0 && (done == total || done % 10 == 0) {
            eprintln!("{done}/{total} trials");
        }
    };
    let report = run_parallel(spec, a.threads.map(|t| t as usize), &progress)?;
    for p in &report.points {
        ctx.say(format!(
            "{:<4} N={:<8} mean={:e} se={:e} gm={:e} alpha_bound={:e}",
            p.protocol.as_str(),
            p.shots,
            p.mean_infidelity,
            p.std_error,
            p.gm_bound,
            p.alpha_bound
        ));
    }
    if !report.bounds_applicable {
        ctx.say("bounds not applicable: rank-deficient");
    }
    let unconverged: usize = report.points.iter().flat_map(|p| &p.records).filter(|r| !r.converged).count();
    if unconverged > 0 {
        eprintln!("warning: {unconverged} trials reached the iteration limit");
    }
    for path in emit_report(&report, &dir, &stem)? {
        ctx.say(format!("wrote {}", path.display()));
    }
    Ok(())
}
