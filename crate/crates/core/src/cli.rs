//! The `mwm` command line.
//!
//! Exit codes: 0 success, 2 usage error, 3 validation, parse or I/O error,
//! 4 eigensolver non-convergence. Data goes to files and stdout, diagnostics
//! to stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::error::{bad_param, Error};
use crate::eval::{
    avg_error_rate, noise_sweep, pca_experiment, summarize, EtaTopology, SweepOptions,
    Theorem2Check, TopologyKind,
};
use crate::io::{
    csv_string, read_instance, read_points, read_solution, write_instance, write_solution,
    write_text,
};
use crate::model::{
    gen_ground_truth, gen_noisy_tensor, median_heuristic_sigma, tensor_from_points,
};
use crate::solver::{Algorithm, EdgeOrdering, Schedule, SolverConfig};
use crate::sync::SyncConfig;

pub const BENCH_HEADER: [&str; 13] = [
    "algo",
    "n",
    "m",
    "topology",
    "eta_tree",
    "eta_off",
    "seed",
    "error_rate",
    "objective",
    "exact_recovery",
    "wall_time_ms",
    "theorem2_bound",
    "theorem2_satisfied",
];

pub const PCA_HEADER: [&str; 3] = ["method", "k", "reconstruction_error"];

#[derive(Debug, Parser)]
#[command(name = "mwm", version, about = "Multi-way matching over permutations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a noisy instance with embedded ground truth
    Gen(GenArgs),
    /// Build an instance from point sets with an RBF kernel
    Rbf(RbfArgs),
    /// Solve an instance
    Solve(SolveArgs),
    /// Average pairwise error rate of a solution
    Eval(EvalArgs),
    /// Noise sweep benchmark to CSV
    Bench(BenchArgs),
    /// PCA reconstruction error after reordering point sets
    Pca(PcaArgs),
}

fn non_negative(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("must be a finite value >= 0, got {s}"))
    }
}

fn positive_count(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn topology(s: &str) -> Result<TopologyKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn schedule(s: &str) -> Result<Schedule, String> {
    match s {
        "sweep" => Ok(Schedule::Sweep),
        "random" => Ok(Schedule::Random),
        _ => Err(format!("unknown schedule '{s}' (sweep|random)")),
    }
}

fn ordering(s: &str) -> Result<EdgeOrdering, String> {
    match s {
        "basic" => Ok(EdgeOrdering::Basic),
        "prim" => Ok(EdgeOrdering::Prim),
        "kruskal" => Ok(EdgeOrdering::Kruskal),
        _ => Err(format!("unknown edge order '{s}' (basic|prim|kruskal)")),
    }
}

#[derive(Debug, Clone, Copy)]
enum Sigma {
    Median,
    Value(f64),
}

fn sigma(s: &str) -> Result<Sigma, String> {
    if s == "median" {
        return Ok(Sigma::Median);
    }
    let v: f64 = s
        .parse()
        .map_err(|_| format!("expected a number or 'median', got {s}"))?;
    if v.is_finite() && v > 0.0 {
        Ok(Sigma::Value(v))
    } else {
        Err(format!("sigma must be > 0, got {s}"))
    }
}

#[derive(Debug, Clone)]
enum PcaMethod {
    None,
    Solver(Algorithm),
}

fn pca_method(s: &str) -> Result<PcaMethod, String> {
    if s == "none" {
        Ok(PcaMethod::None)
    } else {
        algorithm(s).map(PcaMethod::Solver)
    }
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, value_parser = positive_count)]
    n: usize,
    #[arg(long, value_parser = positive_count)]
    m: usize,
    #[arg(long, value_parser = topology, default_value = "uniform")]
    topology: TopologyKind,
    #[arg(long, value_parser = non_negative, allow_negative_numbers = true, default_value = "0")]
    eta_tree: f64,
    #[arg(long, value_parser = non_negative, allow_negative_numbers = true, default_value = "0")]
    eta_off: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RbfArgs {
    #[arg(long)]
    points: PathBuf,
    /// Kernel width, or `median` for the median inter-set distance
    #[arg(long, value_parser = sigma, default_value = "median")]
    sigma: Sigma,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long, value_parser = algorithm)]
    algo: Algorithm,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_parser = schedule, default_value = "sweep")]
    schedule: Schedule,
    #[arg(long, value_parser = positive_count, default_value = "1000")]
    max_sweeps: usize,
    /// Edge order for alg1
    #[arg(long, value_parser = ordering, default_value = "kruskal")]
    order: EdgeOrdering,
    /// Global coordinate ascent after the last merge (alg2 variants)
    #[arg(long)]
    final_polish: bool,
    /// Reject similarity entries outside [0, 1]
    #[arg(long)]
    strict_range: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    solution: PathBuf,
    #[arg(long, conflicts_with = "instance")]
    truth: Option<PathBuf>,
    /// Instance file with embedded truth
    #[arg(long)]
    instance: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', required = true, value_parser = positive_count)]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true, value_parser = positive_count)]
    m: Vec<usize>,
    #[arg(long, value_delimiter = ',', value_parser = topology, default_value = "uniform")]
    topology: Vec<TopologyKind>,
    #[arg(long, value_delimiter = ',', value_parser = non_negative, allow_negative_numbers = true, default_value = "0")]
    eta_tree: Vec<f64>,
    #[arg(long, value_delimiter = ',', value_parser = non_negative, allow_negative_numbers = true, default_value = "0")]
    eta_off: Vec<f64>,
    #[arg(long, value_delimiter = ',', value_parser = algorithm, default_value = "alg2-prim")]
    algos: Vec<Algorithm>,
    /// Runs seeds 0..N
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, env = "MWM_JOBS", value_parser = positive_count)]
    jobs: Option<usize>,
    /// Write wall_time_ms as 0 for reproducible files
    #[arg(long)]
    no_timing: bool,
    #[arg(long, value_parser = positive_count, default_value = "1000")]
    max_sweeps: usize,
}

#[derive(Debug, Args)]
struct PcaArgs {
    #[arg(long)]
    points: PathBuf,
    #[arg(long, value_delimiter = ',', value_parser = pca_method, default_value = "none,alg2-prim")]
    methods: Vec<PcaMethod>,
    #[arg(long, value_delimiter = ',', required = true)]
    k_list: Vec<usize>,
    #[arg(long, value_parser = sigma, default_value = "median")]
    sigma: Sigma,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(Error::Io(e.to_string()))
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parameter(_) => 2,
        Error::Convergence(_) => 4,
        _ => 3,
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let sink: &mut dyn Write = if code == 0 { out } else { err };
            let _ = write!(sink, "{e}");
            return if code == 0 { 0 } else { 2 };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a, out, err),
        Command::Rbf(a) => cmd_rbf(a, out, err),
        Command::Solve(a) => cmd_solve(a, out, err),
        Command::Eval(a) => cmd_eval(a, out, err),
        Command::Bench(a) => cmd_bench(a, out, err),
        Command::Pca(a) => cmd_pca(a, out, err),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
        Err(Failure::Lib(e)) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(args: impl IntoIterator<Item = OsString>) -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

fn print_check(check: &Theorem2Check, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    writeln!(out, "gamma={}", check.gamma)?;
    writeln!(out, "bottleneck={}", check.bottleneck)?;
    writeln!(out, "theorem2_bound={}", check.bound)?;
    writeln!(out, "theorem2_satisfied={}", check.satisfied())?;
    for w in check.warnings() {
        writeln!(err, "warning: {w}")?;
    }
    Ok(())
}

fn cmd_gen(a: GenArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let topo = EtaTopology::new(a.topology, a.eta_tree, a.eta_off)?;
    let truth = gen_ground_truth(a.n, a.m, a.seed)?;
    let etas = topo.build(a.n, a.seed)?;
    let t = gen_noisy_tensor(&truth, &etas, a.seed)?;
    write_instance(&a.out, &t, Some(&truth))?;
    if a.n >= 2 {
        print_check(&Theorem2Check::new(&etas, a.m)?, out, err)?;
    }
    Ok(())
}

fn resolve_sigma(
    s: Sigma,
    ps: &crate::model::PointSets,
    err: &mut dyn Write,
) -> std::result::Result<f64, Failure> {
    Ok(match s {
        Sigma::Value(v) => v,
        Sigma::Median => {
            let v = median_heuristic_sigma(ps)?;
            writeln!(err, "sigma={v}")?;
            v
        }
    })
}

fn cmd_rbf(a: RbfArgs, _out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let (ps, truth) = read_points(&a.points)?;
    let sigma = resolve_sigma(a.sigma, &ps, err)?;
    let t = tensor_from_points(&ps, sigma)?;
    write_instance(&a.out, &t, truth.as_ref())?;
    Ok(())
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn cmd_solve(a: SolveArgs, out: &mut dyn Write, _err: &mut dyn Write) -> CmdResult {
    let (t, truth) = read_instance(&a.input, a.strict_range)?;
    let cfg = SolverConfig {
        order: a.order,
        schedule: a.schedule,
        max_sweeps: a.max_sweeps,
        seed: a.seed,
        final_polish: a.final_polish,
        ..Default::default()
    };
    let start = Instant::now();
    let report = a.algo.run(&t, &cfg, &SyncConfig::default())?;
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    write_solution(&a.out, &report.solution)?;
    writeln!(out, "algo={}", a.algo)?;
    writeln!(out, "objective={}", report.final_objective())?;
    writeln!(out, "objective_trace={}", join(&report.objective_trace))?;
    writeln!(out, "sweeps={}", report.sweeps_run)?;
    writeln!(out, "inner_sweeps={}", report.inner_sweeps)?;
    writeln!(out, "converged={}", report.converged)?;
    writeln!(out, "wall_time_ms={elapsed:.3}")?;
    if let Some(truth) = truth {
        writeln!(
            out,
            "error_rate={:.6}",
            avg_error_rate(&report.solution, &truth)?
        )?;
    }
    Ok(())
}

fn cmd_eval(a: EvalArgs, out: &mut dyn Write, _err: &mut dyn Write) -> CmdResult {
    let truth = match (&a.truth, &a.instance) {
        (Some(path), _) => read_solution(path)?,
        (None, Some(path)) => read_instance(path, false)?
            .1
            .ok_or_else(|| Failure::Usage(format!("{} has no embedded truth", path.display())))?,
        (None, None) => {
            return Err(Failure::Usage(
                "one of --truth or --instance is required".into(),
            ))
        }
    };
    let s = read_solution(&a.solution)?;
    writeln!(out, "error_rate={:.6}", avg_error_rate(&s, &truth)?)?;
    Ok(())
}

fn with_jobs<R: Send>(
    jobs: Option<usize>,
    f: impl FnOnce() -> R + Send,
) -> std::result::Result<R, Failure> {
    match jobs {
        None => Ok(f()),
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map_err(|e| Failure::Usage(format!("cannot start {j} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn cmd_bench(a: BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    if a.n.iter().any(|&n| n < 2) {
        return Err(bad_param!("bench needs n >= 2").into());
    }
    let opts = SweepOptions {
        solver: SolverConfig {
            max_sweeps: a.max_sweeps,
            ..Default::default()
        },
        sync: SyncConfig::default(),
        timing: !a.no_timing,
    };
    let mut records = Vec::new();
    for &kind in &a.topology {
        for &n in &a.n {
            for &m in &a.m {
                for &eta_tree in &a.eta_tree {
                    for &eta_off in &a.eta_off {
                        let topo = EtaTopology::new(kind, eta_tree, eta_off)?;
                        let check = Theorem2Check::new(&topo.build(n, 0)?, m)?;
                        for w in check.warnings() {
                            writeln!(err, "warning: {kind} n={n} m={m} eta_tree={eta_tree} eta_off={eta_off}: {w}")?;
                        }
                        let recs = with_jobs(a.jobs, || {
                            noise_sweep(&topo, n, m, &a.algos, a.seeds, &opts)
                        })??;
                        for &algo in &a.algos {
                            let s = summarize(&recs, algo);
                            writeln!(
                                out,
                                "{kind} n={n} m={m} eta_tree={eta_tree} eta_off={eta_off} algo={algo} exact={}/{} mean_error={:.6}",
                                s.exact, s.runs, s.mean_error
                            )?;
                        }
                        records.extend(recs);
                    }
                }
            }
        }
    }
    crate::eval::sort_records(&mut records);
    write_text(&a.out, &csv_string(&records, &BENCH_HEADER)?)?;
    Ok(())
}

fn cmd_pca(a: PcaArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let (ps, _) = read_points(&a.points)?;
    let k_max = crate::eval::pca_k_max(&ps);
    if let Some(k) = a.k_list.iter().find(|&&k| k == 0 || k > k_max) {
        return Err(Failure::Usage(format!("k = {k} outside 1..={k_max}")));
    }
    let needs_tensor = a.methods.iter().any(|m| matches!(m, PcaMethod::Solver(_)));
    let tensor = if needs_tensor {
        let sigma = resolve_sigma(a.sigma, &ps, err)?;
        Some(tensor_from_points(&ps, sigma)?)
    } else {
        None
    };
    let cfg = SolverConfig {
        seed: a.seed,
        ..Default::default()
    };
    let mut methods = Vec::new();
    for method in &a.methods {
        match method {
            PcaMethod::None => methods.push(("none".to_string(), None)),
            PcaMethod::Solver(algo) => {
                let t = tensor.as_ref().expect("tensor built for solver methods");
                let report = algo.run(t, &cfg, &SyncConfig::default())?;
                methods.push((algo.name().to_string(), Some(report.solution)));
            }
        }
    }
    let rows = pca_experiment(&ps, &methods, &a.k_list)?;
    for r in &rows {
        writeln!(
            out,
            "method={} k={} reconstruction_error={}",
            r.method, r.k, r.reconstruction_error
        )?;
    }
    write_text(&a.out, &csv_string(&rows, &PCA_HEADER)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["mwm"];
        full.extend_from_slice(args);
        let code = run_with(full, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(&[]).0, 2);
        assert_eq!(
            run(&[
                "gen",
                "--n",
                "3",
                "--m",
                "2",
                "--eta-off",
                "-1",
                "--out",
                "x"
            ])
            .0,
            2
        );
        assert_eq!(
            run(&["solve", "--algo", "magic", "--in", "a", "--out", "b"]).0,
            2
        );
        assert_eq!(run(&["gen", "--n", "0", "--m", "2", "--out", "x"]).0, 2);
        assert_eq!(run(&["--help"]).0, 0);
    }

    #[test]
    fn missing_file_exits_3() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("none.json");
        let out = dir.path().join("s.json");
        let (code, _, err) = run(&[
            "solve",
            "--algo",
            "alg1",
            "--in",
            missing.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 3, "{err}");
    }

    #[test]
    fn exit_codes_by_error_kind() {
        assert_eq!(exit_code(&Error::Parameter("x".into())), 2);
        assert_eq!(exit_code(&Error::Validation("x".into())), 3);
        assert_eq!(exit_code(&Error::Parse("x".into())), 3);
        assert_eq!(exit_code(&Error::Convergence("x".into())), 4);
    }
}
