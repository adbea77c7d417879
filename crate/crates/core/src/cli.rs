//! Command-line front end. [`run`] parses arguments, dispatches to the
//! library and returns the process exit code: 0 on success, 1 on runtime
//! failure, 2 on usage errors. Stdout depends only on the flags.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::experiments::{self, calibrate_p, CalibrationOptions, EmitFormat, ExperimentConfig, Runner};
use crate::geometry::{box_probability, make_domain_pair, subdivide, InteractionKind, TreeRegion};
use crate::kernels::KernelId;
use crate::lowrank::{assemble, eps_rank_with, RankMethod};
use crate::probmodel::{
    binom_pmf, expected_r, k_tilde, trinom_pmf, var_r_bound, z_mean, z_pmf, z_var, BoundInputs, CountModel,
    TruncatedCountModel,
};
use crate::sampling::{derive_seed, sample, Distribution};

/// Library version followed by the result format version.
pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (format 1)");

#[derive(Debug, Parser)]
#[command(name = "kernel-rank", version = VERSION, about = "Numerical rank of kernel matrices between neighbouring boxes")]
struct Cli {
    /// Worker threads for trial-parallel commands. Never changes results.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// ε-rank of one seeded kernel matrix.
    Rank(RankArgs),
    /// Run an experiment described by a JSON config.
    Experiment(ExperimentArgs),
    /// Rank model table over an n ladder, as CSV.
    Bounds(BoundsArgs),
    /// Summary of the peeling tree.
    Subdivide(SubdivideArgs),
    /// Truncation level from far-field ranks.
    Calibrate(CalibrateArgs),
    /// Probability primitives of the rank model.
    #[command(subcommand)]
    Probe(Probe),
}

#[derive(Debug, Args)]
struct Domain {
    #[arg(long)]
    dim: usize,
    /// `far`, or the dimension of the shared surface (0 vertex, 1 edge, 2 face).
    #[arg(long)]
    surface: InteractionKind,
}

#[derive(Debug, Args)]
struct RankArgs {
    #[command(flatten)]
    domain: Domain,
    #[arg(long)]
    kernel: KernelId,
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 1e-12)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    side: f64,
    /// Singular value ratios to print.
    #[arg(long, default_value_t = 8)]
    top: usize,
    /// Use a full SVD instead of pivoted-QR deflation.
    #[arg(long)]
    full_svd: bool,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// csv, json or table.
    #[arg(long, default_value = "csv")]
    format: EmitFormat,
    /// Replace an existing output file.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    surface: InteractionKind,
    #[arg(long)]
    p: u64,
    /// Comma-separated particle counts.
    #[arg(long, value_delimiter = ',', default_values_t = [256u64, 1024, 4096, 16384])]
    n_ladder: Vec<u64>,
    /// Tail level used for the cutoff column.
    #[arg(long, default_value_t = 1e-3)]
    tail_eps: f64,
}

#[derive(Debug, Args)]
struct SubdivideArgs {
    #[command(flatten)]
    domain: Domain,
    #[arg(long)]
    n: u64,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[arg(long)]
    kernel: KernelId,
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value_t = 1e-12)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    trials: u64,
    #[arg(long, value_delimiter = ',', default_values_t = [64u64, 128, 256, 512, 1024])]
    ladder: Vec<u64>,
}

#[derive(Debug, Subcommand)]
enum Probe {
    /// P(N = k) for N ~ Binomial(n, q).
    Binom {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        k: u64,
    },
    /// Joint count probability of two disjoint cells.
    Trinom {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        q1: f64,
        #[arg(long)]
        q2: f64,
        #[arg(long)]
        l: u64,
        #[arg(long)]
        m: u64,
    },
    /// Pmf, mean and variance of min(N, p).
    Z {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        p: u64,
    },
    /// Level cutoff below which the truncation tail is small.
    KTilde {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        p: u64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        dim: usize,
    },
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(Error::io("<stdout>", e))
    }
}

type Outcome = std::result::Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Shared-surface dimension, or a usage error when it does not fit `dim`.
fn check_surface(dim: usize, surface: InteractionKind) -> std::result::Result<(), Failure> {
    if dim == 0 {
        return Err(usage("--dim must be at least 1"));
    }
    match surface {
        InteractionKind::SharedSurface(dp) if dp >= dim => {
            Err(usage(format!("--surface {dp} must be below --dim {dim}")))
        }
        _ => Ok(()),
    }
}

fn rank(a: &RankArgs, out: &mut dyn Write) -> Outcome {
    check_surface(a.domain.dim, a.domain.surface)?;
    if !(a.eps > 0.0) {
        return Err(usage("--eps must be positive"));
    }
    let n = usize::try_from(a.n).map_err(|_| usage("--n too large"))?;
    let (target, source) = make_domain_pair(a.domain.dim, a.domain.surface, a.side)?;
    let xs = sample(&target, n, derive_seed(a.seed, &[0]), &Distribution::Uniform)?;
    let ys = sample(&source, n, derive_seed(a.seed, &[1]), &Distribution::Uniform)?;
    let k = assemble(&a.kernel, &xs, &ys)?;
    let method = if a.full_svd { RankMethod::Full } else { RankMethod::default() };
    let report = eps_rank_with(&k, a.eps, method)?;
    writeln!(out, "kernel: {}", a.kernel)?;
    writeln!(out, "domains: d = {}, {}", a.domain.dim, a.domain.surface.label())?;
    writeln!(out, "n: {}", a.n)?;
    writeln!(out, "seed: {}", a.seed)?;
    writeln!(out, "eps: {:e}", a.eps)?;
    writeln!(out, "rank: {}", report.eps_rank)?;
    let s1 = report.singular_values.first().copied().unwrap_or(0.0);
    let ratios: Vec<String> = report
        .singular_values
        .iter()
        .take(a.top)
        .map(|s| if s1 > 0.0 { format!("{:.6e}", s / s1) } else { "0".into() })
        .collect();
    writeln!(out, "sigma_k/sigma_1: {}", ratios.join(" "))?;
    Ok(())
}

fn experiment(a: &ExperimentArgs, workers: Option<usize>, out: &mut dyn Write) -> Outcome {
    let text = std::fs::read_to_string(&a.config).map_err(|e| usage(format!("{}: {e}", a.config.display())))?;
    let cfg = ExperimentConfig::from_json(&text).map_err(|e| usage(format!("{}: {e}", a.config.display())))?;
    if a.out.exists() && !a.force {
        return Err(Error::OutputExists { path: a.out.clone() }.into());
    }
    let runner = Runner { workers, ..Runner::default() };
    let stats = experiments::run_experiment_with(&cfg, &runner)?;
    experiments::emit(&stats, a.format, &a.out, a.force)?;
    for c in &stats.cells {
        match &c.error {
            None => writeln!(out, "{} n={} trials={} mean={:.4} var={:.4}", c.kernel, c.n, c.trials, c.mean, c.variance)?,
            Some(e) => writeln!(out, "{} n={} failed: {e}", c.kernel, c.n)?,
        }
    }
    writeln!(out, "wrote {}", a.out.display())?;
    let failed = stats.failures().count();
    if failed > 0 {
        return Err(Error::Numerical(format!("{failed} cell(s) failed")).into());
    }
    Ok(())
}

fn bounds(a: &BoundsArgs, out: &mut dyn Write) -> Outcome {
    check_surface(a.dim, a.surface)?;
    let dp = match a.surface {
        InteractionKind::FarField => return Err(usage("bounds need a shared surface, not far-field")),
        InteractionKind::SharedSurface(dp) => dp,
    };
    writeln!(out, "n,expected_exact,expected_witness,var_bound,kappa,k_tilde")?;
    for &n in &a.n_ladder {
        let b = BoundInputs::new(a.dim, dp, n, a.p).map_err(|e| usage(e.to_string()))?;
        let e = expected_r(&b);
        let kt = k_tilde(n, a.p, a.tail_eps, a.dim).map(|k| k.k_tilde.to_string()).unwrap_or_else(|_| "NA".into());
        writeln!(out, "{n},{},{},{},{},{kt}", e.exact_sum, e.witness, var_r_bound(&b), b.kappa())?;
    }
    Ok(())
}

fn subdivide_cmd(a: &SubdivideArgs, out: &mut dyn Write) -> Outcome {
    check_surface(a.domain.dim, a.domain.surface)?;
    let (target, source) = make_domain_pair(a.domain.dim, a.domain.surface, 1.0)?;
    let tree = subdivide(&source, &target, a.n)?;
    writeln!(out, "d: {}", tree.d())?;
    writeln!(out, "surface: {}", tree.dprime())?;
    writeln!(out, "kappa: {}", tree.kappa())?;
    writeln!(out, "level,boxes,volume,q")?;
    for (i, level) in tree.levels().iter().enumerate() {
        let k = i + 1;
        let q = box_probability(&tree, TreeRegion::Level(k))?;
        writeln!(out, "{k},{},{},{q}", level.len(), level[0].cube.volume())?;
    }
    writeln!(out, "terminal cells: {}", tree.terminal_cells().len())?;
    writeln!(out, "q_kappa: {}", box_probability(&tree, TreeRegion::Terminal)?)?;
    Ok(())
}

fn calibrate(a: &CalibrateArgs, workers: Option<usize>, out: &mut dyn Write) -> Outcome {
    if a.dim == 0 || a.trials == 0 || a.ladder.is_empty() {
        return Err(usage("--dim, --trials and --ladder must be non-empty"));
    }
    let opts = CalibrationOptions { ladder: a.ladder.clone(), trials: a.trials, master_seed: a.seed, ..Default::default() };
    let c = calibrate_p(&a.kernel, a.dim, a.eps, &opts, &Runner { workers, ..Runner::default() })?;
    writeln!(out, "n,max_rank")?;
    for (n, r) in &c.ladder {
        writeln!(out, "{n},{r}")?;
    }
    writeln!(out, "p: {}", c.p)?;
    Ok(())
}

fn probe(p: &Probe, out: &mut dyn Write) -> Outcome {
    match *p {
        Probe::Binom { n, q, k } => writeln!(out, "{}", binom_pmf(&CountModel::new(n, q)?, k)?)?,
        Probe::Trinom { n, q1, q2, l, m } => writeln!(out, "{}", trinom_pmf(n, q1, q2, l, m)?)?,
        Probe::Z { n, q, p } => {
            let model = TruncatedCountModel::new(n, q, p)?;
            writeln!(out, "i,pmf")?;
            for i in 0..=p {
                writeln!(out, "{i},{}", z_pmf(&model, i)?)?;
            }
            writeln!(out, "mean: {}", z_mean(&model))?;
            writeln!(out, "var: {}", z_var(&model))?;
        }
        Probe::KTilde { n, p, eps, dim } => {
            let k = k_tilde(n, p, eps, dim)?;
            writeln!(out, "k_tilde: {}", k.k_tilde)?;
            writeln!(out, "m_eps: {}", k.m_eps)?;
            writeln!(out, "slack: {}", k.slack)?;
        }
    }
    Ok(())
}

/// Run the command line `args` (program name first).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    2
                }
            };
        }
    };
    let outcome = match &cli.command {
        Command::Rank(a) => rank(a, out),
        Command::Experiment(a) => experiment(a, cli.workers, out),
        Command::Bounds(a) => bounds(a, out),
        Command::Subdivide(a) => subdivide_cmd(a, out),
        Command::Calibrate(a) => calibrate(a, cli.workers, out),
        Command::Probe(p) => probe(p, out),
    };
    match outcome {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
        Err(Failure::Runtime(e)) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}
