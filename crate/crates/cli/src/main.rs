//! `ritzid` - matrix-free intrinsic dimension estimation from the command
//! line. Subcommands: `estimate`, `oracle`, `generate`, `bench`.

mod io;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ritzid_core::{
    estimate_id, estimate_id_clustered, make_affine, make_low_rank, make_sphere, CenteredOperator,
    DataMatrix, EstimatorConfig, FinalizeMode, LowRankSpec, StopReason, SummationMode,
};

use io::MatrixFormat;
use report::{ConfigEcho, DataShape, OracleSection, RunReportFile};

#[derive(Parser)]
#[command(
    name = "ritzid",
    version,
    about = "Matrix-free intrinsic dimension estimation via stochastic traces, Ritz brackets, and Chebyshev eigenvalue counts"
)]
struct Cli {
    /// Worker threads for probe blocks (default: all cores).
    #[arg(long, global = true, env = "RITZID_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the intrinsic dimension of a data file.
    Estimate(EstimateArgs),
    /// Exact dense spectrum and PCA threshold dimension (desk scale).
    Oracle(OracleArgs),
    /// Generate synthetic benchmark data.
    Generate(GenerateArgs),
    /// Parameter sweeps over (eps, delta, p, n_k), one CSV row per run.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AtMode {
    Lower,
    Mean,
    Upper,
}

impl AtMode {
    fn to_core(self) -> SummationMode {
        match self {
            AtMode::Lower => SummationMode::Lower,
            AtMode::Mean => SummationMode::Mean,
            AtMode::Upper => SummationMode::Upper,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            AtMode::Lower => "lower",
            AtMode::Mean => "mean",
            AtMode::Upper => "upper",
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FtMode {
    Direct,
    Linear,
    Refine,
}

impl FtMode {
    fn to_core(self) -> FinalizeMode {
        match self {
            FtMode::Direct => FinalizeMode::Direct,
            FtMode::Linear => FinalizeMode::Linear,
            FtMode::Refine => FinalizeMode::Refine,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            FtMode::Direct => "direct",
            FtMode::Linear => "linear",
            FtMode::Refine => "refine",
        }
    }
}

#[derive(Args, Clone)]
struct EstimatorFlags {
    /// Target variance ratio t_v.
    #[arg(long, default_value_t = 0.8)]
    tv: f64,
    /// Acceptable half-band a_r around the target.
    #[arg(long, default_value_t = 0.02)]
    ar: f64,
    /// Chebyshev degree p.
    #[arg(long, default_value_t = 20)]
    p: usize,
    /// Ritz value count n_k.
    #[arg(long, default_value_t = 8)]
    nk: usize,
    /// Probe budget epsilon.
    #[arg(long, default_value_t = 0.2)]
    eps: f64,
    /// Probe budget delta.
    #[arg(long, default_value_t = 0.2)]
    delta: f64,
    /// Spectral upper-bound factor c_1 (lambda_max_est = c_1 mu_1).
    #[arg(long, default_value_t = 1.5)]
    c1: f64,
    /// Top-interval factor c_2 (pad interval [mu_1, c_2 mu_1]).
    #[arg(long, default_value_t = 1.4)]
    c2: f64,
    /// Variance attribution mode a_t.
    #[arg(long, value_enum, default_value_t = AtMode::Mean)]
    at: AtMode,
    /// Finalization mode f_t.
    #[arg(long, value_enum, default_value_t = FtMode::Linear)]
    ft: FtMode,
    /// 0 disables clustering; k >= 2 runs k-means sub-estimates.
    #[arg(long, default_value_t = 0)]
    clusters: usize,
    /// Maximum bisection depth for --ft refine.
    #[arg(long, default_value_t = 5)]
    refine_depth: usize,
    /// Base seed for all randomness.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Treat the input as already column-centered.
    #[arg(long)]
    pre_centered: bool,
}

impl EstimatorFlags {
    fn to_config(&self) -> EstimatorConfig {
        EstimatorConfig {
            degree: self.p,
            ritz_count: self.nk,
            epsilon: self.eps,
            delta: self.delta,
            target_variance: self.tv,
            acceptable_range: self.ar,
            lambda_max_factor: self.c1,
            top_interval_factor: self.c2,
            summation: self.at.to_core(),
            finalize: self.ft.to_core(),
            seed: self.seed,
            clusters: self.clusters,
            refine_max_depth: self.refine_depth,
            ..Default::default()
        }
    }

    fn echo(&self, input: &Path) -> ConfigEcho {
        ConfigEcho {
            input: input.display().to_string(),
            tv: self.tv,
            ar: self.ar,
            p: self.p,
            nk: self.nk,
            eps: self.eps,
            delta: self.delta,
            c1: self.c1,
            c2: self.c2,
            at: self.at.as_str().to_string(),
            ft: self.ft.as_str().to_string(),
            clusters: self.clusters,
            pre_centered: self.pre_centered,
        }
    }
}

#[derive(Args)]
struct EstimateArgs {
    /// Input matrix (.csv, or .bin/.ridm for the raw binary layout).
    input: PathBuf,
    #[command(flatten)]
    flags: EstimatorFlags,
    /// Also run the dense oracle and attach exact trace and PCA dimension.
    #[arg(long)]
    exact: bool,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    input: PathBuf,
    /// Variance threshold theta for the PCA dimension.
    #[arg(long, default_value_t = 0.8)]
    theta: f64,
    #[arg(long)]
    pre_centered: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FileFormat {
    Csv,
    Bin,
}

impl FileFormat {
    fn to_io(self) -> MatrixFormat {
        match self {
            FileFormat::Csv => MatrixFormat::Csv,
            FileFormat::Bin => MatrixFormat::Binary,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(subcommand)]
    kind: GenerateKind,
}

#[derive(Subcommand)]
enum GenerateKind {
    /// Low-rank matrix with a bell-shaped singular profile.
    LowRank {
        #[arg(long, default_value_t = 5000)]
        rows: usize,
        #[arg(long, default_value_t = 500)]
        cols: usize,
        #[arg(long, default_value_t = 30)]
        rank: usize,
        #[arg(long, default_value_t = 0.05)]
        tail: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Override the extension-derived format.
        #[arg(long, value_enum)]
        format: Option<FileFormat>,
    },
    /// Uniform points on an embedded d-sphere, randomly rotated.
    Sphere {
        #[arg(long, default_value_t = 1000)]
        points: usize,
        /// Manifold dimension d (points live on S^d).
        #[arg(long, default_value_t = 2)]
        manifold_dim: usize,
        #[arg(long, default_value_t = 10)]
        ambient: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        format: Option<FileFormat>,
    },
    /// Gaussian cloud on a random affine subspace plus isotropic noise.
    Affine {
        #[arg(long, default_value_t = 1000)]
        points: usize,
        #[arg(long, default_value_t = 3)]
        manifold_dim: usize,
        #[arg(long, default_value_t = 10)]
        ambient: usize,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        format: Option<FileFormat>,
    },
}

#[derive(Args)]
struct BenchArgs {
    input: PathBuf,
    /// Comma-separated epsilon values.
    #[arg(long, value_delimiter = ',', default_value = "0.2")]
    eps_list: Vec<f64>,
    /// Comma-separated delta values.
    #[arg(long, value_delimiter = ',', default_value = "0.2")]
    delta_list: Vec<f64>,
    /// Comma-separated Chebyshev degrees.
    #[arg(long, value_delimiter = ',', default_value = "20")]
    p_list: Vec<usize>,
    /// Comma-separated Ritz counts.
    #[arg(long, value_delimiter = ',', default_value = "8")]
    nk_list: Vec<usize>,
    /// Seeded repetitions per configuration.
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[command(flatten)]
    flags: EstimatorFlags,
    /// Write the CSV table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();

    if let Some(threads) = cli.threads {
        if threads > 0 {
            if let Err(e) = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
            {
                eprintln!("ritzid: failed to size the thread pool: {e}");
                return ExitCode::from(1);
            }
        }
    }

    let outcome = match cli.command {
        Command::Estimate(args) => cmd_estimate(args),
        Command::Oracle(args) => cmd_oracle(args).map(|()| ExitCode::SUCCESS),
        Command::Generate(args) => cmd_generate(args).map(|()| ExitCode::SUCCESS),
        Command::Bench(args) => cmd_bench(args).map(|()| ExitCode::SUCCESS),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("ritzid: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn cmd_estimate(args: EstimateArgs) -> Result<ExitCode> {
    let data = io::read_matrix(&args.input, None)?;
    let shape = DataShape {
        rows: data.n_samples(),
        cols: data.n_features(),
    };
    let cfg = args.flags.to_config();

    let oracle = if args.exact {
        let op = centered(&data, args.flags.pre_centered);
        let c = ritzid_core::dense_covariance(&op)?;
        let spectrum = ritzid_core::eigen_decompose(c.view())?;
        Some(OracleSection {
            trace: spectrum.trace,
            theta: args.flags.tv,
            pca_id: ritzid_core::pca_id_threshold(&spectrum, args.flags.tv)?,
        })
    } else {
        None
    };

    let started = Instant::now();
    let mut exit = ExitCode::SUCCESS;
    let report_file = if cfg.clusters >= 2 {
        let clustered = estimate_id_clustered(&data, &cfg)?;
        let wall_time_ms = started.elapsed().as_millis() as u64;
        if clustered
            .runs
            .iter()
            .any(|r| r.report.stop_reason == StopReason::IntervalsExhausted)
        {
            exit = ExitCode::from(2);
        }
        RunReportFile {
            config: args.flags.echo(&args.input),
            data: shape,
            tau: None,
            n_probes: None,
            ritz_values: None,
            intervals: None,
            d_fractional: clustered.d_fractional,
            d_rounded: clustered.d_rounded,
            stop_reason: None,
            per_cluster: Some(report::cluster_sections(&clustered)),
            oracle,
            seed: args.flags.seed,
            wall_time_ms,
        }
    } else {
        let op = centered(&data, args.flags.pre_centered);
        let id = estimate_id(&op, &cfg)?;
        let wall_time_ms = started.elapsed().as_millis() as u64;
        if id.stop_reason == StopReason::IntervalsExhausted {
            eprintln!(
                "ritzid: swept all intervals but reached only {:.4} of the target variance ratio",
                id.records.last().map(|r| r.cumulative_ratio).unwrap_or(0.0)
            );
            exit = ExitCode::from(2);
        }
        let (tau, n_probes, ritz_values, intervals, stop_reason) = report::single_run_sections(&id);
        RunReportFile {
            config: args.flags.echo(&args.input),
            data: shape,
            tau: Some(tau),
            n_probes: Some(n_probes),
            ritz_values: Some(ritz_values),
            intervals: Some(intervals),
            d_fractional: id.d_fractional,
            d_rounded: id.d_rounded,
            stop_reason: Some(stop_reason),
            per_cluster: None,
            oracle,
            seed: args.flags.seed,
            wall_time_ms,
        }
    };

    emit(
        args.out.as_deref(),
        &serde_json::to_string_pretty(&report_file)?,
    )?;
    Ok(exit)
}

fn centered(data: &DataMatrix, pre_centered: bool) -> CenteredOperator {
    if pre_centered {
        CenteredOperator::pre_centered(data.clone())
    } else {
        CenteredOperator::center(data.clone())
    }
}

#[derive(serde::Serialize)]
struct OracleReportFile {
    input: String,
    rows: usize,
    cols: usize,
    trace: f64,
    theta: f64,
    pca_id: usize,
    eigenvalues: Vec<f64>,
}

fn cmd_oracle(args: OracleArgs) -> Result<()> {
    let data = io::read_matrix(&args.input, None)?;
    let op = centered(&data, args.pre_centered);
    let c = ritzid_core::dense_covariance(&op)?;
    let spectrum = ritzid_core::eigen_decompose(c.view())?;
    let report = OracleReportFile {
        input: args.input.display().to_string(),
        rows: data.n_samples(),
        cols: data.n_features(),
        trace: spectrum.trace,
        theta: args.theta,
        pca_id: ritzid_core::pca_id_threshold(&spectrum, args.theta)?,
        eigenvalues: spectrum.eigenvalues.clone(),
    };
    emit(args.out.as_deref(), &serde_json::to_string_pretty(&report)?)
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let (data, out, format) = match args.kind {
        GenerateKind::LowRank {
            rows,
            cols,
            rank,
            tail,
            seed,
            out,
            format,
        } => {
            let spec = LowRankSpec {
                n_samples: rows,
                n_features: cols,
                effective_rank: rank,
                tail_strength: tail,
                seed,
            };
            (make_low_rank(&spec)?, out, format)
        }
        GenerateKind::Sphere {
            points,
            manifold_dim,
            ambient,
            seed,
            out,
            format,
        } => (
            make_sphere(points, manifold_dim, ambient, seed)?,
            out,
            format,
        ),
        GenerateKind::Affine {
            points,
            manifold_dim,
            ambient,
            noise,
            seed,
            out,
            format,
        } => (
            make_affine(points, manifold_dim, ambient, noise, seed)?,
            out,
            format,
        ),
    };
    io::write_matrix(&out, &data, format.map(FileFormat::to_io))?;
    eprintln!(
        "ritzid: wrote {} x {} matrix to {}",
        data.n_samples(),
        data.n_features(),
        out.display()
    );
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    if args.eps_list.is_empty()
        || args.delta_list.is_empty()
        || args.p_list.is_empty()
        || args.nk_list.is_empty()
        || args.repeats == 0
    {
        bail!("all sweep lists must be non-empty and repeats >= 1");
    }
    let data = io::read_matrix(&args.input, None)?;
    let op = centered(&data, args.flags.pre_centered);

    let mut table = String::from(
        "epsilon,delta,p,n_k,repeat,seed,n_probes,d_fractional,d_rounded,variance_ratio,stop_reason,wall_time_ms\n",
    );
    for &eps in &args.eps_list {
        for &delta in &args.delta_list {
            for &p in &args.p_list {
                for &nk in &args.nk_list {
                    for repeat in 0..args.repeats {
                        let mut cfg = args.flags.to_config();
                        cfg.epsilon = eps;
                        cfg.delta = delta;
                        cfg.degree = p;
                        cfg.ritz_count = nk;
                        cfg.clusters = 0;
                        cfg.seed = args.flags.seed + repeat as u64;
                        let started = Instant::now();
                        let id = estimate_id(&op, &cfg)?;
                        let wall = started.elapsed().as_millis();
                        let ratio = id.records.last().map(|r| r.cumulative_ratio).unwrap_or(0.0);
                        table.push_str(&format!(
                            "{eps},{delta},{p},{nk},{repeat},{},{},{},{},{ratio},{},{wall}\n",
                            cfg.seed,
                            id.trace.n_v_used,
                            id.d_fractional,
                            id.d_rounded,
                            report::stop_reason_str(id.stop_reason),
                        ));
                    }
                }
            }
        }
    }
    emit(args.out.as_deref(), table.trim_end())
}
