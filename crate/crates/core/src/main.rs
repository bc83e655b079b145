use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hsolo::bench::{
    self, format_correspondences, format_result, load_correspondences, records_csv,
    run_benchmark, summary_csv, theory_csv, theory_curves, BenchConfig, BenchInput,
    CorrespondenceSet, Method, MethodConfig,
};
use hsolo::hsolo::{estimate_epsilon_r, filter_by_model, percentile_sorted};
use hsolo::{
    generate_scene, hsolo_estimate, ransac_baseline, single_match_homography, Error, Homography,
    HsoloConfig, RansacConfig, SceneSpec,
};

#[derive(Parser)]
#[command(name = "hsolo", version, about = "Robust homography estimation from affine-aware correspondences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate a homography from a correspondence file.
    Solve(SolveArgs),
    /// Write a synthetic correspondence file with ground-truth labels.
    Generate(GenerateArgs),
    /// Compare estimators over many seeded trials.
    Bench(BenchArgs),
    /// Tabulate theoretical iteration counts and speedups.
    Theory(TheoryArgs),
    /// Estimate the median-gate threshold from a labelled file.
    CalibrateEpsilonR(CalibrateArgs),
}

#[derive(Args, Clone)]
struct EstimatorArgs {
    /// Support threshold in pixels.
    #[arg(long, default_value_t = 4.0)]
    epsilon: f64,
    /// Desired success probability.
    #[arg(long, default_value_t = 0.95)]
    p: f64,
    /// Assumed inlier rate of the filtered set.
    #[arg(long = "wf", default_value_t = 0.7)]
    w_f: f64,
    /// Filtered set size.
    #[arg(long = "nf", default_value_t = 21)]
    n_f: usize,
    /// Median-error gate in pixels.
    #[arg(long = "epsilon-r", default_value_t = 20.0)]
    epsilon_r: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cap on RANSAC iterations or HSolo outer iterations.
    #[arg(long, default_value_t = 10_000_000)]
    max_iterations: u64,
    /// Factor applied to the inlier rate when sizing the outer loop.
    #[arg(long, default_value_t = 0.7)]
    inlier_scaling: f64,
}

impl EstimatorArgs {
    fn hsolo(&self) -> HsoloConfig {
        HsoloConfig {
            n_f: self.n_f,
            w_f: self.w_f,
            epsilon_r: self.epsilon_r,
            epsilon: self.epsilon,
            p: self.p,
            seed: self.seed,
            inlier_scaling: self.inlier_scaling,
            max_outer_iterations: self.max_iterations,
        }
    }

    fn ransac(&self) -> RansacConfig {
        RansacConfig {
            epsilon: self.epsilon,
            p: self.p,
            sample_size: 4,
            max_iterations: self.max_iterations,
            seed: self.seed,
        }
    }
}

#[derive(Args, Clone)]
struct SceneArgs {
    #[arg(long, default_value_t = 500)]
    n_total: usize,
    #[arg(long, default_value_t = 640.0)]
    width: f64,
    #[arg(long, default_value_t = 480.0)]
    height: f64,
    /// Gaussian noise on matched positions, pixels.
    #[arg(long, default_value_t = 0.0)]
    pixel_noise: f64,
    /// Log-normal sigma of scale noise.
    #[arg(long, default_value_t = 0.0)]
    scale_noise: f64,
    /// Gaussian angle noise, radians.
    #[arg(long, default_value_t = 0.0)]
    angle_noise: f64,
    /// Ground-truth homography as nine comma-separated row-major entries.
    #[arg(long, value_name = "H1,...,H9", value_delimiter = ',')]
    truth: Option<Vec<f64>>,
}

impl SceneArgs {
    fn spec(&self, inlier_rate: f64, seed: u64) -> Result<SceneSpec, CliError> {
        let truth = match &self.truth {
            Some(v) => {
                let m: [f64; 9] = v.as_slice().try_into().map_err(|_| {
                    CliError::Input(format!("--truth needs 9 entries, got {}", v.len()))
                })?;
                Homography::new(m).map_err(CliError::input)?
            }
            None => SceneSpec::default_truth(),
        };
        Ok(SceneSpec {
            truth,
            image_bounds: (self.width, self.height),
            pixel_noise_sigma: self.pixel_noise,
            scale_noise_sigma: self.scale_noise,
            angle_noise_sigma: self.angle_noise,
            ..SceneSpec::new(self.n_total, inlier_rate, seed)
        })
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    input: PathBuf,
    /// Result document path (stdout if omitted).
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value = "hsolo")]
    method: Method,
    /// Record wall-clock time in the output.
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    est: EstimatorArgs,
}

#[derive(Args)]
struct GenerateArgs {
    /// Correspondence file path (stdout if omitted).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Target inlier rate.
    #[arg(long, default_value_t = 0.1)]
    w: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    scene: SceneArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Labelled correspondence file; synthetic scenes are used if omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Inlier rates for synthetic scenes.
    #[arg(long, value_delimiter = ',', default_value = "0.03,0.05,0.1,0.2,0.4")]
    w: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, value_delimiter = ',', default_value = "hsolo,ransac")]
    methods: Vec<Method>,
    /// Worker threads (0 = all cores). Output does not depend on this.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Record wall-clock times in the output.
    #[arg(long)]
    timing: bool,
    /// Per-trial records CSV.
    #[arg(long)]
    records: Option<PathBuf>,
    /// Summary CSV (stdout if omitted).
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    dbscan_eps: f64,
    #[arg(long)]
    dbscan_min_pts: Option<usize>,
    #[command(flatten)]
    scene: SceneArgs,
    #[command(flatten)]
    est: EstimatorArgs,
}

#[derive(Args)]
struct TheoryArgs {
    #[arg(long, default_value_t = 0.01)]
    w_min: f64,
    #[arg(long, default_value_t = 1.0)]
    w_max: f64,
    #[arg(long, default_value_t = 100)]
    w_steps: usize,
    /// RANSAC sample sizes to compare against.
    #[arg(long, value_delimiter = ',', default_value = "4")]
    n: Vec<u32>,
    #[arg(long, default_value_t = 0.95)]
    p: f64,
    #[arg(long = "nf", default_value_t = 21)]
    n_f: usize,
    #[arg(long = "wf", default_value_t = 0.7)]
    w_f: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long = "nf", default_value_t = 21)]
    n_f: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

enum CliError {
    Input(String),
    Estimation(String),
}

impl CliError {
    fn input(e: impl std::fmt::Display) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NoModelFound => CliError::Estimation(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

fn emit(path: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(CliError::input),
    }
}

fn load(path: &PathBuf) -> Result<CorrespondenceSet, CliError> {
    load_correspondences(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn require_byproducts(set: &CorrespondenceSet) -> Result<(), CliError> {
    if set.has_byproducts {
        Ok(())
    } else {
        Err(CliError::Input(
            "input has point locations only; hsolo needs scale and angle columns (use --method ransac)"
                .into(),
        ))
    }
}

fn solve(args: SolveArgs) -> Result<(), CliError> {
    let set = load(&args.input)?;
    let pool = &set.correspondences;
    let (result, config) = match args.method {
        Method::Hsolo => {
            require_byproducts(&set)?;
            let cfg = args.est.hsolo();
            (hsolo_estimate(pool, &cfg)?, MethodConfig::Hsolo(cfg))
        }
        Method::Ransac => {
            let cfg = args.est.ransac();
            (ransac_baseline(pool, &cfg)?, MethodConfig::Ransac(cfg))
        }
    };
    emit(args.output.as_ref(), &format_result(&result, config, args.timing))
}

fn generate(args: GenerateArgs) -> Result<(), CliError> {
    let spec = args.scene.spec(args.w, args.seed)?;
    let scene = generate_scene(&spec)?;
    emit(
        args.output.as_ref(),
        &format_correspondences(&scene.correspondences, Some(&scene.inlier_mask)),
    )
}

fn bench(args: BenchArgs) -> Result<(), CliError> {
    let input = match &args.input {
        Some(path) => BenchInput::File(load(path)?),
        None => BenchInput::Synthetic {
            template: args.scene.spec(args.w.first().copied().unwrap_or(0.1), args.est.seed)?,
            inlier_rates: args.w.clone(),
        },
    };
    let cfg = BenchConfig {
        input,
        methods: args.methods.clone(),
        trials: args.trials,
        hsolo: args.est.hsolo(),
        ransac: args.est.ransac(),
        max_iterations: args.est.max_iterations,
        seed: args.est.seed,
        threads: args.threads,
        timing: args.timing,
        dbscan_eps: args.dbscan_eps,
        dbscan_min_pts: args.dbscan_min_pts,
    };
    let report = run_benchmark(&cfg)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(path) = &args.records {
        emit(Some(path), &records_csv(&report.records, args.timing))?;
    }
    emit(args.summary.as_ref(), &summary_csv(&report.summaries, args.timing))
}

fn theory(args: TheoryArgs) -> Result<(), CliError> {
    let ws = bench::linspace(args.w_min, args.w_max, args.w_steps);
    if ws.iter().any(|w| !(*w > 0.0 && *w <= 1.0)) || !(args.p > 0.0 && args.p < 1.0) {
        return Err(CliError::Input("need 0 < w <= 1 and 0 < p < 1".into()));
    }
    let rows = theory_curves(&ws, &args.n, args.p, args.n_f, args.w_f);
    emit(args.output.as_ref(), &theory_csv(&rows))
}

/// Median filtered-set error for every seed correspondence (only the labelled
/// inliers when the file has labels), summarised by the upper-fence rule.
fn calibrate(args: CalibrateArgs) -> Result<(), CliError> {
    let set = load(&args.input)?;
    require_byproducts(&set)?;
    let pool = &set.correspondences;
    let medians: Vec<f64> = pool
        .iter()
        .enumerate()
        .filter(|(i, _)| set.inlier_mask.as_ref().is_none_or(|m| m[*i]))
        .map(|(_, c)| filter_by_model(&single_match_homography(c), pool, args.n_f).median_error)
        .filter(|m| m.is_finite())
        .collect();
    let epsilon_r = estimate_epsilon_r(&medians)?;
    let mut sorted = medians.clone();
    sorted.sort_by(f64::total_cmp);
    let (q1, q3) = (percentile_sorted(&sorted, 0.25), percentile_sorted(&sorted, 0.75));
    emit(
        args.output.as_ref(),
        &format!("seeds,q1,q3,epsilon_r\n{},{q1},{q3},{epsilon_r}\n", medians.len()),
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Generate(a) => generate(a),
        Command::Bench(a) => bench(a),
        Command::Theory(a) => theory(a),
        Command::CalibrateEpsilonR(a) => calibrate(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Estimation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
