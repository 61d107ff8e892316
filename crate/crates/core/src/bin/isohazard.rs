//! Command-line surface: fit / estimate / ci / simulate.
//!
//! Exit codes: 0 success, 2 usage or data error, 3 numerical failure.

use std::fs::File;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use isohazard::{
    asymptotic_ci, breslow, fit_beta, grenander, grenander_ci, grenander_slope_at, load_sample,
    mle_baseline, naive_kernel_estimator, phi_n, run_coverage_study, smooth_monotone, sort_sample,
    BootstrapPlan, BoundaryPolicy, CiConfig, CiMethod, Error, FitOptions, KernelFamily, KernelSpec,
    Scenario, SortedSample,
};

#[derive(Parser)]
#[command(
    name = "isohazard",
    version,
    about = "Monotone baseline-hazard estimation for the Cox model"
)]
struct Cli {
    /// Cap the worker pool (default: all logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the Cox regression coefficients and print them as JSON.
    Fit {
        /// CSV file with header time,event,z1,...,zp
        #[arg(long)]
        data: PathBuf,
    },
    /// Evaluate a baseline-hazard estimator on a grid; prints x,value rows.
    Estimate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        method: EstimatorArg,
        /// Grid as lo:hi:step
        #[arg(long)]
        grid: String,
        #[command(flatten)]
        kernel: KernelArgs,
    },
    /// Pointwise confidence interval at x0; prints an interval JSON.
    Ci {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        method: EstimatorArg,
        #[arg(long)]
        x0: f64,
        /// Confidence level, e.g. 0.95
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        #[arg(long, value_enum)]
        ci: CiKindArg,
        /// Undersmoothing constant for asymptotic intervals (default: data range)
        #[arg(long)]
        c: Option<f64>,
        /// Bootstrap sample count
        #[arg(long = "B", default_value_t = 1000)]
        bootstrap_samples: usize,
        /// Seed (or set the SEED environment variable)
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        kernel: KernelArgs,
    },
    /// Monte Carlo coverage study from a scenario JSON file.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum)]
        method: EstimatorArg,
        #[arg(long, value_enum)]
        ci: CiKindArg,
        #[arg(long)]
        replications: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV path; a JSON report lands next to it.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long = "B", default_value_t = 1000)]
        bootstrap_samples: usize,
        #[command(flatten)]
        kernel: KernelArgs,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EstimatorArg {
    Grenander,
    Mle,
    Sg,
    Smle,
    Kernel,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CiKindArg {
    Asymptotic,
    Chernoff,
    Bootstrap,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KernelArg {
    Triweight,
    Epanechnikov,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BoundaryArg {
    None,
    Linear,
}

#[derive(Args, Clone)]
struct KernelArgs {
    #[arg(long, value_enum, default_value_t = KernelArg::Triweight)]
    kernel: KernelArg,
    /// Bandwidth, or "auto" for n^{-1/5}
    #[arg(long, default_value = "auto")]
    bandwidth: String,
    #[arg(long, value_enum, default_value_t = BoundaryArg::None)]
    boundary: BoundaryArg,
}

impl KernelArgs {
    fn family(&self) -> KernelFamily {
        match self.kernel {
            KernelArg::Triweight => KernelFamily::Triweight,
            KernelArg::Epanechnikov => KernelFamily::Epanechnikov,
        }
    }

    fn policy(&self) -> BoundaryPolicy {
        match self.boundary {
            BoundaryArg::None => BoundaryPolicy::None,
            BoundaryArg::Linear => BoundaryPolicy::LinearCorrection,
        }
    }

    fn bandwidth_for(&self, n: usize) -> Result<f64, CliError> {
        if self.bandwidth == "auto" {
            return Ok((n as f64).powf(-0.2));
        }
        let b: f64 = self.bandwidth.parse().map_err(|_| {
            CliError::data(format!("cannot parse bandwidth \"{}\"", self.bandwidth))
        })?;
        if !(b.is_finite() && b > 0.0) {
            return Err(CliError::data(format!(
                "bandwidth must be positive, got {b}"
            )));
        }
        Ok(b)
    }

    /// Explicit bandwidth if one was given, otherwise None (= auto).
    fn bandwidth_override(&self) -> Result<Option<f64>, CliError> {
        if self.bandwidth == "auto" {
            Ok(None)
        } else {
            self.bandwidth_for(1).map(Some)
        }
    }
}

// ── Error handling ──────────────────────────────────────────────────────────

struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    fn data(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: 2,
        }
    }

    fn numeric(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::SingularInformation(_) | Error::TooManyFailures { .. } => 3,
            _ => 2,
        };
        Self {
            message: err.to_string(),
            code,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn read_sorted(path: &PathBuf) -> Result<SortedSample, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::data(format!("cannot open {}: {e}", path.display())))?;
    Ok(sort_sample(load_sample(file)?))
}

fn fitted_beta(sorted: &SortedSample) -> Result<Vec<f64>, CliError> {
    if sorted.num_covariates() == 0 {
        return Ok(Vec::new());
    }
    let fit = fit_beta(sorted, &FitOptions::default())?;
    if !fit.converged {
        return Err(CliError::numeric(format!(
            "fit did not converge after {} iterations (gradient norm {})",
            fit.iterations, fit.gradient_norm
        )));
    }
    Ok(fit.beta)
}

fn parse_grid(grid: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = grid.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::data(format!(
            "grid must be lo:hi:step, got \"{grid}\""
        )));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| CliError::data(format!("cannot parse grid component \"{p}\"")))
        })
        .collect::<Result<_, _>>()?;
    let (lo, hi, step) = (nums[0], nums[1], nums[2]);
    if !step.is_finite() || step <= 0.0 {
        return Err(CliError::data(format!(
            "grid step must be positive, got {step}"
        )));
    }
    if lo > hi {
        return Err(CliError::data(format!("grid lo {lo} exceeds hi {hi}")));
    }
    let mut xs = Vec::new();
    let mut k = 0usize;
    loop {
        let x = lo + step * k as f64;
        if x > hi + 1e-12 * step {
            break;
        }
        xs.push(x);
        k += 1;
    }
    Ok(xs)
}

fn seed_or_env(seed: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = seed {
        return Ok(s);
    }
    match std::env::var("SEED") {
        Ok(v) => v
            .parse()
            .map_err(|_| CliError::data(format!("cannot parse SEED env var \"{v}\""))),
        Err(_) => Err(CliError::data(
            "a seed is required: pass --seed or set the SEED environment variable",
        )),
    }
}

fn compose_method(method: EstimatorArg, ci: CiKindArg) -> Result<CiMethod, CliError> {
    match (ci, method) {
        (CiKindArg::Asymptotic, EstimatorArg::Sg) => Ok(CiMethod::AsymptoticSg),
        (CiKindArg::Asymptotic, EstimatorArg::Smle) => Ok(CiMethod::AsymptoticSmle),
        (CiKindArg::Asymptotic, EstimatorArg::Kernel) => Ok(CiMethod::AsymptoticKernel),
        (CiKindArg::Chernoff, EstimatorArg::Grenander) => Ok(CiMethod::GrenanderChernoff),
        (CiKindArg::Bootstrap, EstimatorArg::Sg) => Ok(CiMethod::BootstrapSg),
        (CiKindArg::Bootstrap, EstimatorArg::Smle) => Ok(CiMethod::BootstrapSmle),
        _ => Err(CliError::data(
            "incompatible method/ci pair: asymptotic supports sg|smle|kernel, \
             chernoff supports grenander, bootstrap supports sg|smle",
        )),
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Fit { data } => {
            let sorted = read_sorted(&data)?;
            if sorted.num_covariates() == 0 {
                return Err(CliError::data("fit requires at least one covariate column"));
            }
            let fit = fit_beta(&sorted, &FitOptions::default())?;
            if !fit.converged {
                return Err(CliError::numeric(format!(
                    "fit did not converge after {} iterations",
                    fit.iterations
                )));
            }
            println!("{}", fit.to_json());
            Ok(())
        }
        Command::Estimate {
            data,
            method,
            grid,
            kernel,
        } => {
            let sorted = read_sorted(&data)?;
            let xs = parse_grid(&grid)?;
            let beta = fitted_beta(&sorted)?;
            let spec = KernelSpec::new(
                kernel.family(),
                kernel.bandwidth_for(sorted.len())?,
                kernel.policy(),
            )?;
            let values = estimate_on_grid(&sorted, &beta, method, &spec, &xs)?;
            let mut out = String::from("x,value\n");
            for (x, v) in xs.iter().zip(&values) {
                out.push_str(&format!("{x},{v}\n"));
            }
            print!("{out}");
            Ok(())
        }
        Command::Ci {
            data,
            method,
            x0,
            level,
            ci,
            c,
            bootstrap_samples,
            seed,
            kernel,
        } => {
            if !(0.0 < level && level < 1.0) {
                return Err(CliError::data(format!(
                    "level must be in (0,1), got {level}"
                )));
            }
            let alpha = 1.0 - level;
            let method = compose_method(method, ci)?;
            let sorted = read_sorted(&data)?;
            let n = sorted.len();
            let beta = fitted_beta(&sorted)?;
            let result = match method {
                CiMethod::AsymptoticSg | CiMethod::AsymptoticSmle | CiMethod::AsymptoticKernel => {
                    let c_val = c.unwrap_or(sorted.last_time() - sorted.first_time());
                    let bandwidth = match kernel.bandwidth_override()? {
                        Some(b) => b,
                        None => c_val * (n as f64).powf(-0.25),
                    };
                    let spec = KernelSpec::new(kernel.family(), bandwidth, kernel.policy())?;
                    let estimate = match method {
                        CiMethod::AsymptoticSg => {
                            smooth_monotone(&grenander(&sorted, &beta)?, &spec, x0)?
                        }
                        CiMethod::AsymptoticSmle => {
                            smooth_monotone(&mle_baseline(&sorted, &beta)?, &spec, x0)?
                        }
                        _ => naive_kernel_estimator(&breslow(&sorted, &beta)?, &spec, x0),
                    };
                    let phi = phi_n(&sorted, x0, &beta)?;
                    asymptotic_ci(x0, estimate.max(0.0), phi, n, c_val, alpha, &spec, method)?
                }
                CiMethod::GrenanderChernoff => {
                    let hazard = grenander(&sorted, &beta)?;
                    let slope = grenander_slope_at(&hazard, &sorted, x0)?;
                    let phi = phi_n(&sorted, x0, &beta)?;
                    grenander_ci(x0, hazard.eval(x0), slope, phi, n, alpha)?
                }
                CiMethod::BootstrapSg | CiMethod::BootstrapSmle => {
                    let seed = seed_or_env(seed)?;
                    let plan = BootstrapPlan {
                        samples: bootstrap_samples,
                        bandwidth_resample: None,
                        bandwidth_estimate: kernel.bandwidth_override()?,
                        kernel: kernel.family(),
                        boundary: kernel.policy(),
                        alpha,
                        seed,
                    };
                    let bm = if method == CiMethod::BootstrapSg {
                        isohazard::inference::BootstrapMethod::Sg
                    } else {
                        isohazard::inference::BootstrapMethod::Smle
                    };
                    isohazard::bootstrap_ci(&sorted, bm, x0, &plan)?
                }
            };
            println!("{}", result.to_json());
            Ok(())
        }
        Command::Simulate {
            scenario,
            method,
            ci,
            replications,
            seed,
            out,
            c,
            bootstrap_samples,
            kernel,
        } => {
            let seed = seed_or_env(seed)?;
            let file = File::open(&scenario)
                .map_err(|e| CliError::data(format!("cannot open {}: {e}", scenario.display())))?;
            let scenario: Scenario = serde_json::from_reader(file)
                .map_err(|e| CliError::data(format!("invalid scenario JSON: {e}")))?;
            let method = compose_method(method, ci)?;
            let config = CiConfig {
                alpha: 0.05,
                c,
                kernel: kernel.family(),
                boundary: kernel.policy(),
                bootstrap_samples,
                bandwidth_resample: None,
                bandwidth_estimate: kernel.bandwidth_override()?,
            };
            let report = run_coverage_study(&scenario, method, &config, replications, seed)?;
            std::fs::write(&out, report.to_csv())
                .map_err(|e| CliError::data(format!("cannot write {}: {e}", out.display())))?;
            let json_path = out.with_extension("json");
            let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
            std::fs::write(&json_path, json).map_err(|e| {
                CliError::data(format!("cannot write {}: {e}", json_path.display()))
            })?;
            println!(
                "method={} n={} replications={} AL={:.4} CP={:.4} failures={} wall={:.2}s",
                report.method,
                report.scenario.n,
                report.replications,
                report.average_length,
                report.coverage,
                report.failures,
                report.wall_time_secs
            );
            Ok(())
        }
    }
}

fn estimate_on_grid(
    sorted: &SortedSample,
    beta: &[f64],
    method: EstimatorArg,
    spec: &KernelSpec,
    xs: &[f64],
) -> Result<Vec<f64>, CliError> {
    let check_domain = |x: f64, lo: f64, hi: f64| -> Result<(), CliError> {
        if x < lo || x > hi {
            Err(CliError::data(format!(
                "grid point {x} outside estimator domain [{lo}, {hi}]"
            )))
        } else {
            Ok(())
        }
    };
    match method {
        EstimatorArg::Grenander => {
            let hazard = grenander(sorted, beta)?;
            let (lo, hi) = hazard.domain();
            xs.iter()
                .map(|&x| check_domain(x, lo, hi).map(|_| hazard.eval(x)))
                .collect()
        }
        EstimatorArg::Mle => {
            let hazard = mle_baseline(sorted, beta)?;
            let (lo, hi) = hazard.domain();
            xs.iter()
                .map(|&x| check_domain(x, lo, hi).map(|_| hazard.eval(x)))
                .collect()
        }
        EstimatorArg::Sg => {
            let hazard = grenander(sorted, beta)?;
            xs.iter()
                .map(|&x| smooth_monotone(&hazard, spec, x).map_err(CliError::from))
                .collect()
        }
        EstimatorArg::Smle => {
            let hazard = mle_baseline(sorted, beta)?;
            xs.iter()
                .map(|&x| smooth_monotone(&hazard, spec, x).map_err(CliError::from))
                .collect()
        }
        EstimatorArg::Kernel => {
            let cumhaz = breslow(sorted, beta)?;
            let hi = sorted.last_time();
            xs.iter()
                .map(|&x| {
                    check_domain(x, 0.0, hi).map(|_| naive_kernel_estimator(&cumhaz, spec, x))
                })
                .collect()
        }
    }
}
