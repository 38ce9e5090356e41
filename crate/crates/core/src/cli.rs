//! `fbilateral` command-line interface.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::approx::{
    default_k_max, default_t_max, fit_with_error, min_error_over_period, optimize_order_fixed_period,
    optimize_parameters, FourierApproximation,
};
use crate::filter::{brute_bilateral, fast_bilateral, BorderPolicy, Filtered, GrayImage};
use crate::imageio::{clamp_to_u8_range, read_pgm, write_pgm};
use crate::kernels::{build_spatial_kernel, sample_range_kernel, RangeKernel, RangeKernelSamples, RangeKernelSpec};
use crate::lut::{build_lut, LookupTable};
use crate::metrics::{compare_images, ComparisonResult, COMPARISON_CSV_HEADER};
use crate::{synth, Error, Result};

#[derive(Debug, Parser)]
#[command(name = "fbilateral", version, about = "Fast bilateral filtering with optimized Fourier range kernels")]
pub struct Cli {
    /// Border handling for every convolution and for the brute-force window.
    #[arg(long, global = true, value_enum, default_value_t = Border::Symmetric)]
    pub border: Border,

    /// Seed for synthetic image generators.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker thread cap (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Border {
    Symmetric,
    Replicate,
    Zero,
}

impl From<Border> for BorderPolicy {
    fn from(b: Border) -> Self {
        match b {
            Border::Symmetric => BorderPolicy::Symmetric,
            Border::Replicate => BorderPolicy::Replicate,
            Border::Zero => BorderPolicy::Zero,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find the smallest order and its optimal period for a tolerance.
    Optimize(OptimizeArgs),
    /// Build a (K*, T*) lookup table over a sigma x eps grid.
    BuildLut(BuildLutArgs),
    /// Interpolate (K, T) from a lookup table.
    QueryLut(QueryLutArgs),
    /// Filter a PGM image.
    Filter(FilterArgs),
    /// Compare fast and brute-force filtering and check the error bound.
    Compare(CompareArgs),
    /// Write a seeded synthetic test image.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    /// Range kernel: gaussian, exponential, cauchy, or table:<path>.
    #[arg(long, default_value = "gaussian")]
    pub kernel: String,

    /// Range kernel scale.
    #[arg(long)]
    pub sigma: Option<f64>,

    /// Dynamic range R.
    #[arg(long = "range", default_value_t = 255)]
    pub range: u32,
}

impl KernelArgs {
    fn samples(&self) -> Result<RangeKernelSamples> {
        let sigma = || {
            self.sigma
                .ok_or_else(|| Error::validation(format!("--sigma is required for the {} kernel", self.kernel)))
        };
        let kind = match self.kernel.as_str() {
            "gaussian" => RangeKernel::Gaussian { sigma: sigma()? },
            "exponential" => RangeKernel::Exponential { sigma: sigma()? },
            "cauchy" => RangeKernel::Cauchy { sigma: sigma()? },
            other => match other.strip_prefix("table:") {
                Some(path) => RangeKernel::read_table(path)?,
                None => return Err(Error::validation(format!("unknown kernel {other:?}"))),
            },
        };
        sample_range_kernel(&RangeKernelSpec::new(kind, self.range))
    }
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub kernel: KernelArgs,

    /// Tolerance on the discrete squared kernel error.
    #[arg(long)]
    pub eps: f64,

    /// Largest half-period scanned (default 10 R).
    #[arg(long)]
    pub tmax: Option<u32>,

    /// Largest order tried (default 2R + 1).
    #[arg(long)]
    pub kmax: Option<usize>,

    /// Write the (K, T, E) error surface as CSV.
    #[arg(long)]
    pub dump_surface: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BuildLutArgs {
    /// Comma-separated ascending sigma values.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sigmas: Vec<f64>,

    /// Comma-separated decreasing tolerances.
    #[arg(long, value_delimiter = ',', required = true)]
    pub epsilons: Vec<f64>,

    /// Dynamic range R.
    #[arg(long = "range", default_value_t = 255)]
    pub range: u32,

    /// Largest half-period scanned (default 10 R).
    #[arg(long)]
    pub tmax: Option<u32>,

    /// Output path for the table.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct QueryLutArgs {
    /// Lookup table file.
    #[arg(long)]
    pub lut: PathBuf,
    /// Range kernel scale.
    #[arg(long)]
    pub sigma: f64,
    /// Tolerance to interpolate at.
    #[arg(long)]
    pub eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Optimized period and coefficients.
    Fast,
    /// Direct evaluation with the exact range kernel.
    Brute,
    /// Fixed period T = R.
    Fbf,
}

#[derive(Debug, Args)]
pub struct ApproxArgs {
    /// Tolerance driving the order search.
    #[arg(long, conflicts_with_all = ["order", "period"])]
    pub eps: Option<f64>,

    /// Fixed order K (order-matched comparisons).
    #[arg(long = "K", id = "order")]
    pub order: Option<usize>,

    /// Fixed half-period T; requires --K.
    #[arg(long = "T", id = "period", requires = "order")]
    pub period: Option<u32>,

    /// Lookup table to read (K, T) from when --eps is given.
    #[arg(long)]
    pub lut: Option<PathBuf>,

    /// Largest half-period scanned (default 10 R).
    #[arg(long)]
    pub tmax: Option<u32>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Input PGM image.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output PGM image.
    #[arg(long)]
    pub out: PathBuf,
    /// Spatial Gaussian standard deviation in pixels.
    #[arg(long)]
    pub theta: f64,
    /// Filtering method.
    #[arg(long, value_enum, default_value_t = Method::Fast)]
    pub method: Method,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub approx: ApproxArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Input PGM image.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Spatial Gaussian standard deviation in pixels.
    #[arg(long)]
    pub theta: f64,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub approx: ApproxArgs,
    /// CSV destination (default: stdout).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Pattern {
    Noise,
    Blocks,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output PGM image.
    #[arg(long)]
    pub out: PathBuf,
    /// Image width in pixels.
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    /// Image height in pixels.
    #[arg(long, default_value_t = 64)]
    pub height: usize,
    /// Image pattern.
    #[arg(long, value_enum, default_value_t = Pattern::Blocks)]
    pub pattern: Pattern,
}

/// Chosen approximation and its residual kernel error.
struct Selection {
    approx: FourierApproximation,
    error: f64,
    source: &'static str,
}

fn select_approximation(
    b: &RangeKernelSamples,
    args: &ApproxArgs,
    method: Method,
    kernel: &KernelArgs,
) -> Result<Selection> {
    let range = b.range();
    let t_max = args.tmax.unwrap_or_else(|| default_t_max(range));
    let k_max = default_k_max(range);
    let sel = |(approx, error): (FourierApproximation, f64), source| Selection { approx, error, source };

    if method == Method::Fbf {
        if args.period.is_some() {
            return Err(Error::validation("--T cannot be combined with --method fbf (T = R)"));
        }
        return match (args.order, args.eps) {
            (Some(k), _) => Ok(sel(fit_with_error(b, k, range)?, "fixed order, T = R")),
            (None, Some(eps)) => Ok(sel(optimize_order_fixed_period(b, eps, range, k_max)?, "order search, T = R")),
            (None, None) => Err(Error::validation("either --eps or --K is required")),
        };
    }

    match (args.order, args.period, args.eps) {
        (Some(k), Some(t), _) => Ok(sel(fit_with_error(b, k, t)?, "fixed (K, T)")),
        (Some(k), None, _) => {
            let (t, _) = min_error_over_period(k, b, t_max)?;
            Ok(sel(fit_with_error(b, k, t)?, "fixed K, optimized T"))
        }
        (None, _, Some(eps)) => match &args.lut {
            Some(path) => {
                if kernel.kernel != "gaussian" {
                    return Err(Error::validation("lookup tables are built for the gaussian kernel"));
                }
                let lut = LookupTable::load(path)?;
                if lut.range() != range {
                    return Err(Error::validation(format!(
                        "table built for R = {}, requested R = {range}",
                        lut.range()
                    )));
                }
                let sigma = kernel.sigma.unwrap_or_default();
                let (k, t) = lut.query(sigma, eps)?;
                Ok(sel(fit_with_error(b, k as usize, t)?, "lookup table"))
            }
            None => {
                let report = optimize_parameters(b, eps, t_max, k_max)?;
                let error = report.achieved_error;
                Ok(Selection {
                    approx: report.approximation(),
                    error,
                    source: "order/period search",
                })
            }
        },
        (None, _, None) => Err(Error::validation("either --eps or --K is required")),
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn print_selection(sel: &Selection) {
    println!("source = {}", sel.source);
    println!("K = {}", sel.approx.order());
    println!("T = {}", sel.approx.period());
    println!("kernel error = {:e}", sel.error);
}

fn print_timings(fit: Duration, filtered: &Filtered) {
    let d = &filtered.diagnostics;
    match d.timings {
        Some(t) => eprintln!(
            "timing: fit {:.1} ms, auxiliary {:.1} ms, convolutions ({}) {:.1} ms, combination {:.1} ms",
            ms(fit),
            ms(t.auxiliary),
            d.convolutions,
            ms(t.convolution),
            ms(t.combination)
        ),
        None => eprintln!("timing: fit {:.1} ms", ms(fit)),
    }
    if d.fallback_pixels > 0 {
        eprintln!("warning: {} pixels had a nonpositive denominator and kept their input value", d.fallback_pixels);
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn run(cli: Cli) -> Result<()> {
    let border = BorderPolicy::from(cli.border);
    match cli.command {
        Command::Optimize(args) => {
            let b = args.kernel.samples()?;
            let t_max = args.tmax.unwrap_or_else(|| default_t_max(b.range()));
            let k_max = args.kmax.unwrap_or_else(|| default_k_max(b.range()));
            let report = optimize_parameters(&b, args.eps, t_max, k_max)?;
            print!("{report}");
            if let Some(path) = args.dump_surface {
                let mut buf = Vec::new();
                report
                    .write_surface_csv(&mut buf)
                    .map_err(|e| Error::io(&path, e))?;
                write_file(&path, &buf)?;
            }
        }
        Command::BuildLut(args) => {
            let t_max = args.tmax.unwrap_or_else(|| default_t_max(args.range));
            let lut = build_lut(&args.sigmas, &args.epsilons, args.range, t_max)?;
            lut.save(&args.out)?;
            for v in lut.trend_violations() {
                eprintln!(
                    "note: {} trend departs at sigma = {}, log10(1/eps) = {}",
                    v.quantity,
                    lut.sigmas()[v.sigma_index],
                    lut.logeps()[v.logeps_index]
                );
            }
        }
        Command::QueryLut(args) => {
            let lut = LookupTable::load(&args.lut)?;
            let (k, t) = lut.query(args.sigma, args.eps)?;
            println!("K = {k}");
            println!("T = {t}");
        }
        Command::Filter(args) => {
            let img = read_pgm(&args.input)?;
            let spatial = build_spatial_kernel(args.theta)?;
            let b = args.kernel.samples()?;
            let start = Instant::now();
            let filtered = match args.method {
                Method::Brute => brute_bilateral(&img, &spatial, &b, border)?,
                method => {
                    let sel = select_approximation(&b, &args.approx, method, &args.kernel)?;
                    print_selection(&sel);
                    let fit = start.elapsed();
                    let out = fast_bilateral(&img, &spatial, &sel.approx, border)?;
                    print_timings(fit, &out);
                    out
                }
            };
            println!("fallback pixels = {}", filtered.diagnostics.fallback_pixels);
            write_pgm(&clamp_to_u8_range(&filtered.image), &args.out)?;
        }
        Command::Compare(args) => {
            let img = read_pgm(&args.input)?;
            let spatial = build_spatial_kernel(args.theta)?;
            let b = args.kernel.samples()?;
            let start = Instant::now();
            let sel = select_approximation(&b, &args.approx, Method::Fast, &args.kernel)?;
            let fit = start.elapsed();
            let fast = fast_bilateral(&img, &spatial, &sel.approx, border)?;
            print_timings(fit, &fast);
            let brute = brute_bilateral(&img, &spatial, &b, border)?;
            let diff = compare_images(&fast.image, &brute.image)?;
            let result = ComparisonResult::new(diff, sel.error, b.range(), spatial.center())?;
            let csv = format!("{COMPARISON_CSV_HEADER}\n{}\n", result.csv_record());
            match &args.report {
                Some(path) => write_file(path, csv.as_bytes())?,
                None => {
                    std::io::stdout()
                        .write_all(csv.as_bytes())
                        .map_err(|e| Error::io("<stdout>", e))?;
                }
            }
            eprintln!("K = {}, T = {}, PSNR = {} dB", sel.approx.order(), sel.approx.period(), result.psnr);
            if !result.bound_satisfied {
                return Err(Error::Numeric(format!(
                    "pixelwise error {} exceeds the bound {}",
                    result.max_abs_err, result.prop1_bound
                )));
            }
        }
        Command::Synth(args) => {
            if args.width == 0 || args.height == 0 {
                return Err(Error::validation("image dimensions must be positive"));
            }
            let img: GrayImage = match args.pattern {
                Pattern::Noise => synth::noise(args.width, args.height, cli.seed),
                Pattern::Blocks => synth::blocks(args.width, args.height, cli.seed),
            };
            write_pgm(&img, &args.out)?;
        }
    }
    Ok(())
}

/// Installs the global thread pool requested by `--threads`.
pub fn configure_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::validation("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::validation(format!("thread pool: {e}")))?;
    }
    Ok(())
}
