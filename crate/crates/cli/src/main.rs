use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use perf_spectrum::cachemodel::CacheConfig;
use perf_spectrum::ingest::{parse_records, write_records, Format, ParseMode};
use perf_spectrum::metrics::{convergence_slope, display_slope, half_series_slopes, RunRecord, DEFAULT_FLAT_BAND};
use perf_spectrum::report::{
    build_spectrum_report_with, render_svg, render_table, GroupBy, Panel, SpectrumReport, SvgOptions, TableFormat,
};
use perf_spectrum::workloads::{run_benchmark, stream_triad, BenchConfig, BenchError, SolveError};

/// Built-in cache model name accepted by `--cache`.
const BUILTIN_CACHE: &str = "e5-2680v2";

#[derive(Parser)]
#[command(name = "perfspec", version, about = "Performance-spectrum benchmarks and reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one diffusion benchmark and append its record.
    Bench(BenchArgs),
    /// Run benchmarks over increasing mesh sizes at fixed workers.
    Sweep(SweepArgs),
    /// Print the metrics table, static-scaling shape and convergence order.
    Analyze(AnalyzeArgs),
    /// Render one report panel as SVG.
    Report(ReportArgs),
    /// Measure memory bandwidth with the STREAM triad kernel.
    Triad(TriadArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Diffusivity anisotropy strength (0 is the Laplacian).
    #[arg(long)]
    alpha: f64,
    /// Relative residual tolerance.
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iterations: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Cache model: a TOML file or the built-in "e5-2680v2".
    #[arg(long, value_name = "CONFIG")]
    cache: Option<String>,
    /// Record label (default "cg1-alpha<A>").
    #[arg(long)]
    label: Option<String>,
    /// json-lines file the records are appended to.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Truncate the output file instead of appending.
    #[arg(long)]
    overwrite: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Mesh segments per side (h = 1/n).
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated mesh sizes, e.g. 4,8,16.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct InputArgs {
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Input format; guessed from the extension when omitted.
    #[arg(long, value_parser = parse_format)]
    format: Option<Format>,
    /// Skip malformed lines with a warning instead of failing.
    #[arg(long)]
    lenient: bool,
    /// Field that splits records into series: label, discretization, workers, alpha.
    #[arg(long, default_value = "label", value_parser = parse_group)]
    group_by: GroupBy,
    /// Half-series slope magnitude treated as flat.
    #[arg(long, default_value_t = DEFAULT_FLAT_BAND)]
    flat_band: f64,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Print the table as CSV instead of aligned text.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    input: InputArgs,
    /// ai-vs-time, static-scaling, iterations or rate2-vs-time.
    #[arg(long, value_parser = parse_panel)]
    panel: Panel,
    #[arg(long, value_name = "OUT")]
    svg: PathBuf,
    #[arg(long, default_value_t = 800)]
    width: u32,
    #[arg(long, default_value_t = 500)]
    height: u32,
    /// Linear y axis for the iterations panel.
    #[arg(long)]
    linear_y: bool,
}

#[derive(Args)]
struct TriadArgs {
    /// Elements per array.
    #[arg(long)]
    length: usize,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse()
}

fn parse_group(s: &str) -> Result<GroupBy, String> {
    s.parse()
}

fn parse_panel(s: &str) -> Result<Panel, String> {
    s.parse()
}

enum Failure {
    Usage(String),
    Data(String),
    NoConvergence(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::NoConvergence(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::NoConvergence(m) => m,
        }
    }
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Config(_) => Failure::Usage(e.to_string()),
            BenchError::Solve(SolveError::NotConverged { .. } | SolveError::Breakdown(_)) => {
                Failure::NoConvergence(e.to_string())
            }
            other => Failure::Data(other.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn data_err(context: impl std::fmt::Display) -> impl FnOnce(&dyn std::fmt::Display) -> Failure {
    move |e| Failure::Data(format!("{context}: {e}"))
}

fn load_cache(spec: Option<&str>) -> Result<Option<CacheConfig>, Failure> {
    match spec {
        None => Ok(None),
        Some(BUILTIN_CACHE) => Ok(Some(CacheConfig::e5_2680v2_core())),
        Some(path) => CacheConfig::from_file(Path::new(path)).map(Some).map_err(|e| Failure::Data(e.to_string())),
    }
}

fn bench_config(n: usize, run: &RunArgs, cache: &Option<CacheConfig>) -> BenchConfig {
    let mut cfg = BenchConfig::new(n, run.alpha);
    cfg.label = run.label.clone().unwrap_or_else(|| format!("cg1-alpha{}", run.alpha));
    cfg.tol = run.tol;
    cfg.max_iterations = run.max_iterations;
    cfg.workers = run.workers;
    cfg.cache_model = cache.clone();
    cfg
}

fn open_output(path: &Path, overwrite: bool) -> Result<File, Failure> {
    let mut opts = OpenOptions::new();
    opts.create(true);
    if overwrite {
        opts.write(true).truncate(true);
    } else {
        opts.append(true);
    }
    opts.open(path).map_err(|e| data_err(path.display())(&e))
}

fn append(file: &mut File, path: &Path, record: &RunRecord) -> Outcome {
    write_records(&mut *file, std::slice::from_ref(record), Format::JsonLines)
        .map_err(|e| data_err(path.display())(&e))
}

fn summary(r: &RunRecord) -> String {
    format!(
        "{}: dofs={} iterations={} time={:.6}s flops={} l2_error={:.4e}",
        r.label,
        r.dofs,
        r.linear_iterations.unwrap_or(0),
        r.wall_time,
        r.flops,
        r.l2_error.unwrap_or(f64::NAN)
    )
}

fn run_sizes(sizes: &[usize], run: &RunArgs) -> Outcome {
    let cache = load_cache(run.cache.as_deref())?;
    let configs: Vec<BenchConfig> = sizes.iter().map(|&n| bench_config(n, run, &cache)).collect();
    // reject bad flags before touching the output file
    for cfg in &configs {
        cfg.validate()?;
    }
    let mut file = open_output(&run.out, run.overwrite)?;
    for cfg in &configs {
        let record = run_benchmark(cfg)?;
        append(&mut file, &run.out, &record)?;
        println!("{}", summary(&record));
    }
    Ok(())
}

fn sweep(args: &SweepArgs) -> Outcome {
    if args.n.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Failure::Usage("--n sizes must be strictly increasing".into()));
    }
    run_sizes(&args.n, &args.run)
}

fn load(input: &InputArgs) -> Result<Vec<RunRecord>, Failure> {
    let path = &input.input;
    let file = File::open(path).map_err(|e| data_err(path.display())(&e))?;
    let format = input.format.unwrap_or_else(|| Format::from_path(path));
    let mode = if input.lenient { ParseMode::Lenient } else { ParseMode::Strict };
    let doc = parse_records(io::BufReader::new(file), format, mode).map_err(|e| data_err(path.display())(&e))?;
    for w in &doc.warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    if doc.records.is_empty() {
        return Err(Failure::Data(format!("{}: no records", path.display())));
    }
    Ok(doc.records)
}

fn build(input: &InputArgs) -> Result<SpectrumReport, Failure> {
    let records = load(input)?;
    build_spectrum_report_with(&records, input.group_by, input.flat_band)
        .map_err(|e| data_err(input.input.display())(&e))
}

fn analyze(args: &AnalyzeArgs) -> Outcome {
    let report = build(&args.input)?;
    let format = if args.csv { TableFormat::Csv } else { TableFormat::Text };
    let table = render_table(&report, format).map_err(|e| Failure::Data(e.to_string()))?;
    let mut out = io::stdout().lock();
    let mut lines = table;
    for s in &report.series {
        let label = s.series.label();
        if let Some(class) = s.classification {
            // classification succeeded, so the half slopes exist
            let (lower, upper) = half_series_slopes(&s.series).map_err(|e| Failure::Data(e.to_string()))?;
            lines.push_str(&format!(
                "{label}: static scaling {class} (lower-half slope {lower:.3}, upper-half slope {upper:.3})\n"
            ));
        }
        let errors: Vec<(f64, f64)> =
            s.series.points().iter().filter_map(|p| Some((p.record.h_size?, p.record.l2_error?))).collect();
        if errors.len() >= 2 {
            if let Ok(slope) = convergence_slope(&errors) {
                lines.push_str(&format!("{label}: order ≈ {} ({} points)\n", display_slope(slope), errors.len()));
            }
        }
    }
    out.write_all(lines.as_bytes()).map_err(|e| Failure::Data(e.to_string()))
}

fn report(args: &ReportArgs) -> Outcome {
    let report = build(&args.input)?;
    let options = SvgOptions { width: args.width, height: args.height, iterations_linear_y: args.linear_y };
    let svg = render_svg(&report, args.panel, &options).map_err(|e| Failure::Data(e.to_string()))?;
    let file = File::create(&args.svg).map_err(|e| data_err(args.svg.display())(&e))?;
    let mut w = BufWriter::new(file);
    w.write_all(svg.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| data_err(args.svg.display())(&e))?;
    println!("wrote {} panel to {}", args.panel, args.svg.display());
    Ok(())
}

fn triad(args: &TriadArgs) -> Outcome {
    let r = stream_triad(args.length, args.workers).map_err(|e| match e {
        perf_spectrum::workloads::TriadError::EmptyLength | perf_spectrum::workloads::TriadError::Workers => {
            Failure::Usage(e.to_string())
        }
        other => Failure::Data(other.to_string()),
    })?;
    println!(
        "triad: length={} workers={} best_time={:.6e}s bandwidth={:.3} GB/s",
        r.length, r.workers, r.best_time, r.bandwidth_gbs
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            let rendered = e.to_string();
            let line = rendered.lines().next().unwrap_or("usage error");
            eprintln!("{line}");
            return ExitCode::from(1);
        }
    };
    let result = match &cli.command {
        Command::Bench(a) => run_sizes(&[a.n], &a.run),
        Command::Sweep(a) => sweep(a),
        Command::Analyze(a) => analyze(a),
        Command::Report(a) => report(a),
        Command::Triad(a) => triad(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
