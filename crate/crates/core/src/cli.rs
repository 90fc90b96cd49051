//! The `boolcd` command line: `factorize`, `stream`, `report` and `bench`.
//!
//! Exit status is 0 on success, 1 on I/O or data errors and 2 on usage or
//! configuration errors.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::batch::{fit_best_of, ErrorKind, FitConfig, FitTrace, Ranks};
use crate::bench::{
    bench_csv, bench_svg, core_size_sweep, density_sweep, means, means_csv, time_sweep,
    worker_pool, BenchKind, BenchOptions, BenchRow,
};
use crate::error::{Error, Result};
use crate::incremental::{run_stream, StreamConfig, TimeWeight};
use crate::io::{
    load_model, load_slot_csv, load_tensor_btt, save_model, save_real_csv, slot_files, write,
};
use crate::reports::{
    class_proportions, class_proportions_csv, feature_variance_csv, gain_loss, gain_loss_csv,
    model_feature_variance, FrameSpec,
};
use crate::svg::{diverging_bar_chart, line_chart, stacked_bar_chart, Axes, Series};
use crate::tensor::{BoolMatrix, Dims};

#[derive(Debug, Parser)]
#[command(
    name = "boolcd",
    version,
    about = "Boolean Tucker factorization of object x feature x time tensors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a batch model to a .btt tensor.
    Factorize(FactorizeArgs),
    /// Fit a directory of slot CSV files one slot at a time.
    Stream(StreamArgs),
    /// Change reports from a saved model.
    Report(ReportArgs),
    /// Benchmark sweeps comparing batch and streaming fits.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ErrorArg {
    Rel,
    Abs,
}

impl From<ErrorArg> for ErrorKind {
    fn from(e: ErrorArg) -> Self {
        match e {
            ErrorArg::Rel => ErrorKind::Relative,
            ErrorArg::Abs => ErrorKind::Absolute,
        }
    }
}

fn parse_triple(s: &str) -> std::result::Result<(usize, usize, usize), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b, c] => {
            let p = |v: &str| {
                v.parse::<usize>()
                    .map_err(|_| format!("{v:?} is not a count"))
            };
            Ok((p(a)?, p(b)?, p(c)?))
        }
        _ => Err(format!("expected three comma-separated counts, got {s:?}")),
    }
}

fn parse_ranks(s: &str) -> std::result::Result<Ranks, String> {
    parse_triple(s).map(|(a, b, c)| Ranks::new(a, b, c))
}

fn parse_dims(s: &str) -> std::result::Result<Dims, String> {
    parse_triple(s).map(|(a, b, c)| Dims::new(a, b, c))
}

fn parse_weight(s: &str) -> std::result::Result<TimeWeight, String> {
    let bad = || format!("expected const:<w> or seasonal:<period>:<w1,...>, got {s:?}");
    let num = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|_| format!("{v:?} is not a number"))
    };
    let mut parts = s.splitn(3, ':');
    match (parts.next(), parts.next(), parts.next()) {
        (Some("const"), Some(w), None) => Ok(TimeWeight::Constant(num(w)?)),
        (Some("seasonal"), Some(p), Some(ws)) => {
            let period = p.trim().parse::<usize>().map_err(|_| bad())?;
            let weights = ws
                .split(',')
                .map(num)
                .collect::<std::result::Result<Vec<_>, _>>()?;
            Ok(TimeWeight::SeasonalMask { period, weights })
        }
        _ => Err(bad()),
    }
}

#[derive(Debug, Args)]
struct FactorizeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_parser = parse_ranks)]
    ranks: Ranks,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    #[arg(long, default_value_t = 100)]
    max_sweeps: usize,
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "rel")]
    error: ErrorArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct StreamArgs {
    /// Directory of slot CSV files, taken in lexicographic order.
    #[arg(long)]
    slots: PathBuf,
    #[arg(long, value_parser = parse_ranks)]
    ranks: Ranks,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    #[arg(long, default_value_t = 12)]
    window: usize,
    /// Exponential decay factor of the covariance accumulators.
    #[arg(long, conflicts_with = "weight")]
    decay: Option<f64>,
    /// const:<w> or seasonal:<period>:<w1,...>
    #[arg(long, value_parser = parse_weight)]
    weight: Option<TimeWeight>,
    #[arg(long, default_value_t = 5)]
    inner_sweeps: usize,
    #[arg(long, default_value_t = 5)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long)]
    model: PathBuf,
    /// Slots per frame.
    #[arg(long)]
    frames: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(subcommand)]
    sweep: Sweep,
}

#[derive(Debug, Args)]
struct SharedBench {
    #[arg(long, value_parser = parse_dims)]
    dims: Option<Dims>,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    #[arg(long, default_value_t = 5)]
    restarts: usize,
    /// Planted density of factors and core.
    #[arg(long, default_value_t = 0.3)]
    density: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Sweep {
    /// Error against fitted core size.
    CoreSize {
        /// Fitted ranks per point, e.g. `1,1,1 2,2,2 3,3,3`.
        #[arg(long, num_args = 1.., value_parser = parse_ranks)]
        ranks_list: Vec<Ranks>,
        #[arg(long, value_parser = parse_ranks, default_value = "2,2,2")]
        truth: Ranks,
        #[command(flatten)]
        shared: SharedBench,
    },
    /// Error against planted factor density.
    Density {
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        densities: Vec<f64>,
        #[arg(long, value_parser = parse_ranks, default_value = "3,3,3")]
        ranks: Ranks,
        #[arg(long, default_value_t = 0.1)]
        core_density: f64,
        #[command(flatten)]
        shared: SharedBench,
    },
    /// Cumulative fitting time as slots arrive.
    Time {
        #[arg(long, default_value_t = 30)]
        slots_count: usize,
        #[arg(long, value_parser = parse_ranks, default_value = "2,2,2")]
        ranks: Ranks,
        #[arg(long, default_value_t = 12)]
        window: usize,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        #[command(flatten)]
        shared: SharedBench,
    },
}

/// Parses `args` (program name first), runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Factorize(a) => factorize(a),
        Command::Stream(a) => stream(a),
        Command::Report(a) => report(a),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("boolcd: {e}");
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn trace_csv(first: &str, trace: &FitTrace) -> String {
    let mut out = format!("{first},mismatches,relative,millis\n");
    for r in &trace.records {
        writeln!(
            out,
            "{},{},{},{:.3}",
            r.index, r.mismatches, r.relative, r.millis
        )
        .expect("writing to a String");
    }
    out
}

fn say(line: String) {
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "{line}");
}

fn factorize(a: FactorizeArgs) -> Result<()> {
    let config = FitConfig {
        error_threshold: a.eps,
        max_sweeps: a.max_sweeps,
        seed: a.seed,
        error_kind: a.error.into(),
        ..FitConfig::new(a.ranks)
    };
    if a.restarts == 0 {
        return Err(Error::Config("restarts must be >= 1".into()));
    }
    let x = load_tensor_btt(&a.input)?;
    let (model, trace) = fit_best_of(&x, &config, a.restarts)?;
    save_model(&model, &a.out)?;
    write(&a.out.join("trace.csv"), &trace_csv("sweep", &trace))?;
    let last = trace.last().expect("at least one sweep");
    say(format!(
        "error={} rel={} sweeps={} status={}",
        last.mismatches,
        last.relative,
        trace.records.len(),
        trace.status
    ));
    Ok(())
}

fn stream(a: StreamArgs) -> Result<()> {
    let time_weight = match (a.decay, a.weight) {
        (Some(l), _) => TimeWeight::ExponentialDecay(l),
        (None, Some(w)) => w,
        (None, None) => TimeWeight::default(),
    };
    let config = StreamConfig {
        window_w: a.window,
        time_weight,
        inner_sweeps: a.inner_sweeps,
        error_threshold: a.eps,
        seed: a.seed,
        bootstrap_restarts: a.restarts,
        ..StreamConfig::new(a.ranks)
    };
    let files = slot_files(&a.slots)?;
    if files.len() < 2 {
        return Err(Error::Input(format!(
            "{}: a stream needs at least 2 slot files, found {}",
            a.slots.display(),
            files.len()
        )));
    }
    let mut slots: Vec<BoolMatrix> = Vec::with_capacity(files.len());
    for path in &files {
        let m = load_slot_csv(path)?;
        if let Some(first) = slots.first() {
            if first.shape() != m.shape() {
                return Err(Error::Data(format!(
                    "{}: slot is {}x{}, earlier slots are {}x{}",
                    path.display(),
                    m.rows(),
                    m.cols(),
                    first.rows(),
                    first.cols()
                )));
            }
        }
        slots.push(m);
    }
    let (state, trace) = run_stream(&slots, &config)?;
    save_model(&state.model, &a.out)?;
    save_real_csv(&state.cov.ca, a.out.join("cov_CA.csv"))?;
    save_real_csv(&state.cov.cb, a.out.join("cov_CB.csv"))?;
    save_real_csv(&state.cov.cc, a.out.join("cov_CC.csv"))?;
    write(&a.out.join("trace.csv"), &trace_csv("slot", &trace))?;
    let last = trace.last().expect("bootstrap record");
    say(format!(
        "slots={} error={} rel={} status={}",
        slots.len(),
        last.mismatches,
        last.relative,
        trace.status
    ));
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let t = model.dims().t;
    if a.frames == 0 || a.frames > t {
        return Err(Error::Config(format!(
            "--frames {} must be between 1 and the model's {t} slots",
            a.frames
        )));
    }
    let frames = FrameSpec::new(a.frames);
    create_dir(&a.out)?;

    let fv = model_feature_variance(&model, &frames)?;
    write(
        &a.out.join("feature_variance.csv"),
        &feature_variance_csv(&fv),
    )?;
    let (o, f, n) = fv.values.dim();
    let series: Vec<Series> = (0..o)
        .map(|i| Series {
            name: format!("class {i}"),
            points: (0..n)
                .map(|k| {
                    let mean = (0..f).map(|j| fv.values[[i, j, k]]).sum::<f64>() / f.max(1) as f64;
                    (k as f64, mean)
                })
                .collect(),
        })
        .collect();
    let axes = Axes::new(
        "Feature variance per class",
        "frame",
        "mean feature variance",
    );
    write(
        &a.out.join("feature_variance.svg"),
        &line_chart(&axes, &series)?,
    )?;

    let props = class_proportions(&model, &frames)?;
    write(
        &a.out.join("proportions.csv"),
        &class_proportions_csv(&props),
    )?;
    let (classes, nframes) = props.proportions.dim();
    let labels: Vec<String> = (0..nframes).map(|k| frames.label(k)).collect();
    let names: Vec<String> = (0..classes).map(|c| format!("class {c}")).collect();
    let values: Vec<Vec<f64>> = (0..classes)
        .map(|c| (0..nframes).map(|k| props.proportions[[c, k]]).collect())
        .collect();
    let axes = Axes::new("Class proportions per frame", "frame", "proportion");
    write(
        &a.out.join("proportions.svg"),
        &stacked_bar_chart(&axes, &labels, &names, &values)?,
    )?;

    if nframes < 2 {
        eprintln!("boolcd: one frame only; gain/loss report skipped");
        return Ok(());
    }
    let gl = gain_loss(&props)?;
    write(&a.out.join("gain_loss.csv"), &gain_loss_csv(&gl))?;
    let labels: Vec<String> = gl
        .rows
        .iter()
        .map(|g| {
            if g.new_class {
                format!("class {} (new)", g.class)
            } else {
                format!("class {}", g.class)
            }
        })
        .collect();
    let values: Vec<f64> = gl
        .rows
        .iter()
        .map(|g| g.gain_pct.unwrap_or(0.0) - g.loss_pct)
        .collect();
    let axes = Axes::new("Gain and loss, first to last frame", "class", "change %");
    write(
        &a.out.join("gain_loss.svg"),
        &diverging_bar_chart(&axes, &labels, &values)?,
    )?;
    Ok(())
}

fn options(shared: &SharedBench, dims: Dims) -> BenchOptions {
    BenchOptions {
        seeds: shared.seeds.clone(),
        eps: shared.eps,
        restarts: shared.restarts,
        density: shared.density,
        ..BenchOptions::new(dims)
    }
}

fn write_bench(out: &Path, kind: BenchKind, rows: &[BenchRow]) -> Result<()> {
    create_dir(out)?;
    write(&out.join("bench.csv"), &bench_csv(kind, rows))?;
    let mean = means(rows);
    write(&out.join("bench_mean.csv"), &means_csv(&mean))?;
    let name = match kind {
        BenchKind::CoreSize => "core_size.svg",
        BenchKind::Density => "density.svg",
        BenchKind::Time => "time.svg",
    };
    write(&out.join(name), &bench_svg(kind, rows)?)?;
    for m in &mean {
        say(format!(
            "{} {} index={} rel={:.4} ms={:.3}",
            kind, m.first.method, m.first.index, m.relative, m.wall_millis
        ));
    }
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    match a.sweep {
        Sweep::CoreSize {
            ranks_list,
            truth,
            shared,
        } => {
            let opts = options(&shared, shared.dims.unwrap_or(Dims::new(20, 10, 15)));
            let rows = core_size_sweep(&opts, truth, &ranks_list, &worker_pool()?)?;
            write_bench(&shared.out, BenchKind::CoreSize, &rows)
        }
        Sweep::Density {
            densities,
            ranks,
            core_density,
            shared,
        } => {
            let opts = BenchOptions {
                core_density,
                ..options(&shared, shared.dims.unwrap_or(Dims::new(30, 15, 10)))
            };
            let rows = density_sweep(&opts, ranks, ranks, &densities, &worker_pool()?)?;
            write_bench(&shared.out, BenchKind::Density, &rows)
        }
        Sweep::Time {
            slots_count,
            ranks,
            window,
            repeats,
            shared,
        } => {
            let dims = shared.dims.unwrap_or(Dims::new(50, 10, slots_count));
            let opts = BenchOptions {
                repeats,
                ..options(&shared, Dims::new(dims.o, dims.f, slots_count))
            };
            let rows = time_sweep(&opts, ranks, window)?;
            write_bench(&shared.out, BenchKind::Time, &rows)
        }
    }
}
