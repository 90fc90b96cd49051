//! Benchmark sweeps comparing the batch and streaming fits on planted data:
//! error against core size, error against factor density, and cumulative
//! fitting time as slots arrive.

use std::fmt;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use crate::batch::{fit_batch, fit_best_of, FitConfig, Ranks};
use crate::error::{Error, Result};
use crate::incremental::{run_stream, StreamConfig};
use crate::svg::{line_chart, Axes, Series};
use crate::synth::{generate_planted, Drift, PlantedSpec};
use crate::tensor::{BoolTensor3, Dims};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Batch,
    Incremental,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Batch => "batch",
            Method::Incremental => "incremental",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchKind {
    CoreSize,
    Density,
    Time,
}

impl fmt::Display for BenchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BenchKind::CoreSize => "core-size",
            BenchKind::Density => "density",
            BenchKind::Time => "time",
        })
    }
}

/// One measurement. `index` is the sweep position, or the 0-based slot for
/// the time bench.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub bench: BenchKind,
    pub method: Method,
    pub dims: Dims,
    pub ranks: Ranks,
    pub density: f64,
    pub index: usize,
    pub seed: u64,
    pub mismatches: usize,
    pub relative: f64,
    pub wall_millis: f64,
}

/// Settings shared by every sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    pub dims: Dims,
    pub seeds: Vec<u64>,
    pub eps: f64,
    /// Batch restarts per point; the streaming fit uses the same count for
    /// its bootstrap.
    pub restarts: usize,
    /// Planted density of every factor and the core, except in the density
    /// sweep, where factors take the swept value and the core `core_density`.
    pub density: f64,
    pub core_density: f64,
    /// Runs per time measurement; each slot reports the median.
    pub repeats: usize,
}

impl BenchOptions {
    pub fn new(dims: Dims) -> Self {
        BenchOptions {
            dims,
            seeds: vec![0, 1, 2, 3, 4],
            eps: 0.05,
            restarts: 5,
            density: 0.3,
            core_density: 0.1,
            repeats: 1,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("no seeds given".into()));
        }
        if self.restarts == 0 || self.repeats == 0 {
            return Err(Error::Config("restarts and repeats must be >= 1".into()));
        }
        Ok(())
    }

    fn stream_config(&self, ranks: Ranks, seed: u64, window: usize) -> StreamConfig {
        StreamConfig {
            window_w: window,
            error_threshold: self.eps,
            seed,
            bootstrap_restarts: self.restarts,
            ..StreamConfig::new(ranks)
        }
    }

    fn fit_config(&self, ranks: Ranks, seed: u64) -> FitConfig {
        FitConfig {
            error_threshold: self.eps,
            seed,
            ..FitConfig::new(ranks)
        }
    }
}

/// Worker count from `BOOLCD_THREADS`, or `None` to let the pool decide.
pub fn thread_count() -> Result<Option<usize>> {
    match std::env::var("BOOLCD_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Error::Config(format!(
                "BOOLCD_THREADS={v:?} is not a positive integer"
            ))),
        },
    }
}

pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count()? {
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Fits both methods to one tensor; the streaming fit sees every slot in one window.
fn fit_both(
    x: &BoolTensor3,
    ranks: Ranks,
    seed: u64,
    opts: &BenchOptions,
) -> Result<[(usize, f64, f64); 2]> {
    let start = Instant::now();
    let (_, trace) = fit_best_of(x, &opts.fit_config(ranks, seed), opts.restarts)?;
    let batch_ms = ms(start);
    let last = trace.last().expect("at least one sweep");
    let batch = (last.mismatches, last.relative, batch_ms);
    let start = Instant::now();
    let (_, trace) = run_stream(&x.slices(), &opts.stream_config(ranks, seed, x.dims().t))?;
    let inc_ms = ms(start);
    let last = trace.last().expect("bootstrap record");
    Ok([batch, (last.mismatches, last.relative, inc_ms)])
}

fn rows_for(
    bench: BenchKind,
    point: (Dims, Ranks, f64, usize, u64),
    results: [(usize, f64, f64); 2],
) -> Vec<BenchRow> {
    let (dims, ranks, density, index, seed) = point;
    [Method::Batch, Method::Incremental]
        .into_iter()
        .zip(results)
        .map(|(method, (mismatches, relative, wall_millis))| BenchRow {
            bench,
            method,
            dims,
            ranks,
            density,
            index,
            seed,
            mismatches,
            relative,
            wall_millis,
        })
        .collect()
}

fn run_points<P: Sync>(
    pool: &rayon::ThreadPool,
    points: &[P],
    job: impl Fn(&P) -> Result<Vec<BenchRow>> + Sync + Send,
) -> Result<Vec<BenchRow>> {
    let per_point: Vec<Result<Vec<BenchRow>>> =
        pool.install(|| points.par_iter().map(job).collect());
    let mut rows = Vec::new();
    for r in per_point {
        rows.extend(r?);
    }
    Ok(rows)
}

/// Error of both methods as the fitted core size varies, on tensors planted
/// with `truth` ranks.
pub fn core_size_sweep(
    opts: &BenchOptions,
    truth: Ranks,
    ranks_list: &[Ranks],
    pool: &rayon::ThreadPool,
) -> Result<Vec<BenchRow>> {
    opts.validate()?;
    if ranks_list.is_empty() {
        return Err(Error::Config("empty ranks list".into()));
    }
    for r in ranks_list {
        r.validate(opts.dims)?;
    }
    let points: Vec<(usize, Ranks, u64)> = ranks_list
        .iter()
        .enumerate()
        .flat_map(|(n, &r)| opts.seeds.iter().map(move |&s| (n, r, s)))
        .collect();
    run_points(pool, &points, |&(index, ranks, seed)| {
        let spec = PlantedSpec::uniform(opts.dims, truth, opts.density, seed);
        let x = generate_planted(&spec)?.tensor();
        let res = fit_both(&x, ranks, seed, opts)?;
        Ok(rows_for(
            BenchKind::CoreSize,
            (opts.dims, ranks, opts.density, index, seed),
            res,
        ))
    })
}

/// Error of both methods at `ranks` as the factor density of tensors planted
/// with `truth` ranks varies.
pub fn density_sweep(
    opts: &BenchOptions,
    truth: Ranks,
    ranks: Ranks,
    densities: &[f64],
    pool: &rayon::ThreadPool,
) -> Result<Vec<BenchRow>> {
    opts.validate()?;
    if densities.is_empty() {
        return Err(Error::Config("empty density list".into()));
    }
    ranks.validate(opts.dims)?;
    truth.validate(opts.dims)?;
    let points: Vec<(usize, f64, u64)> = densities
        .iter()
        .enumerate()
        .flat_map(|(n, &d)| opts.seeds.iter().map(move |&s| (n, d, s)))
        .collect();
    run_points(pool, &points, |&(index, density, seed)| {
        let spec = PlantedSpec {
            density_core: opts.core_density,
            ..PlantedSpec::uniform(opts.dims, truth, density, seed)
        };
        let x = generate_planted(&spec)?.tensor();
        let res = fit_both(&x, ranks, seed, opts)?;
        Ok(rows_for(
            BenchKind::Density,
            (opts.dims, ranks, density, index, seed),
            res,
        ))
    })
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Per-slot fitting time on a stationary planted stream of `opts.dims.t`
/// slots. The streaming fit bootstraps at slot 1 and ingests each later
/// slot; the batch baseline refits from scratch on all slots so far. Runs
/// sequentially so timings do not compete for cores.
pub fn time_sweep(opts: &BenchOptions, ranks: Ranks, window: usize) -> Result<Vec<BenchRow>> {
    opts.validate()?;
    let dims = opts.dims;
    if dims.t < 2 {
        return Err(Error::Config("time bench needs at least 2 slots".into()));
    }
    let mut rows = Vec::new();
    for &seed in &opts.seeds {
        let spec = PlantedSpec {
            drift: Drift::Stationary,
            ..PlantedSpec::uniform(dims, ranks, opts.density, seed)
        };
        let slots = generate_planted(&spec)?.slots;
        let cfg = opts.stream_config(ranks, seed, window);
        let mut inc_ms = vec![Vec::new(); dims.t];
        let mut inc_err = vec![(0, 0.0); dims.t];
        for _ in 0..opts.repeats {
            let (_, trace) = run_stream(&slots, &cfg)?;
            for r in &trace.records {
                inc_ms[r.index].push(r.millis);
                inc_err[r.index] = (r.mismatches, r.relative);
            }
        }
        let mut bat_ms = vec![Vec::new(); dims.t];
        let mut bat_err = vec![(0, 0.0); dims.t];
        for t in 1..dims.t {
            let x = BoolTensor3::from_slices(&slots[..=t])?;
            let fit = opts.fit_config(
                Ranks {
                    r3: ranks.r3.min(t + 1),
                    ..ranks
                },
                seed,
            );
            for _ in 0..opts.repeats {
                let start = Instant::now();
                let (_, trace) = fit_batch(&x, &fit)?;
                bat_ms[t].push(ms(start));
                let last = trace.last().expect("at least one sweep");
                bat_err[t] = (last.mismatches, last.relative);
            }
        }
        for t in 1..dims.t {
            let dims_t = Dims::new(dims.o, dims.f, t + 1);
            let res = [
                (bat_err[t].0, bat_err[t].1, median(&mut bat_ms[t])),
                (inc_err[t].0, inc_err[t].1, median(&mut inc_ms[t])),
            ];
            rows.extend(rows_for(
                BenchKind::Time,
                (dims_t, ranks, opts.density, t, seed),
                res,
            ));
        }
    }
    Ok(rows)
}

pub const BENCH_HEADER: &str =
    "bench,method,o,f,t,r1,r2,r3,density,index,seed,mismatches,relative,wall_millis";

pub const MEAN_HEADER: &str =
    "bench,method,o,f,t,r1,r2,r3,density,index,seeds,mean_mismatches,mean_relative,mean_wall_millis";

/// Header comment for `bench.csv`, describing how each sweep was measured.
pub fn describe(kind: BenchKind) -> &'static str {
    match kind {
        BenchKind::CoreSize => {
            "# core-size: planted tensor per seed, all densities equal; batch = best-of-restarts fit, incremental = stream with window spanning all slots"
        }
        BenchKind::Density => {
            "# density: planted factor density swept, core density fixed; batch = best-of-restarts fit, incremental = stream with window spanning all slots"
        }
        BenchKind::Time => {
            "# time: stationary planted stream; incremental = bootstrap at slot 1 then one ingest per slot; batch = refit from scratch on slots 0..=index at every slot"
        }
    }
}

pub fn bench_csv(kind: BenchKind, rows: &[BenchRow]) -> String {
    let mut out = format!("{}\n{BENCH_HEADER}\n", describe(kind));
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{:.4}",
            r.bench,
            r.method,
            r.dims.o,
            r.dims.f,
            r.dims.t,
            r.ranks.r1,
            r.ranks.r2,
            r.ranks.r3,
            r.density,
            r.index,
            r.seed,
            r.mismatches,
            r.relative,
            r.wall_millis
        )
        .expect("writing to a String");
    }
    out
}

/// Seed-averaged view of a sweep: one entry per (method, index), in order.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanRow {
    pub first: BenchRow,
    pub seeds: usize,
    pub mismatches: f64,
    pub relative: f64,
    pub wall_millis: f64,
}

pub fn means(rows: &[BenchRow]) -> Vec<MeanRow> {
    let mut keys: Vec<(Method, usize)> = rows.iter().map(|r| (r.method, r.index)).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(m, i)| {
            let group: Vec<&BenchRow> = rows
                .iter()
                .filter(|r| r.method == m && r.index == i)
                .collect();
            let n = group.len() as f64;
            MeanRow {
                first: group[0].clone(),
                seeds: group.len(),
                mismatches: group.iter().map(|r| r.mismatches as f64).sum::<f64>() / n,
                relative: group.iter().map(|r| r.relative).sum::<f64>() / n,
                wall_millis: group.iter().map(|r| r.wall_millis).sum::<f64>() / n,
            }
        })
        .collect()
}

pub fn means_csv(rows: &[MeanRow]) -> String {
    let mut out = format!("{MEAN_HEADER}\n");
    for m in rows {
        let r = &m.first;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{:.4}",
            r.bench,
            r.method,
            r.dims.o,
            r.dims.f,
            r.dims.t,
            r.ranks.r1,
            r.ranks.r2,
            r.ranks.r3,
            r.density,
            r.index,
            m.seeds,
            m.mismatches,
            m.relative,
            m.wall_millis
        )
        .expect("writing to a String");
    }
    out
}

/// Running sum of mean per-slot time, per method.
pub fn cumulative_millis(means: &[MeanRow], method: Method) -> Vec<(usize, f64)> {
    let mut acc = 0.0;
    means
        .iter()
        .filter(|m| m.first.method == method)
        .map(|m| {
            acc += m.wall_millis;
            (m.first.index, acc)
        })
        .collect()
}

/// The figure for a sweep: error curves, or cumulative time for the time bench.
pub fn bench_svg(kind: BenchKind, rows: &[BenchRow]) -> Result<String> {
    let mean = means(rows);
    let series: Vec<Series> = [Method::Batch, Method::Incremental]
        .into_iter()
        .map(|method| {
            let points = match kind {
                BenchKind::Time => cumulative_millis(&mean, method)
                    .into_iter()
                    .map(|(i, v)| (i as f64, v))
                    .collect(),
                _ => mean
                    .iter()
                    .filter(|m| m.first.method == method)
                    .map(|m| {
                        let x = match kind {
                            BenchKind::CoreSize => m.first.ranks.cells() as f64,
                            _ => m.first.density,
                        };
                        (x, m.relative)
                    })
                    .collect(),
            };
            Series {
                name: method.to_string(),
                points,
            }
        })
        .collect();
    let axes = match kind {
        BenchKind::CoreSize => Axes::new(
            "Error by core size",
            "core cells R1*R2*R3",
            "mean relative error",
        ),
        BenchKind::Density => Axes::new(
            "Error by factor density",
            "factor density",
            "mean relative error",
        ),
        BenchKind::Time => Axes::new("Cumulative fitting time", "slot", "cumulative ms"),
    };
    line_chart(&axes, &series)
}
