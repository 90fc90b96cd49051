//! Batch Boolean Tucker fitting: alternating greedy factor updates and greedy
//! core updates on the full tensor.

use std::fmt;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{restart_seed, SeededRng, Stream};
use crate::tensor::{
    density, hamming_error, mode_basis, tucker_reconstruct, unfold, BoolMatrix, BoolTensor3, Dims,
    ErrorStat, Mode,
};

/// Core tensor size `(R1, R2, R3)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ranks {
    pub r1: usize,
    pub r2: usize,
    pub r3: usize,
}

impl Ranks {
    pub const fn new(r1: usize, r2: usize, r3: usize) -> Self {
        Ranks { r1, r2, r3 }
    }

    pub fn as_dims(&self) -> Dims {
        Dims::new(self.r1, self.r2, self.r3)
    }

    pub fn cells(&self) -> usize {
        self.r1 * self.r2 * self.r3
    }

    /// Every rank is at least one and at most the matching tensor extent.
    pub fn validate(&self, dims: Dims) -> Result<()> {
        if self.r1 == 0 || self.r2 == 0 || self.r3 == 0 {
            return Err(Error::Config(format!("ranks {self} must all be >= 1")));
        }
        if self.r1 > dims.o || self.r2 > dims.f || self.r3 > dims.t {
            return Err(Error::Config(format!(
                "ranks {self} exceed tensor dims {dims}"
            )));
        }
        Ok(())
    }

    /// Component-wise `self >= other`.
    pub fn dominates(&self, other: &Ranks) -> bool {
        self.r1 >= other.r1 && self.r2 >= other.r2 && self.r3 >= other.r3
    }
}

impl fmt::Display for Ranks {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.r1, self.r2, self.r3)
    }
}

/// Binary core `G` (R1 x R2 x R3) with binary factors `A` (O x R1), `B` (F x R2), `C` (T x R3).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TuckerModel {
    pub core: BoolTensor3,
    pub a: BoolMatrix,
    pub b: BoolMatrix,
    pub c: BoolMatrix,
}

impl TuckerModel {
    pub fn new(core: BoolTensor3, a: BoolMatrix, b: BoolMatrix, c: BoolMatrix) -> Result<Self> {
        let m = TuckerModel { core, a, b, c };
        m.check()?;
        Ok(m)
    }

    fn check(&self) -> Result<()> {
        let g = self.core.dims();
        if self.a.cols() != g.o || self.b.cols() != g.f || self.c.cols() != g.t {
            return Err(Error::shape(
                "TuckerModel",
                format!("core {g}"),
                format!(
                    "factors {}x{}, {}x{}, {}x{}",
                    self.a.rows(),
                    self.a.cols(),
                    self.b.rows(),
                    self.b.cols(),
                    self.c.rows(),
                    self.c.cols()
                ),
            ));
        }
        Ok(())
    }

    pub fn ranks(&self) -> Ranks {
        let g = self.core.dims();
        Ranks::new(g.o, g.f, g.t)
    }

    /// Dimensions of the tensor the model reconstructs.
    pub fn dims(&self) -> Dims {
        Dims::new(self.a.rows(), self.b.rows(), self.c.rows())
    }

    pub fn factor(&self, mode: Mode) -> &BoolMatrix {
        match mode {
            Mode::Mode1 => &self.a,
            Mode::Mode2 => &self.b,
            Mode::Mode3 => &self.c,
        }
    }

    fn factor_mut(&mut self, mode: Mode) -> &mut BoolMatrix {
        match mode {
            Mode::Mode1 => &mut self.a,
            Mode::Mode2 => &mut self.b,
            Mode::Mode3 => &mut self.c,
        }
    }

    pub fn reconstruct(&self) -> BoolTensor3 {
        tucker_reconstruct(&self.core, &self.a, &self.b, &self.c)
            .expect("model shapes are checked on construction")
    }

    pub(crate) fn check_against(&self, dims: Dims) -> Result<()> {
        self.check()?;
        if self.dims() != dims {
            return Err(Error::shape("model vs tensor", self.dims(), dims));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Threshold compared against the raw mismatch count.
    Absolute,
    /// Threshold compared against mismatches / ones(X).
    Relative,
}

impl ErrorKind {
    pub fn meets(&self, err: &ErrorStat, threshold: f64) -> bool {
        match self {
            ErrorKind::Absolute => err.mismatches as f64 <= threshold,
            ErrorKind::Relative => err.relative <= threshold,
        }
    }
}

/// How `fit_batch` seeds the factors before the first sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitStrategy {
    /// i.i.d. Bernoulli(`init_density`) factors, see [`init_model`].
    Bernoulli,
    /// Bernoulli with density equal to the cube root of the tensor's density.
    DensityMatched,
    /// Factor columns copied from the fibers through randomly chosen 1-cells of
    /// the data; falls back to `Bernoulli` on an all-zero tensor.
    DataFibers,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub ranks: Ranks,
    pub error_threshold: f64,
    pub max_sweeps: usize,
    pub stall_sweeps: usize,
    pub seed: u64,
    pub init_density: f64,
    pub init: InitStrategy,
    pub error_kind: ErrorKind,
}

impl FitConfig {
    pub fn new(ranks: Ranks) -> Self {
        FitConfig {
            ranks,
            error_threshold: 0.05,
            max_sweeps: 100,
            stall_sweeps: 3,
            seed: 0,
            init_density: 0.5,
            init: InitStrategy::DataFibers,
            error_kind: ErrorKind::Relative,
        }
    }

    pub fn validate(&self, dims: Dims) -> Result<()> {
        self.ranks.validate(dims)?;
        self.validate_params()
    }

    pub(crate) fn validate_params(&self) -> Result<()> {
        if self.error_threshold.is_nan() || self.error_threshold < 0.0 {
            return Err(Error::Config(format!(
                "error threshold {} must be >= 0",
                self.error_threshold
            )));
        }
        if self.max_sweeps == 0 {
            return Err(Error::Config("max_sweeps must be >= 1".into()));
        }
        if !(self.init_density > 0.0 && self.init_density < 1.0) {
            return Err(Error::Config(format!(
                "init density {} must lie in (0, 1)",
                self.init_density
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    /// Sweep number (batch, 1-based) or slot index (stream, 0-based).
    pub index: usize,
    pub mismatches: usize,
    pub relative: f64,
    pub millis: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitStatus {
    Converged,
    Stalled,
    MaxSweeps,
}

impl fmt::Display for FitStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitStatus::Converged => "converged",
            FitStatus::Stalled => "stalled",
            FitStatus::MaxSweeps => "max-sweeps",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitTrace {
    pub records: Vec<SweepRecord>,
    pub status: FitStatus,
}

impl FitTrace {
    pub fn last(&self) -> Option<&SweepRecord> {
        self.records.last()
    }

    pub fn total_millis(&self) -> f64 {
        self.records.iter().map(|r| r.millis).sum()
    }

    /// Records with wall-clock zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> FitTrace {
        FitTrace {
            records: self
                .records
                .iter()
                .map(|r| SweepRecord { millis: 0.0, ..*r })
                .collect(),
            status: self.status,
        }
    }
}

/// Random binary factors and an all-zero core.
pub fn init_model(dims: Dims, config: &FitConfig) -> Result<TuckerModel> {
    config.validate(dims)?;
    Ok(random_model(
        dims,
        config.ranks,
        config.init_density,
        config.seed,
    ))
}

pub(crate) fn random_model(dims: Dims, ranks: Ranks, p: f64, seed: u64) -> TuckerModel {
    let draw = |rows: usize, cols: usize, stream: Stream| {
        let mut rng = SeededRng::new(seed, stream);
        BoolMatrix::from_fn(rows, cols, |_, _| rng.bernoulli(p))
    };
    TuckerModel {
        core: BoolTensor3::zeros(ranks.as_dims()),
        a: draw(dims.o, ranks.r1, Stream::FactorA),
        b: draw(dims.f, ranks.r2, Stream::FactorB),
        c: draw(dims.t, ranks.r3, Stream::FactorC),
    }
}

fn fiber_model(x: &BoolTensor3, ranks: Ranks, seed: u64) -> Option<TuckerModel> {
    let ones: Vec<(usize, usize, usize)> = x.iter_ones().collect();
    if ones.is_empty() {
        return None;
    }
    let dims = x.dims();
    let mut rng = SeededRng::new(seed, Stream::Core);
    let n = ranks.r1.max(ranks.r2).max(ranks.r3);
    // Each later seed cell is drawn from the 1-cells outside the blocks spanned
    // by the earlier seeds' fibers, when any remain.
    let mut blocks: Vec<(Vec<bool>, Vec<bool>, Vec<bool>)> = Vec::with_capacity(n);
    for _ in 0..n {
        let outside: Vec<_> = ones
            .iter()
            .copied()
            .filter(|&(i, j, k)| !blocks.iter().any(|(a, b, c)| a[i] && b[j] && c[k]))
            .collect();
        let pool = if outside.is_empty() { &ones } else { &outside };
        let (i, j, k) = pool[rng.below(pool.len())];
        blocks.push((
            (0..dims.o).map(|p| x.get(p, j, k)).collect(),
            (0..dims.f).map(|q| x.get(i, q, k)).collect(),
            (0..dims.t).map(|s| x.get(i, j, s)).collect(),
        ));
    }
    let a = BoolMatrix::from_fn(dims.o, ranks.r1, |i, r| blocks[r].0[i]);
    let b = BoolMatrix::from_fn(dims.f, ranks.r2, |j, r| blocks[r].1[j]);
    let c = BoolMatrix::from_fn(dims.t, ranks.r3, |k, r| blocks[r].2[k]);
    Some(TuckerModel {
        core: BoolTensor3::zeros(ranks.as_dims()),
        a,
        b,
        c,
    })
}

pub(crate) fn initial_model(x: &BoolTensor3, config: &FitConfig) -> TuckerModel {
    let dims = x.dims();
    match config.init {
        InitStrategy::Bernoulli => {
            random_model(dims, config.ranks, config.init_density, config.seed)
        }
        InitStrategy::DensityMatched => {
            let p = density(x).unwrap_or(0.0).cbrt().clamp(0.01, 0.99);
            random_model(dims, config.ranks, p, config.seed)
        }
        InitStrategy::DataFibers => fiber_model(x, config.ranks, config.seed)
            .unwrap_or_else(|| random_model(dims, config.ranks, config.init_density, config.seed)),
    }
}

// ---------------------------------------------------------------------------
// Factor updates

/// `popcount(target XOR OR_{r in sel} basis[r])`.
fn row_distance(target: &[u64], basis: &BoolMatrix, sel: &[bool], cover: &mut [u64]) -> usize {
    cover.fill(0);
    for (r, _) in sel.iter().enumerate().filter(|(_, &s)| s) {
        for (c, w) in cover.iter_mut().zip(basis.row_words(r)) {
            *c |= w;
        }
    }
    target
        .iter()
        .zip(cover.iter())
        .map(|(t, c)| (t ^ c).count_ones() as usize)
        .sum()
}

/// Single-bit flip descent in ascending component order, accepting strict
/// improvements only, until a full pass changes nothing.
fn descend(target: &[u64], basis: &BoolMatrix, sel: &mut [bool], cover: &mut [u64]) -> usize {
    let mut best = row_distance(target, basis, sel, cover);
    loop {
        let mut improved = false;
        for r in 0..sel.len() {
            sel[r] = !sel[r];
            let d = row_distance(target, basis, sel, cover);
            if d < best {
                best = d;
                improved = true;
            } else {
                sel[r] = !sel[r];
            }
        }
        if !improved {
            return best;
        }
    }
}

/// Best binary factor row for one row of an unfolding.
///
/// Candidates are descent from the empty row and descent from the current row;
/// the empty-row start wins ties, so components that do not matter stay 0.
pub(crate) fn best_row(target: &[u64], basis: &BoolMatrix, current: &[bool]) -> (Vec<bool>, usize) {
    let mut cover = vec![0u64; target.len()];
    let mut from_zero = vec![false; current.len()];
    let d_zero = descend(target, basis, &mut from_zero, &mut cover);
    let mut from_current = current.to_vec();
    let d_current = descend(target, basis, &mut from_current, &mut cover);
    if d_zero <= d_current {
        (from_zero, d_zero)
    } else {
        (from_current, d_current)
    }
}

const PAR_ROW_WORK: usize = 1 << 14;

/// Replaces every row of the `mode` factor by its greedy best row. Returns
/// whether anything changed.
pub(crate) fn update_factor_with(
    unfolded: &BoolMatrix,
    model: &mut TuckerModel,
    mode: Mode,
) -> bool {
    let basis = mode_basis(&model.core, &model.a, &model.b, &model.c, mode)
        .expect("model shapes are checked by caller");
    let factor = model.factor(mode);
    let rank = factor.cols();
    let work = unfolded.rows() * unfolded.cols().div_ceil(64) * rank * rank;
    let solve = |i: usize| best_row(unfolded.row_words(i), &basis, &factor.row(i)).0;
    let rows: Vec<Vec<bool>> = if work >= PAR_ROW_WORK && unfolded.rows() > 1 {
        (0..unfolded.rows()).into_par_iter().map(solve).collect()
    } else {
        (0..unfolded.rows()).map(solve).collect()
    };
    let fresh = BoolMatrix::from_fn(factor.rows(), rank, |i, r| rows[i][r]);
    let changed = fresh != *factor;
    model.factor_mut(mode).assign(&fresh);
    changed
}

/// Greedy per-row update of the factor for `mode`, all other components fixed.
pub fn update_factor(x: &BoolTensor3, model: &TuckerModel, mode: Mode) -> Result<TuckerModel> {
    model.check_against(x.dims())?;
    let mut next = model.clone();
    update_factor_with(&unfold(x, mode), &mut next, mode);
    Ok(next)
}

// ---------------------------------------------------------------------------
// Core updates

/// Per-cell count of active core cells whose block covers the cell.
struct Coverage {
    dims: Dims,
    counts: Vec<u32>,
    a_ones: Vec<Vec<usize>>,
    b_ones: Vec<Vec<usize>>,
    c_ones: Vec<Vec<usize>>,
}

impl Coverage {
    fn new(model: &TuckerModel) -> Self {
        let dims = model.dims();
        let ranks = model.ranks();
        let mut cov = Coverage {
            dims,
            counts: vec![0; dims.o * dims.f * dims.t],
            a_ones: (0..ranks.r1).map(|r| model.a.col_ones(r)).collect(),
            b_ones: (0..ranks.r2).map(|r| model.b.col_ones(r)).collect(),
            c_ones: (0..ranks.r3).map(|r| model.c.col_ones(r)).collect(),
        };
        for (r1, r2, r3) in model.core.iter_ones() {
            cov.add_block(r1, r2, r3, 1);
        }
        cov
    }

    fn for_block(&self, r1: usize, r2: usize, r3: usize, mut f: impl FnMut(usize)) {
        let Dims { o, f: nf, .. } = self.dims;
        for &k in &self.c_ones[r3] {
            for &j in &self.b_ones[r2] {
                let base = o * (j + nf * k);
                for &i in &self.a_ones[r1] {
                    f(base + i);
                }
            }
        }
    }

    fn add_block(&mut self, r1: usize, r2: usize, r3: usize, delta: i32) {
        let Dims { o, f: nf, .. } = self.dims;
        for &k in &self.c_ones[r3] {
            for &j in &self.b_ones[r2] {
                let base = o * (j + nf * k);
                for &i in &self.a_ones[r1] {
                    let c = &mut self.counts[base + i];
                    *c = c.wrapping_add_signed(delta);
                }
            }
        }
    }

    /// `err(cell on) - err(cell off)` with all other core cells as they are.
    fn gain(&self, x: &BoolTensor3, cell: (usize, usize, usize), on_now: bool) -> i64 {
        let words = x.words();
        let own = on_now as u32;
        let mut delta = 0i64;
        self.for_block(cell.0, cell.1, cell.2, |n| {
            if self.counts[n] == own {
                if (words[n / 64] >> (n % 64)) & 1 == 1 {
                    delta -= 1;
                } else {
                    delta += 1;
                }
            }
        });
        delta
    }
}

/// Visits core cells in `order`; each ends up 1 iff turning it on strictly
/// lowers the mismatch count. Returns the cells set (0 -> 1) in visit order.
pub(crate) fn update_core_in_order(
    x: &BoolTensor3,
    model: &mut TuckerModel,
    order: &[(usize, usize, usize)],
) -> Vec<(usize, usize, usize)> {
    let mut cov = Coverage::new(model);
    let mut set_log = Vec::new();
    for &(r1, r2, r3) in order {
        let on_now = model.core.get(r1, r2, r3);
        let on_next = cov.gain(x, (r1, r2, r3), on_now) < 0;
        if on_next != on_now {
            model.core.set(r1, r2, r3, on_next);
            cov.add_block(r1, r2, r3, if on_next { 1 } else { -1 });
            if on_next {
                set_log.push((r1, r2, r3));
            }
        }
    }
    set_log
}

pub(crate) fn lexicographic_cells(ranks: Ranks) -> Vec<(usize, usize, usize)> {
    let mut cells = Vec::with_capacity(ranks.cells());
    for r1 in 0..ranks.r1 {
        for r2 in 0..ranks.r2 {
            for r3 in 0..ranks.r3 {
                cells.push((r1, r2, r3));
            }
        }
    }
    cells
}

/// Single lexicographic pass of exact-gain core updates.
pub fn update_core(x: &BoolTensor3, model: &TuckerModel) -> Result<TuckerModel> {
    model.check_against(x.dims())?;
    let mut next = model.clone();
    update_core_in_order(x, &mut next, &lexicographic_cells(model.ranks()));
    Ok(next)
}

/// Re-seeds every all-zero factor column from the residual.
///
/// A component whose factor column is empty contributes nothing, so its core
/// slice is cleared and the column is replaced by the fiber of uncovered
/// 1-cells through a randomly chosen uncovered 1-cell (the same cell for every
/// dead column). The reconstruction is
/// unchanged; the next core update decides whether the new column is used.
pub(crate) fn revive_dead_components(
    x: &BoolTensor3,
    model: &mut TuckerModel,
    rng: &mut SeededRng,
) -> bool {
    let dead: Vec<(Mode, usize)> = Mode::ALL
        .into_iter()
        .flat_map(|mode| {
            let f = model.factor(mode);
            (0..f.cols())
                .filter(|&r| (0..f.rows()).all(|i| !f.get(i, r)))
                .map(move |r| (mode, r))
                .collect::<Vec<_>>()
        })
        .collect();
    if dead.is_empty() {
        return false;
    }
    let xhat = model.reconstruct();
    let residual: Vec<(usize, usize, usize)> = x
        .iter_ones()
        .filter(|&(i, j, k)| !xhat.get(i, j, k))
        .collect();
    if residual.is_empty() {
        return false;
    }
    let dims = x.dims();
    let g = model.core.dims();
    let open = |i: usize, j: usize, k: usize| x.get(i, j, k) && !xhat.get(i, j, k);
    // One shared cell, so revived columns in different modes meet in a block.
    let (i, j, k) = residual[rng.below(residual.len())];
    for (mode, r) in dead {
        match mode {
            Mode::Mode1 => {
                for q in 0..g.f {
                    for s in 0..g.t {
                        model.core.set(r, q, s, false);
                    }
                }
                for p in 0..dims.o {
                    model.a.set(p, r, open(p, j, k));
                }
            }
            Mode::Mode2 => {
                for p in 0..g.o {
                    for s in 0..g.t {
                        model.core.set(p, r, s, false);
                    }
                }
                for q in 0..dims.f {
                    model.b.set(q, r, open(i, q, k));
                }
            }
            Mode::Mode3 => {
                for p in 0..g.o {
                    for q in 0..g.f {
                        model.core.set(p, q, r, false);
                    }
                }
                for s in 0..dims.t {
                    model.c.set(s, r, open(i, j, s));
                }
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Fitting

pub fn evaluate(x: &BoolTensor3, model: &TuckerModel) -> Result<ErrorStat> {
    model.check_against(x.dims())?;
    hamming_error(x, &model.reconstruct())
}

/// A tensor with its three unfoldings cached for repeated sweeps.
pub(crate) struct Unfolded<'a> {
    pub x: &'a BoolTensor3,
    modes: [BoolMatrix; 3],
}

impl<'a> Unfolded<'a> {
    pub fn new(x: &'a BoolTensor3) -> Self {
        Unfolded {
            x,
            modes: Mode::ALL.map(|m| unfold(x, m)),
        }
    }

    pub fn mode(&self, mode: Mode) -> &BoolMatrix {
        &self.modes[mode as usize]
    }

    pub fn error(&self, model: &TuckerModel) -> ErrorStat {
        hamming_error(self.x, &model.reconstruct()).expect("dims checked by caller")
    }
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Runs sweeps of (A, B, C, core) from `model` until the threshold is met,
/// progress stalls, or `max_sweeps` is reached.
pub(crate) fn fit_from(
    x: &BoolTensor3,
    mut model: TuckerModel,
    config: &FitConfig,
) -> (TuckerModel, FitTrace) {
    let data = Unfolded::new(x);
    let start = Instant::now();
    if model.core.count_ones() == 0 {
        // With an empty core every factor bit is irrelevant, so seed the core
        // from the initial factors before the first factor pass.
        let cells = lexicographic_cells(model.ranks());
        update_core_in_order(x, &mut model, &cells);
    }
    let mut prev = data.error(&model).mismatches;
    let mut records = Vec::new();
    let mut stall = 0;
    let mut status = FitStatus::MaxSweeps;
    let mut sweep_start = start;
    let cells = lexicographic_cells(model.ranks());
    let mut reseed = SeededRng::new(config.seed, Stream::Reseed);
    for sweep in 1..=config.max_sweeps {
        for mode in Mode::ALL {
            update_factor_with(data.mode(mode), &mut model, mode);
        }
        revive_dead_components(x, &mut model, &mut reseed);
        update_core_in_order(x, &mut model, &cells);
        let err = data.error(&model);
        records.push(SweepRecord {
            index: sweep,
            mismatches: err.mismatches,
            relative: err.relative,
            millis: elapsed_ms(sweep_start),
        });
        sweep_start = Instant::now();
        if config.error_kind.meets(&err, config.error_threshold) {
            status = FitStatus::Converged;
            break;
        }
        if prev.saturating_sub(err.mismatches) < 1 {
            stall += 1;
            if stall >= config.stall_sweeps.max(1) {
                status = FitStatus::Stalled;
                break;
            }
        } else {
            stall = 0;
        }
        prev = err.mismatches;
    }
    (model, FitTrace { records, status })
}

/// Full alternating fit from a fresh initialization.
pub fn fit_batch(x: &BoolTensor3, config: &FitConfig) -> Result<(TuckerModel, FitTrace)> {
    config.validate(x.dims())?;
    Ok(fit_from(x, initial_model(x, config), config))
}

/// Best of `restarts` independent fits (fewest mismatches, earliest wins ties).
/// Restart `r` uses seed `restart_seed(config.seed, r)`; restart 0 is `fit_batch`.
pub fn fit_best_of(
    x: &BoolTensor3,
    config: &FitConfig,
    restarts: usize,
) -> Result<(TuckerModel, FitTrace)> {
    config.validate(x.dims())?;
    if restarts == 0 {
        return Err(Error::Config("restarts must be >= 1".into()));
    }
    Ok(best_of_from(x, config, restarts))
}

pub(crate) fn best_of_from(
    x: &BoolTensor3,
    config: &FitConfig,
    restarts: usize,
) -> (TuckerModel, FitTrace) {
    let mut best: Option<(TuckerModel, FitTrace, usize)> = None;
    for r in 0..restarts {
        let cfg = FitConfig {
            seed: restart_seed(config.seed, r),
            ..config.clone()
        };
        let (m, t) = fit_from(x, initial_model(x, &cfg), &cfg);
        let e = t.last().map_or(usize::MAX, |rec| rec.mismatches);
        if best.as_ref().is_none_or(|(_, _, be)| e < *be) {
            best = Some((m, t, e));
        }
        if e == 0 {
            break;
        }
    }
    let (m, t, _) = best.expect("at least one restart");
    (m, t)
}
