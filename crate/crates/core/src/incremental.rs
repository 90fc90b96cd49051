//! Streaming fit: one slot at a time over a sliding window, with
//! time-weighted factor covariances steering the core update.

use std::collections::VecDeque;
use std::time::Instant;

use ndarray::Array2;

use crate::batch::{
    best_of_from, lexicographic_cells, revive_dead_components, update_core_in_order,
    update_factor_with, ErrorKind, FitConfig, FitStatus, FitTrace, InitStrategy, Ranks,
    SweepRecord, TuckerModel, Unfolded,
};
use crate::error::{Error, Result};
use crate::rng::{SeededRng, Stream};
use crate::tensor::{hamming_error, BoolMatrix, BoolTensor3, ErrorStat, Mode};

/// Multiplier applied to the old accumulator when slot `t` arrives.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeWeight {
    Constant(f64),
    ExponentialDecay(f64),
    /// `weights[t % period]`.
    SeasonalMask {
        period: usize,
        weights: Vec<f64>,
    },
}

impl Default for TimeWeight {
    fn default() -> Self {
        TimeWeight::ExponentialDecay(0.9)
    }
}

fn unit_interval(what: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} {v} is outside [0, 1]")))
    }
}

impl TimeWeight {
    pub fn validate(&self) -> Result<()> {
        match self {
            TimeWeight::Constant(l) | TimeWeight::ExponentialDecay(l) => {
                unit_interval("weight", *l)
            }
            TimeWeight::SeasonalMask { period, weights } => {
                if *period == 0 {
                    return Err(Error::Config("seasonal period must be >= 1".into()));
                }
                if weights.len() != *period {
                    return Err(Error::Config(format!(
                        "seasonal period {period} needs {period} weights, got {}",
                        weights.len()
                    )));
                }
                weights
                    .iter()
                    .try_for_each(|&w| unit_interval("seasonal weight", w))
            }
        }
    }

    /// Weight for the arrival of slot `t` (0-based).
    ///
    /// Constant and exponential decay both multiply by `λ` at every step; they
    /// differ only in intent (a fixed blend versus a geometric forgetting rate).
    pub fn weight_at(&self, t: usize) -> f64 {
        match self {
            TimeWeight::Constant(l) | TimeWeight::ExponentialDecay(l) => *l,
            TimeWeight::SeasonalMask { period, weights } => weights[t % period],
        }
    }
}

/// Time-weighted sample covariances of the three factor matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceState {
    pub ca: Array2<f64>,
    pub cb: Array2<f64>,
    pub cc: Array2<f64>,
    pub slots_seen: usize,
}

impl CovarianceState {
    pub fn zeros(ranks: Ranks) -> Self {
        CovarianceState {
            ca: Array2::zeros((ranks.r1, ranks.r1)),
            cb: Array2::zeros((ranks.r2, ranks.r2)),
            cc: Array2::zeros((ranks.r3, ranks.r3)),
            slots_seen: 0,
        }
    }

    fn get(&self, mode: Mode) -> &Array2<f64> {
        match mode {
            Mode::Mode1 => &self.ca,
            Mode::Mode2 => &self.cb,
            Mode::Mode3 => &self.cc,
        }
    }

    fn get_mut(&mut self, mode: Mode) -> &mut Array2<f64> {
        match mode {
            Mode::Mode1 => &mut self.ca,
            Mode::Mode2 => &mut self.cb,
            Mode::Mode3 => &mut self.cc,
        }
    }

    fn heap_bytes(&self) -> usize {
        (self.ca.len() + self.cb.len() + self.cc.len()) * std::mem::size_of::<f64>()
    }
}

/// Sample covariance of the columns of `m` across its rows (`cols x cols`).
pub fn covariance_of(m: &BoolMatrix) -> Result<Array2<f64>> {
    let (n, k) = m.shape();
    if n == 0 {
        return Err(Error::Domain("covariance of a matrix with no rows".into()));
    }
    let mut out = Array2::zeros((k, k));
    if n == 1 {
        return Ok(out);
    }
    // Integer co-occurrence counts keep the sums exact.
    let mut counts = vec![0u64; k * k];
    for i in 0..n {
        let ones: Vec<usize> = m.iter_row_ones(i).collect();
        for (x, &p) in ones.iter().enumerate() {
            for &q in &ones[x..] {
                counts[p * k + q] += 1;
            }
        }
    }
    let nf = n as f64;
    for p in 0..k {
        for q in p..k {
            let (cp, cq) = (counts[p * k + p] as f64, counts[q * k + q] as f64);
            let v = (counts[p * k + q] as f64 - cp * cq / nf) / (nf - 1.0);
            out[[p, q]] = v;
            out[[q, p]] = v;
        }
    }
    Ok(out)
}

/// `old * weight + new`, elementwise.
pub fn accumulate(old: &Array2<f64>, new: &Array2<f64>, weight: f64) -> Result<Array2<f64>> {
    if old.dim() != new.dim() {
        return Err(Error::shape(
            "accumulate",
            format!("{:?}", old.dim()),
            format!("{:?}", new.dim()),
        ));
    }
    unit_interval("weight", weight)?;
    Ok(old * weight + new)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamConfig {
    pub ranks: Ranks,
    pub window_w: usize,
    pub time_weight: TimeWeight,
    pub inner_sweeps: usize,
    pub error_threshold: f64,
    pub seed: u64,
    pub error_kind: ErrorKind,
    /// Sweep budget of the two-slot bootstrap fit.
    pub bootstrap_max_sweeps: usize,
    /// Independent bootstrap fits; the one with fewest mismatches is kept.
    pub bootstrap_restarts: usize,
    pub init: InitStrategy,
}

impl StreamConfig {
    pub fn new(ranks: Ranks) -> Self {
        StreamConfig {
            ranks,
            window_w: 12,
            time_weight: TimeWeight::default(),
            inner_sweeps: 5,
            error_threshold: 0.05,
            seed: 0,
            error_kind: ErrorKind::Relative,
            bootstrap_max_sweeps: 100,
            bootstrap_restarts: 5,
            init: InitStrategy::DataFibers,
        }
    }

    /// The batch configuration used for the bootstrap fit.
    pub fn bootstrap_config(&self) -> FitConfig {
        FitConfig {
            error_threshold: self.error_threshold,
            max_sweeps: self.bootstrap_max_sweeps,
            seed: self.seed,
            init: self.init,
            error_kind: self.error_kind,
            ..FitConfig::new(self.ranks)
        }
    }

    pub fn validate(&self, o: usize, f: usize) -> Result<()> {
        let r = self.ranks;
        if r.r1 == 0 || r.r2 == 0 || r.r3 == 0 {
            return Err(Error::Config(format!("ranks {r} must all be >= 1")));
        }
        if r.r1 > o || r.r2 > f || r.r3 > self.window_w {
            return Err(Error::Config(format!(
                "ranks {r} exceed slot shape {o}x{f} with window {}",
                self.window_w
            )));
        }
        if self.window_w < 2 {
            return Err(Error::Config("window must hold at least 2 slots".into()));
        }
        if self.inner_sweeps == 0 {
            return Err(Error::Config("inner sweeps must be >= 1".into()));
        }
        if self.bootstrap_restarts == 0 {
            return Err(Error::Config("bootstrap restarts must be >= 1".into()));
        }
        self.time_weight.validate()?;
        self.bootstrap_config().validate_params()
    }
}

/// Fixed-capacity ring of the most recent slot matrices.
#[derive(Debug, Clone)]
struct SlotRing {
    buf: Vec<BoolMatrix>,
    head: usize,
    len: usize,
}

impl SlotRing {
    fn new(capacity: usize, o: usize, f: usize) -> Self {
        SlotRing {
            buf: (0..capacity).map(|_| BoolMatrix::zeros(o, f)).collect(),
            head: 0,
            len: 0,
        }
    }

    fn is_full(&self) -> bool {
        self.len == self.buf.len()
    }

    /// Stores a copy of `slot`, overwriting the oldest when full.
    fn push(&mut self, slot: &BoolMatrix) {
        let cap = self.buf.len();
        if self.is_full() {
            self.buf[self.head].assign(slot);
            self.head = (self.head + 1) % cap;
        } else {
            self.buf[(self.head + self.len) % cap].assign(slot);
            self.len += 1;
        }
    }

    fn iter(&self) -> impl Iterator<Item = &BoolMatrix> + '_ {
        (0..self.len).map(move |n| &self.buf[(self.head + n) % self.buf.len()])
    }

    fn tensor(&self) -> BoolTensor3 {
        let slots: Vec<BoolMatrix> = self.iter().cloned().collect();
        BoolTensor3::from_slices(&slots).expect("ring slots share one shape")
    }

    fn heap_bytes(&self) -> usize {
        self.buf.capacity() * std::mem::size_of::<BoolMatrix>()
            + self.buf.iter().map(BoolMatrix::heap_bytes).sum::<usize>()
    }
}

/// Everything a stream keeps between slots.
#[derive(Debug, Clone)]
pub struct StreamState {
    /// Current model; `c` has one row per slot in the window.
    pub model: TuckerModel,
    pub cov: CovarianceState,
    pub config: StreamConfig,
    window: SlotRing,
    recent: VecDeque<SweepRecord>,
    rng: SeededRng,
}

impl StreamState {
    pub fn window_len(&self) -> usize {
        self.window.len
    }

    /// Slots currently in the window, oldest first.
    pub fn window(&self) -> impl Iterator<Item = &BoolMatrix> + '_ {
        self.window.iter()
    }

    pub fn window_tensor(&self) -> BoolTensor3 {
        self.window.tensor()
    }

    /// Per-slot records of the last `window_w` slots; `index` is the 0-based slot.
    pub fn recent_trace(&self) -> &VecDeque<SweepRecord> {
        &self.recent
    }

    /// Heap and inline bytes held by the state. Storage is reserved for a full
    /// window at bootstrap, so this stays constant for the life of a stream.
    pub fn retained_bytes(&self) -> usize {
        let m = &self.model;
        std::mem::size_of::<Self>()
            + m.core.heap_bytes()
            + m.a.heap_bytes()
            + m.b.heap_bytes()
            + m.c.heap_bytes()
            + self.cov.heap_bytes()
            + self.window.heap_bytes()
            + self.recent.capacity() * std::mem::size_of::<SweepRecord>()
            + match &self.config.time_weight {
                TimeWeight::SeasonalMask { weights, .. } => {
                    weights.capacity() * std::mem::size_of::<f64>()
                }
                _ => 0,
            }
    }

    fn slot_shape(&self) -> (usize, usize) {
        (self.model.a.rows(), self.model.b.rows())
    }

    /// Old accumulators weighted by `w` plus the covariances of the current factors.
    fn folded_covariances(&self, w: f64) -> Result<CovarianceState> {
        let mut next = self.cov.clone();
        for mode in Mode::ALL {
            let fresh = covariance_of(self.model.factor(mode))?;
            *next.get_mut(mode) = accumulate(self.cov.get(mode), &fresh, w)?;
        }
        Ok(next)
    }

    fn record(&mut self, rec: SweepRecord) {
        if self.recent.len() == self.config.window_w {
            self.recent.pop_front();
        }
        self.recent.push_back(rec);
    }

    /// Folds one slot into the stream. The slot is copied into the window.
    pub fn ingest(&mut self, slot: &BoolMatrix) -> Result<SweepRecord> {
        self.ingest_logged(slot, None)
    }

    fn ingest_logged(
        &mut self,
        slot: &BoolMatrix,
        mut sweep_errors: Option<&mut Vec<usize>>,
    ) -> Result<SweepRecord> {
        let (o, f) = self.slot_shape();
        if slot.shape() != (o, f) {
            return Err(Error::shape(
                "ingest_slot",
                format!("stream slots are {o}x{f}"),
                format!("slot is {}x{}", slot.rows(), slot.cols()),
            ));
        }
        let start = Instant::now();
        if self.window.is_full() {
            self.model.c.pop_front_row();
        }
        self.window.push(slot);
        let carry = self.model.c.row(self.model.c.rows() - 1);
        self.model.c.push_row(&carry);

        let x = self.window.tensor();
        let w = self.config.time_weight.weight_at(self.cov.slots_seen);
        let (eps, kind) = (self.config.error_threshold, self.config.error_kind);
        let mut err = hamming_error(&x, &self.model.reconstruct())?;
        if let Some(log) = sweep_errors.as_deref_mut() {
            log.push(err.mismatches);
        }
        let mut provisional = self.folded_covariances(w)?;
        // A warm start already within the threshold has nothing to fit.
        if !kind.meets(&err, eps) {
            let data = Unfolded::new(&x);
            for _ in 0..self.config.inner_sweeps {
                let mut changed = false;
                for mode in Mode::ALL {
                    changed |= update_factor_with(data.mode(mode), &mut self.model, mode);
                }
                changed |= revive_dead_components(&x, &mut self.model, &mut self.rng);
                provisional = self.folded_covariances(w)?;
                let before = self.model.core.clone();
                update_core_in_order(&x, &mut self.model, &core_visit_order(&provisional));
                changed |= before != self.model.core;
                err = data.error(&self.model);
                if let Some(log) = sweep_errors.as_deref_mut() {
                    log.push(err.mismatches);
                }
                if kind.meets(&err, eps) || !changed {
                    break;
                }
            }
        }
        provisional.slots_seen = self.cov.slots_seen + 1;
        self.cov = provisional;
        let rec = SweepRecord {
            index: self.cov.slots_seen - 1,
            mismatches: err.mismatches,
            relative: err.relative,
            millis: start.elapsed().as_secs_f64() * 1e3,
        };
        self.record(rec);
        Ok(rec)
    }
}

/// Fits the first two slots and sets up the stream.
pub fn bootstrap(
    slot1: &BoolMatrix,
    slot2: &BoolMatrix,
    config: &StreamConfig,
) -> Result<StreamState> {
    let (o, f) = slot1.shape();
    if slot2.shape() != (o, f) {
        return Err(Error::shape(
            "bootstrap",
            format!("{o}x{f}"),
            format!("{}x{}", slot2.rows(), slot2.cols()),
        ));
    }
    config.validate(o, f)?;
    let start = Instant::now();
    let x = BoolTensor3::from_slices(&[slot1.clone(), slot2.clone()])?;
    let (mut model, _) = best_of_from(&x, &config.bootstrap_config(), config.bootstrap_restarts);
    let err = Unfolded::new(&x).error(&model);
    model.c.reserve_rows(config.window_w);
    let cov = CovarianceState {
        ca: covariance_of(&model.a)?,
        cb: covariance_of(&model.b)?,
        cc: covariance_of(&model.c)?,
        slots_seen: 2,
    };
    let mut window = SlotRing::new(config.window_w, o, f);
    window.push(slot1);
    window.push(slot2);
    let mut state = StreamState {
        model,
        cov,
        config: config.clone(),
        window,
        recent: VecDeque::with_capacity(config.window_w),
        rng: SeededRng::new(config.seed, Stream::Reseed),
    };
    state.record(SweepRecord {
        index: 1,
        mismatches: err.mismatches,
        relative: err.relative,
        millis: start.elapsed().as_secs_f64() * 1e3,
    });
    Ok(state)
}

/// Functional form of [`StreamState::ingest`].
pub fn ingest_slot(mut state: StreamState, slot: &BoolMatrix) -> Result<StreamState> {
    state.ingest(slot)?;
    Ok(state)
}

/// Core cells by descending `ca[r1,r1] * cb[r2,r2] * cc[r3,r3]`, ties lexicographic.
pub fn core_visit_order(cov: &CovarianceState) -> Vec<Cell> {
    let ranks = Ranks::new(cov.ca.nrows(), cov.cb.nrows(), cov.cc.nrows());
    let score =
        |&(p, q, s): &(usize, usize, usize)| cov.ca[[p, p]] * cov.cb[[q, q]] * cov.cc[[s, s]];
    let mut cells = lexicographic_cells(ranks);
    cells.sort_by(|x, y| score(y).total_cmp(&score(x)));
    cells
}

/// A core cell `(r1, r2, r3)`.
pub type Cell = (usize, usize, usize);

/// Core update over the window in priority order. Also returns the cells
/// switched on, in the order they were set.
pub fn update_core_logged(
    x_window: &BoolTensor3,
    model: &TuckerModel,
    cov: &CovarianceState,
) -> Result<(TuckerModel, Vec<Cell>)> {
    model.check_against(x_window.dims())?;
    let ranks = model.ranks();
    let cov_ranks = Ranks::new(cov.ca.nrows(), cov.cb.nrows(), cov.cc.nrows());
    if ranks != cov_ranks {
        return Err(Error::shape("update_core_prioritized", ranks, cov_ranks));
    }
    let mut next = model.clone();
    let log = update_core_in_order(x_window, &mut next, &core_visit_order(cov));
    Ok((next, log))
}

pub fn update_core_prioritized(
    x_window: &BoolTensor3,
    model: &TuckerModel,
    cov: &CovarianceState,
) -> Result<TuckerModel> {
    update_core_logged(x_window, model, cov).map(|(m, _)| m)
}

/// Bootstraps on the first two slots and ingests the rest. The trace has one
/// record per slot from the second on.
pub fn run_stream(slots: &[BoolMatrix], config: &StreamConfig) -> Result<(StreamState, FitTrace)> {
    if slots.len() < 2 {
        return Err(Error::Input(format!(
            "a stream needs at least 2 slots, got {}",
            slots.len()
        )));
    }
    let mut state = bootstrap(&slots[0], &slots[1], config)?;
    let mut records = vec![state.recent[0]];
    for slot in &slots[2..] {
        records.push(state.ingest(slot)?);
    }
    let last = records.last().expect("bootstrap record");
    let met = config.error_kind.meets(
        &ErrorStat {
            mismatches: last.mismatches,
            relative: last.relative,
        },
        config.error_threshold,
    );
    let status = if met {
        FitStatus::Converged
    } else {
        FitStatus::MaxSweeps
    };
    Ok((state, FitTrace { records, status }))
}
