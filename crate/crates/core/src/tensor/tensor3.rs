use std::fmt;

use super::matrix::{words_for, BitIter, BoolMatrix, WORD_BITS};
use crate::error::{Error, Result};

/// Unfolding axis of an object x feature x time tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Objects.
    Mode1,
    /// Features.
    Mode2,
    /// Time slots.
    Mode3,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Mode1, Mode::Mode2, Mode::Mode3];
}

/// Dimensions `(O, F, T)` of a 3-order tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    pub o: usize,
    pub f: usize,
    pub t: usize,
}

impl Dims {
    pub const fn new(o: usize, f: usize, t: usize) -> Self {
        Dims { o, f, t }
    }

    pub fn cells(&self) -> Option<usize> {
        self.o.checked_mul(self.f)?.checked_mul(self.t)
    }

    /// Extent along `mode`.
    pub fn along(&self, mode: Mode) -> usize {
        match mode {
            Mode::Mode1 => self.o,
            Mode::Mode2 => self.f,
            Mode::Mode3 => self.t,
        }
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.o, self.f, self.t)
    }
}

/// Dense binary tensor in `{0,1}^{O x F x T}`, bits stored with `o` varying fastest.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BoolTensor3 {
    dims: Dims,
    words: Vec<u64>,
}

impl BoolTensor3 {
    pub fn zeros(dims: Dims) -> Self {
        let n = dims.cells().expect("tensor cell count overflows usize");
        BoolTensor3 {
            dims,
            words: vec![0; words_for(n)],
        }
    }

    pub fn try_zeros(dims: Dims) -> Result<Self> {
        dims.cells()
            .ok_or_else(|| Error::Capacity(format!("tensor {dims} has too many cells")))?;
        Ok(Self::zeros(dims))
    }

    pub fn ones(dims: Dims) -> Self {
        Self::from_fn(dims, |_, _, _| true)
    }

    pub fn from_fn(dims: Dims, mut f: impl FnMut(usize, usize, usize) -> bool) -> Self {
        let mut x = Self::zeros(dims);
        for k in 0..dims.t {
            for j in 0..dims.f {
                for i in 0..dims.o {
                    if f(i, j, k) {
                        x.set(i, j, k, true);
                    }
                }
            }
        }
        x
    }

    /// Stacks `O x F` slot matrices along the time axis.
    pub fn from_slices(slices: &[BoolMatrix]) -> Result<Self> {
        let (o, f) = slices.first().map_or((0, 0), BoolMatrix::shape);
        for (t, s) in slices.iter().enumerate() {
            if s.shape() != (o, f) {
                return Err(Error::shape(
                    "from_slices",
                    format!("slot 0 is {o}x{f}"),
                    format!("slot {t} is {}x{}", s.rows(), s.cols()),
                ));
            }
        }
        let mut x = Self::try_zeros(Dims::new(o, f, slices.len()))?;
        for (k, s) in slices.iter().enumerate() {
            for i in 0..o {
                for j in s.iter_row_ones(i) {
                    x.set(i, j, k, true);
                }
            }
        }
        Ok(x)
    }

    #[inline]
    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.o * self.dims.f * self.dims.t
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.dims.o && j < self.dims.f && k < self.dims.t);
        i + self.dims.o * (j + self.dims.f * k)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> bool {
        let n = self.index(i, j, k);
        (self.words[n / WORD_BITS] >> (n % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: bool) {
        assert!(
            i < self.dims.o && j < self.dims.f && k < self.dims.t,
            "index out of bounds"
        );
        let n = self.index(i, j, k);
        let mask = 1u64 << (n % WORD_BITS);
        if value {
            self.words[n / WORD_BITS] |= mask;
        } else {
            self.words[n / WORD_BITS] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// All 1-cells as `(o, f, t)` triples in storage order.
    pub fn iter_ones(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let Dims { o, f, .. } = self.dims;
        self.words.iter().enumerate().flat_map(move |(wi, &w)| {
            BitIter(w).map(move |b| {
                let n = wi * WORD_BITS + b;
                (n % o, (n / o) % f, n / (o * f))
            })
        })
    }

    /// The `O x F` matrix at time slot `k`.
    pub fn slice(&self, k: usize) -> BoolMatrix {
        BoolMatrix::from_fn(self.dims.o, self.dims.f, |i, j| self.get(i, j, k))
    }

    pub fn slices(&self) -> Vec<BoolMatrix> {
        (0..self.dims.t).map(|k| self.slice(k)).collect()
    }

    pub fn heap_bytes(&self) -> usize {
        self.words.capacity() * std::mem::size_of::<u64>()
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    /// Cellwise `self <= other` (every 1 here is also a 1 there).
    pub fn is_subset_of(&self, other: &BoolTensor3) -> bool {
        self.dims == other.dims
            && self
                .words
                .iter()
                .zip(&other.words)
                .all(|(a, b)| a & !b == 0)
    }
}

impl fmt::Debug for BoolTensor3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BoolTensor3 {} ones={} [", self.dims, self.count_ones())?;
        for (n, cell) in self.iter_ones().take(32).enumerate() {
            if n > 0 {
                write!(f, " ")?;
            }
            write!(f, "{cell:?}")?;
        }
        write!(f, "]")
    }
}
