use std::fmt;

pub(crate) const WORD_BITS: usize = 64;

#[inline]
pub(crate) fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

/// Dense binary matrix, row-major, each row packed into `u64` words.
///
/// Bits past `cols` in the last word of a row are kept at zero, so whole-word
/// popcounts and XORs never see garbage.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BoolMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    words: Vec<u64>,
}

impl BoolMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        BoolMatrix {
            rows,
            cols,
            stride,
            words: vec![0; rows * stride],
        }
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| true)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                if f(i, j) {
                    m.set(i, j, true);
                }
            }
        }
        m
    }

    /// Builds a matrix from nested rows of 0/1 values. Panics on ragged input.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        assert!(rows.iter().all(|r| r.as_ref().len() == cols), "ragged rows");
        Self::from_fn(rows.len(), cols, |i, j| rows[i].as_ref()[j] != 0)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.rows && j < self.cols);
        (self.words[i * self.stride + j / WORD_BITS] >> (j % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        let w = &mut self.words[i * self.stride + j / WORD_BITS];
        let mask = 1u64 << (j % WORD_BITS);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    /// Packed words of row `i`.
    #[inline]
    pub fn row_words(&self, i: usize) -> &[u64] {
        &self.words[i * self.stride..(i + 1) * self.stride]
    }

    #[inline]
    pub(crate) fn row_words_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.words[i * self.stride..(i + 1) * self.stride]
    }

    pub fn row(&self, i: usize) -> Vec<bool> {
        (0..self.cols).map(|j| self.get(i, j)).collect()
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn row_count_ones(&self, i: usize) -> usize {
        self.row_words(i)
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    /// Indices of the rows holding a 1 in column `j`.
    pub fn col_ones(&self, j: usize) -> Vec<usize> {
        (0..self.rows).filter(|&i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> BoolMatrix {
        let mut out = BoolMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in self.iter_row_ones(i) {
                out.set(j, i, true);
            }
        }
        out
    }

    /// Column indices of the 1-cells in row `i`, ascending.
    pub fn iter_row_ones(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.row_words(i)
            .iter()
            .enumerate()
            .flat_map(|(wi, &w)| BitIter(w).map(move |b| wi * WORD_BITS + b))
    }

    /// Copy with row `i` removed.
    pub fn without_row(&self, i: usize) -> BoolMatrix {
        assert!(i < self.rows);
        let mut words = self.words.clone();
        words.drain(i * self.stride..(i + 1) * self.stride);
        BoolMatrix {
            rows: self.rows - 1,
            cols: self.cols,
            stride: self.stride,
            words,
        }
    }

    /// Copy with `row` appended at the bottom.
    pub fn with_row(&self, row: &[bool]) -> BoolMatrix {
        assert_eq!(row.len(), self.cols);
        let mut out = BoolMatrix {
            rows: self.rows + 1,
            cols: self.cols,
            stride: self.stride,
            words: self.words.clone(),
        };
        out.words.extend(std::iter::repeat_n(0, self.stride));
        for (j, &b) in row.iter().enumerate() {
            if b {
                out.set(self.rows, j, true);
            }
        }
        out
    }

    /// Copy with column `j` duplicated and appended on the right.
    pub fn with_dup_col(&self, j: usize) -> BoolMatrix {
        BoolMatrix::from_fn(self.rows, self.cols + 1, |r, c| {
            if c < self.cols {
                self.get(r, c)
            } else {
                self.get(r, j)
            }
        })
    }

    /// Overwrites `self` with `other`, reusing the allocation when it is large enough.
    pub(crate) fn assign(&mut self, other: &BoolMatrix) {
        self.rows = other.rows;
        self.cols = other.cols;
        self.stride = other.stride;
        self.words.clear();
        self.words.extend_from_slice(&other.words);
    }

    pub(crate) fn reserve_rows(&mut self, total_rows: usize) {
        let want = total_rows * self.stride;
        if want > self.words.len() {
            self.words.reserve_exact(want - self.words.len());
        }
    }

    /// Drops the first row in place; capacity is kept.
    pub(crate) fn pop_front_row(&mut self) {
        assert!(self.rows > 0);
        self.words.drain(..self.stride);
        self.rows -= 1;
    }

    /// Appends a row in place, growing the allocation only if it is full.
    pub(crate) fn push_row(&mut self, row: &[bool]) {
        assert_eq!(row.len(), self.cols);
        self.words.extend(std::iter::repeat_n(0, self.stride));
        self.rows += 1;
        for (j, &b) in row.iter().enumerate() {
            if b {
                self.set(self.rows - 1, j, true);
            }
        }
    }

    /// Bytes of heap storage currently allocated.
    pub fn heap_bytes(&self) -> usize {
        self.words.capacity() * std::mem::size_of::<u64>()
    }
}

impl fmt::Debug for BoolMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BoolMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let s: String = (0..self.cols)
                .map(|j| if self.get(i, j) { '1' } else { '0' })
                .collect();
            writeln!(f, "  {s}")?;
        }
        write!(f, "]")
    }
}

pub(crate) struct BitIter(pub u64);

impl Iterator for BitIter {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let b = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(b)
    }
}
