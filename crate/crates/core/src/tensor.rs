//! Aligned row-major matrices and deterministic test data.
//!
//! A [`Matrix2D`] holds `rows x cols` single-precision values with element
//! `(n, c)` at linear index `n * cols + c`. Storage is a vector of 32-byte
//! blocks, so the first element is always 32-byte aligned and 8-lane vector
//! loads from the start of the buffer never straddle an alignment boundary.
//!
//! [`fill_uniform`] draws values from a ChaCha8 stream (`rand_chacha`) seeded
//! with [`FillSpec::seed`] through `SeedableRng::seed_from_u64`; each element
//! is one sample of `rand::distr::Uniform::<f32>::new(low, high)`, resampled
//! in the (rare) event that it lands exactly on `low` so every value lies in
//! the open interval `(low, high)`. Elements are generated in linear index
//! order. The same seed, range and shape therefore reproduce the same bits
//! on every platform.

use std::fmt;

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Alignment of every matrix buffer, in bytes.
pub const ALIGNMENT: usize = 32;

const BLOCK_LANES: usize = ALIGNMENT / std::mem::size_of::<f32>();

#[derive(Clone, Copy, PartialEq)]
#[repr(C, align(32))]
struct Block([f32; BLOCK_LANES]);

const ZERO_BLOCK: Block = Block([0.0; BLOCK_LANES]);

/// Row-major `rows x cols` matrix of `f32` with a 32-byte aligned start.
#[derive(Clone, PartialEq)]
pub struct Matrix2D {
    rows: usize,
    cols: usize,
    len: usize,
    blocks: Vec<Block>,
}

impl fmt::Debug for Matrix2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Matrix2D")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish_non_exhaustive()
    }
}

/// Uniform fill parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FillSpec {
    pub seed: u64,
    pub low: f32,
    pub high: f32,
}

impl FillSpec {
    pub fn new(seed: u64, low: f32, high: f32) -> Self {
        Self { seed, low, high }
    }
}

impl Default for FillSpec {
    /// uniform(-5, 5) with seed 0.
    fn default() -> Self {
        Self::new(0, -5.0, 5.0)
    }
}

/// Allocates a zero-initialized `rows x cols` matrix.
pub fn alloc_matrix(rows: usize, cols: usize) -> Result<Matrix2D> {
    if rows == 0 || cols == 0 {
        return Err(Error::argument(format!(
            "matrix dimensions must be at least 1, got {rows}x{cols}"
        )));
    }
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::argument(format!("{rows}x{cols} overflows the element count")))?;
    let n_blocks = len.div_ceil(BLOCK_LANES);
    if n_blocks > isize::MAX as usize / ALIGNMENT {
        return Err(Error::argument(format!(
            "{rows}x{cols} exceeds the addressable buffer size"
        )));
    }
    let mut blocks = Vec::new();
    blocks
        .try_reserve_exact(n_blocks)
        .map_err(|e| Error::Resource(format!("{rows}x{cols} f32 buffer: {e}")))?;
    blocks.resize(n_blocks, ZERO_BLOCK);
    Ok(Matrix2D {
        rows,
        cols,
        len,
        blocks,
    })
}

/// Fills `m` with uniform values as described in the module docs.
pub fn fill_uniform(m: &mut Matrix2D, spec: &FillSpec) -> Result<()> {
    if !(spec.low.is_finite() && spec.high.is_finite()) {
        return Err(Error::argument("fill range bounds must be finite"));
    }
    if spec.low >= spec.high {
        return Err(Error::argument(format!(
            "fill range requires low < high, got ({}, {})",
            spec.low, spec.high
        )));
    }
    let dist = Uniform::new(spec.low, spec.high)
        .map_err(|e| Error::argument(format!("fill range ({}, {}): {e}", spec.low, spec.high)))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for v in m.as_mut_slice() {
        *v = loop {
            let x = dist.sample(&mut rng);
            if x != spec.low {
                break x;
            }
        };
    }
    Ok(())
}

impl Matrix2D {
    /// Shorthand for [`alloc_matrix`].
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        alloc_matrix(rows, cols)
    }

    /// Allocates a matrix and fills it per `spec`.
    pub fn uniform(rows: usize, cols: usize, spec: &FillSpec) -> Result<Self> {
        let mut m = alloc_matrix(rows, cols)?;
        fill_uniform(&mut m, spec)?;
        Ok(m)
    }

    /// Copies `data` (row-major, `rows * cols` long) into a new matrix.
    pub fn from_slice(rows: usize, cols: usize, data: &[f32]) -> Result<Self> {
        let mut m = alloc_matrix(rows, cols)?;
        if data.len() != m.len {
            return Err(Error::argument(format!(
                "expected {} values for a {rows}x{cols} matrix, got {}",
                m.len,
                data.len()
            )));
        }
        m.as_mut_slice().copy_from_slice(data);
        Ok(m)
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = alloc_matrix(rows.len(), cols)?;
        for (n, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::argument(format!(
                    "row {n} has {} values, expected {cols}",
                    r.len()
                )));
            }
            m.row_mut(n).copy_from_slice(r);
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Total number of elements, `rows * cols`.
    pub fn len(&self) -> usize {
        self.len
    }

    /// Always false: a matrix has at least one element.
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f32] {
        // SAFETY: `Block` is `repr(C)` over `[f32; 8]`, so the block vector is a
        // contiguous run of `blocks.len() * 8 >= len` initialized f32 values.
        unsafe { std::slice::from_raw_parts(self.blocks.as_ptr().cast::<f32>(), self.len) }
    }

    pub fn as_mut_slice(&mut self) -> &mut [f32] {
        // SAFETY: see `as_slice`; `&mut self` guarantees exclusive access.
        unsafe { std::slice::from_raw_parts_mut(self.blocks.as_mut_ptr().cast::<f32>(), self.len) }
    }

    pub fn row(&self, n: usize) -> &[f32] {
        assert!(n < self.rows, "row {n} out of bounds for {} rows", self.rows);
        &self.as_slice()[n * self.cols..(n + 1) * self.cols]
    }

    pub fn row_mut(&mut self, n: usize) -> &mut [f32] {
        assert!(n < self.rows, "row {n} out of bounds for {} rows", self.rows);
        let cols = self.cols;
        &mut self.as_mut_slice()[n * cols..(n + 1) * cols]
    }

    pub fn get(&self, n: usize, c: usize) -> f32 {
        assert!(c < self.cols, "column {c} out of bounds for {} cols", self.cols);
        self.row(n)[c]
    }

    pub fn set(&mut self, n: usize, c: usize, v: f32) {
        assert!(c < self.cols, "column {c} out of bounds for {} cols", self.cols);
        self.row_mut(n)[c] = v;
    }

    pub fn row_iter(&self) -> std::slice::ChunksExact<'_, f32> {
        self.as_slice().chunks_exact(self.cols)
    }

    pub fn row_iter_mut(&mut self) -> std::slice::ChunksExactMut<'_, f32> {
        let cols = self.cols;
        self.as_mut_slice().chunks_exact_mut(cols)
    }

    /// Start address of the buffer, for alignment checks.
    pub fn as_ptr(&self) -> *const f32 {
        self.blocks.as_ptr().cast()
    }

    /// Size of the element data in bytes.
    pub fn byte_len(&self) -> usize {
        self.len * std::mem::size_of::<f32>()
    }
}
