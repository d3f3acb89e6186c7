//! Rectangular frames and the jitter transform.
//!
//! A frame of extent `(m, n)` holds `(m+1) x (n+1)` values stored row-major,
//! with `s1` indexing rows and `s2` indexing columns.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A frame of finite real measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealGrid {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

/// A frame of nonnegative integer measurements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountGrid {
    rows: usize,
    cols: usize,
    values: Vec<u64>,
}

fn check_shape(rows: usize, cols: usize, len: usize) -> Result<()> {
    if rows < 2 || cols < 2 {
        return Err(Error::Dimension(format!(
            "frame is {rows}x{cols}, need at least 2x2"
        )));
    }
    if rows.checked_mul(cols) != Some(len) {
        return Err(Error::Dimension(format!(
            "{len} values do not fill a {rows}x{cols} frame"
        )));
    }
    Ok(())
}

impl RealGrid {
    /// Builds a frame from row-major values, rejecting small or non-finite input.
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        check_shape(rows, cols, values.len())?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: i / cols, col: i % cols });
        }
        Ok(Self { rows, cols, values })
    }

    /// Internal constructor for generators whose output is finite by construction.
    pub(crate) fn from_raw(rows: usize, cols: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(rows * cols, values.len());
        Self { rows, cols, values }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Largest row index `m`.
    pub fn m(&self) -> usize {
        self.rows - 1
    }

    /// Largest column index `n`.
    pub fn n(&self) -> usize {
        self.cols - 1
    }

    pub fn get(&self, s1: usize, s2: usize) -> f64 {
        self.values[s1 * self.cols + s2]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn row(&self, s1: usize) -> &[f64] {
        &self.values[s1 * self.cols..(s1 + 1) * self.cols]
    }

    /// Applies `f` to every cell, keeping the shape.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.rows, self.cols, self.values.iter().map(|&v| f(v)).collect())
    }
}

impl CountGrid {
    pub fn new(rows: usize, cols: usize, values: Vec<u64>) -> Result<Self> {
        check_shape(rows, cols, values.len())?;
        Ok(Self { rows, cols, values })
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, values: Vec<u64>) -> Self {
        debug_assert_eq!(rows * cols, values.len());
        Self { rows, cols, values }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn m(&self) -> usize {
        self.rows - 1
    }

    pub fn n(&self) -> usize {
        self.cols - 1
    }

    pub fn get(&self, s1: usize, s2: usize) -> u64 {
        self.values[s1 * self.cols + s2]
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    /// The same counts as real values, without jitter. Ties are then
    /// resolved by position when patterns are extracted.
    pub fn to_real(&self) -> RealGrid {
        RealGrid::from_raw(
            self.rows,
            self.cols,
            self.values.iter().map(|&v| v as f64).collect(),
        )
    }
}

/// Validates a nested matrix and converts it into a [`RealGrid`].
pub fn validate_grid(values: &[Vec<f64>]) -> Result<RealGrid> {
    let rows = values.len();
    let cols = values.first().map_or(0, Vec::len);
    if values.iter().any(|r| r.len() != cols) {
        return Err(Error::Dimension("rows have unequal lengths".into()));
    }
    RealGrid::new(rows, cols, values.concat())
}

/// A single frame of either kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Frame {
    Real(RealGrid),
    Count(CountGrid),
}

impl Frame {
    pub fn rows(&self) -> usize {
        match self {
            Frame::Real(g) => g.rows(),
            Frame::Count(g) => g.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Frame::Real(g) => g.cols(),
            Frame::Count(g) => g.cols(),
        }
    }

    /// Converts to a real frame, jittering count frames when a scale is given.
    pub fn to_real<R: Rng + ?Sized>(&self, jitter_scale: Option<f64>, rng: &mut R) -> Result<RealGrid> {
        match (self, jitter_scale) {
            (Frame::Real(g), _) => Ok(g.clone()),
            (Frame::Count(g), Some(scale)) => jitter(g, scale, rng),
            (Frame::Count(g), None) => Ok(g.to_real()),
        }
    }
}

/// An ordered sequence of frames sharing one shape.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameStream {
    frames: Vec<Frame>,
}

impl FrameStream {
    pub fn new(frames: Vec<Frame>) -> Result<Self> {
        if let Some(first) = frames.first() {
            let shape = (first.rows(), first.cols());
            for (i, f) in frames.iter().enumerate() {
                if (f.rows(), f.cols()) != shape {
                    return Err(Error::Dimension(format!(
                        "frame at t={} is {}x{}, expected {}x{}",
                        i + 1,
                        f.rows(),
                        f.cols(),
                        shape.0,
                        shape.1
                    )));
                }
            }
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Draws from the open unit interval by rejecting an exact zero.
pub(crate) fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Adds `scale * U` with `U ~ U(0,1)` to every count, breaking ties at random
/// while preserving every strict order when `scale <= 1`.
pub fn jitter<R: Rng + ?Sized>(x: &CountGrid, scale: f64, rng: &mut R) -> Result<RealGrid> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Scale(scale));
    }
    let values = x
        .values
        .iter()
        .map(|&v| v as f64 + scale * open_unit(rng))
        .collect();
    Ok(RealGrid::from_raw(x.rows, x.cols, values))
}
