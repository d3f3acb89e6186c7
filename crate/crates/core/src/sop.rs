//! Spatial ordinal patterns of 2x2 squares, their types, and the
//! dependence statistics built from type frequencies.
//!
//! The square anchored at `s = (s1, s2)` with delay `d = (d1, d2)` reads
//! `y1 = Y(s1-d1, s2-d2)`, `y2 = Y(s1-d1, s2)`, `y3 = Y(s1, s2-d2)`,
//! `y4 = Y(s1, s2)` row by row. Ties are ranked by position, so the
//! earlier cell receives the lower rank.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::RealGrid;

/// A rank pattern `(r1, r2, r3, r4)`, a permutation of `1..=4` read row by row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sop {
    ranks: [u8; 4],
}

impl Sop {
    pub fn new(ranks: [u8; 4]) -> Result<Self> {
        let mut seen = [false; 4];
        for &r in &ranks {
            if !(1..=4).contains(&r) || seen[(r - 1) as usize] {
                return Err(Error::Param(format!("{ranks:?} is not a permutation of 1..=4")));
            }
            seen[(r - 1) as usize] = true;
        }
        Ok(Self { ranks })
    }

    pub fn ranks(&self) -> [u8; 4] {
        self.ranks
    }

    /// Lehmer code `c0*6 + c1*2 + c2` with `c_k = #{l > k : r_l < r_k}`.
    pub fn lehmer_code(&self) -> usize {
        let r = self.ranks;
        let c0 = (r[1] < r[0]) as usize + (r[2] < r[0]) as usize + (r[3] < r[0]) as usize;
        let c1 = (r[2] < r[1]) as usize + (r[3] < r[1]) as usize;
        let c2 = (r[3] < r[2]) as usize;
        c0 * 6 + c1 * 2 + c2
    }

    /// Inverse of [`Sop::lehmer_code`].
    pub fn from_lehmer_code(code: usize) -> Result<Self> {
        if code >= 24 {
            return Err(Error::Param(format!("Lehmer code {code} out of range")));
        }
        Ok(Self { ranks: decode_lehmer(code) })
    }

    /// All 24 patterns in Lehmer order.
    pub fn all() -> impl Iterator<Item = Sop> {
        (0..24).map(|c| Sop { ranks: decode_lehmer(c) })
    }

    pub fn sop_type(&self) -> SopType {
        type_of_sop(self)
    }
}

impl fmt::Display for Sop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.ranks;
        write!(f, "({},{},{},{})", r[0], r[1], r[2], r[3])
    }
}

const fn decode_lehmer(code: usize) -> [u8; 4] {
    let digits = [code / 6, (code % 6) / 2, code % 2, 0];
    let mut avail = [1u8, 2, 3, 4];
    let mut left = 4;
    let mut out = [0u8; 4];
    let mut k = 0;
    while k < 4 {
        let i = digits[k];
        out[k] = avail[i];
        let mut j = i;
        while j + 1 < left {
            avail[j] = avail[j + 1];
            j += 1;
        }
        left -= 1;
        k += 1;
    }
    out
}

const fn diagonal_partner_rank(ranks: [u8; 4]) -> u8 {
    let mut p = 0;
    while ranks[p] != 4 {
        p += 1;
    }
    ranks[3 - p]
}

const fn build_type_table() -> [u8; 24] {
    let mut table = [0u8; 24];
    let mut c = 0;
    while c < 24 {
        table[c] = diagonal_partner_rank(decode_lehmer(c));
        c += 1;
    }
    table
}

/// Type index `0..3` for every Lehmer code.
const TYPE_BY_LEHMER: [u8; 24] = build_type_table();

/// One of the three pattern types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SopType {
    One = 1,
    Two = 2,
    Three = 3,
}

impl SopType {
    pub fn value(self) -> u8 {
        self as u8
    }

    /// Zero-based index into frequency vectors.
    pub fn index(self) -> usize {
        self as usize - 1
    }

    fn from_value(v: u8) -> Self {
        match v {
            1 => SopType::One,
            2 => SopType::Two,
            _ => SopType::Three,
        }
    }
}

/// The type is the rank sharing a diagonal with rank 4.
pub fn type_of_sop(pi: &Sop) -> SopType {
    SopType::from_value(TYPE_BY_LEHMER[pi.lehmer_code()])
}

#[inline(always)]
fn lehmer_of_values(y: [f64; 4]) -> usize {
    let c0 = (y[1] < y[0]) as usize + (y[2] < y[0]) as usize + (y[3] < y[0]) as usize;
    let c1 = (y[2] < y[1]) as usize + (y[3] < y[1]) as usize;
    let c2 = (y[3] < y[2]) as usize;
    c0 * 6 + c1 * 2 + c2
}

/// Ranks the four values of a square, resolving ties by position.
pub fn sop_of_square(q: [f64; 4]) -> Result<Sop> {
    if let Some(i) = q.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: i / 2, col: i % 2 });
    }
    Ok(Sop { ranks: decode_lehmer(lehmer_of_values(q)) })
}

/// Delay parameters `(d1, d2)`, both at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Delay {
    pub d1: usize,
    pub d2: usize,
}

impl Delay {
    pub const UNIT: Delay = Delay { d1: 1, d2: 1 };

    pub fn new(d1: usize, d2: usize) -> Result<Self> {
        if d1 == 0 || d2 == 0 {
            return Err(Error::Param(format!("delay ({d1},{d2}) must be positive")));
        }
        Ok(Self { d1, d2 })
    }

    /// Checks the delay against a frame of extent `(m, n)`.
    pub fn check(&self, m: usize, n: usize) -> Result<()> {
        if self.d1 == 0 || self.d2 == 0 || self.d1 > m || self.d2 > n {
            return Err(Error::Delay { d1: self.d1, d2: self.d2, m, n });
        }
        Ok(())
    }
}

/// A nonzero spatial lag `(h1, h2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpatialLag {
    pub h1: i64,
    pub h2: i64,
}

impl SpatialLag {
    pub const UNIT: SpatialLag = SpatialLag { h1: 1, h2: 1 };

    pub fn new(h1: i64, h2: i64) -> Result<Self> {
        if h1 == 0 && h2 == 0 {
            return Err(Error::Param("spatial lag (0,0) is not allowed".into()));
        }
        Ok(Self { h1, h2 })
    }

    /// Representative of `{h, -h}` with `h1 > 0`, or `h1 = 0` and `h2 > 0`.
    pub fn canonical(self) -> Self {
        if self.h1 < 0 || (self.h1 == 0 && self.h2 < 0) {
            Self { h1: -self.h1, h2: -self.h2 }
        } else {
            self
        }
    }

    /// The lags of `{-w..w}^2 \ {0}` with one member per `{h, -h}` pair.
    pub fn unique_window(w: usize) -> Vec<SpatialLag> {
        let w = w as i64;
        let mut lags = Vec::with_capacity(((2 * w + 1) * (2 * w + 1) - 1) as usize / 2);
        for h2 in 1..=w {
            lags.push(SpatialLag { h1: 0, h2 });
        }
        for h1 in 1..=w {
            for h2 in -w..=w {
                lags.push(SpatialLag { h1, h2 });
            }
        }
        lags
    }
}

/// Per-type counts over a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TypeCounts(pub [u64; 3]);

impl TypeCounts {
    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn frequencies(&self) -> TypeFrequencies {
        let total = self.total() as f64;
        TypeFrequencies(self.0.map(|c| c as f64 / total))
    }
}

/// A probability vector `(p1, p2, p3)` over the three types.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeFrequencies(pub [f64; 3]);

impl TypeFrequencies {
    /// The in-control vector `(1/3, 1/3, 1/3)`.
    pub const UNIFORM: TypeFrequencies = TypeFrequencies([1.0 / 3.0; 3]);

    pub fn new(p: [f64; 3]) -> Result<Self> {
        let sum: f64 = p.iter().sum();
        if p.iter().any(|v| !(0.0..=1.0).contains(v)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Param(format!("{p:?} is not a probability vector")));
        }
        Ok(Self(p))
    }

    pub fn p(&self) -> [f64; 3] {
        self.0
    }
}

/// The four statistics `tau_hat`, `kappa_hat`, `tau_tilde`, `kappa_tilde`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DependenceStats {
    pub tau_hat: f64,
    pub kappa_hat: f64,
    pub tau_tilde: f64,
    pub kappa_tilde: f64,
}

pub fn dependence_stats(p: &TypeFrequencies) -> DependenceStats {
    let [p1, p2, p3] = p.0;
    DependenceStats {
        tau_hat: p1 - 1.0 / 3.0,
        kappa_hat: p2 - p3,
        tau_tilde: p3 - 1.0 / 3.0,
        kappa_tilde: p1 - p2,
    }
}

/// Counts the types of all `(m-d1+1)(n-d2+1)` delayed squares.
pub fn type_counts(g: &RealGrid, d: Delay) -> Result<TypeCounts> {
    d.check(g.m(), g.n())?;
    let mut counts = [0u64; 3];
    let cols = g.cols();
    let v = g.values();
    for s1 in d.d1..g.rows() {
        let top = &v[(s1 - d.d1) * cols..(s1 - d.d1 + 1) * cols];
        let bottom = &v[s1 * cols..(s1 + 1) * cols];
        for s2 in d.d2..cols {
            let code = lehmer_of_values([top[s2 - d.d2], top[s2], bottom[s2 - d.d2], bottom[s2]]);
            counts[(TYPE_BY_LEHMER[code] - 1) as usize] += 1;
        }
    }
    Ok(TypeCounts(counts))
}

pub fn type_frequencies(g: &RealGrid, d: Delay) -> Result<TypeFrequencies> {
    Ok(type_counts(g, d)?.frequencies())
}

/// Patterns of all delayed squares, row-major over the anchor `s`.
pub fn sops(g: &RealGrid, d: Delay) -> Result<Vec<Sop>> {
    d.check(g.m(), g.n())?;
    let mut out = Vec::with_capacity((g.rows() - d.d1) * (g.cols() - d.d2));
    for s1 in d.d1..g.rows() {
        for s2 in d.d2..g.cols() {
            let q = [
                g.get(s1 - d.d1, s2 - d.d2),
                g.get(s1 - d.d1, s2),
                g.get(s1, s2 - d.d2),
                g.get(s1, s2),
            ];
            out.push(Sop { ranks: decode_lehmer(lehmer_of_values(q)) });
        }
    }
    Ok(out)
}

/// A frame centered at its global mean, ready for repeated ACF evaluation.
#[derive(Debug, Clone)]
pub struct AcfFrame {
    rows: usize,
    cols: usize,
    centered: Vec<f64>,
    denom: f64,
}

impl AcfFrame {
    pub fn new(g: &RealGrid) -> Result<Self> {
        let v = g.values();
        if v.iter().all(|&x| x == v[0]) {
            return Err(Error::Degenerate("constant frame has zero variance".into()));
        }
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let centered: Vec<f64> = v.iter().map(|&x| x - mean).collect();
        let denom = centered.iter().map(|x| x * x).sum();
        Ok(Self { rows: g.rows(), cols: g.cols(), centered, denom })
    }

    /// Sample autocorrelation at lag `h`: the sum of centered products over
    /// the overlap region divided by the full-frame sum of squares.
    pub fn acf(&self, h: SpatialLag) -> Result<f64> {
        let (m, n) = (self.rows - 1, self.cols - 1);
        if h.h1.unsigned_abs() as usize > m || h.h2.unsigned_abs() as usize > n {
            return Err(Error::Overlap { h1: h.h1, h2: h.h2, m, n });
        }
        let h = h.canonical();
        let h1 = h.h1 as usize;
        let a2 = h.h2.unsigned_abs() as usize;
        let width = self.cols - a2;
        let c = &self.centered;
        let mut num = 0.0;
        for s1 in h1..self.rows {
            let cur = &c[s1 * self.cols..(s1 + 1) * self.cols];
            let prev = &c[(s1 - h1) * self.cols..(s1 - h1 + 1) * self.cols];
            let (cur, prev) = if h.h2 >= 0 {
                (&cur[a2..], &prev[..width])
            } else {
                (&cur[..width], &prev[a2..])
            };
            num += cur.iter().zip(prev).map(|(a, b)| a * b).sum::<f64>();
        }
        Ok(num / self.denom)
    }
}

pub fn spatial_acf(g: &RealGrid, h: SpatialLag) -> Result<f64> {
    AcfFrame::new(g)?.acf(h)
}
