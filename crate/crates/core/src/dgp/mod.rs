//! Spatial data-generating processes and additive-outlier contamination.
//!
//! Unilateral recursions run row-major over a zero-initialized grid that is
//! extended to the top and left by a burn-in margin; the bottom-right block
//! is returned. Moving-average models draw an innovation field one lag
//! larger than the frame. The bilateral autoregression is solved as a
//! linear system on a zero-padded buffer around the frame.

mod marginal;

pub use marginal::{MarginalSpec, Sampler};

use rand::distr::Distribution;
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::{Binomial, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{CountGrid, Frame, RealGrid};

/// Largest total path weight the burn-in may leave from the zero boundary.
const BURN_WEIGHT: f64 = 1e-9;

fn standard_normal() -> MarginalSpec {
    MarginalSpec::STANDARD_NORMAL
}

fn poisson5() -> MarginalSpec {
    MarginalSpec::Poisson { mu: 5.0 }
}

fn one() -> usize {
    1
}

fn default_buffer() -> usize {
    25
}

fn default_tol() -> f64 {
    1e-8
}

/// The process without contamination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum DgpModel {
    Iid {
        marginal: MarginalSpec,
    },
    /// `Y = a1 Y(t1-L, t2) + a2 Y(t1, t2-L) + a3 Y(t1-L, t2-L) + e`.
    Sar {
        alpha: [f64; 3],
        #[serde(default = "one")]
        lag: usize,
        /// Burn-in margin in cells; `None` derives it from the coefficients.
        #[serde(default)]
        burn: Option<usize>,
        #[serde(default = "standard_normal")]
        innovation: MarginalSpec,
    },
    /// Integer counterpart of [`DgpModel::Sar`] with binomial thinning.
    Sinar {
        alpha: [f64; 3],
        #[serde(default = "one")]
        lag: usize,
        #[serde(default)]
        burn: Option<usize>,
        #[serde(default = "poisson5")]
        innovation: MarginalSpec,
    },
    /// `Y = b1 e(t1-L, t2)^a + b2 e(t1, t2-L)^b + b3 e(t1-L, t2-L)^c + e`.
    Sqma {
        beta: [f64; 3],
        powers: [u8; 3],
        #[serde(default = "one")]
        lag: usize,
        #[serde(default = "standard_normal")]
        innovation: MarginalSpec,
    },
    /// Integer counterpart of [`DgpModel::Sqma`] with binomial thinning.
    Sqinma {
        beta: [f64; 3],
        powers: [u8; 3],
        #[serde(default = "one")]
        lag: usize,
        #[serde(default = "poisson5")]
        innovation: MarginalSpec,
    },
    /// `Y = a1 Y(t1-1, t2) + a2 Y(t1, t2-1) + a3 Y(t1, t2+1) + a4 Y(t1+1, t2) + e`.
    BilateralSar {
        a: [f64; 4],
        #[serde(default = "default_buffer")]
        buffer: usize,
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default = "standard_normal")]
        innovation: MarginalSpec,
    },
    /// `Y = b1 e(t1-1, t2-1)^a + b2 e(t1+1, t2-1)^b + b3 e(t1+1, t2+1)^c + b4 e(t1-1, t2+1)^d + e`.
    BilateralSqma {
        b: [f64; 4],
        powers: [u8; 4],
        #[serde(default = "standard_normal")]
        innovation: MarginalSpec,
    },
}

/// Additive outliers placed on a fixed fraction of cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContaminationSpec {
    pub fraction: f64,
    pub model: ContaminationModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContaminationModel {
    FixedAdd { c: f64 },
    SymmetricAdd { c: f64 },
    PoissonAdd { nu: f64 },
}

/// A process plus an optional contamination overlay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    #[serde(flatten)]
    pub model: DgpModel,
    #[serde(default)]
    pub contamination: Option<ContaminationSpec>,
}

impl From<DgpModel> for DgpSpec {
    fn from(model: DgpModel) -> Self {
        Self { model, contamination: None }
    }
}

impl DgpSpec {
    pub fn iid(marginal: MarginalSpec) -> Self {
        DgpModel::Iid { marginal }.into()
    }

    pub fn sar(alpha: [f64; 3]) -> Self {
        DgpModel::Sar { alpha, lag: 1, burn: None, innovation: standard_normal() }.into()
    }

    pub fn with_contamination(mut self, c: ContaminationSpec) -> Self {
        self.contamination = Some(c);
        self
    }

    /// Validates parameters and builds the samplers.
    pub fn prepare(&self) -> Result<PreparedDgp> {
        let m = &self.model;
        let innovation = match m {
            DgpModel::Iid { marginal } => marginal.sampler()?,
            DgpModel::Sar { alpha, lag, innovation, .. } => {
                check_lag(*lag)?;
                check_abs_sum(alpha)?;
                innovation.sampler()?
            }
            DgpModel::Sinar { alpha, lag, innovation, .. } => {
                check_lag(*lag)?;
                check_thinning(alpha, false)?;
                check_abs_sum(alpha)?;
                integer_sampler(innovation)?
            }
            DgpModel::Sqma { powers, lag, innovation, .. } => {
                check_lag(*lag)?;
                check_powers(powers)?;
                innovation.sampler()?
            }
            DgpModel::Sqinma { beta, powers, lag, innovation } => {
                check_lag(*lag)?;
                check_powers(powers)?;
                check_thinning(beta, true)?;
                integer_sampler(innovation)?
            }
            DgpModel::BilateralSar { a, tol, innovation, .. } => {
                check_abs_sum(a)?;
                if tol.is_nan() || *tol <= 0.0 {
                    return Err(Error::Param(format!("tolerance {tol} must be positive")));
                }
                innovation.sampler()?
            }
            DgpModel::BilateralSqma { powers, innovation, .. } => {
                check_powers(powers)?;
                innovation.sampler()?
            }
        };
        if let Some(c) = &self.contamination {
            check_contamination(c, self.is_integer())?;
        }
        Ok(PreparedDgp { spec: self.clone(), innovation })
    }

    /// Whether generated frames are count frames.
    pub fn is_integer(&self) -> bool {
        match &self.model {
            DgpModel::Iid { marginal } => marginal.is_integer(),
            DgpModel::Sinar { .. } | DgpModel::Sqinma { .. } => true,
            _ => false,
        }
    }

    /// Convenience wrapper around [`PreparedDgp::generate`].
    pub fn generate<R: Rng + ?Sized>(&self, m: usize, n: usize, rng: &mut R) -> Result<Frame> {
        self.prepare()?.generate(m, n, rng)
    }
}

fn check_lag(lag: usize) -> Result<()> {
    if lag == 0 {
        return Err(Error::Param("lag must be at least 1".into()));
    }
    Ok(())
}

fn check_abs_sum(coef: &[f64]) -> Result<()> {
    let s: f64 = coef.iter().map(|c| c.abs()).sum();
    if s.is_nan() || s >= 1.0 || coef.iter().any(|c| !c.is_finite()) {
        return Err(Error::Stationarity(format!("sum of |coefficients| {s} must be below 1")));
    }
    Ok(())
}

fn check_thinning(coef: &[f64], allow_one: bool) -> Result<()> {
    for &c in coef {
        let ok = if allow_one { (0.0..=1.0).contains(&c) } else { (0.0..1.0).contains(&c) };
        if !ok {
            return Err(Error::Param(format!("thinning probability {c} out of range")));
        }
    }
    Ok(())
}

fn check_powers(powers: &[u8]) -> Result<()> {
    if powers.iter().any(|p| !(1..=2).contains(p)) {
        return Err(Error::Param(format!("powers {powers:?} must be 1 or 2")));
    }
    Ok(())
}

fn integer_sampler(spec: &MarginalSpec) -> Result<Sampler> {
    if !spec.is_integer() {
        return Err(Error::Param(format!("count model needs an integer innovation, got {spec:?}")));
    }
    spec.sampler()
}

fn check_contamination(c: &ContaminationSpec, integer: bool) -> Result<()> {
    if !(0.0..=1.0).contains(&c.fraction) {
        return Err(Error::Param(format!("contamination fraction {} outside [0, 1]", c.fraction)));
    }
    match c.model {
        ContaminationModel::PoissonAdd { nu } if !(nu > 0.0 && nu.is_finite()) => {
            Err(Error::Param(format!("Poisson contamination mean {nu} must be positive")))
        }
        ContaminationModel::PoissonAdd { .. } if !integer => {
            Err(Error::Model("Poisson contamination applies to count frames only".into()))
        }
        ContaminationModel::FixedAdd { c } | ContaminationModel::SymmetricAdd { c } if !c.is_finite() => {
            Err(Error::Param("contamination size must be finite".into()))
        }
        ContaminationModel::SymmetricAdd { .. } if integer => {
            Err(Error::Model("symmetric contamination can make counts negative".into()))
        }
        ContaminationModel::FixedAdd { c } if integer && (c < 0.0 || c.fract() != 0.0) => {
            Err(Error::Model("fixed contamination of counts must be a nonnegative integer".into()))
        }
        _ => Ok(()),
    }
}

/// A validated process ready for repeated sampling.
#[derive(Debug, Clone)]
pub struct PreparedDgp {
    spec: DgpSpec,
    innovation: Sampler,
}

impl PreparedDgp {
    pub fn spec(&self) -> &DgpSpec {
        &self.spec
    }

    /// Draws one frame of extent `(m, n)`.
    pub fn generate<R: Rng + ?Sized>(&self, m: usize, n: usize, rng: &mut R) -> Result<Frame> {
        if m < 1 || n < 1 {
            return Err(Error::Dimension(format!("extent ({m},{n}) needs m, n >= 1")));
        }
        let inn = &self.innovation;
        let frame = match &self.spec.model {
            DgpModel::Iid { .. } => {
                if inn.is_integer() {
                    let v = (0..(m + 1) * (n + 1)).map(|_| inn.count(rng)).collect();
                    Frame::Count(CountGrid::from_raw(m + 1, n + 1, v))
                } else {
                    let v = (0..(m + 1) * (n + 1)).map(|_| inn.real(rng)).collect();
                    Frame::Real(RealGrid::from_raw(m + 1, n + 1, v))
                }
            }
            DgpModel::Sar { alpha, lag, burn, .. } => {
                let b = burn.unwrap_or_else(|| auto_burn(alpha) * lag);
                Frame::Real(sar_recursion(alpha, *lag, m, n, b, inn, rng))
            }
            DgpModel::Sinar { alpha, lag, burn, .. } => {
                let b = burn.unwrap_or_else(|| auto_burn(alpha) * lag);
                Frame::Count(sinar_recursion(alpha, *lag, m, n, b, inn, rng))
            }
            DgpModel::Sqma { beta, powers, lag, .. } => {
                Frame::Real(sqma(beta, powers, *lag, m, n, inn, rng))
            }
            DgpModel::Sqinma { beta, powers, lag, .. } => {
                Frame::Count(sqinma(beta, powers, *lag, m, n, inn, rng))
            }
            DgpModel::BilateralSar { a, buffer, tol, .. } => {
                Frame::Real(bilateral_sar(a, m, n, *buffer, *tol, inn, rng)?)
            }
            DgpModel::BilateralSqma { b, powers, .. } => {
                Frame::Real(bilateral_sqma(b, powers, m, n, inn, rng))
            }
        };
        match &self.spec.contamination {
            Some(c) => contaminate(&frame, c, rng),
            None => Ok(frame),
        }
    }
}

/// Number of recursion steps after which the coefficient mass of paths
/// reaching the zero boundary drops below `1e-9`.
///
/// Tracing the recursion back, a path with `j` upward steps carries weight
/// `r^j / (1 - |a2|)` with `r = (|a1| + |a3|) / (1 - |a2|)`, so depth `B`
/// leaves at most `r^B / ((1 - |a2|)(1 - r))`; the same holds for columns.
pub fn auto_burn(alpha: &[f64; 3]) -> usize {
    let [a1, a2, a3] = alpha.map(f64::abs);
    let depth = |r: f64, stay: f64| -> usize {
        if r <= 0.0 {
            return 0;
        }
        let scale = (1.0 - stay) * (1.0 - r);
        ((BURN_WEIGHT * scale).ln() / r.ln()).ceil().max(0.0) as usize
    };
    depth((a1 + a3) / (1.0 - a2), a2).max(depth((a2 + a3) / (1.0 - a1), a1))
}

/// I.i.d. frame from a marginal distribution.
pub fn gen_iid<R: Rng + ?Sized>(marg: &MarginalSpec, m: usize, n: usize, rng: &mut R) -> Result<Frame> {
    DgpSpec::iid(marg.clone()).generate(m, n, rng)
}

/// Unilateral spatial autoregression with standard normal innovations.
pub fn gen_sar<R: Rng + ?Sized>(
    alpha: [f64; 3],
    lag: usize,
    m: usize,
    n: usize,
    burn: Option<usize>,
    rng: &mut R,
) -> Result<RealGrid> {
    let spec: DgpSpec =
        DgpModel::Sar { alpha, lag, burn, innovation: standard_normal() }.into();
    match spec.generate(m, n, rng)? {
        Frame::Real(g) => Ok(g),
        Frame::Count(_) => unreachable!("autoregression yields real frames"),
    }
}

/// `alpha o x`: a Binomial(x, alpha) draw.
pub fn binom_thin<R: Rng + ?Sized>(x: u64, alpha: f64, rng: &mut R) -> Result<u64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Param(format!("thinning probability {alpha} out of range")));
    }
    Ok(thin(x, alpha, rng))
}

#[inline]
fn thin<R: Rng + ?Sized>(x: u64, alpha: f64, rng: &mut R) -> u64 {
    if x == 0 || alpha == 0.0 {
        return 0;
    }
    if alpha == 1.0 {
        return x;
    }
    Binomial::new(x, alpha).expect("validated thinning probability").sample(rng)
}

fn sar_recursion<R: Rng + ?Sized>(
    alpha: &[f64; 3],
    lag: usize,
    m: usize,
    n: usize,
    burn: usize,
    inn: &Sampler,
    rng: &mut R,
) -> RealGrid {
    let rows = m + 1 + burn;
    let cols = n + 1 + burn;
    let mut y = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            let mut v = inn.real(rng);
            if i >= lag {
                v += alpha[0] * y[(i - lag) * cols + j];
                if j >= lag {
                    v += alpha[2] * y[(i - lag) * cols + j - lag];
                }
            }
            if j >= lag {
                v += alpha[1] * y[i * cols + j - lag];
            }
            y[i * cols + j] = v;
        }
    }
    RealGrid::from_raw(m + 1, n + 1, crop(&y, cols, burn, burn, m + 1, n + 1))
}

fn sinar_recursion<R: Rng + ?Sized>(
    alpha: &[f64; 3],
    lag: usize,
    m: usize,
    n: usize,
    burn: usize,
    inn: &Sampler,
    rng: &mut R,
) -> CountGrid {
    let rows = m + 1 + burn;
    let cols = n + 1 + burn;
    let mut x = vec![0u64; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            let up = if i >= lag { x[(i - lag) * cols + j] } else { 0 };
            let left = if j >= lag { x[i * cols + j - lag] } else { 0 };
            let diag = if i >= lag && j >= lag { x[(i - lag) * cols + j - lag] } else { 0 };
            let v = thin(up, alpha[0], rng) + thin(left, alpha[1], rng) + thin(diag, alpha[2], rng);
            x[i * cols + j] = v + inn.count(rng);
        }
    }
    CountGrid::from_raw(m + 1, n + 1, crop(&x, cols, burn, burn, m + 1, n + 1))
}

fn crop<T: Copy>(v: &[T], cols: usize, r0: usize, c0: usize, rows: usize, width: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(rows * width);
    for i in r0..r0 + rows {
        out.extend_from_slice(&v[i * cols + c0..i * cols + c0 + width]);
    }
    out
}

#[inline]
fn pow_real(x: f64, p: u8) -> f64 {
    if p == 2 {
        x * x
    } else {
        x
    }
}

#[inline]
fn pow_count(x: u64, p: u8) -> u64 {
    if p == 2 {
        x * x
    } else {
        x
    }
}

fn sqma<R: Rng + ?Sized>(
    beta: &[f64; 3],
    powers: &[u8; 3],
    lag: usize,
    m: usize,
    n: usize,
    inn: &Sampler,
    rng: &mut R,
) -> RealGrid {
    let cols = n + 1 + lag;
    let e: Vec<f64> = (0..(m + 1 + lag) * cols).map(|_| inn.real(rng)).collect();
    let mut y = Vec::with_capacity((m + 1) * (n + 1));
    for i in lag..m + 1 + lag {
        for j in lag..n + 1 + lag {
            y.push(
                e[i * cols + j]
                    + beta[0] * pow_real(e[(i - lag) * cols + j], powers[0])
                    + beta[1] * pow_real(e[i * cols + j - lag], powers[1])
                    + beta[2] * pow_real(e[(i - lag) * cols + j - lag], powers[2]),
            );
        }
    }
    RealGrid::from_raw(m + 1, n + 1, y)
}

fn sqinma<R: Rng + ?Sized>(
    beta: &[f64; 3],
    powers: &[u8; 3],
    lag: usize,
    m: usize,
    n: usize,
    inn: &Sampler,
    rng: &mut R,
) -> CountGrid {
    let cols = n + 1 + lag;
    let e: Vec<u64> = (0..(m + 1 + lag) * cols).map(|_| inn.count(rng)).collect();
    let mut x = Vec::with_capacity((m + 1) * (n + 1));
    for i in lag..m + 1 + lag {
        for j in lag..n + 1 + lag {
            x.push(
                e[i * cols + j]
                    + thin(pow_count(e[(i - lag) * cols + j], powers[0]), beta[0], rng)
                    + thin(pow_count(e[i * cols + j - lag], powers[1]), beta[1], rng)
                    + thin(pow_count(e[(i - lag) * cols + j - lag], powers[2]), beta[2], rng),
            );
        }
    }
    CountGrid::from_raw(m + 1, n + 1, x)
}

/// Iteration limit of the bilateral fixed-point solver.
const MAX_JACOBI_ITER: usize = 100_000;

/// Solves `Y = A Y + eps` on a `rows x cols` grid with zero exterior by
/// Jacobi iteration, where `A` couples each cell to its upper, left, right
/// and lower neighbours with weights `a`. Iteration stops once the
/// contraction bound guarantees a sup-norm error of at most `tol`.
pub fn solve_bilateral_sar(a: &[f64; 4], eps: &[f64], rows: usize, cols: usize, tol: f64) -> Result<Vec<f64>> {
    check_abs_sum(a)?;
    assert_eq!(eps.len(), rows * cols, "innovation field does not match the grid");
    let s: f64 = a.iter().map(|c| c.abs()).sum();
    let mut y = eps.to_vec();
    if s == 0.0 {
        return Ok(y);
    }
    let factor = s / (1.0 - s);
    let mut next = vec![0.0; rows * cols];
    for _ in 0..MAX_JACOBI_ITER {
        let mut step = 0.0f64;
        for i in 0..rows {
            for j in 0..cols {
                let k = i * cols + j;
                let mut v = eps[k];
                if i > 0 {
                    v += a[0] * y[k - cols];
                }
                if j > 0 {
                    v += a[1] * y[k - 1];
                }
                if j + 1 < cols {
                    v += a[2] * y[k + 1];
                }
                if i + 1 < rows {
                    v += a[3] * y[k + cols];
                }
                step = step.max((v - y[k]).abs());
                next[k] = v;
            }
        }
        std::mem::swap(&mut y, &mut next);
        if factor * step <= tol {
            return Ok(y);
        }
    }
    Err(Error::Convergence(format!("no convergence to {tol} within {MAX_JACOBI_ITER} sweeps")))
}

fn bilateral_sar<R: Rng + ?Sized>(
    a: &[f64; 4],
    m: usize,
    n: usize,
    buffer: usize,
    tol: f64,
    inn: &Sampler,
    rng: &mut R,
) -> Result<RealGrid> {
    let rows = m + 1 + 2 * buffer;
    let cols = n + 1 + 2 * buffer;
    let eps: Vec<f64> = (0..rows * cols).map(|_| inn.real(rng)).collect();
    let y = solve_bilateral_sar(a, &eps, rows, cols, tol)?;
    Ok(RealGrid::from_raw(m + 1, n + 1, crop(&y, cols, buffer, buffer, m + 1, n + 1)))
}

fn bilateral_sqma<R: Rng + ?Sized>(
    b: &[f64; 4],
    powers: &[u8; 4],
    m: usize,
    n: usize,
    inn: &Sampler,
    rng: &mut R,
) -> RealGrid {
    let cols = n + 3;
    let e: Vec<f64> = (0..(m + 3) * cols).map(|_| inn.real(rng)).collect();
    RealGrid::from_raw(m + 1, n + 1, bilateral_sqma_field(b, powers, &e, m, n))
}

/// Applies the bilateral moving-average stencil to an innovation field of
/// `(m+3) x (n+3)` cells.
pub fn bilateral_sqma_field(b: &[f64; 4], powers: &[u8; 4], e: &[f64], m: usize, n: usize) -> Vec<f64> {
    let cols = n + 3;
    assert_eq!(e.len(), (m + 3) * cols, "innovation field does not match the grid");
    let at = |i: usize, j: usize| e[i * cols + j];
    let mut y = Vec::with_capacity((m + 1) * (n + 1));
    for i in 1..=m + 1 {
        for j in 1..=n + 1 {
            y.push(
                at(i, j)
                    + b[0] * pow_real(at(i - 1, j - 1), powers[0])
                    + b[1] * pow_real(at(i + 1, j - 1), powers[1])
                    + b[2] * pow_real(at(i + 1, j + 1), powers[2])
                    + b[3] * pow_real(at(i - 1, j + 1), powers[3]),
            );
        }
    }
    y
}

/// Adds outliers to exactly `round(fraction * N)` distinct cells.
pub fn contaminate<R: Rng + ?Sized>(g: &Frame, spec: &ContaminationSpec, rng: &mut R) -> Result<Frame> {
    check_contamination(spec, matches!(g, Frame::Count(_)))?;
    let total = g.rows() * g.cols();
    let k = (spec.fraction * total as f64).round() as usize;
    let cells = sample_indices(rng, total, k.min(total));
    match g {
        Frame::Real(grid) => {
            let mut v = grid.values().to_vec();
            for i in cells.iter() {
                v[i] += match spec.model {
                    ContaminationModel::FixedAdd { c } => c,
                    ContaminationModel::SymmetricAdd { c } => {
                        if rng.random::<bool>() {
                            c
                        } else {
                            -c
                        }
                    }
                    ContaminationModel::PoissonAdd { .. } => unreachable!("rejected above"),
                };
            }
            Ok(Frame::Real(RealGrid::from_raw(grid.rows(), grid.cols(), v)))
        }
        Frame::Count(grid) => {
            let mut v = grid.values().to_vec();
            let poisson = match spec.model {
                ContaminationModel::PoissonAdd { nu } => {
                    Some(Poisson::new(nu).map_err(|_| Error::Param(format!("Poisson mean {nu}")))?)
                }
                _ => None,
            };
            for i in cells.iter() {
                v[i] += match (spec.model, &poisson) {
                    (ContaminationModel::FixedAdd { c }, _) => c as u64,
                    (_, Some(p)) => p.sample(rng) as u64,
                    _ => unreachable!("rejected above"),
                };
            }
            Ok(Frame::Count(CountGrid::from_raw(grid.rows(), grid.cols(), v)))
        }
    }
}
