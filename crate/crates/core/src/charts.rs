//! EWMA and Shewhart control charts on type frequencies and spatial
//! autocorrelations, including delayed and Box-Pierce variants.
//!
//! Type channels are smoothed as probability vectors and the plotted
//! statistic is evaluated on the smoothed vector. An alarm is raised when
//! `|smoothed - center| > limit`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::RealGrid;
use crate::sop::{type_counts, AcfFrame, Delay, SpatialLag};

/// What a chart plots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ChartKind {
    TauHat,
    KappaHat,
    TauTilde,
    KappaTilde,
    Acf,
    TauTildeDelayed(Delay),
    AcfLagged(SpatialLag),
    TauTildeBp(usize),
    AcfBp(usize),
}

impl ChartKind {
    pub fn is_type_chart(&self) -> bool {
        !matches!(self, ChartKind::Acf | ChartKind::AcfLagged(_) | ChartKind::AcfBp(_))
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ChartKind::TauTildeDelayed(d) if d.d1 == 0 || d.d2 == 0 => {
                Err(Error::Config(format!("delay ({},{}) must be positive", d.d1, d.d2)))
            }
            ChartKind::AcfLagged(h) if h.h1 == 0 && h.h2 == 0 => {
                Err(Error::Config("spatial lag (0,0) is not allowed".into()))
            }
            ChartKind::TauTildeBp(0) | ChartKind::AcfBp(0) => {
                Err(Error::Config("Box-Pierce window must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }

    fn delays(&self) -> Vec<Delay> {
        match *self {
            ChartKind::TauTildeDelayed(d) => vec![d],
            ChartKind::TauTildeBp(w) => (1..=w)
                .flat_map(|d1| (1..=w).map(move |d2| Delay { d1, d2 }))
                .collect(),
            _ => vec![Delay::UNIT],
        }
    }

    fn lags(&self) -> Vec<SpatialLag> {
        match *self {
            ChartKind::AcfLagged(h) => vec![h],
            ChartKind::AcfBp(w) => SpatialLag::unique_window(w),
            _ => vec![SpatialLag::UNIT],
        }
    }
}

impl fmt::Display for ChartKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChartKind::TauHat => write!(f, "tau_hat"),
            ChartKind::KappaHat => write!(f, "kappa_hat"),
            ChartKind::TauTilde => write!(f, "tau_tilde"),
            ChartKind::KappaTilde => write!(f, "kappa_tilde"),
            ChartKind::Acf => write!(f, "acf"),
            ChartKind::TauTildeDelayed(d) => write!(f, "tau_tilde_delayed:{},{}", d.d1, d.d2),
            ChartKind::AcfLagged(h) => write!(f, "acf_lagged:{},{}", h.h1, h.h2),
            ChartKind::TauTildeBp(w) => write!(f, "tau_tilde_bp:{w}"),
            ChartKind::AcfBp(w) => write!(f, "acf_bp:{w}"),
        }
    }
}

impl FromStr for ChartKind {
    type Err = Error;

    /// Parses names like `tau_tilde`, `tau_tilde_delayed:2,2`, `acf_lagged:1,-1`
    /// or `acf_bp:2`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unrecognized chart kind `{s}`"));
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let pair = |a: &str| -> Result<(i64, i64)> {
            let (x, y) = a.split_once(',').ok_or_else(bad)?;
            Ok((
                x.trim().parse().map_err(|_| bad())?,
                y.trim().parse().map_err(|_| bad())?,
            ))
        };
        let kind = match (name, arg) {
            ("tau_hat", None) => ChartKind::TauHat,
            ("kappa_hat", None) => ChartKind::KappaHat,
            ("tau_tilde", None) => ChartKind::TauTilde,
            ("kappa_tilde", None) => ChartKind::KappaTilde,
            ("acf", None) => ChartKind::Acf,
            ("tau_tilde_delayed", Some(a)) => {
                let (d1, d2) = pair(a)?;
                if d1 < 1 || d2 < 1 {
                    return Err(bad());
                }
                ChartKind::TauTildeDelayed(Delay { d1: d1 as usize, d2: d2 as usize })
            }
            ("acf_lagged", Some(a)) => {
                let (h1, h2) = pair(a)?;
                ChartKind::AcfLagged(SpatialLag { h1, h2 })
            }
            ("tau_tilde_bp", Some(a)) => ChartKind::TauTildeBp(a.parse().map_err(|_| bad())?),
            ("acf_bp", Some(a)) => ChartKind::AcfBp(a.parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        };
        kind.validate()?;
        Ok(kind)
    }
}

impl TryFrom<String> for ChartKind {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ChartKind> for String {
    fn from(k: ChartKind) -> String {
        k.to_string()
    }
}

/// Starting values of the smoothed channels.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartInit {
    /// `(1/3, 1/3, 1/3)` for type channels and 0 for correlation channels.
    #[default]
    IcIid,
    /// The same probability vector for every type channel.
    Types([f64; 3]),
    /// The same value for every correlation channel.
    Acf(f64),
    /// Start so that the plotted statistic equals this value, e.g. a Phase-I mean.
    Statistic(f64),
}

fn default_center() -> f64 {
    0.0
}

/// Full specification of one chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartConfig {
    pub kind: ChartKind,
    pub lambda: f64,
    pub limit: f64,
    #[serde(default = "default_center")]
    pub center: f64,
    #[serde(default)]
    pub init: ChartInit,
}

impl ChartConfig {
    /// An in-control chart centered at zero.
    pub fn new(kind: ChartKind, lambda: f64, limit: f64) -> Self {
        Self { kind, lambda, limit, center: 0.0, init: ChartInit::IcIid }
    }

    pub fn validate(&self) -> Result<()> {
        self.kind.validate()?;
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::Config(format!("lambda {} outside (0, 1]", self.lambda)));
        }
        if !(self.limit >= 0.0 && self.limit.is_finite()) {
            return Err(Error::Config(format!("limit {} must be finite and nonnegative", self.limit)));
        }
        if !self.center.is_finite() {
            return Err(Error::Config("center must be finite".into()));
        }
        Ok(())
    }
}

/// One plotted point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub t: u64,
    pub raw: f64,
    pub smoothed: f64,
    pub center: f64,
    pub limit: f64,
    pub alarm: bool,
}

/// `lambda * obs + (1 - lambda) * prev`.
#[inline]
pub fn ewma_step(prev: f64, obs: f64, lambda: f64) -> f64 {
    lambda * obs + (1.0 - lambda) * prev
}

/// Componentwise [`ewma_step`]; maps the simplex into itself.
#[inline]
pub fn ewma_step_vec(prev: [f64; 3], obs: [f64; 3], lambda: f64) -> [f64; 3] {
    [
        ewma_step(prev[0], obs[0], lambda),
        ewma_step(prev[1], obs[1], lambda),
        ewma_step(prev[2], obs[2], lambda),
    ]
}

/// Sum of squared deviations of the delayed `tau_tilde` channels from their
/// in-control values.
pub fn bp_sop_stat(tau_tilde_deviations: &[f64]) -> f64 {
    tau_tilde_deviations.iter().map(|x| x * x).sum()
}

/// Sum over the full lag window given the deviations of the unique lags only;
/// each unique lag stands for itself and its negation.
pub fn bp_acf_stat(unique_deviations: &[f64]) -> f64 {
    2.0 * unique_deviations.iter().map(|x| x * x).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
enum Channels {
    Types { delays: Vec<Delay>, p: Vec<[f64; 3]>, reference: Vec<f64> },
    Acf { lags: Vec<SpatialLag>, rho: Vec<f64>, reference: Vec<f64> },
}

/// Mutable state of one chart over one stream.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartState {
    cfg: ChartConfig,
    t: u64,
    shape: Option<(usize, usize)>,
    channels: Channels,
}

/// Vector whose plotted statistic equals `mu`, spreading the remaining mass evenly.
fn types_for_statistic(kind: ChartKind, mu: f64) -> [f64; 3] {
    const THIRD: f64 = 1.0 / 3.0;
    match kind {
        ChartKind::TauHat => {
            let p1 = mu + THIRD;
            [p1, (1.0 - p1) / 2.0, (1.0 - p1) / 2.0]
        }
        ChartKind::KappaHat => [THIRD, (2.0 * THIRD + mu) / 2.0, (2.0 * THIRD - mu) / 2.0],
        ChartKind::KappaTilde => [(2.0 * THIRD + mu) / 2.0, (2.0 * THIRD - mu) / 2.0, THIRD],
        _ => {
            let p3 = mu + THIRD;
            [(1.0 - p3) / 2.0, (1.0 - p3) / 2.0, p3]
        }
    }
}

fn is_simplex(p: &[f64; 3]) -> bool {
    p.iter().all(|v| (0.0..=1.0).contains(v)) && (p.iter().sum::<f64>() - 1.0).abs() <= 1e-9
}

fn plotted_of_types(kind: ChartKind, p: [f64; 3]) -> f64 {
    match kind {
        ChartKind::TauHat => p[0] - 1.0 / 3.0,
        ChartKind::KappaHat => p[1] - p[2],
        ChartKind::KappaTilde => p[0] - p[1],
        _ => p[2] - 1.0 / 3.0,
    }
}

pub fn init_chart(cfg: ChartConfig) -> Result<ChartState> {
    ChartState::new(cfg)
}

pub fn update_chart(state: &mut ChartState, frame: &RealGrid) -> Result<ChartPoint> {
    state.update(frame)
}

impl ChartState {
    pub fn new(cfg: ChartConfig) -> Result<Self> {
        cfg.validate()?;
        let kind = cfg.kind;
        let bp = matches!(kind, ChartKind::TauTildeBp(_) | ChartKind::AcfBp(_));
        let channels = if kind.is_type_chart() {
            let p0 = match cfg.init {
                ChartInit::IcIid => [1.0 / 3.0; 3],
                ChartInit::Types(p) => p,
                ChartInit::Statistic(_) if bp => {
                    return Err(Error::Config("Box-Pierce charts need a vector initialization".into()))
                }
                ChartInit::Statistic(mu) => types_for_statistic(kind, mu),
                ChartInit::Acf(_) => {
                    return Err(Error::Config("correlation init on a type chart".into()))
                }
            };
            if !is_simplex(&p0) {
                return Err(Error::Config(format!("initial vector {p0:?} is not in the simplex")));
            }
            let delays = kind.delays();
            let reference = vec![p0[2] - 1.0 / 3.0; delays.len()];
            Channels::Types { p: vec![p0; delays.len()], delays, reference }
        } else {
            let r0 = match cfg.init {
                ChartInit::IcIid => 0.0,
                ChartInit::Acf(v) => v,
                ChartInit::Statistic(v) if !bp => v,
                _ => return Err(Error::Config("invalid initialization for a correlation chart".into())),
            };
            if !(-1.0..=1.0).contains(&r0) {
                return Err(Error::Config(format!("initial correlation {r0} outside [-1, 1]")));
            }
            let lags = kind.lags();
            Channels::Acf { rho: vec![r0; lags.len()], reference: vec![r0; lags.len()], lags }
        };
        Ok(Self { cfg, t: 0, shape: None, channels })
    }

    pub fn config(&self) -> &ChartConfig {
        &self.cfg
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    /// Smoothed type vectors, one per delay, for type charts.
    pub fn type_channels(&self) -> Option<&[[f64; 3]]> {
        match &self.channels {
            Channels::Types { p, .. } => Some(p),
            Channels::Acf { .. } => None,
        }
    }

    /// Smoothed correlations, one per unique lag, for correlation charts.
    pub fn acf_channels(&self) -> Option<&[f64]> {
        match &self.channels {
            Channels::Acf { rho, .. } => Some(rho),
            Channels::Types { .. } => None,
        }
    }

    /// Current value of the plotted statistic.
    pub fn statistic(&self) -> f64 {
        match &self.channels {
            Channels::Types { p, reference, .. } => types_statistic(self.cfg.kind, p, reference),
            Channels::Acf { rho, reference, .. } => acf_statistic(self.cfg.kind, rho, reference),
        }
    }

    /// Consumes one frame and returns the new chart point. On error the
    /// state is left unchanged.
    pub fn update(&mut self, frame: &RealGrid) -> Result<ChartPoint> {
        let shape = (frame.rows(), frame.cols());
        if let Some(expected) = self.shape {
            if expected != shape {
                return Err(Error::Dimension(format!(
                    "frame is {}x{}, stream started with {}x{}",
                    shape.0, shape.1, expected.0, expected.1
                )));
            }
        }
        let (lambda, kind) = (self.cfg.lambda, self.cfg.kind);
        let raw = match &mut self.channels {
            Channels::Types { delays, p, reference } => {
                let obs = delays
                    .iter()
                    .map(|&d| type_counts(frame, d).map(|c| c.frequencies().p()))
                    .collect::<Result<Vec<_>>>()?;
                for (cur, o) in p.iter_mut().zip(&obs) {
                    *cur = ewma_step_vec(*cur, *o, lambda);
                }
                types_statistic(kind, &obs, reference)
            }
            Channels::Acf { lags, rho, reference } => {
                let acf = AcfFrame::new(frame)?;
                let obs = lags.iter().map(|&h| acf.acf(h)).collect::<Result<Vec<_>>>()?;
                for (cur, o) in rho.iter_mut().zip(&obs) {
                    *cur = ewma_step(*cur, *o, lambda);
                }
                acf_statistic(kind, &obs, reference)
            }
        };
        self.shape = Some(shape);
        self.t += 1;
        let smoothed = self.statistic();
        Ok(ChartPoint {
            t: self.t,
            raw,
            smoothed,
            center: self.cfg.center,
            limit: self.cfg.limit,
            alarm: (smoothed - self.cfg.center).abs() > self.cfg.limit,
        })
    }
}

fn types_statistic(kind: ChartKind, p: &[[f64; 3]], reference: &[f64]) -> f64 {
    match kind {
        ChartKind::TauTildeBp(_) => {
            let dev: Vec<f64> = p.iter().zip(reference).map(|(v, r)| v[2] - 1.0 / 3.0 - r).collect();
            bp_sop_stat(&dev)
        }
        kind => plotted_of_types(kind, p[0]),
    }
}

fn acf_statistic(kind: ChartKind, rho: &[f64], reference: &[f64]) -> f64 {
    match kind {
        ChartKind::AcfBp(_) => {
            let dev: Vec<f64> = rho.iter().zip(reference).map(|(v, r)| v - r).collect();
            bp_acf_stat(&dev)
        }
        _ => rho[0],
    }
}
