//! Run configuration: an optional TOML file overlaid with command-line flags.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;
use sopchart_core::{ChartConfig, ChartInit, ChartKind, DgpSpec};

use crate::error::{CliError, CliResult};

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSection {
    pub kind: Option<ChartKind>,
    pub lambda: Option<f64>,
    pub limit: Option<f64>,
    pub center: Option<f64>,
    pub init: Option<ChartInit>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub chart: ChartSection,
    pub dgp: Option<DgpSpec>,
    pub input: Option<PathBuf>,
    pub pool: Option<PathBuf>,
    pub jitter_scale: Option<f64>,
    pub noise_runs: Option<usize>,
    pub seed: Option<u64>,
    pub replications: Option<u64>,
    pub cap: Option<u64>,
    pub target_arl: Option<f64>,
    pub rel_tol: Option<f64>,
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub frames: Option<usize>,
    pub workers: Option<usize>,
}

/// Flags shared by every subcommand; each overrides the config field of
/// the same name.
#[derive(Debug, Default, Clone, Args)]
pub struct Overrides {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for simulation.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Chart kind, e.g. `tau_tilde`, `tau_tilde_delayed:2,2`, `acf_bp:2`.
    #[arg(long)]
    pub kind: Option<ChartKind>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub limit: Option<f64>,
    #[arg(long)]
    pub center: Option<f64>,
    /// Data-generating process as JSON, e.g. `{"model":"sar","alpha":[0.1,0.1,0.1]}`.
    #[arg(long)]
    pub dgp: Option<String>,
    /// Frame stream (CSV `t,s1,s2,y`, or NDJSON for `.ndjson`/`.jsonl`).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Bootstrap pool: one in-control statistic per line.
    #[arg(long)]
    pub pool: Option<PathBuf>,
    #[arg(long)]
    pub jitter_scale: Option<f64>,
    #[arg(long)]
    pub noise_runs: Option<usize>,
    #[arg(long)]
    pub replications: Option<u64>,
    #[arg(long)]
    pub cap: Option<u64>,
    #[arg(long)]
    pub target_arl: Option<f64>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Lattice extent: frames have `m + 1` rows.
    #[arg(long)]
    pub m: Option<usize>,
    /// Lattice extent: frames have `n + 1` columns.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of frames to simulate.
    #[arg(long)]
    pub frames: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
    }

    /// Reads the config file named by the flags, if any, and applies the flags on top.
    pub fn resolve(o: &Overrides) -> CliResult<Self> {
        let mut c = match &o.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        macro_rules! take {
            ($($field:ident),*) => { $( if o.$field.is_some() { c.$field = o.$field.clone(); } )* };
        }
        take!(seed, workers, input, pool, jitter_scale, noise_runs, replications, cap, target_arl, rel_tol, m, n, frames);
        if o.kind.is_some() {
            c.chart.kind = o.kind;
        }
        if o.lambda.is_some() {
            c.chart.lambda = o.lambda;
        }
        if o.limit.is_some() {
            c.chart.limit = o.limit;
        }
        if o.center.is_some() {
            c.chart.center = o.center;
        }
        if let Some(json) = &o.dgp {
            c.dgp = Some(serde_json::from_str(json).map_err(|e| CliError::invalid(format!("--dgp: {e}")))?);
        }
        Ok(c)
    }

    pub fn seed(&self) -> CliResult<u64> {
        self.seed.ok_or_else(|| CliError::invalid("--seed is required for this command"))
    }

    pub fn extent(&self) -> CliResult<(usize, usize)> {
        match (self.m, self.n) {
            (Some(m), Some(n)) => Ok((m, n)),
            _ => Err(CliError::invalid("lattice extent needs both m and n")),
        }
    }

    pub fn dgp(&self) -> CliResult<&DgpSpec> {
        self.dgp.as_ref().ok_or_else(|| CliError::invalid("no data-generating process configured"))
    }

    /// Chart settings; `limit` may be left out when it is about to be calibrated.
    pub fn chart(&self, need_limit: bool) -> CliResult<ChartConfig> {
        let s = &self.chart;
        let kind = s.kind.ok_or_else(|| CliError::invalid("chart kind is required"))?;
        let lambda = s.lambda.ok_or_else(|| CliError::invalid("chart lambda is required"))?;
        let limit = match (s.limit, need_limit) {
            (Some(l), _) => l,
            (None, false) => 0.0,
            (None, true) => return Err(CliError::invalid("chart limit is required")),
        };
        let cfg = ChartConfig {
            kind,
            lambda,
            limit,
            center: s.center.unwrap_or(0.0),
            init: s.init.unwrap_or_default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
