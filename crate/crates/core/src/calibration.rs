//! Zero-state run lengths, Monte-Carlo ARL estimation and control-limit
//! search.
//!
//! Replication `r` always draws from stream `r` of the master seed, so every
//! estimate is independent of the number of worker threads, and the exact
//! integer sums of run lengths make the reduction order irrelevant.
//!
//! The limit search uses common random numbers. For a fixed replication the
//! run length is the first time the deviation `|statistic - center|` exceeds
//! the limit, which only depends on the times at which the running maximum
//! of the deviation increases. Each replication is simulated once up to an
//! upper bracket and its record path is kept, after which the ARL of any
//! limit inside the bracket is exact and cheap to evaluate.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charts::{ewma_step, ChartConfig, ChartState};
use crate::dgp::{DgpSpec, PreparedDgp};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng, SimRng};

/// Default run-length cap.
pub const DEFAULT_CAP: u64 = 1_000_000;

/// Default number of limit evaluations a search may spend.
pub const DEFAULT_BUDGET: usize = 40;

/// Growth factor of the geometric bracketing grid.
const GROWTH: f64 = 1.2;
/// Safety factor between the pilot-run bracket and the target.
const MARGIN: f64 = 1.15;
/// Replications of the pilot bracketing run.
const PILOT_REPLICATIONS: u64 = 2000;

/// Monte-Carlo estimate of the average run length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArlEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub replications: u64,
    /// Runs stopped at the cap without an alarm.
    pub cap_hits: u64,
}

impl ArlEstimate {
    fn from_sums(r: u64, sum: u128, sum_sq: u128, cap_hits: u64) -> Self {
        let n = r as u128;
        let mean = sum as f64 / r as f64;
        let stderr = if r > 1 {
            let num = n * sum_sq - sum * sum;
            let var = num as f64 / (n * (n - 1)) as f64;
            (var / r as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, stderr, replications: r, cap_hits }
    }
}

/// One evaluated limit of a search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchStep {
    pub limit: f64,
    pub arl: f64,
    pub replications: u64,
}

/// A calibrated limit together with its ARL and the search trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub limit: f64,
    pub achieved_arl: ArlEstimate,
    pub iterations: Vec<SearchStep>,
}

/// In-control statistics from historical frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapPool {
    values: Vec<f64>,
    mean: f64,
}

impl BootstrapPool {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Param("bootstrap pool is empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Param("bootstrap pool contains a non-finite value".into()));
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        Ok(Self { values, mean })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }
}

/// A chart applied to frames from a process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub chart: ChartConfig,
    pub dgp: DgpSpec,
    pub m: usize,
    pub n: usize,
    /// Jitter scale for count frames; `None` ranks raw counts.
    pub jitter_scale: Option<f64>,
}

/// Replication settings shared by every simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub replications: u64,
    pub cap: u64,
    pub master_seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl SimOptions {
    pub fn new(replications: u64, master_seed: u64) -> Self {
        Self { replications, cap: DEFAULT_CAP, master_seed, workers: None }
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Param("need at least one replication".into()));
        }
        if self.cap == 0 {
            return Err(Error::Param("run-length cap must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Param("need at least one worker".into()));
        }
        Ok(())
    }
}

/// Target and tolerance of a limit search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    pub arl0: f64,
    pub rel_tol: f64,
    pub sim: SimOptions,
    pub max_evaluations: usize,
}

impl CalibrationOptions {
    /// Uses the default tolerance for the replication count.
    pub fn new(arl0: f64, sim: SimOptions) -> Self {
        Self { arl0, rel_tol: default_rel_tol(sim.replications), sim, max_evaluations: DEFAULT_BUDGET }
    }
}

/// 1% at a million replications or more, 3% below.
pub fn default_rel_tol(replications: u64) -> f64 {
    if replications >= 1_000_000 {
        0.01
    } else {
        0.03
    }
}

/// A source of deviations `|statistic - center|`, one per inspection.
pub trait Monitor: Sync {
    type Run;

    /// Fresh zero-state run.
    fn start(&self, rng: &mut SimRng) -> Result<Self::Run>;

    /// Advances the run by one inspection and returns the new deviation.
    fn step(&self, run: &mut Self::Run, rng: &mut SimRng) -> Result<f64>;
}

/// A chart fed by simulated frames.
#[derive(Debug, Clone)]
pub struct ChartMonitor {
    chart: ChartConfig,
    dgp: PreparedDgp,
    m: usize,
    n: usize,
    jitter_scale: Option<f64>,
}

impl ChartMonitor {
    pub fn new(s: &Scenario) -> Result<Self> {
        s.chart.validate()?;
        if let Some(scale) = s.jitter_scale {
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(Error::Scale(scale));
            }
        }
        if s.m < 1 || s.n < 1 {
            return Err(Error::Dimension(format!("extent ({},{}) needs m, n >= 1", s.m, s.n)));
        }
        Ok(Self { chart: s.chart, dgp: s.dgp.prepare()?, m: s.m, n: s.n, jitter_scale: s.jitter_scale })
    }
}

impl Monitor for ChartMonitor {
    type Run = ChartState;

    fn start(&self, _rng: &mut SimRng) -> Result<ChartState> {
        ChartState::new(self.chart)
    }

    fn step(&self, run: &mut ChartState, rng: &mut SimRng) -> Result<f64> {
        let frame = self.dgp.generate(self.m, self.n, rng)?;
        let grid = frame.to_real(self.jitter_scale, rng)?;
        let point = run.update(&grid)?;
        Ok((point.smoothed - point.center).abs())
    }
}

/// EWMA of statistics resampled with replacement from a pool, started and
/// centered at the pool mean.
#[derive(Debug, Clone)]
pub struct BootstrapMonitor {
    pool: BootstrapPool,
    lambda: f64,
}

impl BootstrapMonitor {
    pub fn new(pool: BootstrapPool, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::Config(format!("lambda {lambda} outside (0, 1]")));
        }
        Ok(Self { pool, lambda })
    }
}

impl Monitor for BootstrapMonitor {
    type Run = f64;

    fn start(&self, _rng: &mut SimRng) -> Result<f64> {
        Ok(self.pool.mean)
    }

    fn step(&self, run: &mut f64, rng: &mut SimRng) -> Result<f64> {
        let v = self.pool.values[rng.random_range(0..self.pool.values.len())];
        *run = ewma_step(*run, v, self.lambda);
        Ok((*run - self.pool.mean).abs())
    }
}

/// Length of one run and whether it was stopped by the cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunLength {
    pub length: u64,
    pub capped: bool,
}

fn run_once<M: Monitor>(mon: &M, limit: f64, cap: u64, rng: &mut SimRng) -> Result<RunLength> {
    let mut run = mon.start(rng)?;
    for t in 1..=cap {
        if mon.step(&mut run, rng)? > limit {
            return Ok(RunLength { length: t, capped: false });
        }
    }
    Ok(RunLength { length: cap, capped: true })
}

/// Simulates one zero-state run of the scenario's chart.
pub fn run_length(s: &Scenario, cap: u64, rng: &mut SimRng) -> Result<RunLength> {
    if cap == 0 {
        return Err(Error::Param("run-length cap must be at least 1".into()));
    }
    let mon = ChartMonitor::new(s)?;
    run_once(&mon, s.chart.limit, cap, rng)
}

fn in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::Param(format!("cannot start {k} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Run-length statistics for any monitor at a fixed limit.
pub fn estimate_arl_with<M: Monitor>(mon: &M, limit: f64, opts: &SimOptions) -> Result<ArlEstimate> {
    opts.validate()?;
    let runs: Vec<Result<RunLength>> = in_pool(opts.workers, || {
        (0..opts.replications)
            .into_par_iter()
            .map(|r| run_once(mon, limit, opts.cap, &mut stream_rng(opts.master_seed, r)))
            .collect()
    })?;
    let (mut sum, mut sum_sq, mut capped) = (0u128, 0u128, 0u64);
    for run in runs {
        let run = run?;
        let l = run.length as u128;
        sum += l;
        sum_sq += l * l;
        capped += run.capped as u64;
    }
    Ok(ArlEstimate::from_sums(opts.replications, sum, sum_sq, capped))
}

/// ARL of the scenario's chart at its configured limit.
pub fn estimate_arl(s: &Scenario, opts: &SimOptions) -> Result<ArlEstimate> {
    estimate_arl_with(&ChartMonitor::new(s)?, s.chart.limit, opts)
}

/// Times and values at which the running maximum of the deviation rose
/// above `floor`, up to the first value above the simulation bound.
#[derive(Debug, Clone, Default)]
struct RecordPath {
    records: Vec<(u64, f64)>,
    capped: bool,
}

fn record_path<M: Monitor>(mon: &M, bound: f64, floor: f64, cap: u64, rng: &mut SimRng) -> Result<RecordPath> {
    let mut run = mon.start(rng)?;
    let mut path = RecordPath::default();
    let mut best = f64::NEG_INFINITY;
    for t in 1..=cap {
        let dev = mon.step(&mut run, rng)?;
        if dev > best {
            best = dev;
            if dev > floor {
                path.records.push((t, dev));
            }
            if dev > bound {
                return Ok(path);
            }
        }
    }
    path.capped = true;
    Ok(path)
}

/// Record paths of every replication, valid for limits in `[floor, bound]`.
struct PathSet {
    paths: Vec<RecordPath>,
    floor: f64,
    bound: f64,
    cap: u64,
}

impl PathSet {
    fn simulate<M: Monitor>(mon: &M, bound: f64, floor: f64, reps: u64, opts: &SimOptions) -> Result<Self> {
        let paths: Vec<Result<RecordPath>> = in_pool(opts.workers, || {
            (0..reps)
                .into_par_iter()
                .map(|r| record_path(mon, bound, floor, opts.cap, &mut stream_rng(opts.master_seed, r)))
                .collect()
        })?;
        Ok(Self { paths: paths.into_iter().collect::<Result<_>>()?, floor, bound, cap: opts.cap })
    }

    fn arl(&self, limit: f64) -> ArlEstimate {
        debug_assert!(limit >= self.floor && limit <= self.bound);
        let (mut sum, mut sum_sq, mut capped) = (0u128, 0u128, 0u64);
        for p in &self.paths {
            let i = p.records.partition_point(|&(_, d)| d <= limit);
            let l = match p.records.get(i) {
                Some(&(t, _)) => t,
                None => {
                    debug_assert!(p.capped, "limit outside the simulated bracket");
                    capped += 1;
                    self.cap
                }
            };
            sum += l as u128;
            sum_sq += (l as u128) * (l as u128);
        }
        ArlEstimate::from_sums(self.paths.len() as u64, sum, sum_sq, capped)
    }
}

/// Root-mean-square deviation over short pilot runs, used to scale the bracket.
fn pilot_scale<M: Monitor>(mon: &M, seed: u64) -> Result<f64> {
    let mut sum_sq = 0.0;
    let mut count = 0.0;
    for r in 0..32 {
        let mut rng = stream_rng(seed, r);
        let mut run = mon.start(&mut rng)?;
        for _ in 0..64 {
            let d = mon.step(&mut run, &mut rng)?;
            sum_sq += d * d;
            count += 1.0;
        }
    }
    Ok((sum_sq / count).sqrt())
}

struct Search<'a> {
    opts: &'a CalibrationOptions,
    trace: Vec<SearchStep>,
}

impl Search<'_> {
    fn record(&mut self, limit: f64, est: &ArlEstimate) -> Result<()> {
        self.trace.push(SearchStep { limit, arl: est.mean, replications: est.replications });
        if self.trace.len() > self.opts.max_evaluations {
            return Err(Error::NonConvergence(format!(
                "evaluation budget of {} exhausted; trace: {}",
                self.opts.max_evaluations,
                self.describe()
            )));
        }
        Ok(())
    }

    fn within_tol(&self, est: &ArlEstimate) -> bool {
        self.opts.rel_tol > 0.0 && ((est.mean - self.opts.arl0) / self.opts.arl0).abs() <= self.opts.rel_tol
    }

    fn describe(&self) -> String {
        self.trace
            .iter()
            .map(|s| format!("({:.6e}, {:.3})", s.limit, s.arl))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn done(self, limit: f64, est: ArlEstimate) -> CalibrationResult {
        CalibrationResult { limit, achieved_arl: est, iterations: self.trace }
    }
}

/// Finds the limit whose ARL is within `rel_tol` of `arl0` for any monitor.
pub fn calibrate_with<M: Monitor>(mon: &M, opts: &CalibrationOptions) -> Result<CalibrationResult> {
    let sim = &opts.sim;
    sim.validate()?;
    if !(opts.arl0 > 1.0 && opts.arl0.is_finite()) {
        return Err(Error::Param(format!("target ARL {} must exceed 1", opts.arl0)));
    }
    if opts.rel_tol.is_nan() || opts.rel_tol < 0.0 {
        return Err(Error::Param(format!("tolerance {} must be nonnegative", opts.rel_tol)));
    }
    if opts.arl0 > sim.cap as f64 {
        return Err(Error::Bracket(format!("target {} exceeds the cap {}", opts.arl0, sim.cap)));
    }
    let arl0 = opts.arl0;
    let mut search = Search { opts, trace: Vec::new() };

    let scale = pilot_scale(mon, derive_seed(sim.master_seed, 1))?;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Bracket("the monitored statistic never leaves its center".into()));
    }

    // Pilot bracket on a subset of the streams.
    let pilot_reps = sim.replications.min(PILOT_REPLICATIONS);
    let upper_goal = (arl0 * MARGIN).min(sim.cap as f64);
    let mut hi = scale;
    let pilot = loop {
        let set = PathSet::simulate(mon, hi, 0.0, pilot_reps, sim)?;
        let est = set.arl(hi);
        search.record(hi, &est)?;
        if est.mean >= upper_goal {
            break set;
        }
        hi *= GROWTH;
    };
    let mut lo = hi;
    loop {
        lo /= 1.05;
        if lo < hi * 1e-12 {
            return Err(Error::Bracket("ARL stays above the target for limits near zero".into()));
        }
        let est = pilot.arl(lo.max(pilot.floor));
        if est.mean <= arl0 / MARGIN || est.mean <= 1.0 {
            break;
        }
    }
    drop(pilot);

    // Full run on the bracket, widened if the pilot was misleading.
    let (set, mut lo_est, mut hi_est) = loop {
        let set = PathSet::simulate(mon, hi, lo, sim.replications, sim)?;
        let hi_est = set.arl(hi);
        search.record(hi, &hi_est)?;
        if hi_est.mean < arl0 && hi_est.cap_hits < hi_est.replications {
            hi *= 1.1;
            continue;
        }
        let lo_est = set.arl(lo);
        search.record(lo, &lo_est)?;
        if lo_est.mean > arl0 {
            lo /= 1.1;
            continue;
        }
        break (set, lo_est, hi_est);
    };
    if search.within_tol(&hi_est) {
        return Ok(search.done(hi, hi_est));
    }
    if search.within_tol(&lo_est) {
        return Ok(search.done(lo, lo_est));
    }

    // Bisection with common random numbers.
    loop {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            return Err(Error::NonConvergence(format!(
                "ARL jumps from {:.4} at limit {lo:e} to {:.4} at limit {hi:e} without meeting the \
                 tolerance; the statistic is discrete near the target",
                lo_est.mean, hi_est.mean
            )));
        }
        let est = set.arl(mid);
        search.record(mid, &est)?;
        if search.within_tol(&est) {
            return Ok(search.done(mid, est));
        }
        if est.mean < arl0 {
            lo = mid;
            lo_est = est;
        } else {
            hi = mid;
            hi_est = est;
        }
    }
}

/// Calibrates the scenario's chart limit; the configured limit is ignored.
pub fn calibrate_limit(s: &Scenario, opts: &CalibrationOptions) -> Result<CalibrationResult> {
    calibrate_with(&ChartMonitor::new(s)?, opts)
}

/// Calibrates a limit around the pool mean for resampled EWMA statistics.
pub fn bootstrap_calibrate(pool: &BootstrapPool, lambda: f64, opts: &CalibrationOptions) -> Result<CalibrationResult> {
    calibrate_with(&BootstrapMonitor::new(pool.clone(), lambda)?, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charts::ChartKind;
    use crate::dgp::MarginalSpec;

    fn tau_scenario(limit: f64) -> Scenario {
        Scenario {
            chart: ChartConfig::new(ChartKind::TauTilde, 0.1, limit),
            dgp: DgpSpec::iid(MarginalSpec::STANDARD_NORMAL),
            m: 4,
            n: 4,
            jitter_scale: None,
        }
    }

    #[test]
    fn zero_limit_alarms_immediately() {
        let s = Scenario {
            chart: ChartConfig::new(ChartKind::Acf, 0.1, 0.0),
            ..tau_scenario(0.0)
        };
        let mut rng = stream_rng(1, 0);
        for _ in 0..20 {
            assert_eq!(run_length(&s, 100, &mut rng).unwrap(), RunLength { length: 1, capped: false });
        }
    }

    #[test]
    fn small_cap_is_reported() {
        let est = estimate_arl(&tau_scenario(0.5), &SimOptions::new(50, 3).with_cap(10)).unwrap();
        assert_eq!(est.cap_hits, 50);
        assert_eq!(est.mean, 10.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn sums_give_sample_moments() {
        let e = ArlEstimate::from_sums(4, 1 + 2 + 3 + 10, 1 + 4 + 9 + 100, 0);
        assert_eq!(e.mean, 4.0);
        let var = ((1.0f64 - 4.0).powi(2) + 4.0 + 1.0 + 36.0) / 3.0;
        assert!((e.stderr - (var / 4.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn record_paths_agree_with_direct_runs() {
        let s = tau_scenario(0.0);
        let mon = ChartMonitor::new(&s).unwrap();
        let opts = SimOptions::new(64, 9).with_cap(5000);
        let set = PathSet::simulate(&mon, 0.2, 0.0, 64, &opts).unwrap();
        for limit in [0.01, 0.03, 0.05, 0.08] {
            let direct = estimate_arl_with(&mon, limit, &opts).unwrap();
            assert_eq!(set.arl(limit), direct, "limit {limit}");
        }
    }

    #[test]
    fn arl_is_monotone_in_the_limit() {
        let mon = ChartMonitor::new(&tau_scenario(0.0)).unwrap();
        let opts = SimOptions::new(200, 5).with_cap(100_000);
        let mut prev = 0.0;
        for k in 1..8 {
            let est = estimate_arl_with(&mon, 0.01 * k as f64, &opts).unwrap();
            assert!(est.mean >= prev);
            prev = est.mean;
        }
    }

    #[test]
    fn single_value_pool_cannot_be_bracketed() {
        let pool = BootstrapPool::new(vec![0.25]).unwrap();
        let opts = CalibrationOptions::new(20.0, SimOptions::new(1000, 1));
        assert!(matches!(bootstrap_calibrate(&pool, 0.1, &opts), Err(Error::Bracket(_))));
        assert!(BootstrapPool::new(vec![]).is_err());
    }

    #[test]
    fn near_one_target_gives_tiny_limit() {
        let s = tau_scenario(0.0);
        let mut opts = CalibrationOptions::new(1.001, SimOptions::new(500, 2));
        opts.rel_tol = 0.01;
        let res = calibrate_limit(&s, &opts).unwrap();
        assert!(res.achieved_arl.mean <= 1.001 * 1.01);
        assert!(res.limit < 0.05);
    }

    #[test]
    fn zero_tolerance_does_not_converge() {
        let pool = BootstrapPool::new((0..50).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap();
        let mut opts = CalibrationOptions::new(20.0, SimOptions::new(2000, 4));
        opts.rel_tol = 0.0;
        assert!(matches!(bootstrap_calibrate(&pool, 0.2, &opts), Err(Error::NonConvergence(_))));
    }

    #[test]
    fn target_beyond_cap() {
        let opts = CalibrationOptions::new(370.0, SimOptions::new(100, 1).with_cap(100));
        assert!(matches!(calibrate_limit(&tau_scenario(0.0), &opts), Err(Error::Bracket(_))));
    }
}
