use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use sopchart_core::{
    bootstrap_calibrate, calibrate_limit, derive_seed, estimate_arl, stream_rng, BootstrapPool, CalibrationOptions,
    ChartConfig, ChartPoint, ChartState, Frame, Scenario, SimOptions, DEFAULT_BUDGET, DEFAULT_CAP,
};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::frames::{is_ndjson_path, read_pool, read_stream, write_stream};

/// Seed domain of the jitter noise used by `monitor`.
const NOISE_DOMAIN: u64 = 0x6e6f697365;

pub fn open_output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn sim_options(c: &RunConfig) -> CliResult<SimOptions> {
    let mut o = SimOptions::new(c.replications.unwrap_or(10_000), c.seed()?).with_cap(c.cap.unwrap_or(DEFAULT_CAP));
    o.workers = c.workers;
    Ok(o)
}

fn scenario(c: &RunConfig, chart: ChartConfig) -> CliResult<Scenario> {
    let (m, n) = c.extent()?;
    Ok(Scenario { chart, dgp: c.dgp()?.clone(), m, n, jitter_scale: c.jitter_scale })
}

struct Row {
    run: String,
    t: u64,
    point: ChartPoint,
}

fn write_rows(out: &mut dyn Write, rows: &[Row]) -> CliResult<()> {
    writeln!(out, "run,t,raw,smoothed,center,limit,alarm")?;
    for r in rows {
        let p = &r.point;
        writeln!(
            out,
            "{},{},{:?},{:?},{:?},{:?},{}",
            r.run, r.t, p.raw, p.smoothed, p.center, p.limit, p.alarm as u8
        )?;
    }
    Ok(())
}

/// Runs the chart over a recorded stream, once per noise run when count
/// frames are jittered, followed by the pointwise mean of the runs.
pub fn monitor(c: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let chart = c.chart(true)?;
    if c.dgp.is_some() {
        return Err(CliError::invalid("monitor reads an input stream; remove the dgp section"));
    }
    let input = c.input.as_deref().ok_or_else(|| CliError::invalid("monitor needs an input stream"))?;
    let stream = read_stream(input)?;
    let counts = matches!(stream.frames[0].1, Frame::Count(_));
    let runs = c.noise_runs.unwrap_or(1);
    if runs == 0 {
        return Err(CliError::invalid("noise_runs must be at least 1"));
    }
    let seed = match c.jitter_scale {
        Some(_) if !counts => return Err(CliError::invalid("jitter_scale applies to count streams only")),
        Some(_) => Some(c.seed()?),
        None if runs > 1 => return Err(CliError::invalid("noise_runs > 1 needs jitter_scale")),
        None => None,
    };
    let mut rows = Vec::with_capacity(stream.frames.len() * (runs + 1));
    let mut mean: Vec<(f64, f64)> = vec![(0.0, 0.0); stream.frames.len()];
    for k in 0..runs {
        let mut rng = stream_rng(seed.map_or(0, |s| derive_seed(s, NOISE_DOMAIN)), k as u64);
        let mut state = ChartState::new(chart)?;
        for (i, (t, frame)) in stream.frames.iter().enumerate() {
            let grid = frame.to_real(c.jitter_scale, &mut rng)?;
            let point = state.update(&grid)?;
            mean[i].0 += point.raw / runs as f64;
            mean[i].1 += point.smoothed / runs as f64;
            rows.push(Row { run: (k + 1).to_string(), t: *t, point });
        }
    }
    if runs > 1 {
        for (i, (t, _)) in stream.frames.iter().enumerate() {
            let (raw, smoothed) = mean[i];
            let point = ChartPoint {
                t: (i + 1) as u64,
                raw,
                smoothed,
                center: chart.center,
                limit: chart.limit,
                alarm: (smoothed - chart.center).abs() > chart.limit,
            };
            rows.push(Row { run: "mean".into(), t: *t, point });
        }
    }
    write_rows(out, &rows)
}

/// Calibrates a limit by simulation, or by resampling a pool when one is given.
pub fn calibrate(c: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let sim = sim_options(c)?;
    let arl0 = c.target_arl.ok_or_else(|| CliError::invalid("target_arl is required"))?;
    let opts = CalibrationOptions {
        arl0,
        rel_tol: c.rel_tol.unwrap_or_else(|| sopchart_core::default_rel_tol(sim.replications)),
        sim,
        max_evaluations: DEFAULT_BUDGET,
    };
    let result = match &c.pool {
        Some(path) => {
            if c.dgp.is_some() {
                return Err(CliError::invalid("give either a pool or a dgp, not both"));
            }
            let lambda = c.chart.lambda.ok_or_else(|| CliError::invalid("chart lambda is required"))?;
            bootstrap_calibrate(&BootstrapPool::new(read_pool(path)?)?, lambda, &opts)?
        }
        None => calibrate_limit(&scenario(c, c.chart(false)?)?, &opts)?,
    };
    serde_json::to_writer_pretty(&mut *out, &result).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

pub fn arl(c: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    if c.input.is_some() {
        return Err(CliError::invalid("arl simulates its frames; remove the input stream"));
    }
    let est = estimate_arl(&scenario(c, c.chart(true)?)?, &sim_options(c)?)?;
    if est.cap_hits > 0 {
        eprintln!(
            "warning: {} of {} runs reached the cap without an alarm; the ARL is biased low",
            est.cap_hits, est.replications
        );
    }
    serde_json::to_writer_pretty(&mut *out, &est).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

pub fn simulate(c: &RunConfig, out: &mut dyn Write, ndjson: bool) -> CliResult<()> {
    let (m, n) = c.extent()?;
    let count = c.frames.ok_or_else(|| CliError::invalid("frames is required"))?;
    let dgp = c.dgp()?.prepare()?;
    let mut rng = stream_rng(c.seed()?, 0);
    let frames = (1..=count as u64)
        .map(|t| dgp.generate(m, n, &mut rng).map(|f| (t, f)))
        .collect::<Result<Vec<_>, _>>()?;
    write_stream(out, &frames, ndjson)
}

pub fn output_is_ndjson(path: Option<&Path>) -> bool {
    is_ndjson_path(path)
}
