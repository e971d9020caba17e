//! Runtime sweeps over trace length and object count.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::compiler::CompileOptions;
use crate::dsl::ScenarioAst;
use crate::query::{query, Program, QueryError, QueryOptions};
use crate::synth::{generate_trace, scale_program, SynthConfig, SynthError};
use crate::world::RoadMap;

#[derive(Clone, Debug)]
pub struct BenchConfig {
    /// Traces per sweep point; trace `k` uses seed `base_seed + k`.
    pub traces: usize,
    pub base_seed: u64,
    /// Per-query timeout; a timed-out query counts as taking this long.
    pub timeout: Option<Duration>,
    /// Each query is timed this many times and the fastest run is kept.
    pub repeats: usize,
    pub shuffle_ids: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            traces: 10,
            base_seed: 0,
            timeout: Some(Duration::from_secs(10)),
            repeats: 3,
            shuffle_ids: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    /// Trace length or object count.
    pub x: usize,
    pub mean_ms: f64,
    pub std_ms: f64,
    pub traces: usize,
    pub matched: usize,
    pub timeouts: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Query(#[from] QueryError),
}

pub const DEFAULT_LENGTHS: [usize; 5] = [20, 40, 60, 80, 100];
pub const DEFAULT_OBJECT_COUNTS: [usize; 4] = [2, 4, 6, 8];

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

fn point(
    program: &Program,
    map: &RoadMap,
    x: usize,
    length: usize,
    m: usize,
    cfg: &BenchConfig,
) -> Result<SweepRow, BenchError> {
    let opts = QueryOptions {
        find_all: false,
        timeout: cfg.timeout,
    };
    let mut times = Vec::with_capacity(cfg.traces);
    let (mut matched, mut timeouts) = (0, 0);
    for k in 0..cfg.traces {
        let sc = SynthConfig {
            shuffle_ids: cfg.shuffle_ids,
            ..SynthConfig::new(cfg.base_seed + k as u64, length)
        };
        let trace = generate_trace(&program.ast, map, &sc)?;
        let mut best = f64::INFINITY;
        let mut hit = false;
        for _ in 0..cfg.repeats.max(1) {
            let t0 = Instant::now();
            let r = query(program, &trace, m, map, &opts);
            let ms = t0.elapsed().as_secs_f64() * 1e3;
            match r {
                Ok(res) => {
                    best = best.min(ms);
                    hit = res.matched;
                }
                Err(QueryError::Timeout { .. }) => {
                    best = cfg.timeout.map(|d| d.as_secs_f64() * 1e3).unwrap_or(ms);
                    timeouts += 1;
                    break;
                }
                Err(e) => return Err(e.into()),
            }
        }
        matched += usize::from(hit);
        times.push(best);
        log::info!("sweep x={x} trace {k}: {best:.3} ms");
    }
    let (mean_ms, std_ms) = mean_std(&times);
    Ok(SweepRow {
        x,
        mean_ms,
        std_ms,
        traces: cfg.traces,
        matched,
        timeouts,
    })
}

/// Query time against trace length, with `m = length / 2`.
pub fn duration_sweep(
    ast: &ScenarioAst,
    map: &RoadMap,
    lengths: &[usize],
    cfg: &BenchConfig,
) -> Result<Vec<SweepRow>, BenchError> {
    let program = Program::compile(ast.clone(), &CompileOptions::default())?;
    lengths
        .iter()
        .map(|&len| point(&program, map, len, len, (len / 2).max(1), cfg))
        .collect()
}

/// Query time against object count, replicating the program's object pair.
pub fn object_sweep(
    ast: &ScenarioAst,
    map: &RoadMap,
    counts: &[usize],
    length: usize,
    m: usize,
    cfg: &BenchConfig,
) -> Result<Vec<SweepRow>, BenchError> {
    counts
        .iter()
        .map(|&n| {
            let program = Program::compile(scale_program(ast, n)?, &CompileOptions::default())?;
            point(&program, map, n, length, m, cfg)
        })
        .collect()
}

/// Coefficient of determination of the least-squares line through the points.
pub fn linear_r2(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if syy == 0.0 {
        return 1.0;
    }
    if sxx == 0.0 {
        return 0.0;
    }
    sxy * sxy / (sxx * syy)
}

pub fn to_csv(rows: &[SweepRow], x_name: &str) -> String {
    let mut out = format!("{x_name},mean_ms,std_ms,traces,matched,timeouts\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.6},{:.6},{},{},{}\n",
            r.x, r.mean_ms, r.std_ms, r.traces, r.matched, r.timeouts
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r2_of_exact_line_is_one() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [3.0, 5.0, 7.0, 9.0];
        assert!((linear_r2(&xs, &ys) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn r2_against_hand_computed_value() {
        let xs = [1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 2.0];
        // sxy = (-1)(-1) + 0 + (1)(0) = 1; sxx = 2; syy = 2.
        assert!((linear_r2(&xs, &ys) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let rows = vec![SweepRow {
            x: 20,
            mean_ms: 1.5,
            std_ms: 0.25,
            traces: 10,
            matched: 10,
            timeouts: 0,
        }];
        let csv = to_csv(&rows, "length");
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.starts_with("length,mean_ms"));
        assert!(csv.contains("20,1.500000,0.250000,10,10,0"));
    }

    #[test]
    fn sample_std_dev() {
        let (m, s) = mean_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(m, 5.0);
        assert!((s - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
    }
}
