use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;
use thiserror::Error;

use super::{bench_measurements, MeasureError, Measurements};
use crate::device::ModelConfig;
use crate::mna::{transient, SolverOptions};
use crate::netlist::Circuit;

pub const DEFAULT_VDD_AXIS: [f64; 6] = [0.7, 0.8, 0.9, 1.0, 1.1, 1.2];
pub const DEFAULT_TEMP_AXIS: [f64; 7] = [0.0, 9.0, 18.0, 27.0, 36.0, 45.0, 54.0];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("invalid sweep axis: {0}")]
    Axis(String),
    #[error("sweep cell VDD = {vdd} V, T = {temp_c} C failed: {source}")]
    Cell {
        vdd: f64,
        temp_c: f64,
        #[source]
        source: MeasureError,
    },
}

/// Sweep results, `cells[vdd][temp]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub vdd_axis: Vec<f64>,
    pub temp_axis: Vec<f64>,
    pub cells: Vec<Vec<Measurements>>,
}

impl SweepTable {
    pub fn len(&self) -> usize {
        self.vdd_axis.len() * self.temp_axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `vdd_V,temp_C,power_W,delay_s,pdp_J`, row-major by VDD.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "vdd_V,temp_C,power_W,delay_s,pdp_J")?;
        for (i, &vdd) in self.vdd_axis.iter().enumerate() {
            for (j, &temp) in self.temp_axis.iter().enumerate() {
                let m = &self.cells[i][j];
                writeln!(
                    w,
                    "{vdd},{temp},{:e},{:e},{:e}",
                    m.power_w, m.delay_s, m.pdp_j
                )?;
            }
        }
        Ok(())
    }
}

fn check_axis(name: &str, axis: &[f64]) -> Result<(), SweepError> {
    if axis.is_empty() {
        return Err(SweepError::Axis(format!("{name} axis is empty")));
    }
    if axis.iter().any(|x| !x.is_finite()) || axis.windows(2).any(|p| p[1] <= p[0]) {
        return Err(SweepError::Axis(format!(
            "{name} axis {axis:?} is not strictly increasing"
        )));
    }
    Ok(())
}

/// Transient run plus the bench's power and delay measures.
pub fn simulate_bench(
    c: &Circuit,
    model: &ModelConfig,
    opts: &SolverOptions,
) -> Result<Measurements, MeasureError> {
    let w = transient(c, model, opts)?;
    bench_measurements(c, &w)
}

/// Builds a bench per grid point with `factory(vdd, temp_c)`, simulates
/// them in parallel on at most `threads` workers and places results by
/// grid index. The first failing cell in row-major order is reported.
pub fn run_sweep<F>(
    factory: F,
    vdd_axis: &[f64],
    temp_axis: &[f64],
    model: &ModelConfig,
    opts: &SolverOptions,
    threads: Option<usize>,
) -> Result<SweepTable, SweepError>
where
    F: Fn(f64, f64) -> Result<Circuit, MeasureError> + Sync,
{
    check_axis("VDD", vdd_axis)?;
    check_axis("temperature", temp_axis)?;
    let points: Vec<(f64, f64)> = vdd_axis
        .iter()
        .flat_map(|&v| temp_axis.iter().map(move |&t| (v, t)))
        .collect();
    let work = || -> Vec<Result<Measurements, MeasureError>> {
        points
            .par_iter()
            .map(|&(vdd, temp)| simulate_bench(&factory(vdd, temp)?, model, opts))
            .collect()
    };
    let results = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| SweepError::Axis(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    let mut flat = Vec::with_capacity(results.len());
    for (r, &(vdd, temp_c)) in results.into_iter().zip(&points) {
        flat.push(r.map_err(|source| SweepError::Cell {
            vdd,
            temp_c,
            source,
        })?);
    }
    let cells = flat
        .chunks(temp_axis.len())
        .map(<[Measurements]>::to_vec)
        .collect();
    Ok(SweepTable {
        vdd_axis: vdd_axis.to_vec(),
        temp_axis: temp_axis.to_vec(),
        cells,
    })
}

/// Trend verdicts for a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendReport {
    pub ref_temp_c: f64,
    pub ref_vdd: f64,
    /// `(holding, total)` consecutive VDD pairs with rising power.
    pub power_increasing: (usize, usize),
    /// `(holding, total)` consecutive VDD pairs with falling delay.
    pub delay_decreasing: (usize, usize),
    /// `(max - min) / mean` of power across temperature at `ref_vdd`.
    pub temp_spread: Option<f64>,
    /// Same across VDD at `ref_temp_c`.
    pub vdd_spread: Option<f64>,
}

fn spread(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    Some((max - min) / mean)
}

fn nearest(axis: &[f64], x: f64) -> usize {
    (0..axis.len())
        .min_by(|&a, &b| (axis[a] - x).abs().total_cmp(&(axis[b] - x).abs()))
        .unwrap_or(0)
}

impl TrendReport {
    pub fn monotone(&self) -> bool {
        self.power_increasing.0 == self.power_increasing.1
            && self.delay_decreasing.0 == self.delay_decreasing.1
    }

    pub fn temperature_flat(&self) -> Option<bool> {
        Some(self.temp_spread? < self.vdd_spread?)
    }

    pub fn passed(&self) -> bool {
        self.monotone() && self.temperature_flat() != Some(false)
    }
}

impl fmt::Display for TrendReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
        let (p, pn) = self.power_increasing;
        let (d, dn) = self.delay_decreasing;
        writeln!(
            f,
            "power rising with VDD at {} C: {p}/{pn} {}",
            self.ref_temp_c,
            verdict(p == pn)
        )?;
        writeln!(
            f,
            "delay falling with VDD at {} C: {d}/{dn} {}",
            self.ref_temp_c,
            verdict(d == dn)
        )?;
        match (self.temp_spread, self.vdd_spread) {
            (Some(t), Some(v)) => write!(
                f,
                "power spread across temperature at {} V: {t:.4} vs across VDD: {v:.4} {}",
                self.ref_vdd,
                verdict(t < v)
            ),
            _ => write!(
                f,
                "temperature flatness: not applicable (needs two points on each axis)"
            ),
        }
    }
}

/// Monotonicity at the temperature nearest `ref_temp_c` and temperature
/// flatness at the VDD nearest `ref_vdd`.
pub fn trend_report(table: &SweepTable, ref_temp_c: f64, ref_vdd: f64) -> TrendReport {
    let j = nearest(&table.temp_axis, ref_temp_c);
    let i = nearest(&table.vdd_axis, ref_vdd);
    let column: Vec<&Measurements> = table.cells.iter().map(|row| &row[j]).collect();
    let pairs = column.len().saturating_sub(1);
    let rising = column
        .windows(2)
        .filter(|w| w[1].power_w > w[0].power_w)
        .count();
    let falling = column
        .windows(2)
        .filter(|w| w[1].delay_s < w[0].delay_s)
        .count();
    let temp_powers: Vec<f64> = table.cells[i].iter().map(|m| m.power_w).collect();
    let vdd_powers: Vec<f64> = column.iter().map(|m| m.power_w).collect();
    TrendReport {
        ref_temp_c: table.temp_axis[j],
        ref_vdd: table.vdd_axis[i],
        power_increasing: (rising, pairs),
        delay_decreasing: (falling, pairs),
        temp_spread: spread(&temp_powers),
        vdd_spread: spread(&vdd_powers),
    }
}
