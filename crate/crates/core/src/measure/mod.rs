//! Power, delay and PDP extraction, plus VDD x temperature sweeps.

mod fixture;
mod sweep;

use thiserror::Error;

use crate::cells::CellError;
use crate::mna::{SimError, Waveform};
use crate::netlist::{Circuit, MeasureKind, SourceShape};

pub use fixture::{load_fixture_tables, parse_fixture_tables, FixtureTables, Grid};
pub use sweep::{
    run_sweep, simulate_bench, trend_report, SweepError, SweepTable, TrendReport,
    DEFAULT_TEMP_AXIS, DEFAULT_VDD_AXIS,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("unknown source `{0}`")]
    UnknownSource(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("degenerate window [{t0:e}, {t1:e}] for a waveform spanning [{start:e}, {end:e}]")]
    Window {
        t0: f64,
        t1: f64,
        start: f64,
        end: f64,
    },
    #[error("no input crossing in the measurement window")]
    NoInputEvent,
    #[error("output `{output}` never crosses after the input event at t = {time:e} s")]
    NoOutputTransition { output: String, time: f64 },
    #[error("invalid measure: {0}")]
    Invalid(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Cell(#[from] CellError),
}

/// Figures of merit for one bench run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurements {
    pub power_w: f64,
    pub delay_s: f64,
    pub pdp_j: f64,
}

impl Measurements {
    pub fn new(power_w: f64, delay_s: f64) -> Self {
        Self {
            power_w,
            delay_s,
            pdp_j: pdp(power_w, delay_s),
        }
    }
}

/// Power-delay product, J.
pub fn pdp(power_w: f64, delay_s: f64) -> f64 {
    power_w * delay_s
}

fn check_window(w: &Waveform, t0: f64, t1: f64) -> Result<(), MeasureError> {
    let (start, end) = match (w.times.first(), w.times.last()) {
        (Some(&s), Some(&e)) => (s, e),
        _ => (0.0, 0.0),
    };
    let slack = 1e-9 * (end - start).abs();
    if !(t1 > t0 && t0 >= start - slack && t1 <= end + slack) {
        return Err(MeasureError::Window { t0, t1, start, end });
    }
    Ok(())
}

/// Linear interpolation of `ys` at time `t`.
fn sample(times: &[f64], ys: &[f64], t: f64) -> f64 {
    let k = times.partition_point(|&x| x < t);
    if k == 0 {
        return ys[0];
    }
    if k >= times.len() {
        return ys[ys.len() - 1];
    }
    let (t0, t1) = (times[k - 1], times[k]);
    ys[k - 1] + (ys[k] - ys[k - 1]) * (t - t0) / (t1 - t0)
}

/// Trapezoidal integral of `ys` over `[t0, t1]`, interpolating at the ends.
fn integrate(times: &[f64], ys: &[f64], t0: f64, t1: f64) -> f64 {
    let mut total = 0.0;
    let mut prev = (t0, sample(times, ys, t0));
    for (&t, &y) in times.iter().zip(ys) {
        if t <= t0 {
            continue;
        }
        if t >= t1 {
            break;
        }
        total += 0.5 * (t - prev.0) * (y + prev.1);
        prev = (t, y);
    }
    let end = sample(times, ys, t1);
    total + 0.5 * (t1 - prev.0) * (end + prev.1)
}

/// Mean of `v_src * i_delivered` over `[t0, t1]`, W.
pub fn average_power(w: &Waveform, source: &str, t0: f64, t1: f64) -> Result<f64, MeasureError> {
    check_window(w, t0, t1)?;
    let v = w
        .source_voltage(source)
        .ok_or_else(|| MeasureError::UnknownSource(source.to_string()))?;
    let i = w.source_current(source).expect("voltage implies current");
    let p: Vec<f64> = v.iter().zip(i).map(|(v, i)| v * i).collect();
    Ok(integrate(&w.times, &p, t0, t1) / (t1 - t0))
}

/// Times where `ys` crosses `level`, linearly interpolated.
fn crossings(times: &[f64], ys: &[f64], level: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for k in 1..ys.len() {
        let (a, b) = (ys[k - 1] - level, ys[k] - level);
        if (a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0) {
            out.push(times[k - 1] + (times[k] - times[k - 1]) * a / (a - b));
        }
    }
    out
}

/// Delay settings for [`propagation_delay`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelaySpec {
    pub vdd: f64,
    pub fraction: f64,
    /// Input events outside this window are ignored.
    pub window: Option<(f64, f64)>,
}

/// Worst-case input-to-output delay.
///
/// Input crossings of `fraction * vdd` closer together than one sample are
/// one event. Between an event and the next, an odd number of output
/// crossings is a transition and the last one ends it; an even number is a
/// glitch and is ignored. The result is the maximum over all events and
/// outputs.
pub fn propagation_delay(
    w: &Waveform,
    inputs: &[&str],
    outputs: &[&str],
    spec: &DelaySpec,
) -> Result<f64, MeasureError> {
    if !(spec.fraction > 0.0 && spec.fraction < 1.0 && spec.vdd > 0.0) {
        return Err(MeasureError::Invalid(format!(
            "fraction {} and vdd {} must satisfy 0 < fraction < 1, vdd > 0",
            spec.fraction, spec.vdd
        )));
    }
    let level = spec.fraction * spec.vdd;
    let series = |name: &str| {
        w.node(name)
            .ok_or_else(|| MeasureError::UnknownNode(name.to_string()))
    };
    let end = w.times.last().copied().unwrap_or(0.0);
    let (lo, hi) = match spec.window {
        Some((t0, t1)) => {
            check_window(w, t0, t1)?;
            (t0, t1)
        }
        None => (f64::NEG_INFINITY, f64::INFINITY),
    };

    let resolution = w.times.get(1).map_or(0.0, |t| t - w.times[0]);
    let mut all = Vec::new();
    for name in inputs {
        all.extend(crossings(&w.times, &series(name)?, level));
    }
    all.sort_by(f64::total_cmp);
    let mut events: Vec<f64> = Vec::new();
    for t in all {
        if events.last().is_none_or(|&e| t - e > resolution) {
            events.push(t);
        }
    }
    // The next event bounds the response even when it lies past the window.
    let bounds: Vec<(f64, f64)> = events
        .iter()
        .enumerate()
        .filter(|(_, &t)| t >= lo && t <= hi)
        .map(|(k, &t)| (t, events.get(k + 1).copied().unwrap_or(end)))
        .collect();
    let Some(&(first, _)) = bounds.first() else {
        return Err(MeasureError::NoInputEvent);
    };

    let mut worst = 0.0f64;
    for name in outputs {
        let out = crossings(&w.times, &series(name)?, level);
        let mut responded = false;
        for &(t, next) in &bounds {
            let inside: Vec<f64> = out
                .iter()
                .copied()
                .filter(|&x| x >= t && x < next)
                .collect();
            if inside.len() % 2 == 1 {
                responded = true;
                worst = worst.max(inside[inside.len() - 1] - t);
            }
        }
        if !responded {
            return Err(MeasureError::NoOutputTransition {
                output: name.to_string(),
                time: first,
            });
        }
    }
    Ok(worst)
}

/// Supply level for delay thresholds: the first DC source named `vdd`, else
/// the largest DC source.
fn supply_level(c: &Circuit) -> Option<f64> {
    let dc = |s: &crate::netlist::Source| match s.shape {
        SourceShape::Dc(v) => Some(v.abs()),
        SourceShape::Pulse(_) => None,
    };
    c.source("vdd")
        .and_then(dc)
        .or_else(|| c.sources.iter().filter_map(dc).reduce(f64::max))
}

/// Evaluates every `.measure` of `c` on `w`, in deck order. PDP multiplies
/// the first power and first delay result.
pub fn evaluate_measures(c: &Circuit, w: &Waveform) -> Result<Vec<(String, f64)>, MeasureError> {
    let start = w.times.first().copied().unwrap_or(0.0);
    let end = w.times.last().copied().unwrap_or(0.0);
    let mut results = Vec::new();
    let mut power = None;
    let mut delay = None;
    for m in &c.measures {
        let value = match &m.kind {
            MeasureKind::AvgPower { source, from, to } => {
                let p = average_power(w, source, from.unwrap_or(start), to.unwrap_or(end))?;
                power.get_or_insert(p);
                p
            }
            MeasureKind::Delay {
                inputs,
                outputs,
                fraction,
                vdd,
                from,
                to,
            } => {
                let vdd = vdd
                    .or_else(|| supply_level(c))
                    .ok_or_else(|| MeasureError::Invalid(format!("`{}` needs vdd=", m.name)))?;
                let window = (from.is_some() || to.is_some())
                    .then(|| (from.unwrap_or(start), to.unwrap_or(end)));
                let ins: Vec<&str> = inputs.iter().map(String::as_str).collect();
                let outs: Vec<&str> = outputs.iter().map(String::as_str).collect();
                let d = propagation_delay(
                    w,
                    &ins,
                    &outs,
                    &DelaySpec {
                        vdd,
                        fraction: *fraction,
                        window,
                    },
                )?;
                delay.get_or_insert(d);
                d
            }
            MeasureKind::Pdp => match (power, delay) {
                (Some(p), Some(d)) => pdp(p, d),
                _ => {
                    return Err(MeasureError::Invalid(format!(
                        "`{}` needs a power and a delay measure before it",
                        m.name
                    )))
                }
            },
        };
        results.push((m.name.clone(), value));
    }
    Ok(results)
}

/// The first power and delay measure of a bench deck.
pub fn bench_measurements(c: &Circuit, w: &Waveform) -> Result<Measurements, MeasureError> {
    let results = evaluate_measures(c, w)?;
    let find = |want: fn(&MeasureKind) -> bool| {
        c.measures
            .iter()
            .zip(&results)
            .find(|(m, _)| want(&m.kind))
            .map(|(_, (_, v))| *v)
    };
    let power = find(|k| matches!(k, MeasureKind::AvgPower { .. }));
    let delay = find(|k| matches!(k, MeasureKind::Delay { .. }));
    match (power, delay) {
        (Some(p), Some(d)) => Ok(Measurements::new(p, d)),
        _ => Err(MeasureError::Invalid(
            "bench needs a power and a delay measure".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wave(
        times: Vec<f64>,
        nodes: Vec<(&str, Vec<f64>)>,
        sources: Vec<(&str, &str, Vec<f64>)>,
    ) -> Waveform {
        Waveform {
            times,
            node_names: nodes.iter().map(|(n, _)| n.to_string()).collect(),
            node_volts: nodes.into_iter().map(|(_, v)| v).collect(),
            source_names: sources.iter().map(|(n, _, _)| n.to_string()).collect(),
            source_terminals: sources
                .iter()
                .map(|(_, p, _)| (p.to_string(), "0".to_string()))
                .collect(),
            source_currents: sources.into_iter().map(|(_, _, i)| i).collect(),
        }
    }

    #[test]
    fn constant_draw() {
        let t: Vec<f64> = (0..11).map(|k| k as f64 * 1e-10).collect();
        let w = wave(
            t.clone(),
            vec![("vdd", vec![0.9; 11])],
            vec![("VDD", "vdd", vec![1e-6; 11])],
        );
        let p = average_power(&w, "VDD", 0.0, 1e-9).unwrap();
        assert!((p - 0.9e-6).abs() < 1e-18);
        let p = average_power(&w, "vdd", 0.15e-9, 0.65e-9).unwrap();
        assert!((p - 0.9e-6).abs() < 1e-18);
        let zero = wave(
            t,
            vec![("vdd", vec![0.9; 11])],
            vec![("VDD", "vdd", vec![0.0; 11])],
        );
        assert_eq!(average_power(&zero, "VDD", 0.0, 1e-9).unwrap(), 0.0);
        assert!(matches!(
            average_power(&w, "VX", 0.0, 1e-9),
            Err(MeasureError::UnknownSource(_))
        ));
        assert!(matches!(
            average_power(&w, "VDD", 0.5e-9, 0.5e-9),
            Err(MeasureError::Window { .. })
        ));
    }

    #[test]
    fn window_interpolation_is_exact_for_ramps() {
        let t: Vec<f64> = (0..5).map(|k| k as f64).collect();
        let y: Vec<f64> = t.iter().map(|&x| 2.0 * x).collect();
        // Integral of 2x over [0.5, 3.25] = 3.25^2 - 0.25.
        assert!((integrate(&t, &y, 0.5, 3.25) - (3.25f64.powi(2) - 0.25)).abs() < 1e-12);
    }

    #[test]
    fn identical_signals_have_zero_delay() {
        let t: Vec<f64> = (0..100).map(|k| k as f64 * 1e-12).collect();
        let v: Vec<f64> = t
            .iter()
            .map(|&x| if x > 50e-12 { 1.0 } else { 0.0 })
            .collect();
        let w = wave(t, vec![("in", v.clone()), ("out", v)], vec![]);
        let spec = DelaySpec {
            vdd: 1.0,
            fraction: 0.5,
            window: None,
        };
        assert_eq!(
            propagation_delay(&w, &["in"], &["out"], &spec).unwrap(),
            0.0
        );
    }

    #[test]
    fn glitch_is_ignored_and_worst_case_kept() {
        let t: Vec<f64> = (0..=10).map(|k| k as f64).collect();
        let input = vec![0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let out = vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0];
        let w = wave(t, vec![("a", input), ("y", out)], vec![]);
        let spec = DelaySpec {
            vdd: 1.0,
            fraction: 0.5,
            window: None,
        };
        // Event at 0.5 answered at 2.5; event at 4.5 answered at 7.5.
        let d = propagation_delay(&w, &["a"], &["y"], &spec).unwrap();
        assert!((d - 3.0).abs() < 1e-12, "{d}");
    }

    #[test]
    fn silent_output_is_an_error() {
        let t: Vec<f64> = (0..=4).map(|k| k as f64).collect();
        let w = wave(
            t,
            vec![("a", vec![0.0, 1.0, 1.0, 1.0, 1.0]), ("y", vec![0.0; 5])],
            vec![],
        );
        let spec = DelaySpec {
            vdd: 1.0,
            fraction: 0.5,
            window: None,
        };
        assert!(matches!(
            propagation_delay(&w, &["a"], &["y"], &spec),
            Err(MeasureError::NoOutputTransition { time, .. }) if (time - 0.5).abs() < 1e-12
        ));
        assert!(matches!(
            propagation_delay(&w, &["y"], &["y"], &spec),
            Err(MeasureError::NoInputEvent)
        ));
    }

    #[test]
    fn pdp_products() {
        assert!((pdp(2.6864e-9, 1.3077e-10) - 3.5130e-19).abs() / 3.5130e-19 < 1e-4);
        assert_eq!(pdp(0.0, 1e-10), 0.0);
        assert!((pdp(1.2505e-8, 1.1119e-10) - 13.9043e-19).abs() / 13.9043e-19 < 1e-4);
        let m = Measurements::new(2.0, 3.0);
        assert_eq!(m.pdp_j, 6.0);
    }
}
