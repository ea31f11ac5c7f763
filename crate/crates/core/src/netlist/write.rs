use std::fmt::Write as _;

use super::value::format_value;
use super::{Analysis, Circuit, DeviceKind, MeasureKind, SourceShape};
use crate::device::Polarity;

/// Emits the canonical form of `c`; `parse(&serialize(c)) == *c`.
pub fn serialize(c: &Circuit) -> String {
    let mut out = String::new();
    if !c.title.is_empty() {
        let _ = writeln!(out, ".title {}", c.title);
    }
    let _ = writeln!(out, ".temp {}", format_value(c.temp_c));
    for d in &c.devices {
        let t = &d.terminals;
        match &d.kind {
            DeviceKind::Cntfet(spec) => {
                let model = match spec.polarity {
                    Polarity::N => "nfet",
                    Polarity::P => "pfet",
                };
                let _ = writeln!(
                    out,
                    "{} {} {} {} {} n={} m={} tubes={}",
                    d.name,
                    t[0],
                    t[1],
                    t[2],
                    model,
                    spec.chirality.n(),
                    spec.chirality.m(),
                    spec.tubes
                );
            }
            DeviceKind::Resistor { ohms } => {
                let _ = writeln!(out, "{} {} {} {}", d.name, t[0], t[1], format_value(*ohms));
            }
            DeviceKind::Capacitor { farads, ic } => {
                let _ = write!(
                    out,
                    "{} {} {} {}",
                    d.name,
                    t[0],
                    t[1],
                    format_value(*farads)
                );
                if let Some(ic) = ic {
                    let _ = write!(out, " ic={}", format_value(*ic));
                }
                out.push('\n');
            }
        }
    }
    for s in &c.sources {
        let _ = write!(out, "{} {} {} ", s.name, s.plus, s.minus);
        match &s.shape {
            SourceShape::Dc(v) => {
                let _ = writeln!(out, "DC {}", format_value(*v));
            }
            SourceShape::Pulse(p) => {
                let fields =
                    [p.v1, p.v2, p.delay, p.rise, p.fall, p.width, p.period].map(format_value);
                let _ = writeln!(out, "PULSE({})", fields.join(" "));
            }
        }
    }
    for a in &c.analyses {
        match a {
            Analysis::Op => out.push_str(".op\n"),
            Analysis::Tran { step, stop } => {
                let _ = writeln!(out, ".tran {} {}", format_value(*step), format_value(*stop));
            }
        }
    }
    for m in &c.measures {
        let _ = write!(out, ".measure tran {} ", m.name);
        let window = |from: &Option<f64>, to: &Option<f64>| {
            let mut s = String::new();
            if let Some(f) = from {
                let _ = write!(s, " from={}", format_value(*f));
            }
            if let Some(t) = to {
                let _ = write!(s, " to={}", format_value(*t));
            }
            s
        };
        match &m.kind {
            MeasureKind::AvgPower { source, from, to } => {
                let _ = writeln!(out, "AVG power src={}{}", source, window(from, to));
            }
            MeasureKind::Delay {
                inputs,
                outputs,
                fraction,
                vdd,
                from,
                to,
            } => {
                let _ = write!(
                    out,
                    "DELAY in={} out={} frac={}",
                    inputs.join(","),
                    outputs.join(","),
                    format_value(*fraction)
                );
                if let Some(v) = vdd {
                    let _ = write!(out, " vdd={}", format_value(*v));
                }
                let _ = writeln!(out, "{}", window(from, to));
            }
            MeasureKind::Pdp => out.push_str("PDP\n"),
        }
    }
    out.push_str(".end\n");
    out
}
