//! Line-oriented netlist format.
//!
//! ```text
//! .title <text>
//! M<name> <drain> <gate> <source> nfet|pfet n=<int> m=<int> tubes=<int>
//! R<name> <n+> <n-> <ohms>
//! C<name> <n+> <n-> <farads> [ic=<volts>]
//! V<name> <n+> <n-> DC <v>
//! V<name> <n+> <n-> PULSE(<v1> <v2> <td> <tr> <tf> <pw> <per>)
//! .temp <celsius>
//! .tran <step> <stop>
//! .op
//! .measure tran <name> AVG power src=<vsrc> [from=<t>] [to=<t>]
//! .measure tran <name> DELAY in=<node>[,<node>...] out=<node>[,<node>...] [frac=<f>] [vdd=<v>] [from=<t>] [to=<t>]
//! .measure tran <name> PDP
//! .end
//! ```
//!
//! Keywords are case-insensitive, node names are case-sensitive and `0` is
//! ground. `*` starts a comment line and `+` continues the previous line.

mod parse;
pub(crate) mod validate;
mod value;
mod write;

use std::collections::HashSet;

use thiserror::Error;

use crate::device::{Chirality, Polarity};

pub use parse::{parse, parse_bytes};
pub use validate::{validate, Diagnostic, Severity};
pub use value::{format_value, parse_value};
pub use write::serialize;

pub const GROUND: &str = "0";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetlistError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}, column {column}: unknown device kind `{name}`")]
    UnknownDeviceKind {
        line: usize,
        column: usize,
        name: String,
    },
    #[error("line {line}: device `{name}` uses metallic chirality ({n}, {m})")]
    MetallicChirality {
        line: usize,
        name: String,
        n: u32,
        m: u32,
    },
    #[error("line {line}: duplicate element name `{name}`")]
    DuplicateName { line: usize, name: String },
    #[error("netlist never references ground node \"0\"")]
    MissingGround,
    #[error("missing .end")]
    MissingEnd,
}

impl NetlistError {
    pub fn line(&self) -> Option<usize> {
        match self {
            Self::Syntax { line, .. }
            | Self::UnknownDeviceKind { line, .. }
            | Self::MetallicChirality { line, .. }
            | Self::DuplicateName { line, .. } => Some(*line),
            Self::MissingGround | Self::MissingEnd => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CntfetSpec {
    pub polarity: Polarity,
    pub chirality: Chirality,
    pub tubes: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DeviceKind {
    /// Terminals: drain, gate, source.
    Cntfet(CntfetSpec),
    Resistor {
        ohms: f64,
    },
    Capacitor {
        farads: f64,
        ic: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Device {
    pub name: String,
    pub terminals: Vec<String>,
    pub kind: DeviceKind,
}

impl Device {
    pub fn cntfet(
        name: impl Into<String>,
        drain: &str,
        gate: &str,
        source: &str,
        spec: CntfetSpec,
    ) -> Self {
        Self {
            name: name.into(),
            terminals: vec![drain.to_string(), gate.to_string(), source.to_string()],
            kind: DeviceKind::Cntfet(spec),
        }
    }

    pub fn resistor(name: impl Into<String>, a: &str, b: &str, ohms: f64) -> Self {
        Self {
            name: name.into(),
            terminals: vec![a.to_string(), b.to_string()],
            kind: DeviceKind::Resistor { ohms },
        }
    }

    pub fn capacitor(
        name: impl Into<String>,
        a: &str,
        b: &str,
        farads: f64,
        ic: Option<f64>,
    ) -> Self {
        Self {
            name: name.into(),
            terminals: vec![a.to_string(), b.to_string()],
            kind: DeviceKind::Capacitor { farads, ic },
        }
    }

    pub fn is_cntfet(&self) -> bool {
        matches!(self.kind, DeviceKind::Cntfet(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    pub v1: f64,
    pub v2: f64,
    pub delay: f64,
    pub rise: f64,
    pub fall: f64,
    pub width: f64,
    pub period: f64,
}

impl Pulse {
    pub fn value_at(&self, t: f64) -> f64 {
        if t <= self.delay {
            return self.v1;
        }
        let local = (t - self.delay) % self.period;
        let dv = self.v2 - self.v1;
        if local < self.rise {
            self.v1 + dv * local / self.rise
        } else if local < self.rise + self.width {
            self.v2
        } else if local < self.rise + self.width + self.fall {
            self.v2 - dv * (local - self.rise - self.width) / self.fall
        } else {
            self.v1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceShape {
    Dc(f64),
    Pulse(Pulse),
}

impl SourceShape {
    pub fn value_at(&self, t: f64) -> f64 {
        match self {
            Self::Dc(v) => *v,
            Self::Pulse(p) => p.value_at(t),
        }
    }
}

/// Independent voltage source.
#[derive(Debug, Clone, PartialEq)]
pub struct Source {
    pub name: String,
    pub plus: String,
    pub minus: String,
    pub shape: SourceShape,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Analysis {
    Op,
    Tran { step: f64, stop: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureKind {
    AvgPower {
        source: String,
        from: Option<f64>,
        to: Option<f64>,
    },
    Delay {
        inputs: Vec<String>,
        outputs: Vec<String>,
        fraction: f64,
        vdd: Option<f64>,
        from: Option<f64>,
        to: Option<f64>,
    },
    /// Product of the deck's first power and first delay measurement.
    Pdp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSpec {
    pub name: String,
    pub kind: MeasureKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub title: String,
    pub devices: Vec<Device>,
    pub sources: Vec<Source>,
    pub analyses: Vec<Analysis>,
    pub measures: Vec<MeasureSpec>,
    pub temp_c: f64,
}

impl Default for Circuit {
    fn default() -> Self {
        Self {
            title: String::new(),
            devices: Vec::new(),
            sources: Vec::new(),
            analyses: Vec::new(),
            measures: Vec::new(),
            temp_c: 27.0,
        }
    }
}

impl Circuit {
    pub fn new(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            ..Self::default()
        }
    }

    /// Every node referenced by an element, in first-use order, ground included.
    pub fn nodes(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        let terminals = self
            .devices
            .iter()
            .flat_map(|d| d.terminals.iter())
            .chain(self.sources.iter().flat_map(|s| [&s.plus, &s.minus]));
        for node in terminals {
            if seen.insert(node.as_str()) {
                out.push(node.clone());
            }
        }
        out
    }

    pub fn references_ground(&self) -> bool {
        self.devices
            .iter()
            .any(|d| d.terminals.iter().any(|t| t == GROUND))
            || self
                .sources
                .iter()
                .any(|s| s.plus == GROUND || s.minus == GROUND)
    }

    pub fn source(&self, name: &str) -> Option<&Source> {
        self.sources
            .iter()
            .find(|s| s.name.eq_ignore_ascii_case(name))
    }

    pub fn device(&self, name: &str) -> Option<&Device> {
        self.devices
            .iter()
            .find(|d| d.name.eq_ignore_ascii_case(name))
    }

    pub fn tran(&self) -> Option<(f64, f64)> {
        self.analyses.iter().find_map(|a| match a {
            Analysis::Tran { step, stop } => Some((*step, *stop)),
            Analysis::Op => None,
        })
    }

    pub fn cntfet_count(&self) -> usize {
        self.devices.iter().filter(|d| d.is_cntfet()).count()
    }

    pub fn temp_k(&self) -> f64 {
        self.temp_c + 273.15
    }
}
