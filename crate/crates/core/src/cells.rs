//! Full-adder cell and test-bench generators.
//!
//! The proposed cell is a two-stage mirror adder: a 10-device stage
//! computes `COUTB = !(AB + (A + B)C)`, a 14-device stage computes
//! `SUMB = !(ABC + (A + B + C) COUTB)`. The buffered variant appends two
//! inverters for true `SUM` and `COUT`. The majority reference builds the
//! adder from three inverting majority gates:
//! `SUM = !M(COUT, !C, !M(A, B, !C))`.

use thiserror::Error;

use crate::device::{Chirality, Polarity};
use crate::netlist::{
    Analysis, Circuit, CntfetSpec, Device, MeasureKind, MeasureSpec, Pulse, Source, SourceShape,
    GROUND,
};

pub const VDD_NODE: &str = "VDD";
pub const VDD_SOURCE: &str = "VDD";
pub const INPUTS: [&str; 3] = ["A", "B", "C"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CellError {
    #[error("invalid cell config: {0}")]
    InvalidConfig(String),
    #[error("invalid stimulus: {0}")]
    InvalidStimulus(String),
    #[error("cell has no input node `{0}`")]
    MissingInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    /// 24 devices, complemented outputs `SUMB`, `COUTB`.
    #[default]
    Core24,
    /// 28 devices, true outputs `SUM`, `COUT`.
    Buffered,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellConfig {
    pub vdd: f64,
    pub temp_c: f64,
    pub n_chirality: Chirality,
    pub p_chirality: Chirality,
    pub tubes_n: u32,
    pub tubes_p: u32,
    /// Per-output load, F.
    pub load_cap: f64,
    pub variant: Variant,
}

impl Default for CellConfig {
    fn default() -> Self {
        Self {
            vdd: 0.9,
            temp_c: 27.0,
            n_chirality: Chirality::default(),
            p_chirality: Chirality::default(),
            tubes_n: 3,
            tubes_p: 3,
            load_cap: 2e-15,
            variant: Variant::Core24,
        }
    }
}

impl CellConfig {
    pub fn validate(&self) -> Result<(), CellError> {
        let bad = |m: String| Err(CellError::InvalidConfig(m));
        if !(self.vdd.is_finite() && self.vdd > 0.0) {
            return bad(format!("vdd must be positive, got {}", self.vdd));
        }
        if !self.temp_c.is_finite() || self.temp_c <= -273.15 {
            return bad(format!(
                "temperature {} C is below absolute zero",
                self.temp_c
            ));
        }
        for (label, c) in [("n", self.n_chirality), ("p", self.p_chirality)] {
            if !c.is_semiconducting() {
                return bad(format!("{label}-device chirality {c} is metallic"));
            }
        }
        if self.tubes_n == 0 || self.tubes_p == 0 {
            return bad("tube counts must be positive".into());
        }
        if !(self.load_cap.is_finite() && self.load_cap > 0.0) {
            return bad(format!(
                "load capacitance must be positive, got {}",
                self.load_cap
            ));
        }
        Ok(())
    }

    fn spec(&self, polarity: Polarity) -> CntfetSpec {
        match polarity {
            Polarity::N => CntfetSpec {
                polarity,
                chirality: self.n_chirality,
                tubes: self.tubes_n,
            },
            Polarity::P => CntfetSpec {
                polarity,
                chirality: self.p_chirality,
                tubes: self.tubes_p,
            },
        }
    }
}

/// Input timing: C toggles every `period / 2`, B every `period`, A every
/// `2 * period`, so each `4 * period` window holds all eight vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stimulus {
    /// Base period T, s.
    pub period: f64,
    /// Rise and fall time, s.
    pub transition: f64,
    /// High level of the inputs; `None` means the supply voltage.
    pub input_high: Option<f64>,
}

impl Default for Stimulus {
    fn default() -> Self {
        Self {
            period: 800e-12,
            transition: 10e-12,
            input_high: None,
        }
    }
}

impl Stimulus {
    pub fn validate(&self) -> Result<(), CellError> {
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(CellError::InvalidStimulus(format!(
                "period {}",
                self.period
            )));
        }
        if !(self.transition > 0.0 && self.transition <= self.period / 10.0) {
            return Err(CellError::InvalidStimulus(format!(
                "transition {} must be in (0, period/10]",
                self.transition
            )));
        }
        Ok(())
    }

    /// Periods of A, B, C.
    pub fn periods(&self) -> [f64; 3] {
        [4.0 * self.period, 2.0 * self.period, self.period]
    }

    /// Time each input vector is held, s.
    pub fn slot(&self) -> f64 {
        self.period / 2.0
    }

    /// One full pass over all eight input vectors.
    pub fn window(&self) -> f64 {
        4.0 * self.period
    }
}

/// A generated cell plus the metadata the benches need.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub circuit: Circuit,
    pub inputs: Vec<String>,
    /// Outputs that receive a load and are measured.
    pub outputs: Vec<String>,
    pub transistor_count: usize,
}

struct Builder<'a> {
    cfg: &'a CellConfig,
    devices: Vec<Device>,
    internal: usize,
}

impl<'a> Builder<'a> {
    fn new(cfg: &'a CellConfig) -> Self {
        Self {
            cfg,
            devices: Vec::new(),
            internal: 0,
        }
    }

    fn fet(&mut self, polarity: Polarity, drain: &str, gate: &str, source: &str) {
        let prefix = match polarity {
            Polarity::N => "MN",
            Polarity::P => "MP",
        };
        let index = self
            .devices
            .iter()
            .filter(|d| d.name.starts_with(prefix))
            .count()
            + 1;
        self.devices.push(Device::cntfet(
            format!("{prefix}{index}"),
            drain,
            gate,
            source,
            self.cfg.spec(polarity),
        ));
    }

    fn node(&mut self) -> String {
        self.internal += 1;
        format!("x{}", self.internal)
    }

    /// Both mirrored networks of a complementary stage.
    fn mirror(&mut self, out: &str, network: impl Fn(&mut Self, Polarity, &str, &str)) {
        network(self, Polarity::N, out, GROUND);
        network(self, Polarity::P, out, VDD_NODE);
    }

    /// `out = !(xy + z(x + y))`, 10 devices.
    fn inverted_majority(&mut self, out: &str, x: &str, y: &str, z: &str) {
        self.mirror(out, |b, pol, out, rail| {
            let s1 = b.node();
            b.fet(pol, out, x, &s1);
            b.fet(pol, &s1, y, rail);
            let s2 = b.node();
            b.fet(pol, out, z, &s2);
            b.fet(pol, &s2, x, rail);
            b.fet(pol, &s2, y, rail);
        });
    }

    /// `out = !(xyz + (x + y + z)w)`, 14 devices.
    fn inverted_sum(&mut self, out: &str, x: &str, y: &str, z: &str, w: &str) {
        self.mirror(out, |b, pol, out, rail| {
            let (s1, s2) = (b.node(), b.node());
            b.fet(pol, out, x, &s1);
            b.fet(pol, &s1, y, &s2);
            b.fet(pol, &s2, z, rail);
            let s3 = b.node();
            b.fet(pol, out, w, &s3);
            for g in [x, y, z] {
                b.fet(pol, &s3, g, rail);
            }
        });
    }

    fn inverter(&mut self, out: &str, input: &str) {
        self.fet(Polarity::N, out, input, GROUND);
        self.fet(Polarity::P, out, input, VDD_NODE);
    }

    fn finish(self, title: &str, outputs: &[&str]) -> Cell {
        let mut circuit = Circuit::new(title);
        circuit.temp_c = self.cfg.temp_c;
        circuit.devices = self.devices;
        Cell {
            transistor_count: circuit.cntfet_count(),
            circuit,
            inputs: INPUTS.iter().map(|s| s.to_string()).collect(),
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// The proposed mirror full adder in the configured variant.
pub fn generate_proposed_fa(cfg: &CellConfig) -> Result<Cell, CellError> {
    cfg.validate()?;
    let mut b = Builder::new(cfg);
    let [a, bb, c] = INPUTS;
    b.inverted_majority("COUTB", a, bb, c);
    b.inverted_sum("SUMB", a, bb, c, "COUTB");
    Ok(match cfg.variant {
        Variant::Core24 => b.finish("proposed 24-device CNTFET full adder", &["SUMB", "COUTB"]),
        Variant::Buffered => {
            b.inverter("SUM", "SUMB");
            b.inverter("COUT", "COUTB");
            b.finish(
                "proposed CNTFET full adder with output inverters",
                &["SUM", "COUT"],
            )
        }
    })
}

/// Majority-gate reference adder, 34 devices, true outputs.
pub fn generate_majority_fa(cfg: &CellConfig) -> Result<Cell, CellError> {
    cfg.validate()?;
    let mut b = Builder::new(cfg);
    let [a, bb, c] = INPUTS;
    b.inverted_majority("COUTB", a, bb, c);
    b.inverter("COUT", "COUTB");
    b.inverter("CB", c);
    b.inverted_majority("MABB", a, bb, "CB");
    b.inverted_majority("SUM", "COUT", "CB", "MABB");
    Ok(b.finish("majority-gate reference full adder", &["SUM", "COUT"]))
}

/// Wraps a cell with supply, input pulses, loads, `.tran` over two
/// stimulus windows and power/delay/PDP measures over the second window.
pub fn generate_testbench(
    cell: &Cell,
    cfg: &CellConfig,
    stim: &Stimulus,
) -> Result<Circuit, CellError> {
    cfg.validate()?;
    stim.validate()?;
    let nodes = cell.circuit.nodes();
    for input in &cell.inputs {
        if !nodes.contains(input) {
            return Err(CellError::MissingInput(input.clone()));
        }
    }
    let mut c = cell.circuit.clone();
    c.title = format!("{} test bench", cell.circuit.title);
    c.temp_c = cfg.temp_c;
    for out in &cell.outputs {
        c.devices.push(Device::capacitor(
            format!("CL{out}"),
            out,
            GROUND,
            cfg.load_cap,
            None,
        ));
    }
    c.sources.push(Source {
        name: VDD_SOURCE.into(),
        plus: VDD_NODE.into(),
        minus: GROUND.into(),
        shape: SourceShape::Dc(cfg.vdd),
    });
    let high = stim.input_high.unwrap_or(cfg.vdd);
    for (input, period) in cell.inputs.iter().zip(stim.periods()) {
        c.sources.push(Source {
            name: format!("V{input}"),
            plus: input.clone(),
            minus: GROUND.into(),
            shape: SourceShape::Pulse(Pulse {
                v1: 0.0,
                v2: high,
                delay: period / 2.0,
                rise: stim.transition,
                fall: stim.transition,
                width: period / 2.0 - stim.transition,
                period,
            }),
        });
    }
    let window = stim.window();
    c.analyses = vec![Analysis::Tran {
        step: stim.transition / 10.0,
        stop: 2.0 * window,
    }];
    c.measures = vec![
        MeasureSpec {
            name: "power".into(),
            kind: MeasureKind::AvgPower {
                source: VDD_SOURCE.into(),
                from: Some(window),
                to: Some(2.0 * window),
            },
        },
        MeasureSpec {
            name: "delay".into(),
            kind: MeasureKind::Delay {
                inputs: cell.inputs.clone(),
                outputs: cell.outputs.clone(),
                fraction: 0.5,
                vdd: Some(cfg.vdd),
                from: Some(window),
                to: Some(2.0 * window),
            },
        },
        MeasureSpec {
            name: "pdp".into(),
            kind: MeasureKind::Pdp,
        },
    ];
    Ok(c)
}
