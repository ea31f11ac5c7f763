//! Boolean reference functions and switch-level evaluation of CNTFET
//! networks.
//!
//! Transistors are ideal switches: an N device conducts when its gate is
//! ONE, a P device when its gate is ZERO. Rails are node `0` and the node
//! named `vdd` (any case); primary inputs are driven nodes as well.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::device::Polarity;
use crate::netlist::{Circuit, DeviceKind, GROUND};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LogicLevel {
    Zero,
    One,
    /// Connected to neither rail.
    Z,
    /// Possibly connected to both.
    X,
}

impl LogicLevel {
    pub fn from_bit(b: bool) -> Self {
        if b {
            Self::One
        } else {
            Self::Zero
        }
    }

    pub fn as_bit(self) -> Option<bool> {
        match self {
            Self::One => Some(true),
            Self::Zero => Some(false),
            Self::Z | Self::X => None,
        }
    }
}

impl fmt::Display for LogicLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Zero => "0",
            Self::One => "1",
            Self::Z => "Z",
            Self::X => "X",
        })
    }
}

/// True iff at least two inputs are true.
pub fn majority(a: bool, b: bool, c: bool) -> bool {
    (a && b) || (b && c) || (a && c)
}

/// `(sum, cout)` with `sum = abc + (a + b + c) * !cout`.
pub fn full_adder_reference(a: bool, b: bool, c: bool) -> (bool, bool) {
    let cout = majority(a, b, c);
    let sum = (a && b && c) || ((a || b || c) && !cout);
    (sum, cout)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SwitchError {
    #[error("device `{device}` is not a transistor; switch networks hold CNTFETs only")]
    NonSwitchElement { device: String },
    #[error("node `{node}` does not appear in the circuit")]
    UnknownNode { node: String },
    #[error("device `{device}` has its gate on `{node}`, which is neither an input, a rail nor an output")]
    NonLogicGate { device: String, node: String },
    #[error("combinational cycle through output `{node}`")]
    Cycle { node: String },
    #[error("too many inputs for exhaustive enumeration: {0}")]
    TooManyInputs(usize),
}

#[derive(Debug, Clone)]
struct Switch {
    name: String,
    a: usize,
    b: usize,
    gate: usize,
    polarity: Polarity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SwitchState {
    Open,
    Closed,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Driver {
    Rail(bool),
    Input(usize),
}

/// Transistor switch graph with outputs in evaluation order.
#[derive(Debug, Clone)]
pub struct SwitchNetwork {
    node_names: Vec<String>,
    switches: Vec<Switch>,
    /// `(switch, neighbour)` per node.
    adjacency: Vec<Vec<(usize, usize)>>,
    drivers: HashMap<usize, Driver>,
    inputs: Vec<String>,
    /// Node index per output, topologically ordered.
    order: Vec<usize>,
    outputs: Vec<String>,
}

fn is_vdd(name: &str) -> bool {
    name.eq_ignore_ascii_case("vdd")
}

/// Nodes with both a P and an N channel terminal, excluding rails and
/// `inputs`, in first-use order.
pub fn detect_outputs(c: &Circuit, inputs: &[String]) -> Vec<String> {
    let mut seen: BTreeMap<&str, (bool, bool)> = BTreeMap::new();
    for d in &c.devices {
        if let DeviceKind::Cntfet(spec) = &d.kind {
            for t in [&d.terminals[0], &d.terminals[2]] {
                let e = seen.entry(t.as_str()).or_default();
                match spec.polarity {
                    Polarity::P => e.0 = true,
                    Polarity::N => e.1 = true,
                }
            }
        }
    }
    c.nodes()
        .into_iter()
        .filter(|n| n != GROUND && !is_vdd(n) && !inputs.iter().any(|i| i == n))
        .filter(|n| seen.get(n.as_str()) == Some(&(true, true)))
        .collect()
}

pub fn build_switch_network(
    c: &Circuit,
    inputs: &[String],
    outputs: &[String],
) -> Result<SwitchNetwork, SwitchError> {
    let node_names = c.nodes();
    let index: HashMap<&str, usize> = node_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let lookup = |n: &str| {
        index
            .get(n)
            .copied()
            .ok_or_else(|| SwitchError::UnknownNode {
                node: n.to_string(),
            })
    };

    let mut switches = Vec::new();
    for d in &c.devices {
        match &d.kind {
            DeviceKind::Cntfet(spec) => switches.push(Switch {
                name: d.name.clone(),
                a: lookup(&d.terminals[0])?,
                gate: lookup(&d.terminals[1])?,
                b: lookup(&d.terminals[2])?,
                polarity: spec.polarity,
            }),
            DeviceKind::Capacitor { .. } => {}
            DeviceKind::Resistor { .. } => {
                return Err(SwitchError::NonSwitchElement {
                    device: d.name.clone(),
                });
            }
        }
    }

    let mut drivers = HashMap::new();
    for (i, n) in node_names.iter().enumerate() {
        if n == GROUND {
            drivers.insert(i, Driver::Rail(false));
        } else if is_vdd(n) {
            drivers.insert(i, Driver::Rail(true));
        }
    }
    for (k, n) in inputs.iter().enumerate() {
        drivers.insert(lookup(n)?, Driver::Input(k));
    }
    let out_idx: Vec<usize> = outputs
        .iter()
        .map(|n| lookup(n))
        .collect::<Result<_, _>>()?;

    let mut adjacency = vec![Vec::new(); node_names.len()];
    for (k, s) in switches.iter().enumerate() {
        adjacency[s.a].push((k, s.b));
        adjacency[s.b].push((k, s.a));
    }

    // Channel-connected region of each output, then its gate dependencies.
    let mut deps: Vec<Vec<usize>> = Vec::with_capacity(out_idx.len());
    for (pos, &o) in out_idx.iter().enumerate() {
        let region = reach(&adjacency, &drivers, o, |_| true).0;
        let mut d = Vec::new();
        for s in &switches {
            if !(region[s.a] || region[s.b]) {
                continue;
            }
            if drivers.contains_key(&s.gate) {
                continue;
            }
            match out_idx.iter().position(|&x| x == s.gate) {
                Some(q) if region[s.gate] => {
                    return Err(SwitchError::Cycle {
                        node: outputs[q].clone(),
                    })
                }
                Some(q) => {
                    if q != pos && !d.contains(&q) {
                        d.push(q);
                    }
                }
                None => {
                    return Err(SwitchError::NonLogicGate {
                        device: s.name.clone(),
                        node: node_names[s.gate].clone(),
                    })
                }
            }
        }
        deps.push(d);
    }

    let mut done = vec![false; out_idx.len()];
    let mut order = Vec::with_capacity(out_idx.len());
    while order.len() < out_idx.len() {
        let next = (0..out_idx.len()).find(|&q| !done[q] && deps[q].iter().all(|&d| done[d]));
        match next {
            Some(q) => {
                done[q] = true;
                order.push(out_idx[q]);
            }
            None => {
                let stuck = (0..out_idx.len()).find(|&q| !done[q]).unwrap_or(0);
                return Err(SwitchError::Cycle {
                    node: outputs[stuck].clone(),
                });
            }
        }
    }

    Ok(SwitchNetwork {
        node_names,
        switches,
        adjacency,
        drivers,
        inputs: inputs.to_vec(),
        order,
        outputs: outputs.to_vec(),
    })
}

/// Breadth-first search from `start` over switches accepted by `pass`,
/// stopping at driven nodes. Returns the undriven nodes visited and the
/// drivers hit.
fn reach<F: Fn(usize) -> bool>(
    adjacency: &[Vec<(usize, usize)>],
    drivers: &HashMap<usize, Driver>,
    start: usize,
    pass: F,
) -> (Vec<bool>, Vec<Driver>) {
    let mut seen = vec![false; adjacency.len()];
    let mut hit = Vec::new();
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(n) = queue.pop_front() {
        for &(sw, m) in &adjacency[n] {
            if seen[m] || !pass(sw) {
                continue;
            }
            match drivers.get(&m) {
                Some(d) => hit.push(*d),
                None => {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
    }
    (seen, hit)
}

impl SwitchNetwork {
    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    /// Outputs in the order given at build time.
    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn switch_count(&self) -> usize {
        self.switches.len()
    }

    fn state(&self, sw: &Switch, gate: LogicLevel) -> SwitchState {
        match (sw.polarity, gate) {
            (Polarity::N, LogicLevel::One) | (Polarity::P, LogicLevel::Zero) => SwitchState::Closed,
            (Polarity::N, LogicLevel::Zero) | (Polarity::P, LogicLevel::One) => SwitchState::Open,
            _ => SwitchState::Unknown,
        }
    }

    fn resolve(&self, node: usize, states: &[SwitchState], assignment: &[bool]) -> LogicLevel {
        let level = |d: &Driver| match d {
            Driver::Rail(v) => *v,
            Driver::Input(k) => assignment[*k],
        };
        let (_, definite) = reach(&self.adjacency, &self.drivers, node, |k| {
            states[k] == SwitchState::Closed
        });
        let (_, possible) = reach(&self.adjacency, &self.drivers, node, |k| {
            states[k] != SwitchState::Open
        });
        let def_one = definite.iter().any(&level);
        let def_zero = definite.iter().any(|d| !level(d));
        let pos_one = possible.iter().any(&level);
        let pos_zero = possible.iter().any(|d| !level(d));
        match (pos_one, pos_zero) {
            (false, false) => LogicLevel::Z,
            (true, false) if def_one => LogicLevel::One,
            (false, true) if def_zero => LogicLevel::Zero,
            _ => LogicLevel::X,
        }
    }

    /// Output levels keyed by output name. `assignment` follows `inputs()`.
    pub fn eval(&self, assignment: &[bool]) -> BTreeMap<String, LogicLevel> {
        assert_eq!(assignment.len(), self.inputs.len(), "one bit per input");
        let mut levels: Vec<Option<LogicLevel>> = vec![None; self.node_names.len()];
        for (&n, d) in &self.drivers {
            levels[n] = Some(match d {
                Driver::Rail(v) => LogicLevel::from_bit(*v),
                Driver::Input(k) => LogicLevel::from_bit(assignment[*k]),
            });
        }
        for &o in &self.order {
            let states: Vec<SwitchState> = self
                .switches
                .iter()
                .map(|s| self.state(s, levels[s.gate].unwrap_or(LogicLevel::X)))
                .collect();
            levels[o] = Some(self.resolve(o, &states, assignment));
        }
        self.outputs
            .iter()
            .map(|name| {
                let i = self
                    .node_names
                    .iter()
                    .position(|n| n == name)
                    .expect("output node indexed");
                (name.clone(), levels[i].unwrap_or(LogicLevel::X))
            })
            .collect()
    }

    /// Pull-up vs pull-down check for every output stage: over all
    /// assignments of the stage's gate nodes, the P network conducts to VDD
    /// exactly when the N network does not conduct to ground.
    pub fn stage_complementarity(&self) -> Vec<StageReport> {
        self.order
            .iter()
            .map(|&o| {
                let (region, _) = reach(&self.adjacency, &self.drivers, o, |_| true);
                let members: Vec<usize> = (0..self.switches.len())
                    .filter(|&k| region[self.switches[k].a] || region[self.switches[k].b])
                    .collect();
                let mut gates: Vec<usize> =
                    members.iter().map(|&k| self.switches[k].gate).collect();
                gates.sort_unstable();
                gates.dedup();
                let mut p_devices = 0;
                let mut n_devices = 0;
                for &k in &members {
                    match self.switches[k].polarity {
                        Polarity::P => p_devices += 1,
                        Polarity::N => n_devices += 1,
                    }
                }
                let rail = |d: &Driver, v: bool| matches!(d, Driver::Rail(r) if *r == v);
                let mut complementary = gates.len() <= 20;
                if complementary {
                    for bits in 0u32..(1 << gates.len()) {
                        let value = |g: usize| {
                            let pos = gates.iter().position(|&x| x == g).expect("gate listed");
                            bits >> pos & 1 == 1
                        };
                        let closed = |k: usize, pol: Polarity| {
                            let s = &self.switches[k];
                            s.polarity == pol
                                && members.contains(&k)
                                && (value(s.gate) == (pol == Polarity::N))
                        };
                        let up = reach(&self.adjacency, &self.drivers, o, |k| {
                            closed(k, Polarity::P)
                        })
                        .1
                        .iter()
                        .any(|d| rail(d, true));
                        let down = reach(&self.adjacency, &self.drivers, o, |k| {
                            closed(k, Polarity::N)
                        })
                        .1
                        .iter()
                        .any(|d| rail(d, false));
                        if up == down {
                            complementary = false;
                            break;
                        }
                    }
                }
                StageReport {
                    output: self.node_names[o].clone(),
                    gates: gates.iter().map(|&g| self.node_names[g].clone()).collect(),
                    p_devices,
                    n_devices,
                    complementary,
                }
            })
            .collect()
    }
}

/// One channel-connected stage driving an output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageReport {
    pub output: String,
    pub gates: Vec<String>,
    pub p_devices: usize,
    pub n_devices: usize,
    pub complementary: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleKind {
    /// `sum`, `cout` and their `b`-suffixed complements.
    FullAdder,
    /// `cout` / `maj` and their `b`-suffixed complements.
    Majority,
}

impl OracleKind {
    /// Expected value of output `name` for three input bits, if the oracle
    /// knows that output.
    pub fn expected(self, name: &str, bits: &[bool]) -> Option<bool> {
        let [a, b, c] = bits else { return None };
        let lower = name.to_ascii_lowercase();
        let (base, inverted) = match lower.strip_suffix('b') {
            Some(stem) if !stem.is_empty() => (stem, true),
            _ => (lower.as_str(), false),
        };
        let value = match (self, base) {
            (Self::FullAdder, "sum") => full_adder_reference(*a, *b, *c).0,
            (Self::FullAdder, "cout") | (Self::Majority, "cout" | "maj") => majority(*a, *b, *c),
            _ => return None,
        };
        Some(value ^ inverted)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthRow {
    pub inputs: Vec<bool>,
    pub actual: Vec<LogicLevel>,
    pub expected: Vec<Option<bool>>,
}

impl TruthRow {
    pub fn ok(&self) -> bool {
        self.actual
            .iter()
            .zip(&self.expected)
            .all(|(a, e)| a.as_bit().is_some() && e.is_none_or(|e| a.as_bit() == Some(e)))
    }
}

/// Exhaustive comparison of a network against an oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub rows: Vec<TruthRow>,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.first_failure().is_none()
    }

    pub fn first_failure(&self) -> Option<&TruthRow> {
        self.rows.iter().find(|r| !r.ok())
    }

    /// Number of outputs the oracle actually checked.
    pub fn checked_outputs(&self) -> usize {
        self.rows
            .first()
            .map_or(0, |r| r.expected.iter().filter(|e| e.is_some()).count())
    }
}

fn bits_str(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

impl fmt::Display for EquivalenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let header: Vec<&str> = self
            .inputs
            .iter()
            .chain(&self.outputs)
            .map(String::as_str)
            .collect();
        writeln!(f, "{}", header.join("\t"))?;
        for row in &self.rows {
            let mut cells: Vec<String> = row
                .inputs
                .iter()
                .map(|&b| u8::from(b).to_string())
                .collect();
            for (a, e) in row.actual.iter().zip(&row.expected) {
                match e {
                    Some(e) if a.as_bit() != Some(*e) => {
                        cells.push(format!("{a}!{}", u8::from(*e)))
                    }
                    _ => cells.push(a.to_string()),
                }
            }
            writeln!(f, "{}", cells.join("\t"))?;
        }
        match self.first_failure() {
            None => write!(f, "PASS ({} vectors)", self.rows.len()),
            Some(row) => {
                let detail: Vec<String> = self
                    .outputs
                    .iter()
                    .zip(row.actual.iter().zip(&row.expected))
                    .map(|(name, (a, e))| match e {
                        Some(e) => format!("{name}={a} (expected {})", u8::from(*e)),
                        None => format!("{name}={a}"),
                    })
                    .collect();
                write!(
                    f,
                    "FAIL at {}={}: {}",
                    self.inputs.join(""),
                    bits_str(&row.inputs),
                    detail.join(", ")
                )
            }
        }
    }
}

/// Enumerates every input assignment. `oracle(name, bits)` gives the
/// expected value of an output or `None` to only require a defined level.
/// Input `k` is bit `n - 1 - k` of the vector index, so the first input is
/// the most significant.
pub fn check_equivalence<F>(
    net: &SwitchNetwork,
    oracle: F,
) -> Result<EquivalenceReport, SwitchError>
where
    F: Fn(&str, &[bool]) -> Option<bool>,
{
    let n = net.inputs.len();
    if n > 20 {
        return Err(SwitchError::TooManyInputs(n));
    }
    let rows = (0u32..1 << n)
        .map(|v| {
            let bits: Vec<bool> = (0..n).map(|k| v >> (n - 1 - k) & 1 == 1).collect();
            let levels = net.eval(&bits);
            TruthRow {
                actual: net.outputs.iter().map(|o| levels[o]).collect(),
                expected: net.outputs.iter().map(|o| oracle(o, &bits)).collect(),
                inputs: bits,
            }
        })
        .collect();
    Ok(EquivalenceReport {
        inputs: net.inputs.clone(),
        outputs: net.outputs.clone(),
        rows,
    })
}
