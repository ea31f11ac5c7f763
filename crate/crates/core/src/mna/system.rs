//! Compiled MNA system and its residual/Jacobian stamps.
//!
//! Unknown layout: non-ground node voltages, then one branch current per
//! voltage source, then one per pinned initial condition. A branch current
//! is the current delivered out of the element's `+` terminal into the
//! circuit.

use std::collections::HashMap;

use super::lu::DenseMatrix;
use super::SimError;
use crate::device::{self, CntfetParams, ModelConfig};
use crate::netlist::{Circuit, DeviceKind, SourceShape, GROUND};

#[derive(Debug, Clone)]
pub(crate) struct Fet {
    pub drain: Option<usize>,
    pub gate: Option<usize>,
    pub source: Option<usize>,
    pub params: CntfetParams,
}

#[derive(Debug, Clone)]
pub(crate) struct Resistor {
    pub a: Option<usize>,
    pub b: Option<usize>,
    pub conductance: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Capacitor {
    pub a: Option<usize>,
    pub b: Option<usize>,
    pub farads: f64,
    pub ic: Option<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct VSource {
    pub name: String,
    pub plus: Option<usize>,
    pub minus: Option<usize>,
    pub shape: SourceShape,
}

/// Voltage constraint `v(a) - v(b) = value`, used to pin capacitor initial
/// conditions during the t = 0 solve.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Pin {
    pub a: Option<usize>,
    pub b: Option<usize>,
    pub value: f64,
}

/// Linearized capacitor for one timestep: current a->b = geq * v_ab + ieq.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Companion {
    pub geq: f64,
    pub ieq: f64,
}

/// Everything besides the unknown vector that a stamp depends on.
#[derive(Debug, Clone, Copy)]
pub struct StampContext<'a> {
    pub time: f64,
    pub source_scale: f64,
    pub gmin: f64,
    /// `None` treats capacitors as open (DC).
    pub companions: Option<&'a [Companion]>,
    pub(crate) pins: &'a [Pin],
}

impl<'a> StampContext<'a> {
    pub fn dc(gmin: f64) -> Self {
        Self {
            time: 0.0,
            source_scale: 1.0,
            gmin,
            companions: None,
            pins: &[],
        }
    }

    /// One transient step at `time` with the given capacitor companions.
    pub fn step(time: f64, gmin: f64, companions: &'a [Companion]) -> Self {
        Self {
            time,
            source_scale: 1.0,
            gmin,
            companions: Some(companions),
            pins: &[],
        }
    }
}

/// Jacobian, residual and per-row current scale at one state.
#[derive(Debug, Clone)]
pub struct Stamp {
    pub jacobian: DenseMatrix,
    pub residual: Vec<f64>,
    /// Largest branch-current magnitude entering each node row.
    pub scale: Vec<f64>,
}

/// A circuit lowered to index form for repeated stamping.
#[derive(Debug, Clone)]
pub struct MnaSystem {
    pub(crate) node_names: Vec<String>,
    pub(crate) fets: Vec<Fet>,
    pub(crate) resistors: Vec<Resistor>,
    pub(crate) capacitors: Vec<Capacitor>,
    pub(crate) sources: Vec<VSource>,
    pub(crate) temp_k: f64,
}

impl MnaSystem {
    pub fn compile(c: &Circuit, model: &ModelConfig) -> Result<Self, SimError> {
        model.validate()?;
        let mut node_names: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        for n in c.nodes() {
            if n != GROUND {
                index.insert(n.clone(), node_names.len());
                node_names.push(n);
            }
        }
        let at = |name: &str| -> Option<usize> { index.get(name).copied() };

        let mut sys = Self {
            node_names: node_names.clone(),
            fets: Vec::new(),
            resistors: Vec::new(),
            capacitors: Vec::new(),
            sources: Vec::new(),
            temp_k: c.temp_k(),
        };
        for d in &c.devices {
            let t = &d.terminals;
            match &d.kind {
                DeviceKind::Cntfet(spec) => {
                    if t.len() != 3 {
                        return Err(SimError::InvalidCircuit(format!(
                            "`{}` needs 3 terminals",
                            d.name
                        )));
                    }
                    let params =
                        CntfetParams::new(spec.polarity, spec.chirality, spec.tubes, model)?;
                    let (drain, gate, source) = (at(&t[0]), at(&t[1]), at(&t[2]));
                    // Lumped, bias-independent gate capacitance split evenly.
                    let half = params.gate_cap / 2.0;
                    for other in [source, drain] {
                        if gate != other {
                            sys.capacitors.push(Capacitor {
                                a: gate,
                                b: other,
                                farads: half,
                                ic: None,
                            });
                        }
                    }
                    sys.fets.push(Fet {
                        drain,
                        gate,
                        source,
                        params,
                    });
                }
                DeviceKind::Resistor { ohms } => {
                    if t.len() != 2 || *ohms <= 0.0 {
                        return Err(SimError::InvalidCircuit(format!(
                            "bad resistor `{}`",
                            d.name
                        )));
                    }
                    sys.resistors.push(Resistor {
                        a: at(&t[0]),
                        b: at(&t[1]),
                        conductance: 1.0 / ohms,
                    });
                }
                DeviceKind::Capacitor { farads, ic } => {
                    if t.len() != 2 || *farads <= 0.0 {
                        return Err(SimError::InvalidCircuit(format!(
                            "bad capacitor `{}`",
                            d.name
                        )));
                    }
                    sys.capacitors.push(Capacitor {
                        a: at(&t[0]),
                        b: at(&t[1]),
                        farads: *farads,
                        ic: *ic,
                    });
                }
            }
        }
        for s in &c.sources {
            sys.sources.push(VSource {
                name: s.name.clone(),
                plus: at(&s.plus),
                minus: at(&s.minus),
                shape: s.shape,
            });
        }
        Ok(sys)
    }

    pub fn node_count(&self) -> usize {
        self.node_names.len()
    }

    pub fn node_names(&self) -> &[String] {
        &self.node_names
    }

    pub fn source_names(&self) -> impl Iterator<Item = &str> {
        self.sources.iter().map(|s| s.name.as_str())
    }

    pub fn capacitor_count(&self) -> usize {
        self.capacitors.len()
    }

    pub fn has_nonlinear(&self) -> bool {
        !self.fets.is_empty()
    }

    pub fn temp_k(&self) -> f64 {
        self.temp_k
    }

    /// Dimension of the unknown vector for a stamp with `pins` pinned nodes.
    pub fn dim(&self, pins: usize) -> usize {
        self.node_names.len() + self.sources.len() + pins
    }

    pub(crate) fn ic_pins(&self) -> Vec<Pin> {
        self.capacitors
            .iter()
            .filter_map(|c| {
                c.ic.map(|v| Pin {
                    a: c.a,
                    b: c.b,
                    value: v,
                })
            })
            .collect()
    }

    /// Voltage across capacitor `k` (a minus b) for a given state.
    pub(crate) fn cap_voltage(&self, k: usize, x: &[f64]) -> f64 {
        let c = &self.capacitors[k];
        volt(x, c.a) - volt(x, c.b)
    }

    /// Builds the Jacobian and the KCL/branch residual at `x`.
    pub fn stamp(&self, x: &[f64], ctx: &StampContext<'_>) -> Result<Stamp, SimError> {
        let nn = self.node_names.len();
        let dim = self.dim(ctx.pins.len());
        assert_eq!(x.len(), dim, "state vector has the wrong dimension");
        let mut acc = Accumulator {
            jac: DenseMatrix::zeros(dim),
            res: vec![0.0; dim],
            scale: vec![0.0; nn],
        };

        for k in 0..nn {
            acc.leave(Some(k), ctx.gmin * x[k], &[(Some(k), ctx.gmin)]);
        }

        for r in &self.resistors {
            let g = r.conductance;
            let i = g * (volt(x, r.a) - volt(x, r.b));
            acc.leave(r.a, i, &[(r.a, g), (r.b, -g)]);
            acc.leave(r.b, -i, &[(r.a, -g), (r.b, g)]);
        }

        if let Some(comp) = ctx.companions {
            for (c, k) in self.capacitors.iter().zip(comp) {
                let i = k.geq * (volt(x, c.a) - volt(x, c.b)) + k.ieq;
                acc.leave(c.a, i, &[(c.a, k.geq), (c.b, -k.geq)]);
                acc.leave(c.b, -i, &[(c.a, -k.geq), (c.b, k.geq)]);
            }
        }

        for f in &self.fets {
            let (vd, vg, vs) = (volt(x, f.drain), volt(x, f.gate), volt(x, f.source));
            let op = device::evaluate(&f.params, vg - vs, vd - vs, self.temp_k)?;
            // dI/dvd = gds, dI/dvg = gm, dI/dvs = -(gm + gds)
            let gs = -(op.gm + op.gds);
            acc.leave(
                f.drain,
                op.id,
                &[(f.drain, op.gds), (f.gate, op.gm), (f.source, gs)],
            );
            acc.leave(
                f.source,
                -op.id,
                &[(f.drain, -op.gds), (f.gate, -op.gm), (f.source, -gs)],
            );
        }

        let branches = self
            .sources
            .iter()
            .map(|s| {
                (
                    s.plus,
                    s.minus,
                    ctx.source_scale * s.shape.value_at(ctx.time),
                )
            })
            .chain(
                ctx.pins
                    .iter()
                    .map(|p| (p.a, p.b, ctx.source_scale * p.value)),
            );
        for (j, (plus, minus, value)) in branches.enumerate() {
            let row = nn + j;
            let ib = x[row];
            acc.leave(plus, -ib, &[]);
            acc.leave(minus, ib, &[]);
            if let Some(p) = plus {
                acc.jac.add(p, row, -1.0);
                acc.jac.add(row, p, 1.0);
            }
            if let Some(m) = minus {
                acc.jac.add(m, row, 1.0);
                acc.jac.add(row, m, -1.0);
            }
            acc.res[row] = volt(x, plus) - volt(x, minus) - value;
        }

        Ok(Stamp {
            jacobian: acc.jac,
            residual: acc.res,
            scale: acc.scale,
        })
    }
}

struct Accumulator {
    jac: DenseMatrix,
    res: Vec<f64>,
    scale: Vec<f64>,
}

impl Accumulator {
    /// Current `i` leaving node `n`, with its partials w.r.t. the listed nodes.
    fn leave(&mut self, n: Option<usize>, i: f64, partials: &[(Option<usize>, f64)]) {
        let Some(n) = n else { return };
        self.res[n] += i;
        self.scale[n] = self.scale[n].max(i.abs());
        for &(col, g) in partials {
            if let Some(col) = col {
                self.jac.add(n, col, g);
            }
        }
    }
}

#[inline]
pub(crate) fn volt(x: &[f64], n: Option<usize>) -> f64 {
    n.map_or(0.0, |i| x[i])
}
