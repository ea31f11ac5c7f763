use std::borrow::Cow;
use std::io::{self, Write};

use super::system::MnaSystem;
use crate::netlist::GROUND;

/// Sampled transient result. All series share the length of `times`.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub times: Vec<f64>,
    pub node_names: Vec<String>,
    /// One series per entry of `node_names`.
    pub node_volts: Vec<Vec<f64>>,
    pub source_names: Vec<String>,
    /// `(plus, minus)` node of each source.
    pub source_terminals: Vec<(String, String)>,
    /// Current delivered out of each source's `+` terminal into the circuit, A.
    pub source_currents: Vec<Vec<f64>>,
}

impl Waveform {
    pub(crate) fn new(sys: &MnaSystem, capacity: usize) -> Self {
        let name =
            |n: Option<usize>| n.map_or_else(|| GROUND.to_string(), |i| sys.node_names[i].clone());
        Self {
            times: Vec::with_capacity(capacity),
            node_names: sys.node_names.clone(),
            node_volts: vec![Vec::with_capacity(capacity); sys.node_count()],
            source_names: sys.sources.iter().map(|s| s.name.clone()).collect(),
            source_terminals: sys
                .sources
                .iter()
                .map(|s| (name(s.plus), name(s.minus)))
                .collect(),
            source_currents: vec![Vec::with_capacity(capacity); sys.sources.len()],
        }
    }

    pub(crate) fn push(&mut self, t: f64, x: &[f64]) {
        let nn = self.node_names.len();
        self.times.push(t);
        for (series, v) in self.node_volts.iter_mut().zip(x) {
            series.push(*v);
        }
        for (series, i) in self.source_currents.iter_mut().zip(&x[nn..]) {
            series.push(*i);
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Node voltage series; ground yields zeros.
    pub fn node(&self, name: &str) -> Option<Cow<'_, [f64]>> {
        if name == GROUND {
            return Some(Cow::Owned(vec![0.0; self.len()]));
        }
        self.node_names
            .iter()
            .position(|n| n == name)
            .map(|i| Cow::Borrowed(self.node_volts[i].as_slice()))
    }

    fn source_index(&self, name: &str) -> Option<usize> {
        self.source_names
            .iter()
            .position(|n| n.eq_ignore_ascii_case(name))
    }

    pub fn source_current(&self, name: &str) -> Option<&[f64]> {
        self.source_index(name)
            .map(|i| self.source_currents[i].as_slice())
    }

    /// `v(plus) - v(minus)` for a source.
    pub fn source_voltage(&self, name: &str) -> Option<Vec<f64>> {
        let (plus, minus) = &self.source_terminals[self.source_index(name)?];
        let (p, m) = (self.node(plus)?, self.node(minus)?);
        Some(p.iter().zip(m.iter()).map(|(a, b)| a - b).collect())
    }

    /// Header `time,<node>...,I(<vsrc>)...`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut header = vec!["time".to_string()];
        header.extend(self.node_names.iter().cloned());
        header.extend(self.source_names.iter().map(|s| format!("I({s})")));
        writeln!(w, "{}", header.join(","))?;
        for k in 0..self.len() {
            write!(w, "{:.16e}", self.times[k])?;
            for series in self.node_volts.iter().chain(&self.source_currents) {
                write!(w, ",{:.16e}", series[k])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}
