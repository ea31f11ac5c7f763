use std::collections::{HashMap, HashSet};
use std::fmt;

use super::{Circuit, DeviceKind, GROUND};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub node: Option<String>,
    pub message: String,
}

impl Diagnostic {
    fn error(node: Option<&str>, message: String) -> Self {
        Self {
            severity: Severity::Error,
            node: node.map(str::to_string),
            message,
        }
    }

    fn warning(node: Option<&str>, message: String) -> Self {
        Self {
            severity: Severity::Warning,
            node: node.map(str::to_string),
            message,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

/// Minimal union-find over node indices.
pub(crate) struct Dsu(Vec<usize>);

impl Dsu {
    pub(crate) fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Structural checks. An empty result means the circuit can be simulated;
/// warnings flag decks that parse but lack an analysis or a DC path.
pub fn validate(c: &Circuit) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let nodes = c.nodes();
    let index: HashMap<&str, usize> = nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();

    let mut names = HashSet::new();
    for name in c
        .devices
        .iter()
        .map(|d| &d.name)
        .chain(c.sources.iter().map(|s| &s.name))
    {
        if !names.insert(name.to_ascii_lowercase()) {
            out.push(Diagnostic::error(
                None,
                format!("duplicate element name `{name}`"),
            ));
        }
    }
    for d in &c.devices {
        let expected = if d.is_cntfet() { 3 } else { 2 };
        if d.terminals.len() != expected {
            out.push(Diagnostic::error(
                None,
                format!(
                    "`{}` has {} terminals, expected {expected}",
                    d.name,
                    d.terminals.len()
                ),
            ));
        }
        if let DeviceKind::Cntfet(spec) = &d.kind {
            if !spec.chirality.is_semiconducting() {
                out.push(Diagnostic::error(
                    None,
                    format!("`{}` uses metallic chirality {}", d.name, spec.chirality),
                ));
            }
        }
    }

    let Some(&ground) = index.get(GROUND) else {
        out.push(Diagnostic::error(
            None,
            "ground node \"0\" is never referenced".into(),
        ));
        return out;
    };

    // Reachability through any element terminal.
    let mut any = Dsu::new(nodes.len());
    // Reachability through DC-conducting branches only.
    let mut dc = Dsu::new(nodes.len());
    let mut plate_only: Vec<bool> = vec![true; nodes.len()];
    let mut has_ic: Vec<bool> = vec![false; nodes.len()];
    for d in &c.devices {
        let expected = if d.is_cntfet() { 3 } else { 2 };
        if d.terminals.len() != expected {
            continue;
        }
        let idx: Vec<usize> = d.terminals.iter().map(|t| index[t.as_str()]).collect();
        for w in idx.windows(2) {
            any.union(w[0], w[1]);
        }
        match &d.kind {
            DeviceKind::Cntfet(_) => {
                dc.union(idx[0], idx[2]);
                idx.iter().for_each(|&i| plate_only[i] = false);
            }
            DeviceKind::Resistor { .. } => {
                dc.union(idx[0], idx[1]);
                idx.iter().for_each(|&i| plate_only[i] = false);
            }
            DeviceKind::Capacitor { ic, .. } => {
                if ic.is_some() {
                    idx.iter().for_each(|&i| has_ic[i] = true);
                }
            }
        }
    }
    for s in &c.sources {
        let (a, b) = (index[s.plus.as_str()], index[s.minus.as_str()]);
        any.union(a, b);
        dc.union(a, b);
        plate_only[a] = false;
        plate_only[b] = false;
    }

    let ground_any = any.find(ground);
    let ground_dc = dc.find(ground);
    for (i, node) in nodes.iter().enumerate() {
        if i == ground {
            continue;
        }
        if any.find(i) != ground_any {
            out.push(Diagnostic::error(
                Some(node),
                format!("node `{node}` is not connected to ground"),
            ));
        } else if plate_only[i] && !has_ic[i] {
            out.push(Diagnostic::warning(
                Some(node),
                format!("node `{node}` touches only capacitor plates and has no initial condition"),
            ));
        } else if dc.find(i) != ground_dc && !has_ic[i] {
            out.push(Diagnostic::warning(
                Some(node),
                format!("node `{node}` has no DC path to ground"),
            ));
        }
    }

    if c.analyses.is_empty() {
        out.push(Diagnostic::warning(
            None,
            "no analysis (.op or .tran)".into(),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::{parse, Circuit, Device};
    use super::*;

    #[test]
    fn divider_is_clean() {
        let c = parse("V1 1 0 DC 1\nR1 1 2 1k\nR2 2 0 1k\n.op\n.end\n").unwrap();
        assert_eq!(validate(&c), vec![]);
    }

    #[test]
    fn floating_capacitor_plate() {
        let c = parse("V1 1 0 DC 1\nR1 1 0 1k\nC1 1 x 1f\n.op\n.end\n").unwrap();
        let d = validate(&c);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].severity, Severity::Warning);
        assert_eq!(d[0].node.as_deref(), Some("x"));
    }

    #[test]
    fn missing_ground() {
        let mut c = Circuit::default();
        c.devices.push(Device::resistor("R1", "a", "b", 1.0));
        let d = validate(&c);
        assert!(d
            .iter()
            .any(|d| d.is_error() && d.message.contains("ground")));
    }

    #[test]
    fn disconnected_island() {
        let c = parse("V1 1 0 DC 1\nR1 1 0 1k\nR2 a b 1k\n.op\n.end\n").unwrap();
        let errs: Vec<_> = validate(&c)
            .into_iter()
            .filter(Diagnostic::is_error)
            .collect();
        assert_eq!(errs.len(), 2);
    }

    #[test]
    fn missing_analysis_is_warning() {
        let c = parse("V1 1 0 DC 1\nR1 1 0 1k\n.end\n").unwrap();
        let d = validate(&c);
        assert_eq!(d.len(), 1);
        assert!(!d[0].is_error());
    }
}
