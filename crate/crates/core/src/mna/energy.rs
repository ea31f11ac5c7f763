use super::system::{volt, MnaSystem};
use super::{SimError, SolverOptions, Waveform};
use crate::device::{self, ModelConfig};
use crate::netlist::Circuit;

/// Energy bookkeeping over a transient run, joules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBalance {
    /// Integral of sum(v_src * i_src) over all sources.
    pub supplied: f64,
    /// Resistors, channels and gmin.
    pub dissipated: f64,
    /// Change in stored capacitor energy, final minus initial.
    pub stored: f64,
}

impl EnergyBalance {
    pub fn relative_error(&self) -> f64 {
        let residual = self.supplied - self.dissipated - self.stored;
        let scale = self
            .supplied
            .abs()
            .max(self.dissipated.abs() + self.stored.abs());
        if scale == 0.0 {
            0.0
        } else {
            residual.abs() / scale
        }
    }
}

/// Recomputes element powers from a waveform and integrates them with the
/// trapezoidal rule.
pub fn energy_balance(
    c: &Circuit,
    model: &ModelConfig,
    opts: &SolverOptions,
    w: &Waveform,
) -> Result<EnergyBalance, SimError> {
    let sys = MnaSystem::compile(c, model)?;
    if w.node_names != sys.node_names || w.is_empty() {
        return Err(SimError::InvalidCircuit(
            "waveform does not belong to this circuit".into(),
        ));
    }
    let nn = sys.node_count();
    let state = |k: usize| -> Vec<f64> {
        let mut x: Vec<f64> = w.node_volts.iter().map(|s| s[k]).collect();
        x.extend(w.source_currents.iter().map(|s| s[k]));
        x
    };

    let mut supplied = 0.0;
    let mut dissipated = 0.0;
    let mut prev: Option<(f64, f64, f64)> = None;
    for k in 0..w.len() {
        let x = state(k);
        let p_src: f64 = sys
            .sources
            .iter()
            .enumerate()
            .map(|(j, s)| (volt(&x, s.plus) - volt(&x, s.minus)) * x[nn + j])
            .sum();
        let mut p_diss: f64 = x[..nn].iter().map(|v| opts.gmin * v * v).sum();
        for r in &sys.resistors {
            let v = volt(&x, r.a) - volt(&x, r.b);
            p_diss += r.conductance * v * v;
        }
        for f in &sys.fets {
            let (vd, vg, vs) = (volt(&x, f.drain), volt(&x, f.gate), volt(&x, f.source));
            let id = device::drain_current(&f.params, vg - vs, vd - vs, sys.temp_k)?;
            p_diss += id * (vd - vs);
        }
        let t = w.times[k];
        if let Some((t0, s0, d0)) = prev {
            let h = t - t0;
            supplied += 0.5 * h * (s0 + p_src);
            dissipated += 0.5 * h * (d0 + p_diss);
        }
        prev = Some((t, p_src, p_diss));
    }

    let (first, last) = (state(0), state(w.len() - 1));
    let stored = (0..sys.capacitor_count())
        .map(|j| {
            let c = sys.capacitors[j].farads;
            let (v0, v1) = (sys.cap_voltage(j, &first), sys.cap_voltage(j, &last));
            0.5 * c * (v1 * v1 - v0 * v0)
        })
        .sum();
    Ok(EnergyBalance {
        supplied,
        dissipated,
        stored,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mna::transient;
    use crate::netlist::parse;

    #[test]
    fn rc_charge_balances() {
        let c = parse(
            "VIN in 0 PULSE(0 1 0 1p 1p 1 2)\nR1 in out 10k\nC1 out 0 10f\n.tran 1p 2n\n.end\n",
        )
        .unwrap();
        let opts = SolverOptions::default();
        let w = transient(&c, &ModelConfig::default(), &opts).unwrap();
        let e = energy_balance(&c, &ModelConfig::default(), &opts, &w).unwrap();
        // Half the drawn energy ends up on the capacitor.
        assert!((e.stored - 0.5 * 10e-15).abs() < 1e-3 * 5e-15);
        assert!((e.supplied - 10e-15).abs() < 0.02 * 10e-15, "{e:?}");
        assert!(e.relative_error() < 0.02, "{e:?}");
    }
}
