use super::newton::{newton, solve_dc};
use super::system::{Companion, MnaSystem, StampContext};
use super::{Integration, SimError, SolverOptions, Waveform};
use crate::device::ModelConfig;
use crate::netlist::Circuit;

/// Fixed-step transient over the circuit's `.tran` window.
///
/// The t = 0 state is a DC solve with capacitor `ic=` values pinned. The
/// first step always uses backward Euler; later steps use `opts.integration`.
pub fn transient(
    c: &Circuit,
    model: &ModelConfig,
    opts: &SolverOptions,
) -> Result<Waveform, SimError> {
    opts.validate()?;
    let (step, stop) = c.tran().ok_or(SimError::NoTransient)?;
    if !(step > 0.0 && stop > step) {
        return Err(SimError::InvalidCircuit(format!(
            "bad .tran step {step} stop {stop}"
        )));
    }
    let sys = MnaSystem::compile(c, model)?;
    let nn = sys.node_count();
    let ns = sys.sources.len();

    let pins = sys.ic_pins();
    let (x0, _) = solve_dc(&sys, opts, &pins, 0.0, None)?;
    let mut x = x0[..nn + ns].to_vec();

    let ncap = sys.capacitor_count();
    let mut v_prev: Vec<f64> = (0..ncap).map(|k| sys.cap_voltage(k, &x)).collect();
    let mut i_prev = vec![0.0; ncap];
    let mut comps = vec![Companion { geq: 0.0, ieq: 0.0 }; ncap];

    let n_steps = (stop / step - 1e-9).ceil() as usize;
    let mut wave = Waveform::new(&sys, n_steps + 1);
    wave.push(0.0, &x);

    for k in 1..=n_steps {
        let t = k as f64 * step;
        let trapezoidal = opts.integration == Integration::Trapezoidal && k > 1;
        for (j, cap) in sys.capacitors.iter().enumerate() {
            comps[j] = if trapezoidal {
                let geq = 2.0 * cap.farads / step;
                Companion {
                    geq,
                    ieq: -geq * v_prev[j] - i_prev[j],
                }
            } else {
                let geq = cap.farads / step;
                Companion {
                    geq,
                    ieq: -geq * v_prev[j],
                }
            };
        }
        let ctx = StampContext {
            time: t,
            source_scale: 1.0,
            gmin: opts.gmin,
            companions: Some(&comps),
            pins: &[],
        };
        newton(&sys, &mut x, &ctx, opts).map_err(|e| match e {
            SimError::NonConvergence {
                iterations,
                residual,
                ..
            } => SimError::NonConvergence {
                time: Some(t),
                iterations,
                residual,
            },
            other => other,
        })?;
        for j in 0..ncap {
            let v = sys.cap_voltage(j, &x);
            i_prev[j] = comps[j].geq * v + comps[j].ieq;
            v_prev[j] = v;
        }
        wave.push(t, &x);
    }
    Ok(wave)
}
