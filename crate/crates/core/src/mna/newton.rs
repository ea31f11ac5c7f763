//! Damped Newton iteration and the DC convergence ladder.

use super::lu::solve_in_place;
use super::system::{MnaSystem, Pin, StampContext};
use super::{SimError, SolverOptions};
use crate::netlist::validate::Dsu;

/// Largest per-iteration change applied to a node voltage.
const MAX_NODE_STEP: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    #[default]
    Newton,
    GminStepping,
    SourceStepping,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NewtonStats {
    /// Linear solves performed by the final successful Newton run.
    pub iterations: usize,
    pub strategy: Strategy,
}

/// Runs Newton from `x` in place. Returns the number of linear solves.
pub(crate) fn newton(
    sys: &MnaSystem,
    x: &mut [f64],
    ctx: &StampContext<'_>,
    opts: &SolverOptions,
) -> Result<usize, SimError> {
    let nn = sys.node_count();
    let nonlinear = sys.has_nonlinear();
    let mut step_small = false;
    let mut worst = f64::INFINITY;
    for iter in 0..=opts.max_newton_iters {
        let stamp = sys.stamp(x, ctx)?;
        let mut kcl_ok = true;
        worst = 0.0;
        for (i, r) in stamp.residual.iter().enumerate() {
            let tol = if i < nn {
                opts.abstol + opts.reltol * stamp.scale[i]
            } else {
                opts.vntol + opts.reltol * x[i].abs()
            };
            if i < nn {
                worst = worst.max(r.abs());
            }
            if !(r.abs() <= tol) {
                kcl_ok = false;
            }
        }
        if iter > 0 && kcl_ok && (!nonlinear || step_small) {
            return Ok(iter);
        }
        if iter == opts.max_newton_iters {
            break;
        }
        let mut jac = stamp.jacobian;
        let mut delta: Vec<f64> = stamp.residual.iter().map(|r| -r).collect();
        solve_in_place(&mut jac, &mut delta).map_err(|s| SimError::Singular {
            unknown: unknown_name(sys, s.column),
        })?;
        step_small = true;
        for i in 0..nn {
            let next = x[i] + delta[i];
            if delta[i].abs() > opts.vntol + opts.reltol * x[i].abs().max(next.abs()) {
                step_small = false;
            }
            if nonlinear {
                delta[i] = delta[i].clamp(-MAX_NODE_STEP, MAX_NODE_STEP);
            }
        }
        for (xi, d) in x.iter_mut().zip(&delta) {
            *xi += d;
        }
        if x.iter().any(|v| !v.is_finite()) {
            break;
        }
    }
    Err(SimError::NonConvergence {
        time: None,
        iterations: opts.max_newton_iters,
        residual: worst,
    })
}

fn unknown_name(sys: &MnaSystem, k: usize) -> String {
    let nn = sys.node_count();
    if k < nn {
        format!("v({})", sys.node_names[k])
    } else if k - nn < sys.sources.len() {
        format!("i({})", sys.sources[k - nn].name)
    } else {
        format!("initial condition #{}", k - nn - sys.sources.len())
    }
}

/// Every node must reach ground through resistors, channels, sources or pins.
fn check_dc_paths(sys: &MnaSystem, pins: &[Pin]) -> Result<(), SimError> {
    let nn = sys.node_count();
    // Index `nn` stands for ground.
    let idx = |n: Option<usize>| n.unwrap_or(nn);
    let mut dsu = Dsu::new(nn + 1);
    for r in &sys.resistors {
        dsu.union(idx(r.a), idx(r.b));
    }
    for f in &sys.fets {
        dsu.union(idx(f.drain), idx(f.source));
    }
    for s in &sys.sources {
        dsu.union(idx(s.plus), idx(s.minus));
    }
    for p in pins {
        dsu.union(idx(p.a), idx(p.b));
    }
    let ground = dsu.find(nn);
    for k in 0..nn {
        if dsu.find(k) != ground {
            return Err(SimError::FloatingNode {
                node: sys.node_names[k].clone(),
            });
        }
    }
    Ok(())
}

/// DC solve at `time` with capacitors open and `pins` enforced.
pub(crate) fn solve_dc(
    sys: &MnaSystem,
    opts: &SolverOptions,
    pins: &[Pin],
    time: f64,
    guess: Option<&[f64]>,
) -> Result<(Vec<f64>, NewtonStats), SimError> {
    check_dc_paths(sys, pins)?;
    let dim = sys.dim(pins.len());
    let start = || guess.map_or_else(|| vec![0.0; dim], <[f64]>::to_vec);
    let ctx = |gmin: f64, scale: f64| StampContext {
        time,
        source_scale: scale,
        gmin,
        companions: None,
        pins,
    };

    let mut x = start();
    let first_err = match newton(sys, &mut x, &ctx(opts.gmin, 1.0), opts) {
        Ok(iterations) => {
            return Ok((
                x,
                NewtonStats {
                    iterations,
                    strategy: Strategy::Newton,
                },
            ))
        }
        Err(e @ (SimError::Device(_) | SimError::InvalidCircuit(_))) => return Err(e),
        Err(e) => e,
    };

    if sys.has_nonlinear() {
        let mut x = start();
        let mut ladder_ok = true;
        let mut g = 1e-3;
        while g > opts.gmin {
            if newton(sys, &mut x, &ctx(g, 1.0), opts).is_err() {
                ladder_ok = false;
                break;
            }
            g /= 10.0;
        }
        if ladder_ok {
            if let Ok(iterations) = newton(sys, &mut x, &ctx(opts.gmin, 1.0), opts) {
                return Ok((
                    x,
                    NewtonStats {
                        iterations,
                        strategy: Strategy::GminStepping,
                    },
                ));
            }
        }
    }

    let mut x = vec![0.0; dim];
    let mut last = 0;
    for k in 1..=opts.source_steps {
        let scale = k as f64 / opts.source_steps as f64;
        match newton(sys, &mut x, &ctx(opts.gmin, scale), opts) {
            Ok(it) => last = it,
            Err(_) => return Err(first_err),
        }
    }
    Ok((
        x,
        NewtonStats {
            iterations: last,
            strategy: Strategy::SourceStepping,
        },
    ))
}
