#![allow(dead_code)]

use std::path::PathBuf;

use nanosim::cells::{generate_proposed_fa, generate_testbench, CellConfig, Stimulus, Variant};
use nanosim::mna::{Companion, MnaSystem, StampContext};
use nanosim::Circuit;
use rand::Rng;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// Every `.ckt` deck in the fixture corpus, sorted by name.
pub fn corpus() -> Vec<(String, String)> {
    let mut decks: Vec<_> = std::fs::read_dir(fixture_dir().join("decks"))
        .expect("fixture decks")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "ckt"))
        .collect();
    decks.sort();
    decks
        .into_iter()
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            (name, std::fs::read_to_string(&p).unwrap())
        })
        .collect()
}

pub fn buffered_cfg(vdd: f64, temp_c: f64) -> CellConfig {
    CellConfig {
        vdd,
        temp_c,
        variant: Variant::Buffered,
        ..CellConfig::default()
    }
}

/// Buffered full-adder bench with the default stimulus.
pub fn fa_bench(vdd: f64, temp_c: f64) -> Circuit {
    let cfg = buffered_cfg(vdd, temp_c);
    let cell = generate_proposed_fa(&cfg).unwrap();
    generate_testbench(&cell, &cfg, &Stimulus::default()).unwrap()
}

pub fn rel_err(actual: f64, expected: f64) -> f64 {
    (actual - expected).abs() / expected.abs()
}

/// Worst row-relative Jacobian mismatch against central differences at a
/// random state, capacitors replaced by random companions.
pub fn jacobian_fd_error(sys: &MnaSystem, vdd: f64, rng: &mut impl Rng) -> f64 {
    let dim = sys.dim(0);
    let nn = sys.node_count();
    let x: Vec<f64> = (0..dim)
        .map(|k| {
            if k < nn {
                rng.gen_range(-0.2..vdd + 0.2)
            } else {
                rng.gen_range(-1e-4..1e-4)
            }
        })
        .collect();
    let comps: Vec<Companion> = (0..sys.capacitor_count())
        .map(|_| Companion {
            geq: rng.gen_range(0.0..1e-3),
            ieq: rng.gen_range(-1e-5..1e-5),
        })
        .collect();
    let time = rng.gen_range(0.0..6.4e-9);
    let ctx = StampContext::step(time, 1e-12, &comps);
    let at = sys.stamp(&x, &ctx).unwrap();
    let h = 1e-6;
    let mut fd = vec![vec![0.0; dim]; dim];
    for col in 0..dim {
        let mut xp = x.clone();
        let mut xm = x.clone();
        let step = if col < nn { h } else { 1e-9 };
        xp[col] += step;
        xm[col] -= step;
        let rp = sys.stamp(&xp, &ctx).unwrap().residual;
        let rm = sys.stamp(&xm, &ctx).unwrap().residual;
        for row in 0..dim {
            fd[row][col] = (rp[row] - rm[row]) / (2.0 * step);
        }
    }
    let mut worst: f64 = 0.0;
    for row in 0..dim {
        let jr = at.jacobian.row(row);
        let scale = jr
            .iter()
            .chain(&fd[row])
            .fold(0.0f64, |m, v| m.max(v.abs()))
            + 1e-18;
        for col in 0..dim {
            worst = worst.max((jr[col] - fd[row][col]).abs() / scale);
        }
    }
    worst
}
