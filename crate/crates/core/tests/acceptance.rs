//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any of them fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nanosim::cells::{generate_majority_fa, generate_proposed_fa, CellConfig, Stimulus, Variant};
use nanosim::device::{self, drain_current, CntfetParams};
use nanosim::measure::{load_fixture_tables, run_sweep, trend_report, MeasureError};
use nanosim::mna::{dc_operating_point, energy_balance, transient, MnaSystem};
use nanosim::netlist::{parse, parse_bytes, serialize};
use nanosim::switch_logic::{
    build_switch_network, check_equivalence, detect_outputs, full_adder_reference, OracleKind,
};
use nanosim::{Chirality, ModelConfig, Polarity, SolverOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn pdp_fixture() -> Outcome {
    let t =
        load_fixture_tables(fixture_dir().join("paper_tables.csv")).map_err(|e| e.to_string())?;
    let cells = t.pdp.vdd_axis.len() * t.pdp.temp_axis.len();
    let anchor = t.power.get(0.7, 0.0).unwrap() * t.delay.get(0.7, 0.0).unwrap();
    let err = t.max_pdp_relative_error();
    check(
        cells == 42 && err <= 1e-3 && rel_err(anchor, 3.5634e-19) < 1e-4,
        format!("{cells} cells, max relative error {err:.2e}, 0.7 V/0 C product {anchor:.4e}"),
    )
}

fn logic_transient() -> Outcome {
    let vdd = 0.9;
    let stim = Stimulus::default();
    let bench = fa_bench(vdd, 27.0);
    let w = transient(&bench, &ModelConfig::default(), &SolverOptions::default())
        .map_err(|e| e.to_string())?;
    let series = |n: &str| w.node(n).unwrap().into_owned();
    let (a, b, c) = (series("A"), series("B"), series("C"));
    let (sum, cout) = (series("SUM"), series("COUT"));
    let at = |t: f64| w.times.iter().position(|&x| x >= t - 1e-15).unwrap();
    let slot = stim.slot();
    let start = stim.window();
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for k in 0..8 {
        let t0 = start + k as f64 * slot;
        let mid = at(t0 + slot / 2.0);
        let bits = [a[mid] > vdd / 2.0, b[mid] > vdd / 2.0, c[mid] > vdd / 2.0];
        let (s, co) = full_adder_reference(bits[0], bits[1], bits[2]);
        let end = at(t0 + slot) - 1;
        for (name, v, want) in [("SUM", sum[end], s), ("COUT", cout[end], co)] {
            let rail = if want { vdd } else { 0.0 };
            let dev = (v - rail).abs() / vdd;
            worst = worst.max(dev);
            if dev > 0.1 {
                failures.push(format!(
                    "{name}={v:.3} at ABC={}{}{}",
                    u8::from(bits[0]),
                    u8::from(bits[1]),
                    u8::from(bits[2])
                ));
            }
        }
    }
    let vectors: std::collections::BTreeSet<_> = (0..8)
        .map(|k| {
            let i = at(start + (k as f64 + 0.5) * slot);
            (a[i] > vdd / 2.0, b[i] > vdd / 2.0, c[i] > vdd / 2.0)
        })
        .collect();
    check(
        failures.is_empty() && vectors.len() == 8,
        format!(
            "{} distinct vectors, worst settled deviation {:.2}% of VDD{}",
            vectors.len(),
            worst * 100.0,
            if failures.is_empty() {
                String::new()
            } else {
                format!("; {}", failures.join(", "))
            }
        ),
    )
}

fn switch_equivalence() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    let inputs: Vec<String> = ["A", "B", "C"].map(String::from).to_vec();
    let cases = [
        (
            "core24",
            generate_proposed_fa(&CellConfig::default()),
            OracleKind::FullAdder,
        ),
        (
            "buffered",
            generate_proposed_fa(&buffered_cfg(0.9, 27.0)),
            OracleKind::FullAdder,
        ),
        (
            "majority-ref",
            generate_majority_fa(&CellConfig::default()),
            OracleKind::FullAdder,
        ),
    ];
    for (name, cell, oracle) in cases {
        let cell = cell.map_err(|e| e.to_string())?;
        let outputs = detect_outputs(&cell.circuit, &inputs);
        let net =
            build_switch_network(&cell.circuit, &inputs, &outputs).map_err(|e| e.to_string())?;
        let r = check_equivalence(&net, |o, bits| oracle.expected(o, bits))
            .map_err(|e| e.to_string())?;
        let covered = cell.outputs.iter().all(|o| net.outputs().contains(o));
        ok &= r.passed() && covered && r.checked_outputs() >= cell.outputs.len();
        lines.push(format!(
            "{name} {}",
            if r.passed() { "ok" } else { "mismatch" }
        ));
    }
    let core = generate_proposed_fa(&CellConfig::default()).map_err(|e| e.to_string())?;
    let net = build_switch_network(&core.circuit, &inputs, &["COUTB".to_string()])
        .map_err(|e| e.to_string())?;
    let r = check_equivalence(&net, |o, bits| OracleKind::Majority.expected(o, bits))
        .map_err(|e| e.to_string())?;
    ok &= r.passed() && r.checked_outputs() == 1;
    lines.push(format!(
        "majority stage {}",
        if r.passed() { "ok" } else { "mismatch" }
    ));
    check(ok, lines.join(", "))
}

fn sweep_axes(vdd: &[f64], temp: &[f64]) -> Result<nanosim::measure::SweepTable, String> {
    let factory = |v: f64, t: f64| -> Result<nanosim::Circuit, MeasureError> {
        let cfg = buffered_cfg(v, t);
        let cell = generate_proposed_fa(&cfg)?;
        Ok(nanosim::cells::generate_testbench(
            &cell,
            &cfg,
            &Stimulus::default(),
        )?)
    };
    run_sweep(
        factory,
        vdd,
        temp,
        &ModelConfig::default(),
        &SolverOptions::default(),
        None,
    )
    .map_err(|e| e.to_string())
}

const VDD_COLUMN: [f64; 6] = [0.7, 0.8, 0.9, 1.0, 1.1, 1.2];
const TEMP_ROW: [f64; 7] = [0.0, 9.0, 18.0, 27.0, 36.0, 45.0, 54.0];

fn trends(column: &nanosim::measure::SweepTable) -> Outcome {
    let r = trend_report(column, 27.0, 0.9);
    let p: Vec<f64> = column.cells.iter().map(|row| row[0].power_w).collect();
    let d: Vec<f64> = column.cells.iter().map(|row| row[0].delay_s).collect();
    let mut pairs = 0;
    let (mut rising, mut falling) = (0, 0);
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            pairs += 1;
            rising += usize::from(p[j] > p[i]);
            falling += usize::from(d[j] < d[i]);
        }
    }
    check(
        r.monotone() && rising == pairs && falling == pairs,
        format!(
            "power rising {rising}/{pairs} ordered pairs ({:.3e}..{:.3e} W), delay falling {falling}/{pairs} ({:.3e}..{:.3e} s)",
            p[0],
            p[p.len() - 1],
            d[0],
            d[d.len() - 1]
        ),
    )
}

fn spread(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    (max - min) / (xs.iter().sum::<f64>() / xs.len() as f64)
}

fn flatness(column: &nanosim::measure::SweepTable, row: &nanosim::measure::SweepTable) -> Outcome {
    let across_vdd: Vec<f64> = column.cells.iter().map(|r| r[0].power_w).collect();
    let across_temp: Vec<f64> = row.cells[0].iter().map(|m| m.power_w).collect();
    let (t, v) = (spread(&across_temp), spread(&across_vdd));
    check(
        t < v,
        format!("power spread across temperature {t:.4e} vs across VDD {v:.4e}"),
    )
}

fn solver_oracles() -> Outcome {
    let model = ModelConfig::default();
    let opts = SolverOptions::default();
    let mut notes = Vec::new();
    let mut ok = true;

    let div =
        parse(&std::fs::read_to_string(fixture_dir().join("decks/divider.ckt")).unwrap()).unwrap();
    let op = dc_operating_point(&div, &model, &opts, 27.0).map_err(|e| e.to_string())?;
    let e = (op.voltage("2").unwrap() - 0.5).abs();
    ok &= e <= 1e-9;
    notes.push(format!("divider error {e:.1e} V"));

    let rc = parse(&std::fs::read_to_string(fixture_dir().join("decks/rc_discharge.ckt")).unwrap())
        .unwrap();
    let w = transient(&rc, &model, &opts).map_err(|e| e.to_string())?;
    let v = w.node("top").unwrap();
    let tau = 10e3 * 10e-15;
    let e = w
        .times
        .iter()
        .zip(v.iter())
        .map(|(t, v)| (v - (-t / tau).exp()).abs())
        .fold(0.0, f64::max);
    ok &= e <= 0.01;
    notes.push(format!("RC max error {:.3}%", e * 100.0));

    let bench = fa_bench(0.9, 27.0);
    let sys = MnaSystem::compile(&bench, &model).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let j = (0..1000)
        .map(|_| jacobian_fd_error(&sys, 0.9, &mut rng))
        .fold(0.0, f64::max);
    ok &= j <= 1e-4;
    notes.push(format!("Jacobian FD error {j:.1e} over 1000 states"));

    let w = transient(&bench, &model, &opts).map_err(|e| e.to_string())?;
    let eb = energy_balance(&bench, &model, &opts, &w).map_err(|e| e.to_string())?;
    ok &= eb.relative_error() <= 0.02;
    notes.push(format!("energy balance error {:.1e}", eb.relative_error()));
    check(ok, notes.join(", "))
}

fn device_model() -> Outcome {
    let cfg = ModelConfig::default();
    let c = Chirality::new(19, 0).unwrap();
    let d = device::diameter(c, &cfg);
    let vth = device::threshold_voltage(d, &cfg).unwrap();
    let mut ok = rel_err(d, 1.50585) < 1e-4 && rel_err(vth, 0.27891) < 1e-4;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let h = 1e-6;
    for polarity in [Polarity::N, Polarity::P] {
        let p = CntfetParams::new(polarity, c, 3, &cfg).unwrap();
        let s = if polarity == Polarity::N { 1.0 } else { -1.0 };
        let vt = p.vth.abs();
        let mut points: Vec<(f64, f64, f64)> = Vec::new();
        for temp in [273.15, 300.15, 327.15] {
            for dg in [
                -6e-3, -5e-3, -4e-3, -2e-3, -1e-3, 0.0, 1e-3, 2e-3, 4e-3, 5e-3, 6e-3, 0.3,
            ] {
                let vov = dg;
                for vds in [
                    0.0,
                    1e-4,
                    -1e-4,
                    5e-3,
                    -5e-3,
                    0.5,
                    -0.5,
                    vov,
                    vov + 5e-3,
                    vov - 5e-3,
                    vov + 1e-3,
                    vov - 1e-3,
                ] {
                    points.push((vt + vov, vds, temp));
                }
            }
        }
        for _ in 0..1000 {
            points.push((
                rng.gen_range(-0.3..1.3),
                rng.gen_range(-1.3..1.3),
                rng.gen_range(250.0..400.0),
            ));
        }
        for (vgs, vds, temp) in points {
            let (vgs, vds) = (s * vgs, s * vds);
            let (gm, gds) = device::conductances(&p, vgs, vds, temp).unwrap();
            let fm = (drain_current(&p, vgs + h, vds, temp).unwrap()
                - drain_current(&p, vgs - h, vds, temp).unwrap())
                / (2.0 * h);
            let fds = (drain_current(&p, vgs, vds + h, temp).unwrap()
                - drain_current(&p, vgs, vds - h, temp).unwrap())
                / (2.0 * h);
            let scale = gm.abs().max(gds.abs()).max(fm.abs()).max(fds.abs()) + 1e-18;
            worst = worst
                .max((gm - fm).abs() / scale)
                .max((gds - fds).abs() / scale);
        }
    }
    ok &= worst <= 1e-4;
    check(
        ok,
        format!("d(19,0) = {d:.5} nm, Vth = {vth:.5} V, conductance FD error {worst:.1e}"),
    )
}

fn parser() -> Outcome {
    let mut ok = true;
    let corpus = corpus();
    for (name, text) in &corpus {
        let c1 = parse(text).map_err(|e| format!("{name}: {e}"))?;
        let s1 = serialize(&c1);
        let c2 = parse(&s1).map_err(|e| format!("{name} re-parse: {e}"))?;
        if c1 != c2 || serialize(&c2) != s1 {
            ok = false;
        }
    }
    let alphabet: &[u8] = b"RCVMNPrcvmnp0123456789.-+ \n\t,=()*uUfFpPnNkKmMgGeE/";
    let caught = std::panic::catch_unwind(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut diagnostics = 0usize;
        for i in 0..100_000 {
            let len = rng.gen_range(0..200);
            let bytes: Vec<u8> = if i % 2 == 0 {
                (0..len).map(|_| rng.gen()).collect()
            } else {
                (0..len)
                    .map(|_| alphabet[rng.gen_range(0..alphabet.len())])
                    .collect()
            };
            if parse_bytes(&bytes).is_err() {
                diagnostics += 1;
            }
        }
        diagnostics
    });
    let detail = match &caught {
        Ok(n) => format!(
            "{} decks round-trip, 100000 fuzz inputs ({n} diagnostics, no panic)",
            corpus.len()
        ),
        Err(_) => "fuzz input panicked".to_string(),
    };
    check(ok && caught.is_ok(), detail)
}

fn cell_structure() -> Outcome {
    let core = generate_proposed_fa(&CellConfig {
        variant: Variant::Core24,
        ..CellConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let text = serialize(&core.circuit);
    let reparsed = parse(&text).map_err(|e| e.to_string())?;
    let count = reparsed.cntfet_count();
    let inputs: Vec<String> = ["A", "B", "C"].map(String::from).to_vec();
    let net = build_switch_network(&reparsed, &inputs, &core.outputs).map_err(|e| e.to_string())?;
    let stages = net.stage_complementarity();
    let complementary = stages.iter().filter(|s| s.complementary).count();
    check(
        count == 24 && !stages.is_empty() && complementary == stages.len(),
        format!(
            "{count} CNTFETs, {complementary}/{} stages complementary",
            stages.len()
        ),
    )
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report =
        |n: usize, name: &str, started: Instant, limit: Option<Duration>, r: Outcome| {
            let took = started.elapsed();
            let late = limit.is_some_and(|l| took > l);
            let (verdict, detail) = match r {
                Ok(d) if !late => ("PASS", d),
                Ok(d) => (
                    "FAIL",
                    format!("{d}; took {took:.1?}, limit {:?}", limit.unwrap()),
                ),
                Err(d) => ("FAIL", d),
            };
            if verdict == "FAIL" {
                failed += 1;
            }
            println!("criterion {n} {verdict}: {name}: {detail} [{took:.2?}]");
        };

    let t = Instant::now();
    report(
        1,
        "PDP cross-table",
        t,
        Some(Duration::from_secs(1)),
        pdp_fixture(),
    );
    let t = Instant::now();
    report(
        2,
        "transient logic",
        t,
        Some(Duration::from_secs(60)),
        logic_transient(),
    );
    let t = Instant::now();
    report(
        3,
        "switch-level equivalence",
        t,
        Some(Duration::from_secs(1)),
        switch_equivalence(),
    );
    let t = Instant::now();
    let column = sweep_axes(&VDD_COLUMN, &[27.0]);
    let r = column.as_ref().map_err(Clone::clone).and_then(trends);
    report(
        4,
        "VDD trends at 27 C",
        t,
        Some(Duration::from_secs(600)),
        r,
    );
    let t = Instant::now();
    let row = sweep_axes(&[0.9], &TEMP_ROW);
    let r = match (&column, &row) {
        (Ok(c), Ok(r)) => flatness(c, r),
        (Err(e), _) | (_, Err(e)) => Err(e.clone()),
    };
    report(5, "temperature flatness", t, None, r);
    let t = Instant::now();
    report(6, "solver oracles", t, None, solver_oracles());
    let t = Instant::now();
    report(7, "device model", t, None, device_model());
    let t = Instant::now();
    report(8, "parser", t, None, parser());
    let t = Instant::now();
    report(9, "cell structure", t, None, cell_structure());

    if failed == 0 {
        println!("acceptance: 9/9 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 9 criteria failed");
        ExitCode::FAILURE
    }
}
