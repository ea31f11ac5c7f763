mod common;

use common::*;
use nanosim::cells::{generate_proposed_fa, generate_testbench, Stimulus};
use nanosim::measure::{
    average_power, bench_measurements, evaluate_measures, load_fixture_tables,
    parse_fixture_tables, pdp, propagation_delay, run_sweep, simulate_bench, trend_report,
    DelaySpec, MeasureError, Measurements, SweepError, SweepTable,
};
use nanosim::mna::transient;
use nanosim::netlist::parse;
use nanosim::{Circuit, ModelConfig, SolverOptions};
use proptest::prelude::*;

const RC: &str =
    "VIN in 0 PULSE(0 1 0 1p 1p 10n 20n)\nR1 in out 10k\nC1 out 0 10f\n.tran STEP 2n\n.end\n";

fn rc_wave(step: &str) -> nanosim::Waveform {
    let c = parse(&RC.replace("STEP", step)).unwrap();
    transient(&c, &ModelConfig::default(), &SolverOptions::default()).unwrap()
}

#[test]
fn rc_power_is_charge_energy_over_window() {
    let w = rc_wave("1p");
    let p = average_power(&w, "VIN", 0.0, 2e-9).unwrap();
    let tau: f64 = 100e-12;
    let expect = 10e-15 * (1.0 - (-2e-9 / tau).exp()) / 2e-9;
    assert!(rel_err(p, expect) < 0.02, "{p} vs {expect}");
}

#[test]
fn rc_delay_is_ln2_tau() {
    let w = rc_wave("1p");
    let spec = DelaySpec {
        vdd: 1.0,
        fraction: 0.5,
        window: None,
    };
    let d = propagation_delay(&w, &["in"], &["out"], &spec).unwrap();
    let expect = std::f64::consts::LN_2 * 100e-12;
    assert!(rel_err(d, expect) < 0.02, "{d} vs {expect}");
}

#[test]
fn measures_are_stable_under_resampling() {
    let fine = rc_wave("0.5p");
    let coarse = rc_wave("1p");
    let pf = average_power(&fine, "VIN", 0.0, 2e-9).unwrap();
    let pc = average_power(&coarse, "VIN", 0.0, 2e-9).unwrap();
    assert!(rel_err(pc, pf) < 0.01, "{pc} vs {pf}");
    let spec = DelaySpec {
        vdd: 1.0,
        fraction: 0.5,
        window: None,
    };
    let df = propagation_delay(&fine, &["in"], &["out"], &spec).unwrap();
    let dc = propagation_delay(&coarse, &["in"], &["out"], &spec).unwrap();
    assert!(rel_err(dc, df) < 0.01, "{dc} vs {df}");
}

#[test]
fn deck_measures_match_direct_calls() {
    let text = std::fs::read_to_string(fixture_dir().join("decks/rc.ckt")).unwrap();
    let c = parse(&text).unwrap();
    let w = transient(&c, &ModelConfig::default(), &SolverOptions::default()).unwrap();
    let m = evaluate_measures(&c, &w).unwrap();
    let get = |n: &str| m.iter().find(|(k, _)| k == n).unwrap().1;
    let p = average_power(&w, "VIN", 0.0, 2e-9).unwrap();
    assert!(rel_err(get("pin"), p) < 1e-12);
    assert!(rel_err(get("energy"), get("pin") * get("tpd")) < 1e-12);
}

#[test]
fn quiet_inputs_still_leak() {
    let cfg = buffered_cfg(0.9, 27.0);
    let cell = generate_proposed_fa(&cfg).unwrap();
    let stim = Stimulus {
        input_high: Some(0.0),
        ..Stimulus::default()
    };
    let bench = generate_testbench(&cell, &cfg, &stim).unwrap();
    let w = transient(&bench, &ModelConfig::default(), &SolverOptions::default()).unwrap();
    let p = average_power(&w, "VDD", stim.window(), 2.0 * stim.window()).unwrap();
    assert!(p > 0.0 && p < 1e-7, "{p}");
    assert!(matches!(
        bench_measurements(&bench, &w),
        Err(MeasureError::NoInputEvent)
    ));
}

#[test]
fn pdp_is_product() {
    let m = Measurements::new(2.5e-6, 4e-11);
    assert_eq!(m.pdp_j, pdp(2.5e-6, 4e-11));
    assert!(rel_err(m.pdp_j, 1e-16) < 1e-12);
}

#[test]
fn bad_windows_and_names() {
    let w = rc_wave("1p");
    assert!(matches!(
        average_power(&w, "VIN", 1e-9, 1e-9),
        Err(MeasureError::Window { .. })
    ));
    assert!(matches!(
        average_power(&w, "VIN", 0.0, 5e-9),
        Err(MeasureError::Window { .. })
    ));
    assert!(matches!(
        average_power(&w, "VX", 0.0, 1e-9),
        Err(MeasureError::UnknownSource(_))
    ));
    let spec = DelaySpec {
        vdd: 1.0,
        fraction: 0.5,
        window: None,
    };
    assert!(matches!(
        propagation_delay(&w, &["in"], &["nope"], &spec),
        Err(MeasureError::UnknownNode(_))
    ));
}

#[test]
fn fixture_tables_match_published_cells() {
    let t = load_fixture_tables(fixture_dir().join("paper_tables.csv")).unwrap();
    assert_eq!(t.power.get(0.7, 27.0), Some(2.6864e-9));
    assert_eq!(t.delay.get(1.2, 54.0), Some(1.0671e-10));
    assert_eq!(t.pdp.get(0.9, 0.0), Some(6.9956e-19));
    assert_eq!(t.pdp.vdd_axis.len() * t.pdp.temp_axis.len(), 42);
    assert!(t.max_pdp_relative_error() <= 1e-3);
}

#[test]
fn fixture_parser_rejects_bad_input() {
    assert!(parse_fixture_tables("vdd,temp,value\n".as_bytes()).is_err());
    assert!(
        parse_fixture_tables("table,vdd_V,temp_C,value\npower,0.7,0,abc\n".as_bytes()).is_err()
    );
    assert!(parse_fixture_tables("table,vdd_V,temp_C,value\nenergy,0.7,0,1\n".as_bytes()).is_err());
}

fn factory(vdd: f64, temp: f64) -> Result<Circuit, MeasureError> {
    let cfg = buffered_cfg(vdd, temp);
    Ok(generate_testbench(
        &generate_proposed_fa(&cfg)?,
        &cfg,
        &Stimulus::default(),
    )?)
}

#[test]
fn single_cell_sweep_equals_direct_run() {
    let model = ModelConfig::default();
    let opts = SolverOptions::default();
    let table = run_sweep(factory, &[0.9], &[27.0], &model, &opts, Some(1)).unwrap();
    let direct = simulate_bench(&fa_bench(0.9, 27.0), &model, &opts).unwrap();
    assert_eq!(table.cells[0][0], direct);
}

#[test]
fn sweep_placement_is_independent_of_threads() {
    let model = ModelConfig::default();
    let opts = SolverOptions::default();
    let a = run_sweep(factory, &[0.8, 1.0], &[0.0, 54.0], &model, &opts, Some(1)).unwrap();
    let b = run_sweep(factory, &[0.8, 1.0], &[0.0, 54.0], &model, &opts, Some(4)).unwrap();
    assert_eq!(a, b);
    let mut csv = Vec::new();
    a.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "vdd_V,temp_C,power_W,delay_s,pdp_J");
    assert_eq!(lines.len(), 5);
    assert!(lines[2].starts_with("0.8,54,"));
}

#[test]
fn first_failing_cell_is_reported() {
    let failing = |vdd: f64, temp: f64| {
        if vdd > 0.95 {
            Err(MeasureError::Invalid(format!("{vdd}/{temp}")))
        } else {
            factory(vdd, temp)
        }
    };
    let err = run_sweep(
        failing,
        &[0.9, 1.0, 1.1],
        &[0.0, 27.0],
        &ModelConfig::default(),
        &SolverOptions::default(),
        None,
    )
    .unwrap_err();
    match err {
        SweepError::Cell { vdd, temp_c, .. } => assert_eq!((vdd, temp_c), (1.0, 0.0)),
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        run_sweep(
            factory,
            &[0.9, 0.8],
            &[27.0],
            &ModelConfig::default(),
            &SolverOptions::default(),
            None
        ),
        Err(SweepError::Axis(_))
    ));
}

fn table(power: &[f64], delay: &[f64], temp_power: &[f64]) -> SweepTable {
    let vdd_axis: Vec<f64> = (0..power.len()).map(|k| 0.7 + 0.1 * k as f64).collect();
    let temp_axis = vec![0.0, 27.0, 54.0];
    let cells = vdd_axis
        .iter()
        .enumerate()
        .map(|(i, v)| {
            (0..3)
                .map(|j| {
                    if (v - 0.9).abs() < 1e-9 {
                        Measurements::new(temp_power[j], delay[i])
                    } else {
                        Measurements::new(power[i], delay[i])
                    }
                })
                .collect()
        })
        .collect();
    SweepTable {
        vdd_axis,
        temp_axis,
        cells,
    }
}

#[test]
fn trend_report_verdicts() {
    let good = table(
        &[1.0, 2.0, 3.0, 4.0],
        &[4.0, 3.0, 2.0, 1.0],
        &[2.9, 3.0, 3.1],
    );
    let r = trend_report(&good, 27.0, 0.9);
    assert!(r.passed(), "{r}");
    assert_eq!(r.power_increasing, (3, 3));
    let bad = table(
        &[2.0, 1.0, 1.5, 4.0],
        &[4.0, 3.0, 2.0, 2.0],
        &[0.1, 3.0, 9.0],
    );
    let r = trend_report(&bad, 27.0, 0.9);
    assert_eq!(r.power_increasing, (2, 3));
    assert_eq!(r.delay_decreasing, (2, 3));
    assert_eq!(r.temperature_flat(), Some(false));
    assert!(!r.passed());
    assert!(r.to_string().contains("FAIL"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rc_delay_scales_with_resistance(r in 2e3f64..5e4) {
        let text = format!("VIN in 0 PULSE(0 1 0 1p 1p 20n 40n)\nR1 in out {r}\nC1 out 0 10f\n.tran 1p {}\n.end\n", 8.0 * r * 10e-15);
        let w = transient(&parse(&text).unwrap(), &ModelConfig::default(), &SolverOptions::default()).unwrap();
        let spec = DelaySpec { vdd: 1.0, fraction: 0.5, window: None };
        let d = propagation_delay(&w, &["in"], &["out"], &spec).unwrap();
        prop_assert!(rel_err(d, std::f64::consts::LN_2 * r * 10e-15) < 0.03);
    }
}
