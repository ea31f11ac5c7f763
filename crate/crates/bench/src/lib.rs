//! Shared inputs for the criterion benches.

use nanosim::cells::{generate_proposed_fa, generate_testbench, CellConfig, Stimulus, Variant};
use nanosim::Circuit;

/// Buffered full-adder bench at the given supply and temperature.
pub fn full_adder_bench(vdd: f64, temp_c: f64) -> Circuit {
    let cfg = CellConfig {
        vdd,
        temp_c,
        variant: Variant::Buffered,
        ..CellConfig::default()
    };
    let cell = generate_proposed_fa(&cfg).expect("default cell config is valid");
    generate_testbench(&cell, &cfg, &Stimulus::default()).expect("default stimulus is valid")
}
