//! Transistor-level simulation of carbon-nanotube FET logic cells.
//!
//! The crate covers the whole flow for a full-adder cell: chirality-driven
//! device parameters ([`device`]), a text netlist format ([`netlist`]), a
//! modified-nodal-analysis DC and transient engine ([`mna`]), switch-level
//! logic verification ([`switch_logic`]), cell and test-bench generators
//! ([`cells`]) and power/delay/PDP extraction with VDD x temperature sweeps
//! ([`measure`]).

pub mod cells;
pub mod device;
pub mod measure;
pub mod mna;
pub mod netlist;
pub mod switch_logic;

pub use device::{Chirality, CntfetParams, DiameterFormula, ModelConfig, Polarity};
pub use mna::{SolverOptions, Waveform};
pub use netlist::{parse, serialize, validate, Circuit};
