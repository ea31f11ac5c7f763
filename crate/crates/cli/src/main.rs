//! `nanosim` command-line front end.
//!
//! Exit codes: 0 success, 1 check or solver failure, 2 usage or parse error.

mod commands;
mod range;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "nanosim",
    version,
    about = "CNTFET full-adder generator, verifier and simulator"
)]
pub struct Cli {
    /// Model overrides, one `key = value` per line.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output file.
    #[arg(
        short = 'o',
        long = "csv",
        visible_alias = "output",
        global = true,
        value_name = "PATH"
    )]
    pub output: Option<PathBuf>,
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    pub quiet: bool,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Style {
    Proposed24,
    ProposedBuffered,
    MajorityRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleArg {
    FullAdder,
    Majority,
}

/// Cell and stimulus knobs shared by `gen` and `sweep`.
#[derive(Debug, Clone, Args)]
pub struct CellArgs {
    /// N-device chirality `n,m`.
    #[arg(long, default_value = "19,0", value_parser = range::parse_chirality)]
    pub n_chirality: nanosim::Chirality,
    #[arg(long, default_value = "19,0", value_parser = range::parse_chirality)]
    pub p_chirality: nanosim::Chirality,
    #[arg(long, default_value_t = 3)]
    pub tubes_n: u32,
    #[arg(long, default_value_t = 3)]
    pub tubes_p: u32,
    /// Output load, F (engineering suffixes allowed).
    #[arg(long, default_value = "2f", value_parser = range::parse_number)]
    pub load: f64,
    /// Base stimulus period T, s.
    #[arg(long, default_value = "800p", value_parser = range::parse_number)]
    pub period: f64,
    /// Input rise/fall time, s.
    #[arg(long, default_value = "10p", value_parser = range::parse_number)]
    pub transition: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a generated cell (or its test bench) as a netlist.
    Gen {
        style: Style,
        #[arg(long, default_value = "0.9", value_parser = range::parse_number)]
        vdd: f64,
        #[arg(long, default_value = "27", value_parser = range::parse_number)]
        temp: f64,
        /// Wrap the cell in a measurement bench.
        #[arg(long)]
        bench: bool,
        /// Write to standard output instead of `-o`.
        #[arg(long, conflicts_with = "output")]
        stdout: bool,
        #[command(flatten)]
        cell: CellArgs,
    },
    /// Exhaustive switch-level truth-table check.
    Verify {
        deck: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "A,B,C")]
        inputs: Vec<String>,
        /// Outputs to evaluate; detected from the P/N junctions when omitted.
        #[arg(long, value_delimiter = ',')]
        outputs: Vec<String>,
        #[arg(long, value_enum, default_value_t = OracleArg::FullAdder)]
        oracle: OracleArg,
    },
    /// Run the deck's `.op` or `.tran` analysis.
    Run { deck: PathBuf },
    /// VDD x temperature characterization.
    Sweep {
        #[arg(long, value_enum, default_value_t = Style::ProposedBuffered)]
        style: Style,
        /// `start:stop:step`, V.
        #[arg(long, default_value = "0.7:1.2:0.1", value_parser = range::parse_axis)]
        vdd: range::Axis,
        /// `start:stop:step`, Celsius.
        #[arg(long, default_value = "0:54:9", value_parser = range::parse_axis)]
        temp: range::Axis,
        /// Cross-check PDP = power x delay on a published-table CSV.
        #[arg(long, value_name = "PATH")]
        check_fixture: Option<PathBuf>,
        /// Only run the fixture check.
        #[arg(long, requires = "check_fixture")]
        no_sim: bool,
        #[command(flatten)]
        cell: CellArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(&cli) {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {failure}");
            failure.exit_code()
        }
    }
}
