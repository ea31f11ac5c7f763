use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use nanosim::cells::{
    generate_majority_fa, generate_proposed_fa, generate_testbench, Cell, CellConfig, Stimulus,
    Variant,
};
use nanosim::measure::{
    evaluate_measures, load_fixture_tables, run_sweep, trend_report, MeasureError,
};
use nanosim::mna::{dc_operating_point, transient};
use nanosim::netlist::{format_value, parse_bytes, validate, Analysis, Circuit};
use nanosim::switch_logic::{build_switch_network, check_equivalence, detect_outputs, OracleKind};
use nanosim::{serialize, ModelConfig, SolverOptions};

use crate::{CellArgs, Cli, Command, OracleArg, Style};

#[derive(Debug)]
pub enum Failure {
    /// Bad flags, unreadable or invalid input. Exit 2.
    Usage(String),
    /// A check or a simulation failed. Exit 1.
    Check(String),
}

impl Failure {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            Self::Usage(_) => ExitCode::from(2),
            Self::Check(_) => ExitCode::from(1),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) | Self::Check(m) => f.write_str(m),
        }
    }
}

fn usage(e: impl fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn check(e: impl fmt::Display) -> Failure {
    Failure::Check(e.to_string())
}

struct Ctx<'a> {
    cli: &'a Cli,
    model: ModelConfig,
}

impl Ctx<'_> {
    fn info(&self, msg: impl fmt::Display) {
        if !self.cli.quiet {
            println!("{msg}");
        }
    }

    fn debug(&self, msg: impl fmt::Display) {
        if self.cli.verbose > 0 {
            eprintln!("{msg}");
        }
    }
}

pub fn dispatch(cli: &Cli) -> Result<ExitCode, Failure> {
    let model = load_model(cli.config.as_deref())?;
    let ctx = Ctx { cli, model };
    match &cli.command {
        Command::Gen {
            style,
            vdd,
            temp,
            bench,
            stdout,
            cell,
        } => cmd_gen(&ctx, *style, *vdd, *temp, *bench, *stdout, cell),
        Command::Verify {
            deck,
            inputs,
            outputs,
            oracle,
        } => cmd_verify(&ctx, deck, inputs, outputs, *oracle),
        Command::Run { deck } => cmd_run(&ctx, deck),
        Command::Sweep {
            style,
            vdd,
            temp,
            check_fixture,
            no_sim,
            cell,
        } => cmd_sweep(
            &ctx,
            *style,
            &vdd.0,
            &temp.0,
            check_fixture.as_deref(),
            *no_sim,
            cell,
        ),
    }
}

fn load_model(path: Option<&Path>) -> Result<ModelConfig, Failure> {
    let mut model = ModelConfig::default();
    let Some(path) = path else { return Ok(model) };
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            usage(format!(
                "{}:{}: expected `key = value`",
                path.display(),
                k + 1
            ))
        })?;
        model
            .set(key, value)
            .map_err(|e| usage(format!("{}:{}: {e}", path.display(), k + 1)))?;
    }
    model
        .validate()
        .map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Ok(model)
}

fn cell_config(style: Style, vdd: f64, temp_c: f64, args: &CellArgs) -> CellConfig {
    CellConfig {
        vdd,
        temp_c,
        n_chirality: args.n_chirality,
        p_chirality: args.p_chirality,
        tubes_n: args.tubes_n,
        tubes_p: args.tubes_p,
        load_cap: args.load,
        variant: if style == Style::Proposed24 {
            Variant::Core24
        } else {
            Variant::Buffered
        },
    }
}

fn stimulus(args: &CellArgs) -> Stimulus {
    Stimulus {
        period: args.period,
        transition: args.transition,
        input_high: None,
    }
}

fn generate(style: Style, cfg: &CellConfig) -> Result<Cell, nanosim::cells::CellError> {
    match style {
        Style::Proposed24 | Style::ProposedBuffered => generate_proposed_fa(cfg),
        Style::MajorityRef => generate_majority_fa(cfg),
    }
}

fn write_output(
    path: &Path,
    write: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<(), Failure> {
    let file = File::create(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut out = BufWriter::new(file);
    write(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| check(format!("{}: {e}", path.display())))
}

fn cmd_gen(
    ctx: &Ctx,
    style: Style,
    vdd: f64,
    temp: f64,
    bench: bool,
    stdout: bool,
    args: &CellArgs,
) -> Result<ExitCode, Failure> {
    if ctx.cli.output.is_none() && !stdout {
        return Err(usage("gen needs -o <path> or --stdout"));
    }
    let cfg = cell_config(style, vdd, temp, args);
    let cell = generate(style, &cfg).map_err(usage)?;
    let circuit = if bench {
        generate_testbench(&cell, &cfg, &stimulus(args)).map_err(usage)?
    } else {
        cell.circuit.clone()
    };
    let text = serialize(&circuit);
    match &ctx.cli.output {
        Some(path) => {
            write_output(path, |w| w.write_all(text.as_bytes()))?;
            ctx.info(format_args!(
                "wrote {} ({} transistors, outputs {})",
                path.display(),
                cell.transistor_count,
                cell.outputs.join(",")
            ));
        }
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn read_deck(ctx: &Ctx, path: &Path) -> Result<Circuit, Failure> {
    let bytes = fs::read(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let circuit = parse_bytes(&bytes).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let diagnostics = validate(&circuit);
    for d in diagnostics.iter().filter(|d| !d.is_error()) {
        ctx.debug(format_args!("{}: {d}", path.display()));
    }
    if let Some(d) = diagnostics.iter().find(|d| d.is_error()) {
        return Err(usage(format!("{}: {d}", path.display())));
    }
    Ok(circuit)
}

fn cmd_verify(
    ctx: &Ctx,
    deck: &Path,
    inputs: &[String],
    outputs: &[String],
    oracle: OracleArg,
) -> Result<ExitCode, Failure> {
    let circuit = read_deck(ctx, deck)?;
    let outputs = if outputs.is_empty() {
        detect_outputs(&circuit, inputs)
    } else {
        outputs.to_vec()
    };
    if outputs.is_empty() {
        return Err(usage("no outputs found; pass --outputs"));
    }
    let net = build_switch_network(&circuit, inputs, &outputs).map_err(usage)?;
    let kind = match oracle {
        OracleArg::FullAdder => OracleKind::FullAdder,
        OracleArg::Majority => OracleKind::Majority,
    };
    if inputs.len() != 3 {
        return Err(usage(
            "the full-adder and majority oracles take exactly three inputs",
        ));
    }
    let report = check_equivalence(&net, |o, bits| kind.expected(o, bits)).map_err(usage)?;
    if report.checked_outputs() == 0 {
        return Err(usage(format!(
            "none of the outputs {} is known to the oracle (expected sum/cout or their b-suffixed complements)",
            outputs.join(",")
        )));
    }
    let passed = report.passed();
    if ctx.cli.quiet {
        if !passed {
            println!("{}", report.to_string().lines().last().unwrap_or_default());
        }
    } else {
        println!("{report}");
    }
    for stage in net.stage_complementarity() {
        ctx.debug(format_args!(
            "stage {}: {}P/{}N, gates {}, complementary: {}",
            stage.output,
            stage.p_devices,
            stage.n_devices,
            stage.gates.join(","),
            stage.complementary
        ));
    }
    Ok(if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

/// Nine significant digits in netlist number style.
fn display_value(x: f64) -> String {
    let rounded: f64 = format!("{x:.8e}").parse().unwrap_or(x);
    format_value(rounded)
}

fn cmd_run(ctx: &Ctx, deck: &Path) -> Result<ExitCode, Failure> {
    let circuit = read_deck(ctx, deck)?;
    let opts = SolverOptions::default();
    let started = Instant::now();
    match circuit.analyses.first() {
        None => Err(usage(format!(
            "{}: deck has no .op or .tran analysis",
            deck.display()
        ))),
        Some(Analysis::Op) if circuit.tran().is_none() => {
            let op =
                dc_operating_point(&circuit, &ctx.model, &opts, circuit.temp_c).map_err(check)?;
            let mut lines = Vec::new();
            for (node, v) in &op.node_volts {
                lines.push(format!("v({node})={}", display_value(*v)));
            }
            for (src, i) in &op.source_currents {
                lines.push(format!("i({src})={}", display_value(*i)));
            }
            let text = lines.join("\n") + "\n";
            match &ctx.cli.output {
                Some(path) => write_output(path, |w| w.write_all(text.as_bytes()))?,
                None => print!("{text}"),
            }
            ctx.debug(format_args!(
                "{} Newton iterations ({:?})",
                op.stats.iterations, op.stats.strategy
            ));
            Ok(ExitCode::SUCCESS)
        }
        Some(_) => {
            let w = transient(&circuit, &ctx.model, &opts).map_err(check)?;
            ctx.debug(format_args!(
                "{} steps in {:.2?}",
                w.len(),
                started.elapsed()
            ));
            let measures = evaluate_measures(&circuit, &w).map_err(check)?;
            let lines: Vec<String> = measures
                .iter()
                .map(|(name, v)| format!("{name}={}", display_value(*v)))
                .collect();
            match &ctx.cli.output {
                Some(path) => {
                    write_output(path, |out| w.write_csv(out))?;
                    for line in &lines {
                        println!("{line}");
                    }
                }
                None => {
                    let stdout = io::stdout();
                    let mut lock = BufWriter::new(stdout.lock());
                    w.write_csv(&mut lock)
                        .and_then(|_| lock.flush())
                        .map_err(check)?;
                    for line in &lines {
                        eprintln!("{line}");
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn threads_from_env() -> Result<Option<usize>, Failure> {
    match std::env::var("NANOSIM_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| {
                usage(format!(
                    "NANOSIM_THREADS must be a positive integer, got `{v}`"
                ))
            }),
        Err(_) => Ok(None),
    }
}

fn cmd_sweep(
    ctx: &Ctx,
    style: Style,
    vdd_axis: &[f64],
    temp_axis: &[f64],
    fixture: Option<&Path>,
    no_sim: bool,
    args: &CellArgs,
) -> Result<ExitCode, Failure> {
    let mut ok = true;
    if let Some(path) = fixture {
        let tables = load_fixture_tables(path).map_err(usage)?;
        let err = tables.max_pdp_relative_error();
        let pass = err <= 1e-3;
        ok &= pass;
        println!(
            "fixture PDP = power x delay over {} cells: max relative error {err:.3e} {}",
            tables.pdp.values.iter().map(Vec::len).sum::<usize>(),
            if pass { "PASS" } else { "FAIL" }
        );
    }
    if no_sim {
        return Ok(if ok {
            ExitCode::SUCCESS
        } else {
            ExitCode::from(1)
        });
    }

    let threads = threads_from_env()?;
    let stim = stimulus(args);
    stim.validate().map_err(usage)?;
    cell_config(style, 1.0, 27.0, args)
        .validate()
        .map_err(usage)?;
    let factory = |vdd: f64, temp: f64| -> Result<Circuit, MeasureError> {
        let cfg = cell_config(style, vdd, temp, args);
        let cell = generate(style, &cfg)?;
        Ok(generate_testbench(&cell, &cfg, &stim)?)
    };
    let started = Instant::now();
    let table = run_sweep(
        factory,
        vdd_axis,
        temp_axis,
        &ctx.model,
        &SolverOptions::default(),
        threads,
    )
    .map_err(check)?;
    ctx.debug(format_args!(
        "{} cells in {:.2?}",
        table.len(),
        started.elapsed()
    ));

    match &ctx.cli.output {
        Some(path) => write_output(path, |w| table.write_csv(w))?,
        None => table.write_csv(io::stdout().lock()).map_err(check)?,
    }
    let trends = trend_report(&table, 27.0, 0.9);
    ok &= trends.passed();
    let summary = trends.to_string();
    if ctx.cli.output.is_some() {
        ctx.info(&summary);
    } else if !ctx.cli.quiet {
        eprintln!("{summary}");
    }
    Ok(if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
