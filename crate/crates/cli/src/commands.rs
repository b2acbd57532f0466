//! Subcommand implementations: resolve the effective configuration from
//! flags, config file, and defaults; run the library; render exactly one
//! table through the shared report layer.
//!
//! Every command echoes its full effective configuration into the output
//! metadata, so a result file is a complete reproduction recipe on its own.
//! Execution details that cannot change the table bytes (`--jobs`, `--out`,
//! `--format`) are deliberately left out of the echo: runs that must compare
//! byte-identical across worker counts would otherwise differ in the
//! comment line.

use std::path::PathBuf;

use serde_json::Value;

use infovel::analysis::{
    converse_table, delay_budget_multibit, delay_budget_onebit, exact_repetition_count,
    multibit_error_recursion, onebit_error_recursion, repetition_count, velocity_bounds,
    ConverseParams,
};
use infovel::baseline::{BaselineParams, BaselineVariant};
use infovel::channel::CrossoverProb;
use infovel::multibit::MultiBitParams;
use infovel::onebit::{effective_crossover, ChainParams, OneBitParams};
use infovel::report::{
    converse_report, recursion_table, sim_table, sweep_table, Metadata, OutputFormat, Row, Table,
};
use infovel::sim::{run_trials, sweep, ProtocolSpec, SimConfig};

use crate::args::{
    parse_list, parse_num, parse_prob, parse_real, reject_flag, resolve, AnalyzeCommand, Cli,
    CliError, CliResult, Command, ConverseArgs, DelayArgs, FileValues, OutputArgs, RecursionArgs,
    RepetitionArgs, RunArgs, VelocityArgs,
};

/// `analyze velocity` columns.
const VELOCITY_COLUMNS: [&str; 4] = ["p", "lower", "upper", "repetition_form"];
/// `analyze repetition` columns.
const REPETITION_COLUMNS: [&str; 5] = ["p", "target", "reps", "exact_reps", "effective_crossover"];
/// `analyze delay` columns.
const DELAY_COLUMNS: [&str; 7] = [
    "protocol",
    "m",
    "k",
    "store_forward",
    "relay_extra",
    "propagation_bound",
    "transmission_bits",
];

/// Routes a parsed command line to its implementation.
pub fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Analyze(cmd) => match cmd {
            AnalyzeCommand::Recursion(args) => cmd_recursion(args),
            AnalyzeCommand::Velocity(args) => cmd_velocity(args),
            AnalyzeCommand::Converse(args) => cmd_converse(args),
            AnalyzeCommand::Repetition(args) => cmd_repetition(args),
            AnalyzeCommand::Delay(args) => cmd_delay(args),
        },
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

/// Where and how a table leaves the process.
struct Sink {
    format: OutputFormat,
    out: Option<PathBuf>,
}

/// Pass-through resolver for flags whose text is the value.
fn text(_key: &str, value: &str) -> CliResult<String> {
    Ok(value.to_string())
}

/// Unwraps a flag that has no default.
fn required<T>(value: Option<T>, key: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::Config(format!("--{key} is required")))
}

fn resolve_sink(output: &OutputArgs, file: &FileValues) -> CliResult<Sink> {
    let format = match resolve(output.format.clone(), file, "format", text)?.as_deref() {
        None | Some("csv") => OutputFormat::Csv,
        Some("json") => OutputFormat::Json,
        Some(other) => {
            return Err(CliError::Config(format!(
                "--format {other:?}: expected csv or json"
            )));
        }
    };
    let out = resolve(output.out.clone(), file, "out", |_, s| Ok(PathBuf::from(s)))?;
    Ok(Sink { format, out })
}

/// Renders and writes the table to the sink, byte-for-byte.
fn emit(table: &Table, meta: &Metadata, sink: &Sink) -> CliResult<()> {
    let rendered = table.render(meta, sink.format);
    match &sink.out {
        Some(path) => std::fs::write(path, rendered)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(rendered.as_bytes())
                .map_err(|e| CliError::Internal(format!("stdout: {e}")))
        }
    }
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items
        .into_iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

// ---------------------------------------------------------------------------
// simulate / sweep
// ---------------------------------------------------------------------------

/// A fully resolved simulation request. `template` holds the first grid
/// point; `sweep` re-stamps `m` and `p` per point.
struct ResolvedRun {
    template: SimConfig,
    ms: Vec<usize>,
    ps: Vec<CrossoverProb>,
    sink: Sink,
    echo: String,
}

/// Chain exponent at which instance count and top-level block length balance
/// for the default (b, t) = (3, 4).
fn default_alpha() -> f64 {
    1.0 - 3f64.ln() / 4f64.ln()
}

fn onebit_params(
    b: Option<u32>,
    t: Option<u32>,
    c: Option<u64>,
    reps: Option<u32>,
) -> CliResult<OneBitParams> {
    Ok(OneBitParams::new(
        b.unwrap_or(3),
        t.unwrap_or(4),
        c.unwrap_or(1),
        reps.unwrap_or(1),
    )?)
}

/// Builds the protocol from its name plus the parameter flags, rejecting
/// flags the chosen protocol does not consume. `single_m` is the run's hop
/// count when the grid has exactly one, which an explicit-repetition p0
/// needs for its block count.
fn build_protocol(
    name: &str,
    b: Option<u32>,
    t: Option<u32>,
    c: Option<u64>,
    reps: Option<u32>,
    alpha: Option<f64>,
    single_m: Option<u64>,
) -> CliResult<ProtocolSpec> {
    match name {
        "onebit" => {
            reject_flag(&alpha, "alpha", name)?;
            Ok(ProtocolSpec::OneBit(onebit_params(b, t, c, reps)?))
        }
        "onebit_chained" => {
            let chain = ChainParams::new(alpha.unwrap_or_else(default_alpha))?;
            Ok(ProtocolSpec::OneBitChained(
                onebit_params(b, t, c, reps)?,
                chain,
            ))
        }
        "multibit" => {
            reject_flag(&b, "b", name)?;
            reject_flag(&t, "t", name)?;
            reject_flag(&c, "c", name)?;
            reject_flag(&alpha, "alpha", name)?;
            Ok(ProtocolSpec::MultiBit(MultiBitParams::new(
                Vec::new(),
                Vec::new(),
                reps.unwrap_or(1),
            )?))
        }
        "p0" => {
            reject_flag(&b, "b", name)?;
            reject_flag(&t, "t", name)?;
            reject_flag(&c, "c", name)?;
            reject_flag(&alpha, "alpha", name)?;
            match reps {
                None => Ok(ProtocolSpec::P0(None)),
                Some(r) => {
                    let Some(m) = single_m else {
                        return Err(CliError::Config(
                            "explicit --reps for p0 fixes the block count to m, \
                             so it needs a single --m"
                                .into(),
                        ));
                    };
                    Ok(ProtocolSpec::P0(Some(BaselineParams::new(
                        r,
                        m,
                        BaselineVariant::P0,
                    )?)))
                }
            }
        }
        "p1" => {
            reject_flag(&b, "b", name)?;
            reject_flag(&t, "t", name)?;
            reject_flag(&c, "c", name)?;
            reject_flag(&reps, "reps", name)?;
            reject_flag(&alpha, "alpha", name)?;
            Ok(ProtocolSpec::P1)
        }
        other => Err(CliError::Config(format!(
            "--protocol {other:?}: expected onebit, onebit_chained, multibit, p0, or p1"
        ))),
    }
}

/// Parameters the protocol actually consumes, echoed after the shared keys.
fn protocol_echo(protocol: &ProtocolSpec) -> String {
    match protocol {
        ProtocolSpec::OneBit(q) => {
            format!(" b={} t={} c={} reps={}", q.b(), q.t(), q.c(), q.r())
        }
        ProtocolSpec::OneBitChained(q, chain) => format!(
            " b={} t={} c={} reps={} alpha={}",
            q.b(),
            q.t(),
            q.c(),
            q.r(),
            chain.alpha()
        ),
        ProtocolSpec::MultiBit(q) => format!(" reps={}", q.r()),
        ProtocolSpec::P0(Some(q)) => {
            format!(" reps={} blocks={}", q.reps_per_hop(), q.block_count())
        }
        ProtocolSpec::P0(None) | ProtocolSpec::P1 => String::new(),
    }
}

fn resolve_run(cmd: &str, args: RunArgs, single_point: bool) -> CliResult<ResolvedRun> {
    let file = FileValues::load(args.output.config.as_deref())?;
    let sink = resolve_sink(&args.output, &file)?;

    let protocol_name =
        resolve(args.protocol, &file, "protocol", text)?.unwrap_or_else(|| "onebit".to_string());
    let ms = parse_list(
        "m",
        &required(resolve(args.m, &file, "m", text)?, "m")?,
        parse_num::<usize>,
    )?;
    let ps = parse_list(
        "p",
        &required(resolve(args.p, &file, "p", text)?, "p")?,
        parse_prob,
    )?;
    if single_point && (ms.len() != 1 || ps.len() != 1) {
        return Err(CliError::Config(
            "simulate takes a single --m and --p; use sweep for grids".into(),
        ));
    }

    let k = resolve(args.k, &file, "k", parse_num)?.unwrap_or(1);
    let trials = resolve(args.trials, &file, "trials", parse_num)?.unwrap_or(1000);
    let seed = resolve(args.seed, &file, "seed", parse_num)?.unwrap_or(0);
    let jobs = resolve(args.jobs, &file, "jobs", parse_num)?.unwrap_or(0);

    let b = resolve(args.b, &file, "b", parse_num)?;
    let t = resolve(args.t, &file, "t", parse_num)?;
    let c = resolve(args.c, &file, "c", parse_num)?;
    let reps = resolve(args.reps, &file, "reps", parse_num)?;
    let alpha = resolve(args.alpha, &file, "alpha", parse_real)?;

    let single_m = (ms.len() == 1).then(|| ms[0] as u64);
    let protocol = build_protocol(&protocol_name, b, t, c, reps, alpha, single_m)?;

    let template = SimConfig {
        protocol,
        m: ms[0],
        k,
        p: ps[0],
        trials,
        master_seed: seed,
        jobs,
    };
    template.validate()?;

    let echo = format!(
        "cmd={cmd} protocol={} m={} k={} p={}{} trials={}",
        template.protocol.name(),
        join(&ms),
        template.k,
        join(ps.iter().map(|p| p.get())),
        protocol_echo(&template.protocol),
        template.trials,
    );
    Ok(ResolvedRun {
        template,
        ms,
        ps,
        sink,
        echo,
    })
}

fn cmd_simulate(args: RunArgs) -> CliResult<()> {
    let run = resolve_run("simulate", args, true)?;
    let summary = run_trials(&run.template)?;
    let table = sim_table(&run.template, &summary);
    let meta = Metadata::new(run.template.master_seed, run.echo);
    emit(&table, &meta, &run.sink)
}

fn cmd_sweep(args: RunArgs) -> CliResult<()> {
    let run = resolve_run("sweep", args, false)?;
    let rows = sweep(&run.template, &run.ms, &run.ps)?;
    let table = sweep_table(&run.template, &rows);
    let meta = Metadata::new(run.template.master_seed, run.echo);
    emit(&table, &meta, &run.sink)
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

fn cmd_recursion(args: RecursionArgs) -> CliResult<()> {
    let file = FileValues::load(args.output.config.as_deref())?;
    let sink = resolve_sink(&args.output, &file)?;
    let family =
        resolve(args.protocol, &file, "protocol", text)?.unwrap_or_else(|| "onebit".to_string());
    let p = parse_prob("p", &required(resolve(args.p, &file, "p", text)?, "p")?)?;
    let reps = resolve(args.reps, &file, "reps", parse_num)?.unwrap_or(1);
    let levels = resolve(args.levels, &file, "levels", parse_num)?.unwrap_or(8);
    let b = resolve(args.b, &file, "b", parse_num)?;
    let t = resolve(args.t, &file, "t", parse_num)?;
    let eps0 = effective_crossover(p, reps)?;

    let (bounds, family_echo) = match family.as_str() {
        "onebit" => {
            let b = b.unwrap_or(3);
            let t = t.unwrap_or(4);
            (
                onebit_error_recursion(eps0, b, t, levels)?,
                format!(" b={b} t={t}"),
            )
        }
        "multibit" => {
            reject_flag(&b, "b", "multibit")?;
            reject_flag(&t, "t", "multibit")?;
            (
                multibit_error_recursion(eps0, &MultiBitParams::default(), levels)?,
                String::new(),
            )
        }
        other => {
            return Err(CliError::Config(format!(
                "--protocol {other:?}: expected onebit or multibit"
            )));
        }
    };
    let table = recursion_table(&bounds);
    let echo = format!(
        "cmd=analyze.recursion protocol={family} p={} reps={reps} eps0={eps0} levels={levels}{family_echo}",
        p.get(),
    );
    emit(&table, &Metadata::new(0, echo), &sink)
}

fn cmd_velocity(args: VelocityArgs) -> CliResult<()> {
    let file = FileValues::load(args.output.config.as_deref())?;
    let sink = resolve_sink(&args.output, &file)?;
    let ps = parse_list(
        "p",
        &required(resolve(args.p, &file, "p", text)?, "p")?,
        parse_prob,
    )?;
    let rows = ps
        .iter()
        .map(|p| -> CliResult<Row> {
            let bounds = velocity_bounds(p.get())?;
            Ok(vec![
                Value::from(p.get()),
                Value::from(bounds.lower),
                Value::from(bounds.upper),
                Value::from(bounds.repetition_form),
            ])
        })
        .collect::<CliResult<Vec<Row>>>()?;
    let table = Table::new(VELOCITY_COLUMNS.to_vec(), rows);
    let echo = format!(
        "cmd=analyze.velocity p={}",
        join(ps.iter().map(|p| p.get()))
    );
    emit(&table, &Metadata::new(0, echo), &sink)
}

fn cmd_converse(args: ConverseArgs) -> CliResult<()> {
    let file = FileValues::load(args.output.config.as_deref())?;
    let sink = resolve_sink(&args.output, &file)?;
    let delta = parse_real("delta", &required(resolve(args.delta, &file, "delta", text)?, "delta")?)?;
    let gamma = parse_real("gamma", &required(resolve(args.gamma, &file, "gamma", text)?, "gamma")?)?;
    let i_max = required(resolve(args.imax, &file, "imax", parse_num)?, "imax")?;
    let j_max = required(resolve(args.jmax, &file, "jmax", parse_num)?, "jmax")?;
    // The probe only feeds the decay diagnostic, so it may default to the
    // midpoint of its admissible interval (gamma, delta^2).
    let v0 = match resolve(args.v0, &file, "v0", text)? {
        Some(raw) => parse_real("v0", &raw)?,
        None => (gamma + delta * delta) / 2.0,
    };
    let params = match resolve(args.c, &file, "c", parse_real)? {
        Some(c_exp) => ConverseParams::new(delta, gamma, c_exp, v0)?,
        None => ConverseParams::derive(delta, gamma, v0)?,
    };
    let grid = converse_table(delta, i_max, j_max)?;
    let table = converse_report(&grid, &params);
    let echo = format!(
        "cmd=analyze.converse delta={delta} gamma={gamma} c={} v0={v0} imax={i_max} jmax={j_max}",
        params.c_exp(),
    );
    emit(&table, &Metadata::new(0, echo), &sink)
}

fn cmd_repetition(args: RepetitionArgs) -> CliResult<()> {
    let file = FileValues::load(args.output.config.as_deref())?;
    let sink = resolve_sink(&args.output, &file)?;
    let ps = parse_list(
        "p",
        &required(resolve(args.p, &file, "p", text)?, "p")?,
        parse_prob,
    )?;
    let target = match resolve(args.target, &file, "target", text)? {
        Some(raw) => parse_real("target", &raw)?,
        None => 1.0 / 48.0,
    };
    let rows = ps
        .iter()
        .map(|p| -> CliResult<Row> {
            let hoeffding = repetition_count(p.get(), target)?;
            let exact = exact_repetition_count(p.get(), target)?;
            let r = u32::try_from(exact).map_err(|_| {
                CliError::Config(format!("repetition count {exact} exceeds the supported range"))
            })?;
            let effective = effective_crossover(*p, r)?;
            Ok(vec![
                Value::from(p.get()),
                Value::from(target),
                Value::from(hoeffding),
                Value::from(exact),
                Value::from(effective),
            ])
        })
        .collect::<CliResult<Vec<Row>>>()?;
    let table = Table::new(REPETITION_COLUMNS.to_vec(), rows);
    let echo = format!(
        "cmd=analyze.repetition p={} target={target}",
        join(ps.iter().map(|p| p.get()))
    );
    emit(&table, &Metadata::new(0, echo), &sink)
}

fn cmd_delay(args: DelayArgs) -> CliResult<()> {
    let file = FileValues::load(args.output.config.as_deref())?;
    let sink = resolve_sink(&args.output, &file)?;
    let family =
        resolve(args.protocol, &file, "protocol", text)?.unwrap_or_else(|| "onebit".to_string());
    let m: usize = parse_num("m", &required(resolve(args.m, &file, "m", text)?, "m")?)?;
    let k = resolve(args.k, &file, "k", parse_num)?.unwrap_or(1);
    let b = resolve(args.b, &file, "b", parse_num)?;
    let t = resolve(args.t, &file, "t", parse_num)?;
    let c = resolve(args.c, &file, "c", parse_num)?;
    let reps = resolve(args.reps, &file, "reps", parse_num)?;

    let (budget, family_echo) = match family.as_str() {
        "onebit" => {
            if k != 1 {
                return Err(CliError::Config(format!(
                    "protocol onebit carries exactly one bit, got k = {k}"
                )));
            }
            let params = onebit_params(b, t, c, reps)?;
            (
                delay_budget_onebit(m, &params)?,
                format!(
                    " b={} t={} c={} reps={}",
                    params.b(),
                    params.t(),
                    params.c(),
                    params.r()
                ),
            )
        }
        "multibit" => {
            reject_flag(&b, "b", "multibit")?;
            reject_flag(&t, "t", "multibit")?;
            reject_flag(&c, "c", "multibit")?;
            let params = MultiBitParams::new(Vec::new(), Vec::new(), reps.unwrap_or(1))?;
            (
                delay_budget_multibit(m, k, &params)?,
                format!(" reps={}", params.r()),
            )
        }
        other => {
            return Err(CliError::Config(format!(
                "--protocol {other:?}: expected onebit or multibit"
            )));
        }
    };
    let row = vec![
        Value::from(family.as_str()),
        Value::from(m),
        Value::from(k),
        Value::from(budget.store_forward),
        Value::from(budget.relay_extra),
        Value::from(budget.propagation_bound),
        Value::from(budget.transmission_bits),
    ];
    let table = Table::new(DELAY_COLUMNS.to_vec(), vec![row]);
    let echo = format!("cmd=analyze.delay protocol={family} m={m} k={k}{family_echo}");
    emit(&table, &Metadata::new(0, echo), &sink)
}
