//! Argument surface: clap definitions, the config-file merge, and the shared
//! value parsers (probabilities as decimals or fractions, comma lists).
//!
//! Every tunable is an `Option` at the clap layer so a missing flag can fall
//! back to the `--config` TOML file and then to the built-in default, in that
//! order. The file's keys mirror the long flag names; its values are read as
//! the *text* one would have typed after the flag (native TOML scalars are
//! stringified, arrays are comma-joined), so both sources share one parser
//! and cannot drift apart.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use infovel::channel::CrossoverProb;

/// A CLI failure carrying its process exit code: configuration trouble is
/// `2`, a broken internal invariant is `3` (success is `0`).
#[derive(Debug)]
pub enum CliError {
    /// Unusable flags, file, or parameter combination.
    Config(String),
    /// The library reported a violated internal invariant.
    Internal(String),
}

impl CliError {
    /// Process exit code for this failure.
    pub fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    /// One-line diagnostic for stderr.
    pub fn message(&self) -> &str {
        match self {
            CliError::Config(msg) | CliError::Internal(msg) => msg,
        }
    }
}

impl From<infovel::Error> for CliError {
    fn from(err: infovel::Error) -> Self {
        match err {
            infovel::Error::Internal(_)
            | infovel::Error::EvenVote(_)
            | infovel::Error::LengthMismatch { .. } => CliError::Internal(err.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

/// CLI-wide result alias.
pub type CliResult<T> = std::result::Result<T, CliError>;

/// Relay-chain protocol simulator and bound calculator.
#[derive(Debug, Parser)]
#[command(name = "infovel", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Top-level subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo estimate of error rate and delays for one configuration.
    Simulate(RunArgs),
    /// One simulation per point of an m × p grid, one output row per point.
    Sweep(RunArgs),
    /// Analytical tables (error recursions, velocity and converse bounds,
    /// repetition sizing, delay budgets); no simulation involved.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
}

/// Flags shared by `simulate` and `sweep`.
#[derive(Debug, Args)]
pub struct RunArgs {
    /// Protocol: onebit, onebit_chained, multibit, p0, or p1 [default: onebit].
    #[arg(long)]
    pub protocol: Option<String>,
    /// Hop count; `sweep` accepts a comma-separated list.
    #[arg(long)]
    pub m: Option<String>,
    /// Message bits carried per trial (multibit only) [default: 1].
    #[arg(long)]
    pub k: Option<usize>,
    /// Crossover probability as a decimal or a fraction such as 1/48;
    /// `sweep` accepts a comma-separated list.
    #[arg(long)]
    pub p: Option<String>,
    /// Relay fan-in of the single-bit protocol (odd, >= 3) [default: 3].
    #[arg(long)]
    pub b: Option<u32>,
    /// Spacing growth factor between relay levels (> b) [default: 4].
    #[arg(long)]
    pub t: Option<u32>,
    /// Hops per level-0 stretch (low-noise spacing) [default: 1].
    #[arg(long)]
    pub c: Option<u64>,
    /// Per-bit repetition count (odd); for p0 an explicit per-hop count
    /// [default: 1].
    #[arg(long)]
    pub reps: Option<u32>,
    /// Chain exponent of onebit_chained, in (0, 1)
    /// [default: 1 - ln 3 / ln 4].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Independent trials [default: 1000].
    #[arg(long)]
    pub trials: Option<u64>,
    /// Master seed; all per-trial randomness derives from it [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 0 picks the machine default. Output bytes do not
    /// depend on this [default: 0].
    #[arg(long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Analytical tables.
#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Level-indexed error-bound recursion (onebit or multibit).
    Recursion(RecursionArgs),
    /// Achievable and converse velocity bounds at one or more p values.
    Velocity(VelocityArgs),
    /// Converse DP grid F(i, j) with the exponential envelope check.
    Converse(ConverseArgs),
    /// Repetition counts reaching a target effective crossover.
    Repetition(RepetitionArgs),
    /// Closed-form delay budget for a protocol configuration.
    Delay(DelayArgs),
}

/// Flags of `analyze recursion`.
#[derive(Debug, Args)]
pub struct RecursionArgs {
    /// Recursion family: onebit or multibit [default: onebit].
    #[arg(long)]
    pub protocol: Option<String>,
    /// Raw crossover probability, decimal or fraction.
    #[arg(long)]
    pub p: Option<String>,
    /// Per-bit repetition count feeding the level-0 error [default: 1].
    #[arg(long)]
    pub reps: Option<u32>,
    /// Levels to tabulate [default: 8].
    #[arg(long)]
    pub levels: Option<u32>,
    /// Relay fan-in (onebit) [default: 3].
    #[arg(long)]
    pub b: Option<u32>,
    /// Spacing growth factor (onebit) [default: 4].
    #[arg(long)]
    pub t: Option<u32>,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Flags of `analyze velocity`.
#[derive(Debug, Args)]
pub struct VelocityArgs {
    /// Crossover probabilities, comma-separated; decimals or fractions.
    #[arg(long)]
    pub p: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Flags of `analyze converse`.
#[derive(Debug, Args)]
pub struct ConverseArgs {
    /// Channel gap delta = 1 - 2p, in (0, 1); decimal or fraction.
    #[arg(long)]
    pub delta: Option<String>,
    /// Envelope rate gamma, in (0, delta^2); decimal or fraction.
    #[arg(long)]
    pub gamma: Option<String>,
    /// Envelope exponent c; computed from gamma and delta when omitted.
    #[arg(long)]
    pub c: Option<f64>,
    /// Largest hop index i of the grid.
    #[arg(long)]
    pub imax: Option<usize>,
    /// Largest time index j of the grid.
    #[arg(long)]
    pub jmax: Option<usize>,
    /// Velocity probe v0, in (gamma, delta^2); decimal or fraction.
    #[arg(long)]
    pub v0: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Flags of `analyze repetition`.
#[derive(Debug, Args)]
pub struct RepetitionArgs {
    /// Crossover probabilities, comma-separated; decimals or fractions.
    #[arg(long)]
    pub p: Option<String>,
    /// Target effective crossover, in (0, 1) [default: 1/48].
    #[arg(long)]
    pub target: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Flags of `analyze delay`.
#[derive(Debug, Args)]
pub struct DelayArgs {
    /// Protocol: onebit or multibit [default: onebit].
    #[arg(long)]
    pub protocol: Option<String>,
    /// Hop count.
    #[arg(long)]
    pub m: Option<String>,
    /// Message bits (multibit only) [default: 1].
    #[arg(long)]
    pub k: Option<usize>,
    /// Relay fan-in (onebit) [default: 3].
    #[arg(long)]
    pub b: Option<u32>,
    /// Spacing growth factor (onebit) [default: 4].
    #[arg(long)]
    pub t: Option<u32>,
    /// Hops per level-0 stretch (onebit) [default: 1].
    #[arg(long)]
    pub c: Option<u64>,
    /// Per-bit repetition count (odd) [default: 1].
    #[arg(long)]
    pub reps: Option<u32>,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Output destination, format, and the optional config file.
#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format: csv or json [default: csv].
    #[arg(long)]
    pub format: Option<String>,
    /// TOML file whose keys mirror the long flag names; explicit flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Every key a `--config` file may define (the union over subcommands; each
/// subcommand reads the subset it understands). Unknown keys are rejected so
/// typos fail loudly instead of silently running defaults.
const FILE_KEYS: [&str; 21] = [
    "protocol", "m", "k", "p", "b", "t", "c", "reps", "alpha", "trials", "seed", "jobs", "out",
    "format", "levels", "target", "delta", "gamma", "imax", "jmax", "v0",
];

/// Key → flag-text map loaded from a `--config` TOML file.
#[derive(Debug, Default)]
pub struct FileValues(BTreeMap<String, String>);

impl FileValues {
    /// Loads and flattens the file; `None` yields an empty map.
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let value: toml::Value = text
            .parse()
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let Some(table) = value.as_table() else {
            return Err(CliError::Config(format!(
                "{}: top level must be a table of flag values",
                path.display()
            )));
        };
        let mut map = BTreeMap::new();
        for (key, val) in table {
            if !FILE_KEYS.contains(&key.as_str()) {
                return Err(CliError::Config(format!(
                    "{}: unknown key {key:?} (keys mirror the long flag names)",
                    path.display()
                )));
            }
            map.insert(key.clone(), flag_text(key, val)?);
        }
        Ok(Self(map))
    }

    /// The stored flag text for `key`, if the file set it.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }
}

/// Renders one TOML value as the text form of a flag argument.
fn flag_text(key: &str, value: &toml::Value) -> CliResult<String> {
    use toml::Value::*;
    Ok(match value {
        String(s) => s.clone(),
        Integer(i) => i.to_string(),
        Float(f) => f.to_string(),
        Boolean(b) => b.to_string(),
        Array(items) => {
            let parts: CliResult<Vec<std::string::String>> =
                items.iter().map(|item| flag_text(key, item)).collect();
            parts?.join(",")
        }
        Datetime(_) | Table(_) => {
            return Err(CliError::Config(format!(
                "config key {key:?}: expected a scalar or an array of scalars"
            )));
        }
    })
}

/// Flag value > file value > (caller's) default. The file's text runs
/// through `parse`, the same parser the flag text would use.
pub fn resolve<T>(
    flag: Option<T>,
    file: &FileValues,
    key: &str,
    parse: impl FnOnce(&str, &str) -> CliResult<T>,
) -> CliResult<Option<T>> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => file.get(key).map(|text| parse(key, text)).transpose(),
    }
}

/// Parses one value with `FromStr`, wrapping failures as config errors that
/// name the offending flag.
pub fn parse_num<T: FromStr>(key: &str, text: &str) -> CliResult<T>
where
    T::Err: Display,
{
    text.trim()
        .parse::<T>()
        .map_err(|e| CliError::Config(format!("--{key} {text:?}: {e}")))
}

/// Parses a real number given as a decimal or a fraction (`1/48`). The
/// fraction form exists so reproduction recipes can state probabilities
/// exactly instead of via truncated decimals.
pub fn parse_real(key: &str, text: &str) -> CliResult<f64> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let n: f64 = parse_num(key, num)?;
        let d: f64 = parse_num(key, den)?;
        if d == 0.0 {
            return Err(CliError::Config(format!(
                "--{key} {text:?}: zero denominator"
            )));
        }
        Ok(n / d)
    } else {
        parse_num(key, text)
    }
}

/// Parses and validates a crossover probability.
pub fn parse_prob(key: &str, text: &str) -> CliResult<CrossoverProb> {
    CrossoverProb::new(parse_real(key, text)?).map_err(CliError::from)
}

/// Parses a comma-separated list with the given element parser.
pub fn parse_list<T>(
    key: &str,
    text: &str,
    parse: impl Fn(&str, &str) -> CliResult<T>,
) -> CliResult<Vec<T>> {
    text.split(',').map(|item| parse(key, item)).collect()
}

/// Marks `flag` as unused by the selected protocol.
pub fn reject_flag<T>(flag: &Option<T>, name: &str, protocol: &str) -> CliResult<()> {
    if flag.is_some() {
        return Err(CliError::Config(format!(
            "--{name} does not apply to protocol {protocol}"
        )));
    }
    Ok(())
}
