//! Deterministic table rendering: CSV with a metadata comment line, plus a
//! JSON mirror.
//!
//! One typed row representation ([`serde_json::Value`] cells) feeds both
//! formats, so the two views cannot disagree, and rendering the same data
//! twice yields byte-identical output — the reproducibility contract the
//! simulator's seed discipline exists to support. Numbers are formatted with
//! shortest-roundtrip notation in both formats.

use serde_json::{Map, Value};

use crate::analysis::{BoundTable, ConverseParams, ConverseTable};
use crate::baseline::{p0_hop_reps, p1_plan};
use crate::scalar::Real;
use crate::sim::{ProtocolSpec, RunSummary, SimConfig, SweepRow};

/// Run provenance echoed at the top of every output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Metadata {
    /// Crate version (all workspace members share one version).
    pub version: String,
    /// Master seed of the run (0 for purely analytical tables).
    pub seed: u64,
    /// Canonical one-line echo of the effective configuration.
    pub config: String,
}

impl Metadata {
    /// Captures the crate version alongside the run's seed and config echo.
    pub fn new(seed: u64, config: impl Into<String>) -> Self {
        Metadata {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config: config.into(),
        }
    }

    fn comment_line(&self) -> String {
        format!(
            "# version={}, seed={}, config={}",
            self.version, self.seed, self.config
        )
    }
}

/// Output encoding selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    /// Comma-separated values with a `#` metadata comment and a header row.
    Csv,
    /// Single JSON object: metadata fields plus a `rows` array of objects.
    Json,
}

/// One output row; cells align with the owning [`Table`]'s columns.
pub type Row = Vec<Value>;

/// A rectangular, column-named result table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Row>,
}

impl Table {
    /// Builds a table; every row must match the column count.
    pub fn new(columns: Vec<&'static str>, rows: Vec<Row>) -> Self {
        debug_assert!(rows.iter().all(|r| r.len() == columns.len()));
        Table { columns, rows }
    }

    /// Column names in output order.
    pub fn columns(&self) -> &[&'static str] {
        &self.columns
    }

    /// The data rows.
    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    /// Renders in the requested format. Output always ends with a newline.
    pub fn render(&self, meta: &Metadata, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(meta),
            OutputFormat::Json => self.to_json(meta),
        }
    }

    /// Metadata comment, header row, then one line per row.
    pub fn to_csv(&self, meta: &Metadata) -> String {
        let mut out = String::new();
        out.push_str(&meta.comment_line());
        out.push('\n');
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(csv_cell).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Compact JSON object `{version, seed, config, rows: [{col: val, …}]}`
    /// with columns in declaration order.
    pub fn to_json(&self, meta: &Metadata) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = Map::new();
                for (col, cell) in self.columns.iter().zip(row) {
                    obj.insert((*col).to_string(), cell.clone());
                }
                Value::Object(obj)
            })
            .collect();
        let mut top = Map::new();
        top.insert("version".into(), Value::String(meta.version.clone()));
        top.insert("seed".into(), Value::from(meta.seed));
        top.insert("config".into(), Value::String(meta.config.clone()));
        top.insert("rows".into(), Value::Array(rows));
        let mut out = Value::Object(top).to_string();
        out.push('\n');
        out
    }
}

/// CSV rendering of one cell: `null` becomes the empty field, strings are
/// emitted verbatim (all produced strings are comma-free identifiers),
/// numbers and booleans use their canonical notation.
fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn opt<T: Into<Value>>(v: Option<T>) -> Value {
    v.map_or(Value::Null, Into::into)
}

/// Column order of `simulate` and `sweep` outputs.
pub const SIM_COLUMNS: [&str; 19] = [
    "protocol",
    "m",
    "k",
    "p",
    "b",
    "t",
    "c",
    "reps",
    "alpha",
    "trials",
    "errors",
    "error_rate",
    "ci_low",
    "ci_high",
    "transmission_delay",
    "propagation_delay",
    "n_total",
    "ratio_m_over_n",
    "seed",
];

/// Builds the row for one completed run. Parameter columns that do not apply
/// to the configured protocol are left empty; baselines that size themselves
/// from `(m, p)` echo their derived per-hop repetition count.
pub fn sim_row(config: &SimConfig, summary: &RunSummary) -> Row {
    let (b, t, c, reps, alpha) = match &config.protocol {
        ProtocolSpec::OneBit(params) => (
            Some(u64::from(params.b())),
            Some(u64::from(params.t())),
            Some(params.c()),
            Some(u64::from(params.r())),
            None,
        ),
        ProtocolSpec::OneBitChained(params, chain) => (
            Some(u64::from(params.b())),
            Some(u64::from(params.t())),
            Some(params.c()),
            Some(u64::from(params.r())),
            Some(chain.alpha()),
        ),
        ProtocolSpec::MultiBit(params) => (None, None, None, Some(u64::from(params.r())), None),
        ProtocolSpec::P0(explicit) => {
            let reps = match explicit {
                Some(params) => Some(u64::from(params.reps_per_hop())),
                None => p0_hop_reps(config.m, config.p).ok(),
            };
            (None, None, None, reps, None)
        }
        ProtocolSpec::P1 => (
            None,
            None,
            None,
            p1_plan(config.m, config.p)
                .ok()
                .map(|plan| u64::from(plan.inner_reps)),
            None,
        ),
    };
    let est = summary.estimate;
    vec![
        Value::from(config.protocol.name()),
        Value::from(config.m as u64),
        Value::from(config.k as u64),
        Value::from(config.p.get()),
        opt(b),
        opt(t),
        opt(c),
        opt(reps),
        opt(alpha),
        Value::from(est.trials),
        Value::from(est.errors),
        Value::from(est.rate),
        Value::from(est.ci_low),
        Value::from(est.ci_high),
        Value::from(summary.transmission.max),
        Value::from(summary.propagation.max),
        Value::from(summary.n_total.max),
        Value::from(config.m as f64 / summary.n_total.mean),
        Value::from(config.master_seed),
    ]
}

/// Table for a single `simulate` run.
pub fn sim_table(config: &SimConfig, summary: &RunSummary) -> Table {
    Table::new(SIM_COLUMNS.to_vec(), vec![sim_row(config, summary)])
}

/// Table for a sweep: one row per grid point, in sweep order.
pub fn sweep_table(template: &SimConfig, rows: &[SweepRow]) -> Table {
    let rows = rows
        .iter()
        .map(|point| {
            let mut config = template.clone();
            config.m = point.m;
            config.p = point.p;
            sim_row(&config, &point.summary)
        })
        .collect();
    Table::new(SIM_COLUMNS.to_vec(), rows)
}

/// Column order of `analyze recursion` output.
pub const RECURSION_COLUMNS: [&str; 3] = ["level", "epsilon_bound", "epsilon_bound_simplified"];

/// One row per level of a [`BoundTable`]; for recursions without a separate
/// simplified form the simplified column mirrors the exact bound (the
/// [`BoundTable::simplified_at`] fallback).
pub fn recursion_table<R: Real>(bounds: &BoundTable<R>) -> Table {
    let rows = (0..=bounds.top_level())
        .map(|level| {
            vec![
                Value::from(u64::from(level)),
                opt(bounds.eps_at(level).to_f64()),
                opt(bounds.simplified_at(level).to_f64()),
            ]
        })
        .collect();
    Table::new(RECURSION_COLUMNS.to_vec(), rows)
}

/// Column order of `analyze converse` output.
pub const CONVERSE_COLUMNS: [&str; 5] = ["i", "j", "F", "envelope", "within_envelope"];

/// Full converse grid in row-major order (`i` outer, `j` inner) with the
/// exponential envelope `e^{c(γi−j)}` and the per-point check
/// `F(i,j) <= envelope + 1e-12` evaluated against `params`.
pub fn converse_report<R: Real>(table: &ConverseTable<R>, params: &ConverseParams<R>) -> Table {
    let tol = R::of(1e-12);
    let mut rows = Vec::with_capacity((table.i_max() + 1) * (table.j_max() + 1));
    for i in 0..=table.i_max() {
        for j in 0..=table.j_max() {
            let f = table.get(i, j);
            let envelope =
                (params.c_exp() * (params.gamma() * R::of_u64(i as u64) - R::of_u64(j as u64)))
                    .exp();
            rows.push(vec![
                Value::from(i as u64),
                Value::from(j as u64),
                opt(f.to_f64()),
                opt(envelope.to_f64()),
                Value::from(f <= envelope + tol),
            ]);
        }
    }
    Table::new(CONVERSE_COLUMNS.to_vec(), rows)
}
