//! Monte Carlo harness: trial orchestration, parallelism, error estimates
//! with confidence intervals, and comparison against analytical bounds.
//!
//! Reproducibility contract: a trial's entire randomness is derived from
//! `(master_seed, trial_index)` — per-link noise tapes via
//! [`NoiseTape::for_link`] and the message via the reserved
//! [`MESSAGE_STREAM`] stream id. Trials are embarrassingly parallel and
//! results are aggregated in trial order, so every statistic is a pure
//! function of the configuration, independent of worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::binomial_tail_at_least;
use crate::baseline::{run_p0, run_p1, BaselineParams};
use crate::channel::{stream_seed, CrossoverProb, NoiseTape, MESSAGE_STREAM};
use crate::multibit::{encode_plan, run_multibit, MultiBitParams};
use crate::onebit::{
    decoder_level, run_onebit, run_onebit_chained, ChainParams, OneBitParams,
};
use crate::{Bit, BoundTable, Error, Result, TrialResult};

/// Which protocol a simulation drives, with its parameter bundle.
#[derive(Debug, Clone, PartialEq)]
pub enum ProtocolSpec {
    /// Single-bit recursive relay protocol.
    OneBit(OneBitParams),
    /// Single-bit protocol with chained instances and a majority decoder.
    OneBitChained(OneBitParams, ChainParams),
    /// Multi-bit recursive block protocol.
    MultiBit(MultiBitParams),
    /// Baseline P0; `None` uses the standard sizing for `(m, p)` (per-hop
    /// error `1/m²`, `m` blocks).
    P0(Option<BaselineParams>),
    /// Baseline P1 (derives its own structure from `(m, p)`).
    P1,
}

impl ProtocolSpec {
    /// Short stable name used in reports.
    pub fn name(&self) -> &'static str {
        match self {
            ProtocolSpec::OneBit(_) => "onebit",
            ProtocolSpec::OneBitChained(..) => "onebit_chained",
            ProtocolSpec::MultiBit(_) => "multibit",
            ProtocolSpec::P0(_) => "p0",
            ProtocolSpec::P1 => "p1",
        }
    }
}

/// Full configuration of a Monte Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Protocol and parameters.
    pub protocol: ProtocolSpec,
    /// Number of hops.
    pub m: usize,
    /// Message bits (must be 1 for everything except the multi-bit protocol).
    pub k: usize,
    /// Crossover probability of every link.
    pub p: CrossoverProb,
    /// Independent trials.
    pub trials: u64,
    /// Master seed; all per-trial randomness derives from it.
    pub master_seed: u64,
    /// Worker threads (0 = automatic).
    pub jobs: usize,
}

impl SimConfig {
    /// Checks the structural invariants (`trials >= 1`, `m >= 1`, `k`
    /// compatible with the protocol, P1's `m >= 8`).
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        if self.m < 1 {
            return Err(Error::InvalidParameter("hop count m must be >= 1".into()));
        }
        if self.k < 1 {
            return Err(Error::InvalidParameter("message length k must be >= 1".into()));
        }
        match self.protocol {
            ProtocolSpec::MultiBit(_) => {}
            _ if self.k != 1 => {
                return Err(Error::ConfigMismatch(format!(
                    "protocol {} carries exactly one bit, got k = {}",
                    self.protocol.name(),
                    self.k
                )));
            }
            ProtocolSpec::P1 if self.m < 8 => {
                return Err(Error::InvalidParameter(
                    "P1 requires m >= 8 so that ⌊log2 m⌋ >= 3".into(),
                ));
            }
            _ => {}
        }
        Ok(())
    }
}

/// The message bits trial `trial` transmits under `config` (uniform i.i.d.,
/// drawn from the reserved message stream, disjoint from all noise streams).
pub fn message_for_trial(config: &SimConfig, trial: u64) -> Vec<Bit> {
    let mut rng =
        ChaCha8Rng::seed_from_u64(stream_seed(config.master_seed, trial, MESSAGE_STREAM));
    (0..config.k).map(|_| Bit::from(rng.gen::<bool>())).collect()
}

/// Runs one trial: builds the per-link tapes for `(master_seed, trial)`,
/// draws the message, and executes the configured protocol.
pub fn run_single(config: &SimConfig, trial: u64) -> Result<TrialResult> {
    let mut tapes: Vec<NoiseTape> = (0..config.m as u64)
        .map(|link| NoiseTape::for_link(config.p, config.master_seed, trial, link))
        .collect();
    let message = message_for_trial(config, trial);
    match &config.protocol {
        ProtocolSpec::OneBit(params) => {
            run_onebit(message[0], config.m, config.p, params, &mut tapes)
        }
        ProtocolSpec::OneBitChained(params, chain) => {
            run_onebit_chained(message[0], config.m, config.p, params, chain, &mut tapes)
        }
        ProtocolSpec::MultiBit(params) => {
            run_multibit(&message, config.m, config.p, params, &mut tapes)
        }
        ProtocolSpec::P0(explicit) => {
            let params = match explicit {
                Some(params) => *params,
                None => BaselineParams::p0(config.m, config.p)?,
            };
            run_p0(message[0], config.m, config.p, &params, &mut tapes)
        }
        ProtocolSpec::P1 => run_p1(message[0], config.m, config.p, &mut tapes),
    }
}

/// Error count and rate with a 95% Wilson confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorEstimate {
    /// Trials whose estimate differed from the message.
    pub errors: u64,
    /// Total trials.
    pub trials: u64,
    /// Exactly `errors / trials`.
    pub rate: f64,
    /// Wilson 95% lower bound.
    pub ci_low: f64,
    /// Wilson 95% upper bound.
    pub ci_high: f64,
}

/// Min/max/mean of a per-trial delay component. The protocols' schedules
/// are deterministic given the configuration, so min = max in practice; the
/// spread is reported to make that visible rather than assumed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayStats {
    /// Smallest observed value.
    pub min: u64,
    /// Largest observed value.
    pub max: u64,
    /// Arithmetic mean.
    pub mean: f64,
}

impl DelayStats {
    fn collect(values: impl Iterator<Item = u64>, trials: u64) -> DelayStats {
        let (mut min, mut max, mut sum) = (u64::MAX, 0u64, 0u128);
        for v in values {
            min = min.min(v);
            max = max.max(v);
            sum += u128::from(v);
        }
        DelayStats {
            min,
            max,
            mean: sum as f64 / trials as f64,
        }
    }
}

/// Aggregated outcome of a Monte Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    /// Error statistics over all trials.
    pub estimate: ErrorEstimate,
    /// Per-trial transmission delay statistics.
    pub transmission: DelayStats,
    /// Per-trial propagation delay statistics.
    pub propagation: DelayStats,
    /// Per-trial total time statistics.
    pub n_total: DelayStats,
}

/// 95% Wilson score interval for `errors` successes out of `trials`.
/// Chosen over the normal approximation because it stays inside `[0, 1]`
/// and behaves sanely at zero observed errors.
pub fn wilson_interval(errors: u64, trials: u64) -> (f64, f64) {
    // z for a two-sided 95% interval; frozen so outputs are bit-stable.
    const Z: f64 = 1.959963984540054;
    let n = trials as f64;
    let phat = errors as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let center = phat + z2 / (2.0 * n);
    let margin = Z * ((phat * (1.0 - phat) + z2 / (4.0 * n)) / n).sqrt();
    // Clamp so the interval straddles the point estimate exactly even when
    // center and margin cancel only up to rounding (errors = 0 or n).
    (
        ((center - margin) / denom).clamp(0.0, phat),
        ((center + margin) / denom).clamp(phat, 1.0),
    )
}

/// Executes `config.trials` independent trials (in parallel across
/// `config.jobs` workers) and aggregates. Results are identical for any
/// worker count: each trial's randomness is self-contained and aggregation
/// runs in trial order.
pub fn run_trials(config: &SimConfig) -> Result<RunSummary> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::Internal(format!("worker pool: {e}")))?;
    let results: Vec<Result<TrialResult>> = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|trial| run_single(config, trial))
            .collect()
    });

    let mut trials = Vec::with_capacity(results.len());
    for (i, r) in results.into_iter().enumerate() {
        let r = r?;
        if r.n_total != r.transmission_delay + r.propagation_delay {
            return Err(Error::Internal(format!(
                "trial {i}: n_total {} != transmission {} + propagation {}",
                r.n_total, r.transmission_delay, r.propagation_delay
            )));
        }
        trials.push(r);
    }

    let errors = trials.iter().filter(|r| !r.correct).count() as u64;
    let (ci_low, ci_high) = wilson_interval(errors, config.trials);
    Ok(RunSummary {
        estimate: ErrorEstimate {
            errors,
            trials: config.trials,
            rate: errors as f64 / config.trials as f64,
            ci_low,
            ci_high,
        },
        transmission: DelayStats::collect(
            trials.iter().map(|r| r.transmission_delay),
            config.trials,
        ),
        propagation: DelayStats::collect(
            trials.iter().map(|r| r.propagation_delay),
            config.trials,
        ),
        n_total: DelayStats::collect(trials.iter().map(|r| r.n_total), config.trials),
    })
}

/// One grid point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Hop count at this point.
    pub m: usize,
    /// Crossover probability at this point.
    pub p: CrossoverProb,
    /// Aggregated run outcome.
    pub summary: RunSummary,
    /// Measured `m / n_total` (mean), the per-configuration velocity proxy.
    pub ratio_m_over_n: f64,
}

/// Runs `run_trials` once per `(m, p)` grid point, in the given order
/// (`m` outer, `p` inner). The grid must be nonempty.
pub fn sweep(template: &SimConfig, ms: &[usize], ps: &[CrossoverProb]) -> Result<Vec<SweepRow>> {
    if ms.is_empty() || ps.is_empty() {
        return Err(Error::InvalidParameter("sweep grid must be nonempty".into()));
    }
    let mut rows = Vec::with_capacity(ms.len() * ps.len());
    for &m in ms {
        for &p in ps {
            let mut config = template.clone();
            config.m = m;
            config.p = p;
            let summary = run_trials(&config)?;
            let ratio_m_over_n = m as f64 / summary.n_total.mean;
            rows.push(SweepRow {
                m,
                p,
                summary,
                ratio_m_over_n,
            });
        }
    }
    Ok(rows)
}

/// Outcome of checking an empirical rate against an analytical bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    /// Measured error rate.
    pub empirical_rate: f64,
    /// Analytical end-to-end bound for the run's configuration.
    pub bound: f64,
    /// Binomial standard error of an estimate at the bound value.
    pub standard_error: f64,
    /// `bound + 3·standard_error`: the acceptance threshold.
    pub allowed: f64,
    /// Whether `empirical_rate <= allowed`.
    pub pass: bool,
}

/// Derives the end-to-end analytical bound for `config` from a per-level
/// bound table and checks `summary` against it (allowing three binomial
/// standard errors of Monte Carlo fluctuation).
///
/// The end-to-end form is a union bound over the `⌈m/(span of one top-level
/// segment)⌉` segments the chain decomposes into, times the number of
/// emitted codewords; for chained instances the instance-majority is
/// bounded by the exact binomial tail (ties counted as failures). The table
/// must reach the configuration's decode level — a shorter table is
/// rejected as a configuration mismatch, as are baseline protocols, which
/// the level recursion does not describe.
pub fn compare_to_bounds(
    config: &SimConfig,
    summary: &RunSummary,
    table: &BoundTable,
) -> Result<BoundCheck> {
    config.validate()?;
    let bound = match &config.protocol {
        ProtocolSpec::OneBit(params) | ProtocolSpec::OneBitChained(params, _) => {
            let level = decoder_level(config.m, params);
            if table.top_level() < level {
                return Err(Error::ConfigMismatch(format!(
                    "bound table reaches level {} but m = {} decodes at level {level}",
                    table.top_level(),
                    config.m
                )));
            }
            let span = params.c() * u64::from(params.t()).pow(level);
            let segments = (config.m as u64).div_ceil(span);
            let per_instance = (segments as f64 * table.eps_at(level)).min(1.0);
            match &config.protocol {
                ProtocolSpec::OneBitChained(_, chain) => {
                    let instances = chain.instances_for(config.m);
                    binomial_tail_at_least(instances, instances.div_ceil(2), per_instance)
                }
                _ => per_instance,
            }
        }
        ProtocolSpec::MultiBit(params) => {
            let relays = config.m as u64 - 1;
            let mut l_prime = 0u32;
            let mut span = 1u64;
            loop {
                match span.checked_mul(params.t_of(l_prime + 1)) {
                    Some(s) if s <= relays => {
                        span = s;
                        l_prime += 1;
                    }
                    _ => break,
                }
            }
            let (plan, _) = encode_plan(config.k, l_prime, params)?;
            if table.top_level() < plan.level {
                return Err(Error::ConfigMismatch(format!(
                    "bound table reaches level {} but k = {} at m = {} decodes at level {}",
                    table.top_level(),
                    config.k,
                    config.m,
                    plan.level
                )));
            }
            let mut top_span = 1u64;
            for l in 1..=plan.level {
                top_span = top_span.saturating_mul(params.t_of(l));
            }
            let segments = (config.m as u64).div_ceil(top_span);
            ((plan.blocks as u64 * segments) as f64 * table.eps_at(plan.level)).min(1.0)
        }
        ProtocolSpec::P0(_) | ProtocolSpec::P1 => {
            return Err(Error::ConfigMismatch(
                "level-recursion bounds do not describe the baseline protocols".into(),
            ));
        }
    };
    let standard_error = (bound * (1.0 - bound) / config.trials as f64).sqrt();
    let allowed = bound + 3.0 * standard_error;
    Ok(BoundCheck {
        empirical_rate: summary.estimate.rate,
        bound,
        standard_error,
        allowed,
        pass: summary.estimate.rate <= allowed,
    })
}
