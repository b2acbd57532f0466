//! Literal discrete-time execution of the relay protocols.
//!
//! The hop-by-hop engines ([`run_onebit`](crate::onebit::run_onebit),
//! [`run_multibit`](crate::multibit::run_multibit)) push logical content
//! link by link and *derive* the delay fields from the activation schedule.
//! This module replays the same protocol on an explicit step clock — one raw
//! bit per link per step, queues between nodes, noise applied at the moment
//! of transmission — and *measures* the delays instead. Its tests pin the two
//! engines together bit for bit, draw for draw, and step for step.
//!
//! Step model:
//!
//! * Each step has a **send phase** (every node may pop one ready bit per
//!   outgoing link) followed by a **deliver phase** (all popped bits cross
//!   their — noisy — links simultaneously), so a bit can never traverse two
//!   links within one step.
//! * A relay that completes a block at step `s` computes its output at `s`;
//!   the output becomes sendable at `s + 1`. Source bits are known before
//!   the clock starts and are sendable from step 0.
//! * Idle links consume no tape: a [`NoiseTape`] draw happens only when a
//!   raw bit is actually transmitted, so both engines see identical flip
//!   sequences per link.
//!
//! Beyond the protocol outcome, the run reports a causality audit (no bit
//! was ever sent at or before the step it was computed) and the step of the
//! first raw arrival at the sink, which must equal the propagation delay.

use std::collections::VecDeque;

use crate::channel::{transmit, CrossoverProb, NoiseTape};
use crate::multibit::{
    decode_level_with, decode_message, encode_level_with, encode_message, LevelDims,
    MultiBitParams, MultiBitSchedule,
};
use crate::onebit::{
    check_tapes, decode_block, majority_with_tiebreak, ChainParams, LevelSchedule, OneBitParams,
};
use crate::{Bit, Error, Result, TrialResult};

/// Outcome of a stepwise run: the protocol result with *measured* delays,
/// plus audit facts only a timed execution can produce.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepwiseOutcome {
    /// Protocol outcome; `n_total` is the measured step count (last raw
    /// arrival at the sink, plus one), `propagation_delay` the measured
    /// pipeline lag `n_total - transmission_delay`.
    pub result: TrialResult,
    /// True iff every relayed bit left its node strictly after the step in
    /// which it was computed.
    pub causality_ok: bool,
    /// Step at which the first raw bit reached the sink.
    pub first_arrival: u64,
}

/// A raw bit waiting in a node's output queue. `computed_at == None` marks
/// source bits, known before the clock starts.
#[derive(Debug, Clone, Copy)]
struct QueuedBit {
    bit: Bit,
    computed_at: Option<u64>,
}

/// Majority-vote accumulator over the `r` raw repeats of one logical bit.
#[derive(Debug)]
struct RepCollapse {
    reps: u32,
    seen: u32,
    ones: u32,
}

impl RepCollapse {
    fn new(reps: u32) -> Self {
        RepCollapse {
            reps,
            seen: 0,
            ones: 0,
        }
    }

    /// Feeds one raw bit; yields the logical majority when the group is full.
    fn push(&mut self, raw: Bit) -> Option<Bit> {
        self.seen += 1;
        self.ones += u32::from(raw);
        if self.seen < self.reps {
            return None;
        }
        let logical = Bit::from(2 * self.ones > self.reps);
        self.seen = 0;
        self.ones = 0;
        Some(logical)
    }
}

/// What a relay does with a completed logical block.
enum BlockTransform<'a> {
    /// Level-0 nodes forward bits unchanged.
    Passthrough,
    /// Single-bit protocol: recursive-majority verdict, re-emitted blockwise.
    MajorityVerdict { level: u32, arity: u32 },
    /// Multi-bit protocol: level decode followed by re-encode.
    Recode { level: u32, dims: &'a LevelDims },
}

impl BlockTransform<'_> {
    fn apply(&self, block: &[Bit]) -> Result<Vec<Bit>> {
        match self {
            BlockTransform::Passthrough => Ok(block.to_vec()),
            BlockTransform::MajorityVerdict { level, arity } => {
                let verdict = decode_block(block, *level, *arity)?;
                Ok(vec![verdict; block.len()])
            }
            BlockTransform::Recode { level, dims } => {
                let decoded = decode_level_with(block, *level, dims)?;
                encode_level_with(&decoded, *level, dims)
            }
        }
    }
}

/// One relay: collapses raw repeats to logical bits, buffers a block, and
/// queues the transformed block (as raw repeats again) for the next link.
struct RelayNode<'a> {
    collapse: RepCollapse,
    block_len: usize,
    buffer: Vec<Bit>,
    transform: BlockTransform<'a>,
    out: VecDeque<QueuedBit>,
    reps: u32,
}

impl<'a> RelayNode<'a> {
    fn new(reps: u32, block_len: usize, transform: BlockTransform<'a>) -> Self {
        RelayNode {
            collapse: RepCollapse::new(reps),
            block_len,
            buffer: Vec::with_capacity(block_len),
            transform,
            out: VecDeque::new(),
            reps,
        }
    }

    /// Absorbs one raw bit delivered at `step`; a completed block is
    /// processed and its output queued, sendable from `step + 1`.
    fn deliver(&mut self, raw: Bit, step: u64) -> Result<()> {
        let Some(logical) = self.collapse.push(raw) else {
            return Ok(());
        };
        self.buffer.push(logical);
        if self.buffer.len() < self.block_len {
            return Ok(());
        }
        let output = self.transform.apply(&self.buffer)?;
        self.buffer.clear();
        for bit in output {
            for _ in 0..self.reps {
                self.out.push_back(QueuedBit {
                    bit,
                    computed_at: Some(step),
                });
            }
        }
        Ok(())
    }
}

/// Pops the queue front if it may be sent at `step`; independently re-checks
/// that a relayed bit leaves strictly after the step it was computed.
fn pop_ready(queue: &mut VecDeque<QueuedBit>, step: u64, causality_ok: &mut bool) -> Option<Bit> {
    let ready = match queue.front()?.computed_at {
        None => 0,
        Some(at) => at + 1,
    };
    if ready > step {
        return None;
    }
    let entry = queue.pop_front().expect("front() was Some above");
    if let Some(at) = entry.computed_at {
        if step <= at {
            *causality_ok = false;
        }
    }
    Some(entry.bit)
}

/// Drives the step clock until the sink holds `sink_logical_len` logical
/// bits. Returns the sink's logical stream, the first-arrival step, the
/// measured `n_total`, and the causality flag.
fn run_engine(
    source_logical: &[Bit],
    reps: u32,
    mut relays: Vec<RelayNode<'_>>,
    sink_logical_len: usize,
    tapes: &mut [NoiseTape],
) -> Result<(Vec<Bit>, u64, u64, bool)> {
    let m = tapes.len();
    debug_assert_eq!(relays.len(), m.saturating_sub(1));

    let mut source: VecDeque<QueuedBit> = source_logical
        .iter()
        .flat_map(|&bit| {
            std::iter::repeat_n(QueuedBit {
                bit,
                computed_at: None,
            }, reps as usize)
        })
        .collect();

    let mut sink_collapse = RepCollapse::new(reps);
    let mut sink_logical: Vec<Bit> = Vec::with_capacity(sink_logical_len);
    let mut first_arrival: Option<u64> = None;
    let mut last_arrival: u64 = 0;
    let mut causality_ok = true;

    // Loose stall guard: even a chain with no pipelining at all finishes
    // within raw_len steps per link.
    let raw_len = source_logical.len() as u64 * u64::from(reps);
    let step_cap = raw_len.saturating_mul(m as u64 + 1).saturating_add(1024);

    let mut sends: Vec<Option<Bit>> = vec![None; m];
    let mut step: u64 = 0;
    while sink_logical.len() < sink_logical_len {
        if step >= step_cap {
            return Err(Error::Internal(format!(
                "stepwise engine stalled after {step} steps with {} of {} sink bits",
                sink_logical.len(),
                sink_logical_len
            )));
        }
        // Send phase: every node picks at most one ready raw bit.
        sends[0] = pop_ready(&mut source, step, &mut causality_ok);
        for (send, relay) in sends[1..].iter_mut().zip(relays.iter_mut()) {
            *send = pop_ready(&mut relay.out, step, &mut causality_ok);
        }
        // Deliver phase: all picked bits cross their links simultaneously.
        for (j, tape) in tapes.iter_mut().enumerate() {
            let Some(bit) = sends[j] else { continue };
            let delivered = transmit(bit, tape.next_flip());
            if j + 1 < m {
                relays[j].deliver(delivered, step)?;
            } else {
                first_arrival.get_or_insert(step);
                last_arrival = step;
                if let Some(logical) = sink_collapse.push(delivered) {
                    sink_logical.push(logical);
                }
            }
        }
        step += 1;
    }

    let first = first_arrival.ok_or_else(|| Error::Internal("sink never reached".into()))?;
    Ok((sink_logical, first, last_arrival + 1, causality_ok))
}

/// Runs the single-bit protocol (optionally chained) on the step clock.
///
/// Produces the same estimate, tape consumption, and delay fields as
/// [`run_onebit`](crate::onebit::run_onebit) /
/// [`run_onebit_chained`](crate::onebit::run_onebit_chained), with
/// `propagation_delay` and `n_total` measured rather than derived.
pub fn run_onebit_stepwise(
    theta: Bit,
    m: usize,
    p: CrossoverProb,
    params: &OneBitParams,
    chain: Option<&ChainParams>,
    tapes: &mut [NoiseTape],
) -> Result<StepwiseOutcome> {
    if theta > 1 {
        return Err(Error::InvalidParameter(format!(
            "theta must be binary, got {theta}"
        )));
    }
    check_tapes(m, p, tapes)?;
    let schedule = LevelSchedule::new(m, params)?;
    let block = schedule.encoder_bits();
    let instances = chain.map_or(1, |c| c.instances_for(m));
    let logical_len = block
        .checked_mul(instances)
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| Error::InvalidParameter("stream length exceeds the address space".into()))?;
    let source = vec![theta; logical_len];

    let relays = (1..m)
        .map(|node| {
            let level = schedule.level_of(node);
            let transform = if level == 0 {
                BlockTransform::Passthrough
            } else {
                BlockTransform::MajorityVerdict {
                    level,
                    arity: params.b(),
                }
            };
            RelayNode::new(params.r(), (params.b() as usize).pow(level), transform)
        })
        .collect();

    let (sink_logical, first_arrival, n_total, causality_ok) =
        run_engine(&source, params.r(), relays, logical_len, tapes)?;

    let mut verdicts = Vec::with_capacity(instances as usize);
    for chunk in sink_logical.chunks_exact(block as usize) {
        verdicts.push(decode_block(chunk, schedule.top_level(), params.b())?);
    }
    let estimate = majority_with_tiebreak(&verdicts);

    let transmission_delay = u64::from(params.r()) * block * instances;
    Ok(StepwiseOutcome {
        result: TrialResult {
            estimate: vec![estimate],
            correct: estimate == theta,
            transmission_delay,
            propagation_delay: n_total - transmission_delay,
            n_total,
        },
        causality_ok,
        first_arrival,
    })
}

/// Runs the multi-bit protocol on the step clock; the timed counterpart of
/// [`run_multibit`](crate::multibit::run_multibit).
pub fn run_multibit_stepwise(
    message: &[Bit],
    m: usize,
    p: CrossoverProb,
    params: &MultiBitParams,
    tapes: &mut [NoiseTape],
) -> Result<StepwiseOutcome> {
    if message.iter().any(|&b| b > 1) {
        return Err(Error::InvalidParameter("message must be binary".into()));
    }
    check_tapes(m, p, tapes)?;
    let schedule = MultiBitSchedule::new(m, params)?;
    let (source, plan) = encode_message(message, schedule.l_prime(), params)?;
    let dims = LevelDims::up_to(params, plan.level)?;

    let relays = (1..m)
        .map(|node| {
            let level = schedule.level_of(node);
            let transform = if level == 0 {
                BlockTransform::Passthrough
            } else {
                BlockTransform::Recode {
                    level,
                    dims: &dims,
                }
            };
            RelayNode::new(params.r(), dims.n_of(level), transform)
        })
        .collect();

    let (sink_logical, first_arrival, n_total, causality_ok) =
        run_engine(&source, params.r(), relays, source.len(), tapes)?;

    let estimate = decode_message(&sink_logical, message.len(), schedule.l_prime(), params)?;

    let transmission_delay = u64::from(params.r()) * source.len() as u64;
    Ok(StepwiseOutcome {
        result: TrialResult {
            correct: estimate == message,
            estimate,
            transmission_delay,
            propagation_delay: n_total - transmission_delay,
            n_total,
        },
        causality_ok,
        first_arrival,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multibit::run_multibit;
    use crate::onebit::{run_onebit, run_onebit_chained};

    fn p(v: f64) -> CrossoverProb {
        CrossoverProb::new(v).unwrap()
    }

    fn tapes_for(m: usize, p: CrossoverProb, seed: u64, trial: u64) -> Vec<NoiseTape> {
        (0..m)
            .map(|j| NoiseTape::for_link(p, seed, trial, j as u64))
            .collect()
    }

    /// Runs both single-bit engines on cloned tapes and checks full outcome,
    /// audit, and tape-consumption agreement.
    fn assert_onebit_agreement(
        m: usize,
        noise: f64,
        params: &OneBitParams,
        chain: Option<&ChainParams>,
        seed: u64,
        trial: u64,
    ) {
        let pv = p(noise);
        let theta = (trial % 2) as Bit;
        let mut tapes_logical = tapes_for(m, pv, seed, trial);
        let mut tapes_stepped = tapes_logical.clone();

        let logical = match chain {
            None => run_onebit(theta, m, pv, params, &mut tapes_logical),
            Some(c) => run_onebit_chained(theta, m, pv, params, c, &mut tapes_logical),
        }
        .unwrap();
        let stepped =
            run_onebit_stepwise(theta, m, pv, params, chain, &mut tapes_stepped).unwrap();

        assert_eq!(stepped.result, logical, "m={m} p={noise} trial={trial}");
        assert!(stepped.causality_ok, "m={m} p={noise} trial={trial}");
        assert_eq!(
            stepped.first_arrival, logical.propagation_delay,
            "first arrival must equal the schedule's propagation delay"
        );
        for (a, b) in tapes_logical.iter().zip(&tapes_stepped) {
            assert_eq!(a.position(), b.position(), "m={m} p={noise} trial={trial}");
        }
    }

    #[test]
    fn onebit_stepwise_matches_logical_engine() {
        let params = OneBitParams::default();
        for &m in &[1usize, 2, 3, 4, 16, 20, 64, 100, 256] {
            for &noise in &[0.0, 0.02, 1.0 / 48.0, 0.2] {
                for trial in 0..3 {
                    assert_onebit_agreement(m, noise, &params, None, 7, trial);
                }
            }
        }
    }

    #[test]
    fn onebit_stepwise_matches_with_spacing_and_repetition() {
        let spaced = OneBitParams::new(3, 4, 5, 1).unwrap();
        let repeated = OneBitParams::new(3, 4, 1, 5).unwrap();
        for &m in &[1usize, 5, 20, 80] {
            for trial in 0..3 {
                assert_onebit_agreement(m, 0.05, &spaced, None, 11, trial);
            }
        }
        for &m in &[1usize, 4, 16] {
            for trial in 0..3 {
                assert_onebit_agreement(m, 0.1, &repeated, None, 13, trial);
            }
        }
    }

    #[test]
    fn chained_stepwise_matches_logical_engine() {
        let params = OneBitParams::default();
        let chain = ChainParams::new(1.0 - 3f64.ln() / 4f64.ln()).unwrap();
        for &m in &[4usize, 20, 256] {
            for &noise in &[0.0, 1.0 / 48.0, 0.2] {
                for trial in 0..3 {
                    assert_onebit_agreement(m, noise, &params, Some(&chain), 17, trial);
                }
            }
        }
    }

    #[test]
    fn multibit_stepwise_matches_logical_engine() {
        let params = MultiBitParams::default();
        for &m in &[1usize, 9, 18, 144, 145] {
            for &k in &[1usize, 3, 8, 16] {
                for &noise in &[0.0, 0.001, 0.01] {
                    for trial in 0..2u64 {
                        let pv = p(noise);
                        let message: Vec<Bit> =
                            (0..k).map(|i| ((i as u64 + trial) % 2) as Bit).collect();
                        let mut tapes_logical = tapes_for(m, pv, 23, trial);
                        let mut tapes_stepped = tapes_logical.clone();

                        let logical =
                            run_multibit(&message, m, pv, &params, &mut tapes_logical).unwrap();
                        let stepped =
                            run_multibit_stepwise(&message, m, pv, &params, &mut tapes_stepped)
                                .unwrap();

                        assert_eq!(stepped.result, logical, "m={m} k={k} p={noise}");
                        assert!(stepped.causality_ok);
                        assert_eq!(stepped.first_arrival, logical.propagation_delay);
                        for (a, b) in tapes_logical.iter().zip(&tapes_stepped) {
                            assert_eq!(a.position(), b.position(), "m={m} k={k} p={noise}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn measured_delays_obey_the_pipeline_identity() {
        let params = OneBitParams::default();
        let pv = p(0.02);
        let mut tapes = tapes_for(64, pv, 3, 0);
        let out = run_onebit_stepwise(1, 64, pv, &params, None, &mut tapes).unwrap();
        assert_eq!(
            out.result.n_total,
            out.result.transmission_delay + out.result.propagation_delay
        );
        assert_eq!(out.first_arrival, out.result.propagation_delay);
        // The sink is busy for exactly the transmission span once reached.
        assert_eq!(
            out.result.n_total - out.first_arrival,
            out.result.transmission_delay
        );
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let params = OneBitParams::default();
        let pv = p(0.1);
        let mut tapes = tapes_for(4, pv, 1, 0);
        assert!(run_onebit_stepwise(2, 4, pv, &params, None, &mut tapes).is_err());
        let mut short = tapes_for(3, pv, 1, 0);
        assert!(run_onebit_stepwise(0, 4, pv, &params, None, &mut short).is_err());
        let mb = MultiBitParams::default();
        let mut tapes_mb = tapes_for(4, pv, 1, 0);
        assert!(run_multibit_stepwise(&[0, 2], 4, pv, &mb, &mut tapes_mb).is_err());
    }
}
