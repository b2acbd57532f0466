//! Store-and-forward reference protocols.
//!
//! Two classical constructions serve as baselines for the relay protocols:
//!
//! * **P0** — every hop repeats each bit `R` times and majority-votes;
//!   chaining `C` independent blocks and majority-voting the block verdicts
//!   drives the error down exponentially in `C`. Simple, but every relay
//!   waits a full `R`-bit block per hop, so the total time is `Θ(m·R)` with
//!   `R = Θ(log m)` for per-hop error `1/m²`.
//! * **P1** — splits the chain into sub-chains of length `⌊log₂ m⌋`, runs P0
//!   inside each sub-chain, and chains `⌈m/⌊log₂ m⌋⌉` outer repetitions with
//!   a final majority. The per-node overhead drops from `Θ(log m)` to
//!   `Θ(log log m)`, but remains unbounded as `m` grows: the boundary nodes
//!   must fully decode their sub-chain before forwarding anything.
//!
//! Neither achieves a bounded `n/m` ratio; the measured contrast against the
//! level-based relay protocols is the point of carrying them here.

use crate::analysis::exact_repetition_count;
use crate::channel::{transmit_stream, CrossoverProb, NoiseTape};
use crate::onebit::{check_tapes, majority_with_tiebreak};
use crate::{Bit, Error, Result, TrialResult};

/// Which baseline a parameter bundle configures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineVariant {
    /// Per-hop repetition with chained blocks.
    P0,
    /// Sub-chained P0 with outer repetitions.
    P1,
}

/// Parameters of a baseline run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BaselineParams {
    reps_per_hop: u32,
    block_count: u64,
    variant: BaselineVariant,
}

impl BaselineParams {
    /// Validates `reps_per_hop` odd and >= 1, `block_count >= 1`.
    pub fn new(reps_per_hop: u32, block_count: u64, variant: BaselineVariant) -> Result<Self> {
        if reps_per_hop == 0 || reps_per_hop.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "per-hop repetition count must be odd and >= 1, got {reps_per_hop}"
            )));
        }
        if block_count == 0 {
            return Err(Error::InvalidParameter(
                "block count must be >= 1".into(),
            ));
        }
        Ok(BaselineParams {
            reps_per_hop,
            block_count,
            variant,
        })
    }

    /// The standard P0 configuration for `m` hops at crossover `p`:
    /// per-hop repetitions sized for error `<= 1/m²` (exact binomial) and
    /// `m` chained blocks.
    pub fn p0(m: usize, p: CrossoverProb) -> Result<Self> {
        let reps = p0_hop_reps(m, p)?;
        let reps = u32::try_from(reps)
            .map_err(|_| Error::InvalidParameter(format!("repetition count {reps} too large")))?;
        BaselineParams::new(reps, m as u64, BaselineVariant::P0)
    }

    /// Raw repetitions per logical bit on each hop.
    pub fn reps_per_hop(&self) -> u32 {
        self.reps_per_hop
    }

    /// Number of chained independent blocks.
    pub fn block_count(&self) -> u64 {
        self.block_count
    }

    /// Variant tag.
    pub fn variant(&self) -> BaselineVariant {
        self.variant
    }
}

/// Minimal odd per-hop repetition count whose exact majority-vote error is
/// at most `1/m²`. Noiseless links (or `m = 1`, where the target is vacuous)
/// need only a single transmission.
pub fn p0_hop_reps(m: usize, p: CrossoverProb) -> Result<u64> {
    if m < 1 {
        return Err(Error::InvalidParameter("hop count m must be >= 1".into()));
    }
    if p.get() == 0.0 || m == 1 {
        return Ok(1);
    }
    exact_repetition_count(p.get(), 1.0 / (m as f64 * m as f64))
}

/// One logical bit across one link: `reps` raw transmissions, majority
/// vote at the receiver.
fn hop(bit: Bit, reps: u32, tape: &mut NoiseTape) -> Bit {
    let mut one = [bit];
    transmit_stream(&mut one, reps, tape);
    one[0]
}

/// Runs baseline P0: `block_count` chained instances of per-hop
/// repetition-majority relaying, decoded by a majority over block verdicts.
///
/// Delay accounting (pipeline identity, asserted by tests):
/// `transmission = block_count·reps`, `propagation = (m-1)·reps` — each
/// relay forwards its estimate of block `i-1` while receiving block `i`, so
/// it lags exactly one `reps`-bit block behind its predecessor.
pub fn run_p0(
    theta: Bit,
    m: usize,
    p: CrossoverProb,
    params: &BaselineParams,
    tapes: &mut [NoiseTape],
) -> Result<TrialResult> {
    if theta > 1 {
        return Err(Error::InvalidParameter(format!(
            "theta must be binary, got {theta}"
        )));
    }
    if params.variant != BaselineVariant::P0 {
        return Err(Error::ConfigMismatch(
            "run_p0 requires P0-variant parameters".into(),
        ));
    }
    if m < 1 {
        return Err(Error::InvalidParameter("hop count m must be >= 1".into()));
    }
    check_tapes(m, p, tapes)?;

    let reps = params.reps_per_hop;
    let blocks = params.block_count as usize;
    // Every block carries theta from the source; each link relays the
    // blocks in temporal order, which is exactly the per-tape draw order.
    let mut verdicts = vec![theta; blocks];
    for tape in tapes.iter_mut() {
        for v in verdicts.iter_mut() {
            *v = hop(*v, reps, tape);
        }
    }
    let estimate = majority_with_tiebreak(&verdicts);

    let reps = u64::from(reps);
    let transmission_delay = params.block_count * reps;
    let propagation_delay = (m as u64 - 1) * reps;
    Ok(TrialResult {
        correct: estimate == theta,
        estimate: vec![estimate],
        transmission_delay,
        propagation_delay,
        n_total: transmission_delay + propagation_delay,
    })
}

/// The derived structure of a P1 run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct P1Plan {
    /// Sub-chain length `g = ⌊log₂ m⌋`.
    pub sub_len: usize,
    /// Hop count of each sub-chain; all equal `g` except a shorter tail.
    pub sub_lengths: Vec<usize>,
    /// Per-hop repetitions inside every sub-chain (sized for error `1/g²`
    /// over the nominal length `g`).
    pub inner_reps: u32,
    /// Blocks chained inside each sub-chain (= `g`).
    pub inner_blocks: usize,
    /// Outer repetitions of the whole sub-chained pipeline (= `⌈m/g⌉`).
    pub outer_reps: usize,
}

impl P1Plan {
    /// Raw bits each node transmits: `outer·g·reps`.
    pub fn transmission_delay(&self) -> u64 {
        (self.outer_reps * self.inner_blocks) as u64 * u64::from(self.inner_reps)
    }

    /// Activation lag of the sink relative to the source's stream: ordinary
    /// relays lag one `reps`-bit block, while each of the `s-1` interior
    /// sub-chain boundaries absorbs a whole inner instance (`g·reps` bits)
    /// before it can forward a verdict:
    /// `(m-s)·reps + (s-1)·g·reps`.
    pub fn propagation_delay(&self) -> u64 {
        let m: u64 = self.sub_lengths.iter().map(|&l| l as u64).sum();
        let s = self.sub_lengths.len() as u64;
        let reps = u64::from(self.inner_reps);
        (m - s) * reps + (s - 1) * self.inner_blocks as u64 * reps
    }
}

/// Computes the P1 decomposition for `m` hops at crossover `p`.
pub fn p1_plan(m: usize, p: CrossoverProb) -> Result<P1Plan> {
    if m < 8 {
        return Err(Error::InvalidParameter(format!(
            "P1 requires m >= 8 so that ⌊log2 m⌋ >= 3, got {m}"
        )));
    }
    let g = (m.ilog2()) as usize;
    let full = m / g;
    let tail = m % g;
    let mut sub_lengths = vec![g; full];
    if tail > 0 {
        sub_lengths.push(tail);
    }
    let inner_reps = if p.get() == 0.0 {
        1
    } else {
        let target = 1.0 / (g as f64 * g as f64);
        let reps = exact_repetition_count(p.get(), target)?;
        u32::try_from(reps)
            .map_err(|_| Error::InvalidParameter(format!("repetition count {reps} too large")))?
    };
    Ok(P1Plan {
        sub_len: g,
        sub_lengths,
        inner_reps,
        inner_blocks: g,
        outer_reps: m.div_ceil(g),
    })
}

/// Runs baseline P1: the chain is split into `⌈m/g⌉` sub-chains of length
/// `g = ⌊log₂ m⌋` (final one shorter), each executing P0 with `g` blocks and
/// per-hop error target `1/g²`; the whole pipeline repeats `⌈m/g⌉` times and
/// the sink majority-votes the outer verdicts.
///
/// The propagation delay is paid once (outer repetitions are chained), but
/// every sub-chain boundary waits for a full inner instance — the `ω(1)`
/// per-node lag that keeps this family short of a bounded `n/m`.
pub fn run_p1(
    theta: Bit,
    m: usize,
    p: CrossoverProb,
    tapes: &mut [NoiseTape],
) -> Result<TrialResult> {
    if theta > 1 {
        return Err(Error::InvalidParameter(format!(
            "theta must be binary, got {theta}"
        )));
    }
    let plan = p1_plan(m, p)?;
    check_tapes(m, p, tapes)?;

    let reps = plan.inner_reps;
    let mut outer_verdicts = Vec::with_capacity(plan.outer_reps);
    for _ in 0..plan.outer_reps {
        let mut carried = theta;
        let mut link = 0usize;
        for &len in &plan.sub_lengths {
            // P0 over this sub-chain: g chained blocks, all carrying the
            // boundary verdict from the previous sub-chain.
            let mut verdicts = vec![carried; plan.inner_blocks];
            for tape in tapes[link..link + len].iter_mut() {
                for v in verdicts.iter_mut() {
                    *v = hop(*v, reps, tape);
                }
            }
            carried = majority_with_tiebreak(&verdicts);
            link += len;
        }
        outer_verdicts.push(carried);
    }
    let estimate = majority_with_tiebreak(&outer_verdicts);

    let transmission_delay = plan.transmission_delay();
    let propagation_delay = plan.propagation_delay();
    Ok(TrialResult {
        correct: estimate == theta,
        estimate: vec![estimate],
        transmission_delay,
        propagation_delay,
        n_total: transmission_delay + propagation_delay,
    })
}
