//! Single-bit relay protocol over a chain of `m` BSC links.
//!
//! The source repeats the bit Θ; relay nodes are assigned *levels* by their
//! index, and a level-`l` node aggregates `b^l` incoming logical bits by
//! recursive `b`-ary majority before re-emitting `b^l` copies of its verdict.
//! Low-level nodes therefore act almost like a wire (unit delay), while the
//! sparse high-level nodes periodically clean up accumulated noise. The sink
//! at node `m` applies a level-`L` decode to its `b^L` received bits.
//!
//! Knobs beyond the `b = 3, t = 4` default:
//! * `c` — stretches the level schedule (`level l` nodes sit at multiples of
//!   `c·t^l`), trading delay for lower effective noise per level-0 stretch;
//! * `r` — sends every logical bit as `r` raw repeats per link, with the
//!   receiver majority-voting each group (reduces the effective crossover
//!   probability);
//! * chaining — runs the whole protocol `⌈m^α⌉` times back to back and takes
//!   a majority over the instance verdicts.

use crate::channel::{transmit_stream, CrossoverProb, NoiseTape};
use crate::{analysis, Bit, Error, Result, TrialResult};

/// Parameters of the single-bit protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OneBitParams {
    b: u32,
    t: u32,
    c: u64,
    r: u32,
}

impl Default for OneBitParams {
    /// The reference configuration: `b = 3`, `t = 4`, `c = 1`, `r = 1`.
    fn default() -> Self {
        OneBitParams {
            b: 3,
            t: 4,
            c: 1,
            r: 1,
        }
    }
}

impl OneBitParams {
    /// Validates `b` odd ≥ 3, `t > b`, `c ≥ 1`, `r ≥ 1` odd.
    ///
    /// Odd `b` and `r` mean no majority vote inside a protocol instance can
    /// tie, so no tie-break convention is ever needed there.
    pub fn new(b: u32, t: u32, c: u64, r: u32) -> Result<Self> {
        if b < 3 || b.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "majority arity b must be odd and >= 3, got {b}"
            )));
        }
        if t <= b {
            return Err(Error::InvalidParameter(format!(
                "spacing base t must exceed b, got t = {t}, b = {b}"
            )));
        }
        if c < 1 {
            return Err(Error::InvalidParameter("spacing multiplier c must be >= 1".into()));
        }
        if r < 1 || r.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "repetition count r must be odd and >= 1, got {r}"
            )));
        }
        Ok(OneBitParams { b, t, c, r })
    }

    /// Majority arity `b`.
    pub fn b(&self) -> u32 {
        self.b
    }

    /// Level spacing base `t`.
    pub fn t(&self) -> u32 {
        self.t
    }

    /// Level-0 spacing multiplier `c`.
    pub fn c(&self) -> u64 {
        self.c
    }

    /// Per-link repetition count `r`.
    pub fn r(&self) -> u32 {
        self.r
    }
}

/// Chaining configuration: the whole protocol is repeated `⌈m^alpha⌉` times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainParams {
    alpha: f64,
}

impl ChainParams {
    /// Validates `0 < alpha < 1`.
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && 0.0 < alpha && alpha < 1.0 {
            Ok(ChainParams { alpha })
        } else {
            Err(Error::InvalidParameter(format!(
                "chain exponent alpha must lie in (0, 1), got {alpha}"
            )))
        }
    }

    /// The repetition exponent α.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Number of chained instances, `⌈m^alpha⌉`.
    ///
    /// `m^alpha` is evaluated in floating point; values within `1e-9` of an
    /// integer are snapped to it before the ceiling so representation error
    /// cannot bump an exact power to the next integer.
    pub fn instances_for(&self, m: usize) -> u64 {
        let x = (m as f64).powf(self.alpha);
        let snapped = if (x - x.round()).abs() < 1e-9 { x.round() } else { x.ceil() };
        (snapped as u64).max(1)
    }
}

/// Level assignment and decoder geometry for a chain of `m` hops.
#[derive(Debug, Clone)]
pub struct LevelSchedule {
    m: usize,
    /// `levels[j]` = level of relay node `j`, for `1 <= j <= m - 1`
    /// (entry 0 is unused — node 0 is the encoder).
    levels: Vec<u32>,
    top_level: u32,
    encoder_bits: u64,
}

impl LevelSchedule {
    /// Builds the schedule for `m >= 1` hops.
    pub fn new(m: usize, params: &OneBitParams) -> Result<Self> {
        if m < 1 {
            return Err(Error::InvalidParameter("hop count m must be >= 1".into()));
        }
        let mut levels = vec![0u32; m.max(1)];
        for (j, slot) in levels.iter_mut().enumerate().skip(1) {
            *slot = node_level(j, params);
        }
        let top_level = decoder_level(m, params);
        let encoder_bits = checked_pow(params.b as u64, top_level)?;
        Ok(LevelSchedule {
            m,
            levels,
            top_level,
            encoder_bits,
        })
    }

    /// Number of hops.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Level of relay node `j` (`1 <= j <= m - 1`).
    pub fn level_of(&self, j: usize) -> u32 {
        debug_assert!(j >= 1 && j < self.m);
        self.levels[j]
    }

    /// Decoder level `L = ⌊log_t(m/c)⌋` (0 when `m < c·t`).
    pub fn top_level(&self) -> u32 {
        self.top_level
    }

    /// Logical block length `B = b^L` the encoder emits and the sink decodes.
    pub fn encoder_bits(&self) -> u64 {
        self.encoder_bits
    }

    /// Number of relay nodes with level at least `l` (`l >= 1`).
    pub fn count_at_least(&self, l: u32) -> u64 {
        self.levels.iter().skip(1).filter(|&&lv| lv >= l).count() as u64
    }

    /// Sum of `b^level(j)` over relays: the logical propagation lag of the
    /// chain (multiply by `r` for raw channel uses).
    pub fn propagation_logical(&self, params: &OneBitParams) -> u64 {
        self.levels
            .iter()
            .skip(1)
            .map(|&lv| (params.b as u64).pow(lv))
            .sum()
    }
}

/// Level of relay node `i`: the largest `l` with `c·t^l | i` (and therefore
/// `c·t^{l+1} ∤ i`); 0 when no such `l` exists (in particular when `c ∤ i`).
pub fn node_level(i: usize, params: &OneBitParams) -> u32 {
    let i = i as u64;
    let c = params.c;
    if i == 0 || !i.is_multiple_of(c) {
        return 0;
    }
    let mut q = i / c;
    let t = params.t as u64;
    let mut level = 0u32;
    while q.is_multiple_of(t) {
        q /= t;
        level += 1;
    }
    level
}

/// Decoder level `L`: the largest `l >= 0` with `c·t^l <= m`.
///
/// Equivalently `⌊log_t(m/c)⌋`, and 0 when `m < c·t` (the protocol then
/// degenerates to store-and-forward with repetition).
pub fn decoder_level(m: usize, params: &OneBitParams) -> u32 {
    let m = m as u64;
    let t = params.t as u64;
    let mut level = 0u32;
    let mut scale = params.c;
    loop {
        match scale.checked_mul(t) {
            Some(next) if next <= m => {
                scale = next;
                level += 1;
            }
            _ => return level,
        }
    }
}

fn checked_pow(base: u64, exp: u32) -> Result<u64> {
    base.checked_pow(exp).ok_or_else(|| {
        Error::InvalidParameter(format!("b^L = {base}^{exp} exceeds the u64 range"))
    })
}

/// Majority vote over an odd number of bits.
pub fn majority(bits: &[Bit]) -> Result<Bit> {
    if bits.len().is_multiple_of(2) {
        return Err(Error::EvenVote(bits.len()));
    }
    let ones: usize = bits.iter().map(|&b| b as usize).sum();
    Ok(u8::from(2 * ones > bits.len()))
}

/// Majority over any number of verdicts, ties resolved to the first verdict.
///
/// Used only across chained protocol instances (whose count may be even).
/// The rule is self-complementary — complementing every verdict complements
/// the output — which preserves the protocol's complement symmetry.
pub(crate) fn majority_with_tiebreak(verdicts: &[Bit]) -> Bit {
    debug_assert!(!verdicts.is_empty());
    let ones: usize = verdicts.iter().map(|&b| b as usize).sum();
    match (2 * ones).cmp(&verdicts.len()) {
        std::cmp::Ordering::Greater => 1,
        std::cmp::Ordering::Less => 0,
        std::cmp::Ordering::Equal => verdicts[0],
    }
}

/// Recursive `b`-ary majority decode of a `b^level`-bit block.
///
/// Level 0 returns the single bit; level `l` splits into `b` sub-blocks,
/// decodes each at level `l-1`, and majority-votes the verdicts.
pub fn decode_block(bits: &[Bit], level: u32, arity: u32) -> Result<Bit> {
    let expected = (arity as u64).checked_pow(level).and_then(|n| usize::try_from(n).ok());
    match expected {
        Some(n) if n == bits.len() => {}
        _ => {
            return Err(Error::LengthMismatch {
                expected: expected.unwrap_or(usize::MAX),
                got: bits.len(),
            })
        }
    }
    if arity.is_multiple_of(2) {
        return Err(Error::EvenVote(arity as usize));
    }
    Ok(decode_block_unchecked(bits, level, arity))
}

fn decode_block_unchecked(bits: &[Bit], level: u32, arity: u32) -> Bit {
    if level == 0 {
        return bits[0];
    }
    let sub = bits.len() / arity as usize;
    let mut ones = 0u32;
    for chunk in bits.chunks_exact(sub) {
        ones += u32::from(decode_block_unchecked(chunk, level - 1, arity));
    }
    u8::from(2 * ones > arity)
}

/// Incremental level-`l` decoder: accepts one bit at a time and keeps only
/// `O(l)` partial majority counters, so per-bit work is bounded by the tree
/// depth rather than the block size.
#[derive(Debug, Clone)]
pub struct StreamingDecoder {
    level: u32,
    arity: u32,
    /// Per depth `d` (1-based): 1-verdicts among completed depth-(d-1)
    /// sub-blocks of the currently open depth-d block.
    ones: Vec<u32>,
    /// Per depth `d`: completed depth-(d-1) sub-blocks in the open block.
    seen: Vec<u32>,
    fed: u64,
    block_len: u64,
    last: Option<Bit>,
}

impl StreamingDecoder {
    /// Creates a decoder for blocks of `arity^level` bits (`arity` odd ≥ 3).
    pub fn new(level: u32, arity: u32) -> Result<Self> {
        if arity < 3 || arity.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "streaming decoder arity must be odd and >= 3, got {arity}"
            )));
        }
        let block_len = checked_pow(arity as u64, level)?;
        Ok(StreamingDecoder {
            level,
            arity,
            ones: vec![0; level as usize],
            seen: vec![0; level as usize],
            fed: 0,
            block_len,
            last: None,
        })
    }

    /// Feeds one bit; returns the block verdict when this bit completes a
    /// full `arity^level` block (every `block_len` bits), else `None`.
    pub fn push(&mut self, bit: Bit) -> Option<Bit> {
        self.fed += 1;
        let mut verdict = bit;
        for d in 0..self.level as usize {
            self.ones[d] += u32::from(verdict);
            self.seen[d] += 1;
            if self.seen[d] < self.arity {
                return None;
            }
            verdict = u8::from(2 * self.ones[d] > self.arity);
            self.ones[d] = 0;
            self.seen[d] = 0;
        }
        self.last = Some(verdict);
        Some(verdict)
    }

    /// Verdict of the most recent completed block. Rejected while a block is
    /// still incomplete (in particular before `arity^level` bits were fed).
    pub fn finish(&self) -> Result<Bit> {
        if self.fed == 0 || !self.fed.is_multiple_of(self.block_len) {
            return Err(Error::InvalidParameter(format!(
                "streaming decoder fed {} of {} bits",
                self.fed % self.block_len,
                self.block_len
            )));
        }
        self.last.ok_or_else(|| Error::Internal("completed block left no verdict".into()))
    }

    /// Bits fed so far.
    pub fn fed(&self) -> u64 {
        self.fed
    }
}

/// Effective crossover probability after an `r`-fold repetition code on one
/// link: the exact probability that a majority of `r` independent
/// Bernoulli(`p`) flips occur, `P[Bin(r, p) >= (r+1)/2]`.
///
/// `r` must be odd (ties are impossible). Evaluated in log space, so it
/// stays finite and accurate for `r` up to at least `10^4`.
pub fn effective_crossover(p: CrossoverProb, r: u32) -> Result<f64> {
    if r == 0 || r.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "repetition count must be odd and >= 1, got {r}"
        )));
    }
    if p.get() == 0.0 {
        return Ok(0.0);
    }
    if r == 1 {
        return Ok(p.get());
    }
    Ok(analysis::binomial_tail_at_least(
        u64::from(r),
        u64::from(r + 1) / 2,
        p.get(),
    ))
}

/// Relay pass: replaces each `b^level` chunk of `stream` with `b^level`
/// copies of its recursive-majority verdict. No-op at level 0.
fn relay_process(stream: &mut [Bit], level: u32, arity: u32) {
    if level == 0 {
        return;
    }
    let block = (arity as usize).pow(level);
    debug_assert_eq!(stream.len() % block, 0);
    for chunk in stream.chunks_exact_mut(block) {
        let verdict = decode_block_unchecked(chunk, level, arity);
        chunk.fill(verdict);
    }
}

pub(crate) fn check_tapes(m: usize, p: CrossoverProb, tapes: &[NoiseTape]) -> Result<()> {
    if tapes.len() != m {
        return Err(Error::ConfigMismatch(format!(
            "need one noise tape per link: m = {m}, got {}",
            tapes.len()
        )));
    }
    for tape in tapes {
        if tape.p() != p {
            return Err(Error::ConfigMismatch(format!(
                "tape crossover probability {} differs from configured {}",
                tape.p(),
                p
            )));
        }
    }
    Ok(())
}

/// Runs one execution of the single-bit protocol over `m` hops.
///
/// Simulates the synchronous pipeline by logical content: the stream of
/// `B = b^L` logical bits is pushed link by link (each logical bit sent as
/// `r` raw repeats, majority-combined on arrival), with every relay applying
/// its level-block decode-and-re-emit in place. Delay fields follow from the
/// activation schedule: a level-`l` node starts forwarding `r·b^l` steps
/// after its predecessor, so
///
/// ```text
/// propagation_delay = r · Σ_{j=1..m-1} b^{level(j)}
/// transmission_delay = r · B
/// n_total = propagation_delay + transmission_delay
/// ```
///
/// (equivalence with literal time-stepping is exercised by the `stepwise`
/// audit engine's tests).
pub fn run_onebit(
    theta: Bit,
    m: usize,
    p: CrossoverProb,
    params: &OneBitParams,
    tapes: &mut [NoiseTape],
) -> Result<TrialResult> {
    run_onebit_instances(theta, m, p, params, 1, tapes)
}

/// Runs `⌈m^alpha⌉` chained instances of the protocol; the sink majority-votes
/// the instance verdicts (ties broken by the first verdict). Propagation
/// delay is paid once; transmission delay scales with the instance count.
pub fn run_onebit_chained(
    theta: Bit,
    m: usize,
    p: CrossoverProb,
    params: &OneBitParams,
    chain: &ChainParams,
    tapes: &mut [NoiseTape],
) -> Result<TrialResult> {
    let instances = chain.instances_for(m);
    run_onebit_instances(theta, m, p, params, instances, tapes)
}

fn run_onebit_instances(
    theta: Bit,
    m: usize,
    p: CrossoverProb,
    params: &OneBitParams,
    instances: u64,
    tapes: &mut [NoiseTape],
) -> Result<TrialResult> {
    if theta > 1 {
        return Err(Error::InvalidParameter(format!("theta must be binary, got {theta}")));
    }
    check_tapes(m, p, tapes)?;
    let schedule = LevelSchedule::new(m, params)?;
    let block = schedule.encoder_bits();
    let logical_len = block
        .checked_mul(instances)
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| Error::InvalidParameter("stream length exceeds the address space".into()))?;

    let mut stream = vec![theta; logical_len];
    for (j, tape) in tapes.iter_mut().enumerate() {
        transmit_stream(&mut stream, params.r, tape);
        let node = j + 1;
        if node < m {
            relay_process(&mut stream, schedule.level_of(node), params.b);
        }
    }

    // Sink: level-L decode per instance block, then a vote across instances.
    let mut verdicts = Vec::with_capacity(instances as usize);
    for chunk in stream.chunks_exact(block as usize) {
        verdicts.push(decode_block_unchecked(chunk, schedule.top_level(), params.b));
    }
    let estimate = majority_with_tiebreak(&verdicts);

    let r = u64::from(params.r);
    let transmission_delay = r * block * instances;
    let propagation_delay = r * schedule.propagation_logical(params);
    Ok(TrialResult {
        estimate: vec![estimate],
        correct: estimate == theta,
        transmission_delay,
        propagation_delay,
        n_total: transmission_delay + propagation_delay,
    })
}
