//! Multi-bit relay protocol: recursive block coding over the chain.
//!
//! A `k`-bit message is protected by nested levels of the
//! [`hamming`](crate::hamming) block code: a level-`l` codeword consists of
//! `b_l + red(b_l)` level-`(l-1)` codewords, where the redundancy blocks are
//! computed over the *raw* `k_{l-1}`-bit blocks before the lower-level
//! encoding is applied. Relay nodes are assigned levels by divisibility of
//! their index by `t_1·t_2⋯t_l`; a level-`l` relay repeatedly buffers `n_l`
//! bits, decodes them to `k_l` message bits, re-encodes, and forwards — so
//! low levels clean up frequent small errors and sparse high levels remove
//! the residue.
//!
//! The level sequences default to `t_l = (l+2)²`, `b_l = ⌊(l+2)²/4⌋`, and can
//! be overridden per level (used by the low-noise `t_1` tuning).
//!
//! [`AnytimeEncoder`] provides the streaming variant: message bits are
//! emitted immediately and redundancy blocks are appended exactly when a
//! level group completes, never modifying earlier output; after `k_l` message
//! bits its emission equals [`encode_level`] verbatim.

use crate::channel::{transmit_stream, CrossoverProb, NoiseTape};
use crate::hamming::{redundancy_count, BlockCode};
use crate::onebit::check_tapes;
use crate::{Bit, Error, Result, TrialResult};

/// Level sequences `b_l`, `t_l` and the link repetition count `r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiBitParams {
    /// Per-level overrides for `b_l` starting at level 1; levels beyond the
    /// vector follow the default rule.
    b_overrides: Vec<usize>,
    /// Per-level overrides for `t_l` starting at level 1.
    t_overrides: Vec<u64>,
    r: u32,
}

impl Default for MultiBitParams {
    /// The reference sequences `t_l = (l+2)²`, `b_l = ⌊(l+2)²/4⌋`, `r = 1`
    /// (so `t_1 = 9, b_1 = 2, t_2 = 16, b_2 = 4, …`).
    fn default() -> Self {
        MultiBitParams {
            b_overrides: Vec::new(),
            t_overrides: Vec::new(),
            r: 1,
        }
    }
}

impl MultiBitParams {
    /// Builds params with explicit overrides for the first levels; pass empty
    /// vectors to keep the default rule throughout. Validates `b_l >= 2`,
    /// `t_l >= 2`, `2·b_l <= t_l` (the sufficient-condition ratio), and odd
    /// `r >= 1`.
    pub fn new(b_overrides: Vec<usize>, t_overrides: Vec<u64>, r: u32) -> Result<Self> {
        if r < 1 || r.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "repetition count r must be odd and >= 1, got {r}"
            )));
        }
        let params = MultiBitParams {
            b_overrides,
            t_overrides,
            r,
        };
        let horizon = params.b_overrides.len().max(params.t_overrides.len()) as u32;
        for l in 1..=horizon.max(1) {
            let b = params.b_of(l);
            let t = params.t_of(l);
            if b < 2 {
                return Err(Error::InvalidParameter(format!(
                    "data-block count b_{l} must be >= 2, got {b}"
                )));
            }
            if (2 * b) as u64 > t {
                return Err(Error::InvalidParameter(format!(
                    "need b_l/t_l <= 1/2, violated at level {l}: b = {b}, t = {t}"
                )));
            }
        }
        Ok(params)
    }

    /// Default sequences with only `t_1` overridden (low-noise tuning).
    pub fn with_t1(t1: u64, r: u32) -> Result<Self> {
        Self::new(Vec::new(), vec![t1], r)
    }

    /// Data-block count at level `l >= 1`.
    pub fn b_of(&self, l: u32) -> usize {
        let idx = (l - 1) as usize;
        self.b_overrides
            .get(idx)
            .copied()
            .unwrap_or_else(|| ((l as usize + 2) * (l as usize + 2)) / 4)
    }

    /// Relay spacing factor at level `l >= 1`.
    pub fn t_of(&self, l: u32) -> u64 {
        let idx = (l - 1) as usize;
        self.t_overrides
            .get(idx)
            .copied()
            .unwrap_or_else(|| (u64::from(l) + 2) * (u64::from(l) + 2))
    }

    /// Per-link repetition count.
    pub fn r(&self) -> u32 {
        self.r
    }
}

/// Message and codeword lengths per level, with the block codes cached.
///
/// `k_0 = n_0 = 1`; `k_l = ∏ b_i`; `n_l = ∏ (b_i + red(b_i))`.
#[derive(Debug, Clone)]
pub struct LevelDims {
    k: Vec<usize>,
    n: Vec<usize>,
    /// `codes[l-1]` protects level `l`: `BlockCode::new(b_l, k_{l-1})`.
    codes: Vec<BlockCode>,
}

impl LevelDims {
    /// Builds dimensions for levels `0..=max_level`.
    pub fn up_to(params: &MultiBitParams, max_level: u32) -> Result<Self> {
        let mut dims = LevelDims {
            k: vec![1],
            n: vec![1],
            codes: Vec::new(),
        };
        for l in 1..=max_level {
            dims.grow(params, l)?;
        }
        Ok(dims)
    }

    fn grow(&mut self, params: &MultiBitParams, l: u32) -> Result<()> {
        debug_assert_eq!(self.k.len(), l as usize);
        let b = params.b_of(l);
        let red = redundancy_count(b)?;
        let k_prev = self.k[l as usize - 1];
        let n_prev = self.n[l as usize - 1];
        let k_l = k_prev.checked_mul(b);
        let n_l = n_prev.checked_mul(b + red);
        match (k_l, n_l) {
            (Some(k_l), Some(n_l)) => {
                self.k.push(k_l);
                self.n.push(n_l);
                self.codes.push(BlockCode::new(b, k_prev)?);
                Ok(())
            }
            _ => Err(Error::InvalidParameter(format!(
                "level-{l} dimensions exceed the address space"
            ))),
        }
    }

    /// Highest level with dimensions available.
    pub fn max_level(&self) -> u32 {
        (self.k.len() - 1) as u32
    }

    /// Message bits per level-`l` codeword.
    pub fn k_of(&self, l: u32) -> usize {
        self.k[l as usize]
    }

    /// Encoded bits per level-`l` codeword.
    pub fn n_of(&self, l: u32) -> usize {
        self.n[l as usize]
    }

    fn code(&self, l: u32) -> &BlockCode {
        &self.codes[l as usize - 1]
    }
}

/// Level of relay node `j`: the largest `l` with `t_1·t_2⋯t_l | j`, else 0.
pub fn node_level_multibit(j: usize, params: &MultiBitParams) -> u32 {
    debug_assert!(j >= 1);
    let j = j as u64;
    let mut level = 0u32;
    let mut prod = 1u64;
    loop {
        let next = match prod.checked_mul(params.t_of(level + 1)) {
            Some(p) if p <= j => p,
            _ => return level,
        };
        if !j.is_multiple_of(next) {
            return level;
        }
        prod = next;
        level += 1;
    }
}

/// Relay level assignment for a chain of `m` hops.
#[derive(Debug, Clone)]
pub struct MultiBitSchedule {
    m: usize,
    /// `node_levels[j]` for `1 <= j <= m-1` (entry 0 unused).
    node_levels: Vec<u32>,
    l_prime: u32,
}

impl MultiBitSchedule {
    /// Builds the schedule for `m >= 1` hops.
    pub fn new(m: usize, params: &MultiBitParams) -> Result<Self> {
        if m < 1 {
            return Err(Error::InvalidParameter("hop count m must be >= 1".into()));
        }
        let mut node_levels = vec![0u32; m.max(1)];
        let mut l_prime = 0;
        for (j, slot) in node_levels.iter_mut().enumerate().skip(1) {
            *slot = node_level_multibit(j, params);
            l_prime = l_prime.max(*slot);
        }
        Ok(MultiBitSchedule {
            m,
            node_levels,
            l_prime,
        })
    }

    /// Number of hops.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Level of relay `j` (`1 <= j <= m-1`).
    pub fn level_of(&self, j: usize) -> u32 {
        debug_assert!(j >= 1 && j < self.m);
        self.node_levels[j]
    }

    /// Maximum relay level `L'` on this chain (0 when there are no relays).
    pub fn l_prime(&self) -> u32 {
        self.l_prime
    }

    /// Number of relays with level at least `l` (`l >= 1`).
    pub fn count_at_least(&self, l: u32) -> u64 {
        self.node_levels.iter().skip(1).filter(|&&lv| lv >= l).count() as u64
    }

    /// Sum of `n_{level(j)}` over relays: the logical propagation lag.
    pub fn propagation_logical(&self, dims: &LevelDims) -> u64 {
        self.node_levels
            .iter()
            .skip(1)
            .map(|&lv| dims.n_of(lv) as u64)
            .sum()
    }
}

/// Encodes a `k_l`-bit message into an `n_l`-bit level-`l` codeword.
///
/// Recursion: split into `b_l` raw blocks of `k_{l-1}` bits, append
/// `red(b_l)` redundancy blocks over those raw blocks, then level-`(l-1)`
/// encode every block. Level 0 is the identity on one bit.
pub fn encode_level(message: &[Bit], level: u32, params: &MultiBitParams) -> Result<Vec<Bit>> {
    let dims = LevelDims::up_to(params, level)?;
    if message.len() != dims.k_of(level) {
        return Err(Error::LengthMismatch {
            expected: dims.k_of(level),
            got: message.len(),
        });
    }
    encode_level_with(message, level, &dims)
}

pub(crate) fn encode_level_with(
    message: &[Bit],
    level: u32,
    dims: &LevelDims,
) -> Result<Vec<Bit>> {
    if level == 0 {
        return Ok(message.to_vec());
    }
    let with_redundancy = dims.code(level).encode(message)?;
    let k_prev = dims.k_of(level - 1);
    let mut out = Vec::with_capacity(dims.n_of(level));
    for block in with_redundancy.chunks_exact(k_prev) {
        out.extend(encode_level_with(block, level - 1, dims)?);
    }
    Ok(out)
}

/// Decodes an `n_l`-bit level-`l` codeword back to `k_l` message bits,
/// tolerating one corrupted level-`(l-1)` sub-block per recursion stage.
pub fn decode_level(bits: &[Bit], level: u32, params: &MultiBitParams) -> Result<Vec<Bit>> {
    let dims = LevelDims::up_to(params, level)?;
    if bits.len() != dims.n_of(level) {
        return Err(Error::LengthMismatch {
            expected: dims.n_of(level),
            got: bits.len(),
        });
    }
    decode_level_with(bits, level, &dims)
}

pub(crate) fn decode_level_with(bits: &[Bit], level: u32, dims: &LevelDims) -> Result<Vec<Bit>> {
    if level == 0 {
        return Ok(bits.to_vec());
    }
    let n_prev = dims.n_of(level - 1);
    let mut decoded_blocks = Vec::with_capacity(bits.len() / n_prev * dims.k_of(level - 1));
    for block in bits.chunks_exact(n_prev) {
        decoded_blocks.extend(decode_level_with(block, level - 1, dims)?);
    }
    dims.code(level).decode(&decoded_blocks)
}

/// How a `k`-bit message maps onto codewords.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodePlan {
    /// Codeword level actually emitted (and used by the sink's decoder).
    pub level: u32,
    /// Number of codewords.
    pub blocks: usize,
    /// Zero bits appended to the message before encoding.
    pub pad: usize,
    /// True when the message was short enough to ride a single level-`L'`
    /// codeword (`k <= k_{L'}`); false for the multi-block long-message case.
    pub short_message: bool,
}

/// Computes the encode plan for a `k`-bit message on a chain whose maximum
/// relay level is `l_prime`.
///
/// * `k <= k_{L'}`: zero-pad to `k_{L'}` and emit one level-`L'` codeword, so
///   every relay sees whole codewords of its own level.
/// * `k > k_{L'}`: choose `L` with `k_L <= k < k_{L+1}` and emit
///   `⌈k/k_L⌉` level-`L` codewords, zero-padding only the final one. Padding
///   less than doubles the stream: `⌈k/k_L⌉·k_L < 2k`.
///
/// The emitted level equals `max(L, L')`, the level the sink decodes at.
pub fn encode_plan(
    k: usize,
    l_prime: u32,
    params: &MultiBitParams,
) -> Result<(EncodePlan, LevelDims)> {
    if k < 1 {
        return Err(Error::InvalidParameter("message length k must be >= 1".into()));
    }
    let mut dims = LevelDims::up_to(params, l_prime)?;
    if k <= dims.k_of(l_prime) {
        let plan = EncodePlan {
            level: l_prime,
            blocks: 1,
            pad: dims.k_of(l_prime) - k,
            short_message: true,
        };
        return Ok((plan, dims));
    }
    // Long message: grow dims until k_{L+1} exceeds k; L is the last level
    // with k_L <= k.
    let mut level = l_prime;
    loop {
        if dims.max_level() == level {
            dims.grow(params, level + 1)?;
        }
        if dims.k_of(level + 1) > k {
            break;
        }
        level += 1;
    }
    let k_l = dims.k_of(level);
    let blocks = k.div_ceil(k_l);
    let plan = EncodePlan {
        level,
        blocks,
        pad: blocks * k_l - k,
        short_message: false,
    };
    Ok((plan, dims))
}

/// Encodes a message for a chain with maximum relay level `l_prime`,
/// returning the emitted bit stream and the plan metadata.
pub fn encode_message(
    message: &[Bit],
    l_prime: u32,
    params: &MultiBitParams,
) -> Result<(Vec<Bit>, EncodePlan)> {
    let (plan, dims) = encode_plan(message.len(), l_prime, params)?;
    let k_l = dims.k_of(plan.level);
    let mut padded = message.to_vec();
    padded.resize(plan.blocks * k_l, 0);
    let mut stream = Vec::with_capacity(plan.blocks * dims.n_of(plan.level));
    for block in padded.chunks_exact(k_l) {
        stream.extend(encode_level_with(block, plan.level, &dims)?);
    }
    Ok((stream, plan))
}

/// Inverse of [`encode_message`]: decodes the sink's received stream back to
/// `k` message bits. `k`, `m`, and the params are shared protocol
/// configuration, so the plan (and thus the pad layout) is recomputed rather
/// than signaled in-band.
pub fn decode_message(
    stream: &[Bit],
    k: usize,
    l_prime: u32,
    params: &MultiBitParams,
) -> Result<Vec<Bit>> {
    let (plan, dims) = encode_plan(k, l_prime, params)?;
    let n_l = dims.n_of(plan.level);
    let expected = plan.blocks * n_l;
    if stream.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            got: stream.len(),
        });
    }
    let mut message = Vec::with_capacity(plan.blocks * dims.k_of(plan.level));
    for block in stream.chunks_exact(n_l) {
        message.extend(decode_level_with(block, plan.level, &dims)?);
    }
    message.truncate(k);
    Ok(message)
}

/// Runs one execution of the multi-bit protocol over `m` hops.
///
/// Hop-by-hop logical simulation, like the single-bit engine: the encoded
/// stream crosses each link (with `r`-fold repetition per logical bit), and
/// each level-`l` relay replaces every `n_l` chunk by its decode-re-encode.
/// Relay input and output block lengths are equal, so the synchronous
/// pipeline adds `r·n_{level(j)}` activation lag per relay:
///
/// ```text
/// transmission_delay = r · blocks · n_level
/// propagation_delay  = r · Σ_{j=1..m-1} n_{level(j)}
/// n_total            = transmission_delay + propagation_delay
/// ```
pub fn run_multibit(
    message: &[Bit],
    m: usize,
    p: CrossoverProb,
    params: &MultiBitParams,
    tapes: &mut [NoiseTape],
) -> Result<TrialResult> {
    if message.iter().any(|&b| b > 1) {
        return Err(Error::InvalidParameter("message must be binary".into()));
    }
    check_tapes(m, p, tapes)?;
    let schedule = MultiBitSchedule::new(m, params)?;
    let (mut stream, plan) = encode_message(message, schedule.l_prime(), params)?;
    let dims = LevelDims::up_to(params, plan.level)?;

    for (j, tape) in tapes.iter_mut().enumerate() {
        transmit_stream(&mut stream, params.r(), tape);
        let node = j + 1;
        if node < m {
            let level = schedule.level_of(node);
            if level > 0 {
                let n_l = dims.n_of(level);
                debug_assert_eq!(stream.len() % n_l, 0);
                for chunk in stream.chunks_exact_mut(n_l) {
                    let decoded = decode_level_with(chunk, level, &dims)?;
                    let reencoded = encode_level_with(&decoded, level, &dims)?;
                    chunk.copy_from_slice(&reencoded);
                }
            }
        }
    }

    let estimate = decode_message(&stream, message.len(), schedule.l_prime(), params)?;
    let r = u64::from(params.r());
    let transmission_delay = r * stream.len() as u64;
    let propagation_delay = r * schedule.propagation_logical(&dims);
    Ok(TrialResult {
        correct: estimate == message,
        estimate,
        transmission_delay,
        propagation_delay,
        n_total: transmission_delay + propagation_delay,
    })
}

/// Append-only streaming encoder.
///
/// Each message bit is emitted immediately. Whenever the running message
/// length `mc` becomes a multiple of `k_l` (checked for `l = 1` upward,
/// stopping at the first level that does not divide), the level-`l`
/// redundancy blocks over the just-completed `k_l`-bit group are emitted,
/// each block level-`(l-1)` encoded — innermost level first, matching the
/// recursive encoder's layout. Emitted bits are never modified, so the
/// emission for any prefix of the message is a prefix of the emission for
/// the full message, and after exactly `k_l` message bits the emission
/// equals [`encode_level`].
#[derive(Debug, Clone)]
pub struct AnytimeEncoder {
    params: MultiBitParams,
    dims: LevelDims,
    message: Vec<Bit>,
    emitted: usize,
}

impl AnytimeEncoder {
    /// Creates an encoder with empty stream state.
    pub fn new(params: MultiBitParams) -> Result<Self> {
        let dims = LevelDims::up_to(&params, 1)?;
        Ok(AnytimeEncoder {
            params,
            dims,
            message: Vec::new(),
            emitted: 0,
        })
    }

    /// Message bits consumed so far.
    pub fn bits_in(&self) -> usize {
        self.message.len()
    }

    /// Stream bits emitted so far.
    pub fn bits_out(&self) -> usize {
        self.emitted
    }

    /// Feeds the next message bit; returns the bits to append to the stream.
    pub fn push(&mut self, bit: Bit) -> Result<Vec<Bit>> {
        if bit > 1 {
            return Err(Error::InvalidParameter(format!("message bit must be binary, got {bit}")));
        }
        self.message.push(bit);
        let mc = self.message.len();
        let mut out = vec![bit];
        let mut level = 1u32;
        loop {
            if self.dims.max_level() < level {
                self.dims.grow(&self.params, level)?;
            }
            let k_l = self.dims.k_of(level);
            if !mc.is_multiple_of(k_l) {
                break;
            }
            // Redundancy over the just-completed k_l-bit group: parity blocks
            // of the raw k_{l-1} sub-blocks, each level-(l-1) encoded.
            let group = &self.message[mc - k_l..];
            let with_redundancy = self.dims.code(level).encode(group)?;
            let k_prev = self.dims.k_of(level - 1);
            let b_l = self.params.b_of(level);
            for block in with_redundancy.chunks_exact(k_prev).skip(b_l) {
                out.extend(encode_level_with(block, level - 1, &self.dims)?);
            }
            level += 1;
        }
        self.emitted += out.len();
        Ok(out)
    }
}
