//! Block-level redundancy via bit-position-wise shortened Hamming coding.
//!
//! Given `b` data blocks of `k'` bits each, [`BlockCode::encode`] appends
//! `red(b)` redundancy blocks of `k'` bits such that [`BlockCode::decode`]
//! recovers the data exactly whenever **at most one whole block** (data or
//! redundancy) was modified arbitrarily. The construction applies a shortened
//! Hamming code independently at each of the `k'` bit positions: because all
//! errors live inside one block, each bit position sees at most one flipped
//! code bit, which the per-position syndrome locates.
//!
//! # Frozen layout (cross-version reproducibility)
//!
//! * Codeword positions are indexed `1 ..= 2^r - 1` with parity bits at the
//!   power-of-two positions `1, 2, 4, …, 2^(r-1)` (classical Hamming layout).
//! * The `b` real data blocks occupy the first `b` non-power-of-two positions
//!   in increasing order; the remaining non-power positions are virtual
//!   zero-padded data bits (`pad` of them) that are never transmitted and are
//!   re-inserted as zeros before syndrome computation.
//! * Output block order is systematic: the `b` data blocks unchanged, then
//!   the `r` parity blocks in position order `1, 2, 4, …`, then
//!   `red - r` all-zero dummy blocks.
//!
//! Parity bit at position `2^j` is the XOR of all other codeword positions
//! whose index has bit `j` set (even parity); the syndrome is the integer
//! whose bit `j` is the XOR over **all** positions with bit `j` set.

use crate::{Bit, Error, Result};

/// Number of Hamming parity bits needed for `b` data bits: the least `r`
/// with `b <= 2^r - r - 1`.
pub fn parity_block_count(b: usize) -> Result<usize> {
    if b < 2 {
        return Err(Error::InvalidParameter(format!(
            "block code needs at least 2 data blocks, got {b}"
        )));
    }
    let mut r = 2usize;
    while (1usize << r) - r - 1 < b {
        r += 1;
    }
    Ok(r)
}

/// Number of redundancy blocks appended for `b` data blocks:
/// `max(r, ceil(log2 b) + 1)` where `r` is [`parity_block_count`].
///
/// For every `b >= 3` this equals `ceil(log2 b) + 1`; when the parity count
/// falls short of that (e.g. `b = 9`, `b = 11`), all-zero dummy blocks fill
/// the gap. For `b = 2` the parity count dominates (`red = 3`): a single
/// XOR block would only *detect* a silent single-block corruption, not
/// locate it, so the general shortened-Hamming path is used there too.
pub fn redundancy_count(b: usize) -> Result<usize> {
    let r = parity_block_count(b)?;
    Ok(r.max(ceil_log2(b) + 1))
}

/// `ceil(log2 n)` for `n >= 1`.
pub(crate) fn ceil_log2(n: usize) -> usize {
    debug_assert!(n >= 1);
    (n.next_power_of_two()).trailing_zeros() as usize
}

/// A shortened Hamming block code over `b` data blocks of `k'` bits.
#[derive(Debug, Clone)]
pub struct BlockCode {
    b: usize,
    k_prime: usize,
    r_bits: usize,
    red: usize,
    pad: usize,
    /// Codeword position (1-based) of data block `i`.
    data_positions: Vec<usize>,
}

impl BlockCode {
    /// Builds the code for `b >= 2` data blocks of `k_prime >= 1` bits.
    pub fn new(b: usize, k_prime: usize) -> Result<Self> {
        if k_prime < 1 {
            return Err(Error::InvalidParameter(
                "block length k' must be at least 1".into(),
            ));
        }
        let r_bits = parity_block_count(b)?;
        let red = redundancy_count(b)?;
        let capacity = (1usize << r_bits) - r_bits - 1;
        let data_positions: Vec<usize> = (1..(1usize << r_bits))
            .filter(|pos| !pos.is_power_of_two())
            .take(b)
            .collect();
        debug_assert_eq!(data_positions.len(), b);
        Ok(BlockCode {
            b,
            k_prime,
            r_bits,
            red,
            pad: capacity - b,
            data_positions,
        })
    }

    /// Number of data blocks.
    pub fn b(&self) -> usize {
        self.b
    }

    /// Bits per block.
    pub fn k_prime(&self) -> usize {
        self.k_prime
    }

    /// Hamming parity-bit count (= parity blocks actually carrying parity).
    pub fn r_bits(&self) -> usize {
        self.r_bits
    }

    /// Redundancy blocks appended (parity blocks plus dummies).
    pub fn red(&self) -> usize {
        self.red
    }

    /// Virtual zero-padded data bits per bit position.
    pub fn pad(&self) -> usize {
        self.pad
    }

    /// Total blocks in a codeword: `b + red`.
    pub fn total_blocks(&self) -> usize {
        self.b + self.red
    }

    /// Encodes `b` blocks (flat, block-major: block 0's bits first) into
    /// `b + red` blocks. Systematic: the input is copied through unchanged.
    pub fn encode(&self, data: &[Bit]) -> Result<Vec<Bit>> {
        let expected = self.b * self.k_prime;
        if data.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: data.len(),
            });
        }
        let mut out = vec![0u8; self.total_blocks() * self.k_prime];
        out[..expected].copy_from_slice(data);
        let size = 1usize << self.r_bits;
        let mut code = vec![0u8; size];
        for j in 0..self.k_prime {
            // Assemble the virtual codeword for bit position j.
            code.iter_mut().for_each(|c| *c = 0);
            for (i, &pos) in self.data_positions.iter().enumerate() {
                code[pos] = data[i * self.k_prime + j];
            }
            for jbit in 0..self.r_bits {
                let ppos = 1usize << jbit;
                let mut parity = 0u8;
                for (pos, &c) in code.iter().enumerate().skip(1) {
                    if pos != ppos && pos & ppos != 0 {
                        parity ^= c;
                    }
                }
                out[(self.b + jbit) * self.k_prime + j] = parity;
            }
            // Dummy blocks (indices b + r_bits .. b + red) stay all-zero.
        }
        Ok(out)
    }

    /// Decodes `b + red` received blocks back into the `b` data blocks,
    /// correcting at most one arbitrarily modified block.
    ///
    /// With two or more corrupted blocks the output may be silently wrong;
    /// callers account for that probabilistically.
    pub fn decode(&self, received: &[Bit]) -> Result<Vec<Bit>> {
        let expected = self.total_blocks() * self.k_prime;
        if received.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: received.len(),
            });
        }
        let mut out = vec![0u8; self.b * self.k_prime];
        let size = 1usize << self.r_bits;
        let mut code = vec![0u8; size];
        for j in 0..self.k_prime {
            // Re-assemble the codeword (pads re-inserted as zeros).
            code.iter_mut().for_each(|c| *c = 0);
            for (i, &pos) in self.data_positions.iter().enumerate() {
                code[pos] = received[i * self.k_prime + j];
            }
            for jbit in 0..self.r_bits {
                code[1 << jbit] = received[(self.b + jbit) * self.k_prime + j];
            }
            let mut syndrome = 0usize;
            for jbit in 0..self.r_bits {
                let ppos = 1usize << jbit;
                let mut parity = 0u8;
                for (pos, &c) in code.iter().enumerate().skip(1) {
                    if pos & ppos != 0 {
                        parity ^= c;
                    }
                }
                if parity == 1 {
                    syndrome |= ppos;
                }
            }
            if syndrome != 0 {
                // At most one code bit is wrong per position; the syndrome is
                // its location. (A syndrome pointing at a virtual pad bit can
                // only arise from >= 2 corrupted blocks; the flip is then
                // vacuous, matching the silent-failure contract.)
                code[syndrome] ^= 1;
            }
            for (i, &pos) in self.data_positions.iter().enumerate() {
                out[i * self.k_prime + j] = code[pos];
            }
        }
        Ok(out)
    }
}
