//! Binary symmetric channel substrate.
//!
//! Every hop of the relay chain is a BSC(`p`): the receiver sees the sent bit
//! XOR an independent Bernoulli(`p`) flip indicator. To make every simulation
//! replayable, flips are not drawn from shared global state but from a
//! [`NoiseTape`] — a deterministic per-(trial, link) stream.
//!
//! # Reproducibility contract
//!
//! The stream for `(master_seed, trial, link)` is generated by
//! [`ChaCha8Rng`](rand_chacha::ChaCha8Rng) (pinned via `rand_chacha` 0.3,
//! `rand` 0.8) seeded with [`stream_seed`], a fixed two-stage SplitMix64-style
//! mix documented there. Changing any of the three inputs yields a
//! statistically independent stream; equal inputs always reproduce the
//! identical flip sequence, bit for bit, regardless of thread count or
//! platform.

use crate::{Bit, Error, Result};
use rand::distributions::{Bernoulli, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Crossover probability of a binary symmetric channel.
///
/// Valid range is `0 <= p < 1/2`. Zero is allowed for noiseless sanity runs;
/// `p >= 1/2` is rejected at construction because the channel then carries no
/// usable information and the protocols are undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossoverProb(f64);

impl CrossoverProb {
    /// Validates and wraps a crossover probability.
    pub fn new(p: f64) -> Result<Self> {
        if p.is_finite() && (0.0..0.5).contains(&p) {
            Ok(CrossoverProb(p))
        } else {
            Err(Error::InvalidProbability(p))
        }
    }

    /// The raw probability value.
    pub fn get(self) -> f64 {
        self.0
    }
}

impl std::fmt::Display for CrossoverProb {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Sentinel link id selecting the per-trial *message* stream — the stream the
/// simulator draws Θ (and multi-bit messages) from. It is not a physical hop;
/// physical links use ids `0..m`.
pub const MESSAGE_STREAM: u64 = u64::MAX;

/// 64-bit golden-ratio increment used by the seed mix.
const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer (Stafford variant 13): a fixed 64-bit bijection with
/// strong avalanche behavior. Part of the reproducibility contract.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the RNG seed for one `(master_seed, trial, link)` stream.
///
/// Defined exactly as
///
/// ```text
/// stage1 = mix64(master_seed + GOLDEN * (trial + 1))
/// seed   = mix64(stage1      + GOLDEN * (link  + 1))
/// ```
///
/// with wrapping 64-bit arithmetic and `GOLDEN = 0x9E3779B97F4A7C15`. The
/// `+1` offsets keep trial 0 / link 0 away from the identity multiplier. For
/// the [`MESSAGE_STREAM`] sentinel (`u64::MAX`) the link multiplier wraps to
/// zero; physical link ids are always `< m`, so the sentinel can never
/// collide with a real link.
pub fn stream_seed(master_seed: u64, trial: u64, link: u64) -> u64 {
    let stage1 = mix64(master_seed.wrapping_add(GOLDEN.wrapping_mul(trial.wrapping_add(1))));
    mix64(stage1.wrapping_add(GOLDEN.wrapping_mul(link.wrapping_add(1))))
}

/// Deterministic flip-indicator stream for one link within one trial.
///
/// Draw `k` means "the `k`-th meaningful raw bit sent over this link": idle
/// steps before a node activates consume no tape, so any two execution
/// engines that send the same raw bits over a link in the same order see the
/// same flips. A tape is owned by exactly one trial execution at a time.
#[derive(Debug, Clone)]
pub struct NoiseTape {
    p: CrossoverProb,
    seed: u64,
    rng: ChaCha8Rng,
    dist: Bernoulli,
    position: u64,
}

impl NoiseTape {
    /// Builds the tape for a `(master_seed, trial, link)` triple.
    pub fn for_link(p: CrossoverProb, master_seed: u64, trial: u64, link: u64) -> Self {
        Self::from_seed(p, stream_seed(master_seed, trial, link))
    }

    /// Builds a tape from an already-derived stream seed.
    pub fn from_seed(p: CrossoverProb, seed: u64) -> Self {
        NoiseTape {
            p,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            dist: Bernoulli::new(p.get()).expect("p < 1/2 validated by CrossoverProb"),
            position: 0,
        }
    }

    /// Returns the next flip indicator: 1 with probability `p`, else 0.
    #[inline]
    pub fn next_flip(&mut self) -> Bit {
        self.position += 1;
        self.dist.sample(&mut self.rng) as Bit
    }

    /// Number of flips drawn so far (= meaningful raw bits sent on the link).
    pub fn position(&self) -> u64 {
        self.position
    }

    /// The channel's crossover probability.
    pub fn p(&self) -> CrossoverProb {
        self.p
    }

    /// The derived stream seed (recorded in reports for replay).
    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Sends one bit through a BSC realization: `bit XOR flip`.
#[inline]
pub fn transmit(bit: Bit, flip: Bit) -> Bit {
    debug_assert!(bit <= 1 && flip <= 1, "arguments must be binary");
    bit ^ flip
}

/// Sends every logical bit of `bits` across one link as `reps` raw repeats
/// and replaces it in place with the receiver's majority vote over the noisy
/// copies.
///
/// For odd `reps` the majority of `bit XOR flip_i` equals
/// `bit XOR majority(flip_i)`, so the logical bit flips exactly when more
/// than half of the raw transmissions flip. Consumes `bits.len() * reps`
/// tape draws; `reps` must be odd (validated by the protocol parameter
/// types).
pub fn transmit_stream(bits: &mut [Bit], reps: u32, tape: &mut NoiseTape) {
    debug_assert!(reps % 2 == 1, "repetition count must be odd");
    for bit in bits.iter_mut() {
        let mut flips = 0u32;
        for _ in 0..reps {
            flips += u32::from(tape.next_flip());
        }
        if 2 * flips > reps {
            *bit ^= 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: f64) -> CrossoverProb {
        CrossoverProb::new(v).unwrap()
    }

    #[test]
    fn crossover_prob_accepts_half_open_range() {
        assert!(CrossoverProb::new(0.0).is_ok());
        assert!(CrossoverProb::new(0.25).is_ok());
        assert!(CrossoverProb::new(0.499_999).is_ok());
        assert!(matches!(
            CrossoverProb::new(0.5),
            Err(Error::InvalidProbability(_))
        ));
        assert!(CrossoverProb::new(-0.01).is_err());
        assert!(CrossoverProb::new(1.0).is_err());
        assert!(CrossoverProb::new(f64::NAN).is_err());
        assert!(CrossoverProb::new(f64::INFINITY).is_err());
    }

    #[test]
    fn transmit_is_xor() {
        assert_eq!(transmit(0, 0), 0);
        assert_eq!(transmit(0, 1), 1);
        assert_eq!(transmit(1, 0), 1);
        assert_eq!(transmit(1, 1), 0);
    }

    #[test]
    fn transmit_is_an_involution() {
        for bit in [0, 1] {
            for flip in [0, 1] {
                assert_eq!(transmit(transmit(bit, flip), flip), bit);
            }
        }
    }

    #[test]
    fn zero_probability_never_flips() {
        let mut tape = NoiseTape::for_link(p(0.0), 7, 0, 0);
        for _ in 0..1000 {
            assert_eq!(tape.next_flip(), 0);
        }
        assert_eq!(tape.position(), 1000);
    }

    #[test]
    fn identical_seeds_replay_identical_streams() {
        let mut a = NoiseTape::for_link(p(0.3), 42, 5, 2);
        let mut b = NoiseTape::for_link(p(0.3), 42, 5, 2);
        let xs: Vec<Bit> = (0..1000).map(|_| a.next_flip()).collect();
        let ys: Vec<Bit> = (0..1000).map(|_| b.next_flip()).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn distinct_links_and_trials_give_distinct_streams() {
        let draws = |trial, link| {
            let mut t = NoiseTape::for_link(p(0.3), 42, trial, link);
            (0..256).map(|_| t.next_flip()).collect::<Vec<_>>()
        };
        assert_ne!(draws(0, 0), draws(0, 1));
        assert_ne!(draws(0, 0), draws(1, 0));
        assert_ne!(draws(0, 1), draws(1, 0));
    }

    #[test]
    fn message_stream_sentinel_is_distinct_from_physical_links() {
        let sentinel = stream_seed(42, 0, MESSAGE_STREAM);
        for link in 0..4096 {
            assert_ne!(sentinel, stream_seed(42, 0, link));
        }
    }

    #[test]
    fn empirical_mean_matches_p_at_quarter() {
        // Binomial CLT: mean over 10^6 draws lies within 3 standard errors.
        let n = 1_000_000u64;
        let mut tape = NoiseTape::for_link(p(0.25), 99, 0, 0);
        let ones: u64 = (0..n).map(|_| u64::from(tape.next_flip())).sum();
        let mean = ones as f64 / n as f64;
        let tol = 3.0 * (0.25 * 0.75 / n as f64).sqrt();
        assert!(
            (mean - 0.25).abs() <= tol,
            "mean {mean} outside 0.25 +/- {tol}"
        );
    }

    #[test]
    fn paired_links_are_uncorrelated() {
        // Sample correlation of 10^5 paired flips from two links of the same
        // trial must vanish to within +/- 0.01 (about 3 standard errors).
        let n = 100_000usize;
        let mut a = NoiseTape::for_link(p(0.25), 42, 0, 0);
        let mut b = NoiseTape::for_link(p(0.25), 42, 0, 1);
        let (mut sx, mut sy, mut sxy) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..n {
            let x = f64::from(a.next_flip());
            let y = f64::from(b.next_flip());
            sx += x;
            sy += y;
            sxy += x * y;
        }
        let (mx, my) = (sx / n as f64, sy / n as f64);
        let cov = sxy / n as f64 - mx * my;
        let corr = cov / ((mx * (1.0 - mx)).sqrt() * (my * (1.0 - my)).sqrt());
        assert!(corr.abs() <= 0.01, "sample correlation {corr} too large");
    }

    #[test]
    fn stream_transmission_matches_per_bit_majority_oracle() {
        let prob = p(0.45);
        let mut tape = NoiseTape::for_link(prob, 7, 3, 1);
        let mut oracle_tape = NoiseTape::for_link(prob, 7, 3, 1);
        let reps = 5u32;
        let original: Vec<Bit> = (0..64).map(|i| (i % 2) as Bit).collect();

        let mut bits = original.clone();
        transmit_stream(&mut bits, reps, &mut tape);

        // Reference: send each bit reps times, majority-vote the received
        // copies directly.
        let expected: Vec<Bit> = original
            .iter()
            .map(|&bit| {
                let mut ones = 0u32;
                for _ in 0..reps {
                    ones += u32::from(transmit(bit, oracle_tape.next_flip()));
                }
                u8::from(2 * ones > reps)
            })
            .collect();

        assert_eq!(bits, expected);
        assert_eq!(tape.position(), 64 * u64::from(reps));
        assert_eq!(tape.position(), oracle_tape.position());
    }

    #[test]
    fn single_repetition_stream_is_plain_xor() {
        let prob = p(0.3);
        let mut tape = NoiseTape::for_link(prob, 11, 0, 4);
        let mut flip_tape = NoiseTape::for_link(prob, 11, 0, 4);
        let original: Vec<Bit> = vec![1, 0, 1, 1, 0, 0, 1, 0];
        let mut bits = original.clone();
        transmit_stream(&mut bits, 1, &mut tape);
        for (i, &b) in bits.iter().enumerate() {
            assert_eq!(b, transmit(original[i], flip_tape.next_flip()));
        }
    }
}
