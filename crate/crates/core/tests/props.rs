//! Property suites over randomly generated inputs: structural invariants
//! that must hold for *every* input, complementing the example-based unit
//! tests in each module.

use proptest::prelude::*;

use infovel::analysis::binomial_tail_at_least;
use infovel::channel::{transmit, CrossoverProb, NoiseTape};
use infovel::hamming::BlockCode;
use infovel::multibit::{decode_message, encode_message, encode_plan, AnytimeEncoder, MultiBitParams};
use infovel::onebit::{decode_block, run_onebit, OneBitParams, StreamingDecoder};
use infovel::sim::{run_trials, wilson_interval, ProtocolSpec, SimConfig};
use infovel::stepwise::run_onebit_stepwise;
use infovel::Bit;

fn bits(len: usize) -> impl Strategy<Value = Vec<Bit>> {
    proptest::collection::vec(0u8..=1u8, len)
}

/// A decoder level together with a random block of the matching length.
fn leveled_block() -> impl Strategy<Value = (u32, Vec<Bit>)> {
    (1u32..=3).prop_flat_map(|level| (Just(level), bits(3usize.pow(level))))
}

fn tapes_for(m: usize, p: CrossoverProb, seed: u64, trial: u64) -> Vec<NoiseTape> {
    (0..m)
        .map(|j| NoiseTape::for_link(p, seed, trial, j as u64))
        .collect()
}

proptest! {
    #[test]
    fn transmit_is_an_involution(bit in 0u8..=1, flip in 0u8..=1) {
        prop_assert_eq!(transmit(transmit(bit, flip), flip), bit);
    }

    #[test]
    fn tapes_replay_identically(seed: u64, p in 0.0..0.5f64, n in 1usize..200) {
        let p = CrossoverProb::new(p).unwrap();
        let mut a = NoiseTape::from_seed(p, seed);
        let mut b = NoiseTape::from_seed(p, seed);
        for _ in 0..n {
            prop_assert_eq!(a.next_flip(), b.next_flip());
        }
        prop_assert_eq!(a.position(), n as u64);
    }

    #[test]
    fn streaming_decoder_equals_batch((level, block) in leveled_block()) {
        let batch = decode_block(&block, level, 3).unwrap();
        let mut decoder = StreamingDecoder::new(level, 3).unwrap();
        let mut emitted = None;
        for &bit in &block {
            if let Some(v) = decoder.push(bit) {
                emitted = Some(v);
            }
        }
        prop_assert_eq!(emitted, Some(batch));
    }

    #[test]
    fn reencoded_verdict_is_a_decode_fixed_point((level, block) in leveled_block()) {
        let verdict = decode_block(&block, level, 3).unwrap();
        let reencoded = vec![verdict; block.len()];
        prop_assert_eq!(decode_block(&reencoded, level, 3).unwrap(), verdict);
    }

    #[test]
    fn majority_decoding_is_complement_symmetric((level, block) in leveled_block()) {
        let verdict = decode_block(&block, level, 3).unwrap();
        let flipped: Vec<Bit> = block.iter().map(|&b| b ^ 1).collect();
        prop_assert_eq!(decode_block(&flipped, level, 3).unwrap(), verdict ^ 1);
    }

    #[test]
    fn block_code_roundtrips_and_corrects_one_block(
        (b, k_prime, data, block_pick, mask) in (2usize..=12, 1usize..=8).prop_flat_map(
            |(b, kp)| (Just(b), Just(kp), bits(b * kp), 0usize..64, bits(kp))
        )
    ) {
        let code = BlockCode::new(b, k_prime).unwrap();
        let encoded = code.encode(&data).unwrap();
        prop_assert_eq!(code.decode(&encoded).unwrap(), data.clone(), "clean roundtrip");

        let block = block_pick % code.total_blocks();
        let mut corrupted = encoded.clone();
        for (i, &flip) in mask.iter().enumerate() {
            corrupted[block * k_prime + i] ^= flip;
        }
        prop_assert_eq!(code.decode(&corrupted).unwrap(), data, "single-block corruption");
    }

    #[test]
    fn anytime_prefix_emission_never_changes(cut in 1usize..=48, message in bits(48)) {
        let params = MultiBitParams::default();
        let mut full = AnytimeEncoder::new(params.clone()).unwrap();
        let mut whole: Vec<Bit> = Vec::new();
        let mut at_cut = 0usize;
        for (i, &bit) in message.iter().enumerate() {
            whole.extend(full.push(bit).unwrap());
            if i + 1 == cut {
                at_cut = whole.len();
            }
        }
        let mut partial = AnytimeEncoder::new(params).unwrap();
        let mut prefix: Vec<Bit> = Vec::new();
        for &bit in &message[..cut] {
            prefix.extend(partial.push(bit).unwrap());
        }
        prop_assert_eq!(&whole[..at_cut], &prefix[..]);
    }

    #[test]
    fn encode_plan_structure_and_roundtrip(
        (k, l_prime, message) in (1usize..400, 0u32..=3).prop_flat_map(
            |(k, lp)| (Just(k), Just(lp), bits(k))
        )
    ) {
        let params = MultiBitParams::default();
        let (plan, dims) = encode_plan(k, l_prime, &params).unwrap();
        prop_assert!(plan.level >= l_prime);
        let k_l = dims.k_of(plan.level);
        prop_assert_eq!(plan.blocks * k_l, k + plan.pad);
        if plan.short_message {
            prop_assert_eq!(plan.blocks, 1);
            prop_assert_eq!(plan.level, l_prime);
        } else {
            prop_assert!(plan.pad < k_l, "only the final block is padded");
            prop_assert!(plan.blocks * k_l < 2 * k, "padding never doubles the stream");
        }

        let (stream, plan2) = encode_message(&message, l_prime, &params).unwrap();
        prop_assert_eq!(plan, plan2);
        prop_assert_eq!(stream.len(), plan.blocks * dims.n_of(plan.level));
        prop_assert_eq!(decode_message(&stream, k, l_prime, &params).unwrap(), message);
    }

    #[test]
    fn wilson_interval_straddles_the_estimate(
        (trials, errors) in (1u64..5000).prop_flat_map(|t| (Just(t), 0..=t))
    ) {
        let (lo, hi) = wilson_interval(errors, trials);
        let phat = errors as f64 / trials as f64;
        prop_assert!(0.0 <= lo && lo <= phat);
        prop_assert!(phat <= hi && hi <= 1.0);
    }

    #[test]
    fn binomial_tail_is_a_monotone_probability(
        n in 1u64..150, k in 0u64..160, p in 0.0..1.0f64
    ) {
        let tail = binomial_tail_at_least(n, k, p);
        prop_assert!((0.0..=1.0).contains(&tail));
        prop_assert!(binomial_tail_at_least(n, k + 1, p) <= tail + 1e-12, "decreasing in k");
        let bumped = (p + 0.07).min(1.0);
        prop_assert!(binomial_tail_at_least(n, k, bumped) >= tail - 1e-12, "increasing in p");
    }

    #[test]
    fn onebit_estimates_are_complement_symmetric(
        m in 1usize..40, p in 0.0..0.49f64, seed: u64, trial in 0u64..50
    ) {
        let p = CrossoverProb::new(p).unwrap();
        let params = OneBitParams::default();
        let mut tapes_zero = tapes_for(m, p, seed, trial);
        let mut tapes_one = tapes_zero.clone();
        let zero = run_onebit(0, m, p, &params, &mut tapes_zero).unwrap();
        let one = run_onebit(1, m, p, &params, &mut tapes_one).unwrap();
        prop_assert_eq!(zero.estimate[0] ^ one.estimate[0], 1);
        prop_assert_eq!(zero.correct, one.correct);
        prop_assert_eq!(zero.n_total, one.n_total);
    }
}

proptest! {
    // The simulation-level properties run whole executions per case; fewer
    // cases keep the suite fast while still exploring the space.
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn stepwise_execution_matches_the_logical_engine(
        m in 1usize..40, p in 0.0..0.45f64, theta in 0u8..=1, seed: u64
    ) {
        let p = CrossoverProb::new(p).unwrap();
        let params = OneBitParams::default();
        let mut tapes_logical = tapes_for(m, p, seed, 0);
        let mut tapes_stepped = tapes_logical.clone();
        let logical = run_onebit(theta, m, p, &params, &mut tapes_logical).unwrap();
        let stepped = run_onebit_stepwise(theta, m, p, &params, None, &mut tapes_stepped).unwrap();
        prop_assert_eq!(&stepped.result, &logical);
        prop_assert!(stepped.causality_ok);
        prop_assert_eq!(stepped.first_arrival, logical.propagation_delay);
    }

    #[test]
    fn run_trials_is_deterministic_across_worker_counts(
        m in 1usize..20, p in 0.0..0.3f64, trials in 1u64..20, jobs in 2usize..5, seed: u64
    ) {
        let template = SimConfig {
            protocol: ProtocolSpec::OneBit(OneBitParams::default()),
            m,
            k: 1,
            p: CrossoverProb::new(p).unwrap(),
            trials,
            master_seed: seed,
            jobs: 1,
        };
        let serial = run_trials(&template).unwrap();
        let mut parallel_cfg = template.clone();
        parallel_cfg.jobs = jobs;
        let parallel = run_trials(&parallel_cfg).unwrap();
        prop_assert_eq!(serial, parallel);
    }
}
