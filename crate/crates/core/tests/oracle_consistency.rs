mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use zdlab::divisor::{
    classify_left_zd, classify_right_zd, oracle_annihilator, restricted_annihilator_exists, synth_left_witness,
    synth_right_witness, witness_in_oracle_span, Side, Status,
};
use zdlab::operators::assemble;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Synthesized witnesses lie in the span the elimination oracle finds.
    #[test]
    fn witnesses_lie_in_the_oracle_span(seed in any::<u64>(), n in 6u64..=14) {
        let spec = common::random_spec(&mut ChaCha8Rng::seed_from_u64(seed));
        if classify_right_zd(&spec).unwrap().status == Status::Yes {
            let w = synth_right_witness(&spec).unwrap();
            prop_assert!(witness_in_oracle_span(&spec, &w, n));
        }
        if classify_left_zd(&spec).unwrap().status == Status::Yes {
            let w = synth_left_witness(&spec).unwrap();
            prop_assert!(witness_in_oracle_span(&spec, &w, n));
        }
    }

    /// A No verdict leaves no annihilator on the admissible coordinates.
    #[test]
    fn no_verdicts_have_no_restricted_annihilator(seed in any::<u64>(), n in 6u64..=14) {
        let spec = common::random_spec(&mut ChaCha8Rng::seed_from_u64(seed));
        if classify_left_zd(&spec).unwrap().status == Status::No {
            prop_assert!(!restricted_annihilator_exists(&spec, n, Side::Left));
        }
        if classify_right_zd(&spec).unwrap().status == Status::No {
            prop_assert!(!restricted_annihilator_exists(&spec, n, Side::Right));
        }
    }

    /// Oracle annihilators multiply the truncation to zero.
    #[test]
    fn oracle_annihilators_annihilate(seed in any::<u64>(), n in 2usize..=12) {
        let spec = common::random_spec(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = assemble(&spec, n);
        if let Some(t) = oracle_annihilator(a.matrix(), Side::Right) {
            prop_assert!(t.mul(a.matrix()).unwrap().is_zero());
        }
        if let Some(t) = oracle_annihilator(a.matrix(), Side::Left) {
            prop_assert!(a.matrix().mul(&t).unwrap().is_zero());
        }
    }
}
