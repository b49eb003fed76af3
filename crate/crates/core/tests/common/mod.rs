//! Seeded random weighted composition operators shared by the integration
//! and acceptance tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use zdlab::operators::{Exponent, OperatorSpec};
use zdlab::rational::{q, qi, Q};
use zdlab::symbol::{MapTail, SelfMap, WeightSeq, WeightTail};

/// Exceptions live on `1..=8`; tails start at 9.
pub const HEAD: u64 = 8;

fn weight_value(rng: &mut ChaCha8Rng) -> Q {
    let pool = [qi(0), qi(0), qi(1), qi(-1), q(1, 2), q(-2, 3), qi(2), q(5, 4)];
    pool.choose(rng).unwrap().clone()
}

pub fn random_map(rng: &mut ChaCha8Rng) -> SelfMap {
    let tail = match rng.random_range(0..3) {
        0 => MapTail::Shift(rng.random_range(0..=3)),
        1 => MapTail::Block {
            d: rng.random_range(2..=3),
            c: rng.random_range(0..=2),
        },
        _ => MapTail::Power(rng.random_range(2..=3)),
    };
    let mut ex = BTreeMap::new();
    for m in 1..=HEAD {
        if rng.random_bool(0.35) {
            ex.insert(m, rng.random_range(1..=10));
        }
    }
    SelfMap::new(ex, HEAD + 1, tail).unwrap()
}

pub fn random_weight(rng: &mut ChaCha8Rng) -> WeightSeq {
    let tail = match rng.random_range(0..6) {
        0 | 1 => WeightTail::Const(qi(1)),
        2 => WeightTail::Const([qi(0), q(1, 3), qi(-2)].choose(rng).unwrap().clone()),
        3 => WeightTail::CPlusInv { c: qi(1), a: q(1, 2) },
        4 => WeightTail::Inv(qi(1)),
        _ => WeightTail::Geom { a: qi(1), r: q(1, 2) },
    };
    let mut ex = BTreeMap::new();
    for m in 1..=HEAD {
        if rng.random_bool(0.35) {
            ex.insert(m, weight_value(rng));
        }
    }
    WeightSeq::new(ex, HEAD + 1, tail).unwrap()
}

pub fn random_spec(rng: &mut ChaCha8Rng) -> OperatorSpec {
    let p = *[Exponent::One, Exponent::Two, Exponent::Infinity].choose(rng).unwrap();
    OperatorSpec::new(random_weight(rng), random_map(rng), p)
}

/// `count` specs from a fixed seed.
pub fn family(seed: u64, count: usize) -> Vec<OperatorSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_spec(&mut rng)).collect()
}
