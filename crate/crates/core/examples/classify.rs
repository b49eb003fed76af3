//! Left, right and two-sided zero-divisor verdicts for a few weighted
//! composition operators on l^2.

use std::collections::BTreeMap;

use zdlab::divisor::{classify_left_zd, classify_right_zd, classify_zd};
use zdlab::operators::{Exponent, OperatorSpec};
use zdlab::rational::{q, qi};
use zdlab::symbol::{MapTail, SelfMap, WeightSeq, WeightTail};

fn main() {
    let harmonic = WeightSeq::from_tail(WeightTail::Inv(qi(1))).unwrap();
    let cases = [
        (
            "u = 1/n, phi(1) = phi(2) = 1",
            OperatorSpec::new(
                harmonic.clone(),
                SelfMap::new(BTreeMap::from([(1, 1), (2, 1)]), 3, MapTail::Shift(0)).unwrap(),
                Exponent::Two,
            ),
        ),
        (
            "u = 1/n, phi(n) = n^2",
            OperatorSpec::new(harmonic, SelfMap::from_tail(MapTail::Power(2)).unwrap(), Exponent::Two),
        ),
        (
            "u = 1 + 1/n, phi = id",
            OperatorSpec::multiplication(
                WeightSeq::from_tail(WeightTail::CPlusInv { c: qi(1), a: qi(1) }).unwrap(),
                Exponent::Two,
            ),
        ),
        (
            "u(1) = u(2) = 0, phi(n) = ceil(n/2)",
            OperatorSpec::new(
                WeightSeq::new(BTreeMap::from([(1, qi(0)), (2, qi(0))]), 3, WeightTail::Const(qi(1))).unwrap(),
                SelfMap::from_tail(MapTail::Block { d: 2, c: 0 }).unwrap(),
                Exponent::Two,
            ),
        ),
        (
            "u = 2^-n, phi(n) = n + 1",
            OperatorSpec::new(
                WeightSeq::from_tail(WeightTail::Geom { a: qi(1), r: q(1, 2) }).unwrap(),
                SelfMap::from_tail(MapTail::Shift(1)).unwrap(),
                Exponent::Two,
            ),
        ),
    ];
    for (name, spec) in &cases {
        println!("{name}");
        println!("  left  {}", classify_left_zd(spec).unwrap());
        println!("  right {}", classify_right_zd(spec).unwrap());
        println!("  zd    {}", classify_zd(spec).unwrap());
    }
}
