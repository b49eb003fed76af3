//! The exact-elimination oracle on truncated matrices, and its agreement
//! with the classifier at two truncation sizes.

use zdlab::divisor::{oracle_annihilator, oracle_cross_check, Side};
use zdlab::operators::{assemble, Exponent, OperatorSpec};
use zdlab::rational::{qi, Q};
use zdlab::symbol::{MapTail, SelfMap, WeightSeq, WeightTail};

fn show(rows: &[Vec<Q>]) -> String {
    rows.iter()
        .map(|r| r.iter().map(|x| format!("{x:>5}")).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join("\n")
}

fn main() {
    let backward = OperatorSpec::composition(SelfMap::from_tail(MapTail::Shift(1)).unwrap(), Exponent::Two);
    let a = assemble(&backward, 6);
    println!("C_phi with phi(n) = n + 1, truncated to 6x6:\n{}", show(&a.matrix().to_dense()));
    match oracle_annihilator(a.matrix(), Side::Left) {
        Some(t) => println!("A T = 0 for T =\n{}", show(&t.to_dense())),
        None => println!("no left annihilator"),
    }

    let spec = OperatorSpec::new(
        WeightSeq::from_tail(WeightTail::Inv(qi(1))).unwrap(),
        SelfMap::from_tail(MapTail::Power(2)).unwrap(),
        Exponent::Two,
    );
    for n in [8, 12] {
        for side in [Side::Left, Side::Right] {
            if let Some(c) = oracle_cross_check(&spec, side, n).unwrap() {
                println!("u = 1/n, phi(n) = n^2, {side}, n = {n}: {:?} passed {}", c.expectation, c.passed);
            }
        }
    }
}
