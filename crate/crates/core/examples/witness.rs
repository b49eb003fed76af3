//! Synthesizes an explicit annihilator, checks it exactly, then shows the
//! check catching a perturbed copy.

use std::collections::BTreeMap;

use zdlab::divisor::{synth_right_witness, verify_witness, Coef};
use zdlab::operators::{assemble, Exponent, OperatorSpec};
use zdlab::rational::{q, qi, Rational, Q};
use zdlab::symbol::{MapTail, SelfMap, WeightSeq, WeightTail};

fn show(rows: &[Vec<Q>]) -> String {
    rows.iter()
        .map(|r| r.iter().map(|x| format!("{x:>5}")).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join("\n")
}

fn main() {
    let spec = OperatorSpec::new(
        WeightSeq::from_tail(WeightTail::Inv(qi(1))).unwrap(),
        SelfMap::new(BTreeMap::from([(1, 1), (2, 1)]), 3, MapTail::Shift(0)).unwrap(),
        Exponent::Two,
    );
    let w = synth_right_witness(&spec).unwrap();
    println!("witness: {w}");
    let window = w.required_window;
    println!("T on the window:\n{}", show(&w.matrix(window).to_dense()));
    println!("uC_phi on the window:\n{}", show(&assemble(&spec, window as usize).matrix().to_dense()));
    let check = verify_witness(&spec, &w);
    println!("verified: {} ({})", check.verified, check.detail);

    let mut bad = w.clone();
    bad.terms[0].functional.push(Coef {
        index: 3,
        value: Rational(q(1, 1000)),
    });
    bad.required_window = 3;
    let check = verify_witness(&spec, &bad);
    println!(
        "perturbed: verified {}, first nonzero entry {:?}",
        check.verified, check.failing
    );
}
