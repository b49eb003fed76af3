//! Operator norms of truncated composition operators against the fiber
//! bound, on l^1, l^2 and l^inf.

use zdlab::operators::{assemble, is_bounded, operator_norm, Exponent, OperatorSpec};
use zdlab::rational::q;
use zdlab::symbol::{MapTail, SelfMap, WeightSeq, WeightTail};

fn main() {
    for (name, tail) in [
        ("identity", MapTail::Shift(0)),
        ("shift(1)", MapTail::Shift(1)),
        ("block(2)", MapTail::Block { d: 2, c: 0 }),
        ("block(3)", MapTail::Block { d: 3, c: 0 }),
    ] {
        let map = SelfMap::from_tail(tail).unwrap();
        for p in [Exponent::One, Exponent::Two, Exponent::Infinity] {
            let spec = OperatorSpec::composition(map.clone(), p);
            let norm = operator_norm(&assemble(&spec, 24)).unwrap();
            println!("{name:<9} p = {p:<3} |C_phi| = {:.12} ({norm:?})", norm.upper());
        }
    }

    // A constant map has an infinite fiber: bounded only if u is in l^p.
    let collapse = SelfMap::from_tail(MapTail::Const(1)).unwrap();
    for (name, u) in [
        ("u = 1", WeightSeq::ones()),
        ("u = 2^-n", WeightSeq::from_tail(WeightTail::Geom { a: q(1, 1), r: q(1, 2) }).unwrap()),
    ] {
        let b = is_bounded(&OperatorSpec::new(u, collapse.clone(), Exponent::Two));
        println!("phi = 1, {name}: bounded {} ({})", b.bounded, b.reason);
    }
}
