//! Topological divisors of zero on l^p: the identity along single-coordinate
//! projections, and diagonal operators with a null diagonal.

use zdlab::operators::Exponent;
use zdlab::rational::{q, qi};
use zdlab::tdz::{
    check_tdz_implies_strong, default_probes, diagonal_tdz_demo, identity, strongly_tdz_demo, C0Sequence,
    OperatorSequenceRule, DEFAULT_THRESHOLD,
};

fn main() {
    let dim = 16;
    let t = identity(dim, Exponent::Two);
    let probes = default_probes(dim);
    let demo = strongly_tdz_demo(&t, &OperatorSequenceRule::SingleHole, &probes, 10).unwrap();
    print!("{}", demo.probes[3].to_text());
    print!("{}", demo.operator_norms.to_text());

    let y = C0Sequence::harmonic(qi(1));
    print!("{}", diagonal_tdz_demo(&y, 10, 12, Exponent::Two).unwrap().to_text());
    let g = C0Sequence::geometric(qi(1), q(1, 2)).unwrap();
    print!("{}", diagonal_tdz_demo(&g, 10, 12, Exponent::One).unwrap().to_text());

    let check = check_tdz_implies_strong(
        &y.diagonal(40, Exponent::Two),
        &OperatorSequenceRule::TailProjection,
        &default_probes(40),
        39,
        DEFAULT_THRESHOLD,
    )
    .unwrap();
    println!("TDZ implies strongly TDZ on the probes: {}", check.holds);
}
