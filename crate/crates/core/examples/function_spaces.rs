//! Zero divisors on a finite atomic measure space and topological divisors
//! of zero in C[0, 1].

use std::collections::BTreeMap;

use zdlab::function_spaces::{
    atomic, cx_is_tdz, grid, linf_is_tdz, lp_comp_left_zd, urysohn_sequence, Atom, AtomMap, AtomicMeasureSpace,
    ClosedForm, GridFunction, SimpleFunction,
};
use zdlab::rational::{q, qi, Rational};

fn main() {
    let space = AtomicMeasureSpace::new(vec![
        Atom { id: "a".into(), mass: qi(1) },
        Atom { id: "b".into(), mass: q(1, 2) },
        Atom { id: "c".into(), mass: q(1, 4) },
    ])
    .unwrap();
    let phi = AtomMap::from_map(
        &space,
        &BTreeMap::from([("a".into(), "a".into()), ("b".into(), "a".into()), ("c".into(), "b".into())]),
    )
    .unwrap();
    let u = SimpleFunction::constant(&space, qi(1));
    let (verdict, witness) = lp_comp_left_zd(&phi, &u).unwrap();
    println!("C_phi on L^p: {verdict}; witness {witness:?}");

    let h = SimpleFunction::new(&space, vec![qi(2), qi(0), q(-1, 2)]).unwrap();
    println!("h = (2, 0, -1/2) is a TDZ in L^inf: {}", linf_is_tdz(&h).is_tdz);
    let poly = atomic::poly_tdz_witness(&h);
    println!("p(x) = x - {}: {}", poly.alpha, poly.detail);

    let f = GridFunction::from_closed_form(
        qi(0),
        qi(1),
        101,
        ClosedForm::Affine { alpha: Rational(qi(1)), beta: Rational(q(-1, 2)) },
    )
    .unwrap();
    let t = cx_is_tdz(&f, &qi(0));
    println!("f(x) = x - 1/2 vanishes at {:?}", t.location);
    let x0 = t.location.unwrap().index;
    for n in [1, 5, 25] {
        let hat = urysohn_sequence(&f, x0, n).unwrap();
        let product = f.product(&hat).unwrap().sup_norm();
        println!("n = {n:>2}: |f_n| = {}, |f f_n| = {}", hat.sup_norm(), product);
    }
    let m = grid::mult_op_tdz(&f, 40, &qi(0));
    println!("M_f is a TDZ: {} ({} rows before the grid runs out)", m.is_tdz, m.rows.len());
}
