//! Acceptance criteria, one pass/fail line each. Runs with its own harness
//! so the lines are printed even when every criterion passes.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use num_traits::{One, Signed, Zero};

use zdlab::divisor::{
    classify_left_zd, classify_right_zd, classify_zd, oracle_cross_check, synth_left_witness,
    synth_right_witness, synth_witness, verify_witness, Rule, Side, Status, Verdict,
};
use zdlab::function_spaces::{atomic, linf_is_tdz, urysohn_sequence, AtomicMeasureSpace, ClosedForm, GridFunction, SimpleFunction};
use zdlab::operators::{assemble, compose, operator_norm, Exponent, OperatorSpec};
use zdlab::rational::{q, qi, to_f64, Rational, Q};
use zdlab::scenario::{emit_report, parse_report, parse_scenario, run, Format, Report, TaskStatus};
use zdlab::symbol::{MapTail, SelfMap};
use zdlab::tdz::{tail_projection, C0Sequence};

type Outcome = Result<String, String>;

const FIXTURES: [(&str, &str); 11] = [
    ("right-zero-fiber", include_str!("../scenarios/right-zero-fiber.toml")),
    ("right-collision", include_str!("../scenarios/right-collision.toml")),
    ("left-square", include_str!("../scenarios/left-square.toml")),
    ("left-injective", include_str!("../scenarios/left-injective.toml")),
    ("left-block", include_str!("../scenarios/left-block.toml")),
    ("antinormal-square", include_str!("../scenarios/antinormal-square.toml")),
    ("identity-strong", include_str!("../scenarios/identity-strong.toml")),
    ("diagonal-c0", include_str!("../scenarios/diagonal-c0.toml")),
    ("atomic-left", include_str!("../scenarios/atomic-left.toml")),
    ("cx-hat", include_str!("../scenarios/cx-hat.toml")),
    ("norms", include_str!("../scenarios/norms.toml")),
];

fn fixture(name: &str) -> Report {
    let text = FIXTURES.iter().find(|(n, _)| *n == name).unwrap().1;
    run(&parse_scenario(text).unwrap())
}

fn first_verdict(r: &Report, question: &str) -> Verdict {
    r.tasks
        .iter()
        .flat_map(|t| &t.verdicts)
        .find(|v| v.question == question)
        .unwrap_or_else(|| panic!("{}: no {question} verdict", r.scenario))
        .verdict
        .clone()
}

/// Every Yes verdict of the report carries a verified witness.
fn yes_verified(r: &Report) -> bool {
    r.tasks.iter().all(|t| {
        let yes = t.verdicts.iter().filter(|v| v.verdict.is_yes()).count();
        let verified = t.witnesses.iter().filter(|w| w.check.verified).count()
            + t.atomic_witnesses.iter().filter(|w| w.verified).count();
        verified >= yes
    })
}

fn column<'a>(r: &'a Report, task: usize, label: &str) -> Vec<f64> {
    r.tasks[task]
        .tables
        .iter()
        .find(|t| t.label == label)
        .unwrap_or_else(|| panic!("no table {label}"))
        .values()
}

fn expect_verdict(r: &Report, question: &str, status: Status, rule: Option<Rule>) -> Result<(), String> {
    let v = first_verdict(r, question);
    if v.status != status || (rule.is_some() && v.rule != rule) {
        return Err(format!("{}: {question} verdict {v}", r.scenario));
    }
    if !r.passed || !yes_verified(r) {
        return Err(format!("{}: report not clean", r.scenario));
    }
    Ok(())
}

fn criterion_1() -> Outcome {
    let mut ok = 0;
    let mut failures = Vec::new();
    let mut check = |res: Result<(), String>| match res {
        Ok(()) => ok += 1,
        Err(e) => failures.push(e),
    };
    check(expect_verdict(&fixture("right-zero-fiber"), "right", Status::Yes, Some(Rule::RightZeroFiber)));
    check(expect_verdict(&fixture("right-collision"), "right", Status::Yes, Some(Rule::RightNonInjective)));
    check(expect_verdict(&fixture("left-square"), "left", Status::Yes, Some(Rule::LeftNonSurjective)));
    check(expect_verdict(&fixture("left-injective"), "left", Status::No, None));
    check(expect_verdict(&fixture("left-block"), "left", Status::Yes, None));
    check(expect_verdict(&fixture("antinormal-square"), "left", Status::Yes, None));
    check((|| {
        let r = fixture("identity-strong");
        let op = column(&r, 0, "|T T_n|");
        let seq = column(&r, 0, "|T_n|");
        if !op.iter().chain(&seq).all(|v| (v - 1.0).abs() <= 1e-12) {
            return Err("identity: operator-norm column is not constant 1".into());
        }
        for t in r.tasks[0].tables.iter().filter(|t| t.label.starts_with("|T T_n x|")) {
            // Past its peak the column must fall and end below the peak.
            let v = t.values();
            let peak = (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b]).then(b.cmp(&a))).unwrap();
            let falls = v[peak..].windows(2).all(|w| w[1] <= w[0]);
            if !falls || (v[peak] > 0.0 && *v.last().unwrap() >= v[peak]) {
                return Err(format!("identity: column {} does not decay", t.label));
            }
        }
        r.passed.then_some(()).ok_or("identity: report not clean".into())
    })());
    check((|| {
        let r = fixture("diagonal-c0");
        let v = column(&r, 0, "|T_n T| for T = diag(y)");
        let decays = v.windows(2).all(|w| w[1] < w[0]) && *v.last().unwrap() < 0.01;
        (decays && r.passed)
            .then_some(())
            .ok_or("diagonal: |T_n T| does not tend to zero".into())
    })());
    if failures.is_empty() {
        Ok(format!("{ok}/8 worked examples reproduced"))
    } else {
        Err(format!("{ok}/8; {}", failures.join("; ")))
    }
}

fn criterion_2() -> Outcome {
    let specs = common::family(0x5eed_0002, 1200);
    let mut yes = 0;
    let mut failures = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        let questions: [(&str, Verdict, fn(&OperatorSpec) -> _); 3] = [
            ("left", classify_left_zd(spec).unwrap(), synth_left_witness),
            ("right", classify_right_zd(spec).unwrap(), synth_right_witness),
            ("zd", classify_zd(spec).unwrap(), synth_witness),
        ];
        for (name, verdict, synth) in questions {
            if !verdict.is_yes() {
                continue;
            }
            yes += 1;
            match synth(spec) {
                Ok(w) => {
                    let c = verify_witness(spec, &w);
                    if !(c.verified && c.product_zero && c.tail_certificate) {
                        failures.push(format!("spec {i} {name}: {}", c.detail));
                    }
                }
                Err(e) => failures.push(format!("spec {i} {name}: {e}")),
            }
        }
    }
    if failures.is_empty() {
        Ok(format!("{} specs, {yes} Yes verdicts, all witnesses exact", specs.len()))
    } else {
        Err(format!("{} failures, first: {}", failures.len(), failures[0]))
    }
}

fn criterion_3() -> Outcome {
    let specs = common::family(0x5eed_0002, 1200);
    let (mut checks, mut unknown) = (0, 0);
    let mut failures = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        for n in [8, 12] {
            for side in [Side::Left, Side::Right] {
                match oracle_cross_check(spec, side, n).map_err(|e| e.to_string())? {
                    Some(c) if c.passed => checks += 1,
                    Some(c) => failures.push(format!("spec {i} {side} n={n}: coordinate {:?}", c.failing_coordinate)),
                    None => unknown += 1,
                }
            }
        }
    }
    if failures.is_empty() {
        Ok(format!("{checks} cross-checks agree ({unknown} Unknown skipped)"))
    } else {
        Err(format!("{} disagreements, first: {}", failures.len(), failures[0]))
    }
}

/// Largest singular value by a dense SVD, independent of the crate's
/// power iteration.
fn svd_norm(spec: &OperatorSpec, n: usize) -> f64 {
    let t = assemble(spec, n);
    let m = DMatrix::from_fn(n, n, |i, j| to_f64(&t.entry(i + 1, j + 1)));
    m.singular_values().max()
}

fn criterion_4() -> Outcome {
    let maps = [
        ("identity", MapTail::Shift(0), 1u32),
        ("shift(1)", MapTail::Shift(1), 1),
        ("block(2)", MapTail::Block { d: 2, c: 0 }, 2),
        ("block(3)", MapTail::Block { d: 3, c: 0 }, 3),
    ];
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for (name, tail, bound) in maps {
        let map = SelfMap::from_tail(tail).unwrap();
        for p in [Exponent::One, Exponent::Two, Exponent::Infinity] {
            let spec = OperatorSpec::composition(map.clone(), p);
            let expected = match p.finite() {
                Some(p) => f64::from(bound).powf(1.0 / p),
                None => 1.0,
            };
            // Sizes divisible by every block length keep all fibers whole.
            for n in [12, 24, 60] {
                let measured = operator_norm(&assemble(&spec, n)).map_err(|e| e.to_string())?;
                let mut err = (measured.upper() - expected).abs().max((measured.lower() - expected).abs());
                if p == Exponent::Two {
                    err = err.max((svd_norm(&spec, n) - expected).abs());
                }
                worst = worst.max(err);
                cases += 1;
                if err > 1e-9 {
                    return Err(format!("{name}, p = {p}, n = {n}: |C_phi| = {} vs {expected}", measured.upper()));
                }
            }
        }
    }
    Ok(format!("{cases} truncations, worst error {worst:.1e}"))
}

fn criterion_5() -> Outcome {
    let dim = 101;
    let sequences = [
        ("1/k", C0Sequence::harmonic(qi(1)), Box::new(|n: u64| 1.0 / (n + 1) as f64) as Box<dyn Fn(u64) -> f64>),
        (
            "2^-k",
            C0Sequence::geometric(qi(1), q(1, 2)).unwrap(),
            Box::new(|n: u64| 0.5f64.powi(n as i32 + 1)),
        ),
    ];
    let mut worst: f64 = 0.0;
    for (name, y, analytic) in &sequences {
        for p in [Exponent::One, Exponent::Two, Exponent::Infinity] {
            let d = y.diagonal(dim, p);
            for n in 1..=100u64 {
                let product = compose(&tail_projection(n, dim, p).unwrap(), &d).unwrap();
                let measured = operator_norm(&product).map_err(|e| e.to_string())?.upper();
                let err = (measured - analytic(n)).abs();
                worst = worst.max(err);
                if err > 1e-12 {
                    return Err(format!("y = {name}, p = {p}, n = {n}: {measured} vs {}", analytic(n)));
                }
            }
        }
    }
    Ok(format!("600 rows, worst error {worst:.1e}"))
}

fn criterion_6() -> Outcome {
    let g = 10_001;
    let f = GridFunction::from_closed_form(
        qi(0),
        qi(1),
        g,
        ClosedForm::Affine {
            alpha: Rational(qi(1)),
            beta: Rational(q(-1, 2)),
        },
    )
    .map_err(|e| e.to_string())?;
    let x0 = (0..g).find(|&i| f.samples()[i].is_zero()).ok_or("no grid zero")?;
    let mut previous: Option<Q> = None;
    for n in 1..=100u64 {
        let hat = urysohn_sequence(&f, x0, n).map_err(|e| format!("n = {n}: {e}"))?;
        let sup = hat.samples().iter().map(Signed::abs).max().unwrap();
        if !sup.is_one() {
            return Err(format!("n = {n}: |f_n| = {sup}"));
        }
        let prod = f
            .samples()
            .iter()
            .zip(hat.samples())
            .map(|(a, b)| (a * b).abs())
            .max()
            .unwrap();
        if prod >= Q::new(1.into(), n.into()) {
            return Err(format!("n = {n}: |f f_n| = {prod} not below 1/n"));
        }
        if previous.as_ref().is_some_and(|p| prod > *p) {
            return Err(format!("n = {n}: |f f_n| increased"));
        }
        previous = Some(prod);
    }
    Ok(format!("100 hats on {g} points, last |f f_n| = {}", previous.unwrap()))
}

fn criterion_7() -> Outcome {
    let mut cases = 0;
    for atoms in 1..=4usize {
        let masses = [qi(1), q(1, 2), q(1, 3), qi(2)];
        let space = AtomicMeasureSpace::new(
            (0..atoms)
                .map(|i| zdlab::function_spaces::Atom {
                    id: format!("a{i}"),
                    mass: masses[i].clone(),
                })
                .collect(),
        )
        .map_err(|e| e.to_string())?;
        for code in 0..5usize.pow(atoms as u32) {
            let values: Vec<Q> = (0..atoms)
                .map(|i| qi((code / 5usize.pow(i as u32) % 5) as i64 - 2))
                .collect();
            let h = SimpleFunction::new(&space, values.clone()).map_err(|e| e.to_string())?;
            let has_zero = values.iter().any(Zero::is_zero);
            let t = linf_is_tdz(&h);
            if t.is_tdz != has_zero {
                return Err(format!("{values:?}: linf_is_tdz = {}", t.is_tdz));
            }
            if let Some(chi) = &t.witness {
                let annihilates = values.iter().zip(chi.values()).all(|(a, b)| (a * b).is_zero());
                if !annihilates || !chi.sup_norm().is_one() {
                    return Err(format!("{values:?}: bad indicator witness"));
                }
            }
            let poly = atomic::poly_tdz_witness(&h);
            // Evaluate p on the value set directly from its coefficients.
            let range: BTreeSet<Q> = values
                .iter()
                .map(|v| {
                    poly.coefficients
                        .iter()
                        .rev()
                        .fold(Q::zero(), |acc, c| acc * v + c)
                })
                .collect();
            if !poly.evidence || !range.contains(&Q::zero()) {
                return Err(format!("{values:?}: p(h) misses 0"));
            }
            cases += 1;
        }
    }
    Ok(format!("{cases} simple functions"))
}

fn criterion_8() -> Outcome {
    let specs = common::family(0x5eed_0008, 200);
    let scales = [q(-1, 3), q(1, 3), qi(-2), qi(2), qi(5)];
    let key = |v: Verdict| (v.status, v.rule);
    let mut comparisons = 0;
    for (i, spec) in specs.iter().enumerate() {
        let base = [
            key(classify_left_zd(spec).unwrap()),
            key(classify_right_zd(spec).unwrap()),
            key(classify_zd(spec).unwrap()),
        ];
        for c in &scales {
            let scaled = spec.with_weight(spec.weight.scaled(c));
            let got = [
                key(classify_left_zd(&scaled).unwrap()),
                key(classify_right_zd(&scaled).unwrap()),
                key(classify_zd(&scaled).unwrap()),
            ];
            if got != base {
                return Err(format!("spec {i}, c = {c}: {base:?} became {got:?}"));
            }
            comparisons += 3;
        }
    }
    Ok(format!("{comparisons} verdict pairs identical"))
}

fn criterion_9() -> Outcome {
    for (name, text) in FIXTURES {
        let s = parse_scenario(text).map_err(|e| format!("{name}: {e}"))?;
        let a = emit_report(&run(&s), Format::Structured).remove(0).content;
        let b = emit_report(&run(&s), Format::Structured).remove(0).content;
        if a != b {
            return Err(format!("{name}: structured reports differ between runs"));
        }
        let parsed = parse_report(&a).map_err(|e| format!("{name}: {e}"))?;
        if parsed != run(&s) {
            return Err(format!("{name}: parse(emit(r)) != r"));
        }
        if parsed.tasks.iter().any(|t| t.status != TaskStatus::Ok) {
            return Err(format!("{name}: a fixture task is not ok"));
        }
    }
    Ok(format!("{} fixtures byte-identical and round-trip", FIXTURES.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("worked examples", criterion_1),
        ("witness exactness", criterion_2),
        ("oracle agreement", criterion_3),
        ("norm law", criterion_4),
        ("diagonal TDZ decay", criterion_5),
        ("C(X) TDZ sequence", criterion_6),
        ("L-infinity and polynomial TDZ", criterion_7),
        ("scaling invariance", criterion_8),
        ("determinism and round-trip", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail} ({secs:.2}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail} ({secs:.2}s)", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
