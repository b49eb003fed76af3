use std::time::Instant;

use num_traits::{One, Zero};

use super::report::{NormEntry, Report, TaskReport, TaskStatus, TdzSummary, VerdictEntry, WitnessEntry};
use super::{DemoChoice, OperatorChoice, Probe, Scenario, SequenceChoice, Space, Symbol, Task, TaskKind, TaskParams};
use crate::divisor::{
    classify_left_zd, classify_right_zd, classify_zd, oracle_cross_check, synth_left_witness,
    synth_right_witness, synth_witness, verify_witness, Side, Verdict,
};
use crate::function_spaces::{
    atomic, grid, l2_comp_surjective, linf_is_tdz, lp_comp_left_zd, AtomMap, GridFunction, SimpleFunction,
};
use crate::operators::{assemble, is_bounded, operator_norm, Exponent, NormMethod, OperatorNorm, OperatorSpec, TruncatedOperator};
use crate::rational::{fmt_q, pow, to_f64, Rational, Sig12, Q};
use crate::symbol::{SelfMap, WeightSeq};
use crate::tdz::{
    backward_shift, check_tdz_implies_strong, default_probes, diagonal_tdz_demo, identity, strongly_tdz_demo,
    C0Sequence, ConvergenceTable, OperatorSequenceRule, DEFAULT_THRESHOLD,
};

/// Overrides applied to every task, and whether to record timings. Timings
/// make reports non-reproducible, so they are off by default.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub n_max: Option<u64>,
    pub tol: Option<Q>,
    pub timing: bool,
}

const DEFAULT_DIMENSION: usize = 32;
const DEFAULT_DIAGONAL_ROWS: u64 = 100;
const DEFAULT_MULT_ROWS: u64 = 20;
const DEFAULT_NORM_SIZES: [usize; 4] = [8, 16, 32, 64];
const DEFAULT_ORACLE_SIZES: [usize; 2] = [8, 12];
/// Agreement demanded between measured and analytic diagonal decay.
const DECAY_TOL: f64 = 1e-12;
const NORM_SLACK: f64 = 1e-9;

pub fn run(scenario: &Scenario) -> Report {
    run_with(scenario, &RunOptions::default())
}

pub fn run_with(scenario: &Scenario, options: &RunOptions) -> Report {
    let tasks: Vec<TaskReport> = scenario
        .tasks
        .iter()
        .enumerate()
        .map(|(i, task)| {
            let start = options.timing.then(Instant::now);
            let mut report = TaskReport::new(i + 1, task.line, task.kind.as_str());
            let ctx = Ctx {
                scenario,
                params: &task.params,
                options,
            };
            if let Err(e) = execute(&ctx, task, &mut report) {
                report.status = TaskStatus::Error;
                report.error = Some(e);
            }
            report.wall_clock_ms = start.map(|s| Sig12::new(s.elapsed().as_secs_f64() * 1e3));
            report
        })
        .collect();
    Report {
        scenario: scenario.id.clone(),
        passed: tasks.iter().all(TaskReport::is_ok),
        tasks,
    }
}

struct Ctx<'a> {
    scenario: &'a Scenario,
    params: &'a TaskParams,
    options: &'a RunOptions,
}

type Outcome = Result<(), String>;

impl Ctx<'_> {
    /// The named symbol, or the first default name holding a symbol that
    /// `accept` takes.
    fn pick<T>(&self, explicit: &Option<String>, defaults: &[&str], accept: impl Fn(&Symbol) -> Option<T>) -> Option<T> {
        match explicit {
            Some(name) => self.scenario.symbol(name).and_then(&accept),
            None => defaults
                .iter()
                .find_map(|d| self.scenario.symbol(d).and_then(&accept)),
        }
    }

    fn weight(&self) -> WeightSeq {
        self.pick(&self.params.weight, &["u"], |s| match s {
            Symbol::Weight(w) => Some(w.clone()),
            _ => None,
        })
        .unwrap_or_else(WeightSeq::ones)
    }

    fn map(&self) -> SelfMap {
        self.pick(&self.params.map, &["phi"], |s| match s {
            Symbol::Map(m) => Some(m.clone()),
            _ => None,
        })
        .unwrap_or_else(SelfMap::identity)
    }

    fn sequence(&self) -> Result<C0Sequence, String> {
        self.pick(&self.params.sequence, &["y"], |s| match s {
            Symbol::C0(y) => Some(y.clone()),
            _ => None,
        })
        .ok_or_else(|| "this task needs a c0 symbol (named y or given as sequence)".to_string())
    }

    fn spec(&self, p: Exponent) -> OperatorSpec {
        OperatorSpec::new(self.weight(), self.map(), p)
    }

    fn n_max(&self, default: u64) -> u64 {
        self.options.n_max.or(self.params.n_max).unwrap_or(default)
    }

    fn tol(&self) -> Option<Q> {
        self.options.tol.clone().or_else(|| self.params.tol.clone())
    }
}

fn execute(ctx: &Ctx, task: &Task, r: &mut TaskReport) -> Outcome {
    match &ctx.scenario.space {
        Space::Lp { p } => execute_lp(ctx, task.kind, *p, r),
        Space::Atomic { .. } => execute_atomic(ctx, task.kind, r),
        Space::Cx { .. } => execute_cx(ctx, task.kind, r),
    }
}

fn execute_lp(ctx: &Ctx, kind: TaskKind, p: Exponent, r: &mut TaskReport) -> Outcome {
    let spec = ctx.spec(p);
    match kind {
        TaskKind::ClassifyLeft => classify(&spec, Question::Left, r),
        TaskKind::ClassifyRight => classify(&spec, Question::Right, r),
        TaskKind::ClassifyZd => classify(&spec, Question::Zd, r),
        TaskKind::Witness => {
            let w = match ctx.params.side {
                Some(Side::Left) => synth_left_witness(&spec),
                Some(Side::Right) => synth_right_witness(&spec),
                None => synth_witness(&spec),
            }
            .map_err(|e| e.to_string())?;
            record_witness(&spec, w, r);
            Ok(())
        }
        TaskKind::Norm => norms(ctx, &spec, r),
        TaskKind::TdzDemo => match ctx.params.demo.unwrap_or(DemoChoice::Strong) {
            DemoChoice::Diagonal => diagonal_demo(ctx, p, r),
            demo => strong_demo(ctx, &spec, demo == DemoChoice::ImpliesStrong, r),
        },
        TaskKind::VerifyAll => {
            for q in [Question::Left, Question::Right, Question::Zd] {
                classify(&spec, q, r)?;
            }
            let sizes = ctx.params.sizes.clone().unwrap_or(DEFAULT_ORACLE_SIZES.to_vec());
            for n in sizes {
                for side in [Side::Left, Side::Right] {
                    match oracle_cross_check(&spec, side, n as u64).map_err(|e| e.to_string())? {
                        Some(c) => {
                            if !c.passed {
                                r.fail(format!("{side} oracle cross-check failed at n = {n}"));
                            }
                            r.cross_checks.push(c);
                        }
                        None => r
                            .notes
                            .push(format!("{side} verdict is Unknown; no oracle cross-check at n = {n}")),
                    }
                }
            }
            Ok(())
        }
    }
}

#[derive(Clone, Copy)]
enum Question {
    Left,
    Right,
    Zd,
}

fn classify(spec: &OperatorSpec, q: Question, r: &mut TaskReport) -> Outcome {
    let (name, verdict) = match q {
        Question::Left => ("left", classify_left_zd(spec)),
        Question::Right => ("right", classify_right_zd(spec)),
        Question::Zd => ("zd", classify_zd(spec)),
    };
    let verdict: Verdict = verdict.map_err(|e| e.to_string())?;
    let yes = verdict.is_yes();
    r.verdicts.push(VerdictEntry {
        question: name.into(),
        verdict,
    });
    if yes {
        let w = match q {
            Question::Left => synth_left_witness(spec),
            Question::Right => synth_right_witness(spec),
            Question::Zd => synth_witness(spec),
        };
        match w {
            Ok(w) => record_witness(spec, w, r),
            Err(e) => r.fail(format!("{name}: Yes verdict without a witness: {e}")),
        }
    }
    Ok(())
}

fn record_witness(spec: &OperatorSpec, w: crate::divisor::Witness, r: &mut TaskReport) {
    let check = verify_witness(spec, &w);
    if !check.verified {
        r.fail(format!("witness failed verification: {}", check.detail));
    }
    r.witnesses.push(WitnessEntry { witness: w, check });
}

fn method_name(n: &OperatorNorm) -> String {
    match n {
        OperatorNorm::Point { method, .. } => match method {
            NormMethod::ColumnSum => "column_sum".into(),
            NormMethod::RowSum => "row_sum".into(),
            NormMethod::PowerIteration { iterations } => format!("power_iteration ({iterations} iterations)"),
            NormMethod::Interpolation => "interpolation".into(),
        },
        OperatorNorm::Interval { .. } => "interval".into(),
    }
}

fn norms(ctx: &Ctx, spec: &OperatorSpec, r: &mut TaskReport) -> Outcome {
    let b = is_bounded(spec);
    r.notes.push(format!(
        "{}: {}",
        if b.bounded { "bounded" } else { "unbounded" },
        b.reason
    ));
    let sizes = ctx
        .params
        .sizes
        .clone()
        .or(ctx.params.n.map(|n| vec![n]))
        .unwrap_or(DEFAULT_NORM_SIZES.to_vec());
    for n in sizes {
        let norm = operator_norm(&assemble(spec, n)).map_err(|e| e.to_string())?;
        if norm.lower() > norm.upper() + NORM_SLACK {
            r.fail(format!("norm interval at n = {n} is inverted"));
        }
        r.norms.push(NormEntry {
            n: n as u64,
            lower: Sig12::new(norm.lower()),
            upper: Sig12::new(norm.upper()),
            method: method_name(&norm),
        });
    }
    Ok(())
}

fn probe_vectors(probes: &Option<Vec<Probe>>, dim: usize) -> Result<Vec<(String, Vec<Q>)>, String> {
    let Some(list) = probes else {
        return Ok(default_probes(dim));
    };
    list.iter()
        .map(|pr| {
            let v: Vec<Q> = match pr {
                Probe::Unit(k) if *k > dim => {
                    return Err(format!("probe e{k} does not fit in dimension {dim}"));
                }
                Probe::Unit(k) => (1..=dim).map(|i| if i == *k { Q::one() } else { Q::zero() }).collect(),
                Probe::Harmonic => (1..=dim as u64).map(|k| Q::new(1.into(), k.into())).collect(),
                Probe::Geometric => {
                    let half = Q::new(1.into(), 2.into());
                    (1..=dim as u64).map(|k| pow(&half, k)).collect()
                }
                Probe::Ones => vec![Q::one(); dim],
            };
            Ok((pr.name(), v))
        })
        .collect()
}

fn strong_demo(ctx: &Ctx, spec: &OperatorSpec, implies: bool, r: &mut TaskReport) -> Outcome {
    let dim = ctx.params.n.unwrap_or(DEFAULT_DIMENSION);
    if dim < 2 {
        return Err("a TDZ demo needs dimension at least 2".into());
    }
    let p = spec.p;
    let t: TruncatedOperator = match ctx.params.operator.unwrap_or(OperatorChoice::Weighted) {
        OperatorChoice::Identity => identity(dim, p),
        OperatorChoice::BackwardShift => backward_shift(dim, p),
        OperatorChoice::Diagonal => ctx.sequence()?.diagonal(dim, p),
        OperatorChoice::Weighted => {
            let b = is_bounded(spec);
            if !b.bounded {
                return Err(format!("operator is not bounded: {}", b.reason));
            }
            assemble(spec, dim)
        }
    };
    let choice = ctx.params.rule.unwrap_or(SequenceChoice::TailProjection);
    let rule = match choice {
        SequenceChoice::TailProjection => OperatorSequenceRule::TailProjection,
        SequenceChoice::SingleHole => OperatorSequenceRule::SingleHole,
        SequenceChoice::DiagonalTail => OperatorSequenceRule::DiagonalTail(ctx.sequence()?),
    };
    let probes = probe_vectors(&ctx.params.probes, dim)?;
    let n_max = ctx.n_max(dim as u64 - 1);
    let demo = strongly_tdz_demo(&t, &rule, &probes, n_max).map_err(|e| e.to_string())?;
    let fixed_norm = choice != SequenceChoice::DiagonalTail;
    for row in &demo.sequence_norms.rows {
        let v = row.value.get();
        if v > 1.0 + NORM_SLACK || (fixed_norm && v < 1.0 - NORM_SLACK) {
            r.fail(format!("|T_n| = {} at n = {}, expected 1", row.value, row.n));
        }
    }
    let op = demo.operator_norms.values();
    if let (Some(first), Some(last)) = (op.first(), op.last()) {
        r.notes.push(format!("|T T_n| goes from {} to {}", Sig12::new(*first), Sig12::new(*last)));
    }
    let small = demo
        .probes
        .iter()
        .filter(|t| t.values().last().is_some_and(|v| *v < DEFAULT_THRESHOLD))
        .count();
    r.notes.push(format!(
        "{small} of {} probe columns end below {DEFAULT_THRESHOLD}",
        demo.probes.len()
    ));
    if implies {
        let threshold = ctx.tol().map_or(DEFAULT_THRESHOLD, |t| to_f64(&t));
        let check = check_tdz_implies_strong(&t, &rule, &probes, n_max, threshold).map_err(|e| e.to_string())?;
        if !check.holds {
            r.fail("a probe column exceeded the operator-norm bound");
        }
        r.strong_check = Some(check);
    }
    r.tables.extend(demo.probes);
    r.tables.push(demo.operator_norms);
    r.tables.push(demo.sequence_norms);
    Ok(())
}

fn diagonal_demo(ctx: &Ctx, p: Exponent, r: &mut TaskReport) -> Outcome {
    let y = ctx.sequence()?;
    let n_max = ctx.n_max(DEFAULT_DIAGONAL_ROWS);
    let dim = ctx.params.n.unwrap_or(n_max as usize + 1).max(n_max as usize + 1);
    let table = diagonal_tdz_demo(&y, n_max, dim, p).map_err(|e| e.to_string())?;
    for n in table.bound_violations() {
        r.fail(format!("|T_n T| exceeds sup_(k>n) |y_k| at n = {n}"));
    }
    let ts = y.weights().tail_start();
    for row in &table.rows {
        // The supremum is attained inside the window, so the two must agree.
        let attained = (row.n + 1).max(ts) <= dim as u64;
        let bound = row.bound.map_or(0.0, Sig12::get);
        if attained && (row.value.get() - bound).abs() > DECAY_TOL {
            r.fail(format!("measured {} differs from analytic {bound} at n = {}", row.value, row.n));
        }
    }
    r.tables.push(table);
    Ok(())
}

fn simple_function(ctx: &Ctx, explicit: &Option<String>, defaults: &[&str]) -> Option<SimpleFunction> {
    ctx.pick(explicit, defaults, |s| match s {
        Symbol::Simple(h) => Some(h.clone()),
        _ => None,
    })
}

fn execute_atomic(ctx: &Ctx, kind: TaskKind, r: &mut TaskReport) -> Outcome {
    let Space::Atomic { space, .. } = &ctx.scenario.space else {
        unreachable!()
    };
    let u = simple_function(ctx, &ctx.params.weight, &["u"]).unwrap_or_else(|| SimpleFunction::constant(space, Q::one()));
    let phi = ctx
        .pick(&ctx.params.map, &["phi"], |s| match s {
            Symbol::AtomMap(m) => Some(m.clone()),
            _ => None,
        })
        .unwrap_or_else(|| AtomMap::identity(space));
    match kind {
        TaskKind::ClassifyLeft | TaskKind::Witness => {
            let found = atomic_left(&phi, &u, r)?;
            if kind == TaskKind::Witness && !found {
                return Err("no left witness: verdict is No".into());
            }
            Ok(())
        }
        TaskKind::TdzDemo => atomic_tdz(ctx, r),
        TaskKind::VerifyAll => {
            atomic_left(&phi, &u, r)?;
            r.notes.push(format!(
                "C_phi on L^2 is {}surjective",
                if l2_comp_surjective(&phi) { "" } else { "not " }
            ));
            if simple_function(ctx, &ctx.params.function, &["h"]).is_some() {
                atomic_tdz(ctx, r)?;
            }
            Ok(())
        }
        TaskKind::ClassifyRight | TaskKind::ClassifyZd | TaskKind::Norm => Err(format!(
            "{} is only available on lp spaces; atomic spaces support classify_left, witness, tdz_demo and verify_all",
            kind.as_str()
        )),
    }
}

fn atomic_left(phi: &AtomMap, u: &SimpleFunction, r: &mut TaskReport) -> Result<bool, String> {
    let (verdict, witness) = lp_comp_left_zd(phi, u).map_err(|e| e.to_string())?;
    r.verdicts.push(VerdictEntry {
        question: "left".into(),
        verdict,
    });
    let found = witness.is_some();
    if let Some(w) = witness {
        if !w.verified {
            r.fail(format!("projection onto atom {} does not annihilate", w.atom));
        }
        r.atomic_witnesses.push(w);
    }
    Ok(found)
}

fn mult_tables(rows: &[crate::function_spaces::MultRow], bound: bool) -> [ConvergenceTable; 2] {
    let mut product = ConvergenceTable::new("|M_h M_(h_n)|");
    let mut factor = ConvergenceTable::new("|M_(h_n)|");
    for row in rows {
        let b = bound.then(|| 1.0 / row.n as f64);
        product.push(row.n, to_f64(&row.product_norm.0), b, row.product_norm.0.is_zero());
        factor.push(row.n, to_f64(&row.factor_norm.0), None, row.factor_norm.0.is_zero());
    }
    [product, factor]
}

fn atomic_tdz(ctx: &Ctx, r: &mut TaskReport) -> Outcome {
    let h = simple_function(ctx, &ctx.params.function, &["h", "u"])
        .ok_or("this task needs a simple function (named h or given as function)")?;
    let linf = linf_is_tdz(&h);
    let mult = atomic::mult_op_tdz(&h, ctx.n_max(DEFAULT_MULT_ROWS));
    let poly = atomic::poly_tdz_witness(&h);
    for row in &mult.rows {
        if !row.product_norm.0.is_zero() || !row.factor_norm.0.is_one() {
            r.fail(format!("M_(h_n) at n = {} is not a norm-one annihilator", row.n));
        }
    }
    if !poly.evidence {
        r.fail(format!("p(h) = h - {} is not a TDZ", fmt_q(&poly.alpha)));
    }
    let atoms = h.space().atoms();
    r.tables.extend(mult_tables(&mult.rows, false).into_iter().filter(|t| !t.rows.is_empty()));
    r.tdz = Some(TdzSummary {
        is_tdz: linf.is_tdz,
        location: None,
        zero_atoms: h
            .values()
            .iter()
            .zip(atoms)
            .filter(|(v, _)| v.is_zero())
            .map(|(_, a)| a.id.clone())
            .collect(),
        poly_alpha: Rational(poly.alpha),
        poly_evidence: poly.evidence,
        mult_rows: mult.rows,
    });
    Ok(())
}

fn execute_cx(ctx: &Ctx, kind: TaskKind, r: &mut TaskReport) -> Outcome {
    match kind {
        TaskKind::TdzDemo | TaskKind::VerifyAll => cx_tdz(ctx, r),
        _ => Err(format!(
            "{} is not available on cx spaces; use tdz_demo or verify_all",
            kind.as_str()
        )),
    }
}

fn cx_tdz(ctx: &Ctx, r: &mut TaskReport) -> Outcome {
    let f: GridFunction = ctx
        .pick(&ctx.params.function, &["f", "h"], |s| match s {
            Symbol::Grid(g) => Some(g.clone()),
            _ => None,
        })
        .ok_or("this task needs a grid function (named f or given as function)")?;
    let tol = ctx.tol().unwrap_or_else(Q::zero);
    let t = grid::cx_is_tdz(&f, &tol);
    let n_max = ctx.n_max(DEFAULT_MULT_ROWS);
    let mult = grid::mult_op_tdz(&f, n_max, &tol);
    for row in &mult.rows {
        let bound = Q::new(1.into(), row.n.into());
        if row.product_norm.0 >= bound || !row.factor_norm.0.is_one() {
            r.fail(format!("hat at n = {} violates |f_n| = 1, |f f_n| < 1/n", row.n));
        }
    }
    if t.is_tdz && (mult.rows.len() as u64) < n_max {
        r.notes.push(format!(
            "grid resolves |f| < 1/n only up to n = {}; refine the grid for more rows",
            mult.rows.len()
        ));
    }
    let x0 = ctx
        .params
        .x0
        .or(t.location.as_ref().map(|l| l.index))
        .unwrap_or(0);
    let poly = grid::poly_tdz_witness(&f, x0).map_err(|e| e.to_string())?;
    if !poly.evidence {
        r.fail(format!("p(f) = f - {} has no zero", fmt_q(&poly.alpha)));
    }
    r.notes.push(poly.detail.clone());
    r.tables.extend(mult_tables(&mult.rows, true).into_iter().filter(|t| !t.rows.is_empty()));
    r.tdz = Some(TdzSummary {
        is_tdz: t.is_tdz,
        location: t.location,
        zero_atoms: Vec::new(),
        poly_alpha: Rational(poly.alpha),
        poly_evidence: poly.evidence,
        mult_rows: mult.rows,
    });
    Ok(())
}
