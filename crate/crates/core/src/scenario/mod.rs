//! Scenario files: a TOML description of a space, its symbols and a list of
//! tasks, validated into a [`Scenario`] and executed by [`run`].
//!
//! The grammar is documented in `SCENARIOS.md` at the crate root.

mod report;
mod run;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;

use num_traits::{Signed, Zero};
use serde::Deserialize;
use toml::{Spanned, Value};

use crate::divisor::Side;
use crate::function_spaces::{
    Atom, AtomMap, AtomicMeasureSpace, ClosedForm, FunctionSpaceError, GridFunction, SimpleFunction,
};
use crate::operators::Exponent;
use crate::rational::{parse_q, Rational, Q};
use crate::symbol::{MapTail, SelfMap, WeightSeq, WeightTail};
use crate::tdz::C0Sequence;

pub use report::{
    emit_report, parse_report, Emitted, Format, NormEntry, Report, TaskReport, TaskStatus,
    TdzSummary, VerdictEntry, WitnessEntry,
};
pub use run::{run, run_with, RunOptions};

/// Largest truncation a task may request.
pub const MAX_DIMENSION: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorCode {
    Syntax,
    UnknownSpaceKind,
    UnknownSymbolType,
    UnknownTailKind,
    BadTailParams,
    BadRational,
    NegativeMass,
    ZeroMass,
    DuplicateAtom,
    UnknownAtom,
    InvalidSymbol,
    SymbolSpaceMismatch,
    UnknownTaskKind,
    UndefinedSymbol,
    SymbolType,
    ParameterRange,
    UnknownProbe,
    UnknownChoice,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Syntax => "SYNTAX",
            ErrorCode::UnknownSpaceKind => "UNKNOWN_SPACE_KIND",
            ErrorCode::UnknownSymbolType => "UNKNOWN_SYMBOL_TYPE",
            ErrorCode::UnknownTailKind => "UNKNOWN_TAIL_KIND",
            ErrorCode::BadTailParams => "BAD_TAIL_PARAMS",
            ErrorCode::BadRational => "BAD_RATIONAL",
            ErrorCode::NegativeMass => "NEGATIVE_MASS",
            ErrorCode::ZeroMass => "ZERO_MASS",
            ErrorCode::DuplicateAtom => "DUPLICATE_ATOM",
            ErrorCode::UnknownAtom => "UNKNOWN_ATOM",
            ErrorCode::InvalidSymbol => "INVALID_SYMBOL",
            ErrorCode::SymbolSpaceMismatch => "SYMBOL_SPACE_MISMATCH",
            ErrorCode::UnknownTaskKind => "UNKNOWN_TASK_KIND",
            ErrorCode::UndefinedSymbol => "UNDEFINED_SYMBOL",
            ErrorCode::SymbolType => "SYMBOL_TYPE",
            ErrorCode::ParameterRange => "PARAMETER_RANGE",
            ErrorCode::UnknownProbe => "UNKNOWN_PROBE",
            ErrorCode::UnknownChoice => "UNKNOWN_CHOICE",
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A schema violation at a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaError {
    pub code: ErrorCode,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}: {}", self.line, self.column, self.code, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ScenarioErrors(pub Vec<SchemaError>);

impl fmt::Display for ScenarioErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        f.write_str(&lines.join("\n"))
    }
}

impl ScenarioErrors {
    pub fn codes(&self) -> Vec<ErrorCode> {
        self.0.iter().map(|e| e.code).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Space {
    Lp { p: Exponent },
    Atomic { p: Exponent, space: AtomicMeasureSpace },
    Cx { a: Q, b: Q, points: usize },
}

impl Space {
    pub fn kind(&self) -> &'static str {
        match self {
            Space::Lp { .. } => "lp",
            Space::Atomic { .. } => "atomic",
            Space::Cx { .. } => "cx",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Symbol {
    Weight(WeightSeq),
    Map(SelfMap),
    C0(C0Sequence),
    Simple(SimpleFunction),
    AtomMap(AtomMap),
    Grid(GridFunction),
}

impl Symbol {
    pub fn type_name(&self) -> &'static str {
        match self {
            Symbol::Weight(_) => "weight",
            Symbol::Map(_) => "map",
            Symbol::C0(_) => "c0",
            Symbol::Simple(_) => "simple",
            Symbol::AtomMap(_) => "atom_map",
            Symbol::Grid(_) => "grid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    ClassifyLeft,
    ClassifyRight,
    ClassifyZd,
    Witness,
    TdzDemo,
    Norm,
    VerifyAll,
}

impl TaskKind {
    pub const ALL: [TaskKind; 7] = [
        TaskKind::ClassifyLeft,
        TaskKind::ClassifyRight,
        TaskKind::ClassifyZd,
        TaskKind::Witness,
        TaskKind::TdzDemo,
        TaskKind::Norm,
        TaskKind::VerifyAll,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::ClassifyLeft => "classify_left",
            TaskKind::ClassifyRight => "classify_right",
            TaskKind::ClassifyZd => "classify_zd",
            TaskKind::Witness => "witness",
            TaskKind::TdzDemo => "tdz_demo",
            TaskKind::Norm => "norm",
            TaskKind::VerifyAll => "verify_all",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

/// Which operator a TDZ demo acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorChoice {
    Identity,
    BackwardShift,
    /// The assembled `uC_φ` of the scenario symbols.
    Weighted,
    /// `diag(y)` of a c0 symbol.
    Diagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceChoice {
    TailProjection,
    SingleHole,
    DiagonalTail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemoChoice {
    Strong,
    Diagonal,
    ImpliesStrong,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Probe {
    Unit(usize),
    Harmonic,
    Geometric,
    Ones,
}

impl Probe {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "harmonic" => Some(Probe::Harmonic),
            "geometric" => Some(Probe::Geometric),
            "ones" => Some(Probe::Ones),
            _ => s
                .strip_prefix('e')
                .and_then(|k| k.parse().ok())
                .filter(|&k| k >= 1)
                .map(Probe::Unit),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Probe::Unit(k) => format!("e{k}"),
            Probe::Harmonic => "harmonic".into(),
            Probe::Geometric => "geometric".into(),
            Probe::Ones => "ones".into(),
        }
    }
}

/// Task parameters after validation. Symbol references are resolved names
/// of symbols of the right type, or `None` for the built-in default.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TaskParams {
    pub n: Option<usize>,
    pub n_max: Option<u64>,
    pub tol: Option<Q>,
    pub probes: Option<Vec<Probe>>,
    pub side: Option<Side>,
    pub operator: Option<OperatorChoice>,
    pub rule: Option<SequenceChoice>,
    pub demo: Option<DemoChoice>,
    pub sizes: Option<Vec<usize>>,
    pub x0: Option<usize>,
    pub weight: Option<String>,
    pub map: Option<String>,
    pub sequence: Option<String>,
    pub function: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub kind: TaskKind,
    pub line: usize,
    pub params: TaskParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub description: Option<String>,
    pub space: Space,
    pub symbols: BTreeMap<String, Symbol>,
    pub tasks: Vec<Task>,
}

impl Scenario {
    pub fn symbol(&self, name: &str) -> Option<&Symbol> {
        self.symbols.get(name)
    }

    /// Same scenario with a single task in place of the listed ones.
    pub fn with_tasks(&self, tasks: Vec<Task>) -> Scenario {
        Scenario {
            tasks,
            ..self.clone()
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    id: Spanned<String>,
    #[serde(default)]
    description: Option<String>,
    space: Spanned<RawSpace>,
    #[serde(default)]
    symbols: BTreeMap<String, Spanned<RawSymbol>>,
    #[serde(default)]
    tasks: Vec<Spanned<RawTask>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpace {
    kind: Spanned<String>,
    #[serde(default)]
    p: Option<Spanned<Value>>,
    #[serde(default)]
    atoms: Option<Vec<Spanned<RawAtom>>>,
    #[serde(default)]
    a: Option<Spanned<Value>>,
    #[serde(default)]
    b: Option<Spanned<Value>>,
    #[serde(default)]
    points: Option<Spanned<i64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAtom {
    id: Spanned<Value>,
    mass: Spanned<Value>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFormula {
    kind: Spanned<String>,
    #[serde(default)]
    params: Vec<Spanned<Value>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSymbol {
    #[serde(rename = "type")]
    ty: Spanned<String>,
    #[serde(default)]
    exceptions: BTreeMap<String, Spanned<Value>>,
    #[serde(default)]
    tail_start: Option<Spanned<i64>>,
    #[serde(default)]
    tail: Option<Spanned<RawFormula>>,
    #[serde(default)]
    values: Option<BTreeMap<String, Spanned<Value>>>,
    #[serde(default)]
    image: Option<BTreeMap<String, Spanned<Value>>>,
    #[serde(default)]
    samples: Option<Vec<Spanned<Value>>>,
    #[serde(default)]
    closed_form: Option<Spanned<RawFormula>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTask {
    kind: Spanned<String>,
    #[serde(default)]
    n: Option<Spanned<i64>>,
    #[serde(default)]
    n_max: Option<Spanned<i64>>,
    #[serde(default)]
    tol: Option<Spanned<Value>>,
    #[serde(default)]
    probes: Option<Vec<Spanned<String>>>,
    #[serde(default)]
    side: Option<Spanned<String>>,
    #[serde(default)]
    operator: Option<Spanned<String>>,
    #[serde(default)]
    rule: Option<Spanned<String>>,
    #[serde(default)]
    demo: Option<Spanned<String>>,
    #[serde(default)]
    sizes: Option<Vec<Spanned<i64>>>,
    #[serde(default)]
    x0: Option<Spanned<i64>>,
    #[serde(default)]
    weight: Option<Spanned<String>>,
    #[serde(default)]
    map: Option<Spanned<String>>,
    #[serde(default)]
    sequence: Option<Spanned<String>>,
    #[serde(default)]
    function: Option<Spanned<String>>,
}

/// Turns byte spans into line and column numbers.
struct Locator<'a> {
    text: &'a str,
    errors: Vec<SchemaError>,
}

impl<'a> Locator<'a> {
    fn position(&self, offset: usize) -> (usize, usize) {
        let before = &self.text[..offset.min(self.text.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
        (line, column)
    }

    fn line(&self, span: &Range<usize>) -> usize {
        self.position(span.start).0
    }

    fn push(&mut self, code: ErrorCode, span: Range<usize>, message: impl Into<String>) {
        let (line, column) = self.position(span.start);
        self.errors.push(SchemaError {
            code,
            line,
            column,
            message: message.into(),
        });
    }

    fn rational(&mut self, v: &Spanned<Value>, what: &str) -> Option<Q> {
        let parsed = match v.get_ref() {
            Value::Integer(i) => Ok(Q::from_integer((*i).into())),
            Value::String(s) => parse_q(s).map_err(|e| e.to_string()),
            other => Err(format!("expected a rational string, got {}", other.type_str())),
        };
        match parsed {
            Ok(q) => Some(q),
            Err(msg) => {
                self.push(ErrorCode::BadRational, v.span(), format!("{what}: {msg}"));
                None
            }
        }
    }

    fn positive_int(&mut self, v: &Spanned<Value>, what: &str) -> Option<u64> {
        let parsed = match v.get_ref() {
            Value::Integer(i) if *i >= 1 => Some(*i as u64),
            Value::String(s) => s.trim().parse::<u64>().ok().filter(|&k| k >= 1),
            _ => None,
        };
        if parsed.is_none() {
            self.push(ErrorCode::InvalidSymbol, v.span(), format!("{what} must be a positive integer"));
        }
        parsed
    }

    fn nonneg_int(&mut self, v: &Spanned<Value>, what: &str) -> Option<u64> {
        let parsed = match v.get_ref() {
            Value::Integer(i) if *i >= 0 => Some(*i as u64),
            Value::String(s) => s.trim().parse::<u64>().ok(),
            _ => None,
        };
        if parsed.is_none() {
            self.push(ErrorCode::BadTailParams, v.span(), format!("{what} must be a non-negative integer"));
        }
        parsed
    }

    fn ranged(&mut self, v: &Spanned<i64>, lo: i64, hi: i64, what: &str) -> Option<i64> {
        let x = *v.get_ref();
        if x < lo || x > hi {
            self.push(ErrorCode::ParameterRange, v.span(), format!("{what} = {x} is outside {lo}..={hi}"));
            None
        } else {
            Some(x)
        }
    }
}

fn value_key(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Integer(i) => Some(i.to_string()),
        _ => None,
    }
}

/// Parses and validates scenario text. Every problem found is reported, each
/// with its line.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioErrors> {
    let mut loc = Locator {
        text,
        errors: Vec::new(),
    };
    let raw: RawScenario = match toml::from_str(text) {
        Ok(raw) => raw,
        Err(e) => {
            let span = e.span().unwrap_or(0..0);
            loc.push(ErrorCode::Syntax, span, e.message().to_string());
            return Err(ScenarioErrors(loc.errors));
        }
    };
    let space = validate_space(&mut loc, &raw.space);
    let mut symbols = BTreeMap::new();
    if let Some(space) = &space {
        for (name, sym) in &raw.symbols {
            if let Some(s) = validate_symbol(&mut loc, space, name, sym) {
                symbols.insert(name.clone(), s);
            }
        }
    }
    let mut tasks = Vec::new();
    for t in &raw.tasks {
        if let Some(task) = validate_task(&mut loc, space.as_ref(), &raw.symbols, &symbols, t) {
            tasks.push(task);
        }
    }
    match (loc.errors.is_empty(), space) {
        (true, Some(space)) => Ok(Scenario {
            id: raw.id.into_inner(),
            description: raw.description,
            space,
            symbols,
            tasks,
        }),
        _ => Err(ScenarioErrors(loc.errors)),
    }
}

fn parse_exponent(loc: &mut Locator, p: &Option<Spanned<Value>>, fallback: &Range<usize>) -> Option<Exponent> {
    let Some(p) = p else {
        loc.push(ErrorCode::ParameterRange, fallback.clone(), "space needs an exponent p");
        return None;
    };
    let text = match p.get_ref() {
        Value::Integer(i) => i.to_string(),
        Value::String(s) => s.clone(),
        other => {
            loc.push(ErrorCode::BadRational, p.span(), format!("p must be a string or integer, got {}", other.type_str()));
            return None;
        }
    };
    match text.parse::<Exponent>() {
        Ok(e) => Some(e),
        Err(e) => {
            loc.push(ErrorCode::ParameterRange, p.span(), e.to_string());
            None
        }
    }
}

fn validate_space(loc: &mut Locator, raw: &Spanned<RawSpace>) -> Option<Space> {
    let span = raw.span();
    let r = raw.get_ref();
    match r.kind.get_ref().as_str() {
        "lp" => Some(Space::Lp {
            p: parse_exponent(loc, &r.p, &span)?,
        }),
        "atomic" => {
            let p = match &r.p {
                Some(_) => parse_exponent(loc, &r.p, &span)?,
                None => Exponent::Two,
            };
            let Some(atoms) = &r.atoms else {
                loc.push(ErrorCode::InvalidSymbol, span, "atomic space needs an atoms list");
                return None;
            };
            let mut list = Vec::new();
            let mut ok = true;
            for a in atoms {
                let a = a.get_ref();
                let Some(id) = value_key(a.id.get_ref()) else {
                    loc.push(ErrorCode::InvalidSymbol, a.id.span(), "atom id must be a string or integer");
                    ok = false;
                    continue;
                };
                let Some(mass) = loc.rational(&a.mass, "mass") else {
                    ok = false;
                    continue;
                };
                if mass.is_negative() {
                    loc.push(ErrorCode::NegativeMass, a.mass.span(), format!("atom {id:?} has negative mass"));
                    ok = false;
                } else if mass.is_zero() {
                    loc.push(ErrorCode::ZeroMass, a.mass.span(), format!("atom {id:?} has zero mass"));
                    ok = false;
                }
                list.push(Atom { id, mass });
            }
            if !ok {
                return None;
            }
            match AtomicMeasureSpace::new(list) {
                Ok(space) => Some(Space::Atomic { p, space }),
                Err(e) => {
                    let code = match e {
                        FunctionSpaceError::DuplicateAtom(_) => ErrorCode::DuplicateAtom,
                        _ => ErrorCode::InvalidSymbol,
                    };
                    loc.push(code, span, e.to_string());
                    None
                }
            }
        }
        "cx" => {
            let (Some(a), Some(b), Some(points)) = (&r.a, &r.b, &r.points) else {
                loc.push(ErrorCode::InvalidSymbol, span, "cx space needs a, b and points");
                return None;
            };
            let a = loc.rational(a, "a")?;
            let b = loc.rational(b, "b")?;
            let points = loc.ranged(points, 3, 1_000_000, "points")? as usize;
            if a >= b {
                loc.push(ErrorCode::ParameterRange, span, "cx space needs a < b");
                return None;
            }
            Some(Space::Cx { a, b, points })
        }
        other => {
            loc.push(
                ErrorCode::UnknownSpaceKind,
                r.kind.span(),
                format!("unknown space kind {other:?}; expected lp, atomic or cx"),
            );
            None
        }
    }
}

fn formula_params(loc: &mut Locator, f: &Spanned<RawFormula>, count: Range<usize>) -> bool {
    let n = f.get_ref().params.len();
    if !count.contains(&n) {
        loc.push(
            ErrorCode::BadTailParams,
            f.span(),
            format!(
                "{} takes {} parameter(s), got {n}",
                f.get_ref().kind.get_ref(),
                if count.len() == 1 {
                    count.start.to_string()
                } else {
                    format!("{}..{}", count.start, count.end - 1)
                }
            ),
        );
        return false;
    }
    true
}

fn map_tail(loc: &mut Locator, f: &Spanned<RawFormula>) -> Option<MapTail> {
    let r = f.get_ref();
    let kind = r.kind.get_ref().as_str();
    let count = match kind {
        "shift" | "power" | "const" => 1..2,
        "block" => 1..3,
        other => {
            loc.push(
                ErrorCode::UnknownTailKind,
                r.kind.span(),
                format!("unknown map tail kind {other:?}; expected shift, block, power or const"),
            );
            return None;
        }
    };
    if !formula_params(loc, f, count) {
        return None;
    }
    let ints: Vec<u64> = r
        .params
        .iter()
        .map(|v| loc.nonneg_int(v, "tail parameter"))
        .collect::<Option<_>>()?;
    Some(match kind {
        "shift" => MapTail::Shift(ints[0]),
        "block" => MapTail::Block {
            d: ints[0],
            c: ints.get(1).copied().unwrap_or(0),
        },
        "power" => MapTail::Power(u32::try_from(ints[0]).unwrap_or(u32::MAX)),
        _ => MapTail::Const(ints[0]),
    })
}

fn weight_tail(loc: &mut Locator, f: &Spanned<RawFormula>) -> Option<WeightTail> {
    let r = f.get_ref();
    let kind = r.kind.get_ref().as_str();
    let count = match kind {
        "const" | "inv" => 1..2,
        "c_plus_inv" | "geom" => 2..3,
        other => {
            loc.push(
                ErrorCode::UnknownTailKind,
                r.kind.span(),
                format!("unknown weight tail kind {other:?}; expected const, c_plus_inv, inv or geom"),
            );
            return None;
        }
    };
    if !formula_params(loc, f, count) {
        return None;
    }
    let qs: Vec<Q> = r
        .params
        .iter()
        .map(|v| loc.rational(v, "tail parameter"))
        .collect::<Option<_>>()?;
    Some(match kind {
        "const" => WeightTail::Const(qs[0].clone()),
        "inv" => WeightTail::Inv(qs[0].clone()),
        "c_plus_inv" => WeightTail::CPlusInv {
            c: qs[0].clone(),
            a: qs[1].clone(),
        },
        _ => WeightTail::Geom {
            a: qs[0].clone(),
            r: qs[1].clone(),
        },
    })
}

fn closed_form(loc: &mut Locator, f: &Spanned<RawFormula>) -> Option<ClosedForm> {
    let r = f.get_ref();
    let kind = r.kind.get_ref().as_str();
    let count = match kind {
        "affine" => 2..3,
        "monomial" | "const" => 1..2,
        other => {
            loc.push(
                ErrorCode::UnknownTailKind,
                r.kind.span(),
                format!("unknown closed form {other:?}; expected affine, monomial or const"),
            );
            return None;
        }
    };
    if !formula_params(loc, f, count) {
        return None;
    }
    match kind {
        "monomial" => {
            let k = loc.nonneg_int(&r.params[0], "exponent")?;
            Some(ClosedForm::Monomial {
                k: u32::try_from(k).unwrap_or(u32::MAX),
            })
        }
        "affine" => Some(ClosedForm::Affine {
            alpha: Rational(loc.rational(&r.params[0], "alpha")?),
            beta: Rational(loc.rational(&r.params[1], "beta")?),
        }),
        _ => Some(ClosedForm::Const {
            c: Rational(loc.rational(&r.params[0], "c")?),
        }),
    }
}

fn tail_start(loc: &mut Locator, sym: &RawSymbol, fallback: u64) -> Option<u64> {
    match &sym.tail_start {
        None => Some(fallback),
        Some(ts) => loc.ranged(ts, 1, i64::MAX, "tail_start").map(|v| v as u64),
    }
}

fn validate_symbol(loc: &mut Locator, space: &Space, name: &str, raw: &Spanned<RawSymbol>) -> Option<Symbol> {
    let span = raw.span();
    let sym = raw.get_ref();
    let ty = sym.ty.get_ref().as_str();
    let allowed: &[&str] = match space {
        Space::Lp { .. } => &["weight", "map", "c0"],
        Space::Atomic { .. } => &["simple", "atom_map"],
        Space::Cx { .. } => &["grid"],
    };
    let known = ["weight", "map", "c0", "simple", "atom_map", "grid"];
    if !known.contains(&ty) {
        loc.push(
            ErrorCode::UnknownSymbolType,
            sym.ty.span(),
            format!("symbol {name:?} has unknown type {ty:?}"),
        );
        return None;
    }
    if !allowed.contains(&ty) {
        loc.push(
            ErrorCode::SymbolSpaceMismatch,
            sym.ty.span(),
            format!("symbol {name:?} of type {ty} cannot live on a {} space", space.kind()),
        );
        return None;
    }
    let need_tail = |loc: &mut Locator| {
        if sym.tail.is_none() {
            loc.push(ErrorCode::InvalidSymbol, span.clone(), format!("symbol {name:?} needs a tail"));
        }
        sym.tail.as_ref()
    };
    let fallback_start = sym
        .exceptions
        .keys()
        .filter_map(|k| k.parse::<u64>().ok())
        .max()
        .map_or(1, |k| k + 1);
    let invalid = |loc: &mut Locator, msg: String| {
        loc.push(ErrorCode::InvalidSymbol, span.clone(), format!("symbol {name:?}: {msg}"));
    };
    match ty {
        "map" => {
            let raw_tail = need_tail(loc)?;
            let tail = map_tail(loc, raw_tail)?;
            let ts = tail_start(loc, sym, fallback_start)?;
            let mut ex = BTreeMap::new();
            for (k, v) in &sym.exceptions {
                let Ok(key) = k.parse::<u64>() else {
                    loc.push(ErrorCode::InvalidSymbol, v.span(), format!("exception key {k:?} is not a positive integer"));
                    return None;
                };
                ex.insert(key, loc.positive_int(v, "map value")?);
            }
            match SelfMap::new(ex, ts, tail) {
                Ok(m) => Some(Symbol::Map(m)),
                Err(e) => {
                    invalid(loc, e.to_string());
                    None
                }
            }
        }
        "weight" | "c0" => {
            let raw_tail = need_tail(loc)?;
            let tail = weight_tail(loc, raw_tail)?;
            let ts = tail_start(loc, sym, fallback_start)?;
            let mut ex = BTreeMap::new();
            for (k, v) in &sym.exceptions {
                let Ok(key) = k.parse::<u64>() else {
                    loc.push(ErrorCode::InvalidSymbol, v.span(), format!("exception key {k:?} is not a positive integer"));
                    return None;
                };
                ex.insert(key, loc.rational(v, "weight value")?);
            }
            let seq = match WeightSeq::new(ex, ts, tail) {
                Ok(s) => s,
                Err(e) => {
                    invalid(loc, e.to_string());
                    return None;
                }
            };
            if ty == "weight" {
                return Some(Symbol::Weight(seq));
            }
            match C0Sequence::new(seq) {
                Ok(y) => Some(Symbol::C0(y)),
                Err(e) => {
                    loc.push(ErrorCode::UnknownTailKind, sym.tail.as_ref().map_or(span.clone(), Spanned::span), e.to_string());
                    None
                }
            }
        }
        "simple" => {
            let Space::Atomic { space, .. } = space else { unreachable!() };
            let Some(values) = &sym.values else {
                invalid(loc, "needs a values table".into());
                return None;
            };
            let mut map = BTreeMap::new();
            for (k, v) in values {
                if space.index_of(k).is_err() {
                    loc.push(ErrorCode::UnknownAtom, v.span(), format!("unknown atom {k:?}"));
                    return None;
                }
                map.insert(k.clone(), loc.rational(v, "value")?);
            }
            match SimpleFunction::from_map(space, &map) {
                Ok(h) => Some(Symbol::Simple(h)),
                Err(e) => {
                    invalid(loc, e.to_string());
                    None
                }
            }
        }
        "atom_map" => {
            let Space::Atomic { space, .. } = space else { unreachable!() };
            let Some(image) = &sym.image else {
                invalid(loc, "needs an image table".into());
                return None;
            };
            let mut map = BTreeMap::new();
            for (k, v) in image {
                let target = value_key(v.get_ref());
                match target {
                    Some(t) if space.index_of(k).is_ok() && space.index_of(&t).is_ok() => {
                        map.insert(k.clone(), t);
                    }
                    _ => {
                        loc.push(ErrorCode::UnknownAtom, v.span(), format!("mapping {k:?} -> {} names an unknown atom", v.get_ref()));
                        return None;
                    }
                }
            }
            match AtomMap::from_map(space, &map) {
                Ok(m) => Some(Symbol::AtomMap(m)),
                Err(e) => {
                    invalid(loc, e.to_string());
                    None
                }
            }
        }
        _ => {
            let Space::Cx { a, b, points } = space else { unreachable!() };
            let built = match (&sym.closed_form, &sym.samples) {
                (Some(cf), None) => {
                    let form = closed_form(loc, cf)?;
                    GridFunction::from_closed_form(a.clone(), b.clone(), *points, form)
                }
                (None, Some(samples)) => {
                    if samples.len() != *points {
                        invalid(loc, format!("has {} samples but the grid has {points} points", samples.len()));
                        return None;
                    }
                    let values: Vec<Q> = samples
                        .iter()
                        .map(|v| loc.rational(v, "sample"))
                        .collect::<Option<_>>()?;
                    GridFunction::new(a.clone(), b.clone(), values)
                }
                _ => {
                    invalid(loc, "needs exactly one of closed_form or samples".into());
                    return None;
                }
            };
            match built {
                Ok(g) => Some(Symbol::Grid(g)),
                Err(e) => {
                    invalid(loc, e.to_string());
                    None
                }
            }
        }
    }
}

fn choice<T: Copy>(loc: &mut Locator, v: &Option<Spanned<String>>, options: &[(&str, T)], what: &str) -> Result<Option<T>, ()> {
    let Some(v) = v else { return Ok(None) };
    match options.iter().find(|(name, _)| name == v.get_ref()) {
        Some((_, t)) => Ok(Some(*t)),
        None => {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            loc.push(
                ErrorCode::UnknownChoice,
                v.span(),
                format!("unknown {what} {:?}; expected one of {}", v.get_ref(), names.join(", ")),
            );
            Err(())
        }
    }
}

fn validate_task(
    loc: &mut Locator,
    space: Option<&Space>,
    raw_symbols: &BTreeMap<String, Spanned<RawSymbol>>,
    symbols: &BTreeMap<String, Symbol>,
    raw: &Spanned<RawTask>,
) -> Option<Task> {
    let line = loc.line(&raw.span());
    let t = raw.get_ref();
    let Some(kind) = TaskKind::parse(t.kind.get_ref()) else {
        let names: Vec<&str> = TaskKind::ALL.iter().map(|k| k.as_str()).collect();
        loc.push(
            ErrorCode::UnknownTaskKind,
            t.kind.span(),
            format!("unknown task kind {:?}; expected one of {}", t.kind.get_ref(), names.join(", ")),
        );
        return None;
    };
    let before = loc.errors.len();
    let mut params = TaskParams::default();
    if let Some(n) = &t.n {
        params.n = loc.ranged(n, 1, MAX_DIMENSION as i64, "n").map(|v| v as usize);
    }
    if let Some(n) = &t.n_max {
        params.n_max = loc.ranged(n, 1, MAX_DIMENSION as i64, "n_max").map(|v| v as u64);
    }
    if let Some(x) = &t.x0 {
        params.x0 = loc.ranged(x, 0, i64::MAX, "x0").map(|v| v as usize);
        if let (Some(x0), Some(Space::Cx { points, .. })) = (params.x0, space) {
            if x0 >= *points {
                loc.push(ErrorCode::ParameterRange, x.span(), format!("x0 = {x0} is not a grid index below {points}"));
            }
        }
    }
    if let Some(tol) = &t.tol {
        if let Some(q) = loc.rational(tol, "tol") {
            if q.is_negative() {
                loc.push(ErrorCode::ParameterRange, tol.span(), "tol must be non-negative");
            }
            params.tol = Some(q);
        }
    }
    if let Some(sizes) = &t.sizes {
        let parsed: Vec<usize> = sizes
            .iter()
            .filter_map(|s| loc.ranged(s, 1, MAX_DIMENSION as i64, "size").map(|v| v as usize))
            .collect();
        params.sizes = Some(parsed);
    }
    if let Some(probes) = &t.probes {
        let mut list = Vec::new();
        for p in probes {
            match Probe::parse(p.get_ref()) {
                Some(pr) => list.push(pr),
                None => loc.push(
                    ErrorCode::UnknownProbe,
                    p.span(),
                    format!("unknown probe {:?}; expected e<k>, harmonic, geometric or ones", p.get_ref()),
                ),
            }
        }
        params.probes = Some(list);
    }
    params.side = choice(loc, &t.side, &[("left", Side::Left), ("right", Side::Right)], "side").ok()?;
    params.operator = choice(
        loc,
        &t.operator,
        &[
            ("identity", OperatorChoice::Identity),
            ("backward_shift", OperatorChoice::BackwardShift),
            ("weighted", OperatorChoice::Weighted),
            ("diagonal", OperatorChoice::Diagonal),
        ],
        "operator",
    )
    .ok()?;
    params.rule = choice(
        loc,
        &t.rule,
        &[
            ("tail_projection", SequenceChoice::TailProjection),
            ("single_hole", SequenceChoice::SingleHole),
            ("diagonal_tail", SequenceChoice::DiagonalTail),
        ],
        "sequence rule",
    )
    .ok()?;
    params.demo = choice(
        loc,
        &t.demo,
        &[
            ("strong", DemoChoice::Strong),
            ("diagonal", DemoChoice::Diagonal),
            ("implies_strong", DemoChoice::ImpliesStrong),
        ],
        "demo",
    )
    .ok()?;
    let mut reference = |field: &Option<Spanned<String>>, wanted: &[&str]| -> Option<String> {
        let r = field.as_ref()?;
        let name = r.get_ref();
        match (symbols.get(name), raw_symbols.contains_key(name)) {
            (Some(s), _) if wanted.contains(&s.type_name()) => Some(name.clone()),
            (Some(s), _) => {
                loc.push(
                    ErrorCode::SymbolType,
                    r.span(),
                    format!("symbol {name:?} is a {}, expected {}", s.type_name(), wanted.join(" or ")),
                );
                None
            }
            // Defined but invalid: its own error is already reported.
            (None, true) => None,
            (None, false) => {
                loc.push(ErrorCode::UndefinedSymbol, r.span(), format!("task references undefined symbol {name:?}"));
                None
            }
        }
    };
    params.weight = reference(&t.weight, &["weight", "simple"]);
    params.map = reference(&t.map, &["map", "atom_map"]);
    params.sequence = reference(&t.sequence, &["c0"]);
    params.function = reference(&t.function, &["grid", "simple"]);
    (loc.errors.len() == before).then_some(Task { kind, line, params })
}
