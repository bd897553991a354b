//! Causal formulas: Boolean combinations of `[Y1<-y1, ...] phi`, where `phi`
//! is a Boolean combination of primitive events `X=x`.
//!
//! Formulas are parsed over variable names and later bound to a model,
//! which resolves names to [`VarId`]s and checks ranges.

use std::fmt;

use crate::lexer::{Cursor, ParseError, Tok};
use crate::model::{CausalModel, Context, Intervention, ModelError, VarId};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum EventFormula<V> {
    Event(V, i64),
    Not(Box<EventFormula<V>>),
    And(Box<EventFormula<V>>, Box<EventFormula<V>>),
    Or(Box<EventFormula<V>>, Box<EventFormula<V>>),
}

/// `[Y1 <- y1, ..., Yk <- yk] body`; `k = 0` is the plain event formula.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BasicFormula<V> {
    pub intervention: Vec<(V, i64)>,
    pub body: EventFormula<V>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CausalFormula<V> {
    Basic(BasicFormula<V>),
    Not(Box<CausalFormula<V>>),
    And(Box<CausalFormula<V>>, Box<CausalFormula<V>>),
    Or(Box<CausalFormula<V>>, Box<CausalFormula<V>>),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum FormulaError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("unknown variable `{0}` in formula")]
    UnknownVariable(String),
    #[error("`{0}` is exogenous; formulas may only mention endogenous variables")]
    NotEndogenous(String),
    #[error("value {value} is not in the range of `{var}`")]
    ValueOutOfRange { var: String, value: i64 },
    #[error("`{0}` is intervened on twice")]
    DuplicateIntervention(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl<V> EventFormula<V> {
    pub fn event(v: V, value: i64) -> Self {
        EventFormula::Event(v, value)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Self) -> Self {
        EventFormula::Not(Box::new(f))
    }

    pub fn and(a: Self, b: Self) -> Self {
        EventFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Self, b: Self) -> Self {
        EventFormula::Or(Box::new(a), Box::new(b))
    }

    /// Left-nested conjunction; `None` when `items` is empty.
    pub fn all(items: impl IntoIterator<Item = Self>) -> Option<Self> {
        items.into_iter().reduce(Self::and)
    }

    /// Left-nested disjunction; `None` when `items` is empty.
    pub fn any(items: impl IntoIterator<Item = Self>) -> Option<Self> {
        items.into_iter().reduce(Self::or)
    }

    pub fn for_each_event<'a>(&'a self, f: &mut impl FnMut(&'a V, i64)) {
        match self {
            EventFormula::Event(v, x) => f(v, *x),
            EventFormula::Not(a) => a.for_each_event(f),
            EventFormula::And(a, b) | EventFormula::Or(a, b) => {
                a.for_each_event(f);
                b.for_each_event(f);
            }
        }
    }

    pub fn try_map_vars<W, E>(
        &self,
        f: &mut impl FnMut(&V, i64) -> Result<W, E>,
    ) -> Result<EventFormula<W>, E> {
        Ok(match self {
            EventFormula::Event(v, x) => EventFormula::Event(f(v, *x)?, *x),
            EventFormula::Not(a) => EventFormula::Not(Box::new(a.try_map_vars(f)?)),
            EventFormula::And(a, b) => {
                EventFormula::And(Box::new(a.try_map_vars(f)?), Box::new(b.try_map_vars(f)?))
            }
            EventFormula::Or(a, b) => {
                EventFormula::Or(Box::new(a.try_map_vars(f)?), Box::new(b.try_map_vars(f)?))
            }
        })
    }
}

impl EventFormula<VarId> {
    pub fn holds(&self, values: &[i64]) -> bool {
        match self {
            EventFormula::Event(v, x) => values[v.0] == *x,
            EventFormula::Not(a) => !a.holds(values),
            EventFormula::And(a, b) => a.holds(values) && b.holds(values),
            EventFormula::Or(a, b) => a.holds(values) || b.holds(values),
        }
    }

    pub fn vars(&self) -> Vec<VarId> {
        let mut out = Vec::new();
        self.for_each_event(&mut |v, _| out.push(*v));
        out.sort();
        out.dedup();
        out
    }

    /// Renders with the model's variable names.
    pub fn named(&self, model: &CausalModel) -> EventFormula<String> {
        self.try_map_vars(&mut |v, _| Ok::<_, ()>(model.name(*v).to_string()))
            .expect("infallible")
    }
}

fn bind_var(model: &CausalModel, name: &str, value: i64) -> Result<VarId, FormulaError> {
    let v = model
        .lookup(name)
        .ok_or_else(|| FormulaError::UnknownVariable(name.to_string()))?;
    if !model.signature().is_endogenous(v) {
        return Err(FormulaError::NotEndogenous(name.to_string()));
    }
    if !model.signature().decl(v).contains(value) {
        return Err(FormulaError::ValueOutOfRange {
            var: name.to_string(),
            value,
        });
    }
    Ok(v)
}

impl EventFormula<String> {
    pub fn bind(&self, model: &CausalModel) -> Result<EventFormula<VarId>, FormulaError> {
        self.try_map_vars(&mut |n, x| bind_var(model, n, x))
    }
}

impl BasicFormula<String> {
    pub fn bind(&self, model: &CausalModel) -> Result<BasicFormula<VarId>, FormulaError> {
        let mut intervention: Vec<(VarId, i64)> = Vec::with_capacity(self.intervention.len());
        for (name, x) in &self.intervention {
            let v = bind_var(model, name, *x)?;
            if intervention.iter().any(|(w, _)| *w == v) {
                return Err(FormulaError::DuplicateIntervention(name.clone()));
            }
            intervention.push((v, *x));
        }
        Ok(BasicFormula {
            intervention,
            body: self.body.bind(model)?,
        })
    }
}

impl CausalFormula<String> {
    pub fn bind(&self, model: &CausalModel) -> Result<CausalFormula<VarId>, FormulaError> {
        Ok(match self {
            CausalFormula::Basic(b) => CausalFormula::Basic(b.bind(model)?),
            CausalFormula::Not(a) => CausalFormula::Not(Box::new(a.bind(model)?)),
            CausalFormula::And(a, b) => {
                CausalFormula::And(Box::new(a.bind(model)?), Box::new(b.bind(model)?))
            }
            CausalFormula::Or(a, b) => {
                CausalFormula::Or(Box::new(a.bind(model)?), Box::new(b.bind(model)?))
            }
        })
    }
}

impl CausalFormula<VarId> {
    pub fn eval(&self, model: &CausalModel, ctx: &Context) -> Result<bool, FormulaError> {
        Ok(match self {
            CausalFormula::Basic(b) => {
                let iv = Intervention::from_pairs(b.intervention.iter().copied());
                let solved = model.solve(ctx, &iv)?;
                b.body.holds(solved.values())
            }
            CausalFormula::Not(a) => !a.eval(model, ctx)?,
            CausalFormula::And(a, b) => a.eval(model, ctx)? && b.eval(model, ctx)?,
            CausalFormula::Or(a, b) => a.eval(model, ctx)? || b.eval(model, ctx)?,
        })
    }
}

/// `(M, u) |= formula`.
pub fn eval_formula(
    model: &CausalModel,
    ctx: &Context,
    formula: &CausalFormula<VarId>,
) -> Result<bool, FormulaError> {
    formula.eval(model, ctx)
}

// ---------------------------------------------------------------- parsing

pub fn parse_formula(text: &str) -> Result<CausalFormula<String>, ParseError> {
    let mut cur = Cursor::new(text)?;
    let f = causal_or(&mut cur)?;
    cur.expect_eof()?;
    Ok(f)
}

pub fn parse_event_formula(text: &str) -> Result<EventFormula<String>, ParseError> {
    let mut cur = Cursor::new(text)?;
    let f = event_formula(&mut cur)?;
    cur.expect_eof()?;
    Ok(f)
}

/// Parses an event formula from the middle of a larger token stream.
pub fn event_formula(cur: &mut Cursor) -> Result<EventFormula<String>, ParseError> {
    let mut lhs = event_and(cur)?;
    while cur.accept_sym("|") {
        lhs = EventFormula::or(lhs, event_and(cur)?);
    }
    Ok(lhs)
}

fn event_and(cur: &mut Cursor) -> Result<EventFormula<String>, ParseError> {
    let mut lhs = event_unary(cur)?;
    while cur.accept_sym("&") {
        lhs = EventFormula::and(lhs, event_unary(cur)?);
    }
    Ok(lhs)
}

fn event_unary(cur: &mut Cursor) -> Result<EventFormula<String>, ParseError> {
    if cur.accept_sym("!") {
        return Ok(EventFormula::not(event_unary(cur)?));
    }
    if cur.accept_sym("(") {
        let f = event_formula(cur)?;
        cur.expect_sym(")")?;
        return Ok(f);
    }
    atom(cur)
}

fn atom(cur: &mut Cursor) -> Result<EventFormula<String>, ParseError> {
    if !matches!(cur.peek(), Tok::Ident(_)) {
        return Err(cur.unexpected("a primitive event `NAME=INT`"));
    }
    let (name, _) = cur.expect_ident()?;
    cur.expect_sym("=")?;
    let (value, _) = cur.expect_int()?;
    Ok(EventFormula::Event(name, value))
}

fn causal_or(cur: &mut Cursor) -> Result<CausalFormula<String>, ParseError> {
    let mut lhs = causal_and(cur)?;
    while cur.accept_sym("|") {
        lhs = CausalFormula::Or(Box::new(lhs), Box::new(causal_and(cur)?));
    }
    Ok(lhs)
}

fn causal_and(cur: &mut Cursor) -> Result<CausalFormula<String>, ParseError> {
    let mut lhs = causal_unary(cur)?;
    while cur.accept_sym("&") {
        lhs = CausalFormula::And(Box::new(lhs), Box::new(causal_unary(cur)?));
    }
    Ok(lhs)
}

fn causal_unary(cur: &mut Cursor) -> Result<CausalFormula<String>, ParseError> {
    if cur.accept_sym("!") {
        return Ok(CausalFormula::Not(Box::new(causal_unary(cur)?)));
    }
    if cur.accept_sym("(") {
        let f = causal_or(cur)?;
        cur.expect_sym(")")?;
        return Ok(f);
    }
    if cur.accept_sym("[") {
        let mut intervention = Vec::new();
        if !cur.is_sym("]") {
            loop {
                let (name, _) = cur.expect_ident()?;
                cur.expect_sym("<-")?;
                let (value, _) = cur.expect_int()?;
                intervention.push((name, value));
                if !cur.accept_sym(",") {
                    break;
                }
            }
        }
        cur.expect_sym("]")?;
        if cur.is_sym("[") {
            return Err(cur.error("nested intervention prefixes are not allowed"));
        }
        let body = event_unary(cur)?;
        return Ok(CausalFormula::Basic(BasicFormula { intervention, body }));
    }
    Ok(CausalFormula::Basic(BasicFormula {
        intervention: Vec::new(),
        body: atom(cur)?,
    }))
}

// ---------------------------------------------------------------- printing

const PREC_OR: u8 = 1;
const PREC_AND: u8 = 2;
const PREC_UNARY: u8 = 3;

fn event_prec<V>(f: &EventFormula<V>) -> u8 {
    match f {
        EventFormula::Or(..) => PREC_OR,
        EventFormula::And(..) => PREC_AND,
        _ => PREC_UNARY,
    }
}

fn write_event<V: fmt::Display>(
    f: &mut fmt::Formatter<'_>,
    e: &EventFormula<V>,
    min_prec: u8,
    strict: bool,
) -> fmt::Result {
    let p = event_prec(e);
    let paren = p < min_prec || (strict && p == min_prec && p != PREC_UNARY);
    if paren {
        write!(f, "(")?;
    }
    match e {
        EventFormula::Event(v, x) => write!(f, "{v}={x}")?,
        EventFormula::Not(a) => {
            write!(f, "!")?;
            write_event(f, a, PREC_UNARY, false)?;
        }
        EventFormula::And(a, b) => {
            write_event(f, a, PREC_AND, false)?;
            write!(f, " & ")?;
            write_event(f, b, PREC_AND, true)?;
        }
        EventFormula::Or(a, b) => {
            write_event(f, a, PREC_OR, false)?;
            write!(f, " | ")?;
            write_event(f, b, PREC_OR, true)?;
        }
    }
    if paren {
        write!(f, ")")?;
    }
    Ok(())
}

impl<V: fmt::Display> fmt::Display for EventFormula<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_event(f, self, PREC_OR, false)
    }
}

impl<V: fmt::Display> fmt::Display for BasicFormula<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervention.is_empty() && matches!(self.body, EventFormula::Event(..)) {
            return write!(f, "{}", self.body);
        }
        write!(f, "[")?;
        for (i, (v, x)) in self.intervention.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}<-{x}")?;
        }
        write!(f, "](")?;
        write_event(f, &self.body, PREC_OR, false)?;
        write!(f, ")")
    }
}

fn causal_prec<V>(f: &CausalFormula<V>) -> u8 {
    match f {
        CausalFormula::Or(..) => PREC_OR,
        CausalFormula::And(..) => PREC_AND,
        _ => PREC_UNARY,
    }
}

fn write_causal<V: fmt::Display>(
    f: &mut fmt::Formatter<'_>,
    c: &CausalFormula<V>,
    min_prec: u8,
    strict: bool,
) -> fmt::Result {
    let p = causal_prec(c);
    let paren = p < min_prec || (strict && p == min_prec && p != PREC_UNARY);
    if paren {
        write!(f, "(")?;
    }
    match c {
        CausalFormula::Basic(b) => write!(f, "{b}")?,
        CausalFormula::Not(a) => {
            write!(f, "!")?;
            write_causal(f, a, PREC_UNARY, false)?;
        }
        CausalFormula::And(a, b) => {
            write_causal(f, a, PREC_AND, false)?;
            write!(f, " & ")?;
            write_causal(f, b, PREC_AND, true)?;
        }
        CausalFormula::Or(a, b) => {
            write_causal(f, a, PREC_OR, false)?;
            write!(f, " | ")?;
            write_causal(f, b, PREC_OR, true)?;
        }
    }
    if paren {
        write!(f, ")")?;
    }
    Ok(())
}

impl<V: fmt::Display> fmt::Display for CausalFormula<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_causal(f, self, PREC_OR, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BinOp, Equation, Expr, ModelBuilder};
    use proptest::prelude::*;

    fn v(n: &str) -> Expr<String> {
        Expr::var(n.to_string())
    }

    fn rock_better() -> CausalModel {
        let mut b = ModelBuilder::new();
        b.exogenous("U", [0, 1])
            .endogenous("ST", [0, 1], Equation::Expr(v("U")))
            .endogenous("BT", [0, 1], Equation::Expr(v("U")))
            .endogenous("SH", [0, 1], Equation::Expr(v("ST")))
            .endogenous(
                "BH",
                [0, 1],
                Equation::Expr(Expr::bin(BinOp::And, v("BT"), Expr::not(v("SH")))),
            )
            .endogenous(
                "BS",
                [0, 1],
                Equation::Expr(Expr::bin(BinOp::Or, v("SH"), v("BH"))),
            );
        b.build().unwrap()
    }

    #[test]
    fn parses_intervention_prefix() {
        let f = parse_formula("[ST<-1, BT<-0](BS=1)").unwrap();
        let CausalFormula::Basic(b) = &f else {
            panic!("{f:?}")
        };
        assert_eq!(b.intervention, vec![("ST".into(), 1), ("BT".into(), 0)]);
        assert_eq!(b.body, EventFormula::Event("BS".into(), 1));
    }

    #[test]
    fn bare_event_has_empty_prefix() {
        let f = parse_formula("BS=1").unwrap();
        assert_eq!(
            f,
            CausalFormula::Basic(BasicFormula {
                intervention: vec![],
                body: EventFormula::Event("BS".into(), 1)
            })
        );
    }

    #[test]
    fn conjunction_of_basic_formulas() {
        let f = parse_formula("[A<-1](B=1) & !(C=2)").unwrap();
        let CausalFormula::And(a, b) = f else {
            panic!()
        };
        assert!(matches!(*a, CausalFormula::Basic(ref x) if x.intervention.len() == 1));
        assert!(matches!(*b, CausalFormula::Not(_)));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_formula("[ST<-1](BS=)").unwrap_err();
        assert_eq!(err.pos.col, 12);
        assert!(parse_formula("[A<-1][B<-0](C=1)").is_err());
        assert!(parse_formula("A=1 &").is_err());
    }

    #[test]
    fn canonical_printing() {
        for s in [
            "[ST<-1, BT<-0](BS=1)",
            "BS=1",
            "[A<-1](B=1) & !C=2",
            "A=1 & (B=1 | C=0)",
            "A=1 & (B=1 & C=0)",
            "[](A=1 & B=-2)",
            "!(A=1 | B=1) | [X<-0](!(Y=1 & Z=2))",
        ] {
            assert_eq!(parse_formula(s).unwrap().to_string(), s);
        }
    }

    #[test]
    fn evaluates_rock_counterfactuals() {
        let m = rock_better();
        let u = m.context([("U", 1)]).unwrap();
        let ev = |s: &str| {
            parse_formula(s)
                .unwrap()
                .bind(&m)
                .unwrap()
                .eval(&m, &u)
                .unwrap()
        };
        assert!(ev("[ST<-0, BT<-0](BS=0)"));
        assert!(!ev("[BT<-1, ST<-0, BH<-0](BS=1)"));
        assert!(ev("BS=1 & SH=1 & BH=0"));
        assert!(ev("!(BH=1)"));
    }

    #[test]
    fn binding_errors() {
        let m = rock_better();
        assert_eq!(
            parse_formula("Q=1").unwrap().bind(&m),
            Err(FormulaError::UnknownVariable("Q".into()))
        );
        assert_eq!(
            parse_formula("U=1").unwrap().bind(&m),
            Err(FormulaError::NotEndogenous("U".into()))
        );
        assert!(matches!(
            parse_formula("BS=2").unwrap().bind(&m),
            Err(FormulaError::ValueOutOfRange { .. })
        ));
        assert!(matches!(
            parse_formula("[ST<-1, ST<-0](BS=1)").unwrap().bind(&m),
            Err(FormulaError::DuplicateIntervention(_))
        ));
    }

    fn arb_event() -> impl Strategy<Value = EventFormula<String>> {
        let leaf = (prop::sample::select(vec!["A", "B", "C"]), -2i64..3)
            .prop_map(|(n, x)| EventFormula::Event(n.to_string(), x));
        leaf.prop_recursive(4, 16, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(EventFormula::not),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| EventFormula::and(a, b)),
                (inner.clone(), inner).prop_map(|(a, b)| EventFormula::or(a, b)),
            ]
        })
    }

    fn arb_causal() -> impl Strategy<Value = CausalFormula<String>> {
        let prefix = prop::collection::vec((prop::sample::select(vec!["A", "B"]), 0i64..2), 0..3);
        let leaf = (prefix, arb_event()).prop_map(|(prefix, body)| {
            let intervention = prefix
                .into_iter()
                .map(|(n, x)| (n.to_string(), x))
                .collect();
            CausalFormula::Basic(BasicFormula { intervention, body })
        });
        leaf.prop_recursive(3, 12, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|a| CausalFormula::Not(Box::new(a))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| CausalFormula::And(Box::new(a), Box::new(b))),
                (inner.clone(), inner)
                    .prop_map(|(a, b)| CausalFormula::Or(Box::new(a), Box::new(b))),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_then_parse_is_identity(f in arb_causal()) {
            let text = f.to_string();
            let back = parse_formula(&text).unwrap();
            prop_assert_eq!(&back, &f);
            prop_assert_eq!(back.to_string(), text);
        }

        #[test]
        fn event_print_then_parse_is_identity(f in arb_event()) {
            prop_assert_eq!(parse_event_formula(&f.to_string()).unwrap(), f);
        }
    }
}
