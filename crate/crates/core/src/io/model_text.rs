//! The `.scm` model format.
//!
//! ```text
//! model rock;
//! exogenous U : {0, 1};
//! endogenous ST : {0, 1} = U;
//! endogenous BS : {0, 1} = ST || BT;
//! endogenous Y  : {0..3} = table(ST, BT) { 0,0 -> 0; 0,1 -> 1; 1,0 -> 2; 1,1 -> 3; };
//! context both_throw { U = 1; }
//! forbid { ST = 0, BT = 1 }
//! weights { ST = 2; BT = 1/2; }
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::causality::AllowabilityPolicy;
use crate::lexer::{Cursor, ParseError, Pos, Tok};
use crate::model::{
    BinOp, CausalModel, Context, Equation, Expr, ModelBuilder, ModelError, Table, UnOp,
};
use crate::rational::Rational;
use crate::responsibility::{NonPositiveWeight, WeightTable};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RangeItem {
    Value(i64),
    Labeled(String, i64),
    /// Inclusive `lo..hi`.
    Span(i64, i64),
}

/// A value written either as an integer or as a label of the variable's range.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Int(i64),
    Label(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Item {
    Exogenous {
        name: String,
        range: Vec<RangeItem>,
    },
    Endogenous {
        name: String,
        range: Vec<RangeItem>,
        equation: Equation<String>,
    },
    Context {
        name: String,
        values: Vec<(String, Value)>,
    },
    Forbid(Vec<(String, Value)>),
    Weights(Vec<(String, Rational)>),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ModelDocument {
    pub name: Option<String>,
    pub items: Vec<Item>,
}

/// A model file turned into objects the engine works with.
#[derive(Clone, Debug)]
pub struct LoadedModel {
    pub name: Option<String>,
    pub model: Arc<CausalModel>,
    pub contexts: Vec<(String, Context)>,
    pub policy: AllowabilityPolicy,
    pub weights: WeightTable,
}

impl LoadedModel {
    pub fn context(&self, name: &str) -> Option<&Context> {
        self.contexts
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c)
    }

    pub fn context_names(&self) -> impl Iterator<Item = &str> {
        self.contexts.iter().map(|(n, _)| n.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum LoadError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Weight(#[from] NonPositiveWeight),
}

pub fn expand_range(items: &[RangeItem]) -> (Vec<i64>, Vec<(String, i64)>) {
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for item in items {
        match item {
            RangeItem::Value(v) => values.push(*v),
            RangeItem::Labeled(l, v) => {
                values.push(*v);
                labels.push((l.clone(), *v));
            }
            RangeItem::Span(lo, hi) => values.extend(*lo..=*hi),
        }
    }
    (values, labels)
}

impl ModelDocument {
    pub fn load(&self) -> Result<LoadedModel, LoadError> {
        let mut b = ModelBuilder::new();
        for item in &self.items {
            let range = match item {
                Item::Exogenous { name, range } => {
                    b.exogenous(name, expand_range(range).0);
                    range
                }
                Item::Endogenous {
                    name,
                    range,
                    equation,
                } => {
                    b.endogenous(name, expand_range(range).0, equation.clone());
                    range
                }
                _ => continue,
            };
            for (l, v) in expand_range(range).1 {
                b.label(&l, v);
            }
        }
        let model = b.build()?;
        let value = |var: &str, v: &Value| -> Result<i64, ModelError> {
            match v {
                Value::Int(n) => Ok(*n),
                Value::Label(l) => {
                    let id = model
                        .lookup(var)
                        .ok_or_else(|| ModelError::UnknownVariable(var.to_string()))?;
                    model
                        .signature()
                        .decl(id)
                        .label_value(l)
                        .ok_or_else(|| ModelError::UnknownVariable(format!("{var}.{l}")))
                }
            }
        };
        let mut contexts = Vec::new();
        let mut policy = AllowabilityPolicy::unrestricted();
        let mut weights = WeightTable::new();
        for item in &self.items {
            match item {
                Item::Context { name, values } => {
                    let pairs = values
                        .iter()
                        .map(|(n, v)| Ok((n.as_str(), value(n, v)?)))
                        .collect::<Result<Vec<_>, ModelError>>()?;
                    contexts.push((name.clone(), model.context(pairs)?));
                }
                Item::Forbid(pattern) => {
                    let mut bound = Vec::new();
                    for (n, v) in pattern {
                        let x = value(n, v)?;
                        let id = model.endogenous_var(n)?;
                        model.check_value(id, x)?;
                        bound.push((n.clone(), x));
                    }
                    policy.forbidden.push(bound);
                }
                Item::Weights(ws) => {
                    for (n, w) in ws {
                        model.endogenous_var(n)?;
                        weights.set(n, w.clone())?;
                    }
                }
                _ => {}
            }
        }
        Ok(LoadedModel {
            name: self.name.clone(),
            model: Arc::new(model),
            contexts,
            policy,
            weights,
        })
    }
}

// ------------------------------------------------------------------ parsing

/// Kind (endogenous?), values, labels and declaration position.
type Declared = (bool, Vec<i64>, Vec<(String, i64)>, Pos);

#[derive(Default)]
struct Names {
    /// Declared variables with their kind, values, labels and position.
    vars: HashMap<String, Declared>,
    contexts: HashMap<String, Pos>,
    /// Names used in equations, checked once every declaration is known.
    refs: Vec<(String, Pos)>,
    values: Vec<ValueRef>,
}

/// A use of a variable outside equations, checked after parsing.
pub(crate) struct ValueRef {
    var: String,
    /// `None` when only the name needs checking.
    value: Option<Value>,
    pos: Pos,
    endogenous: bool,
}

pub fn parse_model(text: &str) -> Result<ModelDocument, ParseError> {
    let mut cur = Cursor::new(text)?;
    let mut names = Names::default();
    let doc = model_body(&mut cur, &mut names, None)?;
    cur.expect_eof()?;
    check_names(&names)?;
    Ok(doc)
}

/// Parses items until `close` (or end of input when `None`); used directly
/// for inline models in scenario files.
pub(crate) fn parse_model_items(
    cur: &mut Cursor,
    close: &'static str,
) -> Result<ModelDocument, ParseError> {
    let mut names = Names::default();
    let doc = model_body(cur, &mut names, Some(close))?;
    check_names(&names)?;
    Ok(doc)
}

fn model_body(
    cur: &mut Cursor,
    names: &mut Names,
    close: Option<&'static str>,
) -> Result<ModelDocument, ParseError> {
    let mut doc = ModelDocument::default();
    let done = |cur: &Cursor| match close {
        Some(c) => cur.is_sym(c),
        None => cur.at_eof(),
    };
    if close.is_none() && cur.is_keyword("model") {
        cur.bump();
        doc.name = Some(cur.expect_ident()?.0);
        cur.expect_sym(";")?;
    }
    while !done(cur) {
        if cur.at_eof() {
            return Err(cur.unexpected(&format!("`{}`", close.unwrap_or(""))));
        }
        doc.items.push(item(cur, names)?);
    }
    Ok(doc)
}

fn item(cur: &mut Cursor, names: &mut Names) -> Result<Item, ParseError> {
    let pos = cur.pos();
    if cur.accept_keyword("exogenous") {
        let (name, npos) = cur.expect_ident()?;
        cur.expect_sym(":")?;
        let range = range(cur)?;
        cur.expect_sym(";")?;
        declare(names, &name, false, &range, npos)?;
        return Ok(Item::Exogenous { name, range });
    }
    if cur.accept_keyword("endogenous") {
        let (name, npos) = cur.expect_ident()?;
        cur.expect_sym(":")?;
        let range = range(cur)?;
        cur.expect_sym("=")?;
        let equation = if cur.is_keyword("table") && matches!(cur.peek_at(1), Tok::Sym("(")) {
            Equation::Table(table(cur, names)?)
        } else {
            Equation::Expr(expr(cur, names)?)
        };
        cur.expect_sym(";")?;
        declare(names, &name, true, &range, npos)?;
        return Ok(Item::Endogenous {
            name,
            range,
            equation,
        });
    }
    if cur.accept_keyword("context") {
        let (name, npos) = cur.expect_ident()?;
        if names.contexts.insert(name.clone(), npos).is_some() {
            return Err(ParseError::new(
                npos,
                format!("context `{name}` is declared twice"),
            ));
        }
        cur.expect_sym("{")?;
        let mut values = Vec::new();
        while !cur.accept_sym("}") {
            let (var, vpos) = cur.expect_ident()?;
            cur.expect_sym("=")?;
            let v = value(cur)?;
            cur.expect_sym(";")?;
            if values.iter().any(|(n, _)| *n == var) {
                return Err(ParseError::new(vpos, format!("`{var}` is assigned twice")));
            }
            names.values.push(ValueRef {
                var: var.clone(),
                value: Some(v.clone()),
                pos: vpos,
                endogenous: false,
            });
            values.push((var, v));
        }
        return Ok(Item::Context { name, values });
    }
    if cur.accept_keyword("forbid") {
        let pattern = forbid_block(cur, &mut names.values)?;
        return Ok(Item::Forbid(pattern));
    }
    if cur.accept_keyword("weights") {
        cur.expect_sym("{")?;
        let mut ws = Vec::new();
        while !cur.accept_sym("}") {
            let (var, vpos) = cur.expect_ident()?;
            cur.expect_sym("=")?;
            let wpos = cur.pos();
            let w = rational(cur)?;
            cur.expect_sym(";")?;
            if !w.is_positive() {
                return Err(ParseError::new(
                    wpos,
                    format!("weight of `{var}` must be positive"),
                ));
            }
            names.values.push(ValueRef {
                var: var.clone(),
                value: None,
                pos: vpos,
                endogenous: true,
            });
            ws.push((var, w));
        }
        return Ok(Item::Weights(ws));
    }
    Err(ParseError::new(
        pos,
        format!(
            "expected `exogenous`, `endogenous`, `context`, `forbid` or `weights`, found {}",
            cur.peek()
        ),
    ))
}

/// `{ V = v, ... }`, shared with scenario files.
pub(crate) fn forbid_block(
    cur: &mut Cursor,
    sink: &mut Vec<ValueRef>,
) -> Result<Vec<(String, Value)>, ParseError> {
    cur.expect_sym("{")?;
    let mut pattern: Vec<(String, Value)> = Vec::new();
    if !cur.is_sym("}") {
        loop {
            let (var, vpos) = cur.expect_ident()?;
            cur.expect_sym("=")?;
            let v = value(cur)?;
            if pattern.iter().any(|(n, _)| *n == var) {
                return Err(ParseError::new(
                    vpos,
                    format!("`{var}` appears twice in the pattern"),
                ));
            }
            sink.push(ValueRef {
                var: var.clone(),
                value: Some(v.clone()),
                pos: vpos,
                endogenous: true,
            });
            pattern.push((var, v));
            if !cur.accept_sym(",") {
                break;
            }
        }
    }
    let close = cur.pos();
    cur.expect_sym("}")?;
    cur.accept_sym(";");
    if pattern.is_empty() {
        return Err(ParseError::new(close, "empty forbid pattern"));
    }
    Ok(pattern)
}

fn declare(
    names: &mut Names,
    name: &str,
    endogenous: bool,
    range: &[RangeItem],
    pos: Pos,
) -> Result<(), ParseError> {
    let (values, labels) = expand_range(range);
    let mut seen = std::collections::HashSet::new();
    for v in &values {
        if !seen.insert(*v) {
            return Err(ParseError::new(
                pos,
                format!("range of `{name}` lists {v} more than once"),
            ));
        }
    }
    if let Some((_, _, _, first)) = names.vars.get(name) {
        return Err(ParseError::new(
            pos,
            format!("`{name}` is already declared at {first}"),
        ));
    }
    names
        .vars
        .insert(name.to_string(), (endogenous, values, labels, pos));
    Ok(())
}

fn check_names(names: &Names) -> Result<(), ParseError> {
    for (n, pos) in &names.refs {
        if !names.vars.contains_key(n) {
            return Err(ParseError::new(*pos, format!("unknown variable `{n}`")));
        }
    }
    for r in &names.values {
        let Some((is_endo, values, labels, _)) = names.vars.get(&r.var) else {
            return Err(ParseError::new(
                r.pos,
                format!("unknown variable `{}`", r.var),
            ));
        };
        if r.endogenous != *is_endo {
            let kind = if r.endogenous {
                "endogenous"
            } else {
                "exogenous"
            };
            return Err(ParseError::new(r.pos, format!("`{}` is not {kind}", r.var)));
        }
        let x = match &r.value {
            None => continue,
            Some(Value::Int(x)) => *x,
            Some(Value::Label(l)) => match labels.iter().find(|(name, _)| name == l) {
                Some((_, x)) => *x,
                None => {
                    return Err(ParseError::new(
                        r.pos,
                        format!("`{l}` is not a label of `{}`", r.var),
                    ))
                }
            },
        };
        if !values.contains(&x) {
            return Err(ParseError::new(
                r.pos,
                format!("value {x} is outside the range of `{}`", r.var),
            ));
        }
    }
    Ok(())
}

fn range(cur: &mut Cursor) -> Result<Vec<RangeItem>, ParseError> {
    cur.expect_sym("{")?;
    let mut items = Vec::new();
    loop {
        if let Tok::Ident(_) = cur.peek() {
            let (label, _) = cur.expect_ident()?;
            cur.expect_sym("=")?;
            let (v, _) = cur.expect_int()?;
            items.push(RangeItem::Labeled(label, v));
        } else {
            let (lo, lpos) = cur.expect_int()?;
            if cur.accept_sym("..") {
                let (hi, _) = cur.expect_int()?;
                if hi < lo {
                    return Err(ParseError::new(lpos, format!("empty span {lo}..{hi}")));
                }
                if hi - lo > 1_000_000 {
                    return Err(ParseError::new(lpos, "span is too large"));
                }
                items.push(RangeItem::Span(lo, hi));
            } else {
                items.push(RangeItem::Value(lo));
            }
        }
        if !cur.accept_sym(",") {
            break;
        }
    }
    cur.expect_sym("}")?;
    Ok(items)
}

fn value(cur: &mut Cursor) -> Result<Value, ParseError> {
    if let Tok::Ident(_) = cur.peek() {
        return Ok(Value::Label(cur.expect_ident()?.0));
    }
    Ok(Value::Int(cur.expect_int()?.0))
}

/// `p` or `p/q`.
pub(crate) fn rational(cur: &mut Cursor) -> Result<Rational, ParseError> {
    let (p, _) = cur.expect_int()?;
    if matches!(cur.peek(), Tok::Sym("..")) || matches!(cur.peek(), Tok::Int(_)) {
        return Err(cur.error("decimals are not accepted; write a fraction such as 1/4"));
    }
    if cur.accept_sym("/") {
        let (q, qpos) = cur.expect_int()?;
        if q <= 0 {
            return Err(ParseError::new(qpos, "denominator must be positive"));
        }
        return Ok(Rational::new(p, q));
    }
    Ok(Rational::from_integer(p))
}

fn table(cur: &mut Cursor, names: &mut Names) -> Result<Table<String>, ParseError> {
    cur.expect_keyword("table")?;
    cur.expect_sym("(")?;
    let mut inputs = Vec::new();
    if !cur.is_sym(")") {
        loop {
            let (n, p) = cur.expect_ident()?;
            names.refs.push((n.clone(), p));
            inputs.push(n);
            if !cur.accept_sym(",") {
                break;
            }
        }
    }
    cur.expect_sym(")")?;
    cur.expect_sym("{")?;
    let mut rows = BTreeMap::new();
    while !cur.accept_sym("}") {
        let rpos = cur.pos();
        let mut key = Vec::new();
        if !cur.is_sym("->") {
            loop {
                key.push(cur.expect_int()?.0);
                if !cur.accept_sym(",") {
                    break;
                }
            }
        }
        if key.len() != inputs.len() {
            return Err(ParseError::new(
                rpos,
                format!("row has {} entries, expected {}", key.len(), inputs.len()),
            ));
        }
        cur.expect_sym("->")?;
        let (out, _) = cur.expect_int()?;
        cur.expect_sym(";")?;
        if rows.insert(key, out).is_some() {
            return Err(ParseError::new(rpos, "duplicate table row"));
        }
    }
    Ok(Table { inputs, rows })
}

fn expr(cur: &mut Cursor, names: &mut Names) -> Result<Expr<String>, ParseError> {
    if cur.accept_keyword("if") {
        let c = expr(cur, names)?;
        cur.expect_keyword("then")?;
        let t = expr(cur, names)?;
        cur.expect_keyword("else")?;
        let e = expr(cur, names)?;
        return Ok(Expr::cond(c, t, e));
    }
    let c = binary(cur, names, 1)?;
    if cur.accept_sym("?") {
        let t = expr(cur, names)?;
        cur.expect_sym(":")?;
        let e = expr(cur, names)?;
        return Ok(Expr::cond(c, t, e));
    }
    Ok(c)
}

fn binop(tok: &Tok) -> Option<BinOp> {
    let Tok::Sym(s) = tok else { return None };
    Some(match *s {
        "||" => BinOp::Or,
        "&&" => BinOp::And,
        "==" => BinOp::Eq,
        "!=" => BinOp::Ne,
        "<" => BinOp::Lt,
        "<=" => BinOp::Le,
        ">" => BinOp::Gt,
        ">=" => BinOp::Ge,
        "+" => BinOp::Add,
        "-" => BinOp::Sub,
        "*" => BinOp::Mul,
        _ => return None,
    })
}

/// Precedence climbing over the left-associative binary operators.
fn binary(cur: &mut Cursor, names: &mut Names, min: u8) -> Result<Expr<String>, ParseError> {
    let mut lhs = unary(cur, names)?;
    while let Some(op) = binop(cur.peek()) {
        if op.precedence() < min {
            break;
        }
        cur.bump();
        let rhs = binary(cur, names, op.precedence() + 1)?;
        lhs = Expr::bin(op, lhs, rhs);
    }
    Ok(lhs)
}

fn unary(cur: &mut Cursor, names: &mut Names) -> Result<Expr<String>, ParseError> {
    if cur.accept_sym("!") {
        return Ok(Expr::not(unary(cur, names)?));
    }
    if cur.is_sym("-") {
        if let Tok::Int(n) = cur.peek_at(1) {
            let n = *n;
            cur.bump();
            cur.bump();
            return Ok(Expr::Lit(-n));
        }
        cur.bump();
        return Ok(Expr::Unary(UnOp::Neg, Box::new(unary(cur, names)?)));
    }
    if cur.accept_sym("(") {
        let e = expr(cur, names)?;
        cur.expect_sym(")")?;
        return Ok(e);
    }
    match cur.peek().clone() {
        Tok::Int(n) => {
            cur.bump();
            Ok(Expr::Lit(n))
        }
        Tok::Ident(k) if k == "true" || k == "false" => {
            cur.bump();
            Ok(Expr::Lit((k == "true") as i64))
        }
        Tok::Ident(n) => {
            let p = cur.bump().1;
            names.refs.push((n.clone(), p));
            Ok(Expr::Var(n))
        }
        _ => Err(cur.unexpected("an expression")),
    }
}

// ----------------------------------------------------------------- printing

fn expr_prec<V>(e: &Expr<V>) -> u8 {
    match e {
        Expr::Cond(..) => 0,
        Expr::Binary(op, ..) => op.precedence(),
        _ => 7,
    }
}

pub fn write_expr<V: fmt::Display>(f: &mut impl fmt::Write, e: &Expr<V>, min: u8) -> fmt::Result {
    let own = expr_prec(e);
    let paren = own < min;
    if paren {
        f.write_char('(')?;
    }
    match e {
        Expr::Lit(n) => write!(f, "{n}")?,
        Expr::Var(v) => write!(f, "{v}")?,
        Expr::Unary(UnOp::Not, a) => {
            f.write_char('!')?;
            write_expr(f, a, 7)?;
        }
        Expr::Unary(UnOp::Neg, a) => {
            f.write_char('-')?;
            // keep `-(3)` distinct from the literal `-3`
            let min = if matches!(**a, Expr::Lit(_)) { 8 } else { 7 };
            write_expr(f, a, min)?;
        }
        Expr::Binary(op, a, b) => {
            write_expr(f, a, op.precedence())?;
            write!(f, " {} ", op.symbol())?;
            write_expr(f, b, op.precedence() + 1)?;
        }
        Expr::Cond(c, t, e) => {
            write_expr(f, c, 1)?;
            f.write_str(" ? ")?;
            write_expr(f, t, 0)?;
            f.write_str(" : ")?;
            write_expr(f, e, 0)?;
        }
    }
    if paren {
        f.write_char(')')?;
    }
    Ok(())
}

fn write_range(f: &mut fmt::Formatter<'_>, items: &[RangeItem]) -> fmt::Result {
    f.write_str("{")?;
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        match item {
            RangeItem::Value(v) => write!(f, "{v}")?,
            RangeItem::Labeled(l, v) => write!(f, "{l}={v}")?,
            RangeItem::Span(lo, hi) => write!(f, "{lo}..{hi}")?,
        }
    }
    f.write_str("}")
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Label(l) => f.write_str(l),
        }
    }
}

fn join<T>(items: &[T], sep: &str, mut each: impl FnMut(&T) -> String) -> String {
    items.iter().map(&mut each).collect::<Vec<_>>().join(sep)
}

impl ModelDocument {
    /// The document that declares `model` together with the given contexts.
    pub fn from_model(
        model: &CausalModel,
        name: Option<&str>,
        contexts: &[(String, Context)],
    ) -> Self {
        let sig = model.signature();
        let mut items = Vec::new();
        for (v, decl) in sig.vars() {
            let range = decl
                .range
                .iter()
                .map(|&x| match decl.labels.iter().find(|(_, y)| *y == x) {
                    Some((l, _)) => RangeItem::Labeled(l.clone(), x),
                    None => RangeItem::Value(x),
                })
                .collect();
            let name = decl.name.clone();
            items.push(match model.equation(v) {
                None => Item::Exogenous { name, range },
                Some(eq) => Item::Endogenous {
                    name,
                    range,
                    equation: eq
                        .try_map_vars(&mut |&u| Ok::<_, ()>(model.name(u).to_string()))
                        .unwrap(),
                },
            });
        }
        for (cname, ctx) in contexts {
            items.push(Item::Context {
                name: cname.clone(),
                values: ctx
                    .iter()
                    .map(|(u, x)| (model.name(u).to_string(), Value::Int(x)))
                    .collect(),
            });
        }
        ModelDocument {
            name: name.map(str::to_string),
            items,
        }
    }
}

pub(crate) fn write_items(f: &mut fmt::Formatter<'_>, items: &[Item], indent: &str) -> fmt::Result {
    for item in items {
        f.write_str(indent)?;
        match item {
            Item::Exogenous { name, range } => {
                write!(f, "exogenous {name} : ")?;
                write_range(f, range)?;
                f.write_str(";")?;
            }
            Item::Endogenous {
                name,
                range,
                equation,
            } => {
                write!(f, "endogenous {name} : ")?;
                write_range(f, range)?;
                f.write_str(" = ")?;
                match equation {
                    Equation::Expr(e) => write_expr(f, e, 0)?,
                    Equation::Table(t) => {
                        write!(f, "table({}) {{", t.inputs.join(", "))?;
                        for (key, out) in &t.rows {
                            write!(f, " {} -> {out};", join(key, ", ", |k| k.to_string()))?;
                        }
                        f.write_str(" }")?;
                    }
                }
                f.write_str(";")?;
            }
            Item::Context { name, values } => {
                write!(f, "context {name} {{")?;
                for (n, v) in values {
                    write!(f, " {n} = {v};")?;
                }
                f.write_str(" }")?;
            }
            Item::Forbid(pattern) => {
                write!(
                    f,
                    "forbid {{ {} }}",
                    join(pattern, ", ", |(n, v)| format!("{n} = {v}"))
                )?;
            }
            Item::Weights(ws) => {
                f.write_str("weights {")?;
                for (n, w) in ws {
                    write!(f, " {n} = {w};")?;
                }
                f.write_str(" }")?;
            }
        }
        f.write_str("\n")?;
    }
    Ok(())
}

impl fmt::Display for ModelDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(name) = &self.name {
            writeln!(f, "model {name};")?;
        }
        write_items(f, &self.items, "")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_event_formula;
    use crate::model::Intervention;
    use proptest::prelude::*;

    const ROCK: &str = "
        model rock_better;
        exogenous U : {0, 1};
        endogenous ST : {0, 1} = U;
        endogenous BT : {0, 1} = U;
        endogenous SH : {0, 1} = ST;
        endogenous BH : {0, 1} = BT && !SH;
        endogenous BS : {0, 1} = SH || BH;
        context both_throw { U = 1; }
        forbid { ST = 0, BT = 1, BH = 0 }
        weights { ST = 2; BT = 1/2; }
    ";

    #[test]
    fn from_model_round_trips() {
        let loaded = parse_model(ROCK).unwrap().load().unwrap();
        let doc = ModelDocument::from_model(&loaded.model, Some("copy"), &loaded.contexts);
        let again = parse_model(&doc.to_string()).unwrap();
        assert_eq!(again, doc);
        let reloaded = again.load().unwrap();
        assert_eq!(reloaded.model.signature(), loaded.model.signature());
        assert_eq!(reloaded.contexts, loaded.contexts);
    }

    #[test]
    fn parses_and_loads_rock_model() {
        let doc = parse_model(ROCK).unwrap();
        assert_eq!(doc.name.as_deref(), Some("rock_better"));
        let loaded = doc.load().unwrap();
        let m = &loaded.model;
        let u = loaded.context("both_throw").unwrap();
        let s = m.solve(u, &Intervention::empty()).unwrap();
        assert_eq!(s[m.lookup("BH").unwrap()], 0);
        assert_eq!(
            loaded.policy,
            AllowabilityPolicy::unrestricted().forbid([("ST", 0), ("BT", 1), ("BH", 0)])
        );
        assert_eq!(loaded.weights.get("BT"), Rational::new(1, 2));
        let phi = parse_event_formula("BS=1").unwrap().bind(m).unwrap();
        assert!(phi.holds(s.values()));
    }

    #[test]
    fn redeclaration_is_located() {
        let err = parse_model("exogenous U : {0,1};\nendogenous U : {0,1} = 0;").unwrap_err();
        assert_eq!(err.pos, Pos { line: 2, col: 12 });
        assert!(err.message.contains("already declared"));
    }

    #[test]
    fn unknown_reference_is_located() {
        let err = parse_model("endogenous A : {0,1} = B + 1;").unwrap_err();
        assert_eq!(err.pos, Pos { line: 1, col: 24 });
    }

    #[test]
    fn context_checks() {
        let err = parse_model("exogenous U : {0,1};\ncontext c { U = 2; }").unwrap_err();
        assert_eq!(err.pos.line, 2);
        assert!(err.message.contains("outside the range"));
        let err =
            parse_model("exogenous U : {0,1}; endogenous A : {0,1} = U;\ncontext c { A = 1; }")
                .unwrap_err();
        assert!(err.message.contains("not exogenous"));
        // a missing exogenous assignment is a load-time error
        let doc =
            parse_model("exogenous U : {0,1}; exogenous V : {0,1}; context c { U = 1; }").unwrap();
        assert!(matches!(
            doc.load(),
            Err(LoadError::Model(ModelError::IncompleteContext(_)))
        ));
    }

    #[test]
    fn labels_spans_and_tables() {
        let doc = parse_model(
            "exogenous U : {G=0, B=1};
             endogenous N : {0..3} = table(U) { 0 -> 2; 1 -> 3; };
             endogenous O : {G=0, B=1} = N >= 3 ? 1 : 0;
             context b { U = B; }",
        )
        .unwrap();
        let loaded = doc.load().unwrap();
        let m = &loaded.model;
        let s = m
            .solve(loaded.context("b").unwrap(), &Intervention::empty())
            .unwrap();
        assert_eq!(s[m.lookup("N").unwrap()], 3);
        assert_eq!(s[m.lookup("O").unwrap()], 1);
        assert_eq!(m.signature().range(m.lookup("N").unwrap()), [0, 1, 2, 3]);
    }

    #[test]
    fn decimals_are_rejected() {
        let err = parse_model("endogenous A : {0,1} = 0; weights { A = 0.5; }").unwrap_err();
        assert!(err.message.contains("unexpected character") || err.message.contains("decimal"));
        let err = parse_model("endogenous A : {0,1} = 0; weights { A = 0; }").unwrap_err();
        assert!(err.message.contains("positive"));
    }

    #[test]
    fn print_then_parse() {
        let doc = parse_model(ROCK).unwrap();
        let printed = doc.to_string();
        assert_eq!(parse_model(&printed).unwrap(), doc);
    }

    #[test]
    fn if_then_else_and_precedence() {
        let doc = parse_model(
            "exogenous U : {0..4}; endogenous A : {0..20} = if U > 1 then U * 2 + 1 else -(3) + U;",
        )
        .unwrap();
        let printed = doc.to_string();
        assert!(
            printed.contains("U > 1 ? U * 2 + 1 : -(3) + U"),
            "{printed}"
        );
        assert_eq!(parse_model(&printed).unwrap(), doc);
    }

    fn arb_expr() -> impl Strategy<Value = Expr<String>> {
        let leaf = prop_oneof![
            (-3i64..4).prop_map(Expr::Lit),
            prop::sample::select(vec!["A", "B"]).prop_map(|n| Expr::Var(n.to_string())),
        ];
        leaf.prop_recursive(4, 24, 3, |inner| {
            let ops = prop::sample::select(vec![
                BinOp::Add,
                BinOp::Sub,
                BinOp::Mul,
                BinOp::Eq,
                BinOp::Ne,
                BinOp::Lt,
                BinOp::Le,
                BinOp::Gt,
                BinOp::Ge,
                BinOp::And,
                BinOp::Or,
            ]);
            prop_oneof![
                inner.clone().prop_map(Expr::not),
                inner
                    .clone()
                    .prop_map(|e| Expr::Unary(UnOp::Neg, Box::new(e))),
                (ops, inner.clone(), inner.clone()).prop_map(|(op, a, b)| Expr::bin(op, a, b)),
                (inner.clone(), inner.clone(), inner).prop_map(|(c, t, e)| Expr::cond(c, t, e)),
            ]
        })
    }

    proptest! {
        #[test]
        fn expression_round_trip(e in arb_expr()) {
            let doc = ModelDocument {
                name: Some("m".into()),
                items: vec![
                    Item::Exogenous { name: "A".into(), range: vec![RangeItem::Span(0, 2)] },
                    Item::Exogenous { name: "B".into(), range: vec![RangeItem::Value(0), RangeItem::Labeled("hi".into(), 5)] },
                    Item::Endogenous { name: "C".into(), range: vec![RangeItem::Span(-50, 50)], equation: Equation::Expr(e) },
                ],
            };
            let text = doc.to_string();
            prop_assert_eq!(parse_model(&text).unwrap(), doc, "{}", text);
        }
    }
}
