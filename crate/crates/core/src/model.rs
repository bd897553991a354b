//! Signatures, structural equations, recursive causal models and their
//! unique solutions under interventions.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

/// Index of a variable in its model's signature, in declaration order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VarKind {
    Exogenous,
    Endogenous,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub kind: VarKind,
    /// Admissible values in declared order.
    pub range: Vec<i64>,
    /// Optional symbolic names for some values of the range.
    pub labels: Vec<(String, i64)>,
}

impl VarDecl {
    pub fn contains(&self, value: i64) -> bool {
        self.range.contains(&value)
    }

    pub fn label_value(&self, label: &str) -> Option<i64> {
        self.labels
            .iter()
            .find(|(l, _)| l == label)
            .map(|&(_, v)| v)
    }
}

/// The exogenous and endogenous variables of a model together with their ranges.
#[derive(Clone, Debug)]
pub struct Signature {
    vars: Vec<VarDecl>,
    index: HashMap<String, VarId>,
}

impl PartialEq for Signature {
    fn eq(&self, other: &Self) -> bool {
        self.vars == other.vars
    }
}

impl Eq for Signature {}

impl Signature {
    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn decl(&self, id: VarId) -> &VarDecl {
        &self.vars[id.0]
    }

    pub fn name(&self, id: VarId) -> &str {
        &self.vars[id.0].name
    }

    pub fn range(&self, id: VarId) -> &[i64] {
        &self.vars[id.0].range
    }

    pub fn kind(&self, id: VarId) -> VarKind {
        self.vars[id.0].kind
    }

    pub fn is_endogenous(&self, id: VarId) -> bool {
        self.kind(id) == VarKind::Endogenous
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.index.get(name).copied()
    }

    pub fn vars(&self) -> impl Iterator<Item = (VarId, &VarDecl)> {
        self.vars.iter().enumerate().map(|(i, d)| (VarId(i), d))
    }

    pub fn exogenous(&self) -> impl Iterator<Item = VarId> + '_ {
        self.vars()
            .filter(|(_, d)| d.kind == VarKind::Exogenous)
            .map(|(id, _)| id)
    }

    pub fn endogenous(&self) -> impl Iterator<Item = VarId> + '_ {
        self.vars()
            .filter(|(_, d)| d.kind == VarKind::Endogenous)
            .map(|(id, _)| id)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul => 6,
        }
    }

    fn apply(self, a: i64, b: i64) -> i64 {
        match self {
            BinOp::Add => a.wrapping_add(b),
            BinOp::Sub => a.wrapping_sub(b),
            BinOp::Mul => a.wrapping_mul(b),
            BinOp::Eq => (a == b) as i64,
            BinOp::Ne => (a != b) as i64,
            BinOp::Lt => (a < b) as i64,
            BinOp::Le => (a <= b) as i64,
            BinOp::Gt => (a > b) as i64,
            BinOp::Ge => (a >= b) as i64,
            BinOp::And => (a != 0 && b != 0) as i64,
            BinOp::Or => (a != 0 || b != 0) as i64,
        }
    }
}

/// Integer expression; booleans are encoded as 0/1 and any nonzero value is true.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr<V> {
    Lit(i64),
    Var(V),
    Unary(UnOp, Box<Expr<V>>),
    Binary(BinOp, Box<Expr<V>>, Box<Expr<V>>),
    Cond(Box<Expr<V>>, Box<Expr<V>>, Box<Expr<V>>),
}

impl<V> Expr<V> {
    pub fn var(v: V) -> Self {
        Expr::Var(v)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Expr<V>) -> Self {
        Expr::Unary(UnOp::Not, Box::new(e))
    }

    pub fn bin(op: BinOp, a: Expr<V>, b: Expr<V>) -> Self {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn cond(c: Expr<V>, t: Expr<V>, e: Expr<V>) -> Self {
        Expr::Cond(Box::new(c), Box::new(t), Box::new(e))
    }

    /// Left-folds `items` with `op`; `empty` is returned for no items.
    pub fn fold(op: BinOp, items: impl IntoIterator<Item = Expr<V>>, empty: Expr<V>) -> Self {
        let mut it = items.into_iter();
        match it.next() {
            None => empty,
            Some(first) => it.fold(first, |acc, e| Expr::bin(op, acc, e)),
        }
    }

    pub fn try_map_vars<W, E>(&self, f: &mut impl FnMut(&V) -> Result<W, E>) -> Result<Expr<W>, E> {
        Ok(match self {
            Expr::Lit(n) => Expr::Lit(*n),
            Expr::Var(v) => Expr::Var(f(v)?),
            Expr::Unary(op, e) => Expr::Unary(*op, Box::new(e.try_map_vars(f)?)),
            Expr::Binary(op, a, b) => Expr::Binary(
                *op,
                Box::new(a.try_map_vars(f)?),
                Box::new(b.try_map_vars(f)?),
            ),
            Expr::Cond(c, t, e) => Expr::Cond(
                Box::new(c.try_map_vars(f)?),
                Box::new(t.try_map_vars(f)?),
                Box::new(e.try_map_vars(f)?),
            ),
        })
    }

    pub fn for_each_var<'a>(&'a self, f: &mut impl FnMut(&'a V)) {
        match self {
            Expr::Lit(_) => {}
            Expr::Var(v) => f(v),
            Expr::Unary(_, e) => e.for_each_var(f),
            Expr::Binary(_, a, b) => {
                a.for_each_var(f);
                b.for_each_var(f);
            }
            Expr::Cond(c, t, e) => {
                c.for_each_var(f);
                t.for_each_var(f);
                e.for_each_var(f);
            }
        }
    }
}

impl Expr<VarId> {
    pub fn eval(&self, values: &[i64]) -> i64 {
        match self {
            Expr::Lit(n) => *n,
            Expr::Var(v) => values[v.0],
            Expr::Unary(UnOp::Neg, e) => e.eval(values).wrapping_neg(),
            Expr::Unary(UnOp::Not, e) => (e.eval(values) == 0) as i64,
            Expr::Binary(BinOp::And, a, b) => (a.eval(values) != 0 && b.eval(values) != 0) as i64,
            Expr::Binary(BinOp::Or, a, b) => (a.eval(values) != 0 || b.eval(values) != 0) as i64,
            Expr::Binary(op, a, b) => op.apply(a.eval(values), b.eval(values)),
            Expr::Cond(c, t, e) => {
                if c.eval(values) != 0 {
                    t.eval(values)
                } else {
                    e.eval(values)
                }
            }
        }
    }
}

/// An explicit finite function from input tuples to output values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table<V> {
    pub inputs: Vec<V>,
    pub rows: BTreeMap<Vec<i64>, i64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Equation<V> {
    Expr(Expr<V>),
    Table(Table<V>),
}

impl<V> Equation<V> {
    pub fn constant(value: i64) -> Self {
        Equation::Expr(Expr::Lit(value))
    }

    pub fn try_map_vars<W, E>(
        &self,
        f: &mut impl FnMut(&V) -> Result<W, E>,
    ) -> Result<Equation<W>, E> {
        Ok(match self {
            Equation::Expr(e) => Equation::Expr(e.try_map_vars(f)?),
            Equation::Table(t) => Equation::Table(Table {
                inputs: t.inputs.iter().map(&mut *f).collect::<Result<_, _>>()?,
                rows: t.rows.clone(),
            }),
        })
    }
}

impl<V: Clone + Ord> Equation<V> {
    /// Variables referenced syntactically, deduplicated and sorted.
    pub fn references(&self) -> Vec<V> {
        let mut out = Vec::new();
        match self {
            Equation::Expr(e) => e.for_each_var(&mut |v| out.push(v.clone())),
            Equation::Table(t) => out.extend(t.inputs.iter().cloned()),
        }
        out.sort();
        out.dedup();
        out
    }
}

/// Mixed-radix lookup array for a table equation.
#[derive(Clone, Debug)]
struct DenseTable {
    inputs: Vec<(usize, i64, usize)>, // (var index, min value, stride)
    spans: Vec<i64>,
    cells: Vec<i64>,
}

const MISSING: i64 = i64::MIN;

impl DenseTable {
    fn compile(table: &Table<VarId>, sig: &Signature) -> Option<Self> {
        let mut inputs = Vec::with_capacity(table.inputs.len());
        let mut spans = Vec::with_capacity(table.inputs.len());
        let mut stride = 1usize;
        for &v in &table.inputs {
            let range = sig.range(v);
            let lo = *range.iter().min()?;
            let hi = *range.iter().max()?;
            let span = (hi - lo + 1) as usize;
            inputs.push((v.0, lo, stride));
            spans.push(hi - lo + 1);
            stride = stride.checked_mul(span)?;
            if stride > 1 << 24 {
                return None;
            }
        }
        let mut cells = vec![MISSING; stride];
        for (key, &out) in &table.rows {
            if key.len() != inputs.len() {
                continue;
            }
            let mut idx = 0usize;
            let mut ok = true;
            for (&(_, lo, st), (&k, &span)) in inputs.iter().zip(key.iter().zip(&spans)) {
                let off = k - lo;
                if off < 0 || off >= span {
                    ok = false;
                    break;
                }
                idx += off as usize * st;
            }
            if ok {
                cells[idx] = out;
            }
        }
        Some(DenseTable {
            inputs,
            spans,
            cells,
        })
    }

    fn eval(&self, values: &[i64]) -> i64 {
        let mut idx = 0usize;
        for (&(v, lo, st), &span) in self.inputs.iter().zip(&self.spans) {
            let off = values[v] - lo;
            if off < 0 || off >= span {
                return MISSING;
            }
            idx += off as usize * st;
        }
        self.cells[idx]
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("variable `{0}` has an empty range")]
    EmptyRange(String),
    #[error("variable `{var}` lists value {value} twice in its range")]
    DuplicateValue { var: String, value: i64 },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("equation of `{target}` references unknown variable `{name}`")]
    UnknownReference { target: String, name: String },
    #[error("`{0}` is not an endogenous variable")]
    NotEndogenous(String),
    #[error("`{0}` is not an exogenous variable")]
    NotExogenous(String),
    #[error("endogenous variable `{0}` has no equation")]
    MissingEquation(String),
    #[error("table for `{target}` has a row of width {found}, expected {expected}")]
    TableArity {
        target: String,
        expected: usize,
        found: usize,
    },
    #[error("value {value} is not in the range of `{var}`")]
    ValueOutOfRange { var: String, value: i64 },
    #[error("context does not assign exogenous variable `{0}`")]
    IncompleteContext(String),
    #[error("variable `{0}` assigned twice")]
    DuplicateAssignment(String),
    #[error("model is not recursive: cycle through {}", .0.join(","))]
    Cyclic(Vec<String>),
}

/// A finding reported by [`CausalModel::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Diagnostic {
    Cycle {
        vars: Vec<String>,
    },
    RangeViolation {
        target: String,
        inputs: Vec<(String, i64)>,
        value: i64,
    },
    IncompleteTable {
        target: String,
        missing: Vec<i64>,
    },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::Cycle { vars } => write!(f, "cycle: {}", vars.join(",")),
            Diagnostic::RangeViolation {
                target,
                inputs,
                value,
            } => {
                write!(f, "range violation in equation of {target} at ")?;
                if inputs.is_empty() {
                    write!(f, "<no inputs>")?;
                }
                for (i, (n, v)) in inputs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{n}={v}")?;
                }
                write!(f, ": value {value} outside range")
            }
            Diagnostic::IncompleteTable { target, missing } => {
                let row: Vec<String> = missing.iter().map(|v| v.to_string()).collect();
                write!(f, "table for {target} has no row for ({})", row.join(","))
            }
        }
    }
}

/// Assembles a [`CausalModel`] from named declarations.
#[derive(Clone, Debug, Default)]
pub struct ModelBuilder {
    decls: Vec<VarDecl>,
    equations: Vec<Option<Equation<String>>>,
}

impl ModelBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn exogenous(&mut self, name: &str, range: impl Into<Vec<i64>>) -> &mut Self {
        self.decls.push(VarDecl {
            name: name.to_string(),
            kind: VarKind::Exogenous,
            range: range.into(),
            labels: Vec::new(),
        });
        self.equations.push(None);
        self
    }

    pub fn endogenous(
        &mut self,
        name: &str,
        range: impl Into<Vec<i64>>,
        equation: Equation<String>,
    ) -> &mut Self {
        self.decls.push(VarDecl {
            name: name.to_string(),
            kind: VarKind::Endogenous,
            range: range.into(),
            labels: Vec::new(),
        });
        self.equations.push(Some(equation));
        self
    }

    /// Attaches a symbolic label to a value of the most recently declared variable.
    pub fn label(&mut self, label: &str, value: i64) -> &mut Self {
        if let Some(d) = self.decls.last_mut() {
            d.labels.push((label.to_string(), value));
        }
        self
    }

    pub fn build(&self) -> Result<CausalModel, ModelError> {
        let mut index = HashMap::new();
        for (i, d) in self.decls.iter().enumerate() {
            if index.insert(d.name.clone(), VarId(i)).is_some() {
                return Err(ModelError::DuplicateVariable(d.name.clone()));
            }
            if d.range.is_empty() {
                return Err(ModelError::EmptyRange(d.name.clone()));
            }
            for (j, v) in d.range.iter().enumerate() {
                if d.range[..j].contains(v) {
                    return Err(ModelError::DuplicateValue {
                        var: d.name.clone(),
                        value: *v,
                    });
                }
            }
            for (_, v) in &d.labels {
                if !d.range.contains(v) {
                    return Err(ModelError::ValueOutOfRange {
                        var: d.name.clone(),
                        value: *v,
                    });
                }
            }
        }
        let signature = Signature {
            vars: self.decls.clone(),
            index,
        };
        let mut equations = Vec::with_capacity(self.decls.len());
        for (d, eq) in self.decls.iter().zip(&self.equations) {
            let bound = match eq {
                None => None,
                Some(eq) => {
                    let bound = eq.try_map_vars(&mut |n: &String| {
                        signature
                            .lookup(n)
                            .ok_or_else(|| ModelError::UnknownReference {
                                target: d.name.clone(),
                                name: n.clone(),
                            })
                    })?;
                    if let Equation::Table(t) = &bound {
                        for key in t.rows.keys() {
                            if key.len() != t.inputs.len() {
                                return Err(ModelError::TableArity {
                                    target: d.name.clone(),
                                    expected: t.inputs.len(),
                                    found: key.len(),
                                });
                            }
                        }
                    }
                    Some(bound)
                }
            };
            equations.push(bound);
        }
        CausalModel::from_parts(signature, equations)
    }
}

/// A signature plus one structural equation per endogenous variable.
#[derive(Clone, Debug)]
pub struct CausalModel {
    signature: Signature,
    equations: Vec<Option<Equation<VarId>>>,
    dense: Vec<Option<DenseTable>>,
    topo: Option<Vec<VarId>>,
}

impl PartialEq for CausalModel {
    fn eq(&self, other: &Self) -> bool {
        self.signature == other.signature && self.equations == other.equations
    }
}

impl Eq for CausalModel {}

/// A total assignment to the exogenous variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Context {
    values: BTreeMap<VarId, i64>,
}

impl Context {
    pub fn get(&self, v: VarId) -> Option<i64> {
        self.values.get(&v).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, i64)> + '_ {
        self.values.iter().map(|(&k, &v)| (k, v))
    }
}

/// A partial assignment to endogenous variables, `[Y1 <- y1, ...]`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Intervention {
    assignments: BTreeMap<VarId, i64>,
}

impl Intervention {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (VarId, i64)>) -> Self {
        Intervention {
            assignments: pairs.into_iter().collect(),
        }
    }

    pub fn with(mut self, var: VarId, value: i64) -> Self {
        self.assignments.insert(var, value);
        self
    }

    pub fn get(&self, v: VarId) -> Option<i64> {
        self.assignments.get(&v).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, i64)> + '_ {
        self.assignments.iter().map(|(&k, &v)| (k, v))
    }
}

/// Values of every variable of a model.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Assignment {
    values: Vec<i64>,
}

impl Assignment {
    pub fn get(&self, v: VarId) -> i64 {
        self.values[v.0]
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }
}

impl std::ops::Index<VarId> for Assignment {
    type Output = i64;
    fn index(&self, v: VarId) -> &i64 {
        &self.values[v.0]
    }
}

impl CausalModel {
    fn from_parts(
        signature: Signature,
        equations: Vec<Option<Equation<VarId>>>,
    ) -> Result<Self, ModelError> {
        for (id, d) in signature.vars() {
            match (&equations[id.0], d.kind) {
                (None, VarKind::Endogenous) => {
                    return Err(ModelError::MissingEquation(d.name.clone()))
                }
                (Some(_), VarKind::Exogenous) => {
                    return Err(ModelError::NotEndogenous(d.name.clone()))
                }
                _ => {}
            }
        }
        let dense = equations
            .iter()
            .map(|eq| match eq {
                Some(Equation::Table(t)) => DenseTable::compile(t, &signature),
                _ => None,
            })
            .collect();
        let mut model = CausalModel {
            signature,
            equations,
            dense,
            topo: None,
        };
        model.topo = model.topological_order();
        Ok(model)
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.signature.lookup(name)
    }

    pub fn name(&self, v: VarId) -> &str {
        self.signature.name(v)
    }

    pub fn equation(&self, v: VarId) -> Option<&Equation<VarId>> {
        self.equations[v.0].as_ref()
    }

    pub fn endogenous(&self) -> impl Iterator<Item = VarId> + '_ {
        self.signature.endogenous()
    }

    pub fn is_recursive(&self) -> bool {
        self.topo.is_some()
    }

    /// Endogenous variables in a dependency-respecting order, or `None` when cyclic.
    pub fn topo_order(&self) -> Option<&[VarId]> {
        self.topo.as_deref()
    }

    /// Looks up an endogenous variable by name.
    pub fn endogenous_var(&self, name: &str) -> Result<VarId, ModelError> {
        let v = self
            .lookup(name)
            .ok_or_else(|| ModelError::UnknownVariable(name.to_string()))?;
        if !self.signature.is_endogenous(v) {
            return Err(ModelError::NotEndogenous(name.to_string()));
        }
        Ok(v)
    }

    pub fn check_value(&self, v: VarId, value: i64) -> Result<(), ModelError> {
        if self.signature.decl(v).contains(value) {
            Ok(())
        } else {
            Err(ModelError::ValueOutOfRange {
                var: self.name(v).to_string(),
                value,
            })
        }
    }

    /// Builds a context from `(name, value)` pairs covering every exogenous variable.
    pub fn context<'a>(
        &self,
        pairs: impl IntoIterator<Item = (&'a str, i64)>,
    ) -> Result<Context, ModelError> {
        let mut values = BTreeMap::new();
        for (name, value) in pairs {
            let v = self
                .lookup(name)
                .ok_or_else(|| ModelError::UnknownVariable(name.to_string()))?;
            if self.signature.is_endogenous(v) {
                return Err(ModelError::NotExogenous(name.to_string()));
            }
            self.check_value(v, value)?;
            if values.insert(v, value).is_some() {
                return Err(ModelError::DuplicateAssignment(name.to_string()));
            }
        }
        let ctx = Context { values };
        self.check_context(&ctx)?;
        Ok(ctx)
    }

    pub fn check_context(&self, ctx: &Context) -> Result<(), ModelError> {
        for v in self.signature.exogenous() {
            match ctx.get(v) {
                None => return Err(ModelError::IncompleteContext(self.name(v).to_string())),
                Some(x) => self.check_value(v, x)?,
            }
        }
        if let Some((&v, _)) = ctx
            .values
            .iter()
            .find(|(v, _)| v.0 >= self.signature.len() || self.signature.is_endogenous(**v))
        {
            return Err(ModelError::NotExogenous(format!("#{}", v.0)));
        }
        Ok(())
    }

    /// Builds an intervention from `(name, value)` pairs over endogenous variables.
    pub fn intervention<'a>(
        &self,
        pairs: impl IntoIterator<Item = (&'a str, i64)>,
    ) -> Result<Intervention, ModelError> {
        let mut assignments = BTreeMap::new();
        for (name, value) in pairs {
            let v = self.endogenous_var(name)?;
            self.check_value(v, value)?;
            if assignments.insert(v, value).is_some() {
                return Err(ModelError::DuplicateAssignment(name.to_string()));
            }
        }
        Ok(Intervention { assignments })
    }

    pub fn check_intervention(&self, iv: &Intervention) -> Result<(), ModelError> {
        for (v, value) in iv.iter() {
            if v.0 >= self.signature.len() || !self.signature.is_endogenous(v) {
                return Err(ModelError::NotEndogenous(format!("#{}", v.0)));
            }
            self.check_value(v, value)?;
        }
        Ok(())
    }

    /// Edges `(X, Y)` of the causal network: `Y`'s equation mentions `X`, both endogenous.
    /// Ordered by target, then source, in declaration order.
    pub fn causal_network(&self) -> Vec<(VarId, VarId)> {
        let mut edges = Vec::new();
        for y in self.signature.endogenous() {
            if let Some(eq) = self.equation(y) {
                for x in eq.references() {
                    if self.signature.is_endogenous(x) {
                        edges.push((x, y));
                    }
                }
            }
        }
        edges
    }

    fn endogenous_parents(&self, v: VarId) -> Vec<VarId> {
        self.equation(v)
            .map(|eq| {
                eq.references()
                    .into_iter()
                    .filter(|&p| self.signature.is_endogenous(p))
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Kahn's algorithm; ties broken by declaration order.
    fn topological_order(&self) -> Option<Vec<VarId>> {
        let n = self.signature.len();
        let mut indegree = vec![0usize; n];
        let mut children: Vec<Vec<VarId>> = vec![Vec::new(); n];
        for (x, y) in self.causal_network() {
            indegree[y.0] += 1;
            children[x.0].push(y);
        }
        let mut ready: std::collections::BTreeSet<VarId> = self
            .signature
            .endogenous()
            .filter(|v| indegree[v.0] == 0)
            .collect();
        let mut order = Vec::new();
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &c in &children[v.0] {
                indegree[c.0] -= 1;
                if indegree[c.0] == 0 {
                    ready.insert(c);
                }
            }
        }
        (order.len() == self.signature.endogenous().count()).then_some(order)
    }

    fn find_cycle(&self) -> Option<Vec<VarId>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        let n = self.signature.len();
        let mut mark = vec![Mark::New; n];
        let parents: Vec<Vec<VarId>> = (0..n).map(|i| self.endogenous_parents(VarId(i))).collect();

        fn visit(
            v: VarId,
            parents: &[Vec<VarId>],
            mark: &mut [Mark],
            stack: &mut Vec<VarId>,
        ) -> Option<Vec<VarId>> {
            mark[v.0] = Mark::Active;
            stack.push(v);
            for &p in &parents[v.0] {
                match mark[p.0] {
                    Mark::Active => {
                        let start = stack.iter().position(|&s| s == p).unwrap_or(0);
                        let mut cycle = stack[start..].to_vec();
                        cycle.sort();
                        return Some(cycle);
                    }
                    Mark::New => {
                        if let Some(c) = visit(p, parents, mark, stack) {
                            return Some(c);
                        }
                    }
                    Mark::Done => {}
                }
            }
            stack.pop();
            mark[v.0] = Mark::Done;
            None
        }

        for v in self.signature.endogenous() {
            if mark[v.0] == Mark::New {
                let mut stack = Vec::new();
                if let Some(c) = visit(v, &parents, &mut mark, &mut stack) {
                    return Some(c);
                }
            }
        }
        None
    }

    /// Checks recursiveness, table completeness and range closure of every
    /// equation by exhaustive evaluation over the ranges of its inputs.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if self.topo.is_none() {
            if let Some(cycle) = self.find_cycle() {
                out.push(Diagnostic::Cycle {
                    vars: cycle.iter().map(|&v| self.name(v).to_string()).collect(),
                });
            }
        }
        let mut scratch = vec![0i64; self.signature.len()];
        for target in self.signature.endogenous() {
            let Some(eq) = self.equation(target) else {
                continue;
            };
            let inputs = eq.references();
            let ranges: Vec<&[i64]> = inputs.iter().map(|&v| self.signature.range(v)).collect();
            let mut pos = vec![0usize; inputs.len()];
            'rows: loop {
                for (i, &v) in inputs.iter().enumerate() {
                    scratch[v.0] = ranges[i][pos[i]];
                }
                let value = self.eval_equation(target, &scratch);
                if value == MISSING && matches!(eq, Equation::Table(_)) {
                    out.push(Diagnostic::IncompleteTable {
                        target: self.name(target).to_string(),
                        missing: inputs.iter().map(|v| scratch[v.0]).collect(),
                    });
                    break 'rows;
                }
                if !self.signature.decl(target).contains(value) {
                    out.push(Diagnostic::RangeViolation {
                        target: self.name(target).to_string(),
                        inputs: inputs
                            .iter()
                            .map(|&v| (self.name(v).to_string(), scratch[v.0]))
                            .collect(),
                        value,
                    });
                    break 'rows;
                }
                // advance the odometer
                let mut i = 0;
                loop {
                    if i == pos.len() {
                        break 'rows;
                    }
                    pos[i] += 1;
                    if pos[i] < ranges[i].len() {
                        break;
                    }
                    pos[i] = 0;
                    i += 1;
                }
            }
        }
        out
    }

    #[inline]
    fn eval_equation(&self, v: VarId, values: &[i64]) -> i64 {
        match &self.equations[v.0] {
            Some(Equation::Expr(e)) => e.eval(values),
            Some(Equation::Table(t)) => match &self.dense[v.0] {
                Some(d) => d.eval(values),
                None => {
                    let key: Vec<i64> = t.inputs.iter().map(|i| values[i.0]).collect();
                    t.rows.get(&key).copied().unwrap_or(MISSING)
                }
            },
            None => values[v.0],
        }
    }

    /// Fills `out` with the exogenous values of `ctx`; endogenous slots are zeroed.
    pub(crate) fn base_values(&self, ctx: &Context) -> Vec<i64> {
        let mut base = vec![0i64; self.signature.len()];
        for (v, x) in ctx.iter() {
            base[v.0] = x;
        }
        base
    }

    /// Solves in topological order, taking `overrides[v]` in place of `v`'s equation.
    /// The model must be recursive and valid; no range checks are made.
    #[inline]
    pub(crate) fn solve_fast(&self, base: &[i64], overrides: &[Option<i64>], out: &mut Vec<i64>) {
        out.clear();
        out.extend_from_slice(base);
        let topo = self.topo.as_deref().expect("solve on a cyclic model");
        for &v in topo {
            out[v.0] = match overrides[v.0] {
                Some(x) => x,
                None => self.eval_equation(v, out),
            };
        }
    }

    /// The unique solution of the equations of `M_{I}` in `ctx`.
    pub fn solve(&self, ctx: &Context, iv: &Intervention) -> Result<Assignment, ModelError> {
        let topo = self.topo.as_deref().ok_or_else(|| {
            ModelError::Cyclic(
                self.find_cycle()
                    .unwrap_or_default()
                    .iter()
                    .map(|&v| self.name(v).to_string())
                    .collect(),
            )
        })?;
        self.check_context(ctx)?;
        self.check_intervention(iv)?;
        let mut values = self.base_values(ctx);
        for &v in topo {
            let x = match iv.get(v) {
                Some(x) => x,
                None => self.eval_equation(v, &values),
            };
            if !self.signature.decl(v).contains(x) {
                return Err(ModelError::ValueOutOfRange {
                    var: self.name(v).to_string(),
                    value: x,
                });
            }
            values[v.0] = x;
        }
        Ok(Assignment { values })
    }

    /// `M_{I}`: every intervened variable keeps its place in the signature but
    /// its equation becomes the constant it is set to.
    pub fn intervene(&self, iv: &Intervention) -> Result<CausalModel, ModelError> {
        self.check_intervention(iv)?;
        if iv.is_empty() {
            return Ok(self.clone());
        }
        let mut equations = self.equations.clone();
        for (v, x) in iv.iter() {
            equations[v.0] = Some(Equation::constant(x));
        }
        CausalModel::from_parts(self.signature.clone(), equations)
    }

    /// Endogenous variables that are one of `targets` or an ancestor of one in
    /// the causal network, as a membership mask indexed by variable.
    pub fn ancestors_or_self(&self, targets: impl IntoIterator<Item = VarId>) -> Vec<bool> {
        let n = self.signature.len();
        let mut mask = vec![false; n];
        let mut stack: Vec<VarId> = targets.into_iter().collect();
        while let Some(v) = stack.pop() {
            if mask[v.0] || !self.signature.is_endogenous(v) {
                continue;
            }
            mask[v.0] = true;
            stack.extend(self.endogenous_parents(v));
        }
        mask
    }

    /// Returns a copy whose equation for `target` is replaced.
    pub fn with_equation(
        &self,
        target: VarId,
        equation: Equation<VarId>,
    ) -> Result<CausalModel, ModelError> {
        if !self.signature.is_endogenous(target) {
            return Err(ModelError::NotEndogenous(self.name(target).to_string()));
        }
        let mut equations = self.equations.clone();
        equations[target.0] = Some(equation);
        CausalModel::from_parts(self.signature.clone(), equations)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    fn var(n: &str) -> Expr<String> {
        Expr::var(n.to_string())
    }

    pub(crate) fn rock_naive() -> CausalModel {
        let mut b = ModelBuilder::new();
        b.exogenous("U", [0, 1])
            .endogenous("ST", [0, 1], Equation::Expr(var("U")))
            .endogenous("BT", [0, 1], Equation::Expr(var("U")))
            .endogenous(
                "BS",
                [0, 1],
                Equation::Expr(Expr::bin(BinOp::Or, var("ST"), var("BT"))),
            );
        b.build().unwrap()
    }

    pub(crate) fn rock_better() -> CausalModel {
        let mut b = ModelBuilder::new();
        b.exogenous("U", [0, 1])
            .endogenous("ST", [0, 1], Equation::Expr(var("U")))
            .endogenous("BT", [0, 1], Equation::Expr(var("U")))
            .endogenous("SH", [0, 1], Equation::Expr(var("ST")))
            .endogenous(
                "BH",
                [0, 1],
                Equation::Expr(Expr::bin(BinOp::And, var("BT"), Expr::not(var("SH")))),
            )
            .endogenous(
                "BS",
                [0, 1],
                Equation::Expr(Expr::bin(BinOp::Or, var("SH"), var("BH"))),
            );
        b.build().unwrap()
    }

    fn names(m: &CausalModel, edges: &[(VarId, VarId)]) -> Vec<(String, String)> {
        edges
            .iter()
            .map(|&(a, b)| (m.name(a).to_string(), m.name(b).to_string()))
            .collect()
    }

    #[test]
    fn naive_rock_model_is_valid_and_shatters() {
        let m = rock_naive();
        assert!(m.validate().is_empty());
        let u = m.context([("U", 1)]).unwrap();
        let s = m.solve(&u, &Intervention::empty()).unwrap();
        assert_eq!(s[m.lookup("BS").unwrap()], 1);
        let iv = m.intervention([("ST", 0), ("BT", 0)]).unwrap();
        assert_eq!(m.solve(&u, &iv).unwrap()[m.lookup("BS").unwrap()], 0);
    }

    #[test]
    fn two_cycle_is_reported() {
        let mut b = ModelBuilder::new();
        b.endogenous("A", [0, 1], Equation::Expr(var("B")))
            .endogenous("B", [0, 1], Equation::Expr(var("A")));
        let m = b.build().unwrap();
        assert!(!m.is_recursive());
        assert_eq!(
            m.validate(),
            vec![Diagnostic::Cycle {
                vars: vec!["A".into(), "B".into()]
            }]
        );
        assert_eq!(m.validate()[0].to_string(), "cycle: A,B");
        let ctx = m.context([]).unwrap();
        assert!(matches!(
            m.solve(&ctx, &Intervention::empty()),
            Err(ModelError::Cyclic(_))
        ));
    }

    #[test]
    fn self_reference_is_a_cycle() {
        let mut b = ModelBuilder::new();
        b.endogenous("A", [0, 1], Equation::Expr(Expr::not(var("A"))));
        let m = b.build().unwrap();
        assert_eq!(
            m.validate(),
            vec![Diagnostic::Cycle {
                vars: vec!["A".into()]
            }]
        );
    }

    #[test]
    fn range_overflow_is_reported_at_offending_input() {
        let mut b = ModelBuilder::new();
        b.exogenous("U", [0, 1])
            .endogenous("X", [0, 1], Equation::Expr(var("U")))
            .endogenous(
                "Y",
                [0, 1],
                Equation::Expr(Expr::bin(BinOp::Add, var("X"), Expr::Lit(1))),
            );
        let m = b.build().unwrap();
        let d = m.validate();
        assert_eq!(
            d,
            vec![Diagnostic::RangeViolation {
                target: "Y".into(),
                inputs: vec![("X".into(), 1)],
                value: 2
            }]
        );
        assert!(d[0].to_string().contains("X=1"));
    }

    #[test]
    fn incomplete_table_is_reported() {
        let mut rows = BTreeMap::new();
        rows.insert(vec![0], 1);
        let mut b = ModelBuilder::new();
        b.exogenous("U", [0, 1]).endogenous(
            "Y",
            [0, 1],
            Equation::Table(Table {
                inputs: vec!["U".into()],
                rows,
            }),
        );
        let m = b.build().unwrap();
        assert_eq!(
            m.validate(),
            vec![Diagnostic::IncompleteTable {
                target: "Y".into(),
                missing: vec![1]
            }]
        );
    }

    #[test]
    fn builder_rejects_structural_errors() {
        let mut b = ModelBuilder::new();
        b.exogenous("U", [0, 1]).exogenous("U", [0]);
        assert_eq!(b.build(), Err(ModelError::DuplicateVariable("U".into())));

        let mut b = ModelBuilder::new();
        b.exogenous("U", Vec::<i64>::new());
        assert_eq!(b.build(), Err(ModelError::EmptyRange("U".into())));

        let mut b = ModelBuilder::new();
        b.endogenous("Y", [0, 1], Equation::Expr(var("Q")));
        assert!(matches!(
            b.build(),
            Err(ModelError::UnknownReference { .. })
        ));
    }

    #[test]
    fn better_rock_network() {
        let m = rock_better();
        let mut edges = names(&m, &m.causal_network());
        edges.sort();
        let mut expected: Vec<(String, String)> = [
            ("ST", "SH"),
            ("SH", "BH"),
            ("BT", "BH"),
            ("SH", "BS"),
            ("BH", "BS"),
        ]
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
        expected.sort();
        assert_eq!(edges, expected);
    }

    #[test]
    fn constant_equations_have_no_edges() {
        let mut b = ModelBuilder::new();
        b.endogenous("A", [0, 1], Equation::constant(1)).endogenous(
            "B",
            [0, 1],
            Equation::constant(0),
        );
        assert!(b.build().unwrap().causal_network().is_empty());
    }

    #[test]
    fn dependence_is_syntactic() {
        let mut b = ModelBuilder::new();
        b.endogenous("C", [0, 1], Equation::constant(0)).endogenous(
            "T",
            [0, 1],
            Equation::Expr(Expr::cond(
                Expr::bin(BinOp::Eq, var("C"), var("C")),
                Expr::Lit(1),
                Expr::Lit(0),
            )),
        );
        let m = b.build().unwrap();
        assert_eq!(
            names(&m, &m.causal_network()),
            vec![("C".into(), "T".into())]
        );
    }

    #[test]
    fn intervening_suzy_out_lets_billy_hit() {
        let m = rock_better();
        let u = m.context([("U", 1)]).unwrap();
        let iv = m.intervention([("ST", 0)]).unwrap();
        let mi = m.intervene(&iv).unwrap();
        let st = m.lookup("ST").unwrap();
        assert_eq!(mi.equation(st), Some(&Equation::constant(0)));
        assert!(mi.signature().is_endogenous(st));
        let s = mi.solve(&u, &Intervention::empty()).unwrap();
        assert_eq!(s[m.lookup("BH").unwrap()], 1);
        assert_eq!(s[m.lookup("BS").unwrap()], 1);
        assert_eq!(s, m.solve(&u, &iv).unwrap());
    }

    #[test]
    fn empty_intervention_leaves_model_unchanged() {
        let m = rock_better();
        assert_eq!(m.intervene(&Intervention::empty()).unwrap(), m);
    }

    #[test]
    fn solve_rejects_bad_inputs() {
        let m = rock_naive();
        let u = m.context([("U", 1)]).unwrap();
        assert!(m.intervention([("U", 1)]).is_err());
        assert!(m.intervention([("ST", 3)]).is_err());
        assert!(m.intervention([("Q", 0)]).is_err());
        assert!(m.context([]).is_err());
        let bad = Intervention::empty().with(m.lookup("BS").unwrap(), 7);
        assert!(matches!(
            m.solve(&u, &bad),
            Err(ModelError::ValueOutOfRange { .. })
        ));
    }

    #[test]
    fn table_equations_evaluate() {
        let mut rows = BTreeMap::new();
        for a in 0..3 {
            for b in 0..2 {
                rows.insert(vec![a, b], (a + b) % 2);
            }
        }
        let mut mb = ModelBuilder::new();
        mb.exogenous("A", [0, 1, 2])
            .exogenous("B", [0, 1])
            .endogenous(
                "P",
                [0, 1],
                Equation::Table(Table {
                    inputs: vec!["A".into(), "B".into()],
                    rows,
                }),
            );
        let m = mb.build().unwrap();
        assert!(m.validate().is_empty());
        let p = m.lookup("P").unwrap();
        let ctx = m.context([("A", 2), ("B", 1)]).unwrap();
        assert_eq!(m.solve(&ctx, &Intervention::empty()).unwrap()[p], 1);
    }
}
