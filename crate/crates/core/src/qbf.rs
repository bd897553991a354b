//! Two-block quantified Boolean formulas `∃A ∀B φ`, brute-force oracles for
//! them, and the construction of a causal model whose responsibility value
//! encodes `MINQSAT2`.

use std::collections::HashSet;
use std::fmt;

use rand::Rng;

use crate::causality::{CausalityError, CauseQuery, Event, SearchOptions};
use crate::formula::EventFormula;
use crate::model::{BinOp, CausalModel, Context, Equation, Expr, ModelBuilder, VarId};
use crate::rational::Rational;
use crate::responsibility::responsibility;

/// A propositional formula over variable indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Prop {
    Var(usize),
    Not(Box<Prop>),
    And(Box<Prop>, Box<Prop>),
    Or(Box<Prop>, Box<Prop>),
}

impl Prop {
    pub fn var(i: usize) -> Self {
        Prop::Var(i)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(p: Prop) -> Self {
        Prop::Not(Box::new(p))
    }

    pub fn and(a: Prop, b: Prop) -> Self {
        Prop::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Prop, b: Prop) -> Self {
        Prop::Or(Box::new(a), Box::new(b))
    }

    /// Evaluates with bit `i` of `bits` as the value of variable `i`.
    pub fn eval(&self, bits: u64) -> bool {
        match self {
            Prop::Var(i) => bits >> i & 1 == 1,
            Prop::Not(p) => !p.eval(bits),
            Prop::And(a, b) => a.eval(bits) && b.eval(bits),
            Prop::Or(a, b) => a.eval(bits) || b.eval(bits),
        }
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            Prop::Var(i) => Some(*i),
            Prop::Not(p) => p.max_var(),
            Prop::And(a, b) | Prop::Or(a, b) => a.max_var().max(b.max_var()),
        }
    }

    fn map_vars(&self, f: &mut impl FnMut(usize) -> Prop) -> Prop {
        match self {
            Prop::Var(i) => f(*i),
            Prop::Not(p) => Prop::not(p.map_vars(f)),
            Prop::And(a, b) => Prop::and(a.map_vars(f), b.map_vars(f)),
            Prop::Or(a, b) => Prop::or(a.map_vars(f), b.map_vars(f)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum QbfError {
    #[error("variable `{0}` is declared twice")]
    Duplicate(String),
    #[error("matrix refers to variable #{0}, which is not declared")]
    Undeclared(usize),
    #[error("`{0}` is not an existential variable")]
    NotExistential(String),
    #[error("too many variables for exhaustive evaluation ({0})")]
    TooManyVariables(usize),
    #[error("instance has {a} existential and {b} universal variables; the theorem check accepts at most 4 and 3")]
    TooLarge { a: usize, b: usize },
    #[error(transparent)]
    Causality(#[from] CausalityError),
}

/// `∃ a_vars ∀ b_vars matrix`. Matrix variable `i` is `a_vars[i]` when
/// `i < a_vars.len()` and otherwise `b_vars[i - a_vars.len()]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Qbf2 {
    a_vars: Vec<String>,
    b_vars: Vec<String>,
    matrix: Prop,
}

const MAX_VARS: usize = 24;

impl Qbf2 {
    pub fn new(a_vars: Vec<String>, b_vars: Vec<String>, matrix: Prop) -> Result<Self, QbfError> {
        let mut seen = HashSet::new();
        for n in a_vars.iter().chain(&b_vars) {
            if !seen.insert(n.as_str()) {
                return Err(QbfError::Duplicate(n.clone()));
            }
        }
        let total = a_vars.len() + b_vars.len();
        if total > MAX_VARS {
            return Err(QbfError::TooManyVariables(total));
        }
        if let Some(m) = matrix.max_var() {
            if m >= total {
                return Err(QbfError::Undeclared(m));
            }
        }
        Ok(Qbf2 {
            a_vars,
            b_vars,
            matrix,
        })
    }

    pub fn a_vars(&self) -> &[String] {
        &self.a_vars
    }

    pub fn b_vars(&self) -> &[String] {
        &self.b_vars
    }

    pub fn matrix(&self) -> &Prop {
        &self.matrix
    }

    fn var_name(&self, i: usize) -> &str {
        if i < self.a_vars.len() {
            &self.a_vars[i]
        } else {
            &self.b_vars[i - self.a_vars.len()]
        }
    }

    /// Does `∀B φ` hold once the existential block is fixed to `a_bits`?
    fn holds_for_all_b(&self, a_bits: u64) -> bool {
        let na = self.a_vars.len();
        (0..1u64 << self.b_vars.len()).all(|b| self.matrix.eval(a_bits | b << na))
    }

    /// Existential assignments under which the matrix holds for every universal one.
    pub fn witnesses(&self) -> impl Iterator<Item = QbfWitness> + '_ {
        (0..1u64 << self.a_vars.len())
            .filter(|&a| self.holds_for_all_b(a))
            .map(|bits| QbfWitness {
                bits,
                width: self.a_vars.len(),
            })
    }

    fn a_index(&self, name: &str) -> Result<usize, QbfError> {
        self.a_vars
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| QbfError::NotExistential(name.to_string()))
    }
}

/// A total assignment to the existential block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QbfWitness {
    bits: u64,
    width: usize,
}

impl QbfWitness {
    pub fn value(&self, i: usize) -> bool {
        assert!(i < self.width);
        self.bits >> i & 1 == 1
    }

    pub fn ones(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn values(&self) -> Vec<bool> {
        (0..self.width).map(|i| self.value(i)).collect()
    }
}

impl fmt::Display for Prop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_prop(f, self, 0, &|i| format!("v{i}"))
    }
}

fn prec(p: &Prop) -> u8 {
    match p {
        Prop::Or(..) => 1,
        Prop::And(..) => 2,
        _ => 3,
    }
}

fn write_prop(
    f: &mut fmt::Formatter<'_>,
    p: &Prop,
    min: u8,
    name: &dyn Fn(usize) -> String,
) -> fmt::Result {
    let own = prec(p);
    if own < min {
        write!(f, "(")?;
    }
    match p {
        Prop::Var(i) => write!(f, "{}", name(*i))?,
        Prop::Not(a) => {
            write!(f, "!")?;
            write_prop(f, a, 3, name)?;
        }
        Prop::And(a, b) | Prop::Or(a, b) => {
            write_prop(f, a, own, name)?;
            write!(f, " {} ", if own == 1 { "|" } else { "&" })?;
            write_prop(f, b, own + 1, name)?;
        }
    }
    if own < min {
        write!(f, ")")?;
    }
    Ok(())
}

impl fmt::Display for Qbf2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "exists")?;
        for a in &self.a_vars {
            write!(f, " {a}")?;
        }
        write!(f, "; forall")?;
        for b in &self.b_vars {
            write!(f, " {b}")?;
        }
        write!(f, "; matrix ")?;
        write_prop(f, &self.matrix, 0, &|i| self.var_name(i).to_string())?;
        write!(f, ";")
    }
}

pub fn eval_qbf(phi: &Qbf2) -> bool {
    phi.witnesses().next().is_some()
}

/// Largest number of existential variables set to 1 in a witness, or -1.
pub fn maxqsat2(phi: &Qbf2) -> i64 {
    phi.witnesses().map(|w| w.ones() as i64).max().unwrap_or(-1)
}

/// Smallest number of existential variables set to 1 in a witness, or `|A| + 1`.
pub fn minqsat2(phi: &Qbf2) -> i64 {
    phi.witnesses()
        .map(|w| w.ones() as i64)
        .min()
        .unwrap_or(phi.a_vars.len() as i64 + 1)
}

/// Like [`maxqsat2`] but counting only the existential variables in `z`.
pub fn subset_maxqsat2(phi: &Qbf2, z: &[String]) -> Result<i64, QbfError> {
    let mut mask = 0u64;
    for name in z {
        mask |= 1 << phi.a_index(name)?;
    }
    Ok(phi
        .witnesses()
        .map(|w| (w.bits & mask).count_ones() as i64)
        .max()
        .unwrap_or(-1))
}

/// Replaces every variable occurrence by its negation.
pub fn negate_vars(phi: &Qbf2) -> Qbf2 {
    Qbf2 {
        a_vars: phi.a_vars.clone(),
        b_vars: phi.b_vars.clone(),
        matrix: phi.matrix.map_vars(&mut |i| Prop::not(Prop::Var(i))),
    }
}

fn fresh(base: &str, taken: &HashSet<String>) -> String {
    let mut name = base.to_string();
    while taken.contains(&name) {
        name.push('\'');
    }
    name
}

/// Adds a primed twin `U'` for each existential `U` outside `z`, constrained
/// to the opposite value, so that every witness sets exactly one of each pair
/// and `maxqsat2(result) - twins == subset_maxqsat2(phi, z)` whenever `phi`
/// is true (both sides are -1 otherwise).
pub fn subset_reduction(phi: &Qbf2, z: &[String]) -> Result<Qbf2, QbfError> {
    let mut keep = vec![false; phi.a_vars.len()];
    for name in z {
        keep[phi.a_index(name)?] = true;
    }
    let outside: Vec<usize> = (0..phi.a_vars.len()).filter(|&i| !keep[i]).collect();
    if outside.is_empty() {
        return Ok(phi.clone());
    }
    let mut taken: HashSet<String> = phi.a_vars.iter().chain(&phi.b_vars).cloned().collect();
    let mut a_vars = phi.a_vars.clone();
    for &i in &outside {
        let twin = fresh(&format!("{}'", phi.a_vars[i]), &taken);
        taken.insert(twin.clone());
        a_vars.push(twin);
    }
    let na = phi.a_vars.len();
    let shift = outside.len();
    // universal indices move up by the number of twins
    let mut matrix = phi
        .matrix
        .map_vars(&mut |i| Prop::Var(if i < na { i } else { i + shift }));
    for (j, &i) in outside.iter().enumerate() {
        let u = || Prop::Var(i);
        let t = || Prop::Var(na + j);
        let differ = Prop::and(Prop::or(u(), t()), Prop::or(Prop::not(u()), Prop::not(t())));
        matrix = Prop::and(matrix, differ);
    }
    Qbf2::new(a_vars, phi.b_vars.clone(), matrix)
}

/// The situation, event and target formula built from a QBF.
#[derive(Clone, Debug)]
pub struct QbfModel {
    pub model: CausalModel,
    pub context: Context,
    pub event: Event,
    pub psi: EventFormula<VarId>,
    /// Names chosen for the two auxiliary variables.
    pub c_name: String,
    pub x_name: String,
}

/// Every existential variable has range {0,1} and equation 0; every
/// universal `S` has range {0,1,2} and equation `C + X`; `C` and `X` are
/// binary constants 0. The target is
/// `(φ' ∧ ⋀ S≠2) ∨ C=0 ∨ (X=1 ∧ C=1 ∧ ⋁ S≠2)` where `φ'` reads each
/// variable `S` as `S=1`.
pub fn qbf_to_model(phi: &Qbf2) -> QbfModel {
    let mut taken: HashSet<String> = phi.a_vars.iter().chain(&phi.b_vars).cloned().collect();
    let e_name = fresh("E", &taken);
    taken.insert(e_name.clone());
    let c_name = fresh("C", &taken);
    taken.insert(c_name.clone());
    let x_name = fresh("X", &taken);

    let mut b = ModelBuilder::new();
    b.exogenous(&e_name, [0, 1]);
    for a in &phi.a_vars {
        b.endogenous(a, [0, 1], Equation::constant(0));
    }
    let c_plus_x = Expr::bin(
        BinOp::Add,
        Expr::var(c_name.clone()),
        Expr::var(x_name.clone()),
    );
    for s in &phi.b_vars {
        b.endogenous(s, [0, 1, 2], Equation::Expr(c_plus_x.clone()));
    }
    b.endogenous(&c_name, [0, 1], Equation::constant(0));
    b.endogenous(&x_name, [0, 1], Equation::constant(0));
    let model = b.build().expect("construction uses distinct names");
    let context = model.context([(e_name.as_str(), 0)]).expect("E is binary");

    // variable i of the matrix is model variable i + 1 (after E)
    let id = |i: usize| VarId(i + 1);
    let c = model.lookup(&c_name).unwrap();
    let x = model.lookup(&x_name).unwrap();
    let na = phi.a_vars.len();
    let b_ids: Vec<VarId> = (0..phi.b_vars.len()).map(|j| id(na + j)).collect();
    let not_two = |s: VarId| EventFormula::not(EventFormula::event(s, 2));

    let phi_prime = to_event_formula(&phi.matrix, &id);
    let first = match EventFormula::all(b_ids.iter().map(|&s| not_two(s))) {
        Some(all) => EventFormula::and(phi_prime, all),
        None => phi_prime,
    };
    let mut psi = EventFormula::or(first, EventFormula::event(c, 0));
    if let Some(any) = EventFormula::any(b_ids.iter().map(|&s| not_two(s))) {
        let third = EventFormula::and(
            EventFormula::and(EventFormula::event(x, 1), EventFormula::event(c, 1)),
            any,
        );
        psi = EventFormula::or(psi, third);
    }
    QbfModel {
        model,
        context,
        event: Event::new(x, 0),
        psi,
        c_name,
        x_name,
    }
}

fn to_event_formula(p: &Prop, id: &impl Fn(usize) -> VarId) -> EventFormula<VarId> {
    match p {
        Prop::Var(i) => EventFormula::event(id(*i), 1),
        Prop::Not(a) => EventFormula::not(to_event_formula(a, id)),
        Prop::And(a, b) => EventFormula::and(to_event_formula(a, id), to_event_formula(b, id)),
        Prop::Or(a, b) => EventFormula::or(to_event_formula(a, id), to_event_formula(b, id)),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TheoremCheck {
    pub holds: bool,
    pub tqbf: bool,
    pub minqsat2: i64,
    /// `1/(minqsat2 + 2)` for a true formula, otherwise 0.
    pub expected: Rational,
    pub responsibility: Rational,
}

/// Compares responsibility in [`qbf_to_model`] with the value predicted from
/// `MINQSAT2`, each computed independently. An empty universal block is
/// padded with one variable that does not occur in the matrix.
pub fn check_responsibility_theorem(phi: &Qbf2) -> Result<TheoremCheck, QbfError> {
    let (a, b) = (phi.a_vars.len(), phi.b_vars.len());
    if a > 4 || b > 3 {
        return Err(QbfError::TooLarge { a, b });
    }
    let tqbf = eval_qbf(phi);
    let min = minqsat2(phi);
    let expected = if tqbf {
        Rational::reciprocal_succ(min as usize + 1)
    } else {
        Rational::zero()
    };
    // with no universal variable X cannot reach psi, so pad with a vacuous one
    let padded;
    let target = if phi.b_vars.is_empty() {
        let taken: HashSet<String> = phi.a_vars.iter().cloned().collect();
        padded = Qbf2::new(
            phi.a_vars.clone(),
            vec![fresh("b", &taken)],
            phi.matrix.clone(),
        )?;
        &padded
    } else {
        phi
    };
    let built = qbf_to_model(target);
    let options = SearchOptions::default();
    let query = CauseQuery {
        model: &built.model,
        context: &built.context,
        event: built.event,
        phi: &built.psi,
        options: &options,
    };
    let dr = responsibility(&query)?.value;
    Ok(TheoremCheck {
        holds: dr == expected,
        tqbf,
        minqsat2: min,
        expected,
        responsibility: dr,
    })
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// A random instance whose matrix is a conjunction of `clauses` clauses of
/// three literals each, variables named `a1..` and `b1..`.
pub fn random_3cnf(rng: &mut impl Rng, a: usize, b: usize, clauses: usize) -> Qbf2 {
    let total = a + b;
    assert!(
        total > 0 && clauses > 0,
        "need at least one variable and one clause"
    );
    let mut clause = || {
        (0..3)
            .map(|_| {
                let v = Prop::Var(rng.gen_range(0..total));
                if rng.gen_bool(0.5) {
                    Prop::not(v)
                } else {
                    v
                }
            })
            .reduce(Prop::or)
            .unwrap()
    };
    let matrix = (0..clauses).map(|_| clause()).reduce(Prop::and).unwrap();
    Qbf2::new(names("a", a), names("b", b), matrix).expect("generated names are distinct")
}

/// The formula whose truth table over `n` variables is `table` (bit `r` is
/// the value at row `r`), written as a disjunction of minterms. An all-false
/// table becomes `v1 & !v1`.
pub fn from_truth_table(n: usize, table: u64) -> Prop {
    assert!(n > 0 && n <= 6);
    let minterm = |row: u64| {
        (0..n)
            .map(|i| {
                if row >> i & 1 == 1 {
                    Prop::Var(i)
                } else {
                    Prop::not(Prop::Var(i))
                }
            })
            .reduce(Prop::and)
            .unwrap()
    };
    (0..1u64 << n)
        .filter(|r| table >> r & 1 == 1)
        .map(minterm)
        .reduce(Prop::or)
        .unwrap_or_else(|| Prop::and(Prop::Var(0), Prop::not(Prop::Var(0))))
}

/// Every instance with `|A| <= max_a`, `|B| <= max_b`, at least one variable,
/// and any matrix, one per truth table.
pub fn truth_table_family(max_a: usize, max_b: usize) -> Vec<Qbf2> {
    let mut out = Vec::new();
    for a in 0..=max_a {
        for b in 0..=max_b {
            let n = a + b;
            if n == 0 {
                continue;
            }
            for table in 0..1u64 << (1u64 << n) {
                out.push(
                    Qbf2::new(names("a", a), names("b", b), from_truth_table(n, table))
                        .expect("generated names are distinct"),
                );
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn q(a: &[&str], b: &[&str], m: Prop) -> Qbf2 {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect();
        Qbf2::new(s(a), s(b), m).unwrap()
    }

    fn v(i: usize) -> Prop {
        Prop::Var(i)
    }

    #[test]
    fn evaluation() {
        assert!(eval_qbf(&q(&["x"], &[], Prop::or(v(0), Prop::not(v(0))))));
        assert!(!eval_qbf(&q(
            &["x"],
            &["y"],
            Prop::and(v(0), Prop::not(v(0)))
        )));
        let phi = q(&["x"], &["y"], Prop::or(v(0), v(1)));
        assert!(eval_qbf(&phi));
        assert_eq!(
            phi.witnesses().map(|w| w.values()).collect::<Vec<_>>(),
            vec![vec![true]]
        );
    }

    #[test]
    fn counting_variants() {
        let or2 = q(&["x1", "x2"], &[], Prop::or(v(0), v(1)));
        assert_eq!(maxqsat2(&or2), 2);
        assert_eq!(minqsat2(&or2), 1);
        assert_eq!(subset_maxqsat2(&or2, &["x2".into()]).unwrap(), 1);
        assert_eq!(subset_maxqsat2(&or2, &[]).unwrap(), 0);
        assert_eq!(
            subset_maxqsat2(&or2, &["x1".into(), "x2".into()]).unwrap(),
            maxqsat2(&or2)
        );
        assert!(matches!(
            subset_maxqsat2(&or2, &["y".into()]),
            Err(QbfError::NotExistential(_))
        ));

        let xy = q(
            &["x"],
            &["y"],
            Prop::or(Prop::and(v(0), v(1)), Prop::and(v(0), Prop::not(v(1)))),
        );
        assert_eq!(maxqsat2(&xy), 1);

        let unsat = q(&["a", "b", "c"], &["y"], Prop::and(v(3), Prop::not(v(3))));
        assert_eq!(maxqsat2(&unsat), -1);
        assert_eq!(minqsat2(&unsat), 4);
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert_eq!(
            Qbf2::new(vec!["a".into()], vec!["a".into()], v(0)),
            Err(QbfError::Duplicate("a".into()))
        );
        assert_eq!(
            Qbf2::new(vec!["a".into()], vec![], v(1)),
            Err(QbfError::Undeclared(1))
        );
    }

    #[test]
    fn duality_on_random_instances() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let a = rng.gen_range(1..=4);
            let b = rng.gen_range(0..=3);
            let clauses = rng.gen_range(1..=5);
            let phi = random_3cnf(&mut rng, a, b, clauses);
            assert_eq!(
                maxqsat2(&phi),
                a as i64 - minqsat2(&negate_vars(&phi)),
                "{phi}"
            );
            let sat = eval_qbf(&phi);
            assert_eq!(sat, maxqsat2(&phi) >= 0);
            assert_eq!(sat, minqsat2(&phi) <= a as i64);
        }
    }

    #[test]
    fn empty_universal_block_needs_padding() {
        let q = Qbf2::new(vec!["a".into()], vec![], Prop::Var(0)).unwrap();
        let built = qbf_to_model(&q);
        let options = SearchOptions::default();
        let query = CauseQuery {
            model: &built.model,
            context: &built.context,
            event: built.event,
            phi: &built.psi,
            options: &options,
        };
        // X occurs only through the universal block
        assert!(responsibility(&query).unwrap().value.is_zero());
        let check = check_responsibility_theorem(&q).unwrap();
        assert!(check.holds);
        assert_eq!(check.responsibility, Rational::new(1, 3));
    }

    #[test]
    fn subset_reduction_recovers_subset_count() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let a = rng.gen_range(1..=3);
            let b = rng.gen_range(0..=2);
            let clauses = rng.gen_range(1..=4);
            let phi = random_3cnf(&mut rng, a, b, clauses);
            let z: Vec<String> = phi
                .a_vars()
                .iter()
                .filter(|_| rng.gen_bool(0.5))
                .cloned()
                .collect();
            let reduced = subset_reduction(&phi, &z).unwrap();
            let twins = (a - z.len()) as i64;
            let lhs = match maxqsat2(&reduced) {
                -1 => -1,
                m => m - twins,
            };
            assert_eq!(lhs, subset_maxqsat2(&phi, &z).unwrap(), "{phi} z={z:?}");
        }
        let or2 = q(&["x1", "x2"], &[], Prop::or(v(0), v(1)));
        let all = vec!["x1".to_string(), "x2".to_string()];
        assert_eq!(subset_reduction(&or2, &all).unwrap(), or2);
    }

    #[test]
    fn twin_names_avoid_collisions() {
        let phi = q(&["u", "u'"], &[], Prop::or(v(0), v(1)));
        let r = subset_reduction(&phi, &[]).unwrap();
        assert_eq!(r.a_vars(), ["u", "u'", "u''", "u'''"]);
    }

    #[test]
    fn built_model_shape() {
        let phi = q(&["a"], &["b"], Prop::or(v(0), v(1)));
        let built = qbf_to_model(&phi);
        let m = &built.model;
        assert!(m.validate().is_empty());
        let actual = m.solve(&built.context, &Default::default()).unwrap();
        assert!(m.endogenous().all(|v| actual[v] == 0));
        assert!(built.psi.holds(actual.values()));
        assert_eq!(m.signature().range(m.lookup("b").unwrap()), [0, 1, 2]);
    }

    #[test]
    fn auxiliary_names_are_fresh() {
        let phi = q(&["C", "X"], &["E"], Prop::or(v(0), v(2)));
        let built = qbf_to_model(&phi);
        assert_eq!(built.c_name, "C'");
        assert_eq!(built.x_name, "X'");
        assert_eq!(built.model.signature().len(), 6);
    }

    #[test]
    fn theorem_on_small_cases() {
        let phi = q(&["a"], &["b"], Prop::or(v(0), v(1)));
        let check = check_responsibility_theorem(&phi).unwrap();
        assert!(check.holds);
        assert_eq!(check.responsibility, Rational::new(1, 3));

        let unsat = q(&["a"], &["b"], Prop::and(v(1), Prop::not(v(1))));
        let check = check_responsibility_theorem(&unsat).unwrap();
        assert!(check.holds);
        assert!(check.responsibility.is_zero());

        let big = q(&["a1", "a2", "a3", "a4", "a5"], &[], v(0));
        assert!(matches!(
            check_responsibility_theorem(&big),
            Err(QbfError::TooLarge { a: 5, b: 0 })
        ));
    }

    #[test]
    fn truth_tables_cover_every_function() {
        for table in 0..16u64 {
            let p = from_truth_table(2, table);
            for row in 0..4u64 {
                assert_eq!(p.eval(row), table >> row & 1 == 1);
            }
        }
        assert_eq!(truth_table_family(1, 1).len(), 4 + 4 + 16);
    }

    #[test]
    fn display_round_trip_shape() {
        let phi = q(
            &["a", "b"],
            &["y"],
            Prop::and(Prop::or(v(0), v(2)), Prop::or(v(1), Prop::not(v(2)))),
        );
        assert_eq!(
            phi.to_string(),
            "exists a b; forall y; matrix (a | y) & (b | !y);"
        );
    }
}
