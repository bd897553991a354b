//! Actual causation: AC1, AC2(a), AC2(b) and the contingency search.
//!
//! A candidate contingency assigns every endogenous variable other than the
//! candidate cause `X` one of three roles: outside `W`, inside `W` frozen at
//! its actual value, or inside `W` changed to some other value. Only changed
//! variables count toward `k`. Candidates are visited breadth-first on `k`,
//! then by changed set, frozen set (shortest first), changed values and
//! finally the alternative value `x'`, all in declaration order. The first
//! passing candidate is therefore the canonical minimal witness.

use std::fmt;

use crate::formula::{EventFormula, FormulaError};
use crate::model::{CausalModel, Context, Diagnostic, ModelError, VarId};

/// A primitive event `X = x` over an endogenous variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Event {
    pub var: VarId,
    pub value: i64,
}

impl Event {
    pub fn new(var: VarId, value: i64) -> Self {
        Event { var, value }
    }
}

/// Settings that may not be used to demonstrate causality.
///
/// Each pattern is a partial assignment over endogenous variables, given by
/// name so one policy can be applied to every model of an epistemic state.
/// A contingency is disallowed when a pattern holds in the world produced by
/// `[X <- x', W <- w']` or by `[X <- x, W <- w']`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AllowabilityPolicy {
    pub forbidden: Vec<Vec<(String, i64)>>,
}

impl AllowabilityPolicy {
    pub fn unrestricted() -> Self {
        Self::default()
    }

    pub fn forbid<'a>(mut self, pattern: impl IntoIterator<Item = (&'a str, i64)>) -> Self {
        self.forbidden.push(
            pattern
                .into_iter()
                .map(|(n, v)| (n.to_string(), v))
                .collect(),
        );
        self
    }

    pub fn is_empty(&self) -> bool {
        self.forbidden.is_empty()
    }

    fn bind(&self, model: &CausalModel) -> Result<BoundPolicy, CausalityError> {
        let mut patterns = Vec::with_capacity(self.forbidden.len());
        for pattern in &self.forbidden {
            let mut bound = Vec::with_capacity(pattern.len());
            for (name, value) in pattern {
                let v = model.endogenous_var(name)?;
                model.check_value(v, *value)?;
                bound.push((v, *value));
            }
            patterns.push(bound);
        }
        Ok(BoundPolicy { patterns })
    }
}

#[derive(Clone, Debug, Default)]
struct BoundPolicy {
    patterns: Vec<Vec<(VarId, i64)>>,
}

impl BoundPolicy {
    fn forbids(&self, world: &[i64]) -> bool {
        self.patterns
            .iter()
            .any(|p| p.iter().all(|&(v, x)| world[v.0] == x))
    }

    fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.patterns.iter().flatten().map(|&(v, _)| v)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Strategy {
    #[default]
    Exhaustive,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchOptions {
    pub policy: AllowabilityPolicy,
    /// Upper bound on `k`; when it cuts the search short without a witness
    /// the outcome is inconclusive rather than negative.
    pub max_changes: Option<usize>,
    pub strategy: Strategy,
}

impl SearchOptions {
    pub fn with_policy(policy: AllowabilityPolicy) -> Self {
        SearchOptions {
            policy,
            ..Self::default()
        }
    }
}

/// A contingency `(x', W, w')` certifying AC2.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CauseWitness {
    pub x_prime: i64,
    /// `W` with its setting `w'`, sorted by variable.
    pub w: Vec<(VarId, i64)>,
    changed: Vec<VarId>,
}

impl CauseWitness {
    /// `actual` holds the solved values of `(M, u)`; it decides which members of `W` count as changed.
    pub fn new(x_prime: i64, mut w: Vec<(VarId, i64)>, actual: &[i64]) -> Self {
        w.sort();
        let changed = w
            .iter()
            .filter(|&&(v, x)| actual[v.0] != x)
            .map(|&(v, _)| v)
            .collect();
        CauseWitness {
            x_prime,
            w,
            changed,
        }
    }

    pub fn k(&self) -> usize {
        self.changed.len()
    }

    pub fn changed(&self) -> &[VarId] {
        &self.changed
    }

    pub fn changed_pairs(&self) -> impl Iterator<Item = (VarId, i64)> + '_ {
        self.w
            .iter()
            .copied()
            .filter(|(v, _)| self.changed.contains(v))
    }

    pub fn frozen_pairs(&self) -> impl Iterator<Item = (VarId, i64)> + '_ {
        self.w
            .iter()
            .copied()
            .filter(|(v, _)| !self.changed.contains(v))
    }

    pub fn w_set(&self) -> Vec<VarId> {
        self.w.iter().map(|&(v, _)| v).collect()
    }

    /// Ordering key matching the search order.
    pub fn canonical_key(&self) -> (usize, Vec<VarId>, usize, Vec<VarId>, Vec<i64>, i64) {
        let frozen: Vec<VarId> = self.frozen_pairs().map(|(v, _)| v).collect();
        let values: Vec<i64> = self.changed_pairs().map(|(_, x)| x).collect();
        (
            self.k(),
            self.changed.clone(),
            frozen.len(),
            frozen,
            values,
            self.x_prime,
        )
    }

    pub fn display<'a>(&'a self, model: &'a CausalModel, cause: VarId) -> impl fmt::Display + 'a {
        WitnessDisplay {
            w: self,
            model,
            cause,
        }
    }
}

struct WitnessDisplay<'a> {
    w: &'a CauseWitness,
    model: &'a CausalModel,
    cause: VarId,
}

impl fmt::Display for WitnessDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |pairs: Vec<(VarId, i64)>| {
            if pairs.is_empty() {
                "-".to_string()
            } else {
                pairs
                    .iter()
                    .map(|&(v, x)| format!("{}<-{}", self.model.name(v), x))
                    .collect::<Vec<_>>()
                    .join(", ")
            }
        };
        write!(
            f,
            "{}<-{}; changed: {}; frozen: {}; k={}",
            self.model.name(self.cause),
            self.w.x_prime,
            list(self.w.changed_pairs().collect()),
            list(self.w.frozen_pairs().collect()),
            self.w.k()
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CauseVerdict {
    Cause(CauseWitness),
    NotCause,
    /// No witness with at most `cap` changes; larger contingencies were not explored.
    Inconclusive {
        cap: usize,
    },
}

impl CauseVerdict {
    pub fn is_cause(&self) -> bool {
        matches!(self, CauseVerdict::Cause(_))
    }

    pub fn witness(&self) -> Option<&CauseWitness> {
        match self {
            CauseVerdict::Cause(w) => Some(w),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CausalityError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("invalid model: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidModel(Vec<Diagnostic>),
    #[error("witness is malformed: {0}")]
    MalformedWitness(String),
    #[error("inconclusive: no witness with at most {cap} changes")]
    CapReached {
        cap: usize,
        partial: Vec<CauseWitness>,
    },
}

/// A question "is `X = x` a cause of `phi` in `(M, u)`?".
#[derive(Clone, Copy, Debug)]
pub struct CauseQuery<'a> {
    pub model: &'a CausalModel,
    pub context: &'a Context,
    pub event: Event,
    pub phi: &'a EventFormula<VarId>,
    pub options: &'a SearchOptions,
}

/// Per-query state for the contingency search.
pub(crate) struct Engine<'a> {
    model: &'a CausalModel,
    base: Vec<i64>,
    actual: Vec<i64>,
    event: Event,
    phi: &'a EventFormula<VarId>,
    policy: BoundPolicy,
    /// Variables that may join `W`.
    candidates: Vec<VarId>,
    /// Variables whose restoration can influence `phi`.
    restorable: Vec<bool>,
    alternatives: Vec<i64>,
    ac1: bool,
}

struct Scratch {
    overrides: Vec<Option<i64>>,
    world: Vec<i64>,
    zs: Vec<VarId>,
}

impl<'a> Engine<'a> {
    /// `prune` restricts `W` to ancestors of `phi` and of the policy's
    /// variables; a non-ancestor in `W` can always be dropped without
    /// affecting AC2, so minimal witnesses are unchanged.
    pub(crate) fn new(query: &CauseQuery<'a>, prune: bool) -> Result<Self, CausalityError> {
        let model = query.model;
        let diagnostics = model.validate();
        if !diagnostics.is_empty() {
            return Err(CausalityError::InvalidModel(diagnostics));
        }
        model.check_context(query.context)?;
        let x = query.event.var;
        if x.0 >= model.signature().len() || !model.signature().is_endogenous(x) {
            return Err(ModelError::NotEndogenous(format!("#{}", x.0)).into());
        }
        model.check_value(x, query.event.value)?;
        let mut bad_phi = None;
        query.phi.for_each_event(&mut |v, val| {
            if bad_phi.is_none()
                && (v.0 >= model.signature().len()
                    || !model.signature().is_endogenous(*v)
                    || !model.signature().decl(*v).contains(val))
            {
                bad_phi = Some((*v, val));
            }
        });
        if let Some((v, val)) = bad_phi {
            return Err(FormulaError::ValueOutOfRange {
                var: if v.0 < model.signature().len() {
                    model.name(v).to_string()
                } else {
                    format!("#{}", v.0)
                },
                value: val,
            }
            .into());
        }
        let policy = query.options.policy.bind(model)?;

        let base = model.base_values(query.context);
        let n = model.signature().len();
        let mut actual = Vec::with_capacity(n);
        model.solve_fast(&base, &vec![None; n], &mut actual);
        let ac1 = actual[x.0] == query.event.value && query.phi.holds(&actual);

        let restorable = model.ancestors_or_self(query.phi.vars());
        let searchable = if prune {
            model.ancestors_or_self(query.phi.vars().into_iter().chain(policy.vars()))
        } else {
            vec![true; n]
        };
        let candidates = model
            .endogenous()
            .filter(|&v| v != x && searchable[v.0])
            .collect();
        let alternatives = model
            .signature()
            .range(x)
            .iter()
            .copied()
            .filter(|&a| a != query.event.value)
            .collect();
        Ok(Engine {
            model,
            base,
            actual,
            event: query.event,
            phi: query.phi,
            policy,
            candidates,
            restorable,
            alternatives,
            ac1,
        })
    }

    pub(crate) fn ac1(&self) -> bool {
        self.ac1
    }

    fn scratch(&self) -> Scratch {
        let n = self.model.signature().len();
        Scratch {
            overrides: vec![None; n],
            world: Vec::with_capacity(n),
            zs: Vec::with_capacity(n),
        }
    }

    /// AC2(a), AC2(b) and allowability for the contingency `(x', W <- w')`.
    fn check(&self, x_prime: i64, w: &[(VarId, i64)], s: &mut Scratch) -> bool {
        let x = self.event.var;
        s.overrides.iter_mut().for_each(|o| *o = None);
        for &(v, val) in w {
            s.overrides[v.0] = Some(val);
        }

        // (a) [X <- x', W <- w'] not phi
        s.overrides[x.0] = Some(x_prime);
        self.model
            .solve_fast(&self.base, &s.overrides, &mut s.world);
        if self.phi.holds(&s.world) || self.policy.forbids(&s.world) {
            return false;
        }

        // (b) [X <- x, W <- w', Z' <- z*] phi for every Z' of the complement
        s.overrides[x.0] = Some(self.event.value);
        self.model
            .solve_fast(&self.base, &s.overrides, &mut s.world);
        if !self.phi.holds(&s.world) || self.policy.forbids(&s.world) {
            return false;
        }
        s.zs.clear();
        s.zs.extend(
            self.model
                .endogenous()
                .filter(|&v| v != x && self.restorable[v.0] && s.overrides[v.0].is_none()),
        );
        let m = s.zs.len();
        debug_assert!(m < 63);
        for mask in 1u64..(1u64 << m) {
            for (j, &z) in s.zs.iter().enumerate() {
                s.overrides[z.0] = if mask >> j & 1 == 1 {
                    Some(self.actual[z.0])
                } else {
                    None
                };
            }
            self.model
                .solve_fast(&self.base, &s.overrides, &mut s.world);
            if !self.phi.holds(&s.world) {
                return false;
            }
        }
        true
    }

    /// Public-facing AC2 check of an arbitrary witness.
    pub(crate) fn check_witness(&self, witness: &CauseWitness) -> Result<bool, CausalityError> {
        let sig = self.model.signature();
        if !sig.decl(self.event.var).contains(witness.x_prime) {
            return Err(CausalityError::MalformedWitness(format!(
                "x' = {} outside the range of {}",
                witness.x_prime,
                self.model.name(self.event.var)
            )));
        }
        for (i, &(v, x)) in witness.w.iter().enumerate() {
            if v.0 >= sig.len() || !sig.is_endogenous(v) {
                return Err(CausalityError::MalformedWitness(format!(
                    "#{} is not endogenous",
                    v.0
                )));
            }
            if v == self.event.var {
                return Err(CausalityError::MalformedWitness(
                    "W must not contain the candidate cause".into(),
                ));
            }
            if i > 0 && witness.w[i - 1].0 == v {
                return Err(CausalityError::MalformedWitness(format!(
                    "{} listed twice",
                    self.model.name(v)
                )));
            }
            if !sig.decl(v).contains(x) {
                return Err(CausalityError::MalformedWitness(format!(
                    "{} <- {} outside range",
                    self.model.name(v),
                    x
                )));
            }
        }
        let mut s = self.scratch();
        Ok(self.check(witness.x_prime, &witness.w, &mut s))
    }

    fn for_each_value_choice(&self, changed: &[VarId], mut f: impl FnMut(&[i64]) -> bool) -> bool {
        let choices: Vec<Vec<i64>> = changed
            .iter()
            .map(|&v| {
                self.model
                    .signature()
                    .range(v)
                    .iter()
                    .copied()
                    .filter(|&x| x != self.actual[v.0])
                    .collect()
            })
            .collect();
        if choices.iter().any(|c| c.is_empty()) {
            return false;
        }
        let mut pos = vec![0usize; changed.len()];
        let mut values: Vec<i64> = choices.iter().map(|c| c[0]).collect();
        loop {
            if f(&values) {
                return true;
            }
            // odometer with the last position varying fastest
            let mut i = changed.len();
            loop {
                if i == 0 {
                    return false;
                }
                i -= 1;
                pos[i] += 1;
                if pos[i] < choices[i].len() {
                    values[i] = choices[i][pos[i]];
                    break;
                }
                pos[i] = 0;
                values[i] = choices[i][0];
            }
        }
    }

    /// Visits, in canonical order, every contingency whose changed set is
    /// exactly `changed`; stops when `visit` returns true.
    fn scan_changed_set(
        &self,
        changed: &[VarId],
        s: &mut Scratch,
        visit: &mut impl FnMut(CauseWitness) -> bool,
    ) -> bool {
        let rest: Vec<VarId> = self
            .candidates
            .iter()
            .copied()
            .filter(|v| !changed.contains(v))
            .collect();
        let mut w: Vec<(VarId, i64)> = Vec::with_capacity(self.candidates.len());
        for size in 0..=rest.len() {
            let stop = for_each_combination(&rest, size, |frozen| {
                self.for_each_value_choice(changed, |values| {
                    w.clear();
                    w.extend(changed.iter().copied().zip(values.iter().copied()));
                    w.extend(frozen.iter().map(|&v| (v, self.actual[v.0])));
                    w.sort();
                    for &xp in &self.alternatives {
                        if self.check(xp, &w, s) {
                            let witness = CauseWitness::new(xp, w.clone(), &self.actual);
                            if visit(witness) {
                                return true;
                            }
                        }
                    }
                    false
                })
            });
            if stop {
                return true;
            }
        }
        false
    }

    pub(crate) fn first_with_changed(&self, changed: &[VarId]) -> Option<CauseWitness> {
        let mut s = self.scratch();
        let mut found = None;
        self.scan_changed_set(changed, &mut s, &mut |w| {
            found = Some(w);
            true
        });
        found
    }

    fn effective_cap(&self, cap: Option<usize>) -> (usize, bool) {
        let n = self.candidates.len();
        match cap {
            Some(c) if c < n => (c, true),
            _ => (n, false),
        }
    }

    /// Breadth-first on `k`: the canonical witness of minimal `k`.
    pub(crate) fn first_witness(&self, cap: Option<usize>) -> CauseVerdict {
        if !self.ac1 {
            return CauseVerdict::NotCause;
        }
        let (max_k, truncated) = self.effective_cap(cap);
        for k in 0..=max_k {
            let mut found = None;
            for_each_combination(&self.candidates, k, |changed| {
                found = self.first_with_changed(changed);
                found.is_some()
            });
            if let Some(w) = found {
                return CauseVerdict::Cause(w);
            }
        }
        if truncated {
            CauseVerdict::Inconclusive { cap: max_k }
        } else {
            CauseVerdict::NotCause
        }
    }

    /// Every witness with at most `cap` changes, in canonical order.
    pub(crate) fn all_witnesses(&self, cap: Option<usize>) -> (Vec<CauseWitness>, bool) {
        let (max_k, truncated) = self.effective_cap(cap);
        let mut out = Vec::new();
        if !self.ac1 {
            return (out, false);
        }
        let mut s = self.scratch();
        for k in 0..=max_k {
            for_each_combination(&self.candidates, k, |changed| {
                self.scan_changed_set(changed, &mut s, &mut |w| {
                    out.push(w);
                    false
                });
                false
            });
        }
        (out, truncated)
    }

    /// The witness minimizing the summed weight of its changed variables,
    /// ties broken by canonical order. `weight` must be positive.
    pub(crate) fn lightest_witness<W: Clone + Ord + std::iter::Sum<W>>(
        &self,
        weight: impl Fn(VarId) -> W,
        cap: Option<usize>,
    ) -> CauseVerdict {
        if !self.ac1 {
            return CauseVerdict::NotCause;
        }
        let (max_k, truncated) = self.effective_cap(cap);
        let mut sets: Vec<(W, usize, Vec<VarId>)> = Vec::new();
        for k in 0..=max_k {
            for_each_combination(&self.candidates, k, |c| {
                let wt = c.iter().map(|&v| weight(v)).sum::<W>();
                sets.push((wt, k, c.to_vec()));
                false
            });
        }
        sets.sort();
        for (_, _, changed) in &sets {
            if let Some(w) = self.first_with_changed(changed) {
                return CauseVerdict::Cause(w);
            }
        }
        if truncated {
            CauseVerdict::Inconclusive { cap: max_k }
        } else {
            CauseVerdict::NotCause
        }
    }
}

/// Calls `f` on each `size`-subset of `items` in lexicographic order of
/// positions; stops early and returns true when `f` does.
pub(crate) fn for_each_combination<T: Copy>(
    items: &[T],
    size: usize,
    mut f: impl FnMut(&[T]) -> bool,
) -> bool {
    let n = items.len();
    if size > n {
        return false;
    }
    let mut idx: Vec<usize> = (0..size).collect();
    let mut buf: Vec<T> = idx.iter().map(|&i| items[i]).collect();
    loop {
        if f(&buf) {
            return true;
        }
        let mut i = size;
        loop {
            if i == 0 {
                return false;
            }
            i -= 1;
            if idx[i] < n - size + i {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..size {
            idx[j] = idx[j - 1] + 1;
        }
        for j in i..size {
            buf[j] = items[idx[j]];
        }
    }
}

/// AC1: `X = x` and `phi` both hold in `(M, u)`.
pub fn check_ac1(query: &CauseQuery<'_>) -> Result<bool, CausalityError> {
    Ok(Engine::new(query, true)?.ac1())
}

/// AC2 (both parts) plus allowability for one explicit witness.
pub fn check_ac2(
    model: &CausalModel,
    context: &Context,
    event: Event,
    phi: &EventFormula<VarId>,
    witness: &CauseWitness,
    policy: &AllowabilityPolicy,
) -> Result<bool, CausalityError> {
    let options = SearchOptions::with_policy(policy.clone());
    let query = CauseQuery {
        model,
        context,
        event,
        phi,
        options: &options,
    };
    Engine::new(&query, false)?.check_witness(witness)
}

/// Decides whether `X = x` is an actual cause of `phi`; AC3 holds
/// automatically for a single conjunct.
pub fn is_cause(query: &CauseQuery<'_>) -> Result<CauseVerdict, CausalityError> {
    let engine = Engine::new(query, true)?;
    Ok(engine.first_witness(query.options.max_changes))
}

/// All AC2 witnesses in canonical order (empty when AC1 fails).
pub fn enumerate_witnesses(query: &CauseQuery<'_>) -> Result<Vec<CauseWitness>, CausalityError> {
    let engine = Engine::new(query, false)?;
    let (witnesses, truncated) = engine.all_witnesses(query.options.max_changes);
    if truncated {
        Err(CausalityError::CapReached {
            cap: query.options.max_changes.unwrap_or(0),
            partial: witnesses,
        })
    } else {
        Ok(witnesses)
    }
}
