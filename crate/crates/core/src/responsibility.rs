//! Degree of responsibility, its weighted variant, and degree of blame.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::causality::{
    is_cause, CausalityError, CauseQuery, CauseVerdict, CauseWitness, Engine, Event, SearchOptions,
};
use crate::formula::{EventFormula, FormulaError};
use crate::model::{CausalModel, Context, Diagnostic, Intervention, ModelError, VarId};
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResponsibilityResult {
    pub value: Rational,
    pub witness: Option<CauseWitness>,
    /// Changed variables in the witness; `None` when `value` is zero.
    pub k: Option<usize>,
}

impl ResponsibilityResult {
    pub fn zero() -> Self {
        ResponsibilityResult {
            value: Rational::zero(),
            witness: None,
            k: None,
        }
    }

    fn from_witness(value: Rational, w: CauseWitness) -> Self {
        ResponsibilityResult {
            value,
            k: Some(w.k()),
            witness: Some(w),
        }
    }
}

fn inconclusive(cap: usize) -> CausalityError {
    CausalityError::CapReached {
        cap,
        partial: Vec::new(),
    }
}

/// `1/(k+1)` for the least `k` admitting a witness, or 0 for a non-cause.
pub fn responsibility(query: &CauseQuery<'_>) -> Result<ResponsibilityResult, CausalityError> {
    match is_cause(query)? {
        CauseVerdict::Cause(w) => Ok(ResponsibilityResult::from_witness(
            Rational::reciprocal_succ(w.k()),
            w,
        )),
        CauseVerdict::NotCause => Ok(ResponsibilityResult::zero()),
        CauseVerdict::Inconclusive { cap } => Err(inconclusive(cap)),
    }
}

/// Positive weights per endogenous variable name; unlisted variables weigh 1.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WeightTable {
    weights: BTreeMap<String, Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("weight of `{name}` must be positive, got {weight}")]
pub struct NonPositiveWeight {
    pub name: String,
    pub weight: Rational,
}

impl WeightTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, name: &str, weight: Rational) -> Result<(), NonPositiveWeight> {
        if !weight.is_positive() {
            return Err(NonPositiveWeight {
                name: name.to_string(),
                weight,
            });
        }
        self.weights.insert(name.to_string(), weight);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Rational {
        self.weights
            .get(name)
            .cloned()
            .unwrap_or_else(Rational::one)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Rational)> {
        self.weights.iter().map(|(n, w)| (n.as_str(), w))
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    fn bind(&self, model: &CausalModel) -> Result<Vec<Rational>, ModelError> {
        for name in self.weights.keys() {
            model.endogenous_var(name)?;
        }
        Ok(model
            .signature()
            .vars()
            .map(|(_, d)| self.get(&d.name))
            .collect())
    }
}

/// `wt(X) / (wt(changed) + wt(X))` for the witness of least changed weight.
pub fn weighted_responsibility(
    query: &CauseQuery<'_>,
    weights: &WeightTable,
) -> Result<ResponsibilityResult, CausalityError> {
    let wt = weights.bind(query.model)?;
    let engine = Engine::new(query, true)?;
    let verdict = engine.lightest_witness(|v| wt[v.0].clone(), query.options.max_changes);
    match verdict {
        CauseVerdict::Cause(w) => {
            let x = wt[query.event.var.0].clone();
            let changed: Rational = w.changed().iter().map(|v| &wt[v.0]).sum();
            let value = x.clone() / (changed + x);
            Ok(ResponsibilityResult::from_witness(value, w))
        }
        CauseVerdict::NotCause => Ok(ResponsibilityResult::zero()),
        CauseVerdict::Inconclusive { cap } => Err(inconclusive(cap)),
    }
}

#[derive(Clone, Debug)]
pub struct Situation {
    pub label: String,
    pub model: Arc<CausalModel>,
    pub context: Context,
    pub probability: Rational,
}

/// A finite distribution over situations.
#[derive(Clone, Debug, Default)]
pub struct EpistemicState {
    pub situations: Vec<Situation>,
}

impl EpistemicState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(
        &mut self,
        label: impl Into<String>,
        model: Arc<CausalModel>,
        context: Context,
        probability: Rational,
    ) -> &mut Self {
        self.situations.push(Situation {
            label: label.into(),
            model,
            context,
            probability,
        });
        self
    }

    pub fn len(&self) -> usize {
        self.situations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.situations.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StateDiagnostic {
    Empty,
    NegativeProbability {
        index: usize,
        probability: Rational,
    },
    SumNotOne {
        sum: Rational,
    },
    InvalidModel {
        index: usize,
        diagnostics: Vec<Diagnostic>,
    },
    InvalidContext {
        index: usize,
        error: ModelError,
    },
}

impl std::fmt::Display for StateDiagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StateDiagnostic::Empty => write!(f, "epistemic state has no situations"),
            StateDiagnostic::NegativeProbability { index, probability } => {
                write!(
                    f,
                    "situation {index} has negative probability {probability}"
                )
            }
            StateDiagnostic::SumNotOne { sum } => write!(f, "probabilities sum to {sum}, not 1"),
            StateDiagnostic::InvalidModel { index, diagnostics } => {
                write!(f, "invalid model at index {index}")?;
                for d in diagnostics {
                    write!(f, "; {d}")?;
                }
                Ok(())
            }
            StateDiagnostic::InvalidContext { index, error } => {
                write!(f, "situation {index}: {error}")
            }
        }
    }
}

pub fn validate_epistemic_state(state: &EpistemicState) -> Vec<StateDiagnostic> {
    let mut out = Vec::new();
    if state.is_empty() {
        out.push(StateDiagnostic::Empty);
        return out;
    }
    for (index, s) in state.situations.iter().enumerate() {
        if s.probability.is_negative() {
            out.push(StateDiagnostic::NegativeProbability {
                index,
                probability: s.probability.clone(),
            });
        }
        let diagnostics = s.model.validate();
        if !diagnostics.is_empty() {
            out.push(StateDiagnostic::InvalidModel { index, diagnostics });
        } else if let Err(error) = s.model.check_context(&s.context) {
            out.push(StateDiagnostic::InvalidContext { index, error });
        }
    }
    let sum: Rational = state.situations.iter().map(|s| &s.probability).sum();
    if sum != Rational::one() {
        out.push(StateDiagnostic::SumNotOne { sum });
    }
    out
}

/// "How much is an agent to blame for setting `X` to `x`, as far as `phi` goes?"
#[derive(Clone, Debug)]
pub struct BlameQuery {
    pub state: EpistemicState,
    pub action: (String, i64),
    pub phi: EventFormula<String>,
    pub options: SearchOptions,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SituationBlame {
    pub label: String,
    pub probability: Rational,
    pub responsibility: ResponsibilityResult,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlameResult {
    pub value: Rational,
    pub situations: Vec<SituationBlame>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum BlameError {
    #[error("invalid epistemic state: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidState(Vec<StateDiagnostic>),
    #[error("situation `{label}`: {source}")]
    Binding {
        label: String,
        #[source]
        source: CausalityError,
    },
    #[error("situation `{label}`: responsibility is inconclusive within {cap} changes")]
    Inconclusive { label: String, cap: usize },
}

fn situation_responsibility(
    s: &Situation,
    query: &BlameQuery,
) -> Result<ResponsibilityResult, BlameError> {
    let bind_err = |source: CausalityError| BlameError::Binding {
        label: s.label.clone(),
        source,
    };
    let (name, x) = &query.action;
    let var: VarId = s
        .model
        .endogenous_var(name)
        .map_err(|e| bind_err(e.into()))?;
    let phi = query
        .phi
        .bind(&s.model)
        .map_err(|e: FormulaError| bind_err(e.into()))?;
    let acted = s
        .model
        .intervene(&Intervention::from_pairs([(var, *x)]))
        .map_err(|e| bind_err(e.into()))?;
    let q = CauseQuery {
        model: &acted,
        context: &s.context,
        event: Event::new(var, *x),
        phi: &phi,
        options: &query.options,
    };
    match responsibility(&q) {
        Ok(r) => Ok(r),
        Err(CausalityError::CapReached { cap, .. }) => Err(BlameError::Inconclusive {
            label: s.label.clone(),
            cap,
        }),
        Err(e) => Err(bind_err(e)),
    }
}

/// Expected responsibility of `X = x` for `phi`, each situation evaluated
/// after the action has been performed.
pub fn blame(query: &BlameQuery) -> Result<BlameResult, BlameError> {
    let diagnostics = validate_epistemic_state(&query.state);
    if !diagnostics.is_empty() {
        return Err(BlameError::InvalidState(diagnostics));
    }
    let situations = &query.state.situations;

    #[cfg(feature = "parallel")]
    let results: Vec<Result<ResponsibilityResult, BlameError>> = {
        use rayon::prelude::*;
        situations
            .par_iter()
            .map(|s| situation_responsibility(s, query))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<ResponsibilityResult, BlameError>> = situations
        .iter()
        .map(|s| situation_responsibility(s, query))
        .collect();

    let mut value = Rational::zero();
    let mut per = Vec::with_capacity(situations.len());
    for (s, r) in situations.iter().zip(results) {
        let r = r?;
        value = value + &s.probability * &r.value;
        per.push(SituationBlame {
            label: s.label.clone(),
            probability: s.probability.clone(),
            responsibility: r,
        });
    }
    Ok(BlameResult {
        value,
        situations: per,
    })
}
