//! Actual causality, responsibility and blame over finite structural
//! equation models, with exact rational arithmetic throughout.

pub mod causality;
pub mod formula;
pub mod io;
pub mod lexer;
pub mod model;
pub mod qbf;
pub mod rational;
pub mod responsibility;

pub use causality::{
    check_ac1, check_ac2, enumerate_witnesses, is_cause, AllowabilityPolicy, CausalityError,
    CauseQuery, CauseVerdict, CauseWitness, Event, SearchOptions, Strategy,
};
pub use formula::{
    eval_formula, parse_event_formula, parse_formula, BasicFormula, CausalFormula, EventFormula,
    FormulaError,
};
pub use lexer::{ParseError, Pos};
pub use model::{
    Assignment, CausalModel, Context, Diagnostic, Equation, Expr, Intervention, ModelBuilder,
    ModelError, Signature, Table, VarDecl, VarId, VarKind,
};
pub use qbf::{
    check_responsibility_theorem, eval_qbf, maxqsat2, minqsat2, negate_vars, qbf_to_model,
    subset_maxqsat2, subset_reduction, Prop, Qbf2, QbfError, QbfModel, QbfWitness, TheoremCheck,
};
pub use rational::Rational;
pub use responsibility::{
    blame, responsibility, validate_epistemic_state, weighted_responsibility, BlameError,
    BlameQuery, BlameResult, EpistemicState, NonPositiveWeight, ResponsibilityResult, Situation,
    SituationBlame, StateDiagnostic, WeightTable,
};
