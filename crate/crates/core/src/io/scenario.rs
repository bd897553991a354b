//! The `.scn` scenario format: an epistemic state plus a blame question.
//!
//! ```text
//! scenario suzy;
//! model rock = "suzy_blame.scm";
//! situation rock u1 1/4;
//! situation rock u2 3/4;
//! action ST <- 1;
//! phi BS=1;
//! allow;
//! ```
//!
//! Models can also be written inline as `model NAME { ...items... }`.

use std::fmt;
use std::path::{Path, PathBuf};

use super::model_text::{
    forbid_block, parse_model, parse_model_items, write_items, LoadError, LoadedModel,
    ModelDocument, Value,
};
use crate::causality::{AllowabilityPolicy, SearchOptions};
use crate::formula::{event_formula, EventFormula};
use crate::lexer::{Cursor, ParseError, Tok};
use crate::rational::Rational;
use crate::responsibility::{BlameQuery, EpistemicState};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModelSource {
    File(String),
    Inline(ModelDocument),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SituationEntry {
    pub model: String,
    pub context: String,
    pub probability: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScenarioDocument {
    pub name: Option<String>,
    pub models: Vec<(String, ModelSource)>,
    pub situations: Vec<SituationEntry>,
    pub action: (String, i64),
    pub phi: EventFormula<String>,
    /// Apply the forbid blocks declared by the models.
    pub allow: bool,
    pub forbid: Vec<Vec<(String, Value)>>,
    pub max_changes: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("{}:{source}", .path.display())]
    Parse {
        path: PathBuf,
        #[source]
        source: ParseError,
    },
    #[error("cannot read {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("model `{model}`: {source}")]
    Load {
        model: String,
        #[source]
        source: LoadError,
    },
    #[error("model `{model}` has no context `{context}`")]
    UnknownContext { model: String, context: String },
    #[error("forbid pattern value `{0}` must be an integer in scenario files")]
    LabelInPattern(String),
}

pub fn parse_scenario(text: &str) -> Result<ScenarioDocument, ParseError> {
    let mut cur = Cursor::new(text)?;
    let mut name = None;
    let mut models: Vec<(String, ModelSource)> = Vec::new();
    let mut situations = Vec::new();
    let mut action = None;
    let mut phi = None;
    let mut allow = false;
    let mut forbid = Vec::new();
    let mut max_changes = None;
    let start = cur.pos();

    if cur.accept_keyword("scenario") {
        name = Some(cur.expect_ident()?.0);
        cur.expect_sym(";")?;
    }
    while !cur.at_eof() {
        let pos = cur.pos();
        let Tok::Ident(kw) = cur.peek().clone() else {
            return Err(cur.unexpected("a scenario statement"));
        };
        cur.bump();
        match kw.as_str() {
            "model" => {
                let (m, mpos) = cur.expect_ident()?;
                if models.iter().any(|(n, _)| *n == m) {
                    return Err(ParseError::new(
                        mpos,
                        format!("model `{m}` is declared twice"),
                    ));
                }
                let source = if cur.accept_sym("=") {
                    let p = match cur.bump() {
                        (Tok::Str(s), _) => s,
                        (_, p) => return Err(ParseError::new(p, "expected a quoted file name")),
                    };
                    cur.expect_sym(";")?;
                    ModelSource::File(p)
                } else {
                    cur.expect_sym("{")?;
                    let doc = parse_model_items(&mut cur, "}")?;
                    cur.expect_sym("}")?;
                    ModelSource::Inline(doc)
                };
                models.push((m, source));
            }
            "situation" => {
                let (m, mpos) = cur.expect_ident()?;
                if !models.iter().any(|(n, _)| *n == m) {
                    return Err(ParseError::new(mpos, format!("unknown model `{m}`")));
                }
                let (context, _) = cur.expect_ident()?;
                let probability = super::model_text::rational(&mut cur)?;
                cur.expect_sym(";")?;
                if probability.is_negative() {
                    return Err(ParseError::new(pos, "probability must not be negative"));
                }
                situations.push(SituationEntry {
                    model: m,
                    context,
                    probability,
                });
            }
            "action" => {
                if action.is_some() {
                    return Err(ParseError::new(pos, "action given twice"));
                }
                let (var, _) = cur.expect_ident()?;
                cur.expect_sym("<-")?;
                let (x, _) = cur.expect_int()?;
                cur.expect_sym(";")?;
                action = Some((var, x));
            }
            "phi" => {
                if phi.is_some() {
                    return Err(ParseError::new(pos, "phi given twice"));
                }
                phi = Some(event_formula(&mut cur)?);
                cur.expect_sym(";")?;
            }
            "allow" => {
                cur.expect_sym(";")?;
                allow = true;
            }
            "forbid" => {
                let mut sink = Vec::new();
                let pattern = forbid_block(&mut cur, &mut sink)?;
                for (n, v) in &pattern {
                    if let Value::Label(_) = v {
                        return Err(ParseError::new(
                            pos,
                            format!("value of `{n}` must be an integer"),
                        ));
                    }
                }
                forbid.push(pattern);
            }
            "max_changes" => {
                let (k, kpos) = cur.expect_int()?;
                if k < 0 {
                    return Err(ParseError::new(kpos, "max_changes must not be negative"));
                }
                cur.expect_sym(";")?;
                max_changes = Some(k as usize);
            }
            other => return Err(ParseError::new(pos, format!("unknown statement `{other}`"))),
        }
    }
    let end = cur.pos();
    let action = action.ok_or_else(|| ParseError::new(end, "scenario has no `action`"))?;
    let phi = phi.ok_or_else(|| ParseError::new(end, "scenario has no `phi`"))?;
    if situations.is_empty() {
        return Err(ParseError::new(start, "scenario has no situations"));
    }
    Ok(ScenarioDocument {
        name,
        models,
        situations,
        action,
        phi,
        allow,
        forbid,
        max_changes,
    })
}

/// A scenario with its models loaded, ready to ask for blame.
#[derive(Clone, Debug)]
pub struct LoadedScenario {
    pub document: ScenarioDocument,
    pub models: Vec<(String, LoadedModel)>,
    pub query: BlameQuery,
}

impl ScenarioDocument {
    /// Loads referenced models relative to `base` and assembles the query.
    /// `force_allow` applies forbid blocks even without an `allow;` line.
    pub fn load(&self, base: &Path, force_allow: bool) -> Result<LoadedScenario, ScenarioError> {
        let mut models = Vec::new();
        for (name, source) in &self.models {
            let doc = match source {
                ModelSource::Inline(doc) => doc.clone(),
                ModelSource::File(file) => {
                    let path = base.join(file);
                    let text =
                        std::fs::read_to_string(&path).map_err(|source| ScenarioError::Io {
                            path: path.clone(),
                            source,
                        })?;
                    parse_model(&text).map_err(|source| ScenarioError::Parse { path, source })?
                }
            };
            let loaded = doc.load().map_err(|source| ScenarioError::Load {
                model: name.clone(),
                source,
            })?;
            models.push((name.clone(), loaded));
        }

        let mut policy = AllowabilityPolicy::unrestricted();
        if self.allow || force_allow {
            for (_, m) in &models {
                for p in &m.policy.forbidden {
                    if !policy.forbidden.contains(p) {
                        policy.forbidden.push(p.clone());
                    }
                }
            }
        }
        for pattern in &self.forbid {
            let mut bound = Vec::new();
            for (n, v) in pattern {
                match v {
                    Value::Int(x) => bound.push((n.clone(), *x)),
                    Value::Label(l) => return Err(ScenarioError::LabelInPattern(l.clone())),
                }
            }
            policy.forbidden.push(bound);
        }

        let several = self.models.len() > 1;
        let mut state = EpistemicState::new();
        for s in &self.situations {
            let (_, m) = models
                .iter()
                .find(|(n, _)| *n == s.model)
                .expect("checked while parsing");
            let ctx = m
                .context(&s.context)
                .ok_or_else(|| ScenarioError::UnknownContext {
                    model: s.model.clone(),
                    context: s.context.clone(),
                })?;
            let label = if several {
                format!("{}.{}", s.model, s.context)
            } else {
                s.context.clone()
            };
            state.push(label, m.model.clone(), ctx.clone(), s.probability.clone());
        }
        let query = BlameQuery {
            state,
            action: self.action.clone(),
            phi: self.phi.clone(),
            options: SearchOptions {
                policy,
                max_changes: self.max_changes,
                ..SearchOptions::default()
            },
        };
        Ok(LoadedScenario {
            document: self.clone(),
            models,
            query,
        })
    }
}

pub fn load_scenario_file(path: &Path, force_allow: bool) -> Result<LoadedScenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let doc = parse_scenario(&text).map_err(|source| ScenarioError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    doc.load(base, force_allow)
}

impl fmt::Display for ScenarioDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(n) = &self.name {
            writeln!(f, "scenario {n};")?;
        }
        for (name, source) in &self.models {
            match source {
                ModelSource::File(p) => writeln!(f, "model {name} = \"{p}\";")?,
                ModelSource::Inline(doc) => {
                    writeln!(f, "model {name} {{")?;
                    write_items(f, &doc.items, "  ")?;
                    writeln!(f, "}}")?;
                }
            }
        }
        for s in &self.situations {
            writeln!(f, "situation {} {} {};", s.model, s.context, s.probability)?;
        }
        writeln!(f, "action {} <- {};", self.action.0, self.action.1)?;
        writeln!(f, "phi {};", self.phi)?;
        if self.allow {
            writeln!(f, "allow;")?;
        }
        for p in &self.forbid {
            let body: Vec<String> = p.iter().map(|(n, v)| format!("{n} = {v}")).collect();
            writeln!(f, "forbid {{ {} }}", body.join(", "))?;
        }
        if let Some(k) = self.max_changes {
            writeln!(f, "max_changes {k};")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::responsibility::{blame, validate_epistemic_state, StateDiagnostic};

    const INLINE: &str = r#"
        scenario two_rocks;
        model m {
            exogenous U : {0, 1};
            endogenous ST : {0, 1} = U;
            endogenous BT : {0, 1} = U;
            endogenous BS : {0, 1} = ST || BT;
            context both { U = 1; }
            context none { U = 0; }
        }
        situation m both 1/2;
        situation m none 1/2;
        action ST <- 1;
        phi BS=1;
    "#;

    #[test]
    fn inline_scenario_blame() {
        let doc = parse_scenario(INLINE).unwrap();
        let loaded = doc.load(Path::new("."), false).unwrap();
        assert_eq!(loaded.query.state.len(), 2);
        // both: ST=1 with BT=1 needs BT<-0, dr 1/2; none: ST alone, dr 1
        let r = blame(&loaded.query).unwrap();
        assert_eq!(r.value, Rational::new(3, 4));
    }

    #[test]
    fn round_trip() {
        let doc = parse_scenario(INLINE).unwrap();
        assert_eq!(parse_scenario(&doc.to_string()).unwrap(), doc);
        let with_opts = INLINE.replace(
            "phi BS=1;",
            "phi BS=1 & !(ST=0);\nallow;\nforbid { BT = 0 }\nmax_changes 3;",
        );
        let doc = parse_scenario(&with_opts).unwrap();
        assert_eq!(doc.max_changes, Some(3));
        assert_eq!(parse_scenario(&doc.to_string()).unwrap(), doc);
    }

    #[test]
    fn bad_probability_sum_is_reported() {
        let text = INLINE.replace("situation m none 1/2;", "situation m none 1/4;");
        let loaded = parse_scenario(&text)
            .unwrap()
            .load(Path::new("."), false)
            .unwrap();
        assert_eq!(
            validate_epistemic_state(&loaded.query.state),
            vec![StateDiagnostic::SumNotOne {
                sum: Rational::new(3, 4)
            }]
        );
    }

    #[test]
    fn errors_are_located() {
        let err = parse_scenario("situation m u 1;").unwrap_err();
        assert_eq!((err.pos.line, err.pos.col), (1, 11));
        let err = parse_scenario("model m = \"x.scm\";\nsituation m u 0.5;").unwrap_err();
        assert_eq!(err.pos.line, 2);
        let text = INLINE.replace("situation m none 1/2;", "situation m nowhere 1/2;");
        assert!(matches!(
            parse_scenario(&text).unwrap().load(Path::new("."), false),
            Err(ScenarioError::UnknownContext { .. })
        ));
        let missing =
            parse_scenario("model m = \"nope.scm\"; situation m u 1; action A <- 1; phi A=1;")
                .unwrap()
                .load(Path::new("/nonexistent"), false);
        assert!(matches!(missing, Err(ScenarioError::Io { .. })));
    }
}
