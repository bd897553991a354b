use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use causa::io::{load_scenario_file, parse_model, parse_qbf, LoadedModel, ModelDocument};
use causa::{
    blame, check_responsibility_theorem, enumerate_witnesses, eval_formula, is_cause, maxqsat2,
    minqsat2, parse_event_formula, parse_formula, qbf_to_model, responsibility, subset_maxqsat2,
    weighted_responsibility, AllowabilityPolicy, CausalModel, CausalityError, CauseQuery,
    CauseVerdict, Context, Event, EventFormula, Qbf2, Rational, SearchOptions, VarId, WeightTable,
};
use serde_json::{json, Value};

use crate::failure::{Failure, INCONCLUSIVE};
use crate::output::{
    rational_json, rational_text, witness_json, witness_text, Format, Kind, ResultDocument,
};
use crate::{Command, QbfOp, Question, Target};

pub fn dispatch(command: &Command, format: &Format) -> Result<String, Failure> {
    let started = Instant::now();
    match command {
        Command::Validate { model, dot } => validate(model, *dot, format, started),
        Command::Eval { target, formula } => eval(target, formula, format, started),
        Command::Cause { question, all } => cause(question, *all, format, started),
        Command::Responsibility {
            question,
            weights,
            weight,
        } => responsibility_cmd(question, *weights, weight, format, started),
        Command::Blame {
            scenario,
            allow,
            max_changes,
        } => blame_cmd(scenario, *allow, *max_changes, format, started),
        Command::Qbf { op } => qbf(op, format, started),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<LoadedModel, Failure> {
    let text = read(path)?;
    let doc = parse_model(&text).map_err(|e| Failure::parse(format!("{}:{e}", path.display())))?;
    doc.load()
        .map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

fn require_valid(model: &CausalModel) -> Result<(), Failure> {
    let diagnostics = model.validate();
    if diagnostics.is_empty() {
        return Ok(());
    }
    let lines: Vec<String> = diagnostics.iter().map(|d| d.to_string()).collect();
    Err(Failure::invalid(format!(
        "invalid model: {}",
        lines.join("; ")
    )))
}

fn pick_context(loaded: &LoadedModel, name: Option<&str>) -> Result<(String, Context), Failure> {
    match name {
        Some(n) => loaded
            .context(n)
            .map(|c| (n.to_string(), c.clone()))
            .ok_or_else(|| Failure::binding(format!("model has no context `{n}`"))),
        None => match loaded.contexts.as_slice() {
            [(n, c)] => Ok((n.clone(), c.clone())),
            [] => Err(Failure::binding("model declares no context")),
            _ => Err(Failure::usage(format!(
                "model declares several contexts ({}); pick one with --context",
                loaded.context_names().collect::<Vec<_>>().join(", ")
            ))),
        },
    }
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

// ---------------------------------------------------------------- validate

fn validate(path: &Path, dot: bool, format: &Format, started: Instant) -> Result<String, Failure> {
    let loaded = load_model(path)?;
    let model = &loaded.model;
    let diagnostics: Vec<String> = model.validate().iter().map(|d| d.to_string()).collect();
    let ok = diagnostics.is_empty();
    let edges = model.causal_network();
    let out = if format.json {
        let mut doc = ResultDocument::new("validate", Kind::Boolean)
            .echo("model", path_str(path))
            .value(ok)
            .diagnostics(diagnostics.clone());
        if dot {
            let e: Vec<Value> = edges
                .iter()
                .map(|&(a, b)| json!([model.name(a), model.name(b)]))
                .collect();
            doc = doc.details(json!({ "edges": e }));
        }
        doc.render(started)
    } else if dot {
        let mut s = String::from("digraph model {\n");
        for (_, decl) in model.signature().vars() {
            if model
                .lookup(&decl.name)
                .is_some_and(|v| model.equation(v).is_some())
            {
                let _ = writeln!(s, "  \"{}\";", decl.name);
            }
        }
        for &(a, b) in &edges {
            let _ = writeln!(s, "  \"{}\" -> \"{}\";", model.name(a), model.name(b));
        }
        s.push_str("}\n");
        s
    } else if ok {
        let sig = model.signature();
        let endo = model.endogenous().count();
        format!(
            "valid: {} exogenous, {endo} endogenous, {} context(s)\n",
            sig.len() - endo,
            loaded.contexts.len()
        )
    } else {
        diagnostics.iter().map(|d| format!("{d}\n")).collect()
    };
    if ok {
        Ok(out)
    } else {
        Err(Failure::invalid(format!("{} diagnostic(s)", diagnostics.len())).with_output(out))
    }
}

// -------------------------------------------------------------------- eval

fn eval(target: &Target, text: &str, format: &Format, started: Instant) -> Result<String, Failure> {
    let loaded = load_model(&target.model)?;
    require_valid(&loaded.model)?;
    let (ctx_name, ctx) = pick_context(&loaded, target.context.as_deref())?;
    let formula = parse_formula(text).map_err(|e| Failure::parse(format!("formula:{e}")))?;
    let bound = formula
        .bind(&loaded.model)
        .map_err(|e| Failure::binding(e.to_string()))?;
    let value =
        eval_formula(&loaded.model, &ctx, &bound).map_err(|e| Failure::binding(e.to_string()))?;
    Ok(if format.json {
        ResultDocument::new("eval", Kind::Boolean)
            .echo("model", path_str(&target.model))
            .echo("context", ctx_name)
            .echo("formula", formula.to_string())
            .value(value)
            .render(started)
    } else {
        format!("{value}\n")
    })
}

// ---------------------------------------------------------- cause questions

struct Bound {
    loaded: LoadedModel,
    ctx_name: String,
    context: Context,
    event: Event,
    phi: EventFormula<VarId>,
    options: SearchOptions,
}

impl Bound {
    fn new(q: &Question) -> Result<Bound, Failure> {
        let loaded = load_model(&q.target.model)?;
        require_valid(&loaded.model)?;
        let (ctx_name, context) = pick_context(&loaded, q.target.context.as_deref())?;
        let model = &loaded.model;
        let event = match parse_event_formula(&q.event)
            .map_err(|e| Failure::parse(format!("event:{e}")))?
        {
            EventFormula::Event(name, value) => {
                let var = model
                    .endogenous_var(&name)
                    .map_err(|e| Failure::binding(e.to_string()))?;
                model
                    .check_value(var, value)
                    .map_err(|e| Failure::binding(e.to_string()))?;
                Event::new(var, value)
            }
            _ => return Err(Failure::usage("--event must be a single NAME=VALUE")),
        };
        let phi = parse_event_formula(&q.phi)
            .map_err(|e| Failure::parse(format!("phi:{e}")))?
            .bind(model)
            .map_err(|e| Failure::binding(e.to_string()))?;
        let policy = if q.allow {
            loaded.policy.clone()
        } else {
            AllowabilityPolicy::unrestricted()
        };
        let options = SearchOptions {
            max_changes: q.max_changes,
            ..SearchOptions::with_policy(policy)
        };
        Ok(Bound {
            loaded,
            ctx_name,
            context,
            event,
            phi,
            options,
        })
    }

    fn model(&self) -> &CausalModel {
        &self.loaded.model
    }

    fn query(&self) -> CauseQuery<'_> {
        CauseQuery {
            model: self.model(),
            context: &self.context,
            event: self.event,
            phi: &self.phi,
            options: &self.options,
        }
    }

    fn document(&self, command: &str, kind: Kind, q: &Question) -> ResultDocument {
        let mut doc = ResultDocument::new(command, kind)
            .echo("model", path_str(&q.target.model))
            .echo("context", self.ctx_name.clone())
            .echo(
                "event",
                format!("{}={}", self.model().name(self.event.var), self.event.value),
            )
            .echo("phi", self.phi.named(self.model()).to_string())
            .echo("allow", q.allow);
        if let Some(k) = q.max_changes {
            doc = doc.echo("max_changes", k);
        }
        doc
    }
}

fn cause(q: &Question, all: bool, format: &Format, started: Instant) -> Result<String, Failure> {
    let b = Bound::new(q)?;
    let model = b.model();
    let x = b.event.var;
    if all {
        let (witnesses, truncated) = match enumerate_witnesses(&b.query()) {
            Ok(w) => (w, None),
            Err(CausalityError::CapReached { cap, partial }) => (partial, Some(cap)),
            Err(e) => return Err(e.into()),
        };
        let out = if format.json {
            let list: Vec<Value> = witnesses
                .iter()
                .map(|w| witness_json(model, x, w))
                .collect();
            let mut doc = b
                .document("cause", Kind::Boolean, q)
                .echo("all", true)
                .witness(witnesses.first().map(|w| witness_json(model, x, w)))
                .details(json!({ "witnesses": list }));
            doc = match truncated {
                Some(cap) if witnesses.is_empty() => doc.diagnostics(vec![inconclusive_note(cap)]),
                Some(cap) => doc.value(true).diagnostics(vec![truncated_note(cap)]),
                None => doc.value(!witnesses.is_empty()),
            };
            doc.render(started)
        } else {
            let mut s = match truncated {
                Some(_) if witnesses.is_empty() => String::from("inconclusive\n"),
                _ => format!("{}\n", !witnesses.is_empty()),
            };
            for w in &witnesses {
                s.push_str(&witness_text(model, x, w));
            }
            s
        };
        return match truncated {
            Some(cap) => Err(Failure::new(INCONCLUSIVE, truncated_note(cap)).with_output(out)),
            None => Ok(out),
        };
    }
    let verdict = is_cause(&b.query())?;
    let out = if format.json {
        let doc = b.document("cause", Kind::Boolean, q);
        match &verdict {
            CauseVerdict::Cause(w) => doc.value(true).witness(Some(witness_json(model, x, w))),
            CauseVerdict::NotCause => doc.value(false),
            CauseVerdict::Inconclusive { cap } => doc.diagnostics(vec![inconclusive_note(*cap)]),
        }
        .render(started)
    } else {
        match &verdict {
            CauseVerdict::Cause(w) => format!("true\n{}", witness_text(model, x, w)),
            CauseVerdict::NotCause => "false\n".to_string(),
            CauseVerdict::Inconclusive { .. } => "inconclusive\n".to_string(),
        }
    };
    match verdict {
        CauseVerdict::Inconclusive { cap } => {
            Err(Failure::new(INCONCLUSIVE, inconclusive_note(cap)).with_output(out))
        }
        _ => Ok(out),
    }
}

fn inconclusive_note(cap: usize) -> String {
    format!("inconclusive: no witness with at most {cap} changed variable(s)")
}

fn truncated_note(cap: usize) -> String {
    format!("witness list truncated at {cap} changed variable(s)")
}

fn parse_weight(text: &str) -> Result<(String, Rational), Failure> {
    let (name, value) = text
        .split_once('=')
        .ok_or_else(|| Failure::usage(format!("--weight expects NAME=P/Q, got `{text}`")))?;
    let w: Rational = value
        .trim()
        .parse()
        .map_err(|_| Failure::parse(format!("`{}` is not a rational", value.trim())))?;
    Ok((name.trim().to_string(), w))
}

fn responsibility_cmd(
    q: &Question,
    use_block: bool,
    overrides: &[String],
    format: &Format,
    started: Instant,
) -> Result<String, Failure> {
    let b = Bound::new(q)?;
    let weighted = use_block || !overrides.is_empty();
    let result = if weighted {
        let mut table = if use_block {
            b.loaded.weights.clone()
        } else {
            WeightTable::new()
        };
        for text in overrides {
            let (name, w) = parse_weight(text)?;
            table
                .set(&name, w)
                .map_err(|e| Failure::binding(e.to_string()))?;
        }
        weighted_responsibility(&b.query(), &table)
    } else {
        responsibility(&b.query())
    };
    let result = result?;
    let model = b.model();
    let x = b.event.var;
    Ok(if format.json {
        let mut doc = b
            .document("responsibility", Kind::Rational, q)
            .value(rational_json(&result.value, format))
            .witness(result.witness.as_ref().map(|w| witness_json(model, x, w)));
        if weighted {
            doc = doc.echo("weighted", true);
        }
        doc.render(started)
    } else {
        let mut s = format!("{}\n", rational_text(&result.value, format));
        if let Some(w) = &result.witness {
            s.push_str(&witness_text(model, x, w));
        }
        s
    })
}

// ------------------------------------------------------------------- blame

fn blame_cmd(
    path: &Path,
    allow: bool,
    max_changes: Option<usize>,
    format: &Format,
    started: Instant,
) -> Result<String, Failure> {
    let mut loaded = load_scenario_file(path, allow)?;
    if max_changes.is_some() {
        loaded.query.options.max_changes = max_changes;
    }
    let query = &loaded.query;
    let result = blame(query)?;
    let situations = &query.state.situations;
    Ok(if format.json {
        let per: Vec<Value> = result
            .situations
            .iter()
            .zip(situations)
            .map(|(s, sit)| {
                let x = sit.model.lookup(&query.action.0).expect("action was bound");
                json!({
                    "label": s.label,
                    "probability": rational_json(&s.probability, format),
                    "responsibility": rational_json(&s.responsibility.value, format),
                    "witness": s.responsibility.witness.as_ref().map(|w| witness_json(&sit.model, x, w)),
                })
            })
            .collect();
        let mut doc = ResultDocument::new("blame", Kind::Rational)
            .echo("scenario", path_str(path))
            .echo("action", format!("{}<-{}", query.action.0, query.action.1))
            .echo("phi", query.phi.to_string())
            .echo("allow", allow || loaded.document.allow);
        if let Some(k) = query.options.max_changes {
            doc = doc.echo("max_changes", k);
        }
        doc.value(rational_json(&result.value, format))
            .details(json!({ "situations": per }))
            .render(started)
    } else {
        let mut s = format!("{}\n", rational_text(&result.value, format));
        let width = result
            .situations
            .iter()
            .map(|s| s.label.len())
            .max()
            .unwrap_or(0);
        for (r, sit) in result.situations.iter().zip(situations) {
            let _ = write!(
                s,
                "  {:width$}  Pr={}  dr={}",
                r.label,
                r.probability,
                rational_text(&r.responsibility.value, format)
            );
            if let Some(w) = &r.responsibility.witness {
                let x = sit.model.lookup(&query.action.0).expect("action was bound");
                let _ = write!(s, "  [{}]", w.display(&sit.model, x));
            }
            s.push('\n');
        }
        s
    })
}

// --------------------------------------------------------------------- qbf

fn load_qbf(path: &Path) -> Result<Qbf2, Failure> {
    let text = read(path)?;
    parse_qbf(&text).map_err(|e| Failure::parse(format!("{}:{e}", path.display())))
}

fn qbf(op: &QbfOp, format: &Format, started: Instant) -> Result<String, Failure> {
    match op {
        QbfOp::Solve { file } => {
            let phi = load_qbf(file)?;
            let witness = phi.witnesses().next();
            let value = witness.is_some();
            let assignment: Option<Vec<(String, bool)>> = witness.map(|w| {
                phi.a_vars()
                    .iter()
                    .enumerate()
                    .map(|(i, n)| (n.clone(), w.value(i)))
                    .collect()
            });
            Ok(if format.json {
                let a = assignment.as_ref().map(|a| {
                    a.iter()
                        .map(|(n, b)| (n.clone(), Value::Bool(*b)))
                        .collect::<serde_json::Map<_, _>>()
                });
                ResultDocument::new("qbf solve", Kind::Boolean)
                    .echo("file", path_str(file))
                    .value(value)
                    .details(json!({ "assignment": a }))
                    .render(started)
            } else {
                let mut s = format!("{value}\n");
                if let Some(a) = assignment {
                    let parts: Vec<String> =
                        a.iter().map(|(n, b)| format!("{n}={}", *b as u8)).collect();
                    let _ = writeln!(s, "witness: {}", parts.join(" "));
                }
                s
            })
        }
        QbfOp::Maxqsat2 { file, subset } => {
            let phi = load_qbf(file)?;
            let value = match subset {
                Some(z) => subset_maxqsat2(&phi, z)?,
                None => maxqsat2(&phi),
            };
            Ok(integer_result(
                "qbf maxqsat2",
                file,
                value,
                format,
                started,
                |doc| match subset {
                    Some(z) => doc.echo("subset", z.join(",")),
                    None => doc,
                },
            ))
        }
        QbfOp::Minqsat2 { file } => {
            let phi = load_qbf(file)?;
            let value = minqsat2(&phi);
            Ok(integer_result(
                "qbf minqsat2",
                file,
                value,
                format,
                started,
                |d| d,
            ))
        }
        QbfOp::ToModel { file } => {
            let phi = load_qbf(file)?;
            let built = qbf_to_model(&phi);
            let model = &built.model;
            let doc =
                ModelDocument::from_model(model, None, &[("u".to_string(), built.context.clone())]);
            let event = format!("{}={}", model.name(built.event.var), built.event.value);
            let psi = built.psi.named(model).to_string();
            Ok(if format.json {
                ResultDocument::new("qbf to-model", Kind::Text)
                    .echo("file", path_str(file))
                    .value(doc.to_string())
                    .details(json!({ "context": "u", "event": event, "psi": psi }))
                    .render(started)
            } else {
                format!("# event: {event}\n# phi: {psi}\n{doc}")
            })
        }
        QbfOp::CheckTheorem { file } => {
            let phi = load_qbf(file)?;
            let check = check_responsibility_theorem(&phi)?;
            Ok(if format.json {
                ResultDocument::new("qbf check-theorem", Kind::Boolean)
                    .echo("file", path_str(file))
                    .value(check.holds)
                    .details(json!({
                        "tqbf": check.tqbf,
                        "minqsat2": check.minqsat2,
                        "expected": rational_json(&check.expected, format),
                        "responsibility": rational_json(&check.responsibility, format),
                    }))
                    .render(started)
            } else {
                format!(
                    "{}\ntqbf={} minqsat2={} expected={} responsibility={}\n",
                    check.holds,
                    check.tqbf,
                    check.minqsat2,
                    rational_text(&check.expected, format),
                    rational_text(&check.responsibility, format)
                )
            })
        }
    }
}

fn integer_result(
    command: &str,
    file: &Path,
    value: i64,
    format: &Format,
    started: Instant,
    extra: impl FnOnce(ResultDocument) -> ResultDocument,
) -> String {
    if format.json {
        extra(
            ResultDocument::new(command, Kind::Integer)
                .echo("file", path_str(file))
                .value(value),
        )
        .render(started)
    } else {
        format!("{value}\n")
    }
}
