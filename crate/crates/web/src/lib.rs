//! Browser bindings: a majority-vote explorer, responsibility for a model
//! written in the text format, and blame for an inline scenario. Every
//! function returns a JSON string; rationals are `"p/q"` strings.

use std::path::Path;

use causa::io::{parse_model, parse_scenario};
use causa::model::BinOp;
use causa::{
    blame as blame_of, parse_event_formula, responsibility as responsibility_of,
    AllowabilityPolicy, CausalModel, CauseQuery, CauseWitness, Equation, Event, EventFormula, Expr,
    Intervention, ModelBuilder, SearchOptions, VarId,
};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Largest electorate the explorer accepts; the search is exponential.
pub const MAX_VOTERS: usize = 15;

fn witness_json(model: &CausalModel, cause: VarId, w: &CauseWitness) -> Value {
    let pairs = |it: &mut dyn Iterator<Item = (VarId, i64)>| -> Vec<Value> {
        it.map(|(v, x)| json!({ "var": model.name(v), "value": x }))
            .collect()
    };
    json!({
        "text": w.display(model, cause).to_string(),
        "changed": pairs(&mut w.changed_pairs()),
        "frozen": pairs(&mut w.frozen_pairs()),
        "k": w.k(),
    })
}

fn majority_model(n: usize) -> CausalModel {
    let mut b = ModelBuilder::new();
    for i in 1..=n {
        b.exogenous(&format!("U{i}"), [0, 1]);
    }
    for i in 1..=n {
        let u = Expr::var(format!("U{i}"));
        b.endogenous(&format!("X{i}"), [0, 1], Equation::Expr(u));
    }
    let sum = Expr::fold(
        BinOp::Add,
        (1..=n).map(|i| Expr::var(format!("X{i}"))),
        Expr::Lit(0),
    );
    let twice = Expr::bin(BinOp::Mul, Expr::Lit(2), sum);
    let outcome = Expr::bin(BinOp::Gt, twice, Expr::Lit(n as i64));
    b.endogenous("O", [0, 1], Equation::Expr(outcome));
    b.build().expect("generated names are distinct")
}

/// `votes` is a string of `0`/`1` characters, one per voter. Reports the
/// majority outcome and each voter's degree of responsibility for it.
#[wasm_bindgen]
pub fn voting(votes: &str) -> Result<String, String> {
    let ballot: Vec<i64> = votes
        .chars()
        .filter(|c| !c.is_whitespace() && *c != ',')
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(format!("unexpected vote `{other}`; use 0 and 1")),
        })
        .collect::<Result<_, _>>()?;
    let n = ballot.len();
    if n == 0 || n > MAX_VOTERS {
        return Err(format!("need between 1 and {MAX_VOTERS} voters, got {n}"));
    }
    let model = majority_model(n);
    let names: Vec<String> = (1..=n).map(|i| format!("U{i}")).collect();
    let context = model
        .context(names.iter().map(String::as_str).zip(ballot.iter().copied()))
        .map_err(|e| e.to_string())?;
    let actual = model
        .solve(&context, &Intervention::empty())
        .map_err(|e| e.to_string())?;
    let o = model.lookup("O").expect("declared above");
    let phi = EventFormula::event(o, actual[o]);
    let options = SearchOptions::default();
    let mut voters = Vec::with_capacity(n);
    for (i, &vote) in ballot.iter().enumerate() {
        let x = model
            .lookup(&format!("X{}", i + 1))
            .expect("declared above");
        let query = CauseQuery {
            model: &model,
            context: &context,
            event: Event::new(x, vote),
            phi: &phi,
            options: &options,
        };
        let r = responsibility_of(&query).map_err(|e| e.to_string())?;
        voters.push(json!({
            "voter": format!("X{}", i + 1),
            "vote": vote,
            "responsibility": r.value.to_string(),
            "witness": r.witness.as_ref().map(|w| witness_json(&model, x, w)),
        }));
    }
    Ok(json!({ "outcome": actual[o], "voters": voters }).to_string())
}

/// Responsibility of `event` (`NAME=VALUE`) for `phi` in the model text.
/// An empty `context` selects the model's only context.
#[wasm_bindgen]
pub fn responsibility(
    model_text: &str,
    context: &str,
    event: &str,
    phi: &str,
    allow: bool,
) -> Result<String, String> {
    let loaded = parse_model(model_text)
        .map_err(|e| format!("model:{e}"))?
        .load()
        .map_err(|e| e.to_string())?;
    let model = &loaded.model;
    let ctx = if context.trim().is_empty() {
        match loaded.contexts.as_slice() {
            [(_, c)] => c.clone(),
            _ => return Err("the model has several contexts; name one".into()),
        }
    } else {
        loaded
            .context(context.trim())
            .cloned()
            .ok_or_else(|| format!("no context `{}`", context.trim()))?
    };
    let (name, value) = match parse_event_formula(event).map_err(|e| format!("event:{e}"))? {
        EventFormula::Event(name, value) => (name, value),
        _ => return Err("the event must be a single NAME=VALUE".into()),
    };
    let x = model.endogenous_var(&name).map_err(|e| e.to_string())?;
    model.check_value(x, value).map_err(|e| e.to_string())?;
    let phi = parse_event_formula(phi)
        .map_err(|e| format!("phi:{e}"))?
        .bind(model)
        .map_err(|e| e.to_string())?;
    let policy = if allow {
        loaded.policy.clone()
    } else {
        AllowabilityPolicy::unrestricted()
    };
    let options = SearchOptions::with_policy(policy);
    let query = CauseQuery {
        model,
        context: &ctx,
        event: Event::new(x, value),
        phi: &phi,
        options: &options,
    };
    let r = responsibility_of(&query).map_err(|e| e.to_string())?;
    Ok(json!({
        "responsibility": r.value.to_string(),
        "cause": r.witness.is_some(),
        "witness": r.witness.as_ref().map(|w| witness_json(model, x, w)),
    })
    .to_string())
}

/// Degree of blame for a scenario whose models are all written inline.
#[wasm_bindgen]
pub fn blame(scenario_text: &str, allow: bool) -> Result<String, String> {
    let doc = parse_scenario(scenario_text).map_err(|e| format!("scenario:{e}"))?;
    let loaded = doc.load(Path::new("."), allow).map_err(|e| e.to_string())?;
    let result = blame_of(&loaded.query).map_err(|e| e.to_string())?;
    let situations: Vec<Value> = result
        .situations
        .iter()
        .zip(&loaded.query.state.situations)
        .map(|(s, sit)| {
            let x = sit.model.lookup(&loaded.query.action.0);
            json!({
                "label": s.label,
                "probability": s.probability.to_string(),
                "responsibility": s.responsibility.value.to_string(),
                "witness": s.responsibility.witness.as_ref().zip(x).map(|(w, x)| witness_json(&sit.model, x, w)),
            })
        })
        .collect();
    Ok(json!({ "blame": result.value.to_string(), "situations": situations }).to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn unanimous_eleven() {
        let out = parse(&voting("11111111111").unwrap());
        assert_eq!(out["outcome"], 1);
        for v in out["voters"].as_array().unwrap() {
            assert_eq!(v["responsibility"], "1/6");
            assert_eq!(v["witness"]["k"], 5);
        }
    }

    #[test]
    fn six_five_split() {
        let out = parse(&voting("11111100000").unwrap());
        let dr: Vec<&str> = out["voters"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v["responsibility"].as_str().unwrap())
            .collect();
        assert_eq!(dr[..6], ["1"; 6]);
        assert_eq!(dr[6..], ["0"; 5]);
    }

    #[test]
    fn rejects_bad_ballots() {
        assert!(voting("").is_err());
        assert!(voting("10x").is_err());
        assert!(voting(&"1".repeat(MAX_VOTERS + 1)).is_err());
    }

    const ROCK: &str = "
        exogenous U : {0, 1};
        endogenous ST : {0, 1} = U;
        endogenous BT : {0, 1} = U;
        endogenous SH : {0, 1} = ST;
        endogenous BH : {0, 1} = BT && !SH;
        endogenous BS : {0, 1} = SH || BH;
        context both_throw { U = 1; }
        forbid { ST = 0, BT = 1, BH = 0 }
    ";

    #[test]
    fn rock_responsibility() {
        let out = parse(&responsibility(ROCK, "", "ST=1", "BS=1", false).unwrap());
        assert_eq!(out["responsibility"], "1");
        let out = parse(&responsibility(ROCK, "both_throw", "ST=1", "BS=1", true).unwrap());
        assert_eq!(out["responsibility"], "1/2");
        let out = parse(&responsibility(ROCK, "", "BT=1", "BS=1", false).unwrap());
        assert_eq!(out["cause"], false);
        assert!(responsibility(ROCK, "", "ST=1 & BT=1", "BS=1", false).is_err());
        assert!(responsibility(ROCK, "", "ST=1", "BS=", false).is_err());
    }

    #[test]
    fn inline_blame() {
        let scenario = format!(
            "model rock {{ {ROCK} context neither {{ U = 0; }} }}\n\
             situation rock both_throw 1/2;\nsituation rock neither 1/2;\n\
             action ST <- 1;\nphi BS=1;\n"
        );
        let out = parse(&blame(&scenario, false).unwrap());
        // after ST <- 1 Suzy's throw is decisive in both situations
        assert_eq!(out["blame"], "1");
        assert_eq!(out["situations"].as_array().unwrap().len(), 2);
    }
}
