//! Reference implementations and instance generators shared by the
//! integration tests. The oracle deliberately avoids the library's search
//! engine: it enumerates every contingency and checks each one through the
//! public `solve`.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use causa::io::{parse_model, LoadedModel};
use causa::{
    AllowabilityPolicy, CausalModel, Context, Equation, EventFormula, Intervention, ModelBuilder,
    Rational, Table, VarId,
};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn load_corpus_model(file: &str) -> LoadedModel {
    let text = std::fs::read_to_string(corpus_dir().join(file)).unwrap();
    parse_model(&text).unwrap().load().unwrap()
}

/// `n` voters, all voting 1, with `O = 1` on a strict majority.
pub fn unanimous_voting(n: usize) -> (CausalModel, Context) {
    let mut text = String::new();
    for i in 1..=n {
        text.push_str(&format!("exogenous U{i} : {{0, 1}};\n"));
    }
    for i in 1..=n {
        text.push_str(&format!("endogenous X{i} : {{0, 1}} = U{i};\n"));
    }
    let sum: Vec<String> = (1..=n).map(|i| format!("X{i}")).collect();
    text.push_str(&format!(
        "endogenous O : {{0, 1}} = 2 * ({}) > {n};\n",
        sum.join(" + ")
    ));
    let assigns: Vec<String> = (1..=n).map(|i| format!("U{i} = 1;")).collect();
    text.push_str(&format!("context all {{ {} }}\n", assigns.join(" ")));
    let loaded = parse_model(&text).unwrap().load().unwrap();
    let ctx = loaded.context("all").unwrap().clone();
    ((*loaded.model).clone(), ctx)
}

// ------------------------------------------------------------------ oracle

/// `(x', W with w', changed count)`.
pub type Contingency = (i64, Vec<(VarId, i64)>, usize);

pub struct Oracle<'a> {
    pub model: &'a CausalModel,
    pub context: &'a Context,
    pub x: VarId,
    pub value: i64,
    pub phi: &'a EventFormula<VarId>,
    /// Forbidden partial assignments, by variable.
    pub forbidden: Vec<Vec<(VarId, i64)>>,
}

pub fn bind_policy(model: &CausalModel, policy: &AllowabilityPolicy) -> Vec<Vec<(VarId, i64)>> {
    policy
        .forbidden
        .iter()
        .map(|p| {
            p.iter()
                .map(|(n, v)| (model.lookup(n).unwrap(), *v))
                .collect()
        })
        .collect()
}

impl Oracle<'_> {
    fn world(&self, pairs: &[(VarId, i64)]) -> Vec<i64> {
        self.model
            .solve(
                self.context,
                &Intervention::from_pairs(pairs.iter().copied()),
            )
            .unwrap()
            .values()
            .to_vec()
    }

    fn forbidden(&self, world: &[i64]) -> bool {
        self.forbidden
            .iter()
            .any(|p| p.iter().all(|&(v, x)| world[v.0] == x))
    }

    pub fn actual(&self) -> Vec<i64> {
        self.world(&[])
    }

    pub fn ac1(&self) -> bool {
        let a = self.actual();
        a[self.x.0] == self.value && self.phi.holds(&a)
    }

    /// AC2(a), AC2(b) over every subset of the remaining endogenous variables, and allowability.
    pub fn check(&self, x_prime: i64, w: &[(VarId, i64)]) -> bool {
        let actual = self.actual();
        let mut pairs = w.to_vec();
        pairs.push((self.x, x_prime));
        let a = self.world(&pairs);
        if self.phi.holds(&a) || self.forbidden(&a) {
            return false;
        }
        pairs.pop();
        pairs.push((self.x, self.value));
        let b = self.world(&pairs);
        if self.forbidden(&b) {
            return false;
        }
        let rest: Vec<VarId> = self
            .model
            .endogenous()
            .filter(|&v| v != self.x && !w.iter().any(|&(u, _)| u == v))
            .collect();
        for mask in 0u64..(1 << rest.len()) {
            let mut p = pairs.clone();
            for (j, &z) in rest.iter().enumerate() {
                if mask >> j & 1 == 1 {
                    p.push((z, actual[z.0]));
                }
            }
            if !self.phi.holds(&self.world(&p)) {
                return false;
            }
        }
        true
    }

    /// Every `(x', W, w')` passing AC2, in no particular order, together with
    /// the number of changed variables of each.
    pub fn all_witnesses(&self) -> Vec<Contingency> {
        let mut out = Vec::new();
        if !self.ac1() {
            return out;
        }
        self.for_each_contingency(|xp, w, k| {
            if self.check(xp, w) {
                out.push((xp, w.to_vec(), k));
            }
            false
        });
        out
    }

    /// Smallest `k` over all witnesses; `None` for a non-cause.
    pub fn min_k(&self) -> Option<usize> {
        if !self.ac1() {
            return None;
        }
        let others = self.model.endogenous().filter(|&v| v != self.x).count();
        for level in 0..=others {
            let mut hit = false;
            self.for_each_contingency(|xp, w, k| {
                hit = k == level && self.check(xp, w);
                hit
            });
            if hit {
                return Some(level);
            }
        }
        None
    }

    pub fn responsibility(&self) -> Rational {
        match self.min_k() {
            Some(k) => Rational::new(1, k as i64 + 1),
            None => Rational::zero(),
        }
    }

    /// `wt(X) / (wt(changed) + wt(X))` maximized over every witness.
    pub fn weighted(&self, weight: &dyn Fn(VarId) -> Rational) -> Rational {
        let actual = self.actual();
        let wx = weight(self.x);
        self.all_witnesses()
            .into_iter()
            .map(|(_, w, _)| {
                let changed: Rational = w
                    .iter()
                    .filter(|&&(v, x)| actual[v.0] != x)
                    .map(|&(v, _)| weight(v))
                    .sum();
                wx.clone() / (changed + wx.clone())
            })
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// Calls `f(x', w, k)` for every contingency until it returns true.
    fn for_each_contingency(&self, mut f: impl FnMut(i64, &[(VarId, i64)], usize) -> bool) {
        let actual = self.actual();
        let sig = self.model.signature();
        let others: Vec<VarId> = self.model.endogenous().filter(|&v| v != self.x).collect();
        let alternatives: Vec<i64> = sig
            .range(self.x)
            .iter()
            .copied()
            .filter(|&a| a != self.value)
            .collect();
        for mask in 0u64..(1 << others.len()) {
            let members: Vec<VarId> = others
                .iter()
                .enumerate()
                .filter(|(j, _)| mask >> j & 1 == 1)
                .map(|(_, &v)| v)
                .collect();
            let mut idx = vec![0usize; members.len()];
            loop {
                let w: Vec<(VarId, i64)> = members
                    .iter()
                    .zip(&idx)
                    .map(|(&v, &i)| (v, sig.range(v)[i]))
                    .collect();
                let k = w.iter().filter(|&&(v, x)| actual[v.0] != x).count();
                for &xp in &alternatives {
                    if f(xp, &w, k) {
                        return;
                    }
                }
                let mut carry = true;
                let mut j = members.len();
                while carry && j > 0 {
                    j -= 1;
                    idx[j] += 1;
                    if idx[j] < sig.range(members[j]).len() {
                        carry = false;
                    } else {
                        idx[j] = 0;
                    }
                }
                if carry {
                    break;
                }
            }
        }
    }
}

// -------------------------------------------------------------- generators

pub struct RandomInstance {
    pub model: CausalModel,
    pub context: Context,
    pub x: VarId,
    pub value: i64,
    pub phi: EventFormula<VarId>,
    pub policy: AllowabilityPolicy,
}

fn range_of(rng: &mut impl Rng) -> Vec<i64> {
    let n = rng.gen_range(2..=3);
    (0..n).collect()
}

/// A recursive model with 1-2 exogenous and 2-5 endogenous variables, all
/// ranges of size 2 or 3, each endogenous variable given by a complete table
/// over up to three earlier variables.
pub fn random_model(rng: &mut impl Rng) -> (CausalModel, Context) {
    let n_exo = rng.gen_range(1..=2);
    let n_endo = rng.gen_range(2..=5);
    let mut b = ModelBuilder::new();
    let mut declared: Vec<(String, Vec<i64>)> = Vec::new();
    for i in 0..n_exo {
        let r = range_of(rng);
        let name = format!("U{i}");
        b.exogenous(&name, r.clone());
        declared.push((name, r));
    }
    for i in 0..n_endo {
        let r = range_of(rng);
        let name = format!("V{i}");
        let mut pool: Vec<usize> = (0..declared.len()).collect();
        pool.shuffle(rng);
        let arity = rng.gen_range(0..=pool.len().min(3));
        let mut inputs: Vec<usize> = pool[..arity].to_vec();
        inputs.sort();
        let mut rows = BTreeMap::new();
        let mut key = vec![0usize; inputs.len()];
        loop {
            let values: Vec<i64> = inputs
                .iter()
                .zip(&key)
                .map(|(&p, &k)| declared[p].1[k])
                .collect();
            rows.insert(values, *r.choose(rng).unwrap());
            let mut j = inputs.len();
            let mut done = true;
            while j > 0 {
                j -= 1;
                key[j] += 1;
                if key[j] < declared[inputs[j]].1.len() {
                    done = false;
                    break;
                }
                key[j] = 0;
            }
            if done {
                break;
            }
        }
        let table = Table {
            inputs: inputs.iter().map(|&p| declared[p].0.clone()).collect(),
            rows,
        };
        b.endogenous(&name, r.clone(), Equation::Table(table));
        declared.push((name, r));
    }
    let model = b.build().unwrap();
    let pairs: Vec<(String, i64)> = declared[..n_exo]
        .iter()
        .map(|(n, r)| (n.clone(), *r.choose(rng).unwrap()))
        .collect();
    let ctx = model
        .context(pairs.iter().map(|(n, v)| (n.as_str(), *v)))
        .unwrap();
    (model, ctx)
}

pub fn random_event_formula(
    rng: &mut impl Rng,
    model: &CausalModel,
    depth: usize,
) -> EventFormula<VarId> {
    let endo: Vec<VarId> = model.endogenous().collect();
    if depth == 0 || rng.gen_bool(0.4) {
        let v = *endo.choose(rng).unwrap();
        let x = *model.signature().range(v).choose(rng).unwrap();
        return EventFormula::event(v, x);
    }
    match rng.gen_range(0..3) {
        0 => EventFormula::not(random_event_formula(rng, model, depth - 1)),
        1 => EventFormula::and(
            random_event_formula(rng, model, depth - 1),
            random_event_formula(rng, model, depth - 1),
        ),
        _ => EventFormula::or(
            random_event_formula(rng, model, depth - 1),
            random_event_formula(rng, model, depth - 1),
        ),
    }
}

pub fn random_policy(rng: &mut impl Rng, model: &CausalModel) -> AllowabilityPolicy {
    let endo: Vec<VarId> = model.endogenous().collect();
    let mut policy = AllowabilityPolicy::unrestricted();
    for _ in 0..rng.gen_range(1..=2) {
        let mut vars = endo.clone();
        vars.shuffle(rng);
        let size = rng.gen_range(1..=2.min(vars.len()));
        let pattern: Vec<(String, i64)> = vars[..size]
            .iter()
            .map(|&v| {
                (
                    model.name(v).to_string(),
                    *model.signature().range(v).choose(rng).unwrap(),
                )
            })
            .collect();
        policy.forbidden.push(pattern);
    }
    policy
}

/// A random model and question, biased toward events and formulas that
/// hold in the actual world so that AC2 gets exercised.
pub fn random_instance(rng: &mut impl Rng) -> RandomInstance {
    let (model, context) = random_model(rng);
    let actual = model.solve(&context, &Intervention::empty()).unwrap();
    let endo: Vec<VarId> = model.endogenous().collect();
    let x = *endo.choose(rng).unwrap();
    let value = if rng.gen_bool(0.85) {
        actual[x]
    } else {
        *model.signature().range(x).choose(rng).unwrap()
    };
    let mut phi = random_event_formula(rng, &model, 2);
    for _ in 0..8 {
        if phi.holds(actual.values()) {
            break;
        }
        phi = random_event_formula(rng, &model, 2);
    }
    let policy = if rng.gen_bool(0.3) {
        random_policy(rng, &model)
    } else {
        AllowabilityPolicy::unrestricted()
    };
    RandomInstance {
        model,
        context,
        x,
        value,
        phi,
        policy,
    }
}
