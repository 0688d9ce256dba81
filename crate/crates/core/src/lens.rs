//! Cartesian lenses `(get : A → B, put : A ⊗ B' → A')` and the checkpointing
//! executor, which keeps only `A` between the passes and recomputes every
//! intermediate value the backward pass needs.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{check_values, evaluate, CostReport, Value};
use crate::expr;
use crate::normal::equal;
use crate::signature::Signature;
use crate::term::{Morphism, Object};

/// A boundary `(X, X')`: the forward object and its backward partner.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Pair {
    pub fwd: Object,
    pub bwd: Object,
}

impl Pair {
    pub fn new(fwd: Object, bwd: Object) -> Self {
        Pair { fwd, bwd }
    }

    /// `(X, X)`
    pub fn diagonal(x: Object) -> Self {
        Pair {
            fwd: x.clone(),
            bwd: x,
        }
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.fwd, self.bwd)
    }
}

pub type EnvFn = dyn Fn(&[Value]) -> Result<Vec<Value>> + Send + Sync;

/// The environment turning an output `B` into a response `B'`.
#[derive(Clone)]
pub enum Env {
    /// Requires `B = B'`.
    Identity,
    /// Always answers with the same tuple, e.g. a cotangent vector.
    Constant(Vec<Value>),
    /// Evaluates a term `B → B'`; its generator applications are not charged
    /// to the executor.
    Term(Morphism),
    Callback(Arc<EnvFn>),
}

impl fmt::Debug for Env {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Env::Identity => f.write_str("Identity"),
            Env::Constant(v) => f.debug_tuple("Constant").field(v).finish(),
            Env::Term(m) => f.debug_tuple("Term").field(m).finish(),
            Env::Callback(_) => f.write_str("Callback"),
        }
    }
}

impl Env {
    pub fn respond(&self, sig: &Signature, b: &[Value], bwd: &Object) -> Result<Vec<Value>> {
        let out = match self {
            Env::Identity => b.to_vec(),
            Env::Constant(v) => v.clone(),
            Env::Term(m) => evaluate(m, sig, b, &mut CostReport::new(sig))?,
            Env::Callback(f) => f(b)?,
        };
        check_values(sig, bwd, &out)
            .map_err(|e| Error::Invalid(format!("environment response: {e}")))?;
        Ok(out)
    }
}

/// Result of running an executor once.
#[derive(Clone, Debug, PartialEq)]
pub struct Execution {
    pub b: Vec<Value>,
    pub a_prime: Vec<Value>,
    pub report: CostReport,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Lens {
    dom: Pair,
    cod: Pair,
    get: Morphism,
    put: Morphism,
}

impl Lens {
    /// `B'` is read off as the part of `put`'s domain after `A`.
    pub fn new(get: Morphism, put: Morphism) -> Result<Self> {
        let a = get.dom().clone();
        if !put.dom().has_prefix(&a) {
            return Err(Error::BoundaryMismatch {
                context: "lens put domain",
                left: format!("{a} * B'"),
                right: put.dom().to_string(),
            });
        }
        let b_prime = put.dom().slice(a.len(), put.dom().len());
        Ok(Lens {
            dom: Pair::new(a, put.cod().clone()),
            cod: Pair::new(get.cod().clone(), b_prime),
            get,
            put,
        })
    }

    pub fn dom(&self) -> &Pair {
        &self.dom
    }

    pub fn cod(&self) -> &Pair {
        &self.cod
    }

    pub fn get(&self) -> &Morphism {
        &self.get
    }

    pub fn put(&self) -> &Morphism {
        &self.put
    }

    /// Componentwise equality in the free cartesian category.
    pub fn equivalent(&self, other: &Lens) -> bool {
        self.dom == other.dom
            && self.cod == other.cod
            && equal(&self.get, &other.get)
            && equal(&self.put, &other.put)
    }

    /// `graph(get) ⨟ (A ⊗ env) ⨟ put : A → A'`, the whole round trip as one
    /// term.
    pub fn round_trip(&self, env: &Morphism) -> Result<Morphism> {
        let a = &self.dom.fwd;
        Morphism::graph(&self.get)
            .then(&Morphism::id(a).tensor(env))?
            .then(&self.put)
    }

    /// The round trip keeping the forward output: `A → B ⊗ A'`.
    pub fn round_trip_pair(&self, env: &Morphism) -> Result<Morphism> {
        let a = &self.dom.fwd;
        let b = &self.cod.fwd;
        Morphism::graph(&self.get)
            .then(&Morphism::id(a).tensor(&Morphism::copy(b)))?
            .then(&Morphism::id(&a.tensor(b)).tensor(env))?
            .then(&Morphism::swap(a, b).tensor(&Morphism::id(&self.cod.bwd)))?
            .then(&Morphism::id(b).tensor(&self.put))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "get": self.get.to_string(), "put": self.put.to_string() })
    }

    /// Reads `{"get": "...", "put": "..."}`.
    pub fn from_json(text: &str, sig: &Signature) -> Result<Self> {
        let file: LensFile = serde_json::from_str(text)?;
        Lens::new(expr::parse(&file.get, sig)?, expr::parse(&file.put, sig)?)
    }
}

impl fmt::Display for Lens {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<get: {} | put: {}>", self.get, self.put)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LensFile {
    get: String,
    put: String,
}

/// `get = id_A`, `put = π₂ : A ⊗ A' → A'`.
pub fn lens_id(pair: &Pair) -> Lens {
    Lens {
        dom: pair.clone(),
        cod: pair.clone(),
        get: Morphism::id(&pair.fwd),
        put: Morphism::proj2(&pair.fwd, &pair.bwd),
    }
}

/// `get = get₁ ⨟ get₂`,
/// `put = (graph(get₁) ⊗ C') ⨟ (A ⊗ put₂) ⨟ put₁`.
pub fn lens_compose(l1: &Lens, l2: &Lens) -> Result<Lens> {
    if l1.cod != l2.dom {
        return Err(Error::BoundaryMismatch {
            context: "lens composition",
            left: l1.cod.to_string(),
            right: l2.dom.to_string(),
        });
    }
    let a = &l1.dom.fwd;
    let c_prime = &l2.cod.bwd;
    let put = Morphism::graph(&l1.get)
        .tensor(&Morphism::id(c_prime))
        .then(&Morphism::id(a).tensor(&l2.put))?
        .then(&l1.put)?;
    Ok(Lens {
        dom: l1.dom.clone(),
        cod: l2.cod.clone(),
        get: l1.get.then(&l2.get)?,
        put,
    })
}

/// Runs `get`, asks the environment, then runs `put` on the held input.
///
/// The held copy of `A` is charged as `|A|` copied wires and `|A|` residual
/// slots.
pub fn lens_exec(l: &Lens, sig: &Signature, a: &[Value], env: &Env) -> Result<Execution> {
    let mut report = CostReport::new(sig);
    check_values(sig, &l.dom.fwd, a)?;
    report.copies += l.dom.fwd.len() as u64;
    report.hold_residual(l.dom.fwd.len(), sig.bytes(&l.dom.fwd));
    let b = evaluate(&l.get, sig, a, &mut report)?;
    let b_prime = env.respond(sig, &b, &l.cod.bwd)?;
    let mut held = a.to_vec();
    held.extend(b_prime);
    let a_prime = evaluate(&l.put, sig, &held, &mut report)?;
    Ok(Execution { b, a_prime, report })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Association {
    Left,
    Right,
}

/// A non-empty sequence of lenses with matching boundaries.
#[derive(Clone, Debug)]
pub struct LensChain {
    lenses: Vec<Lens>,
}

impl LensChain {
    pub fn new(lenses: Vec<Lens>) -> Result<Self> {
        if lenses.is_empty() {
            return Err(Error::Invalid(
                "a lens chain needs at least one lens".into(),
            ));
        }
        for (i, w) in lenses.windows(2).enumerate() {
            if w[0].cod != w[1].dom {
                return Err(Error::BoundaryMismatch {
                    context: "lens chain",
                    left: format!("lens {i} codomain {}", w[0].cod),
                    right: format!("lens {} domain {}", i + 1, w[1].dom),
                });
            }
        }
        Ok(LensChain { lenses })
    }

    pub fn lenses(&self) -> &[Lens] {
        &self.lenses
    }

    pub fn len(&self) -> usize {
        self.lenses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lenses.is_empty()
    }

    /// `((l₁ ⨟ l₂) ⨟ l₃) ⨟ …` or `l₁ ⨟ (l₂ ⨟ (l₃ ⨟ …))`.
    pub fn compose(&self, assoc: Association) -> Lens {
        let compose = |x: &Lens, y: &Lens| lens_compose(x, y).expect("chain boundaries checked");
        match assoc {
            Association::Left => {
                let mut acc = self.lenses[0].clone();
                for l in &self.lenses[1..] {
                    acc = compose(&acc, l);
                }
                acc
            }
            Association::Right => {
                let mut acc = self.lenses[self.lenses.len() - 1].clone();
                for l in self.lenses[..self.lenses.len() - 1].iter().rev() {
                    acc = compose(l, &acc);
                }
                acc
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::tuples;
    use crate::normal::normalize;

    fn chain_sig(n: usize) -> Signature {
        let mut b = Signature::builder();
        b.finite_sort("X", 3).unwrap();
        for i in 1..=n {
            let k = i as u32;
            b.table_fn(&format!("get{i}"), &["X"], &["X"], move |t| {
                vec![(t[0] + k) % 3]
            })
            .unwrap();
            b.table_fn(&format!("put{i}"), &["X", "X"], &["X"], move |t| {
                vec![(t[0] * k + t[1]) % 3]
            })
            .unwrap();
        }
        b.build()
    }

    fn chain(sig: &Signature, n: usize) -> LensChain {
        let lenses = (1..=n)
            .map(|i| {
                Lens::new(
                    sig.gen(&format!("get{i}")).unwrap(),
                    sig.gen(&format!("put{i}")).unwrap(),
                )
                .unwrap()
            })
            .collect();
        LensChain::new(lenses).unwrap()
    }

    fn is_get(d: &crate::term::GenDecl) -> bool {
        d.name().starts_with("get")
    }

    #[test]
    fn identity_is_a_unit() {
        let s = chain_sig(1);
        let l = chain(&s, 1).lenses[0].clone();
        let id = lens_id(l.dom());
        assert!(lens_compose(&id, &l).unwrap().equivalent(&l));
        assert!(lens_compose(&l, &lens_id(l.cod())).unwrap().equivalent(&l));
    }

    #[test]
    fn identity_exec_is_free() {
        let s = chain_sig(1);
        let x = s.object(&["X"]).unwrap();
        let run = lens_exec(
            &lens_id(&Pair::diagonal(x)),
            &s,
            &[Value::Fin(2)],
            &Env::Identity,
        )
        .unwrap();
        assert_eq!(run.a_prime, vec![Value::Fin(2)]);
        assert_eq!(run.report.total_evaluations(), 0);
    }

    #[test]
    fn left_three_chain_counts() {
        let s = chain_sig(3);
        let l = chain(&s, 3).compose(Association::Left);
        let run = lens_exec(&l, &s, &[Value::Fin(1)], &Env::Identity).unwrap();
        let gets: u64 = (1..=3).map(|i| run.report.count(&format!("get{i}"))).sum();
        assert_eq!(gets, 6);
        assert_eq!(run.report.copies, 3);
        assert_eq!(run.report.peak_residual_slots, 1);
    }

    #[test]
    fn right_three_chain_counts() {
        let s = chain_sig(3);
        let l = chain(&s, 3).compose(Association::Right);
        let run = lens_exec(&l, &s, &[Value::Fin(1)], &Env::Identity).unwrap();
        let gets: u64 = (1..=3).map(|i| run.report.count(&format!("get{i}"))).sum();
        assert_eq!(gets, 5);
    }

    #[test]
    fn association_is_invisible_after_normalizing() {
        let s = chain_sig(4);
        let c = chain(&s, 4);
        assert!(c
            .compose(Association::Left)
            .equivalent(&c.compose(Association::Right)));
    }

    #[test]
    fn outer_put_mentions_first_get_twice() {
        let s = chain_sig(3);
        let l = chain(&s, 3).compose(Association::Left);
        let nf = normalize(l.put());
        assert_eq!(nf.count_generators(&|d| d.name() == "get1"), 2);
        assert_eq!(nf.count_generators(&is_get), 3);
    }

    #[test]
    fn round_trip_term_matches_executor() {
        let s = chain_sig(3);
        let l = chain(&s, 3).compose(Association::Left);
        let x = s.object(&["X"]).unwrap();
        let env = Morphism::id(&x);
        let rt = l.round_trip_pair(&env).unwrap();
        assert_eq!(
            normalize(&l.round_trip(&env).unwrap()).count_generators(&is_get),
            6
        );
        for t in tuples(&[3]) {
            let a = vec![Value::Fin(t[0])];
            let run = lens_exec(&l, &s, &a, &Env::Identity).unwrap();
            let out = evaluate(&rt, &s, &a, &mut CostReport::new(&s)).unwrap();
            assert_eq!(out, [run.b, run.a_prime].concat());
        }
    }

    #[test]
    fn boundary_errors() {
        let s = chain_sig(1);
        let g = s.gen("get1").unwrap();
        let x = s.object(&["X"]).unwrap();
        assert!(Lens::new(g.clone(), Morphism::id(&Object::unit())).is_err());
        let l = Lens::new(g, s.gen("put1").unwrap()).unwrap();
        let other = lens_id(&Pair::new(x.tensor(&x), x));
        assert!(lens_compose(&l, &other).is_err());
        assert!(LensChain::new(vec![]).is_err());
    }

    #[test]
    fn env_response_is_typed() {
        let s = chain_sig(1);
        let l = chain(&s, 1).lenses[0].clone();
        let bad = Env::Constant(vec![Value::Fin(7)]);
        assert!(lens_exec(&l, &s, &[Value::Fin(0)], &bad).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = chain_sig(2);
        let l = chain(&s, 2).compose(Association::Left);
        let text = l.to_json().to_string();
        assert_eq!(Lens::from_json(&text, &s).unwrap(), l);
    }
}
