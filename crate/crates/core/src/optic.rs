//! Optics `(M, fw : A → M ⊗ B, bw : M ⊗ B' → A')`, kept as representatives.
//! The executor stores the residual `M` between passes instead of
//! recomputing it.

use std::fmt;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::eval::{check_values, evaluate, CostReport, Value};
use crate::expr;
use crate::lens::{Env, Execution, Pair};
use crate::signature::Signature;
use crate::term::{Layer, Morphism, Object};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Optic {
    dom: Pair,
    cod: Pair,
    residual: Object,
    fw: Morphism,
    bw: Morphism,
}

impl Optic {
    /// `B` and `B'` are what follows `M` in `fw`'s codomain and `bw`'s domain.
    pub fn new(residual: Object, fw: Morphism, bw: Morphism) -> Result<Self> {
        for (what, obj) in [
            ("optic fw codomain", fw.cod()),
            ("optic bw domain", bw.dom()),
        ] {
            if !obj.has_prefix(&residual) {
                return Err(Error::BoundaryMismatch {
                    context: what,
                    left: format!("{residual} * _"),
                    right: obj.to_string(),
                });
            }
        }
        let m = residual.len();
        Ok(Optic {
            dom: Pair::new(fw.dom().clone(), bw.cod().clone()),
            cod: Pair::new(
                fw.cod().slice(m, fw.cod().len()),
                bw.dom().slice(m, bw.dom().len()),
            ),
            residual,
            fw,
            bw,
        })
    }

    pub fn dom(&self) -> &Pair {
        &self.dom
    }

    pub fn cod(&self) -> &Pair {
        &self.cod
    }

    pub fn residual(&self) -> &Object {
        &self.residual
    }

    pub fn fw(&self) -> &Morphism {
        &self.fw
    }

    pub fn bw(&self) -> &Morphism {
        &self.bw
    }

    /// Same representative up to the strict monoidal structure: equal residual
    /// and components that flatten to the same layers.
    pub fn strictly_equal(&self, other: &Optic) -> bool {
        fn layers(m: &Morphism) -> Vec<Layer> {
            m.flatten()
        }
        self.dom == other.dom
            && self.cod == other.cod
            && self.residual == other.residual
            && layers(&self.fw) == layers(&other.fw)
            && layers(&self.bw) == layers(&other.bw)
    }

    /// `fw ⨟ (M ⊗ env) ⨟ bw : A → A'`.
    pub fn round_trip(&self, env: &Morphism) -> Result<Morphism> {
        self.fw
            .then(&Morphism::id(&self.residual).tensor(env))?
            .then(&self.bw)
    }

    /// The round trip keeping the forward output: `A → B ⊗ A'`.
    pub fn round_trip_pair(&self, env: &Morphism) -> Result<Morphism> {
        let m = &self.residual;
        let b = &self.cod.fwd;
        self.fw
            .then(&Morphism::id(m).tensor(&Morphism::copy(b)))?
            .then(&Morphism::id(&m.tensor(b)).tensor(env))?
            .then(&Morphism::swap(m, b).tensor(&Morphism::id(&self.cod.bwd)))?
            .then(&Morphism::id(b).tensor(&self.bw))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "M": self.residual.names(),
            "fw": self.fw.to_string(),
            "bw": self.bw.to_string(),
        })
    }

    /// Reads `{"M": ["A"], "fw": "...", "bw": "..."}`.
    pub fn from_json(text: &str, sig: &Signature) -> Result<Self> {
        let file: OpticFile = serde_json::from_str(text)?;
        Optic::from_file(file, sig)
    }

    pub fn from_value(value: serde_json::Value, sig: &Signature) -> Result<Self> {
        Optic::from_file(serde_json::from_value(value)?, sig)
    }

    fn from_file(file: OpticFile, sig: &Signature) -> Result<Self> {
        Optic::new(
            sig.object(&file.residual)?,
            expr::parse(&file.fw, sig)?,
            expr::parse(&file.bw, sig)?,
        )
    }
}

impl fmt::Display for Optic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "<M: {} | fw: {} | bw: {}>",
            self.residual, self.fw, self.bw
        )
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OpticFile {
    #[serde(rename = "M")]
    residual: Vec<String>,
    fw: String,
    bw: String,
}

/// `M = 1`, `fw = id_A`, `bw = id_A'`.
pub fn optic_id(pair: &Pair) -> Optic {
    Optic {
        dom: pair.clone(),
        cod: pair.clone(),
        residual: Object::unit(),
        fw: Morphism::id(&pair.fwd),
        bw: Morphism::id(&pair.bwd),
    }
}

/// `M = M₁ ⊗ M₂`, `fw = fw₁ ⨟ (M₁ ⊗ fw₂)`, `bw = (M₁ ⊗ bw₂) ⨟ bw₁`.
pub fn optic_compose(o1: &Optic, o2: &Optic) -> Result<Optic> {
    if o1.cod != o2.dom {
        return Err(Error::BoundaryMismatch {
            context: "optic composition",
            left: o1.cod.to_string(),
            right: o2.dom.to_string(),
        });
    }
    let m1 = Morphism::id(&o1.residual);
    Ok(Optic {
        dom: o1.dom.clone(),
        cod: o2.cod.clone(),
        residual: o1.residual.tensor(&o2.residual),
        fw: o1.fw.then(&m1.tensor(&o2.fw))?,
        bw: m1.tensor(&o2.bw).then(&o1.bw)?,
    })
}

/// Left fold of [`optic_compose`] over a non-empty list.
pub fn optic_compose_all(optics: &[Optic]) -> Result<Optic> {
    let (first, rest) = optics
        .split_first()
        .ok_or_else(|| Error::Invalid("nothing to compose".into()))?;
    rest.iter()
        .try_fold(first.clone(), |acc, o| optic_compose(&acc, o))
}

/// Runs `fw`, holds the residual, asks the environment, then runs `bw`.
pub fn optic_exec(o: &Optic, sig: &Signature, a: &[Value], env: &Env) -> Result<Execution> {
    let mut report = CostReport::new(sig);
    check_values(sig, &o.dom.fwd, a)?;
    let mut out = evaluate(&o.fw, sig, a, &mut report)?;
    let b = out.split_off(o.residual.len());
    report.hold_residual(o.residual.len(), sig.bytes(&o.residual));
    let b_prime = env.respond(sig, &b, &o.cod.bwd)?;
    out.extend(b_prime);
    let a_prime = evaluate(&o.bw, sig, &out, &mut report)?;
    Ok(Execution { b, a_prime, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::tuples;

    fn sig() -> Signature {
        let mut b = Signature::builder();
        b.finite_sort("X", 3).unwrap();
        b.finite_sort("Y", 2).unwrap();
        b.table_fn("f", &["X"], &["Y", "X"], |t| vec![t[0] % 2, (t[0] + 1) % 3])
            .unwrap();
        b.table_fn("g", &["Y", "X"], &["X"], |t| vec![(t[0] + t[1]) % 3])
            .unwrap();
        b.table_fn("h", &["X"], &["X", "X"], |t| vec![t[0], 2 - t[0]])
            .unwrap();
        b.table_fn("k", &["X", "X"], &["X"], |t| vec![(t[0] * t[1]) % 3])
            .unwrap();
        b.build()
    }

    fn o1(s: &Signature) -> Optic {
        Optic::new(
            s.object(&["Y"]).unwrap(),
            s.gen("f").unwrap(),
            s.gen("g").unwrap(),
        )
        .unwrap()
    }

    fn o2(s: &Signature) -> Optic {
        Optic::new(
            s.object(&["X"]).unwrap(),
            s.gen("h").unwrap(),
            s.gen("k").unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn residuals_concatenate() {
        let s = sig();
        let c = optic_compose(&o1(&s), &o2(&s)).unwrap();
        assert_eq!(c.residual(), &s.object(&["Y", "X"]).unwrap());
        let id = optic_id(o1(&s).dom());
        assert_eq!(
            optic_compose(&id, &o1(&s)).unwrap().residual(),
            o1(&s).residual()
        );
    }

    #[test]
    fn composition_is_strictly_associative_and_unital() {
        let s = sig();
        let (a, b) = (o1(&s), o2(&s));
        let c = o2(&s);
        let left = optic_compose(&optic_compose(&a, &b).unwrap(), &c).unwrap();
        let right = optic_compose(&a, &optic_compose(&b, &c).unwrap()).unwrap();
        assert!(left.strictly_equal(&right));
        assert_ne!(left, right);
        let id = optic_id(a.dom());
        assert!(optic_compose(&id, &a).unwrap().strictly_equal(&a));
        assert!(optic_compose(&a, &optic_id(a.cod()))
            .unwrap()
            .strictly_equal(&a));
    }

    #[test]
    fn exec_holds_residual_and_counts_once() {
        let s = sig();
        let c = optic_compose(&o1(&s), &o2(&s)).unwrap();
        let x = s.object(&["X"]).unwrap();
        for t in tuples(&[3]) {
            let a = vec![Value::Fin(t[0])];
            let run = optic_exec(&c, &s, &a, &Env::Identity).unwrap();
            assert_eq!(run.report.peak_residual_slots, 2);
            for g in ["f", "g", "h", "k"] {
                assert_eq!(run.report.count(g), 1);
            }
            let rt = c.round_trip_pair(&Morphism::id(&x)).unwrap();
            let out = evaluate(&rt, &s, &a, &mut CostReport::new(&s)).unwrap();
            assert_eq!(out, [run.b, run.a_prime].concat());
        }
    }

    #[test]
    fn identity_holds_nothing() {
        let s = sig();
        let x = s.object(&["X"]).unwrap();
        let run = optic_exec(
            &optic_id(&Pair::diagonal(x)),
            &s,
            &[Value::Fin(1)],
            &Env::Identity,
        )
        .unwrap();
        assert_eq!(run.a_prime, vec![Value::Fin(1)]);
        assert_eq!(run.report.peak_residual_slots, 0);
    }

    #[test]
    fn rejects_bad_boundaries() {
        let s = sig();
        let x = s.object(&["X"]).unwrap();
        assert!(Optic::new(x.clone(), s.gen("f").unwrap(), s.gen("g").unwrap()).is_err());
        assert!(optic_compose(&o2(&s), &o1(&s)).is_ok());
        let y = s.object(&["Y"]).unwrap();
        assert!(optic_compose(&o1(&s), &optic_id(&Pair::diagonal(y))).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = sig();
        let c = optic_compose(&o1(&s), &o2(&s)).unwrap();
        assert_eq!(Optic::from_json(&c.to_json().to_string(), &s).unwrap(), c);
    }
}
