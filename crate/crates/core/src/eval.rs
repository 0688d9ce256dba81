//! Instrumented evaluation of terms and the exhaustive extensional-equality
//! oracle.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signature::{Carrier, Semantics, Signature};
use crate::term::{Morphism, Node, Object};

/// Inputs above this many tuples are refused by the exhaustive oracle.
pub const ENUMERATION_CAP: u128 = 1_000_000;

/// A value on one wire.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Fin(u32),
    Real(Vec<f64>),
}

impl Value {
    fn fin(&self) -> Result<u32> {
        match self {
            Value::Fin(v) => Ok(*v),
            Value::Real(_) => Err(Error::UnsupportedInterpretation(
                "real value on a finite wire".into(),
            )),
        }
    }

    fn real(&self) -> Result<&[f64]> {
        match self {
            Value::Real(v) => Ok(v),
            Value::Fin(_) => Err(Error::UnsupportedInterpretation(
                "finite value on a real wire".into(),
            )),
        }
    }

    pub fn as_fin(&self) -> Option<u32> {
        match self {
            Value::Fin(v) => Some(*v),
            Value::Real(_) => None,
        }
    }

    pub fn as_real(&self) -> Option<&[f64]> {
        match self {
            Value::Real(v) => Some(v),
            Value::Fin(_) => None,
        }
    }
}

/// Counters accumulated by one execution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostReport {
    names: Vec<Arc<str>>,
    pub generator_counts: Vec<u64>,
    /// Wires duplicated by copy nodes (and by executors holding a residual).
    pub copies: u64,
    /// Delete, swap and projection nodes executed.
    pub structural_ops: u64,
    pub peak_residual_slots: usize,
    pub peak_residual_bytes: usize,
}

impl CostReport {
    pub fn new(sig: &Signature) -> Self {
        CostReport {
            names: sig
                .generators()
                .iter()
                .map(|g| g.decl.name.clone())
                .collect(),
            generator_counts: vec![0; sig.generators().len()],
            copies: 0,
            structural_ops: 0,
            peak_residual_slots: 0,
            peak_residual_bytes: 0,
        }
    }

    pub fn count(&self, name: &str) -> u64 {
        self.names
            .iter()
            .position(|n| &**n == name)
            .map_or(0, |i| self.generator_counts[i])
    }

    pub fn total_evaluations(&self) -> u64 {
        self.generator_counts.iter().sum()
    }

    /// Sum of counters over generators whose index is in `ids`.
    pub fn count_indices(&self, ids: &[usize]) -> u64 {
        ids.iter().map(|&i| self.generator_counts[i]).sum()
    }

    pub fn hold_residual(&mut self, slots: usize, bytes: usize) {
        self.peak_residual_slots = self.peak_residual_slots.max(slots);
        self.peak_residual_bytes = self.peak_residual_bytes.max(bytes);
    }

    pub fn to_json(&self) -> serde_json::Value {
        let counts: BTreeMap<&str, u64> = self
            .names
            .iter()
            .zip(&self.generator_counts)
            .map(|(n, &c)| (&**n, c))
            .collect();
        serde_json::json!({
            "generator_counts": counts,
            "copies": self.copies,
            "peak_residual_slots": self.peak_residual_slots,
            "peak_residual_bytes": self.peak_residual_bytes,
        })
    }
}

/// Checks that `values` inhabit `obj` under `sig`.
pub fn check_values(sig: &Signature, obj: &Object, values: &[Value]) -> Result<()> {
    if values.len() != obj.len() {
        return Err(Error::Arity {
            expected: obj.len(),
            found: values.len(),
        });
    }
    for (wire, (s, v)) in obj.sorts().iter().zip(values).enumerate() {
        let ok = match (sig.carrier(s), v) {
            (Carrier::Finite(n), Value::Fin(x)) => *x < n,
            (Carrier::Real(d), Value::Real(x)) => x.len() == d,
            _ => false,
        };
        if !ok {
            return Err(Error::Carrier {
                wire,
                expected: format!("{s}: {}", sig.carrier(s)),
                found: serde_json::to_string(v).unwrap_or_default(),
            });
        }
    }
    Ok(())
}

/// Evaluates `m` on `inputs`, counting generator applications and copies.
pub fn evaluate(
    m: &Morphism,
    sig: &Signature,
    inputs: &[Value],
    report: &mut CostReport,
) -> Result<Vec<Value>> {
    check_values(sig, m.dom(), inputs)?;
    eval_node(m, sig, inputs, report)
}

fn eval_node(
    m: &Morphism,
    sig: &Signature,
    inputs: &[Value],
    report: &mut CostReport,
) -> Result<Vec<Value>> {
    Ok(match m.node() {
        Node::Gen(decl) => {
            let g = sig.resolve(decl)?;
            if let Some(c) = report.generator_counts.get_mut(decl.index()) {
                *c += 1;
            }
            apply_generator(&g.semantics, inputs)?
        }
        Node::Id(_) => inputs.to_vec(),
        Node::Seq(l, r) => {
            let mid = eval_node(l, sig, inputs, report)?;
            eval_node(r, sig, &mid, report)?
        }
        Node::Ten(l, r) => {
            let (a, b) = inputs.split_at(l.dom().len());
            let mut out = eval_node(l, sig, a, report)?;
            out.extend(eval_node(r, sig, b, report)?);
            out
        }
        Node::Copy(a) => {
            report.copies += a.len() as u64;
            let mut out = inputs.to_vec();
            out.extend_from_slice(inputs);
            out
        }
        Node::Delete(_) => {
            report.structural_ops += 1;
            Vec::new()
        }
        Node::Swap(a, _) => {
            report.structural_ops += 1;
            let (x, y) = inputs.split_at(a.len());
            let mut out = y.to_vec();
            out.extend_from_slice(x);
            out
        }
        Node::Proj1(a, _) => {
            report.structural_ops += 1;
            inputs[..a.len()].to_vec()
        }
        Node::Proj2(a, _) => {
            report.structural_ops += 1;
            inputs[a.len()..].to_vec()
        }
    })
}

pub(crate) fn apply_generator(sem: &Semantics, inputs: &[Value]) -> Result<Vec<Value>> {
    match sem {
        Semantics::Table(t) => {
            let args = inputs.iter().map(Value::fin).collect::<Result<Vec<_>>>()?;
            Ok(t.lookup(&args).iter().map(|&v| Value::Fin(v)).collect())
        }
        Semantics::Real(p) => {
            let args = inputs.iter().map(Value::real).collect::<Result<Vec<_>>>()?;
            Ok(vec![Value::Real(p.apply(&args))])
        }
    }
}

/// All tuples of a mixed-radix space, first digit most significant.
pub fn tuples(radices: &[u32]) -> impl Iterator<Item = Vec<u32>> + '_ {
    let total: u128 = radices.iter().map(|&r| r as u128).product();
    let mut current = vec![0u32; radices.len()];
    let mut emitted: u128 = 0;
    std::iter::from_fn(move || {
        if emitted >= total {
            return None;
        }
        let out = current.clone();
        emitted += 1;
        for i in (0..radices.len()).rev() {
            current[i] += 1;
            if current[i] < radices[i] {
                break;
            }
            current[i] = 0;
        }
        Some(out)
    })
}

fn finite_radices(sig: &Signature, obj: &Object) -> Result<Vec<u32>> {
    obj.sorts()
        .iter()
        .map(|s| match sig.carrier(s) {
            Carrier::Finite(n) => Ok(n),
            Carrier::Real(_) => Err(Error::UnsupportedInterpretation(format!(
                "sort `{s}` is real-valued; equality is only decided over finite carriers"
            ))),
        })
        .collect()
}

fn ensure_finite(sig: &Signature, terms: &[&Morphism]) -> Result<Vec<u32>> {
    let mut gens = Vec::new();
    for t in terms {
        t.generators(&mut gens);
        finite_radices(sig, t.cod())?;
    }
    for d in &gens {
        match &sig.resolve(d)?.semantics {
            Semantics::Table(_) => {}
            Semantics::Real(_) => {
                return Err(Error::UnsupportedInterpretation(format!(
                    "generator `{}` is a real primitive",
                    d.name()
                )))
            }
        }
    }
    let radices = finite_radices(sig, terms[0].dom())?;
    let count: u128 = radices.iter().map(|&r| r as u128).product();
    if count > ENUMERATION_CAP {
        return Err(Error::EnumerationTooLarge {
            tuples: count,
            cap: ENUMERATION_CAP,
        });
    }
    Ok(radices)
}

/// First input on which `f` and `g` disagree, by exhaustive enumeration.
pub fn find_counterexample(
    f: &Morphism,
    g: &Morphism,
    sig: &Signature,
) -> Result<Option<Vec<Value>>> {
    if f.dom() != g.dom() {
        return Err(Error::TypeMismatch {
            context: "extensional equality (domain)",
            expected: f.dom().clone(),
            found: g.dom().clone(),
        });
    }
    if f.cod() != g.cod() {
        return Err(Error::TypeMismatch {
            context: "extensional equality (codomain)",
            expected: f.cod().clone(),
            found: g.cod().clone(),
        });
    }
    let radices = ensure_finite(sig, &[f, g])?;
    let mut report = CostReport::new(sig);
    for t in tuples(&radices) {
        let input: Vec<Value> = t.into_iter().map(Value::Fin).collect();
        let a = eval_node(f, sig, &input, &mut report)?;
        let b = eval_node(g, sig, &input, &mut report)?;
        if a != b {
            return Ok(Some(input));
        }
    }
    Ok(None)
}

/// Exhaustive extensional equality over finite carriers.
pub fn eq_extensional(f: &Morphism, g: &Morphism, sig: &Signature) -> Result<bool> {
    Ok(find_counterexample(f, g, sig)?.is_none())
}

/// The full function table of `m`, one output tuple per input tuple in
/// enumeration order.
pub fn function_table(m: &Morphism, sig: &Signature) -> Result<Vec<Vec<Value>>> {
    let radices = ensure_finite(sig, &[m])?;
    let mut report = CostReport::new(sig);
    tuples(&radices)
        .map(|t| {
            let input: Vec<Value> = t.into_iter().map(Value::Fin).collect();
            eval_node(m, sig, &input, &mut report)
        })
        .collect()
}
