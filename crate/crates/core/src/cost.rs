//! Space-time tradeoff harness. Builds chains of `n` lenses, runs them
//! through the checkpointing lens executor, the residual-storing optic
//! executor and the shared DAG, checks the three agree, and reports the
//! counters.

use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use crate::bridge::reify;
use crate::error::{Error, Result};
use crate::eval::{evaluate, tuples, CostReport, Value};
use crate::lens::{lens_exec, Association, Env, Execution, Lens, LensChain};
use crate::normal::normalize;
use crate::optic::{optic_compose_all, optic_exec, Optic};
use crate::share::SharedDag;
use crate::signature::{Carrier, Signature};
use crate::term::{GenDecl, Morphism};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Interp {
    /// Tables over a sort of size 3.
    Finite,
    /// Scalar primitives on `R^4`, with transpose-derivative puts.
    Real,
}

impl std::str::FromStr for Interp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "finite" => Ok(Interp::Finite),
            "real" => Ok(Interp::Real),
            _ => Err(Error::Invalid(format!("unknown interpretation `{s}`"))),
        }
    }
}

pub const REAL_DIM: usize = 4;
pub const FINITE_SIZE: u32 = 3;

const REAL_GETS: [&str; 4] = ["affine(1.3,0.2)", "tanh", "sin", "sigmoid"];
const COTANGENT: [f64; REAL_DIM] = [1.0, -0.5, 0.25, 2.0];

/// A chain of `n` lenses `(getᵢ, putᵢ) : (X, X) → (X, X)` over a fresh
/// signature, plus an environment `env : X → X`.
#[derive(Clone, Debug)]
pub struct ChainSetup {
    pub sig: Signature,
    pub chain: LensChain,
    pub env: Env,
    pub env_term: Morphism,
    pub interp: Interp,
}

pub fn is_get(d: &GenDecl) -> bool {
    d.name().starts_with("get")
}

pub fn build_chain(n: usize, interp: Interp) -> Result<ChainSetup> {
    if n == 0 {
        return Err(Error::Invalid("chain length must be at least 1".into()));
    }
    let mut b = Signature::builder();
    match interp {
        Interp::Finite => {
            b.finite_sort("X", FINITE_SIZE)?;
            for i in 1..=n as u32 {
                b.table_fn(&format!("get{i}"), &["X"], &["X"], move |t| {
                    vec![(t[0] * (i % 2 + 1) + i) % FINITE_SIZE]
                })?;
                b.table_fn(&format!("put{i}"), &["X", "X"], &["X"], move |t| {
                    vec![(t[0] + t[1] * (i % 2 + 1) + i) % FINITE_SIZE]
                })?;
            }
            b.table_fn("env", &["X"], &["X"], |t| {
                vec![(2 * t[0] + 1) % FINITE_SIZE]
            })?;
        }
        Interp::Real => {
            b.real_sort("X", REAL_DIM)?;
            for i in 1..=n {
                let prim = REAL_GETS[(i - 1) % REAL_GETS.len()];
                b.builtin(&format!("get{i}"), &["X"], &["X"], prim)?;
                b.builtin(
                    &format!("put{i}"),
                    &["X", "X"],
                    &["X"],
                    &format!("{prim}.vjp"),
                )?;
            }
            let v: Vec<String> = COTANGENT.iter().map(|c| c.to_string()).collect();
            b.builtin("env", &["X"], &["X"], &format!("const({})", v.join(",")))?;
        }
    }
    let sig = b.build();
    let lenses = (1..=n)
        .map(|i| Lens::new(sig.gen(&format!("get{i}"))?, sig.gen(&format!("put{i}"))?))
        .collect::<Result<Vec<_>>>()?;
    let env = match interp {
        Interp::Finite => Env::Term(sig.gen("env")?),
        Interp::Real => Env::Constant(vec![Value::Real(COTANGENT.to_vec())]),
    };
    Ok(ChainSetup {
        env_term: sig.gen("env")?,
        chain: LensChain::new(lenses)?,
        sig,
        env,
        interp,
    })
}

impl ChainSetup {
    pub fn n(&self) -> usize {
        self.chain.len()
    }

    pub fn lens(&self, assoc: Association) -> Lens {
        self.chain.compose(assoc)
    }

    /// Reify each lens, then compose as optics.
    pub fn optic(&self) -> Optic {
        let parts: Vec<Optic> = self.chain.lenses().iter().map(reify).collect();
        optic_compose_all(&parts).expect("chain boundaries match")
    }

    /// Shared form of the reified left-associated round trip `A → B ⊗ A'`.
    pub fn shared(&self) -> SharedDag {
        let rt = reify(&self.lens(Association::Left))
            .round_trip_pair(&self.env_term)
            .expect("env : B -> B'");
        SharedDag::from_canonical(&normalize(&rt))
    }

    /// Inputs the paths are compared on: every element for finite carriers,
    /// a fixed point for real ones.
    pub fn inputs(&self) -> Vec<Vec<Value>> {
        match self.interp {
            Interp::Finite => tuples(&[FINITE_SIZE])
                .map(|t| vec![Value::Fin(t[0])])
                .collect(),
            Interp::Real => vec![vec![Value::Real(vec![0.3, -0.7, 1.1, 0.05])]],
        }
    }
}

/// Get occurrences in the canonical form of the reified left-associated
/// round trip `A → A'`, and get nodes after sharing.
pub fn optimizer_counts(setup: &ChainSetup) -> (u64, usize) {
    let rt = reify(&setup.lens(Association::Left))
        .round_trip(&setup.env_term)
        .expect("env : B -> B'");
    let nf = normalize(&rt);
    let dag = SharedDag::from_canonical(&nf);
    (nf.count_generators(&is_get), dag.count_nodes(&is_get))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TradeoffRow {
    pub n: usize,
    pub lens_get_evals: u64,
    pub optic_get_evals: u64,
    #[serde(rename = "lens_copies_of_A")]
    pub lens_copies_of_a: u64,
    pub lens_residual_slots: usize,
    pub optic_residual_slots: usize,
    pub shared_dag_get_nodes: usize,
    /// Wall times are informational and left empty when timing is off.
    pub lens_wall_time_us: Option<f64>,
    pub optic_wall_time_us: Option<f64>,
    pub shared_wall_time_us: Option<f64>,
}

impl TradeoffRow {
    /// Drops the wall times, leaving only deterministic columns filled.
    pub fn without_timing(mut self) -> Self {
        self.lens_wall_time_us = None;
        self.optic_wall_time_us = None;
        self.shared_wall_time_us = None;
        self
    }
}

/// Counts that depend on association, reported alongside the rows.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AssociationNote {
    pub n: usize,
    pub right_assoc_lens_get_evals: u64,
    /// Nested recomputation levels of the left-associated put.
    pub recompute_levels: usize,
}

fn gets(report: &CostReport, sig: &Signature) -> u64 {
    let ids: Vec<usize> = sig
        .generators()
        .iter()
        .filter(|g| is_get(&g.decl))
        .map(|g| g.decl.index())
        .collect();
    report.count_indices(&ids)
}

fn agree(x: &[Value], y: &[Value], interp: Interp) -> bool {
    match interp {
        Interp::Finite => x == y,
        Interp::Real => {
            x.len() == y.len()
                && x.iter()
                    .zip(y)
                    .all(|(a, b)| match (a.as_real(), b.as_real()) {
                        (Some(a), Some(b)) => {
                            a.len() == b.len()
                                && a.iter().zip(b).all(|(p, q)| (p - q).abs() <= 1e-12)
                        }
                        _ => false,
                    })
        }
    }
}

/// Runs the three paths on every input of [`ChainSetup::inputs`], failing if
/// any two disagree, and reports counters from the first input.
pub fn run_row(setup: &ChainSetup) -> Result<(TradeoffRow, AssociationNote)> {
    let sig = &setup.sig;
    let lens = setup.lens(Association::Left);
    let optic = setup.optic();
    let dag = setup.shared();
    let right = setup.lens(Association::Right);
    let mut row: Option<TradeoffRow> = None;
    let mut note: Option<AssociationNote> = None;
    for a in setup.inputs() {
        let t = Instant::now();
        let l: Execution = lens_exec(&lens, sig, &a, &setup.env)?;
        let lens_time = t.elapsed();
        let t = Instant::now();
        let o = optic_exec(&optic, sig, &a, &setup.env)?;
        let optic_time = t.elapsed();
        let t = Instant::now();
        let mut dag_report = CostReport::new(sig);
        let shared = dag.evaluate(sig, &a, &mut dag_report)?;
        let shared_time = t.elapsed();
        let r = lens_exec(&right, sig, &a, &setup.env)?;

        let lens_out = [l.b.clone(), l.a_prime.clone()].concat();
        let optic_out = [o.b.clone(), o.a_prime.clone()].concat();
        let right_out = [r.b.clone(), r.a_prime.clone()].concat();
        for (what, other) in [
            ("optic", &optic_out),
            ("shared", &shared),
            ("right", &right_out),
        ] {
            if !agree(&lens_out, other, setup.interp) {
                return Err(Error::Invalid(format!(
                    "n = {}: lens and {what} paths disagree on input {}: {} vs {}",
                    setup.n(),
                    serde_json::to_string(&a)?,
                    serde_json::to_string(&lens_out)?,
                    serde_json::to_string(other)?,
                )));
            }
        }
        row.get_or_insert(TradeoffRow {
            n: setup.n(),
            lens_get_evals: gets(&l.report, sig),
            optic_get_evals: gets(&o.report, sig),
            lens_copies_of_a: l.report.copies,
            lens_residual_slots: l.report.peak_residual_slots,
            optic_residual_slots: o.report.peak_residual_slots,
            shared_dag_get_nodes: dag.count_nodes(&is_get),
            lens_wall_time_us: Some(lens_time.as_secs_f64() * 1e6),
            optic_wall_time_us: Some(optic_time.as_secs_f64() * 1e6),
            shared_wall_time_us: Some(shared_time.as_secs_f64() * 1e6),
        });
        note.get_or_insert(AssociationNote {
            n: setup.n(),
            right_assoc_lens_get_evals: gets(&r.report, sig),
            recompute_levels: setup.n() - 1,
        });
    }
    Ok((
        row.expect("at least one input"),
        note.expect("at least one input"),
    ))
}

/// One row per `n` in `range`. Real chains are also validated against
/// finite differences.
pub fn run_tradeoff(
    range: std::ops::RangeInclusive<usize>,
    interp: Interp,
) -> Result<(Vec<TradeoffRow>, Vec<AssociationNote>)> {
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for n in range {
        let setup = build_chain(n, interp)?;
        if interp == Interp::Real {
            let fd = finite_difference_check(&setup, &setup.inputs()[0])?;
            if !fd.passed {
                return Err(Error::Invalid(format!(
                    "n = {n}: backward pass differs from finite differences (relative error {:e})",
                    fd.max_relative_error
                )));
            }
        }
        let (row, note) = run_row(&setup)?;
        rows.push(row);
        notes.push(note);
    }
    Ok((rows, notes))
}

pub fn write_csv<W: Write>(rows: &[TradeoffRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Invalid(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub const FD_STEP: f64 = 1e-6;
pub const FD_TOLERANCE: f64 = 1e-4;

#[derive(Clone, Debug, Serialize)]
pub struct FiniteDifference {
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    pub max_relative_error: f64,
    pub passed: bool,
}

/// Compares the lens backward output with `Jᵀv` estimated by central
/// differences of the composite forward map, where `v` is the constant
/// environment response.
pub fn finite_difference_check(setup: &ChainSetup, a: &[Value]) -> Result<FiniteDifference> {
    let sig = &setup.sig;
    let lens = setup.lens(Association::Left);
    let x = match a {
        [Value::Real(x)] => x.clone(),
        _ => {
            return Err(Error::Invalid(
                "finite differences need one real input".into(),
            ))
        }
    };
    let v = match &setup.env {
        Env::Constant(c) => match c.as_slice() {
            [Value::Real(v)] => v.clone(),
            _ => return Err(Error::Invalid("environment must be one real vector".into())),
        },
        _ => {
            return Err(Error::Invalid(
                "environment must be a constant cotangent".into(),
            ))
        }
    };
    let run = lens_exec(&lens, sig, a, &setup.env)?;
    let analytic = run.a_prime[0]
        .as_real()
        .ok_or_else(|| Error::Invalid("real backward output expected".into()))?
        .to_vec();
    let forward = |p: &[f64]| -> Result<Vec<f64>> {
        let out = evaluate(
            lens.get(),
            sig,
            &[Value::Real(p.to_vec())],
            &mut CostReport::new(sig),
        )?;
        Ok(out[0].as_real().expect("real output").to_vec())
    };
    let mut numeric = Vec::with_capacity(x.len());
    for j in 0..x.len() {
        let mut plus = x.clone();
        let mut minus = x.clone();
        plus[j] += FD_STEP;
        minus[j] -= FD_STEP;
        let (fp, fm) = (forward(&plus)?, forward(&minus)?);
        let d: f64 = fp
            .iter()
            .zip(&fm)
            .zip(&v)
            .map(|((p, m), w)| (p - m) / (2.0 * FD_STEP) * w)
            .sum();
        numeric.push(d);
    }
    let max_relative_error = analytic
        .iter()
        .zip(&numeric)
        .map(|(p, q)| (p - q).abs() / p.abs().max(q.abs()).max(1e-8))
        .fold(0.0, f64::max);
    Ok(FiniteDifference {
        analytic,
        numeric,
        max_relative_error,
        passed: max_relative_error <= FD_TOLERANCE,
    })
}

/// Whether every sort of `sig` is finite.
pub fn is_finite(sig: &Signature) -> bool {
    sig.sorts()
        .iter()
        .all(|s| matches!(s.carrier, Carrier::Finite(_)))
}

/// Runs the left-associated lens, the composed optic and the shared DAG of
/// an arbitrary chain over finite carriers on every input tuple, with
/// `env` as the environment, and returns the number of inputs compared.
pub fn check_agreement(lenses: &[Lens], env: &Morphism, sig: &Signature) -> Result<usize> {
    let lens = LensChain::new(lenses.to_vec())?.compose(Association::Left);
    let parts: Vec<Optic> = lenses.iter().map(reify).collect();
    let optic = optic_compose_all(&parts)?;
    let dag = SharedDag::from_canonical(&normalize(&reify(&lens).round_trip_pair(env)?));
    let radices = lens
        .dom()
        .fwd
        .sorts()
        .iter()
        .map(|s| match sig.carrier(s) {
            Carrier::Finite(n) => Ok(n),
            Carrier::Real(_) => Err(Error::UnsupportedInterpretation(format!(
                "sort `{s}` is real-valued"
            ))),
        })
        .collect::<Result<Vec<u32>>>()?;
    let env = Env::Term(env.clone());
    let mut compared = 0;
    for t in tuples(&radices) {
        let a: Vec<Value> = t.into_iter().map(Value::Fin).collect();
        let l = lens_exec(&lens, sig, &a, &env)?;
        let o = optic_exec(&optic, sig, &a, &env)?;
        let shared = dag.evaluate(sig, &a, &mut CostReport::new(sig))?;
        let lens_out = [l.b, l.a_prime].concat();
        let optic_out = [o.b, o.a_prime].concat();
        if lens_out != optic_out || lens_out != shared {
            return Err(Error::Invalid(format!(
                "paths disagree on input {}: lens {}, optic {}, shared {}",
                serde_json::to_string(&a)?,
                serde_json::to_string(&lens_out)?,
                serde_json::to_string(&optic_out)?,
                serde_json::to_string(&shared)?,
            )));
        }
        compared += 1;
    }
    Ok(compared)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_chain_row() {
        let (rows, notes) = run_tradeoff(3..=3, Interp::Finite).unwrap();
        let r = &rows[0];
        assert_eq!(
            (r.lens_get_evals, r.lens_copies_of_a, r.optic_get_evals),
            (6, 3, 3)
        );
        assert_eq!((r.lens_residual_slots, r.optic_residual_slots), (1, 3));
        assert_eq!(r.shared_dag_get_nodes, 3);
        assert_eq!(notes[0].right_assoc_lens_get_evals, 5);
    }

    #[test]
    fn single_lens_row() {
        let (rows, _) = run_tradeoff(1..=1, Interp::Finite).unwrap();
        assert_eq!((rows[0].lens_get_evals, rows[0].optic_get_evals), (1, 1));
    }

    #[test]
    fn real_chain_matches_finite_differences() {
        for n in 1..=4 {
            let s = build_chain(n, Interp::Real).unwrap();
            let fd = finite_difference_check(&s, &s.inputs()[0]).unwrap();
            assert!(fd.passed, "{fd:?}");
        }
        let (rows, _) = run_tradeoff(1..=4, Interp::Real).unwrap();
        assert_eq!(rows[3].lens_get_evals, 10);
    }

    #[test]
    fn zero_length_chain_is_rejected() {
        assert!(build_chain(0, Interp::Finite).is_err());
    }

    #[test]
    fn csv_header_order() {
        let (rows, _) = run_tradeoff(1..=2, Interp::Finite).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "n,lens_get_evals,optic_get_evals,lens_copies_of_A,lens_residual_slots,\
             optic_residual_slots,shared_dag_get_nodes,"
        ));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn optimizer_collapses_recomputation() {
        for n in 1..=5 {
            let s = build_chain(n, Interp::Finite).unwrap();
            let (occ, nodes) = optimizer_counts(&s);
            assert_eq!(occ as usize, n * (n + 1) / 2);
            assert_eq!(nodes, n);
        }
    }
}
