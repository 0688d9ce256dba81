//! Checks shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::Arc;

use lensopt::cost::check_agreement;
use lensopt::eval::{eq_extensional, evaluate, CostReport, Value};
use lensopt::normal::{enumerate_trees, normalize, CanonicalForm, TreeKind, TreeRef};
use lensopt::sample::{random_signature, reinterpret, Sampler};
use lensopt::signature::Signature;
use lensopt::term::Morphism;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Default)]
pub struct Tally {
    pub checked: usize,
    pub failures: Vec<String>,
}

impl Tally {
    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failures.push(what());
        }
    }
}

/// `graph(f) ; π₂ = f` and `graph(f) ; π₁ = id` by normal forms and by
/// exhaustive evaluation, for every generator of `sig` and `composites`
/// sampled terms.
pub fn graph_laws(sig: &Signature, composites: usize, seed: u64) -> Tally {
    let mut terms: Vec<Morphism> = sig
        .generators()
        .iter()
        .map(|g| Morphism::generator(&g.decl))
        .collect();
    let mut s = Sampler::new(sig, seed);
    while terms.len() < sig.generators().len() + composites {
        let dom = s.object(1, 2);
        let pool = s.reachable(&dom);
        let cod = s.object_from(&pool, 1, 2);
        if let Some(f) = s.term(&dom, &cod) {
            terms.push(f);
        }
    }
    let mut t = Tally::default();
    for f in &terms {
        let (a, b) = (f.dom(), f.cod());
        let g = Morphism::graph(f);
        let second = g.then(&Morphism::proj2(a, b)).unwrap();
        let first = g.then(&Morphism::proj1(a, b)).unwrap();
        let id = Morphism::id(a);
        for (name, lhs, rhs) in [("pi2", &second, f), ("pi1", &first, &id)] {
            let symbolic = normalize(lhs) == normalize(rhs);
            let extensional = eq_extensional(lhs, rhs, sig).unwrap();
            t.record(symbolic && extensional, || {
                format!("graph({f}) ; {name}: normalize {symbolic}, extensional {extensional}")
            });
        }
    }
    t
}

/// Pairs `(f, g)` with equal normal forms must agree under every
/// interpretation. `g` is a semantics-preserving rewrite of `f` or an
/// independent sample that happens to normalize the same.
pub fn normalizer_soundness(pairs: usize, seed: u64) -> Tally {
    let mut t = Tally::default();
    let mut round = 0u64;
    while t.checked < pairs {
        let sig = random_signature(seed + round);
        let family: Vec<Signature> = std::iter::once(sig.clone())
            .chain((1..=4).map(|k| reinterpret(&sig, seed + round * 31 + k)))
            .collect();
        let mut s = Sampler::new(&sig, seed ^ round);
        round += 1;
        for _ in 0..20 {
            let dom = s.object(1, 2);
            let pool = s.reachable(&dom);
            let cod = s.object_from(&pool, 1, 2);
            let Some(f) = s.term(&dom, &cod) else {
                continue;
            };
            let mut candidates = vec![s.scramble(&f)];
            candidates.extend(s.term(&dom, &cod));
            for g in candidates {
                if normalize(&f) != normalize(&g) {
                    continue;
                }
                let agree = family.iter().all(|i| eq_extensional(&f, &g, i).unwrap());
                t.record(agree, || format!("{f}  vs  {g}"));
            }
        }
    }
    t
}

/// Outcome of the exhaustive small-signature completeness experiment.
#[derive(Debug)]
pub struct Completeness {
    pub trees: usize,
    pub interpretations: usize,
    /// Groups of distinct normal forms that agree under every interpretation
    /// with carrier 2.
    pub collision_classes: usize,
    pub colliding_trees: usize,
    pub example: Option<(String, String)>,
    /// Collision groups still unseparated after the carrier-3 family.
    pub unresolved: Vec<Vec<String>>,
    pub spot_checks: usize,
    pub spot_check_failures: usize,
}

const DESK_DEPTH: usize = 4;
const CARRIER3_SAMPLES: usize = 256;

/// Values of every tree under the interpretation `(ft, gt)` on a carrier of
/// size `k`, one entry per input element.
fn tree_values(children: &[Child], k: u32, ft: &[u32], gt: &[u32]) -> Vec<Vec<u32>> {
    let mut vals: Vec<Vec<u32>> = Vec::with_capacity(children.len());
    for c in children {
        let v = match *c {
            Child::Input => (0..k).collect(),
            Child::F(a) => vals[a].iter().map(|&x| ft[x as usize]).collect(),
            Child::G(a, b) => vals[a]
                .iter()
                .zip(&vals[b])
                .map(|(&x, &y)| gt[(x * k + y) as usize])
                .collect(),
        };
        vals.push(v);
    }
    vals
}

#[derive(Clone, Copy)]
enum Child {
    Input,
    F(usize),
    G(usize, usize),
}

/// Sort `X` of size `k` with `f : X → X` and `g : X ⊗ X → X` given by tables.
fn desk_signature(k: u32, ft: &[u32], gt: &[u32]) -> Signature {
    let mut b = Signature::builder();
    b.finite_sort("X", k).unwrap();
    b.table("f", &["X"], &["X"], ft.iter().map(|&v| vec![v]).collect())
        .unwrap();
    b.table(
        "g",
        &["X", "X"],
        &["X"],
        gt.iter().map(|&v| vec![v]).collect(),
    )
    .unwrap();
    b.build()
}

/// Enumerates every canonical tree of depth ≤ 4 over one input, groups them
/// by their semantics under all 64 carrier-2 interpretations, and tries to
/// separate each group with sampled carrier-3 interpretations.
pub fn desk_completeness() -> Completeness {
    let base = desk_signature(2, &[0, 0], &[0, 0, 0, 0]);
    let decls: Vec<_> = base.generators().iter().map(|g| g.decl.clone()).collect();
    let x = base.object(&["X"]).unwrap();
    let trees: Vec<TreeRef> = enumerate_trees(&decls, &x, 1, DESK_DEPTH).swap_remove(0);
    let index: HashMap<*const lensopt::normal::Tree, usize> = trees
        .iter()
        .enumerate()
        .map(|(i, t)| (Arc::as_ptr(t), i))
        .collect();
    let mut order: Vec<usize> = (0..trees.len()).collect();
    order.sort_by_key(|&i| trees[i].depth());
    let pos: HashMap<usize, usize> = order.iter().enumerate().map(|(p, &i)| (i, p)).collect();
    let children: Vec<Child> = order
        .iter()
        .map(|&i| match trees[i].kind() {
            TreeKind::Input(_) => Child::Input,
            TreeKind::App { gen, args, .. } => {
                let at = |j: usize| pos[&index[&Arc::as_ptr(&args[j])]];
                if gen.name() == "f" {
                    Child::F(at(0))
                } else {
                    Child::G(at(0), at(1))
                }
            }
        })
        .collect();

    let mut fingerprints: Vec<Vec<u32>> = vec![Vec::new(); trees.len()];
    let mut interps = Vec::new();
    for code in 0..64u32 {
        let ft: Vec<u32> = (0..2).map(|i| (code >> i) & 1).collect();
        let gt: Vec<u32> = (0..4).map(|i| (code >> (2 + i)) & 1).collect();
        for (p, v) in tree_values(&children, 2, &ft, &gt).into_iter().enumerate() {
            fingerprints[p].extend(v);
        }
        interps.push((ft, gt));
    }

    let mut spot_checks = 0;
    let mut spot_check_failures = 0;
    for (ft, gt) in interps.iter().step_by(9) {
        let sig = desk_signature(2, ft, gt);
        let vals = tree_values(&children, 2, ft, gt);
        for p in (0..order.len()).step_by(997) {
            let m = CanonicalForm {
                dom: x.clone(),
                cod: x.clone(),
                outputs: vec![trees[order[p]].clone()],
            }
            .to_morphism();
            for input in 0..2 {
                let out =
                    evaluate(&m, &sig, &[Value::Fin(input)], &mut CostReport::new(&sig)).unwrap();
                spot_checks += 1;
                if out != vec![Value::Fin(vals[p][input as usize])] {
                    spot_check_failures += 1;
                }
            }
        }
    }

    let mut groups: HashMap<&[u32], Vec<usize>> = HashMap::new();
    for (p, fp) in fingerprints.iter().enumerate() {
        groups.entry(fp.as_slice()).or_default().push(p);
    }
    let mut collisions: Vec<Vec<usize>> = groups.into_values().filter(|g| g.len() > 1).collect();
    collisions.sort();
    let render = |p: usize| {
        CanonicalForm {
            dom: x.clone(),
            cod: x.clone(),
            outputs: vec![trees[order[p]].clone()],
        }
        .rendered()
        .join(", ")
    };
    let example = collisions.first().map(|g| (render(g[0]), render(g[1])));

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut refined: Vec<Vec<u32>> = vec![Vec::new(); trees.len()];
    for _ in 0..CARRIER3_SAMPLES {
        let ft: Vec<u32> = (0..3).map(|_| rng.gen_range(0..3)).collect();
        let gt: Vec<u32> = (0..9).map(|_| rng.gen_range(0..3)).collect();
        let vals = tree_values(&children, 3, &ft, &gt);
        for g in &collisions {
            for &p in g {
                refined[p].extend(&vals[p]);
            }
        }
    }
    let mut unresolved = Vec::new();
    for g in &collisions {
        let mut sub: HashMap<&[u32], Vec<usize>> = HashMap::new();
        for &p in g {
            sub.entry(refined[p].as_slice()).or_default().push(p);
        }
        unresolved.extend(
            sub.into_values()
                .filter(|s| s.len() > 1)
                .map(|s| s.into_iter().map(render).collect()),
        );
    }

    Completeness {
        trees: trees.len(),
        interpretations: interps.len(),
        collision_classes: collisions.len(),
        colliding_trees: collisions.iter().map(Vec::len).sum(),
        example,
        unresolved,
        spot_checks,
        spot_check_failures,
    }
}

/// Samples `count` chains of length `1..=max_n` over random signatures and
/// compares the three execution paths on every input. Returns the number of
/// chains and inputs compared.
pub fn random_chain_agreement(
    count: usize,
    max_n: usize,
    seed: u64,
) -> Result<(usize, usize), String> {
    let mut chains = 0;
    let mut inputs = 0;
    let mut round = 0u64;
    while chains < count {
        let sig = random_signature(seed + round);
        let mut s = Sampler::new(&sig, seed + round);
        round += 1;
        let n = 1 + chains % max_n;
        let Some(lenses) = s.retry(50, |m| m.chain(n)) else {
            continue;
        };
        let last = lenses.last().unwrap().cod().clone();
        let Some(env) = s.retry(50, |m| m.term(&last.fwd, &last.bwd)) else {
            continue;
        };
        inputs +=
            check_agreement(&lenses, &env, &sig).map_err(|e| format!("chain {chains}: {e}"))?;
        chains += 1;
    }
    Ok((chains, inputs))
}
