//! Translations between lenses and optics, the counit of the local
//! adjunction, the oplaxator and opunitor of the embedding of lenses into
//! optics, and the law suites that check them.

use std::collections::HashMap;

use serde::Serialize;

use crate::eval::find_counterexample;
use crate::lens::{lens_compose, lens_id, Lens, Pair};
use crate::normal::{enumerate_trees, normalize, CanonicalForm, Tree, TreeKind};
use crate::optic::{optic_compose, optic_id, Optic};
use crate::signature::Signature;
use crate::term::{Morphism, Object};
use crate::two_optic::{
    hcompose, identity_cell, mk_two_cell, pi0_classes, vcompose, CellError, HomCatSample,
    SearchStats, TwoCell,
};

/// `R(get, put) = (A, graph(get), put)`.
pub fn reify(l: &Lens) -> Optic {
    Optic::new(
        l.dom().fwd.clone(),
        Morphism::graph(l.get()),
        l.put().clone(),
    )
    .expect("graph(get) : A -> A * B")
}

/// `E(M, fw, bw) = (fw ⨟ π₂, ((fw ⨟ π₁) ⊗ B') ⨟ bw)`.
pub fn erase(o: &Optic) -> Lens {
    let m = o.residual();
    let b = &o.cod().fwd;
    let get = o
        .fw()
        .then(&Morphism::proj2(m, b))
        .expect("fw : A -> M * B");
    let keep = o
        .fw()
        .then(&Morphism::proj1(m, b))
        .expect("fw : A -> M * B");
    let put = keep
        .tensor(&Morphism::id(&o.cod().bwd))
        .then(o.bw())
        .expect("bw : M * B' -> A'");
    Lens::new(get, put).expect("erased lens is well-typed")
}

/// `fw ⨟ π₁ : R(E(o)) ⇒ o`.
pub fn counit_witness(o: &Optic) -> Morphism {
    o.fw()
        .then(&Morphism::proj1(o.residual(), &o.cod().fwd))
        .expect("fw : A -> M * B")
}

pub fn counit(o: &Optic, sig: &Signature) -> Result<TwoCell, CellError> {
    mk_two_cell(&reify(&erase(o)), o, &counit_witness(o), sig)
}

/// `graph(get₁) : R(l₁ ⨟ l₂) ⇒ R(l₁) ⨟ R(l₂)`.
pub fn oplaxator(l1: &Lens, l2: &Lens, sig: &Signature) -> Result<TwoCell, CellError> {
    let composite = lens_compose(l1, l2).map_err(|e| CellError::Compose(e.to_string()))?;
    let tgt =
        optic_compose(&reify(l1), &reify(l2)).map_err(|e| CellError::Compose(e.to_string()))?;
    mk_two_cell(&reify(&composite), &tgt, &Morphism::graph(l1.get()), sig)
}

/// `!_A : R(id) ⇒ id`; on the unit boundary this is `id₁`.
pub fn opunitor(pair: &Pair, sig: &Signature) -> Result<TwoCell, CellError> {
    let a = &pair.fwd;
    let w = if a.is_unit() {
        Morphism::id(a)
    } else {
        Morphism::delete(a)
    };
    mk_two_cell(&reify(&lens_id(pair)), &optic_id(pair), &w, sig)
}

/// Outcome of one law over a batch of samples.
#[derive(Clone, Debug, Serialize)]
pub struct LawResult {
    pub law: &'static str,
    pub checked: usize,
    pub failed: usize,
    /// Up to [`MAX_FAILURES`] failure payloads.
    pub failures: Vec<serde_json::Value>,
}

pub const MAX_FAILURES: usize = 5;

impl LawResult {
    fn new(law: &'static str) -> Self {
        LawResult {
            law,
            checked: 0,
            failed: 0,
            failures: Vec::new(),
        }
    }

    fn record(&mut self, failure: Option<serde_json::Value>) {
        self.checked += 1;
        if let Some(f) = failure {
            self.failed += 1;
            if self.failures.len() < MAX_FAILURES {
                self.failures.push(f);
            }
        }
    }

    /// At least one sample checked and none failed.
    pub fn passed(&self) -> bool {
        self.checked > 0 && self.failed == 0
    }
}

fn lens_mismatch(expected: &Lens, found: &Lens, sig: &Signature) -> Option<serde_json::Value> {
    if expected.equivalent(found) {
        return None;
    }
    let cex = |f: &Morphism, g: &Morphism| {
        if f.dom() == g.dom() && f.cod() == g.cod() {
            find_counterexample(f, g, sig).ok().flatten()
        } else {
            None
        }
    };
    Some(serde_json::json!({
        "expected": expected.to_json(),
        "found": found.to_json(),
        "counterexample": {
            "get": cex(expected.get(), found.get()),
            "put": cex(expected.put(), found.put()),
        },
    }))
}

/// Whether a deliberately corrupted counit witness is rejected.
#[derive(Clone, Debug, Default, Serialize)]
pub struct MutationResult {
    pub attempted: usize,
    pub rejected: usize,
    pub example: Option<serde_json::Value>,
}

impl MutationResult {
    pub fn detected(&self) -> bool {
        self.attempted > 0 && self.rejected == self.attempted
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AdjunctionReport {
    #[serde(rename = "RE_identity")]
    pub re_identity: LawResult,
    pub counit_validity: LawResult,
    pub counit_naturality: LawResult,
    #[serde(rename = "triangle_R")]
    pub triangle_r: LawResult,
    #[serde(rename = "triangle_E")]
    pub triangle_e: LawResult,
    pub mutation: MutationResult,
}

impl AdjunctionReport {
    pub fn laws(&self) -> [&LawResult; 5] {
        [
            &self.re_identity,
            &self.counit_validity,
            &self.counit_naturality,
            &self.triangle_r,
            &self.triangle_e,
        ]
    }

    /// Every law holds and every corrupted witness was caught.
    pub fn passed(&self) -> bool {
        self.laws().iter().all(|l| l.passed()) && self.mutation.detected()
    }
}

/// A corrupted counit for `o`: the counit followed by an endomorphism of `M`
/// that rewrites the first wire with a generator-headed tree of depth at
/// most 2, chosen so the result differs from the counit in normal form.
fn corrupted_counit(o: &Optic, sig: &Signature) -> Option<Morphism> {
    let m = o.residual();
    let first = m.sorts().first()?;
    let good = counit_witness(o);
    let good_nf = normalize(&good);
    let decls: Vec<_> = sig.generators().iter().map(|g| g.decl.clone()).collect();
    let pool = enumerate_trees(&decls, m, sig.sorts().len(), 2);
    pool[first.index()]
        .iter()
        .filter(|t| !matches!(t.kind(), TreeKind::Input(_)))
        .map(|t| {
            let outputs = std::iter::once(t.clone())
                .chain((1..m.len()).map(Tree::input))
                .collect();
            let endo = CanonicalForm {
                dom: m.clone(),
                cod: m.clone(),
                outputs,
            }
            .to_morphism();
            good.then(&endo).expect("endomorphism of M")
        })
        .find(|bad| normalize(bad) != good_nf)
}

/// Runs the local-adjunction laws over sampled lenses, optics and valid
/// cells between optics.
pub fn check_adjunction(
    lenses: &[Lens],
    optics: &[Optic],
    cells: &[TwoCell],
    sig: &Signature,
) -> AdjunctionReport {
    let mut re = LawResult::new("RE_identity");
    let mut validity = LawResult::new("counit_validity");
    let mut naturality = LawResult::new("counit_naturality");
    let mut tri_r = LawResult::new("triangle_R");
    let mut tri_e = LawResult::new("triangle_E");
    let mut mutation = MutationResult::default();

    for l in lenses {
        re.record(lens_mismatch(l, &erase(&reify(l)), sig));

        let r = reify(l);
        let failure = match counit(&r, sig) {
            Err(e) => Some(serde_json::json!({ "lens": l.to_json(), "cell": e.to_json() })),
            Ok(c) if normalize(c.witness()) != normalize(&Morphism::id(r.residual())) => {
                Some(serde_json::json!({
                    "lens": l.to_json(),
                    "witness": c.witness().to_string(),
                    "expected": "identity",
                }))
            }
            Ok(_) => None,
        };
        tri_r.record(failure);
    }

    for o in optics {
        match counit(o, sig) {
            Ok(c) => {
                validity.record(None);
                tri_e.record(lens_mismatch(&erase(c.src()), &erase(c.tgt()), sig));
            }
            Err(e) => validity.record(Some(serde_json::json!({
                "optic": o.to_json(),
                "cell": e.to_json(),
            }))),
        }

        if let Some(bad) = corrupted_counit(o, sig) {
            mutation.attempted += 1;
            match mk_two_cell(&reify(&erase(o)), o, &bad, sig) {
                Err(e) => {
                    mutation.rejected += 1;
                    if mutation.example.is_none() {
                        mutation.example = Some(serde_json::json!({
                            "optic": o.to_json(),
                            "witness": bad.to_string(),
                            "rejection": e.to_json(),
                        }));
                    }
                }
                Ok(_) => {
                    mutation.example = Some(serde_json::json!({
                        "optic": o.to_json(),
                        "witness": bad.to_string(),
                        "rejection": null,
                    }));
                }
            }
        }
    }

    for c in cells {
        let (o1, o2) = (c.src(), c.tgt());
        let lhs = counit_witness(o1)
            .then(c.witness())
            .expect("residuals agree");
        let rhs = counit_witness(o2);
        let symbolic = normalize(&lhs) == normalize(&rhs);
        let cex = find_counterexample(&lhs, &rhs, sig).ok().flatten();
        naturality.record(if symbolic && cex.is_none() {
            None
        } else {
            Some(serde_json::json!({
                "cell": c.to_json(),
                "normalizer_equal": symbolic,
                "counterexample": cex,
            }))
        });
        tri_e.record(lens_mismatch(&erase(o1), &erase(o2), sig));
    }

    AdjunctionReport {
        re_identity: re,
        counit_validity: validity,
        counit_naturality: naturality,
        triangle_r: tri_r,
        triangle_e: tri_e,
        mutation,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CoherenceReport {
    pub oplaxator_validity: LawResult,
    /// Oplaxator cells whose squares were also confirmed by exhaustive
    /// evaluation.
    pub oplaxator_exhaustive: usize,
    pub opunitor_validity: LawResult,
    pub lax_associativity: LawResult,
    pub lax_left_unity: LawResult,
    pub lax_right_unity: LawResult,
    /// `{R(l₁ ⨟ l₂), R(l₁) ⨟ R(l₂)}` with the oplaxator forms one class.
    pub pi0_collapse: LawResult,
}

impl Default for CoherenceReport {
    fn default() -> Self {
        CoherenceReport {
            oplaxator_validity: LawResult::new("oplaxator_validity"),
            oplaxator_exhaustive: 0,
            opunitor_validity: LawResult::new("opunitor_validity"),
            lax_associativity: LawResult::new("lax_associativity"),
            lax_left_unity: LawResult::new("lax_left_unity"),
            lax_right_unity: LawResult::new("lax_right_unity"),
            pi0_collapse: LawResult::new("pi0_collapse"),
        }
    }
}

/// Componentwise equality in the free cartesian category.
fn same_optic(a: &Optic, b: &Optic) -> bool {
    a.dom() == b.dom()
        && a.cod() == b.cod()
        && a.residual() == b.residual()
        && normalize(a.fw()) == normalize(b.fw())
        && normalize(a.bw()) == normalize(b.bw())
}

type CellResult = Result<TwoCell, CellError>;

fn compare_paths(p: CellResult, q: CellResult, what: &str) -> Option<serde_json::Value> {
    match (p, q) {
        (Ok(p), Ok(q)) => {
            let sources = same_optic(p.src(), q.src());
            let targets = p.tgt().strictly_equal(q.tgt());
            let witnesses = normalize(p.witness()) == normalize(q.witness());
            if sources && targets && witnesses {
                None
            } else {
                Some(serde_json::json!({
                    "law": what,
                    "sources_equal": sources,
                    "targets_strictly_equal": targets,
                    "witnesses_equal": witnesses,
                    "left": p.witness().to_string(),
                    "right": q.witness().to_string(),
                }))
            }
        }
        (p, q) => Some(serde_json::json!({
            "law": what,
            "left": p.err().map(|e| e.to_json()),
            "right": q.err().map(|e| e.to_json()),
        })),
    }
}

impl CoherenceReport {
    pub fn laws(&self) -> [&LawResult; 6] {
        [
            &self.oplaxator_validity,
            &self.opunitor_validity,
            &self.lax_associativity,
            &self.lax_left_unity,
            &self.lax_right_unity,
            &self.pi0_collapse,
        ]
    }

    pub fn passed(&self) -> bool {
        self.laws().iter().all(|l| l.passed())
    }

    /// Oplaxator and opunitors of a composable pair, and the collapse of the
    /// two composites under π₀.
    pub fn check_pair(&mut self, l1: &Lens, l2: &Lens, sig: &Signature) {
        match oplaxator(l1, l2, sig) {
            Ok(c) => {
                self.oplaxator_validity.record(None);
                self.oplaxator_exhaustive += usize::from(c.extensionally_checked());
                let mut h = HomCatSample::new();
                let collapse = h
                    .add_optic(c.src().clone(), sig)
                    .and_then(|s| Ok((s, h.add_optic(c.tgt().clone(), sig)?)))
                    .and_then(|(s, t)| h.add_cell(s, t, c.witness(), sig));
                self.pi0_collapse.record(match collapse {
                    Ok(()) if pi0_classes(&h).len() == 1 => None,
                    Ok(()) => Some(serde_json::json!({ "classes": pi0_classes(&h) })),
                    Err(e) => Some(e.to_json()),
                });
            }
            Err(e) => self.oplaxator_validity.record(Some(serde_json::json!({
                "l1": l1.to_json(),
                "l2": l2.to_json(),
                "cell": e.to_json(),
            }))),
        }
        for pair in [l1.dom(), l2.dom(), l2.cod()] {
            self.opunitor_validity
                .record(opunitor(pair, sig).err().map(|e| e.to_json()));
        }
    }

    /// Lax associativity for a composable triple and lax unity for each
    /// member.
    pub fn check_triple(&mut self, l1: &Lens, l2: &Lens, l3: &Lens, sig: &Signature) {
        let assoc = (|| -> Result<_, CellError> {
            let c = |x: &Lens, y: &Lens| {
                lens_compose(x, y).map_err(|e| CellError::Compose(e.to_string()))
            };
            let l12 = c(l1, l2)?;
            let l23 = c(l2, l3)?;
            let (r1, r3) = (reify(l1), reify(l3));
            let p = vcompose(
                &oplaxator(&l12, l3, sig)?,
                &hcompose(&oplaxator(l1, l2, sig)?, &identity_cell(&r3, sig)?, sig)?,
                sig,
            );
            let q = vcompose(
                &oplaxator(l1, &l23, sig)?,
                &hcompose(&identity_cell(&r1, sig)?, &oplaxator(l2, l3, sig)?, sig)?,
                sig,
            );
            Ok(compare_paths(p, q, "lax_associativity"))
        })();
        self.lax_associativity
            .record(assoc.unwrap_or_else(|e| Some(e.to_json())));

        for l in [l1, l2, l3] {
            self.lax_left_unity.record(unity(l, true, sig));
            self.lax_right_unity.record(unity(l, false, sig));
        }
    }
}

/// `R(id ⨟ l) ⇒ R(id) ⨟ R(l) ⇒ id ⨟ R(l) = R(l)` composes to the identity
/// cell, and symmetrically on the right.
fn unity(l: &Lens, left: bool, sig: &Signature) -> Option<serde_json::Value> {
    let run = || -> Result<Option<serde_json::Value>, CellError> {
        let r = reify(l);
        let path = if left {
            let id = lens_id(l.dom());
            let lax = oplaxator(&id, l, sig)?;
            let unit = hcompose(&opunitor(l.dom(), sig)?, &identity_cell(&r, sig)?, sig)?;
            vcompose(&lax, &unit, sig)?
        } else {
            let id = lens_id(l.cod());
            let lax = oplaxator(l, &id, sig)?;
            let unit = hcompose(&identity_cell(&r, sig)?, &opunitor(l.cod(), sig)?, sig)?;
            vcompose(&lax, &unit, sig)?
        };
        let ok = same_optic(path.src(), &r)
            && path.tgt().strictly_equal(&r)
            && normalize(path.witness()) == normalize(&Morphism::id(r.residual()));
        Ok((!ok).then(|| {
            serde_json::json!({
                "lens": l.to_json(),
                "side": if left { "left" } else { "right" },
                "witness": path.witness().to_string(),
            })
        }))
    };
    run().unwrap_or_else(|e| Some(e.to_json()))
}

/// Coherence of the embedding for one composable triple.
pub fn check_oplax_coherence(l1: &Lens, l2: &Lens, l3: &Lens, sig: &Signature) -> CoherenceReport {
    let mut report = CoherenceReport::default();
    report.check_pair(l1, l2, sig);
    report.check_pair(l2, l3, sig);
    report.check_triple(l1, l2, l3, sig);
    report
}

/// Result of recovering 1-optics as connected components on an
/// exhaustively enumerated family.
#[derive(Clone, Debug, Serialize)]
pub struct Pi0Report {
    pub optics: usize,
    pub classes: usize,
    pub erase_fibers: usize,
    pub partitions_equal: bool,
    pub search: SearchStats,
    /// The two composites of a lens pair land in one class.
    pub composites_joined: bool,
}

/// One sort `X` of size 2 with `n : X → X` (negation) and `m : X ⊗ X → X`
/// (conjunction).
pub fn pi0_signature() -> Signature {
    let mut b = Signature::builder();
    b.finite_sort("X", 2).expect("fresh sort");
    b.table_fn("n", &["X"], &["X"], |t| vec![1 - t[0]])
        .expect("fresh generator");
    b.table_fn("m", &["X", "X"], &["X"], |t| vec![t[0] & t[1]])
        .expect("fresh generator");
    b.build()
}

fn tuples_of<T: Clone>(pool: &[T], k: usize) -> Vec<Vec<T>> {
    (0..k).fold(vec![Vec::new()], |acc, _| {
        acc.iter()
            .flat_map(|p| {
                pool.iter().map(move |t| {
                    let mut v = p.clone();
                    v.push(t.clone());
                    v
                })
            })
            .collect()
    })
}

/// Optics `(X, X) → (X, X)` over [`pi0_signature`] with residual of length
/// at most 2 and components of depth at most 1, together with `R(E(o))` for
/// each, deduplicated up to canonical form.
pub fn pi0_family(sig: &Signature) -> Vec<Optic> {
    let gens: Vec<_> = sig.generators().iter().map(|g| g.decl.clone()).collect();
    let x = sig.object(&["X"]).expect("sort X");
    let mut seen = HashMap::new();
    let mut out = Vec::new();
    let mut push = |o: Optic, out: &mut Vec<Optic>| {
        let key = (o.residual().clone(), normalize(o.fw()), normalize(o.bw()));
        if seen.insert(key, ()).is_none() {
            out.push(o);
        }
    };
    let fw_pool = &enumerate_trees(&gens, &x, 1, 1)[0];
    for k in 0..=2 {
        let m = Object::tensor_all(std::iter::repeat_n(&x, k));
        let fw_cod = m.tensor(&x);
        let bw_pool = &enumerate_trees(&gens, &fw_cod, 1, 1)[0];
        for fw in tuples_of(fw_pool, k + 1) {
            let fw = CanonicalForm {
                dom: x.clone(),
                cod: fw_cod.clone(),
                outputs: fw,
            }
            .to_morphism();
            for bw in bw_pool {
                let bw = CanonicalForm {
                    dom: fw_cod.clone(),
                    cod: x.clone(),
                    outputs: vec![bw.clone()],
                }
                .to_morphism();
                let o = Optic::new(m.clone(), fw.clone(), bw).expect("typed by construction");
                push(o, &mut out);
            }
        }
    }
    let closure: Vec<Optic> = out.iter().map(|o| reify(&erase(o))).collect();
    for o in closure {
        push(o, &mut out);
    }
    out
}

/// Sorted partition of `0..items.len()` by key.
fn partition_by<K: std::hash::Hash + Eq>(keys: impl IntoIterator<Item = K>) -> Vec<Vec<usize>> {
    let mut index: HashMap<K, usize> = HashMap::new();
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for (i, k) in keys.into_iter().enumerate() {
        let slot = *index.entry(k).or_insert_with(|| {
            classes.push(Vec::new());
            classes.len() - 1
        });
        classes[slot].push(i);
    }
    classes
}

/// Searches witnesses up to `depth` across [`pi0_family`] and compares the
/// resulting components with the fibers of erasure.
pub fn pi0_recovery(depth: usize) -> Result<Pi0Report, CellError> {
    let sig = pi0_signature();
    let family = pi0_family(&sig);
    let mut sample = HomCatSample::new();
    for o in &family {
        sample.add_optic(o.clone(), &sig)?;
    }
    let search = sample.search_cells(depth, &sig)?;
    let classes = pi0_classes(&sample);
    let fibers = partition_by(family.iter().map(|o| {
        let l = erase(o);
        (normalize(l.get()), normalize(l.put()))
    }));

    let lens = Lens::new(
        sig.gen("n").expect("generator n"),
        sig.gen("m").expect("generator m"),
    )
    .expect("n, m form a lens");
    let cell = oplaxator(&lens, &lens, &sig)?;
    let mut pair = HomCatSample::new();
    let s = pair.add_optic(cell.src().clone(), &sig)?;
    let t = pair.add_optic(cell.tgt().clone(), &sig)?;
    pair.add_cell(s, t, cell.witness(), &sig)?;

    Ok(Pi0Report {
        optics: family.len(),
        classes: classes.len(),
        erase_fibers: fibers.len(),
        partitions_equal: classes == fibers,
        search,
        composites_joined: pi0_classes(&pair).len() == 1
            && cell.src().residual() != cell.tgt().residual(),
    })
}
