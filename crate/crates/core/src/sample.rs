//! Seeded random generation of signatures, terms, lenses, optics and valid
//! 2-cells, used by the law suites and tests.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lens::{Lens, Pair};
use crate::normal::{CanonicalForm, Tree, TreeRef};
use crate::optic::Optic;
use crate::signature::{Carrier, Semantics, Signature};
use crate::term::{GenDecl, Morphism, Node, Object, SortId};
use crate::two_optic::{mk_two_cell, TwoCell};

/// A random finite signature: 1–3 sorts of size 2–3, an endomorphism per
/// sort, a cycle of maps `S_i → S_{i+1}` so every sort is reachable from
/// every other, and a few random multi-argument, multi-output generators.
pub fn random_signature(seed: u64) -> Signature {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_sorts = rng.gen_range(1..=3);
    let mut b = Signature::builder();
    let names: Vec<String> = (0..n_sorts).map(|i| format!("S{i}")).collect();
    for name in &names {
        b.finite_sort(name, rng.gen_range(2..=3))
            .expect("fresh sort");
    }
    let mut decls: Vec<(String, Vec<String>, Vec<String>)> = Vec::new();
    for (i, name) in names.iter().enumerate() {
        decls.push((format!("e{i}"), vec![name.clone()], vec![name.clone()]));
        if n_sorts > 1 {
            let next = names[(i + 1) % n_sorts].clone();
            decls.push((format!("b{i}"), vec![name.clone()], vec![next]));
        }
    }
    for k in 0..rng.gen_range(1..=3) {
        let arity = rng.gen_range(1..=2);
        let coarity = rng.gen_range(1..=2);
        let pick = |rng: &mut ChaCha8Rng, n| {
            (0..n)
                .map(|_| names.choose(rng).expect("non-empty").clone())
                .collect::<Vec<_>>()
        };
        let dom = pick(&mut rng, arity);
        let cod = pick(&mut rng, coarity);
        decls.push((format!("h{k}"), dom, cod));
    }
    for (name, dom, cod) in decls {
        let sig = b.signature();
        let sizes = |obj: &[String]| -> Vec<u32> {
            obj.iter()
                .map(|s| match sig.sort(s).expect("declared").carrier {
                    Carrier::Finite(n) => n,
                    Carrier::Real(_) => unreachable!("finite signature"),
                })
                .collect()
        };
        let (dom_sizes, cod_sizes) = (sizes(&dom), sizes(&cod));
        let rows: u32 = dom_sizes.iter().product();
        let table = (0..rows)
            .map(|_| cod_sizes.iter().map(|&n| rng.gen_range(0..n)).collect())
            .collect();
        b.table(&name, &dom, &cod, table)
            .expect("well-formed table");
    }
    b.build()
}

/// The same sorts and generator declarations with freshly drawn tables.
/// Terms built over `sig` evaluate under the result.
pub fn reinterpret(sig: &Signature, seed: u64) -> Signature {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = Signature::builder();
    for s in sig.sorts() {
        b.sort(s.id.name(), s.carrier).expect("copied sort");
    }
    for g in sig.generators() {
        let d = &g.decl;
        let names = |o: &Object| o.names();
        match &g.semantics {
            Semantics::Table(t) => {
                let cod: Vec<u32> = d
                    .cod
                    .sorts()
                    .iter()
                    .map(|s| match sig.carrier(s) {
                        Carrier::Finite(n) => n,
                        Carrier::Real(_) => unreachable!("table generator"),
                    })
                    .collect();
                let rows = (0..t.rows().len())
                    .map(|_| cod.iter().map(|&n| rng.gen_range(0..n)).collect())
                    .collect();
                b.table(d.name(), &names(&d.dom), &names(&d.cod), rows)
                    .expect("copied declaration");
            }
            Semantics::Real(p) => {
                b.builtin(d.name(), &names(&d.dom), &names(&d.cod), &p.to_string())
                    .expect("copied declaration");
            }
        }
    }
    b.build()
}

/// Random generation over a fixed signature.
pub struct Sampler<'a> {
    sig: &'a Signature,
    gens: Vec<Arc<GenDecl>>,
    rng: ChaCha8Rng,
    /// Maximum generator nesting of sampled trees.
    pub depth: usize,
    /// Maximum length of sampled objects.
    pub width: usize,
}

impl<'a> Sampler<'a> {
    pub fn new(sig: &'a Signature, seed: u64) -> Self {
        Sampler {
            sig,
            gens: sig.generators().iter().map(|g| g.decl.clone()).collect(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            depth: 2,
            width: 2,
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn signature(&self) -> &'a Signature {
        self.sig
    }

    /// Least generator depth at which each sort can be produced from `dom`.
    fn distances(&self, dom: &Object) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.sig.sorts().len()];
        for s in dom.sorts() {
            dist[s.index()] = Some(0);
        }
        loop {
            let mut changed = false;
            for g in &self.gens {
                let need = g
                    .dom
                    .sorts()
                    .iter()
                    .try_fold(0usize, |acc, s| dist[s.index()].map(|d: usize| acc.max(d)));
                if let Some(need) = need {
                    for s in g.cod.sorts() {
                        if dist[s.index()].is_none_or(|d| d > need + 1) {
                            dist[s.index()] = Some(need + 1);
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                return dist;
            }
        }
    }

    /// Sorts that some term out of `dom` can produce.
    pub fn reachable(&self, dom: &Object) -> Vec<SortId> {
        let dist = self.distances(dom);
        self.sig
            .sorts()
            .iter()
            .filter(|s| dist[s.id.index()].is_some())
            .map(|s| s.id.clone())
            .collect()
    }

    fn reaches(&self, dom: &Object, cod: &Object) -> bool {
        let dist = self.distances(dom);
        cod.sorts().iter().all(|s| dist[s.index()].is_some())
    }

    /// Object of length in `min..=max` over `pool`; unit when `pool` is
    /// empty.
    pub fn object_from(&mut self, pool: &[SortId], min: usize, max: usize) -> Object {
        if pool.is_empty() {
            return Object::unit();
        }
        let len = self.rng.gen_range(min..=max);
        Object::new(
            (0..len)
                .map(|_| pool.choose(&mut self.rng).expect("non-empty").clone())
                .collect(),
        )
    }

    pub fn object(&mut self, min: usize, max: usize) -> Object {
        let all: Vec<SortId> = self.sig.sorts().iter().map(|s| s.id.clone()).collect();
        self.object_from(&all, min, max)
    }

    fn tree(&mut self, dom: &Object, sort: usize, depth: usize, dist: &[Option<usize>]) -> TreeRef {
        let inputs: Vec<usize> = (0..dom.len())
            .filter(|&i| dom.sorts()[i].index() == sort)
            .collect();
        let gens: Vec<(Arc<GenDecl>, usize)> = if depth == 0 {
            Vec::new()
        } else {
            self.gens
                .iter()
                .flat_map(|g| {
                    g.cod
                        .sorts()
                        .iter()
                        .enumerate()
                        .filter(|(_, s)| s.index() == sort)
                        .map(move |(k, _)| (g.clone(), k))
                })
                .filter(|(g, _)| {
                    g.dom
                        .sorts()
                        .iter()
                        .all(|s| dist[s.index()].is_some_and(|d| d < depth))
                })
                .collect()
        };
        let take_input = !inputs.is_empty() && (gens.is_empty() || self.rng.gen_bool(0.35));
        if take_input {
            return Tree::input(*inputs.choose(&mut self.rng).expect("non-empty"));
        }
        let (g, k) = gens
            .choose(&mut self.rng)
            .expect("sort is reachable within depth")
            .clone();
        let args: Arc<[TreeRef]> = g
            .dom
            .sorts()
            .iter()
            .map(|s| self.tree(dom, s.index(), depth - 1, dist))
            .collect();
        Tree::app(g, k, args)
    }

    /// Random canonical form `dom → cod`, or `None` when some wire of `cod`
    /// cannot be produced within the depth bound.
    pub fn canonical(&mut self, dom: &Object, cod: &Object) -> Option<CanonicalForm> {
        let dist = self.distances(dom);
        if cod
            .sorts()
            .iter()
            .any(|s| dist[s.index()].is_none_or(|d| d > self.depth))
        {
            return None;
        }
        let depth = self.depth;
        let outputs = cod
            .sorts()
            .iter()
            .map(|s| self.tree(dom, s.index(), depth, &dist))
            .collect();
        Some(CanonicalForm {
            dom: dom.clone(),
            cod: cod.clone(),
            outputs,
        })
    }

    /// Random term `dom → cod` mixing sequencing, tensoring, copying,
    /// swapping and projecting around canonical leaves.
    pub fn term(&mut self, dom: &Object, cod: &Object) -> Option<Morphism> {
        self.term_budget(dom, cod, 3)
    }

    fn leaf(&mut self, dom: &Object, cod: &Object) -> Option<Morphism> {
        self.canonical(dom, cod).map(|c| c.to_morphism())
    }

    fn term_budget(&mut self, dom: &Object, cod: &Object, budget: usize) -> Option<Morphism> {
        if budget == 0 {
            return self.leaf(dom, cod);
        }
        let choice = self.rng.gen_range(0..6);
        let attempt = match choice {
            0 => {
                let mid = match self.rng.gen_range(0..3) {
                    0 => dom.clone(),
                    1 => cod.clone(),
                    _ => {
                        let extra = self.object_from(&self.reachable(dom), 1, 1);
                        dom.tensor(&extra)
                    }
                };
                if self.reaches(dom, &mid) && self.reaches(&mid, cod) {
                    let f = self.term_budget(dom, &mid, budget - 1)?;
                    let g = self.term_budget(&mid, cod, budget - 1)?;
                    f.then(&g).ok()
                } else {
                    None
                }
            }
            1 => {
                let i = self.rng.gen_range(0..=dom.len());
                let j = self.rng.gen_range(0..=cod.len());
                let (d1, d2) = (dom.slice(0, i), dom.slice(i, dom.len()));
                let (c1, c2) = (cod.slice(0, j), cod.slice(j, cod.len()));
                if self.reaches(&d1, &c1) && self.reaches(&d2, &c2) {
                    let f = self.term_budget(&d1, &c1, budget - 1)?;
                    let g = self.term_budget(&d2, &c2, budget - 1)?;
                    Some(f.tensor(&g))
                } else {
                    None
                }
            }
            2 => {
                let j = self.rng.gen_range(0..=cod.len());
                let (c1, c2) = (cod.slice(0, j), cod.slice(j, cod.len()));
                let f = self.term_budget(dom, &c1, budget - 1)?;
                let g = self.term_budget(dom, &c2, budget - 1)?;
                Morphism::copy(dom).then(&f.tensor(&g)).ok()
            }
            3 if dom.len() >= 2 => {
                let i = self.rng.gen_range(1..dom.len());
                let (d1, d2) = (dom.slice(0, i), dom.slice(i, dom.len()));
                let f = self.term_budget(&d2.tensor(&d1), cod, budget - 1)?;
                Morphism::swap(&d1, &d2).then(&f).ok()
            }
            4 => {
                let extra = self.object_from(&self.reachable(dom), 1, 1);
                let f = self.term_budget(dom, &cod.tensor(&extra), budget - 1)?;
                f.then(&Morphism::proj1(cod, &extra)).ok()
            }
            _ => None,
        };
        attempt.or_else(|| self.leaf(dom, cod))
    }

    /// Applies random equality-preserving rewrites: identity padding,
    /// copy-then-discard, double swaps, graphs, reassociation and
    /// interchange.
    pub fn scramble(&mut self, m: &Morphism) -> Morphism {
        let inner = match m.node() {
            Node::Seq(l, r) => {
                let (l, r) = (self.scramble(l), self.scramble(r));
                match (l.node(), self.rng.gen_bool(0.5)) {
                    (Node::Seq(a, b), true) => a.then(&b.then(&r).expect("typed")).expect("typed"),
                    _ => l.then(&r).expect("typed"),
                }
            }
            Node::Ten(l, r) => {
                let (l, r) = (self.scramble(l), self.scramble(r));
                if self.rng.gen_bool(0.3) {
                    l.tensor(&Morphism::id(r.dom()))
                        .then(&Morphism::id(l.cod()).tensor(&r))
                        .expect("typed")
                } else {
                    l.tensor(&r)
                }
            }
            _ => m.clone(),
        };
        if !self.rng.gen_bool(0.3) {
            return inner;
        }
        let (dom, cod) = (inner.dom().clone(), inner.cod().clone());
        let out = match self.rng.gen_range(0..7) {
            0 => Morphism::id(&dom).then(&inner),
            1 => inner.then(&Morphism::id(&cod)),
            2 => Morphism::copy(&dom).then(&inner.tensor(&Morphism::delete(&dom))),
            3 if dom.len() >= 2 => {
                let i = self.rng.gen_range(1..dom.len());
                let (a, b) = (dom.slice(0, i), dom.slice(i, dom.len()));
                Morphism::swap(&a, &b)
                    .then(&Morphism::swap(&b, &a))
                    .and_then(|s| s.then(&inner))
            }
            4 => Morphism::copy(&dom)
                .then(&inner.tensor(&inner))
                .and_then(|t| t.then(&Morphism::proj1(&cod, &cod))),
            5 => inner
                .then(&Morphism::copy(&cod))
                .and_then(|t| t.then(&Morphism::proj2(&cod, &cod))),
            _ => Morphism::graph(&inner).then(&Morphism::proj2(&dom, &cod)),
        };
        out.unwrap_or(inner)
    }

    /// Object of length 1..=width whose sorts `from` reaches.
    fn reachable_object(&mut self, from: &Object) -> Object {
        let pool = self.reachable(from);
        let w = self.width;
        self.object_from(&pool, 1, w)
    }

    /// Random lens out of `dom`: `B` is reachable from `A`, and `A'` from
    /// `A ⊗ B'`.
    pub fn lens_from(&mut self, dom_fwd: &Object) -> Option<Lens> {
        let b = self.reachable_object(dom_fwd);
        let w = self.width;
        let b_prime = self.object(1, w);
        let a_prime = self.reachable_object(&dom_fwd.tensor(&b_prime));
        self.lens_between(&Pair::new(dom_fwd.clone(), a_prime), &Pair::new(b, b_prime))
    }

    pub fn lens_between(&mut self, dom: &Pair, cod: &Pair) -> Option<Lens> {
        let get = self.term(&dom.fwd, &cod.fwd)?;
        let put = self.term(&dom.fwd.tensor(&cod.bwd), &dom.bwd)?;
        Lens::new(get, put).ok()
    }

    pub fn lens(&mut self) -> Option<Lens> {
        let w = self.width;
        let a = self.object(1, w);
        self.lens_from(&a)
    }

    /// `n` composable lenses.
    pub fn chain(&mut self, n: usize) -> Option<Vec<Lens>> {
        let w = self.width;
        let mut fwd = vec![self.object(1, w)];
        for i in 0..n {
            let next = self.reachable_object(&fwd[i]);
            fwd.push(next);
        }
        let mut bwd = vec![Object::unit(); n + 1];
        bwd[n] = self.reachable_object(&fwd[n]);
        for i in (0..n).rev() {
            bwd[i] = self.reachable_object(&fwd[i].tensor(&bwd[i + 1]));
        }
        (0..n)
            .map(|i| {
                self.lens_between(
                    &Pair::new(fwd[i].clone(), bwd[i].clone()),
                    &Pair::new(fwd[i + 1].clone(), bwd[i + 1].clone()),
                )
            })
            .collect()
    }

    /// Random optic with residual of length `0..=width`.
    pub fn optic(&mut self) -> Option<Optic> {
        let w = self.width;
        let a = self.object(1, w);
        let pool = self.reachable(&a);
        let m = self.object_from(&pool, 0, w);
        let b = self.object_from(&pool, 1, w);
        let b_prime = self.object(1, w);
        let a_prime = self.reachable_object(&m.tensor(&b_prime));
        let fw = self.term(&a, &m.tensor(&b))?;
        let bw = self.term(&m.tensor(&b_prime), &a_prime)?;
        Optic::new(m, fw, bw).ok()
    }

    /// A valid cell `r : o₁ ⇒ o₂` built as `o₁ = (M₁, fw, (r ⊗ B') ⨟ bw)` and
    /// `o₂ = (M₂, fw ⨟ (r ⊗ B), bw)`.
    pub fn cell(&mut self) -> Option<TwoCell> {
        let base = self.optic()?;
        let m1 = base.residual().clone();
        let pool = self.reachable(&m1);
        let w = self.width;
        let m2 = self.object_from(&pool, 0, w);
        let r = self.term(&m1, &m2)?;
        let (b, b_prime) = (&base.cod().fwd, &base.cod().bwd);
        let a_prime = &base.dom().bwd;
        let bw2 = self.term(&m2.tensor(b_prime), a_prime)?;
        let o1 = Optic::new(
            m1,
            base.fw().clone(),
            r.tensor(&Morphism::id(b_prime)).then(&bw2).ok()?,
        )
        .ok()?;
        let o2 = Optic::new(m2, base.fw().then(&r.tensor(&Morphism::id(b))).ok()?, bw2).ok()?;
        mk_two_cell(&o1, &o2, &r, self.sig).ok()
    }

    /// Retries `f` until it produces a value, at most `tries` times.
    pub fn retry<T>(
        &mut self,
        tries: usize,
        mut f: impl FnMut(&mut Self) -> Option<T>,
    ) -> Option<T> {
        (0..tries).find_map(|_| f(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::eq_extensional;
    use crate::normal::normalize;

    #[test]
    fn random_signatures_are_deterministic() {
        for seed in 0..5 {
            assert_eq!(
                random_signature(seed).to_json(),
                random_signature(seed).to_json()
            );
        }
    }

    #[test]
    fn reinterpretation_keeps_declarations() {
        let s = random_signature(1);
        let t = reinterpret(&s, 9);
        for (g, h) in s.generators().iter().zip(t.generators()) {
            assert_eq!(g.decl.name(), h.decl.name());
            assert_eq!(g.decl.dom.names(), h.decl.dom.names());
        }
    }

    #[test]
    fn terms_have_requested_type() {
        let s = random_signature(2);
        let mut smp = Sampler::new(&s, 3);
        for _ in 0..50 {
            let dom = smp.object(1, 2);
            let cod = smp.reachable_object(&dom);
            let t = smp.term(&dom, &cod).unwrap();
            assert_eq!((t.dom(), t.cod()), (&dom, &cod));
        }
    }

    #[test]
    fn scrambling_preserves_meaning() {
        let s = random_signature(4);
        let mut smp = Sampler::new(&s, 5);
        for _ in 0..50 {
            let dom = smp.object(1, 2);
            let cod = smp.reachable_object(&dom);
            let t = smp.term(&dom, &cod).unwrap();
            let u = smp.scramble(&t);
            assert_eq!(normalize(&t), normalize(&u));
            assert!(eq_extensional(&t, &u, &s).unwrap());
        }
    }

    #[test]
    fn cells_and_chains() {
        let s = random_signature(6);
        let mut smp = Sampler::new(&s, 7);
        for _ in 0..20 {
            assert!(smp.retry(10, |m| m.cell()).is_some());
            let chain = smp.chain(3).unwrap();
            crate::lens::LensChain::new(chain).unwrap();
        }
    }
}
