//! Canonical forms for the free cartesian category.
//!
//! Every morphism `A → B` of the free cartesian category is a tuple of terms,
//! one per wire of `B`, whose leaves are wires of `A`. Normalizing duplicates
//! shared work, prunes deleted wires and resolves swaps and projections into
//! leaf indices, so two terms are equal iff their canonical forms are
//! structurally identical.

use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::Serialize;

use crate::term::{GenDecl, Morphism, Node, Object};

pub type TreeRef = Arc<Tree>;

#[derive(Debug)]
pub enum TreeKind {
    Input(usize),
    /// Output `output` of `gen` applied to `args`.
    App {
        gen: Arc<GenDecl>,
        output: usize,
        args: Arc<[TreeRef]>,
    },
}

/// A canonical term. Hash and depth are cached at construction.
#[derive(Debug)]
pub struct Tree {
    kind: TreeKind,
    hash: u64,
    depth: usize,
}

fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

impl Tree {
    pub fn input(i: usize) -> TreeRef {
        Arc::new(Tree {
            kind: TreeKind::Input(i),
            hash: mix(i as u64),
            depth: 0,
        })
    }

    pub fn app(gen: Arc<GenDecl>, output: usize, args: Arc<[TreeRef]>) -> TreeRef {
        let mut h = mix(0xa5a5 ^ ((gen.index() as u64) << 16) ^ output as u64);
        for a in args.iter() {
            h = mix(h ^ a.hash);
        }
        let depth = 1 + args.iter().map(|a| a.depth).max().unwrap_or(0);
        Arc::new(Tree {
            kind: TreeKind::App { gen, output, args },
            hash: h,
            depth,
        })
    }

    pub fn kind(&self) -> &TreeKind {
        &self.kind
    }

    /// Generator nesting depth; inputs have depth 0.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Replaces input `i` by `subst[i]`, preserving sharing.
    pub fn substitute(self: &TreeRef, subst: &[TreeRef]) -> TreeRef {
        let mut memo = HashMap::new();
        substitute_memo(self, subst, &mut memo)
    }
}

fn substitute_memo(
    t: &TreeRef,
    subst: &[TreeRef],
    memo: &mut HashMap<*const Tree, TreeRef>,
) -> TreeRef {
    if let Some(done) = memo.get(&Arc::as_ptr(t)) {
        return done.clone();
    }
    let out = match &t.kind {
        TreeKind::Input(i) => subst[*i].clone(),
        TreeKind::App { gen, output, args } => {
            let args: Arc<[TreeRef]> = args
                .iter()
                .map(|a| substitute_memo(a, subst, memo))
                .collect();
            Tree::app(gen.clone(), *output, args)
        }
    };
    memo.insert(Arc::as_ptr(t), out.clone());
    out
}

impl PartialEq for Tree {
    fn eq(&self, other: &Self) -> bool {
        if std::ptr::eq(self, other) {
            return true;
        }
        if self.hash != other.hash || self.depth != other.depth {
            return false;
        }
        match (&self.kind, &other.kind) {
            (TreeKind::Input(a), TreeKind::Input(b)) => a == b,
            (
                TreeKind::App {
                    gen: g1,
                    output: o1,
                    args: a1,
                },
                TreeKind::App {
                    gen: g2,
                    output: o2,
                    args: a2,
                },
            ) => o1 == o2 && g1.name() == g2.name() && (Arc::ptr_eq(a1, a2) || a1 == a2),
            _ => false,
        }
    }
}

impl Eq for Tree {}

impl Hash for Tree {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.hash);
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            TreeKind::Input(i) => write!(f, "x{i}"),
            TreeKind::App { gen, output, args } => {
                f.write_str(gen.name())?;
                if gen.cod.len() > 1 {
                    write!(f, ".{output}")?;
                }
                f.write_str("(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Tuple-of-trees normal form of a morphism.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CanonicalForm {
    pub dom: Object,
    pub cod: Object,
    pub outputs: Vec<TreeRef>,
}

/// Canonical form of `m`.
pub fn normalize(m: &Morphism) -> CanonicalForm {
    let inputs: Vec<TreeRef> = (0..m.dom().len()).map(Tree::input).collect();
    CanonicalForm {
        dom: m.dom().clone(),
        cod: m.cod().clone(),
        outputs: symbolic(m, &inputs),
    }
}

fn symbolic(m: &Morphism, inputs: &[TreeRef]) -> Vec<TreeRef> {
    match m.node() {
        Node::Gen(decl) => {
            let args: Arc<[TreeRef]> = inputs.iter().cloned().collect();
            (0..decl.cod.len())
                .map(|k| Tree::app(decl.clone(), k, args.clone()))
                .collect()
        }
        Node::Id(_) => inputs.to_vec(),
        Node::Seq(l, r) => {
            let mid = symbolic(l, inputs);
            symbolic(r, &mid)
        }
        Node::Ten(l, r) => {
            let (a, b) = inputs.split_at(l.dom().len());
            let mut out = symbolic(l, a);
            out.extend(symbolic(r, b));
            out
        }
        Node::Copy(_) => {
            let mut out = inputs.to_vec();
            out.extend_from_slice(inputs);
            out
        }
        Node::Delete(_) => Vec::new(),
        Node::Swap(a, _) => {
            let (x, y) = inputs.split_at(a.len());
            let mut out = y.to_vec();
            out.extend_from_slice(x);
            out
        }
        Node::Proj1(a, _) => inputs[..a.len()].to_vec(),
        Node::Proj2(a, _) => inputs[a.len()..].to_vec(),
    }
}

/// `x ↦ x[start..end]` as a term built from projections.
fn select(obj: &Object, start: usize, end: usize) -> Morphism {
    let mut m = Morphism::id(obj);
    if start > 0 {
        let pre = obj.slice(0, start);
        let rest = obj.slice(start, obj.len());
        m = m.seq(&Morphism::proj2(&pre, &rest));
    }
    if end < obj.len() {
        let mid = obj.slice(start, end);
        let post = obj.slice(end, obj.len());
        m = m.seq(&Morphism::proj1(&mid, &post));
    }
    m
}

/// `A → A^k` by repeated copying.
fn fan_out(obj: &Object, k: usize) -> Morphism {
    match k {
        0 => Morphism::delete(obj),
        1 => Morphism::id(obj),
        _ => Morphism::copy(obj).seq(&Morphism::id(obj).tensor(&fan_out(obj, k - 1))),
    }
}

fn tuple_term(dom: &Object, trees: &[TreeRef]) -> Morphism {
    let parts: Vec<Morphism> = trees.iter().map(|t| tree_term(dom, t)).collect();
    if parts.is_empty() {
        return Morphism::delete(dom);
    }
    fan_out(dom, parts.len()).seq(&Morphism::tensor_all(&parts))
}

fn tree_term(dom: &Object, t: &TreeRef) -> Morphism {
    match &t.kind {
        TreeKind::Input(i) => select(dom, *i, i + 1),
        TreeKind::App { gen, output, args } => tuple_term(dom, args)
            .seq(&Morphism::generator(gen))
            .seq(&select(&gen.cod, *output, output + 1)),
    }
}

impl CanonicalForm {
    /// A term whose canonical form is `self`.
    pub fn to_morphism(&self) -> Morphism {
        tuple_term(&self.dom, &self.outputs)
    }

    /// Canonical form of `self ⨟ next`.
    pub fn then(&self, next: &CanonicalForm) -> CanonicalForm {
        let mut memo = HashMap::new();
        CanonicalForm {
            dom: self.dom.clone(),
            cod: next.cod.clone(),
            outputs: next
                .outputs
                .iter()
                .map(|t| substitute_memo(t, &self.outputs, &mut memo))
                .collect(),
        }
    }

    /// Occurrences of generators satisfying `pred`, counted as in the fully
    /// duplicated tuple of trees.
    pub fn count_generators(&self, pred: &dyn Fn(&GenDecl) -> bool) -> u64 {
        let mut memo: HashMap<*const Tree, u64> = HashMap::new();
        fn go(
            t: &TreeRef,
            pred: &dyn Fn(&GenDecl) -> bool,
            memo: &mut HashMap<*const Tree, u64>,
        ) -> u64 {
            if let Some(&n) = memo.get(&Arc::as_ptr(t)) {
                return n;
            }
            let n = match &t.kind {
                TreeKind::Input(_) => 0,
                TreeKind::App { gen, args, .. } => {
                    u64::from(pred(gen)) + args.iter().map(|a| go(a, pred, memo)).sum::<u64>()
                }
            };
            memo.insert(Arc::as_ptr(t), n);
            n
        }
        self.outputs.iter().map(|t| go(t, pred, &mut memo)).sum()
    }

    pub fn depth(&self) -> usize {
        self.outputs.iter().map(|t| t.depth()).max().unwrap_or(0)
    }

    pub fn rendered(&self) -> Vec<String> {
        self.outputs.iter().map(|t| t.to_string()).collect()
    }
}

impl fmt::Display for CanonicalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {} : [", self.dom, self.cod)?;
        for (i, t) in self.outputs.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str("]")
    }
}

impl Serialize for CanonicalForm {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("CanonicalForm", 3)?;
        st.serialize_field("dom", &self.dom)?;
        st.serialize_field("cod", &self.cod)?;
        st.serialize_field("outputs", &self.rendered())?;
        st.end()
    }
}

/// Sort index of the wire a tree computes, given the domain it is over.
pub fn tree_sort(t: &Tree, dom: &Object) -> usize {
    match &t.kind {
        TreeKind::Input(i) => dom.sorts()[*i].index(),
        TreeKind::App { gen, output, .. } => gen.cod.sorts()[*output].index(),
    }
}

/// Every tree over `dom` with depth at most `depth`, built from `gens`.
/// Grouped by sort index; each group is duplicate-free and in a
/// deterministic order.
pub fn enumerate_trees(
    gens: &[Arc<GenDecl>],
    dom: &Object,
    n_sorts: usize,
    depth: usize,
) -> Vec<Vec<TreeRef>> {
    let mut by_sort: Vec<Vec<TreeRef>> = vec![Vec::new(); n_sorts];
    for (i, s) in dom.sorts().iter().enumerate() {
        by_sort[s.index()].push(Tree::input(i));
    }
    for _ in 0..depth {
        let mut next = by_sort.clone();
        let mut seen: std::collections::HashSet<TreeRef> =
            by_sort.iter().flatten().cloned().collect();
        for g in gens {
            let pools: Vec<&Vec<TreeRef>> =
                g.dom.sorts().iter().map(|s| &by_sort[s.index()]).collect();
            if pools.iter().any(|p| p.is_empty()) {
                continue;
            }
            let mut idx = vec![0usize; pools.len()];
            loop {
                let args: Arc<[TreeRef]> =
                    idx.iter().zip(&pools).map(|(&i, p)| p[i].clone()).collect();
                for (k, s) in g.cod.sorts().iter().enumerate() {
                    let t = Tree::app(g.clone(), k, args.clone());
                    if seen.insert(t.clone()) {
                        next[s.index()].push(t);
                    }
                }
                let mut pos = pools.len();
                let exhausted = loop {
                    if pos == 0 {
                        break true;
                    }
                    pos -= 1;
                    idx[pos] += 1;
                    if idx[pos] < pools[pos].len() {
                        break false;
                    }
                    idx[pos] = 0;
                };
                if exhausted {
                    break;
                }
            }
        }
        by_sort = next;
    }
    by_sort
}

/// Equality in the free cartesian category.
pub fn equal(f: &Morphism, g: &Morphism) -> bool {
    f.dom() == g.dom() && f.cod() == g.cod() && normalize(f) == normalize(g)
}
