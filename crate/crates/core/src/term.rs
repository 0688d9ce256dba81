//! Terms of the free cartesian category over a signature.
//!
//! Objects are lists of sorts, so the monoidal product is list concatenation
//! and associativity/unitality hold on the nose. Symmetry is not strict: it is
//! the explicit [`Node::Swap`] term.

use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Handle to a sort declared in a [`crate::Signature`].
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SortId {
    pub(crate) idx: u32,
    pub(crate) name: Arc<str>,
}

impl SortId {
    pub fn index(&self) -> usize {
        self.idx as usize
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for SortId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl fmt::Display for SortId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// An object of the base category: an ordered list of sorts. The empty list is
/// the monoidal unit.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Object(Arc<[SortId]>);

#[allow(clippy::len_without_is_empty)]
impl Object {
    pub fn unit() -> Self {
        Object(Arc::from(Vec::new()))
    }

    pub fn new(sorts: Vec<SortId>) -> Self {
        Object(Arc::from(sorts))
    }

    pub fn single(sort: SortId) -> Self {
        Object::new(vec![sort])
    }

    pub fn sorts(&self) -> &[SortId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_unit(&self) -> bool {
        self.0.is_empty()
    }

    pub fn tensor(&self, other: &Object) -> Object {
        if self.is_unit() {
            return other.clone();
        }
        if other.is_unit() {
            return self.clone();
        }
        let mut v = self.0.to_vec();
        v.extend_from_slice(&other.0);
        Object::new(v)
    }

    pub fn tensor_all<'a>(parts: impl IntoIterator<Item = &'a Object>) -> Object {
        let v: Vec<SortId> = parts
            .into_iter()
            .flat_map(|o| o.0.iter().cloned())
            .collect();
        Object::new(v)
    }

    /// Sub-object `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Object {
        Object::new(self.0[start..end].to_vec())
    }

    pub fn has_prefix(&self, prefix: &Object) -> bool {
        self.0.starts_with(&prefix.0)
    }

    pub fn names(&self) -> Vec<String> {
        self.0.iter().map(|s| s.name.to_string()).collect()
    }
}

impl fmt::Debug for Object {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Object {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            f.write_str(&s.name)?;
        }
        Ok(())
    }
}

impl Serialize for Object {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.0.iter().map(|s| &*s.name))
    }
}

/// The typing data of a generator, without its semantics.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GenDecl {
    pub(crate) idx: usize,
    pub(crate) name: Arc<str>,
    pub dom: Object,
    pub cod: Object,
}

impl GenDecl {
    pub fn index(&self) -> usize {
        self.idx
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for GenDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} -> {}", self.name, self.dom, self.cod)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Node {
    Gen(Arc<GenDecl>),
    Id(Object),
    Seq(Morphism, Morphism),
    Ten(Morphism, Morphism),
    Copy(Object),
    Delete(Object),
    Swap(Object, Object),
    Proj1(Object, Object),
    Proj2(Object, Object),
}

/// A well-typed term. Construction checks typing, so every `Morphism` value
/// is well-typed.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Morphism {
    node: Arc<Node>,
    dom: Object,
    cod: Object,
}

impl Morphism {
    fn mk(node: Node, dom: Object, cod: Object) -> Self {
        Morphism {
            node: Arc::new(node),
            dom,
            cod,
        }
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    pub fn dom(&self) -> &Object {
        &self.dom
    }

    pub fn cod(&self) -> &Object {
        &self.cod
    }

    pub fn generator(decl: &Arc<GenDecl>) -> Self {
        Self::mk(Node::Gen(decl.clone()), decl.dom.clone(), decl.cod.clone())
    }

    pub fn id(a: &Object) -> Self {
        Self::mk(Node::Id(a.clone()), a.clone(), a.clone())
    }

    pub fn copy(a: &Object) -> Self {
        Self::mk(Node::Copy(a.clone()), a.clone(), a.tensor(a))
    }

    pub fn delete(a: &Object) -> Self {
        Self::mk(Node::Delete(a.clone()), a.clone(), Object::unit())
    }

    pub fn swap(a: &Object, b: &Object) -> Self {
        Self::mk(Node::Swap(a.clone(), b.clone()), a.tensor(b), b.tensor(a))
    }

    /// `π₁ : A ⊗ B → A`
    pub fn proj1(a: &Object, b: &Object) -> Self {
        Self::mk(Node::Proj1(a.clone(), b.clone()), a.tensor(b), a.clone())
    }

    /// `π₂ : A ⊗ B → B`
    pub fn proj2(a: &Object, b: &Object) -> Self {
        Self::mk(Node::Proj2(a.clone(), b.clone()), a.tensor(b), b.clone())
    }

    /// Diagrammatic composition `self ⨟ next`.
    pub fn then(&self, next: &Morphism) -> Result<Morphism> {
        if self.cod != next.dom {
            return Err(Error::TypeMismatch {
                context: "composition",
                expected: self.cod.clone(),
                found: next.dom.clone(),
            });
        }
        Ok(Self::mk(
            Node::Seq(self.clone(), next.clone()),
            self.dom.clone(),
            next.cod.clone(),
        ))
    }

    pub fn compose(f: &Morphism, g: &Morphism) -> Result<Morphism> {
        f.then(g)
    }

    /// Composition of terms that are well-typed by construction.
    pub(crate) fn seq(&self, next: &Morphism) -> Morphism {
        self.then(next)
            .expect("composite is well-typed by construction")
    }

    pub fn tensor(&self, other: &Morphism) -> Morphism {
        Self::mk(
            Node::Ten(self.clone(), other.clone()),
            self.dom.tensor(&other.dom),
            self.cod.tensor(&other.cod),
        )
    }

    /// Right-nested tensor of a non-empty list; the unit identity for an
    /// empty one.
    pub fn tensor_all(parts: &[Morphism]) -> Morphism {
        match parts.split_last() {
            None => Morphism::id(&Object::unit()),
            Some((last, rest)) => rest
                .iter()
                .rev()
                .fold(last.clone(), |acc, m| m.tensor(&acc)),
        }
    }

    /// `graph(f) = Δ_A ⨟ (A × f) : A → A ⊗ B`
    pub fn graph(f: &Morphism) -> Morphism {
        let a = f.dom();
        Morphism::copy(a).seq(&Morphism::id(a).tensor(f))
    }

    pub fn is_atom(&self) -> bool {
        !matches!(*self.node, Node::Seq(..) | Node::Ten(..))
    }

    /// Syntactic count of generator nodes satisfying `pred`.
    pub fn count_generators(&self, pred: &dyn Fn(&GenDecl) -> bool) -> usize {
        match &*self.node {
            Node::Gen(d) => usize::from(pred(d)),
            Node::Seq(l, r) | Node::Ten(l, r) => {
                l.count_generators(pred) + r.count_generators(pred)
            }
            _ => 0,
        }
    }

    /// Number of term nodes.
    pub fn size(&self) -> usize {
        match &*self.node {
            Node::Seq(l, r) | Node::Ten(l, r) => 1 + l.size() + r.size(),
            _ => 1,
        }
    }

    /// Collects every generator mentioned by the term.
    pub fn generators(&self, out: &mut Vec<Arc<GenDecl>>) {
        match &*self.node {
            Node::Gen(d) => {
                if !out.contains(d) {
                    out.push(d.clone());
                }
            }
            Node::Seq(l, r) | Node::Ten(l, r) => {
                l.generators(out);
                r.generators(out);
            }
            _ => {}
        }
    }

    /// Whisker-normal form: a list of full-width layers, each one atom padded
    /// by identity wires. Equal flattenings mean equal morphisms in any
    /// strict monoidal category (no cartesian or symmetric reasoning).
    pub fn flatten(&self) -> Vec<Layer> {
        let mut out = Vec::new();
        self.flatten_into(&mut out);
        out
    }

    fn flatten_into(&self, out: &mut Vec<Layer>) {
        match &*self.node {
            Node::Seq(l, r) => {
                l.flatten_into(out);
                r.flatten_into(out);
            }
            Node::Ten(l, r) => {
                let mut left = Vec::new();
                l.flatten_into(&mut left);
                for layer in left {
                    out.push(layer.pad(&Object::unit(), r.dom()));
                }
                let mut right = Vec::new();
                r.flatten_into(&mut right);
                for layer in right {
                    out.push(layer.pad(l.cod(), &Object::unit()));
                }
            }
            Node::Id(_) => {}
            Node::Copy(a) | Node::Delete(a) if a.is_unit() => {}
            Node::Swap(a, b) if a.is_unit() || b.is_unit() => {}
            Node::Proj1(_, b) if b.is_unit() => {}
            Node::Proj2(a, _) if a.is_unit() => {}
            _ => out.push(Layer {
                before: Object::unit(),
                atom: self.clone(),
                after: Object::unit(),
            }),
        }
    }
}

/// One layer of [`Morphism::flatten`]: `before ⊗ atom ⊗ after`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Layer {
    pub before: Object,
    pub atom: Morphism,
    pub after: Object,
}

impl Layer {
    fn pad(self, before: &Object, after: &Object) -> Layer {
        Layer {
            before: before.tensor(&self.before),
            atom: self.atom,
            after: self.after.tensor(after),
        }
    }
}

impl fmt::Debug for Morphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} : {} -> {}", self, self.dom, self.cod)
    }
}

const PREC_SEQ: u8 = 1;
const PREC_TEN: u8 = 2;
const PREC_ATOM: u8 = 3;

impl Morphism {
    fn write_prec(&self, f: &mut fmt::Formatter<'_>, ctx: u8) -> fmt::Result {
        match &*self.node {
            Node::Seq(l, r) => {
                let paren = ctx > PREC_SEQ;
                if paren {
                    f.write_str("(")?;
                }
                l.write_prec(f, PREC_SEQ)?;
                f.write_str(" ; ")?;
                r.write_prec(f, PREC_TEN)?;
                if paren {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Node::Ten(l, r) => {
                let paren = ctx > PREC_TEN;
                if paren {
                    f.write_str("(")?;
                }
                l.write_prec(f, PREC_TEN)?;
                f.write_str(" * ")?;
                r.write_prec(f, PREC_ATOM)?;
                if paren {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Node::Gen(d) => f.write_str(&d.name),
            Node::Id(a) => write!(f, "id[{a}]"),
            Node::Copy(a) => write!(f, "copy[{a}]"),
            Node::Delete(a) => write!(f, "del[{a}]"),
            Node::Swap(a, b) => write!(f, "swap[{a},{b}]"),
            Node::Proj1(a, b) => write!(f, "pi1[{a},{b}]"),
            Node::Proj2(a, b) => write!(f, "pi2[{a},{b}]"),
        }
    }
}

/// Prints in the expression syntax accepted by [`crate::expr::parse`]; the
/// printed form parses back to a structurally identical term.
impl fmt::Display for Morphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_prec(f, PREC_SEQ)
    }
}

impl Serialize for Morphism {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sort(i: u32, n: &str) -> SortId {
        SortId {
            idx: i,
            name: Arc::from(n),
        }
    }

    fn gen(idx: usize, name: &str, dom: Object, cod: Object) -> Arc<GenDecl> {
        Arc::new(GenDecl {
            idx,
            name: Arc::from(name),
            dom,
            cod,
        })
    }

    #[test]
    fn tensor_is_strict() {
        let a = Object::single(sort(0, "A"));
        let b = Object::single(sort(1, "B"));
        let c = Object::single(sort(2, "C"));
        assert_eq!(a.tensor(&b).tensor(&c), a.tensor(&b.tensor(&c)));
        assert_eq!(a.tensor(&Object::unit()), a);
        assert_eq!(Object::unit().tensor(&a), a);
    }

    #[test]
    fn compose_checks_boundaries() {
        let a = Object::single(sort(0, "A"));
        let b = Object::single(sort(1, "B"));
        let c = Object::single(sort(2, "C"));
        let f = Morphism::generator(&gen(0, "f", a.clone(), b.clone()));
        let g = Morphism::generator(&gen(1, "g", b.clone(), c.clone()));
        let h = Morphism::generator(&gen(2, "h", c.clone(), a.clone()));
        let fg = f.then(&g).unwrap();
        assert_eq!(fg.dom(), &a);
        assert_eq!(fg.cod(), &c);
        match f.then(&h) {
            Err(Error::TypeMismatch {
                expected, found, ..
            }) => {
                assert_eq!(expected, b);
                assert_eq!(found, c);
            }
            other => panic!("expected a type mismatch, got {other:?}"),
        }
    }

    #[test]
    fn graph_has_expected_type() {
        let a = Object::single(sort(0, "A"));
        let b = Object::single(sort(1, "B"));
        let f = Morphism::generator(&gen(0, "f", a.clone(), b.clone()));
        let g = Morphism::graph(&f);
        assert_eq!(g.dom(), &a);
        assert_eq!(g.cod(), &a.tensor(&b));
        assert_eq!(g.to_string(), "copy[A] ; id[A] * f");
    }

    #[test]
    fn flatten_absorbs_whiskering() {
        let a = Object::single(sort(0, "A"));
        let f = Morphism::generator(&gen(0, "f", a.clone(), a.clone()));
        let g = Morphism::generator(&gen(1, "g", a.clone(), a.clone()));
        let m = Morphism::id(&a);
        // (M ⊗ (f ; g)) versus (M ⊗ f) ; (M ⊗ g)
        let lhs = m.tensor(&f.seq(&g));
        let rhs = m.tensor(&f).seq(&m.tensor(&g));
        assert_ne!(lhs, rhs);
        assert_eq!(lhs.flatten(), rhs.flatten());
        // unit whiskers vanish
        let u = Morphism::id(&Object::unit());
        assert_eq!(u.tensor(&f).flatten(), f.flatten());
        assert_eq!(Morphism::id(&a).seq(&f).flatten(), f.flatten());
    }
}
