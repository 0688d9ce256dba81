//! 2-cells between optics: reparameterisations `r : M₁ → M₂` making both
//! squares commute, their vertical and horizontal composites, and the
//! connected-components quotient.
//!
//! Checking a witness is exact (normalizer, cross-checked by exhaustive
//! evaluation when the carriers are finite). Searching for witnesses is a
//! separate, depth-bounded procedure.

use std::fmt;

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::eval::{find_counterexample, Value};
use crate::expr;
use crate::normal::{normalize, CanonicalForm, Tree, TreeKind, TreeRef};
use crate::optic::{optic_compose, Optic};
use crate::signature::Signature;
use crate::term::Morphism;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Square {
    Left,
    Right,
}

impl fmt::Display for Square {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Square::Left => "left",
            Square::Right => "right",
        })
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum CellError {
    #[error("source boundary {src} differs from target boundary {tgt}")]
    Boundary { src: String, tgt: String },
    #[error("witness `{witness}` has type {found}, expected {expected}")]
    WitnessType {
        witness: String,
        expected: String,
        found: String,
    },
    #[error("left square fails: fw1 ; (r * B) differs from fw2")]
    LeftSquare { counterexample: Option<Vec<Value>> },
    #[error("right square fails: (r * B') ; bw2 differs from bw1")]
    RightSquare { counterexample: Option<Vec<Value>> },
    #[error("{square} square: normalizer and exhaustive evaluation disagree")]
    OracleDisagreement {
        square: Square,
        counterexample: Option<Vec<Value>>,
    },
    #[error("vertical composition needs the first target to equal the second source")]
    Midpoint,
    #[error("optics do not compose: {0}")]
    Compose(String),
    #[error("no optic with index {0}")]
    Index(usize),
}

impl CellError {
    pub fn counterexample(&self) -> Option<&[Value]> {
        match self {
            CellError::LeftSquare { counterexample }
            | CellError::RightSquare { counterexample }
            | CellError::OracleDisagreement { counterexample, .. } => counterexample.as_deref(),
            _ => None,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let kind = match self {
            CellError::Boundary { .. } => "boundary",
            CellError::WitnessType { .. } => "witness_type",
            CellError::LeftSquare { .. } => "left_square",
            CellError::RightSquare { .. } => "right_square",
            CellError::OracleDisagreement { .. } => "oracle_disagreement",
            CellError::Midpoint => "midpoint",
            CellError::Compose(_) => "compose",
            CellError::Index(_) => "index",
        };
        serde_json::json!({
            "error": kind,
            "message": self.to_string(),
            "counterexample": self.counterexample(),
        })
    }
}

/// A validated 2-cell.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoCell {
    src: Optic,
    tgt: Optic,
    witness: Morphism,
    extensionally_checked: bool,
}

impl TwoCell {
    pub fn src(&self) -> &Optic {
        &self.src
    }

    pub fn tgt(&self) -> &Optic {
        &self.tgt
    }

    pub fn witness(&self) -> &Morphism {
        &self.witness
    }

    /// Whether the squares were also confirmed by exhaustive evaluation.
    pub fn extensionally_checked(&self) -> bool {
        self.extensionally_checked
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "src": self.src.to_json(),
            "tgt": self.tgt.to_json(),
            "witness": self.witness.to_string(),
            "extensionally_checked": self.extensionally_checked,
        })
    }
}

/// `None` when exhaustive evaluation does not apply (real sorts, too many
/// inputs).
fn exhaustive(lhs: &Morphism, rhs: &Morphism, sig: &Signature) -> Option<Option<Vec<Value>>> {
    find_counterexample(lhs, rhs, sig).ok()
}

fn check_square(
    square: Square,
    lhs: &Morphism,
    rhs: &Morphism,
    sig: &Signature,
) -> std::result::Result<bool, CellError> {
    let symbolic = normalize(lhs) == normalize(rhs);
    let ext = exhaustive(lhs, rhs, sig);
    match (symbolic, ext) {
        (true, Some(Some(cex))) => Err(CellError::OracleDisagreement {
            square,
            counterexample: Some(cex),
        }),
        (true, ext) => Ok(ext.is_some()),
        (false, ext) => {
            let counterexample = ext.flatten();
            Err(match square {
                Square::Left => CellError::LeftSquare { counterexample },
                Square::Right => CellError::RightSquare { counterexample },
            })
        }
    }
}

/// Validates `r : M₁ → M₂` as a 2-cell from `src` to `tgt`.
pub fn mk_two_cell(
    src: &Optic,
    tgt: &Optic,
    r: &Morphism,
    sig: &Signature,
) -> std::result::Result<TwoCell, CellError> {
    if src.dom() != tgt.dom() || src.cod() != tgt.cod() {
        return Err(CellError::Boundary {
            src: format!("{} -> {}", src.dom(), src.cod()),
            tgt: format!("{} -> {}", tgt.dom(), tgt.cod()),
        });
    }
    if r.dom() != src.residual() || r.cod() != tgt.residual() {
        return Err(CellError::WitnessType {
            witness: r.to_string(),
            expected: format!("{} -> {}", src.residual(), tgt.residual()),
            found: format!("{} -> {}", r.dom(), r.cod()),
        });
    }
    let b = Morphism::id(&src.cod().fwd);
    let b_prime = Morphism::id(&src.cod().bwd);
    let left = src.fw().then(&r.tensor(&b)).expect("typed by construction");
    let right = r
        .tensor(&b_prime)
        .then(tgt.bw())
        .expect("typed by construction");
    let l = check_square(Square::Left, &left, tgt.fw(), sig)?;
    let rr = check_square(Square::Right, &right, src.bw(), sig)?;
    Ok(TwoCell {
        src: src.clone(),
        tgt: tgt.clone(),
        witness: r.clone(),
        extensionally_checked: l && rr,
    })
}

/// `id_M : o ⇒ o`.
pub fn identity_cell(o: &Optic, sig: &Signature) -> std::result::Result<TwoCell, CellError> {
    mk_two_cell(o, o, &Morphism::id(o.residual()), sig)
}

/// Witness `r₁ ⨟ r₂`.
pub fn vcompose(
    c1: &TwoCell,
    c2: &TwoCell,
    sig: &Signature,
) -> std::result::Result<TwoCell, CellError> {
    if c1.tgt != c2.src {
        return Err(CellError::Midpoint);
    }
    let r = c1
        .witness
        .then(&c2.witness)
        .expect("midpoint residuals agree");
    mk_two_cell(&c1.src, &c2.tgt, &r, sig)
}

/// Witness `r₁ ⊗ r₂` between the composites `o₁ ⨟ o₂ ⇒ ô₁ ⨟ ô₂`.
pub fn hcompose(
    c1: &TwoCell,
    c2: &TwoCell,
    sig: &Signature,
) -> std::result::Result<TwoCell, CellError> {
    let src = optic_compose(&c1.src, &c2.src).map_err(|e| CellError::Compose(e.to_string()))?;
    let tgt = optic_compose(&c1.tgt, &c2.tgt).map_err(|e| CellError::Compose(e.to_string()))?;
    mk_two_cell(&src, &tgt, &c1.witness.tensor(&c2.witness), sig)
}

/// An optic with its components in canonical form, for witness search.
#[derive(Clone, Debug)]
pub struct NormalOptic {
    residual_len: usize,
    fw: CanonicalForm,
    bw: CanonicalForm,
}

impl NormalOptic {
    pub fn new(o: &Optic) -> Self {
        NormalOptic {
            residual_len: o.residual().len(),
            fw: normalize(o.fw()),
            bw: normalize(o.bw()),
        }
    }
}

/// Trees `t` over the wires of `avail` with `t[avail] = target` and depth at
/// most `depth`.
fn match_tree(target: &TreeRef, avail: &[TreeRef], depth: usize) -> Vec<TreeRef> {
    let mut out: Vec<TreeRef> = avail
        .iter()
        .enumerate()
        .filter(|(_, s)| *s == target)
        .map(|(i, _)| Tree::input(i))
        .collect();
    if depth == 0 {
        return out;
    }
    if let TreeKind::App { gen, output, args } = target.kind() {
        let per_arg: Vec<Vec<TreeRef>> = args
            .iter()
            .map(|a| match_tree(a, avail, depth - 1))
            .collect();
        for combo in product(&per_arg) {
            out.push(Tree::app(gen.clone(), *output, combo.into()));
        }
    }
    out
}

fn product(pools: &[Vec<TreeRef>]) -> Vec<Vec<TreeRef>> {
    pools.iter().fold(vec![Vec::new()], |acc, pool| {
        acc.iter()
            .flat_map(|prefix| {
                pool.iter().map(move |t| {
                    let mut v = prefix.clone();
                    v.push(t.clone());
                    v
                })
            })
            .collect()
    })
}

/// Every witness of depth at most `depth` satisfying the left square, in
/// canonical form, one candidate list per wire of `M₂`.
pub fn left_square_candidates(
    src: &NormalOptic,
    tgt: &NormalOptic,
    depth: usize,
) -> Option<Vec<Vec<TreeRef>>> {
    let (m1, m2) = (src.residual_len, tgt.residual_len);
    if src.fw.outputs[m1..] != tgt.fw.outputs[m2..] {
        return None;
    }
    let avail = &src.fw.outputs[..m1];
    Some(
        tgt.fw.outputs[..m2]
            .iter()
            .map(|t| match_tree(t, avail, depth))
            .collect(),
    )
}

/// Searches for a witness `src ⇒ tgt` whose canonical trees have generator
/// depth at most `depth`. Every witness within the bound satisfying the left
/// square is a combination of [`left_square_candidates`], so the search is
/// exhaustive up to the bound.
pub fn search_witness(src: &NormalOptic, tgt: &NormalOptic, depth: usize) -> Option<CanonicalForm> {
    let candidates = left_square_candidates(src, tgt, depth)?;
    let m1 = src.residual_len;
    let b_prime = src.bw.dom.len() - m1;
    for r in product(&candidates) {
        let mut subst = r.clone();
        subst.extend((0..b_prime).map(|k| Tree::input(m1 + k)));
        let ok = tgt
            .bw
            .outputs
            .iter()
            .zip(&src.bw.outputs)
            .all(|(t, expect)| &t.substitute(&subst) == expect);
        if ok {
            return Some(CanonicalForm {
                dom: src.fw.cod.slice(0, m1),
                cod: tgt.fw.cod.slice(0, tgt.residual_len),
                outputs: r,
            });
        }
    }
    None
}

#[derive(Clone, Debug)]
pub struct CellEdge {
    pub src: usize,
    pub tgt: usize,
    pub cell: TwoCell,
}

/// A finite fragment of a hom-category: optics with a common boundary and
/// validated cells between them. Each added optic gets its identity cell.
#[derive(Clone, Debug, Default)]
pub struct HomCatSample {
    optics: Vec<Optic>,
    cells: Vec<CellEdge>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub depth: usize,
    pub pairs_searched: usize,
    pub witnesses_found: usize,
}

impl HomCatSample {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn optics(&self) -> &[Optic] {
        &self.optics
    }

    pub fn cells(&self) -> &[CellEdge] {
        &self.cells
    }

    pub fn add_optic(
        &mut self,
        o: Optic,
        sig: &Signature,
    ) -> std::result::Result<usize, CellError> {
        if let Some(first) = self.optics.first() {
            if first.dom() != o.dom() || first.cod() != o.cod() {
                return Err(CellError::Boundary {
                    src: format!("{} -> {}", first.dom(), first.cod()),
                    tgt: format!("{} -> {}", o.dom(), o.cod()),
                });
            }
        }
        let idx = self.optics.len();
        let cell = identity_cell(&o, sig)?;
        self.optics.push(o);
        self.cells.push(CellEdge {
            src: idx,
            tgt: idx,
            cell,
        });
        Ok(idx)
    }

    pub fn add_cell(
        &mut self,
        src: usize,
        tgt: usize,
        witness: &Morphism,
        sig: &Signature,
    ) -> std::result::Result<(), CellError> {
        let s = self.optics.get(src).ok_or(CellError::Index(src))?;
        let t = self.optics.get(tgt).ok_or(CellError::Index(tgt))?;
        let cell = mk_two_cell(s, t, witness, sig)?;
        self.cells.push(CellEdge { src, tgt, cell });
        Ok(())
    }

    /// Adds a witness between every pair of optics not yet connected, when
    /// one of depth at most `depth` exists in either direction.
    pub fn search_cells(
        &mut self,
        depth: usize,
        sig: &Signature,
    ) -> std::result::Result<SearchStats, CellError> {
        let normal: Vec<NormalOptic> = self.optics.iter().map(NormalOptic::new).collect();
        let mut uf = self.union_find();
        let mut stats = SearchStats {
            depth,
            ..Default::default()
        };
        for i in 0..normal.len() {
            for j in i + 1..normal.len() {
                if uf.equiv(i, j) {
                    continue;
                }
                stats.pairs_searched += 1;
                let found = search_witness(&normal[i], &normal[j], depth)
                    .map(|r| (i, j, r))
                    .or_else(|| search_witness(&normal[j], &normal[i], depth).map(|r| (j, i, r)));
                if let Some((s, t, r)) = found {
                    self.add_cell(s, t, &r.to_morphism(), sig)?;
                    uf.union(s, t);
                    stats.witnesses_found += 1;
                }
            }
        }
        Ok(stats)
    }

    fn union_find(&self) -> UnionFind<usize> {
        let mut uf = UnionFind::new(self.optics.len());
        for c in &self.cells {
            uf.union(c.src, c.tgt);
        }
        uf
    }

    /// Reads `{"optics": [...], "cells": [{"src": 0, "tgt": 1, "witness":
    /// "..."}], "search_depth": 3}`; the depth is optional.
    pub fn from_json(text: &str, sig: &Signature) -> Result<(Self, Option<usize>)> {
        let file: HomCatFile = serde_json::from_str(text)?;
        let mut sample = HomCatSample::new();
        for o in file.optics {
            sample.add_optic(Optic::from_value(o, sig)?, sig)?;
        }
        for c in file.cells {
            let w = expr::parse(&c.witness, sig)?;
            sample.add_cell(c.src, c.tgt, &w, sig)?;
        }
        Ok((sample, file.search_depth))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HomCatFile {
    optics: Vec<serde_json::Value>,
    #[serde(default)]
    cells: Vec<CellSpec>,
    #[serde(default)]
    search_depth: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CellSpec {
    src: usize,
    tgt: usize,
    witness: String,
}

/// Connected components of the sample's cells, read as undirected edges.
/// Classes are sorted, and listed by their smallest member.
pub fn pi0_classes(s: &HomCatSample) -> Vec<Vec<usize>> {
    let labels = s.union_find().into_labeling();
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut slot = std::collections::HashMap::new();
    for (i, root) in labels.into_iter().enumerate() {
        let k = *slot.entry(root).or_insert_with(|| {
            classes.push(Vec::new());
            classes.len() - 1
        });
        classes[k].push(i);
    }
    classes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal::enumerate_trees;
    use crate::term::Object;

    fn sig() -> Signature {
        let mut b = Signature::builder();
        b.finite_sort("X", 2).unwrap();
        b.table_fn("n", &["X"], &["X"], |t| vec![1 - t[0]]).unwrap();
        b.table_fn("m", &["X", "X"], &["X"], |t| vec![t[0] & t[1]])
            .unwrap();
        b.build()
    }

    fn parse(s: &Signature, src: &str) -> Morphism {
        expr::parse(src, s).unwrap()
    }

    fn x(s: &Signature) -> Object {
        s.object(&["X"]).unwrap()
    }

    /// `(X, copy ; n * id, m)` and `(X*X, ...)`: a pair joined by `copy[X]`.
    fn pair(s: &Signature) -> (Optic, Optic) {
        let o1 = Optic::new(x(s), parse(s, "copy[X] ; n * id[X]"), s.gen("m").unwrap()).unwrap();
        let xx = s.object(&["X", "X"]).unwrap();
        let o2 = Optic::new(
            xx,
            parse(s, "copy[X] ; (n ; copy[X]) * id[X]"),
            parse(s, "pi1[X,X] * id[X] ; m"),
        )
        .unwrap();
        (o1, o2)
    }

    #[test]
    fn identity_validates() {
        let s = sig();
        let (o1, _) = pair(&s);
        let c = identity_cell(&o1, &s).unwrap();
        assert!(c.extensionally_checked());
    }

    #[test]
    fn copy_witness_validates() {
        let s = sig();
        let (o1, o2) = pair(&s);
        mk_two_cell(&o1, &o2, &Morphism::copy(&x(&s)), &s).unwrap();
    }

    #[test]
    fn bad_witness_is_rejected_with_input() {
        let s = sig();
        let (o1, _) = pair(&s);
        let err = mk_two_cell(&o1, &o1, &s.gen("n").unwrap(), &s).unwrap_err();
        assert!(matches!(err, CellError::LeftSquare { .. }));
        assert!(err.counterexample().is_some());
        assert!(err.to_json()["counterexample"].is_array());
        let err = mk_two_cell(&o1, &o1, &Morphism::copy(&x(&s)), &s).unwrap_err();
        assert!(matches!(err, CellError::WitnessType { .. }));
    }

    #[test]
    fn right_square_failure() {
        let s = sig();
        let o1 = Optic::new(x(&s), parse(&s, "copy[X]"), parse(&s, "m")).unwrap();
        let o2 = Optic::new(x(&s), parse(&s, "copy[X]"), parse(&s, "pi2[X,X]")).unwrap();
        let err = mk_two_cell(&o1, &o2, &Morphism::id(&x(&s)), &s).unwrap_err();
        assert!(matches!(
            err,
            CellError::RightSquare {
                counterexample: Some(_)
            }
        ));
    }

    #[test]
    fn vertical_composition() {
        let s = sig();
        let (o1, o2) = pair(&s);
        let c = mk_two_cell(&o1, &o2, &Morphism::copy(&x(&s)), &s).unwrap();
        let id1 = identity_cell(&o1, &s).unwrap();
        let v = vcompose(&id1, &c, &s).unwrap();
        assert_eq!(normalize(v.witness()), normalize(c.witness()));
        assert_eq!(vcompose(&c, &id1, &s).unwrap_err(), CellError::Midpoint);
    }

    #[test]
    fn horizontal_identity() {
        let s = sig();
        let o = Optic::new(x(&s), parse(&s, "copy[X]"), parse(&s, "m")).unwrap();
        let id = identity_cell(&o, &s).unwrap();
        let h = hcompose(&id, &id, &s).unwrap();
        assert_eq!(h.src(), h.tgt());
        assert_eq!(
            normalize(h.witness()),
            normalize(&Morphism::id(h.src().residual()))
        );
    }

    #[test]
    fn pi0_of_identities_is_discrete() {
        let s = sig();
        let (o1, o2) = pair(&s);
        let mut h = HomCatSample::new();
        h.add_optic(o1, &s).unwrap();
        h.add_optic(o2, &s).unwrap();
        assert_eq!(pi0_classes(&h), vec![vec![0], vec![1]]);
        h.add_cell(0, 1, &Morphism::copy(&x(&s)), &s).unwrap();
        assert_eq!(pi0_classes(&h), vec![vec![0, 1]]);
    }

    #[test]
    fn search_finds_the_copy() {
        let s = sig();
        let (o1, o2) = pair(&s);
        let r = search_witness(&NormalOptic::new(&o1), &NormalOptic::new(&o2), 3).unwrap();
        mk_two_cell(&o1, &o2, &r.to_morphism(), &s).unwrap();
        let mut h = HomCatSample::new();
        h.add_optic(o1, &s).unwrap();
        h.add_optic(o2, &s).unwrap();
        let stats = h.search_cells(3, &s).unwrap();
        assert_eq!(stats.witnesses_found, 1);
        assert_eq!(pi0_classes(&h).len(), 1);
    }

    /// The matcher returns exactly the witnesses a brute-force enumeration
    /// of all trees finds.
    #[test]
    fn matcher_agrees_with_brute_force() {
        let s = sig();
        let gens: Vec<_> = s.generators().iter().map(|g| g.decl.clone()).collect();
        let (n, m) = (gens[0].clone(), gens[1].clone());
        let app1 = |t: &TreeRef| Tree::app(n.clone(), 0, vec![t.clone()].into());
        let app2 =
            |a: &TreeRef, b: &TreeRef| Tree::app(m.clone(), 0, vec![a.clone(), b.clone()].into());
        let x0 = Tree::input(0);
        let nx = app1(&x0);
        let xx = s.object(&["X", "X"]).unwrap();
        let xxx = xx.tensor(&x(&s));
        let fw_of = |outputs: Vec<TreeRef>| {
            CanonicalForm {
                dom: x(&s),
                cod: xxx.clone(),
                outputs,
            }
            .to_morphism()
        };
        let bw = Morphism::proj2(&xx, &x(&s));
        let src = Optic::new(
            xx.clone(),
            fw_of(vec![nx.clone(), x0.clone(), x0.clone()]),
            bw.clone(),
        )
        .unwrap();
        let targets = [
            vec![app1(&nx), app2(&nx, &x0), x0.clone()],
            vec![app2(&x0, &x0), app1(&app1(&nx)), x0.clone()],
        ];
        for depth in 0..=3 {
            for outputs in &targets {
                let tgt = Optic::new(xx.clone(), fw_of(outputs.clone()), bw.clone()).unwrap();
                let (ns, nt) = (NormalOptic::new(&src), NormalOptic::new(&tgt));
                let fast = left_square_candidates(&ns, &nt, depth).unwrap();
                let all = enumerate_trees(&gens, &xx, 1, depth);
                let avail = &ns.fw.outputs[..2];
                for (j, cands) in fast.iter().enumerate() {
                    let brute: Vec<&TreeRef> = all[0]
                        .iter()
                        .filter(|t| t.substitute(avail) == nt.fw.outputs[j])
                        .collect();
                    assert_eq!(cands.len(), brute.len(), "depth {depth} wire {j}");
                    for b in brute {
                        assert!(cands.contains(b));
                    }
                }
            }
        }
    }

    #[test]
    fn homcat_json() {
        let s = sig();
        let (o1, o2) = pair(&s);
        let text = serde_json::json!({
            "optics": [o1.to_json(), o2.to_json()],
            "cells": [{"src": 0, "tgt": 1, "witness": "copy[X]"}],
            "search_depth": 2,
        })
        .to_string();
        let (h, depth) = HomCatSample::from_json(&text, &s).unwrap();
        assert_eq!(depth, Some(2));
        assert_eq!(pi0_classes(&h), vec![vec![0, 1]]);
        let bad = text.replace("copy[X]\"", "n\"");
        assert!(HomCatSample::from_json(&bad, &s).is_err());
    }
}
