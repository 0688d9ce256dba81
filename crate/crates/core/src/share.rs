//! Hash-consed sharing of generator applications.
//!
//! Starting from the fully duplicated canonical form, identical
//! `(generator, arguments)` applications are merged into one node. This is the
//! copy-naturality rewrite `Δ ⨟ (h ⊗ h) → h ⨟ Δ` applied exhaustively: every
//! value is computed once and fanned out.

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use crate::error::Result;
use crate::eval::{apply_generator, check_values, CostReport, Value};
use crate::normal::{normalize, CanonicalForm, Tree, TreeKind, TreeRef};
use crate::signature::Signature;
use crate::term::{GenDecl, Morphism, Object};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Port {
    Input(usize),
    Node { node: usize, output: usize },
}

#[derive(Clone, Debug)]
pub struct DagNode {
    pub gen: Arc<GenDecl>,
    pub args: Vec<Port>,
}

/// Acyclic graph of generator applications. Nodes are stored in topological
/// order.
#[derive(Clone, Debug)]
pub struct SharedDag {
    pub dom: Object,
    pub cod: Object,
    pub nodes: Vec<DagNode>,
    pub outputs: Vec<Port>,
}

struct Builder {
    nodes: Vec<DagNode>,
    consed: HashMap<(usize, Vec<Port>), usize>,
    seen: HashMap<*const Tree, Port>,
}

impl Builder {
    fn port(&mut self, t: &TreeRef) -> Port {
        if let Some(&p) = self.seen.get(&Arc::as_ptr(t)) {
            return p;
        }
        let p = match t.kind() {
            TreeKind::Input(i) => Port::Input(*i),
            TreeKind::App { gen, output, args } => {
                let args: Vec<Port> = args.iter().map(|a| self.port(a)).collect();
                let key = (gen.index(), args);
                let node = match self.consed.get(&key) {
                    Some(&n) => n,
                    None => {
                        let n = self.nodes.len();
                        self.nodes.push(DagNode {
                            gen: gen.clone(),
                            args: key.1.clone(),
                        });
                        self.consed.insert(key, n);
                        n
                    }
                };
                Port::Node {
                    node,
                    output: *output,
                }
            }
        };
        self.seen.insert(Arc::as_ptr(t), p);
        p
    }
}

impl SharedDag {
    pub fn from_canonical(nf: &CanonicalForm) -> Self {
        let mut b = Builder {
            nodes: Vec::new(),
            consed: HashMap::new(),
            seen: HashMap::new(),
        };
        let outputs = nf.outputs.iter().map(|t| b.port(t)).collect();
        SharedDag {
            dom: nf.dom.clone(),
            cod: nf.cod.clone(),
            nodes: b.nodes,
            outputs,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn count_nodes(&self, pred: &dyn Fn(&GenDecl) -> bool) -> usize {
        self.nodes.iter().filter(|n| pred(&n.gen)).count()
    }

    /// Evaluates each node exactly once.
    pub fn evaluate(
        &self,
        sig: &Signature,
        inputs: &[Value],
        report: &mut CostReport,
    ) -> Result<Vec<Value>> {
        check_values(sig, &self.dom, inputs)?;
        let mut values: Vec<Vec<Value>> = Vec::with_capacity(self.nodes.len());
        let fetch = |values: &Vec<Vec<Value>>, p: &Port| match *p {
            Port::Input(i) => inputs[i].clone(),
            Port::Node { node, output } => values[node][output].clone(),
        };
        for n in &self.nodes {
            let args: Vec<Value> = n.args.iter().map(|p| fetch(&values, p)).collect();
            let g = sig.resolve(&n.gen)?;
            if let Some(c) = report.generator_counts.get_mut(n.gen.index()) {
                *c += 1;
            }
            values.push(apply_generator(&g.semantics, &args)?);
        }
        Ok(self.outputs.iter().map(|p| fetch(&values, p)).collect())
    }

    /// Expands back into a canonical form; equal to the form the DAG was
    /// built from.
    pub fn to_canonical(&self) -> CanonicalForm {
        let mut per_node: Vec<Vec<TreeRef>> = Vec::new();
        let tree = |per_node: &Vec<Vec<TreeRef>>, p: &Port| match *p {
            Port::Input(i) => Tree::input(i),
            Port::Node { node, output } => per_node[node][output].clone(),
        };
        for n in &self.nodes {
            let args: Arc<[TreeRef]> = n.args.iter().map(|p| tree(&per_node, p)).collect();
            per_node.push(
                (0..n.gen.cod.len())
                    .map(|k| Tree::app(n.gen.clone(), k, args.clone()))
                    .collect(),
            );
        }
        CanonicalForm {
            dom: self.dom.clone(),
            cod: self.cod.clone(),
            outputs: self.outputs.iter().map(|p| tree(&per_node, p)).collect(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let nodes: Vec<serde_json::Value> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| serde_json::json!({ "id": i, "generator": n.gen.name(), "args": n.args }))
            .collect();
        serde_json::json!({
            "dom": self.dom,
            "cod": self.cod,
            "nodes": nodes,
            "outputs": self.outputs,
        })
    }
}

/// Normalizes `f` and merges identical applications.
pub fn share(f: &Morphism) -> SharedDag {
    SharedDag::from_canonical(&normalize(f))
}
