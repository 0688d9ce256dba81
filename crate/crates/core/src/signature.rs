//! Signatures: sorts with carriers and generators with semantics, plus the
//! JSON file format.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::RealPrimitive;
use crate::term::{GenDecl, Morphism, Object, SortId};

/// Version of the signature JSON format understood by this crate.
pub const SIGNATURE_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Carrier {
    Finite(u32),
    Real(usize),
}

impl fmt::Display for Carrier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Carrier::Finite(n) => write!(f, "finite({n})"),
            Carrier::Real(d) => write!(f, "real({d})"),
        }
    }
}

impl Carrier {
    /// Rough storage cost of one value, used for residual byte estimates.
    pub fn bytes(&self) -> usize {
        match *self {
            Carrier::Finite(n) => {
                let bits = 32 - n.saturating_sub(1).leading_zeros();
                (bits as usize).div_ceil(8).max(1)
            }
            Carrier::Real(d) => 8 * d,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Sort {
    pub id: SortId,
    pub carrier: Carrier,
}

/// A total map between carrier tuples, indexed in mixed radix (first wire is
/// the most significant digit).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteTable {
    pub(crate) radices: Vec<u32>,
    pub(crate) rows: Vec<Vec<u32>>,
}

impl FiniteTable {
    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn index_of(&self, inputs: &[u32]) -> usize {
        inputs
            .iter()
            .zip(&self.radices)
            .fold(0usize, |acc, (&v, &r)| acc * r as usize + v as usize)
    }

    pub fn lookup(&self, inputs: &[u32]) -> &[u32] {
        &self.rows[self.index_of(inputs)]
    }
}

#[derive(Clone, Debug)]
pub enum Semantics {
    Table(FiniteTable),
    Real(RealPrimitive),
}

#[derive(Clone, Debug)]
pub struct Generator {
    pub decl: Arc<GenDecl>,
    pub semantics: Semantics,
}

#[derive(Clone, Debug, Default)]
pub struct Signature {
    sorts: Vec<Sort>,
    generators: Vec<Generator>,
    sort_index: HashMap<String, usize>,
    gen_index: HashMap<String, usize>,
}

impl Signature {
    pub fn builder() -> SignatureBuilder {
        SignatureBuilder::default()
    }

    pub fn sorts(&self) -> &[Sort] {
        &self.sorts
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn sort(&self, name: &str) -> Result<&Sort> {
        self.sort_index
            .get(name)
            .map(|&i| &self.sorts[i])
            .ok_or_else(|| Error::UnknownSort(name.to_string()))
    }

    pub fn carrier(&self, s: &SortId) -> Carrier {
        self.sorts[s.index()].carrier
    }

    pub fn object<S: AsRef<str>>(&self, names: &[S]) -> Result<Object> {
        let ids = names
            .iter()
            .map(|n| self.sort(n.as_ref()).map(|s| s.id.clone()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Object::new(ids))
    }

    pub fn generator(&self, name: &str) -> Result<&Generator> {
        self.gen_index
            .get(name)
            .map(|&i| &self.generators[i])
            .ok_or_else(|| Error::UnknownGenerator(name.to_string()))
    }

    /// The generator a decl refers to, checked by name so that terms built
    /// against a differently-interpreted copy of this signature still resolve.
    pub fn resolve(&self, decl: &GenDecl) -> Result<&Generator> {
        match self.generators.get(decl.index()) {
            Some(g) if g.decl.name() == decl.name() => Ok(g),
            _ => Err(Error::UnknownGenerator(decl.name().to_string())),
        }
    }

    pub fn gen(&self, name: &str) -> Result<Morphism> {
        Ok(Morphism::generator(&self.generator(name)?.decl))
    }

    pub fn is_finite(&self, obj: &Object) -> bool {
        obj.sorts()
            .iter()
            .all(|s| matches!(self.carrier(s), Carrier::Finite(_)))
    }

    pub fn bytes(&self, obj: &Object) -> usize {
        obj.sorts().iter().map(|s| self.carrier(s).bytes()).sum()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SignatureFile = serde_json::from_str(text)?;
        file.into_signature()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("signature serializes")
    }

    fn to_file(&self) -> SignatureFile {
        SignatureFile {
            sorts: self
                .sorts
                .iter()
                .map(|s| SortSpec {
                    name: s.id.name().to_string(),
                    carrier: match s.carrier {
                        Carrier::Finite(n) => CarrierSpec::Finite(n),
                        Carrier::Real(d) => CarrierSpec::Real(d),
                    },
                })
                .collect(),
            generators: self
                .generators
                .iter()
                .map(|g| GenSpec {
                    name: g.decl.name().to_string(),
                    dom: g.decl.dom.names(),
                    cod: g.decl.cod.names(),
                    table: match &g.semantics {
                        Semantics::Table(t) => Some(t.rows.clone()),
                        Semantics::Real(_) => None,
                    },
                    builtin: match &g.semantics {
                        Semantics::Table(_) => None,
                        Semantics::Real(p) => Some(p.to_string()),
                    },
                })
                .collect(),
        }
    }
}

#[derive(Default)]
pub struct SignatureBuilder {
    sig: Signature,
}

impl SignatureBuilder {
    pub fn sort(&mut self, name: &str, carrier: Carrier) -> Result<SortId> {
        if self.sig.sort_index.contains_key(name) {
            return Err(Error::Signature(format!("duplicate sort `{name}`")));
        }
        match carrier {
            Carrier::Finite(0) => {
                return Err(Error::Signature(format!(
                    "sort `{name}` has an empty carrier"
                )))
            }
            Carrier::Real(0) => {
                return Err(Error::Signature(format!("sort `{name}` has dimension 0")))
            }
            _ => {}
        }
        let id = SortId {
            idx: self.sig.sorts.len() as u32,
            name: Arc::from(name),
        };
        self.sig
            .sort_index
            .insert(name.to_string(), self.sig.sorts.len());
        self.sig.sorts.push(Sort {
            id: id.clone(),
            carrier,
        });
        Ok(id)
    }

    pub fn finite_sort(&mut self, name: &str, size: u32) -> Result<SortId> {
        self.sort(name, Carrier::Finite(size))
    }

    pub fn real_sort(&mut self, name: &str, dim: usize) -> Result<SortId> {
        self.sort(name, Carrier::Real(dim))
    }

    fn declare<S: AsRef<str>>(&self, name: &str, dom: &[S], cod: &[S]) -> Result<GenDecl> {
        if self.sig.gen_index.contains_key(name) {
            return Err(Error::Signature(format!("duplicate generator `{name}`")));
        }
        if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
            return Err(Error::Signature(format!("invalid generator name `{name}`")));
        }
        Ok(GenDecl {
            idx: self.sig.generators.len(),
            name: Arc::from(name),
            dom: self.sig.object(dom)?,
            cod: self.sig.object(cod)?,
        })
    }

    fn push(&mut self, decl: GenDecl, semantics: Semantics) -> Arc<GenDecl> {
        let decl = Arc::new(decl);
        self.sig
            .gen_index
            .insert(decl.name().to_string(), self.sig.generators.len());
        self.sig.generators.push(Generator {
            decl: decl.clone(),
            semantics,
        });
        decl
    }

    fn finite_sizes(&self, obj: &Object, gen: &str) -> Result<Vec<u32>> {
        obj.sorts()
            .iter()
            .map(|s| match self.sig.carrier(s) {
                Carrier::Finite(n) => Ok(n),
                Carrier::Real(_) => Err(Error::Signature(format!(
                    "generator `{gen}` has a table but sort `{s}` is real"
                ))),
            })
            .collect()
    }

    pub fn table<S: AsRef<str>>(
        &mut self,
        name: &str,
        dom: &[S],
        cod: &[S],
        rows: Vec<Vec<u32>>,
    ) -> Result<Arc<GenDecl>> {
        let decl = self.declare(name, dom, cod)?;
        let radices = self.finite_sizes(&decl.dom, name)?;
        let cod_sizes = self.finite_sizes(&decl.cod, name)?;
        let expected: u128 = radices.iter().map(|&r| r as u128).product();
        if rows.len() as u128 != expected {
            return Err(Error::Signature(format!(
                "generator `{name}`: table has {} rows, expected {expected}",
                rows.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cod_sizes.len() {
                return Err(Error::Signature(format!(
                    "generator `{name}`: row {i} has {} entries, expected {}",
                    row.len(),
                    cod_sizes.len()
                )));
            }
            for (v, &n) in row.iter().zip(&cod_sizes) {
                if *v >= n {
                    return Err(Error::Signature(format!(
                        "generator `{name}`: row {i} value {v} outside carrier of size {n}"
                    )));
                }
            }
        }
        Ok(self.push(decl, Semantics::Table(FiniteTable { radices, rows })))
    }

    /// Table generator defined by a function on input tuples.
    pub fn table_fn<S: AsRef<str>>(
        &mut self,
        name: &str,
        dom: &[S],
        cod: &[S],
        f: impl Fn(&[u32]) -> Vec<u32>,
    ) -> Result<Arc<GenDecl>> {
        let dom_obj = self.sig.object(dom)?;
        let radices = self.finite_sizes(&dom_obj, name)?;
        let rows = crate::eval::tuples(&radices).map(|t| f(&t)).collect();
        self.table(name, dom, cod, rows)
    }

    pub fn builtin<S: AsRef<str>>(
        &mut self,
        name: &str,
        dom: &[S],
        cod: &[S],
        builtin: &str,
    ) -> Result<Arc<GenDecl>> {
        let decl = self.declare(name, dom, cod)?;
        let prim = RealPrimitive::parse(builtin)?;
        let dims = |obj: &Object| -> Result<Vec<usize>> {
            obj.sorts()
                .iter()
                .map(|s| match self.sig.carrier(s) {
                    Carrier::Real(d) => Ok(d),
                    Carrier::Finite(_) => Err(Error::Signature(format!(
                        "generator `{name}` is a real builtin but sort `{s}` is finite"
                    ))),
                })
                .collect()
        };
        prim.check_dims(&dims(&decl.dom)?, &dims(&decl.cod)?)?;
        Ok(self.push(decl, Semantics::Real(prim)))
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn build(self) -> Signature {
        self.sig
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SignatureFile {
    sorts: Vec<SortSpec>,
    #[serde(default)]
    generators: Vec<GenSpec>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SortSpec {
    name: String,
    carrier: CarrierSpec,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum CarrierSpec {
    Finite(u32),
    Real(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenSpec {
    name: String,
    dom: Vec<String>,
    cod: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    table: Option<Vec<Vec<u32>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    builtin: Option<String>,
}

impl SignatureFile {
    fn into_signature(self) -> Result<Signature> {
        let mut b = Signature::builder();
        for s in &self.sorts {
            let carrier = match s.carrier {
                CarrierSpec::Finite(n) => Carrier::Finite(n),
                CarrierSpec::Real(d) => Carrier::Real(d),
            };
            b.sort(&s.name, carrier)?;
        }
        for (i, g) in self.generators.into_iter().enumerate() {
            let located =
                |e: Error| Error::Signature(format!("generators[{i}] (`{}`): {e}", g.name));
            match (g.table.clone(), g.builtin.as_deref()) {
                (Some(rows), None) => b.table(&g.name, &g.dom, &g.cod, rows).map_err(located)?,
                (None, Some(p)) => b.builtin(&g.name, &g.dom, &g.cod, p).map_err(located)?,
                _ => {
                    return Err(located(Error::Signature(
                        "exactly one of `table` or `builtin` is required".into(),
                    )))
                }
            };
        }
        Ok(b.build())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "sorts": [{"name":"A","carrier":{"finite":2}}, {"name":"B","carrier":{"finite":3}},
                  {"name":"R","carrier":{"real":2}}],
        "generators": [
            {"name":"f","dom":["A"],"cod":["B"],"table":[[0],[2]]},
            {"name":"g","dom":["R"],"cod":["R"],"builtin":"tanh"}
        ]
    }"#;

    #[test]
    fn parses_and_roundtrips() {
        let sig = Signature::from_json(SAMPLE).unwrap();
        assert_eq!(sig.sorts().len(), 3);
        assert_eq!(sig.generators().len(), 2);
        let again = Signature::from_json(&sig.to_json()).unwrap();
        assert_eq!(again.to_json(), sig.to_json());
        assert_eq!(sig.carrier(&sig.sort("R").unwrap().id), Carrier::Real(2));
    }

    #[test]
    fn rejects_bad_tables() {
        let bad = SAMPLE.replace("[[0],[2]]", "[[0],[3]]");
        let err = Signature::from_json(&bad).unwrap_err().to_string();
        assert!(err.contains("generators[0]"), "{err}");
        let short = SAMPLE.replace("[[0],[2]]", "[[0]]");
        assert!(Signature::from_json(&short).is_err());
    }

    #[test]
    fn json_errors_carry_location() {
        let err = Signature::from_json("{\"sorts\": [ }")
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 1"), "{err}");
    }

    #[test]
    fn unknown_sort_is_reported() {
        let bad = SAMPLE.replace("\"dom\":[\"A\"]", "\"dom\":[\"Z\"]");
        let err = Signature::from_json(&bad).unwrap_err().to_string();
        assert!(err.contains("unknown sort `Z`"), "{err}");
    }

    #[test]
    fn byte_estimates() {
        assert_eq!(Carrier::Finite(2).bytes(), 1);
        assert_eq!(Carrier::Finite(256).bytes(), 1);
        assert_eq!(Carrier::Finite(257).bytes(), 2);
        assert_eq!(Carrier::Real(3).bytes(), 24);
    }
}
