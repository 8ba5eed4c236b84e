//! The on-disk linkage document: canonical JSON, sorted keys, unknown fields kept.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::IoError;
use crate::compiler::{BoundsBox, Flavor};
use crate::gadgets::{Domain, FunctionalLinkage, GadgetKind};
use crate::geom::Point;
use crate::linkage::{Linkage, Realization, VertexId};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexEntry {
    pub id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeEntry {
    pub u: u32,
    pub v: u32,
    pub length: f64,
    pub flexible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedEntry {
    pub id: u32,
    pub point: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalBlock {
    pub inputs: Vec<u32>,
    pub outputs: Vec<u32>,
    pub domain: Domain,
    pub sheet_bits: u32,
    /// "function" or "set".
    pub kind: String,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

/// Enough to rebuild the closed-form solver for a document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// "compiled", "set" or "complex".
    pub kind: String,
    /// Expression, presentation text or complex JSON.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flavor: Option<Flavor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cable: Option<f64>,
    #[serde(default)]
    pub census: BTreeMap<String, usize>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkageDocument {
    pub format_version: u64,
    pub dim: usize,
    /// Slot count; vertex ids may skip retired slots.
    pub slots: usize,
    pub vertices: Vec<VertexEntry>,
    pub edges: Vec<EdgeEntry>,
    pub fixed: Vec<FixedEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functional: Option<FunctionalBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

fn ids(vs: &[VertexId]) -> Vec<u32> {
    vs.iter().map(|v| v.0).collect()
}

impl LinkageDocument {
    pub fn from_linkage(l: &Linkage) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            dim: l.dim(),
            slots: l.slot_count(),
            vertices: l.vertices().map(|v| VertexEntry { id: v.0, label: l.label(v).map(str::to_string) }).collect(),
            edges: l.edges().map(|e| EdgeEntry { u: e.u.0, v: e.v.0, length: e.length, flexible: e.flexible }).collect(),
            fixed: l.fixed().iter().map(|(v, p)| FixedEntry { id: v.0, point: p.as_slice().to_vec() }).collect(),
            functional: None,
            provenance: None,
            extra: BTreeMap::new(),
        }
    }

    pub fn from_functional(f: &FunctionalLinkage) -> Self {
        let mut doc = Self::from_linkage(&f.linkage);
        doc.functional = Some(FunctionalBlock {
            inputs: ids(&f.inputs),
            outputs: ids(&f.outputs),
            domain: f.domain.clone(),
            sheet_bits: f.sheet_bits(),
            kind: match f.kind {
                GadgetKind::Function => "function",
                GadgetKind::Set => "set",
            }
            .into(),
            extra: BTreeMap::new(),
        });
        doc
    }

    pub fn to_linkage(&self) -> Result<Linkage, IoError> {
        let live: Vec<(VertexId, Option<String>)> = self.vertices.iter().map(|v| (VertexId(v.id), v.label.clone())).collect();
        let mut l = Linkage::with_vertices(self.dim, self.slots, &live)?;
        for e in &self.edges {
            l.add_edge(VertexId(e.u), VertexId(e.v), e.length, e.flexible)?;
        }
        let pins: BTreeMap<VertexId, Point> =
            self.fixed.iter().map(|f| (VertexId(f.id), Point::from_column_slice(&f.point))).collect();
        Ok(l.fix_vertices(&pins)?)
    }
}

fn parse_error(e: serde_json::Error) -> IoError {
    IoError::Parse { line: e.line(), column: e.column(), msg: e.to_string() }
}

/// Canonical bytes: sorted keys, shortest round-trip floats, trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Vec<u8> {
    let v = serde_json::to_value(value).expect("document types serialize");
    let mut out = serde_json::to_vec_pretty(&v).expect("values serialize");
    out.push(b'\n');
    out
}

pub fn save(doc: &LinkageDocument) -> Vec<u8> {
    to_canonical_json(doc)
}

pub fn load(bytes: &[u8]) -> Result<LinkageDocument, IoError> {
    let v: Value = serde_json::from_slice(bytes).map_err(parse_error)?;
    match v.get("format_version").and_then(Value::as_u64) {
        None => return Err(IoError::Invalid("missing format_version".into())),
        Some(FORMAT_VERSION) => {}
        Some(other) => return Err(IoError::UnsupportedVersion(other)),
    }
    serde_json::from_slice(bytes).map_err(parse_error)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationSet {
    pub format_version: u64,
    pub dim: usize,
    /// Each listed as (vertex id, position) for every placed vertex.
    pub realizations: Vec<Vec<FixedEntry>>,
}

impl RealizationSet {
    pub fn new(l: &Linkage, phis: &[Realization]) -> Self {
        let realizations = phis
            .iter()
            .map(|phi| l.vertices().filter_map(|v| phi.get(v).map(|p| FixedEntry { id: v.0, point: p.as_slice().to_vec() })).collect())
            .collect();
        Self { format_version: FORMAT_VERSION, dim: l.dim(), realizations }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gadgets::mk_sphere;

    #[test]
    fn round_trip_and_errors() {
        let f = mk_sphere(3, 2, 1.0).unwrap();
        let mut doc = LinkageDocument::from_functional(&f);
        doc.extra.insert("comment".into(), Value::String("kept".into()));
        let bytes = save(&doc);
        assert_eq!(*bytes.last().unwrap(), b'\n');
        let back = load(&bytes).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.to_linkage().unwrap(), f.linkage);
        assert_eq!(save(&back), bytes);
        assert!(matches!(load(&bytes[..bytes.len() / 2]), Err(IoError::Parse { .. })));
        let text = String::from_utf8(bytes).unwrap().replace("\"format_version\": 1", "\"format_version\": 999");
        assert_eq!(load(text.as_bytes()), Err(IoError::UnsupportedVersion(999)));
    }
}
