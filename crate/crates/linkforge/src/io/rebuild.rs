//! Documents from builders, and builders back from a document's provenance.
//!
//! Forward solvers are closures and are not stored; a document records how it
//! was made, and loading rebuilds the closures after checking the linkage matches.

use std::collections::BTreeMap;

use super::document::{LinkageDocument, Provenance};
use super::IoError;
use crate::compiler::{compile_text, Compiled};
use crate::gadgets::FunctionalLinkage;
use crate::setbuilder::{build_config_cabled, build_semiconfig, rigidify_complex, ComplexRealization, QuasiAlgPresentation, Rigidified, SetLinkage};

pub enum Rebuilt {
    Function(Box<Compiled>),
    Set(Box<SetLinkage>),
    Complex(Box<Rigidified>, ComplexRealization),
    Plain,
}

fn provenance(kind: &str, source: String) -> Provenance {
    Provenance { kind: kind.into(), source: Some(source), bounds: None, flavor: None, cable: None, census: BTreeMap::new(), extra: BTreeMap::new() }
}

pub fn compiled_document(c: &Compiled, source: &str) -> LinkageDocument {
    let mut doc = LinkageDocument::from_functional(&c.gadget);
    let mut p = provenance("compiled", source.to_string());
    p.bounds = Some(c.bounds.clone());
    p.flavor = Some(c.flavor);
    p.census = c.gadget.census.clone();
    doc.provenance = Some(p);
    doc
}

pub fn set_document(s: &SetLinkage) -> LinkageDocument {
    let mut doc = LinkageDocument::from_functional(&s.functional());
    let mut p = provenance("set", s.presentation.to_string());
    p.bounds = Some(s.presentation.bound.clone());
    p.flavor = Some(s.compiled.flavor);
    p.cable = s.cable;
    p.census = s.compiled.gadget.census.clone();
    doc.provenance = Some(p);
    doc
}

pub fn complex_document(r: &Rigidified, cx: &ComplexRealization) -> LinkageDocument {
    let mut doc = LinkageDocument::from_linkage(&r.linkage);
    let source = serde_json::to_string(cx).expect("complex serializes");
    doc.provenance = Some(provenance("complex", source));
    doc
}

fn bad(msg: impl Into<String>) -> IoError {
    IoError::Invalid(msg.into())
}

/// Rebuild from provenance and require the same linkage as stored.
pub fn rebuild(doc: &LinkageDocument) -> Result<Rebuilt, IoError> {
    let stored = doc.to_linkage()?;
    let Some(p) = &doc.provenance else { return Ok(Rebuilt::Plain) };
    let source = p.source.as_deref().ok_or_else(|| bad("provenance has no source"))?;
    let (linkage, out) = match p.kind.as_str() {
        "compiled" => {
            let bounds = p.bounds.as_ref().ok_or_else(|| bad("compiled provenance needs bounds"))?;
            let flavor = p.flavor.ok_or_else(|| bad("compiled provenance needs a flavor"))?;
            let c = compile_text(source, doc.dim, bounds, flavor).map_err(|e| bad(e.to_string()))?;
            (c.gadget.linkage.clone(), Rebuilt::Function(Box::new(c)))
        }
        "set" => {
            let pres: QuasiAlgPresentation = source.parse().map_err(|e: crate::setbuilder::SetError| bad(e.to_string()))?;
            let s = match p.cable {
                Some(d) => build_config_cabled(&pres, d, 0),
                None => build_semiconfig(&pres),
            }
            .map_err(|e| bad(e.to_string()))?;
            (s.linkage.clone(), Rebuilt::Set(Box::new(s)))
        }
        "complex" => {
            let cx: ComplexRealization = serde_json::from_str(source).map_err(|e| bad(e.to_string()))?;
            let r = rigidify_complex(&cx).map_err(|e| bad(e.to_string()))?;
            (r.linkage.clone(), Rebuilt::Complex(Box::new(r), cx))
        }
        other => return Err(bad(format!("unknown provenance kind '{other}'"))),
    };
    if linkage != stored {
        return Err(bad("the stored linkage differs from the one its provenance builds"));
    }
    Ok(out)
}

impl Rebuilt {
    pub fn functional(&self) -> Option<FunctionalLinkage> {
        match self {
            Rebuilt::Function(c) => Some(c.gadget.clone()),
            Rebuilt::Set(s) => Some(s.functional()),
            _ => None,
        }
    }
}
