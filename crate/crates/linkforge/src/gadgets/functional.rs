//! Functional linkages: a linkage with input/output vertices, a restricted
//! domain, a sheet count and a closed-form trivialization.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use super::domain::Domain;
use crate::geom::{GeomError, Point, Similarity};
use crate::linkage::{Linkage, LinkageError, Realization, VertexId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GadgetError {
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("input outside the restricted domain: {0}")]
    OutOfDomain(String),
    #[error("sheet {sheet} out of range (gadget has {bits} sheet bits)")]
    BadSheet { sheet: u64, bits: u32 },
    #[error("arity mismatch: expected {expected}, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("composition error: {0}")]
    Composition(String),
    #[error(transparent)]
    Linkage(#[from] LinkageError),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// What the parameter tuple of a gadget is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GadgetKind {
    /// Parameters are input positions; outputs are computed.
    Function,
    /// No inputs; the parameter is the position of the (single) output vertex.
    Set,
}

/// Writes positions of one gadget's vertices into a shared realization buffer.
///
/// Gadgets are composed by offsetting their vertex ids and by stacking
/// similarities, so nested gadgets write straight into the final buffer.
pub struct Placement<'a> {
    real: &'a mut Realization,
    offset: u32,
    xf: Frame<'a>,
}

enum Frame<'a> {
    Identity,
    Borrowed(&'a Similarity),
    Owned(Similarity),
}

impl Frame<'_> {
    fn get(&self) -> Option<&Similarity> {
        match self {
            Frame::Identity => None,
            Frame::Borrowed(s) => Some(s),
            Frame::Owned(s) => Some(s),
        }
    }
}

impl<'a> Placement<'a> {
    pub fn new(real: &'a mut Realization) -> Self {
        Self { real, offset: 0, xf: Frame::Identity }
    }

    pub fn put(&mut self, v: VertexId, p: &Point) {
        let g = VertexId(v.0 + self.offset);
        match self.xf.get() {
            None => self.real.set_point(g, p),
            Some(s) => s.apply_into(p, self.real.slot_mut(g)),
        }
    }

    /// Placement for a sub-gadget whose ids start at `offset` and whose local
    /// frame is mapped into ours by `xf`.
    pub fn sub<'b>(&'b mut self, offset: u32, xf: Option<&'b Similarity>) -> Placement<'b> {
        let xf = match (self.xf.get(), xf) {
            (None, None) => Frame::Identity,
            (Some(a), None) => Frame::Borrowed(a),
            (None, Some(b)) => Frame::Borrowed(b),
            (Some(a), Some(b)) => Frame::Owned(a.compose(b)),
        };
        Placement { real: &mut *self.real, offset: self.offset + offset, xf }
    }
}

pub type PlaceFn = dyn Fn(&[Point], &[bool], &mut Placement<'_>) -> Result<Vec<Point>, GadgetError> + Send + Sync;
pub type EvalFn = dyn Fn(&[Point]) -> Vec<Point> + Send + Sync;

/// Membership condition added by serial composition: `map(x)` must land in `domain`.
#[derive(Clone)]
pub struct Guard {
    pub map: Arc<EvalFn>,
    pub domain: Domain,
}

/// Number of sheets, always a power of two here.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sheets {
    pub bits: u32,
}

impl Sheets {
    pub fn count(self) -> Option<u64> {
        (self.bits < 64).then(|| 1u64 << self.bits)
    }
}

impl fmt::Display for Sheets {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.count() {
            Some(c) if self.bits <= 52 => write!(f, "{c}"),
            _ => write!(f, "2^{}", self.bits),
        }
    }
}

/// Decode a sheet index into choice bits (bit j of the index is choice j).
pub fn sheet_bits(sheet: u64, bits: u32) -> Result<Vec<bool>, GadgetError> {
    if bits < 64 && sheet >> bits != 0 {
        return Err(GadgetError::BadSheet { sheet, bits });
    }
    Ok((0..bits).map(|j| j < 64 && (sheet >> j) & 1 == 1).collect())
}

#[derive(Clone)]
pub struct FunctionalLinkage {
    pub linkage: Linkage,
    pub inputs: Vec<VertexId>,
    pub outputs: Vec<VertexId>,
    pub domain: Domain,
    pub kind: GadgetKind,
    /// Gadget counts by kind, for provenance.
    pub census: BTreeMap<String, usize>,
    sheet_bits: u32,
    image: Option<Domain>,
    guards: Vec<Guard>,
    place: Arc<PlaceFn>,
    eval: Arc<EvalFn>,
}

impl fmt::Debug for FunctionalLinkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionalLinkage")
            .field("vertices", &self.linkage.vertex_count())
            .field("edges", &self.linkage.edge_count())
            .field("inputs", &self.inputs)
            .field("outputs", &self.outputs)
            .field("domain", &self.domain)
            .field("sheet_bits", &self.sheet_bits)
            .finish()
    }
}

impl FunctionalLinkage {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        name: &str,
        linkage: Linkage,
        inputs: Vec<VertexId>,
        outputs: Vec<VertexId>,
        domain: Domain,
        kind: GadgetKind,
        sheet_bits: u32,
        place: Arc<PlaceFn>,
        eval: Arc<EvalFn>,
    ) -> Self {
        let census = BTreeMap::from([(name.to_string(), 1)]);
        Self { linkage, inputs, outputs, domain, kind, census, sheet_bits, image: None, guards: Vec::new(), place, eval }
    }

    pub(crate) fn with_image(mut self, image: Domain) -> Self {
        self.image = Some(image);
        self
    }

    pub(crate) fn with_census(mut self, census: BTreeMap<String, usize>) -> Self {
        self.census = census;
        self
    }

    pub(crate) fn with_guards(mut self, guards: Vec<Guard>) -> Self {
        self.guards = guards;
        self
    }

    pub(crate) fn place_fn(&self) -> Arc<PlaceFn> {
        self.place.clone()
    }

    pub(crate) fn eval_fn(&self) -> Arc<EvalFn> {
        self.eval.clone()
    }

    pub fn guards(&self) -> &[Guard] {
        &self.guards
    }

    /// Known bound on the outputs over the domain, if any.
    pub fn image(&self) -> Option<&Domain> {
        self.image.as_ref()
    }

    pub fn sheets(&self) -> Sheets {
        Sheets { bits: self.sheet_bits }
    }

    pub fn sheet_bits(&self) -> u32 {
        self.sheet_bits
    }

    /// Vertices whose positions form the parameter tuple.
    pub fn parameter_vertices(&self) -> &[VertexId] {
        match self.kind {
            GadgetKind::Function => &self.inputs,
            GadgetKind::Set => &self.outputs,
        }
    }

    pub fn arity(&self) -> usize {
        self.parameter_vertices().len()
    }

    /// Domain membership including composition guards.
    pub fn in_domain(&self, x: &[Point]) -> bool {
        self.domain.contains(x) && self.guards.iter().all(|g| g.domain.contains(&(g.map)(x)))
    }

    /// Random domain point, rejecting guard violations.
    pub fn sample_domain<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Option<Vec<Point>> {
        for _ in 0..1000 {
            let x = self.domain.sample(rng)?;
            if self.in_domain(&x) {
                return Some(x);
            }
        }
        None
    }

    pub fn interior_point(&self) -> Option<Vec<Point>> {
        self.domain.interior_point().filter(|x| self.in_domain(x))
    }

    /// The function computed (identity on the parameter for set gadgets).
    pub fn eval(&self, x: &[Point]) -> Vec<Point> {
        (self.eval)(x)
    }

    /// Closed-form realization over `x` on the given sheet.
    pub fn forward(&self, x: &[Point], sheet: u64) -> Result<Realization, GadgetError> {
        let bits = sheet_bits(sheet, self.sheet_bits)?;
        self.forward_bits(x, &bits)
    }

    pub fn forward_bits(&self, x: &[Point], bits: &[bool]) -> Result<Realization, GadgetError> {
        if bits.len() != self.sheet_bits as usize {
            return Err(GadgetError::BadSheet { sheet: 0, bits: self.sheet_bits });
        }
        if x.len() != self.arity() {
            return Err(GadgetError::Arity { expected: self.arity(), got: x.len() });
        }
        if !self.in_domain(x) {
            return Err(GadgetError::OutOfDomain(format!("{:?}", x.iter().map(|p| p.as_slice().to_vec()).collect::<Vec<_>>())));
        }
        let mut real = Realization::for_linkage(&self.linkage);
        {
            let mut out = Placement::new(&mut real);
            (self.place)(x, bits, &mut out)?;
        }
        for (&v, a) in self.linkage.fixed() {
            real.set_point(v, a);
        }
        if let Some(v) = self.linkage.vertices().find(|&v| !real.is_assigned(v)) {
            return Err(GadgetError::Linkage(LinkageError::MissingAssignment(v)));
        }
        Ok(real)
    }

    /// Same gadget conjugated by a similarity: computes S∘f∘S⁻¹ on S(U).
    pub fn transformed(&self, s: &Similarity) -> Result<Self, GadgetError> {
        let linkage = self.linkage.apply_similarity(s)?;
        let inner = self.place.clone();
        let s1 = s.clone();
        let place: Arc<PlaceFn> = Arc::new(move |x, bits, out| {
            let xl: Vec<Point> = x.iter().map(|p| s1.apply_inverse(p)).collect();
            let y = {
                let mut sub = out.sub(0, Some(&s1));
                inner(&xl, bits, &mut sub)?
            };
            Ok(y.iter().map(|p| s1.apply(p)).collect())
        });
        let f = self.eval.clone();
        let s2 = s.clone();
        let eval: Arc<EvalFn> = Arc::new(move |x| {
            let xl: Vec<Point> = x.iter().map(|p| s2.apply_inverse(p)).collect();
            f(&xl).iter().map(|p| s2.apply(p)).collect()
        });
        let guards = self
            .guards
            .iter()
            .map(|g| {
                let m = g.map.clone();
                let s3 = s.clone();
                Guard {
                    map: Arc::new(move |x: &[Point]| {
                        let xl: Vec<Point> = x.iter().map(|p| s3.apply_inverse(p)).collect();
                        m(&xl)
                    }),
                    domain: g.domain.clone(),
                }
            })
            .collect();
        Ok(Self {
            linkage,
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
            domain: self.domain.map(s),
            kind: self.kind,
            census: self.census.clone(),
            sheet_bits: self.sheet_bits,
            image: self.image.as_ref().map(|d| d.map(s)),
            guards,
            place,
            eval,
        })
    }

    /// Keep only the listed outputs (by position).
    pub fn select_outputs(&self, keep: &[usize]) -> Result<Self, GadgetError> {
        if self.kind != GadgetKind::Function {
            return Err(GadgetError::Unsupported("output selection on a set gadget".into()));
        }
        for &k in keep {
            if k >= self.outputs.len() {
                return Err(GadgetError::Arity { expected: self.outputs.len(), got: k + 1 });
            }
        }
        let mut out = self.clone();
        out.outputs = keep.iter().map(|&k| self.outputs[k]).collect();
        let inner = self.place.clone();
        let ks = keep.to_vec();
        out.place = Arc::new(move |x, bits, pl| {
            let y = inner(x, bits, pl)?;
            Ok(ks.iter().map(|&k| y[k].clone()).collect())
        });
        let f = self.eval.clone();
        let ks = keep.to_vec();
        out.eval = Arc::new(move |x| {
            let y = f(x);
            ks.iter().map(|&k| y[k].clone()).collect()
        });
        out.image = None;
        Ok(out)
    }

    /// Replace the underlying linkage, keeping the forward map (used to build
    /// deliberately broken gadgets in tests).
    pub fn with_linkage(&self, linkage: Linkage) -> Self {
        let mut out = self.clone();
        out.linkage = linkage;
        out
    }

    pub fn vertex(&self, label: &str) -> Option<VertexId> {
        self.linkage.find_label(label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sheet_decoding() {
        assert_eq!(sheet_bits(5, 3).unwrap(), vec![true, false, true]);
        assert!(sheet_bits(8, 3).is_err());
        assert!(sheet_bits(0, 0).unwrap().is_empty());
        assert_eq!(Sheets { bits: 3 }.to_string(), "8");
        assert_eq!(Sheets { bits: 80 }.to_string(), "2^80");
    }
}
