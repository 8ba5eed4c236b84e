//! Serial and parallel composition of functional linkages, and fanout.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::gadgets::domain::Domain;
use crate::gadgets::functional::{EvalFn, FunctionalLinkage, GadgetError, GadgetKind, Guard, PlaceFn, Placement};
use crate::geom::{Point, Similarity};
use crate::linkage::{Linkage, VertexId};

/// A gadget appended into an [`Assembly`]: its id offset and forward map.
#[derive(Clone)]
pub(crate) struct Mounted {
    pub offset: u32,
    place: Arc<PlaceFn>,
}

impl Mounted {
    pub fn id(&self, v: VertexId) -> VertexId {
        VertexId(v.0 + self.offset)
    }

    pub fn ids(&self, vs: &[VertexId]) -> Vec<VertexId> {
        vs.iter().map(|&v| self.id(v)).collect()
    }

    pub fn place(&self, x: &[Point], bits: &[bool], out: &mut Placement<'_>) -> Result<Vec<Point>, GadgetError> {
        let mut sub = out.sub(self.offset, None);
        (self.place)(x, bits, &mut sub)
    }

    /// Place in a frame mapped into the parent's by `xf`; returns outputs in the parent frame.
    pub fn place_in(
        &self,
        xf: &Similarity,
        x: &[Point],
        bits: &[bool],
        out: &mut Placement<'_>,
    ) -> Result<Vec<Point>, GadgetError> {
        let xl: Vec<Point> = x.iter().map(|p| xf.apply_inverse(p)).collect();
        let y = {
            let mut sub = out.sub(self.offset, Some(xf));
            (self.place)(&xl, bits, &mut sub)?
        };
        Ok(y.iter().map(|p| xf.apply(p)).collect())
    }
}

/// Accumulates gadgets into one linkage, then glues everything in one pass.
pub(crate) struct Assembly {
    linkage: Linkage,
    pairs: Vec<(VertexId, VertexId)>,
    census: BTreeMap<String, usize>,
}

impl Assembly {
    pub fn new(n: usize) -> Result<Self, GadgetError> {
        Ok(Self { linkage: Linkage::new(n)?, pairs: Vec::new(), census: BTreeMap::new() })
    }

    pub fn linkage_mut(&mut self) -> &mut Linkage {
        &mut self.linkage
    }

    /// Append a gadget; its internal labels are dropped.
    pub fn mount(&mut self, f: &FunctionalLinkage) -> Result<Mounted, GadgetError> {
        let offset = self.linkage.append(&f.linkage)?;
        for v in f.linkage.vertices() {
            self.linkage.set_label(VertexId(v.0 + offset), None)?;
        }
        merge_census(&mut self.census, &f.census);
        Ok(Mounted { offset, place: f.place_fn() })
    }

    /// Identify `absorb` with `keep`.
    pub fn glue(&mut self, keep: VertexId, absorb: VertexId) {
        self.pairs.push((keep, absorb));
    }

    pub fn finish(self) -> Result<(Linkage, BTreeMap<String, usize>), GadgetError> {
        let l = if self.pairs.is_empty() { self.linkage } else { self.linkage.glue_many(&self.pairs)? };
        Ok((l, self.census))
    }
}

pub(crate) fn merge_census(into: &mut BTreeMap<String, usize>, from: &BTreeMap<String, usize>) {
    for (k, v) in from {
        *into.entry(k.clone()).or_default() += v;
    }
}

fn require_function(f: &FunctionalLinkage) -> Result<(), GadgetError> {
    if f.kind != GadgetKind::Function {
        return Err(GadgetError::Unsupported("composition needs function gadgets".into()));
    }
    Ok(())
}

/// Search for a point of `f`'s domain satisfying `ok`.
fn witness(f: &FunctionalLinkage, ok: impl Fn(&[Point]) -> bool) -> bool {
    if let Some(x) = f.interior_point() {
        if ok(&x) {
            return true;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..512 {
        match f.sample_domain(&mut rng) {
            Some(x) if ok(&x) => return true,
            Some(_) => {}
            None => return false,
        }
    }
    false
}

fn split_bits(bits: &[bool], k: u32) -> (&[bool], &[bool]) {
    bits.split_at(k as usize)
}

/// g ∘ f: outputs of `f` glued to inputs of `g`.
pub fn compose_serial(f: &FunctionalLinkage, g: &FunctionalLinkage) -> Result<FunctionalLinkage, GadgetError> {
    require_function(f)?;
    require_function(g)?;
    if f.outputs.len() != g.inputs.len() {
        return Err(GadgetError::Arity { expected: g.inputs.len(), got: f.outputs.len() });
    }
    let contained = f.image().is_some_and(|im| im.within(&g.domain));
    let fe = f.eval_fn();
    if !contained && !witness(f, |x| g.in_domain(&fe(x))) {
        return Err(GadgetError::Composition("image of the first gadget misses the second's domain".into()));
    }

    let mut asm = Assembly::new(f.linkage.dim())?;
    let mf = asm.mount(f)?;
    let mg = asm.mount(g)?;
    for (&o, &i) in f.outputs.iter().zip(&g.inputs) {
        asm.glue(mf.id(o), mg.id(i));
    }
    let (linkage, census) = asm.finish()?;

    let mut guards = f.guards().to_vec();
    if !contained {
        guards.push(Guard { map: fe.clone(), domain: g.domain.clone() });
    }
    for gd in g.guards() {
        let (m, inner) = (gd.map.clone(), fe.clone());
        guards.push(Guard { map: Arc::new(move |x: &[Point]| m(&inner(x))), domain: gd.domain.clone() });
    }

    let bf = f.sheet_bits();
    let (pf, pg) = (mf.clone(), mg.clone());
    let place: Arc<PlaceFn> = Arc::new(move |x, bits, out| {
        let (b0, b1) = split_bits(bits, bf);
        let y = pf.place(x, b0, out)?;
        pg.place(&y, b1, out)
    });
    let (e0, e1) = (f.eval_fn(), g.eval_fn());
    let eval: Arc<EvalFn> = Arc::new(move |x| e1(&e0(x)));

    let mut out = FunctionalLinkage::from_parts(
        "serial",
        linkage,
        mf.ids(&f.inputs),
        mg.ids(&g.outputs),
        f.domain.clone(),
        GadgetKind::Function,
        bf + g.sheet_bits(),
        place,
        eval,
    )
    .with_census(census)
    .with_guards(guards);
    if let Some(im) = g.image() {
        out = out.with_image(im.clone());
    }
    Ok(out)
}

fn shifted_guards(f: &FunctionalLinkage, lo: usize, hi: usize) -> Vec<Guard> {
    f.guards()
        .iter()
        .map(|gd| {
            let m = gd.map.clone();
            Guard { map: Arc::new(move |x: &[Point]| m(&x[lo..hi])), domain: gd.domain.clone() }
        })
        .collect()
}

/// f₀ × f₁ on U₀ × U₁.
pub fn compose_parallel(f0: &FunctionalLinkage, f1: &FunctionalLinkage) -> Result<FunctionalLinkage, GadgetError> {
    require_function(f0)?;
    require_function(f1)?;
    let (k0, k1) = (f0.inputs.len(), f1.inputs.len());
    let mut asm = Assembly::new(f0.linkage.dim())?;
    let m0 = asm.mount(f0)?;
    let m1 = asm.mount(f1)?;
    let (linkage, census) = asm.finish()?;

    let mut guards = shifted_guards(f0, 0, k0);
    guards.extend(shifted_guards(f1, k0, k0 + k1));
    let mut inputs = m0.ids(&f0.inputs);
    inputs.extend(m1.ids(&f1.inputs));
    let mut outputs = m0.ids(&f0.outputs);
    outputs.extend(m1.ids(&f1.outputs));
    let mut slots = f0.domain.slots();
    slots.extend(f1.domain.slots());
    let domain = Domain::product(slots);

    let b0 = f0.sheet_bits();
    let (p0, p1) = (m0.clone(), m1.clone());
    let place: Arc<PlaceFn> = Arc::new(move |x, bits, out| {
        let (s0, s1) = split_bits(bits, b0);
        let mut y = p0.place(&x[..k0], s0, out)?;
        y.extend(p1.place(&x[k0..], s1, out)?);
        Ok(y)
    });
    let (e0, e1) = (f0.eval_fn(), f1.eval_fn());
    let eval: Arc<EvalFn> = Arc::new(move |x| {
        let mut y = e0(&x[..k0]);
        y.extend(e1(&x[k0..]));
        y
    });
    let mut out =
        FunctionalLinkage::from_parts("parallel", linkage, inputs, outputs, domain, GadgetKind::Function, b0 + f1.sheet_bits(), place, eval)
            .with_census(census)
            .with_guards(guards);
    if let (Some(a), Some(b)) = (f0.image(), f1.image()) {
        let mut parts = a.slots();
        parts.extend(b.slots());
        out = out.with_image(Domain::product(parts));
    }
    Ok(out)
}

/// x ↦ (f₀(x), f₁(x)) on U₀ ∩ U₁.
pub fn fanout(f0: &FunctionalLinkage, f1: &FunctionalLinkage) -> Result<FunctionalLinkage, GadgetError> {
    require_function(f0)?;
    require_function(f1)?;
    if f0.inputs.len() != f1.inputs.len() {
        return Err(GadgetError::Arity { expected: f0.inputs.len(), got: f1.inputs.len() });
    }
    let same = f0.domain == f1.domain;
    let disjoint = !same && !f0.domain.within(&f1.domain) && !witness(f0, |x| f1.in_domain(x));
    if disjoint {
        return Err(GadgetError::Composition("fanout of gadgets with disjoint domains".into()));
    }
    let domain = if same || f0.domain.within(&f1.domain) {
        f0.domain.clone()
    } else if f1.domain.within(&f0.domain) {
        f1.domain.clone()
    } else {
        let parts = f0.domain.slots().into_iter().zip(f1.domain.slots()).map(|(a, b)| Domain::intersection(a, b)).collect();
        Domain::product(parts)
    };

    let mut asm = Assembly::new(f0.linkage.dim())?;
    let m0 = asm.mount(f0)?;
    let m1 = asm.mount(f1)?;
    for (&a, &b) in f0.inputs.iter().zip(&f1.inputs) {
        asm.glue(m0.id(a), m1.id(b));
    }
    let (linkage, census) = asm.finish()?;
    let mut guards = f0.guards().to_vec();
    guards.extend(f1.guards().iter().cloned());
    let mut outputs = m0.ids(&f0.outputs);
    outputs.extend(m1.ids(&f1.outputs));

    let b0 = f0.sheet_bits();
    let (p0, p1) = (m0.clone(), m1.clone());
    let place: Arc<PlaceFn> = Arc::new(move |x, bits, out| {
        let (s0, s1) = split_bits(bits, b0);
        let mut y = p0.place(x, s0, out)?;
        y.extend(p1.place(x, s1, out)?);
        Ok(y)
    });
    let (e0, e1) = (f0.eval_fn(), f1.eval_fn());
    let eval: Arc<EvalFn> = Arc::new(move |x| {
        let mut y = e0(x);
        y.extend(e1(x));
        y
    });
    let mut out = FunctionalLinkage::from_parts(
        "fanout",
        linkage,
        m0.ids(&f0.inputs),
        outputs,
        domain,
        GadgetKind::Function,
        b0 + f1.sheet_bits(),
        place,
        eval,
    )
    .with_census(census)
    .with_guards(guards);
    if let (Some(a), Some(b)) = (f0.image(), f1.image()) {
        let mut parts = a.slots();
        parts.extend(b.slots());
        out = out.with_image(Domain::product(parts));
    }
    Ok(out)
}
