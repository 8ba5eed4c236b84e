//! Linkages whose (semi)configuration spaces are presented sets.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::presentation::QuasiAlgPresentation;
use super::SetError;
use crate::compiler::{compile, Compiled, Flavor};
use crate::gadgets::FunctionalLinkage;
use crate::geom::{basis, Point};
use crate::linkage::{Linkage, Realization, VertexId};
use crate::numeric::{sample_configs_with, solve_realization, Samples, SolveOptions, StartFn};

/// Inequality outputs may sit anywhere in [0, 2d]; sampled bound points must respect it.
const D_CHECK_SAMPLES: usize = 2000;

/// A set linkage: the compiled map x ↦ (r_i(x)e1) with its outputs pinned.
#[derive(Clone)]
pub struct SetLinkage {
    pub linkage: Linkage,
    /// W: the vertices carrying the point tuple x.
    pub inputs: Vec<VertexId>,
    /// Output vertex of every r_i.
    pub outputs: Vec<VertexId>,
    /// Fixed ends of the inequality tethers.
    pub tether_anchors: Vec<VertexId>,
    pub cable: Option<f64>,
    pub presentation: QuasiAlgPresentation,
    pub compiled: Compiled,
}

impl std::fmt::Debug for SetLinkage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SetLinkage")
            .field("vertices", &self.linkage.vertex_count())
            .field("inputs", &self.inputs)
            .field("outputs", &self.outputs)
            .field("sheet_bits", &self.sheet_bits())
            .finish()
    }
}

fn reject_non_algebraic(pres: &QuasiAlgPresentation) -> Result<(), SetError> {
    if !pres.is_algebraic() {
        return Err(SetError::Inequalities(pres.polys.m - pres.eq_count));
    }
    Ok(())
}

fn compile_presentation(pres: &QuasiAlgPresentation, flavor: Flavor) -> Result<Compiled, SetError> {
    if pres.dim() < 3 {
        return Err(SetError::Dimension(pres.dim()));
    }
    Ok(compile(&pres.polys, &pres.bound, flavor)?)
}

fn pin_outputs(fl: &FunctionalLinkage, upto: usize) -> Result<Linkage, SetError> {
    let n = fl.linkage.dim();
    let mut pins = BTreeMap::new();
    for (i, &v) in fl.outputs.iter().enumerate().take(upto) {
        match fl.linkage.anchor(v) {
            Some(a) if a.norm() > 0.0 => return Err(SetError::ConstantNonzero(i)),
            Some(_) => {}
            None => {
                pins.insert(v, Point::zeros(n));
            }
        }
    }
    Ok(fl.linkage.fix_vertices(&pins)?)
}

fn assemble(pres: &QuasiAlgPresentation, flavor: Flavor, cable: Option<f64>) -> Result<SetLinkage, SetError> {
    let compiled = compile_presentation(pres, flavor)?;
    let fl = &compiled.gadget;
    let mut linkage = pin_outputs(fl, pres.eq_count)?;
    let mut tether_anchors = Vec::new();
    if let Some(d) = cable {
        let e1 = basis(pres.dim(), 0);
        for (i, &v) in fl.outputs.iter().enumerate().skip(pres.eq_count) {
            if let Some(a) = fl.linkage.anchor(v) {
                if a[0] < 0.0 || a[0] > 2.0 * d {
                    return Err(SetError::ConstantNonzero(i));
                }
            }
            let (next, u) = linkage.tether(v, &e1 * d, d)?;
            linkage = next;
            tether_anchors.push(u);
        }
    }
    Ok(SetLinkage {
        linkage,
        inputs: fl.inputs.clone(),
        outputs: fl.outputs.clone(),
        tether_anchors,
        cable,
        presentation: pres.clone(),
        compiled,
    })
}

/// Outputs fixed at 0 over a classical compile; SC(L, W) is the zero set.
pub fn build_semiconfig(pres: &QuasiAlgPresentation) -> Result<SetLinkage, SetError> {
    reject_non_algebraic(pres)?;
    assemble(pres, Flavor::Classical, None)
}

/// The same linkage read as a whole configuration space: C(L) ≅ X × F with
/// |F| = 2^sheet_bits, every position a function of x and the sheet.
pub fn build_config_classical(pres: &QuasiAlgPresentation) -> Result<SetLinkage, SetError> {
    build_semiconfig(pres)
}

/// Strong compile with equalities fixed at 0 and each inequality output on a
/// cable of length `d` to d·e1, so C(L) ≅ X.
pub fn build_config_cabled(pres: &QuasiAlgPresentation, d: f64, seed: u64) -> Result<SetLinkage, SetError> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(SetError::Cable(format!("cable length must be positive, got {d}")));
    }
    if pres.eq_count < pres.polys.m {
        let mut rng = crate::numeric::sampling::rng_for(seed, 0x6361);
        for _ in 0..D_CHECK_SAMPLES {
            let x = pres.sample_bound(&mut rng);
            let r = pres.values(&x);
            if let Some((i, v)) = r.iter().enumerate().skip(pres.eq_count).find(|(_, &v)| v > 2.0 * d) {
                return Err(SetError::Cable(format!("r{} reaches {v} > 2d = {} on the bound", i + 1, 2.0 * d)));
            }
        }
    }
    assemble(pres, Flavor::Cabled, Some(d))
}

/// `k` extra isolated free vertices; C(L) picks up a factor (Rⁿ)ᵏ.
pub fn add_isolated(l: &Linkage, k: usize) -> (Linkage, Vec<VertexId>) {
    let mut out = l.clone();
    let vs = (0..k).map(|_| out.add_vertex()).collect();
    (out, vs)
}

impl SetLinkage {
    pub fn sheet_bits(&self) -> u32 {
        self.compiled.gadget.sheet_bits()
    }

    /// The functional gadget over the set linkage, for preimage counts with W pinned.
    pub fn functional(&self) -> FunctionalLinkage {
        self.compiled.gadget.with_linkage(self.linkage.clone())
    }

    /// The compiled realization over `x` on `sheet`, widened to this linkage.
    /// A realization of the set linkage exactly when x lies in the set.
    pub fn lift(&self, x: &[Point], sheet: u64) -> Result<Realization, SetError> {
        let phi = self.compiled.gadget.forward(x, sheet)?;
        let mut out = Realization::for_linkage(&self.linkage);
        for v in self.compiled.gadget.linkage.vertices() {
            if let Some(p) = phi.get(v) {
                out.set_point(v, &p);
            }
        }
        for (&v, a) in self.linkage.fixed() {
            out.set_point(v, a);
        }
        Ok(out)
    }

    /// Starts from lifts of random bound points on random sheets.
    pub fn start_fn(&self) -> Box<StartFn> {
        let me = self.clone();
        Box::new(move |rng: &mut ChaCha8Rng| {
            let bits = me.sheet_bits();
            for _ in 0..100 {
                let Some(x) = me.compiled.gadget.sample_domain(rng) else { break };
                let sheet = if bits == 0 {
                    0
                } else if bits >= 64 {
                    rng.gen()
                } else {
                    rng.gen_range(0..1u64 << bits)
                };
                if let Ok(phi) = me.lift(&x, sheet) {
                    return phi;
                }
            }
            Realization::for_linkage(&me.linkage)
        })
    }

    /// Up to `count` realizations by descent from lifted starts.
    pub fn sample(&self, count: usize, seed: u64, opts: &SolveOptions) -> Result<Samples, SetError> {
        let start = self.start_fn();
        Ok(sample_configs_with(&self.linkage, &BTreeMap::new(), count, seed, opts, Some(start.as_ref()))?)
    }

    /// The point tuple W of a realization.
    pub fn point_of(&self, phi: &Realization) -> Result<Vec<Point>, SetError> {
        Ok(phi.restrict(&self.inputs)?)
    }

    /// Extend a set point to a realization: W pinned at `x`, descent from the lift.
    pub fn extend(&self, x: &[Point], sheet: u64, opts: &SolveOptions) -> Result<Realization, SetError> {
        let pins: BTreeMap<VertexId, Point> = self.inputs.iter().cloned().zip(x.iter().cloned()).collect();
        let guess = self.lift(x, sheet)?;
        Ok(solve_realization(&self.linkage, &pins, Some(&guess), opts)?)
    }
}
