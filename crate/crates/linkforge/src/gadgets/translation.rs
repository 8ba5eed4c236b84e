//! Translation z -> z + z0.

use std::sync::Arc;

use super::basic::add_basic;
use super::domain::Domain;
use super::functional::{EvalFn, FunctionalLinkage, GadgetError, GadgetKind, PlaceFn};
use super::parts::{add_parallelogram, check_dim, positive, put_midpoints, solve_basic, Anchors};
use crate::geom::{basis, zero, Point};
use crate::linkage::Linkage;

/// Translation by `z0` with restricted domain Ball(0, r).
pub fn mk_translation(n: usize, z0: &Point, r: f64, strong: bool) -> Result<FunctionalLinkage, GadgetError> {
    mk_translation_on(n, z0, &zero(n), r, strong)
}

/// Translation by `z0` with restricted domain Ball(center, r).
pub fn mk_translation_on(n: usize, z0: &Point, center: &Point, r: f64, strong: bool) -> Result<FunctionalLinkage, GadgetError> {
    positive("r", r)?;
    check_dim(n, z0)?;
    check_dim(n, center)?;
    let e = z0.norm();
    if !(e > 0.0) {
        return Err(GadgetError::BadParameter("zero translation (identity is elided)".into()));
    }
    let a = 2.5 * r;
    let b = 1.75 * r;
    let e2 = basis(n, 1);
    let z1 = center - &e2 * a;

    let mut l = Linkage::new(n)?;
    let mut anchors = Anchors::default();
    let va = l.add_fixed(Some("A"), z1.clone())?;
    let vb = l.add_labeled("B");
    let vc = l.add_labeled("C");
    add_basic(&mut l, &mut anchors, va, &z1, vb, vc, a, b, &e2, strong.then_some(r))?;
    let vf = l.add_fixed(Some("F"), &z1 + z0)?;
    let vg = l.add_labeled("G");
    let vh = l.add_labeled("H");
    l.rigid(va, vf, e)?;
    l.rigid(vb, vg, e)?;
    l.rigid(vc, vh, e)?;
    l.rigid(vf, vg, a)?;
    l.rigid(vg, vh, b)?;
    let m1 = add_parallelogram(&mut l, va, vb, vf, vg, a, e)?;
    let m2 = add_parallelogram(&mut l, vb, vc, vg, vh, b, e)?;

    let domain = Domain::ball(center, r);
    let image = Domain::ball(&(center + z0), r);
    let (zz1, shift, w0p) = (z1.clone(), z0.clone(), e2.clone());
    let pa = z1.clone();
    let pf = &z1 + z0;
    let place: Arc<PlaceFn> = Arc::new(move |x, bits, out| {
        let flip = bits.first().copied().unwrap_or(false);
        let c = &x[0];
        let bpos = solve_basic(&zz1, a, b, &w0p, c, flip)?;
        let g = &bpos + &shift;
        let h = c + &shift;
        out.put(vb, &bpos);
        out.put(vc, c);
        out.put(vg, &g);
        out.put(vh, &h);
        put_midpoints(out, m1, &pa, &bpos, &pf, &g);
        put_midpoints(out, m2, &bpos, c, &g, &h);
        Ok(vec![h])
    });
    let shift2 = z0.clone();
    let eval: Arc<EvalFn> = Arc::new(move |x| vec![&x[0] + &shift2]);
    let bits = if strong { 0 } else { 1 };
    Ok(FunctionalLinkage::from_parts("translation", l, vec![vc], vec![vh], domain, GadgetKind::Function, bits, place, eval)
        .with_image(image))
}

/// Identity on Ball(center, r) with distinct input and output vertices:
/// a translation followed by its inverse.
pub fn mk_wire(n: usize, center: &Point, r: f64, strong: bool) -> Result<FunctionalLinkage, GadgetError> {
    let t = basis(n, 0) * r.max(1.0);
    let there = mk_translation_on(n, &t, center, r, strong)?;
    let back = mk_translation_on(n, &(-&t), &(center + &t), r, strong)?;
    let f = crate::compiler::compose::compose_serial(&there, &back)?;
    let eval: Arc<EvalFn> = Arc::new(|x| x.to_vec());
    Ok(FunctionalLinkage::from_parts(
        "wire",
        f.linkage.clone(),
        f.inputs.clone(),
        f.outputs.clone(),
        f.domain.clone(),
        GadgetKind::Function,
        f.sheet_bits(),
        f.place_fn(),
        eval,
    )
    .with_image(Domain::ball(center, r)))
}
