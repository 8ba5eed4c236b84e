//! Scalar multiplication, constants and the average gadget.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::basic::{add_basic, mk_pantograph, unit_in_plane};
use super::domain::Domain;
use super::functional::{EvalFn, FunctionalLinkage, GadgetError, GadgetKind, PlaceFn};
use super::parts::{check_dim, positive, solve_basic, Anchors};
use super::translation::mk_translation_on;
use crate::compiler::compose::{compose_serial, fanout, Assembly};
use crate::geom::{basis, zero, EuclideanMotion, Point, Similarity};
use crate::linkage::VertexId;

/// Pantograph-based z ↦ λz with the pantograph's pivot fixed at the origin.
///
/// The driving basic linkage has its circle (radius `rho`) about the origin in
/// the x1x2 plane and arm length `beta`; the domain is Ball(rho·w0p, radius).
/// Returns the gadget and the pivot vertex.
pub(crate) fn native_scale(
    n: usize,
    lambda: f64,
    rho: f64,
    beta: f64,
    w0p: &Point,
    radius: f64,
    strong: bool,
) -> Result<(FunctionalLinkage, VertexId), GadgetError> {
    positive("radius", radius)?;
    if !(lambda.is_finite() && lambda != 0.0 && lambda != 1.0) {
        return Err(GadgetError::BadParameter(format!("native scale needs λ ∉ {{0, 1}}, got {lambda}")));
    }
    if !(radius < beta && beta <= rho) {
        return Err(GadgetError::BadParameter("need radius < arm ≤ circle radius".into()));
    }
    let w0p = unit_in_plane(w0p)?;
    // (pantograph ratio, arm a, arm b)
    let (c, pa, pb) = if lambda > 1.0 {
        (lambda - 1.0, rho, beta)
    } else if lambda > 0.0 {
        (1.0 / lambda - 1.0, rho * lambda, beta * lambda)
    } else {
        (-lambda, beta, rho)
    };
    let p = mk_pantograph(n, c, pa, pb)?;
    let mut l = p.linkage.clone();
    let o = zero(n);
    let (pivot, circ, input, output) = if lambda > 1.0 {
        (p.a, p.e, p.b, p.c)
    } else if lambda > 0.0 {
        (p.a, p.d, p.c, p.b)
    } else {
        (p.b, p.e, p.a, p.c)
    };
    l = l.fix_vertices(&BTreeMap::from([(pivot, o.clone())]))?;
    let mut anchors = Anchors::default();
    add_basic(&mut l, &mut anchors, pivot, &o, circ, input, rho, beta, &w0p, strong.then_some(radius))?;

    let center = &w0p * rho;
    let domain = Domain::ball(&center, radius);
    let image = Domain::ball(&(&center * lambda), radius * lambda.abs());
    let w = w0p.clone();
    let place: Arc<PlaceFn> = Arc::new(move |x, bits, out| {
        let flip = bits.first().copied().unwrap_or(false);
        let z = &x[0];
        let o = zero(z.len());
        let q = solve_basic(&o, rho, beta, &w, z, flip)?;
        let pos = if lambda > 1.0 {
            p.positions(&o, &(&q / rho), &((z - &q) / beta))
        } else if lambda > 0.0 {
            p.positions(&o, &(&q / rho), &((z - &q) / beta))
        } else {
            p.positions(z, &((&q - z) / beta), &(-&q / rho))
        };
        p.place(out, &pos);
        Ok(vec![if lambda > 1.0 || lambda < 0.0 { pos.c } else { pos.b }])
    });
    let eval: Arc<EvalFn> = Arc::new(move |x| vec![&x[0] * lambda]);
    let bits = if strong { 0 } else { 1 };
    let fl = FunctionalLinkage::from_parts("scale", l, vec![input], vec![output], domain, GadgetKind::Function, bits, place, eval)
        .with_image(image);
    Ok((fl, pivot))
}

/// The constant map onto `value` on Ball(center, r): an isolated input and a fixed output.
pub fn mk_constant(n: usize, value: &Point, center: &Point, r: f64) -> Result<FunctionalLinkage, GadgetError> {
    positive("r", r)?;
    check_dim(n, value)?;
    check_dim(n, center)?;
    let mut l = crate::linkage::Linkage::new(n)?;
    let x = l.add_labeled("x");
    let y = l.add_fixed(Some("y"), value.clone())?;
    let v = value.clone();
    let place_val = v.clone();
    let place: Arc<PlaceFn> = Arc::new(move |inp, _bits, out| {
        out.put(x, &inp[0]);
        Ok(vec![place_val.clone()])
    });
    let eval: Arc<EvalFn> = Arc::new(move |_| vec![v.clone()]);
    Ok(FunctionalLinkage::from_parts("constant", l, vec![x], vec![y], Domain::ball(center, r), GadgetKind::Function, 0, place, eval)
        .with_image(Domain::ball(value, 0.0)))
}

/// z ↦ λz on Ball(0, r).
pub fn mk_scale(n: usize, lambda: f64, r: f64, strong: bool) -> Result<FunctionalLinkage, GadgetError> {
    mk_scale_on(n, lambda, &zero(n), r, strong)
}

/// z ↦ λz on Ball(center, r), recentered with translation gadgets.
pub fn mk_scale_on(n: usize, lambda: f64, center: &Point, r: f64, strong: bool) -> Result<FunctionalLinkage, GadgetError> {
    positive("r", r)?;
    check_dim(n, center)?;
    if !lambda.is_finite() {
        return Err(GadgetError::BadParameter(format!("λ must be finite, got {lambda}")));
    }
    if lambda == 1.0 {
        return Err(GadgetError::BadParameter("λ = 1 is the identity and is elided".into()));
    }
    if lambda == 0.0 {
        return mk_constant(n, &zero(n), center, r);
    }
    let e2 = basis(n, 1);
    let (native, _) = native_scale(n, lambda, 2.5 * r, 1.75 * r, &e2, r, strong)?;
    let z0 = &e2 * (2.5 * r);
    let pre = &z0 - center;
    let post = (center - &z0) * lambda;
    let mut f = native;
    if pre.norm() > 0.0 {
        let t = mk_translation_on(n, &pre, center, r, strong)?;
        f = compose_serial(&t, &f)?;
    }
    if post.norm() > 0.0 {
        let t = mk_translation_on(n, &post, &(&z0 * lambda), r * lambda.abs(), strong)?;
        f = compose_serial(&f, &t)?;
    }
    let c = center.clone();
    let eval: Arc<EvalFn> = Arc::new(move |x| vec![&x[0] * lambda]);
    let out = FunctionalLinkage::from_parts(
        "scale",
        f.linkage.clone(),
        f.inputs.clone(),
        f.outputs.clone(),
        Domain::ball(&c, r),
        GadgetKind::Function,
        f.sheet_bits(),
        f.place_fn(),
        eval,
    )
    .with_image(Domain::ball(&(center * lambda), r * lambda.abs()));
    Ok(out)
}

/// (z, w) ↦ (z + w)/2 on Ball(a·e1, r) × Ball(−a·e1, r) with a = 1.5r.
pub fn mk_average(n: usize, r: f64, strong: bool) -> Result<FunctionalLinkage, GadgetError> {
    positive("r", r)?;
    let a = 1.5 * r;
    let e1 = basis(n, 0);
    let (half, pivot) = native_scale(n, 0.5, 2.0 * a, 2.0 * a, &e1, 2.0 * r, strong)?;
    let zc = &e1 * a;
    let wc = -&e1 * a;

    // one translation per anchor of the half-scale, all driven by w
    let offsets: Vec<(VertexId, Point)> =
        half.linkage.fixed().iter().filter(|(&v, _)| v != pivot).map(|(&v, p)| (v, p.clone())).collect();
    let mut fan: Option<FunctionalLinkage> = None;
    for (_, z) in &offsets {
        let t = mk_translation_on(n, z, &wc, r, strong)?;
        fan = Some(match fan {
            None => t,
            Some(f) => fanout(&f, &t)?,
        });
    }
    let fan = fan.ok_or_else(|| GadgetError::BadParameter("half-scale has no anchors".into()))?;
    let fixed: Vec<VertexId> = half.linkage.fixed().keys().copied().collect();
    let free = half.linkage.unfix_vertices(&fixed)?;

    let mut asm = Assembly::new(n)?;
    let mf = asm.mount(&fan)?;
    let mh = asm.mount(&half.with_linkage(free))?;
    let w_in = mf.id(fan.inputs[0]);
    asm.glue(w_in, mh.id(pivot));
    for (k, (v, _)) in offsets.iter().enumerate() {
        asm.glue(mf.id(fan.outputs[k]), mh.id(*v));
    }
    let z_in = mh.id(half.inputs[0]);
    let out_v = mh.id(half.outputs[0]);
    {
        let l = asm.linkage_mut();
        l.set_label(z_in, Some("C".into()))?;
        l.set_label(w_in, Some("A".into()))?;
        l.set_label(out_v, Some("B".into()))?;
    }
    if strong {
        let l = asm.linkage_mut();
        l.tether_mut(w_in, wc.clone(), r)?;
        l.tether_mut(z_in, zc.clone(), r)?;
    }
    let (linkage, _) = asm.finish()?;

    let bf = fan.sheet_bits();
    let place: Arc<PlaceFn> = Arc::new(move |x, bits, out| {
        let (b0, b1) = bits.split_at(bf as usize);
        let (z, w) = (&x[0], &x[1]);
        mf.place(&[w.clone()], b0, out)?;
        let xf = Similarity::from_motion(EuclideanMotion::translation(w.clone()));
        mh.place_in(&xf, &[z.clone()], b1, out)
    });
    let eval: Arc<EvalFn> = Arc::new(|x| vec![(&x[0] + &x[1]) * 0.5]);
    let domain = Domain::product(vec![Domain::ball(&zc, r), Domain::ball(&wc, r)]);
    Ok(FunctionalLinkage::from_parts(
        "average",
        linkage,
        vec![z_in, w_in],
        vec![out_v],
        domain,
        GadgetKind::Function,
        bf + half.sheet_bits(),
        place,
        eval,
    )
    .with_image(Domain::ball(&zero(n), r)))
}

/// (z, w) ↦ (z + w)/2 on Ball(zc, r) × Ball(wc, r): the average gadget
/// between translations onto and off its native domain.
pub fn mk_average_on(n: usize, zc: &Point, wc: &Point, r: f64, strong: bool) -> Result<FunctionalLinkage, GadgetError> {
    check_dim(n, zc)?;
    check_dim(n, wc)?;
    let avg = mk_average(n, r, strong)?;
    let a = 1.5 * r;
    let e1 = basis(n, 0);
    let shift_z = &e1 * a - zc;
    let shift_w = -&e1 * a - wc;
    let post = (zc + wc) * 0.5;
    let pre = |shift: &Point, c: &Point| -> Result<Option<FunctionalLinkage>, GadgetError> {
        if shift.norm() == 0.0 {
            Ok(None)
        } else {
            mk_translation_on(n, shift, c, r, strong).map(Some)
        }
    };
    let tz = pre(&shift_z, zc)?;
    let tw = pre(&shift_w, wc)?;
    let tp = if post.norm() == 0.0 { None } else { Some(mk_translation_on(n, &post, &zero(n), r, strong)?) };

    let mut asm = Assembly::new(n)?;
    let ma = asm.mount(&avg)?;
    let mz = tz.as_ref().map(|t| asm.mount(t)).transpose()?;
    let mw = tw.as_ref().map(|t| asm.mount(t)).transpose()?;
    let mp = tp.as_ref().map(|t| asm.mount(t)).transpose()?;
    let mut inputs = ma.ids(&avg.inputs);
    if let (Some(m), Some(t)) = (&mz, &tz) {
        asm.glue(m.id(t.outputs[0]), inputs[0]);
        inputs[0] = m.id(t.inputs[0]);
    }
    if let (Some(m), Some(t)) = (&mw, &tw) {
        asm.glue(m.id(t.outputs[0]), inputs[1]);
        inputs[1] = m.id(t.inputs[0]);
    }
    let mut output = ma.id(avg.outputs[0]);
    if let (Some(m), Some(t)) = (&mp, &tp) {
        asm.glue(output, m.id(t.inputs[0]));
        output = m.id(t.outputs[0]);
    }
    let (linkage, _) = asm.finish()?;
    let bits = [&tz, &tw, &tp].iter().map(|t| t.as_ref().map_or(0, |t| t.sheet_bits())).collect::<Vec<_>>();
    let ba = avg.sheet_bits() as usize;
    let place: Arc<PlaceFn> = Arc::new(move |x, sheet, out| {
        let (s_avg, rest) = sheet.split_at(ba);
        let (s_z, rest) = rest.split_at(bits[0] as usize);
        let (s_w, s_p) = rest.split_at(bits[1] as usize);
        let z = match &mz {
            Some(m) => m.place(&x[..1], s_z, out)?.remove(0),
            None => x[0].clone(),
        };
        let w = match &mw {
            Some(m) => m.place(&x[1..], s_w, out)?.remove(0),
            None => x[1].clone(),
        };
        let y = ma.place(&[z, w], s_avg, out)?;
        match &mp {
            Some(m) => m.place(&y, s_p, out),
            None => Ok(y),
        }
    });
    let total = avg.sheet_bits() + [&tz, &tw, &tp].iter().map(|t| t.as_ref().map_or(0, |t| t.sheet_bits())).sum::<u32>();
    let eval: Arc<EvalFn> = Arc::new(|x| vec![(&x[0] + &x[1]) * 0.5]);
    let domain = Domain::product(vec![Domain::ball(zc, r), Domain::ball(wc, r)]);
    Ok(FunctionalLinkage::from_parts("average", linkage, inputs, vec![output], domain, GadgetKind::Function, total, place, eval)
        .with_image(Domain::ball(&post, r)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::point;

    fn check(f: &FunctionalLinkage, x: &[Point]) {
        for s in 0..f.sheets().count().unwrap().min(8) {
            let phi = f.forward(x, s).unwrap();
            assert!(f.linkage.max_residual(&phi).unwrap() < 1e-9, "sheet {s}");
            let y = f.eval(x);
            for (o, yy) in f.outputs.iter().zip(&y) {
                assert!((phi.get(*o).unwrap() - yy).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn native_cases() {
        let e2 = basis(3, 1);
        for lambda in [2.0, 0.5, -1.0, 3.5, 0.2, -0.4] {
            for strong in [false, true] {
                let (f, _) = native_scale(3, lambda, 2.5, 1.75, &e2, 1.0, strong).unwrap();
                let x = point(&[0.3, 2.2, -0.4]);
                check(&f, &[x]);
            }
        }
    }

    #[test]
    fn scale_examples() {
        let x = point(&[0.3, -0.2, 0.5]);
        for strong in [false, true] {
            for lambda in [2.0, 0.5, -1.0] {
                let f = mk_scale(3, lambda, 1.0, strong).unwrap();
                check(&f, &[x.clone()]);
            }
            let k = mk_scale(3, 0.0, 1.0, strong).unwrap();
            let phi = k.forward(&[x.clone()], 0).unwrap();
            assert_eq!(phi.get(k.outputs[0]).unwrap(), zero(3));
        }
        assert!(mk_scale(3, 1.0, 1.0, false).is_err());
        assert!(mk_scale(3, 2.0, 0.0, false).is_err());
    }

    #[test]
    fn average_examples() {
        for strong in [false, true] {
            let f = mk_average(3, 1.0, strong).unwrap();
            let a = 1.5;
            check(&f, &[point(&[a, 0.0, 0.0]), point(&[-a, 0.0, 0.0])]);
            check(&f, &[point(&[a + 0.5, 0.3, -0.2]), point(&[-a, -0.6, 0.7])]);
            assert!(f.forward(&[point(&[a + 1.1, 0.0, 0.0]), point(&[-a, 0.0, 0.0])], 0).is_err());
            let g = mk_average_on(3, &point(&[0.0, 1.0, 0.0]), &point(&[0.2, 0.0, 0.0]), 0.5, strong).unwrap();
            check(&g, &[point(&[0.1, 1.2, -0.3]), point(&[0.4, 0.1, 0.2])]);
        }
    }
}
