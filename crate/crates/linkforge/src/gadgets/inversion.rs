//! Inversion in a line, segment linkages and orthogonal projection to a line.

use std::sync::Arc;

use super::domain::Domain;
use super::functional::{EvalFn, FunctionalLinkage, GadgetError, GadgetKind, PlaceFn};
use super::parts::{add_parallelogram, add_sphere_constraint, check_dim, positive, put_midpoints, Anchors, SQRT2};
use crate::compiler::compose::Assembly;
use crate::geom::{basis, zero, EuclideanMotion, Point, Similarity};
use crate::linkage::Linkage;

/// γe1 ↦ (1/γ)e1 for d−c ≤ |γ| ≤ d+c, with d = √(1+c²).
///
/// Classical sheets are sign vectors: bit 0 picks the side of the auxiliary
/// vertex v1, bit i ≥ 1 the sign of the rhombus in the (e1, e_{i+1}) plane.
pub fn mk_inversion(n: usize, c: f64, b: f64, strong: bool) -> Result<FunctionalLinkage, GadgetError> {
    positive("c", c)?;
    if n < 3 {
        return Err(GadgetError::Unsupported("inversion needs n ≥ 3".into()));
    }
    if !(b > c && b.is_finite()) {
        return Err(GadgetError::BadParameter(format!("need b > c, got b={b}, c={c}")));
    }
    let a = (1.0 + b * b).sqrt();
    let d = (1.0 + c * c).sqrt();
    let mut l = Linkage::new(n)?;
    let mut anchors = Anchors::default();
    let o = l.add_fixed(Some("O"), zero(n))?;
    let v = l.add_labeled("v");
    let w = l.add_labeled("w");
    let origin = zero(n);

    let mut rhombi = Vec::new();
    for i in 1..n {
        let v0 = l.add_labeled(&format!("v{}0", i + 1));
        let v1 = l.add_labeled(&format!("v{}1", i + 1));
        for &x in &[v0, v1] {
            add_sphere_constraint(&mut l, &mut anchors, o, &origin, x, a, &[0, i])?;
        }
        let mids = add_parallelogram(&mut l, v, v0, v1, w, b, b)?;
        if strong {
            l.tether_mut(v0, basis(n, i) * a, SQRT2 * a)?;
        }
        rhombi.push((i, basis(n, i), v0, v1, mids));
    }
    let aux = if strong {
        l.cable(v, w, 2.0 * c)?;
        None
    } else {
        let v1 = l.add_labeled("v1");
        add_sphere_constraint(&mut l, &mut anchors, o, &origin, v1, d, &[0, 1])?;
        l.rigid(v, v1, c)?;
        l.rigid(w, v1, c)?;
        Some(v1)
    };

    let e1 = basis(n, 0);
    let domain = Domain::line_annulus(&origin, &e1, d - c, d + c);
    let e1c = e1.clone();
    let place: Arc<PlaceFn> = Arc::new(move |x, bits, out| {
        let gamma = x[0][0];
        let alpha = (gamma + 1.0 / gamma) / 2.0;
        let beta = (a * a - alpha * alpha).max(0.0).sqrt();
        let e1 = &e1c;
        let y = e1 / gamma;
        out.put(v, &x[0]);
        out.put(w, &y);
        for (i, ei, v0, v1, mids) in &rhombi {
            let (i, v0, v1, mids) = (*i, *v0, *v1, *mids);
            let eps = if aux.is_some() && bits[i] { -1.0 } else { 1.0 };
            let p0 = e1.zip_map(ei, |s, t| s * alpha + t * (eps * beta));
            let p1 = e1.zip_map(ei, |s, t| s * alpha - t * (eps * beta));
            out.put(v0, &p0);
            out.put(v1, &p1);
            put_midpoints(out, mids, &x[0], &p0, &p1, &y);
        }
        if let Some(v1) = aux {
            let eps = if bits[0] { -1.0 } else { 1.0 };
            let h = (d * d - alpha * alpha).max(0.0).sqrt();
            out.put(v1, &(e1 * alpha + basis(e1.len(), 1) * (eps * h)));
        }
        Ok(vec![y])
    });
    let eval: Arc<EvalFn> = Arc::new(|x| vec![&x[0] / x[0].norm_squared()]);
    let bits = if strong { 0 } else { n as u32 };
    Ok(FunctionalLinkage::from_parts("inversion", l, vec![v], vec![w], domain.clone(), GadgetKind::Function, bits, place, eval)
        .with_image(domain))
}

/// Two inversions (c = 3/4), the second shifted by 2e1, glued at their inputs:
/// the shared input ranges over [1/2, 3/2]·e1.
fn base_segment(n: usize, strong: bool) -> Result<FunctionalLinkage, GadgetError> {
    let inv = mk_inversion(n, 0.75, 1.5, strong)?;
    let shift = Similarity::from_motion(EuclideanMotion::translation(basis(n, 0) * 2.0));
    let inv2 = inv.transformed(&shift)?;
    let mut asm = Assembly::new(n)?;
    let m0 = asm.mount(&inv)?;
    let m1 = asm.mount(&inv2)?;
    let out_v = m0.id(inv.inputs[0]);
    asm.glue(out_v, m1.id(inv2.inputs[0]));
    let (linkage, _) = asm.finish()?;
    let b0 = inv.sheet_bits();
    let place: Arc<PlaceFn> = Arc::new(move |x, bits, out| {
        let (s0, s1) = bits.split_at(b0 as usize);
        m0.place(x, s0, out)?;
        m1.place(x, s1, out)?;
        Ok(x.to_vec())
    });
    let e1 = basis(n, 0);
    let domain = Domain::segment(&(&e1 * 0.5), &(&e1 * 1.5));
    Ok(FunctionalLinkage::from_parts(
        "segment",
        linkage,
        vec![],
        vec![out_v],
        domain.clone(),
        GadgetKind::Set,
        2 * b0,
        place,
        Arc::new(|x| x.to_vec()),
    )
    .with_image(domain))
}

/// Linkage whose output vertex traces the closed segment [p, q].
pub fn mk_segment(n: usize, p: &Point, q: &Point, strong: bool) -> Result<FunctionalLinkage, GadgetError> {
    check_dim(n, p)?;
    check_dim(n, q)?;
    let len = (q - p).norm();
    if !(len > 0.0) {
        return Err(GadgetError::BadParameter("segment endpoints coincide".into()));
    }
    let u = (q - p) / len;
    let h = EuclideanMotion::householder(&basis(n, 0), &u)?;
    let s = Similarity { scale: len, motion: EuclideanMotion { rotation: h.rotation, translation: p - &u * (len / 2.0) } };
    let base = base_segment(n, strong)?;
    if s.is_identity() {
        return Ok(base);
    }
    base.transformed(&s)
}

/// x ↦ (x1·e1, reflection of x in the e1 axis) on Ball(0, r/2).
pub fn mk_projection(n: usize, r: f64, strong: bool) -> Result<FunctionalLinkage, GadgetError> {
    positive("r", r)?;
    let e1 = basis(n, 0);
    let t0 = mk_segment(n, &(&e1 * (0.3 * r)), &(&e1 * (1.6 * r)), strong)?;
    let t1 = mk_segment(n, &(&e1 * (-1.6 * r)), &(&e1 * (-0.3 * r)), strong)?;
    let mut asm = Assembly::new(n)?;
    let m0 = asm.mount(&t0)?;
    let m1 = asm.mount(&t1)?;
    let (v, w, v0, v1, v2, v3, v4);
    {
        let l = asm.linkage_mut();
        v = l.add_labeled("v");
        w = l.add_labeled("w");
        v0 = l.add_labeled("v0");
        v1 = l.add_labeled("v1");
        v2 = l.add_labeled("v2");
        let (e, f) = add_parallelogram(l, v1, v, w, v0, r, r)?;
        l.set_label(e, Some("v4".into()))?;
        l.set_label(f, Some("v3".into()))?;
        v4 = e;
        v3 = f;
        l.rigid(v2, v3, r / 2.0)?;
        l.rigid(v2, v4, r / 2.0)?;
    }
    asm.glue(v0, m0.id(t0.outputs[0]));
    asm.glue(v1, m1.id(t1.outputs[0]));
    let (linkage, _) = asm.finish()?;
    let b0 = t0.sheet_bits();
    let place: Arc<PlaceFn> = Arc::new(move |x, bits, out| {
        let (s0, s1) = bits.split_at(b0 as usize);
        let z = &x[0];
        let n = z.len();
        let e1 = basis(n, 0);
        let g = &e1 * z[0];
        let h2 = (z - &g).norm_squared();
        let t = (r * r - h2).max(0.0).sqrt();
        let p0 = &g + &e1 * t;
        let p1 = &g - &e1 * t;
        m0.place(&[p0.clone()], s0, out)?;
        m1.place(&[p1.clone()], s1, out)?;
        let refl = &g * 2.0 - z;
        out.put(v, z);
        out.put(w, &refl);
        out.put(v0, &p0);
        out.put(v1, &p1);
        out.put(v4, &((&p1 + z) * 0.5));
        out.put(v3, &((&refl + &p0) * 0.5));
        out.put(v2, &g);
        Ok(vec![g, refl])
    });
    let eval: Arc<EvalFn> = Arc::new(|x| {
        let mut g = zero(x[0].len());
        g[0] = x[0][0];
        let refl = &g * 2.0 - &x[0];
        vec![g, refl]
    });
    Ok(FunctionalLinkage::from_parts(
        "projection",
        linkage,
        vec![v],
        vec![v2, w],
        Domain::ball(&zero(n), r / 2.0),
        GadgetKind::Function,
        b0 + t1.sheet_bits(),
        place,
        eval,
    ))
}

/// Projection onto the line through the origin with direction `dir`, plus the reflection.
pub fn mk_projection_onto(n: usize, r: f64, dir: &Point, strong: bool) -> Result<FunctionalLinkage, GadgetError> {
    check_dim(n, dir)?;
    let p = mk_projection(n, r, strong)?;
    let u = dir / dir.norm();
    let e1 = basis(n, 0);
    if (&u - &e1).norm() == 0.0 {
        return Ok(p);
    }
    p.transformed(&Similarity::from_motion(EuclideanMotion::householder(&e1, &u)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::point;

    #[test]
    fn inversion_examples() {
        for strong in [false, true] {
            let f = mk_inversion(3, 0.75, 1.5, strong).unwrap();
            for s in 0..f.sheets().count().unwrap() {
                for g in [1.0, 2.0, 0.5, -0.7, -1.9] {
                    let x = point(&[g, 0.0, 0.0]);
                    let phi = f.forward(&[x], s).unwrap();
                    assert!(f.linkage.max_residual(&phi).unwrap() < 1e-12);
                    assert!((phi.get(f.outputs[0]).unwrap()[0] - 1.0 / g).abs() < 1e-14);
                }
            }
            assert!(f.forward(&[point(&[2.1, 0.0, 0.0])], 0).is_err());
        }
        assert_eq!(mk_inversion(3, 0.75, 1.5, false).unwrap().sheets().count(), Some(8));
        assert!(mk_inversion(2, 0.75, 1.5, false).is_err());
        assert!(mk_inversion(3, 0.75, 0.5, false).is_err());
    }

    #[test]
    fn segment_and_projection() {
        let s = mk_segment(3, &zero(3), &point(&[1.0, 0.0, 0.0]), false).unwrap();
        let phi = s.forward(&[point(&[0.25, 0.0, 0.0])], 5).unwrap();
        assert!(s.linkage.max_residual(&phi).unwrap() < 1e-12);
        assert!(mk_segment(3, &zero(3), &zero(3), false).is_err());

        for strong in [false, true] {
            let p = mk_projection(3, 1.0, strong).unwrap();
            let x = point(&[0.3, 0.4, 0.0]);
            let phi = p.forward(&[x.clone()], 0).unwrap();
            assert!(p.linkage.max_residual(&phi).unwrap() < 1e-12);
            assert!((phi.get(p.outputs[0]).unwrap() - point(&[0.3, 0.0, 0.0])).norm() < 1e-14);
            assert!((phi.get(p.outputs[1]).unwrap() - point(&[0.3, -0.4, 0.0])).norm() < 1e-14);
            let psi0 = phi.get(p.vertex("v0").unwrap()).unwrap();
            assert!((psi0[0] - (0.3 + 0.84f64.sqrt())).abs() < 1e-14);
        }
    }
}
