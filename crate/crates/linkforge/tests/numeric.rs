mod common;

use std::collections::BTreeMap;

use linkforge::compiler::{compile_text, BoundsBox, Flavor};
use linkforge::gadgets::{mk_inversion, mk_rigid_parallelogram, mk_sphere, mk_translation};
use linkforge::geom::{dist, point, sample_ball, zero, Point};
use linkforge::io::LinkageDocument;
use linkforge::linkage::{Linkage, Realization, VertexId};
use linkforge::numeric::{
    count_preimages, residual_jacobian, sample_configs, sample_configs_with, solve_realization, trace, verify_functional, verify_invariance,
    SampleError, SolveOptions, System, TraceError, CLUSTER_TOL,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random linkage with a nearby (not exact) placement; some edges are cables,
/// some vertices pinned.
fn random_case(seed: u64) -> (Linkage, BTreeMap<VertexId, Point>, Realization) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nv = rng.gen_range(3..8);
    let mut l = Linkage::new(3).unwrap();
    let ids: Vec<VertexId> = (0..nv).map(|_| l.add_vertex()).collect();
    let pts: Vec<Point> = (0..nv).map(|_| sample_ball(&mut rng, &zero(3), 2.0)).collect();
    for i in 0..nv {
        for j in i + 1..nv {
            if j == i + 1 || rng.gen_bool(0.4) {
                let flexible = rng.gen_bool(0.3);
                // cables shorter than the current distance so the hinge is active
                let d = dist(&pts[i], &pts[j]);
                let len = if flexible { d * 0.7 } else { d * rng.gen_range(0.8..1.2) };
                l.add_edge(ids[i], ids[j], len, flexible).unwrap();
            }
        }
    }
    let pins = BTreeMap::from([(ids[0], pts[0].clone())]);
    let mut phi = Realization::for_linkage(&l);
    for (v, p) in ids.iter().zip(&pts) {
        phi.set_point(*v, p);
    }
    (l, pins, phi)
}

fn check_gradient(l: &Linkage, pins: &BTreeMap<VertexId, Point>, phi: &Realization) {
    let (r, j) = residual_jacobian(l, pins, phi).unwrap();
    let sys = System::new(l, pins).unwrap();
    let x = sys.pack(phi);
    assert_eq!(r, sys.residuals(&x));
    let h = 1e-6;
    for c in 0..x.len() {
        let (mut xp, mut xm) = (x.clone(), x.clone());
        xp[c] += h;
        xm[c] -= h;
        let (rp, rm) = (sys.residuals(&xp), sys.residuals(&xm));
        for row in 0..r.len() {
            let fd = (rp[row] - rm[row]) / (2.0 * h);
            let scale = j[(row, c)].abs().max(1.0);
            assert!((fd - j[(row, c)]).abs() / scale < 1e-5, "row {row} col {c}: {fd} vs {}", j[(row, c)]);
        }
    }
}

#[test]
fn jacobian_matches_finite_differences() {
    for seed in 0..14 {
        let (l, pins, phi) = random_case(seed);
        check_gradient(&l, &pins, &phi);
    }
    // gadgets, whose joints are eliminated from the unknowns
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let p = mk_rigid_parallelogram(1.0, 0.6, 3).unwrap();
    let inv = mk_inversion(3, 0.75, 1.5, false).unwrap();
    let guess = inv.forward(&[point(&[1.3, 0.0, 0.0])], 3).unwrap();
    for k in 0..6 {
        let (l, base) = if k % 2 == 0 {
            let mut q = Realization::for_linkage(&p.linkage);
            for v in p.linkage.vertices() {
                q.set_point(v, &sample_ball(&mut rng, &zero(3), 1.0));
            }
            (&p.linkage, q)
        } else {
            (&inv.linkage, guess.clone())
        };
        let mut phi = base.clone();
        for v in l.vertices() {
            phi.set_point(v, &(phi.get(v).unwrap() + sample_ball(&mut rng, &zero(3), 0.05)));
        }
        check_gradient(l, &BTreeMap::new(), &phi);
    }
}

#[test]
fn accepted_steps_never_increase_the_objective() {
    for seed in 20..30 {
        let (l, pins, phi) = random_case(seed);
        let sys = System::new(&l, &pins).unwrap();
        let x0 = sys.pack(&phi);
        let cost = |x: &[f64]| sys.residuals(x).iter().map(|r| r * r).sum::<f64>();
        let mut prev = cost(&x0);
        for iters in 1..60 {
            let opts = SolveOptions { max_iter: iters, tol: 1e-14, ..SolveOptions::default() };
            let (x, _, _) = sys.descend(x0.clone(), &opts);
            let c = cost(&x);
            assert!(c <= prev, "seed {seed}: {c} after {iters} > {prev}");
            prev = c;
        }
    }
}

#[test]
fn solver_examples() {
    let p = mk_rigid_parallelogram(1.0, 1.0, 3).unwrap();
    let mut exact = Realization::for_linkage(&p.linkage);
    for (v, c) in [(p.a, [0.0, 0.0]), (p.b, [1.0, 0.0]), (p.c, [0.0, 1.0]), (p.d, [1.0, 1.0]), (p.e, [0.5, 0.0]), (p.f, [0.5, 1.0])] {
        exact.set(v, &[c[0], c[1], 0.0]);
    }
    let opts = SolveOptions::default();
    assert_eq!(solve_realization(&p.linkage, &BTreeMap::new(), Some(&exact), &opts).unwrap(), exact);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut rough = exact.clone();
    for v in p.linkage.vertices() {
        rough.set_point(v, &(exact.get(v).unwrap() + sample_ball(&mut rng, &zero(3), 1e-2)));
    }
    let pins = BTreeMap::from([(p.a, zero(3))]);
    let phi = solve_realization(&p.linkage, &pins, Some(&rough), &opts).unwrap();
    assert!(p.linkage.max_residual(&phi).unwrap() < 1e-10);
    let [a, b, c, d] = [p.a, p.b, p.c, p.d].map(|v| phi.get(v).unwrap());
    assert!((a + d - b - c).norm() < 1e-7);

    let mut tri = Linkage::new(3).unwrap();
    let (u, v, w) = (tri.add_vertex(), tri.add_vertex(), tri.add_vertex());
    tri.rigid(u, v, 1.0).unwrap();
    tri.rigid(v, w, 1.0).unwrap();
    tri.rigid(u, w, 3.0).unwrap();
    for seed in 0..20 {
        let opts = SolveOptions { seed, ..SolveOptions::default() };
        assert!(solve_realization(&tri, &BTreeMap::from([(u, zero(3))]), None, &opts).is_err());
    }
    let bad = SolveOptions { tol: 0.0, ..SolveOptions::default() };
    assert!(solve_realization(&tri, &BTreeMap::new(), None, &bad).is_err());
}

#[test]
fn sampling_examples() {
    let s = mk_sphere(3, 2, 0.9).unwrap();
    let a = sample_configs(&s.linkage, 30, 42).unwrap();
    let b = sample_configs(&s.linkage, 30, 42).unwrap();
    assert_eq!(a.configs, b.configs);
    assert_ne!(a.configs, sample_configs(&s.linkage, 30, 43).unwrap().configs);
    for phi in &a.configs {
        assert!((phi.get(s.outputs[0]).unwrap().norm() - 0.9).abs() < 1e-7);
    }

    let mut free = Linkage::new(3).unwrap();
    let (u, v) = (free.add_vertex(), free.add_vertex());
    free.rigid(u, v, 1.0).unwrap();
    assert!(matches!(sample_configs(&free, 3, 0), Err(SampleError::Unanchored(_))));
    let pinned = sample_configs_with(&free, &BTreeMap::from([(u, zero(3))]), 3, 0, &SolveOptions::default(), None).unwrap();
    assert_eq!(pinned.configs.len(), 3);
}

#[test]
fn preimage_counts() {
    let x = common::basic(false).interior_point().unwrap();
    assert_eq!(count_preimages(&common::basic(false), &x, 500, CLUSTER_TOL, 0).unwrap(), 2);
    assert_eq!(count_preimages(&common::basic(true), &x, 500, CLUSTER_TOL, 0).unwrap(), 1);
    let inv = mk_inversion(3, 0.75, 1.5, false).unwrap();
    assert_eq!(count_preimages(&inv, &[point(&[1.3, 0.0, 0.0])], 500, CLUSTER_TOL, 0).unwrap(), 8);
    for c in common::roster(true) {
        let x = c.gadget.interior_point().unwrap();
        assert_eq!(count_preimages(&c.gadget, &x, 200, CLUSTER_TOL, 1).unwrap(), 1, "{}", c.name);
    }
    for c in common::roster(false) {
        let x = c.gadget.interior_point().unwrap();
        let got = count_preimages(&c.gadget, &x, 100, CLUSTER_TOL, 1).unwrap() as u64;
        assert!(got >= 1 && got <= c.gadget.sheets().count().unwrap(), "{}: {got}", c.name);
    }
}

#[test]
fn verify_is_self_consistent() {
    for strong in [false, true] {
        for c in common::roster(strong) {
            let g = c.gadget.clone();
            let oracle = move |x: &[Point]| g.eval(x);
            let report = verify_functional(&c.gadget, &oracle, 20, 1e-8, 3);
            assert!(report.pass, "{}: {:?}", c.name, report.failures.first());
            let independent = verify_functional(&c.gadget, &*c.oracle, 20, 1e-8, 3);
            assert!(independent.pass, "{}", c.name);
        }
    }
    let z0 = point(&[0.5, 0.25, -0.125]);
    let t = mk_translation(3, &z0, 1.0, false).unwrap();
    let report = verify_functional(&t, &|x: &[Point]| vec![&x[0] + &z0], 100, 1e-12, 0);
    assert!(report.pass && report.max_output_error < 1e-12);

    let k = BoundsBox::uniform(3, 1, 1.0);
    let sq = compile_text("1*e1*x1_1^2", 3, &k, Flavor::Classical).unwrap();
    let report = verify_functional(&sq.gadget, &|x: &[Point]| vec![point(&[x[0][0] * x[0][0], 0.0, 0.0])], 30, 1e-6, 1);
    assert!(report.pass, "{:?}", report.failures.first());
}

#[test]
fn corrupted_edge_fails_verification() {
    let inv = mk_inversion(3, 0.75, 1.5, false).unwrap();
    let mut doc = LinkageDocument::from_linkage(&inv.linkage);
    doc.edges[0].length += 1e-3;
    let bent = inv.with_linkage(doc.to_linkage().unwrap());
    let report = verify_functional(&bent, &|x: &[Point]| vec![&x[0] / x[0].norm_squared()], 10, 1e-6, 0);
    assert!(!report.pass);
    assert!(!report.failures.is_empty());
}

#[test]
fn trace_examples() {
    let inv = mk_inversion(3, 0.75, 1.5, false).unwrap();
    let path: Vec<Vec<Point>> = (0..=10).map(|i| vec![point(&[1.0 + i as f64 / 10.0, 0.0, 0.0])]).collect();
    let t = trace(&inv, &path, 5, 0.2).unwrap();
    assert!(t.continuous);
    for (x, y) in path.iter().zip(&t.outputs) {
        assert!((y[0][0] - 1.0 / x[0][0]).abs() < 1e-12);
    }
    let z0 = point(&[0.1, 0.2, 0.3]);
    let tr = mk_translation(3, &z0, 1.0, true).unwrap();
    let line: Vec<Vec<Point>> = (0..5).map(|i| vec![point(&[0.1 * i as f64, 0.0, 0.0])]).collect();
    let t = trace(&tr, &line, 0, 1.0).unwrap();
    for (x, y) in line.iter().zip(&t.outputs) {
        assert!((Point::from_column_slice(&y[0]) - (&x[0] + &z0)).norm() < 1e-12);
    }
    let mut out = line.clone();
    out.push(vec![point(&[1.5, 0.0, 0.0])]);
    assert_eq!(trace(&tr, &out, 0, 1.0).unwrap_err(), TraceError::OutOfDomain { index: 5 });
}

#[test]
fn invariance_examples() {
    // no anchors: all of Euc(n)
    let p = mk_rigid_parallelogram(1.0, 0.7, 3).unwrap();
    let report = verify_invariance(&p.linkage, 100, 1e-9, 0).unwrap();
    assert!(report.pass, "{:?}", report.failures.first());

    // anchors on the x1 axis: rotations about it
    let mut l = Linkage::new(3).unwrap();
    let a = l.add_fixed(None, zero(3)).unwrap();
    let b = l.add_fixed(None, point(&[2.0, 0.0, 0.0])).unwrap();
    let v = l.add_vertex();
    l.rigid(a, v, 1.5).unwrap();
    l.rigid(b, v, 1.5).unwrap();
    let report = verify_invariance(&l, 100, 1e-9, 1).unwrap();
    assert!(report.pass);

    // a spanning anchor set leaves only the identity
    let c = l.add_fixed(None, point(&[0.0, 1.0, 0.0])).unwrap();
    let d = l.add_fixed(None, point(&[0.0, 0.0, 1.0])).unwrap();
    let w = l.add_vertex();
    l.rigid(c, w, 1.0).unwrap();
    l.rigid(d, w, 1.0).unwrap();
    l.rigid(a, w, 1.0).unwrap();
    assert!(verify_invariance(&l, 10, 1e-9, 2).unwrap().pass);
}
