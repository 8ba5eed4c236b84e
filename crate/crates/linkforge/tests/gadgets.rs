mod common;

use std::collections::BTreeMap;

use linkforge::gadgets::{mk_inversion, mk_pantograph, mk_rigid_parallelogram, mk_scale, mk_sphere, mk_translation};
use linkforge::geom::{point, zero, Point};
use linkforge::numeric::{count_preimages, preimages, sample_configs, sample_configs_with, SolveOptions, CLUSTER_TOL};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn max_err(a: &[Point], b: &[Point]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
}

#[test]
fn functionality_on_random_points() {
    for strong in [false, true] {
        for c in common::roster(strong) {
            let g = &c.gadget;
            let sheets = g.sheets().count().unwrap();
            let step = (sheets / 64).max(1);
            let mut rng = ChaCha8Rng::seed_from_u64(17);
            for _ in 0..40 {
                let x = g.sample_domain(&mut rng).unwrap();
                let want = (c.oracle)(&x);
                for s in (0..sheets).step_by(step as usize) {
                    let phi = g.forward(&x, s).unwrap();
                    assert!(g.linkage.max_residual(&phi).unwrap() < 1e-9, "{} sheet {s}", c.name);
                    assert!(max_err(&phi.restrict(&g.outputs).unwrap(), &want) < 1e-8, "{} sheet {s}", c.name);
                    assert!(max_err(&g.eval(&x), &want) < 1e-12, "{}", c.name);
                }
            }
        }
    }
}

#[test]
fn sheets_are_distinct() {
    for c in common::roster(false).into_iter().chain(std::iter::once(common::Case {
        name: "basic".into(),
        gadget: common::basic(false),
        oracle: Box::new(|x| x.to_vec()),
    })) {
        let g = &c.gadget;
        let x = g.interior_point().unwrap();
        let sheets: Vec<u64> = (0..g.sheets().count().unwrap()).take(128).collect();
        let phis: Vec<_> = sheets.iter().map(|&s| g.forward(&x, s).unwrap()).collect();
        for i in 0..phis.len() {
            for j in i + 1..phis.len() {
                assert!(phis[i].max_deviation(&phis[j]) > 1e-6, "{}: sheets {i} and {j} coincide", c.name);
            }
        }
    }
}

#[test]
fn parallelogram_identity_on_samples() {
    let p = mk_rigid_parallelogram(1.0, 0.7, 3).unwrap();
    let pins = BTreeMap::from([(p.a, zero(3))]);
    let got = sample_configs_with(&p.linkage, &pins, 100, 4, &SolveOptions::default(), None).unwrap();
    assert_eq!(got.configs.len(), 100);
    for phi in &got.configs {
        let [a, b, c, d] = [p.a, p.b, p.c, p.d].map(|v| phi.get(v).unwrap());
        assert!((a + d - b - c).norm() < 1e-7);
    }
}

#[test]
fn pantograph_identity_on_samples() {
    for ratio in [1.0, 0.5, 2.5] {
        let p = mk_pantograph(3, ratio, 1.0, 0.8).unwrap();
        let pins = BTreeMap::from([(p.a, zero(3))]);
        let got = sample_configs_with(&p.linkage, &pins, 100, 5, &SolveOptions::default(), None).unwrap();
        assert_eq!(got.configs.len(), 100, "ratio {ratio}");
        for phi in &got.configs {
            let [a, b, c] = [p.a, p.b, p.c].map(|v| phi.get(v).unwrap());
            assert!((&c - &a - (&b - &a) * (1.0 + ratio)).norm() < 1e-7, "ratio {ratio}");
        }
    }
}

#[test]
fn inversion_midpoint_algebra() {
    for strong in [false, true] {
        let f = mk_inversion(3, 0.75, 1.5, strong).unwrap();
        let (v, w) = (f.inputs[0], f.outputs[0]);
        let (v0, v1) = (f.vertex("v20").unwrap(), f.vertex("v21").unwrap());
        for gamma in [0.6, 1.0, 1.7, -0.8, -1.9] {
            let x = [point(&[gamma, 0.0, 0.0])];
            let reps = preimages(&f, &x, 40, CLUSTER_TOL, 1).unwrap();
            assert!(!reps.is_empty());
            for phi in reps {
                let mid = (phi.get(v).unwrap() + phi.get(w).unwrap()) / 2.0;
                let alpha = (gamma + 1.0 / gamma) / 2.0;
                assert!((&mid - point(&[alpha, 0.0, 0.0])).norm() < 1e-9);
                let rhombus = (phi.get(v0).unwrap() + phi.get(v1).unwrap()) / 2.0;
                assert!((&rhombus - &mid).norm() < 1e-9);
                let a = rhombus[0];
                assert!((gamma * gamma - 2.0 * gamma * a + 1.0).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn inversion_domain_is_tight() {
    // c = 3/4 gives d = 5/4: inputs must lie in 1/2 ≤ |γ| ≤ 2
    for strong in [false, true] {
        let f = mk_inversion(3, 0.75, 1.5, strong).unwrap();
        for gamma in [2.02, 0.5 - 0.02, -2.02, -0.48] {
            let x = [point(&[gamma, 0.0, 0.0])];
            assert_eq!(count_preimages(&f, &x, 200, CLUSTER_TOL, 3).unwrap(), 0, "γ = {gamma}");
            assert!(f.forward(&x, 0).is_err());
        }
        assert!(count_preimages(&f, &[point(&[1.9, 0.0, 0.0])], 50, CLUSTER_TOL, 3).unwrap() > 0);
    }
}

#[test]
fn sphere_samples_stay_on_sphere() {
    let s = mk_sphere(3, 2, 1.3).unwrap();
    let got = sample_configs(&s.linkage, 100, 8).unwrap();
    assert_eq!(got.configs.len(), 100);
    for phi in &got.configs {
        assert!((phi.get(s.outputs[0]).unwrap().norm() - 1.3).abs() < 1e-7);
    }
    let circle = mk_sphere(3, 1, 1.3).unwrap();
    for phi in &sample_configs(&circle.linkage, 50, 2).unwrap().configs {
        let p = phi.get(circle.outputs[0]).unwrap();
        assert!((p.norm() - 1.3).abs() < 1e-7 && p[0].abs() < 1e-7);
    }
}

#[test]
fn segment_samples_are_collinear() {
    let c = common::roster(false).pop().unwrap();
    assert_eq!(c.name, "segment");
    let g = c.gadget;
    let got = sample_configs(&g.linkage, 100, 6).unwrap();
    assert!(got.configs.len() >= 50, "{:?}", got.shortfall);
    for phi in &got.configs {
        let p = phi.get(g.outputs[0]).unwrap();
        assert!(p[1].hypot(p[2]) < 1e-7, "off the line: {p}");
        assert!(p[0] > -1e-7 && p[0] < 1.0 + 1e-7, "off the segment: {p}");
    }
}

#[test]
fn forward_map_examples() {
    let z0 = point(&[0.2, 0.1, -0.4]);
    let t = mk_translation(3, &z0, 1.0, false).unwrap();
    let phi = t.forward(&[zero(3)], 0).unwrap();
    assert_eq!(phi.get(t.outputs[0]).unwrap(), z0);
    assert!(t.forward(&[point(&[1.1, 0.0, 0.0])], 0).is_err());

    let zero_scale = mk_scale(3, 0.0, 1.0, false).unwrap();
    let phi = zero_scale.forward(&[point(&[0.3, 0.3, 0.3])], 0).unwrap();
    assert!(phi.get(zero_scale.outputs[0]).unwrap().norm() < 1e-15);

    let inv = mk_inversion(3, 0.75, 1.5, false).unwrap();
    for s in 0..8 {
        let phi = inv.forward(&[point(&[1.0, 0.0, 0.0])], s).unwrap();
        assert!((phi.get(inv.outputs[0]).unwrap() - point(&[1.0, 0.0, 0.0])).norm() < 1e-15);
        let half = inv.forward(&[point(&[2.0, 0.0, 0.0])], s).unwrap();
        assert!((half.get(inv.outputs[0]).unwrap() - point(&[0.5, 0.0, 0.0])).norm() < 1e-15);
    }

    let proj = &common::roster(false)[6];
    assert_eq!(proj.name, "projection");
    let x = [point(&[0.4, 0.0, 0.0])];
    let phi = proj.gadget.forward(&x, 0).unwrap();
    for &o in &proj.gadget.outputs {
        assert!((phi.get(o).unwrap() - &x[0]).norm() < 1e-15);
    }
    let phi = proj.gadget.forward(&[point(&[0.3, 0.4, 0.0])], 0).unwrap();
    let psi0 = phi.get(proj.gadget.vertex("v0").unwrap()).unwrap();
    assert!((psi0[0] - 1.21652).abs() < 1e-5);

    let basic = common::basic(false);
    let x = basic.interior_point().unwrap();
    let b = basic.vertex("B").unwrap();
    let (p0, p1) = (basic.forward(&x, 0).unwrap(), basic.forward(&x, 1).unwrap());
    assert!((p0.get(b).unwrap() - p1.get(b).unwrap()).norm() > 1e-3);
}
