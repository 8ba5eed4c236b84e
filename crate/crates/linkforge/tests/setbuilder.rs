use std::collections::BTreeMap;

use linkforge::gadgets::{mk_inversion, mk_scale};
use linkforge::geom::{point, sample_unit, zero, Point};
use linkforge::linkage::{Linkage, Realization};
use linkforge::numeric::{sample_configs, sample_configs_with, SolveOptions};
use linkforge::setbuilder::{
    add_isolated, build_config_cabled, build_config_classical, build_semiconfig, reduce_fixed_vertices, rigidify_complex, scaffold_points,
    span_distance, ComplexRealization, QuasiAlgPresentation, SetError,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SPHERE: &str = "dim 3\nbound 1.5\n1*e1*x1_1^2 + 1*e1*x1_2^2 + 1*e1*x1_3^2 - 1*e1 = 0\n";
const BALL: &str = "dim 3\nbound 1.25\n1*e1 - 1*e1*x1_1^2 - 1*e1*x1_2^2 - 1*e1*x1_3^2 >= 0\n";

fn sphere() -> QuasiAlgPresentation {
    SPHERE.parse().unwrap()
}

#[test]
fn sphere_semiconfig_both_ways() {
    let pres = sphere();
    let s = build_semiconfig(&pres).unwrap();
    assert!(s.linkage.is_classical());
    let got = s.sample(200, 1, &SolveOptions::default()).unwrap();
    assert_eq!(got.configs.len(), 200, "{:?}", got.shortfall);
    for phi in &got.configs {
        let x = s.point_of(phi).unwrap();
        assert!(pres.violation(&x) < 1e-6);
        assert!((x[0].norm() - 1.0).abs() < 1e-6);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let bits = s.sheet_bits();
    for i in 0..200 {
        let x = [sample_unit(&mut rng, 3)];
        let sheet: u64 = rng.gen_range(0..1u64 << bits.min(63));
        let phi = s.extend(&x, sheet, &SolveOptions::default()).unwrap();
        assert!(s.linkage.max_residual(&phi).unwrap() < 1e-9, "point {i}");
        assert!((phi.get(s.inputs[0]).unwrap() - &x[0]).norm() < 1e-12);
    }
}

#[test]
fn classical_builder_keeps_sheets() {
    let circle: QuasiAlgPresentation = "dim 3\nbound 1.5\n1*e1*x1_1^2 + 1*e1*x1_2^2 - 1*e1 = 0\n1*e1*x1_3 = 0\n".parse().unwrap();
    let s = build_config_classical(&circle).unwrap();
    assert!(s.linkage.is_classical());
    assert_eq!(s.sheet_bits(), s.compiled.parts.iter().map(|p| p.sheet_bits).sum::<u32>());
    let got = s.sample(30, 3, &SolveOptions::default()).unwrap();
    assert_eq!(got.configs.len(), 30);
    for phi in &got.configs {
        assert!(circle.violation(&s.point_of(phi).unwrap()) < 1e-6);
    }
}

#[test]
fn equality_only_cabled_has_one_sheet() {
    let pres = sphere();
    let s = build_config_cabled(&pres, 1.0, 0).unwrap();
    assert_eq!(s.sheet_bits(), 0);
    let got = s.sample(50, 4, &SolveOptions::default()).unwrap();
    assert_eq!(got.configs.len(), 50);
    for phi in &got.configs {
        assert!(pres.violation(&s.point_of(phi).unwrap()) < 1e-6);
    }
    let x = [point(&[0.0, 0.6, 0.8])];
    assert!(s.lift(&x, 0).is_ok());
    assert!(s.lift(&x, 1).is_err());
}

#[test]
fn cabled_ball() {
    let pres: QuasiAlgPresentation = BALL.parse().unwrap();
    let b = build_config_cabled(&pres, 1.0, 0).unwrap();
    assert_eq!(b.cable, Some(1.0));
    let got = b.sample(200, 1, &SolveOptions::default()).unwrap();
    assert_eq!(got.configs.len(), 200);
    let vals: Vec<f64> = got.configs.iter().map(|phi| pres.values(&b.point_of(phi).unwrap())[0]).collect();
    assert!(vals.iter().all(|&v| v >= -1e-6));
    assert!(vals.iter().cloned().fold(f64::INFINITY, f64::min) < 1e-2);
}

#[test]
fn builder_errors() {
    let ball: QuasiAlgPresentation = BALL.parse().unwrap();
    assert!(matches!(build_semiconfig(&ball), Err(SetError::Inequalities(1))));
    assert!(build_config_classical(&ball).is_err());
    assert!(matches!(build_config_cabled(&ball, 0.0, 0), Err(SetError::Cable(_))));
    // 1 − |x|² reaches 1 on the bound, so d must be at least ½
    assert!(matches!(build_config_cabled(&ball, 0.4, 0), Err(SetError::Cable(_))));
    assert!("dim 3\nbound 1\n1*e1*x1_1 < 0\n".parse::<QuasiAlgPresentation>().is_err());
    assert!("dim 3\nbound 1\n1*e1*x1_1 >= 0 or 1*e1*x1_2 >= 0\n".parse::<QuasiAlgPresentation>().is_err());
    assert!("dim 3\nbound 1\n1*e1*x1_1 <= 0\n".parse::<QuasiAlgPresentation>().is_err());
}

#[test]
fn infeasible_presentation_has_no_samples() {
    let pres: QuasiAlgPresentation = "dim 3\nbound 1\n1*e1*x1_1^2 + 1*e1*x1_2^2 + 1*e1*x1_3^2 + 1*e1 = 0\n".parse().unwrap();
    let s = build_semiconfig(&pres).unwrap();
    let got = s.sample(3, 0, &SolveOptions::default()).unwrap();
    assert!(got.configs.is_empty());
    assert!(got.shortfall.is_some());
}

#[test]
fn isolated_vertices_are_free() {
    let mut l = Linkage::new(3).unwrap();
    let a = l.add_fixed(None, zero(3)).unwrap();
    let v = l.add_vertex();
    l.rigid(a, v, 1.0).unwrap();
    let (big, extra) = add_isolated(&l, 2);
    assert_eq!(big.vertex_count(), 4);
    assert_eq!(big.edge_count(), 1);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let phi0 = &sample_configs(&l, 1, 0).unwrap().configs[0];
    for _ in 0..20 {
        let mut phi = Realization::for_linkage(&big);
        phi.set_point(a, &phi0.get(a).unwrap());
        phi.set_point(v, &phi0.get(v).unwrap());
        for &w in &extra {
            phi.set_point(w, &(sample_unit(&mut rng, 3) * rng.gen_range(0.0..100.0)));
        }
        assert!(big.is_realization(&phi, 1e-12).unwrap());
    }
}

#[test]
fn scaffold_reduction() {
    for f in [mk_scale(3, 2.0, 1.0, false).unwrap(), mk_inversion(3, 0.75, 1.5, true).unwrap()] {
        assert!(f.linkage.fixed().len() > 4);
        let r = reduce_fixed_vertices(&f.linkage).unwrap();
        assert_eq!(r.linkage.fixed().len(), 4);
        let pts = scaffold_points(3);
        for (v, z) in r.scaffold.iter().zip(&pts).take(4) {
            assert_eq!(r.linkage.anchor(*v), Some(z));
        }
        let got = sample_configs(&r.linkage, 200, 5).unwrap();
        assert_eq!(got.configs.len(), 200);
        for phi in &got.configs {
            assert!(r.anchor_error(phi) < 1e-6);
            // the released corner is pinned by √2 and unit bars
            assert!((phi.get(r.scaffold[4]).unwrap() - point(&[1.0, 1.0, 1.0])).norm() < 1e-6);
        }
    }
}

#[test]
fn scaffold_of_minimal_input() {
    let mut l = Linkage::new(3).unwrap();
    let pts = scaffold_points(3);
    let ids: Vec<_> = pts[..4].iter().map(|z| l.add_fixed(None, z.clone()).unwrap()).collect();
    let v = l.add_vertex();
    l.rigid(ids[0], v, 0.5).unwrap();
    let r = reduce_fixed_vertices(&l).unwrap();
    assert_eq!(r.linkage.fixed(), l.fixed());
    assert_eq!(&r.scaffold[..4], &ids[..]);
    assert_eq!(r.linkage.vertex_count(), l.vertex_count() + 1);

    let mut loose = l.clone();
    let (p, q) = (loose.add_vertex(), loose.add_vertex());
    loose.rigid(p, q, 1.0).unwrap();
    assert!(matches!(reduce_fixed_vertices(&loose), Err(SetError::Disconnected(_))));
}

#[test]
fn cube_rigidification_and_span_oracle() {
    let cx = ComplexRealization::unit_cube();
    let cube = rigidify_complex(&cx).unwrap();
    let pins = BTreeMap::from([(cube.vertex_of[0], zero(3))]);
    let got = sample_configs_with(&cube.linkage, &pins, 100, 2, &SolveOptions::default(), None).unwrap();
    assert_eq!(got.configs.len(), 100);
    let original: Vec<Point> = cx.vertices.iter().map(|v| Point::from_column_slice(v)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for phi in &got.configs {
        let at = |i: usize| phi.get(cube.vertex_of[i]).unwrap();
        for piece in &cx.pieces {
            for &i in piece {
                for &j in piece {
                    let want = (&original[i] - &original[j]).norm();
                    assert!(((at(i) - at(j)).norm() - want).abs() < 1e-7);
                }
            }
        }
        // anchors on one face, x anywhere on the cube
        let face = &cx.pieces[rng.gen_range(0..6)];
        let z: Vec<Point> = face.iter().map(|&i| at(i)).collect();
        let x = at(rng.gen_range(0..8));
        let mut t: Vec<f64> = (0..z.len()).map(|_| rng.gen_range(-1.0..2.0)).collect();
        let s: f64 = t.iter().sum();
        t.iter_mut().for_each(|ti| *ti /= s);
        let fix = 1.0 - t.iter().sum::<f64>();
        t[0] += fix;
        let d: Vec<f64> = z.iter().map(|zi| (&x - zi).norm()).collect();
        let target: Point = z.iter().zip(&t).fold(zero(3), |acc, (zi, ti)| acc + zi * *ti);
        assert!((span_distance(&z, &d, &t).unwrap() - (&x - &target).norm()).abs() < 1e-8);
    }
}

#[test]
fn span_distance_examples() {
    let z = [zero(3), point(&[2.0, 0.0, 0.0])];
    let x = point(&[0.0, 1.0, 0.0]);
    let d = [1.0, 5f64.sqrt()];
    assert_eq!(span_distance(&z, &d, &[1.0, 0.0]).unwrap(), 1.0);
    assert!((span_distance(&z, &d, &[0.5, 0.5]).unwrap() - (&x - point(&[1.0, 0.0, 0.0])).norm()).abs() < 1e-15);
    assert!(span_distance(&z, &d, &[0.5, 0.4]).is_err());
    assert!(span_distance(&z, &d[..1], &[1.0]).is_err());
}

#[test]
fn compactness_check_flags_an_escaping_set() {
    let plane: QuasiAlgPresentation = "dim 3\nbound 1\n1*e1*x1_3 = 0\n".parse().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(!plane.compactness_warnings(&mut rng, 500).is_empty());
    assert!(sphere().compactness_warnings(&mut rng, 500).is_empty());
}
