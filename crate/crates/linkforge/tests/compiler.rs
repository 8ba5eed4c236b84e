use linkforge::compiler::{compile, compile_text, compose_parallel, compose_serial, fanout, lower, parse_polymap, plan_domains, BoundsBox, Flavor, PolyMap};
use linkforge::gadgets::{mk_average, mk_basic, mk_scale, mk_translation, mk_translation_on};
use linkforge::geom::{point, zero, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Direct evaluation from the term list.
fn direct(p: &PolyMap, x: &[Point]) -> Vec<Point> {
    p.outputs
        .iter()
        .map(|terms| {
            let mut y = zero(p.n);
            for t in terms {
                let mut m = t.coeff;
                for f in &t.mono {
                    for _ in 0..f.exp {
                        m *= x[f.slot][f.coord];
                    }
                }
                y[t.dir] += m;
            }
            y
        })
        .collect()
}

fn err(a: &[Point], b: &[Point]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
}

fn corpus(count: usize, seed: u64) -> Vec<PolyMap> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let k = rng.gen_range(1..=2);
            let m = rng.gen_range(1..=2);
            let terms = rng.gen_range(1..=3);
            PolyMap::random(&mut rng, 3, k, m, 3, terms, 2.0)
        })
        .collect()
}

#[test]
fn lowering_matches_direct_evaluation() {
    for (i, p) in corpus(50, 1).iter().enumerate() {
        let k = BoundsBox::uniform(3, p.k, 1.0);
        let dag = plan_domains(&lower(p), &k).unwrap();
        let dom = k.domain();
        let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
        for _ in 0..100 {
            let x = dom.sample(&mut rng).unwrap();
            assert!(err(&dag.eval(&x).unwrap(), &direct(p, &x)) < 1e-10, "map {p}");
            // every node stays inside its planned bound
            for (nd, vals) in dag.nodes.iter().zip(dag.eval_nodes(&x).unwrap()) {
                let b = &nd.plan.as_ref().unwrap().bound;
                for v in vals {
                    assert!((v - &b.center).norm() <= b.radius * (1.0 + 1e-9) + 1e-12, "map {p}: node {:?}", nd.kind);
                }
            }
        }
    }
}

#[test]
fn compiled_maps_reproduce_the_polynomial() {
    for (i, p) in corpus(8, 2).iter().enumerate() {
        let k = BoundsBox::uniform(3, p.k, 1.0);
        for flavor in [Flavor::Classical, Flavor::Cabled] {
            let c = compile(p, &k, flavor).unwrap();
            let g = &c.gadget;
            let bits = g.sheet_bits() as usize;
            let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
            for _ in 0..20 {
                let x = k.domain().sample(&mut rng).unwrap();
                assert!(g.in_domain(&x), "K escapes the domain of {p}");
                let choice: Vec<bool> = (0..bits).map(|_| rng.gen()).collect();
                let phi = g.forward_bits(&x, &choice).unwrap();
                assert!(g.linkage.max_residual(&phi).unwrap() < 1e-9, "{flavor} {p}");
                assert!(err(&phi.restrict(&g.outputs).unwrap(), &direct(p, &x)) < 1e-6, "{flavor} {p}");
            }
            let from_parts: u32 = c.parts.iter().map(|r| r.sheet_bits).sum();
            match flavor {
                Flavor::Cabled => assert_eq!(g.sheet_bits(), 0),
                Flavor::Classical => assert_eq!(g.sheet_bits(), from_parts),
            }
        }
    }
}

#[test]
fn planned_domain_contains_k() {
    for p in corpus(10, 3) {
        let k = BoundsBox { balls: (0..p.k).map(|s| (vec![0.1 * s as f64, 0.0, -0.2], 0.8)).collect() };
        let c = compile(&p, &k, Flavor::Cabled).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let x = k.domain().sample(&mut rng).unwrap();
            assert!(c.gadget.in_domain(&x));
        }
    }
}

#[test]
fn square_example() {
    let k = BoundsBox::uniform(3, 1, 1.0);
    let c = compile_text("1*e1*x1_1^2", 3, &k, Flavor::Classical).unwrap();
    let h = c.dag.histogram();
    assert_eq!(h.get("project_line"), Some(&1));
    assert_eq!(h.get("invert_line"), Some(&3));
    assert_eq!(h.get("average"), Some(&1));
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let x = k.domain().sample(&mut rng).unwrap();
        let phi = c.gadget.forward(&x, rng.gen_range(0..64)).unwrap();
        let want = point(&[x[0][0] * x[0][0], 0.0, 0.0]);
        assert!((phi.get(c.gadget.outputs[0]).unwrap() - want).norm() < 1e-6);
    }
}

#[test]
fn parse_examples() {
    let p = parse_polymap("1*e1*x1_1^2", 3, Some(1), Some(1)).unwrap();
    let x = [point(&[0.5, 2.0, 3.0])];
    assert_eq!(p.eval(&x), vec![point(&[0.25, 0.0, 0.0])]);
    let s = parse_polymap("1*e1*x1_1 + 1*e1*x2_1", 3, Some(2), Some(1)).unwrap();
    assert_eq!(s.eval(&[point(&[0.5, 0.0, 0.0]), point(&[0.25, 9.0, 0.0])]), vec![point(&[0.75, 0.0, 0.0])]);
    assert!(parse_polymap("1*e4*x1_1", 3, Some(1), Some(1)).is_err());
    let sum = lower(&s);
    assert_eq!(sum.histogram().get("average"), Some(&1));
    let id = lower(&parse_polymap("1*e1*x1_1 + 1*e2*x1_2 + 1*e3*x1_3", 3, Some(1), Some(1)).unwrap());
    assert_eq!(id.gadget_nodes(), 0);
}

#[test]
fn planning_errors() {
    let p = parse_polymap("1*e1*x1_1^2", 3, Some(1), Some(1)).unwrap();
    assert!(plan_domains(&lower(&p), &BoundsBox::uniform(3, 1, 0.0)).is_err());
    assert!(plan_domains(&lower(&p), &BoundsBox { balls: vec![] }).is_err());
}

#[test]
fn composition_examples() {
    let z0 = point(&[0.3, 0.0, -0.1]);
    let there = mk_translation(3, &z0, 1.0, false).unwrap();
    let back = mk_translation_on(3, &-&z0, &z0, 1.0, false).unwrap();
    let id = compose_serial(&there, &back).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let x = id.sample_domain(&mut rng).unwrap();
        let phi = id.forward(&x, 0).unwrap();
        assert!((phi.get(id.outputs[0]).unwrap() - &x[0]).norm() < 1e-9);
        assert!(id.linkage.max_residual(&phi).unwrap() < 1e-9);
    }

    // sheet bits add under composition
    let s2 = mk_scale(3, 2.0, 0.4, false).unwrap();
    let s_half = mk_scale(3, 0.5, 0.8, false).unwrap();
    let both = compose_serial(&s2, &s_half).unwrap();
    assert_eq!(both.sheets().count(), Some(s2.sheets().count().unwrap() * s_half.sheets().count().unwrap()));
    let basic_like = mk_basic(3, &zero(3), 2.0, 1.0, false).unwrap();
    assert_eq!(basic_like.sheets().count(), Some(2));

    let avg = mk_average(3, 1.0, false).unwrap();
    assert!(compose_serial(&there, &avg).is_err());

    let pair = compose_parallel(&there, &mk_translation(3, &z0, 1.0, true).unwrap()).unwrap();
    let x = pair.interior_point().unwrap();
    let phi = pair.forward(&x, 0).unwrap();
    for (o, xi) in pair.outputs.iter().zip(&x) {
        assert!((phi.get(*o).unwrap() - (xi + &z0)).norm() < 1e-12);
    }

    let f = fanout(&mk_scale(3, 2.0, 1.0, true).unwrap(), &mk_scale(3, 3.0, 1.0, true).unwrap()).unwrap();
    let x = [point(&[0.1, 0.2, -0.3])];
    let phi = f.forward(&x, 0).unwrap();
    assert!((phi.get(f.outputs[0]).unwrap() - &x[0] * 2.0).norm() < 1e-12);
    assert!((phi.get(f.outputs[1]).unwrap() - &x[0] * 3.0).norm() < 1e-12);
    assert!(fanout(&there, &avg).is_err());
}

#[test]
fn constant_map_has_fixed_output() {
    let k = BoundsBox::uniform(3, 2, 1.0);
    let c = compile_text("0.5*e2", 3, &k, Flavor::Cabled).unwrap();
    assert_eq!(c.gadget.inputs.len(), 2);
    assert!(c.gadget.linkage.is_fixed(c.gadget.outputs[0]));
    assert_eq!(c.gadget.linkage.anchor(c.gadget.outputs[0]).unwrap(), &point(&[0.0, 0.5, 0.0]));
}
