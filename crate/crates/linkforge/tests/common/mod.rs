//! Gadget roster with closed-form oracles written independently of the library.
#![allow(dead_code)]

use linkforge::gadgets::{mk_average, mk_basic, mk_inversion, mk_projection, mk_scale, mk_segment, mk_translation, FunctionalLinkage};
use linkforge::geom::{point, zero, Point};

pub type Oracle = Box<dyn Fn(&[Point]) -> Vec<Point> + Sync>;

pub struct Case {
    pub name: String,
    pub gadget: FunctionalLinkage,
    pub oracle: Oracle,
}

fn case(name: impl Into<String>, gadget: FunctionalLinkage, oracle: Oracle) -> Case {
    Case { name: name.into(), gadget, oracle }
}

/// Translation, scale(2, ½, −1), average, inversion(c = ¾), projection(r = 1), segment.
pub fn roster(strong: bool) -> Vec<Case> {
    let z0 = point(&[0.3, -0.2, 0.5]);
    let shift = z0.clone();
    let mut out = vec![case("translation", mk_translation(3, &z0, 1.0, strong).unwrap(), Box::new(move |x| vec![&x[0] + &shift]))];
    for lambda in [2.0, 0.5, -1.0] {
        out.push(case(format!("scale({lambda})"), mk_scale(3, lambda, 1.0, strong).unwrap(), Box::new(move |x| vec![&x[0] * lambda])));
    }
    out.push(case("average", mk_average(3, 1.0, strong).unwrap(), Box::new(|x| vec![(&x[0] + &x[1]) / 2.0])));
    out.push(case(
        "inversion",
        mk_inversion(3, 0.75, 1.5, strong).unwrap(),
        Box::new(|x| {
            let g = x[0][0];
            vec![point(&[1.0 / g, 0.0, 0.0])]
        }),
    ));
    out.push(case(
        "projection",
        mk_projection(3, 1.0, strong).unwrap(),
        Box::new(|x| {
            let z = &x[0];
            vec![point(&[z[0], 0.0, 0.0]), point(&[z[0], -z[1], -z[2]])]
        }),
    ));
    out.push(case(
        "segment",
        mk_segment(3, &zero(3), &point(&[1.0, 0.0, 0.0]), strong).unwrap(),
        Box::new(|x| x.to_vec()),
    ));
    out
}

pub fn basic(strong: bool) -> FunctionalLinkage {
    mk_basic(3, &zero(3), 2.0, 1.0, strong).unwrap()
}
