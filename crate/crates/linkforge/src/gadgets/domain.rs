//! Restricted domains of functional linkages.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geom::{gram_schmidt, sample_ball, sample_unit, Point, Similarity};

/// Relative membership tolerance.
pub const DOMAIN_TOL: f64 = 1e-9;

/// A compact set of input tuples. Single-slot variants describe one point of R^n;
/// `Product` stacks slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Ball { center: Vec<f64>, radius: f64 },
    Segment { a: Vec<f64>, b: Vec<f64> },
    /// {center + t·direction : inner ≤ |t| ≤ outer}
    LineAnnulus { center: Vec<f64>, direction: Vec<f64>, inner: f64, outer: f64 },
    /// Round sphere inside the affine subspace through `center` orthogonal to `normals`.
    Sphere { center: Vec<f64>, radius: f64, normals: Vec<Vec<f64>> },
    Product { parts: Vec<Domain> },
    Union { parts: Vec<Domain> },
    Intersection { parts: Vec<Domain> },
}

fn p(v: &[f64]) -> Point {
    Point::from_column_slice(v)
}

fn tol(scale: f64) -> f64 {
    DOMAIN_TOL * scale.max(1.0)
}

impl Domain {
    pub fn ball(center: &Point, radius: f64) -> Self {
        Domain::Ball { center: center.as_slice().to_vec(), radius }
    }

    pub fn segment(a: &Point, b: &Point) -> Self {
        Domain::Segment { a: a.as_slice().to_vec(), b: b.as_slice().to_vec() }
    }

    pub fn line_annulus(center: &Point, direction: &Point, inner: f64, outer: f64) -> Self {
        let d = direction / direction.norm();
        Domain::LineAnnulus { center: center.as_slice().to_vec(), direction: d.as_slice().to_vec(), inner, outer }
    }

    /// Slotwise product; a single slot stays unwrapped.
    pub fn product(parts: Vec<Domain>) -> Self {
        let mut flat = Vec::new();
        for d in parts {
            match d {
                Domain::Product { parts } => flat.extend(parts),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            flat.pop().expect("one part")
        } else {
            Domain::Product { parts: flat }
        }
    }

    pub fn intersection(a: Domain, b: Domain) -> Self {
        if a == b {
            return a;
        }
        let mut parts = Vec::new();
        for d in [a, b] {
            match d {
                Domain::Intersection { parts: ps } => parts.extend(ps),
                other => parts.push(other),
            }
        }
        Domain::Intersection { parts }
    }

    /// Number of R^n slots.
    pub fn arity(&self) -> usize {
        match self {
            Domain::Product { parts } => parts.iter().map(|d| d.arity()).sum(),
            Domain::Union { parts } | Domain::Intersection { parts } => parts.first().map_or(1, |d| d.arity()),
            _ => 1,
        }
    }

    /// Per-slot domains (only meaningful when the domain is a product of single slots).
    pub fn slots(&self) -> Vec<Domain> {
        match self {
            Domain::Product { parts } => parts.clone(),
            other if other.arity() == 1 => vec![other.clone()],
            other => vec![other.clone()],
        }
    }

    pub fn contains(&self, x: &[Point]) -> bool {
        if x.len() != self.arity() {
            return false;
        }
        match self {
            Domain::Ball { center, radius } => {
                let c = p(center);
                (&x[0] - &c).norm() <= radius + tol(radius + c.amax())
            }
            Domain::Segment { a, b } => {
                let (a, b) = (p(a), p(b));
                let ab = &b - &a;
                let len = ab.norm();
                let t = (&x[0] - &a).dot(&ab) / (len * len);
                let foot = &a + &ab * t.clamp(0.0, 1.0);
                (&x[0] - foot).norm() <= tol(len + a.amax())
            }
            Domain::LineAnnulus { center, direction, inner, outer } => {
                let (c, d) = (p(center), p(direction));
                let rel = &x[0] - &c;
                let t = rel.dot(&d);
                let off = (&rel - &d * t).norm();
                let e = tol(*outer + c.amax());
                off <= e && t.abs() >= inner - e && t.abs() <= outer + e
            }
            Domain::Sphere { center, radius, normals } => {
                let rel = &x[0] - p(center);
                let e = tol(*radius);
                normals.iter().all(|nv| rel.dot(&p(nv)).abs() <= e) && (rel.norm() - radius).abs() <= e
            }
            Domain::Product { parts } => {
                let mut i = 0;
                for d in parts {
                    let k = d.arity();
                    if !d.contains(&x[i..i + k]) {
                        return false;
                    }
                    i += k;
                }
                true
            }
            Domain::Union { parts } => parts.iter().any(|d| d.contains(x)),
            Domain::Intersection { parts } => parts.iter().all(|d| d.contains(x)),
        }
    }

    /// Random point; `None` if rejection sampling of an intersection fails.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Vec<Point>> {
        match self {
            Domain::Ball { center, radius } => Some(vec![sample_ball(rng, &p(center), *radius)]),
            Domain::Segment { a, b } => {
                let t: f64 = rng.gen();
                let (a, b) = (p(a), p(b));
                Some(vec![&a + (&b - &a) * t])
            }
            Domain::LineAnnulus { center, direction, inner, outer } => {
                let t = rng.gen_range(*inner..=*outer);
                let s = if rng.gen::<bool>() { t } else { -t };
                Some(vec![p(center) + p(direction) * s])
            }
            Domain::Sphere { center, radius, normals } => {
                let c = p(center);
                let ns = gram_schmidt(&normals.iter().map(|v| p(v)).collect::<Vec<_>>());
                loop {
                    let mut g = sample_unit(rng, c.len());
                    for nv in &ns {
                        let d = g.dot(nv);
                        g -= nv * d;
                    }
                    let ng = g.norm();
                    if ng > 1e-6 {
                        return Some(vec![&c + g * (*radius / ng)]);
                    }
                }
            }
            Domain::Product { parts } => {
                let mut out = Vec::new();
                for d in parts {
                    out.extend(d.sample(rng)?);
                }
                Some(out)
            }
            Domain::Union { parts } => {
                let i = rng.gen_range(0..parts.len());
                parts[i].sample(rng)
            }
            Domain::Intersection { parts } => {
                for _ in 0..1000 {
                    let x = parts[0].sample(rng)?;
                    if parts[1..].iter().all(|d| d.contains(&x)) {
                        return Some(x);
                    }
                }
                None
            }
        }
    }

    /// A deterministic point well inside the domain.
    pub fn interior_point(&self) -> Option<Vec<Point>> {
        match self {
            Domain::Ball { center, .. } => Some(vec![p(center)]),
            Domain::Segment { a, b } => Some(vec![(p(a) + p(b)) * 0.5]),
            Domain::LineAnnulus { center, direction, inner, outer } => {
                Some(vec![p(center) + p(direction) * ((inner + outer) / 2.0)])
            }
            Domain::Sphere { center, radius, normals } => {
                let c = p(center);
                let n = c.len();
                let mut vs: Vec<Point> = normals.iter().map(|v| p(v)).collect();
                let k = gram_schmidt(&vs).len();
                for i in 0..n {
                    vs.push(crate::geom::basis(n, i));
                }
                let frame = gram_schmidt(&vs);
                frame.get(k).map(|u| vec![&c + u * *radius])
            }
            Domain::Product { parts } => {
                let mut out = Vec::new();
                for d in parts {
                    out.extend(d.interior_point()?);
                }
                Some(out)
            }
            Domain::Union { parts } => parts.first()?.interior_point(),
            Domain::Intersection { parts } => {
                let x = parts.first()?.interior_point()?;
                if self.contains(&x) {
                    Some(x)
                } else {
                    None
                }
            }
        }
    }

    /// Image under a similarity applied to every slot.
    pub fn map(&self, s: &Similarity) -> Domain {
        let ap = |v: &Vec<f64>| s.apply(&p(v)).as_slice().to_vec();
        let lin = |v: &Vec<f64>| s.motion.rotation.clone() * p(v);
        match self {
            Domain::Ball { center, radius } => Domain::Ball { center: ap(center), radius: radius * s.scale },
            Domain::Segment { a, b } => Domain::Segment { a: ap(a), b: ap(b) },
            Domain::LineAnnulus { center, direction, inner, outer } => Domain::LineAnnulus {
                center: ap(center),
                direction: lin(direction).as_slice().to_vec(),
                inner: inner * s.scale,
                outer: outer * s.scale,
            },
            Domain::Sphere { center, radius, normals } => Domain::Sphere {
                center: ap(center),
                radius: radius * s.scale,
                normals: normals.iter().map(|v| lin(v).as_slice().to_vec()).collect(),
            },
            Domain::Product { parts } => Domain::Product { parts: parts.iter().map(|d| d.map(s)).collect() },
            Domain::Union { parts } => Domain::Union { parts: parts.iter().map(|d| d.map(s)).collect() },
            Domain::Intersection { parts } => {
                Domain::Intersection { parts: parts.iter().map(|d| d.map(s)).collect() }
            }
        }
    }

    /// Whether `self` is certainly inside `other` (conservative; balls only).
    pub fn within(&self, other: &Domain) -> bool {
        match (self, other) {
            (Domain::Ball { center: c1, radius: r1 }, Domain::Ball { center: c2, radius: r2 }) => {
                let d = (p(c1) - p(c2)).norm();
                d + r1 <= r2 * (1.0 + 1e-12) + 1e-12
            }
            (Domain::Product { parts: a }, Domain::Product { parts: b }) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.within(y))
            }
            _ => self == other,
        }
    }
}
