//! Quasialgebraic presentations: r_i(x) = 0 for the first ℓ′ polynomials,
//! r_i(x) ≥ 0 for the rest, inside a caller-certified bound.
//!
//! Text form, one statement per line, `#` starts a comment:
//!
//! ```text
//! dim 3
//! points 1
//! bound 1.5              # same ball about 0 for every point
//! bound 0 0 0 1.5        # or one line per point: center then radius
//! 1*e1*x1_1^2 + 1*e1*x1_2^2 + 1*e1*x1_3^2 - 1*e1 = 0
//! 1*e1 - 1*e1*x1_3 >= 0
//! ```

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::SetError;
use crate::compiler::polymap::{parse_polymap, Term};
use crate::compiler::{BoundsBox, PolyMap};
use crate::geom::{sample_ball, Point};

#[derive(Debug, Clone, PartialEq)]
pub struct QuasiAlgPresentation {
    /// r_i as the outputs of a map whose terms all point along e1.
    pub polys: PolyMap,
    /// The first `eq_count` polynomials are equalities.
    pub eq_count: usize,
    pub bound: BoundsBox,
}

impl QuasiAlgPresentation {
    pub fn new(polys: PolyMap, eq_count: usize, bound: BoundsBox) -> Result<Self, SetError> {
        if eq_count > polys.m {
            return Err(SetError::Presentation(format!("{eq_count} equalities but only {} polynomials", polys.m)));
        }
        if polys.m == 0 {
            return Err(SetError::Presentation("no polynomials".into()));
        }
        if let Some(t) = polys.outputs.iter().flatten().find(|t| t.dir != 0) {
            return Err(SetError::Presentation(format!("polynomial terms must use e1, found e{}", t.dir + 1)));
        }
        if bound.balls.len() != polys.k {
            return Err(SetError::Presentation(format!("bound has {} balls for {} points", bound.balls.len(), polys.k)));
        }
        for (c, r) in &bound.balls {
            if c.len() != polys.n || !(*r > 0.0 && r.is_finite()) {
                return Err(SetError::Presentation("bound balls need n coordinates and a positive radius".into()));
            }
        }
        Ok(Self { polys, eq_count, bound })
    }

    pub fn dim(&self) -> usize {
        self.polys.n
    }

    pub fn points(&self) -> usize {
        self.polys.k
    }

    pub fn is_algebraic(&self) -> bool {
        self.eq_count == self.polys.m
    }

    /// r_1(x), …, r_ℓ(x).
    pub fn values(&self, x: &[Point]) -> Vec<f64> {
        self.polys.eval(x).iter().map(|y| y[0]).collect()
    }

    /// Worst violation: max |r_i| over equalities and max(−r_i) over inequalities.
    pub fn violation(&self, x: &[Point]) -> f64 {
        self.values(x)
            .iter()
            .enumerate()
            .map(|(i, &r)| if i < self.eq_count { r.abs() } else { (-r).max(0.0) })
            .fold(0.0, f64::max)
    }

    pub fn contains(&self, x: &[Point], tol: f64) -> bool {
        self.violation(x) <= tol
    }

    pub fn in_bound(&self, x: &[Point]) -> bool {
        x.iter().zip(&self.bound.balls).all(|(p, (c, r))| (p - Point::from_column_slice(c)).norm() <= *r)
    }

    /// Uniform point of the bound.
    pub fn sample_bound<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Point> {
        self.bound.balls.iter().map(|(c, r)| sample_ball(rng, &Point::from_column_slice(c), *r)).collect()
    }

    /// Spot checks that the set stays inside the bound: start in the shell
    /// between one and two bound radii, pull onto the equalities by
    /// Gauss-Newton, and warn if the result is outside the bound yet meets
    /// every inequality.
    pub fn compactness_warnings<R: Rng + ?Sized>(&self, rng: &mut R, samples: usize) -> Vec<String> {
        let mut warnings = Vec::new();
        for _ in 0..samples {
            let x: Vec<Point> = self
                .bound
                .balls
                .iter()
                .map(|(c, r)| {
                    let c = Point::from_column_slice(c);
                    let dir = sample_ball(rng, &Point::zeros(c.len()), 1.0);
                    let dir = if dir.norm() > 1e-12 { dir.normalize() } else { crate::geom::basis(c.len(), 0) };
                    c + dir * (r * rng.gen_range(1.0..2.0))
                })
                .collect();
            let Some(x) = self.onto_equalities(x) else { continue };
            let r = self.values(&x);
            if !self.in_bound(&x) && (self.eq_count..self.polys.m).all(|i| r[i] >= 0.0) {
                warnings.push(format!(
                    "presented set may leave the bound near {:?}",
                    x.iter().map(|p| p.as_slice().to_vec()).collect::<Vec<_>>()
                ));
                if warnings.len() >= 4 {
                    break;
                }
            }
        }
        warnings
    }

    /// Minimum-norm Gauss-Newton steps toward r_i = 0 for the equalities.
    fn onto_equalities(&self, x: Vec<Point>) -> Option<Vec<Point>> {
        let (n, k, e) = (self.polys.n, self.polys.k, self.eq_count);
        if e == 0 {
            return Some(x);
        }
        let mut flat: Vec<f64> = x.iter().flat_map(|p| p.iter().copied()).collect();
        let unflat = |f: &[f64]| -> Vec<Point> { (0..k).map(|s| Point::from_column_slice(&f[s * n..(s + 1) * n])).collect() };
        let eqs = |f: &[f64]| -> DVector<f64> { DVector::from_iterator(e, self.values(&unflat(f)).into_iter().take(e)) };
        for _ in 0..30 {
            let r = eqs(&flat);
            if r.amax() < 1e-10 {
                return Some(unflat(&flat));
            }
            let mut j = DMatrix::zeros(e, n * k);
            for c in 0..n * k {
                let h = 1e-6 * flat[c].abs().max(1.0);
                let (mut fp, mut fm) = (flat.clone(), flat.clone());
                fp[c] += h;
                fm[c] -= h;
                j.set_column(c, &((eqs(&fp) - eqs(&fm)) / (2.0 * h)));
            }
            let gram = &j * j.transpose() + DMatrix::identity(e, e) * 1e-12;
            let step = j.transpose() * gram.lu().solve(&r)?;
            flat.iter_mut().zip(step.iter()).for_each(|(a, b)| *a -= b);
        }
        None
    }
}

fn err(line: usize, msg: impl Into<String>) -> SetError {
    SetError::Parse { line, msg: msg.into() }
}

fn numbers(line: usize, words: &[&str]) -> Result<Vec<f64>, SetError> {
    words.iter().map(|w| w.parse::<f64>().map_err(|_| err(line, format!("bad number '{w}'")))).collect()
}

impl std::str::FromStr for QuasiAlgPresentation {
    type Err = SetError;

    fn from_str(text: &str) -> Result<Self, SetError> {
        let mut dim = None;
        let mut points = None;
        let mut bounds: Vec<(usize, Vec<f64>)> = Vec::new();
        let mut eqs: Vec<(usize, String)> = Vec::new();
        let mut ineqs: Vec<(usize, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let words: Vec<&str> = body.split_whitespace().collect();
            match words[0] {
                "dim" | "points" => {
                    let [_, v] = words[..] else { return Err(err(line, format!("'{}' takes one integer", words[0]))) };
                    let v: usize = v.parse().map_err(|_| err(line, format!("bad integer '{v}'")))?;
                    if words[0] == "dim" {
                        dim = Some(v);
                    } else {
                        points = Some(v);
                    }
                }
                "bound" => bounds.push((line, numbers(line, &words[1..])?)),
                _ => {
                    if body.contains(" or ") || body.contains('|') {
                        return Err(err(line, "unions need semialgebraic preprocessing, which is not supported"));
                    }
                    if let Some(lhs) = body.strip_suffix(">= 0").or_else(|| body.strip_suffix(">=0")) {
                        ineqs.push((line, lhs.trim().to_string()));
                    } else if body.ends_with("<= 0") || body.ends_with("<=0") {
                        return Err(err(line, "write inequalities as '>= 0' (negate the polynomial)"));
                    } else if body.contains('>') || body.contains('<') || body.contains("!=") {
                        return Err(err(line, "strict inequalities are not quasialgebraic; only '= 0' and '>= 0' are accepted"));
                    } else if let Some(lhs) = body.strip_suffix("= 0").or_else(|| body.strip_suffix("=0")) {
                        eqs.push((line, lhs.trim().to_string()));
                    } else {
                        return Err(err(line, "expected 'dim', 'points', 'bound' or a polynomial ending in '= 0' or '>= 0'"));
                    }
                }
            }
        }
        let n = dim.ok_or_else(|| err(0, "missing 'dim'"))?;
        let m = points.unwrap_or(1);
        let mut balls = Vec::new();
        match bounds.as_slice() {
            [] => return Err(err(0, "missing 'bound'")),
            [(line, v)] if v.len() == 1 => {
                if m == 0 {
                    return Err(err(*line, "no points"));
                }
                balls = vec![(vec![0.0; n], v[0]); m];
            }
            list => {
                for (line, v) in list {
                    if v.len() != n + 1 {
                        return Err(err(*line, format!("bound needs {n} center coordinates and a radius")));
                    }
                    balls.push((v[..n].to_vec(), v[n]));
                }
                if balls.len() != m {
                    return Err(err(list[0].0, format!("{} bound lines for {m} points", balls.len())));
                }
            }
        }
        let eq_count = eqs.len();
        let mut outputs: Vec<Vec<Term>> = Vec::new();
        for (line, lhs) in eqs.iter().chain(&ineqs) {
            let p = parse_polymap(lhs, n, Some(m), Some(1)).map_err(|e| err(*line, e.to_string()))?;
            outputs.push(p.outputs.into_iter().next().unwrap_or_default());
        }
        Self::new(PolyMap::new(n, m, outputs), eq_count, BoundsBox { balls })
    }
}

impl fmt::Display for QuasiAlgPresentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "dim {}", self.polys.n)?;
        writeln!(f, "points {}", self.polys.k)?;
        for (c, r) in &self.bound.balls {
            let c: Vec<String> = c.iter().map(|v| format!("{v:?}")).collect();
            writeln!(f, "bound {} {r:?}", c.join(" "))?;
        }
        for (i, terms) in self.polys.outputs.iter().enumerate() {
            let single = PolyMap::new(self.polys.n, self.polys.k, vec![terms.clone()]);
            let rel = if i < self.eq_count { "=" } else { ">=" };
            writeln!(f, "{single} {rel} 0")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        let text = "dim 3\nbound 1.5\n1*e1 - 1*e1*x1_1^2 >= 0  # cap\n1*e1*x1_3 = 0\n";
        let p: QuasiAlgPresentation = text.parse().unwrap();
        assert_eq!((p.eq_count, p.polys.m), (1, 2));
        let x = [Point::from_column_slice(&[0.5, 0.0, 0.0])];
        assert_eq!(p.values(&x), vec![0.0, 0.75]);
        let again: QuasiAlgPresentation = p.to_string().parse().unwrap();
        assert_eq!(again, p);
        assert!("dim 3\nbound 1\n1*e1*x1_1 > 0".parse::<QuasiAlgPresentation>().is_err());
        assert!("dim 3\nbound 1\n1*e2*x1_1 = 0".parse::<QuasiAlgPresentation>().is_err());
        assert!(matches!("dim 3\nbound 1\n1*e1*x1_9 = 0".parse::<QuasiAlgPresentation>(), Err(SetError::Parse { line: 3, .. })));
    }
}
