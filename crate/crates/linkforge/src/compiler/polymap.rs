//! Polynomial maps (Rⁿ)ᵏ → (Rⁿ)ᵐ and their text form.
//!
//! Each output is a sum of terms `coeff*e<d>*x<slot>_<coord>^<exp>*...`,
//! outputs separated by `;`. Indices are 1-based in text, 0-based in memory.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::geom::Point;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("index out of range at {pos}: {msg}")]
    Range { pos: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Factor {
    pub slot: usize,
    pub coord: usize,
    pub exp: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: f64,
    /// Output direction e_dir.
    pub dir: usize,
    /// Sorted by (slot, coord), no repeats, positive exponents.
    pub mono: Vec<Factor>,
}

impl Term {
    pub fn degree(&self) -> u32 {
        self.mono.iter().map(|f| f.exp).sum()
    }

    /// Scalar value of the monomial at `x`.
    pub fn monomial(&self, x: &[Point]) -> f64 {
        self.mono.iter().map(|f| x[f.slot][f.coord].powi(f.exp as i32)).product()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyMap {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub outputs: Vec<Vec<Term>>,
}

impl PolyMap {
    /// Build from terms, merging like terms and dropping zeros.
    pub fn new(n: usize, k: usize, outputs: Vec<Vec<Term>>) -> Self {
        let outputs: Vec<Vec<Term>> = outputs.into_iter().map(normalize).collect();
        Self { n, k, m: outputs.len(), outputs }
    }

    pub fn eval(&self, x: &[Point]) -> Vec<Point> {
        self.outputs
            .iter()
            .map(|terms| {
                let mut y = Point::zeros(self.n);
                for t in terms {
                    y[t.dir] += t.coeff * t.monomial(x);
                }
                y
            })
            .collect()
    }

    pub fn degree(&self) -> u32 {
        self.outputs.iter().flatten().map(Term::degree).max().unwrap_or(0)
    }

    /// Random map with `terms` terms per output, total degree ≤ `deg`, |coeff| ≤ `coeff`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize, m: usize, deg: u32, terms: usize, coeff: f64) -> Self {
        let outputs = (0..m)
            .map(|_| {
                (0..terms)
                    .map(|_| {
                        let d = rng.gen_range(0..=deg);
                        let mut mono = Vec::new();
                        for _ in 0..d {
                            mono.push(Factor { slot: rng.gen_range(0..k), coord: rng.gen_range(0..n), exp: 1 });
                        }
                        let mut c: f64 = rng.gen_range(-coeff..coeff);
                        if c.abs() < 0.05 {
                            c = 0.5;
                        }
                        Term { coeff: c, dir: rng.gen_range(0..n), mono }
                    })
                    .collect()
            })
            .collect();
        Self::new(n, k, outputs)
    }
}

fn normalize(terms: Vec<Term>) -> Vec<Term> {
    let mut acc: BTreeMap<(usize, Vec<(usize, usize, u32)>), f64> = BTreeMap::new();
    let mut order = Vec::new();
    for t in terms {
        let mut exps: BTreeMap<(usize, usize), u32> = BTreeMap::new();
        for f in &t.mono {
            *exps.entry((f.slot, f.coord)).or_default() += f.exp;
        }
        let key = (t.dir, exps.into_iter().filter(|&(_, e)| e > 0).map(|((s, c), e)| (s, c, e)).collect::<Vec<_>>());
        if !acc.contains_key(&key) {
            order.push(key.clone());
        }
        *acc.entry(key).or_default() += t.coeff;
    }
    order
        .into_iter()
        .filter_map(|key| {
            let c = acc[&key];
            (c != 0.0).then(|| Term {
                coeff: c,
                dir: key.0,
                mono: key.1.iter().map(|&(slot, coord, exp)| Factor { slot, coord, exp }).collect(),
            })
        })
        .collect()
}

impl fmt::Display for PolyMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, terms) in self.outputs.iter().enumerate() {
            if j > 0 {
                write!(f, "; ")?;
            }
            if terms.is_empty() {
                write!(f, "0*e1")?;
            }
            for (i, t) in terms.iter().enumerate() {
                if i > 0 {
                    write!(f, " + ")?;
                }
                write!(f, "{:?}*e{}", t.coeff, t.dir + 1)?;
                for fa in &t.mono {
                    write!(f, "*x{}_{}", fa.slot + 1, fa.coord + 1)?;
                    if fa.exp != 1 {
                        write!(f, "^{}", fa.exp)?;
                    }
                }
            }
        }
        Ok(())
    }
}

struct Lexer<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Lexer<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{}'", c as char)))
        }
    }

    fn err(&self, msg: String) -> ParseError {
        ParseError::Syntax { pos: self.pos, msg }
    }

    fn uint(&mut self) -> Result<(usize, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected an integer".into()));
        }
        let txt = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii");
        txt.parse().map(|v| (v, start)).map_err(|_| ParseError::Syntax { pos: start, msg: "integer too large".into() })
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let s = self.s;
        let digits = |p: &mut usize| {
            let b = *p;
            while *p < s.len() && s[*p].is_ascii_digit() {
                *p += 1;
            }
            *p > b
        };
        let mut p = self.pos;
        let mut any = digits(&mut p);
        if p < s.len() && s[p] == b'.' {
            p += 1;
            any |= digits(&mut p);
        }
        if !any {
            return Err(self.err("expected a coefficient".into()));
        }
        if p < s.len() && (s[p] == b'e' || s[p] == b'E') {
            let mut q = p + 1;
            if q < s.len() && (s[q] == b'+' || s[q] == b'-') {
                q += 1;
            }
            if q < s.len() && s[q].is_ascii_digit() {
                digits(&mut q);
                p = q;
            }
        }
        self.pos = p;
        let txt = std::str::from_utf8(&s[start..p]).expect("ascii");
        txt.parse().map_err(|_| ParseError::Syntax { pos: start, msg: format!("bad number '{txt}'") })
    }
}

/// Parse the text form. `k` and `m` are inferred when `None`.
pub fn parse_polymap(text: &str, n: usize, k: Option<usize>, m: Option<usize>) -> Result<PolyMap, ParseError> {
    let mut lx = Lexer { s: text.as_bytes(), pos: 0 };
    let mut outputs: Vec<Vec<Term>> = Vec::new();
    let mut max_slot = 0;
    loop {
        let mut terms = Vec::new();
        let mut first = true;
        loop {
            let mut sign = 1.0;
            if lx.eat(b'-') {
                sign = -1.0;
            } else if !lx.eat(b'+') && !first {
                break;
            }
            first = false;
            while lx.peek() == Some(b'-') || lx.peek() == Some(b'+') {
                if lx.eat(b'-') {
                    sign = -sign;
                } else {
                    lx.eat(b'+');
                }
            }
            let coeff = sign * lx.number()?;
            lx.expect(b'*')?;
            lx.expect(b'e')?;
            let (d, dpos) = lx.uint()?;
            if d == 0 || d > n {
                return Err(ParseError::Range { pos: dpos, msg: format!("direction e{d} outside 1..={n}") });
            }
            let mut mono = Vec::new();
            while lx.eat(b'*') {
                lx.expect(b'x')?;
                let (slot, spos) = lx.uint()?;
                if slot == 0 || k.is_some_and(|k| slot > k) {
                    return Err(ParseError::Range { pos: spos, msg: format!("input slot {slot} out of range") });
                }
                lx.expect(b'_')?;
                let (coord, cpos) = lx.uint()?;
                if coord == 0 || coord > n {
                    return Err(ParseError::Range { pos: cpos, msg: format!("coordinate {coord} outside 1..={n}") });
                }
                let exp = if lx.eat(b'^') { lx.uint()?.0 as u32 } else { 1 };
                max_slot = max_slot.max(slot);
                mono.push(Factor { slot: slot - 1, coord: coord - 1, exp });
            }
            terms.push(Term { coeff, dir: d - 1, mono });
        }
        outputs.push(terms);
        if lx.eat(b';') {
            continue;
        }
        if lx.peek().is_some() {
            return Err(lx.err("unexpected character".into()));
        }
        break;
    }
    if let Some(m) = m {
        if m != outputs.len() {
            return Err(ParseError::Range { pos: 0, msg: format!("expected {m} outputs, found {}", outputs.len()) });
        }
    }
    let k = k.unwrap_or(max_slot.max(1));
    Ok(PolyMap::new(n, k, outputs))
}
