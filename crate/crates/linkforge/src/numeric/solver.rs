//! Damped least squares on the edge and anchor constraints of a linkage.
//!
//! Fixed and pinned vertices are eliminated; the unknowns are the coordinates
//! of every other live vertex. Edge residuals use the smooth form
//! `(|u-v|² - L²) / 2L`, with the one-sided hinge for flexible edges.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Once;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};
use faer::{Mat, Side};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::reduce::{affine_relations, Relation};
use crate::geom::{sample_ball, Point};
use crate::linkage::{Linkage, LinkageError, Realization, VertexId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Convergence threshold on the max residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial damping factor.
    pub damping: f64,
    /// Seed for the random parts of a missing guess.
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 300, damping: 1e-3, seed: 0 }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("no convergence after {iterations} iterations (max residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("pin on fixed vertex {0} disagrees with its anchor")]
    PinConflict(VertexId),
    #[error("precondition: {0}")]
    Precondition(String),
    #[error(transparent)]
    Linkage(#[from] LinkageError),
}

/// Position of a vertex as an affine combination of unknown blocks.
#[derive(Debug, Clone)]
struct Expr {
    terms: Vec<(usize, f64)>,
    offset: Point,
}

impl Expr {
    fn add_scaled(&mut self, other: &Expr, c: f64) {
        for &(k, a) in &other.terms {
            match self.terms.iter_mut().find(|t| t.0 == k) {
                Some(t) => t.1 += c * a,
                None => self.terms.push((k, c * a)),
            }
        }
        self.offset += &other.offset * c;
    }
}

#[derive(Debug, Clone)]
struct Bar {
    /// u − v = Σ α_k X_k + offset.
    terms: Vec<(usize, f64)>,
    offset: Vec<f64>,
    length: f64,
    flexible: bool,
    /// (term index i, term index j, slot of the larger block in `upper` of the smaller).
    cross: Vec<(usize, usize, usize)>,
}

/// A linkage with its pins, reduced to unknowns and residuals.
///
/// Free vertices pinned down by collinear joints or parallelogram relations
/// are expressed through the others, so the unknowns are the remaining ones.
pub struct System {
    dim: usize,
    slots: usize,
    /// Unknown block -> vertex.
    vars: Vec<VertexId>,
    /// Every live vertex and its expression.
    exprs: Vec<(VertexId, Expr)>,
    bars: Vec<Bar>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    symbolic: Option<SymbolicLlt<usize>>,
}

static SEQUENTIAL: Once = Once::new();

impl System {
    pub fn new(l: &Linkage, pins: &BTreeMap<VertexId, Point>) -> Result<Self, SolveError> {
        SEQUENTIAL.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
        let n = l.dim();
        for (&v, p) in pins {
            if !l.contains(v) {
                return Err(LinkageError::UnknownVertex(v).into());
            }
            if p.len() != n {
                return Err(LinkageError::DimMismatch { expected: n, got: p.len() }.into());
            }
            if let Some(a) = l.anchor(v) {
                if (a - p).norm() > 1e-12 * (1.0 + a.norm()) {
                    return Err(SolveError::PinConflict(v));
                }
            }
        }
        let held: BTreeSet<VertexId> = l.vertices().filter(|v| l.is_fixed(*v) || pins.contains_key(v)).collect();
        let rel = affine_relations(l, &held);
        let mut vars = Vec::new();
        let mut memo: BTreeMap<VertexId, Expr> = BTreeMap::new();
        for v in l.vertices() {
            if !held.contains(&v) && !rel.contains_key(&v) {
                memo.insert(v, Expr { terms: vec![(vars.len(), 1.0)], offset: Point::zeros(n) });
                vars.push(v);
            } else if held.contains(&v) {
                let p = l.anchor(v).or_else(|| pins.get(&v)).expect("held").clone();
                memo.insert(v, Expr { terms: Vec::new(), offset: p });
            }
        }
        fn expand(v: VertexId, rel: &BTreeMap<VertexId, Relation>, memo: &mut BTreeMap<VertexId, Expr>, n: usize) -> Expr {
            if let Some(e) = memo.get(&v) {
                return e.clone();
            }
            let mut e = Expr { terms: Vec::new(), offset: Point::zeros(n) };
            for &(w, c) in &rel[&v] {
                let sub = expand(w, rel, memo, n);
                e.add_scaled(&sub, c);
            }
            e.terms.retain(|t| t.1.abs() > 1e-15);
            memo.insert(v, e.clone());
            e
        }
        for &v in rel.keys() {
            expand(v, &rel, &mut memo, n);
        }
        let mut upper: Vec<Vec<usize>> = vec![Vec::new(); vars.len()];
        let mut bars = Vec::new();
        for e in l.edges() {
            let mut d = memo[&e.u].clone();
            d.add_scaled(&memo[&e.v], -1.0);
            d.terms.retain(|t| t.1.abs() > 1e-15);
            d.terms.sort_by_key(|t| t.0);
            for i in 0..d.terms.len() {
                for j in i + 1..d.terms.len() {
                    upper[d.terms[i].0].push(d.terms[j].0);
                }
            }
            bars.push(Bar { terms: d.terms, offset: d.offset.as_slice().to_vec(), length: e.length, flexible: e.flexible, cross: Vec::new() });
        }
        for u in &mut upper {
            u.sort_unstable();
            u.dedup();
        }
        for bar in &mut bars {
            for i in 0..bar.terms.len() {
                for j in i + 1..bar.terms.len() {
                    let (lo, hi) = (bar.terms[i].0, bar.terms[j].0);
                    let pos = upper[lo].binary_search(&hi).expect("pattern");
                    bar.cross.push((i, j, pos));
                }
            }
        }
        // lower-triangle CSC pattern, column (I, p): rows (I, q≥p) then n rows per upper neighbor
        let nv = vars.len() * n;
        let mut col_ptr = Vec::with_capacity(nv + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0);
        for (i, up) in upper.iter().enumerate() {
            for p in 0..n {
                for q in p..n {
                    row_idx.push(i * n + q);
                }
                for &k in up {
                    for q in 0..n {
                        row_idx.push(k * n + q);
                    }
                }
                col_ptr.push(row_idx.len());
            }
        }
        let symbolic = if nv == 0 {
            None
        } else {
            let sym = SymbolicSparseColMat::new_checked(nv, nv, col_ptr.clone(), None, row_idx.clone());
            Some(SymbolicLlt::try_new(sym.as_ref(), Side::Lower).map_err(|e| SolveError::Precondition(format!("{e:?}")))?)
        };
        let exprs = memo.into_iter().collect();
        Ok(Self { dim: n, slots: l.slot_count(), vars, exprs, bars, col_ptr, row_idx, symbolic })
    }

    /// Number of scalar unknowns.
    pub fn unknowns(&self) -> usize {
        self.vars.len() * self.dim
    }

    pub fn residual_count(&self) -> usize {
        self.bars.len()
    }

    /// Vertices whose coordinates are the unknowns, in block order.
    pub fn free_vertices(&self) -> &[VertexId] {
        &self.vars
    }

    pub fn pack(&self, phi: &Realization) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.unknowns());
        for &v in &self.vars {
            match phi.get(v) {
                Some(p) => x.extend(p.iter()),
                None => x.extend(std::iter::repeat_n(0.0, self.dim)),
            }
        }
        x
    }

    pub fn unpack(&self, x: &[f64]) -> Realization {
        let n = self.dim;
        let mut phi = Realization::new(n, self.slots);
        let mut p = vec![0.0; n];
        for (v, e) in &self.exprs {
            p.copy_from_slice(e.offset.as_slice());
            for &(k, c) in &e.terms {
                for q in 0..n {
                    p[q] += c * x[k * n + q];
                }
            }
            phi.set(*v, &p);
        }
        phi
    }

    fn diff(&self, x: &[f64], bar: &Bar, d: &mut [f64]) -> f64 {
        let n = self.dim;
        d.copy_from_slice(&bar.offset);
        for &(k, c) in &bar.terms {
            for q in 0..n {
                d[q] += c * x[k * n + q];
            }
        }
        d.iter().map(|v| v * v).sum()
    }

    fn smooth(bar: &Bar, d2: f64) -> f64 {
        let r = (d2 - bar.length * bar.length) / (2.0 * bar.length);
        if bar.flexible {
            r.max(0.0)
        } else {
            r
        }
    }

    /// Residual vector in bar order.
    pub fn residuals(&self, x: &[f64]) -> Vec<f64> {
        let mut d = vec![0.0; self.dim];
        self.bars.iter().map(|b| Self::smooth(b, self.diff(x, b, &mut d))).collect()
    }

    /// Max edge violation in distance units (what [`Linkage::residuals`] reports).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut d = vec![0.0; self.dim];
        self.bars
            .iter()
            .map(|b| {
                let e = self.diff(x, b, &mut d).sqrt() - b.length;
                if b.flexible {
                    e.max(0.0)
                } else {
                    e.abs()
                }
            })
            .fold(0.0, f64::max)
    }

    fn cost(&self, x: &[f64]) -> f64 {
        let mut d = vec![0.0; self.dim];
        self.bars.iter().map(|b| Self::smooth(b, self.diff(x, b, &mut d)).powi(2)).sum::<f64>() / 2.0
    }

    /// Dense Jacobian of [`System::residuals`].
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim;
        let mut j = DMatrix::zeros(self.bars.len(), self.unknowns());
        let mut d = vec![0.0; n];
        for (row, bar) in self.bars.iter().enumerate() {
            let r = Self::smooth(bar, self.diff(x, bar, &mut d));
            if bar.flexible && r <= 0.0 {
                continue;
            }
            for &(k, c) in &bar.terms {
                for q in 0..n {
                    j[(row, k * n + q)] += c * d[q] / bar.length;
                }
            }
        }
        j
    }

    /// Lower triangle of JᵀJ in pattern order, and Jᵀr.
    fn normal_equations(&self, x: &[f64], vals: &mut [f64], grad: &mut [f64]) {
        let n = self.dim;
        vals.iter_mut().for_each(|v| *v = 0.0);
        grad.iter_mut().for_each(|v| *v = 0.0);
        let mut g = vec![0.0; n];
        for bar in &self.bars {
            let r = Self::smooth(bar, self.diff(x, bar, &mut g));
            if bar.flexible && r <= 0.0 {
                continue;
            }
            g.iter_mut().for_each(|v| *v /= bar.length);
            for &(k, c) in &bar.terms {
                for p in 0..n {
                    grad[k * n + p] += c * g[p] * r;
                    let base = self.col_ptr[k * n + p];
                    for q in p..n {
                        vals[base + q - p] += c * c * g[p] * g[q];
                    }
                }
            }
            for &(i, j, pos) in &bar.cross {
                let ((lo, ci), (_, cj)) = (bar.terms[i], bar.terms[j]);
                for p in 0..n {
                    let base = self.col_ptr[lo * n + p] + (n - p) + pos * n;
                    for q in 0..n {
                        vals[base + q] += ci * cj * g[p] * g[q];
                    }
                }
            }
        }
    }

    fn diag_positions(&self) -> Vec<usize> {
        (0..self.unknowns()).map(|c| self.col_ptr[c]).collect()
    }

    /// Levenberg-Marquardt from `x`; returns the final point, its violation and iteration count.
    pub fn descend(&self, mut x: Vec<f64>, opts: &SolveOptions) -> (Vec<f64>, f64, usize) {
        let mut viol = self.max_violation(&x);
        let Some(symbolic) = &self.symbolic else {
            return (x, viol, 0);
        };
        if viol <= opts.tol {
            return (x, viol, 0);
        }
        let n = self.dim;
        let nv = self.unknowns();
        let mut vals = vec![0.0; self.row_idx.len()];
        let mut grad = vec![0.0; nv];
        let diag = self.diag_positions();
        let sym = SymbolicSparseColMat::new_checked(nv, nv, self.col_ptr.clone(), None, self.row_idx.clone());
        let mut lambda = opts.damping;
        let mut cost = self.cost(&x);
        let mut polish = 0;
        let mut iters = 0;
        let mut trial = vec![0.0; nv];
        let mut fresh = true;
        let mut scale = vec![0.0; nv];
        let mut damped = vec![0.0; vals.len()];
        let mut rhs = Mat::<f64>::zeros(nv, 1);
        while iters < opts.max_iter {
            iters += 1;
            if fresh {
                self.normal_equations(&x, &mut vals, &mut grad);
                // damping is isotropic within each vertex block
                for blk in 0..self.vars.len() {
                    let t = (0..n).map(|p| vals[diag[blk * n + p]]).sum::<f64>() / n as f64;
                    scale[blk * n..(blk + 1) * n].iter_mut().for_each(|s| *s = t + 1e-9);
                }
                fresh = false;
            }
            damped.copy_from_slice(&vals);
            for (c, &d) in diag.iter().enumerate() {
                damped[d] += lambda * scale[c];
            }
            let mat = SparseColMatRef::new(sym.as_ref(), &damped);
            match Llt::try_new_with_symbolic(symbolic.clone(), mat, Side::Lower) {
                Ok(llt) => {
                    for i in 0..nv {
                        rhs[(i, 0)] = -grad[i];
                    }
                    llt.solve_in_place(rhs.as_mut());
                }
                Err(_) => {
                    lambda = (lambda * 8.0).min(1e16);
                    continue;
                }
            };
            for i in 0..nv {
                trial[i] = x[i] + rhs[(i, 0)];
            }
            let c = self.cost(&trial);
            if c.is_finite() && c <= cost {
                std::mem::swap(&mut x, &mut trial);
                let improved = c < cost;
                cost = c;
                fresh = true;
                lambda = (lambda * 0.5).max(1e-15);
                viol = self.max_violation(&x);
                if viol <= opts.tol {
                    // a couple of extra steps to push well below the threshold
                    polish += 1;
                    if polish > 2 || !improved || viol <= opts.tol * 1e-3 {
                        break;
                    }
                }
            } else {
                lambda = (lambda * 2.0).min(1e16);
                if lambda >= 1e16 {
                    break;
                }
            }
        }
        (x, viol, iters)
    }
}

/// Find a realization with `pins` held exactly, starting from `guess`.
///
/// Unassigned vertices in the guess (or every free vertex when there is no
/// guess) start at seeded random points in their restart ball.
pub fn solve_realization(
    l: &Linkage,
    pins: &BTreeMap<VertexId, Point>,
    guess: Option<&Realization>,
    opts: &SolveOptions,
) -> Result<Realization, SolveError> {
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(SolveError::Precondition("tol must be positive and max_iter at least 1".into()));
    }
    if let Some(g) = guess {
        let pinned = pins.iter().all(|(v, p)| g.get(*v).is_some_and(|q| &q == p));
        if pinned && l.max_residual(g).is_ok_and(|r| r <= opts.tol) {
            return Ok(g.clone());
        }
    }
    let sys = System::new(l, pins)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let start = match guess {
        Some(g) if sys.vars.iter().all(|&v| g.is_assigned(v)) => sys.pack(g),
        other => {
            let balls = restart_balls(l, pins);
            let mut x = Vec::with_capacity(sys.unknowns());
            for &v in &sys.vars {
                match other.and_then(|g| g.get(v)) {
                    Some(p) => x.extend(p.iter()),
                    None => {
                        let (c, r) = balls.get(&v).cloned().unwrap_or_else(|| (Point::zeros(l.dim()), l.extent().max(1.0)));
                        x.extend(sample_ball(&mut rng, &c, r).iter());
                    }
                }
            }
            x
        }
    };
    let (x, viol, iterations) = sys.descend(start, opts);
    if viol <= opts.tol {
        Ok(sys.unpack(&x))
    } else {
        Err(SolveError::NoConvergence { iterations, residual: viol })
    }
}

/// Residuals and dense Jacobian of the solver's objective at `phi`.
pub fn residual_jacobian(
    l: &Linkage,
    pins: &BTreeMap<VertexId, Point>,
    phi: &Realization,
) -> Result<(Vec<f64>, DMatrix<f64>), SolveError> {
    let sys = System::new(l, pins)?;
    let x = sys.pack(phi);
    Ok((sys.residuals(&x), sys.jacobian(&x)))
}

/// Per-vertex restart balls: centered at the nearest anchor or pin (by path
/// length), with radius that path length. Vertices with no anchored path are absent.
pub fn restart_balls(l: &Linkage, pins: &BTreeMap<VertexId, Point>) -> BTreeMap<VertexId, (Point, f64)> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    #[derive(PartialEq, PartialOrd)]
    struct D(f64);
    impl Eq for D {}
    impl Ord for D {
        fn cmp(&self, o: &Self) -> std::cmp::Ordering {
            self.0.total_cmp(&o.0)
        }
    }
    let adj = l.neighbors();
    let mut best: BTreeMap<VertexId, (Point, f64)> = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    for v in l.vertices() {
        if let Some(p) = l.anchor(v).or_else(|| pins.get(&v)) {
            best.insert(v, (p.clone(), 0.0));
            heap.push(Reverse((D(0.0), v)));
        }
    }
    while let Some(Reverse((D(d), v))) = heap.pop() {
        if best.get(&v).is_some_and(|b| b.1 < d) {
            continue;
        }
        let c = best[&v].0.clone();
        for &(w, len) in &adj[v.index()] {
            let nd = d + len;
            if best.get(&w).is_none_or(|b| nd < b.1) {
                best.insert(w, (c.clone(), nd));
                heap.push(Reverse((D(nd), w)));
            }
        }
    }
    best
}
