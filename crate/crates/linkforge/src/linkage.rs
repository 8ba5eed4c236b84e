//! Linkages, realizations and the structural operations on them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{EuclideanMotion, GeomError, Point, Similarity};

/// Relative tolerance for length and anchor agreement when gluing.
pub const GLUE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkageError {
    #[error("dimension must be at least 2, got {0}")]
    BadDimension(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("vertex {0} has no assigned position")]
    MissingAssignment(VertexId),
    #[error("edge length must be positive and finite, got {0}")]
    BadLength(f64),
    #[error("edge from {0} to itself")]
    SelfLoop(VertexId),
    #[error("edge {u}-{v} already present with length {existing}, requested {requested}")]
    DuplicateEdge { u: VertexId, v: VertexId, existing: f64, requested: f64 },
    #[error("cannot glue {0} and {1}: they are joined by an edge")]
    GlueAcrossEdge(VertexId, VertexId),
    #[error("cannot glue: parallel edges to {common} have lengths {a} and {b}")]
    GlueLengthMismatch { common: VertexId, a: f64, b: f64 },
    #[error("cannot glue {0} and {1}: fixed at different points")]
    GlueAnchorMismatch(VertexId, VertexId),
    #[error("vertex {0} is already fixed")]
    AlreadyFixed(VertexId),
    #[error("scale factor must be positive, got {0}")]
    BadScale(f64),
    #[error("tether length must be positive, got {0}")]
    BadTether(f64),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u32);

impl VertexId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for VertexId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub length: f64,
    pub flexible: bool,
}

#[derive(Debug, Clone, PartialEq)]
struct EdgeData {
    length: f64,
    flexible: bool,
}

#[derive(Debug, Clone, PartialEq)]
struct Slot {
    alive: bool,
    label: Option<String>,
}

fn key(u: VertexId, v: VertexId) -> (VertexId, VertexId) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= GLUE_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Old-id to new-id table produced by structural operations.
#[derive(Debug, Clone, PartialEq)]
pub struct IdMap(Vec<Option<VertexId>>);

impl IdMap {
    pub fn get(&self, old: VertexId) -> Option<VertexId> {
        self.0.get(old.index()).copied().flatten()
    }

    /// Inverse lookup: which old ids landed on `new`.
    pub fn preimages(&self, new: VertexId) -> Vec<VertexId> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, m)| **m == Some(new))
            .map(|(i, _)| VertexId(i as u32))
            .collect()
    }
}

/// A linkage in R^dim: vertices, rigid and flexible edges, fixed anchors.
///
/// Vertex ids index a slot table. Gluing retires the absorbed vertex, leaving a
/// dead slot, so ids of surviving vertices never change.
#[derive(Debug, Clone, PartialEq)]
pub struct Linkage {
    dim: usize,
    slots: Vec<Slot>,
    edges: BTreeMap<(VertexId, VertexId), EdgeData>,
    fixed: BTreeMap<VertexId, Point>,
}

impl Linkage {
    pub fn new(dim: usize) -> Result<Self, LinkageError> {
        if dim < 2 {
            return Err(LinkageError::BadDimension(dim));
        }
        Ok(Self { dim, slots: Vec::new(), edges: BTreeMap::new(), fixed: BTreeMap::new() })
    }

    /// A linkage with `slot_count` slots of which only `live` are vertices; ids keep their gaps.
    pub fn with_vertices(dim: usize, slot_count: usize, live: &[(VertexId, Option<String>)]) -> Result<Self, LinkageError> {
        let mut l = Self::new(dim)?;
        l.slots = vec![Slot { alive: false, label: None }; slot_count];
        for (v, label) in live {
            let s = l.slots.get_mut(v.index()).ok_or(LinkageError::UnknownVertex(*v))?;
            *s = Slot { alive: true, label: label.clone() };
        }
        Ok(l)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of slots, live or dead; realizations are sized by this.
    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.slots.iter().filter(|s| s.alive).count()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.slots.get(v.index()).is_some_and(|s| s.alive)
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.slots
            .iter()
            .enumerate()
            .filter(|(_, s)| s.alive)
            .map(|(i, _)| VertexId(i as u32))
    }

    pub fn label(&self, v: VertexId) -> Option<&str> {
        self.slots.get(v.index()).and_then(|s| s.label.as_deref())
    }

    pub fn find_label(&self, label: &str) -> Option<VertexId> {
        self.vertices().find(|&v| self.label(v) == Some(label))
    }

    pub fn add_vertex(&mut self) -> VertexId {
        self.slots.push(Slot { alive: true, label: None });
        VertexId((self.slots.len() - 1) as u32)
    }

    pub fn add_labeled(&mut self, label: &str) -> VertexId {
        self.slots.push(Slot { alive: true, label: Some(label.to_string()) });
        VertexId((self.slots.len() - 1) as u32)
    }

    pub fn set_label(&mut self, v: VertexId, label: Option<String>) -> Result<(), LinkageError> {
        self.check(v)?;
        self.slots[v.index()].label = label;
        Ok(())
    }

    pub fn add_fixed(&mut self, label: Option<&str>, anchor: Point) -> Result<VertexId, LinkageError> {
        self.check_dim(&anchor)?;
        let v = match label {
            Some(l) => self.add_labeled(l),
            None => self.add_vertex(),
        };
        self.fixed.insert(v, anchor);
        Ok(v)
    }

    /// Add an edge. Re-adding an identical edge is a no-op.
    pub fn add_edge(&mut self, u: VertexId, v: VertexId, length: f64, flexible: bool) -> Result<(), LinkageError> {
        self.check(u)?;
        self.check(v)?;
        if u == v {
            return Err(LinkageError::SelfLoop(u));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(LinkageError::BadLength(length));
        }
        let k = key(u, v);
        if let Some(e) = self.edges.get(&k) {
            if close(e.length, length) && e.flexible == flexible {
                return Ok(());
            }
            return Err(LinkageError::DuplicateEdge { u: k.0, v: k.1, existing: e.length, requested: length });
        }
        self.edges.insert(k, EdgeData { length, flexible });
        Ok(())
    }

    pub fn rigid(&mut self, u: VertexId, v: VertexId, length: f64) -> Result<(), LinkageError> {
        self.add_edge(u, v, length, false)
    }

    pub fn cable(&mut self, u: VertexId, v: VertexId, length: f64) -> Result<(), LinkageError> {
        self.add_edge(u, v, length, true)
    }

    pub fn edge(&self, u: VertexId, v: VertexId) -> Option<Edge> {
        let k = key(u, v);
        self.edges.get(&k).map(|e| Edge { u: k.0, v: k.1, length: e.length, flexible: e.flexible })
    }

    /// Edges in canonical (min id, max id) order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges
            .iter()
            .map(|(&(u, v), e)| Edge { u, v, length: e.length, flexible: e.flexible })
    }

    pub fn fixed(&self) -> &BTreeMap<VertexId, Point> {
        &self.fixed
    }

    pub fn anchor(&self, v: VertexId) -> Option<&Point> {
        self.fixed.get(&v)
    }

    pub fn is_fixed(&self, v: VertexId) -> bool {
        self.fixed.contains_key(&v)
    }

    pub fn is_classical(&self) -> bool {
        self.edges.values().all(|e| !e.flexible)
    }

    pub fn neighbors(&self) -> Vec<Vec<(VertexId, f64)>> {
        let mut adj = vec![Vec::new(); self.slots.len()];
        for (&(u, v), e) in &self.edges {
            adj[u.index()].push((v, e.length));
            adj[v.index()].push((u, e.length));
        }
        adj
    }

    fn check(&self, v: VertexId) -> Result<(), LinkageError> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(LinkageError::UnknownVertex(v))
        }
    }

    fn check_dim(&self, p: &Point) -> Result<(), LinkageError> {
        if p.len() != self.dim {
            return Err(LinkageError::DimMismatch { expected: self.dim, got: p.len() });
        }
        Ok(())
    }

    /// beta(L): only the anchors move.
    pub fn apply_motion(&self, m: &EuclideanMotion) -> Result<Self, LinkageError> {
        if m.dim() != self.dim {
            return Err(LinkageError::DimMismatch { expected: self.dim, got: m.dim() });
        }
        let mut out = self.clone();
        for p in out.fixed.values_mut() {
            *p = m.apply(p);
        }
        Ok(out)
    }

    /// lambda L: lengths and anchors scaled.
    pub fn rescale(&self, lambda: f64) -> Result<Self, LinkageError> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(LinkageError::BadScale(lambda));
        }
        let mut out = self.clone();
        for e in out.edges.values_mut() {
            e.length *= lambda;
        }
        for p in out.fixed.values_mut() {
            *p *= lambda;
        }
        Ok(out)
    }

    pub(crate) fn apply_similarity(&self, s: &Similarity) -> Result<Self, LinkageError> {
        let mut out = self.clone();
        for e in out.edges.values_mut() {
            e.length *= s.scale;
        }
        for p in out.fixed.values_mut() {
            *p = s.apply(p);
        }
        Ok(out)
    }

    /// Disjoint union; the right operand's ids are shifted past the left's slots.
    pub fn disjoint_union(&self, other: &Self) -> Result<(Self, IdMap, IdMap), LinkageError> {
        if self.dim != other.dim {
            return Err(LinkageError::DimMismatch { expected: self.dim, got: other.dim });
        }
        let off = self.slots.len() as u32;
        let mut out = self.clone();
        out.slots.extend(other.slots.iter().cloned());
        for (&(u, v), e) in &other.edges {
            out.edges.insert((VertexId(u.0 + off), VertexId(v.0 + off)), e.clone());
        }
        for (&v, p) in &other.fixed {
            out.fixed.insert(VertexId(v.0 + off), p.clone());
        }
        let left = IdMap(
            self.slots.iter().enumerate().map(|(i, s)| s.alive.then_some(VertexId(i as u32))).collect(),
        );
        let right = IdMap(
            other
                .slots
                .iter()
                .enumerate()
                .map(|(i, s)| s.alive.then_some(VertexId(i as u32 + off)))
                .collect(),
        );
        Ok((out, left, right))
    }

    /// Append `other` in place, shifting its ids by the current slot count.
    pub(crate) fn append(&mut self, other: &Self) -> Result<u32, LinkageError> {
        if self.dim != other.dim {
            return Err(LinkageError::DimMismatch { expected: self.dim, got: other.dim });
        }
        let off = self.slots.len() as u32;
        self.slots.extend(other.slots.iter().cloned());
        for (&(u, v), e) in &other.edges {
            self.edges.insert((VertexId(u.0 + off), VertexId(v.0 + off)), e.clone());
        }
        for (&v, p) in &other.fixed {
            self.fixed.insert(VertexId(v.0 + off), p.clone());
        }
        Ok(off)
    }

    /// Identify `w` with `v`; `v` survives.
    pub fn glue_vertices(&self, v: VertexId, w: VertexId) -> Result<Self, LinkageError> {
        self.glue_many(&[(v, w)])
    }

    /// Identify several pairs at once. In each pair the first vertex survives
    /// (chains resolve to the vertex that is never absorbed).
    pub fn glue_many(&self, pairs: &[(VertexId, VertexId)]) -> Result<Self, LinkageError> {
        let n = self.slots.len();
        let mut parent: Vec<u32> = (0..n as u32).collect();
        fn find(p: &mut [u32], mut x: u32) -> u32 {
            while p[x as usize] != x {
                let nx = p[x as usize];
                p[x as usize] = p[nx as usize];
                x = nx;
            }
            x
        }
        for &(v, w) in pairs {
            self.check(v)?;
            self.check(w)?;
            if self.edges.contains_key(&key(v, w)) {
                return Err(LinkageError::GlueAcrossEdge(v, w));
            }
            let rv = find(&mut parent, v.0);
            let rw = find(&mut parent, w.0);
            if rv != rw {
                parent[rw as usize] = rv;
            }
        }
        let rep: Vec<VertexId> = (0..n as u32).map(|i| VertexId(find(&mut parent, i))).collect();
        let mut out = Linkage { dim: self.dim, slots: self.slots.clone(), edges: BTreeMap::new(), fixed: BTreeMap::new() };
        for (i, s) in out.slots.iter_mut().enumerate() {
            if rep[i].index() != i {
                s.alive = false;
                s.label = None;
            }
        }
        for (&(a, b), e) in &self.edges {
            let (ra, rb) = (rep[a.index()], rep[b.index()]);
            if ra == rb {
                return Err(LinkageError::GlueAcrossEdge(a, b));
            }
            let k = key(ra, rb);
            match out.edges.get(&k) {
                Some(prev) => {
                    if !close(prev.length, e.length) || prev.flexible != e.flexible {
                        let common = if ra == a || ra == b { ra } else { rb };
                        return Err(LinkageError::GlueLengthMismatch { common, a: prev.length, b: e.length });
                    }
                }
                None => {
                    out.edges.insert(k, e.clone());
                }
            }
        }
        for (&v, p) in &self.fixed {
            let r = rep[v.index()];
            match out.fixed.get(&r) {
                Some(q) => {
                    let scale = p.amax().max(q.amax()).max(1.0);
                    if (p - q).amax() > GLUE_TOL * scale {
                        return Err(LinkageError::GlueAnchorMismatch(r, v));
                    }
                }
                None => {
                    out.fixed.insert(r, p.clone());
                }
            }
        }
        Ok(out)
    }

    pub fn fix_vertices(&self, pins: &BTreeMap<VertexId, Point>) -> Result<Self, LinkageError> {
        let mut out = self.clone();
        for (&v, p) in pins {
            self.check(v)?;
            self.check_dim(p)?;
            if self.fixed.contains_key(&v) {
                return Err(LinkageError::AlreadyFixed(v));
            }
            out.fixed.insert(v, p.clone());
        }
        Ok(out)
    }

    pub fn unfix_vertices(&self, vs: &[VertexId]) -> Result<Self, LinkageError> {
        let mut out = self.clone();
        for &v in vs {
            self.check(v)?;
            out.fixed.remove(&v);
        }
        Ok(out)
    }

    /// Add a fresh vertex fixed at `anchor` and a cable of length `b` to `v`.
    pub fn tether(&self, v: VertexId, anchor: Point, b: f64) -> Result<(Self, VertexId), LinkageError> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(LinkageError::BadTether(b));
        }
        let mut out = self.clone();
        out.check(v)?;
        let u = out.add_fixed(None, anchor)?;
        out.cable(v, u, b)?;
        Ok((out, u))
    }

    pub(crate) fn tether_mut(&mut self, v: VertexId, anchor: Point, b: f64) -> Result<VertexId, LinkageError> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(LinkageError::BadTether(b));
        }
        let u = self.add_fixed(None, anchor)?;
        self.cable(v, u, b)?;
        Ok(u)
    }

    /// Scale of the linkage: largest anchor coordinate or edge length.
    pub fn extent(&self) -> f64 {
        let e = self.edges.values().map(|e| e.length).fold(0.0, f64::max);
        let a = self.fixed.values().map(|p| p.amax()).fold(0.0, f64::max);
        e.max(a)
    }

    /// Residual vector: edges in canonical order, then fixed vertices.
    pub fn residuals(&self, phi: &Realization) -> Result<Vec<f64>, LinkageError> {
        self.check_realization(phi)?;
        let mut out = Vec::with_capacity(self.edges.len() + self.fixed.len());
        for (&(u, v), e) in &self.edges {
            let d = phi.distance(u, v);
            out.push(if e.flexible { (d - e.length).max(0.0) } else { (d - e.length).abs() });
        }
        for (&v, p) in &self.fixed {
            let x = phi.slice(v);
            let s: f64 = x.iter().zip(p.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            out.push(s.sqrt());
        }
        Ok(out)
    }

    pub fn max_residual(&self, phi: &Realization) -> Result<f64, LinkageError> {
        self.check_realization(phi)?;
        let mut worst = 0.0f64;
        for (&(u, v), e) in &self.edges {
            let d = phi.distance(u, v) - e.length;
            worst = worst.max(if e.flexible { d } else { d.abs() });
        }
        for (&v, p) in &self.fixed {
            let s: f64 = phi.slice(v).iter().zip(p.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            worst = worst.max(s.sqrt());
        }
        Ok(worst)
    }

    pub fn is_realization(&self, phi: &Realization, tol: f64) -> Result<bool, LinkageError> {
        Ok(self.max_residual(phi)? <= tol)
    }

    fn check_realization(&self, phi: &Realization) -> Result<(), LinkageError> {
        if phi.dim != self.dim {
            return Err(LinkageError::DimMismatch { expected: self.dim, got: phi.dim });
        }
        for v in self.vertices() {
            if !phi.is_assigned(v) {
                return Err(LinkageError::MissingAssignment(v));
            }
        }
        Ok(())
    }
}

/// Positions for the vertices of a linkage, stored densely by slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    dim: usize,
    coords: Vec<f64>,
    assigned: Vec<bool>,
}

impl Realization {
    pub fn new(dim: usize, slots: usize) -> Self {
        Self { dim, coords: vec![0.0; dim * slots], assigned: vec![false; slots] }
    }

    /// Empty realization sized for `l`.
    pub fn for_linkage(l: &Linkage) -> Self {
        Self::new(l.dim(), l.slot_count())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn slot_count(&self) -> usize {
        self.assigned.len()
    }

    pub fn is_assigned(&self, v: VertexId) -> bool {
        self.assigned.get(v.index()).copied().unwrap_or(false)
    }

    pub fn set(&mut self, v: VertexId, p: &[f64]) {
        let i = v.index();
        if i >= self.assigned.len() {
            self.assigned.resize(i + 1, false);
            self.coords.resize((i + 1) * self.dim, 0.0);
        }
        self.coords[i * self.dim..(i + 1) * self.dim].copy_from_slice(p);
        self.assigned[i] = true;
    }

    pub fn set_point(&mut self, v: VertexId, p: &Point) {
        self.set(v, p.as_slice());
    }

    /// Mutable coordinates of `v`, marked assigned.
    pub(crate) fn slot_mut(&mut self, v: VertexId) -> &mut [f64] {
        let i = v.index();
        if i >= self.assigned.len() {
            self.assigned.resize(i + 1, false);
            self.coords.resize((i + 1) * self.dim, 0.0);
        }
        self.assigned[i] = true;
        &mut self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn unset(&mut self, v: VertexId) {
        if let Some(a) = self.assigned.get_mut(v.index()) {
            *a = false;
        }
    }

    pub fn get(&self, v: VertexId) -> Option<Point> {
        self.is_assigned(v).then(|| Point::from_column_slice(self.slice(v)))
    }

    pub(crate) fn slice(&self, v: VertexId) -> &[f64] {
        &self.coords[v.index() * self.dim..(v.index() + 1) * self.dim]
    }

    pub fn distance(&self, u: VertexId, v: VertexId) -> f64 {
        let (a, b) = (self.slice(u), self.slice(v));
        if let ([a0, a1, a2], [b0, b1, b2]) = (a, b) {
            return ((a0 - b0) * (a0 - b0) + (a1 - b1) * (a1 - b1) + (a2 - b2) * (a2 - b2)).sqrt();
        }
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }

    /// Ordered positions of `w`.
    pub fn restrict(&self, w: &[VertexId]) -> Result<Vec<Point>, LinkageError> {
        w.iter()
            .map(|&v| self.get(v).ok_or(LinkageError::UnknownVertex(v)))
            .collect()
    }

    pub fn apply_motion(&self, m: &EuclideanMotion) -> Result<Self, LinkageError> {
        if m.dim() != self.dim {
            return Err(LinkageError::DimMismatch { expected: self.dim, got: m.dim() });
        }
        let mut out = self.clone();
        for i in 0..self.assigned.len() {
            if self.assigned[i] {
                let v = VertexId(i as u32);
                let p = m.apply(&self.get(v).expect("assigned"));
                out.set_point(v, &p);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        out.coords.iter_mut().for_each(|x| *x *= lambda);
        out
    }

    /// Largest coordinate difference over vertices assigned in both.
    pub fn max_deviation(&self, other: &Self) -> f64 {
        let mut m: f64 = 0.0;
        let k = self.assigned.len().min(other.assigned.len());
        for i in 0..k {
            if self.assigned[i] && other.assigned[i] {
                let v = VertexId(i as u32);
                let d: f64 = self
                    .slice(v)
                    .iter()
                    .zip(other.slice(v))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                m = m.max(d);
            }
        }
        m
    }
}
