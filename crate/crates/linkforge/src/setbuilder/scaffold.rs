//! Trading many fixed vertices for n+1: anchors at 0 and e_i stay fixed, the
//! rest (plus one at Σe_i) are held in place by bars to every other anchor.

use std::collections::{BTreeMap, BTreeSet};

use super::SetError;
use crate::geom::{basis, Point};
use crate::linkage::{Linkage, VertexId};

/// Scaffold anchor points 0, e_1, …, e_n, Σe_i.
pub fn scaffold_points(n: usize) -> Vec<Point> {
    let mut pts = vec![Point::zeros(n)];
    pts.extend((0..n).map(|i| basis(n, i)));
    pts.push(Point::from_element(n, 1.0));
    pts
}

fn components(l: &Linkage) -> Vec<Vec<VertexId>> {
    let adj = l.neighbors();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for v in l.vertices() {
        if !seen.insert(v) {
            continue;
        }
        let mut comp = vec![v];
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            for &(w, _) in &adj[u.index()] {
                if seen.insert(w) {
                    comp.push(w);
                    stack.push(w);
                }
            }
        }
        out.push(comp);
    }
    out
}

#[derive(Debug, Clone)]
pub struct Reduced {
    pub linkage: Linkage,
    /// Every vertex that was fixed before, with its anchor.
    pub anchors: BTreeMap<VertexId, Point>,
    /// The vertices sitting at 0, e_1, …, e_n, Σe_i; only the first n+1 stay fixed.
    pub scaffold: Vec<VertexId>,
}

/// Keep only 0, e_1, …, e_n fixed; every other anchor becomes a free vertex
/// with a bar to each anchor at a different point.
pub fn reduce_fixed_vertices(l: &Linkage) -> Result<Reduced, SetError> {
    let n = l.dim();
    for comp in components(l) {
        if !comp.iter().any(|&v| l.is_fixed(v)) {
            return Err(SetError::Disconnected(comp[0]));
        }
    }
    let mut out = l.clone();
    let mut scaffold = Vec::new();
    for z in scaffold_points(n) {
        let existing = l.fixed().iter().find(|(_, p)| (*p - &z).amax() == 0.0).map(|(&v, _)| v);
        let v = match existing {
            Some(v) => v,
            None => out.add_fixed(None, z)?,
        };
        scaffold.push(v);
    }
    let anchors: BTreeMap<VertexId, Point> = out.fixed().clone();
    let list: Vec<(VertexId, Point)> = anchors.iter().map(|(&v, p)| (v, p.clone())).collect();
    for (i, (u, zu)) in list.iter().enumerate() {
        for (v, zv) in &list[i + 1..] {
            let d = (zu - zv).norm();
            if d == 0.0 || out.edge(*u, *v).is_some() {
                continue;
            }
            out.rigid(*u, *v, d)?;
        }
    }
    let keep: BTreeSet<VertexId> = scaffold[..=n].iter().copied().collect();
    let release: Vec<VertexId> = anchors.keys().filter(|v| !keep.contains(v)).copied().collect();
    let linkage = out.unfix_vertices(&release)?;
    let original = l.fixed().clone();
    Ok(Reduced { linkage, anchors: original, scaffold })
}

impl Reduced {
    /// Worst distance of a previously fixed or scaffold vertex from its anchor.
    pub fn anchor_error(&self, phi: &crate::linkage::Realization) -> f64 {
        let pts = scaffold_points(self.linkage.dim());
        self.anchors
            .iter()
            .map(|(&v, z)| (v, z.clone()))
            .chain(self.scaffold.iter().copied().zip(pts))
            .map(|(v, z)| phi.get(v).map_or(f64::INFINITY, |p| (p - z).norm()))
            .fold(0.0, f64::max)
    }
}
