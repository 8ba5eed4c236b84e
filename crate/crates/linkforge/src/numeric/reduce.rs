//! Affine relations forced by collinear joints and rigidified parallelograms.
//!
//! A joint E with |AE| + |EB| = |AB| must sit at A + (|AE|/|AB|)(B − A), and
//! the four corners of a rigidified parallelogram satisfy P + S = Q + R. Both
//! hold on every realization but meet the solution set tangentially, which
//! stalls Newton-type descent; the solver substitutes them instead.

use std::collections::{BTreeMap, BTreeSet};

use crate::linkage::{Linkage, VertexId};

const REL: f64 = 1e-12;

/// `v = Σ c·w` with coefficients summing to one.
pub type Relation = Vec<(VertexId, f64)>;

#[derive(Debug, Clone, Copy)]
struct Joint {
    a: VertexId,
    b: VertexId,
    t: f64,
}

fn rigid_len(l: &Linkage, u: VertexId, v: VertexId) -> Option<f64> {
    l.edge(u, v).filter(|e| !e.flexible).map(|e| e.length)
}

fn close(x: f64, y: f64) -> bool {
    (x - y).abs() <= REL * x.abs().max(y.abs()).max(1.0)
}

/// Eliminated vertices, each written over base (free or held) vertices only.
struct Elimination<'a> {
    held: &'a BTreeSet<VertexId>,
    rows: BTreeMap<VertexId, BTreeMap<VertexId, f64>>,
}

impl Elimination<'_> {
    /// Impose Σ c·v = 0 (coefficients summing to zero).
    fn impose(&mut self, combo: &[(VertexId, f64)]) {
        let mut r: BTreeMap<VertexId, f64> = BTreeMap::new();
        for &(v, c) in combo {
            match self.rows.get(&v) {
                Some(row) => {
                    for (&w, &d) in row {
                        *r.entry(w).or_default() += c * d;
                    }
                }
                None => *r.entry(v).or_default() += c,
            }
        }
        r.retain(|_, c| c.abs() > 1e-12);
        // largest coefficient among free vertices; earlier entries of `combo` win ties
        let order = combo.iter().map(|&(v, _)| v).chain(r.keys().copied());
        let mut pivot: Option<(VertexId, f64)> = None;
        for v in order {
            let Some(&c) = r.get(&v) else { continue };
            if !self.held.contains(&v) && pivot.is_none_or(|(_, p)| c.abs() > p.abs() + 1e-12) {
                pivot = Some((v, c));
            }
        }
        let Some((p, cp)) = pivot else { return };
        let expr: BTreeMap<VertexId, f64> = r.iter().filter(|(&w, _)| w != p).map(|(&w, &c)| (w, -c / cp)).collect();
        for row in self.rows.values_mut() {
            if let Some(k) = row.remove(&p) {
                for (&w, &d) in &expr {
                    *row.entry(w).or_default() += k * d;
                }
                row.retain(|_, c| c.abs() > 1e-15);
            }
        }
        self.rows.insert(p, expr);
    }
}

/// Relations for vertices not in `held`, each over non-eliminated vertices.
pub fn affine_relations(l: &Linkage, held: &BTreeSet<VertexId>) -> BTreeMap<VertexId, Relation> {
    let adj = l.neighbors();
    let mut elim = Elimination { held, rows: BTreeMap::new() };
    let mut joints: BTreeMap<VertexId, Joint> = BTreeMap::new();
    for e in l.vertices() {
        let nb: Vec<(VertexId, f64)> = adj[e.index()]
            .iter()
            .filter(|&&(w, _)| rigid_len(l, e, w).is_some())
            .cloned()
            .collect();
        'pairs: for i in 0..nb.len() {
            for j in i + 1..nb.len() {
                let ((a, la), (b, lb)) = (nb[i], nb[j]);
                let Some(lab) = rigid_len(l, a, b) else { continue };
                if !close(la + lb, lab) {
                    continue;
                }
                let t = la / lab;
                elim.impose(&[(e, 1.0), (a, t - 1.0), (b, -t)]);
                joints.insert(e, Joint { a, b, t });
                break 'pairs;
            }
        }
    }
    // parallelograms: midpoint joints E of PQ and F of RS joined by a bar of length |PR| = |QS|
    let mids: Vec<(VertexId, Joint)> = joints.iter().filter(|(_, j)| close(j.t, 0.5)).map(|(&v, &j)| (v, j)).collect();
    for (i, &(e, je)) in mids.iter().enumerate() {
        for &(f, jf) in &mids[i + 1..] {
            let Some(b) = rigid_len(l, e, f) else { continue };
            let (p, q) = (je.a, je.b);
            let (Some(lpq), Some(lrs)) = (rigid_len(l, p, q), rigid_len(l, jf.a, jf.b)) else { continue };
            if !close(lpq, lrs) {
                continue;
            }
            let side = |u: VertexId, v: VertexId| rigid_len(l, u, v).is_some_and(|x| close(x, b));
            // corners in cyclic order p, q, s, r with p + s = q + r
            let (r, s) = if side(p, jf.a) && side(q, jf.b) {
                (jf.a, jf.b)
            } else if side(p, jf.b) && side(q, jf.a) {
                (jf.b, jf.a)
            } else {
                continue;
            };
            elim.impose(&[(p, 1.0), (s, 1.0), (q, -1.0), (r, -1.0)]);
        }
    }
    elim.rows.into_iter().map(|(v, row)| (v, row.into_iter().collect())).collect()
}
