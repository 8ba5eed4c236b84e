//! Rigid realizations of glued simplicial complexes, and the distance from x
//! to an affine combination of anchors computed from distances alone.

use serde::{Deserialize, Serialize};

use super::SetError;
use crate::geom::Point;
use crate::linkage::{Linkage, VertexId, GLUE_TOL};

/// Pieces reference shared vertex indices; a vertex listed in several pieces
/// is glued across them. `gluings` identifies further coincident vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexRealization {
    pub vertices: Vec<Vec<f64>>,
    pub pieces: Vec<Vec<usize>>,
    #[serde(default)]
    pub gluings: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct Rigidified {
    pub linkage: Linkage,
    /// Linkage vertex of each complex vertex.
    pub vertex_of: Vec<VertexId>,
}

impl ComplexRealization {
    /// The unit cube's surface as six square faces.
    pub fn unit_cube() -> Self {
        let vertices = (0..8).map(|i| vec![(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64]).collect();
        let pieces = vec![vec![0, 1, 3, 2], vec![4, 5, 7, 6], vec![0, 1, 5, 4], vec![2, 3, 7, 6], vec![0, 2, 6, 4], vec![1, 3, 7, 5]];
        Self { vertices, pieces, gluings: Vec::new() }
    }

    fn point(&self, i: usize) -> Point {
        Point::from_column_slice(&self.vertices[i])
    }
}

/// Complete graph per piece on its own vertex copies, then gluing.
pub fn rigidify_complex(cx: &ComplexRealization) -> Result<Rigidified, SetError> {
    let dim = cx.vertices.first().map_or(0, Vec::len);
    if cx.vertices.iter().any(|v| v.len() != dim) {
        return Err(SetError::Complex("vertices have mixed dimensions".into()));
    }
    let count = cx.vertices.len();
    let check = |i: usize| if i < count { Ok(i) } else { Err(SetError::Complex(format!("vertex index {i} out of range"))) };
    for &(a, b) in &cx.gluings {
        let (a, b) = (check(a)?, check(b)?);
        let scale = cx.point(a).amax().max(cx.point(b).amax()).max(1.0);
        if (cx.point(a) - cx.point(b)).amax() > GLUE_TOL * scale {
            return Err(SetError::Complex(format!("glued vertices {a} and {b} have different coordinates")));
        }
    }
    let mut l = Linkage::new(dim)?;
    let mut first: Vec<Option<VertexId>> = vec![None; count];
    let mut pairs = Vec::new();
    for (k, piece) in cx.pieces.iter().enumerate() {
        if piece.is_empty() {
            return Err(SetError::Complex(format!("piece {k} is empty")));
        }
        let ids: Vec<VertexId> = piece
            .iter()
            .map(|&i| {
                check(i)?;
                let v = l.add_vertex();
                match first[i] {
                    Some(w) => pairs.push((w, v)),
                    None => first[i] = Some(v),
                }
                Ok(v)
            })
            .collect::<Result<_, SetError>>()?;
        for a in 0..piece.len() {
            for b in a + 1..piece.len() {
                let d = (cx.point(piece[a]) - cx.point(piece[b])).norm();
                if d == 0.0 {
                    return Err(SetError::Complex(format!("piece {k} repeats a point")));
                }
                l.rigid(ids[a], ids[b], d)?;
            }
        }
    }
    for f in first.iter_mut().filter(|f| f.is_none()) {
        *f = Some(l.add_vertex());
    }
    for &(a, b) in &cx.gluings {
        pairs.push((first[a].expect("placed"), first[b].expect("placed")));
    }
    let glued = l.glue_many(&pairs)?;
    let rep = |v: VertexId| -> VertexId {
        let mut v = v;
        while !glued.contains(v) {
            v = pairs.iter().find(|p| p.1 == v).map(|p| p.0).expect("absorbed vertex has a keeper");
        }
        v
    };
    let vertex_of = first.iter().map(|f| rep(f.expect("placed"))).collect();
    Ok(Rigidified { linkage: glued, vertex_of })
}

/// |x − Σ t_i z_i| from |x − z_i| and the anchors' own geometry.
pub fn span_distance(anchors: &[Point], dists: &[f64], coeffs: &[f64]) -> Result<f64, SetError> {
    if anchors.is_empty() || anchors.len() != dists.len() || anchors.len() != coeffs.len() {
        return Err(SetError::Span("need one distance and one coefficient per anchor".into()));
    }
    let sum: f64 = coeffs.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(SetError::Span(format!("coefficients sum to {sum}, not 1")));
    }
    let mut acc = 0.0;
    for i in 0..anchors.len() {
        for j in 0..anchors.len() {
            let zij = (&anchors[i] - &anchors[j]).norm_squared();
            acc += coeffs[i] * coeffs[j] * (dists[i] * dists[i] + dists[j] * dists[j] - zij) / 2.0;
        }
    }
    Ok(acc.max(0.0).sqrt())
}
