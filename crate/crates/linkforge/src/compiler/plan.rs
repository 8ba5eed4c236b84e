//! Forward ball propagation: bounds every node and sizes every gadget.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::dag::{Ball, ElementaryDag, GadgetParams, NodeKind, NodePlan, Scalar};
use crate::geom::Point;

/// Radius inflation applied to every planned gadget domain.
pub const MARGIN: f64 = 1.1;
/// Smallest planned radius.
pub const RADIUS_FLOOR: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("bounds box needs {expected} balls, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("bounds ball {0} has nonpositive radius")]
    EmptyBall(usize),
    #[error("inversion node {node}: input interval [{lo}, {hi}] contains 0")]
    InversionThroughZero { node: usize, lo: f64, hi: f64 },
    #[error(transparent)]
    Dag(#[from] super::dag::DagError),
}

/// The compact input set K: one ball per input slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsBox {
    pub balls: Vec<(Vec<f64>, f64)>,
}

impl BoundsBox {
    pub fn uniform(n: usize, k: usize, r: f64) -> Self {
        Self { balls: vec![(vec![0.0; n], r); k] }
    }

    pub fn ball(&self, i: usize) -> Ball {
        Ball { center: Point::from_vec(self.balls[i].0.clone()), radius: self.balls[i].1 }
    }

    pub fn domain(&self) -> crate::gadgets::Domain {
        crate::gadgets::Domain::product(
            self.balls.iter().map(|(c, r)| crate::gadgets::Domain::Ball { center: c.clone(), radius: *r }).collect(),
        )
    }
}

fn inflate(r: f64) -> f64 {
    (MARGIN * r).max(RADIUS_FLOOR)
}

/// Fill bounds, gadget parameters and square-chain lengths.
pub fn plan_domains(dag: &ElementaryDag, k: &BoundsBox) -> Result<ElementaryDag, PlanError> {
    if k.balls.len() != dag.k {
        return Err(PlanError::Arity { expected: dag.k, got: k.balls.len() });
    }
    for (i, (_, r)) in k.balls.iter().enumerate() {
        if !(*r > 0.0 && r.is_finite()) {
            return Err(PlanError::EmptyBall(i));
        }
    }
    let mut out = dag.clone();
    for i in 0..out.nodes.len() {
        let bounds: Vec<Ball> = out.nodes[i]
            .inputs
            .iter()
            .map(|p| out.nodes[p.node].plan.as_ref().expect("topological order").bound.clone())
            .collect();
        // chains get their length scale where they start
        if let NodeKind::Scale(Scalar::Chain { id, power: -1, .. }) = out.nodes[i].kind {
            if out.chains[id].length.is_none() {
                let b = &bounds[0];
                out.chains[id].length = Some(3.0 * (b.center.norm() + b.radius).max(RADIUS_FLOOR));
            }
        }
        let node = &out.nodes[i];
        let gadget_ball = |b: &Ball| GadgetParams::Ball(Ball { center: b.center.clone(), radius: inflate(b.radius) });
        let plan = match &node.kind {
            NodeKind::Input(s) => NodePlan { bound: k.ball(*s), params: GadgetParams::None },
            NodeKind::Const(p) => NodePlan { bound: Ball { center: p.clone(), radius: 0.0 }, params: GadgetParams::None },
            NodeKind::Translate { dir, amount } => {
                let z = dir * out.resolve(*amount)?;
                let b = &bounds[0];
                NodePlan { bound: Ball { center: &b.center + z, radius: b.radius }, params: gadget_ball(b) }
            }
            NodeKind::Scale(l) => {
                let l = out.resolve(*l)?;
                let b = &bounds[0];
                NodePlan { bound: Ball { center: &b.center * l, radius: b.radius * l.abs() }, params: gadget_ball(b) }
            }
            NodeKind::Average => {
                let (z, w) = (&bounds[0], &bounds[1]);
                NodePlan {
                    bound: Ball { center: (&z.center + &w.center) * 0.5, radius: (z.radius + w.radius) / 2.0 },
                    params: GadgetParams::Average {
                        z: z.center.clone(),
                        w: w.center.clone(),
                        radius: inflate(z.radius.max(w.radius)),
                    },
                }
            }
            NodeKind::InvertLine => {
                let b = &bounds[0];
                let (lo, hi) = (b.center[0] - b.radius, b.center[0] + b.radius);
                if lo <= 0.0 && hi >= 0.0 {
                    return Err(PlanError::InversionThroughZero { node: i, lo, hi });
                }
                let (alo, ahi) = (lo.abs().min(hi.abs()), lo.abs().max(hi.abs()));
                let mu = (alo / MARGIN).min(1.0 / (MARGIN * ahi));
                let c = (1.0 / mu - mu) / 2.0;
                let sign = b.center[0].signum();
                let mut center = Point::zeros(b.center.len());
                center[0] = sign * (1.0 / ahi + 1.0 / alo) / 2.0;
                NodePlan {
                    bound: Ball { center, radius: (1.0 / alo - 1.0 / ahi) / 2.0 },
                    params: GadgetParams::Inversion { c },
                }
            }
            NodeKind::ProjectLine(u) => {
                let b = &bounds[0];
                let r = (2.0 * MARGIN * (b.center.norm() + b.radius)).max(2.0 * RADIUS_FLOOR);
                NodePlan {
                    bound: Ball { center: u * b.center.dot(u), radius: b.radius },
                    params: GadgetParams::Projection { r },
                }
            }
            NodeKind::Fanout(_) | NodeKind::Output(_) => NodePlan { bound: bounds[0].clone(), params: GadgetParams::None },
        };
        out.nodes[i].plan = Some(plan);
    }
    Ok(out)
}
