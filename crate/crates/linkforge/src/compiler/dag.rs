//! The elementary dataflow graph and the lowering from polynomial maps.

use std::collections::HashMap;

use crate::geom::{basis, Point};

use super::polymap::{PolyMap, Term};

pub type NodeId = usize;

/// An output port of a node; only fanout nodes have more than one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Port {
    pub node: NodeId,
    pub port: usize,
}

impl Port {
    fn of(node: NodeId) -> Self {
        Port { node, port: 0 }
    }
}

/// A coefficient, either literal or a power of a square chain's length scale L.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scalar {
    Lit(f64),
    /// sign · L^power for chain `id`.
    Chain { id: usize, power: i32, sign: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Input(usize),
    Const(Point),
    Translate { dir: Point, amount: Scalar },
    Scale(Scalar),
    Average,
    InvertLine,
    ProjectLine(Point),
    Fanout(usize),
    Output(usize),
}

impl NodeKind {
    pub fn name(&self) -> &'static str {
        match self {
            NodeKind::Input(_) => "input",
            NodeKind::Const(_) => "const",
            NodeKind::Translate { .. } => "translate",
            NodeKind::Scale(_) => "scale",
            NodeKind::Average => "average",
            NodeKind::InvertLine => "invert_line",
            NodeKind::ProjectLine(_) => "project_line",
            NodeKind::Fanout(_) => "fanout",
            NodeKind::Output(_) => "output",
        }
    }

    fn ports(&self) -> usize {
        match self {
            NodeKind::Fanout(w) => *w,
            NodeKind::Output(_) => 0,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

/// Gadget parameters chosen by the planner.
#[derive(Debug, Clone, PartialEq)]
pub enum GadgetParams {
    None,
    /// Domain ball of a translation or scale gadget.
    Ball(Ball),
    /// Operand balls (common radius) of an average gadget.
    Average { z: Point, w: Point, radius: f64 },
    /// Inversion with annulus d−c ≤ |γ| ≤ d+c.
    Inversion { c: f64 },
    /// Projection gadget size (domain Ball(0, r/2)).
    Projection { r: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodePlan {
    /// Bound on the node's value(s).
    pub bound: Ball,
    pub params: GadgetParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub kind: NodeKind,
    pub inputs: Vec<Port>,
    pub plan: Option<NodePlan>,
}

/// s ↦ s² through three inversions; `length` is resolved by the planner.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareChain {
    pub source: Port,
    pub length: Option<f64>,
}

/// Nodes are stored in topological order.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementaryDag {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub nodes: Vec<Node>,
    pub chains: Vec<SquareChain>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DagError {
    #[error("square chain {0} has no length scale yet; plan the graph first")]
    Unplanned(usize),
    #[error("input arity: expected {expected}, got {got}")]
    Arity { expected: usize, got: usize },
}

impl ElementaryDag {
    pub fn resolve(&self, s: Scalar) -> Result<f64, DagError> {
        match s {
            Scalar::Lit(v) => Ok(v),
            Scalar::Chain { id, power, sign } => {
                let l = self.chains[id].length.ok_or(DagError::Unplanned(id))?;
                Ok(sign * l.powi(power))
            }
        }
    }

    /// Number of nodes of each kind.
    pub fn histogram(&self) -> std::collections::BTreeMap<&'static str, usize> {
        let mut h = std::collections::BTreeMap::new();
        for nd in &self.nodes {
            *h.entry(nd.kind.name()).or_default() += 1;
        }
        h
    }

    /// Node counts that become gadgets (everything except inputs, consts, fanouts, outputs).
    pub fn gadget_nodes(&self) -> usize {
        self.nodes
            .iter()
            .filter(|nd| {
                !matches!(nd.kind, NodeKind::Input(_) | NodeKind::Const(_) | NodeKind::Fanout(_) | NodeKind::Output(_))
            })
            .count()
    }

    /// Evaluate node by node. Chains must be planned.
    pub fn eval(&self, x: &[Point]) -> Result<Vec<Point>, DagError> {
        if x.len() != self.k {
            return Err(DagError::Arity { expected: self.k, got: x.len() });
        }
        let vals = self.eval_nodes(x)?;
        let mut out = vec![Point::zeros(self.n); self.m];
        for (i, nd) in self.nodes.iter().enumerate() {
            if let NodeKind::Output(j) = nd.kind {
                out[j] = vals[i][0].clone();
            }
        }
        Ok(out)
    }

    /// Value(s) of every node; output nodes carry their input's value.
    pub fn eval_nodes(&self, x: &[Point]) -> Result<Vec<Vec<Point>>, DagError> {
        let mut vals: Vec<Vec<Point>> = Vec::with_capacity(self.nodes.len());
        for nd in &self.nodes {
            let arg = |i: usize| -> &Point { &vals[nd.inputs[i].node][nd.inputs[i].port] };
            let v = match &nd.kind {
                NodeKind::Input(s) => vec![x[*s].clone()],
                NodeKind::Const(p) => vec![p.clone()],
                NodeKind::Translate { dir, amount } => vec![arg(0) + dir * self.resolve(*amount)?],
                NodeKind::Scale(l) => vec![arg(0) * self.resolve(*l)?],
                NodeKind::Average => vec![(arg(0) + arg(1)) * 0.5],
                NodeKind::InvertLine => vec![arg(0) / arg(0).norm_squared()],
                NodeKind::ProjectLine(u) => vec![u * arg(0).dot(u)],
                NodeKind::Fanout(w) => vec![arg(0).clone(); *w],
                NodeKind::Output(_) => vec![arg(0).clone()],
            };
            vals.push(v);
        }
        Ok(vals)
    }
}

struct Builder {
    n: usize,
    nodes: Vec<Node>,
    chains: Vec<SquareChain>,
    inputs: Vec<Port>,
    coords: HashMap<(usize, usize), Port>,
    axes: HashMap<(usize, usize), Port>,
}

impl Builder {
    fn push(&mut self, kind: NodeKind, inputs: Vec<Port>) -> Port {
        self.nodes.push(Node { kind, inputs, plan: None });
        Port::of(self.nodes.len() - 1)
    }

    fn e1(&self) -> Point {
        basis(self.n, 0)
    }

    fn scale(&mut self, p: Port, l: f64) -> Port {
        if l == 1.0 {
            return p;
        }
        self.push(NodeKind::Scale(Scalar::Lit(l)), vec![p])
    }

    fn translate(&mut self, p: Port, z: &Point) -> Port {
        let amt = z.norm();
        if amt == 0.0 {
            return p;
        }
        self.push(NodeKind::Translate { dir: z / amt, amount: Scalar::Lit(amt) }, vec![p])
    }

    fn average(&mut self, a: Port, b: Port) -> Port {
        self.push(NodeKind::Average, vec![a, b])
    }

    fn sum(&mut self, a: Port, b: Port) -> Port {
        let h = self.average(a, b);
        self.scale(h, 2.0)
    }

    fn project(&mut self, p: Port, u: Point) -> Port {
        self.push(NodeKind::ProjectLine(u), vec![p])
    }

    /// x_c·e_c of input `slot`.
    fn axis(&mut self, slot: usize, c: usize) -> Port {
        if let Some(&p) = self.axes.get(&(slot, c)) {
            return p;
        }
        let src = self.inputs[slot];
        let p = self.project(src, basis(self.n, c));
        self.axes.insert((slot, c), p);
        p
    }

    /// x_c·e1 of input `slot`.
    fn coord(&mut self, slot: usize, c: usize) -> Port {
        if let Some(&p) = self.coords.get(&(slot, c)) {
            return p;
        }
        let a = self.axis(slot, c);
        let p = if c == 0 {
            a
        } else {
            let diag = (basis(self.n, 0) + basis(self.n, c)) / std::f64::consts::SQRT_2;
            let d = self.project(a, diag);
            let e = self.project(d, self.e1());
            self.scale(e, 2.0)
        };
        self.coords.insert((slot, c), p);
        p
    }

    /// s·e1 ↦ s²·e1 via 1 − h((h(1+s/L) + h(1−s/L))/2) = (s/L)².
    fn square(&mut self, s: Port) -> Port {
        let id = self.chains.len();
        self.chains.push(SquareChain { source: s, length: None });
        let e1 = self.e1();
        let one = Scalar::Lit(1.0);
        let u = self.push(NodeKind::Scale(Scalar::Chain { id, power: -1, sign: 1.0 }), vec![s]);
        let p = self.push(NodeKind::Translate { dir: e1.clone(), amount: one }, vec![u]);
        let nu = self.push(NodeKind::Scale(Scalar::Lit(-1.0)), vec![u]);
        let q = self.push(NodeKind::Translate { dir: e1.clone(), amount: one }, vec![nu]);
        let ip = self.push(NodeKind::InvertLine, vec![p]);
        let iq = self.push(NodeKind::InvertLine, vec![q]);
        let a = self.average(ip, iq);
        let h = self.push(NodeKind::InvertLine, vec![a]);
        let r = self.push(NodeKind::Scale(Scalar::Chain { id, power: 2, sign: -1.0 }), vec![h]);
        self.push(NodeKind::Translate { dir: e1, amount: Scalar::Chain { id, power: 2, sign: 1.0 } }, vec![r])
    }

    /// st·e1 = ((s+t)/2)² − ((s−t)/2)².
    fn mul(&mut self, s: Port, t: Port) -> Port {
        if s == t {
            return self.square(s);
        }
        let u = self.average(s, t);
        let nt = self.scale(t, -1.0);
        let v = self.average(s, nt);
        let u2 = self.square(u);
        let v2 = self.square(v);
        let nv2 = self.scale(v2, -1.0);
        let h = self.average(u2, nv2);
        self.scale(h, 2.0)
    }

    /// coeff·(monomial)·e_dir for a term of positive degree.
    fn term(&mut self, t: &Term) -> Port {
        if t.mono.len() == 1 && t.mono[0].exp == 1 && t.mono[0].coord == t.dir {
            let a = self.axis(t.mono[0].slot, t.dir);
            return self.scale(a, t.coeff);
        }
        let mut factors = Vec::new();
        for f in &t.mono {
            for _ in 0..f.exp {
                factors.push(self.coord(f.slot, f.coord));
            }
        }
        let mut acc = factors[0];
        for &f in &factors[1..] {
            acc = self.mul(acc, f);
        }
        if t.dir == 0 {
            return self.scale(acc, t.coeff);
        }
        let diag = (basis(self.n, 0) + basis(self.n, t.dir)) / std::f64::consts::SQRT_2;
        let d = self.project(acc, diag);
        let e = self.project(d, basis(self.n, t.dir));
        self.scale(e, 2.0 * t.coeff)
    }
}

/// Split off whole-slot terms α·x_s (α·x_{s,c}·e_c for every c).
fn whole_slot_terms(n: usize, k: usize, terms: &[Term]) -> (Vec<(usize, f64)>, Vec<Term>) {
    let mut rest: Vec<Term> = terms.to_vec();
    let mut whole = Vec::new();
    for s in 0..k {
        let linear = |t: &Term, c: usize| t.mono.len() == 1 && t.mono[0].exp == 1 && t.mono[0].slot == s && t.mono[0].coord == c && t.dir == c;
        let Some(alpha) = rest.iter().find(|t| linear(t, 0)).map(|t| t.coeff) else { continue };
        if (0..n).all(|c| rest.iter().any(|t| linear(t, c) && t.coeff == alpha)) {
            rest.retain(|t| !(0..n).any(|c| linear(t, c)));
            whole.push((s, alpha));
        }
    }
    (whole, rest)
}

/// Lower a polynomial map to elementary nodes; sums fold left to right.
pub fn lower(p: &PolyMap) -> ElementaryDag {
    let mut b = Builder {
        n: p.n,
        nodes: Vec::new(),
        chains: Vec::new(),
        inputs: Vec::new(),
        coords: HashMap::new(),
        axes: HashMap::new(),
    };
    for s in 0..p.k {
        let port = b.push(NodeKind::Input(s), vec![]);
        b.inputs.push(port);
    }
    for (j, terms) in p.outputs.iter().enumerate() {
        let (whole, rest) = whole_slot_terms(p.n, p.k, terms);
        let mut parts = Vec::new();
        for (s, alpha) in whole {
            let src = b.inputs[s];
            parts.push(b.scale(src, alpha));
        }
        let mut z0 = Point::zeros(p.n);
        for t in &rest {
            if t.mono.is_empty() {
                z0[t.dir] += t.coeff;
            } else {
                parts.push(b.term(t));
            }
        }
        let out = match parts.split_first() {
            None => b.push(NodeKind::Const(z0), vec![]),
            Some((&first, more)) => {
                let mut acc = first;
                for &q in more {
                    acc = b.sum(acc, q);
                }
                b.translate(acc, &z0)
            }
        };
        b.push(NodeKind::Output(j), vec![out]);
    }
    let dag = ElementaryDag { n: p.n, k: p.k, m: p.m, nodes: b.nodes, chains: b.chains };
    insert_fanouts(dag)
}

/// Route every multiply-consumed port through an explicit fanout node.
fn insert_fanouts(dag: ElementaryDag) -> ElementaryDag {
    let mut consumers: HashMap<Port, usize> = HashMap::new();
    for nd in &dag.nodes {
        for &p in &nd.inputs {
            *consumers.entry(p).or_default() += 1;
        }
    }
    let mut map: HashMap<Port, Port> = HashMap::new();
    let mut used: HashMap<Port, usize> = HashMap::new();
    let mut nodes: Vec<Node> = Vec::with_capacity(dag.nodes.len());
    let mut remap_node: Vec<NodeId> = Vec::with_capacity(dag.nodes.len());
    for (i, nd) in dag.nodes.iter().enumerate() {
        let inputs = nd
            .inputs
            .iter()
            .map(|p| {
                let base = map[p];
                if consumers[p] > 1 {
                    let k = used.entry(*p).or_default();
                    *k += 1;
                    Port { node: base.node, port: *k - 1 }
                } else {
                    base
                }
            })
            .collect();
        nodes.push(Node { kind: nd.kind.clone(), inputs, plan: None });
        let id = nodes.len() - 1;
        remap_node.push(id);
        for port in 0..nd.kind.ports() {
            let p = Port { node: i, port };
            let mut target = Port { node: id, port };
            if consumers.get(&p).copied().unwrap_or(0) > 1 {
                nodes.push(Node { kind: NodeKind::Fanout(consumers[&p]), inputs: vec![target], plan: None });
                target = Port::of(nodes.len() - 1);
            }
            map.insert(p, target);
        }
    }
    let chains = dag
        .chains
        .iter()
        .map(|c| SquareChain { source: Port { node: remap_node[c.source.node], port: c.source.port }, length: c.length })
        .collect();
    ElementaryDag { n: dag.n, k: dag.k, m: dag.m, nodes, chains }
}
