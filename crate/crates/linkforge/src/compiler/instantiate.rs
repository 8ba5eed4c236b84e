//! Turning a planned graph into one linkage: every gadget is appended to a
//! single assembly and the dataflow edges become gluings.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::compose::{Assembly, Mounted};
use super::dag::{lower, ElementaryDag, GadgetParams, NodeKind, Port};
use super::plan::{plan_domains, BoundsBox, PlanError, MARGIN, RADIUS_FLOOR};
use super::polymap::{parse_polymap, ParseError, PolyMap};
use crate::gadgets::functional::{EvalFn, FunctionalLinkage, GadgetError, GadgetKind, PlaceFn};
use crate::gadgets::{mk_average_on, mk_inversion, mk_projection_onto, mk_scale_on, mk_translation_on, mk_wire};
use crate::geom::Point;
use crate::linkage::VertexId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Classical,
    Cabled,
}

impl Flavor {
    pub fn strong(self) -> bool {
        self == Flavor::Cabled
    }
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flavor::Classical => "classical",
            Flavor::Cabled => "cabled",
        })
    }
}

impl FromStr for Flavor {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "classical" => Ok(Flavor::Classical),
            "cabled" => Ok(Flavor::Cabled),
            other => Err(format!("unknown flavor '{other}' (classical|cabled)")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompileError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Gadget(#[from] GadgetError),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl From<crate::linkage::LinkageError> for CompileError {
    fn from(e: crate::linkage::LinkageError) -> Self {
        CompileError::Gadget(GadgetError::Linkage(e))
    }
}

/// One instantiated gadget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartRecord {
    pub node: usize,
    pub kind: String,
    pub sheet_bits: u32,
    pub vertices: usize,
}

#[derive(Clone)]
pub struct Compiled {
    pub map: PolyMap,
    pub bounds: BoundsBox,
    pub flavor: Flavor,
    pub dag: ElementaryDag,
    pub gadget: FunctionalLinkage,
    pub parts: Vec<PartRecord>,
}

impl fmt::Debug for Compiled {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Compiled").field("map", &self.map.to_string()).field("gadget", &self.gadget).finish()
    }
}

pub fn compile_text(text: &str, n: usize, bounds: &BoundsBox, flavor: Flavor) -> Result<Compiled, CompileError> {
    let p = parse_polymap(text, n, Some(bounds.balls.len()), None)?;
    compile(&p, bounds, flavor)
}

/// Parse-free pipeline: lower, plan, instantiate.
pub fn compile(p: &PolyMap, bounds: &BoundsBox, flavor: Flavor) -> Result<Compiled, CompileError> {
    if p.n < 3 {
        return Err(CompileError::Unsupported("compilation needs n ≥ 3".into()));
    }
    let dag = plan_domains(&lower(p), bounds)?;
    let (gadget, parts) = instantiate(&dag, p, bounds, flavor)?;
    Ok(Compiled { map: p.clone(), bounds: bounds.clone(), flavor, dag, gadget, parts })
}

enum Step {
    Input(VertexId),
    Const,
    Pass,
    Gadget { mount: Mounted, bits: std::ops::Range<usize> },
    Fanout(usize),
    Output(Option<(Mounted, std::ops::Range<usize>)>),
}

fn gadget_for(dag: &ElementaryDag, node: usize, strong: bool) -> Result<Option<FunctionalLinkage>, CompileError> {
    let nd = &dag.nodes[node];
    let plan = nd.plan.as_ref().expect("planned");
    let n = dag.n;
    let g = match (&nd.kind, &plan.params) {
        (NodeKind::Translate { dir, amount }, GadgetParams::Ball(b)) => {
            let z = dir * dag.resolve(*amount).map_err(PlanError::from)?;
            if z.norm() == 0.0 {
                return Ok(None);
            }
            mk_translation_on(n, &z, &b.center, b.radius, strong)?
        }
        (NodeKind::Scale(l), GadgetParams::Ball(b)) => {
            let l = dag.resolve(*l).map_err(PlanError::from)?;
            if l == 1.0 {
                return Ok(None);
            }
            mk_scale_on(n, l, &b.center, b.radius, strong)?
        }
        (NodeKind::Average, GadgetParams::Average { z, w, radius }) => mk_average_on(n, z, w, *radius, strong)?,
        (NodeKind::InvertLine, GadgetParams::Inversion { c }) => mk_inversion(n, *c, 2.0 * c, strong)?,
        (NodeKind::ProjectLine(u), GadgetParams::Projection { r }) => mk_projection_onto(n, *r, u, strong)?.select_outputs(&[0])?,
        _ => return Err(CompileError::Unsupported(format!("no gadget for node {node}"))),
    };
    Ok(Some(g))
}

fn instantiate(
    dag: &ElementaryDag,
    p: &PolyMap,
    bounds: &BoundsBox,
    flavor: Flavor,
) -> Result<(FunctionalLinkage, Vec<PartRecord>), CompileError> {
    let n = dag.n;
    let strong = flavor.strong();
    let mut asm = Assembly::new(n)?;
    let inputs: Vec<VertexId> = (0..dag.k).map(|s| asm.linkage_mut().add_labeled(&format!("x{}", s + 1))).collect();
    let mut vert: Vec<Vec<VertexId>> = Vec::with_capacity(dag.nodes.len());
    let mut steps = Vec::with_capacity(dag.nodes.len());
    let mut parts = Vec::new();
    let mut outputs = vec![VertexId(0); dag.m];
    let mut used: BTreeSet<VertexId> = inputs.iter().copied().collect();
    let mut bit = 0usize;
    let src = |vert: &Vec<Vec<VertexId>>, p: Port| vert[p.node][p.port];

    for (i, nd) in dag.nodes.iter().enumerate() {
        match &nd.kind {
            NodeKind::Input(s) => {
                vert.push(vec![inputs[*s]]);
                steps.push(Step::Input(inputs[*s]));
            }
            NodeKind::Const(c) => {
                let v = asm.linkage_mut().add_fixed(None, c.clone())?;
                vert.push(vec![v]);
                steps.push(Step::Const);
            }
            NodeKind::Fanout(w) => {
                let v = src(&vert, nd.inputs[0]);
                vert.push(vec![v; *w]);
                steps.push(Step::Fanout(*w));
            }
            NodeKind::Output(j) => {
                let v = src(&vert, nd.inputs[0]);
                let mut wire = None;
                let mut out = v;
                if used.contains(&v) {
                    if let Some(a) = asm.linkage_mut().anchor(v).cloned() {
                        out = asm.linkage_mut().add_fixed(None, a)?;
                    } else {
                        let b = &nd.plan.as_ref().expect("planned").bound;
                        let g = mk_wire(n, &b.center, (MARGIN * b.radius).max(RADIUS_FLOOR), strong)?;
                        let m = asm.mount(&g)?;
                        asm.glue(v, m.id(g.inputs[0]));
                        out = m.id(g.outputs[0]);
                        let bits = bit..bit + g.sheet_bits() as usize;
                        bit = bits.end;
                        parts.push(PartRecord { node: i, kind: "wire".into(), sheet_bits: g.sheet_bits(), vertices: g.linkage.vertex_count() });
                        wire = Some((m, bits));
                    }
                }
                used.insert(out);
                outputs[*j] = out;
                asm.linkage_mut().set_label(out, Some(format!("y{}", j + 1)))?;
                vert.push(vec![out]);
                steps.push(Step::Output(wire));
            }
            kind => match gadget_for(dag, i, strong)? {
                None => {
                    vert.push(vec![src(&vert, nd.inputs[0])]);
                    steps.push(Step::Pass);
                }
                Some(g) => {
                    let m = asm.mount(&g)?;
                    for (k, &inp) in nd.inputs.iter().enumerate() {
                        asm.glue(src(&vert, inp), m.id(g.inputs[k]));
                    }
                    vert.push(vec![m.id(g.outputs[0])]);
                    let bits = bit..bit + g.sheet_bits() as usize;
                    bit = bits.end;
                    parts.push(PartRecord {
                        node: i,
                        kind: kind.name().to_string(),
                        sheet_bits: g.sheet_bits(),
                        vertices: g.linkage.vertex_count(),
                    });
                    steps.push(Step::Gadget { mount: m, bits });
                }
            },
        }
    }
    let (linkage, census) = asm.finish()?;

    let nodes: Vec<(Vec<Port>, Option<Point>, Option<usize>)> = dag
        .nodes
        .iter()
        .map(|nd| {
            let konst = if let NodeKind::Const(c) = &nd.kind { Some(c.clone()) } else { None };
            let slot = match nd.kind {
                NodeKind::Input(s) | NodeKind::Output(s) => Some(s),
                _ => None,
            };
            (nd.inputs.clone(), konst, slot)
        })
        .collect();
    let m = dag.m;
    let place: Arc<PlaceFn> = Arc::new(move |x, bits, out| {
        let mut vals: Vec<Vec<Point>> = Vec::with_capacity(nodes.len());
        let mut ys = vec![Point::zeros(0); m];
        for (step, (ins, konst, slot)) in steps.iter().zip(&nodes) {
            let args: Vec<Point> = ins.iter().map(|p| vals[p.node][p.port].clone()).collect();
            let v = match step {
                Step::Input(v) => {
                    let xi = &x[slot.expect("input slot")];
                    out.put(*v, xi);
                    vec![xi.clone()]
                }
                Step::Const => vec![konst.clone().expect("const value")],
                Step::Pass => args,
                Step::Fanout(w) => vec![args[0].clone(); *w],
                Step::Gadget { mount, bits: r } => mount.place(&args, &bits[r.clone()], out)?,
                Step::Output(wire) => {
                    let y = match wire {
                        None => args,
                        Some((mw, r)) => mw.place(&args, &bits[r.clone()], out)?,
                    };
                    ys[slot.expect("output slot")] = y[0].clone();
                    y
                }
            };
            vals.push(v);
        }
        Ok(ys)
    });
    let pm = p.clone();
    let eval: Arc<EvalFn> = Arc::new(move |x| pm.eval(x));
    let gadget = FunctionalLinkage::from_parts(
        "compiled",
        linkage,
        inputs,
        outputs,
        bounds.domain(),
        GadgetKind::Function,
        bit as u32,
        place,
        eval,
    )
    .with_census(census);
    Ok((gadget, parts))
}
