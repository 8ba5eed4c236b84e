//! Polynomial maps to functional linkages: parse, lower, plan, instantiate.

pub mod compose;
pub mod dag;
pub mod instantiate;
pub mod plan;
pub mod polymap;

pub use compose::{compose_parallel, compose_serial, fanout};
pub use dag::{lower, ElementaryDag, NodeKind};
pub use instantiate::{compile, compile_text, CompileError, Compiled, Flavor, PartRecord};
pub use plan::{plan_domains, BoundsBox, PlanError};
pub use polymap::{parse_polymap, ParseError, PolyMap};
