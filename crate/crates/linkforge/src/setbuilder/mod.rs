//! Linkages realizing presented sets, fixed-vertex reduction and rigidified complexes.

pub mod build;
pub mod complex;
pub mod presentation;
pub mod scaffold;

use thiserror::Error;

pub use build::{add_isolated, build_config_cabled, build_config_classical, build_semiconfig, SetLinkage};
pub use complex::{rigidify_complex, span_distance, ComplexRealization, Rigidified};
pub use presentation::QuasiAlgPresentation;
pub use scaffold::{reduce_fixed_vertices, scaffold_points, Reduced};

use crate::compiler::CompileError;
use crate::gadgets::GadgetError;
use crate::linkage::{LinkageError, VertexId};
use crate::numeric::{SampleError, SolveError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SetError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("presentation: {0}")]
    Presentation(String),
    #[error("{0} inequalities present; use the cabled builder")]
    Inequalities(usize),
    #[error("set builders need n ≥ 3, got {0}")]
    Dimension(usize),
    #[error("polynomial {0} compiles to a constant that never meets its constraint")]
    ConstantNonzero(usize),
    #[error("cable: {0}")]
    Cable(String),
    #[error("component containing {0} has no fixed vertex")]
    Disconnected(VertexId),
    #[error("complex: {0}")]
    Complex(String),
    #[error("span distance: {0}")]
    Span(String),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Gadget(#[from] GadgetError),
    #[error(transparent)]
    Linkage(#[from] LinkageError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}
