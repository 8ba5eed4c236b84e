//! Gadget constructors and the functional-linkage abstraction.

pub mod basic;
pub mod domain;
pub mod functional;
pub mod inversion;
pub(crate) mod parts;
pub mod scale;
pub mod translation;

pub use basic::{mk_basic, mk_basic_with, mk_pantograph, mk_rigid_parallelogram, mk_sphere, Pantograph, RigidParallelogram};
pub use domain::Domain;
pub use functional::{sheet_bits, FunctionalLinkage, GadgetError, GadgetKind, Guard, Placement, Sheets};
pub use inversion::{mk_inversion, mk_projection, mk_projection_onto, mk_segment};
pub use scale::{mk_average, mk_average_on, mk_constant, mk_scale, mk_scale_on};
pub use translation::{mk_translation, mk_translation_on, mk_wire};
