//! Mechanical linkages realizing polynomial maps and compact semialgebraic sets.

pub mod compiler;
pub mod gadgets;
pub mod geom;
pub mod io;
pub mod linkage;
pub mod numeric;
pub mod setbuilder;
