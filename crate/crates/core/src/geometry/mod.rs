//! Polytopes on the torus, flow directions and the section function that
//! reduces the continuous flow to a circle rotation.

mod arrangement;
mod direction;
mod polytope;
mod section;

pub use arrangement::{arrangement_cells, ArrangementCell, CellDefects, SectionFunction3D};
pub use direction::{Direction, Normalization, NormalizationMeta};
pub use polytope::{Facet, Polytope};
pub use section::{
    build_piecewise_linear_section, cot_angles, projection_pi, require_transversal, validate_transversality,
    SectionDefects, SectionEvaluator, SectionFunction2D, TAU_BREAKPOINT, TAU_TRANS,
};
