//! Integrals of the curvature against the signed area form, boundary
//! terms, and the iterated limits around tangency points.

mod boundary;
mod divergence;
pub mod fronts;

pub use boundary::{boundary_term, piece_kg_integral, BoundaryPiece, BoundaryTerm, CurveFn};
pub use divergence::{model_frame, tangency_divergence_experiment, DivergenceOptions, DivergenceRow, SideTerms};
mod region;

pub use region::{integrate_K, Rect, Region, SideFilter};
mod limits;
pub use limits::{extrapolate, Delta2, LevelFit, LimitSchedule, Scale};
mod three_scale;
pub use three_scale::{
    box_boundary_limit, box_sites, gb_check_no_tangency, osculating_psi, surface_integral, tangency_box,
    three_scale_integral, BoxLimit, BoxRow, BoxSite, Delta2Level, EpsLevel, GbCheck, ThreeScale,
};
