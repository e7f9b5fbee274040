//! Discrete domains and the geometric quantities defined on them.

pub mod grid;
pub mod io;
pub mod metrics;
pub mod morphology;
pub mod shapes;
pub mod star;

pub use grid::{unit_ball_volume, CellIndex, GridDomain, GridSpec, Point};
pub use metrics::{
    diameter, dilate_about, fraenkel_asymmetry, fraenkel_asymmetry_exhaustive,
    hausdorff_boundary_distance, measure, rescale_to_measure, symmetric_difference_measure,
    Asymmetry,
};
pub use morphology::check_internal_ball_condition;
pub use shapes::{
    make_ball, make_box, make_cross, make_dumbbell_tail, make_ellipsoid,
    make_ellipsoid_with_measure, make_necklace, BallSpec, CrossSpec, DumbbellSpec, NecklaceSpec,
};
pub use star::{rasterize_star, StarBoundary};
