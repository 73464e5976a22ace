//! Exact rational linear programming over the feasible-assignment polytope,
//! plus the floating-point conditional-gradient solver for the strictly
//! convex anonymous objective.

mod frank_wolfe;
mod polytope;
mod simplex;

pub use frank_wolfe::{frank_wolfe_qp, FwError, FwOptions, FwResult};
pub(crate) use polytope::solver_rows;
pub use polytope::{
    build_p, enumerate_assignments, optimize_over_p, violated_hrep_row, POptimum, PRow,
    PiConstraint, PolytopeError, PolytopeP,
};
pub use simplex::{
    brute_force_optimum, point_is_feasible, simplex, verify_infeasibility_certificate, Constraint,
    FarkasCertificate, LinearProgram, Rel, Sense, SimplexOutcome,
};
