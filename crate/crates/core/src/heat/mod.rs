//! Forward heat flow, time-Taylor series and the backward series solver.

pub mod backward;
pub mod forward;
pub mod series;

pub use backward::{solve_backward, BackwardOptions, BackwardSolution};
pub use forward::{explicit_stability_limit, solve_forward, solve_forward_from, HeatTrajectory, Scheme};
pub use series::{
    estimate_radius, evaluate_series, time_taylor_coefficients, time_taylor_coefficients_exact,
    time_taylor_coefficients_with, RadiusEstimate, SeriesEvaluation, TaylorOptions, TimeTaylorSeries,
    DEFAULT_DELTA_MAX, DEFAULT_ORDER, MAX_ORDER,
};
