//! Cut planning for curve reshaping.
//!
//! A deformed curve is cut into pieces; each piece is scaled, rotated and
//! clamped onto a span of an ideal curve. The solver picks cuts and clamps
//! minimizing the area left between the pieces and the ideal curve, plus a
//! penalty per ideal interval left uncovered.

pub mod dissimilarity;
pub mod error;
pub mod format;
pub mod geometry;
pub mod rearrange;
pub mod solver;
pub mod svg;
pub mod synth;

pub use dissimilarity::{dissimilarity, matches, Cost, CostOracle, MatchConfig};
pub use error::{Error, Result};
pub use format::{
    load_case, load_plan, save_case, save_plan, solve_case, sweep_case, Case, CaseMetadata,
    PlanFile, SolveParams, Solved, SweepParams, SweepRecord,
};
pub use geometry::{
    align_endpoints, area_between, chord_length, partition_between, rotate_to_horizontal,
    shoelace_area, FunctionCurve, Point2, Polyline, SimplePolygon, GEOM_EPS,
};
pub use rearrange::{
    brute_force_rearrangement, congruence_cost, reduce, solve_3partition, zero_cost_decision,
    ReducedInstance, ThreePartitionInstance,
};
pub use solver::{
    brute_force, count_uncovered, render_pieces, render_result, solve_constrained, solve_exact_k,
    sweep, sweep_with, validate_plan, Mode, Outcome, RefitInstance, RefitPlan, SweepEntry,
};
pub use svg::{plan_svg, sweep_chart_svg};
pub use synth::{synth_bucket, synth_case, Bucket, SynthCase, SynthSpec};
