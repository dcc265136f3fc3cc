//! Config-driven experiment harness reproducing the aging, sub-aging and
//! gap-statistic limit statements as convergence sweeps.

mod config;
mod output;
mod runner;

pub use config::{
    auto_epsilon, EnvironmentSource, EstimatorSelection, ExperimentConfig, Tolerances,
};
pub use output::{
    fnv1a64, render_curves, render_curves_jsonl, write_curves, CurveRow, Meta, CURVES_HEADER,
};
pub use runner::{
    run_aging_traps, run_aging_walls, run_gap, run_j1, run_subaging, CurveSet, GapSamples,
};
