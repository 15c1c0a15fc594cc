//! SIR outbreaks over contact traces and per-seed susceptible curves.
//!
//! Time is measured in trace steps, so an infectious-period mean of 80 steps
//! on a 600-second trace is 800 minutes.

mod experiment;
mod sir;

pub use experiment::{
    rank_by_time_to_half, run_seed, save_ranking_json, sir_experiment, write_curves_csv, RankEntry, SirCurve,
    BAND_COVERAGE,
};
pub use sir::{run_sir, SirParams, SirRun};
