//! Experiment orchestration for the coverage case study: configuration,
//! seeded runs of every learner, steady-state detection, sweeps and
//! CSV/SVG output.

mod config;
mod record;
mod runs;
mod svg;
mod sweep;

pub use config::{Algorithm, Environment, EstimationConfig, ExperimentConfig, ScenarioConfig, SteadyConfig};
pub use record::{recompute_covered, steady_state, EstimateRow, IterationRow, RunRecord};
pub use runs::{run, run_comparators, run_psblll, run_soql};
pub use svg::{band_plot, final_configuration};
pub use sweep::{band, sweep, Band, SweepCell, SweepReport};
