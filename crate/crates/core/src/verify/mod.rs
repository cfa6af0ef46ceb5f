//! Coordination and secrecy metrics, Monte Carlo estimation and the lemma-level property checks.

mod estimate;
mod evaluate;
mod lemmas;
mod sweep;

pub use estimate::{bootstrap, metrics_from_counts, CellShape, Interval, Intervals, Metrics, BOOTSTRAP_RESAMPLES};
pub use evaluate::{average_reports, evaluate_scheme, leakage_ceiling, EvalMode, SimulationReport, CSV_HEADER};
pub use lemmas::{
    dependence_sum, lemma_suite, lemma_suite_with, FailingCase, LemmaRow, LemmaTable, TvFn, CHECKS, EQ_TOL, IID_RADII, INEQ_TOL,
};
pub use sweep::{extraction_sweep, ls_slope, ExtractionSweep, RateSeries, SweepPoint};
