//! Reports over a [`ResultsTable`]: seed aggregates, correlation of transfer
//! accuracy with language distances, prompt-length sweeps and
//! reparameterization impact. Every function here is pure; the CSV text
//! depends only on its inputs.

mod report;
mod results;

pub use report::{
    correlation_table, impact_csv, impact_from_results, length_sweep_report, reparam_impact,
    sweep_csv, CorrelationCell, CorrelationReport, CorrelationRow, ImpactRow, SweepRow,
    MIN_LANGUAGES, SIGN_NOTE, SWEEP_LENGTHS,
};
pub use results::{aggregate, aggregate_csv, AggregateRow, ResultsTable, Setting};
