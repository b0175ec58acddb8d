//! Combinatorial interaction testing: input models, mixed-level covering
//! array generation, coverage measurement, variant multiplexing, subprocess
//! execution with exit-code verdicts, and lower-strength fault attribution.
//!
//! The pipeline stages map onto modules:
//!
//! | stage    | module        |
//! |----------|---------------|
//! | model    | [`model`]     |
//! | generate | [`generator`] |
//! | measure  | [`coverage`]  |
//! | plan     | [`plan`]      |
//! | run      | [`runner`]    |
//! | analyze  | [`analyze`]   |
//! | synth    | [`synth`]     |

pub mod analyze;
pub mod coverage;
pub mod generator;
pub mod model;
pub mod plan;
pub mod runner;
pub mod suite;
pub mod synth;
pub mod tuples;

pub use analyze::{attribution_chain, explained, suspicious_tuples, AttributionReport, Suspect};
pub use coverage::{measure, missing_tuples, CoverageReport};
pub use generator::{generate_greedy, generate_pso, verify_coverage, CoverageCheck, PsoConfig};
pub use model::{parse_model, Assignment, Factor, Model};
pub use plan::{environment_for, multiplex, VariantPlan, VariantScript};
pub use runner::{run, serialize_report, ReportFormat, RunOptions, RunRecord, RunReport, Verdict};
pub use suite::TestSuite;
pub use synth::FaultProfile;
pub use tuples::Tuple;
