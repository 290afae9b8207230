//! Batch front end: problem files in, deterministic reports out.

pub mod build;
pub mod corpus;
pub mod error;
pub mod report;
pub mod run;
pub mod schema;

pub use error::CliError;
pub use report::Report;
pub use run::{run_text, Options, Plan};
pub use schema::ProblemFile;
