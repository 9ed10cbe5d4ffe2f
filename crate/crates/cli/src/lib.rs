//! Scenario files, batch runs and output formats behind the `switchnet`
//! binary.

pub mod error;
pub mod oracle_check;
pub mod output;
pub mod report;
pub mod runner;
pub mod scenario;

pub use error::{CliError, Result};
pub use oracle_check::{oracle_check, OracleReport};
pub use report::{BoundReport, Check, RunSummary, Status};
pub use runner::{run_scenario, simulate, verify_bounds};
pub use scenario::{parse_scenario, ModelId, Scenario};
