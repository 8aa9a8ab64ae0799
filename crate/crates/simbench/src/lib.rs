//! Monte-Carlo simulations comparing FCLS against entrywise baselines on
//! block-structured targets.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
mod error;
pub mod harness;
pub mod methods;
pub mod plot;
pub mod scenario;

pub use data::{cell_seed, generate_dataset, make_block_target, relative_l2_to_oracle, Dataset};
pub use error::{Result, SimError};
pub use harness::{monte_carlo, run_scenario, ResultRow, SimReport, SummaryRow, RESULTS_HEADER};
pub use methods::{run_method, MethodOutcome};
pub use scenario::{preset, Family, MethodKind, MethodSpec, SimScenario, PRESET_NAMES};
