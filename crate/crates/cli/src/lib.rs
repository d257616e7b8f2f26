//! Campaign configuration, execution and result files behind the `ionbsm` binary.

// `!(x > 0.0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod campaign;
pub mod config;
pub mod error;
pub mod output;

pub use campaign::{analyze_file, run_campaign, Outputs, Summary};
pub use config::{CampaignConfig, CampaignKind};
pub use error::{CliError, Result};
