//! Classical baselines: relay-identified Ziegler-Nichols gains and a
//! 49-rule fuzzy gain scheduler.

pub mod fuzzy;
pub mod relay;

pub use fuzzy::{fuzzy_delta, fuzzy_step, FuzzyRuleTable, FuzzyScaling, Level, TriMf};
pub use relay::{relay_autotune, zn_gains, zn_raw_gains, RelayConfig, RelayError, RelayResult};
