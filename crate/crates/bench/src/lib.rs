//! Inputs shared by the benchmarks.

use rmm_core::synthetic::{self, ScenarioSpec};
use rmm_core::TransactionDataset;

/// Censored purchases from the five-alternative reference scenario.
pub fn reference_dataset(arrivals: usize) -> TransactionDataset {
    synthetic::generate(&ScenarioSpec::reference(arrivals, 0.7, 17))
        .expect("reference scenario is valid")
        .censored
}
