#![allow(dead_code)]

use fllr_harness::config::ExperimentConfig;

/// A configuration that runs in well under a second per replicate.
pub fn small_config() -> ExperimentConfig {
    ExperimentConfig {
        replicates: 2,
        a_levels: vec![0.5],
        n_train: 60,
        n_test: 20,
        j_candidates: vec![1, 2, 3],
        k_candidates: Some(vec![10, 20, 40]),
        bootstrap: 5,
        presmooth_candidates: 8,
        seed: 7,
        ..Default::default()
    }
}
