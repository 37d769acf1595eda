//! Synthetic scenes, overlap metrics and experiment suites.

pub mod metrics;
pub mod suite;
pub mod synthetic;

pub use metrics::{dsc, matched_dsc};
pub use suite::{
    multiphase_suite, robustness_suite, rows_to_csv, sigma_sweep, standard_inits, standard_multiphase_inits,
    timing_compare, timing_compare_multiphase, vessel_init, NamedInit, NamedMultiphaseInit, SuiteRow, Timing,
    CSV_HEADER,
};
pub use synthetic::{generate, Scene, SyntheticImage, SyntheticSpec};
