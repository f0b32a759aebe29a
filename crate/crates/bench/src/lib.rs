//! Fixtures shared by the benchmarks.

use ucn_core::synth::{example_network, generate, random_spec};
use ucn_core::{standardize, TimeSeriesPanel};

/// Standardized example-system panel.
pub fn example_panel(t: usize, seed: u64) -> TimeSeriesPanel {
    let (panel, _) = generate(&example_network(), t, seed).expect("example system is stable");
    standardize(&panel).expect("no constant columns")
}

/// Standardized panel from a random system over `n` variables.
pub fn random_panel(n: usize, t: usize, seed: u64) -> TimeSeriesPanel {
    let spec = random_spec(n, seed).expect("random spec");
    let (panel, _) = generate(&spec, t, seed).expect("screened spec is stable");
    standardize(&panel).expect("no constant columns")
}
