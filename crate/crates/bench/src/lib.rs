//! Fixtures shared by the benchmarks.

use kramers_core::ScatteringConfig;

/// A scattering ensemble small enough to rebuild inside a benchmark.
pub fn bench_config() -> ScatteringConfig {
    ScatteringConfig {
        n: 60,
        lambda: 10,
        realizations: 8,
        energies: 20,
        window: 0.1,
        gamma: Some(5.7),
        seed: 3,
        ..ScatteringConfig::default()
    }
}
