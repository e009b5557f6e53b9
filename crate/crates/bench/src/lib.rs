//! Shared fixtures for the criterion benchmarks.

use renewal_core::BijectionSpec;

/// Bijections exercised by every benchmark group.
pub fn bench_specs() -> Vec<BijectionSpec> {
    vec![
        BijectionSpec::Identity,
        BijectionSpec::LogProduct,
        BijectionSpec::power(2.0).expect("2 is an admissible exponent"),
    ]
}
