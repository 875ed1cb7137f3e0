//! Shared inputs for the benchmarks.

use entropy_sentry::dataio::{generate_synthetic, GeneratorConfig};
use entropy_sentry::CheckInLog;

/// A Zipf check-in log small enough to regenerate per benchmark group.
pub fn zipf_log(locations: u64, users: u64, visits: u64) -> CheckInLog {
    generate_synthetic(&GeneratorConfig {
        num_locations: locations,
        num_users: users,
        total_visits: visits,
        seed: 42,
    })
    .expect("valid generator config")
}

/// Visit counts of `n` users where user `i` has `1 + i % c` visits.
pub fn cyclic_counts(n: usize, c: u64) -> Vec<u64> {
    (0..n as u64).map(|i| 1 + i % c).collect()
}
