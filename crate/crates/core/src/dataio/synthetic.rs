//! Synthetic check-ins with Zipf-distributed locations and users.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{CheckInLog, Timestamp, Visit};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GeneratorConfig {
    pub num_locations: u64,
    pub num_users: u64,
    pub total_visits: u64,
    pub seed: u64,
}

impl GeneratorConfig {
    /// 1,000 locations, 10,000 users, 10⁶ visits.
    pub fn sparse_scaled(seed: u64) -> Self {
        GeneratorConfig {
            num_locations: 1_000,
            num_users: 10_000,
            total_visits: 1_000_000,
            seed,
        }
    }

    /// 1,000 locations, 10⁶ users, 10⁷ visits.
    pub fn dense_scaled(seed: u64) -> Self {
        GeneratorConfig {
            num_locations: 1_000,
            num_users: 1_000_000,
            total_visits: 10_000_000,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_locations == 0 || self.num_users == 0 || self.total_visits == 0 {
            return Err(Error::InvalidParameter(
                "locations, users and visits must all be at least 1".into(),
            ));
        }
        if self.num_locations > u64::from(u32::MAX) || self.num_users > u64::from(u32::MAX) {
            return Err(Error::InvalidParameter("at most 2^32 - 1 users and locations".into()));
        }
        Ok(())
    }
}

/// Samples ranks `1..=n` with probability proportional to `1 / rank`, by
/// binary search over the cumulative weights.
#[derive(Clone, Debug)]
pub struct ZipfSampler {
    cumulative: Vec<f64>,
}

impl ZipfSampler {
    pub fn new(n: u64) -> Self {
        let mut total = 0.0;
        let cumulative = (1..=n)
            .map(|x| {
                total += 1.0 / x as f64;
                total
            })
            .collect();
        ZipfSampler { cumulative }
    }

    /// Harmonic number `H_n`, the normalizing constant.
    pub fn total_weight(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// A rank in `1..=n`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u = rng.gen::<f64>() * self.total_weight();
        let i = self.cumulative.partition_point(|&c| c <= u);
        i.min(self.cumulative.len() - 1) as u64 + 1
    }
}

/// Generates `total_visits` events. Each event independently draws location
/// `x` and user `y` with probabilities proportional to `1/x` and `1/y`; event
/// `i` gets timestamp `i`. Ids are `l{x}` and `u{y}`.
pub fn generate_synthetic(config: &GeneratorConfig) -> Result<CheckInLog> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let locations = ZipfSampler::new(config.num_locations);
    let users = ZipfSampler::new(config.num_users);
    let visits: Vec<Visit> = (0..config.total_visits)
        .map(|i| {
            let location = locations.sample(&mut rng) as u32 - 1;
            let user = users.sample(&mut rng) as u32 - 1;
            Visit {
                user,
                location,
                timestamp: Timestamp::from_unix_seconds(i as i64),
            }
        })
        .collect();
    let user_names = (1..=config.num_users).map(|y| format!("u{y}")).collect();
    let location_names = (1..=config.num_locations).map(|x| format!("l{x}")).collect();
    CheckInLog::from_indexed(user_names, location_names, visits)
}
