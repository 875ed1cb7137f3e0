//! Laplace sampling and deterministic per-location random streams.

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

/// One draw from `Laplace(0, scale)` by inverse CDF.
pub fn laplace_sample<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    let v = u - 0.5;
    -scale * v.signum() * (1.0 - 2.0 * v.abs()).ln()
}

/// A keyed family of random streams.
///
/// Each location gets its own stream derived from the key and the location id,
/// so published values do not depend on thread count or iteration order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NoiseSource {
    key: [u8; 32],
}

impl NoiseSource {
    pub fn new(seed: u64) -> Self {
        NoiseSource {
            key: hash(&[b"entropy-sentry/seed", &seed.to_le_bytes()]),
        }
    }

    /// An independent source named by `label`.
    pub fn child(&self, label: &str) -> Self {
        NoiseSource {
            key: hash(&[b"entropy-sentry/child", &self.key, label.as_bytes()]),
        }
    }

    pub fn stream(&self, location_id: &str) -> ChaCha20Rng {
        ChaCha20Rng::from_seed(hash(&[b"entropy-sentry/location", &self.key, location_id.as_bytes()]))
    }
}

fn hash(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for part in parts {
        // length-prefix so that part boundaries are unambiguous
        h.update((part.len() as u64).to_le_bytes());
        h.update(part);
    }
    h.finalize().into()
}
