//! Differentially private publication of location entropy.
//!
//! Location entropy (LE) is the Shannon entropy of how a location's visits are
//! spread across its visitors. This crate computes LE from raw check-in data and
//! publishes noisy versions of it under four mechanisms:
//!
//! * [`Mechanism::Baseline`]: global sensitivity measured from the raw data.
//! * [`Mechanism::Limit`]: per-user truncation to `M` locations and `C` visits,
//!   then Laplace noise calibrated to the truncated global sensitivity.
//! * [`Mechanism::LimitSs`]: the same truncation with noise calibrated to a
//!   precomputed smooth sensitivity, giving `(ε, δ)`-DP.
//! * [`Mechanism::LimitCb`]: publishes only locations with at least `k` users,
//!   giving `(k, ε)`-crowd-blending privacy.
//!
//! Around the mechanisms sit the sensitivity calculus ([`sensitivity`]), a
//! synthetic data generator and file formats ([`dataio`]) and the utility metrics
//! used to study them ([`evaluation`]).
//!
//! ```
//! use entropy_sentry::{CheckIn, CheckInLog, PrivacyParams, Timestamp, publish_limit};
//!
//! let rows = vec![
//!     CheckIn::new("alice", "cafe", Timestamp::from_unix_seconds(1)),
//!     CheckIn::new("bob", "cafe", Timestamp::from_unix_seconds(2)),
//!     CheckIn::new("bob", "cafe", Timestamp::from_unix_seconds(3)),
//! ];
//! let log = CheckInLog::from_checkins(rows).unwrap();
//! let records = publish_limit(&log, &PrivacyParams::default()).unwrap();
//! assert_eq!(records.len(), 1);
//! assert!(records[0].published());
//! ```

pub mod dataio;
pub mod entropy;
mod error;
pub mod evaluation;
pub mod mechanisms;
pub mod model;
pub mod sensitivity;

pub use error::{Error, Result};

pub use entropy::{entropy_add_user, entropy_remove_user, location_entropy, max_entropy};
pub use evaluation::{
    evaluate, kl_divergence, mse, published_ratio, run_sweep, MetricMode, MetricReport,
    SweepParam, SweepSpec, SweepTable,
};
pub use mechanisms::{
    clamp_visits, laplace_sample, publish, publish_baseline, publish_limit, publish_limit_cb,
    publish_limit_ss, truncate_locations, LimitedTable, Mechanism, NoiseMode, NoiseSource,
    PrivacyParams, PublicationRecord,
};
pub use model::{count_visits, CheckIn, CheckInLog, IdSpace, LocationCounts, Timestamp, VisitTable};
pub use sensitivity::{
    brute_force_local_sensitivity, crowd_blend_sensitivity, global_sensitivity,
    local_sensitivity, min_entropy_bound, precompute_smooth_sensitivity, SensitivityParams,
    SensitivityTable,
};

/// Entropy and sensitivities are measured in nats (natural logarithm).
pub type Nats = f64;
