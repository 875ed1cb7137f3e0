//! The four publication mechanisms and what they share: contribution limits,
//! Laplace noise and parameters.

mod noise;
mod params;
mod publish;
mod truncate;

pub use noise::{laplace_sample, NoiseSource};
pub use params::{Mechanism, NoiseMode, PrivacyParams};
pub(crate) use publish::publish_raw;
pub use publish::{
    publish, publish_baseline, publish_limit, publish_limit_cb, publish_limit_ss, LimitedTable,
    PublicationRecord,
};
pub use truncate::{clamp_visits, truncate_locations};
