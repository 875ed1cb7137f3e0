//! Check-in files, synthetic data and publication files.

mod checkins;
mod publication;
mod synthetic;

pub use checkins::{parse_checkins, read_checkins, write_checkins};
pub use publication::{
    read_publication, read_publication_from, write_atomic, write_publication, write_publication_to,
};
pub use synthetic::{generate_synthetic, GeneratorConfig, ZipfSampler};
