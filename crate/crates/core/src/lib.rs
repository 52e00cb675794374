//! Spectrum tomography for shared-spectrum cellular networks.
//!
//! The crate simulates hidden-terminal interference, estimates high-order joint
//! channel-access distributions from first-order and pairwise measurements,
//! and uses them for interference blueprinting, interferer localization and
//! access-aware scheduling.

pub mod airsim;
pub mod blueprint;
pub mod error;
pub mod geoloc;
pub mod harness;
pub mod hod;
pub mod law;
pub mod model;
pub mod pipeline;
pub mod sched;
pub mod tomography;

pub use error::{Error, Result};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random stream `stream` derived from an experiment seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
