//! Decentralized asynchronous coded caching for fog radio access networks.
//!
//! The cloud server fills every F-AP cache with a uniformly random slice of
//! every file, then serves requests that arrive over `B` time slots, each of
//! which must be satisfied within `Δb` slots of its arrival. Coded multicasts
//! are built by collapsing synchronous encoding sets onto the requesters that
//! are currently active. The crate simulates the whole pipeline and measures
//! the normalized fronthaul load.

pub mod baselines;
pub mod delivery;
pub mod encoding_sets;
pub mod harness;
pub mod model;
pub mod placement;

pub use delivery::{run_delivery, simulate, DeliveryError, EngineOptions, SkipRule};
pub use model::{Bits, Config, LoadReport, Mode, ModelError, RequestSchedule, SubsetMask, Transmission};

/// Mixes a base seed with stream tags (splitmix64 finalizer per word).
pub(crate) fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    tags.iter().fold(mix(base), |acc, &t| mix(acc ^ mix(t)))
}
