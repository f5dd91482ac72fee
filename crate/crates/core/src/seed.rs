//! Stable per-acquisition seeding.
//!
//! Every random stream in the generator is keyed by
//! `(master_seed, tag, index, attempt)`. The key is folded through the
//! SplitMix64 finalizer, which is fixed arithmetic and therefore stable across
//! platforms, compiler versions and thread schedules.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags. Each random process owns one tag so that adding draws to one
/// process never shifts another.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Temperature,
    Humidity,
    SustainedLoad,
    IntermittentLoad,
    Excitation,
    MeasurementNoise,
    FaultPlan,
    FaultApply,
    Sampling,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Temperature => 0x5445_4d50,
            Stream::Humidity => 0x4855_4d49,
            Stream::SustainedLoad => 0x4c4f_4144_4c54,
            Stream::IntermittentLoad => 0x4c4f_4144_5354,
            Stream::Excitation => 0x4558_4349,
            Stream::MeasurementNoise => 0x4e4f_4953,
            Stream::FaultPlan => 0x4641_554c_5450,
            Stream::FaultApply => 0x4641_554c_5441,
            Stream::Sampling => 0x5341_4d50,
        }
    }
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed for one `(stream, index, attempt)` cell.
pub fn derive(master: u64, stream: Stream, index: u64, attempt: u64) -> u64 {
    let mut h = splitmix64(master);
    h = splitmix64(h ^ stream.tag());
    h = splitmix64(h ^ index);
    splitmix64(h ^ attempt.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

pub fn rng(master: u64, stream: Stream, index: u64, attempt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, stream, index, attempt))
}
