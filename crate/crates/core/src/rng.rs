//! Seeded random streams.
//!
//! Every random draw in a run comes from one top-level seed. Consumers take a
//! ChaCha8 generator keyed by that seed and select a distinct stream id, so
//! the streams never overlap and any figure can be regenerated from the seed
//! recorded in its manifest.
//!
//! Stream ids:
//!
//! | id                          | consumer                                  |
//! |-----------------------------|-------------------------------------------|
//! | 1                           | weight initialization                     |
//! | 2                           | training symbols                          |
//! | 3                           | training channel draws                    |
//! | `0x1_0000_0000 + i·2^16 + j`| sweep point (linewidth `i`, OSNR `j`)     |
//! | 16..                        | verification suites                       |

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub const STREAM_INIT: u64 = 1;
pub const STREAM_TRAIN_DATA: u64 = 2;
pub const STREAM_TRAIN_CHANNEL: u64 = 3;
pub const STREAM_VERIFY: u64 = 16;
const STREAM_SWEEP_BASE: u64 = 1 << 32;

/// Generator for `stream` under the run seed `seed`.
pub fn stream(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id of sweep grid point (`linewidth_index`, `osnr_index`).
pub fn sweep_stream(linewidth_index: usize, osnr_index: usize) -> u64 {
    STREAM_SWEEP_BASE + ((linewidth_index as u64) << 16) + osnr_index as u64
}
