use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent generator for one `(seed, stream)` pair, so that shots can be
/// processed in any order and on any number of threads.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream ids for the independent consumers of one shot.
pub(crate) mod streams {
    pub const FOUNTAIN: u64 = 0;
    pub const EMISSION: u64 = 1 << 40;
    pub const DETECTION: u64 = 2 << 40;
    pub const CALIBRATION: u64 = 3 << 40;
}
