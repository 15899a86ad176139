//! Seed derivation for independent, schedule-independent random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a label.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    mix64(mix64(seed) ^ label.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Tag values for the derived streams used across the crate.
pub mod tag {
    pub const TRAINING_PHASES: u64 = 1;
    pub const TRAINING_NOISE: u64 = 2;
    pub const TEST_PHASES: u64 = 3;
    pub const TEST_NOISE: u64 = 4;
    pub const OPTIMIZER: u64 = 5;
    pub const BOOTSTRAP: u64 = 6;
}

/// A ChaCha8 generator on stream `stream` of `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Replays a fixed list of uniforms through the `Rng` interface. Only
/// `gen::<f64>()` round-trips exactly.
#[cfg(test)]
pub(crate) struct SliceRng<'a> {
    values: std::slice::Iter<'a, f64>,
}

#[cfg(test)]
impl<'a> SliceRng<'a> {
    pub(crate) fn new(values: &'a [f64]) -> Self {
        SliceRng {
            values: values.iter(),
        }
    }
}

#[cfg(test)]
impl rand::RngCore for SliceRng<'_> {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        let u = *self.values.next().expect("SliceRng exhausted");
        ((u * (1u64 << 53) as f64) as u64) << 11
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        rand_core_fill(self, dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        rand_core_fill(self, dest);
        Ok(())
    }
}

#[cfg(test)]
fn rand_core_fill(rng: &mut SliceRng<'_>, dest: &mut [u8]) {
    use rand::RngCore;
    for chunk in dest.chunks_mut(8) {
        let bytes = rng.next_u64().to_le_bytes();
        chunk.copy_from_slice(&bytes[..chunk.len()]);
    }
}
