use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Counter-based random source: the value at `(seed, stream, index)` never
/// depends on what was drawn before.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Independent sub-stream; used to give each layer or epoch its own sequence.
    pub fn fork(&self, stream: u64) -> RngStream {
        RngStream::new(self.seed ^ self.stream.rotate_left(32), stream)
    }

    /// Uniform `[0, 1)` value at a fixed draw index.
    pub fn at(&self, index: u64) -> f32 {
        let mut r = self.rng.clone();
        r.set_word_pos(index as u128);
        r.gen::<f32>()
    }

    pub fn next_f32(&mut self) -> f32 {
        self.rng.gen::<f32>()
    }

    pub fn uniform(&mut self, lo: f32, hi: f32) -> f32 {
        self.rng.gen_range(lo..hi)
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}
