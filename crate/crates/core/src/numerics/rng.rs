use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Seeded random source.
///
/// Built on the ChaCha counter stream cipher, so a `(seed, stream)` pair
/// fully determines the output sequence: the same pair always produces a
/// bit-identical stream, and distinct stream ids on the same seed yield
/// independent sequences. That makes parallel trials reproducible no matter
/// how they are scheduled. Gaussian variates come from the ziggurat method.
#[derive(Debug, Clone)]
pub struct Rng {
    chacha: ChaCha8Rng,
    seed: u64,
    stream: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut chacha = ChaCha8Rng::seed_from_u64(seed);
        chacha.set_stream(stream);
        Rng {
            chacha,
            seed,
            stream,
        }
    }

    /// Fresh generator on the same seed with a stream id mixed from this
    /// generator's stream and `id`, for nested fan-out.
    pub fn substream(&self, id: u64) -> Self {
        let mixed = self
            .stream
            .rotate_left(17)
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(id)
            .wrapping_add(1);
        Self::with_stream(self.seed, mixed)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.chacha)
    }

    /// `n` independent standard normal draws.
    pub fn gauss(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.standard_normal()).collect()
    }

    /// Uniform sign in `{-1, +1}`.
    pub fn uniform_sign(&mut self) -> i8 {
        if self.chacha.next_u32() & 1 == 0 {
            1
        } else {
            -1
        }
    }

    /// Uniform random `k`-subset of `{0, .., p-1}`, returned sorted.
    pub fn pick_subset(&mut self, p: usize, k: usize) -> Vec<usize> {
        assert!(k <= p, "subset size exceeds ground set");
        let mut idx: Vec<usize> = rand::seq::index::sample(&mut self.chacha, p, k).into_vec();
        idx.sort_unstable();
        idx
    }
}

impl RngCore for Rng {
    fn next_u32(&mut self) -> u32 {
        self.chacha.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.chacha.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.chacha.fill_bytes(dest)
    }
}
