use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Master seed from which every random stream is derived by index path.
///
/// A stream depends only on the master seed and its path, so work can be
/// scheduled across threads in any order without changing the draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeededRng {
    master_seed: u64,
}

/// Independent generators for one replication.
#[derive(Debug, Clone)]
pub struct TrialRng {
    pub n_index: usize,
    pub replication: usize,
    pub base: ChaCha8Rng,
    pub perturbed: ChaCha8Rng,
}

/// Stream families.
pub(crate) const POPULATION_STREAM: u64 = 1;
pub(crate) const TRIAL_STREAM: u64 = 2;

impl SeededRng {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// `mix(…mix(mix(seed) ^ mix(p₀)) ^ mix(p₁)…)`.
    pub fn stream_seed(&self, path: &[u64]) -> u64 {
        path.iter()
            .fold(mix64(self.master_seed), |h, &p| mix64(h ^ mix64(p)))
    }

    pub fn stream(&self, path: &[u64]) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.stream_seed(path))
    }

    /// Streams for replication `replication` at the `n_index`-th sample size.
    pub fn trial(&self, n_index: usize, replication: usize) -> TrialRng {
        let path = [TRIAL_STREAM, n_index as u64, replication as u64];
        let mut base_path = path.to_vec();
        base_path.push(0);
        let mut perturbed_path = path.to_vec();
        perturbed_path.push(1);
        TrialRng {
            n_index,
            replication,
            base: self.stream(&base_path),
            perturbed: self.stream(&perturbed_path),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let r = SeededRng::new(42);
        let a: u64 = r.stream(&[1, 2]).random();
        let b: u64 = r.stream(&[1, 2]).random();
        let c: u64 = r.stream(&[2, 1]).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(r.stream_seed(&[0]), SeededRng::new(43).stream_seed(&[0]));
    }

    #[test]
    fn mix_reference_value() {
        // First output of SplitMix64 seeded with 0.
        assert_eq!(mix64(0), 0xE220_A839_7B1D_CDAF);
    }
}
