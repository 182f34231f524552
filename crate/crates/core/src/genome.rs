//! Controller genomes and the self-adaptive Gaussian mutation operator.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::controller::WEIGHT_COUNT;

/// Number of weights carried by every genome.
pub const GENOME_LEN: usize = WEIGHT_COUNT;

/// Initial mutation step size of a freshly initialised genome.
pub const SIGMA_INIT: f64 = 0.1;

/// A flat weight vector plus its own mutation step size.
#[derive(Debug, Clone, PartialEq)]
pub struct Genome {
    weights: Vec<f64>,
    sigma: f64,
}

impl Genome {
    /// Panics if `weights` does not have exactly [`GENOME_LEN`] entries.
    pub fn new(weights: Vec<f64>, sigma: f64) -> Self {
        assert_eq!(
            weights.len(),
            GENOME_LEN,
            "genome must carry {GENOME_LEN} weights"
        );
        Genome { weights, sigma }
    }

    pub fn zeros() -> Self {
        Genome::new(vec![0.0; GENOME_LEN], SIGMA_INIT)
    }

    /// Weights uniform in [-1, 1], sigma at its initial value.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, sigma_init: f64) -> Self {
        let weights = (0..GENOME_LEN)
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect();
        Genome::new(weights, sigma_init)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Little-endian f64 bytes of every weight followed by sigma, hex encoded.
    pub fn to_hex(&self) -> String {
        let mut bytes = Vec::with_capacity((GENOME_LEN + 1) * 8);
        for w in self.weights.iter().chain(std::iter::once(&self.sigma)) {
            bytes.extend_from_slice(&w.to_le_bytes());
        }
        hex::encode(bytes)
    }

    pub fn from_hex(s: &str) -> Option<Genome> {
        let bytes = hex::decode(s).ok()?;
        if bytes.len() != (GENOME_LEN + 1) * 8 {
            return None;
        }
        let mut values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let sigma = values.pop()?;
        Some(Genome::new(values, sigma))
    }
}

/// How the mutation step size changes from parent to child.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaRule {
    /// Log-normal self-adaptation: sigma' = sigma * exp(tau * N(0,1)).
    SelfAdaptive,
    /// Sigma is inherited, only clamped to the configured range.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MutationParams {
    pub rule: SigmaRule,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Weights are clamped to [-weight_bound, weight_bound].
    pub weight_bound: f64,
}

impl Default for MutationParams {
    fn default() -> Self {
        MutationParams {
            rule: SigmaRule::SelfAdaptive,
            sigma_min: 0.01,
            sigma_max: 0.5,
            weight_bound: 10.0,
        }
    }
}

impl MutationParams {
    /// Learning rate 1/sqrt(2n) for an n-weight genome.
    pub fn tau(&self) -> f64 {
        1.0 / (2.0 * GENOME_LEN as f64).sqrt()
    }
}

/// Mutates a copy of `parent` using standard normal draws from `rng`.
pub fn mutate<R: Rng + ?Sized>(parent: &Genome, params: &MutationParams, rng: &mut R) -> Genome {
    mutate_with(parent, params, || rng.sample(StandardNormal))
}

/// Mutation with an explicit source of N(0,1) deviates. The first draw adapts
/// sigma (self-adaptive rule only), then one draw per weight in order.
pub fn mutate_with(
    parent: &Genome,
    params: &MutationParams,
    mut standard_normal: impl FnMut() -> f64,
) -> Genome {
    let sigma = match params.rule {
        SigmaRule::SelfAdaptive => {
            let s = parent.sigma * (params.tau() * standard_normal()).exp();
            s.clamp(params.sigma_min, params.sigma_max)
        }
        SigmaRule::Fixed => parent.sigma.clamp(params.sigma_min, params.sigma_max),
    };
    let bound = params.weight_bound;
    let weights = parent
        .weights
        .iter()
        .map(|w| (w + sigma * standard_normal()).clamp(-bound, bound))
        .collect();
    Genome { weights, sigma }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_genome_is_reproducible() {
        let a = Genome::random(&mut ChaCha8Rng::seed_from_u64(7), SIGMA_INIT);
        let b = Genome::random(&mut ChaCha8Rng::seed_from_u64(7), SIGMA_INIT);
        let c = Genome::random(&mut ChaCha8Rng::seed_from_u64(8), SIGMA_INIT);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.weights().len(), 126);
        assert_eq!(a.sigma(), 0.1);
        assert!(a.weights().iter().all(|w| (-1.0..=1.0).contains(w)));
    }

    #[test]
    fn sigma_clamps_at_upper_bound() {
        let params = MutationParams::default();
        let parent = Genome::new(vec![0.0; GENOME_LEN], params.sigma_max);
        let child = mutate_with(&parent, &params, || 1.0);
        assert_eq!(child.sigma(), params.sigma_max);
    }

    #[test]
    fn zero_draws_leave_genome_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let parent = Genome::random(&mut rng, SIGMA_INIT);
        let child = mutate_with(&parent, &MutationParams::default(), || 0.0);
        assert_eq!(child, parent);
    }

    #[test]
    fn fixed_rule_keeps_sigma() {
        let params = MutationParams {
            rule: SigmaRule::Fixed,
            ..MutationParams::default()
        };
        let parent = Genome::new(vec![0.0; GENOME_LEN], 0.3);
        let child = mutate(&parent, &params, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(child.sigma(), 0.3);
        assert_ne!(child.weights(), parent.weights());
    }

    #[test]
    fn weights_are_clamped() {
        let parent = Genome::new(vec![9.99; GENOME_LEN], 0.5);
        let child = mutate_with(&parent, &MutationParams::default(), || 5.0);
        assert!(child.weights().iter().all(|&w| w == 10.0));
    }

    #[test]
    fn mutation_step_has_expected_spread() {
        // Self-adaptation inflates the variance by exp(2 tau^2) ~ 1.008.
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let parent = Genome::new(vec![0.0; GENOME_LEN], 0.1);
        let params = MutationParams::default();
        let n = 100_000;
        let samples: Vec<f64> = (0..n)
            .map(|_| mutate(&parent, &params, &mut rng).weights()[0])
            .collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sd = var.sqrt();
        assert!((0.097..=0.103).contains(&sd), "sd = {sd}");
    }

    #[test]
    fn hex_round_trip() {
        let g = Genome::random(&mut ChaCha8Rng::seed_from_u64(9), 0.2);
        let s = g.to_hex();
        assert_eq!(s.len(), 127 * 16);
        assert_eq!(Genome::from_hex(&s), Some(g));
        assert_eq!(Genome::from_hex("abcd"), None);
    }

    proptest::proptest! {
        #[test]
        fn mutation_respects_bounds(seed in 0u64..10_000, sigma in 0.001f64..2.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let parent = Genome::new(vec![0.5; GENOME_LEN], sigma);
            let before = parent.clone();
            let params = MutationParams::default();
            let child = mutate(&parent, &params, &mut rng);
            proptest::prop_assert_eq!(&parent, &before);
            proptest::prop_assert_eq!(child.weights().len(), GENOME_LEN);
            proptest::prop_assert!(child.sigma() >= params.sigma_min && child.sigma() <= params.sigma_max);
        }
    }
}
