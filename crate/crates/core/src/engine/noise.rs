use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Measured plant channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    #[serde(rename = "i1")]
    I1,
    #[serde(rename = "vc")]
    Vc,
    #[serde(rename = "i2")]
    I2,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::I1, Channel::Vc, Channel::I2];

    fn stream(self) -> u64 {
        match self {
            Channel::I1 => 1,
            Channel::Vc => 2,
            Channel::I2 => 3,
        }
    }
}

/// Zero-mean Gaussian measurement noise. `power` is the per-sample variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub seed: u64,
    pub power: f64,
    pub targets: Vec<Channel>,
}

impl NoiseSpec {
    /// σ = 0.05 on the voltage measurement. Stand-in value, not a measured noise level.
    pub fn low(seed: u64) -> Self {
        Self {
            seed,
            power: 0.05 * 0.05,
            targets: vec![Channel::Vc],
        }
    }

    /// σ = 0.5 on the voltage measurement. Stand-in value, not a measured noise level.
    pub fn high(seed: u64) -> Self {
        Self {
            seed,
            power: 0.5 * 0.5,
            targets: vec![Channel::Vc],
        }
    }
}

/// Measurement of `true_value` on `channel` at integration step `step`.
///
/// Every `(seed, channel, step)` triple addresses its own position in a ChaCha
/// stream, so samples are reproducible and independent of evaluation order.
pub fn inject_noise(true_value: f64, spec: &NoiseSpec, channel: Channel, step: u64) -> f64 {
    if spec.power <= 0.0 || !spec.targets.contains(&channel) {
        return true_value;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(channel.stream());
    rng.set_word_pos(u128::from(step) * 16);
    let z: f64 = rng.sample(StandardNormal);
    true_value + spec.power.sqrt() * z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_power_is_transparent() {
        let spec = NoiseSpec {
            seed: 3,
            power: 0.0,
            targets: vec![Channel::Vc],
        };
        assert_eq!(inject_noise(20.0, &spec, Channel::Vc, 17), 20.0);
    }

    #[test]
    fn untargeted_channel_is_transparent() {
        assert_eq!(inject_noise(7.0, &NoiseSpec::high(1), Channel::I1, 5), 7.0);
    }

    #[test]
    fn samples_are_reproducible() {
        let spec = NoiseSpec::low(42);
        let a = inject_noise(20.0, &spec, Channel::Vc, 1234);
        assert_eq!(a, inject_noise(20.0, &spec, Channel::Vc, 1234));
        assert_ne!(a, inject_noise(20.0, &spec, Channel::Vc, 1235));
        assert_ne!(a, inject_noise(20.0, &NoiseSpec::low(43), Channel::Vc, 1234));
    }

    #[test]
    fn sample_variance_matches_power() {
        let spec = NoiseSpec::high(9);
        let n = 20_000;
        let samples: Vec<f64> = (0..n).map(|k| inject_noise(0.0, &spec, Channel::Vc, k)).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        assert!(mean.abs() < 0.02, "{mean}");
        assert!((var - 0.25).abs() < 0.01, "{var}");
    }
}
