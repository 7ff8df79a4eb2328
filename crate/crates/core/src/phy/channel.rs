//! BPSK over additive white Gaussian noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::frame::{hamming_distance, BitFrame};

/// Channel parameters. `snr_db` is Es/N0 per BPSK symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub snr_db: f64,
    pub seed: u64,
}

impl ChannelConfig {
    pub fn new(snr_db: f64, seed: u64) -> Self {
        assert!(snr_db.is_finite(), "snr_db must be finite");
        ChannelConfig { snr_db, seed }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        ChannelConfig { seed, ..self }
    }

    /// Noise standard deviation per real dimension for unit-energy symbols.
    pub fn noise_sigma(&self) -> f64 {
        (1.0 / (2.0 * 10f64.powf(self.snr_db / 10.0))).sqrt()
    }
}

/// Seeded noise source. Successive calls draw fresh noise.
#[derive(Debug, Clone)]
pub struct AwgnChannel {
    sigma: f64,
    rng: ChaCha8Rng,
}

impl AwgnChannel {
    pub fn new(cfg: ChannelConfig) -> Self {
        AwgnChannel {
            sigma: cfg.noise_sigma(),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        }
    }

    /// Maps 0 -> +1, 1 -> -1 and adds noise; returns the received samples.
    pub fn send_soft(&mut self, bits: &[bool]) -> Vec<f64> {
        bits.iter()
            .map(|&b| {
                let symbol = if b { -1.0 } else { 1.0 };
                let noise: f64 = StandardNormal.sample(&mut self.rng);
                symbol + self.sigma * noise
            })
            .collect()
    }

    /// Hard-decision transmission of a frame.
    pub fn send(&mut self, frame: &BitFrame) -> Transmission {
        let received = hard_decision(&self.send_soft(&frame.bits));
        let bit_errors = hamming_distance(&frame.bits, &received);
        Transmission {
            received: frame.with_bits(received),
            bit_errors,
        }
    }
}

/// Sign demodulation; a sample of exactly zero decodes as 0.
pub fn hard_decision(samples: &[f64]) -> Vec<bool> {
    samples.iter().map(|&s| s < 0.0).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transmission {
    pub received: BitFrame,
    pub bit_errors: usize,
}

/// Sends one frame through a fresh channel seeded from `cfg`.
pub fn transmit(frame: &BitFrame, cfg: ChannelConfig) -> Transmission {
    AwgnChannel::new(cfg).send(frame)
}
