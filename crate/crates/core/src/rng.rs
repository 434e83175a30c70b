//! Seeded, labelled random streams.
//!
//! A stream is identified by `(seed, label)`. The pair is hashed with
//! SHA-256 into a ChaCha20 key, so the same pair always replays the same
//! sequence and distinct labels are statistically independent. Each
//! consumer (placement, fluctuation, selection, ...) owns its own stream,
//! so changing how one of them draws leaves the others untouched.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub mod labels {
    pub const PLACEMENT: &str = "placement";
    pub const PROFILES: &str = "profiles";
    pub const FLUCTUATION: &str = "fluctuation";
    pub const SELECTION: &str = "selection";
    pub const UPLOAD_ORDER: &str = "upload-order";
    pub const TRAINING: &str = "training";
    pub const PARTITION: &str = "partition";
    pub const DATASET: &str = "dataset";
    pub const INIT: &str = "init";
}

/// Lower clamp for Gaussian resource samples, as a fraction of the mean.
pub const GAUSSIAN_FLOOR_FRACTION: f64 = 0.01;

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    label: String,
    inner: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64, label: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(seed.to_le_bytes());
        hasher.update(label.as_bytes());
        let key: [u8; 32] = hasher.finalize().into();
        Self {
            seed,
            label: label.to_owned(),
            inner: ChaCha20Rng::from_seed(key),
        }
    }

    /// An independent stream derived from this one's identity (not its state).
    pub fn substream(&self, suffix: &str) -> Self {
        Self::new(self.seed, &format!("{}/{}", self.label, suffix))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform on `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        self.inner.random::<f64>()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Draw from `Normal(mean, rel_std * mean)` clamped below at
/// `max(floor, 1% of mean)`.
///
/// One standard-normal variate is consumed on every call, including
/// `rel_std == 0`, so streams stay aligned across fluctuation settings.
/// With `rel_std == 0` the mean is returned exactly.
pub fn gaussian_truncated(mean: f64, rel_std: f64, floor: f64, rng: &mut RngStream) -> Result<f64> {
    if !mean.is_finite() || mean <= 0.0 {
        return Err(Error::param(
            "mean",
            format!("must be finite and > 0, got {mean}"),
        ));
    }
    if !rel_std.is_finite() || rel_std < 0.0 {
        return Err(Error::param(
            "rel_std",
            format!("must be finite and >= 0, got {rel_std}"),
        ));
    }
    if !floor.is_finite() || floor < 0.0 {
        return Err(Error::param(
            "floor",
            format!("must be finite and >= 0, got {floor}"),
        ));
    }
    let z = rng.standard_normal();
    let sample = mean + rel_std * mean * z;
    Ok(sample.max(floor.max(GAUSSIAN_FLOOR_FRACTION * mean)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_and_label_replay() {
        let mut a = RngStream::new(7, labels::PLACEMENT);
        let mut b = RngStream::new(7, labels::PLACEMENT);
        let xs: Vec<u64> = (0..16).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..16).map(|_| b.next_u64()).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn labels_and_seeds_separate_streams() {
        let a = RngStream::new(7, labels::PLACEMENT).next_u64();
        let b = RngStream::new(7, labels::SELECTION).next_u64();
        let c = RngStream::new(8, labels::PLACEMENT).next_u64();
        assert_ne!(a, b);
        assert_ne!(a, c);
        let d = RngStream::new(7, labels::PLACEMENT)
            .substream("x")
            .next_u64();
        assert_ne!(a, d);
    }

    #[test]
    fn zero_variance_returns_mean() {
        let mut rng = RngStream::new(1, "t");
        for _ in 0..100 {
            assert_eq!(gaussian_truncated(1.4, 0.0, 0.0, &mut rng).unwrap(), 1.4);
        }
    }

    #[test]
    fn sample_std_matches_relative_std() {
        let mut rng = RngStream::new(2, "t");
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| gaussian_truncated(100.0, 0.1, 0.0, &mut rng).unwrap())
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sd = var.sqrt();
        assert!((9.5..=10.5).contains(&sd), "sd = {sd}");
    }

    #[test]
    fn heavy_spread_respects_floor() {
        let mut rng = RngStream::new(3, "t");
        for _ in 0..10_000 {
            let x = gaussian_truncated(1.0, 10.0, 0.001, &mut rng).unwrap();
            assert!(x >= 0.001);
            assert!(x >= GAUSSIAN_FLOOR_FRACTION);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut rng = RngStream::new(4, "t");
        assert!(gaussian_truncated(f64::NAN, 0.1, 0.0, &mut rng).is_err());
        assert!(gaussian_truncated(1.0, -0.1, 0.0, &mut rng).is_err());
    }
}
