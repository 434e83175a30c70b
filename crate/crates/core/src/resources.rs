//! Client resource profiles and the update/upload time model.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{self, CellConfig, ClientPosition};
use crate::error::{Error, Result};
use crate::rng::{gaussian_truncated, RngStream};
use crate::units::{ClientId, Megabits, MegabitsPerSecond, Samples, SamplesPerSecond, Seconds};

/// Static resources of one client, fixed for the whole simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientProfile {
    pub id: ClientId,
    pub data_count: Samples,
    pub mean_capability: SamplesPerSecond,
    pub mean_throughput: MegabitsPerSecond,
    pub position: ClientPosition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourceRanges {
    pub data_count_min: u32,
    pub data_count_max: u32,
    pub capability_min: f64,
    pub capability_max: f64,
}

impl Default for ResourceRanges {
    fn default() -> Self {
        Self {
            data_count_min: 100,
            data_count_max: 1000,
            capability_min: 10.0,
            capability_max: 100.0,
        }
    }
}

impl ResourceRanges {
    pub fn validate(&self) -> Result<()> {
        if self.data_count_min == 0 || self.data_count_min > self.data_count_max {
            return Err(Error::param(
                "data_count_min",
                format!(
                    "need 1 <= min <= max, got [{}, {}]",
                    self.data_count_min, self.data_count_max
                ),
            ));
        }
        if !(self.capability_min.is_finite() && self.capability_min > 0.0) {
            return Err(Error::param("capability_min", "must be finite and > 0"));
        }
        if !(self.capability_max.is_finite() && self.capability_max >= self.capability_min) {
            return Err(Error::param(
                "capability_max",
                "must be finite and >= capability_min",
            ));
        }
        Ok(())
    }
}

/// Relative standard deviation of per-round resource fluctuation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FluctuationConfig {
    pub r: f64,
}

impl FluctuationConfig {
    pub fn new(r: f64) -> Result<Self> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::param(
                "r",
                format!("must be finite and >= 0, got {r}"),
            ));
        }
        Ok(Self { r })
    }
}

/// Per-round time parameters. All durations are in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeBudget {
    pub t_round: Seconds,
    pub t_final: Seconds,
    pub t_cs: Seconds,
    pub t_agg: Seconds,
    pub model_size: Megabits,
    pub epochs_per_round: u32,
}

impl Default for TimeBudget {
    fn default() -> Self {
        Self {
            t_round: Seconds::from_raw(180.0),
            t_final: Seconds::from_raw(24_000.0),
            t_cs: Seconds::ZERO,
            t_agg: Seconds::ZERO,
            // 18.3 MB of 32-bit floats
            model_size: Megabits::from_raw(146.4),
            epochs_per_round: 5,
        }
    }
}

impl TimeBudget {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("t_round", self.t_round),
            ("t_final", self.t_final),
            ("t_cs", self.t_cs),
            ("t_agg", self.t_agg),
        ] {
            Seconds::new(v.value())
                .map_err(|_| Error::param(name, format!("invalid duration {v}")))?;
        }
        if self.t_round.value() <= self.t_cs.value() + self.t_agg.value() {
            return Err(Error::param("t_round", "must exceed t_cs + t_agg"));
        }
        if self.t_final.value() < self.t_round.value() {
            return Err(Error::param("t_final", "must be >= t_round"));
        }
        let size = self.model_size.value();
        if !(size.is_finite() && size > 0.0) {
            return Err(Error::param("model_size", "must be finite and > 0"));
        }
        if self.epochs_per_round == 0 {
            return Err(Error::param("epochs_per_round", "must be >= 1"));
        }
        Ok(())
    }

    /// Fixed per-round overhead `t_cs + t_agg`.
    pub fn overhead(&self) -> Seconds {
        self.t_cs + self.t_agg
    }
}

/// Builds `count` profiles: positions and throughput from `placement`,
/// data counts (uniform integer) and capabilities (uniform real) from
/// `draws`.
pub fn generate_profiles(
    count: usize,
    cell: &CellConfig,
    ranges: &ResourceRanges,
    placement: &mut RngStream,
    draws: &mut RngStream,
) -> Result<Vec<ClientProfile>> {
    ranges.validate()?;
    let positions = channel::place_clients(count, cell, placement)?;
    let span = ranges.capability_max - ranges.capability_min;
    Ok(positions
        .into_iter()
        .enumerate()
        .map(|(slot, position)| {
            let n = draws.random_range(ranges.data_count_min..=ranges.data_count_max);
            let cap = ranges.capability_min + span * draws.unit();
            ClientProfile {
                id: ClientId::from_slot(slot),
                data_count: Samples::from_raw(n as f64),
                mean_capability: SamplesPerSecond::from_raw(cap),
                mean_throughput: channel::mean_throughput(&position, cell),
                position,
            }
        })
        .collect())
}

/// `epochs * n_k / capability_k`.
pub fn estimated_update_time(p: &ClientProfile, budget: &TimeBudget) -> Seconds {
    p.data_count * f64::from(budget.epochs_per_round) / p.mean_capability
}

/// `D_m / theta_k`.
pub fn estimated_upload_time(p: &ClientProfile, budget: &TimeBudget) -> Result<Seconds> {
    if p.mean_throughput.value() <= 0.0 {
        return Err(Error::Model(format!("client {} has zero throughput", p.id)));
    }
    Ok(budget.model_size / p.mean_throughput)
}

/// Times and link rate observed for one client in one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealizedTimes {
    pub update: Seconds,
    pub upload: Seconds,
    pub throughput: MegabitsPerSecond,
}

/// Samples this round's capability and throughput (in that order) and
/// recomputes both times. With `r = 0` this reproduces the estimates.
pub fn realized_times(
    p: &ClientProfile,
    budget: &TimeBudget,
    fluct: &FluctuationConfig,
    rng: &mut RngStream,
) -> Result<RealizedTimes> {
    let cap = gaussian_truncated(p.mean_capability.value(), fluct.r, 0.0, rng)?;
    let theta = gaussian_truncated(p.mean_throughput.value(), fluct.r, 0.0, rng)?;
    let cap = SamplesPerSecond::from_raw(cap);
    let throughput = MegabitsPerSecond::from_raw(theta);
    Ok(RealizedTimes {
        update: p.data_count * f64::from(budget.epochs_per_round) / cap,
        upload: budget.model_size / throughput,
        throughput,
    })
}

/// Writes the audit snapshot `id,data_count,capability,throughput_mbps,distance_m`.
pub fn write_profiles_csv<W: Write>(profiles: &[ClientProfile], mut out: W) -> std::io::Result<()> {
    writeln!(out, "id,data_count,capability,throughput_mbps,distance_m")?;
    for p in profiles {
        writeln!(
            out,
            "{},{},{},{},{}",
            p.id.get(),
            p.data_count.value(),
            p.mean_capability.value(),
            p.mean_throughput.value(),
            p.position.distance_m
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::labels;

    fn profiles(count: usize, ranges: &ResourceRanges, seed: u64) -> Vec<ClientProfile> {
        generate_profiles(
            count,
            &CellConfig::default(),
            ranges,
            &mut RngStream::new(seed, labels::PLACEMENT),
            &mut RngStream::new(seed, labels::PROFILES),
        )
        .unwrap()
    }

    fn profile(n: f64, cap: f64, theta: f64) -> ClientProfile {
        ClientProfile {
            id: ClientId::new(1).unwrap(),
            data_count: Samples::new(n).unwrap(),
            mean_capability: SamplesPerSecond::new(cap).unwrap(),
            mean_throughput: MegabitsPerSecond::new(theta).unwrap(),
            position: ClientPosition {
                distance_m: 100.0,
                shadowing_db: 0.0,
            },
        }
    }

    #[test]
    fn default_ranges_are_respected() {
        let ps = profiles(1000, &ResourceRanges::default(), 1);
        assert_eq!(ps.len(), 1000);
        for (i, p) in ps.iter().enumerate() {
            assert_eq!(p.id.slot(), i);
            assert!((100.0..=1000.0).contains(&p.data_count.value()));
            assert_eq!(p.data_count.value().fract(), 0.0);
            assert!((10.0..=100.0).contains(&p.mean_capability.value()));
        }
    }

    #[test]
    fn collapsed_range() {
        let ranges = ResourceRanges {
            data_count_min: 500,
            data_count_max: 500,
            ..ResourceRanges::default()
        };
        assert!(profiles(1000, &ranges, 2)
            .iter()
            .all(|p| p.data_count.value() == 500.0));
    }

    #[test]
    fn data_count_mean_is_midpoint() {
        let ps = profiles(10_000, &ResourceRanges::default(), 3);
        let mean = ps.iter().map(|p| p.data_count.value()).sum::<f64>() / ps.len() as f64;
        assert!((mean - 550.0).abs() <= 10.0, "mean = {mean}");
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(
            profiles(50, &ResourceRanges::default(), 4),
            profiles(50, &ResourceRanges::default(), 4)
        );
    }

    #[test]
    fn bad_ranges_rejected() {
        let ranges = ResourceRanges {
            data_count_min: 10,
            data_count_max: 5,
            ..ResourceRanges::default()
        };
        let r = generate_profiles(
            3,
            &CellConfig::default(),
            &ranges,
            &mut RngStream::new(0, "a"),
            &mut RngStream::new(0, "b"),
        );
        assert!(r.is_err());
    }

    #[test]
    fn update_time_corners() {
        let b = TimeBudget::default();
        assert_eq!(
            estimated_update_time(&profile(100.0, 100.0, 1.0), &b).value(),
            5.0
        );
        assert_eq!(
            estimated_update_time(&profile(1000.0, 10.0, 1.0), &b).value(),
            500.0
        );
        assert_eq!(
            estimated_update_time(&profile(500.0, 50.0, 1.0), &b).value(),
            50.0
        );
    }

    #[test]
    fn upload_time() {
        let b = TimeBudget::default();
        let t = estimated_upload_time(&profile(100.0, 10.0, 8.64), &b)
            .unwrap()
            .value();
        assert!((t - 16.944).abs() < 1e-3, "{t}");
        let t = estimated_upload_time(&profile(100.0, 10.0, 1.4), &b)
            .unwrap()
            .value();
        assert!((t - 104.571).abs() < 1e-3, "{t}");
        let tiny = TimeBudget {
            model_size: Megabits::new(1e-300).unwrap(),
            ..TimeBudget::default()
        };
        assert!(
            estimated_upload_time(&profile(100.0, 10.0, 1.4), &tiny)
                .unwrap()
                .value()
                < 1e-299
        );
        assert!(estimated_upload_time(&profile(100.0, 10.0, 0.0), &b).is_err());
    }

    #[test]
    fn zero_fluctuation_is_bit_exact() {
        let b = TimeBudget::default();
        let fl = FluctuationConfig::new(0.0).unwrap();
        let mut rng = RngStream::new(5, labels::FLUCTUATION);
        for p in profiles(200, &ResourceRanges::default(), 5) {
            let r = realized_times(&p, &b, &fl, &mut rng).unwrap();
            assert_eq!(r.update, estimated_update_time(&p, &b));
            assert_eq!(r.upload, estimated_upload_time(&p, &b).unwrap());
            assert_eq!(r.throughput, p.mean_throughput);
        }
    }

    #[test]
    fn upload_spread_follows_delta_method() {
        let b = TimeBudget::default();
        let p = profile(500.0, 50.0, 1.4);
        let est = estimated_upload_time(&p, &b).unwrap().value();
        let fl = FluctuationConfig::new(0.10).unwrap();
        let mut rng = RngStream::new(6, labels::FLUCTUATION);
        let n = 10_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| {
                realized_times(&p, &b, &fl, &mut rng)
                    .unwrap()
                    .upload
                    .value()
            })
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        let predicted = 0.10 * est;
        assert!(
            (sd - predicted).abs() <= 0.15 * predicted,
            "sd = {sd}, predicted = {predicted}"
        );
    }

    #[test]
    fn heavy_fluctuation_stays_positive() {
        let b = TimeBudget::default();
        let fl = FluctuationConfig::new(0.20).unwrap();
        let mut rng = RngStream::new(7, labels::FLUCTUATION);
        for p in profiles(500, &ResourceRanges::default(), 7) {
            let r = realized_times(&p, &b, &fl, &mut rng).unwrap();
            assert!(r.update.value() > 0.0 && r.upload.value() > 0.0);
            assert!(r.update.value().is_finite() && r.upload.value().is_finite());
        }
    }

    #[test]
    fn budget_validation() {
        assert!(TimeBudget::default().validate().is_ok());
        let bad = TimeBudget {
            t_final: Seconds::new(10.0).unwrap(),
            ..TimeBudget::default()
        };
        assert!(bad.validate().is_err());
        let bad = TimeBudget {
            epochs_per_round: 0,
            ..TimeBudget::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn csv_snapshot_has_one_row_per_client() {
        let ps = profiles(3, &ResourceRanges::default(), 8);
        let mut buf = Vec::new();
        write_profiles_csv(&ps, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("id,data_count,capability,throughput_mbps,distance_m\n"));
    }
}
