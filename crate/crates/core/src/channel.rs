//! Urban-microcell uplink model.
//!
//! Clients are dropped uniformly over a disk around the base station. Path
//! loss follows the ITU-R M.2135-1 UMi NLOS formula with per-client
//! log-normal shadowing; the mean throughput is Shannon capacity with an
//! SNR loss factor and a spectral-efficiency cap, evaluated over the
//! client's resource-block allocation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::units::MegabitsPerSecond;

/// Thermal noise power spectral density at room temperature.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

/// Noise figure that places the mean throughput of a 1000-client
/// population at 1.4 Mbit/s with the other defaults. Produced by the
/// `calibrate` example; see the README.
pub const CALIBRATED_NOISE_FIGURE_DB: f64 = -11.68;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CellConfig {
    pub radius_m: f64,
    pub carrier_freq_ghz: f64,
    pub bs_height_m: f64,
    pub ue_height_m: f64,
    pub tx_power_dbm: f64,
    /// Applied at both ends of the link.
    pub antenna_gain_dbi: f64,
    pub rb_count: u32,
    /// Bandwidth of the whole RB allocation, not of one RB.
    pub rb_bandwidth_total_hz: f64,
    pub noise_figure_db: f64,
    /// Linear SNR divisor of the capacity formula.
    pub delta_loss: f64,
    /// Spectral efficiency cap in bit/s/Hz.
    pub rho_max: f64,
    pub shadowing_std_db: f64,
    /// Path loss is evaluated at no less than this distance.
    pub min_distance_m: f64,
}

impl Default for CellConfig {
    fn default() -> Self {
        Self {
            radius_m: 2000.0,
            carrier_freq_ghz: 2.5,
            bs_height_m: 11.0,
            ue_height_m: 1.0,
            tx_power_dbm: 20.0,
            antenna_gain_dbi: 0.0,
            rb_count: 10,
            rb_bandwidth_total_hz: 1.8e6,
            noise_figure_db: CALIBRATED_NOISE_FIGURE_DB,
            delta_loss: 1.6,
            rho_max: 4.8,
            shadowing_std_db: 4.0,
            min_distance_m: 10.0,
        }
    }
}

impl CellConfig {
    /// Checks every field, reporting the first violation by field name.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("radius_m", self.radius_m),
            ("carrier_freq_ghz", self.carrier_freq_ghz),
            ("rb_bandwidth_total_hz", self.rb_bandwidth_total_hz),
            ("rho_max", self.rho_max),
            ("min_distance_m", self.min_distance_m),
            ("bs_height_m", self.bs_height_m),
            ("ue_height_m", self.ue_height_m),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(
                    name,
                    format!("must be finite and > 0, got {v}"),
                ));
            }
        }
        for (name, v) in [
            ("tx_power_dbm", self.tx_power_dbm),
            ("antenna_gain_dbi", self.antenna_gain_dbi),
            ("noise_figure_db", self.noise_figure_db),
        ] {
            if !v.is_finite() {
                return Err(Error::param(name, format!("must be finite, got {v}")));
            }
        }
        if !(self.delta_loss.is_finite() && self.delta_loss >= 1.0) {
            return Err(Error::param(
                "delta_loss",
                format!("must be >= 1, got {}", self.delta_loss),
            ));
        }
        if !(self.shadowing_std_db.is_finite() && self.shadowing_std_db >= 0.0) {
            return Err(Error::param(
                "shadowing_std_db",
                format!("must be >= 0, got {}", self.shadowing_std_db),
            ));
        }
        if self.rb_count == 0 {
            return Err(Error::param("rb_count", "must be >= 1"));
        }
        if self.min_distance_m >= self.radius_m {
            return Err(Error::param(
                "min_distance_m",
                "must be smaller than radius_m",
            ));
        }
        Ok(())
    }

    /// `rb_bandwidth_total_hz * rho_max`, the throughput ceiling.
    pub fn max_throughput(&self) -> MegabitsPerSecond {
        MegabitsPerSecond::from_raw(self.rb_bandwidth_total_hz * self.rho_max / 1e6)
    }

    /// Noise power over the whole allocation, in dBm.
    pub fn noise_power_dbm(&self) -> f64 {
        THERMAL_NOISE_DBM_PER_HZ + 10.0 * self.rb_bandwidth_total_hz.log10() + self.noise_figure_db
    }
}

/// Where a client sits in the cell, plus its frozen shadowing draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClientPosition {
    pub distance_m: f64,
    pub shadowing_db: f64,
}

impl ClientPosition {
    /// A position with no shadowing.
    pub fn at(distance_m: f64, cell: &CellConfig) -> Result<Self> {
        if !(distance_m > 0.0 && distance_m <= cell.radius_m) {
            return Err(Error::param(
                "distance_m",
                format!("must lie in (0, {}], got {distance_m}", cell.radius_m),
            ));
        }
        Ok(Self {
            distance_m,
            shadowing_db: 0.0,
        })
    }
}

/// Drops `count` clients uniformly over the disk.
///
/// The distance density is proportional to `d` on `(0, radius]`, obtained
/// as `radius * sqrt(u)` with `u` uniform on `(0, 1]`. Each client also
/// gets one shadowing draw from the same stream.
pub fn place_clients(
    count: usize,
    cell: &CellConfig,
    rng: &mut RngStream,
) -> Result<Vec<ClientPosition>> {
    if count == 0 {
        return Err(Error::param("count", "must be >= 1"));
    }
    cell.validate()?;
    Ok((0..count)
        .map(|_| {
            let u = 1.0 - rng.unit();
            let distance_m = cell.radius_m * u.sqrt();
            let shadowing_db = cell.shadowing_std_db * rng.standard_normal();
            ClientPosition {
                distance_m,
                shadowing_db,
            }
        })
        .collect())
}

/// Deterministic UMi NLOS path loss (no shadowing), in dB.
pub fn median_path_loss_db(distance_m: f64, cell: &CellConfig) -> f64 {
    let d = distance_m.max(cell.min_distance_m);
    36.7 * d.log10() + 22.7 + 26.0 * cell.carrier_freq_ghz.log10()
}

/// Path loss including the client's shadowing term.
pub fn path_loss_db(pos: &ClientPosition, cell: &CellConfig) -> f64 {
    median_path_loss_db(pos.distance_m, cell) + pos.shadowing_db
}

/// Linear SNR at the receiver for a given path loss.
pub fn snr_linear(path_loss_db: f64, cell: &CellConfig) -> f64 {
    let rx_dbm = cell.tx_power_dbm + 2.0 * cell.antenna_gain_dbi - path_loss_db;
    10f64.powf((rx_dbm - cell.noise_power_dbm()) / 10.0)
}

/// `B * min(rho_max, log2(1 + snr / delta))`.
pub fn throughput_from_snr(snr: f64, cell: &CellConfig) -> MegabitsPerSecond {
    let efficiency = (snr / cell.delta_loss).ln_1p() / std::f64::consts::LN_2;
    MegabitsPerSecond::from_raw(cell.rb_bandwidth_total_hz * efficiency.min(cell.rho_max) / 1e6)
}

/// Long-run average uplink throughput of a client.
pub fn mean_throughput(pos: &ClientPosition, cell: &CellConfig) -> MegabitsPerSecond {
    throughput_from_snr(snr_linear(path_loss_db(pos, cell), cell), cell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::labels;

    fn unshadowed() -> CellConfig {
        CellConfig {
            shadowing_std_db: 0.0,
            ..CellConfig::default()
        }
    }

    #[test]
    fn path_loss_reference_points() {
        let cell = unshadowed();
        let expected_1km = 36.7 * 3.0 + 22.7 + 26.0 * 2.5f64.log10();
        assert!((median_path_loss_db(1000.0, &cell) - expected_1km).abs() < 1e-12);
        assert!((expected_1km - 143.146).abs() < 1e-2);
        let expected_10m = 36.7 + 22.7 + 26.0 * 2.5f64.log10();
        assert!((median_path_loss_db(10.0, &cell) - expected_10m).abs() < 1e-12);
        assert!((expected_10m - 69.746).abs() < 1e-2);
        // inside the clamp
        assert_eq!(
            median_path_loss_db(1.0, &cell),
            median_path_loss_db(10.0, &cell)
        );
    }

    #[test]
    fn equal_distance_equal_loss() {
        let cell = unshadowed();
        let a = ClientPosition::at(700.0, &cell).unwrap();
        let b = ClientPosition::at(700.0, &cell).unwrap();
        assert_eq!(path_loss_db(&a, &cell), path_loss_db(&b, &cell));
    }

    #[test]
    fn near_client_hits_the_cap() {
        let cell = CellConfig::default();
        let pos = ClientPosition::at(10.0, &cell).unwrap();
        let theta = mean_throughput(&pos, &cell);
        assert_eq!(theta, cell.max_throughput());
        assert!((theta.value() - 8.64).abs() < 1e-9);
    }

    #[test]
    fn vanishing_snr_vanishing_throughput() {
        let cell = CellConfig::default();
        assert_eq!(throughput_from_snr(0.0, &cell).value(), 0.0);
        assert!(throughput_from_snr(1e-9, &cell).value() < 1e-8);
    }

    #[test]
    fn throughput_non_increasing_in_distance() {
        let cell = unshadowed();
        let mut last = f64::INFINITY;
        for d in (1..=200).map(|i| i as f64 * 10.0) {
            let theta = mean_throughput(&ClientPosition::at(d, &cell).unwrap(), &cell).value();
            assert!(theta <= last && theta > 0.0, "d = {d}");
            last = theta;
        }
    }

    #[test]
    fn single_client_within_radius() {
        let cell = CellConfig::default();
        let mut rng = RngStream::new(0, labels::PLACEMENT);
        let pos = place_clients(1, &cell, &mut rng).unwrap();
        assert_eq!(pos.len(), 1);
        assert!(pos[0].distance_m > 0.0 && pos[0].distance_m <= 2000.0);
    }

    #[test]
    fn placement_is_area_uniform() {
        let cell = CellConfig::default();
        let mut rng = RngStream::new(11, labels::PLACEMENT);
        let pos = place_clients(100_000, &cell, &mut rng).unwrap();
        let mean = pos.iter().map(|p| p.distance_m).sum::<f64>() / pos.len() as f64;
        // 2R/3
        assert!((1320.0..=1347.0).contains(&mean), "mean = {mean}");
        let inner = pos.iter().filter(|p| p.distance_m <= 1000.0).count() as f64 / pos.len() as f64;
        assert!((inner - 0.25).abs() <= 0.01, "inner = {inner}");
    }

    #[test]
    fn zero_count_is_rejected() {
        let mut rng = RngStream::new(0, labels::PLACEMENT);
        assert!(place_clients(0, &CellConfig::default(), &mut rng).is_err());
    }

    #[test]
    fn invalid_cells_are_rejected() {
        let bad = CellConfig {
            delta_loss: 0.5,
            ..CellConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = CellConfig {
            radius_m: -1.0,
            ..CellConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
