//! System description: node placement, array sizes, radio and path-loss constants.
//!
//! All quantities are SI and linear (watts, W/Hz, hertz, meters, radians);
//! dBm/dB conversion happens once, when a scenario is loaded from file.

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;

/// Minimum separation between any two nodes, meters.
pub const MIN_DISTANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// BS antenna array position `q`.
    pub bs: Vector3<f64>,
    /// MU position `p`; the third coordinate is always 0 (MU on the ground).
    pub mu: Vector3<f64>,
    /// MU array rotation `α`, radians in `(0, π]`.
    pub rotation: f64,
    /// Complex gain `h_0` of the line-of-sight path.
    pub los_gain: Complex64,
    pub ris: Vec<RisPanel>,
    pub radio: RadioConfig,
    pub pathloss: PathLossConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RisPanel {
    pub position: Vector3<f64>,
    /// Side length `L`; the panel has `L²` elements.
    pub side: usize,
    /// Path-loss exponent `α_k` of the reflected link.
    pub pathloss_exponent: f64,
    /// Shadow-fading standard deviation `σ_SF,k`, dB.
    pub shadowing_std_db: f64,
    /// Complex gain `h_k` of the reflected path.
    pub gain: Complex64,
}

impl RisPanel {
    pub fn elements(&self) -> usize {
        self.side * self.side
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadioConfig {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub subcarriers: usize,
    pub tx_antennas: usize,
    pub rx_antennas: usize,
    /// Number of transmit beams `M_t`. `None` means one beam per path (`K + 1`).
    pub beams: Option<usize>,
    /// Inter-element spacing. `None` means half a wavelength.
    pub spacing_m: Option<f64>,
    pub tx_power_w: f64,
    pub noise_psd_w_per_hz: f64,
}

impl RadioConfig {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn spacing(&self) -> f64 {
        self.spacing_m.unwrap_or_else(|| self.wavelength() / 2.0)
    }

    /// Beam count for a scenario with `num_ris` surfaces.
    pub fn beams_for(&self, num_ris: usize) -> usize {
        self.beams.unwrap_or(num_ris + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shadowing {
    /// `ξ = 0` on every link.
    Deterministic,
    /// `ξ` drawn once per link from a seeded Gaussian.
    Sampled { seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathLossConfig {
    pub los_exponent: f64,
    pub los_shadowing_std_db: f64,
    pub shadowing: Shadowing,
}

impl Scenario {
    /// Three-RIS outdoor deployment: BS at 40 m height, MU at (90, 30), 16×16 panels,
    /// 32×8 antennas at 4.9 GHz with 128 subcarriers over 20 MHz.
    ///
    /// Transmit power (30 dBm), MU rotation (3π/4), beam count (K+1), half-wavelength
    /// spacing and deterministic shadowing are defaults chosen here, not measured values.
    pub fn reference() -> Self {
        let panel = |x: f64, y: f64, z: f64| RisPanel {
            position: Vector3::new(x, y, z),
            side: 16,
            pathloss_exponent: 2.2,
            shadowing_std_db: 7.0,
            gain: Complex64::new(1.0, 0.0),
        };
        Scenario {
            bs: Vector3::new(0.0, 0.0, 40.0),
            mu: Vector3::new(90.0, 30.0, 0.0),
            rotation: 0.75 * PI,
            los_gain: Complex64::new(1.0, 0.0),
            ris: vec![
                panel(60.0, 45.0, 15.0),
                panel(50.0, 50.0, 5.0),
                panel(40.0, 20.0, 10.0),
            ],
            radio: RadioConfig {
                carrier_hz: 4.9e9,
                bandwidth_hz: 20e6,
                subcarriers: 128,
                tx_antennas: 32,
                rx_antennas: 8,
                beams: None,
                spacing_m: None,
                tx_power_w: dbm_to_watts(30.0),
                noise_psd_w_per_hz: dbm_to_watts(-174.0),
            },
            pathloss: PathLossConfig {
                los_exponent: 3.7,
                los_shadowing_std_db: 4.0,
                shadowing: Shadowing::Deterministic,
            },
        }
    }

    /// Number of surfaces `K`.
    pub fn num_ris(&self) -> usize {
        self.ris.len()
    }

    /// Length of the channel parameter vector, `6K + 5`.
    pub fn num_params(&self) -> usize {
        6 * self.num_ris() + 5
    }

    /// Total number of RIS phase variables, `Σ L_k²`.
    pub fn num_phases(&self) -> usize {
        self.ris.iter().map(RisPanel::elements).sum()
    }

    /// Keeps only the first `count` surfaces (file order).
    pub fn with_active_ris(&self, count: usize) -> Self {
        let mut s = self.clone();
        s.ris.truncate(count);
        s
    }

    /// Overrides every panel's side length.
    pub fn with_ris_side(&self, side: usize) -> Self {
        let mut s = self.clone();
        for panel in &mut s.ris {
            panel.side = side;
        }
        s
    }

    pub fn with_tx_power(&self, watts: f64) -> Self {
        let mut s = self.clone();
        s.radio.tx_power_w = watts;
        s
    }

    /// Checks every static invariant. Geometry-dependent degeneracies (trig arguments
    /// outside `[-1, 1]`) are reported by [`crate::geometry::compute_geometry`].
    pub fn validate(&self) -> Result<()> {
        let inv = |msg: String| Err(Error::Invariant(msg));
        let finite = self.bs.iter().chain(self.mu.iter()).all(|v| v.is_finite())
            && self.rotation.is_finite();
        if !finite {
            return inv("positions and rotation must be finite".into());
        }
        if self.mu.z != 0.0 {
            return inv(format!("MU height must be exactly 0, got {}", self.mu.z));
        }
        if !(self.rotation > 0.0 && self.rotation <= PI) {
            return inv(format!("MU rotation {} outside (0, π]", self.rotation));
        }
        if (self.bs - self.mu).norm() < MIN_DISTANCE {
            return Err(Error::DegenerateGeometry("MU coincides with BS".into()));
        }
        for (k, panel) in self.ris.iter().enumerate() {
            if !panel.position.iter().all(|v| v.is_finite()) {
                return inv(format!("RIS {k} position must be finite"));
            }
            if panel.side == 0 {
                return inv(format!("RIS {k} side length must be at least 1"));
            }
            if panel.position.z <= 0.0 {
                return inv(format!("RIS {k} height must be positive"));
            }
            if !(panel.pathloss_exponent.is_finite() && panel.shadowing_std_db >= 0.0) {
                return inv(format!("RIS {k} path-loss parameters are invalid"));
            }
            if (panel.position - self.mu).norm() < MIN_DISTANCE {
                return Err(Error::DegenerateGeometry(format!("MU coincides with RIS {k}")));
            }
            if (panel.position - self.bs).norm() < MIN_DISTANCE {
                return Err(Error::DegenerateGeometry(format!("BS coincides with RIS {k}")));
            }
        }
        let r = &self.radio;
        let positive = [
            ("carrier_hz", r.carrier_hz),
            ("bandwidth_hz", r.bandwidth_hz),
            ("tx_power_w", r.tx_power_w),
            ("noise_psd_w_per_hz", r.noise_psd_w_per_hz),
            ("spacing_m", r.spacing()),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return inv(format!("radio.{name} must be positive and finite, got {v}"));
            }
        }
        if r.subcarriers == 0 || r.tx_antennas == 0 || r.rx_antennas == 0 {
            return inv("subcarrier and antenna counts must be positive".into());
        }
        let beams = r.beams_for(self.num_ris());
        if beams == 0 || beams > r.tx_antennas {
            return inv(format!(
                "beam count {beams} must be in 1..={}",
                r.tx_antennas
            ));
        }
        if !(self.pathloss.los_exponent.is_finite() && self.pathloss.los_shadowing_std_db >= 0.0)
        {
            return inv("LoS path-loss parameters are invalid".into());
        }
        Ok(())
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
