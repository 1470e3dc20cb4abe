//! JSON scenario files.
//!
//! Powers and noise densities are given in dBm and dBm/Hz on disk and converted to
//! watts here, once; everything downstream works in linear SI units.

use std::path::Path;

use nalgebra::Vector3;
use ris_crlb::geometry::compute_geometry;
use ris_crlb::scenario::{
    dbm_to_watts, PathLossConfig, RadioConfig, RisPanel, Scenario, Shadowing,
};
use ris_crlb::Complex64;
use serde::Deserialize;

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u64 = 1;
pub const DEFAULT_TX_POWER_DBM: f64 = 30.0;
pub const BUNDLED_ID: &str = "paper_vi";
pub const BUNDLED_JSON: &str = include_str!("../scenarios/paper_vi.json");

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedScenario {
    pub id: String,
    pub scenario: Scenario,
    /// Defaults that were filled in for omitted fields.
    pub warnings: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[allow(dead_code)]
    schema_version: u64,
    #[serde(default)]
    scenario_id: Option<String>,
    #[serde(default)]
    #[allow(dead_code)]
    description: Option<String>,
    bs: [f64; 3],
    mu: [f64; 3],
    mu_rotation_rad: f64,
    #[serde(default = "unit_gain")]
    los_gain: [f64; 2],
    ris: Vec<RisFile>,
    radio: RadioFile,
    pathloss: PathLossFile,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RisFile {
    position: [f64; 3],
    side: usize,
    pathloss_exponent: f64,
    shadowing_std_db: f64,
    #[serde(default = "unit_gain")]
    gain: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RadioFile {
    carrier_hz: f64,
    bandwidth_hz: f64,
    subcarriers: usize,
    tx_antennas: usize,
    rx_antennas: usize,
    #[serde(default)]
    beams: Option<usize>,
    #[serde(default)]
    spacing_m: Option<f64>,
    #[serde(default)]
    tx_power_dbm: Option<f64>,
    noise_psd_dbm_per_hz: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PathLossFile {
    los_exponent: f64,
    los_shadowing_std_db: f64,
    #[serde(default)]
    shadowing: ShadowingFile,
}

#[derive(Debug, Default, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
enum ShadowingFile {
    #[default]
    Deterministic,
    Sampled {
        seed: u64,
    },
}

fn unit_gain() -> [f64; 2] {
    [1.0, 0.0]
}

fn vec3(v: [f64; 3]) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

fn complex(v: [f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

/// Parses and validates a scenario document. `fallback_id` names the scenario when
/// the file has no `scenario_id`.
pub fn parse_scenario(text: &str, fallback_id: &str) -> Result<LoadedScenario> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::Schema {
        path: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    match value.get("schema_version").map(|v| v.as_u64()) {
        Some(Some(SCHEMA_VERSION)) => {}
        Some(_) => {
            return Err(CliError::Schema {
                path: "schema_version".into(),
                message: format!("unsupported schema version, expected {SCHEMA_VERSION}"),
            })
        }
        None => {
            return Err(CliError::Schema {
                path: "schema_version".into(),
                message: "missing field".into(),
            })
        }
    }
    let file: ScenarioFile = serde_path_to_error::deserialize(value).map_err(|e| CliError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;

    let mut warnings = Vec::new();
    let tx_power_dbm = file.radio.tx_power_dbm.unwrap_or_else(|| {
        warnings.push(format!(
            "radio.tx_power_dbm not given; using default {DEFAULT_TX_POWER_DBM} dBm"
        ));
        DEFAULT_TX_POWER_DBM
    });
    let scenario = Scenario {
        bs: vec3(file.bs),
        mu: vec3(file.mu),
        rotation: file.mu_rotation_rad,
        los_gain: complex(file.los_gain),
        ris: file
            .ris
            .into_iter()
            .map(|r| RisPanel {
                position: vec3(r.position),
                side: r.side,
                pathloss_exponent: r.pathloss_exponent,
                shadowing_std_db: r.shadowing_std_db,
                gain: complex(r.gain),
            })
            .collect(),
        radio: RadioConfig {
            carrier_hz: file.radio.carrier_hz,
            bandwidth_hz: file.radio.bandwidth_hz,
            subcarriers: file.radio.subcarriers,
            tx_antennas: file.radio.tx_antennas,
            rx_antennas: file.radio.rx_antennas,
            beams: file.radio.beams,
            spacing_m: file.radio.spacing_m,
            tx_power_w: dbm_to_watts(tx_power_dbm),
            noise_psd_w_per_hz: dbm_to_watts(file.radio.noise_psd_dbm_per_hz),
        },
        pathloss: PathLossConfig {
            los_exponent: file.pathloss.los_exponent,
            los_shadowing_std_db: file.pathloss.los_shadowing_std_db,
            shadowing: match file.pathloss.shadowing {
                ShadowingFile::Deterministic => Shadowing::Deterministic,
                ShadowingFile::Sampled { seed } => Shadowing::Sampled { seed },
            },
        },
    };
    scenario.validate()?;
    compute_geometry(&scenario)?;
    Ok(LoadedScenario {
        id: file.scenario_id.unwrap_or_else(|| fallback_id.to_owned()),
        scenario,
        warnings,
    })
}

/// Loads `path`, or the bundled scenario when `path` is `None`.
pub fn load_scenario(path: Option<&Path>) -> Result<LoadedScenario> {
    match path {
        None => parse_scenario(BUNDLED_JSON, BUNDLED_ID),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "scenario".into());
            parse_scenario(&text, &stem)
        }
    }
}
