//! JSON run configuration and output provenance.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gear::{build_grid, FlankGrid, GearSpec};
use crate::hob::HobSpec;
use crate::kinematics::{MachineSetup, DEFAULT_POSE_CAP};

fn default_cap() -> u64 {
    DEFAULT_POSE_CAP
}
fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}

/// Machine section: everything in [`MachineSetup`] except the two specs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineConfig {
    #[serde(default)]
    pub center_distance: Option<f64>,
    #[serde(default)]
    pub installation_angle: Option<f64>,
    #[serde(default = "one")]
    pub feed_per_rev: f64,
    #[serde(default = "two")]
    pub interval_angle: f64,
    #[serde(default)]
    pub approach: Option<f64>,
    #[serde(default)]
    pub overrun: Option<f64>,
    #[serde(default = "default_cap")]
    pub pose_cap: u64,
    #[serde(default)]
    pub gear_angle_offset: f64,
}

impl Default for MachineConfig {
    fn default() -> Self {
        Self {
            center_distance: None,
            installation_angle: None,
            feed_per_rev: 1.0,
            interval_angle: 2.0,
            approach: None,
            overrun: None,
            pose_cap: DEFAULT_POSE_CAP,
            gear_angle_offset: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    /// Max over the sampled lattice.
    #[default]
    Samples,
    /// Max over every grid point.
    Field,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub rows: usize,
    pub cols: usize,
    pub profile_margin: f64,
    pub axial_margin: f64,
    pub sample_rows: usize,
    pub sample_cols: usize,
    pub statistic: Statistic,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            rows: 25,
            cols: 25,
            profile_margin: 0.05,
            axial_margin: 0.05,
            sample_rows: 5,
            sample_cols: 5,
            statistic: Statistic::Samples,
        }
    }
}

impl GridConfig {
    pub fn build(&self, gear: &GearSpec) -> Result<FlankGrid> {
        build_grid(
            gear,
            self.rows,
            self.cols,
            self.profile_margin,
            self.axial_margin,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// mm per workpiece revolution, coarse to fine.
    pub feeds: Vec<f64>,
    /// Degrees, coarse to fine.
    pub intervals: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            feeds: vec![5.0, 4.0, 3.0, 2.0, 1.0],
            intervals: vec![8.0, 4.0, 2.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub gear: GearSpec,
    pub hob: HobSpec,
    pub machine: MachineConfig,
    pub grid: GridConfig,
    pub sweep: SweepSection,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn setup(&self) -> MachineSetup {
        let m = &self.machine;
        MachineSetup {
            gear: self.gear.clone(),
            hob: self.hob.clone(),
            center_distance: m.center_distance,
            installation_angle: m.installation_angle,
            feed_per_rev: m.feed_per_rev,
            interval_angle: m.interval_angle,
            approach: m.approach,
            overrun: m.overrun,
            pose_cap: m.pose_cap,
            gear_angle_offset: m.gear_angle_offset,
        }
    }

    /// SHA-256 of the compact JSON form, hex.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// `config-hash=<hash>, version=<crate version>`
    pub fn provenance(&self) -> String {
        format!(
            "config-hash={}, version={}",
            self.hash(),
            env!("CARGO_PKG_VERSION")
        )
    }
}
