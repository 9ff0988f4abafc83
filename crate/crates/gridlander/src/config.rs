//! Layered run configuration: defaults, then a TOML file, then flags.
//!
//! The file path comes from `--config`, else from `GRIDLANDER_CONFIG`.

use std::path::{Path, PathBuf};

use gridlander_core::dqn::TrainConfig;
use gridlander_core::env::EnvConfig;
use gridlander_core::geometry::{CameraFrame, OffsetMode, DEFAULT_SCALE};
use gridlander_core::vital::VitalConfig;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ppm::ChannelMap;

pub const CONFIG_ENV: &str = "GRIDLANDER_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraConfig {
    pub width: f64,
    pub height: f64,
    /// Principal point; the image centre when absent.
    pub center: Option<(f64, f64)>,
    /// Metres per pixel per metre of altitude.
    pub scale: f64,
    pub offset_mode: OffsetMode,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            width: 160.0,
            height: 160.0,
            center: None,
            scale: DEFAULT_SCALE,
            offset_mode: OffsetMode::Center,
        }
    }
}

impl CameraConfig {
    pub fn frame(&self) -> CameraFrame {
        let mut f = CameraFrame::new(self.width, self.height);
        if let Some(c) = self.center {
            f.center = c;
        }
        f.scale = self.scale;
        f
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoConfig {
    /// Modalities stored in the R, G and B channels of PPM files.
    pub channels: ChannelMap,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub seed: u64,
    pub env: EnvConfig,
    pub train: TrainConfig,
    pub vital: VitalConfig,
    pub camera: CameraConfig,
    pub io: IoConfig,
}

impl CliConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().replace('\n', " ")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match Error::io(path, e) {
            Error::Missing(p) => Error::Config(format!("{}: no such file", p.display())),
            other => other,
        })?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Defaults overlaid by the file named by `flag`, or by the environment
    /// variable when no flag is given.
    pub fn resolve(flag: Option<&Path>) -> Result<Self> {
        let from_env = std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
        match flag.map(Path::to_path_buf).or(from_env) {
            Some(p) => Self::load(&p),
            None => Ok(Self::default()),
        }
    }

    /// Checks every section against its module's invariants.
    pub fn validate(&self) -> Result<()> {
        let section = |name: &str, r: gridlander_core::Result<()>| {
            r.map_err(|e| Error::Config(format!("[{name}] {}", e.to_string().trim_start_matches("contract violation: "))))
        };
        section("env", self.env.validate())?;
        section("train", self.train.validate())?;
        section("vital", self.vital.validate())?;
        section("camera", self.camera.frame().validate())?;
        Ok(())
    }
}
