use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use field_atlas_core::authline::AuthParams;
use field_atlas_core::etm::EtmParams;
use field_atlas_core::semnet::{DEFAULT_K, DEFAULT_THRESHOLD};
use serde::{Deserialize, Serialize};

use crate::error::{AtlasError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyMode {
    /// Provoke when a capture links to an earlier one; otherwise fall back
    /// to every n-th consecutive capture.
    OnLink,
    /// Provoke on every n-th consecutive capture only.
    EveryNth,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProvocationPolicy {
    pub mode: PolicyMode,
    /// 0 disables the every-n-th rule.
    pub every_nth: usize,
}

impl Default for ProvocationPolicy {
    fn default() -> Self {
        ProvocationPolicy {
            mode: PolicyMode::OnLink,
            every_nth: 2,
        }
    }
}

/// Parameters shared by `atlasd` and the `atlas` CLI. Loadable from TOML;
/// every field is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub data_dir: PathBuf,
    pub link_threshold: f64,
    pub link_k: usize,
    pub etm: EtmParams,
    pub auth: AuthParams,
    pub provocation: ProvocationPolicy,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            listen: SocketAddr::from(([127, 0, 0, 1], 7878)),
            data_dir: PathBuf::from("atlas-data"),
            link_threshold: DEFAULT_THRESHOLD,
            link_k: DEFAULT_K,
            etm: EtmParams::default(),
            auth: AuthParams::default(),
            provocation: ProvocationPolicy::default(),
        }
    }
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ServiceConfig = toml::from_str(text).map_err(|e| AtlasError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AtlasError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(AtlasError::Config(m.to_string()));
        if !(-1.0..=1.0).contains(&self.link_threshold) {
            return bad("link_threshold must lie in [-1, 1]");
        }
        if self.link_k == 0 {
            return bad("link_k must be at least 1");
        }
        if self.etm.window == 0 || self.etm.window.is_multiple_of(2) {
            return bad("etm.window must be odd and positive");
        }
        if self.etm.pivot.validate().is_err() {
            return bad("etm.pivot.cos_max must lie in [-1, 1] and mag_quantile in [0, 1]");
        }
        if !(self.etm.velocity.unit_secs > 0.0 && self.etm.velocity.min_step_secs > 0.0) {
            return bad("etm.velocity.unit_secs and min_step_secs must be positive");
        }
        if !(self.auth.v_max > 0.0 && self.auth.t_min >= 0.0 && self.auth.deadband_m >= 0.0) {
            return bad("auth.v_max must be positive; t_min and deadband_m non-negative");
        }
        Ok(())
    }
}
