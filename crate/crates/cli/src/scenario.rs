use std::path::{Path, PathBuf};

use serde::Deserialize;
use skg_core::gaussmodel::{ChannelParams, NoiseSpec};
use skg_core::protocol::{CodeSource, FaultInjection, ProtocolConfig};

/// Scenario document. Unknown keys are rejected at every level.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub channel: ChannelParams,
    pub noise: NoiseSpec,
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub n: usize,
    pub l: usize,
    pub epsilon: f64,
    pub target: f64,
    pub m2: usize,
    /// `alist` file, relative to the scenario file.
    #[serde(default)]
    pub code_path: Option<PathBuf>,
    /// Generated code, used when `code_path` is absent.
    #[serde(default)]
    pub code: Option<CodeSource>,
    #[serde(default)]
    pub k_auth: Option<usize>,
    #[serde(default)]
    pub subtract_auth: bool,
    #[serde(default)]
    pub post_selection: Option<bool>,
    #[serde(default)]
    pub max_iters: Option<usize>,
    #[serde(default)]
    pub fault: Option<FaultInjection>,
}

pub struct Scenario {
    pub params: ChannelParams,
    pub noise: NoiseSpec,
    pub config: ProtocolConfig,
    pub seed: u64,
}

pub fn load(path: &Path) -> Result<Scenario, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let file: ScenarioFile =
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let p = file.protocol;
    let code = match (p.code_path, p.code) {
        (Some(rel), None) => CodeSource::Alist { path: base.join(rel) },
        (None, Some(c)) => c,
        (Some(_), Some(_)) => return Err("protocol: give either `code_path` or `code`, not both".into()),
        (None, None) => return Err("protocol: one of `code_path` or `code` is required".into()),
    };
    let config = ProtocolConfig {
        n: p.n,
        l: p.l,
        epsilon: p.epsilon,
        security_target_log2: p.target,
        m2: p.m2,
        code,
        k_auth: p.k_auth,
        subtract_auth: p.subtract_auth,
        post_selection: p.post_selection.unwrap_or(true),
        max_iters: p.max_iters.unwrap_or(skg_core::reconciliation::DEFAULT_MAX_ITERS),
        fault: p.fault,
        record_eve_view: false,
    };
    file.channel.validate().map_err(|e| format!("channel: {e}"))?;
    file.noise.validate().map_err(|e| format!("noise: {e}"))?;
    config.validate().map_err(|e| format!("protocol: {e}"))?;
    Ok(Scenario {
        params: file.channel,
        noise: file.noise,
        config,
        seed: file.seed,
    })
}
