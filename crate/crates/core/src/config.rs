//! Pipeline configuration: a JSON file plus dotted `key=value` overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::evalkit::DEFAULT_TAU_BERT;
use crate::project::{OverlapMode, ProjectParams};
use crate::spectral::{HierarchicalParams, SpectralParams};
use crate::superpoint::SuperpointParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {reason}")]
    Read { path: String, reason: String },

    #[error("unknown config key {0:?}")]
    UnknownKey(String),

    #[error("override {0:?} is not of the form key=value")]
    BadOverride(String),

    #[error("invalid config: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusteringMode {
    #[default]
    Flat,
    Hierarchical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Overlap gate of the mask-coherence term.
    pub tau_iou: f64,
    /// Cosine gate of the semantic-coherence term.
    pub tau_sim: f64,
    /// Masks consulted when voting a superpoint label.
    pub top_k_masks: usize,
    /// Farthest-point samples per superpoint for the adjacency test.
    pub k_fps: usize,
    /// Label similarity needed for a match during evaluation.
    pub tau_bert: f64,
    pub superpoint: SuperpointParams,
    pub clustering: ClusteringMode,
    /// Hierarchical window size; `null` means half the superpoint count.
    pub window: Option<usize>,
    pub hilbert_bits: u32,
    pub merge_threshold: f64,
    pub seed: u64,
    pub dense_limit: usize,
    /// Depth-consistency tolerance in meters.
    pub tau_depth: f64,
    pub strict_iou_mode: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let h = HierarchicalParams::default();
        let s = SpectralParams::default();
        let p = ProjectParams::default();
        Self {
            tau_iou: 0.9,
            tau_sim: 0.9,
            top_k_masks: 5,
            k_fps: 64,
            tau_bert: DEFAULT_TAU_BERT,
            superpoint: SuperpointParams::default(),
            clustering: ClusteringMode::Flat,
            window: h.window,
            hilbert_bits: h.hilbert_bits,
            merge_threshold: h.merge_threshold,
            seed: s.seed,
            dense_limit: s.dense_limit,
            tau_depth: p.tau_depth,
            strict_iou_mode: false,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let read_err = |reason: String| ConfigError::Read {
            path: path.display().to_string(),
            reason,
        };
        let text = std::fs::read_to_string(path).map_err(|e| read_err(e.to_string()))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| read_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies `key=value` overrides in order. Keys are dotted paths into the
    /// JSON form (`superpoint.kf=0.1`); values are parsed as JSON and fall
    /// back to a plain string (`clustering=hierarchical`).
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let mut doc = serde_json::to_value(self).expect("config serializes");
        for o in overrides {
            let o = o.as_ref();
            let (key, raw) = o
                .split_once('=')
                .ok_or_else(|| ConfigError::BadOverride(o.to_string()))?;
            let key = key.trim();
            let value = serde_json::from_str(raw.trim())
                .unwrap_or_else(|_| Value::String(raw.trim().to_string()));
            let mut slot = &mut doc;
            for part in key.split('.') {
                slot = slot
                    .as_object_mut()
                    .and_then(|m| m.get_mut(part))
                    .ok_or_else(|| ConfigError::UnknownKey(key.to_string()))?;
            }
            *slot = value;
        }
        let cfg: Self =
            serde_json::from_value(doc).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        for (name, v) in [
            ("tau_iou", self.tau_iou),
            ("tau_sim", self.tau_sim),
            ("tau_bert", self.tau_bert),
        ] {
            if !(0.0..1.0).contains(&v) {
                return bad(format!("{name} must be in [0, 1), got {v}"));
            }
        }
        if self.top_k_masks == 0 {
            return bad("top_k_masks must be >= 1".into());
        }
        if self.k_fps == 0 {
            return bad("k_fps must be >= 1".into());
        }
        if self.superpoint.k == 0 {
            return bad("superpoint.k must be >= 1".into());
        }
        if !(self.superpoint.kf >= 0.0) {
            return bad("superpoint.kf must be >= 0".into());
        }
        if self.window.is_some_and(|w| w < 2) {
            return bad("window must be >= 2".into());
        }
        if !(1..=20).contains(&self.hilbert_bits) {
            return bad(format!("hilbert_bits must be in 1..=20, got {}", self.hilbert_bits));
        }
        if self.dense_limit == 0 {
            return bad("dense_limit must be >= 1".into());
        }
        if !(self.tau_depth >= 0.0) {
            return bad("tau_depth must be >= 0".into());
        }
        Ok(())
    }

    pub fn project_params(&self) -> ProjectParams {
        ProjectParams {
            tau_depth: self.tau_depth,
            mode: if self.strict_iou_mode {
                OverlapMode::StrictIou
            } else {
                OverlapMode::Containment
            },
        }
    }

    pub fn spectral_params(&self) -> SpectralParams {
        SpectralParams {
            seed: self.seed,
            dense_limit: self.dense_limit,
        }
    }

    pub fn hierarchical_params(&self) -> HierarchicalParams {
        HierarchicalParams {
            window: self.window,
            hilbert_bits: self.hilbert_bits,
            merge_threshold: self.merge_threshold,
        }
    }
}
