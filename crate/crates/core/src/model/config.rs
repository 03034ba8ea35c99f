use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::min_resolution;

/// Hyper-parameters of the network. Channel counts are per degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub l_max: usize,
    pub m_max: usize,
    pub n_blocks: usize,
    pub d_embed: usize,
    pub d_attn_hidden: usize,
    pub n_heads: usize,
    pub d_attn_alpha: usize,
    pub d_attn_value: usize,
    pub d_ffn: usize,
    /// Points per axis of the square S² grid.
    pub grid_resolution: usize,
    pub n_radial_bases: usize,
    pub d_edge: usize,
    /// Å.
    pub cutoff: f64,
    pub max_neighbors: usize,
    pub n_species: usize,
}

impl ModelConfig {
    /// The base OC20 model.
    pub fn base() -> ModelConfig {
        ModelConfig {
            l_max: 6,
            m_max: 2,
            n_blocks: 12,
            d_embed: 128,
            d_attn_hidden: 64,
            n_heads: 8,
            d_attn_alpha: 64,
            d_attn_value: 16,
            d_ffn: 128,
            grid_resolution: 18,
            n_radial_bases: 600,
            d_edge: 128,
            cutoff: 12.0,
            max_neighbors: 20,
            n_species: 118,
        }
    }

    /// Small model for tests and audits. The grid is oversampled so that the
    /// S² activations are equivariant to about 1e-9.
    pub fn tiny() -> ModelConfig {
        ModelConfig {
            l_max: 2,
            m_max: 2,
            n_blocks: 2,
            d_embed: 16,
            d_attn_hidden: 16,
            n_heads: 2,
            d_attn_alpha: 8,
            d_attn_value: 8,
            d_ffn: 16,
            grid_resolution: 64,
            n_radial_bases: 32,
            d_edge: 16,
            cutoff: 5.0,
            max_neighbors: 12,
            n_species: 118,
        }
    }

    /// Named profile: `"base"` or `"tiny"`.
    pub fn profile(name: &str) -> Result<ModelConfig> {
        match name {
            "base" => Ok(ModelConfig::base()),
            "tiny" => Ok(ModelConfig::tiny()),
            other => Err(Error::Config(format!("unknown profile {other:?}"))),
        }
    }

    pub fn from_json(text: &str) -> Result<ModelConfig> {
        let cfg: ModelConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ModelConfig> {
        ModelConfig::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let sizes = [
            ("l_max", self.l_max),
            ("n_blocks", self.n_blocks),
            ("d_embed", self.d_embed),
            ("d_attn_hidden", self.d_attn_hidden),
            ("n_heads", self.n_heads),
            ("d_attn_alpha", self.d_attn_alpha),
            ("d_attn_value", self.d_attn_value),
            ("d_ffn", self.d_ffn),
            ("grid_resolution", self.grid_resolution),
            ("d_edge", self.d_edge),
            ("max_neighbors", self.max_neighbors),
            ("n_species", self.n_species),
        ];
        for (name, v) in sizes {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.n_radial_bases < 2 {
            return Err(Error::Config("n_radial_bases must be at least 2".into()));
        }
        if self.m_max > self.l_max {
            return Err(Error::Config(format!(
                "m_max {} exceeds l_max {}",
                self.m_max, self.l_max
            )));
        }
        if self.grid_resolution < min_resolution(self.l_max) {
            return Err(Error::Config(format!(
                "grid_resolution {} is below {} required for l_max {}",
                self.grid_resolution,
                min_resolution(self.l_max),
                self.l_max
            )));
        }
        if !(self.cutoff > 0.0 && self.cutoff.is_finite()) {
            return Err(Error::Config(format!("cutoff must be positive, got {}", self.cutoff)));
        }
        if self.n_species > 118 {
            return Err(Error::Config("n_species cannot exceed 118".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_are_valid() {
        ModelConfig::base().validate().unwrap();
        ModelConfig::tiny().validate().unwrap();
    }

    #[test]
    fn json_round_trip() {
        let cfg = ModelConfig::tiny();
        assert_eq!(ModelConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_values() {
        let mut cfg = ModelConfig::tiny();
        cfg.m_max = 3;
        assert!(cfg.validate().is_err());
        let mut cfg = ModelConfig::tiny();
        cfg.grid_resolution = 5;
        assert!(cfg.validate().is_err());
        let mut cfg = ModelConfig::tiny();
        cfg.n_heads = 0;
        assert!(cfg.validate().is_err());
        assert!(ModelConfig::from_json("{\"l_max\": 2}").is_err());
        let text = ModelConfig::tiny().to_json().replace("\"l_max\": 2", "\"l_max\": -1");
        assert!(ModelConfig::from_json(&text).is_err());
    }
}
