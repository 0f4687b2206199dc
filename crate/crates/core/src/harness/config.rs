use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detection::DEFAULT_CONFIDENCE_GATE;
use crate::error::{Error, Result};
use crate::imaging::{RefineConfig, ThresholdConfig};
use crate::metrics::NoDecisionPolicy;
use crate::saliency::SaliencyBandConfig;

/// Every tunable used by an evaluation run. Reports echo it verbatim.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Hue bands used when ground-truth masks are derived from the image.
    pub threshold: ThresholdConfig,
    /// Optional clean-up applied to derived ground-truth masks.
    pub refine: Option<RefineConfig>,
    pub saliency: SaliencyBandConfig,
    pub confidence_gate: f64,
    /// Smallest 8-connected blob that counts as an attention region.
    pub attention_min_area: usize,
    /// Policy behind the headline classification numbers.
    pub headline_policy: NoDecisionPolicy,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            threshold: ThresholdConfig::default(),
            refine: None,
            saliency: SaliencyBandConfig::default(),
            confidence_gate: DEFAULT_CONFIDENCE_GATE,
            attention_min_area: 16,
            headline_policy: NoDecisionPolicy::AsError,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        self.threshold.validate()?;
        self.saliency.validate()?;
        if !(0.0..=1.0).contains(&self.confidence_gate) {
            return Err(Error::InvalidConfig(format!(
                "confidence_gate = {} is outside [0, 1]",
                self.confidence_gate
            )));
        }
        if self.attention_min_area == 0 {
            return Err(Error::InvalidConfig("attention_min_area must be >= 1".into()));
        }
        if let Some(r) = &self.refine {
            if r.radius == 0 {
                return Err(Error::InvalidConfig("refine.radius must be >= 1".into()));
            }
        }
        Ok(())
    }

    /// Reads a JSON config. A JSON report is accepted too, in which case its
    /// echoed `config` object is used, so a run can be replayed from its report.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let parse_err = |e: serde_json::Error| Error::Parse {
            file: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        };
        let mut value: serde_json::Value = serde_json::from_str(&text).map_err(parse_err)?;
        if let Some(inner) = value.get_mut("config").filter(|_| value_is_report(&text)) {
            value = inner.take();
        }
        let cfg: EvalConfig = serde_json::from_value(value).map_err(parse_err)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn value_is_report(text: &str) -> bool {
    text.contains("\"report_kind\"")
}
