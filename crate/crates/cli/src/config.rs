//! Run configuration: backend pair, score field and direction, threshold
//! policy, and length limits. Loaded from a JSON file and overridable by
//! command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use binoscope_core::backend::BackendSpec;
use binoscope_core::baselines::Detector;
use binoscope_core::roc::{Direction, Method};

/// Reference classification cutoffs for a PhoGPT-4B observer/performer
/// pair, used when a run supplies neither explicit thresholds nor
/// calibration methods. Not reproducible with the built-in desk-scale
/// backend; calibrate against your own scored corpus to replace them.
pub const REFERENCE_THRESHOLDS: [(&str, f64); 3] =
    [("youden", 0.86), ("closest", 0.87), ("tpr_at_fpr", 0.70)];

/// Default FPR ceiling for the bounded-TPR selector (0.06%).
pub const DEFAULT_EPSILON: f64 = 0.0006;

pub const DEFAULT_SWEEP_BOUNDS: [usize; 9] = [0, 64, 128, 192, 256, 320, 384, 448, 512];

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observer: Option<BackendSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub performer: Option<BackendSpec>,
    /// Corpus JSONL path for `score`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
    /// JSONL key holding generated text (dataset-specific).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ai_text_key: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score_field: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    /// Explicit classification cutoffs, keyed by a free-form name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<BTreeMap<String, f64>>,
    /// Calibration methods; mutually exclusive with `thresholds`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub methods: Option<Vec<Method>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_tokens: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baselines: Option<Vec<Detector>>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let config: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.thresholds.is_some() && self.methods.is_some() {
            bail!(
                "`thresholds` and `methods` are mutually exclusive in one run: \
                 explicit cutoffs and calibration cannot both drive classification"
            );
        }
        if let Some(eps) = self.epsilon {
            if !(0.0..=1.0).contains(&eps) {
                bail!("epsilon must be in [0, 1], got {eps}");
            }
        }
        Ok(())
    }

    pub fn score_field(&self) -> &str {
        self.score_field.as_deref().unwrap_or("binoculars")
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon.unwrap_or(DEFAULT_EPSILON)
    }

    pub fn min_tokens(&self) -> usize {
        self.min_tokens.unwrap_or(50)
    }

    /// The cutoffs to evaluate with, in declaration order: explicit ones
    /// when given, otherwise the reference defaults.
    pub fn resolved_thresholds(&self) -> Vec<(String, f64)> {
        match &self.thresholds {
            Some(map) => map.iter().map(|(k, v)| (k.clone(), *v)).collect(),
            None => REFERENCE_THRESHOLDS
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
        }
    }
}

/// Parses a `name=value` threshold flag.
pub fn parse_threshold_flag(s: &str) -> Result<(String, f64)> {
    let (name, value) = s
        .split_once('=')
        .with_context(|| format!("expected name=value, got {s:?}"))?;
    let value: f64 = value
        .trim()
        .parse()
        .with_context(|| format!("threshold value in {s:?} is not a number"))?;
    let name = name.trim();
    if name.is_empty() {
        bail!("threshold name in {s:?} is empty");
    }
    Ok((name.to_string(), value))
}

/// Parses a comma-separated strictly increasing bounds list.
pub fn parse_bounds(s: &str) -> Result<Vec<usize>> {
    let bounds: Vec<usize> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .with_context(|| format!("bound {p:?} is not a non-negative integer"))
        })
        .collect::<Result<_>>()?;
    if bounds.is_empty() {
        bail!("bounds list is empty");
    }
    if bounds.windows(2).any(|w| w[1] <= w[0]) {
        bail!("bounds must be strictly increasing, got {bounds:?}");
    }
    Ok(bounds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds_and_methods_are_mutually_exclusive() {
        let mut config = RunConfig::default();
        config.thresholds = Some([("youden".to_string(), 0.86)].into_iter().collect());
        config.methods = Some(vec![Method::Youden]);
        assert!(config.validate().is_err());
        config.methods = None;
        assert!(config.validate().is_ok());
    }

    #[test]
    fn defaults_carry_the_reference_cutoffs() {
        let config = RunConfig::default();
        let resolved = config.resolved_thresholds();
        assert_eq!(resolved.len(), 3);
        assert!(resolved.contains(&("youden".to_string(), 0.86)));
        assert!(resolved.contains(&("closest".to_string(), 0.87)));
        assert!(resolved.contains(&("tpr_at_fpr".to_string(), 0.70)));
        assert_eq!(config.epsilon(), 0.0006);
    }

    #[test]
    fn threshold_flag_parsing() {
        assert_eq!(
            parse_threshold_flag("youden=0.86").unwrap(),
            ("youden".to_string(), 0.86)
        );
        assert!(parse_threshold_flag("nameonly").is_err());
        assert!(parse_threshold_flag("x=notanumber").is_err());
    }

    #[test]
    fn bounds_must_increase() {
        assert_eq!(parse_bounds("0,100,200").unwrap(), vec![0, 100, 200]);
        assert!(parse_bounds("0,100,100").is_err());
        assert!(parse_bounds("5,1").is_err());
    }
}
