use std::f64::consts::PI;
use std::path::Path;

use anyhow::{bail, Context, Result};
use lhvbell::montecarlo::{equally_spaced, SimMethod};
use lhvbell::periodic::grid_size_from_env;
use serde::{Deserialize, Serialize};

use crate::InputError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Lhv,
    Qm,
}

/// Simulation config as read from JSON. Every field can be overridden on
/// the command line; the resolved values are echoed into the outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: ModeName,
    pub pairs: u64,
    pub eta: f64,
    pub v: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angles: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_angles: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub two_channel: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accidental_rate: Option<f64>,
    #[serde(default)]
    pub method: SimMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
}

pub const DEFAULT_ANGLES: usize = 16;

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text)
            .map_err(|e| InputError(format!("config {}: {e}", path.display())).into())
    }

    /// Fill in defaults so that the echo alone reproduces the run.
    pub fn resolve(mut self) -> Result<Self> {
        let angles = match (self.angles.take(), self.n_angles) {
            (Some(_), Some(_)) => bail!(InputError("config gives both `angles` and `n_angles`".into())),
            (Some(a), None) => a,
            (None, n) => equally_spaced(n.unwrap_or(DEFAULT_ANGLES)),
        };
        self.n_angles = None;
        self.angles = Some(angles);
        if self.grid.is_none() {
            self.grid = Some(grid_size_from_env()?);
        }
        Ok(self)
    }

    pub fn angles(&self) -> &[f64] {
        self.angles.as_deref().unwrap_or(&[])
    }

    pub fn grid(&self) -> usize {
        self.grid.unwrap_or(lhvbell::periodic::DEFAULT_GRID)
    }
}

/// Parse a comma-separated angle list given on the command line.
pub fn parse_angles(raw: &str, degrees: bool) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|s| {
            let a: f64 = s
                .trim()
                .parse()
                .map_err(|_| InputError(format!("angle {s:?} is not a number")))?;
            Ok(if degrees { a * PI / 180.0 } else { a })
        })
        .collect()
}
