//! Detection parameters and the `key = value` configuration file.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fundamental::FundamentalDiagram;

/// Pixel adjacency used by connected-component labeling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Connectivity {
    Four,
    Eight,
}

impl TryFrom<u8> for Connectivity {
    type Error = String;

    fn try_from(value: u8) -> std::result::Result<Self, String> {
        match value {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            other => Err(format!("connectivity must be 4 or 8, got {other}")),
        }
    }
}

impl From<Connectivity> for u8 {
    fn from(c: Connectivity) -> u8 {
        match c {
            Connectivity::Four => 4,
            Connectivity::Eight => 8,
        }
    }
}

impl Connectivity {
    pub fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &[(-1, 0), (0, -1), (0, 1), (1, 0)],
            Connectivity::Eight => &[
                (-1, -1),
                (-1, 0),
                (-1, 1),
                (0, -1),
                (0, 1),
                (1, -1),
                (1, 0),
                (1, 1),
            ],
        }
    }
}

/// Parameters of the detection pipeline. Speeds are in mph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionConfig {
    /// Structuring element height, in sections.
    pub alpha1: usize,
    /// Structuring element width, in time intervals.
    pub alpha2: usize,
    /// Components with fewer cells than this are dropped.
    pub alpha3: usize,
    /// Speed-rise ratio that marks an acceleration area downstream of a ramp.
    pub lambda1: f64,
    pub theta1: f64,
    pub theta2: f64,
    /// Free-flow speed, normally the posted speed limit.
    pub u_free: f64,
    /// Threshold used when no previous congested day is known.
    pub u_pre_default: f64,
    pub connectivity: Connectivity,
    pub chen_u_max: f64,
    pub chen_delta_u_min: f64,
    pub histogram_bins: usize,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig {
            alpha1: 2,
            alpha2: 3,
            alpha3: 20,
            lambda1: 1.3,
            theta1: 0.3,
            theta2: 0.85,
            u_free: 60.0,
            u_pre_default: 45.0,
            connectivity: Connectivity::Eight,
            chen_u_max: 35.0,
            chen_delta_u_min: 15.0,
            histogram_bins: 256,
        }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.alpha1 < 1 || self.alpha2 < 1 || self.alpha3 < 1 {
            return fail("alpha1, alpha2 and alpha3 must be at least 1".into());
        }
        if !(self.theta1 > 0.0 && self.theta1 < self.theta2 && self.theta2 < 1.0) {
            return fail(format!(
                "need 0 < theta1 < theta2 < 1, got theta1={} theta2={}",
                self.theta1, self.theta2
            ));
        }
        for (name, v) in [
            ("u_free", self.u_free),
            ("u_pre_default", self.u_pre_default),
            ("chen_u_max", self.chen_u_max),
            ("lambda1", self.lambda1),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.chen_delta_u_min.is_finite() && self.chen_delta_u_min >= 0.0) {
            return fail("chen_delta_u_min must be non-negative".into());
        }
        if self.histogram_bins < 2 {
            return fail("histogram_bins must be at least 2".into());
        }
        Ok(())
    }
}

/// Everything a configuration file may set: the detection parameters plus the
/// fundamental-diagram calibration. Jam density is given per kilometre, as
/// agencies usually publish it, and converted on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub alpha1: usize,
    pub alpha2: usize,
    pub alpha3: usize,
    pub lambda1: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub u_free: f64,
    pub u_pre_default: f64,
    pub connectivity: Connectivity,
    pub chen_u_max: f64,
    pub chen_delta_u_min: f64,
    pub histogram_bins: usize,
    pub u_capacity: f64,
    pub q_capacity: f64,
    pub k_jam_per_km: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let d = DetectionConfig::default();
        RunConfig {
            alpha1: d.alpha1,
            alpha2: d.alpha2,
            alpha3: d.alpha3,
            lambda1: d.lambda1,
            theta1: d.theta1,
            theta2: d.theta2,
            u_free: d.u_free,
            u_pre_default: d.u_pre_default,
            connectivity: d.connectivity,
            chen_u_max: d.chen_u_max,
            chen_delta_u_min: d.chen_delta_u_min,
            histogram_bins: d.histogram_bins,
            u_capacity: 45.0,
            q_capacity: 2500.0,
            k_jam_per_km: 150.0,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.message().to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::InvalidConfig(msg) => Error::Malformed {
                path: path.into(),
                reason: msg,
            },
            other => other,
        })
    }

    pub fn detection(&self) -> Result<DetectionConfig> {
        let config = DetectionConfig {
            alpha1: self.alpha1,
            alpha2: self.alpha2,
            alpha3: self.alpha3,
            lambda1: self.lambda1,
            theta1: self.theta1,
            theta2: self.theta2,
            u_free: self.u_free,
            u_pre_default: self.u_pre_default,
            connectivity: self.connectivity,
            chen_u_max: self.chen_u_max,
            chen_delta_u_min: self.chen_delta_u_min,
            histogram_bins: self.histogram_bins,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn fundamental_diagram(&self) -> Result<FundamentalDiagram> {
        FundamentalDiagram::from_metric_jam_density(
            self.u_free,
            self.u_capacity,
            self.q_capacity,
            self.k_jam_per_km,
        )
    }
}
