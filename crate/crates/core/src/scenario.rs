//! JSON scenario files driving the command-line tool.
//!
//! ```json
//! {
//!   "profile": {
//!     "a": {"kind": "constant", "value": 1.0},
//!     "c": {"kind": "polynomial", "coefficients": [0.5, 0.1]},
//!     "lambda_max": 4.0
//!   },
//!   "initial": {"kind": "lognormal", "mu": 0.0, "sigma2": 0.01},
//!   "lambda": 1.0,
//!   "grid": {"y_min": -8.0, "y_max": 4.0, "n_points": 1201},
//!   "quadrature": {"gh_order": 64, "refine": false},
//!   "fd": {"n_y": 2048, "n_steps": 2000},
//!   "mc": {"n": 100000, "seed": 42, "scheme": {"kind": "exact"}},
//!   "moments": {"orders": [0, 1, 2, 3, 4]},
//!   "residual": {"n_points": 100}
//! }
//! ```
//!
//! Rates take `{"kind": "constant", "value"}`, `{"kind": "polynomial",
//! "coefficients": [c0, c1, ...]}` (ascending degree) or `{"kind":
//! "tabulated", "knots": [[λ, value], ...]}`. Initial data takes `{"kind":
//! "dirac", "v0"}`, `{"kind": "lognormal", "mu", "sigma2"}` or `{"kind":
//! "grid", "y_min", "y_max", "samples": [...]}`; a grid may instead name a
//! two-column `y,phi` CSV with `"csv": "path"`, resolved against the scenario's
//! directory. Grid data is checked for unit mass unless `"probability": false`.
//! Only `profile`, `initial`, `lambda` and `grid` are required.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::coefficients::CoefficientProfile;
use crate::error::{Error, Result};
use crate::grid::YGrid;
use crate::initial::InitialCondition;
use crate::montecarlo::Scheme;
use crate::propagator::QuadratureConfig;

/// Finite-difference oracle settings; the domain is sized automatically when
/// either bound is omitted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdSpec {
    pub n_y: usize,
    pub n_steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    pub n: usize,
    pub seed: u64,
    #[serde(default = "exact_scheme")]
    pub scheme: Scheme,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_significance")]
    pub significance: f64,
}

fn exact_scheme() -> Scheme {
    Scheme::Exact
}

fn default_bins() -> usize {
    100
}

fn default_significance() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsSpec {
    #[serde(default = "default_orders")]
    pub orders: Vec<u32>,
}

fn default_orders() -> Vec<u32> {
    vec![0, 1, 2, 3, 4]
}

impl Default for MomentsSpec {
    fn default() -> Self {
        MomentsSpec {
            orders: default_orders(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualSpec {
    #[serde(default = "default_residual_points")]
    pub n_points: usize,
}

fn default_residual_points() -> usize {
    100
}

impl Default for ResidualSpec {
    fn default() -> Self {
        ResidualSpec {
            n_points: default_residual_points(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub profile: CoefficientProfile,
    pub initial: InitialCondition,
    pub lambda: f64,
    pub grid: YGrid,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd: Option<FdSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moments: Option<MomentsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<ResidualSpec>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text, path.parent())
    }

    /// Parses and validates a scenario; CSV-backed grids are resolved
    /// relative to `base_dir`.
    pub fn from_json(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut doc: Value = serde_json::from_str(text)
            .map_err(|e| Error::Invalid(format!("scenario JSON: {e}")))?;
        inline_csv_grid(&mut doc, base_dir)?;
        let scenario: Scenario =
            serde_json::from_value(doc).map_err(|e| Error::Invalid(format!("scenario: {e}")))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.profile
            .check_scale(self.lambda)
            .map_err(|e| Error::Invalid(e.to_string()))?;
        if let Some(mc) = &self.mc {
            if mc.n == 0 {
                return Err(Error::Invalid("mc.n must be >= 1".into()));
            }
            if !(mc.significance > 0.0 && mc.significance < 1.0) {
                return Err(Error::Invalid("mc.significance must lie in (0, 1)".into()));
            }
            if mc.bins == 0 {
                return Err(Error::Invalid("mc.bins must be >= 1".into()));
            }
            if let Scheme::EulerMaruyama { n_steps } = mc.scheme {
                if n_steps < 16 {
                    return Err(Error::Invalid("Euler-Maruyama needs n_steps >= 16".into()));
                }
            }
        }
        if let Some(fd) = &self.fd {
            if fd.n_y < 64 || fd.n_steps < 64 {
                return Err(Error::Invalid(
                    "fd needs n_y >= 64 and n_steps >= 64".into(),
                ));
            }
        }
        if let Some(m) = &self.moments {
            if let Some(&n) = m
                .orders
                .iter()
                .find(|&&n| n > crate::analysis::MAX_MOMENT_ORDER)
            {
                return Err(Error::Invalid(format!(
                    "moment order {n} above the supported maximum"
                )));
            }
        }
        Ok(())
    }
}

fn inline_csv_grid(doc: &mut Value, base_dir: Option<&Path>) -> Result<()> {
    let Some(initial) = doc.get_mut("initial").and_then(Value::as_object_mut) else {
        return Ok(());
    };
    let Some(csv) = initial.remove("csv") else {
        return Ok(());
    };
    let rel = csv
        .as_str()
        .ok_or_else(|| Error::Invalid("initial.csv must be a path string".into()))?;
    let path = match base_dir {
        Some(dir) => dir.join(rel),
        None => Path::new(rel).to_path_buf(),
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
    let probability = initial
        .get("probability")
        .and_then(Value::as_bool)
        .unwrap_or(true);
    let ic = InitialCondition::grid_from_csv(&text, probability)?;
    *doc.get_mut("initial").expect("present") =
        serde_json::to_value(&ic).map_err(|e| Error::Invalid(e.to_string()))?;
    Ok(())
}
