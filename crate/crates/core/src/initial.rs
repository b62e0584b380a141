//! Cauchy data `φ(v)` at scale zero.
//!
//! Everything downstream works in log-velocity `y = ln v`, so the densities here
//! are evaluated as `φ(e^y)`. Values stay densities with respect to `v`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{trapezoid, YGrid};

/// Tolerance on `∫ φ dv = 1` for data declared as a probability density.
pub const NORMALIZATION_TOL: f64 = 1e-6;

/// Minimum sample count of a gridded initial condition.
pub const MIN_GRID_POINTS: usize = 16;

/// Samples of `φ(e^y)` on a uniform grid in `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridData {
    grid: YGrid,
    samples: Vec<f64>,
    probability: bool,
}

impl GridData {
    pub fn grid(&self) -> YGrid {
        self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Linear interpolation in `y`, zero outside the grid.
    pub fn eval(&self, y: f64) -> f64 {
        let g = &self.grid;
        if !(y >= g.y_min && y <= g.y_max) {
            return 0.0;
        }
        let pos = (y - g.y_min) / g.step();
        let nearest = pos.round();
        if (pos - nearest).abs() < 1e-9 {
            return self.samples[nearest as usize];
        }
        let i = (pos.floor() as usize).min(g.n_points - 2);
        let t = pos - i as f64;
        self.samples[i] + t * (self.samples[i + 1] - self.samples[i])
    }
}

/// Initial density of velocity increments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InitialDoc", into = "InitialDoc")]
pub enum InitialCondition {
    /// A unit atom at `v0 > 0`. Propagated in closed form only.
    Dirac { v0: f64 },
    /// `weight` times the log-normal density with log-mean `mu` and
    /// log-variance `sigma2`. `weight` is 1 for probability data.
    LogNormal { mu: f64, sigma2: f64, weight: f64 },
    /// Tabulated `φ(e^y)`.
    Grid(GridData),
}

/// Serialized form of an initial condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialDoc {
    Dirac {
        v0: f64,
    },
    Lognormal {
        mu: f64,
        sigma2: f64,
        #[serde(default = "unit", skip_serializing_if = "is_unit")]
        weight: f64,
    },
    Grid {
        y_min: f64,
        y_max: f64,
        samples: Vec<f64>,
        /// When set, the samples must integrate to one against `dv`.
        #[serde(default = "yes")]
        probability: bool,
    },
}

fn unit() -> f64 {
    1.0
}

fn is_unit(w: &f64) -> bool {
    *w == 1.0
}

fn yes() -> bool {
    true
}

impl TryFrom<InitialDoc> for InitialCondition {
    type Error = Error;

    fn try_from(doc: InitialDoc) -> Result<Self> {
        match doc {
            InitialDoc::Dirac { v0 } => InitialCondition::dirac(v0),
            InitialDoc::Lognormal { mu, sigma2, weight } => {
                InitialCondition::weighted_lognormal(mu, sigma2, weight)
            }
            InitialDoc::Grid {
                y_min,
                y_max,
                samples,
                probability,
            } => {
                let grid = YGrid::new(y_min, y_max, samples.len())?;
                if probability {
                    InitialCondition::grid_density(grid, samples)
                } else {
                    InitialCondition::grid_function(grid, samples)
                }
            }
        }
    }
}

impl From<InitialCondition> for InitialDoc {
    fn from(ic: InitialCondition) -> Self {
        match ic {
            InitialCondition::Dirac { v0 } => InitialDoc::Dirac { v0 },
            InitialCondition::LogNormal { mu, sigma2, weight } => {
                InitialDoc::Lognormal { mu, sigma2, weight }
            }
            InitialCondition::Grid(g) => InitialDoc::Grid {
                y_min: g.grid.y_min,
                y_max: g.grid.y_max,
                samples: g.samples,
                probability: g.probability,
            },
        }
    }
}

impl InitialCondition {
    pub fn dirac(v0: f64) -> Result<Self> {
        if !(v0 > 0.0) || !v0.is_finite() {
            return Err(Error::Invalid(format!(
                "dirac location must be > 0, got {v0}"
            )));
        }
        Ok(InitialCondition::Dirac { v0 })
    }

    pub fn lognormal(mu: f64, sigma2: f64) -> Result<Self> {
        Self::weighted_lognormal(mu, sigma2, 1.0)
    }

    pub fn weighted_lognormal(mu: f64, sigma2: f64, weight: f64) -> Result<Self> {
        if !mu.is_finite() || !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::Invalid(format!(
                "lognormal needs finite mu and sigma2 > 0, got ({mu}, {sigma2})"
            )));
        }
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(Error::Invalid(format!(
                "lognormal weight must be >= 0, got {weight}"
            )));
        }
        Ok(InitialCondition::LogNormal { mu, sigma2, weight })
    }

    /// Gridded probability density; normalization is checked.
    pub fn grid_density(grid: YGrid, samples: Vec<f64>) -> Result<Self> {
        let data = Self::grid_data(grid, samples, true)?;
        let mass = grid_mass(&data.grid, &data.samples);
        if (mass - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Invalid(format!(
                "grid density integrates to {mass}, expected 1 within {NORMALIZATION_TOL}"
            )));
        }
        Ok(InitialCondition::Grid(data))
    }

    /// Gridded nonnegative function with no normalization requirement.
    pub fn grid_function(grid: YGrid, samples: Vec<f64>) -> Result<Self> {
        Ok(InitialCondition::Grid(Self::grid_data(
            grid, samples, false,
        )?))
    }

    fn grid_data(grid: YGrid, samples: Vec<f64>, probability: bool) -> Result<GridData> {
        if samples.len() != grid.n_points {
            return Err(Error::Invalid(format!(
                "grid has {} nodes but {} samples",
                grid.n_points,
                samples.len()
            )));
        }
        if grid.n_points < MIN_GRID_POINTS {
            return Err(Error::Invalid(format!(
                "grid initial condition needs at least {MIN_GRID_POINTS} samples"
            )));
        }
        if samples.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::Invalid(
                "grid samples must be finite and nonnegative".into(),
            ));
        }
        Ok(GridData {
            grid,
            samples,
            probability,
        })
    }

    /// Reads a two-column `y,phi` CSV. A header line is skipped if present.
    pub fn grid_from_csv(text: &str, probability: bool) -> Result<Self> {
        let mut ys = Vec::new();
        let mut vals = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (Some(a), Some(b), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(Error::Invalid(format!(
                    "line {}: expected two columns y,phi",
                    lineno + 1
                )));
            };
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(y), Ok(v)) => {
                    ys.push(y);
                    vals.push(v);
                }
                _ if ys.is_empty() => continue, // header
                _ => {
                    return Err(Error::Invalid(format!(
                        "line {}: cannot parse '{line}'",
                        lineno + 1
                    )))
                }
            }
        }
        if ys.len() < 2 {
            return Err(Error::Invalid("CSV grid has fewer than two rows".into()));
        }
        let grid = YGrid::new(ys[0], ys[ys.len() - 1], ys.len())?;
        let tol = 1e-9 * grid.step().max(1.0);
        for (i, &y) in ys.iter().enumerate() {
            if (y - grid.node(i)).abs() > tol {
                return Err(Error::Invalid(format!(
                    "CSV grid is not uniform at row {i}"
                )));
            }
        }
        if probability {
            Self::grid_density(grid, vals)
        } else {
            Self::grid_function(grid, vals)
        }
    }

    pub fn is_dirac(&self) -> bool {
        matches!(self, InitialCondition::Dirac { .. })
    }

    /// `φ(e^y)`. Dirac data has no pointwise value.
    pub fn eval_log(&self, y: f64) -> Result<f64> {
        match self {
            InitialCondition::Dirac { .. } => Err(Error::Unsupported(
                "a Dirac datum has no point values; propagate it with solve_delta".into(),
            )),
            InitialCondition::LogNormal { mu, sigma2, weight } => {
                Ok(weight * lognormal_log_density(y, *mu, *sigma2))
            }
            InitialCondition::Grid(g) => Ok(g.eval(y)),
        }
    }

    /// `∫ φ dv`.
    pub fn mass(&self) -> f64 {
        match self {
            InitialCondition::Dirac { .. } => 1.0,
            InitialCondition::LogNormal { weight, .. } => *weight,
            InitialCondition::Grid(g) => grid_mass(&g.grid, &g.samples),
        }
    }

    /// Region of `y` holding essentially all of the data, `k` standard
    /// deviations wide for log-normal data.
    pub fn log_support(&self, k: f64) -> (f64, f64) {
        match self {
            InitialCondition::Dirac { v0 } => (v0.ln(), v0.ln()),
            InitialCondition::LogNormal { mu, sigma2, .. } => {
                let s = sigma2.sqrt();
                (mu - k * s, mu + k * s)
            }
            InitialCondition::Grid(g) => (g.grid.y_min, g.grid.y_max),
        }
    }
}

/// Log-normal density in `v`, evaluated at `v = e^y`.
pub fn lognormal_log_density(y: f64, mu: f64, sigma2: f64) -> f64 {
    let d = y - mu;
    (-d * d / (2.0 * sigma2) - y).exp() / (2.0 * PI * sigma2).sqrt()
}

/// `∫ φ dv = ∫ φ(e^y) e^y dy` by the trapezoid rule.
fn grid_mass(grid: &YGrid, samples: &[f64]) -> f64 {
    let weighted: Vec<f64> = samples
        .iter()
        .enumerate()
        .map(|(i, s)| s * grid.node(i).exp())
        .collect();
    trapezoid(&weighted, grid.step())
}
