//! Independent numerical checks of the exact propagator.
//!
//! In `y = ln v` the Euler operator `v ∂v` becomes `∂y`, and the evolution
//! equation turns into the constant-in-`y` advection–diffusion–reaction problem
//!
//! ```text
//! ∂λ p = b0(λ) p + b1(λ) ∂y p + c(λ) ∂yy p,      p(λ, y) = P(λ, e^y).
//! ```
//!
//! [`residual`] plugs any candidate `P(λ, y)` into that equation with central
//! differences; [`fd_solve`] integrates it with Crank–Nicolson.

use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientProfile;
use crate::error::{Error, Result};
use crate::grid::{trapezoid, YGrid};
use crate::initial::InitialCondition;
use crate::propagator::{lognormal_solution_params, DensityField};

/// Spatial step of the residual stencils.
pub const RESIDUAL_STEP_Y: f64 = 1e-3;
/// Scale step of the residual stencil.
pub const RESIDUAL_STEP_LAMBDA: f64 = 1e-4;

/// Boundary values must stay below this fraction of the peak.
pub const BOUNDARY_RATIO_LIMIT: f64 = 1e-12;
/// Largest tolerated Crank–Nicolson undershoot, relative to the peak.
pub const UNDERSHOOT_LIMIT: f64 = 1e-10;

/// Standard deviations of margin used when sizing a domain automatically.
const AUTO_MARGIN_SDS: f64 = 8.0;

/// Residual of the log-coordinate equation at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub lambda: f64,
    pub y: f64,
    /// `∂λP - b0 P - b1 ∂yP - c ∂yyP`.
    pub residual: f64,
    /// Largest magnitude among the four terms.
    pub scale: f64,
    /// Expected floor from stencil truncation and rounding of an exact field.
    pub truncation: f64,
}

impl Residual {
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.residual.abs()
        } else {
            self.residual.abs() / self.scale
        }
    }
}

/// Evaluates the equation residual of `field(λ, y)` at an interior point.
pub fn residual<F>(profile: &CoefficientProfile, field: F, lambda: f64, y: f64) -> Result<Residual>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    residual_with_noise(profile, field, lambda, y, 0.0)
}

/// As [`residual`], with `noise` the absolute error of each field evaluation
/// (e.g. a quadrature error estimate) folded into the truncation model.
pub fn residual_with_noise<F>(
    profile: &CoefficientProfile,
    field: F,
    lambda: f64,
    y: f64,
    noise: f64,
) -> Result<Residual>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    let hl = RESIDUAL_STEP_LAMBDA;
    let hy = RESIDUAL_STEP_Y;
    profile.check_scale(lambda - hl)?;
    profile.check_scale(lambda + hl)?;

    let f = |k: i32| field(lambda, y + f64::from(k) * hy);
    let (m2, m1, p0, p1, p2) = (f(-2)?, f(-1)?, f(0)?, f(1)?, f(2)?);
    let dy = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * hy);
    let dyy = (-p2 + 16.0 * p1 - 30.0 * p0 + 16.0 * m1 - m2) / (12.0 * hy * hy);
    let dl = (field(lambda + hl, y)? - field(lambda - hl, y)?) / (2.0 * hl);

    let b0 = profile.b0_at(lambda)?;
    let b1 = profile.b1_at(lambda)?;
    let c = profile.c_at(lambda)?;

    let terms = [dl, b0 * p0, b1 * dy, c * dyy];
    let scale = terms.iter().fold(0.0_f64, |m, t| m.max(t.abs()));
    let r = dl - b0 * p0 - b1 * dy - c * dyy;

    // truncation: h²/6 |P_λλλ| + |b1| h⁴/30 |P⁽⁵⁾| + c h⁴/90 |P⁽⁶⁾|, derivatives
    // taken on coarser stencils
    let big_l = (1e-2_f64)
        .min(lambda / 4.0)
        .min((profile.lambda_max() - lambda) / 4.0);
    let d3l = if big_l > hl {
        let g = |k: f64| field(lambda + k * big_l, y);
        (g(2.0)? - 2.0 * g(1.0)? + 2.0 * g(-1.0)? - g(-2.0)?) / (2.0 * big_l.powi(3))
    } else {
        0.0
    };
    let big_y = 5e-2;
    let s: Vec<f64> = (-3..=3)
        .map(|k| field(lambda, y + f64::from(k) * big_y))
        .collect::<Result<_>>()?;
    let d5 =
        (s[6] - 4.0 * s[5] + 5.0 * s[4] - 5.0 * s[2] + 4.0 * s[1] - s[0]) / (2.0 * big_y.powi(5));
    let d6 = (s[6] - 6.0 * s[5] + 15.0 * s[4] - 20.0 * s[3] + 15.0 * s[2] - 6.0 * s[1] + s[0])
        / big_y.powi(6);
    let trunc = hl * hl / 6.0 * d3l.abs()
        + b1.abs() * hy.powi(4) / 30.0 * d5.abs()
        + c * hy.powi(4) / 90.0 * d6.abs();
    let amplification = 1.0 / hl + b0.abs() + b1.abs() * 1.5 / hy + c * 64.0 / (12.0 * hy * hy);
    let eval_noise = noise + 8.0 * f64::EPSILON * p0.abs().max(m2.abs()).max(p2.abs());
    let truncation = 4.0 * (trunc + amplification * eval_noise);

    Ok(Residual {
        lambda,
        y,
        residual: r,
        scale,
        truncation,
    })
}

/// Grid and step count for the Crank–Nicolson oracle. Both ends carry
/// homogeneous Dirichlet data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FdDoc", into = "FdDoc")]
pub struct FdConfig {
    y_min: f64,
    y_max: f64,
    n_y: usize,
    n_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdDoc {
    pub y_min: f64,
    pub y_max: f64,
    pub n_y: usize,
    pub n_steps: usize,
}

impl TryFrom<FdDoc> for FdConfig {
    type Error = Error;

    fn try_from(d: FdDoc) -> Result<Self> {
        FdConfig::new(d.y_min, d.y_max, d.n_y, d.n_steps)
    }
}

impl From<FdConfig> for FdDoc {
    fn from(c: FdConfig) -> Self {
        FdDoc {
            y_min: c.y_min,
            y_max: c.y_max,
            n_y: c.n_y,
            n_steps: c.n_steps,
        }
    }
}

impl FdConfig {
    pub fn new(y_min: f64, y_max: f64, n_y: usize, n_steps: usize) -> Result<Self> {
        if n_y < 64 || n_steps < 64 {
            return Err(Error::Invalid(format!(
                "finite-difference run needs n_y >= 64 and n_steps >= 64, got ({n_y}, {n_steps})"
            )));
        }
        YGrid::new(y_min, y_max, n_y)?;
        Ok(FdConfig {
            y_min,
            y_max,
            n_y,
            n_steps,
        })
    }

    /// Sizes the domain so the exact solution is negligible at both ends from
    /// scale zero up to `lambda`.
    pub fn auto(
        profile: &CoefficientProfile,
        ic: &InitialCondition,
        lambda: f64,
        n_y: usize,
        n_steps: usize,
    ) -> Result<Self> {
        let ints = profile.integrate(lambda)?;
        let k = AUTO_MARGIN_SDS;
        let (lo, hi) = match ic {
            InitialCondition::Dirac { v0 } => {
                let (c1, var1) = lognormal_solution_params(&ints, v0.ln(), 0.0);
                let s1 = var1.sqrt();
                (
                    (v0.ln() - 0.5).min(c1 - k * s1),
                    (v0.ln() + 0.5).max(c1 + k * s1),
                )
            }
            InitialCondition::LogNormal { mu, sigma2, .. } => {
                let s0 = sigma2.sqrt();
                let c0 = mu - sigma2;
                let (c1, var1) = lognormal_solution_params(&ints, *mu, *sigma2);
                let s1 = var1.sqrt();
                (
                    (c0 - k * s0).min(c1 - k * s1),
                    (c0 + k * s0).max(c1 + k * s1),
                )
            }
            InitialCondition::Grid(g) => {
                let grid = g.grid();
                let sd = (2.0 * ints.gamma).sqrt();
                (
                    grid.y_min.min(grid.y_min - ints.beta1 - k * sd),
                    grid.y_max.max(grid.y_max - ints.beta1 + k * sd),
                )
            }
        };
        FdConfig::new(lo, hi, n_y, n_steps)
    }

    pub fn grid(&self) -> YGrid {
        YGrid::new(self.y_min, self.y_max, self.n_y).expect("validated")
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    /// Same domain, both steps divided by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        FdConfig {
            n_y: (self.n_y - 1) * factor + 1,
            n_steps: self.n_steps * factor,
            ..*self
        }
    }

    /// Narrow log-normal standing in for an atom at `v0`: log-variance
    /// `4 h²` with `h` the grid spacing.
    pub fn dirac_stand_in(&self, v0: f64) -> Result<InitialCondition> {
        let h = self.grid().step();
        InitialCondition::lognormal(v0.ln(), 4.0 * h * h)
    }
}

/// Result of a Crank–Nicolson run together with its audits.
#[derive(Debug, Clone, PartialEq)]
pub struct FdRun {
    pub field: DensityField,
    pub mass_initial: f64,
    pub mass_final: f64,
    /// Largest of the two near-boundary values divided by the peak.
    pub boundary_ratio: f64,
    /// Most negative value divided by the peak (zero when nonnegative).
    pub undershoot: f64,
    pub warnings: Vec<String>,
}

impl FdRun {
    pub fn mass_drift(&self) -> f64 {
        self.mass_final - self.mass_initial
    }
}

/// Crank–Nicolson integration from scale zero to `lambda`, coefficients
/// frozen at each step's midpoint.
pub fn fd_solve(
    profile: &CoefficientProfile,
    ic: &InitialCondition,
    lambda: f64,
    cfg: &FdConfig,
) -> Result<FdRun> {
    profile.check_scale(lambda)?;
    if ic.is_dirac() {
        return Err(Error::Unsupported(
            "an atom is not representable on a grid; use FdConfig::dirac_stand_in".into(),
        ));
    }
    let grid = cfg.grid();
    let n = grid.n_points;
    let h = grid.step();
    let dl = lambda / cfg.n_steps as f64;

    let mut p: Vec<f64> = grid
        .nodes()
        .map(|y| ic.eval_log(y))
        .collect::<Result<_>>()?;
    p[0] = 0.0;
    p[n - 1] = 0.0;
    let mass_initial = mass_of(&grid, &p);

    let m = n - 2;
    let mut rhs = vec![0.0; m];
    let mut sub = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut sup = vec![0.0; m];
    let mut scratch = vec![0.0; m];

    if lambda > 0.0 {
        for k in 0..cfg.n_steps {
            let mid = (k as f64 + 0.5) * dl;
            let b0 = profile.b0_at(mid)?;
            let b1 = profile.b1_at(mid)?;
            let c = profile.c_at(mid)?;
            let lo = c / (h * h) - b1 / (2.0 * h);
            let up = c / (h * h) + b1 / (2.0 * h);
            let di = b0 - 2.0 * c / (h * h);
            let half = 0.5 * dl;
            for j in 0..m {
                let (pm, p0, pp) = (p[j], p[j + 1], p[j + 2]);
                rhs[j] = p0 + half * (lo * pm + di * p0 + up * pp);
                sub[j] = -half * lo;
                diag[j] = 1.0 - half * di;
                sup[j] = -half * up;
            }
            thomas(&sub, &diag, &sup, &mut rhs, &mut scratch);
            p[1..=m].copy_from_slice(&rhs);
        }
    }

    let peak = p.iter().fold(0.0_f64, |a, &b| a.max(b));
    let most_negative = p.iter().fold(0.0_f64, |a, &b| a.min(b));
    let undershoot = if peak > 0.0 {
        -most_negative / peak
    } else {
        0.0
    };
    if undershoot > UNDERSHOOT_LIMIT {
        return Err(Error::MassAudit(format!(
            "Crank-Nicolson undershoot {undershoot:e} of the peak exceeds {UNDERSHOOT_LIMIT:e}"
        )));
    }
    let boundary_ratio = if peak > 0.0 {
        p[1].abs().max(p[n - 2].abs()) / peak
    } else {
        0.0
    };
    let mut warnings = Vec::new();
    if boundary_ratio >= BOUNDARY_RATIO_LIMIT {
        warnings.push(format!(
            "boundary values reach {boundary_ratio:e} of the peak (limit {BOUNDARY_RATIO_LIMIT:e}); widen the domain"
        ));
    }
    let mass_final = mass_of(&grid, &p);
    Ok(FdRun {
        field: DensityField {
            lambda,
            grid,
            values: p,
            error: None,
        },
        mass_initial,
        mass_final,
        boundary_ratio,
        undershoot,
        warnings,
    })
}

fn mass_of(grid: &YGrid, p: &[f64]) -> f64 {
    let w: Vec<f64> = p
        .iter()
        .zip(grid.nodes())
        .map(|(v, y)| v * y.exp())
        .collect();
    trapezoid(&w, grid.step())
}

/// Solves a tridiagonal system in place; `rhs` receives the solution.
fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64], c_prime: &mut [f64]) {
    let n = rhs.len();
    c_prime[0] = sup[0] / diag[0];
    rhs[0] /= diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i] * c_prime[i - 1];
        c_prime[i] = sup[i] / denom;
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c_prime[i] * rhs[i + 1];
    }
}

/// Largest pointwise deviation between two fields on the same grid, divided by
/// the peak of `reference`.
pub fn max_relative_deviation(reference: &[f64], candidate: &[f64]) -> f64 {
    let peak = reference.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    let dev = reference
        .iter()
        .zip(candidate)
        .fold(0.0_f64, |a, (r, c)| a.max((r - c).abs()));
    dev / peak
}
