//! Moments of the evolved density and structure-function scaling exponents.
//!
//! For Dirac data the exact solution is log-normal, so
//!
//! ```text
//! ⟨vⁿ⟩(λ) = v0ⁿ exp(n (2γ - β1) + n² γ).
//! ```
//!
//! The evolution acts on every atom of general data in the same way, so the
//! same factor multiplies the initial moments of any datum. With constant rates
//! the exponent is linear in `λ` and `⟨vⁿ⟩ ∝ e^{-ζ_n λ}` with
//! `ζ_n = n (a + c) - n² c`. The sign convention follows `λ` growing toward
//! small scales; `ζ_n` is concave in `n`, the multiscaling signature.

use crate::coefficients::{CoefficientProfile, IntegratedCoefficients};
use crate::error::{Error, Result};
use crate::grid::YGrid;
use crate::initial::InitialCondition;
use crate::propagator::{lognormal_solution_params, propagate_grid, QuadratureConfig};

/// Highest supported moment order; `e^{n² γ}` tails outgrow any fixed grid.
pub const MAX_MOMENT_ORDER: u32 = 8;

/// The integrand must fall below this fraction of its peak at both ends.
pub const MOMENT_EDGE_RATIO: f64 = 1e-12;

const MAX_GRID_POINTS: usize = 400_001;
const MAX_WIDENINGS: usize = 16;

/// Growth factor `exp(n (2γ - β1) + n² γ)` applied to the initial n-th moment.
pub fn moment_factor(ints: &IntegratedCoefficients, n: u32) -> f64 {
    let n = f64::from(n);
    (n * (2.0 * ints.gamma - ints.beta1) + n * n * ints.gamma).exp()
}

fn check_order(n: u32) -> Result<()> {
    if n > MAX_MOMENT_ORDER {
        return Err(Error::Domain(format!(
            "moment order {n} exceeds the supported maximum {MAX_MOMENT_ORDER}"
        )));
    }
    Ok(())
}

/// Closed-form `⟨vⁿ⟩(λ)` when the initial moments are known analytically
/// (Dirac and log-normal data).
pub fn moment_closed_form(
    profile: &CoefficientProfile,
    ic: &InitialCondition,
    n: u32,
    lambda: f64,
) -> Result<Option<f64>> {
    check_order(n)?;
    let ints = profile.integrate(lambda)?;
    let nf = f64::from(n);
    let initial = match ic {
        InitialCondition::Dirac { v0 } => v0.powi(n as i32),
        InitialCondition::LogNormal { mu, sigma2, weight } => {
            weight * (nf * mu + 0.5 * nf * nf * sigma2).exp()
        }
        InitialCondition::Grid(_) => return Ok(None),
    };
    Ok(Some(initial * moment_factor(&ints, n)))
}

/// `⟨vⁿ⟩(λ)`: closed form for Dirac data, grid quadrature otherwise.
pub fn moment(
    profile: &CoefficientProfile,
    ic: &InitialCondition,
    n: u32,
    lambda: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    check_order(n)?;
    if ic.is_dirac() {
        return Ok(moment_closed_form(profile, ic, n, lambda)?.expect("dirac"));
    }
    moment_by_quadrature(profile, ic, n, lambda, quad)
}

/// Trapezoid quadrature of `vⁿ P(λ, v)` on a grid widened until the integrand
/// is negligible at both ends.
pub fn moment_by_quadrature(
    profile: &CoefficientProfile,
    ic: &InitialCondition,
    n: u32,
    lambda: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    check_order(n)?;
    let ints = profile.integrate(lambda)?;
    if ic.is_dirac() && ints.gamma == 0.0 {
        return Err(Error::DegenerateMeasure(
            "moments of an atom at scale zero have no quadrature; use the closed form".into(),
        ));
    }
    let nf = f64::from(n);
    // log-space centre/spread of vⁿ P e^y
    let (centre, sd, step) = match ic {
        InitialCondition::Dirac { v0 } => {
            let (c, var) = lognormal_solution_params(&ints, v0.ln(), 0.0);
            (c + (nf + 1.0) * var, var.sqrt(), var.sqrt() / 10.0)
        }
        InitialCondition::LogNormal { mu, sigma2, .. } => {
            let (c, var) = lognormal_solution_params(&ints, *mu, *sigma2);
            (c + (nf + 1.0) * var, var.sqrt(), var.sqrt() / 10.0)
        }
        InitialCondition::Grid(g) => {
            let grid = g.grid();
            let mid = 0.5 * (grid.y_min + grid.y_max) - ints.beta1;
            let half = 0.5 * (grid.y_max - grid.y_min);
            let var = 2.0 * ints.gamma;
            let h = if var > 0.0 {
                grid.step().min(var.sqrt() / 10.0)
            } else {
                grid.step()
            };
            (mid + (nf + 1.0) * var, half + var.sqrt(), 0.5 * h)
        }
    };
    let mut lo = centre - 8.0 * sd;
    let mut hi = centre + 8.0 * sd;
    for _ in 0..MAX_WIDENINGS {
        let n_points = (((hi - lo) / step).ceil() as usize + 1).max(65);
        if n_points > MAX_GRID_POINTS {
            break;
        }
        let grid = YGrid::new(lo, hi, n_points)?;
        let field = propagate_grid(&ints, ic, &grid, &quad.with_refine(false))?;
        let integrand: Vec<f64> = field
            .values
            .iter()
            .zip(grid.nodes())
            .map(|(p, y)| p * ((nf + 1.0) * y).exp())
            .collect();
        let peak = integrand.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
        if peak == 0.0 {
            return Err(Error::Range(
                "moment integrand vanishes on the search grid".into(),
            ));
        }
        let left = integrand[0].abs() / peak >= MOMENT_EDGE_RATIO;
        let right = integrand[n_points - 1].abs() / peak >= MOMENT_EDGE_RATIO;
        if !left && !right {
            return Ok(field.moment(n));
        }
        let width = hi - lo;
        if left {
            lo -= 0.5 * width;
        }
        if right {
            hi += 0.5 * width;
        }
    }
    Err(Error::Range(format!(
        "could not size a grid capturing the order-{n} moment integrand"
    )))
}

/// `ζ_n = n (a + c) - n² c` for constant rates.
pub fn scaling_exponents(a: f64, c: f64, orders: &[u32]) -> Result<Vec<f64>> {
    if !(a > 0.0) || !(c > 0.0) || !a.is_finite() || !c.is_finite() {
        return Err(Error::Domain(format!(
            "scaling exponents need a > 0 and c > 0, got ({a}, {c})"
        )));
    }
    Ok(orders
        .iter()
        .map(|&n| {
            let n = f64::from(n);
            n * (a + c) - n * n * c
        })
        .collect())
}

/// Least-squares line through `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute residual.
    pub max_residual: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Domain("line fit needs >= 2 paired points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("line fit needs distinct abscissae".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).abs())
        .fold(0.0, f64::max);
    Ok(LineFit {
        slope,
        intercept,
        max_residual,
    })
}

/// Fits `ln ⟨vⁿ⟩` against `λ`; the slope estimates `-ζ_n`.
pub fn fit_log_moment_slope<M>(lambdas: &[f64], moment_at: M) -> Result<LineFit>
where
    M: Fn(f64) -> Result<f64>,
{
    let logs = lambdas
        .iter()
        .map(|&l| moment_at(l).map(f64::ln))
        .collect::<Result<Vec<_>>>()?;
    fit_line(lambdas, &logs)
}
