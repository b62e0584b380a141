//! Scale-dependent drift and diffusion rates.
//!
//! The cascade is driven by two positive rates `a(λ)` and `c(λ)` that enter the
//! Kramers–Moyal coefficients as
//!
//! ```text
//! D1(λ, v) = -a(λ) v        D2(λ, v) = c(λ) v²
//! ```
//!
//! Expanding the Fokker–Planck operator in Euler operators `v ∂v` gives the
//! rates `b0 = a + 2c` and `b1 = a + 3c`, whose integrals from zero
//! (`β0`, `β1`, together with `γ = ∫ c`) are all the propagator needs.
//!
//! `λ` is confined to a declared interval `[0, λ_max]`; tabulated rates have no
//! meaning outside their knots.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of interior samples used for the positivity audit.
const POSITIVITY_SAMPLES: usize = 1000;

/// How one of the two rates depends on scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateSpec {
    Constant {
        value: f64,
    },
    /// Coefficients in ascending degree: `c0 + c1 λ + c2 λ² + ...`.
    Polynomial {
        coefficients: Vec<f64>,
    },
    /// `(λ, value)` knots, strictly increasing in `λ`, linearly interpolated.
    Tabulated {
        knots: Vec<(f64, f64)>,
    },
}

impl RateSpec {
    fn eval(&self, lambda: f64) -> f64 {
        match self {
            RateSpec::Constant { value } => *value,
            RateSpec::Polynomial { coefficients } => coefficients
                .iter()
                .rev()
                .fold(0.0, |acc, &c| acc * lambda + c),
            RateSpec::Tabulated { knots } => {
                let i = segment_index(knots, lambda);
                let (x0, y0) = knots[i];
                let (x1, y1) = knots[i + 1];
                let t = (lambda - x0) / (x1 - x0);
                y0 + t * (y1 - y0)
            }
        }
    }

    /// Points where a polynomial of degree <= 3 may attain an interior minimum.
    fn stationary_points(&self) -> Vec<f64> {
        let RateSpec::Polynomial { coefficients } = self else {
            return Vec::new();
        };
        let deriv: Vec<f64> = coefficients
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| k as f64 * c)
            .collect();
        match deriv.len() {
            2 if deriv[1] != 0.0 => vec![-deriv[0] / deriv[1]],
            3 => {
                let (c0, c1, c2) = (deriv[0], deriv[1], deriv[2]);
                if c2 == 0.0 {
                    if c1 != 0.0 {
                        vec![-c0 / c1]
                    } else {
                        Vec::new()
                    }
                } else {
                    let disc = c1 * c1 - 4.0 * c2 * c0;
                    if disc < 0.0 {
                        Vec::new()
                    } else {
                        let sq = disc.sqrt();
                        vec![(-c1 - sq) / (2.0 * c2), (-c1 + sq) / (2.0 * c2)]
                    }
                }
            }
            _ => Vec::new(),
        }
    }
}

fn segment_index(knots: &[(f64, f64)], lambda: f64) -> usize {
    // last knot index whose λ <= lambda, clamped to a valid segment start
    let idx = knots.partition_point(|&(x, _)| x <= lambda);
    idx.saturating_sub(1).min(knots.len() - 2)
}

/// A validated rate with its antiderivative cached for tabulated data.
#[derive(Debug, Clone, PartialEq)]
struct Rate {
    spec: RateSpec,
    /// Cumulative trapezoid integral from the first knot to each knot.
    cumulative: Vec<f64>,
}

impl Rate {
    fn new(name: &str, spec: RateSpec, lambda_max: f64) -> Result<Self> {
        let cumulative = match &spec {
            RateSpec::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::Invalid(format!("{name}: constant must be finite")));
                }
                Vec::new()
            }
            RateSpec::Polynomial { coefficients } => {
                if coefficients.is_empty() {
                    return Err(Error::Invalid(format!("{name}: empty polynomial")));
                }
                if coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Invalid(format!(
                        "{name}: polynomial coefficients must be finite"
                    )));
                }
                Vec::new()
            }
            RateSpec::Tabulated { knots } => {
                if knots.len() < 2 {
                    return Err(Error::Invalid(format!("{name}: need at least two knots")));
                }
                if knots.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
                    return Err(Error::Invalid(format!("{name}: knots must be finite")));
                }
                if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::Invalid(format!(
                        "{name}: knots must be strictly increasing in scale"
                    )));
                }
                if knots[0].0 > 0.0 || knots[knots.len() - 1].0 < lambda_max {
                    return Err(Error::Invalid(format!(
                        "{name}: knots [{}, {}] do not cover [0, {lambda_max}]",
                        knots[0].0,
                        knots[knots.len() - 1].0
                    )));
                }
                let mut cum = Vec::with_capacity(knots.len());
                let mut acc = 0.0;
                cum.push(0.0);
                for w in knots.windows(2) {
                    acc += 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1);
                    cum.push(acc);
                }
                cum
            }
        };
        let rate = Rate { spec, cumulative };
        rate.check_positive(name, lambda_max)?;
        Ok(rate)
    }

    fn check_positive(&self, name: &str, lambda_max: f64) -> Result<()> {
        let mut probes: Vec<f64> = (0..=POSITIVITY_SAMPLES)
            .map(|i| lambda_max * i as f64 / POSITIVITY_SAMPLES as f64)
            .collect();
        match &self.spec {
            RateSpec::Tabulated { knots } => probes.extend(
                knots
                    .iter()
                    .map(|&(x, _)| x)
                    .filter(|&x| (0.0..=lambda_max).contains(&x)),
            ),
            RateSpec::Polynomial { coefficients } if coefficients.len() <= 4 => probes.extend(
                self.spec
                    .stationary_points()
                    .into_iter()
                    .filter(|&x| (0.0..=lambda_max).contains(&x)),
            ),
            _ => {}
        }
        for &x in &probes {
            let v = self.spec.eval(x);
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Invalid(format!(
                    "{name}({x}) = {v}; rates must be strictly positive on [0, {lambda_max}]"
                )));
            }
        }
        Ok(())
    }

    /// Antiderivative anchored at the start of the table (or at zero).
    fn primitive(&self, lambda: f64) -> f64 {
        match &self.spec {
            RateSpec::Constant { value } => value * lambda,
            RateSpec::Polynomial { coefficients } => {
                coefficients
                    .iter()
                    .enumerate()
                    .rev()
                    .fold(0.0, |acc, (k, &c)| acc * lambda + c / (k + 1) as f64)
                    * lambda
            }
            RateSpec::Tabulated { knots } => {
                let i = segment_index(knots, lambda);
                let x0 = knots[i].0;
                self.cumulative[i] + 0.5 * (lambda - x0) * (knots[i].1 + self.spec.eval(lambda))
            }
        }
    }

    fn integral(&self, from: f64, to: f64) -> f64 {
        self.primitive(to) - self.primitive(from)
    }
}

/// The pair of rates `a(λ)`, `c(λ)` on `[0, λ_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileDoc", into = "ProfileDoc")]
pub struct CoefficientProfile {
    a: Rate,
    c: Rate,
    lambda_max: f64,
}

/// Serialized form of a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileDoc {
    pub a: RateSpec,
    pub c: RateSpec,
    pub lambda_max: f64,
}

impl TryFrom<ProfileDoc> for CoefficientProfile {
    type Error = Error;

    fn try_from(doc: ProfileDoc) -> Result<Self> {
        CoefficientProfile::new(doc.a, doc.c, doc.lambda_max)
    }
}

impl From<CoefficientProfile> for ProfileDoc {
    fn from(p: CoefficientProfile) -> Self {
        ProfileDoc {
            a: p.a.spec,
            c: p.c.spec,
            lambda_max: p.lambda_max,
        }
    }
}

/// `β0`, `β1` and `γ` integrated over a scale interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratedCoefficients {
    pub beta0: f64,
    pub beta1: f64,
    pub gamma: f64,
    /// Upper end of the integration interval.
    pub lambda: f64,
}

impl IntegratedCoefficients {
    /// `β0 - β1 + γ`; zero up to rounding for every profile.
    pub fn normalization_defect(&self) -> f64 {
        self.beta0 - self.beta1 + self.gamma
    }
}

impl CoefficientProfile {
    pub fn new(a: RateSpec, c: RateSpec, lambda_max: f64) -> Result<Self> {
        if !(lambda_max > 0.0) || !lambda_max.is_finite() {
            return Err(Error::Invalid(format!(
                "lambda_max must be positive and finite, got {lambda_max}"
            )));
        }
        Ok(CoefficientProfile {
            a: Rate::new("a", a, lambda_max)?,
            c: Rate::new("c", c, lambda_max)?,
            lambda_max,
        })
    }

    /// Constant rates, the setting in which moments scale as pure exponentials.
    pub fn constant(a: f64, c: f64, lambda_max: f64) -> Result<Self> {
        Self::new(
            RateSpec::Constant { value: a },
            RateSpec::Constant { value: c },
            lambda_max,
        )
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn a_spec(&self) -> &RateSpec {
        &self.a.spec
    }

    pub fn c_spec(&self) -> &RateSpec {
        &self.c.spec
    }

    /// True when neither rate depends on scale.
    pub fn is_constant(&self) -> bool {
        matches!(self.a.spec, RateSpec::Constant { .. })
            && matches!(self.c.spec, RateSpec::Constant { .. })
    }

    pub fn check_scale(&self, lambda: f64) -> Result<()> {
        if lambda.is_finite() && (0.0..=self.lambda_max).contains(&lambda) {
            Ok(())
        } else {
            Err(Error::ScaleOutOfRange {
                lambda,
                lambda_max: self.lambda_max,
            })
        }
    }

    pub fn a_at(&self, lambda: f64) -> Result<f64> {
        self.check_scale(lambda)?;
        Ok(self.a.spec.eval(lambda))
    }

    pub fn c_at(&self, lambda: f64) -> Result<f64> {
        self.check_scale(lambda)?;
        Ok(self.c.spec.eval(lambda))
    }

    /// `b0 = a + 2c`, the coefficient of the identity term.
    pub fn b0_at(&self, lambda: f64) -> Result<f64> {
        self.check_scale(lambda)?;
        Ok(self.a.spec.eval(lambda) + 2.0 * self.c.spec.eval(lambda))
    }

    /// `b1 = a + 3c`, the coefficient of `v ∂v`.
    pub fn b1_at(&self, lambda: f64) -> Result<f64> {
        self.check_scale(lambda)?;
        Ok(self.a.spec.eval(lambda) + 3.0 * self.c.spec.eval(lambda))
    }

    /// Drift coefficient `D1 = -a(λ) v`.
    pub fn drift_at(&self, lambda: f64, v: f64) -> Result<f64> {
        Ok(-self.a_at(lambda)? * v)
    }

    /// Diffusion coefficient `D2 = c(λ) v²`.
    pub fn diffusion_at(&self, lambda: f64, v: f64) -> Result<f64> {
        Ok(self.c_at(lambda)? * v * v)
    }

    /// Integrals of `b0`, `b1` and `c` from zero to `lambda`.
    pub fn integrate(&self, lambda: f64) -> Result<IntegratedCoefficients> {
        self.integrate_between(0.0, lambda)
    }

    /// Integrals restarted at `from`, as needed when a solution at `from` is
    /// used as new initial data.
    pub fn integrate_between(&self, from: f64, to: f64) -> Result<IntegratedCoefficients> {
        self.check_scale(from)?;
        self.check_scale(to)?;
        if to < from {
            return Err(Error::Domain(format!(
                "integration interval reversed: [{from}, {to}]"
            )));
        }
        if to == from {
            return Ok(IntegratedCoefficients {
                beta0: 0.0,
                beta1: 0.0,
                gamma: 0.0,
                lambda: to,
            });
        }
        let int_a = self.a.integral(from, to);
        let int_c = self.c.integral(from, to);
        Ok(IntegratedCoefficients {
            beta0: int_a + 2.0 * int_c,
            beta1: int_a + 3.0 * int_c,
            gamma: int_c,
            lambda: to,
        })
    }
}
