//! Sampling the Itô diffusion dual to the evolution equation,
//!
//! ```text
//! dv = -a(λ) v dλ + √(2 c(λ)) v dW,
//! ```
//!
//! which in log form reads `d ln v = -(a + c) dλ + √(2c) dW`. The Itô
//! correction `-c` is what makes the terminal law match the exact solution;
//! a Stratonovich reading would shift the log-mean by `γ`.
//!
//! Every sample draws from its own ChaCha stream keyed by `(seed, index)`, so
//! ensembles are bitwise identical under any thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::coefficients::CoefficientProfile;
use crate::error::{Error, Result};
use crate::grid::cumulative_trapezoid;
use crate::initial::InitialCondition;
use crate::propagator::{delta_log_moments, DensityField};

/// How terminal samples are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scheme {
    /// One Gaussian draw of `ln v` from the exact terminal law.
    Exact,
    /// Euler–Maruyama on `ln v` with left-point coefficients.
    EulerMaruyama { n_steps: usize },
}

/// Terminal velocity increments at scale `lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub lambda: f64,
    pub samples: Vec<f64>,
    pub seed: u64,
    pub scheme: Scheme,
}

impl PathEnsemble {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample mean of `vⁿ` and its standard error.
    pub fn moment(&self, n: u32) -> (f64, f64) {
        let vals: Vec<f64> = self.samples.iter().map(|v| v.powi(n as i32)).collect();
        mean_and_stderr(&vals)
    }

    /// Sample mean and variance of `ln v`.
    pub fn log_mean_var(&self) -> (f64, f64) {
        let logs: Vec<f64> = self.samples.iter().map(|v| v.ln()).collect();
        let n = logs.len() as f64;
        let mean = pairwise_sum(&logs) / n;
        let dev: Vec<f64> = logs.iter().map(|x| (x - mean) * (x - mean)).collect();
        (mean, pairwise_sum(&dev) / (n - 1.0))
    }
}

fn stream(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn check_request(v0: f64, n: usize) -> Result<()> {
    if !(v0 > 0.0) || !v0.is_finite() {
        return Err(Error::Domain(format!("v0 must be > 0, got {v0}")));
    }
    if n == 0 {
        return Err(Error::Domain("ensemble size must be >= 1".into()));
    }
    Ok(())
}

/// Draws `ln v ~ N(ln v0 + 2γ - β1, 2γ)`.
pub fn sample_exact(
    profile: &CoefficientProfile,
    v0: f64,
    lambda: f64,
    n: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    check_request(v0, n)?;
    let ints = profile.integrate(lambda)?;
    let samples = if lambda == 0.0 {
        vec![v0; n]
    } else {
        let (mean, var) = delta_log_moments(&ints, v0);
        let sd = var.sqrt();
        (0..n)
            .into_par_iter()
            .map(|i| {
                let z: f64 = StandardNormal.sample(&mut stream(seed, i));
                (mean + sd * z).exp()
            })
            .collect()
    };
    Ok(PathEnsemble {
        lambda,
        samples,
        seed,
        scheme: Scheme::Exact,
    })
}

/// Euler–Maruyama on `ln v`; coefficients are read at the start of each step.
pub fn sample_em(
    profile: &CoefficientProfile,
    v0: f64,
    lambda: f64,
    n: usize,
    n_steps: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    check_request(v0, n)?;
    profile.check_scale(lambda)?;
    if n_steps < 16 {
        return Err(Error::Domain(format!(
            "Euler-Maruyama needs n_steps >= 16, got {n_steps}"
        )));
    }
    let dl = lambda / n_steps as f64;
    let coeffs: Vec<(f64, f64)> = (0..n_steps)
        .map(|k| {
            let at = k as f64 * dl;
            let a = profile.a_at(at)?;
            let c = profile.c_at(at)?;
            Ok((-(a + c) * dl, (2.0 * c * dl).sqrt()))
        })
        .collect::<Result<_>>()?;
    let x0 = v0.ln();
    let samples = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i);
            let mut x = x0;
            for &(drift, vol) in &coeffs {
                let z: f64 = StandardNormal.sample(&mut rng);
                x += drift + vol * z;
            }
            x.exp()
        })
        .collect();
    Ok(PathEnsemble {
        lambda,
        samples,
        seed,
        scheme: Scheme::EulerMaruyama { n_steps },
    })
}

/// Samples the terminal law for Dirac or log-normal initial data.
pub fn sample_from_initial(
    profile: &CoefficientProfile,
    ic: &InitialCondition,
    lambda: f64,
    n: usize,
    scheme: Scheme,
    seed: u64,
) -> Result<PathEnsemble> {
    match (ic, scheme) {
        (InitialCondition::Dirac { v0 }, Scheme::Exact) => {
            sample_exact(profile, *v0, lambda, n, seed)
        }
        (InitialCondition::Dirac { v0 }, Scheme::EulerMaruyama { n_steps }) => {
            sample_em(profile, *v0, lambda, n, n_steps, seed)
        }
        (InitialCondition::LogNormal { mu, sigma2, weight }, _) => {
            if (weight - 1.0).abs() > 1e-12 {
                return Err(Error::Unsupported(
                    "only probability initial data can be sampled".into(),
                ));
            }
            // ln v0 ~ N(μ, σ²); the evolution then acts on every atom alike
            let unit = match scheme {
                Scheme::Exact => sample_exact(profile, 1.0, lambda, n, seed)?,
                Scheme::EulerMaruyama { n_steps } => {
                    sample_em(profile, 1.0, lambda, n, n_steps, seed)?
                }
            };
            let sd = sigma2.sqrt();
            let offset_seed = seed ^ 0x9E37_79B9_7F4A_7C15;
            let samples = unit
                .samples
                .par_iter()
                .enumerate()
                .map(|(i, v)| {
                    let z: f64 = StandardNormal.sample(&mut stream(offset_seed, i));
                    v * (mu + sd * z).exp()
                })
                .collect();
            Ok(PathEnsemble {
                samples,
                scheme,
                ..unit
            })
        }
        (InitialCondition::Grid(_), _) => Err(Error::Unsupported(
            "sampling gridded initial data is not implemented".into(),
        )),
    }
}

/// Kolmogorov–Smirnov distance between the ensemble's empirical CDF and `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(ensemble: &PathEnsemble, cdf: F) -> Result<f64> {
    if ensemble.is_empty() {
        return Err(Error::Contract("empty ensemble".into()));
    }
    let mut xs = ensemble.samples.clone();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut prev = f64::NEG_INFINITY;
    let mut d = 0.0_f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        if !(-1e-12..=1.0 + 1e-12).contains(&f) || f < prev - 1e-12 {
            return Err(Error::Contract(format!(
                "CDF is not monotone in [0, 1] on the sample range (F({x}) = {f})"
            )));
        }
        prev = f;
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        d = d.max(above).max(below);
    }
    Ok(d)
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0_f64;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic one-sample KS critical value `√(-ln(α/2)/2) / √n`.
pub fn ks_critical(n: usize, significance: f64) -> f64 {
    (-(significance / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// CDF in `v` of the delta-initialized solution.
pub fn delta_cdf(
    profile: &CoefficientProfile,
    v0: f64,
    lambda: f64,
) -> Result<impl Fn(f64) -> f64> {
    let ints = profile.integrate(lambda)?;
    if ints.gamma <= 0.0 {
        return Err(Error::DegenerateMeasure(
            "no continuous CDF at scale zero".into(),
        ));
    }
    let (mean, var) = delta_log_moments(&ints, v0);
    let sd = var.sqrt();
    Ok(move |v: f64| {
        if v <= 0.0 {
            0.0
        } else {
            0.5 * erfc(-(v.ln() - mean) / (sd * std::f64::consts::SQRT_2))
        }
    })
}

/// CDF in `v` from a density field: cumulative trapezoid of `P e^y dy`,
/// linearly interpolated in `y` and normalized by the captured mass.
pub fn field_cdf(field: &DensityField) -> impl Fn(f64) -> f64 {
    let grid = field.grid;
    let w: Vec<f64> = field
        .values
        .iter()
        .zip(grid.nodes())
        .map(|(p, y)| p.max(0.0) * y.exp())
        .collect();
    let cum = cumulative_trapezoid(&w, grid.step());
    let total = *cum.last().unwrap_or(&1.0);
    move |v: f64| {
        if v <= 0.0 {
            return 0.0;
        }
        let y = v.ln();
        if y <= grid.y_min {
            return 0.0;
        }
        if y >= grid.y_max {
            return 1.0;
        }
        let pos = (y - grid.y_min) / grid.step();
        let i = (pos.floor() as usize).min(grid.n_points - 2);
        let t = pos - i as f64;
        (cum[i] + t * (cum[i + 1] - cum[i])) / total
    }
}

/// Histogram with bins uniform in `ln v`; densities are per unit `v`.
pub fn histogram(samples: &[f64], bins: usize) -> Vec<(f64, f64)> {
    if samples.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min).ln();
    let hi = samples
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
        .ln();
    if hi <= lo {
        return vec![(lo.exp(), f64::INFINITY)];
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in samples {
        let k = (((v.ln() - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let n = samples.len() as f64;
    counts
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let a = (lo + k as f64 * width).exp();
            let b = (lo + (k + 1) as f64 * width).exp();
            ((a * b).sqrt(), c as f64 / (n * (b - a)))
        })
        .collect()
}

/// Pairwise summation; the split points depend only on the length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Mean and standard error of the mean.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    if xs.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    (mean, (var / n).sqrt())
}
