//! Helpers shared by the integration suites.

#![allow(dead_code)]

use cascade_fpe::{CoefficientProfile, RateSpec, YGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A positive rate of random kind on `[0, lambda_max]`.
pub fn random_rate(rng: &mut ChaCha8Rng, lambda_max: f64) -> RateSpec {
    match rng.random_range(0..3) {
        0 => RateSpec::Constant {
            value: rng.random_range(0.1..2.0),
        },
        1 => {
            let degree = rng.random_range(1..=3);
            let mut coefficients = vec![rng.random_range(0.3..2.0)];
            for k in 1..=degree {
                // keep the higher terms small enough that positivity is likely
                let bound = 0.25 / lambda_max.powi(k);
                coefficients.push(rng.random_range(-bound..bound));
            }
            RateSpec::Polynomial { coefficients }
        }
        _ => {
            let n = rng.random_range(3..12);
            let knots = (0..n)
                .map(|i| {
                    let l = lambda_max * i as f64 / (n - 1) as f64;
                    (l, rng.random_range(0.1..2.0))
                })
                .collect();
            RateSpec::Tabulated { knots }
        }
    }
}

/// Profile with independently drawn rate kinds; redraws until the positivity
/// audit accepts it.
pub fn random_profile(rng: &mut ChaCha8Rng) -> CoefficientProfile {
    loop {
        let lambda_max = rng.random_range(0.5..3.0);
        let a = random_rate(rng, lambda_max);
        let c = random_rate(rng, lambda_max);
        if let Ok(p) = CoefficientProfile::new(a, c, lambda_max) {
            return p;
        }
    }
}

/// `count` scales spread over `(0, lambda_max]`, the last one at the end.
pub fn scales(rng: &mut ChaCha8Rng, lambda_max: f64, count: usize) -> Vec<f64> {
    let mut out: Vec<f64> = (0..count - 1)
        .map(|_| rng.random_range(1e-3..1.0) * lambda_max)
        .collect();
    out.push(lambda_max);
    out
}

/// Adaptive Simpson quadrature, independent of the library's integrators.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Grid in `y` covering `centre ± width·sd` at `per_sd` nodes per standard
/// deviation.
pub fn gaussian_grid(centre: f64, sd: f64, width: f64, per_sd: f64) -> YGrid {
    let n = (2.0 * width * per_sd).ceil() as usize + 1;
    YGrid::new(centre - width * sd, centre + width * sd, n).unwrap()
}
