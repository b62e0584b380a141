//! Cross-checks of the propagator against independent computations.

mod common;

use cascade_fpe::analysis::moment_closed_form;
use cascade_fpe::montecarlo::{
    delta_cdf, ks_critical, ks_distance, ks_two_sample, sample_em, sample_exact,
};
use cascade_fpe::oracle::{fd_solve, max_relative_deviation, residual_with_noise, FdConfig};
use cascade_fpe::propagator::{solve_at, solve_grid};
use cascade_fpe::{CoefficientProfile, InitialCondition, QuadratureConfig, RateSpec, YGrid};

use common::{adaptive_simpson, random_profile, rng, scales};

fn anchor() -> CoefficientProfile {
    CoefficientProfile::constant(1.0, 0.5, 2.0).unwrap()
}

#[test]
fn integrals_match_adaptive_simpson() {
    let mut r = rng(17);
    for _ in 0..40 {
        let p = random_profile(&mut r);
        for l in scales(&mut r, p.lambda_max(), 5) {
            let ints = p.integrate(l).unwrap();
            let a = |s: f64| p.a_at(s).unwrap();
            let c = |s: f64| p.c_at(s).unwrap();
            // split at table knots so each piece is smooth
            let mut cuts = vec![0.0, l];
            for spec in [p.a_spec(), p.c_spec()] {
                if let RateSpec::Tabulated { knots } = spec {
                    cuts.extend(knots.iter().map(|k| k.0).filter(|&k| k > 0.0 && k < l));
                }
            }
            cuts.sort_by(f64::total_cmp);
            let integral = |f: &dyn Fn(f64) -> f64| {
                cuts.windows(2)
                    .map(|w| adaptive_simpson(&f, w[0], w[1], 1e-15))
                    .sum::<f64>()
            };
            let big_a = integral(&a);
            let gamma = integral(&c);
            let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * (1.0 + y.abs());
            assert!(close(ints.gamma, gamma), "{} vs {gamma}", ints.gamma);
            assert!(close(ints.beta0, big_a + 2.0 * gamma));
            assert!(close(ints.beta1, big_a + 3.0 * gamma));
        }
    }
}

#[test]
fn polynomial_integral_example() {
    let p = CoefficientProfile::new(
        RateSpec::Polynomial {
            coefficients: vec![1.0, 1.0],
        },
        RateSpec::Constant { value: 0.5 },
        2.0,
    )
    .unwrap();
    let ints = p.integrate(1.0).unwrap();
    assert!((ints.beta0 - 2.5).abs() < 1e-15);
    assert!((ints.beta1 - 3.0).abs() < 1e-15);
    assert!((ints.gamma - 0.5).abs() < 1e-15);
    let b0 = adaptive_simpson(&|s: f64| p.b0_at(s).unwrap(), 0.0, 1.0, 1e-14);
    assert!((b0 - 2.5).abs() < 1e-13);
}

fn fd_deviation(n_y: usize, n_steps: usize) -> f64 {
    let p = anchor();
    let ic = InitialCondition::lognormal(0.0, 4e-3).unwrap();
    let cfg = FdConfig::auto(&p, &ic, 1.0, n_y, n_steps).unwrap();
    let run = fd_solve(&p, &ic, 1.0, &cfg).unwrap();
    assert!(run.warnings.is_empty(), "{:?}", run.warnings);
    let exact = solve_grid(&p, &ic, 1.0, &cfg.grid(), &QuadratureConfig::default()).unwrap();
    max_relative_deviation(&exact.values, &run.field.values)
}

#[test]
fn crank_nicolson_is_second_order_in_y() {
    // many steps so the scale discretization does not pollute the estimate
    let coarse = fd_deviation(257, 8000);
    let fine = fd_deviation(513, 8000);
    let order = (coarse / fine).log2();
    assert!(order >= 1.9, "order {order} ({coarse:e} -> {fine:e})");
}

#[test]
fn crank_nicolson_is_second_order_in_lambda() {
    let coarse = fd_deviation(8193, 64);
    let fine = fd_deviation(8193, 128);
    let order = (coarse / fine).log2();
    assert!(order >= 1.9, "order {order} ({coarse:e} -> {fine:e})");
}

#[test]
fn residual_of_quadrature_solution_is_within_its_error_model() {
    let p = anchor();
    let ic = InitialCondition::lognormal(0.2, 0.3).unwrap();
    let quad = QuadratureConfig::new(64, true).unwrap();
    let l = 1.0;
    let ints = p.integrate(l).unwrap();
    let centre = 0.2 - 0.3 - ints.beta1;
    let sd = (0.3 + 2.0 * ints.gamma).sqrt();
    // quadrature error estimate around the sample points
    let probe = YGrid::new(centre - 3.5 * sd, centre + 3.5 * sd, 141).unwrap();
    let noise = solve_grid(&p, &ic, l, &probe, &quad)
        .unwrap()
        .max_error()
        .unwrap();
    let plain = QuadratureConfig::default();
    let field = |lam: f64, y: f64| solve_at(&p, &ic, lam, y, &plain);
    for k in 0..40 {
        let y = centre - 3.0 * sd + 6.0 * sd * k as f64 / 39.0;
        let r = residual_with_noise(&p, field, l, y, noise).unwrap();
        assert!(
            r.relative() < 1e-4,
            "relative residual {} at y={y}",
            r.relative()
        );
        assert!(r.residual.abs() <= r.truncation, "{r:?}");
    }
}

#[test]
fn refine_estimate_shrinks_with_order() {
    // a log-normal datum converges to rounding by order 32; a smooth
    // non-Gaussian bump keeps the estimate above it
    let p = anchor();
    let data = YGrid::new(-4.0, 4.0, 801).unwrap();
    let samples = data
        .nodes()
        .map(|y| (1.0 + y * y).recip().powi(2))
        .collect();
    let ic = InitialCondition::grid_function(data, samples).unwrap();
    let grid = YGrid::new(-5.0, 1.0, 61).unwrap();
    let estimates: Vec<f64> = [16, 32, 64]
        .iter()
        .map(|&n| {
            let q = QuadratureConfig::new(n, true).unwrap();
            solve_grid(&p, &ic, 0.3, &grid, &q)
                .unwrap()
                .max_error()
                .unwrap()
        })
        .collect();
    assert!(estimates.windows(2).all(|w| w[1] < w[0]), "{estimates:?}");
}

#[test]
fn small_scale_limit_recovers_the_data() {
    let p = anchor();
    let ic = InitialCondition::lognormal(0.0, 0.2).unwrap();
    let q = QuadratureConfig::default();
    let ys: Vec<f64> = (0..61).map(|i| -2.0 + 4.0 * i as f64 / 60.0).collect();
    let err_at = |l: f64| {
        ys.iter()
            .map(|&y| (solve_at(&p, &ic, l, y, &q).unwrap() - ic.eval_log(y).unwrap()).abs())
            .fold(0.0, f64::max)
    };
    let (e3, e4) = (err_at(1e-3), err_at(1e-4));
    // first order in λ: the generator applied to φ bounds the slope
    assert!(e3 < 10.0 * 1e-3 && e4 < 10.0 * 1e-4, "{e3} {e4}");
    assert!(e4 < 0.2 * e3);
}

#[test]
fn euler_maruyama_matches_exact_law_for_constant_rates() {
    let p = anchor();
    let n = 50_000;
    let exact = sample_exact(&p, 1.0, 1.0, n, 1).unwrap();
    for steps in [16, 64] {
        let em = sample_em(&p, 1.0, 1.0, n, steps, 2).unwrap();
        let d = ks_two_sample(&em.samples, &exact.samples);
        // two-sample critical value at 0.1%
        let crit = ks_critical(n, 1e-3) * 2.0_f64.sqrt();
        assert!(d < crit, "steps {steps}: {d} >= {crit}");
    }
}

#[test]
fn monte_carlo_low_moments_across_sweep() {
    let n = 100_000;
    for (i, (a, c, l)) in [
        (0.5, 0.5, 0.25),
        (1.0, 0.5, 1.0),
        (2.0, 1.0, 0.25),
        (1.0, 2.0, 0.25),
    ]
    .into_iter()
    .enumerate()
    {
        let p = CoefficientProfile::constant(a, c, 4.0).unwrap();
        let ens = sample_exact(&p, 1.3, l, n, 900 + i as u64).unwrap();
        let ic = InitialCondition::dirac(1.3).unwrap();
        for order in [1, 2] {
            let exact = moment_closed_form(&p, &ic, order, l).unwrap().unwrap();
            let (mean, se) = ens.moment(order);
            assert!(
                (mean - exact).abs() < 4.0 * se,
                "a={a} c={c} n={order}: {mean} vs {exact} ± {se}"
            );
        }
    }
}

#[test]
fn seeded_ks_regression_value() {
    let p = anchor();
    let ens = sample_exact(&p, 1.0, 1.0, 100_000, 42).unwrap();
    let d = ks_distance(&ens, delta_cdf(&p, 1.0, 1.0).unwrap()).unwrap();
    assert!(d < 1.95 / (1e5_f64).sqrt());
    // recorded on first run; pins the RNG stream layout
    assert_eq!(d, KS_SEED_42);
}

const KS_SEED_42: f64 = 0.003160078216146056;

/// Distribution of the KS statistic over many seeds; slow, run with
/// `cargo test --release -- --ignored`.
#[test]
#[ignore]
fn ks_statistic_is_calibrated() {
    let p = anchor();
    let n = 100_000;
    let cdf = delta_cdf(&p, 1.0, 1.0).unwrap();
    let runs = 2000;
    let scaled: Vec<f64> = (0..runs)
        .map(|s| {
            let ens = sample_exact(&p, 1.0, 1.0, n, 7_000_000 + s).unwrap();
            ks_distance(&ens, &cdf).unwrap() * (n as f64).sqrt()
        })
        .collect();
    let frac = |t: f64| scaled.iter().filter(|&&k| k > t).count() as f64 / runs as f64;
    let mean = scaled.iter().sum::<f64>() / runs as f64;
    println!(
        "mean {mean:.4}; P(>1.358) {:.4}; P(>1.628) {:.4}",
        frac(1.358),
        frac(1.628)
    );
    // Kolmogorov distribution: mean 0.8687, 5% and 1% upper quantiles
    assert!((mean - 0.8687).abs() < 0.03);
    assert!((frac(1.358) - 0.05).abs() < 0.015);
    assert!((frac(1.628) - 0.01).abs() < 0.007);
}
