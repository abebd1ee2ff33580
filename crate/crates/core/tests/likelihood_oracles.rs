use pef_core::inference::truncated_density;
use pef_core::special::{normal_cdf, normal_sf};
use pef_core::{
    fit_ml, loglik_gradient, normal_hazard, truncated_loglik, DesignMatrix, FitOptions,
    PefParams,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// A small design with `num_types` types, points drawn near the mean, and
/// truncation placed `shift` deviations from the average mean.
fn random_instance(num_types: usize, points: usize, shift: f64, seed: u64) -> (DesignMatrix, PefParams) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n: Vec<f64> = (0..num_types).map(|_| rng.random_range(0.5..5.0)).collect();
    let params = PefParams::new(
        rng.random_range(30.0..90.0),
        n,
        rng.random_range(1.0..12.0),
    )
    .unwrap();
    let rows: Vec<Vec<f64>> = (0..points)
        .map(|_| (0..num_types).map(|_| rng.random_range(0.0..15.0)).collect())
        .collect();
    let mean = |row: &[f64]| {
        params.intercept_c + row.iter().zip(&params.exponents).map(|(d, n)| d * n).sum::<f64>()
    };
    let avg = rows.iter().map(|r| mean(r)).sum::<f64>() / points as f64;
    let cap = avg - shift * params.sigma;
    let mut design = DesignMatrix::new(num_types, Some(cap)).unwrap();
    for row in &rows {
        // Keep only values below the cap; sample below it around the mean.
        let mu = mean(row).min(cap);
        let l = mu - rng.random::<f64>() * 2.0 * params.sigma - 1e-3;
        assert!(design.push(row, l).unwrap());
    }
    (design, params)
}

/// Parameter vector `[n_1..n_I, C, sigma]` and its inverse.
fn to_vec(p: &PefParams) -> Vec<f64> {
    let mut v = p.exponents.clone();
    v.push(p.intercept_c);
    v.push(p.sigma);
    v
}

fn from_vec(v: &[f64]) -> PefParams {
    let i = v.len() - 2;
    PefParams::new(v[i], v[..i].to_vec(), v[i + 1]).unwrap()
}

/// Central difference with one Richardson extrapolation step (error O(h^4)).
fn richardson_gradient(design: &DesignMatrix, p: &PefParams) -> Vec<f64> {
    let x = to_vec(p);
    let f = |v: &[f64]| truncated_loglik(design, &from_vec(v)).unwrap();
    (0..x.len())
        .map(|j| {
            let h = 1e-3 * x[j].abs().max(1.0);
            let central = |h: f64| {
                let mut a = x.clone();
                let mut b = x.clone();
                a[j] += h;
                b[j] -= h;
                (f(&a) - f(&b)) / (2.0 * h)
            };
            let d1 = central(h);
            let d2 = central(h / 2.0);
            (4.0 * d2 - d1) / 3.0
        })
        .collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gradient_matches_finite_differences(
        types in 1usize..6,
        points in 1usize..30,
        shift in -8.0f64..8.0,
        seed in any::<u64>(),
    ) {
        let (design, params) = random_instance(types, points, shift, seed);
        let analytic = loglik_gradient(&design, &params).unwrap().to_vec();
        let numeric = richardson_gradient(&design, &params);
        let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
        let rel = max_abs(&diff) / max_abs(&analytic);
        prop_assert!(rel < 1e-6, "relative error {rel}: {analytic:?} vs {numeric:?}");
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
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
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 50)
}

#[test]
fn truncated_density_integrates_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..50 {
        let mu = rng.random_range(50.0..200.0);
        let sigma = rng.random_range(0.5..15.0);
        let cap = mu + rng.random_range(-8.0..8.0) * sigma;
        let f = |l: f64| truncated_density(l, mu, sigma, Some(cap));
        // Mass sits within a few deviations below min(mu, L); 40 is ample.
        let lo = mu.min(cap) - 40.0 * sigma;
        // Open upper end: stop just short of L, where the density jumps to 0.
        let hi = cap - 1e-12 * cap.abs();
        let total = adaptive_simpson(&f, lo, hi, 1e-10);
        assert!((total - 1.0).abs() < 1e-6, "mu={mu} sigma={sigma} L={cap}: {total}");
    }
}

#[test]
fn untruncated_likelihood_is_gaussian() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise = Normal::new(0.0, 4.0).unwrap();
    let params = PefParams::new(50.0, vec![2.0, 3.0], 4.0).unwrap();
    let mut design = DesignMatrix::new(2, None).unwrap();
    let mut expected = 0.0;
    for _ in 0..200 {
        let row = [rng.random_range(0.0..20.0), rng.random_range(0.0..20.0)];
        let mu = 50.0 + 2.0 * row[0] + 3.0 * row[1];
        let l = mu + noise.sample(&mut rng);
        design.push(&row, l).unwrap();
        let r = (l - mu) / 4.0;
        expected += -(4.0f64 * (2.0 * std::f64::consts::PI).sqrt()).ln() - 0.5 * r * r;
    }
    let got = truncated_loglik(&design, &params).unwrap();
    assert!((got - expected).abs() < 1e-9 * expected.abs());
}

#[test]
fn accepted_steps_never_lower_the_likelihood() {
    let (design, mut params) = random_instance(3, 25, 1.5, 77);
    params.exponents.iter_mut().for_each(|n| *n += 0.7);
    params.sigma *= 1.8;
    for options in [FitOptions::default(), FitOptions::plain()] {
        let mut last = truncated_loglik(&design, &params).unwrap();
        for iterations in 1..40 {
            let report = fit_ml(
                &design,
                &params,
                &FitOptions { max_iterations: iterations, ..options },
            )
            .unwrap();
            assert!(
                report.log_likelihood >= last,
                "iteration {iterations}: {} < {last}",
                report.log_likelihood
            );
            last = report.log_likelihood;
        }
    }
}

proptest! {
    #[test]
    fn hazard_is_increasing_with_slope_below_one(a in -30.0f64..1e3, gap in 1e-3f64..50.0) {
        let b = a + gap;
        let (ha, hb) = (normal_hazard(a).unwrap(), normal_hazard(b).unwrap());
        prop_assert!(hb > ha);
        prop_assert!(hb - ha < gap);
        prop_assert!(ha > a.max(0.0));
    }

    #[test]
    fn cdf_and_survival_are_complementary(z in -8.0f64..8.0) {
        prop_assert!((normal_cdf(z) + normal_sf(z) - 1.0).abs() < 1e-15);
    }
}
