use std::f64::consts::PI;

use arraynmi::bessel::{bessel_j, bessel_jn, order_decay_bound, BesselOrder, BesselTable};
use arraynmi::quadrature::integrate;
use proptest::prelude::*;

fn j(twice: i64, x: f64) -> f64 {
    bessel_j(BesselOrder::from_twice(twice), x).unwrap()
}

fn close(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + abs
}

/// Bessel's integral `(1/π) ∫₀^π cos(nτ − x sin τ) dτ`, split into panels
/// so the oscillation is resolved.
fn integral_integer(n: i64, x: f64) -> f64 {
    let panels = 8 + (x.abs() + n.abs() as f64) as usize;
    let h = PI / panels as f64;
    (0..panels)
        .map(|i| integrate(|t: f64| (n as f64 * t - x * t.sin()).cos(), i as f64 * h, (i + 1) as f64 * h, 1e-15))
        .sum::<f64>()
        / PI
}

/// Poisson's integral at `ν = k + ½`:
/// `(x/2)^ν / (√π Γ(ν+½)) ∫₀^π cos(x cos t) sin^{2ν} t dt`, with `Γ(k+1) = k!`.
fn integral_poisson(k: i64, x: f64) -> f64 {
    let nu = k as f64 + 0.5;
    let factorial: f64 = (1..=k).map(|i| i as f64).product();
    let panels = 8 + x as usize;
    let h = PI / panels as f64;
    let inner: f64 = (0..panels)
        .map(|i| integrate(|t: f64| (x * t.cos()).cos() * t.sin().powf(2.0 * nu), i as f64 * h, (i + 1) as f64 * h, 1e-15))
        .sum();
    (0.5 * x).powf(nu) / (PI.sqrt() * factorial) * inner
}

#[test]
fn integer_orders_match_bessel_integral() {
    for n in [0i64, 1, 2, 5, 10, 17, 30] {
        for x in [0.1, 0.9, 2.4048255576957727, 7.0, 15.5, 33.0, 50.0] {
            let q = integral_integer(n, x);
            let v = bessel_jn(n, x).unwrap();
            assert!(close(v, q, 1e-9, 1e-13), "J_{n}({x}) = {v}, integral {q}");
            // negative orders by reflection
            let neg = bessel_jn(-n, x).unwrap();
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!(close(neg, sign * q, 1e-9, 1e-13));
        }
    }
}

#[test]
fn half_orders_match_poisson_integral() {
    for k in [0i64, 1, 3, 8, 15] {
        let nu = k as f64 + 0.5;
        // the prefactor grows like (x/2)^ν / k! while the integral cancels,
        // so the oracle is only well conditioned for moderate x
        for x in [0.2, 1.0, 4.5, 12.0] {
            let q = integral_poisson(k, x);
            let v = j(2 * k + 1, x);
            assert!(close(v, q, 1e-9, 1e-13), "J_{nu}({x}) = {v}, integral {q}");
        }
    }
}

#[test]
fn half_orders_at_large_arguments() {
    // (2ν, x, J_ν(x)) from 40-digit arbitrary-precision evaluation
    let cases = [
        (1, 30.0, -0.14392965337039989),
        (7, 30.0, 0.050801755511058041),
        (17, 30.0, -0.03078325368791526),
        (31, 30.0, -0.14074176723926558),
        (81, 30.0, 0.00023838105980624519),
        (-41, 30.0, 0.15766799598301719),
        (-15, 12.0, 0.25035734829167923),
        (49, 60.0, 0.084524500296107287),
        (-67, 45.0, -0.14526698488526157),
        (121, 80.0, -0.057143968509355303),
        (-1, 100.0, 0.068803091468728084),
    ];
    for (twice, x, expected) in cases {
        let v = j(twice, x);
        assert!(close(v, expected, 1e-9, 0.0), "J_{}/2({x}) = {v}, reference {expected}", twice);
    }
}

#[test]
fn half_integer_closed_forms() {
    for x in [0.05, 0.7, 1.0, 3.3, 9.0, 27.5, 80.0] {
        let c = (2.0 / (PI * x)).sqrt();
        let (s, co) = x.sin_cos();
        let cases = [
            (1, c * s),
            (-1, c * co),
            (3, c * (s / x - co)),
            (-3, c * (-co / x - s)),
            (5, c * ((3.0 / (x * x) - 1.0) * s - 3.0 * co / x)),
            (-5, c * (3.0 * s / x + (3.0 / (x * x) - 1.0) * co)),
        ];
        for (twice, expected) in cases {
            let v = j(twice, x);
            // the closed forms themselves cancel for small x, so compare at
            // the scale of their largest term
            let scale = c * (1.0 + 3.0 / (x * x));
            assert!((v - expected).abs() <= 1e-9 * v.abs().max(expected.abs()) + 1e-15 * scale, "J_{}/2({x}) = {v}, closed form {expected}", twice);
        }
    }
}

#[test]
fn tables_agree_with_scalar_evaluation() {
    for x in [0.3, 6.0, 41.0] {
        let t = BesselTable::new(x, 120);
        for twice in -60..=120 {
            let a = t.get(twice).to_f64();
            let b = j(twice, x);
            assert!(close(a, b, 1e-12, 1e-300), "twice={twice} x={x}: {a} vs {b}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn three_term_recurrence(twice in -80i64..80, x in 0.05f64..60.0) {
        let nu = twice as f64 / 2.0;
        let lo = j(twice - 2, x);
        let hi = j(twice + 2, x);
        let mid = 2.0 * nu / x * j(twice, x);
        let scale = lo.abs().max(hi.abs()).max(mid.abs());
        prop_assert!((lo + hi - mid).abs() <= 1e-9 * scale, "ν={} x={}: {} + {} vs {}", nu, x, lo, hi, mid);
    }

    #[test]
    fn bounded_for_nonnegative_orders(twice in 0i64..200, x in 0.0f64..200.0) {
        prop_assert!(j(twice, x).abs() <= 1.0);
    }

    #[test]
    fn negligible_beyond_the_order_decay_bound(x in 0.0f64..200.0, extra in 0i64..100) {
        let twice = (2.0 * order_decay_bound(x)).ceil() as i64 + 1 + extra;
        prop_assert!(j(twice, x).abs() < 1e-12, "J_{}({})", twice as f64 / 2.0, x);
    }
}
