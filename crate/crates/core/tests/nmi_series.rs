mod common;

use std::f64::consts::PI;

use arraynmi::angular::{AngularModel, CharacteristicFunction, Plane, PlaneCf};
use arraynmi::bessel::BesselTable;
use arraynmi::nmi::{series_g, series_i, series_v, SeriesParams, TruncationPolicy};
use arraynmi::quadrature::integrate;
use num_complex::Complex64;
use proptest::prelude::*;

fn measured() -> (AngularModel, PlaneCf, PlaneCf) {
    let m = AngularModel::measured();
    (m, m.plane_cf(Plane::Azimuth), m.plane_cf(Plane::Elevation))
}

fn trunc() -> TruncationPolicy {
    TruncationPolicy::default()
}

#[test]
fn planar_series_matches_quadrature() {
    let (model, psi, chi) = measured();
    for (a, z) in [(0.0, PI), (0.7, 5.0), (-2.0, 17.0), (PI, 31.4)] {
        let p = SeriesParams::new(a, z, 0.0);
        let s = series_i(&p, &psi, &chi, &trunc()).unwrap();
        let q = common::pairwise_expectation(&model, a, z, 0.0, 1e-12);
        assert!((s - q).norm() < 1e-9, "A={a} z={z}: {s} vs {q}");
    }
}

#[test]
fn vertical_series_matches_quadrature() {
    let (model, psi, chi) = measured();
    for (a, z1, z2) in [(0.0, PI, PI), (1.1, 4.0, -9.0), (-0.4, 0.0, 12.0), (2.5, 20.0, 3.0), (0.0, -6.0, 25.0)] {
        let p = SeriesParams::new(a, z1, z2);
        let s = series_v(&p, &psi, &chi, &trunc()).unwrap();
        let q = common::pairwise_expectation(&model, a, z1, z2, 1e-12);
        assert!((s - q).norm() < 1e-9, "A={a} z1={z1} z2={z2}: {s} vs {q}");
    }
}

#[test]
fn vertical_series_uniform_angles_matches_quadrature() {
    let model = AngularModel::uniform();
    let (psi, chi) = (model.plane_cf(Plane::Azimuth), model.plane_cf(Plane::Elevation));
    for (z1, z2) in [(PI, PI), (7.0, 2.0), (1.0, 15.0)] {
        let s = series_v(&SeriesParams::new(0.3, z1, z2), &psi, &chi, &trunc()).unwrap();
        let q = common::pairwise_expectation(&model, 0.3, z1, z2, 1e-12);
        assert!((s - q).norm() < 1e-9, "z1={z1} z2={z2}: {s} vs {q}");
    }
}

#[test]
fn g_matches_fourier_integral() {
    for z2 in [2.0, 5.5, -3.0, 20.0] {
        for q in -4i64..=4 {
            let re = integrate(|t: f64| (z2 * t.cos() - 2.0 * q as f64 * t).cos(), 0.0, PI, 1e-14) / PI;
            let im = integrate(|t: f64| (z2 * t.cos() - 2.0 * q as f64 * t).sin(), 0.0, PI, 1e-14) / PI;
            let sign = if q.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let g = series_g(q, z2, &trunc()).unwrap();
            // the coefficient is real up to quadrature noise
            assert!(im.abs() < 1e-12, "q={q} z2={z2}: imaginary part {im}");
            assert!((sign * re - g).abs() < 1e-12, "q={q} z2={z2}: {} vs {g}", sign * re);
        }
    }
}

/// The vertical series summed literally: the `G` weights over an explicit
/// `q` range, Bessel products over `n̂` and harmonics over `n`.
fn naive_vertical(a: f64, z1: f64, z2: f64, psi: &PlaneCf, chi: &PlaneCf) -> Complex64 {
    let (n_max, k_max, q_max) = (34i64, 160i64, 3000i64);
    let g: Vec<f64> = (-q_max - k_max..=q_max + k_max)
        .map(|q| series_g(q, z2, &trunc()).unwrap())
        .collect();
    let g_at = |q: i64| g[(q + q_max + k_max) as usize];
    let sign = |k: i64| if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let w: Vec<Complex64> = (-k_max..=k_max)
        .map(|k| {
            (-q_max..=q_max)
                .map(|q| chi.cf(2 * (k + q)) * (sign(q) * g_at(q)))
                .sum()
        })
        .collect();
    // products of a huge and a tiny Bessel value overflow as plain floats
    let table = BesselTable::new(0.5 * z1, 2 * (n_max + 2 * k_max));
    let mut v = Complex64::new(0.0, 0.0);
    for n in -n_max..=n_max {
        let m = n.abs();
        let mut r = Complex64::new(0.0, 0.0);
        for k in -k_max..=k_max {
            let jp = table.product(m - 2 * k, m + 2 * k);
            r += w[(k + k_max) as usize] * (sign(k) * jp);
        }
        let pn = if n < 0 { sign(n) } else { 1.0 };
        v += psi.cf(n) * Complex64::cis(n as f64 * a) * r * pn;
    }
    v
}

#[test]
fn vertical_series_matches_naive_triple_sum() {
    let (_, psi, chi) = measured();
    for (a, z1, z2) in [(0.0, PI, PI), (0.9, 2.0, 7.5)] {
        let s = series_v(&SeriesParams::new(a, z1, z2), &psi, &chi, &trunc()).unwrap();
        let n = naive_vertical(a, z1, z2, &psi, &chi);
        assert!((s - n).norm() < 1e-8, "A={a} z1={z1} z2={z2}: {s} vs {n}");
    }
}

#[test]
fn tighter_floors_do_not_move_the_series() {
    let (_, psi, chi) = measured();
    let tight = trunc().tightened(100.0);
    for p in [SeriesParams::new(0.2, 40.0, 0.0), SeriesParams::new(1.0, 9.0, 30.0)] {
        let a = series_v(&p, &psi, &chi, &trunc()).unwrap();
        let b = series_v(&p, &psi, &chi, &tight).unwrap();
        assert!((a - b).norm() < 1e-10);
        let a = series_i(&p, &psi, &chi, &trunc()).unwrap();
        let b = series_i(&p, &psi, &chi, &tight).unwrap();
        assert!((a - b).norm() < 1e-10);
    }
}

#[test]
fn exhausted_caps_report_partial_value() {
    // a fixed arrival direction has no decaying weights at all
    let model = AngularModel::fixed(0.2, 1.0);
    let (psi, chi) = (model.plane_cf(Plane::Azimuth), model.plane_cf(Plane::Elevation));
    let small = TruncationPolicy {
        max_inner: 200,
        ..trunc()
    };
    let err = series_i(&SeriesParams::new(0.0, 10.0, 0.0), &psi, &chi, &small).unwrap_err();
    assert!(matches!(err, arraynmi::nmi::NmiError::NotConverged { .. }));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn vertical_without_height_equals_planar(a in -PI..PI, z1 in 0.0f64..40.0) {
        let (_, psi, chi) = measured();
        let p = SeriesParams::new(a, z1, 0.0);
        let v = series_v(&p, &psi, &chi, &trunc()).unwrap();
        let i = series_i(&p, &psi, &chi, &trunc()).unwrap();
        prop_assert!((v - i).norm() < 1e-9, "{} vs {}", v, i);
    }

    #[test]
    fn series_values_are_bounded(a in -PI..PI, z1 in -30.0f64..30.0, z2 in -30.0f64..30.0) {
        let (_, psi, chi) = measured();
        let p = SeriesParams::new(a, z1, z2);
        let v = series_v(&p, &psi, &chi, &trunc()).unwrap();
        prop_assert!(v.norm() <= 1.0 + 1e-9);
    }

    #[test]
    fn turning_by_pi_conjugates_under_symmetric_elevation(a in -PI..PI, z1 in 0.0f64..25.0, z2 in -25.0f64..25.0) {
        // the elevation law is symmetric about broadside, so reversing the
        // planar direction only conjugates the term
        let (_, psi, chi) = measured();
        let v = series_v(&SeriesParams::new(a, z1, z2), &psi, &chi, &trunc()).unwrap();
        let f = series_v(&SeriesParams::new(a + PI, z1, z2), &psi, &chi, &trunc()).unwrap();
        prop_assert!((v.norm_sqr() - f.norm_sqr()).abs() < 1e-12);
    }
}
