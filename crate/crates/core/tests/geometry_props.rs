use std::f64::consts::PI;

use arraynmi::geometry::{
    azimuth_bounding_box, azimuth_diameter, fits_aperture, spacing_under_constraint, steering_from_positions,
    ArrayConfig, TopologyKind,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn layouts() -> Vec<ArrayConfig> {
    vec![
        ArrayConfig::ula(7, 0.5).unwrap(),
        ArrayConfig::hura(3, 4, 0.5, 0.37).unwrap(),
        ArrayConfig::vura(4, 3, 0.45, 0.8).unwrap(),
        ArrayConfig::ucira(9, 0.4).unwrap(),
        ArrayConfig::ucyla(6, 3, 0.5, 0.6).unwrap(),
        ArrayConfig::constrained(TopologyKind::Ucyla, 100, 7.77).unwrap(),
        ArrayConfig::uniform(TopologyKind::Ula, 1, 0.5).unwrap(),
    ]
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn steering_matches_positions() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for cfg in layouts() {
        let pos = cfg.antenna_positions();
        assert_eq!(pos.len(), cfg.num_antennas());
        for _ in 0..1000 {
            let phi = rng.random_range(-PI..=PI);
            let theta = rng.random_range(0.0..=PI);
            let a = cfg.steering_vector(phi, theta).unwrap();
            let b = steering_from_positions(&pos, phi, theta);
            for (x, y) in a.iter().zip(&b) {
                assert!((x.norm() - y.norm()).abs() < 1e-12);
                // phase difference, taken on the unit circle
                assert!((x * y.conj()).arg().abs() < 1e-12, "{:?} φ={phi} θ={theta}", cfg.kind);
            }
        }
    }
}

#[test]
fn single_element_is_one() {
    for kind in TopologyKind::ALL {
        let cfg = ArrayConfig::uniform(kind, 1, 0.5).unwrap();
        assert_eq!(cfg.steering_vector(0.7, 1.1).unwrap(), vec![Complex64::new(1.0, 0.0)]);
    }
}

#[test]
fn reductions_to_linear_and_circular() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pairs = [
        (ArrayConfig::hura(1, 6, 0.5, 0.5).unwrap(), ArrayConfig::ula(6, 0.5).unwrap()),
        (ArrayConfig::vura(6, 1, 0.5, 0.5).unwrap(), ArrayConfig::ula(6, 0.5).unwrap()),
        (ArrayConfig::ucyla(8, 1, 0.5, 0.5).unwrap(), ArrayConfig::ucira(8, 0.5).unwrap()),
    ];
    for (a, b) in pairs {
        for _ in 0..200 {
            let phi = rng.random_range(-PI..=PI);
            let theta = rng.random_range(0.0..=PI);
            let d = max_diff(&a.steering_vector(phi, theta).unwrap(), &b.steering_vector(phi, theta).unwrap());
            assert!(d < 1e-14, "{:?} vs {:?}: {d}", a.kind, b.kind);
        }
    }
}

fn kind_strategy() -> impl Strategy<Value = TopologyKind> {
    prop::sample::select(TopologyKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn unit_modulus_entries(kind in kind_strategy(), side in 1usize..7, d in 0.05f64..3.0, phi in -PI..PI, theta in 0.0..PI) {
        let cfg = ArrayConfig::uniform(kind, side * side, d).unwrap();
        for v in cfg.steering_vector(phi, theta).unwrap() {
            prop_assert!((v.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn two_ray_is_symmetric(kind in kind_strategy(), side in 1usize..6, d in 0.05f64..2.0,
                            p1 in -PI..PI, t1 in 0.0..PI, p2 in -PI..PI, t2 in 0.0..PI) {
        let cfg = ArrayConfig::uniform(kind, side * side, d).unwrap();
        let a = cfg.two_ray_interference(p1, t1, p2, t2).unwrap();
        let b = cfg.two_ray_interference(p2, t2, p1, t1).unwrap();
        prop_assert!((a.raw - b.raw).abs() <= 1e-12 * a.raw.max(1.0));
        prop_assert!(a.normalized <= 1.0 + 1e-12);
    }

    #[test]
    fn constrained_layout_fits(kind in kind_strategy(), side in 2usize..13, diag in 0.5f64..100.0) {
        let m = side * side;
        let d = spacing_under_constraint(kind, m, diag).unwrap();
        let cfg = ArrayConfig::uniform(kind, m, d).unwrap();
        let pos = cfg.antenna_positions();
        let (w, h) = azimuth_bounding_box(&pos);
        match kind {
            TopologyKind::Ula | TopologyKind::Vura => prop_assert!(azimuth_diameter(&pos) <= diag * (1.0 + 1e-9)),
            _ => prop_assert!(w.hypot(h) <= diag * (1.0 + 1e-9), "{} x {} vs {}", w, h, diag),
        }
        prop_assert!(fits_aperture(&cfg, diag, 1e-9));
    }
}
