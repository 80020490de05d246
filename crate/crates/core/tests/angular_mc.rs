use arraynmi::angular::{AngularModel, MarginalDistribution, Plane};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn empirical_cf_matches_closed_form() {
    let model = AngularModel::measured();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    // one subray per cluster keeps the samples independent
    let rays = model.sample_ray_angles(1_000_000, 1, &mut rng);
    assert_eq!(rays.len(), 1_000_000);
    for n in -20i64..=20 {
        let nf = n as f64;
        let (mut az, mut el) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for r in &rays {
            az += Complex64::cis(nf * r.azimuth);
            el += Complex64::cis(nf * r.elevation);
        }
        let count = rays.len() as f64;
        let (az, el) = (az / count, el / count);
        let psi = model.composite_cf(Plane::Azimuth, n);
        let chi = model.composite_cf(Plane::Elevation, n);
        assert!((az - psi).norm() < 0.005, "ψ({n}): {az} vs {psi}");
        assert!((el - chi).norm() < 0.005, "χ({n}): {el} vs {chi}");
    }
}

#[test]
fn composite_variance_adds_and_matches_samples() {
    let model = AngularModel::measured();
    for plane in [Plane::Azimuth, Plane::Elevation] {
        let v = model.composite_variance(plane);
        let (c, s) = match plane {
            Plane::Azimuth => (model.azimuth_cluster, model.azimuth_subray),
            Plane::Elevation => (model.elevation_cluster, model.elevation_subray),
        };
        assert!((v - c.variance() - s.variance()).abs() < 1e-15);
        // curvature of the characteristic function at zero: ψ(n) ≈ e^{jnμ}(1 − n²σ²/2)
        let mu = c.mean();
        let val = (model.composite_cf(plane, 1) * Complex64::cis(-mu)).re;
        assert!((1.0 - val - v / 2.0).abs() < 0.05 * v, "{plane:?}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rays = model.sample_ray_angles(50_000, 10, &mut rng);
    let n = rays.len() as f64;
    let mean = rays.iter().map(|r| r.azimuth).sum::<f64>() / n;
    let var = rays.iter().map(|r| (r.azimuth - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let v = model.composite_variance(Plane::Azimuth);
    assert!((var / v - 1.0).abs() < 0.02, "{var} vs {v}");
}

#[test]
fn azimuth_cf_decays_monotonically() {
    let model = AngularModel::measured();
    let mut prev = 1.0;
    for n in 0..400 {
        let m = model.composite_cf(Plane::Azimuth, n).norm();
        assert!(m <= prev, "|ψ({n})| = {m} > {prev}");
        assert!(model.composite_envelope(Plane::Azimuth, n as u64) >= m);
        prev = m;
    }
}

fn marginal() -> impl Strategy<Value = MarginalDistribution> {
    prop_oneof![
        (-3.0f64..3.0, 0.0f64..2.0).prop_map(|(m, v)| MarginalDistribution::gaussian(m, v).unwrap()),
        (-3.0f64..3.0, 0.0f64..2.0).prop_map(|(m, v)| MarginalDistribution::laplacian(m, v).unwrap()),
        (-3.0f64..0.0, 0.01f64..3.0).prop_map(|(a, w)| MarginalDistribution::uniform(a, a + w).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn cf_is_bounded_and_conjugate_symmetric(d in marginal(), n in -200i64..200) {
        let v = d.cf(n);
        prop_assert!(v.norm() <= 1.0 + 1e-15);
        prop_assert!((d.cf(-n) - v.conj()).norm() < 1e-15);
        prop_assert!((d.cf(0) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        prop_assert!(d.cf_envelope(n.unsigned_abs()) >= v.norm() - 1e-15);
    }
}
