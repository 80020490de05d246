//! Clustered angle-of-arrival model.
//!
//! A ray's azimuth is a cluster centroid plus a zero-mean subray offset, and
//! likewise in elevation. Centroid and offset are independent, so the
//! characteristic function of the composite angle is the product of the two
//! marginal characteristic functions.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("variance must be finite and nonnegative, got {0}")]
    BadVariance(f64),
    #[error("uniform interval needs lower < upper, got [{0}, {1}]")]
    BadInterval(f64, f64),
    #[error("subray offsets must have zero mean")]
    SubrayMean,
    #[error("elevation cluster distribution puts no mass on [0, π]")]
    ElevationOutOfRange,
}

pub fn deg(x: f64) -> f64 {
    x.to_radians()
}

/// One-dimensional angle distribution (radians).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MarginalDistribution {
    Gaussian { mean: f64, variance: f64 },
    Laplacian { mean: f64, variance: f64 },
    Uniform { lower: f64, upper: f64 },
}

impl MarginalDistribution {
    pub fn gaussian(mean: f64, variance: f64) -> Result<Self, ModelError> {
        check_variance(variance)?;
        Ok(Self::Gaussian { mean, variance })
    }

    pub fn laplacian(mean: f64, variance: f64) -> Result<Self, ModelError> {
        check_variance(variance)?;
        Ok(Self::Laplacian { mean, variance })
    }

    pub fn uniform(lower: f64, upper: f64) -> Result<Self, ModelError> {
        if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
            return Err(ModelError::BadInterval(lower, upper));
        }
        Ok(Self::Uniform { lower, upper })
    }

    /// A point mass at `at`.
    pub fn degenerate(at: f64) -> Self {
        Self::Gaussian {
            mean: at,
            variance: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match *self {
            Self::Gaussian { variance, .. } | Self::Laplacian { variance, .. } => {
                check_variance(variance)
            }
            Self::Uniform { lower, upper } => Self::uniform(lower, upper).map(|_| ()),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Gaussian { mean, .. } | Self::Laplacian { mean, .. } => mean,
            Self::Uniform { lower, upper } => 0.5 * (lower + upper),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Self::Gaussian { variance, .. } | Self::Laplacian { variance, .. } => variance,
            Self::Uniform { lower, upper } => (upper - lower).powi(2) / 12.0,
        }
    }

    /// `E[exp(j n X)]`.
    pub fn cf(&self, n: i64) -> Complex64 {
        if n == 0 {
            return Complex64::new(1.0, 0.0);
        }
        let t = n as f64;
        match *self {
            Self::Gaussian { mean, variance } => {
                Complex64::from_polar((-0.5 * t * t * variance).exp(), t * mean)
            }
            Self::Laplacian { mean, variance } => {
                Complex64::from_polar(1.0 / (1.0 + 0.5 * t * t * variance), t * mean)
            }
            Self::Uniform { lower, upper } => {
                // e^{jnc} sin(nw/2)/(nw/2) with centre c and width w; the
                // sine is reduced in half-turns so harmonics that the
                // interval annihilates come out as exact zeros
                let width = upper - lower;
                let half_turns = t * width / (2.0 * PI);
                let amp = sin_pi(half_turns) / (PI * half_turns);
                Complex64::from_polar(amp, t * 0.5 * (lower + upper))
            }
        }
    }

    /// An upper bound on `|cf(m)|` over all `|m| ≥ n`.
    pub fn cf_envelope(&self, n: u64) -> f64 {
        if n == 0 {
            return 1.0;
        }
        let t = n as f64;
        match *self {
            Self::Gaussian { variance, .. } => (-0.5 * t * t * variance).exp(),
            Self::Laplacian { variance, .. } => 1.0 / (1.0 + 0.5 * t * t * variance),
            Self::Uniform { lower, upper } => {
                let width = upper - lower;
                let turns = width / (2.0 * PI);
                if (turns - turns.round()).abs() < 1e-12 && turns.round() >= 1.0 {
                    0.0
                } else {
                    (2.0 / (t * width)).min(1.0)
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Gaussian { mean, variance } => {
                if variance == 0.0 {
                    mean
                } else {
                    Normal::new(mean, variance.sqrt())
                        .expect("validated variance")
                        .sample(rng)
                }
            }
            Self::Laplacian { mean, variance } => {
                if variance == 0.0 {
                    return mean;
                }
                let scale = (0.5 * variance).sqrt();
                let u: f64 = rng.random::<f64>() - 0.5;
                mean - scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
            Self::Uniform { lower, upper } => lower + (upper - lower) * rng.random::<f64>(),
        }
    }

    fn support_meets(&self, lo: f64, hi: f64) -> bool {
        match *self {
            Self::Gaussian { mean, variance } | Self::Laplacian { mean, variance } => {
                variance > 0.0 || (lo..=hi).contains(&mean)
            }
            Self::Uniform { lower, upper } => lower < hi && upper > lo,
        }
    }
}

/// `sin(πt)`, exactly zero at integer `t`.
fn sin_pi(t: f64) -> f64 {
    let r = t - 2.0 * (0.5 * t).round();
    if r == 0.0 || r.abs() == 1.0 {
        0.0
    } else {
        (PI * r).sin()
    }
}

fn check_variance(v: f64) -> Result<(), ModelError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(ModelError::BadVariance(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Plane {
    Azimuth,
    Elevation,
}

/// Azimuth and elevation angle of one ray, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayAngle {
    pub azimuth: f64,
    pub elevation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularModel {
    pub azimuth_cluster: MarginalDistribution,
    pub azimuth_subray: MarginalDistribution,
    pub elevation_cluster: MarginalDistribution,
    pub elevation_subray: MarginalDistribution,
}

impl AngularModel {
    pub fn new(
        azimuth_cluster: MarginalDistribution,
        azimuth_subray: MarginalDistribution,
        elevation_cluster: MarginalDistribution,
        elevation_subray: MarginalDistribution,
    ) -> Result<Self, ModelError> {
        let model = Self {
            azimuth_cluster,
            azimuth_subray,
            elevation_cluster,
            elevation_subray,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for d in [
            &self.azimuth_cluster,
            &self.azimuth_subray,
            &self.elevation_cluster,
            &self.elevation_subray,
        ] {
            d.validate()?;
        }
        for d in [&self.azimuth_subray, &self.elevation_subray] {
            if d.mean() != 0.0 {
                return Err(ModelError::SubrayMean);
            }
        }
        if !self.elevation_cluster.support_meets(0.0, PI) {
            return Err(ModelError::ElevationOutOfRange);
        }
        Ok(())
    }

    /// Measured indoor-to-outdoor parameters: Gaussian azimuth centroids
    /// (mean 0°, σ 14.4°), Laplacian elevation centroids (mean 90°,
    /// σ 1.9°), Laplacian subray offsets (σ 6.24° azimuth, 1.37° elevation).
    pub fn measured() -> Self {
        Self {
            azimuth_cluster: MarginalDistribution::Gaussian {
                mean: 0.0,
                variance: deg(14.4).powi(2),
            },
            azimuth_subray: MarginalDistribution::Laplacian {
                mean: 0.0,
                variance: deg(6.24).powi(2),
            },
            elevation_cluster: MarginalDistribution::Laplacian {
                mean: deg(90.0),
                variance: deg(1.9).powi(2),
            },
            elevation_subray: MarginalDistribution::Laplacian {
                mean: 0.0,
                variance: deg(1.37).powi(2),
            },
        }
    }

    /// Uniform angles with no subray spread: azimuth on `[-π, π]`,
    /// elevation on `[0, π]`. A uniform elevation on `[-π, π]` restricted to
    /// the physical range is the same law, and both share the
    /// characteristic function at even arguments.
    pub fn uniform() -> Self {
        Self {
            azimuth_cluster: MarginalDistribution::Uniform {
                lower: -PI,
                upper: PI,
            },
            azimuth_subray: MarginalDistribution::degenerate(0.0),
            elevation_cluster: MarginalDistribution::Uniform {
                lower: 0.0,
                upper: PI,
            },
            elevation_subray: MarginalDistribution::degenerate(0.0),
        }
    }

    /// Every ray arrives from exactly `(azimuth, elevation)`.
    pub fn fixed(azimuth: f64, elevation: f64) -> Self {
        Self {
            azimuth_cluster: MarginalDistribution::degenerate(azimuth),
            azimuth_subray: MarginalDistribution::degenerate(0.0),
            elevation_cluster: MarginalDistribution::degenerate(elevation),
            elevation_subray: MarginalDistribution::degenerate(0.0),
        }
    }

    fn plane(&self, plane: Plane) -> (&MarginalDistribution, &MarginalDistribution) {
        match plane {
            Plane::Azimuth => (&self.azimuth_cluster, &self.azimuth_subray),
            Plane::Elevation => (&self.elevation_cluster, &self.elevation_subray),
        }
    }

    /// The composite characteristic function of one plane.
    pub fn plane_cf(&self, plane: Plane) -> PlaneCf {
        let (c, s) = self.plane(plane);
        PlaneCf {
            cluster: *c,
            subray: *s,
        }
    }

    /// `ψ(n)` for azimuth, `χ(n)` for elevation.
    pub fn composite_cf(&self, plane: Plane, n: i64) -> Complex64 {
        let (c, s) = self.plane(plane);
        c.cf(n) * s.cf(n)
    }

    pub fn composite_envelope(&self, plane: Plane, n: u64) -> f64 {
        let (c, s) = self.plane(plane);
        c.cf_envelope(n) * s.cf_envelope(n)
    }

    pub fn composite_variance(&self, plane: Plane) -> f64 {
        let (c, s) = self.plane(plane);
        c.variance() + s.variance()
    }

    fn draw_elevation_centroid<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let t = self.elevation_cluster.sample(rng);
            if (0.0..=PI).contains(&t) {
                return t;
            }
        }
    }

    fn draw_elevation<R: Rng + ?Sized>(&self, centroid: f64, rng: &mut R) -> f64 {
        loop {
            let t = centroid + self.elevation_subray.sample(rng);
            if (0.0..=PI).contains(&t) {
                return t;
            }
        }
    }

    /// `clusters · subrays` ray angles, cluster-major. Azimuth is wrapped to
    /// `[-π, π]`; out-of-range elevations are redrawn.
    pub fn sample_ray_angles<R: Rng + ?Sized>(
        &self,
        clusters: usize,
        subrays: usize,
        rng: &mut R,
    ) -> Vec<RayAngle> {
        let mut out = Vec::with_capacity(clusters * subrays);
        for _ in 0..clusters {
            let phi_c = self.azimuth_cluster.sample(rng);
            let theta_c = self.draw_elevation_centroid(rng);
            for _ in 0..subrays {
                let azimuth = wrap_angle(phi_c + self.azimuth_subray.sample(rng));
                let elevation = self.draw_elevation(theta_c, rng);
                out.push(RayAngle { azimuth, elevation });
            }
        }
        out
    }

    /// A single ray with its own centroid.
    pub fn sample_ray<R: Rng + ?Sized>(&self, rng: &mut R) -> RayAngle {
        self.sample_ray_angles(1, 1, rng)[0]
    }
}

/// A characteristic function `n ↦ E[exp(jnX)]` of a real angle together with
/// a non-increasing bound on its modulus.
pub trait CharacteristicFunction: Sync {
    fn cf(&self, n: i64) -> Complex64;
    /// Upper bound on `|cf(m)|` over all `|m| ≥ n`.
    fn envelope(&self, n: u64) -> f64;
}

impl CharacteristicFunction for MarginalDistribution {
    fn cf(&self, n: i64) -> Complex64 {
        MarginalDistribution::cf(self, n)
    }
    fn envelope(&self, n: u64) -> f64 {
        self.cf_envelope(n)
    }
}

/// Cluster centroid plus independent subray offset in one plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneCf {
    pub cluster: MarginalDistribution,
    pub subray: MarginalDistribution,
}

impl CharacteristicFunction for PlaneCf {
    fn cf(&self, n: i64) -> Complex64 {
        self.cluster.cf(n) * self.subray.cf(n)
    }
    fn envelope(&self, n: u64) -> f64 {
        self.cluster.cf_envelope(n) * self.subray.cf_envelope(n)
    }
}

/// Wraps to `[-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    if (-PI..=PI).contains(&a) {
        return a;
    }
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w < -PI {
        -PI
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cf_at_zero_is_one() {
        let m = AngularModel::measured();
        for p in [Plane::Azimuth, Plane::Elevation] {
            assert_eq!(m.composite_cf(p, 0), Complex64::new(1.0, 0.0));
        }
        assert_eq!(
            MarginalDistribution::uniform(-1.0, 2.0).unwrap().cf(0),
            Complex64::new(1.0, 0.0)
        );
    }

    #[test]
    fn full_circle_uniform_kills_harmonics() {
        let u = AngularModel::uniform();
        for n in [1, 3, -4, 17] {
            assert_eq!(u.composite_cf(Plane::Azimuth, n).norm(), 0.0);
            assert_eq!(u.composite_cf(Plane::Elevation, 2 * n).norm(), 0.0);
        }
        assert_eq!(u.composite_envelope(Plane::Azimuth, 1), 0.0);
    }

    #[test]
    fn uniform_cf_matches_definition() {
        for (a, b) in [(0.0, PI), (-1.0, 0.5), (-PI, PI)] {
            let u = MarginalDistribution::uniform(a, b).unwrap();
            for n in [1i64, 2, 3, -5, 8] {
                let t = n as f64;
                let want = (Complex64::cis(t * b) - Complex64::cis(t * a)) / Complex64::new(0.0, t * (b - a));
                assert!((u.cf(n) - want).norm() < 1e-14, "[{a},{b}] n={n}");
                assert!(u.cf(n).norm() <= u.cf_envelope(n.unsigned_abs()) + 1e-15);
            }
        }
        let half = MarginalDistribution::uniform(0.0, PI).unwrap();
        assert_eq!(half.cf(2), Complex64::new(0.0, 0.0));
        assert_eq!(half.cf(-14).norm(), 0.0);
    }

    #[test]
    fn gaussian_cf_spot_value() {
        let g = MarginalDistribution::gaussian(0.0, deg(14.4).powi(2)).unwrap();
        let v = g.cf(5);
        assert!((v.re - 0.454_040_738_727_245).abs() < 1e-12);
        assert!(v.im.abs() < 1e-15);
        // quadrature of E[e^{j5φ}] against the Gaussian density
        let s = deg(14.4);
        let q = integrate(
            |x: f64| (-0.5 * (x / s).powi(2)).exp() / (s * (2.0 * PI).sqrt()) * (5.0 * x).cos(),
            -12.0 * s,
            12.0 * s,
            1e-14,
        );
        assert!((q - v.re).abs() < 1e-12);
    }

    #[test]
    fn composite_azimuth_spot_value() {
        let v = AngularModel::measured().composite_cf(Plane::Azimuth, 1);
        assert!((v.re - 0.963_198_508_127_458_7).abs() < 1e-12);
    }

    #[test]
    fn laplacian_cf_matches_quadrature() {
        let var = deg(6.24).powi(2);
        let b = (0.5 * var).sqrt();
        let l = MarginalDistribution::laplacian(0.0, var).unwrap();
        for n in [1, 4, 11] {
            let q = crate::quadrature::integrate_panels(
                |x: f64| (-x.abs() / b).exp() / (2.0 * b) * (n as f64 * x).cos(),
                &[-60.0 * b, 0.0, 60.0 * b],
                1e-14,
            );
            assert!((q - l.cf(n).re).abs() < 1e-11, "n={n}");
        }
    }

    #[test]
    fn conjugate_symmetry_and_bound() {
        let m = AngularModel::measured();
        for p in [Plane::Azimuth, Plane::Elevation] {
            for n in 1..60 {
                let a = m.composite_cf(p, n);
                let b = m.composite_cf(p, -n);
                assert!((a - b.conj()).norm() < 1e-15);
                assert!(a.norm() <= 1.0);
                assert!(a.norm() <= m.composite_envelope(p, n as u64) + 1e-15);
            }
        }
    }

    #[test]
    fn zero_variance_rays_sit_on_the_mean() {
        let m = AngularModel::fixed(0.3, 1.2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for r in m.sample_ray_angles(3, 4, &mut rng) {
            assert_eq!(r, RayAngle { azimuth: 0.3, elevation: 1.2 });
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = AngularModel::measured();
        let a = m.sample_ray_angles(6, 10, &mut ChaCha8Rng::seed_from_u64(9));
        let b = m.sample_ray_angles(6, 10, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
        assert!(a.iter().all(|r| (0.0..=PI).contains(&r.elevation)));
    }

    #[test]
    fn wrap() {
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap_angle(0.25), 0.25);
        assert!((-PI..=PI).contains(&wrap_angle(-PI)));
    }

    #[test]
    fn validation() {
        assert!(MarginalDistribution::gaussian(0.0, -1.0).is_err());
        assert!(MarginalDistribution::uniform(1.0, 1.0).is_err());
        let mut m = AngularModel::measured();
        m.azimuth_subray = MarginalDistribution::degenerate(0.1);
        assert_eq!(m.validate(), Err(ModelError::SubrayMean));
        let mut m = AngularModel::measured();
        m.elevation_cluster = MarginalDistribution::degenerate(4.0);
        assert_eq!(m.validate(), Err(ModelError::ElevationOutOfRange));
    }
}
