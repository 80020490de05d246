//! Independent oracles shared by the integration tests: composite angle
//! densities and nested adaptive quadrature of the pairwise interference
//! expectation, computed from element positions alone.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;

use arraynmi::angular::{AngularModel, MarginalDistribution};
use arraynmi::geometry::ArrayConfig;
use arraynmi::quadrature::{integrate, integrate_panels};
use num_complex::Complex64;
use statrs::function::erf::erfc;

/// Probability density of a composite angle on a finite support.
pub struct Density {
    pub breaks: Vec<f64>,
    pdf: Box<dyn Fn(f64) -> f64 + Sync>,
}

impl Density {
    pub fn pdf(&self, x: f64) -> f64 {
        (self.pdf)(x)
    }
}

fn laplace_scale(variance: f64) -> f64 {
    (0.5 * variance).sqrt()
}

/// Density of `cluster + subray` for the families used in the tests.
pub fn composite_density(cluster: MarginalDistribution, subray: MarginalDistribution, half_width: f64) -> Density {
    use MarginalDistribution::*;
    let degenerate = |d: &MarginalDistribution| matches!(d, Gaussian { variance, .. } | Laplacian { variance, .. } if *variance == 0.0);
    assert!(subray.mean() == 0.0);
    match (cluster, subray) {
        (Uniform { lower, upper }, s) if degenerate(&s) => Density {
            breaks: vec![lower, upper],
            pdf: Box::new(move |x| if (lower..=upper).contains(&x) { 1.0 / (upper - lower) } else { 0.0 }),
        },
        (Gaussian { mean, variance }, s) if degenerate(&s) => {
            let sd = variance.sqrt();
            Density {
                breaks: vec![mean - half_width, mean + half_width],
                pdf: Box::new(move |x| (-0.5 * ((x - mean) / sd).powi(2)).exp() / (sd * (2.0 * PI).sqrt())),
            }
        }
        (Laplacian { mean, variance }, s) if degenerate(&s) => {
            let b = laplace_scale(variance);
            Density {
                breaks: vec![mean - half_width, mean, mean + half_width],
                pdf: Box::new(move |x| (-(x - mean).abs() / b).exp() / (2.0 * b)),
            }
        }
        (Gaussian { mean, variance }, Laplacian { variance: sv, .. }) => {
            let s = variance.sqrt();
            let b = laplace_scale(sv);
            let shift = variance / (2.0 * b * b);
            Density {
                breaks: vec![mean - half_width, mean + half_width],
                pdf: Box::new(move |x| {
                    let u = x - mean;
                    let r = s * 2f64.sqrt();
                    let left = (shift - u / b).exp() * erfc((s * s / b - u) / r);
                    let right = (shift + u / b).exp() * erfc((s * s / b + u) / r);
                    (left + right) / (4.0 * b)
                }),
            }
        }
        (Laplacian { mean, variance }, Laplacian { variance: sv, .. }) => {
            let b1 = laplace_scale(variance);
            let b2 = laplace_scale(sv);
            assert!((b1 - b2).abs() > 1e-9 * b1, "equal Laplacian scales not supported");
            Density {
                breaks: vec![mean - half_width, mean, mean + half_width],
                pdf: Box::new(move |x| {
                    let u = (x - mean).abs();
                    (b1 * (-u / b1).exp() - b2 * (-u / b2).exp()) / (2.0 * (b1 * b1 - b2 * b2))
                }),
            }
        }
        other => panic!("no oracle density for {other:?}"),
    }
}

pub fn azimuth_density(model: &AngularModel) -> Density {
    composite_density(model.azimuth_cluster, model.azimuth_subray, 3.0)
}

pub fn elevation_density(model: &AngularModel) -> Density {
    composite_density(model.elevation_cluster, model.elevation_subray, 1.0)
}

/// `E[exp(j(z1 sinθ sin(φ+A) + z2 cosθ))]` by nested adaptive quadrature.
pub fn pairwise_expectation(model: &AngularModel, a: f64, z1: f64, z2: f64, tol: f64) -> Complex64 {
    let az = azimuth_density(model);
    let el = elevation_density(model);
    integrate_panels(
        |theta: f64| {
            let wt = el.pdf(theta);
            if wt == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let s = theta.sin();
            let inner = integrate_panels(
                |phi: f64| Complex64::cis(z1 * s * (phi + a).sin()) * az.pdf(phi),
                &az.breaks,
                tol,
            );
            inner * Complex64::cis(z2 * theta.cos()) * wt
        },
        &el.breaks,
        tol,
    )
}

/// `E[exp(j2π d·u)]` for an element offset `d` and arrival direction `u`.
pub fn offset_expectation(model: &AngularModel, d: [f64; 3], tol: f64) -> Complex64 {
    let az = azimuth_density(model);
    let el = elevation_density(model);
    let tau = 2.0 * PI;
    integrate_panels(
        |theta: f64| {
            let wt = el.pdf(theta);
            if wt == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let (s, c) = theta.sin_cos();
            let inner = integrate_panels(
                |phi: f64| Complex64::cis(tau * s * (d[0] * phi.cos() + d[1] * phi.sin())) * az.pdf(phi),
                &az.breaks,
                tol,
            );
            inner * Complex64::cis(tau * d[2] * c) * wt
        },
        &el.breaks,
        tol,
    )
}

/// κ from element positions: `(1/M²) Σ_{m,m′} |E[exp(j2π(p_m − p_m′)·u)]|²`,
/// each distinct offset integrated once (offsets and their negatives share
/// a modulus).
pub fn kappa_by_quadrature(cfg: &ArrayConfig, model: &AngularModel, tol: f64) -> f64 {
    let pos = cfg.antenna_positions();
    let m = pos.len();
    let key = |v: f64| (v * 1e10).round() as i64;
    let mut counts: BTreeMap<[i64; 3], ([f64; 3], usize)> = BTreeMap::new();
    for i in 0..m {
        for j in i + 1..m {
            let mut d = [pos[i].x - pos[j].x, pos[i].y - pos[j].y, pos[i].z - pos[j].z];
            // canonical sign: first nonzero component positive
            let first = d.iter().copied().find(|v| key(*v) != 0).unwrap_or(0.0);
            if first < 0.0 {
                d = d.map(|v| -v);
            }
            let k = d.map(key);
            counts.entry(k).or_insert((d, 0)).1 += 1;
        }
    }
    let total: f64 = counts
        .values()
        .map(|(d, n)| *n as f64 * offset_expectation(model, *d, tol).norm_sqr())
        .sum();
    (m as f64 + 2.0 * total) / (m * m) as f64
}

/// Real-valued integral helper re-exported for tests.
pub fn quad(f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    integrate(f, a, b, tol)
}
