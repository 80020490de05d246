//! Monte Carlo channel engine: user drops with path loss and shadowing,
//! clustered ray channels, empirical NMI and MMSE SINR.
//!
//! Every Monte Carlo trial draws from its own ChaCha8 stream, selected by
//! `(seed, domain, trial index)`, and results are reduced in trial order, so
//! estimates do not depend on the number of worker threads.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as StdNormal};
use thiserror::Error;

use crate::angular::{AngularModel, ModelError, RayAngle};
use crate::geometry::{inner_product, ArrayConfig, GeometryError};
use crate::quadrature::integrate;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("user index {index} out of range for {users} users")]
    UserIndex { index: usize, users: usize },
    #[error("channel matrix has {rows} rows, expected {expected}")]
    Dimension { rows: usize, expected: usize },
    #[error("Hermitian solve failed: {0}")]
    Solver(&'static str),
}

fn invalid(msg: impl Into<String>) -> ChannelError {
    ChannelError::InvalidParameter(msg.into())
}

/// Stream domains keep independent experiments off each other's streams.
pub mod domain {
    pub const NMI: u64 = 0x4e4d_4900;
    pub const NMI_CHANNELS: u64 = 0x4e4d_4901;
    pub const SINR: u64 = 0x5349_4e52;
}

/// Deterministic generator for trial `index` of experiment `domain`.
pub fn trial_rng(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ domain.rotate_left(32));
    rng.set_stream(index);
    rng
}

/// Distance-dependent path loss with log-normal shadowing over an annular
/// cell: `β = A · X · (d/d0)^(−Γ)` with `10 log10 X ~ N(0, σ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossParams {
    pub attenuation: f64,
    pub exponent: f64,
    /// Shadowing standard deviation, dB.
    pub shadow_sigma_db: f64,
    pub ref_distance: f64,
    pub cell_radius: f64,
    pub exclusion_radius: f64,
}

impl Default for PathLossParams {
    fn default() -> Self {
        Self {
            attenuation: 1.0,
            exponent: 3.8,
            shadow_sigma_db: 5.5,
            ref_distance: 1.0,
            cell_radius: 100.0,
            exclusion_radius: 10.0,
        }
    }
}

impl PathLossParams {
    /// Checks `0 < r0 < r`, `σ ≥ 0` and positive `A`, `d0`. The exponent
    /// only has to be finite and non-negative so that degenerate
    /// calibration cases remain expressible.
    pub fn validate(&self) -> Result<(), ChannelError> {
        let ok = self.attenuation > 0.0
            && self.attenuation.is_finite()
            && self.exponent >= 0.0
            && self.exponent.is_finite()
            && self.shadow_sigma_db >= 0.0
            && self.shadow_sigma_db.is_finite()
            && self.ref_distance > 0.0
            && self.ref_distance.is_finite()
            && self.exclusion_radius > 0.0
            && self.exclusion_radius < self.cell_radius
            && self.cell_radius.is_finite();
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("path-loss parameters {self:?}")))
        }
    }

    /// Median user distance of the area-uniform annulus.
    pub fn median_distance(&self) -> f64 {
        (0.5 * (self.exclusion_radius.powi(2) + self.cell_radius.powi(2))).sqrt()
    }

    /// Link gain at distance `d` with shadowing factor `x` (linear).
    pub fn link_gain(&self, d: f64, x: f64) -> f64 {
        self.attenuation * x * (d / self.ref_distance).powf(-self.exponent)
    }

    /// Standard deviation of `ln X`.
    fn log_shadow_sigma(&self) -> f64 {
        self.shadow_sigma_db * std::f64::consts::LN_10 / 10.0
    }

    /// `P(β ≤ t)`, averaging the shadowing CDF over the distance law.
    pub fn link_gain_cdf(&self, t: f64) -> f64 {
        let (r0, r) = (self.exclusion_radius, self.cell_radius);
        let area = r * r - r0 * r0;
        let s = self.log_shadow_sigma();
        let lt = (t / self.attenuation).ln();
        if s == 0.0 {
            // deterministic in d: β ≤ t  ⇔  Γ ln(d/d0) ≥ −ln(t/A)
            if self.exponent == 0.0 {
                return if lt >= 0.0 { 1.0 } else { 0.0 };
            }
            let d_min = self.ref_distance * (-lt / self.exponent).exp();
            let d_min = d_min.clamp(r0, r);
            return (r * r - d_min * d_min) / area;
        }
        let normal = StdNormal::standard();
        integrate(
            |d: f64| {
                let u = (lt + self.exponent * (d / self.ref_distance).ln()) / s;
                normal.cdf(u) * 2.0 * d / area
            },
            r0,
            r,
            1e-14,
        )
    }

    /// Exact median of the link gain over drops and shadowing.
    pub fn median_link_gain(&self) -> Result<f64, ChannelError> {
        self.validate()?;
        if self.shadow_sigma_db == 0.0 {
            return Ok(self.nominal_median_link_gain());
        }
        // bracket in ln t around the shadow-free median, then bisect
        let centre = self.nominal_median_link_gain().ln();
        let span = 10.0 * self.log_shadow_sigma() + 1.0;
        let (mut lo, mut hi) = (centre - span, centre + span);
        let f = |lt: f64| self.link_gain_cdf(lt.exp()) - 0.5;
        if f(lo) > 0.0 || f(hi) < 0.0 {
            return Err(invalid("median bracket failed"));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-14 * (1.0 + mid.abs()) {
                break;
            }
        }
        Ok((0.5 * (lo + hi)).exp())
    }

    /// The link gain at the median distance without shadowing,
    /// `A (d_med/d0)^(−Γ)`; it equals the true median only when `σ = 0`.
    pub fn nominal_median_link_gain(&self) -> f64 {
        self.link_gain(self.median_distance(), 1.0)
    }
}

/// One dropped user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserDrop {
    pub distance: f64,
    pub shadowing: f64,
    pub link_gain: f64,
}

/// Drops `users` users uniformly over the annulus `[r0, r]`.
pub fn drop_users<R: Rng + ?Sized>(
    params: &PathLossParams,
    users: usize,
    rng: &mut R,
) -> Result<Vec<UserDrop>, ChannelError> {
    params.validate()?;
    let (r0, r) = (params.exclusion_radius, params.cell_radius);
    let shadow = Normal::new(0.0, params.shadow_sigma_db).map_err(|e| invalid(e.to_string()))?;
    Ok((0..users)
        .map(|_| {
            let u: f64 = rng.random();
            let distance = (r0 * r0 + u * (r * r - r0 * r0)).sqrt();
            let shadowing = 10f64.powf(shadow.sample(rng) / 10.0);
            UserDrop {
                distance,
                shadowing,
                link_gain: params.link_gain(distance, shadowing),
            }
        })
        .collect())
}

/// Cluster count, subrays per cluster and last-to-first cluster power ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterProfile {
    pub clusters: usize,
    pub subrays: usize,
    pub decay_ratio: f64,
}

impl Default for ClusterProfile {
    fn default() -> Self {
        Self {
            clusters: 6,
            subrays: 10,
            decay_ratio: 0.1,
        }
    }
}

impl ClusterProfile {
    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.clusters == 0 || self.subrays == 0 {
            return Err(invalid("cluster and subray counts must be positive"));
        }
        if !(self.decay_ratio > 0.0 && self.decay_ratio <= 1.0) {
            return Err(invalid(format!("decay ratio {} outside (0, 1]", self.decay_ratio)));
        }
        Ok(())
    }

    pub fn rays(&self) -> usize {
        self.clusters * self.subrays
    }
}

/// Per-ray powers, cluster-major: cluster powers decay geometrically from the
/// first to the last cluster by `decay_ratio`, sum to `beta`, and are split
/// equally over the subrays.
pub fn cluster_powers(beta: f64, profile: &ClusterProfile) -> Result<Vec<f64>, ChannelError> {
    profile.validate()?;
    let c = profile.clusters;
    let q = if c == 1 {
        1.0
    } else {
        profile.decay_ratio.powf(1.0 / (c - 1) as f64)
    };
    let weights: Vec<f64> = (0..c).map(|i| q.powi(i as i32)).collect();
    let total: f64 = weights.iter().sum();
    let s = profile.subrays;
    Ok(weights
        .iter()
        .flat_map(|w| std::iter::repeat_n(beta * w / total / s as f64, s))
        .collect())
}

/// A realised ray channel and the rays it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct RayChannel {
    pub ray_powers: Vec<f64>,
    pub phases: Vec<f64>,
    pub angles: Vec<RayAngle>,
    pub link_gain: f64,
    pub h: Vec<Complex64>,
}

/// Builds `h = Σ √β_r e^{jΘ_r} a(φ_r, θ_r)` with uniform phases.
pub fn sample_channel<R: Rng + ?Sized>(
    cfg: &ArrayConfig,
    model: &AngularModel,
    beta: f64,
    profile: &ClusterProfile,
    rng: &mut R,
) -> Result<RayChannel, ChannelError> {
    cfg.validate()?;
    model.validate()?;
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(invalid(format!("link gain {beta}")));
    }
    let ray_powers = cluster_powers(beta, profile)?;
    let angles = model.sample_ray_angles(profile.clusters, profile.subrays, rng);
    let phases: Vec<f64> = (0..angles.len()).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
    let m = cfg.num_antennas();
    let mut h = vec![Complex64::new(0.0, 0.0); m];
    let mut a = vec![Complex64::new(0.0, 0.0); m];
    for ((p, th), ang) in ray_powers.iter().zip(&phases).zip(&angles) {
        cfg.steering_into(ang.azimuth, ang.elevation, &mut a);
        let g = Complex64::from_polar(p.sqrt(), *th);
        for (hi, ai) in h.iter_mut().zip(&a) {
            *hi += g * ai;
        }
    }
    Ok(RayChannel {
        ray_powers,
        phases,
        angles,
        link_gain: beta,
        h,
    })
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            stderr: (var / n as f64).sqrt(),
            samples: n,
        }
    }
}

/// Samples per rng stream in the parallel estimators.
const BLOCK: usize = 1024;

/// Evaluates `f` on every sample index, in parallel blocks that each own a
/// generator stream, and returns the values in index order.
fn block_samples<F>(n: usize, seed: u64, domain: u64, f: F) -> Vec<f64>
where
    F: Fn(&mut ChaCha8Rng, &mut Vec<f64>, usize) + Sync,
{
    let blocks = n.div_ceil(BLOCK);
    let parts: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = trial_rng(seed, domain, b as u64);
            let count = BLOCK.min(n - b * BLOCK);
            let mut out = Vec::with_capacity(count);
            f(&mut rng, &mut out, count);
            out
        })
        .collect();
    parts.concat()
}

/// `E|a(φ,θ)ᴴ a(φ′,θ′)|² / M²` over independent ray-angle pairs.
pub fn empirical_nmi(
    cfg: &ArrayConfig,
    model: &AngularModel,
    samples: usize,
    seed: u64,
) -> Result<Estimate, ChannelError> {
    cfg.validate()?;
    model.validate()?;
    if samples < 2 {
        return Err(invalid("at least two samples are needed"));
    }
    let m = cfg.num_antennas();
    let norm = (m * m) as f64;
    let values = block_samples(samples, seed, domain::NMI, |rng, out, count| {
        let mut a = vec![Complex64::new(0.0, 0.0); m];
        let mut b = vec![Complex64::new(0.0, 0.0); m];
        for _ in 0..count {
            let r1 = model.sample_ray(rng);
            let r2 = model.sample_ray(rng);
            cfg.steering_into(r1.azimuth, r1.elevation, &mut a);
            cfg.steering_into(r2.azimuth, r2.elevation, &mut b);
            out.push(inner_product(&a, &b).norm_sqr() / norm);
        }
    });
    Ok(Estimate::from_samples(&values))
}

/// `E|h_lᴴ h_l′|² / (M² β β′)` over pairs of independent clustered channels
/// with link gains `betas`. The expectation does not depend on the cluster
/// profile or the gains.
pub fn empirical_nmi_channels(
    cfg: &ArrayConfig,
    model: &AngularModel,
    profile: &ClusterProfile,
    betas: (f64, f64),
    samples: usize,
    seed: u64,
) -> Result<Estimate, ChannelError> {
    cfg.validate()?;
    model.validate()?;
    profile.validate()?;
    if samples < 2 {
        return Err(invalid("at least two samples are needed"));
    }
    if !(betas.0 > 0.0 && betas.1 > 0.0) {
        return Err(invalid("link gains must be positive"));
    }
    let m = cfg.num_antennas() as f64;
    let norm = m * m * betas.0 * betas.1;
    let values = block_samples(samples, seed, domain::NMI_CHANNELS, |rng, out, count| {
        for _ in 0..count {
            // inputs were validated above
            let h1 = sample_channel(cfg, model, betas.0, profile, rng).expect("valid channel");
            let h2 = sample_channel(cfg, model, betas.1, profile, rng).expect("valid channel");
            out.push(inner_product(&h1.h, &h2.h).norm_sqr() / norm);
        }
    });
    Ok(Estimate::from_samples(&values))
}

/// SNR scale that puts the median received SNR `ρβ` at `target_db`, using
/// the exact median of the shadowed link gain.
pub fn calibrate_rho(params: &PathLossParams, target_db: f64) -> Result<f64, ChannelError> {
    Ok(10f64.powf(target_db / 10.0) / params.median_link_gain()?)
}

/// Post-MMSE SINR of user `l` for the channel matrix `H` (columns are
/// users): `h_lᴴ (H_I H_Iᴴ + I/ρ)⁻¹ h_l`, where `H_I` holds the other
/// users' channels, or all channels when `include_own` is set.
///
/// Uses the matrix inversion lemma, so only an `(L′×L′)` Hermitian system
/// with `L′` interferers is factorised:
/// `ρ (‖h‖² − cᴴ (I/ρ + H_IᴴH_I)⁻¹ c)` with `c = H_Iᴴ h`.
pub fn mmse_sinr(h: &DMatrix<Complex64>, l: usize, rho: f64, include_own: bool) -> Result<f64, ChannelError> {
    let users = h.ncols();
    if l >= users {
        return Err(ChannelError::UserIndex { index: l, users });
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(invalid(format!("rho {rho}")));
    }
    if h.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(ChannelError::Solver("non-finite channel entries"));
    }
    let own = h.column(l).into_owned();
    let cols: Vec<usize> = (0..users).filter(|&k| include_own || k != l).collect();
    let signal = own.norm_squared();
    if cols.is_empty() {
        return Ok(rho * signal);
    }
    let hi = h.select_columns(&cols);
    let mut gram = hi.adjoint() * &hi;
    for i in 0..gram.nrows() {
        gram[(i, i)] += Complex64::new(1.0 / rho, 0.0);
    }
    let c: DVector<Complex64> = hi.adjoint() * &own;
    let x = hermitian_solve(gram, &c)?;
    let quad = c.dotc(&x).re;
    // the subtraction loses relative accuracy when the interferers span h;
    // the exact value is positive, so clamp round-off at zero
    Ok((rho * (signal - quad)).max(0.0))
}

/// Cholesky solve with a small relative diagonal jitter as fallback.
fn hermitian_solve(a: DMatrix<Complex64>, b: &DVector<Complex64>) -> Result<DVector<Complex64>, ChannelError> {
    if let Some(ch) = a.clone().cholesky() {
        return Ok(ch.solve(b));
    }
    let scale = (0..a.nrows()).map(|i| a[(i, i)].re).fold(0.0, f64::max);
    let mut j = a;
    for i in 0..j.nrows() {
        j[(i, i)] += Complex64::new(1e-12 * scale, 0.0);
    }
    j.cholesky()
        .map(|ch| ch.solve(b))
        .ok_or(ChannelError::Solver("matrix is not positive definite"))
}

/// How per-user SINRs are averaged into one figure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SinrAveraging {
    /// Mean of linear SINR, reported in dB.
    #[default]
    Linear,
    /// Mean of per-user SINR in dB.
    Decibel,
}

/// Uplink SINR experiment settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinrConfig {
    pub users: usize,
    pub target_median_rx_snr_db: f64,
    pub path_loss: PathLossParams,
    pub profile: ClusterProfile,
    pub drops: usize,
    pub include_own: bool,
    pub averaging: SinrAveraging,
}

impl Default for SinrConfig {
    fn default() -> Self {
        Self {
            users: 4,
            target_median_rx_snr_db: -5.0,
            path_loss: PathLossParams::default(),
            profile: ClusterProfile::default(),
            drops: 200,
            include_own: false,
            averaging: SinrAveraging::Linear,
        }
    }
}

impl SinrConfig {
    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.users == 0 {
            return Err(invalid("at least one user is needed"));
        }
        if self.drops < 2 {
            return Err(invalid("at least two drops are needed"));
        }
        if !self.target_median_rx_snr_db.is_finite() {
            return Err(invalid("target SNR must be finite"));
        }
        self.path_loss.validate()?;
        self.profile.validate()
    }
}

/// Cell-average MMSE SINR in dB with the standard error of that figure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SinrEstimate {
    pub mean_db: f64,
    pub stderr_db: f64,
    pub rho: f64,
    pub drops: usize,
}

/// Per-user SINRs of one drop. Drop `index` always uses the same stream,
/// so runs over different arrays see the same users, rays and phases.
pub fn sinr_drop(
    cfg: &ArrayConfig,
    model: &AngularModel,
    setup: &SinrConfig,
    rho: f64,
    seed: u64,
    index: u64,
) -> Result<Vec<f64>, ChannelError> {
    let mut rng = trial_rng(seed, domain::SINR, index);
    let users = drop_users(&setup.path_loss, setup.users, &mut rng)?;
    let m = cfg.num_antennas();
    let mut h = DMatrix::<Complex64>::zeros(m, setup.users);
    for (k, u) in users.iter().enumerate() {
        let ch = sample_channel(cfg, model, u.link_gain, &setup.profile, &mut rng)?;
        h.set_column(k, &DVector::from_vec(ch.h));
    }
    (0..setup.users)
        .map(|l| mmse_sinr(&h, l, rho, setup.include_own))
        .collect()
}

/// Averages the MMSE SINR over users and drops.
pub fn simulate_sinr(
    cfg: &ArrayConfig,
    model: &AngularModel,
    setup: &SinrConfig,
    seed: u64,
) -> Result<SinrEstimate, ChannelError> {
    cfg.validate()?;
    model.validate()?;
    setup.validate()?;
    let rho = calibrate_rho(&setup.path_loss, setup.target_median_rx_snr_db)?;
    let per_drop: Vec<Vec<f64>> = (0..setup.drops as u64)
        .into_par_iter()
        .map(|i| sinr_drop(cfg, model, setup, rho, seed, i))
        .collect::<Result<_, _>>()?;
    let to_db = |x: f64| 10.0 * x.log10();
    let (mean_db, stderr_db) = match setup.averaging {
        SinrAveraging::Linear => {
            let means: Vec<f64> = per_drop
                .iter()
                .map(|d| d.iter().sum::<f64>() / d.len() as f64)
                .collect();
            let e = Estimate::from_samples(&means);
            // delta method for the dB transform
            (to_db(e.mean), 10.0 / std::f64::consts::LN_10 * e.stderr / e.mean)
        }
        SinrAveraging::Decibel => {
            let means: Vec<f64> = per_drop
                .iter()
                .map(|d| d.iter().map(|&x| to_db(x)).sum::<f64>() / d.len() as f64)
                .collect();
            let e = Estimate::from_samples(&means);
            (e.mean, e.stderr)
        }
    };
    Ok(SinrEstimate {
        mean_db,
        stderr_db,
        rho,
        drops: setup.drops,
    })
}
