//! Closed-form normalized mean interference.
//!
//! The pairwise term of the interference double sum is the expectation
//! `E[exp(j z1 sinθ sin(φ+A) + j z2 cosθ)]` over the composite azimuth φ and
//! elevation θ. Planar arrays (ULA, HURA, UCirA) only need the `z2 = 0` form
//! with radial argument `z = √(z1²+z2²)`; vertical arrays (VURA, UCylA) need
//! both. Both are evaluated as Bessel-product series weighted by the
//! characteristic functions of the two angles.

mod kappa;
mod series;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angular::{CharacteristicFunction, ModelError};
use crate::geometry::{ArrayConfig, GeometryError, TopologyKind};

pub use kappa::{kappa_closed_form, pair_params};
pub use series::{series_g, series_i, series_v};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NmiError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("element index {index} out of range for {antennas} antennas")]
    IndexOutOfRange { index: usize, antennas: usize },
    #[error("{series} series did not converge within the truncation caps (partial value {partial})")]
    NotConverged {
        series: &'static str,
        partial: Complex64,
    },
}

/// Stopping rules for the infinite series.
///
/// Harmonics `n` of the azimuth expansion are dropped once the azimuth
/// characteristic-function envelope is below `cf_floor` or the Bessel order
/// exceeds the point where every `J_n` of the argument is negligible. The
/// inner (elevation) sums stop once, beyond the oscillatory range of the
/// Bessel products, `window` consecutive terms satisfy
/// `|term| · k < tail_floor`, which bounds the neglected tail for terms that
/// decay at least like `k⁻²`. Exceeding `max_harmonic` or `max_inner`
/// reports a convergence failure instead of truncating silently.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub cf_floor: f64,
    pub tail_floor: f64,
    pub window: usize,
    pub max_harmonic: usize,
    pub max_inner: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            cf_floor: 1e-13,
            tail_floor: 1e-13,
            window: 8,
            max_harmonic: 4096,
            max_inner: 50_000,
        }
    }
}

impl TruncationPolicy {
    /// Both floors divided by `factor`.
    pub fn tightened(self, factor: f64) -> Self {
        Self {
            cf_floor: self.cf_floor / factor,
            tail_floor: self.tail_floor / factor,
            ..self
        }
    }

    /// Both hard caps doubled.
    pub fn with_doubled_caps(self) -> Self {
        Self {
            max_harmonic: 2 * self.max_harmonic,
            max_inner: 2 * self.max_inner,
            ..self
        }
    }
}

/// Arguments of one pairwise series term. For circular topologies `circle`
/// holds the differences `(a, b) = (sinΨ − sinΨ′, cosΨ − cosΨ′)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesParams {
    pub a: f64,
    pub z1: f64,
    pub z2: f64,
    pub circle: Option<(f64, f64)>,
}

impl SeriesParams {
    pub fn new(a: f64, z1: f64, z2: f64) -> Self {
        Self {
            a,
            z1,
            z2,
            circle: None,
        }
    }

    /// `√(z1² + z2²)`, the argument of the planar series.
    pub fn radial(&self) -> f64 {
        self.z1.hypot(self.z2)
    }
}

/// A closed-form NMI together with what it took to compute it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NmiValue {
    pub kappa: f64,
    pub topology: TopologyKind,
    pub antennas: usize,
    pub config: ArrayConfig,
    pub truncation: TruncationPolicy,
    /// Distinct series arguments evaluated.
    pub groups: usize,
    pub max_harmonic_used: usize,
    pub max_inner_used: usize,
}

/// Characteristic-function values at `0..len`, with the conjugate used for
/// negative arguments and direct evaluation beyond the table.
pub(crate) struct CfCache<'a> {
    cf: &'a dyn CharacteristicFunction,
    values: Vec<Complex64>,
    env: Vec<f64>,
}

impl<'a> CfCache<'a> {
    pub(crate) fn new(cf: &'a dyn CharacteristicFunction, len: usize) -> Self {
        Self {
            cf,
            values: (0..len as i64).map(|m| cf.cf(m)).collect(),
            env: (0..len as u64).map(|m| cf.envelope(m)).collect(),
        }
    }

    pub(crate) fn get(&self, m: i64) -> Complex64 {
        let k = m.unsigned_abs() as usize;
        let v = match self.values.get(k) {
            Some(v) => *v,
            None => self.cf.cf(k as i64),
        };
        if m < 0 {
            v.conj()
        } else {
            v
        }
    }

    pub(crate) fn env(&self, m: u64) -> f64 {
        match self.env.get(m as usize) {
            Some(e) => *e,
            None => self.cf.envelope(m),
        }
    }
}
