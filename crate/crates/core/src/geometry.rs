//! Antenna topologies, element placement and steering vectors.
//!
//! Coordinates are in wavelengths. Azimuth φ is measured from the x-axis in
//! the x-y plane and elevation θ from the z-axis, so broadside is
//! `(φ, θ) = (0, π/2)`. Kronecker-structured arrays order their elements with
//! the left factor varying slowest: HURA is `a_x ⊗ a_y`, VURA `a_y ⊗ a_z` and
//! UCylA `a_r ⊗ a_z`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("{kind} needs {expected}, got {got}")]
    Shape {
        kind: TopologyKind,
        expected: &'static str,
        got: String,
    },
    #[error("spacing on a populated axis must be positive and finite, got {0}")]
    Spacing(f64),
    #[error("{kind} with M = {m} cannot be split into equal square axes")]
    NotSquare { kind: TopologyKind, m: usize },
    #[error("a space constraint needs at least two antennas, got {0}")]
    TooFewAntennas(usize),
    #[error("aperture diagonal must be positive and finite, got {0}")]
    Aperture(f64),
    #[error("azimuth {0} outside [-π, π]")]
    Azimuth(f64),
    #[error("elevation {0} outside [0, π]")]
    Elevation(f64),
    #[error("unknown topology '{0}'")]
    UnknownTopology(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TopologyKind {
    #[serde(rename = "ULA")]
    Ula,
    #[serde(rename = "HURA")]
    Hura,
    #[serde(rename = "VURA")]
    Vura,
    #[serde(rename = "UCirA")]
    Ucira,
    #[serde(rename = "UCylA")]
    Ucyla,
}

impl TopologyKind {
    pub const ALL: [TopologyKind; 5] = [
        TopologyKind::Ula,
        TopologyKind::Hura,
        TopologyKind::Vura,
        TopologyKind::Ucira,
        TopologyKind::Ucyla,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Ula => "ULA",
            Self::Hura => "HURA",
            Self::Vura => "VURA",
            Self::Ucira => "UCirA",
            Self::Ucyla => "UCylA",
        }
    }

    /// Whether the antenna count is split evenly over two axes.
    pub fn is_square_split(self) -> bool {
        matches!(self, Self::Hura | Self::Vura | Self::Ucyla)
    }

    /// Whether the array extends along z.
    pub fn is_vertical(self) -> bool {
        matches!(self, Self::Vura | Self::Ucyla)
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TopologyKind {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| GeometryError::UnknownTopology(s.to_string()))
    }
}

/// Per-axis antenna counts and spacings; unused axes have count 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    pub kind: TopologyKind,
    pub m_x: usize,
    pub m_y: usize,
    pub m_z: usize,
    pub m_r: usize,
    pub d_x: f64,
    pub d_y: f64,
    pub d_z: f64,
    pub d_r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntennaPosition {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Two-ray interference `|a(φ1,θ1)ᴴ a(φ2,θ2)|²`, raw and divided by `M²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoRayInterference {
    pub raw: f64,
    pub normalized: f64,
}

impl ArrayConfig {
    fn blank(kind: TopologyKind) -> Self {
        Self {
            kind,
            m_x: 1,
            m_y: 1,
            m_z: 1,
            m_r: 1,
            d_x: 0.0,
            d_y: 0.0,
            d_z: 0.0,
            d_r: 0.0,
        }
    }

    pub fn ula(m: usize, d: f64) -> Result<Self, GeometryError> {
        Self {
            m_y: m,
            d_y: d,
            ..Self::blank(TopologyKind::Ula)
        }
        .validated()
    }

    pub fn hura(m_x: usize, m_y: usize, d_x: f64, d_y: f64) -> Result<Self, GeometryError> {
        Self {
            m_x,
            m_y,
            d_x,
            d_y,
            ..Self::blank(TopologyKind::Hura)
        }
        .validated()
    }

    pub fn vura(m_y: usize, m_z: usize, d_y: f64, d_z: f64) -> Result<Self, GeometryError> {
        Self {
            m_y,
            m_z,
            d_y,
            d_z,
            ..Self::blank(TopologyKind::Vura)
        }
        .validated()
    }

    pub fn ucira(m_r: usize, d_r: f64) -> Result<Self, GeometryError> {
        Self {
            m_r,
            d_r,
            ..Self::blank(TopologyKind::Ucira)
        }
        .validated()
    }

    pub fn ucyla(m_r: usize, m_z: usize, d_r: f64, d_z: f64) -> Result<Self, GeometryError> {
        Self {
            m_r,
            m_z,
            d_r,
            d_z,
            ..Self::blank(TopologyKind::Ucyla)
        }
        .validated()
    }

    /// `M` antennas with the same spacing `d` on every populated axis;
    /// two-axis topologies use a `√M × √M` split.
    pub fn uniform(kind: TopologyKind, m: usize, d: f64) -> Result<Self, GeometryError> {
        if m == 0 {
            return Err(GeometryError::Shape {
                kind,
                expected: "at least one antenna",
                got: "0".into(),
            });
        }
        let side = || exact_sqrt(m).ok_or(GeometryError::NotSquare { kind, m });
        match kind {
            TopologyKind::Ula => Self::ula(m, d),
            TopologyKind::Ucira => Self::ucira(m, d),
            TopologyKind::Hura => side().and_then(|s| Self::hura(s, s, d, d)),
            TopologyKind::Vura => side().and_then(|s| Self::vura(s, s, d, d)),
            TopologyKind::Ucyla => side().and_then(|s| Self::ucyla(s, s, d, d)),
        }
    }

    /// `M` antennas with the spacing that fits the aperture of diagonal `diag`.
    pub fn constrained(kind: TopologyKind, m: usize, diag: f64) -> Result<Self, GeometryError> {
        let d = spacing_under_constraint(kind, m, diag)?;
        Self::uniform(kind, m, d)
    }

    fn validated(self) -> Result<Self, GeometryError> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let (expected, ok) = match self.kind {
            TopologyKind::Ula => ("only m_y populated", self.m_x == 1 && self.m_z == 1 && self.m_r == 1),
            TopologyKind::Hura => ("only m_x, m_y populated", self.m_z == 1 && self.m_r == 1),
            TopologyKind::Vura => ("only m_y, m_z populated", self.m_x == 1 && self.m_r == 1),
            TopologyKind::Ucira => ("only m_r populated", self.m_x == 1 && self.m_y == 1 && self.m_z == 1),
            TopologyKind::Ucyla => ("only m_r, m_z populated", self.m_x == 1 && self.m_y == 1),
        };
        let counts = [self.m_x, self.m_y, self.m_z, self.m_r];
        if !ok || counts.contains(&0) {
            return Err(GeometryError::Shape {
                kind: self.kind,
                expected,
                got: format!("m_x={} m_y={} m_z={} m_r={}", self.m_x, self.m_y, self.m_z, self.m_r),
            });
        }
        for (m, d) in [(self.m_x, self.d_x), (self.m_y, self.d_y), (self.m_z, self.d_z), (self.m_r, self.d_r)] {
            if !d.is_finite() || d < 0.0 || (m > 1 && d <= 0.0) {
                return Err(GeometryError::Spacing(d));
            }
        }
        Ok(())
    }

    pub fn num_antennas(&self) -> usize {
        self.m_x * self.m_y * self.m_z * self.m_r
    }

    /// The spacing reported for sweeps: the horizontal spacing of the array
    /// (all populated axes share it for configs built by [`Self::uniform`]).
    pub fn spacing(&self) -> f64 {
        match self.kind {
            TopologyKind::Ula | TopologyKind::Hura | TopologyKind::Vura => self.d_y,
            TopologyKind::Ucira | TopologyKind::Ucyla => self.d_r,
        }
    }

    /// Radius of the circle for circular kinds, chosen so that adjacent
    /// elements are `d_r` apart.
    pub fn radius(&self) -> f64 {
        if self.m_r < 2 {
            0.0
        } else {
            self.d_r / (2.0 * (PI / self.m_r as f64).sin())
        }
    }

    /// Angle of circular element `m`.
    pub fn ring_angle(&self, m: usize) -> f64 {
        2.0 * PI * m as f64 / self.m_r as f64
    }

    pub fn antenna_positions(&self) -> Vec<AntennaPosition> {
        let mut out = Vec::with_capacity(self.num_antennas());
        match self.kind {
            TopologyKind::Ula | TopologyKind::Hura | TopologyKind::Vura => {
                for ix in 0..self.m_x {
                    for iy in 0..self.m_y {
                        for iz in 0..self.m_z {
                            out.push(AntennaPosition {
                                x: ix as f64 * self.d_x,
                                y: iy as f64 * self.d_y,
                                z: iz as f64 * self.d_z,
                            });
                        }
                    }
                }
            }
            TopologyKind::Ucira | TopologyKind::Ucyla => {
                let r = self.radius();
                for ir in 0..self.m_r {
                    let psi = self.ring_angle(ir);
                    for iz in 0..self.m_z {
                        out.push(AntennaPosition {
                            x: r * psi.cos(),
                            y: r * psi.sin(),
                            z: iz as f64 * self.d_z,
                        });
                    }
                }
            }
        }
        out
    }

    /// Steering vector at `(φ, θ)`, built from the per-axis factors.
    pub fn steering_vector(&self, phi: f64, theta: f64) -> Result<Vec<Complex64>, GeometryError> {
        check_angles(phi, theta)?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.num_antennas()];
        self.steering_into(phi, theta, &mut out);
        Ok(out)
    }

    /// Writes the steering vector into `out` without checking the angles.
    pub fn steering_into(&self, phi: f64, theta: f64, out: &mut [Complex64]) {
        assert_eq!(out.len(), self.num_antennas());
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        let linear = |count: usize, step: f64| -> Vec<Complex64> {
            (0..count)
                .map(|i| Complex64::cis(2.0 * PI * step * i as f64))
                .collect()
        };
        let (outer, inner) = match self.kind {
            TopologyKind::Ula | TopologyKind::Hura => (
                linear(self.m_x, self.d_x * st * cp),
                linear(self.m_y, self.d_y * st * sp),
            ),
            TopologyKind::Vura => (
                linear(self.m_y, self.d_y * st * sp),
                linear(self.m_z, self.d_z * ct),
            ),
            TopologyKind::Ucira | TopologyKind::Ucyla => {
                let coef = if self.m_r < 2 {
                    0.0
                } else {
                    PI * self.d_r / (PI / self.m_r as f64).sin()
                };
                let ring = (0..self.m_r)
                    .map(|i| Complex64::cis(coef * st * (phi - self.ring_angle(i)).cos()))
                    .collect();
                (ring, linear(self.m_z, self.d_z * ct))
            }
        };
        for (i, o) in outer.iter().enumerate() {
            for (j, v) in inner.iter().enumerate() {
                out[i * inner.len() + j] = o * v;
            }
        }
    }

    /// `|a(φ1,θ1)ᴴ a(φ2,θ2)|²` and its value divided by `M²`.
    pub fn two_ray_interference(
        &self,
        phi1: f64,
        theta1: f64,
        phi2: f64,
        theta2: f64,
    ) -> Result<TwoRayInterference, GeometryError> {
        let a = self.steering_vector(phi1, theta1)?;
        let b = self.steering_vector(phi2, theta2)?;
        let raw = inner_product(&a, &b).norm_sqr();
        let m = self.num_antennas() as f64;
        Ok(TwoRayInterference {
            raw,
            normalized: raw / (m * m),
        })
    }
}

/// `aᴴ b`.
pub fn inner_product(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Steering vector from explicit element positions:
/// `exp(j2π(x sinθ cosφ + y sinθ sinφ + z cosθ))`.
pub fn steering_from_positions(positions: &[AntennaPosition], phi: f64, theta: f64) -> Vec<Complex64> {
    let u = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
    positions
        .iter()
        .map(|p| Complex64::cis(2.0 * PI * (p.x * u[0] + p.y * u[1] + p.z * u[2])))
        .collect()
}

pub fn check_angles(phi: f64, theta: f64) -> Result<(), GeometryError> {
    if !(-PI..=PI).contains(&phi) {
        return Err(GeometryError::Azimuth(phi));
    }
    if !(0.0..=PI).contains(&theta) {
        return Err(GeometryError::Elevation(theta));
    }
    Ok(())
}

pub(crate) fn exact_sqrt(m: usize) -> Option<usize> {
    let s = (m as f64).sqrt().round() as usize;
    (s * s == m).then_some(s)
}

/// Element spacing that fits `M` antennas of the given topology inside the
/// square aperture whose diagonal is `diag` wavelengths. Linear layouts run
/// along the diagonal; planar and circular layouts fill the square.
pub fn spacing_under_constraint(kind: TopologyKind, m: usize, diag: f64) -> Result<f64, GeometryError> {
    if m < 2 {
        return Err(GeometryError::TooFewAntennas(m));
    }
    if !(diag > 0.0 && diag.is_finite()) {
        return Err(GeometryError::Aperture(diag));
    }
    let side = diag * FRAC_1_SQRT_2;
    let root = || exact_sqrt(m).ok_or(GeometryError::NotSquare { kind, m });
    Ok(match kind {
        TopologyKind::Ula => diag / (m - 1) as f64,
        TopologyKind::Ucira => side * (PI / m as f64).sin(),
        TopologyKind::Hura => side / (root()? - 1) as f64,
        TopologyKind::Ucyla => side * (PI / root()? as f64).sin(),
        TopologyKind::Vura => diag / (root()? - 1) as f64,
    })
}

/// Largest distance between two elements projected onto the x-y plane.
pub fn azimuth_diameter(positions: &[AntennaPosition]) -> f64 {
    let mut best: f64 = 0.0;
    for (i, p) in positions.iter().enumerate() {
        for q in &positions[i + 1..] {
            best = best.max((p.x - q.x).hypot(p.y - q.y));
        }
    }
    best
}

/// Side lengths of the axis-aligned x-y bounding box.
pub fn azimuth_bounding_box(positions: &[AntennaPosition]) -> (f64, f64) {
    let span = |f: fn(&AntennaPosition) -> f64| {
        let lo = positions.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = positions.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    };
    (span(|p| p.x), span(|p| p.y))
}

/// Whether the layout fits the aperture with diagonal `diag`: collinear
/// layouts must span at most `diag`, all others must fit the `diag/√2`
/// square.
pub fn fits_aperture(cfg: &ArrayConfig, diag: f64, tol: f64) -> bool {
    let pos = cfg.antenna_positions();
    if azimuth_diameter(&pos) > diag + tol {
        return false;
    }
    match cfg.kind {
        TopologyKind::Ula | TopologyKind::Vura => true,
        _ => {
            let (w, h) = azimuth_bounding_box(&pos);
            let side = diag * FRAC_1_SQRT_2;
            w <= side + tol && h <= side + tol
        }
    }
}
