//! Topology parameters and the κ double sum.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::series::{harmonic_limit, harmonic_sum, planar_kernel, vertical_kernel, ElevationKernel};
use super::{CfCache, NmiError, NmiValue, SeriesParams, TruncationPolicy};
use crate::angular::{AngularModel, Plane};
use crate::geometry::{ArrayConfig, TopologyKind};

/// Elevation characteristic-function values tabulated per κ evaluation.
const KAPPA_CF_TABLE: usize = 1 << 16;

/// Per-axis indices of flat element `m` (Kronecker order, left factor slowest).
struct Axes {
    x: usize,
    y: usize,
    z: usize,
    r: usize,
}

fn axes(cfg: &ArrayConfig, m: usize) -> Axes {
    match cfg.kind {
        TopologyKind::Ula | TopologyKind::Hura => Axes {
            x: m / cfg.m_y,
            y: m % cfg.m_y,
            z: 0,
            r: 0,
        },
        TopologyKind::Vura => Axes {
            x: 0,
            y: m / cfg.m_z,
            z: m % cfg.m_z,
            r: 0,
        },
        TopologyKind::Ucira | TopologyKind::Ucyla => Axes {
            x: 0,
            y: 0,
            z: m % cfg.m_z,
            r: m / cfg.m_z,
        },
    }
}

fn angle(y: f64, x: f64) -> f64 {
    if x == 0.0 && y == 0.0 {
        0.0
    } else {
        y.atan2(x)
    }
}

/// Series arguments for the element pair `(m, m2)` (flat indices).
///
/// Linear and rectangular kinds use `z1 = 2π d_y Δy`, `z2 = 2π d_x Δx` (HURA,
/// ULA) or `z2 = 2π d_z Δz` (VURA); the planar angle is
/// `A = atan2(z2, z1)` for HURA/ULA and `0` for VURA. Circular kinds use the
/// chord between ring positions, `z1 = π d_r √(a²+b²) / sin(π/M_r)` and
/// `A = atan2(b, a)`, with `z2 = 2π d_z Δz` for the cylinder. All differences
/// are taken as `m − m2`, so the term equals
/// `E[exp(j2π (p_m − p_m2)·u)]` with `u` the unit arrival direction.
pub fn pair_params(cfg: &ArrayConfig, m: usize, m2: usize) -> Result<SeriesParams, NmiError> {
    let antennas = cfg.num_antennas();
    for index in [m, m2] {
        if index >= antennas {
            return Err(NmiError::IndexOutOfRange { index, antennas });
        }
    }
    let (p, q) = (axes(cfg, m), axes(cfg, m2));
    let diff = |a: usize, b: usize| a as f64 - b as f64;
    let two_pi = 2.0 * PI;
    Ok(match cfg.kind {
        TopologyKind::Ula | TopologyKind::Hura => {
            let z1 = two_pi * cfg.d_y * diff(p.y, q.y);
            let z2 = two_pi * cfg.d_x * diff(p.x, q.x);
            SeriesParams::new(angle(z2, z1), z1, z2)
        }
        TopologyKind::Vura => SeriesParams::new(
            0.0,
            two_pi * cfg.d_y * diff(p.y, q.y),
            two_pi * cfg.d_z * diff(p.z, q.z),
        ),
        TopologyKind::Ucira | TopologyKind::Ucyla => {
            let mr = cfg.m_r;
            let (psi_m, psi_q) = (cfg.ring_angle(p.r), cfg.ring_angle(q.r));
            let a = psi_m.sin() - psi_q.sin();
            let b = psi_m.cos() - psi_q.cos();
            let (a, b) = if p.r == q.r { (0.0, 0.0) } else { (a, b) };
            // |(a, b)| = 2|sin(πΔ/M_r)|; the shorter way round gives
            // bitwise-identical arguments for equal chords
            let step = (p.r + mr - q.r) % mr;
            let step = step.min(mr - step);
            let z1 = if step == 0 {
                0.0
            } else {
                PI * cfg.d_r * 2.0 * (PI * step as f64 / mr as f64).sin() / (PI / mr as f64).sin()
            };
            SeriesParams {
                a: angle(b, a),
                z1,
                z2: two_pi * cfg.d_z * diff(p.z, q.z),
                circle: Some((a, b)),
            }
        }
    })
}

struct GroupOutcome {
    sum_sq: f64,
    converged: bool,
    harmonics: usize,
    inner: usize,
}

/// Normalized mean interference of `cfg` under `model`:
/// `κ = (1/M²) Σ_{m,m′} |T(m, m′)|²` with `T` the pairwise series. Pairs are
/// grouped by their series arguments (most pairs of a regular array repeat
/// a handful of arguments) and groups are evaluated in parallel, then
/// reduced in a fixed order so the value does not depend on the thread
/// count.
pub fn kappa_closed_form(
    cfg: &ArrayConfig,
    model: &AngularModel,
    trunc: &TruncationPolicy,
) -> Result<NmiValue, NmiError> {
    cfg.validate()?;
    model.validate()?;
    let antennas = cfg.num_antennas();
    let mut value = NmiValue {
        kappa: 1.0,
        topology: cfg.kind,
        antennas,
        config: *cfg,
        truncation: *trunc,
        groups: 0,
        max_harmonic_used: 0,
        max_inner_used: 0,
    };
    if antennas == 1 {
        return Ok(value);
    }
    let psi_cf = model.plane_cf(Plane::Azimuth);
    let chi_cf = model.plane_cf(Plane::Elevation);
    let psi = CfCache::new(&psi_cf, KAPPA_CF_TABLE);
    let chi = CfCache::new(&chi_cf, KAPPA_CF_TABLE);

    let mut params = Vec::with_capacity(antennas * (antennas - 1) / 2);
    for m in 0..antennas {
        for m2 in m + 1..antennas {
            params.push(pair_params(cfg, m, m2)?);
        }
    }
    let outcomes: Vec<GroupOutcome> = if cfg.kind.is_vertical() {
        vertical_groups(&params, &psi, &chi, trunc, &mut value.groups)
    } else {
        planar_groups(&params, &psi, &chi, trunc, &mut value.groups)
    };

    let mut total = 0.0;
    let mut converged = true;
    for o in &outcomes {
        total += o.sum_sq;
        converged &= o.converged;
        value.max_harmonic_used = value.max_harmonic_used.max(o.harmonics);
        value.max_inner_used = value.max_inner_used.max(o.inner);
    }
    let m2 = (antennas * antennas) as f64;
    value.kappa = (antennas as f64 + 2.0 * total) / m2;
    if converged {
        Ok(value)
    } else {
        Err(NmiError::NotConverged {
            series: "kappa",
            partial: Complex64::new(value.kappa, 0.0),
        })
    }
}

fn limit(psi: &CfCache, z: f64, trunc: &TruncationPolicy) -> (usize, bool) {
    match harmonic_limit(psi, z, trunc) {
        Ok(n) => (n, true),
        Err(n) => (n, false),
    }
}

fn planar_groups(
    params: &[SeriesParams],
    psi: &CfCache,
    chi: &CfCache,
    trunc: &TruncationPolicy,
    groups: &mut usize,
) -> Vec<GroupOutcome> {
    let mut by_radius: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for p in params {
        by_radius.entry(p.radial().to_bits()).or_default().push(p.a);
    }
    *groups = by_radius.len();
    let work: Vec<(f64, Vec<f64>)> = by_radius
        .into_iter()
        .map(|(bits, angles)| (f64::from_bits(bits), angles))
        .collect();
    work.par_iter()
        .map(|(z, angles)| {
            let (n_max, ok) = limit(psi, *z, trunc);
            let kernel = planar_kernel(*z, n_max, chi, trunc);
            let sum_sq = angles
                .iter()
                .map(|a| harmonic_sum(&kernel.terms, *a, psi).norm_sqr())
                .sum();
            GroupOutcome {
                sum_sq,
                converged: ok && kernel.converged,
                harmonics: n_max,
                inner: kernel.inner_used,
            }
        })
        .collect()
}

fn vertical_groups(
    params: &[SeriesParams],
    psi: &CfCache,
    chi: &CfCache,
    trunc: &TruncationPolicy,
    groups: &mut usize,
) -> Vec<GroupOutcome> {
    // z2 → z1 → planar angles, with z1 made nonnegative by turning A by π
    let mut by_height: BTreeMap<u64, BTreeMap<u64, Vec<f64>>> = BTreeMap::new();
    for p in params {
        let (z1, a) = if p.z1 < 0.0 { (-p.z1, p.a + PI) } else { (p.z1, p.a) };
        by_height
            .entry(p.z2.to_bits())
            .or_default()
            .entry(z1.to_bits())
            .or_default()
            .push(a);
    }
    *groups = by_height.values().map(BTreeMap::len).sum();
    let work: Vec<(f64, Vec<(f64, Vec<f64>)>)> = by_height
        .into_iter()
        .map(|(zb, inner)| {
            let inner = inner
                .into_iter()
                .map(|(b, angles)| (f64::from_bits(b), angles))
                .collect();
            (f64::from_bits(zb), inner)
        })
        .collect();
    work.par_iter()
        .map(|(z2, inner)| {
            let mut elev = ElevationKernel::new(*z2, chi);
            let mut out = GroupOutcome {
                sum_sq: 0.0,
                converged: true,
                harmonics: 0,
                inner: 0,
            };
            for (z1, angles) in inner {
                let (n_max, ok) = limit(psi, *z1, trunc);
                let kernel = vertical_kernel(*z1, n_max, &mut elev, trunc);
                out.sum_sq += angles
                    .iter()
                    .map(|a| harmonic_sum(&kernel.terms, *a, psi).norm_sqr())
                    .sum::<f64>();
                out.converged &= ok && kernel.converged;
                out.harmonics = out.harmonics.max(n_max);
                out.inner = out.inner.max(kernel.inner_used);
            }
            out
        })
        .collect()
}
