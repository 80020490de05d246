//! Experiment runners behind the command-line tool: NMI versus array size,
//! NMI and MMSE SINR versus aperture, two-ray interference sweeps and
//! single-point evaluations. Every runner returns rows in a canonical order
//! that does not depend on how work was scheduled.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angular::AngularModel;
use crate::channel::{
    empirical_nmi, simulate_sinr, ChannelError, ClusterProfile, PathLossParams, SinrAveraging, SinrConfig,
};
use crate::geometry::{fits_aperture, ArrayConfig, GeometryError, TopologyKind};
use crate::nmi::{kappa_closed_form, NmiError, TruncationPolicy};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Nmi(#[from] NmiError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

fn config_error(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Config(msg.into())
}

/// Which angular model drives the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum AngleSet {
    #[default]
    Measured,
    Uniform,
}

impl AngleSet {
    pub fn model(self) -> AngularModel {
        match self {
            AngleSet::Measured => AngularModel::measured(),
            AngleSet::Uniform => AngularModel::uniform(),
        }
    }
}

impl std::str::FromStr for AngleSet {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "measured" => Ok(AngleSet::Measured),
            "uniform" => Ok(AngleSet::Uniform),
            other => Err(format!("unknown angle set {other:?} (expected measured or uniform)")),
        }
    }
}

/// Element spacing rule: a fixed spacing in wavelengths, or the largest
/// spacing that fits a square aperture of the given diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Fixed(f64),
    Constrained(f64),
}

impl Spacing {
    pub fn array(self, kind: TopologyKind, m: usize) -> Result<ArrayConfig, GeometryError> {
        match self {
            Spacing::Fixed(d) => ArrayConfig::uniform(kind, m, d),
            // a single element fits any aperture and has no spacing
            Spacing::Constrained(_) if m == 1 => ArrayConfig::uniform(kind, 1, 0.0),
            Spacing::Constrained(diag) => {
                let cfg = ArrayConfig::constrained(kind, m, diag)?;
                debug_assert!(fits_aperture(&cfg, diag, 1e-9));
                Ok(cfg)
            }
        }
    }
}

/// Default array sizes: perfect squares, so every topology is realisable.
pub const DEFAULT_M_GRID: [usize; 6] = [4, 16, 36, 64, 100, 144];
/// Default aperture diagonals for the aperture sweep, wavelengths.
pub const DEFAULT_D_GRID: [f64; 9] = [2.0, 4.0, 7.77, 12.0, 16.0, 24.0, 32.0, 48.0, 64.0];
/// Default aperture diagonal of constrained runs.
pub const DEFAULT_DIAGONAL: f64 = 7.77;

/// All experiment parameters. Every field has a default, so a flat TOML
/// file only needs the keys it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub topologies: Vec<TopologyKind>,
    /// Antenna counts; when unset, sweeps over M use [`DEFAULT_M_GRID`] and
    /// everything else uses 100.
    pub m: Option<Vec<usize>>,
    /// Fixed spacing, wavelengths.
    pub d: Option<f64>,
    /// Aperture diagonal(s), wavelengths.
    #[serde(rename = "D")]
    pub diagonal: Option<Vec<f64>>,
    pub angles: AngleSet,
    pub mc_samples: usize,
    pub sinr_drops: usize,
    pub seed: u64,
    pub users: usize,
    pub target_snr_db: f64,
    pub attenuation: f64,
    pub exponent: f64,
    pub shadow_sigma_db: f64,
    pub ref_distance: f64,
    pub cell_radius: f64,
    pub exclusion_radius: f64,
    pub clusters: usize,
    pub subrays: usize,
    pub decay_ratio: f64,
    pub include_own: bool,
    pub sinr_averaging: SinrAveraging,
    pub max_offset_deg: f64,
    pub step_deg: f64,
    pub cf_floor: f64,
    pub tail_floor: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let pl = PathLossParams::default();
        let profile = ClusterProfile::default();
        let sinr = SinrConfig::default();
        let trunc = TruncationPolicy::default();
        Self {
            topologies: TopologyKind::ALL.to_vec(),
            m: None,
            d: None,
            diagonal: None,
            angles: AngleSet::Measured,
            mc_samples: 20_000,
            sinr_drops: 500,
            seed: 1,
            users: sinr.users,
            target_snr_db: sinr.target_median_rx_snr_db,
            attenuation: pl.attenuation,
            exponent: pl.exponent,
            shadow_sigma_db: pl.shadow_sigma_db,
            ref_distance: pl.ref_distance,
            cell_radius: pl.cell_radius,
            exclusion_radius: pl.exclusion_radius,
            clusters: profile.clusters,
            subrays: profile.subrays,
            decay_ratio: profile.decay_ratio,
            include_own: sinr.include_own,
            sinr_averaging: sinr.averaging,
            max_offset_deg: 20.0,
            step_deg: 0.25,
            cf_floor: trunc.cf_floor,
            tail_floor: trunc.tail_floor,
        }
    }
}

impl ExperimentConfig {
    pub fn truncation(&self) -> TruncationPolicy {
        TruncationPolicy {
            cf_floor: self.cf_floor,
            tail_floor: self.tail_floor,
            ..TruncationPolicy::default()
        }
    }

    pub fn sinr_config(&self) -> SinrConfig {
        SinrConfig {
            users: self.users,
            target_median_rx_snr_db: self.target_snr_db,
            path_loss: PathLossParams {
                attenuation: self.attenuation,
                exponent: self.exponent,
                shadow_sigma_db: self.shadow_sigma_db,
                ref_distance: self.ref_distance,
                cell_radius: self.cell_radius,
                exclusion_radius: self.exclusion_radius,
            },
            profile: ClusterProfile {
                clusters: self.clusters,
                subrays: self.subrays,
                decay_ratio: self.decay_ratio,
            },
            drops: self.sinr_drops,
            include_own: self.include_own,
            averaging: self.sinr_averaging,
        }
    }

    fn topologies(&self) -> Result<&[TopologyKind], ExperimentError> {
        if self.topologies.is_empty() {
            return Err(config_error("no topologies selected"));
        }
        Ok(&self.topologies)
    }

    fn m_list(&self, default: &[usize]) -> Result<Vec<usize>, ExperimentError> {
        let m = self.m.clone().unwrap_or_else(|| default.to_vec());
        if m.is_empty() || m.contains(&0) {
            return Err(config_error("antenna counts must be positive"));
        }
        Ok(m)
    }

    fn single_m(&self) -> Result<usize, ExperimentError> {
        match self.m_list(&[100])?.as_slice() {
            [m] => Ok(*m),
            _ => Err(config_error("exactly one antenna count is required")),
        }
    }

    /// The spacing rule of a single-aperture run; `d = 0.5` when neither
    /// spacing nor aperture is given and `fallback` is `None`.
    fn single_spacing(&self, fallback: Option<Spacing>) -> Result<Spacing, ExperimentError> {
        match (self.d, &self.diagonal) {
            (Some(_), Some(_)) => Err(config_error("set either a spacing d or an aperture D, not both")),
            (Some(d), None) => Ok(Spacing::Fixed(d)),
            (None, Some(list)) => match list.as_slice() {
                [diag] => Ok(Spacing::Constrained(*diag)),
                _ => Err(config_error("exactly one aperture D is required")),
            },
            (None, None) => Ok(fallback.unwrap_or(Spacing::Fixed(0.5))),
        }
    }

    fn validate_offsets(&self) -> Result<(), ExperimentError> {
        if !(self.step_deg > 0.0 && self.max_offset_deg >= 0.0 && self.max_offset_deg <= 90.0) {
            return Err(config_error("offsets need step_deg > 0 and 0 ≤ max_offset_deg ≤ 90"));
        }
        Ok(())
    }
}

/// A CSV table with a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<String>>,
}

impl Table {
    /// Comma-separated text; numbers use the shortest representation that
    /// round-trips, independent of locale.
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

/// The outcome of a runner: typed rows plus non-fatal failures, which are
/// reported as NaN in the rows.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput<R> {
    pub rows: Vec<R>,
    pub failures: Vec<String>,
}

fn closed_form_or_nan(
    cfg: &ArrayConfig,
    model: &AngularModel,
    trunc: &TruncationPolicy,
    label: String,
) -> Result<(f64, Option<String>), ExperimentError> {
    match kappa_closed_form(cfg, model, trunc) {
        Ok(v) => Ok((v.kappa, None)),
        Err(e @ NmiError::NotConverged { .. }) => Ok((f64::NAN, Some(format!("{label}: {e}")))),
        Err(e) => Err(e.into()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepMRow {
    pub topology: TopologyKind,
    pub m: usize,
    pub d_used: f64,
    pub kappa_closed: f64,
    pub kappa_mc: f64,
    pub stderr: f64,
}

pub const SWEEP_M_HEADER: &[&str] = &["topology", "M", "d_used", "kappa_closed", "kappa_mc", "stderr"];

impl SweepMRow {
    fn fields(&self) -> Vec<String> {
        vec![
            self.topology.name().to_string(),
            self.m.to_string(),
            num(self.d_used),
            num(self.kappa_closed),
            num(self.kappa_mc),
            num(self.stderr),
        ]
    }
}

fn nmi_row(
    spec: &ExperimentConfig,
    kind: TopologyKind,
    m: usize,
    spacing: Spacing,
) -> Result<(SweepMRow, Option<String>), ExperimentError> {
    let cfg = spacing.array(kind, m)?;
    let model = spec.angles.model();
    let (kappa_closed, failure) = closed_form_or_nan(&cfg, &model, &spec.truncation(), format!("{kind} M={m}"))?;
    let (kappa_mc, stderr) = if spec.mc_samples >= 2 {
        let e = empirical_nmi(&cfg, &model, spec.mc_samples, spec.seed)?;
        (e.mean, e.stderr)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok((
        SweepMRow {
            topology: kind,
            m,
            d_used: cfg.spacing(),
            kappa_closed,
            kappa_mc,
            stderr,
        },
        failure,
    ))
}

fn collect<R>(results: Vec<Result<(R, Option<String>), ExperimentError>>) -> Result<RunOutput<R>, ExperimentError> {
    let mut rows = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for r in results {
        let (row, failure) = r?;
        rows.push(row);
        failures.extend(failure);
    }
    Ok(RunOutput { rows, failures })
}

/// κ against the antenna count, closed form and Monte Carlo, for each
/// topology. Rows are ordered by topology, then M.
pub fn run_sweep_m(spec: &ExperimentConfig) -> Result<RunOutput<SweepMRow>, ExperimentError> {
    let spacing = spec.single_spacing(None)?;
    let ms = spec.m_list(&DEFAULT_M_GRID)?;
    let mut points = Vec::new();
    for &kind in spec.topologies()? {
        for &m in &ms {
            // reject unrealisable sizes before doing any work
            spacing.array(kind, m)?;
            points.push((kind, m));
        }
    }
    let results = points
        .par_iter()
        .map(|&(kind, m)| nmi_row(spec, kind, m, spacing))
        .collect();
    collect(results)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepDRow {
    pub topology: TopologyKind,
    pub diagonal: f64,
    pub kappa_closed: f64,
    pub sinr_db_mean: f64,
    pub sinr_stderr: f64,
}

pub const SWEEP_D_HEADER: &[&str] = &["topology", "D", "kappa_closed", "sinr_db_mean", "sinr_stderr"];

impl SweepDRow {
    fn fields(&self) -> Vec<String> {
        vec![
            self.topology.name().to_string(),
            num(self.diagonal),
            num(self.kappa_closed),
            num(self.sinr_db_mean),
            num(self.sinr_stderr),
        ]
    }
}

/// κ and cell-average MMSE SINR against the aperture diagonal at a fixed
/// antenna count. Every point reuses the same user drops and rays, so the
/// comparison between points is paired. Rows are ordered by topology, then D.
pub fn run_sweep_d(spec: &ExperimentConfig) -> Result<RunOutput<SweepDRow>, ExperimentError> {
    if spec.d.is_some() {
        return Err(config_error("the aperture sweep takes apertures D, not a spacing d"));
    }
    let m = spec.single_m()?;
    let grid = spec.diagonal.clone().unwrap_or_else(|| DEFAULT_D_GRID.to_vec());
    if grid.is_empty() {
        return Err(config_error("empty aperture grid"));
    }
    let sinr = spec.sinr_config();
    sinr.validate()?;
    let model = spec.angles.model();
    let mut points = Vec::new();
    for &kind in spec.topologies()? {
        for &diag in &grid {
            Spacing::Constrained(diag).array(kind, m)?;
            points.push((kind, diag));
        }
    }
    let results = points
        .par_iter()
        .map(|&(kind, diag)| {
            let cfg = Spacing::Constrained(diag).array(kind, m)?;
            let (kappa_closed, failure) =
                closed_form_or_nan(&cfg, &model, &spec.truncation(), format!("{kind} D={diag}"))?;
            let s = simulate_sinr(&cfg, &model, &sinr, spec.seed)?;
            Ok((
                SweepDRow {
                    topology: kind,
                    diagonal: diag,
                    kappa_closed,
                    sinr_db_mean: s.mean_db,
                    sinr_stderr: s.stderr_db,
                },
                failure,
            ))
        })
        .collect();
    collect(results)
}

/// Which angles separate the two rays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OffsetCase {
    Azimuth,
    Elevation,
    Joint,
}

impl OffsetCase {
    pub const ALL: [OffsetCase; 3] = [OffsetCase::Azimuth, OffsetCase::Elevation, OffsetCase::Joint];

    /// `(dφ, dθ)` for an offset, in the same unit.
    pub fn split(self, offset: f64) -> (f64, f64) {
        match self {
            OffsetCase::Azimuth => (offset, 0.0),
            OffsetCase::Elevation => (0.0, offset),
            OffsetCase::Joint => (offset, offset),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoRayRow {
    pub topology: TopologyKind,
    pub case: OffsetCase,
    pub dphi_deg: f64,
    pub dtheta_deg: f64,
    pub i_raw: f64,
    pub i_normalized: f64,
}

pub const TWO_RAY_HEADER: &[&str] = &["topology", "dphi_deg", "dtheta_deg", "I_raw", "I_normalized"];

impl TwoRayRow {
    fn fields(&self) -> Vec<String> {
        vec![
            self.topology.name().to_string(),
            num(self.dphi_deg),
            num(self.dtheta_deg),
            num(self.i_raw),
            num(self.i_normalized),
        ]
    }
}

/// Interference between a ray at broadside `(0, π/2)` and a ray offset by
/// `(dφ, dθ)` degrees.
pub fn two_ray_at(cfg: &ArrayConfig, dphi_deg: f64, dtheta_deg: f64) -> Result<(f64, f64), GeometryError> {
    let r = cfg.two_ray_interference(0.0, PI / 2.0, dphi_deg.to_radians(), PI / 2.0 + dtheta_deg.to_radians())?;
    Ok((r.raw, r.normalized))
}

/// Two-ray interference against azimuth-only, elevation-only and joint
/// offsets. Rows are ordered by case, topology, then offset.
pub fn run_two_ray(spec: &ExperimentConfig) -> Result<RunOutput<TwoRayRow>, ExperimentError> {
    spec.validate_offsets()?;
    let m = spec.single_m()?;
    let spacing = spec.single_spacing(Some(Spacing::Constrained(DEFAULT_DIAGONAL)))?;
    let steps = (spec.max_offset_deg / spec.step_deg + 1e-9).floor() as usize;
    let mut rows = Vec::new();
    for case in OffsetCase::ALL {
        for &kind in spec.topologies()? {
            let cfg = spacing.array(kind, m)?;
            for k in 0..=steps {
                let (dphi_deg, dtheta_deg) = case.split(k as f64 * spec.step_deg);
                let (i_raw, i_normalized) = two_ray_at(&cfg, dphi_deg, dtheta_deg)?;
                rows.push(TwoRayRow {
                    topology: kind,
                    case,
                    dphi_deg,
                    dtheta_deg,
                    i_raw,
                    i_normalized,
                });
            }
        }
    }
    Ok(RunOutput {
        rows,
        failures: Vec::new(),
    })
}

/// The smallest offset (degrees) of the given kind at which the normalised
/// two-ray interference drops below `threshold`: a scan with step
/// `step_deg` up to `max_deg`, refined by bisection. `None` when it never
/// drops below the threshold in range.
pub fn resolution_deg(
    cfg: &ArrayConfig,
    case: OffsetCase,
    threshold: f64,
    step_deg: f64,
    max_deg: f64,
) -> Result<Option<f64>, GeometryError> {
    let below = |x: f64| -> Result<bool, GeometryError> {
        let (dp, dt) = case.split(x);
        Ok(two_ray_at(cfg, dp, dt)?.1 < threshold)
    };
    let mut prev = 0.0;
    let steps = (max_deg / step_deg).ceil() as usize;
    for k in 1..=steps {
        let x = (k as f64 * step_deg).min(max_deg);
        if below(x)? {
            let (mut lo, mut hi) = (prev, x);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if below(mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(Some(hi));
        }
        prev = x;
    }
    Ok(None)
}

/// What a single-point run evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Nmi,
    Sinr,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SinrPointRow {
    pub topology: TopologyKind,
    pub m: usize,
    pub d_used: f64,
    pub sinr_db_mean: f64,
    pub sinr_stderr: f64,
}

pub const SINR_POINT_HEADER: &[&str] = &["topology", "M", "d_used", "sinr_db_mean", "sinr_stderr"];

impl SinrPointRow {
    fn fields(&self) -> Vec<String> {
        vec![
            self.topology.name().to_string(),
            self.m.to_string(),
            num(self.d_used),
            num(self.sinr_db_mean),
            num(self.sinr_stderr),
        ]
    }
}

/// A single evaluated configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum PointRecord {
    Nmi(SweepMRow),
    Sinr(SinrPointRow),
}

/// Evaluates one configuration: a single topology, antenna count and
/// spacing rule.
pub fn run_point(spec: &ExperimentConfig, metric: Metric) -> Result<RunOutput<PointRecord>, ExperimentError> {
    let kind = match spec.topologies()? {
        [kind] => *kind,
        _ => return Err(config_error("a point run takes exactly one topology")),
    };
    let m = spec.single_m()?;
    let spacing = spec.single_spacing(None)?;
    let (record, failure) = match metric {
        Metric::Nmi => {
            let (row, failure) = nmi_row(spec, kind, m, spacing)?;
            (PointRecord::Nmi(row), failure)
        }
        Metric::Sinr => {
            let cfg = spacing.array(kind, m)?;
            let s = simulate_sinr(&cfg, &spec.angles.model(), &spec.sinr_config(), spec.seed)?;
            (
                PointRecord::Sinr(SinrPointRow {
                    topology: kind,
                    m,
                    d_used: cfg.spacing(),
                    sinr_db_mean: s.mean_db,
                    sinr_stderr: s.stderr_db,
                }),
                None,
            )
        }
    };
    Ok(RunOutput {
        rows: vec![record],
        failures: failure.into_iter().collect(),
    })
}

impl RunOutput<SweepMRow> {
    pub fn table(&self) -> Table {
        Table {
            header: SWEEP_M_HEADER,
            rows: self.rows.iter().map(SweepMRow::fields).collect(),
        }
    }
}

impl RunOutput<SweepDRow> {
    pub fn table(&self) -> Table {
        Table {
            header: SWEEP_D_HEADER,
            rows: self.rows.iter().map(SweepDRow::fields).collect(),
        }
    }
}

impl RunOutput<TwoRayRow> {
    pub fn table(&self) -> Table {
        Table {
            header: TWO_RAY_HEADER,
            rows: self.rows.iter().map(TwoRayRow::fields).collect(),
        }
    }
}

impl RunOutput<PointRecord> {
    pub fn table(&self) -> Table {
        let header = match self.rows.first() {
            Some(PointRecord::Sinr(_)) => SINR_POINT_HEADER,
            _ => SWEEP_M_HEADER,
        };
        Table {
            header,
            rows: self
                .rows
                .iter()
                .map(|r| match r {
                    PointRecord::Nmi(row) => row.fields(),
                    PointRecord::Sinr(row) => row.fields(),
                })
                .collect(),
        }
    }
}
