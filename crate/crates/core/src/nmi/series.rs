//! Bessel-product series for the pairwise expectations.
//!
//! On `θ ∈ [0, π]`,
//! `J_n(z sinθ) = Σ_k (−1)^{k+p(n)} J_{|n|/2−k}(z/2) J_{|n|/2+k}(z/2) e^{j2kθ}`
//! with `p(n) = min(n, 0)`. Combined with the Jacobi–Anger expansion in
//! azimuth this gives
//!
//! `I(A, z) = Σ_n (−1)^{p(n)} ψ(n) e^{jnA} S_{|n|}`,
//! `S_n = Σ_k (−1)^k χ(2k) J_{n/2−k}(z/2) J_{n/2+k}(z/2)`,
//!
//! and, with `w(k) = E[e^{j2kθ} e^{j z2 cosθ}]`,
//!
//! `V(A, z1, z2) = Σ_n (−1)^{p(n)} ψ(n) e^{jnA} R_{|n|}`,
//! `R_n = Σ_k (−1)^k w(k) J_{n/2−k}(z1/2) J_{n/2+k}(z1/2)`.
//!
//! Expanding `e^{j z2 cosθ}` over `[0, π]` in `e^{j2qθ}` gives
//! `w(k) = Σ_q (−1)^q G(q) χ(2(k+q))`. The `J_{2q}` part of `G` is summed
//! directly; its correction part, a Fourier series of `cos((2k′−1)θ)` on
//! `[0, π]`, is summed over `q` in closed form, leaving
//! `w(k) = Σ_p (j s)^p J_p(|z2|) χ(2k+p)` with `s = sign(z2)`, which converges
//! as fast as `J_p(|z2|)` decays in `p`.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{CfCache, NmiError, SeriesParams, TruncationPolicy};
use crate::angular::CharacteristicFunction;
use crate::bessel::{order_decay_bound, BesselTable};

/// Length of characteristic-function tables for one-off series calls.
const LOCAL_CF_TABLE: usize = 4096;

/// Bessel values at a fixed argument, rebuilt with a larger order range
/// whenever a product needs it.
pub(crate) struct GrowingTable {
    table: BesselTable,
}

impl GrowingTable {
    pub(crate) fn new(x: f64, max_twice: i64) -> Self {
        Self {
            table: BesselTable::new(x, max_twice.max(64)),
        }
    }

    /// `J_{a/2}(x) J_{b/2}(x)`.
    pub(crate) fn product(&mut self, twice_a: i64, twice_b: i64) -> f64 {
        let need = twice_a.abs().max(twice_b.abs());
        if !self.table.covers(need) {
            self.table = BesselTable::new(self.table.x(), 2 * need);
        }
        self.table.product(twice_a, twice_b)
    }
}

/// Detects the point past which a series has converged.
struct TailWatch {
    start: f64,
    floor: f64,
    window: usize,
    quiet: usize,
}

impl TailWatch {
    fn new(start: f64, trunc: &TruncationPolicy) -> Self {
        Self {
            start,
            floor: trunc.tail_floor,
            window: trunc.window.max(1),
            quiet: 0,
        }
    }

    /// Records the magnitude of term `k`; true once the tail is negligible.
    fn settled(&mut self, k: usize, size: f64) -> bool {
        if k as f64 > self.start && size * k as f64 <= self.floor {
            self.quiet += 1;
            self.quiet >= self.window
        } else {
            self.quiet = 0;
            false
        }
    }
}

fn alternating(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Largest azimuth harmonic needed for radial argument `z`: beyond it
/// either the azimuth envelope is below the floor or every `J_n` on
/// `[0, z]` is negligible. `Err` carries the cap when neither happens.
pub(crate) fn harmonic_limit(psi: &CfCache, z: f64, trunc: &TruncationPolicy) -> Result<usize, usize> {
    if z == 0.0 {
        return Ok(0);
    }
    let bessel_reach = order_decay_bound(z);
    let mut n = 1usize;
    loop {
        if psi.env(n as u64) < trunc.cf_floor || n as f64 > bessel_reach {
            return Ok(n - 1);
        }
        if n >= trunc.max_harmonic {
            return Err(trunc.max_harmonic);
        }
        n += 1;
    }
}

/// Result of an inner-sum kernel.
pub(crate) struct Kernel<T> {
    pub(crate) terms: Vec<T>,
    pub(crate) converged: bool,
    pub(crate) inner_used: usize,
}

fn initial_twice(n_max: usize, x: f64, extra: f64) -> i64 {
    (n_max as f64 + 2.0 * (0.5 * n_max as f64 + x + extra + 64.0)).ceil() as i64
}

/// `S_0 ..= S_{n_max}` at radial argument `z`.
pub(crate) fn planar_kernel(z: f64, n_max: usize, chi: &CfCache, trunc: &TruncationPolicy) -> Kernel<f64> {
    if z == 0.0 {
        let mut terms = vec![0.0; n_max + 1];
        terms[0] = 1.0;
        return Kernel {
            terms,
            converged: true,
            inner_used: 0,
        };
    }
    let x = 0.5 * z;
    let mut table = GrowingTable::new(x, initial_twice(n_max, x, 0.0));
    let mut terms = Vec::with_capacity(n_max + 1);
    let mut converged = true;
    let mut inner_used = 0;
    for n in 0..=n_max {
        let tn = n as i64;
        let mut sum = table.product(tn, tn);
        let mut watch = TailWatch::new(0.5 * n as f64 + x + 10.0, trunc);
        let mut done = false;
        let mut k = 1usize;
        while k <= trunc.max_inner {
            let tk = 2 * k as i64;
            let p = table.product(tn - tk, tn + tk);
            let c = chi.get(tk);
            sum += alternating(k) * 2.0 * p * c.re;
            if watch.settled(k, 2.0 * p.abs() * c.norm()) {
                done = true;
                break;
            }
            k += 1;
        }
        inner_used = inner_used.max(k.min(trunc.max_inner));
        converged &= done;
        terms.push(sum);
    }
    Kernel {
        terms,
        converged,
        inner_used,
    }
}

/// `Σ_n (−1)^{p(n)} ψ(n) e^{jnA} T_{|n|}` for real or complex `T`.
pub(crate) fn harmonic_sum<T>(terms: &[T], a: f64, psi: &CfCache) -> Complex64
where
    T: Copy + Into<Complex64>,
{
    let mut v: Complex64 = terms[0].into();
    for (n, t) in terms.iter().enumerate().skip(1) {
        let ps = psi.get(n as i64);
        let e = Complex64::cis(n as f64 * a);
        let both = ps * e + alternating(n) * (ps * e).conj();
        v += both * (*t).into();
    }
    v
}

/// `w(k) = E[e^{j2kθ} e^{j z2 cosθ}]` for one `z2`, memoized in `k`.
pub(crate) struct ElevationKernel<'c, 'a> {
    chi: &'c CfCache<'a>,
    coef: Vec<Complex64>,
    pos: Vec<Complex64>,
    neg: Vec<Complex64>,
}

impl<'c, 'a> ElevationKernel<'c, 'a> {
    pub(crate) fn new(z2: f64, chi: &'c CfCache<'a>) -> Self {
        let coef = if z2 == 0.0 {
            vec![Complex64::new(1.0, 0.0)]
        } else {
            let x = z2.abs();
            let reach = order_decay_bound(x).ceil() as i64;
            let table = BesselTable::new(x, 2 * reach);
            let step = Complex64::new(0.0, z2.signum());
            let mut unit = Complex64::new(1.0, 0.0);
            (0..=reach)
                .map(|p| {
                    let c = unit * table.get(2 * p).to_f64();
                    unit *= step;
                    c
                })
                .collect()
        };
        Self {
            chi,
            coef,
            pos: Vec::new(),
            neg: Vec::new(),
        }
    }

    /// Largest `p` with a non-negligible `J_p(|z2|)`.
    pub(crate) fn reach(&self) -> usize {
        self.coef.len() - 1
    }

    fn compute(&self, k: i64) -> Complex64 {
        let c = 2 * k;
        let mut v = self.coef[0] * self.chi.get(c);
        for (p, co) in self.coef.iter().enumerate().skip(1) {
            let p = p as i64;
            v += co * (self.chi.get(c + p) + self.chi.get(c - p));
        }
        v
    }

    pub(crate) fn w(&mut self, k: i64) -> Complex64 {
        let (memo, idx) = if k >= 0 {
            (&self.pos, k as usize)
        } else {
            (&self.neg, (-k - 1) as usize)
        };
        if let Some(v) = memo.get(idx) {
            return *v;
        }
        let start = memo.len();
        let fresh: Vec<Complex64> = (start..=idx)
            .map(|i| {
                let kk = if k >= 0 { i as i64 } else { -(i as i64) - 1 };
                self.compute(kk)
            })
            .collect();
        let memo = if k >= 0 { &mut self.pos } else { &mut self.neg };
        memo.extend(fresh);
        memo[idx]
    }
}

/// `R_0 ..= R_{n_max}` at `z1 ≥ 0` for the `z2` of `elev`.
pub(crate) fn vertical_kernel(
    z1: f64,
    n_max: usize,
    elev: &mut ElevationKernel,
    trunc: &TruncationPolicy,
) -> Kernel<Complex64> {
    debug_assert!(z1 >= 0.0);
    if z1 == 0.0 {
        let mut terms = vec![Complex64::new(0.0, 0.0); n_max + 1];
        terms[0] = elev.w(0);
        return Kernel {
            terms,
            converged: true,
            inner_used: 0,
        };
    }
    let x = 0.5 * z1;
    let spread = 0.5 * elev.reach() as f64;
    let mut table = GrowingTable::new(x, initial_twice(n_max, x, spread));
    let mut terms = Vec::with_capacity(n_max + 1);
    let mut converged = true;
    let mut inner_used = 0;
    for n in 0..=n_max {
        let tn = n as i64;
        let mut sum = table.product(tn, tn) * elev.w(0);
        let mut watch = TailWatch::new(0.5 * n as f64 + x + spread + 10.0, trunc);
        let mut done = false;
        let mut k = 1usize;
        while k <= trunc.max_inner {
            let tk = 2 * k as i64;
            let p = table.product(tn - tk, tn + tk);
            let (wp, wn) = (elev.w(k as i64), elev.w(-(k as i64)));
            sum += (wp + wn) * (alternating(k) * p);
            if watch.settled(k, p.abs() * (wp.norm() + wn.norm())) {
                done = true;
                break;
            }
            k += 1;
        }
        inner_used = inner_used.max(k.min(trunc.max_inner));
        converged &= done;
        terms.push(sum);
    }
    Kernel {
        terms,
        converged,
        inner_used,
    }
}

/// `E[exp(j √(z1²+z2²) sinθ sin(φ + A))]` for azimuth characteristic
/// function `psi` and elevation characteristic function `chi`.
pub fn series_i(
    p: &SeriesParams,
    psi: &dyn CharacteristicFunction,
    chi: &dyn CharacteristicFunction,
    trunc: &TruncationPolicy,
) -> Result<Complex64, NmiError> {
    let z = p.radial();
    if z == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let psi = CfCache::new(psi, LOCAL_CF_TABLE);
    let chi = CfCache::new(chi, LOCAL_CF_TABLE);
    let (n_max, mut ok) = match harmonic_limit(&psi, z, trunc) {
        Ok(n) => (n, true),
        Err(n) => (n, false),
    };
    let kernel = planar_kernel(z, n_max, &chi, trunc);
    ok &= kernel.converged;
    let v = harmonic_sum(&kernel.terms, p.a, &psi);
    if ok {
        Ok(v)
    } else {
        Err(NmiError::NotConverged {
            series: "planar",
            partial: v,
        })
    }
}

/// `E[exp(j z1 sinθ sin(φ + A) + j z2 cosθ)]`. Elevations are assumed to lie
/// in `[0, π]`.
pub fn series_v(
    p: &SeriesParams,
    psi: &dyn CharacteristicFunction,
    chi: &dyn CharacteristicFunction,
    trunc: &TruncationPolicy,
) -> Result<Complex64, NmiError> {
    let (z1, a) = if p.z1 < 0.0 { (-p.z1, p.a + PI) } else { (p.z1, p.a) };
    if z1 == 0.0 && p.z2 == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let psi = CfCache::new(psi, LOCAL_CF_TABLE);
    let chi = CfCache::new(chi, LOCAL_CF_TABLE);
    let (n_max, mut ok) = match harmonic_limit(&psi, z1, trunc) {
        Ok(n) => (n, true),
        Err(n) => (n, false),
    };
    let mut elev = ElevationKernel::new(p.z2, &chi);
    let kernel = vertical_kernel(z1, n_max, &mut elev, trunc);
    ok &= kernel.converged;
    let v = harmonic_sum(&kernel.terms, a, &psi);
    if ok {
        Ok(v)
    } else {
        Err(NmiError::NotConverged {
            series: "vertical",
            partial: v,
        })
    }
}

/// Fourier coefficient of `e^{j z2 cosθ}` on `[0, π]`:
/// `(1/π)∫₀^π e^{j(z2 cosθ − 2qθ)} dθ = (−1)^q G(q, z2)` with
/// `G = J_{2q}(z2) + (4/π) Σ_{k≥1} (−1)^{k−q} J_{2k−1}(z2) · 2q / ((2k−1)² − 4q²)`.
/// In the vertical series `q = n′ + n̂`.
pub fn series_g(q: i64, z2: f64, trunc: &TruncationPolicy) -> Result<f64, NmiError> {
    if z2 == 0.0 {
        return Ok(if q == 0 { 1.0 } else { 0.0 });
    }
    let x = z2.abs();
    let reach = order_decay_bound(x).ceil() as i64;
    let terms = reach / 2 + 2;
    if terms as usize > trunc.max_inner {
        return Err(NmiError::NotConverged {
            series: "G",
            partial: Complex64::new(f64::NAN, 0.0),
        });
    }
    let table = BesselTable::new(x, 2 * (reach + 4));
    let lead = if (2 * q).abs() <= reach {
        table.get(4 * q).to_f64()
    } else {
        0.0
    };
    let qf = q as f64;
    let mut corr = 0.0;
    for k in 1..=terms {
        let odd = (2 * k - 1) as f64;
        // J_{2k−1} is odd in its argument
        let j = table.get(2 * (2 * k - 1)).to_f64() * z2.signum();
        let sign = if (k - q).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        corr += sign * j * 2.0 * qf / (odd * odd - 4.0 * qf * qf);
    }
    Ok(lead + 4.0 / PI * corr)
}
