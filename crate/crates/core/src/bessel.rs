//! Bessel functions of the first kind, `J_ν(x)`, for real `x ≥ 0` and orders
//! that are integers or half-integers (including negative orders).
//!
//! Production evaluation never integrates. Integer orders use Miller's
//! downward recurrence normalised by `J_0 + 2 Σ J_{2k} = 1`. Positive
//! half-integer orders use the same recurrence normalised against the
//! trigonometric closed forms of `J_{1/2}` and `J_{3/2}`. Negative
//! half-integer orders are the dominant solution of the recurrence and are
//! generated upward from `J_{-1/2}` and `J_{1/2}`.
//!
//! Every value is kept as a [`Scaled`] mantissa/exponent pair so that
//! products such as `J_{-ν}(x) J_{ν+1}(x)` stay finite even when one factor
//! overflows `f64` and the other underflows.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BesselError {
    #[error("Bessel argument must be finite and nonnegative, got {0}")]
    InvalidArgument(f64),
    #[error("Bessel order {0} is not an integer or half-integer")]
    UnsupportedOrder(f64),
}

/// An integer or half-integer order, stored as `2ν`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BesselOrder {
    twice: i64,
}

impl BesselOrder {
    pub const fn from_twice(twice: i64) -> Self {
        Self { twice }
    }

    pub const fn integer(n: i64) -> Self {
        Self { twice: 2 * n }
    }

    /// Order `k + 1/2`.
    pub const fn half(k: i64) -> Self {
        Self { twice: 2 * k + 1 }
    }

    pub fn new(nu: f64) -> Result<Self, BesselError> {
        let twice = 2.0 * nu;
        if !twice.is_finite() || twice.fract() != 0.0 || twice.abs() > 1e15 {
            return Err(BesselError::UnsupportedOrder(nu));
        }
        Ok(Self {
            twice: twice as i64,
        })
    }

    pub const fn twice(self) -> i64 {
        self.twice
    }

    pub fn value(self) -> f64 {
        self.twice as f64 / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.twice % 2 == 0
    }
}

/// A real number `mant · 2^exp` with a normalised mantissa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    mant: f64,
    exp: i32,
}

impl Scaled {
    pub const ZERO: Scaled = Scaled { mant: 0.0, exp: 0 };

    pub fn new(value: f64, exp: i32) -> Self {
        let (m, e) = frexp(value);
        Self {
            mant: m,
            exp: exp.saturating_add(e),
        }
    }

    pub fn from_f64(value: f64) -> Self {
        Self::new(value, 0)
    }

    pub fn to_f64(self) -> f64 {
        ldexp(self.mant, self.exp)
    }

    pub fn mul(self, other: Scaled) -> f64 {
        ldexp(self.mant * other.mant, self.exp.saturating_add(other.exp))
    }

    pub fn abs(self) -> Scaled {
        Scaled {
            mant: self.mant.abs(),
            exp: self.exp,
        }
    }

    pub fn neg(self) -> Scaled {
        Scaled {
            mant: -self.mant,
            exp: self.exp,
        }
    }
}

/// Splits `x` into `m · 2^e` with `0.5 ≤ |m| < 1`. Zero and non-finite
/// values are returned unchanged with `e = 0`.
pub(crate) fn frexp(x: f64) -> (f64, i32) {
    if x == 0.0 || !x.is_finite() {
        return (x, 0);
    }
    let mut bits = x.to_bits();
    let mut raw_exp = ((bits >> 52) & 0x7ff) as i32;
    let mut bias = 0;
    if raw_exp == 0 {
        // subnormal
        let y = x * f64::from_bits(0x43f0_0000_0000_0000); // 2^64
        bits = y.to_bits();
        raw_exp = ((bits >> 52) & 0x7ff) as i32;
        bias = -64;
    }
    let e = raw_exp - 1022;
    let m = f64::from_bits((bits & !(0x7ffu64 << 52)) | (1022u64 << 52));
    (m, e + bias)
}

pub(crate) fn ldexp(mut x: f64, mut e: i32) -> f64 {
    const STEP: i32 = 1000;
    let up = pow2(STEP);
    let down = pow2(-STEP);
    while e > STEP {
        x *= up;
        e -= STEP;
        if !x.is_finite() {
            return x;
        }
    }
    while e < -STEP {
        x *= down;
        e += STEP;
        if x == 0.0 {
            return x;
        }
    }
    x * pow2(e)
}

fn pow2(e: i32) -> f64 {
    debug_assert!((-1022..=1023).contains(&e));
    f64::from_bits(((e + 1023) as u64) << 52)
}

/// Order beyond which `|J_ν(x)| < 1e-15` for every `ν ≥` the bound.
pub fn order_decay_bound(x: f64) -> f64 {
    x + 12.0 * x.cbrt() + 25.0
}

fn miller_start(x: f64, n_max: usize) -> usize {
    let k = n_max.max(x.ceil() as usize);
    let top = k + 32 + (200.0 * k as f64).sqrt().ceil() as usize;
    top + (top & 1)
}

const RESCALE_ABOVE: f64 = 1e150;

/// `J_0 .. J_{n_max}` at `x > 0`.
fn integer_orders(x: f64, n_max: usize) -> Vec<Scaled> {
    let top = miller_start(x, n_max);
    let mut out = vec![Scaled::ZERO; n_max + 1];
    let mut stored_exp = vec![0i32; n_max + 1];
    let mut next = 0.0f64;
    let mut cur = 1.0f64;
    let mut exp = 0i32;
    let mut sum = 0.0f64;
    for k in (0..=top).rev() {
        if k <= n_max {
            out[k] = Scaled::from_f64(cur);
            stored_exp[k] = exp;
        }
        if k % 2 == 0 {
            sum += if k == 0 { cur } else { 2.0 * cur };
        }
        if k == 0 {
            break;
        }
        let prev = (2.0 * k as f64 / x) * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > RESCALE_ABOVE {
            let (_, e) = frexp(cur);
            let f = pow2(-e);
            cur *= f;
            next *= f;
            sum *= f;
            exp += e;
        }
    }
    let norm = Scaled::from_f64(1.0 / sum);
    for (v, e) in out.iter_mut().zip(stored_exp) {
        *v = Scaled::new(v.mant * norm.mant, e - exp + norm.exp + v.exp);
    }
    out
}

fn sqrt_2_over_pi_x(x: f64) -> f64 {
    (2.0 / (PI * x)).sqrt()
}

/// `J_{k+1/2}` for `k = 0 ..= k_max` at `x > 0`.
fn positive_half_orders(x: f64, k_max: usize) -> Vec<Scaled> {
    let top = miller_start(x, k_max.max(1));
    let mut out = vec![Scaled::ZERO; k_max.max(1) + 1];
    let mut stored_exp = vec![0i32; out.len()];
    let mut next = 0.0f64;
    let mut cur = 1.0f64;
    let mut exp = 0i32;
    for k in (0..=top).rev() {
        if k < out.len() {
            out[k] = Scaled::from_f64(cur);
            stored_exp[k] = exp;
        }
        if k == 0 {
            break;
        }
        // J_{ν-1} = (2ν/x) J_ν - J_{ν+1} with ν = k + 1/2
        let prev = ((2 * k + 1) as f64 / x) * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > RESCALE_ABOVE {
            let (_, e) = frexp(cur);
            let f = pow2(-e);
            cur *= f;
            next *= f;
            exp += e;
        }
    }
    let c = sqrt_2_over_pi_x(x);
    let (s, co) = x.sin_cos();
    let j_half = c * s;
    let j_three_halves = c * (s / x - co);
    // normalise against whichever closed form is further from a zero
    let (truth, idx) = if j_half.abs() >= j_three_halves.abs() {
        (j_half, 0)
    } else {
        (j_three_halves, 1)
    };
    let anchor = Scaled::new(out[idx].mant, stored_exp[idx] - exp + out[idx].exp);
    let norm = Scaled::new(truth / anchor.mant, -anchor.exp);
    for (v, e) in out.iter_mut().zip(stored_exp) {
        *v = Scaled::new(v.mant * norm.mant, e - exp + v.exp + norm.exp);
    }
    out.truncate(k_max + 1);
    out
}

/// `J_{-(k+1/2)}` for `k = 0 ..= k_max` at `x > 0`.
fn negative_half_orders(x: f64, k_max: usize) -> Vec<Scaled> {
    let c = sqrt_2_over_pi_x(x);
    let (s, co) = x.sin_cos();
    let mut out = Vec::with_capacity(k_max + 1);
    // prev = J_{-(k-1/2)}, cur = J_{-(k+1/2)}, both times 2^exp
    let mut prev = c * s;
    let mut cur = c * co;
    let mut exp = 0i32;
    out.push(Scaled::from_f64(cur));
    for k in 0..k_max {
        // J_{ν-1} = (2ν/x) J_ν - J_{ν+1} with ν = -(k + 1/2)
        let nxt = (-((2 * k + 1) as f64) / x) * cur - prev;
        prev = cur;
        cur = nxt;
        let (_, e) = frexp(cur);
        if e != 0 && cur != 0.0 {
            let f = pow2(-e);
            cur *= f;
            prev *= f;
            exp += e;
        }
        out.push(Scaled::new(cur, exp));
    }
    out
}

/// Leading ascending-series term, used when `x` is so small that recurrence
/// coefficients `2ν/x` would overflow.
fn tiny_argument(twice: i64, x: f64) -> Scaled {
    if x == 0.0 {
        return match twice {
            0 => Scaled::from_f64(1.0),
            t if t > 0 => Scaled::ZERO,
            t if t % 2 == 0 => Scaled::ZERO,
            _ => Scaled::from_f64(f64::INFINITY),
        };
    }
    let nu = twice as f64 / 2.0;
    if twice < 0 && twice % 2 == 0 {
        let m = -twice / 2;
        let v = tiny_argument(-twice, x);
        return if m % 2 == 0 { v } else { v.neg() };
    }
    // (x/2)^ν / Γ(ν+1); for negative half-integers Γ(ν+1) carries a sign
    let gamma_arg = nu + 1.0;
    let (ln_gamma, sign) = ln_gamma_signed(gamma_arg);
    let ln = nu * (x / 2.0).ln() - ln_gamma;
    let e2 = ln / std::f64::consts::LN_2;
    let ei = e2.floor();
    let m = (2f64).powf(e2 - ei) * sign;
    Scaled::new(m, ei as i32)
}

fn ln_gamma_signed(a: f64) -> (f64, f64) {
    if a > 0.0 {
        return (statrs::function::gamma::ln_gamma(a), 1.0);
    }
    // reflection: Γ(a) Γ(1-a) = π / sin(πa)
    let s = (PI * a).sin();
    let lg = PI.ln() - s.abs().ln() - statrs::function::gamma::ln_gamma(1.0 - a);
    (lg, s.signum())
}

const TINY_X: f64 = 1e-100;

/// Bessel values at one argument for all orders with `|2ν| ≤ max_twice`.
#[derive(Debug, Clone)]
pub struct BesselTable {
    x: f64,
    max_twice: i64,
    integer: Vec<Scaled>,
    half_pos: Vec<Scaled>,
    half_neg: Vec<Scaled>,
}

impl BesselTable {
    pub fn new(x: f64, max_twice: i64) -> Self {
        let max_twice = max_twice.max(2);
        let n_int = (max_twice / 2) as usize;
        let n_half = ((max_twice - 1) / 2).max(0) as usize;
        let (integer, half_pos, half_neg) = if x < TINY_X {
            (
                (0..=n_int)
                    .map(|k| tiny_argument(2 * k as i64, x))
                    .collect(),
                (0..=n_half)
                    .map(|k| tiny_argument(2 * k as i64 + 1, x))
                    .collect(),
                (0..=n_half)
                    .map(|k| tiny_argument(-(2 * k as i64 + 1), x))
                    .collect(),
            )
        } else {
            (
                integer_orders(x, n_int),
                positive_half_orders(x, n_half),
                negative_half_orders(x, n_half),
            )
        };
        Self {
            x,
            max_twice,
            integer,
            half_pos,
            half_neg,
        }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    /// Largest `|2ν|` this table can serve.
    pub fn max_twice(&self) -> i64 {
        self.max_twice
    }

    pub fn covers(&self, twice: i64) -> bool {
        twice.abs() <= self.max_twice
    }

    pub fn get(&self, twice: i64) -> Scaled {
        assert!(self.covers(twice), "order 2ν={twice} outside table");
        if twice % 2 == 0 {
            let m = (twice / 2).unsigned_abs() as usize;
            let v = self.integer[m];
            if twice < 0 && m % 2 == 1 {
                v.neg()
            } else {
                v
            }
        } else if twice > 0 {
            self.half_pos[((twice - 1) / 2) as usize]
        } else {
            self.half_neg[((-twice - 1) / 2) as usize]
        }
    }

    /// `J_a(x) J_b(x)` for orders given as `2a`, `2b`, assuming `a + b ≥ 0`.
    pub fn product(&self, twice_a: i64, twice_b: i64) -> f64 {
        if self.x == 0.0 {
            return if twice_a == 0 && twice_b == 0 { 1.0 } else { 0.0 };
        }
        self.get(twice_a).mul(self.get(twice_b))
    }
}

/// `J_ν(x)`.
pub fn bessel_j(order: BesselOrder, x: f64) -> Result<f64, BesselError> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(BesselError::InvalidArgument(x));
    }
    let twice = order.twice();
    if x < TINY_X {
        return Ok(tiny_argument(twice, x).to_f64());
    }
    if twice % 2 == 0 {
        let m = (twice / 2).unsigned_abs() as usize;
        let v = integer_orders(x, m)[m].to_f64();
        Ok(if twice < 0 && m % 2 == 1 { -v } else { v })
    } else if twice > 0 {
        let k = ((twice - 1) / 2) as usize;
        Ok(positive_half_orders(x, k)[k].to_f64())
    } else {
        let k = ((-twice - 1) / 2) as usize;
        Ok(negative_half_orders(x, k)[k].to_f64())
    }
}

/// `J_n(x)` for integer `n`.
pub fn bessel_jn(n: i64, x: f64) -> Result<f64, BesselError> {
    bessel_j(BesselOrder::integer(n), x)
}
