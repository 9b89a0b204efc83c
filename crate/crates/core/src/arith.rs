//! Working precision, multi-sheet complex values and the Gamma function.
//!
//! Every complex quantity whose fractional powers matter (z, σ_j, singulants)
//! travels as a [`PhasedComplex`]: a modulus together with a phase that is
//! never reduced modulo 2π. Powers act on the phase linearly, so the sheet a
//! value lives on is part of the data rather than an accident of `atan2`.

use std::collections::HashMap;
use std::sync::Mutex;

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Complex, Float};

use crate::error::{Error, Result};

const LOG2_10: f64 = std::f64::consts::LOG2_10;

/// Decimal working precision plus guard digits for internal steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Precision {
    pub digits: u32,
    pub guard_digits: u32,
}

impl Precision {
    pub const DEFAULT_DIGITS: u32 = 60;
    pub const DEFAULT_GUARD: u32 = 12;

    pub fn new(digits: u32) -> Result<Self> {
        Self::with_guard(digits, Self::DEFAULT_GUARD)
    }

    pub fn with_guard(digits: u32, guard_digits: u32) -> Result<Self> {
        if digits < 16 {
            return Err(Error::Validation(format!("digits must be at least 16, got {digits}")));
        }
        if guard_digits < 10 {
            return Err(Error::Validation(format!(
                "guard_digits must be at least 10, got {guard_digits}"
            )));
        }
        Ok(Self { digits, guard_digits })
    }

    /// Binary precision used for every `Float`/`Complex` at this setting.
    pub fn bits(&self) -> u32 {
        ((self.digits + self.guard_digits) as f64 * LOG2_10).ceil() as u32
    }

    /// Same setting with `extra` more decimal digits.
    pub fn raised(&self, extra: u32) -> Self {
        Self { digits: self.digits + extra, guard_digits: self.guard_digits }
    }

    /// Nominal relative accuracy `10^-digits` as an `f64`.
    pub fn epsilon(&self) -> f64 {
        10f64.powi(-(self.digits as i32))
    }

    pub fn float(&self, x: f64) -> Float {
        Float::with_val(self.bits(), x)
    }

    pub fn complex(&self, re: f64, im: f64) -> Complex {
        Complex::with_val(self.bits(), (re, im))
    }

    pub fn pi(&self) -> Float {
        Float::with_val(self.bits(), Constant::Pi)
    }

    /// Parses a decimal string (or `p/q`) at working precision.
    pub fn parse(&self, s: &str) -> Result<Float> {
        parse_real(self.bits(), s)
    }
}

impl Default for Precision {
    fn default() -> Self {
        Self { digits: Self::DEFAULT_DIGITS, guard_digits: Self::DEFAULT_GUARD }
    }
}

pub fn parse_real(bits: u32, s: &str) -> Result<Float> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a decimal number: {s:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p = Float::parse(p.trim()).map_err(|_| bad())?;
        let q = Float::parse(q.trim()).map_err(|_| bad())?;
        let q = Float::with_val(bits, q);
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Float::with_val(bits, p) / q);
    }
    Ok(Float::with_val(bits, Float::parse(s).map_err(|_| bad())?))
}

/// Formats a real with `sig` significant digits in scientific notation.
pub fn fmt_real(x: &Float, sig: usize) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    x.to_string_radix(10, Some(sig))
}

pub fn abs(z: &Complex) -> Float {
    Float::with_val(z.prec().0, z.abs_ref())
}

pub fn arg(z: &Complex) -> Float {
    Float::with_val(z.prec().0, z.arg_ref())
}

/// `e^{i·phase}` at the precision of `phase`.
pub fn expi(phase: &Float) -> Complex {
    let (s, c) = phase.clone().sin_cos(Float::new(phase.prec()));
    Complex::with_val(phase.prec(), (c, s))
}

pub fn polar(modulus: &Float, phase: &Float) -> Complex {
    expi(phase) * modulus
}

pub fn is_nonpositive_integer(x: &Float) -> bool {
    x.is_integer() && *x <= 0
}

/// Complex number carried as modulus and unreduced phase.
#[derive(Clone, Debug)]
pub struct PhasedComplex {
    pub modulus: Float,
    pub phase: Float,
}

impl PhasedComplex {
    pub fn new(modulus: Float, phase: Float) -> Self {
        assert!(modulus >= 0, "modulus must be nonnegative");
        if modulus.is_zero() {
            let p = phase.prec();
            return Self { modulus, phase: Float::new(p) };
        }
        Self { modulus, phase }
    }

    /// Phase on the principal sheet `(-π, π]`.
    pub fn from_complex(z: &Complex) -> Self {
        Self::new(abs(z), arg(z))
    }

    /// Phase given as a multiple of π.
    pub fn from_phase_over_pi(modulus: Float, phase_over_pi: &Float) -> Self {
        let pi = Float::with_val(phase_over_pi.prec(), Constant::Pi);
        Self::new(modulus, pi * phase_over_pi)
    }

    pub fn one(bits: u32) -> Self {
        Self::new(Float::with_val(bits, 1), Float::new(bits))
    }

    pub fn prec(&self) -> u32 {
        self.modulus.prec()
    }

    pub fn is_zero(&self) -> bool {
        self.modulus.is_zero()
    }

    pub fn pow(&self, e: &Float) -> Result<Self> {
        phased_pow(self, e)
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(
            Float::with_val(self.prec(), &self.modulus * &other.modulus),
            Float::with_val(self.prec(), &self.phase + &other.phase),
        )
    }

    pub fn div(&self, other: &Self) -> Self {
        Self::new(
            Float::with_val(self.prec(), &self.modulus / &other.modulus),
            Float::with_val(self.prec(), &self.phase - &other.phase),
        )
    }

    pub fn rotate(&self, dphase: &Float) -> Self {
        Self::new(self.modulus.clone(), Float::with_val(self.prec(), &self.phase + dphase))
    }

    pub fn to_complex(&self) -> Complex {
        polar(&self.modulus, &self.phase)
    }
}

/// `p^e` with modulus `|p|^e` and phase `e·phase`; no branch cut is applied.
pub fn phased_pow(p: &PhasedComplex, e: &Float) -> Result<PhasedComplex> {
    if p.is_zero() {
        if *e <= 0 {
            return Err(Error::Domain("zero raised to a nonpositive power".into()));
        }
        return Ok(p.clone());
    }
    let bits = p.prec();
    let modulus = Float::with_val(bits, (&p.modulus).pow(e));
    let phase = Float::with_val(bits, &p.phase * e);
    Ok(PhasedComplex::new(modulus, phase))
}

/// Real Gamma function (MPFR).
pub fn gamma_real(x: &Float) -> Result<Float> {
    if is_nonpositive_integer(x) {
        return Err(Error::Pole(format!("Gamma has a pole at {}", fmt_real(x, 10))));
    }
    Ok(x.clone().gamma())
}

/// Complex Gamma function.
///
/// Real arguments go to MPFR. Off the axis: reflection for `Re z < 1/2`,
/// then an upward shift until Stirling's series meets the precision.
pub fn gamma(z: &Complex) -> Result<Complex> {
    let bits = z.prec().0;
    if z.imag().is_zero() {
        let g = gamma_real(z.real())?;
        return Ok(Complex::with_val(bits, (g, 0)));
    }
    let work = bits + 32;
    let z = Complex::with_val(work, z);
    let out = if *z.real() < 0.5 {
        let pi = Float::with_val(work, Constant::Pi);
        let one_minus = Complex::with_val(work, 1 - &z);
        let s = Complex::with_val(work, &z * &pi).sin();
        pi / (s * gamma_stirling(&one_minus))
    } else {
        gamma_stirling(&z)
    };
    Ok(Complex::with_val(bits, out))
}

fn gamma_stirling(z: &Complex) -> Complex {
    let bits = z.prec().0;
    let radius = bits as f64 * std::f64::consts::LN_2 / (2.0 * std::f64::consts::PI) + 8.0;
    let re = z.real().to_f64();
    let shift = if re < radius { (radius - re).ceil() as u32 } else { 0 };
    let mut w = Complex::with_val(bits, z + shift);
    let mut denom = Complex::with_val(bits, (1, 0));
    for j in 0..shift {
        denom *= Complex::with_val(bits, z + j);
    }
    let pi2 = Float::with_val(bits, Constant::Pi) * 2u32;
    let half = Float::with_val(bits, 0.5);
    let lnw = w.clone().ln();
    let mut s = Complex::with_val(bits, &w - &half) * &lnw - &w;
    s += Float::with_val(bits, pi2.ln_ref()) * &half;
    let tol = Float::with_val(bits, Float::i_exp(1, -(bits as i32)));
    let w2 = Complex::with_val(bits, w.square_ref());
    let mut wpow = w.clone();
    let bern = bernoulli_even(bits, (bits as usize) / 2 + 20);
    for k in 1..bern.len() {
        let kk = (2 * k) as u32;
        let term = Complex::with_val(bits, &bern[k] / &wpow) / (kk * (kk - 1));
        s += &term;
        if abs(&term) < tol.clone() * abs(&s).max(&Float::with_val(bits, 1)) {
            break;
        }
        wpow *= &w2;
    }
    w = s.exp();
    w / denom
}

static BERNOULLI: Mutex<Option<HashMap<u32, Vec<Float>>>> = Mutex::new(None);

/// `B_0, B_2, …, B_{2(count-1)}` from `B_{2k} = (-1)^{k+1} 2 (2k)! ζ(2k) / (2π)^{2k}`.
fn bernoulli_even(bits: u32, count: usize) -> Vec<Float> {
    let mut guard = BERNOULLI.lock().unwrap();
    let cache = guard.get_or_insert_with(HashMap::new);
    if let Some(v) = cache.get(&bits) {
        if v.len() >= count {
            return v.clone();
        }
    }
    let two_pi = Float::with_val(bits, Constant::Pi) * 2u32;
    let two_pi_sq = Float::with_val(bits, two_pi.square_ref());
    let mut out = vec![Float::with_val(bits, 1)];
    let mut fact = Float::with_val(bits, 1);
    let mut pow = Float::with_val(bits, 1);
    for k in 1..count {
        let kk = 2 * k as u32;
        fact *= (kk - 1) * kk;
        pow *= &two_pi_sq;
        let zeta = Float::with_val(bits, Float::zeta_u(kk));
        let mut b = Float::with_val(bits, &fact * &zeta) * 2u32 / &pow;
        if k % 2 == 0 {
            b = -b;
        }
        out.push(b);
    }
    cache.insert(bits, out.clone());
    out
}
