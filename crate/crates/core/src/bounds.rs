//! Rigorous bounds for the Level-0 remainder and the first-level
//! hyperterminant factor that enters them.

use rug::float::Constant;
use rug::ops::Pow;
use rug::Float;
use serde::Serialize;

use crate::arith::{abs, gamma_real, PhasedComplex};
use crate::coeffs::perron_coefficients;
use crate::error::{Error, Result};
use crate::geometry::{abs_contour_integral, Sector};
use crate::problem::{stokes_successor, ProblemSpec};

/// Which case of the hyperterminant estimate applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `|θ| ≤ πω/2`: factor 1.
    Inner,
    /// `πω/2 < |θ| ≤ πω`: cosecant or growth factor.
    Stokes,
    /// `πω < |θ| < πω + π/2`: beyond the Stokes line.
    Outer,
}

/// Bound contribution of one adjacent saddle.
#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub from_id: usize,
    pub to_id: usize,
    pub count: usize,
    pub theta: f64,
    pub theta_plus: f64,
    pub regime: Regime,
    pub factor: f64,
    pub prefactor: f64,
    pub integral_part: f64,
    pub bound_value: f64,
}

/// Per-saddle reports and their sum.
#[derive(Clone, Debug, Serialize)]
pub struct RemainderBound {
    pub reports: Vec<BoundReport>,
    pub total: f64,
    /// `total / |T_N z^{−N/ω}|`: how far the bound sits above the first
    /// neglected term.
    pub neglected_term_ratio: f64,
}

/// `√π Γ(M/2+1)/Γ(M/2+1/2) + 1`, the sharper growth term for `ω = 1`.
pub fn gamma_ratio_term(m: f64) -> f64 {
    let b = 64;
    let h = Float::with_val(b, m) / 2u32;
    let num = Float::with_val(b, &h + 1u32).ln_gamma();
    let den = Float::with_val(b, &h + 0.5f64).ln_gamma();
    let pi = Float::with_val(b, Constant::Pi);
    (pi.sqrt() * (num - den).exp()).to_f64() + 1.0
}

/// `ω√(e(M+1/2))`; for `ω = 1` the gamma-ratio form is used where it is
/// smaller (both are valid).
fn growth_term(m: f64, omega: u32) -> f64 {
    let plain = omega as f64 * (std::f64::consts::E * (m + 0.5)).sqrt();
    if omega == 1 {
        plain.min(gamma_ratio_term(m))
    } else {
        plain
    }
}

/// Bound on `|z^{1/ω} F^{(1)}(z; M, ω, 1)/Γ(M)|` for `arg z = theta`.
pub fn hyperterminant_bound_factor(m: f64, omega: u32, theta: f64) -> Result<(f64, Regime)> {
    use std::f64::consts::{FRAC_PI_2, PI};
    if !(m > 0.0) || omega == 0 {
        return Err(Error::Domain(format!("need M > 0 and ω ≥ 1, got M = {m}, ω = {omega}")));
    }
    let w = omega as f64;
    let a = theta.abs();
    if a >= PI * w + FRAC_PI_2 {
        return Err(Error::Domain(format!("|θ| = {a:.6} is outside the range πω + π/2")));
    }
    if a <= FRAC_PI_2 * w {
        Ok((1.0, Regime::Inner))
    } else if a <= PI * w {
        let csc = 1.0 / (theta / w).sin().abs();
        Ok((csc.min(growth_term(m, omega)), Regime::Stokes))
    } else {
        let lead = w * (2.0 * PI * m).sqrt() / theta.cos().abs().powf(m);
        Ok((lead + growth_term(m, omega), Regime::Outer))
    }
}

fn validity(spec: &ProblemSpec, n: usize, alpha: i64, theta: &Float, home: Option<&Float>) -> Result<(Sector, Float)> {
    let bits = spec.bits();
    let sector = match home {
        Some(h) => Sector::around(spec, n, alpha, h)?,
        None => {
            spec.check_off_stokes(n, theta, alpha)?;
            Sector::around(spec, n, alpha, theta)?
        }
    };
    let half = Float::with_val(bits, Constant::Pi) / 2u32;
    let lo = Float::with_val(bits, &sector.lower - &half);
    let hi = Float::with_val(bits, &sector.upper + &half);
    if !(*theta > lo && *theta < hi) {
        return Err(Error::Domain(format!(
            "θ = {:.6} is outside the validity window ({:.6}, {:.6})",
            theta.to_f64(),
            lo.to_f64(),
            hi.to_f64()
        )));
    }
    let inside = sector.contour_angle(theta);
    Ok((sector, inside))
}

/// Bound on the Level-0 remainder after `count` terms, one report per
/// adjacent saddle.
///
/// `home` picks the Stokes sector whose expansion is continued when `θ`
/// lies beyond one of its edges; by default it is `θ` itself.
pub fn remainder_bound(
    spec: &ProblemSpec,
    n: usize,
    alpha: i64,
    z: &PhasedComplex,
    count: usize,
    home: Option<&Float>,
) -> Result<RemainderBound> {
    let bits = spec.bits();
    let omega = spec.saddle(n)?.order_omega;
    let theta = Float::with_val(bits, &z.phase);
    let (_, inside) = validity(spec, n, alpha, &theta, home)?;
    let m_exp = (count + 1) as f64 / omega as f64;
    let gm = gamma_real(&(Float::with_val(bits, (count + 1) as u32) / omega))?;
    let zpow = Float::with_val(bits, z.modulus.clone().pow(Float::with_val(bits, count as u32) / omega));
    let pi = Float::with_val(bits, Constant::Pi);
    let prefactor = (gm / (Float::with_val(bits, &pi * 2u32) * &zpow)).to_f64();
    let mut reports = Vec::new();
    for rec in spec.records_from(n) {
        let (tp, ap) = stokes_successor(rec, omega, &inside, alpha)?;
        let shifted = Float::with_val(bits, &theta - &tp) + Float::with_val(bits, &pi * omega);
        let (factor, regime) = hyperterminant_bound_factor(m_exp, omega, shifted.to_f64())?;
        let integral = abs_contour_integral(spec, n, rec.to_id, count, &tp, ap)?.to_f64();
        reports.push(BoundReport {
            from_id: n,
            to_id: rec.to_id,
            count,
            theta: theta.to_f64(),
            theta_plus: tp.to_f64(),
            regime,
            factor,
            prefactor,
            integral_part: integral,
            bound_value: prefactor * integral * factor,
        });
    }
    let total: f64 = reports.iter().map(|r| r.bound_value).sum();
    let t = perron_coefficients(spec, n, alpha, count + 1)?;
    let term = abs(&t.values[count]).to_f64() / zpow.to_f64();
    Ok(RemainderBound { reports, total, neglected_term_ratio: total / term })
}

/// Bound on the remainder of the doubly infinite expansion through a simple
/// saddle, `R_{2N}(z; 0) − R_{2N}(z; 1)`, after `count` terms in `1/z`.
pub fn simple_saddle_bound(
    spec: &ProblemSpec,
    n: usize,
    z: &PhasedComplex,
    count: usize,
    home: Option<&Float>,
) -> Result<RemainderBound> {
    let bits = spec.bits();
    let omega = spec.saddle(n)?.order_omega;
    if omega != 2 {
        return Err(Error::Validation(format!("saddle {n} has ω = {omega}; the simple-saddle bound needs ω = 2")));
    }
    let theta = Float::with_val(bits, &z.phase);
    let (_, inside) = validity(spec, n, 0, &theta, home)?;
    let m_exp = count as f64 + 0.5;
    let gm = gamma_real(&Float::with_val(bits, m_exp))?;
    let zpow = Float::with_val(bits, z.modulus.clone().pow(count as u32));
    let pi = Float::with_val(bits, Constant::Pi);
    let prefactor = (gm / (Float::with_val(bits, &pi * &zpow))).to_f64();
    let mut reports = Vec::new();
    for rec in spec.records_from(n) {
        let (tp, ap) = stokes_successor(rec, omega, &inside, 0)?;
        let shifted = Float::with_val(bits, &theta - &tp) + &pi;
        let (factor, regime) = hyperterminant_bound_factor(m_exp, 1, shifted.to_f64())?;
        let integral = abs_contour_integral(spec, n, rec.to_id, 2 * count, &tp, ap)?.to_f64();
        reports.push(BoundReport {
            from_id: n,
            to_id: rec.to_id,
            count,
            theta: theta.to_f64(),
            theta_plus: tp.to_f64(),
            regime,
            factor,
            prefactor,
            integral_part: integral,
            bound_value: prefactor * integral * factor,
        });
    }
    let total: f64 = reports.iter().map(|r| r.bound_value).sum();
    let t0 = perron_coefficients(spec, n, 0, 2 * count + 1)?;
    let t1 = t0.with_alpha(1);
    let bold = rug::Complex::with_val(bits, &t0.values[2 * count] - &t1.values[2 * count]);
    let term = abs(&bold).to_f64() / zpow.to_f64();
    Ok(RemainderBound { reports, total, neglected_term_ratio: total / term })
}
