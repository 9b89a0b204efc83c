//! Asymptotic coefficients `T_r^{(n)}(α)` of the normalised saddle integral
//! `ω z^{1/ω} ∫ e^{−z(f−f_n)} g dt`.
//!
//! Two library routes are provided: a Perron-type power-series formula and
//! a trapezoidal rule on a circle about the saddle. Both produce
//! `T_r(α) = e^{2πiα(r+1)/ω} c^{−(r+1)/ω} Γ((r+1)/ω) [τ^r](g · h^{−(r+1)/ω})`
//! where `f − f_n = c τ^ω h(τ)` with `h(0) = 1`, `τ = t − t_n` and `c`
//! taken on its principal sheet.

use rayon::prelude::*;
use rug::float::Constant;
use rug::{Complex, Float};

use crate::arith::{abs, arg, expi, gamma_real, PhasedComplex, Precision};
use crate::error::{Error, Result};
use crate::problem::{Polynomial, ProblemSpec};
use crate::series::{ps_pow_to, Exponent, TruncatedSeries};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoefficientRoute {
    Perron,
    Trapezoidal,
    ClosedForm,
}

impl CoefficientRoute {
    pub fn name(&self) -> &'static str {
        match self {
            CoefficientRoute::Perron => "perron",
            CoefficientRoute::Trapezoidal => "trapezoidal",
            CoefficientRoute::ClosedForm => "closed_form",
        }
    }
}

#[derive(Clone, Debug)]
pub struct CoefficientTable {
    pub saddle_id: usize,
    pub alpha: i64,
    pub omega: u32,
    pub values: Vec<Complex>,
    pub route: CoefficientRoute,
}

impl CoefficientTable {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The same coefficients for another `α`, via `T_r(α′) = e^{2πi(α′−α)(r+1)/ω} T_r(α)`.
    pub fn with_alpha(&self, alpha: i64) -> Self {
        let bits = self.values.first().map(|v| v.prec().0).unwrap_or(64);
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(r, v)| Complex::with_val(bits, v * alpha_phase(bits, alpha - self.alpha, r, self.omega)))
            .collect();
        Self { alpha, values, ..self.clone() }
    }
}

/// `e^{2πiα(r+1)/ω}` with the exponent reduced exactly.
fn alpha_phase(bits: u32, alpha: i64, r: usize, omega: u32) -> Complex {
    let w = omega as i64;
    let num = (alpha * (r as i64 + 1)).rem_euclid(w);
    let pi = Float::with_val(bits, Constant::Pi);
    expi(&(pi * Float::with_val(bits, 2 * num) / w))
}

/// Shifted data about saddle `n`: `c`, the unit series `h` and `g(t_n + τ)`.
struct LocalData {
    omega: u32,
    c: Complex,
    h: TruncatedSeries,
    g: Vec<Complex>,
}

fn local_data(spec: &ProblemSpec, n: usize, bits: u32) -> Result<LocalData> {
    let s = spec.saddle(n)?;
    let omega = s.order_omega;
    let raise = |p: &Polynomial| Polynomial::new(p.coefficients.iter().map(|c| Complex::with_val(bits, c)).collect());
    let t0 = Complex::with_val(bits, &s.location);
    let d = raise(&spec.f).taylor_at(&t0);
    let c = d[omega as usize].clone();
    if c.is_zero() {
        return Err(Error::Validation(format!("saddle {n}: leading Taylor coefficient vanishes")));
    }
    let h = d[omega as usize..].iter().map(|x| Complex::with_val(bits, x / &c)).collect();
    let g = raise(&spec.g).taylor_at(&t0);
    Ok(LocalData { omega, c, h: TruncatedSeries::new(h), g })
}

/// `e^{2πiα(r+1)/ω} c^{−(r+1)/ω} Γ((r+1)/ω)`, `c` on its principal sheet.
fn scalar_factor(c: &Complex, omega: u32, alpha: i64, r: usize, bits: u32) -> Result<Complex> {
    let e = Float::with_val(bits, -(r as i64 + 1)) / omega;
    let cp = PhasedComplex::from_complex(c).pow(&e)?;
    let gam = gamma_real(&Float::with_val(bits, -e))?;
    Ok(cp.to_complex() * gam * alpha_phase(bits, alpha, r, omega))
}

/// Coefficients by the Perron power-series formula.
pub fn perron_coefficients(spec: &ProblemSpec, n: usize, alpha: i64, count: usize) -> Result<CoefficientTable> {
    if count == 0 {
        return Err(Error::Validation("coefficient count must be at least 1".into()));
    }
    let out_bits = spec.bits();
    let bits = out_bits + 32;
    let local = local_data(spec, n, bits)?;
    let values = (0..count)
        .into_par_iter()
        .map(|r| {
            let e = Exponent::ratio(-(r as i64 + 1), local.omega as i64);
            let p = ps_pow_to(&local.h, &e, r + 1)?;
            let mut acc = Complex::new(bits);
            for (j, gj) in local.g.iter().enumerate().take(r + 1) {
                if !gj.is_zero() {
                    acc += Complex::with_val(bits, gj * &p.coefficients[r - j]);
                }
            }
            let v = acc * scalar_factor(&local.c, local.omega, alpha, r, bits)?;
            Ok(Complex::with_val(out_bits, v))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CoefficientTable { saddle_id: n, alpha, omega: local.omega, values, route: CoefficientRoute::Perron })
}

/// Radius used by [`trapezoidal_coefficients`] when none is given: half the
/// distance from `t_n` to the nearest other saddle or other zero of `f − f_n`.
pub fn default_radius(spec: &ProblemSpec, n: usize) -> Result<f64> {
    let s = spec.saddle(n)?;
    let bits = spec.bits();
    let mut nearest = f64::INFINITY;
    for o in spec.saddles.iter().filter(|o| o.id != n) {
        nearest = nearest.min(abs(&Complex::with_val(bits, &o.location - &s.location)).to_f64());
    }
    let d = spec.f.taylor_at(&s.location);
    let q: Vec<(f64, f64)> = d[s.order_omega as usize..]
        .iter()
        .map(|c| (c.real().to_f64(), c.imag().to_f64()))
        .collect();
    for root in polynomial_roots_f64(&q) {
        nearest = nearest.min(root.0.hypot(root.1));
    }
    if !nearest.is_finite() {
        nearest = 2.0;
    }
    Ok(nearest / 2.0)
}

/// Roots of `Σ q_k x^k` by Durand–Kerner iteration in double precision.
fn polynomial_roots_f64(q: &[(f64, f64)]) -> Vec<(f64, f64)> {
    type C = (f64, f64);
    let mul = |a: C, b: C| (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0);
    let div = |a: C, b: C| {
        let d = b.0 * b.0 + b.1 * b.1;
        ((a.0 * b.0 + a.1 * b.1) / d, (a.1 * b.0 - a.0 * b.1) / d)
    };
    let deg = q.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    let lead = q[deg];
    let monic: Vec<C> = q.iter().map(|c| div(*c, lead)).collect();
    let eval = |x: C| monic.iter().rev().fold((0.0, 0.0), |acc, c| {
        let m = mul(acc, x);
        (m.0 + c.0, m.1 + c.1)
    });
    let bound = 1.0 + monic[..deg].iter().map(|c| c.0.hypot(c.1)).fold(0.0, f64::max);
    let mut roots: Vec<C> = (0..deg)
        .map(|k| {
            let a = 0.4 + 2.0 * std::f64::consts::PI * k as f64 / deg as f64;
            (bound * a.cos(), bound * a.sin())
        })
        .collect();
    for _ in 0..500 {
        let mut delta = 0.0f64;
        for i in 0..deg {
            let mut den = (1.0, 0.0);
            for j in 0..deg {
                if i != j {
                    den = mul(den, (roots[i].0 - roots[j].0, roots[i].1 - roots[j].1));
                }
            }
            let step = div(eval(roots[i]), den);
            roots[i] = (roots[i].0 - step.0, roots[i].1 - step.1);
            delta = delta.max(step.0.hypot(step.1));
        }
        if delta < 1e-14 * bound {
            break;
        }
    }
    roots
}

/// Number of circle points per half-turn used by default.
pub fn default_nodes(precision: &Precision, count: usize) -> usize {
    let bits = (precision.digits + precision.guard_digits) as f64 * std::f64::consts::LOG2_10;
    ((bits + count as f64) / 2.0).ceil() as usize + 8
}

/// Coefficients by the trapezoidal rule on `|t − t_n| = rho` with `2M` nodes.
///
/// The root `h^{−(r+1)/ω}` is continued from `h(0) = 1` along the radius and
/// then around the circle. A first pass measures the cancellation in each
/// sum and the rule is re-run with that many extra bits.
pub fn trapezoidal_coefficients(
    spec: &ProblemSpec,
    n: usize,
    alpha: i64,
    count: usize,
    rho: Option<f64>,
    nodes: Option<usize>,
) -> Result<CoefficientTable> {
    if count == 0 {
        return Err(Error::Validation("coefficient count must be at least 1".into()));
    }
    let s = spec.saddle(n)?;
    let rho = match rho {
        Some(r) if r > 0.0 && r.is_finite() => r,
        Some(r) => return Err(Error::Validation(format!("radius must be positive, got {r}"))),
        None => default_radius(spec, n)?,
    };
    for o in spec.saddles.iter().filter(|o| o.id != n) {
        let d = abs(&Complex::with_val(spec.bits(), &o.location - &s.location)).to_f64();
        if d <= rho {
            return Err(Error::Validation(format!(
                "disc of radius {rho} about saddle {n} contains saddle {} at distance {d:.6}",
                o.id
            )));
        }
    }
    let m_half = nodes.unwrap_or_else(|| default_nodes(&spec.precision, count));
    if m_half <= count {
        return Err(Error::Validation(format!("need more than {count} nodes per half-turn, got {m_half}")));
    }
    let first = trapezoid_pass(spec, n, alpha, count, rho, m_half, spec.bits() + 16)?;
    let extra = first.1.ceil().max(0.0) as u32 + 24;
    let (values, _) = trapezoid_pass(spec, n, alpha, count, rho, m_half, spec.bits() + extra)?;
    let values = values.into_iter().map(|v| Complex::with_val(spec.bits(), v)).collect();
    Ok(CoefficientTable { saddle_id: n, alpha, omega: s.order_omega, values, route: CoefficientRoute::Trapezoidal })
}

/// Returns the coefficients and the worst cancellation in bits.
fn trapezoid_pass(
    spec: &ProblemSpec,
    n: usize,
    alpha: i64,
    count: usize,
    rho: f64,
    m_half: usize,
    bits: u32,
) -> Result<(Vec<Complex>, f64)> {
    let local = local_data(spec, n, bits)?;
    let h = Polynomial::new(local.h.coefficients.clone());
    let g = Polynomial::new(local.g.clone());
    let pi = Float::with_val(bits, Constant::Pi);
    let rho_f = Float::with_val(bits, rho);
    let two_m = 2 * m_half;

    let unwrap = |prev: &Float, raw: Float| -> Float {
        let two_pi = Float::with_val(bits, &pi * 2u32);
        let k = Float::with_val(bits, Float::with_val(bits, prev - &raw) / &two_pi).round();
        raw + k * two_pi
    };
    // log h along the radius from 0 to rho
    let radial_steps = 64;
    let mut log_h = Complex::new(bits);
    for j in 1..=radial_steps {
        let x = Complex::with_val(bits, (Float::with_val(bits, &rho_f * j as u32) / radial_steps as u32, 0));
        let v = h.eval(&x);
        if v.is_zero() {
            return Err(Error::Validation(format!("f − f_n vanishes inside the disc about saddle {n}")));
        }
        let im = unwrap(log_h.imag(), arg(&v));
        log_h = Complex::with_val(bits, (abs(&v).ln(), im));
    }
    // then around the circle
    let mut nodes = Vec::with_capacity(two_m);
    let mut logs = Vec::with_capacity(two_m);
    let mut gs = Vec::with_capacity(two_m);
    for m in 0..two_m {
        let ang = Float::with_val(bits, &pi * m as u32) / m_half as u32;
        let w = expi(&ang) * &rho_f;
        let v = h.eval(&w);
        if v.is_zero() {
            return Err(Error::Validation(format!("f − f_n vanishes on the circle about saddle {n}")));
        }
        if m > 0 {
            // sub-steps keep the continuation honest between nodes
            let sub = 4;
            for q in 1..=sub {
                let a = Float::with_val(bits, &pi * (sub * (m - 1) + q) as u32) / (sub * m_half) as u32;
                let vv = h.eval(&(expi(&a) * &rho_f));
                let im = unwrap(log_h.imag(), arg(&vv));
                log_h = Complex::with_val(bits, (abs(&vv).ln(), im));
            }
        }
        gs.push(g.eval(&w));
        logs.push(log_h.clone());
        nodes.push(ang);
    }
    // the continuation must close after a full turn
    {
        let a = Float::with_val(bits, &pi * 2u32);
        let vv = h.eval(&(expi(&a) * &rho_f));
        let im = unwrap(log_h.imag(), arg(&vv));
        let gap = Float::with_val(bits, &im - logs[0].imag()).abs().to_f64();
        if gap > 1.0 {
            return Err(Error::Validation(format!("f − f_n has a zero inside the disc about saddle {n}")));
        }
    }

    let results = (0..count)
        .into_par_iter()
        .map(|r| -> Result<(Complex, f64)> {
            let e = Float::with_val(bits, -(r as i64 + 1)) / local.omega;
            let mut acc = Complex::new(bits);
            let mut biggest = Float::new(bits);
            for m in 0..two_m {
                let phase = Float::with_val(bits, &nodes[m] * r as u32);
                let term = Complex::with_val(bits, &logs[m] * &e).exp() * &gs[m] * expi(&(-phase));
                let t_abs = abs(&term);
                if t_abs > biggest {
                    biggest = t_abs;
                }
                acc += term;
            }
            let rpow = rug::ops::Pow::pow(Float::with_val(bits, &rho_f), r as u32);
            let series_coeff = Complex::with_val(bits, acc / two_m as u32) / rpow;
            let lost = if series_coeff.is_zero() {
                0.0
            } else {
                let ratio = Float::with_val(bits, &biggest / (abs(&series_coeff) * two_m as u32));
                let rp = rug::ops::Pow::pow(Float::with_val(bits, &rho_f), r as u32);
                let ratio = Float::with_val(bits, ratio / rp);
                ratio.log2().to_f64().max(0.0)
            };
            let v = series_coeff * scalar_factor(&local.c, local.omega, alpha, r, bits)?;
            Ok((v, lost))
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = results.iter().map(|x| x.1).fold(0.0, f64::max);
    Ok((results.into_iter().map(|x| x.0).collect(), worst))
}

/// Differenced coefficients `T_r(α) − T_r(α+1)`.
pub fn bold_t_coefficients(table0: &CoefficientTable, table1: &CoefficientTable) -> Result<CoefficientTable> {
    if table0.saddle_id != table1.saddle_id {
        return Err(Error::Validation(format!(
            "differenced coefficients need one saddle, got {} and {}",
            table0.saddle_id, table1.saddle_id
        )));
    }
    if table1.alpha != table0.alpha + 1 {
        return Err(Error::Validation(format!(
            "differenced coefficients need α and α+1, got {} and {}",
            table0.alpha, table1.alpha
        )));
    }
    let values = table0
        .values
        .iter()
        .zip(&table1.values)
        .map(|(a, b)| Complex::with_val(a.prec().0, a - b))
        .collect();
    Ok(CoefficientTable { values, ..table0.clone() })
}

/// `T_r(α) − T_r(α+1)` for `r < count`, from one Perron table at `α = 0`.
pub fn bold_t_from(base: &CoefficientTable, alpha: i64, count: usize) -> Result<CoefficientTable> {
    if count > base.len() {
        return Err(Error::Validation(format!("need {count} coefficients, table has {}", base.len())));
    }
    let mut b = base.clone();
    b.values.truncate(count);
    bold_t_coefficients(&b.with_alpha(alpha), &b.with_alpha(alpha + 1))
}
