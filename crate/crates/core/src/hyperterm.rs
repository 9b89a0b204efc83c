//! Generalized hyperterminants
//!
//! ```text
//! F^{(k+1)}(z; M_0..M_k; ω_0..ω_k; σ_0..σ_k)
//!   = ∫_0^{∞e^{i(π−arg σ_0)}} … ∫_0^{∞e^{i(π−arg σ_k)}}
//!       e^{σ_0 t_0 + … + σ_k t_k} t_0^{M_0−1} ⋯ t_k^{M_k−1}
//!       / ((z^{1/ω_0} − t_0^{1/ω_0}) (t_0^{1/ω_1} − t_1^{1/ω_1}) ⋯) dt_k ⋯ dt_0
//! ```
//!
//! evaluated by rationalising the fractional-power denominators into a
//! finite sum of simple hyperterminants (all `ω = 1`), each of which is a
//! convergent series `Σ_n A(n) U(n+1, 2−M_0, zσ_0)`. A direct nested
//! quadrature of the defining integral serves as an independent oracle for
//! depth at most two.
//!
//! Phases of `z` and `σ_j` are taken from [`PhasedComplex`] unreduced: the
//! integration rays and all fractional powers follow them.

use std::cell::RefCell;

use rug::float::Constant;
use rug::{Complex, Float};

use crate::arith::{abs, expi, gamma_real, polar, PhasedComplex, Precision};
use crate::error::{Error, Result};
use crate::quad::{de_integrate, DeKind};
use crate::specfun::{gauss_2f1, kummer_u_sequence, HypergeoParams};

/// One column `(M, ω, σ)`.
#[derive(Clone, Debug)]
pub struct Column {
    pub m: Float,
    pub omega: u32,
    pub sigma: PhasedComplex,
}

#[derive(Clone, Debug)]
pub struct HyperterminantArgs {
    pub columns: Vec<Column>,
}

impl HyperterminantArgs {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        if columns.len() > 3 {
            return Err(Error::Domain(format!("at most 3 columns are supported, got {}", columns.len())));
        }
        for (j, c) in columns.iter().enumerate() {
            if c.omega == 0 {
                return Err(Error::Domain(format!("column {j}: ω must be positive")));
            }
            if c.sigma.is_zero() {
                return Err(Error::Domain(format!("column {j}: σ must be nonzero")));
            }
            let floor = Float::with_val(c.m.prec(), 1) / c.omega;
            if c.m <= floor {
                return Err(Error::Domain(format!("column {j}: need M > 1/ω, got M = {}", c.m.to_f64())));
            }
        }
        Ok(Self { columns })
    }

    /// Number of nested integrals minus one.
    pub fn depth(&self) -> usize {
        self.columns.len().saturating_sub(1)
    }
}

/// Window integers `γ_0, γ_1, …` (each `γ_j` relative to column `j−1`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaSelection {
    pub gammas: Vec<i64>,
}

impl GammaSelection {
    /// Running sums `γ_0 + … + γ_j`: the total sheet shift of column `j`.
    pub fn cumulative(&self) -> Vec<i64> {
        self.gammas
            .iter()
            .scan(0i64, |acc, g| {
                *acc += g;
                Some(*acc)
            })
            .collect()
    }
}

/// Tuning for the series route.
#[derive(Clone, Debug)]
pub struct HyperOptions {
    /// Target relative accuracy of each simple hyperterminant.
    pub rel_tol: f64,
    /// Upper limit on terms in either series.
    pub max_terms: usize,
    /// Use exactly this many terms in every series instead of adapting.
    pub fixed_terms: Option<usize>,
}

impl HyperOptions {
    pub fn for_precision(p: &Precision) -> Self {
        Self { rel_tol: 10f64.powi(-(p.digits as i32 / 2 + 4)), max_terms: 6000, fixed_terms: None }
    }
}

#[derive(Clone, Debug)]
pub struct HyperValue {
    pub value: Complex,
    /// Absolute truncation estimate.
    pub truncation_estimate: f64,
    /// Largest number of series terms used.
    pub terms: usize,
}

fn two_pi(bits: u32) -> Float {
    Float::with_val(bits, Constant::Pi) * 2u32
}

/// `(x/2π)` is an integer to within rounding.
fn is_multiple_of_two_pi(x: &Float) -> bool {
    let bits = x.prec();
    let r = Float::with_val(bits, x / two_pi(bits));
    let d = Float::with_val(bits, &r - Float::with_val(bits, r.round_ref())).abs();
    d < Float::with_val(bits, Float::i_exp(1, -(bits as i32) / 2))
}

pub fn choose_gammas(z: &PhasedComplex, args: &HyperterminantArgs) -> Result<GammaSelection> {
    let Some(first) = args.columns.first() else {
        return Ok(GammaSelection { gammas: Vec::new() });
    };
    let bits = z.prec();
    let tp = two_pi(bits);
    let pi = Float::with_val(bits, Constant::Pi);
    let s0 = Float::with_val(bits, &z.phase + &first.sigma.phase);
    let g0 = Float::with_val(bits, Float::with_val(bits, -&s0) / &tp).round();
    let shifted = Float::with_val(bits, &s0 + Float::with_val(bits, &g0 * &tp));
    let edge = Float::with_val(bits, &pi - Float::with_val(bits, Float::i_exp(1, -(bits as i32) / 2)));
    if Float::with_val(bits, shifted.abs_ref()) >= edge {
        return Err(Error::Domain("arg z + arg σ_0 is an odd multiple of π".into()));
    }
    let mut gammas = vec![g0.to_f64() as i64];
    for w in args.columns.windows(2) {
        let d = Float::with_val(bits, &w[1].sigma.phase - &w[0].sigma.phase);
        if is_multiple_of_two_pi(&d) {
            return Err(Error::Collinear(format!(
                "arg σ differs by {:.6}π between consecutive columns",
                Float::with_val(bits, &d / &pi).to_f64()
            )));
        }
        let g = Float::with_val(bits, Float::with_val(bits, -&d) / &tp).floor() + 1u32;
        gammas.push(g.to_f64() as i64);
    }
    Ok(GammaSelection { gammas })
}

/// A column of a simple hyperterminant (`ω = 1`).
#[derive(Clone, Debug)]
pub struct SimpleColumn {
    pub m: Float,
    pub sigma: PhasedComplex,
}

fn check_simple(z: &PhasedComplex, cols: &[SimpleColumn]) -> Result<()> {
    let bits = z.prec();
    let pi = Float::with_val(bits, Constant::Pi);
    let tp = two_pi(bits);
    let s0 = Float::with_val(bits, &z.phase + &cols[0].sigma.phase);
    if Float::with_val(bits, s0.abs_ref()) >= pi {
        return Err(Error::Domain("simple hyperterminant needs |arg z + arg σ_0| < π".into()));
    }
    for w in cols.windows(2) {
        let d = Float::with_val(bits, &w[1].sigma.phase - &w[0].sigma.phase);
        if d <= 0 || d >= tp {
            return Err(Error::Domain("simple hyperterminant needs 0 < arg σ_j − arg σ_{j−1} < 2π".into()));
        }
    }
    let k = cols.len() - 1;
    for (j, c) in cols.iter().enumerate() {
        let need = if k == 0 {
            0.0
        } else if j == 1 {
            2.0
        } else {
            1.0
        };
        if c.m <= need {
            return Err(Error::Domain(format!("series route needs M_{j} > {need}, got {}", c.m.to_f64())));
        }
    }
    Ok(())
}

/// `e^{iπM} σ^{1−M}` with σ on its stated sheet.
fn lead_factor(m: &Float, sigma: &PhasedComplex) -> Result<Complex> {
    let bits = m.prec();
    let pi = Float::with_val(bits, Constant::Pi);
    let e = Float::with_val(bits, 1 - Float::with_val(bits, m));
    let s = sigma.pow(&e)?;
    Ok(s.to_complex() * expi(&Float::with_val(bits, &pi * m)))
}

/// Ratio data between two columns: `q = −σ_1/σ_0` through `q⁻¹ = −σ_0/σ_1`,
/// and the transformed argument `y = 1 + σ_0/σ_1 = (1−q)/(−q)` of the
/// coefficient 2F1s.
struct Pair {
    q_inv: Complex,
    y: Complex,
    negligible: bool,
}

fn pair(c0: &SimpleColumn, c1: &SimpleColumn) -> Pair {
    let bits = c0.m.prec();
    let ratio = c0.sigma.div(&c1.sigma);
    let r = polar(&ratio.modulus, &ratio.phase);
    let y = Complex::with_val(bits, &r + 1u32);
    let negligible = abs(&y) < Float::with_val(bits, Float::i_exp(1, -(bits as i32) + 40));
    Pair { q_inv: -r, y, negligible }
}

/// `2F1(a, b; c; y)` at the transformed argument. The coefficients need
/// `q^n 2F1(M_0+n, ·; ·; 1−q)`, whose factors grow and cancel geometrically
/// in `n`; the Euler and Pfaff transformations to `y` remove that.
fn hyp(a: &Float, b: &Float, c: &Float, p: &Pair) -> Result<Complex> {
    let bits = a.prec();
    if p.negligible {
        return Ok(Complex::with_val(bits, (1, 0)));
    }
    gauss_2f1(&HypergeoParams {
        a: Complex::with_val(bits, (a, 0)),
        b: Complex::with_val(bits, (b, 0)),
        c: Complex::with_val(bits, (c, 0)),
        z: Complex::with_val(bits, &p.y),
    })
}

/// `μ_n = ∫_0^1 t^n (1−t)^{M_0+M_1−2} (1−yt)^{−M_1} dt` for `n < count`.
///
/// Integrating `t^n (1−t)(1−yt) w′` by parts gives
/// `y(M_0+n) μ_{n+1} = ((n+1)(1+y) − M_1 y + M_0+M_1−2) μ_n − n μ_{n−1} − δ_{n0}`.
/// Run forwards it is stable for `|y| ≥ 1` and loses `n log₂(1/|y|)` bits
/// below that, which are added as guard bits; for `|y| < 1/2` each moment
/// comes from the `y`-series of `2F1(M_1, n+1; M_0+M_1+n; y)` instead.
fn moments(m0: &Float, m1: &Float, p: &Pair, count: usize) -> Result<Vec<Complex>> {
    let bits = m0.prec();
    let s1 = Float::with_val(bits, m0 + m1) - 1u32;
    // beta factor n! Γ(s+1)/Γ(n+s+2), the moment at y = 0
    let mut beta = Float::with_val(bits, 1 / &s1);
    let ay = abs(&p.y).to_f64();
    if p.negligible || ay < 0.5 {
        let mut out = Vec::with_capacity(count);
        for n in 0..count {
            let f = if p.negligible {
                Complex::with_val(bits, (1, 0))
            } else {
                gauss_2f1(&HypergeoParams {
                    a: Complex::with_val(bits, (m1, 0)),
                    b: Complex::with_val(bits, (n + 1, 0)),
                    c: Complex::with_val(bits, (Float::with_val(bits, &s1 + (n + 1) as u32), 0)),
                    z: p.y.clone(),
                })?
            };
            out.push(f * &beta);
            beta *= (n + 1) as u32;
            beta /= Float::with_val(bits, &s1 + (n + 1) as u32);
        }
        return Ok(out);
    }
    let loss = (count as f64 * (1.0 / ay).log2()).max(0.0).ceil() as u32;
    let wb = bits + 32 + loss;
    let y = Complex::with_val(wb, &p.y);
    let (m0w, m1w) = (Float::with_val(wb, m0), Float::with_val(wb, m1));
    let s = Float::with_val(wb, &m0w + &m1w) - 2u32;
    let f0 = gauss_2f1(&HypergeoParams {
        a: Complex::with_val(wb, (&m1w, 0)),
        b: Complex::with_val(wb, (1, 0)),
        c: Complex::with_val(wb, (Float::with_val(wb, &m0w + &m1w), 0)),
        z: y.clone(),
    })?;
    let mut mu: Vec<Complex> = Vec::with_capacity(count);
    mu.push(f0 / Float::with_val(wb, &s + 1u32));
    let one_plus_y = Complex::with_val(wb, &y + 1u32);
    let m1y = Complex::with_val(wb, &y * &m1w);
    for n in 0..count.saturating_sub(1) {
        let coef = Complex::with_val(wb, &one_plus_y * (n + 1) as u32) - &m1y + &s;
        let mut next = coef * &mu[n];
        if n == 0 {
            next -= 1u32;
        } else {
            next -= Complex::with_val(wb, &mu[n - 1] * n as u32);
        }
        next /= Complex::with_val(wb, &y * Float::with_val(wb, &m0w + n as u32));
        mu.push(next);
    }
    Ok(mu.into_iter().map(|v| Complex::with_val(bits, v)).collect())
}

/// `A^{(2)}(n)` for `n < count`: `e^{πi(M_0+M_1)} σ_0^{1−M_0} σ_1^{1−M_1} Γ(M_1)
/// q^{−1} Γ(M_0+n) μ_n`, the Euler integral of the defining
/// `q^n Γ(M_0+M_1−1) Γ(M_0+n) n!/Γ(M_0+M_1+n) 2F1(M_0+n, n+1; M_0+M_1+n; 1−q)`.
fn a_two_columns(cols: &[SimpleColumn], count: usize) -> Result<Vec<Complex>> {
    let bits = cols[0].m.prec();
    let (m0, m1) = (&cols[0].m, &cols[1].m);
    let p = pair(&cols[0], &cols[1]);
    let lead = lead_factor(m0, &cols[0].sigma)? * lead_factor(m1, &cols[1].sigma)? * gamma_real(m1)? * &p.q_inv;
    let mu = moments(m0, m1, &p, count)?;
    let mut g = gamma_real(m0)?;
    let mut out = Vec::with_capacity(count);
    for (n, mu_n) in mu.iter().enumerate() {
        out.push(Complex::with_val(bits, &lead * mu_n) * &g);
        g *= Float::with_val(bits, m0 + n as u32);
    }
    Ok(out)
}

/// `A^{(k+1)}(n)` for `n < count`, with inner sums over `m < inner` terms.
///
/// Returns the coefficients and, per `n`, an absolute estimate of the
/// dropped inner tail.
fn a_coefficients_vec(cols: &[SimpleColumn], count: usize, inner: usize) -> Result<(Vec<Complex>, Vec<Float>)> {
    let bits = cols[0].m.prec();
    match cols.len() {
        1 => {
            let mut v = vec![Complex::new(bits); count];
            v[0] = lead_factor(&cols[0].m, &cols[0].sigma)? * gamma_real(&cols[0].m)?;
            Ok((v, vec![Float::new(bits); count]))
        }
        2 => Ok((a_two_columns(cols, count)?, vec![Float::new(bits); count])),
        3 => {
            let inner_a = a_two_columns(&cols[1..], inner)?;
            let (m0, m1) = (&cols[0].m, &cols[1].m);
            let p = pair(&cols[0], &cols[1]);
            let sum = Float::with_val(bits, m0 + m1);
            // Pfaff: q^n 2F1(M0+n, n+m+1; c; 1−q) = q^{−M0} 2F1(M0+n, M0+M1−1; c; y),
            // bounded in both n and m
            let q_pow = if p.negligible {
                Complex::with_val(bits, (1, 0))
            } else {
                // principal branch of q, as for the untransformed 2F1 at 1−q
                let ln_q = Complex::with_val(bits, p.q_inv.recip_ref()).ln();
                (ln_q * Float::with_val(bits, -m0)).exp()
            };
            let b_pfaff = Float::with_val(bits, &sum - 1u32);
            let pre = lead_factor(m0, &cols[0].sigma)? * gamma_real(&b_pfaff)? * q_pow;
            // g0 = Γ(M0+n), h0 = n!/Γ(M0+M1+n)
            let mut g0 = gamma_real(m0)?;
            let mut h0 = Float::with_val(bits, 1 / gamma_real(&sum)?);
            let mut out = Vec::with_capacity(count);
            let mut tails = Vec::with_capacity(count);
            for n in 0..count {
                let mut s = Complex::new(bits);
                let mut h = h0.clone();
                let mut last = Float::new(bits);
                let a = Float::with_val(bits, m0 + n as u32);
                for (m, am) in inner_a.iter().enumerate() {
                    let mut t = Complex::with_val(bits, am * &h);
                    if !p.negligible {
                        let c = Float::with_val(bits, &sum + (n + m) as u32);
                        t *= hyp(&a, &b_pfaff, &c, &p)?;
                    }
                    last = abs(&t);
                    s += t;
                    // H(n, m+1) = H(n, m)(n+m+1)/((m+1)(M0+M1+n+m))
                    let den = Float::with_val(bits, &sum + (n + m) as u32) * (m + 1) as u32;
                    h *= (n + m + 1) as u32;
                    h /= den;
                }
                let scale = Float::with_val(bits, &g0 * abs(&pre));
                tails.push(Float::with_val(bits, &last * inner_a.len() as u32) * &scale);
                out.push(Complex::with_val(bits, &pre * &g0) * s);
                let c = Float::with_val(bits, &sum + n as u32);
                h0 *= (n + 1) as u32;
                h0 /= c;
                g0 *= Float::with_val(bits, m0 + n as u32);
            }
            Ok((out, tails))
        }
        _ => Err(Error::Domain("simple hyperterminants need 1 to 3 columns".into())),
    }
}

/// `A^{(k+1)}(n)` for one index, with `series_terms` inner terms, together
/// with the magnitude of the last inner term kept.
pub fn a_coefficient(cols: &[SimpleColumn], n: usize, series_terms: usize) -> Result<(Complex, f64)> {
    let (v, t) = a_coefficients_vec(cols, n + 1, series_terms.max(1))?;
    Ok((v[n].clone(), t[n].to_f64()))
}

/// Simple hyperterminant `F^{(k+1)}` (all `ω = 1`) by the `A`/`U` series.
pub fn simple_hyperterminant(z: &PhasedComplex, cols: &[SimpleColumn], opts: &HyperOptions) -> Result<HyperValue> {
    if cols.is_empty() {
        return Ok(HyperValue { value: Complex::with_val(z.prec(), (1, 0)), truncation_estimate: 0.0, terms: 0 });
    }
    check_simple(z, cols)?;
    let out_bits = z.prec();
    let bits = out_bits + 32;
    let cols: Vec<SimpleColumn> = cols
        .iter()
        .map(|c| SimpleColumn {
            m: Float::with_val(bits, &c.m),
            sigma: PhasedComplex::new(Float::with_val(bits, &c.sigma.modulus), Float::with_val(bits, &c.sigma.phase)),
        })
        .collect();
    let z = PhasedComplex::new(Float::with_val(bits, &z.modulus), Float::with_val(bits, &z.phase));
    let w = z.mul(&cols[0].sigma);
    let b = Complex::with_val(bits, (2 - Float::with_val(bits, &cols[0].m), 0));

    if cols.len() == 1 {
        let u = kummer_u_sequence(&b, &w, 1)?;
        let v = lead_factor(&cols[0].m, &cols[0].sigma)? * gamma_real(&cols[0].m)? * &u[0];
        return Ok(HyperValue { value: Complex::with_val(out_bits, v), truncation_estimate: 0.0, terms: 1 });
    }

    let wabs = w.modulus.to_f64().max(1e-3);
    let digits = -opts.rel_tol.log10() + 2.0;
    let guess = ((digits * std::f64::consts::LN_10 / 2.0).powi(2) / wabs) as usize / 2;
    let (mut n_count, mut m_count) = match opts.fixed_terms {
        Some(t) => (t, t),
        None => (guess.clamp(40, opts.max_terms), 40),
    };
    loop {
        let u = kummer_u_sequence(&b, &w, n_count)?;
        let (a, tails) = a_coefficients_vec(&cols, n_count, m_count)?;
        let mut sum = Complex::new(bits);
        let mut inner_err = Float::new(bits);
        let mut mags = Vec::with_capacity(n_count);
        for n in 0..n_count {
            let t = Complex::with_val(bits, &a[n] * &u[n]);
            mags.push(abs(&t).to_f64());
            inner_err += Float::with_val(bits, &tails[n] * abs(&u[n]));
            sum += t;
        }
        let total = abs(&sum).to_f64();
        let last = mags.iter().rev().take(3).cloned().fold(0.0, f64::max);
        let outer_err = last * (1.0 + 2.0 * (n_count as f64 / wabs).sqrt());
        let inner_err = inner_err.to_f64();
        let target = opts.rel_tol * total;
        let estimate = outer_err + inner_err;
        let done_outer = outer_err <= target;
        let done_inner = inner_err <= target;
        if opts.fixed_terms.is_some() || (done_outer && done_inner) {
            return Ok(HyperValue {
                value: Complex::with_val(out_bits, sum),
                truncation_estimate: estimate,
                terms: n_count.max(if cols.len() == 3 { m_count } else { 0 }),
            });
        }
        if !done_outer {
            n_count *= 2;
        }
        if !done_inner {
            m_count *= 2;
        }
        if n_count > opts.max_terms || m_count > opts.max_terms {
            return Err(Error::Accuracy(format!(
                "hyperterminant series did not reach {:.1e} relative within {} terms (estimate {:.2e})",
                opts.rel_tol, opts.max_terms, estimate / total.max(1e-300)
            )));
        }
    }
}

/// Generalized hyperterminant by reduction to simple ones.
pub fn hyperterminant(z: &PhasedComplex, args: &HyperterminantArgs, opts: &HyperOptions) -> Result<HyperValue> {
    let bits = z.prec();
    if args.columns.is_empty() {
        return Ok(HyperValue { value: Complex::with_val(bits, (1, 0)), truncation_estimate: 0.0, terms: 0 });
    }
    let pi = Float::with_val(bits, Constant::Pi);
    let c0 = &args.columns[0];
    let s0 = Float::with_val(bits, &z.phase + &c0.sigma.phase);
    if Float::with_val(bits, s0.abs_ref()) >= Float::with_val(bits, &pi * c0.omega) {
        return Err(Error::Domain(format!(
            "hyperterminant needs |arg(σ_0 z)| < πω_0; got {:.6}π with ω_0 = {}",
            Float::with_val(bits, &s0 / &pi).to_f64(),
            c0.omega
        )));
    }
    let gammas = choose_gammas(z, args)?;
    let g = gammas.cumulative();
    let tp = two_pi(bits);
    let k = args.columns.len() - 1;
    let mut total = Complex::new(bits);
    let mut estimate = 0.0;
    let mut terms = 0;
    for ls in ell_tuples(&args.columns) {
        let mut cols = Vec::with_capacity(k + 1);
        let mut phase = Float::new(bits);
        for j in 0..=k {
            let cj = &args.columns[j];
            let mut m = Float::with_val(bits, &cj.m) + Float::with_val(bits, ls[j] as u32) / cj.omega;
            if j < k {
                let next = &args.columns[j + 1];
                m -= Float::with_val(bits, (ls[j + 1] + 1) as u32) / next.omega;
                m += 1u32;
            }
            let shift = Float::with_val(bits, &tp * g[j]);
            phase += Float::with_val(bits, &shift * &m);
            cols.push(SimpleColumn { sigma: cj.sigma.rotate(&shift), m });
        }
        let e = Float::with_val(bits, 1u32) - Float::with_val(bits, (ls[0] + 1) as u32) / c0.omega;
        let pre = z.pow(&e)?.to_complex() * expi(&phase);
        let v = simple_hyperterminant(z, &cols, opts)?;
        estimate += v.truncation_estimate * abs(&pre).to_f64();
        terms = terms.max(v.terms);
        total += pre * v.value;
    }
    Ok(HyperValue { value: total, truncation_estimate: estimate, terms })
}

/// `(ℓ_0, …, ℓ_k)` with `ℓ_j < ω_j`, lexicographic.
fn ell_tuples(cols: &[Column]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for c in cols {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..c.omega).map(move |l| {
                    let mut q = p.clone();
                    q.push(l);
                    q
                })
            })
            .collect();
    }
    out
}

/// Limit of the hyperterminant as `σ_j → σ_j e^{−(k−j)εi}`, `ε → 0⁺`, by
/// polynomial extrapolation in `ε` through the given (descending) values.
pub fn hyperterminant_collinear(
    z: &PhasedComplex,
    args: &HyperterminantArgs,
    epsilons: &[f64],
    opts: &HyperOptions,
) -> Result<HyperValue> {
    match choose_gammas(z, args) {
        Err(Error::Collinear(_)) => {}
        Err(e) => return Err(e),
        Ok(_) => return hyperterminant(z, args, opts),
    }
    if epsilons.len() < 2 || epsilons.windows(2).any(|w| !(w[0] > w[1] && w[1] > 0.0)) {
        return Err(Error::Domain("need at least two positive, strictly descending ε values".into()));
    }
    let bits = z.prec();
    let k = args.columns.len() - 1;
    let mut values = Vec::with_capacity(epsilons.len());
    let mut est = 0.0f64;
    for &eps in epsilons {
        let cols = args
            .columns
            .iter()
            .enumerate()
            .map(|(j, c)| Column {
                sigma: c.sigma.rotate(&Float::with_val(bits, -eps * (k - j) as f64)),
                ..c.clone()
            })
            .collect();
        let v = hyperterminant(z, &HyperterminantArgs { columns: cols }, opts)?;
        est = est.max(v.truncation_estimate);
        values.push(v.value);
    }
    // Neville's scheme evaluated at ε = 0
    let xs: Vec<Float> = epsilons.iter().map(|&e| Float::with_val(bits, e)).collect();
    let mut table = values.clone();
    let mut previous = table[0].clone();
    let mut best = table[0].clone();
    for level in 1..xs.len() {
        for i in 0..xs.len() - level {
            let (xi, xj) = (&xs[i], &xs[i + level]);
            let num = Complex::with_val(bits, &table[i + 1] * xi) - Complex::with_val(bits, &table[i] * xj);
            table[i] = num / Float::with_val(bits, xi - xj);
        }
        previous = std::mem::replace(&mut best, table[0].clone());
    }
    let extrapolation = abs(&Complex::with_val(bits, &best - &previous)).to_f64();
    let tol = opts.rel_tol.max(1e-300) * abs(&best).to_f64() * 1e6;
    if extrapolation > tol {
        return Err(Error::Accuracy(format!(
            "ε-extrapolation changed by {extrapolation:.2e} at the last step (tolerance {tol:.2e})"
        )));
    }
    Ok(HyperValue { value: best, truncation_estimate: est + extrapolation, terms: 0 })
}

/// Default ε ladder for [`hyperterminant_collinear`].
pub const DEFAULT_EPSILONS: [f64; 4] = [1e-6, 1e-7, 1e-8, 1e-9];

/// Direct nested quadrature of the defining integral (oracle, depth ≤ 2).
pub fn hyperterminant_quadrature(z: &PhasedComplex, args: &HyperterminantArgs, rel_tol: f64) -> Result<Complex> {
    let bits = z.prec();
    let pi = Float::with_val(bits, Constant::Pi);
    match args.columns.len() {
        0 => Ok(Complex::with_val(bits, (1, 0))),
        1 | 2 => {
            let k = args.columns.len() - 1;
            for w in args.columns.windows(2) {
                let d = Float::with_val(bits, &w[1].sigma.phase - &w[0].sigma.phase);
                if is_multiple_of_two_pi(&d) {
                    return Err(Error::Collinear("quadrature oracle needs non-collinear phases".into()));
                }
            }
            let c0 = args.columns[0].clone();
            let ray0 = Float::with_val(bits, &pi - &c0.sigma.phase);
            // the pole z^{1/ω} = t^{1/ω} lies on the ray when θ ≡ ray mod 2πω
            let diff = Float::with_val(bits, &z.phase - &ray0) / c0.omega;
            if is_multiple_of_two_pi(&diff) {
                return Err(Error::Domain("the integration ray passes through the pole at t = z".into()));
            }
            let zroot = z.pow(&(Float::with_val(bits, 1) / c0.omega))?.to_complex();
            let inner = if k == 1 { Some(InnerRule::new(&args.columns[1], rel_tol)) } else { None };
            let outer = |x: &Float| -> Result<Complex> {
                let t = PhasedComplex::new(x.clone(), ray0.clone());
                let mut v = ray_factor(&t, &c0)?;
                let troot = t.pow(&(Float::with_val(bits, 1) / c0.omega))?.to_complex();
                v /= Complex::with_val(bits, &zroot - troot);
                if let Some(rule) = &inner {
                    v *= rule.eval(&t)?;
                }
                Ok(v)
            };
            split_ray(&Float::with_val(bits, &z.modulus), &c0.sigma.modulus, rel_tol, outer)
        }
        _ => Err(Error::Domain("quadrature oracle supports depth ≤ 2".into())),
    }
}

/// `e^{σt} t^{M−1} dt/dx` on the ray `t = x e^{i(π − arg σ)}`.
fn ray_factor(t: &PhasedComplex, c: &Column) -> Result<Complex> {
    let bits = t.prec();
    let m1 = Float::with_val(bits, &c.m - 1u32);
    let decay = Float::with_val(bits, -Float::with_val(bits, &c.sigma.modulus * &t.modulus)).exp();
    let p = t.pow(&m1)?.to_complex();
    Ok(p * expi(&t.phase) * decay)
}

/// Inner integral of the two-column oracle along the ray of `c1`, for many
/// outer points. Exp-sinh nodes `x = e^{(π/2) sinh u}/|σ_1|` and the part of
/// the integrand that does not involve the outer point are computed once per
/// refinement level and shared by every outer point.
struct InnerRule<'a> {
    c1: &'a Column,
    ray: Float,
    root_exp: Float,
    scale: Float,
    rel_tol: f64,
    /// Level 0 holds `u = jh_0`; level `k ≥ 1` the odd multiples of `h_0/2^k`.
    /// Each node stores `(dx/du) · e^{σt} t^{M−1} dt/dx` and `t^{1/ω}`.
    levels: RefCell<Vec<Vec<(Complex, Complex)>>>,
}

const INNER_H0: f64 = 0.5;
const INNER_MAX_LEVEL: usize = 14;

impl<'a> InnerRule<'a> {
    fn new(c1: &'a Column, rel_tol: f64) -> Self {
        let bits = c1.m.prec();
        let ray = Float::with_val(bits, Float::with_val(bits, Constant::Pi) - &c1.sigma.phase);
        let root_exp = Float::with_val(bits, 1) / c1.omega;
        let scale = Float::with_val(bits, 1 / &c1.sigma.modulus);
        Self { c1, ray, root_exp, scale, rel_tol, levels: RefCell::new(Vec::new()) }
    }

    fn node(&self, u: &Float) -> Result<Option<(Complex, Complex)>> {
        let bits = u.prec();
        let half_pi = Float::with_val(bits, Constant::Pi) / 2u32;
        let e = Float::with_val(bits, &half_pi * Float::with_val(bits, u.sinh_ref())).exp();
        let x = Float::with_val(bits, &self.scale * &e);
        if x.is_zero() || x.is_infinite() {
            return Ok(None);
        }
        let w = Float::with_val(bits, &x * &half_pi) * Float::with_val(bits, u.cosh_ref());
        let t = PhasedComplex::new(x, self.ray.clone());
        let g = ray_factor(&t, self.c1)? * w;
        Ok(Some((g, t.pow(&self.root_exp)?.to_complex())))
    }

    /// Nodes `u = ±first, ±(first + step), …` until the weighted integrand
    /// is negligible on each side (`u = 0` once when `first = 0`).
    fn sweep(&self, first: &Float, step: &Float, floor: &Float) -> Result<Vec<(Complex, Complex)>> {
        let bits = first.prec();
        let mut out = Vec::new();
        for sign in [1i32, -1] {
            let mut u = Float::with_val(bits, first * sign);
            if sign == -1 && first.is_zero() {
                u = Float::with_val(bits, -step.clone());
            }
            let mut small = 0;
            while Float::with_val(bits, u.abs_ref()) <= 7.0 {
                let Some(n) = self.node(&u)? else { break };
                let negligible = abs(&n.0) <= *floor;
                out.push(n);
                small = if negligible { small + 1 } else { 0 };
                if small >= 3 {
                    break;
                }
                u += Float::with_val(bits, step * sign);
            }
        }
        Ok(out)
    }

    fn ensure(&self, level: usize) -> Result<()> {
        let bits = self.c1.m.prec();
        let mut levels = self.levels.borrow_mut();
        while levels.len() <= level {
            let k = levels.len();
            // negligible relative to the e^{−1}-scale bulk of the integrand
            let peak = self.node(&Float::new(bits))?.map(|n| abs(&n.0)).unwrap_or_else(|| Float::new(bits));
            let floor = Float::with_val(bits, &peak * Float::with_val(bits, Float::i_exp(1, -(bits as i32) - 20)));
            let h = Float::with_val(bits, INNER_H0) / Float::with_val(bits, Float::i_exp(1, k as i32));
            let nodes = if k == 0 {
                self.sweep(&Float::new(bits), &h, &floor)?
            } else {
                self.sweep(&h, &Float::with_val(bits, &h * 2u32), &floor)?
            };
            levels.push(nodes);
        }
        Ok(())
    }

    fn eval(&self, t0: &PhasedComplex) -> Result<Complex> {
        let bits = t0.prec();
        let root0 = t0.pow(&self.root_exp)?.to_complex();
        let level_sum = |nodes: &[(Complex, Complex)]| {
            let mut s = Complex::new(bits);
            for (g, r) in nodes {
                s += Complex::with_val(bits, g / Complex::with_val(bits, &root0 - r));
            }
            s
        };
        self.ensure(0)?;
        let mut raw = level_sum(&self.levels.borrow()[0]);
        let mut h = Float::with_val(bits, INNER_H0);
        let mut value = Complex::with_val(bits, &raw * &h);
        let mut last_rel = f64::INFINITY;
        for k in 1..=INNER_MAX_LEVEL {
            self.ensure(k)?;
            raw += level_sum(&self.levels.borrow()[k]);
            h /= 2u32;
            let next = Complex::with_val(bits, &raw * &h);
            let diff = abs(&Complex::with_val(bits, &next - &value));
            let mag = abs(&next);
            value = next;
            let rel = if mag.is_zero() { diff.to_f64() } else { (diff / mag).to_f64() };
            let converging = rel < last_rel || rel == 0.0;
            last_rel = rel;
            if k >= 3 && converging && (rel == 0.0 || rel * rel < self.rel_tol * 1e-4) {
                return Ok(value);
            }
        }
        Err(Error::Accuracy(format!("inner oracle integral did not converge (last change {last_rel:.1e})")))
    }
}

/// `∫_0^∞ f(x) dx` for an integrand decaying like `e^{−rate·x}`, split at
/// the decay scale and at `x = at` (the point nearest a pole) when that point
/// carries weight.
fn split_ray<F>(at: &Float, rate: &Float, rel_tol: f64, f: F) -> Result<Complex>
where
    F: Fn(&Float) -> Result<Complex>,
{
    let bits = at.prec();
    let scale = Float::with_val(bits, 1 / rate);
    let reach = -rel_tol.ln() + 10.0;
    let mut cuts = vec![scale.clone()];
    let lo = Float::with_val(bits, &scale * 1e-6);
    let hi = Float::with_val(bits, &scale * reach);
    if *at > lo && *at < hi {
        cuts.push(at.clone());
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| Float::with_val(bits, &*a - &*b).abs() < Float::with_val(bits, &*b * 1e-12));
    let mut total = Complex::new(bits);
    let mut left = Float::new(bits);
    for c in &cuts {
        total += de_integrate(DeKind::Finite, &left, Some(c), rel_tol, |x, _, _| f(x))?.value;
        left = c.clone();
    }
    total += de_integrate(DeKind::HalfLine, &left, None, rel_tol, |x, _, _| f(x))?.value;
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> Precision {
        Precision::new(30).unwrap()
    }

    fn ph(p: &Precision, m: f64, phase_over_pi: f64) -> PhasedComplex {
        PhasedComplex::from_phase_over_pi(p.float(m), &p.float(phase_over_pi))
    }

    fn col(p: &Precision, m: f64, omega: u32, sm: f64, sp: f64) -> Column {
        Column { m: p.float(m), omega, sigma: ph(p, sm, sp) }
    }

    fn rel(a: &Complex, b: &Complex) -> f64 {
        (abs(&Complex::with_val(a.prec().0, a - b)) / abs(b)).to_f64()
    }

    #[test]
    fn gamma_windows() {
        let p = p();
        let z = ph(&p, 1.0, -0.25);
        let args = HyperterminantArgs::new(vec![col(&p, 3.0, 2, 6.75, 0.5), col(&p, 3.0, 3, 6.75, -4.5)]).unwrap();
        assert_eq!(choose_gammas(&z, &args).unwrap().gammas, vec![0, 3]);
        let coll = HyperterminantArgs::new(vec![col(&p, 3.0, 1, 1.0, 1.0), col(&p, 3.0, 1, 1.0, 1.0)]).unwrap();
        assert!(matches!(choose_gammas(&z, &coll), Err(Error::Collinear(_))));
    }

    #[test]
    fn a_one_column() {
        let p = p();
        let c = [SimpleColumn { m: p.float(3.0), sigma: ph(&p, 1.0, 1.0) }];
        let (a0, _) = a_coefficient(&c, 0, 10).unwrap();
        assert!(rel(&a0, &p.complex(-2.0, 0.0)) < 1e-30);
        let (a1, _) = a_coefficient(&c, 1, 10).unwrap();
        assert!(a1.is_zero());
    }

    #[test]
    fn empty_hyperterminant_is_one() {
        let p = p();
        let v = hyperterminant(&ph(&p, 2.0, 0.1), &HyperterminantArgs::new(vec![]).unwrap(), &HyperOptions::for_precision(&p))
            .unwrap();
        assert_eq!(v.value, p.complex(1.0, 0.0));
    }

    #[test]
    fn one_column_matches_quadrature() {
        let p = p();
        let z = ph(&p, 1.0, -0.25);
        let args = HyperterminantArgs::new(vec![col(&p, 7.0, 2, 6.75, 0.5)]).unwrap();
        let s = hyperterminant(&z, &args, &HyperOptions::for_precision(&p)).unwrap();
        let q = hyperterminant_quadrature(&z, &args, 1e-20).unwrap();
        assert!(rel(&s.value, &q) < 1e-18, "{}", rel(&s.value, &q));
    }

    #[test]
    fn simple_one_column_at_real_argument() {
        // F^{(1)}(5; 2, 1, 1) = e^{2πi} Γ(2) U(1, 0, 5)
        let p = p();
        let z = ph(&p, 5.0, 0.0);
        let args = HyperterminantArgs::new(vec![col(&p, 2.0, 1, 1.0, 0.0)]).unwrap();
        let s = hyperterminant(&z, &args, &HyperOptions::for_precision(&p)).unwrap();
        let q = hyperterminant_quadrature(&z, &args, 1e-20).unwrap();
        assert!(rel(&s.value, &q) < 1e-18);
    }

    #[test]
    fn two_columns_match_quadrature() {
        let p = p();
        let z = ph(&p, 1.0, -0.25);
        let args = HyperterminantArgs::new(vec![col(&p, 5.5, 2, 6.75, 0.5), col(&p, 4.2, 3, 6.75, -4.5)]).unwrap();
        let s = hyperterminant(&z, &args, &HyperOptions::for_precision(&p)).unwrap();
        let q = hyperterminant_quadrature(&z, &args, 1e-16).unwrap();
        assert!(rel(&s.value, &q) < 1e-13, "{}", rel(&s.value, &q));
    }

    #[test]
    fn generic_two_column_ratio_matches_quadrature() {
        let p = p();
        let z = ph(&p, 1.7, 0.1);
        let args = HyperterminantArgs::new(vec![col(&p, 3.5, 1, 2.0, 0.3), col(&p, 2.6, 2, 1.3, 1.1)]).unwrap();
        let s = hyperterminant(&z, &args, &HyperOptions::for_precision(&p)).unwrap();
        let q = hyperterminant_quadrature(&z, &args, 1e-16).unwrap();
        assert!(rel(&s.value, &q) < 1e-13, "{}", rel(&s.value, &q));
    }

    #[test]
    fn moment_branches_match_quadrature() {
        // |1 + σ_0/σ_1| ≈ 0.27, 0.94 and 1.09: y-series, guarded and plain recurrence
        let p = p();
        let z = ph(&p, 1.7, 0.1);
        let opts = HyperOptions::for_precision(&p);
        for (c0, c1) in [
            (col(&p, 3.5, 1, 1.0, 0.3), col(&p, 2.6, 1, 1.3, 1.25)),
            (col(&p, 3.5, 1, 2.0, 0.3), col(&p, 2.6, 2, 1.3, 1.1)),
            (col(&p, 2.5, 2, 1.4, -1.2), col(&p, 3.7, 2, 6.4, -1.6)),
        ] {
            let args = HyperterminantArgs::new(vec![c0, c1]).unwrap();
            let s = hyperterminant(&z, &args, &opts).unwrap();
            let q = hyperterminant_quadrature(&z, &args, 1e-18).unwrap();
            assert!(rel(&s.value, &q) < 1e-16, "{}", rel(&s.value, &q));
        }
    }

    #[test]
    fn convergence_condition_is_enforced() {
        let p = p();
        let z = ph(&p, 1.0, 1.8);
        let args = HyperterminantArgs::new(vec![col(&p, 3.0, 1, 1.0, 0.5)]).unwrap();
        assert!(matches!(hyperterminant(&z, &args, &HyperOptions::for_precision(&p)), Err(Error::Domain(_))));
        assert!(HyperterminantArgs::new(vec![col(&p, 0.4, 2, 1.0, 0.5)]).is_err());
    }

    #[test]
    fn two_columns_frozen_value() {
        // independent mpmath evaluation of the series route and of the nested integral
        let p = p();
        let z = ph(&p, 1.0, -0.25);
        let args = HyperterminantArgs::new(vec![col(&p, 5.5, 2, 6.75, 0.5), col(&p, 4.2, 3, 6.75, -4.5)]).unwrap();
        let s = hyperterminant(&z, &args, &HyperOptions::for_precision(&p)).unwrap();
        let expect = Complex::with_val(p.bits(), (
            Float::parse("2.827264790896566463e-6").unwrap(),
            Float::parse("-2.5115637316363031424e-6").unwrap(),
        ));
        assert!(rel(&s.value, &expect) < 1e-17, "{}", rel(&s.value, &expect));
    }

    #[test]
    fn more_series_terms_stay_within_estimate() {
        let p = p();
        let z = ph(&p, 3.0, -0.25);
        let args = HyperterminantArgs::new(vec![col(&p, 5.5, 2, 6.75, 0.5), col(&p, 4.2, 3, 6.75, -4.5)]).unwrap();
        let run = |t| {
            let opts = HyperOptions { fixed_terms: Some(t), ..HyperOptions::for_precision(&p) };
            hyperterminant(&z, &args, &opts).unwrap()
        };
        let (a, b) = (run(40), run(60));
        let d = abs(&Complex::with_val(p.bits(), &a.value - &b.value)).to_f64();
        assert!(d <= a.truncation_estimate, "{d:.3e} vs {:.3e}", a.truncation_estimate);
    }

    #[test]
    fn collinear_limit_is_self_consistent() {
        let p = p();
        let z = ph(&p, 2.0, 0.1);
        let args = HyperterminantArgs::new(vec![col(&p, 3.5, 1, 2.0, 0.3), col(&p, 3.2, 2, 1.5, 2.3)]).unwrap();
        let opts = HyperOptions::for_precision(&p);
        let a = hyperterminant_collinear(&z, &args, &DEFAULT_EPSILONS, &opts).unwrap();
        let b = hyperterminant_collinear(&z, &args, &[2e-6, 5e-7, 1e-7, 2e-8], &opts).unwrap();
        assert!(rel(&a.value, &b.value) < 1e-20, "{}", rel(&a.value, &b.value));
        let generic = HyperterminantArgs::new(vec![col(&p, 3.5, 1, 2.0, 0.3), col(&p, 3.2, 2, 1.5, 1.3)]).unwrap();
        let direct = hyperterminant(&z, &generic, &opts).unwrap();
        let routed = hyperterminant_collinear(&z, &generic, &DEFAULT_EPSILONS, &opts).unwrap();
        assert_eq!(direct.value, routed.value);
    }
}
