//! Quadrature rules at arbitrary precision: cached Gauss–Legendre nodes and
//! double-exponential (tanh-sinh, exp-sinh) rules with level doubling.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rug::float::Constant;
use rug::{Complex, Float};

use crate::arith::abs;
use crate::error::{Error, Result};

/// Nodes and weights on `[-1, 1]`, ascending.
#[derive(Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<Float>,
    pub weights: Vec<Float>,
}

static GL_CACHE: Mutex<Option<HashMap<(usize, u32), Arc<GaussLegendre>>>> = Mutex::new(None);

pub fn gauss_legendre(n: usize, bits: u32) -> Arc<GaussLegendre> {
    {
        let mut g = GL_CACHE.lock().unwrap();
        if let Some(r) = g.get_or_insert_with(HashMap::new).get(&(n, bits)) {
            return r.clone();
        }
    }
    let rule = Arc::new(build_gauss_legendre(n, bits));
    GL_CACHE.lock().unwrap().as_mut().unwrap().insert((n, bits), rule.clone());
    rule
}

fn build_gauss_legendre(n: usize, bits: u32) -> GaussLegendre {
    let work = bits + 16;
    let pi = Float::with_val(work, Constant::Pi);
    let mut nodes = vec![Float::new(bits); n];
    let mut weights = vec![Float::new(bits); n];
    let tol = Float::with_val(work, Float::i_exp(1, -(bits as i32)));
    for i in 0..n.div_ceil(2) {
        let guess = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut x = Float::with_val(work, guess);
        let mut dp = Float::new(work);
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, &x);
            let dx = Float::with_val(work, &p / &d);
            x -= &dx;
            dp = d;
            if dx.abs() < tol {
                let (_, d) = legendre_with_derivative(n, &x);
                dp = d;
                break;
            }
        }
        let one_minus = Float::with_val(work, 1 - Float::with_val(work, x.square_ref()));
        let w = Float::with_val(work, 2u32) / (one_minus * Float::with_val(work, dp.square_ref()));
        let _ = &pi;
        nodes[n - 1 - i] = Float::with_val(bits, &x);
        nodes[i] = Float::with_val(bits, -x);
        weights[i] = Float::with_val(bits, &w);
        weights[n - 1 - i] = Float::with_val(bits, w);
    }
    GaussLegendre { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: &Float) -> (Float, Float) {
    let bits = x.prec();
    let mut p0 = Float::with_val(bits, 1);
    let mut p1 = x.clone();
    for k in 2..=n {
        let p2 = (Float::with_val(bits, x * &p1) * (2 * k - 1) as u32 - Float::with_val(bits, &p0 * (k - 1) as u32))
            / k as u32;
        p0 = p1;
        p1 = p2;
    }
    let one_minus = Float::with_val(bits, 1 - Float::with_val(bits, x.square_ref()));
    let d = (Float::with_val(bits, &p0 - x * Float::with_val(bits, &p1)) * n as u32) / one_minus;
    (p1, d)
}

/// Double-exponential rule family.
#[derive(Clone, Copy, Debug)]
pub enum DeKind {
    /// Finite interval `[a, b]` via `tanh(π/2 sinh t)`.
    Finite,
    /// Half line `[a, ∞)` via `exp(π/2 sinh t)`.
    HalfLine,
}

/// Result of an adaptive rule: value and the last level-to-level difference.
#[derive(Clone, Debug)]
pub struct QuadResult {
    pub value: Complex,
    pub error_estimate: f64,
}

/// Integrates `f(x)` over `[a, b]` (or `[a, ∞)` for [`DeKind::HalfLine`]).
///
/// `f` receives the abscissa and, for the finite rule, its distances to the
/// two end points (computed without cancellation).
pub fn de_integrate<F>(kind: DeKind, a: &Float, b: Option<&Float>, rel_tol: f64, f: F) -> Result<QuadResult>
where
    F: Fn(&Float, &Float, &Float) -> Result<Complex>,
{
    let bits = a.prec();
    let half_pi = Float::with_val(bits, Constant::Pi) / 2u32;
    let width = match (kind, b) {
        (DeKind::Finite, Some(b)) => Float::with_val(bits, b - a),
        (DeKind::Finite, None) => return Err(Error::Domain("finite rule needs an upper limit".into())),
        (DeKind::HalfLine, _) => Float::with_val(bits, 1),
    };
    let tiny = Float::with_val(bits, Float::i_exp(1, -20 * bits as i32));

    let point = |t: &Float| -> Result<Option<Complex>> {
        let sh = Float::with_val(bits, t.sinh_ref());
        let ch = Float::with_val(bits, t.cosh_ref());
        let u = Float::with_val(bits, &half_pi * &sh);
        match kind {
            DeKind::Finite => {
                // x - a = w/(1+e^{-2u}), b - x = w/(1+e^{2u})
                let e2 = Float::with_val(bits, Float::with_val(bits, &u * 2u32).exp_ref());
                let da = Float::with_val(bits, &width / Float::with_val(bits, 1 + Float::with_val(bits, 1 / &e2)));
                let db = Float::with_val(bits, &width / Float::with_val(bits, 1 + &e2));
                if da <= tiny || db <= tiny {
                    return Ok(None);
                }
                let x = Float::with_val(bits, a + &da);
                let cu = Float::with_val(bits, u.cosh_ref());
                let w = Float::with_val(bits, &width / 2u32) * &half_pi * ch
                    / Float::with_val(bits, cu.square_ref());
                Ok(Some(f(&x, &da, &db)? * w))
            }
            DeKind::HalfLine => {
                let e = u.exp();
                if e <= tiny {
                    return Ok(None);
                }
                let x = Float::with_val(bits, a + &e);
                let w = Float::with_val(bits, &half_pi * &ch) * &e;
                let inf = Float::with_val(bits, 0);
                Ok(Some(f(&x, &e, &inf)? * w))
            }
        }
    };

    // sweep t = ±h, ±2h, … (or odd multiples only) until terms vanish
    let sweep = |h: &Float, odd_only: bool, sign: i64, scale: &Float| -> Result<Complex> {
        let mut s = Complex::new(bits);
        let mut small = 0;
        let step = if odd_only { 2 } else { 1 };
        let floor = Float::with_val(bits, scale * Float::with_val(bits, Float::i_exp(1, -(bits as i32) - 20)));
        let mut j: i64 = sign;
        loop {
            let t = Float::with_val(bits, h * j);
            if t.clone().abs() > 7.0 {
                break;
            }
            let Some(v) = point(&t)? else { break };
            let m = abs(&v);
            s += &v;
            if m <= floor {
                small += 1;
                if small >= 3 {
                    break;
                }
            } else {
                small = 0;
            }
            j += step * sign;
        }
        Ok(s)
    };

    let mut h = Float::with_val(bits, 0.5);
    let centre = point(&Float::new(bits))?.unwrap_or_else(|| Complex::new(bits));
    let mut raw = centre.clone();
    let scale0 = abs(&centre).max(&Float::with_val(bits, 1e-300));
    raw += sweep(&h, false, 1, &scale0)?;
    raw += sweep(&h, false, -1, &scale0)?;
    let mut value = Complex::with_val(bits, &raw * &h);
    let mut prev_rel = f64::INFINITY;
    let mut last_rel = f64::INFINITY;
    for level in 0..16 {
        h /= 2u32;
        let scale = abs(&value).max(&scale0);
        raw += sweep(&h, true, 1, &scale)?;
        raw += sweep(&h, true, -1, &scale)?;
        let next = Complex::with_val(bits, &raw * &h);
        let diff = abs(&Complex::with_val(bits, &next - &value));
        let mag = abs(&next);
        value = next;
        let rel = if mag.is_zero() { diff.to_f64() } else { (diff / mag).to_f64() };
        prev_rel = std::mem::replace(&mut last_rel, rel);
        // the error of the finer level is roughly the square of the difference
        let converging = rel < prev_rel || rel == 0.0;
        if level >= 2 && converging && (rel == 0.0 || rel * rel < rel_tol * 1e-4 || rel < rel_tol) {
            let est = if rel == 0.0 { 0.0 } else { (rel * rel).max(rel_tol * 1e-6) };
            return Ok(QuadResult { value, error_estimate: est });
        }
    }
    let _ = prev_rel;
    Err(Error::Accuracy(format!("double-exponential rule stalled at relative change {last_rel:.2e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::Precision;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let p = Precision::new(40).unwrap();
        let rule = gauss_legendre(10, p.bits());
        let mut s = Float::new(p.bits());
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let x2 = Float::with_val(p.bits(), x.square_ref());
            let x18 = x2.clone().pow_ref_u(9);
            s += Float::with_val(p.bits(), x18 * w);
        }
        // ∫ x^18 = 2/19
        let want = Float::with_val(p.bits(), 2) / 19u32;
        assert!(Float::with_val(p.bits(), s - want).abs() < 1e-45);
    }

    trait PowU {
        fn pow_ref_u(self, k: u32) -> Float;
    }
    impl PowU for Float {
        fn pow_ref_u(self, k: u32) -> Float {
            use rug::ops::Pow;
            self.pow(k)
        }
    }

    #[test]
    fn half_line_gamma_integral() {
        let p = Precision::new(40).unwrap();
        let a = Float::new(p.bits());
        // ∫_0^∞ t^{-2/3} e^{-t} dt = Γ(1/3)
        let e = Float::with_val(p.bits(), -2) / 3u32;
        let r = de_integrate(DeKind::HalfLine, &a, None, 1e-40, |x, _, _| {
            use rug::ops::Pow;
            let v = Float::with_val(x.prec(), x.pow(&e)) * Float::with_val(x.prec(), (-x.clone()).exp_ref());
            Ok(Complex::with_val(x.prec(), (v, 0)))
        })
        .unwrap();
        let g = crate::arith::gamma_real(&(Float::with_val(p.bits(), 1) / 3u32)).unwrap();
        let d = Float::with_val(p.bits(), r.value.real() - &g).abs();
        assert!(d < 1e-38, "{d}");
    }

    #[test]
    fn finite_rule_with_endpoint_singularity() {
        let p = Precision::new(40).unwrap();
        let a = Float::new(p.bits());
        let b = Float::with_val(p.bits(), 1);
        // ∫_0^1 ln(x) dx = -1
        let r = de_integrate(DeKind::Finite, &a, Some(&b), 1e-40, |_, da, _| {
            Ok(Complex::with_val(da.prec(), (da.clone().ln(), 0)))
        })
        .unwrap();
        let d = Float::with_val(p.bits(), r.value.real() + 1u32).abs();
        assert!(d < 1e-38, "{d}");
    }
}
