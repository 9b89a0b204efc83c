//! Truncated power series with complex coefficients.

use rug::{Complex, Float};

use crate::error::{Error, Result};

/// `Σ_{k<len} c_k x^k`, exact through `x^{len-1}`.
#[derive(Clone, Debug)]
pub struct TruncatedSeries {
    pub coefficients: Vec<Complex>,
}

/// Exponent of a fractional power: kept exact when rational.
#[derive(Clone, Debug)]
pub enum Exponent {
    Rational { num: i64, den: i64 },
    Real(Float),
}

impl Exponent {
    pub fn ratio(num: i64, den: i64) -> Self {
        assert!(den != 0);
        Exponent::Rational { num, den }
    }

    pub fn to_float(&self, bits: u32) -> Float {
        match self {
            Exponent::Rational { num, den } => Float::with_val(bits, *num) / *den,
            Exponent::Real(x) => Float::with_val(bits, x),
        }
    }
}

impl TruncatedSeries {
    pub fn new(coefficients: Vec<Complex>) -> Self {
        assert!(!coefficients.is_empty(), "a series needs at least one coefficient");
        Self { coefficients }
    }

    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    pub fn prec(&self) -> u32 {
        self.coefficients[0].prec().0
    }

    /// Constant series `1 + O(x^order)`.
    pub fn one(bits: u32, order: usize) -> Self {
        let mut c = vec![Complex::new(bits); order];
        c[0] = Complex::with_val(bits, (1, 0));
        Self::new(c)
    }

    pub fn truncate(&self, order: usize) -> Self {
        let bits = self.prec();
        let mut c: Vec<Complex> = self.coefficients.iter().take(order).cloned().collect();
        c.resize(order, Complex::new(bits));
        Self::new(c)
    }

    pub fn coeff(&self, k: usize) -> &Complex {
        &self.coefficients[k]
    }

    pub fn derivative(&self) -> Self {
        let bits = self.prec();
        let n = self.order();
        if n == 1 {
            return Self::new(vec![Complex::new(bits)]);
        }
        Self::new((1..n).map(|k| Complex::with_val(bits, &self.coefficients[k] * k as u32)).collect())
    }
}

/// Cauchy product truncated to the shorter order.
pub fn ps_mul(a: &TruncatedSeries, b: &TruncatedSeries) -> TruncatedSeries {
    let n = a.order().min(b.order());
    let bits = a.prec().max(b.prec());
    let mut out = vec![Complex::new(bits); n];
    for (i, ai) in a.coefficients.iter().take(n).enumerate() {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.coefficients.iter().take(n - i).enumerate() {
            out[i + j] += Complex::with_val(bits, ai * bj);
        }
    }
    TruncatedSeries::new(out)
}

/// `h^e` for a unit series (`h_0 = 1`) by J.C.P. Miller's recurrence
/// `p_k = (1/k) Σ_{j=1}^{k} ((e+1)j − k) h_j p_{k−j}`.
pub fn ps_pow(h: &TruncatedSeries, e: &Exponent) -> Result<TruncatedSeries> {
    ps_pow_to(h, e, h.order())
}

/// As [`ps_pow`] but producing `order` coefficients; `h` is treated as a
/// polynomial beyond its stored length.
pub fn ps_pow_to(h: &TruncatedSeries, e: &Exponent, order: usize) -> Result<TruncatedSeries> {
    let bits = h.prec();
    let h0 = &h.coefficients[0];
    let unit = Complex::with_val(bits, h0 - 1u32);
    if crate::arith::abs(&unit) > Float::with_val(bits, Float::i_exp(1, -(bits as i32) + 8)) {
        return Err(Error::Validation("ps_pow needs a unit leading coefficient".into()));
    }
    let e = e.to_float(bits);
    let e1 = Float::with_val(bits, &e + 1u32);
    let mut p = Vec::with_capacity(order);
    p.push(Complex::with_val(bits, (1, 0)));
    for k in 1..order {
        let mut acc = Complex::new(bits);
        for j in 1..=k.min(h.order() - 1) {
            let hj = &h.coefficients[j];
            if hj.is_zero() {
                continue;
            }
            let w = Float::with_val(bits, &e1 * j as u32) - k as u32;
            acc += Complex::with_val(bits, hj * &p[k - j]) * w;
        }
        p.push(acc / k as u32);
    }
    Ok(TruncatedSeries::new(p))
}
