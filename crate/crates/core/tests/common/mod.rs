//! Closed-form coefficient fixtures shared by the integration tests.
#![allow(dead_code)]

use hyperasym::arith::{abs, expi, gamma_real};
use hyperasym::coeffs::{CoefficientRoute, CoefficientTable};
use hyperasym::specfun::{binomial_general, gegenbauer};
use hyperasym::Precision;
use rug::ops::Pow;
use rug::{Complex, Float};

fn table(id: usize, omega: u32, values: Vec<Complex>) -> CoefficientTable {
    CoefficientTable { saddle_id: id, alpha: 0, omega, values, route: CoefficientRoute::ClosedForm }
}

/// `e^{iπ(r+1)/4} Γ((r+1)/2) C_r^{((r+1)/2)}(2√2/3) / 3^{2r+1}`.
pub fn pearcey_simple(p: &Precision, count: usize) -> CoefficientTable {
    let b = p.bits();
    let pi = p.pi();
    let w = Complex::with_val(b, (Float::with_val(b, 8).sqrt() / 3u32, 0));
    let values = (0..count)
        .map(|r| {
            let half = Float::with_val(b, r + 1) / 2u32;
            let c = gegenbauer(r, &Complex::with_val(b, (&half, 0)), &w);
            let scale = gamma_real(&half).unwrap() / Float::with_val(b, 3).pow(2 * r as u32 + 1);
            expi(&(Float::with_val(b, &pi * (r + 1) as u32) / 4u32)) * c * scale
        })
        .collect();
    table(1, 2, values)
}

/// `e^{iπ(r+1)/6} Γ((r+1)/3) binom(−(r+1)/3, r) / 2^{2r+1/2}`.
pub fn pearcey_double(p: &Precision, count: usize) -> CoefficientTable {
    let b = p.bits();
    let pi = p.pi();
    let values = (0..count)
        .map(|r| {
            let third = Float::with_val(b, r + 1) / 3u32;
            let bin = binomial_general(&Complex::with_val(b, (-third.clone(), 0)), r);
            let two = Float::with_val(b, 2).pow(Float::with_val(b, 2 * r as u32) + 0.5f64);
            let scale = gamma_real(&third).unwrap() / two;
            expi(&(Float::with_val(b, &pi * (r + 1) as u32) / 6u32)) * bin * scale
        })
        .collect();
    table(2, 3, values)
}

/// `(5/28)^{r/2} Γ((r+1)/5) C_r^{((r+1)/5)}(−√(35/36)) / 3^{(r+1)/5}`.
pub fn degenerate_quintic(p: &Precision, count: usize) -> CoefficientTable {
    let b = p.bits();
    let w = Complex::with_val(b, (-(Float::with_val(b, 35) / 36u32).sqrt(), 0));
    let values = (0..count)
        .map(|r| {
            let fifth = Float::with_val(b, r + 1) / 5u32;
            let c = gegenbauer(r, &Complex::with_val(b, (&fifth, 0)), &w);
            let a = Float::with_val(b, 5) / 28u32;
            let scale = a.pow(Float::with_val(b, r) / 2u32) * gamma_real(&fifth).unwrap()
                / Float::with_val(b, 3).pow(&fifth);
            c * scale
        })
        .collect();
    table(2, 5, values)
}

/// `Γ((r+1)/3) [t^r] (20 + u(t))^{−(r+1)/3}` by the binomial expansion in
/// `u = −30t + 18t² − 5t³ + (15/28)t⁴`.
pub fn degenerate_cubic(p: &Precision, count: usize) -> CoefficientTable {
    let b = p.bits();
    let twenty = Float::with_val(b, 20);
    let u: Vec<Float> = vec![
        Float::new(b),
        Float::with_val(b, -30) / 20u32,
        Float::with_val(b, 18) / 20u32,
        Float::with_val(b, -5) / 20u32,
        Float::with_val(b, 15) / 560u32,
    ];
    // powers of u truncated at degree count
    let mut powers: Vec<Vec<Float>> = vec![{
        let mut one = vec![Float::new(b); count];
        one[0] = Float::with_val(b, 1);
        one
    }];
    for k in 1..count {
        let prev = &powers[k - 1];
        let mut next = vec![Float::new(b); count];
        for (i, pi) in prev.iter().enumerate() {
            for (j, uj) in u.iter().enumerate() {
                if i + j < count {
                    next[i + j] += Float::with_val(b, pi * uj);
                }
            }
        }
        powers.push(next);
    }
    let values = (0..count)
        .map(|r| {
            let e = Float::with_val(b, r + 1) / 3u32;
            let mut acc = Complex::new(b);
            for (k, pk) in powers.iter().enumerate().take(r + 1) {
                let bin = binomial_general(&Complex::with_val(b, (-e.clone(), 0)), k);
                acc += bin * &pk[r];
            }
            acc * gamma_real(&e).unwrap() / Float::with_val(b, twenty.clone().pow(&e))
        })
        .collect();
    table(1, 3, values)
}

/// Largest relative difference between two tables.
pub fn max_relative_difference(a: &CoefficientTable, b: &CoefficientTable) -> f64 {
    a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (abs(&Complex::with_val(x.prec().0, x - y)) / abs(y)).to_f64())
        .fold(0.0, f64::max)
}
