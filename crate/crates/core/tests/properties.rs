//! Property checks of the numerical building blocks and of the problem,
//! coefficient, hyperterminant, geometry and bounds layers.

use hyperasym::arith::{abs, arg, expi, gamma, phased_pow, PhasedComplex, Precision};
use hyperasym::bounds::remainder_bound;
use hyperasym::coeffs::perron_coefficients;
use hyperasym::engine::{hyper_expand, ExpandOptions};
use hyperasym::geometry::{reference_t, trace_path, TraceOptions};
use hyperasym::hyperterm::{choose_gammas, Column, HyperterminantArgs};
use hyperasym::problem::{builtin, degenerate_3_5, pearcey_cusp, stokes_successor, ProblemSpec};
use hyperasym::quad::{de_integrate, DeKind};
use hyperasym::series::{ps_mul, ps_pow, Exponent, TruncatedSeries};
use hyperasym::specfun::{gauss_2f1, gegenbauer, kummer_u, HypergeoParams};
use proptest::prelude::*;
use rug::{Complex, Float};

fn prec() -> Precision {
    Precision::new(30).unwrap()
}

fn rel(a: &Complex, b: &Complex) -> f64 {
    let d = abs(&Complex::with_val(a.prec().0, a - b)).to_f64();
    d / abs(b).to_f64().max(1e-300)
}

fn cx(p: &Precision, re: f64, im: f64) -> Complex {
    p.complex(re, im)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    #[test]
    fn gamma_reflection(x in -5.0f64..5.0, y in 0.1f64..5.0, flip in any::<bool>()) {
        let p = prec();
        let z = cx(&p, x, if flip { -y } else { y });
        let one_minus = Complex::with_val(p.bits(), 1 - &z);
        let pz = Complex::with_val(p.bits(), &z * p.pi());
        let lhs = gamma(&z).unwrap() * gamma(&one_minus).unwrap() * pz.sin() / p.pi();
        prop_assert!(rel(&lhs, &cx(&p, 1.0, 0.0)) < 1e-28);
    }

    #[test]
    fn gamma_recurrence(x in -6.0f64..6.0, y in 0.05f64..6.0) {
        let p = prec();
        let z = cx(&p, x, y);
        let next = gamma(&Complex::with_val(p.bits(), &z + 1u32)).unwrap();
        let want = gamma(&z).unwrap() * &z;
        prop_assert!(rel(&next, &want) < 1e-28);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 40, ..ProptestConfig::default() })]

    #[test]
    fn phased_root_then_power_round_trips(m in 0.01f64..100.0, ph in -20.0f64..20.0, omega in 1u32..7) {
        let p = prec();
        let z = PhasedComplex::new(p.float(m), p.float(ph));
        let inv = Float::with_val(p.bits(), 1) / omega;
        let back = phased_pow(&phased_pow(&z, &inv).unwrap(), &p.float(omega as f64)).unwrap();
        let dm = Float::with_val(p.bits(), &back.modulus - &z.modulus).to_f64().abs() / m;
        let dp = Float::with_val(p.bits(), &back.phase - &z.phase).to_f64().abs();
        prop_assert!(dm < 1e-35);
        prop_assert!(dp <= ph.abs() * 2f64.powi(-(p.bits() as i32) + 4));
    }

    #[test]
    fn doubling_precision_changes_little(x in 0.2f64..6.0, y in -4.0f64..4.0) {
        let p = prec();
        let hi = Precision::new(60).unwrap();
        let a = gamma(&cx(&p, x, y)).unwrap();
        let b = gamma(&cx(&hi, x, y)).unwrap();
        prop_assert!(rel(&a, &b) < 1e-28);
    }

    #[test]
    fn gegenbauer_generating_function(pw in 0.1f64..3.0, wr in -2.0f64..2.0, wi in -2.0f64..2.0) {
        let p = prec();
        let b = p.bits();
        let w = cx(&p, wr, wi);
        let order = 21;
        // (1 − 2wx + x²)^{−p} as a truncated series
        let mut h = vec![Complex::new(b); order];
        h[0] = cx(&p, 1.0, 0.0);
        h[1] = Complex::with_val(b, &w * -2i32);
        h[2] = cx(&p, 1.0, 0.0);
        let s = ps_pow(&TruncatedSeries::new(h), &Exponent::Real(p.float(-pw))).unwrap();
        let pc = cx(&p, pw, 0.0);
        for r in 0..order {
            let c = gegenbauer(r, &pc, &w);
            let scale = abs(&c).to_f64().max(1.0);
            let d = abs(&Complex::with_val(b, &c - s.coeff(r))).to_f64();
            prop_assert!(d / scale < 1e-26, "r = {r}");
        }
    }

    #[test]
    fn gauss_contiguous_relation(a in -2.5f64..2.5, bb in -2.5f64..2.5, c in 1.6f64..4.0, r in 0.05f64..0.9, th in -3.1f64..3.1) {
        // c(c−1)(z−1)F(c−1) + c[c−1−(2c−a−b−1)z]F(c) + (c−a)(c−b)zF(c+1) = 0
        let p = prec();
        let bits = p.bits();
        let (af, bf, cf) = (p.float(a), p.float(bb), p.float(c));
        let z = Complex::with_val(bits, expi(&p.float(th)) * r);
        let f = |cc: Float| {
            let params = HypergeoParams { a: cx(&p, a, 0.0), b: cx(&p, bb, 0.0), c: Complex::with_val(bits, (cc, 0)), z: z.clone() };
            gauss_2f1(&params).unwrap()
        };
        let cm1 = Float::with_val(bits, &cf - 1u32);
        let t1 = Complex::with_val(bits, &z - 1u32) * Float::with_val(bits, &cf * &cm1) * f(cm1.clone());
        let slope = Float::with_val(bits, &cf * 2u32) - &af - &bf - 1u32;
        let t2 = (Complex::with_val(bits, &z * -slope) + &cm1) * &cf * f(cf.clone());
        let t3 = Complex::with_val(bits, &z * Float::with_val(bits, &cf - &af)) * Float::with_val(bits, &cf - &bf)
            * f(Float::with_val(bits, &cf + 1u32));
        let size = [&t1, &t2, &t3].iter().map(|t| abs(t).to_f64()).fold(0.0, f64::max);
        let res = abs(&(t1.clone() + &t2 + &t3)).to_f64();
        prop_assert!(res <= 1e-26 * size, "{res:e} vs {size:e}");
    }

}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn kummer_ode_residual(a in 0.2f64..3.0, bb in -2.0f64..2.0, x in 0.5f64..6.0, y in -1.0f64..1.0) {
        // z U'' + (b − z) U' − a U = 0; derivatives by the trapezoidal rule
        // on a circle of radius |z|/2, which converges like 2^{−nodes}
        let p = prec();
        let bits = p.bits();
        let (ac, bc) = (cx(&p, a, 0.0), cx(&p, bb, 0.0));
        let z = cx(&p, x, y);
        let rho = abs(&z) / 2u32;
        let nodes = 96u32;
        let mut d = [Complex::new(bits), Complex::new(bits), Complex::new(bits)];
        for j in 0..nodes {
            let w = expi(&(p.pi() * (2 * j) / nodes));
            let zj = Complex::with_val(bits, &w * &rho) + &z;
            let u = kummer_u(&ac, &bc, &PhasedComplex::from_complex(&zj)).unwrap();
            let mut wk = Complex::with_val(bits, (1, 0));
            for dk in d.iter_mut() {
                *dk += Complex::with_val(bits, &u / &wk);
                wk *= &w;
            }
        }
        let u0 = Complex::with_val(bits, &d[0] / nodes);
        let d1 = Complex::with_val(bits, &d[1] / nodes) / &rho;
        let d2 = Complex::with_val(bits, &d[2] / nodes) * 2u32 / Float::with_val(bits, rho.square_ref());
        let terms = [
            Complex::with_val(bits, &z * &d2),
            Complex::with_val(bits, &bc - &z) * &d1,
            Complex::with_val(bits, &u0 * -a),
        ];
        let size = terms.iter().map(|t| abs(t).to_f64()).fold(0.0, f64::max);
        let res = abs(&(terms[0].clone() + &terms[1] + &terms[2])).to_f64();
        prop_assert!(res <= 1e-24 * size, "{res:e} vs {size:e}");
    }
}

fn unit_series(p: &Precision, c: &[(f64, f64)]) -> TruncatedSeries {
    let mut v = vec![cx(p, 1.0, 0.0)];
    v.extend(c.iter().map(|&(r, i)| cx(p, r, i)));
    TruncatedSeries::new(v)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 20, ..ProptestConfig::default() })]

    #[test]
    fn series_powers_add(c in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 11),
                         a in (-7i64..7, 1i64..6), b in (-7i64..7, 1i64..6)) {
        let p = prec();
        let h = unit_series(&p, &c);
        let ea = Exponent::ratio(a.0, a.1);
        let eb = Exponent::ratio(b.0, b.1);
        let sum = Exponent::ratio(a.0 * b.1 + b.0 * a.1, a.1 * b.1);
        let lhs = ps_pow(&h, &sum).unwrap();
        let rhs = ps_mul(&ps_pow(&h, &ea).unwrap(), &ps_pow(&h, &eb).unwrap());
        for k in 0..lhs.order() {
            let s = abs(lhs.coeff(k)).to_f64().max(1.0);
            prop_assert!(abs(&Complex::with_val(p.bits(), lhs.coeff(k) - rhs.coeff(k))).to_f64() / s < 1e-30);
        }
    }

    #[test]
    fn series_power_derivative(c in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 11), e in -3.0f64..3.0) {
        let p = prec();
        let h = unit_series(&p, &c);
        let pe = ps_pow(&h, &Exponent::Real(p.float(e))).unwrap();
        let pe1 = ps_pow(&h, &Exponent::Real(p.float(e) - 1u32)).unwrap();
        let lhs = pe.derivative();
        let rhs = ps_mul(&pe1.truncate(lhs.order()), &h.derivative());
        for k in 0..lhs.order() {
            let want = Complex::with_val(p.bits(), rhs.coeff(k) * e);
            let s = abs(&want).to_f64().max(1.0);
            prop_assert!(abs(&Complex::with_val(p.bits(), lhs.coeff(k) - &want)).to_f64() / s < 1e-30);
        }
    }

    #[test]
    fn stokes_successor_lies_within_one_period(theta in -30.0f64..30.0, alpha in -3i64..4) {
        let p = prec();
        for name in ["pearcey_cusp", "degenerate_3_5", "swallowtail"] {
            let spec = builtin(name, p).unwrap();
            for rec in &spec.adjacency {
                let omega = spec.saddle(rec.from_id).unwrap().order_omega;
                let th = p.float(theta);
                if let Ok((tp, _)) = stokes_successor(rec, omega, &th, alpha) {
                    let period = Float::with_val(p.bits(), p.pi() * (2 * omega));
                    prop_assert!(tp > th);
                    prop_assert!(Float::with_val(p.bits(), &tp - &th) <= period);
                }
            }
        }
    }

    #[test]
    fn gamma_windows_hold(zph in -6.0f64..6.0, phases in prop::collection::vec(-12.0f64..12.0, 1..4)) {
        let p = prec();
        let pi = std::f64::consts::PI;
        let z = PhasedComplex::new(p.float(1.0), p.float(zph));
        let cols: Vec<Column> = phases
            .iter()
            .map(|&ph| Column { m: p.float(3.0), omega: 1, sigma: PhasedComplex::new(p.float(1.0), p.float(ph)) })
            .collect();
        let args = HyperterminantArgs::new(cols).unwrap();
        if let Ok(sel) = choose_gammas(&z, &args) {
            let g = &sel.gammas;
            prop_assert!((zph + phases[0] + 2.0 * pi * g[0] as f64).abs() < pi);
            for j in 1..phases.len() {
                let d = phases[j] - phases[j - 1] + 2.0 * pi * g[j] as f64;
                prop_assert!(d > 0.0 && d < 2.0 * pi, "column {j}: {d}");
            }
        }
    }

    #[test]
    fn traced_paths_descend(theta in -0.45f64..0.45, v_max in 1.0f64..30.0) {
        // pearcey saddle 1 is off every Stokes line for θ ∈ (−π/2, π/2)
        let p = prec();
        let spec = pearcey_cusp(p).unwrap();
        let th = p.float(theta * std::f64::consts::PI);
        let path = trace_path(&spec, 1, &th, 0, &p.float(v_max), &TraceOptions::default()).unwrap();
        let f1 = &spec.saddle(1).unwrap().critical_value;
        let rot = expi(&th);
        let mut last = Float::with_val(p.bits(), -1);
        for (_, t) in &path.points {
            let h = Complex::with_val(p.bits(), spec.f.eval(t) - f1) * &rot;
            let re = Float::with_val(p.bits(), h.real());
            prop_assert!(re > last);
            last = re;
        }
    }
}

#[test]
fn singulants_are_antisymmetric() {
    let p = prec();
    for name in ["pearcey_cusp", "degenerate_3_5", "swallowtail"] {
        let spec = builtin(name, p).unwrap();
        for a in &spec.saddles {
            for b in &spec.saddles {
                let ab = spec.singulant_value(a.id, b.id).unwrap();
                let ba = spec.singulant_value(b.id, a.id).unwrap();
                assert!(abs(&Complex::with_val(p.bits(), &ab + &ba)).to_f64() < 1e-35);
            }
        }
        for rec in &spec.adjacency {
            let v = spec.singulant_value(rec.from_id, rec.to_id).unwrap();
            assert!(Float::with_val(p.bits(), abs(&v) - &rec.singulant.modulus).to_f64().abs() < 1e-35);
        }
    }
}

#[test]
fn coefficients_grow_like_the_late_term_law() {
    // |T_{N+ω}|/|T_N| · |F| / ((N+1)/ω) stays bounded
    let p = prec();
    for (spec, fmod) in [(pearcey_cusp(p).unwrap(), 27.0 / 4.0), (degenerate_3_5(p).unwrap(), 32.0 / 7.0)] {
        let omega = spec.saddle(1).unwrap().order_omega as usize;
        let t = perron_coefficients(&spec, 1, 0, 55 + omega).unwrap();
        for n in 10..=54 {
            let (a, b) = (abs(&t.values[n]).to_f64(), abs(&t.values[n + omega]).to_f64());
            if a == 0.0 || b == 0.0 {
                continue;
            }
            let x = b / a * fmod / ((n + 1) as f64 / omega as f64);
            assert!(x > 0.2 && x < 5.0, "{} N = {n}: {x}", spec.name);
        }
    }
}

fn valley_ray_integral(spec: &ProblemSpec, n: usize, z: &PhasedComplex, psi: &Float) -> Complex {
    // ∫_0^∞ e^{−z(f(t)−f_n)} g(t) e^{iψ} dr along t = t_n + r e^{iψ}
    let p = spec.precision;
    let bits = p.bits();
    let sd = spec.saddle(n).unwrap();
    let dir = expi(psi);
    let zc = z.to_complex();
    de_integrate(DeKind::HalfLine, &p.float(0.0), None, 1e-25, |r, _, _| {
        let t = Complex::with_val(bits, &dir * r) + &sd.location;
        let e = Complex::with_val(bits, spec.f.eval(&t) - &sd.critical_value) * &zc;
        Ok(Complex::with_val(bits, (-e).exp()) * spec.g.eval(&t) * &dir)
    })
    .unwrap()
    .value
}

/// Direction of the valley that the traced path `𝒫(θ; α)` ends in.
fn valley_direction(spec: &ProblemSpec, n: usize, z: &PhasedComplex, alpha: i64) -> Float {
    let p = spec.precision;
    let bits = p.bits();
    let d = spec.f.degree() as i64;
    let lead = spec.f.coefficients.last().unwrap();
    let path = trace_path(spec, n, &Float::with_val(bits, &z.phase), alpha, &p.float(400.0), &TraceOptions::default()).unwrap();
    let end = &path.points.last().unwrap().1;
    let end_arg = arg(&Complex::with_val(bits, end - &spec.saddle(n).unwrap().location)).to_f64();
    let base = -(z.phase.to_f64() + arg(lead).to_f64()) / d as f64;
    let step = 2.0 * std::f64::consts::PI / d as f64;
    let k = ((end_arg - base) / step).round();
    p.float(base + k * step)
}

#[test]
fn steepest_path_and_valley_ray_agree() {
    let p = prec();
    let spec = pearcey_cusp(p).unwrap();
    for (n, theta) in [(1usize, -0.25), (1, 0.3), (2, -0.2)] {
        let z = PhasedComplex::from_phase_over_pi(p.float(1.2), &p.float(theta));
        let omega = spec.saddle(n).unwrap().order_omega;
        let psi = valley_direction(&spec, n, &z, 0);
        let ray = valley_ray_integral(&spec, n, &z, &psi);
        let pre = z.pow(&(Float::with_val(p.bits(), 1) / omega)).unwrap().to_complex() * omega;
        let want = Complex::with_val(p.bits(), &ray * &pre);
        let r = reference_t(&spec, n, 0, &z, 1e-24, None).unwrap().value;
        assert!(rel(&r, &want) < 1e-20, "saddle {n} θ = {theta}π: {:e}", rel(&r, &want));
    }
}

#[test]
fn simple_saddle_difference_is_the_through_integral() {
    // T(α = 0) − T(α = 1) at a simple saddle integrates valley to valley
    let p = prec();
    let spec = pearcey_cusp(p).unwrap();
    let z = PhasedComplex::from_phase_over_pi(p.float(1.0), &p.float(-0.25));
    let bits = p.bits();
    let t0 = reference_t(&spec, 1, 0, &z, 1e-24, None).unwrap().value;
    let t1 = reference_t(&spec, 1, 1, &z, 1e-24, None).unwrap().value;
    let out = valley_ray_integral(&spec, 1, &z, &valley_direction(&spec, 1, &z, 0));
    let inn = valley_ray_integral(&spec, 1, &z, &valley_direction(&spec, 1, &z, 1));
    let pre = z.pow(&p.float(0.5)).unwrap().to_complex() * 2u32;
    let through = Complex::with_val(bits, &out - &inn) * pre;
    let diff = Complex::with_val(bits, &t0 - &t1);
    assert!(rel(&diff, &through) < 1e-20, "{:e}", rel(&diff, &through));
}

#[test]
fn superasymptotic_error_decays_at_the_singulant_rate() {
    // log|error| ≈ −r₀|z| + (1/ω_n − 1/ω̃) log|z| + O(1)
    let p = prec();
    for (spec, r0, omega_n, omega_m) in
        [(pearcey_cusp(p).unwrap(), 27.0 / 4.0, 2.0, 3.0), (degenerate_3_5(p).unwrap(), 32.0 / 7.0, 3.0, 5.0)]
    {
        let mods = [1.0, 1.5, 2.0];
        let mut logs = Vec::new();
        for m in mods {
            let z = PhasedComplex::from_phase_over_pi(p.float(m), &p.float(-0.25));
            let led = hyper_expand(&spec, 1, 0, &z, 0, &ExpandOptions::default()).unwrap();
            let r = reference_t(&spec, 1, 0, &z, 1e-25, None).unwrap().value;
            let e = abs(&Complex::with_val(p.bits(), &led.partial_sum - &r)).to_f64();
            logs.push(e.ln() - (1.0 / omega_n - 1.0 / omega_m) * m.ln());
        }
        let slope = (logs[2] - logs[0]) / (mods[2] - mods[0]);
        assert!((slope + r0).abs() < 0.15 * r0, "{}: slope {slope} vs {}", spec.name, -r0);
    }
}

#[test]
fn bound_is_sharp_near_the_optimal_count() {
    let p = prec();
    let spec = pearcey_cusp(p).unwrap();
    let z = PhasedComplex::from_phase_over_pi(p.float(1.0), &p.float(-0.25));
    let r = reference_t(&spec, 1, 0, &z, 1e-25, None).unwrap().value;
    let t = perron_coefficients(&spec, 1, 0, 14).unwrap();
    let mut sum = Complex::new(p.bits());
    for (k, tk) in t.values.iter().enumerate() {
        if k >= 11 {
            let b = remainder_bound(&spec, 1, 0, &z, k, None).unwrap().total;
            let rem = abs(&Complex::with_val(p.bits(), &r - &sum)).to_f64();
            assert!(b >= rem && b / rem < 10.0, "N = {k}: {b:e} vs {rem:e}");
        }
        sum += Complex::with_val(p.bits(), tk / z.pow(&(Float::with_val(p.bits(), k as u32) / 2u32)).unwrap().to_complex());
    }
}
