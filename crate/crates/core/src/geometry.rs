//! Steepest-descent paths, the quadrature reference for `T^{(n)}(z; α)`, and
//! the absolute contour integrals used by the remainder bounds.
//!
//! Paths are parametrized by `s` with `f(t) − f_origin = s^ω e^{−iθ}`, so the
//! descent variable is `v = s^ω` and `t(s)` is analytic at the saddle. The
//! local offset `u = t − t_origin` is found by Newton's method on the Taylor
//! polynomial of `f` about the saddle, which keeps `f − f_origin` free of
//! cancellation near the start of the path.

use std::cell::RefCell;
use std::f64::consts::LN_10;
use std::io::Write;

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Complex, Float};

use crate::arith::{abs, arg, expi, PhasedComplex};
use crate::error::{Error, Result};
use crate::problem::{stokes_successor, ProblemSpec};
use crate::quad::{de_integrate, gauss_legendre, DeKind};

/// Points of a traced path, `v` strictly increasing.
#[derive(Clone, Debug)]
pub struct PathSample {
    pub points: Vec<(Float, Complex)>,
    pub saddle_id: usize,
    pub theta: Float,
    pub alpha: i64,
    pub direction_phi: Float,
}

impl PathSample {
    /// CSV with columns `v,re_t,im_t`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "v,re_t,im_t")?;
        for (v, t) in &self.points {
            writeln!(w, "{:.17e},{:.17e},{:.17e}", v.to_f64(), t.real().to_f64(), t.imag().to_f64())?;
        }
        Ok(())
    }
}

/// Step control for [`trace_path`].
#[derive(Clone, Debug)]
pub struct TraceOptions {
    /// Largest accepted move in `t` relative to the distance to the nearest
    /// feature (the origin saddle or any other saddle).
    pub max_relative_step: f64,
    /// Upper limit on accepted steps.
    pub max_steps: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self { max_relative_step: 0.2, max_steps: 100_000 }
    }
}

#[derive(Clone)]
struct Anchor {
    s: Float,
    u: Complex,
    du: Complex,
}

/// Continuation of `u(s)` solving `P(u) = s^ω e^{−iθ}` with
/// `P(u) = f(t_0 + u) − f(t_0)`.
pub(crate) struct Tracer {
    bits: u32,
    origin_id: usize,
    origin: Complex,
    omega: u32,
    /// Taylor coefficients of `f` about the origin, entries below `ω` zeroed.
    taylor: Vec<Complex>,
    rotation: Complex,
    seed: Complex,
    others: Vec<(usize, Complex)>,
    collision_radius: Float,
    max_rel: f64,
    anchors: Vec<Anchor>,
    steps: usize,
    max_steps: usize,
}

impl Tracer {
    pub(crate) fn new(spec: &ProblemSpec, id: usize, theta: &Float, alpha: i64, opts: &TraceOptions) -> Result<Self> {
        let bits = spec.bits();
        let sd = spec.saddle(id)?;
        let omega = sd.order_omega;
        let pi = Float::with_val(bits, Constant::Pi);
        let phi = (Float::with_val(bits, &pi * (2 * alpha)) - theta - arg(&sd.leading_derivative)) / omega;
        Self::with_direction(spec, id, theta, &phi, opts)
    }

    pub(crate) fn with_direction(
        spec: &ProblemSpec,
        id: usize,
        theta: &Float,
        phi: &Float,
        opts: &TraceOptions,
    ) -> Result<Self> {
        let bits = spec.bits();
        let sd = spec.saddle(id)?;
        let omega = sd.order_omega;
        let mut taylor = spec.f.taylor_at(&sd.location);
        for c in taylor.iter_mut().take(omega as usize) {
            *c = Complex::new(bits);
        }
        let mut fact = Float::with_val(bits, 1);
        for k in 2..=omega {
            fact *= k;
        }
        let scale = Float::with_val(bits, fact / abs(&sd.leading_derivative)).pow(Float::with_val(bits, 1) / omega);
        let seed = expi(phi) * scale;
        let others: Vec<(usize, Complex)> =
            spec.saddles.iter().filter(|s| s.id != id).map(|s| (s.id, s.location.clone())).collect();
        let mut spacing = Float::with_val(bits, f64::INFINITY);
        for (i, a) in spec.saddles.iter().enumerate() {
            for b in &spec.saddles[i + 1..] {
                spacing = spacing.min(&abs(&Complex::with_val(bits, &a.location - &b.location)));
            }
        }
        if !spacing.is_finite() {
            spacing = Float::with_val(bits, 1);
        }
        Ok(Self {
            bits,
            origin_id: id,
            origin: sd.location.clone(),
            omega,
            taylor,
            rotation: expi(&Float::with_val(bits, -theta)),
            seed: seed.clone(),
            others,
            collision_radius: spacing * 1e-3,
            max_rel: opts.max_relative_step,
            anchors: vec![Anchor { s: Float::new(bits), u: Complex::new(bits), du: seed }],
            steps: 0,
            max_steps: opts.max_steps,
        })
    }

    fn p_and_dp(&self, u: &Complex) -> (Complex, Complex) {
        let bits = self.bits;
        let mut p = Complex::new(bits);
        let mut dp = Complex::new(bits);
        for c in self.taylor.iter().rev() {
            dp = Complex::with_val(bits, &dp * u) + &p;
            p = Complex::with_val(bits, &p * u) + c;
        }
        (p, dp)
    }

    fn target(&self, s: &Float) -> Complex {
        Complex::with_val(self.bits, &self.rotation * Float::with_val(self.bits, Pow::pow(s.clone(), self.omega)))
    }

    /// `du/ds = ω s^{ω−1} e^{−iθ} / P′(u)`.
    fn slope(&self, s: &Float, u: &Complex) -> Complex {
        if s.is_zero() {
            return self.seed.clone();
        }
        let (_, dp) = self.p_and_dp(u);
        let num = Float::with_val(self.bits, Pow::pow(s.clone(), self.omega - 1)) * self.omega;
        Complex::with_val(self.bits, &self.rotation * num) / dp
    }

    fn nearest_other(&self, t: &Complex) -> Option<(usize, Float)> {
        self.others
            .iter()
            .map(|(id, loc)| (*id, abs(&Complex::with_val(self.bits, t - loc))))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
    }

    fn newton(&self, s: &Float, guess: Complex) -> Option<Complex> {
        let bits = self.bits;
        let want = self.target(s);
        let tol = Float::with_val(bits, Float::i_exp(1, -(bits as i32) + 12));
        let mut u = guess;
        for _ in 0..30 {
            let (p, dp) = self.p_and_dp(&u);
            if dp.is_zero() {
                return None;
            }
            let du = Complex::with_val(bits, Complex::with_val(bits, &p - &want) / &dp);
            u -= &du;
            let mu = abs(&u);
            if abs(&du) <= Float::with_val(bits, &tol * &mu) || mu.is_zero() {
                return Some(u);
            }
        }
        None
    }

    fn collision_check(&self, u: &Complex) -> Result<()> {
        let t = Complex::with_val(self.bits, &self.origin + u);
        if let Some((id, d)) = self.nearest_other(&t) {
            if d < self.collision_radius {
                return Err(Error::PathCollision { from: self.origin_id, near: Some(id) });
            }
        }
        Ok(())
    }

    /// One continuation step from `a` towards `s_target`.
    fn step(&self, a: &Anchor, s_target: &Float) -> Result<Anchor> {
        let bits = self.bits;
        let t = Complex::with_val(bits, &self.origin + &a.u);
        let mut room = abs(&a.u);
        if let Some((_, d)) = self.nearest_other(&t) {
            room = room.min(&d);
        }
        let speed = abs(&a.du);
        let mut ds = Float::with_val(bits, s_target - &a.s);
        if a.s.is_zero() {
            // first step: the local model is the predictor
            ds = ds.min(&Float::with_val(bits, self.closest_other_distance() * 0.1 / speed.to_f64().max(1e-300)));
        } else if !speed.is_zero() {
            let cap = Float::with_val(bits, &room * self.max_rel) / &speed;
            ds = ds.min(&cap);
        }
        let floor = if a.s.is_zero() {
            Float::with_val(bits, s_target * 1e-40)
        } else {
            Float::with_val(bits, &a.s * 1e-30)
        };
        loop {
            if ds <= floor {
                let near = self.nearest_other(&t).filter(|(_, d)| *d < Float::with_val(bits, &self.collision_radius * 1e3)).map(|(id, _)| id);
                return Err(Error::PathCollision { from: self.origin_id, near });
            }
            let s = Float::with_val(bits, &a.s + &ds);
            let pred = Complex::with_val(bits, &a.u + Complex::with_val(bits, &a.du * &ds));
            if let Some(u) = self.newton(&s, pred.clone()) {
                let moved = abs(&Complex::with_val(bits, &u - &pred));
                let stride = Float::with_val(bits, &speed * &ds);
                if moved <= Float::with_val(bits, &stride * 0.3) {
                    let du = self.slope(&s, &u);
                    return Ok(Anchor { s, u, du });
                }
            }
            ds /= 2u32;
        }
    }

    fn closest_other_distance(&self) -> f64 {
        self.nearest_other(&self.origin).map(|(_, d)| d.to_f64()).unwrap_or(1.0)
    }

    /// `(u, du/ds)` at `s ≥ 0`, continuing from the nearest cached point below.
    pub(crate) fn at(&mut self, s: &Float) -> Result<(Complex, Complex)> {
        let idx = match self.anchors.binary_search_by(|a| a.s.partial_cmp(s).unwrap()) {
            Ok(i) => return Ok((self.anchors[i].u.clone(), self.anchors[i].du.clone())),
            Err(i) => i - 1,
        };
        let mut cur = self.anchors[idx].clone();
        let mut pos = idx;
        while cur.s < *s {
            let next = self.step(&cur, s)?;
            self.collision_check(&next.u)?;
            self.steps += 1;
            if self.steps > self.max_steps {
                return Err(Error::Accuracy(format!("path tracing exceeded {} steps", self.max_steps)));
            }
            pos += 1;
            self.anchors.insert(pos, next.clone());
            cur = next;
        }
        Ok((cur.u, cur.du))
    }

    pub(crate) fn origin(&self) -> &Complex {
        &self.origin
    }

    /// `f(t) − f_origin` at offset `u`, free of cancellation.
    pub(crate) fn offset_value(&self, u: &Complex) -> Complex {
        self.p_and_dp(u).0
    }

    fn accepted_path(&self, upto: &Float) -> Vec<(Float, Complex)> {
        self.anchors
            .iter()
            .filter(|a| a.s <= *upto)
            .map(|a| {
                (Float::with_val(self.bits, Pow::pow(a.s.clone(), self.omega)), Complex::with_val(self.bits, &self.origin + &a.u))
            })
            .collect()
    }
}

/// Traces `𝒫^{(id)}(θ; α)` out to descent value `v_max`.
///
/// The starting slope is `φ = (2πα − θ − arg f^{(ω)}(t_0))/ω`. Running into
/// another saddle (a Stokes line) yields [`Error::PathCollision`].
pub fn trace_path(
    spec: &ProblemSpec,
    id: usize,
    theta: &Float,
    alpha: i64,
    v_max: &Float,
    opts: &TraceOptions,
) -> Result<PathSample> {
    if *v_max < 0 {
        return Err(Error::Domain("v_max must be nonnegative".into()));
    }
    let bits = spec.bits();
    let mut tr = Tracer::new(spec, id, theta, alpha, opts)?;
    let sd = spec.saddle(id)?;
    let s_max = Float::with_val(bits, Pow::pow(v_max.clone(), Float::with_val(bits, 1) / sd.order_omega));
    if !s_max.is_zero() {
        tr.at(&s_max)?;
    }
    let pi = Float::with_val(bits, Constant::Pi);
    let phi = (Float::with_val(bits, &pi * (2 * alpha)) - theta - arg(&sd.leading_derivative)) / sd.order_omega;
    Ok(PathSample {
        points: tr.accepted_path(&s_max),
        saddle_id: id,
        theta: theta.clone(),
        alpha,
        direction_phi: phi,
    })
}

/// Stokes sector `(θ⁻, θ⁺)` of the path from `n` with `α`, taken around
/// `home`.
#[derive(Clone, Debug)]
pub struct Sector {
    pub lower: Float,
    pub upper: Float,
}

impl Sector {
    pub fn around(spec: &ProblemSpec, n: usize, alpha: i64, home: &Float) -> Result<Self> {
        let bits = spec.bits();
        let omega = spec.saddle(n)?.order_omega;
        let period = Float::with_val(bits, Constant::Pi) * (2 * omega);
        let mut upper: Option<Float> = None;
        let mut lower: Option<Float> = None;
        for rec in spec.records_from(n) {
            let (tp, _) = stokes_successor(rec, omega, home, alpha)?;
            let tm = Float::with_val(bits, &tp - &period);
            upper = Some(match upper {
                Some(u) => u.min(&tp),
                None => tp,
            });
            lower = Some(match lower {
                Some(l) => l.max(&tm),
                None => tm,
            });
        }
        match (lower, upper) {
            (Some(lower), Some(upper)) => Ok(Self { lower, upper }),
            _ => {
                // no adjacent saddles: every direction is admissible
                let h = Float::with_val(bits, &period / 2u32);
                Ok(Self { lower: Float::with_val(bits, home - &h), upper: Float::with_val(bits, home + &h) })
            }
        }
    }

    /// Contour angle used for `θ`: `θ` itself inside the sector, otherwise
    /// the nearest angle a fixed margin inside it.
    pub fn contour_angle(&self, theta: &Float) -> Float {
        let bits = theta.prec();
        let width = Float::with_val(bits, &self.upper - &self.lower);
        let margin = Float::with_val(bits, &width / 8u32).min(&Float::with_val(bits, 0.1));
        let lo = Float::with_val(bits, &self.lower + &margin);
        let hi = Float::with_val(bits, &self.upper - &margin);
        if *theta > self.lower && *theta < self.upper {
            theta.clone()
        } else {
            theta.clone().max(&lo).min(&hi)
        }
    }
}

/// Result of the reference quadrature.
#[derive(Clone, Debug)]
pub struct ReferenceValue {
    pub value: Complex,
    /// Difference between the last two panel refinements.
    pub error_estimate: f64,
    pub panels: usize,
    pub contour_theta: Float,
}

/// `T^{(n)}(z; α) = ω z^{1/ω} ∫ e^{−z(f−f_n)} g dt` by Gauss–Legendre panels
/// in `s`, refined by halving until two successive values agree to
/// `rel_tol`.
///
/// The path is `𝒫^{(n)}(θ_c; α)` with `θ_c` the contour angle of
/// `home`'s sector (`home` defaults to `arg z`); beyond a Stokes line this
/// is the analytic continuation from inside the sector.
pub fn reference_t(
    spec: &ProblemSpec,
    n: usize,
    alpha: i64,
    z: &PhasedComplex,
    rel_tol: f64,
    home: Option<&Float>,
) -> Result<ReferenceValue> {
    let bits = spec.bits();
    let omega = spec.saddle(n)?.order_omega;
    let theta = Float::with_val(bits, &z.phase);
    let contour = match home {
        Some(h) => Sector::around(spec, n, alpha, h)?.contour_angle(&theta),
        None => {
            spec.check_off_stokes(n, &theta, alpha)?;
            theta.clone()
        }
    };
    if spec.g.is_zero() {
        return Ok(ReferenceValue { value: Complex::new(bits), error_estimate: 0.0, panels: 0, contour_theta: contour });
    }
    let tilt = Float::with_val(bits, &theta - &contour);
    let decay = Float::with_val(bits, tilt.cos_ref()) * &z.modulus;
    if decay <= 1e-3 {
        return Err(Error::Domain(format!(
            "θ is {:.4} rad from the contour angle; the integral does not converge",
            tilt.to_f64()
        )));
    }
    // e^{−z(f−f_n)} on the path is e^{−|z| s^ω e^{i(θ−θ_c)}}
    let rot = Complex::with_val(bits, expi(&tilt) * &z.modulus);
    let mut tracer = Tracer::new(spec, n, &contour, alpha, &TraceOptions::default())?;
    let integrand = |tr: &mut Tracer, s: &Float| -> Result<Complex> {
        let (u, du) = tr.at(s)?;
        let t = Complex::with_val(bits, tr.origin() + &u);
        let e = Complex::with_val(bits, -Complex::with_val(bits, &rot * Float::with_val(bits, Pow::pow(s.clone(), omega)))).exp();
        Ok(e * spec.g.eval(&t) * du)
    };
    let digits = -rel_tol.log10() + 10.0;
    let mut budget = digits * LN_10 + 20.0;
    let nodes = ((digits * 0.6) as usize + 16).min(120);
    let rule = gauss_legendre(nodes, bits);
    let mut panels = 8usize;
    loop {
        let s_max = Float::with_val(bits, Float::with_val(bits, budget) / &decay).pow(Float::with_val(bits, 1) / omega);
        let quad = |tr: &mut Tracer, k: usize| -> Result<Complex> {
            let h = Float::with_val(bits, &s_max / k as u32);
            let mut sum = Complex::new(bits);
            for p in 0..k {
                let a = Float::with_val(bits, &h * p as u32);
                let mid = Float::with_val(bits, &h / 2u32);
                let centre = Float::with_val(bits, &a + &mid);
                let mut part = Complex::new(bits);
                for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                    let s = Float::with_val(bits, &centre + Float::with_val(bits, &mid * x));
                    part += integrand(tr, &s)? * w;
                }
                sum += part * &mid;
            }
            Ok(sum)
        };
        let mut prev = quad(&mut tracer, panels)?;
        let mut ok = false;
        let mut err = f64::INFINITY;
        let mut value = prev.clone();
        while panels <= 4096 {
            panels *= 2;
            value = quad(&mut tracer, panels)?;
            let d = abs(&Complex::with_val(bits, &value - &prev)).to_f64();
            let m = abs(&value).to_f64();
            err = d;
            if d <= rel_tol * m {
                ok = true;
                break;
            }
            prev = value.clone();
        }
        if !ok {
            return Err(Error::Accuracy(format!("reference quadrature stalled at relative change {:.2e}", err)));
        }
        // tail: the integrand at the cut must be negligible
        let tail = abs(&integrand(&mut tracer, &s_max)?) * &s_max;
        if tail.to_f64() <= rel_tol * 1e-3 * abs(&value).to_f64() {
            let zr = z.pow(&(Float::with_val(bits, 1) / omega))?.to_complex();
            let value = value * zr * omega;
            return Ok(ReferenceValue { value, error_estimate: err, panels, contour_theta: contour });
        }
        budget *= 1.5;
        panels = 8;
    }
}

/// `∫_{𝒞^{(m)}(θ⁺)} |g(t)| |f(t) − f_n|^{−(N+1)/ω_n} |dt|` over both half
/// paths `𝒫^{(m)}(θ⁺; α⁺)` and `𝒫^{(m)}(θ⁺; α⁺+1)`.
pub fn abs_contour_integral(
    spec: &ProblemSpec,
    n: usize,
    m: usize,
    count: usize,
    theta_plus: &Float,
    alpha_plus: i64,
) -> Result<Float> {
    let bits = spec.bits();
    let omega_n = spec.saddle(n)?.order_omega;
    let omega_m = spec.saddle(m)?.order_omega;
    if spec.g.is_zero() {
        return Ok(Float::new(bits));
    }
    let d = spec.f.degree() as f64;
    let growth = omega_m as f64 * (spec.g.degree() as f64 + 1.0) / d - 1.0 - omega_m as f64 * (count as f64 + 1.0) / omega_n as f64;
    if growth >= -1.0 {
        return Err(Error::Domain(format!(
            "the contour integral diverges: integrand decays like s^{growth:.3} along the adjacent contour"
        )));
    }
    let singulant = spec.singulant_value(n, m)?;
    let power = Float::with_val(bits, (count + 1) as u32) / omega_n;
    let mut total = Float::new(bits);
    for a in [alpha_plus, alpha_plus + 1] {
        let tr = RefCell::new(Tracer::new(spec, m, theta_plus, a, &TraceOptions::default())?);
        let zero = Float::new(bits);
        let res = de_integrate(DeKind::HalfLine, &zero, None, 1e-14, |s, _, _| {
            let mut tr = tr.borrow_mut();
            let (u, du) = tr.at(s)?;
            let t = Complex::with_val(bits, tr.origin() + &u);
            let fv = Complex::with_val(bits, &singulant + tr.offset_value(&u));
            let w = abs(&spec.g.eval(&t)) * abs(&du) / Float::with_val(bits, abs(&fv).pow(&power));
            Ok(Complex::with_val(bits, (w, 0)))
        })?;
        total += res.value.real();
    }
    Ok(total)
}
