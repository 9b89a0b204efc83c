//! Problem data: phase and amplitude polynomials, saddles, adjacency records,
//! Stokes-angle successors and optimal truncation schedules.
//!
//! Adjacency records are input data. Each record stores one representative
//! Stokes angle for a steepest-descent path leaving its origin saddle with
//! `α = 0`; paths with other `α` are handled by [`stokes_successor`] through
//! the identity `P(θ; α) = P(θ − 2πα; 0)`.

use rug::float::Constant;
use rug::{Complex, Float};
use serde::{Deserialize, Serialize};

use crate::arith::{abs, arg, fmt_real, parse_real, PhasedComplex, Precision};
use crate::error::{Error, Result};

/// Polynomial with complex coefficients in ascending degree.
#[derive(Clone, Debug)]
pub struct Polynomial {
    pub coefficients: Vec<Complex>,
}

impl Polynomial {
    /// Trailing zero coefficients are dropped; the zero polynomial keeps one entry.
    pub fn new(mut coefficients: Vec<Complex>) -> Self {
        assert!(!coefficients.is_empty(), "a polynomial needs at least one coefficient");
        while coefficients.len() > 1 && coefficients.last().unwrap().is_zero() {
            coefficients.pop();
        }
        Self { coefficients }
    }

    pub fn constant(bits: u32, c: f64) -> Self {
        Self::new(vec![Complex::with_val(bits, (c, 0))])
    }

    pub fn prec(&self) -> u32 {
        self.coefficients[0].prec().0
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|c| c.is_zero())
    }

    pub fn eval(&self, t: &Complex) -> Complex {
        let bits = self.prec().max(t.prec().0);
        let mut acc = Complex::new(bits);
        for c in self.coefficients.iter().rev() {
            acc *= t;
            acc += c;
        }
        acc
    }

    /// Value and first derivative by a doubled Horner scheme.
    pub fn eval_with_derivative(&self, t: &Complex) -> (Complex, Complex) {
        let bits = self.prec().max(t.prec().0);
        let mut p = Complex::new(bits);
        let mut d = Complex::new(bits);
        for c in self.coefficients.iter().rev() {
            d *= t;
            d += &p;
            p *= t;
            p += c;
        }
        (p, d)
    }

    pub fn derivative(&self) -> Self {
        let bits = self.prec();
        if self.coefficients.len() == 1 {
            return Self::new(vec![Complex::new(bits)]);
        }
        Self::new(
            self.coefficients
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| Complex::with_val(bits, c * k as u32))
                .collect(),
        )
    }

    pub fn nth_derivative(&self, p: usize) -> Self {
        (0..p).fold(self.clone(), |acc, _| acc.derivative())
    }

    /// Taylor coefficients `p^{(k)}(t0)/k!` for `k = 0..=degree`.
    pub fn taylor_at(&self, t0: &Complex) -> Vec<Complex> {
        let bits = self.prec().max(t0.prec().0);
        let mut work: Vec<Complex> = self.coefficients.iter().map(|c| Complex::with_val(bits, c)).collect();
        let n = work.len();
        let mut out = Vec::with_capacity(n);
        // repeated synthetic division by (t − t0)
        for k in 0..n {
            for j in (k..n - 1).rev() {
                let carry = Complex::with_val(bits, &work[j + 1] * t0);
                work[j] += carry;
            }
            out.push(work[k].clone());
        }
        out
    }

    /// `Σ |c_k| k!/(k−p)! |t|^{k−p}`: a scale for judging `p^{(p)}(t) ≈ 0`.
    fn derivative_scale(&self, p: usize, t: &Complex) -> Float {
        let bits = self.prec();
        let r = abs(t);
        let mut s = Float::new(bits);
        for (k, c) in self.coefficients.iter().enumerate().skip(p) {
            let mut falling = Float::with_val(bits, 1);
            for j in 0..p {
                falling *= (k - j) as u32;
            }
            let rp = Float::with_val(bits, rug::ops::Pow::pow(&r, (k - p) as u32));
            s += abs(c) * falling * rp;
        }
        s
    }
}

/// A saddle `t^{(n)}` where `f′, …, f^{(ω−1)}` vanish and `f^{(ω)}` does not.
#[derive(Clone, Debug)]
pub struct SaddlePoint {
    pub id: usize,
    pub location: Complex,
    pub order_omega: u32,
    pub critical_value: Complex,
    pub leading_derivative: Complex,
}

/// Adjacency `n → m` with one representative Stokes angle (for origin `α = 0`).
#[derive(Clone, Debug)]
pub struct AdjacencyRecord {
    pub from_id: usize,
    pub to_id: usize,
    /// `f_m − f_n` with phase `−base_theta`.
    pub singulant: PhasedComplex,
    /// Representative in `[0, 2πω_n)`.
    pub base_theta: Float,
    pub base_alpha: i64,
    /// Slope angle of the adjacent contour at `t^{(m)}`, in `(−π, π]`.
    pub arrival_phi: Float,
}

/// Optimal term counts along a chain of adjacent saddles.
#[derive(Clone, Debug)]
pub struct TruncationSchedule {
    pub level: usize,
    pub counts: Vec<usize>,
    pub etas: Vec<Float>,
    pub path_length: Float,
    /// Saddle ids `m_0 = n, m_1, …, m_level`.
    pub chain: Vec<usize>,
}

/// One step of a Stokes chain: the adjacent contour `P^{(to)}(theta_plus, alpha_plus)`.
#[derive(Clone, Debug)]
pub struct ChainStep {
    pub from_id: usize,
    pub to_id: usize,
    pub theta_plus: Float,
    pub alpha_plus: i64,
    pub singulant_modulus: Float,
}

#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub name: String,
    pub precision: Precision,
    pub f: Polynomial,
    pub g: Polynomial,
    pub saddles: Vec<SaddlePoint>,
    pub adjacency: Vec<AdjacencyRecord>,
    /// Pairs tested by the algebraic adjacency solver; not used by the engine.
    pub candidates: Vec<AdjacencyRecord>,
}

/// A declared adjacency before validation; angles as multiples of π.
#[derive(Clone, Debug)]
pub struct AdjacencyDecl {
    pub from: usize,
    pub to: usize,
    pub base_theta_over_pi: Float,
    pub base_alpha: i64,
    pub arrival_phi_over_pi: Float,
}

impl ProblemSpec {
    pub fn bits(&self) -> u32 {
        self.precision.bits()
    }

    pub fn saddle(&self, id: usize) -> Result<&SaddlePoint> {
        self.saddles
            .iter()
            .find(|s| s.id == id)
            .ok_or_else(|| Error::Validation(format!("no saddle with id {id}")))
    }

    pub fn record(&self, from: usize, to: usize) -> Result<&AdjacencyRecord> {
        self.adjacency
            .iter()
            .find(|r| r.from_id == from && r.to_id == to)
            .ok_or_else(|| Error::Graph(format!("no adjacency record {from} → {to}")))
    }

    pub fn records_from(&self, from: usize) -> impl Iterator<Item = &AdjacencyRecord> {
        self.adjacency.iter().filter(move |r| r.from_id == from)
    }

    pub fn candidate(&self, from: usize, to: usize) -> Result<&AdjacencyRecord> {
        self.candidates
            .iter()
            .chain(self.adjacency.iter())
            .find(|r| r.from_id == from && r.to_id == to)
            .ok_or_else(|| Error::Graph(format!("no candidate record {from} → {to}")))
    }

    /// `f_m − f_n` as a cartesian value.
    pub fn singulant_value(&self, n: usize, m: usize) -> Result<Complex> {
        let a = self.saddle(n)?;
        let b = self.saddle(m)?;
        Ok(Complex::with_val(self.bits(), &b.critical_value - &a.critical_value))
    }

    /// Validates saddles and adjacency data, snapping declared values to
    /// working precision.
    pub fn assemble(
        name: &str,
        precision: Precision,
        f: Polynomial,
        g: Polynomial,
        saddles: &[(usize, Complex, u32)],
        adjacency: &[AdjacencyDecl],
        candidates: &[AdjacencyDecl],
    ) -> Result<Self> {
        let bits = precision.bits();
        let f = Polynomial::new(f.coefficients.iter().map(|c| Complex::with_val(bits, c)).collect());
        let g = Polynomial::new(g.coefficients.iter().map(|c| Complex::with_val(bits, c)).collect());
        if f.degree() < 1 {
            return Err(Error::Validation("f must have degree at least 1".into()));
        }
        let mut out = Vec::new();
        for (id, t, omega) in saddles {
            if out.iter().any(|s: &SaddlePoint| s.id == *id) {
                return Err(Error::Validation(format!("duplicate saddle id {id}")));
            }
            out.push(refine_saddle(&f, *id, &Complex::with_val(bits, t), *omega, &precision)?);
        }
        let mut spec = Self {
            name: name.to_string(),
            precision,
            f,
            g,
            saddles: out,
            adjacency: Vec::new(),
            candidates: Vec::new(),
        };
        let adjacency = adjacency.iter().map(|d| spec.validate_record(d)).collect::<Result<Vec<_>>>()?;
        let candidates = candidates.iter().map(|d| spec.validate_record(d)).collect::<Result<Vec<_>>>()?;
        spec.adjacency = adjacency;
        spec.candidates = candidates;
        Ok(spec)
    }

    fn validate_record(&self, d: &AdjacencyDecl) -> Result<AdjacencyRecord> {
        let bits = self.bits();
        let pi = Float::with_val(bits, Constant::Pi);
        let two_pi = Float::with_val(bits, &pi * 2u32);
        if d.from == d.to {
            return Err(Error::Validation(format!("adjacency {0} → {0} is a loop", d.from)));
        }
        let sn = self.saddle(d.from)?;
        let sm = self.saddle(d.to)?;
        let diff = self.singulant_value(d.from, d.to)?;
        if diff.is_zero() {
            return Err(Error::Validation(format!("saddles {} and {} share a critical value", d.from, d.to)));
        }
        // Stokes condition: e^{iθ}(f_m − f_n) > 0, i.e. θ ≡ −arg(f_m − f_n) mod 2π
        let declared = Float::with_val(bits, &d.base_theta_over_pi * &pi);
        let exact0 = -arg(&diff);
        let k = Float::with_val(bits, Float::with_val(bits, &declared - &exact0) / &two_pi).round();
        let theta = Float::with_val(bits, &exact0 + Float::with_val(bits, &k * &two_pi));
        let miss = Float::with_val(bits, &theta - &declared).abs().to_f64();
        if miss > 1e-8 {
            return Err(Error::Validation(format!(
                "adjacency {} → {}: θ = {}π violates the Stokes condition (off by {:.3e})",
                d.from,
                d.to,
                fmt_real(&d.base_theta_over_pi, 12),
                miss
            )));
        }
        // reduce to [0, 2πω_n)
        let period = Float::with_val(bits, &two_pi * sn.order_omega);
        let q = Float::with_val(bits, &theta / &period).floor();
        let theta = Float::with_val(bits, &theta - Float::with_val(bits, &q * &period));
        let shift = q.to_f64().round() as i64 * sn.order_omega as i64;
        let base_alpha = d.base_alpha - shift;
        // 2πα = θ + arg f^{(ω_m)}(t_m) + ω_m φ
        let lead_arg = arg(&sm.leading_derivative);
        let declared_phi = Float::with_val(bits, &d.arrival_phi_over_pi * &pi);
        let alpha_from_phi = (Float::with_val(bits, &declared + &lead_arg)
            + Float::with_val(bits, &declared_phi * sm.order_omega))
            / &two_pi;
        let miss_alpha = (alpha_from_phi.to_f64() - d.base_alpha as f64).abs();
        if miss_alpha > 1e-6 {
            return Err(Error::Validation(format!(
                "adjacency {} → {}: arrival slope gives α = {:.6}, declared {}",
                d.from,
                d.to,
                alpha_from_phi.to_f64(),
                d.base_alpha
            )));
        }
        let phi = (Float::with_val(bits, &two_pi * d.base_alpha) - &declared - &lead_arg) / sm.order_omega;
        let singulant = PhasedComplex::new(abs(&diff), Float::with_val(bits, -&theta));
        Ok(AdjacencyRecord { from_id: d.from, to_id: d.to, singulant, base_theta: theta, base_alpha, arrival_phi: phi })
    }

    /// Adjacency chain from `(theta, alpha)` at `chain[0]` through `chain[1..]`.
    pub fn stokes_chain(&self, chain: &[usize], theta: &Float, alpha: i64) -> Result<Vec<ChainStep>> {
        let mut steps = Vec::new();
        let mut th = theta.clone();
        let mut al = alpha;
        for w in chain.windows(2) {
            let rec = self.record(w[0], w[1])?;
            let omega = self.saddle(w[0])?.order_omega;
            let (tp, ap) = stokes_successor(rec, omega, &th, al)?;
            steps.push(ChainStep {
                from_id: w[0],
                to_id: w[1],
                theta_plus: tp.clone(),
                alpha_plus: ap,
                singulant_modulus: rec.singulant.modulus.clone(),
            });
            th = tp;
            al = ap;
        }
        Ok(steps)
    }

    /// Rejects `theta` lying on a Stokes line of any record leaving `n`.
    pub fn check_off_stokes(&self, n: usize, theta: &Float, alpha: i64) -> Result<()> {
        let omega = self.saddle(n)?.order_omega;
        for rec in self.records_from(n) {
            stokes_successor(rec, omega, theta, alpha)?;
        }
        Ok(())
    }

    /// All chains `n = m_0 → m_1 → … → m_len` along adjacency records, in
    /// lexicographic order.
    pub fn chains(&self, n: usize, len: usize) -> Vec<Vec<usize>> {
        let mut out = vec![vec![n]];
        for _ in 0..len {
            let mut next = Vec::new();
            for c in &out {
                let mut tos: Vec<usize> = self.records_from(*c.last().unwrap()).map(|r| r.to_id).collect();
                tos.sort_unstable();
                for t in tos {
                    let mut c2 = c.clone();
                    c2.push(t);
                    next.push(c2);
                }
            }
            out = next;
        }
        out
    }

    /// Length of the shortest path of `steps` steps from `n`, with its chain.
    pub fn shortest_path(&self, n: usize, steps: usize) -> Result<(Float, Vec<usize>)> {
        let bits = self.bits();
        let mut best: Option<(Float, Vec<usize>)> = None;
        for c in self.chains(n, steps) {
            let mut len = Float::new(bits);
            for w in c.windows(2) {
                len += &self.record(w[0], w[1])?.singulant.modulus;
            }
            let better = match &best {
                None => true,
                Some((b, _)) => {
                    let tol = Float::with_val(bits, b * 1e-30);
                    Float::with_val(bits, &len - b) < -tol
                }
            };
            if better {
                best = Some((len, c));
            }
        }
        best.ok_or_else(|| Error::Graph(format!("no {steps}-step adjacency path from saddle {n}")))
    }

    /// Counts along `chain` from `η_0 = eta0`.
    pub fn schedule_for_chain(&self, chain: &[usize], eta0: &Float, mod_z: &Float) -> Result<TruncationSchedule> {
        let bits = self.bits();
        let mut etas = vec![eta0.clone()];
        for w in chain.windows(2) {
            let f = &self.record(w[0], w[1])?.singulant.modulus;
            let e = Float::with_val(bits, etas.last().unwrap() - f).max(&Float::new(bits));
            etas.push(e);
        }
        let mut counts = Vec::new();
        for (e, id) in etas.iter().zip(chain) {
            let omega = self.saddle(*id)?.order_omega;
            let x = Float::with_val(bits, e * omega) * mod_z;
            counts.push(snapped_floor(&x, self.precision.digits));
        }
        Ok(TruncationSchedule { level: chain.len() - 1, counts, etas, path_length: eta0.clone(), chain: chain.to_vec() })
    }

    pub fn export_document(&self) -> ProblemDocument {
        let sig = (self.precision.digits + 5) as usize;
        let cx = |c: &Complex| [fmt_real(c.real(), sig), fmt_real(c.imag(), sig)];
        let bits = self.bits();
        let pi = Float::with_val(bits, Constant::Pi);
        let rec = |r: &AdjacencyRecord| AdjacencyDoc {
            from: r.from_id,
            to: r.to_id,
            base_theta_over_pi: fmt_real(&Float::with_val(bits, &r.base_theta / &pi), sig),
            base_alpha: r.base_alpha,
            arrival_phi_over_pi: fmt_real(&Float::with_val(bits, &r.arrival_phi / &pi), sig),
        };
        ProblemDocument {
            name: self.name.clone(),
            precision_digits: self.precision.digits,
            f: PolyDoc { coeffs: self.f.coefficients.iter().map(cx).collect() },
            g: PolyDoc { coeffs: self.g.coefficients.iter().map(cx).collect() },
            saddles: self
                .saddles
                .iter()
                .map(|s| SaddleDoc { id: s.id, t: cx(&s.location), omega: s.order_omega })
                .collect(),
            adjacency: self.adjacency.iter().map(rec).collect(),
            candidates: self.candidates.iter().map(rec).collect(),
        }
    }
}

/// `floor(x)`, except that values within `10^{-(digits−10)}` (relative) below
/// an integer count as that integer.
pub fn snapped_floor(x: &Float, digits: u32) -> usize {
    let bits = x.prec();
    if *x <= 0 {
        return 0;
    }
    let tol = Float::with_val(bits, 10f64.powi(-(digits.saturating_sub(10).max(6) as i32)));
    let nudged = Float::with_val(bits, x * Float::with_val(bits, 1u32 + tol));
    let v = nudged.floor();
    v.to_f64() as usize
}

fn refine_saddle(f: &Polynomial, id: usize, t: &Complex, omega: u32, prec: &Precision) -> Result<SaddlePoint> {
    let bits = prec.bits();
    if omega < 2 {
        return Err(Error::Validation(format!("saddle {id}: ω must be at least 2")));
    }
    if omega as usize > f.degree() {
        return Err(Error::Validation(format!("saddle {id}: ω = {omega} exceeds deg f")));
    }
    let mismatch = |why: &str| Error::Validation(format!("saddle-order mismatch at saddle {id} (ω = {omega}): {why}"));
    let fw1 = f.nth_derivative(omega as usize - 1);
    let mut x = t.clone();
    let tol = Float::with_val(bits, Float::i_exp(1, -(bits as i32) + 4));
    for _ in 0..200 {
        let (v, d) = fw1.eval_with_derivative(&x);
        if d.is_zero() {
            return Err(mismatch("leading derivative vanishes"));
        }
        let dx = Complex::with_val(bits, &v / &d);
        x -= &dx;
        if abs(&dx) <= Float::with_val(bits, &tol * Float::with_val(bits, 1u32 + abs(&x))) {
            break;
        }
    }
    let moved = abs(&Complex::with_val(bits, &x - t)).to_f64();
    let scale = 1.0 + abs(t).to_f64();
    if !moved.is_finite() || moved > 1e-6 * scale {
        return Err(mismatch(&format!("declared location is {moved:.3e} away from a root of f^(ω−1)")));
    }
    let eps = Float::with_val(bits, prec.epsilon() * 1e6);
    for p in 1..omega as usize {
        let v = f.nth_derivative(p).eval(&x);
        let s = f.derivative_scale(p, &x);
        if abs(&v) > Float::with_val(bits, &eps * &s) {
            return Err(mismatch(&format!("f^({p}) does not vanish")));
        }
    }
    let lead = f.nth_derivative(omega as usize).eval(&x);
    let s = f.derivative_scale(omega as usize, &x);
    if abs(&lead) <= Float::with_val(bits, &eps * &s) {
        return Err(mismatch("f^(ω) vanishes, the saddle has higher order"));
    }
    Ok(SaddlePoint { id, critical_value: f.eval(&x), leading_derivative: lead, location: x, order_omega: omega })
}

/// Next Stokes angle above `theta` for a path leaving `rec.from_id` with
/// `source_alpha`: the smallest `base + 2π·source_alpha + 2πω_n k > theta`,
/// with `α⁺ = base_alpha + source_alpha + ω_n k`.
pub fn stokes_successor(rec: &AdjacencyRecord, omega_n: u32, theta: &Float, source_alpha: i64) -> Result<(Float, i64)> {
    let bits = theta.prec().max(rec.base_theta.prec());
    let two_pi = Float::with_val(bits, Constant::Pi) * 2u32;
    let base = Float::with_val(bits, &rec.base_theta + Float::with_val(bits, &two_pi * source_alpha));
    let period = Float::with_val(bits, &two_pi * omega_n);
    let d = Float::with_val(bits, Float::with_val(bits, theta - &base) / &period);
    let nearest = Float::with_val(bits, d.round_ref());
    let gap = Float::with_val(bits, &d - &nearest).abs();
    let tol = Float::with_val(bits, Float::i_exp(1, -(bits as i32) / 2));
    if gap <= tol {
        return Err(Error::OnStokesLine(format!(
            "θ = {} lies on the Stokes line of {} → {}",
            fmt_real(theta, 12),
            rec.from_id,
            rec.to_id
        )));
    }
    let k = d.floor().to_f64() as i64 + 1;
    let theta_plus = Float::with_val(bits, &base + Float::with_val(bits, &period * k));
    let alpha_plus = rec.base_alpha + source_alpha + omega_n as i64 * k;
    Ok((theta_plus, alpha_plus))
}

/// Optimal counts for a Level-`level` expansion about `start`.
pub fn truncation_schedule(spec: &ProblemSpec, start: usize, level: usize, mod_z: &Float) -> Result<TruncationSchedule> {
    if level > 3 {
        return Err(Error::Validation(format!("level {level} is outside 0–3")));
    }
    let (r, chain) = spec.shortest_path(start, level + 1)?;
    let chain = &chain[..=level];
    spec.schedule_for_chain(chain, &r, mod_z)
}

// ---- documents -------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PolyDoc {
    pub coeffs: Vec<[String; 2]>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SaddleDoc {
    pub id: usize,
    pub t: [String; 2],
    pub omega: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AdjacencyDoc {
    pub from: usize,
    pub to: usize,
    pub base_theta_over_pi: String,
    pub base_alpha: i64,
    pub arrival_phi_over_pi: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ProblemDocument {
    pub name: String,
    pub precision_digits: u32,
    pub f: PolyDoc,
    pub g: PolyDoc,
    pub saddles: Vec<SaddleDoc>,
    pub adjacency: Vec<AdjacencyDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub candidates: Vec<AdjacencyDoc>,
}

/// Parses and validates a JSON problem document. `digits` overrides the
/// document's precision.
pub fn load_problem(text: &str, digits: Option<u32>) -> Result<ProblemSpec> {
    let doc: ProblemDocument = serde_json::from_str(text).map_err(|e| Error::Parse(format!("problem document: {e}")))?;
    problem_from_document(&doc, digits)
}

pub fn problem_from_document(doc: &ProblemDocument, digits: Option<u32>) -> Result<ProblemSpec> {
    let precision = Precision::new(digits.unwrap_or(doc.precision_digits))?;
    let bits = precision.bits();
    let cx = |p: &[String; 2]| -> Result<Complex> {
        Ok(Complex::with_val(bits, (parse_real(bits, &p[0])?, parse_real(bits, &p[1])?)))
    };
    let poly = |p: &PolyDoc| -> Result<Polynomial> {
        if p.coeffs.is_empty() {
            return Err(Error::Parse("polynomial with no coefficients".into()));
        }
        Ok(Polynomial::new(p.coeffs.iter().map(cx).collect::<Result<_>>()?))
    };
    let decl = |a: &AdjacencyDoc| -> Result<AdjacencyDecl> {
        Ok(AdjacencyDecl {
            from: a.from,
            to: a.to,
            base_theta_over_pi: parse_real(bits, &a.base_theta_over_pi)?,
            base_alpha: a.base_alpha,
            arrival_phi_over_pi: parse_real(bits, &a.arrival_phi_over_pi)?,
        })
    };
    let saddles = doc.saddles.iter().map(|s| Ok((s.id, cx(&s.t)?, s.omega))).collect::<Result<Vec<_>>>()?;
    let adjacency = doc.adjacency.iter().map(decl).collect::<Result<Vec<_>>>()?;
    let candidates = doc.candidates.iter().map(decl).collect::<Result<Vec<_>>>()?;
    ProblemSpec::assemble(&doc.name, precision, poly(&doc.f)?, poly(&doc.g)?, &saddles, &adjacency, &candidates)
}

// ---- built-in problems -----------------------------------------------------

pub const BUILTIN_NAMES: [&str; 3] = ["pearcey_cusp", "degenerate_3_5", "swallowtail"];

pub fn builtin(name: &str, precision: Precision) -> Result<ProblemSpec> {
    match name {
        "pearcey_cusp" => pearcey_cusp(precision),
        "degenerate_3_5" => degenerate_3_5(precision),
        "swallowtail" => swallowtail(precision),
        _ => Err(Error::Validation(format!("unknown builtin problem {name:?}; known: {}", BUILTIN_NAMES.join(", ")))),
    }
}

fn ratio(bits: u32, p: i64, q: i64) -> Float {
    Float::with_val(bits, p) / q
}

fn decl(bits: u32, from: usize, to: usize, theta_over_pi: Float, alpha: i64, phi_over_pi: Float) -> AdjacencyDecl {
    AdjacencyDecl {
        from,
        to,
        base_theta_over_pi: Float::with_val(bits, theta_over_pi),
        base_alpha: alpha,
        arrival_phi_over_pi: Float::with_val(bits, phi_over_pi),
    }
}

/// `f = −i(t⁴ − 3t² + 2√2 t)`: simple saddle at `−√2`, double saddle at `1/√2`.
pub fn pearcey_cusp(precision: Precision) -> Result<ProblemSpec> {
    let b = precision.bits();
    let s2 = Float::with_val(b, 2).sqrt();
    let f = Polynomial::new(vec![
        Complex::new(b),
        Complex::with_val(b, (0, -Float::with_val(b, &s2 * 2u32))),
        Complex::with_val(b, (0, 3)),
        Complex::new(b),
        Complex::with_val(b, (0, -1)),
    ]);
    let g = Polynomial::constant(b, 1.0);
    let saddles = [
        (1, Complex::with_val(b, (-s2.clone(), 0)), 2),
        (2, Complex::with_val(b, (Float::with_val(b, 1) / &s2, 0)), 3),
    ];
    let adjacency = [
        decl(b, 1, 2, ratio(b, 1, 2), 1, ratio(b, 2, 3)),
        decl(b, 2, 1, ratio(b, 7, 2), 1, ratio(b, -1, 2)),
    ];
    ProblemSpec::assemble("pearcey_cusp", precision, f, g, &saddles, &adjacency, &[])
}

/// `f = (15/28)t⁷ − 5t⁶ + 18t⁵ − 30t⁴ + 20t³`, saddles of order 3 at 0 and 5 at 2.
pub fn degenerate_3_5(precision: Precision) -> Result<ProblemSpec> {
    let b = precision.bits();
    let re = |x: Float| Complex::with_val(b, (x, 0));
    let f = Polynomial::new(vec![
        Complex::new(b),
        Complex::new(b),
        Complex::new(b),
        re(Float::with_val(b, 20)),
        re(Float::with_val(b, -30)),
        re(Float::with_val(b, 18)),
        re(Float::with_val(b, -5)),
        re(ratio(b, 15, 28)),
    ]);
    let g = Polynomial::constant(b, 1.0);
    let saddles = [(1, Complex::new(b), 3), (2, Complex::with_val(b, (2, 0)), 5)];
    let adjacency = [
        decl(b, 1, 2, Float::new(b), 2, ratio(b, 4, 5)),
        decl(b, 2, 1, Float::with_val(b, 5), 2, ratio(b, -1, 3)),
    ];
    ProblemSpec::assemble("degenerate_3_5", precision, f, g, &saddles, &adjacency, &[])
}

/// Swallowtail with saddles `7/4 − i/2`, `−5/4 − i/2` (simple) and
/// `−1/4 + i/2` (double). Only `1 → 3` is adjacent; `1 → 2` is kept as a
/// candidate for the algebraic test.
pub fn swallowtail(precision: Precision) -> Result<ProblemSpec> {
    let b = precision.bits();
    let pi = Float::with_val(b, Constant::Pi);
    let c = |re: Float, im: Float| Complex::with_val(b, (re, im));
    let f = Polynomial::new(vec![
        Complex::new(b),
        c(ratio(b, 505, 256), ratio(b, 840, 256)),
        c(ratio(b, -45, 16), ratio(b, 90, 16)),
        c(ratio(b, -75, 24), ratio(b, 20, 24)),
        Complex::new(b),
        c(Float::with_val(b, 1), Float::new(b)),
    ]);
    let g = Polynomial::constant(b, 1.0);
    let saddles = [
        (1, c(ratio(b, 7, 4), ratio(b, -1, 2)), 2),
        (2, c(ratio(b, -5, 4), ratio(b, -1, 2)), 2),
        (3, c(ratio(b, -1, 4), ratio(b, 1, 2)), 3),
    ];
    let theta = |p: i64, q: i64| Float::with_val(b, 3u32) - Float::with_val(b, ratio(b, p, q).atan()) / &pi;
    let to2 = decl(b, 1, 2, theta(10, 3), 1, Float::with_val(b, -0.146) / &pi);
    let to3 = decl(b, 1, 3, theta(278, 29), 0, Float::with_val(b, -1.713) / &pi);
    // declared slopes are approximate; validation tolerates them and refines
    let to2 = AdjacencyDecl { arrival_phi_over_pi: slope_from_alpha(b, &to2, 2, &saddles, &f), ..to2 };
    let to3 = AdjacencyDecl { arrival_phi_over_pi: slope_from_alpha(b, &to3, 3, &saddles, &f), ..to3 };
    ProblemSpec::assemble("swallowtail", precision, f, g, &saddles, &[to3.clone()], &[to2, to3])
}

/// `φ/π` implied by the declared `α` at the declared angle.
fn slope_from_alpha(bits: u32, d: &AdjacencyDecl, omega_m: u32, saddles: &[(usize, Complex, u32)], f: &Polynomial) -> Float {
    let pi = Float::with_val(bits, Constant::Pi);
    let tm = &saddles.iter().find(|s| s.0 == d.to).unwrap().1;
    let lead = f.nth_derivative(omega_m as usize).eval(tm);
    let two_alpha = Float::with_val(bits, 2 * d.base_alpha);
    let phi_pi = (two_alpha - &d.base_theta_over_pi - arg(&lead) / &pi) / omega_m;
    phi_pi
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prec() -> Precision {
        Precision::new(40).unwrap()
    }

    #[test]
    fn taylor_shift_matches_derivatives() {
        let p = prec();
        let f = pearcey_cusp(p).unwrap().f;
        let t0 = p.complex(0.3, -0.2);
        let d = f.taylor_at(&t0);
        let mut fact = 1u32;
        for (k, dk) in d.iter().enumerate() {
            if k > 0 {
                fact *= k as u32;
            }
            let want = f.nth_derivative(k).eval(&t0) / fact;
            assert!(abs(&Complex::with_val(p.bits(), dk - want)) < 1e-40);
        }
    }

    #[test]
    fn builtins_load_with_expected_singulants() {
        let p = prec();
        let pc = pearcey_cusp(p).unwrap();
        let m = &pc.record(1, 2).unwrap().singulant.modulus;
        assert!(Float::with_val(p.bits(), m - 6.75f64).abs() < 1e-40);
        let d = degenerate_3_5(p).unwrap();
        let m = &d.record(2, 1).unwrap().singulant.modulus;
        assert!(Float::with_val(p.bits(), m - ratio(p.bits(), 32, 7)).abs() < 1e-40);
        let s = swallowtail(p).unwrap();
        let m = &s.candidate(1, 2).unwrap().singulant.modulus;
        let want = Float::with_val(p.bits(), 109).sqrt() * 9u32 / 4u32;
        assert!(Float::with_val(p.bits(), m - want).abs() < 1e-38);
        assert_eq!(s.candidate(1, 3).unwrap().base_alpha, 0);
    }

    #[test]
    fn wrong_saddle_order_is_rejected() {
        let p = prec();
        let b = p.bits();
        let f = pearcey_cusp(p).unwrap().f;
        let s2 = Float::with_val(b, 2).sqrt();
        let saddles = [(1, Complex::with_val(b, (-s2, 0)), 3)];
        let err = ProblemSpec::assemble("bad", p, f, Polynomial::constant(b, 1.0), &saddles, &[], &[]).unwrap_err();
        assert!(err.to_string().contains("saddle-order mismatch"), "{err}");
    }

    #[test]
    fn stokes_condition_violation_is_rejected() {
        let p = prec();
        let b = p.bits();
        let good = pearcey_cusp(p).unwrap();
        let saddles: Vec<_> = good.saddles.iter().map(|s| (s.id, s.location.clone(), s.order_omega)).collect();
        let bad = [decl(b, 1, 2, ratio(b, 1, 3), 1, ratio(b, 2, 3))];
        let err = ProblemSpec::assemble("bad", p, good.f.clone(), good.g.clone(), &saddles, &bad, &[]).unwrap_err();
        assert!(err.to_string().contains("Stokes condition"), "{err}");
    }

    #[test]
    fn successor_examples() {
        let p = prec();
        let b = p.bits();
        let pi = p.pi();
        let pc = pearcey_cusp(p).unwrap();
        let th = Float::with_val(b, -&pi) / 4u32;
        let (t1, a1) = stokes_successor(pc.record(1, 2).unwrap(), 2, &th, 0).unwrap();
        assert!((Float::with_val(b, &t1 / &pi) - 0.5f64).abs() < 1e-40);
        assert_eq!(a1, 1);
        let (t2, a2) = stokes_successor(pc.record(2, 1).unwrap(), 3, &t1, a1).unwrap();
        assert!((Float::with_val(b, &t2 / &pi) - 5.5f64).abs() < 1e-40);
        assert_eq!(a2, 2);
        let (t3, a3) = stokes_successor(pc.record(1, 2).unwrap(), 2, &t2, a2).unwrap();
        assert!((Float::with_val(b, &t3 / &pi) - 8.5f64).abs() < 1e-40);
        assert_eq!(a3, 5);
        assert!(matches!(
            stokes_successor(pc.record(1, 2).unwrap(), 2, &t1, 0),
            Err(Error::OnStokesLine(_))
        ));
    }

    #[test]
    fn degenerate_chain() {
        let p = prec();
        let b = p.bits();
        let pi = p.pi();
        let d = degenerate_3_5(p).unwrap();
        let th = Float::with_val(b, -&pi) / 4u32;
        let steps = d.stokes_chain(&[1, 2, 1, 2], &th, 0).unwrap();
        let got: Vec<(f64, i64)> = steps.iter().map(|s| ((&s.theta_plus / pi.clone()).to_f64(), s.alpha_plus)).collect();
        assert_eq!(got.iter().map(|g| g.1).collect::<Vec<_>>(), vec![2, 4, 9]);
        for (g, w) in got.iter().zip([0.0, 9.0, 14.0]) {
            assert!((g.0 - w).abs() < 1e-12);
        }
    }

    #[test]
    fn schedules_match_tables() {
        let p = prec();
        let one = p.float(1.0);
        let pc = pearcey_cusp(p).unwrap();
        let want = [vec![13], vec![27, 20], vec![40, 40, 13], vec![54, 60, 27, 20]];
        for (l, w) in want.iter().enumerate() {
            assert_eq!(&truncation_schedule(&pc, 1, l, &one).unwrap().counts, w);
        }
        let d = degenerate_3_5(p).unwrap();
        let want = [vec![13], vec![27, 22], vec![41, 45, 13], vec![54, 68, 27, 22]];
        for (l, w) in want.iter().enumerate() {
            assert_eq!(&truncation_schedule(&d, 1, l, &one).unwrap().counts, w);
        }
    }

    #[test]
    fn document_roundtrip() {
        let p = prec();
        let pc = pearcey_cusp(p).unwrap();
        let doc = pc.export_document();
        let text = serde_json::to_string_pretty(&doc).unwrap();
        let back = load_problem(&text, None).unwrap();
        assert_eq!(back.saddles.len(), 2);
        assert_eq!(back.adjacency[1].base_alpha, 1);
        let d = Complex::with_val(p.bits(), &back.saddles[0].location - &pc.saddles[0].location);
        assert!(abs(&d) < 1e-40);
        assert!(load_problem("{\"name\": 3}", None).is_err());
    }
}
