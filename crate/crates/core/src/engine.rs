//! Level 0–3 hyperasymptotic expansions, late-coefficient prediction and the
//! algebraic solver for adjacency constants.
//!
//! A Level-`L` value is the truncated Poincaré sum plus, for every adjacency
//! chain `n = m_0 → m_1 → … → m_l` with `l ≤ L`,
//!
//! ```text
//! z^{(1−N_0)/ω_n} / ((2πi)^l Π_{j≥1} ω_{m_j})
//!   × Σ_b (−1)^{|b|} Σ_{r<N_l} 𝐓_r^{(m_l)}(α_l + |b|) F^{(l)}(z; columns)
//! ```
//!
//! where `b ∈ {0,1}^{l−1}` records, at each re-expansion after the first,
//! whether the remainder picked up the neighbouring sheet. A choice
//! `b_j = 1` shifts every later σ phase by `−2π` and every later `α` by one.

use rayon::prelude::*;
use rug::float::Constant;
use rug::{Complex, Float};
use serde::Serialize;

use crate::arith::{abs, expi, fmt_real, gamma_real, PhasedComplex};
use crate::coeffs::{perron_coefficients, CoefficientTable};
use crate::error::{Error, Result};
use crate::hyperterm::{hyperterminant, Column, HyperOptions, HyperterminantArgs};
use crate::problem::{stokes_successor, truncation_schedule, ChainStep, ProblemSpec, TruncationSchedule};
use crate::specfun::real_pow;

/// One summand of an expansion.
#[derive(Clone, Debug)]
pub struct LedgerTerm {
    /// 0 for the Poincaré sum, `l` for a Level-`l` re-expansion term.
    pub level_index: usize,
    pub chain: Vec<usize>,
    pub branch: Vec<u8>,
    pub r: usize,
    pub value: Complex,
}

/// Sheet bookkeeping of one chain/branch combination.
#[derive(Clone, Debug)]
pub struct BranchRecord {
    pub level_index: usize,
    pub chain: Vec<usize>,
    pub branch: Vec<u8>,
    pub thetas: Vec<Float>,
    pub alphas: Vec<i64>,
    pub sign: i32,
    /// Multiples of `−2π` added to each σ phase.
    pub phase_shifts: Vec<i64>,
}

/// A recorded hyperterminant evaluation, replayable from its arguments.
#[derive(Clone, Debug)]
pub struct HyperCall {
    pub term_index: usize,
    pub args: HyperterminantArgs,
    /// Multiplier applied to the hyperterminant value to give the term.
    pub weight: Complex,
    pub value: Complex,
    pub truncation_estimate: f64,
    pub options: HyperOptions,
}

/// Counts per chain position used for one chain.
#[derive(Clone, Debug)]
pub struct ChainCounts {
    pub chain: Vec<usize>,
    pub counts: Vec<usize>,
}

/// Everything needed to audit or replay an expansion.
#[derive(Clone, Debug)]
pub struct ExpansionLedger {
    pub level: usize,
    pub schedule: TruncationSchedule,
    pub chain_counts: Vec<ChainCounts>,
    pub terms: Vec<LedgerTerm>,
    pub branch_tree: Vec<BranchRecord>,
    pub calls: Vec<HyperCall>,
    /// Running value after each level.
    pub level_sums: Vec<Complex>,
    pub partial_sum: Complex,
    /// Sum of the series-truncation estimates of all hyperterminant calls.
    pub truncation_estimate: f64,
}

impl ExpansionLedger {
    /// Re-evaluates every recorded hyperterminant call and re-sums.
    pub fn replay(&self, z: &PhasedComplex) -> Result<Complex> {
        let bits = self.partial_sum.prec().0;
        let mut values: Vec<Complex> = self.terms.iter().map(|t| t.value.clone()).collect();
        for c in &self.calls {
            let v = hyperterminant(z, &c.args, &c.options)?;
            values[c.term_index] = Complex::with_val(bits, &c.weight * &v.value);
        }
        let mut s = Complex::new(bits);
        for v in &values {
            s += v;
        }
        Ok(s)
    }
}

/// Knobs for [`hyper_expand`].
#[derive(Clone, Debug, Default)]
pub struct ExpandOptions {
    /// Explicit counts `N_0, …, N_L`, applied position by position to every
    /// chain.
    pub schedule: Option<Vec<usize>>,
    /// Angle inside the Stokes sector whose expansion is wanted, when `arg z`
    /// lies beyond it.
    pub home: Option<Float>,
    pub hyper: Option<HyperOptions>,
    /// Absolute accuracy wanted from each level's re-expansion terms, as a
    /// fraction of the Poincaré sum; defaults to the working precision. Each
    /// hyperterminant call is then only asked for the relative accuracy this
    /// implies.
    pub abs_tol: Option<f64>,
}

/// Poincaré sum `Σ_{r<N} T_r^{(n)}(α) z^{−r/ω_n}`.
pub fn expand_level0(spec: &ProblemSpec, n: usize, alpha: i64, z: &PhasedComplex, count: usize) -> Result<ExpansionLedger> {
    let theta = Float::with_val(spec.bits(), &z.phase);
    spec.check_off_stokes(n, &theta, alpha)?;
    let schedule = TruncationSchedule {
        level: 0,
        counts: vec![count],
        etas: vec![],
        path_length: Float::new(spec.bits()),
        chain: vec![n],
    };
    let opts = ExpandOptions { schedule: Some(vec![count]), ..Default::default() };
    expand_with(spec, n, alpha, z, 0, schedule, &opts)
}

/// Level-`level` expansion (`level ≤ 3`) with the optimal schedule unless
/// one is supplied.
pub fn hyper_expand(
    spec: &ProblemSpec,
    n: usize,
    alpha: i64,
    z: &PhasedComplex,
    level: usize,
    opts: &ExpandOptions,
) -> Result<ExpansionLedger> {
    if level > 3 {
        return Err(Error::Validation(format!("level {level} is outside 0–3")));
    }
    let bits = spec.bits();
    let theta = Float::with_val(bits, &z.phase);
    if opts.home.is_none() {
        spec.check_off_stokes(n, &theta, alpha)?;
    }
    let schedule = match &opts.schedule {
        Some(c) => {
            if c.len() != level + 1 {
                return Err(Error::Validation(format!(
                    "a Level-{level} schedule needs {} counts, got {}",
                    level + 1,
                    c.len()
                )));
            }
            let chain = if level == 0 { vec![n] } else { spec.shortest_path(n, level)?.1 };
            TruncationSchedule {
                level,
                counts: c.clone(),
                etas: vec![],
                path_length: Float::new(bits),
                chain,
            }
        }
        None => truncation_schedule(spec, n, level, &z.modulus)?,
    };
    expand_with(spec, n, alpha, z, level, schedule, opts)
}

struct Plan {
    chain: Vec<usize>,
    counts: Vec<usize>,
    steps: Vec<ChainStep>,
}

fn plan_chains(
    spec: &ProblemSpec,
    n: usize,
    alpha: i64,
    anchor: &Float,
    level: usize,
    schedule: &TruncationSchedule,
    fixed: bool,
    mod_z: &Float,
) -> Result<Vec<Plan>> {
    let mut plans = Vec::new();
    for l in 1..=level {
        for chain in spec.chains(n, l) {
            let counts = if fixed {
                schedule.counts[..=l].to_vec()
            } else {
                let eta0 = &schedule.etas[0];
                let s = spec.schedule_for_chain(&chain, eta0, mod_z)?;
                s.counts
            };
            if counts[1..].iter().any(|&c| c == 0) {
                continue;
            }
            let steps = spec.stokes_chain(&chain, anchor, alpha)?;
            plans.push(Plan { chain, counts, steps });
        }
    }
    Ok(plans)
}

fn branches(len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|b| {
                [0u8, 1].into_iter().map(move |x| {
                    let mut c = b.clone();
                    c.push(x);
                    c
                })
            })
            .collect();
    }
    out
}

fn expand_with(
    spec: &ProblemSpec,
    n: usize,
    alpha: i64,
    z: &PhasedComplex,
    level: usize,
    schedule: TruncationSchedule,
    opts: &ExpandOptions,
) -> Result<ExpansionLedger> {
    let bits = spec.bits();
    let pi = Float::with_val(bits, Constant::Pi);
    let two_pi = Float::with_val(bits, &pi * 2u32);
    let omega_n = spec.saddle(n)?.order_omega;
    let hyper_opts = opts.hyper.clone().unwrap_or_else(|| HyperOptions::for_precision(&spec.precision));
    let theta = Float::with_val(bits, &z.phase);
    let anchor = match &opts.home {
        Some(h) => crate::geometry::Sector::around(spec, n, alpha, h)?.contour_angle(&theta),
        None => theta.clone(),
    };
    let fixed = opts.schedule.is_some() || schedule.etas.is_empty();
    let plans = plan_chains(spec, n, alpha, &anchor, level, &schedule, fixed, &z.modulus)?;

    // coefficient tables, one per saddle at α = 0, long enough for every use
    let mut need: Vec<(usize, usize)> = vec![(n, schedule.counts[0])];
    for p in &plans {
        let l = p.chain.len() - 1;
        need.push((p.chain[l], p.counts[l]));
    }
    let mut tables: Vec<CoefficientTable> = Vec::new();
    for &(id, c) in need.iter().filter(|(_, c)| *c > 0) {
        match tables.iter().position(|t| t.saddle_id == id) {
            Some(i) if tables[i].len() >= c => {}
            Some(i) => tables[i] = perron_coefficients(spec, id, 0, c)?,
            None => tables.push(perron_coefficients(spec, id, 0, c)?),
        }
    }
    let table = |id: usize, a: i64| match tables.iter().find(|t| t.saddle_id == id) {
        Some(t) => t.with_alpha(a).values,
        None => Vec::new(),
    };

    let mut terms = Vec::new();
    let mut calls = Vec::new();
    let mut tree = Vec::new();
    let mut level_sums = Vec::new();
    let mut running = Complex::new(bits);

    let base = table(n, alpha);
    let n0 = schedule.counts[0];
    for r in 0..n0 {
        let zr = z.pow(&(Float::with_val(bits, r as u32) / omega_n))?.to_complex();
        let v = Complex::with_val(bits, &base[r] / zr);
        running += &v;
        terms.push(LedgerTerm { level_index: 0, chain: vec![n], branch: vec![], r, value: v });
    }
    level_sums.push(running.clone());

    let base_size = abs(&running).to_f64().max(1e-300);
    let target = base_size * opts.abs_tol.unwrap_or(10f64.powi(-(spec.precision.digits as i32)));
    let pref0 = z.pow(&(Float::with_val(bits, 1 - n0 as i64) / omega_n))?.to_complex();
    let two_pi_i = Complex::with_val(bits, (0, &two_pi));
    let mut estimate = 0.0;
    for l in 1..=level {
        for plan in plans.iter().filter(|p| p.chain.len() == l + 1) {
            let chain = &plan.chain;
            let counts = &plan.counts;
            let omegas: Vec<u32> = chain.iter().map(|id| spec.saddle(*id).map(|s| s.order_omega)).collect::<Result<_>>()?;
            let mut denom = Complex::with_val(bits, (1, 0));
            for _ in 0..l {
                denom *= &two_pi_i;
            }
            for w in &omegas[1..] {
                denom *= *w;
            }
            let pref = Complex::with_val(bits, &pref0 / &denom);
            for b in branches(l - 1) {
                let shift: i64 = b.iter().map(|&x| x as i64).sum();
                let sign = if shift % 2 == 0 { 1 } else { -1 };
                let mut cum = vec![0i64; l];
                for j in 1..l {
                    cum[j] = cum[j - 1] + b[j - 1] as i64;
                }
                let alphas: Vec<i64> =
                    plan.steps.iter().enumerate().map(|(j, s)| s.alpha_plus + if j == 0 { 0 } else { cum[j] }).collect();
                let a_last = plan.steps[l - 1].alpha_plus + shift;
                tree.push(BranchRecord {
                    level_index: l,
                    chain: chain.clone(),
                    branch: b.clone(),
                    thetas: plan.steps.iter().map(|s| s.theta_plus.clone()).collect(),
                    alphas,
                    sign,
                    phase_shifts: cum.clone(),
                });
                let last = chain[l];
                let ta = table(last, a_last);
                let tb = table(last, a_last + 1);
                let fixed_cols: Vec<Column> = (0..l)
                    .map(|j| {
                        let phase = Float::with_val(bits, &pi - &plan.steps[j].theta_plus)
                            - Float::with_val(bits, &two_pi * cum[j]);
                        let sigma = PhasedComplex::new(plan.steps[j].singulant_modulus.clone(), phase);
                        let m = if j + 1 < l {
                            Float::with_val(bits, (counts[j] + 1) as u32) / omegas[j]
                                - Float::with_val(bits, counts[j + 1] as u32) / omegas[j + 1]
                        } else {
                            Float::with_val(bits, (counts[j] + 1) as u32) / omegas[j]
                        };
                        Column { m, omega: omegas[j], sigma }
                    })
                    .collect();
                let eval = |r: usize, o: &HyperOptions| -> Result<(usize, HyperterminantArgs, Complex, f64, Complex)> {
                        let mut cols = fixed_cols.clone();
                        let lc = cols.last_mut().unwrap();
                        lc.m -= Float::with_val(bits, (r + 1) as u32) / omegas[l];
                        let args = HyperterminantArgs::new(cols).map_err(|e| chain_context(e, chain, r))?;
                        let v = hyperterminant(z, &args, o).map_err(|e| chain_context(e, chain, r))?;
                        let bold = Complex::with_val(bits, &ta[r] - &tb[r]);
                        let mut weight = Complex::with_val(bits, &pref * &bold);
                        if sign < 0 {
                            weight = -weight;
                        }
                        Ok((r, args, weight, v.truncation_estimate, v.value))
                };
                // size of the first term fixes how loosely the others may be computed
                let probe_opts = HyperOptions { rel_tol: hyper_opts.rel_tol.max(1e-6), ..hyper_opts.clone() };
                let (_, _, w0, _, v0) = eval(0, &probe_opts)?;
                let scale = abs(&Complex::with_val(bits, &w0 * &v0)).to_f64() * counts[l] as f64;
                let wanted = if scale > 0.0 { target / scale } else { 1e-6 };
                let call_opts = HyperOptions { rel_tol: wanted.clamp(hyper_opts.rel_tol, 1e-6), ..hyper_opts.clone() };
                let results: Vec<_> = (0..counts[l]).into_par_iter().map(|r| eval(r, &call_opts)).collect();
                for res in results {
                    let (r, args, weight, est, value) = res?;
                    let term = Complex::with_val(bits, &weight * &value);
                    estimate += est * abs(&weight).to_f64();
                    running += &term;
                    calls.push(HyperCall {
                        term_index: terms.len(),
                        args,
                        weight,
                        value,
                        truncation_estimate: est,
                        options: call_opts.clone(),
                    });
                    terms.push(LedgerTerm { level_index: l, chain: chain.clone(), branch: b.clone(), r, value: term });
                }
            }
        }
        level_sums.push(running.clone());
    }
    let mut partial = Complex::new(bits);
    for t in &terms {
        partial += &t.value;
    }
    let chain_counts = plans.iter().map(|p| ChainCounts { chain: p.chain.clone(), counts: p.counts.clone() }).collect();
    Ok(ExpansionLedger {
        level,
        schedule,
        chain_counts,
        terms,
        branch_tree: tree,
        calls,
        level_sums,
        partial_sum: partial,
        truncation_estimate: estimate,
    })
}

fn chain_context(e: Error, chain: &[usize], r: usize) -> Error {
    let path = chain.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("→");
    match e {
        Error::Domain(m) => Error::Domain(format!("chain {path}, r = {r}: {m}")),
        Error::Accuracy(m) => Error::Accuracy(format!("chain {path}, r = {r}: {m}")),
        Error::Collinear(m) => Error::Collinear(format!("chain {path}, r = {r}: {m}")),
        other => other,
    }
}

/// Resurgence block of adjacent saddle `m` in `T_N^{(n)}`:
/// `(2πiω_m)^{−1} Σ_{r<N_1} 𝐓_r^{(m)}(α⁺) e^{iθ⁺β} Γ(β) / |𝓕|^β` with
/// `β = (N+1)/ω_n − (r+1)/ω_m`.
fn late_block(
    spec: &ProblemSpec,
    n: usize,
    alpha: i64,
    m: usize,
    count: usize,
    inner: usize,
    candidate: bool,
) -> Result<Complex> {
    let bits = spec.bits();
    let rec = if candidate { spec.candidate(n, m)? } else { spec.record(n, m)? };
    let omega_n = spec.saddle(n)?.order_omega;
    let omega_m = spec.saddle(m)?.order_omega;
    // first Stokes angle of the sheet: base + 2πα with α⁺ = base_alpha + α
    let two_pi = Float::with_val(bits, Constant::Pi) * 2u32;
    let below = Float::with_val(bits, &rec.base_theta + Float::with_val(bits, &two_pi * alpha)) - 1e-3f64;
    let (theta_plus, alpha_plus) = stokes_successor(rec, omega_n, &below, alpha)?;
    let t = perron_coefficients(spec, m, 0, inner)?;
    let ta = t.with_alpha(alpha_plus);
    let tb = t.with_alpha(alpha_plus + 1);
    let modulus = &rec.singulant.modulus;
    let mut sum = Complex::new(bits);
    for r in 0..inner {
        let beta = Float::with_val(bits, (count + 1) as u32) / omega_n - Float::with_val(bits, (r + 1) as u32) / omega_m;
        if beta <= 0 {
            return Err(Error::Domain(format!(
                "inner count {inner} too large for N = {count}: Γ argument {} is not positive",
                fmt_real(&beta, 6)
            )));
        }
        let bold = Complex::with_val(bits, &ta.values[r] - &tb.values[r]);
        let g = gamma_real(&beta)? / real_pow(modulus, &beta);
        let ph = expi(&Float::with_val(bits, &theta_plus * &beta));
        sum += bold * ph * g;
    }
    let denom = Complex::with_val(bits, (0, two_pi)) * omega_m;
    Ok(sum / denom)
}

/// Late-term prediction of `T_N^{(n)}(α)` from the adjacent saddles'
/// coefficients, `inner` giving `(m, N_1^{(m)})` for each one used.
pub fn late_coefficients(spec: &ProblemSpec, n: usize, alpha: i64, count: usize, inner: &[(usize, usize)]) -> Result<Complex> {
    let mut total = Complex::new(spec.bits());
    for &(m, k) in inner {
        total += late_block(spec, n, alpha, m, count, k, false)?;
    }
    Ok(total)
}

/// Default inner counts `N_1^{(m)} = floor((η_1 ω_m)/(η_0 ω_n) N)` from the
/// shortest two-step path; saddles without a continuation get none.
pub fn default_inner_counts(spec: &ProblemSpec, n: usize, count: usize) -> Result<Vec<(usize, usize)>> {
    let bits = spec.bits();
    let (eta0, _) = spec.shortest_path(n, 2)?;
    let omega_n = spec.saddle(n)?.order_omega;
    let mut out = Vec::new();
    for rec in spec.records_from(n) {
        let eta1 = Float::with_val(bits, &eta0 - &rec.singulant.modulus);
        if eta1 <= 0 {
            continue;
        }
        let omega_m = spec.saddle(rec.to_id)?.order_omega;
        let x = Float::with_val(bits, &eta1 * omega_m) * count as u32 / Float::with_val(bits, &eta0 * omega_n);
        out.push((rec.to_id, x.floor().to_f64() as usize));
    }
    Ok(out)
}

/// Solution of the late-term system for unknown adjacency constants.
#[derive(Clone, Debug, Serialize)]
pub struct AdjacencyConstant {
    pub from_id: usize,
    pub to_id: usize,
    pub re: f64,
    pub im: f64,
    pub rounded: i64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AdjacencySolution {
    pub constants: Vec<AdjacencyConstant>,
    /// Largest relative residual `|A K − T| / |T|` over the equations.
    pub residual: f64,
    pub condition: f64,
}

/// Solves `T_N = Σ_m K_m · block_m(N)` for the `K_m` (least squares when
/// there are more orders than candidates).
pub fn adjacency_constants(
    spec: &ProblemSpec,
    n: usize,
    alpha: i64,
    candidates: &[(usize, usize)],
    orders: &[usize],
) -> Result<AdjacencySolution> {
    let bits = spec.bits();
    let k = candidates.len();
    if k == 0 || orders.len() < k {
        return Err(Error::Validation(format!(
            "need at least as many orders ({}) as candidate pairs ({k}), and at least one pair",
            orders.len()
        )));
    }
    let top = *orders.iter().max().unwrap();
    let t = perron_coefficients(spec, n, alpha, top + 1)?;
    let mut rows: Vec<Vec<Complex>> = Vec::new();
    let mut rhs: Vec<Complex> = Vec::new();
    for &order in orders {
        let mut row = Vec::with_capacity(k);
        for &(m, inner) in candidates {
            row.push(late_block(spec, n, alpha, m, order, inner, true)?);
        }
        // equations scaled by |T_N| so each order weighs the same
        let s = abs(&t.values[order]);
        rows.push(row.into_iter().map(|x| x / &s).collect());
        rhs.push(Complex::with_val(bits, &t.values[order] / &s));
    }
    // columns scaled to unit norm for conditioning
    let mut norms = vec![Float::new(bits); k];
    for (j, nj) in norms.iter_mut().enumerate() {
        for row in &rows {
            *nj += Float::with_val(bits, row[j].norm_ref());
        }
        *nj = nj.clone().sqrt();
    }
    let a: Vec<Vec<Complex>> = rows.iter().map(|row| row.iter().zip(&norms).map(|(x, s)| Complex::with_val(bits, x / s)).collect()).collect();
    // normal equations A^H A y = A^H b
    let mut g = vec![vec![Complex::new(bits); k]; k];
    let mut h = vec![Complex::new(bits); k];
    for (row, b) in a.iter().zip(&rhs) {
        for i in 0..k {
            let ci = Complex::with_val(bits, row[i].conj_ref());
            for j in 0..k {
                g[i][j] += Complex::with_val(bits, &ci * &row[j]);
            }
            h[i] += Complex::with_val(bits, &ci * b);
        }
    }
    let condition = hermitian_condition(&g).sqrt();
    if !(condition < 1e10) {
        return Err(Error::Conditioning { cond: condition });
    }
    let y = solve(g, h)?;
    let kvals: Vec<Complex> = y.iter().zip(&norms).map(|(v, s)| Complex::with_val(bits, v / s)).collect();
    let mut residual = 0.0f64;
    for (row, b) in rows.iter().zip(&rhs) {
        let mut s = Complex::new(bits);
        for (x, kv) in row.iter().zip(&kvals) {
            s += Complex::with_val(bits, x * kv);
        }
        residual = residual.max(abs(&Complex::with_val(bits, &s - b)).to_f64());
    }
    let constants = candidates
        .iter()
        .zip(&kvals)
        .map(|(&(m, _), kv)| AdjacencyConstant {
            from_id: n,
            to_id: m,
            re: kv.real().to_f64(),
            im: kv.imag().to_f64(),
            rounded: kv.real().to_f64().round() as i64,
        })
        .collect();
    Ok(AdjacencySolution { constants, residual, condition })
}

/// Ratio of extreme eigenvalues of a small Hermitian matrix (cyclic Jacobi
/// on its real 2k × 2k embedding).
fn hermitian_condition(g: &[Vec<Complex>]) -> f64 {
    let k = g.len();
    let n = 2 * k;
    let mut m = vec![vec![0.0f64; n]; n];
    for i in 0..k {
        for j in 0..k {
            let re = g[i][j].real().to_f64();
            let im = g[i][j].imag().to_f64();
            m[i][j] = re;
            m[i + k][j + k] = re;
            m[i][j + k] = -im;
            m[i + k][j] = im;
        }
    }
    for _ in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[p][q] * m[p][q];
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..n {
                    let (a, b) = (m[r][p], m[r][q]);
                    m[r][p] = c * a - s * b;
                    m[r][q] = s * a + c * b;
                }
                for r in 0..n {
                    let (a, b) = (m[p][r], m[q][r]);
                    m[p][r] = c * a - s * b;
                    m[q][r] = s * a + c * b;
                }
            }
        }
        if off < 1e-30 {
            break;
        }
    }
    let eig: Vec<f64> = (0..n).map(|i| m[i][i].abs()).collect();
    let hi = eig.iter().cloned().fold(0.0, f64::max);
    let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<Complex>>, mut b: Vec<Complex>) -> Result<Vec<Complex>> {
    let k = b.len();
    for c in 0..k {
        let p = (c..k).max_by(|&i, &j| abs(&a[i][c]).partial_cmp(&abs(&a[j][c])).unwrap()).unwrap();
        if a[p][c].is_zero() {
            return Err(Error::Conditioning { cond: f64::INFINITY });
        }
        a.swap(c, p);
        b.swap(c, p);
        for i in c + 1..k {
            let f = Complex::with_val(a[i][c].prec().0, &a[i][c] / &a[c][c]);
            for j in c..k {
                let d = Complex::with_val(f.prec().0, &f * &a[c][j]);
                a[i][j] -= d;
            }
            let d = Complex::with_val(f.prec().0, &f * &b[c]);
            b[i] -= d;
        }
    }
    let mut x = vec![Complex::new(b[0].prec().0); k];
    for i in (0..k).rev() {
        let mut s = b[i].clone();
        for j in i + 1..k {
            s -= Complex::with_val(s.prec().0, &a[i][j] * &x[j]);
        }
        x[i] = s / &a[i][i];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::Precision;
    use crate::problem::{degenerate_3_5, pearcey_cusp, swallowtail};

    fn z_unit(p: &Precision) -> PhasedComplex {
        PhasedComplex::from_phase_over_pi(p.float(1.0), &p.float(-0.25))
    }

    fn pearcey_reference(p: &Precision) -> Complex {
        Complex::with_val(
            p.bits(),
            (p.parse("0.37277007370182291370").unwrap(), p.parse("0.47493131741141216950").unwrap()),
        )
    }

    fn err(a: &Complex, b: &Complex) -> f64 {
        abs(&Complex::with_val(a.prec().0, a - b)).to_f64()
    }

    #[test]
    fn empty_poincare_sum_is_zero() {
        let p = Precision::new(30).unwrap();
        let spec = pearcey_cusp(p).unwrap();
        let led = expand_level0(&spec, 1, 0, &z_unit(&p), 0).unwrap();
        assert!(led.partial_sum.is_zero());
        assert!(led.terms.is_empty());
    }

    #[test]
    fn poincare_sum_refuses_a_stokes_line() {
        let p = Precision::new(30).unwrap();
        let spec = pearcey_cusp(p).unwrap();
        let z = PhasedComplex::from_phase_over_pi(p.float(1.0), &p.float(0.5));
        assert!(matches!(expand_level0(&spec, 1, 0, &z, 5), Err(Error::OnStokesLine(_))));
    }

    #[test]
    fn pearcey_levels_zero_to_two() {
        let p = Precision::new(30).unwrap();
        let spec = pearcey_cusp(p).unwrap();
        let z = z_unit(&p);
        let reference = pearcey_reference(&p);
        let want = [1.9e-4, 9.5e-9, 3.8e-14];
        let mut last = f64::INFINITY;
        for (level, w) in want.iter().enumerate() {
            let led = hyper_expand(&spec, 1, 0, &z, level, &ExpandOptions::default()).unwrap();
            let e = err(&led.partial_sum, &reference);
            assert!(e < 2.0 * w && e > w / 2.0, "level {level}: {e:e}");
            assert!(e < last);
            last = e;
        }
    }

    #[test]
    fn degenerate_level_one() {
        let p = Precision::new(30).unwrap();
        let spec = degenerate_3_5(p).unwrap();
        let reference = p.complex(1.244081553113296, 0.145693991003805);
        let led = hyper_expand(&spec, 1, 0, &z_unit(&p), 1, &ExpandOptions::default()).unwrap();
        assert_eq!(led.schedule.counts, vec![27, 22]);
        let e = err(&led.partial_sum, &reference);
        assert!(e < 7.4e-7 && e > 1.85e-7, "{e:e}");
    }

    #[test]
    fn partial_sum_is_the_sum_of_terms_and_replays() {
        let p = Precision::new(30).unwrap();
        let spec = pearcey_cusp(p).unwrap();
        let z = z_unit(&p);
        let led = hyper_expand(&spec, 1, 0, &z, 2, &ExpandOptions::default()).unwrap();
        let mut s = Complex::new(p.bits());
        for t in &led.terms {
            s += &t.value;
        }
        assert_eq!(s, led.partial_sum);
        assert_eq!(led.calls.len(), 40 + 2 * 13);
        assert_eq!(led.replay(&z).unwrap(), led.partial_sum);
    }

    #[test]
    fn third_level_branch_structure() {
        let p = Precision::new(30).unwrap();
        let spec = pearcey_cusp(p).unwrap();
        let pi = p.pi();
        let opts = ExpandOptions { schedule: Some(vec![54, 60, 27, 1]), abs_tol: Some(1e-12), ..Default::default() };
        let led = hyper_expand(&spec, 1, 0, &z_unit(&p), 3, &opts).unwrap();
        let third: Vec<&BranchRecord> = led.branch_tree.iter().filter(|b| b.level_index == 3).collect();
        assert_eq!(third.len(), 4);
        let calls: Vec<&HyperCall> = led.calls.iter().filter(|c| led.terms[c.term_index].level_index == 3).collect();
        let thetas = &third[0].thetas;
        for (t, k) in thetas.iter().zip([0.5, 5.5, 8.5]) {
            assert!((Float::with_val(p.bits(), t / &pi).to_f64() - k).abs() < 1e-25);
        }
        let want_phase = [1.0, -1.0, -1.0, -3.0];
        let want_shift = [0, 1, 1, 2];
        let want_sign = [1, -1, -1, 1];
        for (i, (b, c)) in third.iter().zip(&calls).enumerate() {
            let ph = Float::with_val(p.bits(), &c.args.columns[2].sigma.phase + &thetas[2]) / &pi;
            assert!((ph.to_f64() - want_phase[i]).abs() < 1e-25, "branch {i}");
            assert_eq!(b.alphas[2] - 5, want_shift[i]);
            assert_eq!(b.sign, want_sign[i]);
            assert_eq!(c.args.columns.iter().map(|c| c.omega).collect::<Vec<_>>(), vec![2, 3, 2]);
        }
    }

    #[test]
    fn alpha_shift_is_a_full_turn_of_z() {
        // same path: (θ + 2π, α + 1); only z^{1/ω} differs, by e^{2πi/ω}
        let p = Precision::new(30).unwrap();
        let spec = pearcey_cusp(p).unwrap();
        let z = z_unit(&p);
        let turned = z.rotate(&Float::with_val(p.bits(), p.pi() * 2u32));
        let a = hyper_expand(&spec, 1, 0, &z, 2, &ExpandOptions::default()).unwrap();
        let b = hyper_expand(&spec, 1, 1, &turned, 2, &ExpandOptions::default()).unwrap();
        for (x, y) in a.branch_tree.iter().zip(&b.branch_tree) {
            for (tx, ty) in x.thetas.iter().zip(&y.thetas) {
                let d = Float::with_val(p.bits(), ty - tx) - Float::with_val(p.bits(), p.pi() * 2u32);
                assert!(d.to_f64().abs() < 1e-25);
            }
            assert!(x.alphas.iter().zip(&y.alphas).all(|(u, v)| v - u == 1));
        }
        let rot = expi(&Float::with_val(p.bits(), p.pi() * 2u32 / 2u32));
        let want = Complex::with_val(p.bits(), &a.partial_sum * &rot);
        assert!(err(&want, &b.partial_sum) < 1e-26);
    }

    #[test]
    fn pearcey_late_coefficient() {
        let p = Precision::new(40).unwrap();
        let spec = pearcey_cusp(p).unwrap();
        let inner = default_inner_counts(&spec, 1, 40).unwrap();
        assert_eq!(inner, vec![(2, 30)]);
        let predicted = late_coefficients(&spec, 1, 0, 40, &inner).unwrap();
        let t = perron_coefficients(&spec, 1, 0, 41).unwrap();
        let rel = err(&predicted, &t.values[40]) / abs(&t.values[40]).to_f64();
        // the omitted second-level resurgence terms leave about 4e-8
        assert!(rel < 1e-7, "{rel:e}");
    }

    #[test]
    fn no_adjacent_saddles_predicts_zero() {
        let p = Precision::new(30).unwrap();
        let spec = pearcey_cusp(p).unwrap();
        assert!(late_coefficients(&spec, 1, 0, 40, &[]).unwrap().is_zero());
    }

    #[test]
    fn pearcey_adjacency_constant_is_one() {
        let p = Precision::new(40).unwrap();
        let spec = pearcey_cusp(p).unwrap();
        let sol = adjacency_constants(&spec, 1, 0, &[(2, 30)], &[40]).unwrap();
        let k = &sol.constants[0];
        assert!((k.re - 1.0).abs() < 1e-3 && k.im.abs() < 1e-3, "{k:?}");
        assert_eq!(k.rounded, 1);
    }

    #[test]
    fn swallowtail_adjacency_constants() {
        let p = Precision::new(40).unwrap();
        let spec = swallowtail(p).unwrap();
        let sol = adjacency_constants(&spec, 1, 0, &[(2, 7), (3, 11)], &[50, 51]).unwrap();
        let k12 = &sol.constants[0];
        let k13 = &sol.constants[1];
        assert!((k12.re + 0.00123).abs() < 5e-5 && (k12.im - 0.00095).abs() < 5e-5, "{k12:?}");
        assert!((k13.re - 1.00076).abs() < 5e-5 && (k13.im - 0.00060).abs() < 5e-5, "{k13:?}");
        assert_eq!((k12.rounded, k13.rounded), (0, 1));
    }

    #[test]
    fn too_few_orders_is_rejected() {
        let p = Precision::new(30).unwrap();
        let spec = swallowtail(p).unwrap();
        assert!(matches!(adjacency_constants(&spec, 1, 0, &[(2, 7), (3, 11)], &[50]), Err(Error::Validation(_))));
    }
}
