//! Perturbed Stein operators on the integers.
//!
//! The base operator is the Poisson immigration–death generator
//! `(A₀g)(j) = λ′g(j+1) − jg(j)` with `λ′ = λm₁`; the target is the compound
//! Poisson generator `(A₁g)(j) = λΣ_l lμ_l g(j+l) − jg(j)`, and
//! `U = A₁ − A₀` acts as `(Ug)(j) = λΣ_l lμ_l {g(j+l) − g(j+1)}`.
//!
//! A right inverse of `A₁` (up to a constant on `Z₊`) is the Neumann series
//!
//! ```text
//! B = A₀⁻¹P₀ Σ_{k≥0} (−1)^k (U A₀⁻¹P₀)^k,   P₀f = (f − π₀(f)) 1_{Z₊},
//! ```
//!
//! which converges whenever `γ = ‖UA₀⁻¹P₀‖ < 1`. [`gamma_upper`] returns the
//! certificate `2m′₂/m₁`; [`gamma_empirical`] estimates the operator norm from
//! below with seeded probes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distances::{distance, MetricKind};
use crate::error::{Error, Result};
use crate::lattice::{poisson_pmf, CompoundPoissonSpec, SignedLatticeMeasure, DEFAULT_TAIL_TOL};

/// Extension of a [`LatticeFunction`] beyond its stored window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    Zero,
    /// The first stored value to the left, the last to the right.
    Constant,
}

/// A real function on `Z`, stored on `[offset, offset + len)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeFunction {
    offset: i64,
    values: Vec<f64>,
    tail: Tail,
}

impl LatticeFunction {
    pub fn new(offset: i64, values: Vec<f64>, tail: Tail) -> Self {
        Self {
            offset,
            values,
            tail,
        }
    }

    pub fn from_fn<F: Fn(i64) -> f64>(lo: i64, hi: i64, tail: Tail, f: F) -> Self {
        Self::new(lo, (lo..=hi).map(f).collect(), tail)
    }

    pub fn zeros(lo: i64, hi: i64) -> Self {
        Self::from_fn(lo, hi, Tail::Zero, |_| 0.0)
    }

    /// `1_{{k}}`.
    pub fn indicator(k: i64) -> Self {
        Self::new(k, vec![1.0], Tail::Zero)
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn lo(&self) -> i64 {
        self.offset
    }

    pub fn hi(&self) -> i64 {
        self.offset + self.values.len() as i64 - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    pub fn get(&self, j: i64) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        let k = j - self.offset;
        if k >= 0 && (k as usize) < self.values.len() {
            return self.values[k as usize];
        }
        match self.tail {
            Tail::Zero => 0.0,
            Tail::Constant if k < 0 => self.values[0],
            Tail::Constant => *self.values.last().unwrap(),
        }
    }

    /// Norm over all of `Z`, honouring the tail convention. The
    /// Wasserstein seminorm is `sup_j |f(j+1) − f(j)|`; an ℓ¹ norm of a
    /// function with a nonzero constant tail is infinite.
    pub fn norm(&self, kind: NormKind) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        match kind {
            NormKind::Sup => self.values.iter().fold(0.0, |a, v| a.max(v.abs())),
            NormKind::WassersteinSeminorm => {
                let (lo, hi) = match self.tail {
                    Tail::Zero => (self.lo() - 1, self.hi() + 1),
                    Tail::Constant => (self.lo(), self.hi()),
                };
                diff_sup(self, lo, hi)
            }
            NormKind::L1 => {
                let ends = [self.values[0], *self.values.last().unwrap()];
                if self.tail == Tail::Constant && ends.iter().any(|v| *v != 0.0) {
                    f64::INFINITY
                } else {
                    self.values.iter().map(|v| v.abs()).sum()
                }
            }
        }
    }

    fn scaled(mut self, c: f64) -> Self {
        self.values.iter_mut().for_each(|v| *v *= c);
        self
    }
}

/// `max_{lo ≤ j ≤ hi} |f(j)|`.
pub fn sup_on(f: &LatticeFunction, lo: i64, hi: i64) -> f64 {
    (lo..=hi).fold(0.0, |a, j| a.max(f.get(j).abs()))
}

/// `max_{lo ≤ j < hi} |f(j+1) − f(j)|`.
pub fn diff_sup(f: &LatticeFunction, lo: i64, hi: i64) -> f64 {
    (lo..hi).fold(0.0, |a, j| a.max((f.get(j + 1) - f.get(j)).abs()))
}

/// `Σ_{lo ≤ j < hi} |f(j+1) − f(j)|`.
pub fn diff_l1(f: &LatticeFunction, lo: i64, hi: i64) -> f64 {
    (lo..hi).map(|j| (f.get(j + 1) - f.get(j)).abs()).sum()
}

/// `max_{lo ≤ j ≤ hi − 2} |f(j+2) − 2f(j+1) + f(j)|`.
pub fn second_diff_sup(f: &LatticeFunction, lo: i64, hi: i64) -> f64 {
    (lo..hi - 1).fold(0.0, |a, j| {
        a.max((f.get(j + 2) - 2.0 * f.get(j + 1) + f.get(j)).abs())
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Sup,
    WassersteinSeminorm,
    L1,
}

impl NormKind {
    pub const ALL: [NormKind; 3] = [NormKind::Sup, NormKind::WassersteinSeminorm, NormKind::L1];

    pub fn as_str(self) -> &'static str {
        match self {
            NormKind::Sup => "sup",
            NormKind::WassersteinSeminorm => "wasserstein_seminorm",
            NormKind::L1 => "l1",
        }
    }
}

impl std::str::FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sup" => Ok(NormKind::Sup),
            "wasserstein_seminorm" | "wasserstein" => Ok(NormKind::WassersteinSeminorm),
            "l1" => Ok(NormKind::L1),
            other => Err(Error::Invalid(format!("unknown norm '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    A0,
    A1,
    U,
}

/// `P₀f = (f − π₀(f)) 1_{Z₊}`.
///
/// The result has a constant tail with an explicit zero at `−1`, so it reads
/// zero on the negative integers and `f(∞) − π₀(f)` far to the right.
pub fn p0_project(f: &LatticeFunction, pi0: &SignedLatticeMeasure) -> LatticeFunction {
    let mean = pi0.expect(|j| f.get(j));
    let hi = f.hi().max(0) + i64::from(f.tail() == Tail::Zero);
    let mut values = Vec::with_capacity(hi as usize + 2);
    values.push(0.0);
    values.extend((0..=hi).map(|j| f.get(j) - mean));
    LatticeFunction::new(-1, values, Tail::Constant)
}

/// Default right edge of [`a0_solve`] output.
pub fn default_solve_hi(f: &LatticeFunction, lambda_prime: f64) -> i64 {
    (f.hi() + 1).max((lambda_prime + 10.0 * lambda_prime.sqrt()).ceil() as i64 + 20)
}

/// Solves `λ′g(j+1) − jg(j) = f(j)`, `j ≥ 0`, with `g(0) = 0` and `g ≡ 0` on
/// the negative integers, for a `Po(λ′)`-centred `f`.
pub fn a0_solve(f: &LatticeFunction, lambda_prime: f64) -> Result<LatticeFunction> {
    a0_solve_window(f, lambda_prime, default_solve_hi(f, lambda_prime))
}

/// As [`a0_solve`], returning `g` on `[−1, hi]`.
pub fn a0_solve_window(f: &LatticeFunction, lambda_prime: f64, hi: i64) -> Result<LatticeFunction> {
    if !(lambda_prime > 0.0) || !lambda_prime.is_finite() {
        return Err(Error::Invalid(format!("lambda' must be positive, got {lambda_prime}")));
    }
    let pi0 = poisson_pmf(lambda_prime, DEFAULT_TAIL_TOL)?;
    let mean = pi0.expect(|j| f.get(j));
    let scale = sup_on(f, 0, f.hi().max(0) + 1).max(1.0);
    if mean.abs() > 1e-8 * scale {
        return Err(Error::NotCentered(mean));
    }
    solve_centered(f, lambda_prime, hi)
}

// Σ_{m≥1} Π_{i=1}^m λ′/(J+i)
fn ratio_tail(lambda_prime: f64, big_j: i64) -> f64 {
    let mut t = 1.0;
    let mut sum = 0.0;
    let mut i = 1i64;
    loop {
        t *= lambda_prime / (big_j + i) as f64;
        sum += t;
        if (big_j + i) as f64 > lambda_prime && t <= 1e-18 * sum {
            break;
        }
        if t == 0.0 || i > 10_000_000 {
            break;
        }
        i += 1;
    }
    sum
}

fn solve_centered(f: &LatticeFunction, lambda_prime: f64, hi: i64) -> Result<LatticeFunction> {
    if hi < f.hi() + 1 || hi < 1 {
        return Err(Error::WindowTooSmall(format!(
            "solution window ends at {hi} but f is supported up to {}",
            f.hi()
        )));
    }
    let top = hi - 1;
    let cross = (lambda_prime.ceil() as i64).min(top);
    // values[k] = g(k − 1)
    let mut g = vec![0.0; hi as usize + 2];
    for j in 0..cross {
        let gj = g[j as usize + 1];
        g[j as usize + 2] = (f.get(j) + j as f64 * gj) / lambda_prime;
    }
    // S(j) = Σ_{k>j} f(k) π(k)/π(j), g(j+1) = −S(j)/λ′; f is constant from `hi` on.
    let mut s = f.get(hi) * ratio_tail(lambda_prime, top);
    g[top as usize + 2] = -s / lambda_prime;
    let mut j = top - 1;
    while j >= cross {
        s = lambda_prime / (j + 1) as f64 * (f.get(j + 1) + s);
        g[j as usize + 2] = -s / lambda_prime;
        j -= 1;
    }
    Ok(LatticeFunction::new(-1, g, Tail::Constant))
}

fn largest_positive_jump(spec: &CompoundPoissonSpec) -> i64 {
    spec.max_jump().max(1)
}

/// Pointwise `A₀g`, `A₁g` or `Ug` on `[g.lo, g.hi − max(1, max jump)]`.
/// Reads to the left of `g`'s window follow its tail convention.
pub fn apply_operator(
    kind: OperatorKind,
    g: &LatticeFunction,
    spec: &CompoundPoissonSpec,
) -> Result<LatticeFunction> {
    let lplus = largest_positive_jump(spec);
    let hi = g.hi() - lplus;
    if hi < g.lo() {
        return Err(Error::WindowUnderflow {
            needed: g.lo() + lplus,
            available: g.hi(),
        });
    }
    apply_on(kind, g, spec, g.lo(), hi)
}

fn apply_on(
    kind: OperatorKind,
    g: &LatticeFunction,
    spec: &CompoundPoissonSpec,
    lo: i64,
    hi: i64,
) -> Result<LatticeFunction> {
    let lambda = spec.lambda();
    let lp = spec.poisson_mean();
    let weights: Vec<(i64, f64)> = spec
        .mu()
        .iter()
        .map(|(&l, &m)| (l, lambda * l as f64 * m))
        .collect();
    let values = (lo..=hi)
        .map(|j| {
            let jf = j as f64;
            match kind {
                OperatorKind::A0 => lp * g.get(j + 1) - jf * g.get(j),
                OperatorKind::A1 => {
                    weights.iter().map(|&(l, w)| w * g.get(j + l)).sum::<f64>() - jf * g.get(j)
                }
                OperatorKind::U => {
                    let g1 = g.get(j + 1);
                    weights.iter().map(|&(l, w)| w * (g.get(j + l) - g1)).sum()
                }
            }
        })
        .collect();
    Ok(LatticeFunction::new(lo, values, Tail::Constant))
}

/// `2m′₂/m₁`, a bound on `‖UA₀⁻¹P₀‖` in each of the three norms.
pub fn gamma_upper(spec: &CompoundPoissonSpec, _norm: NormKind) -> f64 {
    2.0 * spec.m2_abs() / spec.m1()
}

/// The constant `A` in `‖A₀⁻¹P₀f‖_G ≤ A‖f‖` for the matching magic-factor line.
pub fn magic_constant(lambda_prime: f64, norm: NormKind) -> f64 {
    match norm {
        NormKind::Sup | NormKind::L1 => 2.0 / lambda_prime,
        NormKind::WassersteinSeminorm => 1.15 / lambda_prime.sqrt(),
    }
}

/// Output of [`neumann_solve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeumannSolution {
    /// `Bf` on `[−1, hi]`.
    pub g: LatticeFunction,
    /// `UBf` on the same window.
    pub ubf: LatticeFunction,
    pub terms: usize,
    /// Certified contraction constant used for termination.
    pub gamma: f64,
    /// Sup norm of the last computed term.
    pub last_term: f64,
}

/// `g = Bf` and `UBf`, summed until the sup norm of the current term is at
/// most `tol(1 − γ)`.
pub fn neumann_solve(
    f: &LatticeFunction,
    spec: &CompoundPoissonSpec,
    tol: f64,
    max_terms: usize,
) -> Result<NeumannSolution> {
    let gamma = gamma_upper(spec, NormKind::Sup);
    if gamma >= 1.0 {
        return Err(Error::NoContraction(gamma));
    }
    if !(tol > 0.0) {
        return Err(Error::Invalid("tolerance must be positive".into()));
    }
    let lp = spec.poisson_mean();
    let pi0 = poisson_pmf(lp, DEFAULT_TAIL_TOL)?;
    let lplus = largest_positive_jump(spec);
    let target = tol * (1.0 - gamma);

    let fnorm = sup_on(f, 0, f.hi().max(0) + 1).max(f64::MIN_POSITIVE);
    let expected = if gamma == 0.0 || fnorm <= target {
        1
    } else {
        ((target / fnorm).ln() / gamma.ln()).ceil().max(0.0) as usize + 5
    }
    .min(max_terms);
    let eval_hi = f.hi().max(0) + (lp + 10.0 * lp.sqrt()).ceil() as i64 + 20;
    // Each U application reads `lplus` sites ahead; the pad keeps the
    // constant-tail approximation at the far edge away from `eval_hi`.
    let work_hi = eval_hi
        + (lplus + 4) * (expected as i64 + 5)
        + (4.0 * lp.sqrt()).ceil() as i64
        + 40;

    let n = eval_hi as usize + 2;
    let mut g_sum = vec![0.0; n];
    let mut ubf_sum = vec![0.0; n];
    let mut fk = f.clone();
    let mut sign = 1.0;
    for k in 0..max_terms {
        let pf = p0_project(&fk, &pi0);
        let h = solve_centered(&pf, lp, work_hi + lplus)?;
        let next = apply_on(OperatorKind::U, &h, spec, -1, work_hi)?;
        for (idx, slot) in g_sum.iter_mut().enumerate() {
            *slot += sign * h.get(idx as i64 - 1);
        }
        for (idx, slot) in ubf_sum.iter_mut().enumerate() {
            *slot += sign * next.get(idx as i64 - 1);
        }
        let term = sup_on(&next, 0, work_hi);
        if term <= target {
            return Ok(NeumannSolution {
                g: LatticeFunction::new(-1, g_sum, Tail::Constant),
                ubf: LatticeFunction::new(-1, ubf_sum, Tail::Constant),
                terms: k + 1,
                gamma,
                last_term: term,
            });
        }
        fk = next;
        sign = -sign;
    }
    Err(Error::NonConvergence(max_terms))
}

/// `Bf` alone; see [`neumann_solve`].
pub fn neumann_b(
    f: &LatticeFunction,
    spec: &CompoundPoissonSpec,
    tol: f64,
    max_terms: usize,
) -> Result<LatticeFunction> {
    neumann_solve(f, spec, tol, max_terms).map(|s| s.g)
}

/// Random test function of unit norm for probe `index`.
///
/// Families cycle with the index: point masses or ramps, half-lines or
/// tents, and dense random functions, supported in `[0, width]`.
pub fn probe_function(norm: NormKind, width: i64, index: usize, rng: &mut ChaCha8Rng) -> LatticeFunction {
    let width = width.max(1);
    let k = rng.gen_range(0..=width);
    let f = match (norm, index % 3) {
        (NormKind::Sup, 0) | (NormKind::L1, 0) => LatticeFunction::indicator(k),
        (NormKind::Sup, 1) => LatticeFunction::from_fn(0, k, Tail::Zero, |_| 1.0),
        (NormKind::L1, 1) => {
            let k2 = rng.gen_range(0..=width);
            let s: f64 = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            LatticeFunction::from_fn(0, width, Tail::Zero, |j| {
                f64::from(j == k) + s * f64::from(j == k2)
            })
        }
        (NormKind::WassersteinSeminorm, 0) => {
            LatticeFunction::from_fn(0, k, Tail::Constant, |j| j as f64)
        }
        (NormKind::WassersteinSeminorm, 1) => {
            let r = rng.gen_range(1..=width) as f64;
            LatticeFunction::from_fn(k - r as i64, k + r as i64, Tail::Zero, |j| {
                r - (j - k).abs() as f64
            })
        }
        (NormKind::WassersteinSeminorm, _) => {
            let mut acc = 0.0;
            let vals = (0..=width)
                .map(|_| {
                    acc += rng.gen_range(-1.0..=1.0);
                    acc
                })
                .collect();
            LatticeFunction::new(0, vals, Tail::Constant)
        }
        _ => {
            let vals = (0..=width).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            LatticeFunction::new(0, vals, Tail::Zero)
        }
    };
    let norm_value = f.norm(norm);
    if norm_value > 0.0 && norm_value.is_finite() {
        f.scaled(1.0 / norm_value)
    } else {
        LatticeFunction::indicator(k)
    }
}

/// Per-probe generator: `seed` selects the key, the probe index the stream.
pub fn probe_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn operator_norm_on(v: &LatticeFunction, norm: NormKind, hi: i64) -> f64 {
    match norm {
        NormKind::Sup => sup_on(v, 0, hi),
        NormKind::WassersteinSeminorm => diff_sup(v, 0, hi),
        NormKind::L1 => (0..=hi).map(|j| v.get(j).abs()).sum(),
    }
}

/// Seeded lower estimate of `‖UA₀⁻¹P₀‖` over `probes` unit-norm test functions.
/// Norms of the image are taken on `Z₊` over a finite window, which can only
/// underestimate.
pub fn gamma_empirical(
    spec: &CompoundPoissonSpec,
    norm: NormKind,
    probes: usize,
    seed: u64,
) -> Result<f64> {
    if probes == 0 {
        return Err(Error::Invalid("at least one probe is required".into()));
    }
    if spec.mu().len() == 1 && spec.mu_at(1) != 0.0 {
        return Ok(0.0);
    }
    let lp = spec.poisson_mean();
    let pi0 = poisson_pmf(lp, DEFAULT_TAIL_TOL)?;
    let lplus = largest_positive_jump(spec);
    let width = (lp + 6.0 * lp.sqrt()).ceil() as i64 + 10;
    let pad = if norm == NormKind::L1 { 4000 } else { 60 };
    let solve_hi = width + (10.0 * lp.sqrt()).ceil() as i64 + pad + lplus;
    let eval_hi = solve_hi - lplus;
    let ratios: Result<Vec<f64>> = (0..probes)
        .into_par_iter()
        .map(|i| {
            let mut rng = probe_rng(seed, i);
            let f = probe_function(norm, width, i, &mut rng);
            let fnorm = f.norm(norm);
            let pf = p0_project(&f, &pi0);
            let g = solve_centered(&pf, lp, solve_hi.max(pf.hi() + 1))?;
            let v = apply_on(OperatorKind::U, &g, spec, -1, eval_hi)?;
            Ok(operator_norm_on(&v, norm, eval_hi) / fnorm)
        })
        .collect();
    Ok(ratios?.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub gamma_upper: f64,
    pub gamma_empirical: f64,
    pub contraction_ok: bool,
    #[serde(rename = "A")]
    pub a: f64,
    pub norm: NormKind,
}

pub fn perturbation_report(
    spec: &CompoundPoissonSpec,
    norm: NormKind,
    probes: usize,
    seed: u64,
) -> Result<PerturbationReport> {
    let gamma_upper = gamma_upper(spec, norm);
    Ok(PerturbationReport {
        gamma_upper,
        gamma_empirical: gamma_empirical(spec, norm, probes, seed)?,
        contraction_ok: gamma_upper < 1.0,
        a: magic_constant(spec.poisson_mean(), norm),
        norm,
    })
}

/// Perturbation of one compound Poisson law `CP(λ⁰, μ⁰)` into another
/// with the same mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpToCpPerturbation {
    pub spec0: CompoundPoissonSpec,
    pub spec1: CompoundPoissonSpec,
    /// `δ = μ₁⁰ − 2μ₂⁰`.
    pub delta: f64,
    pub c1: f64,
    pub c2: f64,
    /// `E = ½Σ_l l|λ¹μ¹_l − λ⁰μ⁰_l|`.
    pub e: f64,
    pub rho: Option<SignedLatticeMeasure>,
    pub sigma: Option<SignedLatticeMeasure>,
    pub theta: f64,
    pub gamma: f64,
    /// `δλ⁰ ≤ 1/4`, where `c₁` is no longer positive.
    pub low_intensity: bool,
}

impl CpToCpPerturbation {
    pub fn new(spec0: CompoundPoissonSpec, spec1: CompoundPoissonSpec) -> Result<Self> {
        if !spec0.is_one_sided() || spec0.mu().values().any(|m| *m < 0.0) {
            return Err(Error::Invariant("mu0 must be a nonnegative law on l >= 1".into()));
        }
        if !spec1.is_one_sided() {
            return Err(Error::Invariant("mu1 must be supported on l >= 1".into()));
        }
        let top = spec0.max_jump();
        for j in 1..=top {
            let (a, b) = (j as f64 * spec0.mu_at(j), (j + 1) as f64 * spec0.mu_at(j + 1));
            if a < b {
                return Err(Error::Invariant(format!(
                    "j mu_j >= (j+1) mu_(j+1) fails at j = {j}"
                )));
            }
        }
        let delta = spec0.mu_at(1) - 2.0 * spec0.mu_at(2);
        if !(delta > 0.0) {
            return Err(Error::Invariant(format!("delta = {delta} must be positive")));
        }
        let (mean0, mean1) = (spec0.poisson_mean(), spec1.poisson_mean());
        if (mean0 - mean1).abs() > 1e-10 * mean0.max(1.0) {
            return Err(Error::Invariant(format!("means differ: {mean0} vs {mean1}")));
        }
        let dl = delta * spec0.lambda();
        let c1 = 4.0 - 2.0 / dl.sqrt();
        let c2 = 0.5 / dl + 2.0 * (2.0 * dl).ln().max(0.0);

        let top = top.max(spec1.max_jump());
        let signed: Vec<f64> = (1..=top)
            .map(|l| {
                l as f64 * (spec1.lambda() * spec1.mu_at(l) - spec0.lambda() * spec0.mu_at(l))
            })
            .collect();
        let e = 0.5 * signed.iter().map(|d| d.abs()).sum::<f64>();
        let (rho, sigma, theta) = if e == 0.0 {
            (None, None, 0.0)
        } else {
            let rho = SignedLatticeMeasure::from_raw(1, signed.iter().map(|d| d.max(0.0) / e).collect());
            let sigma =
                SignedLatticeMeasure::from_raw(1, signed.iter().map(|d| (-d).max(0.0) / e).collect());
            let theta = e * distance(&rho, &sigma, MetricKind::Wasserstein)?;
            (Some(rho), Some(sigma), theta)
        };
        Ok(Self {
            spec0,
            spec1,
            delta,
            c1,
            c2,
            e,
            rho,
            sigma,
            theta,
            gamma: c2 * theta / dl,
            low_intensity: dl <= 0.25,
        })
    }
}

/// `γ = c₂(λ⁰)θ/(δλ⁰)`.
pub fn gamma_cp_to_cp(p: &CpToCpPerturbation) -> f64 {
    p.gamma
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorLine {
    pub name: String,
    pub achieved: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteinFactorReport {
    pub lambda_prime: f64,
    pub norm: NormKind,
    pub f_norm: f64,
    pub lines: Vec<FactorLine>,
    pub pass: bool,
}

/// Evaluates `g = A₀⁻¹P₀f` against the Poisson magic factors for `norm`.
/// Difference norms of `g` are taken over `j ≥ 1`.
pub fn stein_factor_check(
    lambda_prime: f64,
    f: &LatticeFunction,
    norm: NormKind,
) -> Result<SteinFactorReport> {
    let pi0 = poisson_pmf(lambda_prime, DEFAULT_TAIL_TOL)?;
    let pad = if norm == NormKind::L1 { 4000 } else { 0 };
    let pf = p0_project(f, &pi0);
    let hi = default_solve_hi(&pf, lambda_prime) + pad;
    let g = solve_centered(&pf, lambda_prime, hi)?;
    let fnorm = f.norm(norm);
    let lp = lambda_prime;
    let raw: Vec<(&str, f64, f64)> = match norm {
        NormKind::Sup => vec![("sup|dg|", diff_sup(&g, 1, hi), 2.0 / lp * fnorm)],
        NormKind::WassersteinSeminorm => vec![
            ("sup|g|", sup_on(&g, 0, hi), fnorm),
            ("sup|dg|", diff_sup(&g, 1, hi), 1.15 / lp.sqrt() * fnorm),
            ("sup|d2g|", second_diff_sup(&g, 1, hi), 2.0 / lp * fnorm),
        ],
        NormKind::L1 => vec![
            ("sup|g|", sup_on(&g, 0, hi), fnorm / lp),
            ("sum|dg|", diff_l1(&g, 1, hi), 2.0 / lp * fnorm),
        ],
    };
    let lines: Vec<FactorLine> = raw
        .into_iter()
        .map(|(name, achieved, bound)| FactorLine {
            name: name.to_string(),
            achieved,
            bound,
            pass: achieved <= bound * (1.0 + 1e-9) + 1e-12,
        })
        .collect();
    let pass = lines.iter().all(|l| l.pass);
    Ok(SteinFactorReport {
        lambda_prime,
        norm,
        f_norm: fnorm,
        lines,
        pass,
    })
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::NoContraction(gamma));
    }
    Ok(())
}

/// `d(π, π₁) ≤ (1−γ)⁻¹{Aε + ε′}` with
/// `ε′ = min{2(|π₁|(X₀ᶜ) + π(X₀ᶜ))F, κ(π₁, X₀ᶜ) + κ(π, X₀ᶜ)}`.
#[allow(clippy::too_many_arguments)]
pub fn bound_very_useful(
    a: f64,
    gamma: f64,
    eps: f64,
    pi1_outside: f64,
    pi_outside: f64,
    kappa1: f64,
    kappa: f64,
    big_f: f64,
) -> Result<f64> {
    check_gamma(gamma)?;
    let eps_prime = (2.0 * (pi1_outside + pi_outside) * big_f).min(kappa1 + kappa);
    Ok((a * eps + eps_prime) / (1.0 - gamma))
}

/// `d_H ≤ H{ε₁ + γ_H Aε₂/(1−γ) + ε(π, π₁)/(1−γ)}`.
pub fn bound_k_distance(
    h: f64,
    eps1: f64,
    eps2: f64,
    a: f64,
    gamma: f64,
    gamma_h: f64,
    eps_pi: f64,
) -> Result<f64> {
    check_gamma(gamma)?;
    if !(h > 0.0) {
        return Err(Error::Invalid("H must be positive".into()));
    }
    Ok(h * (eps1 + gamma_h * a * eps2 / (1.0 - gamma) + eps_pi / (1.0 - gamma)))
}

/// `|c(f)| ≤ 2|π₁|(X₀ᶜ)‖f‖∞/(1−γ)`.
pub fn c_bound_mass(pi1_outside: f64, gamma: f64, f_sup: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(2.0 * pi1_outside * f_sup / (1.0 - gamma))
}

/// `|c(f)| ≤ κ(π₁, X₀ᶜ)‖f‖/(1−γ)`.
pub fn c_bound_kappa(kappa1: f64, gamma: f64, f_norm: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(kappa1 * f_norm / (1.0 - gamma))
}

/// `|π(f) − π₁(f)| ≤ |π(A₁Bf)| + min` of the mass and κ corrections.
#[allow(clippy::too_many_arguments)]
pub fn bound_expectation_gap(
    pi_a1bf: f64,
    gamma: f64,
    f_sup: f64,
    f_norm: f64,
    pi1_outside: f64,
    pi_outside: f64,
    kappa1: f64,
    kappa: f64,
) -> Result<f64> {
    check_gamma(gamma)?;
    let by_mass = 2.0 * (pi1_outside + pi_outside) * f_sup;
    let by_kappa = (kappa1 + kappa) * f_norm;
    Ok(pi_a1bf.abs() + by_mass.min(by_kappa) / (1.0 - gamma))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cp(lambda: f64, pairs: &[(i64, f64)]) -> CompoundPoissonSpec {
        CompoundPoissonSpec::from_pairs(lambda, pairs.iter().copied()).unwrap()
    }

    #[test]
    fn p0_of_constant_vanishes() {
        let pi0 = poisson_pmf(3.0, DEFAULT_TAIL_TOL).unwrap();
        let f = LatticeFunction::from_fn(0, 10, Tail::Constant, |_| 2.5);
        let p = p0_project(&f, &pi0);
        assert!(sup_on(&p, -5, 40) < 1e-14);
    }

    #[test]
    fn p0_of_indicator() {
        let pi0 = poisson_pmf(1.0, DEFAULT_TAIL_TOL).unwrap();
        let p = p0_project(&LatticeFunction::indicator(0), &pi0);
        let e = (-1.0f64).exp();
        assert!((p.get(0) - (1.0 - e)).abs() < 1e-15);
        assert!((p.get(7) + e).abs() < 1e-15);
        assert_eq!(p.get(-3), 0.0);
    }

    #[test]
    fn a0_solve_first_step() {
        let pi0 = poisson_pmf(1.0, DEFAULT_TAIL_TOL).unwrap();
        let f = p0_project(&LatticeFunction::indicator(0), &pi0);
        let g = a0_solve(&f, 1.0).unwrap();
        assert!((g.get(1) - 0.632_120_558_828_557_7).abs() < 1e-12);
        assert_eq!(g.get(0), 0.0);
        assert_eq!(g.get(-2), 0.0);
    }

    #[test]
    fn a0_solve_zero() {
        let g = a0_solve(&LatticeFunction::zeros(0, 5), 2.0).unwrap();
        assert!(g.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn a0_solve_rejects_uncentred() {
        assert!(matches!(
            a0_solve(&LatticeFunction::indicator(2), 2.0),
            Err(Error::NotCentered(_))
        ));
    }

    #[test]
    fn a0_solve_window_too_small() {
        let pi0 = poisson_pmf(2.0, DEFAULT_TAIL_TOL).unwrap();
        let f = p0_project(&LatticeFunction::indicator(30), &pi0);
        assert!(matches!(
            a0_solve_window(&f, 2.0, 10),
            Err(Error::WindowTooSmall(_))
        ));
    }

    #[test]
    fn operators_on_constant() {
        let spec = cp(2.0, &[(1, 0.5), (2, 0.25)]);
        let g = LatticeFunction::from_fn(0, 20, Tail::Constant, |_| 1.0);
        let a0 = apply_operator(OperatorKind::A0, &g, &spec).unwrap();
        let lp = spec.poisson_mean();
        for j in 0..=a0.hi() {
            assert!((a0.get(j) - (lp - j as f64)).abs() < 1e-14);
        }
        let u = apply_operator(OperatorKind::U, &g, &spec).unwrap();
        assert!(sup_on(&u, 0, u.hi()) < 1e-15);
    }

    #[test]
    fn u_vanishes_for_unit_jumps() {
        let spec = cp(3.0, &[(1, 1.0)]);
        let g = LatticeFunction::from_fn(0, 20, Tail::Zero, |j| (j as f64).sin());
        let u = apply_operator(OperatorKind::U, &g, &spec).unwrap();
        assert_eq!(sup_on(&u, 0, u.hi()), 0.0);
    }

    #[test]
    fn operator_window_underflow() {
        let spec = cp(3.0, &[(1, 0.5), (3, 0.5)]);
        let g = LatticeFunction::new(0, vec![1.0, 2.0], Tail::Zero);
        assert!(matches!(
            apply_operator(OperatorKind::A1, &g, &spec),
            Err(Error::WindowUnderflow { .. })
        ));
    }

    #[test]
    fn gamma_upper_examples() {
        assert_eq!(gamma_upper(&cp(1.0, &[(1, 1.0)]), NormKind::Sup), 0.0);
        let g = gamma_upper(&cp(1.0, &[(1, 0.8), (2, 0.2)]), NormKind::Sup);
        assert!((g - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn neumann_single_term_for_unit_jumps() {
        let spec = cp(2.5, &[(1, 1.0)]);
        let f = LatticeFunction::indicator(3);
        let sol = neumann_solve(&f, &spec, 1e-12, 50).unwrap();
        assert_eq!(sol.terms, 1);
        let pi0 = poisson_pmf(2.5, DEFAULT_TAIL_TOL).unwrap();
        let direct = a0_solve(&p0_project(&f, &pi0), 2.5).unwrap();
        for j in -1..30 {
            assert!((sol.g.get(j) - direct.get(j)).abs() < 1e-13);
        }
    }

    #[test]
    fn neumann_refuses_without_contraction() {
        let spec = cp(2.0, &[(1, 0.2), (2, 0.8)]);
        assert!(matches!(
            neumann_b(&LatticeFunction::indicator(1), &spec, 1e-8, 100),
            Err(Error::NoContraction(_))
        ));
    }

    #[test]
    fn bound_arithmetic() {
        assert_eq!(bound_very_useful(2.0, 0.0, 0.01, 0.0, 0.0, 0.0, 0.0, 1.0).unwrap(), 0.02);
        assert!((bound_very_useful(2.0, 0.5, 0.01, 0.0, 0.0, 0.0, 0.0, 1.0).unwrap() - 0.04).abs() < 1e-15);
        let v = bound_very_useful(2.0, 0.25, 0.01, 0.001, 0.0, 0.0015, 0.0015, 1.0).unwrap();
        assert!((v - (0.02 + 0.002f64.min(0.003)) / 0.75).abs() < 1e-15);
        assert!(bound_very_useful(2.0, 1.0, 0.01, 0.0, 0.0, 0.0, 0.0, 1.0).is_err());
        let k = bound_k_distance(1.0, 0.01, 0.005, 2.0, 0.5, 0.2, 0.0).unwrap();
        assert!((k - 0.014).abs() < 1e-15);
        assert_eq!(bound_k_distance(1.0, 0.0, 0.0, 2.0, 0.5, 0.2, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn cp_to_cp_identical_specs() {
        let s = cp(10.0, &[(1, 0.7), (2, 0.3)]);
        let p = CpToCpPerturbation::new(s.clone(), s).unwrap();
        assert_eq!(p.e, 0.0);
        assert_eq!(gamma_cp_to_cp(&p), 0.0);
        assert!(p.rho.is_none());
    }

    #[test]
    fn cp_to_cp_rejects_non_monotone() {
        let s0 = cp(10.0, &[(1, 0.4), (2, 0.6)]);
        assert!(matches!(
            CpToCpPerturbation::new(s0.clone(), s0),
            Err(Error::Invariant(_))
        ));
    }

    #[test]
    fn norms_honour_tails() {
        let f = LatticeFunction::new(2, vec![1.0, 3.0], Tail::Zero);
        assert_eq!(f.norm(NormKind::WassersteinSeminorm), 3.0);
        assert_eq!(f.norm(NormKind::L1), 4.0);
        let c = LatticeFunction::new(2, vec![1.0, 3.0], Tail::Constant);
        assert_eq!(c.norm(NormKind::WassersteinSeminorm), 2.0);
        assert!(c.norm(NormKind::L1).is_infinite());
    }
}
