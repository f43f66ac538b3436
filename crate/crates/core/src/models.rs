//! Exact Bernoulli-sum and jump-process models.
//!
//! Covers the Borovkov–Pfeifer pipeline for sums of (possibly dependent)
//! indicators, including the records example `p_i = 1/i`, and the
//! equilibrium of the birth–death chain with fixed upward jumps whose
//! diffusion limit is a jump–diffusion.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distances::{distance, MetricKind};
use crate::error::{Error, Result};
use crate::lattice::{bp_rates, exp_rates, tail_power_sum, FamilyTail, SignedLatticeMeasure};

/// Largest indicator count for which joint tables are enumerated.
pub const MAX_JOINT_N: usize = 20;

/// Exact law of a sum of independent `Be(p_i)` by the one-dimensional DP.
pub fn poisson_binomial_pmf(p: &[f64]) -> Result<SignedLatticeMeasure> {
    if let Some(bad) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::Invalid(format!("probability {bad} outside [0, 1]")));
    }
    let mut pmf = vec![0.0; p.len() + 1];
    pmf[0] = 1.0;
    for (n, &pi) in p.iter().enumerate() {
        for k in (1..=n + 1).rev() {
            pmf[k] = pmf[k] * (1.0 - pi) + pmf[k - 1] * pi;
        }
        pmf[0] *= 1.0 - pi;
    }
    Ok(SignedLatticeMeasure::from_raw(0, pmf))
}

/// Joint law of `n` indicators. Outcome `(x_1, …, x_n)` sits at index
/// `Σ_i x_i 2^{n−i}`, so the first indicator is the most significant bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointTable {
    pub n: usize,
    pub probs: Vec<f64>,
}

impl JointTable {
    pub fn new(n: usize, probs: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("joint table needs n >= 1".into()));
        }
        if n > MAX_JOINT_N {
            return Err(Error::SizeCap(format!("n = {n} exceeds {MAX_JOINT_N}")));
        }
        if probs.len() != 1 << n {
            return Err(Error::Invalid(format!(
                "expected {} probabilities, got {}",
                1usize << n,
                probs.len()
            )));
        }
        if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::Invalid("probabilities must be nonnegative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid(format!("table sums to {total}")));
        }
        Ok(Self { n, probs })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: JointTable =
            serde_json::from_str(text).map_err(|e| Error::Invalid(format!("joint table: {e}")))?;
        Self::new(raw.n, raw.probs)
    }

    /// Product table of independent indicators.
    pub fn independent(p: &[f64]) -> Result<Self> {
        let n = p.len();
        if n > MAX_JOINT_N {
            return Err(Error::SizeCap(format!("n = {n} exceeds {MAX_JOINT_N}")));
        }
        let probs = (0..1usize << n)
            .map(|idx| {
                (0..n)
                    .map(|i| if bit(idx, n, i) { p[i] } else { 1.0 - p[i] })
                    .product()
            })
            .collect();
        Self::new(n, probs)
    }

    /// Stationary two-state Markov chain of indicators with `P(I = 1) = p`
    /// and `P(I_{i+1} = 1 | I_i = 1) = stay`.
    pub fn markov_chain(n: usize, p: f64, stay: f64) -> Result<Self> {
        if !(0.0 < p && p < 1.0) || !(0.0..=1.0).contains(&stay) {
            return Err(Error::Invalid("need 0 < p < 1 and 0 <= stay <= 1".into()));
        }
        let up = p * (1.0 - stay) / (1.0 - p);
        if up > 1.0 {
            return Err(Error::Invalid(format!("P(1 | 0) = {up} exceeds 1")));
        }
        if n > MAX_JOINT_N {
            return Err(Error::SizeCap(format!("n = {n} exceeds {MAX_JOINT_N}")));
        }
        let probs = (0..1usize << n)
            .map(|idx| {
                let mut pr = if bit(idx, n, 0) { p } else { 1.0 - p };
                for i in 1..n {
                    let from_one = bit(idx, n, i - 1);
                    let q1 = if from_one { stay } else { up };
                    pr *= if bit(idx, n, i) { q1 } else { 1.0 - q1 };
                }
                pr
            })
            .collect();
        Self::new(n, probs)
    }

    /// `P(I_i = 1)` for zero-based `i`.
    pub fn marginal(&self, i: usize) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|(idx, _)| bit(*idx, self.n, i))
            .map(|(_, p)| p)
            .sum()
    }

    pub fn marginals(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.marginal(i)).collect()
    }
}

// Value of the zero-based indicator `i` in outcome `idx`.
fn bit(idx: usize, n: usize, i: usize) -> bool {
    (idx >> (n - 1 - i)) & 1 == 1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BernoulliSumModel {
    Independent { p: Vec<f64> },
    Dependent { joint: JointTable },
    /// `p_i = 1/i` for `s ≤ i ≤ n`, continued analytically beyond `n`.
    Records { n: usize, s: usize },
}

impl BernoulliSumModel {
    pub fn records(n: usize, s: usize) -> Result<Self> {
        if s < 4 {
            return Err(Error::Precondition(format!("records need s >= 4, got {s}")));
        }
        if n < s {
            return Err(Error::Invalid(format!("n = {n} is below s = {s}")));
        }
        Ok(Self::Records { n, s })
    }

    /// Indicator probabilities in index order.
    pub fn probs(&self) -> Vec<f64> {
        match self {
            Self::Independent { p } => p.clone(),
            Self::Dependent { joint } => joint.marginals(),
            Self::Records { n, s } => (*s..=*n).map(|i| 1.0 / i as f64).collect(),
        }
    }

    /// Index of the first indicator.
    pub fn first_index(&self) -> usize {
        match self {
            Self::Records { s, .. } => *s,
            _ => 1,
        }
    }

    pub fn family_tail(&self) -> FamilyTail {
        match self {
            Self::Records { .. } => FamilyTail::Records,
            _ => FamilyTail::Finite,
        }
    }

    /// `λ = Σ p_i`.
    pub fn lambda(&self) -> f64 {
        self.probs().iter().sum()
    }

    /// `sup_k P(W = k)` or its bound: exact for dependent tables, otherwise
    /// `(4Σ p_i q_i)^{−1/2}`.
    pub fn sup_w(&self) -> Result<f64> {
        match self {
            Self::Dependent { .. } => Ok(exact_sum_pmf(self)?.max_abs_weight()),
            _ => {
                let v: f64 = self.probs().iter().map(|p| p * (1.0 - p)).sum();
                Ok((4.0 * v).powf(-0.5).min(1.0))
            }
        }
    }

    fn check_bp_range(&self) -> Result<Vec<f64>> {
        let p = self.probs();
        if let Some((k, pi)) = p.iter().enumerate().find(|(_, pi)| **pi >= 1.0 / 3.0) {
            return Err(Error::Precondition(format!(
                "p_{} = {pi} must be below 1/3",
                k + self.first_index()
            )));
        }
        Ok(p)
    }
}

/// Exact law of `W = Σ I_i`.
pub fn exact_sum_pmf(model: &BernoulliSumModel) -> Result<SignedLatticeMeasure> {
    match model {
        BernoulliSumModel::Dependent { joint } => {
            let mut pmf = vec![0.0; joint.n + 1];
            for (idx, p) in joint.probs.iter().enumerate() {
                pmf[idx.count_ones() as usize] += p;
            }
            Ok(SignedLatticeMeasure::from_raw(0, pmf))
        }
        other => poisson_binomial_pmf(&other.probs()),
    }
}

/// `E|W̃⁽ⁱ⁾ − W⁽ⁱ⁾|` for one indicator under the two reference couplings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingGap {
    /// One-based indicator index.
    pub index: usize,
    pub p: f64,
    /// `Σ_k |F_{W̃}(k) − F_{W⁽ⁱ⁾}(k)|`, the smallest value over all couplings.
    pub minimal: f64,
    /// Value when `W̃⁽ⁱ⁾` and `W⁽ⁱ⁾` are independent.
    pub independent: f64,
}

/// `η₁ = Σ_i p_i/(1 − 2p_i) E|W̃⁽ⁱ⁾ − W⁽ⁱ⁾|` under both couplings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eta1 {
    pub minimal: f64,
    pub independent: f64,
    pub terms: Vec<CouplingGap>,
}

pub fn eta1_terms(joint: &JointTable) -> Result<Vec<CouplingGap>> {
    let n = joint.n;
    (0..n)
        .map(|i| {
            let mut w_minus = vec![0.0; n];
            let mut tilde = vec![0.0; n];
            let mut p1 = 0.0;
            for (idx, &pr) in joint.probs.iter().enumerate() {
                let on = bit(idx, n, i);
                let rest = idx.count_ones() as usize - usize::from(on);
                w_minus[rest] += pr;
                if on {
                    tilde[rest] += pr;
                    p1 += pr;
                }
            }
            if p1 <= 0.0 {
                return Err(Error::ZeroMarginal(i + 1));
            }
            tilde.iter_mut().for_each(|t| *t /= p1);
            let mut minimal = 0.0;
            let (mut fa, mut fb) = (0.0, 0.0);
            for k in 0..n {
                fa += tilde[k];
                fb += w_minus[k];
                minimal += (fa - fb).abs();
            }
            let mut independent = 0.0;
            for (a, pa) in tilde.iter().enumerate() {
                for (b, pb) in w_minus.iter().enumerate() {
                    independent += pa * pb * (a as f64 - b as f64).abs();
                }
            }
            Ok(CouplingGap {
                index: i + 1,
                p: p1,
                minimal,
                independent,
            })
        })
        .collect()
}

pub fn eta1(model: &BernoulliSumModel) -> Result<Eta1> {
    let joint = match model {
        BernoulliSumModel::Dependent { joint } => joint,
        _ => {
            return Ok(Eta1 {
                minimal: 0.0,
                independent: 0.0,
                terms: Vec::new(),
            })
        }
    };
    let terms = eta1_terms(joint)?;
    let weight = |t: &CouplingGap| t.p / (1.0 - 2.0 * t.p);
    Ok(Eta1 {
        minimal: terms.iter().map(|t| weight(t) * t.minimal).sum(),
        independent: terms.iter().map(|t| weight(t) * t.independent).sum(),
        terms,
    })
}

/// `T = Σ_{i>n} p_i²(1 − 2p_i)^{−2}`, upper end of its bracket for records.
pub fn tail_sum(model: &BernoulliSumModel) -> f64 {
    match model {
        // p_i²/(1 − 2p_i)² = (i − 2)^{−2}
        BernoulliSumModel::Records { n, .. } => {
            let (mid, hw) = tail_power_sum(*n as u64 - 1, 2);
            mid + hw
        }
        _ => 0.0,
    }
}

/// `θ₁ = λ⁻¹ Σ_i p_i²(1 − 2p_i)^{−2}`, the sum running over every indicator
/// of the family including any analytic tail.
pub fn theta1(model: &BernoulliSumModel) -> Result<f64> {
    let p = model.check_bp_range()?;
    let lambda: f64 = p.iter().sum();
    if lambda <= 0.0 {
        return Ok(0.0);
    }
    let sum = match model {
        BernoulliSumModel::Records { s, .. } => {
            let (mid, hw) = tail_power_sum(*s as u64 - 2, 2);
            mid + hw
        }
        _ => p.iter().map(|pi| (pi / (1.0 - 2.0 * pi)).powi(2)).sum(),
    };
    Ok(sum / lambda)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BpBounds {
    pub lambda: f64,
    pub theta1: f64,
    pub tail: f64,
    /// The η₁ value entering the bounds (independent coupling).
    pub eta1: f64,
    pub sup_w: f64,
    /// Total variation.
    pub tv: f64,
    /// Point metric.
    pub point: f64,
    /// Wasserstein.
    pub wasserstein: f64,
}

/// Error bounds for `Po(λ) ∗ BP`; `sup_w` bounds `sup_k P(W = k)`.
pub fn bp_error_bounds(model: &BernoulliSumModel, sup_w: f64) -> Result<BpBounds> {
    let theta1 = theta1(model)?;
    if theta1 >= 0.5 {
        return Err(Error::Precondition(format!("theta1 = {theta1} is not below 1/2")));
    }
    let lambda = model.lambda();
    let tail = tail_sum(model);
    let eta = eta1(model)?.independent;
    let denom = 1.0 - 2.0 * theta1;
    Ok(BpBounds {
        lambda,
        theta1,
        tail,
        eta1: eta,
        sup_w,
        tv: 2.0 / (lambda * denom) * (tail + eta),
        point: 2.0 / (lambda * denom) * (sup_w * tail + eta),
        wasserstein: 1.15 / (lambda.sqrt() * denom) * (tail + eta),
    })
}

/// `Po(λ) ∗ BP` for the model, with `L` chosen automatically unless given.
pub fn bp_approximation(model: &BernoulliSumModel, max_jump: Option<usize>) -> Result<(SignedLatticeMeasure, f64)> {
    let p = model.check_bp_range()?;
    let rates = bp_rates(&p, model.first_index(), model.family_tail(), max_jump)?;
    let tol = 1e-16;
    let m = exp_rates(&rates.rates, tol)?;
    Ok((m, rates.rates.truncation_error()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordsRow {
    pub n: usize,
    pub metric: MetricKind,
    pub actual: f64,
    pub bound: Option<f64>,
    pub ratio: Option<f64>,
    pub theta1: f64,
    pub lambda: f64,
}

/// Exact distances between `L(W_s)` and `Po(λ) ∗ BP_s` for the records family,
/// against the matching bound. Kolmogorov rows are bounded by half the
/// total-variation bound. Bounds are omitted when `θ₁ ≥ 1/2`.
pub fn records_experiment(
    n: usize,
    s: usize,
    metrics: &BTreeSet<MetricKind>,
    max_jump: Option<usize>,
) -> Result<Vec<RecordsRow>> {
    let model = BernoulliSumModel::records(n, s)?;
    let exact = exact_sum_pmf(&model)?;
    let (approx, _) = bp_approximation(&model, max_jump)?;
    let theta = theta1(&model)?;
    let lambda = model.lambda();
    let bounds = if theta < 0.5 {
        Some(bp_error_bounds(&model, model.sup_w()?)?)
    } else {
        None
    };
    metrics
        .iter()
        .map(|&metric| {
            let actual = distance(&exact, &approx, metric)?;
            let bound = bounds.as_ref().map(|b| match metric {
                MetricKind::TotalVariation => b.tv,
                MetricKind::Point => b.point,
                MetricKind::Wasserstein => b.wasserstein,
                MetricKind::Kolmogorov => 0.5 * b.tv,
            });
            Ok(RecordsRow {
                n,
                metric,
                actual,
                bound,
                ratio: bound.map(|b| actual / b),
                theta1: theta,
                lambda,
            })
        })
        .collect()
}

/// Runs [`records_experiment`] over a grid of `n`, rows sorted by `(n, metric)`.
pub fn records_grid(
    ns: &[usize],
    s: usize,
    metrics: &BTreeSet<MetricKind>,
    max_jump: Option<usize>,
) -> Result<Vec<RecordsRow>> {
    let cells: Result<Vec<Vec<RecordsRow>>> = ns
        .par_iter()
        .map(|&n| records_experiment(n, s, metrics, max_jump))
        .collect();
    let mut rows: Vec<RecordsRow> = cells?.into_iter().flatten().collect();
    rows.sort_by(|a, b| (a.n, a.metric).cmp(&(b.n, b.metric)));
    Ok(rows)
}

/// Birth–death chain on `Z₊` with births at rate `N`, deaths at rate `j` and
/// extra upward jumps of `⌊z√N⌋` at rate `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkovJumpModel {
    pub n: u64,
    pub z: f64,
    pub alpha: f64,
}

impl MarkovJumpModel {
    pub fn new(n: u64, z: f64, alpha: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("N must be positive".into()));
        }
        if !(z >= 0.0) || !(alpha >= 0.0) || !z.is_finite() || !alpha.is_finite() {
            return Err(Error::Invalid("z and alpha must be nonnegative".into()));
        }
        Ok(Self { n, z, alpha })
    }

    /// `η_N = N^{−1/2}`.
    pub fn eta(&self) -> f64 {
        (self.n as f64).powf(-0.5)
    }

    /// `⌊z√N⌋`.
    pub fn jump(&self) -> usize {
        (self.z * (self.n as f64).sqrt()).floor() as usize
    }

    pub fn mean_bound(&self) -> f64 {
        self.alpha * self.z
    }

    /// `1 + ½αzη_N + α²z² + ½αz²`.
    pub fn second_moment_bound(&self) -> f64 {
        let (a, z) = (self.alpha, self.z);
        1.0 + 0.5 * a * z * self.eta() + a * a * z * z + 0.5 * a * z * z
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovEquilibrium {
    pub model: MarkovJumpModel,
    pub jump: usize,
    pub eta: f64,
    pub truncation: usize,
    /// Stationary law of `X_N` on `{0, …, truncation}`; `W_N = (X_N − N)η_N`.
    pub pmf: SignedLatticeMeasure,
    pub tail_mass: f64,
    pub balance_residual: f64,
    pub mean_w: f64,
    pub second_moment_w: f64,
    pub mean_abs_w: f64,
}

impl MarkovEquilibrium {
    /// Lattice point `w_{jN} = (j − N)η_N`.
    pub fn w_at(&self, j: i64) -> f64 {
        (j as f64 - self.model.n as f64) * self.eta
    }
}

// Unnormalised stationary weights on {0..len−1} from the cut equations
// (k+1)π(k+1) = Nπ(k) + α Σ_{j=k−J+1}^{k} π(j).
fn cut_recursion(model: &MarkovJumpModel, len: usize) -> Vec<f64> {
    let big_n = model.n as f64;
    let jump = model.jump();
    let mut pi = vec![0.0; len];
    pi[0] = 1.0;
    let mut window = 0.0;
    for k in 0..len - 1 {
        if jump > 0 {
            window += pi[k];
            if k >= jump {
                window -= pi[k - jump];
            }
        }
        pi[k + 1] = (big_n * pi[k] + model.alpha * window) / (k + 1) as f64;
        if pi[k + 1] > 1e250 {
            pi.iter_mut().for_each(|v| *v *= 1e-250);
            window *= 1e-250;
        }
    }
    pi
}

/// Stationary distribution of the chain on `{0, …, 2M}`, where `M` is the
/// first size for which states `M+1..2M` carry at most `1e−10` of the mass.
/// `truncation` fixes `M`; by default it starts at `N + 8√N + 3⌊z√N⌋` and
/// doubles.
pub fn markov_jump_equilibrium(
    model: &MarkovJumpModel,
    truncation: Option<usize>,
) -> Result<MarkovEquilibrium> {
    let big_n = model.n as f64;
    let jump = model.jump();
    let mut m = truncation.unwrap_or((big_n + 8.0 * big_n.sqrt()).ceil() as usize + 3 * jump);
    m = m.max(4);
    let (pi, tail_mass) = loop {
        if 2 * m + 2 > crate::lattice::WINDOW_CAP {
            return Err(Error::Divergence {
                tol: 1e-10,
                cap: crate::lattice::WINDOW_CAP,
            });
        }
        let raw = cut_recursion(model, 2 * m + 1);
        let total: f64 = raw.iter().sum();
        let tail: f64 = raw[m + 1..].iter().sum::<f64>() / total;
        if tail <= 1e-10 {
            m *= 2;
            break (raw.iter().map(|v| v / total).collect::<Vec<f64>>(), tail);
        }
        if truncation.is_some() {
            return Err(Error::Precondition(format!(
                "truncation {m} leaves tail mass {tail:e}"
            )));
        }
        m *= 2;
    };

    let at = |k: i64| -> f64 {
        if k < 0 || k as usize > m {
            0.0
        } else {
            pi[k as usize]
        }
    };
    // global balance at states whose outgoing moves stay inside the window
    let mut residual = 0.0_f64;
    for k in 0..m.saturating_sub(jump.max(1)) {
        let ki = k as i64;
        let kf = k as f64;
        let (inflow, outflow) = if jump > 0 {
            (
                big_n * at(ki - 1) + (kf + 1.0) * at(ki + 1) + model.alpha * at(ki - jump as i64),
                (big_n + kf + model.alpha) * at(ki),
            )
        } else {
            (big_n * at(ki - 1) + (kf + 1.0) * at(ki + 1), (big_n + kf) * at(ki))
        };
        residual = residual.max((inflow - outflow).abs());
    }
    if residual > 1e-10 {
        return Err(Error::Invariant(format!("balance residual {residual:e}")));
    }

    let eta = model.eta();
    let w = |k: usize| (k as f64 - big_n) * eta;
    let mean_w: f64 = pi.iter().enumerate().map(|(k, p)| p * w(k)).sum();
    let second_moment_w: f64 = pi.iter().enumerate().map(|(k, p)| p * w(k) * w(k)).sum();
    let mean_abs_w: f64 = pi.iter().enumerate().map(|(k, p)| p * w(k).abs()).sum();
    Ok(MarkovEquilibrium {
        model: *model,
        jump,
        eta,
        truncation: m,
        pmf: SignedLatticeMeasure::from_raw(0, pi),
        tail_mass,
        balance_residual: residual,
        mean_w,
        second_moment_w,
        mean_abs_w,
    })
}

/// `d_TV ≤ 2α∫(ζ−z)²μ(dζ)/(1 − √(2π)zα)`.
pub fn jump_mixture_tv_bound(alpha: f64, z: f64, second_moment_about_z: f64) -> Result<f64> {
    let gamma = (2.0 * std::f64::consts::PI).sqrt() * z * alpha;
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::NoContraction(gamma));
    }
    Ok(2.0 * alpha * second_moment_about_z / (1.0 - gamma))
}

/// Ingredients and combined `d⁽¹⁾` bound for the chain's diffusion limit.
///
/// With `y = g′` and `ψ = 0`, the appendix bounds give `‖g′‖ ≤ 2`, `‖g″‖ ≤ 4`,
/// `‖g‴‖ ≤ 2` per unit `‖f‖⁽¹⁾`, so the generator comparison yields
/// `C = 2/3 + 2E|W_N| + 2α` and `d⁽¹⁾ ≤ CN^{−1/2}/(1 − γ)` with
/// `γ = (4 + √(2π))zα`. `E|W_N|` is replaced by the root of the
/// second-moment bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpDiffusionBound {
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub mean_abs_bound: f64,
    pub c: f64,
    pub gamma: f64,
    pub contraction_ok: bool,
    pub bound: Option<f64>,
}

pub fn jump_diffusion_bound(model: &MarkovJumpModel) -> JumpDiffusionBound {
    let (g1, g2, g3) = (2.0, 4.0, 2.0);
    let mean_abs_bound = model.second_moment_bound().sqrt();
    let c = g3 / 3.0 + 0.5 * mean_abs_bound * g2 + model.alpha * g1;
    let gamma = (4.0 + (2.0 * std::f64::consts::PI).sqrt()) * model.z * model.alpha;
    let contraction_ok = gamma < 1.0;
    JumpDiffusionBound {
        g1,
        g2,
        g3,
        mean_abs_bound,
        c,
        gamma,
        contraction_ok,
        bound: contraction_ok.then(|| c * model.eta() / (1.0 - gamma)),
    }
}
