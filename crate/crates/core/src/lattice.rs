//! Finite-support signed measures on the integers.
//!
//! [`SignedLatticeMeasure`] is the common currency of the crate: Poisson laws,
//! (signed) compound Poisson laws, Poisson-binomial laws and the Borovkov–Pfeifer
//! correction are all stored as an offset plus a dense weight vector.
//!
//! Compound Poisson measures are built from a [`JumpRateSpec`] by
//! [`exp_rates`], which evaluates the measure whose generating function is
//! `exp{Σ_l λ_l (z^l − 1)}`. For rates on `l ≥ 1` the weights follow from the
//! derivative identity `Q'(z) = Q(z) Σ_l l λ_l z^{l−1}`:
//!
//! ```text
//! q_0 = exp(−Σ λ_l),   q_j = j⁻¹ Σ_{l=1}^{min(j,L)} l λ_l q_{j−l}
//! ```
//!
//! which holds verbatim for signed rates. Two-sided rate maps are split into
//! their positive- and negative-jump parts and convolved.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute weight below which end weights are trimmed.
pub const TRIM_EPS: f64 = 1e-14;

/// Hard cap on the number of lattice points any constructed measure may span.
pub const WINDOW_CAP: usize = 1_000_000;

/// Default tail-mass tolerance for measure construction.
pub const DEFAULT_TAIL_TOL: f64 = 1e-15;

/// A finite-support signed measure on `Z`, stored as `weights[k] = m{offset + k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedLatticeMeasure {
    offset: i64,
    weights: Vec<f64>,
}

impl SignedLatticeMeasure {
    /// Builds a measure and trims negligible end weights.
    pub fn new(offset: i64, weights: Vec<f64>) -> Self {
        Self { offset, weights }.trimmed(TRIM_EPS)
    }

    /// Builds a measure without trimming.
    pub fn from_raw(offset: i64, weights: Vec<f64>) -> Self {
        Self { offset, weights }
    }

    pub fn empty() -> Self {
        Self {
            offset: 0,
            weights: Vec::new(),
        }
    }

    pub fn dirac(at: i64) -> Self {
        Self {
            offset: at,
            weights: vec![1.0],
        }
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Index of the last stored weight (`offset − 1` when empty).
    pub fn last_index(&self) -> i64 {
        self.offset + self.weights.len() as i64 - 1
    }

    /// Mass at `j` (zero outside the stored window).
    pub fn get(&self, j: i64) -> f64 {
        let k = j - self.offset;
        if k < 0 || k as usize >= self.weights.len() {
            0.0
        } else {
            self.weights[k as usize]
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.weights
            .iter()
            .enumerate()
            .map(move |(k, &w)| (self.offset + k as i64, w))
    }

    pub fn total_mass(&self) -> f64 {
        neumaier_sum(self.weights.iter().copied())
    }

    /// Total variation norm `|m|(Z)`.
    pub fn abs_mass(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }

    /// `|m|` of the negative half-line `{j < 0}`.
    pub fn abs_mass_negative(&self) -> f64 {
        self.iter().filter(|(j, _)| *j < 0).map(|(_, w)| w.abs()).sum()
    }

    /// `m(f) = Σ_j m{j} f(j)`.
    pub fn expect<F: Fn(i64) -> f64>(&self, f: F) -> f64 {
        neumaier_sum(self.iter().map(|(j, w)| w * f(j)))
    }

    pub fn max_abs_weight(&self) -> f64 {
        self.weights.iter().fold(0.0, |a, w| a.max(w.abs()))
    }

    /// True for a nonnegative measure with total mass 1 within `tol`.
    pub fn is_probability(&self, tol: f64) -> bool {
        self.weights.iter().all(|&w| w >= -tol) && (self.total_mass() - 1.0).abs() <= tol
    }

    /// The image under `j ↦ −j`.
    pub fn reflect(&self) -> Self {
        let mut w = self.weights.clone();
        w.reverse();
        Self {
            offset: -self.last_index(),
            weights: w,
        }
    }

    /// The image under `j ↦ j + by`.
    pub fn shift(&self, by: i64) -> Self {
        Self {
            offset: self.offset + by,
            weights: self.weights.clone(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            offset: self.offset,
            weights: self.weights.iter().map(|w| w * c).collect(),
        }
    }

    /// Strips leading and trailing weights with `|w| < eps`.
    pub fn trimmed(mut self, eps: f64) -> Self {
        let first = self.weights.iter().position(|w| w.abs() >= eps);
        match first {
            None => Self::empty(),
            Some(first) => {
                let last = self.weights.iter().rposition(|w| w.abs() >= eps).unwrap();
                self.weights.truncate(last + 1);
                self.weights.drain(..first);
                self.offset += first as i64;
                self
            }
        }
    }

    /// Pointwise difference `self − other` over the union window.
    pub fn sub(&self, other: &Self) -> Self {
        if self.is_empty() {
            return other.scale(-1.0);
        }
        if other.is_empty() {
            return self.clone();
        }
        let lo = self.offset.min(other.offset);
        let hi = self.last_index().max(other.last_index());
        let weights = (lo..=hi).map(|j| self.get(j) - other.get(j)).collect();
        Self::from_raw(lo, weights)
    }
}

/// Compensated summation.
pub(crate) fn neumaier_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut c = 0.0_f64;
    for x in it {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// `(a ∗ b){j} = Σ_k a{k} b{j − k}`.
pub fn convolve(a: &SignedLatticeMeasure, b: &SignedLatticeMeasure) -> SignedLatticeMeasure {
    if a.is_empty() || b.is_empty() {
        return SignedLatticeMeasure::empty();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.weights.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (k, &y) in b.weights.iter().enumerate() {
            out[i + k] += x * y;
        }
    }
    SignedLatticeMeasure::new(a.offset + b.offset, out)
}

/// `Σ_j m{j} z^j`; for supports reaching below zero this is the Laurent sum.
pub fn gf_eval(m: &SignedLatticeMeasure, z: f64) -> f64 {
    neumaier_sum(m.iter().map(|(j, w)| w * z.powi(j as i32)))
}

/// Jump rates `{λ_l}` of a (signed) compound Poisson generating function
/// `exp{Σ_l λ_l (z^l − 1)}`, together with the declared mass
/// `Σ_{l>L} l|λ_l|` discarded when the rate map was truncated.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct JumpRateSpec {
    rates: BTreeMap<i64, f64>,
    truncation_error: f64,
}

impl JumpRateSpec {
    pub fn new(rates: BTreeMap<i64, f64>) -> Result<Self> {
        Self::with_truncation(rates, 0.0)
    }

    pub fn with_truncation(rates: BTreeMap<i64, f64>, truncation_error: f64) -> Result<Self> {
        if rates.contains_key(&0) {
            return Err(Error::Invalid("jump size 0 carries no rate".into()));
        }
        if rates.values().any(|r| !r.is_finite()) {
            return Err(Error::Invalid("non-finite jump rate".into()));
        }
        if !(truncation_error >= 0.0) {
            return Err(Error::Invalid("truncation error must be nonnegative".into()));
        }
        let rates = rates.into_iter().filter(|(_, r)| *r != 0.0).collect();
        Ok(Self {
            rates,
            truncation_error,
        })
    }

    pub fn from_pairs<I: IntoIterator<Item = (i64, f64)>>(pairs: I) -> Result<Self> {
        let mut rates = BTreeMap::new();
        for (l, r) in pairs {
            *rates.entry(l).or_insert(0.0) += r;
        }
        Self::new(rates)
    }

    pub fn rates(&self) -> &BTreeMap<i64, f64> {
        &self.rates
    }

    pub fn rate(&self, l: i64) -> f64 {
        self.rates.get(&l).copied().unwrap_or(0.0)
    }

    pub fn truncation_error(&self) -> f64 {
        self.truncation_error
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    /// `Σ_l λ_l`.
    pub fn total_rate(&self) -> f64 {
        neumaier_sum(self.rates.values().copied())
    }

    /// `Σ_l l λ_l`, the mean of the induced measure.
    pub fn mean(&self) -> f64 {
        neumaier_sum(self.rates.iter().map(|(&l, &r)| l as f64 * r))
    }

    /// `Σ_l |l| |λ_l|`.
    pub fn abs_first_moment(&self) -> f64 {
        self.rates.iter().map(|(&l, &r)| (l as f64 * r).abs()).sum()
    }

    /// Rate-wise sum; truncation errors add.
    pub fn add(&self, other: &Self) -> Self {
        let mut rates = self.rates.clone();
        for (&l, &r) in &other.rates {
            *rates.entry(l).or_insert(0.0) += r;
        }
        Self {
            rates: rates.into_iter().filter(|(_, r)| *r != 0.0).collect(),
            truncation_error: self.truncation_error + other.truncation_error,
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            rates: self.rates.iter().map(|(&l, &r)| (l, r * c)).collect(),
            truncation_error: self.truncation_error * c.abs(),
        }
    }

    fn one_sided(&self, positive: bool) -> Vec<(usize, f64)> {
        self.rates
            .iter()
            .filter(|(&l, _)| (l > 0) == positive)
            .map(|(&l, &r)| (l.unsigned_abs() as usize, r))
            .collect()
    }
}

/// Compound Poisson law `CP(λ, μ)`: the law of `Σ_l l N_l` with `N_l ~ Po(λ μ_l)`,
/// allowing signed `μ` and jumps of either sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompoundPoissonSpec {
    lambda: f64,
    mu: BTreeMap<i64, f64>,
}

impl CompoundPoissonSpec {
    pub fn new(lambda: f64, mu: BTreeMap<i64, f64>) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Invalid(format!("lambda must be positive, got {lambda}")));
        }
        if mu.contains_key(&0) {
            return Err(Error::Invalid("mu_0 is not allowed".into()));
        }
        if mu.values().any(|m| !m.is_finite()) {
            return Err(Error::Invalid("non-finite mu".into()));
        }
        let mu: BTreeMap<i64, f64> = mu.into_iter().filter(|(_, m)| *m != 0.0).collect();
        let spec = Self { lambda, mu };
        if !(spec.m1() > 0.0) {
            return Err(Error::Precondition(format!(
                "m1 = {} must be positive",
                spec.m1()
            )));
        }
        Ok(spec)
    }

    pub fn from_pairs<I: IntoIterator<Item = (i64, f64)>>(lambda: f64, pairs: I) -> Result<Self> {
        let mut mu = BTreeMap::new();
        for (l, m) in pairs {
            *mu.entry(l).or_insert(0.0) += m;
        }
        Self::new(lambda, mu)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> &BTreeMap<i64, f64> {
        &self.mu
    }

    pub fn mu_at(&self, l: i64) -> f64 {
        self.mu.get(&l).copied().unwrap_or(0.0)
    }

    /// `m₁ = Σ_l l μ_l`.
    pub fn m1(&self) -> f64 {
        neumaier_sum(self.mu.iter().map(|(&l, &m)| l as f64 * m))
    }

    /// `m₂ = Σ_{l≥1} l(l−1) μ_l`.
    pub fn m2(&self) -> f64 {
        self.mu
            .iter()
            .filter(|(&l, _)| l >= 1)
            .map(|(&l, &m)| (l * (l - 1)) as f64 * m)
            .sum()
    }

    /// `m′₂ = Σ_l l(l−1)|μ_l|`.
    pub fn m2_abs(&self) -> f64 {
        self.mu
            .iter()
            .map(|(&l, &m)| (l * (l - 1)) as f64 * m.abs())
            .sum()
    }

    /// Mean of the Poisson base law, `λ m₁`.
    pub fn poisson_mean(&self) -> f64 {
        self.lambda * self.m1()
    }

    pub fn is_one_sided(&self) -> bool {
        self.mu.keys().all(|&l| l >= 1)
    }

    pub fn max_jump(&self) -> i64 {
        self.mu.keys().next_back().copied().unwrap_or(1).max(1)
    }

    pub fn min_jump(&self) -> i64 {
        self.mu.keys().next().copied().unwrap_or(1)
    }

    /// The rate map `{λ μ_l}`.
    pub fn rates(&self) -> JumpRateSpec {
        JumpRateSpec::new(self.mu.iter().map(|(&l, &m)| (l, self.lambda * m)).collect())
            .expect("validated on construction")
    }

    /// The measure `CP(λ, μ)` itself.
    pub fn measure(&self, tol: f64) -> Result<SignedLatticeMeasure> {
        exp_rates(&self.rates(), tol)
    }
}

/// The measure with generating function `exp{Σ_l λ_l (z^l − 1)}`.
pub fn exp_rates(spec: &JumpRateSpec, tol: f64) -> Result<SignedLatticeMeasure> {
    if spec.is_empty() {
        return Ok(SignedLatticeMeasure::dirac(0));
    }
    let pos = spec.one_sided(true);
    let neg = spec.one_sided(false);
    let up = exp_one_sided(&pos, tol)?;
    if neg.is_empty() {
        return Ok(up);
    }
    let down = exp_one_sided(&neg, tol)?.reflect();
    if pos.is_empty() {
        return Ok(down);
    }
    Ok(convolve(&up, &down))
}

// Beyond this total rate e^{−Λ} approaches the subnormal range; such rate
// maps are halved and the result convolved with itself.
const SPLIT_RATE: f64 = 600.0;

fn exp_one_sided(rates: &[(usize, f64)], tol: f64) -> Result<SignedLatticeMeasure> {
    if rates.is_empty() {
        return Ok(SignedLatticeMeasure::dirac(0));
    }
    let total: f64 = neumaier_sum(rates.iter().map(|(_, r)| *r));
    let abs_total: f64 = rates.iter().map(|(_, r)| r.abs()).sum();
    if total.abs().max(abs_total) > SPLIT_RATE {
        let half: Vec<(usize, f64)> = rates.iter().map(|&(l, r)| (l, r / 2.0)).collect();
        let m = exp_one_sided(&half, tol / 2.0)?;
        return Ok(convolve(&m, &m));
    }
    let max_l = rates.iter().map(|(l, _)| *l).max().unwrap();
    let drift: f64 = rates.iter().map(|&(l, r)| l as f64 * r.abs()).sum();
    // Once j exceeds twice the drift every new weight is at most half the
    // largest of the previous `max_l`, so the tail is bounded geometrically.
    let settle = (2.0 * drift).ceil() as usize + max_l;
    let tail_tol = tol.max(1e-300) / (4.0 * max_l as f64);

    let mut lw = vec![0.0; max_l + 1];
    for &(l, r) in rates {
        lw[l] += l as f64 * r;
    }
    let mut q: Vec<f64> = Vec::with_capacity(settle + 64);
    q.push((-total).exp());
    let mut j = 0usize;
    loop {
        if j >= settle {
            let recent = q[q.len().saturating_sub(max_l)..]
                .iter()
                .fold(0.0_f64, |a, w| a.max(w.abs()));
            if recent <= tail_tol {
                break;
            }
        }
        j += 1;
        if j >= WINDOW_CAP {
            return Err(Error::Divergence {
                tol,
                cap: WINDOW_CAP,
            });
        }
        let top = j.min(max_l);
        let mut acc = 0.0;
        for l in 1..=top {
            if lw[l] != 0.0 {
                acc += lw[l] * q[j - l];
            }
        }
        let next = acc / j as f64;
        if !next.is_finite() {
            return Err(Error::Divergence {
                tol,
                cap: WINDOW_CAP,
            });
        }
        q.push(next);
    }
    Ok(SignedLatticeMeasure::new(0, q))
}

/// `Po(λ)` on a window capturing all but `tol` of the mass, by pmf ratios
/// outward from the mode.
pub fn poisson_pmf(lambda: f64, tol: f64) -> Result<SignedLatticeMeasure> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Invalid(format!("lambda must be positive, got {lambda}")));
    }
    let mode = lambda.floor() as usize;
    let log_mode = -lambda + mode as f64 * lambda.ln() - libm::lgamma(mode as f64 + 1.0);
    let at_mode = log_mode.exp();
    // Stop once the pmf drops below this; the remaining tail is bounded by a
    // geometric series with ratio at most 1 − 1/(2 + √λ).
    let floor = tol.max(1e-300) / (10.0 * (2.0 + lambda.sqrt()));

    let mut below = Vec::new();
    let mut w = at_mode;
    let mut k = mode;
    while k > 0 {
        w *= k as f64 / lambda;
        k -= 1;
        below.push(w);
        if w < floor && (k as f64) < lambda {
            break;
        }
    }
    let lo = k;
    below.reverse();

    let mut weights = below;
    weights.push(at_mode);
    let mut w = at_mode;
    let mut k = mode;
    loop {
        k += 1;
        w *= lambda / k as f64;
        weights.push(w);
        if w < floor && k as f64 > lambda {
            break;
        }
        if weights.len() >= WINDOW_CAP {
            return Err(Error::Divergence {
                tol,
                cap: WINDOW_CAP,
            });
        }
    }
    Ok(SignedLatticeMeasure::new(lo as i64, weights))
}

/// Analytic continuation of a Bernoulli family beyond its last explicit index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyTail {
    /// `p_i = 0` for `i > n`.
    Finite,
    /// Record indicators, `p_i = 1/i` for `i > n`.
    Records,
    /// An infinite family whose tail has not been supplied.
    Undeclared,
}

/// Rates of `Po(λ) ∗ BP` in signed compound Poisson form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BpRates {
    /// `λ_l = λ_{1l} + λ_{2l}`, `1 ≤ l ≤ L`; `Σ_l l λ_l = λ`.
    pub rates: JumpRateSpec,
    /// `λ = Σ_{i=s}^n p_i`.
    pub lambda: f64,
    /// Largest retained jump size `L`.
    pub max_jump: usize,
}

impl BpRates {
    /// Rates of the correction measure `BP` alone (the `Po(λ)` factor removed).
    pub fn correction(&self) -> JumpRateSpec {
        let mut rates = self.rates.rates().clone();
        *rates.entry(1).or_insert(0.0) -= self.lambda;
        JumpRateSpec::with_truncation(rates, self.rates.truncation_error())
            .expect("rates were valid before the shift")
    }

    /// `Σ_l l λ_{2l}` would vanish identically; this returns the rate of the
    /// `i > n` tail part for inspection.
    pub fn total(&self) -> &JumpRateSpec {
        &self.rates
    }
}

/// `Σ_{m ≥ start} m^{−power}` for `power ≥ 2`, as (midpoint, half-width):
/// explicit terms up to `K − 1` plus the integral bracket
/// `[K^{1−l}/(l−1), (K−1)^{1−l}/(l−1)]` for the remainder.
pub fn tail_power_sum(start: u64, power: u32) -> (f64, f64) {
    assert!(start >= 1 && power >= 2);
    let explicit = (10 * start).max(10_000);
    let k_first_rem = start + explicit;
    let l = power as i32;
    // summed from the small end up
    let mut s = 0.0;
    for m in (start..k_first_rem).rev() {
        s += (m as f64).powi(-l);
    }
    let denom = (power - 1) as f64;
    let lo = (k_first_rem as f64).powi(1 - l) / denom;
    let hi = ((k_first_rem - 1) as f64).powi(1 - l) / denom;
    (s + 0.5 * (lo + hi), 0.5 * (hi - lo))
}

/// Signed compound Poisson rates of `Po(λ) ∗ BP_s` for indicator probabilities
/// `p[k] = p_{s+k}`, `s ≤ i ≤ n`, with optional analytic tail for `i > n`.
///
/// With `x_i = p_i / (1 − p_i)`,
/// `λ_{1l} = ((−1)^{l+1}/l) Σ_{i≤n} x_i^l` and, for the tail,
/// `λ_{21} = Σ_{i>n} p_i²/q_i`, `λ_{2l} = ((−1)^{l+1}/l) Σ_{i>n} x_i^l`.
/// When `max_jump` is `None`, `L` is the smallest size with
/// `Σ_{l>L} l|λ_l| < 1e−12 λ`.
pub fn bp_rates(
    p: &[f64],
    s: usize,
    tail: FamilyTail,
    max_jump: Option<usize>,
) -> Result<BpRates> {
    if s == 0 {
        return Err(Error::Invalid("indicator indices start at 1".into()));
    }
    if let Some((k, &pi)) = p
        .iter()
        .enumerate()
        .find(|(_, &pi)| !(0.0..1.0 / 3.0).contains(&pi))
    {
        return Err(Error::Precondition(format!(
            "p_{} = {pi} must lie in [0, 1/3)",
            s + k
        )));
    }
    if tail == FamilyTail::Undeclared {
        return Err(Error::TailModelMissing);
    }
    let n = s + p.len() - 1;
    let lambda: f64 = neumaier_sum(p.iter().copied());
    let xs: Vec<f64> = p.iter().filter(|&&x| x > 0.0).map(|&pi| pi / (1.0 - pi)).collect();

    // Σ_{l>L} l|λ_l| for the finite part is Σ_i x_i^{L+1}/(1 − x_i); for the
    // records tail Σ_{l>L} Σ_{m≥n} m^{−l} ≤ Σ_{m≥n} m^{−(L+1)} · n/(n−1).
    let records_start = n as u64;
    let jump_err = |big_l: usize| -> f64 {
        let fin: f64 = xs
            .iter()
            .map(|&x| x.powi(big_l as i32 + 1) / (1.0 - x))
            .sum();
        let tail_part = match tail {
            FamilyTail::Records if records_start >= 2 => {
                let (mid, hw) = tail_power_sum(records_start, big_l as u32 + 1);
                (mid + hw) * records_start as f64 / (records_start as f64 - 1.0)
            }
            _ => 0.0,
        };
        fin + tail_part
    };
    if tail == FamilyTail::Records && n < 2 {
        return Err(Error::Invalid("records tail needs n ≥ 2".into()));
    }
    let big_l = match max_jump {
        Some(l) if l >= 1 => l,
        Some(_) => return Err(Error::Invalid("max_jump must be at least 1".into())),
        None => {
            let target = 1e-12 * lambda.max(f64::MIN_POSITIVE);
            let mut l = 1;
            while l < 400 && jump_err(l) >= target {
                l += 1;
            }
            l
        }
    };
    let mut truncation_error = jump_err(big_l);

    let mut rates = BTreeMap::new();
    for l in 1..=big_l {
        let sign = if l % 2 == 1 { 1.0 } else { -1.0 };
        let mut sum_x: f64 = neumaier_sum(xs.iter().map(|&x| x.powi(l as i32)));
        if tail == FamilyTail::Records {
            if l == 1 {
                // Σ_{i>n} 1/(i(i−1)) = 1/n telescopes; it enters λ_{21} instead of x_i.
                rates.insert(1i64, sum_x + 1.0 / n as f64);
                continue;
            }
            let (mid, hw) = tail_power_sum(records_start, l as u32);
            sum_x += mid;
            truncation_error += hw;
        }
        rates.insert(l as i64, sign * sum_x / l as f64);
    }
    let rates = JumpRateSpec::with_truncation(rates, truncation_error)?;
    Ok(BpRates {
        rates,
        lambda,
        max_jump: big_l,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn po_closed(lambda: f64, k: u32) -> f64 {
        (-lambda + k as f64 * lambda.ln() - libm::lgamma(k as f64 + 1.0)).exp()
    }

    #[test]
    fn dirac_is_convolution_identity() {
        let m = SignedLatticeMeasure::new(-2, vec![0.25, -0.5, 1.25]);
        assert_eq!(convolve(&SignedLatticeMeasure::dirac(0), &m), m);
    }

    #[test]
    fn diracs_translate() {
        let c = convolve(&SignedLatticeMeasure::dirac(1), &SignedLatticeMeasure::dirac(2));
        assert_eq!(c, SignedLatticeMeasure::dirac(3));
    }

    #[test]
    fn empty_convolves_to_empty() {
        let c = convolve(&SignedLatticeMeasure::empty(), &SignedLatticeMeasure::dirac(2));
        assert!(c.is_empty());
    }

    #[test]
    fn poisson_halves_convolve_to_poisson_one() {
        let h = poisson_pmf(0.5, DEFAULT_TAIL_TOL).unwrap();
        let c = convolve(&h, &h);
        for k in 0..=40 {
            assert!((c.get(k) - po_closed(1.0, k as u32)).abs() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn poisson_pmf_closed_forms() {
        let p1 = poisson_pmf(1.0, DEFAULT_TAIL_TOL).unwrap();
        assert!((p1.get(0) - (-1.0f64).exp()).abs() < 1e-15);
        let p5 = poisson_pmf(5.0, DEFAULT_TAIL_TOL).unwrap();
        assert!((p5.get(4) - p5.get(5)).abs() < 1e-12);
        let p20 = poisson_pmf(20.0, DEFAULT_TAIL_TOL).unwrap();
        let cap = (2.0 * std::f64::consts::E * 20.0).powf(-0.5);
        assert!(p20.max_abs_weight() <= cap);
        assert!((cap - 0.0959).abs() < 1e-4);
        assert!((p20.total_mass() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn poisson_rejects_nonpositive_rate() {
        assert!(poisson_pmf(0.0, 1e-12).is_err());
    }

    #[test]
    fn exp_rates_of_nothing_is_dirac() {
        let m = exp_rates(&JumpRateSpec::default(), DEFAULT_TAIL_TOL).unwrap();
        assert_eq!(m, SignedLatticeMeasure::dirac(0));
    }

    #[test]
    fn exp_rates_unit_jump_is_poisson() {
        let r = JumpRateSpec::from_pairs([(1, 1.0)]).unwrap();
        let m = exp_rates(&r, DEFAULT_TAIL_TOL).unwrap();
        for k in 0..20 {
            assert!((m.get(k) - po_closed(1.0, k as u32)).abs() < 1e-14);
        }
    }

    #[test]
    fn exp_rates_signed_generating_function() {
        let r = JumpRateSpec::from_pairs([(1, -0.2), (2, 0.3)]).unwrap();
        let m = exp_rates(&r, DEFAULT_TAIL_TOL).unwrap();
        let expected = (-0.2f64 * (0.5 - 1.0) + 0.3 * (0.25 - 1.0)).exp();
        assert!((gf_eval(&m, 0.5) - expected).abs() < 1e-12);
        assert!((expected - (-0.125f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn gf_eval_basics() {
        assert_eq!(gf_eval(&SignedLatticeMeasure::dirac(0), 0.3), 1.0);
        let po = poisson_pmf(2.0, DEFAULT_TAIL_TOL).unwrap();
        assert!((gf_eval(&po, 0.5) - (-1.0f64).exp()).abs() < 1e-13);
        let r = JumpRateSpec::from_pairs([(1, 0.4), (3, 0.1)]).unwrap();
        let m = exp_rates(&r, DEFAULT_TAIL_TOL).unwrap();
        let z: f64 = 0.6;
        let expected = (0.4 * (z - 1.0) + 0.1 * (z.powi(3) - 1.0)).exp();
        assert!((gf_eval(&m, z) - expected).abs() < 1e-13);
    }

    #[test]
    fn two_sided_rates_have_laurent_generating_function() {
        let r = JumpRateSpec::from_pairs([(-1, 0.05), (1, 1.5), (2, -0.1)]).unwrap();
        let m = exp_rates(&r, DEFAULT_TAIL_TOL).unwrap();
        assert!(m.offset() < 0);
        for z in [0.4f64, 0.8, 1.0] {
            let expected =
                (0.05 * (1.0 / z - 1.0) + 1.5 * (z - 1.0) - 0.1 * (z * z - 1.0)).exp();
            assert!((gf_eval(&m, z) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn large_total_rate_is_split() {
        let r = JumpRateSpec::from_pairs([(1, 900.0)]).unwrap();
        let m = exp_rates(&r, DEFAULT_TAIL_TOL).unwrap();
        let po = poisson_pmf(900.0, DEFAULT_TAIL_TOL).unwrap();
        for k in (800..1000).step_by(7) {
            assert!((m.get(k) - po.get(k)).abs() < 1e-13);
        }
    }

    #[test]
    fn bp_rates_all_zero() {
        let r = bp_rates(&[0.0, 0.0, 0.0], 4, FamilyTail::Finite, None).unwrap();
        assert!(r.correction().is_empty());
        assert_eq!(r.lambda, 0.0);
    }

    #[test]
    fn bp_rates_single_indicator() {
        let p = 0.2;
        let r = bp_rates(&[p], 1, FamilyTail::Finite, None).unwrap();
        for l in 2..=r.max_jump {
            let sign = if l % 2 == 1 { 1.0 } else { -1.0 };
            let expected = sign / l as f64 * 0.25f64.powi(l as i32);
            assert!((r.rates.rate(l as i64) - expected).abs() < 1e-16);
        }
        let bp = exp_rates(&r.correction(), DEFAULT_TAIL_TOL).unwrap();
        for z in [0.3, 0.7] {
            let expected = (1.0 + p * (z - 1.0)) * (-p * (z - 1.0)).exp();
            assert!((gf_eval(&bp, z) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn bp_rates_reject_large_probability() {
        assert!(matches!(
            bp_rates(&[0.1, 0.34], 1, FamilyTail::Finite, None),
            Err(Error::Precondition(_))
        ));
        assert_eq!(
            bp_rates(&[0.1], 4, FamilyTail::Undeclared, None),
            Err(Error::TailModelMissing)
        );
    }

    #[test]
    fn records_tail_rates_have_zero_mean() {
        let (s, n) = (4usize, 50usize);
        let p: Vec<f64> = (s..=n).map(|i| 1.0 / i as f64).collect();
        let with_tail = bp_rates(&p, s, FamilyTail::Records, None).unwrap();
        let head = bp_rates(&p, s, FamilyTail::Finite, Some(with_tail.max_jump)).unwrap();
        let tail_mean: f64 = (1..=with_tail.max_jump as i64)
            .map(|l| l as f64 * (with_tail.rates.rate(l) - head.rates.rate(l)))
            .sum();
        assert!(tail_mean.abs() < 1e-10, "{tail_mean}");
        assert!((with_tail.rates.mean() - with_tail.lambda).abs() < 1e-10);
    }

    #[test]
    fn tail_power_sum_brackets_zeta() {
        // Σ_{m≥1} m^{-2} = π²/6
        let (mid, hw) = tail_power_sum(1, 2);
        let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
        assert!((mid - zeta2).abs() <= hw + 1e-15);
        assert!(hw < 1e-8);
    }

    #[test]
    fn reflect_and_trim() {
        let m = SignedLatticeMeasure::new(1, vec![0.0, 0.5, 0.25, 1e-16]);
        assert_eq!(m.offset(), 2);
        assert_eq!(m.len(), 2);
        let r = m.reflect();
        assert_eq!(r.offset(), -3);
        assert_eq!(r.get(-2), 0.5);
        assert_eq!(r.get(-3), 0.25);
    }
}
