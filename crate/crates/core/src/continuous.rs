//! Normal-family Stein equation `y′ − (1−ψ)xy = h − h̄_ψ` on the real line.
//!
//! The solution is sampled on a uniform grid from its explicit integral
//! representation, using a cell-by-cell recursion that only ever multiplies by
//! factors `≤ 1`. Also: the interpolating `t_{m,ψ}` density and the closed-form
//! contraction constants for the normal-to-t and jump-diffusion perturbations.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_with_breaks, PANEL_TOL};
use crate::stein::probe_rng;

/// Default grid step.
pub const GRID_STEP: f64 = 1.0 / 512.0;
/// Default half-width of the grid in units of the reference standard deviation.
pub const GRID_HALF_WIDTH: f64 = 8.0;
/// Analytic bound on what the truncated tails can contribute to a grid supremum.
pub const TAIL_SLACK: f64 = 1e-10;
/// Quadrature slack carried into every pass threshold.
pub const QUAD_SLACK: f64 = 1e-9;
/// Relative slack on every bound.
pub const REL_SLACK: f64 = 1e-6;

// Integration range beyond a point, in reference standard deviations; e^{−98} is negligible.
const TAIL_SPAN: f64 = 14.0;
const HBAR_TOL: f64 = 1e-12;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Test function class, mirroring the case split of the normal solution bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionClass {
    Indicator { z: f64 },
    Lipschitz { constant: f64 },
    Bounded { constant: f64 },
}

impl FunctionClass {
    pub fn name(&self) -> &'static str {
        match self {
            FunctionClass::Indicator { .. } => "indicator",
            FunctionClass::Lipschitz { .. } => "lipschitz",
            FunctionClass::Bounded { .. } => "bounded",
        }
    }
}

/// A test function `h` together with its derivative where it exists.
#[derive(Clone)]
pub struct ContinuousTestFunction {
    class: FunctionClass,
    label: String,
    h: RealFn,
    dh: Option<RealFn>,
}

impl fmt::Debug for ContinuousTestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContinuousTestFunction")
            .field("class", &self.class)
            .field("label", &self.label)
            .finish()
    }
}

impl ContinuousTestFunction {
    /// `1_{(−∞, z]}`.
    pub fn indicator(z: f64) -> Self {
        ContinuousTestFunction {
            class: FunctionClass::Indicator { z },
            label: format!("indicator(z={z})"),
            h: Arc::new(move |x| if x <= z { 1.0 } else { 0.0 }),
            dh: None,
        }
    }

    /// Lipschitz `h` with constant `l` and derivative `dh`.
    pub fn lipschitz<H, D>(label: impl Into<String>, h: H, dh: D, l: f64) -> Self
    where
        H: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        ContinuousTestFunction {
            class: FunctionClass::Lipschitz { constant: l },
            label: label.into(),
            h: Arc::new(h),
            dh: Some(Arc::new(dh)),
        }
    }

    /// Bounded `h` with `|h| ≤ b`; `dh` may be supplied if `h` is smooth.
    pub fn bounded<H>(label: impl Into<String>, h: H, dh: Option<RealFn>, b: f64) -> Self
    where
        H: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        ContinuousTestFunction {
            class: FunctionClass::Bounded { constant: b },
            label: label.into(),
            h: Arc::new(h),
            dh,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::bounded(format!("constant({c})"), move |_| c, Some(Arc::new(|_| 0.0)), c.abs())
    }

    /// Seeded smooth Lipschitz probe `Σ a_k sin(ω_k x + φ_k)`.
    pub fn lipschitz_probe<R: Rng>(rng: &mut R) -> Self {
        let terms: Vec<(f64, f64, f64)> = (0..3)
            .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.2..2.5), rng.gen_range(0.0..2.0 * PI)))
            .collect();
        let l = terms.iter().map(|(a, w, _)| (a * w).abs()).sum();
        let t2 = terms.clone();
        Self::lipschitz(
            "lipschitz_probe",
            move |x| terms.iter().map(|(a, w, p)| a * (w * x + p).sin()).sum(),
            move |x| t2.iter().map(|(a, w, p)| a * w * (w * x + p).cos()).sum(),
            l,
        )
    }

    /// Seeded smooth bounded probe `b₀ + Σ b_k tanh(c_k(x − d_k))`.
    pub fn bounded_probe<R: Rng>(rng: &mut R) -> Self {
        let b0: f64 = rng.gen_range(-0.5..0.5);
        let terms: Vec<(f64, f64, f64)> = (0..2)
            .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.5..4.0), rng.gen_range(-2.0..2.0)))
            .collect();
        let b = b0.abs() + terms.iter().map(|(a, _, _)| a.abs()).sum::<f64>();
        let t2 = terms.clone();
        let dh: RealFn = Arc::new(move |x| {
            t2.iter()
                .map(|(a, c, d)| {
                    let s = 1.0 / (c * (x - d)).cosh();
                    a * c * s * s
                })
                .sum()
        });
        Self::bounded(
            "bounded_probe",
            move |x| b0 + terms.iter().map(|(a, c, d)| a * (c * (x - d)).tanh()).sum::<f64>(),
            Some(dh),
            b,
        )
    }

    pub fn class(&self) -> FunctionClass {
        self.class
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.h)(x)
    }

    pub fn derivative(&self, x: f64) -> Option<f64> {
        self.dh.as_ref().map(|d| d(x))
    }

    /// Points where `h` is not smooth.
    pub fn kinks(&self) -> Vec<f64> {
        match self.class {
            FunctionClass::Indicator { z } => vec![z],
            _ => Vec::new(),
        }
    }

    /// `w ↦ h(c·w)` for `c > 0`.
    pub fn rescaled(&self, c: f64) -> Self {
        match self.class {
            FunctionClass::Indicator { z } => Self::indicator(z / c),
            class => {
                let h = self.h.clone();
                let dh = self.dh.clone();
                let class = match class {
                    FunctionClass::Lipschitz { constant } => FunctionClass::Lipschitz { constant: constant * c },
                    other => other,
                };
                ContinuousTestFunction {
                    class,
                    label: format!("{}(x*{c})", self.label),
                    h: Arc::new(move |w| h(c * w)),
                    dh: dh.map(|d| Arc::new(move |w| c * d(c * w)) as RealFn),
                }
            }
        }
    }
}

/// Uniform grid: the nodes are the multiples of `step` in `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && lo < 0.0 && hi > 0.0 && lo.is_finite() && hi.is_finite()) {
            return Err(Error::Invalid(format!("grid [{lo}, {hi}] step {step} must straddle 0")));
        }
        Ok(Grid { lo, hi, step })
    }

    /// `[−8/√(1−ψ), 8/√(1−ψ)]` with step 1/512.
    pub fn default_for(psi: f64) -> Result<Self> {
        let a = check_psi(psi)?;
        let w = GRID_HALF_WIDTH / a.sqrt();
        Grid::new(-w, w, GRID_STEP)
    }

    pub fn covers(&self, psi: f64) -> bool {
        let w = GRID_HALF_WIDTH / (1.0 - psi).sqrt();
        self.lo <= -w + self.step && self.hi >= w - self.step
    }

    pub fn nodes(&self) -> Vec<f64> {
        let k0 = (self.lo / self.step).ceil() as i64;
        let k1 = (self.hi / self.step).floor() as i64;
        (k0..=k1).map(|k| k as f64 * self.step).collect()
    }
}

fn check_psi(psi: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&psi) {
        return Err(Error::Invalid(format!("psi must lie in [0, 1), got {psi}")));
    }
    Ok(1.0 - psi)
}

/// `Φ(x)`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `h̄_ψ = E h(N)` for `N ~ N(0, (1−ψ)^{−1})`.
pub fn hbar(h: &ContinuousTestFunction, psi: f64) -> Result<f64> {
    let a = check_psi(psi)?;
    if let FunctionClass::Indicator { z } = h.class {
        return Ok(normal_cdf(z * a.sqrt()));
    }
    let r = TAIL_SPAN / a.sqrt();
    let norm = (a / (2.0 * PI)).sqrt();
    let f = |x: f64| h.eval(x) * norm * (-0.5 * a * x * x).exp();
    integrate_with_breaks(f, -r, r, &[0.0], HBAR_TOL)
}

/// Sampled solution of the normal Stein equation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalSolution {
    pub psi: f64,
    pub hbar: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub dy: Vec<f64>,
    pub d2y: Vec<f64>,
    /// `max |D₇y − (1−ψ)xy − h + h̄|` with `D₇` the seven-point derivative, away from kinks.
    pub residual: f64,
    /// Disagreement of the lower- and upper-tail representations at 0.
    pub centre_mismatch: f64,
}

/// `y(x)` at a single point, straight from the integral representation.
pub fn y_at(h: &ContinuousTestFunction, psi: f64, x: f64) -> Result<f64> {
    let a = check_psi(psi)?;
    let hb = hbar(h, psi)?;
    let r = TAIL_SPAN / a.sqrt();
    if x <= 0.0 {
        weighted(h, a, hb, x - r, x, x)
    } else {
        weighted(h, a, hb, x, x + r, x).map(|v| -v)
    }
}

// ∫_lo^hi e^{−a(t² − anchor²)/2}(h(t) − h̄) dt
fn weighted(h: &ContinuousTestFunction, a: f64, hb: f64, lo: f64, hi: f64, anchor: f64) -> Result<f64> {
    let f = |t: f64| (-0.5 * a * (t - anchor) * (t + anchor)).exp() * (h.eval(t) - hb);
    integrate_with_breaks(f, lo, hi, &h.kinks(), PANEL_TOL)
}

/// Solve `y′ − (1−ψ)xy = h − h̄_ψ` on `grid`.
pub fn stein_solve_normal(h: &ContinuousTestFunction, psi: f64, grid: &Grid) -> Result<NormalSolution> {
    let a = check_psi(psi)?;
    let hb = hbar(h, psi)?;
    let x = grid.nodes();
    let n = x.len();
    let zero = x
        .iter()
        .position(|&v| v == 0.0)
        .ok_or_else(|| Error::Invariant("grid has no node at 0".into()))?;
    let r = TAIL_SPAN / a.sqrt();
    let mut y = vec![0.0; n];

    // x ≤ 0: march right, |x| decreasing.
    y[0] = weighted(h, a, hb, x[0] - r, x[0], x[0])?;
    for k in 0..zero {
        let (x0, x1) = (x[k], x[k + 1]);
        let decay = (-0.5 * a * (x0 - x1) * (x0 + x1)).exp();
        y[k + 1] = decay * y[k] + weighted(h, a, hb, x0, x1, x1)?;
    }
    let left_at_zero = y[zero];

    // x > 0: march left from the right end; also recompute 0 for the mismatch check.
    let last = n - 1;
    let mut right = -weighted(h, a, hb, x[last], x[last] + r, x[last])?;
    if last > zero {
        y[last] = right;
    }
    for k in (zero..last).rev() {
        let (x0, x1) = (x[k], x[k + 1]);
        let decay = (-0.5 * a * (x1 - x0) * (x1 + x0)).exp();
        right = decay * right - weighted(h, a, hb, x0, x1, x0)?;
        if k > zero {
            y[k] = right;
        }
    }
    let centre_mismatch = (right - left_at_zero).abs();

    let hv: Vec<f64> = x.iter().map(|&t| h.eval(t)).collect();
    let dy: Vec<f64> = (0..n).map(|k| a * x[k] * y[k] + hv[k] - hb).collect();
    let kinks = h.kinks();
    let d2y: Vec<f64> = (0..n)
        .map(|k| {
            let base = a * y[k] + a * x[k] * dy[k];
            match h.derivative(x[k]) {
                Some(d) => base + d,
                None => {
                    if kinks.iter().any(|&z| (x[k] - z).abs() < 0.5 * grid.step) {
                        // one-sided limits across the jump of h
                        let jump = hv[k] - h.eval(x[k] + 0.5 * grid.step);
                        let other = base - a * x[k] * jump;
                        if base.abs() >= other.abs() { base } else { other }
                    } else {
                        base
                    }
                }
            }
        })
        .collect();

    let step = grid.step;
    let near_kink = |t: f64| kinks.iter().any(|&z| (t - z).abs() <= 3.5 * step);
    let mut residual: f64 = 0.0;
    for k in 3..n.saturating_sub(3) {
        if near_kink(x[k]) {
            continue;
        }
        let fd = (45.0 * (y[k + 1] - y[k - 1]) - 9.0 * (y[k + 2] - y[k - 2]) + (y[k + 3] - y[k - 3]))
            / (60.0 * step);
        residual = residual.max((fd - a * x[k] * y[k] - hv[k] + hb).abs());
    }

    Ok(NormalSolution { psi, hbar: hb, x, y, dy, d2y, residual, centre_mismatch })
}

/// Grid suprema of the quantities bounded for the normal Stein solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolutionSups {
    pub sup_y: f64,
    pub sup_dy: f64,
    pub sup_xy: f64,
    pub sup_d2y: f64,
    pub sup_xdy: f64,
}

impl NormalSolution {
    pub fn sups(&self) -> SolutionSups {
        let m = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0_f64, |a, v| a.max(v.abs()));
        SolutionSups {
            sup_y: m(&mut self.y.iter().copied()),
            sup_dy: m(&mut self.dy.iter().copied()),
            sup_xy: m(&mut self.x.iter().zip(&self.y).map(|(x, y)| x * y)),
            sup_d2y: m(&mut self.d2y.iter().copied()),
            sup_xdy: m(&mut self.x.iter().zip(&self.dy).map(|(x, d)| x * d)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundLine {
    pub label: String,
    pub quantity: String,
    pub estimate: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalBoundsReport {
    pub psi: f64,
    pub function: String,
    pub class: FunctionClass,
    /// `‖h‖∞` or `‖h′‖∞` on the grid, as used in the bounds.
    pub scale: f64,
    pub sups: SolutionSups,
    pub residual: f64,
    pub lines: Vec<BoundLine>,
    pub pass: bool,
}

/// Compare grid suprema of the solution with the normal solution bounds for the class of `h`.
pub fn verify_normal_bounds(h: &ContinuousTestFunction, psi: f64, grid: &Grid) -> Result<NormalBoundsReport> {
    let a = check_psi(psi)?;
    if !grid.covers(psi) {
        return Err(Error::Precondition(format!(
            "grid [{}, {}] does not cover ±{}/√(1−ψ)",
            grid.lo, grid.hi, GRID_HALF_WIDTH
        )));
    }
    let sol = stein_solve_normal(h, psi, grid)?;
    let s = sol.sups();
    let sup_on_grid = |f: &dyn Fn(f64) -> f64| sol.x.iter().fold(0.0_f64, |m, &t| m.max(f(t).abs()));
    let (scale, specs): (f64, Vec<(&str, &str, f64, f64)>) = match h.class {
        FunctionClass::Indicator { .. } => (
            1.0,
            vec![
                ("(a)(i)", "sup|y|", s.sup_y, 0.25 * (2.0 * PI / a).sqrt()),
                ("(a)(ii)", "sup|y'|", s.sup_dy, 1.0),
                ("(a)(iii)", "sup|xy|", s.sup_xy, 1.0 / a),
            ],
        ),
        FunctionClass::Bounded { .. } => {
            let b = sup_on_grid(&|t| h.eval(t));
            (
                b,
                vec![
                    ("(b)(i)", "sup|y|", s.sup_y, (2.0 * PI / a).sqrt() * b),
                    ("(b)(ii)", "sup|y'|", s.sup_dy, 4.0 * b),
                    ("(b)(iii)", "sup|xy|", s.sup_xy, 2.0 * b / a),
                ],
            )
        }
        FunctionClass::Lipschitz { .. } => {
            let l = sup_on_grid(&|t| h.derivative(t).unwrap_or(f64::NAN));
            (
                l,
                vec![
                    ("(c)(i)", "sup|y|", s.sup_y, 2.0 * l / a),
                    ("(c)(ii)", "sup|y'|", s.sup_dy, 4.0 * l / a.sqrt()),
                    ("(c)(iii)", "sup|y''|", s.sup_d2y, 2.0 * l / a.sqrt()),
                    ("(c)(iv)", "sup|xy'|", s.sup_xdy, 3.0 * l / a),
                ],
            )
        }
    };
    let lines: Vec<BoundLine> = specs
        .into_iter()
        .map(|(label, quantity, estimate, bound)| BoundLine {
            label: label.into(),
            quantity: quantity.into(),
            estimate,
            bound,
            pass: estimate <= bound * (1.0 + REL_SLACK) + QUAD_SLACK + TAIL_SLACK,
        })
        .collect();
    let pass = lines.iter().all(|l| l.pass) && scale.is_finite();
    Ok(NormalBoundsReport {
        psi,
        function: h.label.clone(),
        class: h.class,
        scale,
        sups: s,
        residual: sol.residual,
        lines,
        pass,
    })
}

/// Standard test matrix: indicators at `z ∈ {−2,…,2}` plus `probes` seeded
/// Lipschitz and bounded probes, for every `ψ`. Rows are ordered by `ψ`, then function.
pub fn normal_bounds_matrix(psis: &[f64], probes: usize, seed: u64) -> Result<Vec<NormalBoundsReport>> {
    let mut funcs: Vec<ContinuousTestFunction> = (-2..=2).map(|z| ContinuousTestFunction::indicator(z as f64)).collect();
    for i in 0..probes {
        funcs.push(ContinuousTestFunction::lipschitz_probe(&mut probe_rng(seed, 2 * i)));
        funcs.push(ContinuousTestFunction::bounded_probe(&mut probe_rng(seed, 2 * i + 1)));
    }
    let cells: Vec<(f64, &ContinuousTestFunction)> =
        psis.iter().flat_map(|&p| funcs.iter().map(move |f| (p, f))).collect();
    cells
        .par_iter()
        .map(|(psi, f)| verify_normal_bounds(f, *psi, &Grid::default_for(*psi)?))
        .collect()
}

/// Unnormalized `(1+x²/m)^{−(m+1)ψ/2} e^{−(1−ψ)x²/2}`.
pub fn t_kernel(m: f64, psi: f64, x: f64) -> f64 {
    let a = 1.0 - psi;
    (-0.5 * (m + 1.0) * psi * (x * x / m).ln_1p() - 0.5 * a * x * x).exp()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TDensity {
    pub m: f64,
    pub psi: f64,
    pub k: f64,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

fn t_range(a: f64) -> f64 {
    TAIL_SPAN / a.sqrt()
}

fn t_normalizer(m: f64, psi: f64) -> Result<f64> {
    let a = check_psi(psi)?;
    if !(m > 0.0) {
        return Err(Error::Invalid(format!("m must be positive, got {m}")));
    }
    let half = integrate(|x| t_kernel(m, psi, x), 0.0, t_range(a), 1e-13)?;
    Ok(1.0 / (2.0 * half))
}

/// Normalizer `k_{m,ψ}` and the density sampled on `grid`.
pub fn t_density(m: f64, psi: f64, grid: &Grid) -> Result<TDensity> {
    let k = t_normalizer(m, psi)?;
    let x = grid.nodes();
    let p = x.iter().map(|&t| k * t_kernel(m, psi, t)).collect();
    Ok(TDensity { m, psi, k, x, p })
}

/// `|∫ (g′(x) − x{(1−ψ) + ψ(m+1)/(m+x²)} g(x)) p_{m,ψ}(x) dx|`.
pub fn characterization_residual<G, D>(g: G, dg: D, m: f64, psi: f64) -> Result<f64>
where
    G: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let k = t_normalizer(m, psi)?;
    let a = 1.0 - psi;
    let f = |x: f64| {
        let drift = x * (a + psi * (m + 1.0) / (m + x * x));
        (dg(x) - drift * g(x)) * k * t_kernel(m, psi, x)
    };
    let r = t_range(a);
    Ok(integrate_with_breaks(f, -r, r, &[0.0], 1e-13)?.abs())
}

/// Parameters of the continuous perturbation examples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuousProblem {
    /// Interpolation parameter towards `t_m`; `1` is accepted for contraction queries only.
    pub psi: f64,
    pub m: f64,
    pub alpha: f64,
    pub z: f64,
}

impl ContinuousProblem {
    pub fn new(psi: f64, m: f64, alpha: f64, z: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&psi) || !(m > 0.0) || !(alpha >= 0.0) || !z.is_finite() {
            return Err(Error::Invalid(format!(
                "need 0 ≤ psi ≤ 1, m > 0, alpha ≥ 0, finite z (psi={psi}, m={m}, alpha={alpha}, z={z})"
            )));
        }
        Ok(ContinuousProblem { psi, m, alpha, z })
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::default_for(self.psi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaWhich {
    /// Normal to `t_{m,ψ}`, supremum norm.
    NormalToTSup,
    /// Normal to `t_{m,ψ}`, Kolmogorov class `γ_H`.
    NormalToTKolmogorov,
    /// Jump diffusion, supremum norm.
    JumpDiffusionSup,
    /// Jump diffusion, `‖f‖∞ + ‖f′‖∞`.
    JumpDiffusionNorm1,
    /// Jump diffusion, Kolmogorov class `γ_H`.
    JumpDiffusionKolmogorov,
    /// Jump diffusion centred at `αz`, supremum part `2αz²`.
    JumpDiffusionCentredSup,
    /// Jump diffusion centred at `αz`, derivative part `αz²`.
    JumpDiffusionCentredDerivative,
}

impl GammaWhich {
    pub const ALL: [GammaWhich; 7] = [
        GammaWhich::NormalToTSup,
        GammaWhich::NormalToTKolmogorov,
        GammaWhich::JumpDiffusionSup,
        GammaWhich::JumpDiffusionNorm1,
        GammaWhich::JumpDiffusionKolmogorov,
        GammaWhich::JumpDiffusionCentredSup,
        GammaWhich::JumpDiffusionCentredDerivative,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaConstant {
    pub which: GammaWhich,
    pub value: f64,
    pub contraction_ok: bool,
}

pub fn gamma_constants(problem: &ContinuousProblem, which: GammaWhich) -> GammaConstant {
    let ContinuousProblem { psi, m, alpha, z } = *problem;
    let za = z.abs() * alpha;
    let t_sup = if psi >= 1.0 {
        f64::INFINITY
    } else {
        2.0 * psi / (1.0 - psi) * (1.0 + 1.0 / m)
    };
    let value = match which {
        GammaWhich::NormalToTSup => t_sup,
        GammaWhich::NormalToTKolmogorov => {
            let a = 1.0 - psi;
            let factor = 1.0 + 1.0 / m.sqrt() + 0.25 * (2.0 * PI * a).sqrt() + 0.5 * a * m.sqrt();
            if t_sup.is_finite() { t_sup * factor } else { f64::INFINITY }
        }
        GammaWhich::JumpDiffusionSup => (2.0 * PI).sqrt() * za,
        GammaWhich::JumpDiffusionNorm1 => (4.0 + (2.0 * PI).sqrt()) * za,
        GammaWhich::JumpDiffusionKolmogorov => (1.0 + (2.0 * PI).sqrt() / 4.0) * za,
        GammaWhich::JumpDiffusionCentredSup => 2.0 * alpha * z * z,
        GammaWhich::JumpDiffusionCentredDerivative => alpha * z * z,
    };
    GammaConstant { which, value, contraction_ok: value < 1.0 }
}
