//! Acceptance suite: one pass/fail line per criterion.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use steinpert::continuous::{
    characterization_residual, gamma_constants, normal_bounds_matrix, stein_solve_normal, ContinuousProblem,
    ContinuousTestFunction, GammaWhich, Grid,
};
use steinpert::distances::{distance, MetricKind};
use steinpert::lattice::{bp_rates, exp_rates, poisson_pmf, CompoundPoissonSpec, FamilyTail, DEFAULT_TAIL_TOL};
use steinpert::models::{
    bp_approximation, bp_error_bounds, eta1, exact_sum_pmf, markov_jump_equilibrium, poisson_binomial_pmf,
    records_grid, BernoulliSumModel, JointTable, MarkovJumpModel,
};
use steinpert::stein::{
    apply_operator, gamma_empirical, gamma_upper, neumann_solve, perturbation_report, probe_function, probe_rng,
    stein_factor_check, LatticeFunction, NormKind, OperatorKind, Tail,
};

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn random_cp(rng: &mut ChaCha8Rng, two_sided: bool) -> CompoundPoissonSpec {
    loop {
        let lambda = rng.gen_range(0.5..20.0);
        let mut pairs = vec![(1i64, 1.0)];
        for l in 2..=4 {
            if rng.gen_bool(0.6) {
                pairs.push((l, rng.gen_range(-0.04..0.07)));
            }
        }
        if two_sided {
            pairs.push((-1, rng.gen_range(0.01..0.12)));
            if rng.gen_bool(0.5) {
                pairs.push((-2, rng.gen_range(-0.02..0.03)));
            }
        }
        if let Ok(spec) = CompoundPoissonSpec::from_pairs(lambda, pairs) {
            if gamma_upper(&spec, NormKind::Sup) <= 0.9 {
                return spec;
            }
        }
    }
}

// Criterion 1: records family against the error bounds, plus the rate check.
fn records() -> Outcome {
    let start = Instant::now();
    let metrics: BTreeSet<MetricKind> =
        [MetricKind::TotalVariation, MetricKind::Point, MetricKind::Wasserstein].into();
    let ns = [25usize, 50, 100, 200];
    let rows = match records_grid(&ns, 4, &metrics, None) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("error {e}")),
    };
    let bounded = rows.iter().all(|r| r.bound.is_some_and(|b| r.actual <= b));
    let worst = rows.iter().filter_map(|r| r.ratio).fold(0.0, f64::max);
    let scaled: Vec<f64> = rows
        .iter()
        .filter(|r| r.metric == MetricKind::TotalVariation)
        .map(|r| r.actual * r.n as f64 * (r.n as f64).ln())
        .collect();
    let spread = scaled.iter().cloned().fold(0.0, f64::max) / scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        bounded && spread <= 4.0 && secs <= 30.0,
        format!("max actual/bound {worst:.3}; d_TV*n*ln n spread {spread:.3} (<= 4); {secs:.2}s (<= 30s)"),
    )
}

// Criterion 2: the signed compound Poisson form reproduces the Poisson-binomial law.
fn exact_representation() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for fam in 0..20 {
        let mut rng = probe_rng(SEED, fam);
        let n = rng.gen_range(1..=12);
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0 / 3.0)).collect();
        let rates = bp_rates(&p, 1, FamilyTail::Finite, None).expect("rates");
        let approx = exp_rates(&rates.rates, 1e-16).expect("measure");
        let exact = poisson_binomial_pmf(&p).expect("pmf");
        let err = distance(&approx, &exact, MetricKind::Point).expect("distance");
        let allowed = 1e-9 + rates.rates.truncation_error();
        worst = worst.max(err);
        pass &= err <= allowed;
    }
    outcome(pass, format!("max pointwise error {worst:.2e} (<= 1e-9 + truncation)"))
}

// Criterion 3: the Neumann-series inverse solves the perturbed Stein equation.
fn neumann_engine() -> Outcome {
    let mut worst_one: f64 = 0.0;
    let mut worst_flat: f64 = 0.0;
    let mut worst_const: f64 = 0.0;
    for (two_sided, stream) in [(false, 100usize), (true, 200)] {
        for s in 0..20 {
            let spec = random_cp(&mut probe_rng(SEED, stream + s), two_sided);
            let lp = spec.poisson_mean();
            let pi0 = poisson_pmf(lp, DEFAULT_TAIL_TOL).expect("pi0");
            let pi1 = spec.measure(1e-16).expect("pi1");
            let width = (lp + 4.0 * lp.sqrt()).ceil() as i64 + 4;
            for k in 0..10 {
                let mut rng = probe_rng(SEED + 1, 1000 * s + k);
                let f = probe_function(NormKind::Sup, width, k, &mut rng);
                let sol = neumann_solve(&f, &spec, 1e-12, 2000).expect("neumann");
                let a1 = apply_operator(OperatorKind::A1, &sol.g, &spec).expect("A1");
                let pi1f = pi1.expect(|j| f.get(j));
                let res: Vec<f64> = (0..=width + 10).map(|j| a1.get(j) - f.get(j) + pi1f).collect();
                if two_sided {
                    let c = pi1f - pi0.expect(|j| f.get(j)) + pi0.expect(|j| sol.ubf.get(j));
                    let (lo, hi) = res.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
                    worst_flat = worst_flat.max(hi - lo);
                    worst_const = worst_const.max(res.iter().map(|r| (r - c).abs()).fold(0.0, f64::max));
                } else {
                    worst_one = worst_one.max(res.iter().map(|r| r.abs()).fold(0.0, f64::max));
                }
            }
        }
    }
    outcome(
        worst_one <= 1e-8 && worst_flat <= 1e-8 && worst_const <= 1e-8,
        format!(
            "Z+ residual {worst_one:.2e}; two-sided spread {worst_flat:.2e}, offset vs c(f) {worst_const:.2e} (all <= 1e-8)"
        ),
    )
}

// Criterion 4: Poisson Stein factors for all three norms.
fn magic_factors() -> Outcome {
    let mut violations = 0usize;
    let mut checked = 0usize;
    let mut worst: f64 = 0.0;
    for (li, lp) in [0.5, 1.0, 5.0, 20.0].into_iter().enumerate() {
        let width = (lp + 6.0 * f64::sqrt(lp)).ceil() as i64 + 6;
        for (ni, norm) in NormKind::ALL.into_iter().enumerate() {
            let reports: Vec<_> = (0..1000usize)
                .map(|i| {
                    let mut rng = probe_rng(SEED + 2, 10_000 * (3 * li + ni) + i);
                    stein_factor_check(lp, &probe_function(norm, width, i, &mut rng), norm).expect("factor check")
                })
                .collect();
            for r in reports {
                checked += 1;
                violations += usize::from(!r.pass);
                for l in &r.lines {
                    if l.bound > 0.0 {
                        worst = worst.max(l.achieved / l.bound);
                    }
                }
            }
        }
    }
    outcome(violations == 0, format!("{checked} probes, {violations} violations, max achieved/bound {worst:.4}"))
}

// Criterion 5: normal solution bounds over the full matrix.
fn normal_appendix() -> Outcome {
    let start = Instant::now();
    let reports = match normal_bounds_matrix(&[0.0, 0.25, 0.5], 5, SEED) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("error {e}")),
    };
    let failed: Vec<String> = reports
        .iter()
        .flat_map(|r| r.lines.iter().filter(|l| !l.pass).map(move |l| format!("{} psi={} {}", r.function, r.psi, l.label)))
        .collect();
    let residual = reports.iter().map(|r| r.residual).fold(0.0, f64::max);
    let witness = stein_solve_normal(&ContinuousTestFunction::indicator(0.0), 0.0, &Grid::default_for(0.0).unwrap())
        .map(|s| (s.sups().sup_y - (2.0 * std::f64::consts::PI).sqrt() / 4.0).abs())
        .unwrap_or(f64::INFINITY);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failed.is_empty() && residual <= 1e-8 && witness <= 1e-6 && secs <= 60.0,
        format!(
            "{} cells, failures {:?}; ODE residual {residual:.2e}; tightness gap {witness:.2e} (<= 1e-6); {secs:.2}s (<= 60s)",
            reports.len(),
            failed
        ),
    )
}

// Criterion 6: Stein characterizations integrate to zero.
fn characterization() -> Outcome {
    let mut lattice_worst: f64 = 0.0;
    for i in 0..100usize {
        let mut rng = probe_rng(SEED + 3, i);
        let lp = rng.gen_range(0.5..30.0);
        let pi0 = poisson_pmf(lp, DEFAULT_TAIL_TOL).expect("pi0");
        let hi = pi0.last_index() + 2;
        let width = (lp + 3.0 * lp.sqrt()) as i64 + 2;
        let vals: Vec<f64> = (0..=width).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = LatticeFunction::new(0, vals, Tail::Zero);
        let padded = LatticeFunction::from_fn(-1, hi, Tail::Zero, |j| g.get(j));
        let spec = CompoundPoissonSpec::from_pairs(lp, [(1, 1.0)]).unwrap();
        let a0g = apply_operator(OperatorKind::A0, &padded, &spec).expect("A0");
        lattice_worst = lattice_worst.max(pi0.expect(|j| a0g.get(j)).abs());
    }
    let mut cont_worst: f64 = 0.0;
    for i in 0..20usize {
        let psi = [0.0, 0.25, 0.4][i % 3];
        let m = [5.0, 10.0][i % 2];
        let mut rng = probe_rng(SEED + 4, i);
        let g = if i % 2 == 0 {
            ContinuousTestFunction::lipschitz_probe(&mut rng)
        } else {
            ContinuousTestFunction::bounded_probe(&mut rng)
        };
        let r = characterization_residual(|x| g.eval(x), |x| g.derivative(x).unwrap(), m, psi).expect("residual");
        cont_worst = cont_worst.max(r);
    }
    outcome(
        lattice_worst <= 1e-10 && cont_worst <= 1e-8,
        format!("lattice {lattice_worst:.2e} (<= 1e-10); continuous {cont_worst:.2e} (<= 1e-8)"),
    )
}

// Independent-coupling η₁ from direct enumeration of the joint table.
fn eta1_oracle(joint: &JointTable) -> f64 {
    let n = joint.n;
    let mut total = 0.0;
    for i in 0..n {
        let mut rest = vec![0.0; n];
        let mut given = vec![0.0; n];
        let mut pi = 0.0;
        for (idx, pr) in joint.probs.iter().enumerate() {
            let bits: Vec<bool> = (0..n).map(|k| idx >> (n - 1 - k) & 1 == 1).collect();
            let others = bits.iter().enumerate().filter(|(k, b)| *k != i && **b).count();
            rest[others] += pr;
            if bits[i] {
                given[others] += pr;
                pi += pr;
            }
        }
        let mut e = 0.0;
        for (a, pa) in given.iter().enumerate() {
            for (b, pb) in rest.iter().enumerate() {
                e += pa / pi * pb * (a as f64 - b as f64).abs();
            }
        }
        total += pi / (1.0 - 2.0 * pi) * e;
    }
    total
}

// Criterion 7: brute-force oracles for the exact laws and for η₁.
fn brute_force() -> Outcome {
    let mut pb_worst: f64 = 0.0;
    for fam in 0..20 {
        let mut rng = probe_rng(SEED + 5, fam);
        let n = rng.gen_range(1..=10);
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let dp = poisson_binomial_pmf(&p).unwrap();
        let mut brute = vec![0.0; n + 1];
        for mask in 0u32..(1 << n) {
            let pr: f64 = (0..n).map(|i| if mask >> i & 1 == 1 { p[i] } else { 1.0 - p[i] }).product();
            brute[mask.count_ones() as usize] += pr;
        }
        for (k, v) in brute.iter().enumerate() {
            pb_worst = pb_worst.max((dp.get(k as i64) - v).abs());
        }
    }
    let mut eta_worst: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    let mut ok = true;
    for fam in 0..20 {
        let mut rng = probe_rng(SEED + 6, fam);
        let n = rng.gen_range(3..=10);
        let p = rng.gen_range(0.05..0.15);
        let stay = rng.gen_range(0.0..0.45);
        let joint = JointTable::markov_chain(n, p, stay).unwrap();
        let oracle = eta1_oracle(&joint);
        let model = BernoulliSumModel::Dependent { joint };
        let e = eta1(&model).unwrap();
        eta_worst = eta_worst.max((e.independent - oracle).abs());
        ok &= e.minimal <= e.independent + 1e-15;
        let exact = exact_sum_pmf(&model).unwrap();
        let (approx, _) = bp_approximation(&model, None).unwrap();
        let actual = distance(&exact, &approx, MetricKind::TotalVariation).unwrap();
        let bound = bp_error_bounds(&model, 1.0).unwrap().tv;
        ok &= actual <= bound;
        worst_ratio = worst_ratio.max(actual / bound);
    }
    outcome(
        ok && pb_worst <= 1e-12 && eta_worst <= 1e-12,
        format!(
            "DP vs 2^n {pb_worst:.2e} (<= 1e-12); eta1 vs enumeration {eta_worst:.2e}; max d_TV/bound {worst_ratio:.3}"
        ),
    )
}

// Criterion 8: the birth-death chain with upward jumps.
fn markov_jump() -> Outcome {
    let mut po_worst: f64 = 0.0;
    for n in [25u64, 100] {
        let eq = markov_jump_equilibrium(&MarkovJumpModel::new(n, 0.0, 0.7).unwrap(), None).unwrap();
        let po = poisson_pmf(n as f64, 1e-17).unwrap();
        po_worst = po_worst.max(distance(&eq.pmf, &po, MetricKind::Point).unwrap());
    }
    let mut moments_ok = true;
    let mut detail = String::new();
    for (z, alpha) in [(0.1, 0.5), (0.2, 1.0)] {
        for n in [25u64, 100, 400] {
            let model = MarkovJumpModel::new(n, z, alpha).unwrap();
            let eq = markov_jump_equilibrium(&model, None).unwrap();
            moments_ok &= eq.mean_w.abs() <= model.mean_bound() + 1e-12;
            moments_ok &= eq.second_moment_w <= model.second_moment_bound() + 1e-12;
            if n == 100 {
                detail.push_str(&format!(
                    " (z={z},a={alpha}): E W {:.4} <= {:.4}, E W^2 {:.4} <= {:.4};",
                    eq.mean_w,
                    model.mean_bound(),
                    eq.second_moment_w,
                    model.second_moment_bound()
                ));
            }
        }
    }
    outcome(po_worst <= 1e-9 && moments_ok, format!("z=0 vs Po(N) {po_worst:.2e} (<= 1e-9);{detail}"))
}

// Criterion 9: empirical contraction never exceeds the certificate; flags follow the thresholds.
fn gamma_certificates() -> Outcome {
    let mut ok = true;
    let mut specs = 0usize;
    for s in 0..12usize {
        let mut rng = probe_rng(SEED + 7, s);
        let lambda = rng.gen_range(0.5..15.0);
        let w2 = rng.gen_range(0.0..0.3);
        let w3 = rng.gen_range(0.0..0.1);
        let spec = CompoundPoissonSpec::from_pairs(lambda, [(1, 1.0 - w2 - w3), (2, w2), (3, w3)]).unwrap();
        for norm in NormKind::ALL {
            let rep = perturbation_report(&spec, norm, 60, SEED + s as u64).unwrap();
            ok &= rep.gamma_empirical <= rep.gamma_upper + 1e-12;
            ok &= rep.contraction_ok == (spec.m2_abs() / spec.m1() < 0.5);
        }
        specs += 1;
    }
    let dirac = CompoundPoissonSpec::from_pairs(3.0, [(1, 1.0)]).unwrap();
    ok &= gamma_empirical(&dirac, NormKind::Sup, 10, SEED).unwrap() == 0.0;

    let two_pi = (2.0 * std::f64::consts::PI).sqrt();
    for (z, alpha) in [(0.1, 1.0), (0.3, 1.3), (0.5, 0.9), (1.0, 0.39), (1.0, 0.4)] {
        let p = ContinuousProblem::new(0.0, 5.0, alpha, z).unwrap();
        ok &= gamma_constants(&p, GammaWhich::JumpDiffusionSup).contraction_ok == (two_pi * z * alpha < 1.0);
    }
    for (psi, m) in [(0.1, 10.0), (0.3, 5.0), (0.35, 2.0), (0.5, 100.0), (1.0, 10.0)] {
        let p = ContinuousProblem::new(psi, m, 0.0, 0.0).unwrap();
        let flag = gamma_constants(&p, GammaWhich::NormalToTSup).contraction_ok;
        let expected = psi < 1.0 && 2.0 * psi / (1.0 - psi) * (1.0 + 1.0 / m) < 1.0;
        ok &= flag == expected;
    }
    outcome(ok, format!("{specs} CP specs x 3 norms, continuous flag grids checked"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("records bounds and rate", records),
        ("exact signed compound Poisson representation", exact_representation),
        ("Neumann engine residuals", neumann_engine),
        ("Poisson Stein factors", magic_factors),
        ("normal Stein solution bounds", normal_appendix),
        ("characterization residuals", characterization),
        ("brute-force oracles", brute_force),
        ("birth-death equilibrium", markov_jump),
        ("contraction certificates", gamma_certificates),
    ];
    let mut all = true;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        all &= o.pass;
        println!("criterion {}: {} [{}] {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, name, o.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
