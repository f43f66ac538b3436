//! Batch front-end: validated experiment configs in, fixed-column tables out.
//!
//! Every config is parsed and checked in full before any computation runs, so
//! a rejected config never produces partial output. Exit status is `0` when
//! every asserted bound holds, `1` when some row violates its bound and `2`
//! for configuration or input errors.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::Parser;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use steinpert::continuous::normal_bounds_matrix;
use steinpert::distances::{distance, MetricKind};
use steinpert::lattice::CompoundPoissonSpec;
use steinpert::models::{
    bp_approximation, bp_error_bounds, eta1, exact_sum_pmf, jump_diffusion_bound, markov_jump_equilibrium,
    records_grid, theta1, BernoulliSumModel, JointTable, MarkovJumpModel,
};
use steinpert::stein::{perturbation_report, probe_function, probe_rng, stein_factor_check, NormKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("computation rejected the input: {0}")]
    Compute(#[from] steinpert::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        EXIT_CONFIG
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Records,
    BpVerify,
    Gamma,
    SteinCheck,
    NormalAppendix,
    MarkovJump,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(CliError::Config(format!("unknown format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default = "empty_object")]
    pub parameters: Value,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub seed: u64,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

fn default_s() -> usize {
    4
}

fn default_metrics() -> Vec<MetricKind> {
    vec![MetricKind::TotalVariation, MetricKind::Point, MetricKind::Wasserstein]
}

fn default_norms() -> Vec<NormKind> {
    NormKind::ALL.to_vec()
}

fn default_gamma_probes() -> usize {
    200
}

fn default_factor_probes() -> usize {
    100
}

fn default_appendix_probes() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordsParams {
    pub n: Vec<usize>,
    #[serde(default = "default_s")]
    pub s: usize,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<MetricKind>,
    #[serde(default)]
    pub max_jump: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BpVerifyParams {
    pub model: BernoulliSumModel,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<MetricKind>,
    #[serde(default)]
    pub max_jump: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaParams {
    pub lambda: f64,
    /// `[[l, μ_l], …]`.
    pub mu: Vec<(i64, f64)>,
    #[serde(default = "default_norms")]
    pub norms: Vec<NormKind>,
    #[serde(default = "default_gamma_probes")]
    pub probes: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteinCheckParams {
    pub lambda: Vec<f64>,
    #[serde(default = "default_norms")]
    pub norms: Vec<NormKind>,
    #[serde(default = "default_factor_probes")]
    pub probes: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalAppendixParams {
    pub psi: Vec<f64>,
    #[serde(default = "default_appendix_probes")]
    pub probes: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkovJumpParams {
    pub n: Vec<u64>,
    pub z: f64,
    pub alpha: f64,
}

/// Typed parameters, one variant per command.
#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    Records(RecordsParams),
    BpVerify(BpVerifyParams),
    Gamma(GammaParams),
    SteinCheck(SteinCheckParams),
    NormalAppendix(NormalAppendixParams),
    MarkovJump(MarkovJumpParams),
}

fn typed<T: for<'de> Deserialize<'de>>(v: &Value) -> Result<T> {
    serde_json::from_value(v.clone()).map_err(|e| CliError::Config(format!("parameters: {e}")))
}

fn require(cond: bool, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Config(msg.into()))
    }
}

impl ExperimentConfig {
    /// Parse and fully validate a JSON config.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config JSON: {e}")))?;
        cfg.params()?;
        Ok(cfg)
    }

    pub fn params(&self) -> Result<Params> {
        require(self.parameters.is_object(), "parameters must be a JSON object")?;
        let p = match self.command {
            Command::Records => {
                let p: RecordsParams = typed(&self.parameters)?;
                require(!p.n.is_empty(), "records: n must not be empty")?;
                require(p.s >= 4, "records: s must be at least 4")?;
                require(p.n.iter().all(|&n| n >= p.s && n <= 5000), "records: need s <= n <= 5000")?;
                Params::Records(p)
            }
            Command::BpVerify => {
                let p: BpVerifyParams = typed(&self.parameters)?;
                match &p.model {
                    BernoulliSumModel::Independent { p } => require(
                        !p.is_empty() && p.len() <= 5000 && p.iter().all(|v| (0.0..=1.0).contains(v)),
                        "bp-verify: p must hold 1 to 5000 probabilities in [0, 1]",
                    )?,
                    BernoulliSumModel::Dependent { joint } => {
                        JointTable::new(joint.n, joint.probs.clone())?;
                    }
                    BernoulliSumModel::Records { n, s } => {
                        BernoulliSumModel::records(*n, *s)?;
                        require(*n <= 5000, "bp-verify: records n must be at most 5000")?;
                    }
                }
                Params::BpVerify(p)
            }
            Command::Gamma => {
                let p: GammaParams = typed(&self.parameters)?;
                require(p.probes > 0, "gamma: probes must be positive")?;
                CompoundPoissonSpec::from_pairs(p.lambda, p.mu.iter().copied())?;
                Params::Gamma(p)
            }
            Command::SteinCheck => {
                let p: SteinCheckParams = typed(&self.parameters)?;
                require(!p.lambda.is_empty() && p.probes > 0, "stein-check: need lambda values and probes")?;
                require(
                    p.lambda.iter().all(|l| *l > 0.0 && *l <= 1e4),
                    "stein-check: lambda must lie in (0, 1e4]",
                )?;
                Params::SteinCheck(p)
            }
            Command::NormalAppendix => {
                let p: NormalAppendixParams = typed(&self.parameters)?;
                require(!p.psi.is_empty(), "normal-appendix: psi must not be empty")?;
                require(p.psi.iter().all(|v| (0.0..0.99).contains(v)), "normal-appendix: psi must lie in [0, 0.99)")?;
                Params::NormalAppendix(p)
            }
            Command::MarkovJump => {
                let p: MarkovJumpParams = typed(&self.parameters)?;
                require(!p.n.is_empty(), "markov-jump: n must not be empty")?;
                for &n in &p.n {
                    MarkovJumpModel::new(n, p.z, p.alpha)?;
                }
                Params::MarkovJump(p)
            }
        };
        Ok(p)
    }
}

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
    Missing,
}

impl Cell {
    fn rank(&self) -> u8 {
        match self {
            Cell::Missing => 0,
            Cell::Bool(_) => 1,
            Cell::Int(_) | Cell::Float(_) => 2,
            Cell::Text(_) => 3,
        }
    }

    fn cmp_key(&self, other: &Cell) -> Ordering {
        match (self, other) {
            (Cell::Int(a), Cell::Int(b)) => a.cmp(b),
            (Cell::Text(a), Cell::Text(b)) => a.cmp(b),
            (Cell::Bool(a), Cell::Bool(b)) => a.cmp(b),
            (a, b) if a.rank() == 2 && b.rank() == 2 => a.as_f64().total_cmp(&b.as_f64()),
            (a, b) => a.rank().cmp(&b.rank()),
        }
    }

    fn as_f64(&self) -> f64 {
        match self {
            Cell::Int(v) => *v as f64,
            Cell::Float(v) => *v,
            _ => f64::NAN,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => fmt_g12(*v),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Missing => String::new(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            Cell::Float(v) if v.is_finite() => {
                serde_json::Number::from_f64(fmt_g12(*v).parse().unwrap_or(*v)).map_or(Value::Null, Value::Number)
            }
            Cell::Float(v) => Value::String(fmt_g12(*v)),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Missing => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Float)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

macro_rules! int_cell {
    ($($t:ty),*) => {$(
        impl From<$t> for Cell {
            fn from(v: $t) -> Self {
                Cell::Int(v as i64)
            }
        }
    )*};
}
int_cell!(i64, u64, usize);

/// `%.12g`: twelve significant digits, trailing zeros removed.
pub fn fmt_g12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.11e}", x);
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let fixed = format!("{:.*}", decimals, x);
        trim_zeros(&fixed)
    } else {
        format!("{}e{}{:02}", trim_zeros(mant), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub cells: Vec<Cell>,
    /// Set when the row's asserted bound fails.
    pub violation: bool,
}

/// Output table; the first `key_len` columns form the sort key.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub key_len: usize,
    pub rows: Vec<Row>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>, key_len: usize) -> Self {
        Table { columns, key_len, rows: Vec::new() }
    }

    pub fn push(&mut self, cells: Vec<Cell>, violation: bool) {
        assert_eq!(cells.len(), self.columns.len(), "row width");
        self.rows.push(Row { cells, violation });
    }

    pub fn sort(&mut self) {
        let k = self.key_len;
        self.rows.sort_by(|a, b| {
            a.cells[..k]
                .iter()
                .zip(&b.cells[..k])
                .map(|(x, y)| x.cmp_key(y))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
        });
    }

    pub fn violations(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| r.violation)
    }

    pub fn exit_code(&self) -> i32 {
        if self.violations().next().is_some() {
            EXIT_VIOLATION
        } else {
            EXIT_OK
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut out = self.columns.join(",");
                out.push('\n');
                for r in &self.rows {
                    let line: Vec<String> = r.cells.iter().map(|c| csv_escape(&c.render())).collect();
                    out.push_str(&line.join(","));
                    out.push('\n');
                }
                out
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| {
                        let obj: serde_json::Map<String, Value> = self
                            .columns
                            .iter()
                            .zip(&r.cells)
                            .map(|(c, v)| (c.to_string(), v.to_json()))
                            .collect();
                        Value::Object(obj)
                    })
                    .collect();
                let mut s = serde_json::to_string_pretty(&rows).expect("serializable");
                s.push('\n');
                s
            }
        }
    }

    fn describe(&self, row: &Row) -> String {
        let mut s = String::new();
        for (c, v) in self.columns.iter().zip(&row.cells) {
            let _ = write!(s, "{c}={} ", v.render());
        }
        s.trim_end().to_string()
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

const REL_TOL: f64 = 1e-9;

fn exceeds(actual: f64, bound: f64) -> bool {
    !(actual <= bound * (1.0 + REL_TOL) + 1e-15)
}

fn records_table(p: &RecordsParams) -> Result<Table> {
    let metrics: BTreeSet<MetricKind> = p.metrics.iter().copied().collect();
    let ns: Vec<usize> = p.n.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let rows = records_grid(&ns, p.s, &metrics, p.max_jump)?;
    let mut t = Table::new(vec!["n", "metric", "actual", "bound", "ratio", "theta1", "lambda", "pass"], 2);
    for r in rows {
        let violated = r.bound.is_some_and(|b| exceeds(r.actual, b));
        t.push(
            vec![
                r.n.into(),
                r.metric.as_str().into(),
                r.actual.into(),
                r.bound.into(),
                r.ratio.into(),
                r.theta1.into(),
                r.lambda.into(),
                r.bound.map_or(Cell::Missing, |_| Cell::Bool(!violated)),
            ],
            violated,
        );
    }
    Ok(t)
}

fn bp_verify_table(p: &BpVerifyParams) -> Result<Table> {
    let model = &p.model;
    let exact = exact_sum_pmf(model)?;
    let (approx, _) = bp_approximation(model, p.max_jump)?;
    let theta = theta1(model)?;
    let eta = eta1(model)?;
    let bounds = if theta < 0.5 { Some(bp_error_bounds(model, model.sup_w()?)?) } else { None };
    let mut t = Table::new(
        vec!["metric", "actual", "bound", "ratio", "lambda", "theta1", "eta1_minimal", "eta1_independent", "pass"],
        1,
    );
    let metrics: BTreeSet<MetricKind> = p.metrics.iter().copied().collect();
    for m in metrics {
        let actual = distance(&exact, &approx, m)?;
        let bound = bounds.as_ref().map(|b| match m {
            MetricKind::TotalVariation => b.tv,
            MetricKind::Point => b.point,
            MetricKind::Wasserstein => b.wasserstein,
            MetricKind::Kolmogorov => 0.5 * b.tv,
        });
        let violated = bound.is_some_and(|b| exceeds(actual, b));
        t.push(
            vec![
                m.as_str().into(),
                actual.into(),
                bound.into(),
                bound.map(|b| actual / b).into(),
                model.lambda().into(),
                theta.into(),
                eta.minimal.into(),
                eta.independent.into(),
                bound.map_or(Cell::Missing, |_| Cell::Bool(!violated)),
            ],
            violated,
        );
    }
    Ok(t)
}

fn gamma_table(p: &GammaParams, seed: u64) -> Result<Table> {
    let spec = CompoundPoissonSpec::from_pairs(p.lambda, p.mu.iter().copied())?;
    let mut t = Table::new(
        vec!["norm", "gamma_upper", "gamma_empirical", "contraction_ok", "A", "pass"],
        1,
    );
    let norms: BTreeSet<NormKind> = p.norms.iter().copied().collect();
    for norm in norms {
        let r = perturbation_report(&spec, norm, p.probes, seed)?;
        let violated = exceeds(r.gamma_empirical, r.gamma_upper);
        t.push(
            vec![
                norm.as_str().into(),
                r.gamma_upper.into(),
                r.gamma_empirical.into(),
                r.contraction_ok.into(),
                r.a.into(),
                (!violated).into(),
            ],
            violated,
        );
    }
    Ok(t)
}

fn stein_check_table(p: &SteinCheckParams, seed: u64) -> Result<Table> {
    use rayon::prelude::*;
    let mut t = Table::new(
        vec!["lambda", "norm", "line", "probes", "max_ratio", "violations", "pass"],
        3,
    );
    let norms: BTreeSet<NormKind> = p.norms.iter().copied().collect();
    let cells: Vec<(usize, f64, NormKind)> = p
        .lambda
        .iter()
        .enumerate()
        .flat_map(|(i, &l)| norms.iter().map(move |&n| (i, l, n)))
        .collect();
    let results: Vec<Result<Vec<(f64, NormKind, String, f64, usize)>>> = cells
        .par_iter()
        .map(|&(i, lp, norm)| {
            let width = (lp + 6.0 * lp.sqrt()).ceil() as i64 + 6;
            let mut lines: BTreeMap<String, (f64, usize)> = BTreeMap::new();
            for k in 0..p.probes {
                let stream = (i * 3 + norm as usize) * 1_000_000 + k;
                let f = probe_function(norm, width, k, &mut probe_rng(seed, stream));
                let rep = stein_factor_check(lp, &f, norm)?;
                for l in rep.lines {
                    let e = lines.entry(l.name).or_insert((0.0, 0));
                    if l.bound > 0.0 {
                        e.0 = e.0.max(l.achieved / l.bound);
                    }
                    e.1 += usize::from(!l.pass);
                }
            }
            Ok(lines.into_iter().map(|(name, (r, v))| (lp, norm, name, r, v)).collect())
        })
        .collect();
    for cell in results {
        for (lp, norm, name, ratio, violations) in cell? {
            t.push(
                vec![
                    lp.into(),
                    norm.as_str().into(),
                    name.into(),
                    p.probes.into(),
                    ratio.into(),
                    violations.into(),
                    (violations == 0).into(),
                ],
                violations > 0,
            );
        }
    }
    Ok(t)
}

fn normal_appendix_table(p: &NormalAppendixParams, seed: u64) -> Result<Table> {
    let psis: Vec<f64> = {
        let mut v = p.psi.clone();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let reports = normal_bounds_matrix(&psis, p.probes, seed)?;
    let mut t = Table::new(
        vec!["psi", "function", "index", "line", "quantity", "estimate", "bound", "scale", "residual", "pass"],
        4,
    );
    let per_psi = reports.len() / psis.len().max(1);
    for (k, r) in reports.iter().enumerate() {
        for l in &r.lines {
            let violated = !l.pass || r.residual > 1e-8;
            t.push(
                vec![
                    r.psi.into(),
                    r.class.name().into(),
                    (k % per_psi.max(1)).into(),
                    l.label.clone().into(),
                    l.quantity.clone().into(),
                    l.estimate.into(),
                    l.bound.into(),
                    r.scale.into(),
                    r.residual.into(),
                    (!violated).into(),
                ],
                violated,
            );
        }
    }
    Ok(t)
}

fn markov_jump_table(p: &MarkovJumpParams) -> Result<Table> {
    let mut t = Table::new(
        vec![
            "n",
            "z",
            "alpha",
            "jump",
            "truncation",
            "tail_mass",
            "mean_w",
            "mean_bound",
            "second_moment_w",
            "second_moment_bound",
            "mean_abs_w",
            "c",
            "gamma",
            "contraction_ok",
            "d1_bound",
            "pass",
        ],
        1,
    );
    let ns: BTreeSet<u64> = p.n.iter().copied().collect();
    for n in ns {
        let model = MarkovJumpModel::new(n, p.z, p.alpha)?;
        let eq = markov_jump_equilibrium(&model, None)?;
        let jd = jump_diffusion_bound(&model);
        let violated = exceeds(eq.mean_w.abs(), model.mean_bound())
            || exceeds(eq.second_moment_w, model.second_moment_bound());
        t.push(
            vec![
                n.into(),
                p.z.into(),
                p.alpha.into(),
                eq.jump.into(),
                eq.truncation.into(),
                eq.tail_mass.into(),
                eq.mean_w.into(),
                model.mean_bound().into(),
                eq.second_moment_w.into(),
                model.second_moment_bound().into(),
                eq.mean_abs_w.into(),
                jd.c.into(),
                jd.gamma.into(),
                jd.contraction_ok.into(),
                jd.bound.into(),
                (!violated).into(),
            ],
            violated,
        );
    }
    Ok(t)
}

/// Runs a validated config and returns its sorted table.
pub fn run(config: &ExperimentConfig) -> Result<Table> {
    let mut table = match config.params()? {
        Params::Records(p) => records_table(&p)?,
        Params::BpVerify(p) => bp_verify_table(&p)?,
        Params::Gamma(p) => gamma_table(&p, config.seed)?,
        Params::SteinCheck(p) => stein_check_table(&p, config.seed)?,
        Params::NormalAppendix(p) => normal_appendix_table(&p, config.seed)?,
        Params::MarkovJump(p) => markov_jump_table(&p)?,
    };
    table.sort();
    Ok(table)
}

#[derive(Debug, Clone, Parser)]
#[command(name = "steinpert", version, about = "Run Stein-method perturbation experiments from a JSON config")]
pub struct Args {
    /// Experiment config (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output file; overrides the config. Standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Output format; overrides the config.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Probe seed; overrides the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
}

/// Full command-line flow; returns the exit status.
pub fn main_with(args: &Args, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    match execute(args, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(args: &Args, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(format) = args.format {
        cfg.output.format = format;
    }
    if let Some(path) = &args.output {
        cfg.output.path = Some(path.clone());
    }
    if let Some(jobs) = args.jobs {
        require(jobs > 0, "--jobs must be positive")?;
        // a pool built earlier in the process is kept
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let table = run(&cfg)?;
    let body = table.render(cfg.output.format);
    match &cfg.output.path {
        Some(path) => std::fs::write(path, body)?,
        None => stdout.write_all(body.as_bytes())?,
    }
    for row in table.violations() {
        writeln!(stderr, "bound violated: {}", table.describe(row))?;
    }
    Ok(table.exit_code())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g12_formatting() {
        assert_eq!(fmt_g12(0.0), "0");
        assert_eq!(fmt_g12(1.0), "1");
        assert_eq!(fmt_g12(0.1), "0.1");
        assert_eq!(fmt_g12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_g12(123456.789), "123456.789");
        assert_eq!(fmt_g12(1.5e-7), "1.5e-07");
        assert_eq!(fmt_g12(-2.0e15), "-2e+15");
        assert_eq!(fmt_g12(f64::INFINITY), "inf");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"command":"records","parameters":{"n":[50]},"extra":1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"command":"records","parameters":{"n":[50],"bogus":1}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"command":"records","parameters":{"n":[50]}}"#).is_ok());
    }

    #[test]
    fn sort_is_by_key() {
        let mut t = Table::new(vec!["k", "v"], 1);
        t.push(vec![Cell::Int(3), Cell::Float(1.0)], false);
        t.push(vec![Cell::Int(1), Cell::Float(2.0)], false);
        t.sort();
        assert_eq!(t.rows[0].cells[0], Cell::Int(1));
    }
}
