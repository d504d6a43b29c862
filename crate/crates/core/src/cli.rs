//! The `gsm-gof` command line: config parsing, grid expansion and output.
//!
//! Parameters come from an optional TOML file, overridden by flags. Every
//! subcommand expands the grid `regimes × epsilons × sigmas` and emits one
//! self-describing row per grid point, as CSV or as JSON
//! `{"meta": {...}, "rows": [...]}`.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bounds::{lower_bound_radius_sq, rate_formula, upper_bound_radius_sq, RateKind};
use crate::error::{invalid, Error, Result};
use crate::gsm::{
    make_spike_alternative, make_two_point_pair, simulate, spike_frequency, NoiseLevels,
    PriorConstants, Signal,
};
use crate::montecarlo::{
    check_lemma1, check_lemma4, empirical_separation_radius, estimate_alpha, power_curve,
    ExperimentPlan, Tolerance,
};
use crate::sequences::{IllPosedness, RegimeKind, RegimeSpec};
use crate::testproc::{run_test, DimensionPolicy, TestConfig, TestReport, DEFAULT_KAPPA};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "gsm-gof",
    version,
    about = "Goodness-of-fit testing with noisy singular values"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Simulate one data set and run the test on it.
    Test,
    /// Estimate the first-kind error on each grid cell.
    Calibrate,
    /// Second-kind error against spike alternatives of increasing radius.
    PowerCurve,
    /// Empirical separation radius by bisection.
    SepRadius,
    /// Closed-form rate tables.
    Rates,
    /// Upper and lower separation-radius bounds.
    Bounds,
    /// Bandwidth-containment and quadratic-form concentration checks.
    Lemmas,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, env = "GSM_GOF_SEED")]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub reps: Option<usize>,
    /// Worker threads (default: logical CPUs).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    /// Comma-separated list.
    #[arg(long, global = true, value_delimiter = ',')]
    pub epsilon: Option<Vec<f64>>,
    /// Comma-separated list.
    #[arg(long, global = true, value_delimiter = ',')]
    pub sigma: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub s: Option<f64>,
    #[arg(long, global = true)]
    pub t: Option<f64>,
    /// Comma-separated regime labels such as `mild-ordinary`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub regime: Option<Vec<String>>,
    #[arg(long, global = true)]
    pub jmax: Option<usize>,
    #[arg(long, global = true)]
    pub kappa: Option<f64>,
}

/// One lemma-4 case with constant vectors `ν·1` and `v·1` of length `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lemma4Case {
    pub d: usize,
    pub nu: f64,
    pub v: f64,
    pub x: f64,
}

/// Fully resolved run parameters; echoed verbatim into JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub regimes: Vec<String>,
    pub s: f64,
    pub t: f64,
    pub c_a: f64,
    pub c_b: f64,
    pub epsilons: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    /// Default 10⁴ for mild and 200 for severe regimes.
    pub jmax: Option<usize>,
    /// Fixed `D`; adaptive `D†` when absent.
    pub d: Option<usize>,
    /// Null signal; the two-point null at `D = 1` when absent.
    pub theta0: Option<Vec<f64>>,
    /// `test`: spike radius of the data-generating signal (null when absent).
    pub radius: Option<f64>,
    pub seed: u64,
    pub reps: usize,
    pub workers: Option<usize>,
    pub format: Format,
    pub out: Option<PathBuf>,
    /// `power-curve` radii.
    pub radii: Vec<f64>,
    /// `sep-radius` search.
    pub beta_target: Option<f64>,
    pub r_lo: f64,
    pub r_hi: f64,
    pub rel_tol: f64,
    /// `rates` tables.
    pub tables: Vec<RateKind>,
    pub lemma4: Vec<Lemma4Case>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            regimes: vec!["mild-ordinary".into()],
            s: 1.0,
            t: 1.0,
            c_a: 1.0,
            c_b: 1.0,
            epsilons: vec![0.01],
            sigmas: vec![0.01],
            alpha: 0.05,
            beta: 0.5,
            kappa: DEFAULT_KAPPA,
            jmax: None,
            d: None,
            theta0: None,
            radius: None,
            seed: 0,
            reps: 1000,
            workers: None,
            format: Format::Csv,
            out: None,
            radii: vec![0.1, 0.2, 0.4, 0.8],
            beta_target: None,
            r_lo: 0.01,
            r_hi: 1.0,
            rel_tol: 0.05,
            tables: vec![RateKind::Upper, RateKind::Lower, RateKind::KnownOperator],
            lemma4: vec![
                Lemma4Case {
                    d: 1,
                    nu: 0.0,
                    v: 1.0,
                    x: 1.0,
                },
                Lemma4Case {
                    d: 10,
                    nu: 0.1,
                    v: 0.5,
                    x: 2.0,
                },
            ],
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| invalid("config", e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid("config", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Config file (if any) with flag overrides applied. The seed resolves
    /// as flag, then `GSM_GOF_SEED`, then file, then 0.
    pub fn resolve(args: &CommonArgs) -> Result<Self> {
        let mut cfg = match &args.config {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        macro_rules! set {
            ($($field:ident <- $arg:expr),* $(,)?) => {$(
                if let Some(v) = $arg.clone() {
                    cfg.$field = v.into();
                }
            )*};
        }
        set!(
            seed <- args.seed,
            reps <- args.reps,
            format <- args.format,
            alpha <- args.alpha,
            beta <- args.beta,
            epsilons <- args.epsilon,
            sigmas <- args.sigma,
            s <- args.s,
            t <- args.t,
            regimes <- args.regime,
            kappa <- args.kappa,
        );
        if args.workers.is_some() {
            cfg.workers = args.workers;
        }
        if args.out.is_some() {
            cfg.out = args.out.clone();
        }
        if args.jmax.is_some() {
            cfg.jmax = args.jmax;
        }
        Ok(cfg)
    }

    /// Checks that hold for every subcommand.
    pub fn validate(&self) -> Result<()> {
        if self.regimes.is_empty() {
            return Err(Error::DegenerateGrid("`regimes` is empty".into()));
        }
        if self.epsilons.is_empty() {
            return Err(Error::DegenerateGrid("`epsilons` is empty".into()));
        }
        if self.sigmas.is_empty() {
            return Err(Error::DegenerateGrid("`sigmas` is empty".into()));
        }
        for r in &self.regimes {
            r.parse::<RegimeKind>()?;
        }
        for &e in &self.epsilons {
            if !(e > 0.0 && e < 1.0) {
                return Err(invalid("epsilon", format!("must lie in (0, 1), got {e}")));
            }
        }
        for &s in &self.sigmas {
            if !(s > 0.0 && s < 1.0) {
                return Err(invalid("sigma", format!("must lie in (0, 1), got {s}")));
            }
        }
        unit("alpha", self.alpha)?;
        unit("beta", self.beta)?;
        if let Some(b) = self.beta_target {
            unit("beta_target", b)?;
        }
        if self.workers == Some(0) {
            return Err(invalid("workers", "must be at least 1"));
        }
        if self.jmax == Some(0) {
            return Err(invalid("jmax", "must be at least 1"));
        }
        self.spec(RegimeKind::ALL[0])?;
        Ok(())
    }

    pub fn spec(&self, kind: RegimeKind) -> Result<RegimeSpec> {
        RegimeSpec::with_constants(kind.0, kind.1, self.t, self.s, self.c_b, self.c_a)
    }

    pub fn j_max(&self, spec: &RegimeSpec) -> usize {
        self.jmax.unwrap_or(match spec.b_kind {
            IllPosedness::Mild => 10_000,
            IllPosedness::Severe => 200,
        })
    }

    pub fn test_config(&self, spec: &RegimeSpec) -> TestConfig {
        TestConfig {
            alpha: self.alpha,
            beta: self.beta,
            kappa: self.kappa,
            dimension: self
                .d
                .map_or(DimensionPolicy::Adaptive, DimensionPolicy::Fixed),
            j_max: self.j_max(spec),
        }
    }

    pub fn theta0(&self, spec: &RegimeSpec, noise: NoiseLevels) -> Result<Signal> {
        match &self.theta0 {
            Some(v) => Signal::new(v.clone()).map_err(|e| invalid("theta0", e.to_string())),
            None => make_two_point_pair(
                spec,
                noise,
                self.alpha,
                self.beta,
                1,
                PriorConstants::default(),
            )
            .map(|p| p.theta0)
            .map_err(|e| invalid("theta0", format!("default two-point null unavailable: {e}"))),
        }
    }

    /// All grid cells in row order: regime, then epsilon, then sigma.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        let mut cells = Vec::new();
        for label in &self.regimes {
            let spec = self.spec(label.parse()?)?;
            for &epsilon in &self.epsilons {
                for &sigma in &self.sigmas {
                    cells.push(Cell {
                        spec,
                        noise: NoiseLevels::new(epsilon, sigma)?,
                    });
                }
            }
        }
        Ok(cells)
    }

    pub fn plan(&self, cell: &Cell) -> Result<ExperimentPlan> {
        let mut plan = ExperimentPlan::new(
            cell.spec,
            cell.noise,
            self.test_config(&cell.spec),
            self.theta0(&cell.spec, cell.noise)?,
            self.reps,
            self.seed,
        );
        plan.workers = self.workers;
        plan.validate()?;
        Ok(plan)
    }
}

fn unit(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must lie in (0, 1), got {v}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub spec: RegimeSpec,
    pub noise: NoiseLevels,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRow {
    pub regime: String,
    pub s: f64,
    pub t: f64,
    pub epsilon: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub j_max: usize,
    pub radius: Option<f64>,
    pub m_hat: usize,
    pub m_truncated: bool,
    pub d_used: usize,
    pub statistic: f64,
    pub noise_term: Option<f64>,
    pub deviation_term: Option<f64>,
    pub bias_term: Option<f64>,
    pub threshold: Option<f64>,
    pub reject: bool,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrateRow {
    pub regime: String,
    pub s: f64,
    pub t: f64,
    pub epsilon: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub j_max: usize,
    pub alpha_hat: f64,
    pub se: f64,
    pub n_reps: usize,
    pub n_degenerate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub regime: String,
    pub s: f64,
    pub t: f64,
    pub epsilon: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub j_max: usize,
    pub radius: f64,
    pub spike_frequency: Option<usize>,
    pub beta_hat: Option<f64>,
    pub se: Option<f64>,
    pub n_reps: usize,
    pub n_degenerate: Option<usize>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SepRadiusRow {
    pub regime: String,
    pub s: f64,
    pub t: f64,
    pub epsilon: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub j_max: usize,
    pub beta_target: f64,
    pub r_lo: f64,
    pub r_hi: f64,
    pub rel_tol: f64,
    pub n_reps: usize,
    pub radius: Option<f64>,
    pub bracket_lo: Option<f64>,
    pub bracket_hi: Option<f64>,
    pub steps: Option<usize>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub regime: String,
    pub s: f64,
    pub t: f64,
    pub epsilon: f64,
    pub sigma: f64,
    pub table: RateKind,
    pub radius_sq: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub regime: String,
    pub s: f64,
    pub t: f64,
    pub epsilon: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    pub j_max: usize,
    pub upper_sq: Option<f64>,
    pub argmin_d: Option<usize>,
    pub m0: usize,
    pub m0_truncated: bool,
    pub m1: usize,
    pub m1_truncated: bool,
    pub lower_sq: f64,
    pub sigma_component: f64,
    pub epsilon_component: f64,
    pub m2: usize,
    pub m2_truncated: bool,
    pub k: f64,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaRow {
    /// `lemma1` or `lemma4`.
    pub lemma: String,
    /// `outside` for the bandwidth check; `right` / `left` for the tail checks.
    pub event: String,
    pub regime: Option<String>,
    pub sigma: Option<f64>,
    pub alpha: Option<f64>,
    pub kappa: Option<f64>,
    pub m0: Option<usize>,
    pub m1: Option<usize>,
    pub d: Option<usize>,
    pub nu: Option<f64>,
    pub v: Option<f64>,
    pub x: Option<f64>,
    pub seed: u64,
    pub n_reps: usize,
    pub p_hat: f64,
    pub se: f64,
    pub bound: f64,
    pub pass: bool,
}

fn status(r: &Result<impl Sized>) -> String {
    match r {
        Ok(_) => "ok".into(),
        Err(e) => e.to_string(),
    }
}

pub fn cmd_test(cfg: &RunConfig) -> Result<Vec<TestRow>> {
    cfg.cells()?
        .iter()
        .map(|cell| {
            let (spec, noise) = (cell.spec, cell.noise);
            let config = cfg.test_config(&spec);
            config.validate()?;
            let theta0 = cfg.theta0(&spec, noise)?;
            let theta = match cfg.radius {
                Some(r) => make_spike_alternative(&spec, &theta0, r, config.j_max)?,
                None => theta0.clone(),
            };
            let obs = simulate(&theta, &spec, noise, cfg.seed, config.j_max)?;
            let report = run_test(&obs, &theta0, &spec, noise, &config)?;
            Ok(test_row(cfg, cell, config.j_max, &report))
        })
        .collect()
}

fn test_row(cfg: &RunConfig, cell: &Cell, j_max: usize, r: &TestReport) -> TestRow {
    TestRow {
        regime: cell.spec.label().into(),
        s: cell.spec.s,
        t: cell.spec.t,
        epsilon: cell.noise.epsilon,
        sigma: cell.noise.sigma,
        alpha: cfg.alpha,
        beta: cfg.beta,
        seed: cfg.seed,
        j_max,
        radius: cfg.radius,
        m_hat: r.m_hat,
        m_truncated: r.m_truncated,
        d_used: r.d_used,
        statistic: r.statistic,
        noise_term: r.threshold.map(|t| t.noise_term),
        deviation_term: r.threshold.map(|t| t.deviation_term),
        bias_term: r.threshold.map(|t| t.bias_term),
        threshold: r.threshold.map(|t| t.value),
        reject: r.reject,
        degenerate: r.degenerate,
    }
}

pub fn cmd_calibrate(cfg: &RunConfig) -> Result<Vec<CalibrateRow>> {
    cfg.cells()?
        .iter()
        .map(|cell| {
            let plan = cfg.plan(cell)?;
            let est = estimate_alpha(&plan)?;
            Ok(CalibrateRow {
                regime: cell.spec.label().into(),
                s: cell.spec.s,
                t: cell.spec.t,
                epsilon: cell.noise.epsilon,
                sigma: cell.noise.sigma,
                alpha: cfg.alpha,
                beta: cfg.beta,
                seed: cfg.seed,
                j_max: plan.config.j_max,
                alpha_hat: est.p_hat,
                se: est.se,
                n_reps: est.n_reps,
                n_degenerate: est.n_degenerate,
            })
        })
        .collect()
}

pub fn cmd_power_curve(cfg: &RunConfig) -> Result<Vec<PowerRow>> {
    if cfg.radii.is_empty() {
        return Err(Error::DegenerateGrid("`radii` is empty".into()));
    }
    let mut rows = Vec::new();
    for cell in cfg.cells()? {
        let plan = cfg.plan(&cell)?;
        for &r in &cfg.radii {
            if !(r > 0.0 && r.is_finite()) {
                return Err(invalid("radii", format!("must be positive, got {r}")));
            }
            let est = power_curve(&plan, &[r]).map(|v| v[0].1);
            rows.push(PowerRow {
                regime: cell.spec.label().into(),
                s: cell.spec.s,
                t: cell.spec.t,
                epsilon: cell.noise.epsilon,
                sigma: cell.noise.sigma,
                alpha: cfg.alpha,
                beta: cfg.beta,
                seed: cfg.seed,
                j_max: plan.config.j_max,
                radius: r,
                spike_frequency: spike_frequency(&cell.spec, r, plan.config.j_max),
                beta_hat: est.as_ref().ok().map(|e| e.p_hat),
                se: est.as_ref().ok().map(|e| e.se),
                n_reps: plan.n_reps,
                n_degenerate: est.as_ref().ok().map(|e| e.n_degenerate),
                status: status(&est),
            });
        }
    }
    Ok(rows)
}

pub fn cmd_sep_radius(cfg: &RunConfig) -> Result<Vec<SepRadiusRow>> {
    if !(cfg.rel_tol > 0.0 && cfg.rel_tol.is_finite()) {
        return Err(invalid(
            "rel_tol",
            format!("must be positive, got {}", cfg.rel_tol),
        ));
    }
    let target = cfg.beta_target.unwrap_or(cfg.beta);
    cfg.cells()?
        .iter()
        .map(|cell| {
            let plan = cfg.plan(cell)?;
            let est = empirical_separation_radius(
                &plan,
                target,
                cfg.r_lo,
                cfg.r_hi,
                Tolerance::Relative(cfg.rel_tol),
            );
            if let Err(e @ Error::InvalidParameter { .. }) = &est {
                return Err(e.clone());
            }
            Ok(SepRadiusRow {
                regime: cell.spec.label().into(),
                s: cell.spec.s,
                t: cell.spec.t,
                epsilon: cell.noise.epsilon,
                sigma: cell.noise.sigma,
                alpha: cfg.alpha,
                beta: cfg.beta,
                seed: cfg.seed,
                j_max: plan.config.j_max,
                beta_target: target,
                r_lo: cfg.r_lo,
                r_hi: cfg.r_hi,
                rel_tol: cfg.rel_tol,
                n_reps: plan.n_reps,
                radius: est.as_ref().ok().map(|e| e.radius),
                bracket_lo: est.as_ref().ok().map(|e| e.lo),
                bracket_hi: est.as_ref().ok().map(|e| e.hi),
                steps: est.as_ref().ok().map(|e| e.steps),
                status: status(&est),
            })
        })
        .collect()
}

pub fn cmd_rates(cfg: &RunConfig) -> Result<Vec<RateRow>> {
    if cfg.tables.is_empty() {
        return Err(Error::DegenerateGrid("`tables` is empty".into()));
    }
    let mut rows = Vec::new();
    for cell in cfg.cells()? {
        for &table in &cfg.tables {
            let value = rate_formula(&cell.spec, cell.noise.epsilon, cell.noise.sigma, table);
            rows.push(RateRow {
                regime: cell.spec.label().into(),
                s: cell.spec.s,
                t: cell.spec.t,
                epsilon: cell.noise.epsilon,
                sigma: cell.noise.sigma,
                table,
                radius_sq: value.as_ref().ok().copied(),
                status: status(&value),
            });
        }
    }
    Ok(rows)
}

pub fn cmd_bounds(cfg: &RunConfig) -> Result<Vec<BoundsRow>> {
    cfg.cells()?
        .iter()
        .map(|cell| {
            let (spec, eps, sigma) = (cell.spec, cell.noise.epsilon, cell.noise.sigma);
            let j_max = cfg.j_max(&spec);
            let br = crate::testproc::bandwidth_m0_m1(&spec, sigma, cfg.alpha, cfg.kappa, j_max);
            let upper =
                upper_bound_radius_sq(&spec, eps, sigma, cfg.alpha, cfg.beta, cfg.kappa, j_max);
            if let Err(e @ (Error::InvalidParameter { .. } | Error::InvalidLevels { .. })) = &upper
            {
                return Err(e.clone());
            }
            let lower = lower_bound_radius_sq(
                &spec,
                eps,
                sigma,
                cfg.alpha,
                cfg.beta,
                j_max,
                PriorConstants::default(),
            )?;
            Ok(BoundsRow {
                regime: spec.label().into(),
                s: spec.s,
                t: spec.t,
                epsilon: eps,
                sigma,
                alpha: cfg.alpha,
                beta: cfg.beta,
                kappa: cfg.kappa,
                j_max,
                upper_sq: upper.as_ref().ok().map(|u| u.value),
                argmin_d: upper.as_ref().ok().map(|u| u.argmin_d),
                m0: br.m0.value,
                m0_truncated: br.m0.truncated,
                m1: br.m1.value,
                m1_truncated: br.m1.truncated,
                lower_sq: lower.value,
                sigma_component: lower.sigma_component,
                epsilon_component: lower.epsilon_component,
                m2: lower.m2,
                m2_truncated: lower.m2_truncated,
                k: lower.k,
                status: status(&upper),
            })
        })
        .collect()
}

/// Lemma-1 rows for every `(regime, σ)` pair (data generated at `θ₀`,
/// `ε` from the first grid value), then one right and one left row per
/// lemma-4 case.
pub fn cmd_lemmas(cfg: &RunConfig) -> Result<Vec<LemmaRow>> {
    let mut rows = Vec::new();
    for label in &cfg.regimes {
        let spec = cfg.spec(label.parse()?)?;
        for &sigma in &cfg.sigmas {
            let cell = Cell {
                spec,
                noise: NoiseLevels::new(cfg.epsilons[0], sigma)?,
            };
            let plan = cfg.plan(&cell)?;
            let check = check_lemma1(&plan)?;
            rows.push(LemmaRow {
                lemma: "lemma1".into(),
                event: "outside".into(),
                regime: Some(spec.label().into()),
                sigma: Some(sigma),
                alpha: Some(cfg.alpha),
                kappa: Some(cfg.kappa),
                m0: Some(check.bandwidths.m0.value),
                m1: Some(check.bandwidths.m1.value),
                d: None,
                nu: None,
                v: None,
                x: None,
                seed: cfg.seed,
                n_reps: check.estimate.n_reps,
                p_hat: check.estimate.p_hat,
                se: check.estimate.se,
                bound: check.bound,
                pass: check.pass,
            });
        }
    }
    for case in &cfg.lemma4 {
        let nu = vec![case.nu; case.d];
        let v = vec![case.v; case.d];
        let check = check_lemma4(&nu, &v, case.x, cfg.reps, cfg.seed, cfg.workers)?;
        for (event, est) in [("right", check.right), ("left", check.left)] {
            rows.push(LemmaRow {
                lemma: "lemma4".into(),
                event: event.into(),
                regime: None,
                sigma: None,
                alpha: None,
                kappa: None,
                m0: None,
                m1: None,
                d: Some(case.d),
                nu: Some(case.nu),
                v: Some(case.v),
                x: Some(case.x),
                seed: cfg.seed,
                n_reps: est.n_reps,
                p_hat: est.p_hat,
                se: est.se,
                bound: check.bound,
                pass: est.within(check.bound),
            });
        }
    }
    Ok(rows)
}

/// Formats a float with 17 significant digits, which round-trips exactly.
pub fn format_f64(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return v.to_string();
    }
    format!("{v:.16e}")
}

fn csv_field(v: &Value) -> Result<String> {
    Ok(match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::String(s) => s.clone(),
        Value::Number(n) if n.is_f64() => format_f64(n.as_f64().unwrap_or(f64::NAN)),
        Value::Number(n) => n.to_string(),
        other => {
            return Err(invalid(
                "format",
                format!("nested value {other} cannot be written as CSV"),
            ))
        }
    })
}

/// Writes serializable rows as CSV with a header row.
pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let io = |e: csv::Error| invalid("out", e.to_string());
    let mut w = csv::Writer::from_writer(out);
    let mut header_written = false;
    for row in rows {
        let Value::Object(map) =
            serde_json::to_value(row).map_err(|e| invalid("format", e.to_string()))?
        else {
            return Err(invalid("format", "rows must be structs"));
        };
        if !header_written {
            w.write_record(map.keys()).map_err(io)?;
            header_written = true;
        }
        let fields = map.values().map(csv_field).collect::<Result<Vec<_>>>()?;
        w.write_record(&fields).map_err(io)?;
    }
    w.flush().map_err(|e| invalid("out", e.to_string()))
}

#[derive(Debug, Serialize)]
struct Meta<'a> {
    command: Command,
    version: &'static str,
    config: &'a RunConfig,
}

#[derive(Debug, Serialize)]
struct Document<'a, T> {
    meta: Meta<'a>,
    rows: &'a [T],
}

pub fn write_json<T: Serialize, W: Write>(
    command: Command,
    cfg: &RunConfig,
    rows: &[T],
    mut out: W,
) -> Result<()> {
    let doc = Document {
        meta: Meta {
            command,
            version: env!("CARGO_PKG_VERSION"),
            config: cfg,
        },
        rows,
    };
    serde_json::to_writer_pretty(&mut out, &doc).map_err(|e| invalid("out", e.to_string()))?;
    writeln!(out).map_err(|e| invalid("out", e.to_string()))
}

/// Reads rows back from CSV produced by [`write_csv`].
pub fn read_csv<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| invalid("csv", e.to_string()))
}

/// Reads `(meta.config, rows)` back from JSON produced by [`write_json`].
pub fn read_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<(RunConfig, Vec<T>)> {
    #[derive(Deserialize)]
    struct M {
        config: RunConfig,
    }
    #[derive(Deserialize)]
    struct D<T> {
        meta: M,
        rows: Vec<T>,
    }
    let d: D<T> = serde_json::from_str(text).map_err(|e| invalid("json", e.to_string()))?;
    Ok((d.meta.config, d.rows))
}

fn emit<T: Serialize>(command: Command, cfg: &RunConfig, rows: &[T]) -> Result<()> {
    let mut buf = Vec::new();
    match cfg.format {
        Format::Csv => write_csv(rows, &mut buf)?,
        Format::Json => write_json(command, cfg, rows, &mut buf)?,
    }
    match &cfg.out {
        Some(path) => std::fs::write(path, buf)
            .map_err(|e| invalid("out", format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(&buf)
            .map_err(|e| invalid("out", e.to_string())),
    }
}

/// Runs one subcommand and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match execute(cli.command, &cli.common) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("gsm-gof: {e}");
            EXIT_CONFIG
        }
    }
}

fn execute(command: Command, args: &CommonArgs) -> Result<i32> {
    let cfg = RunConfig::resolve(args)?;
    cfg.validate()?;
    match command {
        Command::Test => emit(command, &cfg, &cmd_test(&cfg)?)?,
        Command::Calibrate => emit(command, &cfg, &cmd_calibrate(&cfg)?)?,
        Command::PowerCurve => emit(command, &cfg, &cmd_power_curve(&cfg)?)?,
        Command::SepRadius => emit(command, &cfg, &cmd_sep_radius(&cfg)?)?,
        Command::Rates => emit(command, &cfg, &cmd_rates(&cfg)?)?,
        Command::Bounds => emit(command, &cfg, &cmd_bounds(&cfg)?)?,
        Command::Lemmas => {
            let rows = cmd_lemmas(&cfg)?;
            emit(command, &cfg, &rows)?;
            return Ok(checks_exit_code(&rows));
        }
    }
    Ok(EXIT_OK)
}

/// `EXIT_CHECK_FAILED` if any lemma row failed.
pub fn checks_exit_code(rows: &[LemmaRow]) -> i32 {
    if rows.iter().all(|r| r.pass) {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 5e-324, 123456.789, -2.5e17, 0.0] {
            let s = format_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(format_f64(0.05), "5.0000000000000003e-2");
    }

    #[test]
    fn toml_rejects_unknown_keys() {
        assert!(RunConfig::from_toml("alpha = 0.1\nbogus = 1\n").is_err());
        let cfg = RunConfig::from_toml("alpha = 0.1\nregimes = [\"severe-super\"]\n").unwrap();
        assert_eq!(cfg.alpha, 0.1);
        assert_eq!(cfg.reps, RunConfig::default().reps);
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "seed = 7\nalpha = 0.1\nsigmas = [0.001]\n").unwrap();
        let args = CommonArgs {
            config: Some(path),
            alpha: Some(0.02),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(&args).unwrap();
        assert_eq!(cfg.alpha, 0.02);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.sigmas, vec![0.001]);
    }

    #[test]
    fn validation_names_field() {
        let cfg = RunConfig {
            sigmas: vec![1.5],
            ..Default::default()
        };
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("sigma"), "{msg}");
        let cfg = RunConfig {
            epsilons: vec![],
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::DegenerateGrid(_))));
    }

    #[test]
    fn failed_check_maps_to_exit_1() {
        let cfg = RunConfig {
            reps: 200,
            sigmas: vec![1e-3],
            ..Default::default()
        };
        let mut rows = cmd_lemmas(&cfg).unwrap();
        assert_eq!(checks_exit_code(&rows), EXIT_OK);
        rows[1].pass = false;
        assert_eq!(checks_exit_code(&rows), EXIT_CHECK_FAILED);
    }

    #[test]
    fn default_jmax_by_regime() {
        let cfg = RunConfig::default();
        let mild = cfg.spec("mild-super".parse().unwrap()).unwrap();
        let severe = cfg.spec("severe-ordinary".parse().unwrap()).unwrap();
        assert_eq!(cfg.j_max(&mild), 10_000);
        assert_eq!(cfg.j_max(&severe), 200);
    }

    #[test]
    fn csv_round_trip_with_missing_values() {
        let rows = vec![
            RateRow {
                regime: "mild-ordinary".into(),
                s: 1.0,
                t: 1.0,
                epsilon: 0.1,
                sigma: 1.0 / 3.0,
                table: RateKind::KnownOperator,
                radius_sq: Some(0.1f64.powf(8.0 / 9.0)),
                status: "ok".into(),
            },
            RateRow {
                regime: "severe-super".into(),
                s: 2.0,
                t: 0.5,
                epsilon: 0.2,
                sigma: 0.3,
                table: RateKind::Lower,
                radius_sq: None,
                status: "parameter out of domain: a, \"quoted\"".into(),
            },
        ];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let back: Vec<RateRow> = read_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, rows);
    }
}
