//! Command-line front end: argument parsing, pipelines and report output.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::averaging::{self, Leading, StabilityVerdict};
use crate::bounds::{self, BoundsReport, ConvergenceConstants};
use crate::error::{Error, Result};
use crate::expansion::{self, ExpansionExport};
use crate::linalg::{self, c, inner, vnorm, CVector, C64};
use crate::model::{self, complex_serde, ProblemSpec};
use crate::oracle::{self, FloquetVerdict, SlopeFit};
use crate::spectral::{self, KernelData};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_DEGENERATE: i32 = 2;
pub const EXIT_NON_UNIQUE: i32 = 3;
pub const EXIT_VALIDATION_FAILED: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum Command {
    /// Kernel structure, solvability matrix and convergence constants.
    Analyze,
    /// Expansion coefficients up to the requested order.
    Expand,
    /// Partial-sum samples over one period.
    Evaluate,
    /// Hurwitz-series verdict with a Floquet cross-check.
    Stability,
    /// Empirical order of the partial sums against the oracle.
    Slope,
    /// Full invariant suite on the problem.
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Text,
    /// JSON documents that parse back into the same report.
    Structured,
}

#[derive(Debug, Parser)]
#[command(name = "critavg", version, about = "High-frequency periodic solutions in the critical case")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    Analyze(CommonArgs),
    Expand(CommonArgs),
    Evaluate(CommonArgs),
    Stability(CommonArgs),
    Slope(CommonArgs),
    Validate(CommonArgs),
}

#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    /// Problem document.
    pub problem: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub order: usize,
    #[arg(long, default_value_t = 100.0)]
    pub omega: f64,
    /// Comma-separated, increasing.
    #[arg(long, value_delimiter = ',', default_values_t = vec![100.0, 200.0, 400.0, 800.0])]
    pub omegas: Vec<f64>,
    #[arg(long, default_value_t = averaging::DEFAULT_TRUNC)]
    pub trunc: usize,
    /// Defaults to 1e-9·max(‖A0‖, 1).
    #[arg(long)]
    pub rank_tol: Option<f64>,
    #[arg(long, default_value_t = averaging::DEFAULT_ZERO_TOL)]
    pub zero_tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub problem_path: PathBuf,
    pub order: usize,
    pub omega: f64,
    pub omegas: Vec<f64>,
    pub trunc: usize,
    pub rank_tol: Option<f64>,
    pub zero_tol: f64,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl From<Cli> for RunConfig {
    fn from(cli: Cli) -> Self {
        let (command, a) = match cli.command {
            CliCommand::Analyze(a) => (Command::Analyze, a),
            CliCommand::Expand(a) => (Command::Expand, a),
            CliCommand::Evaluate(a) => (Command::Evaluate, a),
            CliCommand::Stability(a) => (Command::Stability, a),
            CliCommand::Slope(a) => (Command::Slope, a),
            CliCommand::Validate(a) => (Command::Validate, a),
        };
        RunConfig {
            command,
            problem_path: a.problem,
            order: a.order,
            omega: a.omega,
            omegas: a.omegas,
            trunc: a.trunc,
            rank_tol: a.rank_tol,
            zero_tol: a.zero_tol,
            output: a.output,
            format: a.format,
        }
    }
}

impl RunConfig {
    fn check(&self) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{what} must be positive, got {v}")))
            }
        };
        positive(self.omega, "--omega")?;
        positive(self.zero_tol, "--zero-tol")?;
        if let Some(t) = self.rank_tol {
            positive(t, "--rank-tol")?;
        }
        if self.command == Command::Slope {
            if self.omegas.len() < 3 {
                return Err(Error::InvalidArgument("--omegas needs at least three values".into()));
            }
            for &w in &self.omegas {
                positive(w, "--omegas entry")?;
            }
        }
        if self.trunc < 1 {
            return Err(Error::InvalidArgument("--trunc must be at least 1".into()));
        }
        Ok(())
    }

    fn rank_tol_for(&self, spec: &ProblemSpec) -> f64 {
        self.rank_tol.unwrap_or_else(|| spectral::default_rank_tol(spec))
    }
}

/// Complex vector written as a list of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComplexList(#[serde(with = "complex_serde::vec")] pub Vec<C64>);

impl From<&CVector> for ComplexList {
    fn from(v: &CVector) -> Self {
        ComplexList(v.iter().copied().collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub label: Option<String>,
    pub n: usize,
    pub m: usize,
    pub s: usize,
    pub algebraic_multiplicity: usize,
    pub rank_tol: f64,
    #[serde(with = "complex_serde")]
    pub det_delta: C64,
    pub delta_sigma_min: f64,
    pub w_norm: f64,
    pub basis: Vec<ComplexList>,
    /// Constants of the normalized problem.
    pub constants: ConvergenceConstants,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub t: f64,
    pub x: ComplexList,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateReport {
    pub order: usize,
    pub omega: f64,
    pub basis: Vec<ComplexList>,
    pub samples: Vec<SamplePoint>,
    /// Largest ODE residual of the partial sum over the samples.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub hurwitz: StabilityVerdict,
    pub omega: f64,
    pub floquet: Option<FloquetVerdict>,
    /// Set when the Floquet check refused to decide.
    pub floquet_note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeReport {
    pub fit: SlopeFit,
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateReport {
    pub checks: Vec<Check>,
    pub bounds: Option<BoundsReport>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Report {
    Analyze(AnalyzeReport),
    Expand(ExpansionExport),
    Evaluate(EvaluateReport),
    Stability(StabilityReport),
    Slope(SlopeReport),
    Validate(ValidateReport),
}

impl Report {
    pub fn to_structured(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn from_structured(text: &str) -> Result<Report> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Structured => self.to_structured(),
            Format::Text => self.to_text(),
        }
    }

    fn to_text(&self) -> String {
        let mut out = String::new();
        match self {
            Report::Analyze(r) => {
                if let Some(label) = &r.label {
                    let _ = writeln!(out, "problem: {label}");
                }
                let _ = writeln!(out, "n = {}, m = {}", r.n, r.m);
                let _ = writeln!(
                    out,
                    "kernel of A0: s = {} (algebraic multiplicity {}), rank_tol = {:e}",
                    r.s, r.algebraic_multiplicity, r.rank_tol
                );
                write_basis(&mut out, &r.basis);
                let _ = writeln!(out, "det Delta = {}", fmt_c(r.det_delta));
                let _ = writeln!(out, "sigma_min(Delta) = {:e}", r.delta_sigma_min);
                let _ = writeln!(out, "||W|| = {:.6e}", r.w_norm);
                let cc = &r.constants;
                let _ = writeln!(
                    out,
                    "normalized: scale = {:.6e}, K = {}, L = {:.6e}, omega0 = {:.6e}",
                    cc.scale, cc.k, cc.l, cc.omega0
                );
            }
            Report::Expand(e) => {
                let _ = writeln!(out, "expansion to order {} (n = {}, m = {}, s = {})", e.order, e.n, e.m, e.s);
                let _ = writeln!(out, "basis:");
                for a in &e.basis {
                    let _ = writeln!(out, "  a_{} = {}", a.l, fmt_list(&a.v));
                }
                let _ = writeln!(out, "C_-1 = {}", fmt_list(&e.c_lead));
                for lv in &e.levels {
                    let _ = writeln!(out, "order {}:", lv.k);
                    let _ = writeln!(out, "  C = {}", fmt_list(&lv.c));
                    let _ = writeln!(out, "  x = {}", fmt_list(&lv.x));
                    for b in &lv.beta {
                        let _ = writeln!(out, "  beta[{}] = {}", b.l, fmt_list(&b.v));
                    }
                }
            }
            Report::Evaluate(r) => {
                let _ = writeln!(out, "partial sum of order {} at omega = {}", r.order, r.omega);
                write_basis(&mut out, &r.basis);
                let _ = writeln!(out, "ODE residual = {:.6e}", r.residual);
                let _ = writeln!(out, "t\tx");
                for s in &r.samples {
                    let _ = writeln!(out, "{:.12e}\t{}", s.t, fmt_list(&s.x.0));
                }
            }
            Report::Stability(r) => {
                let h = &r.hurwitz;
                let _ = writeln!(out, "Hurwitz series (trunc {}, zero_tol {:e}): {:?}", h.trunc, h.zero_tol, h.kind);
                for (j, l) in h.leading.iter().enumerate() {
                    match l {
                        Leading::Found { q, d } => {
                            let _ = writeln!(out, "  D_{}: first nonzero coefficient d_{q} = {d:.6e}", j + 1);
                        }
                        Leading::ZeroThrough { order } => {
                            let _ = writeln!(out, "  D_{}: zero through order {order}", j + 1);
                        }
                    }
                }
                let _ = writeln!(out, "  {}", h.note);
                match (&r.floquet, &r.floquet_note) {
                    (Some(f), _) => {
                        let _ = writeln!(out, "Floquet at omega = {}: {:?}, margin = {:.6e}", r.omega, f.kind, f.margin);
                    }
                    (None, Some(note)) => {
                        let _ = writeln!(out, "Floquet at omega = {}: undecided ({note})", r.omega);
                    }
                    (None, None) => {}
                }
            }
            Report::Slope(r) => {
                let _ = writeln!(out, "order {}: expected slope {}", r.fit.order, r.expected);
                for (w, e) in r.fit.omegas.iter().zip(&r.fit.errors) {
                    let _ = writeln!(out, "  omega = {w:<10} error = {e:.6e}");
                }
                match r.fit.slope {
                    Some(s) => {
                        let _ = writeln!(out, "fitted slope = {s:.4}");
                    }
                    None => {
                        let _ = writeln!(out, "fitted slope undefined (zero error)");
                    }
                }
            }
            Report::Validate(r) => {
                for ch in &r.checks {
                    let _ = writeln!(
                        out,
                        "[{}] {}: {:.3e} (threshold {:.3e})",
                        if ch.passed { "ok" } else { "FAIL" },
                        ch.name,
                        ch.value,
                        ch.threshold
                    );
                }
                let _ = writeln!(out, "{}", if r.passed { "all checks passed" } else { "some checks failed" });
            }
        }
        out
    }
}

fn fmt_c(z: C64) -> String {
    format!("{:.6e}{:+.6e}i", z.re, z.im)
}

fn fmt_list(v: &[C64]) -> String {
    let parts: Vec<String> = v.iter().map(|z| fmt_c(*z)).collect();
    format!("[{}]", parts.join(", "))
}

fn write_basis(out: &mut String, basis: &[ComplexList]) {
    let _ = writeln!(out, "kernel basis (orthonormal, coefficients refer to it):");
    for (j, a) in basis.iter().enumerate() {
        let _ = writeln!(out, "  a_{} = {}", j + 1, fmt_list(&a.0));
    }
}

fn basis_of(kd: &KernelData) -> Vec<ComplexList> {
    kd.a.iter().map(ComplexList::from).collect()
}

/// Maps an error to its exit status.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Degenerate { .. } => EXIT_DEGENERATE,
        Error::NonUnique { .. } => EXIT_NON_UNIQUE,
        _ => EXIT_IO,
    }
}

/// Runs one command on an already parsed problem.
pub fn run_on(config: &RunConfig, spec: &ProblemSpec) -> Result<Report> {
    config.check()?;
    let rank_tol = config.rank_tol_for(spec);
    match config.command {
        Command::Analyze => {
            let kd = spectral::compute_kernel_data(spec, rank_tol)?;
            let (norm, _) = bounds::normalize(spec);
            let (cc, _, _) = bounds::constants_for(spec, config.rank_tol.unwrap_or_else(|| spectral::default_rank_tol(&norm)))?;
            let dsv = linalg::singular_values(&kd.delta);
            Ok(Report::Analyze(AnalyzeReport {
                label: spec.label.clone(),
                n: spec.n,
                m: spec.m,
                s: kd.s,
                algebraic_multiplicity: kd.algebraic_multiplicity,
                rank_tol,
                det_delta: kd.det_delta(),
                delta_sigma_min: *dsv.last().expect("nonempty Delta"),
                w_norm: kd.w_op_norm(),
                basis: basis_of(&kd),
                constants: cc,
            }))
        }
        Command::Expand => {
            let kd = spectral::compute_kernel_data(spec, rank_tol)?;
            let exp = expansion::expand(spec, &kd, config.order)?;
            Ok(Report::Expand(exp.export()))
        }
        Command::Evaluate => {
            let kd = spectral::compute_kernel_data(spec, rank_tol)?;
            let exp = expansion::expand(spec, &kd, config.order)?;
            let samples = 64;
            let period = std::f64::consts::TAU / config.omega;
            let pts = (0..samples)
                .map(|i| {
                    let t = period * i as f64 / samples as f64;
                    SamplePoint { t, x: ComplexList::from(&expansion::partial_sum(&exp, config.order, config.omega, t)) }
                })
                .collect();
            let residual = expansion::ode_residual(spec, &exp, config.order, config.omega, samples)?;
            Ok(Report::Evaluate(EvaluateReport {
                order: config.order,
                omega: config.omega,
                basis: basis_of(&kd),
                samples: pts,
                residual,
            }))
        }
        Command::Stability => {
            let hurwitz = averaging::hurwitz_analysis(spec, config.trunc, config.zero_tol)?.verdict;
            let (floquet, floquet_note) = match oracle::floquet_verdict(spec, config.omega) {
                Ok(v) => (Some(v), None),
                Err(e @ Error::BoundaryUndecidable { .. }) => (None, Some(e.to_string())),
                Err(e) => return Err(e),
            };
            Ok(Report::Stability(StabilityReport { hurwitz, omega: config.omega, floquet, floquet_note }))
        }
        Command::Slope => {
            let kd = spectral::compute_kernel_data(spec, rank_tol)?;
            let exp = expansion::expand(spec, &kd, config.order)?;
            let fit = oracle::error_slope(spec, &exp, config.order, &config.omegas)?;
            Ok(Report::Slope(SlopeReport { fit, expected: -(config.order as f64 + 1.0) }))
        }
        Command::Validate => validate(spec, config, rank_tol).map(Report::Validate),
    }
}

fn check(checks: &mut Vec<Check>, name: &str, value: f64, threshold: f64) {
    checks.push(Check { name: name.to_string(), passed: value < threshold, value, threshold });
}

fn validate(spec: &ProblemSpec, config: &RunConfig, rank_tol: f64) -> Result<ValidateReport> {
    let mut checks = Vec::new();
    let kd = spectral::compute_kernel_data(spec, rank_tol)?;
    let n = spec.n;

    let kernel_res = kd.a.iter().map(|a| vnorm(&(&spec.a0 * a))).fold(0.0, f64::max);
    check(&mut checks, "A0 a_j", kernel_res, rank_tol);
    let cokernel_res = kd.z.iter().map(|z| vnorm(&(spec.a0.adjoint() * z))).fold(0.0, f64::max);
    check(&mut checks, "A0* z_k", cokernel_res, rank_tol);
    let inv_err = linalg::max_abs(&(&kd.delta * &kd.delta_inv - linalg::identity(kd.s)));
    check(&mut checks, "Delta Delta^-1 - I", inv_err, 1e-10);

    // W contract on seeded random right-hand sides orthogonal to span{z}
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.unwrap_or(0));
    let proj = kd.z_projector();
    let (mut w_res, mut w_orth) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let g = CVector::from_fn(n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let g = &g - &proj * &g;
        let x = &kd.w * &g;
        w_res = w_res.max(vnorm(&(&spec.a0 * &x - &g)) / vnorm(&g).max(f64::MIN_POSITIVE));
        w_orth = kd.a.iter().map(|a| inner(&x, a).norm()).fold(w_orth, f64::max);
    }
    check(&mut checks, "W contract: |A0 W g - g| / |g|", w_res, 1e-10);
    check(&mut checks, "W contract: (W g, a_j)", w_orth, 1e-10);

    let exp = expansion::expand(spec, &kd, config.order)?;
    let fred = exp.fredholm_defects.iter().copied().fold(0.0, f64::max);
    check(&mut checks, "solvability defect", fred, 1e-10);
    let orth = exp
        .levels
        .iter()
        .flat_map(|lv| kd.a.iter().map(move |a| inner(&lv.x, a).norm()))
        .fold(0.0, f64::max);
    check(&mut checks, "(x_k, a_j)", orth, 1e-10);
    let support = exp
        .levels
        .iter()
        .enumerate()
        .map(|(k, lv)| lv.y.max_harmonic() as f64 - ((k + 1) * spec.m) as f64)
        .fold(f64::NEG_INFINITY, f64::max);
    check(&mut checks, "harmonic support excess of y_k", support.max(0.0), 0.5);
    let mean = exp
        .levels
        .iter()
        .map(|lv| vnorm(&model::quadrature_mean(n, 4 * (lv.y.max_harmonic() as usize + 1), |t| lv.y.eval(t))))
        .fold(0.0, f64::max);
    check(&mut checks, "mean of y_k", mean, 1e-12);

    // growth estimates on the normalized problem
    let (norm, _) = bounds::normalize(spec);
    let bounds_report = match bounds::constants_for(spec, spectral::default_rank_tol(&norm)) {
        Ok((cc, norm, nkd)) => {
            let nexp = expansion::expand(&norm, &nkd, config.order.max(1))?;
            let rep = bounds::check_growth(&nexp, &cc, config.order.max(1));
            let ok = |b: bool| if b { 0.0 } else { 1.0 };
            check(&mut checks, "growth recursion for phi", ok(rep.phi_recursion_ok), 0.5);
            check(&mut checks, "growth bound for theta", ok(rep.theta_bound_ok), 0.5);
            check(&mut checks, "growth bound for mu", ok(rep.mu_bound_ok), 0.5);
            Some(rep)
        }
        Err(_) => None,
    };

    if spec.real_mode {
        let fa = averaging::formal_average(spec, config.trunc)?;
        let a1_err = linalg::max_abs(&(fa.series.coeff(1) - &kd.a1));
        check(&mut checks, "A_1 vs closed form", a1_err, 1e-10);
        check(&mut checks, "imaginary part of A_k", fa.series.max_imag(), 1e-10);
    }

    match oracle::periodic_solution(spec, config.omega, oracle::DEFAULT_TOL) {
        Ok(sol) => {
            check(&mut checks, "oracle periodicity defect", sol.periodicity_defect, oracle::PERIODICITY_TOL);
            check(&mut checks, "oracle ODE residual", oracle::solution_residual(spec, &sol), oracle::RESIDUAL_TOL);
            checks.push(Check {
                name: "uniqueness: sigma_min(I - Phi)".into(),
                passed: true,
                value: sol.sigma_min,
                threshold: oracle::UNIQUENESS_TOL,
            });
        }
        Err(Error::NonUnique { sigma_min, .. }) => checks.push(Check {
            name: "uniqueness: sigma_min(I - Phi)".into(),
            passed: false,
            value: sigma_min,
            threshold: oracle::UNIQUENESS_TOL,
        }),
        Err(e) => return Err(e),
    }

    let passed = checks.iter().all(|c| c.passed);
    Ok(ValidateReport { checks, bounds: bounds_report, passed })
}

/// Reads the problem, runs the command and returns `(exit status, output)`.
/// Errors are returned as the exit status plus a diagnostic message.
pub fn run(config: &RunConfig) -> (i32, std::result::Result<String, String>) {
    let outcome = model::read_problem_file(&config.problem_path).and_then(|spec| run_on(config, &spec));
    match outcome {
        Ok(report) => {
            let code = match &report {
                Report::Validate(v) if !v.passed => EXIT_VALIDATION_FAILED,
                _ => EXIT_OK,
            };
            (code, Ok(report.render(config.format)))
        }
        Err(e) => (exit_code(&e), Err(e.to_string())),
    }
}

/// Entry point used by the binary.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_IO } else { EXIT_OK };
        }
    };
    let config = RunConfig::from(cli);
    let (code, out) = run(&config);
    match out {
        Ok(text) => {
            let written = match &config.output {
                Some(path) => std::fs::write(path, &text),
                None => {
                    print!("{text}");
                    Ok(())
                }
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return EXIT_IO;
            }
            code
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            code
        }
    }
}
