//! Command-line front end. [`run_cli`] parses, dispatches and maps
//! outcomes to exit codes: 0 on success, 1 on solver failure, 2 on usage error.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::constants::{derived_constants, AssumptionClass, ConstantsReport};
use crate::error::{Error, Result};
use crate::format::{fmt_f64, to_json};
use crate::hodge::{
    annulus, betti, complex_to_string, filled_triangle, hodge_decompose, hollow_triangle, orthogonality_report,
    path_graph, random_cochain, random_flag_complex, read_complex, write_split_csv, SimplicialComplex,
};
use crate::ipm::{
    ipm_reference, ipm_solve, spd_error_oracle, write_trace_csv, IpmConfig, IpmTrace, QGeometry, ReferenceSolution,
    SpdErrorPrediction, Termination, DEFAULT_MAX_ITERS, DEFAULT_TOL1, DEFAULT_TOL2,
};
use crate::lab::{
    gen_class, gen_example31, gen_synthetic, mode_split_study, mode_split_study_with, shifted_base, sweep_beta,
    write_mode_split_csv, write_sweep_csv, AKind, LoadKind, ModeSplitRow, SweepSetup, SyntheticSpec,
};
use crate::penalty::{
    penalty_error_check, penalty_solve, penalty_solve_form, penalty_stability_check, write_bound_csv, BoundCheck,
    PenaltyPath,
};
use crate::problem::{
    kkt_solve, problem_to_string, read_problem_file, to_div_gram, toy_problem, ProblemFile,
    SaddleProblem,
};

#[derive(Parser, Debug)]
#[command(name = "saddle-ipm", version, about = "Penalty and iterated penalty solvers for saddle point problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// Problem file (JSON).
    #[arg(long)]
    problem: Option<PathBuf>,
    #[arg(long)]
    rho: Option<f64>,
    /// Defaults to rho.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    tol1: Option<f64>,
    #[arg(long)]
    tol2: Option<f64>,
    #[arg(long = "max-iters")]
    max_iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Machine-readable report on standard output.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Direct solve of the (optionally penalized) saddle point system.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
    },
    /// Penalty solve at one epsilon, or bound checks over a grid.
    Penalty {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1e-2)]
        eps: f64,
        /// Comma-separated epsilons for the stability and error bound checks.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value_t = PathArg::Both)]
        path: PathArg,
    },
    /// Iterated penalty method.
    Ipm {
        #[command(flatten)]
        common: Common,
    },
    /// Constants report.
    Analyze {
        #[command(flatten)]
        common: Common,
    },
    /// Hodge decomposition of a cochain.
    Hodge {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        complex: PathBuf,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Comma-separated cochain; random entries in [-0.5, 0.5] when absent.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        cochain: Option<Vec<f64>>,
    },
    /// Writes a generated problem or complex as JSON.
    Gen {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        gen: GenArgs,
    },
    /// Iteration counts and errors as the inf-sup constant shrinks.
    SweepBeta {
        #[command(flatten)]
        common: Common,
        /// Comma-separated values of the smallest singular value of D.
        #[arg(long, value_delimiter = ',')]
        deltas: Option<Vec<f64>>,
        /// First-mode load coefficient.
        #[arg(long, default_value_t = 5e-3)]
        c1: f64,
        #[arg(long, default_value_t = 12)]
        n: usize,
    },
    /// First-mode against remaining-mode error predictions per iteration.
    ModeSplit {
        #[command(flatten)]
        common: Common,
        /// Smallest singular value of the synthetic problem used without --problem.
        #[arg(long, default_value_t = 1e-6)]
        delta: f64,
    },
}

#[derive(Args, Debug, Clone)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Option<GenKind>,
    #[arg(long, value_enum, conflicts_with = "kind")]
    complex: Option<ComplexKind>,
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Comma-separated ascending singular values of D.
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.75,1")]
    sigmas: Vec<f64>,
    #[arg(long = "lambda-min", default_value_t = 1.0)]
    lambda_min: f64,
    #[arg(long = "lambda-max", default_value_t = 2.0)]
    lambda_max: f64,
    #[arg(long, default_value_t = 0.0)]
    omega2: f64,
    #[arg(long, default_value_t = 0.5)]
    skew: f64,
    #[arg(long, value_enum, default_value_t = ClassArg::A3)]
    class: ClassArg,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    alpha0: f64,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    alpha1: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Vertex count for path and random complexes.
    #[arg(long, default_value_t = 6)]
    vertices: usize,
    #[arg(long = "edge-prob", default_value_t = 0.5)]
    edge_prob: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum PathArg {
    Coupled,
    Eliminated,
    Both,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum GenKind {
    Toy,
    Example31,
    Spd,
    Shifted,
    Nonsymmetric,
    RankDeficient,
    Class,
    ShiftedBase,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum ComplexKind {
    Path,
    HollowTriangle,
    FilledTriangle,
    Annulus,
    Random,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum ClassArg {
    A3,
    A1,
    A2,
    None,
}

enum Failure {
    Usage(String),
    Solver(Error),
    /// Ran to completion but did not meet its criterion.
    Unmet(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::TolOrder { .. } => Failure::Usage(e.to_string()),
            e => Failure::Solver(e),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Solver(e.into())
    }
}

type CliResult = std::result::Result<(), Failure>;

/// Runs the command line `argv` (program name first), writing to standard output and error.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_cli_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run_cli`] with explicit output streams.
pub fn run_cli_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "usage error: {m}");
            2
        }
        Err(Failure::Solver(e)) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
        Err(Failure::Unmet(m)) => {
            let _ = writeln!(err, "{m}");
            1
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> CliResult {
    match cmd {
        Command::Solve { common, eps } => cmd_solve(&common, eps, out),
        Command::Penalty { common, eps, grid, path } => cmd_penalty(&common, eps, grid.as_deref(), path, out),
        Command::Ipm { common } => cmd_ipm(&common, out),
        Command::Analyze { common } => cmd_analyze(&common, out),
        Command::Hodge { common, complex, k, cochain } => cmd_hodge(&common, complex, k, cochain, out),
        Command::Gen { common, gen } => cmd_gen(&common, &gen, out),
        Command::SweepBeta { common, deltas, c1, n } => cmd_sweep(&common, deltas, c1, n, out),
        Command::ModeSplit { common, delta } => cmd_mode_split(&common, delta, out),
    }
}

fn config(c: &Common, rho: f64, tol1: f64, tol2: f64) -> IpmConfig {
    let rho = c.rho.unwrap_or(rho);
    IpmConfig {
        lambda: c.lambda.unwrap_or(rho),
        rho,
        tol1: c.tol1.unwrap_or(tol1),
        tol2: c.tol2.unwrap_or(tol2),
        max_iters: c.max_iters.unwrap_or(DEFAULT_MAX_ITERS),
    }
}

fn default_config(c: &Common) -> IpmConfig {
    config(c, 1e3, DEFAULT_TOL1, DEFAULT_TOL2)
}

fn problem_file(c: &Common) -> std::result::Result<ProblemFile, Failure> {
    match &c.problem {
        Some(p) => Ok(read_problem_file(p)?),
        None => Err(Failure::Usage("--problem is required".into())),
    }
}

fn explicit(c: &Common) -> std::result::Result<SaddleProblem, Failure> {
    match problem_file(c)? {
        ProblemFile::Explicit(p) => Ok(p),
        ProblemFile::DivGram(_) => {
            Err(Failure::Solver(Error::NotApplicable("this command needs a problem with a Q basis".into())))
        }
    }
}

fn vec_str(v: &[f64]) -> String {
    format!("[{}]", v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(", "))
}

fn emit_json(out: &mut dyn Write, v: &serde_json::Value) -> CliResult {
    writeln!(out, "{}", to_json(v).map_err(|e| Error::Io(e.to_string()))?)?;
    Ok(())
}

fn csv_target(c: &Common) -> std::result::Result<Option<File>, Failure> {
    match &c.out {
        Some(p) => Ok(Some(File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?)),
        None => Ok(None),
    }
}

fn cmd_solve(c: &Common, eps: f64, out: &mut dyn Write) -> CliResult {
    let p = explicit(c)?;
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Failure::Usage(format!("--eps must be non-negative, got {eps}")));
    }
    let sol = kkt_solve(&p, eps)?;
    let pr = sol.p().unwrap_or(&[]).to_vec();
    let (r1, r2) = p.kkt_residuals(&sol.u, &pr, eps);
    if c.json {
        return emit_json(out, &json!({"eps": eps, "u": sol.u, "p": pr, "residual_primal": r1, "residual_constraint": r2}));
    }
    writeln!(out, "u = {}", vec_str(&sol.u))?;
    writeln!(out, "p = {}", vec_str(&pr))?;
    writeln!(out, "relative residuals: primal {} constraint {}", fmt_f64(r1), fmt_f64(r2))?;
    Ok(())
}

fn penalty_path(p: PathArg) -> PenaltyPath {
    match p {
        PathArg::Coupled => PenaltyPath::Coupled,
        PathArg::Eliminated => PenaltyPath::Eliminated,
        PathArg::Both => PenaltyPath::Both,
    }
}

fn cmd_penalty(c: &Common, eps: f64, grid: Option<&[f64]>, path: PathArg, out: &mut dyn Write) -> CliResult {
    if let Some(grid) = grid {
        let p = explicit(c)?;
        let stab = penalty_stability_check(&p, grid)?;
        let errs = penalty_error_check(&p, grid)?;
        let rows: Vec<(f64, &[BoundCheck])> = stab
            .iter()
            .map(|r| (r.eps, r.checks.as_slice()))
            .chain(errs.iter().map(|r| (r.eps, r.checks.as_slice())))
            .collect();
        if let Some(f) = csv_target(c)? {
            write_bound_csv(f, rows.iter().copied())?;
        }
        let all_pass = rows.iter().all(|(_, cs)| cs.iter().all(|b| b.pass));
        if c.json {
            let list: Vec<_> = rows
                .iter()
                .flat_map(|(e, cs)| cs.iter().map(move |b| json!({"eps": e, "inequality": b.name, "measured": b.measured, "bound": b.bound, "pass": b.pass})))
                .collect();
            emit_json(out, &json!({"checks": list, "passed": all_pass}))?;
        } else {
            for (e, cs) in &rows {
                for b in cs.iter() {
                    let tag = if b.pass { "ok  " } else { "FAIL" };
                    writeln!(out, "{tag} eps={} {}: {} <= {}", fmt_f64(*e), b.name, fmt_f64(b.measured), fmt_f64(b.bound))?;
                }
            }
        }
        return if all_pass { Ok(()) } else { Err(Failure::Unmet("some penalty bounds failed".into())) };
    }
    let (u, pr) = match problem_file(c)? {
        ProblemFile::Explicit(p) => {
            let s = penalty_solve(&p, eps, penalty_path(path))?;
            (s.u.clone(), Some(s.p().unwrap_or(&[]).to_vec()))
        }
        ProblemFile::DivGram(form) => {
            let s = penalty_solve_form(&form, eps)?;
            (s.u, None)
        }
    };
    if c.json {
        return emit_json(out, &json!({"eps": eps, "u": u, "p": pr}));
    }
    writeln!(out, "u = {}", vec_str(&u))?;
    match pr {
        Some(p) => writeln!(out, "p = {}", vec_str(&p))?,
        None => writeln!(out, "p: no Q basis in the problem file; pressure available only as D((u - y)/eps)")?,
    }
    Ok(())
}

fn cmd_ipm(c: &Common, out: &mut dyn Write) -> CliResult {
    let cfg = default_config(c);
    let file = problem_file(c)?;
    let (trace, subsolve, u, pressure, prediction): (IpmTrace, Option<usize>, Vec<f64>, Option<Vec<f64>>, Option<SpdErrorPrediction>) =
        match &file {
            ProblemFile::Explicit(p) => {
                let reference = ReferenceSolution::from_problem(p).ok();
                let (mut trace, sub, pr) = if cfg.lambda != cfg.rho {
                    let t = ipm_reference(p, &cfg)?;
                    let pr = t.last().and_then(|r| r.pressure_coefficients().map(<[f64]>::to_vec));
                    (t, None, pr)
                } else {
                    let form = to_div_gram(p)?;
                    let sol = ipm_solve(&form, &cfg)?;
                    let pr = sol.pressure.materialize(&p.dc);
                    (sol.main.clone(), sol.subsolve.as_ref().map(|t| t.records.len()), Some(pr))
                };
                if let Some(r) = &reference {
                    trace.annotate(&to_div_gram(p)?, r, Some(QGeometry::of(p)));
                }
                let pred = spd_error_oracle(p, &cfg, trace.records.len()).ok();
                let u = trace.last().map(|r| r.u.clone()).unwrap_or_default();
                (trace, sub, u, pr, pred)
            }
            ProblemFile::DivGram(form) => {
                let sol = ipm_solve(form, &cfg)?;
                let pred = spd_error_oracle(form, &cfg, sol.main.records.len()).ok();
                (sol.main.clone(), sol.subsolve.as_ref().map(|t| t.records.len()), sol.u, None, pred)
            }
        };
    if let Some(f) = csv_target(c)? {
        write_trace_csv(f, &trace, prediction.as_ref())?;
    }
    let converged = trace.termination == Termination::Converged;
    if c.json {
        emit_json(
            out,
            &json!({
                "iterations": trace.records.len(),
                "termination": format!("{:?}", trace.termination),
                "final_residual": trace.final_residual(),
                "subsolve_iterations": subsolve,
                "u": u,
                "p": pressure,
            }),
        )?;
    } else {
        writeln!(out, "termination: {:?} after {} iterations", trace.termination, trace.records.len())?;
        if let Some(n) = subsolve {
            writeln!(out, "riesz subsolve: {n} iterations")?;
        }
        writeln!(out, "final residual: {}", fmt_f64(trace.final_residual()))?;
        writeln!(out, "u = {}", vec_str(&u))?;
        if let Some(p) = &pressure {
            writeln!(out, "p = {}", vec_str(p))?;
        }
    }
    if converged {
        Ok(())
    } else {
        Err(Failure::Solver(Error::MaxIters { iterations: trace.records.len(), residual: trace.final_residual() }))
    }
}

fn constants_of(file: &ProblemFile) -> Result<ConstantsReport> {
    match file {
        ProblemFile::Explicit(p) => derived_constants(p),
        ProblemFile::DivGram(f) => derived_constants(f),
    }
}

fn cmd_analyze(c: &Common, out: &mut dyn Write) -> CliResult {
    let file = problem_file(c)?;
    let r = constants_of(&file)?;
    let rate = c.rho.map(|rho| r.predicted_rate(rho).ok());
    if c.json {
        let mut v = serde_json::to_value(&r).map_err(|e| Error::Io(e.to_string()))?;
        if let (Some(rho), Some(obj)) = (c.rho, v.as_object_mut()) {
            obj.insert("rho".into(), json!(rho));
            obj.insert("predicted_rate".into(), json!(rate.flatten()));
        }
        return emit_json(out, &v);
    }
    writeln!(out, "class: {}", r.class)?;
    for (name, v) in [
        ("M_a", r.m_a),
        ("M_D", r.m_d),
        ("alpha_X", r.alpha),
        ("beta_X", r.beta),
        ("Phi_X", r.phi),
        ("Upsilon_X", r.upsilon),
        ("eps0", r.eps0),
        ("rho0", r.rho0),
    ] {
        writeln!(out, "{name}: {}", fmt_f64(v))?;
    }
    if let Some(a) = r.alpha_tilde {
        writeln!(out, "alpha_tilde_X: {}", fmt_f64(a))?;
    }
    writeln!(out, "kernel dimension: {}", r.kernel_dim)?;
    if let (Some(rho), Some(rate)) = (c.rho, rate) {
        match rate {
            Some(q) => writeln!(out, "predicted rate at rho={}: {}", fmt_f64(rho), fmt_f64(q))?,
            None => writeln!(out, "predicted rate at rho={}: undefined (rho <= rho0)", fmt_f64(rho))?,
        }
    }
    Ok(())
}

fn cmd_hodge(c: &Common, path: PathBuf, k: usize, cochain: Option<Vec<f64>>, out: &mut dyn Write) -> CliResult {
    let cx = read_complex(&path)?;
    if k > cx.top() {
        return Err(Failure::Usage(format!("--k {k} exceeds the top dimension {}", cx.top())));
    }
    let u = cochain.unwrap_or_else(|| random_cochain(cx.count(k), c.seed.unwrap_or(0)));
    let cfg = default_config(c);
    let split = hodge_decompose(&cx, k, &u, &cfg)?;
    let orth = orthogonality_report(&split, cx.weight(k));
    if let Some(f) = csv_target(c)? {
        write_split_csv(f, &split, &orth)?;
    }
    let b = betti(&cx);
    if c.json {
        return emit_json(out, &json!({"split": split, "orthogonality": orth, "betti": b}));
    }
    writeln!(out, "betti numbers: {b:?}")?;
    let it = split.iterations;
    let show = |v: Option<usize>| v.map_or("-".to_string(), |n| n.to_string());
    writeln!(
        out,
        "iterations: exact-part subsolve {}, exact-part main {}, coexact {}",
        show(it.exact_subsolve),
        show(it.exact_main),
        show(it.coexact)
    )?;
    writeln!(out, "{:>5} {:>24} {:>24} {:>24} {:>24}", "i", "u", "d_sigma", "harmonic", "coexact")?;
    for i in 0..u.len() {
        writeln!(
            out,
            "{i:>5} {:>24} {:>24} {:>24} {:>24}",
            fmt_f64(u[i]),
            fmt_f64(split.exact[i]),
            fmt_f64(split.harmonic[i]),
            fmt_f64(split.coexact[i])
        )?;
    }
    writeln!(out, "(h, d_sigma)_W     = {}", fmt_f64(orth.harmonic_exact))?;
    writeln!(out, "(h, coexact)_W     = {}", fmt_f64(orth.harmonic_coexact))?;
    writeln!(out, "(d_sigma, coexact)_W = {}", fmt_f64(orth.exact_coexact))?;
    Ok(())
}

fn class_of(c: ClassArg) -> AssumptionClass {
    match c {
        ClassArg::A3 => AssumptionClass::A3,
        ClassArg::A1 => AssumptionClass::A1,
        ClassArg::A2 => AssumptionClass::A2,
        ClassArg::None => AssumptionClass::None,
    }
}

fn generated_complex(kind: ComplexKind, g: &GenArgs, seed: u64) -> SimplicialComplex {
    match kind {
        ComplexKind::Path => path_graph(g.vertices),
        ComplexKind::HollowTriangle => hollow_triangle(),
        ComplexKind::FilledTriangle => filled_triangle(),
        ComplexKind::Annulus => annulus(),
        ComplexKind::Random => random_flag_complex(g.vertices, g.edge_prob, seed),
    }
}

fn cmd_gen(c: &Common, g: &GenArgs, out: &mut dyn Write) -> CliResult {
    let seed = c.seed.unwrap_or(0);
    let text = match (g.kind, g.complex) {
        (_, Some(kind)) => complex_to_string(&generated_complex(kind, g, seed))?,
        (Some(kind), None) => {
            let (lo, hi) = (g.lambda_min, g.lambda_max);
            let spec = |a: AKind| SyntheticSpec::new(g.n, g.sigmas.clone(), a, seed);
            let p = match kind {
                GenKind::Toy => toy_problem(),
                GenKind::Example31 => gen_example31(g.alpha0, g.alpha1, g.beta)?.problem,
                GenKind::Spd => gen_synthetic(&spec(AKind::Spd { lambda_min: lo, lambda_max: hi }))?,
                GenKind::Shifted => {
                    gen_synthetic(&spec(AKind::Shifted { lambda_min: lo, lambda_max: hi, omega2: g.omega2 }))?
                }
                GenKind::Nonsymmetric => {
                    gen_synthetic(&spec(AKind::Nonsymmetric { lambda_min: lo, lambda_max: hi, skew: g.skew }))?
                }
                GenKind::RankDeficient => {
                    gen_synthetic(&spec(AKind::RankDeficient { lambda_min: lo, lambda_max: hi }))?
                }
                GenKind::Class => gen_class(class_of(g.class), g.n, seed)?.problem,
                GenKind::ShiftedBase => shifted_base(seed)?,
            };
            problem_to_string(&p)?
        }
        (None, None) => return Err(Failure::Usage("gen needs --kind or --complex".into())),
    };
    match &c.out {
        Some(path) => std::fs::write(path, text)?,
        None => writeln!(out, "{text}")?,
    }
    Ok(())
}

fn cmd_sweep(c: &Common, deltas: Option<Vec<f64>>, c1: f64, n: usize, out: &mut dyn Write) -> CliResult {
    let grid = deltas.unwrap_or_else(|| (1..=10).map(|k| 10f64.powi(-k)).collect());
    if grid.iter().any(|d| !(*d > 0.0 && *d <= 0.5)) {
        return Err(Failure::Usage("deltas must lie in (0, 0.5]".into()));
    }
    let cfg = config(c, 1e3, 1e-13, 1e-12);
    let base = SweepSetup::default();
    if n < base.other_sigmas.len() + 1 {
        return Err(Failure::Usage(format!("--n must be at least {}", base.other_sigmas.len() + 1)));
    }
    let setup = SweepSetup { n, load: LoadKind::FirstMode { c1 }, seed: c.seed.unwrap_or(base.seed), ..base };
    let rep = sweep_beta(&grid, &setup, &cfg)?;
    if let Some(f) = csv_target(c)? {
        write_sweep_csv(f, &rep)?;
    }
    if c.json {
        return emit_json(out, &serde_json::to_value(&rep).map_err(|e| Error::Io(e.to_string()))?);
    }
    writeln!(
        out,
        "{:>8} {:>6} {:>10} {:>12} {:>12} {:>12} {:>12} {:>6} {:>7}",
        "delta", "iters", "stop", "residual", "pred.resid", "err_p", "pred.err_p", "pred.n", "flagged"
    )?;
    for r in &rep.rows {
        writeln!(
            out,
            "{:>8.1e} {:>6} {:>10} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>6} {:>7}",
            r.delta,
            r.iterations,
            format!("{:?}", r.termination),
            r.final_residual,
            r.predicted_residual,
            r.err_p_q,
            r.predicted_err_p_q,
            r.predicted_iterations.map_or("-".into(), |n| n.to_string()),
            r.flagged
        )?;
    }
    Ok(())
}

fn cmd_mode_split(c: &Common, delta: f64, out: &mut dyn Write) -> CliResult {
    let cfg = config(c, 1e3, 1e-13, 1e-12);
    let rows: Vec<ModeSplitRow> = match &c.problem {
        Some(_) => mode_split_study(&explicit(c)?, &cfg)?,
        None => {
            let base = SweepSetup::default();
            let setup = SweepSetup { seed: c.seed.unwrap_or(base.seed), ..base };
            let s = setup.problem(delta)?;
            mode_split_study_with(&s.problem, &s.exact_solution()?, &cfg)?
        }
    };
    if let Some(f) = csv_target(c)? {
        write_mode_split_csv(f, &rows)?;
    }
    if c.json {
        return emit_json(out, &serde_json::to_value(&rows).map_err(|e| Error::Io(e.to_string()))?);
    }
    writeln!(out, "{:>5} {:>12} {:>12} {:>12} {:>12} {:>12}", "iter", "p_first", "p_rest", "u_a_first", "u_a_rest", "measured_p")?;
    for r in &rows {
        writeln!(
            out,
            "{:>5} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>12}",
            r.iter,
            r.p_q_first,
            r.p_q_rest,
            r.u_a_first,
            r.u_a_rest,
            r.measured_p_q.map_or("-".into(), |v| format!("{v:.4e}"))
        )?;
    }
    Ok(())
}
