//! `twosided`: generate instances, solve the LP, run policies and verify properties.

mod report;
mod suites;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use twosided::cost::OracleConfig;
use twosided::ellipsoid::{solve_lp2_approx, ApproxSolution, EllipsoidConfig};
use twosided::evaluate::{monte_carlo, Estimate};
use twosided::lp::{build_aux_primal, lp2_exact_small, LP2_MAX_CUSTOMERS, LP2_MAX_SUPPLIERS};
use twosided::policies::{
    exact_dp_atar, exact_dp_ftar, exact_star, RandomizedStatic, SameOrderGreedy, DP_MAX_CUSTOMERS, DP_MAX_SUPPLIERS,
    GREEDY_TREE_MAX_SIDE, INDEPENDENT_MAX_CUSTOMERS,
};
use twosided::{generate, Error, GeneratorKind, Instance};

use report::{Cell, Format, Report};
use suites::Suite;

#[derive(Debug, Parser)]
#[command(name = "twosided", version, about = "Two-sided assortment optimization under MNL choice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Output {
    /// Report file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Rows)]
    format: Format,
}

#[derive(Debug, clap::Args)]
struct SolverArgs {
    /// Oracle accuracy: sets within a (1 - delta) factor of the best are accepted.
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    /// Ellipsoid iteration budget (default from the instance size).
    #[arg(long)]
    t_max: Option<u64>,
}

impl SolverArgs {
    fn config(&self) -> Result<EllipsoidConfig, Failure> {
        let oracle = OracleConfig::with_delta(self.delta).map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(EllipsoidConfig { oracle, t_max: self.t_max, ..EllipsoidConfig::default() })
    }

    fn record(&self, report: &mut Report) {
        report.config("delta", self.delta);
        report.config("t_max", self.t_max.map_or("default".to_string(), |t| t.to_string()));
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a random instance file.
    Gen {
        #[arg(value_parser = parse_kind)]
        kind: GeneratorKind,
        n: usize,
        m: usize,
        #[arg(long)]
        seed: u64,
        /// Instance file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Approximately solve the LP relaxation with the ellipsoid method.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the restricted LP that recovers the primal solution.
        #[arg(long)]
        dump_lp: Option<PathBuf>,
        /// Write the primal solution.
        #[arg(long)]
        solution: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Evaluate a policy on an instance.
    Run {
        instance: PathBuf,
        #[arg(long, value_enum)]
        policy: PolicyKind,
        /// Monte Carlo trials for randomized policies.
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        output: Output,
    },
    /// Run property suites; exits 4 if any check fails.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyKind {
    RandStatic,
    Greedy,
    Dp,
    Ftar,
    Star,
}

impl PolicyKind {
    fn name(self) -> &'static str {
        match self {
            PolicyKind::RandStatic => "rand-static",
            PolicyKind::Greedy => "greedy",
            PolicyKind::Dp => "dp",
            PolicyKind::Ftar => "ftar",
            PolicyKind::Star => "star",
        }
    }
}

fn parse_kind(s: &str) -> Result<GeneratorKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, thiserror::Error)]
enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("policy precondition: {0}")]
    Precondition(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Solver(_) => 2,
            Failure::Precondition(_) => 3,
            Failure::Verification(_) => 4,
        }
    }

    /// Classifies a library error raised while solving.
    fn solver(e: Error) -> Self {
        match e {
            Error::SizeLimit { .. } | Error::MissingCertificate => Failure::Precondition(e.to_string()),
            Error::InvalidArgument(_) => Failure::Usage(e.to_string()),
            _ => Failure::Solver(e.to_string()),
        }
    }

    /// Classifies a library error raised by a policy or oracle.
    fn policy(e: Error) -> Self {
        match e {
            Error::SizeLimit { .. } | Error::MissingCertificate | Error::InfeasibleMarginals(_) => {
                Failure::Precondition(e.to_string())
            }
            _ => Failure::solver(e),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Usage(format!("{}: {e}", path.display()))
}

fn load(path: &Path) -> Result<Instance, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    Instance::from_json(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| io_failure(path, e))
}

fn emit(report: &Report, output: &Output) -> Result<(), Failure> {
    report.emit(output.format, output.out.as_deref()).map_err(|e| Failure::Usage(e.to_string()))
}

fn cmd_gen(kind: GeneratorKind, n: usize, m: usize, seed: u64, out: &Path) -> Result<(), Failure> {
    let inst = generate(kind, n, m, seed).map_err(|e| Failure::Usage(e.to_string()))?;
    let mut text = inst.to_json();
    text.push('\n');
    write(out, &text)
}

fn exact_fits(inst: &Instance) -> bool {
    inst.n() <= LP2_MAX_CUSTOMERS && inst.m() <= LP2_MAX_SUPPLIERS
}

fn dp_fits(inst: &Instance) -> bool {
    inst.n() <= DP_MAX_CUSTOMERS && inst.m() <= DP_MAX_SUPPLIERS
}

/// Guarantee `(1 − δ)/CorrGap` of the randomized static policy.
fn guarantee(inst: &Instance, delta: f64) -> f64 {
    let e = std::f64::consts::E;
    let gap = if inst.is_supplier_uniform() { e / (e - 1.0) } else { 2.0 };
    (1.0 - delta) / gap
}

fn approx(inst: &Instance, solver: &SolverArgs) -> Result<ApproxSolution, Failure> {
    solve_lp2_approx(inst, &solver.config()?).map_err(Failure::solver)
}

fn cmd_solve(
    path: &Path,
    solver: &SolverArgs,
    dump_lp: Option<&Path>,
    solution: Option<&Path>,
    output: &Output,
) -> Result<(), Failure> {
    let inst = load(path)?;
    let sol = approx(&inst, solver)?;
    if let Some(p) = dump_lp {
        let (lp, _) = build_aux_primal(&inst, &sol.run.violated);
        write(p, &(serde_json::to_string_pretty(&lp).expect("lp serializes") + "\n"))?;
    }
    if let Some(p) = solution {
        write(p, &(serde_json::to_string_pretty(&sol.solution).expect("solution serializes") + "\n"))?;
    }
    let exact = if exact_fits(&inst) { Some(lp2_exact_small(&inst).map_err(Failure::solver)?.objective) } else { None };
    let objective = sol.solution.objective;
    let counts = sol.run.violated.counts().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ");

    let mut report = Report::new(
        "solve",
        &[
            "objective",
            "dual_bound",
            "exact",
            "ratio",
            "guarantee",
            "iterations",
            "t_max",
            "stop",
            "violated_total",
            "violated_per_supplier",
        ],
    );
    report.config("instance", path.display()).config("n", inst.n()).config("m", inst.m());
    solver.record(&mut report);
    let ratio = exact.filter(|&e| e > 0.0).map(|e| objective / e);
    report.row(vec![
        objective.into(),
        sol.dual_bound().into(),
        exact.into(),
        ratio.into(),
        guarantee(&inst, solver.delta).into(),
        sol.run.iterations.into(),
        sol.run.t_max.into(),
        serde_json::to_value(sol.run.stop).expect("stop reason serializes").as_str().unwrap_or_default().into(),
        sol.run.violated.total().into(),
        counts.into(),
    ]);
    emit(&report, output)
}

/// What a policy evaluation produced.
#[derive(Default)]
struct PolicyValue {
    exact: Option<f64>,
    estimate: Option<Estimate>,
    lp_objective: Option<f64>,
    note: String,
}

fn evaluate_policy(inst: &Instance, policy: PolicyKind, trials: u64, seed: u64, solver: &SolverArgs) -> Result<PolicyValue, Failure> {
    let mut v = PolicyValue::default();
    match policy {
        PolicyKind::Dp => v.exact = Some(exact_dp_atar(inst).map_err(Failure::policy)?.value),
        PolicyKind::Ftar => {
            let identity: Vec<usize> = (0..inst.n()).collect();
            v.exact = Some(exact_dp_ftar(inst, &identity).map_err(Failure::policy)?);
            v.note = "identity order".into();
        }
        PolicyKind::Star => v.exact = Some(exact_star(inst).map_err(Failure::policy)?),
        PolicyKind::RandStatic => {
            let sol = approx(inst, solver)?;
            v.lp_objective = Some(sol.solution.objective);
            let policy = RandomizedStatic::new(inst, &sol.solution).map_err(Failure::policy)?;
            if inst.n() <= INDEPENDENT_MAX_CUSTOMERS {
                v.exact = Some(policy.exact_value(inst).map_err(Failure::policy)?);
            }
            let est = monte_carlo(trials, seed, |rng| policy.sample(inst, rng).expected_revenue);
            v.estimate = Some(est.map_err(|e| Failure::Usage(e.to_string()))?);
            v.note = format!("guarantee {}", guarantee(inst, solver.delta));
        }
        PolicyKind::Greedy => {
            let cert = inst.detect_same_order();
            let policy = SameOrderGreedy::new(inst, cert.as_ref()).map_err(Failure::policy)?;
            if inst.n() <= GREEDY_TREE_MAX_SIDE {
                let eval = policy.exact(inst).map_err(Failure::policy)?;
                v.exact = Some(eval.expected_revenue);
                v.note = format!("{} paths, identity error {:e}", eval.paths, eval.max_identity_error);
            }
            let est = monte_carlo(trials, seed, |rng| policy.sample(inst, rng).expected_revenue);
            v.estimate = Some(est.map_err(|e| Failure::Usage(e.to_string()))?);
            let order = policy.order().iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
            v.note = if v.note.is_empty() { format!("order {order}") } else { format!("order {order}; {}", v.note) };
        }
    }
    Ok(v)
}

fn cmd_run(path: &Path, policy: PolicyKind, trials: u64, seed: u64, solver: &SolverArgs, output: &Output) -> Result<(), Failure> {
    let inst = load(path)?;
    let v = evaluate_policy(&inst, policy, trials, seed, solver)?;
    let opt = if dp_fits(&inst) { Some(exact_dp_atar(&inst).map_err(Failure::policy)?.value) } else { None };
    let value = v.exact.or(v.estimate.map(|e| e.mean));
    let ratio = match (value, opt) {
        (Some(a), Some(b)) if b > 0.0 => Some(a / b),
        _ => None,
    };
    let mut report = Report::new(
        "run",
        &["policy", "exact", "mc_mean", "mc_stderr", "trials", "lp_objective", "dp_opt", "ratio_vs_dp", "note"],
    );
    report
        .config("instance", path.display())
        .config("n", inst.n())
        .config("m", inst.m())
        .config("policy", policy.name())
        .config("trials", trials)
        .config("seed", seed);
    solver.record(&mut report);
    report.row(vec![
        policy.name().into(),
        v.exact.into(),
        v.estimate.map(|e| e.mean).into(),
        v.estimate.map(|e| e.stderr).into(),
        v.estimate.map_or(Cell::Empty, |e| e.trials.into()),
        v.lp_objective.into(),
        opt.into(),
        ratio.into(),
        v.note.into(),
    ]);
    emit(&report, output)
}

fn cmd_verify(suite: Suite, seed: u64, output: &Output) -> Result<(), Failure> {
    let lines = suites::run(suite, seed).map_err(Failure::solver)?;
    let mut report =
        Report::new("verify", &["suite", "check", "checks", "violations", "worst", "expected", "status", "witness"]);
    report.config("suite", suite.name()).config("seed", seed);
    for l in &lines {
        report.row(vec![
            l.suite.into(),
            l.check.clone().into(),
            l.checks.into(),
            l.violations.into(),
            l.worst.into(),
            if l.expect_violation { "violation" } else { "hold" }.into(),
            if l.passed() { "PASS" } else { "FAIL" }.into(),
            l.witness.clone().into(),
        ]);
    }
    emit(&report, output)?;
    let failed: Vec<&str> = lines.iter().filter(|l| !l.passed()).map(|l| l.check.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(failed.join("; ")))
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Gen { kind, n, m, seed, out } => cmd_gen(kind, n, m, seed, &out),
        Command::Solve { instance, solver, dump_lp, solution, output } => {
            cmd_solve(&instance, &solver, dump_lp.as_deref(), solution.as_deref(), &output)
        }
        Command::Run { instance, policy, trials, seed, solver, output } => {
            cmd_run(&instance, policy, trials, seed, &solver, &output)
        }
        Command::Verify { suite, seed, output } => cmd_verify(suite, seed, &output),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("twosided: {f}");
            ExitCode::from(f.code())
        }
    }
}
