use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use l1_subdiffusion::fdspace::{solve_pde, SpatialGrid};
use l1_subdiffusion::harness::catalog::{fisher_kolmogorov, ProblemId};
use l1_subdiffusion::harness::config::{load_config, BuiltProblem, PdeConfig, Reference, StudyConfig};
use l1_subdiffusion::harness::report::{emit_csv, emit_plotdata, emit_rates_csv, emit_table};
use l1_subdiffusion::harness::study::{ode_profile, run_convergence};
use l1_subdiffusion::harness::verify::{self, Outcome};
use l1_subdiffusion::mesh::TemporalMesh;
use l1_subdiffusion::quasilinear::solve_quasilinear;
use l1_subdiffusion::{Result, SchemeKind};

#[derive(Parser)]
#[command(name = "l1sub", version, about = "L1 schemes for time-fractional subdiffusion on graded meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scalar test problem `d^alpha u = g`, `u = t^sigma`: per-step errors and bounds.
    SolveOde {
        #[arg(long, default_value_t = 0.4)]
        alpha: f64,
        #[arg(long, default_value_t = 0.8)]
        sigma: f64,
        #[arg(long, default_value_t = 2.0)]
        r: f64,
        #[arg(long = "M", default_value_t = 1024)]
        m: usize,
        #[arg(long, default_value = "implicit")]
        scheme: SchemeKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Semilinear (or catalog) PDE described by a TOML/JSON config.
    SolvePde {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Quasilinear Fisher-Kolmogorov-type problem; per-step solver diagnostics.
    SolveQuasilinear {
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Defaults to (2 - alpha)/alpha.
        #[arg(long)]
        r: Option<f64>,
        #[arg(long = "M", default_value_t = 128)]
        m: usize,
        #[arg(long = "N", default_value_t = 1023)]
        n: usize,
        #[arg(long, default_value = "fisher-kolmogorov")]
        problem: ProblemId,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convergence study over an M-ladder, from a config file or flags.
    Convergence {
        #[arg(long, conflicts_with_all = ["problem", "scheme", "alpha", "sigma", "r", "m", "levels", "n"])]
        config: Option<PathBuf>,
        #[arg(long)]
        problem: Option<ProblemId>,
        #[arg(long)]
        scheme: Option<SchemeKind>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        r: Option<f64>,
        /// Coarsest step count.
        #[arg(long = "M")]
        m: Option<usize>,
        /// Number of ladder entries (M, 2M, 4M, ...).
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long)]
        double_mesh: bool,
        /// Per-step error/bound rows.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        rates: Option<PathBuf>,
        /// (t_m, error, bound) triples for log-log plots.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Property suites; exits nonzero if any check fails.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[arg(long, default_value_t = 0.4)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Truncation profile `(m, t_m, r_m, bound_m, ratio)` for --alpha --sigma --r --M.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0.8)]
        sigma: f64,
        #[arg(long, default_value_t = 2.0)]
        r: f64,
        #[arg(long = "M", default_value_t = 1024)]
        m: usize,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    All,
    Stability,
    Comparison,
    Truncation,
    Schemes,
    Fd,
}

fn solve_ode_cmd(alpha: f64, sigma: f64, r: f64, m: usize, scheme: SchemeKind, out: &Path) -> Result<()> {
    let rows = ode_profile(alpha, sigma, r, m, scheme)?;
    let max = rows.iter().map(|r| r.error).fold(0.0, f64::max);
    emit_table(
        out,
        &["m", "t_m", "U_m", "u_exact", "error", "bound_E", "bound_E_tilde"],
        rows.iter()
            .map(|r| vec![r.m as f64, r.t_m, r.u, r.exact, r.error, r.bound_e, r.bound_e_tilde]),
        &[0],
    )?;
    println!("M = {m}, r = {r}: max error {max:.6e}");
    Ok(())
}

fn field_summary(values: &[Vec<f64>], grid: &SpatialGrid) -> (f64, f64) {
    let u = values;
    let last = &u[u.len() - 1];
    (grid.max_norm(last), grid.l2_norm(last))
}

fn solve_pde_cmd(config: &Path, out: &Path) -> Result<()> {
    let cfg: PdeConfig = load_config(config)?;
    let mesh = cfg.mesh.build()?;
    let grid = cfg.grid()?;
    match cfg.build()? {
        BuiltProblem::Semilinear(p) => {
            let traj = solve_pde(&p, &mesh, &grid)?;
            if let Some(exact) = &p.exact {
                let errs = traj.errors(&**exact);
                emit_table(
                    out,
                    &["m", "t_m", "error_L2", "error_max"],
                    errs.iter().map(|e| vec![e.m as f64, e.t, e.l2, e.max]),
                    &[0],
                )?;
                println!("max nodal error {:.6e}", errs.iter().map(|e| e.max).fold(0.0, f64::max));
            } else {
                emit_table(
                    out,
                    &["m", "t_m", "max_U", "l2_U"],
                    traj.values.iter().enumerate().map(|(m, u)| {
                        vec![m as f64, mesh.t(m), grid.max_norm(u), grid.l2_norm(u)]
                    }),
                    &[0],
                )?;
                let (mx, l2) = field_summary(&traj.values, &grid);
                println!("final max |U| {mx:.6e}, L2 {l2:.6e}");
            }
        }
        BuiltProblem::Quasilinear(p) => {
            let sol = solve_quasilinear(&p, &mesh, &grid)?;
            write_quasilinear(&sol, &grid, out)?;
        }
    }
    Ok(())
}

fn write_quasilinear(
    sol: &l1_subdiffusion::quasilinear::QuasilinearSolution,
    grid: &SpatialGrid,
    out: &Path,
) -> Result<()> {
    let traj = &sol.trajectory;
    emit_table(
        out,
        &["m", "t_m", "max_U", "l2_U", "outer_iterations", "newton_iterations"],
        traj.values.iter().enumerate().map(|(m, u)| {
            let (outer, inner) = if m == 0 {
                (0, 0)
            } else {
                let s = &sol.steps[m - 1];
                (s.outer_iterations, s.inner_iterations.iter().sum::<usize>())
            };
            vec![m as f64, traj.mesh.t(m), grid.max_norm(u), grid.l2_norm(u), outer as f64, inner as f64]
        }),
        &[0, 4, 5],
    )?;
    let (mx, l2) = field_summary(&traj.values, grid);
    println!(
        "final max |U| {mx:.6e}, L2 {l2:.6e}; gradient bound used for the step condition {:.3}",
        sol.gradient_bound
    );
    Ok(())
}

fn solve_quasilinear_cmd(alpha: f64, r: Option<f64>, m: usize, n: usize, problem: ProblemId, out: &Path) -> Result<()> {
    if problem != ProblemId::FisherKolmogorov {
        return Err(l1_subdiffusion::Error::Config(format!(
            "`{problem}` is not a quasilinear problem"
        )));
    }
    let p = fisher_kolmogorov(alpha)?;
    let mesh = TemporalMesh::graded(m, r.unwrap_or((2.0 - alpha) / alpha), 1.0)?;
    let (lo, hi) = problem.domain();
    let grid = SpatialGrid::new(lo, hi, n)?;
    let sol = solve_quasilinear(&p, &mesh, &grid)?;
    write_quasilinear(&sol, &grid, out)
}

#[allow(clippy::too_many_arguments)]
fn convergence_cmd(
    config: Option<PathBuf>,
    problem: Option<ProblemId>,
    scheme: Option<SchemeKind>,
    alpha: Option<f64>,
    sigma: Option<f64>,
    r: Option<f64>,
    m: Option<usize>,
    levels: Option<usize>,
    n: Option<usize>,
    double_mesh: bool,
    out: Option<PathBuf>,
    rates: Option<PathBuf>,
    plot: Option<PathBuf>,
) -> Result<()> {
    let mut cfg = match config {
        Some(path) => load_config::<StudyConfig>(&path)?,
        None => {
            let m0 = m.unwrap_or(512);
            StudyConfig {
                problem: problem.unwrap_or(ProblemId::TestA),
                scheme: scheme.unwrap_or(SchemeKind::Implicit),
                alpha: alpha.unwrap_or(0.4),
                sigma,
                r,
                ladder: (0..levels.unwrap_or(5)).map(|k| m0 << k).collect(),
                n,
                stabilization: None,
                reference: Reference::Auto,
            }
        }
    };
    if double_mesh {
        cfg.reference = Reference::DoubleMesh;
    }
    let report = run_convergence(&cfg)?;
    println!("{}", report.label);
    print!("{}", report.rate_table());
    if let Some(q) = report.overall_rate() {
        println!("overall rate {q:.4}");
    }
    if let Some(p) = out {
        emit_csv(&report, &p)?;
    }
    if let Some(p) = rates {
        emit_rates_csv(&report, &p)?;
    }
    if let Some(p) = plot {
        emit_plotdata(&report, &p)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn verify_cmd(
    suite: Suite,
    alpha: f64,
    seed: u64,
    trials: usize,
    out: Option<PathBuf>,
    sigma: f64,
    r: f64,
    m: usize,
) -> Result<bool> {
    let ladder = [1 << 8, 1 << 10, 1 << 12];
    let mut outcomes: Vec<Outcome> = Vec::new();
    let run = |s: Suite| suite == Suite::All || suite == s;
    if run(Suite::Stability) {
        outcomes.push(verify::stability_suite(alpha, &ladder)?);
    }
    if run(Suite::Comparison) {
        outcomes.push(verify::comparison_suite(trials, seed)?);
    }
    if run(Suite::Truncation) {
        outcomes.extend(verify::truncation_suite(&ladder)?);
    }
    if run(Suite::Schemes) {
        outcomes.extend(verify::scheme_suite(10_000)?);
    }
    if run(Suite::Fd) {
        outcomes.extend(verify::fd_structure_suite(seed)?);
    }
    for o in &outcomes {
        println!("{}", o.line());
    }
    if let Some(path) = out {
        let mesh = TemporalMesh::graded(m, r, 1.0)?;
        let rows = verify::truncation_rows(&mesh, alpha, sigma)?;
        emit_table(&path, &["m", "t_m", "r_m", "bound_m", "ratio"], rows, &[0])?;
    }
    Ok(outcomes.iter().all(|o| o.passed))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::SolveOde {
            alpha,
            sigma,
            r,
            m,
            scheme,
            out,
        } => solve_ode_cmd(alpha, sigma, r, m, scheme, &out).map(|_| true),
        Command::SolvePde { config, out } => solve_pde_cmd(&config, &out).map(|_| true),
        Command::SolveQuasilinear {
            alpha,
            r,
            m,
            n,
            problem,
            out,
        } => solve_quasilinear_cmd(alpha, r, m, n, problem, &out).map(|_| true),
        Command::Convergence {
            config,
            problem,
            scheme,
            alpha,
            sigma,
            r,
            m,
            levels,
            n,
            double_mesh,
            out,
            rates,
            plot,
        } => convergence_cmd(config, problem, scheme, alpha, sigma, r, m, levels, n, double_mesh, out, rates, plot)
            .map(|_| true),
        Command::Verify {
            suite,
            alpha,
            seed,
            trials,
            out,
            sigma,
            r,
            m,
        } => verify_cmd(suite, alpha, seed, trials, out, sigma, r, m),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
