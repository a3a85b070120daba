//! Command-line front end: case generation, single solves, kappa
//! sweeps, MILP-vs-oracle verification and oracle tables. Exit codes:
//! 0 success, 1 certificate or verification failure, 2 usage, 3 I/O,
//! 4 solver.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::{self, parse_grid};
use crate::lp_market::fmt6;
use crate::milp::{solve_planning_with, MilpError, MilpOptions};
use crate::network_model::{
    generate_garver_case, generate_two_node_case, load_case, save_case, CaseStudy,
    GarverOverrides, TwoNodeOverrides,
};
use crate::oracle::{self, DEFAULT_PLAN_BUDGET};
use crate::solver::SolverConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CERT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

#[derive(Parser)]
#[command(name = "gridreg", version, about = "Transmission expansion planning under incentive regulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct SolverArgs {
    /// LP/MILP backend; the GRIDREG_SOLVER environment variable takes
    /// precedence.
    #[arg(long = "solver.backend", default_value = "highs")]
    backend: String,
    #[arg(long = "solver.mip-gap", default_value_t = 1e-6)]
    mip_gap: f64,
    #[arg(long = "solver.lp-tol", default_value_t = 1e-8)]
    lp_tol: f64,
    #[arg(long = "solver.time-limit")]
    time_limit_s: Option<f64>,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        let backend = std::env::var("GRIDREG_SOLVER").unwrap_or_else(|_| self.backend.clone());
        SolverConfig {
            backend,
            mip_gap: self.mip_gap,
            lp_tol: self.lp_tol,
            time_limit_s: self.time_limit_s,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded case file (generators: two_node, garver6).
    GenCase {
        generator: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Agents per side (two_node) or per node (garver6).
        #[arg(long)]
        agents: Option<usize>,
        /// Stride through the lump menu; 1 keeps the full menu.
        #[arg(long)]
        lump_stride: Option<usize>,
        #[arg(long)]
        years: Option<u32>,
        /// Output path; defaults to <generator>-<seed>.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the planning MILP for one kappa and write solution,
    /// certificate and metrics.
    Solve {
        #[arg(long)]
        case: PathBuf,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Waive the assembly-time big-M lower bound (testing only).
        #[arg(long, default_value_t = false)]
        allow_small_big_m: bool,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Sweep kappa over a grid and write CSV plus summary.
    Sweep {
        #[arg(long)]
        case: PathBuf,
        #[arg(long, default_value = "0:1:0.25")]
        grid: String,
        #[arg(long, default_value_t = 0)]
        parallel: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Cross-check the MILP against brute-force enumeration at
    /// kappa in {0, 0.5, 1}.
    Verify {
        #[arg(long)]
        case: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PLAN_BUDGET)]
        budget: usize,
        #[arg(long, default_value_t = false)]
        allow_small_big_m: bool,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Enumerate all plans and write the per-plan economics table.
    OracleTable {
        #[arg(long)]
        case: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PLAN_BUDGET)]
        budget: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

struct Failure {
    code: i32,
    message: String,
}

fn fail(code: i32, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

impl From<MilpError> for Failure {
    fn from(e: MilpError) -> Self {
        let code = match &e {
            MilpError::BigMTooSmall { .. } | MilpError::Case(_) => EXIT_USAGE,
            _ => EXIT_SOLVER,
        };
        fail(code, e.to_string())
    }
}

fn read_case(path: &Path) -> Result<CaseStudy, Failure> {
    load_case(path).map_err(|e| fail(EXIT_IO, format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)
                .map_err(|e| fail(EXIT_IO, format!("{}: {e}", dir.display())))?;
        }
    }
    std::fs::write(path, contents).map_err(|e| fail(EXIT_IO, format!("{}: {e}", path.display())))
}

/// Parses and runs `args` (including argv[0]); returns the process exit
/// code. Kept separate from `main` so tests can drive it in-process.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version via this path with code 0
            let code = if e.exit_code() == 0 { EXIT_OK } else { EXIT_USAGE };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::GenCase { generator, seed, agents, lump_stride, years, out } => {
            let case = match generator.as_str() {
                "two_node" => {
                    let mut ov = TwoNodeOverrides::default();
                    if let Some(a) = agents {
                        ov.agents_per_side = a;
                    }
                    if let Some(k) = lump_stride {
                        ov.lump_stride = k;
                    }
                    if let Some(y) = years {
                        ov.years = y;
                    }
                    generate_two_node_case(seed, &ov)
                }
                "garver6" => {
                    let mut ov = GarverOverrides::default();
                    if let Some(a) = agents {
                        ov.agents_per_node = a;
                    }
                    if let Some(k) = lump_stride {
                        ov.lump_stride = k;
                    }
                    if let Some(y) = years {
                        ov.years = y;
                    }
                    generate_garver_case(seed, &ov)
                }
                other => {
                    return Err(fail(
                        EXIT_USAGE,
                        format!("unknown generator '{other}'; valid: two_node, garver6"),
                    ))
                }
            };
            let path = out.unwrap_or_else(|| PathBuf::from(format!("{generator}-{seed}.json")));
            save_case(&case, &path).map_err(|e| fail(EXIT_IO, e.to_string()))?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Solve { case, kappa, out, allow_small_big_m, solver } => {
            let mut cs = read_case(&case)?;
            if let Some(k) = kappa {
                if !(0.0..=1.0).contains(&k) {
                    return Err(fail(EXIT_USAGE, format!("kappa {k} outside [0, 1]")));
                }
                cs.policy.kappa = k;
            }
            let opts = MilpOptions { skip_big_m_guard: allow_small_big_m };
            let sol = solve_planning_with(&cs, &solver.config(), &opts)?;
            println!(
                "model: {} vars ({} binary), {} rows; wall {:.2}s; gap {:?}",
                sol.num_vars, sol.num_binaries, sol.num_cons, sol.wall_time_s, sol.mip_gap
            );
            println!("plan: {}", sol.plan.describe(&cs));
            println!(
                "tp={} sw={} benefits={}",
                fmt6(sol.tp),
                fmt6(sol.sw),
                fmt6(sol.benefits)
            );
            write_file(&out.join("solution.json"), &sol.to_json())?;
            write_file(&out.join("certificate.json"), &sol.certificate.to_json())?;
            let metrics = analysis::evaluate_metrics(&cs, &sol)
                .map_err(|e| fail(EXIT_CERT, e.to_string()))?;
            let table = analysis::SweepTable {
                rows: vec![analysis::SweepRow {
                    kappa: cs.policy.kappa,
                    row: Ok(metrics),
                    wall_time_s: sol.wall_time_s,
                }],
            };
            write_file(&out.join("metrics.csv"), &analysis::emit_report(&cs, &table))?;
            if !sol.certified() {
                return Err(fail(EXIT_CERT, "certificate or envelope audit failed"));
            }
            Ok(())
        }
        Command::Sweep { case, grid, parallel, out, solver } => {
            let cs = read_case(&case)?;
            let grid = parse_grid(&grid).map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
            let table = analysis::sweep_kappa(&cs, &grid, &solver.config(), parallel)
                .map_err(|e| fail(EXIT_SOLVER, e.to_string()))?;
            for row in &table.rows {
                println!(
                    "kappa={}: {} ({:.2}s)",
                    fmt6(row.kappa),
                    match &row.row {
                        Ok(m) => format!("tp={} sw={}", fmt6(m.tp), fmt6(m.sw)),
                        Err(e) => format!("FAILED: {e}"),
                    },
                    row.wall_time_s
                );
            }
            write_file(&out.join("sweep.csv"), &analysis::emit_report(&cs, &table))?;
            let summary = analysis::summary_block(&table)
                .map_err(|e| fail(EXIT_CERT, e.to_string()))?;
            write_file(&out.join("summary.txt"), &summary)?;
            print!("{summary}");
            if !table.failures().is_empty() {
                return Err(fail(EXIT_CERT, "some grid points failed"));
            }
            Ok(())
        }
        Command::Verify { case, budget, allow_small_big_m, solver } => {
            let cs = read_case(&case)?;
            let count = oracle::count_plans(&cs);
            if count > budget as u128 {
                return Err(fail(
                    EXIT_USAGE,
                    format!(
                        "{count} candidate plans exceed budget {budget}; regenerate the case \
                         with a larger --lump-stride or raise --budget"
                    ),
                ));
            }
            let cfg = solver.config();
            let opts = MilpOptions { skip_big_m_guard: allow_small_big_m };
            let mut ok = true;
            for kappa in [0.0, 0.5, 1.0] {
                let mut point = cs.clone();
                point.policy.kappa = kappa;
                let sol = solve_planning_with(&point, &cfg, &opts)?;
                let oracle_result = oracle::brute_force(&point, &cfg, budget)
                    .map_err(|e| fail(EXIT_SOLVER, e.to_string()))?;
                let best = &oracle_result.best.metrics;
                let delta = (sol.tp - best.tp).abs() / (1.0 + best.tp.abs());
                let pass = delta <= 1e-6 && sol.certified();
                ok &= pass;
                println!(
                    "kappa={}: milp tp={} oracle tp={} delta={} cert={} audit={} [{}]",
                    fmt6(kappa),
                    fmt6(sol.tp),
                    fmt6(best.tp),
                    fmt6(delta),
                    sol.certificate.pass,
                    sol.audit.pass,
                    if pass { "ok" } else { "FAIL" }
                );
                if !sol.audit.pass {
                    println!(
                        "  envelope audit: residual={} mu/M={} lp gap={}",
                        fmt6(sol.audit.max_envelope_residual),
                        fmt6(sol.audit.max_mu_over_m),
                        fmt6(sol.audit.lp_relative_gap)
                    );
                }
            }
            if ok {
                Ok(())
            } else {
                Err(fail(EXIT_CERT, "verification failed"))
            }
        }
        Command::OracleTable { case, budget, out, solver } => {
            let cs = read_case(&case)?;
            let result = oracle::brute_force(&cs, &solver.config(), budget).map_err(|e| {
                let code = match e {
                    oracle::OracleError::Budget { .. } => EXIT_USAGE,
                    _ => EXIT_SOLVER,
                };
                fail(code, e.to_string())
            })?;
            let csv = oracle::per_plan_table(&cs, &result);
            if result.degenerate {
                eprintln!("warning: profit ties at the top; table order breaks them by MW then id");
            }
            match out {
                Some(path) => write_file(&path, &csv)?,
                None => print!("{csv}"),
            }
            Ok(())
        }
    }
}
