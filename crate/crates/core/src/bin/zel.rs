use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use zel::continuization::{con_distance, embed_tree, GirthDiagnostics};
use zel::harness::{emit_report, run_gap_experiment, size_function, ExperimentConfig, RecordStatus};
use zel::instance::{build_instance, instance_diagnostics, EXPERIMENT_GIRTH_COEFFICIENT};
use zel::io::{load_instance, save_instance, sidecar_path, SolutionFile};
use zel::metric::validate_semimetric;
use zel::projection::{is_extreme_point, project_all};
use zel::solvers::{lp_feasible_value, solve, Method, SolveBudget};
use zel::{CanonicalSolution, DistanceMatrix, Instance, InstanceConfig, Partition, Result, Solution, TerminalRule, EPS};

#[derive(Parser)]
#[command(name = "zel", about = "Random 0-extension instances, tight-span projection and gap experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum EmbedMode {
    Tree,
    Girth,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance: edge list at --out, sidecar at <out>.json.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = EXPERIMENT_GIRTH_COEFFICIENT)]
        girth_coeff: f64,
        #[arg(long, default_value = "prefix")]
        terminal_rule: TerminalRule,
        #[arg(long)]
        out: PathBuf,
    },
    /// Structural diagnostics of an instance, optionally validating a metric file.
    Diagnose {
        instance: PathBuf,
        /// JSON dense matrix to check for the semi-metric axioms.
        #[arg(long)]
        metric: Option<PathBuf>,
    },
    /// Project every vertex onto the tight span of the terminal metric.
    Project { instance: PathBuf },
    /// Embed the clusters of a solution into the continuization of the graph.
    Embed {
        instance: PathBuf,
        /// Solution JSON; defaults to the singleton clustering.
        #[arg(long)]
        solution: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: EmbedMode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        samples: usize,
    },
    /// Solve for a canonical solution, or score an existing one with --eval.
    Solve {
        instance: PathBuf,
        #[arg(long, default_value = "local")]
        method: Method,
        /// Cluster limit; defaults to size_function(k, 0.5, 1).
        #[arg(long)]
        fk: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Assignment cap for brute force, iterations per restart for local search.
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        restarts: Option<usize>,
        /// Write the Solution JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Score this Solution JSON instead of solving.
        #[arg(long)]
        eval: Option<PathBuf>,
    },
    /// Run a gap sweep from a key=value config file.
    Gap { config: PathBuf },
}

fn print(value: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}

fn load_solution(path: Option<&PathBuf>, inst: &Instance) -> Result<Solution> {
    match path {
        Some(p) => {
            let file = SolutionFile::load(p)?;
            Ok(match file.parse(inst)? {
                zel::io::ParsedSolution::Canonical(cs) => cs.to_solution(inst),
                zel::io::ParsedSolution::General(sol) => sol,
            })
        }
        None => {
            let n = inst.n();
            let cs = CanonicalSolution::new(Partition::singletons(n), (0..n).collect(), inst)?;
            Ok(cs.to_solution(inst))
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Gen {
            n,
            seed,
            girth_coeff,
            terminal_rule,
            out,
        } => {
            let inst = build_instance(InstanceConfig {
                n,
                seed,
                girth_coefficient: girth_coeff,
                terminal_rule,
            })?;
            save_instance(&inst, &out, true)?;
            eprintln!("wrote {} and {}", out.display(), sidecar_path(&out).display());
        }
        Command::Diagnose { instance, metric } => {
            let inst = load_instance(&instance)?;
            let metric_check = match metric {
                Some(p) => {
                    let rows: Vec<Vec<f64>> = serde_json::from_str(&fs::read_to_string(p)?)?;
                    Some(match validate_semimetric(&rows) {
                        Ok(()) => "ok".to_string(),
                        Err(e) => e.to_string(),
                    })
                }
                None => None,
            };
            print(&json!({
                "diagnostics": instance_diagnostics(&inst),
                "terminal_metric": validate_semimetric(&inst.terminal_metric.to_rows()).map_or_else(|e| e.to_string(), |_| "ok".into()),
                "metric": metric_check,
            }))?;
        }
        Command::Project { instance } => {
            let inst = load_instance(&instance)?;
            for (v, x) in project_all(&inst)?.into_iter().enumerate() {
                let extreme = is_extreme_point(&x, &inst.terminal_metric)?;
                print(&json!({ "vertex": v, "coords": x.coords, "member": true, "extreme": extreme }))?;
            }
        }
        Command::Embed {
            instance,
            solution,
            mode,
            seed,
            samples,
        } => {
            let inst = load_instance(&instance)?;
            let sol = load_solution(solution.as_ref(), &inst)?;
            let dist = DistanceMatrix::all_pairs(&inst.graph)?;
            match mode {
                EmbedMode::Tree => {
                    let points = embed_tree(&sol, &inst)?;
                    let count = points.len();
                    let mut ratios = Vec::new();
                    let mut violated = Vec::new();
                    for a in 0..count {
                        for b in a + 1..count {
                            let delta = sol.delta.get(a, b);
                            let d = con_distance(&inst.graph, &dist, &points[a], &points[b]);
                            if d > delta + EPS && violated.is_empty() {
                                violated.push("embed-tree");
                            }
                            if delta > EPS {
                                ratios.push(d / delta);
                            }
                        }
                    }
                    print(&json!({ "r": null, "ratios": ratios, "violated_claims": violated }))?;
                }
                EmbedMode::Girth => {
                    let diag = GirthDiagnostics::new(&sol, &inst, &dist)?;
                    for r in diag.radii(samples, seed) {
                        print(&diag.sample(r))?;
                    }
                }
            }
        }
        Command::Solve {
            instance,
            method,
            fk,
            seed,
            budget,
            restarts,
            out,
            eval,
        } => {
            let inst = load_instance(&instance)?;
            if let Some(path) = eval {
                let cost = SolutionFile::load(&path)?.score(&inst)?;
                print(&json!({ "cost": cost }))?;
                return Ok(true);
            }
            let mut b = SolveBudget {
                seed,
                ..SolveBudget::default()
            };
            if let Some(limit) = budget {
                match method {
                    Method::Local => b.max_iterations = limit,
                    _ => b.max_assignments = limit,
                }
            }
            if let Some(r) = restarts {
                b.restarts = r;
            }
            let f_k = fk.unwrap_or_else(|| size_function(inst.k(), 0.5, 1.0).min(inst.n()));
            let (cs, cost) = solve(&inst, method, f_k, &b)?;
            let file = SolutionFile::from_canonical(&cs);
            if let Some(p) = out {
                file.save(&p)?;
            }
            print(&json!({
                "method": method.to_string(),
                "f_k": f_k,
                "cost": cost,
                "lp_value": lp_feasible_value(&inst)?,
                "solution": file,
            }))?;
        }
        Command::Gap { config } => {
            let mut cfg = ExperimentConfig::parse(&fs::read_to_string(config)?)?;
            if let Ok(dir) = std::env::var("ZEL_OUT_DIR") {
                cfg.out_dir = PathBuf::from(dir);
            }
            let records = run_gap_experiment(&cfg)?;
            let paths = emit_report(&records, &cfg.out_dir)?;
            let failed = records.iter().filter(|r| r.status == RecordStatus::Failed).count();
            eprintln!("{} records, {} failed, report in {}", records.len(), failed, paths.csv.display());
            print(&fs::read_to_string(&paths.summary)?.parse::<serde_json::Value>()?)?;
            return Ok(failed == 0);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
