//! Command-line front end: instance generation, simulation, fixed-point
//! sweeps, heterogeneity reports, bound tables, and the verify suites.
//!
//! Exit codes: 0 success, 1 check failure, 2 usage error, 3 numerical error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use icsim::error::Error;
use icsim::harness::{self, ExperimentConfig, Schedule};
use icsim::quad_core::ProblemInstance;
use icsim::theory_bounds::{self, BoundParams, BoundReport};

#[derive(Parser)]
#[command(name = "icsim", version, about = "Intermittent-communication optimization simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a problem instance and write it as JSON.
    Instance {
        /// Generator name: motivating_pair, rank_one_pair, chain,
        /// gd_worst_case, random.
        generator: String,
        /// Generator parameters as key=value pairs (x_star as a,b).
        #[arg(short, long)]
        param: Vec<String>,
        /// Output path.
        #[arg(short, long)]
        output: PathBuf,
        /// Seed for seeded generators.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the experiment described by a JSON config, printing a per-run
    /// summary.
    Simulate {
        #[arg(short, long)]
        config: PathBuf,
    },
    /// Run a sweep config, printing only the manifest location.
    Sweep {
        #[arg(short, long)]
        config: PathBuf,
    },
    /// Tabulate local GD fixed points over step-size schedules and K values.
    #[command(name = "fixed-point")]
    FixedPoint {
        #[arg(short, long)]
        instance: PathBuf,
        /// Step-size schedule c*H^a*K^b; repeatable.
        #[arg(long, required = true)]
        eta: Vec<String>,
        /// Comma-separated K values.
        #[arg(long, default_value = "1,2,5,10")]
        k_grid: String,
        /// Write CSV here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Print the heterogeneity report for an instance as JSON.
    Hetero {
        #[arg(short, long)]
        instance: PathBuf,
        /// Ball radius for the gradient-dissimilarity search.
        #[arg(long)]
        ball: Option<f64>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also measure rho at this step size (requires --rho-k).
        #[arg(long)]
        rho_eta: Option<f64>,
        #[arg(long)]
        rho_k: Option<usize>,
    },
    /// Evaluate a bound formula from a BoundParams JSON file.
    Bounds {
        /// Evaluator: sc_upper, convex_upper, lsgd_lower, ai_lower.
        name: String,
        #[arg(short, long)]
        params: PathBuf,
        /// Sweep one parameter (axis=v1,v2,...) and emit CSV instead of the
        /// single-point table.
        #[arg(long)]
        sweep: Option<String>,
    },
    /// Run a self-verification suite (default: all).
    Verify {
        #[arg(default_value = "all")]
        suite: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn run(cli: Cli) -> icsim::Result<ExitCode> {
    match cli.command {
        Command::Instance { generator, param, output, seed } => {
            let params = params_to_json(&param)?;
            let source = harness::InstanceSource::Generator { generator, params };
            let instance = harness::build_instance(&source, seed)?;
            instance.save(&output)?;
            println!(
                "wrote {} ({} machines, dim {}, fingerprint {:016x})",
                output.display(),
                instance.num_machines(),
                instance.dim(),
                instance.fingerprint()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate { config } => {
            let config = ExperimentConfig::load(&config)?;
            let manifest = harness::run_experiment(&config)?;
            for run in &manifest.runs {
                let sub = run
                    .final_suboptimality
                    .map(|v| format!("{v:.6e}"))
                    .unwrap_or_else(|| "-".into());
                println!(
                    "run {:04} {:?} {:?} -> {} ({})",
                    run.index, run.algorithm, run.params, sub, run.status
                );
            }
            println!("manifest: {}", config.output.dir.join("manifest.json").display());
            Ok(exit_ok())
        }
        Command::Sweep { config } => {
            let config = ExperimentConfig::load(&config)?;
            let manifest = harness::run_experiment(&config)?;
            println!(
                "{} runs -> {}",
                manifest.runs.len(),
                config.output.dir.join("manifest.json").display()
            );
            Ok(exit_ok())
        }
        Command::FixedPoint { instance, eta, k_grid, output } => {
            let inst = ProblemInstance::load(&instance)?;
            let schedules = eta
                .iter()
                .map(|text| Ok((text.clone(), Schedule::parse(text)?)))
                .collect::<icsim::Result<Vec<_>>>()?;
            let k_grid = k_grid
                .split(',')
                .map(|s| {
                    s.trim().parse::<usize>().map_err(|_| {
                        Error::InvalidConfig(format!("bad K value '{s}'"))
                    })
                })
                .collect::<icsim::Result<Vec<_>>>()?;
            let rows = harness::sweep_fixed_point(&inst, &schedules, &k_grid)?;
            let csv = harness::fixed_point_rows_to_csv(&rows);
            match output {
                Some(path) => harness::write_atomic(&path, csv.as_bytes())?,
                None => print!("{csv}"),
            }
            Ok(exit_ok())
        }
        Command::Hetero { instance, ball, samples, seed, rho_eta, rho_k } => {
            let inst = ProblemInstance::load(&instance)?;
            let ball = ball.map(|d| (d, samples, seed));
            let rho_at = match (rho_eta, rho_k) {
                (Some(e), Some(k)) => Some((e, k)),
                (None, None) => None,
                _ => {
                    return Err(Error::InvalidConfig(
                        "--rho-eta and --rho-k must be given together".into(),
                    ))
                }
            };
            let report = icsim::heterogeneity::heterogeneity_report(&inst, ball, rho_at)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(exit_ok())
        }
        Command::Bounds { name, params, sweep } => {
            let text = std::fs::read_to_string(&params)?;
            let base: BoundParams = serde_json::from_str(&text)?;
            match sweep {
                None => {
                    let report = eval_bound(&name, &base)?;
                    print!("{}", report.render_table());
                }
                Some(spec) => {
                    let (axis, values) = spec.split_once('=').ok_or_else(|| {
                        Error::InvalidConfig("sweep must be axis=v1,v2,...".into())
                    })?;
                    let values = values
                        .split(',')
                        .map(|v| {
                            v.trim().parse::<f64>().map_err(|_| {
                                Error::InvalidConfig(format!("bad sweep value '{v}'"))
                            })
                        })
                        .collect::<icsim::Result<Vec<_>>>()?;
                    println!("{axis},value");
                    for v in values {
                        let mut p = base;
                        set_bound_param(&mut p, axis, v)?;
                        let report = eval_bound(&name, &p)?;
                        println!("{v:.16e},{:.16e}", report.value);
                    }
                }
            }
            Ok(exit_ok())
        }
        Command::Verify { suite } => {
            let report = harness::verify(&suite)?;
            for c in &report.checks {
                println!(
                    "{} {} (measured {:.3e}, allowed {:.3e})",
                    if c.passed { "pass" } else { "FAIL" },
                    c.name,
                    c.measured,
                    c.expected + c.tolerance
                );
            }
            if report.passed {
                println!("suite {}: all {} checks passed", report.suite, report.checks.len());
                Ok(ExitCode::SUCCESS)
            } else {
                println!("suite {}: FAILED", report.suite);
                Ok(ExitCode::from(1))
            }
        }
    }
}

fn exit_ok() -> ExitCode {
    ExitCode::SUCCESS
}

fn eval_bound(name: &str, p: &BoundParams) -> icsim::Result<BoundReport> {
    match name {
        "sc_upper" => theory_bounds::eval_sc_upper_bound(p),
        "convex_upper" => theory_bounds::eval_convex_upper_bound(p),
        "lsgd_lower" => theory_bounds::eval_lsgd_lower_bound(p),
        "ai_lower" => theory_bounds::eval_ai_lower_bound(p),
        other => Err(Error::InvalidConfig(format!(
            "unknown bound '{other}'; known: sc_upper, convex_upper, lsgd_lower, ai_lower"
        ))),
    }
}

fn set_bound_param(p: &mut BoundParams, axis: &str, v: f64) -> icsim::Result<()> {
    match axis {
        "h" => p.h = v,
        "b" => p.b = v,
        "sigma" => p.sigma = v,
        "mu" => p.mu = v,
        "tau" => p.tau = v,
        "zeta" => p.zeta = v,
        "zeta_star" => p.zeta_star = v,
        "q" => p.q = v,
        "m" => p.m = v,
        "k" => p.k = v,
        "r" => p.r = v,
        "d_ball" => p.d_ball = v,
        "epsilon" => p.epsilon = v,
        other => {
            return Err(Error::InvalidConfig(format!("unknown parameter '{other}'")))
        }
    }
    Ok(())
}

fn params_to_json(pairs: &[String]) -> icsim::Result<serde_json::Value> {
    let mut map = serde_json::Map::new();
    for pair in pairs {
        let (key, value) = pair.split_once('=').ok_or_else(|| {
            Error::InvalidConfig(format!("parameter '{pair}' is not key=value"))
        })?;
        let parsed = if value.contains(',') {
            let list = value
                .split(',')
                .map(|v| {
                    v.trim().parse::<f64>().map_err(|_| {
                        Error::InvalidConfig(format!("bad number '{v}' in '{pair}'"))
                    })
                })
                .collect::<icsim::Result<Vec<_>>>()?;
            serde_json::json!(list)
        } else {
            let n: f64 = value.parse().map_err(|_| {
                Error::InvalidConfig(format!("bad number '{value}' in '{pair}'"))
            })?;
            serde_json::json!(n)
        };
        map.insert(key.to_string(), parsed);
    }
    Ok(serde_json::Value::Object(map))
}
