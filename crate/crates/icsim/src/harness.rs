//! Experiment orchestration: JSON-configured runs and sweeps, deterministic
//! CSV/manifest emission, step-size grid searches, fixed-point sweeps, and
//! the self-verification suites. Sweep points may execute concurrently
//! (capped by `ICSIM_THREADS`), but each run is internally deterministic and
//! files are written after a barrier in fixed grid order, so identical
//! configs reproduce identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::algorithms::{self, Algorithm, AlgorithmConfig};
use crate::error::{Error, Result};
use crate::fixed_point;
use crate::instances::{self, ChainSpec, HeteroDials};
use crate::quad_core::{Fnv1a, ProblemInstance};
use crate::theory_bounds;

/// Step-size schedule of the form `c * H^a * K^b`, covering every schedule
/// appearing in the sweeps (constants, 1/(2H), 1/(H K), 1/(H K^2), ...).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub c: f64,
    #[serde(default)]
    pub h_exp: f64,
    #[serde(default)]
    pub k_exp: f64,
}

impl Schedule {
    pub fn constant(c: f64) -> Self {
        Schedule { c, h_exp: 0.0, k_exp: 0.0 }
    }

    pub fn eval(&self, h: f64, k: f64) -> f64 {
        self.c * h.powf(self.h_exp) * k.powf(self.k_exp)
    }

    /// Parses `"c"`, `"c*H^a"`, `"c*H^a*K^b"` (factors in any order, `H`
    /// alone meaning `H^1`).
    pub fn parse(text: &str) -> Result<Self> {
        let mut sched = Schedule { c: f64::NAN, h_exp: 0.0, k_exp: 0.0 };
        for part in text.split('*') {
            let part = part.trim();
            if let Some(rest) = part.strip_prefix('H').or_else(|| part.strip_prefix('h')) {
                sched.h_exp += parse_exponent(rest, part)?;
            } else if let Some(rest) = part.strip_prefix('K').or_else(|| part.strip_prefix('k')) {
                sched.k_exp += parse_exponent(rest, part)?;
            } else {
                let c: f64 = part
                    .parse()
                    .map_err(|_| Error::InvalidConfig(format!("bad schedule factor '{part}'")))?;
                sched.c = if sched.c.is_nan() { c } else { sched.c * c };
            }
        }
        if sched.c.is_nan() {
            sched.c = 1.0;
        }
        Ok(sched)
    }
}

fn parse_exponent(rest: &str, whole: &str) -> Result<f64> {
    if rest.is_empty() {
        return Ok(1.0);
    }
    rest.strip_prefix('^')
        .and_then(|e| e.parse().ok())
        .ok_or_else(|| Error::InvalidConfig(format!("bad schedule factor '{whole}'")))
}

/// Where the problem instance comes from: a named generator with JSON
/// parameters, or a JSON file on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceSource {
    Generator { generator: String, params: Value },
    File { file: PathBuf },
}

/// Builds the instance described by a source. Generators: `motivating_pair`
/// (h, x_star), `rank_one_pair` (h, b, m, kappa), `chain` (h, b, r, dim?),
/// `gd_worst_case` (h, kappa, b), `random` (m, d, mu, h, concept_spread,
/// hessian_spread, seed?).
pub fn build_instance(source: &InstanceSource, default_seed: u64) -> Result<ProblemInstance> {
    match source {
        InstanceSource::File { file } => ProblemInstance::load(file),
        InstanceSource::Generator { generator, params } => {
            let get = |key: &str| -> Option<f64> { params.get(key).and_then(Value::as_f64) };
            let need = |key: &str| -> Result<f64> {
                get(key).ok_or_else(|| {
                    Error::InvalidConfig(format!("generator '{generator}' needs parameter '{key}'"))
                })
            };
            match generator.as_str() {
                "motivating_pair" => {
                    let xs = params
                        .get("x_star")
                        .and_then(Value::as_array)
                        .map(|a| a.iter().filter_map(Value::as_f64).collect::<Vec<_>>())
                        .unwrap_or_else(|| vec![1.0, 1.0]);
                    if xs.len() != 2 {
                        return Err(Error::InvalidConfig("x_star must have length 2".into()));
                    }
                    instances::make_motivating_pair(need("h")?, &[xs[0], xs[1]])
                }
                "rank_one_pair" => {
                    let (inst, _) = instances::make_rank_one_pair(
                        need("h")?,
                        need("b")?,
                        need("m")? as usize,
                        need("kappa")?,
                    )?;
                    Ok(inst)
                }
                "chain" => {
                    let spec = ChainSpec {
                        h: need("h")?,
                        b: need("b")?,
                        r: need("r")? as usize,
                        dim: get("dim").map(|d| d as usize),
                    };
                    Ok(instances::make_chain_instance(&spec)?.0)
                }
                "gd_worst_case" => {
                    instances::make_gd_worst_case(need("h")?, need("kappa")?, need("b")?)
                }
                "random" => instances::make_random_instance(
                    need("m")? as usize,
                    need("d")? as usize,
                    need("mu")?,
                    need("h")?,
                    HeteroDials {
                        concept_spread: get("concept_spread").unwrap_or(0.0),
                        hessian_spread: get("hessian_spread").unwrap_or(0.0),
                    },
                    get("seed").map(|s| s as u64).unwrap_or(default_seed),
                ),
                other => Err(Error::InvalidConfig(format!("unknown generator '{other}'"))),
            }
        }
    }
}

/// One sweep axis: a named algorithm parameter with an explicit value list.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepAxis {
    pub name: String,
    pub values: Vec<f64>,
}

/// A parameter derived from the others instead of swept: evaluated as
/// `c * H^a * K^b` at each grid point after the value axes are applied.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleAxis {
    pub name: String,
    pub schedule: Schedule,
}

fn default_cap() -> usize {
    100_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    #[serde(default)]
    pub axes: Vec<SweepAxis>,
    #[serde(default)]
    pub schedules: Vec<ScheduleAxis>,
    #[serde(default = "default_cap")]
    pub cap: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec { axes: Vec::new(), schedules: Vec::new(), cap: default_cap() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputSpec {
    pub dir: PathBuf,
    /// Write one trajectory CSV per run (otherwise manifest only).
    #[serde(default = "default_true")]
    pub trajectories: bool,
}

fn default_true() -> bool {
    true
}

/// Top-level experiment description: instance source, one or more algorithm
/// configurations, optional sweep axes applied to each, and output location.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub instance: InstanceSource,
    pub algorithms: Vec<AlgorithmConfig>,
    #[serde(default)]
    pub sweep: SweepSpec,
    pub output: OutputSpec,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json_str(&fs::read_to_string(path)?)
    }

    /// Hash of the canonical JSON serialization; manifests carry it so a
    /// rerun can be matched to its config.
    pub fn fingerprint(&self) -> u64 {
        let text = serde_json::to_string(self).expect("config serializes");
        let mut h = Fnv1a::new();
        h.write(text.as_bytes());
        h.finish()
    }
}

/// Outcome of one (algorithm, sweep point) run as recorded in the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub index: usize,
    pub algorithm: Algorithm,
    pub params: BTreeMap<String, f64>,
    pub status: String,
    pub final_suboptimality: Option<f64>,
    pub rounds_completed: Option<usize>,
    pub csv: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub config_fingerprint: u64,
    pub seed: u64,
    pub instance_fingerprint: u64,
    pub runs: Vec<RunRecord>,
}

fn apply_param(cfg: &mut AlgorithmConfig, name: &str, value: f64) -> Result<()> {
    match name {
        "eta" => cfg.eta = value,
        "beta" => cfg.beta = value,
        "gamma" => cfg.gamma = value,
        "k" => cfg.k = value as usize,
        "r" => cfg.r = value as usize,
        "sigma" => cfg.noise.sigma = value,
        "seed" => cfg.noise.seed = value as u64,
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown sweep parameter '{other}'"
            )))
        }
    }
    Ok(())
}

fn cartesian(axes: &[SweepAxis]) -> Vec<BTreeMap<String, f64>> {
    let mut points: Vec<BTreeMap<String, f64>> = vec![BTreeMap::new()];
    for axis in axes {
        let mut next = Vec::with_capacity(points.len() * axis.values.len());
        for point in &points {
            for &v in &axis.values {
                let mut p = point.clone();
                p.insert(axis.name.clone(), v);
                next.push(p);
            }
        }
        points = next;
    }
    points
}

/// Runs every (algorithm, sweep point) pair, writes one CSV per trajectory
/// plus `manifest.json`, and returns the manifest. Divergent runs are
/// recorded with their status rather than aborting the sweep.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Manifest> {
    let instance = build_instance(&config.instance, config.seed)?;
    let points = cartesian(&config.sweep.axes);
    let total = points.len() * config.algorithms.len();
    if total > config.sweep.cap {
        return Err(Error::InvalidConfig(format!(
            "sweep size {total} exceeds cap {}",
            config.sweep.cap
        )));
    }

    // Resolve all run configs up front in deterministic order.
    let mut jobs: Vec<(usize, AlgorithmConfig, BTreeMap<String, f64>)> = Vec::new();
    for base in &config.algorithms {
        for point in &points {
            let mut cfg = base.clone();
            let mut params = point.clone();
            for (name, value) in point {
                apply_param(&mut cfg, name, *value)?;
            }
            for sched in &config.sweep.schedules {
                let value = sched.schedule.eval(instance.smoothness(), cfg.k as f64);
                apply_param(&mut cfg, &sched.name, value)?;
                params.insert(sched.name.clone(), value);
            }
            jobs.push((jobs.len(), cfg, params));
        }
    }

    let results = parallel_map(&jobs, |(_, cfg, _)| match cfg
        .validate()
        .and_then(|_| algorithms::run(&instance, cfg))
    {
        Ok(traj) => {
            let mut csv = String::new();
            traj.render_csv(&mut csv, None);
            (
                "ok".to_string(),
                Some(traj.final_suboptimality()),
                Some(traj.rounds.len().saturating_sub(1)),
                Some(csv),
            )
        }
        Err(e) => (format!("error: {e}"), None, None, None),
    });

    fs::create_dir_all(&config.output.dir)?;
    let mut runs = Vec::with_capacity(jobs.len());
    for ((index, cfg, params), (status, final_sub, rounds, csv)) in jobs.iter().zip(results) {
        let csv_name = match (&csv, config.output.trajectories) {
            (Some(text), true) => {
                let name = format!("run_{index:04}.csv");
                write_atomic(&config.output.dir.join(&name), text.as_bytes())?;
                Some(name)
            }
            _ => None,
        };
        runs.push(RunRecord {
            index: *index,
            algorithm: cfg.algorithm,
            params: params.clone(),
            status,
            final_suboptimality: final_sub,
            rounds_completed: rounds,
            csv: csv_name,
        });
    }
    let manifest = Manifest {
        config_fingerprint: config.fingerprint(),
        seed: config.seed,
        instance_fingerprint: instance.fingerprint(),
        runs,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_atomic(&config.output.dir.join("manifest.json"), text.as_bytes())?;
    Ok(manifest)
}

/// Writes under a temporary name in the same directory, then renames into
/// place so readers never observe partial files.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|n| n.to_string_lossy()).unwrap_or_default()
    ));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// One row of a fixed-point sweep.
#[derive(Debug, Clone, Serialize)]
pub struct FixedPointRow {
    pub schedule: String,
    pub k: usize,
    pub eta: f64,
    pub exists: bool,
    pub dist_to_xstar: Option<f64>,
    pub dist_to_xbar: Option<f64>,
}

/// Tabulates the local-GD fixed point over a (schedule, K) grid:
/// `x_infinity`, its distance to the true optimum, and its distance to the
/// average of the machine optima. Schedules whose fixed point does not exist
/// are kept as rows with `exists = false`.
pub fn sweep_fixed_point(
    instance: &ProblemInstance,
    schedules: &[(String, Schedule)],
    k_grid: &[usize],
) -> Result<Vec<FixedPointRow>> {
    let x_star = instance.global_optimum()?;
    // The mean of the machine optima is undefined when a machine is singular;
    // the corresponding column is then left empty.
    let x_bar = instance.mean_optimum().ok();
    let h = instance.smoothness();
    let mut rows = Vec::with_capacity(schedules.len() * k_grid.len());
    for (name, sched) in schedules {
        for &k in k_grid {
            let eta = sched.eval(h, k as f64);
            let report = fixed_point::fixed_point(instance, eta, k)?;
            let (exists, xs, xb) = match &report.x_infinity {
                Some(x_inf) => (
                    true,
                    Some((x_inf - &x_star).norm()),
                    x_bar.as_ref().map(|xb| (x_inf - xb).norm()),
                ),
                None => (false, None, None),
            };
            rows.push(FixedPointRow {
                schedule: name.clone(),
                k,
                eta,
                exists,
                dist_to_xstar: xs,
                dist_to_xbar: xb,
            });
        }
    }
    Ok(rows)
}

/// Renders fixed-point sweep rows as CSV (17-significant-digit floats).
pub fn fixed_point_rows_to_csv(rows: &[FixedPointRow]) -> String {
    let mut out = String::from("schedule,k,eta,exists,dist_to_xstar,dist_to_xbar\n");
    for row in rows {
        let fmt = |v: &Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{:.16e},{},{},{}\n",
            row.schedule,
            row.k,
            row.eta,
            row.exists,
            fmt(&row.dist_to_xstar),
            fmt(&row.dist_to_xbar)
        ));
    }
    out
}

/// Result of a step-size grid search: the best final suboptimality over the
/// whole grid and the grid point achieving it.
#[derive(Debug, Clone, Serialize)]
pub struct StepSizeSearch {
    pub best_suboptimality: f64,
    pub best_eta: f64,
    pub best_beta: f64,
    pub evaluated: usize,
    pub diverged: usize,
}

/// Runs the algorithm at every (eta, beta) grid point and returns the best
/// achieved final suboptimality; used to verify lower-bound floors, which
/// must hold uniformly over step sizes. Divergent points count as +infinity.
pub fn step_size_search(
    instance: &ProblemInstance,
    base: &AlgorithmConfig,
    eta_grid: &[f64],
    beta_grid: &[f64],
) -> Result<StepSizeSearch> {
    if eta_grid.is_empty() || beta_grid.is_empty() {
        return Err(Error::InvalidConfig("step-size grids must be non-empty".into()));
    }
    let mut grid = Vec::with_capacity(eta_grid.len() * beta_grid.len());
    for &eta in eta_grid {
        for &beta in beta_grid {
            grid.push((eta, beta));
        }
    }
    let results = parallel_map(&grid, |&(eta, beta)| {
        let mut cfg = base.clone();
        cfg.eta = eta;
        cfg.beta = beta;
        if matches!(cfg.algorithm, Algorithm::MinibatchSgd | Algorithm::AcceleratedMinibatchSgd) {
            cfg.gamma = eta;
        }
        match algorithms::run(instance, &cfg) {
            Ok(traj) => traj.final_suboptimality(),
            Err(_) => f64::INFINITY,
        }
    });
    let mut best = f64::INFINITY;
    let mut best_point = (eta_grid[0], beta_grid[0]);
    let mut diverged = 0;
    for (&(eta, beta), &value) in grid.iter().zip(&results) {
        if value.is_infinite() {
            diverged += 1;
        }
        if value < best {
            best = value;
            best_point = (eta, beta);
        }
    }
    Ok(StepSizeSearch {
        best_suboptimality: best,
        best_eta: best_point.0,
        best_beta: best_point.1,
        evaluated: grid.len(),
        diverged,
    })
}

/// Log-spaced grid of n points between lo and hi inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (l, h) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (l + (h - l) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Maximum worker threads: `ICSIM_THREADS` if set (minimum 1), otherwise the
/// machine's available parallelism.
pub fn max_threads() -> usize {
    std::env::var("ICSIM_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

/// Applies `f` to every item, possibly concurrently, returning outputs in
/// input order. Each invocation must be deterministic in its input alone.
pub fn parallel_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync) -> Vec<U> {
    let threads = max_threads().min(items.len().max(1));
    if threads <= 1 || items.len() <= 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<U>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let out = f(&items[i]);
                slots.lock().expect("worker panicked")[i] = Some(out);
            });
        }
    });
    slots
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|o| o.expect("all slots filled"))
        .collect()
}

/// One check of a verification suite.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyCheck {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub suite: String,
    pub checks: Vec<VerifyCheck>,
    pub passed: bool,
}

impl VerifyReport {
    fn new(suite: &str, checks: Vec<VerifyCheck>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        VerifyReport { suite: suite.to_string(), checks, passed }
    }
}

pub const VERIFY_SUITES: &[&str] = &[
    "fixed_point",
    "bounds_monotonicity",
    "oracle",
    "motivating",
    "heterogeneity",
];

/// Runs a named verification suite ("all" runs every suite). These are
/// fast deterministic smoke checks; the full acceptance checks live in the
/// integration test suite.
pub fn verify(suite: &str) -> Result<VerifyReport> {
    match suite {
        "all" => {
            let mut checks = Vec::new();
            for s in VERIFY_SUITES {
                checks.extend(verify(s)?.checks);
            }
            Ok(VerifyReport::new("all", checks))
        }
        "fixed_point" => verify_fixed_point(),
        "bounds_monotonicity" => verify_bounds_monotonicity(),
        "oracle" => verify_oracle(),
        "motivating" => verify_motivating(),
        "heterogeneity" => verify_heterogeneity(),
        other => Err(Error::InvalidConfig(format!(
            "unknown verify suite '{other}'; known: {}, all",
            VERIFY_SUITES.join(", ")
        ))),
    }
}

fn check(name: String, measured: f64, expected: f64, tolerance: f64) -> VerifyCheck {
    VerifyCheck {
        name,
        passed: measured <= expected + tolerance,
        measured,
        expected,
        tolerance,
    }
}

fn verify_fixed_point() -> Result<VerifyReport> {
    let mut checks = Vec::new();
    for seed in 0..10u64 {
        let inst = instances::make_random_instance(
            3,
            3,
            0.5,
            2.0,
            HeteroDials { concept_spread: 1.0, hessian_spread: 0.5 },
            seed,
        )?;
        let k = [1usize, 2, 5][(seed % 3) as usize];
        let eta = 0.5 / inst.smoothness();
        let report = fixed_point::fixed_point(&inst, eta, k)?;
        let x_inf = report.x_infinity.as_ref().ok_or_else(|| {
            Error::Infeasible(format!("fixed point missing for seed {seed}"))
        })?;
        let mut cfg = AlgorithmConfig::new(Algorithm::LocalSgd, eta, k, 2000);
        cfg.beta = 1.0;
        let traj = algorithms::run_local_sgd(&inst, &cfg)?;
        let err = (traj.final_iterate() - x_inf).norm() / (1.0 + x_inf.norm());
        checks.push(check(
            format!("fixed_point_agreement_seed_{seed}"),
            err,
            1e-8,
            0.0,
        ));
    }
    Ok(VerifyReport::new("fixed_point", checks))
}

fn verify_bounds_monotonicity() -> Result<VerifyReport> {
    let base = theory_bounds::BoundParams {
        h: 1.0,
        b: 1.0,
        sigma: 1.0,
        mu: 0.2,
        tau: 0.4,
        zeta: 0.8,
        zeta_star: 0.5,
        q: 0.1,
        m: 2.0,
        k: 2.0,
        r: 2.0,
        d_ball: 1.0,
        ..Default::default()
    };
    type Eval = fn(&theory_bounds::BoundParams) -> Result<theory_bounds::BoundReport>;
    let evals: [(&str, Eval); 4] = [
        ("sc_upper", theory_bounds::eval_sc_upper_bound),
        ("convex_upper", theory_bounds::eval_convex_upper_bound),
        ("lsgd_lower", theory_bounds::eval_lsgd_lower_bound),
        ("ai_lower", theory_bounds::eval_ai_lower_bound),
    ];
    let mut checks = Vec::new();
    for (name, eval) in evals {
        for axis in ["r", "k", "m"] {
            let mut violations = 0.0;
            let mut prev = f64::INFINITY;
            for step in 1..=8 {
                let mut p = base;
                let v = 2.0f64.powi(step);
                match axis {
                    "r" => p.r = v,
                    "k" => p.k = v,
                    _ => p.m = v,
                }
                let value = eval(&p)?.value;
                if value > prev * (1.0 + 1e-12) {
                    violations += 1.0;
                }
                prev = value;
            }
            checks.push(check(format!("{name}_monotone_{axis}"), violations, 0.0, 0.0));
        }
    }
    Ok(VerifyReport::new("bounds_monotonicity", checks))
}

fn verify_oracle() -> Result<VerifyReport> {
    use crate::oracle::{noise_vector, NoiseSpec, RngKey};
    let noise = NoiseSpec::new(1.0, 7);
    let n = 20_000u64;
    let mut acc = 0.0;
    for i in 0..n {
        acc += noise_vector(3, &noise, RngKey::new(noise.seed, 0, i, 0)).norm_squared();
    }
    let mean = acc / n as f64;
    let checks = vec![check(
        "noise_norm_mean_abs_error".to_string(),
        (mean - 1.0).abs(),
        0.05,
        0.0,
    )];
    Ok(VerifyReport::new("oracle", checks))
}

fn verify_motivating() -> Result<VerifyReport> {
    let inst = instances::make_motivating_pair(2.0, &[1.0, -2.0])?;
    let x_star = inst.global_optimum()?;
    let mut worst = 0.0f64;
    for &k in &[1usize, 4, 16] {
        for &r in &[1usize, 5, 20] {
            let eta = 0.25 / 2.0;
            let mut cfg = AlgorithmConfig::new(Algorithm::LocalSgd, eta, k, r);
            cfg.beta = 1.5;
            let traj = algorithms::run_local_sgd(&inst, &cfg)?;
            let predicted =
                theory_bounds::closed_form_motivating(2.0, eta, 1.5, k, r, &x_star);
            worst = worst.max((traj.final_iterate() - predicted).norm());
        }
    }
    let checks = vec![check("closed_form_max_error".to_string(), worst, 1e-12, 0.0)];
    Ok(VerifyReport::new("motivating", checks))
}

fn verify_heterogeneity() -> Result<VerifyReport> {
    let mut checks = Vec::new();
    for seed in 0..5u64 {
        let inst = instances::make_random_instance(
            4,
            3,
            0.5,
            2.0,
            HeteroDials { concept_spread: 1.0, hessian_spread: 0.5 },
            seed,
        )?;
        let eta = 0.5 / inst.smoothness();
        let k = 8;
        let measured = crate::heterogeneity::rho(&inst, eta, k)?;
        let bounds = crate::heterogeneity::rho_bounds(&inst, eta, k)?;
        checks.push(check(
            format!("rho_within_bounds_seed_{seed}"),
            measured,
            bounds.general.min(bounds.quadratic),
            1e-12,
        ));
    }
    Ok(VerifyReport::new("heterogeneity", checks))
}
