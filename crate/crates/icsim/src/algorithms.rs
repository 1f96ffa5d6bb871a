//! The optimization procedures under the intermittent-communication schedule:
//! M machines each take K local oracle steps between each of R communication
//! rounds.
//!
//! Floating-point layout is deliberate. Every local step is accumulated as a
//! displacement `delta += (-eta) * g`, and the server reduction sums machine
//! displacements in a fixed order before a single division by M. Mini-batch
//! SGD uses the same accumulation with `-gamma` in place of `-eta`, which
//! makes local SGD with `K = 1, beta = 1` bitwise identical to mini-batch SGD
//! with `gamma = eta`, noise included, since the two share RNG keys.

use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::oracle::{stochastic_gradient, NoiseSpec, RngKey};
use crate::quad_core::{ProblemInstance, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    LocalSgd,
    MinibatchSgd,
    AcceleratedMinibatchSgd,
    SingleMachineSgd,
    TwoStage,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgorithmConfig {
    pub algorithm: Algorithm,
    /// Inner (local) step size.
    pub eta: f64,
    /// Outer step size for local SGD; `beta = 1` is plain averaging.
    #[serde(default = "default_one")]
    pub beta: f64,
    /// Server step size for the mini-batch variants.
    #[serde(default = "default_one")]
    pub gamma: f64,
    pub k: usize,
    pub r: usize,
    pub noise: NoiseSpec,
    #[serde(default)]
    pub record_local: bool,
    /// Round at which a two-stage run switches from local SGD to mini-batch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage_switch: Option<usize>,
}

fn default_one() -> f64 {
    1.0
}

impl AlgorithmConfig {
    pub fn new(algorithm: Algorithm, eta: f64, k: usize, r: usize) -> Self {
        AlgorithmConfig {
            algorithm,
            eta,
            beta: 1.0,
            gamma: eta,
            k,
            r,
            noise: NoiseSpec::noiseless(),
            record_local: false,
            stage_switch: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || !(self.beta > 0.0) || !(self.gamma > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "step sizes must be positive (eta={}, beta={}, gamma={})",
                self.eta, self.beta, self.gamma
            )));
        }
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if let Some(r1) = self.stage_switch {
            if r1 > self.r {
                return Err(Error::InvalidConfig(format!(
                    "stage switch {r1} exceeds round budget {}",
                    self.r
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RoundRecord {
    pub round: usize,
    pub iterate: Vector,
    pub suboptimality: f64,
    pub distance_to_opt: f64,
}

/// Full record of one run: the server iterate per round, and optionally the
/// per-(round, step, machine) local iterates with their consensus errors.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub rounds: Vec<RoundRecord>,
    /// Indexed `locals[r-1][k][m]` for rounds 1..=R and local steps 0..=K;
    /// step 0 is the shared iterate the round starts from.
    pub locals: Option<Vec<Vec<Vec<Vector>>>>,
    /// Consensus error at each recorded (round, step), flattened in the same
    /// order as `locals`.
    pub consensus: Option<Vec<f64>>,
    pub switch_round: Option<usize>,
    pub config: AlgorithmConfig,
    pub instance_fingerprint: u64,
}

impl Trajectory {
    pub fn final_iterate(&self) -> &Vector {
        &self.rounds.last().expect("round 0 always recorded").iterate
    }

    pub fn final_suboptimality(&self) -> f64 {
        self.rounds.last().expect("round 0 always recorded").suboptimality
    }

    /// First round whose suboptimality is at most `epsilon`, if any.
    pub fn rounds_to_accuracy(&self, epsilon: f64) -> Option<usize> {
        self.rounds
            .iter()
            .find(|rec| rec.suboptimality <= epsilon)
            .map(|rec| rec.round)
    }

    /// Writes the trajectory as CSV. The fixed-point column is included when
    /// `x_infinity` is given; the consensus column when locals were recorded
    /// (round 0 and rounds without locals print an empty cell).
    pub fn write_csv(&self, path: &Path, x_infinity: Option<&Vector>) -> Result<()> {
        let mut out = String::new();
        self.render_csv(&mut out, x_infinity);
        let mut f = std::fs::File::create(path)?;
        f.write_all(out.as_bytes())?;
        Ok(())
    }

    pub fn render_csv(&self, out: &mut String, x_infinity: Option<&Vector>) {
        let mut header = String::from("round,suboptimality,distance_to_opt");
        if x_infinity.is_some() {
            header.push_str(",distance_to_fixed_point");
        }
        if self.consensus.is_some() {
            header.push_str(",consensus");
        }
        out.push_str(&header);
        out.push('\n');
        let k = self.config.k;
        for rec in &self.rounds {
            out.push_str(&format!(
                "{},{:.16e},{:.16e}",
                rec.round, rec.suboptimality, rec.distance_to_opt
            ));
            if let Some(xi) = x_infinity {
                out.push_str(&format!(",{:.16e}", (&rec.iterate - xi).norm()));
            }
            if let Some(cons) = &self.consensus {
                if rec.round == 0 {
                    out.push(',');
                } else {
                    // Consensus at the end of the round's local phase.
                    let idx = (rec.round - 1) * (k + 1) + k;
                    match cons.get(idx) {
                        Some(v) => out.push_str(&format!(",{v:.16e}")),
                        None => out.push(','),
                    }
                }
            }
            out.push('\n');
        }
    }
}

/// Mean squared distance of the machine iterates from their average.
pub fn consensus_error(machine_iterates: &[Vector]) -> f64 {
    let m = machine_iterates.len();
    if m == 0 {
        return 0.0;
    }
    let dim = machine_iterates[0].len();
    let mut mean = Vector::zeros(dim);
    for x in machine_iterates {
        mean += x;
    }
    mean /= m as f64;
    machine_iterates
        .iter()
        .map(|x| (x - &mean).norm_squared())
        .sum::<f64>()
        / m as f64
}

/// Dispatches on `config.algorithm`.
pub fn run(instance: &ProblemInstance, config: &AlgorithmConfig) -> Result<Trajectory> {
    match config.algorithm {
        Algorithm::LocalSgd => run_local_sgd(instance, config),
        Algorithm::MinibatchSgd => run_minibatch_sgd(instance, config),
        Algorithm::AcceleratedMinibatchSgd => run_accelerated_minibatch_sgd(instance, config),
        Algorithm::SingleMachineSgd => run_single_machine_sgd(instance, config),
        Algorithm::TwoStage => run_two_stage(instance, config),
    }
}

struct Recorder {
    x_star: Vector,
    rounds: Vec<RoundRecord>,
    locals: Option<Vec<Vec<Vec<Vector>>>>,
    consensus: Option<Vec<f64>>,
    f_star: f64,
    divergence_limit: f64,
}

impl Recorder {
    fn new(instance: &ProblemInstance, record_local: bool) -> Result<Self> {
        let x_star = instance.global_optimum()?;
        let f_star = instance.average_value(&x_star);
        Ok(Recorder {
            divergence_limit: 1e12 * (1.0 + instance.radius_b()),
            x_star,
            rounds: Vec::new(),
            locals: if record_local { Some(Vec::new()) } else { None },
            consensus: if record_local { Some(Vec::new()) } else { None },
            f_star,
        })
    }

    fn record(&mut self, instance: &ProblemInstance, round: usize, x: &Vector) -> Result<()> {
        let norm = x.norm();
        if !norm.is_finite() || norm > self.divergence_limit {
            return Err(Error::Divergence { round, norm });
        }
        let sub = (instance.average_value(x) - self.f_star).max(-1e-12);
        self.rounds.push(RoundRecord {
            round,
            iterate: x.clone(),
            suboptimality: sub,
            distance_to_opt: (x - &self.x_star).norm(),
        });
        Ok(())
    }

    fn record_locals(&mut self, per_step: Vec<Vec<Vector>>) {
        if let Some(cons) = &mut self.consensus {
            for step in &per_step {
                cons.push(consensus_error(step));
            }
        }
        if let Some(locals) = &mut self.locals {
            locals.push(per_step);
        }
    }

    fn finish(self, config: &AlgorithmConfig, instance: &ProblemInstance, switch_round: Option<usize>) -> Trajectory {
        Trajectory {
            rounds: self.rounds,
            locals: self.locals,
            consensus: self.consensus,
            switch_round,
            config: config.clone(),
            instance_fingerprint: instance.fingerprint(),
        }
    }
}

/// One communication round of local SGD: every machine runs K steps from the
/// shared iterate, and the server moves by `beta` times the average
/// displacement. Returns the new server iterate.
fn local_round(
    instance: &ProblemInstance,
    x: &Vector,
    config: &AlgorithmConfig,
    round: u64,
    recorder: &mut Recorder,
) -> Vector {
    let m_count = instance.num_machines() as f64;
    let mut acc = Vector::zeros(instance.dim());
    let mut per_step: Vec<Vec<Vector>> = if recorder.locals.is_some() {
        vec![Vec::with_capacity(instance.num_machines()); config.k + 1]
    } else {
        Vec::new()
    };
    for machine in instance.machines() {
        let mut x_loc = x.clone();
        let mut delta = Vector::zeros(instance.dim());
        if recorder.locals.is_some() {
            per_step[0].push(x_loc.clone());
        }
        for k in 0..config.k {
            let key = RngKey::new(config.noise.seed, machine.label as u64, round, k as u64);
            let g = stochastic_gradient(machine, &x_loc, &config.noise, key);
            let step = g * (-config.eta);
            delta += &step;
            x_loc += &step;
            if recorder.locals.is_some() {
                per_step[k + 1].push(x_loc.clone());
            }
        }
        acc += delta * config.beta;
    }
    if recorder.locals.is_some() {
        recorder.record_locals(per_step);
    }
    x + acc / m_count
}

/// One round of mini-batch SGD: all MK gradients are taken at the shared
/// iterate and averaged into a single server step of size `gamma`.
fn minibatch_round(
    instance: &ProblemInstance,
    x: &Vector,
    config: &AlgorithmConfig,
    round: u64,
) -> Vector {
    let m_count = instance.num_machines() as f64;
    let mut acc = Vector::zeros(instance.dim());
    for machine in instance.machines() {
        let mut delta = Vector::zeros(instance.dim());
        for k in 0..config.k {
            let key = RngKey::new(config.noise.seed, machine.label as u64, round, k as u64);
            let g = stochastic_gradient(machine, x, &config.noise, key);
            delta += g * (-config.gamma);
        }
        acc += delta / config.k as f64;
    }
    x + acc / m_count
}

pub fn run_local_sgd(instance: &ProblemInstance, config: &AlgorithmConfig) -> Result<Trajectory> {
    config.validate()?;
    let mut recorder = Recorder::new(instance, config.record_local)?;
    let mut x = instance.start.clone();
    recorder.record(instance, 0, &x)?;
    for r in 1..=config.r {
        x = local_round(instance, &x, config, r as u64, &mut recorder);
        recorder.record(instance, r, &x)?;
    }
    Ok(recorder.finish(config, instance, None))
}

pub fn run_minibatch_sgd(instance: &ProblemInstance, config: &AlgorithmConfig) -> Result<Trajectory> {
    config.validate()?;
    let mut recorder = Recorder::new(instance, false)?;
    let mut x = instance.start.clone();
    recorder.record(instance, 0, &x)?;
    for r in 1..=config.r {
        x = minibatch_round(instance, &x, config, r as u64);
        recorder.record(instance, r, &x)?;
    }
    Ok(recorder.finish(config, instance, None))
}

/// Nesterov-style two-sequence momentum applied to the MK-averaged gradient:
/// `y_r = x_r + (r-1)/(r+2) (x_r - x_{r-1})`, then a gradient step from `y_r`.
pub fn run_accelerated_minibatch_sgd(
    instance: &ProblemInstance,
    config: &AlgorithmConfig,
) -> Result<Trajectory> {
    config.validate()?;
    let mut recorder = Recorder::new(instance, false)?;
    let mut x = instance.start.clone();
    let mut x_prev = x.clone();
    recorder.record(instance, 0, &x)?;
    for r in 1..=config.r {
        let momentum = (r as f64 - 1.0) / (r as f64 + 2.0);
        let y = &x + (&x - &x_prev) * momentum;
        let next = minibatch_round(instance, &y, config, r as u64);
        x_prev = x;
        x = next;
        recorder.record(instance, r, &x)?;
    }
    Ok(recorder.finish(config, instance, None))
}

/// SGD on machine 1's objective alone for K*R steps; suboptimality is still
/// measured against the average objective, which is what plateaus when the
/// machines disagree.
pub fn run_single_machine_sgd(
    instance: &ProblemInstance,
    config: &AlgorithmConfig,
) -> Result<Trajectory> {
    config.validate()?;
    let mut recorder = Recorder::new(instance, false)?;
    let machine = &instance.machines()[0];
    let mut x = instance.start.clone();
    recorder.record(instance, 0, &x)?;
    for r in 1..=config.r {
        for k in 0..config.k {
            let key = RngKey::new(config.noise.seed, machine.label as u64, r as u64, k as u64);
            let g = stochastic_gradient(machine, &x, &config.noise, key);
            x += g * (-config.eta);
        }
        recorder.record(instance, r, &x)?;
    }
    Ok(recorder.finish(config, instance, None))
}

/// Runs local SGD for the first `stage_switch` rounds, then mini-batch SGD
/// for the remainder. The switch round must be supplied in the config (the
/// harness can auto-derive it from the theory predictor).
pub fn run_two_stage(instance: &ProblemInstance, config: &AlgorithmConfig) -> Result<Trajectory> {
    config.validate()?;
    let r1 = config.stage_switch.ok_or_else(|| {
        Error::InvalidConfig("two_stage requires stage_switch (see two_stage_rounds)".into())
    })?;
    let mut recorder = Recorder::new(instance, config.record_local)?;
    let mut x = instance.start.clone();
    recorder.record(instance, 0, &x)?;
    for r in 1..=config.r {
        x = if r <= r1 {
            local_round(instance, &x, config, r as u64, &mut recorder)
        } else {
            minibatch_round(instance, &x, config, r as u64)
        };
        recorder.record(instance, r, &x)?;
    }
    Ok(recorder.finish(config, instance, Some(r1)))
}

/// Weighted average of all recorded local iterates with weights
/// `w_t = (1 - mu*eta/2)^{-(t+1)}`, `t` the global step index; `mu = 0`
/// degenerates to the plain average. Accumulated recursively so the
/// exponentially growing weights never overflow.
pub fn weighted_average_iterate(traj: &Trajectory, mu: f64, eta: f64) -> Result<Vector> {
    let locals = traj
        .locals
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("local iterates were not recorded".into()))?;
    if mu < 0.0 || eta <= 0.0 {
        return Err(Error::Domain(format!(
            "need mu >= 0 and eta > 0, got mu={mu}, eta={eta}"
        )));
    }
    let rho = 1.0 - mu * eta / 2.0;
    if rho <= 0.0 {
        return Err(Error::Domain(format!(
            "weights (1 - mu*eta/2)^-(t+1) undefined: mu*eta = {} >= 2",
            mu * eta
        )));
    }
    let dim = traj.final_iterate().len();
    let mut s = Vector::zeros(dim);
    let mut w = 0.0;
    for per_round in locals {
        // Steps 0..K-1 are the points where gradients are evaluated.
        for per_step in per_round.iter().take(per_round.len() - 1) {
            let mut mean = Vector::zeros(dim);
            for x in per_step {
                mean += x;
            }
            mean /= per_step.len() as f64;
            s = s * rho + mean;
            w = w * rho + 1.0;
        }
    }
    if w == 0.0 {
        return Err(Error::InvalidConfig("no local iterates recorded".into()));
    }
    Ok(s / w)
}
