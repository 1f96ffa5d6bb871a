//! When heterogeneity is mild, local GD races to a neighborhood of the
//! optimum whose radius is the fixed-point discrepancy zeta* tau / (H mu),
//! and plain mini-batch GD finishes the job from there. This example sizes
//! the switch round with two_stage_rounds, runs the combined algorithm, and
//! compares its communication count against pure mini-batch GD.
//!
//! Run with: cargo run --example two_stage

use icsim::algorithms::{run, Algorithm, AlgorithmConfig};
use icsim::heterogeneity::{tau, zeta_star};
use icsim::instances::{make_random_instance, HeteroDials};
use icsim::theory_bounds::two_stage_rounds;

fn main() -> icsim::Result<()> {
    let inst = make_random_instance(
        4,
        4,
        0.1,
        5.0,
        HeteroDials { concept_spread: 0.001, hessian_spread: 0.002 },
        12,
    )?;
    let h = inst.smoothness();
    let mu = inst.mu();
    let kappa = h / mu;
    let b = inst.radius_b();
    let z = zeta_star(&inst)?.canonical;
    let (t, _) = tau(&inst);
    let (k, epsilon) = (64usize, 1e-6);

    let delta = z * t / (h * mu);
    println!("kappa = {kappa:.1}, B = {b:.3}, discrepancy floor = {delta:.3e}");

    let plan = two_stage_rounds(kappa, k as f64, z, t, h, mu, b, epsilon)?;
    println!(
        "plan: {} local rounds (K = {k}), then {} mini-batch rounds, {} total",
        plan.r1, plan.r2, plan.total
    );

    let eta = 0.5 / h;
    let budget = 4 * plan.total;
    let mut cfg = AlgorithmConfig::new(Algorithm::TwoStage, eta, k, budget);
    cfg.gamma = eta;
    cfg.stage_switch = Some(plan.r1);
    let traj = run(&inst, &cfg)?;
    let two_stage_rounds_used = traj.rounds_to_accuracy(epsilon);

    let mut mb = AlgorithmConfig::new(Algorithm::MinibatchSgd, eta, k, budget);
    mb.gamma = eta;
    let mb_traj = run(&inst, &mb)?;
    let mb_rounds = mb_traj.rounds_to_accuracy(epsilon);

    println!();
    println!("rounds to reach suboptimality {epsilon:.0e}:");
    println!("  two-stage     : {:?}", two_stage_rounds_used);
    println!("  mini-batch GD : {:?}", mb_rounds);
    println!("  prediction    : {}", plan.total);
    Ok(())
}
