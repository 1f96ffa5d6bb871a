//! Two constructions on which no step-size tuning helps:
//!
//! - the rank-1 pair, whose condition number is tuned to 3R so that local
//!   SGD keeps a suboptimality floor of order H B^2 / R for every (eta,
//!   beta) and every K;
//! - the classic ill-conditioned quadratic for plain GD, whose best-over-eta
//!   suboptimality after R rounds stays above (H B^2 / (4 kappa)) e^(-12 R /
//!   kappa).
//!
//! Run with: cargo run --release --example lower_bound_floors

use icsim::algorithms::{run, Algorithm, AlgorithmConfig};
use icsim::harness::{log_grid, step_size_search};
use icsim::instances::{make_gd_worst_case, make_rank_one_pair};
use icsim::theory_bounds::eval_gd_lower_bound;

fn main() -> icsim::Result<()> {
    let (h, b, r) = (1.0, 1.0, 20usize);
    let kappa = 3.0 * r as f64;
    let (pair, alpha) = make_rank_one_pair(h, b, 4, kappa)?;
    println!("rank-1 pair: kappa = {kappa}, alpha = {alpha:.6}");
    println!(
        "floor of order H B^2 / R = {:.3e}; no K or (eta, beta) gets below a\nsmall constant times it:",
        h * b * b / r as f64
    );
    println!();
    println!("{:>6} {:>14} {:>10} {:>10}", "K", "best subopt", "best eta", "best beta");
    let eta_grid = log_grid(1e-3 / h, 2.0 / h, 20);
    let beta_grid = log_grid(0.1, 10.0, 20);
    for k in [1usize, 10, 100] {
        let base = AlgorithmConfig::new(Algorithm::LocalSgd, 0.1, k, r);
        let search = step_size_search(&pair, &base, &eta_grid, &beta_grid)?;
        println!(
            "{k:>6} {:>14.6e} {:>10.4e} {:>10.4e}",
            search.best_suboptimality, search.best_eta, search.best_beta
        );
    }

    let (kappa, r) = (30.0, 30usize);
    let gd = make_gd_worst_case(h, kappa, b)?;
    let floor = eval_gd_lower_bound(h, b, kappa, r as f64)?;
    let mut best = f64::INFINITY;
    for eta in log_grid(1e-4 / h, 3.0 / h, 50) {
        let cfg = AlgorithmConfig::new(Algorithm::MinibatchSgd, eta, 1, r);
        let mut cfg = cfg;
        cfg.gamma = eta;
        if let Ok(traj) = run(&gd, &cfg) {
            let s = traj.final_suboptimality();
            if s.is_finite() {
                best = best.min(s);
            }
        }
    }
    println!();
    println!("GD on the kappa = {kappa} worst case, R = {r}:");
    println!("  best over eta = {best:.6e}");
    println!("  lower bound   = {floor:.6e}");
    Ok(())
}
