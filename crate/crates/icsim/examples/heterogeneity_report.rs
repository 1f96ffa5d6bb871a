//! Measures every heterogeneity quantity the library tracks on one random
//! instance: zeta* (first-order disagreement at the optimum, in both the
//! distance and gradient forms), tau (Hessian spread), the gradient
//! disagreement over a ball around the optimum, and rho (drift of exact
//! local GD started at the optimum) with its two upper bounds.
//!
//! Run with: cargo run --example heterogeneity_report

use icsim::heterogeneity::{heterogeneity_report, rho_bounds};
use icsim::instances::{make_random_instance, HeteroDials};

fn main() -> icsim::Result<()> {
    let inst = make_random_instance(
        4,
        6,
        0.5,
        4.0,
        HeteroDials { concept_spread: 1.0, hessian_spread: 0.5 },
        42,
    )?;
    let h = inst.smoothness();
    let b = inst.radius_b();
    let eta = 0.5 / h;
    let k = 16;

    let report = heterogeneity_report(&inst, Some((b, 2000, 0)), Some((eta, k)))?;
    println!("zeta* (distance form) = {:.6e}", report.zeta_star);
    println!("zeta* (gradient form) = {:.6e}", report.zeta_star_gradient_form);
    println!("tau                   = {:.6e}", report.tau);
    println!("Q (quadratics)        = {:.6e}", report.q_lipschitz);

    let ball = report.ball.expect("requested");
    println!();
    println!("RMS gradient disagreement over the ball |x - x*| <= {:.3}:", ball.radius);
    println!("  empirical sup = {:.6e}", ball.empirical_sup);
    println!("  zeta* + tau D = {:.6e}", ball.analytic_bound);

    let rho = report.rho.expect("requested");
    let bounds = rho_bounds(&inst, eta, k)?;
    println!();
    println!("rho at eta = 1/(2H), K = {k}:");
    println!("  measured        = {:.6e}", rho.value);
    println!("  general bound   = {:.6e}  (zeta* ((1 + eta H)^(K-1) - 1))", bounds.general);
    println!("  quadratic bound = {:.6e}  ((1 - (1 - eta H)^K) zeta* / (eta K))", bounds.quadratic);
    Ok(())
}
