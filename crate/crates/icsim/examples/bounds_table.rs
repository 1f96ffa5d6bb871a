//! Evaluates the convergence-rate formulas with full term breakdowns: the
//! strongly convex and convex local SGD upper bounds, the local SGD lower
//! bound, and the any-algorithm lower bound, then sweeps the round budget to
//! show which terms dominate as communication grows.
//!
//! Run with: cargo run --example bounds_table

use icsim::theory_bounds::{
    eval_ai_lower_bound, eval_convex_upper_bound, eval_lsgd_lower_bound,
    eval_sc_upper_bound, BoundParams,
};

fn main() -> icsim::Result<()> {
    let params = BoundParams {
        h: 1.0,
        b: 1.0,
        sigma: 0.5,
        mu: 0.1,
        tau: 0.2,
        zeta: 0.3,
        zeta_star: 0.1,
        q: 0.0,
        m: 8.0,
        k: 16.0,
        r: 32.0,
        d_ball: 1.0,
        epsilon: 1e-6,
    };

    print!("{}", eval_sc_upper_bound(&params)?.render_table());
    println!();
    print!("{}", eval_convex_upper_bound(&params)?.render_table());
    println!();
    print!("{}", eval_lsgd_lower_bound(&params)?.render_table());
    println!();
    print!("{}", eval_ai_lower_bound(&params)?.render_table());

    println!();
    println!("convex upper bound vs rounds:");
    println!("{:>6} {:>14}", "R", "bound");
    for r in [8.0, 16.0, 32.0, 64.0, 128.0] {
        let mut p = params;
        p.r = r;
        println!("{r:>6} {:>14.6e}", eval_convex_upper_bound(&p)?.value);
    }
    Ok(())
}
