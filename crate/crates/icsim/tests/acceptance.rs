//! End-to-end acceptance checks. Each test covers one numbered criterion and
//! prints a single pass/fail line (visible with `--nocapture` or on failure).

use std::time::Instant;

use icsim::algorithms::{
    run_local_sgd, run_minibatch_sgd, run_two_stage, Algorithm, AlgorithmConfig,
};
use icsim::fixed_point::{contraction_predictor, discrepancy_bounds, fixed_point};
use icsim::harness::{
    self, log_grid, parallel_map, step_size_search, sweep_fixed_point, Schedule,
};
use icsim::heterogeneity::{rho, rho_bounds, zeta_ball, zeta_star, tau};
use icsim::instances::{
    chain_nominal_optimum, chain_toeplitz_eigenvalues, make_chain_instance, make_gd_worst_case,
    make_motivating_pair, make_random_instance, make_rank_one_pair, ChainSpec, HeteroDials,
};
use icsim::oracle::{minibatch_gradient, noise_vector, NoiseSpec, RngKey};
use icsim::quad_core::{ProblemInstance, Vector};
use icsim::theory_bounds::{
    closed_form_motivating, eval_ai_lower_bound, eval_gd_lower_bound, eval_lsgd_lower_bound,
    eval_sc_upper_bound, two_stage_rounds, BoundParams,
};

fn criterion(number: usize, name: &str, pass: bool, detail: &str) {
    let status = if pass { "pass" } else { "FAIL" };
    println!("criterion {number:02} {name}: {status} ({detail})");
    assert!(pass, "criterion {number:02} {name} failed: {detail}");
}

/// Seeded strongly convex family shared by several criteria: M in 2..=8,
/// d in 2..=10, moderate heterogeneity in both optima and Hessians.
fn family_instance(seed: u64) -> ProblemInstance {
    let m = 2 + (seed % 7) as usize;
    let d = 2 + (seed % 9) as usize;
    let h = 1.5 + 0.5 * (seed % 4) as f64;
    make_random_instance(
        m,
        d,
        0.5,
        h,
        HeteroDials { concept_spread: 1.0, hessian_spread: 0.5 },
        seed,
    )
    .expect("family instance")
}

#[test]
fn criterion_01_fixed_point_closed_form_vs_simulation() {
    let start = Instant::now();
    let seeds: Vec<u64> = (0..100).collect();
    let worst = parallel_map(&seeds, |&seed| {
        let inst = family_instance(seed);
        let k = [1usize, 2, 5, 10][(seed % 4) as usize];
        let eta = 0.5 / inst.smoothness();
        let report = fixed_point(&inst, eta, k).expect("fixed point");
        let x_inf = report.x_infinity.expect("exists at eta = 1/(2H)");
        let cfg = AlgorithmConfig::new(Algorithm::LocalSgd, eta, k, 10_000);
        let traj = run_local_sgd(&inst, &cfg).expect("run");
        (traj.final_iterate() - &x_inf).norm() / (1.0 + x_inf.norm())
    })
    .into_iter()
    .fold(0.0f64, f64::max);
    let elapsed = start.elapsed().as_secs_f64();
    criterion(
        1,
        "fixed_point_agreement",
        worst <= 1e-6 && elapsed < 30.0,
        &format!("worst relative error {worst:.2e}, {elapsed:.1}s"),
    );
}

#[test]
fn criterion_02_k1_fixed_point_is_optimum() {
    let seeds: Vec<u64> = (0..100).collect();
    let worst = parallel_map(&seeds, |&seed| {
        let inst = family_instance(seed);
        let x_star = inst.global_optimum().expect("optimum");
        let h = inst.smoothness();
        let mut worst = 0.0f64;
        for eta in [0.1 / h, 0.5 / h, 1.0 / h] {
            let report = fixed_point(&inst, eta, 1).expect("fixed point");
            let x_inf = report.x_infinity.expect("exists at K=1");
            worst = worst.max((&x_inf - &x_star).norm() / (1.0 + x_star.norm()));
        }
        worst
    })
    .into_iter()
    .fold(0.0f64, f64::max);
    criterion(
        2,
        "k1_fixed_point_is_optimum",
        worst <= 1e-10,
        &format!("worst relative error {worst:.2e}"),
    );
}

#[test]
fn criterion_03_motivating_closed_form() {
    let h = 2.0;
    let inst = make_motivating_pair(h, &[1.0, -2.0]).expect("pair");
    let x_star = inst.global_optimum().expect("optimum");
    let mut worst = 0.0f64;
    for i in 1..=5 {
        let eta = 0.2 * i as f64 / h;
        for j in 1..=5 {
            let beta = 0.4 * j as f64;
            for k in [1usize, 2, 4, 16, 32] {
                for r in [1usize, 2, 4, 16, 32] {
                    let mut cfg = AlgorithmConfig::new(Algorithm::LocalSgd, eta, k, r);
                    cfg.beta = beta;
                    let traj = run_local_sgd(&inst, &cfg).expect("run");
                    let predicted = closed_form_motivating(h, eta, beta, k, r, &x_star);
                    worst = worst.max((traj.final_iterate() - &predicted).norm());
                }
            }
        }
    }
    // One shot: beta = 2, eta = 1/(2H), K = 1000 solves in a single round.
    let mut cfg = AlgorithmConfig::new(Algorithm::LocalSgd, 0.5 / h, 1000, 1);
    cfg.beta = 2.0;
    let traj = run_local_sgd(&inst, &cfg).expect("run");
    let one_shot = (traj.final_iterate() - &x_star).norm() / x_star.norm();
    criterion(
        3,
        "motivating_closed_form",
        worst <= 1e-12 && one_shot <= 1e-6,
        &format!("grid worst {worst:.2e}, one-shot relative {one_shot:.2e}"),
    );
}

#[test]
fn criterion_04_discrepancy_inequalities() {
    let seeds: Vec<u64> = (0..1000).collect();
    let violations: usize = parallel_map(&seeds, |&seed| {
        let inst = family_instance(seed);
        let k = 2 + (seed % 49) as usize;
        let eta = 0.5 / inst.smoothness();
        let rep = discrepancy_bounds(&inst, eta, k).expect("bounds");
        let ok = rep.measured_xstar_xbar <= rep.bound_xstar_xbar + 1e-9
            && rep.measured_xinf_xbar <= rep.bound_xinf_xbar + 1e-9;
        usize::from(!ok)
    })
    .into_iter()
    .sum();
    criterion(
        4,
        "discrepancy_inequalities",
        violations == 0,
        &format!("{violations} violations over 1000 instances"),
    );
}

#[test]
fn criterion_05_contraction_with_discrepancy() {
    let seeds: Vec<u64> = (0..200).collect();
    let violations: usize = parallel_map(&seeds, |&seed| {
        let inst = family_instance(seed);
        let k = [2usize, 4, 8, 16][(seed % 4) as usize];
        let r = [10usize, 25, 50, 100][(seed % 4) as usize];
        let eta = 0.5 / inst.smoothness();
        let x_star = inst.global_optimum().expect("optimum");
        let cfg = AlgorithmConfig::new(Algorithm::LocalSgd, eta, k, r);
        let traj = run_local_sgd(&inst, &cfg).expect("run");
        let measured = (traj.final_iterate() - &x_star).norm();
        let to_fixed = contraction_predictor(&inst, eta, 1.0, k, r).expect("predictor");
        let disc = discrepancy_bounds(&inst, eta, k).expect("bounds");
        let bound = to_fixed + disc.bound_xinf_xbar + disc.bound_xstar_xbar;
        usize::from(measured > bound + 1e-9)
    })
    .into_iter()
    .sum();
    criterion(
        5,
        "contraction_with_discrepancy",
        violations == 0,
        &format!("{violations} violations over 200 instances"),
    );
}

#[test]
fn criterion_06_local_sgd_floor() {
    let start = Instant::now();
    let r = 20;
    let (inst, _) = make_rank_one_pair(1.0, 1.0, 2, 3.0 * r as f64).expect("pair");
    let floor = 1e-3 * 1.0 * 1.0 / r as f64;
    let etas = log_grid(1e-4, 2.0, 50);
    let betas = log_grid(1e-2, 10.0, 50);
    let mut bests = Vec::new();
    for k in [1usize, 10, 100, 1000] {
        let base = AlgorithmConfig::new(Algorithm::LocalSgd, 0.1, k, r);
        let search = step_size_search(&inst, &base, &etas, &betas).expect("search");
        bests.push(search.best_suboptimality);
    }
    let best = bests.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = bests.iter().cloned().fold(0.0f64, f64::max) / best;
    let elapsed = start.elapsed().as_secs_f64();
    criterion(
        6,
        "local_sgd_floor",
        best >= floor && spread <= 2.0 && elapsed < 300.0,
        &format!(
            "best {best:.3e} vs floor {floor:.3e}, K-spread {spread:.2}, {elapsed:.0}s"
        ),
    );
}

#[test]
fn criterion_07_gd_floor() {
    let (h, kappa, b) = (1.0, 30.0, 1.0);
    let inst = make_gd_worst_case(h, kappa, b).expect("instance");
    let r = 30;
    let floor = eval_gd_lower_bound(h, b, kappa, r as f64).expect("floor");
    let base = AlgorithmConfig::new(Algorithm::MinibatchSgd, 0.1, 1, r);
    let etas = log_grid(1e-3, 2.5, 60);
    let search = step_size_search(&inst, &base, &etas, &[1.0]).expect("search");
    criterion(
        7,
        "gd_floor",
        search.best_suboptimality >= floor,
        &format!("best {:.3e} vs floor {floor:.3e}", search.best_suboptimality),
    );
}

#[test]
fn criterion_08_chain_instance() {
    let spec = ChainSpec { h: 1.0, b: 1.0, r: 10, dim: None };
    let (inst, x0) = make_chain_instance(&spec).expect("chain");
    let d = inst.dim();
    assert!(d <= 256, "default dimension {d} exceeds 256");

    // Eigenvalues match the Toeplitz formula within 1e-9.
    let predicted = chain_toeplitz_eigenvalues(spec.h, spec.q(), d);
    let eig_err = inst
        .average_hessian()
        .eigenvalues()
        .iter()
        .zip(&predicted)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);

    // Exact zero propagation for local SGD over R = 10 rounds.
    let frontier0 = x0.iter().rposition(|&v| v != 0.0).expect("nonzero start");
    let cfg = AlgorithmConfig::new(Algorithm::LocalSgd, 0.1, 7, 10);
    let traj = run_local_sgd(&inst, &cfg).expect("run");
    let mut leaks = 0usize;
    for rec in &traj.rounds {
        for i in (frontier0 + rec.round + 1)..d {
            if rec.iterate[i] != 0.0 {
                leaks += 1;
            }
        }
    }

    // Suboptimality floor under grid-tuned local SGD, K <= 100.
    let floor = 1e-3 * spec.h * spec.b * spec.b / (spec.r * spec.r) as f64;
    let etas = log_grid(1e-3, 0.5, 10);
    let betas = log_grid(0.25, 4.0, 7);
    let mut best = f64::INFINITY;
    for k in [1usize, 10, 100] {
        let base = AlgorithmConfig::new(Algorithm::LocalSgd, 0.1, k, spec.r);
        let search = step_size_search(&inst, &base, &etas, &betas).expect("search");
        best = best.min(search.best_suboptimality);
    }

    criterion(
        8,
        "chain_instance",
        eig_err <= 1e-9 && leaks == 0 && best >= floor,
        &format!("eig err {eig_err:.1e}, {leaks} leaks, best {best:.3e} vs floor {floor:.3e}"),
    );
    // The nominal optimum stays within B of the start.
    let nominal = chain_nominal_optimum(&spec, d);
    assert!((&x0 - &nominal).norm_squared() <= spec.b * spec.b);
}

#[test]
fn criterion_09_oracle_statistics() {
    // E||xi||^2 within 2% of sigma^2 over 1e5 draws.
    let noise = NoiseSpec::new(1.5, 2024);
    let n = 100_000u64;
    let mut acc = 0.0;
    for i in 0..n {
        acc += noise_vector(3, &noise, RngKey::new(noise.seed, 0, i, 0)).norm_squared();
    }
    let mean = acc / n as f64;
    let noise_err = (mean - 2.25).abs() / 2.25;

    // Mini-batch deviation variance within 5% of sigma^2/(MK) at (4, 8).
    let machines: Vec<_> = (0..4)
        .map(|i| icsim::quad_core::diag_machine(&[1.0, 1.0], &[0.0, 0.0], i))
        .collect();
    let inst = ProblemInstance::new(machines, 1.0, None).expect("instance");
    let x = Vector::from_column_slice(&[0.5, -0.5]);
    let exact = inst.average_gradient(&x);
    let mb_noise = NoiseSpec::new(1.0, 99);
    let reps = 10_000u64;
    let mut acc = 0.0;
    for rep in 0..reps {
        let g = minibatch_gradient(&inst, &x, 8, &mb_noise, rep);
        acc += (g - &exact).norm_squared();
    }
    let var = acc / reps as f64;
    let var_err = (var - 1.0 / 32.0).abs() / (1.0 / 32.0);

    criterion(
        9,
        "oracle_statistics",
        noise_err <= 0.02 && var_err <= 0.05,
        &format!("noise mean error {noise_err:.3}, variance error {var_err:.3}"),
    );
}

#[test]
fn criterion_10_heterogeneity_inequalities() {
    let seeds: Vec<u64> = (0..100).collect();
    let violations: usize = parallel_map(&seeds, |&seed| {
        let inst = family_instance(seed);
        let h = inst.smoothness();
        let b = inst.radius_b();
        let z = zeta_star(&inst).expect("zeta").canonical;
        let (t, _) = tau(&inst);
        let mut bad = 0usize;
        for &k in &[1usize, 8, 64] {
            for &eta in &[0.1 / h, 1.0 / h] {
                let measured = rho(&inst, eta, k).expect("rho");
                let bounds = rho_bounds(&inst, eta, k).expect("bounds");
                if measured > bounds.general + 1e-9 || measured > bounds.quadratic + 1e-9 {
                    bad += 1;
                }
            }
        }
        for &scale in &[0.5, 1.0, 2.0] {
            let d = scale * b;
            let ball = zeta_ball(&inst, d, 300, seed).expect("ball");
            if ball.empirical_sup > z + t * d + 1e-9 {
                bad += 1;
            }
        }
        bad
    })
    .into_iter()
    .sum();

    // Quadratic rho bound trend at eta = 1/(2 H sqrt(K)) decays toward zero.
    let inst = family_instance(0);
    let h = inst.smoothness();
    let mut values = Vec::new();
    for &k in &[10usize, 100, 1000, 10_000] {
        let eta = 0.5 / (h * (k as f64).sqrt());
        values.push(rho_bounds(&inst, eta, k).expect("bounds").quadratic);
    }
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    let vanishing = values[3] <= 0.05 * values[0];

    criterion(
        10,
        "heterogeneity_inequalities",
        violations == 0 && decreasing && vanishing,
        &format!(
            "{violations} violations; trend {:?} decreasing={decreasing}",
            values.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>()
        ),
    );
}

#[test]
fn criterion_11_figure_trends() {
    let start = Instant::now();
    let inst = make_random_instance(
        5,
        2,
        1.0,
        6.0,
        HeteroDials { concept_spread: 1.0, hessian_spread: 0.5 },
        0,
    )
    .expect("family");
    let schedules = vec![
        ("half_h".to_string(), Schedule { c: 0.5, h_exp: -1.0, k_exp: 0.0 }),
        ("h_k_squared".to_string(), Schedule { c: 1.0, h_exp: -1.0, k_exp: -2.0 }),
    ];
    let k_grid = [2usize, 5, 10, 25, 50, 100];
    let rows = sweep_fixed_point(&inst, &schedules, &k_grid).expect("sweep");
    let trend = |name: &str, pick: fn(&harness::FixedPointRow) -> f64| -> bool {
        let vals: Vec<f64> = rows
            .iter()
            .filter(|r| r.schedule == name)
            .map(pick)
            .collect();
        vals.len() == k_grid.len() && vals.windows(2).all(|w| w[1] <= w[0] + 1e-12)
    };
    let trend_a = trend("half_h", |r| r.dist_to_xbar.expect("exists"));
    let trend_b = trend("h_k_squared", |r| r.dist_to_xstar.expect("exists"));
    let elapsed = start.elapsed().as_secs_f64();
    criterion(
        11,
        "figure_trends",
        trend_a && trend_b && elapsed < 10.0,
        &format!("trend_a={trend_a}, trend_b={trend_b}, {elapsed:.1}s"),
    );
}

#[test]
fn criterion_12_two_stage_advantage() {
    // Mildly heterogeneous, kappa = 50 instance with a tiny fixed-point
    // discrepancy floor relative to B.
    let inst = make_random_instance(
        4,
        4,
        0.1,
        5.0,
        HeteroDials { concept_spread: 0.001, hessian_spread: 0.002 },
        7,
    )
    .expect("instance");
    let h = inst.smoothness();
    let mu = inst.mu();
    let kappa = h / mu;
    let b = inst.radius_b();
    let z = zeta_star(&inst).expect("zeta").canonical;
    let (t, _) = tau(&inst);
    let delta = z * t / (h * mu);
    assert!(delta <= 1e-3 * b, "floor {delta:.2e} not small vs B {b:.2e}");

    let k = 64;
    let epsilon = 1e-6;
    let plan = two_stage_rounds(kappa, k as f64, z, t, h, mu, b, epsilon).expect("plan");

    let mut cfg = AlgorithmConfig::new(Algorithm::TwoStage, 0.5 / h, k, 3 * plan.total.max(10));
    cfg.gamma = 1.0 / h;
    cfg.stage_switch = Some(plan.r1);
    let traj = run_two_stage(&inst, &cfg).expect("two stage");
    let two_stage_r = traj.rounds_to_accuracy(epsilon);

    let mut mb = AlgorithmConfig::new(Algorithm::MinibatchSgd, 1.0 / h, k, 2000);
    mb.gamma = 1.0 / h;
    let mb_traj = run_minibatch_sgd(&inst, &mb).expect("minibatch");
    let mb_r = mb_traj.rounds_to_accuracy(epsilon);

    let pass = match (two_stage_r, mb_r) {
        (Some(ts), Some(mbr)) => ts <= mbr && (ts as f64) <= 1.5 * plan.total as f64,
        _ => false,
    };
    criterion(
        12,
        "two_stage_advantage",
        pass,
        &format!(
            "two-stage {:?} rounds, minibatch {:?}, prediction {}",
            two_stage_r, mb_r, plan.total
        ),
    );
}

#[test]
fn criterion_13_bound_evaluators() {
    // Arithmetic spot checks on the hand-evaluated oracles.
    let p = BoundParams {
        h: 1.0,
        b: 1.0,
        sigma: 1.0,
        mu: 0.1,
        tau: 0.5,
        zeta: 1.0,
        m: 4.0,
        k: 8.0,
        r: 16.0,
        ..Default::default()
    };
    let sc = eval_sc_upper_bound(&p).expect("sc");
    let sc_expected = (-12.8f64).exp() + 1.0 / 51.2 + 0.25 / 2.048 + 0.25 / 0.256;
    let sc_ok = (sc.value - sc_expected).abs() <= 1e-12 * sc_expected;

    let p2 = BoundParams {
        sigma: 1.0,
        zeta_star: 1.0,
        m: 2.0,
        k: 4.0,
        r: 8.0,
        ..Default::default()
    };
    let lsgd = eval_lsgd_lower_bound(&p2).expect("lsgd");
    let lsgd_expected = 0.125 + 2.0f64.powf(-8.0 / 3.0) + 0.125 + 0.25;
    let lsgd_ok = (lsgd.value - lsgd_expected).abs() <= 1e-12;

    let p3 = BoundParams { sigma: 1.0, m: 4.0, k: 4.0, r: 10.0, ..Default::default() };
    let ai = eval_ai_lower_bound(&p3).expect("ai");
    let ai_ok = (ai.value - (0.01 + 1.0 / 160.0f64.sqrt())).abs() <= 1e-12;

    // Grid monotonicity via the verify suite.
    let mono = harness::verify("bounds_monotonicity").expect("suite").passed;

    criterion(
        13,
        "bound_evaluators",
        sc_ok && lsgd_ok && ai_ok && mono,
        &format!("spot checks sc={sc_ok} lsgd={lsgd_ok} ai={ai_ok} monotonicity={mono}"),
    );
}
