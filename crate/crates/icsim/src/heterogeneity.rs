//! Measurements of how much the machines disagree: first-order heterogeneity
//! at the optimum (zeta*), Hessian spread (tau), gradient disagreement over a
//! ball, and the drift of exact local GD started at the optimum (rho).
//!
//! The canonical zeta* here is the RMS-distance form
//! `H sqrt((1/M) sum_m ||x_m* - x*||^2)`; the RMS gradient norm at `x*` is
//! reported alongside as a cross-check, and the two always agree up to a
//! factor in `[mu/H, 1]`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad_core::{ProblemInstance, SymMatrix, Vector};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ZetaStar {
    /// H-scaled RMS distance of the machine optima from x*.
    pub canonical: f64,
    /// RMS gradient norm at x*, sqrt((1/M) sum_m ||grad F_m(x*)||^2).
    pub gradient_form: f64,
}

pub fn zeta_star(instance: &ProblemInstance) -> Result<ZetaStar> {
    for m in instance.machines() {
        if !m.is_strongly_convex() {
            return Err(Error::AmbiguousOptimum { label: m.label });
        }
    }
    let x_star = instance.global_optimum()?;
    let m_count = instance.num_machines() as f64;
    let mut dist_sq = 0.0;
    let mut grad_sq = 0.0;
    for m in instance.machines() {
        dist_sq += (&x_star - &m.optimum).norm_squared();
        grad_sq += m.gradient(&x_star).norm_squared();
    }
    Ok(ZetaStar {
        canonical: instance.smoothness() * (dist_sq / m_count).sqrt(),
        gradient_form: (grad_sq / m_count).sqrt(),
    })
}

/// Worst-case spectral-norm difference between two machine Hessians, plus the
/// full pairwise matrix.
pub fn tau(instance: &ProblemInstance) -> (f64, DMatrix<f64>) {
    let m_count = instance.num_machines();
    let mut pairwise = DMatrix::zeros(m_count, m_count);
    let mut max = 0.0_f64;
    for i in 0..m_count {
        for j in (i + 1)..m_count {
            let diff = instance.machines()[i]
                .hessian
                .sub(&instance.machines()[j].hessian)
                .expect("machines share dimension");
            let norm = diff.spectral_norm();
            pairwise[(i, j)] = norm;
            pairwise[(j, i)] = norm;
            max = max.max(norm);
        }
    }
    (max, pairwise)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ZetaBallReport {
    pub radius: f64,
    /// Largest observed root-mean-square (over machines) gradient
    /// disagreement `sqrt((1/M) sum_m ||grad F_m(x) - grad F(x)||^2)` over
    /// the ball of radius `D` around the global optimum.
    pub empirical_sup: f64,
    /// `zeta_star + tau * D`: the triangle inequality in the machine average
    /// bounds the RMS disagreement at `x` by the RMS gradient norm at the
    /// optimum plus `tau ||x - x*||`.
    pub analytic_bound: f64,
}

/// Supremum of the machine-RMS gradient disagreement over the ball of radius
/// `D` centered at the global optimum, where local iterates concentrate.
/// Estimated by Monte Carlo over the ball boundary plus an exact maximizer:
/// the squared RMS is the convex quadratic `y' P y + 2 q' y + c` in the
/// offset `y = x - x*`, so its supremum sits on the boundary and is found by
/// the same secular equation as an affine map with `B = P^{1/2}`.
pub fn zeta_ball(
    instance: &ProblemInstance,
    radius: f64,
    n_samples: usize,
    seed: u64,
) -> Result<ZetaBallReport> {
    if radius < 0.0 {
        return Err(Error::Domain(format!("ball radius must be >= 0, got {radius}")));
    }
    let d = instance.dim();
    let m_count = instance.num_machines() as f64;
    let center = instance.global_optimum()?;
    let (tau_val, _) = tau(instance);
    let analytic_bound = zeta_star(instance)?.canonical + tau_val * radius;

    let disagreement = |x: &Vector| -> f64 {
        let g_avg = instance.average_gradient(x);
        let sum: f64 = instance
            .machines()
            .iter()
            .map(|m| (m.gradient(x) - &g_avg).norm_squared())
            .sum();
        (sum / m_count).sqrt()
    };

    let at_offset = |y: Vector| -> Vector {
        let n = y.norm();
        let y = if n > radius {
            if radius == 0.0 { Vector::zeros(d) } else { y * (radius / n) }
        } else {
            y
        };
        &center + y
    };

    let mut sup = disagreement(&center);

    if radius > 0.0 {
        // Squared RMS at x* + y is y' P y + 2 q' y + const with
        // P = (1/M) sum_m B_m^2 and q = (1/M) sum_m B_m c_m, where
        // B_m = A_m - A and c_m is machine m's disagreement at x*. Reduce to
        // the affine maximizer via B = P^{1/2}, b = B^+ q (q is orthogonal to
        // the null space of P since it lives in the span of the B_m ranges).
        let avg = instance.average_hessian().clone();
        let g_avg = instance.average_gradient(&center);
        let mut p = DMatrix::<f64>::zeros(d, d);
        let mut q = Vector::zeros(d);
        for m in instance.machines() {
            let b_m = m.hessian.sub(&avg)?;
            let c_m = m.gradient(&center) - &g_avg;
            p += b_m.entries() * b_m.entries();
            q += b_m.mul_vec(&c_m);
        }
        p.unscale_mut(m_count);
        q.unscale_mut(m_count);
        let p = SymMatrix::new(0.5 * (&p + p.transpose()))?;
        let sqrt_p = p.map_spectrum(|l| l.max(0.0).sqrt())?;
        let evecs = sqrt_p.eigenvectors();
        let evals = sqrt_p.eigenvalues();
        let q_coord = evecs.transpose() * &q;
        let tol = 1e-12 * sqrt_p.lambda_max().max(1.0);
        let b_coord = Vector::from_iterator(
            d,
            (0..d).map(|i| if evals[i] > tol { q_coord[i] / evals[i] } else { 0.0 }),
        );
        let b_vec = evecs * b_coord;
        if let Some(y) = affine_ball_maximizer(&sqrt_p, &b_vec, radius) {
            sup = sup.max(disagreement(&at_offset(y)));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unif = Uniform::new(0.0_f64, 1.0_f64);
    for _ in 0..n_samples {
        let mut y = Vector::from_iterator(d, (0..d).map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z
        }));
        let n = y.norm();
        if n > 0.0 {
            let u: f64 = unif.sample(&mut rng);
            y *= radius * u.powf(1.0 / d as f64) / n;
        }
        sup = sup.max(disagreement(&at_offset(y)));
    }

    Ok(ZetaBallReport {
        radius,
        empirical_sup: sup,
        analytic_bound,
    })
}

/// Maximizes ||B x + b|| over ||x|| <= D for symmetric B. Returns a boundary
/// point achieving the maximum (up to the bisection tolerance), or None when
/// B and b are both zero.
fn affine_ball_maximizer(b_mat: &SymMatrix, b_vec: &Vector, radius: f64) -> Option<Vector> {
    let d = b_mat.dim();
    let evecs = b_mat.eigenvectors();
    let evals = b_mat.eigenvalues();
    // Coordinates of b in the eigenbasis; the objective separates as
    // sum_i (beta_i x_i + b_i)^2 with beta_i the eigenvalues of B.
    let b_coord = evecs.transpose() * b_vec;
    let beta_sq_max = evals.iter().fold(0.0_f64, |acc, &l| acc.max(l * l));
    if beta_sq_max == 0.0 && b_coord.norm() == 0.0 {
        return None;
    }
    if beta_sq_max == 0.0 {
        // Pure constant map: any point works; pick the one aligned with b.
        return Some(b_vec * (radius / b_vec.norm()));
    }

    // Stationarity on the boundary: (B^2 - lam I) x = -B b with lam >= beta_max^2
    // for the maximizer, so x_i = beta_i b_i / (lam - beta_i^2) and lam solves
    // sum_i x_i(lam)^2 = D^2, decreasing in lam on (beta_max^2, inf).
    let coupling: Vec<f64> = (0..d).map(|i| evals[i] * b_coord[i]).collect();
    let norm_sq_at = |lam: f64| -> f64 {
        (0..d)
            .map(|i| {
                if coupling[i] == 0.0 {
                    return 0.0;
                }
                let denom = lam - evals[i] * evals[i];
                let xi = coupling[i] / denom;
                xi * xi
            })
            .sum()
    };

    // Hard case: no coupling along the top eigenspace. The secular equation
    // may undershoot D^2 for every lam; fill the remaining norm inside that
    // eigenspace instead.
    let top_coupled = (0..d)
        .any(|i| evals[i] * evals[i] > beta_sq_max * (1.0 - 1e-12) && coupling[i].abs() > 0.0);

    let mut lo = beta_sq_max;
    let mut hi = beta_sq_max.max(1.0);
    if top_coupled {
        // Bracket: norm -> inf as lam -> beta_max^2+, norm -> 0 as lam -> inf.
        while norm_sq_at(hi) > radius * radius {
            hi *= 2.0;
            if !hi.is_finite() {
                return None;
            }
        }
        // Move lo up from the pole until the norm exceeds D^2.
        let mut step = (hi - lo).max(1e-300);
        loop {
            let cand = lo + step * 1e-12;
            if norm_sq_at(cand) >= radius * radius {
                lo = cand;
                break;
            }
            step *= 0.5;
            if step < 1e-250 {
                break;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if norm_sq_at(mid) >= radius * radius {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let lam = 0.5 * (lo + hi);
        let mut x_coord = Vector::zeros(d);
        for i in 0..d {
            if coupling[i] != 0.0 {
                x_coord[i] = coupling[i] / (lam - evals[i] * evals[i]);
            }
        }
        Some(evecs * x_coord)
    } else {
        // At lam = beta_max^2 the coupled part is finite; pad the rest of the
        // norm along a top eigenvector.
        let lam = beta_sq_max;
        let mut x_coord = Vector::zeros(d);
        let mut used = 0.0;
        for i in 0..d {
            let gap = lam - evals[i] * evals[i];
            if gap > 1e-12 * beta_sq_max.max(1.0) {
                x_coord[i] = coupling[i] / gap;
                used += x_coord[i] * x_coord[i];
            }
        }
        if used > radius * radius {
            // Interior coupled mass alone exceeds the ball; fall back to the
            // regular bisection above the pole.
            let mut lo = lam;
            let mut hi = lam.max(1.0);
            while norm_sq_at(hi) > radius * radius {
                hi *= 2.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if norm_sq_at(mid) >= radius * radius {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let lam2 = 0.5 * (lo + hi);
            for i in 0..d {
                x_coord[i] = if coupling[i] != 0.0 {
                    coupling[i] / (lam2 - evals[i] * evals[i])
                } else {
                    0.0
                };
            }
            return Some(evecs * x_coord);
        }
        let pad = (radius * radius - used).max(0.0).sqrt();
        let top = (0..d)
            .find(|&i| evals[i] * evals[i] >= beta_sq_max * (1.0 - 1e-12))
            .expect("top eigenvalue exists");
        // Either sign is stationary; pick the one that does not cancel b.
        let base = evecs * x_coord;
        let dir = evecs.column(top).into_owned();
        let plus = &base + &dir * pad;
        let minus = &base - &dir * pad;
        let score = |x: &Vector| (b_mat.mul_vec(x) + b_vec).norm_squared();
        Some(if score(&plus) >= score(&minus) { plus } else { minus })
    }
}

/// Drift of the averaged iterate after K exact local GD steps started at x*:
/// `(1/(M eta K)) || sum_m (x* - xhat_K^m) ||`.
pub fn rho(instance: &ProblemInstance, eta: f64, k: usize) -> Result<f64> {
    if eta <= 0.0 || k == 0 {
        return Err(Error::Domain(format!(
            "need eta > 0 and K >= 1, got eta={eta}, K={k}"
        )));
    }
    let x_star = instance.global_optimum()?;
    let mut acc = Vector::zeros(instance.dim());
    for m in instance.machines() {
        let mut x = x_star.clone();
        for _ in 0..k {
            x -= m.gradient(&x) * eta;
        }
        acc += &x_star - &x;
    }
    Ok(acc.norm() / (instance.num_machines() as f64 * eta * k as f64))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RhoBounds {
    /// zeta* ((1 + eta H)^{K-1} - 1), valid for any H-smooth objectives.
    pub general: f64,
    /// (1 - (1 - eta H)^K) / (eta K) * zeta*, the quadratic-case refinement.
    pub quadratic: f64,
}

pub fn rho_bounds(instance: &ProblemInstance, eta: f64, k: usize) -> Result<RhoBounds> {
    let het = zeta_star(instance)?;
    let h = instance.smoothness();
    Ok(RhoBounds {
        general: het.canonical * ((1.0 + eta * h).powi(k as i32 - 1) - 1.0),
        quadratic: (1.0 - (1.0 - eta * h).powi(k as i32)) / (eta * k as f64) * het.canonical,
    })
}

/// Everything at once, for the CLI table and JSON export.
#[derive(Debug, Clone, Serialize)]
pub struct HeterogeneityReport {
    pub zeta_star: f64,
    pub zeta_star_gradient_form: f64,
    pub tau: f64,
    pub pairwise_tau: Vec<Vec<f64>>,
    /// Identically zero: quadratics have constant Hessians.
    pub q_lipschitz: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ball: Option<ZetaBallReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<RhoMeasurement>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RhoMeasurement {
    pub eta: f64,
    pub k: usize,
    pub value: f64,
    pub bound_general: f64,
    pub bound_quadratic: f64,
}

pub fn heterogeneity_report(
    instance: &ProblemInstance,
    ball: Option<(f64, usize, u64)>,
    rho_at: Option<(f64, usize)>,
) -> Result<HeterogeneityReport> {
    let het = zeta_star(instance)?;
    let (tau_val, pairwise) = tau(instance);
    let m_count = instance.num_machines();
    let pairwise_rows = (0..m_count)
        .map(|i| (0..m_count).map(|j| pairwise[(i, j)]).collect())
        .collect();
    let ball_report = match ball {
        Some((radius, n, seed)) => Some(zeta_ball(instance, radius, n, seed)?),
        None => None,
    };
    let rho_report = match rho_at {
        Some((eta, k)) => {
            let value = rho(instance, eta, k)?;
            let bounds = rho_bounds(instance, eta, k)?;
            Some(RhoMeasurement {
                eta,
                k,
                value,
                bound_general: bounds.general,
                bound_quadratic: bounds.quadratic,
            })
        }
        None => None,
    };
    Ok(HeterogeneityReport {
        zeta_star: het.canonical,
        zeta_star_gradient_form: het.gradient_form,
        tau: tau_val,
        pairwise_tau: pairwise_rows,
        q_lipschitz: 0.0,
        ball: ball_report,
        rho: rho_report,
    })
}
