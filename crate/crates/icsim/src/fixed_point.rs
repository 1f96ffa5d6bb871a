//! Closed-form fixed point of local GD on quadratics, its existence test,
//! the discrepancy bounds relating it to x* and the mean of machine optima,
//! and the contraction-rate predictor.
//!
//! With `C_m = I - (I - eta A_m)^K` and `C` their mean, the fixed point is
//! `x_inf = (1/M) sum_m C^{-1} C_m x_m*`, independent of the outer step size.
//! Local GD converges to it whenever `C` is invertible and the server map
//! `I - beta C` is a contraction.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad_core::{ProblemInstance, SymMatrix, Vector};

const SINGULAR_TOL: f64 = 1e-12;

/// Everything the closed form produces for one `(eta, K)` pair.
#[derive(Debug, Clone)]
pub struct FixedPointReport {
    /// Present exactly when `exists` is true.
    pub x_infinity: Option<Vector>,
    pub c_machines: Vec<SymMatrix>,
    pub c_mean: SymMatrix,
    pub exists: bool,
    pub lambda_min_c: f64,
    /// K-step condition number (1-(1-eta H)^K) / (1-(1-eta mu)^K), at least 1.
    pub kappa_prime: f64,
    /// Norm of the stationarity residual sum_m C_m (x_inf - x_m*).
    pub residual: f64,
    pub eta: f64,
    pub k: usize,
}

impl FixedPointReport {
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Out<'a> {
            exists: bool,
            x_infinity: Option<&'a [f64]>,
            lambda_min_c: f64,
            kappa_prime: f64,
            residual: f64,
            eta: f64,
            k: usize,
        }
        serde_json::to_value(Out {
            exists: self.exists,
            x_infinity: self.x_infinity.as_ref().map(|x| x.as_slice()),
            lambda_min_c: self.lambda_min_c,
            kappa_prime: self.kappa_prime,
            residual: self.residual,
            eta: self.eta,
            k: self.k,
        })
        .expect("report serializes")
    }
}

/// K-step condition number of the instance for step size `eta`.
pub fn kappa_prime(instance: &ProblemInstance, eta: f64, k: usize) -> f64 {
    let h = instance.smoothness();
    let mu = instance.mu();
    let num = 1.0 - (1.0 - eta * h).powi(k as i32);
    let den = 1.0 - (1.0 - eta * mu).powi(k as i32);
    num / den
}

/// Evaluates the closed-form fixed point of local GD. Nonexistence (singular
/// `C`) is reported, not raised.
pub fn fixed_point(instance: &ProblemInstance, eta: f64, k: usize) -> Result<FixedPointReport> {
    if eta <= 0.0 || k == 0 {
        return Err(Error::InvalidConfig(format!(
            "need eta > 0 and K >= 1, got eta={eta}, K={k}"
        )));
    }
    for m in instance.machines() {
        if !m.is_strongly_convex() {
            return Err(Error::AmbiguousOptimum { label: m.label });
        }
    }
    let d = instance.dim();
    let m_count = instance.num_machines() as f64;

    let mut c_machines = Vec::with_capacity(instance.num_machines());
    let mut c_sum = SymMatrix::zeros(d);
    for m in instance.machines() {
        // C_m = I - (I - eta A_m)^K, evaluated on the spectrum of A_m.
        let c_m = m
            .hessian
            .map_spectrum(|l| 1.0 - (1.0 - eta * l).powi(k as i32))?;
        c_sum = c_sum.add(&c_m)?;
        c_machines.push(c_m);
    }
    let c_mean = c_sum.scale(1.0 / m_count);
    let lambda_min_c = c_mean.lambda_min();
    let exists = lambda_min_c > SINGULAR_TOL;

    let (x_infinity, residual) = if exists {
        let c_inv = c_mean.inverse()?;
        let mut acc = Vector::zeros(d);
        for (c_m, m) in c_machines.iter().zip(instance.machines()) {
            acc += c_m.mul_vec(&m.optimum);
        }
        acc /= m_count;
        let x_inf = c_inv.mul_vec(&acc);
        let mut res = Vector::zeros(d);
        for (c_m, m) in c_machines.iter().zip(instance.machines()) {
            res += c_m.mul_vec(&(&x_inf - &m.optimum));
        }
        (Some(x_inf), res.norm() / m_count)
    } else {
        (None, f64::NAN)
    };

    Ok(FixedPointReport {
        x_infinity,
        c_machines,
        c_mean,
        exists,
        lambda_min_c,
        kappa_prime: kappa_prime(instance, eta, k),
        residual,
        eta,
        k,
    })
}

/// Sufficient existence test for a given outer step size: `C` invertible and
/// spectral radius of `I - beta C` below 1. Returns the radius either way.
pub fn fixed_point_exists(
    instance: &ProblemInstance,
    eta: f64,
    k: usize,
    beta: f64,
) -> Result<(bool, f64)> {
    let report = fixed_point(instance, eta, k)?;
    let radius = report
        .c_mean
        .eigenvalues()
        .iter()
        .fold(0.0_f64, |acc, &l| acc.max((1.0 - beta * l).abs()));
    Ok((report.exists && radius < 1.0, radius))
}

/// Both discrepancy inequalities around the mean optimum, with the measured
/// distances they bound.
#[derive(Debug, Clone, Serialize)]
pub struct DiscrepancyReport {
    /// Bound zeta* tau / (H mu) on ||x* - xbar*||.
    pub bound_xstar_xbar: f64,
    /// The same bound scaled by eta mu K (1-eta mu)^{K-1} / (1-(1-eta mu)^K),
    /// which is at most 1; bounds ||x_inf - xbar*||.
    pub bound_xinf_xbar: f64,
    pub measured_xstar_xbar: f64,
    pub measured_xinf_xbar: f64,
    /// Both measured distances are within their bounds (1e-9 slack).
    pub satisfied: bool,
}

pub fn discrepancy_bounds(instance: &ProblemInstance, eta: f64, k: usize) -> Result<DiscrepancyReport> {
    if k <= 1 {
        return Err(Error::Domain(
            "the fixed-point discrepancy bound needs K > 1".into(),
        ));
    }
    let mu = instance.mu();
    if mu <= 0.0 {
        return Err(Error::NotStronglyConvex { lambda_min: mu });
    }
    let h = instance.smoothness();
    let het = crate::heterogeneity::zeta_star(instance)?;
    let (tau, _) = crate::heterogeneity::tau(instance);

    let base = het.canonical * tau / (h * mu);
    let em = eta * mu;
    let shrink = em * k as f64 * (1.0 - em).powi(k as i32 - 1) / (1.0 - (1.0 - em).powi(k as i32));

    let x_star = instance.global_optimum()?;
    let x_bar = instance.mean_optimum()?;
    let fp = fixed_point(instance, eta, k)?;
    let x_inf = fp
        .x_infinity
        .ok_or(Error::NearSingular { eigenvalue: fp.lambda_min_c })?;

    let measured_xstar_xbar = (&x_star - &x_bar).norm();
    let measured_xinf_xbar = (&x_inf - &x_bar).norm();
    let bound_xinf_xbar = base * shrink;
    let satisfied = measured_xstar_xbar <= base + 1e-9 && measured_xinf_xbar <= bound_xinf_xbar + 1e-9;
    Ok(DiscrepancyReport {
        bound_xstar_xbar: base,
        bound_xinf_xbar,
        measured_xstar_xbar,
        measured_xinf_xbar,
        satisfied,
    })
}

/// Predicted upper bound on ||x_R - x_inf|| for local GD started from zero.
///
/// Two outer-step regimes are supported: plain averaging (beta = 1), with
/// bound `(1 - eta mu)^{KR} kappa' ||x_inf||`, and the amplified step
/// `beta = 1 / (c (1 - (1 - eta H)^K))` with `c >= 1`, with bound
/// `(1 - 1/(c kappa'))^R kappa' ||x_inf||`. Other `beta` are declined.
pub fn contraction_predictor(
    instance: &ProblemInstance,
    eta: f64,
    beta: f64,
    k: usize,
    r: usize,
) -> Result<f64> {
    let h = instance.smoothness();
    let mu = instance.mu();
    if mu <= 0.0 {
        return Err(Error::NotStronglyConvex { lambda_min: mu });
    }
    if eta > 1.0 / h {
        return Err(Error::Domain(format!(
            "contraction argument needs eta <= 1/H, got eta*H = {}",
            eta * h
        )));
    }
    let report = fixed_point(instance, eta, k)?;
    let x_inf = report
        .x_infinity
        .as_ref()
        .ok_or(Error::NearSingular { eigenvalue: report.lambda_min_c })?;
    let kp = report.kappa_prime;
    let norm_inf = x_inf.norm();

    if (beta - 1.0).abs() <= 1e-12 {
        let rate = (1.0 - eta * mu).powi(k as i32);
        return Ok(rate.powi(r as i32) * kp * norm_inf);
    }
    let denom = 1.0 - (1.0 - eta * h).powi(k as i32);
    let c = 1.0 / (beta * denom);
    if c < 1.0 - 1e-12 {
        return Err(Error::Domain(format!(
            "beta = {beta} exceeds 1/(1-(1-eta H)^K); no contraction guarantee"
        )));
    }
    Ok((1.0 - 1.0 / (c * kp)).powi(r as i32) * kp * norm_inf)
}
