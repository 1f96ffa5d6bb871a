//! Generators for the problem constructions used throughout: the separable
//! two-machine pair, the rank-one pair with tunable condition number, the
//! tridiagonal chain, the worst case for plain GD, seeded random families,
//! and the linear-regression interpretation.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::oracle::RngKey;
use crate::quad_core::{ProblemInstance, QuadraticMachine, SymMatrix, Vector};

/// Two machines in d = 2, each caring about one coordinate:
/// `F_1 = (H/2)(x[0] - x*[0])^2`, `F_2 = (H/2)(x[1] - x*[1])^2`.
/// The machines are rank-one (not strongly convex) but share the optimum,
/// and the average objective is `(H/4) ||x - x*||^2`.
pub fn make_motivating_pair(h: f64, x_star: &[f64; 2]) -> Result<ProblemInstance> {
    if h <= 0.0 {
        return Err(Error::InvalidConfig(format!("need H > 0, got {h}")));
    }
    let opt = Vector::from_column_slice(x_star);
    let a1 = SymMatrix::from_rows(2, &[h, 0.0, 0.0, 0.0])?;
    let a2 = SymMatrix::from_rows(2, &[0.0, 0.0, 0.0, h])?;
    ProblemInstance::new(
        vec![
            QuadraticMachine::new(a1, opt.clone(), 0)?,
            QuadraticMachine::new(a2, opt, 1)?,
        ],
        0.0,
        None,
    )
}

/// Rank-one pair with a tunable condition number for the average Hessian.
///
/// Machines alternate between `H diag(1, 0)` and `H v v^T` with
/// `v = (alpha, sqrt(1 - alpha^2))`; all share one optimum of norm B placed
/// along the worst direction `-(v_1 + v_2)/sqrt(2)` of the average. The
/// average has unit trace (times H) and eigenvalues
/// `1/2 +- sqrt(1/4 - a(1-a)(1-alpha^2))` where `a` is the fraction of
/// `diag(1, 0)` machines, so `alpha` is found by bisection to hit the target
/// condition number.
pub fn make_rank_one_pair(
    h: f64,
    b: f64,
    m_count: usize,
    target_kappa: f64,
) -> Result<(ProblemInstance, f64)> {
    if m_count < 2 {
        return Err(Error::InvalidConfig("need at least two machines".into()));
    }
    if target_kappa < 1.0 {
        return Err(Error::InvalidConfig(format!(
            "condition number must be >= 1, got {target_kappa}"
        )));
    }
    let a_frac = (m_count as f64 / 2.0).ceil() / m_count as f64;

    let kappa_of = |alpha: f64| -> f64 {
        let disc = (0.25 - a_frac * (1.0 - a_frac) * (1.0 - alpha * alpha)).sqrt();
        (0.5 + disc) / (0.5 - disc)
    };
    if target_kappa < kappa_of(0.0) - 1e-12 {
        return Err(Error::Infeasible(format!(
            "condition number {target_kappa} is below the alpha=0 minimum {}",
            kappa_of(0.0)
        )));
    }
    let mut lo = 0.0_f64;
    let mut hi = 1.0 - 1e-16;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kappa_of(mid) < target_kappa {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha = 0.5 * (lo + hi);

    let beta = (1.0 - alpha * alpha).sqrt();
    let a1 = SymMatrix::from_rows(2, &[h, 0.0, 0.0, 0.0])?;
    let a2 = SymMatrix::from_rows(
        2,
        &[
            h * alpha * alpha,
            h * alpha * beta,
            h * alpha * beta,
            h * beta * beta,
        ],
    )?;

    // Average eigenvectors give the worst starting direction.
    let mut avg = DMatrix::zeros(2, 2);
    for i in 0..m_count {
        let a = if i % 2 == 0 { &a1 } else { &a2 };
        avg += a.entries();
    }
    let avg = SymMatrix::new(avg / m_count as f64)?;
    let dir = (avg.eigenvectors().column(0) + avg.eigenvectors().column(1)) / 2.0_f64.sqrt();
    let x_star = Vector::from_column_slice(&[-b * dir[0], -b * dir[1]]);

    let machines = (0..m_count)
        .map(|i| {
            let a = if i % 2 == 0 { a1.clone() } else { a2.clone() };
            QuadraticMachine::new(a, x_star.clone(), i)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((ProblemInstance::new(machines, 0.0, None)?, alpha))
}

/// Parameters for the tridiagonal chain instance. `q = 1 - 1/R` and the
/// nominal optimum decays as `q^i`; the start point truncates it at
/// `t = (1/2) log_q(B^2 / R)`.
#[derive(Debug, Clone, Copy)]
pub struct ChainSpec {
    pub h: f64,
    pub b: f64,
    pub r: usize,
    /// Dimension; defaults to `4 (t + R)` when None, which makes the `q^2d`
    /// tail negligible.
    pub dim: Option<usize>,
}

impl ChainSpec {
    pub fn q(&self) -> f64 {
        1.0 - 1.0 / self.r as f64
    }

    pub fn t(&self) -> f64 {
        0.5 * (self.b * self.b / self.r as f64).ln() / self.q().ln()
    }

    pub fn default_dim(&self) -> usize {
        (4.0 * (self.t() + self.r as f64)).ceil() as usize
    }
}

/// Builds the chain instance: two machines whose couplings alternate along
/// neighboring coordinate pairs, so any algorithm whose queries stay in the
/// span of observed gradients can extend its support by at most one
/// coordinate per round.
///
/// The average Hessian is exactly the tridiagonal Toeplitz matrix with
/// diagonal `H(q^2 + 1)` and off-diagonal `-Hq`. The machine constants are
/// placed only at coordinate 0 so the zero-propagation property holds with
/// exact zeros; as a consequence the true minimizer differs from the nominal
/// `x*_i = q^i` by a boundary correction of order `q^d R^2`, which the
/// default dimension keeps far below every quantity of interest.
pub fn make_chain_instance(spec: &ChainSpec) -> Result<(ProblemInstance, Vector)> {
    if spec.r < 2 {
        return Err(Error::InvalidConfig("chain needs R >= 2".into()));
    }
    if spec.h <= 0.0 || spec.b <= 0.0 {
        return Err(Error::InvalidConfig("chain needs H > 0 and B > 0".into()));
    }
    let q = spec.q();
    let t = spec.t();
    let d = spec.dim.unwrap_or_else(|| spec.default_dim());
    // Tail coverage: q^{2d} must be well below q^{2(t+R)}.
    let needed = t + spec.r as f64 + 1.5 * 10.0_f64.ln() / -q.ln();
    if (d as f64) < needed {
        return Err(Error::InvalidConfig(format!(
            "chain dimension {d} too small; need at least {} for a negligible tail",
            needed.ceil()
        )));
    }

    // T / H = sum_j v_j v_j^T + e_0 e_0^T + q^2 e_{d-1} e_{d-1}^T with
    // v_j = q e_j - e_{j+1}; machine 0 takes the even-j couplings, machine 1
    // the odd-j couplings plus both boundary pins. Each machine is scaled by
    // 2 so the average is exactly T.
    let mut m0 = DMatrix::zeros(d, d);
    let mut m1 = DMatrix::zeros(d, d);
    for j in 0..d - 1 {
        let target = if j % 2 == 0 { &mut m0 } else { &mut m1 };
        target[(j, j)] += 2.0 * spec.h * q * q;
        target[(j + 1, j + 1)] += 2.0 * spec.h;
        target[(j, j + 1)] -= 2.0 * spec.h * q;
        target[(j + 1, j)] -= 2.0 * spec.h * q;
    }
    m1[(0, 0)] += 2.0 * spec.h;
    m1[(d - 1, d - 1)] += 2.0 * spec.h * q * q;

    // Machine 0 has no constant term (optimum at the origin); machine 1's
    // constant sits entirely on coordinate 0, realized by the optimum e_0,
    // which the e_0 pin maps to 2H e_0 while every coupling annihilates it.
    let o0 = Vector::zeros(d);
    let mut o1 = Vector::zeros(d);
    o1[0] = 1.0;

    let machines = vec![
        QuadraticMachine::new(SymMatrix::new(m0)?, o0, 0)?,
        QuadraticMachine::new(SymMatrix::new(m1)?, o1, 1)?,
    ];

    let mut x0 = Vector::zeros(d);
    for i in 0..d {
        if (i as f64) < t {
            x0[i] = q.powi(i as i32);
        }
    }
    let inst = ProblemInstance::new(machines, 0.0, Some(x0.clone()))?;
    Ok((inst, x0))
}

/// Nominal optimum of the chain, `x*_i = q^i`, against which the start point
/// and suboptimality floors are stated.
pub fn chain_nominal_optimum(spec: &ChainSpec, d: usize) -> Vector {
    let q = spec.q();
    Vector::from_iterator(d, (0..d).map(|i| q.powi(i as i32)))
}

/// Eigenvalues of the d-dimensional tridiagonal Toeplitz chain Hessian,
/// `(1 + q^2) H + 2 q H cos(i pi / (d+1))`, sorted descending.
pub fn chain_toeplitz_eigenvalues(h: f64, q: f64, d: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (1..=d)
        .map(|i| (1.0 + q * q) * h + 2.0 * q * h * (i as f64 * std::f64::consts::PI / (d as f64 + 1.0)).cos())
        .collect();
    v.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    v
}

/// Single quadratic with eigenvalues H and H/kappa and optimum of norm B
/// along the diagonal of the two eigendirections; the standard instance on
/// which plain GD cannot beat its conditioning floor.
pub fn make_gd_worst_case(h: f64, kappa: f64, b: f64) -> Result<ProblemInstance> {
    if kappa < 6.0 {
        return Err(Error::Domain(format!(
            "the conditioning floor constant needs kappa >= 6, got {kappa}"
        )));
    }
    let a = SymMatrix::from_rows(2, &[h, 0.0, 0.0, h / kappa])?;
    let s = -b / 2.0_f64.sqrt();
    let x_star = Vector::from_column_slice(&[s, s]);
    ProblemInstance::new(vec![QuadraticMachine::new(a, x_star, 0)?], 0.0, None)
}

/// Dials for the random family: `hessian_spread` in [0, 1] interpolates each
/// machine's Hessian between a shared base and an independent draw
/// (controlling tau), and `concept_spread` scales the unit-sphere offsets of
/// the machine optima around a shared target (controlling zeta*).
#[derive(Debug, Clone, Copy)]
pub struct HeteroDials {
    pub concept_spread: f64,
    pub hessian_spread: f64,
}

/// Seeded random strongly convex family with machine spectra inside
/// `[mu, H]`. Reported class parameters are measured from the construction,
/// not promised by it.
pub fn make_random_instance(
    m_count: usize,
    d: usize,
    mu: f64,
    h: f64,
    dials: HeteroDials,
    seed: u64,
) -> Result<ProblemInstance> {
    if !(mu > 0.0 && mu <= h) {
        return Err(Error::InvalidConfig(format!(
            "need 0 < mu <= H, got mu={mu}, H={h}"
        )));
    }
    if !(0.0..=1.0).contains(&dials.hessian_spread) || dials.concept_spread < 0.0 {
        return Err(Error::InvalidConfig(
            "hessian_spread must be in [0,1] and concept_spread >= 0".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = random_spd(&mut rng, d, mu, h)?;
    let target = Vector::from_iterator(d, (0..d).map(|_| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z
    }));

    let t = dials.hessian_spread;
    let mut machines = Vec::with_capacity(m_count);
    for label in 0..m_count {
        let hessian = if t == 0.0 {
            base.clone()
        } else {
            let own = random_spd(&mut rng, d, mu, h)?;
            SymMatrix::new(base.entries() * (1.0 - t) + own.entries() * t)?
        };
        let mut u = Vector::from_iterator(d, (0..d).map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z
        }));
        let n = u.norm();
        if n > 0.0 {
            u /= n;
        }
        let optimum = &target + u * dials.concept_spread;
        machines.push(QuadraticMachine::new(hessian, optimum, label)?);
    }
    ProblemInstance::new(machines, 0.0, None)
}

fn random_spd(rng: &mut ChaCha8Rng, d: usize, mu: f64, h: f64) -> Result<SymMatrix> {
    // Random orthogonal basis from the QR of a Gaussian matrix, spectrum
    // drawn uniformly in [mu, H] with the endpoints always included so the
    // measured class parameters stay close to the dials.
    let g = DMatrix::from_fn(d, d, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        z
    });
    let qr = g.qr();
    let q = qr.q();
    let mut spectrum: Vec<f64> = (0..d).map(|_| rng.gen_range(mu..=h)).collect();
    if d >= 1 {
        spectrum[0] = h;
    }
    if d >= 2 {
        spectrum[1] = mu;
    }
    let mut scaled = q.clone();
    for (col, &l) in spectrum.iter().enumerate() {
        for row in 0..d {
            scaled[(row, col)] *= l;
        }
    }
    SymMatrix::new(&scaled * q.transpose())
}

/// Per-machine linear-regression data distribution: covariates
/// `beta ~ N(mean, cov)` and labels `y = <ground_truth, beta> + N(0, noise^2)`.
#[derive(Debug, Clone)]
pub struct RegressionMachineSpec {
    pub mean: Vector,
    pub cov: SymMatrix,
    pub ground_truth: Vector,
    pub label_noise: f64,
}

/// Draws regression samples and per-sample gradients whose expectation is the
/// quadratic gradient `A_m (x - x_m*)` with `A_m = mean mean^T + cov`.
#[derive(Debug, Clone)]
pub struct RegressionSampler {
    specs: Vec<RegressionMachineSpec>,
    cov_sqrt: Vec<SymMatrix>,
}

impl RegressionSampler {
    /// Expected-loss offset of machine m: the population risk is the
    /// quadratic plus `label_noise^2 / 2`, which shifts values but not
    /// suboptimalities.
    pub fn objective_offset(&self, machine: usize) -> f64 {
        let s = self.specs[machine].label_noise;
        0.5 * s * s
    }

    /// One covariate/label draw for machine m.
    pub fn sample(&self, machine: usize, key: RngKey) -> (Vector, f64) {
        let spec = &self.specs[machine];
        let d = spec.mean.len();
        let mut rng = ChaCha8Rng::seed_from_u64(mix_key(key));
        let z = Vector::from_iterator(d, (0..d).map(|_| {
            let v: f64 = StandardNormal.sample(&mut rng);
            v
        }));
        let beta = &spec.mean + self.cov_sqrt[machine].mul_vec(&z);
        let noise: f64 = StandardNormal.sample(&mut rng);
        let y = spec.ground_truth.dot(&beta) + spec.label_noise * noise;
        (beta, y)
    }

    /// Gradient of the per-sample loss `(y - <x, beta>)^2 / 2` at x.
    pub fn sample_gradient(&self, machine: usize, x: &Vector, key: RngKey) -> Vector {
        let (beta, y) = self.sample(machine, key);
        let residual = y - x.dot(&beta);
        beta * (-residual)
    }
}

fn mix_key(key: RngKey) -> u64 {
    let mut h = crate::quad_core::Fnv1a::new();
    h.write_u64(key.seed);
    h.write_u64(key.machine);
    h.write_u64(key.round);
    h.write_u64(key.step);
    h.finish()
}

/// Builds the quadratic instance induced by the regression specs together
/// with a sampler for the data-based oracle.
pub fn make_linear_regression(
    specs: Vec<RegressionMachineSpec>,
) -> Result<(ProblemInstance, RegressionSampler)> {
    if specs.is_empty() {
        return Err(Error::InvalidInstance("need at least one machine".into()));
    }
    let mut machines = Vec::with_capacity(specs.len());
    let mut cov_sqrt = Vec::with_capacity(specs.len());
    for (label, spec) in specs.iter().enumerate() {
        let d = spec.mean.len();
        if spec.cov.dim() != d || spec.ground_truth.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: spec.cov.dim().min(spec.ground_truth.len()),
            });
        }
        if spec.cov.lambda_min() < -1e-10 {
            return Err(Error::NotPsd {
                eigenvalue: spec.cov.lambda_min(),
            });
        }
        if spec.label_noise < 0.0 {
            return Err(Error::InvalidInstance("label noise must be >= 0".into()));
        }
        let hessian = SymMatrix::new(&spec.mean * spec.mean.transpose() + spec.cov.entries())?;
        machines.push(QuadraticMachine::new(hessian, spec.ground_truth.clone(), label)?);
        cov_sqrt.push(spec.cov.map_spectrum(|l| l.max(0.0).sqrt())?);
    }
    let inst = ProblemInstance::new(machines, 0.0, None)?;
    Ok((inst, RegressionSampler { specs, cov_sqrt }))
}

/// Covariate-shift bound on the pairwise Hessian differences,
/// `(||mu_m|| + ||mu_n||) ||mu_m - mu_n|| + ||cov_m - cov_n||`, alongside the
/// exactly measured spectral norms.
pub struct RegressionTauReport {
    pub pairwise_bound: DMatrix<f64>,
    pub tau_bound: f64,
    pub measured_tau: f64,
}

pub fn regression_tau_bound(specs: &[RegressionMachineSpec]) -> Result<RegressionTauReport> {
    let (inst, _) = make_linear_regression(specs.to_vec())?;
    let (measured, _) = crate::heterogeneity::tau(&inst);
    let m = specs.len();
    let mut pairwise = DMatrix::zeros(m, m);
    let mut bound = 0.0_f64;
    for i in 0..m {
        for j in (i + 1)..m {
            let mean_term = (specs[i].mean.norm() + specs[j].mean.norm())
                * (&specs[i].mean - &specs[j].mean).norm();
            let cov_term = specs[i].cov.sub(&specs[j].cov)?.spectral_norm();
            let v = mean_term + cov_term;
            pairwise[(i, j)] = v;
            pairwise[(j, i)] = v;
            bound = bound.max(v);
        }
    }
    Ok(RegressionTauReport {
        pairwise_bound: pairwise,
        tau_bound: bound,
        measured_tau: measured,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::{run_local_sgd, Algorithm, AlgorithmConfig};
    use crate::heterogeneity;
    use crate::oracle::RngKey;

    #[test]
    fn motivating_pair_shape() {
        let inst = make_motivating_pair(2.0, &[1.0, -1.0]).unwrap();
        // Average objective is (H/4)||x - x*||^2.
        let x = Vector::from_column_slice(&[0.0, 0.0]);
        assert!((inst.average_value(&x) - 0.5 * 2.0).abs() < 1e-14);
        // Shared optimum: gradient-form heterogeneity is zero.
        let x_star = inst.global_optimum().unwrap();
        let grad_rms: f64 = inst
            .machines()
            .iter()
            .map(|m| m.gradient(&x_star).norm_squared())
            .sum::<f64>()
            / 2.0;
        assert!(grad_rms < 1e-24);
        assert!((heterogeneity::tau(&inst).0 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rank_one_pair_hits_target_kappa() {
        let (inst, alpha) = make_rank_one_pair(1.0, 1.0, 2, 4.0).unwrap();
        // Closed form for a = 1/2: (1 - alpha^2)/4 = kappa/(1+kappa)^2.
        assert!((alpha - 0.6).abs() < 1e-9, "alpha = {alpha}");
        let avg = inst.average_hessian();
        let kappa = avg.lambda_max() / avg.lambda_min();
        assert!((kappa - 4.0).abs() < 1e-9);
        // Optimum has norm B and is shared.
        let x_star = inst.global_optimum().unwrap();
        assert!((x_star.norm() - 1.0).abs() < 1e-10);
        for m in inst.machines() {
            assert!(m.gradient(&x_star).norm() < 1e-10);
        }
    }

    #[test]
    fn rank_one_pair_alpha_zero_is_isotropic() {
        let (inst, alpha) = make_rank_one_pair(1.0, 1.0, 2, 1.0).unwrap();
        assert!(alpha < 1e-9);
        let avg = inst.average_hessian();
        assert!((avg.lambda_max() / avg.lambda_min() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rank_one_pair_large_kappa_and_infeasible() {
        let (_, alpha) = make_rank_one_pair(1.0, 1.0, 2, 1e6).unwrap();
        assert!(alpha > 0.99);
        // Odd machine count raises the alpha = 0 floor above 1.
        let err = make_rank_one_pair(1.0, 1.0, 3, 1.0);
        assert!(matches!(err, Err(Error::Infeasible(_))));
    }

    #[test]
    fn rank_one_local_round_is_gd_step_on_average() {
        // One local-SGD round equals one GD step on F with effective step
        // beta (1 - (1 - eta H)^K) / H, because both machine Hessians are
        // H times a projection.
        let (inst, _) = make_rank_one_pair(1.0, 1.0, 2, 4.0).unwrap();
        let (eta, k) = (0.3, 5);
        let cfg = AlgorithmConfig::new(Algorithm::LocalSgd, eta, k, 1);
        let traj = run_local_sgd(&inst, &cfg).unwrap();
        let effective = (1.0 - (1.0 - eta).powi(k as i32)) / 1.0;
        let x0 = &inst.start;
        let expected = x0 - inst.average_gradient(x0) * effective;
        assert!((traj.final_iterate() - expected).norm() < 1e-12);
    }

    #[test]
    fn chain_average_is_exact_toeplitz() {
        let spec = ChainSpec { h: 1.0, b: 1.0, r: 10, dim: None };
        let (inst, _) = make_chain_instance(&spec).unwrap();
        let d = inst.dim();
        let q = spec.q();
        let avg = inst.average_hessian();
        for i in 0..d {
            for j in 0..d {
                let expected = if i == j {
                    (1.0 + q * q) * spec.h
                } else if i.abs_diff(j) == 1 {
                    -q * spec.h
                } else {
                    0.0
                };
                assert!(
                    (avg.entries()[(i, j)] - expected).abs() < 1e-14,
                    "entry ({i},{j})"
                );
            }
        }
        let predicted = chain_toeplitz_eigenvalues(spec.h, q, d);
        for (got, want) in avg.eigenvalues().iter().zip(&predicted) {
            assert!((got - want).abs() < 1e-9);
        }
        // Strong convexity of the average at least H (1-q)^2 = H / R^2.
        assert!(avg.lambda_min() >= spec.h / (spec.r * spec.r) as f64 - 1e-12);
    }

    #[test]
    fn chain_one_dimensional_formula() {
        let q: f64 = 0.5;
        let eigs = chain_toeplitz_eigenvalues(2.0, q, 1);
        assert_eq!(eigs.len(), 1);
        assert!((eigs[0] - (1.0 + q * q) * 2.0).abs() < 1e-14);
    }

    #[test]
    fn chain_machines_are_psd_and_near_zero_gradient_at_optimum() {
        let spec = ChainSpec { h: 1.0, b: 1.0, r: 10, dim: Some(200) };
        let (inst, x0) = make_chain_instance(&spec).unwrap();
        for m in inst.machines() {
            assert!(m.hessian.lambda_min() >= -1e-10);
        }
        // The true minimizer is within a boundary correction of q^i, and the
        // per-machine gradients there are equally tiny.
        let x_star = inst.global_optimum().unwrap();
        let nominal = chain_nominal_optimum(&spec, inst.dim());
        assert!((&x_star - &nominal).norm() < 1e-6);
        let grad_ms: f64 = inst
            .machines()
            .iter()
            .map(|m| m.gradient(&x_star).norm_squared())
            .sum::<f64>()
            / 2.0;
        assert!(grad_ms < 1e-10, "mean squared machine gradient {grad_ms}");
        // Start point within B of the nominal optimum.
        assert!((&x0 - &nominal).norm_squared() <= spec.b * spec.b);
    }

    #[test]
    fn chain_zero_propagation_is_exact() {
        let spec = ChainSpec { h: 1.0, b: 1.0, r: 10, dim: Some(120) };
        let (inst, x0) = make_chain_instance(&spec).unwrap();
        let t = spec.t();
        let frontier0 = x0.iter().rposition(|&v| v != 0.0).unwrap();
        assert!((frontier0 as f64) < t);
        let cfg = AlgorithmConfig::new(Algorithm::LocalSgd, 0.1, 7, 10);
        let traj = run_local_sgd(&inst, &cfg).unwrap();
        for rec in &traj.rounds {
            for i in (frontier0 + rec.round + 1)..inst.dim() {
                assert_eq!(
                    rec.iterate[i], 0.0,
                    "round {} leaked into coordinate {i}",
                    rec.round
                );
            }
        }
    }

    #[test]
    fn chain_rejects_small_dimension() {
        let spec = ChainSpec { h: 1.0, b: 1.0, r: 10, dim: Some(20) };
        assert!(make_chain_instance(&spec).is_err());
    }

    #[test]
    fn gd_worst_case_geometry() {
        let inst = make_gd_worst_case(1.0, 30.0, 2.0).unwrap();
        let x_star = inst.global_optimum().unwrap();
        assert!((x_star.norm() - 2.0).abs() < 1e-12);
        let a = inst.average_hessian();
        assert!((a.lambda_max() - 1.0).abs() < 1e-12);
        assert!((a.lambda_min() - 1.0 / 30.0).abs() < 1e-12);
        assert!(make_gd_worst_case(1.0, 3.0, 1.0).is_err());
    }

    #[test]
    fn gd_worst_case_explodes_for_large_steps() {
        let inst = make_gd_worst_case(1.0, 30.0, 1.0).unwrap();
        let mut cfg = AlgorithmConfig::new(Algorithm::MinibatchSgd, 3.0, 1, 60);
        cfg.gamma = 3.0;
        match crate::algorithms::run_minibatch_sgd(&inst, &cfg) {
            Err(Error::Divergence { .. }) => {}
            Ok(traj) => assert!(traj.final_suboptimality() >= 0.25 * 1.0),
            Err(e) => panic!("unexpected error {e:?}"),
        }
    }

    #[test]
    fn random_instance_dials() {
        let homogeneous = make_random_instance(
            4,
            5,
            0.5,
            2.0,
            HeteroDials { concept_spread: 0.0, hessian_spread: 0.0 },
            7,
        )
        .unwrap();
        assert_eq!(heterogeneity::tau(&homogeneous).0, 0.0);
        let z = heterogeneity::zeta_star(&homogeneous).unwrap();
        assert!(z.canonical < 1e-9);

        let spread = make_random_instance(
            4,
            5,
            0.5,
            2.0,
            HeteroDials { concept_spread: 1.0, hessian_spread: 0.5 },
            7,
        )
        .unwrap();
        assert!(heterogeneity::tau(&spread).0 > 0.0);
        assert!(heterogeneity::zeta_star(&spread).unwrap().canonical > 0.0);
        assert!(spread.mu() >= 0.5 - 1e-9);
        assert!(spread.smoothness() <= 2.0 + 1e-9);
    }

    #[test]
    fn random_instance_is_deterministic() {
        let dials = HeteroDials { concept_spread: 0.7, hessian_spread: 0.3 };
        let a = make_random_instance(3, 4, 1.0, 3.0, dials, 42).unwrap();
        let b = make_random_instance(3, 4, 1.0, 3.0, dials, 42).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        let c = make_random_instance(3, 4, 1.0, 3.0, dials, 43).unwrap();
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    fn shift_specs() -> Vec<RegressionMachineSpec> {
        vec![
            RegressionMachineSpec {
                mean: Vector::from_column_slice(&[1.0, 0.0]),
                cov: SymMatrix::identity(2),
                ground_truth: Vector::from_column_slice(&[0.5, 0.5]),
                label_noise: 0.1,
            },
            RegressionMachineSpec {
                mean: Vector::from_column_slice(&[0.0, 1.0]),
                cov: SymMatrix::identity(2),
                ground_truth: Vector::from_column_slice(&[0.5, 0.5]),
                label_noise: 0.1,
            },
        ]
    }

    #[test]
    fn regression_builds_expected_hessians() {
        let (inst, _) = make_linear_regression(shift_specs()).unwrap();
        let a0 = &inst.machines()[0].hessian;
        assert!((a0.entries()[(0, 0)] - 2.0).abs() < 1e-12);
        assert!((a0.entries()[(1, 1)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn regression_homogeneous_case() {
        let mut specs = shift_specs();
        specs[1] = specs[0].clone();
        let (inst, _) = make_linear_regression(specs).unwrap();
        assert_eq!(heterogeneity::tau(&inst).0, 0.0);
        assert!(heterogeneity::zeta_star(&inst).unwrap().canonical < 1e-12);
    }

    #[test]
    fn regression_sampled_gradient_is_unbiased() {
        let (inst, sampler) = make_linear_regression(shift_specs()).unwrap();
        let x = Vector::from_column_slice(&[0.2, -0.3]);
        let exact = inst.machines()[0].gradient(&x);
        let n = 100_000;
        let mut acc = Vector::zeros(2);
        for i in 0..n {
            acc += sampler.sample_gradient(0, &x, RngKey::new(1234, 0, i, 0));
        }
        let mean = acc / n as f64;
        // 4-sigma Monte Carlo band; per-coordinate sampling noise is O(1).
        let band = 4.0 * 3.0 / (n as f64).sqrt();
        for i in 0..2 {
            assert!(
                (mean[i] - exact[i]).abs() <= band,
                "coordinate {i}: {} vs {}",
                mean[i],
                exact[i]
            );
        }
    }

    #[test]
    fn regression_tau_bound_cases() {
        let rep = regression_tau_bound(&shift_specs()).unwrap();
        assert!((rep.tau_bound - 2.0 * 2.0_f64.sqrt()).abs() < 1e-12);
        assert!((rep.measured_tau - 1.0).abs() < 1e-12);
        assert!(rep.measured_tau <= rep.tau_bound);

        // Pure concept shift: identical covariates, different ground truths.
        let mut concept = shift_specs();
        concept[1].mean = concept[0].mean.clone();
        concept[1].ground_truth = Vector::from_column_slice(&[-0.5, 0.0]);
        let rep = regression_tau_bound(&concept).unwrap();
        assert_eq!(rep.tau_bound, 0.0);
        assert_eq!(rep.measured_tau, 0.0);
    }

    #[test]
    fn regression_concept_shift_controls_zeta_star() {
        // (1/M^2) sum_{m,n} ||x_m* - x_n*||^2 <= 4 zeta*^2 / H^2.
        let mut specs = shift_specs();
        specs[1].ground_truth = Vector::from_column_slice(&[-0.5, 0.1]);
        let (inst, _) = make_linear_regression(specs.clone()).unwrap();
        let z = heterogeneity::zeta_star(&inst).unwrap().canonical;
        let h = inst.smoothness();
        let m = specs.len() as f64;
        let mut lhs = 0.0;
        for a in &specs {
            for b in &specs {
                lhs += (&a.ground_truth - &b.ground_truth).norm_squared();
            }
        }
        lhs /= m * m;
        assert!(lhs <= 4.0 * z * z / (h * h) + 1e-12);
    }
}
