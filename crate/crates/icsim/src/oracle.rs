//! Stochastic first-order oracle with reproducible, schedule-independent noise.
//!
//! Noise is isotropic Gaussian with per-coordinate variance `sigma^2 / d`, so
//! the expected squared noise norm equals `sigma^2` exactly. Each draw is
//! keyed by `(seed, machine, round, step)`: the key fully determines the draw,
//! so running machines in any order, or concurrently, produces identical noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::quad_core::{ProblemInstance, QuadraticMachine, Vector};

/// Noise model attached to an experiment: Gaussian with variance bound met
/// with equality, or exactly deterministic when `sigma == 0`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn noiseless() -> Self {
        NoiseSpec { sigma: 0.0, seed: 0 }
    }

    pub fn new(sigma: f64, seed: u64) -> Self {
        NoiseSpec { sigma, seed }
    }
}

/// Counter-based key for one oracle call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngKey {
    pub seed: u64,
    pub machine: u64,
    pub round: u64,
    pub step: u64,
}

impl RngKey {
    pub fn new(seed: u64, machine: u64, round: u64, step: u64) -> Self {
        RngKey { seed, machine, round, step }
    }

    /// Expands the four counters into a 32-byte ChaCha key. Distinct keys
    /// give independent streams; identical keys reproduce draws bit-for-bit.
    fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.machine.to_le_bytes());
        key[16..24].copy_from_slice(&self.round.to_le_bytes());
        key[24..32].copy_from_slice(&self.step.to_le_bytes());
        ChaCha8Rng::from_seed(key)
    }
}

/// Draws the noise vector `xi ~ N(0, (sigma^2/d) I)` for one oracle call.
pub fn noise_vector(dim: usize, noise: &NoiseSpec, key: RngKey) -> Vector {
    if noise.sigma == 0.0 {
        return Vector::zeros(dim);
    }
    let scale = noise.sigma / (dim as f64).sqrt();
    let mut rng = key.rng();
    Vector::from_iterator(
        dim,
        (0..dim).map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            scale * z
        }),
    )
}

/// One stochastic gradient call: `grad F_m(x) + xi`.
pub fn stochastic_gradient(
    machine: &QuadraticMachine,
    x: &Vector,
    noise: &NoiseSpec,
    key: RngKey,
) -> Vector {
    let mut g = machine.gradient(x);
    if noise.sigma > 0.0 {
        g += noise_vector(machine.dim(), noise, key);
    }
    g
}

/// Mean of `M * K` stochastic gradients, all evaluated at the same point.
/// The summation order is fixed (machines outer, steps inner) so the result
/// is bitwise reproducible.
pub fn minibatch_gradient(
    instance: &ProblemInstance,
    x: &Vector,
    k: usize,
    noise: &NoiseSpec,
    round: u64,
) -> Vector {
    let d = instance.dim();
    let mut acc = Vector::zeros(d);
    for machine in instance.machines() {
        let mut machine_acc = Vector::zeros(d);
        for step in 0..k {
            let key = RngKey::new(noise.seed, machine.label as u64, round, step as u64);
            machine_acc += stochastic_gradient(machine, x, noise, key);
        }
        acc += machine_acc / k as f64;
    }
    acc / instance.num_machines() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad_core::{diag_machine, ProblemInstance};

    #[test]
    fn noiseless_is_exact_gradient() {
        let m = diag_machine(&[2.0, 1.0], &[1.0, 0.0], 0);
        let x = Vector::from_column_slice(&[0.0, 0.0]);
        let g = stochastic_gradient(&m, &x, &NoiseSpec::noiseless(), RngKey::new(7, 0, 3, 1));
        assert_eq!(g[0], -2.0);
        assert_eq!(g[1], 0.0);
    }

    #[test]
    fn same_key_same_draw() {
        let m = diag_machine(&[2.0, 1.0], &[1.0, 0.0], 0);
        let x = Vector::from_column_slice(&[0.3, -0.4]);
        let noise = NoiseSpec::new(1.0, 42);
        let key = RngKey::new(42, 1, 5, 2);
        let a = stochastic_gradient(&m, &x, &noise, key);
        let b = stochastic_gradient(&m, &x, &noise, key);
        assert_eq!(a.as_slice(), b.as_slice());
    }

    #[test]
    fn distinct_keys_differ() {
        let noise = NoiseSpec::new(1.0, 42);
        let a = noise_vector(4, &noise, RngKey::new(42, 0, 0, 0));
        let b = noise_vector(4, &noise, RngKey::new(42, 0, 0, 1));
        assert_ne!(a.as_slice(), b.as_slice());
    }

    #[test]
    fn noise_norm_matches_sigma_squared() {
        // Monte Carlo estimate of E||xi||^2 over 1e5 draws; the spec band is
        // [0.99, 1.01] for sigma = 1, d = 2.
        let noise = NoiseSpec::new(1.0, 2024);
        let n = 100_000;
        let mut acc = 0.0;
        for i in 0..n {
            let xi = noise_vector(2, &noise, RngKey::new(noise.seed, 0, i, 0));
            acc += xi.norm_squared();
        }
        let mean = acc / n as f64;
        assert!((0.99..=1.01).contains(&mean), "E||xi||^2 = {mean}");
    }

    #[test]
    fn minibatch_noiseless_is_average_gradient() {
        let inst = ProblemInstance::new(
            vec![
                diag_machine(&[2.0, 1.0], &[1.0, 0.0], 0),
                diag_machine(&[1.0, 2.0], &[0.0, 1.0], 1),
            ],
            0.0,
            None,
        )
        .unwrap();
        let x = Vector::from_column_slice(&[0.1, 0.2]);
        let g = minibatch_gradient(&inst, &x, 8, &NoiseSpec::noiseless(), 0);
        let exact = inst.average_gradient(&x);
        assert!((g - exact).norm() < 1e-15);
    }

    #[test]
    fn minibatch_variance_scales_with_mk() {
        // sigma = 1, M = 4, K = 8: deviation variance should be close to
        // sigma^2 / 32 over 1e4 repetitions (5% band per the acceptance gate).
        let machines: Vec<_> = (0..4)
            .map(|i| diag_machine(&[1.0, 1.0], &[0.0, 0.0], i))
            .collect();
        let inst = ProblemInstance::new(machines, 1.0, None).unwrap();
        let x = Vector::from_column_slice(&[0.5, -0.5]);
        let exact = inst.average_gradient(&x);
        let noise = NoiseSpec::new(1.0, 99);
        let reps = 10_000;
        let mut acc = 0.0;
        for r in 0..reps {
            let g = minibatch_gradient(&inst, &x, 8, &noise, r);
            acc += (g.clone() - &exact).norm_squared();
        }
        let mean = acc / reps as f64;
        let target = 1.0 / 32.0;
        assert!(
            (mean - target).abs() <= 0.05 * target,
            "deviation variance {mean} vs target {target}"
        );
    }

    #[test]
    fn machine_order_does_not_change_noise() {
        // Keys fully determine the per-machine draws; summing in reverse
        // machine order reproduces each machine's contribution exactly.
        let noise = NoiseSpec::new(2.0, 7);
        let forward: Vec<_> = (0..3)
            .map(|m| noise_vector(3, &noise, RngKey::new(noise.seed, m, 4, 1)))
            .collect();
        let backward: Vec<_> = (0..3)
            .rev()
            .map(|m| noise_vector(3, &noise, RngKey::new(noise.seed, m, 4, 1)))
            .collect();
        for m in 0..3 {
            assert_eq!(forward[m].as_slice(), backward[2 - m].as_slice());
        }
    }
}
