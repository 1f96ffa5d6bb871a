//! Quadratic objectives, the problem-instance container, and the symmetric
//! matrix toolkit the rest of the crate is built on.
//!
//! Each machine `m` holds a quadratic `F_m(x) = 1/2 (x - x_m*)^T A_m (x - x_m*)`
//! with a symmetric PSD Hessian `A_m`. The average objective `F` has Hessian
//! `A = (1/M) sum_m A_m`, and when `A` is positive definite its unique minimizer
//! is `x* = (1/M) sum_m A^{-1} A_m x_m*`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;

const SYMMETRY_ABS_TOL: f64 = 1e-12;
const SINGULAR_TOL: f64 = 1e-12;

/// Dense symmetric matrix with an eagerly computed eigendecomposition.
///
/// The eigenvalues are stored sorted descending with matching orthonormal
/// eigenvectors in the columns of `eigenvectors`. Everything is immutable
/// after construction, so values can be shared freely across threads.
#[derive(Debug, Clone)]
pub struct SymMatrix {
    entries: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

impl SymMatrix {
    /// Builds from a dense matrix, checking symmetry to absolute tolerance
    /// 1e-12 and then symmetrizing exactly so downstream arithmetic sees
    /// `S == S^T` bit-for-bit.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let (n, m) = entries.shape();
        if n != m {
            return Err(Error::DimensionMismatch { expected: n, got: m });
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let delta = (entries[(i, j)] - entries[(j, i)]).abs();
                if delta > SYMMETRY_ABS_TOL {
                    return Err(Error::NotSymmetric { i, j, delta });
                }
            }
        }
        let mut sym = entries.clone();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (entries[(i, j)] + entries[(j, i)]);
                sym[(i, j)] = v;
                sym[(j, i)] = v;
            }
        }
        let eig = sym.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .partial_cmp(&eig.eigenvalues[a])
                .expect("eigenvalues are finite")
        });
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut eigenvectors = DMatrix::zeros(n, n);
        for (col, &i) in order.iter().enumerate() {
            eigenvectors.set_column(col, &eig.eigenvectors.column(i));
        }
        Ok(SymMatrix {
            entries: sym,
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn from_rows(dim: usize, row_major: &[f64]) -> Result<Self> {
        if row_major.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: row_major.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(dim, dim, row_major))
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim)).expect("identity is symmetric")
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(DMatrix::zeros(dim, dim)).expect("zero matrix is symmetric")
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Eigenvalues sorted descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_min(&self) -> f64 {
        *self.eigenvalues.last().expect("dim >= 1")
    }

    /// Spectral norm, the largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues
            .iter()
            .fold(0.0, |acc, &l| acc.max(l.abs()))
    }

    pub fn mul_vec(&self, x: &Vector) -> Vector {
        &self.entries * x
    }

    /// Applies a scalar function to the spectrum: `V diag(f(lambda)) V^T`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Result<SymMatrix> {
        let n = self.dim();
        let mut scaled = self.eigenvectors.clone();
        for (col, &l) in self.eigenvalues.iter().enumerate() {
            let fl = f(l);
            if !fl.is_finite() {
                return Err(Error::Domain(format!(
                    "spectral map produced non-finite value {fl} at eigenvalue {l}"
                )));
            }
            for row in 0..n {
                scaled[(row, col)] *= fl;
            }
        }
        SymMatrix::new(&scaled * self.eigenvectors.transpose())
    }

    /// Matrix inverse via the eigendecomposition. Refuses eigenvalues within
    /// 1e-12 of zero, naming the offender.
    pub fn inverse(&self) -> Result<SymMatrix> {
        for &l in &self.eigenvalues {
            if l.abs() <= SINGULAR_TOL {
                return Err(Error::NearSingular { eigenvalue: l });
            }
        }
        self.map_spectrum(|l| 1.0 / l)
    }

    /// Integer matrix power via the spectrum.
    pub fn power(&self, k: u32) -> Result<SymMatrix> {
        self.map_spectrum(|l| l.powi(k as i32))
    }

    /// Integer matrix power by repeated squaring, used as a cross-check on
    /// the eigen route for small exponents.
    pub fn power_by_squaring(&self, mut k: u32) -> SymMatrix {
        let n = self.dim();
        let mut result = DMatrix::identity(n, n);
        let mut base = self.entries.clone();
        while k > 0 {
            if k & 1 == 1 {
                result = &result * &base;
            }
            base = &base * &base;
            k >>= 1;
        }
        SymMatrix::new(result).expect("powers of a symmetric matrix are symmetric")
    }

    pub fn add(&self, other: &SymMatrix) -> Result<SymMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        SymMatrix::new(&self.entries + &other.entries)
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<SymMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        SymMatrix::new(&self.entries - &other.entries)
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        SymMatrix::new(&self.entries * c).expect("scaling preserves symmetry")
    }
}

/// A single client objective `F_m(x) = 1/2 (x - x_m*)^T A_m (x - x_m*)`.
#[derive(Debug, Clone)]
pub struct QuadraticMachine {
    pub hessian: SymMatrix,
    pub optimum: Vector,
    pub label: usize,
}

impl QuadraticMachine {
    pub fn new(hessian: SymMatrix, optimum: Vector, label: usize) -> Result<Self> {
        if hessian.dim() != optimum.len() {
            return Err(Error::DimensionMismatch {
                expected: hessian.dim(),
                got: optimum.len(),
            });
        }
        let lmin = hessian.lambda_min();
        // Allow tiny negative eigenvalues from roundoff, reject real indefiniteness.
        if lmin < -1e-10 * hessian.lambda_max().max(1.0) {
            return Err(Error::NotPsd { eigenvalue: lmin });
        }
        Ok(QuadraticMachine {
            hessian,
            optimum,
            label,
        })
    }

    pub fn dim(&self) -> usize {
        self.hessian.dim()
    }

    /// Strictly positive definite Hessian, so the optimum is unique.
    pub fn is_strongly_convex(&self) -> bool {
        self.hessian.lambda_min() > SINGULAR_TOL
    }

    pub fn value(&self, x: &Vector) -> f64 {
        let diff = x - &self.optimum;
        0.5 * diff.dot(&self.hessian.mul_vec(&diff))
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        self.hessian.mul_vec(&(x - &self.optimum))
    }

    pub fn value_and_gradient(&self, x: &Vector) -> (f64, Vector) {
        let diff = x - &self.optimum;
        let g = self.hessian.mul_vec(&diff);
        (0.5 * diff.dot(&g), g)
    }
}

/// M machines plus the noise level and class parameters (mu, H, B).
///
/// The claimed `mu`/`smoothness`/`radius_b` fields are validated against the
/// computed spectra at construction, and the computed values win in every
/// formula; the claims exist only so instance files can carry the class the
/// author intended.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    machines: Vec<QuadraticMachine>,
    pub sigma: f64,
    mu: f64,
    smoothness: f64,
    radius_b: f64,
    pub start: Vector,
    average: SymMatrix,
}

impl ProblemInstance {
    /// Builds an instance, deriving (mu, H, B) from the machine spectra.
    pub fn new(machines: Vec<QuadraticMachine>, sigma: f64, start: Option<Vector>) -> Result<Self> {
        if machines.is_empty() {
            return Err(Error::InvalidInstance("need at least one machine".into()));
        }
        let d = machines[0].dim();
        for m in &machines {
            if m.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: m.dim(),
                });
            }
        }
        if sigma < 0.0 || !sigma.is_finite() {
            return Err(Error::InvalidInstance(format!("sigma must be a finite nonnegative real, got {sigma}")));
        }
        let start = match start {
            Some(s) => {
                if s.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: s.len(),
                    });
                }
                s
            }
            None => Vector::zeros(d),
        };

        let mut sum = DMatrix::zeros(d, d);
        for m in &machines {
            sum += m.hessian.entries();
        }
        let average = SymMatrix::new(sum / machines.len() as f64)?;

        let mu = machines
            .iter()
            .map(|m| m.hessian.lambda_min())
            .fold(f64::INFINITY, f64::min)
            .max(0.0);
        let smoothness = machines
            .iter()
            .map(|m| m.hessian.lambda_max())
            .fold(0.0_f64, f64::max);

        let mut inst = ProblemInstance {
            machines,
            sigma,
            mu,
            smoothness,
            radius_b: 0.0,
            start,
            average,
        };
        inst.radius_b = if inst.average.lambda_min() > SINGULAR_TOL {
            inst.global_optimum()?.norm()
        } else {
            inst.machines.iter().map(|m| m.optimum.norm()).fold(0.0, f64::max)
        };
        Ok(inst)
    }

    pub fn machines(&self) -> &[QuadraticMachine] {
        &self.machines
    }

    pub fn num_machines(&self) -> usize {
        self.machines.len()
    }

    pub fn dim(&self) -> usize {
        self.machines[0].dim()
    }

    /// Smallest machine eigenvalue (the class parameter mu).
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Largest machine eigenvalue (the class parameter H).
    pub fn smoothness(&self) -> f64 {
        self.smoothness
    }

    /// Bound B on the optimum norm (derived at construction).
    pub fn radius_b(&self) -> f64 {
        self.radius_b
    }

    /// The averaged Hessian `A = (1/M) sum_m A_m`, cached at construction.
    pub fn average_hessian(&self) -> &SymMatrix {
        &self.average
    }

    pub fn is_strongly_convex(&self) -> bool {
        self.machines.iter().all(|m| m.is_strongly_convex())
    }

    /// Minimizer of the average objective,
    /// `x* = (1/M) sum_m A^{-1} A_m x_m*`.
    pub fn global_optimum(&self) -> Result<Vector> {
        let lmin = self.average.lambda_min();
        if lmin <= SINGULAR_TOL {
            return Err(Error::NotStronglyConvex { lambda_min: lmin });
        }
        let inv = self.average.inverse()?;
        let mut acc = Vector::zeros(self.dim());
        for m in &self.machines {
            acc += m.hessian.mul_vec(&m.optimum);
        }
        acc /= self.num_machines() as f64;
        Ok(inv.mul_vec(&acc))
    }

    /// Plain mean of the machine optima. Requires every machine to be
    /// strongly convex so each optimum is unique.
    pub fn mean_optimum(&self) -> Result<Vector> {
        for m in &self.machines {
            if !m.is_strongly_convex() {
                return Err(Error::AmbiguousOptimum { label: m.label });
            }
        }
        let mut acc = Vector::zeros(self.dim());
        for m in &self.machines {
            acc += &m.optimum;
        }
        Ok(acc / self.num_machines() as f64)
    }

    /// Value and gradient of the average objective F at x.
    pub fn average_value_and_gradient(&self, x: &Vector) -> (f64, Vector) {
        let mut value = 0.0;
        let mut grad = Vector::zeros(self.dim());
        for m in &self.machines {
            let (v, g) = m.value_and_gradient(x);
            value += v;
            grad += g;
        }
        let inv_m = 1.0 / self.num_machines() as f64;
        (value * inv_m, grad * inv_m)
    }

    pub fn average_value(&self, x: &Vector) -> f64 {
        self.average_value_and_gradient(x).0
    }

    pub fn average_gradient(&self, x: &Vector) -> Vector {
        self.average_value_and_gradient(x).1
    }

    /// `F(x) - F(x*)`, clamped at a tiny negative floor from roundoff.
    pub fn suboptimality(&self, x: &Vector) -> Result<f64> {
        let opt = self.global_optimum()?;
        Ok((self.average_value(x) - self.average_value(&opt)).max(-1e-12))
    }

    /// Stable fingerprint over the instance bytes (FNV-1a over the machine
    /// matrices, optima, sigma, and start point).
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv1a::new();
        h.write_u64(self.num_machines() as u64);
        h.write_u64(self.dim() as u64);
        h.write_f64(self.sigma);
        for v in self.start.iter() {
            h.write_f64(*v);
        }
        for m in &self.machines {
            for v in m.hessian.entries().iter() {
                h.write_f64(*v);
            }
            for v in m.optimum.iter() {
                h.write_f64(*v);
            }
        }
        h.finish()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(InstanceFile::from(self)).expect("instance serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&InstanceFile::from(self))?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        file.build()
    }
}

/// On-disk instance representation:
/// `{"dim", "sigma", "machines": [{"hessian": row-major, "optimum": []}], "start"}`.
#[derive(Debug, Serialize, Deserialize)]
struct InstanceFile {
    dim: usize,
    sigma: f64,
    machines: Vec<MachineFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    start: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MachineFile {
    hessian: Vec<f64>,
    optimum: Vec<f64>,
}

impl From<&ProblemInstance> for InstanceFile {
    fn from(inst: &ProblemInstance) -> Self {
        InstanceFile {
            dim: inst.dim(),
            sigma: inst.sigma,
            machines: inst
                .machines
                .iter()
                .map(|m| MachineFile {
                    hessian: m.hessian.entries().transpose().as_slice().to_vec(),
                    optimum: m.optimum.as_slice().to_vec(),
                })
                .collect(),
            start: if inst.start.iter().all(|&v| v == 0.0) {
                None
            } else {
                Some(inst.start.as_slice().to_vec())
            },
        }
    }
}

impl InstanceFile {
    fn build(self) -> Result<ProblemInstance> {
        let mut machines = Vec::with_capacity(self.machines.len());
        for (label, m) in self.machines.into_iter().enumerate() {
            let hessian = SymMatrix::from_rows(self.dim, &m.hessian)?;
            if m.optimum.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: m.optimum.len(),
                });
            }
            machines.push(QuadraticMachine::new(
                hessian,
                Vector::from_vec(m.optimum),
                label,
            )?);
        }
        let start = self.start.map(Vector::from_vec);
        ProblemInstance::new(machines, self.sigma, start)
    }
}

/// FNV-1a, used for fingerprints and manifest hashes; stable across runs
/// and platforms, unlike the std hasher.
pub struct Fnv1a {
    state: u64,
}

impl Fnv1a {
    pub fn new() -> Self {
        Fnv1a {
            state: 0xcbf29ce484222325,
        }
    }

    pub fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.state ^= b as u64;
            self.state = self.state.wrapping_mul(0x100000001b3);
        }
    }

    pub fn write_u64(&mut self, v: u64) {
        self.write(&v.to_le_bytes());
    }

    pub fn write_f64(&mut self, v: f64) {
        self.write(&v.to_bits().to_le_bytes());
    }

    pub fn finish(&self) -> u64 {
        self.state
    }
}

impl Default for Fnv1a {
    fn default() -> Self {
        Self::new()
    }
}

/// Convenience constructor for diagonal machines, used heavily in tests.
pub fn diag_machine(diag: &[f64], optimum: &[f64], label: usize) -> QuadraticMachine {
    let d = diag.len();
    let mut m = DMatrix::zeros(d, d);
    for (i, &v) in diag.iter().enumerate() {
        m[(i, i)] = v;
    }
    QuadraticMachine::new(
        SymMatrix::new(m).expect("diagonal is symmetric"),
        Vector::from_column_slice(optimum),
        label,
    )
    .expect("diagonal PSD machine")
}
