//! Model definition: species densities, coupling variances, effective
//! coupling matrix, overlaps, covariance and Hamiltonian sampling.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SYM_TOL: f64 = 1e-12;

/// Full model definition: densities, coupling variances, external fields
/// and the inverse temperature multiplying the coupling standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub alpha: Vec<f64>,
    pub delta2: Vec<Vec<f64>>,
    pub h: Vec<f64>,
    #[serde(default = "default_beta")]
    pub beta: f64,
}

fn default_beta() -> f64 {
    1.0
}

impl ModelSpec {
    pub fn new(alpha: Vec<f64>, delta2: Vec<Vec<f64>>, h: Vec<f64>, beta: f64) -> Result<Self> {
        let spec = ModelSpec {
            alpha,
            delta2,
            h,
            beta,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn species(&self) -> usize {
        self.alpha.len()
    }

    /// Checks every invariant of the model definition and returns the first
    /// violation found.
    pub fn validate(&self) -> Result<()> {
        let s = self.species();
        if s == 0 {
            return Err(Error::InvalidModel("at least one species required".into()));
        }
        for (i, &a) in self.alpha.iter().enumerate() {
            if !(a > 0.0) {
                return Err(Error::InvalidModel(format!(
                    "density alpha[{i}] = {a} must be positive"
                )));
            }
        }
        let sum: f64 = self.alpha.iter().sum();
        if (sum - 1.0).abs() > SYM_TOL {
            return Err(Error::InvalidModel(format!(
                "densities must sum to 1 (got {sum})"
            )));
        }
        if self.delta2.len() != s || self.delta2.iter().any(|row| row.len() != s) {
            return Err(Error::InvalidModel(format!(
                "variance matrix must be {s}x{s}"
            )));
        }
        for i in 0..s {
            for j in 0..s {
                let v = self.delta2[i][j];
                if !(v >= 0.0) {
                    return Err(Error::InvalidModel(format!(
                        "variance entry delta2[{i}][{j}] = {v} must be non-negative"
                    )));
                }
                if (v - self.delta2[j][i]).abs() > SYM_TOL {
                    return Err(Error::InvalidModel(
                        "variance matrix must be symmetric".into(),
                    ));
                }
            }
        }
        if self.h.len() != s {
            return Err(Error::InvalidModel(format!(
                "field vector must have {s} entries"
            )));
        }
        if !(self.beta > 0.0) {
            return Err(Error::InvalidModel(format!(
                "beta = {} must be positive",
                self.beta
            )));
        }
        Ok(())
    }

    /// Same spec with beta replaced.
    pub fn with_beta(&self, beta: f64) -> Self {
        let mut s = self.clone();
        s.beta = beta;
        s
    }

    /// Same spec with every variance entry scaled by `lambda` (beta unchanged).
    pub fn with_scaled_variances(&self, lambda: f64) -> Self {
        let mut s = self.clone();
        for row in &mut s.delta2 {
            for v in row.iter_mut() {
                *v *= lambda;
            }
        }
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ModelSpec = serde_json::from_str(text)
            .map_err(|e| Error::InvalidModel(format!("bad model config: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model spec serializes")
    }
}

/// Validates a raw spec and hands it back unchanged.
pub fn validate_model(raw: ModelSpec) -> Result<ModelSpec> {
    raw.validate()?;
    Ok(raw)
}

/// The S x S matrix D_sp = beta^2 alpha_s alpha_p Delta^2_sp driving every
/// covariance quadratic form.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveCouplingMatrix {
    pub d: DMatrix<f64>,
}

impl EffectiveCouplingMatrix {
    pub fn species(&self) -> usize {
        self.d.nrows()
    }

    pub fn determinant(&self) -> f64 {
        self.d.clone().lu().determinant()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.d
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    /// Inverse, or an error if D is singular.
    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        let det = self.determinant();
        self.d
            .clone()
            .try_inverse()
            .ok_or(Error::SingularMatrix { det })
    }
}

pub fn effective_matrix(spec: &ModelSpec) -> EffectiveCouplingMatrix {
    let s = spec.species();
    let b2 = spec.beta * spec.beta;
    let d = DMatrix::from_fn(s, s, |i, j| {
        b2 * spec.alpha[i] * spec.alpha[j] * spec.delta2[i][j]
    });
    EffectiveCouplingMatrix { d }
}

/// (u, D v) = sum_sp u_s D_sp v_p.
pub fn quadratic_form(d: &EffectiveCouplingMatrix, u: &[f64], v: &[f64]) -> Result<f64> {
    let s = d.species();
    if u.len() != s {
        return Err(Error::DimensionMismatch {
            expected: s,
            got: u.len(),
        });
    }
    if v.len() != s {
        return Err(Error::DimensionMismatch {
            expected: s,
            got: v.len(),
        });
    }
    let mut acc = 0.0;
    for i in 0..s {
        for j in 0..s {
            acc += u[i] * d.d[(i, j)] * v[j];
        }
    }
    Ok(acc)
}

/// True iff the smallest eigenvalue of D is >= -tol.
pub fn is_psd(d: &EffectiveCouplingMatrix, tol: f64) -> bool {
    d.min_eigenvalue() >= -tol
}

pub const DEFAULT_PSD_TOL: f64 = 1e-10;

/// A model instantiated at a concrete total size N, with per-species sizes
/// chosen by largest-remainder apportionment of alpha_s * N.
#[derive(Debug, Clone)]
pub struct SizedModel {
    pub spec: ModelSpec,
    pub n_total: usize,
    pub sizes: Vec<usize>,
    /// Start offset of each species block in the flat site indexing.
    pub offsets: Vec<usize>,
}

impl SizedModel {
    pub fn new(spec: ModelSpec, n_total: usize) -> Result<Self> {
        spec.validate()?;
        if n_total == 0 {
            return Err(Error::InvalidModel("N must be positive".into()));
        }
        let s = spec.species();
        let mut sizes: Vec<usize> = Vec::with_capacity(s);
        let mut remainders: Vec<(usize, f64)> = Vec::with_capacity(s);
        let mut assigned = 0usize;
        for (i, &a) in spec.alpha.iter().enumerate() {
            let exact = a * n_total as f64;
            let base = exact.floor() as usize;
            sizes.push(base);
            assigned += base;
            remainders.push((i, exact - base as f64));
        }
        remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        for k in 0..(n_total - assigned) {
            sizes[remainders[k % s].0] += 1;
        }
        if sizes.iter().any(|&n| n == 0) {
            return Err(Error::InvalidModel(format!(
                "N = {n_total} too small: some species rounds to zero sites"
            )));
        }
        let mut offsets = Vec::with_capacity(s);
        let mut off = 0;
        for &n in &sizes {
            offsets.push(off);
            off += n;
        }
        debug_assert_eq!(off, n_total);
        Ok(SizedModel {
            spec,
            n_total,
            sizes,
            offsets,
        })
    }

    pub fn species(&self) -> usize {
        self.spec.species()
    }

    /// Species index of a flat site index.
    pub fn species_of(&self, site: usize) -> usize {
        debug_assert!(site < self.n_total);
        let mut s = 0;
        while s + 1 < self.sizes.len() && site >= self.offsets[s + 1] {
            s += 1;
        }
        s
    }

    /// Per-site external field in flat indexing.
    pub fn site_fields(&self) -> Vec<f64> {
        let mut f = Vec::with_capacity(self.n_total);
        for (s, &n) in self.sizes.iter().enumerate() {
            f.extend(std::iter::repeat(self.spec.h[s]).take(n));
        }
        f
    }
}

/// One disorder sample: an N^(s) x N^(p) block of i.i.d. centered Gaussians
/// for every ordered species pair, including s = p and the i = j diagonal.
#[derive(Debug, Clone)]
pub struct CouplingRealization {
    pub species: usize,
    /// Row-major by ordered pair: blocks[s * S + p].
    pub blocks: Vec<DMatrix<f64>>,
}

impl CouplingRealization {
    pub fn block(&self, s: usize, p: usize) -> &DMatrix<f64> {
        &self.blocks[s * self.species + p]
    }

    /// Assembles the couplings into one N x N matrix in flat indexing.
    pub fn full_matrix(&self, sized: &SizedModel) -> DMatrix<f64> {
        let n = sized.n_total;
        let mut full = DMatrix::zeros(n, n);
        for s in 0..self.species {
            for p in 0..self.species {
                let b = self.block(s, p);
                for i in 0..sized.sizes[s] {
                    for j in 0..sized.sizes[p] {
                        full[(sized.offsets[s] + i, sized.offsets[p] + j)] = b[(i, j)];
                    }
                }
            }
        }
        full
    }
}

/// Draws one coupling realization; deterministic given the seed. Entry (s,p)
/// has standard deviation beta * Delta_sp.
pub fn sample_couplings(sized: &SizedModel, seed: u64) -> CouplingRealization {
    let s_count = sized.species();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut blocks = Vec::with_capacity(s_count * s_count);
    for s in 0..s_count {
        for p in 0..s_count {
            let sd = sized.spec.beta * sized.spec.delta2[s][p].sqrt();
            let block = if sd == 0.0 {
                DMatrix::zeros(sized.sizes[s], sized.sizes[p])
            } else {
                let normal = Normal::new(0.0, sd).expect("positive std dev");
                DMatrix::from_fn(sized.sizes[s], sized.sizes[p], |_, _| normal.sample(&mut rng))
            };
            blocks.push(block);
        }
    }
    CouplingRealization {
        species: s_count,
        blocks,
    }
}

/// Spin configuration: one +/-1 vector per species.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinConfiguration {
    pub spins: Vec<Vec<i8>>,
}

impl SpinConfiguration {
    pub fn all_up(sized: &SizedModel) -> Self {
        SpinConfiguration {
            spins: sized.sizes.iter().map(|&n| vec![1i8; n]).collect(),
        }
    }

    pub fn from_flat(sized: &SizedModel, flat: &[i8]) -> Self {
        let mut spins = Vec::with_capacity(sized.species());
        for (s, &n) in sized.sizes.iter().enumerate() {
            spins.push(flat[sized.offsets[s]..sized.offsets[s] + n].to_vec());
        }
        SpinConfiguration { spins }
    }

    pub fn negated(&self) -> Self {
        SpinConfiguration {
            spins: self
                .spins
                .iter()
                .map(|v| v.iter().map(|&x| -x).collect())
                .collect(),
        }
    }

    fn check_shape(&self, sized: &SizedModel) -> Result<()> {
        if self.spins.len() != sized.species() {
            return Err(Error::DimensionMismatch {
                expected: sized.species(),
                got: self.spins.len(),
            });
        }
        for (s, v) in self.spins.iter().enumerate() {
            if v.len() != sized.sizes[s] {
                return Err(Error::DimensionMismatch {
                    expected: sized.sizes[s],
                    got: v.len(),
                });
            }
        }
        Ok(())
    }
}

/// Per-species overlap vector, each component in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapVector(pub Vec<f64>);

/// q_s = (1/N^(s)) sum_i a^(s)_i b^(s)_i.
pub fn overlap(
    a: &SpinConfiguration,
    b: &SpinConfiguration,
    sized: &SizedModel,
) -> Result<OverlapVector> {
    a.check_shape(sized)?;
    b.check_shape(sized)?;
    let mut q = Vec::with_capacity(sized.species());
    for s in 0..sized.species() {
        let dot: i64 = a.spins[s]
            .iter()
            .zip(&b.spins[s])
            .map(|(&x, &y)| (x as i64) * (y as i64))
            .sum();
        q.push(dot as f64 / sized.sizes[s] as f64);
    }
    Ok(OverlapVector(q))
}

/// Covariance of the Hamiltonian at two configurations: N (q, D q).
pub fn covariance(
    a: &SpinConfiguration,
    b: &SpinConfiguration,
    sized: &SizedModel,
) -> Result<f64> {
    let q = overlap(a, b, sized)?;
    let d = effective_matrix(&sized.spec);
    Ok(sized.n_total as f64 * quadratic_form(&d, &q.0, &q.0)?)
}

/// H(sigma) = -(1/sqrt N) sum over all ordered species pairs and all (i, j),
/// including s = p and i = j.
pub fn hamiltonian(
    j: &CouplingRealization,
    sigma: &SpinConfiguration,
    sized: &SizedModel,
) -> Result<f64> {
    sigma.check_shape(sized)?;
    let mut acc = 0.0;
    for s in 0..sized.species() {
        for p in 0..sized.species() {
            let b = j.block(s, p);
            for i in 0..sized.sizes[s] {
                let si = sigma.spins[s][i] as f64;
                let mut row = 0.0;
                for jj in 0..sized.sizes[p] {
                    row += b[(i, jj)] * sigma.spins[p][jj] as f64;
                }
                acc += si * row;
            }
        }
    }
    Ok(-acc / (sized.n_total as f64).sqrt())
}

/// Symmetrized interaction matrix A = (J + J^T) / (2 sqrt N) in flat indexing,
/// so that -H(sigma) = sigma^T A sigma.
pub fn interaction_matrix(j: &CouplingRealization, sized: &SizedModel) -> DMatrix<f64> {
    let full = j.full_matrix(sized);
    let sym = (&full + full.transpose()) / 2.0;
    sym / (sized.n_total as f64).sqrt()
}
