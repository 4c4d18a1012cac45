//! Brute-force ground truth at small N: exact log-partition per disorder
//! sample via Gray-code enumeration, Monte Carlo disorder averages with
//! standard errors, Gibbs expectations and the exact second-moment ratio.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{
    effective_matrix, interaction_matrix, quadratic_form, CouplingRealization, SizedModel,
    SpinConfiguration,
};

/// Default cap on enumerable spins (2^22 ~ 4M configurations).
pub const DEFAULT_ENUM_CAP: usize = 22;
/// Default cap on magnetization sectors for the second-moment sum.
pub const DEFAULT_SECTOR_CAP: usize = 10_000_000;

/// A Monte Carlo estimate: value, standard error of the mean, sample count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl PressureEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        assert!(n >= 1);
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
                / (n as f64 - 1.0);
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        PressureEstimate {
            value: mean,
            std_error,
            samples: n,
        }
    }
}

/// Mixes a base seed and a sample index into an independent stream seed
/// (splitmix64 finalizer), so parallel order never matters.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap || n >= usize::BITS as usize - 1 {
        return Err(Error::CapExceeded { n, cap });
    }
    Ok(())
}

/// Walks all 2^n spin configurations in Gray-code order, maintaining the
/// log-weight sigma^T A sigma + b . sigma incrementally (A symmetric).
/// The visitor receives the current spins and log-weight.
pub fn enumerate_log_weights<F: FnMut(&[i8], f64)>(a: &DMatrix<f64>, b: &[f64], mut visit: F) {
    let n = b.len();
    debug_assert_eq!(a.nrows(), n);
    debug_assert_eq!(a.ncols(), n);
    let mut sigma = vec![1i8; n];
    let mut quad: f64 = a.iter().sum();
    let mut lin: f64 = b.iter().sum();
    visit(&sigma, quad + lin);
    let total: u64 = 1u64 << n;
    for c in 1..total {
        let k = c.trailing_zeros() as usize;
        let sk = sigma[k] as f64;
        let mut row = 0.0;
        for i in 0..n {
            row += a[(k, i)] * sigma[i] as f64;
        }
        // Off-diagonal terms involving site k flip sign; A_kk sigma_k^2 is fixed.
        quad += -4.0 * sk * (row - a[(k, k)] * sk);
        lin += -2.0 * b[k] * sk;
        sigma[k] = -sigma[k];
        visit(&sigma, quad + lin);
    }
}

/// Streaming log-sum-exp accumulator with a running maximum.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    acc: f64,
}

impl LogSumExp {
    pub fn new() -> Self {
        LogSumExp {
            max: f64::NEG_INFINITY,
            acc: 0.0,
        }
    }

    pub fn push(&mut self, w: f64) {
        if w <= self.max {
            self.acc += (w - self.max).exp();
        } else {
            self.acc = self.acc * (self.max - w).exp() + 1.0;
            self.max = w;
        }
    }

    pub fn value(&self) -> f64 {
        self.max + self.acc.ln()
    }
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

/// log Z for one coupling realization, by full Gray-code enumeration.
pub fn log_partition(
    j: &CouplingRealization,
    sized: &SizedModel,
    h: &[f64],
    cap: usize,
) -> Result<f64> {
    check_cap(sized.n_total, cap)?;
    if h.len() != sized.species() {
        return Err(Error::DimensionMismatch {
            expected: sized.species(),
            got: h.len(),
        });
    }
    let a = interaction_matrix(j, sized);
    let mut b = Vec::with_capacity(sized.n_total);
    for (s, &n) in sized.sizes.iter().enumerate() {
        b.extend(std::iter::repeat(h[s]).take(n));
    }
    let mut lse = LogSumExp::new();
    enumerate_log_weights(&a, &b, |_, w| lse.push(w));
    Ok(lse.value())
}

/// Disorder-averaged pressure density (1/N) E log Z with the standard error
/// of the mean over `n_samples` i.i.d. coupling draws.
pub fn quenched_pressure(
    sized: &SizedModel,
    n_samples: usize,
    seed: u64,
    cap: usize,
) -> Result<PressureEstimate> {
    check_cap(sized.n_total, cap)?;
    if n_samples < 1 {
        return Err(Error::Precondition("n_samples must be >= 1".into()));
    }
    let h = sized.spec.h.clone();
    let xs: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let j = crate::model::sample_couplings(sized, derive_seed(seed, i as u64));
            log_partition(&j, sized, &h, cap).map(|lz| lz / sized.n_total as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(PressureEstimate::from_samples(&xs))
}

/// The 2^N normalized Gibbs weights of one realization, together with the
/// configurations in enumeration order.
#[derive(Debug, Clone)]
pub struct GibbsState {
    pub weights: Vec<f64>,
    configs: Vec<i8>,
    n_sites: usize,
}

impl GibbsState {
    pub fn compute(
        j: &CouplingRealization,
        sized: &SizedModel,
        h: &[f64],
        cap: usize,
    ) -> Result<Self> {
        check_cap(sized.n_total, cap)?;
        let a = interaction_matrix(j, sized);
        let mut b = Vec::with_capacity(sized.n_total);
        for (s, &n) in sized.sizes.iter().enumerate() {
            b.extend(std::iter::repeat(h[s]).take(n));
        }
        Self::from_log_weights(&a, &b)
    }

    /// Gibbs state for an arbitrary quadratic form sigma^T A sigma + b . sigma
    /// of log weights, e.g. interpolating Hamiltonians with per-site fields.
    pub fn from_log_weights(a: &DMatrix<f64>, b: &[f64]) -> Result<Self> {
        let n = b.len();
        check_cap(n, DEFAULT_ENUM_CAP)?;
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.nrows(),
            });
        }
        let count = 1usize << n;
        let mut log_w = Vec::with_capacity(count);
        let mut configs = Vec::with_capacity(count * n);
        enumerate_log_weights(a, b, |sigma, w| {
            log_w.push(w);
            configs.extend_from_slice(sigma);
        });
        let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut weights: Vec<f64> = log_w.iter().map(|&w| (w - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        Ok(GibbsState {
            weights,
            configs,
            n_sites: n,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn config(&self, idx: usize) -> &[i8] {
        &self.configs[idx * self.n_sites..(idx + 1) * self.n_sites]
    }

    /// First and second site moments m_i = <sigma_i>, M_ij = <sigma_i sigma_j>
    /// under this Gibbs measure.
    pub fn site_moments(&self) -> (Vec<f64>, DMatrix<f64>) {
        let n = self.n_sites;
        let mut m = vec![0.0; n];
        let mut mm = DMatrix::zeros(n, n);
        for (idx, &w) in self.weights.iter().enumerate() {
            let sigma = self.config(idx);
            for i in 0..n {
                let si = sigma[i] as f64;
                m[i] += w * si;
                for k in 0..n {
                    mm[(i, k)] += w * si * sigma[k] as f64;
                }
            }
        }
        (m, mm)
    }
}

/// Exact n-replica Gibbs expectation by nested enumeration (n <= 2).
pub fn gibbs_expectation<F>(
    j: &CouplingRealization,
    sized: &SizedModel,
    h: &[f64],
    n_replicas: usize,
    f: F,
) -> Result<f64>
where
    F: Fn(&[&SpinConfiguration]) -> f64,
{
    if n_replicas == 0 || n_replicas > 2 {
        return Err(Error::Precondition(
            "gibbs_expectation supports 1 or 2 replicas".into(),
        ));
    }
    let state = GibbsState::compute(j, sized, h, DEFAULT_ENUM_CAP)?;
    let configs: Vec<SpinConfiguration> = (0..state.len())
        .map(|i| SpinConfiguration::from_flat(sized, state.config(i)))
        .collect();
    let mut acc = 0.0;
    match n_replicas {
        1 => {
            for (i, &wi) in state.weights.iter().enumerate() {
                acc += wi * f(&[&configs[i]]);
            }
        }
        _ => {
            for (i, &wi) in state.weights.iter().enumerate() {
                for (k, &wk) in state.weights.iter().enumerate() {
                    acc += wi * wk * f(&[&configs[i], &configs[k]]);
                }
            }
        }
    }
    Ok(acc)
}

/// E(Z^2)/E^2(Z) = 2^-N sum_tau exp(N (m, D m)) by summing over per-species
/// magnetization sectors weighted by binomial counts.
pub fn second_moment_ratio(sized: &SizedModel, sector_cap: usize) -> Result<f64> {
    let s = sized.species();
    let sectors: usize = sized.sizes.iter().map(|&n| n + 1).product();
    if sectors > sector_cap {
        return Err(Error::SectorCapExceeded {
            sectors,
            cap: sector_cap,
        });
    }
    let d = effective_matrix(&sized.spec);
    let n_total = sized.n_total as f64;
    let max_n = *sized.sizes.iter().max().unwrap();
    let ln_fact = ln_factorials(max_n);

    let mut ks = vec![0usize; s];
    let mut lse = LogSumExp::new();
    loop {
        // Sector (k_1, ..., k_S): k_s up-spins in species s.
        let mut log_count = 0.0;
        let mut m = vec![0.0; s];
        for (i, &k) in ks.iter().enumerate() {
            let n = sized.sizes[i];
            log_count += ln_fact[n] - ln_fact[k] - ln_fact[n - k];
            m[i] = (2.0 * k as f64 - n as f64) / n as f64;
        }
        let qf = quadratic_form(&d, &m, &m)?;
        lse.push(log_count + n_total * qf);
        // Advance mixed-radix counter.
        let mut carry = true;
        for (i, k) in ks.iter_mut().enumerate() {
            if *k < sized.sizes[i] {
                *k += 1;
                carry = false;
                break;
            }
            *k = 0;
        }
        if carry {
            break;
        }
    }
    Ok((lse.value() - n_total * std::f64::consts::LN_2).exp())
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n + 1];
    for k in 1..=n {
        v[k] = v[k - 1] + (k as f64).ln();
    }
    v
}

/// Second-moment ratio by direct 2^N enumeration; the independent oracle
/// for the sector-counted sum.
pub fn second_moment_ratio_enumerated(sized: &SizedModel, cap: usize) -> Result<f64> {
    check_cap(sized.n_total, cap)?;
    let d = effective_matrix(&sized.spec);
    let n = sized.n_total;
    let n_f = n as f64;
    let mut lse = LogSumExp::new();
    let mut sigma = vec![1i8; n];
    let total = 1u64 << n;
    for c in 0..total {
        if c > 0 {
            let k = c.trailing_zeros() as usize;
            sigma[k] = -sigma[k];
        }
        let mut m = vec![0.0; sized.species()];
        for (s, ms) in m.iter_mut().enumerate() {
            let sum: i64 = sigma[sized.offsets[s]..sized.offsets[s] + sized.sizes[s]]
                .iter()
                .map(|&x| x as i64)
                .sum();
            *ms = sum as f64 / sized.sizes[s] as f64;
        }
        lse.push(n_f * quadratic_form(&d, &m, &m)?);
    }
    Ok((lse.value() - n_f * std::f64::consts::LN_2).exp())
}
