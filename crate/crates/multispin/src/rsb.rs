//! Ziggurat order parameter, transformed thresholds, the exact Parisi
//! recursion for piecewise-constant order parameters, the line-integral
//! term, the trial RSB pressure and its optimization.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{effective_matrix, quadratic_form, ModelSpec};
use crate::optim::nelder_mead;
use crate::quadrature::{gauss_legendre, QuadratureRule};
use crate::rs::{rs_solve, DEFAULT_FP_TOL};

/// K-step monotone overlap path with its weight sequence:
/// q_0 = 0, q_K = 1 componentwise, 0 = m_0 <= m_1 <= ... <= m_{K+1} = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ZigguratOrderParameter {
    pub k: usize,
    pub q_path: Vec<Vec<f64>>,
    pub m: Vec<f64>,
}

impl ZigguratOrderParameter {
    pub fn new(q_path: Vec<Vec<f64>>, m: Vec<f64>) -> Result<Self> {
        if q_path.len() < 2 {
            return Err(Error::Precondition("need K >= 1 (at least q_0 and q_K)".into()));
        }
        let k = q_path.len() - 1;
        let s = q_path[0].len();
        if m.len() != k + 2 {
            return Err(Error::DimensionMismatch {
                expected: k + 2,
                got: m.len(),
            });
        }
        if q_path.iter().any(|q| q.len() != s) {
            return Err(Error::Precondition("ragged overlap path".into()));
        }
        if q_path[0].iter().any(|&x| x != 0.0) {
            return Err(Error::Precondition("q_0 must be the zero vector".into()));
        }
        if q_path[k].iter().any(|&x| x != 1.0) {
            return Err(Error::Precondition("q_K must be the all-ones vector".into()));
        }
        for l in 1..=k {
            for i in 0..s {
                if q_path[l][i] < q_path[l - 1][i] - 1e-15 {
                    return Err(Error::Precondition(format!(
                        "overlap path not monotone at level {l}, species {i}"
                    )));
                }
            }
        }
        if m[0] != 0.0 || m[k + 1] != 1.0 {
            return Err(Error::Precondition("m_0 = 0 and m_{K+1} = 1 required".into()));
        }
        for l in 1..=k + 1 {
            if m[l] < m[l - 1] - 1e-15 || m[l] > 1.0 + 1e-15 {
                return Err(Error::Precondition(format!(
                    "weight sequence not monotone in [0,1] at index {l}"
                )));
            }
        }
        Ok(ZigguratOrderParameter { k, q_path, m })
    }

    pub fn species(&self) -> usize {
        self.q_path[0].len()
    }

    /// The K-level embedding of the replica-symmetric point: a single
    /// interior level q_1 = q with m = (0, 0, 1, ..., 1); requires K >= 2.
    pub fn rs_embedding(q: &[f64], k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::Precondition("RS embedding needs K >= 2".into()));
        }
        let s = q.len();
        let mut q_path = vec![vec![0.0; s]];
        q_path.push(q.to_vec());
        for _ in 2..=k {
            q_path.push(vec![1.0; s]);
        }
        let mut m = vec![0.0, 0.0];
        m.extend(std::iter::repeat(1.0).take(k));
        ZigguratOrderParameter::new(q_path, m)
    }
}

/// x(u) = sum_l (m_{l+1} - m_l) prod_s theta(u_s - q_l^(s)), theta(0) = 1.
pub fn evaluate_x(zig: &ZigguratOrderParameter, u: &[f64]) -> f64 {
    let mut acc = 0.0;
    for l in 0..=zig.k {
        let fires = zig
            .q_path[l]
            .iter()
            .zip(u)
            .all(|(&q, &us)| us - q >= 0.0);
        if fires {
            acc += zig.m[l + 1] - zig.m[l];
        }
    }
    acc
}

/// Per-species transformed thresholds Q_l^(s) = (2/alpha_s) (D q_l)_s.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedLevels {
    /// levels[s][l], l = 0..=K.
    pub levels: Vec<Vec<f64>>,
}

pub fn transformed_levels(
    spec: &ModelSpec,
    zig: &ZigguratOrderParameter,
) -> Result<TransformedLevels> {
    let s_count = spec.species();
    if zig.species() != s_count {
        return Err(Error::DimensionMismatch {
            expected: s_count,
            got: zig.species(),
        });
    }
    let d = effective_matrix(spec);
    let mut levels = vec![Vec::with_capacity(zig.k + 1); s_count];
    for q in &zig.q_path {
        for i in 0..s_count {
            let mut dq = 0.0;
            for j in 0..s_count {
                dq += d.d[(i, j)] * q[j];
            }
            levels[i].push(2.0 * dq / spec.alpha[i]);
        }
    }
    Ok(TransformedLevels { levels })
}

/// Grid settings for the Parisi recursion.
#[derive(Debug, Clone, Copy)]
pub struct GridConfig {
    pub dy: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { dy: 0.02 }
    }
}

/// One species' Parisi solution: f_l on a uniform symmetric y-grid for every
/// level boundary l = K, ..., 0.
#[derive(Debug, Clone)]
pub struct ParisiSolution {
    pub y_max: f64,
    pub dy: f64,
    /// values[l] = f_l at the grid nodes, l = 0..=K.
    pub values: Vec<Vec<f64>>,
}

impl ParisiSolution {
    pub fn grid(&self) -> Vec<f64> {
        let n = self.values[0].len();
        (0..n).map(|i| -self.y_max + i as f64 * self.dy).collect()
    }

    pub fn level(&self, l: usize) -> &[f64] {
        &self.values[l]
    }

    /// f_0 evaluated at y by the same interpolation used in the recursion.
    pub fn grid_readout(&self, y: f64) -> f64 {
        interp_cubic(&self.values[0], self.y_max, self.dy, y)
    }
}

fn ln_cosh(y: f64) -> f64 {
    let a = y.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Cubic (Catmull-Rom) interpolation on a uniform grid, with slope +-1
/// linear extension outside [-y_max, y_max].
fn interp_cubic(values: &[f64], y_max: f64, dy: f64, y: f64) -> f64 {
    let n = values.len();
    if y >= y_max {
        return values[n - 1] + (y - y_max);
    }
    if y <= -y_max {
        return values[0] + (-y_max - y);
    }
    let t_full = (y + y_max) / dy;
    let i = (t_full.floor() as usize).min(n - 2);
    let t = t_full - i as f64;
    if i == 0 || i + 2 >= n {
        return values[i] * (1.0 - t) + values[i + 1] * t;
    }
    let p0 = values[i - 1];
    let p1 = values[i];
    let p2 = values[i + 1];
    let p3 = values[i + 2];
    0.5 * (2.0 * p1
        + (p2 - p0) * t
        + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t * t
        + (3.0 * p1 - p0 - 3.0 * p2 + p3) * t * t * t)
}

/// Active recursion levels for one species: step variance and exponent,
/// ordered l = 1..=K (zero-variance levels dropped).
fn active_levels(q_levels: &[f64], m: &[f64]) -> Vec<(f64, f64)> {
    let k = q_levels.len() - 1;
    let mut out = Vec::with_capacity(k);
    for l in 1..=k {
        let v = q_levels[l] - q_levels[l - 1];
        if v > 0.0 {
            out.push((v, m[l]));
        }
    }
    out
}

/// f_i(y) by exact nested Cole-Hopf smoothing: no y-grid, so the readout
/// carries quadrature error only. `levels[i..]` are the steps still to be
/// applied below f_K = log cosh.
fn exact_eval(levels: &[(f64, f64)], i: usize, y: f64, rule: &QuadratureRule) -> f64 {
    if i == levels.len() {
        return ln_cosh(y);
    }
    // A run of m = 1 steps ending at the boundary collapses in closed form:
    // E cosh(y + z sqrt(v)) = cosh(y) exp(v/2).
    if levels[i..].iter().all(|&(_, m)| m == 1.0) {
        let var: f64 = levels[i..].iter().map(|&(v, _)| v).sum();
        return ln_cosh(y) + var / 2.0;
    }
    let (v, m) = levels[i];
    let sd = v.sqrt();
    if m <= 0.0 {
        rule.nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&z, &w)| w * exact_eval(levels, i + 1, y + z * sd, rule))
            .sum()
    } else {
        let vals: Vec<f64> = rule
            .nodes
            .iter()
            .map(|&z| exact_eval(levels, i + 1, y + z * sd, rule))
            .collect();
        let fmax = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let acc: f64 = vals
            .iter()
            .zip(&rule.weights)
            .map(|(&fv, &w)| w * (m * (fv - fmax)).exp())
            .sum();
        fmax + acc.ln() / m
    }
}

/// Runs the level-by-level recursion for one species. Returns the grid
/// solution (with the boundary condition f_K = log cosh) and the scalar
/// f^(s)(0, h_s) from the exact nested evaluation.
pub fn parisi_recursion(
    spec: &ModelSpec,
    zig: &ZigguratOrderParameter,
    species: usize,
    rule: &QuadratureRule,
    grid: &GridConfig,
) -> Result<(ParisiSolution, f64)> {
    let tl = transformed_levels(spec, zig)?;
    let q_levels = &tl.levels[species];
    let k = zig.k;
    let h = spec.h[species];
    let q_total = q_levels[k];
    let y_max_raw = h.abs() + 6.0 * q_total.sqrt() + 2.0;
    let half = (y_max_raw / grid.dy).ceil() as usize;
    let y_max = half as f64 * grid.dy;
    let n = 2 * half + 1;

    // Tail check: quadrature mass that an evaluation seeded at |y| <= |h|
    // can push past y_max after the full diffusion.
    let total_sd = q_total.sqrt();
    if total_sd > 0.0 {
        let tail_mass: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .filter(|(&z, _)| h.abs() + z.abs() * total_sd > y_max)
            .map(|(_, &w)| w)
            .sum();
        if tail_mass > 0.01 {
            return Err(Error::GridTooNarrow { tail_mass });
        }
    }

    let ys: Vec<f64> = (0..n).map(|i| -y_max + i as f64 * grid.dy).collect();
    let mut values = vec![Vec::new(); k + 1];
    values[k] = ys.iter().map(|&y| ln_cosh(y)).collect();
    for l in (1..=k).rev() {
        let v = q_levels[l] - q_levels[l - 1];
        let m = zig.m[l];
        if v <= 0.0 {
            values[l - 1] = values[l].clone();
            continue;
        }
        let sd = v.sqrt();
        let prev = &values[l];
        let next: Vec<f64> = ys
            .iter()
            .map(|&y| {
                if m <= 0.0 {
                    rule.nodes
                        .iter()
                        .zip(&rule.weights)
                        .map(|(&z, &w)| w * interp_cubic(prev, y_max, grid.dy, y + z * sd))
                        .sum()
                } else {
                    let vals: Vec<f64> = rule
                        .nodes
                        .iter()
                        .map(|&z| interp_cubic(prev, y_max, grid.dy, y + z * sd))
                        .collect();
                    let fmax = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let acc: f64 = vals
                        .iter()
                        .zip(&rule.weights)
                        .map(|(&fv, &w)| w * (m * (fv - fmax)).exp())
                        .sum();
                    fmax + acc.ln() / m
                }
            })
            .collect();
        values[l - 1] = next;
    }

    let levels = active_levels(q_levels, &zig.m);
    let readout = exact_eval(&levels, 0, h, rule);
    Ok((ParisiSolution { y_max, dy: grid.dy, values }, readout))
}

/// The scalar f^(s)(0, h_s) alone (exact nested evaluation, no grid work).
pub fn parisi_readout(
    spec: &ModelSpec,
    zig: &ZigguratOrderParameter,
    species: usize,
    rule: &QuadratureRule,
) -> Result<f64> {
    let tl = transformed_levels(spec, zig)?;
    let levels = active_levels(&tl.levels[species], &zig.m);
    Ok(exact_eval(&levels, 0, spec.h[species], rule))
}

/// Closed form of -1/2 int_Gamma x(u) grad(u, D u) . du:
/// -1/2 (1, D 1) + 1/2 sum_l (m_{l+1} - m_l) (q_l, D q_l).
pub fn line_integral_term(spec: &ModelSpec, zig: &ZigguratOrderParameter) -> Result<f64> {
    let d = effective_matrix(spec);
    let ones = vec![1.0; spec.species()];
    let mut acc = -0.5 * quadratic_form(&d, &ones, &ones)?;
    for l in 0..=zig.k {
        let w = zig.m[l + 1] - zig.m[l];
        if w != 0.0 {
            acc += 0.5 * w * quadratic_form(&d, &zig.q_path[l], &zig.q_path[l])?;
        }
    }
    Ok(acc)
}

/// Numeric line integral of -1/2 x(u) grad(u, D u) . du along a piecewise
/// linear monotone path through all q_l, by Gauss-Legendre on sub-segments
/// split at every threshold crossing.
pub fn line_integral_numeric(
    spec: &ModelSpec,
    zig: &ZigguratOrderParameter,
    path: &[Vec<f64>],
) -> Result<f64> {
    let s = spec.species();
    let d = effective_matrix(spec);
    if path.len() < 2 {
        return Err(Error::InvalidPath("path needs at least two points".into()));
    }
    if path[0].iter().any(|&x| x.abs() > 1e-12) {
        return Err(Error::InvalidPath("path must start at the origin".into()));
    }
    if path[path.len() - 1].iter().any(|&x| (x - 1.0).abs() > 1e-12) {
        return Err(Error::InvalidPath("path must end at the all-ones vector".into()));
    }
    for w in path.windows(2) {
        for i in 0..s {
            if w[1][i] < w[0][i] - 1e-12 {
                return Err(Error::InvalidPath("path must be componentwise monotone".into()));
            }
        }
    }
    // Every interior threshold point must lie on the path, in order.
    let mut cursor = 0;
    for l in 0..=zig.k {
        let target = &zig.q_path[l];
        let found = (cursor..path.len()).find(|&i| {
            path[i]
                .iter()
                .zip(target)
                .all(|(&a, &b)| (a - b).abs() < 1e-9)
        });
        match found {
            Some(i) => cursor = i,
            None => {
                return Err(Error::InvalidPath(format!(
                    "path does not visit q_{l} in order"
                )))
            }
        }
    }

    let (gl_nodes, gl_weights) = gauss_legendre(8);
    let mut acc = 0.0;
    for w in path.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        // Split at every parameter where some component crosses a threshold.
        let mut cuts = vec![0.0, 1.0];
        for q in &zig.q_path {
            for i in 0..s {
                let db = b[i] - a[i];
                if db > 0.0 {
                    let t = (q[i] - a[i]) / db;
                    if t > 0.0 && t < 1.0 {
                        cuts.push(t);
                    }
                }
            }
        }
        cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
        let dir: Vec<f64> = (0..s).map(|i| b[i] - a[i]).collect();
        for c in cuts.windows(2) {
            let (t0, t1) = (c[0], c[1]);
            let half = (t1 - t0) / 2.0;
            let mid = (t0 + t1) / 2.0;
            let mut seg = 0.0;
            for (&xi, &wi) in gl_nodes.iter().zip(&gl_weights) {
                let t = mid + half * xi;
                let u: Vec<f64> = (0..s).map(|i| a[i] + t * dir[i]).collect();
                // grad(u, D u) . u' = 2 (u', D u).
                let mut du = 0.0;
                for i in 0..s {
                    for j in 0..s {
                        du += dir[i] * d.d[(i, j)] * u[j];
                    }
                }
                seg += wi * evaluate_x(zig, &u) * 2.0 * du;
            }
            acc += seg * half;
        }
    }
    Ok(-0.5 * acc)
}

/// Random monotone staircase from 0 to 1 refined through every q_l;
/// `refinements` extra points per leg.
pub fn random_monotone_path(
    zig: &ZigguratOrderParameter,
    refinements: usize,
    rng: &mut impl Rng,
) -> Vec<Vec<f64>> {
    let s = zig.species();
    let mut path = Vec::new();
    for l in 0..zig.k {
        let a = &zig.q_path[l];
        let b = &zig.q_path[l + 1];
        path.push(a.clone());
        // Per-coordinate sorted fractions keep the leg monotone.
        let mut fracs: Vec<Vec<f64>> = (0..s)
            .map(|_| {
                let mut f: Vec<f64> = (0..refinements).map(|_| rng.gen_range(0.0..1.0)).collect();
                f.sort_by(|x, y| x.partial_cmp(y).unwrap());
                f
            })
            .collect();
        for j in 0..refinements {
            let p: Vec<f64> = (0..s)
                .map(|i| a[i] + fracs[i][j] * (b[i] - a[i]))
                .collect();
            path.push(p);
        }
        fracs.clear();
    }
    path.push(zig.q_path[zig.k].clone());
    path
}

/// p_RSB = log 2 + sum_s alpha_s f^(s)(0, h_s) + line integral term.
pub fn rsb_pressure(
    spec: &ModelSpec,
    zig: &ZigguratOrderParameter,
    rule: &QuadratureRule,
) -> Result<f64> {
    let mut acc = std::f64::consts::LN_2;
    for s in 0..spec.species() {
        acc += spec.alpha[s] * parisi_readout(spec, zig, s, rule)?;
    }
    acc += line_integral_term(spec, zig)?;
    Ok(acc)
}

/// Options for the ziggurat optimizer.
#[derive(Debug, Clone, Copy)]
pub struct OptimizeOptions {
    pub restarts: usize,
    pub max_iter: usize,
    /// Quadrature nodes used inside the search; the winner is re-scored with
    /// the caller's rule.
    pub search_nodes: usize,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            restarts: 8,
            max_iter: 1500,
            search_nodes: 32,
        }
    }
}

/// Optimization outcome: the best ziggurat found and its pressure under the
/// caller's quadrature rule.
#[derive(Debug, Clone)]
pub struct OptimizedZiggurat {
    pub zig: ZigguratOrderParameter,
    pub pressure: f64,
    pub converged: bool,
}

fn decode(params: &[f64], k: usize, s: usize) -> ZigguratOrderParameter {
    // Per-species softmax increments, then interior m from sorted sigmoids.
    let mut q_path = vec![vec![0.0; s]; k + 1];
    for i in 0..s {
        let logits = &params[i * k..(i + 1) * k];
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|&a| (a - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        let mut cum = 0.0;
        for l in 1..=k {
            cum += exps[l - 1] / total;
            q_path[l][i] = cum.min(1.0);
        }
        q_path[k][i] = 1.0;
    }
    let mut interior: Vec<f64> = params[s * k..s * k + k]
        .iter()
        .map(|&b| 1.0 / (1.0 + (-b).exp()))
        .collect();
    interior.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut m = vec![0.0];
    m.extend(interior);
    m.push(1.0);
    ZigguratOrderParameter::new(q_path, m).expect("decoded ziggurat is valid")
}

/// Minimizes p_RSB over K-level ziggurats by Nelder-Mead on an unconstrained
/// reparameterization, with random restarts plus a restart seeded at the
/// replica-symmetric point. The result never exceeds the RS value because
/// the exact RS embedding is always scored as a candidate.
pub fn optimize_ziggurat(
    spec: &ModelSpec,
    k: usize,
    rule: &QuadratureRule,
    opts: &OptimizeOptions,
    seed: u64,
) -> Result<OptimizedZiggurat> {
    if k < 1 {
        return Err(Error::Precondition("K must be >= 1".into()));
    }
    let s = spec.species();
    let dim = s * k + k;
    let search_rule = QuadratureRule::gauss_hermite(opts.search_nodes);

    let mut inits: Vec<Vec<f64>> = Vec::new();
    let rs = rs_solve(spec, rule, DEFAULT_FP_TOL)?;
    if k >= 2 {
        // Logits approximating the RS embedding.
        let mut x = vec![0.0; dim];
        for i in 0..s {
            let q1 = rs.q.0[i].clamp(1e-6, 1.0 - 1e-6);
            x[i * k] = q1.ln();
            x[i * k + 1] = (1.0 - q1).ln();
            for l in 2..k {
                x[i * k + l] = -18.0;
            }
        }
        x[s * k] = -18.0;
        for l in 1..k {
            x[s * k + l] = 18.0;
        }
        inits.push(x);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while inits.len() < opts.restarts.max(1) {
        inits.push((0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect());
    }

    let runs: Vec<_> = inits
        .par_iter()
        .map(|x0| {
            nelder_mead(
                |x| {
                    let zig = decode(x, k, s);
                    rsb_pressure(spec, &zig, &search_rule).unwrap_or(f64::INFINITY)
                },
                x0,
                0.5,
                opts.max_iter,
                1e-11,
            )
        })
        .collect();

    let mut best: Option<OptimizedZiggurat> = None;
    for run in &runs {
        let zig = decode(&run.x, k, s);
        let p = rsb_pressure(spec, &zig, rule)?;
        if best.as_ref().map_or(true, |b| p < b.pressure) {
            best = Some(OptimizedZiggurat {
                zig,
                pressure: p,
                converged: run.converged,
            });
        }
    }
    if k >= 2 {
        let rs_zig = ZigguratOrderParameter::rs_embedding(&rs.q.0, k)?;
        let p = rsb_pressure(spec, &rs_zig, rule)?;
        if best.as_ref().map_or(true, |b| p < b.pressure) {
            best = Some(OptimizedZiggurat {
                zig: rs_zig,
                pressure: p,
                converged: true,
            });
        }
    }
    Ok(best.expect("at least one candidate scored"))
}
