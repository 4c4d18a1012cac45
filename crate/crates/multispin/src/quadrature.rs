//! Quadrature rules: Gauss-Hermite for expectations over a standard
//! Gaussian and Gauss-Legendre for finite-interval integrals.

use nalgebra::DMatrix;

pub const DEFAULT_NODES: usize = 64;

/// Nodes and weights for E[g(z)] with z ~ N(0,1).
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Gauss-Hermite rule with `n` nodes, transformed to the unit-variance
    /// Gaussian measure (Golub-Welsch on the Hermite Jacobi matrix).
    pub fn gauss_hermite(n: usize) -> Self {
        assert!(n >= 1);
        // Jacobi matrix for physicists' Hermite: off-diagonal sqrt(k/2).
        let mut jac = DMatrix::zeros(n, n);
        for k in 1..n {
            let b = (k as f64 / 2.0).sqrt();
            jac[(k - 1, k)] = b;
            jac[(k, k - 1)] = b;
        }
        let eig = jac.symmetric_eigen();
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let x = eig.eigenvalues[i];
                let v0 = eig.eigenvectors[(0, i)];
                (x, v0 * v0) // weight / sqrt(pi)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        // z = x * sqrt(2) converts weight exp(-x^2) to the standard Gaussian.
        let nodes: Vec<f64> = pairs.iter().map(|&(x, _)| x * std::f64::consts::SQRT_2).collect();
        let mut weights: Vec<f64> = pairs.iter().map(|&(_, w)| w).collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        QuadratureRule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        QuadratureRule::gauss_hermite(DEFAULT_NODES)
    }
}

/// Sum_k w_k g(z_k), i.e. E[g(z)] under the rule's Gaussian measure.
pub fn gaussian_expectation<F: Fn(f64) -> f64>(rule: &QuadratureRule, g: F) -> f64 {
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&z, &w)| w * g(z))
        .sum()
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre polynomial roots.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Chebyshev-based initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_deriv(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_deriv(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Numerically stable log cosh.
pub fn ln_cosh(y: f64) -> f64 {
    let a = y.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// E[g(a z + h)] for standard Gaussian z, robust for large |a|. The
/// integrands this serves (log cosh, tanh^2, sech^2) bend on the scale 1/|a|
/// around the zero of the affine argument, which a fixed Gauss-Hermite rule
/// cannot resolve once |a| is large; here a composite Gauss-Legendre mesh is
/// graded dyadically toward that point.
pub fn gaussian_expectation_graded<F: Fn(f64) -> f64>(a: f64, h: f64, g: F) -> f64 {
    let a = a.abs();
    if a == 0.0 {
        return g(h);
    }
    const L: f64 = 12.0;
    let z0 = (-h / a).clamp(-L, L);
    let mut cuts: Vec<f64> = Vec::with_capacity(64);
    let mut x = -L;
    while x <= L + 1e-9 {
        cuts.push(x);
        x += 1.0;
    }
    let mut w = 1.0 / a.max(1.0);
    cuts.push(z0);
    while w < 2.0 * L {
        for p in [z0 - w, z0 + w] {
            if p > -L && p < L {
                cuts.push(p);
            }
        }
        w *= 2.0;
    }
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-13);
    let (nodes, weights) = gauss_legendre(16);
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let mut acc = 0.0;
    for c in cuts.windows(2) {
        let half = (c[1] - c[0]) / 2.0;
        let mid = (c[0] + c[1]) / 2.0;
        let mut seg = 0.0;
        for (&x, &wq) in nodes.iter().zip(&weights) {
            let z = mid + half * x;
            seg += wq * g(a * z + h) * (-0.5 * z * z).exp();
        }
        acc += seg * half * norm;
    }
    acc
}

/// Integral of f over [a, b] with an n-node Gauss-Legendre rule.
pub fn integrate_legendre<F: FnMut(f64) -> f64>(n: usize, a: f64, b: f64, mut f: F) -> f64 {
    let (nodes, weights) = gauss_legendre(n);
    let half = (b - a) / 2.0;
    let mid = (a + b) / 2.0;
    nodes
        .iter()
        .zip(&weights)
        .map(|(&x, &w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}
