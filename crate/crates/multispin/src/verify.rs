//! Numerical consistency checks tying the bounds together: the pressure
//! bound chain, superadditivity of N p_N, and the K = 2 interpolation sum
//! rule behind the replica-symmetric bound.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::annealed::annealed_pressure;
use crate::error::{Error, Result};
use crate::exact::{
    derive_seed, log_partition, quenched_pressure, GibbsState, PressureEstimate,
};
use crate::model::{
    effective_matrix, interaction_matrix, is_psd, sample_couplings, ModelSpec, SizedModel,
    DEFAULT_PSD_TOL,
};
use crate::quadrature::{gauss_legendre, QuadratureRule};
use crate::rs::{rs_field_variance, rs_pressure, rs_solve, RsTrial, DEFAULT_FP_TOL};
use crate::rsb::{optimize_ziggurat, OptimizeOptions};

/// All four pressures on one model, for checking
/// p_N <= p_RSB <= p_RS <= p_A (the last inequality needs h = 0).
#[derive(Debug, Clone)]
pub struct BoundChainReport {
    pub p_exact: PressureEstimate,
    pub p_annealed: f64,
    pub p_rs: f64,
    pub p_rsb: f64,
    /// Whether the effective coupling matrix is positive semi-definite; the
    /// variational inequalities are only claimed in that case.
    pub d_psd: bool,
}

impl BoundChainReport {
    /// Slack of each link: (annealed - rs, rs - rsb, rsb - exact).
    pub fn slacks(&self) -> (f64, f64, f64) {
        (
            self.p_annealed - self.p_rs,
            self.p_rs - self.p_rsb,
            self.p_rsb - self.p_exact.value,
        )
    }

    /// Whether the chain holds, allowing `n_sigma` standard errors on the
    /// Monte Carlo link and `tol` on the deterministic ones. Returns `None`
    /// when D is not PSD: the inequalities carry no guarantee there.
    pub fn holds(&self, n_sigma: f64, tol: f64) -> Option<bool> {
        if !self.d_psd {
            return None;
        }
        let ok = self.p_rs <= self.p_annealed + tol
            && self.p_rsb <= self.p_rs + tol
            && self.p_exact.value <= self.p_rsb + n_sigma * self.p_exact.std_error + tol;
        Some(ok)
    }
}

/// Computes every bound in the chain on a single model.
pub fn bound_chain(
    spec: &ModelSpec,
    n_total: usize,
    k: usize,
    n_samples: usize,
    seed: u64,
    rule: &QuadratureRule,
    cap: usize,
) -> Result<BoundChainReport> {
    let sized = SizedModel::new(spec.clone(), n_total)?;
    let p_exact = quenched_pressure(&sized, n_samples, seed, cap)?;
    let p_annealed = annealed_pressure(spec)?;
    let rs = rs_solve(spec, rule, DEFAULT_FP_TOL)?;
    let rsb = optimize_ziggurat(spec, k, rule, &OptimizeOptions::default(), seed)?;
    let d = effective_matrix(spec);
    Ok(BoundChainReport {
        p_exact,
        p_annealed,
        p_rs: rs.pressure,
        p_rsb: rsb.pressure,
        d_psd: is_psd(&d, DEFAULT_PSD_TOL),
    })
}

/// Paired Monte Carlo estimate of (1/N) E[log Z_N - log Z_{N_1} - log Z_{N_2}]
/// with N = N_1 + N_2 and independent disorder in all three systems; the
/// expectation is >= 0 by superadditivity of N p_N.
pub fn superadditivity_gap(
    spec: &ModelSpec,
    n1: usize,
    n2: usize,
    n_samples: usize,
    seed: u64,
    cap: usize,
) -> Result<PressureEstimate> {
    let sized1 = SizedModel::new(spec.clone(), n1)?;
    let sized2 = SizedModel::new(spec.clone(), n2)?;
    let sized = SizedModel::new(spec.clone(), n1 + n2)?;
    for s in 0..spec.species() {
        if sized1.sizes[s] + sized2.sizes[s] != sized.sizes[s] {
            return Err(Error::Precondition(format!(
                "species {s}: sizes {} + {} do not split {}; pick N_1, N_2 with \
                 integer alpha_s N",
                sized1.sizes[s], sized2.sizes[s], sized.sizes[s]
            )));
        }
    }
    let n = (n1 + n2) as f64;
    let h = spec.h.clone();
    let xs: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let base = derive_seed(seed, i as u64);
            let j = sample_couplings(&sized, derive_seed(base, 0));
            let j1 = sample_couplings(&sized1, derive_seed(base, 1));
            let j2 = sample_couplings(&sized2, derive_seed(base, 2));
            let lz = log_partition(&j, &sized, &h, cap)?;
            let lz1 = log_partition(&j1, &sized1, &h, cap)?;
            let lz2 = log_partition(&j2, &sized2, &h, cap)?;
            Ok((lz - lz1 - lz2) / n)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(PressureEstimate::from_samples(&xs))
}

/// Both sides of the K = 2 interpolation sum rule at a fixed trial overlap q:
/// lhs = p_RS(q) - p_N, rhs = 1/2 int_0^1 dt E <(q_N - q, D (q_N - q))>_t.
#[derive(Debug, Clone)]
pub struct SumRuleReport {
    pub lhs: f64,
    pub rhs: f64,
    /// Paired standard error of lhs - rhs (both sides share each disorder
    /// sample, so the difference is estimated directly).
    pub diff_std_error: f64,
    pub samples: usize,
    pub t_nodes: usize,
}

impl SumRuleReport {
    pub fn diff(&self) -> f64 {
        self.lhs - self.rhs
    }
}

/// Monte Carlo check of the sum rule. The interpolating Hamiltonian is
/// sqrt(t) H + sqrt(1-t) H^1 with H^1 an independent per-site Gaussian field
/// of variance Q_s(q); the t-integral uses `t_nodes` Gauss-Legendre nodes
/// with common disorder across nodes.
pub fn rs_sum_rule_check(
    spec: &ModelSpec,
    q: &RsTrial,
    n_total: usize,
    n_samples: usize,
    t_nodes: usize,
    seed: u64,
    rule: &QuadratureRule,
    cap: usize,
) -> Result<SumRuleReport> {
    let sized = SizedModel::new(spec.clone(), n_total)?;
    let s_count = spec.species();
    let p_rs = rs_pressure(spec, q, rule)?;
    let field_var = rs_field_variance(spec, q)?;
    let field_sd: Vec<f64> = field_var.iter().map(|v| v.sqrt()).collect();
    let d = effective_matrix(spec);
    let (gl_nodes, gl_weights) = gauss_legendre(t_nodes);
    let ts: Vec<f64> = gl_nodes.iter().map(|&x| (x + 1.0) / 2.0).collect();
    let tw: Vec<f64> = gl_weights.iter().map(|&w| w / 2.0).collect();
    let h = spec.h.clone();
    let n = sized.n_total as f64;

    let pairs: Vec<(f64, f64)> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let base = derive_seed(seed, i as u64);
            let j = sample_couplings(&sized, derive_seed(base, 0));
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(base, 1));
            let g: Vec<f64> = (0..sized.n_total)
                .map(|site| {
                    let s = sized.species_of(site);
                    field_sd[s] * rng.sample::<f64, _>(rand_distr::StandardNormal)
                })
                .collect();
            let lhs_i = p_rs - log_partition(&j, &sized, &h, cap)? / n;
            let a = interaction_matrix(&j, &sized);
            let base_fields = sized.site_fields();
            let mut rhs_i = 0.0;
            for (&t, &w) in ts.iter().zip(&tw) {
                let at = &a * t.sqrt();
                let root = (1.0 - t).sqrt();
                let bt: Vec<f64> = base_fields
                    .iter()
                    .zip(&g)
                    .map(|(&hf, &gi)| hf + root * gi)
                    .collect();
                let gibbs = GibbsState::from_log_weights(&at, &bt)?;
                let (m, mm) = gibbs.site_moments();
                // Two-replica overlap moments from single-replica moments.
                let mut omega1 = vec![0.0; s_count];
                let mut omega2 = vec![vec![0.0; s_count]; s_count];
                for s in 0..s_count {
                    let (o_s, n_s) = (sized.offsets[s], sized.sizes[s]);
                    for i1 in o_s..o_s + n_s {
                        omega1[s] += m[i1] * m[i1];
                    }
                    omega1[s] /= n_s as f64;
                    for p in 0..s_count {
                        let (o_p, n_p) = (sized.offsets[p], sized.sizes[p]);
                        let mut acc = 0.0;
                        for i1 in o_s..o_s + n_s {
                            for j1 in o_p..o_p + n_p {
                                let v = mm[(i1, j1)];
                                acc += v * v;
                            }
                        }
                        omega2[s][p] = acc / (n_s as f64 * n_p as f64);
                    }
                }
                let mut val = 0.0;
                for s in 0..s_count {
                    for p in 0..s_count {
                        val += d.d[(s, p)]
                            * (omega2[s][p] - q.0[s] * omega1[p] - q.0[p] * omega1[s]
                                + q.0[s] * q.0[p]);
                    }
                }
                rhs_i += w * val;
            }
            Ok((lhs_i, 0.5 * rhs_i))
        })
        .collect::<Result<Vec<_>>>()?;

    let lhs_est = PressureEstimate::from_samples(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    let rhs_est = PressureEstimate::from_samples(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
    let diffs: Vec<f64> = pairs.iter().map(|p| p.0 - p.1).collect();
    let diff_est = PressureEstimate::from_samples(&diffs);
    Ok(SumRuleReport {
        lhs: lhs_est.value,
        rhs: rhs_est.value,
        diff_std_error: diff_est.std_error,
        samples: n_samples,
        t_nodes,
    })
}

/// Monte Carlo estimate of the remainder p_RS(q_bar) - p_N at the solved
/// fixed point; nonnegative in expectation when D is PSD.
pub fn remainder_sign_check(
    spec: &ModelSpec,
    n_total: usize,
    n_samples: usize,
    seed: u64,
    rule: &QuadratureRule,
    cap: usize,
) -> Result<PressureEstimate> {
    let sized = SizedModel::new(spec.clone(), n_total)?;
    let rs = rs_solve(spec, rule, DEFAULT_FP_TOL)?;
    let p_n = quenched_pressure(&sized, n_samples, seed, cap)?;
    Ok(PressureEstimate {
        value: rs.pressure - p_n.value,
        std_error: p_n.std_error,
        samples: p_n.samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::DEFAULT_ENUM_CAP;

    fn reference_spec(beta: f64) -> ModelSpec {
        ModelSpec::new(
            vec![0.5, 0.5],
            vec![vec![1.0, 0.25], vec![0.25, 1.0]],
            vec![0.0, 0.0],
            beta,
        )
        .unwrap()
    }

    fn rule() -> QuadratureRule {
        QuadratureRule::default()
    }

    #[test]
    fn bound_chain_small_beta() {
        let spec = reference_spec(0.4);
        let report =
            bound_chain(&spec, 12, 2, 60, 11, &rule(), DEFAULT_ENUM_CAP).unwrap();
        assert!(report.d_psd);
        assert_eq!(report.holds(3.0, 1e-8), Some(true));
        // In the annealed region the deterministic bounds all coincide.
        let (a_rs, rs_rsb, _) = report.slacks();
        assert!(a_rs.abs() < 1e-6);
        assert!(rs_rsb.abs() < 1e-6);
    }

    #[test]
    fn bound_chain_low_temperature() {
        let spec = reference_spec(1.5);
        let report =
            bound_chain(&spec, 12, 2, 60, 13, &rule(), DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(report.holds(3.0, 1e-8), Some(true));
        // Past the ergodic region the RS bound sits strictly below annealed.
        let (a_rs, _, _) = report.slacks();
        assert!(a_rs > 1e-3);
    }

    #[test]
    fn bound_chain_refuses_non_psd() {
        let spec = ModelSpec::new(
            vec![0.5, 0.5],
            vec![vec![0.1, 1.0], vec![1.0, 0.1]],
            vec![0.0, 0.0],
            1.0,
        )
        .unwrap();
        let report =
            bound_chain(&spec, 10, 2, 20, 5, &rule(), DEFAULT_ENUM_CAP).unwrap();
        assert!(!report.d_psd);
        assert_eq!(report.holds(3.0, 1e-8), None);
    }

    #[test]
    fn superadditivity_zero_disorder_is_exact_zero() {
        let spec = ModelSpec::new(
            vec![0.5, 0.5],
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            vec![0.3, -0.2],
            1.0,
        )
        .unwrap();
        let gap = superadditivity_gap(&spec, 6, 6, 10, 7, DEFAULT_ENUM_CAP).unwrap();
        assert!(gap.value.abs() < 1e-12);
        assert!(gap.std_error < 1e-12);
    }

    #[test]
    fn superadditivity_gap_nonnegative() {
        let spec = reference_spec(1.0);
        let gap = superadditivity_gap(&spec, 6, 6, 200, 17, DEFAULT_ENUM_CAP).unwrap();
        assert!(
            gap.value >= -3.0 * gap.std_error,
            "gap {} +- {}",
            gap.value,
            gap.std_error
        );
    }

    #[test]
    fn superadditivity_rejects_bad_split() {
        // With alpha = (1/2, 1/2), two odd halves each round species 0 up,
        // overshooting the joint system's split.
        let spec = reference_spec(1.0);
        let err = superadditivity_gap(&spec, 5, 5, 10, 1, DEFAULT_ENUM_CAP);
        assert!(err.is_err());
    }

    #[test]
    fn sum_rule_zero_disorder() {
        // With no couplings and q = 0 both sides vanish identically.
        let spec = ModelSpec::new(
            vec![0.5, 0.5],
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            vec![0.4, 0.1],
            1.0,
        )
        .unwrap();
        let q = RsTrial::zeros(2);
        let report =
            rs_sum_rule_check(&spec, &q, 8, 12, 4, 3, &rule(), DEFAULT_ENUM_CAP).unwrap();
        assert!(report.lhs.abs() < 1e-12);
        assert!(report.rhs.abs() < 1e-12);
    }

    #[test]
    fn sum_rule_balances_at_moderate_size() {
        let spec = reference_spec(0.8);
        let q = RsTrial(vec![0.3, 0.5]);
        let report =
            rs_sum_rule_check(&spec, &q, 10, 160, 8, 29, &rule(), DEFAULT_ENUM_CAP).unwrap();
        assert!(
            report.diff().abs() <= 3.0 * report.diff_std_error,
            "lhs {} rhs {} se {}",
            report.lhs,
            report.rhs,
            report.diff_std_error
        );
        // The remainder itself is genuinely positive here.
        assert!(report.rhs > 0.0);
    }

    #[test]
    fn remainder_sign_small_system() {
        let spec = reference_spec(1.0);
        let est =
            remainder_sign_check(&spec, 12, 80, 41, &rule(), DEFAULT_ENUM_CAP).unwrap();
        assert!(
            est.value >= -3.0 * est.std_error,
            "remainder {} +- {}",
            est.value,
            est.std_error
        );
    }
}
