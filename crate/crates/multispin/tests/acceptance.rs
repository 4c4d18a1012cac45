//! End-to-end acceptance checks. Each test prints one PASS/FAIL line; run
//! with `cargo test --test acceptance -- --nocapture` to see them.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use multispin::annealed::{annealed_pressure, region_report, second_moment_gaussian_bound};
use multispin::exact::{
    quenched_pressure, second_moment_ratio, second_moment_ratio_enumerated, DEFAULT_ENUM_CAP,
    DEFAULT_SECTOR_CAP,
};
use multispin::model::{ModelSpec, SizedModel};
use multispin::quadrature::{gaussian_expectation, QuadratureRule};
use multispin::rs::{
    rs_entropy, rs_fixed_point, rs_pressure, rs_solve, RsTrial, DEFAULT_FP_MAX_ITER,
    DEFAULT_FP_TOL,
};
use multispin::rsb::{
    line_integral_numeric, line_integral_term, optimize_ziggurat, parisi_readout,
    random_monotone_path, rsb_pressure, transformed_levels, OptimizeOptions,
    ZigguratOrderParameter,
};
use multispin::verify::{rs_sum_rule_check, superadditivity_gap};

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
    QuadratureRule::gauss_hermite(64)
}

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {id:2} [{name}]: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {id} [{name}] failed: {detail}");
}

#[test]
fn criterion_01_annealed_exactness_in_region() {
    let spec = reference_spec(0.4);
    assert!(region_report(&spec).in_region);
    let sized = SizedModel::new(spec.clone(), 16).unwrap();
    let p_n = quenched_pressure(&sized, 400, 0xACC1, DEFAULT_ENUM_CAP).unwrap();
    let p_a = annealed_pressure(&spec).unwrap();
    let gap = (p_n.value - p_a).abs();
    let tol = 0.02 + 3.0 * p_n.std_error;
    report(
        1,
        "annealed exactness",
        gap <= tol,
        &format!("|p_N - p_A| = {gap:.3e} <= {tol:.3e}"),
    );
}

#[test]
fn criterion_02_bound_chain() {
    let r = rule();
    let opts = OptimizeOptions {
        restarts: 6,
        max_iter: 1000,
        search_nodes: 24,
    };
    let mut detail = String::new();
    let mut pass = true;
    for &beta in &[0.4, 1.0, 2.0] {
        let spec = reference_spec(beta);
        let sized = SizedModel::new(spec.clone(), 16).unwrap();
        let p_n = quenched_pressure(&sized, 400, 0xACC2, DEFAULT_ENUM_CAP).unwrap();
        let rs = rs_solve(&spec, &r, DEFAULT_FP_TOL).unwrap();
        let rsb = optimize_ziggurat(&spec, 3, &r, &opts, 0xACC2).unwrap();
        let chain_ok = p_n.value <= rsb.pressure + 3.0 * p_n.std_error
            && rsb.pressure <= rs.pressure + 1e-8;
        let mut opt_ok = true;
        let mut rng = ChaCha8Rng::seed_from_u64(0xACC2 + beta.to_bits());
        for _ in 0..20 {
            let q = RsTrial(vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]);
            if rs.pressure > rs_pressure(&spec, &q, &r).unwrap() + 1e-10 {
                opt_ok = false;
            }
        }
        pass &= chain_ok && opt_ok;
        detail.push_str(&format!(
            "beta={beta}: p_N={:.6}+-{:.1e} p_RSB={:.6} p_RS={:.6}; ",
            p_n.value, p_n.std_error, rsb.pressure, rs.pressure
        ));
    }
    report(2, "bound chain", pass, &detail);
}

#[test]
fn criterion_03_rs_rsb_reduction() {
    let spec = reference_spec(1.0);
    let r = rule();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC3);
    let mut worst: f64 = 0.0;
    for _ in 0..30 {
        let q1 = vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
        let zig = ZigguratOrderParameter::new(
            vec![vec![0.0, 0.0], q1.clone(), vec![1.0, 1.0]],
            vec![0.0, 0.0, 1.0, 1.0],
        )
        .unwrap();
        let p_rsb = rsb_pressure(&spec, &zig, &r).unwrap();
        let p_rs = rs_pressure(&spec, &RsTrial(q1), &r).unwrap();
        worst = worst.max((p_rsb - p_rs).abs());
    }
    report(
        3,
        "RS <-> RSB reduction",
        worst < 1e-9,
        &format!("max |p_RSB - p_RS| = {worst:.3e} over 30 random q_1"),
    );
}

#[test]
fn criterion_04_parisi_analytic_cases() {
    let spec = ModelSpec::new(
        vec![0.5, 0.5],
        vec![vec![1.0, 0.25], vec![0.25, 1.0]],
        vec![0.4, -0.7],
        1.0,
    )
    .unwrap();
    let r = rule();
    let ln_cosh = |y: f64| y.abs() + (-2.0 * y.abs()).exp().ln_1p() - std::f64::consts::LN_2;

    // x = 1: one step carrying all the mass at q_0 = 0.
    let all_mass = ZigguratOrderParameter::new(
        vec![vec![0.0, 0.0], vec![0.5, 0.3], vec![1.0, 1.0]],
        vec![0.0, 1.0, 1.0, 1.0],
    )
    .unwrap();
    let tl = transformed_levels(&spec, &all_mass).unwrap();
    let mut worst_a: f64 = 0.0;
    for s in 0..2 {
        let f = parisi_readout(&spec, &all_mass, s, &r).unwrap();
        let expect = ln_cosh(spec.h[s]) + tl.levels[s][2] / 2.0;
        worst_a = worst_a.max((f - expect).abs());
    }

    // Zero increments: identical q-levels make every step the identity.
    let flat_spec = ModelSpec::new(
        vec![0.5, 0.5],
        vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        vec![0.4, -0.7],
        1.0,
    )
    .unwrap();
    let zig = ZigguratOrderParameter::new(
        vec![vec![0.0, 0.0], vec![0.5, 0.3], vec![1.0, 1.0]],
        vec![0.0, 0.3, 0.8, 1.0],
    )
    .unwrap();
    let mut worst_b: f64 = 0.0;
    for s in 0..2 {
        let f = parisi_readout(&flat_spec, &zig, s, &r).unwrap();
        worst_b = worst_b.max((f - ln_cosh(flat_spec.h[s])).abs());
    }
    report(
        4,
        "Parisi analytic cases",
        worst_a < 1e-8 && worst_b < 1e-14,
        &format!("x==1 error {worst_a:.3e}; zero-increment error {worst_b:.3e}"),
    );
}

#[test]
fn criterion_05_line_integral_path_independence() {
    let spec = reference_spec(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC5);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        // Random K=4 ziggurat.
        let mut q_path = vec![vec![0.0, 0.0]];
        for _ in 1..4 {
            let prev = q_path.last().unwrap().clone();
            q_path.push(vec![
                prev[0] + rng.gen_range(0.0..1.0) * (1.0 - prev[0]),
                prev[1] + rng.gen_range(0.0..1.0) * (1.0 - prev[1]),
            ]);
        }
        q_path.push(vec![1.0, 1.0]);
        let mut interior: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..1.0)).collect();
        interior.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut m = vec![0.0];
        m.extend(interior);
        m.push(1.0);
        let zig = ZigguratOrderParameter::new(q_path, m).unwrap();
        let closed = line_integral_term(&spec, &zig).unwrap();
        for _ in 0..5 {
            let path = random_monotone_path(&zig, 4, &mut rng);
            let numeric = line_integral_numeric(&spec, &zig, &path).unwrap();
            worst = worst.max((numeric - closed).abs());
        }
    }
    report(
        5,
        "line-integral path independence",
        worst < 1e-8,
        &format!("max |numeric - closed| = {worst:.3e}"),
    );
}

#[test]
fn criterion_06_rs_entropy_negativity_scan() {
    let r = rule();
    let betas: Vec<f64> = (0..32).map(|i| 0.25 + i as f64 * (8.0 - 0.25) / 31.0).collect();
    let mut first_negative = None;
    let mut worst_route_gap: f64 = 0.0;
    let mut monotone_sign_ok = true;
    let mut s_start = f64::NAN;
    for &beta in &betas {
        let spec = reference_spec(beta);
        let e = rs_entropy(&spec, &r).unwrap();
        worst_route_gap = worst_route_gap.max((e.envelope - e.finite_difference).abs());
        if beta == betas[0] {
            s_start = e.envelope;
        }
        if e.envelope < 0.0 && first_negative.is_none() {
            first_negative = Some(beta);
        }
        if let Some(_) = first_negative {
            if e.envelope >= 0.0 {
                monotone_sign_ok = false;
            }
        }
    }
    let pass = s_start > 0.0
        && first_negative.map_or(false, |b| b < 8.0)
        && monotone_sign_ok
        && worst_route_gap < 1e-6;
    report(
        6,
        "RS entropy negativity",
        pass,
        &format!(
            "s(0.25) = {s_start:.4}, first negative at beta = {:?}, max route gap = {worst_route_gap:.3e}",
            first_negative
        ),
    );
}

#[test]
fn criterion_07_sk_cross_check() {
    let r = rule();
    // Delta^2 = 1/2 so the effective variance is beta^2 / 2.
    let sk = |beta: f64| ModelSpec::new(vec![1.0], vec![vec![0.5]], vec![0.0], beta).unwrap();

    let warm = sk(0.9);
    let fp = rs_fixed_point(&warm, &r, &RsTrial::ones(1), DEFAULT_FP_TOL, DEFAULT_FP_MAX_ITER)
        .unwrap();
    let trivial_ok = fp.q.0[0].abs() < 1e-8 && fp.residual < 1e-10;

    let cold = sk(1.2);
    let fp2 = rs_fixed_point(&cold, &r, &RsTrial::ones(1), DEFAULT_FP_TOL, DEFAULT_FP_MAX_ITER)
        .unwrap();
    // Independent scalar bisection on q = E tanh^2(beta sqrt(q) z).
    let g = |q: f64| {
        let a = 1.2 * q.max(0.0).sqrt();
        gaussian_expectation(&r, |z| (a * z).tanh().powi(2)) - q
    };
    let (mut lo, mut hi) = (1e-12, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let oracle = 0.5 * (lo + hi);
    let positive_ok = fp2.q.0[0] > 0.0 && (fp2.q.0[0] - oracle).abs() < 1e-10;

    let threshold = region_report(&sk(2.0)).beta_threshold.unwrap();
    let threshold_ok = (threshold - 1.0).abs() < 1e-9;
    report(
        7,
        "SK cross-check",
        trivial_ok && positive_ok && threshold_ok,
        &format!(
            "q(0.9) = {:.2e}, q(1.2) = {:.12} vs oracle {:.12}, threshold = {threshold:.12}",
            fp.q.0[0], fp2.q.0[0], oracle
        ),
    );
}

#[test]
fn criterion_08_k2_sum_rule() {
    let spec = reference_spec(1.0);
    let q = RsTrial(vec![0.3, 0.5]);
    let r = rule();
    let rep = rs_sum_rule_check(&spec, &q, 12, 300, 8, 0xACC8, &r, DEFAULT_ENUM_CAP).unwrap();
    let balanced = rep.diff().abs() <= 3.0 * rep.diff_std_error;
    let rep4 = rs_sum_rule_check(&spec, &q, 12, 1200, 8, 0xACC8, &r, DEFAULT_ENUM_CAP).unwrap();
    // Quadrupling the sample count should halve the SE within 25%.
    let ratio = rep4.diff_std_error / rep.diff_std_error;
    let scaling_ok = (ratio - 0.5).abs() <= 0.125;
    report(
        8,
        "K=2 sum rule",
        balanced && scaling_ok,
        &format!(
            "lhs = {:.6}, rhs = {:.6}, diff = {:.2e} (SE {:.2e}); SE ratio 1200/300 = {ratio:.3}",
            rep.lhs,
            rep.rhs,
            rep.diff(),
            rep.diff_std_error
        ),
    );
}

#[test]
fn criterion_09_superadditivity() {
    let mut pass = true;
    let mut detail = String::new();
    for &beta in &[0.5, 1.5] {
        let spec = reference_spec(beta);
        let gap = superadditivity_gap(&spec, 8, 8, 400, 0xACC9, DEFAULT_ENUM_CAP).unwrap();
        pass &= gap.value >= -3.0 * gap.std_error;
        detail.push_str(&format!(
            "beta={beta}: gap = {:.4e} +- {:.2e}; ",
            gap.value, gap.std_error
        ));
    }
    report(9, "superadditivity", pass, &detail);
}

#[test]
fn criterion_10_second_moment_machinery() {
    let spec = reference_spec(0.4);
    assert!(region_report(&spec).in_region);
    let sized12 = SizedModel::new(spec.clone(), 12).unwrap();
    let by_sector = second_moment_ratio(&sized12, DEFAULT_SECTOR_CAP).unwrap();
    let by_enum = second_moment_ratio_enumerated(&sized12, DEFAULT_ENUM_CAP).unwrap();
    let agree = (by_sector - by_enum).abs() < 1e-10;
    let (bound, _) = second_moment_gaussian_bound(&spec).unwrap();
    let mut below = true;
    let mut detail = format!("N=12 sector vs enum gap = {:.2e}; ", by_sector - by_enum);
    for &n in &[8usize, 12, 16, 20] {
        let sized = SizedModel::new(spec.clone(), n).unwrap();
        let ratio = second_moment_ratio(&sized, DEFAULT_SECTOR_CAP).unwrap();
        below &= ratio <= bound;
        detail.push_str(&format!("N={n}: {ratio:.6} "));
    }
    detail.push_str(&format!("<= bound {bound:.6}"));
    report(10, "second-moment machinery", agree && below, &detail);
}

#[test]
fn criterion_11_determinism() {
    let spec = reference_spec(1.0);
    let r = rule();
    let sized = SizedModel::new(spec.clone(), 12).unwrap();

    let a1 = quenched_pressure(&sized, 50, 0xACCB, DEFAULT_ENUM_CAP).unwrap();
    let a2 = quenched_pressure(&sized, 50, 0xACCB, DEFAULT_ENUM_CAP).unwrap();
    let q = RsTrial(vec![0.3, 0.5]);
    let b1 = rs_sum_rule_check(&spec, &q, 10, 30, 4, 0xACCB, &r, DEFAULT_ENUM_CAP).unwrap();
    let b2 = rs_sum_rule_check(&spec, &q, 10, 30, 4, 0xACCB, &r, DEFAULT_ENUM_CAP).unwrap();
    let c1 = superadditivity_gap(&spec, 6, 6, 30, 0xACCB, DEFAULT_ENUM_CAP).unwrap();
    let c2 = superadditivity_gap(&spec, 6, 6, 30, 0xACCB, DEFAULT_ENUM_CAP).unwrap();
    let opts = OptimizeOptions {
        restarts: 3,
        max_iter: 200,
        search_nodes: 16,
    };
    let d1 = optimize_ziggurat(&spec, 2, &r, &opts, 0xACCB).unwrap();
    let d2 = optimize_ziggurat(&spec, 2, &r, &opts, 0xACCB).unwrap();

    let pass = format!("{a1:?}") == format!("{a2:?}")
        && format!("{:?} {:?} {:?}", b1.lhs, b1.rhs, b1.diff_std_error)
            == format!("{:?} {:?} {:?}", b2.lhs, b2.rhs, b2.diff_std_error)
        && format!("{c1:?}") == format!("{c2:?}")
        && format!("{:?} {:?}", d1.pressure, d1.zig) == format!("{:?} {:?}", d2.pressure, d2.zig);
    report(
        11,
        "determinism",
        pass,
        "byte-identical repeat runs for pressure, sum rule, superadditivity, optimizer",
    );
}
