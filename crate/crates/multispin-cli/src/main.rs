//! Command-line front end: model configs in, CSV / JSON-lines results out.
//!
//! Exit codes: 0 = pass, 1 = usage or config error, 2 = scientific check
//! failed.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use multispin::annealed::{annealed_pressure, region_report};
use multispin::exact::{
    quenched_pressure, second_moment_ratio, second_moment_ratio_enumerated, DEFAULT_ENUM_CAP,
    DEFAULT_SECTOR_CAP,
};
use multispin::model::{ModelSpec, SizedModel};
use multispin::quadrature::QuadratureRule;
use multispin::rs::{
    rs_entropy, rs_pressure, rs_solve, rs_solve_multistart, RsTrial, DEFAULT_FP_TOL,
};
use multispin::rsb::{
    line_integral_numeric, line_integral_term, optimize_ziggurat, parisi_recursion,
    random_monotone_path, rsb_pressure, GridConfig, OptimizeOptions, ZigguratOrderParameter,
};
use multispin::verify::{bound_chain, remainder_sign_check, rs_sum_rule_check, superadditivity_gap};

#[derive(Parser)]
#[command(
    name = "multispin",
    about = "Pressure bounds for the multi-species mean-field spin glass",
    long_about = "Computes and cross-checks the hierarchy of pressure bounds for the \
multi-species mean-field spin glass: exact small-N quenched pressure, annealed bound \
with ergodic-region test, replica-symmetric bound, and the K-step RSB bound.\n\n\
Config files are JSON with keys \"alpha\" (array), \"delta2\" (array of arrays), \
\"h\" (array), \"beta\" (number, default 1).\n\n\
Exit codes: 0 pass, 1 usage/config error, 2 scientific check failed."
)]
struct Cli {
    /// Worker thread cap (default: all cores; MULTISPIN_THREADS honored when absent)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write output here instead of stdout
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Path to the JSON model config
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Full bound chain p_N <= p_RSB <= p_RS (<= p_A at h=0) on one model.
    /// CSV columns: spec_hash, seed, n, samples, k, p_exact, std_error,
    /// p_annealed, p_rs, p_rsb, d_psd, holds
    Bounds {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value_t = 400)]
        samples: usize,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        nodes: usize,
        /// Treat a non-PSD effective coupling matrix as a failure (exit 2)
        #[arg(long)]
        require_psd: bool,
    },
    /// RS fixed point, pressure and entropy.
    /// CSV columns: spec_hash, seed, beta, q_1..q_S, p_rs, s_rs, residual
    RsSolve {
        #[command(flatten)]
        config: ConfigArg,
        /// Override the config's beta
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_FP_TOL)]
        tol: f64,
        #[arg(long, default_value_t = 64)]
        nodes: usize,
        /// Extra random initializations beside the two canonical ones
        #[arg(long, default_value_t = 0)]
        starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Optimize the K-step RSB bound.
    /// JSON-lines keys: spec_hash, seed, k, q_path, m, p_rsb, p_rs, gap, grid_check
    RsbOptimize {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 64)]
        nodes: usize,
        /// Grid spacing for the grid-vs-exact Parisi consistency diagnostic
        #[arg(long, default_value_t = 0.02)]
        dy: f64,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Ergodic-region diagnostics over a beta grid.
    /// CSV columns: spec_hash, beta, det_d, min_eig_delta_hat, in_region
    RegionScan {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value_t = 0.1)]
        beta_min: f64,
        #[arg(long, default_value_t = 2.0)]
        beta_max: f64,
        #[arg(long, default_value_t = 20)]
        steps: usize,
    },
    /// Region predicate, RS solution, annealed pressure and entropy per beta.
    /// CSV columns: spec_hash, seed, beta, in_region, q_1..q_S, p_a, p_rs, s_rs
    Scan {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        beta_min: f64,
        #[arg(long)]
        beta_max: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 64)]
        nodes: usize,
        #[arg(long, default_value_t = DEFAULT_FP_TOL)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Monte Carlo identity checks: superadditivity, K=2 sum rule, remainder
    /// sign. JSON-lines keys: check, spec_hash, seed, values, status
    Verify {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value_t = 12)]
        n: usize,
        #[arg(long, default_value_t = 6)]
        n1: usize,
        #[arg(long, default_value_t = 6)]
        n2: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 8)]
        t_nodes: usize,
        /// Trial overlap for the sum rule, comma-separated (default: solved q)
        #[arg(long, value_delimiter = ',')]
        q: Option<Vec<f64>>,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        nodes: usize,
    },
    /// RS entropy over a beta grid, both routes.
    /// CSV columns: spec_hash, seed, beta, q_1..q_S, s_envelope, s_fd, route_gap
    EntropyScan {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value_t = 0.25)]
        beta_min: f64,
        #[arg(long, default_value_t = 8.0)]
        beta_max: f64,
        #[arg(long, default_value_t = 32)]
        steps: usize,
        #[arg(long, default_value_t = 64)]
        nodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fast self-check of the numerical machinery (< 60 s)
    Selftest {
        /// One JSON line per check instead of the table
        #[arg(long)]
        json: bool,
    },
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap's help/version go to stdout with success.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let threads = cli.threads.or_else(|| {
        std::env::var("MULTISPIN_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(t) = threads {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .is_err()
        {
            eprintln!("warning: thread pool already initialized; --threads ignored");
        }
    }

    let mut out: Box<dyn Write> = match &cli.output {
        Some(path) => match fs::File::create(path) {
            Ok(f) => Box::new(f),
            Err(e) => {
                eprintln!("error: cannot open output file {}: {e}", path.display());
                return 1;
            }
        },
        None => Box::new(std::io::stdout()),
    };

    match dispatch(cli.command, &mut out) {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Io(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

enum CliError {
    Usage(String),
    Io(std::io::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<multispin::Error> for CliError {
    fn from(e: multispin::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn load_spec(arg: &ConfigArg) -> Result<(ModelSpec, String), CliError> {
    let text = fs::read_to_string(&arg.config).map_err(|e| {
        CliError::Usage(format!("cannot read config {}: {e}", arg.config.display()))
    })?;
    let spec = ModelSpec::from_json(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", arg.config.display())))?;
    let hash = spec_hash(&spec);
    Ok((spec, hash))
}

/// Short hash of the canonical JSON serialization; embedded in every row.
fn spec_hash(spec: &ModelSpec) -> String {
    let mut hasher = Sha256::new();
    hasher.update(spec.to_json().as_bytes());
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn beta_grid(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>, CliError> {
    if !(lo > 0.0) || !(hi > lo) || steps < 2 {
        return Err(CliError::Usage(format!(
            "invalid beta range: need 0 < beta_min < beta_max and steps >= 2 \
             (got beta_min={lo}, beta_max={hi}, steps={steps})"
        )));
    }
    Ok((0..steps)
        .map(|i| lo + i as f64 * (hi - lo) / (steps - 1) as f64)
        .collect())
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32, CliError> {
    match cmd {
        Command::Bounds {
            config,
            n,
            samples,
            k,
            seed,
            nodes,
            require_psd,
        } => {
            let (spec, hash) = load_spec(&config)?;
            let rule = QuadratureRule::gauss_hermite(nodes);
            let report = bound_chain(&spec, n, k, samples, seed, &rule, DEFAULT_ENUM_CAP)?;
            let holds = report.holds(3.0, 1e-8);
            writeln!(
                out,
                "spec_hash,seed,n,samples,k,p_exact,std_error,p_annealed,p_rs,p_rsb,d_psd,holds"
            )?;
            writeln!(
                out,
                "{hash},{seed},{n},{samples},{k},{:?},{:?},{:?},{:?},{:?},{},{}",
                report.p_exact.value,
                report.p_exact.std_error,
                report.p_annealed,
                report.p_rs,
                report.p_rsb,
                report.d_psd,
                holds.map_or("skip".into(), |b| b.to_string()),
            )?;
            match holds {
                Some(true) => Ok(0),
                Some(false) => {
                    eprintln!("bound chain violated");
                    Ok(2)
                }
                None => {
                    if require_psd {
                        eprintln!(
                            "effective coupling matrix is not positive semi-definite: \
                             the bound theorems do not apply (--require-psd)"
                        );
                        Ok(2)
                    } else {
                        eprintln!("note: D not PSD; values reported without pass/fail");
                        Ok(0)
                    }
                }
            }
        }

        Command::RsSolve {
            config,
            beta,
            tol,
            nodes,
            starts,
            seed,
        } => {
            let (mut spec, _) = load_spec(&config)?;
            if let Some(b) = beta {
                if !(b > 0.0) {
                    return Err(CliError::Usage(format!("beta must be positive (got {b})")));
                }
                spec = spec.with_beta(b);
            }
            let hash = spec_hash(&spec);
            let rule = QuadratureRule::gauss_hermite(nodes);
            let sol = if starts > 0 {
                rs_solve_multistart(&spec, &rule, tol, starts, seed)?
                    .into_iter()
                    .min_by(|a, b| a.pressure.total_cmp(&b.pressure))
                    .expect("multistart returns at least one solution")
            } else {
                rs_solve(&spec, &rule, tol)?
            };
            let entropy = rs_entropy(&spec, &rule)?;
            let q_cols: Vec<String> = (1..=spec.species()).map(|i| format!("q_{i}")).collect();
            writeln!(out, "spec_hash,seed,beta,{},p_rs,s_rs,residual", q_cols.join(","))?;
            let qs: Vec<String> = sol.q.0.iter().map(|v| format!("{v:?}")).collect();
            writeln!(
                out,
                "{hash},{seed},{:?},{},{:?},{:?},{:?}",
                spec.beta,
                qs.join(","),
                sol.pressure,
                entropy.envelope,
                sol.residual,
            )?;
            Ok(0)
        }

        Command::RsbOptimize {
            config,
            k,
            nodes,
            dy,
            restarts,
            seed,
        } => {
            let (spec, hash) = load_spec(&config)?;
            if k < 1 {
                return Err(CliError::Usage("K must be >= 1".into()));
            }
            let rule = QuadratureRule::gauss_hermite(nodes);
            let opts = OptimizeOptions {
                restarts,
                ..OptimizeOptions::default()
            };
            let best = optimize_ziggurat(&spec, k, &rule, &opts, seed)?;
            let rs = rs_solve(&spec, &rule, DEFAULT_FP_TOL)?;
            // Grid-vs-exact consistency of the Parisi recursion at the optimum.
            let grid = GridConfig { dy };
            let mut grid_check: f64 = 0.0;
            for s in 0..spec.species() {
                let (sol, exact) = parisi_recursion(&spec, &best.zig, s, &rule, &grid)?;
                grid_check = grid_check.max((sol.grid_readout(spec.h[s]) - exact).abs());
            }
            let line = serde_json::json!({
                "spec_hash": hash,
                "seed": seed,
                "k": k,
                "q_path": best.zig.q_path,
                "m": best.zig.m,
                "p_rsb": best.pressure,
                "p_rs": rs.pressure,
                "gap": rs.pressure - best.pressure,
                "grid_check": grid_check,
            });
            writeln!(out, "{line}")?;
            Ok(0)
        }

        Command::RegionScan {
            config,
            beta_min,
            beta_max,
            steps,
        } => {
            let (spec, hash) = load_spec(&config)?;
            writeln!(out, "spec_hash,beta,det_d,min_eig_delta_hat,in_region")?;
            for beta in beta_grid(beta_min, beta_max, steps)? {
                let report = region_report(&spec.with_beta(beta));
                writeln!(
                    out,
                    "{hash},{beta:?},{:?},{},{}",
                    report.det_d,
                    report
                        .delta_hat_min_eig
                        .map_or("nan".into(), |e| format!("{e:?}")),
                    report.in_region,
                )?;
            }
            Ok(0)
        }

        Command::Scan {
            config,
            beta_min,
            beta_max,
            steps,
            nodes,
            tol,
            seed,
        } => {
            let (spec, hash) = load_spec(&config)?;
            let rule = QuadratureRule::gauss_hermite(nodes);
            let q_cols: Vec<String> = (1..=spec.species()).map(|i| format!("q_{i}")).collect();
            writeln!(
                out,
                "spec_hash,seed,beta,in_region,{},p_a,p_rs,s_rs",
                q_cols.join(",")
            )?;
            for beta in beta_grid(beta_min, beta_max, steps)? {
                let at = spec.with_beta(beta);
                let region = region_report(&at);
                let sol = rs_solve(&at, &rule, tol)?;
                let entropy = rs_entropy(&at, &rule)?;
                let p_a = annealed_pressure(&at)?;
                let qs: Vec<String> = sol.q.0.iter().map(|v| format!("{v:?}")).collect();
                writeln!(
                    out,
                    "{hash},{seed},{beta:?},{},{},{p_a:?},{:?},{:?}",
                    region.in_region,
                    qs.join(","),
                    sol.pressure,
                    entropy.envelope,
                )?;
            }
            Ok(0)
        }

        Command::Verify {
            config,
            n,
            n1,
            n2,
            samples,
            t_nodes,
            q,
            seed,
            nodes,
        } => {
            let (spec, hash) = load_spec(&config)?;
            let rule = QuadratureRule::gauss_hermite(nodes);
            let mut failed = false;

            let gap = superadditivity_gap(&spec, n1, n2, samples, seed, DEFAULT_ENUM_CAP)?;
            let gap_ok = gap.value >= -3.0 * gap.std_error;
            failed |= !gap_ok;
            writeln!(
                out,
                "{}",
                serde_json::json!({
                    "check": "superadditivity",
                    "spec_hash": hash, "seed": seed,
                    "n1": n1, "n2": n2, "samples": samples,
                    "gap": gap.value, "std_error": gap.std_error,
                    "status": if gap_ok { "pass" } else { "fail" },
                })
            )?;

            let q_trial = match q {
                Some(vals) => {
                    if vals.len() != spec.species() || vals.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                        return Err(CliError::Usage(format!(
                            "q must be {} comma-separated values in [0,1]",
                            spec.species()
                        )));
                    }
                    RsTrial(vals)
                }
                None => rs_solve(&spec, &rule, DEFAULT_FP_TOL)?.q,
            };
            let sum_rule =
                rs_sum_rule_check(&spec, &q_trial, n, samples, t_nodes, seed, &rule, DEFAULT_ENUM_CAP)?;
            let sum_ok = sum_rule.diff().abs() <= 3.0 * sum_rule.diff_std_error;
            failed |= !sum_ok;
            writeln!(
                out,
                "{}",
                serde_json::json!({
                    "check": "k2_sum_rule",
                    "spec_hash": hash, "seed": seed,
                    "n": n, "samples": samples, "t_nodes": t_nodes,
                    "q": q_trial.0,
                    "lhs": sum_rule.lhs, "rhs": sum_rule.rhs,
                    "diff_std_error": sum_rule.diff_std_error,
                    "status": if sum_ok { "pass" } else { "fail" },
                })
            )?;

            let remainder = remainder_sign_check(&spec, n, samples, seed, &rule, DEFAULT_ENUM_CAP)?;
            let rem_ok = remainder.value >= -3.0 * remainder.std_error;
            failed |= !rem_ok;
            writeln!(
                out,
                "{}",
                serde_json::json!({
                    "check": "rs_remainder_sign",
                    "spec_hash": hash, "seed": seed,
                    "n": n, "samples": samples,
                    "remainder": remainder.value, "std_error": remainder.std_error,
                    "status": if rem_ok { "pass" } else { "fail" },
                })
            )?;

            Ok(if failed { 2 } else { 0 })
        }

        Command::EntropyScan {
            config,
            beta_min,
            beta_max,
            steps,
            nodes,
            seed,
        } => {
            let (spec, hash) = load_spec(&config)?;
            let rule = QuadratureRule::gauss_hermite(nodes);
            let q_cols: Vec<String> = (1..=spec.species()).map(|i| format!("q_{i}")).collect();
            writeln!(
                out,
                "spec_hash,seed,beta,{},s_envelope,s_fd,route_gap",
                q_cols.join(",")
            )?;
            for beta in beta_grid(beta_min, beta_max, steps)? {
                let at = spec.with_beta(beta);
                let e = rs_entropy(&at, &rule)?;
                let qs: Vec<String> = e.q.0.iter().map(|v| format!("{v:?}")).collect();
                writeln!(
                    out,
                    "{hash},{seed},{beta:?},{},{:?},{:?},{:?}",
                    qs.join(","),
                    e.envelope,
                    e.finite_difference,
                    (e.envelope - e.finite_difference).abs(),
                )?;
            }
            Ok(0)
        }

        Command::Selftest { json } => selftest(json, out),
    }
}

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn selftest(json: bool, out: &mut dyn Write) -> Result<i32, CliError> {
    let spec = ModelSpec::new(
        vec![0.5, 0.5],
        vec![vec![1.0, 0.25], vec![0.25, 1.0]],
        vec![0.0, 0.0],
        1.0,
    )
    .expect("reference spec is valid");
    let rule = QuadratureRule::gauss_hermite(64);
    let mut checks: Vec<Check> = Vec::new();

    // Quadrature sanity.
    {
        let mean: f64 = rule.nodes.iter().zip(&rule.weights).map(|(&z, &w)| w * z).sum();
        let var: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&z, &w)| w * z * z)
            .sum();
        let pass = mean.abs() < 1e-10 && (var - 1.0).abs() < 1e-10;
        checks.push(Check {
            name: "quadrature_moments",
            pass,
            detail: format!("E[z] = {mean:.2e}, E[z^2]-1 = {:.2e}", var - 1.0),
        });
    }

    // Annealed exactness at small beta, reduced samples.
    {
        let warm = spec.with_beta(0.4);
        let sized = SizedModel::new(warm.clone(), 12).expect("sized");
        let p_n = quenched_pressure(&sized, 60, 7, DEFAULT_ENUM_CAP)?;
        let p_a = annealed_pressure(&warm)?;
        let pass = (p_n.value - p_a).abs() <= 0.03 + 3.0 * p_n.std_error;
        checks.push(Check {
            name: "annealed_exactness",
            pass,
            detail: format!("|p_N - p_A| = {:.2e}", (p_n.value - p_a).abs()),
        });
    }

    // RS <-> RSB reduction.
    {
        let mut worst: f64 = 0.0;
        for i in 0..5 {
            let t = 0.15 + 0.17 * i as f64;
            let q1 = vec![t, 1.0 - t * 0.5];
            let zig = ZigguratOrderParameter::new(
                vec![vec![0.0, 0.0], q1.clone(), vec![1.0, 1.0]],
                vec![0.0, 0.0, 1.0, 1.0],
            )
            .expect("valid ziggurat");
            let p_rsb = rsb_pressure(&spec, &zig, &rule)?;
            let p_rs = rs_pressure(&spec, &RsTrial(q1), &rule)?;
            worst = worst.max((p_rsb - p_rs).abs());
        }
        checks.push(Check {
            name: "rs_rsb_reduction",
            pass: worst < 1e-9,
            detail: format!("max |p_RSB - p_RS| = {worst:.2e}"),
        });
    }

    // Line-integral path independence.
    {
        use rand::SeedableRng;
        let zig = ZigguratOrderParameter::new(
            vec![vec![0.0, 0.0], vec![0.3, 0.6], vec![0.7, 0.8], vec![1.0, 1.0]],
            vec![0.0, 0.2, 0.6, 0.9, 1.0],
        )
        .expect("valid ziggurat");
        let closed = line_integral_term(&spec, &zig)?;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut worst: f64 = 0.0;
        for _ in 0..3 {
            let path = random_monotone_path(&zig, 3, &mut rng);
            worst = worst.max((line_integral_numeric(&spec, &zig, &path)? - closed).abs());
        }
        checks.push(Check {
            name: "line_integral_path_independence",
            pass: worst < 1e-8,
            detail: format!("max deviation = {worst:.2e}"),
        });
    }

    // SK threshold.
    {
        let sk = ModelSpec::new(vec![1.0], vec![vec![0.5]], vec![0.0], 1.0).expect("sk spec");
        let t = region_report(&sk).beta_threshold;
        let pass = t.map_or(false, |t| (t - 1.0).abs() < 1e-9);
        checks.push(Check {
            name: "sk_region_threshold",
            pass,
            detail: format!("threshold = {t:?}"),
        });
    }

    // Second-moment sector counting vs enumeration.
    {
        let warm = spec.with_beta(0.4);
        let sized = SizedModel::new(warm, 8).expect("sized");
        let a = second_moment_ratio(&sized, DEFAULT_SECTOR_CAP)?;
        let b = second_moment_ratio_enumerated(&sized, DEFAULT_ENUM_CAP)?;
        checks.push(Check {
            name: "second_moment_sector_vs_enum",
            pass: (a - b).abs() < 1e-10,
            detail: format!("gap = {:.2e}", (a - b).abs()),
        });
    }

    // Entropy route agreement at two betas.
    {
        let mut worst: f64 = 0.0;
        for &beta in &[0.5, 4.0] {
            let e = rs_entropy(&spec.with_beta(beta), &rule)?;
            worst = worst.max((e.envelope - e.finite_difference).abs());
        }
        checks.push(Check {
            name: "entropy_route_agreement",
            pass: worst < 1e-6,
            detail: format!("max route gap = {worst:.2e}"),
        });
    }

    let mut failed = false;
    for c in &checks {
        failed |= !c.pass;
        if json {
            writeln!(
                out,
                "{}",
                serde_json::json!({
                    "check": c.name,
                    "status": if c.pass { "pass" } else { "fail" },
                    "detail": c.detail,
                })
            )?;
        } else {
            writeln!(
                out,
                "{:<36} {}  {}",
                c.name,
                if c.pass { "PASS" } else { "FAIL" },
                c.detail
            )?;
        }
    }
    Ok(if failed { 2 } else { 0 })
}
