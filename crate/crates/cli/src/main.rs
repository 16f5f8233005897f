use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use qrobust::boolfn::BooleanFunction;
use qrobust::harness::{self, Backend, ExperimentConfig, ExperimentKind, InputDist};
use qrobust::lp::{approx_degree, robust_degree_multilinear, SearchStatus};
use qrobust::noisysim::NoisyOracleSet;
use qrobust::poly::{exact_multilinear, PolyExpr};
use qrobust::qsearch::{
    cross_validate_backends, grover_robust, robustified_query, run_backend, ContractFinder, RobustFindParams,
    StatevectorFinder,
};
use qrobust::robustness::{check_type2_grid, check_type2_vertex, estimate_type1, type2_to_type1, PerturbationSpec, Type1Options};
use qrobust::scalar::parse_rational;
use qrobust::{MultilinearPolyQ, Rational};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "qrobust", version, about = "Noisy-oracle recovery, robust polynomials and search simulation")]
struct Cli {
    /// TOML experiment config (experiment subcommands only); flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for CSV/JSON/text outputs.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Exit with status 2 when a threshold check fails.
    #[arg(long, global = true)]
    assert: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Recover min(t, |x|) ones of noisy inputs.
    Recover(RecoverArgs),
    /// Run one search backend (or both) on a fixed input and check its guarantees.
    RobustFind(FindArgs),
    /// Approximate or multilinear robust degree by exact LP.
    Degree(DegreeArgs),
    /// Check a polynomial for robustness against a named function.
    CheckPoly(CheckArgs),
    /// Classical repetition baseline for parity.
    Baseline(BaselineArgs),
    /// Grover over robustified queries versus closed forms.
    StatevectorValidate(SvArgs),
    /// Compute a function on many instances at once.
    DirectSum(DirectSumArgs),
    /// Evaluate a symmetric function from few found ones and zeros.
    Symmetric(SymmetricArgs),
}

#[derive(Args, Clone)]
struct ExpArgs {
    /// Input sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    /// contract, adversarial or statevector.
    #[arg(long)]
    backend: Option<Backend>,
    /// Majority copies per query for the statevector backend.
    #[arg(long)]
    r: Option<usize>,
    /// Draw inputs with a uniform random weight instead of i.i.d. bits.
    #[arg(long)]
    random_weight: bool,
    #[arg(long)]
    density: Option<f64>,
    /// Required success rate per grid point.
    #[arg(long)]
    min_success: Option<f64>,
    /// Required range of the fitted cost exponent, as LO,HI.
    #[arg(long, value_delimiter = ',')]
    slope_range: Vec<f64>,
    #[arg(long)]
    allow_large_eps: bool,
}

#[derive(Args)]
struct RecoverArgs {
    #[command(flatten)]
    exp: ExpArgs,
    /// Targets, comma separated (default t = n).
    #[arg(long, value_delimiter = ',')]
    t: Vec<usize>,
}

#[derive(Args)]
struct SymmetricArgs {
    #[command(flatten)]
    exp: ExpArgs,
    /// or, and, majority, parity, threshold_k.
    #[arg(long)]
    function: Option<String>,
    #[arg(long)]
    confidence: Option<f64>,
}

#[derive(Args)]
struct BaselineArgs {
    #[command(flatten)]
    exp: ExpArgs,
    #[arg(long)]
    target: Option<f64>,
    /// Constant in the repetition schedule.
    #[arg(long)]
    c: Option<f64>,
    /// Fixed reads per bit instead of the schedule.
    #[arg(long)]
    reads: Option<usize>,
}

#[derive(Args)]
struct DirectSumArgs {
    #[command(flatten)]
    exp: ExpArgs,
    /// Inner function g.
    #[arg(long)]
    function: Option<String>,
    #[arg(long)]
    arity: Option<usize>,
    #[arg(long)]
    inner_cost: Option<u64>,
    #[arg(long)]
    inner_error: Option<f64>,
    #[arg(long)]
    wrap_target: Option<f64>,
}

#[derive(Args)]
struct FindArgs {
    /// contract, statevector or both.
    #[arg(long, default_value = "both")]
    backend: String,
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    weight: usize,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 200)]
    trials: u64,
    #[arg(long)]
    r: Option<usize>,
}

#[derive(Args)]
struct DegreeArgs {
    #[arg(long)]
    function: String,
    #[arg(long)]
    n: usize,
    /// Approximation error, e.g. 1/3.
    #[arg(long, default_value = "1/3")]
    epsilon: String,
    /// Perturbation size; searches multilinear robust degree when given.
    #[arg(long)]
    robust: Option<String>,
    #[arg(long)]
    d_max: Option<usize>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    function: String,
    #[arg(long)]
    n: usize,
    /// Polynomial text, lines like `3/2 * x0*x1`; `;` also separates terms.
    #[arg(long, allow_hyphen_values = true)]
    poly: Option<String>,
    #[arg(long)]
    poly_file: Option<PathBuf>,
    /// Use the exact multilinear representation of the function.
    #[arg(long)]
    exact: bool,
    /// Perturbation size.
    #[arg(long, default_value = "1/3")]
    eps: String,
    /// vertex (exact), grid (sampled), or type1 (convert to copies, estimate at eps/2).
    #[arg(long, default_value = "vertex")]
    mode: String,
    #[arg(long, default_value_t = 5)]
    points: usize,
    #[arg(long, default_value_t = 2000)]
    trials: u64,
}

#[derive(Args)]
struct SvArgs {
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    weight: usize,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    #[arg(long, default_value_t = 9)]
    r: usize,
    #[arg(long, default_value_t = 10_000)]
    shots: u64,
    /// Copy counts for the distance sweep.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1usize, 5, 9, 13])]
    rs: Vec<usize>,
    /// Allowed gap between noisy and noiseless success.
    #[arg(long, default_value_t = 0.05)]
    tolerance: f64,
}

fn main() -> ExitCode {
    // usage errors exit 1 so that 2 always means a failed check
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(&cli) {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            for f in &failures {
                eprintln!("check failed: {f}");
            }
            if cli.assert {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// Runs the subcommand and returns its threshold failures.
fn dispatch(cli: &Cli) -> Result<Vec<String>> {
    let seed = cli.seed.unwrap_or(0);
    match &cli.cmd {
        Cmd::Recover(a) => {
            let mut cfg = base_config(cli, ExperimentKind::Recover, &a.exp)?;
            if !a.t.is_empty() {
                cfg.t = a.t.clone();
            }
            experiment(cli, cfg)
        }
        Cmd::Symmetric(a) => {
            let mut cfg = base_config(cli, ExperimentKind::Symmetric, &a.exp)?;
            set(&mut cfg.function, a.function.clone());
            set(&mut cfg.confidence, a.confidence);
            experiment(cli, cfg)
        }
        Cmd::Baseline(a) => {
            let mut cfg = base_config(cli, ExperimentKind::Baseline, &a.exp)?;
            set(&mut cfg.target, a.target);
            set(&mut cfg.baseline_c, a.c);
            if a.reads.is_some() {
                cfg.baseline_r = a.reads;
            }
            experiment(cli, cfg)
        }
        Cmd::DirectSum(a) => {
            let mut cfg = base_config(cli, ExperimentKind::DirectSum, &a.exp)?;
            set(&mut cfg.function, a.function.clone());
            set(&mut cfg.inner_arity, a.arity);
            set(&mut cfg.inner_cost, a.inner_cost);
            set(&mut cfg.inner_error, a.inner_error);
            set(&mut cfg.wrap_target, a.wrap_target);
            experiment(cli, cfg)
        }
        Cmd::RobustFind(a) => robust_find(cli, a, seed),
        Cmd::Degree(a) => degree(cli, a),
        Cmd::CheckPoly(a) => check_poly(cli, a, seed),
        Cmd::StatevectorValidate(a) => statevector_validate(cli, a, seed),
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn base_config(cli: &Cli, kind: ExperimentKind, a: &ExpArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ExperimentConfig::from_toml(&text)?
        }
        None => ExperimentConfig::default(),
    };
    cfg.kind = kind;
    if !a.n.is_empty() {
        cfg.n = a.n.clone();
    }
    set(&mut cfg.eps, a.eps);
    set(&mut cfg.trials, a.trials);
    set(&mut cfg.backend, a.backend);
    set(&mut cfg.seed, cli.seed);
    set(&mut cfg.density, a.density);
    set(&mut cfg.min_success, a.min_success);
    if a.r.is_some() {
        cfg.statevector_r = a.r;
    }
    if a.random_weight {
        cfg.input = InputDist::RandomWeight;
    }
    if a.allow_large_eps {
        cfg.knobs.allow_large_eps = true;
    }
    match a.slope_range[..] {
        [] => {}
        [lo, hi] if lo <= hi => cfg.slope_range = Some((lo, hi)),
        _ => bail!("--slope-range takes LO,HI with LO <= HI"),
    }
    Ok(cfg)
}

fn experiment(cli: &Cli, cfg: ExperimentConfig) -> Result<Vec<String>> {
    let report = harness::run(&cfg, cli.workers)?;
    println!("{:>8} {:>8} {:>8} {:>10} {:>18} {:>14}", "n", "t", "trials", "success", "95% CI", "mean cost");
    for p in &report.points {
        println!(
            "{:>8} {:>8} {:>8} {:>10.4} {:>8.4}..{:<8.4} {:>14.1}",
            p.n, p.t, p.totals.trials, p.success_rate, p.success_ci.0, p.success_ci.1, p.mean_cost
        );
    }
    for (label, fit) in [("n", &report.fit_n), ("t", &report.fit_t)] {
        if let Some(f) = fit {
            println!("cost exponent vs {label}: {:.4} (stderr {:.4}, R^2 {:.5})", f.slope, f.stderr, f.r_squared);
        }
    }
    if let Some(dir) = &cli.out {
        report.write(dir).with_context(|| format!("writing {}", dir.display()))?;
    }
    Ok(report.failures())
}

fn write_out(cli: &Cli, name: &str, body: &str) -> Result<()> {
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir)?;
        fs::write(Path::new(dir).join(name), body)?;
    }
    Ok(())
}

fn rational(s: &str) -> Result<Rational> {
    parse_rational(s).with_context(|| format!("not a rational number: {s:?}"))
}

fn robust_find(cli: &Cli, a: &FindArgs, seed: u64) -> Result<Vec<String>> {
    if a.weight > a.n {
        bail!("weight exceeds n");
    }
    let params = RobustFindParams::new(a.eps, a.beta, a.gamma, a.delta)?;
    let x: Vec<bool> = (0..a.n).map(|i| i < a.weight).collect();
    let set = NoisyOracleSet::bernoulli(x, a.eps)?;
    let stats = match a.backend.as_str() {
        "contract" => vec![run_backend(&ContractFinder::default(), &set, &params, a.trials, seed)?],
        "statevector" => vec![run_backend(&StatevectorFinder::new(a.r), &set, &params, a.trials, seed)?],
        "both" => {
            let rep = cross_validate_backends(a.n, a.weight, a.eps, &params, a.trials, seed)?;
            vec![rep.contract, rep.statevector]
        }
        other => bail!("unknown backend {other:?} (contract, statevector or both)"),
    };
    let json = serde_json::to_string_pretty(&stats)?;
    println!("{json}");
    write_out(cli, "robust_find.json", &json)?;
    let mut failures = Vec::new();
    for s in &stats {
        if !s.miss_bound_ok {
            failures.push(format!("{}: miss rate exceeds delta", s.backend));
        }
        if !s.false_index_bound_ok {
            failures.push(format!("{}: false-index rate exceeds gamma", s.backend));
        }
    }
    Ok(failures)
}

fn degree(cli: &Cli, a: &DegreeArgs) -> Result<Vec<String>> {
    let f = BooleanFunction::named(&a.function, a.n)?;
    let err = rational(&a.epsilon)?;
    let res = match &a.robust {
        None => approx_degree(&f, &err)?,
        Some(e) => robust_degree_multilinear(&f, &rational(e)?, &err, a.d_max)?,
    };
    let record = res.to_record();
    print!("{record}");
    write_out(cli, "degree.txt", &record)?;
    Ok(match res.status {
        SearchStatus::Found => Vec::new(),
        _ => vec![format!("no feasible degree found for {} on {} bits", a.function, a.n)],
    })
}

fn load_poly(a: &CheckArgs, f: &BooleanFunction) -> Result<MultilinearPolyQ> {
    if a.exact {
        return Ok(exact_multilinear(f)?);
    }
    let text = match (&a.poly, &a.poly_file) {
        (Some(t), _) => t.replace(';', "\n"),
        (None, Some(p)) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        (None, None) => bail!("give --poly, --poly-file or --exact"),
    };
    Ok(MultilinearPolyQ::parse_text(a.n, &text)?)
}

fn check_poly(cli: &Cli, a: &CheckArgs, seed: u64) -> Result<Vec<String>> {
    let f = BooleanFunction::named(&a.function, a.n)?;
    let p = load_poly(a, &f)?;
    let eps = rational(&a.eps)?;
    let record = match a.mode.as_str() {
        "vertex" => {
            let third = parse_rational("1/3").expect("literal");
            check_type2_vertex(&p, &f, &eps, &third)?.to_record()
        }
        "grid" => {
            let q = PolyExpr::from_multilinear(p).to_f64();
            check_type2_grid(&q, &f, &rational_f64(&eps), a.points, &1e-9)?.to_record()
        }
        "type1" => {
            let e = rational_f64(&eps);
            let (q, m) = type2_to_type1(&PolyExpr::from_multilinear(p.to_f64()), e, a.n)?;
            let noise = PerturbationSpec::new(e / 2.0, m)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let opts = Type1Options { trials: a.trials, ..Type1Options::default() };
            let rep = estimate_type1(&q, &f, &noise, opts, &mut rng)?;
            format!("copies = {m}\nestimated_at = {}\n{}", e / 2.0, rep.to_record())
        }
        other => bail!("unknown mode {other:?} (vertex, grid or type1)"),
    };
    print!("{record}");
    write_out(cli, "check_poly.txt", &record)?;
    Ok(if record.starts_with("verdict = PASS") || record.contains("\nverdict = PASS") {
        Vec::new()
    } else {
        vec![format!("{} check failed", a.mode)]
    })
}

fn rational_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

fn statevector_validate(cli: &Cli, a: &SvArgs, seed: u64) -> Result<Vec<String>> {
    if a.weight > a.n {
        bail!("weight exceeds n");
    }
    let x: Vec<bool> = (0..a.n).map(|i| i < a.weight).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clean = grover_robust(&x, 0.0, 1, 1, &mut rng)?;
    let noisy = grover_robust(&x, a.eps, a.r, a.shots, &mut rng)?;
    let distances = a.rs.iter().map(|&r| robustified_query(&x, a.eps, r, 1)).collect::<qrobust::Result<Vec<_>>>()?;
    println!("noiseless success probability: {:.6}", clean.success_probability);
    println!(
        "eps={} r={}: success probability {:.6}, empirical {:.4} over {} shots",
        a.eps,
        a.r,
        noisy.success_probability,
        noisy.empirical_success(),
        a.shots
    );
    for d in &distances {
        println!("r={:>3}: ||U - U~|| = {:.6} (leakage part {:.6})", d.r, d.full, d.leakage);
    }
    let body = serde_json::to_string_pretty(&serde_json::json!({
        "noiseless": clean,
        "noisy": noisy,
        "distances": distances,
    }))?;
    write_out(cli, "statevector.json", &body)?;
    if let Some(dir) = &cli.out {
        fs::write(dir.join("histogram.csv"), noisy.histogram_csv())?;
    }
    let mut failures = Vec::new();
    let gap = (noisy.empirical_success() - clean.success_probability).abs();
    if gap > a.tolerance {
        failures.push(format!("noisy success differs from noiseless by {gap:.4} > {}", a.tolerance));
    }
    if distances.windows(2).any(|w| w[1].full >= w[0].full) {
        failures.push("operator distance is not decreasing in r".into());
    }
    Ok(failures)
}
