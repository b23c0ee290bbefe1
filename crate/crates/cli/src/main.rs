//! `dimwit`: certify dimension lower bounds for behaviour tables.
//!
//! Results go to stdout as JSON; a short human summary goes to stderr unless
//! `--quiet` is given. Exit status is 0 on success, 1 when the input violates a
//! constraint or a search/LP comes back negative, and 2 on usage or parse errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use dimwit::behaviour::{validate_bell, validate_pm, w_matrix, pm_matrix, bell_matrix, DEFAULT_VALIDATION_TOL};
use dimwit::constructions::{d_block, d_zero, l_star, ldb, p_epsilon, p_k, q_perturbation};
use dimwit::experiments::{
    density_restoration_experiment, negligibility_experiment, nonconvexity_report, DensityConfig,
    ExperimentScenario, NegligibilityConfig, VERSION,
};
use dimwit::io::{behaviour_to_value, parse_behaviour, parse_noise, parse_strategy, Strategy};
use dimwit::linalg::{rank, RankMethod};
use dimwit::noise::{apply_noise, rank_robustness_check, NoiseModel};
use dimwit::sampling::Seed;
use dimwit::search::{
    factorize_classical, membership_shared_randomness, separation_report, FactorizeOptions, LpMode,
    MembershipOptions, SearchStatus,
};
use dimwit::strategy::{message_dimension, simulate_bell, simulate_classical_pm, simulate_quantum_pm};
use dimwit::witness::{w_rank_relation, witness_bell, witness_pm, witness_w, WitnessOptions};
use dimwit::{Behaviour, Error, Scalar};

#[derive(Parser, Debug)]
#[command(name = "dimwit", version, about = "Rank-based dimension witnesses for prepare-and-measure and Bell behaviours")]
struct Cli {
    /// Suppress the human-readable summary on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    /// Relative singular-value tolerance for float ranks.
    #[arg(long, global = true, env = "DIMWIT_RANK_TOL")]
    rank_tol: Option<f64>,
    /// Rank arithmetic: exact for rational inputs (auto), or forced.
    #[arg(long, global = true, value_enum, default_value_t = RankModeArg::Auto)]
    rank_mode: RankModeArg,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum RankModeArg {
    Auto,
    Exact,
    Float,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check nonnegativity, normalization and (Bell) no-signaling.
    Validate {
        #[arg(long = "in")]
        input: PathBuf,
        /// Slack for float behaviours.
        #[arg(long, default_value_t = DEFAULT_VALIDATION_TOL)]
        tol: f64,
    },
    /// Rank of the behaviour matrix (or of W with --w).
    Rank {
        #[arg(long = "in")]
        input: PathBuf,
        /// Use the |Y| x |Y| matrix W (requires |X| = 2|Y|).
        #[arg(long)]
        w: bool,
    },
    /// Classical and quantum dimension lower bounds.
    Witness {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Write a built-in behaviour.
    Construct(ConstructArgs),
    /// Behaviour generated by a strategy file.
    Simulate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for a classical d-message model (heuristic).
    Factorize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        #[arg(long, default_value_t = 2000)]
        iterations: usize,
        #[arg(long, default_value_t = 1e-8)]
        acceptance: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Run restarts on one thread.
        #[arg(long)]
        sequential: bool,
    },
    /// LP test for a mixture of deterministic d-message strategies.
    Membership {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        d: usize,
        /// Rational simplex instead of floating point.
        #[arg(long)]
        exact: bool,
        #[arg(long, default_value_t = 1e-9)]
        lp_tol: f64,
        /// Largest number of responder maps 2^(d|Y|) to enumerate.
        #[arg(long, default_value_t = 1_000_000)]
        cap: u128,
    },
    /// Mix with noise and check rank robustness.
    Noise {
        #[arg(long = "in")]
        input: PathBuf,
        /// Comma-separated visibilities, parsed as exact decimals.
        #[arg(long, value_delimiter = ',', required = true)]
        eta: Vec<String>,
        /// Noise-table file; uniform noise when omitted.
        #[arg(long)]
        noise: Option<PathBuf>,
        /// Write the noisy behaviour (needs a single eta) instead of only the report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo and exact experiments.
    Experiment {
        #[command(subcommand)]
        which: Experiment,
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
enum Family {
    /// D_ij (0-based block indices --i, --j).
    DBlock,
    /// Output 0 always.
    DZero,
    /// Uniform mixture of D_00 .. D_(k-1)(k-1).
    #[value(name = "p_k")]
    PK,
    /// Full-rank perturbation Q.
    Q,
    /// (1 - eps) P + eps Q, with P read from --in or D_0.
    PEpsilon,
    /// Local deterministic behaviour with response functions --f, --g.
    Ldb,
    /// Local behaviour of maximal rank mn - m + 1.
    LStar,
}

#[derive(Args, Debug)]
struct ConstructArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Preparation inputs (PM) or inputs per party (Bell).
    #[arg(long)]
    m: usize,
    /// Measurement inputs (PM families).
    #[arg(long)]
    k: Option<usize>,
    /// Outputs per party (Bell families).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    i: Option<usize>,
    #[arg(long)]
    j: Option<usize>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long, value_delimiter = ',')]
    f: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    g: Vec<usize>,
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn required<T: Copy>(v: Option<T>, flag: &str, family: Family) -> Result<T, Failure> {
    v.ok_or_else(|| usage(format!("--{flag} is required for {}", family.to_possible_value().expect("named").get_name())))
}

fn construct(a: &ConstructArgs) -> Result<Behaviour, Failure> {
    let m = a.m;
    let k = || required(a.k, "k", a.family);
    let n = || required(a.n, "n", a.family);
    Ok(match a.family {
        Family::DBlock => {
            Behaviour::Pm(d_block(m, k()?, required(a.i, "i", a.family)?, required(a.j, "j", a.family)?)?)
        }
        Family::DZero => Behaviour::Pm(d_zero(m, k()?)?),
        Family::PK => Behaviour::Pm(p_k(m, k()?)?),
        Family::Q => Behaviour::Pm(q_perturbation(m, k()?)?),
        Family::PEpsilon => {
            let k = k()?;
            let eps = a.eps.as_deref().ok_or_else(|| usage("--eps is required for p_epsilon"))?;
            let base = match &a.input {
                Some(path) => match load_behaviour(path)? {
                    Behaviour::Pm(p) => p,
                    Behaviour::Bell(_) => return Err(usage("p_epsilon needs a prepare-and-measure behaviour")),
                },
                None => d_zero(m, k)?,
            };
            if base.scenario().n_inputs_a() != m || base.scenario().n_inputs_b() != k {
                return Err(usage(format!("input behaviour is not in the ({m}, {k}) scenario")));
            }
            Behaviour::Pm(p_epsilon(&base, &Scalar::parse_decimal(eps)?)?)
        }
        Family::Ldb => Behaviour::Bell(ldb(m, n()?, &a.f, &a.g)?),
        Family::LStar => Behaviour::Bell(l_star(m, n()?)?),
    })
}

#[derive(Args, Debug)]
struct NegligibilityArgs {
    /// Prepare-and-measure scenario (with --x, --y).
    #[arg(long, conflicts_with = "bell", required_unless_present = "bell")]
    pm: bool,
    /// Bell scenario (with --m, --outputs).
    #[arg(long)]
    bell: bool,
    #[arg(long, required_if_eq("pm", "true"))]
    x: Option<usize>,
    #[arg(long, required_if_eq("pm", "true"))]
    y: Option<usize>,
    #[arg(long, required_if_eq("bell", "true"))]
    m: Option<usize>,
    #[arg(long, required_if_eq("bell", "true"))]
    outputs: Option<usize>,
    /// Number of samples.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Behaviour files planted in front of the random samples.
    #[arg(long)]
    include: Vec<PathBuf>,
    #[arg(long)]
    sequential: bool,
}

#[derive(Subcommand, Debug)]
enum Experiment {
    /// Fraction of random behaviours with deficient rank.
    Negligibility(NegligibilityArgs),
    /// Perturb rank-deficient behaviours back to full rank within each delta.
    Density {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        k: usize,
        /// Comma-separated deltas (exact decimals); 1e-1 .. 1e-6 by default.
        #[arg(long, value_delimiter = ',')]
        deltas: Vec<String>,
        /// Behaviour files to perturb; D_0 when omitted.
        #[arg(long)]
        include: Vec<PathBuf>,
    },
    /// Maximal-rank local behaviour and the dimensions it shows non-convex.
    Nonconvexity {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
    },
    /// Shared-randomness separation for P_k.
    Separation {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: usize,
    },
}

/// Failure with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_)
            | Error::Structural(_)
            | Error::InvalidScenario(_)
            | Error::UnsupportedScenario(_)
            | Error::WrongMode(_)
            | Error::NonFinite { .. }
            | Error::Precondition(_) => 2,
            Error::InvalidBehaviour(_)
            | Error::InvalidStrategy(_)
            | Error::InvalidWeights(_)
            | Error::CapExceeded { .. }
            | Error::Solver(_) => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

/// What a command produced: JSON for stdout, a summary line, and the exit status.
struct Output {
    json: Value,
    summary: String,
    code: u8,
}

impl Output {
    fn ok(json: Value, summary: impl Into<String>) -> Output {
        Output { json, summary: summary.into(), code: 0 }
    }

    fn verdict(json: Value, summary: impl Into<String>, success: bool) -> Output {
        Output { json, summary: summary.into(), code: if success { 0 } else { 1 } }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, value: &Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("serializable") + "\n";
    fs::write(path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn load_behaviour(path: &Path) -> Result<Behaviour, Failure> {
    Ok(parse_behaviour(&read(path)?)?)
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn parse_etas(items: &[String]) -> Result<Vec<Scalar>, Failure> {
    items.iter().map(|s| Scalar::parse_decimal(s).map_err(Failure::from)).collect()
}

fn rank_method(cli: &Cli) -> Result<RankMethod, Failure> {
    if let Some(t) = cli.rank_tol {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(usage(format!("rank tolerance must be finite and >= 0, got {t}")));
        }
    }
    Ok(match cli.rank_mode {
        RankModeArg::Auto => RankMethod::Auto(cli.rank_tol),
        RankModeArg::Exact => RankMethod::Exact,
        RankModeArg::Float => RankMethod::Float(cli.rank_tol),
    })
}

fn rank_settings(method: RankMethod) -> Value {
    to_json(&dimwit::experiments::RankSettings::new(method))
}

fn run(cli: &Cli) -> Result<Output, Failure> {
    let method = rank_method(cli)?;
    match &cli.command {
        Command::Validate { input, tol } => {
            let beh = load_behaviour(input)?;
            let report = match &beh {
                Behaviour::Pm(p) => validate_pm(p, *tol),
                Behaviour::Bell(p) => validate_bell(p, *tol),
            };
            let valid = report.is_valid();
            let summary = if valid {
                "valid behaviour".to_string()
            } else {
                format!("{} violation(s): {}", report.violations.len(), report.messages().join("; "))
            };
            let json = json!({
                "valid": valid,
                "violations": to_json(&report.violations),
                "messages": report.messages(),
                "tolerance": tol,
            });
            Ok(Output::verdict(json, summary, valid))
        }
        Command::Rank { input, w } => {
            let beh = load_behaviour(input)?;
            let (matrix, name) = match (&beh, w) {
                (Behaviour::Pm(p), true) => (w_matrix(p)?, "w"),
                (Behaviour::Pm(p), false) => (pm_matrix(p), "pm"),
                (Behaviour::Bell(p), false) => (bell_matrix(p), "bell"),
                (Behaviour::Bell(_), true) => return Err(usage("--w applies to prepare-and-measure behaviours only")),
            };
            let r = rank(&matrix, method)?;
            let summary = format!("rank {} ({:?} mode, {}x{} {name} matrix)", r.rank, r.mode, matrix.rows(), matrix.cols());
            let json = json!({
                "matrix": name,
                "rows": matrix.rows(),
                "cols": matrix.cols(),
                "result": to_json(&r),
                "rank_settings": rank_settings(method),
            });
            Ok(Output::ok(json, summary))
        }
        Command::Witness { input } => {
            let beh = load_behaviour(input)?;
            let opts = WitnessOptions { rank: method, validation_tol: DEFAULT_VALIDATION_TOL };
            let (main, extra) = match &beh {
                Behaviour::Pm(p) => {
                    let v = witness_pm(p, &opts)?;
                    let extra = match witness_w(p, &opts) {
                        Ok(w) => json!({
                            "w_verdict": to_json(&w),
                            "w_rank_relation": to_json(&w_rank_relation(p, method)?),
                        }),
                        Err(Error::UnsupportedScenario(_)) => json!({"w_verdict": null}),
                        Err(e) => return Err(e.into()),
                    };
                    (v, extra)
                }
                Behaviour::Bell(p) => (witness_bell(p, &opts)?, json!({})),
            };
            let mut json = to_json(&main);
            if let (Value::Object(obj), Value::Object(more)) = (&mut json, extra) {
                obj.extend(more);
                obj.insert("version".into(), json!(VERSION));
                obj.insert("rank_settings".into(), rank_settings(method));
            }
            let classical = main.classical_lb.map_or("n/a".to_string(), |c| c.to_string());
            let summary = format!(
                "rank {} ({:?}): classical dimension >= {classical}, quantum dimension >= {}{}",
                main.rank,
                main.mode,
                main.quantum_lb.unwrap_or(0),
                if main.certified { "" } else { " (float rank, not a certificate)" }
            );
            Ok(Output::ok(json, summary))
        }
        Command::Construct(args) => emit_behaviour(&construct(args)?, args.out.as_deref(), "constructed"),
        Command::Simulate { input, out } => {
            let st = parse_strategy(&read(input)?)?;
            let (beh, info) = match &st {
                Strategy::ClassicalPm(s) => {
                    (Behaviour::Pm(simulate_classical_pm(s, s.scenario())?), format!("classical, d = {}", s.d()))
                }
                Strategy::QuantumPm(s) => {
                    let support = message_dimension(s.states())?;
                    (
                        Behaviour::Pm(simulate_quantum_pm(s, s.scenario())?),
                        format!("quantum, d = {}, joint state support {support}", s.d()),
                    )
                }
                Strategy::Bell(s) => {
                    let (ra, rb) = s.reduced_support_ranks();
                    (
                        Behaviour::Bell(simulate_bell(s, s.scenario())?),
                        format!("bipartite, local dimensions {} x {}, reduced supports {ra} x {rb}", s.d_a(), s.d_b()),
                    )
                }
            };
            emit_behaviour(&beh, out.as_deref(), &format!("simulated ({info})"))
        }
        Command::Factorize { input, d, restarts, iterations, acceptance, seed, sequential } => {
            let Behaviour::Pm(beh) = load_behaviour(input)? else {
                return Err(usage("factorize needs a prepare-and-measure behaviour"));
            };
            let opts = FactorizeOptions {
                restarts: *restarts,
                iterations: *iterations,
                acceptance: *acceptance,
                seed: Seed(*seed),
                parallel: !sequential,
            };
            let res = factorize_classical(&beh, *d, &opts)?;
            let found = res.status == SearchStatus::Found;
            let json = json!({
                "status": to_json(&res.status),
                "d": d,
                "residual": res.residual,
                "iterations": res.iterations,
                "restarts": res.restarts,
                "best_restart": res.best_restart,
                "exact_verified": res.exact_verified,
                "acceptance": acceptance,
                "seed": seed,
                "model": res.model.map(|m| dimwit::io::strategy_to_value(&Strategy::ClassicalPm(m))),
            });
            let summary = if found {
                format!("found a {d}-message classical model (residual {:.1e})", res.residual)
            } else {
                format!(
                    "no {d}-message model found (best residual {:.1e}); this is not a proof of impossibility",
                    res.residual
                )
            };
            Ok(Output::verdict(json, summary, found))
        }
        Command::Membership { input, d, exact, lp_tol, cap } => {
            let Behaviour::Pm(beh) = load_behaviour(input)? else {
                return Err(usage("membership needs a prepare-and-measure behaviour"));
            };
            let opts = MembershipOptions {
                mode: if *exact { LpMode::Exact } else { LpMode::Float },
                lp_tolerance: *lp_tol,
                cap: *cap,
            };
            let cert = membership_shared_randomness(&beh, *d, &opts)?;
            let summary = match &cert.weights {
                Some(w) => format!("mixture of {} deterministic {d}-message strategies", w.len()),
                None => format!("not a mixture of deterministic {d}-message strategies"),
            };
            Ok(Output::verdict(to_json(&cert), summary, cert.feasible))
        }
        Command::Noise { input, eta, noise, out } => {
            let beh = load_behaviour(input)?;
            let etas = parse_etas(eta)?;
            let model = match noise {
                Some(path) => parse_noise(&read(path)?)?,
                None => match &beh {
                    Behaviour::Pm(p) => NoiseModel::uniform_pm(p.scenario().n_inputs_b()),
                    Behaviour::Bell(p) => NoiseModel::uniform_bell(p.scenario().m(), p.scenario().n()),
                },
            };
            if let Some(path) = out {
                if etas.len() != 1 {
                    return Err(usage("--out needs exactly one eta"));
                }
                write(path, &behaviour_to_value(&apply_noise(&beh, &model, &etas[0])?))?;
            }
            let report = rank_robustness_check(&beh, &model, &etas, method)?;
            let ranks: Vec<String> = report.rows.iter().map(|r| format!("{}: {}", r.eta, r.rank)).collect();
            let summary = format!(
                "base rank {}; noisy ranks {}; claim ({}) {}",
                report.base_rank,
                ranks.join(", "),
                report.claim,
                if report.all_hold { "holds" } else { "FAILS" }
            );
            let mut json = to_json(&report);
            if let Value::Object(obj) = &mut json {
                obj.insert("version".into(), json!(VERSION));
                obj.insert("rank_settings".into(), rank_settings(method));
            }
            Ok(Output::verdict(json, summary, report.all_hold))
        }
        Command::Experiment { which, out } => {
            let output = run_experiment(which, method)?;
            if let Some(path) = out {
                write(path, &output.json)?;
            }
            Ok(output)
        }
    }
}

fn emit_behaviour(beh: &Behaviour, out: Option<&Path>, what: &str) -> Result<Output, Failure> {
    let json = behaviour_to_value(beh);
    let summary = match out {
        Some(path) => {
            write(path, &json)?;
            format!("{what} behaviour written to {}", path.display())
        }
        None => format!("{what} behaviour"),
    };
    Ok(Output::ok(json, summary))
}

fn run_experiment(which: &Experiment, method: RankMethod) -> Result<Output, Failure> {
    match which {
        Experiment::Negligibility(a) => {
            let scenario = if a.bell {
                ExperimentScenario::Bell { m: a.m.ok_or_else(|| usage("--m is required"))?, n: a.outputs.ok_or_else(|| usage("--outputs is required"))? }
            } else {
                ExperimentScenario::Pm {
                    n_inputs_a: a.x.ok_or_else(|| usage("--x is required"))?,
                    n_inputs_b: a.y.ok_or_else(|| usage("--y is required"))?,
                }
            };
            let include = a.include.iter().map(|p| load_behaviour(p)).collect::<Result<Vec<_>, _>>()?;
            let cfg = NegligibilityConfig {
                scenario,
                samples: a.n,
                seed: Seed(a.seed),
                rank: method,
                include,
                parallel: !a.sequential,
            };
            let rep = negligibility_experiment(&cfg)?;
            let summary = format!(
                "{} of {} samples rank-deficient ({} planted); {}",
                rep.deficient, rep.samples, rep.planted, rep.note
            );
            Ok(Output::ok(to_json(&rep), summary))
        }
        Experiment::Density { m, k, deltas, include } => {
            let mut cfg = DensityConfig::standard(*m, *k);
            cfg.rank = method;
            if !deltas.is_empty() {
                cfg.deltas = parse_etas(deltas)?;
            }
            for path in include {
                match load_behaviour(path)? {
                    Behaviour::Pm(p) => cfg.behaviours.push(p),
                    Behaviour::Bell(_) => return Err(usage("density restoration needs prepare-and-measure behaviours")),
                }
            }
            let rep = density_restoration_experiment(&cfg)?;
            let summary = format!(
                "{} case(s), {} delta value(s): {}",
                rep.cases.len(),
                cfg.deltas.len(),
                if rep.all_succeeded { "full rank restored every time" } else { "some deltas FAILED" }
            );
            Ok(Output::verdict(to_json(&rep), summary, rep.all_succeeded))
        }
        Experiment::Nonconvexity { m, n } => {
            let rep = nonconvexity_report(*m, *n)?;
            let summary = format!("rank {}; {}", rep.rank, rep.note);
            Ok(Output::ok(to_json(&rep), summary))
        }
        Experiment::Separation { k, m } => {
            let rep = separation_report(*k, *m)?;
            let mut json = to_json(&rep);
            if let Value::Object(obj) = &mut json {
                obj.insert("version".into(), json!(VERSION));
            }
            let summary = format!(
                "P_{k}: classical dimension >= {}, quantum >= {}, two-message shared-randomness mixture {}",
                rep.classical_lb,
                rep.quantum_lb,
                if rep.certificate.feasible { "found" } else { "NOT found" }
            );
            Ok(Output::verdict(json, summary, rep.certificate.feasible && rep.reconstructs_exactly))
        }
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn print_json(value: &Value) {
    use std::io::Write;
    let text = serde_json::to_string_pretty(value).expect("serializable");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            print_json(&out.json);
            if !cli.quiet {
                eprintln!("{}", out.summary);
            }
            ExitCode::from(out.code)
        }
        Err(f) => {
            print_json(&json!({"error": f.message}));
            if !cli.quiet {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
