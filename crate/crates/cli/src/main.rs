//! `dsg`: command-line front end for hidden stochastic game analysis.
//!
//! Every command reads a JSON game file, writes a JSON report (to `--output`
//! or stdout) that embeds the full run configuration, and exits with 0 on
//! success, 1 when the input fails a check, 2 when a cap or convergence
//! budget is exhausted.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use dsg_core::abstraction::{build_abstract_with, StateMerge};
use dsg_core::belief::exact_nstage_value;
use dsg_core::coupling::{doeblin_reset_probability, simulate_coupling, CouplingOptions};
use dsg_core::fixtures::{named_fixture, FIXTURE_NAMES};
use dsg_core::format::{game_to_json, read_game, GameFile};
use dsg_core::game::validate_game;
use dsg_core::matrix::Matrix;
use dsg_core::pipeline::{approximate_uniform_value, compute_parameters, PipelineCaps};
use dsg_core::solver::{discounted_value, shapley_nstage, uniform_value_estimate, UniformOptions};
use dsg_core::stochastic::from_revealing;
use dsg_core::structure::{
    birkhoff_coefficient, derive_certificate, ergodic_certificate, ergodicity_coefficient, max_coefficient,
    minimal_uniform_length, primitive_certificate, CertificateOptions, CoefficientKind, DoeblinCertificate,
    PatternKind,
};
use dsg_core::{Error, Game64, Strategy};

#[derive(Parser, Debug)]
#[command(name = "dsg", version, about = "Doeblin hidden stochastic games: certificates, abstraction, values")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Common {
    /// Report path; written atomically. Defaults to stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Cap on materialized abstract states.
    #[arg(long, global = true, env = "DSG_STATE_CAP", default_value_t = 200_000)]
    state_cap: usize,
    /// Cap on enumerated products, histories and belief-tree nodes.
    #[arg(long, global = true, env = "DSG_ENUM_CAP", default_value_t = 1_000_000)]
    enum_cap: usize,
    /// Solver agreement tolerance.
    #[arg(long, global = true, default_value_t = 1e-6)]
    tol: f64,
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Progress messages on stderr (repeat for more).
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
enum Command {
    /// Check a game file for well-formedness.
    Validate { input: PathBuf },
    /// τ_e / τ_p of every letter matrix, and optionally their maxima over products.
    Coefficients {
        input: PathBuf,
        /// Also report the maximum over all products of this length.
        #[arg(long)]
        length: Option<usize>,
    },
    /// Smallest length at which every product is scrambling (ergodic) or positive (primitive).
    Check {
        input: PathBuf,
        #[arg(long, value_enum)]
        kind: CheckKind,
        /// Largest length tried (default 3^K for ergodic, 2^K for primitive).
        #[arg(long)]
        bound: Option<usize>,
    },
    /// Derive a Doeblin certificate (m_ε, δ_ε).
    Certificate {
        input: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, value_enum, default_value_t = CertKind::Auto)]
        kind: CertKind,
        /// Use the exact minimum row sum instead of its lower bound.
        #[arg(long)]
        exact_mu: bool,
    },
    /// Build the abstract game for a given recall and report its size.
    BuildAbstract {
        input: PathBuf,
        #[arg(long)]
        eta: usize,
        #[arg(long, value_enum, default_value_t = Merge::Structural)]
        merge: Merge,
        /// Also write the abstract game as an observed-state game file.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// n-stage value from the initial belief (exact belief tree, or the abstract game with --eta).
    SolveNstage {
        input: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        eta: Option<usize>,
    },
    /// Uniform-value estimate of a state-revealing game, or of its abstract game with --eta.
    SolveUniform {
        input: PathBuf,
        #[arg(long)]
        eta: Option<usize>,
        /// Also report the discounted value at this weight.
        #[arg(long)]
        discount: Option<f64>,
        /// Write the solver trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Certificate → (ω_ε, η_ε) → abstract game → uniform value.
    Pipeline {
        input: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        eta_override: Option<usize>,
        /// Certificate JSON (as printed by `certificate`) to use instead of deriving one.
        #[arg(long)]
        certificate: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Merge::Belief)]
        merge: Merge,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Monte Carlo coupling of the game and its abstract game.
    SimulateCoupling {
        input: PathBuf,
        #[arg(long)]
        epsilon: f64,
        /// Block length; must be a multiple of m_ε.
        #[arg(long)]
        eta: usize,
        /// Sub-block length (default: from the derived certificate).
        #[arg(long)]
        m_eps: Option<usize>,
        #[arg(long, default_value_t = 10_000)]
        episodes: usize,
        #[arg(long, default_value_t = 4)]
        blocks: usize,
        /// Player 1's abstract-game strategy: `uniform` or `constant:p1,p2,...`.
        #[arg(long, default_value = "uniform")]
        sigma: String,
        /// Player 2's strategy: `uniform` or `constant:p1,p2,...`.
        #[arg(long, default_value = "uniform")]
        tau: String,
        /// Per-stage trace CSV for the first --trace-episodes episodes.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        trace_episodes: usize,
        /// Also estimate the reset probability with this many strategy pairs.
        #[arg(long)]
        reset_pairs: Option<usize>,
        #[arg(long, default_value_t = 2000)]
        reset_samples: usize,
    },
    /// Write built-in games as game files.
    Fixtures {
        /// Fixture name, or `all`.
        #[arg(long, default_value = "all")]
        name: String,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
enum CheckKind {
    Ergodic,
    Primitive,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
enum CertKind {
    Auto,
    Ergodic,
    Primitive,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Merge {
    Structural,
    Belief,
}

impl From<Merge> for StateMerge {
    fn from(m: Merge) -> Self {
        match m {
            Merge::Structural => StateMerge::Structural,
            Merge::Belief => StateMerge::Belief,
        }
    }
}

/// A command outcome: the result object and whether the input passed.
struct Outcome {
    result: Value,
    passed: bool,
}

impl Outcome {
    fn ok(result: Value) -> Self {
        Self { result, passed: true }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::CapExceeded { .. }
        | Error::NoConvergence { .. }
        | Error::NumericalFailure(_)
        | Error::CertificateUnderflow { .. } => 2,
        _ => 1,
    }
}

fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn parse_strategy(text: &str, n_actions: usize) -> dsg_core::Result<Strategy<f64>> {
    if text == "uniform" {
        return Ok(Strategy::Uniform);
    }
    let body = text
        .strip_prefix("constant:")
        .ok_or_else(|| Error::InvalidArgument(format!("unknown strategy `{text}`")))?;
    let mix = body
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::InvalidArgument(format!("strategy `{text}`: {e}")))?;
    if mix.len() != n_actions {
        return Err(Error::InvalidArgument(format!(
            "strategy `{text}` has {} weights for {n_actions} actions",
            mix.len()
        )));
    }
    Ok(Strategy::constant(mix))
}

fn check_epsilon(eps: f64) -> dsg_core::Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("--epsilon must lie in (0, 1), got {eps}")))
    }
}

fn cert_options(c: &Common, exact_mu: bool) -> CertificateOptions {
    CertificateOptions {
        enum_cap: c.enum_cap,
        exact_mu,
    }
}

fn coefficient_table(spec: &Game64) -> Vec<Value> {
    spec.letters()
        .map(|(i, j, s)| {
            let m: &Matrix<f64> = spec.matrix(i, j, s);
            json!({
                "a1": spec.actions1()[i],
                "a2": spec.actions2()[j],
                "signal": spec.signals()[s],
                "tau_e": ergodicity_coefficient(m).ok(),
                "tau_p": birkhoff_coefficient(m),
            })
        })
        .collect()
}

fn run(cmd: &Command, c: &Common) -> dsg_core::Result<Outcome> {
    let log = |level: u8, msg: &str| {
        if c.verbose >= level {
            eprintln!("dsg: {msg}");
        }
    };
    match cmd {
        Command::Validate { input } => {
            let spec: Game64 = read_game(input)?;
            let report = validate_game(&spec);
            Ok(Outcome {
                passed: report.is_valid(),
                result: json!({
                    "valid": report.is_valid(),
                    "violations": report.violations,
                    "states": spec.num_states(),
                    "actions1": spec.num_actions1(),
                    "actions2": spec.num_actions2(),
                    "signals": spec.num_signals(),
                    "blind": spec.is_blind(),
                }),
            })
        }
        Command::Coefficients { input, length } => {
            let spec: Game64 = read_game(input)?;
            let mut result = json!({ "letters": coefficient_table(&spec) });
            if let Some(m) = *length {
                log(1, &format!("maximizing over products of length {m}"));
                let tau_p: f64 = max_coefficient(&spec, m, CoefficientKind::TauP, c.enum_cap)?;
                let tau_e = if spec.is_blind() {
                    Some(max_coefficient(&spec, m, CoefficientKind::TauE, c.enum_cap)?)
                } else {
                    None
                };
                result["products"] = json!({ "length": m, "max_tau_e": tau_e, "max_tau_p": tau_p });
            }
            Ok(Outcome::ok(result))
        }
        Command::Check { input, kind, bound } => {
            let spec: Game64 = read_game(input)?;
            let pattern = match kind {
                CheckKind::Ergodic => PatternKind::Scrambling,
                CheckKind::Primitive => PatternKind::Positive,
            };
            let m_star = minimal_uniform_length(&spec, pattern, *bound)?;
            Ok(Outcome {
                passed: m_star.is_some(),
                result: json!({ "kind": kind, "m_star": m_star, "holds": m_star.is_some() }),
            })
        }
        Command::Certificate {
            input,
            epsilon,
            kind,
            exact_mu,
        } => {
            check_epsilon(*epsilon)?;
            let spec: Game64 = read_game(input)?;
            let opts = cert_options(c, *exact_mu);
            let cert = match kind {
                CertKind::Auto => derive_certificate(&spec, *epsilon, &opts)?,
                CertKind::Ergodic => ergodic_certificate(&spec, *epsilon, &opts)?,
                CertKind::Primitive => primitive_certificate(&spec, *epsilon, &opts)?,
            };
            let params = compute_parameters(*epsilon, cert.m_eps, cert.delta_eps, spec.num_states())?;
            Ok(Outcome::ok(json!({ "certificate": cert, "parameters": params })))
        }
        Command::BuildAbstract { input, eta, merge, dump } => {
            let spec: Game64 = read_game(input)?;
            let ag = build_abstract_with(&spec, spec.initial_belief(), *eta, c.state_cap, (*merge).into())?;
            log(1, &format!("{} abstract states", ag.num_states()));
            if let Some(path) = dump {
                let text = serde_json::to_string_pretty(&GameFile::from_stochastic(&ag.game))?;
                write_atomic(path, &text)?;
            }
            Ok(Outcome::ok(json!({ "eta": eta, "merge": merge, "stats": ag.stats() })))
        }
        Command::SolveNstage { input, n, eta } => {
            let spec: Game64 = read_game(input)?;
            let (value, method) = match eta {
                None => (exact_nstage_value(&spec, spec.initial_belief(), *n, c.enum_cap)?, "belief_tree"),
                Some(h) => {
                    let ag = build_abstract_with(&spec, spec.initial_belief(), *h, c.state_cap, StateMerge::Belief)?;
                    (shapley_nstage(&ag.game, *n)?.values[ag.initial()], "abstract_game")
                }
            };
            Ok(Outcome::ok(json!({ "n": n, "value": value, "method": method })))
        }
        Command::SolveUniform {
            input,
            eta,
            discount,
            trace,
        } => {
            let spec: Game64 = read_game(input)?;
            let (game, method) = match eta {
                None => (from_revealing(&spec)?, "revealing"),
                Some(h) => (
                    build_abstract_with(&spec, spec.initial_belief(), *h, c.state_cap, StateMerge::Belief)?.game,
                    "abstract_game",
                ),
            };
            let opts = UniformOptions {
                tol: c.tol,
                ..UniformOptions::default()
            };
            let est = uniform_value_estimate(&game, &opts)?;
            if let Some(path) = trace {
                write_atomic(path, &est.trace_csv())?;
            }
            let discounted = discount
                .map(|l| discounted_value(&game, l, c.tol).map(|v| v.values[game.initial()]))
                .transpose()?;
            Ok(Outcome::ok(json!({
                "method": method,
                "value": est.value,
                "discounted_value": discounted,
                "estimate": est,
            })))
        }
        Command::Pipeline {
            input,
            epsilon,
            eta_override,
            certificate,
            merge,
            trace,
        } => {
            check_epsilon(*epsilon)?;
            let spec: Game64 = read_game(input)?;
            let cert = certificate
                .as_ref()
                .map(|p| -> dsg_core::Result<DoeblinCertificate> {
                    Ok(serde_json::from_str(&std::fs::read_to_string(p)?)?)
                })
                .transpose()?;
            let caps = PipelineCaps {
                state_cap: c.state_cap,
                enum_cap: c.enum_cap,
                merge: (*merge).into(),
            };
            let opts = UniformOptions {
                tol: c.tol,
                ..UniformOptions::default()
            };
            let report = approximate_uniform_value(&spec, *epsilon, cert, &caps, *eta_override, &opts)?;
            if let Some(path) = trace {
                write_atomic(path, &report.diagnostics.trace_csv())?;
            }
            Ok(Outcome::ok(serde_json::to_value(&report)?))
        }
        Command::SimulateCoupling {
            input,
            epsilon,
            eta,
            m_eps,
            episodes,
            blocks,
            sigma,
            tau,
            trace,
            trace_episodes,
            reset_pairs,
            reset_samples,
        } => {
            check_epsilon(*epsilon)?;
            let spec: Game64 = read_game(input)?;
            let (m_eps, certificate) = match m_eps {
                Some(m) => (*m, None),
                None => {
                    let cert = derive_certificate(&spec, *epsilon, &cert_options(c, false))?;
                    (cert.m_eps as usize, Some(cert))
                }
            };
            let sigma = parse_strategy(sigma, spec.num_actions1())?;
            let tau = parse_strategy(tau, spec.num_actions2())?;
            let opts = CouplingOptions {
                episodes: *episodes,
                blocks: *blocks,
                seed: c.seed,
                trace_episodes: if trace.is_some() { *trace_episodes } else { 0 },
            };
            log(1, &format!("simulating {episodes} episodes of {blocks} blocks"));
            let report = simulate_coupling(&spec, spec.initial_belief(), *eta, m_eps, *epsilon, &sigma, &tau, &opts)?;
            if let Some(path) = trace {
                write_atomic(path, &report.trace_csv())?;
            }
            let mut result = json!({ "coupling": report, "certificate": certificate });
            if let Some(cert) = &certificate {
                let params = compute_parameters(*epsilon, cert.m_eps, cert.delta_eps, spec.num_states())?;
                if params.omega_eps.is_finite() && params.omega_eps < usize::MAX as f64 {
                    let omega = params.omega_eps as usize;
                    let (p, se) = report.tail_probability(omega);
                    result["t_ell_tail"] = json!({
                        "omega": omega,
                        "probability": p,
                        "stderr": se,
                        "bound": (1.0 - cert.delta_eps * cert.delta_eps).powf(params.omega_eps),
                    });
                }
            }
            if let Some(pairs) = reset_pairs {
                let w = doeblin_reset_probability(&spec, m_eps, *epsilon, *pairs, *reset_samples, c.seed)?;
                result["reset_witness"] = serde_json::to_value(&w)?;
            }
            Ok(Outcome::ok(result))
        }
        Command::Fixtures { name, out_dir } => {
            let names: Vec<&str> = if name == "all" {
                FIXTURE_NAMES.to_vec()
            } else {
                vec![name.as_str()]
            };
            std::fs::create_dir_all(out_dir)?;
            let mut written = Vec::new();
            for n in names {
                let spec = named_fixture(n)?;
                let path = out_dir.join(format!("{n}.json"));
                write_atomic(&path, &game_to_json(&spec))?;
                written.push(path.display().to_string());
            }
            Ok(Outcome::ok(json!({ "written": written })))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let c = &cli.common;
    if c.state_cap == 0 || c.enum_cap == 0 {
        eprintln!("dsg: caps must be positive");
        return ExitCode::from(1);
    }
    if let Some(n) = c.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("dsg: cannot configure {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    let (result, code) = match run(&cli.command, c) {
        Ok(out) => (Ok(out.result), if out.passed { 0 } else { 1 }),
        Err(e) => {
            eprintln!("dsg: error: {e}");
            (Err(e.to_string()), exit_code(&e))
        }
    };
    let mut report = json!({
        "command": cli.command,
        "config": c,
        "seed": c.seed,
        "exit_code": code,
    });
    match result {
        Ok(r) => report["result"] = r,
        Err(msg) => report["error"] = json!(msg),
    }
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    match &c.output {
        Some(path) => {
            if let Err(e) = write_atomic(path, &text) {
                eprintln!("dsg: cannot write {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(code)
}
