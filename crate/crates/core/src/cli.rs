//! Command-line front end.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::adversary::{
    alice_purification_strategy, alice_symmetrized_bound, alice_symmetrized_strategy,
    bob_helstrom_strategy, optimize_eq2, run_planned, PlannedAttack,
};
use crate::error::{Error, Result};
use crate::family::{
    alignment_check, analyze_family, parse_family_json, random_family, restricted_bound_check,
    section3_family, FamilySpec,
};
use crate::protocol::{
    exact_outcome_distribution, honest_frequencies, parse_protocol_json, section3_spec, Outcome,
    ProtocolSpec,
};
use crate::qmatrix::Party;
use crate::report::{build_report, fmt_float, to_pretty, Meta, TOOL, VERSION};
use crate::trajectory::{
    fidelity_trajectory, induction_bound, main_lemma_strategy, maincor_audit, round_bound_report,
    start_lemma_strategy,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;
pub const EXIT_AUDIT: i32 = 4;

/// Caps the number of worker threads when set.
pub const THREADS_ENV: &str = "COINFLIP_LAB_THREADS";

#[derive(Parser, Debug)]
#[command(name = "coinflip-lab", version, about = "Quantum coin flipping: honest runs, cheating attacks, round bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Source {
    /// Built-in input: `section3` or `family:random:<seed>`.
    #[arg(long, conflicts_with = "input")]
    builtin: Option<String>,
    /// Protocol or family JSON file.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Honest runs: sampled and exact outcome distribution.
    Simulate {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        common: Common,
    },
    /// Run a cheating strategy against an honest party.
    Attack {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = PartyArg::Bob)]
        cheater: PartyArg,
        /// Defaults to `helstrom` for Bob and `symmetrized` for Alice.
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
        target: u8,
        /// Round after which the main-lemma attack acts.
        #[arg(long, default_value_t = 1)]
        round: usize,
        /// Diagonal weights `d1,d2` of the symmetrized message.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        delta: Option<Vec<f64>>,
    },
    /// Optimal biases of a state-family protocol.
    AnalyzeFamily {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        common: Common,
    },
    /// Per-round branch fidelities with bound columns.
    Trajectory {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long, default_value_t = 0.25)]
        epsilon: f64,
    },
    /// Audit a trajectory against the mid-protocol and induction bounds.
    Audit {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.25)]
        epsilon: f64,
        /// Exit with status 4 if any check fails.
        #[arg(long)]
        strict: bool,
    },
    /// Minimum round count compatible with bias epsilon.
    Bound {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epsilon: f64,
    },
    /// Maximize Alice's symmetrized success over the message weights.
    OptimizeEq2 {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1e-3)]
        grid_step: f64,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartyArg {
    Alice,
    Bob,
}

impl From<PartyArg> for Party {
    fn from(p: PartyArg) -> Party {
        match p {
            PartyArg::Alice => Party::Alice,
            PartyArg::Bob => Party::Bob,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Helstrom,
    StartLemma,
    MainLemma,
    Symmetrized,
    Purification,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

/// Where the protocol or family comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum InputSource {
    Builtin(String),
    File(PathBuf),
    None,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CommandKind {
    Simulate,
    Attack {
        cheater: Party,
        mode: Option<Mode>,
        target: u8,
        round: usize,
        delta: (f64, f64),
    },
    AnalyzeFamily,
    Trajectory,
    Audit { strict: bool },
    Bound,
    OptimizeEq2,
}

/// Fully resolved invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub input: InputSource,
    pub trials: u64,
    pub seed: u64,
    pub epsilon: Option<f64>,
    pub grid_step: Option<f64>,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::Domain("trials must be at least 1".into()));
        }
        if let Some(g) = self.grid_step {
            if !(g > 0.0 && g <= 0.1) {
                return Err(Error::Domain(format!("grid step must be in (0, 0.1], got {g}")));
            }
        }
        Ok(())
    }
}

fn source_of(s: Source) -> InputSource {
    match (s.builtin, s.input) {
        (Some(b), _) => InputSource::Builtin(b),
        (None, Some(p)) => InputSource::File(p),
        (None, None) => InputSource::None,
    }
}

fn config_from(cli: Cli) -> RunConfig {
    let base = |command, source: InputSource, c: Common| RunConfig {
        command,
        input: source,
        trials: c.trials,
        seed: c.seed,
        epsilon: None,
        grid_step: None,
        output: c.output,
        format: Format::Json,
    };
    match cli.command {
        Command::Simulate { source, common } => base(CommandKind::Simulate, source_of(source), common),
        Command::Attack {
            source,
            common,
            cheater,
            mode,
            target,
            round,
            delta,
        } => {
            let delta = delta.map_or((1.0 / 6.0, 1.0 / 6.0), |d| (d[0], d[1]));
            base(
                CommandKind::Attack {
                    cheater: cheater.into(),
                    mode,
                    target,
                    round,
                    delta,
                },
                source_of(source),
                common,
            )
        }
        Command::AnalyzeFamily { source, common } => {
            base(CommandKind::AnalyzeFamily, source_of(source), common)
        }
        Command::Trajectory {
            source,
            common,
            format,
            epsilon,
        } => RunConfig {
            epsilon: Some(epsilon),
            format,
            ..base(CommandKind::Trajectory, source_of(source), common)
        },
        Command::Audit {
            source,
            common,
            epsilon,
            strict,
        } => RunConfig {
            epsilon: Some(epsilon),
            ..base(CommandKind::Audit { strict }, source_of(source), common)
        },
        Command::Bound { common, epsilon } => RunConfig {
            epsilon: Some(epsilon),
            ..base(CommandKind::Bound, InputSource::None, common)
        },
        Command::OptimizeEq2 { common, grid_step } => RunConfig {
            grid_step: Some(grid_step),
            ..base(CommandKind::OptimizeEq2, InputSource::None, common)
        },
    }
}

enum Loaded {
    Protocol(Box<ProtocolSpec>),
    Family(FamilySpec),
}

fn load(input: &InputSource) -> Result<Loaded> {
    match input {
        InputSource::None => Err(Error::Parse("one of --builtin or --input is required".into())),
        InputSource::Builtin(name) if name == "section3" => Ok(Loaded::Protocol(Box::new(section3_spec()))),
        InputSource::Builtin(name) => {
            let seed = name
                .strip_prefix("family:random:")
                .and_then(|s| s.parse::<u64>().ok())
                .ok_or_else(|| {
                    Error::Parse(format!(
                        "unknown builtin \"{name}\" (expected section3 or family:random:<seed>)"
                    ))
                })?;
            Ok(Loaded::Family(random_family(seed)))
        }
        InputSource::File(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
            let value: Value = serde_json::from_str(&text)?;
            if value.get("branches").is_some() {
                Ok(Loaded::Family(parse_family_json(&text)?))
            } else {
                Ok(Loaded::Protocol(Box::new(parse_protocol_json(&text)?)))
            }
        }
    }
}

fn input_name(input: &InputSource) -> String {
    match input {
        InputSource::Builtin(b) => b.clone(),
        InputSource::File(p) => p.display().to_string(),
        InputSource::None => String::new(),
    }
}

fn load_protocol(input: &InputSource) -> Result<ProtocolSpec> {
    match load(input)? {
        Loaded::Protocol(p) => Ok(*p),
        Loaded::Family(f) => f.to_protocol(&input_name(input)),
    }
}

fn load_family(input: &InputSource) -> Result<FamilySpec> {
    match (input, load(input)?) {
        (_, Loaded::Family(f)) => Ok(f),
        (InputSource::Builtin(b), Loaded::Protocol(_)) if b == "section3" => Ok(section3_family()),
        _ => Err(Error::Parse("analyze-family needs a family input".into())),
    }
}

/// Result of a dispatched command: what to write and the exit status.
#[derive(Debug)]
pub struct Dispatched {
    pub text: String,
    pub exit_code: i32,
}

#[derive(Serialize)]
struct SimulateBody {
    protocol: String,
    counts: crate::sim::OutcomeCounts,
    frequencies: crate::protocol::OutcomeDistribution,
    exact: crate::protocol::OutcomeDistribution,
}

fn outcome_of(bit: u8) -> Outcome {
    Outcome::bit(bit)
}

fn plan_attack(spec: &ProtocolSpec, kind: &CommandKind) -> Result<PlannedAttack> {
    let CommandKind::Attack {
        cheater,
        mode,
        target,
        round,
        delta,
    } = kind
    else {
        unreachable!("attack config")
    };
    let target = outcome_of(*target);
    let mode = mode.unwrap_or(match cheater {
        Party::Bob => Mode::Helstrom,
        Party::Alice => Mode::Symmetrized,
    });
    let alice_only = |m: &str| {
        if *cheater != Party::Alice {
            Err(Error::Domain(format!("mode {m} is an attack by Alice")))
        } else {
            Ok(())
        }
    };
    match mode {
        Mode::Helstrom => {
            if *cheater != Party::Bob {
                return Err(Error::Domain("mode helstrom is an attack by Bob".into()));
            }
            bob_helstrom_strategy(spec, target)
        }
        Mode::Symmetrized => {
            alice_only("symmetrized")?;
            alice_symmetrized_strategy(spec, target, delta.0, delta.1)
        }
        Mode::Purification => {
            alice_only("purification")?;
            alice_purification_strategy(spec, target)
        }
        Mode::StartLemma => start_lemma_strategy(spec, *cheater, target),
        Mode::MainLemma => main_lemma_strategy(spec, *cheater, *round, target),
    }
}

fn trajectory_csv(meta: &Meta, audit: &crate::trajectory::BoundAudit) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# {} {} command={} seed={} trials={} epsilon={}",
        meta.tool,
        meta.version,
        meta.command,
        meta.seed,
        meta.trials,
        fmt_float(audit.epsilon)
    );
    out.push_str("round,F_A,F_B,bound_A,bound_B,maincor_AB_pass,maincor_BA_pass\n");
    for r in &audit.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.i,
            fmt_float(r.f_a),
            fmt_float(r.f_b),
            fmt_float(r.bound_a),
            fmt_float(r.bound_b),
            r.maincor_ab_pass,
            r.maincor_ba_pass
        );
    }
    out
}

/// Execute a resolved configuration. The returned text is what the command
/// writes; `exit_code` is 0 or the audit status.
pub fn dispatch(config: &RunConfig) -> Result<Dispatched> {
    config.validate()?;
    let name = match &config.command {
        CommandKind::Simulate => "simulate",
        CommandKind::Attack { .. } => "attack",
        CommandKind::AnalyzeFamily => "analyze-family",
        CommandKind::Trajectory => "trajectory",
        CommandKind::Audit { .. } => "audit",
        CommandKind::Bound => "bound",
        CommandKind::OptimizeEq2 => "optimize-eq2",
    };
    let meta = Meta::new(name, config.seed, config.trials);
    let json_out = |body: &dyn erased::Body| -> Result<Dispatched> {
        Ok(Dispatched {
            text: to_pretty(&build_report(&meta, &body.value()?)?),
            exit_code: EXIT_OK,
        })
    };
    match &config.command {
        CommandKind::Simulate => {
            let spec = load_protocol(&config.input)?;
            let counts = honest_frequencies(&spec, config.trials, config.seed)?;
            let freq = crate::protocol::OutcomeDistribution::from_array(
                Outcome::ALL.map(|o| counts.frequency(o)),
            );
            json_out(&SimulateBody {
                protocol: spec.name().to_string(),
                counts,
                frequencies: freq,
                exact: exact_outcome_distribution(&spec),
            })
        }
        kind @ CommandKind::Attack { .. } => {
            let spec = load_protocol(&config.input)?;
            let plan = plan_attack(&spec, kind)?;
            let report = run_planned(&spec, &plan, config.trials, config.seed)?;
            let body = json!({
                "protocol": spec.name(),
                "report": report,
                "sigma": report.sigma(),
            });
            json_out(&body)
        }
        CommandKind::AnalyzeFamily => {
            let family = load_family(&config.input)?;
            let body = json!({
                "source": input_name(&config.input),
                "dim": family.dim(),
                "report": analyze_family(&family)?,
                "restricted_bound": restricted_bound_check(&family)?,
                "alignment": alignment_check(&family)?,
            });
            json_out(&body)
        }
        CommandKind::Trajectory => {
            let spec = load_protocol(&config.input)?;
            let epsilon = config.epsilon.unwrap_or(0.25);
            let traj = fidelity_trajectory(&spec)?;
            let audit = maincor_audit(&traj, epsilon)?;
            match config.format {
                Format::Csv => Ok(Dispatched {
                    text: trajectory_csv(&meta, &audit),
                    exit_code: EXIT_OK,
                }),
                Format::Json => json_out(&json!({
                    "protocol": spec.name(),
                    "k": traj.k,
                    "epsilon": epsilon,
                    "rows": audit.rows,
                })),
            }
        }
        CommandKind::Audit { strict } => {
            let spec = load_protocol(&config.input)?;
            let epsilon = config.epsilon.unwrap_or(0.25);
            let traj = fidelity_trajectory(&spec)?;
            let audit = maincor_audit(&traj, epsilon)?;
            let f0 = traj.rows[0].f_a;
            let required = (0.5 - epsilon).max(0.0).powi(2);
            let start_pass = f0 >= required - 1e-9;
            let pass = audit.pass && start_pass;
            let body = json!({
                "protocol": spec.name(),
                "audit": audit,
                "start_condition": {"F0_A": f0, "required": required, "pass": start_pass},
                "induction_bound": induction_bound(traj.k, epsilon).ok(),
                "round_bound": round_bound_report(epsilon).ok(),
                "pass": pass,
            });
            let mut out = json_out(&body)?;
            if *strict && !pass {
                out.exit_code = EXIT_AUDIT;
            }
            Ok(out)
        }
        CommandKind::Bound => {
            let epsilon = config
                .epsilon
                .ok_or_else(|| Error::Domain("--epsilon is required".into()))?;
            json_out(&round_bound_report(epsilon)?)
        }
        CommandKind::OptimizeEq2 => {
            let opt = optimize_eq2(config.grid_step.unwrap_or(1e-3))?;
            json_out(&json!({
                "optimum": opt,
                "at_one_sixth": alice_symmetrized_bound(1.0 / 6.0, 1.0 / 6.0)?,
            }))
        }
    }
}

mod erased {
    use serde::Serialize;
    use serde_json::Value;

    /// Object-safe wrapper over `Serialize` bodies.
    pub trait Body {
        fn value(&self) -> crate::Result<Value>;
    }

    impl<T: Serialize> Body for T {
        fn value(&self) -> crate::Result<Value> {
            Ok(serde_json::to_value(self)?)
        }
    }
}

pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Parse(_) | Error::Json(_) | Error::Domain(_) => EXIT_PARSE,
        _ => EXIT_INVARIANT,
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        // Fails only if a pool already exists, in which case it is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Parse arguments, run, write output; returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    configure_threads();
    let config = config_from(cli);
    match dispatch(&config) {
        Ok(out) => {
            let written = match &config.output {
                Some(path) => std::fs::write(path, &out.text)
                    .map_err(|e| format!("cannot write {}: {e}", path.display())),
                None => {
                    print!("{}", out.text);
                    Ok(())
                }
            };
            if let Err(msg) = written {
                eprintln!("{TOOL} {VERSION}: {msg}");
                return EXIT_FAILURE;
            }
            out.exit_code
        }
        Err(e) => {
            eprintln!("{TOOL}: {e}");
            exit_code_for(&e)
        }
    }
}
