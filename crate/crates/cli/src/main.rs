use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stratswitch::cert::{
    certify, expand_candidates, partition, partition_csv, report, Bounds, CertError, CertifyOptions, GapSelection,
    PolytopeCert,
};
use stratswitch::exec::{self, Mode};
use stratswitch::model::{normalize_info, parse_game, parse_vector, GameStructure, InfoVector, ParseError, SpecTask};
use stratswitch::rational::Rational;
use stratswitch::sim::{
    metrics_summary, parse_script, run_resynthesis_oracle, run_switching, run_uninformed, AdversaryModel, ExecutorKind,
    InfoStream, RunTrace, SimError, SimGame,
};
use stratswitch::synthesis::{Strategy, SynthError, Synthesizer};

#[derive(Parser)]
#[command(name = "stratswitch", version, about = "Synthesize, certify and switch between cost-optimal strategies")]
struct Cli {
    /// Run batch work on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a game file and report every finding.
    Validate(GameArg),
    /// Synthesize the optimal strategy for one information vector.
    Synth {
        #[command(flatten)]
        game: GameArg,
        /// Information vector, e.g. 0.6,0.3,0.1 or 3/5,3/10,1/10.
        #[arg(long)]
        p: String,
        /// Write the strategy JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthesize candidate strategies and certify their optimality polytopes.
    Certify {
        #[command(flatten)]
        game: GameArg,
        /// One vector per line, or a JSON array of vectors.
        #[arg(long)]
        candidates: PathBuf,
        /// Defaults to the smallest value keeping every polytope non-empty.
        #[arg(long)]
        epsilon: Option<String>,
        #[arg(long, default_value_t = 4)]
        grid: u32,
        /// Add candidates at coverage gaps for up to this many rounds.
        #[arg(long)]
        expand: Option<usize>,
        /// Pick gaps at random with this seed instead of in grid order.
        #[arg(long)]
        expand_seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the certified cost bounds at an information vector.
    Bounds {
        #[arg(long)]
        cert: PathBuf,
        #[arg(long)]
        p: String,
    },
    /// Write the simplex partition on a grid as CSV.
    ExportPartition {
        #[arg(long)]
        cert: PathBuf,
        #[arg(long, default_value_t = 4)]
        grid: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run closed-loop simulations and write traces and metrics.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct GameArg {
    #[arg(long)]
    game: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    game: GameArg,
    #[arg(long)]
    cert: PathBuf,
    #[arg(long)]
    stream: PathBuf,
    /// uniform:<seed>, script:<file> or greedy.
    #[arg(long, default_value = "uniform:0")]
    adversary: String,
    #[arg(long)]
    horizon: usize,
    /// Comma-separated executors: switching, uninformed, oracle.
    #[arg(long, default_value = "switching,uninformed,oracle")]
    run: String,
    /// Independent runs per executor; run k uses adversary seed + k.
    #[arg(long, default_value_t = 1)]
    runs: usize,
    /// Steps between re-syntheses for the oracle executor.
    #[arg(long, default_value_t = 1)]
    period: usize,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

/// Exit code 1 for domain failures, 2 for usage and file errors.
enum Failure {
    Domain(String),
    Usage(String),
}

impl From<SynthError> for Failure {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Dimension { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Domain(e.to_string()),
        }
    }
}

impl From<CertError> for Failure {
    fn from(e: CertError) -> Self {
        match e {
            CertError::Synth(s) => s.into(),
            CertError::Json(_)
            | CertError::Inconsistent(_)
            | CertError::Dimension { .. }
            | CertError::NegativeEpsilon(_)
            | CertError::NoCandidates
            | CertError::NoRounds => Failure::Usage(e.to_string()),
            _ => Failure::Domain(e.to_string()),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Synth(s) => s.into(),
            SimError::InitialLosing | SimError::NoMove { .. } | SimError::ZeroEvidence => {
                Failure::Domain(e.to_string())
            }
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn read(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Outcome<()> {
    fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_game(path: &Path) -> Outcome<(GameStructure, SpecTask)> {
    parse_game(&read(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_cert(path: &Path) -> Outcome<PolytopeCert> {
    PolytopeCert::from_json(&read(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn parse_info(text: &str) -> Outcome<InfoVector> {
    let raw = parse_vector(text).map_err(|e| Failure::Usage(format!("invalid vector {text:?}: {e}")))?;
    normalize_info(&raw).map_err(|e| Failure::Usage(format!("invalid vector {text:?}: {e}")))
}

fn candidate_list(raw: &[serde_json::Value]) -> Outcome<Vec<InfoVector>> {
    raw.iter()
        .map(|v| match v {
            serde_json::Value::String(s) => parse_info(s),
            other => {
                let entries: Vec<Rational> =
                    serde_json::from_value(other.clone()).map_err(|e| Failure::Usage(format!("candidates: {e}")))?;
                normalize_info(&entries).map_err(|e| Failure::Usage(format!("candidates: {e}")))
            }
        })
        .collect()
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct CandidateFile {
    #[serde(default)]
    epsilon: Option<Rational>,
    candidates: Vec<serde_json::Value>,
}

/// Accepts a JSON object `{epsilon?, candidates}`, a bare JSON array, or one
/// vector per line with `#` comments. Returns the candidates and the file's
/// epsilon, if any.
fn parse_candidates(text: &str) -> Outcome<(Vec<InfoVector>, Option<Rational>)> {
    let json_err = |e: serde_json::Error| Failure::Usage(format!("candidates: {e}"));
    match text.trim_start().chars().next() {
        Some('{') => {
            let file: CandidateFile = serde_json::from_str(text).map_err(json_err)?;
            Ok((candidate_list(&file.candidates)?, file.epsilon))
        }
        Some('[') => {
            let raw: Vec<serde_json::Value> = serde_json::from_str(text).map_err(json_err)?;
            Ok((candidate_list(&raw)?, None))
        }
        _ => {
            let list = text
                .lines()
                .map(|l| l.split('#').next().unwrap_or("").trim())
                .filter(|l| !l.is_empty())
                .map(parse_info)
                .collect::<Outcome<_>>()?;
            Ok((list, None))
        }
    }
}

/// Decimal rendering without trailing zeros.
fn decimal(x: &Rational) -> String {
    let d = x.to_decimal_string(6);
    let d = d.trim_end_matches('0').trim_end_matches('.');
    d.to_string()
}

fn mode(cli: &Cli) -> Mode {
    if cli.sequential {
        Mode::Sequential
    } else {
        Mode::default()
    }
}

fn cmd_validate(arg: &GameArg) -> Outcome<()> {
    let (game, spec) = match parse_game(&read(&arg.game)?) {
        Ok(parsed) => parsed,
        Err(ParseError::Invalid(findings)) => {
            for f in &findings {
                println!("{f}");
            }
            return Err(Failure::Usage(format!("{}: {} finding(s)", arg.game.display(), findings.len())));
        }
        Err(e) => return Err(Failure::Usage(format!("{}: {e}", arg.game.display()))),
    };
    println!(
        "ok: {} states, {} inputs, {} outputs, {} transitions, {} guarantees, {} scenarios",
        game.states.len(),
        game.inputs.len(),
        game.outputs.len(),
        game.transitions.len(),
        spec.num_guarantees(),
        spec.num_scenarios()
    );
    Ok(())
}

fn cmd_synth(game: &GameArg, p: &str, out: Option<&Path>) -> Outcome<()> {
    let (game, spec) = load_game(&game.game)?;
    let p = parse_info(p)?;
    let synth = Synthesizer::new(&game, &spec)?;
    let strategy = synth.synthesize(&p)?;
    let cost = synth.optimal_cost(&p)?;
    let json = strategy.to_json(synth.arena());
    let basis: Vec<String> = strategy.basis_costs.iter().map(ToString::to_string).collect();
    eprintln!("optimal cost {cost}, basis costs [{}], memory states {}", basis.join(", "), strategy.memory_count());
    match out {
        Some(path) => write(path, &json),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

struct CertifyArgs<'a> {
    candidates: &'a Path,
    epsilon: Option<&'a str>,
    grid: u32,
    expand: Option<usize>,
    expand_seed: Option<u64>,
    out: &'a Path,
}

fn cmd_certify(game: &GameArg, args: CertifyArgs, mode: Mode) -> Outcome<()> {
    let (game, spec) = load_game(&game.game)?;
    let (candidates, file_epsilon) = parse_candidates(&read(args.candidates)?)?;
    let epsilon = args
        .epsilon
        .map(|e| e.trim().parse::<Rational>().map_err(|err| Failure::Usage(format!("invalid epsilon {e:?}: {err}"))))
        .transpose()?
        .or(file_epsilon);
    let synth = Synthesizer::new(&game, &spec)?;
    let opts = CertifyOptions { epsilon, grid: args.grid, mode };
    let mut c = certify(&synth, candidates, &opts)?;
    let mut text = String::new();
    if let Some(rounds) = args.expand {
        let selection = args.expand_seed.map_or(GapSelection::First, GapSelection::Random);
        let r = expand_candidates(&synth, &mut c, args.grid, rounds, selection)?;
        text.push_str(&format!(
            "expansion: rounds {}, added {}, uncoverable {}, covered {}\n",
            r.rounds,
            r.added.len(),
            r.uncoverable.len(),
            r.covered
        ));
    }
    text.insert_str(0, &report(&c.cert));
    write(args.out, &c.cert.to_json())?;
    print!("{text}");
    Ok(())
}

fn cmd_bounds(cert: &Path, p: &str) -> Outcome<()> {
    let cert = load_cert(cert)?;
    let p = parse_info(p)?;
    match cert.bounds_for(&p)? {
        Bounds::Certified { index, lower, upper } => {
            println!("strategy {}, lower {lower}, upper {upper}", index + 1);
            println!("decimal lower {}, upper {}", decimal(&lower), decimal(&upper));
        }
        Bounds::Uncovered { dominating, cost } => {
            println!("no polytope — dominating strategy {}, cost {cost}", dominating + 1);
            println!("decimal cost {}", decimal(&cost));
        }
    }
    Ok(())
}

fn cmd_export(cert: &Path, grid: u32, out: Option<&Path>) -> Outcome<()> {
    let cert = load_cert(cert)?;
    let rows = partition(&cert, grid);
    let csv = partition_csv(&cert, &rows);
    match out {
        Some(path) => write(path, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

/// Re-synthesizes the cert's candidates and checks their basis costs match.
fn certified_strategies(synth: &Synthesizer, cert: &PolytopeCert, mode: Mode) -> Outcome<Vec<Strategy>> {
    let strategies = exec::try_map(mode, &cert.candidates, |p| synth.synthesize(p))?;
    for (i, st) in strategies.iter().enumerate() {
        let same = st.basis_costs.len() == cert.basis_costs[i].len()
            && st.basis_costs.iter().zip(&cert.basis_costs[i]).all(|(a, b)| a.finite() == Some(b));
        if !same {
            return Err(Failure::Usage(format!("cert does not match the game: strategy {} basis costs differ", i + 1)));
        }
    }
    Ok(strategies)
}

fn cmd_simulate(args: &SimulateArgs, mode: Mode) -> Outcome<()> {
    let (game, spec) = load_game(&args.game.game)?;
    let cert = load_cert(&args.cert)?;
    let stream = InfoStream::from_json(&read(&args.stream)?)
        .map_err(|e| Failure::Usage(format!("{}: {e}", args.stream.display())))?;
    let adversary = match args.adversary.split_once(':') {
        Some(("script", path)) => AdversaryModel::Script(parse_script(&read(Path::new(path))?)),
        _ => AdversaryModel::parse(&args.adversary)?,
    };
    let kinds: Vec<ExecutorKind> = args
        .run
        .split(',')
        .map(|s| ExecutorKind::parse(s.trim()).ok_or_else(|| Failure::Usage(format!("unknown executor {s:?}"))))
        .collect::<Result<_, _>>()?;
    if args.runs == 0 {
        return Err(Failure::Usage("--runs must be at least 1".into()));
    }
    if args.period == 0 {
        return Err(SimError::Period.into());
    }
    let synth = Synthesizer::new(&game, &spec)?;
    let strategies = certified_strategies(&synth, &cert, mode)?;
    let sim = SimGame::new(&game, &spec)?;
    let base_seed = match adversary {
        AdversaryModel::Uniform(s) => s,
        _ => 0,
    };
    let jobs: Vec<(ExecutorKind, usize)> = kinds.iter().flat_map(|&k| (0..args.runs).map(move |r| (k, r))).collect();
    let traces: Vec<RunTrace> = exec::try_map(mode, &jobs, |&(kind, run)| {
        let adv = adversary.with_seed(base_seed.wrapping_add(run as u64));
        let mut t = match kind {
            ExecutorKind::Switching => run_switching(&sim, &strategies, &cert, &stream, &adv, args.horizon),
            ExecutorKind::Uninformed => run_uninformed(&sim, &strategies, &stream, &adv, args.horizon),
            ExecutorKind::Oracle => run_resynthesis_oracle(&sim, &synth, &stream, &adv, args.horizon, args.period),
        }?;
        t.run = run;
        Ok::<_, SimError>(t)
    })?;
    fs::create_dir_all(&args.out_dir).map_err(|e| Failure::Usage(format!("{}: {e}", args.out_dir.display())))?;
    for t in &traces {
        let name = if args.runs == 1 {
            format!("trace_{}.csv", t.executor.name())
        } else {
            format!("trace_{}_{}.csv", t.executor.name(), t.run)
        };
        write(&args.out_dir.join(name), &t.to_csv(&game))?;
    }
    let summary = metrics_summary(&traces)?;
    write(&args.out_dir.join("metrics.csv"), &summary.to_csv())?;
    write(&args.out_dir.join("metrics.json"), &summary.to_json())?;
    for r in &summary.rows {
        println!(
            "{} run {}: steps {}, total cost {}, switches {}",
            r.executor, r.run, r.steps, r.total_cost, r.switches
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mode = mode(&cli);
    let result = match &cli.command {
        Command::Validate(arg) => cmd_validate(arg),
        Command::Synth { game, p, out } => cmd_synth(game, p, out.as_deref()),
        Command::Certify { game, candidates, epsilon, grid, expand, expand_seed, out } => cmd_certify(
            game,
            CertifyArgs {
                candidates,
                epsilon: epsilon.as_deref(),
                grid: *grid,
                expand: *expand,
                expand_seed: *expand_seed,
                out,
            },
            mode,
        ),
        Command::Bounds { cert, p } => cmd_bounds(cert, p),
        Command::ExportPartition { cert, grid, out } => cmd_export(cert, *grid, out.as_deref()),
        Command::Simulate(args) => cmd_simulate(args, mode),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
