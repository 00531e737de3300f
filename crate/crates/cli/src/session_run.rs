use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use corrduel::ArmId;
use corrduel::SimilarityMatrix;
use corrduel_service::api::ArmRequest;
use corrduel_service::store::append_events;
use corrduel_service::{
    replay_file, Command, CommandResult, CreateRequest, LiveSession, Outcome, ProposalView,
    ServiceError, StateView,
};
use serde::Deserialize;

use crate::{CliError, ReplayArgs, SessionRunArgs};

const SESSION_ID: &str = "session-run";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArmsFile {
    horizon: u64,
    #[serde(default)]
    seed: u64,
    delta: Option<f64>,
    similarity: Option<Vec<Vec<f64>>>,
    /// Matrix text file, relative to the arms file.
    similarity_file: Option<PathBuf>,
    arms: Vec<ArmRequest>,
}

fn usage(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("{}: {e}", path.display()))
}

fn load_session(path: &Path) -> Result<LiveSession, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(path, e))?;
    let file: ArmsFile = toml::from_str(&text).map_err(|e| usage(path, e))?;
    let similarity = match (file.similarity, file.similarity_file) {
        (Some(_), Some(_)) => {
            return Err(usage(
                path,
                "give `similarity` or `similarity_file`, not both",
            ))
        }
        (Some(rows), None) => Some(rows),
        (None, Some(rel)) => {
            let full = path.parent().unwrap_or(Path::new(".")).join(rel);
            Some(
                SimilarityMatrix::read_file(&full)
                    .map_err(|e| usage(&full, e))?
                    .rows(),
            )
        }
        (None, None) => None,
    };
    let request = CreateRequest {
        arms: file.arms,
        similarity,
        horizon: file.horizon,
        delta: file.delta,
        seed: Some(file.seed),
    };
    let spec = request.into_spec(|| 0).map_err(|e| usage(path, e))?;
    LiveSession::create(SESSION_ID.into(), spec, 0).map_err(|e| usage(path, e))
}

fn parse_outcomes(path: &Path) -> Result<Vec<Outcome>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(path, e))?;
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .enumerate()
        .map(|(i, t)| {
            if t.eq_ignore_ascii_case("tie") {
                Ok(Outcome::Tie)
            } else {
                t.parse().map(|w| Outcome::Winner(ArmId(w))).map_err(|_| {
                    usage(
                        path,
                        format!("entry {} ({t:?}) is neither an arm id nor `tie`", i + 1),
                    )
                })
            }
        })
        .collect()
}

fn runtime(e: ServiceError) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Drives a session with scripted outcomes; step numbers are 1-based.
pub fn drive(session: &mut LiveSession, outcomes: &[Outcome]) -> Result<usize, CliError> {
    let mut script = outcomes.iter();
    let mut step = 0;
    loop {
        let (a, b) = match session.execute(Command::Propose, 0).map_err(runtime)?.0 {
            CommandResult::Proposal(ProposalView::Pending { arm_a, arm_b, .. }) => (arm_a, arm_b),
            _ => return Ok(script.count()),
        };
        step += 1;
        let Some(&outcome) = script.next() else {
            return Err(CliError::Runtime(format!(
                "step {step}: no outcome given for the proposed pair ({a}, {b})"
            )));
        };
        match session.execute(Command::Report(outcome), 0) {
            Ok(_) => {}
            Err(ServiceError::Validation { .. }) => {
                let Outcome::Winner(w) = outcome else {
                    unreachable!("ties always resolve")
                };
                return Err(CliError::Runtime(format!(
                    "step {step}: winner {w} is not in the proposed pair ({a}, {b})"
                )));
            }
            Err(e) => return Err(runtime(e)),
        }
    }
}

pub fn render(view: &StateView, session: &LiveSession) -> String {
    let config = session.engine().state().config;
    let mut s = String::new();
    let best = view.best_arm;
    let label = &session.arms()[best.0].label;
    let _ = writeln!(s, "best arm: {best} ({label})");
    let _ = writeln!(s, "status: {}", name_of(&view.status));
    let _ = writeln!(s, "iterations: {} of {}", view.t, view.horizon);
    let _ = writeln!(s, "round: {}", view.round);
    let _ = writeln!(s, "seed: {}", config.rng_seed);
    let _ = writeln!(
        s,
        "confidence radius: {:.6} (min plays {:.6})",
        view.confidence, view.min_plays
    );
    let _ = writeln!(s, "eliminations: {}", view.eliminated.len());
    for e in &view.eliminated {
        let _ = writeln!(
            s,
            "  round {:>3}  t {:>5}  arm {} ({})",
            e.round, e.iteration, e.arm, e.label
        );
    }
    let _ = writeln!(s, "active arms: {}", view.active.len());
    let _ = writeln!(
        s,
        "  {:>5}  {:<16} {:>10} {:>12} {:>12}",
        "arm", "label", "win_rate", "wins", "plays"
    );
    for a in &view.active {
        let _ = writeln!(
            s,
            "  {:>5}  {:<16} {:>10.6} {:>12.6} {:>12.6}",
            a.arm.0, a.label, a.win_rate, a.wins, a.plays
        );
    }
    s
}

/// The serialized name of a unit enum variant.
fn name_of<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn print_state(session: &LiveSession, json: bool) -> Result<(), CliError> {
    let view = session.state_view();
    if json {
        let text =
            serde_json::to_string_pretty(&view).map_err(|e| CliError::Runtime(e.to_string()))?;
        println!("{text}");
    } else {
        print!("{}", render(&view, session));
    }
    Ok(())
}

pub fn run(args: SessionRunArgs) -> Result<(), CliError> {
    let mut session = load_session(&args.arms)?;
    let outcomes = parse_outcomes(&args.outcomes)?;
    let config = session.engine().state().config;
    if !args.json {
        println!("# resolved configuration");
        println!("arms = {}", config.num_arms);
        println!("horizon = {}", config.horizon);
        println!("delta = {:e}", config.delta);
        println!("seed = {}", config.rng_seed);
        println!("similarity = \"{}\"", name_of(&session.similarity_source()));
        println!("outcomes = {}", outcomes.len());
        println!();
    }
    let unused = drive(&mut session, &outcomes)?;
    if unused > 0 {
        eprintln!("note: {unused} trailing outcome(s) not used; the session completed first");
    }
    if let Some(log) = &args.log {
        let dir = log
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        let name = log
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| CliError::Usage(format!("bad log path {}", log.display())))?;
        if log.extension().is_none_or(|x| x != "jsonl") {
            return Err(CliError::Usage("the log file must end in .jsonl".into()));
        }
        if log.exists() {
            std::fs::remove_file(log)
                .map_err(|e| CliError::Runtime(format!("{}: {e}", log.display())))?;
        }
        append_events(dir, name, session.events()).map_err(runtime)?;
    }
    print_state(&session, args.json)
}

pub fn replay(args: ReplayArgs) -> Result<(), CliError> {
    let session = replay_file(&args.log)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", args.log.display())))?;
    if !args.json {
        println!(
            "# session {} ({} events)",
            session.id(),
            session.events().len()
        );
    }
    print_state(&session, args.json)
}
