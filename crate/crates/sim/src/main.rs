use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use petcode_core::board::{audit, Board};
use petcode_core::ot_attack::attack_demo;
use petcode_core::rng::derive_rng;
use petcode_sim::config::{ElectionConfig, SEED_ENV};
use petcode_sim::election::{setup, HarnessError, Platform};
use petcode_sim::experiments::{experiment_cai, experiment_privacy};
use petcode_sim::state::StateDir;
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "petcode", about = "Return-code voting simulator")]
struct Cli {
    /// Directory holding the election state.
    #[arg(long, global = true, default_value = "petcode-state")]
    state: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Writes the configuration, generates the keys and opens the board.
    Setup(ConfigArgs),
    /// Generates the code tables and prints the ballot sheets.
    Register,
    /// Casts one ballot and shows the voter's verdict on the returned codes.
    Cast {
        #[arg(long)]
        voter: String,
        /// One 0/1 digit per option, e.g. `10`.
        #[arg(long)]
        choices: String,
        /// `honest`, `flip:<option>` or `inconsistent:<option>`, options 1-based.
        #[arg(long, default_value = "honest")]
        platform: String,
    },
    /// Sends the voter's finalization code and checks the confirmation code.
    Finalize {
        #[arg(long)]
        voter: String,
    },
    /// Decrypts the finalized ballots and publishes the result.
    Tally,
    /// Audits a board; exits nonzero if any check fails.
    Verify {
        /// Board file; defaults to the one in the state directory.
        #[arg(long)]
        board: Option<PathBuf>,
    },
    /// Runs a security experiment and prints its report as one JSON line.
    Experiment {
        #[command(subcommand)]
        kind: ExperimentKind,
    },
    /// Reproduces the attack on the OT-based scheme and its countermeasure.
    AttackDemo {
        #[arg(long, env = SEED_ENV, default_value = "petcode")]
        seed: String,
    },
}

#[derive(Subcommand)]
enum ExperimentKind {
    Cai {
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[command(flatten)]
        config: ConfigArgs,
    },
    Privacy {
        #[arg(long, default_value_t = 2_000)]
        trials: u64,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

/// Flags mirroring the configuration keys; they override the file.
#[derive(Args, Default)]
struct ConfigArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    election_id: Option<String>,
    #[arg(long)]
    group_bits: Option<u32>,
    #[arg(long)]
    voters: Option<usize>,
    #[arg(long)]
    corrupted_voters: Option<usize>,
    #[arg(long)]
    options: Option<usize>,
    #[arg(long)]
    code_space: Option<u64>,
    #[arg(long)]
    code_bits: Option<usize>,
    /// `sparse` or `dense`.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    tellers: Option<u32>,
    #[arg(long)]
    threshold: Option<u32>,
    /// Comma-separated teller indices.
    #[arg(long, value_delimiter = ',')]
    corrupted_tellers: Option<Vec<u32>>,
    /// `passive` or `active`.
    #[arg(long)]
    teller_mode: Option<String>,
    /// `in-band` or `out-of-band`.
    #[arg(long)]
    delivery: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    lambda: Option<usize>,
}

fn keyword<T: DeserializeOwned>(name: &str, value: &str) -> Result<T, HarnessError> {
    serde_json::from_value(serde_json::Value::String(value.into()))
        .map_err(|_| HarnessError::State(format!("invalid {name} {value:?}")))
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ElectionConfig, HarnessError> {
        let mut c = match &self.config {
            Some(path) => ElectionConfig::from_toml(
                &std::fs::read_to_string(path).map_err(|e| HarnessError::State(format!("{}: {e}", path.display())))?,
            )?,
            None => ElectionConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => { $(if let Some(v) = &self.$field { c.$field = v.clone(); })* };
        }
        set!(election_id, group_bits, voters, corrupted_voters, options, code_space, code_bits, tellers, threshold);
        set!(corrupted_tellers, seed, lambda);
        if let Some(v) = &self.mode {
            c.mode = keyword("mode", v)?;
        }
        if let Some(v) = &self.teller_mode {
            c.teller_mode = keyword("teller mode", v)?;
        }
        if let Some(v) = &self.delivery {
            c.delivery = keyword("delivery", v)?;
        }
        c.validate()?;
        Ok(c)
    }
}

fn parse_choices(text: &str) -> Result<Vec<bool>, HarnessError> {
    text.chars()
        .map(|ch| match ch {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(HarnessError::State(format!("choices must be 0/1 digits, got {text:?}"))),
        })
        .collect()
}

fn parse_platform(text: &str) -> Result<Platform, HarnessError> {
    let bad = || HarnessError::State(format!("unknown platform {text:?}"));
    let option = |s: &str| s.parse::<usize>().ok().filter(|&i| i >= 1).map(|i| i - 1).ok_or_else(bad);
    match text.split_once(':') {
        None if text == "honest" => Ok(Platform::Honest),
        Some(("flip", i)) => Ok(Platform::FlipOption(option(i)?)),
        Some(("inconsistent", i)) => Ok(Platform::Inconsistent(option(i)?)),
        _ => Err(bad()),
    }
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string(value).expect("reports serialize"));
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    let state = StateDir::new(&cli.state);
    match cli.command {
        Command::Setup(args) => {
            let authorities = setup(&args.resolve()?)?;
            state.save_authorities(&authorities)?;
            print_json(&serde_json::json!({"board_entries": authorities.board.len()}));
        }
        Command::Register => {
            let authorities = state.load_authorities()?;
            let flips = authorities.honest_flips();
            let election = authorities.register(&flips)?;
            state.save_election(&election)?;
            print_json(&serde_json::json!({"voters": election.sheets.len(), "board_entries": election.board.len()}));
        }
        Command::Cast { voter, choices, platform } => {
            let mut election = state.load_election()?;
            let index =
                election.voter_index(&voter).ok_or_else(|| HarnessError::State(format!("unknown voter {voter}")))?;
            let outcome = election.submit(index, &parse_choices(&choices)?, parse_platform(&platform)?, None)?;
            state.save_board(&election.board)?;
            print_json(&outcome);
        }
        Command::Finalize { voter } => {
            let mut election = state.load_election()?;
            let index =
                election.voter_index(&voter).ok_or_else(|| HarnessError::State(format!("unknown voter {voter}")))?;
            let sheet = election.sheets[index].clone();
            let fin = election.finalize(&voter, &sheet.finalization_code)?;
            state.save_board(&election.board)?;
            print_json(&serde_json::json!({
                "voter_id": voter,
                "confirmation": fin.confirmation_code,
                "confirmed": fin.confirmation_code == sheet.confirmation_code,
            }));
        }
        Command::Tally => {
            let mut election = state.load_election()?;
            let result = election.tally()?;
            state.save_board(&election.board)?;
            print_json(&serde_json::json!({"counts": result.counts, "rejected": result.rejected}));
        }
        Command::Verify { board } => {
            let path = board.unwrap_or_else(|| state.board_path());
            let bytes = std::fs::read(&path).map_err(|e| HarnessError::State(format!("{}: {e}", path.display())))?;
            if !Board::verify_persisted(&bytes) {
                eprintln!("board rejected: not a canonical hash chain");
                return Ok(ExitCode::FAILURE);
            }
            let text = String::from_utf8(bytes).expect("checked above");
            match audit(&Board::from_text(&text)?) {
                Ok(report) => print_json(&report),
                Err(e) => {
                    eprintln!("board rejected: {e}");
                    return Ok(ExitCode::FAILURE);
                }
            }
        }
        Command::Experiment { kind } => {
            let report = match kind {
                ExperimentKind::Cai { trials, config } => experiment_cai(&config.resolve()?, trials)?,
                ExperimentKind::Privacy { trials, config } => experiment_privacy(&config.resolve()?, trials)?,
            };
            print_json(&report);
            if !report.pass {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::AttackDemo { seed } => {
            let config = ElectionConfig { seed, ..ElectionConfig::default() };
            let group = config.group_params()?;
            let choices = [0, 1];
            let r = attack_demo(&group, &choices, &mut derive_rng(config.seed.as_bytes(), "attack-demo", 0))
                .map_err(|e| HarnessError::State(e.to_string()))?;
            print_json(
                &serde_json::json!({"run": "honest", "choices": r.choices, "codes": r.honest_codes, "tally": r.honest_tally}),
            );
            print_json(&serde_json::json!({
                "run": "malicious",
                "passes_checks": r.malicious_passes_checks,
                "codes": r.malicious_codes,
                "voter_accepts": r.voter_accepts,
            }));
            print_json(
                &serde_json::json!({"run": "tally", "malicious_tally": r.malicious_tally, "rejected": r.malicious_tally.is_none()}),
            );
            print_json(&serde_json::json!({
                "run": "countermeasure",
                "honest_accepted": r.countermeasure_honest,
                "malicious_accepted": r.countermeasure_malicious,
                "branches": r.countermeasure_branches,
            }));
            print_json(&serde_json::json!({"attack_succeeds": r.attack_succeeds}));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
