//! Election state kept in a directory between CLI invocations:
//!
//! - `config.toml`: the election configuration
//! - `secrets.json`: teller key shares and the printing key
//! - `sheets.txt`: the printed ballot sheets, separated by blank lines
//! - `board.txt`: the bulletin board

use std::fs;
use std::path::{Path, PathBuf};

use petcode_core::board::{read_params, Board};
use petcode_core::codegen::BallotSheet;
use petcode_core::elgamal::KeyPair;
use petcode_core::protocol::Teller;
use petcode_core::serial;
use serde::{Deserialize, Serialize};

use crate::config::ElectionConfig;
use crate::election::{Authorities, Election, HarnessError};

#[derive(Serialize, Deserialize)]
struct Secrets {
    tellers: Vec<Teller>,
    printing: KeyPair,
}

pub struct StateDir {
    root: PathBuf,
}

fn io(path: &Path, e: std::io::Error) -> HarnessError {
    HarnessError::State(format!("{}: {e}", path.display()))
}

impl StateDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        StateDir { root: root.into() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn read(&self, name: &str) -> Result<String, HarnessError> {
        let path = self.path(name);
        fs::read_to_string(&path).map_err(|e| io(&path, e))
    }

    fn write(&self, name: &str, text: &str) -> Result<(), HarnessError> {
        fs::create_dir_all(&self.root).map_err(|e| io(&self.root, e))?;
        let path = self.path(name);
        fs::write(&path, text).map_err(|e| io(&path, e))
    }

    pub fn board_path(&self) -> PathBuf {
        self.path("board.txt")
    }

    pub fn load_config(&self) -> Result<ElectionConfig, HarnessError> {
        Ok(ElectionConfig::from_toml(&self.read("config.toml")?)?)
    }

    pub fn load_board(&self) -> Result<Board, HarnessError> {
        Ok(Board::from_text(&self.read("board.txt")?)?)
    }

    pub fn save_board(&self, board: &Board) -> Result<(), HarnessError> {
        self.write("board.txt", &board.to_text())
    }

    pub fn save_authorities(&self, a: &Authorities) -> Result<(), HarnessError> {
        self.write("config.toml", &a.config.to_toml())?;
        self.write(
            "secrets.json",
            &serial::to_json(&Secrets { tellers: a.tellers.clone(), printing: a.printing.clone() }),
        )?;
        self.save_board(&a.board)
    }

    fn load_secrets(
        &self,
        board: &Board,
    ) -> Result<(ElectionConfig, Secrets, petcode_core::protocol::ElectionPublic), HarnessError> {
        let config = self.load_config()?;
        let public = read_params(board)?;
        let secrets: Secrets = serial::from_json(&public.group, &self.read("secrets.json")?)
            .map_err(|e| HarnessError::State(format!("secrets.json: {e}")))?;
        Ok((config, secrets, public))
    }

    pub fn load_authorities(&self) -> Result<Authorities, HarnessError> {
        let board = self.load_board()?;
        let (config, secrets, public) = self.load_secrets(&board)?;
        Ok(Authorities { config, public, tellers: secrets.tellers, printing: secrets.printing, board })
    }

    pub fn save_election(&self, e: &Election) -> Result<(), HarnessError> {
        let sheets: Vec<String> = e.sheets.iter().map(BallotSheet::to_text).collect();
        self.write("sheets.txt", &sheets.join("\n"))?;
        self.save_board(&e.board)
    }

    pub fn load_sheets(&self) -> Result<Vec<BallotSheet>, HarnessError> {
        let text = self.read("sheets.txt")?;
        Ok(text.split("\n\n").filter(|s| !s.trim().is_empty()).map(BallotSheet::from_text).collect::<Result<_, _>>()?)
    }

    pub fn load_election(&self) -> Result<Election, HarnessError> {
        let board = self.load_board()?;
        let (config, secrets, _) = self.load_secrets(&board)?;
        let sheets = self.load_sheets()?;
        Election::restore(config, secrets.tellers, secrets.printing, sheets, board)
    }
}
