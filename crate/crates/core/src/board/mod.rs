//! Append-only bulletin board with hash-chained entries.
//!
//! Persisted form, one entry per line:
//!
//! ```text
//! <seq>\t<kind>\t<prev_hash>\t<entry_hash>\t<payload>\n
//! ```
//!
//! `seq` is decimal without leading zeros, hashes are 64 lowercase hex
//! digits, `payload` is compact JSON (never containing tabs or newlines).
//! `entry_hash = SHA-256(u64be(seq) || u32be(len kind) || kind ||
//! u64be(len payload) || payload || prev_hash)`; the first `prev_hash` is 32
//! zero bytes.

mod audit;
mod records;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use audit::{audit, read_params, AuditError, AuditReport};
pub use records::{publish_session, CodegenStep, KeyRecord, KeyRole, PetRecord, SharesRecord};

use crate::group::GroupParams;
use crate::serial;

#[derive(Debug, thiserror::Error)]
pub enum BoardError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("entry {0}: payload does not decode: {1}")]
    Payload(u64, String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryKind {
    Params,
    Key,
    CodegenStep,
    CodeTable,
    Ballot,
    Pet,
    Shares,
    Finalization,
    Tally,
}

impl EntryKind {
    pub const ALL: [EntryKind; 9] = [
        EntryKind::Params,
        EntryKind::Key,
        EntryKind::CodegenStep,
        EntryKind::CodeTable,
        EntryKind::Ballot,
        EntryKind::Pet,
        EntryKind::Shares,
        EntryKind::Finalization,
        EntryKind::Tally,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntryKind::Params => "params",
            EntryKind::Key => "key",
            EntryKind::CodegenStep => "codegen-step",
            EntryKind::CodeTable => "code-table",
            EntryKind::Ballot => "ballot",
            EntryKind::Pet => "pet",
            EntryKind::Shares => "shares",
            EntryKind::Finalization => "finalization",
            EntryKind::Tally => "tally",
        }
    }
}

impl fmt::Display for EntryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntryKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        EntryKind::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| format!("unknown entry kind {s:?}"))
    }
}

pub type Hash = [u8; 32];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoardEntry {
    pub seq: u64,
    pub kind: EntryKind,
    pub payload: String,
    pub prev_hash: Hash,
    pub entry_hash: Hash,
}

pub fn entry_hash(seq: u64, kind: EntryKind, payload: &str, prev_hash: &Hash) -> Hash {
    let kind = kind.as_str().as_bytes();
    let mut h = Sha256::new();
    h.update(seq.to_be_bytes());
    h.update((kind.len() as u32).to_be_bytes());
    h.update(kind);
    h.update((payload.len() as u64).to_be_bytes());
    h.update(payload.as_bytes());
    h.update(prev_hash);
    h.finalize().into()
}

impl BoardEntry {
    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\n",
            self.seq,
            self.kind,
            hex::encode(self.prev_hash),
            hex::encode(self.entry_hash),
            self.payload
        )
    }

    pub fn decode<T: DeserializeOwned>(&self, group: &GroupParams) -> Result<T, BoardError> {
        serial::from_json(group, &self.payload).map_err(|e| BoardError::Payload(self.seq, e.to_string()))
    }
}

fn parse_hash(field: &str) -> Option<Hash> {
    let mut out = [0u8; 32];
    hex::decode_to_slice(field, &mut out).ok()?;
    Some(out)
}

/// In-memory board; the single writer owns it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Board {
    entries: Vec<BoardEntry>,
}

impl Board {
    pub fn new() -> Self {
        Board::default()
    }

    pub fn entries(&self) -> &[BoardEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn tip(&self) -> Hash {
        self.entries.last().map_or([0; 32], |e| e.entry_hash)
    }

    /// Appends a payload given as canonical text.
    pub fn append_raw(&mut self, kind: EntryKind, payload: String) -> &BoardEntry {
        assert!(!payload.contains(['\t', '\n']), "payloads are single-field");
        let seq = self.entries.len() as u64;
        let prev_hash = self.tip();
        let entry_hash = entry_hash(seq, kind, &payload, &prev_hash);
        self.entries.push(BoardEntry { seq, kind, payload, prev_hash, entry_hash });
        self.entries.last().expect("just pushed")
    }

    pub fn append<T: Serialize + ?Sized>(&mut self, kind: EntryKind, payload: &T) -> &BoardEntry {
        self.append_raw(kind, serial::to_json(payload))
    }

    pub fn read_all(&self, kind: Option<EntryKind>) -> impl Iterator<Item = &BoardEntry> {
        self.entries.iter().filter(move |e| kind.is_none_or(|k| e.kind == k))
    }

    pub fn decode_all<T: DeserializeOwned>(&self, kind: EntryKind, group: &GroupParams) -> Result<Vec<T>, BoardError> {
        self.read_all(Some(kind)).map(|e| e.decode(group)).collect()
    }

    pub fn verify_chain(&self) -> bool {
        let mut prev = [0u8; 32];
        self.entries.iter().enumerate().all(|(i, e)| {
            let ok = e.seq == i as u64
                && e.prev_hash == prev
                && !e.payload.contains(['\t', '\n'])
                && e.entry_hash == entry_hash(e.seq, e.kind, &e.payload, &e.prev_hash);
            prev = e.entry_hash;
            ok
        })
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(BoardEntry::to_line).collect()
    }

    /// Parses the persisted form. Chain validity is checked separately.
    pub fn from_text(text: &str) -> Result<Board, BoardError> {
        let mut entries = Vec::new();
        for (i, line) in text.split_inclusive('\n').enumerate() {
            let bad = |reason: &str| BoardError::Malformed { line: i + 1, reason: reason.into() };
            let line = line.strip_suffix('\n').ok_or_else(|| bad("missing newline"))?;
            let fields: Vec<&str> = line.splitn(5, '\t').collect();
            let [seq, kind, prev, hash, payload] = fields[..] else {
                return Err(bad("expected five tab-separated fields"));
            };
            let entry = BoardEntry {
                seq: seq.parse().map_err(|_| bad("sequence number"))?,
                kind: kind.parse().map_err(|e: String| bad(&e))?,
                prev_hash: parse_hash(prev).ok_or_else(|| bad("previous hash"))?,
                entry_hash: parse_hash(hash).ok_or_else(|| bad("entry hash"))?,
                payload: payload.to_string(),
            };
            if entry.to_line().strip_suffix('\n') != Some(line) {
                return Err(bad("not in canonical form"));
            }
            entries.push(entry);
        }
        Ok(Board { entries })
    }

    /// Parses persisted bytes and checks the chain; any deviation from the
    /// canonical form counts as a failure.
    pub fn verify_persisted(bytes: &[u8]) -> bool {
        std::str::from_utf8(bytes).ok().and_then(|text| Board::from_text(text).ok()).is_some_and(|b| b.verify_chain())
    }

    pub fn save(&self, path: &Path) -> Result<(), BoardError> {
        Ok(std::fs::write(path, self.to_text())?)
    }

    pub fn load(path: &Path) -> Result<Board, BoardError> {
        Board::from_text(&std::fs::read_to_string(path)?)
    }
}
