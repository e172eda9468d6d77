//! Payload types of board entries.

use serde::{Deserialize, Serialize};

use super::{Board, EntryKind};
use crate::codegen::{OptionShuffle, RecordMix};
use crate::elgamal::{Ciphertext, DealerTranscript, DecryptionShare};
use crate::proofs::PetTranscript;
use crate::protocol::CastSession;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KeyRole {
    Election,
    Code,
}

/// Dealer commitments of one key generation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyRecord {
    pub role: KeyRole,
    pub dealings: Vec<DealerTranscript>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "step")]
pub enum CodegenStep {
    Start { voters: Vec<String>, lambda: usize },
    Shuffle(OptionShuffle),
    Mix(RecordMix),
}

/// PET of `e*` against the ballot's `w`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PetRecord {
    pub voter_id: String,
    pub btilde_teller: u32,
    pub e_star: Ciphertext,
    pub c_star: Ciphertext,
    pub transcript: PetTranscript,
}

/// Decryption shares of `c*`. The decoded codes go to the voter only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharesRecord {
    pub voter_id: String,
    pub shares: Vec<DecryptionShare>,
    pub alarm: Option<String>,
}

/// Appends the ballot, the PET and, when the PET passed, the code shares.
pub fn publish_session(board: &mut Board, session: &CastSession) {
    board.append(EntryKind::Ballot, &session.ballot);
    board.append(
        EntryKind::Pet,
        &PetRecord {
            voter_id: session.voter_id.clone(),
            btilde_teller: session.btilde_teller,
            e_star: session.e_star.clone(),
            c_star: session.c_star.clone(),
            transcript: session.pet.clone(),
        },
    );
    if !session.code_shares.is_empty() {
        board.append(
            EntryKind::Shares,
            &SharesRecord {
                voter_id: session.voter_id.clone(),
                shares: session.code_shares.clone(),
                alarm: session.alarm.clone(),
            },
        );
    }
}
