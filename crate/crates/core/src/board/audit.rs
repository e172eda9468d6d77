//! Replays a whole board through the module verifiers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Board, BoardEntry, BoardError, CodegenStep, EntryKind, KeyRecord, KeyRole, PetRecord, SharesRecord};
use crate::codegen::{
    open_fin_commitment, printing_decode, public_table, verify_codegen, CodeTableRow, CodegenError, CodegenTranscript,
    FinPublic,
};
use crate::elgamal::{combine_verified, verify_dkg, Ciphertext};
use crate::group::GroupParams;
use crate::proofs::{verify_pet, verify_plaintext_knowledge};
use crate::protocol::{Ballot, ElectionPublic, Finalization, TallyResult};
use crate::serial;

#[derive(Debug, thiserror::Error)]
pub enum AuditError {
    #[error("hash chain broken")]
    Chain,
    #[error(transparent)]
    Board(#[from] BoardError),
    #[error("entry {seq}: {reason}")]
    Invalid { seq: u64, reason: String },
    #[error("code generation: {0}")]
    Codegen(#[from] CodegenError),
    #[error("incomplete election: {0}")]
    Incomplete(String),
}

/// Summary of a successful audit.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AuditReport {
    pub entries: usize,
    pub voters: usize,
    pub ballots: usize,
    pub finalized: usize,
    pub cancelled: usize,
    pub alarms: usize,
    pub counts: Option<Vec<u64>>,
    pub rejected: Option<usize>,
}

fn phase(kind: EntryKind) -> u8 {
    match kind {
        EntryKind::Params => 0,
        EntryKind::Key => 1,
        EntryKind::CodegenStep => 2,
        EntryKind::CodeTable => 3,
        EntryKind::Ballot | EntryKind::Pet | EntryKind::Shares | EntryKind::Finalization => 4,
        EntryKind::Tally => 5,
    }
}

enum Session {
    Submitted(Ciphertext),
    AwaitingShares(Ciphertext, Ciphertext),
    CodesSent(Ciphertext),
    Cancelled,
    Finalized,
}

fn decode_params(entry: &BoardEntry) -> Result<ElectionPublic, AuditError> {
    let invalid = |reason: String| AuditError::Invalid { seq: entry.seq, reason };
    let value: serde_json::Value = serde_json::from_str(&entry.payload).map_err(|e| invalid(e.to_string()))?;
    let group: GroupParams =
        serde_json::from_value(value.get("group").cloned().unwrap_or_default()).map_err(|e| invalid(e.to_string()))?;
    serial::from_json(&group, &entry.payload).map_err(|e| invalid(e.to_string()))
}

/// The election parameters from the board's first entry.
pub fn read_params(board: &Board) -> Result<ElectionPublic, AuditError> {
    match board.entries().first() {
        Some(e) if e.kind == EntryKind::Params => decode_params(e),
        _ => Err(AuditError::Incomplete("board does not open with the parameters".into())),
    }
}

/// Checks the chain and then every published transcript: key generation,
/// code generation, the code tables, every cast session and the tally.
pub fn audit(board: &Board) -> Result<AuditReport, AuditError> {
    if !board.verify_chain() {
        return Err(AuditError::Chain);
    }
    let entries = board.entries();
    let first = entries.first().ok_or_else(|| AuditError::Incomplete("empty board".into()))?;
    if first.kind != EntryKind::Params {
        return Err(AuditError::Invalid { seq: 0, reason: "board must open with the parameters".into() });
    }
    for pair in entries.windows(2) {
        if phase(pair[1].kind) < phase(pair[0].kind) || pair[1].kind == EntryKind::Params {
            return Err(AuditError::Invalid { seq: pair[1].seq, reason: format!("{} out of phase", pair[1].kind) });
        }
    }
    let public = decode_params(first)?;
    let group = &public.group;
    let enc = public.encodings().map_err(|e| AuditError::Invalid { seq: 0, reason: e.to_string() })?;
    let keys = public.key_set();
    let mut report = AuditReport { entries: entries.len(), ..AuditReport::default() };

    let mut seen_roles = Vec::new();
    for entry in board.read_all(Some(EntryKind::Key)) {
        let record: KeyRecord = entry.decode(group)?;
        let key = match record.role {
            KeyRole::Election => &public.election_key,
            KeyRole::Code => &public.code_key,
        };
        if seen_roles.contains(&record.role) || !verify_dkg(&record.dealings, key) {
            return Err(AuditError::Invalid {
                seq: entry.seq,
                reason: format!("{:?} key dealing rejected", record.role),
            });
        }
        seen_roles.push(record.role);
    }
    if seen_roles.len() != 2 {
        return Err(AuditError::Incomplete("both key generations must be published".into()));
    }

    let mut transcript: Option<CodegenTranscript> = None;
    for entry in board.read_all(Some(EntryKind::CodegenStep)) {
        let step: CodegenStep = entry.decode(group)?;
        match (step, transcript.as_mut()) {
            (CodegenStep::Start { voters, lambda }, None) => {
                transcript = Some(CodegenTranscript { voters, lambda, shuffles: Vec::new(), records: Vec::new() })
            }
            (CodegenStep::Shuffle(s), Some(t)) if t.records.is_empty() => t.shuffles.push(s),
            (CodegenStep::Mix(m), Some(t)) => t.records.push(m),
            _ => return Err(AuditError::Invalid { seq: entry.seq, reason: "unexpected code generation step".into() }),
        }
    }
    let transcript = transcript.ok_or_else(|| AuditError::Incomplete("no code generation".into()))?;
    verify_codegen(&transcript, &enc, &keys, public.election_key.tellers)?;
    report.voters = transcript.voters.len();

    let rows: Vec<CodeTableRow> = board.decode_all(EntryKind::CodeTable, group)?;
    let fins: Vec<FinPublic> = rows
        .iter()
        .map(|r| FinPublic {
            voter_id: r.voter_id.clone(),
            fin_commitment: r.fin_commitment.clone(),
            conf_ciphertext: r.conf_ciphertext.clone(),
        })
        .collect();
    if public_table(&transcript, &fins, public.k)? != rows {
        return Err(AuditError::Incomplete("code tables do not match the generated records".into()));
    }
    let tables: BTreeMap<&str, &CodeTableRow> = rows.iter().map(|r| (r.voter_id.as_str(), r)).collect();

    let mut sessions: BTreeMap<String, Session> = BTreeMap::new();
    let mut ballot_box = Vec::new();
    for entry in entries.iter().filter(|e| phase(e.kind) == 4) {
        let invalid = |reason: String| AuditError::Invalid { seq: entry.seq, reason };
        match entry.kind {
            EntryKind::Ballot => {
                let ballot: Ballot = entry.decode(group)?;
                if !tables.contains_key(ballot.voter_id.as_str()) || sessions.contains_key(&ballot.voter_id) {
                    return Err(invalid(format!("unexpected ballot of {}", ballot.voter_id)));
                }
                let context = public.ballot_context(&ballot.voter_id);
                if !verify_plaintext_knowledge(&public.election_key.public_key, &ballot.w, &ballot.pok, &context) {
                    return Err(invalid("ballot proof rejected".into()));
                }
                report.ballots += 1;
                sessions.insert(ballot.voter_id, Session::Submitted(ballot.w));
            }
            EntryKind::Pet => {
                let record: PetRecord = entry.decode(group)?;
                let Some(Session::Submitted(w)) = sessions.get(&record.voter_id) else {
                    return Err(invalid(format!("PET without a pending ballot for {}", record.voter_id)));
                };
                if record.btilde_teller == 0 || record.btilde_teller > public.election_key.tellers {
                    return Err(invalid("unknown teller decrypted the flip vector".into()));
                }
                if !verify_pet(&record.transcript, &record.e_star, w, &public.election_key) {
                    return Err(invalid(format!("PET transcript of {} rejected", record.voter_id)));
                }
                let next = if record.transcript.verdict {
                    Session::AwaitingShares(w.clone(), record.c_star)
                } else {
                    report.cancelled += 1;
                    Session::Cancelled
                };
                sessions.insert(record.voter_id, next);
            }
            EntryKind::Shares => {
                let record: SharesRecord = entry.decode(group)?;
                let Some(Session::AwaitingShares(w, c_star)) = sessions.get(&record.voter_id) else {
                    return Err(invalid(format!("code shares without a passed PET for {}", record.voter_id)));
                };
                let product = combine_verified(&public.code_key, &record.shares, c_star)
                    .map_err(|e| invalid(format!("code shares: {e}")))?;
                let decodes = enc.codes.decode_codes(&product).is_ok();
                if decodes == record.alarm.is_some() {
                    return Err(invalid("alarm flag contradicts the decrypted codes".into()));
                }
                let next = if decodes {
                    Session::CodesSent(w.clone())
                } else {
                    report.alarms += 1;
                    report.cancelled += 1;
                    Session::Cancelled
                };
                sessions.insert(record.voter_id, next);
            }
            EntryKind::Finalization => {
                let record: Finalization = entry.decode(group)?;
                let Some(Session::CodesSent(w)) = sessions.get(&record.voter_id) else {
                    return Err(invalid(format!("finalization of {} in the wrong state", record.voter_id)));
                };
                let row = tables[record.voter_id.as_str()];
                if !open_fin_commitment(&row.fin_commitment, &record.voter_id, &record.finalization_code) {
                    return Err(invalid("finalization code does not open the commitment".into()));
                }
                let conf = combine_verified(&public.code_key, &record.conf_shares, &row.conf_ciphertext)
                    .map_err(|e| invalid(format!("confirmation shares: {e}")))?;
                if printing_decode(&conf).is_none() {
                    return Err(invalid("confirmation code out of range".into()));
                }
                ballot_box.push(w.clone());
                report.finalized += 1;
                sessions.insert(record.voter_id, Session::Finalized);
            }
            _ => unreachable!("filtered to the voting phase"),
        }
    }
    if let Some((voter, _)) =
        sessions.iter().find(|(_, s)| matches!(s, Session::Submitted(_) | Session::AwaitingShares(..)))
    {
        return Err(AuditError::Incomplete(format!("session of {voter} stops mid-cast")));
    }

    let tallies: Vec<&BoardEntry> = board.read_all(Some(EntryKind::Tally)).collect();
    if let Some(entry) = tallies.first() {
        let invalid = |reason: String| AuditError::Invalid { seq: entry.seq, reason };
        if tallies.len() > 1 {
            return Err(invalid("more than one tally".into()));
        }
        let result: TallyResult = entry.decode(group)?;
        if result.decryptions.iter().map(|d| &d.ciphertext).ne(ballot_box.iter()) {
            return Err(invalid("tally does not cover exactly the finalized ballots".into()));
        }
        let mut counts = vec![0u64; public.k];
        let mut rejected = 0;
        for d in &result.decryptions {
            let m = combine_verified(&public.election_key, &d.shares, &d.ciphertext)
                .map_err(|e| invalid(format!("tally shares: {e}")))?;
            let choices = enc.options.decode_choice(&m).ok();
            if choices != d.choices {
                return Err(invalid("published choices differ from the decryption".into()));
            }
            match choices {
                Some(v) => v.iter().zip(&mut counts).filter(|(&b, _)| b).for_each(|(_, n)| *n += 1),
                None => rejected += 1,
            }
        }
        if counts != result.counts || rejected != result.rejected {
            return Err(invalid("published counts differ from the decryptions".into()));
        }
        report.counts = Some(counts);
        report.rejected = Some(rejected);
    }
    Ok(report)
}
