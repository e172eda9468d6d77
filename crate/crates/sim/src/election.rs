//! Drives whole elections: setup, registration, casting, finalization and
//! tally, with every public artifact appended to the board.

use petcode_core::board::{
    publish_session, read_params, AuditError, Board, BoardError, CodegenStep, EntryKind, KeyRecord, KeyRole, PetRecord,
    SharesRecord,
};
use petcode_core::codegen::{
    generate_fin_conf, run_codegen, split_outputs, BallotSheet, CodeTableRow, CodegenError, FlipStrategy,
};
use petcode_core::elgamal::KeyPair;
use petcode_core::metrics::{self, Counters};
use petcode_core::proofs::PetTranscript;
use petcode_core::protocol::{
    build_ballot, setup_election, tally, voter_check_codes, xor, Ballot, Behaviour, CastSession, ElectionPublic,
    Finalization, ProtocolError, SessionState, SetupParams, TallyResult, Teller, Verdict, VotingServer,
};
use petcode_core::rng::{derive_rng, Rng};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, Delivery, ElectionConfig, TellerMode};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Codegen(#[from] CodegenError),
    #[error(transparent)]
    Board(#[from] BoardError),
    #[error(transparent)]
    Audit(#[from] AuditError),
    #[error("{0}")]
    State(String),
}

pub fn voter_ids(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("voter-{i}")).collect()
}

/// A platform rewriting the codes shown to the voter.
pub type Intercept<'a> = &'a mut dyn FnMut(&[u64]) -> Vec<u64>;

/// What a voting platform does with the voter's input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "option")]
pub enum Platform {
    Honest,
    /// Encrypts the opposite choice for this option and adjusts `b̃` so
    /// the PET passes.
    FlipOption(usize),
    /// Encrypts the opposite choice for this option but keeps the honest
    /// `b̃`, so the PET fails.
    Inconsistent(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoterPlan {
    pub choices: Vec<bool>,
    pub platform: Platform,
}

/// What happened to one voter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CastOutcome {
    pub voter_id: String,
    pub state: Option<SessionState>,
    /// Codes the voter was shown.
    pub received_codes: Vec<u64>,
    pub accepted: bool,
    pub confirmation: Option<u64>,
    pub confirmed: bool,
    /// Primitive invocations while the server processed the ballot.
    pub counters: Counters,
    /// Set when the cast aborted, e.g. on a teller's invalid proof.
    pub aborted: Option<String>,
}

/// Authorities after key generation, before code generation.
pub struct Authorities {
    pub config: ElectionConfig,
    pub public: ElectionPublic,
    pub tellers: Vec<Teller>,
    pub printing: KeyPair,
    pub board: Board,
}

pub fn setup(config: &ElectionConfig) -> Result<Authorities, HarnessError> {
    config.validate()?;
    let group = config.group_params()?;
    let mut rng = derive_rng(config.seed.as_bytes(), "setup", 0);
    let params = SetupParams {
        election_id: config.election_id.clone(),
        k: config.options,
        l: config.code_bits,
        m: config.code_space,
        mode: config.mode,
        tellers: config.tellers,
        threshold: config.threshold,
    };
    let s = setup_election(&group, &params, &mut rng)?;
    let mut tellers = s.tellers;
    for t in &mut tellers {
        if config.teller_mode == TellerMode::Active && config.is_corrupted_teller(t.index) {
            t.behaviour = Behaviour::BadProofs;
        }
    }
    let mut board = Board::new();
    board.append(EntryKind::Params, &s.public);
    board.append(EntryKind::Key, &KeyRecord { role: KeyRole::Election, dealings: s.election_dealings });
    board.append(EntryKind::Key, &KeyRecord { role: KeyRole::Code, dealings: s.code_dealings });
    Ok(Authorities { config: config.clone(), public: s.public, tellers, printing: s.printing, board })
}

impl Authorities {
    pub fn honest_flips(&self) -> Vec<FlipStrategy> {
        vec![FlipStrategy::Random; self.config.tellers as usize]
    }

    /// Code generation, printing and publication of the code tables.
    pub fn register(self, flips: &[FlipStrategy]) -> Result<Election, HarnessError> {
        let Authorities { config, public, tellers, printing, mut board } = self;
        let mut rng = derive_rng(config.seed.as_bytes(), "register", 0);
        let ids = voter_ids(config.voters);
        let enc = public.encodings()?;
        let keys = public.key_set();
        let fin: Vec<_> = ids.iter().map(|v| generate_fin_conf(v, &keys.code, &mut rng)).collect();
        let transcript = run_codegen(&ids, &enc, &keys, config.lambda, flips, &mut rng)?;
        board.append(
            EntryKind::CodegenStep,
            &CodegenStep::Start { voters: transcript.voters.clone(), lambda: transcript.lambda },
        );
        for s in &transcript.shuffles {
            board.append(EntryKind::CodegenStep, &CodegenStep::Shuffle(s.clone()));
        }
        for r in &transcript.records {
            board.append(EntryKind::CodegenStep, &CodegenStep::Mix(r.clone()));
        }
        let (table, sheets) = split_outputs(&transcript, &printing.sk, &fin, config.options)?;
        for row in &table {
            board.append(EntryKind::CodeTable, row);
        }
        Election::assemble(config, public, tellers, printing, sheets, board, table)
    }
}

/// A registered election ready for the voting phase.
pub struct Election {
    pub config: ElectionConfig,
    pub public: ElectionPublic,
    pub tellers: Vec<Teller>,
    pub printing: KeyPair,
    pub sheets: Vec<BallotSheet>,
    pub server: VotingServer,
    pub board: Board,
    rng: Rng,
}

impl Election {
    fn assemble(
        config: ElectionConfig,
        public: ElectionPublic,
        tellers: Vec<Teller>,
        printing: KeyPair,
        sheets: Vec<BallotSheet>,
        board: Board,
        table: Vec<CodeTableRow>,
    ) -> Result<Self, HarnessError> {
        let mut server = VotingServer::new(public.clone(), table)?;
        for s in &sheets {
            server.register(&s.voter_id, &s.auth_code);
        }
        let rng = derive_rng(config.seed.as_bytes(), "voting", board.len() as u64);
        Ok(Election { config, public, tellers, printing, sheets, server, board, rng })
    }

    /// Rebuilds the server state from the board, e.g. between CLI runs.
    pub fn restore(
        config: ElectionConfig,
        tellers: Vec<Teller>,
        printing: KeyPair,
        sheets: Vec<BallotSheet>,
        board: Board,
    ) -> Result<Self, HarnessError> {
        if !board.verify_chain() {
            return Err(HarnessError::Audit(AuditError::Chain));
        }
        let public = read_params(&board)?;
        let table = board.decode_all(EntryKind::CodeTable, &public.group)?;
        let sessions = restore_sessions(&board, &public)?;
        let mut election = Election::assemble(config, public, tellers, printing, sheets, board, table)?;
        for s in sessions {
            election.server.restore_session(s);
        }
        Ok(election)
    }

    pub fn voter_index(&self, voter_id: &str) -> Option<usize> {
        self.sheets.iter().position(|s| s.voter_id == voter_id)
    }

    pub fn cast(&mut self, voter: usize, choices: &[bool], platform: Platform) -> Result<CastOutcome, HarnessError> {
        self.cast_with(voter, choices, platform, None)
    }

    /// Runs one voter's cast end to end: submission and, if the voter accepts
    /// the codes, finalization.
    pub fn cast_with(
        &mut self,
        voter: usize,
        choices: &[bool],
        platform: Platform,
        intercept: Option<Intercept<'_>>,
    ) -> Result<CastOutcome, HarnessError> {
        let mut outcome = self.submit(voter, choices, platform, intercept)?;
        if outcome.accepted {
            let sheet = &self.sheets[voter];
            let (id, code, expected) =
                (sheet.voter_id.clone(), sheet.finalization_code.clone(), sheet.confirmation_code);
            let fin = self.finalize(&id, &code)?;
            outcome.state = Some(SessionState::Finalized);
            outcome.confirmation = Some(fin.confirmation_code);
            outcome.confirmed = fin.confirmation_code == expected;
        }
        Ok(outcome)
    }

    /// Builds the ballot on the platform, lets the server process it and
    /// checks the codes the voter sees against the sheet. With in-band
    /// delivery `intercept` stands for the platform rewriting the codes.
    pub fn submit(
        &mut self,
        voter: usize,
        choices: &[bool],
        platform: Platform,
        intercept: Option<Intercept<'_>>,
    ) -> Result<CastOutcome, HarnessError> {
        let sheet = self.sheets.get(voter).cloned().ok_or_else(|| HarnessError::State(format!("no voter {voter}")))?;
        if choices.len() != self.config.options {
            return Err(HarnessError::State(format!("expected {} choices", self.config.options)));
        }
        let flipped = |i: usize| {
            let mut v = choices.to_vec();
            v[i] = !v[i];
            v
        };
        let (encrypted, btilde) = match platform {
            Platform::Honest => (choices.to_vec(), xor(choices, &sheet.flip_bits)),
            Platform::FlipOption(i) => {
                let v = flipped(i);
                let btilde = xor(&v, &sheet.flip_bits);
                (v, btilde)
            }
            Platform::Inconsistent(i) => (flipped(i), xor(choices, &sheet.flip_bits)),
        };
        let enc = self.server.encodings().clone();
        let ballot = build_ballot(&self.public, &enc, &sheet.voter_id, &encrypted, &btilde, &mut self.rng)?;
        let before = metrics::snapshot();
        let session = self.server.process_ballot(&ballot, &sheet.auth_code, &self.tellers, &mut self.rng)?.clone();
        let counters = metrics::snapshot() - before;
        publish_session(&mut self.board, &session);

        let mut outcome = CastOutcome {
            voter_id: sheet.voter_id.clone(),
            state: Some(session.state),
            received_codes: Vec::new(),
            accepted: false,
            confirmation: None,
            confirmed: false,
            counters,
            aborted: None,
        };
        if session.state != SessionState::CodesSent {
            return Ok(outcome);
        }
        outcome.received_codes = match (self.config.delivery, intercept) {
            (Delivery::InBand, Some(f)) => f(&session.sent_codes),
            _ => session.sent_codes.clone(),
        };
        outcome.accepted = voter_check_codes(&sheet, choices, &outcome.received_codes) == Verdict::Accept;
        Ok(outcome)
    }

    pub fn finalize(&mut self, voter_id: &str, finalization_code: &str) -> Result<Finalization, HarnessError> {
        let fin = self.server.finalize(voter_id, finalization_code, &self.tellers, &mut self.rng)?;
        self.board.append(EntryKind::Finalization, &fin);
        Ok(fin)
    }

    pub fn tally(&mut self) -> Result<TallyResult, HarnessError> {
        let ballots: Vec<_> = self.server.ballot_box().iter().map(|b| b.w.clone()).collect();
        let result = tally(&self.public, self.server.encodings(), &ballots, &self.tellers, &mut self.rng)?;
        self.board.append(EntryKind::Tally, &result);
        Ok(result)
    }
}

/// Server sessions as recorded on the board, finalized ones last in the
/// order they were finalized. Return codes are not public,
/// so restored sessions carry none.
pub fn restore_sessions(board: &Board, public: &ElectionPublic) -> Result<Vec<CastSession>, HarnessError> {
    let group = &public.group;
    let mut sessions: Vec<CastSession> = Vec::new();
    let mut finalized = Vec::new();
    let find = |sessions: &mut Vec<CastSession>, voter: &str| -> Result<usize, HarnessError> {
        sessions
            .iter()
            .position(|s| s.voter_id == voter)
            .ok_or_else(|| HarnessError::State(format!("board entry for {voter} precedes the ballot")))
    };
    for entry in board.entries() {
        match entry.kind {
            EntryKind::Ballot => {
                let ballot: Ballot = entry.decode(group)?;
                sessions.push(CastSession {
                    voter_id: ballot.voter_id.clone(),
                    state: SessionState::Submitted,
                    e_star: ballot.w.clone(),
                    c_star: ballot.w.clone(),
                    ballot,
                    btilde_teller: 0,
                    pet: PetTranscript { steps: Vec::new(), shares: Vec::new(), verdict: false },
                    code_shares: Vec::new(),
                    sent_codes: Vec::new(),
                    alarm: None,
                });
            }
            EntryKind::Pet => {
                let r: PetRecord = entry.decode(group)?;
                let i = find(&mut sessions, &r.voter_id)?;
                let s = &mut sessions[i];
                s.state = if r.transcript.verdict { SessionState::PetChecked } else { SessionState::Cancelled };
                (s.btilde_teller, s.e_star, s.c_star, s.pet) = (r.btilde_teller, r.e_star, r.c_star, r.transcript);
            }
            EntryKind::Shares => {
                let r: SharesRecord = entry.decode(group)?;
                let i = find(&mut sessions, &r.voter_id)?;
                let s = &mut sessions[i];
                s.state = if r.alarm.is_some() { SessionState::Cancelled } else { SessionState::CodesSent };
                (s.code_shares, s.alarm) = (r.shares, r.alarm);
            }
            EntryKind::Finalization => {
                let r: Finalization = entry.decode(group)?;
                let i = find(&mut sessions, &r.voter_id)?;
                sessions[i].state = SessionState::Finalized;
                finalized.push(i);
            }
            _ => {}
        }
    }
    // The ballot box follows the order of finalization.
    let mut order: Vec<usize> = (0..sessions.len()).filter(|i| !finalized.contains(i)).collect();
    order.extend(finalized);
    let mut slots: Vec<Option<CastSession>> = sessions.into_iter().map(Some).collect();
    Ok(order.into_iter().filter_map(|i| slots[i].take()).collect())
}

/// Random honest choices for every voter, from the configured seed.
pub fn default_plans(config: &ElectionConfig) -> Vec<VoterPlan> {
    let mut rng = derive_rng(config.seed.as_bytes(), "choices", 0);
    (0..config.voters)
        .map(|_| VoterPlan { choices: (0..config.options).map(|_| rng.gen()).collect(), platform: Platform::Honest })
        .collect()
}

pub struct ElectionOutcome {
    pub election: Election,
    pub outcomes: Vec<CastOutcome>,
    pub tally: TallyResult,
}

impl ElectionOutcome {
    /// Counts of the intended choices of the voters whose ballots were finalized.
    pub fn intended_counts(&self, plans: &[VoterPlan]) -> Vec<u64> {
        let mut counts = vec![0u64; self.election.config.options];
        for (plan, outcome) in plans.iter().zip(&self.outcomes) {
            if outcome.state == Some(SessionState::Finalized) {
                plan.choices.iter().zip(&mut counts).filter(|(&v, _)| v).for_each(|(_, c)| *c += 1);
            }
        }
        counts
    }
}

/// Setup, registration, every voter's cast in order, then the tally.
pub fn run_election(config: &ElectionConfig, plans: &[VoterPlan]) -> Result<ElectionOutcome, HarnessError> {
    run_election_with_flips(config, plans, None)
}

pub fn run_election_with_flips(
    config: &ElectionConfig,
    plans: &[VoterPlan],
    flips: Option<&[FlipStrategy]>,
) -> Result<ElectionOutcome, HarnessError> {
    if plans.len() != config.voters {
        return Err(HarnessError::State(format!("{} plans for {} voters", plans.len(), config.voters)));
    }
    let authorities = setup(config)?;
    let flips = flips.map_or_else(|| authorities.honest_flips(), <[_]>::to_vec);
    let mut election = authorities.register(&flips)?;
    let mut outcomes = Vec::with_capacity(plans.len());
    for (i, plan) in plans.iter().enumerate() {
        let outcome = match election.cast(i, &plan.choices, plan.platform) {
            Ok(o) => o,
            Err(HarnessError::Protocol(e)) => CastOutcome {
                voter_id: election.sheets[i].voter_id.clone(),
                state: election.server.session(&election.sheets[i].voter_id).map(|s| s.state),
                received_codes: Vec::new(),
                accepted: false,
                confirmation: None,
                confirmed: false,
                counters: Counters::default(),
                aborted: Some(e.to_string()),
            },
            Err(e) => return Err(e),
        };
        outcomes.push(outcome);
    }
    let tally = election.tally()?;
    Ok(ElectionOutcome { election, outcomes, tally })
}
