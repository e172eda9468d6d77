//! Parties of the voting phase: the voting platform builds ballots, the
//! voting server runs the cast with the tellers, the voter checks codes.

use std::collections::BTreeMap;

use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use crate::codegen::{
    open_fin_commitment, printing_decode, BallotSheet, CodeTableRow, CodegenError, Encodings, KeySet,
};
use crate::elgamal::{
    bits_to_element, cca2_decrypt, cca2_encrypt, combine_shares, dkg, element_to_bits, encrypt_random, homomorphic_mul,
    keygen, partial_decrypt, Ciphertext, CramerShoupCiphertext, CramerShoupPublicKey, CramerShoupSecretKey,
    DealerTranscript, DecryptionShare, ElGamalError, KeyPair, TellerKeyShare, ThresholdPublicKey, Trustee,
};
use crate::encoding::{CodeEncoding, CodeMode, EncodingError, OptionEncoding};
use crate::group::{GroupElement, GroupParams};
use crate::proofs::{
    self, pet_run, prove_plaintext_knowledge, verify_plaintext_knowledge, EqDlogProof, PetStep, PetTranscript,
    ProofError, SchnorrProof,
};
use crate::transcript;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProtocolError {
    #[error("voter {0} is not registered")]
    UnknownVoter(String),
    #[error("authentication failed for {0}")]
    Authentication(String),
    #[error("voter {0} already has a cast session; re-voting is not supported")]
    AlreadyCast(String),
    #[error("proof of plaintext knowledge rejected")]
    InvalidProof,
    #[error("encrypted flip vector rejected")]
    InvalidFlipVector,
    #[error("session of {voter} is {state:?}, expected {expected:?}")]
    WrongState { voter: String, state: SessionState, expected: SessionState },
    #[error("finalization code does not open the commitment")]
    BadFinalizationCode,
    #[error(transparent)]
    Teller(#[from] ProofError),
    #[error(transparent)]
    Decryption(#[from] ElGamalError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Codegen(#[from] CodegenError),
    #[error("invalid election parameters: {0}")]
    Config(String),
}

/// Public parameters and keys of one election.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElectionPublic {
    pub election_id: String,
    pub group: GroupParams,
    pub k: usize,
    pub l: usize,
    pub m: u64,
    pub mode: CodeMode,
    /// `pk_e`
    pub election_key: ThresholdPublicKey,
    /// `pk_c`
    pub code_key: ThresholdPublicKey,
    /// `pk_p`
    pub printing_key: GroupElement,
    /// `pk_a`
    pub auxiliary_key: CramerShoupPublicKey,
}

impl ElectionPublic {
    pub fn encodings(&self) -> Result<Encodings, ProtocolError> {
        Ok(Encodings::new(
            OptionEncoding::new(&self.group, self.k)?,
            CodeEncoding::new(&self.group, self.k, self.l, self.m, self.mode)?,
        )?)
    }

    pub fn key_set(&self) -> KeySet {
        KeySet {
            election: self.election_key.public_key.clone(),
            code: self.code_key.public_key.clone(),
            printing: self.printing_key.clone(),
        }
    }

    /// Binds proofs and the encrypted flip vector to this election and voter.
    pub fn ballot_context(&self, voter_id: &str) -> Vec<u8> {
        let mut t = transcript::Transcript::new("petcode/ballot-context");
        t.append_bytes(b"election", self.election_id.as_bytes());
        t.append_bytes(b"voter", voter_id.as_bytes());
        t.digest().to_vec()
    }
}

/// How a simulated teller behaves when asked for proofs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Behaviour {
    #[default]
    Honest,
    /// Publishes blinding steps and decryption shares with broken proofs.
    BadProofs,
}

/// Everything one teller holds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Teller {
    pub index: u32,
    pub election: TellerKeyShare,
    pub code: TellerKeyShare,
    /// The auxiliary secret is known to every teller.
    pub auxiliary: CramerShoupSecretKey,
    #[serde(default)]
    pub behaviour: Behaviour,
}

/// A teller acting with one of its key shares.
pub struct Acting<'a> {
    pub share: &'a TellerKeyShare,
    pub behaviour: Behaviour,
}

impl Trustee for Acting<'_> {
    fn index(&self) -> u32 {
        self.share.index
    }

    fn decryption_share<R: RngCore + CryptoRng>(&self, c: &Ciphertext, rng: &mut R) -> DecryptionShare {
        let mut share = partial_decrypt(self.share, c, rng);
        if self.behaviour == Behaviour::BadProofs {
            share.value = &share.value * &c.group().generator();
        }
        share
    }

    fn pet_step<R: RngCore + CryptoRng>(&self, input: &Ciphertext, rng: &mut R) -> PetStep {
        let mut step = proofs::pet_step(self.share.index, input, rng);
        if self.behaviour == Behaviour::BadProofs {
            // Claims a blinding it did not apply.
            step.output = input.clone();
            step.proof = EqDlogProof {
                commitments: step.proof.commitments,
                challenge: step.proof.response,
                response: step.proof.challenge,
            };
        }
        step
    }
}

pub fn election_trustees(tellers: &[Teller]) -> Vec<Acting<'_>> {
    tellers.iter().map(|t| Acting { share: &t.election, behaviour: t.behaviour }).collect()
}

pub fn code_trustees(tellers: &[Teller]) -> Vec<Acting<'_>> {
    tellers.iter().map(|t| Acting { share: &t.code, behaviour: t.behaviour }).collect()
}

/// Parameters of [`setup_election`].
#[derive(Debug, Clone)]
pub struct SetupParams {
    pub election_id: String,
    pub k: usize,
    pub l: usize,
    pub m: u64,
    pub mode: CodeMode,
    pub tellers: u32,
    pub threshold: u32,
}

/// Output of [`setup_election`].
#[derive(Debug, Clone)]
pub struct Setup {
    pub public: ElectionPublic,
    pub tellers: Vec<Teller>,
    pub printing: KeyPair,
    pub election_dealings: Vec<DealerTranscript>,
    pub code_dealings: Vec<DealerTranscript>,
}

/// Runs both key generations, the printing facility's key generation and the
/// dealing of the auxiliary key by teller 1.
pub fn setup_election<R: RngCore + CryptoRng>(
    group: &GroupParams,
    params: &SetupParams,
    rng: &mut R,
) -> Result<Setup, ProtocolError> {
    if params.k == 0 || num_bigint::BigUint::from(1u8) << params.k > *group.q() {
        return Err(ProtocolError::Config(format!("{} flip bits do not embed into this group", params.k)));
    }
    let election = dkg(group, params.tellers, params.threshold, rng)?;
    let code = dkg(group, params.tellers, params.threshold, rng)?;
    let printing = keygen(group, rng);
    let auxiliary = CramerShoupSecretKey::generate(group, rng);
    let public = ElectionPublic {
        election_id: params.election_id.clone(),
        group: group.clone(),
        k: params.k,
        l: params.l,
        m: params.m,
        mode: params.mode,
        election_key: election.public.clone(),
        code_key: code.public.clone(),
        printing_key: printing.pk.clone(),
        auxiliary_key: auxiliary.public.clone(),
    };
    public.encodings()?;
    let tellers = election
        .shares
        .into_iter()
        .zip(code.shares)
        .map(|(e, c)| Teller {
            index: e.index,
            election: e,
            code: c,
            auxiliary: auxiliary.clone(),
            behaviour: Behaviour::Honest,
        })
        .collect();
    Ok(Setup { public, tellers, printing, election_dealings: election.transcripts, code_dealings: code.transcripts })
}

/// `w = eenc(v)`, `aenc(b̃)` and a proof of knowledge of the plaintext of `w`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ballot {
    pub voter_id: String,
    pub w: Ciphertext,
    pub btilde: CramerShoupCiphertext,
    pub pok: SchnorrProof,
}

/// Encrypts an arbitrary choice vector with an arbitrary `b̃`. Honest
/// platforms use [`platform_build_ballot`]; cheating ones call this directly.
pub fn build_ballot<R: RngCore + CryptoRng>(
    public: &ElectionPublic,
    enc: &Encodings,
    voter_id: &str,
    choices: &[bool],
    btilde: &[bool],
    rng: &mut R,
) -> Result<Ballot, ProtocolError> {
    let v = enc.options.encode_choice(choices)?;
    build_ballot_for_plaintext(public, voter_id, &v, btilde, rng)
}

/// Like [`build_ballot`] but for any group element as plaintext.
pub fn build_ballot_for_plaintext<R: RngCore + CryptoRng>(
    public: &ElectionPublic,
    voter_id: &str,
    v: &GroupElement,
    btilde: &[bool],
    rng: &mut R,
) -> Result<Ballot, ProtocolError> {
    let context = public.ballot_context(voter_id);
    let (w, r) = encrypt_random(&public.election_key.public_key, v, rng);
    let pok = prove_plaintext_knowledge(&public.election_key.public_key, &w, &r, &context, rng);
    let packed = bits_to_element(&public.group, btilde).ok_or(ProtocolError::InvalidFlipVector)?;
    let btilde = cca2_encrypt(&public.auxiliary_key, &packed, &context, rng);
    Ok(Ballot { voter_id: voter_id.to_string(), w, btilde, pok })
}

pub fn xor(a: &[bool], b: &[bool]) -> Vec<bool> {
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}

/// Honest platform: encrypts `v` and sends `b̃ = b ⊕ v`.
pub fn platform_build_ballot<R: RngCore + CryptoRng>(
    public: &ElectionPublic,
    enc: &Encodings,
    voter_id: &str,
    v: &[bool],
    b: &[bool],
    rng: &mut R,
) -> Result<Ballot, ProtocolError> {
    if v.len() != public.k || b.len() != public.k {
        return Err(ProtocolError::Config(format!("expected {} choice and flip bits", public.k)));
    }
    build_ballot(public, enc, voter_id, v, &xor(v, b), rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SessionState {
    Submitted,
    PetChecked,
    CodesSent,
    Finalized,
    Cancelled,
}

/// Server-side record of one cast.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CastSession {
    pub voter_id: String,
    pub state: SessionState,
    pub ballot: Ballot,
    /// Teller that decrypted `b̃`.
    pub btilde_teller: u32,
    pub e_star: Ciphertext,
    pub c_star: Ciphertext,
    pub pet: PetTranscript,
    pub code_shares: Vec<DecryptionShare>,
    /// Sent to the voter only; never published.
    #[serde(skip)]
    pub sent_codes: Vec<u64>,
    /// Set when the decrypted code product does not decode.
    pub alarm: Option<String>,
}

/// Finalization outcome, with the shares of the confirmation code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finalization {
    pub voter_id: String,
    pub finalization_code: String,
    pub conf_shares: Vec<DecryptionShare>,
    #[serde(skip)]
    pub confirmation_code: u64,
}

/// The voting server's state: code tables, authentication digests, sessions
/// and the ballot box.
pub struct VotingServer {
    public: ElectionPublic,
    enc: Encodings,
    tables: BTreeMap<String, CodeTableRow>,
    auth: BTreeMap<String, String>,
    sessions: BTreeMap<String, CastSession>,
    ballot_box: Vec<Ballot>,
    /// Teller that decrypts `b̃` (1-based).
    pub designated_teller: u32,
}

fn auth_digest(voter_id: &str, auth_code: &str) -> String {
    let mut t = transcript::Transcript::new("petcode/auth");
    t.append_bytes(b"voter", voter_id.as_bytes());
    t.append_bytes(b"code", auth_code.as_bytes());
    hex::encode(t.digest())
}

impl VotingServer {
    pub fn new(public: ElectionPublic, table: Vec<CodeTableRow>) -> Result<Self, ProtocolError> {
        let enc = public.encodings()?;
        let tables = table.into_iter().map(|r| (r.voter_id.clone(), r)).collect();
        Ok(VotingServer {
            public,
            enc,
            tables,
            auth: BTreeMap::new(),
            sessions: BTreeMap::new(),
            ballot_box: Vec::new(),
            designated_teller: 1,
        })
    }

    /// Registers the authentication code delivered with a voter's sheet.
    pub fn register(&mut self, voter_id: &str, auth_code: &str) {
        self.auth.insert(voter_id.to_string(), auth_digest(voter_id, auth_code));
    }

    pub fn public(&self) -> &ElectionPublic {
        &self.public
    }

    pub fn encodings(&self) -> &Encodings {
        &self.enc
    }

    pub fn session(&self, voter_id: &str) -> Option<&CastSession> {
        self.sessions.get(voter_id)
    }

    pub fn sessions(&self) -> impl Iterator<Item = &CastSession> {
        self.sessions.values()
    }

    pub fn ballot_box(&self) -> &[Ballot] {
        &self.ballot_box
    }

    /// Restores a session read back from the board, e.g. between CLI runs.
    pub fn restore_session(&mut self, session: CastSession) {
        if session.state == SessionState::Finalized {
            self.ballot_box.push(session.ballot.clone());
        }
        self.sessions.insert(session.voter_id.clone(), session);
    }

    /// Checks the ballot, selects `u_i^{b̃_i}`, runs the PET of `e*` against
    /// `w` and, if it passes, threshold-decrypts `c*` into the return codes.
    /// Uses one PET, one CCA2 decryption and one threshold decryption.
    pub fn process_ballot<R: RngCore + CryptoRng>(
        &mut self,
        ballot: &Ballot,
        auth_code: &str,
        tellers: &[Teller],
        rng: &mut R,
    ) -> Result<&CastSession, ProtocolError> {
        let voter = &ballot.voter_id;
        let row = self.tables.get(voter).ok_or_else(|| ProtocolError::UnknownVoter(voter.clone()))?;
        if self.auth.get(voter) != Some(&auth_digest(voter, auth_code)) {
            return Err(ProtocolError::Authentication(voter.clone()));
        }
        if self.sessions.contains_key(voter) {
            return Err(ProtocolError::AlreadyCast(voter.clone()));
        }
        let context = self.public.ballot_context(voter);
        let pk_e = &self.public.election_key.public_key;
        if !verify_plaintext_knowledge(pk_e, &ballot.w, &ballot.pok, &context) {
            return Err(ProtocolError::InvalidProof);
        }
        let designated = tellers
            .iter()
            .find(|t| t.index == self.designated_teller)
            .ok_or_else(|| ProtocolError::Config("designated teller missing".into()))?;
        let packed = cca2_decrypt(&designated.auxiliary, &ballot.btilde, &context)
            .map_err(|_| ProtocolError::InvalidFlipVector)?;
        let btilde =
            element_to_bits(&self.public.group, &packed, self.public.k).ok_or(ProtocolError::InvalidFlipVector)?;

        let mut selected = row.cells.iter().zip(&btilde).map(|(cells, &bit)| &cells[bit as usize]);
        let first = selected.next().expect("k >= 1");
        let (e_star, c_star) = selected.fold((first.choice.clone(), first.code.clone()), |(e, c), cell| {
            (homomorphic_mul(&e, &cell.choice), homomorphic_mul(&c, &cell.code))
        });

        let pet = pet_run(&self.public.election_key, &election_trustees(tellers), &e_star, &ballot.w, rng)?;
        let mut session = CastSession {
            voter_id: voter.clone(),
            state: if pet.verdict { SessionState::PetChecked } else { SessionState::Cancelled },
            ballot: ballot.clone(),
            btilde_teller: designated.index,
            e_star,
            c_star,
            pet,
            code_shares: Vec::new(),
            sent_codes: Vec::new(),
            alarm: None,
        };
        if session.state == SessionState::PetChecked {
            let shares: Vec<_> =
                code_trustees(tellers).iter().map(|t| t.decryption_share(&session.c_star, rng)).collect();
            let product = combine_shares(&self.public.code_key, &shares, &session.c_star)?;
            session.code_shares = shares;
            match self.enc.codes.decode_codes(&product) {
                Ok(codes) => {
                    session.sent_codes = codes;
                    session.state = SessionState::CodesSent;
                }
                Err(e) => {
                    session.alarm = Some(e.to_string());
                    session.state = SessionState::Cancelled;
                }
            }
        }
        Ok(self.sessions.entry(voter.clone()).or_insert(session))
    }

    /// Checks the finalization code against `c_fin`, decrypts the
    /// confirmation code and moves the ballot into the ballot box.
    pub fn finalize<R: RngCore + CryptoRng>(
        &mut self,
        voter_id: &str,
        finalization_code: &str,
        tellers: &[Teller],
        rng: &mut R,
    ) -> Result<Finalization, ProtocolError> {
        let session = self.sessions.get_mut(voter_id).ok_or_else(|| ProtocolError::UnknownVoter(voter_id.into()))?;
        if session.state != SessionState::CodesSent {
            return Err(ProtocolError::WrongState {
                voter: voter_id.into(),
                state: session.state,
                expected: SessionState::CodesSent,
            });
        }
        let row = &self.tables[voter_id];
        if !open_fin_commitment(&row.fin_commitment, voter_id, finalization_code) {
            return Err(ProtocolError::BadFinalizationCode);
        }
        let shares: Vec<_> =
            code_trustees(tellers).iter().map(|t| t.decryption_share(&row.conf_ciphertext, rng)).collect();
        let conf = combine_shares(&self.public.code_key, &shares, &row.conf_ciphertext)?;
        let confirmation_code =
            printing_decode(&conf).ok_or_else(|| ProtocolError::Config("confirmation code out of range".into()))?;
        session.state = SessionState::Finalized;
        self.ballot_box.push(session.ballot.clone());
        Ok(Finalization {
            voter_id: voter_id.into(),
            finalization_code: finalization_code.into(),
            conf_shares: shares,
            confirmation_code,
        })
    }
}

/// What the voter sees and checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoterView {
    pub sheet: BallotSheet,
    pub choices: Vec<bool>,
    pub received_codes: Vec<u64>,
    pub received_confirmation: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject,
}

/// Accepts iff every received code is the one printed next to the chosen side.
pub fn voter_check_codes(sheet: &BallotSheet, choices: &[bool], codes: &[u64]) -> Verdict {
    let expected: Vec<u64> = choices.iter().enumerate().map(|(i, &v)| sheet.expected_code(i, v)).collect();
    if codes.len() == choices.len() && codes == expected.as_slice() {
        Verdict::Accept
    } else {
        Verdict::Reject
    }
}

impl VoterView {
    pub fn accepts(&self) -> bool {
        voter_check_codes(&self.sheet, &self.choices, &self.received_codes) == Verdict::Accept
            && self.received_confirmation == Some(self.sheet.confirmation_code)
    }
}

/// One ballot opened at tally time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TallyDecryption {
    pub ciphertext: Ciphertext,
    pub shares: Vec<DecryptionShare>,
    /// `None` when the plaintext is not a valid choice encoding.
    pub choices: Option<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TallyResult {
    pub counts: Vec<u64>,
    pub rejected: usize,
    pub decryptions: Vec<TallyDecryption>,
}

/// Stand-in tally: verifiable threshold decryption of every ballot, decoding
/// by trial division, and counting. Malformed plaintexts are rejected and
/// reported.
pub fn tally<R: RngCore + CryptoRng>(
    public: &ElectionPublic,
    enc: &Encodings,
    ballots: &[Ciphertext],
    tellers: &[Teller],
    rng: &mut R,
) -> Result<TallyResult, ProtocolError> {
    let mut counts = vec![0u64; public.k];
    let mut rejected = 0;
    let mut decryptions = Vec::with_capacity(ballots.len());
    for c in ballots {
        let shares: Vec<_> = election_trustees(tellers).iter().map(|t| t.decryption_share(c, rng)).collect();
        let m = combine_shares(&public.election_key, &shares, c)?;
        let choices = enc.options.decode_choice(&m).ok();
        match &choices {
            Some(v) => v.iter().zip(&mut counts).filter(|(&b, _)| b).for_each(|(_, n)| *n += 1),
            None => rejected += 1,
        }
        decryptions.push(TallyDecryption { ciphertext: c.clone(), shares, choices });
    }
    Ok(TallyResult { counts, rejected, decryptions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegen::{generate_fin_conf, run_codegen, split_outputs, FlipStrategy};
    use crate::elgamal::{decrypt, encrypt, reconstruct_secret};
    use crate::metrics;
    use crate::rng::seeded_rng;

    struct Election {
        public: ElectionPublic,
        enc: Encodings,
        tellers: Vec<Teller>,
        server: VotingServer,
        sheets: Vec<BallotSheet>,
    }

    fn election(k: usize, n: usize, seed: &[u8]) -> Election {
        let grp = GroupParams::generate(64, b"protocol").unwrap();
        let mut rng = seeded_rng(seed);
        let params = SetupParams {
            election_id: "test".into(),
            k,
            l: 5,
            m: 32,
            mode: CodeMode::Sparse,
            tellers: 3,
            threshold: 2,
        };
        let Setup { public, tellers, printing, .. } = setup_election(&grp, &params, &mut rng).unwrap();
        let enc = public.encodings().unwrap();
        let keys = public.key_set();
        let ids: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
        let fin: Vec<_> = ids.iter().map(|v| generate_fin_conf(v, &keys.code, &mut rng)).collect();
        let t = run_codegen(&ids, &enc, &keys, 2, &vec![FlipStrategy::Random; 3], &mut rng).unwrap();
        let (table, sheets) = split_outputs(&t, &printing.sk, &fin, k).unwrap();
        let mut server = VotingServer::new(public.clone(), table).unwrap();
        for s in &sheets {
            server.register(&s.voter_id, &s.auth_code);
        }
        Election { public, enc, tellers, server, sheets }
    }

    #[test]
    fn honest_cast_returns_the_chosen_codes_and_confirmation() {
        let mut e = election(2, 3, b"honest");
        let mut rng = seeded_rng(b"cast");
        let v = vec![true, false];
        let sheet = e.sheets[0].clone();
        let ballot = platform_build_ballot(&e.public, &e.enc, &sheet.voter_id, &v, &sheet.flip_bits, &mut rng).unwrap();
        let before = metrics::snapshot();
        let session = e.server.process_ballot(&ballot, &sheet.auth_code, &e.tellers, &mut rng).unwrap();
        let used = metrics::snapshot() - before;
        assert_eq!((used.pet, used.cca2_decrypt, used.threshold_decrypt), (1, 1, 1));
        assert_eq!(session.state, SessionState::CodesSent);
        let codes = session.sent_codes.clone();
        assert_eq!(voter_check_codes(&sheet, &v, &codes), Verdict::Accept);

        let sk_e = reconstruct_secret(&e.tellers.iter().map(|t| t.election.clone()).collect::<Vec<_>>()).unwrap();
        assert_eq!(decrypt(&sk_e, &session.e_star), decrypt(&sk_e, &ballot.w));

        assert_eq!(
            e.server.finalize(&sheet.voter_id, "WRONGWRONGWRONG2", &e.tellers, &mut rng),
            Err(ProtocolError::BadFinalizationCode)
        );
        let fin = e.server.finalize(&sheet.voter_id, &sheet.finalization_code, &e.tellers, &mut rng).unwrap();
        assert_eq!(fin.confirmation_code, sheet.confirmation_code);
        assert!(matches!(
            e.server.finalize(&sheet.voter_id, &sheet.finalization_code, &e.tellers, &mut rng),
            Err(ProtocolError::WrongState { .. })
        ));
        assert_eq!(e.server.ballot_box().len(), 1);
        assert!(matches!(
            e.server.process_ballot(&ballot, &sheet.auth_code, &e.tellers, &mut rng),
            Err(ProtocolError::AlreadyCast(_))
        ));
    }

    #[test]
    fn platform_examples() {
        let e = election(2, 1, b"platform");
        let mut rng = seeded_rng(b"platform-ballot");
        let sk_e = reconstruct_secret(&e.tellers.iter().map(|t| t.election.clone()).collect::<Vec<_>>()).unwrap();
        let ballot = platform_build_ballot(&e.public, &e.enc, "v0", &[true, false], &[true, true], &mut rng).unwrap();
        assert_eq!(decrypt(&sk_e, &ballot.w), e.enc.options.gamma(1).unwrap());
        let packed = cca2_decrypt(&e.tellers[0].auxiliary, &ballot.btilde, &e.public.ballot_context("v0")).unwrap();
        assert_eq!(element_to_bits(&e.public.group, &packed, 2).unwrap(), vec![false, true]);
        let ctx = e.public.ballot_context("v0");
        assert!(verify_plaintext_knowledge(&e.public.election_key.public_key, &ballot.w, &ballot.pok, &ctx));
        assert!(!verify_plaintext_knowledge(&e.public.election_key.public_key, &ballot.w, &ballot.pok, b"v1"));
    }

    #[test]
    fn cheating_platforms_are_caught_or_exposed() {
        let mut e = election(2, 3, b"cheat");
        let mut rng = seeded_rng(b"cheat-cast");
        let v = [true, false];
        let forged = [false, false];

        // Encrypts a different choice but keeps b̃ for the real one: PET fails.
        let s0 = e.sheets[0].clone();
        let b = build_ballot(&e.public, &e.enc, &s0.voter_id, &forged, &xor(&v, &s0.flip_bits), &mut rng).unwrap();
        let session = e.server.process_ballot(&b, &s0.auth_code, &e.tellers, &mut rng).unwrap();
        assert_eq!(session.state, SessionState::Cancelled);
        assert!(!session.pet.verdict);
        assert!(session.code_shares.is_empty());

        // Consistent b̃ for the forged choice: PET passes, codes betray it.
        let s1 = e.sheets[1].clone();
        let b = build_ballot(&e.public, &e.enc, &s1.voter_id, &forged, &xor(&forged, &s1.flip_bits), &mut rng).unwrap();
        let session = e.server.process_ballot(&b, &s1.auth_code, &e.tellers, &mut rng).unwrap();
        assert_eq!(session.state, SessionState::CodesSent);
        assert_eq!(voter_check_codes(&s1, &v, &session.sent_codes), Verdict::Reject);
        assert_eq!(voter_check_codes(&s1, &forged, &session.sent_codes), Verdict::Accept);

        // Bad authentication and bad proofs are rejected before any PET.
        let s2 = e.sheets[2].clone();
        let b = platform_build_ballot(&e.public, &e.enc, &s2.voter_id, &v, &s2.flip_bits, &mut rng).unwrap();
        assert!(matches!(
            e.server.process_ballot(&b, "nope", &e.tellers, &mut rng),
            Err(ProtocolError::Authentication(_))
        ));
        let mut bad = b.clone();
        bad.pok.response = &bad.pok.response + &e.public.group.scalar_u64(1);
        assert_eq!(
            e.server.process_ballot(&bad, &s2.auth_code, &e.tellers, &mut rng).err(),
            Some(ProtocolError::InvalidProof)
        );
        let mut moved = b.clone();
        moved.voter_id = s1.voter_id.clone();
        assert!(e.server.process_ballot(&moved, &s1.auth_code, &e.tellers, &mut rng).is_err());
    }

    #[test]
    fn misbehaving_teller_is_named() {
        let mut e = election(1, 1, b"bad-teller");
        e.tellers[1].behaviour = Behaviour::BadProofs;
        let mut rng = seeded_rng(b"bad-teller-cast");
        let s = e.sheets[0].clone();
        let b = platform_build_ballot(&e.public, &e.enc, &s.voter_id, &[true], &s.flip_bits, &mut rng).unwrap();
        assert_eq!(
            e.server.process_ballot(&b, &s.auth_code, &e.tellers, &mut rng).err(),
            Some(ProtocolError::Teller(ProofError::Misbehaviour(2)))
        );
    }

    #[test]
    fn tally_counts_and_rejects_malformed_plaintexts() {
        let e = election(2, 1, b"tally");
        let mut rng = seeded_rng(b"tally-run");
        let pk = &e.public.election_key.public_key;
        let r = e.public.group.scalar_u64(7);
        let mut ballots: Vec<Ciphertext> = [[true, false], [true, true], [false, false]]
            .iter()
            .map(|v| encrypt(pk, &e.enc.options.encode_choice(v).unwrap(), &r))
            .collect();
        let result = tally(&e.public, &e.enc, &ballots, &e.tellers, &mut rng).unwrap();
        assert_eq!(result.counts, vec![2, 1]);
        assert_eq!(result.rejected, 0);

        let empty = tally(&e.public, &e.enc, &[], &e.tellers, &mut rng).unwrap();
        assert_eq!(empty.counts, vec![0, 0]);

        let g1 = e.enc.options.gamma(1).unwrap();
        let g2 = e.enc.options.gamma(2).unwrap();
        let malformed = &g1.pow_u64(8) * &g2;
        ballots.push(encrypt(pk, &malformed, &r));
        let result = tally(&e.public, &e.enc, &ballots, &e.tellers, &mut rng).unwrap();
        assert_eq!(result.counts, vec![2, 1]);
        assert_eq!(result.rejected, 1);
        assert_eq!(result.decryptions[3].choices, None);
    }

    #[test]
    fn voter_rules() {
        let sheet = BallotSheet {
            voter_id: "x".into(),
            auth_code: String::new(),
            finalization_code: String::new(),
            confirmation_code: 5,
            flip_bits: vec![false, true],
            return_codes: vec![(1, 2), (3, 4)],
        };
        assert_eq!(voter_check_codes(&sheet, &[true, false], &[2, 3]), Verdict::Accept);
        assert_eq!(voter_check_codes(&sheet, &[true, false], &[2, 4]), Verdict::Reject);
        assert_eq!(voter_check_codes(&sheet, &[true, false], &[2]), Verdict::Reject);
        let view =
            VoterView { sheet, choices: vec![true, false], received_codes: vec![2, 3], received_confirmation: Some(5) };
        assert!(view.accepts());
    }
}
