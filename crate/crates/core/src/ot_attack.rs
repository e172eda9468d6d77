//! Minimal model of an oblivious-transfer return-code scheme for two
//! questions with two options each, and the ballot-malleability attack on it.
//!
//! Only the query, the response and code extraction are modelled. The
//! response carries, per question and option, the code masked with
//! `H(Γ(option)^α)`; the scheme's confirmation phase is left out.
//!
//! The voting platform sends `a_j = Γ(s_j) · y^{r_j}` and `b = g^{r_1 + r_2}`
//! with a proof of knowledge of `r = r_1 + r_2` for the ciphertext
//! `(b, a_1 · a_2)`. A cheating platform replaces `a_2` by
//! `Γ(s_1)^7 · Γ(s_2) · y^{r_2}`: the proof still verifies, the extracted codes
//! are unchanged, but the ballot plaintext `Γ(s_1)^8 · Γ(s_2)` is invalid and
//! only fails at tally time. The countermeasure adds `b_j = g^{r_j}` and, per
//! question, a disjunctive proof that `a_j` encrypts one of that question's
//! options.

use rand::{CryptoRng, Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::elgamal::{decrypt, keygen, Ciphertext, KeyPair};
use crate::encoding::{EncodingError, OptionEncoding};
use crate::group::{GroupElement, GroupParams, Scalar};
use crate::proofs::{prove_plaintext_knowledge, verify_plaintext_knowledge, Branch, OrProof, SchnorrProof};
use crate::transcript;

const QUERY_CONTEXT: &[u8] = b"petcode/ot-query";
const COMPONENT_DOMAIN: &str = "petcode/ot-component";
const MASK_DOMAIN: &str = "petcode/ot-mask";

pub type Mask = [u8; 32];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OtError {
    #[error("proof of knowledge rejected")]
    InvalidProof,
    #[error("query has {0} components")]
    Shape(usize),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
}

/// Extra material sent when the countermeasure is deployed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentProofs {
    /// `b_j = g^{r_j}`
    pub b_parts: Vec<GroupElement>,
    /// One proof per question, one branch per option.
    pub proofs: Vec<OrProof>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OtQuery {
    pub a: Vec<GroupElement>,
    pub b: GroupElement,
    pub pok: SchnorrProof,
    pub components: Option<ComponentProofs>,
}

impl OtQuery {
    /// The ciphertext `(b, a_1 · a_2)` counted as the cast ballot.
    pub fn ballot(&self) -> Ciphertext {
        let group = self.b.group();
        Ciphertext { a: self.b.clone(), b: self.a.iter().fold(group.identity(), |acc, a| &acc * a) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OtResponse {
    pub a_alpha: Vec<GroupElement>,
    pub y_alpha: GroupElement,
    /// `masked[j][s] = c_{j,s} ⊕ H(Γ(j, s)^α)`
    pub masked: Vec<Vec<Mask>>,
}

/// Public and secret state of the modelled scheme.
#[derive(Debug, Clone)]
pub struct OtScheme {
    pub questions: usize,
    pub options: usize,
    /// Γ over all `questions · options` choices.
    pub encoding: OptionEncoding,
    /// `y` and its secret, which stands in for the tally's decryption.
    pub election: KeyPair,
    /// `codes[j][s]`
    pub codes: Vec<Vec<u64>>,
}

fn mask(code: u64, key: &GroupElement) -> Mask {
    let pad = transcript::hash(MASK_DOMAIN, &key.to_bytes());
    let mut out = [0u8; 32];
    out[24..].copy_from_slice(&code.to_be_bytes());
    for (o, p) in out.iter_mut().zip(pad) {
        *o ^= p;
    }
    out
}

/// Inverse of the masking; `None` when the key was wrong and the padding
/// does not come out as zeros.
fn unmask(masked: &Mask, key: &GroupElement) -> Option<u64> {
    let plain = mask(0, key).iter().zip(masked).map(|(a, b)| a ^ b).collect::<Vec<u8>>();
    plain[..24].iter().all(|&x| x == 0).then(|| u64::from_be_bytes(plain[24..].try_into().expect("8 bytes")))
}

impl OtScheme {
    pub fn new<R: RngCore + CryptoRng>(group: &GroupParams, rng: &mut R) -> Result<Self, OtError> {
        let (questions, options) = (2, 2);
        let codes = (0..questions).map(|_| (0..options).map(|_| rng.gen_range(0..1 << 20)).collect()).collect();
        Ok(OtScheme {
            questions,
            options,
            encoding: OptionEncoding::new(group, questions * options)?,
            election: keygen(group, rng),
            codes,
        })
    }

    pub fn group(&self) -> &GroupParams {
        self.election.pk.group()
    }

    /// `Γ(j, s)` for 0-based question `j` and option `s`.
    pub fn gamma(&self, question: usize, option: usize) -> GroupElement {
        self.encoding.gamma(question * self.options + option + 1).expect("in range")
    }

    /// Statements "a_j encrypts Γ(j, s)" for every option `s`.
    fn component_branches(&self, question: usize, a: &GroupElement, b_part: &GroupElement) -> Vec<Branch> {
        let g = self.group().generator();
        (0..self.options)
            .map(|s| vec![vec![(g.clone(), b_part.clone()), (self.election.pk.clone(), a / &self.gamma(question, s))]])
            .collect()
    }

    fn component_context(question: usize) -> Vec<u8> {
        (question as u64).to_be_bytes().to_vec()
    }

    /// Builds a query from arbitrary components `a_j = plaintexts[j] · y^{r_j}`.
    /// `claimed[j]` is the option the prover pretends `a_j` encrypts when it
    /// attaches component proofs.
    fn query<R: RngCore + CryptoRng>(
        &self,
        plaintexts: &[GroupElement],
        claimed: &[usize],
        with_proofs: bool,
        rng: &mut R,
    ) -> (OtQuery, Vec<Scalar>) {
        let group = self.group();
        let g = group.generator();
        let y = &self.election.pk;
        let r: Vec<Scalar> = plaintexts.iter().map(|_| group.random_scalar(rng)).collect();
        let a: Vec<GroupElement> = plaintexts.iter().zip(&r).map(|(p, r)| p * &y.pow(r)).collect();
        let r_sum = r.iter().fold(group.zero(), |acc, x| &acc + x);
        let b = g.pow(&r_sum);
        let ballot = Ciphertext { a: b.clone(), b: a.iter().fold(group.identity(), |acc, x| &acc * x) };
        let pok = prove_plaintext_knowledge(y, &ballot, &r_sum, QUERY_CONTEXT, rng);
        let components = with_proofs.then(|| {
            let b_parts: Vec<GroupElement> = r.iter().map(|r| g.pow(r)).collect();
            let proofs = (0..self.questions)
                .map(|j| {
                    let branches = self.component_branches(j, &a[j], &b_parts[j]);
                    OrProof::prove(
                        COMPONENT_DOMAIN,
                        &Self::component_context(j),
                        &branches,
                        claimed[j],
                        &[r[j].clone()],
                        rng,
                    )
                })
                .collect();
            ComponentProofs { b_parts, proofs }
        });
        (OtQuery { a, b, pok, components }, r)
    }

    /// The intended run: `a_j = Γ(j, s_j) · y^{r_j}`.
    pub fn honest_query<R: RngCore + CryptoRng>(
        &self,
        choices: &[usize],
        with_proofs: bool,
        rng: &mut R,
    ) -> (OtQuery, Vec<Scalar>) {
        let plaintexts: Vec<_> = choices.iter().enumerate().map(|(j, &s)| self.gamma(j, s)).collect();
        self.query(&plaintexts, choices, with_proofs, rng)
    }

    /// `ã_2 = Γ(s_1)^e · Γ(s_2) · y^{r_2}`; the attack uses `e = 7`.
    pub fn malicious_query<R: RngCore + CryptoRng>(
        &self,
        choices: &[usize],
        exponent: u64,
        with_proofs: bool,
        rng: &mut R,
    ) -> (OtQuery, Vec<Scalar>) {
        let g1 = self.gamma(0, choices[0]);
        let plaintexts = [g1.clone(), &g1.pow_u64(exponent) * &self.gamma(1, choices[1])];
        self.query(&plaintexts, choices, with_proofs, rng)
    }

    /// The scheme's own check: the proof of knowledge for `(b, a_1 · a_2)`.
    pub fn check_query(&self, query: &OtQuery) -> bool {
        query.a.len() == self.questions
            && verify_plaintext_knowledge(&self.election.pk, &query.ballot(), &query.pok, QUERY_CONTEXT)
    }

    /// Countermeasure: `b = ∏ b_j` and every `a_j` provably encrypts an option
    /// of question `j`. Returns the verdict and the number of proof branches
    /// checked.
    pub fn countermeasure_check(&self, query: &OtQuery) -> (bool, usize) {
        let Some(c) = &query.components else {
            return (false, 0);
        };
        if query.a.len() != self.questions || c.b_parts.len() != self.questions || c.proofs.len() != self.questions {
            return (false, 0);
        }
        let group = self.group();
        if c.b_parts.iter().fold(group.identity(), |acc, x| &acc * x) != query.b {
            return (false, 0);
        }
        let mut branches = 0;
        let ok = (0..self.questions).all(|j| {
            let statement = self.component_branches(j, &query.a[j], &c.b_parts[j]);
            branches += c.proofs[j].branch_count();
            c.proofs[j].verify(COMPONENT_DOMAIN, &Self::component_context(j), &statement)
        });
        (ok && self.check_query(query), branches)
    }

    /// Server side: checks the query and answers with exponent `α`.
    pub fn respond(&self, query: &OtQuery, alpha: &Scalar, countermeasure: bool) -> Result<OtResponse, OtError> {
        if query.a.len() != self.questions {
            return Err(OtError::Shape(query.a.len()));
        }
        let accepted = if countermeasure { self.countermeasure_check(query).0 } else { self.check_query(query) };
        if !accepted {
            return Err(OtError::InvalidProof);
        }
        let masked = (0..self.questions)
            .map(|j| (0..self.options).map(|s| mask(self.codes[j][s], &self.gamma(j, s).pow(alpha))).collect())
            .collect();
        Ok(OtResponse {
            a_alpha: query.a.iter().map(|a| a.pow(alpha)).collect(),
            y_alpha: self.election.pk.pow(alpha),
            masked,
        })
    }

    /// `Γ(s_j)^α = a_j^α / (y^α)^{r_j}`
    fn unblind(response: &OtResponse, r: &[Scalar]) -> Vec<GroupElement> {
        response.a_alpha.iter().zip(r).map(|(a, r)| a / &response.y_alpha.pow(r)).collect()
    }

    fn read_codes(response: &OtResponse, keys: &[GroupElement], choices: &[usize]) -> Vec<Option<u64>> {
        keys.iter().zip(choices).enumerate().map(|(j, (key, &s))| unmask(&response.masked[j][s], key)).collect()
    }

    /// Honest extraction by a platform that knows `r_j`.
    pub fn extract_codes(response: &OtResponse, r: &[Scalar], choices: &[usize]) -> Vec<Option<u64>> {
        Self::read_codes(response, &Self::unblind(response, r), choices)
    }

    /// The cheating platform's extraction: `Γ(s_2)^α = second · first^{-e}`.
    pub fn malicious_extract(
        response: &OtResponse,
        r: &[Scalar],
        choices: &[usize],
        exponent: u64,
    ) -> Vec<Option<u64>> {
        let raw = Self::unblind(response, r);
        let keys = [raw[0].clone(), &raw[1] / &raw[0].pow_u64(exponent)];
        Self::read_codes(response, &keys, choices)
    }

    /// Tally-side view: decrypt the ballot and decode one choice per question.
    pub fn tally_decode(&self, query: &OtQuery) -> Option<Vec<usize>> {
        let m = decrypt(&self.election.sk, &query.ballot());
        let bits = self.encoding.decode_choice(&m).ok()?;
        bits.chunks(self.options)
            .map(|q| {
                let mut set = q.iter().enumerate().filter(|(_, &b)| b).map(|(s, _)| s);
                match (set.next(), set.next()) {
                    (Some(s), None) => Some(s),
                    _ => None,
                }
            })
            .collect()
    }

    pub fn expected_codes(&self, choices: &[usize]) -> Vec<Option<u64>> {
        choices.iter().enumerate().map(|(j, &s)| Some(self.codes[j][s])).collect()
    }
}

/// Everything the attack demonstration reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackReport {
    pub choices: Vec<usize>,
    pub honest_codes: Vec<Option<u64>>,
    pub honest_tally: Option<Vec<usize>>,
    pub malicious_passes_checks: bool,
    pub malicious_codes: Vec<Option<u64>>,
    pub voter_accepts: bool,
    pub malicious_tally: Option<Vec<usize>>,
    /// Scheme checks pass, the voter gets the expected codes, the tally rejects.
    pub attack_succeeds: bool,
    pub countermeasure_honest: Vec<(Vec<usize>, bool)>,
    pub countermeasure_malicious: bool,
    pub countermeasure_branches: usize,
}

pub fn attack_demo<R: RngCore + CryptoRng>(
    group: &GroupParams,
    choices: &[usize],
    rng: &mut R,
) -> Result<AttackReport, OtError> {
    let scheme = OtScheme::new(group, rng)?;
    let alpha = group.random_nonzero_scalar(rng);

    let (honest, r) = scheme.honest_query(choices, false, rng);
    let response = scheme.respond(&honest, &alpha, false)?;
    let honest_codes = OtScheme::extract_codes(&response, &r, choices);

    let (malicious, r) = scheme.malicious_query(choices, 7, false, rng);
    let malicious_passes_checks = scheme.check_query(&malicious);
    let response = scheme.respond(&malicious, &alpha, false)?;
    let malicious_codes = OtScheme::malicious_extract(&response, &r, choices, 7);
    let voter_accepts = malicious_codes == scheme.expected_codes(choices);
    let malicious_tally = scheme.tally_decode(&malicious);

    let mut countermeasure_honest = Vec::new();
    let mut countermeasure_branches = 0;
    for s1 in 0..scheme.options {
        for s2 in 0..scheme.options {
            let (q, _) = scheme.honest_query(&[s1, s2], true, rng);
            let (ok, branches) = scheme.countermeasure_check(&q);
            countermeasure_branches = branches;
            countermeasure_honest.push((vec![s1, s2], ok));
        }
    }
    let (q, _) = scheme.malicious_query(choices, 7, true, rng);
    let countermeasure_malicious = scheme.countermeasure_check(&q).0;

    Ok(AttackReport {
        choices: choices.to_vec(),
        honest_codes,
        honest_tally: scheme.tally_decode(&honest),
        malicious_passes_checks,
        attack_succeeds: malicious_passes_checks && voter_accepts && malicious_tally.is_none(),
        malicious_codes,
        voter_accepts,
        malicious_tally,
        countermeasure_honest,
        countermeasure_malicious,
        countermeasure_branches,
    })
}
