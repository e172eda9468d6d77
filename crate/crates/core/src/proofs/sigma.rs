//! Non-interactive sigma protocols: Schnorr, Chaum–Pedersen (equality of
//! discrete logarithms) and its disjunctive composition.

use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use crate::elgamal::Ciphertext;
use crate::group::{GroupElement, Scalar};
use crate::transcript::Transcript;

const PLAINTEXT_DOMAIN: &str = "petcode/plaintext-knowledge";

/// Proof of knowledge of the randomness `r` behind `c = (g^r, m·pk^r)`,
/// which is equivalent to knowing the plaintext.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchnorrProof {
    pub commitment: GroupElement,
    pub challenge: Scalar,
    pub response: Scalar,
}

fn plaintext_challenge(pk: &GroupElement, c: &Ciphertext, commitment: &GroupElement, context: &[u8]) -> Scalar {
    let mut t = Transcript::new(PLAINTEXT_DOMAIN);
    t.append_bytes(b"context", context);
    t.append_element(b"pk", pk);
    t.append_element(b"a", &c.a);
    t.append_element(b"b", &c.b);
    t.append_element(b"commitment", commitment);
    t.challenge(pk.group())
}

pub fn prove_plaintext_knowledge<R: RngCore + CryptoRng>(
    pk: &GroupElement,
    c: &Ciphertext,
    r: &Scalar,
    context: &[u8],
    rng: &mut R,
) -> SchnorrProof {
    let group = pk.group();
    let k = group.random_scalar(rng);
    let commitment = group.generator().pow(&k);
    let challenge = plaintext_challenge(pk, c, &commitment, context);
    let response = &k + &(&challenge * r);
    SchnorrProof { commitment, challenge, response }
}

pub fn verify_plaintext_knowledge(pk: &GroupElement, c: &Ciphertext, proof: &SchnorrProof, context: &[u8]) -> bool {
    let group = pk.group();
    if proof.challenge != plaintext_challenge(pk, c, &proof.commitment, context) {
        return false;
    }
    group.generator().pow(&proof.response) == &proof.commitment * &c.a.pow(&proof.challenge)
}

/// One `(base, value)` pair of a statement `value = base^x`; every pair of a
/// statement shares the same `x`.
pub type Relation = (GroupElement, GroupElement);

fn absorb_statement(t: &mut Transcript, relations: &[Relation]) {
    t.append_u64(b"relations", relations.len() as u64);
    for (base, value) in relations {
        t.append_element(b"base", base);
        t.append_element(b"value", value);
    }
}

/// Chaum–Pedersen proof that all `value_i = base_i^x` for one secret `x`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EqDlogProof {
    pub commitments: Vec<GroupElement>,
    pub challenge: Scalar,
    pub response: Scalar,
}

impl EqDlogProof {
    fn challenge_for(domain: &str, context: &[u8], relations: &[Relation], commitments: &[GroupElement]) -> Scalar {
        let mut t = Transcript::new(domain);
        t.append_bytes(b"context", context);
        absorb_statement(&mut t, relations);
        t.append_elements(b"commitment", commitments);
        t.challenge(relations[0].0.group())
    }

    /// Panics if `relations` is empty.
    pub fn prove<R: RngCore + CryptoRng>(
        domain: &str,
        context: &[u8],
        relations: &[Relation],
        witness: &Scalar,
        rng: &mut R,
    ) -> Self {
        assert!(!relations.is_empty(), "empty statement");
        let k = witness.group().random_scalar(rng);
        let commitments: Vec<_> = relations.iter().map(|(base, _)| base.pow(&k)).collect();
        let challenge = Self::challenge_for(domain, context, relations, &commitments);
        let response = &k + &(&challenge * witness);
        EqDlogProof { commitments, challenge, response }
    }

    pub fn verify(&self, domain: &str, context: &[u8], relations: &[Relation]) -> bool {
        if relations.is_empty() || self.commitments.len() != relations.len() {
            return false;
        }
        if self.challenge != Self::challenge_for(domain, context, relations, &self.commitments) {
            return false;
        }
        check_relations(relations, &self.commitments, &self.challenge, &self.response)
    }
}

fn check_relations(
    relations: &[Relation],
    commitments: &[GroupElement],
    challenge: &Scalar,
    response: &Scalar,
) -> bool {
    relations.iter().zip(commitments).all(|((base, value), t)| base.pow(response) == t * &value.pow(challenge))
}

/// A branch of a disjunction: a conjunction of statements, each with its own
/// witness.
pub type Branch = Vec<Vec<Relation>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrBranch {
    pub commitments: Vec<Vec<GroupElement>>,
    pub challenge: Scalar,
    pub responses: Vec<Scalar>,
}

/// Disjunctive proof that at least one branch holds. Branch challenges sum to
/// the hash challenge modulo `q`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrProof {
    pub branches: Vec<OrBranch>,
}

impl OrProof {
    fn master_challenge(domain: &str, context: &[u8], branches: &[Branch], proof: &[OrBranch]) -> Option<Scalar> {
        let group = branches.first()?.first()?.first()?.0.group().clone();
        let mut t = Transcript::new(domain);
        t.append_bytes(b"context", context);
        t.append_u64(b"branches", branches.len() as u64);
        for (branch, b) in branches.iter().zip(proof) {
            t.append_u64(b"statements", branch.len() as u64);
            for (statement, commitments) in branch.iter().zip(&b.commitments) {
                absorb_statement(&mut t, statement);
                t.append_elements(b"commitment", commitments);
            }
        }
        Some(t.challenge(&group))
    }

    /// `witnesses[s]` is the secret of statement `s` in branch `real`.
    /// Panics on shape mismatches, which are programming errors.
    pub fn prove<R: RngCore + CryptoRng>(
        domain: &str,
        context: &[u8],
        branches: &[Branch],
        real: usize,
        witnesses: &[Scalar],
        rng: &mut R,
    ) -> Self {
        assert_eq!(branches[real].len(), witnesses.len(), "one witness per statement");
        let group = witnesses[0].group().clone();
        let mut nonces = Vec::new();
        let mut proof: Vec<OrBranch> = branches
            .iter()
            .enumerate()
            .map(|(i, branch)| {
                if i == real {
                    nonces = branch.iter().map(|_| group.random_scalar(rng)).collect();
                    let commitments = branch
                        .iter()
                        .zip(&nonces)
                        .map(|(st, k)| st.iter().map(|(base, _)| base.pow(k)).collect())
                        .collect();
                    OrBranch { commitments, challenge: group.zero(), responses: Vec::new() }
                } else {
                    let challenge = group.random_scalar(rng);
                    let responses: Vec<Scalar> = branch.iter().map(|_| group.random_scalar(rng)).collect();
                    let commitments = branch
                        .iter()
                        .zip(&responses)
                        .map(|(st, s)| st.iter().map(|(base, value)| &base.pow(s) / &value.pow(&challenge)).collect())
                        .collect();
                    OrBranch { commitments, challenge, responses }
                }
            })
            .collect();
        let master = Self::master_challenge(domain, context, branches, &proof).expect("non-empty statement");
        let others =
            proof.iter().enumerate().filter(|(i, _)| *i != real).fold(group.zero(), |acc, (_, b)| &acc + &b.challenge);
        let challenge = &master - &others;
        proof[real].responses = nonces.iter().zip(witnesses).map(|(k, x)| k + &(&challenge * x)).collect();
        proof[real].challenge = challenge;
        OrProof { branches: proof }
    }

    pub fn verify(&self, domain: &str, context: &[u8], branches: &[Branch]) -> bool {
        if self.branches.len() != branches.len() {
            return false;
        }
        for (branch, b) in branches.iter().zip(&self.branches) {
            if branch.is_empty() || b.commitments.len() != branch.len() || b.responses.len() != branch.len() {
                return false;
            }
            for (statement, commitments) in branch.iter().zip(&b.commitments) {
                if statement.is_empty() || statement.len() != commitments.len() {
                    return false;
                }
            }
        }
        let Some(master) = Self::master_challenge(domain, context, branches, &self.branches) else {
            return false;
        };
        let sum = self.branches.iter().fold(master.group().zero(), |acc, b| &acc + &b.challenge);
        if sum != master {
            return false;
        }
        branches.iter().zip(&self.branches).all(|(branch, b)| {
            branch
                .iter()
                .zip(&b.commitments)
                .zip(&b.responses)
                .all(|((st, commitments), s)| check_relations(st, commitments, &b.challenge, s))
        })
    }

    /// Total number of branches, the unit of verification cost.
    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }
}
