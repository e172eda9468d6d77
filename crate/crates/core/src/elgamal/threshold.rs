//! Joint-Feldman key generation and verifiable t-of-n decryption.

use std::collections::BTreeSet;

use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use super::{Ciphertext, ElGamalError};
use crate::group::{GroupElement, GroupParams, Scalar};
use crate::metrics::{self, Primitive};
use crate::proofs::{self, EqDlogProof, PetStep};

const SHARE_DOMAIN: &str = "petcode/decryption-share";

/// Public side of a threshold key: the joint Feldman commitments
/// `C_j = g^{a_j}` of the shared polynomial, with `C_0` the public key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdPublicKey {
    pub public_key: GroupElement,
    pub commitments: Vec<GroupElement>,
    pub threshold: u32,
    pub tellers: u32,
}

impl ThresholdPublicKey {
    pub fn group(&self) -> &GroupParams {
        self.public_key.group()
    }

    /// `g^{share_i}` recomputed from the commitments: `prod_j C_j^(i^j)`.
    pub fn verification_key(&self, index: u32) -> GroupElement {
        feldman_eval(&self.commitments, index)
    }
}

fn feldman_eval(commitments: &[GroupElement], index: u32) -> GroupElement {
    let group = commitments[0].group();
    let x = group.scalar_u64(index as u64);
    let mut power = group.scalar_u64(1);
    let mut acc = group.identity();
    for c in commitments {
        acc = &acc * &c.pow(&power);
        power = &power * &x;
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TellerKeyShare {
    pub index: u32,
    pub share: Scalar,
    pub commitments: Vec<GroupElement>,
    pub public_key: GroupElement,
    pub threshold: u32,
    pub tellers: u32,
}

impl TellerKeyShare {
    /// Feldman check of the share against the joint commitments.
    pub fn is_consistent(&self) -> bool {
        self.public_key == self.commitments[0]
            && self.public_key.group().generator().pow(&self.share) == feldman_eval(&self.commitments, self.index)
    }

    pub fn public(&self) -> ThresholdPublicKey {
        ThresholdPublicKey {
            public_key: self.public_key.clone(),
            commitments: self.commitments.clone(),
            threshold: self.threshold,
            tellers: self.tellers,
        }
    }
}

/// What one dealer publishes during key generation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DealerTranscript {
    pub dealer: u32,
    pub commitments: Vec<GroupElement>,
}

#[derive(Debug, Clone)]
pub struct DkgOutput {
    pub public: ThresholdPublicKey,
    pub shares: Vec<TellerKeyShare>,
    pub transcripts: Vec<DealerTranscript>,
}

fn eval_poly(coefficients: &[Scalar], x: u32) -> Scalar {
    let group = coefficients[0].group();
    let x = group.scalar_u64(x as u64);
    coefficients.iter().rev().fold(group.zero(), |acc, a| &(&acc * &x) + a)
}

/// Every teller deals a Feldman VSS of a random secret; each teller's final
/// share is the sum of what it received, and the joint commitments are the
/// products of the dealt ones.
pub fn dkg<R: RngCore + CryptoRng>(
    group: &GroupParams,
    tellers: u32,
    threshold: u32,
    rng: &mut R,
) -> Result<DkgOutput, ElGamalError> {
    if threshold == 0 || threshold > tellers {
        return Err(ElGamalError::InvalidThreshold { threshold, tellers });
    }
    let g = group.generator();
    let mut transcripts = Vec::with_capacity(tellers as usize);
    let mut received = vec![group.zero(); tellers as usize];
    for dealer in 1..=tellers {
        let coefficients: Vec<Scalar> = (0..threshold).map(|_| group.random_scalar(rng)).collect();
        let commitments: Vec<GroupElement> = coefficients.iter().map(|a| g.pow(a)).collect();
        for receiver in 1..=tellers {
            let dealt = eval_poly(&coefficients, receiver);
            if g.pow(&dealt) != feldman_eval(&commitments, receiver) {
                return Err(ElGamalError::InconsistentDealing { dealer, receiver });
            }
            let slot = &mut received[receiver as usize - 1];
            *slot = &*slot + &dealt;
        }
        transcripts.push(DealerTranscript { dealer, commitments });
    }
    let commitments = joint_commitments(group, &transcripts, threshold);
    let public =
        ThresholdPublicKey { public_key: commitments[0].clone(), commitments: commitments.clone(), threshold, tellers };
    let shares = received
        .into_iter()
        .enumerate()
        .map(|(i, share)| TellerKeyShare {
            index: i as u32 + 1,
            share,
            commitments: commitments.clone(),
            public_key: public.public_key.clone(),
            threshold,
            tellers,
        })
        .collect();
    Ok(DkgOutput { public, shares, transcripts })
}

fn joint_commitments(group: &GroupParams, transcripts: &[DealerTranscript], threshold: u32) -> Vec<GroupElement> {
    (0..threshold as usize)
        .map(|j| transcripts.iter().fold(group.identity(), |acc, t| &acc * &t.commitments[j]))
        .collect()
}

/// Checks that the published joint key is the product of the dealers' commitments.
pub fn verify_dkg(transcripts: &[DealerTranscript], public: &ThresholdPublicKey) -> bool {
    let group = public.group();
    transcripts.len() == public.tellers as usize
        && transcripts
            .iter()
            .enumerate()
            .all(|(i, t)| t.dealer == i as u32 + 1 && t.commitments.len() == public.threshold as usize)
        && public.commitments.len() == public.threshold as usize
        && joint_commitments(group, transcripts, public.threshold) == public.commitments
        && public.public_key == public.commitments[0]
}

/// Lagrange coefficient at zero for `index` within the set `indices`, mod `q`.
pub fn lagrange_at_zero(group: &GroupParams, indices: &[u32], index: u32) -> Scalar {
    let mut num = group.scalar_u64(1);
    let mut den = group.scalar_u64(1);
    let i = group.scalar_u64(index as u64);
    for &j in indices.iter().filter(|&&j| j != index) {
        let j = group.scalar_u64(j as u64);
        num = &num * &j;
        den = &den * &(&j - &i);
    }
    &num * &den.inv().expect("indices are distinct and below q")
}

/// Interpolates the shared secret from at least `threshold` shares.
pub fn reconstruct_secret(shares: &[TellerKeyShare]) -> Result<Scalar, ElGamalError> {
    let first = shares.first().ok_or(ElGamalError::InsufficientShares { needed: 1, got: 0 })?;
    if (shares.len() as u32) < first.threshold {
        return Err(ElGamalError::InsufficientShares { needed: first.threshold, got: shares.len() as u32 });
    }
    let indices = distinct_indices(shares.iter().map(|s| s.index))?;
    let group = first.share.group();
    Ok(shares.iter().fold(group.zero(), |acc, s| &acc + &(&s.share * &lagrange_at_zero(group, &indices, s.index))))
}

fn distinct_indices(indices: impl Iterator<Item = u32>) -> Result<Vec<u32>, ElGamalError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for i in indices {
        if !seen.insert(i) {
            return Err(ElGamalError::DuplicateShare(i));
        }
        out.push(i);
    }
    Ok(out)
}

/// `value = a^share` with a Chaum–Pedersen proof that
/// `log_g(verification key) = log_a(value)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecryptionShare {
    pub index: u32,
    pub value: GroupElement,
    pub proof: EqDlogProof,
}

fn share_context(index: u32) -> Vec<u8> {
    index.to_be_bytes().to_vec()
}

pub fn partial_decrypt<R: RngCore + CryptoRng>(share: &TellerKeyShare, c: &Ciphertext, rng: &mut R) -> DecryptionShare {
    let group = share.share.group();
    let g = group.generator();
    let value = c.a.pow(&share.share);
    let vk = g.pow(&share.share);
    let proof = EqDlogProof::prove(
        SHARE_DOMAIN,
        &share_context(share.index),
        &[(g, vk), (c.a.clone(), value.clone())],
        &share.share,
        rng,
    );
    DecryptionShare { index: share.index, value, proof }
}

pub fn verify_share(key: &ThresholdPublicKey, c: &Ciphertext, share: &DecryptionShare) -> bool {
    if share.index == 0 || share.index > key.tellers {
        return false;
    }
    let g = key.group().generator();
    share.proof.verify(
        SHARE_DOMAIN,
        &share_context(share.index),
        &[(g, key.verification_key(share.index)), (c.a.clone(), share.value.clone())],
    )
}

/// Verifies every share and recovers the plaintext. Counts as one threshold
/// decryption.
pub fn combine_shares(
    key: &ThresholdPublicKey,
    shares: &[DecryptionShare],
    c: &Ciphertext,
) -> Result<GroupElement, ElGamalError> {
    metrics::record(Primitive::ThresholdDecrypt);
    combine_verified(key, shares, c)
}

/// [`combine_shares`] without touching the invocation counters; used where the
/// decryption is internal to a larger primitive such as a PET.
pub fn combine_verified(
    key: &ThresholdPublicKey,
    shares: &[DecryptionShare],
    c: &Ciphertext,
) -> Result<GroupElement, ElGamalError> {
    if (shares.len() as u32) < key.threshold {
        return Err(ElGamalError::InsufficientShares { needed: key.threshold, got: shares.len() as u32 });
    }
    let indices = distinct_indices(shares.iter().map(|s| s.index))?;
    for s in shares {
        if s.index == 0 || s.index > key.tellers {
            return Err(ElGamalError::UnknownTeller(s.index));
        }
        if !verify_share(key, c, s) {
            return Err(ElGamalError::InvalidShare(s.index));
        }
    }
    let group = key.group();
    let mask =
        shares.iter().fold(group.identity(), |acc, s| &acc * &s.value.pow(&lagrange_at_zero(group, &indices, s.index)));
    Ok(&c.b / &mask)
}

/// A party holding a key share. The default methods behave honestly;
/// simulated adversaries override them.
pub trait Trustee {
    fn index(&self) -> u32;

    fn decryption_share<R: RngCore + CryptoRng>(&self, c: &Ciphertext, rng: &mut R) -> DecryptionShare;

    fn pet_step<R: RngCore + CryptoRng>(&self, input: &Ciphertext, rng: &mut R) -> PetStep {
        proofs::pet_step(self.index(), input, rng)
    }
}

impl Trustee for TellerKeyShare {
    fn index(&self) -> u32 {
        self.index
    }

    fn decryption_share<R: RngCore + CryptoRng>(&self, c: &Ciphertext, rng: &mut R) -> DecryptionShare {
        partial_decrypt(self, c, rng)
    }
}
