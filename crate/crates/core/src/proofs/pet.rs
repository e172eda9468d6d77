//! Distributed plaintext-equivalence test.
//!
//! Each teller in turn raises the running quotient `c / c'` to a fresh secret
//! exponent and proves it did so consistently with a published commitment
//! `g^z`. The fully blinded quotient is then threshold-decrypted; it decrypts
//! to the identity exactly when the plaintexts agree.

use std::collections::BTreeSet;

use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use super::sigma::EqDlogProof;
use super::ProofError;
use crate::elgamal::{combine_verified, Ciphertext, DecryptionShare, ThresholdPublicKey, Trustee};
use crate::group::{GroupElement, Scalar};
use crate::metrics::{self, Primitive};

const PET_DOMAIN: &str = "petcode/pet-blinding";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PetStep {
    pub teller: u32,
    /// `g^z` for the teller's blinding exponent `z`.
    pub blinding_commitment: GroupElement,
    pub output: Ciphertext,
    pub proof: EqDlogProof,
}

fn step_relations(input: &Ciphertext, step: &PetStep) -> Vec<(GroupElement, GroupElement)> {
    let g = input.group().generator();
    vec![
        (g, step.blinding_commitment.clone()),
        (input.a.clone(), step.output.a.clone()),
        (input.b.clone(), step.output.b.clone()),
    ]
}

/// Honest blinding step with a fresh nonzero exponent.
pub fn pet_step<R: RngCore + CryptoRng>(teller: u32, input: &Ciphertext, rng: &mut R) -> PetStep {
    let z = input.group().random_nonzero_scalar(rng);
    pet_step_with_exponent(teller, input, &z, rng)
}

/// Blinding step with a given exponent; the proof still uses fresh
/// randomness.
pub fn pet_step_with_exponent<R: RngCore + CryptoRng>(
    teller: u32,
    input: &Ciphertext,
    z: &Scalar,
    rng: &mut R,
) -> PetStep {
    let group = input.group();
    let mut step = PetStep {
        teller,
        blinding_commitment: group.generator().pow(z),
        output: input.pow(z),
        proof: EqDlogProof { commitments: Vec::new(), challenge: group.zero(), response: group.zero() },
    };
    step.proof = EqDlogProof::prove(PET_DOMAIN, &teller.to_be_bytes(), &step_relations(input, &step), z, rng);
    step
}

/// A zero exponent would erase the quotient and force a positive verdict, so
/// the commitment must not be the identity.
pub fn verify_pet_step(input: &Ciphertext, step: &PetStep) -> bool {
    !step.blinding_commitment.is_identity()
        && step.proof.verify(PET_DOMAIN, &step.teller.to_be_bytes(), &step_relations(input, step))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PetTranscript {
    pub steps: Vec<PetStep>,
    pub shares: Vec<DecryptionShare>,
    pub verdict: bool,
}

impl PetTranscript {
    /// The fully blinded quotient that the shares decrypt.
    pub fn blinded(&self) -> Option<&Ciphertext> {
        self.steps.last().map(|s| &s.output)
    }
}

/// Runs the test with every listed teller blinding in order and every listed
/// teller contributing a decryption share. Counts as one PET.
pub fn pet_run<T: Trustee, R: RngCore + CryptoRng>(
    key: &ThresholdPublicKey,
    tellers: &[T],
    c: &Ciphertext,
    c_prime: &Ciphertext,
    rng: &mut R,
) -> Result<PetTranscript, ProofError> {
    metrics::record(Primitive::Pet);
    if (tellers.len() as u32) < key.threshold {
        return Err(ProofError::TooFewTellers { needed: key.threshold, got: tellers.len() as u32 });
    }
    let mut current = c / c_prime;
    let mut steps = Vec::with_capacity(tellers.len());
    for teller in tellers {
        let step = teller.pet_step(&current, rng);
        if step.teller != teller.index() || !verify_pet_step(&current, &step) {
            return Err(ProofError::Misbehaviour(teller.index()));
        }
        current = step.output.clone();
        steps.push(step);
    }
    let shares: Vec<_> = tellers.iter().map(|t| t.decryption_share(&current, rng)).collect();
    let plaintext = combine_verified(key, &shares, &current).map_err(ProofError::from_decryption)?;
    Ok(PetTranscript { steps, shares, verdict: plaintext.is_identity() })
}

/// Re-checks every blinding step, the threshold decryption and the verdict.
/// At least `threshold` distinct tellers must have blinded, so a single honest
/// teller among them keeps the quotient hidden.
pub fn verify_pet(transcript: &PetTranscript, c: &Ciphertext, c_prime: &Ciphertext, key: &ThresholdPublicKey) -> bool {
    let mut seen = BTreeSet::new();
    if (transcript.steps.len() as u32) < key.threshold {
        return false;
    }
    let mut current = c / c_prime;
    for step in &transcript.steps {
        if step.teller == 0 || step.teller > key.tellers || !seen.insert(step.teller) {
            return false;
        }
        if !verify_pet_step(&current, step) {
            return false;
        }
        current = step.output.clone();
    }
    match combine_verified(key, &transcript.shares, &current) {
        Ok(m) => m.is_identity() == transcript.verdict,
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elgamal::{dkg, encrypt, encrypt_random, partial_decrypt, TellerKeyShare};
    use crate::group::{GroupParams, Scalar};
    use crate::rng::seeded_rng;

    /// Blinds with a caller-chosen exponent, to enumerate all of them.
    struct FixedBlinder<'a> {
        share: &'a TellerKeyShare,
        z: Scalar,
    }

    impl Trustee for FixedBlinder<'_> {
        fn index(&self) -> u32 {
            self.share.index
        }

        fn decryption_share<R: RngCore + CryptoRng>(&self, c: &Ciphertext, rng: &mut R) -> DecryptionShare {
            partial_decrypt(self.share, c, rng)
        }

        fn pet_step<R: RngCore + CryptoRng>(&self, input: &Ciphertext, rng: &mut R) -> PetStep {
            let g = input.group().generator();
            let mut step = PetStep {
                teller: self.share.index,
                blinding_commitment: g.pow(&self.z),
                output: input.pow(&self.z),
                proof: EqDlogProof { commitments: vec![], challenge: self.z.clone(), response: self.z.clone() },
            };
            step.proof =
                EqDlogProof::prove(PET_DOMAIN, &step.teller.to_be_bytes(), &step_relations(input, &step), &self.z, rng);
            step
        }
    }

    #[test]
    fn equal_plaintexts_pass_and_unequal_fail() {
        let grp = GroupParams::generate(64, b"pet").unwrap();
        let mut rng = seeded_rng(b"pet");
        let out = dkg(&grp, 3, 2, &mut rng).unwrap();
        let pk = &out.public.public_key;
        let m = grp.generator().pow_u64(3);
        let (c1, _) = encrypt_random(pk, &m, &mut rng);
        let (c2, _) = encrypt_random(pk, &m, &mut rng);
        let t = pet_run(&out.public, &out.shares, &c1, &c2, &mut rng).unwrap();
        assert!(t.verdict);
        assert!(verify_pet(&t, &c1, &c2, &out.public));

        let (c3, _) = encrypt_random(pk, &grp.generator().pow_u64(4), &mut rng);
        let t = pet_run(&out.public, &out.shares, &c1, &c3, &mut rng).unwrap();
        assert!(!t.verdict);
        assert!(verify_pet(&t, &c1, &c3, &out.public));
        assert!(!verify_pet(&t, &c1, &c2, &out.public));

        let mut flipped = t.clone();
        flipped.verdict = true;
        assert!(!verify_pet(&flipped, &c1, &c3, &out.public));
        let mut short = t.clone();
        short.steps.truncate(1);
        assert!(!verify_pet(&short, &c1, &c3, &out.public));
        let mut mutated = t.clone();
        mutated.steps[1].output.b = &mutated.steps[1].output.b * &grp.generator();
        assert!(!verify_pet(&mutated, &c1, &c3, &out.public));
        let mut dup = t;
        dup.steps[1].teller = dup.steps[0].teller;
        assert!(!verify_pet(&dup, &c1, &c3, &out.public));
    }

    #[test]
    fn exhaustive_over_toy_blinding_exponents() {
        let grp = GroupParams::toy();
        let mut rng = seeded_rng(b"pet-toy");
        let out = dkg(&grp, 3, 2, &mut rng).unwrap();
        let pk = &out.public.public_key;
        let two = grp.element_u64(2).unwrap();
        let three = grp.element_u64(3).unwrap();
        let c_two = encrypt(pk, &two, &grp.scalar_u64(4));
        let c_two_again = encrypt(pk, &two, &grp.scalar_u64(9));
        let c_three = encrypt(pk, &three, &grp.scalar_u64(1));
        let mut blinded_plaintexts = BTreeSet::new();
        for z in 1..11u64 {
            let tellers: Vec<_> = out
                .shares
                .iter()
                .enumerate()
                .map(|(i, s)| FixedBlinder { share: s, z: grp.scalar_u64(if i == 0 { z } else { 1 }) })
                .collect();
            let same = pet_run(&out.public, &tellers, &c_two, &c_two_again, &mut rng).unwrap();
            assert!(same.verdict);
            let diff = pet_run(&out.public, &tellers, &c_two, &c_three, &mut rng).unwrap();
            assert!(!diff.verdict);
            let sk = crate::elgamal::reconstruct_secret(&out.shares).unwrap();
            blinded_plaintexts.insert(crate::elgamal::decrypt(&sk, diff.blinded().unwrap()));
        }
        // (2/3)^z ranges over every non-identity element as z ranges over 1..q.
        assert_eq!(blinded_plaintexts.len(), 10);
        assert!(!blinded_plaintexts.contains(&grp.identity()));
    }

    #[test]
    fn zero_blinding_is_rejected() {
        let grp = GroupParams::toy();
        let mut rng = seeded_rng(b"pet-zero");
        let out = dkg(&grp, 3, 2, &mut rng).unwrap();
        let pk = &out.public.public_key;
        let c1 = encrypt(pk, &grp.element_u64(2).unwrap(), &grp.scalar_u64(2));
        let c2 = encrypt(pk, &grp.element_u64(3).unwrap(), &grp.scalar_u64(2));
        let tellers: Vec<_> = out
            .shares
            .iter()
            .map(|s| FixedBlinder { share: s, z: grp.scalar_u64(if s.index == 2 { 0 } else { 5 }) })
            .collect();
        assert_eq!(pet_run(&out.public, &tellers, &c1, &c2, &mut rng), Err(ProofError::Misbehaviour(2)));
    }
}
