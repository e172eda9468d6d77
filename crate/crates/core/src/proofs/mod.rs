//! Zero-knowledge proofs and the plaintext-equivalence test.

mod pet;
mod sigma;

pub use pet::{pet_run, pet_step, pet_step_with_exponent, verify_pet, verify_pet_step, PetStep, PetTranscript};
pub use sigma::{
    prove_plaintext_knowledge, verify_plaintext_knowledge, Branch, EqDlogProof, OrBranch, OrProof, Relation,
    SchnorrProof,
};

use crate::elgamal::ElGamalError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProofError {
    #[error("need at least {needed} tellers, got {got}")]
    TooFewTellers { needed: u32, got: u32 },
    #[error("teller {0} published an invalid proof")]
    Misbehaviour(u32),
    #[error("threshold decryption failed: {0}")]
    Decryption(ElGamalError),
}

impl ProofError {
    fn from_decryption(e: ElGamalError) -> Self {
        match e {
            ElGamalError::InvalidShare(i) | ElGamalError::UnknownTeller(i) => ProofError::Misbehaviour(i),
            other => ProofError::Decryption(other),
        }
    }
}
