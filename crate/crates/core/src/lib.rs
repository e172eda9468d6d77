//! Return codes for cast-as-intended verifiable remote voting, built on
//! threshold ElGamal and plaintext-equivalence tests.

pub mod board;
pub mod codegen;
pub mod elgamal;
pub mod encoding;
pub mod group;
pub mod metrics;
pub mod ot_attack;
pub mod proofs;
pub mod protocol;
pub mod rng;
pub mod serial;
pub mod transcript;
