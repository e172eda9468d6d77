//! Multiplicatively homomorphic ElGamal over `G`, its threshold variant, and
//! the Cramer–Shoup scheme used for the auxiliary key.

mod cca2;
mod threshold;

use std::ops::{Div, Mul};

use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::group::{GroupElement, GroupParams, Scalar};

pub use cca2::{
    bits_to_element, cca2_decrypt, cca2_encrypt, element_to_bits, CramerShoupCiphertext, CramerShoupPublicKey,
    CramerShoupSecretKey,
};
pub use threshold::combine_verified;
pub use threshold::{
    combine_shares, dkg, lagrange_at_zero, partial_decrypt, reconstruct_secret, verify_dkg, verify_share,
    DealerTranscript, DecryptionShare, DkgOutput, TellerKeyShare, ThresholdPublicKey, Trustee,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ElGamalError {
    #[error("invalid threshold {threshold} of {tellers} tellers")]
    InvalidThreshold { threshold: u32, tellers: u32 },
    #[error("need {needed} decryption shares, got {got}")]
    InsufficientShares { needed: u32, got: u32 },
    #[error("duplicate share from teller {0}")]
    DuplicateShare(u32),
    #[error("teller {0} is not part of this key")]
    UnknownTeller(u32),
    #[error("decryption share of teller {0} does not verify")]
    InvalidShare(u32),
    #[error("share dealt by teller {dealer} to teller {receiver} fails the Feldman check")]
    InconsistentDealing { dealer: u32, receiver: u32 },
    #[error("ciphertext integrity check failed")]
    Integrity,
}

/// `(a, b) = (g^r, m * h^r)`. Serializes as a two-element array of decimals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ciphertext {
    pub a: GroupElement,
    pub b: GroupElement,
}

impl Ciphertext {
    /// `(1, m)`, the encryption of `m` with randomness zero.
    pub fn trivial(m: &GroupElement) -> Self {
        Ciphertext { a: m.group().identity(), b: m.clone() }
    }

    pub fn group(&self) -> &GroupParams {
        self.a.group()
    }

    /// Component-wise exponentiation.
    pub fn pow(&self, z: &Scalar) -> Ciphertext {
        Ciphertext { a: self.a.pow(z), b: self.b.pow(z) }
    }

    pub fn elements(&self) -> [&GroupElement; 2] {
        [&self.a, &self.b]
    }
}

impl Mul for &Ciphertext {
    type Output = Ciphertext;

    fn mul(self, rhs: &Ciphertext) -> Ciphertext {
        homomorphic_mul(self, rhs)
    }
}

impl Div for &Ciphertext {
    type Output = Ciphertext;

    fn div(self, rhs: &Ciphertext) -> Ciphertext {
        Ciphertext { a: &self.a / &rhs.a, b: &self.b / &rhs.b }
    }
}

impl Serialize for Ciphertext {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        (&self.a, &self.b).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Ciphertext {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (a, b) = <(GroupElement, GroupElement)>::deserialize(d)?;
        Ok(Ciphertext { a, b })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyPair {
    pub sk: Scalar,
    pub pk: GroupElement,
}

impl KeyPair {
    pub fn from_secret(sk: Scalar) -> Self {
        let pk = sk.group().generator().pow(&sk);
        KeyPair { sk, pk }
    }
}

pub fn keygen<R: RngCore + CryptoRng>(group: &GroupParams, rng: &mut R) -> KeyPair {
    KeyPair::from_secret(group.random_scalar(rng))
}

pub fn encrypt(pk: &GroupElement, m: &GroupElement, r: &Scalar) -> Ciphertext {
    let g = pk.group().generator();
    Ciphertext { a: g.pow(r), b: m * &pk.pow(r) }
}

pub fn encrypt_random<R: RngCore + CryptoRng>(
    pk: &GroupElement,
    m: &GroupElement,
    rng: &mut R,
) -> (Ciphertext, Scalar) {
    let r = pk.group().random_scalar(rng);
    (encrypt(pk, m, &r), r)
}

pub fn decrypt(sk: &Scalar, c: &Ciphertext) -> GroupElement {
    &c.b / &c.a.pow(sk)
}

pub fn homomorphic_mul(c1: &Ciphertext, c2: &Ciphertext) -> Ciphertext {
    Ciphertext { a: &c1.a * &c2.a, b: &c1.b * &c2.b }
}

/// `(a * g^r, b * pk^r)`.
pub fn reencrypt(pk: &GroupElement, c: &Ciphertext, r: &Scalar) -> Ciphertext {
    let g = pk.group().generator();
    Ciphertext { a: &c.a * &g.pow(r), b: &c.b * &pk.pow(r) }
}
