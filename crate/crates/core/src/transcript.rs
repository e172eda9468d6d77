//! Fiat–Shamir transcripts over SHA-256 with explicit domain separation.

use num_bigint::BigUint;
use sha2::{Digest, Sha256};

use crate::group::{GroupElement, GroupParams, Scalar};

/// Length-prefixed absorption of labelled items; the challenge is the digest
/// reduced modulo `q`.
#[derive(Clone)]
pub struct Transcript {
    hasher: Sha256,
}

impl Transcript {
    pub fn new(domain: &str) -> Self {
        let mut t = Transcript { hasher: Sha256::new() };
        t.append_bytes(b"domain", domain.as_bytes());
        t
    }

    pub fn append_bytes(&mut self, label: &[u8], bytes: &[u8]) {
        self.hasher.update((label.len() as u32).to_be_bytes());
        self.hasher.update(label);
        self.hasher.update((bytes.len() as u64).to_be_bytes());
        self.hasher.update(bytes);
    }

    pub fn append_element(&mut self, label: &[u8], element: &GroupElement) {
        self.append_bytes(label, &element.to_bytes());
    }

    pub fn append_elements<'a>(&mut self, label: &[u8], elements: impl IntoIterator<Item = &'a GroupElement>) {
        for e in elements {
            self.append_element(label, e);
        }
    }

    pub fn append_u64(&mut self, label: &[u8], value: u64) {
        self.append_bytes(label, &value.to_be_bytes());
    }

    pub fn digest(self) -> [u8; 32] {
        self.hasher.finalize().into()
    }

    pub fn challenge(self, group: &GroupParams) -> Scalar {
        group.scalar(BigUint::from_bytes_be(&self.digest()))
    }
}

/// Domain-separated SHA-256 of a byte string.
pub fn hash(domain: &str, bytes: &[u8]) -> [u8; 32] {
    let mut t = Transcript::new(domain);
    t.append_bytes(b"data", bytes);
    t.digest()
}
